//! Wavefront OBJ reading and writing.
//!
//! Only `v`, `vt`, `vn` and `f` records are interpreted; grouping, material
//! and smoothing records are skipped. Distinct `v/vt/vn` corners become
//! distinct vertices.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::path::Path;

use nalgebra::{Point3, Vector2, Vector3};

use super::mesh::{area_weighted_normals, TriangleMesh};
use super::GeometryError;

pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriangleMesh, GeometryError> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| GeometryError::Io {
        path: path.display().to_string(),
        source: e,
    })?;
    parse_obj(&text)
}

#[derive(Clone, Copy, PartialEq, Eq, Hash)]
struct Corner {
    v: usize,
    vt: usize,
    vn: Option<usize>,
}

fn malformed(line: usize, msg: impl Into<String>) -> GeometryError {
    GeometryError::Malformed {
        line,
        message: msg.into(),
    }
}

fn floats<const N: usize>(
    fields: &mut std::str::SplitWhitespace<'_>,
    line: usize,
) -> Result<[f64; N], GeometryError> {
    let mut out = [0.0; N];
    for slot in out.iter_mut() {
        let f = fields
            .next()
            .ok_or_else(|| malformed(line, format!("expected {N} numbers")))?;
        *slot = f
            .parse()
            .map_err(|_| malformed(line, format!("bad number '{f}'")))?;
    }
    Ok(out)
}

fn resolve(index: &str, count: usize, line: usize) -> Result<usize, GeometryError> {
    let i: i64 = index
        .parse()
        .map_err(|_| malformed(line, format!("bad index '{index}'")))?;
    let resolved = if i > 0 {
        i - 1
    } else if i < 0 {
        count as i64 + i
    } else {
        return Err(malformed(line, "index 0 is invalid"));
    };
    if resolved < 0 || resolved as usize >= count {
        return Err(malformed(line, format!("index {i} out of range ({count} entries)")));
    }
    Ok(resolved as usize)
}

pub fn parse_obj(text: &str) -> Result<TriangleMesh, GeometryError> {
    let mut positions: Vec<Point3<f64>> = Vec::new();
    let mut texcoords: Vec<Vector2<f64>> = Vec::new();
    let mut normals: Vec<Vector3<f64>> = Vec::new();
    let mut faces: Vec<(usize, Vec<Corner>)> = Vec::new();

    for (ln, raw) in text.lines().enumerate() {
        let line = ln + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        let mut fields = content.split_whitespace();
        let Some(tag) = fields.next() else { continue };
        match tag {
            "v" => {
                let [x, y, z] = floats::<3>(&mut fields, line)?;
                positions.push(Point3::new(x, y, z));
            }
            "vt" => {
                let [u, v] = floats::<2>(&mut fields, line)?;
                texcoords.push(Vector2::new(u, v));
            }
            "vn" => {
                let [x, y, z] = floats::<3>(&mut fields, line)?;
                let n = Vector3::new(x, y, z)
                    .try_normalize(1e-12)
                    .ok_or_else(|| malformed(line, "zero-length normal"))?;
                normals.push(n);
            }
            "f" => {
                let mut corners = Vec::new();
                for spec in fields {
                    let mut parts = spec.split('/');
                    let v = resolve(parts.next().unwrap_or(""), positions.len(), line)?;
                    let vt = match parts.next() {
                        Some(s) if !s.is_empty() => resolve(s, texcoords.len(), line)?,
                        _ => {
                            return Err(GeometryError::MissingUv(format!(
                                "face on line {line} has a corner without a texture coordinate"
                            )))
                        }
                    };
                    let vn = match parts.next() {
                        Some(s) if !s.is_empty() => Some(resolve(s, normals.len(), line)?),
                        _ => None,
                    };
                    corners.push(Corner { v, vt, vn });
                }
                if corners.len() < 3 {
                    return Err(malformed(line, "face with fewer than 3 corners"));
                }
                faces.push((line, corners));
            }
            _ => {}
        }
    }

    let mut mesh = TriangleMesh::default();
    let mut lookup: HashMap<Corner, u32> = HashMap::new();
    let mut group = Vec::new();
    let mut needs_normals = false;
    for (_, corners) in &faces {
        let ids: Vec<u32> = corners
            .iter()
            .map(|c| {
                *lookup.entry(*c).or_insert_with(|| {
                    mesh.positions.push(positions[c.v]);
                    mesh.uvs.push(texcoords[c.vt]);
                    mesh.normals.push(c.vn.map_or_else(Vector3::zeros, |i| normals[i]));
                    needs_normals |= c.vn.is_none();
                    group.push(c.v);
                    (mesh.positions.len() - 1) as u32
                })
            })
            .collect();
        for k in 1..ids.len() - 1 {
            mesh.triangles.push([ids[0], ids[k], ids[k + 1]]);
        }
    }

    if needs_normals {
        let computed = area_weighted_normals(
            &mesh.positions,
            &mesh.triangles,
            &group,
            positions.len(),
        );
        for (n, c) in mesh.normals.iter_mut().zip(computed) {
            if n.norm() == 0.0 {
                *n = c;
            }
        }
    }
    Ok(mesh)
}

/// Serializes a mesh with one `v/vt/vn` triple per vertex.
pub fn to_obj_string(mesh: &TriangleMesh) -> String {
    let mut s = String::new();
    for p in &mesh.positions {
        let _ = writeln!(s, "v {} {} {}", p.x, p.y, p.z);
    }
    for t in &mesh.uvs {
        let _ = writeln!(s, "vt {} {}", t.x, t.y);
    }
    for n in &mesh.normals {
        let _ = writeln!(s, "vn {} {} {}", n.x, n.y, n.z);
    }
    for tri in &mesh.triangles {
        let [a, b, c] = tri.map(|i| i + 1);
        let _ = writeln!(s, "f {a}/{a}/{a} {b}/{b}/{b} {c}/{c}/{c}");
    }
    s
}

pub fn save_mesh(mesh: &TriangleMesh, path: impl AsRef<Path>) -> Result<(), GeometryError> {
    let path = path.as_ref();
    std::fs::write(path, to_obj_string(mesh)).map_err(|e| GeometryError::Io {
        path: path.display().to_string(),
        source: e,
    })
}
