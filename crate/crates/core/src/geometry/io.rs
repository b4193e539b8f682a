//! OBJ (ASCII) and STL (ASCII and binary) readers.

use std::fs;
use std::path::{Path, PathBuf};

use crate::math::Vec3;

use super::{MeshError, TriangleMesh};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    Stl,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Option<MeshFormat> {
        match path.extension()?.to_str()?.to_ascii_lowercase().as_str() {
            "obj" => Some(MeshFormat::Obj),
            "stl" => Some(MeshFormat::Stl),
            _ => None,
        }
    }
}

/// Loads a mesh, picking the format from the file extension.
pub fn load_mesh_auto(path: &Path) -> Result<TriangleMesh, MeshError> {
    let format = MeshFormat::from_path(path).ok_or_else(|| MeshError::UnknownFormat(path.to_path_buf()))?;
    load_mesh(path, format)
}

pub fn load_mesh(path: &Path, format: MeshFormat) -> Result<TriangleMesh, MeshError> {
    let bytes = fs::read(path).map_err(|source| MeshError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let at = |e: MeshError| e.at(path);
    match format {
        MeshFormat::Obj => {
            let text = String::from_utf8_lossy(&bytes);
            parse_obj(&text).map_err(at)
        }
        MeshFormat::Stl => parse_stl(&bytes).map_err(at),
    }
}

fn parse_err(line: usize, msg: impl Into<String>) -> MeshError {
    MeshError::Parse {
        path: PathBuf::new(),
        line,
        message: msg.into(),
    }
}

fn parse_floats<'a>(
    mut it: impl Iterator<Item = &'a str>,
    line: usize,
    what: &str,
) -> Result<Vec3, MeshError> {
    let mut v = [0.0; 3];
    for c in v.iter_mut() {
        let tok = it
            .next()
            .ok_or_else(|| parse_err(line, format!("{what} needs 3 coordinates")))?;
        *c = tok
            .parse::<f64>()
            .map_err(|_| parse_err(line, format!("bad {what} coordinate {tok:?}")))?;
        if !c.is_finite() {
            return Err(parse_err(line, format!("non-finite {what} coordinate")));
        }
    }
    Ok(Vec3::from_array(v))
}

/// Resolves a 1-based (or negative, relative) OBJ index.
fn obj_index(tok: &str, count: usize, line: usize) -> Result<usize, MeshError> {
    let i: i64 = tok
        .parse()
        .map_err(|_| parse_err(line, format!("bad index {tok:?}")))?;
    let resolved = if i > 0 {
        i - 1
    } else if i < 0 {
        count as i64 + i
    } else {
        return Err(parse_err(line, "index 0 is invalid in OBJ"));
    };
    if resolved < 0 || resolved as usize >= count {
        return Err(parse_err(line, format!("index {i} out of range ({count} defined)")));
    }
    Ok(resolved as usize)
}

/// Parses ASCII OBJ. Polygons are fan-triangulated. Normals referenced by
/// faces are used when every vertex gets one, otherwise they are derived.
pub fn parse_obj(text: &str) -> Result<TriangleMesh, MeshError> {
    let mut vertices = Vec::new();
    let mut file_normals = Vec::new();
    let mut triangles = Vec::new();
    let mut vertex_normal: Vec<Option<usize>> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        let mut it = content.split_whitespace();
        match it.next() {
            Some("v") => {
                vertices.push(parse_floats(it, line, "vertex")?);
                vertex_normal.push(None);
            }
            Some("vn") => file_normals.push(parse_floats(it, line, "normal")?),
            Some("f") => {
                let mut corners = Vec::new();
                for tok in it {
                    let mut parts = tok.split('/');
                    let v = obj_index(parts.next().unwrap_or(""), vertices.len(), line)?;
                    let _uv = parts.next();
                    if let Some(nt) = parts.next().filter(|s| !s.is_empty()) {
                        let ni = obj_index(nt, file_normals.len(), line)?;
                        vertex_normal[v].get_or_insert(ni);
                    }
                    corners.push(v as u32);
                }
                if corners.len() < 3 {
                    return Err(parse_err(line, "face needs at least 3 vertices"));
                }
                for k in 1..corners.len() - 1 {
                    triangles.push([corners[0], corners[k], corners[k + 1]]);
                }
            }
            _ => {}
        }
    }
    if triangles.is_empty() {
        return Err(MeshError::Empty);
    }
    let normals = if vertex_normal.iter().all(Option::is_some) {
        Some(
            vertex_normal
                .iter()
                .map(|n| file_normals[n.expect("checked")])
                .collect(),
        )
    } else {
        None
    };
    TriangleMesh::new(vertices, triangles, normals)
}

/// Parses STL, detecting binary vs ASCII by the record-count/size identity.
/// Vertices are not welded: every facet contributes three vertices.
pub fn parse_stl(bytes: &[u8]) -> Result<TriangleMesh, MeshError> {
    if bytes.len() >= 84 {
        let count = u32::from_le_bytes([bytes[80], bytes[81], bytes[82], bytes[83]]) as usize;
        if 84 + count * 50 == bytes.len() {
            return parse_stl_binary(bytes, count);
        }
    }
    let text = std::str::from_utf8(bytes)
        .map_err(|_| parse_err(0, "neither a valid binary STL nor UTF-8 ASCII STL"))?;
    if !text.trim_start().starts_with("solid") {
        return Err(parse_err(1, "ASCII STL must start with 'solid'"));
    }
    parse_stl_ascii(text)
}

fn parse_stl_binary(bytes: &[u8], count: usize) -> Result<TriangleMesh, MeshError> {
    if count == 0 {
        return Err(MeshError::Empty);
    }
    let mut vertices = Vec::with_capacity(count * 3);
    let mut triangles = Vec::with_capacity(count);
    for rec in 0..count {
        let base = 84 + rec * 50;
        let f = |k: usize| {
            let o = base + 12 + k * 4;
            f32::from_le_bytes([bytes[o], bytes[o + 1], bytes[o + 2], bytes[o + 3]]) as f64
        };
        for corner in 0..3 {
            let v = Vec3::new(f(corner * 3), f(corner * 3 + 1), f(corner * 3 + 2));
            if !v.is_finite() {
                return Err(parse_err(rec + 1, format!("non-finite vertex in facet record {}", rec + 1)));
            }
            vertices.push(v);
        }
        let i = (rec * 3) as u32;
        triangles.push([i, i + 1, i + 2]);
    }
    TriangleMesh::new(vertices, triangles, None)
}

fn parse_stl_ascii(text: &str) -> Result<TriangleMesh, MeshError> {
    let mut vertices = Vec::new();
    let mut triangles = Vec::new();
    let mut pending = Vec::with_capacity(3);
    let mut facet_line = 0;
    for (n, raw) in text.lines().enumerate() {
        let line = n + 1;
        let mut it = raw.split_whitespace();
        match it.next() {
            Some("facet") => {
                if !pending.is_empty() {
                    return Err(parse_err(line, "facet started before previous facet ended"));
                }
                facet_line = line;
            }
            Some("vertex") => {
                pending.push(parse_floats(it, line, "vertex")?);
                if pending.len() > 3 {
                    return Err(parse_err(line, "facet has more than 3 vertices"));
                }
            }
            Some("endfacet") => {
                if pending.len() != 3 {
                    return Err(parse_err(
                        facet_line,
                        format!("facet has {} vertices, expected 3", pending.len()),
                    ));
                }
                let i = vertices.len() as u32;
                vertices.append(&mut pending);
                triangles.push([i, i + 1, i + 2]);
            }
            _ => {}
        }
    }
    if triangles.is_empty() {
        return Err(MeshError::Empty);
    }
    TriangleMesh::new(vertices, triangles, None)
}

/// Serializes a mesh as ASCII OBJ (used by tests and fixtures).
pub fn to_obj_string(mesh: &TriangleMesh) -> String {
    let mut s = String::new();
    for v in mesh.vertices() {
        s.push_str(&format!("v {} {} {}\n", v.x, v.y, v.z));
    }
    for t in mesh.triangles() {
        s.push_str(&format!("f {} {} {}\n", t[0] + 1, t[1] + 1, t[2] + 1));
    }
    s
}

/// Serializes a mesh as binary STL with zeroed facet normals.
pub fn to_binary_stl(mesh: &TriangleMesh) -> Vec<u8> {
    let mut out = vec![0u8; 80];
    out.extend((mesh.triangles().len() as u32).to_le_bytes());
    for t in 0..mesh.triangles().len() {
        out.extend([0u8; 12]);
        for v in mesh.triangle_vertices(t) {
            for c in v.to_array() {
                out.extend((c as f32).to_le_bytes());
            }
        }
        out.extend([0u8; 2]);
    }
    out
}
