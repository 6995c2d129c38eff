//! ASCII OBJ / OFF / PLY readers and a colored PLY writer.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{TriMesh, Vec3};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeshFormat {
    Obj,
    Off,
    Ply,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .unwrap_or_default();
        match ext.as_str() {
            "obj" => Ok(MeshFormat::Obj),
            "off" => Ok(MeshFormat::Off),
            "ply" => Ok(MeshFormat::Ply),
            _ => Err(Error::UnsupportedFormat(path.display().to_string())),
        }
    }
}

/// Reads a triangle mesh, choosing the parser from the file extension.
/// The mesh is not area-normalized.
pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriMesh> {
    let path = path.as_ref();
    let format = MeshFormat::from_path(path)?;
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    match format {
        MeshFormat::Obj => parse_obj(&text),
        MeshFormat::Off => parse_off(&text),
        MeshFormat::Ply => parse_ply(&text),
    }
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_f64(tok: Option<&str>, line: usize) -> Result<f64> {
    let tok = tok.ok_or_else(|| parse_err(line, "missing coordinate"))?;
    tok.parse()
        .map_err(|_| parse_err(line, format!("bad number '{tok}'")))
}

fn parse_usize(tok: Option<&str>, line: usize) -> Result<usize> {
    let tok = tok.ok_or_else(|| parse_err(line, "missing index"))?;
    tok.parse()
        .map_err(|_| parse_err(line, format!("bad index '{tok}'")))
}

pub fn parse_obj(text: &str) -> Result<TriMesh> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let mut toks = raw.split_whitespace();
        match toks.next() {
            Some("v") => {
                let x = parse_f64(toks.next(), line)?;
                let y = parse_f64(toks.next(), line)?;
                let z = parse_f64(toks.next(), line)?;
                vertices.push(Vec3::new(x, y, z));
            }
            Some("f") => {
                let mut idx = Vec::with_capacity(3);
                for t in toks {
                    let head = t.split('/').next().unwrap_or("");
                    let k: i64 = head
                        .parse()
                        .map_err(|_| parse_err(line, format!("bad face index '{t}'")))?;
                    let resolved = if k > 0 {
                        k - 1
                    } else if k < 0 {
                        vertices.len() as i64 + k
                    } else {
                        return Err(parse_err(line, "face index 0"));
                    };
                    if resolved < 0 {
                        return Err(parse_err(line, format!("face index {k} out of range")));
                    }
                    idx.push(resolved as usize);
                }
                if idx.len() != 3 {
                    return Err(Error::NonTriangleFace {
                        line,
                        arity: idx.len(),
                    });
                }
                faces.push([idx[0], idx[1], idx[2]]);
            }
            _ => {}
        }
    }
    TriMesh::new(vertices, faces)
}

/// Lines with comments stripped and blanks skipped, keeping 1-based numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

pub fn parse_off(text: &str) -> Result<TriMesh> {
    let mut lines = content_lines(text);
    let (line, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let rest = header
        .strip_prefix("OFF")
        .ok_or_else(|| parse_err(line, "missing OFF header"))?
        .trim();
    let (line, counts) = if rest.is_empty() {
        lines
            .next()
            .ok_or_else(|| parse_err(line, "missing element counts"))?
    } else {
        (line, rest)
    };
    let mut toks = counts.split_whitespace();
    let nv = parse_usize(toks.next(), line)?;
    let nf = parse_usize(toks.next(), line)?;

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (line, l) = lines
            .next()
            .ok_or_else(|| parse_err(line, "unexpected end of vertex list"))?;
        let mut t = l.split_whitespace();
        let x = parse_f64(t.next(), line)?;
        let y = parse_f64(t.next(), line)?;
        let z = parse_f64(t.next(), line)?;
        vertices.push(Vec3::new(x, y, z));
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (line, l) = lines
            .next()
            .ok_or_else(|| parse_err(line, "unexpected end of face list"))?;
        let mut t = l.split_whitespace();
        let arity = parse_usize(t.next(), line)?;
        if arity != 3 {
            return Err(Error::NonTriangleFace { line, arity });
        }
        let a = parse_usize(t.next(), line)?;
        let b = parse_usize(t.next(), line)?;
        let c = parse_usize(t.next(), line)?;
        faces.push([a, b, c]);
    }
    TriMesh::new(vertices, faces)
}

struct PlyElement {
    name: String,
    count: usize,
    props: Vec<String>,
    list_prop: bool,
}

pub fn parse_ply(text: &str) -> Result<TriMesh> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    match lines.next() {
        Some((_, "ply")) => {}
        _ => return Err(parse_err(1, "missing 'ply' magic")),
    }
    let mut elements: Vec<PlyElement> = Vec::new();
    let mut last_line = 1;
    loop {
        let (line, l) = lines
            .next()
            .ok_or_else(|| parse_err(last_line, "unterminated header"))?;
        last_line = line;
        let mut t = l.split_whitespace();
        match t.next() {
            Some("format") => {
                if t.next() != Some("ascii") {
                    return Err(Error::UnsupportedFormat("binary PLY".into()));
                }
            }
            Some("element") => {
                let name = t.next().unwrap_or_default().to_string();
                let count = parse_usize(t.next(), line)?;
                elements.push(PlyElement {
                    name,
                    count,
                    props: Vec::new(),
                    list_prop: false,
                });
            }
            Some("property") => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| parse_err(line, "property before element"))?;
                let toks: Vec<&str> = t.collect();
                if toks.first() == Some(&"list") {
                    el.list_prop = true;
                    el.props.push(toks.last().unwrap_or(&"").to_string());
                } else {
                    el.props.push(toks.last().unwrap_or(&"").to_string());
                }
            }
            Some("end_header") => break,
            _ => {}
        }
    }

    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for el in &elements {
        match el.name.as_str() {
            "vertex" => {
                let pos = |name: &str| el.props.iter().position(|p| p == name);
                let (ix, iy, iz) = match (pos("x"), pos("y"), pos("z")) {
                    (Some(a), Some(b), Some(c)) => (a, b, c),
                    _ => return Err(parse_err(last_line, "vertex element lacks x/y/z")),
                };
                for _ in 0..el.count {
                    let (line, l) = lines
                        .next()
                        .ok_or_else(|| parse_err(last_line, "unexpected end of vertices"))?;
                    let vals: Vec<&str> = l.split_whitespace().collect();
                    let x = parse_f64(vals.get(ix).copied(), line)?;
                    let y = parse_f64(vals.get(iy).copied(), line)?;
                    let z = parse_f64(vals.get(iz).copied(), line)?;
                    vertices.push(Vec3::new(x, y, z));
                }
            }
            "face" if el.list_prop => {
                for _ in 0..el.count {
                    let (line, l) = lines
                        .next()
                        .ok_or_else(|| parse_err(last_line, "unexpected end of faces"))?;
                    let mut t = l.split_whitespace();
                    let arity = parse_usize(t.next(), line)?;
                    if arity != 3 {
                        return Err(Error::NonTriangleFace { line, arity });
                    }
                    let a = parse_usize(t.next(), line)?;
                    let b = parse_usize(t.next(), line)?;
                    let c = parse_usize(t.next(), line)?;
                    faces.push([a, b, c]);
                }
            }
            _ => {
                for _ in 0..el.count {
                    lines.next();
                }
            }
        }
    }
    TriMesh::new(vertices, faces)
}

/// Writes an ASCII PLY, optionally with per-vertex RGB.
pub fn write_colored_ply(
    path: impl AsRef<Path>,
    mesh: &TriMesh,
    colors: Option<&[[u8; 3]]>,
) -> Result<()> {
    let path = path.as_ref();
    if let Some(c) = colors {
        if c.len() != mesh.num_vertices() {
            return Err(Error::DimensionMismatch {
                expected: mesh.num_vertices(),
                actual: c.len(),
            });
        }
    }
    let mut out = String::with_capacity(64 * mesh.num_vertices());
    out.push_str("ply\nformat ascii 1.0\n");
    let _ = writeln!(out, "element vertex {}", mesh.num_vertices());
    out.push_str("property double x\nproperty double y\nproperty double z\n");
    if colors.is_some() {
        out.push_str("property uchar red\nproperty uchar green\nproperty uchar blue\n");
    }
    let _ = writeln!(out, "element face {}", mesh.num_faces());
    out.push_str("property list uchar int vertex_indices\nend_header\n");
    for (i, p) in mesh.vertices().iter().enumerate() {
        let _ = write!(out, "{:e} {:e} {:e}", p.x, p.y, p.z);
        if let Some(c) = colors {
            let _ = write!(out, " {} {} {}", c[i][0], c[i][1], c[i][2]);
        }
        out.push('\n');
    }
    for f in mesh.faces() {
        let _ = writeln!(out, "3 {} {} {}", f[0], f[1], f[2]);
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}
