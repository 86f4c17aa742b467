use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use crate::error::{Error, Result};

use super::mesh::DiscreteManifold;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum MeshFormat {
    Off,
    Obj,
}

impl MeshFormat {
    pub fn from_path(path: &Path) -> Result<Self> {
        match path
            .extension()
            .and_then(|e| e.to_str())
            .map(str::to_ascii_lowercase)
            .as_deref()
        {
            Some("off") => Ok(MeshFormat::Off),
            Some("obj") => Ok(MeshFormat::Obj),
            _ => Err(Error::invalid(format!(
                "unknown mesh format for {}",
                path.display()
            ))),
        }
    }
}

pub fn load_mesh(path: impl AsRef<Path>, format: Option<MeshFormat>) -> Result<DiscreteManifold> {
    let path = path.as_ref();
    let format = match format {
        Some(f) => f,
        None => MeshFormat::from_path(path)?,
    };
    let text = fs::read_to_string(path)?;
    let (v, f) = match format {
        MeshFormat::Off => parse_off(&text)?,
        MeshFormat::Obj => parse_obj(&text)?,
    };
    let name = path
        .file_name()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    let m = DiscreteManifold::from_embedded(v, f)?;
    Ok(m.with_family(super::MeshFamily::Loaded, format!("file:{name}")))
}

type Parsed = (Vec<[f64; 3]>, Vec<[usize; 3]>);

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn parse_num<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?
        .parse()
        .map_err(|_| parse_err(line, format!("malformed {what}")))
}

pub fn parse_off(text: &str) -> Result<Parsed> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (ln, header) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let counts_line = if let Some(rest) = header.strip_prefix("OFF") {
        if rest.trim().is_empty() {
            lines
                .next()
                .ok_or_else(|| parse_err(ln, "missing counts"))?
        } else {
            (ln, rest.trim())
        }
    } else {
        return Err(parse_err(ln, "expected OFF header"));
    };
    let mut toks = counts_line.1.split_whitespace();
    let nv: usize = parse_num(toks.next(), counts_line.0, "vertex count")?;
    let nf: usize = parse_num(toks.next(), counts_line.0, "face count")?;

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| parse_err(counts_line.0, "file ends inside vertex list"))?;
        let mut t = l.split_whitespace();
        vertices.push([
            parse_num(t.next(), ln, "x")?,
            parse_num(t.next(), ln, "y")?,
            parse_num(t.next(), ln, "z")?,
        ]);
    }
    let mut faces = Vec::with_capacity(nf);
    for f in 0..nf {
        let (ln, l) = lines
            .next()
            .ok_or_else(|| parse_err(counts_line.0, "file ends inside face list"))?;
        let mut t = l.split_whitespace();
        let arity: usize = parse_num(t.next(), ln, "face arity")?;
        if arity != 3 {
            return Err(Error::NonTriangularFace { face: f, arity });
        }
        faces.push([
            parse_num(t.next(), ln, "vertex index")?,
            parse_num(t.next(), ln, "vertex index")?,
            parse_num(t.next(), ln, "vertex index")?,
        ]);
    }
    Ok((vertices, faces))
}

pub fn parse_obj(text: &str) -> Result<Parsed> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let ln = i + 1;
        let l = raw.split('#').next().unwrap_or("").trim();
        let mut t = l.split_whitespace();
        match t.next() {
            Some("v") => vertices.push([
                parse_num(t.next(), ln, "x")?,
                parse_num(t.next(), ln, "y")?,
                parse_num(t.next(), ln, "z")?,
            ]),
            Some("f") => {
                let idx: Vec<&str> = t.collect();
                if idx.len() != 3 {
                    return Err(Error::NonTriangularFace {
                        face: faces.len(),
                        arity: idx.len(),
                    });
                }
                let mut tri = [0usize; 3];
                for (slot, tok) in tri.iter_mut().zip(idx) {
                    // "v", "v/vt", "v//vn", "v/vt/vn"; negative indices are relative
                    let k: i64 = parse_num(tok.split('/').next(), ln, "vertex index")?;
                    *slot = match k {
                        k if k > 0 => (k - 1) as usize,
                        k if k < 0 && (-k) as usize <= vertices.len() => {
                            vertices.len() - (-k) as usize
                        }
                        _ => return Err(parse_err(ln, format!("invalid vertex index {k}"))),
                    };
                }
                faces.push(tri);
            }
            _ => {}
        }
    }
    Ok((vertices, faces))
}

pub fn to_off(m: &DiscreteManifold) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "OFF");
    let _ = writeln!(
        s,
        "{} {} {}",
        m.vertex_count(),
        m.face_count(),
        m.edge_count()
    );
    for p in m.vertices() {
        let _ = writeln!(s, "{:?} {:?} {:?}", p[0], p[1], p[2]);
    }
    for f in m.faces() {
        let _ = writeln!(s, "3 {} {} {}", f[0], f[1], f[2]);
    }
    s
}

pub fn write_off(m: &DiscreteManifold, path: impl AsRef<Path>) -> Result<()> {
    fs::write(path, to_off(m))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn obj_quads_demand_triangulation() {
        let text = "v 0 0 0\nv 1 0 0\nv 1 1 0\nv 0 1 0\nf 1 2 3 4\n";
        assert!(matches!(
            parse_obj(text),
            Err(Error::NonTriangularFace { face: 0, arity: 4 })
        ));
    }

    #[test]
    fn obj_slash_and_negative_indices() {
        let text = "v 0 0 0\nv 1 0 0\nv 0 1 0\nf 1/1/1 2//2 -1\n";
        let (v, f) = parse_obj(text).unwrap();
        assert_eq!(v.len(), 3);
        assert_eq!(f, vec![[0, 1, 2]]);
    }

    #[test]
    fn off_header_variants() {
        let a = parse_off("OFF\n3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n").unwrap();
        let b = parse_off("# comment\nOFF 3 1 0\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n").unwrap();
        assert_eq!(a, b);
        assert!(matches!(
            parse_off("PLY\n"),
            Err(Error::Parse { line: 1, .. })
        ));
        assert!(matches!(
            parse_off("OFF\n4 1 0\n0 0 0\n1 0 0\n0 1 0\n1 1 0\n4 0 1 3 2\n"),
            Err(Error::NonTriangularFace { face: 0, arity: 4 })
        ));
    }
}
