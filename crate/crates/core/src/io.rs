//! Text formats for meshes and varifolds, and OFF triangle-mesh import.
//!
//! Floats are written in shortest round-trip form, so a dump followed by a
//! load reproduces every coordinate bit for bit.

use std::fmt::Write as _;

use crate::ambient::{AmbientRef, Point, Vec3};
use crate::error::{Error, Result};
use crate::mesh::{Cells, MeshSurface};
use crate::varifold::{DiscreteVarifold, Extent, VarifoldAtom};

pub const MESH_HEADER: &str = "# isovar mesh 1";
pub const VARIFOLD_HEADER: &str = "# isovar varifold 1";

fn parse_err(line: usize, msg: impl std::fmt::Display) -> Error {
    Error::Parse(format!("line {line}: {msg}"))
}

fn floats(line: usize, s: &str, n: usize) -> Result<Vec<f64>> {
    let v: Vec<f64> = s
        .split_whitespace()
        .map(|t| t.parse::<f64>().map_err(|e| parse_err(line, format!("bad number {t:?}: {e}"))))
        .collect::<Result<_>>()?;
    if v.len() != n {
        return Err(parse_err(line, format!("expected {n} numbers, found {}", v.len())));
    }
    Ok(v)
}

fn ints(line: usize, s: &str) -> Result<Vec<usize>> {
    s.split_whitespace()
        .map(|t| t.parse::<usize>().map_err(|e| parse_err(line, format!("bad index {t:?}: {e}"))))
        .collect()
}

fn point(v: &[f64]) -> Point {
    Point::new(v[0], v[1], v[2])
}

fn push_vec(out: &mut String, v: &Vec3) {
    let _ = write!(out, "{:?} {:?} {:?}", v[0], v[1], v[2]);
}

/// Non-comment, non-empty lines with their 1-based numbers.
fn lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

fn expect_key<'a>(it: &mut impl Iterator<Item = (usize, &'a str)>, key: &str) -> Result<(usize, &'a str)> {
    let (n, l) = it.next().ok_or_else(|| Error::Parse(format!("missing `{key}` line")))?;
    let rest = l
        .strip_prefix(key)
        .filter(|r| r.is_empty() || r.starts_with(char::is_whitespace))
        .ok_or_else(|| parse_err(n, format!("expected `{key}`")))?;
    Ok((n, rest.trim()))
}

fn check_ambient(line: usize, name: &str, amb: &AmbientRef) -> Result<()> {
    if name != amb.name {
        return Err(Error::Validation(format!("line {line}: file ambient {name:?} does not match {:?}", amb.name)));
    }
    Ok(())
}

/// Vertex, element and boundary lines.
pub fn write_mesh(mesh: &MeshSurface) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{MESH_HEADER}");
    let _ = writeln!(s, "ambient {}", mesh.ambient.name);
    let _ = writeln!(s, "k {}", mesh.k());
    let _ = writeln!(s, "vertices {}", mesh.vertices.len());
    for v in &mesh.vertices {
        push_vec(&mut s, v);
        s.push('\n');
    }
    let _ = writeln!(s, "elements {}", mesh.element_count());
    for e in 0..mesh.element_count() {
        let vs: Vec<String> = mesh.element_vertices(e).iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "{}", vs.join(" "));
    }
    let _ = writeln!(s, "boundary {}", mesh.boundary().len());
    for b in mesh.boundary() {
        let vs: Vec<String> = b.iter().map(|v| v.to_string()).collect();
        let _ = writeln!(s, "{}", vs.join(" "));
    }
    s
}

pub fn read_mesh(text: &str, ambient: AmbientRef) -> Result<MeshSurface> {
    let mut it = lines(text);
    let (n, name) = expect_key(&mut it, "ambient")?;
    check_ambient(n, name, &ambient)?;
    let (n, k) = expect_key(&mut it, "k")?;
    let k: usize = k.parse().map_err(|_| parse_err(n, "bad k"))?;
    if k != 1 && k != 2 {
        return Err(parse_err(n, format!("k must be 1 or 2, got {k}")));
    }
    let (n, nv) = expect_key(&mut it, "vertices")?;
    let nv: usize = nv.parse().map_err(|_| parse_err(n, "bad vertex count"))?;
    let mut verts = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (n, l) = it.next().ok_or_else(|| Error::Parse("truncated vertex list".into()))?;
        verts.push(point(&floats(n, l, 3)?));
    }
    let (n, ne) = expect_key(&mut it, "elements")?;
    let ne: usize = ne.parse().map_err(|_| parse_err(n, "bad element count"))?;
    let mut segs = Vec::new();
    let mut tris = Vec::new();
    for _ in 0..ne {
        let (n, l) = it.next().ok_or_else(|| Error::Parse("truncated element list".into()))?;
        let v = ints(n, l)?;
        match (k, v.len()) {
            (1, 2) => segs.push([v[0], v[1]]),
            (2, 3) => tris.push([v[0], v[1], v[2]]),
            _ => return Err(parse_err(n, format!("element has {} vertices for k = {k}", v.len()))),
        }
    }
    let cells = if k == 1 { Cells::Segments(segs) } else { Cells::Triangles(tris) };
    let mesh = MeshSurface::new(ambient, verts, cells)?;
    if let Ok((n, nb)) = expect_key(&mut it, "boundary") {
        let nb: usize = nb.parse().map_err(|_| parse_err(n, "bad boundary count"))?;
        let mut loops = Vec::with_capacity(nb);
        for _ in 0..nb {
            let (n, l) = it.next().ok_or_else(|| Error::Parse("truncated boundary list".into()))?;
            loops.push(ints(n, l)?);
        }
        let norm = |ls: &[Vec<usize>]| {
            let mut v: Vec<Vec<usize>> = ls
                .iter()
                .map(|l| {
                    let mut l = l.clone();
                    l.sort_unstable();
                    l
                })
                .collect();
            v.sort();
            v
        };
        if norm(&loops) != norm(mesh.boundary()) {
            return Err(Error::Validation("declared boundary does not match the elements".into()));
        }
    }
    Ok(mesh)
}

/// OFF-style triangle mesh (polygons are fan-triangulated) in Euclidean 3-space.
pub fn read_off(text: &str, ambient: AmbientRef) -> Result<MeshSurface> {
    let mut it = lines(text);
    let (n, head) = it.next().ok_or_else(|| Error::Parse("empty OFF file".into()))?;
    let counts_inline = head.strip_prefix("OFF").ok_or_else(|| parse_err(n, "missing OFF header"))?.trim();
    let (n, counts) = if counts_inline.is_empty() {
        it.next().ok_or_else(|| Error::Parse("missing OFF counts".into()))?
    } else {
        (n, counts_inline)
    };
    let c = ints(n, counts)?;
    if c.len() < 2 {
        return Err(parse_err(n, "expected vertex and face counts"));
    }
    let mut verts = Vec::with_capacity(c[0]);
    for _ in 0..c[0] {
        let (n, l) = it.next().ok_or_else(|| Error::Parse("truncated OFF vertices".into()))?;
        let v: Vec<&str> = l.split_whitespace().collect();
        if v.len() < 3 {
            return Err(parse_err(n, "vertex needs three coordinates"));
        }
        verts.push(point(&floats(n, &v[..3].join(" "), 3)?));
    }
    let mut tris = Vec::new();
    for _ in 0..c[1] {
        let (n, l) = it.next().ok_or_else(|| Error::Parse("truncated OFF faces".into()))?;
        let v = l
            .split_whitespace()
            .map(|t| t.parse::<usize>().map_err(|e| parse_err(n, format!("bad face entry {t:?}: {e}"))))
            .collect::<Result<Vec<usize>>>()?;
        let m = *v.first().ok_or_else(|| parse_err(n, "empty face"))?;
        if m < 3 || v.len() < m + 1 {
            return Err(parse_err(n, "face needs at least three vertices"));
        }
        for j in 1..m - 1 {
            tris.push([v[1], v[1 + j], v[2 + j]]);
        }
    }
    MeshSurface::new(ambient, verts, Cells::Triangles(tris))
}

/// One atom per line: `point | plane vectors | weight | extent`.
pub fn write_varifold(v: &DiscreteVarifold) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{VARIFOLD_HEADER}");
    let _ = writeln!(s, "ambient {}", v.ambient.name);
    let _ = writeln!(s, "k {}", v.k);
    let _ = writeln!(s, "atoms {}", v.atoms.len());
    for a in &v.atoms {
        push_vec(&mut s, &a.point);
        s.push_str(" |");
        for e in &a.plane {
            s.push(' ');
            push_vec(&mut s, e);
        }
        let _ = write!(s, " | {:?} | ", a.weight);
        match &a.extent {
            Extent::Point => s.push_str("point"),
            Extent::Chord { a, b } => {
                s.push_str("chord ");
                push_vec(&mut s, a);
                s.push(' ');
                push_vec(&mut s, b);
            }
            Extent::Triangle { a, b, c } => {
                s.push_str("triangle ");
                push_vec(&mut s, a);
                s.push(' ');
                push_vec(&mut s, b);
                s.push(' ');
                push_vec(&mut s, c);
            }
        }
        s.push('\n');
    }
    s
}

/// Inverse of [`write_varifold`]. The result is not mesh-backed.
pub fn read_varifold(text: &str, ambient: AmbientRef) -> Result<DiscreteVarifold> {
    let mut it = lines(text);
    let (n, name) = expect_key(&mut it, "ambient")?;
    check_ambient(n, name, &ambient)?;
    let (n, k) = expect_key(&mut it, "k")?;
    let k: usize = k.parse().map_err(|_| parse_err(n, "bad k"))?;
    let (n, na) = expect_key(&mut it, "atoms")?;
    let na: usize = na.parse().map_err(|_| parse_err(n, "bad atom count"))?;
    let mut atoms = Vec::with_capacity(na);
    for _ in 0..na {
        let (n, l) = it.next().ok_or_else(|| Error::Parse("truncated atom list".into()))?;
        let cols: Vec<&str> = l.split('|').map(str::trim).collect();
        if cols.len() != 4 {
            return Err(parse_err(n, format!("expected 4 columns, found {}", cols.len())));
        }
        let p = point(&floats(n, cols[0], 3)?);
        let basis = floats(n, cols[1], 3 * k)?;
        let plane = basis.chunks(3).map(point).collect();
        let weight = floats(n, cols[2], 1)?[0];
        let (kind, rest) = cols[3].split_once(' ').unwrap_or((cols[3], ""));
        let extent = match kind {
            "point" => Extent::Point,
            "chord" => {
                let v = floats(n, rest, 6)?;
                Extent::Chord { a: point(&v[..3]), b: point(&v[3..]) }
            }
            "triangle" => {
                let v = floats(n, rest, 9)?;
                Extent::Triangle { a: point(&v[..3]), b: point(&v[3..6]), c: point(&v[6..]) }
            }
            other => return Err(parse_err(n, format!("unknown extent {other:?}"))),
        };
        atoms.push(VarifoldAtom { point: p, plane, weight, extent });
    }
    if let Some((n, _)) = it.next() {
        return Err(parse_err(n, "trailing content"));
    }
    DiscreteVarifold::new(ambient, k, atoms)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::ambient::AmbientSurface;
    use std::sync::Arc;

    #[test]
    fn mesh_round_trip_is_exact() {
        let m = MeshSurface::unit_disk(2).unwrap();
        let text = write_mesh(&m);
        let back = read_mesh(&text, m.ambient.clone()).unwrap();
        assert_eq!(back.vertices, m.vertices);
        assert_eq!(write_mesh(&back), text);
        let c = MeshSurface::segment(Arc::new(AmbientSurface::plane()), [0.1, 0.2], [0.7, -0.3], 7).unwrap();
        let back = read_mesh(&write_mesh(&c), c.ambient.clone()).unwrap();
        assert_eq!(back.vertices, c.vertices);
        assert_eq!(back.boundary(), c.boundary());
    }

    #[test]
    fn varifold_round_trip_is_exact() {
        let amb = Arc::new(AmbientSurface::revolution("1 + z^2", -2.0, 2.0).unwrap());
        let v = DiscreteVarifold::from_mesh(&MeshSurface::latitude(amb.clone(), 0.3, 17).unwrap()).unwrap();
        let text = write_varifold(&v);
        let back = read_varifold(&text, amb).unwrap();
        assert_eq!(back.atoms, v.atoms);
        assert_eq!(write_varifold(&back), text);
    }

    #[test]
    fn off_quads_are_split() {
        let off = "OFF\n4 1 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n";
        let m = read_off(off, Arc::new(AmbientSurface::space())).unwrap();
        assert_eq!(m.element_count(), 2);
        assert!((m.measure() - 1.0).abs() < 1e-15);
        assert_eq!(m.boundary().len(), 1);
    }

    #[test]
    fn malformed_input_reports_the_line() {
        let amb = Arc::new(AmbientSurface::plane());
        let err = read_mesh("ambient plane\nk 1\nvertices 1\n0 x 0\n", amb.clone()).unwrap_err();
        assert!(matches!(err, Error::Parse(_) | Error::Validation(_)));
        let text = format!("ambient {}\nk 1\nvertices 1\n0 x 0\n", amb.name);
        match read_mesh(&text, amb).unwrap_err() {
            Error::Parse(m) => assert!(m.contains("line 4"), "{m}"),
            e => panic!("{e:?}"),
        }
    }
}
