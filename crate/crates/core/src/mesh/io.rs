//! Plain-text mesh exchange.
//!
//! A node section (count line, then `index x y boundary_flag` per node) is
//! followed by an element section (count line, then `index v0 v1 v2`). Indices
//! are 0-based. A path ending in `.node` is paired with the sibling `.ele`
//! file; any other path holds both sections back to back.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::{Mesh, MeshError, Point2};

fn node_section(mesh: &Mesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{}", mesh.num_nodes());
    for (i, p) in mesh.nodes().iter().enumerate() {
        let _ = writeln!(s, "{} {} {} {}", i, p.x, p.y, u8::from(mesh.is_boundary_node(i)));
    }
    s
}

fn ele_section(mesh: &Mesh) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "{}", mesh.num_triangles());
    for (i, t) in mesh.triangles().iter().enumerate() {
        let _ = writeln!(s, "{} {} {} {}", i, t[0], t[1], t[2]);
    }
    s
}

pub fn write_mesh(mesh: &Mesh, path: &Path) -> Result<(), MeshError> {
    if path.extension().is_some_and(|e| e == "node") {
        fs::write(path, node_section(mesh))?;
        fs::write(path.with_extension("ele"), ele_section(mesh))?;
    } else {
        fs::write(path, node_section(mesh) + &ele_section(mesh))?;
    }
    Ok(())
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
}

impl<'a> Lines<'a> {
    fn new(text: &'a str) -> Self {
        Self { inner: text.lines().enumerate() }
    }

    fn next_fields(&mut self) -> Result<(usize, Vec<&'a str>), MeshError> {
        for (no, line) in self.inner.by_ref() {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if !fields.is_empty() {
                return Ok((no + 1, fields));
            }
        }
        Err(MeshError::Parse("unexpected end of file".into()))
    }

    fn count(&mut self) -> Result<usize, MeshError> {
        let (no, f) = self.next_fields()?;
        match f.as_slice() {
            [n] => n.parse().map_err(|_| MeshError::Parse(format!("line {no}: bad count {n:?}"))),
            _ => Err(MeshError::Parse(format!("line {no}: expected a single count"))),
        }
    }
}

fn parse<T: std::str::FromStr>(s: &str, line: usize) -> Result<T, MeshError> {
    s.parse().map_err(|_| MeshError::Parse(format!("line {line}: cannot parse {s:?}")))
}

fn read_nodes(lines: &mut Lines) -> Result<Vec<Point2>, MeshError> {
    let n = lines.count()?;
    let mut nodes = Vec::with_capacity(n);
    for i in 0..n {
        let (no, f) = lines.next_fields()?;
        if f.len() != 4 {
            return Err(MeshError::Parse(format!("line {no}: expected `index x y boundary_flag`")));
        }
        if parse::<usize>(f[0], no)? != i {
            return Err(MeshError::Parse(format!("line {no}: node index out of sequence")));
        }
        let p = Point2::new(parse(f[1], no)?, parse(f[2], no)?);
        if !p.is_finite() {
            return Err(MeshError::Parse(format!("line {no}: non-finite coordinate")));
        }
        parse::<u8>(f[3], no)?;
        nodes.push(p);
    }
    Ok(nodes)
}

fn read_triangles(lines: &mut Lines) -> Result<Vec<[usize; 3]>, MeshError> {
    let n = lines.count()?;
    let mut tris = Vec::with_capacity(n);
    for i in 0..n {
        let (no, f) = lines.next_fields()?;
        if f.len() != 4 {
            return Err(MeshError::Parse(format!("line {no}: expected `index v0 v1 v2`")));
        }
        if parse::<usize>(f[0], no)? != i {
            return Err(MeshError::Parse(format!("line {no}: element index out of sequence")));
        }
        tris.push([parse(f[1], no)?, parse(f[2], no)?, parse(f[3], no)?]);
    }
    Ok(tris)
}

/// Reads a mesh; polygon corners are detected from the boundary geometry.
pub fn read_mesh(path: &Path) -> Result<Mesh, MeshError> {
    let (nodes, tris) = if path.extension().is_some_and(|e| e == "node") {
        let node_text = fs::read_to_string(path)?;
        let ele_text = fs::read_to_string(path.with_extension("ele"))?;
        (read_nodes(&mut Lines::new(&node_text))?, read_triangles(&mut Lines::new(&ele_text))?)
    } else {
        let text = fs::read_to_string(path)?;
        let mut lines = Lines::new(&text);
        (read_nodes(&mut lines)?, read_triangles(&mut lines)?)
    };
    Mesh::new(nodes, tris, None)
}
