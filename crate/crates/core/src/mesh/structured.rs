use std::collections::HashMap;

use super::{Mesh, MeshError, Point2};

/// Diagonal used to split each square cell into two triangles.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Diagonal {
    /// From the lower-left to the upper-right corner.
    #[default]
    NorthEast,
    /// From the lower-right to the upper-left corner.
    NorthWest,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SquareDomain {
    UnitSquare,
    /// Unit square minus the quadrant `[0.5, 1] x [0.5, 1]`.
    LShape,
}

/// Triangulates the regular hexagon with unit side (equivalently unit
/// circumradius) centred at the origin into `6 m^2` equilateral triangles of
/// side `1/m`.
pub fn build_hexagon_mesh(m: usize) -> Result<Mesh, MeshError> {
    if m == 0 {
        return Err(MeshError::BadSize(0.0));
    }
    let mi = m as i64;
    let h = 1.0 / m as f64;
    let inside = |a: i64, b: i64| a.abs() <= mi && b.abs() <= mi && (a + b).abs() <= mi;

    // Lattice point (a, b) sits at a*e1 + b*e2 with e1 = (h, 0), e2 = h(1/2, sqrt(3)/2).
    let half_sqrt3 = 0.5 * 3f64.sqrt();
    let mut index = HashMap::new();
    let mut nodes = Vec::with_capacity(3 * m * m + 3 * m + 1);
    for b in -mi..=mi {
        for a in -mi..=mi {
            if inside(a, b) {
                index.insert((a, b), nodes.len());
                nodes.push(Point2::new(h * (a as f64 + 0.5 * b as f64), h * half_sqrt3 * b as f64));
            }
        }
    }

    let mut triangles = Vec::with_capacity(6 * m * m);
    for b in -mi..mi {
        for a in -mi..mi {
            let up = [(a, b), (a + 1, b), (a, b + 1)];
            if up.iter().all(|&(p, q)| inside(p, q)) {
                triangles.push(up.map(|k| index[&k]));
            }
            let down = [(a + 1, b), (a + 1, b + 1), (a, b + 1)];
            if down.iter().all(|&(p, q)| inside(p, q)) {
                triangles.push(down.map(|k| index[&k]));
            }
        }
    }

    let corners = [(mi, 0), (0, mi), (-mi, mi), (-mi, 0), (0, -mi), (mi, -mi)]
        .iter()
        .map(|k| index[k])
        .collect();
    Mesh::new(nodes, triangles, Some(corners))
}

/// Regular-pattern triangulation of the unit square (or the L-shape) with
/// `m` cells per side, each cell cut along `diagonal`.
pub fn build_square_mesh(m: usize, domain: SquareDomain, diagonal: Diagonal) -> Result<Mesh, MeshError> {
    if m == 0 {
        return Err(MeshError::BadSize(0.0));
    }
    if domain == SquareDomain::LShape && m % 2 == 1 {
        return Err(MeshError::OddLShape(m));
    }
    let half = m / 2;
    let keep_cell = |i: usize, j: usize| domain == SquareDomain::UnitSquare || i < half || j < half;

    let h = 1.0 / m as f64;
    let mut used = vec![false; (m + 1) * (m + 1)];
    let grid = |i: usize, j: usize| j * (m + 1) + i;
    for j in 0..m {
        for i in 0..m {
            if keep_cell(i, j) {
                for (p, q) in [(i, j), (i + 1, j), (i, j + 1), (i + 1, j + 1)] {
                    used[grid(p, q)] = true;
                }
            }
        }
    }
    let mut index = vec![usize::MAX; used.len()];
    let mut nodes = Vec::new();
    for j in 0..=m {
        for i in 0..=m {
            if used[grid(i, j)] {
                index[grid(i, j)] = nodes.len();
                nodes.push(Point2::new(i as f64 * h, j as f64 * h));
            }
        }
    }

    let mut triangles = Vec::with_capacity(2 * m * m);
    for j in 0..m {
        for i in 0..m {
            if !keep_cell(i, j) {
                continue;
            }
            let sw = index[grid(i, j)];
            let se = index[grid(i + 1, j)];
            let nw = index[grid(i, j + 1)];
            let ne = index[grid(i + 1, j + 1)];
            match diagonal {
                Diagonal::NorthEast => {
                    triangles.push([sw, se, ne]);
                    triangles.push([sw, ne, nw]);
                }
                Diagonal::NorthWest => {
                    triangles.push([sw, se, nw]);
                    triangles.push([se, ne, nw]);
                }
            }
        }
    }

    let corners = match domain {
        SquareDomain::UnitSquare => vec![grid(0, 0), grid(m, 0), grid(m, m), grid(0, m)],
        SquareDomain::LShape => vec![
            grid(0, 0),
            grid(m, 0),
            grid(m, half),
            grid(half, half),
            grid(half, m),
            grid(0, m),
        ],
    };
    let corners = corners.into_iter().map(|g| index[g]).collect();
    Mesh::new(nodes, triangles, Some(corners))
}
