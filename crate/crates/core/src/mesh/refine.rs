use super::{orient2d, Mesh, MeshError, Point2};

/// Where a node of a red-refined mesh comes from.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum NodeOrigin {
    CoarseNode(usize),
    EdgeMidpoint(usize, usize),
}

/// Ancestry of a red-refined mesh.
#[derive(Clone, Debug)]
pub struct ParentMap {
    pub fine_tri_to_coarse_tri: Vec<usize>,
    pub fine_node_origin: Vec<NodeOrigin>,
}

/// Splits every triangle into four congruent children through its edge
/// midpoints.
///
/// Coarse nodes keep their indices; the midpoint of coarse edge `e` becomes
/// fine node `coarse.num_nodes() + e`. Children of coarse triangle `t` are
/// fine triangles `4t..4t+4`, the last one being the interior triangle.
pub fn refine_red(coarse: &Mesh) -> Result<(Mesh, ParentMap), MeshError> {
    let nc = coarse.num_nodes();
    let mut nodes = coarse.nodes().to_vec();
    let mut origin: Vec<NodeOrigin> = (0..nc).map(NodeOrigin::CoarseNode).collect();
    for e in coarse.edges() {
        let [a, b] = e.nodes;
        nodes.push(coarse.node(a).midpoint(coarse.node(b)));
        origin.push(NodeOrigin::EdgeMidpoint(a, b));
    }

    let mut triangles = Vec::with_capacity(4 * coarse.num_triangles());
    let mut parent = Vec::with_capacity(4 * coarse.num_triangles());
    for (t, &[a, b, c]) in coarse.triangles().iter().enumerate() {
        let [ea, eb, ec] = coarse.triangle_edges(t);
        // Midpoints opposite a, b, c respectively.
        let (mbc, mca, mab) = (nc + ea, nc + eb, nc + ec);
        triangles.push([a, mab, mca]);
        triangles.push([mab, b, mbc]);
        triangles.push([mca, mbc, c]);
        triangles.push([mab, mbc, mca]);
        parent.extend([t; 4]);
    }

    let mesh = Mesh::new(nodes, triangles, Some(coarse.corner_nodes().to_vec()))?;
    Ok((mesh, ParentMap { fine_tri_to_coarse_tri: parent, fine_node_origin: origin }))
}

impl ParentMap {
    /// Checks that this map describes `fine` as the red refinement of `coarse`.
    pub fn is_consistent(&self, coarse: &Mesh, fine: &Mesh) -> bool {
        if self.fine_node_origin.len() != fine.num_nodes()
            || self.fine_tri_to_coarse_tri.len() != fine.num_triangles()
            || fine.num_nodes() != coarse.num_nodes() + coarse.edges().len()
            || fine.num_triangles() != 4 * coarse.num_triangles()
        {
            return false;
        }
        self.fine_node_origin.iter().enumerate().all(|(i, o)| {
            let p = fine.node(i);
            match *o {
                NodeOrigin::CoarseNode(j) => j < coarse.num_nodes() && coarse.node(j) == p,
                NodeOrigin::EdgeMidpoint(a, b) => {
                    a < coarse.num_nodes() && b < coarse.num_nodes() && coarse.node(a).midpoint(coarse.node(b)) == p
                }
            }
        }) && self.fine_tri_to_coarse_tri.iter().enumerate().all(|(t, &parent)| {
            parent < coarse.num_triangles() && contains_centroid(coarse.vertices(parent), fine.vertices(t))
        })
    }
}

/// Whether the centroid of `child` lies in the closed triangle `parent`.
fn contains_centroid(parent: [Point2; 3], child: [Point2; 3]) -> bool {
    let c = Point2::new(
        (child[0].x + child[1].x + child[2].x) / 3.0,
        (child[0].y + child[1].y + child[2].y) / 3.0,
    );
    let area = orient2d(parent[0], parent[1], parent[2]);
    let tol = -1e-12 * area.abs();
    (0..3).all(|i| orient2d(parent[i], parent[(i + 1) % 3], c) * area.signum() >= tol)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_hexagon_mesh, build_square_mesh, orient2d, Diagonal, SquareDomain};

    #[test]
    fn hexagon_refines_to_24_triangles() {
        let coarse = build_hexagon_mesh(1).unwrap();
        let (fine, map) = refine_red(&coarse).unwrap();
        assert_eq!(fine.num_triangles(), 24);
        assert_eq!(fine.num_nodes(), coarse.num_nodes() + coarse.edges().len());
        assert!(map.is_consistent(&coarse, &fine));
        fine.check_invariants().unwrap();
        assert_eq!(fine.euler_characteristic(), 1);
    }

    #[test]
    fn twice_refined_square_matches_fine_grid() {
        let coarse = build_square_mesh(4, SquareDomain::UnitSquare, Diagonal::NorthEast).unwrap();
        let (mid, _) = refine_red(&coarse).unwrap();
        let (fine, _) = refine_red(&mid).unwrap();
        let direct = build_square_mesh(16, SquareDomain::UnitSquare, Diagonal::NorthEast).unwrap();
        let key = |m: &crate::mesh::Mesh| {
            let mut v: Vec<(u64, u64)> = m.nodes().iter().map(|p| (p.x.to_bits(), p.y.to_bits())).collect();
            v.sort_unstable();
            v
        };
        assert_eq!(key(&fine), key(&direct));
        // Same triangles too, as sets of vertex coordinates.
        let tri_key = |m: &crate::mesh::Mesh| {
            let mut v: Vec<[(u64, u64); 3]> = (0..m.num_triangles())
                .map(|t| {
                    let mut c = m.vertices(t).map(|p| (p.x.to_bits(), p.y.to_bits()));
                    c.sort_unstable();
                    c
                })
                .collect();
            v.sort_unstable();
            v
        };
        assert_eq!(tri_key(&fine), tri_key(&direct));
    }

    #[test]
    fn fine_triangles_lie_inside_parents() {
        let coarse = build_square_mesh(4, SquareDomain::LShape, Diagonal::NorthWest).unwrap();
        let (fine, map) = refine_red(&coarse).unwrap();
        for (ft, &ct) in map.fine_tri_to_coarse_tri.iter().enumerate() {
            let [a, b, c] = coarse.vertices(ct);
            let det = orient2d(a, b, c);
            for p in fine.vertices(ft) {
                let l = [orient2d(p, b, c) / det, orient2d(a, p, c) / det, orient2d(a, b, p) / det];
                assert!(l.iter().all(|&x| (-1e-12..=1.0 + 1e-12).contains(&x)), "{l:?}");
            }
        }
        assert_eq!(fine.corner_nodes(), coarse.corner_nodes());
    }
}
