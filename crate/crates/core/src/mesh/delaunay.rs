//! Seeded conforming Delaunay meshes of simple polygons.
//!
//! Boundary edges are subdivided at spacing at most `target_h`, interior
//! points come from a jittered grid, and the point set is triangulated with
//! Bowyer-Watson insertion. Missing boundary segments are split until the
//! triangulation conforms; interior points then get three Laplacian
//! smoothing sweeps followed by a final re-triangulation.

use std::collections::{HashMap, HashSet};

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{orient2d, Mesh, MeshError, Point2};

const SMOOTHING_SWEEPS: usize = 3;
const JITTER: f64 = 0.15;
const MAX_SPLIT_ROUNDS: usize = 32;

/// > 0 when `d` lies strictly inside the circumcircle of the CCW triangle (a, b, c).
fn incircle(a: Point2, b: Point2, c: Point2, d: Point2) -> f64 {
    let (ad, bd, cd) = (a - d, b - d, c - d);
    let lift = |p: Point2| p.x * p.x + p.y * p.y;
    lift(ad) * bd.cross(cd) + lift(bd) * cd.cross(ad) + lift(cd) * ad.cross(bd)
}

struct Triangulation {
    pts: Vec<Point2>,
    tris: Vec<[usize; 3]>,
    alive: Vec<bool>,
    /// Directed (CCW) edge to the triangle that owns it.
    owner: HashMap<(usize, usize), usize>,
    last: usize,
}

impl Triangulation {
    fn with_super_triangle(points: &[Point2]) -> Self {
        let (mut lo, mut hi) = (points[0], points[0]);
        for p in points {
            lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
            hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
        }
        let c = lo.midpoint(hi);
        let r = 100.0 * (hi - lo).norm().max(1e-3);
        let mut pts = points.to_vec();
        pts.push(Point2::new(c.x - 2.0 * r, c.y - r));
        pts.push(Point2::new(c.x + 2.0 * r, c.y - r));
        pts.push(Point2::new(c.x, c.y + 2.0 * r));
        let n = points.len();
        let mut t = Triangulation { pts, tris: Vec::new(), alive: Vec::new(), owner: HashMap::new(), last: 0 };
        t.add([n, n + 1, n + 2]);
        t
    }

    fn add(&mut self, tri: [usize; 3]) -> usize {
        let id = self.tris.len();
        for i in 0..3 {
            self.owner.insert((tri[i], tri[(i + 1) % 3]), id);
        }
        self.tris.push(tri);
        self.alive.push(true);
        id
    }

    fn remove(&mut self, id: usize) {
        let tri = self.tris[id];
        for i in 0..3 {
            let key = (tri[i], tri[(i + 1) % 3]);
            if self.owner.get(&key) == Some(&id) {
                self.owner.remove(&key);
            }
        }
        self.alive[id] = false;
    }

    fn contains(&self, id: usize, p: Point2) -> bool {
        let [a, b, c] = self.tris[id].map(|v| self.pts[v]);
        orient2d(a, b, p) >= 0.0 && orient2d(b, c, p) >= 0.0 && orient2d(c, a, p) >= 0.0
    }

    fn locate(&self, p: Point2) -> Option<usize> {
        // Visibility walk from the last created triangle, then a full scan.
        let mut cur = self.last;
        if self.alive[cur] {
            for _ in 0..self.tris.len() {
                let tri = self.tris[cur];
                let mut moved = false;
                for i in 0..3 {
                    let (a, b) = (tri[i], tri[(i + 1) % 3]);
                    if orient2d(self.pts[a], self.pts[b], p) < 0.0 {
                        if let Some(&next) = self.owner.get(&(b, a)) {
                            cur = next;
                            moved = true;
                            break;
                        }
                    }
                }
                if !moved {
                    if self.contains(cur, p) {
                        return Some(cur);
                    }
                    break;
                }
            }
        }
        (0..self.tris.len()).find(|&id| self.alive[id] && self.contains(id, p))
    }

    fn insert(&mut self, v: usize) {
        let p = self.pts[v];
        let Some(start) = self.locate(p) else { return };
        let mut cavity: HashSet<usize> = HashSet::from([start]);
        let mut stack = vec![start];
        while let Some(id) = stack.pop() {
            let tri = self.tris[id];
            for i in 0..3 {
                if let Some(&nb) = self.owner.get(&(tri[(i + 1) % 3], tri[i])) {
                    if !cavity.contains(&nb) {
                        let [a, b, c] = self.tris[nb].map(|w| self.pts[w]);
                        if incircle(a, b, c, p) > 0.0 {
                            cavity.insert(nb);
                            stack.push(nb);
                        }
                    }
                }
            }
        }
        // Shrink the cavity until it is star-shaped with respect to p.
        let boundary = loop {
            let mut boundary = Vec::new();
            let mut offender = None;
            let mut ids: Vec<usize> = cavity.iter().copied().collect();
            ids.sort_unstable();
            for &id in &ids {
                let tri = self.tris[id];
                for i in 0..3 {
                    let (a, b) = (tri[i], tri[(i + 1) % 3]);
                    let inside = self.owner.get(&(b, a)).is_some_and(|nb| cavity.contains(nb));
                    if !inside {
                        if orient2d(self.pts[a], self.pts[b], p) <= 0.0 && id != start {
                            offender = Some(id);
                        }
                        boundary.push((a, b));
                    }
                }
            }
            match offender {
                Some(id) => {
                    cavity.remove(&id);
                }
                None => break boundary,
            }
        };
        let mut ids: Vec<usize> = cavity.into_iter().collect();
        ids.sort_unstable();
        for id in ids {
            self.remove(id);
        }
        for (a, b) in boundary {
            if orient2d(self.pts[a], self.pts[b], p) > 0.0 {
                self.last = self.add([a, b, v]);
            }
        }
    }

    fn finish(self, n: usize) -> Vec<[usize; 3]> {
        self.tris
            .into_iter()
            .zip(self.alive)
            .filter(|(t, alive)| *alive && t.iter().all(|&v| v < n))
            .map(|(t, _)| t)
            .collect()
    }
}

/// Delaunay triangulation of a point set (its convex hull).
fn bowyer_watson(points: &[Point2], rng: &mut ChaCha8Rng) -> Vec<[usize; 3]> {
    let mut tri = Triangulation::with_super_triangle(points);
    let mut order: Vec<usize> = (0..points.len()).collect();
    order.shuffle(rng);
    for v in order {
        tri.insert(v);
    }
    tri.finish(points.len())
}

fn point_in_polygon(p: Point2, poly: &[Point2]) -> bool {
    let mut inside = false;
    let n = poly.len();
    for i in 0..n {
        let (a, b) = (poly[i], poly[(i + 1) % n]);
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    inside
}

fn segment_distance(p: Point2, a: Point2, b: Point2) -> f64 {
    let d = b - a;
    let s = ((p - a).dot(d) / d.dot(d)).clamp(0.0, 1.0);
    p.dist(a + s * d)
}

fn segments_cross(a: Point2, b: Point2, c: Point2, d: Point2) -> bool {
    let o1 = orient2d(a, b, c);
    let o2 = orient2d(a, b, d);
    let o3 = orient2d(c, d, a);
    let o4 = orient2d(c, d, b);
    o1 * o2 < 0.0 && o3 * o4 < 0.0
}

fn validate_polygon(polygon: &[Point2]) -> Result<(), MeshError> {
    let n = polygon.len();
    if n < 3 {
        return Err(MeshError::BadPolygon("fewer than three vertices".into()));
    }
    if polygon.iter().any(|p| !p.is_finite()) {
        return Err(MeshError::BadPolygon("non-finite vertex".into()));
    }
    let scale = polygon.iter().map(|p| p.norm()).fold(1e-300, f64::max);
    for i in 0..n {
        for j in i + 1..n {
            if polygon[i].dist(polygon[j]) <= 1e-12 * scale {
                return Err(MeshError::BadPolygon(format!("vertices {i} and {j} coincide")));
            }
        }
    }
    let area2: f64 = (0..n).map(|i| polygon[i].cross(polygon[(i + 1) % n])).sum();
    if area2.abs() <= 1e-12 * scale * scale {
        return Err(MeshError::BadPolygon("vertices are collinear".into()));
    }
    if area2 < 0.0 {
        return Err(MeshError::BadPolygon("vertices are not counterclockwise".into()));
    }
    for i in 0..n {
        for j in i + 2..n {
            if i == 0 && j == n - 1 {
                continue;
            }
            if segments_cross(polygon[i], polygon[(i + 1) % n], polygon[j], polygon[(j + 1) % n]) {
                return Err(MeshError::BadPolygon(format!("edges {i} and {j} intersect")));
            }
        }
    }
    Ok(())
}

/// Triangulates, splitting boundary segments until each one is a mesh edge.
fn conforming_triangulation(
    points: &mut Vec<Point2>,
    segments: &mut Vec<(usize, usize)>,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<[usize; 3]>, MeshError> {
    for _ in 0..MAX_SPLIT_ROUNDS {
        let tris = bowyer_watson(points, rng);
        let edges: HashSet<(usize, usize)> = tris
            .iter()
            .flat_map(|t| (0..3).map(move |i| (t[i].min(t[(i + 1) % 3]), t[i].max(t[(i + 1) % 3]))))
            .collect();
        let mut next = Vec::with_capacity(segments.len());
        let mut missing = false;
        for &(a, b) in segments.iter() {
            if edges.contains(&(a.min(b), a.max(b))) {
                next.push((a, b));
            } else {
                missing = true;
                let m = points.len();
                points.push(points[a].midpoint(points[b]));
                next.push((a, m));
                next.push((m, b));
            }
        }
        *segments = next;
        if !missing {
            return Ok(tris);
        }
    }
    Err(MeshError::BadPolygon("boundary recovery did not converge".into()))
}

/// Conforming Delaunay mesh of a simple counterclockwise polygon.
pub fn delaunay_mesh(polygon: &[Point2], target_h: f64, seed: u64) -> Result<Mesh, MeshError> {
    if !(target_h.is_finite() && target_h > 0.0) {
        return Err(MeshError::BadSize(target_h));
    }
    validate_polygon(polygon)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let nv = polygon.len();
    let mut points: Vec<Point2> = polygon.to_vec();
    let mut segments = Vec::new();
    for i in 0..nv {
        let (a, b) = (polygon[i], polygon[(i + 1) % nv]);
        let pieces = (a.dist(b) / target_h).ceil().max(1.0) as usize;
        let mut prev = i;
        for k in 1..pieces {
            let s = k as f64 / pieces as f64;
            points.push(a + s * (b - a));
            segments.push((prev, points.len() - 1));
            prev = points.len() - 1;
        }
        segments.push((prev, (i + 1) % nv));
    }

    let (mut lo, mut hi) = (polygon[0], polygon[0]);
    for p in polygon {
        lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    let nx = ((hi.x - lo.x) / target_h).ceil() as usize;
    let ny = ((hi.y - lo.y) / target_h).ceil() as usize;
    let (sx, sy) = ((hi.x - lo.x) / nx as f64, (hi.y - lo.y) / ny as f64);
    let clearance = |p: Point2| -> f64 {
        (0..nv).map(|i| segment_distance(p, polygon[i], polygon[(i + 1) % nv])).fold(f64::INFINITY, f64::min)
    };
    for j in 1..ny {
        for i in 1..nx {
            let jitter = Point2::new(rng.gen_range(-JITTER..JITTER) * sx, rng.gen_range(-JITTER..JITTER) * sy);
            let p = Point2::new(lo.x + i as f64 * sx, lo.y + j as f64 * sy) + jitter;
            if point_in_polygon(p, polygon) && clearance(p) >= 0.5 * target_h {
                points.push(p);
            }
        }
    }

    let inside = |pts: &[Point2], t: &[usize; 3]| {
        let c = Point2::new(
            (pts[t[0]].x + pts[t[1]].x + pts[t[2]].x) / 3.0,
            (pts[t[0]].y + pts[t[1]].y + pts[t[2]].y) / 3.0,
        );
        point_in_polygon(c, polygon)
    };

    let mut tris = conforming_triangulation(&mut points, &mut segments, &mut rng)?;
    for _ in 0..SMOOTHING_SWEEPS {
        let mut fixed = vec![false; points.len()];
        for &(a, b) in &segments {
            fixed[a] = true;
            fixed[b] = true;
        }
        let mut sum = vec![Point2::default(); points.len()];
        let mut count = vec![0usize; points.len()];
        let mut seen = HashSet::new();
        for t in tris.iter().filter(|t| inside(&points, t)) {
            for i in 0..3 {
                let (a, b) = (t[i], t[(i + 1) % 3]);
                if seen.insert((a.min(b), a.max(b))) {
                    sum[a] = sum[a] + points[b];
                    sum[b] = sum[b] + points[a];
                    count[a] += 1;
                    count[b] += 1;
                }
            }
        }
        for v in 0..points.len() {
            if fixed[v] || count[v] == 0 {
                continue;
            }
            let p = (1.0 / count[v] as f64) * sum[v];
            if point_in_polygon(p, polygon) && clearance(p) >= 0.25 * target_h {
                points[v] = p;
            }
        }
        tris = conforming_triangulation(&mut points, &mut segments, &mut rng)?;
    }

    let kept: Vec<[usize; 3]> = tris.into_iter().filter(|t| inside(&points, t)).collect();
    // Keep only referenced points, renumbered in input order (corners first).
    let mut used = vec![false; points.len()];
    kept.iter().flatten().for_each(|&v| used[v] = true);
    let order: Vec<usize> = (0..points.len()).filter(|&v| used[v]).collect();
    let mut renum = vec![usize::MAX; points.len()];
    for (new, &old) in order.iter().enumerate() {
        renum[old] = new;
    }
    let nodes: Vec<Point2> = order.iter().map(|&v| points[v]).collect();
    let triangles = kept.iter().map(|t| t.map(|v| renum[v])).collect();
    let corners = (0..nv).map(|v| renum[v]).collect();
    Mesh::new(nodes, triangles, Some(corners))
}
