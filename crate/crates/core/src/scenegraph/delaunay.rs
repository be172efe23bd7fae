//! Planar connectivity over pixel centers.

use spade::{DelaunayTriangulation, Triangulation};

use crate::geometry::Point2;

/// Index pairs `(i, j)`, `i < j`, of the Delaunay edges over `points`.
///
/// Coincident points are triangulated once and each duplicate is joined to
/// its first occurrence. When no triangle exists (fewer than three distinct
/// points, or all collinear) the points are chained in column order instead.
pub fn delaunay_edges(points: &[Point2]) -> Vec<(usize, usize)> {
    let mut unique: Vec<usize> = Vec::new();
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for (i, p) in points.iter().enumerate() {
        match unique.iter().find(|&&u| points[u] == *p) {
            Some(&u) => edges.push((u.min(i), u.max(i))),
            None => unique.push(i),
        }
    }

    let mut tri: DelaunayTriangulation<spade::Point2<f64>> = DelaunayTriangulation::new();
    let mut ok = unique.len() >= 3;
    if ok {
        for &u in &unique {
            if tri.insert(spade::Point2::new(points[u].x, points[u].y)).is_err() {
                ok = false;
                break;
            }
        }
    }
    if ok && tri.num_inner_faces() > 0 {
        for e in tri.undirected_edges() {
            let [a, b] = e.vertices();
            let (a, b) = (unique[a.fix().index()], unique[b.fix().index()]);
            edges.push((a.min(b), a.max(b)));
        }
    } else {
        let mut order = unique.clone();
        order.sort_by(|&a, &b| {
            points[a]
                .x
                .total_cmp(&points[b].x)
                .then(points[a].y.total_cmp(&points[b].y))
                .then(a.cmp(&b))
        });
        for w in order.windows(2) {
            edges.push((w[0].min(w[1]), w[0].max(w[1])));
        }
    }
    edges.sort_unstable();
    edges.dedup();
    edges
}
