//! Convex hulls of down-closed point clouds in the nonnegative orthant of R^3.
//!
//! The down-closure of `conv(P)` inside the orthant equals the convex hull of
//! `P` together with every coordinate-zeroing projection of its points, so
//! membership reduces to facet tests on an ordinary hull. Clouds spanning
//! fewer than three axes fall back to a planar polygon, an interval or the
//! origin.

use std::collections::HashSet;

/// Membership tolerance.
pub const HULL_TOL: f64 = 1e-9;
/// Coordinates at or below this are treated as inactive.
pub const ACTIVE_TOL: f64 = 1e-9;

pub type Point3 = [f64; 3];

fn dominates_weakly(a: &Point3, b: &Point3, slack: f64) -> bool {
    a.iter().zip(b).all(|(x, y)| *x >= *y - slack)
}

fn lex_desc(a: &Point3, b: &Point3) -> std::cmp::Ordering {
    b[0].total_cmp(&a[0])
        .then(b[1].total_cmp(&a[1]))
        .then(b[2].total_cmp(&a[2]))
}

/// Points not weakly dominated by another (maximal elements), deduplicated,
/// in descending lexicographic order.
pub fn pareto_max(points: &[Point3]) -> Vec<Point3> {
    let mut sorted = points.to_vec();
    sorted.sort_by(lex_desc);
    let mut front: Vec<Point3> = Vec::new();
    for p in sorted {
        if !front.iter().any(|k| dominates_weakly(k, &p, 1e-12)) {
            front.push(p);
        }
    }
    front
}

/// Points not weakly dominating another (minimal elements), deduplicated, in
/// ascending lexicographic order.
pub fn pareto_min(points: &[Point3]) -> Vec<Point3> {
    let mut sorted = points.to_vec();
    sorted.sort_by(|a, b| lex_desc(b, a));
    let mut front: Vec<Point3> = Vec::new();
    for p in sorted {
        if !front.iter().any(|k| dominates_weakly(&p, k, 1e-12)) {
            front.push(p);
        }
    }
    front
}

#[derive(Clone, Debug)]
enum Shape {
    Origin,
    Axis { axis: usize, max: f64 },
    Planar { axes: [usize; 2], polygon: Vec<[f64; 2]> },
    Solid { planes: Vec<(Point3, f64)> },
}

/// Down-closure of the convex hull of a point cloud.
#[derive(Clone, Debug)]
pub struct DownHull {
    shape: Shape,
    vertices: Vec<Point3>,
}

impl DownHull {
    pub fn new(points: &[Point3]) -> Self {
        let clipped: Vec<Point3> = points.iter().map(|p| p.map(|x| x.max(0.0))).collect();
        let front = pareto_max(&clipped);
        let active: Vec<usize> = (0..3)
            .filter(|&k| front.iter().any(|p| p[k] > ACTIVE_TOL))
            .collect();
        match active.len() {
            0 => Self { shape: Shape::Origin, vertices: vec![[0.0; 3]] },
            1 => {
                let axis = active[0];
                let max = front.iter().map(|p| p[axis]).fold(0.0, f64::max);
                let mut top = [0.0; 3];
                top[axis] = max;
                Self { shape: Shape::Axis { axis, max }, vertices: vec![[0.0; 3], top] }
            }
            2 => Self::planar([active[0], active[1]], &front),
            _ => {
                let cloud = with_projections(&front);
                match hull3(&cloud) {
                    Some((planes, vertices)) => Self { shape: Shape::Solid { planes }, vertices },
                    None => {
                        let mut axes = [0usize, 1, 2];
                        let extent = |k: usize| front.iter().map(|p| p[k]).fold(0.0, f64::max);
                        axes.sort_by(|&a, &b| extent(b).total_cmp(&extent(a)));
                        let mut two = [axes[0], axes[1]];
                        two.sort();
                        Self::planar(two, &front)
                    }
                }
            }
        }
    }

    fn planar(axes: [usize; 2], front: &[Point3]) -> Self {
        let mut pts: Vec<[f64; 2]> = vec![[0.0, 0.0]];
        for p in front {
            let (a, b) = (p[axes[0]], p[axes[1]]);
            pts.extend([[a, b], [a, 0.0], [0.0, b]]);
        }
        let polygon = hull2(pts);
        let vertices = polygon
            .iter()
            .map(|q| {
                let mut v = [0.0; 3];
                v[axes[0]] = q[0];
                v[axes[1]] = q[1];
                v
            })
            .collect();
        Self { shape: Shape::Planar { axes, polygon }, vertices }
    }

    /// Hull vertices, including those created by the down-closure.
    pub fn vertices(&self) -> &[Point3] {
        &self.vertices
    }

    pub fn contains(&self, x: &Point3, tol: f64) -> bool {
        if x.iter().any(|&c| c < -tol) {
            return false;
        }
        match &self.shape {
            Shape::Origin => x.iter().all(|&c| c <= tol),
            Shape::Axis { axis, max } => (0..3).all(|k| if k == *axis { x[k] <= max + tol } else { x[k] <= tol }),
            Shape::Planar { axes, polygon } => {
                let other = 3 - axes[0] - axes[1];
                if x[other] > tol {
                    return false;
                }
                let p = [x[axes[0]], x[axes[1]]];
                inside_polygon(polygon, &p, tol)
            }
            Shape::Solid { planes } => planes.iter().all(|(n, d)| dot(n, x) <= d + tol),
        }
    }
}

fn with_projections(front: &[Point3]) -> Vec<Point3> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for p in front {
        for mask in 0..8u8 {
            let q: Point3 = std::array::from_fn(|k| if mask >> k & 1 == 1 { 0.0 } else { p[k] });
            if seen.insert(q.map(f64::to_bits)) {
                out.push(q);
            }
        }
    }
    out
}

fn inside_polygon(polygon: &[[f64; 2]], p: &[f64; 2], tol: f64) -> bool {
    match polygon.len() {
        0 => false,
        1 => (p[0] - polygon[0][0]).abs() <= tol && (p[1] - polygon[0][1]).abs() <= tol,
        _ => (0..polygon.len()).all(|i| {
            let a = polygon[i];
            let b = polygon[(i + 1) % polygon.len()];
            let e = [b[0] - a[0], b[1] - a[1]];
            let len = (e[0] * e[0] + e[1] * e[1]).sqrt();
            if len == 0.0 {
                return true;
            }
            let cross = e[0] * (p[1] - a[1]) - e[1] * (p[0] - a[0]);
            cross >= -tol * len
        }),
    }
}

/// Counter-clockwise convex hull (monotone chain), collinear points dropped.
pub fn hull2(mut pts: Vec<[f64; 2]>) -> Vec<[f64; 2]> {
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    if pts.len() < 3 {
        return pts;
    }
    let cross = |o: [f64; 2], a: [f64; 2], b: [f64; 2]| (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0]);
    let mut lower: Vec<[f64; 2]> = Vec::new();
    for &p in &pts {
        while lower.len() >= 2 && cross(lower[lower.len() - 2], lower[lower.len() - 1], p) <= 1e-15 {
            lower.pop();
        }
        lower.push(p);
    }
    let mut upper: Vec<[f64; 2]> = Vec::new();
    for &p in pts.iter().rev() {
        while upper.len() >= 2 && cross(upper[upper.len() - 2], upper[upper.len() - 1], p) <= 1e-15 {
            upper.pop();
        }
        upper.push(p);
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

fn sub(a: &Point3, b: &Point3) -> Point3 {
    [a[0] - b[0], a[1] - b[1], a[2] - b[2]]
}

fn cross(a: &Point3, b: &Point3) -> Point3 {
    [a[1] * b[2] - a[2] * b[1], a[2] * b[0] - a[0] * b[2], a[0] * b[1] - a[1] * b[0]]
}

fn dot(a: &Point3, b: &Point3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: &Point3) -> f64 {
    dot(a, a).sqrt()
}

#[derive(Clone, Debug)]
struct Face {
    v: [usize; 3],
    n: Point3,
    d: f64,
}

/// Face through `a, b, c` with unit normal pointing away from `inside`.
fn oriented_face(pts: &[Point3], mut v: [usize; 3], inside: &Point3) -> Option<Face> {
    let mut n = cross(&sub(&pts[v[1]], &pts[v[0]]), &sub(&pts[v[2]], &pts[v[0]]));
    let len = norm(&n);
    if len < 1e-300 {
        return None;
    }
    n = n.map(|x| x / len);
    let mut d = dot(&n, &pts[v[0]]);
    if dot(&n, inside) > d {
        n = n.map(|x| -x);
        d = -d;
        v.swap(1, 2);
    }
    Some(Face { v, n, d })
}

/// Incremental 3-D hull; returns outward facet planes `n . x <= d` and the
/// vertex set, or `None` for a degenerate cloud.
fn hull3(pts: &[Point3]) -> Option<(Vec<(Point3, f64)>, Vec<Point3>)> {
    if pts.len() < 4 {
        return None;
    }
    let scale = pts.iter().flatten().fold(1.0f64, |m, x| m.max(x.abs()));
    let eps = 1e-12 * scale;
    let i0 = 0;
    let i1 = (0..pts.len()).max_by(|&a, &b| norm(&sub(&pts[a], &pts[i0])).total_cmp(&norm(&sub(&pts[b], &pts[i0]))))?;
    let axis = sub(&pts[i1], &pts[i0]);
    if norm(&axis) <= eps {
        return None;
    }
    let line_dist = |k: usize| norm(&cross(&axis, &sub(&pts[k], &pts[i0]))) / norm(&axis);
    let i2 = (0..pts.len()).max_by(|&a, &b| line_dist(a).total_cmp(&line_dist(b)))?;
    if line_dist(i2) <= eps {
        return None;
    }
    let mut pn = cross(&axis, &sub(&pts[i2], &pts[i0]));
    pn = pn.map(|x| x / norm(&pn));
    let plane_dist = |k: usize| dot(&pn, &sub(&pts[k], &pts[i0])).abs();
    let i3 = (0..pts.len()).max_by(|&a, &b| plane_dist(a).total_cmp(&plane_dist(b)))?;
    if plane_dist(i3) <= eps {
        return None;
    }
    let inside: Point3 = std::array::from_fn(|k| (pts[i0][k] + pts[i1][k] + pts[i2][k] + pts[i3][k]) / 4.0);
    let mut faces: Vec<Face> = [[i0, i1, i2], [i0, i1, i3], [i0, i2, i3], [i1, i2, i3]]
        .into_iter()
        .filter_map(|v| oriented_face(pts, v, &inside))
        .collect();
    for (k, p) in pts.iter().enumerate() {
        if [i0, i1, i2, i3].contains(&k) {
            continue;
        }
        let visible: Vec<bool> = faces.iter().map(|f| dot(&f.n, p) - f.d > eps).collect();
        if !visible.iter().any(|&v| v) {
            continue;
        }
        let mut edges = HashSet::new();
        for (f, _) in faces.iter().zip(&visible).filter(|(_, &v)| v) {
            for e in 0..3 {
                edges.insert((f.v[e], f.v[(e + 1) % 3]));
            }
        }
        let mut horizon: Vec<(usize, usize)> = edges.iter().filter(|(a, b)| !edges.contains(&(*b, *a))).copied().collect();
        horizon.sort_unstable();
        let mut next: Vec<Face> = faces
            .into_iter()
            .zip(&visible)
            .filter(|(_, &v)| !v)
            .map(|(f, _)| f)
            .collect();
        next.extend(horizon.into_iter().filter_map(|(a, b)| oriented_face(pts, [a, b, k], &inside)));
        faces = next;
    }
    let mut idx: Vec<usize> = faces.iter().flat_map(|f| f.v).collect();
    idx.sort_unstable();
    idx.dedup();
    let mut vertices: Vec<Point3> = idx.into_iter().map(|k| pts[k]).collect();
    vertices.sort_by(|a, b| lex_desc(b, a));
    Some((faces.into_iter().map(|f| (f.n, f.d)).collect(), vertices))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pareto_filters() {
        let pts = [[1.0, 0.0, 0.0], [0.5, 0.0, 0.0], [0.0, 1.0, 0.0], [1.0, 0.0, 0.0]];
        assert_eq!(pareto_max(&pts), vec![[1.0, 0.0, 0.0], [0.0, 1.0, 0.0]]);
        assert_eq!(pareto_min(&pts), vec![[0.0, 1.0, 0.0], [0.5, 0.0, 0.0]]);
    }

    #[test]
    fn simplex_down_set() {
        let h = DownHull::new(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        assert!(h.contains(&[0.3, 0.3, 0.3], HULL_TOL));
        assert!(!h.contains(&[0.4, 0.4, 0.4], HULL_TOL));
        assert!(h.contains(&[0.0, 0.0, 0.0], HULL_TOL));
        assert_eq!(h.vertices().len(), 4);
    }

    #[test]
    fn cube_corner() {
        let h = DownHull::new(&[[1.0, 1.0, 1.0]]);
        assert!(h.contains(&[1.0, 1.0, 1.0], HULL_TOL));
        assert!(h.contains(&[0.2, 0.9, 0.5], HULL_TOL));
        assert!(!h.contains(&[1.0 + 1e-6, 0.5, 0.5], HULL_TOL));
        assert_eq!(h.vertices().len(), 8);
    }

    #[test]
    fn degenerate_fallbacks() {
        let origin = DownHull::new(&[[0.0; 3]]);
        assert!(origin.contains(&[0.0; 3], HULL_TOL));
        assert!(!origin.contains(&[1e-6, 0.0, 0.0], HULL_TOL));
        let axis = DownHull::new(&[[0.0, 2.0, 0.0]]);
        assert!(axis.contains(&[0.0, 1.5, 0.0], HULL_TOL));
        assert!(!axis.contains(&[0.1, 1.5, 0.0], HULL_TOL));
        let planar = DownHull::new(&[[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]]);
        assert!(planar.contains(&[0.5, 0.0, 0.5], HULL_TOL));
        assert!(!planar.contains(&[0.6, 0.0, 0.6], HULL_TOL));
        assert!(!planar.contains(&[0.1, 0.1, 0.1], HULL_TOL));
    }

    #[test]
    fn time_sharing_between_corners() {
        let h = DownHull::new(&[[1.0, 0.0, 0.2], [0.0, 1.0, 0.2]]);
        assert!(h.contains(&[0.5, 0.5, 0.2], HULL_TOL));
        assert!(!h.contains(&[0.5, 0.5, 0.21], HULL_TOL));
    }
}
