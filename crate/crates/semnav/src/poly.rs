//! 2D polygon utilities on the map plane: monotone-chain convex hull,
//! point containment, boundary distance.

pub type Vec2 = [f64; 2];

fn sub(a: Vec2, b: Vec2) -> Vec2 {
    [a[0] - b[0], a[1] - b[1]]
}

fn cross(o: Vec2, a: Vec2, b: Vec2) -> f64 {
    (a[0] - o[0]) * (b[1] - o[1]) - (a[1] - o[1]) * (b[0] - o[0])
}

pub fn dist(a: Vec2, b: Vec2) -> f64 {
    let d = sub(a, b);
    d[0].hypot(d[1])
}

/// A convex polygon with counter-clockwise vertices.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<Vec2>,
}

impl Polygon {
    /// Wraps pre-validated CCW vertices. Use [`convex_hull`] for raw points.
    pub fn from_ccw_vertices(vertices: Vec<Vec2>) -> Self {
        debug_assert!(!vertices.is_empty());
        Self { vertices }
    }

    pub fn vertices(&self) -> &[Vec2] {
        &self.vertices
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    /// Shoelace area; non-negative for CCW vertex order.
    pub fn area(&self) -> f64 {
        let v = &self.vertices;
        if v.len() < 3 {
            return 0.0;
        }
        let mut acc = 0.0;
        for i in 0..v.len() {
            let j = (i + 1) % v.len();
            acc += v[i][0] * v[j][1] - v[j][0] * v[i][1];
        }
        acc / 2.0
    }

    /// Mean of the vertices. For the regular polygons and hulls produced in
    /// this crate it is close enough to the area centroid for merge and
    /// sanity checks.
    pub fn vertex_centroid(&self) -> Vec2 {
        let n = self.vertices.len() as f64;
        let mut c = [0.0, 0.0];
        for v in &self.vertices {
            c[0] += v[0];
            c[1] += v[1];
        }
        [c[0] / n, c[1] / n]
    }

    /// Area centroid (shoelace moments). Unlike a point-cloud mean this
    /// depends only on the covered region, not on how densely it was
    /// sampled. Falls back to the vertex mean when the area vanishes.
    pub fn area_centroid(&self) -> Vec2 {
        let v = &self.vertices;
        if v.len() < 3 {
            return self.vertex_centroid();
        }
        let mut area2 = 0.0;
        let mut cx = 0.0;
        let mut cy = 0.0;
        for i in 0..v.len() {
            let j = (i + 1) % v.len();
            let w = v[i][0] * v[j][1] - v[j][0] * v[i][1];
            area2 += w;
            cx += (v[i][0] + v[j][0]) * w;
            cy += (v[i][1] + v[j][1]) * w;
        }
        if area2.abs() < 1e-12 {
            return self.vertex_centroid();
        }
        [cx / (3.0 * area2), cy / (3.0 * area2)]
    }

    pub fn bounding_box(&self) -> (Vec2, Vec2) {
        let mut min = [f64::INFINITY, f64::INFINITY];
        let mut max = [f64::NEG_INFINITY, f64::NEG_INFINITY];
        for v in &self.vertices {
            min[0] = min[0].min(v[0]);
            min[1] = min[1].min(v[1]);
            max[0] = max[0].max(v[0]);
            max[1] = max[1].max(v[1]);
        }
        (min, max)
    }

    /// True when the point lies inside or within `tol` of the boundary.
    pub fn contains(&self, p: Vec2, tol: f64) -> bool {
        let v = &self.vertices;
        match v.len() {
            0 => false,
            1 => dist(v[0], p) <= tol,
            2 => segment_distance(p, v[0], v[1]) <= tol,
            _ => {
                for i in 0..v.len() {
                    let j = (i + 1) % v.len();
                    if cross(v[i], v[j], p) < -tol {
                        return false;
                    }
                }
                true
            }
        }
    }

    /// Distance from a point to the polygon boundary (0 only on the
    /// boundary itself; callers check containment separately).
    pub fn distance_to_boundary(&self, p: Vec2) -> f64 {
        let v = &self.vertices;
        match v.len() {
            0 => f64::INFINITY,
            1 => dist(v[0], p),
            _ => {
                let mut best = f64::INFINITY;
                for i in 0..v.len() {
                    let j = (i + 1) % v.len();
                    best = best.min(segment_distance(p, v[i], v[j]));
                }
                best
            }
        }
    }

    /// Distance from a point to the polygon as a filled region: 0 inside.
    pub fn distance_to_region(&self, p: Vec2) -> f64 {
        if self.contains(p, 0.0) {
            0.0
        } else {
            self.distance_to_boundary(p)
        }
    }
}

fn segment_distance(p: Vec2, a: Vec2, b: Vec2) -> f64 {
    let ab = sub(b, a);
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    if len2 == 0.0 {
        return dist(p, a);
    }
    let t = ((p[0] - a[0]) * ab[0] + (p[1] - a[1]) * ab[1]) / len2;
    let t = t.clamp(0.0, 1.0);
    dist(p, [a[0] + t * ab[0], a[1] + t * ab[1]])
}

/// Andrew's monotone chain. Returns CCW vertices without the duplicated
/// endpoint; collinear inputs collapse to the two extreme points.
pub fn convex_hull(points: &[Vec2]) -> Vec<Vec2> {
    let mut pts: Vec<Vec2> = points.to_vec();
    pts.sort_by(|a, b| a[0].total_cmp(&b[0]).then(a[1].total_cmp(&b[1])));
    pts.dedup();
    let n = pts.len();
    if n <= 2 {
        return pts;
    }

    let mut hull: Vec<Vec2> = Vec::with_capacity(2 * n);
    for &p in &pts {
        while hull.len() >= 2 && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0 {
            hull.pop();
        }
        hull.push(p);
    }
    let lower_len = hull.len() + 1;
    for &p in pts.iter().rev() {
        while hull.len() >= lower_len && cross(hull[hull.len() - 2], hull[hull.len() - 1], p) <= 0.0
        {
            hull.pop();
        }
        hull.push(p);
    }
    hull.pop();
    hull
}

/// Hull of the union of two polygons' vertices.
pub fn hull_of_union(a: &Polygon, b: &Polygon) -> Polygon {
    let mut pts = a.vertices().to_vec();
    pts.extend_from_slice(b.vertices());
    let hull = convex_hull(&pts);
    Polygon::from_ccw_vertices(hull)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hull_of_square_with_interior_points() {
        let mut pts = vec![[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]];
        pts.push([0.5, 0.5]);
        pts.push([0.2, 0.7]);
        let hull = convex_hull(&pts);
        assert_eq!(hull.len(), 4);
        let poly = Polygon::from_ccw_vertices(hull);
        assert!((poly.area() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn hull_of_collinear_points_is_extremes() {
        let pts = vec![[0.0, 0.0], [0.1, 0.0], [0.25, 0.0], [0.4, 0.0], [0.3, 0.0]];
        let hull = convex_hull(&pts);
        assert_eq!(hull, vec![[0.0, 0.0], [0.4, 0.0]]);
    }

    #[test]
    fn containment_and_boundary_distance() {
        let poly = Polygon::from_ccw_vertices(vec![[0.0, 0.0], [2.0, 0.0], [2.0, 2.0], [0.0, 2.0]]);
        assert!(poly.contains([1.0, 1.0], 0.0));
        assert!(poly.contains([0.0, 0.0], 1e-9));
        assert!(!poly.contains([2.1, 1.0], 1e-9));
        assert!((poly.distance_to_boundary([3.0, 1.0]) - 1.0).abs() < 1e-12);
        assert!((poly.distance_to_region([1.0, 1.0])).abs() < 1e-12);
        assert!((poly.distance_to_region([2.0, 3.0]) - 1.0).abs() < 1e-12);
        // diagonal corner distance
        assert!((poly.distance_to_region([3.0, 3.0]) - 2.0_f64.sqrt()).abs() < 1e-12);
    }

    proptest! {
        #[test]
        fn hull_contains_every_input_point(
            pts in proptest::collection::vec(
                (-5.0..5.0f64).prop_flat_map(|x| (Just(x), -5.0..5.0f64)),
                1..40,
            )
        ) {
            let pts: Vec<Vec2> = pts.into_iter().map(|(x, y)| [x, y]).collect();
            let hull = convex_hull(&pts);
            prop_assume!(hull.len() >= 3);
            let poly = Polygon::from_ccw_vertices(hull);
            prop_assert!(poly.area() >= 0.0);
            for p in &pts {
                prop_assert!(poly.contains(*p, 1e-9));
            }
        }
    }
}
