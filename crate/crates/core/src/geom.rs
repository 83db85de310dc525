//! Small fixed-size vector math used throughout the crate.

use std::ops::{Add, AddAssign, Div, Mul, Neg, Sub};

/// A point or vector in 3D, double precision.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

pub const fn vec3(x: f64, y: f64, z: f64) -> Vec3 {
    Vec3 { x, y, z }
}

impl Vec3 {
    pub const ZERO: Vec3 = vec3(0.0, 0.0, 0.0);

    pub fn dot(self, o: Vec3) -> f64 {
        self.x * o.x + self.y * o.y + self.z * o.z
    }

    pub fn cross(self, o: Vec3) -> Vec3 {
        vec3(
            self.y * o.z - self.z * o.y,
            self.z * o.x - self.x * o.z,
            self.x * o.y - self.y * o.x,
        )
    }

    pub fn norm2(self) -> f64 {
        self.dot(self)
    }

    pub fn norm(self) -> f64 {
        self.norm2().sqrt()
    }

    /// Unit vector, or `None` if the norm is too small to normalize reliably.
    pub fn normalized(self) -> Option<Vec3> {
        let n = self.norm();
        if n > 1e-300 {
            Some(self / n)
        } else {
            None
        }
    }

    pub fn distance(self, o: Vec3) -> f64 {
        (self - o).norm()
    }

    pub fn component(self, axis: usize) -> f64 {
        match axis {
            0 => self.x,
            1 => self.y,
            _ => self.z,
        }
    }

    pub fn min(self, o: Vec3) -> Vec3 {
        vec3(self.x.min(o.x), self.y.min(o.y), self.z.min(o.z))
    }

    pub fn max(self, o: Vec3) -> Vec3 {
        vec3(self.x.max(o.x), self.y.max(o.y), self.z.max(o.z))
    }

    pub fn abs(self) -> Vec3 {
        vec3(self.x.abs(), self.y.abs(), self.z.abs())
    }

    pub fn max_component(self) -> f64 {
        self.x.max(self.y).max(self.z)
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }

    pub fn from_array(a: [f64; 3]) -> Vec3 {
        vec3(a[0], a[1], a[2])
    }

    /// Some unit vector orthogonal to `self` (which must be nonzero).
    pub fn any_orthonormal(self) -> Vec3 {
        // Cross with the axis the vector is least aligned with.
        let a = self.abs();
        let other = if a.x <= a.y && a.x <= a.z {
            vec3(1.0, 0.0, 0.0)
        } else if a.y <= a.z {
            vec3(0.0, 1.0, 0.0)
        } else {
            vec3(0.0, 0.0, 1.0)
        };
        self.cross(other).normalized().expect("nonzero input")
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        vec3(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl AddAssign for Vec3 {
    fn add_assign(&mut self, o: Vec3) {
        *self = *self + o;
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        vec3(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        vec3(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        vec3(self.x * s, self.y * s, self.z * s)
    }
}

impl Mul<Vec3> for f64 {
    type Output = Vec3;
    fn mul(self, v: Vec3) -> Vec3 {
        v * self
    }
}

impl Div<f64> for Vec3 {
    type Output = Vec3;
    fn div(self, s: f64) -> Vec3 {
        vec3(self.x / s, self.y / s, self.z / s)
    }
}

/// Axis-aligned bounding box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    /// An empty box that grows to fit the first point it absorbs.
    pub fn empty() -> Aabb {
        Aabb {
            min: vec3(f64::INFINITY, f64::INFINITY, f64::INFINITY),
            max: vec3(f64::NEG_INFINITY, f64::NEG_INFINITY, f64::NEG_INFINITY),
        }
    }

    pub fn from_points<I: IntoIterator<Item = Vec3>>(points: I) -> Aabb {
        let mut b = Aabb::empty();
        for p in points {
            b.absorb(p);
        }
        b
    }

    pub fn absorb(&mut self, p: Vec3) {
        self.min = self.min.min(p);
        self.max = self.max.max(p);
    }

    pub fn merge(&self, o: &Aabb) -> Aabb {
        Aabb {
            min: self.min.min(o.min),
            max: self.max.max(o.max),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.min.x > self.max.x
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn extent(&self) -> Vec3 {
        self.max - self.min
    }

    /// Largest dimension of the box.
    pub fn largest_dimension(&self) -> f64 {
        self.extent().max_component()
    }

    /// Closed-interval overlap test.
    pub fn intersects(&self, o: &Aabb) -> bool {
        self.min.x <= o.max.x
            && o.min.x <= self.max.x
            && self.min.y <= o.max.y
            && o.min.y <= self.max.y
            && self.min.z <= o.max.z
            && o.min.z <= self.max.z
    }

    pub fn contains(&self, p: Vec3) -> bool {
        p.x >= self.min.x
            && p.x <= self.max.x
            && p.y >= self.min.y
            && p.y <= self.max.y
            && p.z >= self.min.z
            && p.z <= self.max.z
    }

    /// Clamp a point componentwise into the box.
    pub fn clamp(&self, p: Vec3) -> Vec3 {
        p.max(self.min).min(self.max)
    }
}

/// Unnormalized triangle normal `(b - a) x (c - a)`; its norm is twice the area.
pub fn triangle_normal(a: Vec3, b: Vec3, c: Vec3) -> Vec3 {
    (b - a).cross(c - a)
}

pub fn triangle_area(a: Vec3, b: Vec3, c: Vec3) -> f64 {
    0.5 * triangle_normal(a, b, c).norm()
}

/// Circumradius of a triangle: `abc / (4 area)`. Returns `INFINITY` for
/// degenerate (near collinear) triangles.
pub fn triangle_circumradius(a: Vec3, b: Vec3, c: Vec3) -> f64 {
    let la = (b - c).norm();
    let lb = (a - c).norm();
    let lc = (a - b).norm();
    let area = triangle_area(a, b, c);
    if area <= f64::MIN_POSITIVE * la.max(lb).max(lc) {
        return f64::INFINITY;
    }
    la * lb * lc / (4.0 * area)
}

/// Signed volume of the tetrahedron `(a, b, c, d)`; positive when `d` lies on
/// the side the right-hand rule normal of `(a, b, c)` points to.
pub fn tet_signed_volume(a: Vec3, b: Vec3, c: Vec3, d: Vec3) -> f64 {
    (b - a).cross(c - a).dot(d - a) / 6.0
}

/// Solve a 3x3 linear system `m * x = rhs` by Cramer's rule. `None` when the
/// determinant magnitude falls below `det_floor`.
pub fn solve3(m: [[f64; 3]; 3], rhs: [f64; 3], det_floor: f64) -> Option<[f64; 3]> {
    let det = det3(m);
    if det.abs() <= det_floor {
        return None;
    }
    let mut out = [0.0; 3];
    for (col, slot) in out.iter_mut().enumerate() {
        let mut mc = m;
        for r in 0..3 {
            mc[r][col] = rhs[r];
        }
        *slot = det3(mc) / det;
    }
    Some(out)
}

pub fn det3(m: [[f64; 3]; 3]) -> f64 {
    m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
        - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
        + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
}

/// Eigenvalues of the symmetric 2x2 matrix `[[e, f], [f, g]]`.
pub fn sym2_eigenvalues(e: f64, f: f64, g: f64) -> (f64, f64) {
    let mean = 0.5 * (e + g);
    let disc = (0.5 * (e - g)).hypot(f);
    (mean + disc, mean - disc)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cross_right_handed() {
        let x = vec3(1.0, 0.0, 0.0);
        let y = vec3(0.0, 1.0, 0.0);
        assert_eq!(x.cross(y), vec3(0.0, 0.0, 1.0));
    }

    #[test]
    fn aabb_from_points() {
        let b = Aabb::from_points([vec3(0.0, 2.0, -1.0), vec3(1.0, 0.0, 3.0)]);
        assert_eq!(b.min, vec3(0.0, 0.0, -1.0));
        assert_eq!(b.max, vec3(1.0, 2.0, 3.0));
        assert_eq!(b.largest_dimension(), 4.0);
    }

    #[test]
    fn unit_tet_volume() {
        let v = tet_signed_volume(
            vec3(0.0, 0.0, 0.0),
            vec3(1.0, 0.0, 0.0),
            vec3(0.0, 1.0, 0.0),
            vec3(0.0, 0.0, 1.0),
        );
        assert!((v - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn equilateral_circumradius() {
        // Side 1 equilateral: R = 1/sqrt(3).
        let r = triangle_circumradius(
            vec3(0.0, 0.0, 0.0),
            vec3(1.0, 0.0, 0.0),
            vec3(0.5, 3f64.sqrt() / 2.0, 0.0),
        );
        assert!((r - 1.0 / 3f64.sqrt()).abs() < 1e-12);
    }

    #[test]
    fn sym2_eig() {
        let (l1, l2) = sym2_eigenvalues(2.0, 0.0, 1.0);
        assert_eq!((l1, l2), (2.0, 1.0));
        let (l1, l2) = sym2_eigenvalues(0.0, 1.0, 0.0);
        assert!((l1 - 1.0).abs() < 1e-15 && (l2 + 1.0).abs() < 1e-15);
    }

    #[test]
    fn solve3_identity() {
        let x = solve3([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]], [3.0, 4.0, 5.0], 0.0)
            .unwrap();
        assert_eq!(x, [3.0, 4.0, 5.0]);
    }

    #[test]
    fn orthonormal_helper() {
        for v in [vec3(1.0, 2.0, 3.0), vec3(0.0, 0.0, 1.0), vec3(-2.0, 0.1, 0.0)] {
            let u = v.any_orthonormal();
            assert!(u.dot(v).abs() < 1e-12);
            assert!((u.norm() - 1.0).abs() < 1e-12);
        }
    }
}
