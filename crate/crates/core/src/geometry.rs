//! Planar and spatial primitives shared by every stage of the pipeline,
//! plus the closed-form least-squares SE(2) solver used for pose voting.

use std::f64::consts::PI;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::{Matrix2, Vector2};

use crate::error::{Error, Result};

/// Wraps an angle into `[-pi, pi)`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut w = (a + PI).rem_euclid(2.0 * PI) - PI;
    // rem_euclid can round up to exactly 2*pi for tiny negative inputs
    if w >= PI {
        w -= 2.0 * PI;
    }
    w
}

/// Signed smallest difference `a - b`, wrapped into `[-pi, pi)`.
pub fn angle_diff(a: f64, b: f64) -> f64 {
    wrap_angle(a - b)
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z-component of the 3D cross product.
    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn norm_squared(self) -> f64 {
        self.dot(self)
    }

    pub fn distance(self, o: Point2) -> f64 {
        (self - o).norm()
    }

    pub fn normalized(self) -> Point2 {
        let n = self.norm();
        Point2::new(self.x / n, self.y / n)
    }

    /// Counter-clockwise perpendicular.
    pub fn perp(self) -> Point2 {
        Point2::new(-self.y, self.x)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl Add for Point2 {
    type Output = Point2;
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq)]
pub struct Point3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Point3 {
    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Point3 { x, y, z }
    }

    /// Drops the z coordinate.
    pub fn xy(self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn distance(self, o: Point3) -> f64 {
        ((self.x - o.x).powi(2) + (self.y - o.y).powi(2) + (self.z - o.z).powi(2)).sqrt()
    }
}

/// A planar rigid transform. `yaw` is always kept in `[-pi, pi)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Se2Pose {
    pub x: f64,
    pub y: f64,
    yaw: f64,
}

impl Default for Se2Pose {
    fn default() -> Self {
        Se2Pose::IDENTITY
    }
}

impl Se2Pose {
    pub const IDENTITY: Se2Pose = Se2Pose { x: 0.0, y: 0.0, yaw: 0.0 };

    pub fn new(x: f64, y: f64, yaw: f64) -> Self {
        Se2Pose { x, y, yaw: wrap_angle(yaw) }
    }

    pub fn yaw(&self) -> f64 {
        self.yaw
    }

    pub fn translation(&self) -> Point2 {
        Point2::new(self.x, self.y)
    }

    /// Row-major 2x2 rotation.
    pub fn rotation(&self) -> [[f64; 2]; 2] {
        let (s, c) = self.yaw.sin_cos();
        [[c, -s], [s, c]]
    }

    pub fn apply(&self, p: Point2) -> Point2 {
        let (s, c) = self.yaw.sin_cos();
        Point2::new(c * p.x - s * p.y + self.x, s * p.x + c * p.y + self.y)
    }

    /// Rotates a direction without translating it.
    pub fn rotate(&self, v: Point2) -> Point2 {
        let (s, c) = self.yaw.sin_cos();
        Point2::new(c * v.x - s * v.y, s * v.x + c * v.y)
    }

    /// `self ∘ other`: applies `other` first, then `self`.
    pub fn compose(&self, other: &Se2Pose) -> Se2Pose {
        let t = self.apply(other.translation());
        Se2Pose::new(t.x, t.y, self.yaw + other.yaw)
    }

    pub fn inverse(&self) -> Se2Pose {
        let (s, c) = self.yaw.sin_cos();
        Se2Pose::new(-(c * self.x + s * self.y), s * self.x - c * self.y, -self.yaw)
    }
}

/// Applies `pose` to `p`: `R(yaw)·p + t`.
pub fn se2_apply(pose: &Se2Pose, p: Point2) -> Point2 {
    pose.apply(p)
}

/// A 2D wall segment with positive length.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LineSegment2 {
    pub p0: Point2,
    pub p1: Point2,
}

impl LineSegment2 {
    pub fn new(p0: Point2, p1: Point2) -> Result<Self> {
        if !p0.is_finite() || !p1.is_finite() {
            return Err(Error::InvalidArgument("segment endpoint is not finite".into()));
        }
        if p0.distance(p1) <= 0.0 {
            return Err(Error::InvalidArgument("segment has zero length".into()));
        }
        Ok(LineSegment2 { p0, p1 })
    }

    pub fn length(&self) -> f64 {
        self.p0.distance(self.p1)
    }

    /// Unit vector from `p0` towards `p1`.
    pub fn direction(&self) -> Point2 {
        (self.p1 - self.p0).normalized()
    }

    pub fn midpoint(&self) -> Point2 {
        (self.p0 + self.p1) * 0.5
    }

    pub fn transformed(&self, pose: &Se2Pose) -> LineSegment2 {
        LineSegment2 { p0: pose.apply(self.p0), p1: pose.apply(self.p1) }
    }

    /// Lengthens the segment by `d` at both ends.
    pub fn extended(&self, d: f64) -> LineSegment2 {
        let u = self.direction();
        LineSegment2 { p0: self.p0 - u * d, p1: self.p1 + u * d }
    }

    pub fn distance_to_point(&self, p: Point2) -> f64 {
        let d = self.p1 - self.p0;
        let t = ((p - self.p0).dot(d) / d.norm_squared()).clamp(0.0, 1.0);
        p.distance(self.p0 + d * t)
    }

    /// Distance from `p` to the infinite supporting line.
    pub fn line_distance(&self, p: Point2) -> f64 {
        self.direction().cross(p - self.p0).abs()
    }

    /// Minimum distance between two segments (0 when they intersect).
    pub fn segment_distance(&self, o: &LineSegment2) -> f64 {
        if self.intersection(o).is_some() {
            return 0.0;
        }
        self.distance_to_point(o.p0)
            .min(self.distance_to_point(o.p1))
            .min(o.distance_to_point(self.p0))
            .min(o.distance_to_point(self.p1))
    }

    /// Intersection point of two segments, if they properly cross or touch.
    pub fn intersection(&self, o: &LineSegment2) -> Option<Point2> {
        let r = self.p1 - self.p0;
        let s = o.p1 - o.p0;
        let denom = r.cross(s);
        if denom.abs() < 1e-12 * r.norm() * s.norm() {
            return None;
        }
        let qp = o.p0 - self.p0;
        let t = qp.cross(s) / denom;
        let u = qp.cross(r) / denom;
        if (0.0..=1.0).contains(&t) && (0.0..=1.0).contains(&u) {
            Some(self.p0 + r * t)
        } else {
            None
        }
    }
}

/// Acute angle in degrees (`[0, 90]`) between two undirected lines.
pub fn line_angle_deg(u: Point2, v: Point2) -> f64 {
    u.cross(v).abs().atan2(u.dot(v).abs()).to_degrees()
}

/// Least-squares proper rigid alignment of `src` onto `dst`.
///
/// Returns the pose minimizing `Σ‖R·src_i + t − dst_i‖²` with `det R = +1`
/// and the RMS of the remaining point errors.
pub fn solve_se2(src: &[Point2], dst: &[Point2]) -> Result<(Se2Pose, f64)> {
    if src.len() != dst.len() {
        return Err(Error::InvalidArgument(format!("point count mismatch: {} vs {}", src.len(), dst.len())));
    }
    if src.len() < 2 {
        return Err(Error::DegenerateInput("need at least two point pairs"));
    }
    let n = src.len() as f64;
    let cs = src.iter().fold(Point2::ORIGIN, |a, &p| a + p) * (1.0 / n);
    let cd = dst.iter().fold(Point2::ORIGIN, |a, &p| a + p) * (1.0 / n);
    if src.iter().all(|p| p.distance(cs) <= 1e-9) {
        return Err(Error::DegenerateInput("all source points coincide"));
    }

    let mut h = Matrix2::zeros();
    for (s, d) in src.iter().zip(dst) {
        let a = Vector2::new(s.x - cs.x, s.y - cs.y);
        let b = Vector2::new(d.x - cd.x, d.y - cd.y);
        h += a * b.transpose();
    }
    let svd = h.svd(true, true);
    let (u, v_t) = match (svd.u, svd.v_t) {
        (Some(u), Some(v_t)) => (u, v_t),
        _ => return Err(Error::DegenerateInput("singular value decomposition failed")),
    };
    let v = v_t.transpose();
    let sign = (v * u.transpose()).determinant().signum();
    let fix = Matrix2::new(1.0, 0.0, 0.0, if sign < 0.0 { -1.0 } else { 1.0 });
    let r = v * fix * u.transpose();
    let yaw = r[(1, 0)].atan2(r[(0, 0)]);
    let pose0 = Se2Pose::new(0.0, 0.0, yaw);
    let rc = pose0.rotate(cs);
    let pose = Se2Pose::new(cd.x - rc.x, cd.y - rc.y, yaw);

    let sq: f64 = src.iter().zip(dst).map(|(s, d)| (pose.apply(*s) - *d).norm_squared()).sum();
    Ok((pose, (sq / n).sqrt()))
}

/// Geodesic rotation error (degrees) and body-frame translation error (m)
/// between two planar poses, lifted to 3D with zero roll, pitch and z.
pub fn pose_errors(est: &Se2Pose, gt: &Se2Pose) -> (f64, f64) {
    let re = est.rotation();
    let rg = gt.rotation();
    // tr(R_est^T R_gt) for the 3x3 lift; the z-axis contributes 1
    let mut tr = 1.0;
    for i in 0..2 {
        for k in 0..2 {
            tr += re[k][i] * rg[k][i];
        }
    }
    let rot_err = ((tr - 1.0) / 2.0).clamp(-1.0, 1.0).acos().to_degrees();
    let dt = gt.translation() - est.translation();
    let body = Point2::new(re[0][0] * dt.x + re[1][0] * dt.y, re[0][1] * dt.x + re[1][1] * dt.y);
    (rot_err, body.norm())
}

/// Success test of a registration against ground truth.
pub fn registration_success(est: &Se2Pose, gt: &Se2Pose, rot_tol_deg: f64, trans_tol_m: f64) -> bool {
    let (r, t) = pose_errors(est, gt);
    r < rot_tol_deg && t < trans_tol_m
}
