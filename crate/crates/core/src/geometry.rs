//! Geometric kernels shared by every other module.
//!
//! Conventions: meters everywhere, Z is up and the floor lies in the XY-plane.
//! Angles cross public interfaces in degrees and are converted to radians
//! internally.

use std::ops::{Add, Mul, Neg, Sub};

use serde::de::{self, Deserializer};
use serde::ser::{SerializeTuple, Serializer};
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Tolerance for `RᵀR = I` and `det R = 1`.
pub const ORTHONORMAL_TOL: f64 = 1e-9;

/// Inputs further than this from SO(3) are rejected instead of repaired.
pub const REORTHONORMALIZE_TOL: f64 = 1e-6;

/// Areas below this are treated as degenerate.
pub const DEGENERATE_AREA: f64 = 1e-9;

/// Clockwise angles are snapped to this grid (degrees) so that sector
/// boundaries such as 45° are not lost to `atan2` noise.
const ANGLE_SNAP_DEG: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum GeometryError {
    #[error("degenerate geometry: {0}")]
    DegenerateGeometry(String),
    #[error("matrix is not a rotation: {0}")]
    NotRotation(String),
    #[error("invalid polygon: {0}")]
    InvalidPolygon(String),
    #[error("invalid box: {0}")]
    InvalidBox(String),
}

/// A point or displacement in meters.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct Vec3 {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Vec3 {
    pub const ZERO: Vec3 = Vec3 { x: 0.0, y: 0.0, z: 0.0 };

    pub const fn new(x: f64, y: f64, z: f64) -> Self {
        Vec3 { x, y, z }
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }

    pub fn dot(&self, other: Vec3) -> f64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }

    pub fn cross(&self, other: Vec3) -> Vec3 {
        Vec3::new(
            self.y * other.z - self.z * other.y,
            self.z * other.x - self.x * other.z,
            self.x * other.y - self.y * other.x,
        )
    }

    pub fn norm(&self) -> f64 {
        self.dot(*self).sqrt()
    }

    pub fn distance(&self, other: Vec3) -> f64 {
        (*self - other).norm()
    }

    /// Horizontal (XY) components.
    pub fn xy(&self) -> [f64; 2] {
        [self.x, self.y]
    }

    pub fn to_array(self) -> [f64; 3] {
        [self.x, self.y, self.z]
    }
}

impl From<[f64; 3]> for Vec3 {
    fn from(a: [f64; 3]) -> Self {
        Vec3::new(a[0], a[1], a[2])
    }
}

impl Add for Vec3 {
    type Output = Vec3;
    fn add(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x + o.x, self.y + o.y, self.z + o.z)
    }
}

impl Sub for Vec3 {
    type Output = Vec3;
    fn sub(self, o: Vec3) -> Vec3 {
        Vec3::new(self.x - o.x, self.y - o.y, self.z - o.z)
    }
}

impl Neg for Vec3 {
    type Output = Vec3;
    fn neg(self) -> Vec3 {
        Vec3::new(-self.x, -self.y, -self.z)
    }
}

impl Mul<f64> for Vec3 {
    type Output = Vec3;
    fn mul(self, s: f64) -> Vec3 {
        Vec3::new(self.x * s, self.y * s, self.z * s)
    }
}

// Serialized as `[x, y, z]`, the notation used by scene files.
impl Serialize for Vec3 {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut t = serializer.serialize_tuple(3)?;
        t.serialize_element(&self.x)?;
        t.serialize_element(&self.y)?;
        t.serialize_element(&self.z)?;
        t.end()
    }
}

impl<'de> Deserialize<'de> for Vec3 {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let a = <[f64; 3]>::deserialize(deserializer)?;
        let v = Vec3::from(a);
        if !v.is_finite() {
            return Err(de::Error::custom("vector components must be finite"));
        }
        Ok(v)
    }
}

/// A proper rotation stored as a full 3×3 matrix (row-major).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation3 {
    m: [[f64; 3]; 3],
}

impl Default for Rotation3 {
    fn default() -> Self {
        Self::identity()
    }
}

impl Rotation3 {
    pub const fn identity() -> Self {
        Rotation3 {
            m: [[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    /// Counter-clockwise rotation about +Z.
    pub fn from_yaw_deg(yaw_deg: f64) -> Self {
        let (s, c) = yaw_deg.to_radians().sin_cos();
        Rotation3 {
            m: [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]],
        }
    }

    /// Rodrigues' formula. `axis` need not be normalized.
    pub fn from_axis_angle_deg(axis: Vec3, angle_deg: f64) -> Result<Self, GeometryError> {
        let n = axis.norm();
        if n <= 0.0 || !n.is_finite() {
            return Err(GeometryError::DegenerateGeometry(
                "rotation axis must be nonzero".into(),
            ));
        }
        let k = axis * (1.0 / n);
        let (s, c) = angle_deg.to_radians().sin_cos();
        let t = 1.0 - c;
        Ok(Rotation3 {
            m: [
                [t * k.x * k.x + c, t * k.x * k.y - s * k.z, t * k.x * k.z + s * k.y],
                [t * k.x * k.y + s * k.z, t * k.y * k.y + c, t * k.y * k.z - s * k.x],
                [t * k.x * k.z - s * k.y, t * k.y * k.z + s * k.x, t * k.z * k.z + c],
            ],
        })
    }

    /// Accepts a matrix within [`REORTHONORMALIZE_TOL`] of SO(3) and repairs
    /// it by Gram-Schmidt on its rows; anything further away is rejected.
    pub fn from_matrix(m: [[f64; 3]; 3]) -> Result<Self, GeometryError> {
        if m.iter().flatten().any(|v| !v.is_finite()) {
            return Err(GeometryError::NotRotation("non-finite entry".into()));
        }
        let candidate = Rotation3 { m };
        let err = candidate.orthonormality_error();
        let det = candidate.determinant();
        if err > REORTHONORMALIZE_TOL || (det - 1.0).abs() > REORTHONORMALIZE_TOL {
            return Err(GeometryError::NotRotation(format!(
                "orthonormality error {err:e}, determinant {det}"
            )));
        }
        if err <= ORTHONORMAL_TOL && (det - 1.0).abs() <= ORTHONORMAL_TOL {
            return Ok(candidate);
        }
        let r0 = Vec3::from(m[0]);
        let r1 = Vec3::from(m[1]);
        let e0 = r0 * (1.0 / r0.norm());
        let u1 = r1 - e0 * e0.dot(r1);
        let e1 = u1 * (1.0 / u1.norm());
        let e2 = e0.cross(e1);
        Ok(Rotation3 {
            m: [e0.to_array(), e1.to_array(), e2.to_array()],
        })
    }

    pub fn matrix(&self) -> [[f64; 3]; 3] {
        self.m
    }

    pub fn transpose(&self) -> Rotation3 {
        let m = self.m;
        Rotation3 {
            m: [
                [m[0][0], m[1][0], m[2][0]],
                [m[0][1], m[1][1], m[2][1]],
                [m[0][2], m[1][2], m[2][2]],
            ],
        }
    }

    pub fn apply(&self, p: Vec3) -> Vec3 {
        let m = &self.m;
        Vec3::new(
            m[0][0] * p.x + m[0][1] * p.y + m[0][2] * p.z,
            m[1][0] * p.x + m[1][1] * p.y + m[1][2] * p.z,
            m[2][0] * p.x + m[2][1] * p.y + m[2][2] * p.z,
        )
    }

    /// Matrix product `self · other`.
    pub fn product(&self, other: &Rotation3) -> Rotation3 {
        let mut out = [[0.0; 3]; 3];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = (0..3).map(|k| self.m[i][k] * other.m[k][j]).sum();
            }
        }
        Rotation3 { m: out }
    }

    pub fn determinant(&self) -> f64 {
        let m = &self.m;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Max elementwise deviation of `RᵀR` from the identity.
    pub fn orthonormality_error(&self) -> f64 {
        let rtr = self.transpose().product(self);
        let mut worst: f64 = 0.0;
        for (i, row) in rtr.m.iter().enumerate() {
            for (j, v) in row.iter().enumerate() {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((v - target).abs());
            }
        }
        worst
    }
}

/// Rigid motion `p ↦ R·p + t`.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct RigidTransform {
    pub rotation: Rotation3,
    pub translation: Vec3,
}

impl RigidTransform {
    pub const fn identity() -> Self {
        RigidTransform {
            rotation: Rotation3::identity(),
            translation: Vec3::ZERO,
        }
    }

    pub fn new(rotation: Rotation3, translation: Vec3) -> Self {
        RigidTransform { rotation, translation }
    }

    pub fn from_translation(t: Vec3) -> Self {
        RigidTransform::new(Rotation3::identity(), t)
    }

    pub fn from_yaw_deg(yaw_deg: f64, t: Vec3) -> Self {
        RigidTransform::new(Rotation3::from_yaw_deg(yaw_deg), t)
    }

    /// `self ∘ other`: applies `other` first, then `self`.
    ///
    /// Folding a running pose with each new relative transform on the right
    /// gives the accumulated frame transforms.
    pub fn compose(&self, other: &RigidTransform) -> RigidTransform {
        RigidTransform {
            rotation: self.rotation.product(&other.rotation),
            translation: self.rotation.apply(other.translation) + self.translation,
        }
    }

    pub fn apply(&self, p: Vec3) -> Vec3 {
        self.rotation.apply(p) + self.translation
    }

    pub fn invert(&self) -> RigidTransform {
        let rt = self.rotation.transpose();
        RigidTransform {
            rotation: rt,
            translation: -rt.apply(self.translation),
        }
    }

    /// The 4×4 homogeneous matrix `[[R, t], [0, 1]]`.
    pub fn to_homogeneous(&self) -> [[f64; 4]; 4] {
        let r = self.rotation.matrix();
        let t = self.translation.to_array();
        let mut h = [[0.0; 4]; 4];
        for i in 0..3 {
            h[i][..3].copy_from_slice(&r[i]);
            h[i][3] = t[i];
        }
        h[3][3] = 1.0;
        h
    }
}

pub fn compose(a: &RigidTransform, b: &RigidTransform) -> RigidTransform {
    a.compose(b)
}

pub fn apply(t: &RigidTransform, p: Vec3) -> Vec3 {
    t.apply(p)
}

pub fn invert(t: &RigidTransform) -> RigidTransform {
    t.invert()
}

/// Axis-aligned box.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aabb {
    pub min: Vec3,
    pub max: Vec3,
}

impl Aabb {
    pub fn new(min: Vec3, max: Vec3) -> Result<Self, GeometryError> {
        if !(min.is_finite() && max.is_finite()) {
            return Err(GeometryError::InvalidBox("non-finite corner".into()));
        }
        if min.x > max.x || min.y > max.y || min.z > max.z {
            return Err(GeometryError::InvalidBox(format!(
                "min {min:?} exceeds max {max:?}"
            )));
        }
        Ok(Aabb { min, max })
    }

    /// Box with the given center and full extents.
    pub fn from_center_size(center: Vec3, size: [f64; 3]) -> Self {
        let h = Vec3::new(size[0].abs() / 2.0, size[1].abs() / 2.0, size[2].abs() / 2.0);
        Aabb {
            min: center - h,
            max: center + h,
        }
    }

    pub fn center(&self) -> Vec3 {
        (self.min + self.max) * 0.5
    }

    pub fn contains(&self, p: Vec3) -> bool {
        p.x >= self.min.x
            && p.x <= self.max.x
            && p.y >= self.min.y
            && p.y <= self.max.y
            && p.z >= self.min.z
            && p.z <= self.max.z
    }

    pub fn corners(&self) -> [Vec3; 8] {
        let (a, b) = (self.min, self.max);
        [
            Vec3::new(a.x, a.y, a.z),
            Vec3::new(b.x, a.y, a.z),
            Vec3::new(a.x, b.y, a.z),
            Vec3::new(b.x, b.y, a.z),
            Vec3::new(a.x, a.y, b.z),
            Vec3::new(b.x, a.y, b.z),
            Vec3::new(a.x, b.y, b.z),
            Vec3::new(b.x, b.y, b.z),
        ]
    }

    /// Distance between the nearest boundary points; zero when the boxes
    /// overlap or touch.
    pub fn gap(&self, other: &Aabb) -> f64 {
        let axis = |amin: f64, amax: f64, bmin: f64, bmax: f64| {
            (bmin - amax).max(amin - bmax).max(0.0)
        };
        let dx = axis(self.min.x, self.max.x, other.min.x, other.max.x);
        let dy = axis(self.min.y, self.max.y, other.min.y, other.max.y);
        let dz = axis(self.min.z, self.max.z, other.min.z, other.max.z);
        (dx * dx + dy * dy + dz * dz).sqrt()
    }
}

pub fn aabb_gap(a: &Aabb, b: &Aabb) -> f64 {
    a.gap(b)
}

/// Simple polygon in the XY-plane, stored counter-clockwise.
#[derive(Debug, Clone, PartialEq)]
pub struct Polygon2 {
    vertices: Vec<[f64; 2]>,
}

impl Polygon2 {
    /// Validates vertex count, finiteness and simplicity. Clockwise input is
    /// reversed so the stored winding is always counter-clockwise.
    pub fn new(mut vertices: Vec<[f64; 2]>) -> Result<Self, GeometryError> {
        if vertices.len() < 3 {
            return Err(GeometryError::InvalidPolygon(format!(
                "need at least 3 vertices, got {}",
                vertices.len()
            )));
        }
        if vertices.iter().flatten().any(|v| !v.is_finite()) {
            return Err(GeometryError::InvalidPolygon("non-finite vertex".into()));
        }
        let n = vertices.len();
        for i in 0..n {
            for j in i + 1..n {
                // adjacent edges share a vertex by construction
                if j == i + 1 || (i == 0 && j == n - 1) {
                    continue;
                }
                let (a, b) = (vertices[i], vertices[(i + 1) % n]);
                let (c, d) = (vertices[j], vertices[(j + 1) % n]);
                if segments_intersect(a, b, c, d) {
                    return Err(GeometryError::InvalidPolygon(format!(
                        "edges {i} and {j} intersect"
                    )));
                }
            }
        }
        if signed_area(&vertices) < 0.0 {
            vertices.reverse();
        }
        Ok(Polygon2 { vertices })
    }

    /// Axis-aligned rectangle `[x0, x1] × [y0, y1]`.
    pub fn rectangle(x0: f64, y0: f64, x1: f64, y1: f64) -> Result<Self, GeometryError> {
        Polygon2::new(vec![[x0, y0], [x1, y0], [x1, y1], [x0, y1]])
    }

    pub fn vertices(&self) -> &[[f64; 2]] {
        &self.vertices
    }

    /// Shoelace area.
    pub fn area(&self) -> Result<f64, GeometryError> {
        let a = signed_area(&self.vertices).abs();
        if a < DEGENERATE_AREA {
            return Err(GeometryError::DegenerateGeometry(format!(
                "polygon area {a:e} below {DEGENERATE_AREA:e}"
            )));
        }
        Ok(a)
    }

    /// Area-weighted centroid; falls back to the vertex mean when degenerate.
    pub fn centroid(&self) -> [f64; 2] {
        let v = &self.vertices;
        let n = v.len();
        let a = signed_area(v);
        if a.abs() < DEGENERATE_AREA {
            let (sx, sy) = v.iter().fold((0.0, 0.0), |(sx, sy), p| (sx + p[0], sy + p[1]));
            return [sx / n as f64, sy / n as f64];
        }
        let (mut cx, mut cy) = (0.0, 0.0);
        for i in 0..n {
            let (p, q) = (v[i], v[(i + 1) % n]);
            let cross = p[0] * q[1] - q[0] * p[1];
            cx += (p[0] + q[0]) * cross;
            cy += (p[1] + q[1]) * cross;
        }
        [cx / (6.0 * a), cy / (6.0 * a)]
    }

    /// `(min, max)` corners of the bounding rectangle.
    pub fn bounds(&self) -> ([f64; 2], [f64; 2]) {
        let mut lo = [f64::INFINITY; 2];
        let mut hi = [f64::NEG_INFINITY; 2];
        for p in &self.vertices {
            for k in 0..2 {
                lo[k] = lo[k].min(p[k]);
                hi[k] = hi[k].max(p[k]);
            }
        }
        (lo, hi)
    }

    /// Point-in-polygon; points on the boundary count as inside.
    pub fn contains(&self, p: [f64; 2]) -> bool {
        let v = &self.vertices;
        let n = v.len();
        for i in 0..n {
            if on_segment(v[i], v[(i + 1) % n], p) {
                return true;
            }
        }
        let mut inside = false;
        let mut j = n - 1;
        for i in 0..n {
            let (a, b) = (v[i], v[j]);
            if (a[1] > p[1]) != (b[1] > p[1]) {
                let x = a[0] + (p[1] - a[1]) * (b[0] - a[0]) / (b[1] - a[1]);
                if p[0] < x {
                    inside = !inside;
                }
            }
            j = i;
        }
        inside
    }
}

pub fn polygon_area(p: &Polygon2) -> Result<f64, GeometryError> {
    p.area()
}

fn signed_area(v: &[[f64; 2]]) -> f64 {
    let n = v.len();
    let mut s = 0.0;
    for i in 0..n {
        let (p, q) = (v[i], v[(i + 1) % n]);
        s += p[0] * q[1] - q[0] * p[1];
    }
    s / 2.0
}

fn orient(a: [f64; 2], b: [f64; 2], c: [f64; 2]) -> f64 {
    (b[0] - a[0]) * (c[1] - a[1]) - (b[1] - a[1]) * (c[0] - a[0])
}

fn on_segment(a: [f64; 2], b: [f64; 2], p: [f64; 2]) -> bool {
    orient(a, b, p).abs() <= 1e-12 * (1.0 + (b[0] - a[0]).abs() + (b[1] - a[1]).abs())
        && p[0] >= a[0].min(b[0]) - 1e-12
        && p[0] <= a[0].max(b[0]) + 1e-12
        && p[1] >= a[1].min(b[1]) - 1e-12
        && p[1] <= a[1].max(b[1]) + 1e-12
}

fn segments_intersect(a: [f64; 2], b: [f64; 2], c: [f64; 2], d: [f64; 2]) -> bool {
    let (d1, d2) = (orient(c, d, a), orient(c, d, b));
    let (d3, d4) = (orient(a, b, c), orient(a, b, d));
    if ((d1 > 0.0 && d2 < 0.0) || (d1 < 0.0 && d2 > 0.0))
        && ((d3 > 0.0 && d4 < 0.0) || (d3 < 0.0 && d4 > 0.0))
    {
        return true;
    }
    on_segment(c, d, a) || on_segment(c, d, b) || on_segment(a, b, c) || on_segment(a, b, d)
}

/// Angle in `[0, 360)` swept clockwise (viewed from +Z) from `front` to
/// `to_target`. Only directions matter; neither vector needs unit length.
pub fn clockwise_angle_deg(front: [f64; 2], to_target: [f64; 2]) -> Result<f64, GeometryError> {
    let nf = front[0].hypot(front[1]);
    let nt = to_target[0].hypot(to_target[1]);
    if !(nf > 0.0 && nt > 0.0) || !nf.is_finite() || !nt.is_finite() {
        return Err(GeometryError::DegenerateGeometry(
            "direction vectors must be nonzero".into(),
        ));
    }
    let (f, t) = ([front[0] / nf, front[1] / nf], [to_target[0] / nt, to_target[1] / nt]);
    let cross = f[0] * t[1] - f[1] * t[0];
    let dot = f[0] * t[0] + f[1] * t[1];
    let ccw = cross.atan2(dot).to_degrees();
    let snapped = ((-ccw) / ANGLE_SNAP_DEG).round() * ANGLE_SNAP_DEG;
    let mut cw = snapped.rem_euclid(360.0);
    if cw >= 360.0 {
        cw = 0.0;
    }
    // rem_euclid of -0.0 stays -0.0
    Ok(cw + 0.0)
}

/// Slab test: does the segment `origin + s·dir̂`, `s ∈ [0, max_dist]`,
/// touch the box?
pub fn ray_hits_aabb(origin: Vec3, dir: Vec3, b: &Aabb, max_dist: f64) -> bool {
    let n = dir.norm();
    if n.is_nan() || n <= 0.0 || max_dist < 0.0 {
        return false;
    }
    let d = dir * (1.0 / n);
    let mut t0: f64 = 0.0;
    let mut t1: f64 = max_dist;
    for (o, dv, lo, hi) in [
        (origin.x, d.x, b.min.x, b.max.x),
        (origin.y, d.y, b.min.y, b.max.y),
        (origin.z, d.z, b.min.z, b.max.z),
    ] {
        if dv == 0.0 {
            if o < lo || o > hi {
                return false;
            }
            continue;
        }
        let (mut ta, mut tb) = ((lo - o) / dv, (hi - o) / dv);
        if ta > tb {
            std::mem::swap(&mut ta, &mut tb);
        }
        t0 = t0.max(ta);
        t1 = t1.min(tb);
        if t0 > t1 {
            return false;
        }
    }
    true
}
