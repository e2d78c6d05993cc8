//! Rotations, ZXZ Euler angles and the octahedral group.

use std::f64::consts::PI;
use std::ops::Mul;
use std::sync::LazyLock;

use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use rand_distr::StandardNormal;

/// An element of SO(3), stored as its 3×3 matrix.
///
/// Columns are the images of the coordinate axes, i.e. the three axes of
/// the rotated cross.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rotation(Matrix3<f64>);

impl Rotation {
    pub fn identity() -> Self {
        Rotation(Matrix3::identity())
    }

    /// Wrap a matrix, checking orthonormality and orientation to `1e-12`.
    pub fn from_matrix(m: Matrix3<f64>) -> Option<Self> {
        let r = Rotation(m);
        (r.orthonormality_error() <= 1e-12 && (m.determinant() - 1.0).abs() <= 1e-12).then_some(r)
    }

    /// Wrap a matrix the caller knows to be a rotation.
    pub fn from_matrix_unchecked(m: Matrix3<f64>) -> Self {
        Rotation(m)
    }

    /// Rotation by `angle` radians about `axis` (need not be normalized).
    pub fn about_axis(axis: Vector3<f64>, angle: f64) -> Self {
        let k = axis.normalize();
        let (s, c) = angle.sin_cos();
        let kx = k.cross_matrix();
        Rotation(Matrix3::identity() + kx * s + kx * kx * (1.0 - c))
    }

    /// Rotation of the unit quaternion `(w, x, y, z)` (normalized here).
    pub fn from_quaternion(w: f64, x: f64, y: f64, z: f64) -> Self {
        let n = (w * w + x * x + y * y + z * z).sqrt();
        let (w, x, y, z) = (w / n, x / n, y / n, z / n);
        Rotation(Matrix3::new(
            1.0 - 2.0 * (y * y + z * z),
            2.0 * (x * y - z * w),
            2.0 * (x * z + y * w),
            2.0 * (x * y + z * w),
            1.0 - 2.0 * (x * x + z * z),
            2.0 * (y * z - x * w),
            2.0 * (x * z - y * w),
            2.0 * (y * z + x * w),
            1.0 - 2.0 * (x * x + y * y),
        ))
    }

    /// Haar-uniform random rotation from four normalized Gaussians.
    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut q = [0.0; 4];
        for c in q.iter_mut() {
            *c = rng.sample(StandardNormal);
        }
        Self::from_quaternion(q[0], q[1], q[2], q[3])
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    /// Axis `q` (0-based) of the rotated frame.
    pub fn column(&self, q: usize) -> Vector3<f64> {
        self.0.column(q).into_owned()
    }

    pub fn transpose(&self) -> Self {
        Rotation(self.0.transpose())
    }

    /// Largest entry of `RᵀR − I` in absolute value.
    pub fn orthonormality_error(&self) -> f64 {
        (self.0.transpose() * self.0 - Matrix3::identity()).amax()
    }

    /// Geodesic angle in `[0, π]`.
    ///
    /// Uses `atan2` of the axial vector against the cosine so that both
    /// small and near-π angles keep full precision.
    pub fn angle(&self) -> f64 {
        let m = &self.0;
        let sin_axis = Vector3::new(m[(2, 1)] - m[(1, 2)], m[(0, 2)] - m[(2, 0)], m[(1, 0)] - m[(0, 1)]);
        let cos = 0.5 * (m.trace() - 1.0);
        (0.5 * sin_axis.norm()).atan2(cos)
    }

    pub fn to_euler(&self) -> EulerAngles {
        EulerAngles::from_rotation(self)
    }
}

impl Mul for Rotation {
    type Output = Rotation;

    fn mul(self, rhs: Rotation) -> Rotation {
        Rotation(self.0 * rhs.0)
    }
}

impl Mul<Vector3<f64>> for Rotation {
    type Output = Vector3<f64>;

    fn mul(self, rhs: Vector3<f64>) -> Vector3<f64> {
        self.0 * rhs
    }
}

/// ZXZ Euler angles: `R = Z(alpha) · X(beta) · Z(gamma)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EulerAngles {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

impl EulerAngles {
    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self { alpha, beta, gamma }
    }

    pub fn to_rotation(&self) -> Rotation {
        let (s1, c1) = self.alpha.sin_cos();
        let (s2, c2) = self.beta.sin_cos();
        let (s3, c3) = self.gamma.sin_cos();
        Rotation(Matrix3::new(
            c1 * c3 - c2 * s1 * s3,
            -c1 * s3 - c3 * c2 * s1,
            s2 * s1,
            c1 * c2 * s3 + c3 * s1,
            c1 * c2 * c3 - s1 * s3,
            -c1 * s2,
            s3 * s2,
            c3 * s2,
            c2,
        ))
    }

    /// Inverse of [`EulerAngles::to_rotation`].
    ///
    /// Returns `alpha, gamma ∈ [−π, π)` and `beta ∈ [0, π]`. When `beta` is
    /// 0 or π only the sum (resp. difference) of the in-plane angles is
    /// defined; `gamma` is then set to 0.
    pub fn from_rotation(r: &Rotation) -> Self {
        let m = &r.0;
        let sin_beta = m[(0, 2)].hypot(m[(1, 2)]);
        let beta = sin_beta.atan2(m[(2, 2)]);
        // The upper 2×2 block carries α+γ scaled by 1+cos β and α−γ scaled
        // by 1−cos β; each is well conditioned away from its own pole.
        let sum = (m[(1, 0)] - m[(0, 1)]).atan2(m[(0, 0)] + m[(1, 1)]);
        let diff = (m[(1, 0)] + m[(0, 1)]).atan2(m[(0, 0)] - m[(1, 1)]);

        if sin_beta < 1e-12 {
            let alpha = if m[(2, 2)] > 0.0 { sum } else { diff };
            return Self::new(wrap_angle(alpha), beta, 0.0);
        }

        let alpha = m[(0, 2)].atan2(-m[(1, 2)]);
        let gamma = if m[(2, 2)] >= 0.0 { sum - alpha } else { alpha - diff };
        Self::new(wrap_angle(alpha), beta, wrap_angle(gamma))
    }
}

/// Map an angle into `[−π, π)`.
pub fn wrap_angle(a: f64) -> f64 {
    let w = (a + PI).rem_euclid(2.0 * PI) - PI;
    if w >= PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// The 24 rotations mapping `{±e₁, ±e₂, ±e₃}` onto itself.
#[derive(Debug, Clone)]
pub struct OctahedralGroup {
    elements: Vec<Rotation>,
}

static OCTAHEDRAL: LazyLock<OctahedralGroup> = LazyLock::new(OctahedralGroup::build);

impl OctahedralGroup {
    /// Shared instance; the group is built once.
    pub fn get() -> &'static OctahedralGroup {
        &OCTAHEDRAL
    }

    /// Signed permutation matrices with determinant +1, identity first.
    fn build() -> Self {
        const PERMS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];
        let mut elements = Vec::with_capacity(24);
        for perm in PERMS {
            for signs in 0..8u8 {
                let mut m = Matrix3::zeros();
                for (row, &col) in perm.iter().enumerate() {
                    m[(row, col)] = if signs & (1 << row) != 0 { -1.0 } else { 1.0 };
                }
                if m.determinant() > 0.0 {
                    elements.push(Rotation(m));
                }
            }
        }
        debug_assert_eq!(elements.len(), 24);
        Self { elements }
    }

    pub fn elements(&self) -> &[Rotation] {
        &self.elements
    }

    pub fn len(&self) -> usize {
        self.elements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.elements.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Rotation> {
        self.elements.iter()
    }

    /// Exact membership test (entries of group elements are 0 and ±1).
    pub fn contains(&self, r: &Rotation) -> bool {
        self.elements.iter().any(|g| g.0 == r.0)
    }
}

pub fn octahedral_elements() -> OctahedralGroup {
    OctahedralGroup::get().clone()
}

/// Distance between the crosses of two rotations: the smallest geodesic
/// angle of `R1 g R2ᵀ` over the octahedral group.
pub fn cross_distance(r1: &Rotation, r2: &Rotation) -> f64 {
    let r2t = r2.0.transpose();
    OctahedralGroup::get()
        .iter()
        .map(|g| Rotation(r1.0 * g.0 * r2t).angle())
        .fold(f64::INFINITY, f64::min)
}
