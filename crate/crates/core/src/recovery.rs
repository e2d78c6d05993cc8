//! Rotation recovery from cross tensors and projection onto the cross
//! manifold.
//!
//! Recovery works on the Mandel matrix `M`. The eigenvectors of its three
//! largest eigenvalues are symmetric 3×3 eigentensors `D₁, D₂, D₃`; for an
//! exact cross they share the cross axes as eigenvectors. Their sum gives
//! the initial frame, which is then refined by jointly diagonalizing the
//! three eigentensors. The refinement depends only on the spanned
//! subspace, so the result does not depend on how the eigensolver picked
//! a basis inside a repeated eigenvalue, and it remains a close
//! approximation of the true projection when `M` is off the manifold.

use nalgebra::Matrix3;

use crate::error::RecoveryError;
use crate::linalg::{joint_diagonalize, SymmetricEigen};
use crate::rotation::{EulerAngles, OctahedralGroup, Rotation};
use crate::simplex::NelderMead;
use crate::tensor::{CrossTensor9, Mandel6, SymTensor2, ValidationReport};

/// Eigenvalue gaps below this make the recovered frame ill-defined.
pub const DEGENERACY_THRESHOLD: f64 = 1e-9;

/// Below this normalized 3×3 gap the summed eigentensor is replaced by a
/// better separated combination before refinement.
const WEAK_GAP: f64 = 1e-3;

const COMBINATIONS: [[f64; 3]; 10] = [
    [1.0, 1.0, 1.0],
    [1.0, 1.0, -1.0],
    [1.0, -1.0, 1.0],
    [-1.0, 1.0, 1.0],
    [1.0, -1.0, 0.0],
    [1.0, 0.0, -1.0],
    [0.0, 1.0, -1.0],
    [1.0, 0.0, 0.0],
    [0.0, 1.0, 0.0],
    [0.0, 0.0, 1.0],
];

/// Frame recovered from a Mandel matrix together with the spectral gaps
/// that decide whether it is well defined.
#[derive(Debug, Clone, Copy)]
pub struct Recovery {
    pub rotation: Rotation,
    /// Gap between the third and fourth largest Mandel eigenvalues.
    pub subspace_gap: f64,
    /// Smallest eigenvalue gap of the 3×3 tensor that seeded the frame.
    pub frame_gap: f64,
}

impl Recovery {
    pub fn is_degenerate(&self) -> bool {
        !(self.subspace_gap >= DEGENERACY_THRESHOLD && self.frame_gap >= DEGENERACY_THRESHOLD)
    }

    pub fn gap(&self) -> f64 {
        self.subspace_gap.min(self.frame_gap)
    }
}

/// Best-effort recovery that always returns a frame.
pub fn recover(m: &Mandel6) -> Recovery {
    let eig = SymmetricEigen::<6>::new(m.matrix());
    let subspace_gap = eig.values[3] - eig.values[2];
    let tensors: [Matrix3<f64>; 3] = std::array::from_fn(|k| {
        let d = *SymTensor2::from_vec6(&eig.vectors.column(3 + k).into_owned()).matrix();
        // tr(D³) flips with the sign of D and is rotation invariant.
        let cubic = (d * d * d).trace();
        if cubic < -1e-12 {
            -d
        } else {
            d
        }
    });

    let (start, frame_gap) = initial_frame(&tensors);
    let mut frame = joint_diagonalize(&tensors, &start);
    if frame.determinant() < 0.0 {
        frame.set_column(2, &(-frame.column(2)));
    }
    Recovery {
        rotation: Rotation::from_matrix_unchecked(frame),
        subspace_gap,
        frame_gap,
    }
}

/// Eigenvectors of the summed eigentensor, or of the best separated
/// signed combination when the sum has a (nearly) repeated spectrum.
fn initial_frame(tensors: &[Matrix3<f64>; 3]) -> (Matrix3<f64>, f64) {
    let combine = |w: &[f64; 3]| -> (SymmetricEigen<3>, f64) {
        let d = tensors[0] * w[0] + tensors[1] * w[1] + tensors[2] * w[2];
        let eig = SymmetricEigen::<3>::new(&d);
        let norm = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        let gap = eig.min_gap();
        (eig, gap / norm)
    };

    let (first, first_gap) = combine(&COMBINATIONS[0]);
    if first_gap >= WEAK_GAP {
        return (first.vectors, first.min_gap());
    }
    let mut best = (first, first_gap);
    for w in &COMBINATIONS[1..] {
        let candidate = combine(w);
        if candidate.1 > best.1 {
            best = candidate;
        }
    }
    let gap = best.0.min_gap();
    (best.0.vectors, gap)
}

/// Rotation encoded by a Mandel matrix, up to octahedral symmetry.
pub fn recover_rotation(m: &Mandel6) -> Result<Rotation, RecoveryError> {
    if m.matrix().iter().any(|x| !x.is_finite()) {
        return Err(RecoveryError::NonFinite);
    }
    let rec = recover(m);
    if rec.is_degenerate() {
        return Err(RecoveryError::DegenerateSpectrum { gap: rec.gap() });
    }
    Ok(rec.rotation)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ProjectionMethod {
    /// Eigen-based recovery only.
    #[default]
    Approx,
    /// Euler-angle simplex minimization started from the recovery.
    Exact,
}

#[derive(Debug, Clone, Copy)]
pub struct ProjectionResult {
    pub tensor: CrossTensor9,
    pub rotation: Rotation,
    /// Frobenius distance between the input and `tensor`.
    pub distance: f64,
    pub method: ProjectionMethod,
}

pub fn approx_project(z: &CrossTensor9) -> Result<ProjectionResult, RecoveryError> {
    if !z.is_finite() {
        return Err(RecoveryError::NonFinite);
    }
    let rotation = recover_rotation(&z.to_mandel())?;
    Ok(finish(z, rotation, ProjectionMethod::Approx))
}

/// Like [`approx_project`] but never fails on a degenerate spectrum.
pub fn approx_project_lenient(z: &CrossTensor9) -> (ProjectionResult, bool) {
    let rec = recover(&z.to_mandel());
    (finish(z, rec.rotation, ProjectionMethod::Approx), rec.is_degenerate())
}

pub fn exact_project(z: &CrossTensor9) -> Result<ProjectionResult, RecoveryError> {
    exact_project_with(z, &NelderMead::default())
}

/// Minimize `‖A(α, β, γ) − Z‖_F` over ZXZ Euler angles, starting from the
/// eigen-based recovery. The returned distance never exceeds the
/// approximate one.
pub fn exact_project_with(z: &CrossTensor9, simplex: &NelderMead) -> Result<ProjectionResult, RecoveryError> {
    if !z.is_finite() {
        return Err(RecoveryError::NonFinite);
    }
    let target = z.to_mandel();
    let start = recover(&target).rotation;
    let approx = finish(z, start, ProjectionMethod::Exact);

    // Choose the octahedral representative whose third axis is farthest
    // from x₃, keeping β away from the gimbal-locked poles.
    let start = OctahedralGroup::get()
        .iter()
        .map(|g| start * *g)
        .min_by(|a, b| a.matrix()[(2, 2)].abs().total_cmp(&b.matrix()[(2, 2)].abs()))
        .expect("non-empty group");
    let e = start.to_euler();
    let objective = |x: &[f64; 3]| {
        let r = EulerAngles::new(x[0], x[1], x[2]).to_rotation();
        (CrossTensor9::from_rotation(&r).to_mandel().matrix() - target.matrix()).norm()
    };
    let min = simplex.minimize(objective, [e.alpha, e.beta, e.gamma])?;

    if min.value < approx.distance {
        let rotation = EulerAngles::new(min.x[0], min.x[1], min.x[2]).to_rotation();
        Ok(finish(z, rotation, ProjectionMethod::Exact))
    } else {
        Ok(approx)
    }
}

pub fn project(z: &CrossTensor9, method: ProjectionMethod) -> Result<ProjectionResult, RecoveryError> {
    match method {
        ProjectionMethod::Approx => approx_project(z),
        ProjectionMethod::Exact => exact_project(z),
    }
}

/// Distance from `z` to the cross manifold.
///
/// A degenerate spectrum does not make the distance ill-defined, only the
/// minimizing frame, so the approximate variant falls back to the lenient
/// recovery there.
pub fn projection_distance(z: &CrossTensor9, method: ProjectionMethod) -> Result<f64, RecoveryError> {
    if !z.is_finite() {
        return Err(RecoveryError::NonFinite);
    }
    match method {
        ProjectionMethod::Approx => Ok(approx_project_lenient(z).0.distance),
        ProjectionMethod::Exact => exact_project(z).map(|p| p.distance),
    }
}

/// Tolerance of the projector and trace predicates in [`ManifoldCheck`].
pub const MANIFOLD_TOLERANCE: f64 = 1e-10;

/// The three conditions that together characterize cross tensors.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ManifoldCheck {
    pub structure: ValidationReport,
    /// `‖M·M − M‖_F`.
    pub projector_residual: f64,
    /// `|tr M − 3|`.
    pub trace_residual: f64,
}

impl ManifoldCheck {
    pub fn new(z: &CrossTensor9) -> Self {
        let m = z.to_mandel();
        Self {
            structure: z.to_full().validate(),
            projector_residual: (m.contract(&m).matrix() - m.matrix()).norm(),
            trace_residual: (m.matrix().trace() - 3.0).abs(),
        }
    }

    pub fn passed(&self) -> bool {
        self.structure.passed()
            && self.projector_residual < MANIFOLD_TOLERANCE
            && self.trace_residual < MANIFOLD_TOLERANCE
    }
}

fn finish(z: &CrossTensor9, rotation: Rotation, method: ProjectionMethod) -> ProjectionResult {
    let tensor = CrossTensor9::from_rotation(&rotation);
    ProjectionResult {
        tensor,
        rotation,
        distance: z.frobenius_distance(&tensor),
        method,
    }
}
