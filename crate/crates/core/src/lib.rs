//! Cross fields represented as fourth-order tensors.
//!
//! A cross (six unit vectors, pairwise orthogonal or opposite) is encoded by
//! the tensor `Σ_q r^q ⊗ r^q ⊗ r^q ⊗ r^q` of its axes. These tensors live in
//! a 9-dimensional linear space, so fields of crosses can be averaged and
//! interpolated linearly and then projected back onto the set of crosses.

pub mod error;
pub mod field;
pub mod harmonic;
pub mod linalg;
pub mod mesh;
pub mod recovery;
pub mod rotation;
pub mod sampling;
pub mod simplex;
pub mod tensor;
pub mod vtk;

pub use error::{FieldError, MeshError, RecoveryError, TensorError};
pub use field::{
    boundary_conditions, energy, singularity_indicator, smooth, smooth_step, BoundaryMode, ConvergenceLog, CrossField,
    NotConverged, SingularityReport, Smoothed, SmootherConfig, StopRule,
};
pub use mesh::{cube, load_mesh, unit_ball, Graph, MeshFormat, TetMesh, VertexGraph};
pub use recovery::{
    approx_project, approx_project_lenient, exact_project, projection_distance, recover_rotation, ManifoldCheck,
    ProjectionMethod, ProjectionResult,
};
pub use rotation::{cross_distance, octahedral_elements, EulerAngles, OctahedralGroup, Rotation};
pub use tensor::{CrossTensor9, FullTensor4, Mandel6, SymTensor2, ValidationReport};
pub use vtk::export_vtk;
