//! Per-vertex cross fields and the explicit average-then-project smoother.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::time::Instant;

use log::{debug, info};
use nalgebra::Vector3;
use rayon::prelude::*;
use thiserror::Error;

use crate::error::FieldError;
use crate::mesh::{TetMesh, VertexGraph};
use crate::recovery::{approx_project, approx_project_lenient, exact_project, ProjectionMethod};
use crate::rotation::Rotation;
use crate::tensor::CrossTensor9;

/// Averaged normals shorter than this cannot orient a boundary frame.
pub const MIN_NORMAL_MAGNITUDE: f64 = 1e-6;

#[derive(Debug, Clone, PartialEq)]
pub struct CrossField {
    pub tensors: Vec<CrossTensor9>,
    pub eta: Vec<f64>,
    /// Dirichlet vertices, never modified by the smoother.
    pub fixed: Vec<bool>,
}

impl CrossField {
    pub fn uniform(n: usize, tensor: CrossTensor9) -> Self {
        Self {
            tensors: vec![tensor; n],
            eta: vec![0.0; n],
            fixed: vec![false; n],
        }
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    /// Every tensor rotated by `s`; flags and η carried over.
    pub fn rotated(&self, s: &Rotation) -> Self {
        Self {
            tensors: self.tensors.par_iter().map(|t| t.rotated(s)).collect(),
            eta: self.eta.clone(),
            fixed: self.fixed.clone(),
        }
    }

    /// Recovered frame per vertex, `None` where the spectrum is degenerate.
    pub fn frames(&self) -> Vec<Option<Rotation>> {
        self.tensors
            .par_iter()
            .map(|t| {
                let (p, degenerate) = approx_project_lenient(t);
                (!degenerate).then_some(p.rotation)
            })
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum StopRule {
    /// `E_k / E_0`.
    #[default]
    EnergyRatio,
    /// `‖a^k − a^{k−1}‖ / ‖a^1 − a^0‖` over all vertex coefficients.
    Residual,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SmootherConfig {
    pub energy_reduction_target: f64,
    pub max_iterations: usize,
    pub projection: ProjectionMethod,
    /// Log progress every this many iterations; 0 disables.
    pub report_every: usize,
    pub stop_rule: StopRule,
}

impl Default for SmootherConfig {
    fn default() -> Self {
        Self {
            energy_reduction_target: 1e-4,
            max_iterations: 5000,
            projection: ProjectionMethod::Approx,
            report_every: 100,
            stop_rule: StopRule::EnergyRatio,
        }
    }
}

impl SmootherConfig {
    pub fn validate(&self) -> Result<(), FieldError> {
        let t = self.energy_reduction_target;
        if !(t > 0.0 && t < 1.0) {
            return Err(FieldError::Config(format!("reduction target {t} is not in (0, 1)")));
        }
        if self.max_iterations == 0 {
            return Err(FieldError::Config("max_iterations must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum BoundaryMode {
    NormalAligned,
    FromFile(PathBuf),
}

/// Rotation whose third column is `n` (unit). The first column is the
/// coordinate axis least aligned with `n`, orthogonalized.
pub fn normal_frame(n: &Vector3<f64>) -> Rotation {
    let k = (0..3).min_by(|&a, &b| n[a].abs().total_cmp(&n[b].abs())).unwrap_or(0);
    let mut e = Vector3::zeros();
    e[k] = 1.0;
    let u = (e - n * n.dot(&e)).normalize();
    let v = n.cross(&u);
    Rotation::from_matrix_unchecked(nalgebra::Matrix3::from_columns(&[u, v, *n]))
}

/// Initial field: reference tensor everywhere, boundary vertices fixed to
/// their prescribed crosses.
pub fn boundary_conditions(mesh: &TetMesh, mode: &BoundaryMode) -> Result<CrossField, FieldError> {
    let mut field = CrossField::uniform(mesh.vertex_count(), CrossTensor9::reference());
    match mode {
        BoundaryMode::NormalAligned => {
            let mut area = vec![0.0; mesh.vertex_count()];
            for tri in mesh.boundary_triangles() {
                for &v in &tri.vertices {
                    area[v] += tri.area;
                }
            }
            for (v, sum) in mesh.weighted_vertex_normals().into_iter().enumerate() {
                if area[v] == 0.0 {
                    continue;
                }
                let avg = sum / area[v];
                let magnitude = avg.norm();
                if magnitude < MIN_NORMAL_MAGNITUDE {
                    return Err(FieldError::DegenerateNormal { vertex: v, magnitude });
                }
                field.tensors[v] = CrossTensor9::from_rotation(&normal_frame(&(avg / magnitude)));
                field.fixed[v] = true;
            }
        }
        BoundaryMode::FromFile(path) => {
            let text = std::fs::read_to_string(path).map_err(|source| FieldError::Io {
                path: path.clone(),
                source,
            })?;
            apply_boundary_file(&mut field, &text, path)?;
        }
    }
    Ok(field)
}

/// Lines of `vertex a1 … a9 flag`; `#` starts a comment. Listed tensors are
/// projected onto the cross manifold.
pub fn apply_boundary_file(field: &mut CrossField, text: &str, path: &Path) -> Result<(), FieldError> {
    let err = |line: usize, message: String| FieldError::File {
        path: path.to_path_buf(),
        line,
        message,
    };
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let toks: Vec<&str> = content.split_whitespace().collect();
        if toks.len() != 11 {
            return Err(err(line, format!("expected 11 fields, found {}", toks.len())));
        }
        let v: usize = toks[0]
            .parse()
            .map_err(|_| err(line, format!("invalid vertex index '{}'", toks[0])))?;
        if v >= field.len() {
            return Err(err(line, format!("vertex {v} outside 0..{}", field.len())));
        }
        let mut a = [0.0; 9];
        for (k, slot) in a.iter_mut().enumerate() {
            *slot = toks[k + 1]
                .parse()
                .map_err(|_| err(line, format!("invalid coefficient '{}'", toks[k + 1])))?;
        }
        let fixed = match toks[10] {
            "1" | "true" => true,
            "0" | "false" => false,
            other => return Err(err(line, format!("invalid fixed flag '{other}'"))),
        };
        let projected = approx_project(&CrossTensor9::new(a)).map_err(|e| err(line, e.to_string()))?;
        field.tensors[v] = projected.tensor;
        field.fixed[v] = fixed;
    }
    Ok(())
}

/// `½ Σ_edges ‖A_i − A_j‖²_F`.
pub fn energy<G: VertexGraph + ?Sized>(graph: &G, field: &CrossField) -> f64 {
    0.5 * graph
        .edges()
        .iter()
        .map(|&[i, j]| field.tensors[i].frobenius_distance(&field.tensors[j]).powi(2))
        .sum::<f64>()
}

fn neighbor_mean<G: VertexGraph + ?Sized>(graph: &G, tensors: &[CrossTensor9], v: usize) -> Option<CrossTensor9> {
    let nb = graph.neighbors(v);
    if nb.is_empty() {
        return None;
    }
    let mut sum = CrossTensor9::zero();
    for &j in nb {
        sum += tensors[j];
    }
    Some(sum * (1.0 / nb.len() as f64))
}

/// One Jacobi sweep: each free vertex takes the projected mean of its
/// neighbors from the previous iterate.
pub fn smooth_step<G: VertexGraph + Sync + ?Sized>(
    graph: &G,
    field: &CrossField,
    config: &SmootherConfig,
) -> CrossField {
    let previous = &field.tensors;
    let tensors = (0..field.len())
        .into_par_iter()
        .map(|v| {
            if field.fixed[v] {
                return previous[v];
            }
            let Some(mean) = neighbor_mean(graph, previous, v) else {
                return previous[v];
            };
            let projected = match config.projection {
                ProjectionMethod::Approx => approx_project(&mean),
                ProjectionMethod::Exact => exact_project(&mean),
            };
            projected.map(|p| p.tensor).unwrap_or(previous[v])
        })
        .collect();
    CrossField {
        tensors,
        eta: field.eta.clone(),
        fixed: field.fixed.clone(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogEntry {
    pub iteration: usize,
    pub energy: f64,
    pub residual: f64,
    pub elapsed_seconds: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ConvergenceLog {
    pub entries: Vec<LogEntry>,
}

impl ConvergenceLog {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("iteration,energy,elapsed_seconds\n");
        for e in &self.entries {
            let _ = writeln!(out, "{},{:e},{:.6}", e.iteration, e.energy, e.elapsed_seconds);
        }
        out
    }

    pub fn write_csv(&self, path: &Path) -> std::io::Result<()> {
        std::fs::write(path, self.to_csv())
    }

    pub fn initial_energy(&self) -> Option<f64> {
        self.entries.first().map(|e| e.energy)
    }

    pub fn final_energy(&self) -> Option<f64> {
        self.entries.last().map(|e| e.energy)
    }
}

#[derive(Debug, Clone)]
pub struct Smoothed {
    pub field: CrossField,
    pub log: ConvergenceLog,
    pub iterations: usize,
    /// Final value of the configured stopping measure.
    pub ratio: f64,
}

#[derive(Debug, Error)]
#[error("smoother stopped at the iteration cap ({}) with ratio {:e}", .0.iterations, .0.ratio)]
pub struct NotConverged(pub Box<Smoothed>);

/// Iterate [`smooth_step`] until the configured ratio reaches the target.
/// Without fixed vertices the uniform reference field is returned at once.
pub fn smooth<G: VertexGraph + Sync + ?Sized>(
    graph: &G,
    field: &CrossField,
    config: &SmootherConfig,
) -> Result<Smoothed, NotConverged> {
    let start = Instant::now();
    let mut log = ConvergenceLog::default();
    let e0 = energy(graph, field);
    log.entries.push(LogEntry {
        iteration: 0,
        energy: e0,
        residual: f64::NAN,
        elapsed_seconds: 0.0,
    });

    if !field.fixed.iter().any(|&f| f) {
        let mut uniform = CrossField::uniform(field.len(), CrossTensor9::reference());
        uniform.eta = field.eta.clone();
        uniform.fixed = field.fixed.clone();
        return Ok(Smoothed {
            field: uniform,
            log,
            iterations: 0,
            ratio: 0.0,
        });
    }

    let mut current = field.clone();
    let mut first_update = None;
    let mut ratio = f64::INFINITY;
    for k in 1..=config.max_iterations {
        let next = smooth_step(graph, &current, config);
        let update = update_norm(&current, &next);
        let e = energy(graph, &next);
        current = next;
        let first = *first_update.get_or_insert(update);
        ratio = match config.stop_rule {
            StopRule::EnergyRatio => relative(e, e0),
            StopRule::Residual => relative(update, first),
        };
        log.entries.push(LogEntry {
            iteration: k,
            energy: e,
            residual: relative(update, first),
            elapsed_seconds: start.elapsed().as_secs_f64(),
        });
        if config.report_every > 0 && k % config.report_every == 0 {
            info!("iteration {k}: energy {e:.6e}, ratio {ratio:.3e}");
        }
        if ratio <= config.energy_reduction_target {
            debug!("converged after {k} iterations");
            return Ok(Smoothed {
                field: current,
                log,
                iterations: k,
                ratio,
            });
        }
    }
    Err(NotConverged(Box::new(Smoothed {
        field: current,
        log,
        iterations: config.max_iterations,
        ratio,
    })))
}

fn relative(x: f64, reference: f64) -> f64 {
    if reference > 0.0 {
        x / reference
    } else if x > 0.0 {
        f64::INFINITY
    } else {
        0.0
    }
}

fn update_norm(a: &CrossField, b: &CrossField) -> f64 {
    a.tensors
        .iter()
        .zip(&b.tensors)
        .map(|(x, y)| {
            let d = *x - *y;
            d.0.iter().map(|c| c * c).sum::<f64>()
        })
        .sum::<f64>()
        .sqrt()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SingularityReport {
    pub eta: Vec<f64>,
    pub band: (f64, f64),
    /// Vertices with `band.0 ≤ η ≤ band.1`, ascending.
    pub flagged: Vec<usize>,
    pub min: f64,
    pub max: f64,
    /// Counts over equal-width bins spanning `[0, max]`.
    pub histogram: Vec<usize>,
}

pub const DEFAULT_ETA_BAND: (f64, f64) = (0.3, 0.5);
const HISTOGRAM_BINS: usize = 10;

/// η per free vertex: the distance from the neighbor mean to its
/// projection. Fixed and isolated vertices get 0.
pub fn singularity_indicator<G: VertexGraph + Sync + ?Sized>(
    graph: &G,
    field: &CrossField,
    band: (f64, f64),
) -> SingularityReport {
    let eta: Vec<f64> = (0..field.len())
        .into_par_iter()
        .map(|v| {
            if field.fixed[v] {
                return 0.0;
            }
            neighbor_mean(graph, &field.tensors, v)
                .map(|mean| approx_project_lenient(&mean).0.distance)
                .unwrap_or(0.0)
        })
        .collect();

    let flagged = eta
        .iter()
        .enumerate()
        .filter(|(_, &e)| e >= band.0 && e <= band.1)
        .map(|(i, _)| i)
        .collect();
    let min = eta.iter().copied().fold(f64::INFINITY, f64::min);
    let max = eta.iter().copied().fold(0.0, f64::max);
    let mut histogram = vec![0; HISTOGRAM_BINS];
    for &e in &eta {
        let bin = if max > 0.0 {
            ((e / max) * HISTOGRAM_BINS as f64) as usize
        } else {
            0
        };
        histogram[bin.min(HISTOGRAM_BINS - 1)] += 1;
    }
    SingularityReport {
        eta,
        band,
        flagged,
        min: if min.is_finite() { min } else { 0.0 },
        max,
        histogram,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::Graph;
    use crate::rotation::cross_distance;
    use std::f64::consts::FRAC_PI_4;

    #[test]
    fn normal_frame_is_proper() {
        for n in [Vector3::x(), Vector3::z(), Vector3::new(1.0, 2.0, -3.0).normalize()] {
            let r = normal_frame(&n);
            assert!(r.orthonormality_error() < 1e-14);
            assert!((r.matrix().determinant() - 1.0).abs() < 1e-14);
            assert!((r.column(2) - n).norm() < 1e-15);
        }
    }

    #[test]
    fn energy_of_single_edge() {
        let g = Graph::path(2);
        let mut f = CrossField::uniform(2, CrossTensor9::reference());
        f.tensors[1] = CrossTensor9::from_rotation(&Rotation::about_axis(Vector3::z(), 0.3));
        let d = f.tensors[0].frobenius_distance(&f.tensors[1]);
        assert!((energy(&g, &f) - 0.5 * d * d).abs() < 1e-15);
    }

    #[test]
    fn maximally_spread_neighbors_give_positive_eta() {
        let g = Graph::path(3);
        let mut f = CrossField::uniform(3, CrossTensor9::reference());
        f.tensors[2] = CrossTensor9::from_rotation(&Rotation::about_axis(Vector3::z(), FRAC_PI_4));
        f.fixed = vec![true, false, true];
        let r = singularity_indicator(&g, &f, DEFAULT_ETA_BAND);
        assert_eq!(r.eta[0], 0.0);
        assert!(r.eta[1] > 0.1);
    }

    #[test]
    fn path_midpoint() {
        let g = Graph::path(3);
        let mut f = CrossField::uniform(3, CrossTensor9::reference());
        f.tensors[2] = CrossTensor9::from_rotation(&Rotation::about_axis(Vector3::z(), 0.2));
        f.fixed = vec![true, false, true];
        let config = SmootherConfig {
            max_iterations: 50,
            ..SmootherConfig::default()
        };
        let out = match smooth(&g, &f, &config) {
            Ok(s) => s,
            Err(NotConverged(s)) => *s,
        };
        let mid = approx_project(&out.field.tensors[1]).unwrap().rotation;
        assert!(cross_distance(&mid, &Rotation::about_axis(Vector3::z(), 0.1)) < 1e-6);
    }

    #[test]
    fn free_field_returns_uniform() {
        let g = Graph::path(4);
        let mut f = CrossField::uniform(4, CrossTensor9::reference());
        f.tensors[2] = CrossTensor9::from_rotation(&Rotation::about_axis(Vector3::x(), 0.4));
        let out = smooth(&g, &f, &SmootherConfig::default()).unwrap();
        assert_eq!(out.iterations, 0);
        assert!(out.field.tensors.iter().all(|t| *t == CrossTensor9::reference()));
    }

    #[test]
    fn config_validation() {
        assert!(SmootherConfig::default().validate().is_ok());
        let bad = SmootherConfig {
            energy_reduction_target: 1.0,
            ..SmootherConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = SmootherConfig {
            max_iterations: 0,
            ..SmootherConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn boundary_file_parsing() {
        let mut f = CrossField::uniform(3, CrossTensor9::zero());
        let text = "# comment\n1 1 1 1 0 0 0 0 0 0 1\n\n2 1 1 1 0 0 0 0 0 0 0\n";
        apply_boundary_file(&mut f, text, Path::new("bc")).unwrap();
        assert_eq!(f.fixed, vec![false, true, false]);
        assert!(f.tensors[1].frobenius_distance(&CrossTensor9::reference()) < 1e-14);
        let err = apply_boundary_file(&mut f, "0 1 1 1 0 0 0 0 0 0 yes\n", Path::new("bc")).unwrap_err();
        assert!(matches!(err, FieldError::File { line: 1, .. }));
        let err = apply_boundary_file(&mut f, "\n7 1 1 1 0 0 0 0 0 0 1\n", Path::new("bc")).unwrap_err();
        assert!(matches!(err, FieldError::File { line: 2, .. }));
    }
}
