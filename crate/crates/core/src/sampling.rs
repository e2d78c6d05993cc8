//! Seeded random inputs and the recovery and projection benchmarks.

use nalgebra::{SMatrix, SVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use crate::error::RecoveryError;
use crate::recovery::{approx_project_lenient, exact_project, recover_rotation};
use crate::rotation::{cross_distance, Rotation};
use crate::tensor::CrossTensor9;

pub const DEFAULT_SEED: u64 = 42;

/// Round trips farther than this from the input count as failures.
pub const RECOVERY_TOLERANCE: f64 = 1e-8;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_rotations(n: usize, seed: u64) -> Vec<Rotation> {
    let mut rng = rng(seed);
    (0..n).map(|_| Rotation::random(&mut rng)).collect()
}

/// Uniform samples from the ball `‖M(δ) − M(0)‖_F ≤ r` of coefficient
/// perturbations, measured in the Frobenius norm of the Mandel form.
#[derive(Debug, Clone)]
pub struct PerturbationSampler {
    /// `L⁻ᵀ` for the Cholesky factor of the Gram matrix of the coefficient
    /// basis, mapping the unit Euclidean ball onto the unit Frobenius ball.
    whitening: SMatrix<f64, 9, 9>,
}

impl PerturbationSampler {
    pub fn new() -> Self {
        let base = CrossTensor9::zero().to_mandel();
        let basis: [_; 9] = std::array::from_fn(|i| {
            let mut a = [0.0; 9];
            a[i] = 1.0;
            CrossTensor9::new(a).to_mandel().matrix() - base.matrix()
        });
        let gram = SMatrix::<f64, 9, 9>::from_fn(|i, j| basis[i].dot(&basis[j]));
        let l = gram.cholesky().expect("coefficient basis is linearly independent").l();
        let whitening = l.transpose().try_inverse().expect("Cholesky factor is invertible");
        Self { whitening }
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R, radius: f64) -> CrossTensor9 {
        let g = SVector::<f64, 9>::from_fn(|_, _| StandardNormal.sample(rng));
        let u: f64 = rng.random();
        let direction = g / g.norm();
        let delta = self.whitening * direction * (radius * u.powf(1.0 / 9.0));
        CrossTensor9::new(delta.into())
    }
}

impl Default for PerturbationSampler {
    fn default() -> Self {
        Self::new()
    }
}

/// Cross tensors of random rotations plus perturbations uniform in the
/// Frobenius ball of the given radius.
pub fn perturbed_tensors(n: usize, radius: f64, seed: u64) -> Vec<CrossTensor9> {
    let sampler = PerturbationSampler::new();
    let mut rng = rng(seed);
    (0..n)
        .map(|_| {
            let base = CrossTensor9::from_rotation(&Rotation::random(&mut rng));
            base + sampler.sample(&mut rng, radius)
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RecoveryBench {
    pub samples: usize,
    pub failures: usize,
    pub max_distance: f64,
}

pub fn bench_recovery(n: usize, seed: u64) -> RecoveryBench {
    let distances: Vec<f64> = random_rotations(n, seed)
        .par_iter()
        .map(
            |r| match recover_rotation(&CrossTensor9::from_rotation(r).to_mandel()) {
                Ok(back) => cross_distance(r, &back),
                Err(_) => f64::INFINITY,
            },
        )
        .collect();
    RecoveryBench {
        samples: n,
        failures: distances
            .iter()
            .filter(|d| d.is_nan() || **d >= RECOVERY_TOLERANCE)
            .count(),
        max_distance: distances.iter().copied().fold(0.0, f64::max),
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProjectionSample {
    /// `‖P₁ − Z‖`, simplex projection.
    pub exact: f64,
    /// `‖P₂ − Z‖`, eigen-based projection.
    pub approx: f64,
}

impl ProjectionSample {
    /// `(approx − exact) / exact`, zero when both vanish.
    pub fn relative_gap(&self) -> f64 {
        if self.exact > 0.0 {
            (self.approx - self.exact) / self.exact
        } else if self.approx > 0.0 {
            f64::INFINITY
        } else {
            0.0
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProjectionBench {
    pub samples: Vec<Result<ProjectionSample, RecoveryError>>,
}

impl ProjectionBench {
    pub fn errors(&self) -> usize {
        self.samples.iter().filter(|s| s.is_err()).count()
    }

    /// Samples where the exact distance exceeds the approximate one.
    pub fn violations(&self) -> usize {
        self.samples
            .iter()
            .filter(|s| matches!(s, Ok(p) if p.exact > p.approx))
            .count()
    }

    pub fn median_relative_gap(&self) -> f64 {
        let mut gaps: Vec<f64> = self.samples.iter().flatten().map(|s| s.relative_gap()).collect();
        if gaps.is_empty() {
            return f64::NAN;
        }
        gaps.sort_by(f64::total_cmp);
        let m = gaps.len() / 2;
        if gaps.len() % 2 == 1 {
            gaps[m]
        } else {
            0.5 * (gaps[m - 1] + gaps[m])
        }
    }

    /// `index,exact,approx`; failed samples leave the distances empty.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("sample,exact_distance,approx_distance\n");
        for (i, s) in self.samples.iter().enumerate() {
            match s {
                Ok(p) => out.push_str(&format!("{i},{:e},{:e}\n", p.exact, p.approx)),
                Err(_) => out.push_str(&format!("{i},,\n")),
            }
        }
        out
    }
}

pub fn bench_projection(n: usize, radius: f64, seed: u64) -> ProjectionBench {
    let samples = perturbed_tensors(n, radius, seed)
        .par_iter()
        .map(|z| {
            let approx = approx_project_lenient(z).0.distance;
            exact_project(z).map(|e| ProjectionSample {
                exact: e.distance,
                approx,
            })
        })
        .collect();
    ProjectionBench { samples }
}
