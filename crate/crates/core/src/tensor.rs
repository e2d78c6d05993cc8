//! Fourth-order tensor representation of crosses.
//!
//! A cross with axes `r¹, r², r³` is the tensor `Σ_q r^q ⊗ r^q ⊗ r^q ⊗ r^q`.
//! Such tensors are fully symmetric and their partial traces `𝔸ᵢᵢₖₗ` equal
//! `δₖₗ`, which leaves nine free coefficients. [`CrossTensor9`] stores
//! exactly those nine numbers and is the canonical form; [`Mandel6`] and
//! [`FullTensor4`] are derived views.
//!
//! Coefficient layout (1-based tensor indices):
//!
//! | slot | component |
//! |------|-----------|
//! | a₁ | 𝔸₁₁₁₁ |
//! | a₂ | 𝔸₂₂₂₂ |
//! | a₃ | 𝔸₃₃₃₃ |
//! | a₄ | 𝔸₂₃₂₂ |
//! | a₅ | 𝔸₂₃₃₃ |
//! | a₆ | 𝔸₁₃₁₁ |
//! | a₇ | 𝔸₁₃₃₃ |
//! | a₈ | 𝔸₁₂₁₁ |
//! | a₉ | 𝔸₁₂₂₂ |
//!
//! Mandel vectors use the row order `(11, 22, 33, 23, 13, 12)` with a `√2`
//! factor on the shear slots.

use std::f64::consts::SQRT_2;
use std::fmt;
use std::ops::{Add, AddAssign, Index, Mul, Neg, Sub};
use std::str::FromStr;

use nalgebra::{Matrix3, Matrix6, Vector3, Vector6};

use crate::error::TensorError;
use crate::rotation::Rotation;

/// Tolerance on dependent Mandel entries and on structural checks.
pub const STRUCTURE_TOLERANCE: f64 = 1e-9;

/// The nine free coefficients of a tensor in the linear space of crosses.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct CrossTensor9(pub [f64; 9]);

impl CrossTensor9 {
    pub const fn new(a: [f64; 9]) -> Self {
        CrossTensor9(a)
    }

    pub const fn zero() -> Self {
        CrossTensor9([0.0; 9])
    }

    /// The axis-aligned cross `x₁⁴ + x₂⁴ + x₃⁴`.
    pub const fn reference() -> Self {
        CrossTensor9([1.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0])
    }

    /// `𝔸ᵢⱼₖₗ = Σ_q Rᵢq Rⱼq Rₖq Rₗq`, reduced to the nine coefficients.
    pub fn from_rotation(r: &Rotation) -> Self {
        let m = r.matrix();
        let mut a = [0.0; 9];
        for q in 0..3 {
            let (x, y, z) = (m[(0, q)], m[(1, q)], m[(2, q)]);
            let (x2, y2, z2) = (x * x, y * y, z * z);
            a[0] += x2 * x2;
            a[1] += y2 * y2;
            a[2] += z2 * z2;
            a[3] += y2 * y * z;
            a[4] += y * z2 * z;
            a[5] += x2 * x * z;
            a[6] += x * z2 * z;
            a[7] += x2 * x * y;
            a[8] += x * y2 * y;
        }
        CrossTensor9(a)
    }

    pub fn as_array(&self) -> &[f64; 9] {
        &self.0
    }

    pub fn is_finite(&self) -> bool {
        self.0.iter().all(|x| x.is_finite())
    }

    /// Mandel 6×6 matrix of the tensor.
    pub fn to_mandel(&self) -> Mandel6 {
        let [a1, a2, a3, a4, a5, a6, a7, a8, a9] = self.0;
        let s = SQRT_2;
        #[rustfmt::skip]
        let lower = [
            [a1, 0.0, 0.0, 0.0, 0.0, 0.0],
            [0.5 * (1.0 + a3 - a2 - a1), a2, 0.0, 0.0, 0.0, 0.0],
            [0.5 * (1.0 + a2 - a3 - a1), 0.5 * (1.0 + a1 - a2 - a3), a3, 0.0, 0.0, 0.0],
            [-s * (a4 + a5), s * a4, s * a5, 1.0 + a1 - a3 - a2, 0.0, 0.0],
            [s * a6, -s * (a6 + a7), s * a7, -2.0 * (a8 + a9), 1.0 + a2 - a3 - a1, 0.0],
            [s * a8, s * a9, -s * (a8 + a9), -2.0 * (a6 + a7), -2.0 * (a4 + a5), 1.0 + a3 - a2 - a1],
        ];
        Mandel6(Matrix6::from_fn(|i, j| if j <= i { lower[i][j] } else { lower[j][i] }))
    }

    /// Dense fully symmetric view.
    pub fn to_full(&self) -> FullTensor4 {
        FullTensor4::from_nine(self)
    }

    /// The quartic form `𝔸ᵢⱼₖₗ xᵢ xⱼ xₖ xₗ`, evaluated through Mandel
    /// notation as `(x⊗x)ᵀ M (x⊗x)`.
    pub fn evaluate(&self, x: &Vector3<f64>) -> f64 {
        let v = mandel_outer(x);
        (v.transpose() * self.to_mandel().0 * v)[(0, 0)]
    }

    /// Frobenius distance between the Mandel forms.
    pub fn frobenius_distance(&self, other: &CrossTensor9) -> f64 {
        (self.to_mandel().0 - other.to_mandel().0).norm()
    }

    /// Apply the tensor transformation law `𝔸' = S ⋆ 𝔸` for a rotation `S`.
    pub fn rotated(&self, s: &Rotation) -> CrossTensor9 {
        self.to_full().rotated(s).to_nine()
    }

    /// Mean of a non-empty collection of tensors.
    pub fn mean<'a, I>(items: I) -> Option<CrossTensor9>
    where
        I: IntoIterator<Item = &'a CrossTensor9>,
    {
        let mut acc = CrossTensor9::zero();
        let mut n = 0usize;
        for t in items {
            acc += *t;
            n += 1;
        }
        (n > 0).then(|| acc * (1.0 / n as f64))
    }
}

impl Index<usize> for CrossTensor9 {
    type Output = f64;

    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

impl Add for CrossTensor9 {
    type Output = CrossTensor9;

    fn add(self, rhs: Self) -> Self {
        CrossTensor9(std::array::from_fn(|i| self.0[i] + rhs.0[i]))
    }
}

impl AddAssign for CrossTensor9 {
    fn add_assign(&mut self, rhs: Self) {
        for (a, b) in self.0.iter_mut().zip(rhs.0) {
            *a += b;
        }
    }
}

impl Sub for CrossTensor9 {
    type Output = CrossTensor9;

    fn sub(self, rhs: Self) -> Self {
        CrossTensor9(std::array::from_fn(|i| self.0[i] - rhs.0[i]))
    }
}

impl Mul<f64> for CrossTensor9 {
    type Output = CrossTensor9;

    fn mul(self, rhs: f64) -> Self {
        CrossTensor9(self.0.map(|x| x * rhs))
    }
}

impl Neg for CrossTensor9 {
    type Output = CrossTensor9;

    fn neg(self) -> Self {
        CrossTensor9(self.0.map(|x| -x))
    }
}

/// Nine whitespace-separated floats, `a₁` first, in round-trip precision.
impl fmt::Display for CrossTensor9 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (i, x) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "{x:e}")?;
        }
        Ok(())
    }
}

impl FromStr for CrossTensor9 {
    type Err = TensorError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let mut a = [0.0; 9];
        let mut it = s.split_whitespace();
        for (i, slot) in a.iter_mut().enumerate() {
            let tok = it
                .next()
                .ok_or(TensorError::Parse(format!("expected 9 values, found {i}")))?;
            *slot = tok
                .parse()
                .map_err(|_| TensorError::Parse(format!("invalid number '{tok}' in slot {}", i + 1)))?;
        }
        if let Some(extra) = it.next() {
            return Err(TensorError::Parse(format!("unexpected trailing token '{extra}'")));
        }
        Ok(CrossTensor9(a))
    }
}

/// Mandel 6-vector `(x₁², x₂², x₃², √2x₂x₃, √2x₁x₃, √2x₁x₂)`.
pub fn mandel_outer(x: &Vector3<f64>) -> Vector6<f64> {
    Vector6::new(
        x[0] * x[0],
        x[1] * x[1],
        x[2] * x[2],
        SQRT_2 * x[1] * x[2],
        SQRT_2 * x[0] * x[2],
        SQRT_2 * x[0] * x[1],
    )
}

/// A 4th-order tensor with minor symmetries written as a 6×6 matrix.
///
/// Matrices built from a [`CrossTensor9`] are symmetric; products formed
/// with [`Mandel6::contract`] are only symmetric when the factors commute.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mandel6(pub Matrix6<f64>);

impl Mandel6 {
    pub fn identity() -> Self {
        Mandel6(Matrix6::identity())
    }

    pub fn matrix(&self) -> &Matrix6<f64> {
        &self.0
    }

    /// Mandel form of a dense tensor, reading the entries row by row.
    pub fn from_full(t: &FullTensor4) -> Self {
        const PAIRS: [(usize, usize); 6] = [(0, 0), (1, 1), (2, 2), (1, 2), (0, 2), (0, 1)];
        let w = |k: usize| if k < 3 { 1.0 } else { SQRT_2 };
        Mandel6(Matrix6::from_fn(|r, c| {
            let (i, j) = PAIRS[r];
            let (k, l) = PAIRS[c];
            w(r) * w(c) * t.get(i, j, k, l)
        }))
    }

    /// Read the nine coefficients back, checking that every dependent
    /// entry matches the cross-tensor pattern within [`STRUCTURE_TOLERANCE`].
    pub fn to_nine(&self) -> Result<CrossTensor9, TensorError> {
        let m = &self.0;
        let a = CrossTensor9([
            m[(0, 0)],
            m[(1, 1)],
            m[(2, 2)],
            m[(3, 1)] / SQRT_2,
            m[(3, 2)] / SQRT_2,
            m[(4, 0)] / SQRT_2,
            m[(4, 2)] / SQRT_2,
            m[(5, 0)] / SQRT_2,
            m[(5, 1)] / SQRT_2,
        ]);
        let rebuilt = a.to_mandel();
        let mut worst = (0.0, (0, 0));
        for i in 0..6 {
            for j in 0..6 {
                let dev = (rebuilt.0[(i, j)] - m[(i, j)]).abs();
                if dev > worst.0 || dev.is_nan() {
                    worst = (dev, (i, j));
                }
            }
        }
        if worst.0 > STRUCTURE_TOLERANCE || worst.0.is_nan() {
            return Err(TensorError::StructureViolation {
                row: worst.1 .0,
                col: worst.1 .1,
                deviation: worst.0,
            });
        }
        Ok(a)
    }

    /// Double contraction `𝔸 : 𝔹`, which in Mandel form is the matrix product.
    pub fn contract(&self, other: &Mandel6) -> Mandel6 {
        Mandel6(self.0 * other.0)
    }

    pub fn apply(&self, d: &SymTensor2) -> SymTensor2 {
        SymTensor2::from_vec6(&(self.0 * d.to_vec6()))
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }
}

/// Symmetric second-order tensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SymTensor2(Matrix3<f64>);

impl SymTensor2 {
    /// Symmetrize `m` (its lower triangle wins).
    pub fn new(m: Matrix3<f64>) -> Self {
        SymTensor2(Matrix3::from_fn(|i, j| if j <= i { m[(i, j)] } else { m[(j, i)] }))
    }

    pub fn identity() -> Self {
        SymTensor2(Matrix3::identity())
    }

    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.0
    }

    /// Off-diagonal slots carry `1/√2` so that `v·v = d : d`.
    pub fn from_vec6(v: &Vector6<f64>) -> Self {
        let s = SQRT_2;
        SymTensor2(Matrix3::new(
            v[0],
            v[5] / s,
            v[4] / s,
            v[5] / s,
            v[1],
            v[3] / s,
            v[4] / s,
            v[3] / s,
            v[2],
        ))
    }

    pub fn to_vec6(&self) -> Vector6<f64> {
        let m = &self.0;
        let s = SQRT_2;
        Vector6::new(
            m[(0, 0)],
            m[(1, 1)],
            m[(2, 2)],
            s * m[(1, 2)],
            s * m[(0, 2)],
            s * m[(0, 1)],
        )
    }

    /// `d : e = dₘₙ eₘₙ`.
    pub fn double_dot(&self, other: &SymTensor2) -> f64 {
        self.0.component_mul(&other.0).sum()
    }
}

/// Dense 3×3×3×3 tensor, used for validation and as a test oracle.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FullTensor4([f64; 81]);

/// Multiset of indices as counts of (1, 2, 3).
type IndexCounts = (u8, u8, u8);

fn counts(idx: [usize; 4]) -> IndexCounts {
    let mut c = [0u8; 3];
    for i in idx {
        c[i] += 1;
    }
    (c[0], c[1], c[2])
}

fn flat(i: usize, j: usize, k: usize, l: usize) -> usize {
    ((i * 3 + j) * 3 + k) * 3 + l
}

impl FullTensor4 {
    pub fn zeros() -> Self {
        FullTensor4([0.0; 81])
    }

    /// Build from an arbitrary component function. The result is stored as
    /// given; no symmetrization is applied.
    pub fn from_fn(mut f: impl FnMut(usize, usize, usize, usize) -> f64) -> Self {
        let mut t = [0.0; 81];
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        t[flat(i, j, k, l)] = f(i, j, k, l);
                    }
                }
            }
        }
        FullTensor4(t)
    }

    /// The fully symmetric tensor whose 15 distinct components follow from
    /// the nine coefficients and the six partial-trace relations.
    pub fn from_nine(a: &CrossTensor9) -> Self {
        let [a1, a2, a3, a4, a5, a6, a7, a8, a9] = a.0;
        let component = |c: IndexCounts| -> f64 {
            match c {
                (4, 0, 0) => a1,
                (0, 4, 0) => a2,
                (0, 0, 4) => a3,
                (2, 2, 0) => 0.5 * (1.0 + a3 - a1 - a2),
                (2, 0, 2) => 0.5 * (1.0 + a2 - a1 - a3),
                (0, 2, 2) => 0.5 * (1.0 + a1 - a2 - a3),
                (3, 1, 0) => a8,
                (1, 3, 0) => a9,
                (3, 0, 1) => a6,
                (1, 0, 3) => a7,
                (0, 3, 1) => a4,
                (0, 1, 3) => a5,
                (2, 1, 1) => -(a4 + a5),
                (1, 2, 1) => -(a6 + a7),
                (1, 1, 2) => -(a8 + a9),
                _ => unreachable!("index multiset of a 4th-order tensor"),
            }
        };
        Self::from_fn(|i, j, k, l| component(counts([i, j, k, l])))
    }

    /// `Σ_q Rᵢq Rⱼq Rₖq Rₗq` evaluated entry by entry.
    pub fn from_rotation(r: &Rotation) -> Self {
        let m = r.matrix();
        Self::from_fn(|i, j, k, l| (0..3).map(|q| m[(i, q)] * m[(j, q)] * m[(k, q)] * m[(l, q)]).sum())
    }

    pub fn get(&self, i: usize, j: usize, k: usize, l: usize) -> f64 {
        self.0[flat(i, j, k, l)]
    }

    pub fn set(&mut self, i: usize, j: usize, k: usize, l: usize, value: f64) {
        self.0[flat(i, j, k, l)] = value;
    }

    /// Read the nine coefficients off their defining entries.
    pub fn to_nine(&self) -> CrossTensor9 {
        CrossTensor9([
            self.get(0, 0, 0, 0),
            self.get(1, 1, 1, 1),
            self.get(2, 2, 2, 2),
            self.get(1, 2, 1, 1),
            self.get(1, 2, 2, 2),
            self.get(0, 2, 0, 0),
            self.get(0, 2, 2, 2),
            self.get(0, 1, 0, 0),
            self.get(0, 1, 1, 1),
        ])
    }

    /// `𝔸'ᵢⱼₖₗ = Sᵢₘ Sⱼₙ Sₖₒ Sₗₚ 𝔸ₘₙₒₚ`, one index at a time.
    pub fn rotated(&self, s: &Rotation) -> FullTensor4 {
        let m = s.matrix();
        let mut t = *self;
        for axis in 0..4 {
            let src = t;
            t = Self::from_fn(|i, j, k, l| {
                let idx = [i, j, k, l];
                (0..3)
                    .map(|p| {
                        let mut from = idx;
                        from[axis] = p;
                        m[(idx[axis], p)] * src.get(from[0], from[1], from[2], from[3])
                    })
                    .sum()
            });
        }
        t
    }

    /// Partial trace `𝔸ᵢᵢₖₗ`.
    pub fn partial_trace(&self, k: usize, l: usize) -> f64 {
        (0..3).map(|i| self.get(i, i, k, l)).sum()
    }

    /// Check full symmetry and the six partial-trace relations.
    pub fn validate(&self) -> ValidationReport {
        let mut symmetry = 0.0_f64;
        for i in 0..3 {
            for j in 0..3 {
                for k in 0..3 {
                    for l in 0..3 {
                        let v = self.get(i, j, k, l);
                        for p in PERMUTATIONS_4 {
                            let idx = [i, j, k, l];
                            let w = self.get(idx[p[0]], idx[p[1]], idx[p[2]], idx[p[3]]);
                            symmetry = symmetry.max((v - w).abs());
                        }
                    }
                }
            }
        }
        let trace = TRACE_RELATIONS
            .iter()
            .map(|&(k, l, target)| (self.partial_trace(k, l) - target).abs())
            .fold(0.0_f64, f64::max);
        ValidationReport {
            symmetry_violation: symmetry,
            trace_violation: trace,
        }
    }
}

/// The six independent partial-trace relations `𝔸ᵢᵢₖₗ = δₖₗ`.
const TRACE_RELATIONS: [(usize, usize, f64); 6] = [
    (0, 0, 1.0),
    (1, 1, 1.0),
    (2, 2, 1.0),
    (0, 1, 0.0),
    (0, 2, 0.0),
    (1, 2, 0.0),
];

const PERMUTATIONS_4: [[usize; 4]; 24] = [
    [0, 1, 2, 3],
    [0, 1, 3, 2],
    [0, 2, 1, 3],
    [0, 2, 3, 1],
    [0, 3, 1, 2],
    [0, 3, 2, 1],
    [1, 0, 2, 3],
    [1, 0, 3, 2],
    [1, 2, 0, 3],
    [1, 2, 3, 0],
    [1, 3, 0, 2],
    [1, 3, 2, 0],
    [2, 0, 1, 3],
    [2, 0, 3, 1],
    [2, 1, 0, 3],
    [2, 1, 3, 0],
    [2, 3, 0, 1],
    [2, 3, 1, 0],
    [3, 0, 1, 2],
    [3, 0, 2, 1],
    [3, 1, 0, 2],
    [3, 1, 2, 0],
    [3, 2, 0, 1],
    [3, 2, 1, 0],
];

/// Outcome of [`FullTensor4::validate`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ValidationReport {
    /// Largest `|𝔸ᵢⱼₖₗ − 𝔸_σ(ijkl)|` over all index permutations σ.
    pub symmetry_violation: f64,
    /// Largest deviation of a partial trace from `δₖₗ`.
    pub trace_violation: f64,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.symmetry_violation < STRUCTURE_TOLERANCE && self.trace_violation < STRUCTURE_TOLERANCE
    }
}
