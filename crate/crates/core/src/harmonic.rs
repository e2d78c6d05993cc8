//! Quartic polynomials of cross tensors and their projection onto degree-4
//! harmonic polynomials.

use std::f64::consts::PI;

use nalgebra::Vector3;

use crate::tensor::CrossTensor9;

/// Exponents `(p, q, r)` of the monomials `x₁ᵖ x₂^q x₃ʳ` with `p + q + r = 4`.
pub const QUARTIC_MONOMIALS: [(u8, u8, u8); 15] = [
    (4, 0, 0),
    (3, 1, 0),
    (3, 0, 1),
    (2, 2, 0),
    (2, 1, 1),
    (2, 0, 2),
    (1, 3, 0),
    (1, 2, 1),
    (1, 1, 2),
    (1, 0, 3),
    (0, 4, 0),
    (0, 3, 1),
    (0, 2, 2),
    (0, 1, 3),
    (0, 0, 4),
];

/// Exponents of the quadratic monomials, in the order used by [`Quadratic`].
pub const QUADRATIC_MONOMIALS: [(u8, u8, u8); 6] = [(2, 0, 0), (1, 1, 0), (1, 0, 1), (0, 2, 0), (0, 1, 1), (0, 0, 2)];

/// Coefficients over [`QUADRATIC_MONOMIALS`].
pub type Quadratic = [f64; 6];

fn quartic_slot(p: u8, q: u8, r: u8) -> usize {
    QUARTIC_MONOMIALS
        .iter()
        .position(|&m| m == (p, q, r))
        .expect("degree-4 monomial")
}

fn factorial(n: u8) -> f64 {
    (1..=n as u32).product::<u32>() as f64
}

fn monomial(x: &Vector3<f64>, (p, q, r): (u8, u8, u8)) -> f64 {
    x[0].powi(p as i32) * x[1].powi(q as i32) * x[2].powi(r as i32)
}

/// Homogeneous quartic in three variables.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct QuarticPolynomial(pub [f64; 15]);

impl QuarticPolynomial {
    /// `(x₁² + x₂² + x₃²)²`.
    pub fn norm4() -> Self {
        let mut c = [0.0; 15];
        for (slot, &(p, q, r)) in QUARTIC_MONOMIALS.iter().enumerate() {
            c[slot] = match (p, q, r) {
                (4, 0, 0) | (0, 4, 0) | (0, 0, 4) => 1.0,
                (2, 2, 0) | (2, 0, 2) | (0, 2, 2) => 2.0,
                _ => 0.0,
            };
        }
        QuarticPolynomial(c)
    }

    /// Expand `𝔸ᵢⱼₖₗ xᵢ xⱼ xₖ xₗ`: each monomial collects its component times
    /// the number of index orderings, `4!/(p! q! r!)`.
    pub fn from_tensor(a: &CrossTensor9) -> Self {
        let full = a.to_full();
        let mut c = [0.0; 15];
        for (slot, &(p, q, r)) in QUARTIC_MONOMIALS.iter().enumerate() {
            let mut idx = [0usize; 4];
            let mut k = 0;
            for (axis, count) in [p, q, r].into_iter().enumerate() {
                for _ in 0..count {
                    idx[k] = axis;
                    k += 1;
                }
            }
            let multiplicity = factorial(4) / (factorial(p) * factorial(q) * factorial(r));
            c[slot] = multiplicity * full.get(idx[0], idx[1], idx[2], idx[3]);
        }
        QuarticPolynomial(c)
    }

    pub fn coefficient(&self, p: u8, q: u8, r: u8) -> f64 {
        self.0[quartic_slot(p, q, r)]
    }

    pub fn evaluate(&self, x: &Vector3<f64>) -> f64 {
        QUARTIC_MONOMIALS
            .iter()
            .zip(&self.0)
            .map(|(&m, c)| c * monomial(x, m))
            .sum()
    }

    /// Exact coefficient arithmetic for `∇²p`.
    pub fn laplacian(&self) -> Quadratic {
        let mut out = [0.0; 6];
        for (&(p, q, r), c) in QUARTIC_MONOMIALS.iter().zip(&self.0) {
            let mut add = |e: (u8, u8, u8), w: f64| {
                if w != 0.0 {
                    let slot = QUADRATIC_MONOMIALS
                        .iter()
                        .position(|&m| m == e)
                        .expect("degree-2 monomial");
                    out[slot] += w * c;
                }
            };
            if p >= 2 {
                add((p - 2, q, r), (p * (p - 1)) as f64);
            }
            if q >= 2 {
                add((p, q - 2, r), (q * (q - 1)) as f64);
            }
            if r >= 2 {
                add((p, q, r - 2), (r * (r - 1)) as f64);
            }
        }
        out
    }

    /// Orthogonal projection onto harmonic quartics for an arbitrary quartic.
    ///
    /// Writes `p = h₄ + |x|² h₂ + c |x|⁴` with `h₂` harmonic, using
    /// `∇²(|x|² h₂) = 14 h₂`, `∇²|x|⁴ = 20|x|²` and `∇²|x|² = 6`.
    pub fn harmonic_part(&self) -> HarmonicQuartic {
        let lap = self.laplacian();
        let c = (2.0 * (lap[0] + lap[3] + lap[5])) / 120.0;
        let mut h2 = lap;
        for slot in [0, 3, 5] {
            h2[slot] -= 20.0 * c;
        }
        let h2 = h2.map(|v| v / 14.0);

        let mut out = self.sub(&QuarticPolynomial::norm4().scaled(c));
        for (&(p, q, r), coef) in QUADRATIC_MONOMIALS.iter().zip(h2) {
            for (dp, dq, dr) in [(2, 0, 0), (0, 2, 0), (0, 0, 2)] {
                out.0[quartic_slot(p + dp, q + dq, r + dr)] -= coef;
            }
        }
        HarmonicQuartic(out)
    }

    pub fn scaled(&self, s: f64) -> Self {
        QuarticPolynomial(self.0.map(|c| c * s))
    }

    pub fn sub(&self, other: &QuarticPolynomial) -> Self {
        QuarticPolynomial(std::array::from_fn(|i| self.0[i] - other.0[i]))
    }
}

/// A quartic whose Laplacian vanishes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HarmonicQuartic(QuarticPolynomial);

impl HarmonicQuartic {
    /// Accept `p` if every coefficient of `∇²p` is below `1e-12`.
    pub fn new(p: QuarticPolynomial) -> Option<Self> {
        p.laplacian()
            .iter()
            .all(|c| c.abs() < 1e-12)
            .then_some(HarmonicQuartic(p))
    }

    pub fn polynomial(&self) -> &QuarticPolynomial {
        &self.0
    }

    pub fn evaluate(&self, x: &Vector3<f64>) -> f64 {
        self.0.evaluate(x)
    }
}

/// `α − (3/5)|x|⁴`.
///
/// Every tensor of the linear space has `∇²α = 12|x|²` (the Laplacian only
/// sees partial traces), and `∇²|x|⁴ = 20|x|²`, so the result is harmonic.
pub fn project_to_harmonic(a: &CrossTensor9) -> HarmonicQuartic {
    let alpha = QuarticPolynomial::from_tensor(a);
    HarmonicQuartic(alpha.sub(&QuarticPolynomial::norm4().scaled(0.6)))
}

/// Real orthonormal spherical harmonic `Y₄,ₘ` at a unit vector, without the
/// Condon–Shortley phase. Negative `m` are the sine-type functions.
///
/// # Panics
///
/// If `m` is outside `-4..=4`.
pub fn sh4_eval(m: i32, x: &Vector3<f64>) -> f64 {
    let (x, y, z) = (x[0], x[1], x[2]);
    let inv_sqrt_pi = 1.0 / PI.sqrt();
    match m {
        -4 => 0.75 * (35.0f64).sqrt() * inv_sqrt_pi * x * y * (x * x - y * y),
        -3 => 0.75 * (35.0 / 2.0f64).sqrt() * inv_sqrt_pi * (3.0 * x * x - y * y) * y * z,
        -2 => 0.75 * (5.0f64).sqrt() * inv_sqrt_pi * x * y * (7.0 * z * z - 1.0),
        -1 => 0.75 * (5.0 / 2.0f64).sqrt() * inv_sqrt_pi * y * z * (7.0 * z * z - 3.0),
        0 => 3.0 / 16.0 * inv_sqrt_pi * (35.0 * z.powi(4) - 30.0 * z * z + 3.0),
        1 => 0.75 * (5.0 / 2.0f64).sqrt() * inv_sqrt_pi * x * z * (7.0 * z * z - 3.0),
        2 => 3.0 / 8.0 * (5.0f64).sqrt() * inv_sqrt_pi * (x * x - y * y) * (7.0 * z * z - 1.0),
        3 => 0.75 * (35.0 / 2.0f64).sqrt() * inv_sqrt_pi * (x * x - 3.0 * y * y) * x * z,
        4 => {
            3.0 / 16.0
                * (35.0f64).sqrt()
                * inv_sqrt_pi
                * (x * x * (x * x - 3.0 * y * y) - y * y * (3.0 * x * x - y * y))
        }
        _ => panic!("spherical harmonic order {m} outside -4..=4"),
    }
}

/// The octahedral frame function `√(7/12) Y₄,₀ + √(5/12) Y₄,₄` used by
/// spherical-harmonic cross representations.
pub fn sh_reference_frame(x: &Vector3<f64>) -> f64 {
    (7.0f64 / 12.0).sqrt() * sh4_eval(0, x) + (5.0f64 / 12.0).sqrt() * sh4_eval(4, x)
}

/// Product rule on the unit sphere: Gauss–Legendre in `cos θ` times the
/// uniform rule in `φ`. Exact for polynomials up to degree `2n − 1`.
#[derive(Debug, Clone)]
pub struct SphereQuadrature {
    points: Vec<(Vector3<f64>, f64)>,
}

impl SphereQuadrature {
    pub fn new(n: usize) -> Self {
        let (nodes, weights) = gauss_legendre(n);
        let n_phi = 2 * n;
        let mut points = Vec::with_capacity(n * n_phi);
        for (z, w) in nodes.iter().zip(&weights) {
            let rho = (1.0 - z * z).max(0.0).sqrt();
            for k in 0..n_phi {
                let phi = 2.0 * PI * (k as f64 + 0.5) / n_phi as f64;
                let x = Vector3::new(rho * phi.cos(), rho * phi.sin(), *z);
                points.push((x, w * 2.0 * PI / n_phi as f64));
            }
        }
        Self { points }
    }

    pub fn integrate(&self, f: impl Fn(&Vector3<f64>) -> f64) -> f64 {
        self.points.iter().map(|(x, w)| w * f(x)).sum()
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

impl Default for SphereQuadrature {
    /// Twelve latitude nodes: exact through degree 23, well above the
    /// degree-8 products integrated here.
    fn default() -> Self {
        Self::new(12)
    }
}

/// Nodes and weights of the `n`-point Gauss–Legendre rule on `[−1, 1]`.
fn gauss_legendre(n: usize) -> (Vec<f64>, Vec<f64>) {
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (p, d) = legendre_with_derivative(n, x);
            dp = d;
            let dx = p / d;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre_with_derivative(n, x);
        dp = if d != 0.0 { d } else { dp };
        nodes[i] = x;
        weights[i] = 2.0 / ((1.0 - x * x) * dp * dp);
    }
    (nodes, weights)
}

fn legendre_with_derivative(n: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if n == 0 {
        return (1.0, 0.0);
    }
    for k in 2..=n {
        let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// `∫_{S²} Y₄,ₘ (P(α) − α) dx`; zero for every `m` since `P(α) − α` is the
/// constant `−3/5` on the unit sphere.
pub fn orthogonality_check(a: &CrossTensor9, m: i32) -> f64 {
    orthogonality_check_with(a, &SphereQuadrature::default(), |x| sh4_eval(m, x))
}

/// Same integral against an arbitrary weight function.
pub fn orthogonality_check_with(
    a: &CrossTensor9,
    quadrature: &SphereQuadrature,
    weight: impl Fn(&Vector3<f64>) -> f64,
) -> f64 {
    let alpha = QuarticPolynomial::from_tensor(a);
    let h = project_to_harmonic(a);
    quadrature.integrate(|x| weight(x) * (h.evaluate(x) - alpha.evaluate(x)))
}
