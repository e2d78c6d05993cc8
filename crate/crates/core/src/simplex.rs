//! Nelder–Mead simplex minimization.

use crate::error::RecoveryError;

#[derive(Debug, Clone, Copy)]
pub struct NelderMead {
    /// Offset of the initial simplex vertices along each coordinate.
    pub initial_step: f64,
    pub reflection: f64,
    pub expansion: f64,
    pub contraction: f64,
    pub shrink: f64,
    /// Stop once the largest vertex-to-vertex distance drops below this.
    pub diameter_tolerance: f64,
    pub max_iterations: usize,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self {
            initial_step: 0.1,
            reflection: 1.0,
            expansion: 2.0,
            contraction: 0.5,
            shrink: 0.5,
            diameter_tolerance: 1e-10,
            max_iterations: 10_000,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SimplexMinimum<const N: usize> {
    pub x: [f64; N],
    pub value: f64,
    pub iterations: usize,
    pub evaluations: usize,
}

impl NelderMead {
    pub fn minimize<const N: usize, F>(&self, mut f: F, x0: [f64; N]) -> Result<SimplexMinimum<N>, RecoveryError>
    where
        F: FnMut(&[f64; N]) -> f64,
    {
        let mut evaluations = 0usize;
        let mut eval = |x: &[f64; N]| {
            evaluations += 1;
            f(x)
        };

        // Vertices paired with their objective value; N + 1 of them.
        let mut simplex: Vec<([f64; N], f64)> = Vec::with_capacity(N + 1);
        simplex.push((x0, eval(&x0)));
        for i in 0..N {
            let mut x = x0;
            x[i] += self.initial_step;
            let fx = eval(&x);
            simplex.push((x, fx));
        }

        let mut diameter = f64::INFINITY;
        for iteration in 0..self.max_iterations {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            diameter = simplex_diameter(&simplex);
            if diameter < self.diameter_tolerance {
                let (x, value) = simplex[0];
                return Ok(SimplexMinimum {
                    x,
                    value,
                    iterations: iteration,
                    evaluations,
                });
            }

            let worst = simplex[N];
            let mut centroid = [0.0; N];
            for (v, _) in &simplex[..N] {
                for (c, x) in centroid.iter_mut().zip(v) {
                    *c += x / N as f64;
                }
            }
            let towards = |t: f64, from: &[f64; N]| -> [f64; N] {
                std::array::from_fn(|i| centroid[i] + t * (from[i] - centroid[i]))
            };

            let xr = towards(-self.reflection, &worst.0);
            let fr = eval(&xr);
            if fr < simplex[0].1 {
                let xe = towards(-self.reflection * self.expansion, &worst.0);
                let fe = eval(&xe);
                simplex[N] = if fe < fr { (xe, fe) } else { (xr, fr) };
                continue;
            }
            if fr < simplex[N - 1].1 {
                simplex[N] = (xr, fr);
                continue;
            }
            let accepted = if fr < worst.1 {
                let xc = towards(-self.reflection * self.contraction, &worst.0);
                let fc = eval(&xc);
                (fc <= fr).then_some((xc, fc))
            } else {
                let xc = towards(self.contraction, &worst.0);
                let fc = eval(&xc);
                (fc < worst.1).then_some((xc, fc))
            };
            match accepted {
                Some(v) => simplex[N] = v,
                None => {
                    let best = simplex[0].0;
                    for vertex in simplex.iter_mut().skip(1) {
                        let x: [f64; N] = std::array::from_fn(|i| best[i] + self.shrink * (vertex.0[i] - best[i]));
                        *vertex = (x, eval(&x));
                    }
                }
            }
        }
        Err(RecoveryError::NoConvergence {
            iterations: self.max_iterations,
            diameter,
        })
    }
}

fn simplex_diameter<const N: usize>(simplex: &[([f64; N], f64)]) -> f64 {
    let mut d2 = 0.0_f64;
    for (i, a) in simplex.iter().enumerate() {
        for b in &simplex[i + 1..] {
            let dist2: f64 = a.0.iter().zip(&b.0).map(|(x, y)| (x - y) * (x - y)).sum();
            d2 = d2.max(dist2);
        }
    }
    d2.sqrt()
}
