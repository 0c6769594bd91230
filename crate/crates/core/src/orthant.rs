//! Multivariate normal orthant probabilities `P(Z > 0)` for `Z ~ N(0, Σ)`.
//!
//! The main estimator is the sequential-conditioning transformation to the
//! unit cube (Genz), with greedy reordering of variables during the Cholesky
//! factorization and a randomized Richtmyer lattice sequence. Error estimates
//! come from independent random shifts. A plain Monte Carlo estimator over an
//! eigendecomposition square root serves as oracle and PSD-degenerate
//! fallback.

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use statrs::function::erf::erfc_inv;

use crate::error::{Error, Result};
use crate::seed::derive_seed;

/// A symmetric covariance matrix with strictly positive diagonal, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct CovMatrix {
    dim: usize,
    entries: Vec<f64>,
}

impl CovMatrix {
    pub fn new(dim: usize, entries: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::parameter("covariance dimension must be positive"));
        }
        if entries.len() != dim * dim {
            return Err(Error::DimensionMismatch(format!(
                "{} entries for a {dim}x{dim} matrix",
                entries.len()
            )));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidCovariance("non-finite entry".into()));
        }
        for i in 0..dim {
            let d = entries[i * dim + i];
            if d.is_nan() || d <= 0.0 {
                return Err(Error::InvalidCovariance(format!(
                    "diagonal entry {i} is {d}, must be positive"
                )));
            }
            for j in 0..i {
                let a = entries[i * dim + j];
                let b = entries[j * dim + i];
                if (a - b).abs() > 1e-12 * (a.abs() + b.abs()).max(d) {
                    return Err(Error::InvalidCovariance(format!(
                        "not symmetric at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self { dim, entries })
    }

    pub fn from_fn(dim: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let entries = (0..dim * dim).map(|idx| f(idx / dim, idx % dim)).collect();
        Self::new(dim, entries)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries[i * self.dim + j]
    }

    pub fn entries(&self) -> &[f64] {
        &self.entries
    }

    pub fn scaled(&self, c: f64) -> Result<Self> {
        Self::new(self.dim, self.entries.iter().map(|v| v * c).collect())
    }

    /// `P Σ Pᵀ` where new coordinate `i` is old coordinate `perm[i]`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.dim {
            return Err(Error::DimensionMismatch("permutation length".into()));
        }
        Self::from_fn(self.dim, |i, j| self.get(perm[i], perm[j]))
    }

    pub fn correlation(&self) -> Self {
        let sd: Vec<f64> = (0..self.dim).map(|i| self.get(i, i).sqrt()).collect();
        let entries = (0..self.dim * self.dim)
            .map(|idx| {
                let (i, j) = (idx / self.dim, idx % self.dim);
                if i == j {
                    1.0
                } else {
                    self.entries[idx] / (sd[i] * sd[j])
                }
            })
            .collect();
        Self {
            dim: self.dim,
            entries,
        }
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.dim, self.dim, &self.entries)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrthantEstimate {
    pub value: f64,
    /// 3.5 standard errors of the mean over randomizations.
    pub error: f64,
    /// Total integrand evaluations over all randomizations.
    pub samples: u64,
    pub replicates: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OrthantSettings {
    /// Stop once the error estimate is at most this.
    pub abs_tol: f64,
    /// Also stop once the error estimate is at most this fraction of the value.
    pub rel_tol: f64,
    /// Cap on lattice points per randomization.
    pub max_samples: u64,
    pub replicates: usize,
    pub seed: u64,
}

impl Default for OrthantSettings {
    fn default() -> Self {
        Self {
            abs_tol: 1e-4,
            rel_tol: 0.0,
            max_samples: 1 << 22,
            replicates: 12,
            seed: 0,
        }
    }
}

const ERROR_SIGMAS: f64 = 3.5;
const INITIAL_POINTS: u64 = 512;
/// Conditional variances below this fraction of the (unit) marginal variance
/// count as singular.
const PIVOT_TOL: f64 = 1e-10;

#[inline]
pub fn normal_cdf(x: f64) -> f64 {
    0.5 * libm::erfc(-x * std::f64::consts::FRAC_1_SQRT_2)
}

#[inline]
pub fn normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

#[inline]
pub fn normal_quantile(p: f64) -> f64 {
    -std::f64::consts::SQRT_2 * erfc_inv(2.0 * p)
}

/// Lower-triangular factor of the reordered correlation matrix.
#[derive(Debug, Clone)]
struct ConditioningFactor {
    dim: usize,
    /// Row-major lower triangle, `chol[i*dim + m]` for `m <= i`.
    chol: Vec<f64>,
}

impl ConditioningFactor {
    /// Cholesky factorization with greedy reordering: at each step the
    /// remaining variable with the smallest conditional probability of lying
    /// below zero (given the expected values of those already placed) goes
    /// next.
    fn new(sigma: &CovMatrix) -> Result<Self> {
        let dim = sigma.dim();
        let corr = sigma.correlation();
        let mut s = corr.entries().to_vec();
        let mut perm: Vec<usize> = (0..dim).collect();
        let mut chol = vec![0.0; dim * dim];
        let mut y = vec![0.0; dim];

        for i in 0..dim {
            let mut best: Option<(usize, f64, f64, f64)> = None;
            for j in i..dim {
                let row = &chol[j * dim..j * dim + i];
                let var = s[j * dim + j] - row.iter().map(|c| c * c).sum::<f64>();
                if var < PIVOT_TOL {
                    return Err(Error::SingularCovariance {
                        pivot: perm[j],
                        value: var,
                    });
                }
                let sd = var.sqrt();
                let shift: f64 = row.iter().zip(&y[..i]).map(|(c, yv)| c * yv).sum();
                let upper = -shift / sd;
                let prob = normal_cdf(upper);
                if best.is_none_or(|(_, p, _, _)| prob < p) {
                    best = Some((j, prob, sd, upper));
                }
            }
            let (j, prob, sd, upper) = best.expect("nonempty candidate range");
            if j != i {
                for col in 0..dim {
                    s.swap(i * dim + col, j * dim + col);
                }
                for row in 0..dim {
                    s.swap(row * dim + i, row * dim + j);
                }
                for m in 0..i {
                    chol.swap(i * dim + m, j * dim + m);
                }
                perm.swap(i, j);
            }
            chol[i * dim + i] = sd;
            for k in i + 1..dim {
                let dot: f64 = (0..i).map(|m| chol[k * dim + m] * chol[i * dim + m]).sum();
                chol[k * dim + i] = (s[k * dim + i] - dot) / sd;
            }
            // Mean of a standard normal truncated above at `upper`.
            y[i] = if prob > 1e-300 {
                -normal_pdf(upper) / prob
            } else {
                upper
            };
        }
        Ok(Self { dim, chol })
    }

    /// Integrand on `[0,1]^{dim-1}`; `ys` is scratch of length `dim`.
    fn integrand(&self, w: &[f64], ys: &mut [f64]) -> f64 {
        let dim = self.dim;
        let mut e = 0.5;
        let mut f = e;
        for i in 1..dim {
            let p = (w[i - 1] * e).clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON);
            ys[i - 1] = normal_quantile(p);
            let row = &self.chol[i * dim..i * dim + i];
            let shift: f64 = row.iter().zip(&ys[..i]).map(|(c, yv)| c * yv).sum();
            e = normal_cdf(-shift / self.chol[i * dim + i]);
            f *= e;
            if f == 0.0 {
                break;
            }
        }
        f
    }
}

fn first_primes(count: usize) -> Vec<u64> {
    let mut primes = Vec::with_capacity(count);
    let mut candidate = 2u64;
    while primes.len() < count {
        if primes
            .iter()
            .take_while(|&&p| p * p <= candidate)
            .all(|&p| !candidate.is_multiple_of(p))
        {
            primes.push(candidate);
        }
        candidate += 1;
    }
    primes
}

/// Sum of integrand values over lattice points `start..end` of one shifted,
/// baker-transformed Richtmyer sequence, with antithetic pairs averaged.
fn lattice_sum(
    factor: &ConditioningFactor,
    generator: &[f64],
    shift: &[f64],
    start: u64,
    end: u64,
) -> f64 {
    let dims = generator.len();
    let mut w = vec![0.0; dims];
    let mut wa = vec![0.0; dims];
    let mut ys = vec![0.0; factor.dim];
    let mut total = 0.0;
    for k in start..end {
        let kf = k as f64;
        for d in 0..dims {
            let x = (kf * generator[d] + shift[d]).fract();
            let t = (2.0 * x - 1.0).abs();
            w[d] = t;
            wa[d] = 1.0 - t;
        }
        total += 0.5 * (factor.integrand(&w, &mut ys) + factor.integrand(&wa, &mut ys));
    }
    total
}

/// `P(Z > 0)` for `Z ~ N(0, sigma)` by randomized quasi-Monte Carlo.
///
/// Deterministic for a given seed; randomizations run in parallel with
/// per-randomization seeds and are combined in index order.
pub fn orthant(sigma: &CovMatrix, settings: &OrthantSettings) -> Result<OrthantEstimate> {
    if settings.replicates < 2 {
        return Err(Error::parameter("at least two randomizations are needed"));
    }
    if settings.max_samples == 0 {
        return Err(Error::parameter("max_samples must be positive"));
    }
    let factor = ConditioningFactor::new(sigma)?;
    let dim = sigma.dim();
    if dim == 1 {
        return Ok(OrthantEstimate {
            value: 0.5,
            error: 0.0,
            samples: 0,
            replicates: settings.replicates,
        });
    }
    let dims = dim - 1;
    let generator: Vec<f64> = first_primes(dims)
        .into_iter()
        .map(|p| (p as f64).sqrt().fract())
        .collect();
    let shifts: Vec<Vec<f64>> = (0..settings.replicates)
        .map(|r| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(settings.seed, &[r as u64]));
            (0..dims).map(|_| rng.random::<f64>()).collect()
        })
        .collect();

    let mut sums = vec![0.0; settings.replicates];
    let mut done = 0u64;
    let mut batch = INITIAL_POINTS.min(settings.max_samples);
    loop {
        let end = done + batch;
        let partial: Vec<f64> = shifts
            .par_iter()
            .map(|shift| lattice_sum(&factor, &generator, shift, done + 1, end + 1))
            .collect();
        for (s, p) in sums.iter_mut().zip(partial) {
            *s += p;
        }
        done = end;

        let r = settings.replicates as f64;
        let means: Vec<f64> = sums.iter().map(|s| s / done as f64).collect();
        let value = means.iter().sum::<f64>() / r;
        let var = means.iter().map(|m| (m - value).powi(2)).sum::<f64>() / (r * (r - 1.0));
        let error = ERROR_SIGMAS * var.sqrt();
        let converged = error <= settings.abs_tol || error <= settings.rel_tol * value.abs();
        if converged || done >= settings.max_samples {
            return Ok(OrthantEstimate {
                value: value.clamp(0.0, 1.0),
                error,
                samples: done * settings.replicates as u64,
                replicates: settings.replicates,
            });
        }
        batch = done.min(settings.max_samples - done);
    }
}

/// Plain Monte Carlo estimate of `P(Z > 0)` from `m` draws of
/// `Z = Q Λ^{1/2} u`.
///
/// Accepts positive semidefinite input: eigenvalues down to `-1e-10` (relative
/// to the largest diagonal entry) are clipped to zero.
pub fn orthant_mc_fallback(sigma: &CovMatrix, m: u64, seed: u64) -> Result<OrthantEstimate> {
    if m == 0 {
        return Err(Error::parameter("need at least one draw"));
    }
    let dim = sigma.dim();
    let scale = (0..dim).map(|i| sigma.get(i, i)).fold(0.0, f64::max);
    let eig = SymmetricEigen::new(sigma.to_dmatrix());
    let min = eig.eigenvalues.min();
    if min < -1e-10 * scale {
        return Err(Error::InvalidCovariance(format!(
            "negative eigenvalue {min:e}"
        )));
    }
    let root_vals = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    let root = &eig.eigenvectors * DMatrix::from_diagonal(&root_vals);

    const CHUNK: u64 = 1 << 14;
    let chunks = m.div_ceil(CHUNK);
    let hits: u64 = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(derive_seed(seed, &[c]));
            let count = CHUNK.min(m - c * CHUNK);
            let mut u = vec![0.0; dim];
            let mut hits = 0u64;
            for _ in 0..count {
                for v in u.iter_mut() {
                    *v = rng.sample(StandardNormal);
                }
                let inside = (0..dim).all(|i| {
                    let z: f64 = (0..dim).map(|j| root[(i, j)] * u[j]).sum();
                    z > 0.0
                });
                hits += u64::from(inside);
            }
            hits
        })
        .sum();
    let p = hits as f64 / m as f64;
    Ok(OrthantEstimate {
        value: p,
        error: ERROR_SIGMAS * (p * (1.0 - p) / m as f64).sqrt(),
        samples: m,
        replicates: 1,
    })
}
