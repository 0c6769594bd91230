//! Expected and observed numbers of local optima.
//!
//! For a fixed genotype, the vector `z` of fitness drops to its `N` one-bit
//! neighbours is a linear function of the weights, so under normal weights it
//! is `N(0, Σ)` with `Σ` depending only on how the interaction sets overlap.
//! The expected number of strict local optima is then `2^N · P(z > 0)`.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::InteractionDesign;
use crate::error::{check_cap, Error, Result};
use crate::landscape::{full_fitness_vector, Landscape, WeightDistribution};
use crate::orthant::{orthant, orthant_mc_fallback, CovMatrix, OrthantSettings};
use crate::seed::derive_seed;
use crate::walsh::rank;

/// Integer overlap counts behind `Σ`, before scaling by `σ²/N`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OverlapCounts {
    n: usize,
    /// `a_i = |{k : i ∈ V_k}|`.
    pub memberships: Vec<i64>,
    /// Row-major `N × N`; diagonal `2 a_i`, off-diagonal
    /// `a_i + a_j − |{k : i ∈ V_k or j ∈ V_k}|`.
    pub two_case: Vec<i64>,
    /// Row-major `N × N`; diagonal `2 a_i`, off-diagonal
    /// `|{k : i ∈ V_k and j ∈ V_k}|`.
    pub intersection: Vec<i64>,
}

impl OverlapCounts {
    pub fn new(design: &InteractionDesign) -> Self {
        let n = design.n();
        let words = n.div_ceil(64);
        // membership[i] is the bitset of sets containing locus i.
        let mut membership = vec![vec![0u64; words]; n];
        let mut intersection = vec![0i64; n * n];
        for (k, set) in design.sets().iter().enumerate() {
            for &i in set {
                membership[i - 1][k / 64] |= 1 << (k % 64);
            }
            for (a, &i) in set.iter().enumerate() {
                for &j in &set[a + 1..] {
                    intersection[(i - 1) * n + (j - 1)] += 1;
                    intersection[(j - 1) * n + (i - 1)] += 1;
                }
            }
        }
        let memberships: Vec<i64> = membership
            .iter()
            .map(|m| m.iter().map(|w| w.count_ones() as i64).sum())
            .collect();
        let mut two_case = vec![0i64; n * n];
        for i in 0..n {
            two_case[i * n + i] = 2 * memberships[i];
            intersection[i * n + i] = 2 * memberships[i];
            for j in 0..n {
                if i == j {
                    continue;
                }
                let union: i64 = membership[i]
                    .iter()
                    .zip(&membership[j])
                    .map(|(a, b)| (a | b).count_ones() as i64)
                    .sum();
                two_case[i * n + j] = memberships[i] + memberships[j] - union;
            }
        }
        Self {
            n,
            memberships,
            two_case,
            intersection,
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// First entry where the two forms disagree, if any.
    pub fn first_mismatch(&self) -> Option<(usize, usize)> {
        (0..self.n * self.n)
            .find(|&idx| self.two_case[idx] != self.intersection[idx])
            .map(|idx| (idx / self.n, idx % self.n))
    }
}

/// Covariance of the neighbour fitness drops at any genotype:
/// `σ_ii = (2σ²/N) a_i`, `σ_ij = (σ²/N) |{k : i, j ∈ V_k}|`.
///
/// Both the union form and the intersection form of the off-diagonal are
/// computed in integers and must agree.
pub fn sigma_from_design(design: &InteractionDesign, sigma2: f64) -> Result<CovMatrix> {
    if !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::parameter("sigma2 must be positive and finite"));
    }
    let counts = OverlapCounts::new(design);
    if let Some((i, j)) = counts.first_mismatch() {
        let idx = i * counts.n + j;
        return Err(Error::SigmaIdentity {
            i,
            j,
            detail: format!(
                "union form {} != intersection form {}",
                counts.two_case[idx], counts.intersection[idx]
            ),
        });
    }
    if let Some(i) = counts.memberships.iter().position(|&a| a == 0) {
        return Err(Error::parameter(format!(
            "locus {} appears in no interaction set",
            i + 1
        )));
    }
    let scale = sigma2 / design.n() as f64;
    CovMatrix::new(
        design.n(),
        counts.two_case.iter().map(|&c| c as f64 * scale).collect(),
    )
}

/// Checks an externally supplied `Σ` entry-wise against the intersection
/// form for `design`, with relative tolerance `rel_tol`.
pub fn check_sigma_identity(
    design: &InteractionDesign,
    sigma: &CovMatrix,
    sigma2: f64,
    rel_tol: f64,
) -> Result<()> {
    let n = design.n();
    if sigma.dim() != n {
        return Err(Error::DimensionMismatch(format!(
            "covariance of dimension {} for N = {n}",
            sigma.dim()
        )));
    }
    let counts = OverlapCounts::new(design);
    let scale = sigma2 / n as f64;
    for i in 0..n {
        for j in 0..n {
            let expected = counts.intersection[i * n + j] as f64 * scale;
            let got = sigma.get(i, j);
            if (got - expected).abs() > rel_tol * expected.abs().max(scale) {
                return Err(Error::SigmaIdentity {
                    i,
                    j,
                    detail: format!("got {got}, expected {expected}"),
                });
            }
        }
    }
    Ok(())
}

/// One row of the optima CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimaReport {
    pub n: usize,
    pub k_min: usize,
    pub k_max: usize,
    pub design_type: String,
    pub rank: usize,
    /// `2^N · P(z > 0)`; depends only on `N` and the correlation structure.
    pub expected: f64,
    pub expected_error: f64,
    pub observed_mean: Option<f64>,
    pub observed_se: Option<f64>,
    pub replicates: usize,
    pub seed: Option<u64>,
    /// Set when the orthant probability came from the Monte Carlo fallback.
    #[serde(skip)]
    pub degraded: bool,
}

pub const OPTIMA_CSV_HEADER: [&str; 11] = [
    "n",
    "k_min",
    "k_max",
    "design_type",
    "rank",
    "expected",
    "expected_error",
    "observed_mean",
    "observed_se",
    "replicates",
    "seed",
];

impl OptimaReport {
    pub fn with_observation(mut self, mc: &MonteCarloOptima, seed: u64) -> Self {
        self.observed_mean = Some(mc.mean);
        self.observed_se = mc.std_error;
        self.replicates = mc.replicates;
        self.seed = Some(seed);
        self
    }
}

/// Writes reports as CSV with the [`OPTIMA_CSV_HEADER`] columns.
pub fn write_optima_csv<W: std::io::Write>(out: W, reports: &[OptimaReport]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in reports {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

/// Expected number of strict local optima under independent normal weights.
///
/// A singular factorization falls back to plain Monte Carlo with
/// `settings.max_samples` draws and sets `degraded`.
pub fn expected_local_optima(
    design: &InteractionDesign,
    sigma2: f64,
    settings: &OrthantSettings,
) -> Result<OptimaReport> {
    let sigma = sigma_from_design(design, sigma2)?;
    let (estimate, degraded) = match orthant(&sigma, settings) {
        Ok(est) => (est, false),
        Err(Error::SingularCovariance { .. }) => (
            orthant_mc_fallback(&sigma, settings.max_samples, settings.seed)?,
            true,
        ),
        Err(e) => return Err(e),
    };
    let scale = 2f64.powi(design.n() as i32);
    let (k_min, k_max) = design.k_range();
    Ok(OptimaReport {
        n: design.n(),
        k_min,
        k_max,
        design_type: if design.is_classic() {
            "classic".into()
        } else {
            "generalized".into()
        },
        rank: rank(design),
        expected: scale * estimate.value,
        expected_error: scale * estimate.error,
        observed_mean: None,
        observed_se: None,
        replicates: 0,
        seed: None,
        degraded,
    })
}

fn check_fitness_len(len: usize) -> Result<usize> {
    if len < 2 || !len.is_power_of_two() {
        return Err(Error::DimensionMismatch(format!(
            "fitness vector of length {len} is not 2^N with N >= 1"
        )));
    }
    Ok(len.trailing_zeros() as usize)
}

/// True iff `p[j]` strictly exceeds the fitness of every one-bit neighbour.
pub fn is_local_optimum(p: &[f64], j: usize) -> Result<bool> {
    let n = check_fitness_len(p.len())?;
    if j >= p.len() {
        return Err(Error::Index(format!("genotype {j} of {}", p.len())));
    }
    Ok((0..n).all(|b| p[j] > p[j ^ (1 << b)]))
}

/// Number of strict local optima in a full fitness vector.
pub fn count_optima_in(p: &[f64]) -> Result<usize> {
    let n = check_fitness_len(p.len())?;
    Ok((0..p.len())
        .filter(|&j| (0..n).all(|b| p[j] > p[j ^ (1 << b)]))
        .count())
}

pub fn count_local_optima(ls: &Landscape, cap: usize) -> Result<usize> {
    count_optima_in(&full_fitness_vector(ls, cap)?)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MonteCarloOptima {
    pub mean: f64,
    /// Standard error of the mean; absent for a single replicate.
    pub std_error: Option<f64>,
    pub replicates: usize,
    /// Set for non-normal weights, where the analytic count is only the
    /// central-limit approximation.
    pub clt_approximation: bool,
}

/// Mean and standard error of the local-optima count over `replicates`
/// landscapes with `μ = 0`. Replicate `r` uses a seed derived from
/// `(seed, r)`, so the result does not depend on scheduling.
pub fn monte_carlo_expected_optima(
    design: &InteractionDesign,
    sigma2: f64,
    distribution: WeightDistribution,
    replicates: usize,
    seed: u64,
    cap: usize,
) -> Result<MonteCarloOptima> {
    if replicates == 0 {
        return Err(Error::parameter("replicates must be at least 1"));
    }
    check_cap(design.n(), cap)?;
    let counts: Vec<usize> = (0..replicates)
        .into_par_iter()
        .map(|r| {
            let ls = Landscape::generate(
                design.clone(),
                0.0,
                sigma2,
                distribution,
                derive_seed(seed, &[r as u64]),
            )?;
            count_local_optima(&ls, cap)
        })
        .collect::<Result<_>>()?;
    let m = replicates as f64;
    let mean = counts.iter().map(|&c| c as f64).sum::<f64>() / m;
    let std_error = (replicates > 1).then(|| {
        let var = counts
            .iter()
            .map(|&c| (c as f64 - mean).powi(2))
            .sum::<f64>()
            / (m - 1.0);
        (var / m).sqrt()
    });
    Ok(MonteCarloOptima {
        mean,
        std_error,
        replicates,
        clt_approximation: distribution != WeightDistribution::Normal,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::designs::{adjacent_design, maximal_design};
    use crate::error::DEFAULT_DENSE_CAP;
    use crate::landscape::WeightVector;

    fn full_design(n: usize) -> InteractionDesign {
        InteractionDesign::new(n, vec![(1..=n).collect(); n]).unwrap()
    }

    #[test]
    fn sigma_k_zero_is_diagonal() {
        let d = maximal_design(6, 0).unwrap();
        let s = sigma_from_design(&d, 3.0).unwrap();
        for i in 0..6 {
            for j in 0..6 {
                let want = if i == j { 2.0 * 3.0 / 6.0 } else { 0.0 };
                assert_eq!(s.get(i, j), want);
            }
        }
    }

    #[test]
    fn sigma_full_interaction() {
        let s = sigma_from_design(&full_design(5), 1.5).unwrap();
        for i in 0..5 {
            for j in 0..5 {
                let want = if i == j { 3.0 } else { 1.5 };
                assert!((s.get(i, j) - want).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn sigma_design_a_first_locus() {
        let a = InteractionDesign::new(
            5,
            vec![
                vec![1, 2, 3, 4],
                vec![2, 3],
                vec![1, 3],
                vec![1, 3, 4],
                vec![2, 5],
            ],
        )
        .unwrap();
        let s = sigma_from_design(&a, 1.0).unwrap();
        assert!((s.get(0, 0) - 6.0 / 5.0).abs() < 1e-15);
        check_sigma_identity(&a, &s, 1.0, 1e-12).unwrap();
    }

    #[test]
    fn tampered_sigma_is_caught() {
        let d = adjacent_design(6, 2).unwrap();
        let s = sigma_from_design(&d, 1.0).unwrap();
        let tampered = CovMatrix::from_fn(6, |i, j| {
            if i == j {
                s.get(i, j)
            } else {
                1.1 * s.get(i, j)
            }
        })
        .unwrap();
        assert!(matches!(
            check_sigma_identity(&d, &tampered, 1.0, 1e-9),
            Err(Error::SigmaIdentity { .. })
        ));
    }

    #[test]
    fn sigma_rejects_bad_variance() {
        let d = adjacent_design(4, 1).unwrap();
        assert!(sigma_from_design(&d, 0.0).is_err());
        assert!(sigma_from_design(&d, f64::NAN).is_err());
    }

    #[test]
    fn expected_k_zero_is_one() {
        let report = expected_local_optima(
            &maximal_design(10, 0).unwrap(),
            1.0,
            &OrthantSettings::default(),
        )
        .unwrap();
        assert!((report.expected - 1.0).abs() < 1e-12);
        assert_eq!(report.rank, 11);
        assert!(!report.degraded);
    }

    #[test]
    fn expected_full_interaction() {
        let report =
            expected_local_optima(&full_design(10), 1.0, &OrthantSettings::default()).unwrap();
        let want = 1024.0 / 11.0;
        assert!((report.expected - want).abs() <= report.expected_error.max(0.1));
    }

    #[test]
    fn local_optimum_examples() {
        assert!(!is_local_optimum(&[1.0; 8], 3).unwrap());
        assert_eq!(count_optima_in(&[1.0; 8]).unwrap(), 0);
        assert!(is_local_optimum(&[2.0, 1.0], 0).unwrap());
        assert!(!is_local_optimum(&[2.0, 1.0], 1).unwrap());
        assert!(is_local_optimum(&[1.0, 2.0, 3.0], 0).is_err());
        assert!(is_local_optimum(&[1.0, 2.0], 2).is_err());
    }

    #[test]
    fn additive_landscape_has_one_optimum() {
        let d = maximal_design(7, 0).unwrap();
        let blocks = (0..7).map(|i| vec![0.0, (i + 1) as f64]).collect();
        let ls = Landscape::new(d.clone(), WeightVector::from_blocks(&d, blocks).unwrap()).unwrap();
        assert_eq!(count_local_optima(&ls, DEFAULT_DENSE_CAP).unwrap(), 1);
    }

    #[test]
    fn monte_carlo_single_replicate_has_no_se() {
        let d = adjacent_design(6, 1).unwrap();
        let mc =
            monte_carlo_expected_optima(&d, 1.0, WeightDistribution::Normal, 1, 5, 20).unwrap();
        assert!(mc.std_error.is_none());
        assert!(!mc.clt_approximation);
        let mc =
            monte_carlo_expected_optima(&d, 1.0, WeightDistribution::Uniform, 3, 5, 20).unwrap();
        assert!(mc.std_error.is_some());
        assert!(mc.clt_approximation);
    }

    #[test]
    fn monte_carlo_respects_cap() {
        let d = adjacent_design(12, 1).unwrap();
        assert!(matches!(
            monte_carlo_expected_optima(&d, 1.0, WeightDistribution::Normal, 2, 0, 10),
            Err(Error::Capacity { .. })
        ));
    }

    #[test]
    fn csv_row_layout() {
        let report = expected_local_optima(
            &maximal_design(4, 0).unwrap(),
            1.0,
            &OrthantSettings::default(),
        )
        .unwrap();
        let mut buf = Vec::new();
        write_optima_csv(&mut buf, &[report]).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let mut lines = text.lines();
        assert_eq!(lines.next().unwrap(), OPTIMA_CSV_HEADER.join(","));
        assert_eq!(lines.next().unwrap(), "4,0,0,classic,5,1.0,0.0,,,0,");
    }
}
