//! Self-checks over all modules, run by the `verify` command.
//!
//! `Quick` covers closed forms and structural properties and finishes in
//! seconds; `Full` adds Monte Carlo cross-validation against brute-force
//! enumeration.

use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::design::InteractionDesign;
use crate::designs::{
    adjacent_design, is_difference_set, is_packing, maximal_design, random_classic_design,
    random_generalized_design, random_latin_square, tabulated_difference_sets, translate_design,
    DifferenceSet,
};
use crate::error::DEFAULT_DENSE_CAP;
use crate::landscape::{model_matrix, Landscape, WeightDistribution};
use crate::optima::{
    check_sigma_identity, expected_local_optima, monte_carlo_expected_optima, sigma_from_design,
    OverlapCounts,
};
use crate::orthant::{orthant, CovMatrix, OrthantSettings};
use crate::walsh::{
    column_spaces_equal, extract_coefficients, max_rank_bound, rank, term_moment, term_set,
    variance_fraction, walsh_matrix, Term, RANK_TOL,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VerifyLevel {
    Quick,
    Full,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub module: &'static str,
    pub property: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

type CheckResult = std::result::Result<String, String>;

struct Check {
    module: &'static str,
    property: &'static str,
    full_only: bool,
    run: fn() -> CheckResult,
}

const CHECKS: &[Check] = &[
    Check {
        module: "landscape-core",
        property: "example_model_matrix",
        full_only: false,
        run: example_model_matrix,
    },
    Check {
        module: "walsh-model",
        property: "rank_anchors",
        full_only: false,
        run: rank_anchors,
    },
    Check {
        module: "walsh-model",
        property: "variance_anchors",
        full_only: false,
        run: variance_anchors,
    },
    Check {
        module: "walsh-model",
        property: "variance_conservation",
        full_only: false,
        run: variance_conservation,
    },
    Check {
        module: "walsh-model",
        property: "column_space_equality",
        full_only: false,
        run: column_space_equality,
    },
    Check {
        module: "designs",
        property: "tabulated_difference_sets",
        full_only: false,
        run: tabulated_sets,
    },
    Check {
        module: "designs",
        property: "necessary_condition",
        full_only: false,
        run: necessary_condition,
    },
    Check {
        module: "designs",
        property: "random_latin_squares",
        full_only: false,
        run: latin_squares,
    },
    Check {
        module: "mvn-orthant",
        property: "closed_forms",
        full_only: false,
        run: orthant_closed_forms,
    },
    Check {
        module: "optima",
        property: "sigma_identity",
        full_only: false,
        run: sigma_identity,
    },
    Check {
        module: "optima",
        property: "k_limits",
        full_only: false,
        run: k_limits,
    },
    Check {
        module: "walsh-model",
        property: "coefficient_moments_mc",
        full_only: true,
        run: coefficient_moments_mc,
    },
    Check {
        module: "optima",
        property: "brute_force_vs_analytic",
        full_only: true,
        run: brute_force_vs_analytic,
    },
];

/// Runs every check for `level` in a fixed order.
pub fn run_verification(level: VerifyLevel) -> Vec<CheckOutcome> {
    CHECKS
        .iter()
        .filter(|c| level == VerifyLevel::Full || !c.full_only)
        .map(|c| {
            let start = Instant::now();
            let result = (c.run)();
            CheckOutcome {
                module: c.module,
                property: c.property,
                passed: result.is_ok(),
                detail: result.unwrap_or_else(|e| e),
                elapsed: start.elapsed(),
            }
        })
        .collect()
}

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> std::result::Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn err(e: crate::Error) -> String {
    e.to_string()
}

fn example_design() -> InteractionDesign {
    InteractionDesign::new(3, vec![vec![1, 2], vec![2, 3], vec![1, 3]]).expect("valid example")
}

fn example_model_matrix() -> CheckResult {
    let f = model_matrix(&example_design(), DEFAULT_DENSE_CAP).map_err(err)?;
    // Row g, block i: the column hit is e_i(g).
    let expected_hits = [
        [0, 0, 0],
        [0, 1, 1],
        [1, 2, 0],
        [1, 3, 1],
        [2, 0, 2],
        [2, 1, 3],
        [3, 2, 2],
        [3, 3, 3],
    ];
    for (g, hits) in expected_hits.iter().enumerate() {
        for (block, &hit) in hits.iter().enumerate() {
            for col in 0..4 {
                let want = u8::from(col == hit);
                ensure(f[(g, 4 * block + col)] == want, || {
                    format!("F[{g}, {}] = {}", 4 * block + col, f[(g, 4 * block + col)])
                })?;
            }
        }
    }
    Ok("N=3 example reproduced".into())
}

fn rank_anchors() -> CheckResult {
    let cases = [
        ("example", example_design(), 7),
        ("maximal 7,2", maximal_design(7, 2).map_err(err)?, 36),
        ("adjacent 7,2", adjacent_design(7, 2).map_err(err)?, 29),
    ];
    for (name, design, want) in cases {
        let got = rank(&design);
        ensure(got == want, || {
            format!("{name}: rank {got}, expected {want}")
        })?;
    }
    Ok("ranks 7, 36, 29".into())
}

fn variance_anchors() -> CheckResult {
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
    .map_err(err)?;
    let b = InteractionDesign::new(
        5,
        vec![vec![1, 4], vec![1, 2, 3, 4], vec![3], vec![4], vec![2, 5]],
    )
    .map_err(err)?;
    let first = Term::new(vec![1]);
    for (name, design, num) in [("A", &a, 7), ("B", &b, 5)] {
        let got = variance_fraction(design, &first);
        let want = Ratio::new(num, 16 * 5);
        ensure(got == want, || {
            format!("design {name}: Var fraction {got}, expected {want}")
        })?;
    }
    for k in 2..=4 {
        let min_n = crate::designs::builtin_difference_set(k)
            .map_err(err)?
            .min_n;
        let d = maximal_design(min_n, k).map_err(err)?;
        let main = variance_fraction(&d, &Term::new(vec![1]));
        let pair = term_set(&d)
            .terms()
            .iter()
            .find(|t| t.order() == 2)
            .map(|t| variance_fraction(&d, t))
            .ok_or("no interaction term")?;
        ensure(main == pair * Ratio::from_integer(k as i128 + 1), || {
            format!("K={k}: main {main}, interaction {pair}")
        })?;
    }
    Ok("design A 7/16, design B 5/16, ratios K+1".into())
}

fn random_design(
    rng: &mut ChaCha8Rng,
    max_n: usize,
    max_k: usize,
) -> crate::Result<InteractionDesign> {
    let n = rng.random_range(1..=max_n);
    let k = rng.random_range(0..=max_k.min(n - 1));
    let seed = rng.random();
    if rng.random_bool(0.5) {
        random_classic_design(n, k, seed)
    } else {
        random_generalized_design(n, k, seed)
    }
}

fn variance_conservation() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for trial in 0..100 {
        let d = random_design(&mut rng, 30, 4).map_err(err)?;
        let total = term_set(&d)
            .terms()
            .iter()
            .fold(Ratio::from_integer(0), |acc, t| {
                acc + variance_fraction(&d, t)
            });
        ensure(total == Ratio::from_integer(1), || {
            format!("trial {trial}: variances sum to {total} sigma^2")
        })?;
    }
    Ok("100 random designs".into())
}

fn column_space_equality() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(0xc01);
    for trial in 0..8 {
        let d = random_design(&mut rng, 8, 3).map_err(err)?;
        let f = model_matrix(&d, DEFAULT_DENSE_CAP)
            .map_err(err)?
            .map(f64::from);
        let w = walsh_matrix(&d, DEFAULT_DENSE_CAP)
            .map_err(err)?
            .map(f64::from);
        let equal = column_spaces_equal(&f, &w, RANK_TOL).map_err(err)?;
        ensure(equal, || format!("trial {trial}: column spaces differ"))?;
    }
    Ok("8 random designs".into())
}

fn tabulated_sets() -> CheckResult {
    for t in tabulated_difference_sets() {
        ensure(is_difference_set(t.elements, t.min_n).map_err(err)?, || {
            format!("K={} set is not a difference set mod {}", t.k, t.min_n)
        })?;
        let ds = DifferenceSet::new(t.elements.to_vec(), t.min_n).map_err(err)?;
        let d = translate_design(&ds, t.min_n).map_err(err)?;
        ensure(is_packing(&d), || {
            format!("K={} translates are not a packing", t.k)
        })?;
        let bound = max_rank_bound(t.min_n, t.k).map_err(err)?;
        let r = rank(&d) as u128;
        ensure(r == bound, || format!("K={}: rank {r}, bound {bound}", t.k))?;
    }
    Ok("8 sets at threshold N".into())
}

fn necessary_condition() -> CheckResult {
    for k in 2..=9 {
        let n = k * k + k;
        ensure(maximal_design(n, k).is_err(), || {
            format!("maximal design accepted at N={n}, K={k}")
        })?;
    }
    Ok("N < K^2+K+1 rejected".into())
}

fn latin_squares() -> CheckResult {
    for (n, seed) in [(2, 1), (5, 2), (9, 3), (16, 4)] {
        let sq =
            random_latin_square(n, seed, crate::designs::default_latin_steps(n)).map_err(err)?;
        ensure(sq.is_latin(), || format!("order {n} square is not Latin"))?;
    }
    Ok("orders 2, 5, 9, 16".into())
}

fn orthant_closed_forms() -> CheckResult {
    let settings = OrthantSettings::default();
    let diag =
        CovMatrix::from_fn(12, |i, j| if i == j { 1.0 + i as f64 } else { 0.0 }).map_err(err)?;
    let est = orthant(&diag, &settings).map_err(err)?;
    ensure((est.value - 2f64.powi(-12)).abs() < 1e-12, || {
        format!("diagonal: {}", est.value)
    })?;
    for rho in [-0.9, -0.5, 0.0, 0.5, 0.9] {
        let s = CovMatrix::new(2, vec![1.0, rho, rho, 1.0]).map_err(err)?;
        let est = orthant(&s, &settings).map_err(err)?;
        let want = 0.25 + f64::asin(rho) / (2.0 * std::f64::consts::PI);
        ensure((est.value - want).abs() <= 1e-4, || {
            format!("bivariate rho={rho}: {} vs {want}", est.value)
        })?;
    }
    let equi = CovMatrix::from_fn(5, |i, j| if i == j { 1.0 } else { 0.5 }).map_err(err)?;
    let est = orthant(&equi, &settings).map_err(err)?;
    ensure((est.value - 1.0 / 6.0).abs() <= 2e-4, || {
        format!("equicorrelated: {}", est.value)
    })?;
    Ok("diagonal, bivariate, equicorrelated".into())
}

fn sigma_identity() -> CheckResult {
    let mut rng = ChaCha8Rng::seed_from_u64(0x516);
    for trial in 0..100 {
        let d = random_design(&mut rng, 30, 6).map_err(err)?;
        let counts = OverlapCounts::new(&d);
        if let Some((i, j)) = counts.first_mismatch() {
            return Err(format!("trial {trial}: forms differ at ({i}, {j})"));
        }
        let sigma = sigma_from_design(&d, 2.0).map_err(err)?;
        check_sigma_identity(&d, &sigma, 2.0, 1e-12).map_err(err)?;
    }
    Ok("100 random designs".into())
}

fn k_limits() -> CheckResult {
    let settings = OrthantSettings::default();
    let r =
        expected_local_optima(&maximal_design(10, 0).map_err(err)?, 1.0, &settings).map_err(err)?;
    ensure((r.expected - 1.0).abs() <= 1e-3, || {
        format!("K=0: {}", r.expected)
    })?;
    let full = InteractionDesign::new(8, vec![(1..=8).collect(); 8]).map_err(err)?;
    let r = expected_local_optima(&full, 1.0, &settings).map_err(err)?;
    let want = 256.0 / 9.0;
    ensure(
        (r.expected - want).abs() <= r.expected_error.max(1e-9),
        || format!("K=N-1: {} +- {} vs {want}", r.expected, r.expected_error),
    )?;
    Ok(format!("K=N-1 at N=8: {:.4}", r.expected))
}

fn coefficient_moments_mc() -> CheckResult {
    let d = random_classic_design(8, 2, 21).map_err(err)?;
    let terms = term_set(&d);
    let reps = 2000;
    let mut samples = DMatrix::<f64>::zeros(reps, terms.len());
    for r in 0..reps {
        let ls = Landscape::generate(
            d.clone(),
            1.0,
            1.0,
            WeightDistribution::Normal,
            1000 + r as u64,
        )
        .map_err(err)?;
        let beta = extract_coefficients(&ls, DEFAULT_DENSE_CAP).map_err(err)?;
        for (c, v) in beta.values.iter().enumerate() {
            samples[(r, c)] = *v;
        }
    }
    let m = reps as f64;
    for (c, t) in terms.terms().iter().enumerate() {
        let moment = term_moment(&d, t, 1.0, 1.0);
        let col = samples.column(c);
        let mean = col.mean();
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
        let mean_se = (moment.variance / m).sqrt();
        let var_se = moment.variance * (2.0 / (m - 1.0)).sqrt();
        ensure((mean - moment.mean).abs() <= 4.0 * mean_se, || {
            format!("term {t}: mean {mean} vs {}", moment.mean)
        })?;
        ensure((var - moment.variance).abs() <= 4.0 * var_se, || {
            format!("term {t}: variance {var} vs {}", moment.variance)
        })?;
    }
    Ok(format!("{} terms, {reps} landscapes", terms.len()))
}

fn brute_force_vs_analytic() -> CheckResult {
    let settings = OrthantSettings {
        rel_tol: 1e-3,
        ..OrthantSettings::default()
    };
    let mut summary = Vec::new();
    for (name, d) in [
        ("adjacent", adjacent_design(10, 2).map_err(err)?),
        (
            "random classic",
            random_classic_design(10, 2, 5).map_err(err)?,
        ),
    ] {
        let analytic = expected_local_optima(&d, 1.0, &settings).map_err(err)?;
        let mc = monte_carlo_expected_optima(
            &d,
            1.0,
            WeightDistribution::Normal,
            2000,
            77,
            DEFAULT_DENSE_CAP,
        )
        .map_err(err)?;
        let se = mc.std_error.unwrap_or(0.0);
        let gap = (mc.mean - analytic.expected).abs();
        ensure(gap <= 4.0 * (se + analytic.expected_error), || {
            format!(
                "{name}: brute force {:.3} +- {se:.3} vs analytic {:.3} +- {:.3}",
                mc.mean, analytic.expected, analytic.expected_error
            )
        })?;
        summary.push(format!("{name} {:.2} vs {:.2}", mc.mean, analytic.expected));
    }
    Ok(summary.join("; "))
}
