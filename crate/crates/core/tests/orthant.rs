use std::f64::consts::PI;

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use nk_landscape::orthant::{orthant, orthant_mc_fallback, CovMatrix, OrthantSettings};

fn equicorrelated(n: usize, rho: f64) -> CovMatrix {
    CovMatrix::from_fn(n, |i, j| if i == j { 1.0 } else { rho }).unwrap()
}

/// Correlation matrix of `n` random Gaussian vectors in `R^dim`.
fn random_correlation(rng: &mut ChaCha8Rng, n: usize, dim: usize) -> CovMatrix {
    let a = DMatrix::<f64>::from_fn(n, dim, |_, _| rng.sample(StandardNormal));
    let g = &a * a.transpose();
    CovMatrix::from_fn(n, |i, j| g[(i, j)] / (g[(i, i)] * g[(j, j)]).sqrt()).unwrap()
}

/// Orthant probability for `n ∈ {3, 4}` by Plackett's identity along the
/// path `R(t) = (1-t) I + t R`, starting from `2^{-n}` at `t = 0`.
///
/// `∂P/∂ρ_ij = φ_2(0, 0; ρ_ij) · P(Z_rest > 0 | Z_i = Z_j = 0)`. For `n = 3`
/// the conditional factor is 1/2; for `n = 4` it is the bivariate orthant
/// of the partial correlation of the remaining pair.
fn plackett_orthant(r: &CovMatrix, intervals: usize) -> f64 {
    let n = r.dim();
    assert!(n == 3 || n == 4);
    let derivative = |t: f64| -> f64 {
        let rt = DMatrix::from_fn(n, n, |i, j| if i == j { 1.0 } else { t * r.get(i, j) });
        let inv = rt
            .clone()
            .try_inverse()
            .expect("path stays positive definite");
        let mut total = 0.0;
        for i in 0..n {
            for j in i + 1..n {
                let rho = rt[(i, j)];
                let density = 1.0 / (2.0 * PI * (1.0 - rho * rho).sqrt());
                let conditional = if n == 3 {
                    0.5
                } else {
                    let rest: Vec<usize> = (0..n).filter(|&m| m != i && m != j).collect();
                    let (k, l) = (rest[0], rest[1]);
                    let partial = -inv[(k, l)] / (inv[(k, k)] * inv[(l, l)]).sqrt();
                    0.25 + partial.clamp(-1.0, 1.0).asin() / (2.0 * PI)
                };
                total += r.get(i, j) * density * conditional;
            }
        }
        total
    };
    // Composite Simpson on [0, 1].
    let h = 1.0 / intervals as f64;
    let mut sum = derivative(0.0) + derivative(1.0);
    for m in 1..intervals {
        let weight = if m % 2 == 1 { 4.0 } else { 2.0 };
        sum += weight * derivative(m as f64 * h);
    }
    2f64.powi(-(n as i32)) + sum * h / 3.0
}

#[test]
fn plackett_oracle_matches_trivariate_closed_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(30);
    for _ in 0..20 {
        let r = random_correlation(&mut rng, 3, 5);
        let closed =
            0.125 + (r.get(0, 1).asin() + r.get(0, 2).asin() + r.get(1, 2).asin()) / (4.0 * PI);
        let oracle = plackett_orthant(&r, 2000);
        assert!((oracle - closed).abs() < 1e-9, "{oracle} vs {closed}");
    }
}

#[test]
fn plackett_oracle_matches_equicorrelated_identity() {
    let oracle = plackett_orthant(&equicorrelated(4, 0.5), 2000);
    assert!((oracle - 0.2).abs() < 1e-9, "{oracle}");
}

#[test]
fn reported_error_is_honest_at_dimension_four() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let trials = 200;
    let mut exceed = 0;
    for trial in 0..trials {
        let r = random_correlation(&mut rng, 4, 6);
        let oracle = plackett_orthant(&r, 2000);
        let coarse = plackett_orthant(&r, 1000);
        assert!((oracle - coarse).abs() < 1e-8, "oracle not converged");
        let settings = OrthantSettings {
            seed: trial,
            ..OrthantSettings::default()
        };
        let est = orthant(&r, &settings).unwrap();
        if (est.value - oracle).abs() > est.error {
            exceed += 1;
        }
    }
    assert!(
        (exceed as f64) < 0.02 * trials as f64,
        "{exceed} of {trials} errors exceeded the reported bound"
    );
}

#[test]
fn bivariate_closed_form_grid() {
    for step in -9..=9 {
        let rho = step as f64 / 10.0;
        let est = orthant(&equicorrelated(2, rho), &OrthantSettings::default()).unwrap();
        let want = 0.25 + rho.asin() / (2.0 * PI);
        assert!((est.value - want).abs() <= 1e-4, "rho={rho}: {}", est.value);
    }
}

#[test]
fn equicorrelated_identity() {
    for n in [3usize, 5, 10] {
        let est = orthant(&equicorrelated(n, 0.5), &OrthantSettings::default()).unwrap();
        assert!((est.value - 1.0 / (n as f64 + 1.0)).abs() <= 1e-4);
    }
    let mc = orthant_mc_fallback(&equicorrelated(3, 0.5), 1_000_000, 8).unwrap();
    assert!((mc.value - 0.25).abs() <= mc.error);
}

#[test]
fn agrees_with_monte_carlo_on_random_matrices() {
    let mut rng = ChaCha8Rng::seed_from_u64(50);
    for trial in 0..50 {
        let n = rng.random_range(2..=8);
        let scales: Vec<f64> = (0..n).map(|_| rng.random_range(0.2..5.0)).collect();
        let r = random_correlation(&mut rng, n, n + 2);
        let sigma = CovMatrix::from_fn(n, |i, j| r.get(i, j) * scales[i] * scales[j]).unwrap();
        let qmc = orthant(&sigma, &OrthantSettings::default()).unwrap();
        let mc = orthant_mc_fallback(&sigma, 200_000, trial).unwrap();
        assert!(
            (qmc.value - mc.value).abs() <= qmc.error + mc.error,
            "trial {trial} (n={n}): {} +- {} vs {} +- {}",
            qmc.value,
            qmc.error,
            mc.value,
            mc.error
        );
    }
}

#[test]
fn duplicated_coordinate_reduces_dimension() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let reduced = random_correlation(&mut rng, 4, 6);
    let idx = [0usize, 1, 2, 3, 2];
    let dup = CovMatrix::from_fn(5, |i, j| reduced.get(idx[i], idx[j])).unwrap();
    assert!(orthant(&dup, &OrthantSettings::default()).is_err());
    let mc = orthant_mc_fallback(&dup, 1_000_000, 6).unwrap();
    let exact = orthant(&reduced, &OrthantSettings::default()).unwrap();
    assert!((mc.value - exact.value).abs() <= mc.error + exact.error);
}

#[test]
fn monotone_in_correlation() {
    let values: Vec<_> = (0..10)
        .map(|step| {
            orthant(
                &equicorrelated(5, step as f64 / 10.0),
                &OrthantSettings::default(),
            )
            .unwrap()
        })
        .collect();
    for pair in values.windows(2) {
        assert!(pair[1].value >= pair[0].value - (pair[0].error + pair[1].error));
    }
}

#[test]
fn relative_tolerance_controls_tiny_probabilities() {
    // P = 1/51 at N = 50 with rho = 1/2; a K = 0 style diagonal gives 2^-50.
    let settings = OrthantSettings {
        rel_tol: 0.01,
        ..OrthantSettings::default()
    };
    let est = orthant(&equicorrelated(50, 0.5), &settings).unwrap();
    assert!(est.error <= 0.01 * est.value || est.error <= settings.abs_tol);
    let diag = CovMatrix::from_fn(50, |i, j| if i == j { 1.0 } else { 0.0 }).unwrap();
    let est = orthant(&diag, &settings).unwrap();
    assert!((est.value / 2f64.powi(-50) - 1.0).abs() < 1e-12);
}
