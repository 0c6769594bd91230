//! Rank versus expected-optima sweeps over grids of `(N, K)` and design
//! families.

use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::design::InteractionDesign;
use crate::designs::DesignKind;
use crate::error::{Error, Result};
use crate::optima::expected_local_optima;
use crate::orthant::OrthantSettings;
use crate::seed::derive_seed;

#[derive(Debug, Clone, PartialEq)]
pub struct SweepSpec {
    pub n_values: Vec<usize>,
    pub k_values: Vec<usize>,
    pub replicates_per_cell: usize,
    pub design_kinds: Vec<DesignKind>,
    pub sigma2: f64,
    pub seed: u64,
    pub orthant: OrthantSettings,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            n_values: vec![25, 50, 100],
            k_values: (1..=7).collect(),
            replicates_per_cell: 20,
            design_kinds: DesignKind::ALL.to_vec(),
            sigma2: 1.0,
            seed: 0,
            orthant: OrthantSettings::default(),
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_values.is_empty() || self.k_values.is_empty() || self.design_kinds.is_empty() {
            return Err(Error::parameter("sweep lists must be nonempty"));
        }
        if self.replicates_per_cell == 0 {
            return Err(Error::parameter("replicates per cell must be at least 1"));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::parameter("sigma2 must be positive and finite"));
        }
        Ok(())
    }

    /// The rows of one `(n, k)` cell. Classic kinds share a budget of
    /// `replicates_per_cell` designs: one maximal, one adjacent, and random
    /// classic designs for the remainder. Generalized designs get their own
    /// `replicates_per_cell` rows.
    fn cell_plan(&self, n: usize, k: usize) -> Vec<(DesignKind, usize)> {
        let has = |kind| self.design_kinds.contains(&kind);
        let mut plan = Vec::new();
        let mut fixed = 0;
        for kind in [DesignKind::Maximal, DesignKind::Adjacent] {
            if has(kind) && fixed < self.replicates_per_cell {
                plan.push((kind, 0));
                fixed += 1;
            }
        }
        if has(DesignKind::RandomClassic) {
            plan.extend(
                (0..self.replicates_per_cell - fixed).map(|r| (DesignKind::RandomClassic, r)),
            );
        }
        if has(DesignKind::RandomGeneralized) {
            plan.extend((0..self.replicates_per_cell).map(|r| (DesignKind::RandomGeneralized, r)));
        }
        if k + 1 > n {
            plan.clear();
        }
        plan
    }
}

/// One sweep row: a single design and its analytic expected optima count.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub design_kind: DesignKind,
    pub n: usize,
    pub k: usize,
    pub replicate: usize,
    pub rank: usize,
    pub expected: f64,
    pub expected_error: f64,
    pub seed: u64,
}

impl SweepRow {
    pub fn design_file_name(&self) -> String {
        format!(
            "{}_n{}_k{}_r{}.json",
            self.design_kind, self.n, self.k, self.replicate
        )
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepOutput {
    /// Sorted by `(n, k, design_kind, replicate)`.
    pub rows: Vec<SweepRow>,
    /// Human-readable reasons for rows that could not be produced.
    pub skipped: Vec<String>,
}

fn kind_index(kind: DesignKind) -> u64 {
    DesignKind::ALL.iter().position(|&k| k == kind).unwrap_or(0) as u64
}

/// Seed for the design in one sweep row.
pub fn row_seed(base: u64, n: usize, k: usize, kind: DesignKind, replicate: usize) -> u64 {
    derive_seed(
        base,
        &[n as u64, k as u64, kind_index(kind), replicate as u64],
    )
}

/// Runs the sweep. When `design_dir` is given, every design is also written
/// there as a design file named by [`SweepRow::design_file_name`].
pub fn run_sweep(spec: &SweepSpec, design_dir: Option<&Path>) -> Result<SweepOutput> {
    spec.validate()?;
    let mut jobs = Vec::new();
    let mut skipped = Vec::new();
    for &n in &spec.n_values {
        for &k in &spec.k_values {
            let plan = spec.cell_plan(n, k);
            if plan.is_empty() {
                skipped.push(format!("n={n} k={k}: k+1 exceeds n"));
            }
            jobs.extend(plan.into_iter().map(|(kind, r)| (n, k, kind, r)));
        }
    }

    let results: Vec<Result<Option<(SweepRow, InteractionDesign)>>> = jobs
        .par_iter()
        .map(|&(n, k, kind, replicate)| {
            let seed = row_seed(spec.seed, n, k, kind, replicate);
            let design = match kind.build(n, k, seed) {
                Ok(d) => d,
                Err(Error::MaximalUnavailable { .. }) if kind == DesignKind::Maximal => {
                    return Ok(None)
                }
                Err(e) => return Err(e),
            };
            let settings = OrthantSettings {
                seed: derive_seed(seed, &[1]),
                ..spec.orthant
            };
            let report = expected_local_optima(&design, spec.sigma2, &settings)?;
            Ok(Some((
                SweepRow {
                    design_kind: kind,
                    n,
                    k,
                    replicate,
                    rank: report.rank,
                    expected: report.expected,
                    expected_error: report.expected_error,
                    seed,
                },
                design,
            )))
        })
        .collect();

    let mut rows = Vec::with_capacity(results.len());
    for (job, result) in jobs.iter().zip(results) {
        match result? {
            Some((row, design)) => {
                if let Some(dir) = design_dir {
                    std::fs::write(dir.join(row.design_file_name()), design.to_json()?)?;
                }
                rows.push(row);
            }
            None => {
                let (n, k, _, _) = job;
                skipped.push(format!(
                    "n={n} k={k}: no maximal-rank construction ({})",
                    crate::designs::maximal_rank_known(*n, *k)
                ));
            }
        }
    }
    rows.sort_by(|a, b| {
        (a.n, a.k, a.design_kind, a.replicate).cmp(&(b.n, b.k, b.design_kind, b.replicate))
    });
    Ok(SweepOutput { rows, skipped })
}

pub fn write_sweep_csv<W: std::io::Write>(out: W, rows: &[SweepRow]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in rows {
        w.serialize(r)?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_sweep_csv<R: std::io::Read>(input: R) -> Result<Vec<SweepRow>> {
    csv::Reader::from_reader(input)
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}

/// Sample Pearson correlation; `None` for fewer than two points or zero
/// variance in either coordinate.
pub fn pearson(xs: &[f64], ys: &[f64]) -> Option<f64> {
    if xs.len() != ys.len() || xs.len() < 2 {
        return None;
    }
    let m = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / m;
    let my = ys.iter().sum::<f64>() / m;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (x, y) in xs.iter().zip(ys) {
        sxy += (x - mx) * (y - my);
        sxx += (x - mx).powi(2);
        syy += (y - my).powi(2);
    }
    if sxx == 0.0 || syy == 0.0 {
        return None;
    }
    Some(sxy / (sxx * syy).sqrt())
}

/// Which rows of a sweep to group together.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Family {
    Classic,
    Generalized,
}

impl Family {
    pub fn contains(self, kind: DesignKind) -> bool {
        kind.is_classic() == (self == Family::Classic)
    }
}

/// Correlation between rank and `ln(expected)` within one `(n, k)` cell.
pub fn cell_correlation(rows: &[SweepRow], n: usize, k: usize, family: Family) -> Option<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.n == n && r.k == k && family.contains(r.design_kind))
        .map(|r| (r.rank as f64, r.expected.ln()))
        .unzip();
    pearson(&xs, &ys)
}

/// Correlation between `ln(rank)` and `ln(expected)` pooled over every `k`
/// at fixed `n`.
pub fn pooled_log_correlation(rows: &[SweepRow], n: usize, family: Family) -> Option<f64> {
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.n == n && family.contains(r.design_kind))
        .map(|r| ((r.rank as f64).ln(), r.expected.ln()))
        .unzip();
    pearson(&xs, &ys)
}
