//! `nkland`: build NK interaction designs, analyze their rank, coefficient
//! variances and expected local optima, run rank-vs-optima sweeps, and run
//! the self-verification suite.
//!
//! Exit codes: 0 success, 2 parameter error, 3 capacity error, 4
//! verification failure, 1 anything else (I/O).

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use nk_landscape::designs::{
    adjacent_design, is_packing, maximal_design, random_classic_design, random_generalized_design,
    translate_design, DifferenceSet,
};
use nk_landscape::experiments::{
    cell_correlation, pooled_log_correlation, run_sweep, write_sweep_csv, Family, SweepSpec,
};
use nk_landscape::optima::{
    expected_local_optima, monte_carlo_expected_optima, sigma_from_design, write_optima_csv,
};
use nk_landscape::seed::derive_seed;
use nk_landscape::verify::{run_verification, VerifyLevel};
use nk_landscape::walsh::{
    extract_coefficients, max_rank_bound, rank, term_moment, term_set, variance_fraction,
};
use nk_landscape::{
    DesignKind, Error, InteractionDesign, Landscape, OrthantSettings, WeightDistribution,
    DEFAULT_DENSE_CAP, MAX_DENSE_CAP,
};

#[derive(Parser, Debug)]
#[command(
    name = "nkland",
    version,
    about = "NK landscapes as linear interaction models"
)]
struct Cli {
    #[command(flatten)]
    global: GlobalArgs,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone)]
struct GlobalArgs {
    /// Base seed for every random choice
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Total weight variance sigma^2 (weights have variance sigma^2/N)
    #[arg(long, global = true, default_value_t = 1.0)]
    sigma2: f64,

    /// Output file; stdout when omitted
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    /// Tabular output format
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Omit the leading timestamp comment line from CSV output
    #[arg(long, global = true)]
    no_banner: bool,

    /// Absolute error target for orthant probabilities
    #[arg(long, global = true, default_value_t = 1e-4)]
    orthant_tol: f64,

    /// Relative error target for orthant probabilities (0 disables)
    #[arg(long, global = true, default_value_t = 1e-2)]
    orthant_rel_tol: f64,

    /// Maximum lattice points per randomization
    #[arg(long, global = true, default_value_t = 1 << 22)]
    max_samples: u64,

    /// Largest N for which all 2^N genotypes may be materialized
    #[arg(long, global = true, default_value_t = DEFAULT_DENSE_CAP)]
    cap: usize,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Csv,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum DesignArg {
    Maximal,
    Adjacent,
    RandomClassic,
    RandomGeneralized,
    /// Translates of the difference set given with --diffset
    Translate,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum LevelArg {
    Quick,
    Full,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Build a design and write it as a design file
    Design {
        #[arg(value_enum)]
        kind: DesignArg,
        #[arg(long)]
        n: usize,
        /// Number of interacting loci per set; taken from --diffset for translates
        #[arg(long)]
        k: Option<usize>,
        /// Comma-separated residues of a difference set modulo N
        #[arg(long, value_delimiter = ',')]
        diffset: Option<Vec<usize>>,
    },
    /// Rank, coefficient variances and expected local optima of a design file
    Analyze {
        design: PathBuf,
        /// Write the per-term coefficient table to this CSV file
        #[arg(long)]
        terms: Option<PathBuf>,
        /// Also count local optima by brute force over 2^N genotypes
        #[arg(long)]
        brute_force: bool,
        /// Landscapes to enumerate with --brute-force
        #[arg(long, default_value_t = 1)]
        replicates: usize,
        #[arg(long, value_enum, default_value_t = DistArg::Normal)]
        distribution: DistArg,
    },
    /// Rank and expected optima over a grid of N, K and design kinds
    Sweep {
        #[arg(long = "n", value_delimiter = ',', default_values_t = [25usize, 50, 100])]
        n_values: Vec<usize>,
        #[arg(long = "k", value_delimiter = ',', default_values_t = [1usize, 2, 3, 4, 5, 6, 7])]
        k_values: Vec<usize>,
        /// Designs per (N, K) cell and family
        #[arg(long, default_value_t = 20)]
        replicates: usize,
        #[arg(long, value_enum, value_delimiter = ',', default_values_t = [
            KindArg::Maximal, KindArg::Adjacent, KindArg::RandomClassic, KindArg::RandomGeneralized
        ])]
        kinds: Vec<KindArg>,
        /// Also write every design to this directory
        #[arg(long)]
        design_dir: Option<PathBuf>,
    },
    /// Run the built-in verification suite
    Verify {
        #[arg(value_enum, default_value_t = LevelArg::Quick)]
        level: LevelArg,
    },
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum DistArg {
    Normal,
    Uniform,
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum KindArg {
    Maximal,
    Adjacent,
    RandomClassic,
    RandomGeneralized,
}

impl From<KindArg> for DesignKind {
    fn from(k: KindArg) -> Self {
        match k {
            KindArg::Maximal => DesignKind::Maximal,
            KindArg::Adjacent => DesignKind::Adjacent,
            KindArg::RandomClassic => DesignKind::RandomClassic,
            KindArg::RandomGeneralized => DesignKind::RandomGeneralized,
        }
    }
}

impl From<DistArg> for WeightDistribution {
    fn from(d: DistArg) -> Self {
        match d {
            DistArg::Normal => WeightDistribution::Normal,
            DistArg::Uniform => WeightDistribution::Uniform,
        }
    }
}

/// Raised when `verify` finds a failing check.
#[derive(Debug)]
struct VerificationFailed(usize);

impl std::fmt::Display for VerificationFailed {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} verification check(s) failed", self.0)
    }
}

impl std::error::Error for VerificationFailed {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<VerificationFailed>().is_some() {
        return 4;
    }
    match err.downcast_ref::<Error>() {
        Some(Error::Capacity { .. }) => 3,
        Some(Error::Io(_)) | None => 1,
        Some(_) => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let g = cli.global;
    if !(g.sigma2 > 0.0 && g.sigma2.is_finite()) {
        return Err(Error::Parameter("--sigma2 must be positive".into()).into());
    }
    if g.cap > MAX_DENSE_CAP {
        return Err(Error::Parameter(format!("--cap may not exceed {MAX_DENSE_CAP}")).into());
    }
    match cli.command {
        Command::Design {
            kind,
            n,
            k,
            diffset,
        } => cmd_design(&g, kind, n, k, diffset),
        Command::Analyze {
            design,
            terms,
            brute_force,
            replicates,
            distribution,
        } => cmd_analyze(
            &g,
            &design,
            terms.as_deref(),
            brute_force,
            replicates,
            distribution,
        ),
        Command::Sweep {
            n_values,
            k_values,
            replicates,
            kinds,
            design_dir,
        } => {
            let spec = SweepSpec {
                n_values,
                k_values,
                replicates_per_cell: replicates,
                design_kinds: kinds.into_iter().map(DesignKind::from).collect(),
                sigma2: g.sigma2,
                seed: g.seed,
                orthant: orthant_settings(&g, g.seed),
            };
            cmd_sweep(&g, &spec, design_dir.as_deref())
        }
        Command::Verify { level } => cmd_verify(&g, level),
    }
}

fn orthant_settings(g: &GlobalArgs, seed: u64) -> OrthantSettings {
    OrthantSettings {
        abs_tol: g.orthant_tol,
        rel_tol: g.orthant_rel_tol,
        max_samples: g.max_samples,
        seed,
        ..OrthantSettings::default()
    }
}

/// Opens `--out` (or stdout) and writes the banner line for CSV output.
fn open_output(g: &GlobalArgs, banner: bool) -> Result<Box<dyn Write>> {
    let mut out: Box<dyn Write> = match &g.out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    };
    if banner && !g.no_banner {
        let secs = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0);
        writeln!(
            out,
            "# nkland {} generated at unix time {secs}",
            env!("CARGO_PKG_VERSION")
        )?;
    }
    Ok(out)
}

fn cmd_design(
    g: &GlobalArgs,
    kind: DesignArg,
    n: usize,
    k: Option<usize>,
    diffset: Option<Vec<usize>>,
) -> Result<()> {
    let need_k = || k.ok_or_else(|| Error::Parameter("--k is required for this kind".into()));
    let design = match kind {
        DesignArg::Translate => {
            let elements = diffset
                .ok_or_else(|| Error::Parameter("translate designs need --diffset".into()))?;
            let ds = DifferenceSet::new(elements, n)?;
            if let Some(k) = k {
                if k + 1 != ds.size() {
                    return Err(Error::Parameter(format!(
                        "--k {k} does not match a difference set of size {}",
                        ds.size()
                    ))
                    .into());
                }
            }
            translate_design(&ds, n)?
        }
        DesignArg::Maximal => maximal_design(n, need_k()?)?,
        DesignArg::Adjacent => adjacent_design(n, need_k()?)?,
        DesignArg::RandomClassic => random_classic_design(n, need_k()?, g.seed)?,
        DesignArg::RandomGeneralized => random_generalized_design(n, need_k()?, g.seed)?,
    };
    let (k_min, k_max) = design.k_range();
    let bound = if design.is_classic() {
        max_rank_bound(n, k_max)
            .map(|b| b.to_string())
            .unwrap_or_else(|_| "n/a".into())
    } else {
        "n/a".into()
    };
    eprintln!(
        "rank {}; max_rank_bound {bound}; is_packing {}; classic {}; k {k_min}..{k_max}",
        rank(&design),
        is_packing(&design),
        design.is_classic()
    );
    let mut out = open_output(g, false)?;
    writeln!(out, "{}", design.to_json()?)?;
    out.flush()?;
    Ok(())
}

fn read_design(path: &Path) -> Result<InteractionDesign> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    Ok(InteractionDesign::from_json(&text)?)
}

fn cmd_analyze(
    g: &GlobalArgs,
    path: &Path,
    terms_path: Option<&Path>,
    brute_force: bool,
    replicates: usize,
    distribution: DistArg,
) -> Result<()> {
    let design = read_design(path)?;
    let n = design.n();
    let terms = term_set(&design);
    let by_order = terms
        .counts_by_order()
        .iter()
        .map(|c| c.to_string())
        .collect::<Vec<_>>()
        .join(",");
    eprintln!("rank {}; terms by order [{by_order}]", terms.len());

    let sigma = sigma_from_design(&design, g.sigma2)?;
    let diag: Vec<f64> = (0..n).map(|i| sigma.get(i, i)).collect();
    let max_corr = (0..n)
        .flat_map(|i| (0..i).map(move |j| (i, j)))
        .map(|(i, j)| sigma.get(i, j) / (diag[i] * diag[j]).sqrt())
        .fold(0.0, f64::max);
    eprintln!(
        "sigma diagonal {:.6}..{:.6}; max off-diagonal correlation {max_corr:.4}",
        diag.iter().copied().fold(f64::INFINITY, f64::min),
        diag.iter().copied().fold(0.0, f64::max)
    );

    let orthant_seed = derive_seed(g.seed, &[0]);
    let mut report = expected_local_optima(&design, g.sigma2, &orthant_settings(g, orthant_seed))?;
    if report.degraded {
        eprintln!("warning: singular covariance, expected count from plain Monte Carlo");
    }
    eprintln!(
        "expected local optima {:.6} +- {:.3e}",
        report.expected, report.expected_error
    );
    if brute_force {
        let mc = monte_carlo_expected_optima(
            &design,
            g.sigma2,
            distribution.into(),
            replicates,
            g.seed,
            g.cap,
        )?;
        if mc.clt_approximation {
            eprintln!("note: non-normal weights; the expected count is a CLT approximation");
        }
        report = report.with_observation(&mc, g.seed);
    }

    if let Some(tp) = terms_path {
        let coefficients = if replicates == 1 && n <= g.cap {
            let ls =
                Landscape::generate(design.clone(), 0.0, g.sigma2, distribution.into(), g.seed)?;
            Some(extract_coefficients(&ls, g.cap)?)
        } else {
            None
        };
        let mut w =
            csv::Writer::from_path(tp).with_context(|| format!("creating {}", tp.display()))?;
        w.write_record([
            "term",
            "order",
            "variance_fraction",
            "variance",
            "coefficient",
        ])?;
        for (idx, t) in terms.terms().iter().enumerate() {
            let m = term_moment(&design, t, 0.0, g.sigma2);
            w.write_record([
                t.to_string(),
                t.order().to_string(),
                variance_fraction(&design, t).to_string(),
                m.variance.to_string(),
                coefficients
                    .as_ref()
                    .map(|c| c.values[idx].to_string())
                    .unwrap_or_default(),
            ])?;
        }
        w.flush()?;
    }

    let mut out = open_output(g, true)?;
    write_optima_csv(&mut out, &[report])?;
    out.flush()?;
    Ok(())
}

fn cmd_sweep(g: &GlobalArgs, spec: &SweepSpec, design_dir: Option<&Path>) -> Result<()> {
    if let Some(dir) = design_dir {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    let output = run_sweep(spec, design_dir)?;
    for s in &output.skipped {
        eprintln!("skipped {s}");
    }
    for &n in &spec.n_values {
        for &k in &spec.k_values {
            for (name, family) in [
                ("classic", Family::Classic),
                ("generalized", Family::Generalized),
            ] {
                if let Some(r) = cell_correlation(&output.rows, n, k, family) {
                    eprintln!("n={n} k={k} {name}: corr(rank, ln expected) = {r:.3}");
                }
            }
        }
        if let Some(r) = pooled_log_correlation(&output.rows, n, Family::Classic) {
            eprintln!("n={n} classic pooled: corr(ln rank, ln expected) = {r:.3}");
        }
    }
    let mut out = open_output(g, true)?;
    write_sweep_csv(&mut out, &output.rows)?;
    out.flush()?;
    Ok(())
}

fn cmd_verify(g: &GlobalArgs, level: LevelArg) -> Result<()> {
    let level = match level {
        LevelArg::Quick => VerifyLevel::Quick,
        LevelArg::Full => VerifyLevel::Full,
    };
    let outcomes = run_verification(level);
    let mut out = open_output(g, false)?;
    let mut failed = 0;
    for o in &outcomes {
        let status = if o.passed { "PASS" } else { "FAIL" };
        failed += usize::from(!o.passed);
        writeln!(
            out,
            "{status} {}::{} ({:.2}s) {}",
            o.module,
            o.property,
            o.elapsed.as_secs_f64(),
            o.detail
        )?;
    }
    writeln!(out, "{} passed, {failed} failed", outcomes.len() - failed)?;
    out.flush()?;
    if failed > 0 {
        return Err(VerificationFailed(failed).into());
    }
    Ok(())
}
