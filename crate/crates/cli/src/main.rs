//! Command-line front end: spectra, remainders, moments, the truncated
//! oscillating-sum model, and the series constants, as CSV or JSON on
//! stdout.
//!
//! Exit codes: 0 success, 2 invalid arguments or configuration, 3 a
//! verification found a violation (or a numeric tolerance could not be
//! met), 4 an I/O problem (cache file unreadable/unwritable).
//!
//! The eigenvalue cache is the only state: `--cache FILE` names it
//! directly, the `HWEYL_CACHE_DIR` environment variable names a
//! directory for the default file, and with neither the spectrum is
//! rebuilt in memory each run.  A cache built for a larger limit serves
//! smaller ones.

use clap::{Parser, Subcommand, ValueEnum};
use hweyl_core::cache::enumerate_entries;
use hweyl_core::constants::{b3_estimate, c2_partial, d3_estimate};
use hweyl_core::counting::{remainder, remainder_h_scaled, remainder_h_scaled_at_s, RemainderSample};
use hweyl_core::dd::Dd;
use hweyl_core::expsum::{build_terms, evaluate_r_eps, ExpSumConfig};
use hweyl_core::moments::{fit_power_law, moment_curve, PowerFit};
use hweyl_core::mollifier::sandwich_check;
use hweyl_core::spectrum::Branch;
use hweyl_core::{load_or_build, Spectrum, SplitMix64};
use serde::Serialize;
use std::f64::consts::PI;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "hweyl", version, about = "Spectral counting on the arithmetic Heisenberg manifold")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Eigenvalue cache file (see also HWEYL_CACHE_DIR).
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
    /// Output format on stdout.
    #[arg(long, global = true, value_enum, default_value_t = Format::Csv)]
    format: Format,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
}

#[derive(Copy, Clone, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// List eigenvalues up to a limit with multiplicities.
    Spectrum {
        /// Upper eigenvalue bound.
        #[arg(long)]
        limit: f64,
    },
    /// Counting remainder R(s) = N(s) - kappa s^(3/2) on a grid.
    Remainder {
        /// Geometric grid start:ratio:count.
        #[arg(long)]
        grid: String,
    },
    /// Moment integrals of R^k with a power-law fit.
    Moments {
        /// Moment order (1-3).
        #[arg(long, default_value_t = 2)]
        k: u32,
        /// Geometric grid of upper limits, start:ratio:count.
        #[arg(long)]
        grid: String,
    },
    /// Truncated oscillating-sum model against the sharp scaled remainder.
    Expsum {
        /// Mollification range parameter.
        #[arg(long = "T")]
        t_max: f64,
        /// Mollification exponent (epsilon = T^-gamma).
        #[arg(long, default_value_t = 11.0 / 14.0)]
        gamma: f64,
        /// Truncation exponent (cutoff = T^alpha); default 11/7 + 0.01.
        #[arg(long)]
        alpha: Option<f64>,
        /// Geometric grid of sample points, start:ratio:count.
        #[arg(long)]
        grid: String,
    },
    /// Series constants: b3 and d3 at a truncation limit, c2 alongside.
    Constants {
        /// Truncation limit for the series.
        #[arg(long)]
        limit: u64,
    },
    /// Self-check: brute-force counts, the branch recombination
    /// identity, and the two-sided squeeze.
    Verify {
        /// Eigenvalue range to verify.
        #[arg(long, default_value_t = 2000.0)]
        limit: f64,
        /// Seed for the random sample points (echoed in the report).
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Number of random identity checks.
        #[arg(long, default_value_t = 200)]
        samples: u32,
    },
}

struct CliError {
    message: String,
    code: u8,
}

impl CliError {
    fn validation(message: impl Into<String>) -> CliError {
        CliError { message: message.into(), code: 2 }
    }
    fn verification(message: impl Into<String>) -> CliError {
        CliError { message: message.into(), code: 3 }
    }
}

impl From<hweyl_core::Error> for CliError {
    fn from(e: hweyl_core::Error) -> CliError {
        let code = match &e {
            hweyl_core::Error::Io(_) | hweyl_core::Error::CacheFormat(_) => 4,
            hweyl_core::Error::QuadratureFailure { .. } => 3,
            _ => 2,
        };
        CliError { message: e.to_string(), code }
    }
}

impl From<std::io::Error> for CliError {
    fn from(e: std::io::Error) -> CliError {
        if e.kind() == std::io::ErrorKind::BrokenPipe {
            // The reader closed the pipe (e.g. `hweyl ... | head`); stop
            // writing and count the run as a success.  Code 0 is the
            // silent-success sentinel checked in main().
            CliError { message: String::new(), code: 0 }
        } else {
            CliError { message: format!("i/o: {e}"), code: 4 }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        // A global pool can only be installed once; a second attempt in
        // the same process is not an error worth failing over.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.code == 0 => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let stdout = std::io::stdout();
    let mut out = std::io::BufWriter::new(stdout.lock());
    dispatch(cli, &mut out)?;
    out.flush()?;
    Ok(())
}

fn dispatch(cli: Cli, out: &mut impl Write) -> Result<(), CliError> {
    match cli.command {
        Command::Spectrum { limit } => cmd_spectrum(limit, cli.format, out),
        Command::Remainder { grid } => cmd_remainder(&grid, &cli.cache, cli.format, out),
        Command::Moments { k, grid } => cmd_moments(k, &grid, &cli.cache, cli.format, out),
        Command::Expsum { t_max, gamma, alpha, grid } => {
            cmd_expsum(t_max, gamma, alpha, &grid, &cli.cache, cli.format, out)
        }
        Command::Constants { limit } => cmd_constants(limit, cli.format, out),
        Command::Verify { limit, seed, samples } => {
            cmd_verify(limit, seed, samples, &cli.cache, out)
        }
    }
}

fn cache_path(explicit: &Option<PathBuf>) -> Option<PathBuf> {
    explicit.clone().or_else(|| {
        std::env::var_os("HWEYL_CACHE_DIR")
            .map(|dir| PathBuf::from(dir).join("hweyl-spectrum.bin"))
    })
}

/// Parse "start:ratio:count" into a geometric grid.
fn parse_grid(spec: &str) -> Result<Vec<f64>, CliError> {
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(CliError::validation(format!(
            "grid must be start:ratio:count, got '{spec}'"
        )));
    }
    let start: f64 = parts[0]
        .parse()
        .map_err(|_| CliError::validation(format!("bad grid start '{}'", parts[0])))?;
    let ratio: f64 = parts[1]
        .parse()
        .map_err(|_| CliError::validation(format!("bad grid ratio '{}'", parts[1])))?;
    let count: usize = parts[2]
        .parse()
        .map_err(|_| CliError::validation(format!("bad grid count '{}'", parts[2])))?;
    if !(start.is_finite() && start > 0.0) {
        return Err(CliError::validation("grid start must be positive"));
    }
    if !(ratio.is_finite() && ratio >= 1.0) {
        return Err(CliError::validation("grid ratio must be at least 1"));
    }
    if count == 0 || count > 100_000 {
        return Err(CliError::validation("grid count must be in 1..=100000"));
    }
    let mut grid = Vec::with_capacity(count);
    let mut value = start;
    for _ in 0..count {
        grid.push(value);
        value *= ratio;
        if !value.is_finite() {
            return Err(CliError::validation("grid overflows f64"));
        }
    }
    Ok(grid)
}

fn load_spectrum(limit: f64, cache: &Option<PathBuf>) -> Result<Spectrum, CliError> {
    Ok(load_or_build(limit, cache_path(cache).as_deref())?)
}

#[derive(Serialize)]
struct EntryRow {
    value: f64,
    multiplicity: u64,
    branch: &'static str,
    index: [i64; 2],
}

fn cmd_spectrum(limit: f64, format: Format, out: &mut impl Write) -> Result<(), CliError> {
    let entries = enumerate_entries(limit)?;
    let rows: Vec<EntryRow> = entries
        .iter()
        .map(|e| EntryRow {
            value: e.value,
            multiplicity: e.multiplicity,
            branch: match e.branch {
                Branch::Torus => "torus",
                Branch::TypeII => "type-ii",
            },
            index: [e.index.0, e.index.1],
        })
        .collect();
    match format {
        Format::Csv => {
            writeln!(out, "value,multiplicity,branch,index_a,index_b")?;
            for r in &rows {
                writeln!(
                    out,
                    "{:.16e},{},{},{},{}",
                    r.value, r.multiplicity, r.branch, r.index[0], r.index[1]
                )?;
            }
        }
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&rows).unwrap())?,
    }
    Ok(())
}

#[derive(Serialize)]
struct RemainderRow {
    s: f64,
    count: f64,
    main: f64,
    remainder: f64,
}

fn cmd_remainder(
    grid: &str,
    cache: &Option<PathBuf>,
    format: Format,
    out: &mut impl Write,
) -> Result<(), CliError> {
    let grid = parse_grid(grid)?;
    let limit = grid.last().unwrap() * (1.0 + 1e-12) + 1.0;
    let spectrum = load_spectrum(limit, cache)?;
    let samples: Vec<RemainderSample> = grid
        .iter()
        .map(|&s| remainder(s, &spectrum))
        .collect::<Result<_, _>>()?;
    match format {
        Format::Csv => {
            writeln!(out, "{}", RemainderSample::csv_header())?;
            for sample in &samples {
                writeln!(out, "{}", sample.csv_line())?;
            }
        }
        Format::Json => {
            let rows: Vec<RemainderRow> = samples
                .iter()
                .map(|r| RemainderRow {
                    s: r.s,
                    count: r.count,
                    main: r.main,
                    remainder: r.remainder,
                })
                .collect();
            writeln!(out, "{}", serde_json::to_string_pretty(&rows).unwrap())?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct MomentPoint {
    #[serde(rename = "T")]
    t: f64,
    value: f64,
}

#[derive(Serialize)]
struct FitReport {
    exponent: f64,
    coefficient: f64,
    residual_rms: f64,
}

#[derive(Serialize)]
struct MomentsReport {
    k: u32,
    grid: Vec<MomentPoint>,
    fit: Option<FitReport>,
}

fn cmd_moments(
    k: u32,
    grid: &str,
    cache: &Option<PathBuf>,
    format: Format,
    out: &mut impl Write,
) -> Result<(), CliError> {
    let grid = parse_grid(grid)?;
    let limit = grid.last().unwrap() * (1.0 + 1e-12) + 1.0;
    let spectrum = load_spectrum(limit, cache)?;
    let curve = moment_curve(&grid, k, &spectrum)?;
    // Sign-changing moment data has no meaningful power law; report the
    // raw curve with a null fit instead of failing the whole command.
    let fit: Option<PowerFit> = fit_power_law(&curve).ok();
    let report = MomentsReport {
        k,
        grid: curve.iter().map(|r| MomentPoint { t: r.t, value: r.value }).collect(),
        fit: fit.map(|f| FitReport {
            exponent: f.exponent,
            coefficient: f.coefficient,
            residual_rms: f.residual_rms,
        }),
    };
    match format {
        Format::Csv => {
            writeln!(out, "T,value")?;
            for p in &report.grid {
                writeln!(out, "{:.16e},{:.16e}", p.t, p.value)?;
            }
        }
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&report).unwrap())?,
    }
    Ok(())
}

#[derive(Serialize)]
struct ExpSumRow {
    t: f64,
    r_eps: f64,
    r_exact: f64,
    abs_gap: f64,
}

#[derive(Serialize)]
struct ExpSumReport {
    t_max: f64,
    gamma: f64,
    alpha: f64,
    epsilon: f64,
    term_count: usize,
    samples: Vec<ExpSumRow>,
}

fn cmd_expsum(
    t_max: f64,
    gamma: f64,
    alpha: Option<f64>,
    grid: &str,
    cache: &Option<PathBuf>,
    format: Format,
    out: &mut impl Write,
) -> Result<(), CliError> {
    let alpha = alpha.unwrap_or(11.0 / 7.0 + 0.01);
    let config = ExpSumConfig::new(t_max, gamma, alpha)?;
    let grid = parse_grid(grid)?;
    let top = *grid.last().unwrap();
    if top > t_max {
        return Err(CliError::validation(format!(
            "grid reaches {top} beyond T = {t_max}"
        )));
    }
    let terms = build_terms(&config)?;
    let spectrum = load_spectrum(2.0 * PI * t_max + 10.0, cache)?;
    let mut samples = Vec::with_capacity(grid.len());
    for &t in &grid {
        let r_eps = evaluate_r_eps(t, &terms)?;
        let r_exact = remainder_h_scaled(t, &spectrum)?;
        samples.push(ExpSumRow { t, r_eps, r_exact, abs_gap: (r_eps - r_exact).abs() });
    }
    match format {
        Format::Csv => {
            writeln!(out, "t,R_eps,R_exact,abs_gap")?;
            for r in &samples {
                writeln!(
                    out,
                    "{:.16e},{:.16e},{:.16e},{:.16e}",
                    r.t, r.r_eps, r.r_exact, r.abs_gap
                )?;
            }
        }
        Format::Json => {
            let report = ExpSumReport {
                t_max,
                gamma,
                alpha,
                epsilon: config.epsilon,
                term_count: terms.len(),
                samples,
            };
            writeln!(out, "{}", serde_json::to_string_pretty(&report).unwrap())?;
        }
    }
    Ok(())
}

#[derive(Serialize)]
struct B3Report {
    partial: f64,
    per_sum: [f64; 4],
    tail_estimate: f64,
}

#[derive(Serialize)]
struct C2Report {
    n_max: u64,
    partial: f64,
}

#[derive(Serialize)]
struct ConstantsReport {
    limit: u64,
    b3: B3Report,
    d3: f64,
    c2: C2Report,
}

fn cmd_constants(limit: u64, format: Format, out: &mut impl Write) -> Result<(), CliError> {
    let b3 = b3_estimate(limit)?;
    let d3 = d3_estimate(limit)?;
    let c2 = c2_partial(limit);
    let report = ConstantsReport {
        limit,
        b3: B3Report {
            partial: b3.partial,
            per_sum: b3.per_sum_partials,
            tail_estimate: b3.tail_estimate,
        },
        d3,
        c2: C2Report { n_max: limit, partial: c2 },
    };
    match format {
        Format::Csv => {
            writeln!(out, "quantity,value")?;
            writeln!(out, "b3_partial,{:.16e}", report.b3.partial)?;
            for (i, v) in report.b3.per_sum.iter().enumerate() {
                writeln!(out, "b3_sum_{},{:.16e}", i + 1, v)?;
            }
            writeln!(out, "b3_tail_estimate,{:.16e}", report.b3.tail_estimate)?;
            writeln!(out, "d3,{:.16e}", report.d3)?;
            writeln!(out, "c2_partial,{:.16e}", report.c2.partial)?;
        }
        Format::Json => writeln!(out, "{}", serde_json::to_string_pretty(&report).unwrap())?,
    }
    Ok(())
}

fn dd_le(v: Dd, s: f64) -> bool {
    v.hi < s || (v.hi == s && v.lo <= 0.0)
}

/// Independent total count: direct lattice scan on the torus branch,
/// double-double threshold tests on both branches.
fn brute_total(s: f64) -> u64 {
    let q = Dd::TWO_PI.mul(Dd::TWO_PI);
    let radius = (s / q.to_f64()).sqrt() as i64 + 2;
    let mut count = 0u64;
    for m in -radius..=radius {
        for n in -radius..=radius {
            if dd_le(q.mul_f64((m * m + n * n) as f64), s) {
                count += 1;
            }
        }
    }
    let mut c = 1u64;
    while dd_le(Dd::TWO_PI.mul_f64((c * (c + 1)) as f64), s) {
        let val = |k: u64| Dd::TWO_PI.mul_f64((c * (c + 2 * k + 1)) as f64);
        let mut k = ((s / (2.0 * PI * c as f64) - c as f64 - 1.0) / 2.0).max(0.0) as u64;
        while k > 0 && !dd_le(val(k), s) {
            k -= 1;
        }
        while dd_le(val(k + 1), s) {
            k += 1;
        }
        count += 2 * c * (k + 1);
        c += 1;
    }
    count
}

fn cmd_verify(
    limit: f64,
    seed: u64,
    samples: u32,
    cache: &Option<PathBuf>,
    out: &mut impl Write,
) -> Result<(), CliError> {
    if !(limit.is_finite() && limit >= 100.0) {
        return Err(CliError::validation("verify needs a finite limit >= 100"));
    }
    if samples == 0 {
        return Err(CliError::validation("verify needs at least one sample"));
    }
    let spectrum = load_spectrum(limit, cache)?;
    writeln!(out, "seed: {seed}")?;

    // Exact counts against an independent brute force at integer points.
    let top = limit.min(2000.0) as u64;
    for s in 1..=top {
        let got = spectrum.count_total(s as f64)?;
        let want = brute_total(s as f64);
        if got != want {
            return Err(CliError::verification(format!(
                "count mismatch at s = {s}: spectrum {got}, brute force {want}"
            )));
        }
    }
    writeln!(out, "counts: ok ({top} integer points against brute force)")?;

    // Branch recombination identity at random points.
    let mut rng = SplitMix64::new(seed);
    let mut worst = 0.0f64;
    for _ in 0..samples {
        let s = rng.uniform(1.0, limit);
        let whole = remainder(s, &spectrum)?.remainder;
        let scaled = remainder_h_scaled_at_s(s, &spectrum)?;
        let torus_part = spectrum.count_torus(s)? as f64 - s / (4.0 * PI);
        let residual = (whole - (scaled + torus_part)).abs();
        worst = worst.max(residual);
        if residual > 1e-9 {
            return Err(CliError::verification(format!(
                "recombination identity residual {residual:.3e} at s = {s}"
            )));
        }
    }
    writeln!(out, "identity: ok ({samples} samples, max residual {worst:.2e})")?;

    // Two-sided squeeze at a handful of scales.
    let t_max = limit / (2.0 * PI);
    if t_max >= 4.0 {
        let mut checked = 0;
        for _ in 0..20 {
            let t = rng.log_uniform(1.0, t_max);
            let report = sandwich_check(t, t_max, 0.8, 3.0, &spectrum)?;
            if !report.holds {
                return Err(CliError::verification(format!(
                    "squeeze violated at t = {t}: {} <= {} <= {} fails",
                    report.lower, report.exact, report.upper
                )));
            }
            checked += 1;
        }
        writeln!(out, "squeeze: ok ({checked} sample points)")?;
    }
    writeln!(out, "verify: all checks passed")?;
    Ok(())
}
