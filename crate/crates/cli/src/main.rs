use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use polaron_entanglement::entanglement::svd_cross_check;
use polaron_entanglement::model::{g_p_from_lambda, lambda_bm};
use polaron_entanglement::sweep::{converge, emit, format_float, solve_point, SweepConfig};
use polaron_entanglement::{run_sweep, BasisIndexMap, Error, ModelParams};

mod verify;

const EXIT_CONFIG: u8 = 1;
const EXIT_SOLVER: u8 = 2;
const EXIT_IO: u8 = 3;

/// Exact-diagonalization sweeps of a phonon-dressed excitation on a ring.
#[derive(Parser, Debug)]
#[command(name = "polaron", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sweep lambda_P and write CSV, metadata and figure tables.
    Sweep(SweepArgs),
    /// Ground energy along increasing phonon truncation.
    Converge(ConvergeArgs),
    /// Entanglement spectrum at a single point.
    Spectrum(SpectrumArgs),
    /// Run the built-in oracle and invariant checks.
    Verify {
        /// Skip the full-size (N = 8, N_ph = 9) checks.
        #[arg(long)]
        small: bool,
    },
}

/// Overrides shared by every subcommand that reads a config.
#[derive(Args, Debug, Default)]
struct Overrides {
    /// JSON config; flags below take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Breathing-mode coupling (repeatable).
    #[arg(long = "g-bm")]
    g_bm: Vec<f64>,
    /// Adiabaticity ratio omega_ph / t_e (repeatable).
    #[arg(long = "omega-ratio")]
    omega_ratio: Vec<f64>,
    #[arg(long = "n-sites")]
    n_sites: Option<usize>,
    #[arg(long = "n-ph")]
    n_ph: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tol: Option<f64>,
    #[arg(long)]
    workers: Option<usize>,
    /// Exit with a solver error on the first failing point.
    #[arg(long)]
    strict: bool,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[command(flatten)]
    common: Overrides,
    #[arg(long = "lambda-min")]
    lambda_min: Option<f64>,
    #[arg(long = "lambda-max")]
    lambda_max: Option<f64>,
    #[arg(long)]
    step: Option<f64>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Bisect every detected transition to width 1e-3.
    #[arg(long)]
    refine: bool,
    #[arg(long = "no-figures")]
    no_figures: bool,
}

#[derive(Args, Debug)]
struct ConvergeArgs {
    #[command(flatten)]
    common: Overrides,
    /// Largest phonon truncation in the schedule.
    #[arg(long = "max-nph")]
    max_nph: usize,
    #[arg(long = "min-nph", default_value_t = 1)]
    min_nph: usize,
    #[arg(long = "lambda-p", default_value_t = 2.0)]
    lambda_p: f64,
    /// Also track the entanglement entropy.
    #[arg(long)]
    entropy: bool,
    /// Print the report as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
struct SpectrumArgs {
    #[command(flatten)]
    common: Overrides,
    #[arg(long = "lambda-p")]
    lambda_p: f64,
    /// Add the singular-value route as a second column.
    #[arg(long)]
    svd: bool,
}

fn load_config(o: &Overrides) -> Result<SweepConfig, Error> {
    let mut cfg = match &o.config {
        Some(path) => SweepConfig::load(path)?,
        None => SweepConfig::default(),
    };
    if !o.g_bm.is_empty() {
        cfg.g_bm = o.g_bm.clone();
    }
    if !o.omega_ratio.is_empty() {
        cfg.omega_ratios = o.omega_ratio.clone();
    }
    if let Some(n) = o.n_sites {
        cfg.n_sites = n;
    }
    if let Some(n) = o.n_ph {
        cfg.n_ph = n;
    }
    if let Some(s) = o.seed {
        cfg.solver.seed = s;
    }
    if let Some(t) = o.tol {
        cfg.solver.tol = t;
    }
    if o.workers.is_some() {
        cfg.workers = o.workers;
    }
    cfg.strict |= o.strict;
    Ok(cfg)
}

/// First `(g_BM, omega)` of the config as model parameters at `lambda_P`.
fn point_params(cfg: &SweepConfig, lambda_p: f64) -> Result<ModelParams, Error> {
    let base = ModelParams::new(cfg.omega_ratios[0], 0.0, cfg.g_bm[0], cfg.n_sites, cfg.n_ph)
        .map_err(|e| Error::Config(e.to_string()))?;
    if !(lambda_p >= 0.0 && lambda_p.is_finite()) {
        return Err(Error::Config(format!("lambda_P must be non-negative, got {lambda_p}")));
    }
    Ok(base.with_g_p(g_p_from_lambda(lambda_p, &base)))
}

fn run_sweep_cmd(a: SweepArgs) -> Result<(), Error> {
    let mut cfg = load_config(&a.common)?;
    if let Some(x) = a.lambda_min {
        cfg.lambda_p.start = x;
    }
    if let Some(x) = a.lambda_max {
        cfg.lambda_p.stop = x;
    }
    if let Some(x) = a.step {
        cfg.lambda_p.step = x;
    }
    if let Some(dir) = a.out {
        cfg.output.dir = dir;
    }
    cfg.refine |= a.refine;
    cfg.output.figures &= !a.no_figures;
    cfg.validate()?;

    let table = run_sweep(&cfg)?;
    let files = emit(&table, &cfg.output)?;
    let meta = &table.metadata;
    println!(
        "{} points ({} failed) in {:.1} s",
        meta.timings.points, meta.timings.failures, meta.timings.total_seconds
    );
    for s in &meta.transitions {
        let list: Vec<String> = s
            .transitions
            .iter()
            .map(|t| format!("{}->{} in ({}, {}]", t.k_from_over_pi, t.k_to_over_pi, t.lambda_lo, t.lambda_hi))
            .collect();
        println!("g_BM={} omega={}: {}", s.g_bm, s.omega_ratio, if list.is_empty() { "no transitions".into() } else { list.join(", ") });
    }
    for path in files.csv.iter().chain(&files.metadata).chain(&files.figures) {
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn run_converge_cmd(a: ConvergeArgs) -> Result<bool, Error> {
    let cfg = load_config(&a.common)?;
    cfg.validate()?;
    if a.min_nph > a.max_nph {
        return Err(Error::Config(format!("--min-nph {} exceeds --max-nph {}", a.min_nph, a.max_nph)));
    }
    let params = point_params(&cfg, a.lambda_p)?;
    let schedule: Vec<(usize, usize)> = (a.min_nph..=a.max_nph).map(|m| (cfg.n_sites, m)).collect();
    let report = converge(&params, &schedule, &cfg.solver, a.entropy)?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&report).map_err(|e| Error::Config(e.to_string()))?);
    } else {
        println!("N\tN_ph\tdim\tE_gs\trel_change{}", if a.entropy { "\tS_E" } else { "" });
        for s in &report.trace {
            print!(
                "{}\t{}\t{}\t{}\t{}",
                s.n_sites,
                s.n_ph,
                s.dimension,
                format_float(s.energy),
                s.relative_change.map_or("-".into(), format_float)
            );
            match s.entropy {
                Some(e) => println!("\t{}", format_float(e)),
                None => println!(),
            }
        }
        match report.certified_step() {
            Some(s) => println!("converged at N_ph = {} (threshold {:e})", s.n_ph, report.threshold),
            None => println!("not converged within N_ph <= {} (threshold {:e})", a.max_nph, report.threshold),
        }
    }
    Ok(report.converged())
}

fn run_spectrum_cmd(a: SpectrumArgs) -> Result<(), Error> {
    let cfg = load_config(&a.common)?;
    cfg.validate()?;
    let params = point_params(&cfg, a.lambda_p)?;
    let basis = BasisIndexMap::enumerate(cfg.n_sites, cfg.n_ph)?;
    let point = solve_point(&params, &basis, &cfg.solver)?;
    let rec = &point.record;
    println!("lambda_P = {}  g_P = {}  g_BM = {}  lambda_BM = {}  omega/t = {}", a.lambda_p, params.g_p, params.g_bm, lambda_bm(&params), params.adiabaticity());
    println!(
        "K_gs/pi = {}{}  E_gs = {}  S_E = {}  bare_overlap = {}",
        rec.momentum.over_pi(),
        if rec.is_degenerate() { " (degenerate with -K)" } else { "" },
        format_float(rec.energy),
        format_float(point.entropy),
        format_float(rec.bare_overlap()),
    );
    let svd = if a.svd {
        Some(svd_cross_check(rec, &basis)?)
    } else {
        None
    };
    println!("alpha\txi\tweight{}", if svd.is_some() { "\txi_svd" } else { "" });
    for (i, (xi, p)) in point.spectrum.xis.iter().zip(&point.spectrum.weights).enumerate() {
        print!("{}\t{}\t{}", i + 1, format_float(*xi), format_float(*p));
        match &svd {
            Some(s) => println!("\t{}", format_float(s.xis[i])),
            None => println!(),
        }
    }
    Ok(())
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Config(_) | Error::InvalidParameter(_) => EXIT_CONFIG,
        Error::Io { .. } => EXIT_IO,
        _ => EXIT_SOLVER,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_CONFIG) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = match cli.command {
        Command::Sweep(a) => run_sweep_cmd(a),
        Command::Converge(a) => {
            let strict = a.common.strict;
            match run_converge_cmd(a) {
                Ok(false) if strict => return ExitCode::from(EXIT_SOLVER),
                other => other.map(|_| ()),
            }
        }
        Command::Spectrum(a) => run_spectrum_cmd(a),
        Command::Verify { small } => {
            return if verify::run(small) { ExitCode::SUCCESS } else { ExitCode::from(EXIT_SOLVER) };
        }
    };
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_defaults() {
        let o = Overrides {
            g_bm: vec![0.4],
            omega_ratio: vec![2.0, 0.5],
            n_ph: Some(5),
            seed: Some(7),
            strict: true,
            ..Default::default()
        };
        let cfg = load_config(&o).unwrap();
        assert_eq!(cfg.g_bm, vec![0.4]);
        assert_eq!(cfg.omega_ratios, vec![2.0, 0.5]);
        assert_eq!((cfg.n_sites, cfg.n_ph), (8, 5));
        assert_eq!(cfg.solver.seed, 7);
        assert!(cfg.strict);
    }

    #[test]
    fn error_classes_map_to_exit_codes() {
        assert_eq!(exit_code(&Error::Config("x".into())), 1);
        assert_eq!(exit_code(&Error::InvalidParameter("x".into())), 1);
        let io = std::io::Error::new(std::io::ErrorKind::NotFound, "gone");
        assert_eq!(exit_code(&Error::Io { path: "a".into(), source: io }), 3);
        assert_eq!(exit_code(&Error::NotConverged { iterations: 1, residual: 1.0 }), 2);
        assert_eq!(exit_code(&Error::Eigen("x".into())), 2);
    }

    #[test]
    fn point_params_converts_lambda() {
        let cfg = SweepConfig {
            omega_ratios: vec![1.0],
            ..Default::default()
        };
        let p = point_params(&cfg, 0.125).unwrap();
        assert!((p.g_p - 0.25).abs() < 1e-15);
        assert_eq!(p.g_bm, 0.25);
        assert!(point_params(&cfg, f64::NAN).is_err());
    }
}
