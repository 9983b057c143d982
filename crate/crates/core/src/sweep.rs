//! Coupling sweeps, level-crossing detection, truncation convergence and output.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::eigen::{ground_state_over_k, solve_sector, GroundStateRecord, SolverSettings};
use crate::entanglement::{entropy, reduced_density, spectrum, EntanglementSpectrum};
use crate::error::{Error, Result};
use crate::fock::BasisIndexMap;
use crate::hamiltonian::Momentum;
use crate::model::{g_p_from_lambda, ModelParams};

/// Relative ground-energy change accepted as converged in truncation studies.
pub const CONVERGENCE_THRESHOLD: f64 = 1e-4;

/// Default adiabaticity ratios. Only the value 2 and the `< 1 / = 1 / > 1`
/// trichotomy are pinned down by the physics; 0.5 is a choice.
pub const DEFAULT_OMEGA_RATIOS: [f64; 3] = [0.5, 1.0, 2.0];

/// Width in `lambda_P` to which refined crossings are narrowed.
pub const REFINE_WIDTH: f64 = 1e-3;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LambdaGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Default for LambdaGrid {
    fn default() -> Self {
        Self {
            start: 0.0,
            stop: 3.2,
            step: 0.05,
        }
    }
}

impl LambdaGrid {
    pub fn validate(&self) -> Result<()> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::Config(format!("grid step must be positive, got {}", self.step)));
        }
        if !(self.start >= 0.0 && self.stop >= self.start) {
            return Err(Error::Config(format!(
                "grid needs 0 <= start <= stop, got [{}, {}]",
                self.start, self.stop
            )));
        }
        Ok(())
    }

    /// Grid points `start + i * step` up to `stop` inclusive (with a small slack
    /// so that `stop` itself survives rounding).
    pub fn points(&self) -> Vec<f64> {
        let count = ((self.stop - self.start) / self.step + 1e-9).floor() as usize + 1;
        (0..count)
            .map(|i| {
                let x = self.start + i as f64 * self.step;
                // snap to the decimal grid so 0.05 * 3 prints as 0.15
                (x * 1e12).round() / 1e12
            })
            .collect()
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputOptions {
    pub dir: PathBuf,
    #[serde(default = "yes")]
    pub csv: bool,
    #[serde(default = "yes")]
    pub metadata: bool,
    #[serde(default = "yes")]
    pub figures: bool,
}

fn yes() -> bool {
    true
}

impl Default for OutputOptions {
    fn default() -> Self {
        Self {
            dir: PathBuf::from("out"),
            csv: true,
            metadata: true,
            figures: true,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepConfig {
    /// Fixed breathing-mode couplings; one sweep series per value.
    pub g_bm: Vec<f64>,
    /// Adiabaticity ratios `omega_ph / t_e`.
    pub omega_ratios: Vec<f64>,
    /// Effective Peierls couplings to visit.
    pub lambda_p: LambdaGrid,
    pub n_sites: usize,
    pub n_ph: usize,
    pub solver: SolverSettings,
    pub output: OutputOptions,
    /// Bisect every detected crossing down to `REFINE_WIDTH`.
    pub refine: bool,
    /// Abort on the first failing grid point instead of recording it.
    pub strict: bool,
    /// Worker threads; `None` uses every core.
    pub workers: Option<usize>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            g_bm: vec![0.25, 0.4],
            omega_ratios: DEFAULT_OMEGA_RATIOS.to_vec(),
            lambda_p: LambdaGrid::default(),
            n_sites: 8,
            n_ph: 9,
            solver: SolverSettings::default(),
            output: OutputOptions::default(),
            refine: false,
            strict: false,
            workers: None,
        }
    }
}

impl SweepConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: SweepConfig =
            serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        self.lambda_p.validate()?;
        if self.g_bm.is_empty() || self.omega_ratios.is_empty() {
            return Err(Error::Config("g_bm and omega_ratios must be non-empty".into()));
        }
        for &w in &self.omega_ratios {
            self.params(w, 0.0, 0.0)
                .map_err(|e| Error::Config(e.to_string()))?;
        }
        for &g in &self.g_bm {
            self.params(1.0, 0.0, g)
                .map_err(|e| Error::Config(e.to_string()))?;
        }
        self.solver.validate().map_err(|e| Error::Config(e.to_string()))?;
        if self.workers == Some(0) {
            return Err(Error::Config("workers must be at least 1".into()));
        }
        Ok(())
    }

    fn params(&self, omega: f64, g_p: f64, g_bm: f64) -> Result<ModelParams> {
        ModelParams::new(omega, g_p, g_bm, self.n_sites, self.n_ph)
    }

    /// Notes on every value chosen where the model itself is silent.
    pub fn chosen_defaults(&self) -> Vec<String> {
        let mut notes = vec![
            format!(
                "Lanczos convergence: residual |Hv - Ev| <= {:e} * max(1, |E|)",
                self.solver.tol
            ),
            "phonon truncation: projector onto total phonon number <= n_ph".into(),
            "degenerate +-K ground states reported by the K >= 0 member".into(),
            "entanglement weights below 1e-14 reported as xi = inf".into(),
        ];
        if self.omega_ratios == DEFAULT_OMEGA_RATIOS {
            notes.push("omega_ratios {0.5, 1, 2} is the default set; 0.5 is a choice".into());
        }
        notes
    }
}

/// Outcome of one grid point.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub lambda_p: f64,
    pub g_p: f64,
    pub g_bm: f64,
    pub omega_ratio: f64,
    /// `K_gs / pi`.
    pub k_gs_over_pi: f64,
    pub degenerate: bool,
    pub e_gs: f64,
    pub s_e: f64,
    pub xis: Vec<f64>,
    pub bare_overlap: f64,
    /// `ok`, or the failure message.
    pub status: String,
}

impl SweepRow {
    pub fn is_ok(&self) -> bool {
        self.status == "ok"
    }

    fn failed(lambda_p: f64, g_p: f64, g_bm: f64, omega_ratio: f64, sites: usize, err: &Error) -> Self {
        Self {
            lambda_p,
            g_p,
            g_bm,
            omega_ratio,
            k_gs_over_pi: f64::NAN,
            degenerate: false,
            e_gs: f64::NAN,
            s_e: f64::NAN,
            xis: vec![f64::NAN; sites],
            bare_overlap: f64::NAN,
            status: format!("error: {err}"),
        }
    }
}

/// Everything computed at one parameter point.
#[derive(Clone, Debug)]
pub struct PointResult {
    pub record: GroundStateRecord,
    pub spectrum: EntanglementSpectrum,
    pub entropy: f64,
}

impl PointResult {
    pub fn row(&self, lambda_p: f64) -> SweepRow {
        let p = &self.record.params;
        SweepRow {
            lambda_p,
            g_p: p.g_p,
            g_bm: p.g_bm,
            omega_ratio: p.adiabaticity(),
            k_gs_over_pi: self.record.momentum.over_pi(),
            degenerate: self.record.is_degenerate(),
            e_gs: self.record.energy,
            s_e: self.entropy,
            xis: self.spectrum.xis.clone(),
            bare_overlap: self.record.bare_overlap(),
            status: "ok".into(),
        }
    }
}

/// Ground state, entanglement spectrum and entropy at one point.
pub fn solve_point(params: &ModelParams, basis: &BasisIndexMap, settings: &SolverSettings) -> Result<PointResult> {
    let record = ground_state_over_k(params, basis, settings)?;
    let rho = reduced_density(&record, basis)?;
    let spectrum = spectrum(&rho)?;
    let entropy = entropy(&spectrum);
    Ok(PointResult {
        record,
        spectrum,
        entropy,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Timings {
    pub total_seconds: f64,
    pub points: usize,
    pub failures: usize,
}

#[derive(Clone, Debug, Serialize)]
pub struct SweepMetadata {
    pub package: &'static str,
    pub version: &'static str,
    pub config: SweepConfig,
    pub seed: u64,
    pub basis_dimension: usize,
    pub chosen_defaults: Vec<String>,
    pub transitions: Vec<SeriesTransitions>,
    pub timings: Timings,
}

#[derive(Clone, Debug, Serialize)]
pub struct SeriesTransitions {
    pub g_bm: f64,
    pub omega_ratio: f64,
    pub transitions: Vec<Transition>,
}

#[derive(Clone, Debug)]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    pub metadata: SweepMetadata,
}

impl SweepTable {
    /// Rows of one `(g_BM, omega)` series in grid order.
    pub fn series(&self, g_bm: f64, omega_ratio: f64) -> Vec<SweepRow> {
        self.rows
            .iter()
            .filter(|r| r.g_bm == g_bm && r.omega_ratio == omega_ratio)
            .cloned()
            .collect()
    }
}

/// Runs the full sweep. Grid points are solved on a bounded worker pool and the
/// rows come back in grid order (g_BM, then omega, then lambda_P).
pub fn run_sweep(cfg: &SweepConfig) -> Result<SweepTable> {
    cfg.validate()?;
    let started = Instant::now();
    let basis = BasisIndexMap::enumerate(cfg.n_sites, cfg.n_ph)?;
    let lambdas = cfg.lambda_p.points();

    let mut jobs = Vec::new();
    for &g_bm in &cfg.g_bm {
        for &omega in &cfg.omega_ratios {
            for &lam in &lambdas {
                jobs.push((g_bm, omega, lam));
            }
        }
    }

    let solve = |&(g_bm, omega, lam): &(f64, f64, f64)| -> Result<SweepRow> {
        let base = cfg.params(omega, 0.0, g_bm)?;
        let g_p = g_p_from_lambda(lam, &base);
        let params = base.with_g_p(g_p);
        match solve_point(&params, &basis, &cfg.solver) {
            Ok(point) => Ok(point.row(lam)),
            Err(e) if !cfg.strict => Ok(SweepRow::failed(lam, g_p, g_bm, omega, cfg.n_sites, &e)),
            Err(e) => Err(e),
        }
    };

    let rows: Vec<SweepRow> = run_jobs(cfg.workers, &jobs, solve)?;

    let mut transitions = Vec::new();
    for &g_bm in &cfg.g_bm {
        for &omega in &cfg.omega_ratios {
            let series: Vec<SweepRow> = rows
                .iter()
                .filter(|r| r.g_bm == g_bm && r.omega_ratio == omega)
                .cloned()
                .collect();
            let mut found = detect_transitions(&series);
            if cfg.refine {
                let base = cfg.params(omega, 0.0, g_bm)?;
                for t in &mut found {
                    *t = refine_transition(&base, &basis, &cfg.solver, t)?;
                }
            }
            transitions.push(SeriesTransitions {
                g_bm,
                omega_ratio: omega,
                transitions: found,
            });
        }
    }

    let failures = rows.iter().filter(|r| !r.is_ok()).count();
    let metadata = SweepMetadata {
        package: env!("CARGO_PKG_NAME"),
        version: env!("CARGO_PKG_VERSION"),
        config: cfg.clone(),
        seed: cfg.solver.seed,
        basis_dimension: basis.len(),
        chosen_defaults: cfg.chosen_defaults(),
        transitions,
        timings: Timings {
            total_seconds: started.elapsed().as_secs_f64(),
            points: rows.len(),
            failures,
        },
    };
    Ok(SweepTable { rows, metadata })
}

#[cfg(feature = "parallel")]
fn run_jobs<J: Sync, R: Send>(
    workers: Option<usize>,
    jobs: &[J],
    f: impl Fn(&J) -> Result<R> + Sync + Send,
) -> Result<Vec<R>> {
    use rayon::prelude::*;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = workers {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| jobs.par_iter().map(f).collect())
}

#[cfg(not(feature = "parallel"))]
fn run_jobs<J: Sync, R: Send>(
    _workers: Option<usize>,
    jobs: &[J],
    f: impl Fn(&J) -> Result<R> + Sync + Send,
) -> Result<Vec<R>> {
    jobs.iter().map(f).collect()
}

/// A change of `K_gs` between two neighbouring grid points.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Transition {
    pub lambda_lo: f64,
    pub lambda_hi: f64,
    pub k_from_over_pi: f64,
    pub k_to_over_pi: f64,
}

impl Transition {
    pub fn midpoint(&self) -> f64 {
        0.5 * (self.lambda_lo + self.lambda_hi)
    }
}

/// Every interval of one series (sorted by `lambda_P`) across which `K_gs`
/// changes. Failed rows are skipped.
pub fn detect_transitions(rows: &[SweepRow]) -> Vec<Transition> {
    let ok: Vec<&SweepRow> = rows.iter().filter(|r| r.is_ok()).collect();
    ok.windows(2)
        .filter(|w| w[0].k_gs_over_pi != w[1].k_gs_over_pi)
        .map(|w| Transition {
            lambda_lo: w[0].lambda_p,
            lambda_hi: w[1].lambda_p,
            k_from_over_pi: w[0].k_gs_over_pi,
            k_to_over_pi: w[1].k_gs_over_pi,
        })
        .collect()
}

fn momentum_from_over_pi(over_pi: f64, sites: usize) -> Momentum {
    Momentum::new((over_pi * sites as f64 / 2.0).round() as i64, sites)
}

/// Narrows a crossing to `REFINE_WIDTH` by bisecting on the sign of
/// `E_{K_from} - E_{K_to}`, solving only the two competing sectors.
pub fn refine_transition(
    base: &ModelParams,
    basis: &BasisIndexMap,
    settings: &SolverSettings,
    t: &Transition,
) -> Result<Transition> {
    let n = base.n_sites;
    let from = momentum_from_over_pi(t.k_from_over_pi, n);
    let to = momentum_from_over_pi(t.k_to_over_pi, n);
    let gap = |lam: f64| -> Result<f64> {
        let params = base.with_g_p(g_p_from_lambda(lam, base));
        let a = solve_sector(from, basis, &params, settings)?.energy;
        let b = solve_sector(to, basis, &params, settings)?.energy;
        Ok(a - b)
    };
    let (mut lo, mut hi) = (t.lambda_lo, t.lambda_hi);
    while hi - lo > REFINE_WIDTH {
        let mid = 0.5 * (lo + hi);
        if gap(mid)? < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(Transition {
        lambda_lo: lo,
        lambda_hi: hi,
        ..*t
    })
}

/// Walks `lambdas` upward until `K_gs` leaves its initial sector and returns
/// that first interval, or `None` if it never changes.
pub fn scan_first_transition(
    base: &ModelParams,
    basis: &BasisIndexMap,
    settings: &SolverSettings,
    lambdas: &[f64],
) -> Result<Option<Transition>> {
    let mut previous: Option<(f64, Momentum)> = None;
    for &lam in lambdas {
        let params = base.with_g_p(g_p_from_lambda(lam, base));
        let k = ground_state_over_k(&params, basis, settings)?.momentum;
        if let Some((lam0, k0)) = previous {
            if k0 != k {
                return Ok(Some(Transition {
                    lambda_lo: lam0,
                    lambda_hi: lam,
                    k_from_over_pi: k0.over_pi(),
                    k_to_over_pi: k.over_pi(),
                }));
            }
        }
        previous = Some((lam, k));
    }
    Ok(None)
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceStep {
    pub n_sites: usize,
    pub n_ph: usize,
    pub dimension: usize,
    pub energy: f64,
    pub entropy: Option<f64>,
    /// `|E_i - E_{i-1}| / |E_i|`.
    pub relative_change: Option<f64>,
}

#[derive(Clone, Debug, Serialize)]
pub struct ConvergenceReport {
    pub params: ModelParams,
    pub threshold: f64,
    pub trace: Vec<ConvergenceStep>,
    /// Index into `trace` of the first step whose relative change is below the
    /// threshold.
    pub certified: Option<usize>,
}

impl ConvergenceReport {
    pub fn converged(&self) -> bool {
        self.certified.is_some()
    }

    pub fn certified_step(&self) -> Option<&ConvergenceStep> {
        self.certified.map(|i| &self.trace[i])
    }
}

/// Ground energy (and optionally entropy) along an increasing `(N, N_ph)`
/// schedule. The whole schedule is always evaluated so the report carries the
/// full trace.
pub fn converge(
    params: &ModelParams,
    schedule: &[(usize, usize)],
    settings: &SolverSettings,
    with_entropy: bool,
) -> Result<ConvergenceReport> {
    if schedule.is_empty() {
        return Err(Error::InvalidParameter("empty convergence schedule".into()));
    }
    if schedule.windows(2).any(|w| w[1].0 < w[0].0 || w[1].1 < w[0].1 || w[0] == w[1]) {
        return Err(Error::InvalidParameter(
            "convergence schedule must be strictly increasing".into(),
        ));
    }
    let mut trace: Vec<ConvergenceStep> = Vec::with_capacity(schedule.len());
    let mut certified = None;
    for &(n, nph) in schedule {
        let p = params.with_sites(n).with_n_ph(nph);
        let basis = BasisIndexMap::enumerate(n, nph)?;
        let (energy, ent) = if with_entropy {
            let point = solve_point(&p, &basis, settings)?;
            (point.record.energy, Some(point.entropy))
        } else {
            (ground_state_over_k(&p, &basis, settings)?.energy, None)
        };
        let relative_change = trace
            .last()
            .map(|prev: &ConvergenceStep| (energy - prev.energy).abs() / energy.abs());
        if certified.is_none() && relative_change.is_some_and(|r| r < CONVERGENCE_THRESHOLD) {
            certified = Some(trace.len());
        }
        trace.push(ConvergenceStep {
            n_sites: n,
            n_ph: nph,
            dimension: basis.len(),
            energy,
            entropy: ent,
            relative_change,
        });
    }
    Ok(ConvergenceReport {
        params: *params,
        threshold: CONVERGENCE_THRESHOLD,
        trace,
        certified,
    })
}

/// Spearman rank correlation between `xi_1` and `S_E` over the rows of one
/// series that precede its first transition and have both values nonzero.
/// `None` when fewer than three such rows exist.
pub fn leading_xi_rank_correlation(series: &[SweepRow]) -> Option<f64> {
    let first_k = series.iter().find(|r| r.is_ok())?.k_gs_over_pi;
    let (xs, ys): (Vec<f64>, Vec<f64>) = series
        .iter()
        .filter(|r| r.is_ok())
        .take_while(|r| r.k_gs_over_pi == first_k)
        .filter(|r| r.s_e > 1e-10 && r.xis[0] > 1e-10)
        .map(|r| (r.xis[0], r.s_e))
        .unzip();
    if xs.len() < 3 {
        return None;
    }
    Some(spearman(&xs, &ys))
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..v.len()).collect();
    idx.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut out = vec![0.0; v.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && v[idx[j + 1]] == v[idx[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0;
        for &k in &idx[i..=j] {
            out[k] = avg;
        }
        i = j + 1;
    }
    out
}

pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (ranks(a), ranks(b));
    let n = ra.len() as f64;
    let (ma, mb) = (ra.iter().sum::<f64>() / n, rb.iter().sum::<f64>() / n);
    let mut cov = 0.0;
    let mut va = 0.0;
    let mut vb = 0.0;
    for (x, y) in ra.iter().zip(&rb) {
        cov += (x - ma) * (y - mb);
        va += (x - ma) * (x - ma);
        vb += (y - mb) * (y - mb);
    }
    cov / (va * vb).sqrt()
}

// ---------------------------------------------------------------------------
// output

/// Formats a float with 17 significant digits; infinities print as `inf`.
pub fn format_float(x: f64) -> String {
    if x.is_nan() {
        "nan".into()
    } else if x == f64::INFINITY {
        "inf".into()
    } else if x == f64::NEG_INFINITY {
        "-inf".into()
    } else {
        format!("{x:.16e}")
    }
}

pub fn csv_header(sites: usize) -> Vec<String> {
    let mut h: Vec<String> = [
        "lambda_P",
        "g_P",
        "g_BM",
        "omega_ratio",
        "K_gs_over_pi",
        "degenerate",
        "E_gs",
        "S_E",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    h.extend((1..=sites).map(|a| format!("xi_{a}")));
    h.push("bare_overlap".into());
    h.push("status".into());
    h
}

fn csv_record(row: &SweepRow) -> Vec<String> {
    let mut rec = vec![
        format_float(row.lambda_p),
        format_float(row.g_p),
        format_float(row.g_bm),
        format_float(row.omega_ratio),
        format_float(row.k_gs_over_pi),
        row.degenerate.to_string(),
        format_float(row.e_gs),
        format_float(row.s_e),
    ];
    rec.extend(row.xis.iter().map(|&x| format_float(x)));
    rec.push(format_float(row.bare_overlap));
    rec.push(row.status.clone());
    rec
}

/// Writes the sweep table as CSV with the fixed column order.
pub fn write_csv(rows: &[SweepRow], sites: usize, w: impl Write) -> Result<(), csv::Error> {
    let mut out = csv::Writer::from_writer(w);
    out.write_record(csv_header(sites))?;
    for row in rows {
        out.write_record(csv_record(row))?;
    }
    out.flush()?;
    Ok(())
}

/// Parses a table written by [`write_csv`].
pub fn read_csv(r: impl std::io::Read) -> Result<Vec<SweepRow>> {
    let mut rdr = csv::Reader::from_reader(r);
    let header = rdr.headers().map_err(|e| Error::Config(e.to_string()))?.clone();
    let sites = header.iter().filter(|h| h.starts_with("xi_")).count();
    if header.iter().collect::<Vec<_>>() != csv_header(sites) {
        return Err(Error::Config("unexpected CSV header".into()));
    }
    let num = |s: &str| -> Result<f64> {
        s.parse::<f64>()
            .map_err(|e| Error::Config(format!("bad number {s:?}: {e}")))
    };
    let mut rows = Vec::new();
    for rec in rdr.records() {
        let rec = rec.map_err(|e| Error::Config(e.to_string()))?;
        let f: Vec<&str> = rec.iter().collect();
        rows.push(SweepRow {
            lambda_p: num(f[0])?,
            g_p: num(f[1])?,
            g_bm: num(f[2])?,
            omega_ratio: num(f[3])?,
            k_gs_over_pi: num(f[4])?,
            degenerate: f[5] == "true",
            e_gs: num(f[6])?,
            s_e: num(f[7])?,
            xis: f[8..8 + sites].iter().map(|s| num(s)).collect::<Result<_>>()?,
            bare_overlap: num(f[8 + sites])?,
            status: f[9 + sites].to_string(),
        });
    }
    Ok(rows)
}

/// Per-`g_BM` tables laid out like the published figures: one row per
/// `lambda_P`, one column group (`K_gs/pi`, `S_E`, `xi_1..xi_N`) per omega ratio.
pub fn write_figure_table(
    rows: &[SweepRow],
    g_bm: f64,
    omega_ratios: &[f64],
    sites: usize,
    w: impl Write,
) -> Result<(), csv::Error> {
    let mut out = csv::Writer::from_writer(w);
    let mut header = vec!["lambda_P".to_string()];
    for &omega in omega_ratios {
        header.push(format!("K_gs_over_pi@omega={omega}"));
        header.push(format!("S_E@omega={omega}"));
        header.extend((1..=sites).map(|a| format!("xi_{a}@omega={omega}")));
    }
    out.write_record(&header)?;

    let series: Vec<Vec<&SweepRow>> = omega_ratios
        .iter()
        .map(|&omega| {
            rows.iter()
                .filter(|r| r.g_bm == g_bm && r.omega_ratio == omega)
                .collect()
        })
        .collect();
    let len = series.iter().map(Vec::len).max().unwrap_or(0);
    for i in 0..len {
        let lam = series.iter().find_map(|s| s.get(i)).map(|r| r.lambda_p);
        let mut rec = vec![lam.map_or_else(String::new, format_float)];
        for s in &series {
            match s.get(i) {
                Some(r) => {
                    rec.push(format_float(r.k_gs_over_pi));
                    rec.push(format_float(r.s_e));
                    rec.extend(r.xis.iter().map(|&x| format_float(x)));
                }
                None => rec.extend(std::iter::repeat(String::new()).take(sites + 2)),
            }
        }
        out.write_record(&rec)?;
    }
    out.flush()?;
    Ok(())
}

/// Files written by [`emit`].
#[derive(Clone, Debug, Default)]
pub struct EmittedFiles {
    pub csv: Option<PathBuf>,
    pub metadata: Option<PathBuf>,
    pub figures: Vec<PathBuf>,
}

/// Writes the CSV table, the JSON metadata sidecar and the per-`g_BM` figure
/// tables into `options.dir`.
pub fn emit(table: &SweepTable, options: &OutputOptions) -> Result<EmittedFiles> {
    let cfg = &table.metadata.config;
    let dir = &options.dir;
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut files = EmittedFiles::default();

    let csv_err = |path: &Path, e: csv::Error| match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Config(format!("{other:?}")),
    };
    let create = |path: &Path| fs::File::create(path).map_err(|e| Error::io(path, e));

    if options.csv {
        let path = dir.join("sweep.csv");
        write_csv(&table.rows, cfg.n_sites, create(&path)?).map_err(|e| csv_err(&path, e))?;
        files.csv = Some(path);
    }
    if options.metadata {
        let path = dir.join("metadata.json");
        let text = serde_json::to_string_pretty(&table.metadata)
            .map_err(|e| Error::Config(e.to_string()))?;
        fs::write(&path, text + "\n").map_err(|e| Error::io(&path, e))?;
        files.metadata = Some(path);
    }
    if options.figures {
        for &g in &cfg.g_bm {
            let path = dir.join(format!("figure_gbm_{g}.csv"));
            write_figure_table(&table.rows, g, &cfg.omega_ratios, cfg.n_sites, create(&path)?)
                .map_err(|e| csv_err(&path, e))?;
            files.figures.push(path);
        }
    }
    Ok(files)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn row(lam: f64, k: f64, s: f64, xi1: f64) -> SweepRow {
        SweepRow {
            lambda_p: lam,
            g_p: lam,
            g_bm: 0.25,
            omega_ratio: 1.0,
            k_gs_over_pi: k,
            degenerate: k != 0.0,
            e_gs: -2.0,
            s_e: s,
            xis: vec![xi1, f64::INFINITY],
            bare_overlap: 0.0,
            status: "ok".into(),
        }
    }

    #[test]
    fn grid_points() {
        let g = LambdaGrid::default();
        let pts = g.points();
        assert_eq!(pts.len(), 65);
        assert_eq!(pts[0], 0.0);
        assert_eq!(pts[3], 0.15);
        assert_eq!(*pts.last().unwrap(), 3.2);
        assert!(LambdaGrid { start: 0.0, stop: 1.0, step: 0.0 }.validate().is_err());
        assert!(LambdaGrid { start: 1.0, stop: 0.5, step: 0.1 }.validate().is_err());
        assert_eq!(LambdaGrid { start: 0.5, stop: 0.5, step: 0.1 }.points(), vec![0.5]);
    }

    #[test]
    fn no_transition_when_k_is_constant() {
        let rows: Vec<SweepRow> = (0..5).map(|i| row(i as f64 * 0.1, 0.0, 0.1, 0.1)).collect();
        assert!(detect_transitions(&rows).is_empty());
    }

    #[test]
    fn single_flip_is_reported() {
        let rows = vec![row(0.95, 0.0, 0.1, 0.1), row(1.0, 0.0, 0.1, 0.1), row(1.05, 0.25, 0.3, 0.4), row(1.1, 0.25, 0.3, 0.4)];
        let t = detect_transitions(&rows);
        assert_eq!(t.len(), 1);
        assert_eq!((t[0].lambda_lo, t[0].lambda_hi), (1.0, 1.05));
        assert_eq!((t[0].k_from_over_pi, t[0].k_to_over_pi), (0.0, 0.25));
    }

    #[test]
    fn failed_rows_are_skipped() {
        let mut bad = row(1.0, 0.0, 0.0, 0.0);
        bad.status = "error: boom".into();
        bad.k_gs_over_pi = f64::NAN;
        let rows = vec![row(0.95, 0.0, 0.1, 0.1), bad, row(1.05, 0.0, 0.3, 0.4)];
        assert!(detect_transitions(&rows).is_empty());
    }

    #[test]
    fn config_rejects_unknown_keys() {
        assert!(matches!(
            SweepConfig::from_json(r#"{"g_bm": [0.25], "omega_ratio": [1.0]}"#),
            Err(Error::Config(_))
        ));
        assert!(SweepConfig::from_json(r#"{"solver": {"tol": 1e-9, "tolerance": 1}}"#).is_err());
        let cfg = SweepConfig::from_json(r#"{"g_bm": [0.4], "n_ph": 5}"#).unwrap();
        assert_eq!(cfg.g_bm, vec![0.4]);
        assert_eq!(cfg.n_ph, 5);
        assert_eq!(cfg.omega_ratios, DEFAULT_OMEGA_RATIOS.to_vec());
        assert!(SweepConfig::from_json(r#"{"lambda_p": {"start": 0, "stop": 1, "step": -1}}"#).is_err());
        assert!(SweepConfig::from_json(r#"{"omega_ratios": [0.0]}"#).is_err());
    }

    #[test]
    fn csv_header_only_for_empty_sweep() {
        let mut buf = Vec::new();
        write_csv(&[], 4, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(
            text.trim_end(),
            "lambda_P,g_P,g_BM,omega_ratio,K_gs_over_pi,degenerate,E_gs,S_E,xi_1,xi_2,xi_3,xi_4,bare_overlap,status"
        );
    }

    #[test]
    fn csv_round_trip_is_bit_exact() {
        let mut rows = vec![row(0.1, 0.0, 0.123456789012345678, 0.3), row(0.2, 0.5, 1e-300, 2.0 / 3.0)];
        rows[1].e_gs = -std::f64::consts::PI;
        rows[1].xis[1] = 7.123e-5;
        let mut buf = Vec::new();
        write_csv(&rows, 2, &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.contains(",inf,"));
        let back = read_csv(buf.as_slice()).unwrap();
        assert_eq!(back.len(), 2);
        for (a, b) in rows.iter().zip(&back) {
            assert_eq!(a.e_gs.to_bits(), b.e_gs.to_bits());
            assert_eq!(a.s_e.to_bits(), b.s_e.to_bits());
            for (x, y) in a.xis.iter().zip(&b.xis) {
                assert_eq!(x.to_bits(), y.to_bits());
            }
            assert_eq!(a, b);
        }
    }

    #[test]
    fn figure_table_groups_by_omega() {
        let mut rows = Vec::new();
        for &w in &DEFAULT_OMEGA_RATIOS {
            for i in 0..3 {
                let mut r = row(i as f64 * 0.05, 0.0, 0.1, 0.2);
                r.omega_ratio = w;
                rows.push(r);
            }
        }
        let mut buf = Vec::new();
        write_figure_table(&rows, 0.25, &DEFAULT_OMEGA_RATIOS, 2, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let header = text.lines().next().unwrap();
        assert_eq!(header.matches("S_E@").count(), 3);
        assert_eq!(header.split(',').count(), 1 + 3 * 4);
        assert_eq!(text.lines().count(), 4);
    }

    #[test]
    fn spearman_basics() {
        assert!((spearman(&[1.0, 2.0, 3.0, 4.0], &[10.0, 20.0, 25.0, 100.0]) - 1.0).abs() < 1e-15);
        assert!((spearman(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]) + 1.0).abs() < 1e-15);
        let series = vec![
            row(0.0, 0.0, 0.3, 0.2),
            row(0.1, 0.0, 0.2, 0.1),
            row(0.2, 0.0, 0.0, 0.0),
            row(0.3, 0.0, 0.25, 0.15),
            row(0.4, 0.0, 0.35, 0.25),
            row(0.5, 0.25, 0.9, 0.7),
        ];
        let rho = leading_xi_rank_correlation(&series).unwrap();
        assert!((rho - 1.0).abs() < 1e-15);
    }

    #[test]
    fn format_contract() {
        assert_eq!(format_float(f64::INFINITY), "inf");
        assert_eq!(format_float(1.0), "1.0000000000000000e0");
        let x = 0.1f64 + 0.2;
        assert_eq!(format_float(x).parse::<f64>().unwrap().to_bits(), x.to_bits());
    }
}
