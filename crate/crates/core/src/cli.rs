//! Command-line orchestration: read a JSON run configuration, run one
//! pipeline stage and write CSV/JSON artifacts into the output directory.
//!
//! Exit codes: 0 success, 1 a verification or decay check failed, 2 usage or
//! configuration error, 3 numerical failure. Errors are reported on stderr as
//! one JSON object.

use crate::decay::{decay_report, measure_series, DecayRateSpec, FitWindow, NormOptions, Part, Verdict};
use crate::error::{Error, Result};
use crate::kernels::{
    evolve_spectral, BandMask, DrivingData, ForceSpec, Probe, SpectralEvaluator, SpectralGrid, SpectralOptions,
};
use crate::oracles::{run_all, SuiteResult, SuiteSizes};
use crate::roots::{calibrate, find_roots, log_spaced, FrequencyCalibration};
use crate::symbols::{derive_constants, eval_core_at, zeta, DerivedConstants, FluidParams};
use crate::transform::{inverse_1d, DataPreset, FrequencyGrid};
use crate::C64;
use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use std::ffi::OsString;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

pub const ENV_OUT: &str = "TWOPHASE_OUT";
pub const ENV_THREADS: &str = "TWOPHASE_THREADS";

#[derive(Debug, Parser)]
#[command(name = "twophase", version, about = "Two-phase Stokes interface semigroup: symbols, roots, evolution and decay rates")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// JSON run configuration; built-in defaults when omitted.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, overriding the config and TWOPHASE_OUT.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Worker thread cap, overriding TWOPHASE_THREADS.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Subcommand)]
pub enum Command {
    /// Derived constants and boundary symbols at configured points.
    Symbols,
    /// Sweep of the two slow roots over low frequencies.
    Roots,
    /// Band cutoffs and contour heights with their certificates.
    Calibrate,
    /// Spectral fields at the configured times, plus the physical height.
    Evolve,
    /// Decay-rate measurement and fit for every configured spec.
    Decay,
    /// All oracle suites.
    Verify,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub count: usize,
    pub xi_max: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RootSweep {
    pub a_min: f64,
    /// Upper end; the calibrated `A0` when absent.
    pub a_max: Option<f64>,
    pub count: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Numerics {
    pub lambda1: Option<f64>,
    /// Largest frequency covered by the calibration.
    pub a_max: f64,
    pub contour_rel_tol: f64,
    /// Contour tolerance for algebraic decay runs.
    pub decay_rel_tol: f64,
    /// Contour tolerance for high-band runs; their values cancel down to
    /// many orders below the data.
    pub high_rel_tol: f64,
    pub norm: NormOptions,
    pub grid: GridConfig,
    pub probes: Vec<Probe>,
    pub roots: RootSweep,
    /// `[A, Re λ, Im λ]` triples for the symbols command.
    pub symbol_points: Vec<[f64; 3]>,
    pub fit_window: FitWindow,
    pub high_window: FitWindow,
    pub decay_samples: usize,
    pub tolerance: f64,
    pub high_tolerance: f64,
    pub seed: u64,
    pub suites: SuiteSizes,
}

impl Default for Numerics {
    fn default() -> Self {
        Numerics {
            lambda1: None,
            a_max: 8.0,
            contour_rel_tol: SpectralOptions::default().rel_tol,
            decay_rel_tol: 1e-8,
            high_rel_tol: 1e-14,
            norm: NormOptions::default(),
            grid: GridConfig {
                count: 256,
                xi_max: 16.0,
            },
            probes: Probe::interface().to_vec(),
            roots: RootSweep {
                a_min: 1e-4,
                a_max: None,
                count: 64,
            },
            symbol_points: vec![[0.01, 0.0, 0.1], [0.1, -0.05, 0.3], [1.0, 1.0, 0.0], [4.0, 0.0, 2.0]],
            fit_window: FitWindow::default(),
            high_window: FitWindow { t_min: 1.0, t_max: 20.0 },
            decay_samples: 25,
            tolerance: crate::decay::DEFAULT_TOLERANCE,
            high_tolerance: 0.05,
            seed: 2026,
            suites: SuiteSizes::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DataConfig {
    pub height: DataPreset,
    pub force: Option<ForceSpec>,
    pub bands: BandMask,
}

impl Default for DataConfig {
    fn default() -> Self {
        DataConfig {
            height: DataPreset::Gaussian {
                amplitude: 1.0,
                width: 1.0,
            },
            force: None,
            bands: BandMask::default(),
        }
    }
}

/// Everything a run needs. Quantities are nondimensional.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub fluids: FluidParams,
    pub numerics: Numerics,
    pub data: DataConfig,
    /// Output times of `evolve`; for `decay`, overrides the log-spaced
    /// window samples when nonempty.
    pub times: Vec<f64>,
    pub specs: Vec<DecayRateSpec>,
    pub output: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            fluids: FluidParams::default(),
            numerics: Numerics::default(),
            data: DataConfig::default(),
            times: vec![1.0, 10.0, 100.0],
            specs: Vec::new(),
            output: PathBuf::from("twophase-out"),
        }
    }
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).map_err(|e| Error::Config(e.to_string()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(&self) -> Result<()> {
        let cfg = |e: Error| Error::Config(e.to_string());
        self.fluids.validate().map_err(cfg)?;
        DrivingData::new(self.data.height, self.data.force.clone(), self.data.bands).map_err(cfg)?;
        if self.times.iter().any(|t| !(t.is_finite() && *t > 0.0)) {
            return Err(Error::Config("times must be positive and finite".into()));
        }
        if self.times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config("times must be strictly ascending".into()));
        }
        for s in &self.specs {
            s.validate().map_err(cfg)?;
        }
        let n = &self.numerics;
        for (name, v) in [
            ("contour_rel_tol", n.contour_rel_tol),
            ("decay_rel_tol", n.decay_rel_tol),
            ("high_rel_tol", n.high_rel_tol),
            ("a_max", n.a_max),
            ("tolerance", n.tolerance),
            ("high_tolerance", n.high_tolerance),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("numerics.{name} must be positive, got {v}")));
            }
        }
        for w in [n.fit_window, n.high_window] {
            if !(w.t_min > 0.0 && w.t_max > w.t_min) {
                return Err(Error::Config(format!("bad fit window {w:?}")));
            }
        }
        if n.decay_samples < 3 {
            return Err(Error::Config("decay_samples must be at least 3".into()));
        }
        if n.grid.count < 2 || n.grid.count % 2 != 0 || !(n.grid.xi_max > 0.0) {
            return Err(Error::Config("grid needs an even count >= 2 and xi_max > 0".into()));
        }
        if !(n.roots.a_min > 0.0) || n.roots.count < 2 {
            return Err(Error::Config("root sweep needs a_min > 0 and count >= 2".into()));
        }
        Ok(())
    }

    fn driving(&self) -> Result<DrivingData> {
        DrivingData::new(self.data.height, self.data.force.clone(), self.data.bands)
    }
}

/// Exit status of a command.
pub fn exit_code(e: &Error) -> i32 {
    match e {
        Error::Config(_) | Error::InvalidParams(_) | Error::HypothesisViolation(_) | Error::Json(_) => 2,
        _ => 3,
    }
}

fn error_json(kind: &str, message: &str, code: i32) -> String {
    serde_json::json!({ "error": kind, "message": message, "exit_code": code }).to_string()
}

/// Parse `args` (program name first), run the command and return the exit
/// status. Errors are printed to stderr as JSON.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return 0;
            }
            eprintln!("{}", error_json("Usage", e.to_string().trim(), 2));
            return 2;
        }
    };
    match execute(&cli) {
        Ok(code) => code,
        Err(e) => {
            let code = exit_code(&e);
            eprintln!("{}", error_json(e.kind(), &e.to_string(), code));
            code
        }
    }
}

/// Resolve config, output directory and thread count, then dispatch.
pub fn execute(cli: &Cli) -> Result<i32> {
    let mut cfg = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(o) = cli.out.clone().or_else(|| std::env::var_os(ENV_OUT).map(PathBuf::from)) {
        cfg.output = o;
    }
    let threads = match cli.threads {
        Some(t) => Some(t),
        None => match std::env::var(ENV_THREADS) {
            Ok(s) => Some(
                s.parse::<usize>()
                    .map_err(|_| Error::Config(format!("{ENV_THREADS} must be a positive integer, got {s:?}")))?,
            ),
            Err(_) => None,
        },
    };
    if threads == Some(0) {
        return Err(Error::Config("thread count must be positive".into()));
    }
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let pool = builder.build().map_err(|e| Error::Config(e.to_string()))?;
    pool.install(|| dispatch(cli.command, &cfg))
}

fn dispatch(cmd: Command, cfg: &RunConfig) -> Result<i32> {
    let out = &cfg.output;
    fs::create_dir_all(out)?;
    write_json(&out.join("config.json"), cfg)?;
    match cmd {
        Command::Symbols => cmd_symbols(cfg),
        Command::Roots => cmd_roots(cfg),
        Command::Calibrate => cmd_calibrate(cfg),
        Command::Evolve => cmd_evolve(cfg),
        Command::Decay => cmd_decay(cfg),
        Command::Verify => cmd_verify(cfg),
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = BufWriter::new(File::create(path)?);
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(File::create(path)?))
}

fn constants(cfg: &RunConfig) -> Result<DerivedConstants> {
    derive_constants(&cfg.fluids, cfg.numerics.lambda1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct CachedCalibration {
    fluids: FluidParams,
    lambda1: Option<f64>,
    a_max: f64,
    calibration: FrequencyCalibration,
}

const CALIBRATION_FILE: &str = "calibration.json";

/// Reuse `calibration.json` from the output directory when it was made for
/// the same fluids and still revalidates; otherwise calibrate afresh.
fn load_or_calibrate(cfg: &RunConfig, k: &DerivedConstants) -> Result<FrequencyCalibration> {
    let path = cfg.output.join(CALIBRATION_FILE);
    if let Ok(text) = fs::read_to_string(&path) {
        if let Ok(c) = serde_json::from_str::<CachedCalibration>(&text) {
            if c.fluids == cfg.fluids
                && c.lambda1 == cfg.numerics.lambda1
                && c.a_max == cfg.numerics.a_max
                && c.calibration.revalidate(&cfg.fluids, k).is_ok()
            {
                return Ok(c.calibration);
            }
        }
    }
    calibrate(&cfg.fluids, k, cfg.numerics.a_max)
}

fn cmd_calibrate(cfg: &RunConfig) -> Result<i32> {
    let k = constants(cfg)?;
    let cal = calibrate(&cfg.fluids, &k, cfg.numerics.a_max)?;
    let ok = cal.a0 < 1.0 && cal.a_inf >= 2.0 && cal.certificates.iter().all(|c| c.pass);
    write_json(
        &cfg.output.join(CALIBRATION_FILE),
        &CachedCalibration {
            fluids: cfg.fluids,
            lambda1: cfg.numerics.lambda1,
            a_max: cfg.numerics.a_max,
            calibration: cal.clone(),
        },
    )?;
    println!(
        "A0 = {:.6e}, A_inf = {:.6e}, mid abscissa = {:.6e}, y_top = {:.6e}, {} certificates",
        cal.a0,
        cal.a_inf,
        cal.mid_abscissa,
        cal.y_top,
        cal.certificates.len()
    );
    Ok(if ok { 0 } else { 1 })
}

fn cmd_symbols(cfg: &RunConfig) -> Result<i32> {
    let k = constants(cfg)?;
    write_json(
        &cfg.output.join("constants.json"),
        &serde_json::json!({ "constants": k, "gamma0_anchor": k.gamma0_anchor() }),
    )?;
    let mut w = create(&cfg.output.join("symbols.csv"))?;
    writeln!(
        w,
        "A,lambda_re,lambda_im,L_re,L_im,F_re,F_im,script_L_re,script_L_im,B_plus_re,B_plus_im,B_minus_re,B_minus_im"
    )?;
    for &[a, re, im] in &cfg.numerics.symbol_points {
        let s = eval_core_at(&cfg.fluids, &k, a, C64::new(re, im))?;
        write!(w, "{a:.17e},{re:.17e},{im:.17e}")?;
        for z in [s.l, s.f, s.script_l, s.b_plus, s.b_minus] {
            write!(w, ",{:.17e},{:.17e}", z.re, z.im)?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    Ok(0)
}

fn cmd_roots(cfg: &RunConfig) -> Result<i32> {
    let k = constants(cfg)?;
    let sweep = cfg.numerics.roots;
    let a_max = match sweep.a_max {
        Some(a) => a,
        None => load_or_calibrate(cfg, &k)?.a0,
    };
    if !(a_max > sweep.a_min) {
        return Err(Error::Config(format!("root sweep range [{}, {a_max}] is empty", sweep.a_min)));
    }
    let mut w = create(&cfg.output.join("roots.csv"))?;
    writeln!(
        w,
        "A,re_lambda_plus,im_lambda_plus,re_lambda_minus,im_lambda_minus,abs_zeta_plus_minus_lambda_plus,residual"
    )?;
    for a in log_spaced(sweep.a_min, a_max, sweep.count) {
        let r = find_roots(&cfg.fluids, &k, a)?;
        let (zp, _) = zeta(&k, a);
        writeln!(
            w,
            "{a:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e},{:.17e}",
            r.lambda_plus.re,
            r.lambda_plus.im,
            r.lambda_minus.re,
            r.lambda_minus.im,
            (zp - r.lambda_plus).norm(),
            r.residual
        )?;
    }
    w.flush()?;
    Ok(0)
}

fn cmd_evolve(cfg: &RunConfig) -> Result<i32> {
    if cfg.times.is_empty() {
        return Err(Error::Config("evolve needs at least one time".into()));
    }
    let k = constants(cfg)?;
    let cal = load_or_calibrate(cfg, &k)?;
    let ev = SpectralEvaluator::new(
        &cfg.fluids,
        &k,
        &cal,
        SpectralOptions {
            rel_tol: cfg.numerics.contour_rel_tol,
            ..Default::default()
        },
    )?;
    let data = cfg.driving()?;
    let fgrid = FrequencyGrid::uniform(cfg.numerics.grid.count, cfg.numerics.grid.xi_max)?;
    let grid = SpectralGrid {
        nodes: fgrid.nodes().into_iter().map(|x| vec![x]).collect(),
        probes: cfg.numerics.probes.clone(),
    };
    let fields = evolve_spectral(&ev, &data, &cfg.times, &grid)?;
    let mut w = create(&cfg.output.join("spectral.csv"))?;
    for (i, f) in fields.iter().enumerate() {
        f.write_csv(&mut w, i == 0)?;
    }
    w.flush()?;
    let mut h = create(&cfg.output.join("height.csv"))?;
    writeln!(h, "x,value,t,component")?;
    for f in &fields {
        let eta: Vec<C64> = f.values.iter().map(|v| v.eta).collect();
        let phys = inverse_1d(&eta, &fgrid, f.t, "eta")?;
        for (x, v) in phys.x.iter().zip(&phys.values) {
            writeln!(h, "{x:.17e},{v:.17e},{:.17e},{}", phys.t, phys.component)?;
        }
    }
    h.flush()?;
    Ok(0)
}

/// Times, band mask, contour tolerance, window and tolerance for one spec.
/// The high part isolates the high band on its own short window; every other
/// part is measured on the full field over the algebraic window.
fn decay_plan(cfg: &RunConfig, spec: &DecayRateSpec) -> (Vec<f64>, BandMask, f64, FitWindow, f64) {
    let n = &cfg.numerics;
    let (window, mask, tol, fit_tol) = if spec.part == Part::High {
        (n.high_window, BandMask::only_high(), n.high_rel_tol, n.high_tolerance)
    } else {
        (n.fit_window, cfg.data.bands, n.decay_rel_tol, n.tolerance)
    };
    // `times` are evolve snapshots; decay runs sample their own window.
    (window.samples(n.decay_samples), mask, tol, window, fit_tol)
}

fn cmd_decay(cfg: &RunConfig) -> Result<i32> {
    if cfg.specs.is_empty() {
        return Ok(0);
    }
    let k = constants(cfg)?;
    let cal = load_or_calibrate(cfg, &k)?;
    let mut all_pass = true;
    for spec in &cfg.specs {
        let (times, mask, tol, window, fit_tol) = decay_plan(cfg, spec);
        let ev = SpectralEvaluator::new(
            &cfg.fluids,
            &k,
            &cal,
            SpectralOptions {
                rel_tol: tol,
                ..Default::default()
            },
        )?;
        let data = DrivingData::new(cfg.data.height, cfg.data.force.clone(), mask)?;
        let norms = measure_series(&ev, &data, spec.component, spec.n, spec.q, &times, &cfg.numerics.norm)?;
        let report = decay_report(spec, &times, &norms, window, fit_tol)?;
        let stem = spec.file_stem();
        write_json(&cfg.output.join(format!("{stem}.json")), &report)?;
        let mut w = create(&cfg.output.join(format!("{stem}.csv")))?;
        report.write_csv(&mut w)?;
        w.flush()?;
        let fitted = report
            .fitted_exponent
            .map(|r| format!("exponent {r:.4}"))
            .or(report.fitted_gamma.map(|g| format!("gamma {g:.4}")))
            .unwrap_or_else(|| "no fit".into());
        println!("{stem} {:?}: {fitted} ({:?})", spec.part, report.verdict);
        all_pass &= report.verdict == Verdict::Pass;
    }
    Ok(if all_pass { 0 } else { 1 })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub passed: bool,
    pub suites: Vec<SuiteResult>,
}

fn cmd_verify(cfg: &RunConfig) -> Result<i32> {
    let k = constants(cfg)?;
    let cal = load_or_calibrate(cfg, &k)?;
    let suites = run_all(&cfg.fluids, &cal, &cfg.numerics.suites, cfg.numerics.seed);
    let passed = suites.iter().all(|s| s.passed);
    for s in &suites {
        println!("{} {}: {}", if s.passed { "PASS" } else { "FAIL" }, s.name, s.detail);
    }
    write_json(&cfg.output.join("verify.json"), &VerifyReport { passed, suites })?;
    Ok(if passed { 0 } else { 1 })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_round_trips() {
        let cfg = RunConfig::default();
        let text = serde_json::to_string(&cfg).unwrap();
        assert_eq!(RunConfig::from_json(&text).unwrap(), cfg);
        assert_eq!(RunConfig::from_json("{}").unwrap(), cfg);
    }

    #[test]
    fn config_errors_are_classified() {
        for bad in [
            r#"{"times": [2.0, 1.0]}"#,
            r#"{"fluids": {"rho_plus": -1, "rho_minus": 2, "mu_plus": 1, "mu_minus": 1, "sigma": 1, "gravity": 3}}"#,
            r#"{"colour": 1}"#,
            r#"{"specs": [{"N": 2, "p": 2.0, "q": 4.0, "component": "H", "part": "res"}]}"#,
        ] {
            let e = RunConfig::from_json(bad).unwrap_err();
            assert_eq!(exit_code(&e), 2, "{bad}: {e}");
        }
    }

    #[test]
    fn high_spec_uses_the_short_window() {
        let mut cfg = RunConfig::default();
        cfg.times.clear();
        let spec = DecayRateSpec::new(2, 1.0, 2.0, crate::decay::Component::H, Part::High).unwrap();
        let (t, mask, tol, w, _) = decay_plan(&cfg, &spec);
        assert_eq!(mask, BandMask::only_high());
        assert_eq!(tol, 1e-14);
        assert_eq!(w, cfg.numerics.high_window);
        assert_eq!(t.len(), cfg.numerics.decay_samples);
    }

    #[test]
    fn unknown_command_is_a_usage_error() {
        assert_eq!(run(["twophase", "frobnicate"]), 2);
        assert_eq!(run(["twophase"]), 2);
    }
}
