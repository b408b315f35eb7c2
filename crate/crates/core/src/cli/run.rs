//! Mode dispatch: simulations, return synthesis, analysis and predictions.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use super::config::{Mode, RunConfig, TimeUnit};
use super::io;
use super::CliError;
use crate::abm::{self, AgentModel, AgentPopulation, TrajectoryConfig};
use crate::error::{HerdError, Result};
use crate::kinetics::{self, MacroState, ThreeStateParams, TwoStateParams};
use crate::market;
use crate::rng;
use crate::sde::{self, GeneralClassSde, ThreeStateSde, TwoStateSde};
use crate::series::TimeSeries;
use crate::stats::{self, HillEstimate, PowerLawFit};

/// Environment variable capping the number of concurrent trajectories.
pub const THREADS_ENV: &str = "HERDSIM_THREADS";

/// Return noise uses streams above this offset so that it never shares a
/// stream with the trajectory it is driven by.
const RETURN_STREAM_OFFSET: u64 = 1 << 32;

/// Zero-drift point of the two-state SDE, found by bisection (the drift
/// decreases monotonically in `x`).
pub fn two_state_fixed_point(p: &TwoStateParams) -> f64 {
    let drift = |x: f64| kinetics::two_state_drift_diffusion(x, p).map_or(0.0, |d| d.0);
    let (mut lo, mut hi) = (kinetics::DELTA, 1.0 - kinetics::DELTA);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if drift(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Rounds a three-state macroscopic point to agent counts
/// `[fundamentalists, pessimists, optimists]`.
pub fn round_population(state: &MacroState, n: u64) -> Result<AgentPopulation> {
    let f = ((state.n_f * n as f64).round() as u64).min(n);
    let c = n - f;
    let o = ((c as f64 * (1.0 + state.xi) / 2.0).round() as u64).min(c);
    AgentPopulation::new(vec![f, c - o, o])
}

fn thread_pool() -> std::result::Result<rayon::ThreadPool, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Ok(v) = std::env::var(THREADS_ENV) {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| CliError::Config(super::config_error(THREADS_ENV, format!("expected a positive integer, got `{v}`"))))?;
        builder = builder.num_threads(n);
    }
    builder.build().map_err(|e| CliError::Io(e.to_string()))
}

/// Simulates every replica; results are ordered by replica index whatever
/// the scheduling.
fn replicate<F>(cfg: &RunConfig, f: F) -> std::result::Result<Vec<TimeSeries>, CliError>
where
    F: Fn(u64) -> Result<TimeSeries> + Sync,
{
    let replicas = cfg.simulation().replicas.unwrap_or(1);
    let pool = thread_pool()?;
    pool.install(|| (0..replicas).into_par_iter().map(&f).collect::<Result<Vec<_>>>())
        .map_err(CliError::Model)
}

fn initial_or(cfg: &RunConfig, default: Vec<f64>) -> Vec<f64> {
    cfg.simulation().initial.clone().unwrap_or(default)
}

fn simulate_abm2(cfg: &RunConfig, stream: u64) -> Result<TimeSeries> {
    let p = cfg.two_state_params()?;
    let x0 = initial_or(cfg, vec![two_state_fixed_point(&p)])[0];
    if !(0.0..=1.0).contains(&x0) {
        return Err(HerdError::config("simulation.initial", "x must lie in [0, 1]"));
    }
    let n = p.n_agents;
    let x = ((x0 * n as f64).round() as u64).min(n);
    run_abm(cfg, AgentModel::TwoState(p), AgentPopulation::new(vec![n - x, x])?, stream)
}

fn simulate_abm3(cfg: &RunConfig, stream: u64) -> Result<TimeSeries> {
    let p = cfg.three_state_params()?;
    let fp = p.fixed_point();
    let init = initial_or(cfg, vec![fp.n_f, fp.xi]);
    let state = MacroState::new(init[0], init[1]).map_err(|e| HerdError::config("simulation.initial", e.to_string()))?;
    let pop = round_population(&state, cfg.n_agents())?;
    run_abm(cfg, AgentModel::ThreeState(p), pop, stream)
}

fn run_abm(cfg: &RunConfig, model: AgentModel, initial: AgentPopulation, stream: u64) -> Result<TimeSeries> {
    let s = cfg.simulation();
    let traj = TrajectoryConfig {
        t_end: s.t_end.unwrap_or(0.0),
        sample_dt: s.sample_dt.unwrap_or(0.0),
        seed: cfg.seed(),
        stream,
        initial,
    };
    let run = abm::simulate_population(&traj, &model)?;
    Ok(run.series)
}

fn simulate_sde2(cfg: &RunConfig, stream: u64) -> Result<TimeSeries> {
    let p = cfg.two_state_params()?;
    let init = initial_or(cfg, vec![two_state_fixed_point(&p)]);
    sde::integrate(&TwoStateSde(p), &cfg.integrator_config(init, stream))
}

fn simulate_sde3(cfg: &RunConfig, stream: u64) -> Result<TimeSeries> {
    let p: ThreeStateParams = cfg.three_state_params()?;
    let fp = p.fixed_point();
    let init = initial_or(cfg, vec![fp.n_f, fp.xi]);
    sde::integrate(&ThreeStateSde(p), &cfg.integrator_config(init, stream))
}

fn simulate_general_class(cfg: &RunConfig, stream: u64) -> Result<TimeSeries> {
    let (eta, lambda, x_min, x_max) = cfg.general_class();
    let system = GeneralClassSde::new(eta, lambda, x_min, x_max)?;
    let init = initial_or(cfg, vec![(x_min * x_max).sqrt()]);
    sde::integrate(&system, &cfg.integrator_config(init, stream))
}

fn returns_from_states(cfg: &RunConfig, states: &TimeSeries, stream: u64) -> Result<TimeSeries> {
    let mkt = cfg.market_params();
    let prices = market::price_series(states, mkt.r0_bar)?;
    let mut rng = rng::stream(cfg.seed(), RETURN_STREAM_OFFSET + stream);
    market::synthesize_returns(&prices, &mkt, &mut rng)
}

fn series_file(stem: &str, index: usize, count: usize) -> String {
    if count == 1 {
        format!("{stem}.csv")
    } else {
        format!("{stem}_{index}.csv")
    }
}

fn write_all_series(
    cfg: &RunConfig,
    out: &Path,
    stem: &str,
    all: &[TimeSeries],
) -> std::result::Result<Vec<PathBuf>, CliError> {
    let factor = match cfg.time_unit() {
        TimeUnit::Scaled => 1.0,
        TimeUnit::Seconds => cfg.seconds_per_unit(),
    };
    let mut files = Vec::with_capacity(all.len());
    for (i, s) in all.iter().enumerate() {
        let path = out.join(series_file(stem, i, all.len()));
        io::write_series(&path, s, factor).map_err(|e| CliError::io(&path, e))?;
        files.push(path);
    }
    Ok(files)
}

#[derive(Debug, Serialize)]
struct FitReport {
    exponent: f64,
    std_error: f64,
    range: [f64; 2],
    n_points: usize,
    rms_residual: f64,
}

impl From<PowerLawFit> for FitReport {
    fn from(f: PowerLawFit) -> Self {
        FitReport {
            exponent: f.exponent,
            std_error: f.std_error,
            range: [f.range.0, f.range.1],
            n_points: f.n_points,
            rms_residual: f.rms_residual,
        }
    }
}

#[derive(Debug, Serialize)]
struct HillReport {
    pdf_exponent: f64,
    std_error: f64,
    k: usize,
    profile: Vec<(usize, f64)>,
    relative_drift: f64,
}

impl From<HillEstimate> for HillReport {
    fn from(h: HillEstimate) -> Self {
        HillReport {
            relative_drift: h.relative_drift(),
            pdf_exponent: h.pdf_exponent,
            std_error: h.std_error,
            k: h.k,
            profile: h.profile,
        }
    }
}

#[derive(Debug, Serialize)]
struct AnalysisReport {
    column: String,
    samples: usize,
    pdf_fit: Option<FitReport>,
    psd_fits: Vec<FitReport>,
    hill: Option<HillReport>,
    notes: Vec<String>,
}

fn analyze(cfg: &RunConfig, out: &Path) -> std::result::Result<Vec<PathBuf>, CliError> {
    let a = cfg.analysis();
    let input = PathBuf::from(&cfg.input.as_ref().expect("analyze has an input").path);
    let series = io::read_series(&input).map_err(|e| CliError::io(&input, e))?;
    let column = match &a.column {
        Some(c) => c.clone(),
        None => series.names.last().cloned().unwrap_or_default(),
    };
    let series = series.discard_burn_in(a.burn_in.unwrap_or(0.1));
    let raw = series.column(&column).map_err(|_| {
        CliError::Config(super::config_error("analysis.column", format!("`{column}` is not a column of the input")))
    })?;
    let values: Vec<f64> = if a.absolute.unwrap_or(true) {
        raw.iter().map(|v| v.abs()).collect()
    } else {
        raw.to_vec()
    };
    let dt = series
        .dt()
        .ok_or_else(|| CliError::Model(HerdError::InsufficientData("input has fewer than two rows".into())))?;

    let mut notes = Vec::new();
    let mut files = Vec::new();

    let hist = stats::pdf_log_binned(&values, a.pdf_bins.unwrap_or(50)).map_err(CliError::Model)?;
    let pdf_path = out.join("pdf.csv");
    io::write_points(&pdf_path, ["x", "p"], &hist.points()).map_err(|e| CliError::io(&pdf_path, e))?;
    files.push(pdf_path);
    let pdf_range = match a.pdf_fit_range {
        Some([lo, hi]) => (lo, hi),
        None => stats::default_pdf_fit_range(&values).map_err(CliError::Model)?,
    };
    let pdf_fit = match stats::fit_power_law(&hist.points(), pdf_range) {
        Ok(f) => Some(f.into()),
        Err(e) => {
            notes.push(format!("pdf fit: {e}"));
            None
        }
    };

    let spectrum = stats::psd_welch(&values, dt, a.psd_segments.unwrap_or(16)).map_err(CliError::Model)?;
    let psd_path = out.join("psd.csv");
    let psd_points: Vec<(f64, f64)> = spectrum.frequencies.iter().copied().zip(spectrum.psd.iter().copied()).collect();
    io::write_points(&psd_path, ["f", "S"], &psd_points).map_err(|e| CliError::io(&psd_path, e))?;
    files.push(psd_path);
    let binned = spectrum.log_binned(a.psd_bins_per_decade.unwrap_or(20));
    let mut psd_fits = Vec::new();
    for r in a.psd_fit_ranges.clone().unwrap_or_default() {
        match stats::fit_power_law(&binned, (r[0], r[1])) {
            Ok(f) => psd_fits.push(f.into()),
            Err(e) => notes.push(format!("psd fit on [{}, {}]: {e}", r[0], r[1])),
        }
    }

    let positive = values.iter().filter(|&&v| v > 0.0).count();
    let k = a.hill_k.unwrap_or((positive as f64).sqrt() as usize);
    let hill = match stats::hill_tail_exponent(&values, k) {
        Ok(h) => Some(h.into()),
        Err(e) => {
            notes.push(format!("hill: {e}"));
            None
        }
    };

    let report = AnalysisReport {
        column,
        samples: values.len(),
        pdf_fit,
        psd_fits,
        hill,
        notes,
    };
    let fits_path = out.join("fits.json");
    io::write_json(&fits_path, &report).map_err(|e| CliError::io(&fits_path, e))?;
    files.push(fits_path);
    Ok(files)
}

/// Executes a resolved configuration, writing artifacts and the manifest into
/// `out`. Returns the paths written.
pub fn run(cfg: &RunConfig, out: &Path) -> std::result::Result<Vec<PathBuf>, CliError> {
    std::fs::create_dir_all(out).map_err(|e| CliError::io(out, e))?;
    let mut files = match cfg.mode() {
        Mode::Abm2 => write_all_series(cfg, out, "trajectory", &replicate(cfg, |i| simulate_abm2(cfg, i))?)?,
        Mode::Abm3 => write_all_series(cfg, out, "trajectory", &replicate(cfg, |i| simulate_abm3(cfg, i))?)?,
        Mode::Sde2 => write_all_series(cfg, out, "trajectory", &replicate(cfg, |i| simulate_sde2(cfg, i))?)?,
        Mode::Sde3 => write_all_series(cfg, out, "trajectory", &replicate(cfg, |i| simulate_sde3(cfg, i))?)?,
        Mode::GenClass => {
            write_all_series(cfg, out, "trajectory", &replicate(cfg, |i| simulate_general_class(cfg, i))?)?
        }
        Mode::Returns => {
            let returns = match &cfg.input {
                Some(input) => {
                    let path = PathBuf::from(&input.path);
                    let states = io::read_series(&path).map_err(|e| CliError::io(&path, e))?;
                    vec![returns_from_states(cfg, &states, 0).map_err(CliError::Model)?]
                }
                None => replicate(cfg, |i| {
                    let states = simulate_sde3(cfg, i)?;
                    returns_from_states(cfg, &states, i)
                })?,
            };
            write_all_series(cfg, out, "returns", &returns)?
        }
        Mode::Analyze => analyze(cfg, out)?,
        Mode::Predict => {
            let (alpha, eps2) = cfg.predict_inputs();
            let pred = kinetics::predict_exponents(alpha, eps2).map_err(CliError::Model)?;
            let path = out.join("prediction.json");
            io::write_json(&path, &pred).map_err(|e| CliError::io(&path, e))?;
            vec![path]
        }
    };
    let manifest = RunConfig {
        version: Some(env!("CARGO_PKG_VERSION").to_string()),
        ..cfg.clone()
    };
    let path = out.join("manifest.json");
    io::write_json(&path, &manifest).map_err(|e| CliError::io(&path, e))?;
    files.push(path);
    Ok(files)
}
