use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use interurn::estimate::mle::{fit_mle, MleOptions, MleResult};
use interurn::estimate::pipeline::pipeline;
use interurn::estimate::study::{run_study, write_study_csv, StudyMode, StudyOptions, StudyRow, REFERENCE_SCENARIOS};
use interurn::ingest::{
    equalize, load_observations, pair_streams, read_csv, tokenize, InputFormat, ObservationLog, TokenizeOptions,
};
use interurn::io::{self as fmt, series_names};
use interurn::model::SpecFile;
use interurn::spectral::{asymptotic_exponents, leading_eigen, ode_trajectory};
use interurn::stats::{
    composition_quantiles, default_sample_times, fit_trajectories, ratio_series, trajectories, CompositionOptions,
    EventSource, FitOptions, HeapsFit, SeriesSelection,
};
use interurn::{run, Error, InteractionSpec, SquareMatrix};

use crate::args::*;
use crate::{CliError, Globals};

fn required<T>(value: Option<T>, flag: &str) -> Result<T, CliError> {
    value.ok_or_else(|| CliError::Usage(format!("{flag} is required")))
}

/// Opens a file, naming it in the error.
fn open(path: &Path) -> Result<File, CliError> {
    File::open(path).map_err(|e| std::io::Error::new(e.kind(), format!("{}: {e}", path.display())).into())
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn finish(mut w: BufWriter<File>) -> Result<(), CliError> {
    w.flush()?;
    Ok(())
}

fn load_spec(path: &Path) -> Result<InteractionSpec, CliError> {
    let file: SpecFile = serde_json::from_reader(open(path)?).map_err(Error::from)?;
    Ok(InteractionSpec::try_from(file)?)
}

fn load_gamma(spec: Option<PathBuf>, gamma: Option<String>) -> Result<SquareMatrix, CliError> {
    match (spec, gamma) {
        (Some(path), None) => Ok(load_spec(&path)?.gamma().clone()),
        (None, Some(text)) => Ok(serde_json::from_str(&text).map_err(Error::from)?),
        _ => Err(CliError::Usage("give exactly one of --spec and --gamma".into())),
    }
}

/// A CSV with `t,agent,item` columns, or a simulator JSON log.
fn load_input(path: Option<PathBuf>) -> Result<ObservationLog, CliError> {
    let path = required(path, "--input")?;
    let log = if path.extension().is_some_and(|e| e == "json") {
        let log = fmt::read_event_log_json(open(&path)?)?;
        ObservationLog::from_source(&log)?
    } else {
        read_csv(open(&path)?, false)?
    };
    Ok(log)
}

fn selection(series: Series) -> SeriesSelection {
    match series {
        Series::Four => SeriesSelection::Four,
        Series::Two => SeriesSelection::Two,
    }
}

fn write_stub(path: &Path, script: &str) -> Result<(), CliError> {
    let mut w = create(path)?;
    w.write_all(script.as_bytes())?;
    finish(w)
}

/// `1..100` (inclusive) or `3,7,11`.
fn parse_seeds(text: &str) -> Result<Vec<u64>, CliError> {
    let bad = || CliError::Usage(format!("cannot read seeds `{text}`; use 1..100 or 1,2,3"));
    if let Some((a, b)) = text.split_once("..") {
        let (a, b): (u64, u64) = (a.trim().parse().map_err(|_| bad())?, b.trim().parse().map_err(|_| bad())?);
        if a > b {
            return Err(bad());
        }
        return Ok((a..=b).collect());
    }
    text.split(',').map(|s| s.trim().parse().map_err(|_| bad())).collect()
}

pub fn simulate(a: SimulateArgs) -> Result<(), CliError> {
    let spec = load_spec(&required(a.spec, "--spec")?)?;
    if a.steps == 0 {
        return Err(CliError::Usage("--steps must be at least 1".into()));
    }
    let seeds = match &a.seeds {
        Some(text) => parse_seeds(text)?,
        None => vec![a.seed],
    };
    fs::create_dir_all(&a.out)?;
    seeds.par_iter().try_for_each(|&seed| -> Result<(), CliError> {
        let log = run(&spec, a.steps, seed)?;
        let mut w = create(&a.out.join(format!("events-{seed}.csv")))?;
        fmt::write_events_csv(&mut w, &log)?;
        finish(w)?;
        if !a.no_json {
            let mut w = create(&a.out.join(format!("events-{seed}.json")))?;
            fmt::write_event_log_json(&mut w, &log)?;
            finish(w)?;
        }
        Ok(())
    })
}

fn fit_options(t_min: Option<f64>, n_points: usize, series: Series) -> FitOptions {
    FitOptions {
        t_min,
        n_points,
        series: selection(series),
    }
}

pub fn heaps(a: HeapsArgs, g: &Globals) -> Result<(), CliError> {
    let log = load_input(a.input)?;
    let traj = trajectories(&log, &default_sample_times(log.horizon()))?;
    let fit = fit_trajectories(&traj, &fit_options(a.t_min, a.n_points, a.series))?;
    let mut w = create(&a.out.join("heaps.json"))?;
    fmt::write_json(&mut w, &fit)?;
    finish(w)?;
    let four = a.series == Series::Four;
    let mut w = create(&a.out.join("heaps_points.csv"))?;
    fmt::write_fit_points_csv(&mut w, &traj, four, fit.t_min, fit.t_max)?;
    finish(w)?;
    if g.gnuplot_stub {
        let names = series_names(log.n_agents(), four).join(" ");
        write_stub(
            &a.out.join("heaps.gp"),
            &format!(
                "# gnuplot -p heaps.gp\n\
                 set datafile separator ','\n\
                 set key autotitle columnhead left top\n\
                 set xlabel 'log10 t'\n\
                 set ylabel 'log10 count'\n\
                 slope = {}\n\
                 plot for [s in \"{names}\"] 'heaps_points.csv' \\\n    \
                 using 1:(strcol(3) eq s ? $2 : NaN) with points title s\n",
                fit.slope
            ),
        )?;
    }
    Ok(())
}

pub fn ratio(a: RatioArgs, g: &Globals) -> Result<(), CliError> {
    let log = load_input(a.input)?;
    let n = log.n_agents();
    let [h, j] = a.agents[..] else {
        return Err(CliError::Usage("--agents takes two agent numbers".into()));
    };
    for agent in [h, j] {
        if agent == 0 || agent > n {
            return Err(Error::AgentOutOfRange { agent, n_agents: n }.into());
        }
    }
    let traj = trajectories(&log, &default_sample_times(log.horizon()))?;
    let mut w = create(&a.out.join("ratio.csv"))?;
    fmt::write_ratio_csv(&mut w, &ratio_series(&traj, h - 1, j - 1))?;
    finish(w)?;
    if g.gnuplot_stub {
        write_stub(
            &a.out.join("ratio.gp"),
            "# gnuplot -p ratio.gp\n\
             set datafile separator ','\n\
             set logscale x\n\
             set xlabel 't'\n\
             set ylabel 'log10 ratio'\n\
             plot 'ratio.csv' using 1:2 skip 1 with lines notitle\n",
        )?;
    }
    Ok(())
}

pub fn composition(a: CompositionArgs, g: &Globals) -> Result<(), CliError> {
    let log = load_input(a.input)?;
    let n = log.n_agents();
    if a.agent == 0 || a.agent > n {
        return Err(Error::AgentOutOfRange {
            agent: a.agent,
            n_agents: n,
        }
        .into());
    }
    let options = CompositionOptions {
        min_occupancy: a.min_occupancy,
        bin_width_log10: a.bin,
        levels: a.levels.clone(),
        agent: a.agent - 1,
    };
    let table = composition_quantiles(&log, &options)?;
    let mut w = create(&a.out.join("composition.csv"))?;
    fmt::write_composition_csv(&mut w, &table)?;
    finish(w)?;
    if g.gnuplot_stub {
        let last = 3 + a.levels.len();
        write_stub(
            &a.out.join("composition.gp"),
            &format!(
                "# gnuplot -p composition.gp\n\
                 set datafile separator ','\n\
                 set key autotitle columnhead\n\
                 set logscale x\n\
                 set xlabel 'occupancy'\n\
                 set ylabel 'share of agent {}'\n\
                 plot for [i=4:{last}] 'composition.csv' using (sqrt($1*$2)):i with linespoints\n",
                a.agent
            ),
        )?;
    }
    Ok(())
}

#[derive(Serialize)]
struct SpectralReport {
    gamma_star: f64,
    /// `u₁/u₂`, when there are at least two agents.
    ratio: Option<f64>,
    v: Vec<f64>,
    u: Vec<f64>,
    ratios: Vec<Vec<f64>>,
    exponents: Vec<f64>,
}

pub fn spectral(a: SpectralArgs) -> Result<(), CliError> {
    let gamma = load_gamma(a.spec, a.gamma)?;
    let s = leading_eigen(&gamma)?;
    let report = SpectralReport {
        gamma_star: s.gamma_star,
        ratio: (gamma.dim() >= 2).then(|| s.ratio(0, 1)),
        exponents: asymptotic_exponents(&gamma)?,
        v: s.v,
        u: s.u,
        ratios: s.ratios,
    };
    match a.out {
        Some(path) => {
            let mut w = create(&path)?;
            fmt::write_json(&mut w, &report)?;
            finish(w)
        }
        None => Ok(fmt::write_json(std::io::stdout().lock(), &report)?),
    }
}

pub fn ode(a: OdeArgs, g: &Globals) -> Result<(), CliError> {
    let gamma = load_gamma(a.spec, a.gamma)?;
    let d0 = a.d0.unwrap_or_else(|| vec![1.0; gamma.dim()]);
    let traj = ode_trajectory(&gamma, &d0, a.t0, a.t1, a.points)?;
    if let Some(diff) = traj.expm_max_rel_diff {
        eprintln!("max relative gap to the matrix exponential: {diff:e}");
    }
    match a.out {
        Some(path) => {
            let mut w = create(&path)?;
            fmt::write_trajectory_csv(&mut w, &traj)?;
            finish(w)?;
            if g.gnuplot_stub {
                let name = path.file_name().map_or("ode.csv".into(), |f| f.to_string_lossy().into_owned());
                write_stub(
                    &path.with_extension("gp"),
                    &format!(
                        "# gnuplot -p {}\n\
                         set datafile separator ','\n\
                         set key autotitle columnhead left top\n\
                         set logscale xy\n\
                         set xlabel 't'\n\
                         plot for [i=2:{}] '{name}' using 1:i with lines\n",
                        path.with_extension("gp").file_name().unwrap_or_default().to_string_lossy(),
                        gamma.dim() + 1
                    ),
                )?;
            }
            Ok(())
        }
        None => Ok(fmt::write_trajectory_csv(std::io::stdout().lock(), &traj)?),
    }
}

/// Estimation output when `(γ*, r)` are supplied rather than estimated.
#[derive(Serialize)]
struct SuppliedEstimate {
    gamma_star: f64,
    r: f64,
    heaps: HeapsFit,
    mle: MleResult,
}

pub fn estimate(a: EstimateArgs) -> Result<(), CliError> {
    let log = load_input(a.input)?;
    let mle = MleOptions {
        symmetric: !a.unsymmetric,
        theta: a.theta.clone(),
        estimate_theta: a.estimate_theta,
        restarts: a.restarts,
        tolerance: a.tolerance,
        seed: a.seed,
    };
    let fit = fit_options(a.t_min, a.n_points, a.series);
    let mut w = create(&a.out.join("estimate.json"))?;
    match (a.gamma_star, a.r) {
        (Some(gamma_star), Some(r)) => {
            let traj = trajectories(&log, &default_sample_times(log.horizon()))?;
            let report = SuppliedEstimate {
                gamma_star,
                r,
                heaps: fit_trajectories(&traj, &fit)?,
                mle: fit_mle(&log, gamma_star, r, &mle)?,
            };
            fmt::write_json(&mut w, &report)?;
        }
        _ => fmt::write_json(&mut w, &pipeline(&log, &fit, &mle)?)?,
    }
    finish(w)
}

pub fn study(a: StudyArgs) -> Result<(), CliError> {
    let rows: Vec<StudyRow> = match &a.rows {
        Some(path) => serde_json::from_reader(open(path)?).map_err(Error::from)?,
        None => REFERENCE_SCENARIOS.to_vec(),
    };
    let options = StudyOptions {
        reps: a.reps,
        horizon: a.steps,
        theta_data: a.theta_data,
        theta_likelihood: a.theta_lik,
        seed: a.seed,
        mode: match a.mode {
            Mode::Pipeline => StudyMode::Pipeline,
            Mode::TrueSpectral => StudyMode::TrueSpectral,
        },
        fit: fit_options(None, 200, a.series),
        restarts: a.restarts,
        tolerance: a.tolerance,
    };
    let results = run_study(&rows, &options)?;
    for r in &results {
        for (k, msg) in &r.failures {
            eprintln!("row {:?}, replication {k} failed: {msg}", r.row);
        }
    }
    let mut w = create(&a.out.join("study.csv"))?;
    write_study_csv(&mut w, &results)?;
    finish(w)?;
    let mut w = create(&a.out.join("study.json"))?;
    fmt::write_json(&mut w, &results)?;
    finish(w)
}

fn write_observations(log: &ObservationLog, out: &Path) -> Result<(), CliError> {
    let mut w = create(&out.join("observations.csv"))?;
    fmt::write_events_csv(&mut w, log)?;
    finish(w)?;
    let mut w = create(&out.join("dictionary.csv"))?;
    fmt::write_dictionary_csv(&mut w, log.dictionary())?;
    finish(w)
}

pub fn tokens(a: TokensArgs) -> Result<(), CliError> {
    let (pa, pb) = (required(a.a, "--a")?, required(a.b, "--b")?);
    let options = TokenizeOptions {
        min_len: a.min_len,
        strip_numbers: !a.keep_numbers,
        stemmer: None,
    };
    let read = |p: &Path| -> Result<Vec<String>, CliError> { Ok(tokenize(&fs::read_to_string(p)?, &options)) };
    let (ta, tb) = rayon::join(|| read(&pa), || read(&pb));
    let (ta, tb) = (ta?, tb?);
    let (ea, eb) = equalize(&ta, &tb, a.seed);
    eprintln!("tokens: {} and {}, paired {}", ta.len(), tb.len(), ea.len());
    let log = pair_streams(&ea, &eb, a.drop_colliding)?;
    write_observations(&log, &a.out)
}

pub fn csv(a: CsvArgs) -> Result<(), CliError> {
    let log = match (&a.input, &a.parallel) {
        (Some(path), None) => load_observations(&InputFormat::Csv(path), a.drop_colliding)?,
        (None, Some(files)) => load_observations(&InputFormat::Parallel(&files[0], &files[1]), a.drop_colliding)?,
        _ => return Err(CliError::Usage("give --input or --parallel".into())),
    };
    write_observations(&log, &a.out)
}
