//! Repeated simulate-and-estimate experiments over symmetric two-agent specs.

use std::io::Write;

use rayon::prelude::*;
use serde::Serialize;

use super::likelihood::LikelihoodData;
use super::mle::{fit_mle_data, MleOptions};
use super::pipeline::{heaps_step, pipeline};
use crate::error::{Error, Result};
use crate::model::InteractionSpec;
use crate::simulator::{run, substream_seed};
use crate::spectral::leading_eigen;
use crate::stats::FitOptions;

/// A symmetric generating spec `Γ = [[g11, g12], [g12, g22]]`,
/// `W = [[1 − w12, w12], [w12, 1 − w12]]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, serde::Deserialize)]
pub struct StudyRow {
    pub g11: f64,
    pub g22: f64,
    pub g12: f64,
    pub w12: f64,
}

impl StudyRow {
    pub const fn new(g11: f64, g22: f64, g12: f64, w12: f64) -> Self {
        Self { g11, g22, g12, w12 }
    }

    pub fn spec(&self, theta: f64) -> Result<InteractionSpec> {
        InteractionSpec::symmetric_pair(self.g11, self.g22, self.g12, self.w12, theta)
    }
}

/// The ten symmetric scenarios of the reference simulation study.
pub const REFERENCE_SCENARIOS: [StudyRow; 10] = [
    StudyRow::new(0.10, 0.40, 0.10, 0.50),
    StudyRow::new(0.10, 0.40, 0.10, 0.25),
    StudyRow::new(0.25, 0.40, 0.10, 0.50),
    StudyRow::new(0.25, 0.40, 0.10, 0.25),
    StudyRow::new(0.10, 0.40, 0.25, 0.50),
    StudyRow::new(0.10, 0.40, 0.25, 0.25),
    StudyRow::new(0.25, 0.40, 0.25, 0.50),
    StudyRow::new(0.25, 0.40, 0.25, 0.25),
    StudyRow::new(0.10, 0.40, 0.40, 0.50),
    StudyRow::new(0.25, 0.40, 0.40, 0.50),
];

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StudyMode {
    /// Estimate `(γ*, r)` from the data, then fit.
    #[default]
    Pipeline,
    /// Fit with the generating spec's `(γ*, r)`.
    TrueSpectral,
}

#[derive(Clone, Debug, PartialEq)]
pub struct StudyOptions {
    pub reps: usize,
    pub horizon: u64,
    pub theta_data: f64,
    pub theta_likelihood: f64,
    pub seed: u64,
    pub mode: StudyMode,
    pub fit: FitOptions,
    pub restarts: usize,
    pub tolerance: f64,
}

impl Default for StudyOptions {
    fn default() -> Self {
        Self {
            reps: 100,
            horizon: 10_000,
            theta_data: 1.0,
            theta_likelihood: 1.0,
            seed: 0,
            mode: StudyMode::Pipeline,
            fit: FitOptions::default(),
            restarts: 8,
            tolerance: 1e-6,
        }
    }
}

/// Mean and sample standard deviation; `sd` needs two values.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Summary {
    pub mean: Option<f64>,
    pub sd: Option<f64>,
}

impl Summary {
    pub fn of(xs: &[f64]) -> Self {
        let n = xs.len();
        if n == 0 {
            return Self { mean: None, sd: None };
        }
        let mean = xs.iter().sum::<f64>() / n as f64;
        let sd = (n > 1).then(|| {
            (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64).sqrt()
        });
        Self {
            mean: Some(mean),
            sd,
        }
    }
}

/// Estimates from one replication, in the generating labels.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Replicate {
    pub g11: f64,
    pub g22: f64,
    pub g12: f64,
    pub w12: f64,
    pub gamma_star_hat: f64,
    pub r_hat: f64,
    pub converged: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StudyRowResult {
    pub row: StudyRow,
    pub gamma_star: f64,
    /// `u₁/u₂` of the generating `Γ`.
    pub r: f64,
    pub g11_hat: Summary,
    pub g22_hat: Summary,
    pub g12_hat: Summary,
    pub w12_hat: Summary,
    pub gamma_star_hat: Summary,
    pub r_hat: Summary,
    pub n_ok: usize,
    pub n_failed: usize,
    pub n_unconverged: usize,
    pub replicates: Vec<Replicate>,
    /// Error message of each failed replication, by index.
    pub failures: Vec<(usize, String)>,
}

fn replicate(row: &StudyRow, options: &StudyOptions, seed: u64, truth: (f64, f64)) -> Result<Replicate> {
    let log = run(&row.spec(options.theta_data)?, options.horizon, seed)?;
    let mle = MleOptions {
        symmetric: true,
        theta: vec![options.theta_likelihood; 2],
        estimate_theta: false,
        restarts: options.restarts,
        tolerance: options.tolerance,
        seed,
    };
    let (fit, gamma_star_hat, r_hat) = match options.mode {
        StudyMode::Pipeline => {
            let p = pipeline(&log, &options.fit, &mle)?;
            (p.mle, p.gamma_star_hat, p.r_hat)
        }
        StudyMode::TrueSpectral => {
            let heaps = heaps_step(&log, &options.fit)?;
            let data = LikelihoodData::from_events(&log)?;
            let fit = fit_mle_data(&data, truth.0, truth.1, &mle)?;
            (fit, heaps.slope, 10f64.powf(heaps.u_hat.unwrap_or(0.0)))
        }
    };
    Ok(Replicate {
        g11: fit.entries.g11,
        g22: fit.entries.g22,
        g12: fit.entries.g12,
        w12: fit.entries.w12,
        gamma_star_hat,
        r_hat,
        converged: fit.converged,
    })
}

/// Runs `options.reps` replications of every row. Replication `k` of row
/// `i` uses seed `substream_seed(substream_seed(seed, i), k)` for both the
/// simulation and the restart grid, so results do not depend on scheduling.
pub fn run_study(rows: &[StudyRow], options: &StudyOptions) -> Result<Vec<StudyRowResult>> {
    if options.reps == 0 || options.horizon < 2 {
        return Err(Error::Domain("a study needs reps >= 1 and horizon >= 2".into()));
    }
    let truths = rows
        .iter()
        .map(|row| {
            let s = leading_eigen(row.spec(options.theta_data)?.gamma())?;
            if s.ratio(0, 1) > 1.0 {
                return Err(Error::Domain(format!(
                    "row {row:?} has u1/u2 = {} > 1; put the more central agent second",
                    s.ratio(0, 1)
                )));
            }
            Ok((s.gamma_star, s.ratio(0, 1)))
        })
        .collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(usize, usize)> = (0..rows.len())
        .flat_map(|i| (0..options.reps).map(move |k| (i, k)))
        .collect();
    let outcomes: Vec<Result<Replicate>> = jobs
        .par_iter()
        .map(|&(i, k)| {
            let seed = substream_seed(substream_seed(options.seed, i as u64), k as u64);
            replicate(&rows[i], options, seed, truths[i])
        })
        .collect();

    let mut results = Vec::with_capacity(rows.len());
    let mut outcomes = outcomes.into_iter();
    for (row, &(gamma_star, r)) in rows.iter().zip(&truths) {
        let mut replicates = Vec::new();
        let mut failures = Vec::new();
        for (k, outcome) in outcomes.by_ref().take(options.reps).enumerate() {
            match outcome {
                Ok(rep) => replicates.push(rep),
                Err(e) => failures.push((k, e.to_string())),
            }
        }
        let column = |f: fn(&Replicate) -> f64| Summary::of(&replicates.iter().map(f).collect::<Vec<_>>());
        results.push(StudyRowResult {
            row: *row,
            gamma_star,
            r,
            g11_hat: column(|x| x.g11),
            g22_hat: column(|x| x.g22),
            g12_hat: column(|x| x.g12),
            w12_hat: column(|x| x.w12),
            gamma_star_hat: column(|x| x.gamma_star_hat),
            r_hat: column(|x| x.r_hat),
            n_ok: replicates.len(),
            n_failed: failures.len(),
            n_unconverged: replicates.iter().filter(|x| !x.converged).count(),
            replicates,
            failures,
        });
    }
    Ok(results)
}

pub const STUDY_CSV_HEADER: [&str; 20] = [
    "g11",
    "g22",
    "g12",
    "w12",
    "g11_hat_mean",
    "g11_hat_sd",
    "g22_hat_mean",
    "g22_hat_sd",
    "g12_hat_mean",
    "g12_hat_sd",
    "w12_hat_mean",
    "w12_hat_sd",
    "gstar",
    "r",
    "gstar_hat_mean",
    "gstar_hat_sd",
    "r_hat_mean",
    "r_hat_sd",
    "n_ok",
    "n_failed",
];

/// One line per row; undefined summaries are empty fields.
pub fn write_study_csv<W: Write>(out: W, results: &[StudyRowResult]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(STUDY_CSV_HEADER)?;
    let opt = |x: Option<f64>| x.map_or_else(String::new, |v| v.to_string());
    for res in results {
        let mut rec = vec![
            res.row.g11.to_string(),
            res.row.g22.to_string(),
            res.row.g12.to_string(),
            res.row.w12.to_string(),
        ];
        for s in [res.g11_hat, res.g22_hat, res.g12_hat, res.w12_hat] {
            rec.push(opt(s.mean));
            rec.push(opt(s.sd));
        }
        rec.push(res.gamma_star.to_string());
        rec.push(res.r.to_string());
        for s in [res.gamma_star_hat, res.r_hat] {
            rec.push(opt(s.mean));
            rec.push(opt(s.sd));
        }
        rec.push(res.n_ok.to_string());
        rec.push(res.n_failed.to_string());
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_of_one_value_has_no_sd() {
        assert_eq!(Summary::of(&[0.3]), Summary { mean: Some(0.3), sd: None });
        let s = Summary::of(&[1.0, 2.0, 3.0]);
        assert_eq!(s.mean, Some(2.0));
        assert!((s.sd.unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn reference_scenarios_are_valid_and_ordered() {
        for row in REFERENCE_SCENARIOS {
            let spec = row.spec(1.0).unwrap();
            assert!(leading_eigen(spec.gamma()).unwrap().ratio(0, 1) <= 1.0);
        }
    }

    #[test]
    fn single_rep_study_is_deterministic() {
        let options = StudyOptions {
            reps: 1,
            horizon: 2_000,
            restarts: 2,
            tolerance: 1e-4,
            seed: 5,
            ..StudyOptions::default()
        };
        let rows = [REFERENCE_SCENARIOS[0]];
        let a = run_study(&rows, &options).unwrap();
        assert_eq!(a, run_study(&rows, &options).unwrap());
        let res = &a[0];
        assert_eq!(res.n_ok + res.n_failed, 1);
        if res.n_ok == 1 {
            assert_eq!(res.g11_hat.mean, Some(res.replicates[0].g11));
            assert_eq!(res.g11_hat.sd, None);
        }
        let mut buf = Vec::new();
        write_study_csv(&mut buf, &a).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("g11,g22,g12,w12,g11_hat_mean,g11_hat_sd,"));
        assert_eq!(text.lines().count(), 2);
    }
}
