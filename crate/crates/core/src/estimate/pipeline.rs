//! End-to-end estimation from a two-agent observation log.
//!
//! 1. `γ̂*` is the common slope of the Heaps fit.
//! 2. `r̂ = 10^û` from the intercept gap of the two novelty series. The
//!    families need `r ≤ 1`, so when `û > 0` the agents are swapped for the
//!    fit and the estimates are swapped back afterwards.
//! 3. and 4. The family with `(γ̂*, r̂)` is fitted by maximum likelihood.

use serde::Serialize;

use super::likelihood::LikelihoodData;
use super::mle::{fit_mle_data, MleOptions, MleResult};
use crate::error::{Error, Result};
use crate::ingest::ObservationLog;
use crate::stats::{default_sample_times, fit_trajectories, trajectories, EventSource, FitOptions, HeapsFit};

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PipelineResult {
    pub gamma_star_hat: f64,
    pub u_hat: f64,
    /// `10^û`, in the input's agent labels (may exceed 1).
    pub r_hat: f64,
    /// `min(r̂, 1/r̂)`, the ratio the family was fitted with.
    pub family_r: f64,
    /// Whether the agents were swapped for the fit.
    pub relabeled: bool,
    pub heaps: HeapsFit,
    /// Estimates in the input's agent labels.
    pub mle: MleResult,
}

pub fn heaps_step<S: EventSource + ?Sized>(observations: &S, fit: &FitOptions) -> Result<HeapsFit> {
    let times = default_sample_times(observations.horizon());
    fit_trajectories(&trajectories(observations, &times)?, fit)
}

pub fn pipeline<S: EventSource + ?Sized>(
    observations: &S,
    fit: &FitOptions,
    mle: &MleOptions,
) -> Result<PipelineResult> {
    if observations.n_agents() != 2 {
        return Err(Error::Domain(format!(
            "the pipeline needs exactly 2 agents, got {}",
            observations.n_agents()
        )));
    }
    let heaps = heaps_step(observations, fit)?;
    let gamma_star_hat = heaps.slope;
    let u_hat = heaps.u_hat.expect("two agents give u_hat");
    if !(gamma_star_hat > 0.0 && gamma_star_hat < 1.0) {
        return Err(Error::Domain(format!(
            "estimated gamma* = {gamma_star_hat} is outside (0, 1)"
        )));
    }
    let r_hat = 10f64.powf(u_hat);
    let relabeled = u_hat > 0.0;
    let (data, family_r, options) = if relabeled {
        let swapped = ObservationLog::from_source(observations)?.swapped(0, 1)?;
        let mut options = mle.clone();
        options.theta.swap(0, 1);
        (LikelihoodData::from_events(&swapped)?, 1.0 / r_hat, options)
    } else {
        (LikelihoodData::from_events(observations)?, r_hat, mle.clone())
    };
    let fitted = fit_mle_data(&data, gamma_star_hat, family_r, &options)?;
    Ok(PipelineResult {
        gamma_star_hat,
        u_hat,
        r_hat,
        family_r,
        relabeled,
        heaps,
        mle: if relabeled { fitted.relabeled() } else { fitted },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::InteractionSpec;
    use crate::simulator::run;

    #[test]
    fn swapping_labels_is_covariant() {
        let spec = InteractionSpec::symmetric_pair(0.10, 0.40, 0.10, 0.50, 1.0).unwrap();
        let log = run(&spec, 3_000, 11).unwrap();
        let opts = MleOptions {
            restarts: 2,
            tolerance: 1e-4,
            ..MleOptions::default()
        };
        let a = pipeline(&log, &FitOptions::default(), &opts).unwrap();
        let swapped = ObservationLog::from_source(&log).unwrap().swapped(0, 1).unwrap();
        let b = pipeline(&swapped, &FitOptions::default(), &opts).unwrap();
        assert!((a.u_hat + b.u_hat).abs() < 1e-9);
        assert!((a.r_hat * b.r_hat - 1.0).abs() < 1e-9);
        assert!((a.gamma_star_hat - b.gamma_star_hat).abs() < 1e-9);
        assert_ne!(a.relabeled, b.relabeled);
        let back = b.mle.relabeled();
        assert!(back.gamma_hat.max_abs_diff(&a.mle.gamma_hat) < 1e-9);
        assert!(back.w_hat.max_abs_diff(&a.mle.w_hat) < 1e-9);
    }
}
