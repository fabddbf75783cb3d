//! Maximum-likelihood fit of the two-agent families with `(γ*, r)` held fixed.

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::Serialize;

use super::family::{FamilyParams, SymmetricFamily};
use super::likelihood::LikelihoodData;
use super::nelder_mead::NelderMead;
use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;
use crate::model::InteractionSpec;
use crate::simulator::rng_for;
use crate::stats::EventSource;

/// Objective value for parameter points under which the data are impossible.
pub const IMPOSSIBLE_PENALTY: f64 = -1e12;

/// Distance kept from open interval ends.
const EDGE: f64 = 1e-9;

/// Search range of `ln θ` when `θ` is estimated.
const LN_THETA_RANGE: (f64, f64) = (-4.605_170_185_988_091, 6.907_755_278_982_137);

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MleOptions {
    /// Constrain `Γ` and `W` to be symmetric (free parameters `x₁`, `y₁`).
    pub symmetric: bool,
    /// Fixed `θ`, or the starting point when `estimate_theta` is set.
    pub theta: Vec<f64>,
    /// Also estimate `θ₁, θ₂` (experimental).
    pub estimate_theta: bool,
    pub restarts: usize,
    /// Simplex diameter at convergence, in unit-box coordinates.
    pub tolerance: f64,
    /// Seed of the Latin-grid permutation of restart points.
    pub seed: u64,
}

impl Default for MleOptions {
    fn default() -> Self {
        Self {
            symmetric: true,
            theta: vec![1.0, 1.0],
            estimate_theta: false,
            restarts: 8,
            tolerance: 1e-6,
            seed: 0,
        }
    }
}

/// The four numbers that pin down a symmetric pair, plus the two that
/// differ when the fit is unconstrained.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MatrixEntries {
    pub g11: f64,
    pub g12: f64,
    pub g22: f64,
    pub w12: f64,
    pub g21: f64,
    pub w21: f64,
}

impl MatrixEntries {
    pub fn of(gamma: &SquareMatrix, w: &SquareMatrix) -> Self {
        Self {
            g11: gamma[(0, 0)],
            g12: gamma[(0, 1)],
            g22: gamma[(1, 1)],
            w12: w[(0, 1)],
            g21: gamma[(1, 0)],
            w21: w[(1, 0)],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MleResult {
    pub params: FamilyParams,
    pub theta: Vec<f64>,
    pub gamma_hat: SquareMatrix,
    pub w_hat: SquareMatrix,
    pub entries: MatrixEntries,
    /// Exact log-likelihood at the returned point (`-inf` serializes as null).
    pub log_likelihood: f64,
    pub converged: bool,
    pub n_restarts_used: usize,
}

impl MleResult {
    /// Same fit with agents 1 and 2 swapped in the reported matrices.
    pub fn relabeled(&self) -> Self {
        let gamma_hat = self.gamma_hat.permuted(0, 1);
        let w_hat = self.w_hat.permuted(0, 1);
        let mut theta = self.theta.clone();
        theta.swap(0, 1);
        Self {
            entries: MatrixEntries::of(&gamma_hat, &w_hat),
            gamma_hat,
            w_hat,
            theta,
            ..self.clone()
        }
    }
}

/// Maps unit-box coordinates to family parameters and `θ`.
struct Parametrization {
    gamma_star: f64,
    r: f64,
    symmetric: Option<SymmetricFamily>,
    theta: Vec<f64>,
    estimate_theta: bool,
}

impl Parametrization {
    fn dim(&self) -> usize {
        let base = if self.symmetric.is_some() { 2 } else { 4 };
        base + if self.estimate_theta { 2 } else { 0 }
    }

    fn decode(&self, z: &[f64]) -> Result<(FamilyParams, Vec<f64>)> {
        let open = |a: f64, max: f64| EDGE + a.clamp(0.0, 1.0) * (max - 2.0 * EDGE);
        let half_open = |b: f64, max: f64| b.clamp(0.0, 1.0) * max * (1.0 - EDGE);
        let (params, rest) = match &self.symmetric {
            Some(fam) => {
                let x1 = open(z[0], fam.x1_max());
                let y1 = half_open(z[1], fam.y1_max(x1)?);
                (fam.params(x1, y1)?, &z[2..])
            }
            None => (
                FamilyParams {
                    gamma_star: self.gamma_star,
                    r: self.r,
                    x1: open(z[0], 1.0),
                    x2: open(z[1], 1.0),
                    y1: half_open(z[2], 1.0),
                    y2: half_open(z[3], 1.0),
                },
                &z[4..],
            ),
        };
        let theta = if self.estimate_theta {
            let (lo, hi) = LN_THETA_RANGE;
            rest.iter().map(|a| (lo + a * (hi - lo)).exp()).collect()
        } else {
            self.theta.clone()
        };
        Ok((params, theta))
    }

    fn spec(&self, z: &[f64]) -> Result<(FamilyParams, InteractionSpec)> {
        let (params, theta) = self.decode(z)?;
        let spec = InteractionSpec::from_parts(theta, params.gamma()?, params.w()?);
        Ok((params, spec))
    }

    fn start_theta(&self) -> Vec<f64> {
        let (lo, hi) = LN_THETA_RANGE;
        self.theta
            .iter()
            .map(|t| ((t.ln() - lo) / (hi - lo)).clamp(0.0, 1.0))
            .collect()
    }
}

/// Restart points: a Latin grid of the unit box with one seeded permutation
/// per coordinate (the first coordinate in order).
fn latin_grid(restarts: usize, dim: usize, seed: u64) -> Vec<Vec<f64>> {
    let mut rng = rng_for(seed);
    let perms: Vec<Vec<usize>> = (0..dim)
        .map(|i| {
            let mut p: Vec<usize> = (0..restarts).collect();
            if i > 0 {
                p.shuffle(&mut rng);
            }
            p
        })
        .collect();
    (0..restarts)
        .map(|k| {
            (0..dim)
                .map(|i| (perms[i][k] as f64 + 0.5) / restarts as f64)
                .collect()
        })
        .collect()
}

/// Fits the family with leading eigenvalue `gamma_star` and eigenvector ratio
/// `r` to the observations.
pub fn fit_mle<S: EventSource + ?Sized>(
    observations: &S,
    gamma_star: f64,
    r: f64,
    options: &MleOptions,
) -> Result<MleResult> {
    fit_mle_data(&LikelihoodData::from_events(observations)?, gamma_star, r, options)
}

pub fn fit_mle_data(
    data: &LikelihoodData,
    gamma_star: f64,
    r: f64,
    options: &MleOptions,
) -> Result<MleResult> {
    if data.n_agents() != 2 {
        return Err(Error::Domain(format!(
            "the parametric families need exactly 2 agents, got {}",
            data.n_agents()
        )));
    }
    if options.theta.len() != 2 || options.theta.iter().any(|&t| !(t > 0.0)) {
        return Err(Error::Domain("theta must hold two positive values".into()));
    }
    if options.restarts == 0 {
        return Err(Error::Domain("need at least one restart".into()));
    }
    let family = SymmetricFamily::new(gamma_star, r)?;
    let param = Parametrization {
        gamma_star,
        r,
        symmetric: options.symmetric.then_some(family),
        theta: options.theta.clone(),
        estimate_theta: options.estimate_theta,
    };
    let fixed_denominator = (!options.estimate_theta).then(|| data.log_denominator(&options.theta));
    let objective = |z: &[f64]| -> f64 {
        let Ok((_, spec)) = param.spec(z) else {
            return -IMPOSSIBLE_PENALTY;
        };
        let denominator = fixed_denominator.unwrap_or_else(|| data.log_denominator(spec.theta()));
        match data.log_numerator(&spec) {
            Ok(num) => -(num - denominator),
            Err(_) => -IMPOSSIBLE_PENALTY,
        }
    };

    let dim = param.dim();
    let base_dim = dim - if options.estimate_theta { 2 } else { 0 };
    let mut starts = latin_grid(options.restarts, base_dim, options.seed);
    if options.estimate_theta {
        let theta0 = param.start_theta();
        starts.iter_mut().for_each(|s| s.extend_from_slice(&theta0));
    }
    let optimizer = NelderMead {
        tolerance: options.tolerance,
        ..NelderMead::default()
    };
    let (lower, upper) = (vec![0.0; dim], vec![1.0; dim]);
    let minima: Vec<_> = starts
        .par_iter()
        .map(|x0| optimizer.minimize(objective, x0, &lower, &upper))
        .collect();

    let converged = minima.iter().any(|m| m.converged);
    let best = minima
        .into_iter()
        .min_by(|a, b| a.value.total_cmp(&b.value))
        .expect("at least one restart");
    let (params, theta) = param.decode(&best.x)?;
    let gamma_hat = params.gamma()?;
    let w_hat = params.w()?;
    let spec = InteractionSpec::from_parts(theta.clone(), gamma_hat.clone(), w_hat.clone());
    let log_likelihood = data.log_likelihood(&spec).unwrap_or(f64::NEG_INFINITY);
    Ok(MleResult {
        params,
        theta,
        entries: MatrixEntries::of(&gamma_hat, &w_hat),
        gamma_hat,
        w_hat,
        log_likelihood,
        converged,
        n_restarts_used: options.restarts,
    })
}
