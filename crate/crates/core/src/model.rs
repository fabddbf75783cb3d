//! Parameters, state and next-draw probabilities of the interacting urn system.
//!
//! Agents are 0-based everywhere inside the library. File formats and the CLI
//! present them 1-based.

use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;
use crate::simulator::DrawEvent;

/// Dense color (item) identifier, assigned in order of first appearance.
pub type ColorId = usize;

/// Tolerance used when checking the invariants of a loaded spec.
pub const SPEC_TOLERANCE: f64 = 1e-12;

/// Normalized model parameters.
///
/// `gamma[(j, h)]` is the triggering strength of agent `j` on agent `h` and
/// `w[(j, h)]` the reinforcement weight of `j`'s draws in `h`'s urn.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpecFile")]
pub struct InteractionSpec {
    theta: Vec<f64>,
    gamma: SquareMatrix,
    w: SquareMatrix,
}

impl InteractionSpec {
    /// Builds a spec and rejects it unless [`validate_spec`] reports nothing.
    pub fn new(theta: Vec<f64>, gamma: SquareMatrix, w: SquareMatrix) -> Result<Self> {
        let spec = Self::from_parts(theta, gamma, w);
        let violations = validate_spec(&spec);
        if violations.is_empty() {
            Ok(spec)
        } else {
            Err(Error::InvalidSpec(violations))
        }
    }

    /// Builds a spec without checking any invariant.
    pub fn from_parts(theta: Vec<f64>, gamma: SquareMatrix, w: SquareMatrix) -> Self {
        Self { theta, gamma, w }
    }

    /// The symmetric two-agent spec with `Γ = [[g11, g12], [g12, g22]]`,
    /// `W = [[1 − w12, w12], [w12, 1 − w12]]` and `θ₁ = θ₂ = theta`.
    pub fn symmetric_pair(g11: f64, g22: f64, g12: f64, w12: f64, theta: f64) -> Result<Self> {
        let gamma = SquareMatrix::from_rows(&[[g11, g12], [g12, g22]])?;
        let w = SquareMatrix::from_rows(&[[1.0 - w12, w12], [w12, 1.0 - w12]])?;
        Self::new(vec![theta, theta], gamma, w)
    }

    pub fn n_agents(&self) -> usize {
        self.theta.len()
    }

    pub fn theta(&self) -> &[f64] {
        &self.theta
    }

    pub fn gamma(&self) -> &SquareMatrix {
        &self.gamma
    }

    pub fn w(&self) -> &SquareMatrix {
        &self.w
    }

    /// `Λ = W − Γ`, the weight left on a color after its creation.
    pub fn lambda(&self) -> SquareMatrix {
        self.w.sub(&self.gamma)
    }

    /// Same model with every `θ_h` replaced by `theta`.
    pub fn with_theta(&self, theta: &[f64]) -> Self {
        Self {
            theta: theta.to_vec(),
            ..self.clone()
        }
    }

    /// Swaps the labels of agents `a` and `b`.
    pub fn relabeled(&self, a: usize, b: usize) -> Self {
        let mut theta = self.theta.clone();
        theta.swap(a, b);
        Self {
            theta,
            gamma: self.gamma.permuted(a, b),
            w: self.w.permuted(a, b),
        }
    }
}

/// On-disk form of a spec: either normalized parameters or raw urn counts.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpecFile {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub theta: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gamma: Option<SquareMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w: Option<SquareMatrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub raw: Option<RawSpec>,
}

impl TryFrom<SpecFile> for InteractionSpec {
    type Error = Error;

    fn try_from(file: SpecFile) -> Result<Self> {
        match file {
            SpecFile {
                theta: Some(theta),
                gamma: Some(gamma),
                w: Some(w),
                raw: None,
            } => Self::new(theta, gamma, w),
            SpecFile {
                theta: None,
                gamma: None,
                w: None,
                raw: Some(raw),
            } => normalize_raw(&raw),
            _ => Err(Error::Domain(
                "spec needs either all of theta, gamma, w or a single raw block".into(),
            )),
        }
    }
}

/// Urn formulation with integer ball counts.
///
/// `rho[j][h]` balls are added to urn `h` per draw of urn `j`; on a novelty
/// `nu[j][h]` of them are fresh colors.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawSpec {
    pub n0: Vec<u64>,
    pub rho: Vec<Vec<u64>>,
    pub nu: Vec<Vec<u64>>,
}

impl RawSpec {
    /// `ρ̂ = ρ − ν`, or `None` where it would be negative.
    pub fn rho_hat(&self) -> Vec<Vec<Option<u64>>> {
        self.rho
            .iter()
            .zip(&self.nu)
            .map(|(r, v)| r.iter().zip(v).map(|(a, b)| a.checked_sub(*b)).collect())
            .collect()
    }

    fn violations(&self) -> Vec<Violation> {
        let n = self.n0.len();
        let mut out = Vec::new();
        if n == 0 {
            out.push(Violation::Empty);
            return out;
        }
        for (what, m) in [("rho", &self.rho), ("nu", &self.nu)] {
            if m.len() != n || m.iter().any(|r| r.len() != n) {
                out.push(Violation::Shape { what, expected: n });
            }
        }
        if !out.is_empty() {
            return out;
        }
        for (h, &n0) in self.n0.iter().enumerate() {
            if n0 == 0 {
                out.push(Violation::RawInitialBalls { agent: h });
            }
            if self.rho[h][h] == 0 {
                out.push(Violation::RawDiagonal { agent: h });
            }
        }
        for (j, row) in self.rho_hat().iter().enumerate() {
            for (h, entry) in row.iter().enumerate() {
                match entry {
                    None => out.push(Violation::RawBalance { row: j, col: h }),
                    Some(0) if j == h => out.push(Violation::DiagonalLambda { agent: h }),
                    _ => {}
                }
            }
        }
        out
    }
}

/// Maps raw urn counts to `θ_h = N₀,h/ρ_h`, `γ = ν/ρ_h`, `w = ρ/ρ_h`.
pub fn normalize_raw(raw: &RawSpec) -> Result<InteractionSpec> {
    let violations = raw.violations();
    if !violations.is_empty() {
        return Err(Error::InvalidSpec(violations));
    }
    let n = raw.n0.len();
    let rho_col: Vec<f64> = (0..n)
        .map(|h| (0..n).map(|j| raw.rho[j][h]).sum::<u64>() as f64)
        .collect();
    let theta = (0..n).map(|h| raw.n0[h] as f64 / rho_col[h]).collect();
    let mut gamma = SquareMatrix::zeros(n);
    let mut w = SquareMatrix::zeros(n);
    for j in 0..n {
        for h in 0..n {
            gamma[(j, h)] = raw.nu[j][h] as f64 / rho_col[h];
            w[(j, h)] = raw.rho[j][h] as f64 / rho_col[h];
        }
    }
    InteractionSpec::new(theta, gamma, w)
}

/// A broken spec invariant. Indices are 0-based; `Display` prints them 1-based.
#[derive(Clone, Debug, PartialEq)]
pub enum Violation {
    Empty,
    Shape { what: &'static str, expected: usize },
    NonPositiveTheta { agent: usize, value: f64 },
    EntryRange { what: &'static str, row: usize, col: usize, value: f64 },
    WColumnSum { col: usize, sum: f64 },
    GammaColumnSum { col: usize, sum: f64 },
    Balance { row: usize, col: usize, gamma: f64, w: f64 },
    DiagonalLambda { agent: usize },
    DiagonalW { agent: usize },
    DiagonalGamma { agent: usize },
    RawInitialBalls { agent: usize },
    RawDiagonal { agent: usize },
    RawBalance { row: usize, col: usize },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Violation::Empty => write!(f, "spec has no agents"),
            Violation::Shape { what, expected } => {
                write!(f, "{what} must be {expected}x{expected}")
            }
            Violation::NonPositiveTheta { agent, value } => {
                write!(f, "theta[{}] = {value} must be positive", agent + 1)
            }
            Violation::EntryRange {
                what,
                row,
                col,
                value,
            } => write!(f, "{what}[{}][{}] = {value} outside [0, 1]", row + 1, col + 1),
            Violation::WColumnSum { col, sum } => {
                write!(f, "column {} of w sums to {sum}, expected 1", col + 1)
            }
            Violation::GammaColumnSum { col, sum } => {
                write!(f, "column {} of gamma sums to {sum}, must be below 1", col + 1)
            }
            Violation::Balance { row, col, gamma, w } => write!(
                f,
                "balance violated at ({}, {}): gamma = {gamma} exceeds w = {w}",
                row + 1,
                col + 1
            ),
            Violation::DiagonalLambda { agent } => write!(
                f,
                "lambda[{0}][{0}] = w - gamma must be positive",
                agent + 1
            ),
            Violation::DiagonalW { agent } => {
                write!(f, "w[{0}][{0}] must be positive", agent + 1)
            }
            Violation::DiagonalGamma { agent } => {
                write!(f, "gamma[{0}][{0}] must be below 1", agent + 1)
            }
            Violation::RawInitialBalls { agent } => {
                write!(f, "n0[{}] must be positive", agent + 1)
            }
            Violation::RawDiagonal { agent } => {
                write!(f, "rho[{0}][{0}] must be positive", agent + 1)
            }
            Violation::RawBalance { row, col } => {
                write!(f, "nu[{0}][{1}] exceeds rho[{0}][{1}]", row + 1, col + 1)
            }
        }
    }
}

/// Lists every broken invariant of `spec`; empty means valid.
pub fn validate_spec(spec: &InteractionSpec) -> Vec<Violation> {
    let n = spec.theta.len();
    let mut out = Vec::new();
    if n == 0 {
        out.push(Violation::Empty);
        return out;
    }
    for (what, m) in [("gamma", &spec.gamma), ("w", &spec.w)] {
        if m.dim() != n {
            out.push(Violation::Shape { what, expected: n });
        }
    }
    if !out.is_empty() {
        return out;
    }
    for (h, &th) in spec.theta.iter().enumerate() {
        if !(th > 0.0 && th.is_finite()) {
            out.push(Violation::NonPositiveTheta {
                agent: h,
                value: th,
            });
        }
    }
    for (what, m) in [("gamma", &spec.gamma), ("w", &spec.w)] {
        for j in 0..n {
            for h in 0..n {
                let value = m[(j, h)];
                if !(0.0..=1.0).contains(&value) {
                    out.push(Violation::EntryRange {
                        what,
                        row: j,
                        col: h,
                        value,
                    });
                }
            }
        }
    }
    for (h, sum) in spec.w.column_sums().into_iter().enumerate() {
        if (sum - 1.0).abs() > SPEC_TOLERANCE {
            out.push(Violation::WColumnSum { col: h, sum });
        }
    }
    for (h, sum) in spec.gamma.column_sums().into_iter().enumerate() {
        if sum >= 1.0 {
            out.push(Violation::GammaColumnSum { col: h, sum });
        }
    }
    for j in 0..n {
        for h in 0..n {
            let (gamma, w) = (spec.gamma[(j, h)], spec.w[(j, h)]);
            if gamma - w > SPEC_TOLERANCE {
                out.push(Violation::Balance {
                    row: j,
                    col: h,
                    gamma,
                    w,
                });
            }
        }
    }
    for h in 0..n {
        let (gamma, w) = (spec.gamma[(h, h)], spec.w[(h, h)]);
        if w <= 0.0 {
            out.push(Violation::DiagonalW { agent: h });
        }
        if gamma >= 1.0 {
            out.push(Violation::DiagonalGamma { agent: h });
        }
        if w - gamma <= 0.0 {
            out.push(Violation::DiagonalLambda { agent: h });
        }
    }
    out
}

/// Snapshot of one color.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColorRecord {
    pub color_id: ColorId,
    /// Agent that drew the color first.
    pub producer: usize,
    /// `counts[j]` = number of times agent `j` has drawn the color.
    pub counts: Vec<u32>,
    pub first_time: u64,
}

/// Outcome of one agent's draw before it is applied.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Draw {
    New,
    Old(ColorId),
}

/// Full state of the system after `t` steps.
#[derive(Clone, Debug)]
pub struct SystemState {
    spec: Arc<InteractionSpec>,
    t: u64,
    producers: Vec<u32>,
    first_time: Vec<u64>,
    /// Flat `[color * n + agent]` draw counts.
    counts: Vec<u32>,
    d_star: Vec<u64>,
    d: Vec<u64>,
}

impl SystemState {
    pub fn new(spec: Arc<InteractionSpec>) -> Self {
        let n = spec.n_agents();
        Self {
            spec,
            t: 0,
            producers: Vec::new(),
            first_time: Vec::new(),
            counts: Vec::new(),
            d_star: vec![0; n],
            d: vec![0; n],
        }
    }

    pub fn spec(&self) -> &InteractionSpec {
        &self.spec
    }

    pub fn spec_arc(&self) -> &Arc<InteractionSpec> {
        &self.spec
    }

    pub fn n_agents(&self) -> usize {
        self.d_star.len()
    }

    pub fn t(&self) -> u64 {
        self.t
    }

    pub fn n_colors(&self) -> usize {
        self.producers.len()
    }

    /// `D*_{t,h}`: novelties produced by each agent.
    pub fn d_star(&self) -> &[u64] {
        &self.d_star
    }

    /// `D_{t,h}`: distinct colors adopted by each agent.
    pub fn d(&self) -> &[u64] {
        &self.d
    }

    /// `D*_t`: distinct colors in the system.
    pub fn d_star_total(&self) -> u64 {
        self.n_colors() as u64
    }

    pub fn producer(&self, c: ColorId) -> Result<usize> {
        self.producers
            .get(c)
            .map(|&p| p as usize)
            .ok_or(Error::UnknownColor(c))
    }

    pub fn counts(&self, c: ColorId) -> Result<&[u32]> {
        let n = self.n_agents();
        if c >= self.n_colors() {
            return Err(Error::UnknownColor(c));
        }
        Ok(&self.counts[c * n..(c + 1) * n])
    }

    pub fn color(&self, c: ColorId) -> Result<ColorRecord> {
        Ok(ColorRecord {
            color_id: c,
            producer: self.producer(c)?,
            counts: self.counts(c)?.to_vec(),
            first_time: self.first_time[c],
        })
    }

    pub fn colors(&self) -> impl Iterator<Item = ColorRecord> + '_ {
        (0..self.n_colors()).map(|c| self.color(c).expect("color in range"))
    }

    /// `θ_h + t`, the common denominator of agent `h`'s next-draw probabilities.
    pub fn denominator(&self, h: usize) -> f64 {
        self.spec.theta[h] + self.t as f64
    }

    /// `θ_h + Σ_j γ_{j,h} D*_{t,j}`.
    pub fn birth_mass(&self, h: usize) -> f64 {
        let gamma = &self.spec.gamma;
        self.spec.theta[h]
            + self
                .d_star
                .iter()
                .enumerate()
                .map(|(j, &d)| gamma[(j, h)] * d as f64)
                .sum::<f64>()
    }

    /// Probability that agent `h`'s next draw is a novelty for the system.
    pub fn birth_probability(&self, h: usize) -> f64 {
        self.birth_mass(h) / self.denominator(h)
    }

    /// `Σ_j w_{j,h} K_t(j,c) − γ_{j*(c),h}`.
    pub fn old_color_weight(&self, h: usize, c: ColorId) -> Result<f64> {
        let counts = self.counts(c)?;
        let producer = self.producers[c] as usize;
        let w = &self.spec.w;
        let reinforced: f64 = counts
            .iter()
            .enumerate()
            .map(|(j, &k)| w[(j, h)] * k as f64)
            .sum();
        Ok(reinforced - self.spec.gamma[(producer, h)])
    }

    /// Probability that agent `h` next draws the already-seen color `c`.
    pub fn old_color_probability(&self, h: usize, c: ColorId) -> Result<f64> {
        Ok(self.old_color_weight(h, c)? / self.denominator(h))
    }

    /// Applies one simultaneous step; `draws[h]` is agent `h`'s outcome
    /// resolved against the current state. Novelties get fresh ids in agent
    /// order.
    pub fn apply(&mut self, draws: &[Draw]) -> Result<Vec<DrawEvent>> {
        let n = self.n_agents();
        if draws.len() != n {
            return Err(Error::Domain(format!(
                "step needs {n} draws, got {}",
                draws.len()
            )));
        }
        for d in draws {
            if let Draw::Old(c) = *d {
                if c >= self.n_colors() {
                    return Err(Error::UnknownColor(c));
                }
            }
        }
        let t = self.t + 1;
        let mut events = Vec::with_capacity(n);
        // New-for-agent flags refer to the pre-step state.
        for (h, draw) in draws.iter().enumerate() {
            let event = match *draw {
                Draw::New => {
                    let c = self.n_colors();
                    self.producers.push(h as u32);
                    self.first_time.push(t);
                    self.counts.extend(std::iter::repeat(0).take(n));
                    self.d_star[h] += 1;
                    DrawEvent {
                        t,
                        agent: h,
                        color: c,
                        new_system: true,
                        new_agent: true,
                    }
                }
                Draw::Old(c) => DrawEvent {
                    t,
                    agent: h,
                    color: c,
                    new_system: false,
                    new_agent: self.counts[c * n + h] == 0,
                },
            };
            events.push(event);
        }
        for e in &events {
            let k = &mut self.counts[e.color * n + e.agent];
            if *k == 0 {
                self.d[e.agent] += 1;
            }
            *k += 1;
        }
        self.t = t;
        Ok(events)
    }
}
