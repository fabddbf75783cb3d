//! Exact log-likelihood of an observed event stream.
//!
//! The likelihood only depends on the observations through, for every draw,
//! the counts the draw's probability reads: `D*_t` for a novelty, `K_t(·,c)`
//! and `j*(c)` for a repeat. [`LikelihoodData`] extracts those once so a
//! candidate spec is scored in a single pass without replaying the state.

use crate::error::{Error, Result};
use crate::model::InteractionSpec;
use crate::stats::{check_layout, EventSource};

/// Sufficient statistics of an observation log.
#[derive(Clone, Debug)]
pub struct LikelihoodData {
    n_agents: usize,
    /// State time `t` (draw happens at `t + 1`).
    time: Vec<u32>,
    agent: Vec<u16>,
    /// Producer of the drawn color, or `u16::MAX` for a novelty.
    producer: Vec<u16>,
    /// Flat `[event * n + j]`: `D*_{t,j}` for novelties, `K_t(j,c)` otherwise.
    counts: Vec<f64>,
    /// For error reporting: `(t + 1, item label)` of each draw.
    labels: Vec<(u64, usize)>,
    item_labels: Vec<String>,
}

const NOVELTY: u16 = u16::MAX;

impl LikelihoodData {
    pub fn from_events<S: EventSource + ?Sized>(log: &S) -> Result<Self> {
        let n = log.n_agents();
        let events = log.events();
        check_layout(events, n)?;
        if n >= NOVELTY as usize {
            return Err(Error::Domain(format!("too many agents ({n})")));
        }
        let mut data = Self {
            n_agents: n,
            time: Vec::with_capacity(events.len()),
            agent: Vec::with_capacity(events.len()),
            producer: Vec::with_capacity(events.len()),
            counts: Vec::with_capacity(events.len() * n),
            labels: Vec::with_capacity(events.len()),
            item_labels: Vec::new(),
        };
        let mut d_star = vec![0u32; n];
        let mut producers: Vec<u16> = Vec::new();
        let mut k: Vec<u32> = Vec::new();
        for (i, step) in events.chunks_exact(n).enumerate() {
            let mut next_id = producers.len();
            for e in step {
                data.time.push(i as u32);
                data.agent.push(e.agent as u16);
                data.labels.push((e.t, e.color));
                if e.new_system {
                    if e.color != next_id {
                        return Err(Error::Malformed {
                            line: i * n + e.agent + 2,
                            message: format!(
                                "novel item id {} out of first-appearance order",
                                e.color
                            ),
                        });
                    }
                    next_id += 1;
                    data.producer.push(NOVELTY);
                    data.counts.extend(d_star.iter().map(|&x| x as f64));
                } else {
                    let p = *producers.get(e.color).ok_or_else(|| Error::Malformed {
                        line: i * n + e.agent + 2,
                        message: format!("item {} repeated before it appeared", e.color),
                    })?;
                    data.producer.push(p);
                    data.counts
                        .extend(k[e.color * n..(e.color + 1) * n].iter().map(|&x| x as f64));
                }
            }
            // Apply the whole step only after reading it: draws are simultaneous.
            for e in step {
                if e.new_system {
                    producers.push(e.agent as u16);
                    k.extend(std::iter::repeat(0).take(n));
                    d_star[e.agent] += 1;
                }
            }
            for e in step {
                k[e.color * n + e.agent] += 1;
            }
        }
        let max_color = producers.len();
        data.item_labels = (0..max_color).map(|c| log.item_label(c)).collect();
        Ok(data)
    }

    pub fn n_agents(&self) -> usize {
        self.n_agents
    }

    pub fn n_events(&self) -> usize {
        self.time.len()
    }

    /// `Σ log(θ_h + t)` over all draws.
    pub fn log_denominator(&self, theta: &[f64]) -> f64 {
        self.time
            .iter()
            .zip(&self.agent)
            .map(|(&t, &h)| (theta[h as usize] + t as f64).ln())
            .sum()
    }

    /// `Σ log(numerator)` over all draws, or the index of the first draw
    /// whose numerator is not positive.
    pub fn log_numerator(&self, spec: &InteractionSpec) -> std::result::Result<f64, usize> {
        let n = self.n_agents;
        let (theta, gamma, w) = (spec.theta(), spec.gamma(), spec.w());
        let mut sum = 0.0;
        for (i, (&h, &p)) in self.agent.iter().zip(&self.producer).enumerate() {
            let h = h as usize;
            let c = &self.counts[i * n..(i + 1) * n];
            let num = if p == NOVELTY {
                theta[h] + (0..n).map(|j| gamma[(j, h)] * c[j]).sum::<f64>()
            } else {
                (0..n).map(|j| w[(j, h)] * c[j]).sum::<f64>() - gamma[(p as usize, h)]
            };
            if !(num > 0.0) {
                return Err(i);
            }
            sum += num.ln();
        }
        Ok(sum)
    }

    pub fn log_likelihood(&self, spec: &InteractionSpec) -> Result<f64> {
        if spec.n_agents() != self.n_agents {
            return Err(Error::Domain(format!(
                "spec has {} agents, observations {}",
                spec.n_agents(),
                self.n_agents
            )));
        }
        match self.log_numerator(spec) {
            Ok(num) => Ok(num - self.log_denominator(spec.theta())),
            Err(i) => {
                let (t, c) = self.labels[i];
                Err(Error::ImpossibleObservation {
                    t,
                    agent: self.agent[i] as usize + 1,
                    item: self.item_labels[c].clone(),
                })
            }
        }
    }
}

/// Log-likelihood of `log` under `spec`; an event of probability zero is an error.
pub fn log_likelihood<S: EventSource + ?Sized>(log: &S, spec: &InteractionSpec) -> Result<f64> {
    LikelihoodData::from_events(log)?.log_likelihood(spec)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matrix::SquareMatrix;
    use crate::simulator::{run, DrawEvent, EventLog};

    fn ev(t: u64, agent: usize, color: usize, new_system: bool, new_agent: bool) -> DrawEvent {
        DrawEvent {
            t,
            agent,
            color,
            new_system,
            new_agent,
        }
    }

    fn spec() -> InteractionSpec {
        InteractionSpec::new(
            vec![1.0, 2.0],
            SquareMatrix::from_rows(&[[0.2, 0.1], [0.1, 0.3]]).unwrap(),
            SquareMatrix::from_rows(&[[0.6, 0.3], [0.4, 0.7]]).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn single_step_has_zero_loglik() {
        let log = EventLog {
            spec: spec(),
            seed: 0,
            horizon: 1,
            events: vec![ev(1, 0, 0, true, true), ev(1, 1, 1, true, true)],
        };
        assert_eq!(log_likelihood(&log, &spec()).unwrap(), 0.0);
    }

    #[test]
    fn two_steps_by_hand() {
        // t=1: both new (colors 0 by agent 1, 1 by agent 2).
        // t=2: agent 1 draws color 1 (produced by agent 2), agent 2 draws new.
        // Agent 1 at t=1: θ=1, P(c=1) = (w₂₁·K(2,1) − γ₂₁)/(1+1) = (0.4 − 0.1)/2.
        // Agent 2 at t=1: θ=2, P(new) = (2 + γ₁₂·1 + γ₂₂·1)/(2+1) = 2.4/3.
        let log = EventLog {
            spec: spec(),
            seed: 0,
            horizon: 2,
            events: vec![
                ev(1, 0, 0, true, true),
                ev(1, 1, 1, true, true),
                ev(2, 0, 1, false, true),
                ev(2, 1, 2, true, true),
            ],
        };
        let expected = (0.3f64 / 2.0).ln() + (2.4f64 / 3.0).ln();
        let got = log_likelihood(&log, &spec()).unwrap();
        assert!((got - expected).abs() < 1e-14, "{got} vs {expected}");
    }

    #[test]
    fn impossible_observation_is_named() {
        let independent = InteractionSpec::new(
            vec![1.0, 1.0],
            SquareMatrix::diagonal(&[0.5, 0.5]),
            SquareMatrix::identity(2),
        )
        .unwrap();
        let log = EventLog {
            spec: spec(),
            seed: 0,
            horizon: 2,
            events: vec![
                ev(1, 0, 0, true, true),
                ev(1, 1, 1, true, true),
                ev(2, 0, 1, false, true),
                ev(2, 1, 1, false, false),
            ],
        };
        match log_likelihood(&log, &independent) {
            Err(Error::ImpossibleObservation { t, agent, item }) => {
                assert_eq!((t, agent, item.as_str()), (2, 1, "1"));
            }
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn generating_spec_is_finite() {
        let log = run(&spec(), 3_000, 4).unwrap();
        assert!(log_likelihood(&log, &spec()).unwrap().is_finite());
    }
}
