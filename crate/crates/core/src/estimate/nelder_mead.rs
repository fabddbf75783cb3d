//! Box-constrained Nelder–Mead simplex minimization.
//!
//! Classical coefficients: reflection 1, expansion 2, contraction 1/2,
//! shrink 1/2. Trial points are clamped into the box.

#[derive(Clone, Debug, PartialEq)]
pub struct NelderMead {
    /// Edge length of the initial simplex, in box coordinates.
    pub initial_step: f64,
    /// Converged once every vertex is within this ∞-distance of the best one.
    pub tolerance: f64,
    pub max_evaluations: usize,
}

impl Default for NelderMead {
    fn default() -> Self {
        Self {
            initial_step: 0.1,
            tolerance: 1e-6,
            max_evaluations: 20_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Minimum {
    pub x: Vec<f64>,
    pub value: f64,
    pub converged: bool,
    pub evaluations: usize,
}

const REFLECT: f64 = 1.0;
const EXPAND: f64 = 2.0;
const CONTRACT: f64 = 0.5;
const SHRINK: f64 = 0.5;

impl NelderMead {
    pub fn minimize<F>(&self, mut f: F, x0: &[f64], lower: &[f64], upper: &[f64]) -> Minimum
    where
        F: FnMut(&[f64]) -> f64,
    {
        let dim = x0.len();
        assert!(dim > 0 && lower.len() == dim && upper.len() == dim);
        let clamp = |x: &mut Vec<f64>| {
            for i in 0..dim {
                x[i] = x[i].clamp(lower[i], upper[i]);
            }
        };
        let mut evaluations = 0;
        let mut eval = |x: &[f64], evaluations: &mut usize| {
            *evaluations += 1;
            let v = f(x);
            if v.is_nan() {
                f64::INFINITY
            } else {
                v
            }
        };

        let mut start = x0.to_vec();
        clamp(&mut start);
        let mut simplex: Vec<(Vec<f64>, f64)> = Vec::with_capacity(dim + 1);
        let v0 = eval(&start, &mut evaluations);
        simplex.push((start.clone(), v0));
        for i in 0..dim {
            let mut p = start.clone();
            let step = self.initial_step * (upper[i] - lower[i]);
            p[i] = if p[i] + step <= upper[i] {
                p[i] + step
            } else {
                p[i] - step
            };
            clamp(&mut p);
            let v = eval(&p, &mut evaluations);
            simplex.push((p, v));
        }

        let mut converged = false;
        while evaluations < self.max_evaluations {
            simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
            let best = &simplex[0].0;
            let diameter = simplex[1..]
                .iter()
                .flat_map(|(p, _)| p.iter().zip(best).map(|(a, b)| (a - b).abs()))
                .fold(0.0, f64::max);
            if diameter < self.tolerance {
                converged = true;
                break;
            }

            let centroid: Vec<f64> = (0..dim)
                .map(|i| simplex[..dim].iter().map(|(p, _)| p[i]).sum::<f64>() / dim as f64)
                .collect();
            let toward = |from: &[f64], coef: f64| -> Vec<f64> {
                let mut p: Vec<f64> = centroid
                    .iter()
                    .zip(from)
                    .map(|(c, x)| c + coef * (x - c))
                    .collect();
                clamp(&mut p);
                p
            };
            let (worst, f_worst) = simplex[dim].clone();
            let f_best = simplex[0].1;
            let f_second = simplex[dim - 1].1;

            let reflected = toward(&worst, -REFLECT);
            let f_r = eval(&reflected, &mut evaluations);
            if f_r < f_best {
                let expanded = toward(&worst, -EXPAND);
                let f_e = eval(&expanded, &mut evaluations);
                simplex[dim] = if f_e < f_r {
                    (expanded, f_e)
                } else {
                    (reflected, f_r)
                };
                continue;
            }
            if f_r < f_second {
                simplex[dim] = (reflected, f_r);
                continue;
            }
            let (candidate, f_c) = if f_r < f_worst {
                let outside = toward(&worst, -CONTRACT);
                let f_o = eval(&outside, &mut evaluations);
                (outside, f_o)
            } else {
                let inside = toward(&worst, CONTRACT);
                let f_i = eval(&inside, &mut evaluations);
                (inside, f_i)
            };
            if f_c < f_r.min(f_worst) {
                simplex[dim] = (candidate, f_c);
                continue;
            }
            let anchor = simplex[0].0.clone();
            for vertex in simplex.iter_mut().skip(1) {
                let mut p: Vec<f64> = anchor
                    .iter()
                    .zip(&vertex.0)
                    .map(|(a, x)| a + SHRINK * (x - a))
                    .collect();
                clamp(&mut p);
                let v = eval(&p, &mut evaluations);
                *vertex = (p, v);
            }
        }
        simplex.sort_by(|a, b| a.1.total_cmp(&b.1));
        let (x, value) = simplex.swap_remove(0);
        Minimum {
            x,
            value,
            converged,
            evaluations,
        }
    }
}
