//! Perron–Frobenius data of the triggering matrix and the mean-field growth ODE.
//!
//! With `Γ` indexed `[influencer][receiver]`, the expected number of novelties
//! of agent `h` grows like `d'_h(t) = Σ_j γ_{j,h} d_j(t) / t`, i.e.
//! `d'(z) = Γᵀ d(z)` in `z = ln t`. Its dominant direction is the left Perron
//! vector `u` of `Γ` (`uᵀΓ = γ* uᵀ`), which is why `D*_{t,h}/D*_{t,j}`
//! approaches `u_h/u_j`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;

pub const EIGEN_TOLERANCE: f64 = 1e-12;
pub const EIGEN_MAX_ITERATIONS: usize = 100_000;
/// Largest residual accepted for a returned eigenpair.
pub const RESIDUAL_TOLERANCE: f64 = 1e-10;
/// Minimum number of RK4 steps over a trajectory.
pub const MIN_RK4_STEPS: usize = 10_000;
/// Largest dimension for which trajectories carry a matrix-exponential cross-check.
pub const EXPM_MAX_DIM: usize = 16;

/// Default window `[t_lo, t_hi]` of [`asymptotic_exponent`].
pub const EXPONENT_WINDOW: (f64, f64) = (1e10, 1e12);

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct SpectralSummary {
    pub gamma_star: f64,
    /// Right eigenvector, `Γv = γ*v`, `Σ v = 1`.
    pub v: Vec<f64>,
    /// Left eigenvector, `uᵀΓ = γ*uᵀ`, `v·u = 1`.
    pub u: Vec<f64>,
    /// `ratios[h][j] = u_h / u_j`.
    pub ratios: Vec<Vec<f64>>,
}

impl SpectralSummary {
    pub fn ratio(&self, h: usize, j: usize) -> f64 {
        self.ratios[h][j]
    }
}

/// True iff the support digraph of `m` (edge `j → h` when `m[(j,h)] ≠ 0`) is
/// strongly connected.
pub fn irreducibility_check(m: &SquareMatrix) -> bool {
    let n = m.dim();
    let reaches_all = |forward: bool| {
        let mut seen = vec![false; n];
        let mut stack = vec![0];
        seen[0] = true;
        while let Some(a) = stack.pop() {
            for b in 0..n {
                let entry = if forward { m[(a, b)] } else { m[(b, a)] };
                if entry != 0.0 && !seen[b] {
                    seen[b] = true;
                    stack.push(b);
                }
            }
        }
        seen.into_iter().all(|s| s)
    };
    reaches_all(true) && reaches_all(false)
}

/// Dominant eigenvector of `m` normalized to unit sum, by power iteration on
/// `m + I` (primitive whenever `m` is irreducible, so periodic `m` converge too).
fn perron_vector(m: &SquareMatrix) -> Result<Vec<f64>> {
    let n = m.dim();
    let mut x = vec![1.0 / n as f64; n];
    let mut delta = f64::INFINITY;
    for _ in 0..EIGEN_MAX_ITERATIONS {
        let mut y = m.mul_vec(&x);
        for (yi, xi) in y.iter_mut().zip(&x) {
            *yi += xi;
        }
        let s: f64 = y.iter().sum();
        y.iter_mut().for_each(|yi| *yi /= s);
        delta = y
            .iter()
            .zip(&x)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        x = y;
        if delta < EIGEN_TOLERANCE {
            break;
        }
    }
    // Power iteration stalls when the two leading eigenvalues are close;
    // a few inverse-iteration steps at the Rayleigh estimate finish the job.
    for _ in 0..8 {
        let lambda: f64 = m.mul_vec(&x).iter().sum();
        let shift = lambda * (1.0 + 1e-10) + 1e-14;
        let Some(mut y) = solve_shifted(m, shift, &x) else {
            break;
        };
        let s: f64 = y.iter().sum();
        if !s.is_finite() || s == 0.0 {
            break;
        }
        y.iter_mut().for_each(|yi| *yi /= s);
        if y.iter().any(|&yi| yi < -1e-12) {
            break;
        }
        let y: Vec<f64> = y.into_iter().map(|yi| yi.max(0.0)).collect();
        let step = y.iter().zip(&x).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        x = y;
        if step < 1e-15 {
            break;
        }
    }
    let lambda: f64 = m.mul_vec(&x).iter().sum();
    let res = residual(m, &x, lambda);
    if res < RESIDUAL_TOLERANCE {
        return Ok(x);
    }
    Err(Error::NotConverged {
        iterations: EIGEN_MAX_ITERATIONS,
        residual: res.max(delta),
    })
}

/// Solves `(m − σI) y = b` by Gaussian elimination with partial pivoting.
fn solve_shifted(m: &SquareMatrix, sigma: f64, b: &[f64]) -> Option<Vec<f64>> {
    let n = m.dim();
    let mut a: Vec<Vec<f64>> = m.to_rows();
    for (i, row) in a.iter_mut().enumerate() {
        row[i] -= sigma;
    }
    let mut y = b.to_vec();
    for k in 0..n {
        let p = (k..n).max_by(|&i, &j| a[i][k].abs().total_cmp(&a[j][k].abs()))?;
        if a[p][k] == 0.0 {
            return None;
        }
        a.swap(k, p);
        y.swap(k, p);
        for i in k + 1..n {
            let f = a[i][k] / a[k][k];
            for j in k..n {
                a[i][j] -= f * a[k][j];
            }
            y[i] -= f * y[k];
        }
    }
    for k in (0..n).rev() {
        let s: f64 = (k + 1..n).map(|j| a[k][j] * y[j]).sum();
        y[k] = (y[k] - s) / a[k][k];
    }
    Some(y)
}

fn residual(m: &SquareMatrix, x: &[f64], lambda: f64) -> f64 {
    m.mul_vec(x)
        .iter()
        .zip(x)
        .map(|(a, b)| (a - lambda * b).abs())
        .fold(0.0, f64::max)
}

/// Leading eigenvalue and Perron vectors of a non-negative irreducible matrix.
pub fn leading_eigen(gamma: &SquareMatrix) -> Result<SpectralSummary> {
    if let Some((row, col)) = gamma.first_negative() {
        return Err(Error::NegativeEntry { row, col });
    }
    if !irreducibility_check(gamma) {
        return Err(Error::Reducible);
    }
    let v = perron_vector(gamma)?;
    let gt = gamma.transpose();
    let unit_u = perron_vector(&gt)?;
    let vu: f64 = v.iter().zip(&unit_u).map(|(a, b)| a * b).sum();
    let u: Vec<f64> = unit_u.iter().map(|x| x / vu).collect();
    // Two-sided Rayleigh quotient: the error is quadratic in the vector errors.
    let gamma_star: f64 = gamma.mul_vec(&v).iter().zip(&u).map(|(a, b)| a * b).sum();

    let res = residual(gamma, &v, gamma_star).max(residual(&gt, &unit_u, gamma_star));
    if !(res < RESIDUAL_TOLERANCE) {
        return Err(Error::NotConverged {
            iterations: EIGEN_MAX_ITERATIONS,
            residual: res,
        });
    }
    let ratios = u
        .iter()
        .map(|uh| u.iter().map(|uj| uh / uj).collect())
        .collect();
    Ok(SpectralSummary {
        gamma_star,
        v,
        u,
        ratios,
    })
}

/// `exp(A)` by scaling and squaring of a Taylor series.
pub fn expm(a: &SquareMatrix) -> SquareMatrix {
    let n = a.dim();
    let norm = a.norm_inf();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let b = a.scale(0.5f64.powi(squarings as i32));
    let mut result = SquareMatrix::identity(n);
    let mut term = SquareMatrix::identity(n);
    for k in 1..=40 {
        term = term.matmul(&b).scale(1.0 / k as f64);
        result = result.add(&term);
        if term.norm_inf() < 1e-18 * result.norm_inf() {
            break;
        }
    }
    for _ in 0..squarings {
        result = result.matmul(&result);
    }
    result
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct OdeTrajectory {
    /// Log-spaced sample times.
    pub times: Vec<f64>,
    /// `values[k][h]` = `d_h(times[k])` from RK4.
    pub values: Vec<Vec<f64>>,
    /// Largest relative gap between RK4 and `exp(Γᵀ z) d0`, when computed.
    pub expm_max_rel_diff: Option<f64>,
}

impl OdeTrajectory {
    /// Least-squares slope of `ln d_h` against `ln t` over samples in `[lo, hi]`.
    pub fn log_log_slope(&self, h: usize, lo: f64, hi: f64) -> f64 {
        let pts: Vec<(f64, f64)> = self
            .times
            .iter()
            .zip(&self.values)
            .filter(|(t, _)| **t >= lo * (1.0 - 1e-12) && **t <= hi * (1.0 + 1e-12))
            .map(|(t, d)| (t.ln(), d[h].ln()))
            .collect();
        slope(&pts)
    }
}

fn slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    sxy / sxx
}

/// Integrates `d'(z) = Γᵀ d(z)`, `z = ln t`, from `d(t0) = d0` to `t1`.
pub fn ode_trajectory(
    gamma: &SquareMatrix,
    d0: &[f64],
    t0: f64,
    t1: f64,
    n_points: usize,
) -> Result<OdeTrajectory> {
    let n = gamma.dim();
    if !(t0 > 0.0 && t1 > t0) {
        return Err(Error::Domain(format!("need 0 < t0 < t1, got {t0}, {t1}")));
    }
    if d0.len() != n || d0.iter().any(|&x| !(x > 0.0)) {
        return Err(Error::Domain(format!("d0 must hold {n} positive values")));
    }
    if n_points < 2 {
        return Err(Error::Domain("need at least 2 sample points".into()));
    }
    let a = gamma.transpose();
    let (z0, z1) = (t0.ln(), t1.ln());
    let segments = n_points - 1;
    let per_segment = MIN_RK4_STEPS.div_ceil(segments);
    let dz = (z1 - z0) / segments as f64;
    let h = dz / per_segment as f64;

    let rk4 = |d: &[f64]| -> Vec<f64> {
        let axpy = |x: &[f64], k: &[f64], s: f64| -> Vec<f64> {
            x.iter().zip(k).map(|(a, b)| a + s * b).collect()
        };
        let k1 = a.mul_vec(d);
        let k2 = a.mul_vec(&axpy(d, &k1, h / 2.0));
        let k3 = a.mul_vec(&axpy(d, &k2, h / 2.0));
        let k4 = a.mul_vec(&axpy(d, &k3, h));
        (0..n)
            .map(|i| d[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
            .collect()
    };

    let mut times = Vec::with_capacity(n_points);
    let mut values = Vec::with_capacity(n_points);
    let mut d = d0.to_vec();
    for k in 0..=segments {
        if k > 0 {
            for _ in 0..per_segment {
                d = rk4(&d);
            }
        }
        times.push(if k == segments {
            t1
        } else {
            (z0 + k as f64 * dz).exp()
        });
        values.push(d.clone());
    }

    let expm_max_rel_diff = (n <= EXPM_MAX_DIM).then(|| {
        values
            .iter()
            .enumerate()
            .map(|(k, rk)| {
                let exact = expm(&a.scale(k as f64 * dz)).mul_vec(d0);
                rk.iter()
                    .zip(&exact)
                    .map(|(x, y)| ((x - y) / y).abs())
                    .fold(0.0, f64::max)
            })
            .fold(0.0, f64::max)
    });

    Ok(OdeTrajectory {
        times,
        values,
        expm_max_rel_diff,
    })
}

/// Growth exponent of component `h` read off the ODE started at `d(1) = 1`,
/// as the log-log slope over [`EXPONENT_WINDOW`]. For irreducible `Γ` this is
/// `γ*`; for reducible `Γ` it is the heuristic rate of the component.
pub fn asymptotic_exponent(gamma: &SquareMatrix, h: usize) -> Result<f64> {
    Ok(asymptotic_exponents(gamma)?[h])
}

/// [`asymptotic_exponent`] for every component.
pub fn asymptotic_exponents(gamma: &SquareMatrix) -> Result<Vec<f64>> {
    let (lo, hi) = EXPONENT_WINDOW;
    let decades = hi.log10().round() as usize;
    let traj = ode_trajectory(gamma, &vec![1.0; gamma.dim()], 1.0, hi, decades * 50 + 1)?;
    Ok((0..gamma.dim())
        .map(|h| traj.log_log_slope(h, lo, hi))
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn m(rows: &[[f64; 2]; 2]) -> SquareMatrix {
        SquareMatrix::from_rows(rows).unwrap()
    }

    #[test]
    fn irreducibility_examples() {
        assert!(irreducibility_check(&m(&[[0.1, 0.2], [0.3, 0.4]])));
        assert!(!irreducibility_check(&SquareMatrix::diagonal(&[0.2, 0.6])));
        assert!(irreducibility_check(&m(&[[0.0, 1.0], [1.0, 0.0]])));
        assert!(!irreducibility_check(&m(&[[0.6, 0.3], [0.0, 0.2]])));
    }

    #[test]
    fn scalar_case() {
        let s = leading_eigen(&SquareMatrix::diagonal(&[0.5])).unwrap();
        assert_eq!(s.gamma_star, 0.5);
        assert_eq!(s.u, vec![1.0]);
        assert_eq!(s.v, vec![1.0]);
    }

    #[test]
    fn periodic_matrix_converges() {
        let s = leading_eigen(&m(&[[0.0, 0.5], [0.5, 0.0]])).unwrap();
        assert!((s.gamma_star - 0.5).abs() < 1e-12);
        assert!((s.ratio(0, 1) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn reducible_and_negative_rejected() {
        assert!(matches!(
            leading_eigen(&SquareMatrix::diagonal(&[0.2, 0.6])),
            Err(Error::Reducible)
        ));
        assert!(matches!(
            leading_eigen(&m(&[[0.1, -0.1], [0.2, 0.3]])),
            Err(Error::NegativeEntry { row: 0, col: 1 })
        ));
    }

    #[test]
    fn expm_of_diagonal() {
        let e = expm(&SquareMatrix::diagonal(&[1.0, -2.0, 7.5]));
        for (i, x) in [1.0f64, -2.0, 7.5].iter().enumerate() {
            assert!((e[(i, i)] / x.exp() - 1.0).abs() < 1e-13);
        }
        assert_eq!(e[(0, 1)], 0.0);
    }

    #[test]
    fn diagonal_ode_is_power_law() {
        let g = SquareMatrix::diagonal(&[0.2, 0.6]);
        let traj = ode_trajectory(&g, &[2.0, 3.0], 10.0, 1e6, 41).unwrap();
        for (t, d) in traj.times.iter().zip(&traj.values) {
            let exact = [2.0 * (t / 10.0f64).powf(0.2), 3.0 * (t / 10.0f64).powf(0.6)];
            for h in 0..2 {
                assert!((d[h] / exact[h] - 1.0).abs() < 1e-10, "t={t} h={h}");
            }
        }
        let pts: Vec<f64> = traj.times.windows(2).map(|w| w[1] / w[0]).collect();
        assert!(pts.iter().all(|r| (r - pts[0]).abs() < 1e-9), "log spacing");
    }

    #[test]
    fn ode_domain_errors() {
        let g = SquareMatrix::diagonal(&[0.2]);
        assert!(ode_trajectory(&g, &[1.0], 0.0, 10.0, 5).is_err());
        assert!(ode_trajectory(&g, &[1.0], 10.0, 1.0, 5).is_err());
        assert!(ode_trajectory(&g, &[0.0], 1.0, 10.0, 5).is_err());
        assert!(ode_trajectory(&g, &[1.0, 1.0], 1.0, 10.0, 5).is_err());
    }

    #[test]
    fn reducible_exponents() {
        let e = asymptotic_exponents(&SquareMatrix::diagonal(&[0.2, 0.6])).unwrap();
        assert!((e[0] - 0.2).abs() < 1e-9 && (e[1] - 0.6).abs() < 1e-9);
        // Agent 1 feeds agent 2 (γ_{1,2} = 0.3), so both inherit rate 0.6.
        let upper = m(&[[0.6, 0.3], [0.0, 0.2]]);
        let e = asymptotic_exponents(&upper).unwrap();
        assert!((e[0] - 0.6).abs() < 1e-9, "{e:?}");
        assert!((e[1] - 0.6).abs() < 1e-3, "{e:?}");
    }
}
