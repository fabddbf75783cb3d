//! Two-agent matrix families with prescribed Perron data.
//!
//! `gamma_family(γ*, r, x₁, x₂)` is non-negative, irreducible, has column
//! sums below one, leading eigenvalue `γ*` and left eigenvector `(r, 1)`.
//! `w_family` adds `Λ`, which spreads each column's deficit `1 − Σ_j γ_{j,h}`
//! between the two rows, so `W` is column-stochastic and `W − Γ ≥ 0`.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::SquareMatrix;
use crate::model::InteractionSpec;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct FamilyParams {
    pub gamma_star: f64,
    pub r: f64,
    pub x1: f64,
    pub x2: f64,
    pub y1: f64,
    pub y2: f64,
}

fn check_spectral(gamma_star: f64, r: f64) -> Result<()> {
    if !(gamma_star > 0.0 && gamma_star < 1.0) {
        return Err(Error::Domain(format!("gamma_star = {gamma_star} not in (0, 1)")));
    }
    if !(r > 0.0 && r <= 1.0) {
        return Err(Error::Domain(format!("r = {r} not in (0, 1]")));
    }
    Ok(())
}

fn check_open(name: &str, x: f64) -> Result<()> {
    if x > 0.0 && x < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} = {x} not in (0, 1)")))
    }
}

fn check_closed(name: &str, y: f64) -> Result<()> {
    if (0.0..=1.0).contains(&y) {
        Ok(())
    } else {
        Err(Error::Domain(format!("{name} = {y} not in [0, 1]")))
    }
}

pub fn gamma_family(gamma_star: f64, r: f64, x1: f64, x2: f64) -> Result<SquareMatrix> {
    check_spectral(gamma_star, r)?;
    check_open("x1", x1)?;
    check_open("x2", x2)?;
    let g = gamma_star;
    let (g12, g22) = if g <= r {
        (g / r * x2, g * (1.0 - x2))
    } else {
        let k = (1.0 - g) / (1.0 - r);
        (k * x2, g - k * r * x2)
    };
    SquareMatrix::from_rows(&[[g * (1.0 - x1), g12], [r * g * x1, g22]])
}

/// `W = Γ + Λ` for the same `(γ*, r, x₁, x₂)` and deficit splits `y₁, y₂`.
pub fn w_family(gamma_star: f64, r: f64, x1: f64, x2: f64, y1: f64, y2: f64) -> Result<SquareMatrix> {
    check_closed("y1", y1)?;
    check_closed("y2", y2)?;
    let gamma = gamma_family(gamma_star, r, x1, x2)?;
    let deficit: Vec<f64> = gamma.column_sums().iter().map(|s| 1.0 - s).collect();
    let lambda = SquareMatrix::from_rows(&[
        [deficit[0] * (1.0 - y1), deficit[1] * y2],
        [deficit[0] * y1, deficit[1] * (1.0 - y2)],
    ])?;
    Ok(gamma.add(&lambda))
}

impl FamilyParams {
    pub fn gamma(&self) -> Result<SquareMatrix> {
        gamma_family(self.gamma_star, self.r, self.x1, self.x2)
    }

    pub fn w(&self) -> Result<SquareMatrix> {
        w_family(self.gamma_star, self.r, self.x1, self.x2, self.y1, self.y2)
    }

    /// Whether the `γ* ≤ r` branch of the family applies.
    pub fn low_branch(&self) -> bool {
        self.gamma_star <= self.r
    }

    pub fn spec(&self, theta: &[f64]) -> Result<InteractionSpec> {
        InteractionSpec::new(theta.to_vec(), self.gamma()?, self.w()?)
    }
}

/// Eliminates `x₂` and `y₂` so that `Γ` and `W` are symmetric.
///
/// `γ₁₂ = γ₂₁` gives `x₂ = r²x₁` when `γ* ≤ r` and
/// `x₂ = rγ*(1−r)x₁/(1−γ*)` otherwise; `w₁₂ = w₂₁` then reads
/// `s₂y₂ = s₁y₁` with `s_h` the column deficits of `Γ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SymmetricFamily {
    pub gamma_star: f64,
    pub r: f64,
}

impl SymmetricFamily {
    pub fn new(gamma_star: f64, r: f64) -> Result<Self> {
        check_spectral(gamma_star, r)?;
        Ok(Self { gamma_star, r })
    }

    fn x2_factor(&self) -> f64 {
        let (g, r) = (self.gamma_star, self.r);
        if g <= r {
            r * r
        } else {
            r * g * (1.0 - r) / (1.0 - g)
        }
    }

    pub fn x2(&self, x1: f64) -> f64 {
        self.x2_factor() * x1
    }

    /// Supremum of `x₁` keeping `x₂ < 1`.
    pub fn x1_max(&self) -> f64 {
        (1.0 / self.x2_factor()).min(1.0)
    }

    fn deficits(&self, x1: f64) -> Result<[f64; 2]> {
        let gamma = gamma_family(self.gamma_star, self.r, x1, self.x2(x1))?;
        let s = gamma.column_sums();
        Ok([1.0 - s[0], 1.0 - s[1]])
    }

    /// Largest `y₁` keeping `y₂ ≤ 1`.
    pub fn y1_max(&self, x1: f64) -> Result<f64> {
        let [s1, s2] = self.deficits(x1)?;
        Ok((s2 / s1).min(1.0))
    }

    pub fn params(&self, x1: f64, y1: f64) -> Result<FamilyParams> {
        let [s1, s2] = self.deficits(x1)?;
        Ok(FamilyParams {
            gamma_star: self.gamma_star,
            r: self.r,
            x1,
            x2: self.x2(x1),
            y1,
            y2: s1 * y1 / s2,
        })
    }

    /// Inverts the reduction for a symmetric pair `(γ₁₁, γ₂₂, γ₁₂, w₁₂)`
    /// whose Perron data match this family. Returns `(x₁, y₁)`.
    pub fn coordinates_of(&self, gamma: &SquareMatrix, w: &SquareMatrix) -> (f64, f64) {
        let x1 = gamma[(1, 0)] / (self.r * self.gamma_star);
        let s1 = 1.0 - gamma[(0, 0)] - gamma[(1, 0)];
        let y1 = (w[(1, 0)] - gamma[(1, 0)]) / s1;
        (x1, y1)
    }
}
