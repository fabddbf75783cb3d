#![allow(dead_code)]

use interurn::{InteractionSpec, SquareMatrix};
use rand::Rng;

/// A random valid spec: every `w` column is a probability vector with a
/// dominant diagonal, some cross entries are zero, and `γ = w ∘ f` with
/// `f ∈ [0, 0.95)` so the balance condition holds strictly on the diagonal.
pub fn random_spec<R: Rng>(rng: &mut R, n: usize) -> InteractionSpec {
    let theta: Vec<f64> = (0..n).map(|_| rng.gen_range(0.1..10.0)).collect();
    let mut w = SquareMatrix::zeros(n);
    let mut gamma = SquareMatrix::zeros(n);
    for h in 0..n {
        let mut col: Vec<f64> = (0..n)
            .map(|j| {
                if j == h {
                    rng.gen_range(0.5..2.0)
                } else if rng.gen_bool(0.25) {
                    0.0
                } else {
                    rng.gen_range(0.0..1.0)
                }
            })
            .collect();
        let s: f64 = col.iter().sum();
        col.iter_mut().for_each(|x| *x /= s);
        let off: f64 = (0..n).filter(|&j| j != h).map(|j| col[j]).sum();
        col[h] = 1.0 - off;
        for j in 0..n {
            w[(j, h)] = col[j];
            gamma[(j, h)] = col[j] * rng.gen_range(0.0..0.95);
        }
    }
    InteractionSpec::new(theta, gamma, w).expect("generator yields valid specs")
}
