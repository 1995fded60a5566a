//! Stationary distributions of finite Markov chains.

use nalgebra::{DMatrix, DVector};

use crate::hmm::TransitionMatrix;

/// Smallest LU pivot, relative to the largest, accepted as non-singular.
const PIVOT_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct Stationary {
    pub pi: Vec<f64>,
    /// `false` when the chain has several stationary laws and `pi` is the
    /// minimum-norm solution of the balance equations.
    pub unique: bool,
}

/// Solves `pi Q = pi`, `sum(pi) = 1` with the last balance equation
/// replaced by the normalization.
pub fn stationary_distribution(q: &TransitionMatrix) -> Stationary {
    let m = q.m();
    let mut a = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            // row i of (Q^T - I)
            a[(i, j)] = q.get(j, i) - if i == j { 1.0 } else { 0.0 };
        }
    }
    for j in 0..m {
        a[(m - 1, j)] = 1.0;
    }
    let mut b = DVector::<f64>::zeros(m);
    b[m - 1] = 1.0;

    let lu = a.clone().lu();
    let u = lu.u();
    let diag = u.diagonal();
    let largest = diag.iter().fold(0.0_f64, |acc, d| acc.max(d.abs()));
    let smallest = diag.iter().fold(f64::INFINITY, |acc, d| acc.min(d.abs()));
    if smallest > PIVOT_TOL * largest {
        if let Some(x) = lu.solve(&b) {
            return Stationary { pi: clean(x.as_slice()), unique: true };
        }
    }
    let x = a.svd(true, true).solve(&b, PIVOT_TOL).expect("both factors requested");
    Stationary { pi: clean(x.as_slice()), unique: false }
}

/// Clears round-off negatives and renormalizes.
fn clean(x: &[f64]) -> Vec<f64> {
    let mut pi: Vec<f64> = x.iter().map(|v| v.max(0.0)).collect();
    let s: f64 = pi.iter().sum();
    pi.iter_mut().for_each(|v| *v /= s);
    pi
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: &[f64], b: &[f64], tol: f64) -> bool {
        a.iter().zip(b).all(|(x, y)| (x - y).abs() < tol)
    }

    #[test]
    fn presets() {
        let s = stationary_distribution(&TransitionMatrix::city());
        assert!(s.unique);
        assert!(close(&s.pi, &[1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0], 1e-14));
        let s = stationary_distribution(&TransitionMatrix::highway());
        assert!(close(&s.pi, &[1.0 / 18.0, 8.0 / 9.0, 1.0 / 18.0], 1e-14));
    }

    #[test]
    fn uniform_chain() {
        let s = stationary_distribution(&TransitionMatrix::uniform(4));
        assert!(close(&s.pi, &[0.25; 4], 1e-14));
    }

    #[test]
    fn reducible_chain_is_flagged() {
        let s = stationary_distribution(&TransitionMatrix::identity(3));
        assert!(!s.unique);
        assert!(close(&s.pi, &[1.0 / 3.0; 3], 1e-12));
    }

    #[test]
    fn single_state() {
        let s = stationary_distribution(&TransitionMatrix::identity(1));
        assert_eq!(s.pi, vec![1.0]);
        assert!(s.unique);
    }
}
