use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gal::GalParams;

/// Index of the right-turn state in the canonical labeling (label "1").
pub const RT: usize = 0;
/// Index of the straight-forward state (label "2").
pub const SF: usize = 1;
/// Index of the left-turn state (label "3").
pub const LT: usize = 2;

const ROW_TOL: f64 = 1e-9;

/// Row-stochastic `m x m` matrix, `q(i, j) = P(Z_{t+1} = j | Z_t = i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<Vec<f64>>", into = "Vec<Vec<f64>>")]
pub struct TransitionMatrix {
    m: usize,
    q: Vec<f64>,
}

impl TransitionMatrix {
    /// Row-major entries; every row must sum to one within 1e-9.
    pub fn from_flat(m: usize, q: Vec<f64>) -> Result<Self> {
        if m == 0 {
            return Err(Error::Domain("transition matrix needs at least one state".into()));
        }
        if q.len() != m * m {
            return Err(Error::Dimension { expected: m * m, got: q.len() });
        }
        for (i, row) in q.chunks(m).enumerate() {
            if let Some(bad) = row.iter().find(|p| !(0.0..=1.0).contains(*p)) {
                return Err(Error::Domain(format!("row {i} has entry {bad} outside [0, 1]")));
            }
            let s: f64 = row.iter().sum();
            if (s - 1.0).abs() > ROW_TOL {
                return Err(Error::Domain(format!("row {i} sums to {s}, not 1")));
            }
        }
        Ok(Self { m, q })
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let m = rows.len();
        if let Some(r) = rows.iter().find(|r| r.len() != m) {
            return Err(Error::Dimension { expected: m, got: r.len() });
        }
        Self::from_flat(m, rows.concat())
    }

    pub fn identity(m: usize) -> Self {
        Self::persistent(m, 1.0)
    }

    pub fn uniform(m: usize) -> Self {
        Self { m, q: vec![1.0 / m as f64; m * m] }
    }

    /// `stay` on the diagonal, the rest spread evenly over the other states.
    pub fn persistent(m: usize, stay: f64) -> Self {
        assert!(m > 0 && (0.0..=1.0).contains(&stay));
        if m == 1 {
            return Self { m, q: vec![1.0] };
        }
        let off = (1.0 - stay) / (m - 1) as f64;
        let q = (0..m * m).map(|idx| if idx / m == idx % m { stay } else { off }).collect();
        Self { m, q }
    }

    /// City-driving matrix of the simulation study (RT, SF, LT order).
    pub fn city() -> Self {
        Self::from_rows(&[
            vec![0.85, 0.1, 0.05],
            vec![0.025, 0.95, 0.025],
            vec![0.05, 0.1, 0.85],
        ])
        .expect("valid preset")
    }

    /// Highway-driving matrix of the simulation study (RT, SF, LT order).
    pub fn highway() -> Self {
        Self::from_rows(&[
            vec![0.90, 0.08, 0.02],
            vec![0.005, 0.99, 0.005],
            vec![0.02, 0.08, 0.90],
        ])
        .expect("valid preset")
    }

    pub fn m(&self) -> usize {
        self.m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.q[i * self.m + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.q[i * self.m..(i + 1) * self.m]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.q
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.m).map(|i| self.get(i, i)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.q.chunks(self.m).map(<[f64]>::to_vec).collect()
    }

    /// Largest absolute entrywise difference.
    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        assert_eq!(self.m, other.m);
        self.q.iter().zip(&other.q).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max)
    }

    pub(crate) fn from_flat_unchecked(m: usize, q: Vec<f64>) -> Self {
        debug_assert_eq!(q.len(), m * m);
        Self { m, q }
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.q
    }
}

impl TryFrom<Vec<Vec<f64>>> for TransitionMatrix {
    type Error = Error;

    fn try_from(rows: Vec<Vec<f64>>) -> Result<Self> {
        Self::from_rows(&rows)
    }
}

impl From<TransitionMatrix> for Vec<Vec<f64>> {
    fn from(q: TransitionMatrix) -> Self {
        q.to_rows()
    }
}

/// Per-state GAL emission parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<GalParams>", into = "Vec<GalParams>")]
pub struct EmissionModel {
    states: Vec<GalParams>,
}

impl EmissionModel {
    pub fn new(states: Vec<GalParams>) -> Result<Self> {
        if states.is_empty() {
            return Err(Error::Domain("emission model needs at least one state".into()));
        }
        for p in &states {
            p.validate()?;
        }
        Ok(Self { states })
    }

    /// Reference RT, SF, LT parameters used by the simulated journeys.
    pub fn reference() -> Self {
        Self::new(vec![
            GalParams { delta: -1.0, mu: -0.5, nu: 10.0, sigma: 0.2 },
            GalParams { delta: 0.0, mu: 0.0, nu: 0.5, sigma: 1.0 },
            GalParams { delta: 1.0, mu: 0.5, nu: 10.0, sigma: 0.2 },
        ])
        .expect("valid preset")
    }

    pub fn m(&self) -> usize {
        self.states.len()
    }

    pub fn state(&self, k: usize) -> &GalParams {
        &self.states[k]
    }

    pub fn states(&self) -> &[GalParams] {
        &self.states
    }

    /// `ln g(k, y)` for every state.
    pub fn log_densities_into(&self, y: f64, out: &mut [f64]) {
        for (o, p) in out.iter_mut().zip(&self.states) {
            *o = p.ln_pdf_resolved(y);
        }
    }

    pub fn log_densities(&self, y: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.m()];
        self.log_densities_into(y, &mut out);
        out
    }
}

impl TryFrom<Vec<GalParams>> for EmissionModel {
    type Error = Error;

    fn try_from(states: Vec<GalParams>) -> Result<Self> {
        Self::new(states)
    }
}

impl From<EmissionModel> for Vec<GalParams> {
    fn from(em: EmissionModel) -> Self {
        em.states
    }
}

fn check_probability_vector(p: &[f64], tol: f64) -> Result<()> {
    if p.is_empty() {
        return Err(Error::Domain("empty probability vector".into()));
    }
    if let Some(bad) = p.iter().find(|x| !(**x >= 0.0 && x.is_finite())) {
        return Err(Error::Domain(format!("probability entry {bad} is negative or non-finite")));
    }
    let s: f64 = p.iter().sum();
    if (s - 1.0).abs() > tol {
        return Err(Error::Domain(format!("probabilities sum to {s}, not 1")));
    }
    Ok(())
}

/// `pi_i = P(Z_0 = i)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct InitialDistribution(Vec<f64>);

impl InitialDistribution {
    pub fn new(p: Vec<f64>) -> Result<Self> {
        check_probability_vector(&p, ROW_TOL)?;
        Ok(Self(p))
    }

    pub fn uniform(m: usize) -> Self {
        Self(vec![1.0 / m as f64; m])
    }

    /// All mass on state `k`.
    pub fn point(m: usize, k: usize) -> Self {
        let mut p = vec![0.0; m];
        p[k] = 1.0;
        Self(p)
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn m(&self) -> usize {
        self.0.len()
    }
}

impl TryFrom<Vec<f64>> for InitialDistribution {
    type Error = Error;

    fn try_from(p: Vec<f64>) -> Result<Self> {
        Self::new(p)
    }
}

impl From<InitialDistribution> for Vec<f64> {
    fn from(p: InitialDistribution) -> Self {
        p.0
    }
}

/// `phi_t(k) = P(Z_t = k | Y_0..Y_t)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FilterDistribution {
    pub phi: Vec<f64>,
    pub t: u64,
}

impl FilterDistribution {
    pub fn m(&self) -> usize {
        self.phi.len()
    }

    pub fn validate(&self) -> Result<()> {
        check_probability_vector(&self.phi, 1e-9)
    }
}

/// Auxiliary tensor `rho(i, j, k)`, stored with `k` fastest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SufficientStats {
    pub m: usize,
    pub rho: Vec<f64>,
}

impl SufficientStats {
    pub fn zeros(m: usize) -> Self {
        Self { m, rho: vec![0.0; m * m * m] }
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize, k: usize) -> f64 {
        self.rho[(i * self.m + j) * self.m + k]
    }

    /// `S(i, j) = sum_k phi(k) rho(i, j, k)`, row-major.
    pub fn s_matrix(&self, phi: &[f64]) -> Vec<f64> {
        let mut s = vec![0.0; self.m * self.m];
        self.s_matrix_into(phi, &mut s);
        s
    }

    pub(crate) fn s_matrix_into(&self, phi: &[f64], s: &mut [f64]) {
        let m = self.m;
        for (ij, out) in s.iter_mut().enumerate() {
            let block = &self.rho[ij * m..(ij + 1) * m];
            *out = block.iter().zip(phi).map(|(r, p)| r * p).sum();
        }
    }

    /// One step of the sufficient-statistic recursion,
    /// `rho'(i,j,k) = g_j [j = k] r(i|k) + (1 - g_j) sum_k' rho(i,j,k') r(k'|k)`,
    /// with the forgetting factor indexed by the destination state `j`.
    pub(crate) fn update(&mut self, kernel: &[f64], gammas: &[f64], scratch: &mut [f64]) {
        let m = self.m;
        debug_assert_eq!(kernel.len(), m * m);
        debug_assert_eq!(gammas.len(), m);
        for i in 0..m {
            for j in 0..m {
                let g = gammas[j];
                let base = (i * m + j) * m;
                let old = &self.rho[base..base + m];
                for k in 0..m {
                    let carried: f64 = (0..m).map(|kp| old[kp] * kernel[kp * m + k]).sum();
                    let innovation = if j == k { g * kernel[i * m + k] } else { 0.0 };
                    scratch[k] = innovation + (1.0 - g) * carried;
                }
                self.rho[base..base + m].copy_from_slice(&scratch[..m]);
            }
        }
    }
}
