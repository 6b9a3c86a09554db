//! Steady state of the driven Lambda system.
//!
//! Basis: `|0>` = m_s = 0, `|1>` = m_s = +1, `|2>` = optically excited state.
//! In the frame rotating with both lasers (hbar = 1),
//!
//! ```text
//! H = d0 |0><0| + d1 |1><1| + (W0/2)(|2><0| + h.c.) + (W1/2)(|2><1| + h.c.)
//! d0 = dp,   d1 = dp - dR
//! ```
//!
//! with one-photon detuning `dp` of the m_s = 0 leg and Raman detuning `dR`.
//! A field shift moves only the m_s = +1 level, so the Raman detuning appears
//! entirely on the second leg. Dissipators:
//! spontaneous decay `sqrt(G b_k) |k><2|` with branching `b_0 + b_1 = 1`, and
//! ground-state dephasing `sqrt(g_s / 2)(|0><0| - |1><1|)`, which damps the
//! spin coherence at rate `g_s`.
//!
//! The Liouvillian acts on the row-major vectorization of the 3x3 density
//! matrix, `vec(A rho B) = (A (x) B^T) vec(rho)`. One population equation is
//! replaced by the trace condition and the 9-unknown system is solved by LU.

use nalgebra::{Complex, DMatrix, DVector, Matrix3, SymmetricEigen};

use crate::error::{Error, Result};
use crate::units::hz_to_rad;

pub type C64 = Complex<f64>;

const DIM: usize = 3;
const EXCITED: usize = 2;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaSystemParams {
    /// Rabi frequency of the m_s = 0 leg (rad/s).
    pub rabi_1: f64,
    /// Rabi frequency of the m_s = +1 leg (rad/s).
    pub rabi_2: f64,
    /// Excited-state decay rate (1/s).
    pub gamma: f64,
    /// Ground-state dephasing rate (1/s).
    pub gamma_s: f64,
    pub one_photon_detuning: f64,
    pub raman_detuning: f64,
    /// Fraction of spontaneous decay into m_s = 0; the rest goes to m_s = +1.
    pub branching_1: f64,
}

impl LambdaSystemParams {
    /// Rabi 2pi x 5 MHz on both legs, 12 ns lifetime, 2pi x 0.6 MHz dephasing.
    pub fn nv_defaults() -> Self {
        Self {
            rabi_1: hz_to_rad(5e6),
            rabi_2: hz_to_rad(5e6),
            gamma: 1.0 / 12e-9,
            gamma_s: hz_to_rad(0.6e6),
            one_photon_detuning: 0.0,
            raman_detuning: 0.0,
            branching_1: 0.5,
        }
    }

    pub fn with_raman_detuning(mut self, delta: f64) -> Self {
        self.raman_detuning = delta;
        self
    }

    fn validate(&self) -> Result<()> {
        if !(self.gamma >= 0.0 && self.gamma_s >= 0.0 && self.rabi_1 >= 0.0 && self.rabi_2 >= 0.0) {
            return Err(Error::invalid("rates and Rabi frequencies must be non-negative"));
        }
        if !(0.0..=1.0).contains(&self.branching_1) {
            return Err(Error::invalid("branching ratio must lie in [0, 1]"));
        }
        Ok(())
    }

    fn hamiltonian(&self) -> Matrix3<C64> {
        let d0 = self.one_photon_detuning;
        let d1 = self.one_photon_detuning - self.raman_detuning;
        let re = |v: f64| C64::new(v, 0.0);
        let mut h = Matrix3::zeros();
        h[(0, 0)] = re(d0);
        h[(1, 1)] = re(d1);
        h[(EXCITED, 0)] = re(0.5 * self.rabi_1);
        h[(0, EXCITED)] = re(0.5 * self.rabi_1);
        h[(EXCITED, 1)] = re(0.5 * self.rabi_2);
        h[(1, EXCITED)] = re(0.5 * self.rabi_2);
        h
    }

    fn jump_operators(&self) -> Vec<Matrix3<C64>> {
        let mut ops = Vec::new();
        for (ground, share) in [(0, self.branching_1), (1, 1.0 - self.branching_1)] {
            let rate = self.gamma * share;
            if rate > 0.0 {
                let mut c = Matrix3::zeros();
                c[(ground, EXCITED)] = C64::new(rate.sqrt(), 0.0);
                ops.push(c);
            }
        }
        if self.gamma_s > 0.0 {
            let a = (0.5 * self.gamma_s).sqrt();
            let mut c = Matrix3::zeros();
            c[(0, 0)] = C64::new(a, 0.0);
            c[(1, 1)] = C64::new(-a, 0.0);
            ops.push(c);
        }
        ops
    }

    /// A ground level that is neither driven nor fed by decay.
    fn is_isolated(&self, ground: usize) -> bool {
        let (rabi, share) = match ground {
            0 => (self.rabi_1, self.branching_1),
            _ => (self.rabi_2, 1.0 - self.branching_1),
        };
        rabi == 0.0 && self.gamma * share == 0.0
    }
}

fn to_dynamic(m: &Matrix3<C64>) -> DMatrix<C64> {
    DMatrix::from_fn(DIM, DIM, |i, j| m[(i, j)])
}

/// Lindblad generator on row-major vectorized density matrices.
pub fn liouvillian(params: &LambdaSystemParams) -> DMatrix<C64> {
    let id = DMatrix::<C64>::identity(DIM, DIM);
    let h = to_dynamic(&params.hamiltonian());
    let minus_i = C64::new(0.0, -1.0);
    let mut l = (h.kronecker(&id) - id.kronecker(&h.transpose())) * minus_i;
    for c in params.jump_operators() {
        let c = to_dynamic(&c);
        let cdc = c.adjoint() * &c;
        l += c.kronecker(&c.map(|z| z.conj()));
        l -= cdc.kronecker(&id) * C64::new(0.5, 0.0);
        l -= id.kronecker(&cdc.transpose()) * C64::new(0.5, 0.0);
    }
    l
}

#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    pub rho: Matrix3<C64>,
}

impl SteadyState {
    pub fn rho_ee(&self) -> f64 {
        self.rho[(EXCITED, EXCITED)].re
    }

    pub fn populations(&self) -> [f64; 3] {
        [self.rho[(0, 0)].re, self.rho[(1, 1)].re, self.rho[(2, 2)].re]
    }

    pub fn trace(&self) -> C64 {
        self.rho.trace()
    }

    pub fn hermiticity_error(&self) -> f64 {
        (self.rho - self.rho.adjoint()).iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn min_eigenvalue(&self) -> f64 {
        let herm = (self.rho + self.rho.adjoint()) * C64::new(0.5, 0.0);
        SymmetricEigen::new(herm).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
    }
}

pub fn steady_state(params: &LambdaSystemParams) -> Result<SteadyState> {
    params.validate()?;
    let mut a = liouvillian(params);
    let n = DIM * DIM;
    let diag = |k: usize| k * DIM + k;

    let isolated: Vec<usize> = (0..2).filter(|&g| params.is_isolated(g)).collect();
    for &g in &isolated {
        let row = diag(g);
        a.row_mut(row).fill(C64::new(0.0, 0.0));
        a[(row, row)] = C64::new(1.0, 0.0);
    }
    let trace_row = (0..DIM)
        .map(diag)
        .find(|r| !isolated.iter().any(|&g| diag(g) == *r))
        .expect("the excited level is never isolated");
    a.row_mut(trace_row).fill(C64::new(0.0, 0.0));
    for k in 0..DIM {
        a[(trace_row, diag(k))] = C64::new(1.0, 0.0);
    }
    let mut b = DVector::<C64>::zeros(n);
    b[trace_row] = C64::new(1.0, 0.0);

    // Scale rows so the pivot test is independent of the rate units.
    for r in 0..n {
        let m = a.row(r).iter().map(|z| z.norm()).fold(0.0, f64::max);
        if m > 0.0 {
            let s = C64::new(1.0 / m, 0.0);
            a.row_mut(r).apply(|z| *z *= s);
            b[r] *= s;
        }
    }

    let lu = a.lu();
    let u = lu.u();
    let pivots: Vec<f64> = (0..n).map(|k| u[(k, k)].norm()).collect();
    let max_pivot = pivots.iter().copied().fold(0.0, f64::max);
    let min_pivot = pivots.iter().copied().fold(f64::INFINITY, f64::min);
    if !(min_pivot > 1e-12 * max_pivot) {
        return Err(Error::Singular(format!(
            "pivot ratio {:e}; the system has no unique steady state",
            min_pivot / max_pivot
        )));
    }
    let x = lu.solve(&b).ok_or_else(|| Error::Singular("LU solve failed".into()))?;
    let rho = Matrix3::from_fn(|i, j| x[i * DIM + j]);
    Ok(SteadyState { rho })
}

pub fn rho_ee_lindblad(params: &LambdaSystemParams) -> Result<f64> {
    steady_state(params).map(|s| s.rho_ee())
}
