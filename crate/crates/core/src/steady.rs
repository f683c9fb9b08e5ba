//! Non-equilibrium steady states.
//!
//! Two routes to the null vector of W:
//! * [`evolve_to_ness`] propagates an initial density matrix with the
//!   Krylov exponential action until the stationarity residual drops below
//!   a tolerance. Works for any [`Generator`].
//! * [`solve_ness_dense`] solves the bordered linear system with the trace
//!   condition replacing one row, on a dense copy of W. Only for small
//!   lattices; used as the reference for the propagation route.

use std::time::Instant;

use ndarray::{Array1, Array2};
use ndarray_linalg::{Factorize, ReciprocalConditionNum, Solve, SVD};

use crate::error::{Error, Result};
use crate::krylov::{axpy, gmres, max_abs, KrylovPropagator, KrylovSettings};
use crate::liouville::{BlockGenerator, Generator, Liouvillian, StateVector};
use crate::sparse::{C64, ONE, ZERO};

/// Largest lattice accepted by the dense solver.
pub const DENSE_MAX_SITES: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PropagationOptions {
    /// Give up (without error) after this much evolution time.
    pub t_final: f64,
    /// Trace/Hermiticity correction and residual check happen at multiples
    /// of this time.
    pub checkpoint_interval: f64,
    /// Converged once ‖W ρ‖∞ falls below this.
    pub stationarity_tol: f64,
    pub krylov_dim: usize,
    /// Upper bound on a single Krylov step.
    pub max_step: f64,
    /// Local error tolerance of the Krylov step control.
    pub krylov_tol: f64,
}

impl Default for PropagationOptions {
    fn default() -> Self {
        Self {
            t_final: 1e3,
            checkpoint_interval: 5.0,
            stationarity_tol: 1e-8,
            krylov_dim: 30,
            max_step: 50.0,
            krylov_tol: 1e-10,
        }
    }
}

impl PropagationOptions {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.t_final, self.checkpoint_interval, self.stationarity_tol, self.max_step, self.krylov_tol];
        if positive.iter().any(|v| !(v.is_finite() && *v > 0.0)) {
            return Err(Error::Params(format!("propagation options must be positive: {self:?}")));
        }
        if self.krylov_dim < 2 {
            return Err(Error::Params("Krylov dimension must be at least 2".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolveMethod {
    Propagation,
    Preconditioned,
    Dense,
}

#[derive(Debug, Clone)]
pub struct NessSolution {
    pub state: StateVector,
    /// ‖W ρ‖∞ of the returned state.
    pub residual: f64,
    pub wall_time: f64,
    pub method: SolveMethod,
    /// Evolution time at which the residual first met the tolerance, or the
    /// final time when it never did.
    pub converged_at: f64,
    pub converged: bool,
    /// Largest trace error removed at a checkpoint.
    pub max_trace_drift: f64,
    pub matvecs: usize,
}

/// ‖W ρ‖∞ in the generator's coordinates.
pub fn stationarity_residual<G: Generator + ?Sized>(w: &G, state: &StateVector) -> Result<f64> {
    let x = w.compress(state)?;
    Ok(max_abs(&w.apply_vec(&x)))
}

/// Evolves `rho0` under `w` until stationary or until `t_final`.
///
/// Not converging is reported through [`NessSolution::converged`], not as
/// an error; errors are reserved for invalid input and numerical breakdown.
pub fn evolve_to_ness<G: Generator + ?Sized>(
    w: &G,
    rho0: &StateVector,
    opts: &PropagationOptions,
) -> Result<NessSolution> {
    opts.validate()?;
    if rho0.n_sites() != w.n_sites() {
        return Err(Error::Dimension { expected: w.n_sites(), got: rho0.n_sites() });
    }
    rho0.validate_density(1e-10)?;
    let start = Instant::now();
    let mut x = w.compress(rho0)?;
    let mut prop = KrylovPropagator::new(KrylovSettings {
        krylov_dim: opts.krylov_dim,
        tol: opts.krylov_tol,
        max_step: opts.max_step,
    });

    let mut t = 0.0;
    let mut drift: f64 = 0.0;
    let mut residual = max_abs(&w.apply_vec(&x));
    let mut converged = residual <= opts.stationarity_tol;
    while !converged && t < opts.t_final {
        let dt = opts.checkpoint_interval.min(opts.t_final - t);
        prop.advance(w, &mut x, t, dt)?;
        t += dt;
        let tr = w.trace(&x);
        drift = drift.max((tr - ONE).norm());
        if !tr.re.is_finite() || tr.norm() < 1e-300 {
            return Err(Error::KrylovBreakdown { time: t, reason: format!("trace collapsed to {tr}") });
        }
        let inv = ONE / tr;
        x.iter_mut().for_each(|v| *v *= inv);
        w.hermitize(&mut x);
        residual = max_abs(&w.apply_vec(&x));
        converged = residual <= opts.stationarity_tol;
    }
    Ok(NessSolution {
        state: w.expand(&x),
        residual,
        wall_time: start.elapsed().as_secs_f64(),
        method: SolveMethod::Propagation,
        converged_at: t,
        converged,
        max_trace_drift: drift,
        matvecs: prop.stats.matvecs + (t / opts.checkpoint_interval).ceil() as usize + 1,
    })
}

/// Settings of [`solve_ness_preconditioned`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GmresOptions {
    pub stationarity_tol: f64,
    pub restart: usize,
    pub max_iter: usize,
    /// Outer corrections (each a full GMRES solve) before giving up.
    pub max_outer: usize,
}

impl Default for GmresOptions {
    fn default() -> Self {
        Self { stationarity_tol: 1e-8, restart: 40, max_iter: 2000, max_outer: 6 }
    }
}

/// Relative decay rate below which a mode of A counts as undamped.
pub const DARK_MODE_TOL: f64 = 1e-9;

/// Steady state by GMRES on S⁻¹W, where S is the jump-free part
/// ρ ↦ Aρ + ρA† inverted blockwise.
///
/// Each outer pass solves S⁻¹W δ = -S⁻¹W x for a correction to the current
/// estimate x, then renormalizes the trace and re-Hermitizes. The
/// stationarity residual is always measured with the unpreconditioned W.
///
/// Refuses generators whose jump-free part has an undamped mode: there the
/// steady state may be degenerate and only propagation selects the one
/// reached from `rho0`.
pub fn solve_ness_preconditioned(
    g: &BlockGenerator,
    rho0: &StateVector,
    opts: &GmresOptions,
) -> Result<NessSolution> {
    if !(opts.stationarity_tol > 0.0) || opts.restart < 1 || opts.max_outer < 1 {
        return Err(Error::Params(format!("invalid GMRES options: {opts:?}")));
    }
    rho0.validate_density(1e-10)?;
    let start = Instant::now();
    let pre = g.sylvester_inverse()?;
    let slowest = pre.slowest_decay();
    if slowest < DARK_MODE_TOL {
        return Err(Error::DarkState(slowest));
    }
    let n = g.len();
    let op = |v: &[C64]| {
        let wv = g.apply_vec(v);
        let mut out = vec![ZERO; n];
        pre.apply_into(&wv, &mut out);
        out
    };
    let mut x = g.compress(rho0)?;
    let mut residual = max_abs(&g.apply_vec(&x));
    let mut matvecs = 1;
    let mut outer = 0;
    while residual > opts.stationarity_tol && outer < opts.max_outer {
        outer += 1;
        let b: Vec<C64> = op(&x).into_iter().map(|v| -v).collect();
        let mut delta = vec![ZERO; n];
        // the preconditioned residual tracks the true one only roughly
        let target = 1e-2 * opts.stationarity_tol / max_abs(&b).max(1e-300);
        let out = gmres(&op, &b, &mut delta, opts.restart, target.min(1e-6), opts.max_iter);
        matvecs += out.iterations + 2;
        axpy(ONE, &delta, &mut x);
        let tr = g.trace(&x);
        if !tr.re.is_finite() || tr.norm() < 1e-300 {
            return Err(Error::Linalg(format!("GMRES correction collapsed the trace to {tr}")));
        }
        let inv = ONE / tr;
        x.iter_mut().for_each(|v| *v *= inv);
        g.hermitize(&mut x);
        residual = max_abs(&g.apply_vec(&x));
    }
    Ok(NessSolution {
        state: g.expand(&x),
        residual,
        wall_time: start.elapsed().as_secs_f64(),
        method: SolveMethod::Preconditioned,
        converged_at: 0.0,
        converged: residual <= opts.stationarity_tol,
        max_trace_drift: 0.0,
        matvecs,
    })
}

/// Reciprocal condition number below which the bordered system is treated
/// as singular.
const RCOND_MIN: f64 = 1e-13;

/// Steady state from the null space of a dense copy of W.
///
/// When W preserves the magnetization sectors the problem is restricted to
/// block-diagonal operators first. One row of W ρ = 0 is replaced by
/// tr ρ = 1; a singular result means the null space is not one-dimensional.
pub fn solve_ness_dense(w: &Liouvillian) -> Result<NessSolution> {
    let n = w.n_sites();
    if n > DENSE_MAX_SITES {
        return Err(Error::TooLarge { n_sites: n, max: DENSE_MAX_SITES });
    }
    let start = Instant::now();
    let full = w.explicit();
    let d = w.hilbert_dim();
    let idx: Vec<usize> = if w.preserves_magnetization() {
        w.magnetization_sector()?.full_indices()
    } else {
        (0..d * d).collect()
    };
    let mut pos = vec![usize::MAX; d * d];
    for (k, &i) in idx.iter().enumerate() {
        pos[i] = k;
    }
    let len = idx.len();
    let mut m = Array2::<C64>::zeros((len, len));
    for (k, &i) in idx.iter().enumerate() {
        for (c, v) in full.row(i) {
            // columns outside the subspace only meet zero coordinates
            if pos[c] != usize::MAX {
                m[[k, pos[c]]] = v;
            }
        }
    }

    let bordered = {
        let mut b = m.clone();
        b.row_mut(0).fill(ZERO);
        for a in 0..d {
            b[[0, pos[a + d * a]]] = ONE;
        }
        b
    };
    let mut rhs = Array1::<C64>::zeros(len);
    rhs[0] = ONE;
    let solved = (|| -> Result<(Array1<C64>, f64)> {
        let lu = bordered.factorize()?;
        let x = lu.solve(&rhs)?;
        // one step of iterative refinement
        let r = &rhs - &bordered.dot(&x);
        Ok((&x + &lu.solve(&r)?, lu.rcond()?))
    })();
    let x = match solved {
        Ok((x, rcond)) if rcond >= RCOND_MIN && x.iter().all(|v| v.is_finite()) => x,
        _ => {
            return Err(match m.svd(false, false) {
                Ok((_, s, _)) if len >= 2 => Error::DegenerateNullSpace(s[len - 1], s[len - 2]),
                Ok(_) => Error::DegenerateNullSpace(0.0, 0.0),
                Err(e) => e.into(),
            })
        }
    };

    let mut vecx = vec![ZERO; d * d];
    for (k, &i) in idx.iter().enumerate() {
        vecx[i] = x[k];
    }
    let mut state = StateVector::new(n, vecx)?;
    {
        let mut data = state.as_slice().to_vec();
        w.hermitize(&mut data);
        state = StateVector::new(n, data)?;
    }
    let residual = stationarity_residual(w, &state)?;
    Ok(NessSolution {
        state,
        residual,
        wall_time: start.elapsed().as_secs_f64(),
        method: SolveMethod::Dense,
        converged_at: 0.0,
        converged: true,
        max_trace_drift: 0.0,
        matvecs: 0,
    })
}

/// Fixed-step fourth-order Runge-Kutta evolution, for cross-checking the
/// Krylov propagator on small systems.
pub fn evolve_rk4<G: Generator + ?Sized>(w: &G, x: &mut [C64], dt: f64, steps: usize) {
    let n = x.len();
    let mut k = vec![ZERO; n];
    let mut acc = vec![ZERO; n];
    let mut tmp = vec![ZERO; n];
    let h = C64::new(dt, 0.0);
    for _ in 0..steps {
        acc.copy_from_slice(x);
        w.apply_into(x, &mut k);
        for i in 0..n {
            acc[i] += k[i] * (h / 6.0);
            tmp[i] = x[i] + k[i] * (h / 2.0);
        }
        let mut k2 = vec![ZERO; n];
        w.apply_into(&tmp, &mut k2);
        for i in 0..n {
            acc[i] += k2[i] * (h / 3.0);
            tmp[i] = x[i] + k2[i] * (h / 2.0);
        }
        w.apply_into(&tmp, &mut k);
        for i in 0..n {
            acc[i] += k[i] * (h / 3.0);
            tmp[i] = x[i] + k[i] * h;
        }
        w.apply_into(&tmp, &mut k);
        for i in 0..n {
            acc[i] += k[i] * (h / 6.0);
        }
        x.copy_from_slice(&acc);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::liouville::Representation;
    use crate::operators::{embed_site_operator, JumpOperator, SIGMA_MINUS, SIGMA_PLUS};
    use crate::sparse::SparseOperator;

    fn single_site(gp: f64, gm: f64) -> Liouvillian {
        let up = embed_site_operator(1, 0, &SIGMA_PLUS).unwrap();
        let dn = embed_site_operator(1, 0, &SIGMA_MINUS).unwrap();
        let jumps = vec![
            JumpOperator { op: up, gamma: gp, shift: 1 },
            JumpOperator { op: dn, gamma: gm, shift: -1 },
        ];
        Liouvillian::build(SparseOperator::zeros(2), jumps, Representation::ExplicitSparse).unwrap()
    }

    #[test]
    fn single_site_pump_populations() {
        // detailed balance: p_up / p_down = γ+ / γ-
        let w = single_site(0.75, 0.25);
        for sol in [
            solve_ness_dense(&w).unwrap(),
            evolve_to_ness(&w, &StateVector::maximally_mixed(1), &PropagationOptions::default()).unwrap(),
        ] {
            let rho = sol.state.to_density();
            assert!((rho[[0, 0]].re - 0.75).abs() < 1e-9, "{:?}", sol.method);
            assert!((rho[[1, 1]].re - 0.25).abs() < 1e-9);
            assert!(rho[[0, 1]].norm() < 1e-12);
            assert!(sol.converged);
        }
    }

    #[test]
    fn zero_generator_is_degenerate() {
        let w = Liouvillian::build(SparseOperator::zeros(2), vec![], Representation::ExplicitSparse).unwrap();
        assert!(matches!(solve_ness_dense(&w), Err(Error::DegenerateNullSpace(..))));
    }

    #[test]
    fn invalid_initial_state_rejected() {
        let w = single_site(0.5, 0.5);
        let bad = StateVector::new(1, vec![ONE, ZERO, ZERO, ONE]).unwrap(); // trace 2
        assert!(matches!(
            evolve_to_ness(&w, &bad, &PropagationOptions::default()),
            Err(Error::NotDensityMatrix(_))
        ));
        let neg = StateVector::new(1, vec![C64::new(1.5, 0.0), ZERO, ZERO, C64::new(-0.5, 0.0)]).unwrap();
        assert!(evolve_to_ness(&w, &neg, &PropagationOptions::default()).is_err());
    }

    #[test]
    fn unconverged_run_is_flagged() {
        let w = single_site(0.5, 0.5);
        let opts = PropagationOptions { t_final: 0.1, checkpoint_interval: 0.05, ..Default::default() };
        let sol = evolve_to_ness(&w, &StateVector::basis_state(1, 0), &opts).unwrap();
        assert!(!sol.converged);
        assert!(sol.residual > opts.stationarity_tol);
    }

    #[test]
    fn rk4_and_krylov_agree_on_relaxation() {
        // p_up(t) - 1/2 = ½ e^{-γ t} with γ = γ+ + γ- = 1
        let w = single_site(0.5, 0.5);
        let rho0 = StateVector::basis_state(1, 0);
        let mut a = rho0.as_slice().to_vec();
        let mut b = a.clone();
        evolve_rk4(&w, &mut a, 1e-3, 2000);
        let mut prop = KrylovPropagator::new(KrylovSettings::default());
        prop.advance(&w, &mut b, 0.0, 2.0).unwrap();
        let exact = 0.5 + 0.5 * (-2.0f64).exp();
        assert!((a[0].re - exact).abs() < 1e-12);
        assert!((b[0].re - exact).abs() < 1e-9);
    }
}
