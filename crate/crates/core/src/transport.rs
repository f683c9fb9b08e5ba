//! Spin currents, their conservation, rectification and parameter sweeps.

use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lattice::{enumerate_small_geometries, FieldAssignment, FieldProfile, LatticeSpec};
use crate::liouville::{Liouvillian, Representation, StateVector};
use crate::operators::{
    build_hamiltonian, build_jump_operators, current_operator, strong_site_symmetry, DriveSpec, ModelParams,
};
use crate::sparse::SparseOperator;
use crate::steady::{
    evolve_to_ness, solve_ness_dense, solve_ness_preconditioned, GmresOptions, NessSolution,
    PropagationOptions, SolveMethod,
};

/// Largest imaginary part tolerated in an expectation value.
pub const IMAG_TOL: f64 = 1e-9;

/// tr(ρ O) for a Hermitian observable O.
pub fn expectation(s: &StateVector, obs: &SparseOperator) -> Result<f64> {
    let d = s.hilbert_dim();
    if obs.dim() != d {
        return Err(Error::Dimension { expected: d, got: obs.dim() });
    }
    if !obs.is_hermitian(1e-12) {
        return Err(Error::Params("observable is not Hermitian".into()));
    }
    let x = s.as_slice();
    // tr(ρO) = Σ_{a,b} ρ[a, b] O[b, a]
    let mut acc = num_complex::Complex64::new(0.0, 0.0);
    for b in 0..d {
        for (a, v) in obs.row(b) {
            acc += x[a + d * b] * v;
        }
    }
    if acc.im.abs() > IMAG_TOL {
        return Err(Error::ComplexExpectation(acc.im));
    }
    Ok(acc.re)
}

/// Bond currents of a steady state together with the two conservation
/// diagnostics.
#[derive(Debug, Clone, PartialEq)]
pub struct CurrentReport {
    /// J on every bond (i, j) with i < j, i.e. oriented from the lower
    /// column to the higher one, and downwards along vertical bonds.
    pub bond_currents: Vec<((usize, usize), f64)>,
    /// Sum of transport-bond currents across the cut between columns c and
    /// c + 1, for c = 1, 2, ...
    pub column_sums: Vec<f64>,
    /// Σ_j J_kj for every site without a reservoir.
    pub divergence: Vec<(usize, f64)>,
}

impl CurrentReport {
    /// J_kj from site k to site j, if the two are bonded.
    pub fn current(&self, k: usize, j: usize) -> Option<f64> {
        let key = (k.min(j), k.max(j));
        let (_, v) = self.bond_currents.iter().find(|(b, _)| *b == key)?;
        Some(if k < j { *v } else { -*v })
    }

    pub fn max_divergence(&self) -> f64 {
        self.divergence.iter().map(|(_, v)| v.abs()).fold(0.0, f64::max)
    }
}

pub fn bond_currents(s: &StateVector, spec: &LatticeSpec, alpha: f64) -> Result<CurrentReport> {
    let n = spec.n_sites();
    if s.n_sites() != n {
        return Err(Error::Dimension { expected: n, got: s.n_sites() });
    }
    let bond_currents = spec
        .bonds()
        .iter()
        .map(|&(i, j)| Ok(((i, j), expectation(s, &current_operator(n, i, j, alpha)?)?)))
        .collect::<Result<Vec<_>>>()?;
    let lookup = |b: (usize, usize)| bond_currents.iter().find(|(k, _)| *k == b).map(|(_, v)| *v).unwrap();
    let column_sums = (1..spec.n_columns())
        .map(|c| spec.cut_bonds(c).into_iter().map(lookup).sum())
        .collect();
    let divergence = spec
        .interior_sites()
        .into_iter()
        .map(|k| {
            let total = spec
                .neighbors(k)
                .into_iter()
                .map(|j| if k < j { lookup((k, j)) } else { -lookup((j, k)) })
                .sum();
            (k, total)
        })
        .collect();
    Ok(CurrentReport { bond_currents, column_sums, divergence })
}

pub const HOMOGENEITY_TOL: f64 = 1e-5;
pub const DIVERGENCE_TOL: f64 = 1e-6;

/// Column current J (mean over cuts) and the largest pairwise deviation
/// between cuts. A deviation above `tol` means the state is not stationary.
pub fn column_current(report: &CurrentReport, tol: f64) -> Result<(f64, f64)> {
    let sums = &report.column_sums;
    if sums.is_empty() {
        return Err(Error::Lattice("no column cuts".into()));
    }
    let max = sums.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let min = sums.iter().copied().fold(f64::INFINITY, f64::min);
    let residual = max - min;
    if !(residual <= tol) {
        return Err(Error::NotConserved(residual));
    }
    Ok((sums.iter().sum::<f64>() / sums.len() as f64, residual))
}

pub const DEGENERACY_TOL: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rectification {
    pub j_forward: f64,
    pub j_reverse: f64,
    /// `None` when J(f) and J(-f) coincide and R is 0/0.
    pub r: Option<f64>,
}

impl Rectification {
    pub fn is_degenerate(&self) -> bool {
        self.r.is_none()
    }
}

/// R = (J(f) + J(-f)) / (J(f) - J(-f)).
pub fn rectification_coefficient(j_fwd: f64, j_rev: f64, tol: f64) -> Rectification {
    let diff = j_fwd - j_rev;
    let scale = j_fwd.abs().max(j_rev.abs()).max(tol);
    let r = if diff.abs() <= tol * scale { None } else { Some((j_fwd + j_rev) / diff) };
    Rectification { j_forward: j_fwd, j_reverse: j_rev, r }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    Propagation,
    Preconditioned,
    Dense,
}

/// Solver choice and every tolerance used to accept a steady state.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolveOptions {
    pub solver: SolverKind,
    pub propagation: PropagationOptions,
    pub gmres: GmresOptions,
    pub homogeneity_tol: f64,
    pub divergence_tol: f64,
    pub degeneracy_tol: f64,
}

impl Default for SolveOptions {
    fn default() -> Self {
        Self {
            solver: SolverKind::Preconditioned,
            propagation: PropagationOptions::default(),
            gmres: GmresOptions::default(),
            homogeneity_tol: HOMOGENEITY_TOL,
            divergence_tol: DIVERGENCE_TOL,
            degeneracy_tol: DEGENERACY_TOL,
        }
    }
}

/// Steady state of one model plus its currents.
#[derive(Debug, Clone)]
pub struct PointSolution {
    pub ness: NessSolution,
    pub report: CurrentReport,
    /// Mean column current.
    pub j: f64,
    pub homogeneity_residual: f64,
    /// Why the state was not accepted, if it was not.
    pub failure: Option<Error>,
}

impl PointSolution {
    pub fn accepted(&self) -> bool {
        self.failure.is_none()
    }
}

/// Builds W for one model and finds its steady state with the requested
/// solver. Structural problems (bad lattice, parameters) are errors; a
/// state that fails certification is returned with `failure` set.
pub fn solve_point(
    spec: &LatticeSpec,
    params: &ModelParams,
    drive: &DriveSpec,
    opts: &SolveOptions,
) -> Result<PointSolution> {
    let n = spec.n_sites();
    let h = build_hamiltonian(spec, params)?;
    let jumps = build_jump_operators(spec, params, drive)?;
    let repr = match opts.solver {
        SolverKind::Dense => Representation::ExplicitSparse,
        _ => Representation::default_for(n),
    };
    let w = Liouvillian::build(h, jumps, repr)?;
    let rho0 = StateVector::maximally_mixed(n);
    let propagate = |w: &Liouvillian| -> Result<NessSolution> {
        if w.preserves_magnetization() {
            evolve_to_ness(&w.magnetization_sector()?, &rho0, &opts.propagation)
        } else {
            evolve_to_ness(w, &rho0, &opts.propagation)
        }
    };
    let ness = match opts.solver {
        SolverKind::Dense => solve_ness_dense(&w)?,
        SolverKind::Propagation => propagate(&w)?,
        // a strong symmetry leaves W with several steady states; GMRES would
        // return an arbitrary mixture of them
        SolverKind::Preconditioned if w.preserves_magnetization() && strong_site_symmetry(spec, params, drive).is_none() => {
            match solve_ness_preconditioned(&w.magnetization_sector()?, &rho0, &opts.gmres) {
                Ok(sol) if sol.converged => sol,
                Ok(_) | Err(Error::DarkState(_)) => propagate(&w)?,
                Err(e) => return Err(e),
            }
        }
        SolverKind::Preconditioned => propagate(&w)?,
    };
    let tol = match ness.method {
        SolveMethod::Propagation => opts.propagation.stationarity_tol,
        SolveMethod::Preconditioned => opts.gmres.stationarity_tol,
        SolveMethod::Dense => 1e-10,
    };
    let report = bond_currents(&ness.state, spec, params.alpha)?;
    let mut failure = None;
    if !ness.converged || !(ness.residual <= tol) {
        failure = Some(Error::Unconverged { residual: ness.residual, tol });
    }
    if let Some(&(site, value)) = report
        .divergence
        .iter()
        .find(|(_, v)| !(v.abs() <= opts.divergence_tol))
    {
        failure.get_or_insert(Error::Divergence { site, value });
    }
    let sums = &report.column_sums;
    let homogeneity_residual = sums.iter().copied().fold(f64::NEG_INFINITY, f64::max)
        - sums.iter().copied().fold(f64::INFINITY, f64::min);
    let j = match column_current(&report, opts.homogeneity_tol) {
        Ok((j, _)) => j,
        Err(e) => {
            failure.get_or_insert(e);
            sums.iter().sum::<f64>() / sums.len() as f64
        }
    };
    Ok(PointSolution { ness, report, j, homogeneity_residual, failure })
}

/// What a sweep keeps of a [`PointSolution`] (states are dropped).
#[derive(Debug, Clone, PartialEq)]
pub struct PointSummary {
    pub j: f64,
    pub homogeneity_residual: f64,
    pub max_divergence: f64,
    pub stationarity: f64,
    pub wall_time: f64,
    pub method: Option<SolveMethod>,
    pub failure: Option<Error>,
}

impl PointSummary {
    pub fn accepted(&self) -> bool {
        self.failure.is_none()
    }

    fn from_result(r: Result<PointSolution>, wall_time: f64) -> Self {
        match r {
            Ok(p) => Self {
                j: p.j,
                homogeneity_residual: p.homogeneity_residual,
                max_divergence: p.report.max_divergence(),
                stationarity: p.ness.residual,
                wall_time,
                method: Some(p.ness.method),
                failure: p.failure,
            },
            Err(e) => Self {
                j: f64::NAN,
                homogeneity_residual: f64::NAN,
                max_divergence: f64::NAN,
                stationarity: f64::NAN,
                wall_time,
                method: None,
                failure: Some(e),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub delta: f64,
    pub forward: PointSummary,
    pub reverse: PointSummary,
    /// Present only when both directions were accepted.
    pub rectification: Option<Rectification>,
}

impl SweepRow {
    pub fn failed(&self) -> bool {
        self.rectification.is_none()
    }

    pub fn homogeneity_residual(&self) -> f64 {
        self.forward.homogeneity_residual.max(self.reverse.homogeneity_residual)
    }

    pub fn wall_time(&self) -> f64 {
        self.forward.wall_time + self.reverse.wall_time
    }
}

fn timed_point(spec: &LatticeSpec, params: &ModelParams, drive: &DriveSpec, opts: &SolveOptions) -> PointSummary {
    let start = Instant::now();
    let r = solve_point(spec, params, drive, opts);
    PointSummary::from_result(r, start.elapsed().as_secs_f64())
}

/// Forward and reversed solves at one Δ.
pub fn solve_row(spec: &LatticeSpec, params: &ModelParams, drive: &DriveSpec, opts: &SolveOptions) -> SweepRow {
    let reversed = drive.reversed();
    let (forward, reverse) = rayon::join(
        || timed_point(spec, params, drive, opts),
        || timed_point(spec, params, &reversed, opts),
    );
    let rectification = (forward.accepted() && reverse.accepted())
        .then(|| rectification_coefficient(forward.j, reverse.j, opts.degeneracy_tol));
    SweepRow { delta: params.delta, forward, reverse, rectification }
}

/// R against Δ. `params` is the template for every row (its `delta` is
/// replaced). Rows run in parallel on the current rayon pool and come back
/// in the order of `deltas`.
pub fn sweep(
    spec: &LatticeSpec,
    params: &ModelParams,
    drive: &DriveSpec,
    deltas: &[f64],
    opts: &SolveOptions,
) -> Result<Vec<SweepRow>> {
    // reject structural problems once instead of in every row
    params.validate(spec)?;
    build_jump_operators(spec, params, drive)?;
    if let Some(d) = deltas.iter().find(|d| !d.is_finite()) {
        return Err(Error::Params(format!("delta {d} is not finite")));
    }
    Ok(deltas
        .par_iter()
        .map(|&delta| solve_row(spec, &ModelParams { delta, ..params.clone() }, drive, opts))
        .collect())
}

/// `lo, lo + step, ..., hi`, with values rounded to twelve decimals so grid
/// points print exactly.
pub fn delta_grid(lo: f64, hi: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(hi >= lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::Params(format!("invalid grid [{lo}, {hi}] step {step}")));
    }
    let count = ((hi - lo) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| ((lo + i as f64 * step) * 1e12).round() / 1e12).collect())
}

/// Δ values at which the small-geometry scan is evaluated.
pub const SCAN_DELTAS: [f64; 3] = [0.0, 0.5, 1.0];

#[derive(Debug, Clone)]
pub struct ScanEntry {
    pub geometry: usize,
    pub row: SweepRow,
}

#[derive(Debug, Clone)]
pub struct ScanReport {
    pub geometries: Vec<LatticeSpec>,
    pub entries: Vec<ScanEntry>,
}

impl ScanReport {
    /// Largest |R| over rows with a defined R.
    pub fn max_abs_r(&self) -> f64 {
        self.entries
            .iter()
            .filter_map(|e| e.row.rectification.and_then(|r| r.r))
            .map(f64::abs)
            .fold(0.0, f64::max)
    }

    pub fn failures(&self) -> usize {
        self.entries.iter().filter(|e| e.row.failed()).count()
    }

    pub fn degenerate(&self) -> usize {
        self.entries
            .iter()
            .filter(|e| e.row.rectification.is_some_and(|r| r.is_degenerate()))
            .count()
    }
}

/// Every `n_sites`-site sub-lattice of the six-site triangle with the given
/// reservoir counts, under a homogeneous field `h`, at each of `deltas`.
pub fn scan_small_geometries(
    n_sites: usize,
    left_count: usize,
    right_count: usize,
    h: f64,
    drive: &DriveSpec,
    deltas: &[f64],
    opts: &SolveOptions,
) -> Result<ScanReport> {
    if left_count == 0 || right_count == 0 {
        return Err(Error::Params("reservoir counts must be at least 1".into()));
    }
    let geometries = enumerate_small_geometries(n_sites, left_count, right_count)?;
    let jobs: Vec<(usize, f64)> = (0..geometries.len())
        .flat_map(|g| deltas.iter().map(move |&d| (g, d)))
        .collect();
    let entries = jobs
        .par_iter()
        .map(|&(g, delta)| {
            let spec = &geometries[g];
            let field = FieldAssignment {
                profile: FieldProfile::Homogeneous(h),
                values: vec![h; spec.n_sites()],
            };
            ScanEntry { geometry: g, row: solve_row(spec, &ModelParams::new(delta, field), drive, opts) }
        })
        .collect();
    Ok(ScanReport { geometries, entries })
}

/// The six-site scan: [`scan_small_geometries`] with six sites, separate
/// reservoirs and Δ in [`SCAN_DELTAS`].
pub fn scan_six_site(left_count: usize, right_count: usize, h: f64, opts: &SolveOptions) -> Result<ScanReport> {
    scan_small_geometries(
        6,
        left_count,
        right_count,
        h,
        &DriveSpec::separate(crate::operators::Direction::Forward),
        &SCAN_DELTAS,
        opts,
    )
}
