//! Many-body operators on the 2^N spin Hilbert space: the XXZ Hamiltonian,
//! reservoir jump operators and the observables used for transport.
//!
//! Local basis: index 0 is spin up (σ^z = +1), index 1 is spin down. Site 0
//! is the leftmost tensor factor, so it owns the most significant bit of a
//! basis index.

use crate::error::{Error, Result};
use crate::lattice::{FieldAssignment, LatticeSpec};
use crate::sparse::{SparseOperator, C64, I, ONE, ZERO};

/// A single-site operator as a row-major 2x2 matrix.
pub type Local = [[C64; 2]; 2];

const NEG: C64 = C64::new(-1.0, 0.0);

pub const SIGMA_X: Local = [[ZERO, ONE], [ONE, ZERO]];
pub const SIGMA_Y: Local = [[ZERO, C64::new(0.0, -1.0)], [I, ZERO]];
pub const SIGMA_Z: Local = [[ONE, ZERO], [ZERO, NEG]];
/// Raising operator (σ^x + iσ^y)/2 = |↑⟩⟨↓|.
pub const SIGMA_PLUS: Local = [[ZERO, ONE], [ZERO, ZERO]];
/// Lowering operator (σ^x - iσ^y)/2 = |↓⟩⟨↑|.
pub const SIGMA_MINUS: Local = [[ZERO, ZERO], [ONE, ZERO]];

/// Acts with `local` on `site` (0-based) and as the identity elsewhere.
pub fn embed_site_operator(n_sites: usize, site: usize, local: &Local) -> Result<SparseOperator> {
    if site >= n_sites {
        return Err(Error::SiteOutOfRange { site, n_sites });
    }
    let dim = 1usize << n_sites;
    let shift = n_sites - 1 - site;
    let triplets = (0..dim).flat_map(|b| {
        let bit = (b >> shift) & 1;
        (0..2).filter_map(move |out| {
            let v = local[out][bit];
            (v != ZERO).then(|| ((b & !(1 << shift)) | (out << shift), b, v))
        })
    });
    Ok(SparseOperator::from_triplets(dim, triplets))
}

fn two_site(n_sites: usize, i: usize, a: &Local, j: usize, b: &Local) -> Result<SparseOperator> {
    Ok(embed_site_operator(n_sites, i, a)?.mul(&embed_site_operator(n_sites, j, b)?))
}

/// Model couplings. `alpha` multiplies the XY exchange, `delta` the Ising
/// term; `f` is the reservoir polarization.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub alpha: f64,
    pub delta: f64,
    pub field: FieldAssignment,
    pub f: f64,
}

impl ModelParams {
    /// α = 1 and f = 1, the operating point used throughout.
    pub fn new(delta: f64, field: FieldAssignment) -> Self {
        Self { alpha: 1.0, delta, field, f: 1.0 }
    }

    pub fn validate(&self, spec: &LatticeSpec) -> Result<()> {
        if !(self.f.abs() <= 1.0) {
            return Err(Error::Params(format!("polarization f = {} outside [-1, 1]", self.f)));
        }
        if !self.alpha.is_finite() || !self.delta.is_finite() {
            return Err(Error::Params("alpha and delta must be finite".into()));
        }
        if self.field.values.len() != spec.n_sites() {
            return Err(Error::Params(format!(
                "field has {} values for {} sites",
                self.field.values.len(),
                spec.n_sites()
            )));
        }
        if self.field.values.iter().any(|h| !h.is_finite()) {
            return Err(Error::Params("field values must be finite".into()));
        }
        Ok(())
    }
}

/// How the right-hand reservoir couples to the lattice.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DriveMode {
    /// One independent reservoir per boundary site.
    Separate,
    /// A single reservoir coupled to the sum of σ^± over the right column.
    CollectiveUniform,
    /// As `CollectiveUniform` with phases 1, i, 1, i, ... along the column.
    CollectivePhased,
}

/// Which side pumps up: `Forward` has f_L = +f, f_R = -f.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Direction {
    Forward,
    Reversed,
}

impl Direction {
    pub fn sign(self) -> f64 {
        match self {
            Direction::Forward => 1.0,
            Direction::Reversed => -1.0,
        }
    }

    pub fn flipped(self) -> Self {
        match self {
            Direction::Forward => Direction::Reversed,
            Direction::Reversed => Direction::Forward,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct DriveSpec {
    pub mode: DriveMode,
    pub direction: Direction,
}

impl DriveSpec {
    pub fn separate(direction: Direction) -> Self {
        Self { mode: DriveMode::Separate, direction }
    }

    pub fn reversed(self) -> Self {
        Self { direction: self.direction.flipped(), ..self }
    }
}

/// A jump operator with its rate.
///
/// `shift` is the change in the number of up spins it causes (+1 for
/// raising, -1 for lowering).
#[derive(Debug, Clone, PartialEq)]
pub struct JumpOperator {
    pub op: SparseOperator,
    pub gamma: f64,
    pub shift: i32,
}

/// H = Σ_⟨ij⟩ [α(σ^x_i σ^x_j + σ^y_i σ^y_j) + Δ σ^z_i σ^z_j] + Σ_i h_i σ^z_i.
pub fn build_hamiltonian(spec: &LatticeSpec, params: &ModelParams) -> Result<SparseOperator> {
    params.validate(spec)?;
    let n = spec.n_sites();
    let alpha = C64::new(params.alpha, 0.0);
    let delta = C64::new(params.delta, 0.0);
    let mut h = SparseOperator::zeros(1 << n);
    for &(i, j) in spec.bonds() {
        let xy = two_site(n, i, &SIGMA_X, j, &SIGMA_X)?.add(&two_site(n, i, &SIGMA_Y, j, &SIGMA_Y)?);
        h = h.add(&xy.scale(alpha)).add(&two_site(n, i, &SIGMA_Z, j, &SIGMA_Z)?.scale(delta));
    }
    for (i, &hi) in params.field.values.iter().enumerate() {
        h = h.add(&embed_site_operator(n, i, &SIGMA_Z)?.scale(C64::new(hi, 0.0)));
    }
    Ok(h)
}

/// Jump amplitudes below this are treated as exactly zero and dropped.
const ZERO_AMPLITUDE: f64 = 1e-14;

fn drive_pair(n: usize, weights: &[(usize, C64)], f_side: f64, gamma: f64) -> Result<Vec<JumpOperator>> {
    let mut out = Vec::with_capacity(2);
    for (local, sign, shift) in [(&SIGMA_PLUS, 1.0, 1), (&SIGMA_MINUS, -1.0, -1)] {
        let amp2 = 1.0 + sign * f_side;
        if amp2 <= ZERO_AMPLITUDE {
            continue;
        }
        let mut op = SparseOperator::zeros(1 << n);
        for &(site, w) in weights {
            op = op.add(&embed_site_operator(n, site, local)?.scale(w));
        }
        out.push(JumpOperator { op: op.scale(C64::new(amp2.sqrt(), 0.0)), gamma, shift });
    }
    Ok(out)
}

/// L_{j,±} = √(1 ± f_j) σ^±_j for every reservoir site, with
/// f_j = ±f on the left and ∓f on the right according to the drive
/// direction. Collective modes replace the right-hand operators by a single
/// pair acting on the (phased) sum over the right column, at the right
/// column's per-site rate.
pub fn build_jump_operators(
    spec: &LatticeSpec,
    params: &ModelParams,
    drive: &DriveSpec,
) -> Result<Vec<JumpOperator>> {
    params.validate(spec)?;
    let n = spec.n_sites();
    let f_left = drive.direction.sign() * params.f;
    let f_right = -f_left;

    let mut jumps = Vec::new();
    for r in spec.left_reservoir() {
        jumps.extend(drive_pair(n, &[(r.site, ONE)], f_left, r.gamma)?);
    }
    let right = spec.right_reservoir();
    match drive.mode {
        DriveMode::Separate => {
            for r in right {
                jumps.extend(drive_pair(n, &[(r.site, ONE)], f_right, r.gamma)?);
            }
        }
        DriveMode::CollectiveUniform | DriveMode::CollectivePhased => {
            if right.len() < 2 {
                return Err(Error::CollectiveDrive(right.len()));
            }
            let gamma = right[0].gamma;
            if right.iter().any(|r| r.gamma != gamma) {
                return Err(Error::Params(
                    "collective drive needs equal couplings on the right column".into(),
                ));
            }
            jumps.extend(drive_pair(n, &collective_weights(spec, drive.mode), f_right, gamma)?);
        }
    }
    Ok(jumps)
}

/// Site weights of the collective right-hand jump: 1 on every right
/// reservoir site, with i on every second one for the phased variant.
pub fn collective_weights(spec: &LatticeSpec, mode: DriveMode) -> Vec<(usize, C64)> {
    let phased = mode == DriveMode::CollectivePhased;
    spec.right_reservoir()
        .iter()
        .enumerate()
        .map(|(k, r)| (r.site, if phased && k % 2 == 1 { I } else { ONE }))
        .collect()
}

/// A nontrivial site permutation that commutes with H and with every jump
/// operator, if there is one.
///
/// The permutation must map bonds onto bonds and preserve the field, fix
/// every separately driven site, and map a collective jump onto itself.
/// Such a strong symmetry conserves the weight of each of its eigenspaces,
/// so the steady state is not unique.
pub fn strong_site_symmetry(spec: &LatticeSpec, params: &ModelParams, drive: &DriveSpec) -> Option<Vec<usize>> {
    let n = spec.n_sites();
    let mut fixed = vec![false; n];
    for r in spec.left_reservoir() {
        fixed[r.site] = true;
    }
    let weights: Vec<Option<C64>> = match drive.mode {
        DriveMode::Separate => {
            for r in spec.right_reservoir() {
                fixed[r.site] = true;
            }
            vec![None; n]
        }
        mode => {
            let mut w = vec![None; n];
            for (site, weight) in collective_weights(spec, mode) {
                w[site] = Some(weight);
            }
            w
        }
    };
    let h = &params.field.values;
    let allowed = |i: usize, j: usize| {
        (if fixed[i] { i == j } else { !fixed[j] }) && h[i] == h[j] && weights[i] == weights[j]
            && spec.neighbors(i).len() == spec.neighbors(j).len()
    };

    fn extend(
        spec: &LatticeSpec,
        allowed: &dyn Fn(usize, usize) -> bool,
        perm: &mut Vec<usize>,
        used: &mut [bool],
    ) -> bool {
        let i = perm.len();
        if i == spec.n_sites() {
            return perm.iter().enumerate().any(|(a, &b)| a != b);
        }
        for j in 0..spec.n_sites() {
            if used[j] || !allowed(i, j) {
                continue;
            }
            if spec.neighbors(i).iter().any(|&k| k < i && !spec.is_bond(perm[k], j)) {
                continue;
            }
            perm.push(j);
            used[j] = true;
            if extend(spec, allowed, perm, used) {
                return true;
            }
            perm.pop();
            used[j] = false;
        }
        false
    }

    let mut perm = Vec::with_capacity(n);
    extend(spec, &allowed, &mut perm, &mut vec![false; n]).then_some(perm)
}

/// 2α(σ^x_k σ^y_j - σ^y_k σ^x_j) for any pair of distinct sites.
pub fn current_operator(n_sites: usize, k: usize, j: usize, alpha: f64) -> Result<SparseOperator> {
    if k == j {
        return Err(Error::NotABond(k, j));
    }
    let xy = two_site(n_sites, k, &SIGMA_X, j, &SIGMA_Y)?;
    let yx = two_site(n_sites, k, &SIGMA_Y, j, &SIGMA_X)?;
    Ok(xy.sub(&yx).scale(C64::new(2.0 * alpha, 0.0)))
}

/// Current observable from site `k` to site `j`; the pair must be a bond.
pub fn current_observable(spec: &LatticeSpec, k: usize, j: usize, alpha: f64) -> Result<SparseOperator> {
    let n = spec.n_sites();
    for s in [k, j] {
        if s >= n {
            return Err(Error::SiteOutOfRange { site: s, n_sites: n });
        }
    }
    if !spec.is_bond(k, j) {
        return Err(Error::NotABond(k, j));
    }
    current_operator(n, k, j, alpha)
}

/// σ^z on a single site.
pub fn magnetization(n_sites: usize, k: usize) -> Result<SparseOperator> {
    embed_site_operator(n_sites, k, &SIGMA_Z)
}

/// Σ_k σ^z_k.
pub fn total_magnetization(n_sites: usize) -> SparseOperator {
    let dim = 1usize << n_sites;
    SparseOperator::from_triplets(
        dim,
        (0..dim).map(|b| (b, b, C64::new(n_sites as f64 - 2.0 * b.count_ones() as f64, 0.0))),
    )
}
