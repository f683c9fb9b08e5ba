//! Vectorized Lindblad generator.
//!
//! Density matrices are column-stacked: entry ρ[a, b] of a d x d matrix
//! lives at index `a + d * b`, so vec([[a, b], [c, d]]) = (a, c, b, d) and
//! vec(ABC) = (Cᵀ ⊗ A) vec(B). With that convention
//!
//! W = -i(1 ⊗ H - Hᵀ ⊗ 1) + Σ_j γ_j [L_j* ⊗ L_j - ½ 1 ⊗ L_j†L_j - ½ (L_j†L_j)ᵀ ⊗ 1].
//!
//! Two representations are provided. [`Representation::ExplicitSparse`]
//! materializes W from the Kronecker formula above; it is the reference
//! used by the dense oracle. [`Representation::MatrixFree`] never forms W
//! and instead evaluates A ρ + ρ A† + Σ γ L ρ L† with A = -iH - ½ Σ γ L†L.
//!
//! The matrix-free kernel works on any partition of the basis into blocks
//! that the generator maps block-diagonal operators into block-diagonal
//! operators. The trivial partition gives the full space; partitioning by
//! the number of up spins gives the magnetization sector, which holds the
//! steady state whenever H conserves Σσ^z and every jump shifts it by a
//! fixed amount.

use ndarray::{Array2, ArrayView2, ShapeBuilder};
use ndarray_linalg::{Eig, Inverse};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::operators::JumpOperator;
use crate::sparse::{SparseOperator, C64, I, ONE, ZERO};

/// Column-stacking vectorization.
pub fn vectorize(m: &Array2<C64>) -> Vec<C64> {
    m.t().iter().copied().collect()
}

/// Inverse of [`vectorize`].
pub fn devectorize(v: &[C64]) -> Result<Array2<C64>> {
    let d = (v.len() as f64).sqrt().round() as usize;
    if d * d != v.len() {
        return Err(Error::Dimension { expected: d * d, got: v.len() });
    }
    Ok(Array2::from_shape_fn((d, d), |(a, b)| v[a + d * b]))
}

/// vec(ρ) for an N-site density matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct StateVector {
    n_sites: usize,
    data: Vec<C64>,
}

impl StateVector {
    pub fn new(n_sites: usize, data: Vec<C64>) -> Result<Self> {
        let expected = 1usize << (2 * n_sites);
        if data.len() != expected {
            return Err(Error::Dimension { expected, got: data.len() });
        }
        Ok(Self { n_sites, data })
    }

    pub fn from_density(n_sites: usize, rho: &Array2<C64>) -> Result<Self> {
        Self::new(n_sites, vectorize(rho))
    }

    /// I / 2^N.
    pub fn maximally_mixed(n_sites: usize) -> Self {
        let d = 1usize << n_sites;
        let mut data = vec![ZERO; d * d];
        let p = C64::new(1.0 / d as f64, 0.0);
        for a in 0..d {
            data[a + d * a] = p;
        }
        Self { n_sites, data }
    }

    /// |b⟩⟨b| for a computational basis state.
    pub fn basis_state(n_sites: usize, b: usize) -> Self {
        let d = 1usize << n_sites;
        let mut data = vec![ZERO; d * d];
        data[b + d * b] = ONE;
        Self { n_sites, data }
    }

    pub fn n_sites(&self) -> usize {
        self.n_sites
    }

    pub fn hilbert_dim(&self) -> usize {
        1 << self.n_sites
    }

    pub fn as_slice(&self) -> &[C64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<C64> {
        self.data
    }

    pub fn to_density(&self) -> Array2<C64> {
        devectorize(&self.data).expect("state vector length is a perfect square")
    }

    pub fn trace(&self) -> C64 {
        let d = self.hilbert_dim();
        (0..d).map(|a| self.data[a + d * a]).sum()
    }

    /// max |ρ - ρ†|.
    pub fn hermiticity_error(&self) -> f64 {
        let d = self.hilbert_dim();
        let mut err: f64 = 0.0;
        for b in 0..d {
            for a in 0..=b {
                err = err.max((self.data[a + d * b] - self.data[b + d * a].conj()).norm());
            }
        }
        err
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        self.data.iter().zip(&other.data).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    /// Checks Hermiticity, unit trace and positivity within `tol`.
    pub fn validate_density(&self, tol: f64) -> Result<()> {
        let herm = self.hermiticity_error();
        if herm > tol {
            return Err(Error::NotDensityMatrix(format!("not Hermitian (error {herm:.3e})")));
        }
        let tr = self.trace();
        if (tr - ONE).norm() > tol {
            return Err(Error::NotDensityMatrix(format!("trace {tr} != 1")));
        }
        let min = min_eigenvalue(&self.to_density())?;
        if min < -tol {
            return Err(Error::NotDensityMatrix(format!("negative eigenvalue {min:.3e}")));
        }
        Ok(())
    }
}

/// Smallest eigenvalue of a Hermitian matrix.
pub fn min_eigenvalue(m: &Array2<C64>) -> Result<f64> {
    use ndarray_linalg::{EigValsh, UPLO};
    let herm = (m + &m.t().mapv(|v| v.conj())) * C64::new(0.5, 0.0);
    let ev = herm.eigvalsh(UPLO::Lower)?;
    Ok(ev.iter().copied().fold(f64::INFINITY, f64::min))
}

/// Common interface of the generator representations used by the solvers.
///
/// Vectors passed to a generator live in its own coordinates: the full
/// vec(ρ) for [`Liouvillian`], the concatenated blocks for
/// [`BlockGenerator`].
pub trait Generator: Sync {
    fn n_sites(&self) -> usize;

    /// Length of a coordinate vector.
    fn len(&self) -> usize;

    /// `y = W x`.
    fn apply_into(&self, x: &[C64], y: &mut [C64]);

    fn trace(&self, x: &[C64]) -> C64;

    /// ρ ← (ρ + ρ†)/2 in place.
    fn hermitize(&self, x: &mut [C64]);

    fn compress(&self, s: &StateVector) -> Result<Vec<C64>>;

    fn expand(&self, x: &[C64]) -> StateVector;

    fn apply_vec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![ZERO; self.len()];
        self.apply_into(x, &mut y);
        y
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Representation {
    ExplicitSparse,
    MatrixFree,
}

impl Representation {
    /// Explicit W below eight sites, matrix-free from eight on.
    pub fn default_for(n_sites: usize) -> Self {
        if n_sites >= 8 {
            Representation::MatrixFree
        } else {
            Representation::ExplicitSparse
        }
    }
}

#[derive(Debug, Clone)]
enum Repr {
    Explicit(SparseOperator),
    MatrixFree(BlockGenerator),
}

/// The generator W acting on full column-stacked state vectors.
#[derive(Debug, Clone)]
pub struct Liouvillian {
    n_sites: usize,
    h: SparseOperator,
    jumps: Vec<JumpOperator>,
    repr: Repr,
}

impl Liouvillian {
    pub fn build(h: SparseOperator, jumps: Vec<JumpOperator>, repr: Representation) -> Result<Self> {
        let d = h.dim();
        if !d.is_power_of_two() {
            return Err(Error::Dimension { expected: d.next_power_of_two(), got: d });
        }
        if let Some(j) = jumps.iter().find(|j| j.op.dim() != d) {
            return Err(Error::Dimension { expected: d, got: j.op.dim() });
        }
        let n_sites = d.trailing_zeros() as usize;
        let repr = match repr {
            Representation::ExplicitSparse => Repr::Explicit(explicit_generator(&h, &jumps)),
            Representation::MatrixFree => {
                Repr::MatrixFree(BlockGenerator::new(&h, &jumps, Partition::full(n_sites))?)
            }
        };
        Ok(Self { n_sites, h, jumps, repr })
    }

    pub fn representation(&self) -> Representation {
        match self.repr {
            Repr::Explicit(_) => Representation::ExplicitSparse,
            Repr::MatrixFree(_) => Representation::MatrixFree,
        }
    }

    pub fn hamiltonian(&self) -> &SparseOperator {
        &self.h
    }

    pub fn jumps(&self) -> &[JumpOperator] {
        &self.jumps
    }

    pub fn hilbert_dim(&self) -> usize {
        1 << self.n_sites
    }

    /// W as an explicit sparse matrix (built on demand for matrix-free
    /// instances).
    pub fn explicit(&self) -> std::borrow::Cow<'_, SparseOperator> {
        match &self.repr {
            Repr::Explicit(w) => std::borrow::Cow::Borrowed(w),
            Repr::MatrixFree(_) => std::borrow::Cow::Owned(explicit_generator(&self.h, &self.jumps)),
        }
    }

    pub fn apply(&self, s: &StateVector) -> Result<StateVector> {
        if s.n_sites() != self.n_sites {
            return Err(Error::Dimension { expected: self.len(), got: s.as_slice().len() });
        }
        StateVector::new(self.n_sites, self.apply_vec(s.as_slice()))
    }

    /// True when H conserves the number of up spins and every jump operator
    /// changes it by a fixed amount.
    pub fn preserves_magnetization(&self) -> bool {
        let shift_of = |op: &SparseOperator| -> Option<i64> {
            let mut shift = None;
            for (r, c, _) in op.iter() {
                let s = c.count_ones() as i64 - r.count_ones() as i64;
                match shift {
                    None => shift = Some(s),
                    Some(t) if t != s => return None,
                    _ => {}
                }
            }
            Some(shift.unwrap_or(0))
        };
        shift_of(&self.h) == Some(0) && self.jumps.iter().all(|j| shift_of(&j.op).is_some())
    }

    /// Restriction to operators that are block diagonal in the number of up
    /// spins.
    pub fn magnetization_sector(&self) -> Result<BlockGenerator> {
        if !self.preserves_magnetization() {
            return Err(Error::Params("generator does not preserve the magnetization sector".into()));
        }
        BlockGenerator::new(&self.h, &self.jumps, Partition::by_up_count(self.n_sites))
    }
}

impl Generator for Liouvillian {
    fn n_sites(&self) -> usize {
        self.n_sites
    }

    fn len(&self) -> usize {
        1 << (2 * self.n_sites)
    }

    fn apply_into(&self, x: &[C64], y: &mut [C64]) {
        match &self.repr {
            Repr::Explicit(w) => w.matvec(x, y),
            Repr::MatrixFree(g) => g.apply_into(x, y),
        }
    }

    fn trace(&self, x: &[C64]) -> C64 {
        let d = self.hilbert_dim();
        (0..d).map(|a| x[a + d * a]).sum()
    }

    fn hermitize(&self, x: &mut [C64]) {
        hermitize_block(x, self.hilbert_dim());
    }

    fn compress(&self, s: &StateVector) -> Result<Vec<C64>> {
        if s.n_sites() != self.n_sites {
            return Err(Error::Dimension { expected: self.len(), got: s.as_slice().len() });
        }
        Ok(s.as_slice().to_vec())
    }

    fn expand(&self, x: &[C64]) -> StateVector {
        StateVector::new(self.n_sites, x.to_vec()).expect("length checked by caller")
    }
}

fn explicit_generator(h: &SparseOperator, jumps: &[JumpOperator]) -> SparseOperator {
    let id = SparseOperator::identity(h.dim());
    let mut w = id.kron(h).sub(&h.transpose().kron(&id)).scale(-I);
    for j in jumps {
        let l = &j.op;
        let ldl = l.adjoint().mul(l);
        let g = C64::new(j.gamma, 0.0);
        let half = C64::new(0.5 * j.gamma, 0.0);
        w = w
            .add(&l.conj().kron(l).scale(g))
            .sub(&id.kron(&ldl).scale(half))
            .sub(&ldl.transpose().kron(&id).scale(half));
    }
    w
}

fn hermitize_block(x: &mut [C64], d: usize) {
    for b in 0..d {
        for a in 0..b {
            let avg = (x[a + d * b] + x[b + d * a].conj()) * 0.5;
            x[a + d * b] = avg;
            x[b + d * a] = avg.conj();
        }
        x[b + d * b].im = 0.0;
    }
}

/// A partition of the computational basis into ordered blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    n_sites: usize,
    blocks: Vec<Vec<usize>>,
}

impl Partition {
    pub fn full(n_sites: usize) -> Self {
        Self { n_sites, blocks: vec![(0..1usize << n_sites).collect()] }
    }

    /// One block per number of up spins, states in increasing order.
    pub fn by_up_count(n_sites: usize) -> Self {
        let mut blocks = vec![Vec::new(); n_sites + 1];
        for b in 0..1usize << n_sites {
            blocks[n_sites - b.count_ones() as usize].push(b);
        }
        Self { n_sites, blocks }
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }
}

/// Rectangular CSR block of an operator.
#[derive(Debug, Clone)]
struct Csr {
    indptr: Vec<usize>,
    indices: Vec<usize>,
    values: Vec<C64>,
}

impl Csr {
    fn row(&self, r: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let span = self.indptr[r]..self.indptr[r + 1];
        self.indices[span.clone()].iter().copied().zip(self.values[span].iter().copied())
    }

    fn nrows(&self) -> usize {
        self.indptr.len() - 1
    }
}

#[derive(Debug, Clone)]
struct BlockJump {
    from: usize,
    to: usize,
    gamma: f64,
    op: Csr,
}

/// Matrix-free generator on block-diagonal operators.
#[derive(Debug, Clone)]
pub struct BlockGenerator {
    partition: Partition,
    /// (block, position within block) for each basis state.
    locate: Vec<(usize, usize)>,
    offsets: Vec<usize>,
    /// A = -iH - ½ Σ γ L†L restricted to each block.
    effective: Vec<Csr>,
    jumps: Vec<BlockJump>,
}

impl BlockGenerator {
    /// Fails if H, L†L or any L couples the blocks in a way that does not
    /// map block-diagonal operators to block-diagonal operators.
    pub fn new(h: &SparseOperator, jumps: &[JumpOperator], partition: Partition) -> Result<Self> {
        let d = 1usize << partition.n_sites;
        if h.dim() != d {
            return Err(Error::Dimension { expected: d, got: h.dim() });
        }
        let mut locate = vec![(usize::MAX, 0); d];
        for (k, block) in partition.blocks.iter().enumerate() {
            for (p, &b) in block.iter().enumerate() {
                locate[b] = (k, p);
            }
        }
        let mut offsets = vec![0];
        for block in &partition.blocks {
            offsets.push(offsets.last().unwrap() + block.len() * block.len());
        }

        let mut a = h.scale(-I);
        for j in jumps {
            let ldl = j.op.adjoint().mul(&j.op);
            a = a.sub(&ldl.scale(C64::new(0.5 * j.gamma, 0.0)));
        }
        let effective = partition
            .blocks
            .iter()
            .enumerate()
            .map(|(k, _)| restrict(&a, &partition, &locate, k, k))
            .collect::<Result<Vec<_>>>()?;

        let mut block_jumps = Vec::new();
        for j in jumps {
            // each source block must map into a single target block
            let mut targets: Vec<Option<usize>> = vec![None; partition.blocks.len()];
            for (r, c, _) in j.op.iter() {
                let (to, from) = (locate[r].0, locate[c].0);
                match targets[from] {
                    None => targets[from] = Some(to),
                    Some(t) if t != to => {
                        return Err(Error::Params("jump operator splits a block".into()));
                    }
                    _ => {}
                }
            }
            for (from, to) in targets.into_iter().enumerate() {
                if let Some(to) = to {
                    block_jumps.push(BlockJump {
                        from,
                        to,
                        gamma: j.gamma,
                        op: restrict(&j.op, &partition, &locate, to, from)?,
                    });
                }
            }
        }
        Ok(Self { partition, locate, offsets, effective, jumps: block_jumps })
    }

    pub fn partition(&self) -> &Partition {
        &self.partition
    }

    /// Full vec(ρ) index of every coordinate.
    pub fn full_indices(&self) -> Vec<usize> {
        let d = 1usize << self.partition.n_sites;
        let mut out = Vec::with_capacity(self.len());
        for block in &self.partition.blocks {
            for &b in block {
                for &a in block {
                    out.push(a + d * b);
                }
            }
        }
        out
    }

    fn block_dims(&self) -> impl Iterator<Item = usize> + '_ {
        self.partition.blocks.iter().map(|b| b.len())
    }

    fn split_mut<'a>(&self, mut y: &'a mut [C64]) -> Vec<&'a mut [C64]> {
        let mut parts = Vec::with_capacity(self.partition.blocks.len());
        for d in self.block_dims() {
            let (head, tail) = y.split_at_mut(d * d);
            parts.push(head);
            y = tail;
        }
        parts
    }

    fn block<'a>(&self, x: &'a [C64], k: usize) -> &'a [C64] {
        &x[self.offsets[k]..self.offsets[k + 1]]
    }

    fn apply_block(&self, x: &[C64], k: usize, out: &mut [C64]) {
        let d = self.partition.blocks[k].len();
        let a = &self.effective[k];
        let rho = self.block(x, k);
        // A ρ
        for b in 0..d {
            let col = &rho[d * b..d * (b + 1)];
            let out_col = &mut out[d * b..d * (b + 1)];
            for (r, o) in out_col.iter_mut().enumerate() {
                *o = a.row(r).map(|(c, v)| v * col[c]).sum();
            }
        }
        // ρ A†: column b gets Σ_c conj(A[b, c]) ρ[:, c]
        for b in 0..d {
            for (c, v) in a.row(b) {
                let v = v.conj();
                let (src, dst) = (d * c, d * b);
                for r in 0..d {
                    out[dst + r] += v * rho[src + r];
                }
            }
        }
        // Σ γ L ρ L† from every block feeding this one
        for j in self.jumps.iter().filter(|j| j.to == k) {
            let src = self.block(x, j.from);
            let ds = self.partition.blocks[j.from].len();
            let g = j.gamma;
            for bp in 0..j.op.nrows() {
                for (e, l2) in j.op.row(bp) {
                    let w = l2.conj() * g;
                    let col = &src[ds * e..ds * (e + 1)];
                    for ap in 0..j.op.nrows() {
                        let s: C64 = j.op.row(ap).map(|(c, l1)| l1 * col[c]).sum();
                        out[ap + d * bp] += w * s;
                    }
                }
            }
        }
    }
}

impl BlockGenerator {
    /// Inverse of the jump-free part ρ ↦ Aρ + ρA† on every block.
    pub fn sylvester_inverse(&self) -> Result<SylvesterInverse> {
        let blocks = self
            .effective
            .par_iter()
            .map(|a| {
                let d = a.nrows();
                let mut dense = Array2::<C64>::zeros((d, d));
                for r in 0..d {
                    for (c, v) in a.row(r) {
                        dense[[r, c]] = v;
                    }
                }
                let (vals, v) = dense.eig()?;
                let vinv = v.inv()?;
                let scale = vals.iter().map(|l| l.norm()).fold(1.0, f64::max);
                let denom = Array2::from_shape_fn((d, d), |(i, j)| {
                    let s = vals[i] + vals[j].conj();
                    // guard against (nearly) dark pairs; only a preconditioner
                    if s.norm() < 1e-10 * scale {
                        ONE / C64::new(-1e-10 * scale, 0.0)
                    } else {
                        ONE / s
                    }
                });
                let (v_h, vinv_h) = (v.t().mapv(|x| x.conj()), vinv.t().mapv(|x| x.conj()));
                let slowest = vals.iter().map(|l| -l.re).fold(f64::INFINITY, f64::min);
                Ok(SylvesterBlock { v, v_h, vinv, vinv_h, denom, slowest: slowest / scale })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(SylvesterInverse { blocks, offsets: self.offsets.clone() })
    }
}

#[derive(Debug, Clone)]
struct SylvesterBlock {
    v: Array2<C64>,
    v_h: Array2<C64>,
    vinv: Array2<C64>,
    vinv_h: Array2<C64>,
    /// 1 / (λ_i + conj λ_j) for the eigenvalues λ of A.
    denom: Array2<C64>,
    /// Smallest decay rate -Re λ, relative to the largest |λ|.
    slowest: f64,
}

/// Solves Aρ + ρA† = Y blockwise via A = VΛV⁻¹: ρ = V [(V⁻¹ Y V⁻†) ∘ D] V†.
#[derive(Debug, Clone)]
pub struct SylvesterInverse {
    blocks: Vec<SylvesterBlock>,
    offsets: Vec<usize>,
}

impl SylvesterInverse {
    /// Smallest relative decay rate of A over all blocks. A (near) zero
    /// value means a pure state that no jump operator touches: it is
    /// stationary by itself and the steady state need not be unique.
    pub fn slowest_decay(&self) -> f64 {
        self.blocks.iter().map(|b| b.slowest).fold(f64::INFINITY, f64::min)
    }

    pub fn apply_into(&self, y: &[C64], out: &mut [C64]) {
        let mut parts = Vec::with_capacity(self.blocks.len());
        let mut rest = out;
        for k in 0..self.blocks.len() {
            let (head, tail) = rest.split_at_mut(self.offsets[k + 1] - self.offsets[k]);
            parts.push(head);
            rest = tail;
        }
        parts.into_par_iter().enumerate().for_each(|(k, dst)| {
            let b = &self.blocks[k];
            let d = b.v.nrows();
            let src = &y[self.offsets[k]..self.offsets[k + 1]];
            let ym = ArrayView2::from_shape((d, d).f(), src).expect("block length");
            let x = b.vinv.dot(&ym).dot(&b.vinv_h) * &b.denom;
            let rho = b.v.dot(&x).dot(&b.v_h);
            // column-major write-back
            for (c, col) in rho.columns().into_iter().enumerate() {
                for (r, v) in col.iter().enumerate() {
                    dst[r + d * c] = *v;
                }
            }
        });
    }
}

fn restrict(op: &SparseOperator, p: &Partition, locate: &[(usize, usize)], to: usize, from: usize) -> Result<Csr> {
    let rows = &p.blocks[to];
    let mut indptr = Vec::with_capacity(rows.len() + 1);
    indptr.push(0);
    let mut indices = Vec::new();
    let mut values = Vec::new();
    for &r in rows {
        for (c, v) in op.row(r) {
            let (blk, pos) = locate[c];
            if blk == from {
                indices.push(pos);
                values.push(v);
            } else if to == from {
                return Err(Error::Params("operator couples distinct blocks".into()));
            }
        }
        indptr.push(indices.len());
    }
    Ok(Csr { indptr, indices, values })
}

impl Generator for BlockGenerator {
    fn n_sites(&self) -> usize {
        self.partition.n_sites
    }

    fn len(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    fn apply_into(&self, x: &[C64], y: &mut [C64]) {
        assert_eq!(x.len(), self.len());
        assert_eq!(y.len(), self.len());
        self.split_mut(y)
            .into_par_iter()
            .enumerate()
            .for_each(|(k, out)| self.apply_block(x, k, out));
    }

    fn trace(&self, x: &[C64]) -> C64 {
        self.block_dims()
            .enumerate()
            .map(|(k, d)| {
                let blk = self.block(x, k);
                (0..d).map(|a| blk[a + d * a]).sum::<C64>()
            })
            .sum()
    }

    fn hermitize(&self, x: &mut [C64]) {
        let dims: Vec<usize> = self.block_dims().collect();
        for (part, d) in self.split_mut(x).into_iter().zip(dims) {
            hermitize_block(part, d);
        }
    }

    /// Fails if `s` has weight outside the block-diagonal subspace.
    fn compress(&self, s: &StateVector) -> Result<Vec<C64>> {
        let n = self.partition.n_sites;
        if s.n_sites() != n {
            return Err(Error::Dimension { expected: 1 << (2 * n), got: s.as_slice().len() });
        }
        let full = s.as_slice();
        let d = 1usize << n;
        let mut off_block: f64 = 0.0;
        for b in 0..d {
            for a in 0..d {
                if self.locate[a].0 != self.locate[b].0 {
                    off_block = off_block.max(full[a + d * b].norm());
                }
            }
        }
        if off_block > 1e-12 {
            return Err(Error::NotDensityMatrix(format!(
                "state has off-sector weight {off_block:.3e}"
            )));
        }
        Ok(self.full_indices().into_iter().map(|i| full[i]).collect())
    }

    fn expand(&self, x: &[C64]) -> StateVector {
        let n = self.partition.n_sites;
        let mut full = vec![ZERO; 1 << (2 * n)];
        for (v, i) in x.iter().zip(self.full_indices()) {
            full[i] = *v;
        }
        StateVector::new(n, full).expect("full length")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{embed_site_operator, SIGMA_PLUS};

    #[test]
    fn vec_of_two_by_two() {
        let (a, b, c, d) = (C64::new(1.0, 0.0), C64::new(2.0, 0.0), C64::new(3.0, 0.0), C64::new(4.0, 0.0));
        let m = ndarray::arr2(&[[a, b], [c, d]]);
        assert_eq!(vectorize(&m), vec![a, c, b, d]);
        assert_eq!(devectorize(&vectorize(&m)).unwrap(), m);
        assert_eq!(vectorize(&Array2::eye(2)), vec![ONE, ZERO, ZERO, ONE]);
        assert!(devectorize(&[ONE; 3]).is_err());
    }

    #[test]
    fn zero_generator() {
        let w = Liouvillian::build(SparseOperator::zeros(2), vec![], Representation::ExplicitSparse).unwrap();
        assert_eq!(w.explicit().nnz(), 0);
    }

    #[test]
    fn single_site_pump_generator() {
        let l = embed_site_operator(1, 0, &SIGMA_PLUS).unwrap().scale(C64::new(2f64.sqrt(), 0.0));
        let jumps = vec![JumpOperator { op: l, gamma: 1.0, shift: 1 }];
        let w = Liouvillian::build(SparseOperator::zeros(2), jumps, Representation::ExplicitSparse).unwrap();
        let dense = w.explicit().to_dense();
        // hand-derived: dρ↑↑/dt = 2ρ↓↓, dρ↓↓/dt = -2ρ↓↓, coherences decay at rate 1
        let mut want = Array2::<C64>::zeros((4, 4));
        want[[0, 3]] = C64::new(2.0, 0.0);
        want[[3, 3]] = C64::new(-2.0, 0.0);
        want[[1, 1]] = -ONE;
        want[[2, 2]] = -ONE;
        assert!((&dense - &want).iter().all(|v| v.norm() < 1e-15));
        let up = StateVector::basis_state(1, 0);
        assert!(w.apply(&up).unwrap().as_slice().iter().all(|v| v.norm() == 0.0));
    }

    #[test]
    fn partition_by_up_count() {
        let p = Partition::by_up_count(3);
        let sizes: Vec<usize> = p.blocks().iter().map(|b| b.len()).collect();
        assert_eq!(sizes, vec![1, 3, 3, 1]);
        assert_eq!(p.blocks()[0], vec![0b111]);
        assert_eq!(p.blocks()[3], vec![0b000]);
    }

    #[test]
    fn hermitize_averages() {
        let mut x = vec![ONE, C64::new(1.0, 1.0), C64::new(3.0, 1.0), C64::new(2.0, 0.5)];
        hermitize_block(&mut x, 2);
        assert_eq!(x[1], x[2].conj());
        assert_eq!(x[3].im, 0.0);
    }
}
