//! Lattice geometries, reservoir placement and magnetic-field profiles.
//!
//! Sites are indexed column-major: column 1 first, top to bottom within a
//! column. Indices in the API are 0-based; columns and rows are 1-based.
//! The site index also fixes the tensor-product ordering used by
//! [`crate::operators`]: site 0 is the leftmost (most significant) factor.

use std::collections::{BTreeSet, VecDeque};

use crate::error::{Error, Result};

/// Position of a site in the column/row grid (both 1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Site {
    pub column: usize,
    pub row: usize,
}

/// A boundary site coupled to a magnetization reservoir with rate `gamma`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Reservoir {
    pub site: usize,
    pub gamma: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BondKind {
    /// Both ends in the same column.
    Vertical,
    /// Ends in adjacent columns; carries current across a column cut.
    Transport,
}

/// A validated lattice: column structure, bond graph and reservoirs.
///
/// Immutable after construction. Bonds are stored as `(i, j)` with `i < j`,
/// which is also the orientation used for reported currents (lower column
/// to higher column, lower row to higher row within a column).
#[derive(Debug, Clone, PartialEq)]
pub struct LatticeSpec {
    column_sizes: Vec<usize>,
    sites: Vec<Site>,
    bonds: Vec<(usize, usize)>,
    left: Vec<Reservoir>,
    right: Vec<Reservoir>,
}

impl LatticeSpec {
    /// Builds and validates a lattice from its column sizes, bond list and
    /// reservoir couplings.
    pub fn new(
        column_sizes: Vec<usize>,
        bonds: Vec<(usize, usize)>,
        left: Vec<Reservoir>,
        right: Vec<Reservoir>,
    ) -> Result<Self> {
        if column_sizes.len() < 2 {
            return Err(Error::Lattice(format!(
                "need at least two columns, got {}",
                column_sizes.len()
            )));
        }
        if let Some(c) = column_sizes.iter().position(|&n| n == 0) {
            return Err(Error::Lattice(format!("column {} is empty", c + 1)));
        }
        let sites: Vec<Site> = column_sizes
            .iter()
            .enumerate()
            .flat_map(|(c, &n)| (1..=n).map(move |row| Site { column: c + 1, row }))
            .collect();
        let n_sites = sites.len();
        if n_sites > MAX_SITES {
            return Err(Error::Lattice(format!(
                "{n_sites} sites exceeds the supported maximum of {MAX_SITES}"
            )));
        }

        let mut seen = BTreeSet::new();
        let mut normalized = Vec::with_capacity(bonds.len());
        for &(a, b) in &bonds {
            if a >= n_sites || b >= n_sites {
                return Err(Error::Lattice(format!(
                    "bond endpoint out of range in {}-{} ({n_sites} sites)",
                    a + 1,
                    b + 1
                )));
            }
            if a == b {
                return Err(Error::Lattice(format!("self-bond on site {}", a + 1)));
            }
            let e = (a.min(b), a.max(b));
            if !seen.insert(e) {
                return Err(Error::Lattice(format!(
                    "duplicate bond {}-{}",
                    e.0 + 1,
                    e.1 + 1
                )));
            }
            if sites[e.1].column - sites[e.0].column > 1 {
                return Err(Error::Lattice(format!(
                    "bond {}-{} skips a column",
                    e.0 + 1,
                    e.1 + 1
                )));
            }
            normalized.push(e);
        }
        normalized.sort_unstable();

        if !is_connected(n_sites, &normalized) {
            return Err(Error::Lattice("bond graph is disconnected".into()));
        }

        let last = column_sizes.len();
        let check_side = |side: &[Reservoir], column: usize, name: &str| -> Result<Vec<Reservoir>> {
            if side.is_empty() {
                return Err(Error::Lattice(format!("no {name} reservoir")));
            }
            let mut out = side.to_vec();
            out.sort_by_key(|r| r.site);
            for w in out.windows(2) {
                if w[0].site == w[1].site {
                    return Err(Error::Lattice(format!(
                        "site {} appears twice in the {name} reservoir",
                        w[0].site + 1
                    )));
                }
            }
            for r in &out {
                if r.site >= n_sites {
                    return Err(Error::Lattice(format!(
                        "{name} reservoir site {} out of range",
                        r.site + 1
                    )));
                }
                if sites[r.site].column != column {
                    return Err(Error::Lattice(format!(
                        "{name} reservoir site {} is not in the {name}most column",
                        r.site + 1
                    )));
                }
                if !(r.gamma.is_finite() && r.gamma > 0.0) {
                    return Err(Error::Lattice(format!(
                        "{name} reservoir on site {} has non-positive coupling {}",
                        r.site + 1,
                        r.gamma
                    )));
                }
            }
            Ok(out)
        };
        let left = check_side(&left, 1, "left")?;
        let right = check_side(&right, last, "right")?;
        if let Some(r) = left.iter().find(|l| right.iter().any(|r| r.site == l.site)) {
            return Err(Error::Lattice(format!(
                "site {} is coupled to both reservoirs",
                r.site + 1
            )));
        }

        Ok(Self { column_sizes, sites, bonds: normalized, left, right })
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn n_columns(&self) -> usize {
        self.column_sizes.len()
    }

    pub fn column_sizes(&self) -> &[usize] {
        &self.column_sizes
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn site(&self, i: usize) -> Site {
        self.sites[i]
    }

    pub fn bonds(&self) -> &[(usize, usize)] {
        &self.bonds
    }

    pub fn left_reservoir(&self) -> &[Reservoir] {
        &self.left
    }

    pub fn right_reservoir(&self) -> &[Reservoir] {
        &self.right
    }

    /// Index of the site at (column, row), both 1-based.
    pub fn index_of(&self, column: usize, row: usize) -> Option<usize> {
        if column == 0 || column > self.n_columns() || row == 0 || row > self.column_sizes[column - 1] {
            return None;
        }
        let offset: usize = self.column_sizes[..column - 1].iter().sum();
        Some(offset + row - 1)
    }

    /// Site indices in column `column` (1-based), top to bottom.
    pub fn column_members(&self, column: usize) -> std::ops::Range<usize> {
        let start: usize = self.column_sizes[..column - 1].iter().sum();
        start..start + self.column_sizes[column - 1]
    }

    pub fn bond_kind(&self, bond: (usize, usize)) -> BondKind {
        if self.sites[bond.0].column == self.sites[bond.1].column {
            BondKind::Vertical
        } else {
            BondKind::Transport
        }
    }

    pub fn is_bond(&self, i: usize, j: usize) -> bool {
        self.bonds.binary_search(&(i.min(j), i.max(j))).is_ok()
    }

    pub fn neighbors(&self, k: usize) -> Vec<usize> {
        self.bonds
            .iter()
            .filter_map(|&(a, b)| match (a == k, b == k) {
                (true, _) => Some(b),
                (_, true) => Some(a),
                _ => None,
            })
            .collect()
    }

    pub fn is_driven(&self, k: usize) -> bool {
        self.left.iter().chain(&self.right).any(|r| r.site == k)
    }

    /// Sites not coupled to any reservoir.
    pub fn interior_sites(&self) -> Vec<usize> {
        (0..self.n_sites()).filter(|&k| !self.is_driven(k)).collect()
    }

    /// Transport bonds crossing the cut between `column` and `column + 1`.
    pub fn cut_bonds(&self, column: usize) -> Vec<(usize, usize)> {
        self.bonds
            .iter()
            .copied()
            .filter(|&(a, b)| self.sites[a].column == column && self.sites[b].column == column + 1)
            .collect()
    }
}

/// Upper bound on lattice size; the Hilbert-space index must fit in a word
/// and the superoperator must fit in memory long before this.
pub const MAX_SITES: usize = 16;

fn is_connected(n: usize, bonds: &[(usize, usize)]) -> bool {
    if n == 0 {
        return false;
    }
    let mut adj = vec![Vec::new(); n];
    for &(a, b) in bonds {
        adj[a].push(b);
        adj[b].push(a);
    }
    let mut seen = vec![false; n];
    let mut queue = VecDeque::from([0]);
    seen[0] = true;
    let mut count = 1;
    while let Some(v) = queue.pop_front() {
        for &w in &adj[v] {
            if !seen[w] {
                seen[w] = true;
                count += 1;
                queue.push_back(w);
            }
        }
    }
    count == n
}

/// User-supplied geometry, validated by [`build_geometry`].
///
/// Site indices are 0-based in column-major order.
#[derive(Debug, Clone, PartialEq)]
pub struct CustomGeometry {
    pub column_sizes: Vec<usize>,
    pub bonds: Vec<(usize, usize)>,
    pub left: Vec<(usize, f64)>,
    pub right: Vec<(usize, f64)>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum GeometryKind {
    /// Triangle with columns (1, 2, 3, 4); one left and four right reservoirs.
    Triangular10,
    /// Triangle-family lattice with columns (1, 2, 3, 2).
    Asym8,
    /// 2 x 5 square lattice, two reservoirs per side.
    Sym10,
    /// 3 x 3 square lattice, three reservoirs per side.
    Sym9,
    Custom(CustomGeometry),
}

impl GeometryKind {
    pub const NAMED: [GeometryKind; 4] = [
        GeometryKind::Triangular10,
        GeometryKind::Asym8,
        GeometryKind::Sym10,
        GeometryKind::Sym9,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            GeometryKind::Triangular10 => "triangular10",
            GeometryKind::Asym8 => "asym8",
            GeometryKind::Sym10 => "sym10",
            GeometryKind::Sym9 => "sym9",
            GeometryKind::Custom(_) => "custom",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::NAMED.iter().find(|k| k.name() == name).cloned()
    }
}

/// Builds the lattice for a named geometry, or validates a custom one.
pub fn build_geometry(kind: &GeometryKind) -> Result<LatticeSpec> {
    match kind {
        GeometryKind::Triangular10 => triangle_family(&[1, 2, 3, 4], 1.0, 0.25),
        GeometryKind::Asym8 => triangle_family(&[1, 2, 3, 2], 1.0, 0.5),
        GeometryKind::Sym10 => square(2, 5, 1.0),
        GeometryKind::Sym9 => square(3, 3, 1.0),
        GeometryKind::Custom(c) => LatticeSpec::new(
            c.column_sizes.clone(),
            c.bonds.clone(),
            c.left.iter().map(|&(site, gamma)| Reservoir { site, gamma }).collect(),
            c.right.iter().map(|&(site, gamma)| Reservoir { site, gamma }).collect(),
        ),
    }
}

fn offsets(column_sizes: &[usize]) -> Vec<usize> {
    column_sizes
        .iter()
        .scan(0, |acc, &n| {
            let start = *acc;
            *acc += n;
            Some(start)
        })
        .collect()
}

/// Bonds of a triangle-family lattice: vertical bonds inside every column,
/// and each site of the shorter of two adjacent columns linked to rows
/// `r` and `r + 1` of the longer one. Adjacent columns must differ by one.
fn triangle_bonds(column_sizes: &[usize]) -> Vec<(usize, usize)> {
    let off = offsets(column_sizes);
    let mut bonds = Vec::new();
    for (c, &n) in column_sizes.iter().enumerate() {
        for r in 0..n.saturating_sub(1) {
            bonds.push((off[c] + r, off[c] + r + 1));
        }
    }
    for c in 0..column_sizes.len() - 1 {
        let (n, m) = (column_sizes[c], column_sizes[c + 1]);
        if m == n + 1 {
            for r in 0..n {
                bonds.push((off[c] + r, off[c + 1] + r));
                bonds.push((off[c] + r, off[c + 1] + r + 1));
            }
        } else {
            assert_eq!(n, m + 1, "adjacent triangle columns must differ by one");
            for r in 0..m {
                bonds.push((off[c] + r, off[c + 1] + r));
                bonds.push((off[c] + r + 1, off[c + 1] + r));
            }
        }
    }
    bonds
}

fn triangle_family(column_sizes: &[usize], gamma_left: f64, gamma_right: f64) -> Result<LatticeSpec> {
    let off = offsets(column_sizes);
    let last = column_sizes.len() - 1;
    let left = (0..column_sizes[0])
        .map(|r| Reservoir { site: off[0] + r, gamma: gamma_left })
        .collect();
    let right = (0..column_sizes[last])
        .map(|r| Reservoir { site: off[last] + r, gamma: gamma_right })
        .collect();
    LatticeSpec::new(column_sizes.to_vec(), triangle_bonds(column_sizes), left, right)
}

fn square(rows: usize, columns: usize, gamma: f64) -> Result<LatticeSpec> {
    let idx = |c: usize, r: usize| c * rows + r;
    let mut bonds = Vec::new();
    for c in 0..columns {
        for r in 0..rows {
            if r + 1 < rows {
                bonds.push((idx(c, r), idx(c, r + 1)));
            }
            if c + 1 < columns {
                bonds.push((idx(c, r), idx(c + 1, r)));
            }
        }
    }
    let left = (0..rows).map(|r| Reservoir { site: idx(0, r), gamma }).collect();
    let right = (0..rows)
        .map(|r| Reservoir { site: idx(columns - 1, r), gamma })
        .collect();
    LatticeSpec::new(vec![rows; columns], bonds, left, right)
}

/// Column dependence of the on-site magnetic field.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum FieldProfile {
    Homogeneous(f64),
    /// `h0` on the leftmost column, growing by `step` per column.
    AscendingLR { h0: f64, step: f64 },
    /// `h0` on the rightmost column, growing by `step` per column leftwards.
    AscendingRL { h0: f64, step: f64 },
}

/// Per-site field values produced from a [`FieldProfile`].
#[derive(Debug, Clone, PartialEq)]
pub struct FieldAssignment {
    pub profile: FieldProfile,
    pub values: Vec<f64>,
}

impl FieldAssignment {
    /// Explicit per-site values, e.g. for a field not tied to columns.
    pub fn from_values(values: Vec<f64>) -> Self {
        let h = values.first().copied().unwrap_or(0.0);
        Self { profile: FieldProfile::Homogeneous(h), values }
    }

    pub fn is_homogeneous(&self) -> bool {
        self.values.windows(2).all(|w| w[0] == w[1])
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }
}

pub fn assign_field(spec: &LatticeSpec, profile: FieldProfile) -> FieldAssignment {
    let n_columns = spec.n_columns() as f64;
    let values = spec
        .sites()
        .iter()
        .map(|s| {
            let c = s.column as f64;
            match profile {
                FieldProfile::Homogeneous(h) => h,
                FieldProfile::AscendingLR { h0, step } => h0 + step * (c - 1.0),
                FieldProfile::AscendingRL { h0, step } => h0 + step * (n_columns - c),
            }
        })
        .collect();
    FieldAssignment { profile, values }
}

/// Coupling given to every reservoir in the small-geometry enumeration.
pub const SCAN_GAMMA: f64 = 1.0;

/// The six-site triangle with columns (1, 2, 3) used as the enumeration
/// template. Its sites 1..6 carry bonds 1-2, 1-3, 2-3, 2-4, 2-5, 3-5, 3-6,
/// 4-5 and 5-6 (1-based).
pub fn six_site_triangle(left: &[usize], right: &[usize]) -> Result<LatticeSpec> {
    LatticeSpec::new(
        vec![1, 2, 3],
        triangle_bonds(&[1, 2, 3]),
        left.iter().map(|&site| Reservoir { site, gamma: SCAN_GAMMA }).collect(),
        right.iter().map(|&site| Reservoir { site, gamma: SCAN_GAMMA }).collect(),
    )
}

type GeometryKey = (Vec<usize>, Vec<(usize, usize)>, Vec<usize>, Vec<usize>);

/// All connected sub-lattices of the six-site triangle with exactly
/// `n_sites` sites and at least two columns.
///
/// Both the site subset and the bond subset vary: every connected spanning
/// subgraph of the induced bond graph is a candidate. Each candidate is
/// relabelled (columns renumbered from 1, rows compacted), then
/// `left_count` reservoirs are placed in the leftmost column and
/// `right_count` in the rightmost one, in every possible way. Geometries
/// related by flipping rows within columns are reported once. Requests that
/// cannot be satisfied give an empty list.
pub fn enumerate_small_geometries(
    n_sites: usize,
    left_count: usize,
    right_count: usize,
) -> Result<Vec<LatticeSpec>> {
    const TEMPLATE: [usize; 3] = [1, 2, 3];
    if n_sites > 6 {
        return Err(Error::Lattice(format!(
            "the enumeration template has 6 sites, asked for {n_sites}"
        )));
    }
    if left_count == 0 || right_count == 0 {
        return Ok(Vec::new());
    }
    let template_bonds = triangle_bonds(&TEMPLATE);
    let template_sites: Vec<(usize, usize)> = TEMPLATE
        .iter()
        .enumerate()
        .flat_map(|(c, &n)| (0..n).map(move |r| (c, r)))
        .collect();

    let mut keys: BTreeSet<GeometryKey> = BTreeSet::new();
    for mask in 0u32..(1 << 6) {
        if mask.count_ones() as usize != n_sites {
            continue;
        }
        let chosen: Vec<usize> = (0..6).filter(|&s| mask & (1 << s) != 0).collect();
        let induced: Vec<(usize, usize)> = template_bonds
            .iter()
            .copied()
            .filter(|&(a, b)| mask & (1 << a) != 0 && mask & (1 << b) != 0)
            .collect();

        // relabel: occupied columns renumbered, rows compacted
        let mut cols: Vec<usize> = chosen.iter().map(|&s| template_sites[s].0).collect();
        cols.dedup();
        if cols.len() < 2 {
            continue;
        }
        let column_sizes: Vec<usize> = cols
            .iter()
            .map(|&c| chosen.iter().filter(|&&s| template_sites[s].0 == c).count())
            .collect();
        // chosen is already in column-major order, so position == new index
        let new_index = |s: usize| chosen.iter().position(|&t| t == s).unwrap();

        for bond_mask in 0u32..(1 << induced.len()) {
            let bonds: Vec<(usize, usize)> = induced
                .iter()
                .enumerate()
                .filter(|(i, _)| bond_mask & (1 << i) != 0)
                .map(|(_, &(a, b))| (new_index(a), new_index(b)))
                .collect();
            if !is_connected(n_sites, &bonds) {
                continue;
            }
            let off = offsets(&column_sizes);
            let first = off[0]..off[0] + column_sizes[0];
            let last_c = column_sizes.len() - 1;
            let last = off[last_c]..off[last_c] + column_sizes[last_c];
            for left in combinations(first.clone().collect(), left_count) {
                for right in combinations(last.clone().collect(), right_count) {
                    let key = (column_sizes.clone(), sorted(bonds.clone()), left.clone(), right.clone());
                    let mirrored = row_flip_key(&key);
                    keys.insert(key.min(mirrored));
                }
            }
        }
    }

    keys.into_iter()
        .map(|(column_sizes, bonds, left, right)| {
            LatticeSpec::new(
                column_sizes,
                bonds,
                left.into_iter().map(|site| Reservoir { site, gamma: SCAN_GAMMA }).collect(),
                right.into_iter().map(|site| Reservoir { site, gamma: SCAN_GAMMA }).collect(),
            )
        })
        .collect()
}

fn sorted<T: Ord>(mut v: Vec<T>) -> Vec<T> {
    v.sort();
    v
}

fn row_flip_key(key: &GeometryKey) -> GeometryKey {
    let (sizes, bonds, left, right) = key;
    let off = offsets(sizes);
    let flip = |s: usize| {
        let c = off.iter().rposition(|&o| o <= s).unwrap();
        let r = s - off[c];
        off[c] + sizes[c] - 1 - r
    };
    let bonds = sorted(
        bonds
            .iter()
            .map(|&(a, b)| {
                let (x, y) = (flip(a), flip(b));
                (x.min(y), x.max(y))
            })
            .collect(),
    );
    let left = sorted(left.iter().map(|&s| flip(s)).collect());
    let right = sorted(right.iter().map(|&s| flip(s)).collect());
    (sizes.clone(), bonds, left, right)
}

fn combinations(items: Vec<usize>, k: usize) -> Vec<Vec<usize>> {
    if k > items.len() {
        return Vec::new();
    }
    let mut out = Vec::new();
    let mut idx: Vec<usize> = (0..k).collect();
    loop {
        out.push(idx.iter().map(|&i| items[i]).collect());
        let Some(pos) = (0..k).rev().find(|&i| idx[i] != i + items.len() - k) else {
            return out;
        };
        idx[pos] += 1;
        for j in pos + 1..k {
            idx[j] = idx[j - 1] + 1;
        }
    }
}

/// Left-right mirror of the lattice, if it is a symmetry.
///
/// Tries the pure column reversal `(c, r) -> (C + 1 - c, r)` first and then
/// column reversal combined with a row flip. A candidate is accepted when it
/// maps the bond set onto itself and exchanges the left and right reservoirs
/// with equal couplings. The returned vector maps each site to its image.
pub fn mirror_permutation(spec: &LatticeSpec) -> Option<Vec<usize>> {
    let sizes = spec.column_sizes();
    if sizes.iter().ne(sizes.iter().rev()) {
        return None;
    }
    let n_columns = spec.n_columns();
    let candidates: [fn(Site, usize, usize) -> Site; 2] = [
        |s, nc, _| Site { column: nc + 1 - s.column, row: s.row },
        |s, nc, n| Site { column: nc + 1 - s.column, row: n + 1 - s.row },
    ];
    'candidate: for map in candidates {
        let perm: Vec<usize> = spec
            .sites()
            .iter()
            .map(|&s| {
                let image = map(s, n_columns, sizes[s.column - 1]);
                spec.index_of(image.column, image.row).unwrap()
            })
            .collect();
        for &(a, b) in spec.bonds() {
            if !spec.is_bond(perm[a], perm[b]) {
                continue 'candidate;
            }
        }
        let maps_onto = |from: &[Reservoir], to: &[Reservoir]| {
            from.len() == to.len()
                && from
                    .iter()
                    .all(|r| to.iter().any(|t| t.site == perm[r.site] && t.gamma == r.gamma))
        };
        if maps_onto(spec.left_reservoir(), spec.right_reservoir())
            && maps_onto(spec.right_reservoir(), spec.left_reservoir())
        {
            return Some(perm);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_based(bonds: &[(usize, usize)]) -> Vec<(usize, usize)> {
        bonds.iter().map(|&(a, b)| (a + 1, b + 1)).collect()
    }

    #[test]
    fn named_geometry_counts() {
        let expect = [
            (GeometryKind::Triangular10, 10, vec![1, 2, 3, 4], 1, 4, 1.0, 0.25),
            (GeometryKind::Asym8, 8, vec![1, 2, 3, 2], 1, 2, 1.0, 0.5),
            (GeometryKind::Sym10, 10, vec![2; 5], 2, 2, 1.0, 1.0),
            (GeometryKind::Sym9, 9, vec![3; 3], 3, 3, 1.0, 1.0),
        ];
        for (kind, n, cols, nl, nr, gl, gr) in expect {
            let spec = build_geometry(&kind).unwrap();
            assert_eq!(spec.n_sites(), n, "{}", kind.name());
            assert_eq!(spec.column_sizes(), &cols[..]);
            assert_eq!(spec.left_reservoir().len(), nl);
            assert_eq!(spec.right_reservoir().len(), nr);
            assert!(spec.left_reservoir().iter().all(|r| r.gamma == gl));
            assert!(spec.right_reservoir().iter().all(|r| r.gamma == gr));
        }
    }

    #[test]
    fn triangular10_bonds() {
        let spec = build_geometry(&GeometryKind::Triangular10).unwrap();
        assert_eq!(spec.bonds().len(), 18);
        let right: Vec<usize> = spec.right_reservoir().iter().map(|r| r.site + 1).collect();
        assert_eq!(right, vec![7, 8, 9, 10]);
        assert_eq!(spec.cut_bonds(1).len(), 2);
        assert_eq!(spec.cut_bonds(3).len(), 6);
    }

    #[test]
    fn asym8_narrowing_column() {
        let spec = build_geometry(&GeometryKind::Asym8).unwrap();
        // column 3 = sites 4,5,6; column 4 = sites 7,8
        let cut = one_based(&spec.cut_bonds(3));
        assert_eq!(cut, vec![(4, 7), (5, 7), (5, 8), (6, 8)]);
        assert!(spec.is_bond(6, 7));
    }

    #[test]
    fn six_site_triangle_bonds() {
        let spec = six_site_triangle(&[0], &[3, 4, 5]).unwrap();
        assert_eq!(
            one_based(spec.bonds()),
            vec![(1, 2), (1, 3), (2, 3), (2, 4), (2, 5), (3, 5), (3, 6), (4, 5), (5, 6)]
        );
    }

    #[test]
    fn custom_validation_errors() {
        let ok = CustomGeometry {
            column_sizes: vec![1, 1],
            bonds: vec![(0, 1)],
            left: vec![(0, 1.0)],
            right: vec![(1, 1.0)],
        };
        assert!(build_geometry(&GeometryKind::Custom(ok.clone())).is_ok());

        let cases = [
            (CustomGeometry { bonds: vec![], ..ok.clone() }, "disconnected"),
            (CustomGeometry { bonds: vec![(0, 0)], ..ok.clone() }, "self-bond"),
            (CustomGeometry { bonds: vec![(0, 1), (1, 0)], ..ok.clone() }, "duplicate"),
            (CustomGeometry { bonds: vec![(0, 2)], ..ok.clone() }, "out of range"),
            (CustomGeometry { left: vec![(1, 1.0)], ..ok.clone() }, "leftmost"),
            (CustomGeometry { right: vec![(0, 1.0)], ..ok.clone() }, "rightmost"),
            (CustomGeometry { left: vec![(0, 0.0)], ..ok.clone() }, "non-positive"),
            (
                CustomGeometry {
                    column_sizes: vec![1, 1, 1],
                    bonds: vec![(0, 2), (1, 2)],
                    left: vec![(0, 1.0)],
                    right: vec![(2, 1.0)],
                },
                "skips a column",
            ),
        ];
        for (geom, needle) in cases {
            let err = build_geometry(&GeometryKind::Custom(geom)).unwrap_err().to_string();
            assert!(err.contains(needle), "{err} should mention {needle}");
        }
    }

    #[test]
    fn field_profiles() {
        let tri = build_geometry(&GeometryKind::Triangular10).unwrap();
        let lr = assign_field(&tri, FieldProfile::AscendingLR { h0: 1.0, step: 1.0 });
        assert_eq!(lr.values[9], 4.0);
        assert_eq!(lr.values[0], 1.0);
        let rl = assign_field(&tri, FieldProfile::AscendingRL { h0: 1.0, step: 1.0 });
        assert_eq!(rl.values[0], 4.0);
        assert_eq!(rl.values[9], 1.0);

        let sym10 = build_geometry(&GeometryKind::Sym10).unwrap();
        let hom = assign_field(&sym10, FieldProfile::Homogeneous(1.0));
        assert!(hom.values.iter().all(|&h| h == 1.0));
        assert!(hom.is_homogeneous());

        for (kind, max) in GeometryKind::NAMED.iter().zip([4.0, 4.0, 5.0, 3.0]) {
            let spec = build_geometry(kind).unwrap();
            let f = assign_field(&spec, FieldProfile::AscendingLR { h0: 1.0, step: 1.0 });
            assert_eq!(f.max(), max);
        }
    }

    #[test]
    fn enumerate_two_sites_is_single_bond() {
        let list = enumerate_small_geometries(2, 1, 1).unwrap();
        assert_eq!(list.len(), 1);
        assert_eq!(list[0].bonds(), &[(0, 1)]);
        assert_eq!(list[0].column_sizes(), &[1, 1]);
    }

    #[test]
    fn enumerate_six_sites() {
        let one_two = enumerate_small_geometries(6, 1, 2).unwrap();
        assert!(!one_two.is_empty());
        let one_three = enumerate_small_geometries(6, 1, 3).unwrap();
        let full = six_site_triangle(&[0], &[3, 4, 5]).unwrap();
        assert!(one_three.contains(&full));
        // no reservoir placement can exceed the boundary column
        assert!(enumerate_small_geometries(6, 2, 1).unwrap().is_empty());
        assert!(enumerate_small_geometries(7, 1, 1).is_err());
    }

    #[test]
    fn mirror_of_named_geometries() {
        let sym9 = build_geometry(&GeometryKind::Sym9).unwrap();
        let p = mirror_permutation(&sym9).unwrap();
        for (i, &j) in p.iter().enumerate() {
            assert_eq!(sym9.site(j).column, 4 - sym9.site(i).column);
        }
        let sym10 = build_geometry(&GeometryKind::Sym10).unwrap();
        let p = mirror_permutation(&sym10).unwrap();
        for (i, &j) in p.iter().enumerate() {
            assert_eq!(sym10.site(j).column, 6 - sym10.site(i).column);
        }
        let tri = build_geometry(&GeometryKind::Triangular10).unwrap();
        assert!(mirror_permutation(&tri).is_none());
        assert!(mirror_permutation(&build_geometry(&GeometryKind::Asym8).unwrap()).is_none());
    }

    #[test]
    fn combinations_count() {
        assert_eq!(combinations(vec![3, 4, 5], 2), vec![vec![3, 4], vec![3, 5], vec![4, 5]]);
        assert_eq!(combinations(vec![1], 1), vec![vec![1]]);
        assert!(combinations(vec![1], 2).is_empty());
    }
}
