#![allow(dead_code)]

use ndarray::Array2;
use num_complex::Complex64 as C64;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};
use xxz_rectify::lattice::{
    assign_field, build_geometry, CustomGeometry, FieldAssignment, FieldProfile, GeometryKind, LatticeSpec,
};

pub fn rng(seed: u64) -> StdRng {
    StdRng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut StdRng, d: usize) -> Array2<C64> {
    Array2::from_shape_fn((d, d), |_| C64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
}

/// G G† / tr(G G†): a full-rank random density matrix.
pub fn random_density(rng: &mut StdRng, d: usize) -> Array2<C64> {
    let g = random_matrix(rng, d);
    let rho = g.dot(&g.t().mapv(|v| v.conj()));
    let tr: C64 = rho.diag().sum();
    rho / tr
}

/// Open chain of `n` single-site columns with one reservoir at each end.
pub fn chain(n: usize, gamma: f64) -> LatticeSpec {
    build_geometry(&GeometryKind::Custom(CustomGeometry {
        column_sizes: vec![1; n],
        bonds: (0..n - 1).map(|i| (i, i + 1)).collect(),
        left: vec![(0, gamma)],
        right: vec![(n - 1, gamma)],
    }))
    .unwrap()
}

/// Field rising by one per column from the left (config 1) or the right
/// (config 2), starting at 1.
pub fn config(spec: &LatticeSpec, which: u8) -> FieldAssignment {
    let profile = match which {
        1 => FieldProfile::AscendingLR { h0: 1.0, step: 1.0 },
        2 => FieldProfile::AscendingRL { h0: 1.0, step: 1.0 },
        _ => panic!("field config {which}"),
    };
    assign_field(spec, profile)
}

pub fn homogeneous(spec: &LatticeSpec, h: f64) -> FieldAssignment {
    assign_field(spec, FieldProfile::Homogeneous(h))
}
