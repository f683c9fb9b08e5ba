mod common;

use xxz_rectify::lattice::{build_geometry, enumerate_small_geometries, mirror_permutation, six_site_triangle, GeometryKind};
use xxz_rectify::liouville::{Liouvillian, Representation, StateVector};
use xxz_rectify::operators::{build_hamiltonian, build_jump_operators, Direction, DriveSpec, ModelParams};
use xxz_rectify::steady::{evolve_to_ness, PropagationOptions};
use xxz_rectify::transport::{
    bond_currents, column_current, scan_small_geometries, solve_point, solve_row, sweep, SolveOptions, SolverKind,
    HOMOGENEITY_TOL,
};

fn dense() -> SolveOptions {
    SolveOptions { solver: SolverKind::Dense, ..Default::default() }
}

#[test]
fn six_site_triangle_conserves_current() {
    let spec = six_site_triangle(&[0], &[3, 4, 5]).unwrap();
    for delta in [-1.0, 0.0, 1.0] {
        let params = ModelParams::new(delta, common::config(&spec, 1));
        let p = solve_point(&spec, &params, &DriveSpec::separate(Direction::Forward), &dense()).unwrap();
        assert!(p.accepted(), "{:?}", p.failure);
        let r = &p.report;
        // 1-based: J12 + J13 = J24 + J25 + J35 + J36
        let left = r.current(0, 1).unwrap() + r.current(0, 2).unwrap();
        let right = r.current(1, 3).unwrap() + r.current(1, 4).unwrap() + r.current(2, 4).unwrap() + r.current(2, 5).unwrap();
        assert!((left - right).abs() <= 1e-6, "Δ={delta}: {left} vs {right}");
        assert!(r.max_divergence() <= 1e-6);
        assert!(left > 0.0, "forward drive pushes current to the right");
    }
}

#[test]
fn unpolarized_reservoirs_carry_no_current() {
    let spec = build_geometry(&GeometryKind::Sym9).unwrap();
    let params = ModelParams { f: 0.0, ..ModelParams::new(0.5, common::config(&spec, 1)) };
    let p = solve_point(&spec, &params, &DriveSpec::separate(Direction::Forward), &SolveOptions::default()).unwrap();
    assert!(p.accepted());
    for (bond, j) in &p.report.bond_currents {
        assert!(j.abs() <= 1e-8, "{bond:?}: {j}");
    }
}

#[test]
fn propagated_sym9_state_has_homogeneous_column_current() {
    let spec = build_geometry(&GeometryKind::Sym9).unwrap();
    let params = ModelParams::new(0.5, common::homogeneous(&spec, 1.0));
    let h = build_hamiltonian(&spec, &params).unwrap();
    let jumps = build_jump_operators(&spec, &params, &DriveSpec::separate(Direction::Forward)).unwrap();
    let w = Liouvillian::build(h, jumps, Representation::MatrixFree).unwrap();
    let sol = evolve_to_ness(&w.magnetization_sector().unwrap(), &StateVector::maximally_mixed(9), &PropagationOptions::default())
        .unwrap();
    assert!(sol.converged);
    let report = bond_currents(&sol.state, &spec, 1.0).unwrap();
    let (j, residual) = column_current(&report, HOMOGENEITY_TOL).unwrap();
    assert!(residual <= 1e-7, "{residual}");
    assert!(j > 0.0);
}

#[test]
fn mid_propagation_state_is_rejected() {
    let spec = six_site_triangle(&[0], &[3, 4, 5]).unwrap();
    let params = ModelParams::new(0.5, common::config(&spec, 1));
    let opts = SolveOptions {
        solver: SolverKind::Propagation,
        propagation: PropagationOptions { t_final: 1.0, checkpoint_interval: 0.5, ..Default::default() },
        ..Default::default()
    };
    let p = solve_point(&spec, &params, &DriveSpec::separate(Direction::Forward), &opts).unwrap();
    assert!(!p.accepted());
    assert!(column_current(&p.report, HOMOGENEITY_TOL).is_err());
}

/// Mirror-symmetric geometries with a homogeneous field do not rectify.
/// Some of them have dark modes and several steady states; the iterative
/// solver started from the maximally mixed state still picks one.
#[test]
fn mirror_symmetric_small_geometries() {
    let mut checked = 0;
    for n in 2..=5 {
        for spec in enumerate_small_geometries(n, 1, 1).unwrap() {
            if mirror_permutation(&spec).is_none() {
                continue;
            }
            let params = ModelParams::new(0.5, common::homogeneous(&spec, 1.0));
            let row = solve_row(&spec, &params, &DriveSpec::separate(Direction::Forward), &SolveOptions::default());
            assert!(!row.failed(), "{:?} {:?} {:?}", spec.column_sizes(), row.forward.failure, row.reverse.failure);
            assert!((row.forward.j + row.reverse.j).abs() <= 1e-6);
            checked += 1;
        }
    }
    assert!(checked >= 3, "only {checked} symmetric geometries");
}

#[test]
fn field_reversal_flips_rectification() {
    let spec = six_site_triangle(&[0], &[3, 4, 5]).unwrap();
    let drive = DriveSpec::separate(Direction::Forward);
    let r = |cfg| {
        let row = solve_row(&spec, &ModelParams::new(0.0, common::config(&spec, cfg)), &drive, &dense());
        row.rectification.unwrap().r.unwrap()
    };
    let (r1, r2) = (r(1), r(2));
    assert!(r1.abs() > 1e-3, "{r1}");
    assert!((r1 + r2).abs() <= 1e-6, "{r1} {r2}");
}

#[test]
fn collective_drives_match_the_dense_oracle() {
    use xxz_rectify::operators::DriveMode;
    // reservoirs on sites 4 and 5 only, so no row flip maps the drive onto itself
    let spec = six_site_triangle(&[0], &[3, 4]).unwrap();
    for mode in [DriveMode::CollectiveUniform, DriveMode::CollectivePhased] {
        for delta in [0.0, 0.5] {
            let params = ModelParams::new(delta, common::config(&spec, 1));
            let drive = DriveSpec { mode, direction: Direction::Forward };
            let oracle = solve_row(&spec, &params, &drive, &dense());
            let default = solve_row(&spec, &params, &drive, &SolveOptions::default());
            let (a, b) = (oracle.rectification.unwrap(), default.rectification.unwrap());
            assert!((a.j_forward - b.j_forward).abs() <= 1e-8, "{mode:?} {delta}");
            assert!((a.j_reverse - b.j_reverse).abs() <= 1e-8, "{mode:?} {delta}");
        }
    }
}

/// A uniform collective drive on a row-flip symmetric lattice commutes with
/// the flip, so the steady state is not unique. The default solver still
/// certifies the state reached from the maximally mixed one.
#[test]
fn symmetric_collective_drive_is_degenerate() {
    use xxz_rectify::operators::DriveMode;
    use xxz_rectify::Error;
    let spec = six_site_triangle(&[0], &[3, 4, 5]).unwrap();
    let params = ModelParams::new(0.5, common::config(&spec, 1));
    let drive = DriveSpec { mode: DriveMode::CollectiveUniform, direction: Direction::Forward };
    assert!(matches!(solve_point(&spec, &params, &drive, &dense()), Err(Error::DegenerateNullSpace(..))));
    let p = solve_point(&spec, &params, &drive, &SolveOptions::default()).unwrap();
    assert!(p.accepted());
    assert_eq!(p.ness.method, xxz_rectify::steady::SolveMethod::Propagation);
}

#[test]
fn two_site_scan_is_symmetric() {
    let report = scan_small_geometries(2, 1, 1, 1.0, &DriveSpec::separate(Direction::Forward), &[0.0, 0.5, 1.0], &dense())
        .unwrap();
    assert_eq!(report.geometries.len(), 1);
    assert_eq!(report.entries.len(), 3);
    assert_eq!(report.failures(), 0);
    assert!(report.max_abs_r() <= 1e-10);
}

#[test]
fn sweep_is_deterministic_and_ordered() {
    let spec = six_site_triangle(&[0], &[3, 4, 5]).unwrap();
    let params = ModelParams::new(0.0, common::config(&spec, 1));
    let drive = DriveSpec::separate(Direction::Forward);
    let deltas = [1.0, -0.5, 0.0, 2.0];
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| sweep(&spec, &params, &drive, &deltas, &SolveOptions::default()).unwrap())
    };
    let (a, b) = (run(1), run(3));
    let strip = |rows: Vec<xxz_rectify::transport::SweepRow>| {
        rows.into_iter()
            .map(|mut r| {
                r.forward.wall_time = 0.0;
                r.reverse.wall_time = 0.0;
                r
            })
            .collect::<Vec<_>>()
    };
    let (a, b) = (strip(a), strip(b));
    assert_eq!(a, b);
    assert_eq!(a.iter().map(|r| r.delta).collect::<Vec<_>>(), deltas);
}

#[test]
fn sweep_records_failures_per_row() {
    let spec = six_site_triangle(&[0], &[5]).unwrap();
    let params = ModelParams::new(0.0, common::config(&spec, 1));
    let opts = SolveOptions {
        solver: SolverKind::Propagation,
        propagation: PropagationOptions { t_final: 0.5, checkpoint_interval: 0.5, ..Default::default() },
        ..Default::default()
    };
    let rows = sweep(&spec, &params, &DriveSpec::separate(Direction::Forward), &[0.0, 1.0], &opts).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r.failed() && r.forward.failure.is_some()));
}
