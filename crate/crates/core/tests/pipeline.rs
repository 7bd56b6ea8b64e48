use pxc_core::cavity::{ev_to_hartree, BareMode};
use pxc_core::compare::{delta_rho, i_metric};
use pxc_core::fields::{integrate, read_grid_file, write_grid_file, Direction, Grid};
use pxc_core::functionals::{PxcParams, XcChoice};
use pxc_core::kohn_sham::{EigenOptions, KSState, KohnSham, Mixing, Nucleus, ScfOptions, SystemSpec};

fn he_spec() -> SystemSpec {
    let g = Grid::cube(6.0, 0.4).unwrap();
    SystemSpec::new(vec![Nucleus::new([0.0; 3], 2.0, 0.5).unwrap()], 2, g, true).unwrap()
}

fn opts() -> ScfOptions {
    ScfOptions {
        mixing: Mixing::Pulay { alpha: 0.3, depth: 5 },
        tol_density: 1e-9,
        tol_eig: 1e-9,
        eigen: EigenOptions { tol: 1e-9, ..EigenOptions::default() },
        ..ScfOptions::default()
    }
}

fn run(spec: &SystemSpec, lambda: f64, eta: Option<f64>) -> KSState {
    let mode = BareMode::new(ev_to_hartree(2.0), lambda, Direction::Z).unwrap();
    let pxc = eta.map(|e| PxcParams::default().with_eta(e).unwrap());
    KohnSham::new(spec, &[mode], pxc, XcChoice::LdaPz81, false).unwrap().solve(&opts()).unwrap()
}

#[test]
fn smaller_eta_shrinks_the_density_response() {
    let spec = he_spec();
    let free = run(&spec, 0.05, None);
    let full = run(&spec, 0.05, Some(1.0));
    let scaled = run(&spec, 0.05, Some(0.1));
    let d_full = delta_rho(&full.density, &free.density).unwrap();
    let d_scaled = delta_rho(&scaled.density, &free.density).unwrap();
    assert!(d_scaled.max_abs() < d_full.max_abs(), "{} vs {}", d_scaled.max_abs(), d_full.max_abs());
    assert!(d_full.max_abs() > 1e-6);
    // Same sign structure to first order in eta.
    assert!(d_full.dot(&d_scaled).unwrap() > 0.0);
    assert!((integrate(&full.density) - 2.0).abs() < 1e-6);
}

#[test]
fn density_survives_a_file_round_trip() {
    let spec = he_spec();
    let state = run(&spec, 0.05, Some(1.0));
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("rho.grid");
    write_grid_file(&path, &state.density, "He analogue").unwrap();
    let back = read_grid_file(&path).unwrap();
    assert!(back.grid().same_as(spec.grid()));
    assert_eq!(back.values(), state.density.values());
    let free = run(&spec, 0.0, Some(1.0));
    let d = delta_rho(&back, &free.density).unwrap();
    assert_eq!(i_metric(&d, &d).unwrap(), 0.0);
    assert!(integrate(&d).abs() < 1e-6);
}
