use axiswirl::grid::{build_grid, lp_norm_planar, HalfPlaneGrid, Quantity, ScalarField};
use axiswirl::initial_data::{make_data, DataSpec};
use axiswirl::mild::{picard_run, picard_solve, splitting_oracle_run, PicardConfig};
use axiswirl::Error;

fn setup(amp_omega: f64, amp_swirl: f64) -> (HalfPlaneGrid, ScalarField, ScalarField) {
    let g = build_grid(40, 40, 12.0, 6.0).unwrap();
    let spec = DataSpec { width: 0.8, amp_omega, amp_swirl, ..DataSpec::default() };
    let (w, u) = make_data(&spec, &g).unwrap();
    (g, w, u)
}

fn cfg(nodes: usize) -> PicardConfig {
    PicardConfig { nodes, tol: 1e-10, max_iters: 30 }
}

#[test]
fn zero_swirl_stays_zero() {
    let (_, w, u) = setup(1.0, 0.0);
    let (x, d) = picard_run(&w, &u, 0.1, cfg(6)).unwrap();
    assert!(d.converged);
    assert!(x.states.iter().all(|s| s.swirl.is_zero()));
    let (o, _) = splitting_oracle_run(&w, &u, 0.1, 16).unwrap();
    assert!(o.states.iter().all(|s| s.swirl.is_zero()));
}

#[test]
fn picard_keeps_reflection_symmetry() {
    // z -> -z maps solutions to solutions with omega odd and u even
    let g = build_grid(40, 40, 12.0, 6.0).unwrap();
    let bump = |r: f64, z: f64| (-((r - 6.0).powi(2) + z * z) / 0.81).exp();
    let w = ScalarField::from_fn(&g, Quantity::OmegaTheta, |r, z| 3.0 * z * bump(r, z));
    let u = ScalarField::from_fn(&g, Quantity::UTheta, |r, z| 1.5 * bump(r, z));
    let (x, _) = picard_run(&w, &u, 0.2, cfg(6)).unwrap();
    for s in &x.states {
        for (f, sign) in [(&s.omega, -1.0), (&s.swirl, 1.0)] {
            let scale = f.max_abs();
            for i in 0..g.nr {
                for j in 0..g.nz {
                    assert!((f.at(i, j) - sign * f.at(i, g.nz - 1 - j)).abs() <= 1e-12 * scale);
                }
            }
        }
    }
}

#[test]
fn picard_and_oracle_agree_on_a_short_run() {
    let (_, w, u) = setup(1.0, 1.0);
    let (x, d) = picard_run(&w, &u, 0.1, cfg(12)).unwrap();
    assert!(d.converged);
    let (o, _) = splitting_oracle_run(&w, &u, 0.1, 128).unwrap();
    let (a, b) = (&x.last().omega, &o.last().omega);
    let rel = lp_norm_planar(&a.sub(b).unwrap(), 2.0).unwrap() / lp_norm_planar(a, 2.0).unwrap();
    assert!(rel < 1e-4, "{rel:e}");
}

#[test]
fn large_data_diverge_with_norms_in_the_error() {
    let (_, w, u) = setup(600.0, 0.0);
    match picard_solve(&w, &u, 0.5, 1e-10, 6) {
        Err(Error::Diverged(msg)) => assert!(msg.contains("xt_norms"), "{msg}"),
        other => panic!("expected divergence, got {:?}", other.map(|r| r.1)),
    }
}
