use std::f64::consts::PI;

use num_complex::Complex64;
use split_nls::experiments::*;
use split_nls::oracles::*;
use split_nls::spectral::{gradient, l2_norm};
use split_nls::*;

fn plane_wave() -> InitialDataSpec {
    InitialDataSpec::PlaneWave { amplitude: 0.6, modes: vec![1] }
}

#[test]
fn plane_wave_ladder_is_exact_regime() {
    let grid = Grid::line(2.0 * PI, 32).unwrap();
    let params = EquationParams::new(1, 2.0, -1.0).unwrap();
    let phi = make_initial_data(&plane_wave(), &grid, &params).unwrap();
    let ladder = LadderSpec { tau0: 0.1, levels: 4, horizon: 1.0 };
    for scheme in [SchemeKind::ModifiedLie, SchemeKind::Lie, SchemeKind::Strang] {
        let problem = LadderProblem { params, scheme, profile: CutoffProfile::Smooth };
        let options = ConvergenceOptions { rate_band: Some((0.8, 1.2)), ..Default::default() };
        let report = convergence_ladder(&phi, &ladder, &problem, &Reference::Analytic(plane_wave()), &options).unwrap();
        assert!(report.flags.iter().any(|f| f == "exact regime"), "{scheme}: {:?}", report.flags);
        assert!(report.fit.is_none());
        assert!(report.rows.iter().all(|r| r.valid && r.metric <= 1e-10));
        assert!(report.pass, "{:?}", report.reason);
    }
}

#[test]
fn soliton_strang_ladder_is_second_order() {
    let grid = Grid::line(60.0, 512).unwrap();
    let params = EquationParams::new(1, 2.0, 1.0).unwrap();
    let phi = make_initial_data(&InitialDataSpec::Soliton, &grid, &params).unwrap();
    let ladder = LadderSpec { tau0: 0.05, levels: 4, horizon: 1.0 };
    let problem = LadderProblem { params, scheme: SchemeKind::Strang, profile: CutoffProfile::Smooth };
    let options = ConvergenceOptions { rate_band: Some((1.7, 2.2)), ..Default::default() };
    let report =
        convergence_ladder(&phi, &ladder, &problem, &Reference::Analytic(InitialDataSpec::Soliton), &options).unwrap();
    assert!(report.pass, "{:?} {:?}", report.reason, report.fit);
    assert!(report.metrics["max_relative_norm_drift"] <= 1e-11);
}

#[test]
fn fine_reference_reports_uncertainty() {
    let grid = Grid::line(40.0, 256).unwrap();
    let params = EquationParams::new(1, 2.0, -1.0).unwrap();
    let phi = make_initial_data(&InitialDataSpec::Gaussian { amplitude: 1.0, width: 1.0 }, &grid, &params).unwrap();
    let ladder = LadderSpec { tau0: 2f64.powi(-4), levels: 4, horizon: 0.5 };
    let problem = LadderProblem { params, scheme: SchemeKind::ModifiedLie, profile: CutoffProfile::Smooth };
    let reference = Reference::Fine { scheme: SchemeKind::ModifiedLie, ratio: 16 };
    let report = convergence_ladder(&phi, &ladder, &problem, &reference, &ConvergenceOptions::default()).unwrap();
    let uncertainty = report.reference_uncertainty.unwrap();
    let smallest = report.rows.last().unwrap().metric;
    assert!(uncertainty > 0.0 && uncertainty < smallest);
    assert!(report.metrics["max_norm_increase"] <= 1e-12);
    let projected = ConvergenceOptions { compare_projected: true, ..Default::default() };
    let report = convergence_ladder(&phi, &ladder, &problem, &reference, &projected).unwrap();
    assert!(report.rows.iter().all(|r| r.valid));
}

#[test]
fn blow_up_rows_are_invalid() {
    let grid = Grid::line(8.0, 16).unwrap();
    let params = EquationParams::new(1, 2.0, 1.0).unwrap();
    let phi = Field::constant(&grid, Complex64::new(1e200, 0.0));
    let ladder = LadderSpec { tau0: 0.1, levels: 4, horizon: 1.0 };
    let problem = LadderProblem { params, scheme: SchemeKind::Lie, profile: CutoffProfile::Smooth };
    let spec = InitialDataSpec::PlaneWave { amplitude: 1e200, modes: vec![0] };
    let report = convergence_ladder(&phi, &ladder, &problem, &Reference::Analytic(spec), &Default::default()).unwrap();
    assert!(report.rows.iter().all(|r| !r.valid));
    assert!(!report.pass);
}

#[test]
fn strichartz_probe_oracles() {
    let grid = Grid::line(2.0 * PI, 32).unwrap();
    let params = EquationParams::new(1, 2.0, -1.0).unwrap();
    let phi = make_initial_data(&plane_wave(), &grid, &params).unwrap();
    let ladder = LadderSpec { tau0: 0.1, levels: 4, horizon: 1.0 };
    let report = strichartz_probe(&phi, AdmissiblePair::energy(), &ladder, CutoffProfile::Smooth, 4.0).unwrap();
    assert!(report.rows.iter().all(|r| (r.metric - 1.0).abs() < 1e-13));
    assert!(report.pass);
    let zero = Field::zeros(&grid, Space::Physical);
    let report = strichartz_probe(&zero, AdmissiblePair::new(8.0, 4.0), &ladder, CutoffProfile::Smooth, 4.0).unwrap();
    assert!(report.rows.iter().all(|r| r.metric == 0.0));
}

#[test]
fn rough_strichartz_probe_is_bounded() {
    let grid = Grid::line(60.0, 2048).unwrap();
    let params = EquationParams::new(1, 2.0, -1.0).unwrap();
    let spec = InitialDataSpec::Rough { amplitude: 1.0, decay_exponent: 1.55, seed: 42 };
    let phi = make_initial_data(&spec, &grid, &params).unwrap();
    let ladder = LadderSpec { tau0: 2f64.powi(-4), levels: 7, horizon: 1.0 };
    let report = strichartz_probe(&phi, AdmissiblePair::new(8.0, 4.0), &ladder, CutoffProfile::Smooth, 4.0).unwrap();
    assert_eq!(report.rows.len(), 7);
    assert!(report.pass, "{:?}", report.metrics);
}

#[test]
fn plane_wave_stability_is_flat() {
    let grid = Grid::line(2.0 * PI, 32).unwrap();
    let params = EquationParams::new(1, 2.0, -1.0).unwrap();
    let phi = make_initial_data(&plane_wave(), &grid, &params).unwrap();
    let ladder = LadderSpec { tau0: 0.1, levels: 4, horizon: 1.0 };
    let problem = LadderProblem { params, scheme: SchemeKind::ModifiedLie, profile: CutoffProfile::Smooth };
    let report = stability_sweep(&phi, &ladder, &problem, &[AdmissiblePair::energy()], 4.0).unwrap();
    // ||u||_2 + ||u'||_2 with |u'| = |u| for the unit mode.
    let expected = 2.0 * l2_norm(&phi);
    assert!(report.rows.iter().all(|r| (r.metric - expected).abs() < 1e-12));
    let odd = stability_sweep(&phi, &ladder, &problem, &[AdmissiblePair::new(3.0, 3.0)], 4.0).unwrap();
    assert!(odd.flags.iter().any(|f| f.contains("not admissible")));
}

/// `u = sqrt(2) sech(x) e^{it}` satisfies `u_t = i u_xx + i |u|^2 u`.
#[test]
fn soliton_residual_vanishes() {
    let grid = Grid::line(60.0, 2048).unwrap();
    let params = EquationParams::new(1, 2.0, 1.0).unwrap();
    let u = analytic_solution(&InitialDataSpec::Soliton, 0.3, &grid, &params).unwrap();
    let uxx = gradient(&gradient(&u)[0])[0].clone();
    let residual = u
        .values()
        .iter()
        .zip(uxx.values())
        .map(|(v, d2)| {
            let ut = Complex64::i() * v;
            (ut - Complex64::i() * d2 - Complex64::i() * v.norm_sqr() * v).norm()
        })
        .fold(0.0, f64::max);
    assert!(residual <= 1e-8, "{residual}");
}

#[test]
fn reference_solver_accuracy() {
    let grid = Grid::line(60.0, 1024).unwrap();
    let params = EquationParams::new(1, 2.0, 1.0).unwrap();
    let phi = make_initial_data(&InitialDataSpec::Soliton, &grid, &params).unwrap();
    let reference = ReferenceConfig { tau_ref: 1e-4, sample_interval: 0.1 };
    let traj = reference_solve(&phi, 1.0, &reference, &params).unwrap();
    let exact = analytic_solution(&InitialDataSpec::Soliton, 1.0, &grid, &params).unwrap();
    assert!(l2_norm(&traj.final_state().unwrap().difference(&exact).unwrap()) <= 1e-6);

    let gauss = make_initial_data(&InitialDataSpec::Gaussian { amplitude: 1.0, width: 1.0 }, &grid, &params).unwrap();
    let coarse = ReferenceConfig { tau_ref: 0.01, sample_interval: 0.1 };
    let a = reference_self_consistency(&gauss, 1.0, &coarse, &params).unwrap();
    let b = reference_self_consistency(&gauss, 1.0, &ReferenceConfig { tau_ref: 0.005, ..coarse }, &params).unwrap();
    assert!(a / b >= 3.5, "{a} / {b}");

    let wave = InitialDataSpec::PlaneWave { amplitude: 0.6, modes: vec![1] };
    let grid = Grid::line(2.0 * PI, 32).unwrap();
    let phi = make_initial_data(&wave, &grid, &params).unwrap();
    let traj = reference_solve(&phi, 1.0, &ReferenceConfig::for_interval(0.1), &params).unwrap();
    let exact = analytic_solution(&wave, 1.0, &grid, &params).unwrap();
    assert!(l2_norm(&traj.final_state().unwrap().difference(&exact).unwrap()) <= 1e-10);
}
