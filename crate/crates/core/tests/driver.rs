use heatdg::adapt::{run, AdaptConfig, Driver, StepOutcome, Termination, CSV_HEADER};
use heatdg::problems::preset;

fn quadratic(ttol: f64) -> AdaptConfig<f64> {
    AdaptConfig { ttol, stol_plus: ttol, p: 6, r0: 2, k0: 0.01, ..Default::default() }
}

#[test]
fn accepted_steps_meet_thresholds() {
    let problem = preset::<f64>("quadratic_gaussian").unwrap();
    let cfg = quadratic(1e-4);
    let res = run(&problem, cfg.clone()).unwrap();
    assert_eq!(res.termination, Termination::NoRoot);
    for r in &res.records {
        assert!(r.ref_time <= cfg.ttol, "step {}", r.m);
        assert!(r.ref_space_max <= cfg.stol_plus, "step {}", r.m);
        assert!(r.bound.delta.unwrap() >= 1.0);
    }
    for w in res.records.windows(2) {
        assert!(w[1].k <= w[0].k);
        assert!(w[1].t > w[0].t);
        assert!(w[1].bound.theta_tilde >= w[0].bound.theta_tilde);
    }
    let last = res.records.last().unwrap();
    assert!(last.bound.theta_tilde > 1e3);
}

#[test]
fn hp_mode_only_shrinks_steps_and_degrees() {
    let problem = preset::<f64>("quadratic_gaussian").unwrap();
    let cfg = AdaptConfig { sigma: Some(0.47), r0: 3, ..quadratic(1e-4) };
    let res = run(&problem, cfg).unwrap();
    assert_eq!(res.records[0].r, 3);
    for w in res.records.windows(2) {
        assert!(w[1].k <= w[0].k);
        assert!(w[1].r <= w[0].r);
    }
}

#[test]
fn tighter_tolerance_never_stops_earlier() {
    let problem = preset::<f64>("quadratic_gaussian").unwrap();
    let t: Vec<f64> = [1e-3, 1e-4, 1e-5, 1e-6].iter().map(|&tol| run(&problem, quadratic(tol)).unwrap().t_final()).collect();
    for w in t.windows(2) {
        assert!(w[1] >= w[0], "{t:?}");
    }
}

#[test]
fn runs_are_deterministic() {
    let problem = preset::<f64>("cubic").unwrap();
    let cfg = AdaptConfig { max_steps: 15, ..quadratic(1e-4) };
    let a = run(&problem, cfg.clone()).unwrap();
    let b = run(&problem, cfg).unwrap();
    let rows = |r: &heatdg::adapt::RunResult<f64>| r.records.iter().map(|s| s.csv_row()).collect::<Vec<_>>();
    assert_eq!(rows(&a), rows(&b));
    assert_eq!(a.final_mesh, b.final_mesh);
    assert_eq!(CSV_HEADER.split(',').count(), rows(&a)[0].split(',').count());
}

#[test]
fn exponential_nonlinearity_blows_up() {
    let problem = preset::<f64>("exponential").unwrap();
    let cfg = AdaptConfig { ttol: 1e-4, stol_plus: 1e-4, p: 4, r0: 1, k0: 0.01, ..Default::default() };
    let res = run(&problem, cfg).unwrap();
    assert_eq!(res.termination, Termination::NoRoot);
    assert!(res.u_norm_final() > 2.0);
}

#[test]
fn single_precision_driver() {
    let problem = preset::<f32>("linear_heat").unwrap();
    let cfg = AdaptConfig::<f32> {
        ttol: 1e-2,
        stol_plus: 1e-2,
        p: 2,
        r0: 1,
        k0: 0.01,
        max_steps: 5,
        picard: heatdg::dg::PicardOptions { tol: 1e-5, max_iters: 50 },
        ..Default::default()
    };
    let mut driver = Driver::new(&problem, cfg).unwrap();
    for _ in 0..5 {
        assert_eq!(driver.step(&mut |_| {}).unwrap(), StepOutcome::Accepted);
    }
    let u = driver.records().last().unwrap().u_norm;
    let exact = (-std::f32::consts::PI.powi(2) * driver.time()).exp();
    assert!((u - exact).abs() < 1e-2, "{u} {exact}");
}
