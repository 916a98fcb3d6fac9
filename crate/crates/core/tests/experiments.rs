use nilwalk::config::ExperimentConfig;
use nilwalk::fourier::{band_limited_sandwich, PiecewiseLinear};
use nilwalk::homogeneous::{cesaro_equidistribution, lazy_walk_tv_bound};
use nilwalk::measures::{Law1d, MeasureSpec};
use nilwalk::walk_sim::{llt_box_experiment, run_products, BoxRegion, LltEstimator, WalkConfig};
use nilwalk::NilpotentAlgebra;

const HEIS: &str = r#"{"algebra":"heisenberg3","measure":{"kind":"gaussian_layers","cov":[[1,0,0],[0,1,0],[0,0,1]]},
    "experiment":"llt","seed":99,"M":30000,"N":[32]}"#;

#[test]
fn products_do_not_depend_on_worker_count() {
    let c = ExperimentConfig::from_json_str(HEIS).unwrap();
    let w = c.walk_config().unwrap().with_m(9000);
    let a = run_products(&w.clone().workers(Some(1))).unwrap();
    let b = run_products(&w.clone().workers(Some(3))).unwrap();
    assert_eq!(a, b);
    let other = run_products(&WalkConfig { seed: 100, ..w }).unwrap();
    assert_ne!(a, other);
}

#[test]
fn estimators_agree_on_heisenberg() {
    let w = ExperimentConfig::from_json_str(HEIS)
        .unwrap()
        .walk_config()
        .unwrap();
    let region = BoxRegion::centered_cube(3, 1.0);
    let ind = llt_box_experiment(&w.with_m(200_000), &region, LltEstimator::Indicator).unwrap();
    let cond = llt_box_experiment(&w, &region, LltEstimator::Conditional).unwrap();
    let se = (ind.stderr.powi(2) + cond.stderr.powi(2)).sqrt();
    assert!(
        (ind.estimate - cond.estimate).abs() < 4.0 * se,
        "{ind:?} {cond:?}"
    );
    assert!(cond.stderr < ind.stderr);
}

#[test]
fn abelian_walk_matches_gaussian_density() {
    let m = MeasureSpec::product(vec![
        Law1d::Gaussian { mean: 0.0, sd: 1.0 },
        Law1d::Uniform { lo: -1.0, hi: 1.0 },
    ])
    .unwrap();
    let w = WalkConfig::new(&NilpotentAlgebra::abelian(2), m, 16, 200_000, 3).unwrap();
    let r = llt_box_experiment(
        &w,
        &BoxRegion::centered_cube(2, 1.0),
        LltEstimator::Indicator,
    )
    .unwrap();
    let target = 1.0 / (2.0 * std::f64::consts::PI * (1.0f64 / 3.0).sqrt());
    assert!(
        (r.estimate - target).abs() < 0.05 * target,
        "{} vs {target}",
        r.estimate
    );
}

#[test]
fn cesaro_discrepancy_shrinks_and_center_control_fails() {
    let drifted = MeasureSpec::product(vec![
        Law1d::Gaussian { mean: 0.3, sd: 0.4 },
        Law1d::Gaussian { mean: 0.1, sd: 0.4 },
        Law1d::Uniform { lo: 0.0, hi: 1.0 },
    ])
    .unwrap();
    let short = cesaro_equidistribution(&drifted, 200, 50, 8, 1, None).unwrap();
    let long = cesaro_equidistribution(&drifted, 1600, 50, 8, 1, None).unwrap();
    assert!(long.max_cell_deviation < short.max_cell_deviation);
    let center = MeasureSpec::product(vec![
        Law1d::Constant(0.0),
        Law1d::Constant(0.0),
        Law1d::Uniform { lo: 0.0, hi: 1.0 },
    ])
    .unwrap();
    let stuck = cesaro_equidistribution(&center, 400, 50, 8, 1, None).unwrap();
    assert!(stuck.max_cell_deviation > 0.05);
}

#[test]
fn lazy_bound_decays_like_log_over_root() {
    let v: Vec<f64> = [64u64, 256, 1024, 4096]
        .iter()
        .map(|&n| lazy_walk_tv_bound(n).unwrap())
        .collect();
    assert!(v.windows(2).all(|w| w[1] < w[0]));
    assert!(v[3] < 0.1);
}

#[test]
fn sandwich_of_an_asymmetric_tent() {
    let f = PiecewiseLinear::new(vec![(-0.5, 0.0), (0.0, 2.0), (1.5, 0.0)]).unwrap();
    let sw = band_limited_sandwich(&f, 0.2, 4096.0).unwrap();
    assert_eq!(sw.violations(5000, 4.0), 0);
    assert!(sw.l1_gap_exact() < 0.2);
    assert!(PiecewiseLinear::new(vec![(0.0, 1.0), (1.0, 0.0)]).is_err());
}
