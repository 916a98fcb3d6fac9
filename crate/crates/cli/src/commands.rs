use std::fs;
use std::path::Path;
use std::sync::Arc;

use clap::ValueEnum;
use serde_json::{json, Value};

use nilwalk::config::ExperimentConfig;
use nilwalk::filtration::WeightFiltration;
use nilwalk::fourier::{log_xi_grid, reduced_domain_scan, FrequencyPoint};
use nilwalk::free_symbolic::{dynkin_pi_with_budget, verify_path_swap_free, BlockSystem};
use nilwalk::homogeneous::{cesaro_equidistribution, haar_control, Nilmanifold};
use nilwalk::limit_law::{levy_samples, DiffusionSpec, Kde, KernelOrder};
use nilwalk::scalar::parse_q;
use nilwalk::walk_sim::{
    clt_experiment, gradual_truncation_products, llt_box_experiment, pixel_experiment,
    pixel_family, ratio_experiment, BoxRegion, DeviationSpec, LltEstimator, WalkConfig,
};
use nilwalk::{NilpotentAlgebra, Q};

use crate::output::{Report, Row};
use crate::{AlgebraSource, Failure, Global};

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
pub enum WalkKind {
    Llt,
    Clt,
    Ratio,
    Pixel,
    Theta,
}

type Outcome = Result<bool, Failure>;

fn load_config(g: &Global, path: &Path) -> Result<ExperimentConfig, Failure> {
    let text = fs::read_to_string(path)
        .map_err(|e| Failure::parse(format!("cannot read {}: {e}", path.display())))?;
    let mut c = ExperimentConfig::from_json_str(&text)?;
    if let Some(s) = g.seed {
        c.seed = s;
    }
    Ok(c)
}

fn load_algebra(src: &AlgebraSource) -> Result<NilpotentAlgebra, Failure> {
    match (&src.builtin, &src.file) {
        (Some(name), None) => Ok(NilpotentAlgebra::builtin(name)?),
        (None, Some(path)) => {
            let text = fs::read_to_string(path)
                .map_err(|e| Failure::parse(format!("cannot read {}: {e}", path.display())))?;
            Ok(NilpotentAlgebra::from_json(&text)?)
        }
        _ => Err(Failure::validation(
            "give exactly one of --builtin or --file",
        )),
    }
}

fn walk_config(g: &Global, c: &ExperimentConfig) -> Result<WalkConfig, Failure> {
    Ok(c.walk_config()?.workers(g.workers))
}

fn grid(c: &ExperimentConfig) -> Result<Vec<usize>, Failure> {
    if c.n_grid.is_empty() {
        return Err(Failure::validation("config needs a non-empty 'N' grid"));
    }
    Ok(c.n_grid.clone())
}

fn param_str<'a>(c: &'a ExperimentConfig, key: &str, default: &'a str) -> Result<&'a str, Failure> {
    match c.param(key) {
        None => Ok(default),
        Some(Value::String(s)) => Ok(s),
        Some(_) => Err(Failure::parse(format!("param '{key}' must be a string"))),
    }
}

fn target(c: &ExperimentConfig) -> Result<Option<f64>, Failure> {
    match c.param("target") {
        None => Ok(None),
        Some(v) => v
            .as_f64()
            .map(Some)
            .ok_or_else(|| Failure::parse("param 'target' must be a number")),
    }
}

fn diffusion(
    c: &ExperimentConfig,
    wc: &WalkConfig,
    default_steps: usize,
) -> Result<DiffusionSpec, Failure> {
    let steps = c.param_usize("nu_steps", default_steps)?;
    Ok(DiffusionSpec::new(
        wc.filtration.clone(),
        &wc.measure,
        steps,
    )?)
}

pub fn algebra_check(g: &Global, src: &AlgebraSource) -> Outcome {
    let alg = load_algebra(src)?;
    let c = alg.check();
    let mut r = Report::new("algebra_check", g.seed.unwrap_or(0), String::new());
    r.check("antisymmetry", c.antisymmetric, alg.name());
    r.check("jacobi", c.jacobi, alg.name());
    r.detail("algebra", alg.to_json());
    r.detail("step", json!(c.step));
    r.detail("central_series_dims", json!(c.central_series_dims));
    r.emit(g)
}

pub fn filtration_compute(g: &Global, src: &AlgebraSource, drift: Option<&str>) -> Outcome {
    let alg = load_algebra(src)?;
    let drift: Vec<Q> = match drift {
        Some(s) => s
            .split(',')
            .map(|x| parse_q(x.trim()))
            .collect::<Result<_, _>>()?,
        None => vec![Q::from_integer(0.into()); alg.dim()],
    };
    let f = WeightFiltration::new(Arc::new(alg), &drift)?;
    let mut r = Report::new("filtration_compute", g.seed.unwrap_or(0), String::new());
    r.check("nesting", f.check_nesting(), "");
    r.check("sandwich", f.check_sandwich(), "");
    r.check("vanishing", f.check_vanishing(), "");
    r.check("supplements", f.check_supplements(), "");
    r.detail("filtration", f.report());
    r.emit(g)
}

pub fn pathswap_verify(
    g: &Global,
    a: usize,
    k: usize,
    nprime: usize,
    step: usize,
    emit_poly: bool,
) -> Outcome {
    let b = BlockSystem::new(a, k, nprime)?;
    let seed = g.seed.unwrap_or(1);
    let mut r = Report::new("pathswap_verify", seed, String::new());
    let rep = verify_path_swap_free(&b, step, g.budget, seed)?;
    let what = format!("a={a} k={k} N'={nprime} step={step} pairs={}", rep.pairs);
    r.check("annihilation", rep.annihilation, &what);
    r.check("localization", rep.localization, &what);
    r.check("bracket_value", rep.bracket_value, &what);
    r.detail(
        "report",
        serde_json::to_value(&rep).expect("report serializes"),
    );
    if emit_poly {
        let tsv = dynkin_pi_with_budget(b.n(), step, g.budget)?.to_tsv();
        match &g.out {
            Some(dir) => {
                fs::create_dir_all(dir)?;
                fs::write(dir.join("pathswap_poly.tsv"), tsv)?;
            }
            None => eprint!("{tsv}"),
        }
    }
    r.emit(g)
}

pub fn walk(g: &Global, kind: WalkKind, path: &Path) -> Outcome {
    let c = load_config(g, path)?;
    let wc = walk_config(g, &c)?;
    let ns = grid(&c)?;
    let mut r = Report::new(&format!("walk_{kind:?}").to_lowercase(), c.seed, c.digest());
    let side = c.param_f64("side", 1.0)?;
    let region = BoxRegion::centered_cube(wc.dim(), side);
    match kind {
        WalkKind::Llt => {
            let est = match param_str(&c, "estimator", "auto")? {
                "indicator" => LltEstimator::Indicator,
                "conditional" => LltEstimator::Conditional,
                "auto" => LltEstimator::Auto,
                other => return Err(Failure::validation(format!("unknown estimator '{other}'"))),
            };
            let t = target(&c)?;
            let tol = c.param_f64("tolerance", 0.2)?;
            let mut last = None;
            for &n in &ns {
                let mut res = llt_box_experiment(&wc.with_n(n), &region, est)?;
                if let Some(t) = t {
                    res = res.with_target(t);
                }
                r.row(Row::new(
                    &res.experiment,
                    n,
                    c.m,
                    res.estimate,
                    res.stderr,
                    t,
                ));
                last = Some(res);
            }
            if let (Some(res), Some(_)) = (last, t) {
                r.check(
                    format!("llt N={}", res.n),
                    res.within(tol).unwrap_or(false),
                    format!(
                        "estimate {} se {} rel err {:.4}",
                        res.estimate,
                        res.stderr,
                        res.relative_error().unwrap_or(f64::NAN)
                    ),
                );
            }
        }
        WalkKind::Clt => {
            let tol = c.param_f64("cov_tolerance", 0.05)?;
            let target_cov = wc.measure.ab_covariance(&wc.filtration);
            let l1 = target_cov.len();
            let nu_samples = c.param_usize("nu_samples", 0)?;
            let nu_var = if nu_samples > 0 {
                let nu =
                    diffusion(&c, &wc, 1024)?.sample(nu_samples, c.seed ^ 0x5eed, g.workers)?;
                let d = wc.dim();
                Some(
                    (0..d)
                        .map(|k| {
                            let m = nu.iter().map(|x| x[k]).sum::<f64>() / nu.len() as f64;
                            nu.iter().map(|x| (x[k] - m).powi(2)).sum::<f64>()
                                / (nu.len() - 1) as f64
                        })
                        .collect::<Vec<f64>>(),
                )
            } else {
                None
            };
            for &n in &ns {
                let rep = clt_experiment(&wc.with_n(n))?;
                for (i, row) in rep.covariance.iter().enumerate() {
                    r.row(Row::new(
                        format!("clt_mean_{}", i + 1),
                        n,
                        c.m,
                        rep.mean[i],
                        rep.mean_stderr[i],
                        Some(0.0),
                    ));
                    for (j, v) in row.iter().enumerate().skip(i) {
                        let se = if i == j {
                            rep.variance_stderr[i]
                        } else {
                            f64::NAN
                        };
                        let t = if i < l1 && j < l1 {
                            Some(target_cov[i][j])
                        } else {
                            nu_var.as_ref().filter(|_| i == j).map(|v| v[i])
                        };
                        r.row(Row::new(
                            format!("clt_cov_{}{}", i + 1, j + 1),
                            n,
                            c.m,
                            *v,
                            se,
                            t,
                        ));
                    }
                }
                if n == *ns.last().unwrap() {
                    let worst = (0..l1)
                        .flat_map(|i| (0..l1).map(move |j| (i, j)))
                        .map(|(i, j)| (rep.covariance[i][j] - target_cov[i][j]).abs())
                        .fold(0.0, f64::max);
                    let scale = (0..l1).map(|i| target_cov[i][i]).fold(0.0, f64::max);
                    r.check(
                        format!("clt layer-1 covariance N={n}"),
                        worst <= tol * scale,
                        format!("max abs deviation {worst:.4}"),
                    );
                    if let Some(v) = &nu_var {
                        let vt = c.param_f64("upper_tolerance", 0.1)?;
                        for k in l1..wc.dim() {
                            let rel = (rep.covariance[k][k] / v[k] - 1.0).abs();
                            r.check(
                                format!("clt variance x{} vs limit N={n}", k + 1),
                                rel <= vt,
                                format!("walk {:.4} limit {:.4}", rep.covariance[k][k], v[k]),
                            );
                        }
                    }
                }
                r.detail(
                    &format!("histograms_N{n}"),
                    serde_json::to_value(&rep.histograms).expect("histograms serialize"),
                );
            }
        }
        WalkKind::Ratio => {
            let nu_samples = c.param_usize("nu_samples", 100_000)?;
            let nu = diffusion(&c, &wc, 256)?.sample(nu_samples, c.seed ^ 0x5eed, g.workers)?;
            let kde = Kde::new(&nu, KernelOrder::Fourth)?;
            let tol = c.param_f64("tolerance", 0.2)?;
            let nodes = c.param_usize("quad_nodes", 6)?;
            for &n in &ns {
                let mut w = wc.with_n(n);
                let dev = param_str(&c, "deviation", "none")?;
                match dev {
                    "none" => {}
                    "w_boundary" => {
                        let p = DeviationSpec::w_boundary_point(
                            w.weights(),
                            n,
                            c.param_f64("c", 0.05)?,
                        );
                        w = w.deviation(p, vec![0.0; wc.dim()]);
                    }
                    other => {
                        return Err(Failure::validation(format!("unknown deviation '{other}'")))
                    }
                }
                let res = ratio_experiment(&w, &region, &kde, nodes)?;
                r.row(Row::new(
                    "ratio_numerator",
                    n,
                    c.m,
                    res.numerator.estimate,
                    res.numerator.stderr,
                    None,
                ));
                r.row(Row::new(
                    "ratio_denominator",
                    n,
                    c.m,
                    res.denominator,
                    res.denominator_stderr,
                    None,
                ));
                r.row(Row::new("ratio", n, c.m, res.ratio, res.stderr, Some(1.0)));
                r.check(
                    format!("ratio N={n} deviation={dev}"),
                    res.within(tol),
                    format!("{:.4} ± {:.4}", res.ratio, res.stderr),
                );
            }
        }
        WalkKind::Pixel => {
            let nu_samples = c.param_usize("nu_samples", 20_000)?;
            let count = c.param_usize("count", 8)?;
            let nu = diffusion(&c, &wc, 256)?.sample(nu_samples, c.seed ^ 0x5eed, g.workers)?;
            let bound = c.param("max_gap").and_then(Value::as_f64);
            for &n in &ns {
                let fam = pixel_family(wc.weights(), n, count, c.seed);
                let rep = pixel_experiment(&wc.with_n(n), &nu, &fam)?;
                for ((l, gap), se) in rep.labels.iter().zip(&rep.gaps).zip(&rep.stderrs) {
                    r.row(Row::new(
                        format!("pixel[{l}]"),
                        n,
                        c.m,
                        *gap,
                        *se,
                        Some(0.0),
                    ));
                }
                if let Some(b) = bound {
                    r.check(
                        format!("pixel max gap N={n}"),
                        rep.max_gap <= b,
                        format!("{:.4}", rep.max_gap),
                    );
                }
            }
        }
        WalkKind::Theta => {
            let gamma0 = c.param_f64("gamma0", 0.5)?;
            let mc = c.param_usize("mc_samples", 20_000)?;
            for &n in &ns {
                let run = gradual_truncation_products(&wc.with_n(n), gamma0, mc)?;
                let p = run.altered_fraction;
                r.row(Row::new(
                    "theta_altered_fraction",
                    n,
                    c.m,
                    p,
                    (p * (1.0 - p) / c.m as f64).sqrt(),
                    None,
                ));
                let sqrt_n = (n as f64).sqrt();
                for k in 0..wc.dim() {
                    let scale = sqrt_n.powi(wc.weights()[k] as i32);
                    let m = run.samples.iter().map(|x| x[k] / scale).sum::<f64>()
                        / run.samples.len() as f64;
                    r.row(Row::new(
                        format!("theta_scaled_mean_{}", k + 1),
                        n,
                        c.m,
                        m,
                        f64::NAN,
                        None,
                    ));
                }
                r.detail(&format!("schedule_N{n}"), json!(run.schedule));
            }
        }
    }
    r.emit(g)
}

pub fn fourier_scan(g: &Global, path: &Path) -> Outcome {
    let c = load_config(g, path)?;
    let wc = walk_config(g, &c)?;
    let ns = grid(&c)?;
    let gamma0 = c.param_f64("gamma0", 0.1)?;
    let threshold = c.param_f64("threshold", 0.05)?;
    let xis: Vec<FrequencyPoint> = match c.param("xis") {
        Some(Value::Array(list)) => list
            .iter()
            .map(|v| {
                let xi: Option<Vec<f64>> = v
                    .as_array()
                    .and_then(|a| a.iter().map(Value::as_f64).collect());
                xi.map(|x| FrequencyPoint::new(wc.weights(), x))
                    .ok_or_else(|| Failure::parse("'xis' must be a list of number arrays"))
            })
            .collect::<Result<_, _>>()?,
        Some(_) => return Err(Failure::parse("'xis' must be a list")),
        None => log_xi_grid(wc.weights(), *ns.last().unwrap(), &[-0.25, 0.0, 0.5]),
    };
    let (rows, sums) = reduced_domain_scan(&wc, gamma0, &xis, &ns)?;
    let mut r = Report::new("fourier_scan", c.seed, c.digest());
    for row in &rows {
        let j = xis.iter().position(|x| x.xi == row.xi).unwrap_or(0);
        r.row(Row::new(
            format!("fourier_modulus[{j}]"),
            row.n,
            c.m,
            row.modulus,
            row.stderr,
            None,
        ));
    }
    for (j, s) in sums.iter().enumerate() {
        if s.outside_everywhere {
            r.check(
                format!("xi[{j}] decreasing"),
                s.decreasing,
                format!("{:?}", s.moduli),
            );
            r.check(
                format!("xi[{j}] final below {threshold}"),
                s.last < threshold,
                format!("{:.4}", s.last),
            );
        }
    }
    r.detail("scan", serde_json::to_value(&rows).expect("rows serialize"));
    r.emit(g)
}

pub fn limit_density(g: &Global, path: &Path) -> Outcome {
    let c = load_config(g, path)?;
    let wc = walk_config(g, &c)?;
    let samples = c.param_usize("samples", 100_000)?;
    let order = match param_str(&c, "kernel", "fourth")? {
        "second" => KernelOrder::Second,
        "fourth" => KernelOrder::Fourth,
        other => return Err(Failure::validation(format!("unknown kernel '{other}'"))),
    };
    let point = c.param_vec("point")?.unwrap_or_else(|| vec![0.0; wc.dim()]);
    let nu = diffusion(&c, &wc, 1024)?.sample(samples, c.seed, g.workers)?;
    let d = Kde::new(&nu, order)?.density(&point);
    let t = target(&c)?;
    let mut r = Report::new("limit_density", c.seed, c.digest());
    r.row(Row::new("limit_density", 0, samples, d.value, d.stderr, t));
    if let Some(t) = t {
        let tol = c.param_f64("tolerance", 0.1)?;
        r.check(
            "limit density",
            (d.value - t).abs() <= tol * t.abs(),
            format!("{:.5} ± {:.5}", d.value, d.stderr),
        );
    }
    r.emit(g)
}

pub fn heisenberg_origin(g: &Global, samples: usize, steps: usize) -> Outcome {
    let seed = g.seed.unwrap_or(1);
    let nu = levy_samples(samples, steps, seed, g.workers)?;
    let d = Kde::new(&nu, KernelOrder::Fourth)?.density(&[0.0; 3]);
    let mut r = Report::new("limit_heisenberg_origin", seed, String::new());
    r.row(Row::new(
        "levy_density_origin",
        steps,
        samples,
        d.value,
        d.stderr,
        Some(0.25),
    ));
    r.check(
        "levy density at origin",
        (d.value - 0.25).abs() <= 0.025,
        format!("{:.5} ± {:.5}", d.value, d.stderr),
    );
    r.emit(g)
}

pub fn nilmanifold_equid(g: &Global, path: &Path, n_override: &[usize], cells: usize) -> Outcome {
    let c = load_config(g, path)?;
    Nilmanifold::for_algebra(&c.build_algebra()?)?;
    let measure = c.build_measure()?;
    let ns = if n_override.is_empty() {
        grid(&c)?
    } else {
        n_override.to_vec()
    };
    let threshold = c.param_f64("threshold", 0.1)?;
    let mut r = Report::new("nilmanifold_equid", c.seed, c.digest());
    let mut devs = Vec::new();
    for &n in &ns {
        let rep = cesaro_equidistribution(&measure, n, c.m, cells, c.seed, g.workers)?;
        r.row(Row::new(
            "cesaro_max_cell",
            n,
            c.m,
            rep.max_cell_deviation,
            f64::NAN,
            Some(0.0),
        ));
        r.row(Row::new(
            "cesaro_tv",
            n,
            c.m,
            rep.total_variation,
            f64::NAN,
            Some(0.0),
        ));
        r.row(Row::new(
            "cesaro_max_relative",
            n,
            c.m,
            rep.max_relative_deviation,
            f64::NAN,
            Some(0.0),
        ));
        devs.push(rep.max_cell_deviation);
    }
    if c.param("haar_control")
        .and_then(Value::as_bool)
        .unwrap_or(false)
    {
        let n = *ns.last().unwrap();
        let h = haar_control(n, c.m, cells, c.seed, g.workers)?;
        r.row(Row::new(
            "haar_max_cell",
            n,
            c.m,
            h.max_cell_deviation,
            f64::NAN,
            Some(0.0),
        ));
    }
    r.check(
        format!("max-cell deviation below {threshold}"),
        devs.last().is_some_and(|d| *d < threshold),
        format!("{devs:?}"),
    );
    if devs.len() > 1 {
        r.check(
            "max-cell deviation decreasing",
            devs.windows(2).all(|w| w[1] < w[0]),
            format!("{devs:?}"),
        );
    }
    r.emit(g)
}
