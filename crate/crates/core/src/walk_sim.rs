//! Monte Carlo engine for N-step products S_N = X_1 * … * X_N in the weight-adapted
//! basis, recentering, deviation sets, gradual truncation Θ^N and the LLT / CLT /
//! ratio / pixel experiments.

use std::sync::Arc;
use std::time::Instant;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::filtration::{build_weight_filtration, dilate_with, ExtendedAlgebra, WeightFiltration};
use crate::lie_core::NilpotentAlgebra;
use crate::limit_law::Kde;
use crate::linalg::to_f64_mat;
use crate::measures::{Law1d, MeasureKind, MeasureSpec, TruncatedMeasure};
use crate::parallel::run_chunked;
use crate::scalar::{f64_to_q, Q};
use crate::stats::{gauss_legendre, gauss_legendre_box, std_normal_cdf, Moments};

#[derive(Debug, Clone, PartialEq)]
pub enum Recentering {
    None,
    /// S_N * (−N X_μ)
    Drift,
    /// S_N * g_N with g_N = (−N X_μ) * (−D_√N Y), Y in adapted coordinates.
    Variable(Vec<f64>),
}

#[derive(Debug, Clone)]
pub struct WalkConfig {
    pub filtration: Arc<WeightFiltration>,
    pub measure: Arc<MeasureSpec>,
    pub n: usize,
    pub m: usize,
    pub seed: u64,
    pub recentering: Recentering,
    /// (g, h) in adapted coordinates: the walk is observed as g * S_N * h.
    pub deviation: Option<(Vec<f64>, Vec<f64>)>,
    pub workers: Option<usize>,
}

/// Drift representative used to build the filtration of a measure: exact mean for exact atoms,
/// otherwise the floating mean with negligible entries snapped to zero.
pub fn measure_drift(measure: &MeasureSpec) -> Result<Vec<Q>> {
    if let Some((pts, w)) = measure.as_atoms().and_then(|a| a.exact()) {
        let d = measure.dim();
        return Ok((0..d)
            .map(|k| {
                pts.iter()
                    .zip(w)
                    .fold(Q::from_integer(0.into()), |a, (p, wk)| a + wk * &p[k])
            })
            .collect());
    }
    measure
        .mean()
        .iter()
        .map(|&x| f64_to_q(if x.abs() < 1e-12 { 0.0 } else { x }))
        .collect()
}

impl WalkConfig {
    pub fn new(
        alg: &NilpotentAlgebra,
        measure: MeasureSpec,
        n: usize,
        m: usize,
        seed: u64,
    ) -> Result<Self> {
        let f = build_weight_filtration(alg, &measure_drift(&measure)?)?;
        Self::with_filtration(Arc::new(f), Arc::new(measure), n, m, seed)
    }

    pub fn with_filtration(
        filtration: Arc<WeightFiltration>,
        measure: Arc<MeasureSpec>,
        n: usize,
        m: usize,
        seed: u64,
    ) -> Result<Self> {
        let cfg = WalkConfig {
            filtration,
            measure,
            n,
            m,
            seed,
            recentering: Recentering::None,
            deviation: None,
            workers: None,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn recentering(mut self, r: Recentering) -> Self {
        self.recentering = r;
        self
    }

    pub fn deviation(mut self, g: Vec<f64>, h: Vec<f64>) -> Self {
        self.deviation = Some((g, h));
        self
    }

    pub fn workers(mut self, w: Option<usize>) -> Self {
        self.workers = w;
        self
    }

    pub fn with_n(&self, n: usize) -> Self {
        let mut c = self.clone();
        c.n = n;
        c
    }

    pub fn with_m(&self, m: usize) -> Self {
        let mut c = self.clone();
        c.m = m;
        c
    }

    pub fn validate(&self) -> Result<()> {
        if self.n == 0 || self.m == 0 {
            return Err(Error::InvalidArgument("N and M must be at least 1".into()));
        }
        self.measure.check_compatible(&self.filtration)?;
        let d = self.filtration.dim();
        if let Recentering::Variable(y) = &self.recentering {
            if y.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: y.len(),
                });
            }
        }
        if let Some((g, h)) = &self.deviation {
            if g.len() != d || h.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    got: g.len().min(h.len()),
                });
            }
        }
        let drift_zero = self.drift().iter().all(|x| x.abs() < 1e-12);
        let filt_zero = self
            .filtration
            .drift_adapted()
            .iter()
            .all(|x| x == &Q::from_integer(0.into()));
        if drift_zero != filt_zero {
            return Err(Error::InvalidArgument(
                "filtration drift does not match the measure's mean".into(),
            ));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.filtration.dim()
    }

    pub fn hom_dim(&self) -> usize {
        self.filtration.hom_dim()
    }

    pub fn weights(&self) -> &[usize] {
        self.filtration.weights()
    }

    /// X_μ: the first-layer mean, as an adapted vector supported on 𝔪^(1).
    pub fn drift(&self) -> Vec<f64> {
        let f = &self.filtration;
        let mean = f.to_adapted(&self.measure.mean());
        mean.iter()
            .zip(f.weights())
            .map(|(v, &w)| if w == 1 { *v } else { 0.0 })
            .collect()
    }

    pub fn algebra(&self) -> &Arc<NilpotentAlgebra> {
        self.filtration.adapted_algebra()
    }

    /// The right translation applied after the product, if any.
    pub fn recentering_element(&self) -> Option<Vec<f64>> {
        let n = self.n as f64;
        let minus_nx: Vec<f64> = self.drift().iter().map(|x| -n * x).collect();
        match &self.recentering {
            Recentering::None => None,
            Recentering::Drift => Some(minus_nx),
            Recentering::Variable(y) => {
                let dy: Vec<f64> = dilate_with(self.weights(), &n.sqrt(), y)
                    .iter()
                    .map(|v| -v)
                    .collect();
                Some(
                    self.algebra()
                        .bch(&minus_nx, &dy)
                        .expect("dimensions checked"),
                )
            }
        }
    }

    /// The map S ↦ g * S * c * h applied to every product.
    pub fn observer(&self) -> Observer {
        Observer {
            algebra: self.algebra().clone(),
            left: self.deviation.as_ref().map(|(g, _)| g.clone()),
            right: {
                let c = self.recentering_element();
                let h = self.deviation.as_ref().map(|(_, h)| h.clone());
                match (c, h) {
                    (None, None) => None,
                    (Some(c), None) => Some(c),
                    (None, Some(h)) => Some(h),
                    (Some(c), Some(h)) => {
                        Some(self.algebra().bch(&c, &h).expect("dimensions checked"))
                    }
                }
            },
        }
    }

    fn to_adapted_matrix(&self) -> Option<Vec<Vec<f64>>> {
        let p = to_f64_mat(self.filtration.change_of_basis());
        let n = p.len();
        let identity = (0..n).all(|i| (0..n).all(|j| p[i][j] == if i == j { 1.0 } else { 0.0 }));
        if identity {
            None
        } else {
            Some(self.filtration.to_adapted_matrix_f64())
        }
    }
}

#[derive(Debug, Clone)]
pub struct Observer {
    algebra: Arc<NilpotentAlgebra>,
    left: Option<Vec<f64>>,
    right: Option<Vec<f64>>,
}

impl Observer {
    pub fn apply(&self, s: &[f64]) -> Vec<f64> {
        let mut x = s.to_vec();
        if let Some(g) = &self.left {
            x = self.algebra.bch(g, &x).expect("dimensions checked");
        }
        if let Some(r) = &self.right {
            x = self.algebra.bch(&x, r).expect("dimensions checked");
        }
        x
    }
}

/// Per-replica product state reused across steps.
struct Stepper<'a> {
    cfg: &'a WalkConfig,
    to_adapted: Option<Vec<Vec<f64>>>,
    scratch: Vec<f64>,
    sample_scratch: Vec<f64>,
    raw: Vec<f64>,
    inc: Vec<f64>,
    acc: Vec<f64>,
    out: Vec<f64>,
}

impl<'a> Stepper<'a> {
    fn new(cfg: &'a WalkConfig) -> Self {
        let n = cfg.dim();
        Stepper {
            cfg,
            to_adapted: cfg.to_adapted_matrix(),
            scratch: vec![0.0; cfg.algebra().bch_scratch_len()],
            sample_scratch: Vec::new(),
            raw: vec![0.0; n],
            inc: vec![0.0; n],
            acc: vec![0.0; n],
            out: vec![0.0; n],
        }
    }

    fn draw(&mut self, rng: &mut ChaCha8Rng) {
        self.cfg
            .measure
            .sample_with(rng, &mut self.sample_scratch, &mut self.raw);
        match &self.to_adapted {
            None => self.inc.copy_from_slice(&self.raw),
            Some(t) => {
                for (o, row) in self.inc.iter_mut().zip(t) {
                    *o = row.iter().zip(&self.raw).map(|(a, b)| a * b).sum();
                }
            }
        }
    }

    fn product(&mut self, rng: &mut ChaCha8Rng) -> &[f64] {
        self.acc.iter_mut().for_each(|x| *x = 0.0);
        let alg = self.cfg.algebra().clone();
        for _ in 0..self.cfg.n {
            self.draw(rng);
            alg.bch_f64_into(&self.acc, &self.inc, &mut self.scratch, &mut self.out);
            std::mem::swap(&mut self.acc, &mut self.out);
        }
        &self.acc
    }
}

/// Runs `visit` on every observed product (g * S_N * c * h) chunk by chunk and returns the
/// per-chunk accumulators in chunk order.
pub fn fold_products<A, I, V>(cfg: &WalkConfig, init: I, visit: V) -> Result<Vec<A>>
where
    A: Send,
    I: Fn() -> A + Sync + Send,
    V: Fn(&mut A, &[f64]) + Sync + Send,
{
    cfg.validate()?;
    let obs = cfg.observer();
    let trivial = obs.left.is_none() && obs.right.is_none();
    run_chunked(cfg.m, cfg.seed, cfg.workers, |rng, range| {
        let mut st = Stepper::new(cfg);
        let mut acc = init();
        for _ in range {
            let s = st.product(rng);
            if trivial {
                visit(&mut acc, s);
            } else {
                let x = obs.apply(s);
                visit(&mut acc, &x);
            }
        }
        acc
    })
}

/// M independent observed products in adapted coordinates.
pub fn run_products(cfg: &WalkConfig) -> Result<Vec<Vec<f64>>> {
    let chunks = fold_products(cfg, Vec::new, |v: &mut Vec<Vec<f64>>, x| v.push(x.to_vec()))?;
    Ok(chunks.into_iter().flatten().collect())
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ExperimentResult {
    pub experiment: String,
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub estimate: f64,
    pub stderr: f64,
    pub target: Option<f64>,
    pub seed: u64,
    pub config_digest: String,
    pub wall_time: f64,
    pub low_power: bool,
    pub notes: Vec<String>,
}

impl ExperimentResult {
    pub fn new(
        experiment: &str,
        n: usize,
        m: usize,
        estimate: f64,
        stderr: f64,
        seed: u64,
    ) -> Self {
        ExperimentResult {
            experiment: experiment.into(),
            n,
            m,
            estimate,
            stderr,
            target: None,
            seed,
            config_digest: String::new(),
            wall_time: 0.0,
            low_power: false,
            notes: Vec::new(),
        }
    }

    pub fn with_target(mut self, t: f64) -> Self {
        self.target = Some(t);
        self
    }

    /// |estimate − target| ≤ max(3·stderr, rel_tol·|target|).
    pub fn within(&self, rel_tol: f64) -> Option<bool> {
        self.target
            .map(|t| (self.estimate - t).abs() <= (3.0 * self.stderr).max(rel_tol * t.abs()))
    }

    pub fn relative_error(&self) -> Option<f64> {
        self.target.map(|t| (self.estimate - t).abs() / t.abs())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LltEstimator {
    /// Hit fraction of the box.
    Indicator,
    /// Heisenberg walks with a gaussian second coordinate: conditional box probability given
    /// the first- and third-coordinate increments.
    Conditional,
    /// Conditional when applicable, indicator otherwise.
    Auto,
}

/// An axis-aligned box in adapted coordinates.
#[derive(Debug, Clone, PartialEq)]
pub struct BoxRegion {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl BoxRegion {
    pub fn new(lo: Vec<f64>, hi: Vec<f64>) -> Result<Self> {
        if lo.len() != hi.len() || lo.iter().zip(&hi).any(|(a, b)| !(a < b)) {
            return Err(Error::InvalidArgument(
                "box needs lo < hi in every coordinate".into(),
            ));
        }
        Ok(BoxRegion { lo, hi })
    }

    pub fn centered_cube(d: usize, side: f64) -> Self {
        BoxRegion {
            lo: vec![-0.5 * side; d],
            hi: vec![0.5 * side; d],
        }
    }

    pub fn volume(&self) -> f64 {
        self.lo.iter().zip(&self.hi).map(|(a, b)| b - a).product()
    }

    pub fn contains(&self, x: &[f64]) -> bool {
        x.iter()
            .zip(self.lo.iter().zip(&self.hi))
            .all(|(v, (a, b))| *a <= *v && *v <= *b)
    }
}

struct ConditionalPlan {
    first: Law1d,
    mid_mean: f64,
    mid_sd: f64,
    third: Law1d,
}

fn conditional_plan(cfg: &WalkConfig) -> Option<ConditionalPlan> {
    if cfg.to_adapted_matrix().is_some() || cfg.dim() != 3 {
        return None;
    }
    if *cfg.algebra().as_ref() != NilpotentAlgebra::heisenberg3() {
        return None;
    }
    match cfg.measure.kind() {
        MeasureKind::Product(laws) => match laws[1] {
            Law1d::Gaussian { mean, sd } if sd > 0.0 => Some(ConditionalPlan {
                first: laws[0].clone(),
                mid_mean: mean,
                mid_sd: sd,
                third: laws[2].clone(),
            }),
            _ => None,
        },
        _ => None,
    }
}

pub fn conditional_applicable(cfg: &WalkConfig) -> bool {
    conditional_plan(cfg).is_some()
}

/// P(U ∈ [a2,b2], V ∈ [a3,b3]) for a bivariate normal (U, V).
fn bivariate_box(
    mean: [f64; 2],
    cov: [[f64; 3]; 1],
    a2: f64,
    b2: f64,
    a3: f64,
    b3: f64,
    rule: &[(f64, f64)],
) -> f64 {
    let [cuu, cuv, cvv] = cov[0];
    let su = cuu.sqrt();
    let lo = a2.max(mean[0] - 12.0 * su);
    let hi = b2.min(mean[0] + 12.0 * su);
    if !(lo < hi) {
        return 0.0;
    }
    let slope = cuv / cuu;
    let s = (cvv - cuv * cuv / cuu).max(0.0).sqrt();
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    rule.iter()
        .map(|(x, w)| {
            let u = mid + half * x;
            let dens = (-0.5 * ((u - mean[0]) / su).powi(2)).exp()
                / (su * (2.0 * std::f64::consts::PI).sqrt());
            let m = mean[1] + slope * (u - mean[0]);
            let p = if s > 1e-300 {
                std_normal_cdf((b3 - m) / s) - std_normal_cdf((a3 - m) / s)
            } else if a3 <= m && m <= b3 {
                1.0
            } else {
                0.0
            };
            w * half * dens * p
        })
        .sum()
}

/// LLT box experiment: N^{d/2}·P(observed product ∈ box).
pub fn llt_box_experiment(
    cfg: &WalkConfig,
    region: &BoxRegion,
    estimator: LltEstimator,
) -> Result<ExperimentResult> {
    let start = Instant::now();
    if region.lo.len() != cfg.dim() {
        return Err(Error::DimensionMismatch {
            expected: cfg.dim(),
            got: region.lo.len(),
        });
    }
    let scale = (cfg.n as f64).powf(cfg.hom_dim() as f64 / 2.0);
    let plan = match estimator {
        LltEstimator::Indicator => None,
        LltEstimator::Conditional => Some(conditional_plan(cfg).ok_or_else(|| Error::Unsupported("conditional estimator needs a Heisenberg walk with an independent gaussian second coordinate".into()))?),
        LltEstimator::Auto => conditional_plan(cfg),
    };
    let (moments, name) = match &plan {
        None => {
            let chunks = fold_products(cfg, Moments::default, |m, x| {
                m.push(if region.contains(x) { 1.0 } else { 0.0 })
            })?;
            (merge(&chunks), "llt_indicator")
        }
        Some(p) => (
            conditional_probabilities(cfg, p, region)?,
            "llt_conditional",
        ),
    };
    let mut r = ExperimentResult::new(
        name,
        cfg.n,
        cfg.m,
        scale * moments.mean(),
        scale * moments.stderr(),
        cfg.seed,
    );
    r.low_power = moments.sum == 0.0;
    if r.low_power {
        r.notes.push("no hits: low-power result".into());
    }
    r.wall_time = start.elapsed().as_secs_f64();
    Ok(r)
}

fn merge(chunks: &[Moments]) -> Moments {
    let mut m = Moments::default();
    chunks.iter().for_each(|c| m.merge(c));
    m
}

fn conditional_probabilities(
    cfg: &WalkConfig,
    plan: &ConditionalPlan,
    region: &BoxRegion,
) -> Result<Moments> {
    cfg.validate()?;
    let obs = cfg.observer();
    let rule = gauss_legendre(16, -1.0, 1.0);
    let n = cfg.n;
    let chunks = run_chunked(cfg.m, cfg.seed, cfg.workers, |rng, range| {
        let mut acc = Moments::default();
        let mut a = vec![0.0; n];
        for _ in range {
            let mut z = 0.0;
            for aj in a.iter_mut() {
                *aj = plan.first.sample(rng);
                // keeps the stream aligned with plain products
                let _: f64 = rng.sample(StandardNormal);
                z += plan.third.sample(rng);
            }
            let total: f64 = a.iter().sum();
            let (mut sc, mut sc2, mut prefix) = (0.0, 0.0, 0.0);
            for aj in &a {
                let c = prefix - (total - prefix - aj);
                prefix += aj;
                sc += c;
                sc2 += c * c;
            }
            let var = plan.mid_sd * plan.mid_sd;
            let ms = [plan.mid_mean * n as f64, z + plan.mid_mean * 0.5 * sc];
            let cs = [var * n as f64, var * 0.5 * sc, var * 0.25 * sc2];
            let f0 = obs.apply(&[total, 0.0, 0.0]);
            let f2 = obs.apply(&[total, 1.0, 0.0]);
            let f3 = obs.apply(&[total, 0.0, 1.0]);
            let j = |r: usize| [f2[r] - f0[r], f3[r] - f0[r]];
            let (j1, j2, j3) = (j(0), j(1), j(2));
            let p = if j1[0].abs() > 1e-9 || j1[1].abs() > 1e-9 {
                f64::NAN
            } else if f0[0] < region.lo[0] || f0[0] > region.hi[0] {
                0.0
            } else {
                let mu = [
                    f0[1] + j2[0] * ms[0] + j2[1] * ms[1],
                    f0[2] + j3[0] * ms[0] + j3[1] * ms[1],
                ];
                let quad = |u: [f64; 2], v: [f64; 2]| {
                    u[0] * v[0] * cs[0] + (u[0] * v[1] + u[1] * v[0]) * cs[1] + u[1] * v[1] * cs[2]
                };
                let cov = [[quad(j2, j2), quad(j2, j3), quad(j3, j3)]];
                bivariate_box(
                    mu,
                    cov,
                    region.lo[1],
                    region.hi[1],
                    region.lo[2],
                    region.hi[2],
                    &rule,
                )
            };
            acc.push(p);
        }
        acc
    })?;
    let m = merge(&chunks);
    if m.sum.is_nan() {
        return Err(Error::Unsupported(
            "observed first coordinate depends on the second".into(),
        ));
    }
    Ok(m)
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct CltReport {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub mean: Vec<f64>,
    pub mean_stderr: Vec<f64>,
    pub covariance: Vec<Vec<f64>>,
    /// Standard error of each diagonal covariance entry.
    pub variance_stderr: Vec<f64>,
    pub histograms: Vec<Histogram>,
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct Histogram {
    pub lo: f64,
    pub hi: f64,
    pub counts: Vec<u64>,
}

#[derive(Clone)]
struct CltAcc {
    n: u64,
    s: Vec<f64>,
    ss: Vec<Vec<f64>>,
    s4: Vec<f64>,
    hist: Vec<Vec<u64>>,
}

pub const HIST_BINS: usize = 40;
pub const HIST_RANGE: f64 = 5.0;

/// Rescaled samples D_{1/√N}(S_N * (−N X_μ)) summarized by mean, covariance and marginal histograms.
pub fn clt_experiment(cfg: &WalkConfig) -> Result<CltReport> {
    let cfg = cfg.clone().recentering(Recentering::Drift);
    let d = cfg.dim();
    let r = 1.0 / (cfg.n as f64).sqrt();
    let w = cfg.weights().to_vec();
    let chunks = fold_products(
        &cfg,
        || CltAcc {
            n: 0,
            s: vec![0.0; d],
            ss: vec![vec![0.0; d]; d],
            s4: vec![0.0; d],
            hist: vec![vec![0; HIST_BINS]; d],
        },
        |a, x| {
            let y = dilate_with(&w, &r, x);
            a.n += 1;
            for i in 0..d {
                a.s[i] += y[i];
                a.s4[i] += y[i].powi(4);
                for j in 0..d {
                    a.ss[i][j] += y[i] * y[j];
                }
                let b = ((y[i] + HIST_RANGE) / (2.0 * HIST_RANGE) * HIST_BINS as f64).floor();
                if b >= 0.0 && (b as usize) < HIST_BINS {
                    a.hist[i][b as usize] += 1;
                }
            }
        },
    )?;
    let mut t = CltAcc {
        n: 0,
        s: vec![0.0; d],
        ss: vec![vec![0.0; d]; d],
        s4: vec![0.0; d],
        hist: vec![vec![0; HIST_BINS]; d],
    };
    for c in &chunks {
        t.n += c.n;
        for i in 0..d {
            t.s[i] += c.s[i];
            t.s4[i] += c.s4[i];
            for j in 0..d {
                t.ss[i][j] += c.ss[i][j];
            }
            for b in 0..HIST_BINS {
                t.hist[i][b] += c.hist[i][b];
            }
        }
    }
    let n = t.n as f64;
    let mean: Vec<f64> = t.s.iter().map(|s| s / n).collect();
    let cov: Vec<Vec<f64>> = (0..d)
        .map(|i| {
            (0..d)
                .map(|j| (t.ss[i][j] - n * mean[i] * mean[j]) / (n - 1.0))
                .collect()
        })
        .collect();
    let mean_stderr = (0..d).map(|i| (cov[i][i] / n).sqrt()).collect();
    let variance_stderr = (0..d)
        .map(|i| {
            let m4 = t.s4[i] / n;
            let m2 = t.ss[i][i] / n;
            ((m4 - m2 * m2).max(0.0) / n).sqrt()
        })
        .collect();
    let histograms = t
        .hist
        .into_iter()
        .map(|counts| Histogram {
            lo: -HIST_RANGE,
            hi: HIST_RANGE,
            counts,
        })
        .collect();
    Ok(CltReport {
        n: cfg.n,
        m: cfg.m,
        mean,
        mean_stderr,
        covariance: cov,
        variance_stderr,
        histograms,
    })
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct RatioResult {
    pub numerator: ExperimentResult,
    pub denominator: f64,
    pub denominator_stderr: f64,
    pub ratio: f64,
    pub stderr: f64,
}

impl RatioResult {
    /// |ratio − 1| ≤ max(3·stderr, tol).
    pub fn within(&self, tol: f64) -> bool {
        (self.ratio - 1.0).abs() <= (3.0 * self.stderr).max(tol)
    }
}

/// μ^{*N}_{g,h}(B) against (δ_g * D_√N ν * δ_h)(B), the latter computed as
/// N^{−d/2} ∫_B v(D_{1/√N}(g⁻¹ * w * h⁻¹)) dw with a density estimate of v.
pub fn ratio_experiment(
    cfg: &WalkConfig,
    region: &BoxRegion,
    kde: &Kde,
    quad_nodes: usize,
) -> Result<RatioResult> {
    if !cfg.filtration.is_centered() {
        return Err(Error::InvalidArgument(
            "ratio experiment needs a centered measure".into(),
        ));
    }
    let num = llt_box_experiment(cfg, region, LltEstimator::Auto)?;
    let scale = (cfg.n as f64).powf(cfg.hom_dim() as f64 / 2.0);
    let alg = cfg.algebra();
    let d = cfg.dim();
    let (g, h) = cfg
        .deviation
        .clone()
        .unwrap_or((vec![0.0; d], vec![0.0; d]));
    let gi = alg.inverse(&g);
    let hi = alg.inverse(&h);
    let r = 1.0 / (cfg.n as f64).sqrt();
    let points: Vec<(Vec<f64>, f64)> = gauss_legendre_box(quad_nodes, &region.lo, &region.hi)
        .into_iter()
        .map(|(w, wt)| {
            let y = alg
                .bch(&alg.bch(&gi, &w).expect("dims"), &hi)
                .expect("dims");
            (dilate_with(cfg.weights(), &r, &y), wt / scale)
        })
        .collect();
    let den = kde.weighted(&points);
    let p = num.estimate / scale;
    let sp = num.stderr / scale;
    let ratio = p / den.value;
    let stderr = ratio.abs() * ((sp / p).powi(2) + (den.stderr / den.value).powi(2)).sqrt();
    Ok(RatioResult {
        numerator: num,
        denominator: den.value,
        denominator_stderr: den.stderr,
        ratio,
        stderr,
    })
}

/// Test functions for the pixel experiment, evaluated on adapted coordinates.
#[derive(Debug, Clone, PartialEq)]
pub enum TestFunction {
    Constant(f64),
    /// min(1, ‖x − p‖)
    ClampedDistance(Vec<f64>),
    /// sin(ω·x + φ), ‖ω‖ ≤ 1
    Sinusoid {
        omega: Vec<f64>,
        phase: f64,
    },
}

impl TestFunction {
    pub fn eval(&self, x: &[f64]) -> f64 {
        match self {
            TestFunction::Constant(c) => *c,
            TestFunction::ClampedDistance(p) => x
                .iter()
                .zip(p)
                .map(|(a, b)| (a - b).powi(2))
                .sum::<f64>()
                .sqrt()
                .min(1.0),
            TestFunction::Sinusoid { omega, phase } => {
                (x.iter().zip(omega).map(|(a, b)| a * b).sum::<f64>() + phase).sin()
            }
        }
    }

    pub fn label(&self) -> String {
        match self {
            TestFunction::Constant(c) => format!("constant({c})"),
            TestFunction::ClampedDistance(p) => format!("clamped_distance({p:?})"),
            TestFunction::Sinusoid { omega, phase } => format!("sinusoid({omega:?},{phase})"),
        }
    }
}

/// Bounded 1-Lipschitz family at the scale of step N: clamped distances to points D_√N(q) and
/// sinusoids with frequencies whose weight-b entries are damped by N^{−b/2}.
pub fn pixel_family(weights: &[usize], n: usize, count: usize, seed: u64) -> Vec<TestFunction> {
    let mut rng = crate::parallel::chunk_rng(seed, u64::MAX);
    let d = weights.len();
    let s = (n as f64).sqrt();
    let mut out = vec![TestFunction::ClampedDistance(vec![0.0; d])];
    for k in 0..count {
        let q: Vec<f64> = (0..d).map(|_| rng.sample(StandardNormal)).collect();
        if k % 2 == 0 {
            out.push(TestFunction::ClampedDistance(dilate_with(weights, &s, &q)));
        } else {
            let norm = q.iter().map(|v| v * v).sum::<f64>().sqrt();
            let u: Vec<f64> = q.iter().map(|v| v / norm).collect();
            let omega = dilate_with(weights, &(1.0 / s), &u);
            out.push(TestFunction::Sinusoid {
                omega,
                phase: rng.gen::<f64>() * std::f64::consts::TAU,
            });
        }
    }
    out
}

#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct PixelReport {
    #[serde(rename = "N")]
    pub n: usize,
    pub labels: Vec<String>,
    pub gaps: Vec<f64>,
    pub stderrs: Vec<f64>,
    pub max_gap: f64,
}

/// |E F(S_N) − E F(D_√N Z * N X_μ)| for each F, with Z drawn from ν samples (adapted coordinates).
pub fn pixel_experiment(
    cfg: &WalkConfig,
    nu_samples: &[Vec<f64>],
    family: &[TestFunction],
) -> Result<PixelReport> {
    let cfg = cfg.clone().recentering(Recentering::None);
    let k = family.len();
    let chunks = fold_products(
        &cfg,
        || vec![Moments::default(); k],
        |acc, x| {
            for (a, f) in acc.iter_mut().zip(family) {
                a.push(f.eval(x));
            }
        },
    )?;
    let mut walk = vec![Moments::default(); k];
    for c in &chunks {
        for (a, b) in walk.iter_mut().zip(c) {
            a.merge(b);
        }
    }
    let alg = cfg.algebra();
    let nx: Vec<f64> = cfg.drift().iter().map(|v| v * cfg.n as f64).collect();
    let s = (cfg.n as f64).sqrt();
    let mut limit = vec![Moments::default(); k];
    for z in nu_samples {
        let y = alg.bch(&dilate_with(cfg.weights(), &s, z), &nx)?;
        for (a, f) in limit.iter_mut().zip(family) {
            a.push(f.eval(&y));
        }
    }
    let gaps: Vec<f64> = walk
        .iter()
        .zip(&limit)
        .map(|(a, b)| (a.mean() - b.mean()).abs())
        .collect();
    let stderrs = walk
        .iter()
        .zip(&limit)
        .map(|(a, b)| (a.stderr().powi(2) + b.stderr().powi(2)).sqrt())
        .collect();
    let max_gap = gaps.iter().copied().fold(0.0, f64::max);
    Ok(PixelReport {
        n: cfg.n,
        labels: family.iter().map(TestFunction::label).collect(),
        gaps,
        stderrs,
        max_gap,
    })
}

/// N_a = ⌊N^{1−γ_a}⌋ for a = 1..s, γ_a = (32s)^{−a}γ₀ for a < s and γ_s = 0.
pub fn truncation_schedule(n: usize, step: usize, gamma0: f64) -> Vec<usize> {
    let s = step.max(1);
    (1..=s)
        .map(|a| {
            let g = if a < s {
                (32.0 * s as f64).powi(-(a as i32)) * gamma0
            } else {
                0.0
            };
            if a == s {
                n
            } else {
                (n as f64).powf(1.0 - g).floor() as usize
            }
        })
        .collect()
}

#[derive(Debug, Clone)]
pub struct ThetaRun {
    pub schedule: Vec<usize>,
    pub samples: Vec<Vec<f64>>,
    pub altered_fraction: f64,
}

/// Samples of Θ^N = p_⋆(Υ^N): increments of index in (N_{a−1}, N_a] are drawn from T_{N_a}μ̃,
/// multiplied in 𝔤̃ and projected by p. Deviations and recentering of `cfg` are ignored.
pub fn gradual_truncation_products(
    cfg: &WalkConfig,
    gamma0: f64,
    mc_samples: usize,
) -> Result<ThetaRun> {
    if !(gamma0 > 0.0 && gamma0 < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "gamma0 must lie in (0,1), got {gamma0}"
        )));
    }
    cfg.validate()?;
    let ext: ExtendedAlgebra = cfg.filtration.bias_extend()?;
    let schedule = truncation_schedule(cfg.n, cfg.filtration.algebra().step(), gamma0);
    let truncs: Vec<TruncatedMeasure> = schedule
        .iter()
        .enumerate()
        .map(|(a, &na)| {
            cfg.measure.truncate(
                &ext,
                na.max(1) as u64,
                mc_samples,
                cfg.seed ^ (a as u64 + 1),
            )
        })
        .collect::<Result<_>>()?;
    let alg = ext.algebra().clone();
    let chunks = run_chunked(cfg.m, cfg.seed, cfg.workers, |rng, range| {
        let mut st = Stepper::new(cfg);
        let de = ext.dim();
        let mut scratch = vec![0.0; alg.bch_scratch_len()];
        let mut out = Vec::new();
        let mut altered = 0usize;
        for _ in range {
            let mut acc = vec![0.0; de];
            let mut tmp = vec![0.0; de];
            let mut fired = false;
            let mut a = 0;
            for i in 1..=cfg.n {
                while i > schedule[a] {
                    a += 1;
                }
                st.draw(rng);
                let mut y = ext.lift(&st.inc);
                fired |= truncs[a].apply(&mut y);
                alg.bch_f64_into(&acc, &y, &mut scratch, &mut tmp);
                std::mem::swap(&mut acc, &mut tmp);
            }
            altered += fired as usize;
            out.push(ext.project(&acc));
        }
        (out, altered)
    })?;
    let mut samples = Vec::with_capacity(cfg.m);
    let mut altered = 0;
    for (s, a) in chunks {
        samples.extend(s);
        altered += a;
    }
    Ok(ThetaRun {
        schedule,
        samples,
        altered_fraction: altered as f64 / cfg.m as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum DeviationKind {
    /// 𝒟_N(δ₀): ‖x^(i)‖ ≤ N^{i/2 + δ₀/s}
    D { delta0: f64 },
    /// ℰ_{N,ε₀}: x = p(y) with ‖y^(i)‖ ≤ N^{i/2+ε₀} in 𝔤̃, i.e. a drift multiple tX with |t| ≤ N^{1+ε₀}
    /// absorbed by the χ-coordinate.
    E { epsilon0: f64 },
    /// W_N(c): ‖x^(i)‖ ≤ c (N log N)^{i/2}
    W { c: f64 },
}

#[derive(Debug, Clone, PartialEq)]
pub struct DeviationSpec {
    pub kind: DeviationKind,
    pub n: usize,
}

impl DeviationSpec {
    fn layer_norms(weights: &[usize], x: &[f64]) -> Vec<f64> {
        let max = weights.iter().copied().max().unwrap_or(1);
        (1..=max)
            .map(|b| {
                x.iter()
                    .zip(weights)
                    .filter(|(_, w)| **w == b)
                    .map(|(v, _)| v * v)
                    .sum::<f64>()
                    .sqrt()
            })
            .collect()
    }

    /// Membership of an adapted vector; `drift` is X_μ (adapted) and `step` the nilpotency step.
    pub fn contains(&self, weights: &[usize], drift: &[f64], step: usize, x: &[f64]) -> bool {
        let n = self.n as f64;
        let norms = Self::layer_norms(weights, x);
        match self.kind {
            DeviationKind::D { delta0 } => norms
                .iter()
                .enumerate()
                .all(|(i, v)| *v <= n.powf((i + 1) as f64 / 2.0 + delta0 / step as f64)),
            DeviationKind::W { c } => norms
                .iter()
                .enumerate()
                .all(|(i, v)| *v <= c * (n * n.ln()).powf((i + 1) as f64 / 2.0)),
            DeviationKind::E { epsilon0 } => {
                if norms
                    .iter()
                    .enumerate()
                    .skip(2)
                    .any(|(i, v)| *v > n.powf((i + 1) as f64 / 2.0 + epsilon0))
                {
                    return false;
                }
                let r1 = n.powf(0.5 + epsilon0);
                let r2 = n.powf(1.0 + epsilon0);
                let x1: Vec<f64> = x
                    .iter()
                    .zip(weights)
                    .map(|(v, w)| if *w == 1 { *v } else { 0.0 })
                    .collect();
                let n2 = norms.get(1).copied().unwrap_or(0.0);
                if n2 > r2 {
                    return false;
                }
                let tmax = (r2 * r2 - n2 * n2).sqrt();
                let xx: f64 = drift.iter().map(|v| v * v).sum();
                let x1x: f64 = x1.iter().zip(drift).map(|(a, b)| a * b).sum();
                let x1n: f64 = x1.iter().map(|v| v * v).sum();
                if xx == 0.0 {
                    return x1n.sqrt() <= r1;
                }
                let t0 = x1x / xx;
                let disc = x1x * x1x - xx * (x1n - r1 * r1);
                if disc < 0.0 {
                    return false;
                }
                let half = disc.sqrt() / xx;
                t0 - half <= tmax && -tmax <= t0 + half
            }
        }
    }

    /// A point of W_N(c) on the boundary of every layer, along the first basis vector of each layer.
    pub fn w_boundary_point(weights: &[usize], n: usize, c: f64) -> Vec<f64> {
        let nl = n as f64 * (n as f64).ln();
        let mut x = vec![0.0; weights.len()];
        let mut seen = std::collections::HashSet::new();
        for (k, &w) in weights.iter().enumerate() {
            if seen.insert(w) {
                x[k] = c * nl.powf(w as f64 / 2.0);
            }
        }
        x
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::limit_law::{levy_samples, KernelOrder};
    use crate::scalar::qvec;

    fn heis_gauss(n: usize, m: usize, seed: u64) -> WalkConfig {
        WalkConfig::new(
            &NilpotentAlgebra::heisenberg3(),
            MeasureSpec::heisenberg_gaussian(),
            n,
            m,
            seed,
        )
        .unwrap()
    }

    #[test]
    fn one_step_is_the_measure() {
        let m = MeasureSpec::uniform_atoms(vec![
            vec![1.0, 0.0, 0.0],
            vec![-1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, -1.0, 0.0],
        ])
        .unwrap();
        let cfg = WalkConfig::new(&NilpotentAlgebra::heisenberg3(), m, 1, 2000, 1).unwrap();
        let s = run_products(&cfg).unwrap();
        assert!(s
            .iter()
            .all(|x| x[2] == 0.0 && (x[0].abs() + x[1].abs() - 1.0).abs() < 1e-15));
    }

    #[test]
    fn abelian_mean_is_linear_in_n() {
        let m = MeasureSpec::product(vec![
            Law1d::Gaussian { mean: 0.5, sd: 1.0 },
            Law1d::Uniform { lo: 0.0, hi: 1.0 },
        ])
        .unwrap();
        let cfg = WalkConfig::new(&NilpotentAlgebra::abelian(2), m, 50, 20_000, 2).unwrap();
        let s = run_products(&cfg).unwrap();
        for k in 0..2 {
            let mut mo = Moments::default();
            s.iter().for_each(|x| mo.push(x[k]));
            assert!((mo.mean() - 25.0).abs() < 4.0 * mo.stderr());
        }
        let rc = cfg.clone().recentering(Recentering::Drift);
        let s = run_products(&rc).unwrap();
        let mut mo = Moments::default();
        s.iter().for_each(|x| mo.push(x[0]));
        assert!(mo.mean().abs() < 4.0 * mo.stderr());
    }

    #[test]
    fn symmetric_heisenberg_area_mean_zero() {
        let m = MeasureSpec::uniform_atoms(vec![
            vec![1.0, 0.0, 0.0],
            vec![-1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, -1.0, 0.0],
        ])
        .unwrap();
        let cfg = WalkConfig::new(&NilpotentAlgebra::heisenberg3(), m, 64, 20_000, 3).unwrap();
        let mut mo = Moments::default();
        run_products(&cfg)
            .unwrap()
            .iter()
            .for_each(|x| mo.push(x[2]));
        assert!(mo.mean().abs() < 4.0 * mo.stderr());
    }

    #[test]
    fn determinism_across_workers() {
        let a = run_products(&heis_gauss(10, 9000, 4).workers(Some(1))).unwrap();
        let b = run_products(&heis_gauss(10, 9000, 4).workers(Some(2))).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn recentering_elements() {
        let m = MeasureSpec::product(vec![
            Law1d::Gaussian { mean: 1.0, sd: 1.0 },
            Law1d::Gaussian { mean: 0.0, sd: 1.0 },
            Law1d::Constant(0.0),
        ])
        .unwrap();
        let cfg = WalkConfig::new(&NilpotentAlgebra::heisenberg3(), m, 16, 10, 1).unwrap();
        assert_eq!(cfg.hom_dim(), 5);
        assert_eq!(cfg.drift(), vec![1.0, 0.0, 0.0]);
        let c = cfg
            .clone()
            .recentering(Recentering::Drift)
            .recentering_element()
            .unwrap();
        assert_eq!(c, vec![-16.0, 0.0, 0.0]);
        let v = cfg
            .recentering(Recentering::Variable(vec![0.0, 1.0, 1.0]))
            .recentering_element()
            .unwrap();
        assert_eq!(v, vec![-16.0, -4.0, -64.0 + 32.0]);
        assert!(WalkConfig::new(
            &NilpotentAlgebra::heisenberg3(),
            MeasureSpec::heisenberg_gaussian(),
            0,
            1,
            1
        )
        .is_err());
    }

    #[test]
    fn conditional_matches_indicator() {
        let region = BoxRegion::centered_cube(3, 2.0);
        let cfg = heis_gauss(4, 200_000, 5);
        let a = llt_box_experiment(&cfg, &region, LltEstimator::Indicator).unwrap();
        let b =
            llt_box_experiment(&cfg.with_m(50_000), &region, LltEstimator::Conditional).unwrap();
        assert!(
            (a.estimate - b.estimate).abs() < 3.0 * (a.stderr.powi(2) + b.stderr.powi(2)).sqrt(),
            "{a:?} {b:?}"
        );
        assert!(b.stderr < a.stderr);
        let g = vec![0.7, -0.3, 1.1];
        let h = vec![0.2, 0.5, -0.4];
        let dev = cfg
            .clone()
            .deviation(g, h)
            .recentering(Recentering::Variable(vec![0.3, 0.1, 0.2]));
        let a = llt_box_experiment(&dev, &region, LltEstimator::Indicator).unwrap();
        let b =
            llt_box_experiment(&dev.with_m(50_000), &region, LltEstimator::Conditional).unwrap();
        assert!(
            (a.estimate - b.estimate).abs() < 3.0 * (a.stderr.powi(2) + b.stderr.powi(2)).sqrt(),
            "{a:?} {b:?}"
        );
    }

    #[test]
    fn conditional_not_applicable_to_atoms() {
        let m = MeasureSpec::uniform_atoms(vec![
            vec![1.0, 0.0, 0.0],
            vec![-1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, -1.0, 0.0],
        ])
        .unwrap();
        let cfg = WalkConfig::new(&NilpotentAlgebra::heisenberg3(), m, 4, 100, 1).unwrap();
        assert!(!conditional_applicable(&cfg));
        assert!(llt_box_experiment(
            &cfg,
            &BoxRegion::centered_cube(3, 1.0),
            LltEstimator::Conditional
        )
        .is_err());
    }

    #[test]
    fn llt_tail_is_small() {
        let cfg = heis_gauss(16, 20_000, 6).recentering(Recentering::Variable(vec![6.0, 6.0, 0.0]));
        let r = llt_box_experiment(&cfg, &BoxRegion::centered_cube(3, 1.0), LltEstimator::Auto)
            .unwrap();
        assert!(r.estimate < 1e-6);
        let cfg = heis_gauss(16, 1000, 6);
        let r = llt_box_experiment(
            &cfg,
            &BoxRegion {
                lo: vec![100.0; 3],
                hi: vec![101.0; 3],
            },
            LltEstimator::Indicator,
        )
        .unwrap();
        assert!(r.low_power);
    }

    #[test]
    fn clt_heisenberg_layer_one() {
        let r = clt_experiment(&heis_gauss(32, 20_000, 7)).unwrap();
        assert!((r.covariance[0][0] - 1.0).abs() < 0.05);
        assert!(r.covariance[0][1].abs() < 0.05);
        assert!((r.covariance[2][2] - 0.25 * (1.0 - 1.0 / 32.0)).abs() < 0.03);
        let inside = r.histograms[0].counts.iter().sum::<u64>();
        assert!(inside <= 20_000 && inside > 19_900);
    }

    #[test]
    fn ratio_at_origin() {
        let nu = levy_samples(20_000, 64, 8, None).unwrap();
        let kde = Kde::new(&nu, KernelOrder::Fourth).unwrap();
        let cfg = heis_gauss(32, 100_000, 9);
        let r = ratio_experiment(&cfg, &BoxRegion::centered_cube(3, 1.0), &kde, 3).unwrap();
        assert!(r.within(0.2), "{r:?}");
    }

    #[test]
    fn pixel_constant_gap_is_zero() {
        let cfg = heis_gauss(16, 2000, 10);
        let nu = levy_samples(2000, 16, 11, None).unwrap();
        let fam = vec![TestFunction::Constant(0.3)];
        let r = pixel_experiment(&cfg, &nu, &fam).unwrap();
        assert_eq!(r.max_gap, 0.0);
        let fam = pixel_family(cfg.weights(), 16, 6, 1);
        assert_eq!(fam.len(), 7);
        let r = pixel_experiment(&cfg, &nu, &fam).unwrap();
        assert!(r.max_gap < 0.1);
    }

    #[test]
    fn schedule() {
        assert_eq!(truncation_schedule(1000, 1, 0.5), vec![1000]);
        let s = truncation_schedule(1 << 20, 3, 0.5);
        assert_eq!(*s.last().unwrap(), 1 << 20);
        assert!(s.windows(2).all(|w| w[0] <= w[1]));
        assert_eq!(
            s[0],
            ((1u64 << 20) as f64).powf(1.0 - 0.5 / 96.0).floor() as usize
        );
    }

    #[test]
    fn theta_equals_plain_for_bounded_law() {
        let m = MeasureSpec::product(vec![
            Law1d::Uniform { lo: -1.0, hi: 1.0 },
            Law1d::Uniform { lo: -1.0, hi: 1.0 },
            Law1d::Constant(0.0),
        ])
        .unwrap();
        let cfg = WalkConfig::new(&NilpotentAlgebra::heisenberg3(), m, 64, 500, 12).unwrap();
        let theta = gradual_truncation_products(&cfg, 0.2, 0).unwrap();
        let plain = run_products(&cfg).unwrap();
        assert_eq!(theta.altered_fraction, 0.0);
        for (a, b) in theta.samples.iter().zip(&plain) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() < 1e-9 * (1.0 + y.abs()));
            }
        }
    }

    #[test]
    fn theta_with_drift_projects_back() {
        let m = MeasureSpec::atoms(
            vec![vec![1.5, 0.5, 0.0], vec![0.5, -0.5, 0.0]],
            vec![0.5, 0.5],
        )
        .unwrap();
        let cfg = WalkConfig::new(&NilpotentAlgebra::heisenberg3(), m, 32, 300, 13).unwrap();
        let theta = gradual_truncation_products(&cfg, 0.2, 0).unwrap();
        let plain = run_products(&cfg).unwrap();
        assert_eq!(theta.altered_fraction, 0.0);
        for (a, b) in theta.samples.iter().zip(&plain) {
            for (x, y) in a.iter().zip(b) {
                assert!((x - y).abs() < 1e-9 * (1.0 + y.abs()));
            }
        }
    }

    #[test]
    fn theta_gaussian_alters_rarely() {
        let cfg = heis_gauss(4, 4000, 14);
        let small = gradual_truncation_products(&cfg, 0.2, 0)
            .unwrap()
            .altered_fraction;
        let large = gradual_truncation_products(&cfg.with_n(64), 0.2, 0)
            .unwrap()
            .altered_fraction;
        assert!(small > 0.0 && large < small);
    }

    #[test]
    fn deviation_sets() {
        let w = [1, 1, 2];
        let x0 = [0.0; 3];
        let n = 256;
        let d = DeviationSpec {
            kind: DeviationKind::D { delta0: 0.1 },
            n,
        };
        assert!(d.contains(&w, &x0, 2, &x0));
        assert!(d.contains(&w, &x0, 2, &[16.0, 0.0, 256.0]));
        assert!(!d.contains(&w, &x0, 2, &[0.0, 0.0, 1e6]));
        let b = DeviationSpec::w_boundary_point(&w, n, 0.05);
        let ws = DeviationSpec {
            kind: DeviationKind::W { c: 0.05 },
            n,
        };
        assert!(ws.contains(&w, &x0, 2, &b));
        assert!(!ws.contains(&w, &x0, 2, &b.iter().map(|v| v * 1.01).collect::<Vec<_>>()));
        let e = DeviationSpec {
            kind: DeviationKind::E { epsilon0: 0.1 },
            n,
        };
        let drift = [1.0, 0.0, 0.0];
        assert!(e.contains(&w, &drift, 2, &[200.0, 0.0, 0.0]));
        assert!(!e.contains(&w, &[0.0; 3], 2, &[200.0, 0.0, 0.0]));
        assert!(!e.contains(&w, &drift, 2, &[0.0, 200.0, 0.0]));
    }

    #[test]
    fn filtration_drift_must_match() {
        let f = Arc::new(
            build_weight_filtration(&NilpotentAlgebra::heisenberg3(), &qvec(&[0, 0, 0])).unwrap(),
        );
        let m = MeasureSpec::product(vec![
            Law1d::Gaussian { mean: 1.0, sd: 1.0 },
            Law1d::Gaussian { mean: 0.0, sd: 1.0 },
            Law1d::Constant(0.0),
        ])
        .unwrap();
        assert!(WalkConfig::with_filtration(f, Arc::new(m), 4, 4, 1).is_err());
    }
}
