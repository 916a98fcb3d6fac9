//! Empirical characteristic functions of walk products, reduced-domain scans,
//! the gap-weighted test-function norm and band-limited sandwiches of 1D functions.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::filtration::WeightFiltration;
use crate::measures::{gap_inf, MeasureSpec};
use crate::stats::gauss_legendre;
use crate::walk_sim::{fold_products, WalkConfig};

/// A linear form on 𝔤 in the dual adapted basis with its per-layer restriction norms.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FrequencyPoint {
    pub xi: Vec<f64>,
    /// ‖ξ|_{𝔤^(b)}‖ for b = 1, 2, …
    pub layer_norms: Vec<f64>,
}

impl FrequencyPoint {
    pub fn new(weights: &[usize], xi: Vec<f64>) -> Self {
        let max = weights.iter().copied().max().unwrap_or(1);
        let layer_norms = (1..=max)
            .map(|b| {
                xi.iter()
                    .zip(weights)
                    .filter(|(_, w)| **w >= b)
                    .map(|(v, _)| v * v)
                    .sum::<f64>()
                    .sqrt()
            })
            .collect();
        FrequencyPoint { xi, layer_norms }
    }

    /// ξ ∈ 𝒰_N(γ₀): ‖ξ|_{𝔤^(b)}‖ ≤ N^{−b/2+γ₀} for every b.
    pub fn in_reduced_domain(&self, n: usize, gamma0: f64) -> bool {
        self.layer_norms
            .iter()
            .enumerate()
            .all(|(i, v)| *v <= (n as f64).powf(-((i + 1) as f64) / 2.0 + gamma0))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CharEstimate {
    pub re: f64,
    pub im: f64,
    pub stderr: f64,
}

impl CharEstimate {
    pub fn modulus(&self) -> f64 {
        self.re.hypot(self.im)
    }

    pub fn value(&self) -> Complex64 {
        Complex64::new(self.re, self.im)
    }
}

/// Mean of e^{−2πiξ(x)} over the observed products, one estimate per frequency from a single pass.
pub fn empirical_char_many(cfg: &WalkConfig, xis: &[FrequencyPoint]) -> Result<Vec<CharEstimate>> {
    if cfg.m < 1000 {
        return Err(Error::InvalidArgument(format!(
            "characteristic function estimates need M ≥ 1000, got {}",
            cfg.m
        )));
    }
    for x in xis {
        if x.xi.len() != cfg.dim() {
            return Err(Error::DimensionMismatch {
                expected: cfg.dim(),
                got: x.xi.len(),
            });
        }
    }
    let k = xis.len();
    let chunks = fold_products(
        cfg,
        || vec![[0.0f64; 4]; k],
        |acc, x| {
            for (a, f) in acc.iter_mut().zip(xis) {
                let t = -2.0 * PI * f.xi.iter().zip(x).map(|(u, v)| u * v).sum::<f64>();
                let (s, c) = t.sin_cos();
                a[0] += c;
                a[1] += s;
                a[2] += c * c;
                a[3] += s * s;
            }
        },
    )?;
    let m = cfg.m as f64;
    Ok((0..k)
        .map(|j| {
            let mut t = [0.0; 4];
            for c in &chunks {
                for q in 0..4 {
                    t[q] += c[j][q];
                }
            }
            let (re, im) = (t[0] / m, t[1] / m);
            let var = (t[2] / m - re * re).max(0.0) + (t[3] / m - im * im).max(0.0);
            CharEstimate {
                re,
                im,
                stderr: (var / m).sqrt(),
            }
        })
        .collect())
}

pub fn empirical_char(cfg: &WalkConfig, xi: &FrequencyPoint) -> Result<CharEstimate> {
    Ok(empirical_char_many(cfg, std::slice::from_ref(xi))?[0])
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanRow {
    pub xi: Vec<f64>,
    pub layer_norms: Vec<f64>,
    pub inside: bool,
    #[serde(rename = "N")]
    pub n: usize,
    pub modulus: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScanSummary {
    pub xi: Vec<f64>,
    pub outside_everywhere: bool,
    pub moduli: Vec<f64>,
    pub stderrs: Vec<f64>,
    /// m_{k+1} < m_k + 3√(se_k² + se_{k+1}²) along the N-grid.
    pub decreasing: bool,
    pub last: f64,
}

/// Moduli of the empirical characteristic function over an N-grid for each frequency.
pub fn reduced_domain_scan(
    cfg: &WalkConfig,
    gamma0: f64,
    xis: &[FrequencyPoint],
    n_grid: &[usize],
) -> Result<(Vec<ScanRow>, Vec<ScanSummary>)> {
    let mut rows = Vec::new();
    let mut per_xi: Vec<Vec<(f64, f64)>> = vec![Vec::new(); xis.len()];
    for &n in n_grid {
        let est = empirical_char_many(&cfg.with_n(n), xis)?;
        for (j, (f, e)) in xis.iter().zip(&est).enumerate() {
            rows.push(ScanRow {
                xi: f.xi.clone(),
                layer_norms: f.layer_norms.clone(),
                inside: f.in_reduced_domain(n, gamma0),
                n,
                modulus: e.modulus(),
                stderr: e.stderr,
            });
            per_xi[j].push((e.modulus(), e.stderr));
        }
    }
    let summaries = xis
        .iter()
        .zip(&per_xi)
        .map(|(f, v)| ScanSummary {
            xi: f.xi.clone(),
            outside_everywhere: n_grid.iter().all(|&n| !f.in_reduced_domain(n, gamma0)),
            moduli: v.iter().map(|p| p.0).collect(),
            stderrs: v.iter().map(|p| p.1).collect(),
            decreasing: v
                .windows(2)
                .all(|w| w[1].0 < w[0].0 + 3.0 * (w[0].1.powi(2) + w[1].1.powi(2)).sqrt()),
            last: v.last().map_or(f64::NAN, |p| p.0),
        })
        .collect();
    Ok((rows, summaries))
}

/// Logarithmic frequency grid per layer: for each weight b and each exponent in `exponents`,
/// the form N_ref^{e} · (unit dual vector of the first coordinate of weight b).
pub fn log_xi_grid(weights: &[usize], n_ref: usize, exponents: &[f64]) -> Vec<FrequencyPoint> {
    let mut out = Vec::new();
    let max = weights.iter().copied().max().unwrap_or(1);
    for b in 1..=max {
        if let Some(k) = weights.iter().position(|&w| w == b) {
            for e in exponents {
                let mut xi = vec![0.0; weights.len()];
                xi[k] = (n_ref as f64).powf(*e);
                out.push(FrequencyPoint::new(weights, xi));
            }
        }
    }
    out
}

/// Test functions on ℝ^d with closed-form Fourier transforms f̂(ξ) = ∫ f(x) e^{−2πiξx} dx.
#[derive(Debug, Clone, PartialEq)]
pub enum FourierTestFn {
    /// Π_k exp(−x_k²/(2w²))
    GaussianBump { dim: usize, width: f64 },
    /// Π_k K·sinc²(πK x_k), f̂ = Π_k max(0, 1 − |ξ_k|/K).
    Fejer { dim: usize, k: f64 },
}

impl FourierTestFn {
    pub fn dim(&self) -> usize {
        match *self {
            FourierTestFn::GaussianBump { dim, .. } | FourierTestFn::Fejer { dim, .. } => dim,
        }
    }

    pub fn l1_norm(&self) -> f64 {
        match *self {
            FourierTestFn::GaussianBump { dim, width } => {
                (width * (2.0 * PI).sqrt()).powi(dim as i32)
            }
            FourierTestFn::Fejer { .. } => 1.0,
        }
    }

    pub fn fourier_abs(&self, xi: &[f64]) -> f64 {
        match *self {
            FourierTestFn::GaussianBump { width, .. } => xi
                .iter()
                .map(|x| width * (2.0 * PI).sqrt() * (-2.0 * PI * PI * width * width * x * x).exp())
                .product(),
            FourierTestFn::Fejer { k, .. } => {
                xi.iter().map(|x| (1.0 - x.abs() / k).max(0.0)).product()
            }
        }
    }

    /// Box outside which |f̂| is negligible (or zero).
    fn fourier_extent(&self) -> f64 {
        match *self {
            FourierTestFn::GaussianBump { width, .. } => 40f64.sqrt() / (PI * width * 2f64.sqrt()),
            FourierTestFn::Fejer { k, .. } => k,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TestNorm {
    pub value: f64,
    pub l1: f64,
    pub weighted_fourier: f64,
    pub finite: bool,
}

/// ‖f‖_{L¹} + ∫ |f̂(ξ)| (1+‖ξ‖)^L gap_c(‖ξ‖)^{−L} dξ by tensor Gauss–Legendre quadrature.
/// The gap is tabulated on a radial grid and read at the next grid radius, which can only
/// overstate the weight.
pub fn test_norm(
    f: &FourierTestFn,
    measure: &MeasureSpec,
    filt: &WeightFiltration,
    c: f64,
    l: f64,
) -> Result<TestNorm> {
    if f.dim() != filt.dim() {
        return Err(Error::DimensionMismatch {
            expected: filt.dim(),
            got: f.dim(),
        });
    }
    let ext = f.fourier_extent();
    let d = f.dim();
    let rmax = ext * (d as f64).sqrt();
    let table: Vec<(f64, f64)> = if l == 0.0 {
        Vec::new()
    } else {
        let t1 = crate::measures::ab_chart(filt);
        let modulus = |xi: &[f64]| {
            let mut eta = vec![0.0; measure.dim()];
            for (row, x) in t1.iter().zip(xi) {
                for (e, a) in eta.iter_mut().zip(row) {
                    *e += a * x;
                }
            }
            measure.char_linear(&eta).norm()
        };
        let steps = 64;
        (1..=steps)
            .map(|i| {
                let r = rmax * i as f64 / steps as f64;
                gap_inf(&modulus, t1.len(), c, r).map(|g| (r, g.value))
            })
            .collect::<Result<_>>()?
    };
    let weight = |r: f64| -> f64 {
        if l == 0.0 {
            return 1.0;
        }
        let g = table
            .iter()
            .find(|(rr, _)| *rr >= r)
            .map_or(table.last().map_or(0.0, |p| p.1), |p| p.1);
        if g <= 0.0 {
            f64::INFINITY
        } else {
            ((1.0 + r) / g).powf(l)
        }
    };
    let panels = 8;
    let rule = gauss_legendre(12, -1.0, 1.0);
    let mut nodes1 = Vec::new();
    for p in 0..panels {
        let a = -ext + 2.0 * ext * p as f64 / panels as f64;
        let b = a + 2.0 * ext / panels as f64;
        for (x, w) in &rule {
            nodes1.push((0.5 * (b - a) * x + 0.5 * (a + b), 0.5 * (b - a) * w));
        }
    }
    let mut total = 0.0;
    let mut idx = vec![0usize; d];
    loop {
        let xi: Vec<f64> = idx.iter().map(|&i| nodes1[i].0).collect();
        let w: f64 = idx.iter().map(|&i| nodes1[i].1).product();
        let fa = f.fourier_abs(&xi);
        if fa > 0.0 {
            total += w * fa * weight(xi.iter().map(|v| v * v).sum::<f64>().sqrt());
        }
        let mut k = 0;
        while k < d {
            idx[k] += 1;
            if idx[k] < nodes1.len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == d {
            break;
        }
    }
    let l1 = f.l1_norm();
    Ok(TestNorm {
        value: l1 + total,
        l1,
        weighted_fourier: total,
        finite: total.is_finite(),
    })
}

/// Continuous piecewise-linear function vanishing outside its first and last knot.
#[derive(Debug, Clone, PartialEq)]
pub struct PiecewiseLinear {
    knots: Vec<(f64, f64)>,
}

impl PiecewiseLinear {
    pub fn new(knots: Vec<(f64, f64)>) -> Result<Self> {
        if knots.len() < 2 || knots.windows(2).any(|w| !(w[0].0 < w[1].0)) {
            return Err(Error::InvalidArgument(
                "knots must be strictly increasing (at least two)".into(),
            ));
        }
        if knots[0].1 != 0.0 || knots[knots.len() - 1].1 != 0.0 {
            return Err(Error::InvalidArgument(
                "function must vanish at the end knots".into(),
            ));
        }
        Ok(PiecewiseLinear { knots })
    }

    pub fn hat() -> Self {
        PiecewiseLinear {
            knots: vec![(-1.0, 0.0), (0.0, 1.0), (1.0, 0.0)],
        }
    }

    pub fn zero(a: f64, b: f64) -> Self {
        PiecewiseLinear {
            knots: vec![(a, 0.0), (b, 0.0)],
        }
    }

    pub fn support(&self) -> (f64, f64) {
        (self.knots[0].0, self.knots[self.knots.len() - 1].0)
    }

    pub fn is_zero(&self) -> bool {
        self.knots.iter().all(|k| k.1 == 0.0)
    }

    pub fn eval(&self, x: f64) -> f64 {
        let (a, b) = self.support();
        if x <= a || x >= b {
            return 0.0;
        }
        let i = self.knots.partition_point(|k| k.0 <= x) - 1;
        let (x0, y0) = self.knots[i];
        let (x1, y1) = self.knots[i + 1];
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }

    pub fn l1_norm(&self) -> f64 {
        self.knots
            .windows(2)
            .map(|w| {
                let (x0, y0) = w[0];
                let (x1, y1) = w[1];
                if y0 * y1 >= 0.0 {
                    0.5 * (y0.abs() + y1.abs()) * (x1 - x0)
                } else {
                    let t = y0.abs() / (y0.abs() + y1.abs());
                    0.5 * (x1 - x0) * (t * y0.abs() + (1.0 - t) * y1.abs())
                }
            })
            .sum()
    }
}

/// sin⁴(πx)/x⁴ + cos⁴(πx)/(x+½)⁴: positive, integrable, Fourier transform supported in [−2, 2].
pub fn rho1(x: f64) -> f64 {
    let s = |y: f64| {
        if y.abs() < 1e-4 {
            let p = PI * PI * y * y;
            PI.powi(4) * (1.0 - p / 6.0).powi(4)
        } else {
            ((PI * y).sin() / y).powi(4)
        }
    };
    s(x) + s(x + 0.5)
}

/// ∫ rho1 = 4π⁴/3.
pub const RHO1_MASS: f64 = 4.0 * PI * PI * PI * PI / 3.0;

/// ¼ sin²(πx) Σ_{n ∈ S} (x−n)^{−2}; Fourier transform supported in [−1, 1], ≥ 1 on [min S, max S].
pub fn phi_k(x: f64, s: &[i64]) -> f64 {
    let sx = (PI * x).sin().powi(2);
    0.25 * s
        .iter()
        .map(|&n| {
            let y = x - n as f64;
            if y.abs() < 1e-6 {
                PI * PI * (1.0 - PI * PI * y * y / 3.0)
            } else {
                sx / (y * y)
            }
        })
        .sum::<f64>()
}

#[derive(Debug, Clone)]
pub struct Sandwich {
    f: PiecewiseLinear,
    pub t: f64,
    /// Coefficient of φ_K.
    pub e: f64,
    /// Coefficient of the positive tail kernel.
    pub delta: f64,
    pub s: Vec<i64>,
    center: f64,
    g_nodes: Vec<(f64, f64)>,
    zero_scale: f64,
}

impl Sandwich {
    fn g(&self, x: f64) -> f64 {
        let t = self.t;
        self.g_nodes
            .iter()
            .map(|(y, w)| w * t * rho1(t * (x - y)) / RHO1_MASS)
            .sum()
    }

    fn tail(&self, x: f64) -> f64 {
        rho1(x - self.center)
    }

    pub fn f_plus(&self, x: f64) -> f64 {
        if self.zero_scale > 0.0 {
            return self.zero_scale * rho1(x) / RHO1_MASS;
        }
        self.g(x) + self.e * phi_k(x, &self.s) + self.delta * self.tail(x)
    }

    pub fn f_minus(&self, x: f64) -> f64 {
        if self.zero_scale > 0.0 {
            return -self.zero_scale * rho1(x) / RHO1_MASS;
        }
        self.g(x) - self.e * phi_k(x, &self.s) - self.delta * self.tail(x)
    }

    /// ‖f⁺ − f⁻‖₁ in closed form.
    pub fn l1_gap_exact(&self) -> f64 {
        if self.zero_scale > 0.0 {
            return 2.0 * self.zero_scale;
        }
        2.0 * self.e * self.s.len() as f64 * PI * PI / 4.0 + 2.0 * self.delta * RHO1_MASS
    }

    /// ‖f⁺ − f⁻‖₁ by composite Gauss–Legendre on [a−R, b+R] plus the analytic 1/x² tail bound.
    pub fn l1_gap_quadrature(&self, r: f64) -> f64 {
        let (a, b) = self.f.support();
        let (lo, hi) = (a - r, b + r);
        let panels = (4.0 * (hi - lo)).ceil() as usize;
        let rule = gauss_legendre(10, -1.0, 1.0);
        let mut total = 0.0;
        for p in 0..panels {
            let pa = lo + (hi - lo) * p as f64 / panels as f64;
            let pb = lo + (hi - lo) * (p + 1) as f64 / panels as f64;
            for (x, w) in &rule {
                let y = 0.5 * (pb - pa) * x + 0.5 * (pa + pb);
                total += 0.5 * (pb - pa) * w * (self.f_plus(y) - self.f_minus(y));
            }
        }
        let tail_phi = if self.zero_scale > 0.0 {
            0.0
        } else {
            2.0 * self.e * 0.25 * self.s.len() as f64 * 2.0 / (r - 1.0)
        };
        let tail_rho = 2.0 * (self.delta + self.zero_scale / RHO1_MASS) * 2.0 * 2.0
            / (3.0 * (r - 1.0).powi(3));
        total + tail_phi + tail_rho
    }

    /// Counts grid points of [a−pad, b+pad] where f⁻ ≤ f ≤ f⁺ fails.
    pub fn violations(&self, points: usize, pad: f64) -> usize {
        let (a, b) = self.f.support();
        (0..points)
            .filter(|&i| {
                let x = a - pad + (b - a + 2.0 * pad) * i as f64 / (points - 1) as f64;
                let v = self.f.eval(x);
                !(self.f_minus(x) <= v && v <= self.f_plus(x))
            })
            .count()
    }
}

/// Builds f⁻ ≤ f ≤ f⁺ with compactly supported Fourier transforms and ‖f⁺−f⁻‖₁ < ε:
/// g = f * ρ_t, f± = g ± (e φ_K + δ ρ1(· − centre)), doubling t until the gap is below ε.
pub fn band_limited_sandwich(f: &PiecewiseLinear, eps: f64, max_t: f64) -> Result<Sandwich> {
    if !(eps > 0.0) {
        return Err(Error::InvalidArgument("eps must be positive".into()));
    }
    let (a, b) = f.support();
    let s: Vec<i64> = ((a.floor() as i64)..=(b.ceil() as i64)).collect();
    let center = 0.5 * (a + b);
    if f.is_zero() {
        return Ok(Sandwich {
            f: f.clone(),
            t: 0.0,
            e: 0.0,
            delta: 0.0,
            s,
            center,
            g_nodes: Vec::new(),
            zero_scale: eps / 4.0,
        });
    }
    let rule = gauss_legendre(6, -1.0, 1.0);
    let mut t = 1.0;
    while t <= max_t {
        let mut g_nodes = Vec::new();
        for w in f.knots.windows(2) {
            let (x0, x1) = (w[0].0, w[1].0);
            let panels = ((x1 - x0) * 2.0 * t).ceil().max(1.0) as usize;
            for p in 0..panels {
                let pa = x0 + (x1 - x0) * p as f64 / panels as f64;
                let pb = x0 + (x1 - x0) * (p + 1) as f64 / panels as f64;
                for (x, wt) in &rule {
                    let y = 0.5 * (pb - pa) * x + 0.5 * (pa + pb);
                    g_nodes.push((y, 0.5 * (pb - pa) * wt * f.eval(y)));
                }
            }
        }
        let mut sw = Sandwich {
            f: f.clone(),
            t,
            e: 0.0,
            delta: 0.0,
            s: s.clone(),
            center,
            g_nodes,
            zero_scale: 0.0,
        };
        let dense = 40_000;
        let mut e: f64 = 0.0;
        for i in 0..=dense {
            let x = s[0] as f64 + (s[s.len() - 1] - s[0]) as f64 * i as f64 / dense as f64;
            let diff = (f.eval(x) - sw.g(x)).abs();
            e = e.max(diff / phi_k(x, &s));
        }
        sw.e = 1.05 * e + 1e-12;
        let mut delta: f64 = 0.0;
        let pad = 60.0;
        let outer = 40_000;
        let grid = (0..=outer).map(|i| a - pad + (b - a + 2.0 * pad) * i as f64 / outer as f64);
        let near_int = (((a - pad).floor() as i64)..=((b + pad).ceil() as i64))
            .flat_map(|n| [-1e-3, -1e-4, 0.0, 1e-4, 1e-3].map(|h| n as f64 + h));
        for x in grid.chain(near_int) {
            let excess = (f.eval(x) - sw.g(x)).abs() - sw.e * phi_k(x, &s);
            if excess > 0.0 {
                delta = delta.max(excess / sw.tail(x));
            }
        }
        sw.delta = 1.05 * delta;
        if sw.l1_gap_exact() < eps {
            return Ok(sw);
        }
        t *= 2.0;
    }
    Err(Error::NoConvergence(format!(
        "band-limited sandwich did not reach eps={eps} with t ≤ {max_t}"
    )))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filtration::build_weight_filtration;
    use crate::lie_core::NilpotentAlgebra;
    use crate::measures::Law1d;
    use crate::scalar::qvec;

    #[test]
    fn frequency_domain_membership() {
        let w = [1, 1, 2];
        let f = FrequencyPoint::new(&w, vec![0.0, 0.0, 1.0]);
        assert_eq!(f.layer_norms, vec![1.0, 1.0]);
        assert!(!f.in_reduced_domain(16, 0.1));
        let z = FrequencyPoint::new(&w, vec![0.0; 3]);
        assert!(z.in_reduced_domain(1 << 20, 0.1));
        let small = FrequencyPoint::new(&w, vec![0.01, 0.0, 0.0001]);
        assert!(small.in_reduced_domain(256, 0.1));
        assert!(!small.in_reduced_domain(1 << 20, 0.1));
        assert_eq!(log_xi_grid(&w, 16, &[-0.5, 0.0]).len(), 4);
    }

    #[test]
    fn empirical_char_basics() {
        let m = MeasureSpec::product(vec![Law1d::Gaussian { mean: 0.0, sd: 1.0 }]).unwrap();
        let cfg = WalkConfig::new(&NilpotentAlgebra::abelian(1), m, 1, 20_000, 1).unwrap();
        let xs = vec![
            FrequencyPoint::new(&[1], vec![0.0]),
            FrequencyPoint::new(&[1], vec![0.2]),
            FrequencyPoint::new(&[1], vec![-0.2]),
        ];
        let e = empirical_char_many(&cfg, &xs).unwrap();
        assert_eq!((e[0].re, e[0].im), (1.0, 0.0));
        let target = (-2.0 * PI * PI * 0.04f64).exp();
        assert!((e[1].re - target).abs() < 4.0 * e[1].stderr);
        assert!(e[1].im.abs() < 4.0 * e[1].stderr);
        assert_eq!(e[2].re, e[1].re);
        assert_eq!(e[2].im, -e[1].im);
        assert!(empirical_char(&cfg.with_m(10), &xs[0]).is_err());
    }

    #[test]
    fn heisenberg_outside_domain_decays() {
        let cfg = WalkConfig::new(
            &NilpotentAlgebra::heisenberg3(),
            MeasureSpec::heisenberg_gaussian(),
            4,
            20_000,
            2,
        )
        .unwrap();
        let xi = FrequencyPoint::new(cfg.weights(), vec![0.0, 0.0, 1.0]);
        let (rows, sum) = reduced_domain_scan(&cfg, 0.1, &[xi], &[4, 16, 64]).unwrap();
        assert_eq!(rows.len(), 3);
        assert!(sum[0].outside_everywhere && sum[0].decreasing);
        assert!(sum[0].last < 0.05);
    }

    #[test]
    fn lattice_resonance_stays() {
        let m = MeasureSpec::uniform_atoms(vec![
            vec![1.0, 0.0, 0.0],
            vec![-1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![0.0, -1.0, 0.0],
        ])
        .unwrap();
        let cfg = WalkConfig::new(&NilpotentAlgebra::heisenberg3(), m, 16, 2000, 3).unwrap();
        let e = empirical_char(
            &cfg,
            &FrequencyPoint::new(cfg.weights(), vec![1.0, 0.0, 0.0]),
        )
        .unwrap();
        assert!((e.modulus() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn norms() {
        let f = build_weight_filtration(&NilpotentAlgebra::abelian(1), &qvec(&[0])).unwrap();
        let g = MeasureSpec::product(vec![Law1d::Gaussian { mean: 0.0, sd: 1.0 }]).unwrap();
        let bump = FourierTestFn::GaussianBump { dim: 1, width: 1.0 };
        let n0 = test_norm(&bump, &g, &f, 0.1, 0.0).unwrap();
        assert!(
            (n0.value - ((2.0 * PI).sqrt() + 1.0)).abs() < 1e-6,
            "{n0:?}"
        );
        let n2 = test_norm(&bump, &g, &f, 0.1, 2.0).unwrap();
        assert!(n2.finite && n2.value > n0.value);
        let fej = FourierTestFn::Fejer { dim: 1, k: 2.0 };
        let nf = test_norm(&fej, &g, &f, 0.1, 0.0).unwrap();
        assert!((nf.value - 3.0).abs() < 1e-9);
        assert!(test_norm(&fej, &g, &f, 0.1, 5.0).unwrap().finite);
        let lattice = MeasureSpec::uniform_atoms(vec![vec![0.0], vec![1.0]]).unwrap();
        assert!(
            !test_norm(
                &FourierTestFn::Fejer { dim: 1, k: 40.0 },
                &lattice,
                &f,
                0.1,
                1.0
            )
            .unwrap()
            .finite
        );
    }

    #[test]
    fn kernels() {
        let rule = gauss_legendre(10, -1.0, 1.0);
        let mut mass = 0.0;
        for p in 0..4000 {
            let (a, b) = (-500.0 + 0.25 * p as f64, -500.0 + 0.25 * (p + 1) as f64);
            for (x, w) in &rule {
                mass += 0.5 * (b - a) * w * rho1(0.5 * (b - a) * x + 0.5 * (a + b));
            }
        }
        assert!((mass / RHO1_MASS - 1.0).abs() < 1e-4);
        let s = [-1, 0, 1];
        for i in 0..=200 {
            assert!(phi_k(-1.0 + i as f64 / 100.0, &s) >= 1.0);
        }
        assert!((rho1(1e-5) - rho1(0.0)).abs() < 1e-2);
        assert!((rho1(1.0001e-4) - rho1(0.9999e-4)).abs() < 1e-5);
    }

    #[test]
    fn hat_sandwich() {
        let f = PiecewiseLinear::hat();
        assert_eq!(f.l1_norm(), 1.0);
        let sw = band_limited_sandwich(&f, 0.1, 4096.0).unwrap();
        assert_eq!(sw.violations(10_000, 5.0), 0);
        assert!(sw.l1_gap_exact() < 0.1);
        assert!((sw.l1_gap_quadrature(400.0) - sw.l1_gap_exact()).abs() < 5e-3);
    }

    #[test]
    fn zero_sandwich() {
        let f = PiecewiseLinear::zero(-1.0, 1.0);
        let sw = band_limited_sandwich(&f, 0.2, 16.0).unwrap();
        assert_eq!(sw.violations(1000, 3.0), 0);
        assert!((sw.f_plus(0.3) + sw.f_minus(0.3)).abs() < 1e-15);
        assert!(sw.l1_gap_exact() < 0.2);
    }
}
