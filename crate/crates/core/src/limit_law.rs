//! The CLT limit law ν: a group-increment Euler sampler for the hypoelliptic
//! diffusion on (𝔤, *′), the planar Brownian motion / Lévy area reference, and
//! kernel density estimates of its density v.

use std::sync::Arc;

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::filtration::WeightFiltration;
use crate::lie_core::NilpotentAlgebra;
use crate::linalg::{cholesky_psd, matvec_f64};
use crate::measures::MeasureSpec;
use crate::parallel::run_chunked;

pub const DEFAULT_STEPS: usize = 2048;

#[derive(Debug, Clone)]
pub struct DiffusionSpec {
    filtration: Arc<WeightFiltration>,
    graded: Arc<NilpotentAlgebra>,
    e_basis: Vec<Vec<f64>>,
    b_mu: Vec<f64>,
    steps: usize,
    drift_terms: Vec<Vec<f64>>,
    noise_terms: Vec<Vec<Vec<f64>>>,
}

impl DiffusionSpec {
    /// E_i: columns of a square root of Cov(μ_ab) placed in 𝔪^(1); B_μ = E_μ(x^(2)).
    pub fn new(f: Arc<WeightFiltration>, measure: &MeasureSpec, steps: usize) -> Result<Self> {
        measure.check_compatible(&f)?;
        let cov = measure.ab_covariance(&f);
        let l = cholesky_psd(&cov)?;
        let n = f.dim();
        let layer1: Vec<usize> = f.layer(1).collect();
        let e_basis = (0..layer1.len())
            .map(|i| {
                let mut v = vec![0.0; n];
                for (r, &k) in layer1.iter().enumerate() {
                    v[k] = l[r][i];
                }
                v
            })
            .collect();
        let mean = f.to_adapted(&measure.mean());
        let b_mu = f.project(2, &mean);
        Self::from_parts(f, e_basis, b_mu, steps)
    }

    pub fn from_parts(
        f: Arc<WeightFiltration>,
        e_basis: Vec<Vec<f64>>,
        b_mu: Vec<f64>,
        steps: usize,
    ) -> Result<Self> {
        if steps == 0 {
            return Err(Error::InvalidArgument(
                "diffusion needs at least one time step".into(),
            ));
        }
        let n = f.dim();
        if b_mu.len() != n || e_basis.iter().any(|e| e.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: b_mu.len(),
            });
        }
        let h = 1.0 / steps as f64;
        let sh = h.sqrt();
        let mut drift_terms = Vec::with_capacity(steps);
        let mut noise_terms = Vec::with_capacity(steps);
        for k in 0..steps {
            let m = f.exp_a_x_f64(k as f64 * h);
            drift_terms.push(matvec_f64(&m, &b_mu).iter().map(|v| v * h).collect());
            noise_terms.push(
                e_basis
                    .iter()
                    .map(|e| matvec_f64(&m, e).iter().map(|v| v * sh).collect())
                    .collect(),
            );
        }
        Ok(DiffusionSpec {
            graded: f.graded_algebra().clone(),
            filtration: f,
            e_basis,
            b_mu,
            steps,
            drift_terms,
            noise_terms,
        })
    }

    pub fn filtration(&self) -> &Arc<WeightFiltration> {
        &self.filtration
    }

    pub fn e_basis(&self) -> &[Vec<f64>] {
        &self.e_basis
    }

    pub fn b_mu(&self) -> &[f64] {
        &self.b_mu
    }

    pub fn steps(&self) -> usize {
        self.steps
    }

    /// One draw of σ_1 (adapted coordinates).
    pub fn simulate_nu<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let n = self.filtration.dim();
        let mut sigma = vec![0.0; n];
        let mut inc = vec![0.0; n];
        let mut out = vec![0.0; n];
        let mut scratch = vec![0.0; self.graded.bch_scratch_len()];
        for k in 0..self.steps {
            inc.copy_from_slice(&self.drift_terms[k]);
            for e in &self.noise_terms[k] {
                let z: f64 = rng.sample(StandardNormal);
                for (a, b) in inc.iter_mut().zip(e) {
                    *a += z * b;
                }
            }
            self.graded
                .bch_f64_into(&sigma, &inc, &mut scratch, &mut out);
            std::mem::swap(&mut sigma, &mut out);
        }
        sigma
    }

    pub fn sample(&self, m: usize, seed: u64, workers: Option<usize>) -> Result<Vec<Vec<f64>>> {
        let chunks = run_chunked(m, seed, workers, |rng, r| {
            r.map(|_| self.simulate_nu(rng)).collect::<Vec<_>>()
        })?;
        Ok(chunks.into_iter().flatten().collect())
    }
}

/// Planar Brownian motion at time 1 and its Lévy area ½∫(B1 dB2 − B2 dB1), midpoint rule.
pub fn levy_area_reference<R: Rng + ?Sized>(steps: usize, rng: &mut R) -> [f64; 3] {
    let sd = (1.0 / steps.max(1) as f64).sqrt();
    let (mut b1, mut b2, mut area) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..steps.max(1) {
        let d1: f64 = sd * rng.sample::<f64, _>(StandardNormal);
        let d2: f64 = sd * rng.sample::<f64, _>(StandardNormal);
        let m1 = b1 + 0.5 * d1;
        let m2 = b2 + 0.5 * d2;
        area += 0.5 * (m1 * d2 - m2 * d1);
        b1 += d1;
        b2 += d2;
    }
    [b1, b2, area]
}

pub fn levy_samples(
    m: usize,
    steps: usize,
    seed: u64,
    workers: Option<usize>,
) -> Result<Vec<Vec<f64>>> {
    let chunks = run_chunked(m, seed, workers, |rng, r| {
        r.map(|_| levy_area_reference(steps, rng).to_vec())
            .collect::<Vec<_>>()
    })?;
    Ok(chunks.into_iter().flatten().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelOrder {
    /// Gaussian kernel.
    Second,
    /// ½(3 − u²)φ(u), which cancels the second-moment bias term.
    Fourth,
}

pub const MIN_KDE_SAMPLES: usize = 10_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityEstimate {
    pub value: f64,
    pub stderr: f64,
}

/// Product-kernel density estimate over a frozen sample buffer.
#[derive(Debug, Clone)]
pub struct Kde {
    dim: usize,
    n: usize,
    data: Vec<f64>,
    bandwidth: Vec<f64>,
    order: KernelOrder,
}

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

impl Kde {
    /// Scott rule per coordinate: h_k = sd_k · n^{−1/(d+4)}.
    pub fn new(samples: &[Vec<f64>], order: KernelOrder) -> Result<Self> {
        let d = samples.first().map_or(0, Vec::len);
        let n = samples.len() as f64;
        let bw = (0..d)
            .map(|k| {
                let m = samples.iter().map(|s| s[k]).sum::<f64>() / n;
                let v = samples.iter().map(|s| (s[k] - m).powi(2)).sum::<f64>() / (n - 1.0);
                v.sqrt() * n.powf(-1.0 / (d as f64 + 4.0))
            })
            .collect();
        Self::with_bandwidth(samples, bw, order)
    }

    pub fn with_bandwidth(
        samples: &[Vec<f64>],
        bandwidth: Vec<f64>,
        order: KernelOrder,
    ) -> Result<Self> {
        if samples.len() < MIN_KDE_SAMPLES {
            return Err(Error::InvalidArgument(format!(
                "density estimation needs at least {MIN_KDE_SAMPLES} samples, got {}",
                samples.len()
            )));
        }
        let dim = samples[0].len();
        if bandwidth.len() != dim || bandwidth.iter().any(|h| !(*h > 0.0)) {
            return Err(Error::InvalidArgument(
                "bandwidths must be positive, one per coordinate".into(),
            ));
        }
        let mut data = Vec::with_capacity(dim * samples.len());
        for s in samples {
            if s.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: s.len(),
                });
            }
            data.extend_from_slice(s);
        }
        Ok(Kde {
            dim,
            n: samples.len(),
            data,
            bandwidth,
            order,
        })
    }

    pub fn bandwidth(&self) -> &[f64] {
        &self.bandwidth
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn order(&self) -> KernelOrder {
        self.order
    }

    fn kernel(&self, z: &[f64], x: &[f64]) -> f64 {
        let mut k = 1.0;
        for j in 0..self.dim {
            let u = (x[j] - z[j]) / self.bandwidth[j];
            if u.abs() > 8.0 {
                return 0.0;
            }
            let phi = INV_SQRT_2PI * (-0.5 * u * u).exp();
            k *= match self.order {
                KernelOrder::Second => phi,
                KernelOrder::Fourth => 0.5 * (3.0 - u * u) * phi,
            } / self.bandwidth[j];
        }
        k
    }

    pub fn density(&self, x: &[f64]) -> DensityEstimate {
        self.weighted(&[(x.to_vec(), 1.0)])
    }

    /// Estimates Σ_j w_j v(x_j), with standard error from the per-sample kernel sums.
    pub fn weighted(&self, points: &[(Vec<f64>, f64)]) -> DensityEstimate {
        let (mut s, mut s2) = (0.0, 0.0);
        for z in self.data.chunks_exact(self.dim) {
            let k: f64 = points.iter().map(|(x, w)| w * self.kernel(z, x)).sum();
            s += k;
            s2 += k * k;
        }
        let n = self.n as f64;
        let mean = s / n;
        let var = ((s2 - s * s / n) / (n - 1.0)).max(0.0);
        DensityEstimate {
            value: mean,
            stderr: (var / n).sqrt(),
        }
    }
}

/// One-shot density estimate at `point` (Scott bandwidth unless given, second-order kernel).
pub fn kde_density(
    samples: &[Vec<f64>],
    point: &[f64],
    bandwidth: Option<Vec<f64>>,
) -> Result<DensityEstimate> {
    let kde = match bandwidth {
        Some(b) => Kde::with_bandwidth(samples, b, KernelOrder::Second)?,
        None => Kde::new(samples, KernelOrder::Second)?,
    };
    Ok(kde.density(point))
}

/// max_b ‖x^(b)‖^{1/b}.
pub fn homogeneous_norm(weights: &[usize], x: &[f64]) -> f64 {
    let max = weights.iter().copied().max().unwrap_or(1);
    (1..=max)
        .map(|b| {
            let n2: f64 = x
                .iter()
                .zip(weights)
                .filter(|(_, w)| **w == b)
                .map(|(v, _)| v * v)
                .sum();
            n2.sqrt().powf(1.0 / b as f64)
        })
        .fold(0.0, f64::max)
}

#[derive(Debug, Clone, PartialEq)]
pub struct GaussianBand {
    /// Smallest and largest observed slope of log(v(0)/v(x)) against |x|².
    pub slope_low: f64,
    pub slope_high: f64,
    /// Smallest A with A^{−1}e^{−A|x|²} ≤ v(x) ≤ A e^{−|x|²/A} on every grid point.
    pub a_fit: f64,
    pub zero_points: usize,
    pub points: Vec<(f64, f64)>,
    pub support_flag: bool,
}

/// Evaluates the KDE on rays x = D_ρ(u), |u| = 1, for the given radii and fits the two-sided gaussian band.
pub fn gaussian_bounds_check(kde: &Kde, weights: &[usize], radii: &[f64]) -> Result<GaussianBand> {
    let d = weights.len();
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for k in 0..d {
        for s in [1.0, -1.0] {
            let mut u = vec![0.0; d];
            u[k] = s;
            dirs.push(u);
        }
    }
    for s in [1.0, -1.0] {
        dirs.push(vec![s; d]);
    }
    let v0 = kde.density(&vec![0.0; d]).value;
    if !(v0 > 0.0) {
        return Err(Error::InvalidArgument(
            "density estimate vanishes at the origin".into(),
        ));
    }
    let mut points = vec![(0.0, v0)];
    let mut zero_points = 0;
    for u in &dirs {
        let norm = homogeneous_norm(weights, u);
        let unit = crate::filtration::dilate_with(weights, &(1.0 / norm), u);
        for &rho in radii {
            let x = crate::filtration::dilate_with(weights, &rho, &unit);
            let v = kde.density(&x).value;
            if v <= 0.0 {
                zero_points += 1;
            } else {
                points.push((homogeneous_norm(weights, &x), v));
            }
        }
    }
    let slopes: Vec<f64> = points
        .iter()
        .filter(|(r, _)| *r > 0.0)
        .map(|(r, v)| (v0 / v).ln() / (r * r))
        .collect();
    let slope_low = slopes.iter().copied().fold(f64::INFINITY, f64::min);
    let slope_high = slopes.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let holds = |a: f64| {
        points
            .iter()
            .all(|(r, v)| (-a * r * r).exp() / a <= *v && *v <= a * (-r * r / a).exp())
    };
    let (mut lo, mut hi) = (0.0f64, 1.0f64);
    while !holds(hi.exp()) && hi < 50.0 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..60 {
        let mid = 0.5 * (lo + hi);
        if holds(mid.exp()) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let a_fit = if holds(hi.exp()) {
        hi.exp()
    } else {
        f64::INFINITY
    };
    Ok(GaussianBand {
        slope_low,
        slope_high,
        a_fit,
        zero_points,
        points,
        support_flag: zero_points > 0,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filtration::build_weight_filtration;
    use crate::measures::Law1d;
    use crate::parallel::chunk_rng;
    use crate::scalar::qvec;
    use crate::stats::{ks_critical_1pct, ks_normal, ks_two_sample, Moments};

    fn heis(drift: &[i64]) -> Arc<WeightFiltration> {
        Arc::new(build_weight_filtration(&NilpotentAlgebra::heisenberg3(), &qvec(drift)).unwrap())
    }

    fn col(s: &[Vec<f64>], k: usize) -> Vec<f64> {
        s.iter().map(|x| x[k]).collect()
    }

    fn moments(v: &[f64]) -> Moments {
        let mut m = Moments::default();
        v.iter().for_each(|x| m.push(*x));
        m
    }

    #[test]
    fn levy_reference_moments() {
        let s = levy_samples(20_000, 64, 1, None).unwrap();
        let b1 = moments(&col(&s, 0));
        let area = moments(&col(&s, 2));
        assert!((b1.variance() - 1.0).abs() < 0.05);
        assert!(area.mean().abs() < 4.0 * area.stderr());
        assert!((area.variance() - 0.25 * (1.0 - 1.0 / 64.0)).abs() < 0.02);
    }

    #[test]
    fn abelian_diffusion_is_gaussian() {
        let f = Arc::new(
            build_weight_filtration(&NilpotentAlgebra::abelian(2), &qvec(&[0, 0])).unwrap(),
        );
        let m = MeasureSpec::product(vec![
            Law1d::Gaussian { mean: 0.0, sd: 1.0 },
            Law1d::Gaussian { mean: 0.0, sd: 2.0 },
        ])
        .unwrap();
        let spec = DiffusionSpec::new(f, &m, 16).unwrap();
        let s = spec.sample(10_000, 2, None).unwrap();
        let x = col(&s, 1);
        assert!((moments(&x).variance() - 4.0).abs() < 0.25);
        assert!(ks_normal(&x) < 1.628 / 100.0);
    }

    #[test]
    fn heisenberg_diffusion_matches_levy() {
        let f = heis(&[0, 0, 0]);
        let spec = DiffusionSpec::new(f, &MeasureSpec::heisenberg_gaussian(), 64).unwrap();
        let a = spec.sample(10_000, 3, None).unwrap();
        let b = levy_samples(10_000, 64, 4, None).unwrap();
        for k in 0..3 {
            assert!(
                ks_two_sample(&col(&a, k), &col(&b, k)) < ks_critical_1pct(10_000, 10_000),
                "coordinate {k}"
            );
        }
    }

    #[test]
    fn drifted_heisenberg_limit_is_gaussian() {
        let f = heis(&[1, 0, 0]);
        let m = MeasureSpec::product(vec![
            Law1d::Gaussian { mean: 1.0, sd: 1.0 },
            Law1d::Gaussian { mean: 0.0, sd: 1.0 },
            Law1d::Constant(0.0),
        ])
        .unwrap();
        let spec = DiffusionSpec::new(f.clone(), &m, 256).unwrap();
        assert!(f.graded_algebra().is_abelian());
        let s = spec.sample(20_000, 5, None).unwrap();
        let x3 = col(&s, 2);
        assert!((moments(&x3).variance() - 1.0 / 3.0).abs() < 0.02);
        for k in 0..3 {
            assert!(ks_normal(&col(&s, k)) < 1.628 / (20_000f64).sqrt());
        }
    }

    #[test]
    fn deterministic_streams() {
        let f = heis(&[0, 0, 0]);
        let spec = DiffusionSpec::new(f, &MeasureSpec::heisenberg_gaussian(), 8).unwrap();
        let mut r1 = chunk_rng(9, 0);
        let mut r2 = chunk_rng(9, 0);
        assert_eq!(spec.simulate_nu(&mut r1), spec.simulate_nu(&mut r2));
        assert_eq!(
            spec.sample(5000, 1, Some(1)).unwrap(),
            spec.sample(5000, 1, Some(2)).unwrap()
        );
    }

    #[test]
    fn kde_gaussian_and_tail() {
        let mut rng = chunk_rng(7, 0);
        let s: Vec<Vec<f64>> = (0..100_000)
            .map(|_| vec![rng.sample(StandardNormal), rng.sample(StandardNormal)])
            .collect();
        let target = 1.0 / (2.0 * std::f64::consts::PI);
        let v = kde_density(&s, &[0.0, 0.0], None).unwrap();
        assert!((v.value / target - 1.0).abs() < 0.05);
        let k4 = Kde::new(&s, KernelOrder::Fourth).unwrap();
        assert!((k4.density(&[0.0, 0.0]).value / target - 1.0).abs() < 0.05);
        assert!(kde_density(&s, &[30.0, 30.0], None).unwrap().value < 1e-12);
        assert!(Kde::new(&s[..100], KernelOrder::Second).is_err());
        let band = gaussian_bounds_check(
            &Kde::new(&s, KernelOrder::Second).unwrap(),
            &[1, 1],
            &[0.5, 1.0, 1.5, 2.0],
        )
        .unwrap();
        assert!(band.slope_low < 0.5 && 0.5 < band.slope_high, "{band:?}");
        assert!(band.slope_high < 0.6 && band.slope_low > 0.4);
        assert!(band.a_fit.is_finite());
        assert_eq!(band.zero_points, 0);
    }

    #[test]
    fn kde_flags_missing_support() {
        let mut rng = chunk_rng(8, 0);
        let s: Vec<Vec<f64>> = (0..20_000)
            .map(|_| {
                let x: f64 = rng.sample(StandardNormal);
                let y: f64 = rng.sample(StandardNormal);
                vec![x.abs() + 0.05, y]
            })
            .collect();
        let kde = Kde::with_bandwidth(&s, vec![0.05, 0.1], KernelOrder::Second).unwrap();
        let band = gaussian_bounds_check(&kde, &[1, 1], &[1.0, 2.0]).unwrap();
        assert!(band.support_flag);
    }

    #[test]
    fn homogeneous_norm_scales() {
        let w = [1, 1, 2];
        let x = [0.3, -0.4, 0.7];
        let n = homogeneous_norm(&w, &x);
        let dx = crate::filtration::dilate_with(&w, &3.0, &x);
        assert!((homogeneous_norm(&w, &dx) - 3.0 * n).abs() < 1e-12);
    }
}
