//! The Heisenberg nilmanifold H(ℝ)/H(ℤ): fundamental-domain reduction, Cesàro
//! equidistribution of random walk orbits and the lazy-walk occupation bound.

use rand::Rng;
use serde::Serialize;
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};
use crate::lie_core::NilpotentAlgebra;
use crate::measures::MeasureSpec;
use crate::parallel::run_chunked;
use crate::scalar::q;

/// H(ℝ)/H(ℤ) in exponential coordinates of the basis with [e1,e2] = e3.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Nilmanifold;

impl Nilmanifold {
    pub fn for_algebra(alg: &NilpotentAlgebra) -> Result<Self> {
        if alg.dim() == 3 && alg.structure_constants() == vec![(0, 1, 2, q(1))] {
            Ok(Nilmanifold)
        } else {
            Err(Error::Unsupported(format!(
                "nilmanifold reduction is implemented for heisenberg3 only, got {}",
                alg.name()
            )))
        }
    }

    /// (x1, x2, x3 + x1x2/2): entries of the unipotent matrix.
    pub fn to_box(x: &[f64]) -> [f64; 3] {
        [x[0], x[1], x[2] + 0.5 * x[0] * x[1]]
    }

    pub fn from_box(m: [f64; 3]) -> [f64; 3] {
        [m[0], m[1], m[2] - 0.5 * m[0] * m[1]]
    }

    pub fn mul(x: &[f64], y: &[f64]) -> [f64; 3] {
        [
            x[0] + y[0],
            x[1] + y[1],
            x[2] + y[2] + 0.5 * (x[0] * y[1] - x[1] * y[0]),
        ]
    }

    /// Representative of the right coset xΛ whose matrix entries lie in [0,1)³.
    pub fn fold_box(x: &[f64]) -> [f64; 3] {
        let [a, b, c] = Self::to_box(x);
        let n = -b.floor();
        let c = c + a * n;
        let b = b + n;
        let a = a - a.floor();
        let c = c - c.floor();
        [fract01(a), fract01(b), fract01(c)]
    }

    pub fn fold(x: &[f64]) -> [f64; 3] {
        Self::from_box(Self::fold_box(x))
    }

    /// Index of the cell of the cells³ partition of the unit box.
    pub fn cell(m: [f64; 3], cells: usize) -> usize {
        let k = |v: f64| ((v * cells as f64) as usize).min(cells - 1);
        (k(m[0]) * cells + k(m[1])) * cells + k(m[2])
    }
}

fn fract01(v: f64) -> f64 {
    if v >= 1.0 {
        0.0
    } else {
        v
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquidReport {
    #[serde(rename = "N")]
    pub n: usize,
    #[serde(rename = "M")]
    pub m: usize,
    pub cells: usize,
    /// max over cells of |empirical mass − cell volume|
    pub max_cell_deviation: f64,
    pub total_variation: f64,
    /// max over cells of |empirical mass / cell volume − 1|
    pub max_relative_deviation: f64,
    pub counts: Vec<u64>,
}

impl EquidReport {
    fn from_counts(n: usize, m: usize, cells: usize, counts: Vec<u64>) -> Self {
        let total = counts.iter().sum::<u64>() as f64;
        let vol = 1.0 / counts.len() as f64;
        let devs: Vec<f64> = counts
            .iter()
            .map(|c| (*c as f64 / total - vol).abs())
            .collect();
        EquidReport {
            n,
            m,
            cells,
            max_cell_deviation: devs.iter().cloned().fold(0.0, f64::max),
            total_variation: 0.5 * devs.iter().sum::<f64>(),
            max_relative_deviation: devs.iter().cloned().fold(0.0, f64::max) / vol,
            counts,
        }
    }
}

fn check_cells(cells: usize, n: usize, m: usize) -> Result<()> {
    if cells == 0 || n == 0 || m == 0 {
        return Err(Error::InvalidArgument(
            "N, M and cells must be positive".into(),
        ));
    }
    Ok(())
}

/// Occupancy of (1/N) Σ_{k<N} μ^k ∗ δ_Λ over M replicas: p_0 = Λ, p_k = X_k · p_{k−1}.
pub fn cesaro_equidistribution(
    measure: &MeasureSpec,
    n: usize,
    m: usize,
    cells: usize,
    seed: u64,
    workers: Option<usize>,
) -> Result<EquidReport> {
    check_cells(cells, n, m)?;
    if measure.dim() != 3 {
        return Err(Error::DimensionMismatch {
            expected: 3,
            got: measure.dim(),
        });
    }
    let k = cells * cells * cells;
    let chunks = run_chunked(m, seed, workers, |rng, range| {
        let mut counts = vec![0u64; k];
        let mut scratch = Vec::new();
        let mut x = [0.0; 3];
        for _ in range {
            let mut p = [0.0; 3];
            for _ in 0..n {
                counts[Nilmanifold::cell(Nilmanifold::to_box(&p), cells)] += 1;
                measure.sample_with(rng, &mut scratch, &mut x);
                p = Nilmanifold::fold(&Nilmanifold::mul(&x, &p));
            }
        }
        counts
    })?;
    let mut counts = vec![0u64; k];
    for c in chunks {
        for (a, b) in counts.iter_mut().zip(c) {
            *a += b;
        }
    }
    Ok(EquidReport::from_counts(n, m, cells, counts))
}

/// Same statistic for N·M independent Haar points; the Monte Carlo floor.
pub fn haar_control(
    n: usize,
    m: usize,
    cells: usize,
    seed: u64,
    workers: Option<usize>,
) -> Result<EquidReport> {
    check_cells(cells, n, m)?;
    let k = cells * cells * cells;
    let chunks = run_chunked(m, seed, workers, |rng, range| {
        let mut counts = vec![0u64; k];
        for _ in range {
            for _ in 0..n {
                let b = [rng.gen::<f64>(), rng.gen::<f64>(), rng.gen::<f64>()];
                counts[Nilmanifold::cell(b, cells)] += 1;
            }
        }
        counts
    })?;
    let mut counts = vec![0u64; k];
    for c in chunks {
        for (a, b) in counts.iter_mut().zip(c) {
            *a += b;
        }
    }
    Ok(EquidReport::from_counts(n, m, cells, counts))
}

/// P(Bin(n, ½) ≥ j).
fn binomial_half_sf(n: u64, j: u64) -> f64 {
    if j == 0 {
        return 1.0;
    }
    if j > n {
        return 0.0;
    }
    let ln2 = std::f64::consts::LN_2;
    let lnf = |k: u64| ln_gamma(k as f64 + 1.0);
    let logs: Vec<f64> = (j..=n)
        .map(|k| lnf(n) - lnf(k) - lnf(n - k) - n as f64 * ln2)
        .collect();
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    (top + logs.iter().map(|l| (l - top).exp()).sum::<f64>().ln())
        .exp()
        .min(1.0)
}

/// E N_p(i) for the lazy chain S_k = Σ Bernoulli(½), N_p(i) = #{0 ≤ k ≤ p : S_k = i}.
pub fn lazy_occupation(p: u64, i: u64) -> f64 {
    2.0 * binomial_half_sf(p + 1, i + 1)
}

/// Σ_i |½ E N_{2N}(i) − 1_{i ≤ N}| / N.
pub fn lazy_walk_tv_bound(n: u64) -> Result<f64> {
    if n < 2 {
        return Err(Error::InvalidArgument(format!(
            "N must be at least 2, got {n}"
        )));
    }
    let big = 2 * n + 1;
    // tail sums of the Bin(2N+1, ½) pmf, accumulated from the top in log space
    let ln2 = std::f64::consts::LN_2;
    let lnf = |k: u64| ln_gamma(k as f64 + 1.0);
    let mut sf = vec![0.0f64; (big + 2) as usize];
    for j in (0..=big).rev() {
        let lp = lnf(big) - lnf(j) - lnf(big - j) - big as f64 * ln2;
        sf[j as usize] = sf[j as usize + 1] + lp.exp();
    }
    let total: f64 = (0..=2 * n)
        .map(|i| {
            let occ = 2.0 * sf[i as usize + 1].min(1.0);
            (0.5 * occ - if i <= n { 1.0 } else { 0.0 }).abs()
        })
        .sum();
    Ok(total / n as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LazyFit {
    pub ns: Vec<u64>,
    pub values: Vec<f64>,
    /// value · √N / log N
    pub normalized: Vec<f64>,
    pub c_fit: f64,
    pub max_min_ratio: f64,
}

pub fn lazy_walk_fit(ns: &[u64]) -> Result<LazyFit> {
    let values = ns
        .iter()
        .map(|&n| lazy_walk_tv_bound(n))
        .collect::<Result<Vec<_>>>()?;
    let normalized: Vec<f64> = ns
        .iter()
        .zip(&values)
        .map(|(&n, v)| v * (n as f64).sqrt() / (n as f64).ln())
        .collect();
    let hi = normalized.iter().cloned().fold(f64::MIN, f64::max);
    let lo = normalized.iter().cloned().fold(f64::MAX, f64::min);
    Ok(LazyFit {
        ns: ns.to_vec(),
        values,
        normalized,
        c_fit: hi,
        max_min_ratio: hi / lo,
    })
}
