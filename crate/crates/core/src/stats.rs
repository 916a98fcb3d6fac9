//! Small numeric helpers: running moments, Gauss–Legendre rules, KS statistics.

use statrs::distribution::{ContinuousCDF, Normal};

#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Moments {
    pub n: u64,
    pub sum: f64,
    pub sum_sq: f64,
}

impl Moments {
    pub fn push(&mut self, x: f64) {
        self.n += 1;
        self.sum += x;
        self.sum_sq += x * x;
    }

    pub fn merge(&mut self, other: &Moments) {
        self.n += other.n;
        self.sum += other.sum;
        self.sum_sq += other.sum_sq;
    }

    pub fn mean(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            self.sum / self.n as f64
        }
    }

    pub fn variance(&self) -> f64 {
        if self.n < 2 {
            return 0.0;
        }
        let n = self.n as f64;
        ((self.sum_sq - self.sum * self.sum / n) / (n - 1.0)).max(0.0)
    }

    /// sample-std / √n
    pub fn stderr(&self) -> f64 {
        if self.n == 0 {
            0.0
        } else {
            (self.variance() / self.n as f64).sqrt()
        }
    }
}

/// Nodes and weights of the n-point Gauss–Legendre rule on [a, b].
pub fn gauss_legendre(n: usize, a: f64, b: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 {
                1.0
            } else if n == 1 {
                x
            } else {
                p1
            };
            let pm = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-15 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        out.push((0.5 * (b - a) * x + 0.5 * (a + b), 0.5 * (b - a) * w));
    }
    out
}

/// Tensor Gauss–Legendre rule over a box.
pub fn gauss_legendre_box(n: usize, lo: &[f64], hi: &[f64]) -> Vec<(Vec<f64>, f64)> {
    let rules: Vec<Vec<(f64, f64)>> = lo
        .iter()
        .zip(hi)
        .map(|(a, b)| gauss_legendre(n, *a, *b))
        .collect();
    let mut out = vec![(Vec::new(), 1.0)];
    for rule in &rules {
        let mut next = Vec::with_capacity(out.len() * rule.len());
        for (p, w) in &out {
            for (x, v) in rule {
                let mut q = p.clone();
                q.push(*x);
                next.push((q, w * v));
            }
        }
        out = next;
    }
    out
}

/// Two-sample Kolmogorov–Smirnov statistic.
pub fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    x.sort_by(f64::total_cmp);
    y.sort_by(f64::total_cmp);
    let (n, m) = (x.len() as f64, y.len() as f64);
    let (mut i, mut j, mut d) = (0usize, 0usize, 0.0f64);
    while i < x.len() && j < y.len() {
        let v = x[i].min(y[j]);
        while i < x.len() && x[i] <= v {
            i += 1;
        }
        while j < y.len() && y[j] <= v {
            j += 1;
        }
        d = d.max((i as f64 / n - j as f64 / m).abs());
    }
    d
}

/// 1% critical value of the two-sample KS statistic (asymptotic).
pub fn ks_critical_1pct(n: usize, m: usize) -> f64 {
    1.628 * ((n + m) as f64 / (n as f64 * m as f64)).sqrt()
}

/// One-sample KS statistic against a normal law with the sample's own mean and variance.
pub fn ks_normal(a: &[f64]) -> f64 {
    let n = a.len() as f64;
    let mean = a.iter().sum::<f64>() / n;
    let var = a.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let dist = match Normal::new(mean, var.sqrt().max(1e-300)) {
        Ok(d) => d,
        Err(_) => return 1.0,
    };
    let mut x = a.to_vec();
    x.sort_by(f64::total_cmp);
    x.iter()
        .enumerate()
        .map(|(i, v)| {
            let c = dist.cdf(*v);
            (c - i as f64 / n).abs().max(((i + 1) as f64 / n - c).abs())
        })
        .fold(0.0, f64::max)
}

pub fn std_normal_cdf(x: f64) -> f64 {
    0.5 * statrs::function::erf::erfc(-x / std::f64::consts::SQRT_2)
}

pub fn std_normal_pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments() {
        let mut m = Moments::default();
        for x in [1.0, 2.0, 3.0, 4.0] {
            m.push(x);
        }
        assert_eq!(m.mean(), 2.5);
        assert!((m.variance() - 5.0 / 3.0).abs() < 1e-12);
        let mut a = Moments::default();
        a.push(1.0);
        a.push(2.0);
        let mut b = Moments::default();
        b.push(3.0);
        b.push(4.0);
        a.merge(&b);
        assert_eq!(a, m);
    }

    #[test]
    fn legendre_exact_for_polynomials() {
        for n in [1usize, 2, 5, 16] {
            let r = gauss_legendre(n, -1.0, 2.0);
            for deg in 0..2 * n {
                let exact =
                    (2f64.powi(deg as i32 + 1) - (-1f64).powi(deg as i32 + 1)) / (deg as f64 + 1.0);
                let q: f64 = r.iter().map(|(x, w)| w * x.powi(deg as i32)).sum();
                assert!(
                    (q - exact).abs() < 1e-11 * exact.abs().max(1.0),
                    "n={n} deg={deg}"
                );
            }
        }
        let b = gauss_legendre_box(3, &[0.0, 0.0], &[1.0, 2.0]);
        assert_eq!(b.len(), 9);
        assert!((b.iter().map(|(p, w)| w * p[0] * p[1]).sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ks() {
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[3.0, 4.0]), 1.0);
        assert!((ks_critical_1pct(100, 100) - 1.628 * 0.02f64.sqrt()).abs() < 1e-12);
        let grid: Vec<f64> = (1..1000)
            .map(|i| {
                statrs::function::erf::erfc_inv(2.0 * i as f64 / 1000.0) * -std::f64::consts::SQRT_2
            })
            .collect();
        assert!(ks_normal(&grid) < 0.01);
        assert!((std_normal_cdf(0.0) - 0.5).abs() < 1e-15);
        assert!((std_normal_cdf(1.96) - 0.975).abs() < 1e-4);
    }
}
