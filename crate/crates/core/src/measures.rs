//! Increment laws on 𝔤: sampling, exact characteristic functions of the
//! abelianization, truncation, weight moments, gap function and aperiodicity scans.

use num_complex::Complex64;
use num_traits::Zero;
use rand::distributions::{Distribution, WeightedIndex};
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde_json::{json, Value};
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::filtration::{ExtendedAlgebra, WeightFiltration};
use crate::lie_core::value_to_q;
use crate::linalg::{cholesky_psd, det_f64};
use crate::scalar::{q_to_f64, Q};

#[derive(Debug, Clone, PartialEq)]
pub enum Law1d {
    Gaussian {
        mean: f64,
        sd: f64,
    },
    Uniform {
        lo: f64,
        hi: f64,
    },
    /// Value `a` with probability `p`, `b` otherwise.
    TwoPoint {
        a: f64,
        b: f64,
        p: f64,
    },
    Constant(f64),
}

impl Law1d {
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            Law1d::Gaussian { mean, sd } => {
                let z: f64 = rng.sample(StandardNormal);
                mean + sd * z
            }
            Law1d::Uniform { lo, hi } => lo + (hi - lo) * rng.gen::<f64>(),
            Law1d::TwoPoint { a, b, p } => {
                if rng.gen::<f64>() < p {
                    a
                } else {
                    b
                }
            }
            Law1d::Constant(c) => c,
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            Law1d::Gaussian { mean, .. } => mean,
            Law1d::Uniform { lo, hi } => 0.5 * (lo + hi),
            Law1d::TwoPoint { a, b, p } => p * a + (1.0 - p) * b,
            Law1d::Constant(c) => c,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            Law1d::Gaussian { sd, .. } => sd * sd,
            Law1d::Uniform { lo, hi } => (hi - lo).powi(2) / 12.0,
            Law1d::TwoPoint { a, b, p } => p * (1.0 - p) * (a - b).powi(2),
            Law1d::Constant(_) => 0.0,
        }
    }

    /// E e^{−2πiξX}.
    pub fn char_fn(&self, xi: f64) -> Complex64 {
        let e = |x: f64| Complex64::from_polar(1.0, -2.0 * PI * xi * x);
        match *self {
            Law1d::Gaussian { mean, sd } => e(mean) * (-2.0 * PI * PI * sd * sd * xi * xi).exp(),
            Law1d::Uniform { lo, hi } => {
                let u = PI * xi * (hi - lo);
                let sinc = if u.abs() < 1e-12 { 1.0 } else { u.sin() / u };
                e(0.5 * (lo + hi)) * sinc
            }
            Law1d::TwoPoint { a, b, p } => e(a) * p + e(b) * (1.0 - p),
            Law1d::Constant(c) => e(c),
        }
    }

    fn bounded(&self) -> bool {
        !matches!(self, Law1d::Gaussian { sd, .. } if *sd > 0.0)
    }

    fn from_json(v: &Value) -> Result<Self> {
        let num = |k: &str| -> Result<f64> {
            v.get(k)
                .and_then(Value::as_f64)
                .ok_or_else(|| Error::Parse(format!("law is missing numeric field '{k}'")))
        };
        let law = v
            .get("law")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::Parse("law entry needs a 'law' name".into()))?;
        let out = match law {
            "gaussian" | "normal" => Law1d::Gaussian {
                mean: num("mean").unwrap_or(0.0),
                sd: num("sd").unwrap_or(1.0),
            },
            "uniform" => Law1d::Uniform {
                lo: num("lo")?,
                hi: num("hi")?,
            },
            "two_point" => Law1d::TwoPoint {
                a: num("a")?,
                b: num("b")?,
                p: num("p").unwrap_or(0.5),
            },
            "constant" => Law1d::Constant(num("value")?),
            other => return Err(Error::Parse(format!("unknown 1D law '{other}'"))),
        };
        out.validate()?;
        Ok(out)
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            Law1d::Gaussian { mean, sd } => mean.is_finite() && sd.is_finite() && sd >= 0.0,
            Law1d::Uniform { lo, hi } => lo.is_finite() && hi.is_finite() && lo <= hi,
            Law1d::TwoPoint { a, b, p } => {
                a.is_finite() && b.is_finite() && (0.0..=1.0).contains(&p)
            }
            Law1d::Constant(c) => c.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid 1D law {self:?}")))
        }
    }

    fn to_json(&self) -> Value {
        match *self {
            Law1d::Gaussian { mean, sd } => json!({"law": "gaussian", "mean": mean, "sd": sd}),
            Law1d::Uniform { lo, hi } => json!({"law": "uniform", "lo": lo, "hi": hi}),
            Law1d::TwoPoint { a, b, p } => json!({"law": "two_point", "a": a, "b": b, "p": p}),
            Law1d::Constant(c) => json!({"law": "constant", "value": c}),
        }
    }
}

#[derive(Debug, Clone)]
pub struct Atoms {
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
    exact: Option<(Vec<Vec<Q>>, Vec<Q>)>,
    index: WeightedIndex<f64>,
}

impl Atoms {
    pub fn points(&self) -> &[Vec<f64>] {
        &self.points
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn exact(&self) -> Option<(&[Vec<Q>], &[Q])> {
        self.exact
            .as_ref()
            .map(|(p, w)| (p.as_slice(), w.as_slice()))
    }
}

#[derive(Debug, Clone)]
pub enum MeasureKind {
    Atoms(Atoms),
    Product(Vec<Law1d>),
    Affine {
        matrix: Vec<Vec<f64>>,
        offset: Vec<f64>,
        base: Box<MeasureKind>,
    },
}

impl MeasureKind {
    fn dim(&self) -> usize {
        match self {
            MeasureKind::Atoms(a) => a.points[0].len(),
            MeasureKind::Product(l) => l.len(),
            MeasureKind::Affine { offset, .. } => offset.len(),
        }
    }

    fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, scratch: &mut Vec<f64>, out: &mut [f64]) {
        match self {
            MeasureKind::Atoms(a) => out.copy_from_slice(&a.points[a.index.sample(rng)]),
            MeasureKind::Product(laws) => {
                for (o, l) in out.iter_mut().zip(laws) {
                    *o = l.sample(rng);
                }
            }
            MeasureKind::Affine {
                matrix,
                offset,
                base,
            } => {
                let mut inner = std::mem::take(scratch);
                inner.resize(base.dim(), 0.0);
                let mut nested = Vec::new();
                base.sample_into(rng, &mut nested, &mut inner);
                for (i, o) in out.iter_mut().enumerate() {
                    *o = offset[i]
                        + matrix[i]
                            .iter()
                            .zip(&inner)
                            .map(|(a, b)| a * b)
                            .sum::<f64>();
                }
                *scratch = inner;
            }
        }
    }

    fn mean(&self) -> Vec<f64> {
        match self {
            MeasureKind::Atoms(a) => {
                let d = a.points[0].len();
                let mut m = vec![0.0; d];
                for (p, w) in a.points.iter().zip(&a.weights) {
                    for k in 0..d {
                        m[k] += w * p[k];
                    }
                }
                m
            }
            MeasureKind::Product(l) => l.iter().map(Law1d::mean).collect(),
            MeasureKind::Affine {
                matrix,
                offset,
                base,
            } => {
                let bm = base.mean();
                offset
                    .iter()
                    .zip(matrix)
                    .map(|(o, r)| o + r.iter().zip(&bm).map(|(a, b)| a * b).sum::<f64>())
                    .collect()
            }
        }
    }

    fn covariance(&self) -> Vec<Vec<f64>> {
        match self {
            MeasureKind::Atoms(a) => {
                let m = self.mean();
                let d = m.len();
                let mut c = vec![vec![0.0; d]; d];
                for (p, w) in a.points.iter().zip(&a.weights) {
                    for i in 0..d {
                        for j in 0..d {
                            c[i][j] += w * (p[i] - m[i]) * (p[j] - m[j]);
                        }
                    }
                }
                c
            }
            MeasureKind::Product(l) => {
                let d = l.len();
                let mut c = vec![vec![0.0; d]; d];
                for (i, law) in l.iter().enumerate() {
                    c[i][i] = law.variance();
                }
                c
            }
            MeasureKind::Affine { matrix, base, .. } => {
                let bc = base.covariance();
                let d = matrix.len();
                let k = bc.len();
                let mut c = vec![vec![0.0; d]; d];
                for i in 0..d {
                    for j in 0..d {
                        let mut s = 0.0;
                        for a in 0..k {
                            for b in 0..k {
                                s += matrix[i][a] * bc[a][b] * matrix[j][b];
                            }
                        }
                        c[i][j] = s;
                    }
                }
                c
            }
        }
    }

    fn char_linear(&self, eta: &[f64]) -> Complex64 {
        match self {
            MeasureKind::Atoms(a) => a
                .points
                .iter()
                .zip(&a.weights)
                .map(|(p, w)| {
                    Complex64::from_polar(
                        *w,
                        -2.0 * PI * p.iter().zip(eta).map(|(x, e)| x * e).sum::<f64>(),
                    )
                })
                .sum(),
            MeasureKind::Product(l) => l.iter().zip(eta).map(|(law, e)| law.char_fn(*e)).product(),
            MeasureKind::Affine {
                matrix,
                offset,
                base,
            } => {
                let k = base.dim();
                let mut inner = vec![0.0; k];
                for (row, e) in matrix.iter().zip(eta) {
                    for j in 0..k {
                        inner[j] += row[j] * e;
                    }
                }
                let shift: f64 = offset.iter().zip(eta).map(|(a, b)| a * b).sum();
                Complex64::from_polar(1.0, -2.0 * PI * shift) * base.char_linear(&inner)
            }
        }
    }

    fn bounded(&self) -> bool {
        match self {
            MeasureKind::Atoms(_) => true,
            MeasureKind::Product(l) => l.iter().all(Law1d::bounded),
            MeasureKind::Affine { base, .. } => base.bounded(),
        }
    }

    fn to_json(&self) -> Value {
        match self {
            MeasureKind::Atoms(a) => {
                json!({"kind": "atoms", "points": a.points, "weights": a.weights})
            }
            MeasureKind::Product(l) => {
                json!({"kind": "product", "laws": l.iter().map(Law1d::to_json).collect::<Vec<_>>()})
            }
            MeasureKind::Affine {
                matrix,
                offset,
                base,
            } => {
                json!({"kind": "affine", "matrix": matrix, "offset": offset, "base": base.to_json()})
            }
        }
    }
}

/// A sampleable increment law μ on 𝔤 in the algebra's own coordinates.
#[derive(Debug, Clone)]
pub struct MeasureSpec {
    dim: usize,
    kind: MeasureKind,
    aperiodic: bool,
}

impl MeasureSpec {
    pub fn atoms(points: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        Self::from_kind(MeasureKind::Atoms(build_atoms(points, weights, None)?))
    }

    pub fn atoms_exact(points: Vec<Vec<Q>>, weights: Vec<Q>) -> Result<Self> {
        let pf = points
            .iter()
            .map(|p| p.iter().map(q_to_f64).collect())
            .collect();
        let wf = weights.iter().map(q_to_f64).collect();
        Self::from_kind(MeasureKind::Atoms(build_atoms(
            pf,
            wf,
            Some((points, weights)),
        )?))
    }

    /// Uniform law on the given points.
    pub fn uniform_atoms(points: Vec<Vec<f64>>) -> Result<Self> {
        let w = vec![1.0 / points.len().max(1) as f64; points.len()];
        Self::atoms(points, w)
    }

    pub fn product(laws: Vec<Law1d>) -> Result<Self> {
        if laws.is_empty() {
            return Err(Error::Empty("product law"));
        }
        for l in &laws {
            l.validate()?;
        }
        Self::from_kind(MeasureKind::Product(laws))
    }

    pub fn affine(base: MeasureSpec, matrix: Vec<Vec<f64>>, offset: Vec<f64>) -> Result<Self> {
        if matrix.len() != offset.len() || matrix.iter().any(|r| r.len() != base.dim) {
            return Err(Error::DimensionMismatch {
                expected: base.dim,
                got: matrix.first().map_or(0, Vec::len),
            });
        }
        let aperiodic = base.aperiodic;
        let mut m = Self::from_kind(MeasureKind::Affine {
            matrix,
            offset,
            base: Box::new(base.kind),
        })?;
        m.aperiodic = aperiodic;
        Ok(m)
    }

    /// Gaussian law with covariance `cov` (positive semidefinite) and mean `mean`.
    pub fn gaussian_layers(cov: &[Vec<f64>], mean: Option<Vec<f64>>) -> Result<Self> {
        let d = cov.len();
        if cov.iter().any(|r| r.len() != d) {
            return Err(Error::InvalidArgument("covariance must be square".into()));
        }
        let l = cholesky_psd(cov)?;
        let mean = mean.unwrap_or_else(|| vec![0.0; d]);
        if mean.len() != d {
            return Err(Error::DimensionMismatch {
                expected: d,
                got: mean.len(),
            });
        }
        if (0..d).all(|i| (0..d).all(|j| i == j || cov[i][j] == 0.0)) {
            let laws = (0..d)
                .map(|i| {
                    if l[i][i] > 0.0 {
                        Law1d::Gaussian {
                            mean: mean[i],
                            sd: l[i][i],
                        }
                    } else {
                        Law1d::Constant(mean[i])
                    }
                })
                .collect();
            return Self::product(laws);
        }
        let base = Self::product(vec![Law1d::Gaussian { mean: 0.0, sd: 1.0 }; d])?;
        Self::affine(base, l, mean)
    }

    /// Standard gaussian on the first two coordinates of the Heisenberg algebra, 0 on the third.
    pub fn heisenberg_gaussian() -> Self {
        Self::product(vec![
            Law1d::Gaussian { mean: 0.0, sd: 1.0 },
            Law1d::Gaussian { mean: 0.0, sd: 1.0 },
            Law1d::Constant(0.0),
        ])
        .expect("valid law")
    }

    pub fn dirac(point: Vec<f64>) -> Self {
        Self::atoms(vec![point], vec![1.0]).expect("valid law")
    }

    fn from_kind(kind: MeasureKind) -> Result<Self> {
        let aperiodic = !matches!(kind, MeasureKind::Atoms(_));
        Ok(MeasureSpec {
            dim: kind.dim(),
            kind,
            aperiodic,
        })
    }

    pub fn with_aperiodic(mut self, flag: bool) -> Self {
        self.aperiodic = flag;
        self
    }

    pub fn from_json(v: &Value) -> Result<Self> {
        let kind = v
            .get("kind")
            .and_then(Value::as_str)
            .ok_or_else(|| Error::Parse("measure needs a 'kind'".into()))?;
        let mut m = match kind {
            "atoms" => {
                let pts = v
                    .get("points")
                    .and_then(Value::as_array)
                    .ok_or_else(|| Error::Parse("atoms need 'points'".into()))?;
                let exact_pts: Result<Vec<Vec<Q>>> = pts
                    .iter()
                    .map(|p| {
                        p.as_array()
                            .ok_or_else(|| Error::Parse("point must be an array".into()))?
                            .iter()
                            .map(value_to_q)
                            .collect()
                    })
                    .collect();
                let exact_pts = exact_pts?;
                let exact_w: Vec<Q> = match v.get("weights") {
                    Some(Value::Array(ws)) => ws.iter().map(value_to_q).collect::<Result<_>>()?,
                    Some(_) => return Err(Error::Parse("'weights' must be an array".into())),
                    None => vec![Q::new(1.into(), exact_pts.len().into()); exact_pts.len()],
                };
                Self::atoms_exact(exact_pts, exact_w)?
            }
            "gaussian_layers" | "gaussian" => {
                let cov = parse_matrix(
                    v.get("cov")
                        .ok_or_else(|| Error::Parse("gaussian_layers needs 'cov'".into()))?,
                )?;
                let mean = v.get("mean").map(parse_vector).transpose()?;
                Self::gaussian_layers(&cov, mean)?
            }
            "product" => {
                let laws = v
                    .get("laws")
                    .and_then(Value::as_array)
                    .ok_or_else(|| Error::Parse("product needs 'laws'".into()))?;
                Self::product(laws.iter().map(Law1d::from_json).collect::<Result<_>>()?)?
            }
            "affine" => {
                let base = Self::from_json(
                    v.get("base")
                        .ok_or_else(|| Error::Parse("affine needs 'base'".into()))?,
                )?;
                let matrix = parse_matrix(
                    v.get("matrix")
                        .ok_or_else(|| Error::Parse("affine needs 'matrix'".into()))?,
                )?;
                let offset = match v.get("offset") {
                    Some(o) => parse_vector(o)?,
                    None => vec![0.0; matrix.len()],
                };
                Self::affine(base, matrix, offset)?
            }
            other => return Err(Error::Parse(format!("unknown measure kind '{other}'"))),
        };
        if let Some(a) = v.get("aperiodic").and_then(Value::as_bool) {
            m.aperiodic = a;
        }
        Ok(m)
    }

    pub fn to_json(&self) -> Value {
        let mut v = self.kind.to_json();
        v["aperiodic"] = json!(self.aperiodic);
        v
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &MeasureKind {
        &self.kind
    }

    /// User assertion that |μ̂_ab(ξ)| < 1 for ξ ≠ 0.
    pub fn aperiodic(&self) -> bool {
        self.aperiodic
    }

    pub fn is_bounded(&self) -> bool {
        self.kind.bounded()
    }

    pub fn as_atoms(&self) -> Option<&Atoms> {
        match &self.kind {
            MeasureKind::Atoms(a) => Some(a),
            _ => None,
        }
    }

    pub fn sample_into<R: Rng + ?Sized>(&self, rng: &mut R, out: &mut [f64]) {
        let mut scratch = Vec::new();
        self.kind.sample_into(rng, &mut scratch, out);
    }

    /// Like [`sample_into`](Self::sample_into) but reuses `scratch` across calls.
    pub fn sample_with<R: Rng + ?Sized>(
        &self,
        rng: &mut R,
        scratch: &mut Vec<f64>,
        out: &mut [f64],
    ) {
        self.kind.sample_into(rng, scratch, out);
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.sample_into(rng, &mut out);
        out
    }

    pub fn mean(&self) -> Vec<f64> {
        self.kind.mean()
    }

    pub fn covariance(&self) -> Vec<Vec<f64>> {
        self.kind.covariance()
    }

    /// E e^{−2πi η(x)} for a linear form η in the algebra's coordinates.
    pub fn char_linear(&self, eta: &[f64]) -> Complex64 {
        self.kind.char_linear(eta)
    }

    pub fn check_compatible(&self, f: &WeightFiltration) -> Result<()> {
        if self.dim != f.dim() {
            return Err(Error::DimensionMismatch {
                expected: f.dim(),
                got: self.dim,
            });
        }
        Ok(())
    }

    /// Mean of μ_ab in 𝔪^(1) coordinates (the drift X̄).
    pub fn ab_mean(&self, f: &WeightFiltration) -> Vec<f64> {
        let t1 = ab_chart(f);
        t1.iter()
            .map(|r| r.iter().zip(self.mean()).map(|(a, b)| a * b).sum())
            .collect()
    }

    pub fn ab_covariance(&self, f: &WeightFiltration) -> Vec<Vec<f64>> {
        let t1 = ab_chart(f);
        let c = self.covariance();
        let r = t1.len();
        let n = self.dim;
        let mut out = vec![vec![0.0; r]; r];
        for i in 0..r {
            for j in 0..r {
                let mut s = 0.0;
                for a in 0..n {
                    for b in 0..n {
                        s += t1[i][a] * c[a][b] * t1[j][b];
                    }
                }
                out[i][j] = s;
            }
        }
        out
    }

    /// μ_ab must not be supported on an affine hyperplane.
    pub fn validate(&self, f: &WeightFiltration) -> Result<()> {
        self.check_compatible(f)?;
        let c = self.ab_covariance(f);
        let scale = c.iter().enumerate().map(|(i, r)| r[i]).fold(0.0, f64::max);
        if scale <= 0.0 || det_f64(&c).abs() <= 1e-12 * scale.powi(c.len() as i32) {
            return Err(Error::InvalidArgument(
                "covariance of the abelianized law is singular".into(),
            ));
        }
        Ok(())
    }

    /// μ̂_ab(ξ) for ξ in the dual of 𝔪^(1) coordinates.
    pub fn char_ab(&self, f: &WeightFiltration, xi: &[f64]) -> Complex64 {
        let t1 = ab_chart(f);
        self.char_linear(&pull_back(&t1, xi, self.dim))
    }

    pub fn sample_adapted<R: Rng + ?Sized>(&self, f: &WeightFiltration, rng: &mut R) -> Vec<f64> {
        f.to_adapted(&self.sample(rng))
    }

    /// Draw from μ̃ on 𝔤̃ in extended adapted coordinates.
    pub fn bias_extended_sample<R: Rng + ?Sized>(
        &self,
        ext: &ExtendedAlgebra,
        rng: &mut R,
    ) -> Vec<f64> {
        ext.lift(&self.sample_adapted(ext.base(), rng))
    }

    /// Per-layer E‖x^(b)‖^{order/b} in adapted coordinates; exact for atoms, Monte Carlo otherwise.
    pub fn weight_moment(
        &self,
        f: &WeightFiltration,
        order: f64,
        samples: usize,
        seed: u64,
    ) -> Vec<MomentEstimate> {
        let layers = f.max_weight();
        let eval = |x: &[f64], b: usize| -> f64 {
            let r = f.layer(b);
            let n2: f64 = x[r].iter().map(|v| v * v).sum();
            if n2 == 0.0 {
                0.0
            } else {
                n2.sqrt().powf(order / b as f64)
            }
        };
        if let Some(a) = self.as_atoms() {
            let pts: Vec<Vec<f64>> = a.points.iter().map(|p| f.to_adapted(p)).collect();
            return (1..=layers)
                .map(|b| {
                    let m = pts
                        .iter()
                        .zip(&a.weights)
                        .map(|(p, w)| w * eval(p, b))
                        .sum();
                    MomentEstimate {
                        layer: b,
                        value: m,
                        stderr: 0.0,
                        exact: true,
                    }
                })
                .collect();
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut acc = vec![(0.0, 0.0); layers];
        for _ in 0..samples {
            let x = self.sample_adapted(f, &mut rng);
            for b in 1..=layers {
                let v = eval(&x, b);
                acc[b - 1].0 += v;
                acc[b - 1].1 += v * v;
            }
        }
        let n = samples.max(1) as f64;
        acc.iter()
            .enumerate()
            .map(|(i, (s, s2))| {
                let m = s / n;
                let var = (s2 / n - m * m).max(0.0);
                MomentEstimate {
                    layer: i + 1,
                    value: m,
                    stderr: (var / n).sqrt(),
                    exact: false,
                }
            })
            .collect()
    }

    /// Compare declared mean / abelianized covariance against `samples` draws (4 standard errors).
    pub fn self_check(&self, f: &WeightFiltration, samples: usize, seed: u64) -> MomentCheck {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = self.dim;
        let t1 = ab_chart(f);
        let r = t1.len();
        let mean = self.mean();
        let ab_mean = self.ab_mean(f);
        let ab_cov = self.ab_covariance(f);
        let mut s = vec![0.0; n];
        let mut s2 = vec![0.0; n];
        let mut c = vec![vec![0.0; r]; r];
        let mut c2 = vec![vec![0.0; r]; r];
        for _ in 0..samples {
            let x = self.sample(&mut rng);
            for k in 0..n {
                s[k] += x[k];
                s2[k] += x[k] * x[k];
            }
            let y: Vec<f64> = t1
                .iter()
                .map(|row| row.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>())
                .collect();
            for i in 0..r {
                for j in 0..r {
                    let v = (y[i] - ab_mean[i]) * (y[j] - ab_mean[j]);
                    c[i][j] += v;
                    c2[i][j] += v * v;
                }
            }
        }
        let m = samples.max(1) as f64;
        let mut worst: f64 = 0.0;
        for k in 0..n {
            let em = s[k] / m;
            let se = ((s2[k] / m - em * em).max(0.0) / m).sqrt();
            worst = worst.max(z_score(em - mean[k], se));
        }
        for i in 0..r {
            for j in 0..r {
                let em = c[i][j] / m;
                let se = ((c2[i][j] / m - em * em).max(0.0) / m).sqrt();
                worst = worst.max(z_score(em - ab_cov[i][j], se));
            }
        }
        MomentCheck {
            samples,
            max_z: worst,
            pass: worst <= 4.0,
        }
    }

    /// gap_c(R) = c·inf{1 − |μ̂_ab(ξ)| : c ≤ ‖ξ‖ ≤ c^{−1}(1+R)}.
    pub fn gap_function(&self, f: &WeightFiltration, c: f64, r: f64) -> Result<GapResult> {
        let t1 = ab_chart(f);
        gap_inf(
            |xi: &[f64]| self.char_linear(&pull_back(&t1, xi, self.dim)).norm(),
            t1.len(),
            c,
            r,
        )
    }

    /// Flags grid frequencies of the cube [−radius, radius]^r (step radius/grid) with |μ̂_ab| > 1 − 1e−9.
    pub fn aperiodicity_scan(&self, f: &WeightFiltration, radius: f64, grid: usize) -> ScanReport {
        let t1 = ab_chart(f);
        let r = t1.len();
        let g = grid.max(1) as i64;
        let step = radius / g as f64;
        let total = ((2 * g + 1) as usize).pow(r as u32);
        let mut flagged = Vec::new();
        let mut n_flagged = 0;
        let mut max_mod: f64 = 0.0;
        let mut idx = vec![-g; r];
        for _ in 0..total {
            if idx.iter().any(|&i| i != 0) {
                let xi: Vec<f64> = idx.iter().map(|&i| i as f64 * step).collect();
                let m = self.char_linear(&pull_back(&t1, &xi, self.dim)).norm();
                max_mod = max_mod.max(m);
                if m > 1.0 - 1e-9 {
                    n_flagged += 1;
                    if flagged.len() < 100 {
                        flagged.push(xi);
                    }
                }
            }
            for k in 0..r {
                idx[k] += 1;
                if idx[k] <= g {
                    break;
                }
                idx[k] = -g;
            }
        }
        ScanReport {
            evaluated: total - 1,
            flagged,
            n_flagged,
            max_modulus: max_mod,
            step,
        }
    }

    /// T_N applied to μ̃ with the recentering constant c_N.
    pub fn truncate(
        &self,
        ext: &ExtendedAlgebra,
        n: u64,
        mc_samples: usize,
        seed: u64,
    ) -> Result<TruncatedMeasure> {
        if n == 0 {
            return Err(Error::InvalidArgument(
                "truncation level must be at least 1".into(),
            ));
        }
        let f = ext.base();
        let layer1: Vec<usize> = (0..ext.dim()).filter(|&k| ext.weights()[k] == 1).collect();
        let mut exact_c = None;
        let c_n: Vec<f64> = if let Some((pts, w)) = self.as_atoms().and_then(Atoms::exact) {
            let lifted: Vec<Vec<Q>> = pts
                .iter()
                .map(|p| ext.lift(&f.to_adapted(p)))
                .map(|x| layer1.iter().map(|&k| x[k].clone()).collect())
                .collect();
            let c = truncation_constant_exact(&lifted, w, n);
            let cf = c.iter().map(q_to_f64).collect();
            exact_c = Some(c);
            cf
        } else if let Some(a) = self.as_atoms() {
            let lifted: Vec<Vec<f64>> = a
                .points
                .iter()
                .map(|p| ext.lift(&f.to_adapted(p)))
                .map(|x| layer1.iter().map(|&k| x[k]).collect())
                .collect();
            truncation_constant_f64(
                lifted
                    .iter()
                    .zip(&a.weights)
                    .map(|(p, w)| (p.as_slice(), *w)),
                layer1.len(),
                n,
            )
        } else {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let draws: Vec<Vec<f64>> = (0..mc_samples)
                .map(|_| {
                    let x = self.bias_extended_sample(ext, &mut rng);
                    layer1.iter().map(|&k| x[k]).collect()
                })
                .collect();
            let w = 1.0 / mc_samples.max(1) as f64;
            truncation_constant_f64(draws.iter().map(|p| (p.as_slice(), w)), layer1.len(), n)
        };
        Ok(TruncatedMeasure::new(ext.weights(), n, c_n, exact_c))
    }
}

fn z_score(diff: f64, se: f64) -> f64 {
    if se > 0.0 {
        diff.abs() / se
    } else if diff.abs() < 1e-12 {
        0.0
    } else {
        f64::INFINITY
    }
}

fn build_atoms(
    points: Vec<Vec<f64>>,
    weights: Vec<f64>,
    exact: Option<(Vec<Vec<Q>>, Vec<Q>)>,
) -> Result<Atoms> {
    if points.is_empty() {
        return Err(Error::Empty("atom list"));
    }
    if points.len() != weights.len() {
        return Err(Error::DimensionMismatch {
            expected: points.len(),
            got: weights.len(),
        });
    }
    let d = points[0].len();
    if d == 0 || points.iter().any(|p| p.len() != d) {
        return Err(Error::InvalidArgument(
            "atoms must share a positive dimension".into(),
        ));
    }
    if weights.iter().any(|w| !(*w >= 0.0)) {
        return Err(Error::InvalidArgument(
            "atom weights must be nonnegative".into(),
        ));
    }
    let total: f64 = weights.iter().sum();
    let sums_to_one = match &exact {
        Some((_, w)) => w.iter().fold(Q::zero(), |a, b| a + b) == Q::from_integer(1.into()),
        None => (total - 1.0).abs() < 1e-9,
    };
    if !sums_to_one {
        return Err(Error::InvalidArgument(format!(
            "atom weights sum to {total}, not 1"
        )));
    }
    let index = WeightedIndex::new(&weights).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(Atoms {
        points,
        weights,
        exact,
        index,
    })
}

fn parse_vector(v: &Value) -> Result<Vec<f64>> {
    v.as_array()
        .ok_or_else(|| Error::Parse("expected an array of numbers".into()))?
        .iter()
        .map(|x| match x {
            Value::String(_) => value_to_q(x).map(|q| q_to_f64(&q)),
            _ => x
                .as_f64()
                .ok_or_else(|| Error::Parse(format!("expected a number, got {x}"))),
        })
        .collect()
}

fn parse_matrix(v: &Value) -> Result<Vec<Vec<f64>>> {
    v.as_array()
        .ok_or_else(|| Error::Parse("expected a matrix".into()))?
        .iter()
        .map(parse_vector)
        .collect()
}

/// Rows give the 𝔪^(1) (abelianization) coordinates of a vector in the algebra's basis.
pub fn ab_chart(f: &WeightFiltration) -> Vec<Vec<f64>> {
    let t = f.to_adapted_matrix_f64();
    f.layer(1).map(|k| t[k].clone()).collect()
}

fn pull_back(t1: &[Vec<f64>], xi: &[f64], n: usize) -> Vec<f64> {
    let mut eta = vec![0.0; n];
    for (row, x) in t1.iter().zip(xi) {
        for (e, a) in eta.iter_mut().zip(row) {
            *e += a * x;
        }
    }
    eta
}

/// c_N = −P(‖x‖² > N)^{−1} E[x 1_{‖x‖² ≤ N}] for an exact atomic first-layer law; 0 when nothing exceeds.
pub fn truncation_constant_exact(points: &[Vec<Q>], weights: &[Q], n: u64) -> Vec<Q> {
    let d = points.first().map_or(0, Vec::len);
    let bound = Q::from_integer(n.into());
    let mut tail = Q::zero();
    let mut kept = vec![Q::zero(); d];
    for (p, w) in points.iter().zip(weights) {
        let n2 = p.iter().fold(Q::zero(), |a, x| a + x * x);
        if n2 > bound {
            tail += w;
        } else {
            for (k, x) in kept.iter_mut().zip(p) {
                *k += w * x;
            }
        }
    }
    if tail.is_zero() {
        return vec![Q::zero(); d];
    }
    kept.iter().map(|k| -(k / &tail)).collect()
}

fn truncation_constant_f64<'a>(
    draws: impl Iterator<Item = (&'a [f64], f64)>,
    d: usize,
    n: u64,
) -> Vec<f64> {
    let mut tail = 0.0;
    let mut kept = vec![0.0; d];
    for (p, w) in draws {
        let n2: f64 = p.iter().map(|x| x * x).sum();
        if n2 > n as f64 {
            tail += w;
        } else {
            for (k, x) in kept.iter_mut().zip(p) {
                *k += w * x;
            }
        }
    }
    if tail == 0.0 {
        return vec![0.0; d];
    }
    kept.iter().map(|k| -k / tail).collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentEstimate {
    pub layer: usize,
    pub value: f64,
    pub stderr: f64,
    pub exact: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MomentCheck {
    pub samples: usize,
    pub max_z: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScanReport {
    pub evaluated: usize,
    pub flagged: Vec<Vec<f64>>,
    pub n_flagged: usize,
    pub max_modulus: f64,
    pub step: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapResult {
    pub value: f64,
    pub argmin: Vec<f64>,
    pub shells: usize,
    pub directions: usize,
}

/// Truncation T_N in extended adapted coordinates.
#[derive(Debug, Clone)]
pub struct TruncatedMeasure {
    n: u64,
    layers: Vec<Vec<usize>>,
    c_n: Vec<f64>,
    exact_c: Option<Vec<Q>>,
}

impl TruncatedMeasure {
    pub fn new(weights: &[usize], n: u64, c_n: Vec<f64>, exact_c: Option<Vec<Q>>) -> Self {
        let max = weights.iter().copied().max().unwrap_or(1);
        let layers = (1..=max)
            .map(|b| (0..weights.len()).filter(|&k| weights[k] == b).collect())
            .collect();
        TruncatedMeasure {
            n,
            layers,
            c_n,
            exact_c,
        }
    }

    pub fn level(&self) -> u64 {
        self.n
    }

    pub fn c_n(&self) -> &[f64] {
        &self.c_n
    }

    pub fn c_n_exact(&self) -> Option<&[Q]> {
        self.exact_c.as_deref()
    }

    /// Applies the per-layer rule in place; returns whether anything changed.
    pub fn apply(&self, x: &mut [f64]) -> bool {
        let mut altered = false;
        for (b, idx) in self.layers.iter().enumerate() {
            let n2: f64 = idx.iter().map(|&k| x[k] * x[k]).sum();
            if n2 <= (self.n as f64).powi(b as i32 + 1) {
                continue;
            }
            altered = true;
            for (j, &k) in idx.iter().enumerate() {
                x[k] = if b == 0 { self.c_n[j] } else { 0.0 };
            }
        }
        altered
    }

    /// Exact version of [`apply`](Self::apply) for rational points.
    pub fn apply_exact(&self, x: &mut [Q]) -> bool {
        let c = self.exact_c.clone().unwrap_or_else(|| {
            self.c_n
                .iter()
                .map(|v| crate::scalar::f64_to_q(*v).unwrap_or_else(|_| Q::zero()))
                .collect()
        });
        let mut altered = false;
        for (b, idx) in self.layers.iter().enumerate() {
            let n2 = idx.iter().fold(Q::zero(), |a, &k| a + &x[k] * &x[k]);
            if n2 <= Q::from_integer(num_bigint::BigInt::from(self.n).pow(b as u32 + 1)) {
                continue;
            }
            altered = true;
            for (j, &k) in idx.iter().enumerate() {
                x[k] = if b == 0 { c[j].clone() } else { Q::zero() };
            }
        }
        altered
    }
}

/// Golden-section maximization of a function on [a, b].
fn golden_max(mut a: f64, mut b: f64, rounds: usize, h: &dyn Fn(f64) -> f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = h(x1);
    let mut f2 = h(x2);
    for _ in 0..rounds {
        if f1 >= f2 {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = h(x1);
        } else {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = h(x2);
        }
    }
    if f1 >= f2 {
        (x1, f1)
    } else {
        (x2, f2)
    }
}

fn directions(r: usize) -> Vec<Vec<f64>> {
    match r {
        1 => vec![vec![1.0], vec![-1.0]],
        2 => (0..64)
            .map(|k| {
                let t = 2.0 * PI * k as f64 / 64.0;
                vec![t.cos(), t.sin()]
            })
            .collect(),
        3 => {
            let n = 1024;
            let ga = PI * (3.0 - 5f64.sqrt());
            (0..n)
                .map(|k| {
                    let z = 1.0 - 2.0 * (k as f64 + 0.5) / n as f64;
                    let rho = (1.0 - z * z).sqrt();
                    let t = ga * k as f64;
                    vec![rho * t.cos(), rho * t.sin(), z]
                })
                .collect()
        }
        _ => {
            let mut rng = ChaCha8Rng::seed_from_u64(0x9a9);
            (0..4096)
                .map(|_| {
                    let v: Vec<f64> = (0..r).map(|_| rng.sample(StandardNormal)).collect();
                    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                    v.iter().map(|x| x / n).collect()
                })
                .collect()
        }
    }
}

const SHELL_RATIO: f64 = 1.05;
const REFINE_ROUNDS: usize = 3 * 8;

/// Infimum of 1 − modulus(ξ) over the annulus c ≤ ‖ξ‖ ≤ (1+R)/c, scaled by c.
///
/// Radii follow a fixed geometric grid starting at c, so enlarging R only adds shells.
/// Each radius is scored by the best of the direction grid (angle refined by golden
/// section in rank 2), and every radial cell is refined by golden section.
pub fn gap_inf(modulus: impl Fn(&[f64]) -> f64, r: usize, c: f64, big_r: f64) -> Result<GapResult> {
    if !(c > 0.0 && c < 1.0) || !(big_r > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "gap function needs 0 < c < 1 and R > 0, got c={c}, R={big_r}"
        )));
    }
    let dirs = directions(r);
    let upper = (1.0 + big_r) / c;
    let at_radius = |rho: f64| -> (f64, Vec<f64>) {
        let mut best = (f64::NEG_INFINITY, 0usize);
        for (k, d) in dirs.iter().enumerate() {
            let xi: Vec<f64> = d.iter().map(|v| v * rho).collect();
            let m = modulus(&xi);
            if m > best.0 {
                best = (m, k);
            }
        }
        if r == 2 {
            let t0 = 2.0 * PI * best.1 as f64 / 64.0;
            let step = 2.0 * PI / 64.0;
            let h = |t: f64| modulus(&[rho * t.cos(), rho * t.sin()]);
            let (t, m) = golden_max(t0 - step, t0 + step, REFINE_ROUNDS, &h);
            if m > best.0 {
                return (m, vec![rho * t.cos(), rho * t.sin()]);
            }
        }
        (best.0, dirs[best.1].iter().map(|v| v * rho).collect())
    };
    let mut best = at_radius(c);
    let mut shells = 1;
    let mut lo = c;
    while lo < upper {
        let hi = (lo * SHELL_RATIO).min(upper);
        let h = |rho: f64| at_radius(rho).0;
        let (rho, m) = golden_max(lo, hi, REFINE_ROUNDS, &h);
        if m > best.0 {
            best = (m, at_radius(rho).1);
        }
        let end = at_radius(hi);
        if end.0 > best.0 {
            best = end;
        }
        shells += 1;
        lo = hi;
    }
    Ok(GapResult {
        value: c * (1.0 - best.0).max(0.0),
        argmin: best.1,
        shells,
        directions: dirs.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::filtration::build_weight_filtration;
    use crate::lie_core::NilpotentAlgebra;
    use crate::scalar::{q, qr, qvec};

    fn heis(drift: &[i64]) -> WeightFiltration {
        build_weight_filtration(&NilpotentAlgebra::heisenberg3(), &qvec(drift)).unwrap()
    }

    fn line() -> WeightFiltration {
        build_weight_filtration(&NilpotentAlgebra::abelian(1), &qvec(&[0])).unwrap()
    }

    #[test]
    fn sampling_basics() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let d = MeasureSpec::dirac(vec![0.0; 3]);
        assert!((0..10).all(|_| d.sample(&mut rng) == vec![0.0; 3]));
        let g = MeasureSpec::heisenberg_gaussian();
        let m = 20000;
        let mut s = vec![0.0; 3];
        for _ in 0..m {
            let x = g.sample(&mut rng);
            for k in 0..3 {
                s[k] += x[k];
            }
        }
        assert!(s[0].abs() / (m as f64) < 0.04 && s[1].abs() / (m as f64) < 0.04 && s[2] == 0.0);
        let two = MeasureSpec::atoms(
            vec![vec![1.0, 0.0, 0.0], vec![-1.0, 0.0, 0.0]],
            vec![0.5, 0.5],
        )
        .unwrap();
        assert_eq!(two.mean(), vec![0.0; 3]);
        let mut a = ChaCha8Rng::seed_from_u64(7);
        let mut b = ChaCha8Rng::seed_from_u64(7);
        assert_eq!(g.sample(&mut a), g.sample(&mut b));
    }

    #[test]
    fn invalid_laws() {
        assert!(MeasureSpec::atoms(vec![vec![0.0]], vec![0.5]).is_err());
        assert!(MeasureSpec::atoms(vec![], vec![]).is_err());
        assert!(MeasureSpec::gaussian_layers(&[vec![-1.0]], None).is_err());
        let f = heis(&[0, 0, 0]);
        let flat = MeasureSpec::product(vec![
            Law1d::Gaussian { mean: 0.0, sd: 1.0 },
            Law1d::Constant(0.0),
            Law1d::Constant(0.0),
        ])
        .unwrap();
        assert!(flat.validate(&f).is_err());
        assert!(MeasureSpec::heisenberg_gaussian().validate(&f).is_ok());
    }

    #[test]
    fn json_roundtrip() {
        let v = json!({"kind": "atoms", "points": [["1/2", 0, 0], [-1, "2/3", 0]], "weights": ["1/3", "2/3"]});
        let m = MeasureSpec::from_json(&v).unwrap();
        let (p, w) = m.as_atoms().unwrap().exact().unwrap();
        assert_eq!(p[1][1], qr(2, 3));
        assert_eq!(w[0], qr(1, 3));
        let g = MeasureSpec::from_json(
            &json!({"kind": "gaussian_layers", "cov": [[1, 0, 0], [0, 4, 0], [0, 0, 0]]}),
        )
        .unwrap();
        let c = g.covariance();
        assert!((c[1][1] - 4.0).abs() < 1e-12 && c[2][2] == 0.0);
        let back = MeasureSpec::from_json(&g.to_json()).unwrap();
        assert_eq!(back.covariance(), c);
        assert!(MeasureSpec::from_json(&json!({"kind": "nope"})).is_err());
    }

    #[test]
    fn char_functions() {
        let f = line();
        let g = MeasureSpec::product(vec![Law1d::Gaussian { mean: 0.0, sd: 1.0 }]).unwrap();
        for xi in [0.0, 0.1, 0.5] {
            assert!((g.char_ab(&f, &[xi]).re - (-2.0 * PI * PI * xi * xi).exp()).abs() < 1e-14);
        }
        let u = MeasureSpec::product(vec![Law1d::Uniform { lo: -0.5, hi: 0.5 }]).unwrap();
        assert!(u.char_ab(&f, &[1.0]).norm() < 1e-12);
        let lattice = MeasureSpec::uniform_atoms(vec![vec![0.0], vec![1.0], vec![3.0]]).unwrap();
        assert!((lattice.char_ab(&f, &[1.0]).norm() - 1.0).abs() < 1e-12);
        let h = heis(&[0, 0, 0]);
        let m = MeasureSpec::heisenberg_gaussian();
        let z = m.char_ab(&h, &[0.3, -0.2]);
        assert!((z.re - (-2.0 * PI * PI * 0.13f64).exp()).abs() < 1e-14 && z.im.abs() < 1e-14);
    }

    #[test]
    fn truncation_examples() {
        let c = truncation_constant_exact(&[vec![q(2)], vec![q(0)]], &[qr(1, 2), qr(1, 2)], 1);
        assert_eq!(c, vec![q(0)]);
        let c = truncation_constant_exact(&[vec![q(2)], vec![qr(-2, 3)]], &[qr(1, 4), qr(3, 4)], 1);
        assert_eq!(c, vec![q(2)]);
        let c = truncation_constant_exact(&[vec![q(1)], vec![q(-1)]], &[qr(1, 2), qr(1, 2)], 4);
        assert_eq!(c, vec![q(0)]);

        let f = heis(&[0, 0, 0]);
        let ext = f.bias_extend().unwrap();
        let m = MeasureSpec::atoms_exact(
            vec![qvec(&[2, 0, 0]), vec![qr(-2, 3), q(0), q(0)]],
            vec![qr(1, 4), qr(3, 4)],
        )
        .unwrap();
        let t = m.truncate(&ext, 1, 0, 0).unwrap();
        assert_eq!(t.c_n_exact().unwrap(), &[q(2), q(0)]);
        let (pts, w) = m.as_atoms().unwrap().exact().unwrap();
        let mut mean = q(0);
        for (p, wk) in pts.iter().zip(w) {
            let mut x = p.clone();
            t.apply_exact(&mut x);
            mean += wk * &x[0];
        }
        assert_eq!(mean, q(0));
        let mut far = vec![0.0, 0.0, 5.0];
        assert!(t.apply(&mut far));
        assert_eq!(far, vec![0.0; 3]);
        let mut near = vec![0.5, 0.5, 0.9];
        assert!(!t.apply(&mut near));
    }

    #[test]
    fn truncation_centers_atoms() {
        let f = heis(&[0, 0, 0]);
        let ext = f.bias_extend().unwrap();
        let m = MeasureSpec::atoms_exact(
            vec![
                qvec(&[3, 0, 0]),
                qvec(&[-1, 1, 0]),
                qvec(&[0, -2, 1]),
                vec![qr(-1, 2), qr(1, 3), q(0)],
            ],
            vec![qr(1, 10), qr(2, 5), qr(1, 4), qr(1, 4)],
        )
        .unwrap();
        let (pts, w) = m.as_atoms().unwrap().exact().unwrap();
        for n in 1..=10 {
            let t = m.truncate(&ext, n, 0, 0).unwrap();
            let mut mean = vec![q(0), q(0)];
            let lifted_mean: Vec<Q> = (0..2)
                .map(|k| pts.iter().zip(w).fold(q(0), |a, (p, wk)| a + wk * &p[k]))
                .collect();
            let shift = if t.c_n_exact().unwrap().iter().all(Zero::is_zero) {
                lifted_mean
            } else {
                vec![q(0), q(0)]
            };
            for (p, wk) in pts.iter().zip(w) {
                let mut x = p.clone();
                t.apply_exact(&mut x);
                for k in 0..2 {
                    mean[k] += wk * &x[k];
                }
            }
            assert_eq!(mean, shift, "N={n}");
        }
    }

    #[test]
    fn bias_extension_sampling() {
        let f = heis(&[1, 0, 0]);
        let ext = f.bias_extend().unwrap();
        let m =
            MeasureSpec::uniform_atoms(vec![vec![2.0, 1.0, 0.0], vec![0.0, -1.0, 0.0]]).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let mut acc = vec![0.0; 4];
        for _ in 0..5 {
            let y = m.bias_extended_sample(&ext, &mut rng);
            assert_eq!(y[3], 1.0);
            acc = ext.algebra().bch(&acc, &y).unwrap();
        }
        assert_eq!(acc[3], 5.0);
        let f0 = heis(&[0, 0, 0]);
        let e0 = f0.bias_extend().unwrap();
        let mut a = ChaCha8Rng::seed_from_u64(5);
        let mut b = ChaCha8Rng::seed_from_u64(5);
        assert_eq!(m.bias_extended_sample(&e0, &mut a), m.sample(&mut b));
    }

    #[test]
    fn moments() {
        let f = heis(&[0, 0, 0]);
        assert!(MeasureSpec::dirac(vec![0.0; 3])
            .weight_moment(&f, 2.0, 0, 0)
            .iter()
            .all(|m| m.value == 0.0));
        let two =
            MeasureSpec::uniform_atoms(vec![vec![1.0, 0.0, 0.0], vec![-1.0, 0.0, 0.0]]).unwrap();
        assert_eq!(two.weight_moment(&f, 2.0, 0, 0)[0].value, 1.0);
        let g = MeasureSpec::heisenberg_gaussian();
        let m = g.weight_moment(&f, 2.0, 100_000, 11);
        assert!((m[0].value - 2.0).abs() < 4.0 * m[0].stderr);
        assert_eq!(m[1].value, 0.0);
        assert!(g.self_check(&f, 100_000, 12).pass);
        let wrong = MeasureSpec::affine(
            g.clone(),
            vec![
                vec![1.0, 0.0, 0.0],
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0],
            ],
            vec![0.0; 3],
        )
        .unwrap();
        assert!(wrong.self_check(&f, 1000, 1).pass);
    }

    #[test]
    fn gap_gaussian_closed_form() {
        let f = line();
        let g = MeasureSpec::product(vec![Law1d::Gaussian { mean: 0.0, sd: 1.0 }]).unwrap();
        let r = g.gap_function(&f, 0.1, 1.0).unwrap();
        let expect = 0.1 * (1.0 - (-2.0 * PI * PI * 0.01f64).exp());
        assert!((r.value - expect).abs() < 1e-12);
        assert!((expect - 0.01791).abs() < 1e-5);
    }

    #[test]
    fn gap_lattice_and_irrational() {
        let f = line();
        let lattice = MeasureSpec::uniform_atoms(vec![vec![0.0], vec![1.0]]).unwrap();
        assert!(lattice.gap_function(&f, 0.1, 1.0).unwrap().value < 1e-6);
        let irr =
            MeasureSpec::uniform_atoms(vec![vec![0.0], vec![1.0], vec![2f64.sqrt()]]).unwrap();
        let mut prev = f64::INFINITY;
        for r in [0.5, 1.0, 2.0, 4.0, 8.0] {
            let g = irr.gap_function(&f, 0.1, r).unwrap().value;
            assert!(g > 0.0);
            assert!(g <= prev + 1e-15);
            prev = g;
        }
        assert!(irr.gap_function(&f, 1.5, 1.0).is_err());
    }

    #[test]
    fn gap_heisenberg_monotone() {
        let f = heis(&[0, 0, 0]);
        let m = MeasureSpec::uniform_atoms(vec![
            vec![0.0, 0.0, 0.0],
            vec![1.0, 0.0, 0.0],
            vec![0.0, 1.0, 0.0],
            vec![2f64.sqrt(), 3f64.sqrt(), 0.0],
        ])
        .unwrap();
        let mut prev = f64::INFINITY;
        for r in [0.5, 1.0, 3.0] {
            let g = m.gap_function(&f, 0.2, r).unwrap().value;
            assert!(g > 0.0, "{g}");
            assert!(g <= prev + 1e-15, "{g} {prev}");
            prev = g;
        }
    }

    #[test]
    fn aperiodicity() {
        let f = line();
        let g = MeasureSpec::product(vec![Law1d::Gaussian { mean: 0.0, sd: 1.0 }]).unwrap();
        assert_eq!(g.aperiodicity_scan(&f, 5.0, 50).n_flagged, 0);
        let lattice = MeasureSpec::uniform_atoms(vec![vec![0.0], vec![1.0], vec![-1.0]]).unwrap();
        let s = lattice.aperiodicity_scan(&f, 5.0, 50);
        assert_eq!(s.n_flagged, 10);
        let irr =
            MeasureSpec::uniform_atoms(vec![vec![0.0], vec![1.0], vec![2f64.sqrt()]]).unwrap();
        assert_eq!(irr.aperiodicity_scan(&f, 20.0, 2000).n_flagged, 0);
    }
}
