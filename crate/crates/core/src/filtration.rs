//! Drift-induced weight filtration, adapted bases, dilations, the graded bracket,
//! the bias extension and the operator a_X.

use std::ops::Range;
use std::sync::Arc;

use num_traits::Zero;
use serde_json::{json, Value};

use crate::error::{Error, Result};
use crate::lie_core::NilpotentAlgebra;
use crate::linalg::{mat_inv, mat_mul, mat_vec, transpose, unit, QMat, Subspace};
use crate::scalar::{format_q, q, q_to_f64, Scalar, Q};

#[derive(Debug, Clone)]
pub struct WeightFiltration {
    algebra: Arc<NilpotentAlgebra>,
    drift: Vec<Q>,
    ideals: Vec<Subspace>,
    supplements: Vec<Vec<Vec<Q>>>,
    from_adapted: QMat,
    to_adapted: QMat,
    weights: Vec<usize>,
    adapted: Arc<NilpotentAlgebra>,
    graded: Arc<NilpotentAlgebra>,
}

/// Builds the filtration 𝔤^(1) = 𝔤, 𝔤^(i+1) = [𝔤, 𝔤^(i)] + [x, 𝔤^(i−1)] (with 𝔤^(0) = 𝔤)
/// for a drift representative `x` given in the algebra's own basis.
pub fn build_weight_filtration(alg: &NilpotentAlgebra, drift: &[Q]) -> Result<WeightFiltration> {
    WeightFiltration::new(Arc::new(alg.clone()), drift)
}

impl WeightFiltration {
    pub fn new(algebra: Arc<NilpotentAlgebra>, drift: &[Q]) -> Result<Self> {
        let n = algebra.dim();
        if drift.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                got: drift.len(),
            });
        }
        let full = Subspace::full(n);
        let xs = Subspace::span(n, [drift.to_vec()]);
        let mut all = vec![full.clone(), full.clone()];
        let limit = 2 * algebra.step() + 1;
        while all.len() <= limit {
            let i = all.len() - 1;
            let next = algebra
                .bracket_span(&full, &all[i])
                .sum(&algebra.bracket_span(&xs, &all[i - 1]));
            if !all[i].contains_subspace(&next) {
                return Err(Error::InvalidAlgebra(
                    "weight filtration is not decreasing".into(),
                ));
            }
            let stop = next.is_zero() && all[i].is_zero();
            all.push(next);
            if stop {
                break;
            }
        }
        let mut ideals: Vec<Subspace> = all[1..].to_vec();
        while ideals.len() > 1 && ideals[ideals.len() - 2].is_zero() {
            ideals.pop();
        }
        let mut supplements = Vec::new();
        let mut basis: Vec<Vec<Q>> = Vec::new();
        let mut weights = Vec::new();
        for i in 0..ideals.len() - 1 {
            let mut s = ideals[i + 1].clone();
            let mut m = Vec::new();
            for r in ideals[i].basis() {
                if s.insert(r.clone()) {
                    m.push(r.clone());
                    basis.push(r.clone());
                    weights.push(i + 1);
                }
            }
            supplements.push(m);
        }
        let from_adapted = transpose(&basis);
        let to_adapted = mat_inv(&from_adapted)?;
        let dense = algebra.dense_constants();
        let mut adapted_br = Vec::new();
        let mut graded_br = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                let mut v = vec![Q::zero(); n];
                for i in 0..n {
                    if basis[a][i].is_zero() {
                        continue;
                    }
                    for j in 0..n {
                        if basis[b][j].is_zero() {
                            continue;
                        }
                        let f = &basis[a][i] * &basis[b][j];
                        for (k, c) in dense[i][j].iter().enumerate() {
                            if !c.is_zero() {
                                v[k] += &f * c;
                            }
                        }
                    }
                }
                let coords = mat_vec(&to_adapted, &v);
                if coords.iter().all(|c| c.is_zero()) {
                    continue;
                }
                let w = weights[a] + weights[b];
                let graded: Vec<Q> = coords
                    .iter()
                    .enumerate()
                    .map(|(k, c)| {
                        if weights[k] == w {
                            c.clone()
                        } else {
                            Q::zero()
                        }
                    })
                    .collect();
                adapted_br.push((a, b, coords));
                if graded.iter().any(|c| !c.is_zero()) {
                    graded_br.push((a, b, graded));
                }
            }
        }
        let labels: Vec<String> = (0..n).map(|k| format!("f{}", k + 1)).collect();
        let adapted = NilpotentAlgebra::new(
            &format!("{}[adapted]", algebra.name()),
            n,
            &adapted_br,
            Some(labels.clone()),
        )?;
        let graded = NilpotentAlgebra::new(
            &format!("{}[graded]", algebra.name()),
            n,
            &graded_br,
            Some(labels),
        )?;
        Ok(WeightFiltration {
            algebra,
            drift: drift.to_vec(),
            ideals,
            supplements,
            from_adapted,
            to_adapted,
            weights,
            adapted: Arc::new(adapted),
            graded: Arc::new(graded),
        })
    }

    pub fn algebra(&self) -> &Arc<NilpotentAlgebra> {
        &self.algebra
    }

    /// The original bracket written in the adapted basis.
    pub fn adapted_algebra(&self) -> &Arc<NilpotentAlgebra> {
        &self.adapted
    }

    /// The graded bracket [·,·]' in the adapted basis.
    pub fn graded_algebra(&self) -> &Arc<NilpotentAlgebra> {
        &self.graded
    }

    pub fn dim(&self) -> usize {
        self.algebra.dim()
    }

    pub fn drift(&self) -> &[Q] {
        &self.drift
    }

    pub fn is_centered(&self) -> bool {
        self.algebra.derived().contains(&self.drift)
    }

    /// 𝔤^(1), 𝔤^(2), …, ending with the first zero ideal.
    pub fn ideals(&self) -> &[Subspace] {
        &self.ideals
    }

    /// 𝔤^(i) for i ≥ 1 (zero beyond the stored range).
    pub fn ideal(&self, i: usize) -> Subspace {
        assert!(i >= 1);
        self.ideals
            .get(i - 1)
            .cloned()
            .unwrap_or_else(|| Subspace::zero(self.dim()))
    }

    pub fn ideal_dims(&self) -> Vec<usize> {
        self.ideals.iter().map(|s| s.dim()).collect()
    }

    /// Supplement bases 𝔪^(i) (original coordinates), i = 1, 2, …
    pub fn supplements(&self) -> &[Vec<Vec<Q>>] {
        &self.supplements
    }

    pub fn weights(&self) -> &[usize] {
        &self.weights
    }

    pub fn max_weight(&self) -> usize {
        self.weights.iter().copied().max().unwrap_or(1)
    }

    /// Homogeneous dimension d_X̄ = Σ_i dim 𝔤^(i) = Σ of the adapted weights.
    pub fn hom_dim(&self) -> usize {
        self.ideals.iter().map(|s| s.dim()).sum()
    }

    /// Index range of the weight-`b` coordinates in the adapted basis.
    pub fn layer(&self, b: usize) -> Range<usize> {
        let start = self.weights.partition_point(|&w| w < b);
        let end = self.weights.partition_point(|&w| w <= b);
        start..end
    }

    /// Columns are the adapted basis vectors in original coordinates.
    pub fn change_of_basis(&self) -> &QMat {
        &self.from_adapted
    }

    pub fn to_adapted<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        apply(&self.to_adapted, x)
    }

    pub fn from_adapted<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        apply(&self.from_adapted, x)
    }

    pub fn to_adapted_matrix_f64(&self) -> Vec<Vec<f64>> {
        crate::linalg::to_f64_mat(&self.to_adapted)
    }

    /// Representative X of X̄ in 𝔪^(1), adapted coordinates.
    pub fn drift_adapted(&self) -> Vec<Q> {
        let mut x = self.to_adapted(&self.drift);
        for (c, &w) in x.iter_mut().zip(&self.weights) {
            if w != 1 {
                *c = Q::zero();
            }
        }
        x
    }

    /// Projection π^(b) in adapted coordinates.
    pub fn project<S: Scalar>(&self, b: usize, x: &[S]) -> Vec<S> {
        x.iter()
            .zip(&self.weights)
            .map(|(c, &w)| if w == b { c.clone() } else { S::zero() })
            .collect()
    }

    /// D_r(x) = Σ r^i x^(i), adapted coordinates.
    pub fn dilate<S: Scalar>(&self, r: &S, x: &[S]) -> Vec<S> {
        dilate_with(&self.weights, r, x)
    }

    pub fn dilate_f64(&self, r: f64, x: &[f64]) -> Result<Vec<f64>> {
        if r.is_nan() || r <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "dilation factor must be positive, got {r}"
            )));
        }
        Ok(dilate_with(&self.weights, &r, x))
    }

    pub fn graded_bracket<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<Vec<S>> {
        self.graded.bracket(x, y)
    }

    pub fn graded_product<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<Vec<S>> {
        self.graded.bch(x, y)
    }

    /// 𝔤^(i) spanned in adapted coordinates (all basis vectors of weight ≥ i).
    fn adapted_ideal(&self, i: usize) -> Subspace {
        let n = self.dim();
        Subspace::span(
            n,
            (0..n).filter(|&k| self.weights[k] >= i).map(|k| unit(n, k)),
        )
    }

    /// [𝔤^(i), 𝔤^(j)] ⊆ 𝔤^(i+j) for all i, j.
    pub fn check_nesting(&self) -> bool {
        let m = self.ideals.len() + 1;
        for i in 1..=m {
            for j in 1..=m {
                let br = self.algebra.bracket_span(&self.ideal(i), &self.ideal(j));
                if !self.ideal(i + j).contains_subspace(&br) {
                    return false;
                }
            }
        }
        true
    }

    /// 𝔤^[i] ⊆ 𝔤^(i) ⊆ 𝔤^[⌊i/2⌋+1] for every i.
    pub fn check_sandwich(&self) -> bool {
        let series = self.algebra.descending_central_series();
        let central = |i: usize| {
            series
                .get(i - 1)
                .cloned()
                .unwrap_or_else(|| Subspace::zero(self.dim()))
        };
        (1..=2 * self.algebra.step() + 1).all(|i| {
            let g = self.ideal(i);
            g.contains_subspace(&central(i)) && central(i / 2 + 1).contains_subspace(&g)
        })
    }

    /// 𝔤^(2s) = 0.
    pub fn check_vanishing(&self) -> bool {
        self.ideal(2 * self.algebra.step()).is_zero()
    }

    /// Σ dim 𝔪^(i) = dim 𝔤 and the adapted basis is compatible with the ideals.
    pub fn check_supplements(&self) -> bool {
        let total: usize = self.supplements.iter().map(|m| m.len()).sum();
        total == self.dim()
            && (1..=self.ideals.len()).all(|i| self.adapted_ideal(i).dim() == self.ideal(i).dim())
    }

    /// Matrix of a_X in adapted coordinates: a_X(y) = π^(i+2)([X, y]) for y ∈ 𝔪^(i).
    pub fn a_x_matrix(&self) -> QMat {
        let n = self.dim();
        let x = self.drift_adapted();
        let mut m = vec![vec![Q::zero(); n]; n];
        for b in 0..n {
            let br = self.adapted.bracket_unchecked(&x, &unit(n, b));
            for k in 0..n {
                if self.weights[k] == self.weights[b] + 2 {
                    m[k][b] = br[k].clone();
                }
            }
        }
        m
    }

    pub fn a_x<S: Scalar>(&self, y: &[S]) -> Vec<S> {
        apply(&self.a_x_matrix(), y)
    }

    /// Coefficients C_k = a_X^k / k! of the nilpotent exponential exp(t·a_X) = Σ_k t^k C_k.
    pub fn exp_a_x_coefficients(&self) -> Vec<QMat> {
        let n = self.dim();
        let a = self.a_x_matrix();
        let mut out = vec![crate::linalg::identity(n)];
        let mut power = crate::linalg::identity(n);
        for k in 1..=2 * self.algebra.step() + 1 {
            power = mat_mul(&a, &power);
            if power.iter().all(|r| r.iter().all(|c| c.is_zero())) {
                break;
            }
            let f = Q::new(1.into(), num_bigint::BigInt::from(factorial(k)));
            out.push(
                power
                    .iter()
                    .map(|r| r.iter().map(|c| c * &f).collect())
                    .collect(),
            );
        }
        out
    }

    pub fn exp_a_x_f64(&self, t: f64) -> Vec<Vec<f64>> {
        let coeffs = self.exp_a_x_coefficients();
        let n = self.dim();
        let mut out = vec![vec![0.0; n]; n];
        let mut tp = 1.0;
        for c in &coeffs {
            for i in 0..n {
                for j in 0..n {
                    out[i][j] += tp * q_to_f64(&c[i][j]);
                }
            }
            tp *= t;
        }
        out
    }

    pub fn bias_extend(&self) -> Result<ExtendedAlgebra> {
        ExtendedAlgebra::new(self)
    }

    /// Deterministic JSON report (ideal dimensions, weights, d_X̄, adapted basis).
    pub fn report(&self) -> Value {
        let basis: Vec<Vec<String>> = transpose(&self.from_adapted)
            .iter()
            .map(|r| r.iter().map(format_q).collect())
            .collect();
        json!({
            "algebra": self.algebra.name(),
            "drift": self.drift.iter().map(format_q).collect::<Vec<_>>(),
            "centered": self.is_centered(),
            "ideal_dims": self.ideal_dims(),
            "weights": self.weights,
            "hom_dim": self.hom_dim(),
            "adapted_basis": basis,
            "supplement_rule": "echelon rows of each ideal added greedily in pivot order onto a basis of the next ideal",
        })
    }
}

fn factorial(k: usize) -> u128 {
    (1..=k as u128).product()
}

fn apply<S: Scalar>(m: &QMat, x: &[S]) -> Vec<S> {
    m.iter()
        .map(|row| {
            let mut acc = S::zero();
            for (c, v) in row.iter().zip(x) {
                if !c.is_zero() {
                    acc = acc + S::from_q(c) * v.clone();
                }
            }
            acc
        })
        .collect()
}

pub fn dilate_with<S: Scalar>(weights: &[usize], r: &S, x: &[S]) -> Vec<S> {
    x.iter()
        .zip(weights)
        .map(|(c, &w)| {
            let mut f = S::one();
            for _ in 0..w {
                f = f * r.clone();
            }
            f * c.clone()
        })
        .collect()
}

/// The bias extension 𝔤̃ = 𝔤 ⊕ ℝχ with [χ, y] = [X, y], in adapted coordinates
/// with χ appended as the last coordinate (weight 2). For a centered filtration it
/// is the adapted algebra itself.
#[derive(Debug, Clone)]
pub struct ExtendedAlgebra {
    base: WeightFiltration,
    chi_index: Option<usize>,
    x: Vec<Q>,
    algebra: Arc<NilpotentAlgebra>,
    graded: Arc<NilpotentAlgebra>,
    weights: Vec<usize>,
}

impl ExtendedAlgebra {
    fn new(f: &WeightFiltration) -> Result<Self> {
        let x = f.drift_adapted();
        if x.iter().all(|c| c.is_zero()) {
            return Ok(ExtendedAlgebra {
                base: f.clone(),
                chi_index: None,
                x,
                algebra: f.adapted.clone(),
                graded: f.graded.clone(),
                weights: f.weights.clone(),
            });
        }
        let n = f.dim();
        let ext = |alg: &NilpotentAlgebra, graded: bool| -> Result<NilpotentAlgebra> {
            let dense = alg.dense_constants();
            let mut br = Vec::new();
            for a in 0..n {
                for b in a + 1..n {
                    if dense[a][b].iter().any(|c| !c.is_zero()) {
                        let mut v = dense[a][b].clone();
                        v.push(Q::zero());
                        br.push((a, b, v));
                    }
                }
            }
            for b in 0..n {
                let mut xb = vec![Q::zero(); n];
                for (a, xa) in x.iter().enumerate() {
                    if xa.is_zero() {
                        continue;
                    }
                    for (k, c) in dense[a][b].iter().enumerate() {
                        xb[k] += xa * c;
                    }
                }
                if graded {
                    for (k, c) in xb.iter_mut().enumerate() {
                        if f.weights[k] != f.weights[b] + 2 {
                            *c = Q::zero();
                        }
                    }
                }
                if xb.iter().any(|c| !c.is_zero()) {
                    xb.push(Q::zero());
                    br.push((n, b, xb));
                }
            }
            let mut labels: Vec<String> = alg.labels().to_vec();
            labels.push("chi".into());
            NilpotentAlgebra::new(&format!("{}+chi", alg.name()), n + 1, &br, Some(labels))
        };
        let mut weights = f.weights.clone();
        weights.push(2);
        Ok(ExtendedAlgebra {
            base: f.clone(),
            chi_index: Some(n),
            x: x.clone(),
            algebra: Arc::new(ext(&f.adapted, false)?),
            graded: Arc::new(ext(&f.adapted, true)?),
            weights,
        })
    }

    pub fn base(&self) -> &WeightFiltration {
        &self.base
    }

    pub fn chi_index(&self) -> Option<usize> {
        self.chi_index
    }

    pub fn dim(&self) -> usize {
        self.algebra.dim()
    }

    pub fn x(&self) -> &[Q] {
        &self.x
    }

    pub fn algebra(&self) -> &Arc<NilpotentAlgebra> {
        &self.algebra
    }

    pub fn graded_algebra(&self) -> &Arc<NilpotentAlgebra> {
        &self.graded
    }

    pub fn weights(&self) -> &[usize] {
        &self.weights
    }

    /// p: x ⊕ tχ ↦ x + tX.
    pub fn project<S: Scalar>(&self, y: &[S]) -> Vec<S> {
        let n = self.base.dim();
        let mut out: Vec<S> = y[..n].to_vec();
        if let Some(c) = self.chi_index {
            let t = y[c].clone();
            for (o, xk) in out.iter_mut().zip(&self.x) {
                if !xk.is_zero() {
                    *o = o.clone() + t.clone() * S::from_q(xk);
                }
            }
        }
        out
    }

    /// x ↦ (x − X) ⊕ 1·χ, the bias-shifted copy of an increment (identity when centered).
    pub fn lift<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        match self.chi_index {
            None => x.to_vec(),
            Some(_) => {
                let mut out: Vec<S> = x
                    .iter()
                    .zip(&self.x)
                    .map(|(a, b)| a.clone() - S::from_q(b))
                    .collect();
                out.push(S::one());
                out
            }
        }
    }

    pub fn dilate<S: Scalar>(&self, r: &S, x: &[S]) -> Vec<S> {
        dilate_with(&self.weights, r, x)
    }
}

/// Convenience: rational vector from integers.
pub fn drift_from_ints(v: &[i64]) -> Vec<Q> {
    v.iter().map(|&x| q(x)).collect()
}
