//! Nilpotent Lie algebras given by structure constants, their bracket and the
//! group law in exponential coordinates.

use std::sync::OnceLock;

use num_traits::Zero;
use serde_json::Value;

use crate::error::{Error, Result};
use crate::free_symbolic::{dynkin_pi, FreePoly, LieProgram};
use crate::linalg::{solve_in_span, unit, Subspace};
use crate::scalar::{parse_q, q, q_to_f64, Scalar, Q};

/// One nonzero structure constant: `[e_i, e_j]` has coefficient `c` on `e_k`, with `i < j`.
#[derive(Debug, Clone, PartialEq)]
struct Constant {
    i: usize,
    j: usize,
    k: usize,
    c: Q,
}

#[derive(Debug)]
pub struct NilpotentAlgebra {
    name: String,
    dim: usize,
    step: usize,
    labels: Vec<String>,
    consts: Vec<Constant>,
    consts_f64: Vec<(usize, usize, usize, f64)>,
    bch: OnceLock<LieProgram>,
}

impl Clone for NilpotentAlgebra {
    fn clone(&self) -> Self {
        NilpotentAlgebra {
            name: self.name.clone(),
            dim: self.dim,
            step: self.step,
            labels: self.labels.clone(),
            consts: self.consts.clone(),
            consts_f64: self.consts_f64.clone(),
            bch: OnceLock::new(),
        }
    }
}

impl PartialEq for NilpotentAlgebra {
    fn eq(&self, other: &Self) -> bool {
        self.dim == other.dim && self.consts == other.consts
    }
}

/// Exact validation results for an algebra.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AlgebraCheck {
    pub antisymmetric: bool,
    pub jacobi: bool,
    pub step: usize,
    pub central_series_dims: Vec<usize>,
}

impl NilpotentAlgebra {
    /// Builds an algebra from brackets `[e_i, e_j] = Σ_k coeffs[k] e_k` (0-based, `i != j`).
    /// Brackets may be listed in either order; a pair listed twice must be consistent.
    pub fn new(
        name: &str,
        dim: usize,
        brackets: &[(usize, usize, Vec<Q>)],
        labels: Option<Vec<String>>,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidAlgebra("dimension must be positive".into()));
        }
        let mut table: Vec<Vec<Option<Vec<Q>>>> = vec![vec![None; dim]; dim];
        for (i, j, coeffs) in brackets {
            let (i, j) = (*i, *j);
            if i >= dim || j >= dim {
                return Err(Error::InvalidAlgebra(format!(
                    "bracket index ({}, {}) out of range",
                    i + 1,
                    j + 1
                )));
            }
            if coeffs.len() != dim {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: coeffs.len(),
                });
            }
            if i == j {
                if coeffs.iter().any(|c| !c.is_zero()) {
                    return Err(Error::InvalidAlgebra(format!(
                        "[e{0}, e{0}] must vanish",
                        i + 1
                    )));
                }
                continue;
            }
            let neg: Vec<Q> = coeffs.iter().map(|c| -c.clone()).collect();
            for (a, b, v) in [(i, j, coeffs.clone()), (j, i, neg)] {
                match &table[a][b] {
                    Some(prev) if *prev != v => {
                        return Err(Error::InvalidAlgebra(format!(
                            "inconsistent (not antisymmetric) bracket [e{}, e{}]",
                            a + 1,
                            b + 1
                        )))
                    }
                    _ => table[a][b] = Some(v),
                }
            }
        }
        let mut consts = Vec::new();
        for (i, row) in table.iter().enumerate() {
            for (j, entry) in row.iter().enumerate().skip(i + 1) {
                if let Some(v) = entry {
                    for (k, c) in v.iter().enumerate() {
                        if !c.is_zero() {
                            consts.push(Constant {
                                i,
                                j,
                                k,
                                c: c.clone(),
                            });
                        }
                    }
                }
            }
        }
        let labels = labels.unwrap_or_else(|| (1..=dim).map(|i| format!("e{i}")).collect());
        if labels.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: labels.len(),
            });
        }
        let consts_f64 = consts
            .iter()
            .map(|c| (c.i, c.j, c.k, q_to_f64(&c.c)))
            .collect();
        let mut alg = NilpotentAlgebra {
            name: name.to_string(),
            dim,
            step: 0,
            labels,
            consts,
            consts_f64,
            bch: OnceLock::new(),
        };
        if !alg.jacobi_holds() {
            return Err(Error::InvalidAlgebra("Jacobi identity fails".into()));
        }
        let series = alg.descending_central_series();
        if !series.last().is_some_and(|s| s.is_zero()) {
            return Err(Error::InvalidAlgebra("algebra is not nilpotent".into()));
        }
        alg.step = series.len() - 1;
        Ok(alg)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Nilpotency step s (the abelian algebra has step 1).
    pub fn step(&self) -> usize {
        self.step.max(1)
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Nonzero constants as `(i, j, k, c)` with `i < j`: `[e_i, e_j]` has `c` on `e_k`.
    pub fn structure_constants(&self) -> Vec<(usize, usize, usize, Q)> {
        self.consts
            .iter()
            .map(|c| (c.i, c.j, c.k, c.c.clone()))
            .collect()
    }

    /// Full dense array `c[i][j][k]`.
    pub fn dense_constants(&self) -> Vec<Vec<Vec<Q>>> {
        let n = self.dim;
        let mut t = vec![vec![vec![Q::zero(); n]; n]; n];
        for c in &self.consts {
            t[c.i][c.j][c.k] = c.c.clone();
            t[c.j][c.i][c.k] = -c.c.clone();
        }
        t
    }

    pub fn is_abelian(&self) -> bool {
        self.consts.is_empty()
    }

    pub fn heisenberg3() -> Self {
        Self::new("heisenberg3", 3, &[(0, 1, vec![q(0), q(0), q(1)])], None).expect("valid algebra")
    }

    pub fn abelian(d: usize) -> Self {
        Self::new(&format!("abelian({d})"), d, &[], None).expect("valid algebra")
    }

    /// [e1,e2]=e3, [e1,e3]=e4.
    pub fn filiform4() -> Self {
        let z = || vec![q(0); 4];
        let mut b12 = z();
        b12[2] = q(1);
        let mut b13 = z();
        b13[3] = q(1);
        Self::new("filiform4", 4, &[(0, 1, b12), (0, 2, b13)], None).expect("valid algebra")
    }

    /// Free nilpotent algebra on `g` generators of step `s`, in a basis of left-normed
    /// brackets of letters chosen greedily (length by length, words in lexicographic order).
    pub fn free_nilpotent(g: usize, s: usize) -> Result<Self> {
        if !(1..=3).contains(&g) || !(1..=4).contains(&s) {
            return Err(Error::InvalidArgument(format!(
                "free-nilpotent supports g<=3, s<=4 (got {g},{s})"
            )));
        }
        let mut basis_words: Vec<Vec<u8>> = Vec::new();
        let mut basis_polys: Vec<FreePoly> = Vec::new();
        let mut by_len: Vec<Vec<usize>> = vec![Vec::new(); s + 1];
        for len in 1..=s {
            let words = all_words(g, len);
            let index: std::collections::HashMap<&Vec<u8>, usize> =
                words.iter().enumerate().map(|(i, w)| (w, i)).collect();
            let mut span = Subspace::zero(words.len());
            for w in &words {
                let mut one = FreePoly::zero(g, s);
                one.add_term(w.clone(), Q::from_integer(1.into()));
                let l = one.bracketing_l();
                let mut v = vec![Q::zero(); words.len()];
                for (word, c) in l.terms() {
                    v[index[word]] = c.clone();
                }
                if span.insert(v) {
                    by_len[len].push(basis_words.len());
                    basis_words.push(w.clone());
                    basis_polys.push(l);
                }
            }
        }
        let dim = basis_words.len();
        let mut brackets = Vec::new();
        for a in 0..dim {
            for b in a + 1..dim {
                let len = basis_words[a].len() + basis_words[b].len();
                if len > s {
                    continue;
                }
                let prod = basis_polys[a].bracket(&basis_polys[b]);
                if prod.is_zero() {
                    continue;
                }
                let words = all_words(g, len);
                let cols: Vec<Vec<Q>> = by_len[len]
                    .iter()
                    .map(|&idx| words.iter().map(|w| basis_polys[idx].coeff(w)).collect())
                    .collect();
                let target: Vec<Q> = words.iter().map(|w| prod.coeff(w)).collect();
                let coeffs = solve_in_span(&cols, &target).ok_or_else(|| {
                    Error::InvalidAlgebra("bracket outside the left-normed span".into())
                })?;
                let mut full = vec![Q::zero(); dim];
                for (c, &idx) in coeffs.into_iter().zip(&by_len[len]) {
                    full[idx] = c;
                }
                brackets.push((a, b, full));
            }
        }
        let labels = basis_words
            .iter()
            .map(|w| {
                let names: Vec<String> = w.iter().map(|&l| format!("x{}", l + 1)).collect();
                if names.len() == 1 {
                    names[0].clone()
                } else {
                    let mut acc = names[0].clone();
                    for n in &names[1..] {
                        acc = format!("[{acc},{n}]");
                    }
                    acc
                }
            })
            .collect();
        Self::new(
            &format!("free-nilpotent({g},{s})"),
            dim,
            &brackets,
            Some(labels),
        )
    }

    /// Resolves a built-in name: `heisenberg3`, `abelian(d)`, `filiform4`, `free-nilpotent(g,s)`.
    pub fn builtin(name: &str) -> Result<Self> {
        let n = name.trim().replace(' ', "");
        let args = |prefix: &str| -> Option<Vec<usize>> {
            let inner = n
                .strip_prefix(prefix)?
                .strip_prefix('(')?
                .strip_suffix(')')?;
            inner.split(',').map(|x| x.parse().ok()).collect()
        };
        if n == "heisenberg3" || n == "heisenberg" {
            return Ok(Self::heisenberg3());
        }
        if n == "filiform4" {
            return Ok(Self::filiform4());
        }
        if let Some(a) = args("abelian") {
            if a.len() == 1 && a[0] > 0 {
                return Ok(Self::abelian(a[0]));
            }
        }
        if let Some(a) = args("free-nilpotent") {
            if a.len() == 2 {
                return Self::free_nilpotent(a[0], a[1]);
            }
        }
        Err(Error::Parse(format!("unknown built-in algebra {name:?}")))
    }

    /// Parses the JSON definition `{"dim", "step", "brackets": [[i, j, [coeffs]], ...]}`
    /// with 1-based indices; coefficients are numbers or strings such as `"1/2"`.
    pub fn from_json(text: &str) -> Result<Self> {
        let v: Value = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Self::from_json_value(&v)
    }

    pub fn from_json_value(v: &Value) -> Result<Self> {
        let dim = v["dim"]
            .as_u64()
            .ok_or_else(|| Error::Parse("missing integer field `dim`".into()))?
            as usize;
        let name = v["name"].as_str().unwrap_or("custom");
        let labels = match v.get("labels") {
            Some(Value::Array(a)) => Some(
                a.iter()
                    .map(|x| {
                        x.as_str()
                            .map(str::to_string)
                            .ok_or_else(|| Error::Parse("labels must be strings".into()))
                    })
                    .collect::<Result<Vec<_>>>()?,
            ),
            _ => None,
        };
        let mut brackets = Vec::new();
        if let Some(list) = v.get("brackets") {
            let list = list
                .as_array()
                .ok_or_else(|| Error::Parse("`brackets` must be a list".into()))?;
            for entry in list {
                let (i, j, coeffs) = match entry {
                    Value::Array(t) if t.len() == 3 => (&t[0], &t[1], &t[2]),
                    Value::Object(o) => (
                        o.get("i")
                            .ok_or_else(|| Error::Parse("bracket without `i`".into()))?,
                        o.get("j")
                            .ok_or_else(|| Error::Parse("bracket without `j`".into()))?,
                        o.get("coeffs")
                            .ok_or_else(|| Error::Parse("bracket without `coeffs`".into()))?,
                    ),
                    _ => return Err(Error::Parse("bracket entries are [i, j, coeffs]".into())),
                };
                let idx = |x: &Value| -> Result<usize> {
                    let k = x.as_u64().ok_or_else(|| {
                        Error::Parse("bracket index must be a positive integer".into())
                    })? as usize;
                    if k == 0 {
                        return Err(Error::Parse("bracket indices are 1-based".into()));
                    }
                    Ok(k - 1)
                };
                let coeffs = coeffs
                    .as_array()
                    .ok_or_else(|| Error::Parse("coefficients must be a list".into()))?
                    .iter()
                    .map(value_to_q)
                    .collect::<Result<Vec<_>>>()?;
                brackets.push((idx(i)?, idx(j)?, coeffs));
            }
        }
        let alg = Self::new(name, dim, &brackets, labels)?;
        if let Some(s) = v.get("step") {
            let s = s
                .as_u64()
                .ok_or_else(|| Error::Parse("`step` must be an integer".into()))?
                as usize;
            if s != alg.step() {
                return Err(Error::InvalidAlgebra(format!(
                    "declared step {s} but the central series gives {}",
                    alg.step()
                )));
            }
        }
        Ok(alg)
    }

    pub fn to_json(&self) -> Value {
        let brackets: Vec<Value> = {
            let dense = self.dense_constants();
            let mut out = Vec::new();
            for i in 0..self.dim {
                for j in i + 1..self.dim {
                    if dense[i][j].iter().any(|c| !c.is_zero()) {
                        let coeffs: Vec<Value> = dense[i][j]
                            .iter()
                            .map(|c| Value::String(crate::scalar::format_q(c)))
                            .collect();
                        out.push(serde_json::json!([i + 1, j + 1, coeffs]));
                    }
                }
            }
            out
        };
        serde_json::json!({
            "name": self.name,
            "dim": self.dim,
            "step": self.step(),
            "labels": self.labels,
            "brackets": brackets,
        })
    }

    fn check_len<S>(&self, x: &[S]) -> Result<()> {
        if x.len() != self.dim {
            return Err(Error::DimensionMismatch {
                expected: self.dim,
                got: x.len(),
            });
        }
        Ok(())
    }

    pub fn bracket<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<Vec<S>> {
        self.check_len(x)?;
        self.check_len(y)?;
        Ok(self.bracket_unchecked(x, y))
    }

    pub(crate) fn bracket_unchecked<S: Scalar>(&self, x: &[S], y: &[S]) -> Vec<S> {
        let mut out = vec![S::zero(); self.dim];
        for c in &self.consts {
            let m = x[c.i].clone() * y[c.j].clone() - x[c.j].clone() * y[c.i].clone();
            if !m.is_zero() {
                out[c.k] = out[c.k].clone() + S::from_q(&c.c) * m;
            }
        }
        out
    }

    pub fn bracket_f64_into(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        out.fill(0.0);
        for &(i, j, k, c) in &self.consts_f64 {
            out[k] += c * (x[i] * y[j] - x[j] * y[i]);
        }
    }

    /// The BCH polynomial Π_2 truncated at the step, compiled once.
    pub fn bch_program(&self) -> &LieProgram {
        self.bch.get_or_init(|| {
            LieProgram::compile(
                &dynkin_pi(2, self.step()).expect("two-letter BCH is within budget"),
            )
        })
    }

    /// Group law x*y in exponential coordinates.
    pub fn bch<S: Scalar>(&self, x: &[S], y: &[S]) -> Result<Vec<S>> {
        self.check_len(x)?;
        self.check_len(y)?;
        self.bch_program().eval(self, &[x.to_vec(), y.to_vec()])
    }

    /// Scratch length needed by [`Self::bch_f64_into`].
    pub fn bch_scratch_len(&self) -> usize {
        self.bch_program().node_count() * self.dim
    }

    pub fn bch_f64_into(&self, x: &[f64], y: &[f64], scratch: &mut [f64], out: &mut [f64]) {
        if self.consts_f64.is_empty() {
            for ((o, a), b) in out.iter_mut().zip(x).zip(y) {
                *o = a + b;
            }
            return;
        }
        if self.step == 2 {
            self.bracket_f64_into(x, y, out);
            for ((o, a), b) in out.iter_mut().zip(x).zip(y) {
                *o = a + b + 0.5 * *o;
            }
            return;
        }
        self.bch_program()
            .eval_f64_into(self, &[x, y], scratch, out);
    }

    /// Left fold x_1 * x_2 * ⋯ * x_N.
    pub fn multi_product<S: Scalar>(&self, xs: &[Vec<S>]) -> Result<Vec<S>> {
        let (first, rest) = xs
            .split_first()
            .ok_or(Error::Empty("multi_product needs at least one element"))?;
        self.check_len(first)?;
        let mut acc = first.clone();
        for x in rest {
            acc = self.bch(&acc, x)?;
        }
        Ok(acc)
    }

    pub fn inverse<S: Scalar>(&self, x: &[S]) -> Vec<S> {
        x.iter().map(|c| -c.clone()).collect()
    }

    /// Span of all brackets [u, v] with u in `a`, v in `b`.
    pub fn bracket_span(&self, a: &Subspace, b: &Subspace) -> Subspace {
        let mut s = Subspace::zero(self.dim);
        for u in a.basis() {
            for v in b.basis() {
                s.insert(self.bracket_unchecked(u, v));
            }
        }
        s
    }

    /// 𝔤^[1] = 𝔤, 𝔤^[i] = [𝔤, 𝔤^[i−1]], ending with the first zero subspace.
    pub fn descending_central_series(&self) -> Vec<Subspace> {
        let full = Subspace::full(self.dim);
        let mut series = vec![full.clone()];
        while !series.last().unwrap().is_zero() {
            let next = self.bracket_span(&full, series.last().unwrap());
            if next == *series.last().unwrap() {
                break;
            }
            series.push(next);
        }
        series
    }

    pub fn derived(&self) -> Subspace {
        let full = Subspace::full(self.dim);
        self.bracket_span(&full, &full)
    }

    fn jacobi_holds(&self) -> bool {
        let n = self.dim;
        for i in 0..n {
            for j in i + 1..n {
                for k in j + 1..n {
                    let (a, b, c) = (unit(n, i), unit(n, j), unit(n, k));
                    let t1 = self.bracket_unchecked(&a, &self.bracket_unchecked(&b, &c));
                    let t2 = self.bracket_unchecked(&b, &self.bracket_unchecked(&c, &a));
                    let t3 = self.bracket_unchecked(&c, &self.bracket_unchecked(&a, &b));
                    if t1
                        .iter()
                        .zip(&t2)
                        .zip(&t3)
                        .any(|((x, y), z)| !(x.clone() + y.clone() + z.clone()).is_zero())
                    {
                        return false;
                    }
                }
            }
        }
        true
    }

    /// Re-checks antisymmetry, Jacobi and nilpotency from the stored constants.
    pub fn check(&self) -> AlgebraCheck {
        let dense = self.dense_constants();
        let n = self.dim;
        let mut antisymmetric = true;
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    if dense[i][j][k] != -dense[j][i][k].clone() {
                        antisymmetric = false;
                    }
                }
            }
        }
        let series = self.descending_central_series();
        AlgebraCheck {
            antisymmetric,
            jacobi: self.jacobi_holds(),
            step: self.step(),
            central_series_dims: series.iter().map(|s| s.dim()).collect(),
        }
    }
}

fn all_words(g: usize, len: usize) -> Vec<Vec<u8>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|w| {
                (0..g as u8).map(move |l| {
                    let mut v = w.clone();
                    v.push(l);
                    v
                })
            })
            .collect();
    }
    out
}

pub fn value_to_q(v: &Value) -> Result<Q> {
    match v {
        Value::String(s) => parse_q(s),
        Value::Number(n) => parse_q(&n.to_string()),
        _ => Err(Error::Parse(format!("expected a number, got {v}"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{qr, qvec};

    #[test]
    fn heisenberg_bracket_and_product() {
        let h = NilpotentAlgebra::heisenberg3();
        assert_eq!(
            h.bracket(&qvec(&[1, 0, 0]), &qvec(&[0, 1, 0])).unwrap(),
            qvec(&[0, 0, 1])
        );
        let x = qvec(&[2, -1, 3]);
        assert_eq!(h.bracket(&x, &x).unwrap(), qvec(&[0, 0, 0]));
        assert_eq!(
            h.bch(&qvec(&[1, 0, 0]), &qvec(&[0, 1, 0])).unwrap(),
            vec![q(1), q(1), qr(1, 2)]
        );
        assert_eq!(h.bch(&x, &qvec(&[0, 0, 0])).unwrap(), x);
        let e1 = qvec(&[1, 0, 0]);
        let e2 = qvec(&[0, 1, 0]);
        let e3 = qvec(&[0, 0, 1]);
        let l = h.bch(&h.bch(&e1, &e2).unwrap(), &e3).unwrap();
        let r = h.bch(&e1, &h.bch(&e2, &e3).unwrap()).unwrap();
        assert_eq!(l, r);
        assert_eq!(l, vec![q(1), q(1), qr(3, 2)]);
        let commutator = h
            .multi_product(&[e1.clone(), e2.clone(), qvec(&[-1, 0, 0]), qvec(&[0, -1, 0])])
            .unwrap();
        assert_eq!(commutator, qvec(&[0, 0, 1]));
        assert_eq!(h.multi_product(&[x.clone()]).unwrap(), x);
        assert!(h.multi_product::<Q>(&[]).is_err());
        assert!(h.bracket(&qvec(&[1, 0]), &e1).is_err());
    }

    #[test]
    fn abelian_is_sum() {
        let a = NilpotentAlgebra::abelian(2);
        assert_eq!(
            a.bracket(&qvec(&[1, 2]), &qvec(&[3, 4])).unwrap(),
            qvec(&[0, 0])
        );
        assert_eq!(
            a.multi_product(&[qvec(&[1, 2]), qvec(&[3, 4]), qvec(&[-1, 1])])
                .unwrap(),
            qvec(&[3, 7])
        );
        assert_eq!(a.step(), 1);
    }

    #[test]
    fn central_series_examples() {
        let h = NilpotentAlgebra::heisenberg3();
        let s = h.descending_central_series();
        assert_eq!(s.iter().map(|x| x.dim()).collect::<Vec<_>>(), vec![3, 1, 0]);
        assert!(s[1].contains(&qvec(&[0, 0, 1])));
        assert_eq!(
            NilpotentAlgebra::abelian(3)
                .descending_central_series()
                .iter()
                .map(|x| x.dim())
                .collect::<Vec<_>>(),
            vec![3, 0]
        );
        let f = NilpotentAlgebra::free_nilpotent(2, 2).unwrap();
        assert_eq!(
            f.descending_central_series()
                .iter()
                .map(|x| x.dim())
                .collect::<Vec<_>>(),
            vec![3, 1, 0]
        );
    }

    #[test]
    fn free_nilpotent_dimensions() {
        let dims: Vec<usize> = [(2, 3), (2, 4), (3, 2), (3, 3), (3, 4)]
            .iter()
            .map(|&(g, s)| NilpotentAlgebra::free_nilpotent(g, s).unwrap().dim())
            .collect();
        assert_eq!(dims, vec![5, 8, 6, 14, 32]);
        assert_eq!(NilpotentAlgebra::free_nilpotent(3, 4).unwrap().step(), 4);
        assert!(NilpotentAlgebra::free_nilpotent(4, 2).is_err());
    }

    #[test]
    fn rejects_bad_algebras() {
        let bad_jacobi = NilpotentAlgebra::new(
            "bad",
            3,
            &[(0, 1, qvec(&[0, 0, 1])), (1, 2, qvec(&[1, 0, 0]))],
            None,
        );
        assert!(bad_jacobi.is_err());
        let so3 = NilpotentAlgebra::new(
            "so3",
            3,
            &[
                (0, 1, qvec(&[0, 0, 1])),
                (1, 2, qvec(&[1, 0, 0])),
                (2, 0, qvec(&[0, 1, 0])),
            ],
            None,
        );
        assert!(matches!(so3, Err(Error::InvalidAlgebra(_))));
        let inconsistent = NilpotentAlgebra::new(
            "x",
            3,
            &[(0, 1, qvec(&[0, 0, 1])), (1, 0, qvec(&[0, 0, 1]))],
            None,
        );
        assert!(inconsistent.is_err());
    }

    #[test]
    fn json_roundtrip() {
        let text = r#"{"dim": 3, "step": 2, "brackets": [[1, 2, [0, 0, "1"]]]}"#;
        let h = NilpotentAlgebra::from_json(text).unwrap();
        assert_eq!(h, NilpotentAlgebra::heisenberg3());
        let again = NilpotentAlgebra::from_json(&h.to_json().to_string()).unwrap();
        assert_eq!(again, h);
        assert!(NilpotentAlgebra::from_json(
            r#"{"dim": 3, "step": 3, "brackets": [[1, 2, [0, 0, 1]]]}"#
        )
        .is_err());
        assert!(
            NilpotentAlgebra::from_json(r#"{"dim": 3, "brackets": [[0, 2, [0, 0, 1]]]}"#).is_err()
        );
        assert!(NilpotentAlgebra::from_json("{").is_err());
        let f = NilpotentAlgebra::builtin("free-nilpotent(2, 3)").unwrap();
        assert_eq!(f.dim(), 5);
        assert!(NilpotentAlgebra::builtin("sl2").is_err());
    }

    #[test]
    fn filiform_product_associative() {
        let f = NilpotentAlgebra::filiform4();
        assert_eq!(f.step(), 3);
        let x = vec![qr(1, 2), q(-1), q(2), q(0)];
        let y = vec![q(1), qr(1, 3), q(0), q(1)];
        let z = vec![q(-2), q(1), qr(1, 5), q(3)];
        let l = f.bch(&f.bch(&x, &y).unwrap(), &z).unwrap();
        let r = f.bch(&x, &f.bch(&y, &z).unwrap()).unwrap();
        assert_eq!(l, r);
        assert_eq!(f.bch(&x, &f.inverse(&x)).unwrap(), vec![q(0); 4]);
    }

    #[test]
    fn f64_fast_path_matches_exact() {
        for alg in [
            NilpotentAlgebra::heisenberg3(),
            NilpotentAlgebra::filiform4(),
            NilpotentAlgebra::free_nilpotent(2, 4).unwrap(),
        ] {
            let n = alg.dim();
            let x: Vec<f64> = (0..n).map(|i| 0.3 * i as f64 - 0.7).collect();
            let y: Vec<f64> = (0..n).map(|i| 0.5 - 0.2 * i as f64).collect();
            let exact = alg.bch(&x, &y).unwrap();
            let mut scratch = vec![0.0; alg.bch_scratch_len()];
            let mut out = vec![0.0; n];
            alg.bch_f64_into(&x, &y, &mut scratch, &mut out);
            for (a, b) in exact.iter().zip(&out) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }
}
