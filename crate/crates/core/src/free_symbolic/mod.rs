//! Truncated free associative algebra over the rationals, Dynkin's product
//! polynomial and evaluation of Lie polynomials on concrete nilpotent algebras.

mod pathswap;

pub use pathswap::{
    path_swap_operator, verify_path_swap, verify_path_swap_free, BlockSystem, FElement,
    PathSwapContext, PathSwapReport, PermCombo,
};

use std::collections::{BTreeSet, HashMap};

use num_traits::{One, Zero};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::lie_core::NilpotentAlgebra;
use crate::scalar::{format_q, q, Scalar, Q};

pub type Word = Vec<u8>;

pub const DEFAULT_TERM_BUDGET: u128 = 10_000_000;

/// Rational combination of words of length at most `max_len` over `n_letters` letters.
#[derive(Debug, Clone, PartialEq)]
pub struct FreePoly {
    n_letters: usize,
    max_len: usize,
    terms: HashMap<Word, Q>,
}

/// Number of words of length 1..=s over n letters.
pub fn word_count(n: usize, s: usize) -> u128 {
    let n = n as u128;
    let mut total = 0u128;
    let mut p = 1u128;
    for _ in 0..s {
        p = p.saturating_mul(n);
        total = total.saturating_add(p);
    }
    total
}

fn check_budget(n: usize, s: usize, budget: u128) -> Result<()> {
    let estimate = word_count(n, s);
    if estimate > budget {
        return Err(Error::Budget {
            estimate,
            limit: budget,
        });
    }
    Ok(())
}

impl FreePoly {
    pub fn zero(n_letters: usize, max_len: usize) -> Self {
        assert!(n_letters <= 256, "at most 256 letters");
        FreePoly {
            n_letters,
            max_len,
            terms: HashMap::new(),
        }
    }

    pub fn one(n_letters: usize, max_len: usize) -> Self {
        let mut p = Self::zero(n_letters, max_len);
        p.add_term(Vec::new(), Q::one());
        p
    }

    /// The letter `u_i` (0-based).
    pub fn letter(n_letters: usize, max_len: usize, i: usize) -> Self {
        assert!(i < n_letters);
        let mut p = Self::zero(n_letters, max_len);
        if max_len >= 1 {
            p.add_term(vec![i as u8], Q::one());
        }
        p
    }

    pub fn from_terms<I: IntoIterator<Item = (Word, Q)>>(
        n_letters: usize,
        max_len: usize,
        it: I,
    ) -> Self {
        let mut p = Self::zero(n_letters, max_len);
        for (w, c) in it {
            p.add_term(w, c);
        }
        p
    }

    pub fn n_letters(&self) -> usize {
        self.n_letters
    }

    pub fn max_len(&self) -> usize {
        self.max_len
    }

    pub fn terms(&self) -> &HashMap<Word, Q> {
        &self.terms
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, w: &[u8]) -> Q {
        self.terms.get(w).cloned().unwrap_or_else(Q::zero)
    }

    /// Adds `c·w`, dropping words longer than the truncation length.
    pub fn add_term(&mut self, w: Word, c: Q) {
        if w.len() > self.max_len || c.is_zero() {
            return;
        }
        debug_assert!(w.iter().all(|&l| (l as usize) < self.n_letters));
        match self.terms.entry(w) {
            std::collections::hash_map::Entry::Occupied(mut e) => {
                *e.get_mut() += c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
            std::collections::hash_map::Entry::Vacant(e) => {
                e.insert(c);
            }
        }
    }

    fn compatible(&self, other: &FreePoly) {
        assert_eq!(self.n_letters, other.n_letters, "letter count mismatch");
    }

    pub fn add(&self, other: &FreePoly) -> FreePoly {
        self.compatible(other);
        let mut out = self.clone();
        out.max_len = self.max_len.min(other.max_len);
        out.terms.retain(|w, _| w.len() <= out.max_len);
        for (w, c) in &other.terms {
            out.add_term(w.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &FreePoly) -> FreePoly {
        self.add(&other.scale(&-Q::one()))
    }

    pub fn scale(&self, c: &Q) -> FreePoly {
        if c.is_zero() {
            return Self::zero(self.n_letters, self.max_len);
        }
        FreePoly {
            n_letters: self.n_letters,
            max_len: self.max_len,
            terms: self.terms.iter().map(|(w, x)| (w.clone(), x * c)).collect(),
        }
    }

    /// Truncated product.
    pub fn mul(&self, other: &FreePoly) -> FreePoly {
        self.compatible(other);
        let s = self.max_len.min(other.max_len);
        let mut by_len: Vec<Vec<(&Word, &Q)>> = vec![Vec::new(); s + 1];
        for (w, c) in &other.terms {
            if w.len() <= s {
                by_len[w.len()].push((w, c));
            }
        }
        let left: Vec<(&Word, &Q)> = self.terms.iter().filter(|(w, _)| w.len() <= s).collect();
        let partial = |chunk: &[(&Word, &Q)]| {
            let mut acc = FreePoly::zero(self.n_letters, s);
            for (w1, c1) in chunk {
                for bucket in by_len.iter().take(s - w1.len() + 1) {
                    for (w2, c2) in bucket {
                        let mut w = Vec::with_capacity(w1.len() + w2.len());
                        w.extend_from_slice(w1);
                        w.extend_from_slice(w2);
                        acc.add_term(w, *c1 * *c2);
                    }
                }
            }
            acc
        };
        if left.len() * other.terms.len() < 50_000 {
            return partial(&left);
        }
        left.par_chunks(256)
            .map(partial)
            .reduce(|| FreePoly::zero(self.n_letters, s), |a, b| a.add(&b))
    }

    pub fn bracket(&self, other: &FreePoly) -> FreePoly {
        self.mul(other).sub(&other.mul(self))
    }

    pub fn constant_term(&self) -> Q {
        self.coeff(&[])
    }

    /// exp(p) for p without constant term.
    pub fn exp(&self) -> Result<FreePoly> {
        if !self.constant_term().is_zero() {
            return Err(Error::InvalidArgument(
                "exp needs a polynomial without constant term".into(),
            ));
        }
        let mut out = FreePoly::one(self.n_letters, self.max_len);
        let mut power = FreePoly::one(self.n_letters, self.max_len);
        for k in 1..=self.max_len {
            power = power.mul(self).scale(&Q::new(1.into(), (k as i64).into()));
            if power.is_zero() {
                break;
            }
            out = out.add(&power);
        }
        Ok(out)
    }

    /// log(p) for p with constant term 1.
    pub fn log(&self) -> Result<FreePoly> {
        if self.constant_term() != Q::one() {
            return Err(Error::InvalidArgument("log needs constant term 1".into()));
        }
        let mut y = self.clone();
        y.terms.remove(&Vec::new());
        let mut out = FreePoly::zero(self.n_letters, self.max_len);
        let mut power = FreePoly::one(self.n_letters, self.max_len);
        for k in 1..=self.max_len {
            power = power.mul(&y);
            if power.is_zero() {
                break;
            }
            let sign = if k % 2 == 1 { 1 } else { -1 };
            out = out.add(&power.scale(&Q::new(sign.into(), (k as i64).into())));
        }
        Ok(out)
    }

    /// Component of word length exactly `r`.
    pub fn homogeneous_part(&self, r: usize) -> FreePoly {
        self.filter(|w| w.len() == r)
    }

    pub fn filter<F: Fn(&[u8]) -> bool>(&self, keep: F) -> FreePoly {
        FreePoly {
            n_letters: self.n_letters,
            max_len: self.max_len,
            terms: self
                .terms
                .iter()
                .filter(|(w, _)| keep(w))
                .map(|(w, c)| (w.clone(), c.clone()))
                .collect(),
        }
    }

    /// Projection onto words whose support (set of letters) is exactly `set`.
    pub fn support_projection(&self, set: &[usize]) -> FreePoly {
        let target: BTreeSet<u8> = set.iter().map(|&i| i as u8).collect();
        self.filter(|w| support(w) == target)
    }

    /// Sets every letter outside `set` to zero (words with support inside `set` survive).
    pub fn restrict_letters(&self, set: &[usize]) -> FreePoly {
        let mut allowed = vec![false; self.n_letters];
        for &i in set {
            allowed[i] = true;
        }
        self.filter(|w| w.iter().all(|&l| allowed[l as usize]))
    }

    /// Sum of the projections onto supports of size `t`.
    pub fn support_size_part(&self, t: usize) -> FreePoly {
        self.filter(|w| support(w).len() == t)
    }

    /// Relabels letters: `u_i ↦ u_{perm[i]}`.
    pub fn permute(&self, perm: &[usize]) -> FreePoly {
        assert_eq!(perm.len(), self.n_letters);
        FreePoly {
            n_letters: self.n_letters,
            max_len: self.max_len,
            terms: self
                .terms
                .iter()
                .map(|(w, c)| {
                    (
                        w.iter().map(|&l| perm[l as usize] as u8).collect(),
                        c.clone(),
                    )
                })
                .collect(),
        }
    }

    /// Substitutes letter `i` by `images[i]` (a letter index of the target algebra on `n_target` letters).
    pub fn relabel(&self, n_target: usize, images: &[usize]) -> FreePoly {
        let mut out = FreePoly::zero(n_target, self.max_len);
        for (w, c) in &self.terms {
            out.add_term(
                w.iter().map(|&l| images[l as usize] as u8).collect(),
                c.clone(),
            );
        }
        out
    }

    /// Bracketing map: each word is replaced by its left-normed commutator.
    pub fn bracketing_l(&self) -> FreePoly {
        let mut out = FreePoly::zero(self.n_letters, self.max_len);
        for (w, c) in &self.terms {
            for (v, sign) in left_normed_expansion(w) {
                out.add_term(v, if sign > 0 { c.clone() } else { -c.clone() });
            }
        }
        out
    }

    /// Periodization from `t` letters to `n` letters: sum over increasing index tuples.
    pub fn periodize(&self, n: usize) -> FreePoly {
        let t = self.n_letters;
        let mut out = FreePoly::zero(n, self.max_len);
        for idx in increasing_tuples(n, t) {
            for (w, c) in &self.terms {
                out.add_term(
                    w.iter().map(|&l| idx[l as usize] as u8).collect(),
                    c.clone(),
                );
            }
        }
        out
    }

    /// Terms sorted by word, for deterministic output.
    pub fn sorted_terms(&self) -> Vec<(Word, Q)> {
        let mut v: Vec<(Word, Q)> = self
            .terms
            .iter()
            .map(|(w, c)| (w.clone(), c.clone()))
            .collect();
        v.sort_by(|a, b| a.0.len().cmp(&b.0.len()).then_with(|| a.0.cmp(&b.0)));
        v
    }

    /// Canonical text dump: one `word<TAB>num/den` line per term, 1-based letters joined by commas.
    pub fn to_tsv(&self) -> String {
        let mut s = String::new();
        for (w, c) in self.sorted_terms() {
            let word = if w.is_empty() {
                "-".to_string()
            } else {
                w.iter()
                    .map(|l| (l + 1).to_string())
                    .collect::<Vec<_>>()
                    .join(",")
            };
            let c = if c.is_integer() {
                format!("{}/1", c.numer())
            } else {
                format_q(&c)
            };
            s.push_str(&word);
            s.push('\t');
            s.push_str(&c);
            s.push('\n');
        }
        s
    }

    /// Evaluates a Lie polynomial on elements of a nilpotent algebra.
    pub fn eval<S: Scalar>(&self, alg: &NilpotentAlgebra, inputs: &[Vec<S>]) -> Result<Vec<S>> {
        LieProgram::compile(self).eval(alg, inputs)
    }
}

fn support(w: &[u8]) -> BTreeSet<u8> {
    w.iter().copied().collect()
}

/// Expansion of the left-normed bracket `[..[[w1,w2],w3]..,wr]` into signed words.
pub fn left_normed_expansion(w: &[u8]) -> Vec<(Word, i32)> {
    if w.is_empty() {
        return Vec::new();
    }
    let mut cur: Vec<(Word, i32)> = vec![(vec![w[0]], 1)];
    for &l in &w[1..] {
        let mut next = Vec::with_capacity(cur.len() * 2);
        for (v, s) in &cur {
            let mut a = v.clone();
            a.push(l);
            next.push((a, *s));
            let mut b = Vec::with_capacity(v.len() + 1);
            b.push(l);
            b.extend_from_slice(v);
            next.push((b, -s));
        }
        cur = next;
    }
    cur
}

pub fn increasing_tuples(n: usize, t: usize) -> Vec<Vec<usize>> {
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(t);
    fn rec(n: usize, t: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == t {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            if n - i < t - cur.len() {
                break;
            }
            cur.push(i);
            rec(n, t, i + 1, cur, out);
            cur.pop();
        }
    }
    rec(n, t, 0, &mut cur, &mut out);
    out
}

/// exp(u_1)·exp(u_2)⋯exp(u_N), truncated. The coefficient of a word is nonzero only
/// for weakly increasing words, where it is the product of 1/m! over letter multiplicities.
pub fn exp_product(n: usize, s: usize) -> FreePoly {
    let mut out = FreePoly::zero(n, s);
    let mut fact = vec![Q::one()];
    for k in 1..=s {
        let prev = fact[k - 1].clone();
        fact.push(prev * q(k as i64));
    }
    fn rec(n: usize, s: usize, start: usize, w: &mut Word, out: &mut FreePoly, fact: &[Q]) {
        let mut c = Q::one();
        let mut i = 0;
        while i < w.len() {
            let mut j = i;
            while j < w.len() && w[j] == w[i] {
                j += 1;
            }
            c /= &fact[j - i];
            i = j;
        }
        out.add_term(w.clone(), c);
        if w.len() == s {
            return;
        }
        for l in start..n {
            w.push(l as u8);
            rec(n, s, l, w, out, fact);
            w.pop();
        }
    }
    rec(n, s, 0, &mut Vec::new(), &mut out, &fact);
    out
}

/// Dynkin's product polynomial: log(exp(u_1)⋯exp(u_N)) truncated at length `s`,
/// the free-algebra element whose evaluation is `x_1 * ⋯ * x_N`.
pub fn dynkin_pi(n: usize, s: usize) -> Result<FreePoly> {
    dynkin_pi_with_budget(n, s, DEFAULT_TERM_BUDGET)
}

pub fn dynkin_pi_with_budget(n: usize, s: usize, budget: u128) -> Result<FreePoly> {
    if n == 0 || s == 0 {
        return Err(Error::InvalidArgument(
            "dynkin_pi needs N >= 1 and s >= 1".into(),
        ));
    }
    if n > 256 {
        return Err(Error::InvalidArgument("at most 256 letters".into()));
    }
    check_budget(n, s, budget)?;
    exp_product(n, s).log()
}

/// Π_N evaluated by iterating the two-letter polynomial: Π_N = Π_2(Π_{N-1}, u_N).
pub fn dynkin_pi_iterated(n: usize, s: usize) -> Result<FreePoly> {
    dynkin_pi_iterated_with_budget(n, s, DEFAULT_TERM_BUDGET)
}

pub fn dynkin_pi_iterated_with_budget(n: usize, s: usize, budget: u128) -> Result<FreePoly> {
    if n == 0 || s == 0 {
        return Err(Error::InvalidArgument(
            "dynkin_pi needs N >= 1 and s >= 1".into(),
        ));
    }
    check_budget(n, s, budget)?;
    let mut acc = FreePoly::letter(n, s, 0);
    for i in 1..n {
        let e = acc.exp()?.mul(&FreePoly::letter(n, s, i).exp()?);
        acc = e.log()?;
    }
    Ok(acc)
}

/// The support-size-t part of Π_N is the periodization of Π_t's full-support part.
pub fn verify_periodization(n: usize, t: usize, s: usize) -> Result<bool> {
    if t == 0 || t > n.min(s) {
        return Err(Error::InvalidArgument(format!(
            "need 1 <= t <= min(N, s), got t={t}"
        )));
    }
    let pi_n = dynkin_pi(n, s)?;
    let pi_t = dynkin_pi(t, s)?;
    let lhs = pi_n.support_size_part(t);
    let rhs = pi_t.support_size_part(t).periodize(n);
    Ok(lhs == rhs)
}

#[derive(Debug, Clone)]
struct Node {
    parent: Option<usize>,
    letter: usize,
    depth: usize,
}

/// A Lie polynomial compiled into a tree of left-normed brackets.
///
/// Uses the Dynkin–Specht–Wever identity: a homogeneous Lie element `P` of degree `r`
/// satisfies `P = (1/r)·L(P)`, so `P(x) = Σ_w (c_w/|w|)·[..[x_{w1},x_{w2}],..,x_{wr}]`.
#[derive(Debug, Clone)]
pub struct LieProgram {
    n_inputs: usize,
    nodes: Vec<Node>,
    outputs: Vec<(usize, Q)>,
    outputs_f64: Vec<(usize, f64)>,
}

impl LieProgram {
    pub fn compile(p: &FreePoly) -> LieProgram {
        let mut nodes: Vec<Node> = Vec::new();
        let mut index: HashMap<Word, usize> = HashMap::new();
        let mut coeffs: HashMap<usize, Q> = HashMap::new();
        for (w, c) in p.sorted_terms() {
            if w.is_empty() {
                continue;
            }
            let mut w = w;
            let mut c = c / q(w.len() as i64);
            if w.len() >= 2 {
                if w[0] == w[1] {
                    continue;
                }
                if w[0] > w[1] {
                    w.swap(0, 1);
                    c = -c;
                }
            }
            let mut parent = None;
            for d in 1..=w.len() {
                let key = w[..d].to_vec();
                let id = match index.get(&key) {
                    Some(&id) => id,
                    None => {
                        let id = nodes.len();
                        nodes.push(Node {
                            parent,
                            letter: w[d - 1] as usize,
                            depth: d,
                        });
                        index.insert(key, id);
                        id
                    }
                };
                parent = Some(id);
            }
            *coeffs.entry(parent.unwrap()).or_insert_with(Q::zero) += c;
        }
        let mut outputs: Vec<(usize, Q)> =
            coeffs.into_iter().filter(|(_, c)| !c.is_zero()).collect();
        outputs.sort_by_key(|(i, _)| *i);
        let outputs_f64 = outputs
            .iter()
            .map(|(i, c)| (*i, crate::scalar::q_to_f64(c)))
            .collect();
        LieProgram {
            n_inputs: p.n_letters(),
            nodes,
            outputs,
            outputs_f64,
        }
    }

    pub fn n_inputs(&self) -> usize {
        self.n_inputs
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn eval<S: Scalar>(&self, alg: &NilpotentAlgebra, inputs: &[Vec<S>]) -> Result<Vec<S>> {
        if inputs.len() != self.n_inputs {
            return Err(Error::DimensionMismatch {
                expected: self.n_inputs,
                got: inputs.len(),
            });
        }
        let n = alg.dim();
        for x in inputs {
            if x.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    got: x.len(),
                });
            }
        }
        let zero_input: Vec<bool> = inputs
            .iter()
            .map(|x| x.iter().all(|c| c.is_zero()))
            .collect();
        let mut values: Vec<Option<Vec<S>>> = Vec::with_capacity(self.nodes.len());
        for node in &self.nodes {
            let v = if node.depth > alg.step() || zero_input[node.letter] {
                None
            } else {
                match node.parent {
                    None => Some(inputs[node.letter].clone()),
                    Some(p) => match &values[p] {
                        None => None,
                        Some(pv) => {
                            let b = alg.bracket_unchecked(pv, &inputs[node.letter]);
                            if b.iter().all(|c| c.is_zero()) {
                                None
                            } else {
                                Some(b)
                            }
                        }
                    },
                }
            };
            values.push(v);
        }
        let mut out = vec![S::zero(); n];
        for (i, c) in &self.outputs {
            if let Some(v) = &values[*i] {
                let c = S::from_q(c);
                for (o, x) in out.iter_mut().zip(v) {
                    *o = o.clone() + c.clone() * x.clone();
                }
            }
        }
        Ok(out)
    }

    /// Allocation-free double evaluation; `scratch` must hold `node_count()·dim` values.
    pub fn eval_f64_into(
        &self,
        alg: &NilpotentAlgebra,
        inputs: &[&[f64]],
        scratch: &mut [f64],
        out: &mut [f64],
    ) {
        let n = alg.dim();
        debug_assert!(scratch.len() >= self.nodes.len() * n);
        for (id, node) in self.nodes.iter().enumerate() {
            let (done, rest) = scratch.split_at_mut(id * n);
            let dst = &mut rest[..n];
            if node.depth > alg.step() {
                dst.fill(0.0);
                continue;
            }
            match node.parent {
                None => dst.copy_from_slice(inputs[node.letter]),
                Some(p) => {
                    alg.bracket_f64_into(&done[p * n..(p + 1) * n], inputs[node.letter], dst)
                }
            }
        }
        out.fill(0.0);
        for (i, c) in &self.outputs_f64 {
            let v = &scratch[i * n..(i + 1) * n];
            for (o, x) in out.iter_mut().zip(v) {
                *o += c * x;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lie_core::NilpotentAlgebra;
    use crate::scalar::{qr, qvec};

    fn w(letters: &[u8]) -> Word {
        letters.to_vec()
    }

    #[test]
    fn bracketing_examples() {
        let mut p = FreePoly::zero(3, 3);
        p.add_term(w(&[0, 1]), Q::one());
        let l = p.bracketing_l();
        assert_eq!(l.len(), 2);
        assert_eq!(l.coeff(&[0, 1]), q(1));
        assert_eq!(l.coeff(&[1, 0]), q(-1));
        let u1 = FreePoly::letter(3, 3, 0);
        assert_eq!(u1.bracketing_l(), u1);
        let mut p3 = FreePoly::zero(3, 3);
        p3.add_term(w(&[0, 1, 2]), Q::one());
        let l3 = p3.bracketing_l();
        let (a, b, c) = (
            FreePoly::letter(3, 3, 0),
            FreePoly::letter(3, 3, 1),
            FreePoly::letter(3, 3, 2),
        );
        assert_eq!(l3, a.bracket(&b).bracket(&c));
        assert_eq!(l3.len(), 4);
        assert!(l3.terms().values().all(|c| *c == q(1) || *c == q(-1)));
    }

    #[test]
    fn pi_small_cases() {
        let p1 = dynkin_pi(1, 4).unwrap();
        assert_eq!(p1, FreePoly::letter(1, 4, 0));
        let p2 = dynkin_pi(2, 3).unwrap();
        let mut uv = FreePoly::zero(2, 3);
        uv.add_term(w(&[0, 1]), Q::one());
        assert_eq!(p2.homogeneous_part(2), uv.bracketing_l().scale(&qr(1, 2)));
        let p3 = dynkin_pi(3, 3).unwrap();
        let mut expect = FreePoly::zero(3, 3);
        expect.add_term(w(&[0, 1, 2]), Q::one());
        expect.add_term(w(&[2, 1, 0]), Q::one());
        let expect = expect.bracketing_l().scale(&qr(1, 6));
        assert_eq!(p3.homogeneous_part(3).support_size_part(3), expect);
        let sum: FreePoly = (0..3).fold(FreePoly::zero(3, 3), |a, i| {
            a.add(&FreePoly::letter(3, 3, i))
        });
        assert_eq!(p3.homogeneous_part(1), sum);
    }

    #[test]
    fn bch_degree_three_coefficients() {
        let p = dynkin_pi(2, 3).unwrap();
        let x = FreePoly::letter(2, 3, 0);
        let y = FreePoly::letter(2, 3, 1);
        let xy = x.bracket(&y);
        let expect = x
            .add(&y)
            .add(&xy.scale(&qr(1, 2)))
            .add(&x.bracket(&xy).scale(&qr(1, 12)))
            .sub(&y.bracket(&xy).scale(&qr(1, 12)));
        assert_eq!(p, expect);
    }

    #[test]
    fn iterated_matches_direct() {
        for (n, s) in [(3, 3), (4, 4), (5, 3)] {
            assert_eq!(dynkin_pi(n, s).unwrap(), dynkin_pi_iterated(n, s).unwrap());
        }
    }

    #[test]
    fn projections() {
        let p3 = dynkin_pi(3, 3).unwrap();
        let restricted = p3.restrict_letters(&[0, 2]);
        let p2 = dynkin_pi(2, 3).unwrap().relabel(3, &[0, 2]);
        assert_eq!(restricted, p2);
        assert_eq!(p3.support_projection(&[0, 2]), p2.support_size_part(2));
        assert!(p3.support_projection(&[]).is_zero());
        assert_eq!(
            p3.homogeneous_part(2).bracketing_l(),
            p3.bracketing_l().homogeneous_part(2)
        );
        assert_eq!(
            p3.support_projection(&[0, 1]).bracketing_l(),
            p3.bracketing_l().support_projection(&[0, 1])
        );
    }

    #[test]
    fn periodization_examples() {
        assert!(verify_periodization(3, 2, 3).unwrap());
        assert!(verify_periodization(4, 4, 4).unwrap());
        assert!(verify_periodization(5, 3, 4).unwrap());
        assert!(verify_periodization(2, 3, 3).is_err());
    }

    #[test]
    fn budget_guard() {
        assert!(matches!(
            dynkin_pi_with_budget(30, 5, 1000),
            Err(Error::Budget { .. })
        ));
        assert_eq!(word_count(2, 3), 14);
    }

    #[test]
    fn eval_matches_bch() {
        let h = NilpotentAlgebra::heisenberg3();
        let p = dynkin_pi(2, 2).unwrap();
        let v = p.eval(&h, &[qvec(&[1, 0, 0]), qvec(&[0, 1, 0])]).unwrap();
        assert_eq!(v, vec![q(1), q(1), qr(1, 2)]);
        let pf = p
            .eval(&h, &[vec![1.0, 0.0, 0.0], vec![0.0, 1.0, 0.0]])
            .unwrap();
        assert_eq!(pf, vec![1.0, 1.0, 0.5]);
    }

    #[test]
    fn permutation_action_matches_input_permutation() {
        let alg = NilpotentAlgebra::free_nilpotent(2, 3).unwrap();
        let p = dynkin_pi(3, 3).unwrap();
        let xs: Vec<Vec<Q>> = (0..3)
            .map(|i| {
                (0..alg.dim())
                    .map(|k| qr((i * 7 + k as i64 * 3) % 5 - 2, 1 + k as i64))
                    .collect()
            })
            .collect();
        let perm = [2usize, 0, 1];
        let lhs = p.permute(&perm).eval(&alg, &xs).unwrap();
        // (σR)(x) = R(x_{σ(1)}, ..., x_{σ(N)})
        let permuted: Vec<Vec<Q>> = (0..3).map(|i| xs[perm[i]].clone()).collect();
        let rhs = p.eval(&alg, &permuted).unwrap();
        assert_eq!(lhs, rhs);
    }

    #[test]
    fn tsv_is_sorted_and_stable() {
        let p = dynkin_pi(2, 2).unwrap();
        assert_eq!(p.to_tsv(), "1\t1/1\n2\t1/1\n1,2\t1/2\n2,1\t-1/2\n");
    }

    #[test]
    fn exp_log_roundtrip() {
        let x = FreePoly::letter(2, 4, 0).add(&FreePoly::letter(2, 4, 1).scale(&qr(2, 3)));
        assert_eq!(x.exp().unwrap().log().unwrap(), x);
    }
}
