//! Block permutation groups, the path-swap operators A_{σ,τ} and exact checks of
//! the three path-swap identities.

use std::collections::{BTreeMap, HashMap};

use num_traits::{One, Zero};

use super::{dynkin_pi_with_budget, FreePoly, DEFAULT_TERM_BUDGET};
use crate::error::{Error, Result};
use crate::lie_core::NilpotentAlgebra;
use crate::scalar::Q;

/// `[N]` cut into `n_prime` large blocks, each made of `2a-1` blocks of length `k`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlockSystem {
    a: usize,
    k: usize,
    n_prime: usize,
}

impl BlockSystem {
    pub fn new(a: usize, k: usize, n_prime: usize) -> Result<Self> {
        if a < 2 || k == 0 || n_prime == 0 {
            return Err(Error::InvalidArgument(format!(
                "block system needs a>=2, k>=1, N'>=1 (got {a},{k},{n_prime})"
            )));
        }
        let b = BlockSystem { a, k, n_prime };
        if b.n() > 256 {
            return Err(Error::InvalidArgument(
                "block system larger than 256 letters".into(),
            ));
        }
        Ok(b)
    }

    pub fn a(&self) -> usize {
        self.a
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn n_prime(&self) -> usize {
        self.n_prime
    }

    pub fn n(&self) -> usize {
        self.k * (2 * self.a - 1) * self.n_prime
    }

    pub fn large_len(&self) -> usize {
        self.k * (2 * self.a - 1)
    }

    /// Large block index and block index (0..2a-1) of a 0-based position.
    pub fn locate(&self, i: usize) -> (usize, usize) {
        (i / self.large_len(), (i % self.large_len()) / self.k)
    }

    pub fn type_of(&self, i: usize) -> usize {
        let (_, b) = self.locate(i);
        b.abs_diff(self.a - 1)
    }

    pub fn large_block(&self, j: usize) -> std::ops::Range<usize> {
        j * self.large_len()..(j + 1) * self.large_len()
    }

    /// Positions left of the central block in large block `j`.
    pub fn left_of_center(&self, j: usize) -> std::ops::Range<usize> {
        let start = j * self.large_len();
        start..start + (self.a - 1) * self.k
    }

    /// The involution ε_i^j exchanging the two type-i blocks of large block j (i in 1..a, j 0-based).
    pub fn generator_perm(&self, i: usize, j: usize) -> Vec<usize> {
        assert!(i >= 1 && i < self.a && j < self.n_prime);
        let mut p: Vec<usize> = (0..self.n()).collect();
        let base = j * self.large_len();
        let left = base + (self.a - 1 - i) * self.k;
        let right = base + (self.a - 1 + i) * self.k;
        for o in 0..self.k {
            p[left + o] = right + o;
            p[right + o] = left + o;
        }
        p
    }

    pub fn identity(&self) -> FElement {
        FElement {
            a: self.a,
            n_prime: self.n_prime,
            bits: vec![false; (self.a - 1) * self.n_prime],
        }
    }

    pub fn generator(&self, i: usize, j: usize) -> FElement {
        let mut e = self.identity();
        e.set(i, j, true);
        e
    }

    /// All 2^{N'(a-1)} elements of F.
    pub fn elements(&self) -> Vec<FElement> {
        let m = (self.a - 1) * self.n_prime;
        (0u64..1 << m)
            .map(|mask| FElement {
                a: self.a,
                n_prime: self.n_prime,
                bits: (0..m).map(|b| mask >> b & 1 == 1).collect(),
            })
            .collect()
    }

    fn check(&self, e: &FElement) -> Result<()> {
        if e.a != self.a || e.n_prime != self.n_prime || e.bits.len() != (self.a - 1) * self.n_prime
        {
            return Err(Error::InvalidArgument(
                "element does not belong to this block group".into(),
            ));
        }
        Ok(())
    }
}

/// Element of F = F_1 × ⋯ × F_{a-1}, recorded by which generators ε_i^j it contains.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct FElement {
    a: usize,
    n_prime: usize,
    bits: Vec<bool>,
}

impl FElement {
    fn idx(&self, i: usize, j: usize) -> usize {
        (i - 1) * self.n_prime + j
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[self.idx(i, j)]
    }

    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        let k = self.idx(i, j);
        self.bits[k] = v;
    }

    pub fn compose(&self, other: &FElement) -> FElement {
        FElement {
            a: self.a,
            n_prime: self.n_prime,
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(x, y)| x ^ y)
                .collect(),
        }
    }

    /// The F_i component σ_i.
    pub fn component(&self, i: usize) -> FElement {
        let mut e = FElement {
            a: self.a,
            n_prime: self.n_prime,
            bits: vec![false; self.bits.len()],
        };
        for j in 0..self.n_prime {
            e.set(i, j, self.get(i, j));
        }
        e
    }

    pub fn is_identity(&self) -> bool {
        self.bits.iter().all(|b| !b)
    }

    pub fn permutation(&self, b: &BlockSystem) -> Vec<usize> {
        let mut p: Vec<usize> = (0..b.n()).collect();
        for i in 1..self.a {
            for j in 0..self.n_prime {
                if self.get(i, j) {
                    let g = b.generator_perm(i, j);
                    p = p.iter().map(|&x| g[x]).collect();
                }
            }
        }
        p
    }

    /// Character of F sending every generator ε_i^j of large block `j` to −1, evaluated on σ^j.
    pub fn block_sign(&self, j: usize) -> i32 {
        let flips = (1..self.a).filter(|&i| self.get(i, j)).count();
        if flips % 2 == 0 {
            1
        } else {
            -1
        }
    }
}

/// Formal rational combination of permutations of [N].
#[derive(Debug, Clone, PartialEq)]
pub struct PermCombo {
    n: usize,
    terms: BTreeMap<Vec<usize>, Q>,
}

impl PermCombo {
    pub fn zero(n: usize) -> Self {
        PermCombo {
            n,
            terms: BTreeMap::new(),
        }
    }

    pub fn from_perm(p: Vec<usize>, c: Q) -> Self {
        let mut out = PermCombo::zero(p.len());
        out.add_term(p, c);
        out
    }

    pub fn identity(n: usize) -> Self {
        Self::from_perm((0..n).collect(), Q::one())
    }

    fn add_term(&mut self, p: Vec<usize>, c: Q) {
        if c.is_zero() {
            return;
        }
        let e = self.terms.entry(p.clone()).or_insert_with(Q::zero);
        *e += c;
        if e.is_zero() {
            self.terms.remove(&p);
        }
    }

    pub fn terms(&self) -> &BTreeMap<Vec<usize>, Q> {
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

    pub fn sub(&self, other: &PermCombo) -> PermCombo {
        let mut out = self.clone();
        for (p, c) in &other.terms {
            out.add_term(p.clone(), -c.clone());
        }
        out
    }

    /// Product in the group algebra: (π·ρ)(i) = π(ρ(i)).
    pub fn mul(&self, other: &PermCombo) -> PermCombo {
        let mut out = PermCombo::zero(self.n);
        for (p, c) in &self.terms {
            for (r, d) in &other.terms {
                out.add_term(r.iter().map(|&i| p[i]).collect(), c * d);
            }
        }
        out
    }

    /// Module action on the free algebra: σ u_i = u_{σ(i)}.
    pub fn apply(&self, poly: &FreePoly) -> FreePoly {
        let mut out = FreePoly::zero(poly.n_letters(), poly.max_len());
        for (p, c) in &self.terms {
            for (w, x) in poly.terms() {
                out.add_term(w.iter().map(|&l| p[l as usize] as u8).collect(), c * x);
            }
        }
        out
    }
}

/// A_{σ,τ} = Π_{i=1}^{a-1} (σ_i − τ_i), expanded into at most 2^{a-1} signed permutations.
pub fn path_swap_operator(b: &BlockSystem, sigma: &FElement, tau: &FElement) -> Result<PermCombo> {
    b.check(sigma)?;
    b.check(tau)?;
    let n = b.n();
    let mut acc = PermCombo::identity(n);
    for i in 1..b.a() {
        let f = PermCombo::from_perm(sigma.component(i).permutation(b), Q::one()).sub(
            &PermCombo::from_perm(tau.component(i).permutation(b), Q::one()),
        );
        acc = acc.mul(&f);
    }
    Ok(acc)
}

/// Precomputed pieces of Π_N used by the three identities.
#[derive(Debug, Clone)]
pub struct PathSwapContext {
    pub system: BlockSystem,
    pub step: usize,
    pub pi: FreePoly,
}

impl PathSwapContext {
    pub fn new(system: BlockSystem, step: usize) -> Result<Self> {
        Self::with_budget(system, step, DEFAULT_TERM_BUDGET)
    }

    pub fn with_budget(system: BlockSystem, step: usize, budget: u128) -> Result<Self> {
        if step < system.a() {
            return Err(Error::InvalidArgument(format!(
                "step {step} is below the bracket order a={}",
                system.a()
            )));
        }
        let pi = dynkin_pi_with_budget(system.n(), step, budget)?;
        Ok(PathSwapContext { system, step, pi })
    }

    fn types_of_word(&self, w: &[u8]) -> Vec<bool> {
        let mut seen = vec![false; self.system.a()];
        for &l in w {
            seen[self.system.type_of(l as usize)] = true;
        }
        seen
    }

    fn misses_a_type(&self, w: &[u8]) -> bool {
        let seen = self.types_of_word(w);
        (1..self.system.a()).any(|i| !seen[i])
    }

    fn within_large_block(&self, w: &[u8], j: usize) -> bool {
        let r = self.system.large_block(j);
        w.iter().all(|&l| r.contains(&(l as usize)))
    }

    fn one_per_block(&self, w: &[u8]) -> bool {
        let mut blocks: Vec<(usize, usize)> = Vec::new();
        let mut letters: Vec<u8> = w.to_vec();
        letters.sort_unstable();
        letters.dedup();
        for l in letters {
            let loc = self.system.locate(l as usize);
            if blocks.contains(&loc) {
                return false;
            }
            blocks.push(loc);
        }
        true
    }

    /// Parts A_{σ,τ} must annihilate: Π_{N,t}, Π_N^{[t]} for t < a, and the monomials missing a block type.
    fn annihilated_parts(&self) -> Vec<FreePoly> {
        let a = self.system.a();
        let mut v = Vec::new();
        for t in 1..a {
            v.push(self.pi.support_size_part(t));
            v.push(self.pi.homogeneous_part(t));
        }
        v.push(self.pi.filter(|w| self.misses_a_type(w)));
        v
    }

    fn localization_holds(&self, apply: &dyn Fn(&FreePoly) -> FreePoly) -> bool {
        let a = self.system.a();
        let pna = self.pi.support_size_part(a);
        let lhs = apply(&pna);
        let mut rhs = FreePoly::zero(pna.n_letters(), pna.max_len());
        let mut rhs_one = rhs.clone();
        for j in 0..self.system.n_prime() {
            let part = pna.filter(|w| self.within_large_block(w, j));
            rhs = rhs.add(&apply(&part));
            let restricted = part.filter(|w| self.one_per_block(w));
            rhs_one = rhs_one.add(&apply(&restricted));
        }
        lhs == rhs && lhs == rhs_one
    }

    /// A_{σ,τ} kills Π_{N,t}, Π_N^{[t]} (t ≤ a−1) and every monomial missing a type in [a−1].
    pub fn verify_annihilation(&self, sigma: &FElement, tau: &FElement) -> Result<bool> {
        let op = path_swap_operator(&self.system, sigma, tau)?;
        Ok(self
            .annihilated_parts()
            .iter()
            .all(|p| op.apply(p).is_zero()))
    }

    /// A_{σ,τ}Π_{N,a} only sees supports inside single large blocks, with one letter per block.
    pub fn verify_localization(&self, sigma: &FElement, tau: &FElement) -> Result<bool> {
        let op = path_swap_operator(&self.system, sigma, tau)?;
        Ok(self.localization_holds(&|p| op.apply(p)))
    }

    /// The bracket-value identity on a concrete algebra. For each large block j the block-local part
    /// must vanish when some σ_i^j = τ_i^j; otherwise it is evaluated on `inputs` with the entries left of the
    /// central block of B_j set to zero.
    pub fn verify_bracket_value(
        &self,
        sigma: &FElement,
        tau: &FElement,
        alg: &NilpotentAlgebra,
        inputs: &[Vec<Q>],
    ) -> Result<bool> {
        let b = &self.system;
        let a = b.a();
        if inputs.len() != b.n() {
            return Err(Error::DimensionMismatch {
                expected: b.n(),
                got: inputs.len(),
            });
        }
        let op = path_swap_operator(b, sigma, tau)?;
        let top = self.pi.homogeneous_part(a).support_size_part(a);
        for j in 0..b.n_prime() {
            let differs_everywhere = (1..a).all(|i| sigma.get(i, j) != tau.get(i, j));
            if !differs_everywhere {
                let local = self.pi.filter(|w| self.within_large_block(w, j));
                if !op.apply(&local).is_zero() {
                    return Ok(false);
                }
                continue;
            }
            let mut x = inputs.to_vec();
            for l in b.left_of_center(j) {
                x[l] = vec![Q::zero(); alg.dim()];
            }
            let local = top.filter(|w| self.within_large_block(w, j));
            let lhs = op.apply(&local).eval(alg, &x)?;
            let mut bars = vec![vec![Q::zero(); alg.dim()]; a];
            for l in b.large_block(j) {
                let t = b.type_of(l);
                for (acc, v) in bars[t].iter_mut().zip(&x[l]) {
                    *acc += v;
                }
            }
            let mut rhs = bars[0].clone();
            for bar in &bars[1..] {
                rhs = alg.bracket(&rhs, bar)?;
            }
            if sigma.block_sign(j) < 0 {
                rhs = rhs.into_iter().map(|c| -c).collect();
            }
            if lhs != rhs {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Annihilation and localization for every pair (σ, τ) ∈ F × F.
    ///
    /// F_i is an elementary abelian 2-group, so σ_i − τ_i = σ_i(1 − σ_iτ_i) and
    /// A_{σ,τ} = σ·B_ρ with ρ = στ and B_ρ = Π_i (1 − ρ_i). Since σ acts bijectively on
    /// words, A_{σ,τ}R = 0 iff B_ρR = 0 and the localization identity holds for (σ,τ) iff it holds
    /// for B_ρ; each of the |F| operators B_ρ is therefore checked once and shared by the
    /// |F| pairs with the same product.
    pub fn verify_annihilation_localization_all_pairs(&self) -> Result<(bool, bool, usize)> {
        let b = &self.system;
        let elems = b.elements();
        let targets = self.annihilated_parts();
        let mut cache: HashMap<FElement, (bool, bool)> = HashMap::new();
        for rho in &elems {
            let op = path_swap_operator(b, &b.identity(), rho)?;
            let l1 = targets.iter().all(|p| op.apply(p).is_zero());
            let l2 = self.localization_holds(&|p| op.apply(p));
            cache.insert(rho.clone(), (l1, l2));
        }
        let (mut ok1, mut ok2, mut pairs) = (true, true, 0usize);
        for s in &elems {
            for t in &elems {
                let (l1, l2) = cache[&s.compose(t)];
                ok1 &= l1;
                ok2 &= l2;
                pairs += 1;
            }
        }
        Ok((ok1, ok2, pairs))
    }
}

/// Summary of a full path-swap verification run.
#[derive(Debug, Clone, PartialEq, Eq, serde::Serialize)]
pub struct PathSwapReport {
    pub a: usize,
    pub k: usize,
    pub n_prime: usize,
    pub n: usize,
    pub step: usize,
    pub pi_terms: usize,
    pub pairs: usize,
    pub annihilation: bool,
    pub localization: bool,
    pub bracket_value: bool,
}

impl PathSwapReport {
    pub fn all_pass(&self) -> bool {
        self.annihilation && self.localization && self.bracket_value
    }
}

/// Runs all three identities over every (σ, τ) ∈ F × F; the bracket value is evaluated on `alg`
/// with the given inputs (one per letter).
pub fn verify_path_swap(
    b: &BlockSystem,
    step: usize,
    alg: &NilpotentAlgebra,
    inputs: &[Vec<Q>],
    budget: u128,
) -> Result<PathSwapReport> {
    let ctx = PathSwapContext::with_budget(b.clone(), step, budget)?;
    let (annihilation, localization, pairs) = ctx.verify_annihilation_localization_all_pairs()?;
    let elems = b.elements();
    let mut bracket_value = true;
    for s in &elems {
        for t in &elems {
            bracket_value &= ctx.verify_bracket_value(s, t, alg, inputs)?;
        }
    }
    Ok(PathSwapReport {
        a: b.a(),
        k: b.k(),
        n_prime: b.n_prime(),
        n: b.n(),
        step,
        pi_terms: ctx.pi.len(),
        pairs,
        annihilation,
        localization,
        bracket_value,
    })
}

/// [`verify_path_swap`] on the free nilpotent algebra with two generators and the given step,
/// with seeded small rational inputs.
pub fn verify_path_swap_free(
    b: &BlockSystem,
    step: usize,
    budget: u128,
    seed: u64,
) -> Result<PathSwapReport> {
    use rand::{Rng, SeedableRng};
    let alg = NilpotentAlgebra::free_nilpotent(2, step)?;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let inputs: Vec<Vec<Q>> = (0..b.n())
        .map(|_| {
            (0..alg.dim())
                .map(|_| {
                    Q::new(
                        rng.gen_range(-5i64..=5).into(),
                        rng.gen_range(1i64..=4).into(),
                    )
                })
                .collect()
        })
        .collect();
    verify_path_swap(b, step, &alg, &inputs, budget)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::{q, qr, qvec};

    #[test]
    fn types_and_generators() {
        let b = BlockSystem::new(3, 2, 2).unwrap();
        assert_eq!(b.n(), 20);
        let types: Vec<usize> = (0..10).map(|i| b.type_of(i)).collect();
        assert_eq!(types, vec![2, 2, 1, 1, 0, 0, 1, 1, 2, 2]);
        let g = b.generator_perm(1, 1);
        assert_eq!(g[12], 16);
        assert_eq!(g[13], 17);
        assert_eq!(g[16], 12);
        assert_eq!(g[0], 0);
        let sq: Vec<usize> = g.iter().map(|&x| g[x]).collect();
        assert_eq!(sq, (0..20).collect::<Vec<_>>());
        assert_eq!(b.elements().len(), 16);
        assert!(BlockSystem::new(1, 1, 1).is_err());
    }

    #[test]
    fn operator_expansion() {
        let b = BlockSystem::new(2, 1, 1).unwrap();
        let id = b.identity();
        let e = b.generator(1, 0);
        assert!(path_swap_operator(&b, &e, &e).unwrap().is_zero());
        let op = path_swap_operator(&b, &id, &e).unwrap();
        let expect = PermCombo::identity(3).sub(&PermCombo::from_perm(vec![2, 1, 0], q(1)));
        assert_eq!(op, expect);
        let b3 = BlockSystem::new(3, 1, 1).unwrap();
        let op3 = path_swap_operator(
            &b3,
            &b3.identity(),
            &b3.generator(1, 0).compose(&b3.generator(2, 0)),
        )
        .unwrap();
        assert_eq!(op3.len(), 4);
        let other = BlockSystem::new(3, 1, 2).unwrap();
        assert!(path_swap_operator(&b3, &other.identity(), &b3.identity()).is_err());
    }

    #[test]
    fn shared_operators_match_direct_checks() {
        let b = BlockSystem::new(2, 1, 2).unwrap();
        let ctx = PathSwapContext::new(b.clone(), 3).unwrap();
        let (l1, l2, pairs) = ctx.verify_annihilation_localization_all_pairs().unwrap();
        assert!(l1 && l2);
        assert_eq!(pairs, 16);
        for s in b.elements() {
            for t in b.elements() {
                assert!(ctx.verify_annihilation(&s, &t).unwrap());
                assert!(ctx.verify_localization(&s, &t).unwrap());
            }
        }
    }

    #[test]
    fn bracket_value_heisenberg_a2() {
        let b = BlockSystem::new(2, 1, 1).unwrap();
        let ctx = PathSwapContext::new(b.clone(), 2).unwrap();
        let h = NilpotentAlgebra::heisenberg3();
        let x2 = qvec(&[1, 2, 0]);
        let x3 = vec![qr(-1, 3), q(5), q(7)];
        let inputs = vec![qvec(&[0, 0, 0]), x2.clone(), x3.clone()];
        let id = b.identity();
        let e = b.generator(1, 0);
        let op = path_swap_operator(&b, &id, &e).unwrap();
        let top = ctx.pi.homogeneous_part(2);
        let v = op.apply(&top).eval(&h, &inputs).unwrap();
        assert_eq!(v, h.bracket(&x2, &x3).unwrap());
        assert!(ctx.verify_bracket_value(&id, &e, &h, &inputs).unwrap());
        assert!(ctx.verify_bracket_value(&e, &id, &h, &inputs).unwrap());
        assert!(ctx.verify_bracket_value(&e, &e, &h, &inputs).unwrap());
    }

    #[test]
    fn bracket_value_sign_is_not_the_permutation_sign() {
        // with blocks of length 2 the swap is an even permutation, yet the sign flips
        let b = BlockSystem::new(2, 2, 1).unwrap();
        let ctx = PathSwapContext::new(b.clone(), 2).unwrap();
        let h = NilpotentAlgebra::heisenberg3();
        let inputs: Vec<Vec<Q>> = (0..6)
            .map(|i| qvec(&[i as i64 % 3 - 1, 2 - i as i64 % 2, 1]))
            .collect();
        let e = b.generator(1, 0);
        assert!(ctx
            .verify_bracket_value(&e, &b.identity(), &h, &inputs)
            .unwrap());
        let perm = e.permutation(&b);
        let inversions = (0..6)
            .flat_map(|i| (i + 1..6).map(move |j| (i, j)))
            .filter(|&(i, j)| perm[i] > perm[j])
            .count();
        assert_eq!(inversions % 2, 0);
        assert_eq!(e.block_sign(0), -1);
    }
}
