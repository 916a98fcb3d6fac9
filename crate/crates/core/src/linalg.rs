//! Exact rational linear algebra (row echelon subspaces, inverses) and a few
//! small dense double-precision helpers.

use num_traits::{One, Zero};

use crate::error::{Error, Result};
use crate::scalar::Q;

pub type QMat = Vec<Vec<Q>>;

/// Subspace of Q^n stored as a reduced row-echelon basis.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Subspace {
    ambient: usize,
    rows: Vec<Vec<Q>>,
    pivots: Vec<usize>,
}

impl Subspace {
    pub fn zero(ambient: usize) -> Self {
        Subspace {
            ambient,
            rows: Vec::new(),
            pivots: Vec::new(),
        }
    }

    pub fn full(ambient: usize) -> Self {
        Self::span(ambient, (0..ambient).map(|i| unit(ambient, i)))
    }

    pub fn span<I: IntoIterator<Item = Vec<Q>>>(ambient: usize, vectors: I) -> Self {
        let mut s = Subspace::zero(ambient);
        for v in vectors {
            s.insert(v);
        }
        s
    }

    pub fn ambient(&self) -> usize {
        self.ambient
    }

    pub fn dim(&self) -> usize {
        self.rows.len()
    }

    pub fn is_zero(&self) -> bool {
        self.rows.is_empty()
    }

    /// Echelon basis, sorted by pivot column.
    pub fn basis(&self) -> &[Vec<Q>] {
        &self.rows
    }

    pub fn pivots(&self) -> &[usize] {
        &self.pivots
    }

    /// Reduces `v` against the basis; the remainder is zero iff `v` lies in the span.
    pub fn reduce(&self, v: &[Q]) -> Vec<Q> {
        let mut r = v.to_vec();
        for (row, &p) in self.rows.iter().zip(&self.pivots) {
            if !r[p].is_zero() {
                let f = r[p].clone();
                for (x, y) in r.iter_mut().zip(row) {
                    if !y.is_zero() {
                        *x -= &f * y;
                    }
                }
            }
        }
        r
    }

    pub fn contains(&self, v: &[Q]) -> bool {
        assert_eq!(v.len(), self.ambient);
        self.reduce(v).iter().all(|x| x.is_zero())
    }

    pub fn contains_subspace(&self, other: &Subspace) -> bool {
        other.rows.iter().all(|r| self.contains(r))
    }

    /// Adds a vector; returns true when the dimension grew.
    pub fn insert(&mut self, v: Vec<Q>) -> bool {
        assert_eq!(
            v.len(),
            self.ambient,
            "vector length differs from ambient dimension"
        );
        let mut r = self.reduce(&v);
        let Some(p) = r.iter().position(|x| !x.is_zero()) else {
            return false;
        };
        let inv = r[p].recip();
        for x in r.iter_mut() {
            *x *= &inv;
        }
        for row in self.rows.iter_mut() {
            if !row[p].is_zero() {
                let f = row[p].clone();
                for (x, y) in row.iter_mut().zip(&r) {
                    if !y.is_zero() {
                        *x -= &f * y;
                    }
                }
            }
        }
        let at = self.pivots.partition_point(|&q| q < p);
        self.pivots.insert(at, p);
        self.rows.insert(at, r);
        true
    }

    pub fn sum(&self, other: &Subspace) -> Subspace {
        let mut s = self.clone();
        for r in &other.rows {
            s.insert(r.clone());
        }
        s
    }
}

pub fn unit(n: usize, i: usize) -> Vec<Q> {
    let mut v = vec![Q::zero(); n];
    v[i] = Q::one();
    v
}

pub fn identity(n: usize) -> QMat {
    (0..n).map(|i| unit(n, i)).collect()
}

pub fn mat_vec(m: &QMat, v: &[Q]) -> Vec<Q> {
    m.iter()
        .map(|row| {
            let mut acc = Q::zero();
            for (a, b) in row.iter().zip(v) {
                if !a.is_zero() && !b.is_zero() {
                    acc += a * b;
                }
            }
            acc
        })
        .collect()
}

pub fn mat_mul(a: &QMat, b: &QMat) -> QMat {
    let n = b.first().map_or(0, |r| r.len());
    a.iter()
        .map(|row| {
            let mut out = vec![Q::zero(); n];
            for (k, x) in row.iter().enumerate() {
                if x.is_zero() {
                    continue;
                }
                for (o, y) in out.iter_mut().zip(&b[k]) {
                    if !y.is_zero() {
                        *o += x * y;
                    }
                }
            }
            out
        })
        .collect()
}

pub fn transpose<T: Clone>(m: &[Vec<T>]) -> Vec<Vec<T>> {
    if m.is_empty() {
        return Vec::new();
    }
    (0..m[0].len())
        .map(|j| m.iter().map(|r| r[j].clone()).collect())
        .collect()
}

/// Exact inverse by Gauss-Jordan elimination.
pub fn mat_inv(m: &QMat) -> Result<QMat> {
    let n = m.len();
    let mut a: QMat = m.to_vec();
    let mut inv = identity(n);
    for col in 0..n {
        let piv = (col..n)
            .find(|&r| !a[r][col].is_zero())
            .ok_or_else(|| Error::InvalidArgument("singular matrix".into()))?;
        a.swap(col, piv);
        inv.swap(col, piv);
        let f = a[col][col].recip();
        for j in 0..n {
            a[col][j] *= &f;
            inv[col][j] *= &f;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let g = a[r][col].clone();
                for j in 0..n {
                    let t = &g * &a[col][j];
                    a[r][j] -= t;
                    let t = &g * &inv[col][j];
                    inv[r][j] -= t;
                }
            }
        }
    }
    Ok(inv)
}

/// Solves `B c = v` for `c` where the columns of `B` are `cols`; `None` if `v` is outside the span.
pub fn solve_in_span(cols: &[Vec<Q>], v: &[Q]) -> Option<Vec<Q>> {
    let n = v.len();
    let k = cols.len();
    let mut rows: Vec<Vec<Q>> = (0..n)
        .map(|i| {
            let mut r: Vec<Q> = cols.iter().map(|c| c[i].clone()).collect();
            r.push(v[i].clone());
            r
        })
        .collect();
    let mut piv_cols = Vec::new();
    let mut r0 = 0;
    for c in 0..k {
        let Some(p) = (r0..n).find(|&r| !rows[r][c].is_zero()) else {
            continue;
        };
        rows.swap(r0, p);
        let f = rows[r0][c].recip();
        for x in rows[r0].iter_mut() {
            *x *= &f;
        }
        for r in 0..n {
            if r != r0 && !rows[r][c].is_zero() {
                let g = rows[r][c].clone();
                for j in 0..=k {
                    let t = &g * &rows[r0][j];
                    rows[r][j] -= t;
                }
            }
        }
        piv_cols.push(c);
        r0 += 1;
    }
    if rows[r0..].iter().any(|r| !r[k].is_zero()) {
        return None;
    }
    let mut out = vec![Q::zero(); k];
    for (i, &c) in piv_cols.iter().enumerate() {
        out[c] = rows[i][k].clone();
    }
    Some(out)
}

pub fn to_f64_mat(m: &QMat) -> Vec<Vec<f64>> {
    m.iter().map(|r| crate::scalar::to_f64_vec(r)).collect()
}

pub fn matvec_f64(m: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    m.iter()
        .map(|r| r.iter().zip(v).map(|(a, b)| a * b).sum())
        .collect()
}

/// Lower-triangular factor of a symmetric positive semidefinite matrix.
/// Directions with vanishing pivot get a zero column.
pub fn cholesky_psd(a: &[Vec<f64>]) -> Result<Vec<Vec<f64>>> {
    let n = a.len();
    let scale = (0..n)
        .map(|i| a[i][i].abs())
        .fold(0.0, f64::max)
        .max(1e-300);
    let mut l = vec![vec![0.0; n]; n];
    for j in 0..n {
        let mut d = a[j][j];
        for k in 0..j {
            d -= l[j][k] * l[j][k];
        }
        if d < -1e-10 * scale {
            return Err(Error::InvalidArgument(
                "covariance is not positive semidefinite".into(),
            ));
        }
        if d <= 1e-14 * scale {
            continue;
        }
        let dj = d.sqrt();
        l[j][j] = dj;
        for i in j + 1..n {
            let mut s = a[i][j];
            for k in 0..j {
                s -= l[i][k] * l[j][k];
            }
            l[i][j] = s / dj;
        }
    }
    Ok(l)
}

pub fn det_f64(a: &[Vec<f64>]) -> f64 {
    let n = a.len();
    let mut m = a.to_vec();
    let mut det = 1.0;
    for c in 0..n {
        let p = (c..n)
            .max_by(|&i, &j| m[i][c].abs().total_cmp(&m[j][c].abs()))
            .unwrap();
        if m[p][c] == 0.0 {
            return 0.0;
        }
        if p != c {
            m.swap(p, c);
            det = -det;
        }
        det *= m[c][c];
        for r in c + 1..n {
            let f = m[r][c] / m[c][c];
            for k in c..n {
                m[r][k] -= f * m[c][k];
            }
        }
    }
    det
}
