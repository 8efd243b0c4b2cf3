//! Dense complex matrices and operators on tensor products of matrix spaces.
//!
//! Flattening convention: `e_ij (x) e_kl` sits at row `i*N + k`, column
//! `j*N + l` (0-based), i.e. the first tensor factor is the most significant
//! digit. Products of several factors nest the same way, left factor outermost.

use std::f64::consts::PI;
use std::ops::{Add, AddAssign, Index, IndexMut, Mul, Neg, Sub, SubAssign};

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::specfun::SectorIndex;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

/// Square matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    dim: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self {
            dim,
            data: vec![ZERO; dim * dim],
        }
    }

    pub fn identity(dim: usize) -> Self {
        let mut m = Self::zeros(dim);
        for i in 0..dim {
            m[(i, i)] = ONE;
        }
        m
    }

    pub fn from_fn(dim: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                data.push(f(i, j));
            }
        }
        Self { dim, data }
    }

    /// Row-major entries; `rows.len()` must be a perfect square.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Result<Self> {
        let dim = rows.len();
        if rows.iter().any(|r| r.len() != dim) {
            return Err(Error::DimensionMismatch("rows of unequal length".into()));
        }
        Ok(Self::from_fn(dim, |i, j| rows[i][j]))
    }

    /// The matrix unit `E_ij`.
    pub fn unit(dim: usize, i: usize, j: usize) -> Self {
        let mut m = Self::zeros(dim);
        m[(i, j)] = ONE;
        m
    }

    pub fn diag(d: &[Complex64]) -> Self {
        let mut m = Self::zeros(d.len());
        for (i, v) in d.iter().enumerate() {
            m[(i, i)] = *v;
        }
        m
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn rows(&self) -> Vec<Vec<Complex64>> {
        self.data.chunks(self.dim).map(|r| r.to_vec()).collect()
    }

    pub fn try_matmul(&self, rhs: &Self) -> Result<Self> {
        if self.dim != rhs.dim {
            return Err(Error::DimensionMismatch(format!(
                "matmul {}x{} by {}x{}",
                self.dim, self.dim, rhs.dim, rhs.dim
            )));
        }
        Ok(self.matmul(rhs))
    }

    pub fn matmul(&self, rhs: &Self) -> Self {
        assert_eq!(self.dim, rhs.dim, "matmul dimension mismatch");
        let n = self.dim;
        let mut out = Self::zeros(n);
        for i in 0..n {
            let row = &self.data[i * n..(i + 1) * n];
            let orow = &mut out.data[i * n..(i + 1) * n];
            for (k, a) in row.iter().enumerate() {
                if *a == ZERO {
                    continue;
                }
                let brow = &rhs.data[k * n..(k + 1) * n];
                for (o, b) in orow.iter_mut().zip(brow) {
                    *o += a * b;
                }
            }
        }
        out
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            dim: self.dim,
            data: self.data.iter().map(|v| v * s).collect(),
        }
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim).map(|i| self[(i, i)]).sum()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)])
    }

    pub fn conj_transpose(&self) -> Self {
        Self::from_fn(self.dim, |i, j| self[(j, i)].conj())
    }

    /// `[A, B] = AB - BA`.
    pub fn commutator(&self, rhs: &Self) -> Self {
        &self.matmul(rhs) - &rhs.matmul(self)
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.data.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|v| v.norm()).fold(0.0, f64::max)
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|v| v.is_finite())
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut out = Self::identity(self.dim);
        for _ in 0..k {
            out = out.matmul(self);
        }
        out
    }

    /// Block `(bi, bj)` of size `b`.
    pub fn block(&self, b: usize, bi: usize, bj: usize) -> Self {
        Self::from_fn(b, |i, j| self[(bi * b + i, bj * b + j)])
    }

    pub fn set_block(&mut self, b: usize, bi: usize, bj: usize, m: &Self) {
        assert_eq!(m.dim, b);
        for i in 0..b {
            for j in 0..b {
                self[(bi * b + i, bj * b + j)] = m[(i, j)];
            }
        }
    }
}

impl Index<(usize, usize)> for ComplexMatrix {
    type Output = Complex64;
    fn index(&self, (i, j): (usize, usize)) -> &Complex64 {
        &self.data[i * self.dim + j]
    }
}

impl IndexMut<(usize, usize)> for ComplexMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut Complex64 {
        &mut self.data[i * self.dim + j]
    }
}

macro_rules! elementwise {
    ($tr:ident, $f:ident, $op:tt) => {
        impl $tr<&ComplexMatrix> for &ComplexMatrix {
            type Output = ComplexMatrix;
            fn $f(self, rhs: &ComplexMatrix) -> ComplexMatrix {
                assert_eq!(self.dim, rhs.dim, "dimension mismatch");
                ComplexMatrix {
                    dim: self.dim,
                    data: self.data.iter().zip(&rhs.data).map(|(a, b)| a $op b).collect(),
                }
            }
        }
        impl $tr<ComplexMatrix> for ComplexMatrix {
            type Output = ComplexMatrix;
            fn $f(self, rhs: ComplexMatrix) -> ComplexMatrix {
                (&self).$f(&rhs)
            }
        }
        impl $tr<&ComplexMatrix> for ComplexMatrix {
            type Output = ComplexMatrix;
            fn $f(self, rhs: &ComplexMatrix) -> ComplexMatrix {
                (&self).$f(rhs)
            }
        }
    };
}

elementwise!(Add, add, +);
elementwise!(Sub, sub, -);

impl AddAssign<&ComplexMatrix> for ComplexMatrix {
    fn add_assign(&mut self, rhs: &ComplexMatrix) {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a += b;
        }
    }
}

impl SubAssign<&ComplexMatrix> for ComplexMatrix {
    fn sub_assign(&mut self, rhs: &ComplexMatrix) {
        assert_eq!(self.dim, rhs.dim, "dimension mismatch");
        for (a, b) in self.data.iter_mut().zip(&rhs.data) {
            *a -= b;
        }
    }
}

impl Mul<&ComplexMatrix> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl Mul<ComplexMatrix> for ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: ComplexMatrix) -> ComplexMatrix {
        self.matmul(&rhs)
    }
}

impl Mul<&ComplexMatrix> for ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: &ComplexMatrix) -> ComplexMatrix {
        self.matmul(rhs)
    }
}

impl Mul<ComplexMatrix> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, rhs: ComplexMatrix) -> ComplexMatrix {
        self.matmul(&rhs)
    }
}

impl Mul<Complex64> for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, s: Complex64) -> ComplexMatrix {
        self.scale(s)
    }
}

impl Mul<Complex64> for ComplexMatrix {
    type Output = ComplexMatrix;
    fn mul(self, s: Complex64) -> ComplexMatrix {
        self.scale(s)
    }
}

impl Neg for ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale(-ONE)
    }
}

impl Neg for &ComplexMatrix {
    type Output = ComplexMatrix;
    fn neg(self) -> ComplexMatrix {
        self.scale(-ONE)
    }
}

pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    let (n, m) = (a.dim, b.dim);
    ComplexMatrix::from_fn(n * m, |r, c| a[(r / m, c / m)] * b[(r % m, c % m)])
}

/// `||a - b||` divided by the largest of the given norms (absolute when they
/// all vanish).
pub fn rel_diff(a: &ComplexMatrix, b: &ComplexMatrix, scales: &[&ComplexMatrix]) -> f64 {
    let d = (a - b).frobenius_norm();
    let s = scales
        .iter()
        .map(|m| m.frobenius_norm())
        .fold(0.0, f64::max);
    if s == 0.0 {
        d
    } else {
        d / s
    }
}

/// Element of `Mat(N) (x) Mat(N)`.
#[derive(Clone, Debug, PartialEq)]
pub struct TwoSiteOperator {
    n: usize,
    mat: ComplexMatrix,
}

impl TwoSiteOperator {
    pub fn new(n: usize, mat: ComplexMatrix) -> Self {
        assert_eq!(mat.dim(), n * n, "two-site operator must be N^2 x N^2");
        Self { n, mat }
    }

    pub fn zeros(n: usize) -> Self {
        Self::new(n, ComplexMatrix::zeros(n * n))
    }

    pub fn identity(n: usize) -> Self {
        Self::new(n, ComplexMatrix::identity(n * n))
    }

    pub fn from_kron(a: &ComplexMatrix, b: &ComplexMatrix) -> Self {
        assert_eq!(a.dim(), b.dim());
        Self::new(a.dim(), kron(a, b))
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn mat(&self) -> &ComplexMatrix {
        &self.mat
    }

    pub fn into_mat(self) -> ComplexMatrix {
        self.mat
    }

    /// Coefficient of `e_ij (x) e_kl`.
    pub fn coeff(&self, i: usize, j: usize, k: usize, l: usize) -> Complex64 {
        self.mat[(i * self.n + k, j * self.n + l)]
    }

    /// Contracts the first factor.
    pub fn partial_trace_1(&self) -> ComplexMatrix {
        let n = self.n;
        ComplexMatrix::from_fn(n, |i, j| (0..n).map(|k| self.coeff(k, k, i, j)).sum())
    }

    /// Contracts the second factor.
    pub fn partial_trace_2(&self) -> ComplexMatrix {
        let n = self.n;
        ComplexMatrix::from_fn(n, |i, j| (0..n).map(|k| self.coeff(i, j, k, k)).sum())
    }

    /// `P A P`, i.e. `A_21`.
    pub fn swapped(&self) -> Self {
        let n = self.n;
        let mut out = ComplexMatrix::zeros(n * n);
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    for l in 0..n {
                        out[(k * n + i, l * n + j)] = self.coeff(i, j, k, l);
                    }
                }
            }
        }
        Self::new(n, out)
    }

    /// `A P`.
    pub fn times_p(&self) -> Self {
        let n = self.n;
        // (A P)[(i,k),(j,l)] = A[(i,k),(l,j)]
        let mut out = ComplexMatrix::zeros(n * n);
        for r in 0..n * n {
            for j in 0..n {
                for l in 0..n {
                    out[(r, j * n + l)] = self.mat[(r, l * n + j)];
                }
            }
        }
        Self::new(n, out)
    }

    /// `P A`.
    pub fn p_times(&self) -> Self {
        let n = self.n;
        let mut out = ComplexMatrix::zeros(n * n);
        for i in 0..n {
            for k in 0..n {
                for cidx in 0..n * n {
                    out[(i * n + k, cidx)] = self.mat[(k * n + i, cidx)];
                }
            }
        }
        Self::new(n, out)
    }

    /// `tr_2(A S_2)`: `(A S_2)` then trace over the second factor.
    pub fn contract_2(&self, s: &ComplexMatrix) -> ComplexMatrix {
        let n = self.n;
        assert_eq!(s.dim(), n);
        // sum_{b,d} A[(a,b),(c,d)] S[d,b]
        ComplexMatrix::from_fn(n, |a, cc| {
            let mut acc = ZERO;
            for b in 0..n {
                for d in 0..n {
                    acc += self.coeff(a, cc, b, d) * s[(d, b)];
                }
            }
            acc
        })
    }

    /// `tr_12(A S_1 T_2)`.
    pub fn bilinear(&self, s: &ComplexMatrix, t: &ComplexMatrix) -> Complex64 {
        let n = self.n;
        let mut acc = ZERO;
        // sum A[(a,c),(b,d)] S[b,a] T[d,c]
        for a in 0..n {
            for b in 0..n {
                let sba = s[(b, a)];
                if sba == ZERO {
                    continue;
                }
                for cc in 0..n {
                    for d in 0..n {
                        acc += self.coeff(a, b, cc, d) * sba * t[(d, cc)];
                    }
                }
            }
        }
        acc
    }

    /// Gradients of `tr_12(A S_1 T_2)`: entry `(x, y)` is the derivative with
    /// respect to `S[x, y]` (resp. `T[x, y]`).
    pub fn bilinear_grad(&self, s: &ComplexMatrix, t: &ComplexMatrix) -> (ComplexMatrix, ComplexMatrix) {
        let n = self.n;
        let mut gs = ComplexMatrix::zeros(n);
        let mut gt = ComplexMatrix::zeros(n);
        for a in 0..n {
            for b in 0..n {
                for cc in 0..n {
                    for d in 0..n {
                        let v = self.coeff(a, b, cc, d);
                        if v == ZERO {
                            continue;
                        }
                        gs[(b, a)] += v * t[(d, cc)];
                        gt[(d, cc)] += v * s[(b, a)];
                    }
                }
            }
        }
        (gs, gt)
    }
}

impl Add<&TwoSiteOperator> for &TwoSiteOperator {
    type Output = TwoSiteOperator;
    fn add(self, rhs: &TwoSiteOperator) -> TwoSiteOperator {
        TwoSiteOperator::new(self.n, &self.mat + &rhs.mat)
    }
}

impl Sub<&TwoSiteOperator> for &TwoSiteOperator {
    type Output = TwoSiteOperator;
    fn sub(self, rhs: &TwoSiteOperator) -> TwoSiteOperator {
        TwoSiteOperator::new(self.n, &self.mat - &rhs.mat)
    }
}

impl Mul<&TwoSiteOperator> for &TwoSiteOperator {
    type Output = TwoSiteOperator;
    fn mul(self, rhs: &TwoSiteOperator) -> TwoSiteOperator {
        TwoSiteOperator::new(self.n, self.mat.matmul(&rhs.mat))
    }
}

impl Mul<Complex64> for &TwoSiteOperator {
    type Output = TwoSiteOperator;
    fn mul(self, s: Complex64) -> TwoSiteOperator {
        TwoSiteOperator::new(self.n, self.mat.scale(s))
    }
}

/// `P_12 = sum E_ij (x) E_ji`.
pub fn permutation_p(n: usize) -> TwoSiteOperator {
    let mut m = ComplexMatrix::zeros(n * n);
    for i in 0..n {
        for j in 0..n {
            m[(i * n + j, j * n + i)] = ONE;
        }
    }
    TwoSiteOperator::new(n, m)
}

/// `T_a = exp(pi i a1 a2 / N) Q^a1 Lambda^a2` for integer (unreduced) `a`.
/// `Q = diag(exp(2 pi i k / N))`, `Lambda_kl = 1` iff `k - l + 1 = 0 mod N`.
pub fn sin_basis_raw(n: usize, a1: i64, a2: i64) -> ComplexMatrix {
    let nf = n as f64;
    let i = Complex64::new(0.0, 1.0);
    let phase = (i * PI * (a1 * a2) as f64 / nf).exp();
    // Q^a1 Lambda^a2: Lambda^a2 maps column l to row l - a2 (mod N).
    ComplexMatrix::from_fn(n, |k, l| {
        if (k as i64 - l as i64 + a2).rem_euclid(n as i64) == 0 {
            phase * (2.0 * PI * i * (a1 * k as i64) as f64 / nf).exp()
        } else {
            ZERO
        }
    })
}

/// `T_a` for `a` in `Z_N x Z_N` (representative in `[0, N)`).
pub fn sin_basis_t(a: SectorIndex) -> ComplexMatrix {
    sin_basis_raw(a.n, a.a1 as i64, a.a2 as i64)
}

/// The operator paired with `T_a` in the Baxter-Belavin sums: `T_a^{-1}`,
/// which equals `T_{(-a1,-a2)}` with unreduced components.
pub fn sin_basis_t_inv(a: SectorIndex) -> ComplexMatrix {
    sin_basis_raw(a.n, -(a.a1 as i64), -(a.a2 as i64))
}

pub use crate::specfun::kappa;

/// Places a two-factor operator on factors `(a, b)` of a product space with
/// the given factor dimensions. `op` acts on `dims[a] x dims[b]` with factor
/// `a` as the outer index.
pub fn embed_pair(op: &ComplexMatrix, dims: &[usize], a: usize, b: usize) -> ComplexMatrix {
    assert!(a != b && a < dims.len() && b < dims.len());
    let (da, db) = (dims[a], dims[b]);
    assert_eq!(op.dim(), da * db);
    let total: usize = dims.iter().product();
    let strides = strides(dims);
    let mut out = ComplexMatrix::zeros(total);
    // Enumerate the spectator multi-index once, then fill the da*db block.
    let spect: Vec<usize> = (0..dims.len()).filter(|&s| s != a && s != b).collect();
    let spect_total: usize = spect.iter().map(|&s| dims[s]).product();
    for sidx in 0..spect_total {
        let mut base = 0;
        let mut rem = sidx;
        for &s in spect.iter().rev() {
            base += (rem % dims[s]) * strides[s];
            rem /= dims[s];
        }
        for ra in 0..da {
            for rb in 0..db {
                let row = base + ra * strides[a] + rb * strides[b];
                for ca in 0..da {
                    for cb in 0..db {
                        let v = op[(ra * db + rb, ca * db + cb)];
                        if v != ZERO {
                            let col = base + ca * strides[a] + cb * strides[b];
                            out[(row, col)] = v;
                        }
                    }
                }
            }
        }
    }
    out
}

/// Places a one-factor operator on factor `a`.
pub fn embed_one(op: &ComplexMatrix, dims: &[usize], a: usize) -> ComplexMatrix {
    let before: usize = dims[..a].iter().product();
    let after: usize = dims[a + 1..].iter().product();
    kron(&kron(&ComplexMatrix::identity(before), op), &ComplexMatrix::identity(after))
}

fn strides(dims: &[usize]) -> Vec<usize> {
    let mut s = vec![1; dims.len()];
    for k in (0..dims.len().saturating_sub(1)).rev() {
        s[k] = s[k + 1] * dims[k + 1];
    }
    s
}

/// Reorders tensor factors: factor `k` of the output is factor `perm[k]` of
/// the input.
pub fn permute_factors(m: &ComplexMatrix, dims: &[usize], perm: &[usize]) -> ComplexMatrix {
    let nf = dims.len();
    assert_eq!(perm.len(), nf);
    let total: usize = dims.iter().product();
    assert_eq!(m.dim(), total);
    let in_strides = strides(dims);
    let out_dims: Vec<usize> = perm.iter().map(|&p| dims[p]).collect();
    let out_strides = strides(&out_dims);
    // map[out_flat] = in_flat
    let mut map = vec![0usize; total];
    for (flat, slot) in map.iter_mut().enumerate() {
        let mut in_flat = 0;
        for k in 0..nf {
            let digit = (flat / out_strides[k]) % out_dims[k];
            in_flat += digit * in_strides[perm[k]];
        }
        *slot = in_flat;
    }
    ComplexMatrix::from_fn(total, |r, c| m[(map[r], map[c])])
}

/// Embeds a two-site operator on sites `(a, b)` of three sites of size `n`.
pub fn embed3(op: &TwoSiteOperator, a: usize, b: usize) -> ComplexMatrix {
    let n = op.n();
    embed_pair(op.mat(), &[n, n, n], a, b)
}
