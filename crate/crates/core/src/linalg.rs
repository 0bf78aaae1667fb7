//! Dense exact linear algebra over arbitrary coefficient rings.
//!
//! Coefficients are abstracted by [`Ring`]/[`Field`] so the same row
//! reduction serves `BigRational` (classical side), [`ScalarQ`] (quantum
//! side) and, via Bareiss elimination with [`ExactDiv`], the symbolic
//! polynomial ring [`PolyLambda`].

use crate::scalars::{PolyLambda, Rat, ScalarQ};
use num::{One, Zero};
use std::fmt::Debug;

pub trait Ring: Clone + PartialEq + Debug {
    fn zero() -> Self;
    fn one() -> Self;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    fn is_zero(&self) -> bool;
}

pub trait Field: Ring {
    /// None iff zero.
    fn inv(&self) -> Option<Self>;
}

/// Exact division for fraction-free elimination. `exact_div` returns Some(q)
/// iff `self = q * d` in the ring.
pub trait ExactDiv: Ring {
    fn exact_div(&self, d: &Self) -> Option<Self>;
}

impl Ring for Rat {
    fn zero() -> Self {
        Zero::zero()
    }
    fn one() -> Self {
        One::one()
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn mul(&self, other: &Self) -> Self {
        self * other
    }
    fn neg(&self) -> Self {
        -self
    }
    fn is_zero(&self) -> bool {
        Zero::is_zero(self)
    }
}

impl Field for Rat {
    fn inv(&self) -> Option<Self> {
        if Zero::is_zero(self) {
            None
        } else {
            Some(self.recip())
        }
    }
}

impl ExactDiv for Rat {
    fn exact_div(&self, d: &Self) -> Option<Self> {
        Field::inv(d).map(|i| self * i)
    }
}

impl Ring for ScalarQ {
    fn zero() -> Self {
        ScalarQ::zero()
    }
    fn one() -> Self {
        ScalarQ::one()
    }
    fn add(&self, other: &Self) -> Self {
        ScalarQ::add(self, other)
    }
    fn sub(&self, other: &Self) -> Self {
        ScalarQ::sub(self, other)
    }
    fn mul(&self, other: &Self) -> Self {
        ScalarQ::mul(self, other)
    }
    fn neg(&self) -> Self {
        ScalarQ::neg(self)
    }
    fn is_zero(&self) -> bool {
        ScalarQ::is_zero(self)
    }
}

impl Field for ScalarQ {
    fn inv(&self) -> Option<Self> {
        ScalarQ::inv(self)
    }
}

impl ExactDiv for ScalarQ {
    fn exact_div(&self, d: &Self) -> Option<Self> {
        self.div(d)
    }
}

/// PolyLambda is only a ring, so matrices over it use Bareiss elimination.
/// Ring operations require matching variable counts; the zero/one sentinels
/// use zero variables and coerce on first combination.
#[derive(Clone, PartialEq, Debug)]
pub struct PolyL(pub PolyLambda);

impl std::fmt::Display for PolyL {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        std::fmt::Display::fmt(&self.0, f)
    }
}

fn coerce(a: &PolyLambda, n: usize) -> PolyLambda {
    if a.nvars() == n {
        return a.clone();
    }
    assert!(
        a.as_scalar().is_some(),
        "variable count mismatch on non-constant polynomial"
    );
    PolyLambda::from_scalar(n, a.as_scalar().unwrap())
}

fn join(a: &PolyLambda, b: &PolyLambda) -> (PolyLambda, PolyLambda) {
    let n = a.nvars().max(b.nvars());
    (coerce(a, n), coerce(b, n))
}

impl Ring for PolyL {
    fn zero() -> Self {
        PolyL(PolyLambda::zero(0))
    }
    fn one() -> Self {
        PolyL(PolyLambda::one(0))
    }
    fn add(&self, other: &Self) -> Self {
        let (a, b) = join(&self.0, &other.0);
        PolyL(a.add(&b))
    }
    fn sub(&self, other: &Self) -> Self {
        let (a, b) = join(&self.0, &other.0);
        PolyL(a.sub(&b))
    }
    fn mul(&self, other: &Self) -> Self {
        let (a, b) = join(&self.0, &other.0);
        PolyL(a.mul(&b))
    }
    fn neg(&self) -> Self {
        PolyL(self.0.neg())
    }
    fn is_zero(&self) -> bool {
        self.0.is_zero()
    }
}

impl ExactDiv for PolyL {
    fn exact_div(&self, d: &Self) -> Option<Self> {
        let (a, b) = join(&self.0, &d.0);
        a.exact_div(&b).map(PolyL)
    }
}

// ---------------------------------------------------------------------------
// Mat
// ---------------------------------------------------------------------------

/// Dense row-major matrix.
#[derive(Clone, PartialEq, Debug)]
pub struct Mat<F: Ring> {
    pub rows: usize,
    pub cols: usize,
    data: Vec<F>,
}

impl<F: Ring> Mat<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![F::zero(); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, F::one());
        }
        m
    }

    pub fn from_rows(rows: Vec<Vec<F>>) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|x| x.len() == c));
        Mat {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> F) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Mat { rows, cols, data }
    }

    pub fn get(&self, i: usize, j: usize) -> &F {
        &self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, x: F) {
        self.data[i * self.cols + j] = x;
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(F::is_zero)
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a.add(b))
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a.sub(b))
                .collect(),
        }
    }

    pub fn neg(&self) -> Self {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(F::neg).collect(),
        }
    }

    pub fn scale(&self, c: &F) -> Self {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x.mul(c)).collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let b = other.get(k, j);
                    if b.is_zero() {
                        continue;
                    }
                    let cur = out.get(i, j).add(&a.mul(b));
                    out.set(i, j, cur);
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[F]) -> Vec<F> {
        assert_eq!(self.cols, x.len());
        (0..self.rows)
            .map(|i| {
                let mut acc = F::zero();
                for j in 0..self.cols {
                    let a = self.get(i, j);
                    if !a.is_zero() && !x[j].is_zero() {
                        acc = acc.add(&a.mul(&x[j]));
                    }
                }
                acc
            })
            .collect()
    }

    pub fn transpose(&self) -> Self {
        Mat::from_fn(self.cols, self.rows, |i, j| self.get(j, i).clone())
    }

    pub fn pow(&self, e: u32) -> Self {
        assert_eq!(self.rows, self.cols);
        let mut acc = Self::identity(self.rows);
        for _ in 0..e {
            acc = acc.matmul(self);
        }
        acc
    }
}

/// Result of Gauss–Jordan elimination over a field.
pub struct Rref<F: Ring> {
    pub mat: Mat<F>,
    pub pivots: Vec<usize>,
}

impl<F: Field> Mat<F> {
    /// Reduced row echelon form with pivot columns.
    pub fn rref(&self) -> Rref<F> {
        let mut m = self.clone();
        let mut pivots = Vec::new();
        let mut r = 0usize;
        for c in 0..m.cols {
            if r == m.rows {
                break;
            }
            let Some(p) = (r..m.rows).find(|&i| !m.get(i, c).is_zero()) else {
                continue;
            };
            if p != r {
                for j in 0..m.cols {
                    let a = m.get(r, j).clone();
                    let b = m.get(p, j).clone();
                    m.set(r, j, b);
                    m.set(p, j, a);
                }
            }
            let inv = m.get(r, c).inv().unwrap();
            for j in 0..m.cols {
                let x = m.get(r, j).mul(&inv);
                m.set(r, j, x);
            }
            for i in 0..m.rows {
                if i != r && !m.get(i, c).is_zero() {
                    let f = m.get(i, c).clone();
                    for j in 0..m.cols {
                        let x = m.get(i, j).sub(&f.mul(m.get(r, j)));
                        m.set(i, j, x);
                    }
                }
            }
            pivots.push(c);
            r += 1;
        }
        Rref { mat: m, pivots }
    }

    pub fn rank(&self) -> usize {
        self.rref().pivots.len()
    }

    /// Basis of the right kernel.
    pub fn kernel_basis(&self) -> Vec<Vec<F>> {
        let Rref { mat, pivots } = self.rref();
        let mut basis = Vec::new();
        let pivot_set: std::collections::HashSet<usize> = pivots.iter().copied().collect();
        for free in 0..self.cols {
            if pivot_set.contains(&free) {
                continue;
            }
            let mut vec = vec![F::zero(); self.cols];
            vec[free] = F::one();
            for (r, &pc) in pivots.iter().enumerate() {
                vec[pc] = mat.get(r, free).neg();
            }
            basis.push(vec);
        }
        basis
    }

    /// Inverse of a square matrix; None when singular.
    pub fn invert(&self) -> Option<Self> {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut aug = Mat::zeros(n, 2 * n);
        for i in 0..n {
            for j in 0..n {
                aug.set(i, j, self.get(i, j).clone());
            }
            aug.set(i, n + i, F::one());
        }
        let red = aug.rref();
        if red.pivots.len() < n || red.pivots[n - 1] >= n {
            return None;
        }
        Some(Mat::from_fn(n, n, |i, j| red.mat.get(i, n + j).clone()))
    }

    /// Solve `self * x = b`; None when inconsistent (or underdetermined with
    /// no particular preference — returns one solution when consistent).
    pub fn solve(&self, b: &[F]) -> Option<Vec<F>> {
        assert_eq!(self.rows, b.len());
        let mut aug = Mat::zeros(self.rows, self.cols + 1);
        for i in 0..self.rows {
            for j in 0..self.cols {
                aug.set(i, j, self.get(i, j).clone());
            }
            aug.set(i, self.cols, b[i].clone());
        }
        let red = aug.rref();
        if red.pivots.contains(&self.cols) {
            return None;
        }
        let mut x = vec![F::zero(); self.cols];
        for (r, &pc) in red.pivots.iter().enumerate() {
            x[pc] = red.mat.get(r, self.cols).clone();
        }
        Some(x)
    }

    /// Determinant over a field (fraction-free not needed here).
    pub fn det(&self) -> F {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        let mut m = self.clone();
        let mut det = F::one();
        for c in 0..n {
            let Some(p) = (c..n).find(|&i| !m.get(i, c).is_zero()) else {
                return F::zero();
            };
            if p != c {
                det = det.neg();
                for j in 0..n {
                    let a = m.get(c, j).clone();
                    let b = m.get(p, j).clone();
                    m.set(c, j, b);
                    m.set(p, j, a);
                }
            }
            let piv = m.get(c, c).clone();
            det = det.mul(&piv);
            let inv = piv.inv().unwrap();
            for i in c + 1..n {
                if m.get(i, c).is_zero() {
                    continue;
                }
                let f = m.get(i, c).mul(&inv);
                for j in c..n {
                    let x = m.get(i, j).sub(&f.mul(m.get(c, j)));
                    m.set(i, j, x);
                }
            }
        }
        det
    }
}

impl<F: ExactDiv> Mat<F> {
    /// Bareiss fraction-free determinant: every division is exact, so this
    /// works over polynomial rings.
    pub fn det_bareiss(&self) -> F {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        if n == 0 {
            return F::one();
        }
        let mut m = self.clone();
        let mut prev = F::one();
        let mut sign = false;
        for k in 0..n - 1 {
            if m.get(k, k).is_zero() {
                let Some(p) = (k + 1..n).find(|&i| !m.get(i, k).is_zero()) else {
                    return F::zero();
                };
                sign = !sign;
                for j in 0..n {
                    let a = m.get(k, j).clone();
                    let b = m.get(p, j).clone();
                    m.set(k, j, b);
                    m.set(p, j, a);
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    let t = m
                        .get(k, k)
                        .mul(m.get(i, j))
                        .sub(&m.get(i, k).mul(m.get(k, j)));
                    let x = t.exact_div(&prev).expect("Bareiss division is exact");
                    m.set(i, j, x);
                }
                m.set(i, k, F::zero());
            }
            prev = m.get(k, k).clone();
        }
        let d = m.get(n - 1, n - 1).clone();
        if sign {
            d.neg()
        } else {
            d
        }
    }

    /// Classical adjugate via cofactors (each a Bareiss determinant), so that
    /// `self * adj = det * I` without field division.
    pub fn adjugate(&self) -> Self {
        assert_eq!(self.rows, self.cols);
        let n = self.rows;
        Mat::from_fn(n, n, |i, j| {
            // cofactor C_{j,i}
            let minor = Mat::from_fn(n - 1, n - 1, |r, c| {
                let rr = if r < j { r } else { r + 1 };
                let cc = if c < i { c } else { c + 1 };
                self.get(rr, cc).clone()
            });
            let d = minor.det_bareiss();
            if (i + j) % 2 == 1 {
                d.neg()
            } else {
                d
            }
        })
    }
}
