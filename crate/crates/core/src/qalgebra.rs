//! The quantized enveloping algebra as formal linear combinations of
//! generator words, evaluated on weight modules.
//!
//! There is deliberately no PBW normal form: equality of algebra elements is
//! semantic, tested by evaluating on the symbolic Verma module, whose
//! faithfulness (up to the documented height caveat) makes the oracle sound.

use crate::cartan::Gcm;
use crate::cato::{BlockOp, CatOError, ModScalar, WeightModule};
use crate::linalg::{PolyL, Ring};
use crate::scalars::{parse_scalar, q_binomial, q_factorial, ScalarQ};
use std::collections::BTreeMap;
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QalgebraError {
    #[error("generator index {0} out of range")]
    BadIndex(usize),
    #[error("Serre defect needs two distinct nodes, got i = j = {0}")]
    SerreDiagonal(usize),
    #[error("height cutoff {cutoff} too small: words descend {needed} below their source")]
    HeightTooSmall { cutoff: i64, needed: i64 },
    #[error("module error: {0}")]
    Module(#[from] CatOError),
    #[error("parse error: {0}")]
    Parse(String),
}

// ---------------------------------------------------------------------------
// generator symbols and algebra elements
// ---------------------------------------------------------------------------

/// Generator symbols; K is indexed by an integral coroot-lattice element,
/// so `K_i = K(d_i α_i^∨)`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub enum GenSymbol {
    E(usize),
    F(usize),
    K(Vec<i64>),
}

pub type Word = Vec<GenSymbol>;

/// Finite ScalarQ-linear combination of generator words, with adjacent
/// K-symbols merged and K(0) dropped.
#[derive(Clone, PartialEq, Debug, Default)]
pub struct AlgebraElement {
    terms: BTreeMap<Word, ScalarQ>,
}

fn normalize_word(w: &[GenSymbol]) -> Word {
    let mut out: Word = Vec::with_capacity(w.len());
    for s in w {
        match (out.last_mut(), s) {
            (Some(GenSymbol::K(acc)), GenSymbol::K(mu)) => {
                for (a, b) in acc.iter_mut().zip(mu) {
                    *a += b;
                }
                if acc.iter().all(|&x| x == 0) {
                    out.pop();
                }
            }
            (_, GenSymbol::K(mu)) if mu.iter().all(|&x| x == 0) => {}
            _ => out.push(s.clone()),
        }
    }
    out
}

impl AlgebraElement {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn one() -> Self {
        Self::term(vec![], ScalarQ::one())
    }

    pub fn term(word: Word, coeff: ScalarQ) -> Self {
        let mut out = Self::default();
        out.add_term(&word, coeff);
        out
    }

    pub fn generator(s: GenSymbol) -> Self {
        Self::term(vec![s], ScalarQ::one())
    }

    pub fn e(i: usize) -> Self {
        Self::generator(GenSymbol::E(i))
    }

    pub fn f(i: usize) -> Self {
        Self::generator(GenSymbol::F(i))
    }

    pub fn k(mu: Vec<i64>) -> Self {
        Self::term(vec![GenSymbol::K(mu)], ScalarQ::one())
    }

    /// K_i = K(d_i α_i^∨).
    pub fn k_i(gcm: &Gcm, i: usize) -> Self {
        let mut mu = vec![0i64; gcm.n];
        mu[i] = gcm.d[i];
        Self::k(mu)
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&Word, &ScalarQ)> {
        self.terms.iter()
    }

    fn add_term(&mut self, word: &[GenSymbol], coeff: ScalarQ) {
        if coeff.is_zero() {
            return;
        }
        let w = normalize_word(word);
        match self.terms.get_mut(&w) {
            Some(c) => {
                *c = c.add(&coeff);
                if c.is_zero() {
                    self.terms.remove(&w);
                }
            }
            None => {
                self.terms.insert(w, coeff);
            }
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        let mut out = self.clone();
        for (w, c) in &other.terms {
            out.add_term(w, c.clone());
        }
        out
    }

    pub fn sub(&self, other: &Self) -> Self {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Self {
        AlgebraElement {
            terms: self
                .terms
                .iter()
                .map(|(w, c)| (w.clone(), c.neg()))
                .collect(),
        }
    }

    pub fn scale(&self, c: &ScalarQ) -> Self {
        if c.is_zero() {
            return Self::zero();
        }
        AlgebraElement {
            terms: self
                .terms
                .iter()
                .map(|(w, k)| (w.clone(), k.mul(c)))
                .collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for (w1, c1) in &self.terms {
            for (w2, c2) in &other.terms {
                let mut w = w1.clone();
                w.extend(w2.iter().cloned());
                out.add_term(&w, c1.mul(c2));
            }
        }
        out
    }

    pub fn pow(&self, e: u32) -> Self {
        let mut acc = Self::one();
        for _ in 0..e {
            acc = acc.mul(self);
        }
        acc
    }

    /// Maximal depth any prefix of any word descends below its starting
    /// weight (in height), bounding the truncation sensitivity of
    /// evaluation.
    pub fn max_descent(&self) -> i64 {
        let mut max = 0i64;
        for w in self.terms.keys() {
            let mut h = 0i64;
            // rightmost symbol acts first
            for s in w.iter().rev() {
                match s {
                    GenSymbol::F(_) => h += 1,
                    GenSymbol::E(_) => h -= 1,
                    GenSymbol::K(_) => {}
                }
                max = max.max(h);
            }
        }
        max
    }
}

impl fmt::Display for AlgebraElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        let mut first = true;
        for (w, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            write!(f, "({})", c)?;
            for s in w {
                match s {
                    GenSymbol::E(i) => write!(f, " E{}", i + 1)?,
                    GenSymbol::F(i) => write!(f, " F{}", i + 1)?,
                    GenSymbol::K(mu) => {
                        write!(f, " K(")?;
                        let mut any = false;
                        for (j, &m) in mu.iter().enumerate() {
                            if m == 0 {
                                continue;
                            }
                            if any && m > 0 {
                                write!(f, "+")?;
                            }
                            match m {
                                1 => {}
                                -1 => write!(f, "-")?,
                                _ => write!(f, "{}", m)?,
                            }
                            write!(f, "a{}v", j + 1)?;
                            any = true;
                        }
                        if !any {
                            write!(f, "0")?;
                        }
                        write!(f, ")")?;
                    }
                }
            }
        }
        Ok(())
    }
}

/// Parse the Display form: `(coeff) E1 F2 K(a1v-2a2v) + ...`.
pub fn parse_element(n: usize, s: &str) -> Result<AlgebraElement, QalgebraError> {
    let s = s.trim();
    if s == "0" {
        return Ok(AlgebraElement::zero());
    }
    let mut out = AlgebraElement::zero();
    // split top-level terms on " + " at parenthesis depth 0
    let mut depth = 0i32;
    let mut terms = Vec::new();
    let mut cur = String::new();
    let chars: Vec<char> = s.chars().collect();
    let mut i = 0;
    while i < chars.len() {
        if chars[i] == '(' {
            depth += 1;
        }
        if chars[i] == ')' {
            depth -= 1;
        }
        if depth == 0 && chars[i..].starts_with(&[' ', '+', ' ']) {
            terms.push(cur.clone());
            cur.clear();
            i += 3;
            continue;
        }
        cur.push(chars[i]);
        i += 1;
    }
    terms.push(cur);
    for t in terms {
        let t = t.trim();
        let Some(close) = find_matching(t) else {
            return Err(QalgebraError::Parse(format!("missing coefficient in {t:?}")));
        };
        let coeff =
            parse_scalar(&t[1..close]).map_err(|e| QalgebraError::Parse(e.to_string()))?;
        let mut word: Word = Vec::new();
        for sym in t[close + 1..].split_whitespace() {
            if let Some(rest) = sym.strip_prefix('E') {
                let i: usize = rest
                    .parse()
                    .map_err(|_| QalgebraError::Parse(format!("bad symbol {sym}")))?;
                word.push(GenSymbol::E(i - 1));
            } else if let Some(rest) = sym.strip_prefix('F') {
                let i: usize = rest
                    .parse()
                    .map_err(|_| QalgebraError::Parse(format!("bad symbol {sym}")))?;
                word.push(GenSymbol::F(i - 1));
            } else if let Some(inner) = sym.strip_prefix("K(").and_then(|r| r.strip_suffix(')')) {
                word.push(GenSymbol::K(parse_coroot(n, inner)?));
            } else {
                return Err(QalgebraError::Parse(format!("bad symbol {sym}")));
            }
        }
        out.add_term(&word, coeff);
    }
    Ok(out)
}

fn find_matching(t: &str) -> Option<usize> {
    if !t.starts_with('(') {
        return None;
    }
    let mut depth = 0i32;
    for (i, c) in t.char_indices() {
        if c == '(' {
            depth += 1;
        }
        if c == ')' {
            depth -= 1;
            if depth == 0 {
                return Some(i);
            }
        }
    }
    None
}

fn parse_coroot(n: usize, s: &str) -> Result<Vec<i64>, QalgebraError> {
    let mut mu = vec![0i64; n];
    if s == "0" {
        return Ok(mu);
    }
    // terms like 2a1v, -a3v, a2v separated by signs
    let mut rest = s;
    while !rest.is_empty() {
        let sign = if let Some(r) = rest.strip_prefix('-') {
            rest = r;
            -1
        } else if let Some(r) = rest.strip_prefix('+') {
            rest = r;
            1
        } else {
            1
        };
        let a_pos = rest
            .find('a')
            .ok_or_else(|| QalgebraError::Parse(format!("bad coroot term {rest:?}")))?;
        let coeff: i64 = if a_pos == 0 {
            1
        } else {
            rest[..a_pos]
                .parse()
                .map_err(|_| QalgebraError::Parse(format!("bad coefficient in {rest:?}")))?
        };
        let v_pos = rest[a_pos..]
            .find('v')
            .ok_or_else(|| QalgebraError::Parse(format!("bad coroot term {rest:?}")))?
            + a_pos;
        let idx: usize = rest[a_pos + 1..v_pos]
            .parse()
            .map_err(|_| QalgebraError::Parse(format!("bad index in {rest:?}")))?;
        if idx == 0 || idx > n {
            return Err(QalgebraError::BadIndex(idx));
        }
        mu[idx - 1] += sign * coeff;
        rest = &rest[v_pos + 1..];
    }
    Ok(mu)
}

// ---------------------------------------------------------------------------
// evaluation
// ---------------------------------------------------------------------------

/// Evaluate an algebra element to a weight-block operator on a module.
pub fn evaluate<F: ModScalar>(
    x: &AlgebraElement,
    m: &WeightModule<F>,
) -> Result<BlockOp<F>, QalgebraError> {
    let dims = m.dims();
    let mut out = BlockOp::zero();
    for (word, coeff) in x.terms() {
        let mut op = BlockOp::identity(&dims);
        for s in word.iter().rev() {
            let next = match s {
                GenSymbol::E(i) => {
                    if *i >= m.gcm().n {
                        return Err(QalgebraError::BadIndex(*i));
                    }
                    m.e_ops[*i].clone()
                }
                GenSymbol::F(i) => {
                    if *i >= m.gcm().n {
                        return Err(QalgebraError::BadIndex(*i));
                    }
                    m.f_ops[*i].clone()
                }
                GenSymbol::K(mu) => m.k_op(mu)?,
            };
            op = next.compose(&op);
        }
        out = out.add(&op.scale(&F::from_scalarq(coeff, m.gcm())));
    }
    Ok(out)
}

/// Divided power X_i^{(a)} = X_i^a / [a]_i!.
pub fn divided_power(gcm: &Gcm, s: &GenSymbol, a: u32) -> AlgebraElement {
    let i = match s {
        GenSymbol::E(i) | GenSymbol::F(i) => *i,
        GenSymbol::K(_) => panic!("divided powers are for E/F generators"),
    };
    let fact = q_factorial(a as i64, gcm.d[i] as u32);
    AlgebraElement::generator(s.clone())
        .pow(a)
        .scale(&fact.inv().unwrap())
}

// ---------------------------------------------------------------------------
// relations
// ---------------------------------------------------------------------------

/// The q-Serre defect Σ_m (−1)^m [1−a_ij ¦ m]_i X_i^{1−a_ij−m} X_j X_i^m
/// for X = E or F.
pub fn serre_defect(
    gcm: &Gcm,
    i: usize,
    j: usize,
    raising: bool,
) -> Result<AlgebraElement, QalgebraError> {
    if i == j {
        return Err(QalgebraError::SerreDiagonal(i));
    }
    if i >= gcm.n || j >= gcm.n {
        return Err(QalgebraError::BadIndex(i.max(j)));
    }
    let s = 1 - gcm.a[i][j];
    let gen = |k: usize| {
        if raising {
            GenSymbol::E(k)
        } else {
            GenSymbol::F(k)
        }
    };
    let mut out = AlgebraElement::zero();
    for m in 0..=s {
        let mut coeff = q_binomial(s, m, gcm.d[i] as u32).unwrap();
        if m % 2 == 1 {
            coeff = coeff.neg();
        }
        let mut word = vec![gen(i); (s - m) as usize];
        word.push(gen(j));
        word.extend(vec![gen(i); m as usize]);
        out = out.add(&AlgebraElement::term(word, coeff));
    }
    Ok(out)
}

/// [E_i, F_j] − δ_ij (K_i − K_i^{-1})/(q_i − q_i^{-1}).
pub fn ef_commutator_defect(gcm: &Gcm, i: usize, j: usize) -> AlgebraElement {
    let comm = AlgebraElement::e(i)
        .mul(&AlgebraElement::f(j))
        .sub(&AlgebraElement::f(j).mul(&AlgebraElement::e(i)));
    if i != j {
        return comm;
    }
    let d = gcm.d[i];
    let denom = ScalarQ::v_pow(2 * d).sub(&ScalarQ::v_pow(-2 * d));
    let inv = denom.inv().unwrap();
    let mut mu = vec![0i64; gcm.n];
    mu[i] = d;
    let neg_mu: Vec<i64> = mu.iter().map(|x| -x).collect();
    let k_part = AlgebraElement::k(mu)
        .sub(&AlgebraElement::k(neg_mu))
        .scale(&inv);
    comm.sub(&k_part)
}

/// All defining relations as elements that must evaluate to zero:
/// K-conjugations, [E,F]-commutators, and both Serre families.
pub fn defining_relation_defects(gcm: &Gcm) -> Vec<(String, AlgebraElement)> {
    let n = gcm.n;
    let mut out = Vec::new();
    for i in 0..n {
        for j in 0..n {
            out.push((format!("[E{},F{}]", i + 1, j + 1), ef_commutator_defect(gcm, i, j)));
            if i != j {
                out.push((
                    format!("serreE({},{})", i + 1, j + 1),
                    serre_defect(gcm, i, j, true).unwrap(),
                ));
                out.push((
                    format!("serreF({},{})", i + 1, j + 1),
                    serre_defect(gcm, i, j, false).unwrap(),
                ));
            }
            // K E_j K^{-1} = q_i^{a_ij} E_j with K = K_i
            let mut mu = vec![0i64; n];
            mu[i] = gcm.d[i];
            let neg_mu: Vec<i64> = mu.iter().map(|x| -x).collect();
            let conj = AlgebraElement::k(mu.clone())
                .mul(&AlgebraElement::e(j))
                .mul(&AlgebraElement::k(neg_mu.clone()));
            let scaled = AlgebraElement::e(j).scale(&ScalarQ::v_pow(2 * gcm.d[i] * gcm.a[i][j]));
            out.push((format!("K{}E{}conj", i + 1, j + 1), conj.sub(&scaled)));
            let conj = AlgebraElement::k(mu)
                .mul(&AlgebraElement::f(j))
                .mul(&AlgebraElement::k(neg_mu));
            let scaled = AlgebraElement::f(j).scale(&ScalarQ::v_pow(-2 * gcm.d[i] * gcm.a[i][j]));
            out.push((format!("K{}F{}conj", i + 1, j + 1), conj.sub(&scaled)));
        }
    }
    out
}

// ---------------------------------------------------------------------------
// Lusztig braid automorphisms
// ---------------------------------------------------------------------------

/// T_i on a single generator symbol.
pub fn lusztig_t(gcm: &Gcm, i: usize, s: &GenSymbol) -> AlgebraElement {
    let n = gcm.n;
    match s {
        GenSymbol::K(mu) => {
            // K(s_i μ) with s_i(α_j^∨) = α_j^∨ − a_{ji} α_i^∨
            let pairing: i64 = (0..n).map(|j| gcm.a[j][i] * mu[j]).sum();
            let mut out = mu.clone();
            out[i] -= pairing;
            AlgebraElement::k(out)
        }
        GenSymbol::E(j) if *j == i => {
            // T_i(E_i) = −F_i K(d_i α_i^∨)
            let mut mu = vec![0i64; n];
            mu[i] = gcm.d[i];
            AlgebraElement::term(vec![GenSymbol::F(i), GenSymbol::K(mu)], ScalarQ::one()).neg()
        }
        GenSymbol::F(j) if *j == i => {
            // T_i(F_i) = −K(−d_i α_i^∨) E_i
            let mut mu = vec![0i64; n];
            mu[i] = -gcm.d[i];
            AlgebraElement::term(vec![GenSymbol::K(mu), GenSymbol::E(i)], ScalarQ::one()).neg()
        }
        GenSymbol::E(j) => {
            // Σ_{r=0}^{s} (−1)^r q_i^{−r} E_i^{(s−r)} E_j E_i^{(r)}, s = −a_ij
            let s_exp = (-gcm.a[i][*j]) as u32;
            let mut out = AlgebraElement::zero();
            for r in 0..=s_exp {
                let mut t = divided_power(gcm, &GenSymbol::E(i), s_exp - r);
                t = t.mul(&AlgebraElement::e(*j));
                t = t.mul(&divided_power(gcm, &GenSymbol::E(i), r));
                let mut c = ScalarQ::v_pow(-2 * gcm.d[i] * r as i64);
                if r % 2 == 1 {
                    c = c.neg();
                }
                out = out.add(&t.scale(&c));
            }
            out
        }
        GenSymbol::F(j) => {
            // Σ_{r=0}^{s} (−1)^r q_i^{r} F_i^{(r)} F_j F_i^{(s−r)}
            let s_exp = (-gcm.a[i][*j]) as u32;
            let mut out = AlgebraElement::zero();
            for r in 0..=s_exp {
                let mut t = divided_power(gcm, &GenSymbol::F(i), r);
                t = t.mul(&AlgebraElement::f(*j));
                t = t.mul(&divided_power(gcm, &GenSymbol::F(i), s_exp - r));
                let mut c = ScalarQ::v_pow(2 * gcm.d[i] * r as i64);
                if r % 2 == 1 {
                    c = c.neg();
                }
                out = out.add(&t.scale(&c));
            }
            out
        }
    }
}

/// T_i extended multiplicatively to an algebra element.
pub fn lusztig_t_element(gcm: &Gcm, i: usize, x: &AlgebraElement) -> AlgebraElement {
    let mut out = AlgebraElement::zero();
    for (word, coeff) in x.terms() {
        let mut prod = AlgebraElement::one();
        for s in word {
            prod = prod.mul(&lusztig_t(gcm, i, s));
        }
        out = out.add(&prod.scale(coeff));
    }
    out
}

// ---------------------------------------------------------------------------
// the Verma equality oracle
// ---------------------------------------------------------------------------

/// Semantic equality via the symbolic Verma module: x = y iff x − y
/// annihilates M(λ_symbolic) on every block the truncation leaves intact.
/// Sound for elements whose words never descend more than `height` below a
/// tested weight; the caller's height must dominate the descent of x − y.
pub fn equality_via_verma(
    x: &AlgebraElement,
    y: &AlgebraElement,
    m: &WeightModule<PolyL>,
) -> Result<bool, QalgebraError> {
    let diff = x.sub(y);
    if diff.is_zero() {
        return Ok(true);
    }
    let descent = diff.max_descent();
    if descent > m.cutoff {
        return Err(QalgebraError::HeightTooSmall {
            cutoff: m.cutoff,
            needed: descent,
        });
    }
    let op = evaluate(&diff, m)?;
    // restrict to blocks whose F-descent stays inside the cutoff
    for (&src, tgts) in &op.maps {
        if m.blocks[src].height() + descent > m.cutoff {
            continue;
        }
        for mat in tgts.values() {
            if !mat.is_zero() {
                return Ok(false);
            }
        }
    }
    Ok(true)
}

/// Check that an operator is zero on the reliable blocks of a truncated
/// module (same caveat as [`equality_via_verma`]).
pub fn zero_on_reliable_blocks<F: Ring>(
    op: &BlockOp<F>,
    m: &WeightModule<F>,
    descent: i64,
) -> bool {
    for (&src, tgts) in &op.maps {
        if m.truncated && m.blocks[src].height() + descent > m.cutoff {
            continue;
        }
        for mat in tgts.values() {
            if !mat.is_zero() {
                return false;
            }
        }
    }
    true
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cartan::{gcm_a1, gcm_a1xa1, gcm_a2, gcm_b2, Realization};
    use crate::cato::{verma, Hw};
    use crate::scalars::{q_integer, Rat};

    fn rat(n: i64) -> Rat {
        Rat::from_integer(n.into())
    }

    fn sym_verma(gcm: &Gcm, cutoff: i64) -> WeightModule<PolyL> {
        verma(&Realization::new(gcm.clone()), Hw::Symbolic, cutoff).unwrap()
    }

    #[test]
    fn k_action_on_highest_vector() {
        // K(α1^∨) on sl2 M(1) top vector: v^{2·1} = q
        let gcm = gcm_a1();
        let m: WeightModule<ScalarQ> = verma(
            &Realization::new(gcm.clone()),
            Hw::Numeric(vec![rat(1)]),
            3,
        )
        .unwrap();
        let op = evaluate(&AlgebraElement::k(vec![1]), &m).unwrap();
        let v = m.highest_vector();
        let kv = op.apply(&v);
        let top = m.block_index[&vec![0]];
        assert_eq!(kv[top][0], ScalarQ::v_pow(2));
        // E on the highest vector is zero
        let ev = evaluate(&AlgebraElement::e(0), &m).unwrap().apply(&v);
        assert!(ev.iter().all(|b| b.iter().all(ScalarQ::is_zero)));
    }

    #[test]
    fn ef_commutator_on_verma() {
        // E1F1 − F1E1 on sl2 M(3) at weight λ−α: [λ] on Fv minus [λ−2]…
        // must equal the K-expression everywhere
        let gcm = gcm_a1();
        let m: WeightModule<ScalarQ> = verma(
            &Realization::new(gcm.clone()),
            Hw::Numeric(vec![rat(3)]),
            4,
        )
        .unwrap();
        let defect = ef_commutator_defect(&gcm, 0, 0);
        let op = evaluate(&defect, &m).unwrap();
        assert!(zero_on_reliable_blocks(&op, &m, defect.max_descent()));
        // the commutator alone acts on the weight-(λ−2) line Fv by
        // [(λ−2)(α^∨)] = [1]: EF²v = ([λ]+[λ−2])Fv while FEFv = [λ]Fv
        let comm = AlgebraElement::e(0)
            .mul(&AlgebraElement::f(0))
            .sub(&AlgebraElement::f(0).mul(&AlgebraElement::e(0)));
        let op = evaluate(&comm, &m).unwrap();
        let mut x = m.zero_vector();
        let b1 = m.block_index[&vec![1]];
        x[b1][0] = ScalarQ::one();
        let y = op.apply(&x);
        assert_eq!(y[b1][0], q_integer(1, 1));
    }

    #[test]
    fn serre_defect_shapes() {
        // A1×A1: plain commutator
        let gcm = gcm_a1xa1();
        let s = serre_defect(&gcm, 0, 1, true).unwrap();
        let expect = AlgebraElement::e(0)
            .mul(&AlgebraElement::e(1))
            .sub(&AlgebraElement::e(1).mul(&AlgebraElement::e(0)));
        assert_eq!(s, expect);
        // A2: E1²E2 − [2] E1E2E1 + E2E1²
        let gcm = gcm_a2();
        let s = serre_defect(&gcm, 0, 1, true).unwrap();
        let e1 = AlgebraElement::e(0);
        let e2 = AlgebraElement::e(1);
        let expect = e1
            .mul(&e1)
            .mul(&e2)
            .sub(&e1.mul(&e2).mul(&e1).scale(&q_integer(2, 1)))
            .add(&e2.mul(&e1).mul(&e1));
        assert_eq!(s, expect);
        // B2 long node (a_21 = −1? the long root is node 2 with d = 2;
        // i = long, j = short has a_ij = −1 so the 4-term case needs the
        // short node i = 0 with a_01 = −2): coefficients 1, −[3]_i, [3]_i, −1
        let gcm = gcm_b2();
        let s = serre_defect(&gcm, 0, 1, true).unwrap();
        let coeffs: Vec<ScalarQ> = s.terms().map(|(_, c)| c.clone()).collect();
        let three = q_integer(3, 1);
        assert_eq!(coeffs.len(), 4);
        assert!(coeffs.contains(&ScalarQ::one()));
        assert!(coeffs.contains(&three));
        assert!(coeffs.contains(&three.neg()));
        assert!(coeffs.contains(&ScalarQ::one().neg()));
        assert!(serre_defect(&gcm, 1, 1, true).is_err());
    }

    #[test]
    fn defining_relations_vanish_on_vermas() {
        for gcm in [gcm_a1(), gcm_a2(), gcm_b2()] {
            let m = sym_verma(&gcm, 4);
            for (name, defect) in defining_relation_defects(&gcm) {
                assert!(
                    equality_via_verma(&defect, &AlgebraElement::zero(), &m).unwrap(),
                    "{name} fails on symbolic Verma of {:?}",
                    gcm.a
                );
            }
        }
    }

    #[test]
    fn evaluate_is_homomorphism() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3);
        let gcm = gcm_a2();
        let m = sym_verma(&gcm, 3);
        for _ in 0..12 {
            let rand_word = |rng: &mut rand_chacha::ChaCha8Rng| -> AlgebraElement {
                let len = rng.gen_range(0..=3);
                let word: Word = (0..len)
                    .map(|_| match rng.gen_range(0..3) {
                        0 => GenSymbol::E(rng.gen_range(0..2)),
                        1 => GenSymbol::F(rng.gen_range(0..2)),
                        _ => {
                            let mut mu = vec![0i64; 2];
                            mu[rng.gen_range(0..2)] = rng.gen_range(-2..=2);
                            GenSymbol::K(mu)
                        }
                    })
                    .collect();
                AlgebraElement::term(word, ScalarQ::v_pow(rng.gen_range(-2..=2)))
            };
            let x = rand_word(&mut rng);
            let y = rand_word(&mut rng);
            let lhs = evaluate(&x.mul(&y), &m).unwrap();
            let rhs = evaluate(&x, &m).unwrap().compose(&evaluate(&y, &m).unwrap());
            // identical where both are defined; truncation clips both the
            // same way only on reliable blocks
            let descent = x.max_descent() + y.max_descent();
            assert!(zero_on_reliable_blocks(&lhs.sub(&rhs), &m, descent));
        }
    }

    #[test]
    fn lusztig_t_values() {
        let gcm = gcm_a2();
        // T_1(E_1) = −F1 K(d1 α1^∨)
        let t = lusztig_t(&gcm, 0, &GenSymbol::E(0));
        let expect =
            AlgebraElement::term(vec![GenSymbol::F(0), GenSymbol::K(vec![1, 0])], ScalarQ::one())
                .neg();
        assert_eq!(t, expect);
        // T_1(K(μ)) = K(s_1 μ): μ = α1^∨ ↦ −α1^∨ + …: s1(α1^∨) = −α1^∨
        let t = lusztig_t(&gcm, 0, &GenSymbol::K(vec![1, 0]));
        assert_eq!(t, AlgebraElement::k(vec![-1, 0]));
        // s1(α2^∨) = α2^∨ + α1^∨
        let t = lusztig_t(&gcm, 0, &GenSymbol::K(vec![0, 1]));
        assert_eq!(t, AlgebraElement::k(vec![1, 1]));
        // T_1(E_2) = E1E2 − v^{-2} E2E1 in A2
        let t = lusztig_t(&gcm, 0, &GenSymbol::E(1));
        let expect = AlgebraElement::e(0)
            .mul(&AlgebraElement::e(1))
            .sub(&AlgebraElement::e(1).mul(&AlgebraElement::e(0)).scale(&ScalarQ::v_pow(-2)));
        assert_eq!(t, expect);
    }

    #[test]
    fn lusztig_t_is_algebra_map() {
        // T_i of a product = product of images, via the Verma oracle
        let gcm = gcm_a2();
        let m = sym_verma(&gcm, 4);
        let gens = [
            GenSymbol::E(0),
            GenSymbol::E(1),
            GenSymbol::F(0),
            GenSymbol::F(1),
            GenSymbol::K(vec![1, 0]),
        ];
        for i in 0..2 {
            for a in &gens {
                for b in &gens {
                    let prod = AlgebraElement::generator(a.clone())
                        .mul(&AlgebraElement::generator(b.clone()));
                    let lhs = lusztig_t_element(&gcm, i, &prod);
                    let rhs = lusztig_t(&gcm, i, a).mul(&lusztig_t(&gcm, i, b));
                    assert!(
                        equality_via_verma(&lhs, &rhs, &m).unwrap(),
                        "T_{} not multiplicative on {:?}·{:?}",
                        i + 1,
                        a,
                        b
                    );
                }
            }
        }
    }

    #[test]
    fn equality_oracle_and_caveats() {
        let gcm = gcm_a1();
        let m = sym_verma(&gcm, 2);
        // reflexivity
        let e = AlgebraElement::e(0);
        assert!(equality_via_verma(&e, &e, &m).unwrap());
        // E1F1 − F1E1 = (K1 − K1^{-1})/(q1 − q1^{-1})
        let defect = ef_commutator_defect(&gcm, 0, 0);
        assert!(equality_via_verma(&defect, &AlgebraElement::zero(), &m).unwrap());
        // distinct elements detected
        assert!(!equality_via_verma(&e, &AlgebraElement::f(0), &m).unwrap());
        // too-deep words rejected
        let deep = AlgebraElement::f(0).pow(3);
        assert!(matches!(
            equality_via_verma(&deep, &AlgebraElement::zero(), &m),
            Err(QalgebraError::HeightTooSmall { .. })
        ));
    }

    #[test]
    fn serre_defect_vanishes_a2_height4() {
        let gcm = gcm_a2();
        let m = sym_verma(&gcm, 4);
        let s = serre_defect(&gcm, 0, 1, false).unwrap();
        assert!(equality_via_verma(&s, &AlgebraElement::zero(), &m).unwrap());
    }

    #[test]
    fn display_parse_round_trip() {
        let gcm = gcm_a2();
        let x = serre_defect(&gcm, 0, 1, true)
            .unwrap()
            .add(&AlgebraElement::term(
                vec![GenSymbol::F(1), GenSymbol::K(vec![2, -1])],
                q_integer(2, 1).neg(),
            ));
        let s = x.to_string();
        let y = parse_element(2, &s).unwrap();
        assert_eq!(x, y, "round trip failed for {s}");
        assert_eq!(parse_element(2, "0").unwrap(), AlgebraElement::zero());
    }

    #[test]
    fn k_normalization() {
        // adjacent K's merge, K(0) drops
        let x = AlgebraElement::term(
            vec![GenSymbol::K(vec![1, 0]), GenSymbol::K(vec![-1, 0])],
            ScalarQ::one(),
        );
        assert_eq!(x, AlgebraElement::one());
        let y = AlgebraElement::term(
            vec![GenSymbol::K(vec![1, 1]), GenSymbol::K(vec![0, 1])],
            ScalarQ::one(),
        );
        assert_eq!(y, AlgebraElement::k(vec![1, 2]));
    }
}
