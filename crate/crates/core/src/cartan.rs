//! Generalized Cartan matrices, realizations, root systems, Weyl groups and
//! braid/pure-braid words, and nested-set combinatorics.
//!
//! Conventions used throughout the crate:
//!
//! * Weights are coordinate vectors of their values on the basis of `h`
//!   (coroots `α_1^∨..α_n^∨` first, then derivations for non-finite types).
//!   In particular `μ(α_i^∨)` is just coordinate `i`, and fundamental
//!   weights of finite types are standard basis vectors.
//! * Roots (and coroots) additionally carry exact integer coordinates in
//!   the simple-root (simple-coroot) basis, on which all Weyl computations
//!   run in integer arithmetic.

use crate::linalg::Mat;
use crate::scalars::Rat;
use itertools::Itertools;
use num::Signed;
use std::collections::{BTreeSet, HashMap, HashSet, VecDeque};
use std::fmt;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum CartanError {
    #[error("matrix is not square or empty")]
    Shape,
    #[error("a[{i}][{i}] = {val}, diagonal entries must be 2")]
    Diagonal { i: usize, val: i64 },
    #[error("a[{i}][{j}] = {val} must be <= 0 off the diagonal")]
    OffDiagonalSign { i: usize, j: usize, val: i64 },
    #[error("a[{i}][{j}] = 0 but a[{j}][{i}] = {val}: zeros must be symmetric")]
    ZeroPattern { i: usize, j: usize, val: i64 },
    #[error("not symmetrizable: cycle {cycle:?} has inconsistent ratio products")]
    NotSymmetrizable { cycle: Vec<usize> },
    #[error("indefinite type requires a finite height cutoff")]
    IndefiniteNeedsCutoff,
    #[error("pure braid letter {index}: w(α_{i}) is a negative root")]
    ImpureLetter { index: usize, i: usize },
    #[error("weight pairs non-integrally with coroot of letter {index}: {value}")]
    NonIntegralPairing { index: usize, value: String },
    #[error("diagram is not of type A with vertices in path order")]
    NotTypeA,
    #[error("bracketing parse error: {0}")]
    Bracketing(String),
}

fn rat(n: i64) -> Rat {
    Rat::from_integer(n.into())
}

fn rzero() -> Rat {
    num::Zero::zero()
}

fn rone() -> Rat {
    num::One::one()
}

// ---------------------------------------------------------------------------
// GCM
// ---------------------------------------------------------------------------

#[derive(Clone, Copy, PartialEq, Eq, Debug, serde::Serialize)]
pub enum CartanKind {
    Finite,
    Affine,
    Indefinite,
}

/// A symmetrizable generalized Cartan matrix with its coprime positive
/// symmetrizer.
#[derive(Clone, PartialEq, Debug)]
pub struct Gcm {
    pub n: usize,
    pub a: Vec<Vec<i64>>,
    pub d: Vec<i64>,
    pub kind: CartanKind,
}

/// Solve `d_i a_{ij} = d_j a_{ji}` over positive coprime integers by
/// propagating ratios along the diagram and checking cycles.
pub fn symmetrize(a: &[Vec<i64>]) -> Result<Vec<i64>, CartanError> {
    let n = a.len();
    // propagate d_j / d_i = a_{ij} / a_{ji} along edges
    let mut ratio: Vec<Option<Rat>> = vec![None; n];
    let mut parent: Vec<Option<usize>> = vec![None; n];
    for start in 0..n {
        if ratio[start].is_some() {
            continue;
        }
        ratio[start] = Some(rone());
        let mut queue = VecDeque::from([start]);
        while let Some(i) = queue.pop_front() {
            for j in 0..n {
                if i == j || a[i][j] == 0 {
                    continue;
                }
                let r = ratio[i].clone().unwrap() * rat(a[i][j]) / rat(a[j][i]);
                match &ratio[j] {
                    None => {
                        ratio[j] = Some(r);
                        parent[j] = Some(i);
                        queue.push_back(j);
                    }
                    Some(existing) => {
                        if *existing != r {
                            // walk parents to produce a witnessing cycle
                            let mut cycle = vec![j, i];
                            let mut k = i;
                            while let Some(p) = parent[k] {
                                cycle.push(p);
                                k = p;
                            }
                            return Err(CartanError::NotSymmetrizable { cycle });
                        }
                    }
                }
            }
        }
    }
    // clear denominators per connected component, then take the global
    // normalization with overall gcd 1
    let ratios: Vec<Rat> = ratio.into_iter().map(Option::unwrap).collect();
    let mut denom_lcm: num::BigInt = num::One::one();
    for r in &ratios {
        denom_lcm = num::integer::lcm(denom_lcm.clone(), r.denom().clone());
    }
    let mut ints: Vec<num::BigInt> = ratios
        .iter()
        .map(|r| r.numer() * (&denom_lcm / r.denom()))
        .collect();
    let mut g: num::BigInt = num::Zero::zero();
    for x in &ints {
        g = num::integer::gcd(g.clone(), x.clone());
    }
    for x in &mut ints {
        *x /= &g;
    }
    use num::ToPrimitive;
    Ok(ints.iter().map(|x| x.to_i64().unwrap()).collect())
}

impl Gcm {
    pub fn new(a: Vec<Vec<i64>>) -> Result<Self, CartanError> {
        let n = a.len();
        if n == 0 || a.iter().any(|r| r.len() != n) {
            return Err(CartanError::Shape);
        }
        for i in 0..n {
            if a[i][i] != 2 {
                return Err(CartanError::Diagonal { i, val: a[i][i] });
            }
            for j in 0..n {
                if i != j {
                    if a[i][j] > 0 {
                        return Err(CartanError::OffDiagonalSign { i, j, val: a[i][j] });
                    }
                    if a[i][j] == 0 && a[j][i] != 0 {
                        return Err(CartanError::ZeroPattern { i, j, val: a[j][i] });
                    }
                }
            }
        }
        let d = symmetrize(&a)?;
        let kind = classify(&a, &d);
        Ok(Gcm { n, a, d, kind })
    }

    /// Sum of `A_{n-1}`-type blocks in path order is common enough to name.
    pub fn type_a(n: usize) -> Self {
        let a = (0..n)
            .map(|i| {
                (0..n)
                    .map(|j| {
                        if i == j {
                            2
                        } else if i.abs_diff(j) == 1 {
                            -1
                        } else {
                            0
                        }
                    })
                    .collect()
            })
            .collect();
        Gcm::new(a).unwrap()
    }

    /// Coxeter exponent m_ij of the rank-2 subsystem on nodes i, j; None
    /// encodes m = ∞.
    pub fn coxeter_m(&self, i: usize, j: usize) -> Option<u32> {
        match self.a[i][j] * self.a[j][i] {
            0 => Some(2),
            1 => Some(3),
            2 => Some(4),
            3 => Some(6),
            _ => None,
        }
    }

    /// i ~ j in the Dynkin diagram.
    pub fn adjacent(&self, i: usize, j: usize) -> bool {
        i != j && self.a[i][j] != 0
    }
}

/// Finite ⇔ the symmetrization D·A is positive definite; affine ⇔ positive
/// semidefinite with nontrivial kernel.
fn classify(a: &[Vec<i64>], d: &[i64]) -> CartanKind {
    let n = a.len();
    let b = Mat::from_fn(n, n, |i, j| rat(d[i] * a[i][j]));
    let mut semidefinite = true;
    let mut definite = true;
    for k in 1..=n {
        let minor = Mat::from_fn(k, k, |i, j| b.get(i, j).clone()).det();
        if minor.is_negative() {
            semidefinite = false;
            definite = false;
        }
        if num::Zero::is_zero(&minor) {
            definite = false;
        }
    }
    // leading minors alone don't settle semidefiniteness, but for GCMs the
    // trichotomy theorem reduces it to checking all principal minors; do so
    if definite {
        return CartanKind::Finite;
    }
    if semidefinite {
        for subset in (0..n).powerset() {
            if subset.is_empty() || subset.len() == n {
                continue;
            }
            let k = subset.len();
            let minor =
                Mat::from_fn(k, k, |i, j| b.get(subset[i], subset[j]).clone()).det();
            if minor.is_negative() {
                return CartanKind::Indefinite;
            }
        }
        return CartanKind::Affine;
    }
    CartanKind::Indefinite
}

// ---------------------------------------------------------------------------
// Realization
// ---------------------------------------------------------------------------

/// A realization of a GCM: a vector space `h` with simple roots in `h*`,
/// simple coroots in `h`, and a non-degenerate symmetric bilinear form
/// satisfying `⟨α_i^∨, −⟩ = d_i^{-1} α_i`.
#[derive(Clone, Debug)]
pub struct Realization {
    pub gcm: Gcm,
    /// dim h = 2n − rank(A); equals n for finite type
    pub dim_h: usize,
    /// coordinates of α_i on the h basis (coroots then derivations)
    pub simple_roots: Vec<Vec<Rat>>,
    /// Gram matrix of ⟨·,·⟩ on h
    pub gram: Mat<Rat>,
    /// inverse Gram, i.e. the matrix of ν^{-1}: h* → h
    pub gram_inv: Mat<Rat>,
}

impl Realization {
    pub fn new(gcm: Gcm) -> Self {
        let n = gcm.n;
        let a_rat = Mat::from_fn(n, n, |i, j| rat(gcm.a[i][j]));
        let rank = a_rat.rank();
        let extra = n - rank;
        let dim_h = 2 * n - rank;
        // α_i values on coroots: α_i(α_j^∨) = a_{ji}
        let mut simple_roots: Vec<Vec<Rat>> = (0..n)
            .map(|i| (0..n).map(|j| rat(gcm.a[j][i])).collect())
            .collect();
        if extra > 0 {
            // append derivation values: greedily pick unit rows that raise
            // the joint rank of the root-coordinate matrix to n
            let mut rows: Vec<Vec<Rat>> = (0..n)
                .map(|j| (0..n).map(|i| rat(gcm.a[j][i])).collect())
                .collect();
            let mut chosen = Vec::new();
            for cand in 0..n {
                if chosen.len() == extra {
                    break;
                }
                let mut unit = vec![rzero(); n];
                unit[cand] = rone();
                let mut trial = rows.clone();
                trial.push(unit.clone());
                if Mat::from_rows(trial.clone()).rank() > Mat::from_rows(rows.clone()).rank() {
                    rows.push(unit);
                    chosen.push(cand);
                }
            }
            assert_eq!(chosen.len(), extra, "could not complete realization");
            for (i, root) in simple_roots.iter_mut().enumerate() {
                for &c in &chosen {
                    root.push(if c == i { rone() } else { rzero() });
                }
            }
        }
        // Gram: ⟨α_i^∨, x⟩ = d_i^{-1} α_i(x); ⟨derivation, derivation⟩ = 0
        let gram = Mat::from_fn(dim_h, dim_h, |i, j| {
            if i < n {
                &simple_roots[i][j] / rat(gcm.d[i])
            } else if j < n {
                &simple_roots[j][i] / rat(gcm.d[j])
            } else {
                rzero()
            }
        });
        let gram_inv = gram
            .invert()
            .expect("realization form must be non-degenerate");
        Realization {
            gcm,
            dim_h,
            simple_roots,
            gram,
            gram_inv,
        }
    }

    pub fn n(&self) -> usize {
        self.gcm.n
    }

    /// h*-coordinates of an integer vector in the simple-root basis.
    pub fn root_coords(&self, c: &[i64]) -> Vec<Rat> {
        let mut out = vec![rzero(); self.dim_h];
        for (i, &ci) in c.iter().enumerate() {
            for (o, s) in out.iter_mut().zip(&self.simple_roots[i]) {
                *o += s * rat(ci);
            }
        }
        out
    }

    /// ν^{-1}(μ) ∈ h for μ ∈ h*, both as coordinate vectors.
    pub fn nu_inv(&self, mu: &[Rat]) -> Vec<Rat> {
        self.gram_inv.mul_vec(mu)
    }

    /// Induced form on h*: ⟨μ, ν⟩ = μ · G^{-1} · ν.
    pub fn form_dual(&self, mu: &[Rat], nu: &[Rat]) -> Rat {
        dot(&self.gram_inv.mul_vec(mu), nu)
    }

    /// Form on h.
    pub fn form_h(&self, x: &[Rat], y: &[Rat]) -> Rat {
        dot(&self.gram.mul_vec(x), y)
    }

    /// Reflection s_i on h*-coordinates: μ ↦ μ − μ(α_i^∨) α_i.
    pub fn reflect_dual(&self, i: usize, mu: &[Rat]) -> Vec<Rat> {
        let c = mu[i].clone();
        mu.iter()
            .zip(&self.simple_roots[i])
            .map(|(m, a)| m - &c * a)
            .collect()
    }

    /// Apply a Weyl word (leftmost letter acts last) to h*-coordinates.
    pub fn act_dual(&self, w: &WeylElement, mu: &[Rat]) -> Vec<Rat> {
        let mut out = mu.to_vec();
        for &i in w.word.iter().rev() {
            out = self.reflect_dual(i, &out);
        }
        out
    }
}

fn dot(x: &[Rat], y: &[Rat]) -> Rat {
    x.iter().zip(y).map(|(a, b)| a * b).sum()
}

// ---------------------------------------------------------------------------
// Weyl elements
// ---------------------------------------------------------------------------

/// Weyl group element stored as a reduced word plus its exact action on the
/// root lattice (columns = images of simple roots in the simple-root basis).
#[derive(Clone, Debug)]
pub struct WeylElement {
    pub word: Vec<usize>,
    /// action[i] = coordinates of w(α_i) in the simple-root basis
    action: Vec<Vec<i64>>,
}

impl PartialEq for WeylElement {
    fn eq(&self, other: &Self) -> bool {
        self.action == other.action
    }
}

impl WeylElement {
    pub fn identity(n: usize) -> Self {
        WeylElement {
            word: vec![],
            action: (0..n)
                .map(|i| (0..n).map(|j| i64::from(i == j)).collect())
                .collect(),
        }
    }

    pub fn simple(gcm: &Gcm, i: usize) -> Self {
        Self::identity(gcm.n).mul_simple(gcm, i)
    }

    /// Build from an arbitrary (not necessarily reduced) word; the stored
    /// word is re-extracted in reduced form from the action.
    pub fn from_word(gcm: &Gcm, word: &[usize]) -> Self {
        let mut w = Self::identity(gcm.n);
        for &i in word {
            w = w.mul_simple(gcm, i);
        }
        w
    }

    /// w · s_i, with the reduced word recomputed.
    pub fn mul_simple(&self, gcm: &Gcm, i: usize) -> Self {
        let mut action = self.action.clone();
        // (w s_i)(α_j) = w(α_j − a_{ij} α_j'... ) : s_i(α_j) = α_j − a_{ij} α_i
        action[i] = self.action[i].iter().map(|x| -x).collect();
        for j in 0..gcm.n {
            if j != i {
                let coef = gcm.a[i][j];
                if coef != 0 {
                    action[j] = action[j]
                        .iter()
                        .zip(&self.action[i])
                        .map(|(x, y)| x - coef * y)
                        .collect();
                }
            }
        }
        let mut out = WeylElement {
            word: vec![],
            action,
        };
        out.word = out.extract_reduced_word(gcm);
        out
    }

    pub fn mul(&self, gcm: &Gcm, other: &Self) -> Self {
        let mut out = self.clone();
        for &i in &other.word {
            out = out.mul_simple(gcm, i);
        }
        out
    }

    pub fn inverse(&self, gcm: &Gcm) -> Self {
        let mut out = WeylElement::identity(gcm.n);
        for &i in self.word.iter().rev() {
            out = out.mul_simple(gcm, i);
        }
        out
    }

    pub fn len(&self) -> usize {
        self.word.len()
    }

    pub fn is_empty(&self) -> bool {
        self.word.is_empty()
    }

    /// w(α_i) in the simple-root basis.
    pub fn apply_simple(&self, i: usize) -> Vec<i64> {
        self.action[i].clone()
    }

    /// Image of an integer root-lattice vector.
    pub fn apply_root(&self, c: &[i64]) -> Vec<i64> {
        let n = self.action.len();
        let mut out = vec![0i64; n];
        for (i, &ci) in c.iter().enumerate() {
            if ci != 0 {
                for (o, a) in out.iter_mut().zip(&self.action[i]) {
                    *o += ci * a;
                }
            }
        }
        out
    }

    /// Image of an integer coroot-lattice vector: s_i(α_j^∨) = α_j^∨ − a_{ji} α_i^∨.
    pub fn apply_coroot(&self, gcm: &Gcm, c: &[i64]) -> Vec<i64> {
        let mut out = c.to_vec();
        for &i in self.word.iter().rev() {
            let pairing: i64 = (0..gcm.n).map(|j| gcm.a[j][i] * out[j]).sum();
            out[i] -= pairing;
        }
        out
    }

    /// Reduced word via descent: ℓ(w s_i) < ℓ(w) ⟺ w(α_i) < 0.
    fn extract_reduced_word(&self, gcm: &Gcm) -> Vec<usize> {
        let mut w = self.clone();
        let mut rev = Vec::new();
        loop {
            let Some(i) = (0..gcm.n).find(|&i| is_negative(&w.action[i])) else {
                assert!(
                    (0..gcm.n).all(|i| w.action[i]
                        == WeylElement::identity(gcm.n).action[i]),
                    "descent-free element must be the identity"
                );
                break;
            };
            rev.push(i);
            // multiply by s_i on the right without recursing into word
            // extraction
            let prev = w.action.clone();
            w.action[i] = prev[i].iter().map(|x| -x).collect();
            for j in 0..gcm.n {
                if j != i && gcm.a[i][j] != 0 {
                    w.action[j] = prev[j]
                        .iter()
                        .zip(&prev[i])
                        .map(|(x, y)| x - gcm.a[i][j] * y)
                        .collect();
                }
            }
        }
        rev.reverse();
        rev
    }
}

fn is_negative(c: &[i64]) -> bool {
    // real-root images are all-nonnegative or all-nonpositive
    c.iter().all(|&x| x <= 0) && c.iter().any(|&x| x < 0)
}

pub fn is_positive_root_vec(c: &[i64]) -> bool {
    c.iter().all(|&x| x >= 0) && c.iter().any(|&x| x > 0)
}

/// The longest element, for finite types, by repeated ascent.
pub fn longest_element(gcm: &Gcm) -> WeylElement {
    assert_eq!(gcm.kind, CartanKind::Finite);
    let mut w = WeylElement::identity(gcm.n);
    loop {
        let Some(i) = (0..gcm.n).find(|&i| is_positive_root_vec(&w.apply_simple(i))) else {
            return w;
        };
        w = w.mul_simple(gcm, i);
    }
}

// ---------------------------------------------------------------------------
// Root datum
// ---------------------------------------------------------------------------

/// A positive real root with its exact data.
#[derive(Clone, Debug)]
pub struct Root {
    /// coordinates in the simple-root basis
    pub coords: Vec<i64>,
    /// half the squared length, ⟨α,α⟩/2
    pub d_alpha: Rat,
    /// coroot h_α = ν^{-1}(α)/d_α in the simple-coroot basis (integral)
    pub coroot: Vec<i64>,
    /// t_α = ν^{-1}(α) in h-coordinates
    pub t_alpha: Vec<Rat>,
    /// witness (w, i) with α = w(α_i)
    pub witness: (WeylElement, usize),
}

impl Root {
    pub fn height(&self) -> i64 {
        self.coords.iter().sum()
    }
}

#[derive(Clone, Debug)]
pub struct RootDatum {
    pub realization: Realization,
    pub roots: Vec<Root>,
    pub height_cutoff: Option<i64>,
}

impl RootDatum {
    /// Enumerate positive real roots by Weyl-orbit closure of the simple
    /// roots, breadth-first by height. `cutoff = None` means complete
    /// enumeration, valid only for finite type.
    pub fn new(realization: Realization, cutoff: Option<i64>) -> Result<Self, CartanError> {
        let gcm = &realization.gcm;
        if cutoff.is_none() && gcm.kind != CartanKind::Finite {
            return Err(CartanError::IndefiniteNeedsCutoff);
        }
        let n = gcm.n;
        let mut seen: HashMap<Vec<i64>, (WeylElement, usize)> = HashMap::new();
        let mut queue: VecDeque<Vec<i64>> = VecDeque::new();
        for i in 0..n {
            let mut c = vec![0i64; n];
            c[i] = 1;
            seen.insert(c.clone(), (WeylElement::identity(n), i));
            queue.push_back(c);
        }
        while let Some(c) = queue.pop_front() {
            let (w, i) = seen[&c].clone();
            for j in 0..n {
                let sj = WeylElement::simple(gcm, j);
                let img = sj.apply_root(&c);
                if !is_positive_root_vec(&img) {
                    continue;
                }
                if let Some(h) = cutoff {
                    if img.iter().sum::<i64>() > h {
                        continue;
                    }
                }
                if !seen.contains_key(&img) {
                    seen.insert(img.clone(), (sj.mul(gcm, &w), i));
                    queue.push_back(img);
                }
            }
        }
        let mut roots: Vec<Root> = seen
            .into_iter()
            .map(|(coords, witness)| {
                let hs = realization.root_coords(&coords);
                let d_alpha = realization.form_dual(&hs, &hs) / rat(2);
                let t_alpha = realization.nu_inv(&hs);
                let coroot_rat: Vec<Rat> =
                    t_alpha.iter().map(|x| x / &d_alpha).collect();
                let coroot = coroot_rat
                    .iter()
                    .take(gcm.n)
                    .map(|x| {
                        assert!(x.is_integer(), "real coroot must be integral");
                        use num::ToPrimitive;
                        x.to_integer().to_i64().unwrap()
                    })
                    .collect();
                Root {
                    coords,
                    d_alpha,
                    coroot,
                    t_alpha,
                    witness,
                }
            })
            .collect();
        roots.sort_by_key(|r| (r.height(), r.coords.clone()));
        Ok(RootDatum {
            realization,
            roots,
            height_cutoff: cutoff,
        })
    }

    pub fn find(&self, coords: &[i64]) -> Option<&Root> {
        self.roots.iter().find(|r| r.coords == coords)
    }

    pub fn is_positive_root(&self, coords: &[i64]) -> bool {
        self.find(coords).is_some()
    }
}

// ---------------------------------------------------------------------------
// Pure braid words
// ---------------------------------------------------------------------------

/// One Digne generator letter `(S_w S_i^2 S_w^{-1})^e`.
#[derive(Clone, Debug)]
pub struct PureLetter {
    pub w: WeylElement,
    pub i: usize,
    pub e: i8,
}

#[derive(Clone, Debug, Default)]
pub struct PureBraidWord {
    pub letters: Vec<PureLetter>,
}

impl PureBraidWord {
    pub fn new(letters: Vec<PureLetter>) -> Self {
        PureBraidWord { letters }
    }

    /// Generator p_α for a positive root given by its witness (w, i).
    pub fn generator(w: WeylElement, i: usize) -> Self {
        PureBraidWord {
            letters: vec![PureLetter { w, i, e: 1 }],
        }
    }

    /// Check that every letter names a positive root.
    pub fn validate(&self, rd: &RootDatum) -> Result<Vec<Vec<i64>>, CartanError> {
        let mut named = Vec::new();
        for (index, l) in self.letters.iter().enumerate() {
            let img = l.w.apply_simple(l.i);
            if !is_positive_root_vec(&img) || !rd.is_positive_root(&img) {
                return Err(CartanError::ImpureLetter { index, i: l.i });
            }
            named.push(img);
        }
        Ok(named)
    }

    /// Sign character: (−1)^{Σ e·μ(h_{w(α_i)})} for an integral weight μ
    /// (h*-coordinates).
    pub fn sign_character(&self, rd: &RootDatum, mu: &[Rat]) -> Result<i8, CartanError> {
        let gcm = &rd.realization.gcm;
        let mut total = 0i64;
        for (index, l) in self.letters.iter().enumerate() {
            let mut unit = vec![0i64; gcm.n];
            unit[l.i] = 1;
            let coroot = l.w.apply_coroot(gcm, &unit);
            let pairing: Rat = coroot
                .iter()
                .enumerate()
                .map(|(j, &c)| &mu[j] * rat(c))
                .sum();
            if !pairing.is_integer() {
                return Err(CartanError::NonIntegralPairing {
                    index,
                    value: pairing.to_string(),
                });
            }
            use num::ToPrimitive;
            total += i64::from(l.e) * pairing.to_integer().to_i64().unwrap();
        }
        Ok(if total % 2 == 0 { 1 } else { -1 })
    }
}

// ---------------------------------------------------------------------------
// Nested sets
// ---------------------------------------------------------------------------

pub type Subdiagram = BTreeSet<usize>;

/// A maximal nested set, stored without the implicit ∅.
#[derive(Clone, PartialEq, Eq, Debug, PartialOrd, Ord)]
pub struct NestedSet {
    pub elements: Vec<Subdiagram>,
}

pub fn is_connected(gcm: &Gcm, s: &Subdiagram) -> bool {
    let Some(&start) = s.iter().next() else {
        return false;
    };
    let mut seen = BTreeSet::from([start]);
    let mut queue = VecDeque::from([start]);
    while let Some(v) = queue.pop_front() {
        for &u in s {
            if !seen.contains(&u) && gcm.adjacent(v, u) {
                seen.insert(u);
                queue.push_back(u);
            }
        }
    }
    seen.len() == s.len()
}

fn orthogonal(gcm: &Gcm, s: &Subdiagram, t: &Subdiagram) -> bool {
    s.iter().all(|&v| t.iter().all(|&u| v == u || !gcm.adjacent(v, u)))
}

/// Compatible: one contains the other, or they are disjoint and orthogonal.
pub fn compatible(gcm: &Gcm, s: &Subdiagram, t: &Subdiagram) -> bool {
    s.is_subset(t) || t.is_subset(s) || (s.is_disjoint(t) && orthogonal(gcm, s, t))
}

pub fn connected_components(gcm: &Gcm, vertices: &Subdiagram) -> Vec<Subdiagram> {
    let mut remaining: BTreeSet<usize> = vertices.clone();
    let mut comps = Vec::new();
    while let Some(&start) = remaining.iter().next() {
        let mut comp = BTreeSet::from([start]);
        let mut queue = VecDeque::from([start]);
        remaining.remove(&start);
        while let Some(v) = queue.pop_front() {
            let adj: Vec<usize> = remaining
                .iter()
                .copied()
                .filter(|&u| gcm.adjacent(v, u))
                .collect();
            for u in adj {
                remaining.remove(&u);
                comp.insert(u);
                queue.push_back(u);
            }
        }
        comps.push(comp);
    }
    comps
}

fn connected_subdiagrams(gcm: &Gcm, vertices: &Subdiagram) -> Vec<Subdiagram> {
    let vs: Vec<usize> = vertices.iter().copied().collect();
    let mut out = Vec::new();
    for subset in vs.iter().copied().powerset() {
        if subset.is_empty() {
            continue;
        }
        let s: Subdiagram = subset.into_iter().collect();
        if is_connected(gcm, &s) {
            out.push(s);
        }
    }
    out
}

/// All maximal nested sets on the full subdiagram B of the Dynkin diagram:
/// maximal cliques in the compatibility graph of connected subdiagrams of B.
pub fn enumerate_maximal_nested_sets(gcm: &Gcm, b: &Subdiagram) -> Vec<NestedSet> {
    relative_mns(gcm, b, &BTreeSet::new())
}

/// Maximal nested sets on B relative to B': only subdiagrams compatible
/// with, but not properly contained in, the components of B' are allowed.
pub fn relative_mns(gcm: &Gcm, b: &Subdiagram, b_prime: &Subdiagram) -> Vec<NestedSet> {
    assert!(b_prime.is_subset(b), "B' must be a subdiagram of B");
    let comps_bp = connected_components(gcm, b_prime);
    let candidates: Vec<Subdiagram> = connected_subdiagrams(gcm, b)
        .into_iter()
        .filter(|s| {
            comps_bp.iter().all(|c| {
                compatible(gcm, s, c) && !(s.is_subset(c) && s != c)
            })
        })
        .collect();
    let m = candidates.len();
    let compat: Vec<Vec<bool>> = (0..m)
        .map(|i| {
            (0..m)
                .map(|j| compatible(gcm, &candidates[i], &candidates[j]))
                .collect()
        })
        .collect();
    // Bron–Kerbosch maximal clique enumeration (sizes here are tiny)
    let mut cliques = Vec::new();
    bron_kerbosch(
        &compat,
        &mut Vec::new(),
        (0..m).collect(),
        HashSet::new(),
        &mut cliques,
    );
    let mut out: Vec<NestedSet> = cliques
        .into_iter()
        .map(|c| {
            let mut elements: Vec<Subdiagram> =
                c.into_iter().map(|i| candidates[i].clone()).collect();
            elements.sort();
            NestedSet { elements }
        })
        .collect();
    out.sort();
    out.dedup();
    out
}

fn bron_kerbosch(
    compat: &[Vec<bool>],
    r: &mut Vec<usize>,
    p: HashSet<usize>,
    x: HashSet<usize>,
    out: &mut Vec<Vec<usize>>,
) {
    if p.is_empty() && x.is_empty() {
        out.push(r.clone());
        return;
    }
    let mut p = p;
    let mut x = x;
    let iter: Vec<usize> = p.iter().copied().collect();
    for v in iter {
        if !p.contains(&v) {
            continue;
        }
        r.push(v);
        let np: HashSet<usize> = p.iter().copied().filter(|&u| compat[v][u] && u != v).collect();
        let nx: HashSet<usize> = x.iter().copied().filter(|&u| compat[v][u] && u != v).collect();
        bron_kerbosch(compat, r, np, nx, out);
        r.pop();
        p.remove(&v);
        x.insert(v);
    }
}

// ---------------------------------------------------------------------------
// type-A bracketings
// ---------------------------------------------------------------------------

/// Complete bracketing of x_1 … x_n as a binary tree.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum Bracketing {
    Leaf(usize),
    Node(Box<Bracketing>, Box<Bracketing>),
}

impl fmt::Display for Bracketing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Bracketing::Leaf(i) => write!(f, "x{}", i),
            Bracketing::Node(l, r) => write!(f, "({}{})", l, r),
        }
    }
}

fn check_type_a(gcm: &Gcm) -> Result<(), CartanError> {
    for i in 0..gcm.n {
        for j in 0..gcm.n {
            let expect = if i == j {
                2
            } else if i.abs_diff(j) == 1 {
                -1
            } else {
                0
            };
            if gcm.a[i][j] != expect {
                return Err(CartanError::NotTypeA);
            }
        }
    }
    Ok(())
}

/// Maximal nested set on A_{n-1} → bracketing of x_1 … x_n: the interval
/// [i,j] of diagram vertices groups the letters x_i … x_{j+1}.
pub fn nested_to_bracketing(gcm: &Gcm, f: &NestedSet) -> Result<Bracketing, CartanError> {
    check_type_a(gcm)?;
    let n = gcm.n + 1; // letters
    // intervals of letters (1-based, inclusive): vertex set {i..j} (0-based)
    // covers letters i+1 ..= j+2
    let mut intervals: Vec<(usize, usize)> = f
        .elements
        .iter()
        .map(|s| {
            let lo = *s.iter().next().unwrap();
            let hi = *s.iter().next_back().unwrap();
            (lo + 1, hi + 2)
        })
        .collect();
    intervals.push((1, n)); // ensure the full product is present
    intervals.sort();
    intervals.dedup();
    fn build(
        lo: usize,
        hi: usize,
        intervals: &[(usize, usize)],
    ) -> Result<Bracketing, CartanError> {
        if lo == hi {
            return Ok(Bracketing::Leaf(lo));
        }
        // the split point: the unique k with [lo,k], [k+1,hi] both being
        // bracketed factors (sub-intervals or single letters)
        for k in lo..hi {
            let left_ok = k == lo || intervals.contains(&(lo, k));
            let right_ok = k + 1 == hi || intervals.contains(&(k + 1, hi));
            if left_ok && right_ok {
                return Ok(Bracketing::Node(
                    Box::new(build(lo, k, intervals)?),
                    Box::new(build(k + 1, hi, intervals)?),
                ));
            }
        }
        Err(CartanError::Bracketing(format!(
            "no split for letters {lo}..{hi}: family is not maximal nested"
        )))
    }
    build(1, n, &intervals)
}

/// Inverse of [`nested_to_bracketing`].
pub fn bracketing_to_nested(gcm: &Gcm, b: &Bracketing) -> Result<NestedSet, CartanError> {
    check_type_a(gcm)?;
    let mut elements = Vec::new();
    fn walk(b: &Bracketing, elements: &mut Vec<Subdiagram>) -> (usize, usize) {
        match b {
            Bracketing::Leaf(i) => (*i, *i),
            Bracketing::Node(l, r) => {
                let (llo, lhi) = walk(l, elements);
                let (rlo, rhi) = walk(r, elements);
                assert_eq!(lhi + 1, rlo, "malformed bracketing");
                // letters llo..=rhi correspond to diagram vertices llo-1..=rhi-2
                elements.push((llo - 1..=rhi - 2).collect());
                (llo, rhi)
            }
        }
    }
    walk(b, &mut elements);
    elements.sort();
    elements.dedup();
    Ok(NestedSet { elements })
}

pub fn parse_bracketing(s: &str) -> Result<Bracketing, CartanError> {
    let tokens: Vec<char> = s.chars().filter(|c| !c.is_whitespace()).collect();
    let mut pos = 0usize;
    fn parse_factor(t: &[char], pos: &mut usize) -> Result<Bracketing, CartanError> {
        match t.get(*pos) {
            Some('(') => {
                *pos += 1;
                let l = parse_factor(t, pos)?;
                let r = parse_factor(t, pos)?;
                if t.get(*pos) != Some(&')') {
                    return Err(CartanError::Bracketing("expected ')'".into()));
                }
                *pos += 1;
                Ok(Bracketing::Node(Box::new(l), Box::new(r)))
            }
            Some('x') => {
                *pos += 1;
                let start = *pos;
                while t.get(*pos).is_some_and(char::is_ascii_digit) {
                    *pos += 1;
                }
                let num: String = t[start..*pos].iter().collect();
                num.parse::<usize>()
                    .map(Bracketing::Leaf)
                    .map_err(|e| CartanError::Bracketing(e.to_string()))
            }
            other => Err(CartanError::Bracketing(format!("unexpected {:?}", other))),
        }
    }
    let b = parse_factor(&tokens, &mut pos)?;
    if pos != tokens.len() {
        return Err(CartanError::Bracketing("trailing input".into()));
    }
    Ok(b)
}

// ---------------------------------------------------------------------------
// standard matrices
// ---------------------------------------------------------------------------

pub fn gcm_a1() -> Gcm {
    Gcm::new(vec![vec![2]]).unwrap()
}

pub fn gcm_a1xa1() -> Gcm {
    Gcm::new(vec![vec![2, 0], vec![0, 2]]).unwrap()
}

pub fn gcm_a2() -> Gcm {
    Gcm::new(vec![vec![2, -1], vec![-1, 2]]).unwrap()
}

/// B2 with the short root first: a_{12} = -2, a_{21} = -1, d = (1, 2).
pub fn gcm_b2() -> Gcm {
    Gcm::new(vec![vec![2, -2], vec![-1, 2]]).unwrap()
}

pub fn gcm_g2() -> Gcm {
    Gcm::new(vec![vec![2, -1], vec![-3, 2]]).unwrap()
}
