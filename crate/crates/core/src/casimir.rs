//! Classical side: finite-type Lie algebras with transported root vectors,
//! truncated Casimir operators K_α⁺ and exact flatness checks, loop geometry
//! in the regular Cartan locus, adaptive numerical parallel transport of the
//! Casimir connection, the abelian cochain b with exact winding bookkeeping,
//! the Tits extension τ with its sign character on pure words, the
//! equivariant braid action, and blockwise spectral comparison with the
//! quantum side.
//!
//! Conventions frozen here (matching the quantum calibrations in `qweyl`):
//! * the Casimir connection is d − (ħ/2πι) Σ_{α>0} (dα/α) K_α⁺, so the
//!   rank-1 monodromy of the positively oriented pure loop is exp(ħ·K⁺);
//! * the abelian cochain transports (ħ/4πι) Σ (dα/α) t_α, normalized so
//!   b(γ_i) = exp(ħ t_{α_i}/4) and b(p_α) = exp(+ħ t_α/2) on the positively
//!   oriented pure loop — the sign opposite to the quantum diagonal
//!   v^{−2⟨α,μ⟩}, which is why the comparison pits the plain monodromy
//!   against the normally ordered λ′ directly;
//! * the equivariant action lifts S_i to τ_i · (transport of the twisted
//!   connection with coefficients K_α⁺ + t_α/2 along γ_i).

use crate::cartan::{Gcm, PureBraidWord, Realization, RootDatum, WeylElement};
use crate::cato::{BlockOp, ClassicalModule};
use crate::linalg::Mat;
use crate::scalars::{rat_to_f64, Rat};
use num_complex::Complex64;
use thiserror::Error;

pub type C = Complex64;

#[derive(Debug, Error)]
pub enum CasimirError {
    #[error("finite type required, got {0:?}")]
    NotFiniteType(crate::cartan::CartanKind),
    #[error("module is not faithful enough to determine c_α for root {0:?}")]
    NotFaithful(Vec<i64>),
    #[error("[e_α, f_α] is not proportional to t_α for root {0:?}")]
    BadRootVector(Vec<i64>),
    #[error("basepoint is not strictly inside the fundamental chamber")]
    BadBasepoint,
    #[error("path clearance too small: {0:.3e}")]
    Clearance(f64),
    #[error("integration step underflow at segment {segment}, t = {t:.6}")]
    StepUnderflow { segment: usize, t: f64 },
    #[error("module dimensions do not match: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("cartan error: {0}")]
    Cartan(#[from] crate::cartan::CartanError),
    #[error("scalar error: {0}")]
    Scalar(#[from] crate::scalars::ScalarError),
}

fn rat(n: i64) -> Rat {
    Rat::from_integer(n.into())
}

// ---------------------------------------------------------------------------
// dense complex matrices
// ---------------------------------------------------------------------------

/// Small dense complex matrix; everything here is tiny (weight blocks).
#[derive(Clone, Debug)]
pub struct CMat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<C>,
}

impl CMat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        CMat {
            rows,
            cols,
            data: vec![C::new(0.0, 0.0); rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = C::new(1.0, 0.0);
        }
        m
    }

    pub fn get(&self, i: usize, j: usize) -> C {
        self.data[i * self.cols + j]
    }

    pub fn set(&mut self, i: usize, j: usize, v: C) {
        self.data[i * self.cols + j] = v;
    }

    pub fn add(&self, other: &Self) -> Self {
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a + b)
            .collect();
        CMat {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        let data = self
            .data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| a - b)
            .collect();
        CMat {
            rows: self.rows,
            cols: self.cols,
            data,
        }
    }

    pub fn scale(&self, c: C) -> Self {
        CMat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|a| a * c).collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows);
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a.norm_sqr() == 0.0 {
                    continue;
                }
                for j in 0..other.cols {
                    let v = out.get(i, j) + a * other.get(k, j);
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    pub fn from_rat(m: &Mat<Rat>) -> Self {
        let mut out = Self::zeros(m.rows, m.cols);
        for i in 0..m.rows {
            for j in 0..m.cols {
                out.set(i, j, C::new(rat_to_f64(m.get(i, j)), 0.0));
            }
        }
        out
    }
}

/// Characteristic polynomial by Faddeev–LeVerrier: returns the monic
/// coefficients [c_0, ..., c_{n−1}] of λⁿ + c_{n−1}λ^{n−1} + ... + c_0.
fn char_poly(m: &CMat) -> Vec<C> {
    let n = m.rows;
    let mut coeffs = vec![C::new(0.0, 0.0); n];
    let mut mk = m.clone();
    for k in 1..=n {
        let tr: C = (0..n).map(|i| mk.get(i, i)).sum();
        let ck = -tr / k as f64;
        coeffs[n - k] = ck;
        if k < n {
            let mut shifted = mk.clone();
            for i in 0..n {
                let v = shifted.get(i, i) + ck;
                shifted.set(i, i, v);
            }
            mk = m.matmul(&shifted);
        }
    }
    coeffs
}

/// Eigenvalues of a small complex matrix: characteristic polynomial plus
/// Durand–Kerner root iteration. Adequate for the weight-block sizes here.
pub fn eigenvalues(m: &CMat) -> Vec<C> {
    let n = m.rows;
    if n == 0 {
        return Vec::new();
    }
    if n == 1 {
        return vec![m.get(0, 0)];
    }
    let coeffs = char_poly(m);
    let eval = |z: C| -> C {
        let mut acc = C::new(1.0, 0.0);
        for c in coeffs.iter().rev() {
            acc = acc * z + c;
        }
        acc
    };
    // scale-aware initial guesses on a spiral
    let radius = 1.0 + m.max_abs();
    let seed = C::new(0.4, 0.9);
    let mut roots: Vec<C> = (0..n)
        .map(|k| seed.powi(k as i32 + 1) * radius)
        .collect();
    for _ in 0..500 {
        let mut delta = 0.0f64;
        for i in 0..n {
            let mut denom = C::new(1.0, 0.0);
            for j in 0..n {
                if j != i {
                    denom *= roots[i] - roots[j];
                }
            }
            if denom.norm() < 1e-300 {
                // perturb a collision and continue
                roots[i] += C::new(1e-8, 1e-8);
                continue;
            }
            let step = eval(roots[i]) / denom;
            roots[i] -= step;
            delta = delta.max(step.norm());
        }
        if delta < 1e-13 * radius {
            break;
        }
    }
    roots
}

/// Best pairing between two eigenvalue multisets: minimal over permutations
/// of the maximal absolute difference. Sizes here are tiny, so brute force.
pub fn match_spectra(a: &[C], b: &[C]) -> f64 {
    assert_eq!(a.len(), b.len());
    let n = a.len();
    if n == 0 {
        return 0.0;
    }
    let mut idx: Vec<usize> = (0..n).collect();
    let mut best = f64::INFINITY;
    permute(&mut idx, 0, &mut |perm| {
        let cost = (0..n)
            .map(|i| (a[i] - b[perm[i]]).norm())
            .fold(0.0, f64::max);
        best = best.min(cost);
    });
    best
}

fn permute(idx: &mut Vec<usize>, k: usize, f: &mut impl FnMut(&[usize])) {
    if k == idx.len() {
        f(idx);
        return;
    }
    for i in k..idx.len() {
        idx.swap(k, i);
        permute(idx, k + 1, f);
        idx.swap(k, i);
    }
}

// ---------------------------------------------------------------------------
// classical algebra
// ---------------------------------------------------------------------------

/// Nilpotent exponential exp(sign·op), exact over the rationals.
pub fn exp_nilpotent(op: &BlockOp<Rat>, dims: &[usize], sign: i64) -> BlockOp<Rat> {
    let mut acc = BlockOp::identity(dims);
    let mut term = BlockOp::identity(dims);
    let mut factorial = rat(1);
    let mut k = 1i64;
    loop {
        term = op.compose(&term);
        if term.is_zero() {
            return acc;
        }
        factorial *= rat(k);
        let coeff = rat(sign.pow(k as u32)) / &factorial;
        acc = acc.add(&term.scale(&coeff));
        k += 1;
        assert!(k < 10_000, "generator action is not nilpotent");
    }
}

/// τ_i = exp(e_i)·exp(−f_i)·exp(e_i) on an integrable classical module.
pub fn triple_exponential(m: &ClassicalModule, i: usize) -> BlockOp<Rat> {
    let dims: Vec<usize> = m.blocks.iter().map(|b| b.dim).collect();
    let ee = exp_nilpotent(&m.e_ops[i], &dims, 1);
    let ef = exp_nilpotent(&m.f_ops[i], &dims, -1);
    ee.compose(&ef).compose(&ee)
}

/// τ_i⁻¹ = exp(−e_i)·exp(f_i)·exp(−e_i); note τ_{w⁻¹} ≠ τ_w⁻¹ in general
/// since τ_i² is a nontrivial sign, so inverses are built factor by factor.
pub fn triple_exponential_inv(m: &ClassicalModule, i: usize) -> BlockOp<Rat> {
    let dims: Vec<usize> = m.blocks.iter().map(|b| b.dim).collect();
    let ee = exp_nilpotent(&m.e_ops[i], &dims, -1);
    let ef = exp_nilpotent(&m.f_ops[i], &dims, 1);
    ee.compose(&ef).compose(&ee)
}

/// τ_w along a reduced word of w.
pub fn tau_word(m: &ClassicalModule, w: &WeylElement) -> BlockOp<Rat> {
    let dims: Vec<usize> = m.blocks.iter().map(|b| b.dim).collect();
    let mut out = BlockOp::identity(&dims);
    for &i in &w.word {
        out = out.compose(&triple_exponential(m, i));
    }
    out
}

/// The exact matrix inverse of τ_w.
pub fn tau_word_inv(m: &ClassicalModule, w: &WeylElement) -> BlockOp<Rat> {
    let dims: Vec<usize> = m.blocks.iter().map(|b| b.dim).collect();
    let mut out = BlockOp::identity(&dims);
    for &i in w.word.iter().rev() {
        out = out.compose(&triple_exponential_inv(m, i));
    }
    out
}

/// τ evaluated on a pure braid word as the product of conjugated squares
/// (τ_w τ_i² τ_w⁻¹)^e; asserted diagonal with ±1 entries, returned as the
/// per-block sign.
pub fn tau_on_pure(
    m: &ClassicalModule,
    rd: &RootDatum,
    p: &PureBraidWord,
) -> Result<Vec<i8>, CasimirError> {
    p.validate(rd)?;
    let gcm = &m.real.gcm;
    let dims: Vec<usize> = m.blocks.iter().map(|b| b.dim).collect();
    let mut op = BlockOp::identity(&dims);
    for letter in &p.letters {
        let tw = tau_word(m, &letter.w);
        let tw_inv = tau_word_inv(m, &letter.w);
        let ti = if letter.e >= 0 {
            triple_exponential(m, letter.i)
        } else {
            triple_exponential_inv(m, letter.i)
        };
        let conj = tw.compose(&ti).compose(&ti).compose(&tw_inv);
        op = op.compose(&conj);
    }
    let _ = gcm;
    let mut signs = vec![1i8; m.blocks.len()];
    for (b, blk) in m.blocks.iter().enumerate() {
        if blk.dim == 0 {
            continue;
        }
        let Some(tgts) = op.maps.get(&b) else {
            panic!("τ on a pure word must be diagonal, block {b} missing");
        };
        assert!(
            tgts.len() == 1 && tgts.contains_key(&b),
            "τ on a pure word must preserve weight spaces"
        );
        let mat = &tgts[&b];
        let first = mat.get(0, 0).clone();
        assert!(first == rat(1) || first == rat(-1), "τ|pure entry not ±1");
        for r in 0..mat.rows {
            for c in 0..mat.cols {
                let want = if r == c { first.clone() } else { rat(0) };
                assert_eq!(*mat.get(r, c), want, "τ|pure not scalar on block {b}");
            }
        }
        signs[b] = if first == rat(1) { 1 } else { -1 };
    }
    Ok(signs)
}

/// Root vectors and Casimir data for one positive root on the registered
/// module.
#[derive(Clone, Debug)]
pub struct RootOps {
    pub coords: Vec<i64>,
    pub e: BlockOp<Rat>,
    pub f: BlockOp<Rat>,
    /// pairing constant from [e_α, f_α] = c_α·t_α (equals d_α⁻¹)
    pub c_alpha: Rat,
    /// K_α⁺ = c_α⁻¹ · f_α e_α
    pub k_plus: BlockOp<Rat>,
    /// μ(t_α) per block
    pub t_diag: Vec<Rat>,
}

/// A finite-type root datum together with transported root vectors on one
/// module: e_α = τ_w e_i τ_w⁻¹ for the stored witness (w, i).
pub struct ClassicalAlgebra {
    pub rd: RootDatum,
    pub module: ClassicalModule,
    pub roots: Vec<RootOps>,
}

impl ClassicalAlgebra {
    pub fn build(rd: RootDatum, module: ClassicalModule) -> Result<Self, CasimirError> {
        let gcm = &module.real.gcm;
        if gcm.kind != crate::cartan::CartanKind::Finite {
            return Err(CasimirError::NotFiniteType(gcm.kind.clone()));
        }
        let dims: Vec<usize> = module.blocks.iter().map(|b| b.dim).collect();
        let mut roots = Vec::new();
        for root in &rd.roots {
            let (w, i) = &root.witness;
            let tw = tau_word(&module, w);
            let tw_inv = tau_word_inv(&module, w);
            let e = tw.compose(&module.e_ops[*i]).compose(&tw_inv);
            let mut f = tw.compose(&module.f_ops[*i]).compose(&tw_inv);
            // μ(t_α) per block
            let t_diag: Vec<Rat> = (0..module.blocks.len())
                .map(|b| {
                    let mu = module.block_weight(b);
                    root.t_alpha
                        .iter()
                        .zip(&mu)
                        .map(|(t, m)| t * m)
                        .fold(rat(0), |a, x| a + x)
                })
                .collect();
            // solve [e, f] = c·t_α on the module
            let comm = e.compose(&f).sub(&f.compose(&e));
            let mut c_alpha: Option<Rat> = None;
            for (b, blk) in module.blocks.iter().enumerate() {
                if blk.dim == 0 || num::Zero::is_zero(&t_diag[b]) {
                    continue;
                }
                if let Some(mat) = comm.maps.get(&b).and_then(|t| t.get(&b)) {
                    for k in 0..mat.rows {
                        if !num::Zero::is_zero(mat.get(k, k)) {
                            c_alpha = Some(mat.get(k, k) / &t_diag[b]);
                            break;
                        }
                    }
                }
                if c_alpha.is_some() {
                    break;
                }
            }
            let mut c_alpha =
                c_alpha.ok_or_else(|| CasimirError::NotFaithful(root.coords.clone()))?;
            // root vectors are only canonical up to sign under Weyl
            // transport; normalize so the pairing constant is positive
            if c_alpha < rat(0) {
                f = f.neg();
                c_alpha = -c_alpha;
            }
            // exact invariant: [e_α, f_α] = c_α·t_α on every block
            let t_op = BlockOp::diagonal(
                module
                    .blocks
                    .iter()
                    .enumerate()
                    .filter(|(_, blk)| blk.dim > 0)
                    .map(|(b, blk)| (b, Mat::identity(blk.dim).scale(&t_diag[b])))
                    .collect(),
            );
            if comm != t_op.scale(&c_alpha) {
                return Err(CasimirError::BadRootVector(root.coords.clone()));
            }
            let c_inv = rat(1) / &c_alpha;
            let k_plus = f.compose(&e).scale(&c_inv);
            // weight-zero by construction of the block maps; assert anyway
            for (&src, tgts) in &k_plus.maps {
                for &tgt in tgts.keys() {
                    assert_eq!(src, tgt, "K_α⁺ must be weight-zero");
                }
            }
            roots.push(RootOps {
                coords: root.coords.clone(),
                e,
                f,
                c_alpha,
                k_plus,
                t_diag,
            });
        }
        let _ = dims;
        Ok(ClassicalAlgebra { rd, module, roots })
    }

    pub fn gcm(&self) -> &Gcm {
        &self.module.real.gcm
    }

    pub fn dims(&self) -> Vec<usize> {
        self.module.blocks.iter().map(|b| b.dim).collect()
    }

    /// μ(t_γ) per block for an arbitrary integer root-coordinate vector,
    /// by linearity in γ.
    pub fn t_diag_of(&self, coords: &[i64]) -> Vec<Rat> {
        let real = &self.module.real;
        let dual = real.root_coords(coords);
        let t = real.nu_inv(&dual);
        (0..self.module.blocks.len())
            .map(|b| {
                let mu = self.module.block_weight(b);
                t.iter().zip(&mu).map(|(a, m)| a * m).fold(rat(0), |s, x| s + x)
            })
            .collect()
    }
}

/// Flatness: for each rank-2 plane Ψ spanned by roots, every α ∈ Ψ∩Δ+ must
/// satisfy [K_α⁺, Σ_{β∈Ψ∩Δ+} K_β⁺] = 0 exactly.
#[derive(Clone, Debug)]
pub struct PlaneReport {
    /// indices into `ClassicalAlgebra::roots`
    pub members: Vec<usize>,
    pub exact_zero: bool,
    pub max_residual: f64,
}

pub fn flatness_check(alg: &ClassicalAlgebra) -> Vec<PlaneReport> {
    let n = alg.gcm().n;
    let nr = alg.roots.len();
    let mut planes: Vec<Vec<usize>> = Vec::new();
    for i in 0..nr {
        for j in (i + 1)..nr {
            // all roots in the rational span of roots i, j
            let a = &alg.roots[i].coords;
            let b = &alg.roots[j].coords;
            let mut members = Vec::new();
            for (k, r) in alg.roots.iter().enumerate() {
                let mut m = Mat::from_fn(n, 3, |row, col| {
                    let src = match col {
                        0 => a,
                        1 => b,
                        _ => &r.coords,
                    };
                    rat(src[row])
                });
                if m.rank() <= 2 {
                    members.push(k);
                    let _ = &mut m;
                }
            }
            if !planes.contains(&members) {
                planes.push(members);
            }
        }
    }
    let mut reports = Vec::new();
    for members in planes {
        let mut total = BlockOp::zero();
        for &k in &members {
            total = total.add(&alg.roots[k].k_plus);
        }
        let mut exact = true;
        let mut max_res = 0.0f64;
        for &k in &members {
            let ka = &alg.roots[k].k_plus;
            let comm = ka.compose(&total).sub(&total.compose(ka));
            if !comm.is_zero() {
                exact = false;
                for tgts in comm.maps.values() {
                    for mat in tgts.values() {
                        for v in 0..mat.rows {
                            for w in 0..mat.cols {
                                max_res = max_res.max(rat_to_f64(mat.get(v, w)).abs());
                            }
                        }
                    }
                }
            }
        }
        reports.push(PlaneReport {
            members,
            exact_zero: exact,
            max_residual: max_res,
        });
    }
    reports
}

// ---------------------------------------------------------------------------
// loop geometry
// ---------------------------------------------------------------------------

/// One piece of a path in the complexified essential Cartan, in simple-coroot
/// coordinates.
#[derive(Clone, Debug)]
pub enum Segment {
    Line {
        from: Vec<C>,
        to: Vec<C>,
    },
    /// x(t) = center + e^{i·angle·t}·offset, t ∈ [0, 1]
    Arc {
        center: Vec<C>,
        offset: Vec<C>,
        angle: f64,
    },
    /// straight line with an imaginary half-sine detour:
    /// x(t) = (1−t)·from + t·to + i·height·sin(πt)·dir
    Bump {
        from: Vec<C>,
        to: Vec<C>,
        dir: Vec<C>,
        height: f64,
    },
}

impl Segment {
    pub fn point(&self, t: f64) -> Vec<C> {
        match self {
            Segment::Line { from, to } => from
                .iter()
                .zip(to)
                .map(|(a, b)| a * (1.0 - t) + b * t)
                .collect(),
            Segment::Arc {
                center,
                offset,
                angle,
            } => {
                let rot = (C::i() * angle * t).exp();
                center.iter().zip(offset).map(|(c, o)| c + rot * o).collect()
            }
            Segment::Bump {
                from,
                to,
                dir,
                height,
            } => {
                let s = C::i() * *height * (std::f64::consts::PI * t).sin();
                from.iter()
                    .zip(to)
                    .zip(dir)
                    .map(|((a, b), d)| a * (1.0 - t) + b * t + s * d)
                    .collect()
            }
        }
    }

    pub fn reverse(&self) -> Self {
        match self {
            Segment::Line { from, to } => Segment::Line {
                from: to.clone(),
                to: from.clone(),
            },
            Segment::Arc {
                center,
                offset,
                angle,
            } => {
                let rot = (C::i() * angle).exp();
                Segment::Arc {
                    center: center.clone(),
                    offset: offset.iter().map(|o| rot * o).collect(),
                    angle: -angle,
                }
            }
            Segment::Bump {
                from,
                to,
                dir,
                height,
            } => Segment::Bump {
                from: to.clone(),
                to: from.clone(),
                dir: dir.clone(),
                height: *height,
            },
        }
    }

    fn map_points(&self, f: &impl Fn(&[C]) -> Vec<C>) -> Self {
        match self {
            Segment::Line { from, to } => Segment::Line {
                from: f(from),
                to: f(to),
            },
            Segment::Arc {
                center,
                offset,
                angle,
            } => Segment::Arc {
                center: f(center),
                offset: f(offset),
                angle: *angle,
            },
            Segment::Bump {
                from,
                to,
                dir,
                height,
            } => Segment::Bump {
                from: f(from),
                to: f(to),
                dir: f(dir),
                height: *height,
            },
        }
    }
}

#[derive(Clone, Debug)]
pub struct LoopPath {
    pub segments: Vec<Segment>,
    /// sampled minimum |α(x)| over all positive roots along the path
    pub clearance: f64,
}

impl LoopPath {
    pub fn start(&self) -> Vec<C> {
        self.segments[0].point(0.0)
    }

    pub fn end(&self) -> Vec<C> {
        self.segments.last().unwrap().point(1.0)
    }

    pub fn reverse(&self) -> Self {
        LoopPath {
            segments: self.segments.iter().rev().map(|s| s.reverse()).collect(),
            clearance: self.clearance,
        }
    }

    pub fn concat(&self, other: &Self) -> Self {
        let a = self.end();
        let b = other.start();
        let gap: f64 = a.iter().zip(&b).map(|(x, y)| (x - y).norm()).sum();
        assert!(gap < 1e-9, "paths do not compose: endpoint gap {gap:.3e}");
        let mut segments = self.segments.clone();
        segments.extend(other.segments.iter().cloned());
        LoopPath {
            segments,
            clearance: self.clearance.min(other.clearance),
        }
    }

    /// Pointwise image under w (linear on the Cartan).
    pub fn weyl_image(&self, gcm: &Gcm, w: &WeylElement) -> Self {
        let n = gcm.n;
        // matrix of w on simple-coroot coordinates, one basis vector at a time
        let mut cols = Vec::with_capacity(n);
        for k in 0..n {
            let mut e = vec![0i64; n];
            e[k] = 1;
            cols.push(w.apply_coroot(gcm, &e));
        }
        let apply = |x: &[C]| -> Vec<C> {
            (0..n)
                .map(|r| {
                    (0..n)
                        .map(|k| x[k] * cols[k][r] as f64)
                        .sum()
                })
                .collect()
        };
        LoopPath {
            segments: self.segments.iter().map(|s| s.map_points(&apply)).collect(),
            clearance: self.clearance,
        }
    }
}

/// α(x) as a linear functional in simple-coroot coordinates:
/// α = Σ m_j α_j gives l_k = Σ_j m_j·a_{kj}.
pub fn root_functional(gcm: &Gcm, coords: &[i64]) -> Vec<i64> {
    (0..gcm.n)
        .map(|k| coords.iter().enumerate().map(|(j, m)| m * gcm.a[k][j]).sum())
        .collect()
}

pub fn eval_functional(l: &[i64], x: &[C]) -> C {
    l.iter().zip(x).map(|(c, v)| v * *c as f64).sum()
}

/// Rational basepoint with α_j(x₀) = 1 for every j (the analogue of ρ^∨).
pub fn fundamental_point(real: &Realization) -> Vec<Rat> {
    let n = real.gcm.n;
    let m = Mat::from_fn(n, n, |j, k| rat(real.gcm.a[k][j]));
    m.solve(&vec![rat(1); n]).expect("finite type is invertible")
}

pub fn to_complex_point(x: &[Rat]) -> Vec<C> {
    x.iter().map(|r| C::new(rat_to_f64(r), 0.0)).collect()
}

/// Sampled clearance of a path: min over segments, sample points and all
/// positive roots of |α(x(t))|.
pub fn sampled_clearance(rd: &RootDatum, segments: &[Segment]) -> f64 {
    let gcm = &rd.realization.gcm;
    let functionals: Vec<Vec<i64>> = rd
        .roots
        .iter()
        .map(|r| root_functional(gcm, &r.coords))
        .collect();
    let mut min = f64::INFINITY;
    for seg in segments {
        for s in 0..=200 {
            let x = seg.point(s as f64 / 200.0);
            for l in &functionals {
                min = min.min(eval_functional(l, &x).norm());
            }
        }
    }
    min
}

/// The generator loop γ_i from x₀ to s_i(x₀): straight toward the wall in
/// the α_i^∨ direction, positively oriented semicircular arc of radius r
/// around the wall point, straight on to s_i(x₀). The radius shrinks
/// automatically until the arc clears all other hyperplanes.
pub fn generator_loop(rd: &RootDatum, i: usize, x0: &[C]) -> Result<LoopPath, CasimirError> {
    let gcm = &rd.realization.gcm;
    let n = gcm.n;
    let li = root_functional(gcm, &rd.roots.iter().find(|r| {
        r.coords.iter().enumerate().all(|(j, &c)| c == i64::from(j == i))
    }).expect("simple root present").coords);
    let ai_x0 = eval_functional(&li, x0);
    if ai_x0.re <= 0.0 || ai_x0.im.abs() > 1e-12 {
        return Err(CasimirError::BadBasepoint);
    }
    let a = ai_x0.re;
    // coroot direction α_i^∨ in simple-coroot coordinates is the unit vector
    let mut dir = vec![C::new(0.0, 0.0); n];
    dir[i] = C::new(1.0, 0.0);
    let center: Vec<C> = (0..n)
        .map(|k| x0[k] - dir[k] * (a / 2.0))
        .collect();
    let mut r = a / 4.0;
    for _ in 0..30 {
        let arc = Segment::Arc {
            center: center.clone(),
            offset: dir.iter().map(|d| d * r).collect(),
            angle: std::f64::consts::PI,
        };
        // clearance of the arc to hyperplanes other than Ker α_i
        let mut ok = true;
        for root in &rd.roots {
            if root.coords.iter().enumerate().all(|(j, &c)| c == i64::from(j == i)) {
                continue;
            }
            let l = root_functional(gcm, &root.coords);
            for s in 0..=100 {
                let x = arc.point(s as f64 / 100.0);
                if eval_functional(&l, &x).norm() < 0.25 * r {
                    ok = false;
                    break;
                }
            }
            if !ok {
                break;
            }
        }
        if ok {
            break;
        }
        r *= 0.5;
    }
    let enter: Vec<C> = (0..n).map(|k| center[k] + dir[k] * r).collect();
    let exit: Vec<C> = (0..n).map(|k| center[k] - dir[k] * r).collect();
    let si_x0: Vec<C> = (0..n).map(|k| x0[k] - dir[k] * a).collect();
    let segments = vec![
        Segment::Line {
            from: x0.to_vec(),
            to: enter,
        },
        Segment::Arc {
            center,
            offset: dir.iter().map(|d| d * r).collect(),
            angle: std::f64::consts::PI,
        },
        Segment::Line {
            from: exit,
            to: si_x0,
        },
    ];
    let clearance = sampled_clearance(rd, &segments);
    if clearance < 1e-8 {
        return Err(CasimirError::Clearance(clearance));
    }
    Ok(LoopPath {
        segments,
        clearance,
    })
}

/// p_{α_i} = s_i(γ_i) ∘ γ_i: the positively oriented pure loop at x₀.
pub fn purify(rd: &RootDatum, i: usize, gamma: &LoopPath) -> LoopPath {
    let gcm = &rd.realization.gcm;
    let si = WeylElement::simple(gcm, i);
    let image = gamma.weyl_image(gcm, &si);
    let mut p = gamma.concat(&image);
    p.clearance = sampled_clearance(rd, &p.segments);
    p
}

/// Geometric loop for a Digne letter (w, i)^e based at x₀: the w-image of
/// p_{α_i}, conjugated back to x₀ by a complex-bump connector whose
/// imaginary part keeps it off every hyperplane.
pub fn pure_loop(
    rd: &RootDatum,
    letter: &crate::cartan::PureLetter,
    x0: &[C],
) -> Result<LoopPath, CasimirError> {
    let gcm = &rd.realization.gcm;
    let gamma = generator_loop(rd, letter.i, x0)?;
    let mut p = purify(rd, letter.i, &gamma);
    if !letter.w.is_empty() {
        let image = p.weyl_image(gcm, &letter.w);
        // connector x₀ → w(x₀); the bump direction x₀ has α(x₀) ≠ 0 for
        // every root, so the imaginary part never vanishes mid-segment
        let conn = LoopPath {
            segments: vec![Segment::Bump {
                from: x0.to_vec(),
                to: image.start(),
                dir: x0.to_vec(),
                height: 0.5,
            }],
            clearance: 0.0,
        };
        let conn = LoopPath {
            clearance: sampled_clearance(rd, &conn.segments),
            ..conn
        };
        p = conn.concat(&image).concat(&conn.reverse());
    }
    if letter.e < 0 {
        p = p.reverse();
    }
    if p.clearance < 1e-8 {
        return Err(CasimirError::Clearance(p.clearance));
    }
    Ok(p)
}

/// Loop for a whole pure braid word: concatenation of letter loops.
pub fn pure_word_loop(
    rd: &RootDatum,
    word: &PureBraidWord,
    x0: &[C],
) -> Result<LoopPath, CasimirError> {
    let mut out: Option<LoopPath> = None;
    for letter in &word.letters {
        let p = pure_loop(rd, letter, x0)?;
        out = Some(match out {
            None => p,
            Some(q) => q.concat(&p),
        });
    }
    Ok(out.expect("empty pure word"))
}

// ---------------------------------------------------------------------------
// the Casimir connection and parallel transport
// ---------------------------------------------------------------------------

/// d − (ħ/2πι) Σ_{α>0} (dα/α)·K_α, realized per weight block with complex
/// matrices. `twist` adds t_α/2 to each coefficient (the equivariant form).
pub struct Connection {
    pub dims: Vec<usize>,
    pub hbar: C,
    /// per positive root: linear functional and per-block complex matrix
    pub terms: Vec<(Vec<i64>, Vec<Option<CMat>>)>,
}

pub fn casimir_connection(alg: &ClassicalAlgebra, hbar: C, twist: bool) -> Connection {
    let gcm = alg.gcm();
    let dims = alg.dims();
    let mut terms = Vec::new();
    for ops in &alg.roots {
        let l = root_functional(gcm, &ops.coords);
        let mut per_block = Vec::new();
        for (b, &dim) in dims.iter().enumerate() {
            if dim == 0 {
                per_block.push(None);
                continue;
            }
            let mut m = match ops.k_plus.maps.get(&b).and_then(|t| t.get(&b)) {
                Some(mat) => CMat::from_rat(mat),
                None => CMat::zeros(dim, dim),
            };
            if twist {
                let shift = C::new(rat_to_f64(&ops.t_diag[b]) / 2.0, 0.0);
                for k in 0..dim {
                    let v = m.get(k, k) + shift;
                    m.set(k, k, v);
                }
            }
            per_block.push(Some(m));
        }
        terms.push((l, per_block));
    }
    Connection { dims, hbar, terms }
}

/// α(x(t)) and its t-derivative along one segment, from the functional's
/// values on the segment data.
fn alpha_on_segment(l: &[i64], seg: &Segment) -> Box<dyn Fn(f64) -> (C, C)> {
    match seg {
        Segment::Line { from, to } => {
            let a = eval_functional(l, from);
            let b = eval_functional(l, to);
            Box::new(move |t| (a * (1.0 - t) + b * t, b - a))
        }
        Segment::Arc {
            center,
            offset,
            angle,
        } => {
            let c = eval_functional(l, center);
            let o = eval_functional(l, offset);
            let w = *angle;
            Box::new(move |t| {
                let rot = (C::i() * w * t).exp();
                (c + rot * o, C::i() * w * rot * o)
            })
        }
        Segment::Bump {
            from,
            to,
            dir,
            height,
        } => {
            let a = eval_functional(l, from);
            let b = eval_functional(l, to);
            let d = eval_functional(l, dir);
            let h = *height;
            let pi = std::f64::consts::PI;
            Box::new(move |t| {
                (
                    a * (1.0 - t) + b * t + C::i() * h * (pi * t).sin() * d,
                    b - a + C::i() * h * pi * (pi * t).cos() * d,
                )
            })
        }
    }
}

/// Dormand–Prince 5(4) adaptive transport of Y′ = A(t)Y over one weight
/// block along the whole path. Returns the fundamental solution at t = 1.
fn transport_block(
    conn: &Connection,
    block: usize,
    dim: usize,
    path: &LoopPath,
    tol: f64,
    stats: &mut TransportStats,
) -> Result<CMat, CasimirError> {
    // Butcher tableau (Dormand–Prince)
    const A: [[f64; 6]; 6] = [
        [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
        [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
        [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
        [
            19372.0 / 6561.0,
            -25360.0 / 2187.0,
            64448.0 / 6561.0,
            -212.0 / 729.0,
            0.0,
            0.0,
        ],
        [
            9017.0 / 3168.0,
            -355.0 / 33.0,
            46732.0 / 5247.0,
            49.0 / 176.0,
            -5103.0 / 18656.0,
            0.0,
        ],
        [
            35.0 / 384.0,
            0.0,
            500.0 / 1113.0,
            125.0 / 192.0,
            -2187.0 / 6784.0,
            11.0 / 84.0,
        ],
    ];
    const B5: [f64; 7] = [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
        0.0,
    ];
    const B4: [f64; 7] = [
        5179.0 / 57600.0,
        0.0,
        7571.0 / 16695.0,
        393.0 / 640.0,
        -92097.0 / 339200.0,
        187.0 / 2100.0,
        1.0 / 40.0,
    ];
    let coef = conn.hbar / (2.0 * std::f64::consts::PI * C::i());
    let mut y = CMat::identity(dim);
    for (si, seg) in path.segments.iter().enumerate() {
        let funcs: Vec<(Box<dyn Fn(f64) -> (C, C)>, &CMat)> = conn
            .terms
            .iter()
            .filter_map(|(l, per_block)| {
                per_block[block]
                    .as_ref()
                    .map(|m| (alpha_on_segment(l, seg), m))
            })
            .collect();
        let rhs = |t: f64, y: &CMat| -> CMat {
            let mut out = CMat::zeros(dim, dim);
            for (f, k) in &funcs {
                let (a, da) = f(t);
                out = out.add(&k.scale(coef * da / a));
            }
            out.matmul(y)
        };
        let mut t = 0.0f64;
        let mut h = 0.05f64;
        while t < 1.0 {
            if h < 1e-13 {
                return Err(CasimirError::StepUnderflow { segment: si, t });
            }
            if t + h > 1.0 {
                h = 1.0 - t;
            }
            let k1 = rhs(t, &y);
            let mut ks = vec![k1];
            for stage in 0..6 {
                let mut yk = y.clone();
                for (j, kj) in ks.iter().enumerate() {
                    let a = A[stage][j];
                    if a != 0.0 {
                        yk = yk.add(&kj.scale(C::new(h * a, 0.0)));
                    }
                }
                let c_node = [0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0][stage];
                ks.push(rhs(t + c_node * h, &yk));
            }
            let mut y5 = y.clone();
            let mut y4 = y.clone();
            for (j, kj) in ks.iter().enumerate() {
                if B5[j] != 0.0 {
                    y5 = y5.add(&kj.scale(C::new(h * B5[j], 0.0)));
                }
                if B4[j] != 0.0 {
                    y4 = y4.add(&kj.scale(C::new(h * B4[j], 0.0)));
                }
            }
            let err = y5.sub(&y4).max_abs();
            let scale = tol * (1.0 + y.max_abs());
            if err <= scale {
                t += h;
                y = y5;
                stats.accepted += 1;
            } else {
                stats.rejected += 1;
            }
            let factor = if err > 0.0 {
                0.9 * (scale / err).powf(0.2)
            } else {
                5.0
            };
            h *= factor.clamp(0.2, 5.0);
        }
    }
    Ok(y)
}

/// Adaptive-step bookkeeping across all blocks of one transport.
#[derive(Clone, Debug, Default)]
pub struct TransportStats {
    pub accepted: usize,
    pub rejected: usize,
}

/// Parallel transport of the connection along a path: per-block fundamental
/// solutions (the connection is weight-zero, blocks decouple).
pub fn parallel_transport(
    conn: &Connection,
    path: &LoopPath,
    tol: f64,
) -> Result<Vec<Option<CMat>>, CasimirError> {
    Ok(parallel_transport_with_stats(conn, path, tol)?.0)
}

pub fn parallel_transport_with_stats(
    conn: &Connection,
    path: &LoopPath,
    tol: f64,
) -> Result<(Vec<Option<CMat>>, TransportStats), CasimirError> {
    if path.clearance < 1e-8 {
        return Err(CasimirError::Clearance(path.clearance));
    }
    let mut stats = TransportStats::default();
    let mut out = Vec::new();
    for (b, &dim) in conn.dims.iter().enumerate() {
        if dim == 0 {
            out.push(None);
        } else {
            out.push(Some(transport_block(conn, b, dim, path, tol, &mut stats)?));
        }
    }
    Ok((out, stats))
}

// ---------------------------------------------------------------------------
// abelian cochain with exact winding bookkeeping
// ---------------------------------------------------------------------------

/// Continuous Δlog α along the path for every positive root, by adaptive
/// subdivision keeping each argument step below π/2.
pub fn delta_logs(rd: &RootDatum, path: &LoopPath) -> Vec<C> {
    let gcm = &rd.realization.gcm;
    rd.roots
        .iter()
        .map(|root| {
            let l = root_functional(gcm, &root.coords);
            let mut total = C::new(0.0, 0.0);
            for seg in &path.segments {
                let f = |t: f64| eval_functional(&l, &seg.point(t));
                let mut stack = vec![(0.0f64, 1.0f64, f(0.0), f(1.0))];
                while let Some((t0, t1, f0, f1)) = stack.pop() {
                    let ratio = f1 / f0;
                    if ratio.arg().abs() < std::f64::consts::FRAC_PI_2 && t1 - t0 < 0.25 {
                        total += ratio.ln();
                    } else {
                        assert!(t1 - t0 > 1e-12, "winding subdivision underflow");
                        let tm = 0.5 * (t0 + t1);
                        let fm = f(tm);
                        stack.push((t0, tm, f0, fm));
                        stack.push((tm, t1, fm, f1));
                    }
                }
            }
            total
        })
        .collect()
}

/// The abelian cochain b(path): per block the diagonal scalar
/// exp((ħ/4πι) Σ_{α>0} Δlog α · μ(t_α)).
pub fn abelian_cochain(
    alg: &ClassicalAlgebra,
    path: &LoopPath,
    hbar: C,
) -> Vec<Option<C>> {
    let logs = delta_logs(&alg.rd, path);
    let coef = hbar / (4.0 * std::f64::consts::PI * C::i());
    (0..alg.module.blocks.len())
        .map(|b| {
            if alg.module.blocks[b].dim == 0 {
                return None;
            }
            let mut s = C::new(0.0, 0.0);
            for (ops, dl) in alg.roots.iter().zip(&logs) {
                s += dl * rat_to_f64(&ops.t_diag[b]);
            }
            Some((coef * s).exp())
        })
        .collect()
}

/// Residual of the coboundary identity for w = s_i: the transport of
/// a_w = (ħ/4πι) Σ_{β>0} (dβ/β)(t_{|s_iβ|} − t_β) along γ must equal
/// b(s_i(γ))·b(γ)⁻¹ computed with independent winding bookkeeping.
pub fn coboundary_residual(
    alg: &ClassicalAlgebra,
    i: usize,
    path: &LoopPath,
    hbar: C,
) -> f64 {
    let gcm = alg.gcm();
    let si = WeylElement::simple(gcm, i);
    let logs = delta_logs(&alg.rd, path);
    let coef = hbar / (4.0 * std::f64::consts::PI * C::i());
    let b_gamma = abelian_cochain(alg, path, hbar);
    let b_image = abelian_cochain(alg, &path.weyl_image(gcm, &si), hbar);
    let mut max = 0.0f64;
    for (b, blk) in alg.module.blocks.iter().enumerate() {
        if blk.dim == 0 {
            continue;
        }
        let mut s = C::new(0.0, 0.0);
        for (ops, dl) in alg.roots.iter().zip(&logs) {
            // s_i permutes Δ+∖{α_i} and sends α_i to −α_i; the cochain sums
            // over unsigned roots, so the reflected root enters as |s_iβ|
            // and the α_i term drops out
            let refl = si.apply_root(&ops.coords);
            let unsigned: Vec<i64> = refl.iter().map(|c| c.abs()).collect();
            let t_refl = rat_to_f64(&alg.t_diag_of(&unsigned)[b]);
            let t_plain = rat_to_f64(&ops.t_diag[b]);
            s += dl * (t_refl - t_plain);
        }
        let lhs = (coef * s).exp();
        let rhs = b_image[b].unwrap() / b_gamma[b].unwrap();
        max = max.max((lhs - rhs).norm());
    }
    max
}

// ---------------------------------------------------------------------------
// equivariant braid action and spectral comparison
// ---------------------------------------------------------------------------

/// Flatten a rational block operator to a dense complex matrix over the
/// concatenated weight blocks.
pub fn flatten_rat(op: &BlockOp<Rat>, dims: &[usize]) -> CMat {
    let offsets: Vec<usize> = dims
        .iter()
        .scan(0usize, |acc, &d| {
            let o = *acc;
            *acc += d;
            Some(o)
        })
        .collect();
    let total: usize = dims.iter().sum();
    let mut out = CMat::zeros(total, total);
    for (&src, tgts) in &op.maps {
        for (&tgt, mat) in tgts {
            for r in 0..mat.rows {
                for c in 0..mat.cols {
                    out.set(
                        offsets[tgt] + r,
                        offsets[src] + c,
                        C::new(rat_to_f64(mat.get(r, c)), 0.0),
                    );
                }
            }
        }
    }
    out
}

/// Flatten per-block complex matrices (a weight-zero operator).
pub fn flatten_blocks(blocks: &[Option<CMat>], dims: &[usize]) -> CMat {
    let offsets: Vec<usize> = dims
        .iter()
        .scan(0usize, |acc, &d| {
            let o = *acc;
            *acc += d;
            Some(o)
        })
        .collect();
    let total: usize = dims.iter().sum();
    let mut out = CMat::identity(total);
    for (b, m) in blocks.iter().enumerate() {
        if let Some(m) = m {
            for r in 0..m.rows {
                for c in 0..m.cols {
                    out.set(offsets[b] + r, offsets[b] + c, m.get(r, c));
                }
            }
        }
    }
    out
}

/// The equivariant lift of one braid generator: τ_i times the transport of
/// the twisted connection (coefficients K_α⁺ + t_α/2) along γ_i.
pub fn equivariant_generator(
    alg: &ClassicalAlgebra,
    i: usize,
    x0: &[C],
    hbar: C,
    tol: f64,
) -> Result<CMat, CasimirError> {
    let dims = alg.dims();
    let gamma = generator_loop(&alg.rd, i, x0)?;
    let conn = casimir_connection(alg, hbar, true);
    let pt = parallel_transport(&conn, &gamma, tol)?;
    let tau = flatten_rat(&triple_exponential(&alg.module, i), &dims);
    Ok(tau.matmul(&flatten_blocks(&pt, &dims)))
}

#[derive(Clone, Debug)]
pub struct BlockSpectra {
    pub block: usize,
    pub classical: Vec<C>,
    pub quantum: Vec<C>,
    pub mismatch: f64,
}

#[derive(Clone, Debug)]
pub struct SpectralReport {
    pub blocks: Vec<BlockSpectra>,
    pub max_mismatch: f64,
}

/// Blockwise eigenvalue-multiset comparison of a classical monodromy with a
/// quantum operator specialized at v = e^{ħ/4}.
pub fn compare_spectra(
    classical: &[Option<CMat>],
    quantum: &BlockOp<crate::scalars::ScalarQ>,
    dims: &[usize],
    hbar: C,
) -> Result<SpectralReport, CasimirError> {
    let mut blocks = Vec::new();
    let mut max = 0.0f64;
    for (b, &dim) in dims.iter().enumerate() {
        if dim == 0 {
            continue;
        }
        let cm = classical[b]
            .as_ref()
            .ok_or(CasimirError::DimensionMismatch(b, dim))?;
        if cm.rows != dim {
            return Err(CasimirError::DimensionMismatch(cm.rows, dim));
        }
        let qm = match quantum.maps.get(&b).and_then(|t| t.get(&b)) {
            Some(mat) => {
                let mut m = CMat::zeros(dim, dim);
                for r in 0..dim {
                    for c in 0..dim {
                        m.set(r, c, mat.get(r, c).specialize(hbar)?.value);
                    }
                }
                m
            }
            None => CMat::zeros(dim, dim),
        };
        let ce = eigenvalues(cm);
        let qe = eigenvalues(&qm);
        let mismatch = match_spectra(&ce, &qe);
        max = max.max(mismatch);
        blocks.push(BlockSpectra {
            block: b,
            classical: ce,
            quantum: qe,
            mismatch,
        });
    }
    Ok(SpectralReport {
        blocks,
        max_mismatch: max,
    })
}
