//! Quantum Weyl group operators on integrable weight modules, their braid
//! relations, sl2-string decompositions, the quantum Casimir spectral
//! operator, the square factorization, and the pure-braid actions
//! λ, λ^D and the normally ordered λ′.
//!
//! Two normalizations are calibrated once on the rank-1 two-dimensional
//! module and frozen:
//! * the exponent constant `c` with `S_i² = (sign) · q^{c·k}` where `k` has
//!   eigenvalue `d_i(r(r+2) − m²)/2` on the weight-m line of an r-string
//!   (the calibration yields c = 1);
//! * the sign `s` in `λ′ = λ^D · b^s` with `b` the diagonal cochain
//!   `v^{−2 Σ e·d_α·μ(h_α)}` (the calibration yields s = +1, i.e. the
//!   stored b realizes exp(−ħ t_α/2)).

use crate::cartan::{PureBraidWord, RootDatum, WeylElement};
use crate::cato::{integrability_check, BlockOp, Hw, Nilpotence, WeightModule};
use crate::linalg::Mat;
use crate::scalars::{q_factorial, Rat, ScalarQ};
use num::ToPrimitive;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QweylError {
    #[error("module is not integrable: {0:?}")]
    NotIntegrable(String),
    #[error("braid relation check needs finite m_ij, got m = ∞ for ({i}, {j})")]
    InfiniteBraid { i: usize, j: usize },
    #[error("numeric highest weight required")]
    SymbolicWeight,
    #[error("weight pairing must be integral, got {0}")]
    NonIntegralPairing(String),
    #[error("block {block} of S_{i}² is not diagonal in the string basis")]
    NotDiagonal { i: usize, block: usize },
    #[error("no single exponent constant fits: {0}")]
    InconsistentExponent(String),
    #[error("singular block matrix where an inverse was required")]
    Singular,
    #[error("cartan error: {0}")]
    Cartan(#[from] crate::cartan::CartanError),
}

fn require_integrable(m: &WeightModule<ScalarQ>) -> Result<(), QweylError> {
    match integrability_check(m) {
        Nilpotence::Integrable { .. } => Ok(()),
        other => Err(QweylError::NotIntegrable(format!("{other:?}"))),
    }
}

/// μ(α_i^∨) of a block as an integer (numeric integral weights only).
fn block_pairing(m: &WeightModule<ScalarQ>, b: usize, i: usize) -> Result<i64, QweylError> {
    let mu = m.block_weight(b).ok_or(QweylError::SymbolicWeight)?;
    let x = &mu[i];
    if !x.is_integer() {
        return Err(QweylError::NonIntegralPairing(x.to_string()));
    }
    Ok(x.to_integer().to_i64().unwrap())
}

fn nilpotence_bound(m: &WeightModule<ScalarQ>) -> u32 {
    m.blocks
        .iter()
        .filter(|b| b.dim > 0)
        .map(|b| b.height())
        .max()
        .unwrap_or(0) as u32
        + 1
}

/// Divided powers E_i^{(k)} and F_i^{(k)} up to the nilpotence bound.
fn divided_power_ops(
    m: &WeightModule<ScalarQ>,
    i: usize,
    max: u32,
) -> (Vec<BlockOp<ScalarQ>>, Vec<BlockOp<ScalarQ>>) {
    let dims = m.dims();
    let d = m.gcm().d[i] as u32;
    let mut es = vec![BlockOp::identity(&dims)];
    let mut fs = vec![BlockOp::identity(&dims)];
    for k in 1..=max {
        es.push(m.e_ops[i].compose(&es[k as usize - 1]));
        fs.push(m.f_ops[i].compose(&fs[k as usize - 1]));
    }
    for k in 2..=max {
        let inv = q_factorial(k as i64, d).inv().unwrap();
        es[k as usize] = es[k as usize].scale(&inv);
        fs[k as usize] = fs[k as usize].scale(&inv);
    }
    (es, fs)
}

// ---------------------------------------------------------------------------
// the quantum Weyl group operator
// ---------------------------------------------------------------------------

/// S_i on an integrable module:
/// `S_i v = Σ_{a−b+c = −μ(α_i^∨)} (−1)^b q_i^{b−ac} E^{(a)} F^{(b)} E^{(c)} v`
/// on each weight-μ vector. Maps V[μ] into V[s_iμ].
pub fn q_weyl_operator(
    m: &WeightModule<ScalarQ>,
    i: usize,
) -> Result<BlockOp<ScalarQ>, QweylError> {
    require_integrable(m)?;
    let bound = nilpotence_bound(m);
    let (es, fs) = divided_power_ops(m, i, bound);
    let d = m.gcm().d[i];
    let mut out = BlockOp::zero();
    for (b, blk) in m.blocks.iter().enumerate() {
        if blk.dim == 0 {
            continue;
        }
        let mval = block_pairing(m, b, i)?;
        // accumulate the action on this source block
        let mut acc: Option<BlockOp<ScalarQ>> = None;
        for a in 0..=bound as i64 {
            for bb in 0..=bound as i64 {
                let c = bb - a - mval;
                if c < 0 || c > bound as i64 {
                    continue;
                }
                let mut coeff = ScalarQ::v_pow(2 * d * (bb - a * c));
                if bb % 2 == 1 {
                    coeff = coeff.neg();
                }
                let term = es[a as usize]
                    .compose(&fs[bb as usize])
                    .compose(&es[c as usize])
                    .scale(&coeff);
                acc = Some(match acc {
                    None => term,
                    Some(x) => x.add(&term),
                });
            }
        }
        if let Some(total) = acc {
            // restrict to the current source block
            if let Some(tgts) = total.maps.get(&b) {
                for (&tgt, mat) in tgts {
                    out.insert(b, tgt, mat.clone());
                }
            }
        }
    }
    Ok(out)
}

/// Blockwise inverse of an operator whose blocks are bijections.
pub fn invert_block_op(op: &BlockOp<ScalarQ>) -> Result<BlockOp<ScalarQ>, QweylError> {
    let mut out = BlockOp::zero();
    for (&src, tgts) in &op.maps {
        for (&tgt, m) in tgts {
            let inv = m.invert().ok_or(QweylError::Singular)?;
            out.insert(tgt, src, inv);
        }
    }
    Ok(out)
}

/// S_w = S_{i1} ··· S_{ik} along a reduced word of w.
pub fn q_weyl_word(
    m: &WeightModule<ScalarQ>,
    w: &WeylElement,
) -> Result<BlockOp<ScalarQ>, QweylError> {
    let mut out = BlockOp::identity(&m.dims());
    for &i in &w.word {
        out = out.compose(&q_weyl_operator(m, i)?);
    }
    Ok(out)
}

/// Exact check of the m_ij-fold alternating braid relation
/// S_i S_j S_i ··· = S_j S_i S_j ···.
pub fn braid_relation_check(
    m: &WeightModule<ScalarQ>,
    i: usize,
    j: usize,
) -> Result<bool, QweylError> {
    let mij = m
        .gcm()
        .coxeter_m(i, j)
        .ok_or(QweylError::InfiniteBraid { i, j })?;
    let si = q_weyl_operator(m, i)?;
    let sj = q_weyl_operator(m, j)?;
    let alternate = |first: &BlockOp<ScalarQ>, second: &BlockOp<ScalarQ>| {
        let mut out = BlockOp::identity(&m.dims());
        for k in 0..mij {
            let factor = if k % 2 == 0 { first } else { second };
            out = out.compose(factor);
        }
        out
    };
    Ok(alternate(&si, &sj) == alternate(&sj, &si))
}

// ---------------------------------------------------------------------------
// sl2 strings and the quantum Casimir
// ---------------------------------------------------------------------------

/// One sl2-string for a fixed node: the F_i-orbit of a top vector.
#[derive(Clone, Debug)]
pub struct Sl2String {
    /// highest weight of the string, μ_top(α_i^∨)
    pub r: i64,
    /// vectors[k] = F_i^k(top), as (block, coordinates); length r + 1
    pub vectors: Vec<(usize, Vec<ScalarQ>)>,
}

#[derive(Clone, Debug)]
pub struct StringDecomposition {
    pub i: usize,
    pub strings: Vec<Sl2String>,
}

impl StringDecomposition {
    pub fn lengths(&self) -> Vec<i64> {
        let mut l: Vec<i64> = self.strings.iter().map(|s| s.r).collect();
        l.sort_unstable();
        l.reverse();
        l
    }

    pub fn total_dim(&self) -> usize {
        self.strings.iter().map(|s| s.vectors.len()).sum()
    }
}

/// Decompose an integrable module into sl2-strings for node i: tops are a
/// basis of ker E_i in each weight block, strings are their F_i-orbits.
pub fn sl2_strings(
    m: &WeightModule<ScalarQ>,
    i: usize,
) -> Result<StringDecomposition, QweylError> {
    require_integrable(m)?;
    let mut strings = Vec::new();
    for (b, blk) in m.blocks.iter().enumerate() {
        if blk.dim == 0 {
            continue;
        }
        let mval = block_pairing(m, b, i)?;
        // kernel of E_i restricted to this block
        let e_mat = m.e_ops[i]
            .maps
            .get(&b)
            .and_then(|t| t.values().next().cloned());
        let kernel: Vec<Vec<ScalarQ>> = match e_mat {
            None => (0..blk.dim)
                .map(|k| {
                    let mut v = vec![ScalarQ::zero(); blk.dim];
                    v[k] = ScalarQ::one();
                    v
                })
                .collect(),
            Some(mat) => mat.kernel_basis(),
        };
        for top in kernel {
            assert!(mval >= 0, "top of an integrable string has r >= 0");
            let r = mval;
            let mut vectors = Vec::with_capacity(r as usize + 1);
            let mut x = m.zero_vector();
            x[b][..top.len()].clone_from_slice(&top);
            let mut cur_block = b;
            for k in 0..=r {
                vectors.push((cur_block, x[cur_block].clone()));
                if k < r {
                    x = m.f_ops[i].apply(&x);
                    // the F-image lives in a single block
                    let nb = x
                        .iter()
                        .position(|c| c.iter().any(|v| !v.is_zero()))
                        .expect("string shorter than its weight predicts");
                    cur_block = nb;
                }
            }
            strings.push(Sl2String { r, vectors });
        }
    }
    let total: usize = strings.iter().map(|s| s.vectors.len()).sum();
    assert_eq!(total, m.total_dim(), "strings must partition a basis");
    Ok(StringDecomposition { i, strings })
}

/// Change-of-basis and Casimir eigenvalues per block: for block b, a square
/// matrix P whose columns are the string vectors in b, and the exponent
/// k = d_i(r(r+2) − m²)/2 of each column.
pub struct StringBasis {
    pub i: usize,
    /// per block index: (P, column k-eigenvalues); absent for empty blocks
    pub per_block: Vec<Option<(Mat<ScalarQ>, Vec<i64>)>>,
    pub inverses: Vec<Option<Mat<ScalarQ>>>,
}

pub fn string_basis(
    m: &WeightModule<ScalarQ>,
    dec: &StringDecomposition,
) -> Result<StringBasis, QweylError> {
    let i = dec.i;
    let d = m.gcm().d[i];
    let mut cols: Vec<Vec<(Vec<ScalarQ>, i64)>> = vec![Vec::new(); m.blocks.len()];
    for s in &dec.strings {
        for (k, (b, coords)) in s.vectors.iter().enumerate() {
            let mval = s.r - 2 * k as i64;
            let k_eig = d * (s.r * (s.r + 2) - mval * mval) / 2;
            cols[*b].push((coords.clone(), k_eig));
        }
    }
    let mut per_block = Vec::new();
    let mut inverses = Vec::new();
    for (b, blk) in m.blocks.iter().enumerate() {
        if blk.dim == 0 {
            per_block.push(None);
            inverses.push(None);
            continue;
        }
        assert_eq!(cols[b].len(), blk.dim);
        let p = Mat::from_fn(blk.dim, blk.dim, |r, c| cols[b][c].0[r].clone());
        let inv = p.invert().ok_or(QweylError::Singular)?;
        let ks = cols[b].iter().map(|(_, k)| *k).collect();
        per_block.push(Some((p, ks)));
        inverses.push(Some(inv));
    }
    Ok(StringBasis {
        i,
        per_block,
        inverses,
    })
}

/// The quantum Casimir spectral operator for node i: eigenvalue
/// d_i(r(r+2) − m²)/2 on the weight-m line of each r-string, realized as
/// P·diag(k)·P⁻¹ over ScalarQ.
pub fn quantum_casimir_diagonal(
    m: &WeightModule<ScalarQ>,
    i: usize,
) -> Result<BlockOp<ScalarQ>, QweylError> {
    let dec = sl2_strings(m, i)?;
    let sb = string_basis(m, &dec)?;
    let mut entries = Vec::new();
    for b in 0..m.blocks.len() {
        let Some((p, ks)) = &sb.per_block[b] else {
            continue;
        };
        let diag = Mat::from_fn(p.rows, p.rows, |r, c| {
            if r == c {
                ScalarQ::from_int(ks[r])
            } else {
                ScalarQ::zero()
            }
        });
        entries.push((b, p.matmul(&diag).matmul(sb.inverses[b].as_ref().unwrap())));
    }
    Ok(BlockOp::diagonal(entries))
}

/// `v^{2·c·k}` eigenvalue-wise; `c·k` must be integral for every string.
pub fn spectral_q_power(
    m: &WeightModule<ScalarQ>,
    i: usize,
    c: &Rat,
) -> Result<BlockOp<ScalarQ>, QweylError> {
    let dec = sl2_strings(m, i)?;
    let sb = string_basis(m, &dec)?;
    let mut entries = Vec::new();
    for b in 0..m.blocks.len() {
        let Some((p, ks)) = &sb.per_block[b] else {
            continue;
        };
        let diag = Mat::from_fn(p.rows, p.rows, |r, cc| {
            if r == cc {
                let e = c * Rat::from_integer(ks[r].into());
                assert!(e.is_integer(), "non-integral spectral exponent");
                ScalarQ::v_pow(2 * e.to_integer().to_i64().unwrap())
            } else {
                ScalarQ::zero()
            }
        });
        entries.push((b, p.matmul(&diag).matmul(sb.inverses[b].as_ref().unwrap())));
    }
    Ok(BlockOp::diagonal(entries))
}

// ---------------------------------------------------------------------------
// square factorization
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct SquareFactorization {
    pub i: usize,
    /// (−1)^{μ(α_i^∨)} per block
    pub sign: Vec<i8>,
    /// the weight-zero remainder sign⁻¹ · S_i²
    pub remainder: BlockOp<ScalarQ>,
    /// the unique constant with remainder = q^{c·k} spectrally
    pub c: Rat,
}

/// Factor S_i² = sign · q^{c·k}: strips the diagonal sign (−1)^{μ(α_i^∨)}
/// and solves for the single exponent constant c across all strings,
/// failing loudly if none fits.
pub fn square_factorization(
    m: &WeightModule<ScalarQ>,
    i: usize,
) -> Result<SquareFactorization, QweylError> {
    let s = q_weyl_operator(m, i)?;
    let s2 = s.compose(&s);
    let mut sign = vec![1i8; m.blocks.len()];
    let mut entries = Vec::new();
    for (b, blk) in m.blocks.iter().enumerate() {
        if blk.dim == 0 {
            continue;
        }
        let mval = block_pairing(m, b, i)?;
        sign[b] = if mval.rem_euclid(2) == 0 { 1 } else { -1 };
        let c = ScalarQ::from_int(sign[b] as i64);
        entries.push((b, Mat::identity(blk.dim).scale(&c)));
    }
    let sign_op = BlockOp::diagonal(entries);
    let remainder = sign_op.compose(&s2); // sign is its own inverse
    // diagonalize in the string basis and fit c
    let dec = sl2_strings(m, i)?;
    let sb = string_basis(m, &dec)?;
    let mut c_fit: Option<Rat> = None;
    for b in 0..m.blocks.len() {
        let Some((p, ks)) = &sb.per_block[b] else {
            continue;
        };
        let Some(tgts) = remainder.maps.get(&b) else {
            // zero block: remainder must be empty only if the block is
            continue;
        };
        if tgts.len() != 1 || !tgts.contains_key(&b) {
            return Err(QweylError::NotDiagonal { i, block: b });
        }
        let diag = sb.inverses[b].as_ref().unwrap().matmul(&tgts[&b]).matmul(p);
        for r in 0..diag.rows {
            for cc in 0..diag.cols {
                if r != cc {
                    if !diag.get(r, cc).is_zero() {
                        return Err(QweylError::NotDiagonal { i, block: b });
                    }
                    continue;
                }
                let Some((e, coeff)) = diag.get(r, r).as_monomial() else {
                    return Err(QweylError::InconsistentExponent(format!(
                        "eigenvalue {} is not a power of v",
                        diag.get(r, r)
                    )));
                };
                if coeff != Rat::from_integer(1.into()) {
                    return Err(QweylError::InconsistentExponent(format!(
                        "eigenvalue {} has non-unit coefficient",
                        diag.get(r, r)
                    )));
                }
                let k = ks[r];
                if k == 0 {
                    if e != 0 {
                        return Err(QweylError::InconsistentExponent(format!(
                            "k = 0 string with eigenvalue v^{e}"
                        )));
                    }
                    continue;
                }
                // v^e = q^{c k} = v^{2 c k}
                let this_c = Rat::new(e.into(), (2 * k).into());
                match &c_fit {
                    None => c_fit = Some(this_c),
                    Some(existing) => {
                        if *existing != this_c {
                            return Err(QweylError::InconsistentExponent(format!(
                                "c = {existing} vs {this_c}"
                            )));
                        }
                    }
                }
            }
        }
    }
    Ok(SquareFactorization {
        i,
        sign,
        remainder,
        c: c_fit.unwrap_or_else(|| Rat::from_integer(1.into())),
    })
}

// ---------------------------------------------------------------------------
// pure braid actions
// ---------------------------------------------------------------------------

#[derive(Clone, Debug)]
pub struct PureBraidReport {
    /// λ(p): the product of conjugated squares
    pub lambda: BlockOp<ScalarQ>,
    /// ε_ħ(p): the diagonal sign character value per block
    pub sign: Vec<i8>,
    /// λ^D(p) = ε⁻¹ λ(p), weight preserving
    pub lambda_d: BlockOp<ScalarQ>,
    /// diagonal abelian cochain b(p) with entry v^{−2 Σ e·d_α·μ(h_α)}
    pub b_diag: BlockOp<ScalarQ>,
    /// normally ordered λ′(p) = λ^D(p) · b(p)
    pub lambda_prime: BlockOp<ScalarQ>,
}

/// Evaluate the pure braid word through the quantum Weyl group:
/// λ(p) = Π (S_w S_i² S_w⁻¹)^e, with the sign character, weight-zero part
/// and normally ordered variant.
pub fn pure_braid_action(
    m: &WeightModule<ScalarQ>,
    rd: &RootDatum,
    p: &PureBraidWord,
) -> Result<PureBraidReport, QweylError> {
    require_integrable(m)?;
    let roots = p.validate(rd)?;
    let dims = m.dims();
    let mut lambda = BlockOp::identity(&dims);
    for letter in &p.letters {
        let sw = q_weyl_word(m, &letter.w)?;
        let si = q_weyl_operator(m, letter.i)?;
        let sw_inv = invert_block_op(&sw)?;
        let mut conj = sw.compose(&si).compose(&si).compose(&sw_inv);
        if letter.e < 0 {
            conj = invert_block_op(&conj)?;
        }
        lambda = lambda.compose(&conj);
    }
    // ε_ħ(p) per block from the sign character of the block weight
    let gcm = m.gcm();
    let mut sign = vec![1i8; m.blocks.len()];
    let mut sign_entries = Vec::new();
    let mut b_entries = Vec::new();
    for (b, blk) in m.blocks.iter().enumerate() {
        if blk.dim == 0 {
            continue;
        }
        let mu = m.block_weight(b).ok_or(QweylError::SymbolicWeight)?;
        sign[b] = p.sign_character(rd, &mu)?;
        sign_entries.push((
            b,
            Mat::identity(blk.dim).scale(&ScalarQ::from_int(sign[b] as i64)),
        ));
        // b(p) entry: v^{−2 Σ e·d_α·μ(h_α)} over letters naming root α
        let mut exp = 0i64;
        for (letter, root_coords) in p.letters.iter().zip(&roots) {
            let root = rd.find(root_coords).expect("validated root");
            let d_alpha = &root.d_alpha;
            assert!(d_alpha.is_integer());
            let mut pairing = Rat::from_integer(0.into());
            for (j, &h) in root.coroot.iter().enumerate() {
                pairing += &mu[j] * Rat::from_integer(h.into());
            }
            if !pairing.is_integer() {
                return Err(QweylError::NonIntegralPairing(pairing.to_string()));
            }
            exp += i64::from(letter.e)
                * d_alpha.to_integer().to_i64().unwrap()
                * pairing.to_integer().to_i64().unwrap();
        }
        b_entries.push((b, Mat::identity(blk.dim).scale(&ScalarQ::v_pow(-2 * exp))));
    }
    let _ = gcm;
    let sign_op = BlockOp::diagonal(sign_entries);
    let b_diag = BlockOp::diagonal(b_entries);
    let lambda_d = sign_op.compose(&lambda);
    // weight-zero assertion
    for (&src, tgts) in &lambda_d.maps {
        for &tgt in tgts.keys() {
            assert_eq!(src, tgt, "λ^D must preserve every weight space");
        }
    }
    let lambda_prime = lambda_d.compose(&b_diag);
    Ok(PureBraidReport {
        lambda,
        sign,
        lambda_d,
        b_diag,
        lambda_prime,
    })
}

/// λ^D(p·p′) = λ^D(p)·λ^D(p′), as an exact matrix regression.
pub fn homomorphism_check(
    m: &WeightModule<ScalarQ>,
    rd: &RootDatum,
    p: &PureBraidWord,
    p2: &PureBraidWord,
) -> Result<bool, QweylError> {
    let mut concat = p.letters.clone();
    concat.extend(p2.letters.iter().cloned());
    let joined = pure_braid_action(m, rd, &PureBraidWord::new(concat))?;
    let a = pure_braid_action(m, rd, p)?;
    let b = pure_braid_action(m, rd, p2)?;
    Ok(joined.lambda_d == a.lambda_d.compose(&b.lambda_d))
}

/// λ^D(S_i²) on a rank-1 Verma module, where integrability fails but the
/// sign-and-spectral formula still makes sense: the diagonal with entry
/// (−1)^{μ(α^∨)} q^{(λ(λ+2) − m²)/2·d} on the weight-m line. Used for the
/// naturality check against Verma embeddings.
pub fn lambda_d_square_rank1_verma(
    m: &WeightModule<ScalarQ>,
) -> Result<BlockOp<ScalarQ>, QweylError> {
    assert_eq!(m.gcm().n, 1, "rank-1 only");
    let Hw::Numeric(lam) = &m.hw else {
        return Err(QweylError::SymbolicWeight);
    };
    let d = m.gcm().d[0];
    let l = lam[0]
        .is_integer()
        .then(|| lam[0].to_integer().to_i64().unwrap())
        .ok_or_else(|| QweylError::NonIntegralPairing(lam[0].to_string()))?;
    let mut entries = Vec::new();
    for (b, blk) in m.blocks.iter().enumerate() {
        if blk.dim == 0 {
            continue;
        }
        let mval = block_pairing(m, b, 0)?;
        let two_k = d * (l * (l + 2) - mval * mval);
        assert!(two_k % 2 == 0);
        // q^{k} = v^{2k}; the sign strips to (−1)^m
        let mut c = ScalarQ::v_pow(two_k);
        if mval.rem_euclid(2) == 1 {
            c = c.neg();
        }
        entries.push((b, Mat::identity(blk.dim).scale(&c)));
    }
    Ok(BlockOp::diagonal(entries))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cartan::{
        gcm_a1, gcm_a1xa1, gcm_a2, gcm_b2, Gcm, Realization, WeylElement,
    };
    use crate::cato::{classical_limit, irreducible, verma};
    use crate::qalgebra::{evaluate, lusztig_t, AlgebraElement, GenSymbol};

    fn rat(n: i64) -> Rat {
        Rat::from_integer(n.into())
    }

    fn rd(gcm: Gcm) -> RootDatum {
        RootDatum::new(Realization::new(gcm), None).unwrap()
    }

    fn v_r(r: i64) -> WeightModule<ScalarQ> {
        irreducible(&Realization::new(gcm_a1()), vec![rat(r)], 2 * r + 2).unwrap()
    }

    #[test]
    fn rank1_s_operator_closed_form() {
        // V1: S v = −q F v, S(Fv) = v
        let m = v_r(1);
        let s = q_weyl_operator(&m, 0).unwrap();
        let v = m.highest_vector();
        let sv = s.apply(&v);
        let b1 = m.block_index[&vec![1]];
        let top = m.block_index[&vec![0]];
        let fv = m.f_ops[0].apply(&v);
        assert_eq!(sv[b1][0], ScalarQ::v_pow(2).neg().mul(&fv[b1][0]));
        let sfv = s.apply(&fv);
        assert_eq!(sfv[top][0], ScalarQ::one());
        // trivial module: identity
        let t = v_r(0);
        let s = q_weyl_operator(&t, 0).unwrap();
        assert_eq!(s, BlockOp::identity(&t.dims()));
        // non-integrable rejected
        let mv: WeightModule<ScalarQ> =
            verma(&Realization::new(gcm_a1()), Hw::Numeric(vec![rat(2)]), 5).unwrap();
        assert!(matches!(
            q_weyl_operator(&mv, 0),
            Err(QweylError::NotIntegrable(_))
        ));
    }

    #[test]
    fn weight_shift_is_s_i() {
        for (gcm, lam) in [
            (gcm_a2(), vec![rat(1), rat(0)]),
            (gcm_a2(), vec![rat(1), rat(1)]),
            (gcm_b2(), vec![rat(1), rat(0)]),
        ] {
            let real = Realization::new(gcm.clone());
            let m = irreducible(&real, lam, 8).unwrap();
            for i in 0..gcm.n {
                let s = q_weyl_operator(&m, i).unwrap();
                for (&src, tgts) in &s.maps {
                    let mu = m.block_weight(src).unwrap();
                    let smu = m.real.reflect_dual(i, &mu);
                    for &tgt in tgts.keys() {
                        assert_eq!(m.block_weight(tgt).unwrap(), smu);
                    }
                }
            }
        }
    }

    #[test]
    fn braid_relations() {
        // A1×A1 on the bifundamental
        let m = irreducible(
            &Realization::new(gcm_a1xa1()),
            vec![rat(1), rat(1)],
            4,
        )
        .unwrap();
        assert!(braid_relation_check(&m, 0, 1).unwrap());
        // A2 on L(ω1)
        let m = irreducible(&Realization::new(gcm_a2()), vec![rat(1), rat(0)], 6).unwrap();
        assert!(braid_relation_check(&m, 0, 1).unwrap());
        // B2 on the spin module
        let m = irreducible(&Realization::new(gcm_b2()), vec![rat(1), rat(0)], 8).unwrap();
        assert!(braid_relation_check(&m, 0, 1).unwrap());
    }

    #[test]
    fn string_decompositions() {
        // V_r: one string of length r
        for r in 0..=3 {
            let dec = sl2_strings(&v_r(r), 0).unwrap();
            assert_eq!(dec.lengths(), vec![r]);
        }
        let a2 = Realization::new(gcm_a2());
        // L(ω1) node 1: strings (1, 0)
        let m = irreducible(&a2, vec![rat(1), rat(0)], 6).unwrap();
        let dec = sl2_strings(&m, 0).unwrap();
        assert_eq!(dec.lengths(), vec![1, 0]);
        // adjoint node 1: strings (2, 1, 1, 0)
        let m = irreducible(&a2, vec![rat(1), rat(1)], 6).unwrap();
        let dec = sl2_strings(&m, 0).unwrap();
        assert_eq!(dec.lengths(), vec![2, 1, 1, 0]);
        assert_eq!(dec.total_dim(), 8);
    }

    #[test]
    fn casimir_eigenvalues() {
        // V1: eigenvalue 1 on both lines; V2: 4 at weight 0, 2 at ±2
        let m = v_r(1);
        let op = quantum_casimir_diagonal(&m, 0).unwrap();
        for (_, tgts) in &op.maps {
            for mat in tgts.values() {
                assert_eq!(*mat.get(0, 0), ScalarQ::from_int(1));
            }
        }
        let m = v_r(2);
        let op = quantum_casimir_diagonal(&m, 0).unwrap();
        let at = |beta: i64| {
            let b = m.block_index[&vec![beta]];
            op.maps[&b][&b].get(0, 0).clone()
        };
        assert_eq!(at(0), ScalarQ::from_int(2));
        assert_eq!(at(1), ScalarQ::from_int(4));
        assert_eq!(at(2), ScalarQ::from_int(2));
    }

    #[test]
    fn square_factorization_rank1() {
        // V1: S² = diag(−q, −q), sign = −1, remainder = q = q^{c·1} → c = 1
        let m = v_r(1);
        let s = q_weyl_operator(&m, 0).unwrap();
        let s2 = s.compose(&s);
        for (&b, tgts) in &s2.maps {
            assert_eq!(tgts.len(), 1);
            assert_eq!(*tgts[&b].get(0, 0), ScalarQ::v_pow(2).neg());
        }
        let f = square_factorization(&m, 0).unwrap();
        assert_eq!(f.c, rat(1));
        for (b, blk) in m.blocks.iter().enumerate() {
            if blk.dim > 0 {
                assert_eq!(f.sign[b], -1);
            }
        }
        // single constant across strings r ≤ 6
        for r in 0..=6 {
            let f = square_factorization(&v_r(r), 0).unwrap();
            if r > 0 {
                assert_eq!(f.c, rat(1), "c drifts at r = {r}");
            }
        }
    }

    #[test]
    fn square_factorization_rank2() {
        // same c = 1 across both nodes of A2 and B2 modules
        for (gcm, lam) in [
            (gcm_a2(), vec![rat(1), rat(0)]),
            (gcm_a2(), vec![rat(1), rat(1)]),
            (gcm_b2(), vec![rat(1), rat(0)]),
            (gcm_b2(), vec![rat(0), rat(1)]),
        ] {
            let m = irreducible(&Realization::new(gcm.clone()), lam.clone(), 8).unwrap();
            for i in 0..gcm.n {
                let f = square_factorization(&m, i).unwrap();
                assert_eq!(f.c, rat(1), "node {i} of {:?}, λ = {:?}", gcm.a, lam);
            }
        }
    }

    #[test]
    fn intertwining_with_lusztig_t() {
        // S_i ∘ ev(x) ∘ S_i⁻¹ = ev(T_i x) on integrable modules
        let gcm = gcm_a2();
        let m = irreducible(&Realization::new(gcm.clone()), vec![rat(1), rat(1)], 6).unwrap();
        let gens = [
            GenSymbol::E(0),
            GenSymbol::E(1),
            GenSymbol::F(0),
            GenSymbol::F(1),
            GenSymbol::K(vec![1, 0]),
            GenSymbol::K(vec![0, 1]),
        ];
        for i in 0..2 {
            let s = q_weyl_operator(&m, i).unwrap();
            let s_inv = invert_block_op(&s).unwrap();
            for g in &gens {
                let lhs = s
                    .compose(&evaluate(&AlgebraElement::generator(g.clone()), &m).unwrap())
                    .compose(&s_inv);
                let rhs = evaluate(&lusztig_t(&gcm, i, g), &m).unwrap();
                assert_eq!(lhs, rhs, "intertwining fails for T_{} on {:?}", i + 1, g);
            }
        }
    }

    #[test]
    fn pure_braid_rank1_calibration() {
        // sl2, p = S₁² on V1: λ = diag(−q,−q), ε = −1, λ^D = diag(q,q),
        // λ′ = diag(1, q²)
        let m = v_r(1);
        let rd1 = rd(gcm_a1());
        let p = PureBraidWord::generator(WeylElement::identity(1), 0);
        let rep = pure_braid_action(&m, &rd1, &p).unwrap();
        let top = m.block_index[&vec![0]];
        let bot = m.block_index[&vec![1]];
        let diag = |op: &BlockOp<ScalarQ>, b: usize| op.maps[&b][&b].get(0, 0).clone();
        assert_eq!(diag(&rep.lambda, top), ScalarQ::v_pow(2).neg());
        assert_eq!(diag(&rep.lambda, bot), ScalarQ::v_pow(2).neg());
        assert_eq!(rep.sign[top], -1);
        assert_eq!(rep.sign[bot], -1);
        assert_eq!(diag(&rep.lambda_d, top), ScalarQ::v_pow(2));
        assert_eq!(diag(&rep.lambda_d, bot), ScalarQ::v_pow(2));
        assert_eq!(diag(&rep.lambda_prime, top), ScalarQ::one());
        assert_eq!(diag(&rep.lambda_prime, bot), ScalarQ::v_pow(4));
        // trivial module: everything is the identity
        let t = v_r(0);
        let rep = pure_braid_action(&t, &rd1, &p).unwrap();
        assert_eq!(rep.lambda, BlockOp::identity(&t.dims()));
        assert_eq!(rep.lambda_prime, BlockOp::identity(&t.dims()));
    }

    #[test]
    fn lambda_d_weight_preserving_a2() {
        let gcm = gcm_a2();
        let rd2 = rd(gcm.clone());
        let m = irreducible(&Realization::new(gcm.clone()), vec![rat(1), rat(0)], 6).unwrap();
        let p = PureBraidWord::generator(WeylElement::simple(&gcm, 0), 1);
        let rep = pure_braid_action(&m, &rd2, &p).unwrap();
        for (&src, tgts) in &rep.lambda_d.maps {
            for &tgt in tgts.keys() {
                assert_eq!(src, tgt);
            }
        }
    }

    #[test]
    fn homomorphism_checks() {
        let rd1 = rd(gcm_a1());
        let m = v_r(2);
        let p = PureBraidWord::generator(WeylElement::identity(1), 0);
        assert!(homomorphism_check(&m, &rd1, &p, &p).unwrap());
        // inverse letter gives the identity
        let gcm = gcm_a2();
        let rd2 = rd(gcm.clone());
        let m = irreducible(&Realization::new(gcm.clone()), vec![rat(1), rat(0)], 6).unwrap();
        let p = PureBraidWord::generator(WeylElement::identity(2), 0);
        let mut inv_letters = p.letters.clone();
        inv_letters[0].e = -1;
        let p_inv = PureBraidWord::new(inv_letters);
        assert!(homomorphism_check(&m, &rd2, &p, &p_inv).unwrap());
        let joined = {
            let mut l = p.letters.clone();
            l.extend(p_inv.letters.iter().cloned());
            PureBraidWord::new(l)
        };
        let rep = pure_braid_action(&m, &rd2, &joined).unwrap();
        assert_eq!(rep.lambda, BlockOp::identity(&m.dims()));
    }

    #[test]
    fn naturality_on_verma_embedding() {
        // sl2, dominant integral λ: M(−λ−2) ↪ M(λ) via v ↦ F^{λ+1}v;
        // λ^D(S²) commutes with the embedding
        let real = Realization::new(gcm_a1());
        for l in 0..=3i64 {
            let big: WeightModule<ScalarQ> =
                verma(&real, Hw::Numeric(vec![rat(l)]), 2 * l + 6).unwrap();
            let small: WeightModule<ScalarQ> =
                verma(&real, Hw::Numeric(vec![rat(-l - 2)]), l + 4).unwrap();
            let op_big = lambda_d_square_rank1_verma(&big).unwrap();
            let op_small = lambda_d_square_rank1_verma(&small).unwrap();
            // embedding: F^k v_small ↦ F^{k + l + 1} v_big; compare diagonal
            // eigenvalues on matching lines
            for k in 0..=(l + 2) {
                let b_small = small.block_index[&vec![k]];
                let b_big = big.block_index[&vec![k + l + 1]];
                let e_small = op_small.maps[&b_small][&b_small].get(0, 0).clone();
                let e_big = op_big.maps[&b_big][&b_big].get(0, 0).clone();
                assert_eq!(e_small, e_big, "naturality fails at λ = {l}, k = {k}");
            }
        }
    }

    #[test]
    fn classical_limit_is_triple_exponential() {
        // v → 1 of S_i equals exp(e)exp(−f)exp(e) on the classical limit
        let m = v_r(2);
        let s = q_weyl_operator(&m, 0).unwrap();
        let c = classical_limit(&m).unwrap();
        // classical triple exponential on the flattened module
        let dims: Vec<usize> = c.blocks.iter().map(|b| b.dim).collect();
        let exp_op = |op: &BlockOp<Rat>, sign: i64| -> BlockOp<Rat> {
            // nilpotent exponential: Σ op^k sign^k / k!
            let mut acc = BlockOp::identity(&dims);
            let mut term = BlockOp::identity(&dims);
            let mut k = 1i64;
            loop {
                term = op.compose(&term);
                if term.is_zero() {
                    return acc;
                }
                let mut fact = rat(1);
                for j in 1..=k {
                    fact *= rat(j);
                }
                let coeff = Rat::new((sign.pow(k as u32)).into(), 1.into()) / fact;
                acc = acc.add(&term.scale(&coeff));
                k += 1;
            }
        };
        let tau = exp_op(&c.e_ops[0], 1)
            .compose(&exp_op(&c.f_ops[0], -1))
            .compose(&exp_op(&c.e_ops[0], 1));
        // specialize S at v = 1 and compare
        for (&src, tgts) in &s.maps {
            for (&tgt, mat) in tgts {
                let expect = tau.maps.get(&src).and_then(|t| t.get(&tgt));
                for i in 0..mat.rows {
                    for j in 0..mat.cols {
                        let val = mat.get(i, j).eval_rat(&rat(1)).unwrap();
                        let want = expect.map_or(rat(0), |m| m.get(i, j).clone());
                        assert_eq!(val, want, "classical limit mismatch");
                    }
                }
            }
        }
    }
}
