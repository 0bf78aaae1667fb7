//! Acceptance gate: the eleven headline checks of the library, one pass/fail
//! line each. Tolerances are pinned here and nowhere weakened.

use num_complex::Complex64;
use qweyl_core::cartan::{
    compatible, gcm_a1, gcm_a1xa1, gcm_a2, gcm_b2, is_connected, Gcm,
    bracketing_to_nested, enumerate_maximal_nested_sets, nested_to_bracketing, PureBraidWord,
    PureLetter, Realization, RootDatum, Subdiagram, WeylElement,
};
use qweyl_core::casimir::{
    abelian_cochain, casimir_connection, coboundary_residual, compare_spectra,
    equivariant_generator, flatness_check, fundamental_point, generator_loop, parallel_transport,
    purify, pure_loop, sampled_clearance, tau_on_pure, to_complex_point, CMat, ClassicalAlgebra,
    LoopPath, Segment, C,
};
use qweyl_core::cato::{
    classical_limit, irreducible, shapovalov_dual, verma, Hw, WeightModule,
};
use qweyl_core::linalg::{Mat, PolyL};
use qweyl_core::qalgebra::{defining_relation_defects, evaluate, zero_on_reliable_blocks};
use qweyl_core::qweyl::{
    braid_relation_check, invert_block_op, pure_braid_action, q_weyl_word, spectral_q_power,
    square_factorization,
};
use qweyl_core::scalars::{Rat, ScalarQ};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;

fn rat(n: i64) -> Rat {
    Rat::from_integer(n.into())
}

fn module(gcm: Gcm, lam: Vec<i64>, cutoff: i64) -> WeightModule<ScalarQ> {
    let real = Realization::new(gcm);
    irreducible(&real, lam.into_iter().map(rat).collect(), cutoff).unwrap()
}

fn datum(gcm: Gcm) -> RootDatum {
    RootDatum::new(Realization::new(gcm), None).unwrap()
}

fn run(
    checks: &mut Vec<(String, Result<String, String>)>,
    name: &str,
    f: impl FnOnce() -> Result<String, String>,
) {
    let t0 = std::time::Instant::now();
    let result = f();
    let elapsed = t0.elapsed().as_secs_f64();
    checks.push((
        name.to_string(),
        result.map(|msg| format!("{msg} [{elapsed:.1}s]")),
    ));
}

// 1. exact braid relations on A1×A1, A2 (both modules), B2 spin
fn criterion_braid() -> Result<String, String> {
    let cases: Vec<(&str, WeightModule<ScalarQ>)> = vec![
        ("A1xA1 bifundamental", module(gcm_a1xa1(), vec![1, 1], 4)),
        ("A2 L(w1)", module(gcm_a2(), vec![1, 0], 6)),
        ("A2 adjoint", module(gcm_a2(), vec![1, 1], 6)),
        ("B2 spin", module(gcm_b2(), vec![1, 0], 8)),
    ];
    for (name, m) in &cases {
        if !braid_relation_check(m, 0, 1).map_err(|e| e.to_string())? {
            return Err(format!("braid relation fails on {name}"));
        }
    }
    Ok("exact on all four test modules".into())
}

// 2. a single constant c fits S_i² = sign · q^{c·k} everywhere
fn criterion_calibration() -> Result<String, String> {
    let mut fitted: Option<Rat> = None;
    let mut record = |c: Rat, label: &str| -> Result<(), String> {
        match &fitted {
            None => {
                fitted = Some(c);
                Ok(())
            }
            Some(prev) if *prev == c => Ok(()),
            Some(prev) => Err(format!("c = {prev} vs {c} at {label}")),
        }
    };
    for r in 1..=6i64 {
        let m = module(gcm_a1(), vec![r], 2 * r + 2);
        let f = square_factorization(&m, 0).map_err(|e| e.to_string())?;
        record(f.c, &format!("sl2 V_{r}"))?;
    }
    for (label, m) in [
        ("A2 adjoint", module(gcm_a2(), vec![1, 1], 6)),
        ("B2 spin", module(gcm_b2(), vec![1, 0], 8)),
    ] {
        for i in 0..2 {
            let f = square_factorization(&m, i).map_err(|e| e.to_string())?;
            record(f.c, &format!("{label} node {}", i + 1))?;
        }
    }
    Ok(format!("fitted c = {}", fitted.unwrap()))
}

// 3. λ^D(S_w S_i² S_w⁻¹) = S_w · q^{c·k_i} · S_w⁻¹ for every A2 root
fn criterion_pure_factorization() -> Result<String, String> {
    let rd = datum(gcm_a2());
    for m in [module(gcm_a2(), vec![1, 0], 6), module(gcm_a2(), vec![1, 1], 6)] {
        for root in &rd.roots {
            let (w, i) = root.witness.clone();
            let p = PureBraidWord::generator(w.clone(), i);
            let rep = pure_braid_action(&m, &rd, &p).map_err(|e| e.to_string())?;
            let sw = q_weyl_word(&m, &w).map_err(|e| e.to_string())?;
            let sw_inv = invert_block_op(&sw).map_err(|e| e.to_string())?;
            let qk = spectral_q_power(&m, i, &rat(1)).map_err(|e| e.to_string())?;
            let want = sw.compose(&qk).compose(&sw_inv);
            if rep.lambda_d != want {
                return Err(format!("factorization fails for root {:?}", root.coords));
            }
        }
    }
    Ok("exact on L(w1) and adjoint, all three roots".into())
}

// 4. rank-1 monodromy vs λ′, entrywise within 1e−8
fn criterion_rank1_monodromy() -> Result<String, String> {
    let rd = datum(gcm_a1());
    let mut worst = 0.0f64;
    for r in 1..=4i64 {
        let qm = module(gcm_a1(), vec![r], 2 * r + 2);
        let p = PureBraidWord::generator(WeylElement::identity(1), 0);
        let rep = pure_braid_action(&qm, &rd, &p).map_err(|e| e.to_string())?;
        let cm = classical_limit(&qm).map_err(|e| e.to_string())?;
        let alg = ClassicalAlgebra::build(datum(gcm_a1()), cm).map_err(|e| e.to_string())?;
        let x0 = to_complex_point(&fundamental_point(&alg.module.real));
        let gamma = generator_loop(&alg.rd, 0, &x0).map_err(|e| e.to_string())?;
        let ploop = purify(&alg.rd, 0, &gamma);
        for hbar in [Complex64::new(0.2, 0.0), Complex64::new(0.3, 0.2)] {
            let conn = casimir_connection(&alg, hbar, false);
            let pt = parallel_transport(&conn, &ploop, 1e-12).map_err(|e| e.to_string())?;
            for (b, blk) in alg.module.blocks.iter().enumerate() {
                if blk.dim == 0 {
                    continue;
                }
                let classical = pt[b].as_ref().unwrap().get(0, 0);
                let quantum = rep.lambda_prime.maps[&b][&b]
                    .get(0, 0)
                    .specialize(hbar)
                    .map_err(|e| e.to_string())?
                    .value;
                let diff = (classical - quantum).norm();
                worst = worst.max(diff);
                if diff > 1e-8 {
                    return Err(format!("r = {r}, block {b}, hbar = {hbar}: |diff| = {diff:.3e}"));
                }
            }
        }
    }
    Ok(format!("max entrywise residual {worst:.3e} (tol 1e-8)"))
}

// 5. rank-2 blockwise spectra of p_{α₁}, p_{α₂}, p_θ vs λ′ within 1e−6
fn criterion_rank2_spectra() -> Result<String, String> {
    let gcm = gcm_a2();
    let rd = datum(gcm.clone());
    let hbar = Complex64::new(0.2, 0.0);
    let mut worst = 0.0f64;
    for lam in [vec![1, 0], vec![1, 1]] {
        let qm = module(gcm.clone(), lam.clone(), 6);
        let cm = classical_limit(&qm).map_err(|e| e.to_string())?;
        let alg = ClassicalAlgebra::build(datum(gcm.clone()), cm).map_err(|e| e.to_string())?;
        let x0 = to_complex_point(&fundamental_point(&alg.module.real));
        let conn = casimir_connection(&alg, hbar, false);
        let dims: Vec<usize> = alg.module.blocks.iter().map(|b| b.dim).collect();
        for root in rd.roots.clone() {
            let (w, i) = root.witness.clone();
            let letter = PureLetter { w, i, e: 1 };
            let p = PureBraidWord::new(vec![letter.clone()]);
            let rep = pure_braid_action(&qm, &rd, &p).map_err(|e| e.to_string())?;
            let ploop = pure_loop(&alg.rd, &letter, &x0).map_err(|e| e.to_string())?;
            let pt = parallel_transport(&conn, &ploop, 1e-11).map_err(|e| e.to_string())?;
            let report =
                compare_spectra(&pt, &rep.lambda_prime, &dims, hbar).map_err(|e| e.to_string())?;
            worst = worst.max(report.max_mismatch);
            if report.max_mismatch > 1e-6 {
                return Err(format!(
                    "lambda {lam:?}, root {:?}: mismatch {:.3e}",
                    root.coords, report.max_mismatch
                ));
            }
        }
    }
    Ok(format!("max blockwise mismatch {worst:.3e} (tol 1e-6)"))
}

// 6. flatness: all rank-2 residue commutators vanish exactly
fn criterion_flatness() -> Result<String, String> {
    for (label, gcm, lam, cutoff) in [
        ("A2 adjoint", gcm_a2(), vec![1, 1], 6),
        ("B2 vector", gcm_b2(), vec![0, 1], 8),
    ] {
        let qm = module(gcm.clone(), lam, cutoff);
        let cm = classical_limit(&qm).map_err(|e| e.to_string())?;
        let alg = ClassicalAlgebra::build(datum(gcm), cm).map_err(|e| e.to_string())?;
        let reports = flatness_check(&alg);
        if reports.is_empty() {
            return Err(format!("{label}: no rank-2 planes found"));
        }
        for rep in &reports {
            if !rep.exact_zero {
                return Err(format!(
                    "{label}: plane {:?} residual {:.3e}",
                    rep.members, rep.max_residual
                ));
            }
        }
    }
    Ok("exact zero on A2 adjoint and B2 vector".into())
}

// 7. defining relations vanish on symbolic Vermas up to height 6
fn criterion_defining_relations() -> Result<String, String> {
    for (label, gcm) in [("A2", gcm_a2()), ("B2", gcm_b2())] {
        let real = Realization::new(gcm.clone());
        let m: WeightModule<PolyL> = verma(&real, Hw::Symbolic, 6).map_err(|e| e.to_string())?;
        for (name, defect) in defining_relation_defects(&gcm) {
            let descent = defect.max_descent();
            let op = evaluate(&defect, &m).map_err(|e| e.to_string())?;
            if !zero_on_reliable_blocks(&op, &m, descent) {
                return Err(format!("{label}: relation {name} does not vanish"));
            }
        }
    }
    Ok("all relations vanish symbolically on A2 and B2".into())
}

// 8. Shapovalov dual bases: Gram · adjugate = det · 1, det ≠ 0, height ≤ 4
fn criterion_shapovalov() -> Result<String, String> {
    let real = Realization::new(gcm_a2());
    let m: WeightModule<PolyL> = verma(&real, Hw::Symbolic, 4).map_err(|e| e.to_string())?;
    let mut count = 0usize;
    for blk in &m.blocks {
        if blk.dim == 0 || blk.height() == 0 || blk.height() > 4 {
            continue;
        }
        let dual = shapovalov_dual(&m, &blk.beta).map_err(|e| e.to_string())?;
        let prod = dual.gram.matmul(&dual.adjugate);
        let want = Mat::identity(blk.dim).scale(&dual.det);
        if prod != want {
            return Err(format!("dual-basis identity fails at beta = {:?}", blk.beta));
        }
        count += 1;
    }
    Ok(format!("delta identity exact at {count} depths of A2"))
}

// 9. τ|P = ε exactly; coboundary a = db within 1e−8 on random paths
fn criterion_tau_and_coboundary() -> Result<String, String> {
    // τ|P = ε across integral test modules and all Digne generators
    for (gcm, lam, cutoff) in [
        (gcm_a1(), vec![2], 6),
        (gcm_a2(), vec![1, 0], 6),
        (gcm_a2(), vec![1, 1], 6),
        (gcm_b2(), vec![1, 0], 8),
    ] {
        let rd = datum(gcm.clone());
        let qm = module(gcm.clone(), lam, cutoff);
        let cm = classical_limit(&qm).map_err(|e| e.to_string())?;
        for root in &rd.roots {
            let (w, i) = root.witness.clone();
            let p = PureBraidWord::generator(w, i);
            let signs = tau_on_pure(&cm, &rd, &p).map_err(|e| e.to_string())?;
            for (b, blk) in cm.blocks.iter().enumerate() {
                if blk.dim == 0 {
                    continue;
                }
                let eps = p
                    .sign_character(&rd, &cm.block_weight(b))
                    .map_err(|e| e.to_string())?;
                if signs[b] != eps {
                    return Err(format!("tau != eps at block {b}, root {:?}", root.coords));
                }
            }
        }
    }
    // coboundary identity on randomized regular paths in A2
    let qm = module(gcm_a2(), vec![1, 1], 6);
    let cm = classical_limit(&qm).map_err(|e| e.to_string())?;
    let alg = ClassicalAlgebra::build(datum(gcm_a2()), cm).map_err(|e| e.to_string())?;
    let x0 = to_complex_point(&fundamental_point(&alg.module.real));
    let hbar = Complex64::new(0.2, 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(23);
    let mut worst = 0.0f64;
    for _ in 0..8 {
        let y: Vec<C> = (0..2)
            .map(|_| C::new(rng.gen_range(-1.0..1.0), rng.gen_range(0.4..1.2)))
            .collect();
        let mut path = LoopPath {
            segments: vec![Segment::Bump {
                from: x0.clone(),
                to: y,
                dir: x0.clone(),
                height: 0.7,
            }],
            clearance: 0.0,
        };
        path.clearance = sampled_clearance(&alg.rd, &path.segments);
        for i in 0..2 {
            let res = coboundary_residual(&alg, i, &path, hbar);
            worst = worst.max(res);
            if res > 1e-8 {
                return Err(format!("coboundary residual {res:.3e} for s_{}", i + 1));
            }
        }
    }
    Ok(format!("tau = eps exact; coboundary residual {worst:.3e} (tol 1e-8)"))
}

// 10. nested-set counts = Catalan(n−1) vs brute force; bracketing round-trip
fn criterion_nested_sets() -> Result<String, String> {
    fn catalan(k: u64) -> u64 {
        let mut num = 1u64;
        let mut den = 1u64;
        for i in 0..k {
            num *= 2 * k - i;
            den *= i + 1;
        }
        num / den / (k + 1)
    }
    // brute force: maximal pairwise-compatible families of connected
    // subdiagrams, enumerated directly over the power set
    fn brute_force_count(gcm: &Gcm) -> usize {
        let n = gcm.n;
        let mut connected: Vec<Subdiagram> = Vec::new();
        for mask in 1u32..(1 << n) {
            let s: Subdiagram = (0..n).filter(|&i| mask & (1 << i) != 0).collect();
            if is_connected(gcm, &s) {
                connected.push(s);
            }
        }
        let m = connected.len();
        assert!(m <= 20, "brute force only for small diagrams");
        let mut count = 0usize;
        for mask in 0u32..(1 << m) {
            let family: Vec<&Subdiagram> = (0..m)
                .filter(|&i| mask & (1 << i) != 0)
                .map(|i| &connected[i])
                .collect();
            let pairwise = family
                .iter()
                .enumerate()
                .all(|(a, s)| family[a + 1..].iter().all(|t| compatible(gcm, s, t)));
            if !pairwise {
                continue;
            }
            // maximal: no further connected subdiagram is compatible with all
            let maximal = connected.iter().all(|extra| {
                family.iter().any(|s| **s == *extra)
                    || !family.iter().all(|s| compatible(gcm, s, extra))
            });
            if maximal {
                count += 1;
            }
        }
        count
    }
    for n in 2..=6usize {
        let gcm = Gcm::type_a(n - 1);
        let sets = enumerate_maximal_nested_sets(&gcm, &(0..n - 1).collect());
        let expect = catalan(n as u64 - 1) as usize;
        if sets.len() != expect {
            return Err(format!("A{}: {} maximal nested sets, expected {expect}", n - 1, sets.len()));
        }
        if brute_force_count(&gcm) != expect {
            return Err(format!("A{}: brute force disagrees", n - 1));
        }
        // round trip through type-A bracketings
        let mut seen = BTreeSet::new();
        for s in &sets {
            let br = nested_to_bracketing(&gcm, s).map_err(|e| e.to_string())?;
            let back = bracketing_to_nested(&gcm, &br).map_err(|e| e.to_string())?;
            if back.elements != s.elements {
                return Err(format!("A{}: bracketing round trip fails", n - 1));
            }
            seen.insert(format!("{br}"));
        }
        if seen.len() != expect {
            return Err(format!("A{}: bracketings not distinct", n - 1));
        }
    }
    Ok("Catalan counts match brute force for n <= 6; bijection round-trips".into())
}

// 11. equivariant braid relation residual below 1e−6
fn criterion_equivariant_braid() -> Result<String, String> {
    let qm = module(gcm_a2(), vec![1, 0], 6);
    let cm = classical_limit(&qm).map_err(|e| e.to_string())?;
    let alg = ClassicalAlgebra::build(datum(gcm_a2()), cm).map_err(|e| e.to_string())?;
    let x0 = to_complex_point(&fundamental_point(&alg.module.real));
    let hbar = Complex64::new(0.2, 0.0);
    let s1 = equivariant_generator(&alg, 0, &x0, hbar, 1e-10).map_err(|e| e.to_string())?;
    let s2 = equivariant_generator(&alg, 1, &x0, hbar, 1e-10).map_err(|e| e.to_string())?;
    let lhs = s1.matmul(&s2).matmul(&s1);
    let rhs = s2.matmul(&s1).matmul(&s2);
    let res = lhs.sub(&rhs).max_abs();
    if res > 1e-6 {
        return Err(format!("residual {res:.3e}"));
    }
    // sanity: the lift is nontrivial
    let dim = s1.rows;
    if s1.sub(&CMat::identity(dim)).max_abs() < 1e-3 {
        return Err("equivariant generator is trivially the identity".into());
    }
    let _ = abelian_cochain(&alg, &purify(&alg.rd, 0, &generator_loop(&alg.rd, 0, &x0).unwrap()), hbar);
    Ok(format!("braid residual {res:.3e} (tol 1e-6)"))
}

#[test]
fn acceptance() {
    let mut checks: Vec<(String, Result<String, String>)> = Vec::new();
    run(&mut checks, "1 exact braid relations", criterion_braid);
    run(&mut checks, "2 square calibration", criterion_calibration);
    run(&mut checks, "3 pure-braid factorization", criterion_pure_factorization);
    run(&mut checks, "4 rank-1 monodromy equality", criterion_rank1_monodromy);
    run(&mut checks, "5 rank-2 spectral equality", criterion_rank2_spectra);
    run(&mut checks, "6 flatness", criterion_flatness);
    run(&mut checks, "7 defining relations", criterion_defining_relations);
    run(&mut checks, "8 shapovalov dual bases", criterion_shapovalov);
    run(&mut checks, "9 tau = eps and coboundary", criterion_tau_and_coboundary);
    run(&mut checks, "10 nested sets", criterion_nested_sets);
    run(&mut checks, "11 equivariant braid relations", criterion_equivariant_braid);
    let mut failed = 0usize;
    for (name, result) in &checks {
        match result {
            Ok(msg) => println!("PASS  criterion {name}: {msg}"),
            Err(msg) => {
                println!("FAIL  criterion {name}: {msg}");
                failed += 1;
            }
        }
    }
    assert_eq!(failed, 0, "{failed} acceptance criteria failed");
}
