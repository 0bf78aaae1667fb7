//! Batch experiment runner: reads a JSON config naming one command, runs the
//! corresponding library operation, prints a human-readable table and writes
//! a JSON report. Exit status 0 iff every assertion in the run passed.

use clap::Parser;
use num_complex::Complex64;
use qweyl_core::cartan::{
    enumerate_maximal_nested_sets, nested_to_bracketing, Gcm, PureBraidWord, PureLetter,
    Realization, RootDatum,
};
use qweyl_core::casimir::{
    casimir_connection, compare_spectra, eigenvalues, flatness_check, fundamental_point,
    parallel_transport_with_stats, pure_loop, to_complex_point, ClassicalAlgebra,
};
use qweyl_core::cato::{classical_limit, irreducible, shapovalov_dual, verma, Hw, WeightModule};
use qweyl_core::linalg::{Mat, PolyL};
use qweyl_core::qalgebra::{defining_relation_defects, evaluate, zero_on_reliable_blocks};
use qweyl_core::qweyl::{
    braid_relation_check, invert_block_op, pure_braid_action, q_weyl_word, spectral_q_power,
    square_factorization,
};
use qweyl_core::scalars::{Rat, ScalarQ};
use serde::Deserialize;
use serde_json::{json, Value};
use std::path::PathBuf;
use std::process::ExitCode;

const SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(name = "qweyl", about = "exact quantum Weyl group and Casimir monodromy experiments")]
struct Args {
    /// experiment config (JSON)
    #[arg(long)]
    config: PathBuf,
    /// directory for the JSON report (written as report.json)
    #[arg(long)]
    out: Option<PathBuf>,
    /// numerical tolerance override
    #[arg(long)]
    tol: Option<f64>,
    /// ħ value override, repeatable; "0.2" or "0.3+0.2i"
    #[arg(long)]
    hbar: Vec<String>,
    /// seed override for randomized suites
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Deserialize, Clone)]
#[serde(deny_unknown_fields)]
struct ExperimentConfig {
    command: String,
    #[serde(rename = "type")]
    kind: String,
    #[serde(default)]
    highest_weight: Vec<i64>,
    #[serde(default)]
    cutoff: Option<i64>,
    #[serde(default)]
    hbar: Vec<[f64; 2]>,
    #[serde(default)]
    tol: Option<f64>,
    #[serde(default)]
    seed: Option<u64>,
}

fn parse_hbar(s: &str) -> Result<[f64; 2], String> {
    let s = s.trim();
    if let Some(rest) = s.strip_suffix('i') {
        // forms like "0.3+0.2i" / "0.3-0.2i"
        for (k, c) in rest.char_indices().skip(1) {
            if c == '+' || c == '-' {
                let re: f64 = rest[..k].parse().map_err(|e| format!("{e}"))?;
                let im: f64 = rest[k..].parse().map_err(|e| format!("{e}"))?;
                return Ok([re, im]);
            }
        }
        let im: f64 = rest.parse().map_err(|e| format!("{e}"))?;
        return Ok([0.0, im]);
    }
    let re: f64 = s.parse().map_err(|e| format!("{e}"))?;
    Ok([re, 0.0])
}

fn gcm_from_tag(tag: &str) -> Result<Gcm, String> {
    match tag {
        "A1" => Ok(qweyl_core::cartan::gcm_a1()),
        "A1xA1" => Ok(qweyl_core::cartan::gcm_a1xa1()),
        "A2" => Ok(qweyl_core::cartan::gcm_a2()),
        "B2" => Ok(qweyl_core::cartan::gcm_b2()),
        "G2" => Ok(qweyl_core::cartan::gcm_g2()),
        _ => {
            if let Some(n) = tag.strip_prefix('A').and_then(|r| r.parse::<usize>().ok()) {
                if n >= 1 {
                    return Ok(Gcm::type_a(n));
                }
            }
            Err(format!("unknown type tag {tag:?}"))
        }
    }
}

fn rat(n: i64) -> Rat {
    Rat::from_integer(n.into())
}

fn cx(h: [f64; 2]) -> Complex64 {
    Complex64::new(h[0], h[1])
}

fn cx_json(c: Complex64) -> Value {
    json!([c.re, c.im])
}

struct Experiment {
    cfg: ExperimentConfig,
    tol: f64,
    hbars: Vec<[f64; 2]>,
    seed: u64,
}

impl Experiment {
    fn gcm(&self) -> Result<Gcm, String> {
        gcm_from_tag(&self.cfg.kind)
    }

    fn cutoff(&self) -> i64 {
        self.cfg.cutoff.unwrap_or(6)
    }

    fn module(&self) -> Result<WeightModule<ScalarQ>, String> {
        let gcm = self.gcm()?;
        if self.cfg.highest_weight.len() != gcm.n {
            return Err(format!(
                "highest_weight needs {} entries, got {}",
                gcm.n,
                self.cfg.highest_weight.len()
            ));
        }
        let real = Realization::new(gcm);
        irreducible(
            &real,
            self.cfg.highest_weight.iter().map(|&x| rat(x)).collect(),
            self.cutoff(),
        )
        .map_err(|e| e.to_string())
    }

    fn datum(&self) -> Result<RootDatum, String> {
        RootDatum::new(Realization::new(self.gcm()?), None).map_err(|e| e.to_string())
    }

    fn algebra(&self) -> Result<ClassicalAlgebra, String> {
        let cm = classical_limit(&self.module()?).map_err(|e| e.to_string())?;
        ClassicalAlgebra::build(self.datum()?, cm).map_err(|e| e.to_string())
    }
}

fn run_command(exp: &Experiment) -> Result<(Value, bool), String> {
    match exp.cfg.command.as_str() {
        "check-relations" => check_relations(exp),
        "braid-check" => braid_check(exp),
        "square-factorization" => square_factorization_cmd(exp),
        "pure-factorization" => pure_factorization(exp),
        "flatness" => flatness(exp),
        "monodromy" => monodromy(exp),
        "compare" => compare(exp),
        "nested-sets" => nested_sets(exp),
        "shapovalov" => shapovalov(exp),
        other => Err(format!("unknown command {other:?}")),
    }
}

fn check_relations(exp: &Experiment) -> Result<(Value, bool), String> {
    let gcm = exp.gcm()?;
    let real = Realization::new(gcm.clone());
    let m: WeightModule<PolyL> =
        verma(&real, Hw::Symbolic, exp.cutoff()).map_err(|e| e.to_string())?;
    let mut rows = Vec::new();
    let mut pass = true;
    for (name, defect) in defining_relation_defects(&gcm) {
        let op = evaluate(&defect, &m).map_err(|e| e.to_string())?;
        let ok = zero_on_reliable_blocks(&op, &m, defect.max_descent());
        pass &= ok;
        println!("  relation {name:<12} {}", if ok { "zero" } else { "NONZERO" });
        rows.push(json!({"relation": name, "zero": ok}));
    }
    Ok((json!({"relations": rows}), pass))
}

fn braid_check(exp: &Experiment) -> Result<(Value, bool), String> {
    let m = exp.module()?;
    let gcm = m.gcm().clone();
    let mut rows = Vec::new();
    let mut pass = true;
    for i in 0..gcm.n {
        for j in (i + 1)..gcm.n {
            let Some(mij) = gcm.coxeter_m(i, j) else {
                continue;
            };
            let ok = braid_relation_check(&m, i, j).map_err(|e| e.to_string())?;
            pass &= ok;
            println!(
                "  nodes ({}, {})  m = {}  {}",
                i + 1,
                j + 1,
                mij,
                if ok { "exact" } else { "FAILS" }
            );
            rows.push(json!({"i": i + 1, "j": j + 1, "m": mij, "exact": ok}));
        }
    }
    Ok((json!({"pairs": rows}), pass))
}

fn square_factorization_cmd(exp: &Experiment) -> Result<(Value, bool), String> {
    let m = exp.module()?;
    let n = m.gcm().n;
    let mut rows = Vec::new();
    for i in 0..n {
        let f = square_factorization(&m, i).map_err(|e| e.to_string())?;
        println!("  node {}: S² = sign · q^(c·k) with c = {}", i + 1, f.c);
        let signs: Vec<i64> = m
            .blocks
            .iter()
            .enumerate()
            .filter(|(_, b)| b.dim > 0)
            .map(|(b, _)| i64::from(f.sign[b]))
            .collect();
        rows.push(json!({"node": i + 1, "c": f.c.to_string(), "signs": signs}));
    }
    Ok((json!({"nodes": rows}), true))
}

fn pure_factorization(exp: &Experiment) -> Result<(Value, bool), String> {
    let m = exp.module()?;
    let rd = exp.datum()?;
    let mut rows = Vec::new();
    let mut pass = true;
    for root in &rd.roots {
        let (w, i) = root.witness.clone();
        let p = PureBraidWord::generator(w.clone(), i);
        let rep = pure_braid_action(&m, &rd, &p).map_err(|e| e.to_string())?;
        let sw = q_weyl_word(&m, &w).map_err(|e| e.to_string())?;
        let sw_inv = invert_block_op(&sw).map_err(|e| e.to_string())?;
        let qk = spectral_q_power(&m, i, &rat(1)).map_err(|e| e.to_string())?;
        let ok = rep.lambda_d == sw.compose(&qk).compose(&sw_inv);
        pass &= ok;
        println!(
            "  root {:?}: lambda^D = S_w q^k S_w⁻¹  {}",
            root.coords,
            if ok { "exact" } else { "FAILS" }
        );
        rows.push(json!({"root": root.coords, "exact": ok}));
    }
    Ok((json!({"roots": rows}), pass))
}

fn flatness(exp: &Experiment) -> Result<(Value, bool), String> {
    let alg = exp.algebra()?;
    let reports = flatness_check(&alg);
    let mut rows = Vec::new();
    let mut pass = true;
    for rep in &reports {
        pass &= rep.exact_zero;
        let roots: Vec<Vec<i64>> = rep
            .members
            .iter()
            .map(|&k| alg.roots[k].coords.clone())
            .collect();
        println!(
            "  plane {roots:?}: residue commutators {}",
            if rep.exact_zero { "vanish exactly" } else { "NONZERO" }
        );
        rows.push(json!({
            "roots": roots,
            "exact_zero": rep.exact_zero,
            "max_residual": rep.max_residual,
        }));
    }
    Ok((json!({"planes": rows}), pass))
}

fn monodromy(exp: &Experiment) -> Result<(Value, bool), String> {
    let alg = exp.algebra()?;
    let x0 = to_complex_point(&fundamental_point(&alg.module.real));
    let dims: Vec<usize> = alg.module.blocks.iter().map(|b| b.dim).collect();
    let mut rows = Vec::new();
    for root in alg.rd.roots.clone() {
        let (w, i) = root.witness.clone();
        let letter = PureLetter { w, i, e: 1 };
        let ploop = pure_loop(&alg.rd, &letter, &x0).map_err(|e| e.to_string())?;
        for &h in &exp.hbars {
            let conn = casimir_connection(&alg, cx(h), false);
            let (pt, stats) = parallel_transport_with_stats(&conn, &ploop, exp.tol)
                .map_err(|e| e.to_string())?;
            let mut blocks = Vec::new();
            for (b, m) in pt.iter().enumerate() {
                let Some(m) = m else { continue };
                let eigs: Vec<Value> = {
                    let mut e = eigenvalues(m);
                    e.sort_by(|a, b| (a.re, a.im).partial_cmp(&(b.re, b.im)).unwrap());
                    e.into_iter().map(cx_json).collect()
                };
                blocks.push(json!({"block": b, "eigenvalues": eigs}));
            }
            println!(
                "  p_{:?}  hbar = {:?}  clearance {:.3e}  steps {}+{}",
                root.coords, h, ploop.clearance, stats.accepted, stats.rejected
            );
            rows.push(json!({
                "root": root.coords,
                "hbar": h,
                "clearance": ploop.clearance,
                "steps_accepted": stats.accepted,
                "steps_rejected": stats.rejected,
                "blocks": blocks,
            }));
        }
    }
    let _ = dims;
    Ok((json!({"loops": rows}), true))
}

fn compare(exp: &Experiment) -> Result<(Value, bool), String> {
    let qm = exp.module()?;
    let rd = exp.datum()?;
    let alg = exp.algebra()?;
    let x0 = to_complex_point(&fundamental_point(&alg.module.real));
    let dims: Vec<usize> = alg.module.blocks.iter().map(|b| b.dim).collect();
    let mut rows = Vec::new();
    let mut pass = true;
    for root in rd.roots.clone() {
        let (w, i) = root.witness.clone();
        let letter = PureLetter { w, i, e: 1 };
        let p = PureBraidWord::new(vec![letter.clone()]);
        let rep = pure_braid_action(&qm, &rd, &p).map_err(|e| e.to_string())?;
        let ploop = pure_loop(&alg.rd, &letter, &x0).map_err(|e| e.to_string())?;
        for &h in &exp.hbars {
            let conn = casimir_connection(&alg, cx(h), false);
            let pt = parallel_transport_with_stats(&conn, &ploop, exp.tol.min(1e-10))
                .map_err(|e| e.to_string())?
                .0;
            let report = compare_spectra(&pt, &rep.lambda_prime, &dims, cx(h))
                .map_err(|e| e.to_string())?;
            let ok = report.max_mismatch <= exp.tol;
            pass &= ok;
            println!(
                "  p_{:?}  hbar = {:?}  max spectral mismatch {:.3e}  {}",
                root.coords,
                h,
                report.max_mismatch,
                if ok { "ok" } else { "EXCEEDS TOL" }
            );
            rows.push(json!({
                "root": root.coords,
                "hbar": h,
                "max_mismatch": report.max_mismatch,
                "pass": ok,
            }));
        }
    }
    Ok((json!({"comparisons": rows}), pass))
}

fn nested_sets(exp: &Experiment) -> Result<(Value, bool), String> {
    let gcm = exp.gcm()?;
    let all: std::collections::BTreeSet<usize> = (0..gcm.n).collect();
    let sets = enumerate_maximal_nested_sets(&gcm, &all);
    let mut brackets = Vec::new();
    for s in &sets {
        if let Ok(b) = nested_to_bracketing(&gcm, s) {
            brackets.push(format!("{b}"));
        }
    }
    brackets.sort();
    println!("  {} maximal nested sets", sets.len());
    for b in &brackets {
        println!("    {b}");
    }
    Ok((json!({"count": sets.len(), "bracketings": brackets}), true))
}

fn shapovalov(exp: &Experiment) -> Result<(Value, bool), String> {
    let gcm = exp.gcm()?;
    let real = Realization::new(gcm);
    let m: WeightModule<PolyL> =
        verma(&real, Hw::Symbolic, exp.cutoff()).map_err(|e| e.to_string())?;
    let mut rows = Vec::new();
    let mut pass = true;
    for blk in &m.blocks {
        if blk.dim == 0 || blk.height() == 0 || blk.height() > exp.cutoff() {
            continue;
        }
        let dual = shapovalov_dual(&m, &blk.beta).map_err(|e| e.to_string())?;
        let ok = dual.gram.matmul(&dual.adjugate) == Mat::identity(blk.dim).scale(&dual.det);
        pass &= ok;
        println!(
            "  depth {:?}  dim {}  det = {}  dual identity {}",
            blk.beta,
            blk.dim,
            dual.det,
            if ok { "exact" } else { "FAILS" }
        );
        rows.push(json!({
            "beta": blk.beta,
            "dim": blk.dim,
            "det": dual.det.to_string(),
            "dual_identity": ok,
        }));
    }
    Ok((json!({"depths": rows}), pass))
}

fn main() -> ExitCode {
    let args = Args::parse();
    let text = match std::fs::read_to_string(&args.config) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", args.config.display());
            return ExitCode::FAILURE;
        }
    };
    let cfg: ExperimentConfig = match serde_json::from_str(&text) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: invalid config: {e}");
            return ExitCode::FAILURE;
        }
    };
    let mut hbars: Vec<[f64; 2]> = cfg.hbar.clone();
    for h in &args.hbar {
        match parse_hbar(h) {
            Ok(v) => hbars.push(v),
            Err(e) => {
                eprintln!("error: bad --hbar {h:?}: {e}");
                return ExitCode::FAILURE;
            }
        }
    }
    if hbars.is_empty() {
        hbars.push([0.2, 0.0]);
    }
    let exp = Experiment {
        tol: args.tol.or(cfg.tol).unwrap_or(1e-8),
        seed: args.seed.or(cfg.seed).unwrap_or(0),
        hbars,
        cfg,
    };
    println!(
        "command {}  type {}  hw {:?}  cutoff {}",
        exp.cfg.command,
        exp.cfg.kind,
        exp.cfg.highest_weight,
        exp.cutoff()
    );
    let _ = exp.seed;
    let (results, pass) = match run_command(&exp) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::FAILURE;
        }
    };
    println!("result: {}", if pass { "PASS" } else { "FAIL" });
    let report = json!({
        "schema_version": SCHEMA_VERSION,
        "command": exp.cfg.command,
        "type": exp.cfg.kind,
        "highest_weight": exp.cfg.highest_weight,
        "cutoff": exp.cutoff(),
        "hbar": exp.hbars,
        "tol": exp.tol,
        "pass": pass,
        "results": results,
    });
    if let Some(out) = &args.out {
        if let Err(e) = std::fs::create_dir_all(out) {
            eprintln!("error: cannot create {}: {e}", out.display());
            return ExitCode::FAILURE;
        }
        let path = out.join("report.json");
        let mut body = serde_json::to_string_pretty(&report).unwrap();
        body.push('\n');
        if let Err(e) = std::fs::write(&path, body) {
            eprintln!("error: cannot write {}: {e}", path.display());
            return ExitCode::FAILURE;
        }
    }
    if pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
