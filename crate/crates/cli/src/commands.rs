use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde_json::{json, Value};

use fliplab_core::bigzono::{
    build_collection, build_t_small, certify, ensemble_core, flip_closure_audit, parse_certificate, sample_g,
    search_certificate, verify_certificate, Certificate, GAssignment, RangeMode, XPoint, ZonoError, DEFAULT_GUARD, PRNG_ID,
};
use fliplab_core::config::Configuration;
use fliplab_core::prodsimp::{
    blocks, build_ensemble_collections, build_instance, build_t_product, certify_blocks, check_ensemble2, collections_from,
    extend_to_a, membership_sc, requirements, sector_blocks, Epsilons, ProdError,
};
use fliplab_core::regular::generic_triangulation;
use fliplab_core::triangulation::{flip_graph, Triangulation};

use crate::acceptance::{run_criterion, run_suite, Suite};
use crate::manifest::Recorder;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;
pub const EXIT_RETRIES: i32 = 4;

/// A failure carrying its exit code.
#[derive(Debug)]
pub struct CmdError {
    pub code: i32,
    pub message: String,
}

impl CmdError {
    pub fn usage(message: impl Into<String>) -> Self {
        CmdError { code: EXIT_USAGE, message: message.into() }
    }
}

impl From<anyhow::Error> for CmdError {
    fn from(e: anyhow::Error) -> Self {
        CmdError::usage(format!("{e:#}"))
    }
}

pub type CmdResult = Result<i32, CmdError>;

fn check_code(passed: bool) -> i32 {
    if passed {
        EXIT_OK
    } else {
        EXIT_CHECK_FAILED
    }
}

fn read_json(rec: &mut Recorder, path: &Path) -> Result<Value, CmdError> {
    let bytes = rec.read(path)?;
    serde_json::from_slice(&bytes).map_err(|e| CmdError::usage(format!("{}: {e}", path.display())))
}

fn read_config(rec: &mut Recorder, path: &Path) -> Result<Arc<Configuration>, CmdError> {
    let bytes = rec.read(path)?;
    let text = String::from_utf8(bytes).map_err(|e| CmdError::usage(format!("{}: {e}", path.display())))?;
    Configuration::from_json_str(&text)
        .map(Arc::new)
        .map_err(|e| CmdError::usage(format!("{}: {e}", path.display())))
}

fn print_json(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json"));
}

pub fn flipgraph(config: &Path, seed: u64, budget: usize, out: &Path) -> CmdResult {
    let mut rec = Recorder::new("flipgraph");
    rec.prng("regular-heights", seed);
    let cfg = read_config(&mut rec, config)?;
    let start = generic_triangulation(cfg, seed).map_err(|e| CmdError { code: EXIT_CHECK_FAILED, message: e.to_string() })?;
    let g = flip_graph(&start, budget);
    rec.write_json(&out.join("flipgraph.json"), &g.to_json())?;
    rec.write(&out.join("flipgraph.dot"), g.to_dot().as_bytes())?;
    let code = if g.complete { EXIT_OK } else { EXIT_BUDGET };
    rec.finish(Some(out), code)?;
    print_json(&json!({"nodes": g.nodes.len(), "edges": g.edges.len(), "complete": g.complete}));
    Ok(code)
}

fn certificate_summary(cert: &Certificate) -> Value {
    json!({
        "N": cert.g.n(),
        "seed": cert.g.seed(),
        "collection_size": cert.collection.len(),
        "A": {"passed": cert.a.passed, "failures": cert.a.failure_count, "first": cert.a.failures.iter().take(10).collect::<Vec<_>>()},
        "B": {"passed": cert.b.passed, "failures": cert.b.failure_count},
        "ensemble_full": {"passed": cert.ensemble_full.passed, "failures": cert.ensemble_full.failure_count},
        "ensemble_positive": {"passed": cert.ensemble_positive.passed, "failures": cert.ensemble_positive.failure_count},
        "passed": cert.passed(),
    })
}

pub struct CertifyArgs {
    pub n: u32,
    pub seed: Option<u64>,
    pub identity: bool,
    pub retry: Option<u64>,
    pub out: PathBuf,
}

pub fn certify_zono(a: &CertifyArgs) -> CmdResult {
    if a.n == 0 {
        return Err(CmdError::usage("N must be at least 1"));
    }
    let mut rec = Recorder::new("certify-zono");
    let (cert, code) = if a.identity {
        let cert = certify(&GAssignment::identity(a.n));
        let code = check_code(cert.passed());
        (cert, code)
    } else {
        let seed = a.seed.ok_or_else(|| CmdError::usage("--seed or --identity is required"))?;
        match a.retry {
            Some(retries) => match search_certificate(a.n, seed, retries) {
                (Some(cert), _) => (cert, EXIT_OK),
                (None, tried) => {
                    eprintln!("no passing seed in {tried} attempts from {seed}");
                    return Ok(EXIT_RETRIES);
                }
            },
            None => {
                let cert = certify(&sample_g(seed, a.n));
                let code = check_code(cert.passed());
                (cert, code)
            }
        }
    };
    if let Some(s) = cert.g.seed() {
        rec.prng(PRNG_ID, s);
    }
    rec.write_json(&a.out, &cert.to_json())?;
    rec.finish(a.out.parent(), code)?;
    print_json(&certificate_summary(&cert));
    Ok(code)
}

fn schema_error(e: ZonoError) -> CmdError {
    match e {
        ZonoError::Schema(_) => CmdError::usage(e.to_string()),
        other => CmdError { code: EXIT_CHECK_FAILED, message: other.to_string() },
    }
}

fn verify_one(v: &Value) -> Result<(bool, Value), CmdError> {
    let report = verify_certificate(v).map_err(schema_error)?;
    let stored = &v["checks"];
    let failing: Vec<&str> = ["A", "B"]
        .into_iter()
        .filter(|k| stored[*k]["passed"] != json!(true))
        .chain((stored["ensemble"]["full"]["passed"] != json!(true)).then_some("ensemble.full"))
        .collect();
    Ok((report.passed, json!({"report": report, "stored_failing_checks": failing})))
}

/// Re-runs every check from stored bits: a certificate, or an ensemble file
/// whose entries point at certificate files (relative to the ensemble file).
pub fn verify(path: &Path, out: Option<&Path>) -> CmdResult {
    let mut rec = Recorder::new("verify");
    let v = read_json(&mut rec, path)?;
    let (passed, detail) = if let Some(entries) = v.get("collections") {
        let entries = entries.as_array().ok_or_else(|| CmdError::usage("\"collections\" is not an array"))?;
        let n = v.get("N").and_then(Value::as_u64).ok_or_else(|| CmdError::usage("missing \"N\""))? as u32;
        if entries.len() != blocks().len() {
            return Err(CmdError::usage(format!("{} collections, expected {}", entries.len(), blocks().len())));
        }
        let dir = path.parent().unwrap_or(Path::new("."));
        let mut certs = Vec::new();
        let mut reports = Vec::new();
        let mut all_ok = true;
        for e in entries {
            let file = e.get("certificate").and_then(Value::as_str).ok_or_else(|| CmdError::usage("entry lacks \"certificate\""))?;
            let cv = read_json(&mut rec, &dir.join(file))?;
            let (ok, detail) = verify_one(&cv)?;
            all_ok &= ok;
            reports.push(json!({"certificate": file, "passed": ok, "detail": detail}));
            let g = parse_certificate(&cv).map_err(schema_error)?;
            certs.push(certify(&g));
        }
        let ensemble = if all_ok {
            build_ensemble_collections(&build_instance(n), &certs).map(|c| check_ensemble2(&c)).map_err(|e| e.to_string())
        } else {
            Err("some certificate fails".into())
        };
        let ok = all_ok && ensemble.as_ref().is_ok_and(|r| r.passed);
        (ok, json!({"certificates": reports, "ensemble2": ensemble.as_ref().ok(), "error": ensemble.as_ref().err()}))
    } else {
        verify_one(&v)?
    };
    let code = check_code(passed);
    if let Some(dir) = out {
        rec.write_json(&dir.join("verify_report.json"), &detail)?;
        rec.finish(Some(dir), code)?;
    }
    print_json(&json!({"passed": passed, "detail": detail}));
    Ok(code)
}

pub fn acceptance(suite: Suite, only: &[u8], out: Option<&Path>) -> CmdResult {
    let mut rec = Recorder::new("acceptance");
    let print = |o: &crate::acceptance::Outcome| println!("{}", o.line());
    let outcomes = if only.is_empty() {
        run_suite(suite, print)
    } else {
        if let Some(bad) = only.iter().find(|&&k| !(1..=10).contains(&k)) {
            return Err(CmdError::usage(format!("no criterion {bad}")));
        }
        only.iter()
            .map(|&k| {
                let o = run_criterion(k);
                print(&o);
                o
            })
            .collect()
    };
    for o in outcomes.iter().filter(|o| o.known_cause.is_some()) {
        println!("  criterion {}: {}", o.id, o.known_cause.as_deref().unwrap_or_default());
    }
    let passed = outcomes.iter().all(|o| o.status.is_pass());
    let code = check_code(passed);
    if let Some(dir) = out {
        rec.write_json(&dir.join("acceptance.json"), &json!(outcomes))?;
        rec.finish(Some(dir), code)?;
    }
    Ok(code)
}

pub fn build_instance_cmd(n: u32, out: &Path) -> CmdResult {
    if n == 0 {
        return Err(CmdError::usage("N must be at least 1"));
    }
    let mut rec = Recorder::new("build-instance");
    rec.write_json(out, &build_instance(n).to_json())?;
    rec.finish(out.parent(), EXIT_OK)?;
    Ok(EXIT_OK)
}

fn prod_error(e: ProdError) -> CmdError {
    let code = match e {
        ProdError::CertificateInvalid(_) => EXIT_RETRIES,
        _ => EXIT_CHECK_FAILED,
    };
    CmdError { code, message: e.to_string() }
}

/// One certificate per block (block k searching from `seed + 1000·k`), the
/// ensemble file pointing at them, and the ensemble check.
pub fn check_ensemble2_cmd(n: u32, seed: u64, retries: u64, out: &Path) -> CmdResult {
    if n == 0 || retries == 0 || retries > 1000 {
        return Err(CmdError::usage("need N ≥ 1 and 1 ≤ --retry ≤ 1000"));
    }
    let mut rec = Recorder::new("check-ensemble2");
    rec.prng(PRNG_ID, seed);
    let certs = certify_blocks(n, seed, retries).map_err(prod_error)?;
    let mut files = Vec::new();
    for (b, c) in blocks().iter().zip(&certs) {
        let name = format!("certificates/{}.json", b.name());
        rec.write_json(&out.join(&name), &c.to_json())?;
        files.push(name);
    }
    let colls = build_ensemble_collections(&build_instance(n), &certs).map_err(prod_error)?;
    let report = check_ensemble2(&colls);
    rec.write_json(&out.join("ensemble.json"), &colls.to_json(&files))?;
    rec.write_json(&out.join("ensemble2_report.json"), &json!(report))?;
    let code = check_code(report.passed);
    rec.finish(Some(out), code)?;
    print_json(&json!({
        "blocks": report.blocks, "members_checked": report.members_checked,
        "property1": report.property1.failure_count, "property2": report.property2.failure_count,
        "property3": report.property3.failure_count, "passed": report.passed,
    }));
    Ok(code)
}

/// Sector triangulation at one copy per block, from per-block seeds.
pub fn build_t(i: u8, j: u8, seed: u64, prime_seed: u64, out: &Path) -> CmdResult {
    if !(1..=5).contains(&i) || !(1..=5).contains(&j) || i == j {
        return Err(CmdError::usage("need distinct rows 1 ≤ i, j ≤ 5"));
    }
    let mut rec = Recorder::new("build-T");
    rec.prng(PRNG_ID, seed);
    let inst = build_instance(1);
    let all = blocks();
    let seed_of = |k: usize| seed.wrapping_add(1000 * k as u64);
    let colls = collections_from(1, (0..all.len()).map(|k| (build_collection(&sample_g(seed_of(k), 1)), Some(seed_of(k)))));
    let mut tilde = Vec::new();
    for b in sector_blocks(i, j) {
        let k = all.iter().position(|x| *x == b).expect("sector block");
        let small = build_t_small(&sample_g(seed_of(k), 1), DEFAULT_GUARD).map_err(schema_error)?;
        tilde.push(small.triangulation);
    }
    let Ok(tilde) = <[Triangulation; 3]>::try_from(tilde) else { unreachable!("three sector blocks") };
    let eps = Epsilons::new(prime_seed);
    let sector = build_t_product(&inst, i, j, &tilde, &colls, &eps).map_err(prod_error)?;
    let req = requirements(&inst, &colls, &sector.columns);
    let membership = membership_sc(&sector.triangulation, &req);
    let t = &sector.triangulation;
    rec.write(&out.join("triangulation.jsonl"), t.to_jsonl(json!({"sector": [i, j], "N": 1})).as_bytes())?;
    rec.write_json(&out.join("config.json"), &t.config().to_json())?;
    rec.write_json(&out.join("epsilons.json"), &eps.to_json())?;
    let passed = sector.passed() && membership.passed;
    rec.write_json(&out.join("report.json"), &json!({"sector": sector.stats, "membership": membership, "passed": passed}))?;
    let code = check_code(passed);
    rec.finish(Some(out), code)?;
    print_json(&json!({"simplices": t.len(), "stats": sector.stats, "membership": membership.passed}));
    Ok(code)
}

pub fn extend(config: &Path, triangulation: &Path, prime_seed: u64, out: &Path) -> CmdResult {
    let mut rec = Recorder::new("extend");
    rec.prng("prime-shuffle", prime_seed);
    let cfg = read_config(&mut rec, config)?;
    let text = String::from_utf8(rec.read(triangulation)?).map_err(|e| CmdError::usage(e.to_string()))?;
    let t = Triangulation::from_jsonl(cfg, &text).map_err(|e| CmdError::usage(e.to_string()))?;
    let ext = extend_to_a(&t, prime_seed).map_err(prod_error)?;
    rec.write(&out.join("extended.jsonl"), ext.to_jsonl(json!({"product": [ext.config().m(), ext.config().n_cols()]})).as_bytes())?;
    rec.write_json(&out.join("extended_config.json"), &ext.config().to_json())?;
    rec.finish(Some(out), EXIT_OK)?;
    print_json(&json!({"simplices": ext.len()}));
    Ok(EXIT_OK)
}

/// Flip-closure audit of a certificate's bits, directly when N is within the
/// materialization guard and otherwise on the window of width `window`
/// around the cell at `x`.
pub fn audit(certificate: &Path, x: [i64; 4], window: u32, full_collection: bool, out: &Path) -> CmdResult {
    let mut rec = Recorder::new("audit");
    let v = read_json(&mut rec, certificate)?;
    let g = parse_certificate(&v).map_err(schema_error)?;
    let local = if g.n() <= DEFAULT_GUARD {
        g
    } else {
        g.window(&XPoint::new(x), window.min(DEFAULT_GUARD))
            .ok_or_else(|| CmdError::usage("window leaves the copies of the certificate"))?
    };
    let build = build_t_small(&local, DEFAULT_GUARD).map_err(schema_error)?;
    let c = if full_collection { build.collection.clone() } else { ensemble_core(&build.collection, RangeMode::Full) };
    let report = flip_closure_audit(&build.instance, &build.triangulation, &c);
    let detail = json!({"n": local.n(), "simplices": build.triangulation.len(), "collection": if full_collection { "full" } else { "core" }, "audit": report});
    rec.write_json(&out.join("audit.json"), &detail)?;
    let code = check_code(report.passed);
    rec.finish(Some(out), code)?;
    print_json(&detail);
    Ok(code)
}
