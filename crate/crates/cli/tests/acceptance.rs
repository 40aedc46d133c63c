//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

use std::collections::BTreeMap;
use std::time::Instant;

use llmo_baselines::{dinkelbach_ee, wmmse, DEFAULT_MAX_ITER, DEFAULT_TOL};
use llmo_cli::config::ExperimentConfig;
use llmo_cli::{execute, RunOptions};
use llmo_core::agents::stub::{LoopbackStub, StubReply};
use llmo_core::agents::{http_generate, HttpLlmAgentConfig};
use llmo_core::theory::{run_theory_suite, TheorySetup};
use llmo_core::token::NumericVocabulary;
use llmo_core::{state_space_size, tokenize_number, AgentFailure, TokenModel};
use llmo_wireless::fixtures::ifc_d2;
use llmo_wireless::{ifc_ee, ifc_se, ChannelMatrix, IfcModel};

const IFC_EE: &str = include_str!("../../../configs/ifc_ee_d2.toml");
const BC_PENALTY: &str = include_str!("../../../configs/bc_penalty.toml");

struct Line {
    id: u32,
    name: &'static str,
    passed: bool,
    detail: String,
}

fn line(id: u32, name: &'static str, result: Result<(bool, String), String>) -> Line {
    let (passed, detail) = result.unwrap_or_else(|e| (false, format!("error: {e}")));
    Line {
        id,
        name,
        passed,
        detail,
    }
}

fn theory() -> Vec<Line> {
    let names = [
        "transition block structure",
        "elitist converges, LIFO does not",
        "eigen-init gives constant rate q_max",
        "ensemble power law in L",
        "Monte Carlo matches propagation",
    ];
    let start = Instant::now();
    let report = match run_theory_suite(&TheorySetup::default()) {
        Ok(r) => r,
        Err(e) => {
            return (1..=5)
                .map(|id| line(id, names[id as usize - 1], Err(e.to_string())))
                .collect()
        }
    };
    let elapsed = start.elapsed().as_secs_f64();
    let mut grouped: BTreeMap<u32, (bool, Vec<String>)> = BTreeMap::new();
    for c in &report.criteria {
        let g = grouped.entry(c.id).or_insert((true, Vec::new()));
        g.0 &= c.passed;
        g.1.push(c.detail.clone());
    }
    let mut out: Vec<Line> = grouped
        .into_iter()
        .map(|(id, (passed, details))| line(id, names[id as usize - 1], Ok((passed, details.join("; ")))))
        .collect();
    out[0].detail.push_str(&format!("; suite wall time {elapsed:.1} s"));
    out
}

fn ifc_end_to_end() -> Result<(bool, String), String> {
    let config = ExperimentConfig::from_toml_str(IFC_EE).map_err(|e| e.to_string())?;
    // Exhaustive search over the 10x10 grid, straight from the reward formula.
    let model = IfcModel::new(
        &ifc_d2().map_err(|e| e.to_string())?,
        config.wireless.p_tx,
        config.wireless.p_fix,
    )
    .map_err(|e| e.to_string())?;
    let g = config.grid.as_ref().ok_or("config has no grid")?.levels;
    let mut optimum = f64::NEG_INFINITY;
    for i in 0..g {
        for j in 0..g {
            let x = [i as f64 / (g - 1) as f64, j as f64 / (g - 1) as f64];
            optimum = optimum.max(ifc_ee(&x, &model).map_err(|e| e.to_string())?);
        }
    }
    let outcome = execute(&config, RunOptions::default()).map_err(|e| e.to_string())?;
    let reference = outcome.references[0];
    let curves = outcome.curves();
    let by = |name: &str| {
        curves
            .iter()
            .find(|c| c.scheme.name() == name)
            .ok_or(format!("no {name} curve"))
    };
    let (elitist, lifo) = (by("llmo-elitist-L1")?, by("llmo-lifo-L1")?);
    let seeds = config.seeds.len();
    Ok((
        (reference - optimum).abs() < 1e-12 && elitist.held == seeds && lifo.held < seeds,
        format!(
            "grid optimum {optimum:.6}, T = {}: elitist holds it in {}/{seeds} seeds, LIFO in {}/{seeds}",
            config.iterations, elitist.held, lifo.held
        ),
    ))
}

fn oracles() -> Result<(bool, String), String> {
    let err = |e: &dyn std::fmt::Display| e.to_string();
    let e = std::f64::consts::E;
    let single = IfcModel::from_gains(1, vec![1.0], 10.0, 1.0).map_err(|x| err(&x))?;
    let x_star = (e - 1.0) / 10.0;
    let ee_at = ifc_ee(&[x_star], &single).map_err(|x| err(&x))?;
    let dink = dinkelbach_ee(&single, &[0.5], DEFAULT_MAX_ITER, 1e-12).map_err(|x| err(&x))?;
    let ok_dink =
        (ee_at - 1.0 / e).abs() < 1e-6 && (dink.ee - 1.0 / e).abs() < 1e-6 && (dink.x[0] - x_star).abs() < 1e-5;

    let w = wmmse(&(&single).into(), &[0.2], DEFAULT_MAX_ITER, DEFAULT_TOL).map_err(|x| err(&x))?;
    let ok_wmmse = w.x == [1.0];

    let diag = IfcModel::standard(&ChannelMatrix::diagonal(&[1.0, 1.0]).map_err(|x| err(&x))?).map_err(|x| err(&x))?;
    let se = ifc_se(&[1.0, 1.0], &diag).map_err(|x| err(&x))?;
    let ok_se = (se - 2.0 * 11f64.ln()).abs() <= 1e-12;

    let mut bc = ExperimentConfig::from_toml_str(BC_PENALTY).map_err(|x| err(&x))?;
    bc.baselines.clear();
    let outcome = execute(&bc, RunOptions::default()).map_err(|x| err(&x))?;
    let final_violation = outcome
        .curves()
        .iter()
        .map(|c| *c.mean_violation.last().unwrap_or(&f64::INFINITY))
        .fold(0.0, f64::max);
    let ok_bc = final_violation < 1e-2;

    Ok((
        ok_dink && ok_wmmse && ok_se && ok_bc,
        format!(
            "Dinkelbach EE {:.9} at x {:.6} (|EE(x*) - 1/e| {:.1e}); WMMSE x {:?}; diagonal SE - 2 ln 11 = {:.1e}; \
             BC penalty final mean violation {final_violation:.2e}",
            dink.ee,
            dink.x[0],
            (ee_at - 1.0 / e).abs(),
            w.x,
            se - 2.0 * 11f64.ln()
        ),
    ))
}

fn tokenizer() -> Result<(bool, String), String> {
    let tokens: Vec<String> = tokenize_number("-32.7914")
        .map_err(|e| e.to_string())?
        .iter()
        .map(ToString::to_string)
        .collect();
    let n_token = TokenModel::new(3).tokens_per_number();
    let vocab = NumericVocabulary.members().len();
    let size = state_space_size(5, 3, 3);
    let passed = tokens == ["-", "32", ".", "791", "4"]
        && n_token == 4
        && vocab == 1114
        && (size.log10_states - 182.8).abs() < 0.05;
    Ok((
        passed,
        format!(
            "{tokens:?}, N_token(3) = {n_token}, |T| = {vocab}, log10|S| = {:.3}",
            size.log10_states
        ),
    ))
}

fn plumbing() -> Result<(bool, String), String> {
    let mut config = ExperimentConfig::from_toml_str(IFC_EE).map_err(|e| e.to_string())?;
    config.seeds = vec![3, 17];
    config.iterations = 40;
    let runs: Vec<String> = (0..2)
        .map(|_| {
            let o = execute(&config, RunOptions::default()).map_err(|e| e.to_string())?;
            let traces: Vec<_> = o.jobs.iter().map(|j| &j.trace).collect();
            serde_json::to_string(&traces).map_err(|e| e.to_string())
        })
        .collect::<Result<_, _>>()?;
    let identical = runs[0] == runs[1];

    let http = |script: Vec<StubReply>, timeout_ms: u64| -> Result<_, String> {
        let stub = LoopbackStub::start(script).map_err(|e| e.to_string())?;
        let mut c = HttpLlmAgentConfig::new(stub.url(), "stub-model");
        c.backoff_ms = 1;
        c.timeout_ms = timeout_ms;
        c.max_retries = 2;
        Ok((http_generate(&c, "prompt"), stub.requests().len()))
    };
    let (ok, n_ok) = http(vec![StubReply::content("0.1,0.2")], 2_000)?;
    let success = matches!(&ok, Ok(r) if r.text == "0.1,0.2" && r.retries == 0) && n_ok == 1;
    let (retry, n_retry) = http(vec![StubReply::status(500), StubReply::content("1,2")], 2_000)?;
    let retried = matches!(&retry, Ok(r) if r.retries == 1) && n_retry == 2;
    let (slow, _) = http(vec![StubReply::content("1").delayed(1_000)], 100)?;
    let timed_out = matches!(slow, Err(AgentFailure::Transport { .. }));

    Ok((
        identical && success && retried && timed_out,
        format!(
            "{} bytes of trace JSON identical: {identical}; stub success {success}, retry {retried}, timeout {timed_out}",
            runs[0].len()
        ),
    ))
}

fn main() {
    let mut lines = theory();
    lines.push(line(
        6,
        "elitist finds and holds the IFC-EE grid optimum",
        ifc_end_to_end(),
    ));
    lines.push(line(7, "analytic reward and baseline oracles", oracles()));
    lines.push(line(8, "numeric tokenizer model", tokenizer()));
    lines.push(line(9, "deterministic traces and HTTP agent plumbing", plumbing()));
    let mut failed = 0;
    for l in &lines {
        println!(
            "criterion {}: {} ... {} ({})",
            l.id,
            l.name,
            if l.passed { "PASS" } else { "FAIL" },
            l.detail
        );
        failed += usize::from(!l.passed);
    }
    println!("acceptance: {} passed, {failed} failed", lines.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
