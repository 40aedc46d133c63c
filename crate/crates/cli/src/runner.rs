//! Runs every scheme over all seeds and fixtures, then writes the artifacts.

use std::fmt::Write as _;
use std::path::Path;
use std::time::Instant;

use llmo_baselines::{brute_force, run_bo, run_ga, BoConfig, GaConfig};
use llmo_core::agents::{HttpLlmAgent, LocalSearchPolicy, RandomAgent, SyntheticAgent};
use llmo_core::stats::fit_semilog;
use llmo_core::{run_llmo, Agent, Ensemble, ExperimentTrace, LlmoConfig, PromptTemplate, SamplerKind};
use rayon::prelude::*;
use serde::Serialize;

use crate::config::{AgentSpec, BaselineKind, ExperimentConfig};
use crate::output::{hashed_csv, read_hash, write_atomic};
use crate::scenario::{build_instances, Instance};
use crate::CliError;

#[derive(Clone, Copy, Debug, Default)]
pub struct RunOptions {
    pub allow_network: bool,
    pub dump_populations: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case", tag = "scheme")]
pub enum Scheme {
    Llmo { sampler: SamplerKind, agents: usize },
    Baseline { kind: BaselineKind },
}

impl Scheme {
    pub fn name(&self) -> String {
        match self {
            Scheme::Llmo { sampler, agents } => {
                let s = match sampler {
                    SamplerKind::Elitist => "elitist",
                    SamplerKind::Lifo => "lifo",
                };
                format!("llmo-{s}-L{agents}")
            }
            Scheme::Baseline { kind } => kind.name().to_string(),
        }
    }

    fn columns(&self) -> (String, String, usize) {
        match self {
            Scheme::Llmo { sampler, agents } => ("llmo".into(), format!("{sampler:?}").to_lowercase(), *agents),
            Scheme::Baseline { kind } => (kind.name().into(), String::new(), 0),
        }
    }
}

pub fn schemes(config: &ExperimentConfig) -> Vec<Scheme> {
    let mut out = Vec::new();
    for &sampler in &config.samplers {
        for agents in config.ensemble_sizes() {
            out.push(Scheme::Llmo { sampler, agents });
        }
    }
    out.extend(config.baselines.iter().map(|&kind| Scheme::Baseline { kind }));
    out
}

/// Seed of the run for config seed `seed` on fixture `fixture`.
pub fn job_seed(seed: u64, fixture: usize) -> u64 {
    seed.wrapping_add((fixture as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

#[derive(Clone, Debug)]
pub struct JobResult {
    pub scheme: usize,
    pub seed: u64,
    pub fixture: usize,
    pub trace: ExperimentTrace,
}

impl JobResult {
    /// Best reward at `t = 0..=T`.
    pub fn best_series(&self) -> Vec<f64> {
        std::iter::once(self.trace.initial.best_reward)
            .chain(self.trace.best_series())
            .collect()
    }

    /// Whether the final in-context examples contain a row at `reference`.
    pub fn holds_reference(&self, reference: f64) -> bool {
        let last = self.trace.records.last().unwrap_or(&self.trace.initial);
        reference - last.example_best <= found_tolerance(reference)
    }

    fn records(&self) -> impl Iterator<Item = &llmo_core::IterationRecord> {
        std::iter::once(&self.trace.initial).chain(&self.trace.records)
    }
}

/// Everything a run produced, before it is written out.
pub struct RunOutcome {
    pub hash: String,
    pub schemes: Vec<Scheme>,
    /// Per fixture: the larger of its reference optimum and the best reward any run reached.
    pub references: Vec<f64>,
    pub jobs: Vec<JobResult>,
    pub wall_time_s: f64,
}

fn build_agent(agent: &AgentSpec, instance: &Instance) -> Result<Box<dyn Agent>, CliError> {
    Ok(match agent {
        AgentSpec::Synthetic { epsilon, radius } => {
            let grid = instance
                .grid
                .clone()
                .ok_or_else(|| CliError::Invalid(vec!["synthetic agents need a [grid] table".into()]))?;
            let policy = LocalSearchPolicy::new(grid, *epsilon, *radius).map_err(|e| CliError::Agent(e.to_string()))?;
            Box::new(SyntheticAgent::local_search(policy))
        }
        AgentSpec::Random => Box::new(RandomAgent),
        AgentSpec::Http { http } => {
            Box::new(HttpLlmAgent::new(http.clone()).map_err(|e| CliError::Agent(e.to_string()))?)
        }
    })
}

fn run_job(
    config: &ExperimentConfig,
    scheme: Scheme,
    instance: &Instance,
    seed: u64,
    options: RunOptions,
) -> Result<ExperimentTrace, CliError> {
    let s = job_seed(seed, instance.fixture);
    let p = config.population;
    let t = config.iterations;
    let reward = &instance.reward;
    match scheme {
        Scheme::Llmo { sampler, agents } => {
            let pool = &config.agents;
            let members = (0..agents)
                .map(|l| build_agent(&pool[l % pool.len()], instance))
                .collect::<Result<Vec<_>, _>>()?;
            let ensemble = Ensemble::new(members);
            let mut lc = LlmoConfig::new(instance.bounds.clone(), p, t, sampler);
            lc.max_retries = config.max_retries;
            lc.template = PromptTemplate::default()
                .with_format(config.number_format)
                .with_constraint(instance.constraint_text.clone());
            lc.record_populations = options.dump_populations;
            Ok(run_llmo(&lc, &ensemble, reward, s)?)
        }
        Scheme::Baseline { kind: BaselineKind::Ga } => {
            let ga = GaConfig {
                population: p,
                seed: s,
                ..GaConfig::default()
            };
            Ok(run_ga(&ga, reward, &instance.bounds, t)?)
        }
        Scheme::Baseline { kind: BaselineKind::Bo } => {
            let bo = BoConfig {
                batch: p,
                seed: s,
                ..BoConfig::default()
            };
            Ok(run_bo(&bo, reward, &instance.bounds, t)?)
        }
        Scheme::Baseline {
            kind: BaselineKind::Random,
        } => Ok(brute_force(p, reward, &instance.bounds, t, s)?),
    }
}

/// Validates, then runs every `(scheme, seed, fixture)` job concurrently.
pub fn execute(config: &ExperimentConfig, options: RunOptions) -> Result<RunOutcome, CliError> {
    config.validate(options.allow_network)?;
    let start = Instant::now();
    let instances = build_instances(config)?;
    let schemes = schemes(config);
    let mut specs = Vec::new();
    for (k, _) in schemes.iter().enumerate() {
        for &seed in &config.seeds {
            for f in 0..instances.len() {
                specs.push((k, seed, f));
            }
        }
    }
    log::info!("{} jobs over {} fixtures", specs.len(), instances.len());
    let jobs = specs
        .into_par_iter()
        .map(|(k, seed, f)| {
            let trace = run_job(config, schemes[k], &instances[f], seed, options)?;
            Ok(JobResult {
                scheme: k,
                seed,
                fixture: f,
                trace,
            })
        })
        .collect::<Result<Vec<_>, CliError>>()?;
    let mut references: Vec<f64> = instances
        .iter()
        .map(|i| i.reference.unwrap_or(f64::NEG_INFINITY))
        .collect();
    for j in &jobs {
        let r = &mut references[j.fixture];
        *r = r.max(j.trace.best_reward);
    }
    Ok(RunOutcome {
        hash: config.hash(),
        schemes,
        references,
        jobs,
        wall_time_s: start.elapsed().as_secs_f64(),
    })
}

/// Tolerance for "reached the reference".
pub fn found_tolerance(reference: f64) -> f64 {
    1e-9 * reference.abs().max(1.0)
}

#[derive(Clone, Debug, Serialize)]
pub struct CurveSummary {
    pub curve: String,
    pub runs: usize,
    pub mean_final_best: f64,
    pub mean_final_gap: f64,
    pub mean_final_violation: f64,
    /// Runs whose best reward reached the fixture reference.
    pub found: usize,
    /// Runs whose final in-context examples hold the reference value.
    pub held: usize,
}

/// Per-scheme aggregates over seeds and fixtures, indexed by `t = 0..=T`.
#[derive(Clone, Debug)]
pub struct Curve {
    pub scheme: Scheme,
    pub runs: usize,
    pub mean_best: Vec<f64>,
    pub stderr_best: Vec<f64>,
    /// Mean of the best in-context example reward.
    pub mean_example_best: Vec<f64>,
    pub mean_gap: Vec<f64>,
    pub mean_violation: Vec<f64>,
    pub found: usize,
    pub held: usize,
}

impl RunOutcome {
    pub fn curves(&self) -> Vec<Curve> {
        self.schemes
            .iter()
            .enumerate()
            .map(|(k, &scheme)| {
                let jobs: Vec<&JobResult> = self.jobs.iter().filter(|j| j.scheme == k).collect();
                let n = jobs.len() as f64;
                let len = jobs.first().map_or(0, |j| j.trace.records.len() + 1);
                let mut curve = Curve {
                    scheme,
                    runs: jobs.len(),
                    mean_best: vec![0.0; len],
                    stderr_best: vec![0.0; len],
                    mean_example_best: vec![0.0; len],
                    mean_gap: vec![0.0; len],
                    mean_violation: vec![0.0; len],
                    found: 0,
                    held: 0,
                };
                let mut sq = vec![0.0; len];
                for j in &jobs {
                    let r = self.references[j.fixture];
                    for (t, (b, rec)) in j.best_series().into_iter().zip(j.records()).enumerate() {
                        curve.mean_best[t] += b / n;
                        sq[t] += b * b / n;
                        curve.mean_example_best[t] += rec.example_best / n;
                        curve.mean_gap[t] += (r - b) / n;
                        curve.mean_violation[t] += rec.violation / n;
                    }
                    if r - j.trace.best_reward <= found_tolerance(r) {
                        curve.found += 1;
                    }
                    if j.holds_reference(r) {
                        curve.held += 1;
                    }
                }
                for t in 0..len {
                    let var = (sq[t] - curve.mean_best[t].powi(2)).max(0.0) * n / (n - 1.0).max(1.0);
                    curve.stderr_best[t] = (var / n).sqrt();
                }
                curve
            })
            .collect()
    }

    pub fn summaries(&self) -> Vec<CurveSummary> {
        self.curves()
            .into_iter()
            .map(|c| CurveSummary {
                curve: c.scheme.name(),
                runs: c.runs,
                mean_final_best: *c.mean_best.last().unwrap_or(&f64::NAN),
                mean_final_gap: *c.mean_gap.last().unwrap_or(&f64::NAN),
                mean_final_violation: *c.mean_violation.last().unwrap_or(&f64::NAN),
                found: c.found,
                held: c.held,
            })
            .collect()
    }

    /// First `t` at which a run's best reward reached its fixture reference.
    pub fn first_hit(&self, job: &JobResult) -> Option<usize> {
        let r = self.references[job.fixture];
        job.best_series().iter().position(|&b| r - b <= found_tolerance(r))
    }
}

fn per_seed_csv(outcome: &RunOutcome, jobs: &[&JobResult]) -> String {
    let mut s = String::from("fixture,t,best_reward,example_best,mean_reward,violation,failures,evaluations,gap\n");
    for j in jobs {
        let r = outcome.references[j.fixture];
        for rec in j.records() {
            let _ = writeln!(
                s,
                "{},{},{},{},{},{},{},{},{}",
                j.fixture,
                rec.t,
                rec.best_reward,
                rec.example_best,
                rec.mean_reward,
                rec.violation,
                rec.failures,
                rec.evaluations,
                r - rec.best_reward
            );
        }
    }
    s
}

#[derive(Serialize)]
struct PopulationDumpFile<'a> {
    config_hash: &'a str,
    curve: String,
    seed: u64,
    traces: Vec<&'a ExperimentTrace>,
}

#[derive(Serialize)]
struct RunMeta<'a> {
    config_hash: &'a str,
    scenario: String,
    versions: Versions,
    wall_time_s: f64,
    jobs: usize,
    fixtures: usize,
    seeds: &'a [u64],
    curves: Vec<CurveSummary>,
}

#[derive(Serialize)]
struct Versions {
    llmo_cli: &'static str,
    trace_schema: u32,
}

/// Bumped whenever a CSV column changes.
pub const TRACE_SCHEMA_VERSION: u32 = 1;

/// Writes all artifacts under `dir`. Only `run_meta.json` depends on timing.
pub fn write_outputs(
    config: &ExperimentConfig,
    outcome: &RunOutcome,
    dir: &Path,
    options: RunOptions,
) -> Result<(), CliError> {
    let meta_path = dir.join("run_meta.json");
    if meta_path.exists() {
        if let Some(old) = read_hash(&meta_path)? {
            if old != outcome.hash {
                return Err(CliError::MixedConfigs(vec![
                    format!("{} holds results of config {old}", dir.display()),
                    format!("this run has config {}", outcome.hash),
                ]));
            }
        }
    }
    let h = outcome.hash.as_str();
    let put = |name: &str, body: String| write_atomic(&dir.join(name), hashed_csv(h, &body).as_bytes());
    let curves = outcome.curves();

    for (k, scheme) in outcome.schemes.iter().enumerate() {
        for &seed in &config.seeds {
            let jobs: Vec<&JobResult> = outcome
                .jobs
                .iter()
                .filter(|j| j.scheme == k && j.seed == seed)
                .collect();
            let stem = format!("runs/{}/seed_{seed}", scheme.name());
            put(&format!("{stem}.csv"), per_seed_csv(outcome, &jobs))?;
            if options.dump_populations {
                let dump = PopulationDumpFile {
                    config_hash: h,
                    curve: scheme.name(),
                    seed,
                    traces: jobs.iter().map(|j| &j.trace).collect(),
                };
                let json = serde_json::to_string_pretty(&dump).map_err(|e| CliError::Parse(e.to_string()))?;
                write_atomic(&dir.join(format!("{stem}.json")), json.as_bytes())?;
            }
        }
    }

    let mut best = String::from("curve,scheme,sampler,agents,t,runs,mean_best,stderr_best,mean_example_best\n");
    let mut gap = String::from("curve,scheme,sampler,agents,t,mean_gap\n");
    let mut viol = String::from("curve,t,mean_violation\n");
    let mut fits = String::from("curve,agents,points,slope,intercept,r_squared,status\n");
    let mut acr = String::from("sampler,agents,gap_0,gap_T,acr,slope,r_squared\n");
    for c in &curves {
        let name = c.scheme.name();
        let (scheme, sampler, agents) = c.scheme.columns();
        for t in 0..c.mean_best.len() {
            let _ = writeln!(
                best,
                "{name},{scheme},{sampler},{agents},{t},{},{},{},{}",
                c.runs, c.mean_best[t], c.stderr_best[t], c.mean_example_best[t]
            );
            let _ = writeln!(gap, "{name},{scheme},{sampler},{agents},{t},{}", c.mean_gap[t]);
            let _ = writeln!(viol, "{name},{t},{}", c.mean_violation[t]);
        }
        let ts: Vec<f64> = (1..c.mean_gap.len()).map(|t| t as f64).collect();
        let fit = fit_semilog(&ts, &c.mean_gap[1..]);
        match &fit {
            Ok(f) => {
                let _ = writeln!(
                    fits,
                    "{name},{agents},{},{},{},{},ok",
                    f.points, f.slope, f.intercept, f.r_squared
                );
            }
            Err(e) => {
                let _ = writeln!(fits, "{name},{agents},0,,,,{e}");
            }
        }
        if let Scheme::Llmo { .. } = c.scheme {
            let g0 = c.mean_gap[0];
            let gt = *c.mean_gap.last().expect("at least t = 0");
            let t = (c.mean_gap.len() - 1) as f64;
            let rate = if g0 > 0.0 {
                (gt.max(0.0) / g0).powf(1.0 / t)
            } else {
                f64::NAN
            };
            let (slope, r2) = fit.map_or((f64::NAN, f64::NAN), |f| (f.slope, f.r_squared));
            let _ = writeln!(acr, "{sampler},{agents},{g0},{gt},{rate},{slope},{r2}");
        }
    }
    put("best_vs_t.csv", best)?;
    put("gap_vs_t.csv", gap)?;
    put("gap_fit.csv", fits)?;
    put("violation_vs_t.csv", viol)?;
    put("acr_vs_l.csv", acr)?;

    let mut summary = String::from("curve,seed,fixture,final_best,reference,found,first_hit,held_at_end\n");
    for j in &outcome.jobs {
        let r = outcome.references[j.fixture];
        let hit = outcome.first_hit(j);
        let _ = writeln!(
            summary,
            "{},{},{},{},{r},{},{},{}",
            outcome.schemes[j.scheme].name(),
            j.seed,
            j.fixture,
            j.trace.best_reward,
            hit.is_some(),
            hit.map(|t| t.to_string()).unwrap_or_default(),
            j.holds_reference(r)
        );
    }
    put("summary.csv", summary)?;
    // Stored relative to the run directory so copies of it stay identical.
    let mut stored = config.clone();
    stored.output = ".".into();
    put("config.toml", stored.canonical())?;

    let fixtures = outcome.references.len();
    let meta = RunMeta {
        config_hash: h,
        scenario: config.scenario.to_string(),
        versions: Versions {
            llmo_cli: env!("CARGO_PKG_VERSION"),
            trace_schema: TRACE_SCHEMA_VERSION,
        },
        wall_time_s: outcome.wall_time_s,
        jobs: outcome.jobs.len(),
        fixtures,
        seeds: &config.seeds,
        curves: outcome.summaries(),
    };
    let json = serde_json::to_string_pretty(&meta).map_err(|e| CliError::Parse(e.to_string()))?;
    write_atomic(&meta_path, json.as_bytes())
}

/// `llmo run`: validate, execute, write.
pub fn run_experiment(config: &ExperimentConfig, options: RunOptions) -> Result<RunOutcome, CliError> {
    let outcome = execute(config, options)?;
    write_outputs(config, &outcome, &config.output, options)?;
    Ok(outcome)
}
