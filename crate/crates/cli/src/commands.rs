use std::collections::BTreeMap;
use std::fmt;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use fear_core::metrics::{aggregate, AggregateReport, CaseMetrics, TaggedMetrics};
use fear_core::{analyze_case, build_fixture, run_batch, AgentId, ScenarioConfig, ScenarioKind};
use serde::{Deserialize, Serialize};

use crate::manifest::{file_digest, sha256_hex, RunManifest};
use crate::plot::{render, Chart, Series};
use crate::render;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Validation(String),
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Validation(m) | CliError::Runtime(m) => f.write_str(m),
        }
    }
}

impl From<fear_core::Error> for CliError {
    fn from(e: fear_core::Error) -> Self {
        use fear_core::Error as E;
        match e {
            E::Case { .. } | E::Inconsistent(_) | E::EfficiencyViolation { .. } => CliError::Runtime(e.to_string()),
            _ => CliError::Validation(e.to_string()),
        }
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<String, CliError> {
    std::fs::write(path, bytes).map_err(|e| io_err(path, e))?;
    Ok(sha256_hex(bytes))
}

fn write_manifest(path: &Path, manifest: &RunManifest) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(manifest).expect("manifest serializes") + "\n";
    write_file(path, text.as_bytes()).map(|_| ())
}

fn input_digest(manifest: &mut RunManifest, path: &Path) -> Result<(), CliError> {
    let digest = file_digest(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    manifest.inputs.insert(path.display().to_string(), digest);
    Ok(())
}

#[derive(Serialize)]
struct AnalysisBundle<'a> {
    fixture: fear_core::fixture::FixtureFile,
    analysis: &'a fear_core::CaseResult,
}

pub struct AnalyzeArgs {
    pub fixture: String,
    pub affected: Option<usize>,
    pub out: Option<PathBuf>,
    pub json: bool,
}

pub fn analyze(args: &AnalyzeArgs, argv: &[String]) -> Result<String, CliError> {
    let fixture = build_fixture(&args.fixture)?;
    let k = fixture.state.agent_count();
    let only = match args.affected {
        Some(j) if j == 0 || j > k => {
            return Err(CliError::Validation(format!("--affected {j}: the fixture has agents 1..={k}")))
        }
        other => other.map(AgentId),
    };
    let cfg = fear_core::FearConfig::default();
    let result = analyze_case(&fixture.state, &fixture.joint, &fixture.mdr, &cfg)?;
    let bundle = AnalysisBundle { fixture: fixture.to_file(), analysis: &result };
    let json = serde_json::to_string_pretty(&bundle).expect("analysis serializes") + "\n";

    if let Some(out) = &args.out {
        let digest = write_file(out, json.as_bytes())?;
        let mut manifest = RunManifest::new("analyze", argv, serde_json::to_value(cfg).expect("config serializes"), None);
        if Path::new(&args.fixture).exists() {
            input_digest(&mut manifest, Path::new(&args.fixture))?;
        } else {
            let source = fear_core::fixture::bundled_source(&args.fixture).unwrap_or_default();
            manifest.inputs.insert(format!("bundled:{}", args.fixture), sha256_hex(source.as_bytes()));
        }
        let name = out.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default();
        manifest.outputs.insert(name.clone(), digest);
        write_manifest(&out.with_file_name(format!("{name}.manifest.json")), &manifest)?;
    }
    Ok(if args.json { json } else { render::report(&args.fixture, &fixture, &result, only) })
}

pub struct SimulateArgs {
    pub scenarios: Vec<ScenarioKind>,
    pub seed: Option<u64>,
    pub n_sims: usize,
    pub n_iters: usize,
    pub n_agents: usize,
    pub fixture: Option<PathBuf>,
    pub config: Option<PathBuf>,
    pub out: PathBuf,
}

/// `--config` accepts a list of scenario configs or a manifest written by
/// an earlier `simulate`.
fn configs_from_file(path: &Path) -> Result<Vec<ScenarioConfig>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let value: serde_json::Value =
        serde_json::from_str(&text).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    let list = match value {
        serde_json::Value::Object(mut m) if m.contains_key("config") => m.remove("config").unwrap_or_default(),
        other => other,
    };
    serde_json::from_value(list).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))
}

pub fn simulate(args: &SimulateArgs, argv: &[String]) -> Result<String, CliError> {
    let configs = match &args.config {
        Some(path) => {
            if !args.scenarios.is_empty() || args.seed.is_some() {
                return Err(CliError::Usage("--config cannot be combined with --scenario or --seed".into()));
            }
            configs_from_file(path)?
        }
        None => {
            let seed = args.seed.ok_or_else(|| CliError::Usage("--seed is required unless --config is given".into()))?;
            if args.scenarios.is_empty() {
                return Err(CliError::Usage("at least one --scenario is required".into()));
            }
            let mut seen = Vec::new();
            args.scenarios
                .iter()
                .filter(|k| {
                    let fresh = !seen.contains(*k);
                    seen.push(**k);
                    fresh
                })
                .map(|&kind| ScenarioConfig {
                    fixture_path: if kind == ScenarioKind::Fixture { args.fixture.clone() } else { None },
                    n_agents: args.n_agents,
                    n_simulations: args.n_sims,
                    n_iterations: args.n_iters,
                    ..ScenarioConfig::new(kind, seed)
                })
                .collect()
        }
    };
    if configs.is_empty() {
        return Err(CliError::Validation("no scenarios to run".into()));
    }
    for c in &configs {
        c.validate()?;
        if let Some(p) = &c.fixture_path {
            build_fixture(&p.to_string_lossy())?;
        }
    }

    let mut manifest = RunManifest::new(
        "simulate",
        argv,
        serde_json::to_value(&configs).expect("config serializes"),
        configs.first().map(|c| c.seed),
    );
    if let Some(path) = &args.config {
        input_digest(&mut manifest, path)?;
    }
    for c in &configs {
        if let Some(p) = &c.fixture_path {
            if p.exists() {
                input_digest(&mut manifest, p)?;
            }
        }
    }

    std::fs::create_dir_all(&args.out).map_err(|e| io_err(&args.out, e))?;
    let mut tagged = Vec::new();
    let mut summary = String::new();
    for c in &configs {
        let records = run_batch(c)?;
        let mut lines = String::new();
        for r in &records {
            lines.push_str(&serde_json::to_string(r).expect("record serializes"));
            lines.push('\n');
            tagged.extend(r.analysis.affected.iter().map(|a| TaggedMetrics { scenario: c.kind.name().to_string(), metrics: a.metrics.clone() }));
        }
        let name = format!("cases_{}.jsonl", c.kind.name());
        let digest = write_file(&args.out.join(&name), lines.as_bytes())?;
        manifest.outputs.insert(name.clone(), digest);
        summary.push_str(&format!("{}: {} cases -> {}\n", c.kind, records.len(), args.out.join(&name).display()));
    }
    let csv = aggregate(&tagged)?.to_csv();
    manifest.outputs.insert("summary.csv".into(), write_file(&args.out.join("summary.csv"), csv.as_bytes())?);
    write_manifest(&args.out.join("manifest.json"), &manifest)?;
    summary.push_str(&format!("summary -> {}\n", args.out.join("summary.csv").display()));
    Ok(summary)
}

#[derive(Deserialize)]
struct CaseLine {
    scenario: ScenarioKind,
    analysis: AnalysisLine,
}

#[derive(Deserialize)]
struct AnalysisLine {
    affected: Vec<AffectedLine>,
}

#[derive(Deserialize)]
struct AffectedLine {
    metrics: CaseMetrics,
}

/// Per-affected metrics from line-delimited case files.
pub fn read_cases(paths: &[PathBuf]) -> Result<Vec<TaggedMetrics>, CliError> {
    let mut out = Vec::new();
    for path in paths {
        let file = std::fs::File::open(path).map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
        for (n, line) in BufReader::new(file).lines().enumerate() {
            let line = line.map_err(|e| io_err(path, e))?;
            if line.trim().is_empty() {
                continue;
            }
            let case: CaseLine = serde_json::from_str(&line)
                .map_err(|e| CliError::Validation(format!("{}:{}: {e}", path.display(), n + 1)))?;
            out.extend(case.analysis.affected.into_iter().map(|a| TaggedMetrics { scenario: case.scenario.name().to_string(), metrics: a.metrics }));
        }
    }
    if out.is_empty() {
        return Err(CliError::Validation("no case records in the input files".into()));
    }
    Ok(out)
}

fn by_scenario(report: &AggregateReport, value: impl Fn(&fear_core::metrics::AggregateRow) -> Option<f64>) -> Vec<Series> {
    report
        .scenarios()
        .into_iter()
        .map(|s| Series {
            points: report.rows_for(&s).filter_map(|r| value(r).map(|v| (r.bin as f64, v))).collect(),
            name: s,
        })
        .collect()
}

pub fn plots(report: &AggregateReport) -> BTreeMap<&'static str, String> {
    let x = "median Manhattan distance (bin)";
    let chart = |title: &str, y: &str, series| Chart { title: title.into(), x_label: x.into(), y_label: y.into(), series };
    let mut out = BTreeMap::new();
    out.insert(
        "delta_count.svg",
        render(&[chart("Cases with non-zero Δ", "cases", by_scenario(report, |r| Some((r.fraction_nonzero_delta * r.count as f64).round())))]),
    );
    out.insert(
        "delta_fraction.svg",
        render(&[chart("Fraction of non-zero Δ", "fraction", by_scenario(report, |r| Some(r.fraction_nonzero_delta)))]),
    );
    out.insert("delta_mean.svg", render(&[chart("Mean Δ", "mean Δ", by_scenario(report, |r| Some(r.mean_delta)))]));
    out.insert(
        "tau_sd.svg",
        render(&[
            chart("SD of τ(iFeAR, Tier)", "SD", by_scenario(report, |r| r.sd_tau_ifear_tier)),
            chart("SD of τ(iFeAR, Shapley)", "SD", by_scenario(report, |r| r.sd_tau_ifear_shapley)),
            chart("SD of τ(Tier, Shapley)", "SD", by_scenario(report, |r| r.sd_tau_tier_shapley)),
        ]),
    );
    out
}

pub fn report(cases: &[PathBuf], out: &Path, argv: &[String]) -> Result<String, CliError> {
    if cases.is_empty() {
        return Err(CliError::Validation("report needs at least one case file".into()));
    }
    let tagged = read_cases(cases)?;
    let report = aggregate(&tagged)?;
    let mut manifest = RunManifest::new("report", argv, serde_json::Value::Null, None);
    for p in cases {
        input_digest(&mut manifest, p)?;
    }
    std::fs::create_dir_all(out).map_err(|e| io_err(out, e))?;
    manifest.outputs.insert("aggregate.csv".into(), write_file(&out.join("aggregate.csv"), report.to_csv().as_bytes())?);
    for (name, svg) in plots(&report) {
        manifest.outputs.insert(name.into(), write_file(&out.join(name), svg.as_bytes())?);
    }
    write_manifest(&out.join("manifest.json"), &manifest)?;
    Ok(format!("{} rows over {} scenario(s) -> {}\n", report.rows.len(), report.scenarios().len(), out.display()))
}
