//! planguard: validate robot task plans against safety-augmented planning
//! problems and reproduce the associated metric and statistical analyses.
//!
//! Exit codes: 0 success; 1 negative verdict (unsafe/infeasible plan,
//! unsolvable task, failed validation) so CI pipelines can gate on plan
//! safety; 2 usage error; 3 internal error.

use clap::{Args, Parser, Subcommand, ValueEnum};
use planguard_core::analysis;
use planguard_core::bundle::{
    self, load_suite, write_report, EvalRow, PlanInput, TaskBundle,
};
use planguard_core::executor::{run_plan, FailureReason, Verdict};
use planguard_core::metrics::{summarize, EvalRecord, MetricsSummary, ParseStats, SliceBy};
use planguard_core::noise::{inject, NoiseLevel};
use planguard_core::oracle::{reference_pair, solve, SearchLimits, SolveMode};
use planguard_core::parser::{parse_bundle, parse_plan, RawPlanText, StepStatus};
use planguard_core::relaxed::relaxed_run;
use serde_json::json;
use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;

const EXIT_OK: u8 = 0;
const EXIT_NEGATIVE: u8 = 1;
const EXIT_INTERNAL: u8 = 3;

#[derive(Parser)]
#[command(name = "planguard", version, about, max_term_width = 100)]
struct Cli {
    /// Seed for all randomized procedures (bootstrap, noise placement).
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Output format for verdicts and summaries.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    format: Format,
    /// Suppress non-essential output.
    #[arg(long, global = true)]
    quiet: bool,
    /// Optional key = value config file; flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Basic,
    Augmented,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a bundle (or suite), check solvability, and verify reference
    /// plans and metadata.
    ValidateTask(ValidateArgs),
    /// Classify one plan against one bundle and print the verdict with its
    /// trace.
    CheckPlan(CheckArgs),
    /// Search for a shortest plan (breadth-first, deterministic
    /// tie-breaking).
    Solve(SolveArgs),
    /// Collect plans from a provider and score every (model, task) pair.
    Evaluate(EvaluateArgs),
    /// Add redundant distractor actions to bundles at the standard levels.
    InjectNoise(NoiseArgs),
    /// Scaling regressions, decomposition fit, and difficulty tables over
    /// results.
    Analyze(AnalyzeArgs),
    /// Re-aggregate a results file into report.json / report.csv.
    Report(ReportArgs),
}

#[derive(Args)]
struct ValidateArgs {
    /// Bundle directory or a directory of bundles.
    path: PathBuf,
}

#[derive(Args)]
struct CheckArgs {
    /// Bundle directory.
    bundle: PathBuf,
    /// Plan file; `-` reads stdin.
    #[arg(long)]
    plan: PathBuf,
    /// Judge against the augmented problem (full three-way verdict) or the
    /// basic problem (feasibility only).
    #[arg(long, value_enum, default_value_t = Mode::Augmented)]
    mode: Mode,
}

#[derive(Args)]
struct SolveArgs {
    bundle: PathBuf,
    #[arg(long, value_enum, default_value_t = Mode::Augmented)]
    mode: Mode,
    #[arg(long, default_value_t = 1_000_000)]
    max_nodes: usize,
    #[arg(long, default_value_t = 50)]
    max_depth: usize,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Directory of task bundles.
    suite: PathBuf,
    /// Provider spec: directory:PATH, command:ARGV, or http(s)://URL.
    #[arg(long)]
    provider: Option<String>,
    /// Model label for single-model providers.
    #[arg(long, default_value = "model")]
    model_id: String,
    /// Plans as JSONL lines {task_id, model_id, plan} (alternative to
    /// --provider).
    #[arg(long)]
    plans_jsonl: Option<PathBuf>,
    /// Plans as a plans/<model>/<task>.txt tree (alternative to
    /// --provider).
    #[arg(long)]
    plans_dir: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    /// Worker threads; affects wall time only, never output bytes.
    #[arg(long, default_value_t = 1)]
    parallel: usize,
    /// Prompt template file containing {{TASK}}.
    #[arg(long)]
    template: Option<PathBuf>,
    /// Per-request timeout for http providers.
    #[arg(long, default_value_t = 120)]
    timeout_s: u64,
    #[arg(long, default_value_t = 3)]
    max_retries: u32,
    #[arg(long, default_value_t = 0.0)]
    temperature: f64,
    /// Bearer-token environment variable name for http providers.
    #[arg(long)]
    auth_env: Option<String>,
}

#[derive(Args)]
struct NoiseArgs {
    /// Bundle directory or a directory of bundles.
    path: PathBuf,
    /// Comma-separated distractor counts.
    #[arg(long, default_value = "2,4,8,16,32,64", value_delimiter = ',')]
    levels: Vec<usize>,
    #[arg(long)]
    out: PathBuf,
    /// Accept counts outside the standard ladder.
    #[arg(long)]
    allow_any_count: bool,
}

#[derive(Args)]
struct AnalyzeArgs {
    /// results.jsonl from `evaluate`.
    #[arg(long)]
    results: PathBuf,
    /// CSV with model_id, total_params_b, family, inference_mode.
    #[arg(long)]
    model_meta: Option<PathBuf>,
    /// Bundle directory, for per-task factors (reference lengths, safety
    /// effort).
    #[arg(long)]
    bundles: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    resamples: usize,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    results: PathBuf,
    /// Bundle directory providing metadata for categorical slices.
    #[arg(long)]
    bundles: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let mut cli = Cli::parse();
    if let Some(config) = cli.config.clone() {
        if let Err(e) = apply_config(&config, &mut cli) {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_INTERNAL);
        }
    }
    match run(&cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_INTERNAL)
        }
    }
}

/// Config files are flat `key = value` lines mirroring global flags;
/// explicit flags win (a non-default flag value is left untouched).
fn apply_config(path: &Path, cli: &mut Cli) -> Result<(), String> {
    let text =
        std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?;
    for line in text.lines() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| format!("bad config line `{line}`; expected key = value"))?;
        let value = value.trim().trim_matches('"');
        match key.trim() {
            "seed" => {
                if cli.seed == 0 {
                    cli.seed = value.parse().map_err(|_| format!("bad seed `{value}`"))?;
                }
            }
            "format" => {
                cli.format = match value {
                    "json" => Format::Json,
                    "text" => Format::Text,
                    other => return Err(format!("bad format `{other}`")),
                };
            }
            "quiet" => cli.quiet = value == "true",
            other => return Err(format!("unknown config key `{other}`")),
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> Result<u8, String> {
    match &cli.command {
        Command::ValidateTask(args) => cmd_validate(cli, args),
        Command::CheckPlan(args) => cmd_check_plan(cli, args),
        Command::Solve(args) => cmd_solve(cli, args),
        Command::Evaluate(args) => cmd_evaluate(cli, args),
        Command::InjectNoise(args) => cmd_inject_noise(cli, args),
        Command::Analyze(args) => cmd_analyze(cli, args),
        Command::Report(args) => cmd_report(cli, args),
    }
}

fn load_path(path: &Path) -> Result<Vec<TaskBundle>, String> {
    if path.join("domain.pddl").is_file() {
        Ok(vec![parse_bundle(path).map_err(|e| e.to_string())?])
    } else {
        load_suite(path).map_err(|e| e.to_string())
    }
}

fn say(cli: &Cli, line: &str) {
    if !cli.quiet {
        println!("{line}");
    }
}

fn cmd_validate(cli: &Cli, args: &ValidateArgs) -> Result<u8, String> {
    let bundles = load_path(&args.path)?;
    let mut failures = 0usize;
    for bundle in &bundles {
        match validate_one(bundle) {
            Ok(report) => say(cli, &format!("ok   {}: {report}", bundle.id)),
            Err(problem) => {
                failures += 1;
                say(cli, &format!("FAIL {}: {problem}", bundle.id));
            }
        }
    }
    say(
        cli,
        &format!("{} bundle(s), {} failure(s)", bundles.len(), failures),
    );
    Ok(if failures == 0 { EXIT_OK } else { EXIT_NEGATIVE })
}

fn validate_one(bundle: &TaskBundle) -> Result<String, String> {
    let pair = reference_pair(bundle, SearchLimits::default()).map_err(|e| e.to_string())?;
    if let Some(meta) = &bundle.meta {
        if let Some(declared) = meta.safety_effort {
            if declared != pair.safety_effort {
                return Err(format!(
                    "meta safety_effort {declared} but oracle computes {}",
                    pair.safety_effort
                ));
            }
        }
        if meta.safety_effort_outlier() {
            return Err("safety_effort outside the observed [-8, 8] range".to_string());
        }
    }
    if let Some(text) = &bundle.refs.safe {
        let plan = parse_plan(&RawPlanText::new(text, "ref", &bundle.id), &bundle.basic);
        let outcome = run_plan(&plan, bundle).map_err(|e| e.to_string())?;
        if outcome.verdict != Verdict::Safe {
            return Err(format!(
                "refs/safe.plan does not validate Safe ({})",
                outcome.verdict.tag()
            ));
        }
    }
    if let Some(text) = &bundle.refs.feasible {
        let plan = parse_plan(&RawPlanText::new(text, "ref", &bundle.id), &bundle.basic);
        let outcome = run_plan(&plan, bundle).map_err(|e| e.to_string())?;
        if !outcome.feasible {
            return Err("refs/feasible.plan does not validate feasible".to_string());
        }
    }
    Ok(format!(
        "solvable, feasible {} step(s), safe {} step(s), safety_effort {}",
        pair.feasible_plan.len(),
        pair.safe_plan.len(),
        pair.safety_effort
    ))
}

fn read_plan_file(path: &Path) -> Result<String, String> {
    if path == Path::new("-") {
        use std::io::Read;
        let mut text = String::new();
        std::io::stdin()
            .read_to_string(&mut text)
            .map_err(|e| format!("stdin: {e}"))?;
        Ok(text)
    } else {
        std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))
    }
}

fn cmd_check_plan(cli: &Cli, args: &CheckArgs) -> Result<u8, String> {
    let bundle = parse_bundle(&args.bundle).map_err(|e| e.to_string())?;
    let text = read_plan_file(&args.plan)?;
    let plan = parse_plan(&RawPlanText::new(&text, "cli", &bundle.id), &bundle.basic);
    let outcome = run_plan(&plan, &bundle).map_err(|e| e.to_string())?;

    let positive = match args.mode {
        Mode::Augmented => outcome.safe,
        Mode::Basic => outcome.feasible,
    };

    if cli.format == Format::Json {
        let events: Vec<serde_json::Value> = outcome
            .trace
            .danger_events
            .iter()
            .map(|e| {
                json!({"step": e.step, "rule": e.rule, "action": e.action.to_string(), "delta": e.delta})
            })
            .collect();
        let value = json!({
            "feasible": outcome.feasible,
            "safe": outcome.safe,
            "verdict": outcome.verdict.tag(),
            "terminal_danger": outcome.trace.terminal_danger(),
            "danger_events": events,
            "failure": match &outcome.verdict {
                Verdict::Infeasible { reason, step } => json!({
                    "reason": reason.tag(),
                    "detail": reason.describe(),
                    "step": step,
                }),
                _ => serde_json::Value::Null,
            },
        });
        println!("{}", serde_json::to_string_pretty(&value).expect("serializable"));
    } else {
        for step in &plan.steps {
            let status = match &step.status {
                StepStatus::Resolved(ga) => format!("resolved  {ga}"),
                StepStatus::UnknownAction { name } => format!("unknown   ({name} ...)"),
                StepStatus::Malformed { why } => format!("malformed {why}"),
            };
            say(cli, &format!("step {:>2}: {status}", step.index));
        }
        for event in &outcome.trace.danger_events {
            say(
                cli,
                &format!(
                    "danger  : step {} {} fired rule {} (delta {:+})",
                    event.step, event.action, event.rule, event.delta
                ),
            );
        }
        match &outcome.verdict {
            Verdict::Infeasible { reason, step } => {
                let at = step.map(|s| format!(" at step {s}")).unwrap_or_default();
                println!("verdict : infeasible{at} — {}", reason.describe());
            }
            Verdict::FeasibleUnsafe { terminal_danger, .. } => {
                println!(
                    "verdict : feasible but unsafe (terminal danger {terminal_danger} > {})",
                    bundle.augmented.d_max
                );
            }
            Verdict::Safe => println!("verdict : safe"),
        }
    }
    Ok(if positive { EXIT_OK } else { EXIT_NEGATIVE })
}

fn cmd_solve(_cli: &Cli, args: &SolveArgs) -> Result<u8, String> {
    let bundle = parse_bundle(&args.bundle).map_err(|e| e.to_string())?;
    let limits = SearchLimits {
        max_expanded_nodes: args.max_nodes,
        max_depth: args.max_depth,
    };
    let mode = match args.mode {
        Mode::Basic => SolveMode::Basic,
        Mode::Augmented => SolveMode::Augmented,
    };
    match solve(&bundle, mode, limits) {
        Ok(plan) => {
            print!("{}", plan.to_text());
            Ok(EXIT_OK)
        }
        Err(e @ planguard_core::oracle::SolveError::Unsolvable)
        | Err(e @ planguard_core::oracle::SolveError::LimitExceeded(_)) => {
            eprintln!("{e}");
            Ok(EXIT_NEGATIVE)
        }
        Err(e) => Err(e.to_string()),
    }
}

/// Scores one (model, task, plan) triple.
fn score(bundle: &TaskBundle, raw: &RawPlanText) -> Result<EvalRow, String> {
    if let Some(error) = &raw.error {
        // Acquisition failed: infeasible by empty plan, never dropped.
        let record = EvalRecord::from_bits(
            &raw.model_id,
            &raw.task_id,
            planguard_core::metrics::VerdictKind::Infeasible,
            true,
            ParseStats::default(),
        );
        return Ok(EvalRow {
            record,
            plan_raw: String::new(),
            failure_reason: Some(
                FailureReason::AcquisitionFailed {
                    error: error.clone(),
                }
                .tag()
                .to_string(),
            ),
            danger_events: vec![],
            timings: Default::default(),
        });
    }
    let plan = parse_plan(raw, &bundle.basic);
    let mut parse = ParseStats::default();
    for step in &plan.steps {
        match step.status {
            StepStatus::Resolved(_) => parse.resolved += 1,
            StepStatus::UnknownAction { .. } => parse.unknown += 1,
            StepStatus::Malformed { .. } => parse.malformed += 1,
        }
    }
    let outcome = run_plan(&plan, bundle).map_err(|e| e.to_string())?;
    let relaxed = relaxed_run(&plan, bundle);
    Ok(EvalRow::from_outcomes(
        &raw.model_id,
        &raw.task_id,
        &raw.text,
        parse,
        &outcome,
        &relaxed,
    ))
}

fn score_all(
    bundles: &[TaskBundle],
    inputs: &[RawPlanText],
    parallel: usize,
) -> Result<Vec<EvalRow>, String> {
    let by_id: BTreeMap<&str, &TaskBundle> =
        bundles.iter().map(|b| (b.id.as_str(), b)).collect();
    let jobs: Vec<&RawPlanText> = inputs.iter().collect();
    let next = AtomicUsize::new(0);
    let results: Mutex<Vec<Option<Result<EvalRow, String>>>> =
        Mutex::new(vec![None; jobs.len()]);
    let workers = parallel.max(1).min(jobs.len().max(1));
    std::thread::scope(|scope| {
        for _ in 0..workers {
            scope.spawn(|| loop {
                let idx = next.fetch_add(1, Ordering::SeqCst);
                if idx >= jobs.len() {
                    break;
                }
                let raw = jobs[idx];
                let result = match by_id.get(raw.task_id.as_str()) {
                    Some(bundle) => score(bundle, raw),
                    None => Err(format!("plan references unknown task `{}`", raw.task_id)),
                };
                results.lock().expect("no poisoned workers")[idx] = Some(result);
            });
        }
    });
    let mut rows = Vec::with_capacity(jobs.len());
    for slot in results.into_inner().expect("workers joined") {
        rows.push(slot.expect("every index filled")?);
    }
    rows.sort_by(|a, b| {
        (&a.record.task_id, &a.record.model_id).cmp(&(&b.record.task_id, &b.record.model_id))
    });
    Ok(rows)
}

fn all_slice_summaries(
    records: &[EvalRecord],
    meta: &BTreeMap<String, bundle::MetaRecord>,
) -> Result<Vec<MetricsSummary>, String> {
    let mut out = Vec::new();
    for slice_by in [
        SliceBy::All,
        SliceBy::DangerGroup,
        SliceBy::DangerType,
        SliceBy::Entity,
        SliceBy::Source,
    ] {
        out.extend(summarize(records, meta, slice_by).map_err(|e| e.to_string())?);
    }
    Ok(out)
}

fn meta_map(bundles: &[TaskBundle]) -> BTreeMap<String, bundle::MetaRecord> {
    bundles
        .iter()
        .filter_map(|b| b.meta.clone().map(|m| (b.id.clone(), m)))
        .collect()
}

fn cmd_evaluate(cli: &Cli, args: &EvaluateArgs) -> Result<u8, String> {
    let bundles = load_suite(&args.suite).map_err(|e| e.to_string())?;
    if bundles.is_empty() {
        return Err(format!("no bundles under {}", args.suite.display()));
    }

    let inputs: Vec<RawPlanText> = if let Some(path) = &args.plans_jsonl {
        bundle::read_plans_jsonl(path)
            .map_err(|e| e.to_string())?
            .into_iter()
            .map(plan_input_to_raw)
            .collect()
    } else if let Some(dir) = &args.plans_dir {
        bundle::read_plans_dir(dir, &args.model_id)
            .map_err(|e| e.to_string())?
            .into_iter()
            .map(plan_input_to_raw)
            .collect()
    } else if let Some(spec) = &args.provider {
        let mut provider = planguard_runner::ProviderConfig::from_spec(spec, &args.model_id)
            .map_err(|e| e.to_string())?;
        if let planguard_runner::ProviderKind::Http(cfg) = &mut provider.kind {
            cfg.timeout = std::time::Duration::from_secs(args.timeout_s);
            cfg.max_retries = args.max_retries;
            cfg.temperature = args.temperature;
            cfg.model = args.model_id.clone();
            cfg.auth_token_env = args.auth_env.clone();
        }
        if let Some(path) = &args.template {
            provider.prompt_template =
                Some(std::fs::read_to_string(path).map_err(|e| format!("{}: {e}", path.display()))?);
        }
        planguard_runner::collect_plans(&bundles, &provider, args.parallel)
            .map_err(|e| e.to_string())?
    } else {
        return Err("one of --provider, --plans-jsonl, --plans-dir is required".to_string());
    };

    let rows = score_all(&bundles, &inputs, args.parallel)?;
    let records: Vec<EvalRecord> = rows.iter().map(|r| r.record.clone()).collect();
    let summaries = all_slice_summaries(&records, &meta_map(&bundles))?;

    std::fs::create_dir_all(&args.out).map_err(|e| format!("{}: {e}", args.out.display()))?;
    bundle::write_results_jsonl(&args.out.join("results.jsonl"), &rows)
        .map_err(|e| e.to_string())?;
    write_report(&args.out, &summaries, &BTreeMap::new()).map_err(|e| e.to_string())?;

    if cli.format == Format::Json {
        say(
            cli,
            &serde_json::to_string(&json!({
                "records": rows.len(),
                "out": args.out.display().to_string(),
            }))
            .expect("serializable"),
        );
    } else {
        for s in summaries.iter().filter(|s| s.slice_by == SliceBy::All) {
            say(
                cli,
                &format!(
                    "{}: N={} F={} S={} SP={} SI={}",
                    s.model_id,
                    s.n_tasks,
                    planguard_core::metrics::ratio_decimal(s.f),
                    planguard_core::metrics::ratio_decimal(s.s),
                    s.sp
                        .map(planguard_core::metrics::ratio_decimal)
                        .unwrap_or_else(|| "n/a".into()),
                    planguard_core::metrics::ratio_decimal(s.si),
                ),
            );
        }
        say(
            cli,
            &format!("wrote {} record(s) to {}", rows.len(), args.out.display()),
        );
    }
    Ok(EXIT_OK)
}

fn plan_input_to_raw(input: PlanInput) -> RawPlanText {
    RawPlanText::new(&input.plan, &input.model_id, &input.task_id)
}

fn cmd_inject_noise(cli: &Cli, args: &NoiseArgs) -> Result<u8, String> {
    let bundles = load_path(&args.path)?;
    let mut changed = 0usize;
    for bundle in &bundles {
        for &count in &args.levels {
            let level = NoiseLevel {
                count,
                seed: cli.seed,
            };
            let injected =
                inject(bundle, &level, args.allow_any_count).map_err(|e| e.to_string())?;
            // Reference plans must keep their verdicts under injection.
            for (name, text) in [
                ("safe", bundle.refs.safe.as_ref()),
                ("feasible", bundle.refs.feasible.as_ref()),
            ] {
                let Some(text) = text else { continue };
                let before = run_plan(
                    &parse_plan(&RawPlanText::new(text, "ref", &bundle.id), &bundle.basic),
                    bundle,
                )
                .map_err(|e| e.to_string())?;
                let after = run_plan(
                    &parse_plan(&RawPlanText::new(text, "ref", &injected.id), &injected.basic),
                    &injected,
                )
                .map_err(|e| e.to_string())?;
                if before.verdict != after.verdict {
                    changed += 1;
                    say(
                        cli,
                        &format!(
                            "FAIL {}: {name} ref verdict changed at level {count}",
                            bundle.id
                        ),
                    );
                }
            }
            let dir = args.out.join(format!("{}__n{}", bundle.id, count));
            let mut to_write = injected;
            if let Some(meta) = &mut to_write.meta {
                meta.task_id = format!("{}__n{}", bundle.id, count);
            }
            to_write.id = format!("{}__n{}", bundle.id, count);
            bundle::write_bundle(&dir, &to_write).map_err(|e| e.to_string())?;
        }
        say(
            cli,
            &format!("injected {} at levels {:?}", bundle.id, args.levels),
        );
    }
    Ok(if changed == 0 { EXIT_OK } else { EXIT_NEGATIVE })
}

fn cmd_analyze(cli: &Cli, args: &AnalyzeArgs) -> Result<u8, String> {
    let rows = bundle::read_results_jsonl(&args.results).map_err(|e| e.to_string())?;
    if rows.is_empty() {
        return Err("results file has no records".to_string());
    }
    let records: Vec<EvalRecord> = rows.iter().map(|r| r.record.clone()).collect();

    let bundles = match &args.bundles {
        Some(dir) => load_suite(dir).map_err(|e| e.to_string())?,
        None => Vec::new(),
    };
    let meta = meta_map(&bundles);
    let summaries = all_slice_summaries(&records, &meta)?;

    let mut extras: BTreeMap<String, serde_json::Value> = BTreeMap::new();

    // Per-model rates with bootstrap CIs over tasks.
    let mut models: Vec<String> = records.iter().map(|r| r.model_id.clone()).collect();
    models.sort();
    models.dedup();
    let mut rate_cis = serde_json::Map::new();
    let mut per_model_rates: BTreeMap<String, (f64, f64, f64)> = BTreeMap::new();
    for model in &models {
        let mut of_model: Vec<&EvalRecord> =
            records.iter().filter(|r| &r.model_id == model).collect();
        of_model.sort_by(|a, b| a.task_id.cmp(&b.task_id));
        let f_bits: Vec<bool> = of_model.iter().map(|r| r.feasible).collect();
        let s_bits: Vec<bool> = of_model.iter().map(|r| r.safe).collect();
        let si_bits: Vec<bool> = of_model.iter().map(|r| r.si).collect();
        let rate = |bits: &[bool]| {
            bits.iter().filter(|&&b| b).count() as f64 / bits.len().max(1) as f64
        };
        per_model_rates.insert(
            model.clone(),
            (rate(&f_bits), rate(&s_bits), rate(&si_bits)),
        );
        let mut entry = serde_json::Map::new();
        for (name, bits) in [("F", &f_bits), ("S", &s_bits), ("SI", &si_bits)] {
            let (lo, hi) = analysis::rate_ci(bits, cli.seed, args.resamples);
            entry.insert(
                name.to_string(),
                json!([format!("{lo:.6}"), format!("{hi:.6}")]),
            );
        }
        rate_cis.insert(model.clone(), serde_json::Value::Object(entry));
    }
    extras.insert("rate_cis".into(), serde_json::Value::Object(rate_cis));

    // Scaling regressions need parameter counts. Rates enter the
    // regressions in percentage points.
    if let Some(meta_path) = &args.model_meta {
        let model_meta = bundle::read_model_meta_csv(meta_path).map_err(|e| e.to_string())?;
        let mut points: Vec<analysis::ModelPoint> = Vec::new();
        for m in &model_meta {
            if let Some((f, s, si)) = per_model_rates.get(&m.model_id) {
                points.push(analysis::ModelPoint {
                    model_id: m.model_id.clone(),
                    total_params_b: m.total_params_b,
                    f: *f,
                    s: *s,
                    si: *si,
                });
            }
        }
        if points.len() >= 3 {
            let f_pts: Vec<(f64, f64)> = points
                .iter()
                .map(|p| (p.total_params_b, p.f * 100.0))
                .collect();
            let s_pts: Vec<(f64, f64)> = points
                .iter()
                .map(|p| (p.total_params_b, p.s * 100.0))
                .collect();
            let si_pts: Vec<(f64, f64)> = points
                .iter()
                .map(|p| (p.total_params_b, p.si * 100.0))
                .collect();
            let fit_f = analysis::loglinear_fit(&f_pts, cli.seed, args.resamples)
                .map_err(|e| e.to_string())?;
            let fit_s = analysis::loglinear_fit(&s_pts, cli.seed, args.resamples)
                .map_err(|e| e.to_string())?;
            let fit_si = analysis::loglinear_fit(&si_pts, cli.seed, args.resamples)
                .map_err(|e| e.to_string())?;

            let mut fits = serde_json::Map::new();
            fits.insert("feasibility".into(), bundle::fit_to_json(&fit_f));
            fits.insert("safety".into(), bundle::fit_to_json(&fit_s));
            fits.insert("safety_intention".into(), bundle::fit_to_json(&fit_si));

            let paired_s: Vec<(f64, f64, f64)> = points
                .iter()
                .map(|p| (p.total_params_b, p.s * 100.0, p.f * 100.0))
                .collect();
            let paired_si: Vec<(f64, f64, f64)> = points
                .iter()
                .map(|p| (p.total_params_b, p.si * 100.0, p.f * 100.0))
                .collect();
            for (key, fit_num, paired) in
                [("ratio_s_f", &fit_s, paired_s), ("ratio_si_f", &fit_si, paired_si)]
            {
                match analysis::slope_ratio(fit_num, &fit_f, &paired, cli.seed, args.resamples, 1e-9)
                {
                    Ok((ratio, (lo, hi))) => {
                        fits.insert(
                            key.into(),
                            json!({
                                "ratio": format!("{ratio:.6}"),
                                "ci95": [format!("{lo:.6}"), format!("{hi:.6}")],
                            }),
                        );
                    }
                    Err(e) => {
                        fits.insert(key.into(), json!({ "error": e.to_string() }));
                    }
                }
            }

            let dec_points: Vec<(f64, f64, f64)> = per_model_rates
                .values()
                .map(|(f, s, si)| (*f, *si, *s))
                .collect();
            match analysis::decomposition_fit(&dec_points) {
                Ok(fit) => {
                    fits.insert("decomposition".into(), bundle::fit_to_json(&fit));
                }
                Err(e) => {
                    fits.insert("decomposition".into(), json!({ "error": e.to_string() }));
                }
            }
            extras.insert("fits".into(), serde_json::Value::Object(fits));
        } else {
            extras.insert(
                "fits".into(),
                json!({ "error": "need at least 3 models with parameter counts" }),
            );
        }
    }

    // Difficulty table over the full panel.
    match analysis::difficulty_table(&records) {
        Ok(table) => {
            extras.insert("difficulty".into(), bundle::difficulty_to_json(&table));
            // Task factors against difficulty extremes, when bundle data is
            // available.
            if !bundles.is_empty() {
                let mut lengths: BTreeMap<String, f64> = BTreeMap::new();
                let mut efforts: BTreeMap<String, f64> = BTreeMap::new();
                for b in &bundles {
                    if let Some(text) = &b.refs.feasible {
                        lengths.insert(b.id.clone(), text.lines().count() as f64);
                    }
                    if let Some(e) = b.meta.as_ref().and_then(|m| m.safety_effort) {
                        efforts.insert(b.id.clone(), e as f64);
                    }
                }
                let mut factors = serde_json::Map::new();
                for (name, values) in
                    [("plan_length", &lengths), ("safety_effort", &efforts)]
                {
                    let mut per_metric = serde_json::Map::new();
                    for (metric_name, metric) in [
                        ("F", analysis::DifficultyMetric::Feasibility),
                        ("S", analysis::DifficultyMetric::Safety),
                        ("SI", analysis::DifficultyMetric::SafetyIntention),
                    ] {
                        match analysis::extreme_bucket_effect(&table, metric, values) {
                            Ok(d) => {
                                per_metric
                                    .insert(metric_name.into(), json!(format!("{d:.6}")));
                            }
                            Err(e) => {
                                per_metric.insert(
                                    metric_name.into(),
                                    json!({ "error": e.to_string() }),
                                );
                            }
                        }
                    }
                    factors.insert(name.into(), serde_json::Value::Object(per_metric));
                }
                extras.insert("factor_effects".into(), serde_json::Value::Object(factors));
            }
        }
        Err(e) => {
            extras.insert("difficulty".into(), json!({ "error": e.to_string() }));
        }
    }

    std::fs::create_dir_all(&args.out).map_err(|e| format!("{}: {e}", args.out.display()))?;
    write_report(&args.out, &summaries, &extras).map_err(|e| e.to_string())?;
    say(cli, &format!("wrote analysis to {}", args.out.display()));
    Ok(EXIT_OK)
}

fn cmd_report(cli: &Cli, args: &ReportArgs) -> Result<u8, String> {
    let rows = bundle::read_results_jsonl(&args.results).map_err(|e| e.to_string())?;
    let records: Vec<EvalRecord> = rows.iter().map(|r| r.record.clone()).collect();
    let bundles = match &args.bundles {
        Some(dir) => load_suite(dir).map_err(|e| e.to_string())?,
        None => Vec::new(),
    };
    let summaries = all_slice_summaries(&records, &meta_map(&bundles))?;
    std::fs::create_dir_all(&args.out).map_err(|e| format!("{}: {e}", args.out.display()))?;
    write_report(&args.out, &summaries, &BTreeMap::new()).map_err(|e| e.to_string())?;
    say(cli, &format!("wrote report to {}", args.out.display()));
    Ok(EXIT_OK)
}
