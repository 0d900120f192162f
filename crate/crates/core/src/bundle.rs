//! Bundle layout, results, reports, and configuration files.
//!
//! A task bundle directory holds `domain.pddl`, `problem.pddl`,
//! `danger.json`, and optionally `meta.json` and reference plans under
//! `refs/`. Per-plan results go to JSONL (one object per line, keys
//! sorted); aggregates go to `report.json` and `report.csv`. All writers
//! are atomic (temp file + rename) and byte-deterministic: two runs over
//! the same inputs produce identical files.

use crate::domain::{
    compile_augmented, AugmentedProblem, BasicProblem, BindingSlot, DangerRule, DomainError,
};
use crate::executor::{PlanOutcome, Verdict};
use crate::metrics::{EvalRecord, MetricsSummary, ParseStats, VerdictKind};
use crate::relaxed::RelaxedOutcome;
use serde::{Deserialize, Serialize};
use serde_json::{json, Map, Value};
use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("{path}: {msg}")]
    Format { path: String, msg: String },
    #[error("nothing to write: empty input")]
    EmptyInput,
}

fn io_err(path: &Path, source: std::io::Error) -> IoError {
    IoError::Io {
        path: path.display().to_string(),
        source,
    }
}

/// Writes a file atomically: the content lands under a temporary name in
/// the same directory and is renamed into place, so partially written
/// output is never observable.
pub fn atomic_write(path: &Path, content: &[u8]) -> Result<(), IoError> {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).map_err(|e| io_err(path, e))?;
    }
    let tmp = path.with_extension("tmp-write");
    {
        let mut f = std::fs::File::create(&tmp).map_err(|e| io_err(&tmp, e))?;
        f.write_all(content).map_err(|e| io_err(&tmp, e))?;
    }
    std::fs::rename(&tmp, path).map_err(|e| io_err(path, e))
}

/// Shipped reference plans, verbatim text.
#[derive(Clone, Debug, Default)]
pub struct ReferencePlans {
    pub safe: Option<String>,
    pub feasible: Option<String>,
}

/// The unit of evaluation: a basic problem, its danger specification
/// compiled into an augmented problem, and metadata.
#[derive(Clone, Debug)]
pub struct TaskBundle {
    pub id: String,
    pub basic: BasicProblem,
    pub augmented: AugmentedProblem,
    pub meta: Option<MetaRecord>,
    pub refs: ReferencePlans,
}

impl TaskBundle {
    pub fn compile(
        id: &str,
        basic: BasicProblem,
        rules: Vec<DangerRule>,
        d_init: i64,
        d_max: i64,
    ) -> Result<TaskBundle, DomainError> {
        let augmented = compile_augmented(&basic, &rules, d_init, d_max)?;
        Ok(TaskBundle {
            id: id.to_string(),
            basic,
            augmented,
            meta: None,
            refs: ReferencePlans::default(),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Source {
    #[serde(rename = "ALFRED")]
    Alfred,
    #[serde(rename = "BDDL")]
    Bddl,
    #[serde(rename = "VirtualHome")]
    VirtualHome,
    #[serde(rename = "NormBank")]
    NormBank,
    #[serde(rename = "NEISS")]
    Neiss,
    #[serde(rename = "fixture")]
    Fixture,
}

impl Source {
    pub fn tag(&self) -> &'static str {
        match self {
            Source::Alfred => "ALFRED",
            Source::Bddl => "BDDL",
            Source::VirtualHome => "VirtualHome",
            Source::NormBank => "NormBank",
            Source::Neiss => "NEISS",
            Source::Fixture => "fixture",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DangerGroup {
    Physical,
    Normative,
}

impl DangerGroup {
    pub fn tag(&self) -> &'static str {
        match self {
            DangerGroup::Physical => "physical",
            DangerGroup::Normative => "normative",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Entity {
    Human,
    Robot,
    Others,
}

impl Entity {
    pub fn tag(&self) -> &'static str {
        match self {
            Entity::Human => "human",
            Entity::Robot => "robot",
            Entity::Others => "others",
        }
    }
}

/// Task metadata (`meta.json`).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetaRecord {
    pub task_id: String,
    pub source: Source,
    pub danger_group: DangerGroup,
    pub danger_type: String,
    pub entity: Entity,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub safety_effort: Option<i64>,
}

impl MetaRecord {
    /// Safety efforts observed in practice stay within [-8, 8]; anything
    /// outside is worth flagging to the bundle author.
    pub fn safety_effort_outlier(&self) -> bool {
        matches!(self.safety_effort, Some(e) if !(-8..=8).contains(&e))
    }
}

/// Serde form of `danger.json`.
#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct DangerSpecFile {
    pub rules: Vec<DangerRuleFile>,
    #[serde(default)]
    pub d_init: i64,
    #[serde(default)]
    pub d_max: i64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct DangerRuleFile {
    pub action: String,
    pub binding: Vec<String>,
    /// PDDL goal syntax over the schema's parameters and the problem's
    /// objects.
    pub condition: String,
    pub delta: i64,
}

impl DangerSpecFile {
    pub fn from_rules(rules: &[DangerRule], d_init: i64, d_max: i64) -> DangerSpecFile {
        DangerSpecFile {
            rules: rules
                .iter()
                .map(|r| DangerRuleFile {
                    action: r.action.to_string(),
                    binding: r
                        .binding
                        .iter()
                        .map(|b| match b {
                            BindingSlot::Object(o) => o.to_string(),
                            BindingSlot::Any => "*".to_string(),
                        })
                        .collect(),
                    condition: crate::parser::render_condition(&r.condition),
                    delta: r.delta,
                })
                .collect(),
            d_init,
            d_max,
        }
    }
}

/// Writes a bundle back to a directory (used by noise injection).
pub fn write_bundle(dir: &Path, bundle: &TaskBundle) -> Result<(), IoError> {
    atomic_write(
        &dir.join("domain.pddl"),
        crate::parser::render_domain(&bundle.basic.domain).as_bytes(),
    )?;
    atomic_write(
        &dir.join("problem.pddl"),
        crate::parser::render_problem(&bundle.basic).as_bytes(),
    )?;
    let spec = DangerSpecFile::from_rules(
        &bundle.augmented.rules,
        bundle.augmented.d_init,
        bundle.augmented.d_max,
    );
    let mut danger = serde_json::to_string_pretty(&spec).expect("serializable");
    danger.push('\n');
    atomic_write(&dir.join("danger.json"), danger.as_bytes())?;
    if let Some(meta) = &bundle.meta {
        let mut text = serde_json::to_string_pretty(meta).expect("serializable");
        text.push('\n');
        atomic_write(&dir.join("meta.json"), text.as_bytes())?;
    }
    if let Some(safe) = &bundle.refs.safe {
        atomic_write(&dir.join("refs/safe.plan"), safe.as_bytes())?;
    }
    if let Some(feasible) = &bundle.refs.feasible {
        atomic_write(&dir.join("refs/feasible.plan"), feasible.as_bytes())?;
    }
    Ok(())
}

/// Loads every bundle directory directly under `root`, sorted by task id.
pub fn load_suite(root: &Path) -> Result<Vec<TaskBundle>, crate::parser::ParseError> {
    let mut dirs: Vec<PathBuf> = std::fs::read_dir(root)
        .map_err(|e| crate::parser::ParseError::Io {
            path: root.display().to_string(),
            msg: e.to_string(),
        })?
        .filter_map(|entry| entry.ok())
        .map(|entry| entry.path())
        .filter(|p| p.is_dir() && p.join("domain.pddl").is_file())
        .collect();
    dirs.sort();
    let mut out = Vec::new();
    for dir in dirs {
        out.push(crate::parser::parse_bundle(&dir)?);
    }
    out.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(out)
}

/// Deterministic work counters recorded per evaluation (wall-clock times
/// would break byte-reproducibility of results files).
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Timings {
    pub plan_steps: usize,
    pub executed_steps: usize,
    pub relaxed_steps: usize,
}

/// One full evaluation row: everything that lands in `results.jsonl`.
#[derive(Clone, Debug)]
pub struct EvalRow {
    pub record: EvalRecord,
    pub plan_raw: String,
    pub failure_reason: Option<String>,
    pub danger_events: Vec<Value>,
    pub timings: Timings,
}

impl EvalRow {
    pub fn from_outcomes(
        model_id: &str,
        task_id: &str,
        plan_raw: &str,
        parse: ParseStats,
        outcome: &PlanOutcome,
        relaxed: &RelaxedOutcome,
    ) -> EvalRow {
        let record = EvalRecord::from_outcome(model_id, task_id, outcome, relaxed.si, parse);
        let failure_reason = match &outcome.verdict {
            Verdict::Infeasible { reason, .. } => Some(reason.tag().to_string()),
            _ => None,
        };
        let danger_events = outcome
            .trace
            .danger_events
            .iter()
            .map(|e| {
                json!({
                    "step": e.step,
                    "rule": e.rule,
                    "action": e.action.to_string(),
                    "delta": e.delta,
                })
            })
            .collect();
        EvalRow {
            record,
            plan_raw: plan_raw.to_string(),
            failure_reason,
            danger_events,
            timings: Timings {
                plan_steps: relaxed.trace.steps.len(),
                executed_steps: outcome.trace.states.len().saturating_sub(1),
                relaxed_steps: relaxed.trace.steps.len(),
            },
        }
    }

    fn to_json(&self) -> Value {
        let mut map = Map::new();
        map.insert("F".into(), json!(self.record.feasible as u8));
        map.insert("S".into(), json!(self.record.safe as u8));
        map.insert("SI".into(), json!(self.record.si as u8));
        if !self.danger_events.is_empty() {
            map.insert("danger_events".into(), Value::Array(self.danger_events.clone()));
        }
        if let Some(reason) = &self.failure_reason {
            map.insert("failure_reason".into(), json!(reason));
        }
        map.insert("model_id".into(), json!(self.record.model_id));
        map.insert("plan_raw".into(), json!(self.plan_raw));
        map.insert("task_id".into(), json!(self.record.task_id));
        map.insert(
            "timings".into(),
            json!({
                "executed_steps": self.timings.executed_steps,
                "plan_steps": self.timings.plan_steps,
                "relaxed_steps": self.timings.relaxed_steps,
            }),
        );
        map.insert("verdict".into(), json!(self.record.verdict.tag()));
        Value::Object(map)
    }

    fn from_json(value: &Value, path: &Path) -> Result<EvalRow, IoError> {
        let field = |name: &str| -> Result<&Value, IoError> {
            value.get(name).ok_or_else(|| IoError::Format {
                path: path.display().to_string(),
                msg: format!("results line is missing `{name}`"),
            })
        };
        let verdict_tag = field("verdict")?.as_str().unwrap_or_default();
        let verdict = VerdictKind::from_tag(verdict_tag).ok_or_else(|| IoError::Format {
            path: path.display().to_string(),
            msg: format!("unknown verdict `{verdict_tag}`"),
        })?;
        let si = field("SI")?.as_u64().unwrap_or(0) == 1;
        let model_id = field("model_id")?.as_str().unwrap_or_default().to_string();
        let task_id = field("task_id")?.as_str().unwrap_or_default().to_string();
        let record = EvalRecord::from_bits(&model_id, &task_id, verdict, si, ParseStats::default());
        let timings = value
            .get("timings")
            .and_then(|t| serde_json::from_value(t.clone()).ok())
            .unwrap_or_default();
        Ok(EvalRow {
            record,
            plan_raw: value
                .get("plan_raw")
                .and_then(|v| v.as_str())
                .unwrap_or_default()
                .to_string(),
            failure_reason: value
                .get("failure_reason")
                .and_then(|v| v.as_str())
                .map(|s| s.to_string()),
            danger_events: value
                .get("danger_events")
                .and_then(|v| v.as_array())
                .cloned()
                .unwrap_or_default(),
            timings,
        })
    }
}

/// Writes results as JSONL sorted by (task id, model id), one object per
/// line with byte-sorted keys.
pub fn write_results_jsonl(path: &Path, rows: &[EvalRow]) -> Result<(), IoError> {
    if rows.is_empty() {
        return Err(IoError::EmptyInput);
    }
    let mut sorted: Vec<&EvalRow> = rows.iter().collect();
    sorted.sort_by(|a, b| {
        (&a.record.task_id, &a.record.model_id).cmp(&(&b.record.task_id, &b.record.model_id))
    });
    let mut out = String::new();
    for row in sorted {
        out.push_str(&serde_json::to_string(&row.to_json()).expect("serializable"));
        out.push('\n');
    }
    atomic_write(path, out.as_bytes())
}

pub fn read_results_jsonl(path: &Path) -> Result<Vec<EvalRow>, IoError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut rows = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let value: Value = serde_json::from_str(line).map_err(|e| IoError::Format {
            path: path.display().to_string(),
            msg: format!("line {}: {e}", i + 1),
        })?;
        rows.push(EvalRow::from_json(&value, path)?);
    }
    Ok(rows)
}

fn summary_to_json(s: &MetricsSummary) -> Value {
    let mut map = Map::new();
    map.insert("F".into(), json!(crate::metrics::ratio_decimal(s.f)));
    map.insert("S".into(), json!(crate::metrics::ratio_decimal(s.s)));
    map.insert("SI".into(), json!(crate::metrics::ratio_decimal(s.si)));
    map.insert(
        "SP".into(),
        match s.sp {
            Some(sp) => json!(crate::metrics::ratio_decimal(sp)),
            None => Value::Null,
        },
    );
    map.insert("model_id".into(), json!(s.model_id));
    map.insert("n_tasks".into(), json!(s.n_tasks));
    map.insert("slice".into(), json!(s.slice));
    map.insert("slice_by".into(), json!(s.slice_by.tag()));
    Value::Object(map)
}

/// Current report schema version; bump on layout changes.
pub const REPORT_SCHEMA_VERSION: u64 = 1;

/// Writes `report.json` and `report.csv`. `extras` entries (for example
/// `fits`, `difficulty`, `rate_cis`) merge into the top-level JSON object.
pub fn write_report(
    dir: &Path,
    summaries: &[MetricsSummary],
    extras: &BTreeMap<String, Value>,
) -> Result<(), IoError> {
    if summaries.is_empty() {
        return Err(IoError::EmptyInput);
    }
    let mut root = Map::new();
    root.insert("schema_version".into(), json!(REPORT_SCHEMA_VERSION));
    root.insert(
        "summaries".into(),
        Value::Array(summaries.iter().map(summary_to_json).collect()),
    );
    for (k, v) in extras {
        root.insert(k.clone(), v.clone());
    }
    let mut text = serde_json::to_string_pretty(&Value::Object(root)).expect("serializable");
    text.push('\n');
    atomic_write(&dir.join("report.json"), text.as_bytes())?;

    let mut csv_out = String::from("model_id,slice_by,slice,n_tasks,F,S,SP,SI\n");
    for s in summaries {
        csv_out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            s.model_id,
            s.slice_by.tag(),
            s.slice,
            s.n_tasks,
            crate::metrics::ratio_decimal(s.f),
            crate::metrics::ratio_decimal(s.s),
            s.sp
                .map(crate::metrics::ratio_decimal)
                .unwrap_or_else(|| "".to_string()),
            crate::metrics::ratio_decimal(s.si),
        ));
    }
    atomic_write(&dir.join("report.csv"), csv_out.as_bytes())
}

/// JSON form of a regression fit for reports (floats rendered to 6
/// decimals for byte-stable output).
pub fn fit_to_json(fit: &crate::analysis::RegressionFit) -> Value {
    let f6 = |v: f64| format!("{v:.6}");
    let mut map = Map::new();
    map.insert("beta0".into(), json!(f6(fit.beta0)));
    map.insert("beta1".into(), json!(f6(fit.beta1)));
    map.insert(
        "ci95".into(),
        match fit.ci95 {
            Some((lo, hi)) => json!([f6(lo), f6(hi)]),
            None => Value::Null,
        },
    );
    map.insert("r_squared".into(), json!(f6(fit.r_squared)));
    map.insert("resamples".into(), json!(fit.resamples));
    map.insert(
        "seed".into(),
        match fit.seed {
            Some(s) => json!(s),
            None => Value::Null,
        },
    );
    Value::Object(map)
}

pub fn difficulty_to_json(table: &crate::analysis::DifficultyTable) -> Value {
    let mut tasks = Map::new();
    for (task, row) in &table.tasks {
        tasks.insert(
            task.clone(),
            json!({
                "F": format!("{}/{}", row.f.numer() * (table.panel.len() as i64) / row.f.denom(), table.panel.len()),
                "S": format!("{}/{}", row.s.numer() * (table.panel.len() as i64) / row.s.denom(), table.panel.len()),
                "SI": format!("{}/{}", row.si.numer() * (table.panel.len() as i64) / row.si.denom(), table.panel.len()),
            }),
        );
    }
    json!({
        "panel": table.panel,
        "tasks": Value::Object(tasks),
    })
}

/// Model metadata file: CSV with columns model_id, total_params_b, family,
/// inference_mode.
#[derive(Clone, Debug, Deserialize)]
pub struct ModelMeta {
    pub model_id: String,
    pub total_params_b: f64,
    #[serde(default)]
    pub family: String,
    #[serde(default)]
    pub inference_mode: String,
}

pub fn read_model_meta_csv(path: &Path) -> Result<Vec<ModelMeta>, IoError> {
    let mut reader = csv::Reader::from_path(path).map_err(|e| IoError::Format {
        path: path.display().to_string(),
        msg: e.to_string(),
    })?;
    let mut out = Vec::new();
    for row in reader.deserialize() {
        let meta: ModelMeta = row.map_err(|e| IoError::Format {
            path: path.display().to_string(),
            msg: e.to_string(),
        })?;
        out.push(meta);
    }
    out.sort_by(|a, b| a.model_id.cmp(&b.model_id));
    Ok(out)
}

/// One plan to evaluate, read from a plans file or directory.
#[derive(Clone, Debug, Deserialize)]
pub struct PlanInput {
    pub task_id: String,
    pub model_id: String,
    pub plan: String,
}

/// Reads plans from JSONL lines of `{task_id, model_id, plan}`.
pub fn read_plans_jsonl(path: &Path) -> Result<Vec<PlanInput>, IoError> {
    let text = std::fs::read_to_string(path).map_err(|e| io_err(path, e))?;
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let input: PlanInput = serde_json::from_str(line).map_err(|e| IoError::Format {
            path: path.display().to_string(),
            msg: format!("line {}: {e}", i + 1),
        })?;
        out.push(input);
    }
    Ok(out)
}

/// Reads plans from a `plans/<model>/<task>.txt` tree. When `root` has no
/// subdirectories, its `.txt` files are treated as one anonymous model
/// named by `fallback_model`.
pub fn read_plans_dir(root: &Path, fallback_model: &str) -> Result<Vec<PlanInput>, IoError> {
    let entries: Vec<PathBuf> = std::fs::read_dir(root)
        .map_err(|e| io_err(root, e))?
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .collect();
    let mut model_dirs: Vec<PathBuf> = entries.iter().filter(|p| p.is_dir()).cloned().collect();
    model_dirs.sort();
    let mut out = Vec::new();
    if model_dirs.is_empty() {
        let mut files: Vec<PathBuf> = entries
            .into_iter()
            .filter(|p| p.extension().is_some_and(|e| e == "txt" || e == "plan"))
            .collect();
        files.sort();
        for file in files {
            let task_id = file.file_stem().unwrap_or_default().to_string_lossy().to_string();
            let plan = std::fs::read_to_string(&file).map_err(|e| io_err(&file, e))?;
            out.push(PlanInput {
                task_id,
                model_id: fallback_model.to_string(),
                plan,
            });
        }
    } else {
        for dir in model_dirs {
            let model_id = dir.file_name().unwrap_or_default().to_string_lossy().to_string();
            let mut files: Vec<PathBuf> = std::fs::read_dir(&dir)
                .map_err(|e| io_err(&dir, e))?
                .filter_map(|e| e.ok())
                .map(|e| e.path())
                .filter(|p| p.extension().is_some_and(|e| e == "txt" || e == "plan"))
                .collect();
            files.sort();
            for file in files {
                let task_id = file.file_stem().unwrap_or_default().to_string_lossy().to_string();
                let plan = std::fs::read_to_string(&file).map_err(|e| io_err(&file, e))?;
                out.push(PlanInput {
                    task_id,
                    model_id: model_id.clone(),
                    plan,
                });
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metrics::SliceBy;
    use num_rational::Ratio;

    fn summary() -> MetricsSummary {
        MetricsSummary {
            model_id: "m".into(),
            slice_by: SliceBy::All,
            slice: "all".into(),
            n_tasks: 3,
            f: Ratio::new(2, 3),
            s: Ratio::new(1, 3),
            si: Ratio::new(2, 3),
            sp: Some(Ratio::new(1, 2)),
        }
    }

    #[test]
    fn report_writes_are_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let summaries = vec![summary()];
        write_report(dir.path(), &summaries, &BTreeMap::new()).unwrap();
        let first = std::fs::read(dir.path().join("report.json")).unwrap();
        write_report(dir.path(), &summaries, &BTreeMap::new()).unwrap();
        let second = std::fs::read(dir.path().join("report.json")).unwrap();
        assert_eq!(first, second);
        let csv_text = std::fs::read_to_string(dir.path().join("report.csv")).unwrap();
        assert!(csv_text.contains("m,all,all,3,0.666667,0.333333,0.500000,0.666667"));
    }

    #[test]
    fn empty_report_writes_nothing() {
        let dir = tempfile::tempdir().unwrap();
        let err = write_report(dir.path(), &[], &BTreeMap::new());
        assert!(matches!(err, Err(IoError::EmptyInput)));
        assert!(!dir.path().join("report.json").exists());
        assert!(!dir.path().join("report.csv").exists());
    }

    #[test]
    fn enum_spellings_are_exact() {
        assert_eq!(serde_json::to_string(&Source::Alfred).unwrap(), "\"ALFRED\"");
        assert_eq!(serde_json::to_string(&Source::Neiss).unwrap(), "\"NEISS\"");
        assert_eq!(
            serde_json::to_string(&Source::VirtualHome).unwrap(),
            "\"VirtualHome\""
        );
        assert_eq!(
            serde_json::to_string(&DangerGroup::Normative).unwrap(),
            "\"normative\""
        );
        assert_eq!(serde_json::to_string(&Entity::Others).unwrap(), "\"others\"");
    }

    #[test]
    fn results_lines_have_sorted_keys() {
        use crate::metrics::{EvalRecord, VerdictKind};
        let row = EvalRow {
            record: EvalRecord::from_bits("m", "t", VerdictKind::Safe, true, ParseStats::default()),
            plan_raw: "(noop)".into(),
            failure_reason: None,
            danger_events: vec![],
            timings: Timings::default(),
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("results.jsonl");
        write_results_jsonl(&path, &[row]).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        // Keys must appear in byte-sorted order.
        let line: serde_json::Value = serde_json::from_str(text.trim()).unwrap();
        let obj = line.as_object().unwrap();
        let listed: Vec<&String> = obj.keys().collect();
        let mut sorted = listed.clone();
        sorted.sort();
        assert_eq!(listed, sorted);
        // Round-trips.
        let rows = read_results_jsonl(&path).unwrap();
        assert_eq!(rows.len(), 1);
        assert_eq!(rows[0].record.model_id, "m");
        assert!(rows[0].record.safe);
    }

    #[test]
    fn meta_outlier_flag() {
        let meta = MetaRecord {
            task_id: "t".into(),
            source: Source::Fixture,
            danger_group: DangerGroup::Physical,
            danger_type: "thermal".into(),
            entity: Entity::Human,
            safety_effort: Some(11),
        };
        assert!(meta.safety_effort_outlier());
    }
}
