//! Parsing of on-disk bundles and free-form plan text, plus prompt
//! rendering.
//!
//! The PDDL subset accepted here is documented in `docs/format.md`: typed
//! STRIPS, negative preconditions, one level of conditional effects, and
//! integer fluents. Disjunction, quantifiers and equality are rejected with
//! a spanned `UnsupportedConstruct` diagnostic rather than misparsed.

mod pddl;
mod plan;
mod render;
mod sexpr;

pub use plan::{parse_plan, Plan, PlanStep, RawPlanText, StepStatus};
pub use render::{audit_prompt, render_condition, render_domain, render_problem, render_prompt, AuditViolation};
pub use sexpr::{parse_all, Sexpr};

use crate::bundle::{DangerSpecFile, MetaRecord, ReferencePlans, TaskBundle};
use crate::domain::{compile_augmented, BasicProblem, BindingSlot, DangerRule, DomainError};
use crate::ident::Ident;
use crate::span::SourceSpan;
use std::collections::BTreeMap;
use std::path::Path;
use thiserror::Error;

#[derive(Debug, Error, Clone)]
pub enum ParseError {
    #[error("{span}: syntax error: {msg}")]
    Syntax { span: SourceSpan, msg: String },
    #[error("{span}: unsupported construct `{construct}`: {msg}")]
    UnsupportedConstruct {
        span: SourceSpan,
        construct: String,
        msg: String,
    },
    #[error("{span}: unknown symbol `{name}`")]
    UnknownSymbol { span: SourceSpan, name: String },
    #[error("{span}: the identifier `danger` is reserved")]
    ReservedFluentDeclared { span: SourceSpan },
    #[error("{file}: {err}")]
    Validation { file: String, err: DomainError },
    #[error("{path}: {msg}")]
    Io { path: String, msg: String },
}

impl ParseError {
    pub fn syntax(span: SourceSpan, msg: &str) -> ParseError {
        ParseError::Syntax {
            span,
            msg: msg.to_string(),
        }
    }

    pub fn unsupported(span: SourceSpan, construct: &str, msg: &str) -> ParseError {
        ParseError::UnsupportedConstruct {
            span,
            construct: construct.to_string(),
            msg: msg.to_string(),
        }
    }

    pub fn unknown(span: SourceSpan, name: &str) -> ParseError {
        ParseError::UnknownSymbol {
            span,
            name: name.to_string(),
        }
    }
}

/// Parses a PDDL domain from text.
pub fn parse_domain(text: &str, file: &str) -> Result<crate::domain::Domain, ParseError> {
    pddl::parse_domain(text, file)
}

/// Parses a PDDL problem against an already-parsed domain.
pub fn parse_problem(
    text: &str,
    file: &str,
    domain: &crate::domain::Domain,
) -> Result<BasicProblem, ParseError> {
    pddl::parse_problem(text, file, domain)
}

/// Parses a condition written in PDDL goal syntax, used for danger rule
/// conditions. `params` maps schema parameter names to their types.
pub fn parse_condition_str(
    text: &str,
    file: &str,
    domain: &crate::domain::Domain,
    params: &BTreeMap<Ident, Ident>,
    objects: &BTreeMap<Ident, Ident>,
) -> Result<crate::domain::Condition, ParseError> {
    pddl::parse_condition_str(text, file, domain, params, objects)
}

/// Loads and validates a task bundle directory: `domain.pddl`,
/// `problem.pddl`, `danger.json`, with optional `meta.json` and
/// `refs/{safe.plan, feasible.plan}`. Returns the compiled bundle with both
/// the basic and the safety-augmented problem.
pub fn parse_bundle(dir: &Path) -> Result<TaskBundle, ParseError> {
    let read = |name: &str| -> Result<String, ParseError> {
        let path = dir.join(name);
        std::fs::read_to_string(&path).map_err(|e| ParseError::Io {
            path: path.display().to_string(),
            msg: e.to_string(),
        })
    };

    let domain_text = read("domain.pddl")?;
    let problem_text = read("problem.pddl")?;
    let danger_text = read("danger.json")?;

    let domain = parse_domain(&domain_text, "domain.pddl")?;
    let basic = parse_problem(&problem_text, "problem.pddl", &domain)?;

    let spec: DangerSpecFile =
        serde_json::from_str(&danger_text).map_err(|e| ParseError::Io {
            path: dir.join("danger.json").display().to_string(),
            msg: format!("invalid JSON: {e}"),
        })?;
    let rules = resolve_danger_spec(&spec, &basic)?;

    let augmented = compile_augmented(&basic, &rules, spec.d_init, spec.d_max).map_err(|err| {
        match err {
            DomainError::ReservedFluentDeclared => ParseError::ReservedFluentDeclared {
                span: SourceSpan::new("domain.pddl", 1, 1, 1),
            },
            err => ParseError::Validation {
                file: "danger.json".to_string(),
                err,
            },
        }
    })?;

    let meta = match std::fs::read_to_string(dir.join("meta.json")) {
        Ok(text) => Some(
            serde_json::from_str::<MetaRecord>(&text).map_err(|e| ParseError::Io {
                path: dir.join("meta.json").display().to_string(),
                msg: format!("invalid JSON: {e}"),
            })?,
        ),
        Err(_) => None,
    };

    let refs = ReferencePlans {
        safe: std::fs::read_to_string(dir.join("refs/safe.plan")).ok(),
        feasible: std::fs::read_to_string(dir.join("refs/feasible.plan")).ok(),
    };

    let id = meta
        .as_ref()
        .map(|m| m.task_id.clone())
        .or_else(|| dir.file_name().map(|n| n.to_string_lossy().to_string()))
        .unwrap_or_else(|| "task".to_string());

    Ok(TaskBundle {
        id,
        basic,
        augmented,
        meta,
        refs,
    })
}

/// Resolves the serde form of danger.json into typed rules, parsing each
/// condition in the scope of its schema's parameters.
pub fn resolve_danger_spec(
    spec: &DangerSpecFile,
    basic: &BasicProblem,
) -> Result<Vec<DangerRule>, ParseError> {
    let json_span = || SourceSpan::new("danger.json", 1, 1, 1);
    let objects: BTreeMap<Ident, Ident> = basic
        .objects
        .iter()
        .map(|o| (o.name.clone(), o.ty.clone()))
        .collect();

    let mut rules = Vec::new();
    for raw in &spec.rules {
        if !crate::ident::is_valid_name(&raw.action) {
            return Err(ParseError::unknown(json_span(), &raw.action));
        }
        let action = Ident::new(&raw.action);
        let schema = basic
            .domain
            .schema(&action)
            .ok_or_else(|| ParseError::unknown(json_span(), &raw.action))?;
        let params: BTreeMap<Ident, Ident> = schema
            .params
            .iter()
            .map(|p| (p.name.clone(), p.ty.clone()))
            .collect();

        let mut binding = Vec::new();
        for slot in &raw.binding {
            if slot == "*" {
                binding.push(BindingSlot::Any);
            } else if crate::ident::is_valid_name(slot) {
                binding.push(BindingSlot::Object(Ident::new(slot)));
            } else {
                return Err(ParseError::unknown(json_span(), slot));
            }
        }

        let condition =
            parse_condition_str(&raw.condition, "danger.json", &basic.domain, &params, &objects)?;

        rules.push(DangerRule {
            action,
            binding,
            condition,
            delta: raw.delta,
        });
    }
    Ok(rules)
}
