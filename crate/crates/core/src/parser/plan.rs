//! Lenient parsing of free-form model output into plans.
//!
//! Three surface forms make a line a candidate step, case-insensitive and
//! hyphen/underscore-equivalent:
//!
//! * `ACTION(a, b)` — call form
//! * `(action a b)` — s-expression form
//! * `action a b`   — bare form, only when the first word names a declared
//!   schema (otherwise the line is prose and ignored)
//!
//! Code fences and leading step numbering (`1.`, `2)`, `-`, `*`) are
//! stripped. Lines are additionally split on `;` so that `;`-joined plans
//! and trailing comments both behave. Candidate steps resolve to a ground
//! action when the name, arity, objects and types all check out; a known
//! name with bad parameters is `Malformed`; an unknown name in call or
//! s-expression form is `UnknownAction`. Parsing never fails: prose yields
//! no steps, garbage yields `Malformed` steps.

use crate::domain::{BasicProblem, DomainError, GroundAction};
use crate::ident::{is_valid_name, Ident};

/// Unparsed model output, tagged with its origin.
#[derive(Clone, Debug)]
pub struct RawPlanText {
    pub text: String,
    pub model_id: String,
    pub task_id: String,
    /// Set when plan acquisition failed; such plans are judged infeasible
    /// without execution.
    pub error: Option<String>,
}

impl RawPlanText {
    pub fn new(text: &str, model_id: &str, task_id: &str) -> RawPlanText {
        RawPlanText {
            text: text.to_string(),
            model_id: model_id.to_string(),
            task_id: task_id.to_string(),
            error: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum StepStatus {
    Resolved(GroundAction),
    UnknownAction { name: Ident },
    Malformed { why: String },
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PlanStep {
    /// 1-based step index within the plan.
    pub index: usize,
    /// 1-based source line in the raw text.
    pub line: usize,
    pub text: String,
    pub status: StepStatus,
}

#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Plan {
    pub steps: Vec<PlanStep>,
}

impl Plan {
    pub fn from_actions(actions: Vec<GroundAction>) -> Plan {
        Plan {
            steps: actions
                .into_iter()
                .enumerate()
                .map(|(i, ga)| PlanStep {
                    index: i + 1,
                    line: i + 1,
                    text: ga.to_string(),
                    status: StepStatus::Resolved(ga),
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// All steps as ground actions, or `None` if any step failed to resolve.
    pub fn resolved_actions(&self) -> Option<Vec<&GroundAction>> {
        self.steps
            .iter()
            .map(|s| match &s.status {
                StepStatus::Resolved(ga) => Some(ga),
                _ => None,
            })
            .collect()
    }

    /// Canonical text form, one `(action args)` line per step.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for step in &self.steps {
            match &step.status {
                StepStatus::Resolved(ga) => out.push_str(&ga.to_string()),
                _ => out.push_str(&step.text),
            }
            out.push('\n');
        }
        out
    }
}

/// Parses model output against a problem. Total: every input produces a
/// plan; each non-empty candidate line becomes exactly one step.
pub fn parse_plan(raw: &RawPlanText, problem: &BasicProblem) -> Plan {
    let mut steps = Vec::new();
    for (line_no, line) in raw.text.lines().enumerate() {
        let trimmed = line.trim();
        if trimmed.starts_with("```") {
            continue;
        }
        for segment in trimmed.split(';') {
            let cleaned = strip_decorations(segment);
            if cleaned.is_empty() {
                continue;
            }
            if let Some((name, args)) = candidate(cleaned, problem) {
                let status = resolve(&name, &args, problem);
                steps.push(PlanStep {
                    index: steps.len() + 1,
                    line: line_no + 1,
                    text: cleaned.to_string(),
                    status,
                });
            }
        }
    }
    Plan { steps }
}

/// Strips leading step numbering and list bullets: `1.`, `2)`, `-`, `*`.
fn strip_decorations(segment: &str) -> &str {
    let mut s = segment.trim();
    for _ in 0..3 {
        let before = s;
        s = s.trim_start_matches(['-', '*', '•']).trim_start();
        let digits = s.chars().take_while(|c| c.is_ascii_digit()).count();
        if digits > 0 {
            let rest = &s[digits..];
            if let Some(stripped) = rest.strip_prefix('.').or_else(|| rest.strip_prefix(')')) {
                s = stripped.trim_start();
            }
        }
        if s == before {
            break;
        }
    }
    s.trim_end_matches(['.', ',', ':']).trim()
}

/// Decides whether a cleaned segment is a candidate step, returning the raw
/// action name and argument words.
fn candidate(s: &str, problem: &BasicProblem) -> Option<(String, Vec<String>)> {
    // S-expression form.
    if let Some(inner) = s.strip_prefix('(') {
        let inner = inner.strip_suffix(')')?.trim();
        let mut words = split_words(inner);
        if words.is_empty() {
            return None;
        }
        let name = words.remove(0);
        return Some((name, words));
    }
    // Call form: NAME(args).
    if let Some(open) = s.find('(') {
        let name = s[..open].trim();
        let rest = s[open + 1..].trim();
        if let Some(args_str) = rest.strip_suffix(')') {
            if is_valid_name(name) {
                return Some((name.to_string(), split_words(args_str)));
            }
        }
        return None;
    }
    // Bare form: only when the first word names a declared schema.
    let words = split_words(s);
    let first = words.first()?;
    if !is_valid_name(first) {
        return None;
    }
    problem.domain.schema(&Ident::new(first))?;
    let mut words = words;
    let name = words.remove(0);
    Some((name, words))
}

fn split_words(s: &str) -> Vec<String> {
    s.split(|c: char| c.is_whitespace() || c == ',')
        .filter(|w| !w.is_empty())
        .map(|w| w.to_string())
        .collect()
}

fn resolve(name: &str, args: &[String], problem: &BasicProblem) -> StepStatus {
    if !is_valid_name(name) {
        return StepStatus::Malformed {
            why: format!("`{name}` is not a valid action name"),
        };
    }
    let schema = Ident::new(name);
    if problem.domain.schema(&schema).is_none() {
        return StepStatus::UnknownAction { name: schema };
    }
    let mut arg_idents = Vec::new();
    for a in args {
        if !is_valid_name(a) {
            return StepStatus::Malformed {
                why: format!("`{a}` is not a valid object name"),
            };
        }
        arg_idents.push(Ident::new(a));
    }
    match problem.ground(&schema, &arg_idents) {
        Ok(ga) => StepStatus::Resolved(ga),
        Err(DomainError::ArityMismatch { expected, got, .. }) => StepStatus::Malformed {
            why: format!("`{schema}` expects {expected} argument(s), got {got}"),
        },
        Err(DomainError::UnknownSymbol(obj)) => StepStatus::Malformed {
            why: format!("unknown object `{obj}`"),
        },
        Err(DomainError::TypeMismatch {
            object, expected, ..
        }) => StepStatus::Malformed {
            why: format!("`{object}` does not have type `{expected}`"),
        },
        Err(other) => StepStatus::Malformed {
            why: other.to_string(),
        },
    }
}
