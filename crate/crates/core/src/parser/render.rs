//! Rendering of basic problems back to PDDL text, prompt payload
//! generation, and the danger-disclosure audit.
//!
//! `render_prompt` emits the basic problem only: domain declarations,
//! initial state (context fluents included), goal, and action schemas with
//! preconditions and effects. Nothing unique to the danger specification
//! can reach the output; `audit_prompt` checks that property on the final
//! string, so it also covers prompts wrapped in templates.

use crate::domain::{
    AtomTemplate, AugmentedProblem, BasicProblem, BindingSlot, Condition, Conjunct, Domain,
    Effect, FluentRef, Term, OBJECT_TYPE,
};
use crate::ident::Ident;
use crate::bundle::TaskBundle;
use std::collections::BTreeSet;
use std::fmt::Write;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("prompt leaks danger-specification token `{token}`")]
pub struct AuditViolation {
    pub token: String,
}

pub fn render_domain(domain: &Domain) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "(define (domain {})", domain.name);
    if !domain.types.is_empty() {
        let _ = writeln!(out, "  (:types");
        for t in &domain.types {
            // Untyped entries in a PDDL typed list attach to the next
            // `- type` group, so the root parent is always explicit.
            let parent = t.parent.clone().unwrap_or_else(|| Ident::new(OBJECT_TYPE));
            let _ = writeln!(out, "    {} - {}", t.name, parent);
        }
        let _ = writeln!(out, "  )");
    }
    if !domain.predicates.is_empty() {
        let _ = writeln!(out, "  (:predicates");
        for p in &domain.predicates {
            let _ = writeln!(out, "    {}", render_sig(&p.name.to_string(), &p.params));
        }
        let _ = writeln!(out, "  )");
    }
    if !domain.fluents.is_empty() {
        let _ = writeln!(out, "  (:functions");
        for f in &domain.fluents {
            let _ = writeln!(out, "    {}", render_sig(&f.name.to_string(), &f.params));
        }
        let _ = writeln!(out, "  )");
    }
    for schema in &domain.schemas {
        let _ = writeln!(out, "  (:action {}", schema.name);
        let params = schema
            .params
            .iter()
            .map(|p| format!("?{} - {}", p.name, p.ty))
            .collect::<Vec<_>>()
            .join(" ");
        let _ = writeln!(out, "    :parameters ({params})");
        let _ = writeln!(out, "    :precondition {}", render_condition(&schema.precondition));
        let _ = writeln!(out, "    :effect {}", render_effects(&schema.effects));
        let _ = writeln!(out, "  )");
    }
    out.push_str(")\n");
    out
}

pub fn render_problem(problem: &BasicProblem) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "(define (problem {})", problem.name);
    let _ = writeln!(out, "  (:domain {})", problem.domain.name);
    if !problem.objects.is_empty() {
        let _ = writeln!(out, "  (:objects");
        for o in &problem.objects {
            let _ = writeln!(out, "    {} - {}", o.name, o.ty);
        }
        let _ = writeln!(out, "  )");
    }
    let _ = writeln!(out, "  (:init");
    for atom in &problem.init.atoms {
        let _ = writeln!(out, "    {atom}");
    }
    for (key, value) in &problem.init.fluents {
        let _ = writeln!(out, "    (= {key} {value})");
    }
    let _ = writeln!(out, "  )");
    let _ = writeln!(out, "  (:goal {})", render_condition(&problem.goal));
    out.push_str(")\n");
    out
}

/// The prompt payload for a bundle: the basic problem, and only the basic
/// problem. Re-parsing the output yields a structurally equal problem.
pub fn render_prompt(bundle: &TaskBundle) -> String {
    let mut out = render_domain(&bundle.basic.domain);
    out.push('\n');
    out.push_str(&render_problem(&bundle.basic));
    out
}

fn render_sig(name: &str, params: &[crate::domain::Param]) -> String {
    let mut s = format!("({name}");
    for p in params {
        let _ = write!(s, " ?{} - {}", p.name, p.ty);
    }
    s.push(')');
    s
}

fn render_term(t: &Term) -> String {
    t.to_string()
}

fn render_atom_template(a: &AtomTemplate) -> String {
    let mut s = format!("({}", a.pred);
    for t in &a.args {
        let _ = write!(s, " {}", render_term(t));
    }
    s.push(')');
    s
}

fn render_fluent_ref(f: &FluentRef) -> String {
    let mut s = format!("({}", f.fluent);
    for t in &f.args {
        let _ = write!(s, " {}", render_term(t));
    }
    s.push(')');
    s
}

pub fn render_condition(cond: &Condition) -> String {
    let mut s = String::from("(and");
    for c in &cond.conjuncts {
        s.push(' ');
        match c {
            Conjunct::Lit(lit) => {
                if lit.positive {
                    s.push_str(&render_atom_template(&lit.atom));
                } else {
                    let _ = write!(s, "(not {})", render_atom_template(&lit.atom));
                }
            }
            Conjunct::Cmp(cmp) => {
                let _ = write!(
                    s,
                    "({} {} {})",
                    cmp.op.symbol(),
                    render_fluent_ref(&cmp.fluent),
                    cmp.value
                );
            }
            Conjunct::ParamIs { var, object } => {
                let _ = write!(s, "(= ?{var} {object})");
            }
        }
    }
    s.push(')');
    s
}

fn render_effects(effects: &[Effect]) -> String {
    let mut s = String::from("(and");
    for e in effects {
        s.push(' ');
        s.push_str(&render_effect(e));
    }
    s.push(')');
    s
}

fn render_effect(e: &Effect) -> String {
    match e {
        Effect::Add(a) => render_atom_template(a),
        Effect::Del(a) => format!("(not {})", render_atom_template(a)),
        Effect::Assign(f, v) => format!("(assign {} {v})", render_fluent_ref(f)),
        Effect::Increase(f, v) => format!("(increase {} {v})", render_fluent_ref(f)),
        Effect::Decrease(f, v) => format!("(decrease {} {v})", render_fluent_ref(f)),
        Effect::Conditional(ce) => format!(
            "(when {} {})",
            render_condition(&ce.condition),
            render_effects(&ce.effects)
        ),
    }
}

/// Lowercased identifier/number tokens of a text, with `-` folded to `_`
/// inside words.
fn tokens_of(text: &str) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    let mut cur = String::new();
    for c in text.chars() {
        if c.is_ascii_alphanumeric() || c == '_' || c == '-' {
            cur.push(if c == '-' { '_' } else { c.to_ascii_lowercase() });
        } else if !cur.is_empty() {
            out.insert(std::mem::take(&mut cur));
        }
    }
    if !cur.is_empty() {
        out.insert(cur);
    }
    out
}

/// Every token the danger specification contributes: rule actions, binding
/// objects, condition symbols and constants, deltas, and the thresholds.
fn danger_tokens(augmented: &AugmentedProblem) -> BTreeSet<String> {
    let mut out = BTreeSet::new();
    out.insert(crate::ident::RESERVED_DANGER.to_string());
    out.extend(tokens_of(&augmented.d_init.to_string()));
    out.extend(tokens_of(&augmented.d_max.to_string()));
    for rule in &augmented.rules {
        out.insert(rule.action.to_string());
        for slot in &rule.binding {
            if let BindingSlot::Object(o) = slot {
                out.insert(o.to_string());
            }
        }
        out.extend(tokens_of(&render_condition(&rule.condition)));
        out.extend(tokens_of(&rule.delta.to_string()));
    }
    out.remove("and");
    out
}

/// Checks that `prompt` contains no token that occurs only in the danger
/// specification, and never the word `danger` itself. Context fluents that
/// the basic problem legitimately mentions (for example an atom used both in
/// the initial state and in a danger condition) are allowed through.
pub fn audit_prompt(bundle: &TaskBundle, prompt: &str) -> Result<(), AuditViolation> {
    let basic_tokens = {
        let mut t = tokens_of(&render_domain(&bundle.basic.domain));
        t.extend(tokens_of(&render_problem(&bundle.basic)));
        t
    };
    let prompt_tokens = tokens_of(prompt);

    if prompt
        .to_ascii_lowercase()
        .replace('-', "_")
        .contains(crate::ident::RESERVED_DANGER)
    {
        return Err(AuditViolation {
            token: crate::ident::RESERVED_DANGER.to_string(),
        });
    }
    for token in danger_tokens(&bundle.augmented) {
        if !basic_tokens.contains(&token) && prompt_tokens.contains(&token) {
            return Err(AuditViolation { token });
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gen::fixtures::knife_bundle;

    #[test]
    fn prompt_contains_context_but_not_danger() {
        let bundle = knife_bundle();
        let prompt = render_prompt(&bundle);
        assert!(prompt.contains("child_near"));
        assert!(!prompt.to_ascii_lowercase().contains("danger"));
        audit_prompt(&bundle, &prompt).unwrap();
    }

    #[test]
    fn audit_catches_leaked_word() {
        let bundle = knife_bundle();
        let mut prompt = render_prompt(&bundle);
        prompt.push_str("\n; avoid the danger\n");
        assert!(audit_prompt(&bundle, &prompt).is_err());
    }

    #[test]
    fn prompt_identical_with_and_without_rules() {
        let bundle = knife_bundle();
        let no_rules = crate::bundle::TaskBundle::compile(
            &bundle.id,
            bundle.basic.clone(),
            vec![],
            0,
            0,
        )
        .unwrap();
        assert_eq!(render_prompt(&bundle), render_prompt(&no_rules));
    }
}
