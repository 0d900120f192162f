//! Diagnostics for the constructs the grammar deliberately excludes, and
//! for cross-reference failures in bundles.

use planguard_core::parser::{parse_bundle, parse_domain, ParseError};
use std::path::Path;

const MINI_DOMAIN: &str = "(define (domain mini)
  (:types thing - object)
  (:predicates (seen ?t - thing) (lit ?t - thing))
  (:action look
    :parameters (?t - thing)
    :precondition (and)
    :effect (and (seen ?t))
  )
)";

const MINI_PROBLEM: &str = "(define (problem mini1)
  (:domain mini)
  (:objects lamp - thing)
  (:init (lit lamp))
  (:goal (and (seen lamp)))
)";

fn write_bundle_dir(dir: &Path, domain: &str, problem: &str, danger: &str) {
    std::fs::write(dir.join("domain.pddl"), domain).unwrap();
    std::fs::write(dir.join("problem.pddl"), problem).unwrap();
    std::fs::write(dir.join("danger.json"), danger).unwrap();
}

#[test]
fn disjunctive_precondition_is_unsupported() {
    let text = MINI_DOMAIN.replace(
        ":precondition (and)",
        ":precondition (or (lit ?t) (seen ?t))",
    );
    match parse_domain(&text, "domain.pddl") {
        Err(ParseError::UnsupportedConstruct { construct, span, .. }) => {
            assert_eq!(construct, "or");
            assert!(span.line > 1);
        }
        other => panic!("expected UnsupportedConstruct, got {other:?}"),
    }
}

#[test]
fn quantifiers_and_equality_are_unsupported() {
    for bad in [
        ":precondition (exists (?u - thing) (seen ?u))",
        ":precondition (forall (?u - thing) (seen ?u))",
        ":precondition (= ?t ?t)",
        ":precondition (not (and (seen ?t)))",
    ] {
        let text = MINI_DOMAIN.replace(":precondition (and)", bad);
        assert!(
            matches!(
                parse_domain(&text, "domain.pddl"),
                Err(ParseError::UnsupportedConstruct { .. })
            ),
            "{bad} must be rejected"
        );
    }
}

#[test]
fn nested_conditional_effects_are_rejected() {
    let text = MINI_DOMAIN.replace(
        ":effect (and (seen ?t))",
        ":effect (when (lit ?t) (when (seen ?t) (seen ?t)))",
    );
    assert!(matches!(
        parse_domain(&text, "domain.pddl"),
        Err(ParseError::UnsupportedConstruct { construct, .. }) if construct == "when"
    ));
}

#[test]
fn unknown_symbols_carry_spans() {
    let text = MINI_DOMAIN.replace(":effect (and (seen ?t))", ":effect (and (vanish ?t))");
    match parse_domain(&text, "domain.pddl") {
        Err(ParseError::UnknownSymbol { name, span }) => {
            assert_eq!(name, "vanish");
            assert_eq!(span.file, "domain.pddl");
        }
        other => panic!("expected UnknownSymbol, got {other:?}"),
    }
}

#[test]
fn reserved_danger_declaration_is_rejected() {
    let text = MINI_DOMAIN.replace("(lit ?t - thing)", "(danger)");
    assert!(matches!(
        parse_domain(&text, "domain.pddl"),
        Err(ParseError::ReservedFluentDeclared { .. })
    ));
}

#[test]
fn danger_rule_naming_absent_action_is_unknown() {
    let dir = tempfile::tempdir().unwrap();
    write_bundle_dir(
        dir.path(),
        MINI_DOMAIN,
        MINI_PROBLEM,
        r#"{"rules":[{"action":"fly","binding":[],"condition":"(and)","delta":1}]}"#,
    );
    match parse_bundle(dir.path()) {
        Err(ParseError::UnknownSymbol { name, .. }) => assert_eq!(name, "fly"),
        other => panic!("expected UnknownSymbol, got {other:?}"),
    }
}

#[test]
fn danger_condition_is_parsed_in_schema_scope() {
    let dir = tempfile::tempdir().unwrap();
    // ?missing is not a parameter of `look`.
    write_bundle_dir(
        dir.path(),
        MINI_DOMAIN,
        MINI_PROBLEM,
        r#"{"rules":[{"action":"look","binding":["*"],"condition":"(lit ?missing)","delta":1}]}"#,
    );
    assert!(parse_bundle(dir.path()).is_err());

    write_bundle_dir(
        dir.path(),
        MINI_DOMAIN,
        MINI_PROBLEM,
        r#"{"rules":[{"action":"look","binding":["*"],"condition":"(lit ?t)","delta":1}]}"#,
    );
    let bundle = parse_bundle(dir.path()).unwrap();
    assert_eq!(bundle.augmented.rules.len(), 1);
}

#[test]
fn binding_arity_mismatch_is_reported() {
    let dir = tempfile::tempdir().unwrap();
    write_bundle_dir(
        dir.path(),
        MINI_DOMAIN,
        MINI_PROBLEM,
        r#"{"rules":[{"action":"look","binding":["lamp","lamp"],"condition":"(and)","delta":1}]}"#,
    );
    let err = parse_bundle(dir.path()).unwrap_err();
    assert!(err.to_string().contains("binding arity"), "{err}");
}

#[test]
fn conflicting_fluent_init_is_rejected() {
    let domain = MINI_DOMAIN.replace(
        "(:predicates",
        "(:functions (level ?t - thing))\n  (:predicates",
    );
    let problem = MINI_PROBLEM.replace(
        "(:init (lit lamp))",
        "(:init (= (level lamp) 1) (= (level lamp) 2))",
    );
    let dir = tempfile::tempdir().unwrap();
    write_bundle_dir(dir.path(), &domain, &problem, r#"{"rules":[]}"#);
    let err = parse_bundle(dir.path()).unwrap_err();
    assert!(err.to_string().contains("conflicting"), "{err}");
}

#[test]
fn missing_files_are_io_errors() {
    let dir = tempfile::tempdir().unwrap();
    assert!(matches!(
        parse_bundle(dir.path()),
        Err(ParseError::Io { .. })
    ));
}
