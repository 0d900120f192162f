//! Readers for the supported PDDL subset.

use crate::domain::{
    ActionSchema, AtomTemplate, BasicProblem, CmpOp, Condition, ConditionalEffect, Conjunct,
    Domain, Effect, FluentRef, GroundAtom, GroundFluent, Literal, NumericComparison,
    NumericFluentDecl, ObjectDecl, Param, PredicateDecl, State, Term, TypeDecl, OBJECT_TYPE,
};
use crate::ident::Ident;
use crate::parser::sexpr::{parse_all, Sexpr};
use crate::parser::ParseError;
use std::collections::BTreeMap;

struct CondScope<'a> {
    domain: &'a Domain,
    /// Parameter name -> type; `None` means variables are not allowed here.
    params: Option<&'a BTreeMap<Ident, Ident>>,
    /// Object name -> type; `None` means object constants are not allowed
    /// here (domain files cannot see problem objects).
    objects: Option<&'a BTreeMap<Ident, Ident>>,
}

pub fn parse_domain(text: &str, file: &str) -> Result<Domain, ParseError> {
    let exprs = parse_all(text, file)?;
    let top = single_define(&exprs, file, "domain")?;

    let head = top
        .first()
        .and_then(|e| e.as_list())
        .ok_or_else(|| ParseError::syntax(span_of(top, file), "expected (domain NAME)"))?;
    expect_keyword(head, 0, "domain")?;
    let name = sym_ident(head.get(1), head, file)?;

    let mut domain = Domain {
        name,
        types: Vec::new(),
        predicates: Vec::new(),
        fluents: Vec::new(),
        schemas: Vec::new(),
    };

    for section in &top[1..] {
        let items = section
            .as_list()
            .ok_or_else(|| ParseError::syntax(section.span().clone(), "expected a (:section ...)"))?;
        let key = items
            .first()
            .and_then(|e| e.as_sym())
            .ok_or_else(|| ParseError::syntax(section.span().clone(), "expected a section keyword"))?;
        match key.to_ascii_lowercase().as_str() {
            ":requirements" => {} // accepted and ignored
            ":types" => {
                for (name_expr, name, parent) in typed_entries(&items[1..], false)? {
                    if name.as_str() == OBJECT_TYPE {
                        return Err(ParseError::syntax(
                            name_expr.span().clone(),
                            "`object` is the built-in root type and cannot be redeclared",
                        ));
                    }
                    check_not_reserved(&name, name_expr)?;
                    let parent = parent.filter(|p| p.as_str() != OBJECT_TYPE);
                    domain.types.push(TypeDecl { name, parent });
                }
            }
            ":predicates" => {
                for entry in &items[1..] {
                    let (name, params) = parse_sig(entry)?;
                    domain.predicates.push(PredicateDecl { name, params });
                }
            }
            ":functions" => {
                for entry in &items[1..] {
                    let (name, params) = parse_sig(entry)?;
                    domain.fluents.push(NumericFluentDecl { name, params });
                }
            }
            ":action" => {
                domain.schemas.push(parse_action(items, file, &domain)?);
            }
            other => {
                return Err(ParseError::unsupported(
                    section.span().clone(),
                    other,
                    "this section is outside the supported subset",
                ))
            }
        }
    }

    domain.validate().map_err(|err| ParseError::Validation {
        file: file.to_string(),
        err,
    })?;
    Ok(domain)
}

pub fn parse_problem(
    text: &str,
    file: &str,
    domain: &Domain,
) -> Result<BasicProblem, ParseError> {
    let exprs = parse_all(text, file)?;
    let top = single_define(&exprs, file, "problem")?;

    let head = top
        .first()
        .and_then(|e| e.as_list())
        .ok_or_else(|| ParseError::syntax(span_of(top, file), "expected (problem NAME)"))?;
    expect_keyword(head, 0, "problem")?;
    let name = sym_ident(head.get(1), head, file)?;

    let mut objects: Vec<ObjectDecl> = Vec::new();
    let mut init = State::default();
    let mut goal: Option<Condition> = None;
    let mut domain_ref: Option<Ident> = None;

    for section in &top[1..] {
        let items = section
            .as_list()
            .ok_or_else(|| ParseError::syntax(section.span().clone(), "expected a (:section ...)"))?;
        let key = items
            .first()
            .and_then(|e| e.as_sym())
            .ok_or_else(|| ParseError::syntax(section.span().clone(), "expected a section keyword"))?;
        match key.to_ascii_lowercase().as_str() {
            ":domain" => {
                domain_ref = Some(sym_ident(items.get(1), items, file)?);
            }
            ":objects" => {
                for (name_expr, name, ty) in typed_entries(&items[1..], false)? {
                    check_not_reserved(&name, name_expr)?;
                    objects.push(ObjectDecl {
                        name,
                        ty: ty.unwrap_or_else(|| Ident::new(OBJECT_TYPE)),
                    });
                }
            }
            ":init" => {
                parse_init(&items[1..], domain, &objects, &mut init)?;
            }
            ":goal" => {
                let body = items.get(1).ok_or_else(|| {
                    ParseError::syntax(section.span().clone(), "missing goal condition")
                })?;
                let object_types: BTreeMap<Ident, Ident> = objects
                    .iter()
                    .map(|o| (o.name.clone(), o.ty.clone()))
                    .collect();
                let scope = CondScope {
                    domain,
                    params: None,
                    objects: Some(&object_types),
                };
                goal = Some(parse_condition(body, &scope)?);
            }
            other => {
                return Err(ParseError::unsupported(
                    section.span().clone(),
                    other,
                    "this section is outside the supported subset",
                ))
            }
        }
    }

    if let Some(d) = &domain_ref {
        if d != &domain.name {
            return Err(ParseError::syntax(
                span_of(top, file),
                &format!(
                    "problem references domain `{d}` but the domain file defines `{}`",
                    domain.name
                ),
            ));
        }
    }
    let goal = goal
        .ok_or_else(|| ParseError::syntax(span_of(top, file), "problem is missing a (:goal ...)"))?;

    let problem = BasicProblem {
        name,
        domain: domain.clone(),
        objects,
        init,
        goal,
    };
    problem.validate().map_err(|err| ParseError::Validation {
        file: file.to_string(),
        err,
    })?;
    Ok(problem)
}

pub fn parse_condition_str(
    text: &str,
    file: &str,
    domain: &Domain,
    params: &BTreeMap<Ident, Ident>,
    objects: &BTreeMap<Ident, Ident>,
) -> Result<Condition, ParseError> {
    let exprs = parse_all(text, file)?;
    let scope = CondScope {
        domain,
        params: Some(params),
        objects: Some(objects),
    };
    match exprs.len() {
        0 => Ok(Condition::default()),
        1 => parse_condition(&exprs[0], &scope),
        _ => {
            // Accept a bare sequence of conjuncts.
            let mut cond = Condition::default();
            for e in &exprs {
                cond.conjuncts.extend(parse_condition(e, &scope)?.conjuncts);
            }
            Ok(cond)
        }
    }
}

fn single_define<'a>(
    exprs: &'a [Sexpr],
    file: &str,
    what: &str,
) -> Result<&'a [Sexpr], ParseError> {
    if exprs.len() != 1 {
        return Err(ParseError::syntax(
            crate::span::SourceSpan::new(file, 1, 1, 1),
            &format!("expected exactly one (define ({what} ...)) form"),
        ));
    }
    let items = exprs[0]
        .as_list()
        .ok_or_else(|| ParseError::syntax(exprs[0].span().clone(), "expected (define ...)"))?;
    match items.first().and_then(|e| e.as_sym()) {
        Some(s) if s.eq_ignore_ascii_case("define") => Ok(&items[1..]),
        _ => Err(ParseError::syntax(
            exprs[0].span().clone(),
            "expected (define ...)",
        )),
    }
}

fn span_of(items: &[Sexpr], file: &str) -> crate::span::SourceSpan {
    items
        .first()
        .map(|e| e.span().clone())
        .unwrap_or_else(|| crate::span::SourceSpan::new(file, 1, 1, 1))
}

fn expect_keyword(items: &[Sexpr], idx: usize, word: &str) -> Result<(), ParseError> {
    match items.get(idx).and_then(|e| e.as_sym()) {
        Some(s) if s.eq_ignore_ascii_case(word) => Ok(()),
        _ => Err(ParseError::syntax(
            span_of(items, "?"),
            &format!("expected `{word}`"),
        )),
    }
}

fn sym_ident(expr: Option<&Sexpr>, ctx: &[Sexpr], file: &str) -> Result<Ident, ParseError> {
    match expr {
        Some(Sexpr::Sym(s, _)) => Ok(Ident::new(s)),
        Some(other) => Err(ParseError::syntax(other.span().clone(), "expected a name")),
        None => Err(ParseError::syntax(span_of(ctx, file), "expected a name")),
    }
}

fn check_not_reserved(name: &Ident, at: &Sexpr) -> Result<(), ParseError> {
    if name.is_reserved() {
        Err(ParseError::ReservedFluentDeclared {
            span: at.span().clone(),
        })
    } else {
        Ok(())
    }
}

/// Parses `name name - type name - type` groups. Returns each entry with the
/// expression it was declared by (for spans) and its optional type.
type TypedEntry<'a> = (&'a Sexpr, Ident, Option<Ident>);

fn typed_entries(items: &[Sexpr], expect_vars: bool) -> Result<Vec<TypedEntry<'_>>, ParseError> {
    let mut out: Vec<(&Sexpr, Ident, Option<Ident>)> = Vec::new();
    let mut pending: Vec<(&Sexpr, Ident)> = Vec::new();
    let mut i = 0;
    while i < items.len() {
        let item = &items[i];
        let sym = item.as_sym().ok_or_else(|| {
            ParseError::syntax(item.span().clone(), "expected a name in typed list")
        })?;
        if sym == "-" {
            let ty = items
                .get(i + 1)
                .and_then(|e| e.as_sym())
                .ok_or_else(|| ParseError::syntax(item.span().clone(), "expected a type after `-`"))?;
            let ty = Ident::new(ty);
            for (expr, name) in pending.drain(..) {
                out.push((expr, name, Some(ty.clone())));
            }
            i += 2;
            continue;
        }
        let is_var = sym.starts_with('?');
        if expect_vars != is_var {
            let want = if expect_vars { "a ?variable" } else { "a name" };
            return Err(ParseError::syntax(
                item.span().clone(),
                &format!("expected {want}, got `{sym}`"),
            ));
        }
        let raw = sym.trim_start_matches('?');
        if !crate::ident::is_valid_name(raw) {
            return Err(ParseError::syntax(
                item.span().clone(),
                &format!("`{sym}` is not a valid name"),
            ));
        }
        pending.push((item, Ident::new(raw)));
        i += 1;
    }
    for (expr, name) in pending {
        out.push((expr, name, None));
    }
    Ok(out)
}

/// Parses `(name ?p - type ...)` signature forms for predicates/functions.
fn parse_sig(entry: &Sexpr) -> Result<(Ident, Vec<Param>), ParseError> {
    let items = entry
        .as_list()
        .ok_or_else(|| ParseError::syntax(entry.span().clone(), "expected (name params...)"))?;
    let name_sym = items
        .first()
        .and_then(|e| e.as_sym())
        .ok_or_else(|| ParseError::syntax(entry.span().clone(), "expected a name"))?;
    let name = Ident::new(name_sym);
    check_not_reserved(&name, &items[0])?;
    let mut params = Vec::new();
    for (_, pname, ty) in typed_entries(&items[1..], true)? {
        params.push(Param {
            name: pname,
            ty: ty.unwrap_or_else(|| Ident::new(OBJECT_TYPE)),
        });
    }
    Ok((name, params))
}

fn parse_action(items: &[Sexpr], file: &str, domain: &Domain) -> Result<ActionSchema, ParseError> {
    let name = sym_ident(items.get(1), items, file)?;
    check_not_reserved(&name, &items[1])?;

    let mut params: Vec<Param> = Vec::new();
    let mut precondition = Condition::default();
    let mut effects: Vec<Effect> = Vec::new();
    let mut i = 2;
    while i < items.len() {
        let key = items[i].as_sym().ok_or_else(|| {
            ParseError::syntax(items[i].span().clone(), "expected :parameters/:precondition/:effect")
        })?;
        let value = items.get(i + 1).ok_or_else(|| {
            ParseError::syntax(items[i].span().clone(), &format!("`{key}` needs a value"))
        })?;
        match key.to_ascii_lowercase().as_str() {
            ":parameters" => {
                let list = value.as_list().ok_or_else(|| {
                    ParseError::syntax(value.span().clone(), "expected (?v - type ...)")
                })?;
                for (_, pname, ty) in typed_entries(list, true)? {
                    params.push(Param {
                        name: pname,
                        ty: ty.unwrap_or_else(|| Ident::new(OBJECT_TYPE)),
                    });
                }
            }
            ":precondition" => {
                let param_types: BTreeMap<Ident, Ident> = params
                    .iter()
                    .map(|p| (p.name.clone(), p.ty.clone()))
                    .collect();
                let scope = CondScope {
                    domain,
                    params: Some(&param_types),
                    objects: None,
                };
                precondition = parse_condition(value, &scope)?;
            }
            ":effect" => {
                let param_types: BTreeMap<Ident, Ident> = params
                    .iter()
                    .map(|p| (p.name.clone(), p.ty.clone()))
                    .collect();
                let scope = CondScope {
                    domain,
                    params: Some(&param_types),
                    objects: None,
                };
                effects = parse_effects(value, &scope, true)?;
            }
            other => {
                return Err(ParseError::syntax(
                    items[i].span().clone(),
                    &format!("unknown action key `{other}`"),
                ))
            }
        }
        i += 2;
    }

    Ok(ActionSchema {
        name,
        params,
        precondition,
        effects,
    })
}

fn parse_init(
    entries: &[Sexpr],
    domain: &Domain,
    objects: &[ObjectDecl],
    init: &mut State,
) -> Result<(), ParseError> {
    let object_types: BTreeMap<Ident, Ident> = objects
        .iter()
        .map(|o| (o.name.clone(), o.ty.clone()))
        .collect();
    for entry in entries {
        let items = entry
            .as_list()
            .ok_or_else(|| ParseError::syntax(entry.span().clone(), "expected (pred ...) or (= (fluent ...) N)"))?;
        let head = items
            .first()
            .and_then(|e| e.as_sym())
            .ok_or_else(|| ParseError::syntax(entry.span().clone(), "expected a predicate or `=`"))?;
        if head == "=" {
            let fluent_expr = items
                .get(1)
                .and_then(|e| e.as_list())
                .ok_or_else(|| ParseError::syntax(entry.span().clone(), "expected (= (fluent args) N)"))?;
            let value = match items.get(2) {
                Some(Sexpr::Int(v, _)) => *v,
                _ => {
                    return Err(ParseError::syntax(
                        entry.span().clone(),
                        "expected an integer initial value",
                    ))
                }
            };
            let fname = sym_ident(fluent_expr.first(), fluent_expr, "problem.pddl")?;
            if domain.numeric_fluent(&fname).is_none() {
                return Err(ParseError::unknown(
                    fluent_expr[0].span().clone(),
                    fname.as_str(),
                ));
            }
            let mut args = Vec::new();
            for a in &fluent_expr[1..] {
                args.push(init_object(a, &object_types)?);
            }
            let key = GroundFluent {
                fluent: fname,
                args,
            };
            if let Some(prev) = init.fluents.insert(key.clone(), value) {
                if prev != value {
                    return Err(ParseError::syntax(
                        entry.span().clone(),
                        &format!("conflicting initial values for {key}"),
                    ));
                }
            }
        } else if head.eq_ignore_ascii_case("not") {
            return Err(ParseError::unsupported(
                entry.span().clone(),
                "not",
                "initial states are closed-world; omit false atoms",
            ));
        } else {
            let pname = Ident::new(head);
            if domain.predicate(&pname).is_none() {
                return Err(ParseError::unknown(items[0].span().clone(), head));
            }
            let mut args = Vec::new();
            for a in &items[1..] {
                args.push(init_object(a, &object_types)?);
            }
            init.atoms.insert(GroundAtom { pred: pname, args });
        }
    }
    Ok(())
}

fn init_object(
    expr: &Sexpr,
    objects: &BTreeMap<Ident, Ident>,
) -> Result<Ident, ParseError> {
    let sym = expr
        .as_sym()
        .ok_or_else(|| ParseError::syntax(expr.span().clone(), "expected an object name"))?;
    if sym.starts_with('?') {
        return Err(ParseError::syntax(
            expr.span().clone(),
            "variables are not allowed in the initial state",
        ));
    }
    let name = Ident::new(sym);
    if !objects.contains_key(&name) {
        return Err(ParseError::unknown(expr.span().clone(), sym));
    }
    Ok(name)
}

const UNSUPPORTED_CONNECTIVES: &[&str] = &["or", "exists", "forall", "imply", "oneof"];

fn parse_condition(expr: &Sexpr, scope: &CondScope) -> Result<Condition, ParseError> {
    let mut cond = Condition::default();
    collect_conjuncts(expr, scope, &mut cond)?;
    Ok(cond)
}

fn collect_conjuncts(
    expr: &Sexpr,
    scope: &CondScope,
    out: &mut Condition,
) -> Result<(), ParseError> {
    let items = expr
        .as_list()
        .ok_or_else(|| ParseError::syntax(expr.span().clone(), "expected a condition"))?;
    let head = match items.first() {
        None => return Ok(()), // `()` is the empty conjunction
        Some(h) => h,
    };
    let head_sym = head
        .as_sym()
        .ok_or_else(|| ParseError::syntax(head.span().clone(), "expected a condition head"))?;
    let lowered = head_sym.to_ascii_lowercase();

    if UNSUPPORTED_CONNECTIVES.contains(&lowered.as_str()) {
        return Err(ParseError::unsupported(
            expr.span().clone(),
            &lowered,
            "only conjunctions of literals and comparisons are supported",
        ));
    }
    match lowered.as_str() {
        "and" => {
            for sub in &items[1..] {
                collect_conjuncts(sub, scope, out)?;
            }
            Ok(())
        }
        "not" => {
            let inner = items.get(1).ok_or_else(|| {
                ParseError::syntax(expr.span().clone(), "`not` needs an argument")
            })?;
            let inner_items = inner
                .as_list()
                .ok_or_else(|| ParseError::syntax(inner.span().clone(), "expected an atom"))?;
            let inner_head = inner_items.first().and_then(|e| e.as_sym()).unwrap_or("");
            let inner_lower = inner_head.to_ascii_lowercase();
            if inner_lower == "and"
                || inner_lower == "not"
                || UNSUPPORTED_CONNECTIVES.contains(&inner_lower.as_str())
                || is_cmp_op(&inner_lower)
            {
                return Err(ParseError::unsupported(
                    expr.span().clone(),
                    "not",
                    "negation applies to atoms only",
                ));
            }
            let atom = parse_atom(inner, scope)?;
            out.conjuncts.push(Conjunct::Lit(Literal {
                atom,
                positive: false,
            }));
            Ok(())
        }
        op if is_cmp_op(op) => {
            out.conjuncts
                .push(Conjunct::Cmp(parse_comparison(expr, scope)?));
            Ok(())
        }
        "when" => Err(ParseError::unsupported(
            expr.span().clone(),
            "when",
            "conditional constructs cannot appear inside conditions",
        )),
        _ => {
            let atom = parse_atom(expr, scope)?;
            out.conjuncts.push(Conjunct::Lit(Literal {
                atom,
                positive: true,
            }));
            Ok(())
        }
    }
}

fn is_cmp_op(s: &str) -> bool {
    matches!(s, "<" | "<=" | "=" | ">=" | ">")
}

fn cmp_op(s: &str) -> CmpOp {
    match s {
        "<" => CmpOp::Lt,
        "<=" => CmpOp::Le,
        "=" => CmpOp::Eq,
        ">=" => CmpOp::Ge,
        ">" => CmpOp::Gt,
        _ => unreachable!("checked by is_cmp_op"),
    }
}

fn parse_comparison(expr: &Sexpr, scope: &CondScope) -> Result<NumericComparison, ParseError> {
    let items = expr.as_list().expect("caller checked");
    let op_sym = items[0].as_sym().expect("caller checked");
    let lhs = items.get(1).ok_or_else(|| {
        ParseError::syntax(expr.span().clone(), "comparison needs a fluent term")
    })?;
    let lhs_items = match lhs {
        Sexpr::List(l, _) => l,
        Sexpr::Sym(s, span) => {
            // `(= a b)` style equality over terms is outside the subset.
            return Err(ParseError::unsupported(
                span.clone(),
                "=",
                &format!("`{s}` is not a fluent term; equality over objects is not supported"),
            ));
        }
        Sexpr::Int(_, span) => {
            return Err(ParseError::syntax(
                span.clone(),
                "comparisons must have the fluent on the left",
            ))
        }
    };
    let value = match items.get(2) {
        Some(Sexpr::Int(v, _)) => *v,
        Some(other) => {
            return Err(ParseError::unsupported(
                other.span().clone(),
                op_sym,
                "comparisons are against integer constants only",
            ))
        }
        None => {
            return Err(ParseError::syntax(
                expr.span().clone(),
                "comparison needs an integer right-hand side",
            ))
        }
    };
    let fluent = parse_fluent_ref(lhs_items, expr, scope)?;
    Ok(NumericComparison {
        fluent,
        op: cmp_op(op_sym),
        value,
    })
}

fn parse_fluent_ref(
    items: &[Sexpr],
    ctx: &Sexpr,
    scope: &CondScope,
) -> Result<FluentRef, ParseError> {
    let name_sym = items
        .first()
        .and_then(|e| e.as_sym())
        .ok_or_else(|| ParseError::syntax(ctx.span().clone(), "expected a fluent name"))?;
    let name = Ident::new(name_sym);
    let decl = scope
        .domain
        .numeric_fluent(&name)
        .ok_or_else(|| ParseError::unknown(items[0].span().clone(), name_sym))?;
    if decl.params.len() != items.len() - 1 {
        return Err(ParseError::syntax(
            ctx.span().clone(),
            &format!(
                "`{name}` expects {} argument(s), got {}",
                decl.params.len(),
                items.len() - 1
            ),
        ));
    }
    let mut args = Vec::new();
    for a in &items[1..] {
        args.push(parse_term(a, scope)?);
    }
    Ok(FluentRef { fluent: name, args })
}

fn parse_atom(expr: &Sexpr, scope: &CondScope) -> Result<AtomTemplate, ParseError> {
    let items = expr
        .as_list()
        .ok_or_else(|| ParseError::syntax(expr.span().clone(), "expected an atom"))?;
    let name_sym = items
        .first()
        .and_then(|e| e.as_sym())
        .ok_or_else(|| ParseError::syntax(expr.span().clone(), "expected a predicate name"))?;
    let name = Ident::new(name_sym);
    let decl = scope
        .domain
        .predicate(&name)
        .ok_or_else(|| ParseError::unknown(items[0].span().clone(), name_sym))?;
    if decl.params.len() != items.len() - 1 {
        return Err(ParseError::syntax(
            expr.span().clone(),
            &format!(
                "`{name}` expects {} argument(s), got {}",
                decl.params.len(),
                items.len() - 1
            ),
        ));
    }
    let mut args = Vec::new();
    for a in &items[1..] {
        args.push(parse_term(a, scope)?);
    }
    Ok(AtomTemplate { pred: name, args })
}

fn parse_term(expr: &Sexpr, scope: &CondScope) -> Result<Term, ParseError> {
    let sym = expr
        .as_sym()
        .ok_or_else(|| ParseError::syntax(expr.span().clone(), "expected a term"))?;
    if let Some(var) = sym.strip_prefix('?') {
        let name = Ident::new(var);
        match scope.params {
            Some(params) if params.contains_key(&name) => Ok(Term::Var(name)),
            Some(_) => Err(ParseError::syntax(
                expr.span().clone(),
                &format!("variable `{sym}` is not bound by the action parameters"),
            )),
            None => Err(ParseError::syntax(
                expr.span().clone(),
                "variables are not allowed here",
            )),
        }
    } else {
        let name = Ident::new(sym);
        match scope.objects {
            Some(objects) if objects.contains_key(&name) => Ok(Term::Obj(name)),
            _ => Err(ParseError::unknown(expr.span().clone(), sym)),
        }
    }
}

fn parse_effects(
    expr: &Sexpr,
    scope: &CondScope,
    allow_conditional: bool,
) -> Result<Vec<Effect>, ParseError> {
    let items = expr
        .as_list()
        .ok_or_else(|| ParseError::syntax(expr.span().clone(), "expected an effect"))?;
    let head = match items.first().and_then(|e| e.as_sym()) {
        None => return Ok(Vec::new()), // `()` empty effect
        Some(h) => h,
    };
    let lowered = head.to_ascii_lowercase();
    match lowered.as_str() {
        "and" => {
            let mut out = Vec::new();
            for sub in &items[1..] {
                out.extend(parse_effects(sub, scope, allow_conditional)?);
            }
            Ok(out)
        }
        "not" => {
            let inner = items.get(1).ok_or_else(|| {
                ParseError::syntax(expr.span().clone(), "`not` needs an argument")
            })?;
            Ok(vec![Effect::Del(parse_atom(inner, scope)?)])
        }
        "increase" | "decrease" | "assign" => {
            let fluent_expr = items
                .get(1)
                .and_then(|e| e.as_list())
                .ok_or_else(|| ParseError::syntax(expr.span().clone(), "expected a fluent term"))?;
            let fname = fluent_expr.first().and_then(|e| e.as_sym()).unwrap_or("");
            if Ident::new(fname).is_reserved() {
                return Err(ParseError::ReservedFluentDeclared {
                    span: fluent_expr[0].span().clone(),
                });
            }
            let amount = match items.get(2) {
                Some(Sexpr::Int(v, _)) => *v,
                Some(other) => {
                    return Err(ParseError::unsupported(
                        other.span().clone(),
                        &lowered,
                        "numeric effects take integer constants only",
                    ))
                }
                None => {
                    return Err(ParseError::syntax(
                        expr.span().clone(),
                        "numeric effect needs a value",
                    ))
                }
            };
            let fr = parse_fluent_ref(fluent_expr, expr, scope)?;
            Ok(vec![match lowered.as_str() {
                "increase" => Effect::Increase(fr, amount),
                "decrease" => Effect::Decrease(fr, amount),
                _ => Effect::Assign(fr, amount),
            }])
        }
        "when" => {
            if !allow_conditional {
                return Err(ParseError::unsupported(
                    expr.span().clone(),
                    "when",
                    "conditional effects nest at most one level",
                ));
            }
            let cond_expr = items.get(1).ok_or_else(|| {
                ParseError::syntax(expr.span().clone(), "`when` needs a condition")
            })?;
            let eff_expr = items.get(2).ok_or_else(|| {
                ParseError::syntax(expr.span().clone(), "`when` needs an effect")
            })?;
            let condition = parse_condition(cond_expr, scope)?;
            let effects = parse_effects(eff_expr, scope, false)?;
            Ok(vec![Effect::Conditional(ConditionalEffect {
                condition,
                effects,
                danger_rule: None,
            })])
        }
        op if UNSUPPORTED_CONNECTIVES.contains(&op) => Err(ParseError::unsupported(
            expr.span().clone(),
            op,
            "effects are conjunctions of literals, numeric updates and `when`",
        )),
        _ => Ok(vec![Effect::Add(parse_atom(expr, scope)?)]),
    }
}
