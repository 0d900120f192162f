//! Symbolic vocabulary of safety-augmented planning problems.
//!
//! The supported logic is typed STRIPS with negative preconditions, one
//! level of conditional effects, and bounded-integer fluents with
//! `assign`/`increase`/`decrease` effects and linear comparisons against
//! constants. A basic problem compiles into a safety-augmented problem by
//! injecting, per danger rule, a conditional effect that adds the rule's
//! delta to the reserved `danger` counter, and by extending the goal with
//! `danger <= d_max`. Injected effects write only the danger counter and
//! the counter never occurs in preconditions or user effects, so goal
//! satisfaction ignoring the danger conjunct is identical under both
//! problems.
//!
//! All types are immutable after construction and safe to share across
//! threads.

use crate::ident::Ident;
use serde::{Deserialize, Serialize};
use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use thiserror::Error;

/// Name of the built-in root type.
pub const OBJECT_TYPE: &str = "object";

/// Largest magnitude accepted for `d_init` / `d_max`.
pub const MAX_DANGER_BOUND: i64 = 1_000_000_000;

/// Largest magnitude accepted for a danger rule delta.
pub const MAX_DANGER_DELTA: i64 = 1_000_000;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum DomainError {
    #[error("unknown type `{0}`")]
    UnknownType(Ident),
    #[error("type hierarchy contains a cycle through `{0}`")]
    TypeCycle(Ident),
    #[error("duplicate declaration of `{0}`")]
    DuplicateName(Ident),
    #[error("the identifier `danger` is reserved for the compiler")]
    ReservedFluentDeclared,
    #[error("unknown symbol `{0}`")]
    UnknownSymbol(Ident),
    #[error("unknown action schema `{0}`")]
    UnknownSchema(Ident),
    #[error("`{name}` expects {expected} argument(s), got {got}")]
    ArityMismatch {
        name: Ident,
        expected: usize,
        got: usize,
    },
    #[error("`{object}` has type `{actual}`, which is not a subtype of `{expected}`")]
    TypeMismatch {
        object: Ident,
        actual: Ident,
        expected: Ident,
    },
    #[error("variable `?{0}` is not bound by the action parameters")]
    UnboundVariable(Ident),
    #[error("conditional effects may not nest")]
    NestedConditional,
    #[error("danger rule for `{action}` has binding arity {got}, schema expects {expected}")]
    BindingArityMismatch {
        action: Ident,
        expected: usize,
        got: usize,
    },
    #[error("danger rule delta must be nonzero")]
    ZeroDelta,
    #[error("danger bound {0} exceeds the configured limit")]
    DangerBoundExceeded(i64),
}

/// A declared type; `parent` of `None` means the built-in `object` root.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TypeDecl {
    pub name: Ident,
    pub parent: Option<Ident>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ObjectDecl {
    pub name: Ident,
    pub ty: Ident,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Param {
    pub name: Ident,
    pub ty: Ident,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PredicateDecl {
    pub name: Ident,
    pub params: Vec<Param>,
}

/// Integer-valued state variable declaration.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NumericFluentDecl {
    pub name: Ident,
    pub params: Vec<Param>,
}

/// A term is either an action parameter or an object constant.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord)]
pub enum Term {
    Var(Ident),
    Obj(Ident),
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Term::Var(v) => write!(f, "?{v}"),
            Term::Obj(o) => write!(f, "{o}"),
        }
    }
}

/// A possibly-lifted predicate application.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AtomTemplate {
    pub pred: Ident,
    pub args: Vec<Term>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Literal {
    pub atom: AtomTemplate,
    pub positive: bool,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CmpOp {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

impl CmpOp {
    pub fn eval(self, lhs: i64, rhs: i64) -> bool {
        match self {
            CmpOp::Lt => lhs < rhs,
            CmpOp::Le => lhs <= rhs,
            CmpOp::Eq => lhs == rhs,
            CmpOp::Ge => lhs >= rhs,
            CmpOp::Gt => lhs > rhs,
        }
    }

    pub fn symbol(self) -> &'static str {
        match self {
            CmpOp::Lt => "<",
            CmpOp::Le => "<=",
            CmpOp::Eq => "=",
            CmpOp::Ge => ">=",
            CmpOp::Gt => ">",
        }
    }
}

/// A possibly-lifted numeric fluent reference.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct FluentRef {
    pub fluent: Ident,
    pub args: Vec<Term>,
}

/// Linear comparison of a fluent term against an integer constant.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct NumericComparison {
    pub fluent: FluentRef,
    pub op: CmpOp,
    pub value: i64,
}

/// One conjunct of a condition. `ParamIs` is compiler-internal: it restricts
/// an injected danger effect to a rule's binding and never appears in parsed
/// input or rendered prompts.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Conjunct {
    Lit(Literal),
    Cmp(NumericComparison),
    ParamIs { var: Ident, object: Ident },
}

/// Pure conjunction; no disjunction, no quantifiers.
#[derive(Clone, Debug, PartialEq, Eq, Default)]
pub struct Condition {
    pub conjuncts: Vec<Conjunct>,
}

impl Condition {
    pub fn is_empty(&self) -> bool {
        self.conjuncts.is_empty()
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Effect {
    Add(AtomTemplate),
    Del(AtomTemplate),
    Assign(FluentRef, i64),
    Increase(FluentRef, i64),
    Decrease(FluentRef, i64),
    Conditional(ConditionalEffect),
}

/// Conditional effect; `danger_rule` is `Some(rule index)` exactly when the
/// compiler injected it from a danger rule.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConditionalEffect {
    pub condition: Condition,
    pub effects: Vec<Effect>,
    pub danger_rule: Option<usize>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ActionSchema {
    pub name: Ident,
    pub params: Vec<Param>,
    pub precondition: Condition,
    pub effects: Vec<Effect>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Domain {
    pub name: Ident,
    pub types: Vec<TypeDecl>,
    pub predicates: Vec<PredicateDecl>,
    pub fluents: Vec<NumericFluentDecl>,
    pub schemas: Vec<ActionSchema>,
}

/// A ground boolean atom held in a state.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroundAtom {
    pub pred: Ident,
    pub args: Vec<Ident>,
}

impl fmt::Display for GroundAtom {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.pred)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")
    }
}

/// A ground numeric fluent key.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct GroundFluent {
    pub fluent: Ident,
    pub args: Vec<Ident>,
}

impl fmt::Display for GroundFluent {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.fluent)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")
    }
}

/// A fully instantiated action.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct GroundAction {
    pub schema: Ident,
    pub args: Vec<Ident>,
}

impl fmt::Display for GroundAction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}", self.schema)?;
        for a in &self.args {
            write!(f, " {a}")?;
        }
        write!(f, ")")
    }
}

/// A grounded world snapshot. `danger` is populated only during augmented
/// execution; basic execution leaves it `None`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct State {
    pub atoms: BTreeSet<GroundAtom>,
    pub fluents: BTreeMap<GroundFluent, i64>,
    pub danger: Option<i64>,
}

impl State {
    /// Numeric fluents default to 0 until first assigned.
    pub fn fluent_value(&self, key: &GroundFluent) -> i64 {
        self.fluents.get(key).copied().unwrap_or(0)
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BasicProblem {
    pub name: Ident,
    pub domain: Domain,
    pub objects: Vec<ObjectDecl>,
    pub init: State,
    pub goal: Condition,
}

/// One slot of a danger rule binding: a concrete object or "any".
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum BindingSlot {
    Object(Ident),
    Any,
}

/// Schema-level danger specification: executing a matching ground action in
/// a state satisfying `condition` adds `delta` to the danger counter.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DangerRule {
    pub action: Ident,
    pub binding: Vec<BindingSlot>,
    pub condition: Condition,
    pub delta: i64,
}

/// The safety-augmented problem: the basic problem plus danger rules
/// compiled into conditional effects, the initial danger value, and the
/// safety threshold appended to the goal as `danger <= d_max`.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AugmentedProblem {
    pub basic: BasicProblem,
    pub rules: Vec<DangerRule>,
    pub d_init: i64,
    pub d_max: i64,
    augmented_domain: Domain,
}

impl Domain {
    pub fn schema(&self, name: &Ident) -> Option<&ActionSchema> {
        self.schemas.iter().find(|s| &s.name == name)
    }

    pub fn predicate(&self, name: &Ident) -> Option<&PredicateDecl> {
        self.predicates.iter().find(|p| &p.name == name)
    }

    pub fn numeric_fluent(&self, name: &Ident) -> Option<&NumericFluentDecl> {
        self.fluents.iter().find(|f| &f.name == name)
    }

    fn type_parent(&self, ty: &Ident) -> Option<&TypeDecl> {
        self.types.iter().find(|t| &t.name == ty)
    }

    /// True when `child` equals `parent` or descends from it through the
    /// type tree. Every declared type descends from the built-in `object`.
    pub fn is_subtype(&self, child: &Ident, parent: &Ident) -> bool {
        if parent.as_str() == OBJECT_TYPE {
            return true;
        }
        let mut cur = child.clone();
        loop {
            if &cur == parent {
                return true;
            }
            match self.type_parent(&cur).and_then(|t| t.parent.clone()) {
                Some(p) => cur = p,
                None => return false,
            }
        }
    }

    /// Structural validation: tree-shaped types, unique names, declared
    /// symbols, bound variables, single-level conditionals, and no use of
    /// the reserved danger identifier.
    pub fn validate(&self) -> Result<(), DomainError> {
        let mut names: BTreeSet<Ident> = BTreeSet::new();
        for t in &self.types {
            if t.name.as_str() == OBJECT_TYPE || !names.insert(t.name.clone()) {
                return Err(DomainError::DuplicateName(t.name.clone()));
            }
            if t.name.is_reserved() {
                return Err(DomainError::ReservedFluentDeclared);
            }
        }
        for t in &self.types {
            if let Some(parent) = &t.parent {
                if parent.as_str() != OBJECT_TYPE && self.type_parent(parent).is_none() {
                    return Err(DomainError::UnknownType(parent.clone()));
                }
            }
            // Walk to the root; revisiting the start means a cycle.
            let mut seen = BTreeSet::new();
            let mut cur = t.name.clone();
            while let Some(parent) = self.type_parent(&cur).and_then(|d| d.parent.clone()) {
                if !seen.insert(cur.clone()) {
                    return Err(DomainError::TypeCycle(t.name.clone()));
                }
                cur = parent;
            }
            if seen.contains(&cur) {
                return Err(DomainError::TypeCycle(t.name.clone()));
            }
        }

        let mut symbols: BTreeSet<Ident> = BTreeSet::new();
        for p in &self.predicates {
            if p.name.is_reserved() {
                return Err(DomainError::ReservedFluentDeclared);
            }
            if !symbols.insert(p.name.clone()) {
                return Err(DomainError::DuplicateName(p.name.clone()));
            }
            for param in &p.params {
                self.check_type_exists(&param.ty)?;
            }
        }
        for fl in &self.fluents {
            if fl.name.is_reserved() {
                return Err(DomainError::ReservedFluentDeclared);
            }
            if !symbols.insert(fl.name.clone()) {
                return Err(DomainError::DuplicateName(fl.name.clone()));
            }
            for param in &fl.params {
                self.check_type_exists(&param.ty)?;
            }
        }

        let mut schema_names: BTreeSet<Ident> = BTreeSet::new();
        for schema in &self.schemas {
            if schema.name.is_reserved() {
                return Err(DomainError::ReservedFluentDeclared);
            }
            if !schema_names.insert(schema.name.clone()) {
                return Err(DomainError::DuplicateName(schema.name.clone()));
            }
            let mut param_names: BTreeSet<Ident> = BTreeSet::new();
            for param in &schema.params {
                self.check_type_exists(&param.ty)?;
                if !param_names.insert(param.name.clone()) {
                    return Err(DomainError::DuplicateName(param.name.clone()));
                }
            }
            self.check_condition(&schema.precondition, &param_names, None)?;
            for eff in &schema.effects {
                self.check_effect(eff, &param_names, false)?;
            }
        }
        Ok(())
    }

    fn check_type_exists(&self, ty: &Ident) -> Result<(), DomainError> {
        if ty.as_str() == OBJECT_TYPE || self.type_parent(ty).is_some() {
            Ok(())
        } else {
            Err(DomainError::UnknownType(ty.clone()))
        }
    }

    /// Checks a condition in the scope of `params`; object terms must name a
    /// member of `objects` when one is supplied (conditions inside a domain
    /// file cannot reference objects, which live in the problem file).
    pub fn check_condition(
        &self,
        cond: &Condition,
        params: &BTreeSet<Ident>,
        objects: Option<&BTreeSet<Ident>>,
    ) -> Result<(), DomainError> {
        for conjunct in &cond.conjuncts {
            match conjunct {
                Conjunct::Lit(lit) => {
                    let decl = self
                        .predicate(&lit.atom.pred)
                        .ok_or_else(|| DomainError::UnknownSymbol(lit.atom.pred.clone()))?;
                    if decl.params.len() != lit.atom.args.len() {
                        return Err(DomainError::ArityMismatch {
                            name: lit.atom.pred.clone(),
                            expected: decl.params.len(),
                            got: lit.atom.args.len(),
                        });
                    }
                    for term in &lit.atom.args {
                        self.check_term(term, params, objects)?;
                    }
                }
                Conjunct::Cmp(cmp) => {
                    let decl = self
                        .numeric_fluent(&cmp.fluent.fluent)
                        .ok_or_else(|| DomainError::UnknownSymbol(cmp.fluent.fluent.clone()))?;
                    if decl.params.len() != cmp.fluent.args.len() {
                        return Err(DomainError::ArityMismatch {
                            name: cmp.fluent.fluent.clone(),
                            expected: decl.params.len(),
                            got: cmp.fluent.args.len(),
                        });
                    }
                    for term in &cmp.fluent.args {
                        self.check_term(term, params, objects)?;
                    }
                }
                Conjunct::ParamIs { var, .. } => {
                    if !params.contains(var) {
                        return Err(DomainError::UnboundVariable(var.clone()));
                    }
                }
            }
        }
        Ok(())
    }

    fn check_term(
        &self,
        term: &Term,
        params: &BTreeSet<Ident>,
        objects: Option<&BTreeSet<Ident>>,
    ) -> Result<(), DomainError> {
        match term {
            Term::Var(v) => {
                if params.contains(v) {
                    Ok(())
                } else {
                    Err(DomainError::UnboundVariable(v.clone()))
                }
            }
            Term::Obj(o) => match objects {
                Some(known) if known.contains(o) => Ok(()),
                Some(_) => Err(DomainError::UnknownSymbol(o.clone())),
                None => Err(DomainError::UnknownSymbol(o.clone())),
            },
        }
    }

    fn check_effect(
        &self,
        effect: &Effect,
        params: &BTreeSet<Ident>,
        inside_conditional: bool,
    ) -> Result<(), DomainError> {
        match effect {
            Effect::Add(atom) | Effect::Del(atom) => {
                let decl = self
                    .predicate(&atom.pred)
                    .ok_or_else(|| DomainError::UnknownSymbol(atom.pred.clone()))?;
                if decl.params.len() != atom.args.len() {
                    return Err(DomainError::ArityMismatch {
                        name: atom.pred.clone(),
                        expected: decl.params.len(),
                        got: atom.args.len(),
                    });
                }
                for term in &atom.args {
                    self.check_term(term, params, None)?;
                }
                Ok(())
            }
            Effect::Assign(fr, _) | Effect::Increase(fr, _) | Effect::Decrease(fr, _) => {
                if fr.fluent.is_reserved() {
                    return Err(DomainError::ReservedFluentDeclared);
                }
                let decl = self
                    .numeric_fluent(&fr.fluent)
                    .ok_or_else(|| DomainError::UnknownSymbol(fr.fluent.clone()))?;
                if decl.params.len() != fr.args.len() {
                    return Err(DomainError::ArityMismatch {
                        name: fr.fluent.clone(),
                        expected: decl.params.len(),
                        got: fr.args.len(),
                    });
                }
                for term in &fr.args {
                    self.check_term(term, params, None)?;
                }
                Ok(())
            }
            Effect::Conditional(ce) => {
                if inside_conditional {
                    return Err(DomainError::NestedConditional);
                }
                self.check_condition(&ce.condition, params, None)?;
                for sub in &ce.effects {
                    self.check_effect(sub, params, true)?;
                }
                Ok(())
            }
        }
    }

    /// True when any effect in the domain writes the danger counter; used to
    /// reject re-compilation of an already-augmented domain.
    fn mentions_danger(&self) -> bool {
        fn effect_mentions(e: &Effect) -> bool {
            match e {
                Effect::Assign(fr, _) | Effect::Increase(fr, _) | Effect::Decrease(fr, _) => {
                    fr.fluent.is_reserved()
                }
                Effect::Conditional(ce) => {
                    ce.danger_rule.is_some() || ce.effects.iter().any(effect_mentions)
                }
                _ => false,
            }
        }
        self.schemas
            .iter()
            .any(|s| s.effects.iter().any(effect_mentions))
    }
}

impl BasicProblem {
    pub fn object(&self, name: &Ident) -> Option<&ObjectDecl> {
        self.objects.iter().find(|o| &o.name == name)
    }

    pub fn object_names(&self) -> BTreeSet<Ident> {
        self.objects.iter().map(|o| o.name.clone()).collect()
    }

    /// Objects whose type equals `ty` or descends from it, in declaration
    /// order.
    pub fn objects_of_type(&self, ty: &Ident) -> Vec<&ObjectDecl> {
        self.objects
            .iter()
            .filter(|o| self.domain.is_subtype(&o.ty, ty))
            .collect()
    }

    /// Instantiates a schema with concrete objects, checking arity and that
    /// each argument's type is the parameter type or a descendant.
    pub fn ground(&self, schema: &Ident, args: &[Ident]) -> Result<GroundAction, DomainError> {
        let decl = self
            .domain
            .schema(schema)
            .ok_or_else(|| DomainError::UnknownSchema(schema.clone()))?;
        if decl.params.len() != args.len() {
            return Err(DomainError::ArityMismatch {
                name: schema.clone(),
                expected: decl.params.len(),
                got: args.len(),
            });
        }
        for (param, arg) in decl.params.iter().zip(args) {
            let obj = self
                .object(arg)
                .ok_or_else(|| DomainError::UnknownSymbol(arg.clone()))?;
            if !self.domain.is_subtype(&obj.ty, &param.ty) {
                return Err(DomainError::TypeMismatch {
                    object: arg.clone(),
                    actual: obj.ty.clone(),
                    expected: param.ty.clone(),
                });
            }
        }
        Ok(GroundAction {
            schema: decl.name.clone(),
            args: args.to_vec(),
        })
    }

    /// Full validation of the problem on top of domain validation: declared
    /// object types, init only over declared symbols, ground goal.
    pub fn validate(&self) -> Result<(), DomainError> {
        self.domain.validate()?;
        let mut names: BTreeSet<Ident> = BTreeSet::new();
        for obj in &self.objects {
            if obj.name.is_reserved() {
                return Err(DomainError::ReservedFluentDeclared);
            }
            if !names.insert(obj.name.clone()) {
                return Err(DomainError::DuplicateName(obj.name.clone()));
            }
            self.domain.check_type_exists(&obj.ty)?;
        }
        if self.init.danger.is_some() {
            return Err(DomainError::ReservedFluentDeclared);
        }
        for atom in &self.init.atoms {
            let decl = self
                .domain
                .predicate(&atom.pred)
                .ok_or_else(|| DomainError::UnknownSymbol(atom.pred.clone()))?;
            if decl.params.len() != atom.args.len() {
                return Err(DomainError::ArityMismatch {
                    name: atom.pred.clone(),
                    expected: decl.params.len(),
                    got: atom.args.len(),
                });
            }
            for arg in &atom.args {
                if self.object(arg).is_none() {
                    return Err(DomainError::UnknownSymbol(arg.clone()));
                }
            }
        }
        for key in self.init.fluents.keys() {
            let decl = self
                .domain
                .numeric_fluent(&key.fluent)
                .ok_or_else(|| DomainError::UnknownSymbol(key.fluent.clone()))?;
            if decl.params.len() != key.args.len() {
                return Err(DomainError::ArityMismatch {
                    name: key.fluent.clone(),
                    expected: decl.params.len(),
                    got: key.args.len(),
                });
            }
            for arg in &key.args {
                if self.object(arg).is_none() {
                    return Err(DomainError::UnknownSymbol(arg.clone()));
                }
            }
        }
        // The goal is a condition with no parameters in scope: all terms
        // must be objects.
        self.domain
            .check_condition(&self.goal, &BTreeSet::new(), Some(&self.object_names()))?;
        Ok(())
    }
}

impl AugmentedProblem {
    /// The domain with danger effects injected.
    pub fn domain(&self) -> &Domain {
        &self.augmented_domain
    }
}

/// Compiles a basic problem plus danger rules into the safety-augmented
/// problem. For each rule, the matched schema gains one conditional effect
/// `when (binding holds and condition holds) increase danger by delta`; the
/// goal is extended with `danger <= d_max` (enforced at verdict time). No
/// other schema content is altered.
pub fn compile_augmented(
    basic: &BasicProblem,
    rules: &[DangerRule],
    d_init: i64,
    d_max: i64,
) -> Result<AugmentedProblem, DomainError> {
    if basic.domain.mentions_danger() {
        return Err(DomainError::ReservedFluentDeclared);
    }
    basic.validate()?;
    for bound in [d_init, d_max] {
        if bound.abs() > MAX_DANGER_BOUND {
            return Err(DomainError::DangerBoundExceeded(bound));
        }
    }

    let objects = basic.object_names();
    for rule in rules {
        let schema = basic
            .domain
            .schema(&rule.action)
            .ok_or_else(|| DomainError::UnknownSchema(rule.action.clone()))?;
        if rule.binding.len() != schema.params.len() {
            return Err(DomainError::BindingArityMismatch {
                action: rule.action.clone(),
                expected: schema.params.len(),
                got: rule.binding.len(),
            });
        }
        for (slot, param) in rule.binding.iter().zip(&schema.params) {
            if let BindingSlot::Object(obj) = slot {
                let decl = basic
                    .object(obj)
                    .ok_or_else(|| DomainError::UnknownSymbol(obj.clone()))?;
                if !basic.domain.is_subtype(&decl.ty, &param.ty) {
                    return Err(DomainError::TypeMismatch {
                        object: obj.clone(),
                        actual: decl.ty.clone(),
                        expected: param.ty.clone(),
                    });
                }
            }
        }
        if rule.delta == 0 {
            return Err(DomainError::ZeroDelta);
        }
        if rule.delta.abs() > MAX_DANGER_DELTA {
            return Err(DomainError::DangerBoundExceeded(rule.delta));
        }
        let params: BTreeSet<Ident> = schema.params.iter().map(|p| p.name.clone()).collect();
        basic
            .domain
            .check_condition(&rule.condition, &params, Some(&objects))?;
        // Danger conditions may not reference the danger counter; since the
        // counter can never be declared, check_condition already rejects it
        // as an unknown symbol.
    }

    let mut augmented_domain = basic.domain.clone();
    for (rule_idx, rule) in rules.iter().enumerate() {
        let schema = augmented_domain
            .schemas
            .iter_mut()
            .find(|s| s.name == rule.action)
            .expect("validated above");
        let mut condition = Condition::default();
        for (slot, param) in rule.binding.iter().zip(&schema.params) {
            if let BindingSlot::Object(obj) = slot {
                condition.conjuncts.push(Conjunct::ParamIs {
                    var: param.name.clone(),
                    object: obj.clone(),
                });
            }
        }
        condition.conjuncts.extend(rule.condition.conjuncts.clone());
        schema.effects.push(Effect::Conditional(ConditionalEffect {
            condition,
            effects: vec![Effect::Increase(
                FluentRef {
                    fluent: Ident::new(crate::ident::RESERVED_DANGER),
                    args: vec![],
                },
                rule.delta,
            )],
            danger_rule: Some(rule_idx),
        }));
    }

    Ok(AugmentedProblem {
        basic: basic.clone(),
        rules: rules.to_vec(),
        d_init,
        d_max,
        augmented_domain,
    })
}
