//! Redundant-action injection for robustness experiments.
//!
//! Distractor schemas manipulate only a fresh dummy type, object and
//! predicate vocabulary, which makes "does not affect danger logic" a
//! checkable disjointness property instead of a promise: after injection a
//! post-hoc check proves the fresh names never occur in the original
//! domain, the goal, or any danger rule. Distractors are chained
//! (`noise_act_i` requires the token set by `noise_act_{i-1}`), so they are
//! genuinely executable in reachable states while growing the searchable
//! state space only linearly; no optimal plan can contain one, because
//! dropping it leaves a shorter plan with the same terminal goal and
//! danger values.
//!
//! The seed controls where distractor declarations are interleaved among
//! the original ones (prompt-side variation); the logical content is
//! independent of it.

use crate::bundle::TaskBundle;
use crate::domain::{
    ActionSchema, AtomTemplate, Condition, Conjunct, Effect, Literal, ObjectDecl, Param,
    PredicateDecl, Term, TypeDecl,
};
use crate::ident::Ident;
use rand::{RngExt, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::BTreeSet;
use thiserror::Error;

/// The noise ladder used by the robustness experiment.
pub const LADDER: [usize; 6] = [2, 4, 8, 16, 32, 64];

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct NoiseLevel {
    pub count: usize,
    pub seed: u64,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum NoiseError {
    #[error("count {0} is not in the standard ladder {LADDER:?}; pass --allow-any-count to override")]
    CountNotInLadder(usize),
    #[error("fresh-name generation collided with existing vocabulary")]
    VocabularyCollision,
    #[error(transparent)]
    Domain(#[from] crate::domain::DomainError),
}

fn vocabulary(bundle: &TaskBundle) -> BTreeSet<Ident> {
    let mut vocab = BTreeSet::new();
    let d = &bundle.basic.domain;
    vocab.extend(d.types.iter().map(|t| t.name.clone()));
    vocab.extend(d.predicates.iter().map(|p| p.name.clone()));
    vocab.extend(d.fluents.iter().map(|f| f.name.clone()));
    vocab.extend(d.schemas.iter().map(|s| s.name.clone()));
    vocab.extend(bundle.basic.objects.iter().map(|o| o.name.clone()));
    vocab
}

/// Adds `level.count` distractor schemas over a fresh dummy vocabulary and
/// recompiles the bundle. `count == 0` returns the bundle unchanged.
pub fn inject(
    bundle: &TaskBundle,
    level: &NoiseLevel,
    allow_any_count: bool,
) -> Result<TaskBundle, NoiseError> {
    if level.count == 0 {
        return Ok(bundle.clone());
    }
    if !allow_any_count && !LADDER.contains(&level.count) {
        return Err(NoiseError::CountNotInLadder(level.count));
    }

    let vocab = vocabulary(bundle);
    // Counter-suffixed namespaces make collisions impossible: pick the
    // first namespace whose generated names are all fresh.
    let mut chosen: Option<NoiseNames> = None;
    for namespace in 0..=vocab.len() {
        let names = NoiseNames::new(namespace, level.count);
        if names.all().iter().all(|n| !vocab.contains(n)) {
            chosen = Some(names);
            break;
        }
    }
    let names = chosen.ok_or(NoiseError::VocabularyCollision)?;
    debug_assert!(names.all().iter().all(|n| !vocab.contains(n)));

    let mut basic = bundle.basic.clone();
    basic.domain.types.push(TypeDecl {
        name: names.ty.clone(),
        parent: None,
    });
    basic.objects.push(ObjectDecl {
        name: names.obj.clone(),
        ty: names.ty.clone(),
    });

    let mut rng = ChaCha8Rng::seed_from_u64(level.seed);
    for i in 0..level.count {
        let pred = PredicateDecl {
            name: names.tok(i),
            params: vec![Param {
                name: Ident::new("x"),
                ty: names.ty.clone(),
            }],
        };
        let at = rng.random_range(0..=basic.domain.predicates.len());
        basic.domain.predicates.insert(at, pred);

        let precondition = if i == 0 {
            Condition::default()
        } else {
            Condition {
                conjuncts: vec![Conjunct::Lit(Literal {
                    atom: AtomTemplate {
                        pred: names.tok(i - 1),
                        args: vec![Term::Var(Ident::new("x"))],
                    },
                    positive: true,
                })],
            }
        };
        let schema = ActionSchema {
            name: names.act(i),
            params: vec![Param {
                name: Ident::new("x"),
                ty: names.ty.clone(),
            }],
            precondition,
            effects: vec![Effect::Add(AtomTemplate {
                pred: names.tok(i),
                args: vec![Term::Var(Ident::new("x"))],
            })],
        };
        let at = rng.random_range(0..=basic.domain.schemas.len());
        basic.domain.schemas.insert(at, schema);
    }

    // Post-hoc disjointness proof: fresh names must not appear in the goal
    // or in any danger rule.
    let fresh: BTreeSet<Ident> = names.all().into_iter().collect();
    let mut referenced = BTreeSet::new();
    collect_condition_idents(&bundle.basic.goal, &mut referenced);
    for rule in &bundle.augmented.rules {
        referenced.insert(rule.action.clone());
        for slot in &rule.binding {
            if let crate::domain::BindingSlot::Object(o) = slot {
                referenced.insert(o.clone());
            }
        }
        collect_condition_idents(&rule.condition, &mut referenced);
    }
    if referenced.iter().any(|r| fresh.contains(r)) {
        return Err(NoiseError::VocabularyCollision);
    }

    let mut injected = TaskBundle::compile(
        &bundle.id,
        basic,
        bundle.augmented.rules.clone(),
        bundle.augmented.d_init,
        bundle.augmented.d_max,
    )?;
    injected.meta = bundle.meta.clone();
    injected.refs = bundle.refs.clone();
    Ok(injected)
}

fn collect_condition_idents(cond: &Condition, out: &mut BTreeSet<Ident>) {
    for c in &cond.conjuncts {
        match c {
            Conjunct::Lit(lit) => {
                out.insert(lit.atom.pred.clone());
                for t in &lit.atom.args {
                    if let Term::Obj(o) = t {
                        out.insert(o.clone());
                    }
                }
            }
            Conjunct::Cmp(cmp) => {
                out.insert(cmp.fluent.fluent.clone());
                for t in &cmp.fluent.args {
                    if let Term::Obj(o) = t {
                        out.insert(o.clone());
                    }
                }
            }
            Conjunct::ParamIs { object, .. } => {
                out.insert(object.clone());
            }
        }
    }
}

struct NoiseNames {
    ty: Ident,
    obj: Ident,
    prefix: String,
    count: usize,
}

impl NoiseNames {
    fn new(namespace: usize, count: usize) -> NoiseNames {
        let prefix = if namespace == 0 {
            "noise".to_string()
        } else {
            format!("noise{namespace}")
        };
        NoiseNames {
            ty: Ident::new(&format!("{prefix}_item")),
            obj: Ident::new(&format!("{prefix}_obj")),
            prefix,
            count,
        }
    }

    fn tok(&self, i: usize) -> Ident {
        Ident::new(&format!("{}_tok_{i}", self.prefix))
    }

    fn act(&self, i: usize) -> Ident {
        Ident::new(&format!("{}_act_{i}", self.prefix))
    }

    fn all(&self) -> Vec<Ident> {
        let mut v = vec![self.ty.clone(), self.obj.clone()];
        for i in 0..self.count {
            v.push(self.tok(i));
            v.push(self.act(i));
        }
        v
    }
}
