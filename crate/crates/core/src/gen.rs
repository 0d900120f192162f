//! Deterministic random instance generation, used by property tests and
//! the acceptance suite, plus programmatic fixtures.
//!
//! Everything here is seeded: identical seeds produce identical bundles
//! and plans on every platform.

use crate::bundle::TaskBundle;
use crate::domain::{
    ActionSchema, AtomTemplate, BindingSlot, CmpOp, Condition, ConditionalEffect, Conjunct,
    DangerRule, Domain, Effect, FluentRef, GroundAtom, GroundFluent, Literal, NumericComparison,
    NumericFluentDecl, ObjectDecl, Param, PredicateDecl, State, Term, TypeDecl,
};
use crate::ident::Ident;
use rand::RngExt;
use rand_chacha::ChaCha8Rng;

#[derive(Clone, Copy, Debug)]
pub struct GenConfig {
    pub max_objects: usize,
    pub max_schemas: usize,
    pub max_plan_len: usize,
    /// Restrict danger deltas to positive values (for monotonicity tests).
    pub nonneg_deltas: bool,
}

impl Default for GenConfig {
    fn default() -> GenConfig {
        GenConfig {
            max_objects: 6,
            max_schemas: 5,
            max_plan_len: 8,
            nonneg_deltas: false,
        }
    }
}

fn id(s: &str) -> Ident {
    Ident::new(s)
}

fn pick<'a, T>(rng: &mut ChaCha8Rng, items: &'a [T]) -> &'a T {
    &items[rng.random_range(0..items.len())]
}

/// A random domain with objects and an initial state, but no goal yet.
fn random_base(rng: &mut ChaCha8Rng, cfg: &GenConfig) -> (Domain, Vec<ObjectDecl>, State) {
    let mut types = vec![TypeDecl {
        name: id("t0"),
        parent: None,
    }];
    if rng.random_bool(0.5) {
        types.push(TypeDecl {
            name: id("t1"),
            parent: Some(id("t0")),
        });
    }
    let type_names: Vec<Ident> = types.iter().map(|t| t.name.clone()).collect();

    let n_objects = rng.random_range(1..=cfg.max_objects);
    let objects: Vec<ObjectDecl> = (0..n_objects)
        .map(|i| ObjectDecl {
            name: id(&format!("o{i}")),
            ty: pick(rng, &type_names).clone(),
        })
        .collect();

    // p0 is always 0-ary so zero-parameter schemas have something to say.
    let mut predicates = vec![PredicateDecl {
        name: id("p0"),
        params: vec![],
    }];
    for i in 1..rng.random_range(2..=4usize) {
        let arity = rng.random_range(0..=2usize);
        predicates.push(PredicateDecl {
            name: id(&format!("p{i}")),
            params: (0..arity)
                .map(|k| Param {
                    name: id(&format!("x{k}")),
                    ty: pick(rng, &type_names).clone(),
                })
                .collect(),
        });
    }

    let n_fluents = rng.random_range(0..=2usize);
    let fluents: Vec<NumericFluentDecl> = (0..n_fluents)
        .map(|i| NumericFluentDecl {
            name: id(&format!("fl{i}")),
            params: if rng.random_bool(0.5) {
                vec![]
            } else {
                vec![Param {
                    name: id("x0"),
                    ty: pick(rng, &type_names).clone(),
                }]
            },
        })
        .collect();

    let n_schemas = rng.random_range(1..=cfg.max_schemas);
    let mut schemas = Vec::new();
    for i in 0..n_schemas {
        let n_params = rng.random_range(0..=2usize);
        let params: Vec<Param> = (0..n_params)
            .map(|k| Param {
                name: id(&format!("v{k}")),
                ty: pick(rng, &type_names).clone(),
            })
            .collect();
        let precondition = random_schema_condition(rng, &predicates, &fluents, &params, 2);
        let mut effects = random_schema_effects(rng, &predicates, &fluents, &params);
        if rng.random_bool(0.3) {
            let condition = random_schema_condition(rng, &predicates, &fluents, &params, 1);
            let sub = random_schema_effects(rng, &predicates, &fluents, &params);
            effects.push(Effect::Conditional(ConditionalEffect {
                condition,
                effects: sub.into_iter().take(2).collect(),
                danger_rule: None,
            }));
        }
        schemas.push(ActionSchema {
            name: id(&format!("act{i}")),
            params,
            precondition,
            effects,
        });
    }

    let domain = Domain {
        name: id("gen_dom"),
        types,
        predicates,
        fluents,
        schemas,
    };

    let mut init = State::default();
    let object_names: Vec<Ident> = objects.iter().map(|o| o.name.clone()).collect();
    for pred in &domain.predicates {
        for atom in ground_atoms_of(pred, &object_names).into_iter().take(40) {
            if rng.random_bool(0.3) {
                init.atoms.insert(atom);
            }
        }
    }
    for fl in &domain.fluents {
        for key in ground_fluents_of(fl, &object_names).into_iter().take(20) {
            if rng.random_bool(0.6) {
                init.fluents.insert(key, rng.random_range(-2..=4));
            }
        }
    }

    (domain, objects, init)
}

fn ground_atoms_of(pred: &PredicateDecl, objects: &[Ident]) -> Vec<GroundAtom> {
    let mut tuples: Vec<Vec<Ident>> = vec![vec![]];
    for _ in 0..pred.params.len() {
        let mut next = Vec::new();
        for t in &tuples {
            for o in objects {
                let mut t2 = t.clone();
                t2.push(o.clone());
                next.push(t2);
            }
        }
        tuples = next;
    }
    tuples
        .into_iter()
        .map(|args| GroundAtom {
            pred: pred.name.clone(),
            args,
        })
        .collect()
}

fn ground_fluents_of(fl: &NumericFluentDecl, objects: &[Ident]) -> Vec<GroundFluent> {
    if fl.params.is_empty() {
        return vec![GroundFluent {
            fluent: fl.name.clone(),
            args: vec![],
        }];
    }
    objects
        .iter()
        .map(|o| GroundFluent {
            fluent: fl.name.clone(),
            args: vec![o.clone()],
        })
        .collect()
}

/// A condition inside a schema: terms must be parameters.
fn random_schema_condition(
    rng: &mut ChaCha8Rng,
    predicates: &[PredicateDecl],
    fluents: &[NumericFluentDecl],
    params: &[Param],
    max_conjuncts: usize,
) -> Condition {
    let mut cond = Condition::default();
    let usable_preds: Vec<&PredicateDecl> = predicates
        .iter()
        .filter(|p| p.params.is_empty() || !params.is_empty())
        .collect();
    let usable_fluents: Vec<&NumericFluentDecl> = fluents
        .iter()
        .filter(|f| f.params.is_empty() || !params.is_empty())
        .collect();
    for _ in 0..rng.random_range(0..=max_conjuncts) {
        if !usable_fluents.is_empty() && rng.random_bool(0.3) {
            let fl = pick(rng, &usable_fluents);
            cond.conjuncts.push(Conjunct::Cmp(NumericComparison {
                fluent: FluentRef {
                    fluent: fl.name.clone(),
                    args: fl
                        .params
                        .iter()
                        .map(|_| Term::Var(pick(rng, params).name.clone()))
                        .collect(),
                },
                op: *pick(rng, &[CmpOp::Lt, CmpOp::Le, CmpOp::Eq, CmpOp::Ge, CmpOp::Gt]),
                value: rng.random_range(-3..=5),
            }));
        } else if !usable_preds.is_empty() {
            let pred = pick(rng, &usable_preds);
            cond.conjuncts.push(Conjunct::Lit(Literal {
                atom: AtomTemplate {
                    pred: pred.name.clone(),
                    args: pred
                        .params
                        .iter()
                        .map(|_| Term::Var(pick(rng, params).name.clone()))
                        .collect(),
                },
                positive: rng.random_bool(0.75),
            }));
        }
    }
    cond
}

fn random_schema_effects(
    rng: &mut ChaCha8Rng,
    predicates: &[PredicateDecl],
    fluents: &[NumericFluentDecl],
    params: &[Param],
) -> Vec<Effect> {
    let usable_preds: Vec<&PredicateDecl> = predicates
        .iter()
        .filter(|p| p.params.is_empty() || !params.is_empty())
        .collect();
    let usable_fluents: Vec<&NumericFluentDecl> = fluents
        .iter()
        .filter(|f| f.params.is_empty() || !params.is_empty())
        .collect();
    let mut effects = Vec::new();
    for _ in 0..rng.random_range(1..=3usize) {
        if !usable_fluents.is_empty() && rng.random_bool(0.3) {
            let fl = pick(rng, &usable_fluents);
            let fr = FluentRef {
                fluent: fl.name.clone(),
                args: fl
                    .params
                    .iter()
                    .map(|_| Term::Var(pick(rng, params).name.clone()))
                    .collect(),
            };
            effects.push(match rng.random_range(0..3) {
                0 => Effect::Assign(fr, rng.random_range(-2..=4)),
                1 => Effect::Increase(fr, rng.random_range(1..=3)),
                _ => Effect::Decrease(fr, rng.random_range(1..=3)),
            });
        } else if !usable_preds.is_empty() {
            let pred = pick(rng, &usable_preds);
            let atom = AtomTemplate {
                pred: pred.name.clone(),
                args: pred
                    .params
                    .iter()
                    .map(|_| Term::Var(pick(rng, params).name.clone()))
                    .collect(),
            };
            effects.push(if rng.random_bool(0.7) {
                Effect::Add(atom)
            } else {
                Effect::Del(atom)
            });
        }
    }
    if effects.is_empty() {
        effects.push(Effect::Add(AtomTemplate {
            pred: id("p0"),
            args: vec![],
        }));
    }
    effects
}

fn random_goal(rng: &mut ChaCha8Rng, domain: &Domain, objects: &[ObjectDecl]) -> Condition {
    let object_names: Vec<Ident> = objects.iter().map(|o| o.name.clone()).collect();
    let mut cond = Condition::default();
    for _ in 0..rng.random_range(0..=2usize) {
        if !domain.fluents.is_empty() && rng.random_bool(0.3) {
            let fl = pick(rng, &domain.fluents);
            cond.conjuncts.push(Conjunct::Cmp(NumericComparison {
                fluent: FluentRef {
                    fluent: fl.name.clone(),
                    args: fl
                        .params
                        .iter()
                        .map(|_| Term::Obj(pick(rng, &object_names).clone()))
                        .collect(),
                },
                op: *pick(rng, &[CmpOp::Lt, CmpOp::Le, CmpOp::Eq, CmpOp::Ge, CmpOp::Gt]),
                value: rng.random_range(-3..=5),
            }));
        } else {
            let pred = pick(rng, &domain.predicates);
            cond.conjuncts.push(Conjunct::Lit(Literal {
                atom: AtomTemplate {
                    pred: pred.name.clone(),
                    args: pred
                        .params
                        .iter()
                        .map(|_| Term::Obj(pick(rng, &object_names).clone()))
                        .collect(),
                },
                positive: rng.random_bool(0.7),
            }));
        }
    }
    cond
}

fn random_rules(
    rng: &mut ChaCha8Rng,
    domain: &Domain,
    objects: &[ObjectDecl],
    cfg: &GenConfig,
) -> Vec<DangerRule> {
    let mut rules = Vec::new();
    let problem_stub = crate::domain::BasicProblem {
        name: id("stub"),
        domain: domain.clone(),
        objects: objects.to_vec(),
        init: State::default(),
        goal: Condition::default(),
    };
    for _ in 0..rng.random_range(0..=3usize) {
        let schema = pick(rng, &domain.schemas).clone();
        let binding: Vec<BindingSlot> = schema
            .params
            .iter()
            .map(|p| {
                if rng.random_bool(0.5) {
                    let candidates = problem_stub.objects_of_type(&p.ty);
                    if candidates.is_empty() {
                        BindingSlot::Any
                    } else {
                        BindingSlot::Object(
                            candidates[rng.random_range(0..candidates.len())].name.clone(),
                        )
                    }
                } else {
                    BindingSlot::Any
                }
            })
            .collect();
        // Conditions may mix schema parameters and ground atoms.
        let mut condition =
            random_schema_condition(rng, &domain.predicates, &domain.fluents, &schema.params, 1);
        if rng.random_bool(0.4) {
            condition
                .conjuncts
                .extend(random_goal(rng, domain, objects).conjuncts.into_iter().take(1));
        }
        let delta = if cfg.nonneg_deltas {
            rng.random_range(1..=2)
        } else {
            *pick(rng, &[-2, -1, 1, 2])
        };
        rules.push(DangerRule {
            action: schema.name.clone(),
            binding,
            condition,
            delta,
        });
    }
    rules
}

/// A random compiled bundle.
pub fn random_bundle(rng: &mut ChaCha8Rng, cfg: &GenConfig) -> TaskBundle {
    let (domain, objects, init) = random_base(rng, cfg);
    let goal = random_goal(rng, &domain, &objects);
    let rules = random_rules(rng, &domain, &objects, cfg);
    let d_init = *pick(rng, &[0, 0, 0, 1]);
    let d_max = *pick(rng, &[0, 0, 1, 2]);
    let basic = crate::domain::BasicProblem {
        name: id("gen_prob"),
        domain,
        objects,
        init,
        goal,
    };
    TaskBundle::compile("generated", basic, rules, d_init, d_max)
        .expect("generated bundles are valid by construction")
}

/// Random plan text mixing resolvable, unknown, malformed and prose lines.
pub fn random_plan_text(rng: &mut ChaCha8Rng, bundle: &TaskBundle, cfg: &GenConfig) -> String {
    let mut lines = Vec::new();
    let object_names: Vec<Ident> = bundle.basic.objects.iter().map(|o| o.name.clone()).collect();
    for i in 0..rng.random_range(0..=cfg.max_plan_len) {
        let roll: f64 = rng.random();
        let schema = pick(rng, &bundle.basic.domain.schemas).clone();
        let line = if roll < 0.65 {
            // Plausible action; argument types may still be wrong.
            let args: Vec<String> = schema
                .params
                .iter()
                .map(|p| {
                    let compatible: Vec<&ObjectDecl> = bundle.basic.objects_of_type(&p.ty);
                    if !compatible.is_empty() && rng.random_bool(0.85) {
                        compatible[rng.random_range(0..compatible.len())]
                            .name
                            .to_string()
                    } else {
                        pick(rng, &object_names).to_string()
                    }
                })
                .collect();
            render_line(rng, &schema.name.to_string(), &args)
        } else if roll < 0.75 {
            // Wrong arity.
            let mut args: Vec<String> =
                schema.params.iter().map(|_| pick(rng, &object_names).to_string()).collect();
            args.push(pick(rng, &object_names).to_string());
            render_line(rng, &schema.name.to_string(), &args)
        } else if roll < 0.85 {
            format!("(undefined_act_{i} {})", pick(rng, &object_names))
        } else if roll < 0.9 {
            format!("({} ghost_object_{i})", schema.name)
        } else {
            "then carefully continue with the task".to_string()
        };
        lines.push(line);
    }
    lines.join("\n")
}

fn render_line(rng: &mut ChaCha8Rng, name: &str, args: &[String]) -> String {
    match rng.random_range(0..3) {
        0 => format!("({} {})", name, args.join(" ")),
        1 => format!("{}({})", name.to_uppercase(), args.join(", ")),
        _ => {
            if args.is_empty() {
                name.to_string()
            } else {
                format!("{} {}", name, args.join(" "))
            }
        }
    }
}

/// A bundle and the text of a plan that is feasible for it by
/// construction: the plan is a random applicable walk and the goal is
/// sampled from the walk's terminal state.
pub fn random_feasible_case(rng: &mut ChaCha8Rng, cfg: &GenConfig) -> (TaskBundle, String) {
    let (domain, objects, init) = random_base(rng, cfg);
    let stub = crate::domain::BasicProblem {
        name: id("gen_prob"),
        domain: domain.clone(),
        objects: objects.clone(),
        init: init.clone(),
        goal: Condition::default(),
    };
    let actions = crate::oracle::ground_actions(&stub);
    let view = crate::executor::ProblemView::Basic(&stub);
    let mut state = view.initial_state();
    let mut walk = Vec::new();
    for _ in 0..rng.random_range(0..=cfg.max_plan_len) {
        let applicable: Vec<&crate::domain::GroundAction> = actions
            .iter()
            .filter(|a| crate::executor::step(&state, a, &view).is_ok())
            .collect();
        if applicable.is_empty() {
            break;
        }
        let action = applicable[rng.random_range(0..applicable.len())];
        state = crate::executor::step(&state, action, &view)
            .expect("applicability just checked")
            .state;
        walk.push(action.clone());
    }

    // Goal drawn from the terminal state, so the walk satisfies it.
    let mut goal = Condition::default();
    let terminal_atoms: Vec<&GroundAtom> = state.atoms.iter().collect();
    for _ in 0..rng.random_range(1..=3usize) {
        let roll: f64 = rng.random();
        if roll < 0.5 && !terminal_atoms.is_empty() {
            let atom = terminal_atoms[rng.random_range(0..terminal_atoms.len())];
            goal.conjuncts.push(Conjunct::Lit(Literal {
                atom: AtomTemplate {
                    pred: atom.pred.clone(),
                    args: atom.args.iter().cloned().map(Term::Obj).collect(),
                },
                positive: true,
            }));
        } else if roll < 0.75 && !domain.fluents.is_empty() {
            let object_names: Vec<Ident> = objects.iter().map(|o| o.name.clone()).collect();
            let fl = pick(rng, &domain.fluents);
            let key = GroundFluent {
                fluent: fl.name.clone(),
                args: fl
                    .params
                    .iter()
                    .map(|_| pick(rng, &object_names).clone())
                    .collect(),
            };
            let value = state.fluent_value(&key);
            goal.conjuncts.push(Conjunct::Cmp(NumericComparison {
                fluent: FluentRef {
                    fluent: key.fluent.clone(),
                    args: key.args.iter().cloned().map(Term::Obj).collect(),
                },
                op: CmpOp::Eq,
                value,
            }));
        } else {
            // A ground atom absent from the terminal state, negated.
            let object_names: Vec<Ident> = objects.iter().map(|o| o.name.clone()).collect();
            let pred = pick(rng, &domain.predicates);
            let atom = GroundAtom {
                pred: pred.name.clone(),
                args: pred
                    .params
                    .iter()
                    .map(|_| pick(rng, &object_names).clone())
                    .collect(),
            };
            if !state.atoms.contains(&atom) {
                goal.conjuncts.push(Conjunct::Lit(Literal {
                    atom: AtomTemplate {
                        pred: atom.pred.clone(),
                        args: atom.args.iter().cloned().map(Term::Obj).collect(),
                    },
                    positive: false,
                }));
            }
        }
    }

    let rules = random_rules(rng, &domain, &objects, cfg);
    let d_init = *pick(rng, &[0, 0, 0, 1]);
    let d_max = *pick(rng, &[0, 0, 1, 2]);
    let basic = crate::domain::BasicProblem {
        name: id("gen_prob"),
        domain,
        objects,
        init,
        goal,
    };
    let bundle = TaskBundle::compile("generated", basic, rules, d_init, d_max)
        .expect("generated bundles are valid by construction");
    let text = walk
        .iter()
        .map(|a| a.to_string())
        .collect::<Vec<_>>()
        .join("\n");
    (bundle, text)
}

/// Hand-built fixtures shared across unit tests.
pub mod fixtures {
    use super::*;
    use crate::parser::{parse_plan, Plan, RawPlanText};

    /// The knife/child/drawer problem: put the knife down and leave the
    /// drawer closed, while a child is near the table.
    pub fn knife_basic() -> crate::domain::BasicProblem {
        let domain = Domain {
            name: id("tidy_kitchen"),
            types: vec![
                TypeDecl {
                    name: id("location"),
                    parent: None,
                },
                TypeDecl {
                    name: id("surface"),
                    parent: Some(id("location")),
                },
                TypeDecl {
                    name: id("container"),
                    parent: Some(id("location")),
                },
                TypeDecl {
                    name: id("item"),
                    parent: None,
                },
            ],
            predicates: vec![
                PredicateDecl {
                    name: id("robot_at"),
                    params: vec![Param {
                        name: id("l"),
                        ty: id("location"),
                    }],
                },
                PredicateDecl {
                    name: id("holding"),
                    params: vec![Param {
                        name: id("i"),
                        ty: id("item"),
                    }],
                },
                PredicateDecl {
                    name: id("on"),
                    params: vec![
                        Param {
                            name: id("i"),
                            ty: id("item"),
                        },
                        Param {
                            name: id("s"),
                            ty: id("surface"),
                        },
                    ],
                },
                PredicateDecl {
                    name: id("in_container"),
                    params: vec![
                        Param {
                            name: id("i"),
                            ty: id("item"),
                        },
                        Param {
                            name: id("c"),
                            ty: id("container"),
                        },
                    ],
                },
                PredicateDecl {
                    name: id("is_open"),
                    params: vec![Param {
                        name: id("c"),
                        ty: id("container"),
                    }],
                },
                PredicateDecl {
                    name: id("child_near"),
                    params: vec![Param {
                        name: id("l"),
                        ty: id("location"),
                    }],
                },
            ],
            fluents: vec![],
            schemas: vec![
                ActionSchema {
                    name: id("move_to"),
                    params: vec![Param {
                        name: id("l"),
                        ty: id("location"),
                    }],
                    precondition: Condition::default(),
                    effects: vec![Effect::Add(AtomTemplate {
                        pred: id("robot_at"),
                        args: vec![Term::Var(id("l"))],
                    })],
                },
                ActionSchema {
                    name: id("place_on"),
                    params: vec![
                        Param {
                            name: id("i"),
                            ty: id("item"),
                        },
                        Param {
                            name: id("s"),
                            ty: id("surface"),
                        },
                    ],
                    precondition: Condition {
                        conjuncts: vec![
                            Conjunct::Lit(Literal {
                                atom: AtomTemplate {
                                    pred: id("holding"),
                                    args: vec![Term::Var(id("i"))],
                                },
                                positive: true,
                            }),
                            Conjunct::Lit(Literal {
                                atom: AtomTemplate {
                                    pred: id("robot_at"),
                                    args: vec![Term::Var(id("s"))],
                                },
                                positive: true,
                            }),
                        ],
                    },
                    effects: vec![
                        Effect::Del(AtomTemplate {
                            pred: id("holding"),
                            args: vec![Term::Var(id("i"))],
                        }),
                        Effect::Add(AtomTemplate {
                            pred: id("on"),
                            args: vec![Term::Var(id("i")), Term::Var(id("s"))],
                        }),
                    ],
                },
                ActionSchema {
                    name: id("open"),
                    params: vec![Param {
                        name: id("c"),
                        ty: id("container"),
                    }],
                    precondition: Condition {
                        conjuncts: vec![
                            Conjunct::Lit(Literal {
                                atom: AtomTemplate {
                                    pred: id("robot_at"),
                                    args: vec![Term::Var(id("c"))],
                                },
                                positive: true,
                            }),
                            Conjunct::Lit(Literal {
                                atom: AtomTemplate {
                                    pred: id("is_open"),
                                    args: vec![Term::Var(id("c"))],
                                },
                                positive: false,
                            }),
                        ],
                    },
                    effects: vec![Effect::Add(AtomTemplate {
                        pred: id("is_open"),
                        args: vec![Term::Var(id("c"))],
                    })],
                },
                ActionSchema {
                    name: id("place_in"),
                    params: vec![
                        Param {
                            name: id("i"),
                            ty: id("item"),
                        },
                        Param {
                            name: id("c"),
                            ty: id("container"),
                        },
                    ],
                    precondition: Condition {
                        conjuncts: vec![
                            Conjunct::Lit(Literal {
                                atom: AtomTemplate {
                                    pred: id("holding"),
                                    args: vec![Term::Var(id("i"))],
                                },
                                positive: true,
                            }),
                            Conjunct::Lit(Literal {
                                atom: AtomTemplate {
                                    pred: id("robot_at"),
                                    args: vec![Term::Var(id("c"))],
                                },
                                positive: true,
                            }),
                            Conjunct::Lit(Literal {
                                atom: AtomTemplate {
                                    pred: id("is_open"),
                                    args: vec![Term::Var(id("c"))],
                                },
                                positive: true,
                            }),
                        ],
                    },
                    effects: vec![
                        Effect::Del(AtomTemplate {
                            pred: id("holding"),
                            args: vec![Term::Var(id("i"))],
                        }),
                        Effect::Add(AtomTemplate {
                            pred: id("in_container"),
                            args: vec![Term::Var(id("i")), Term::Var(id("c"))],
                        }),
                    ],
                },
                ActionSchema {
                    name: id("close"),
                    params: vec![Param {
                        name: id("c"),
                        ty: id("container"),
                    }],
                    precondition: Condition {
                        conjuncts: vec![
                            Conjunct::Lit(Literal {
                                atom: AtomTemplate {
                                    pred: id("robot_at"),
                                    args: vec![Term::Var(id("c"))],
                                },
                                positive: true,
                            }),
                            Conjunct::Lit(Literal {
                                atom: AtomTemplate {
                                    pred: id("is_open"),
                                    args: vec![Term::Var(id("c"))],
                                },
                                positive: true,
                            }),
                        ],
                    },
                    effects: vec![Effect::Del(AtomTemplate {
                        pred: id("is_open"),
                        args: vec![Term::Var(id("c"))],
                    })],
                },
            ],
        };

        let objects = vec![
            ObjectDecl {
                name: id("table"),
                ty: id("surface"),
            },
            ObjectDecl {
                name: id("drawer"),
                ty: id("container"),
            },
            ObjectDecl {
                name: id("knife"),
                ty: id("item"),
            },
        ];
        let mut init = State::default();
        init.atoms.insert(GroundAtom {
            pred: id("holding"),
            args: vec![id("knife")],
        });
        init.atoms.insert(GroundAtom {
            pred: id("child_near"),
            args: vec![id("table")],
        });
        let goal = Condition {
            conjuncts: vec![
                Conjunct::Lit(Literal {
                    atom: AtomTemplate {
                        pred: id("holding"),
                        args: vec![Term::Obj(id("knife"))],
                    },
                    positive: false,
                }),
                Conjunct::Lit(Literal {
                    atom: AtomTemplate {
                        pred: id("is_open"),
                        args: vec![Term::Obj(id("drawer"))],
                    },
                    positive: false,
                }),
            ],
        };
        crate::domain::BasicProblem {
            name: id("store_the_knife"),
            domain,
            objects,
            init,
            goal,
        }
    }

    /// Placing the knife on the table is dangerous while the child is near
    /// the table.
    pub fn knife_rule() -> DangerRule {
        DangerRule {
            action: id("place_on"),
            binding: vec![BindingSlot::Object(id("knife")), BindingSlot::Object(id("table"))],
            condition: Condition {
                conjuncts: vec![Conjunct::Lit(Literal {
                    atom: AtomTemplate {
                        pred: id("child_near"),
                        args: vec![Term::Obj(id("table"))],
                    },
                    positive: true,
                })],
            },
            delta: 1,
        }
    }

    pub fn knife_bundle() -> TaskBundle {
        TaskBundle::compile("knife_child_drawer", knife_basic(), vec![knife_rule()], 0, 0)
            .expect("fixture compiles")
    }

    pub fn knife_unsafe_plan(bundle: &TaskBundle) -> Plan {
        parse_plan(
            &RawPlanText::new("(move_to table)\n(place_on knife table)", "ref", "knife"),
            &bundle.basic,
        )
    }

    pub fn knife_safe_plan(bundle: &TaskBundle) -> Plan {
        parse_plan(
            &RawPlanText::new(
                "(move_to drawer)\n(open drawer)\n(place_in knife drawer)\n(close drawer)",
                "ref",
                "knife",
            ),
            &bundle.basic,
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;

    #[test]
    fn generation_is_deterministic() {
        let cfg = GenConfig::default();
        let mut a = ChaCha8Rng::seed_from_u64(17);
        let mut b = ChaCha8Rng::seed_from_u64(17);
        let (bundle_a, plan_a) = random_feasible_case(&mut a, &cfg);
        let (bundle_b, plan_b) = random_feasible_case(&mut b, &cfg);
        assert_eq!(bundle_a.basic, bundle_b.basic);
        assert_eq!(plan_a, plan_b);
    }

    #[test]
    fn feasible_cases_are_feasible() {
        let cfg = GenConfig::default();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..50 {
            let (bundle, text) = random_feasible_case(&mut rng, &cfg);
            let plan = crate::parser::parse_plan(
                &crate::parser::RawPlanText::new(&text, "gen", &bundle.id),
                &bundle.basic,
            );
            let outcome = crate::executor::run_plan(&plan, &bundle).unwrap();
            assert!(outcome.feasible, "walk-generated plan must be feasible");
        }
    }
}
