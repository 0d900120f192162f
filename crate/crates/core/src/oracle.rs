//! Exhaustive shortest-plan search over grounded state spaces.
//!
//! Plain breadth-first search with unit action costs: slower than heuristic
//! planners, but deterministic, and fixture-scale problems fit comfortably.
//! Successors are generated in lexicographic order of (action name, args),
//! so among all shortest plans the lexicographically least is returned, on
//! every run and at any thread count. Visited states are canonical by
//! construction (sorted atom set, sorted fluent map, danger value).
//!
//! Besides goal search on the basic and augmented problems, the module
//! computes reference pairs: the shortest feasible plan, the shortest safe
//! plan, and the shortest feasible-but-unsafe plan when one exists. Safety
//! effort compares the safe reference against the unsafe one, so it is
//! negative exactly when the unsafe way of reaching the goal takes more
//! actions than the safe way.

use crate::bundle::TaskBundle;
use crate::domain::{GroundAction, State};
use crate::executor::{run_plan, step, ProblemView, Verdict};
use crate::parser::Plan;
use std::collections::{HashMap, VecDeque};
use thiserror::Error;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct SearchLimits {
    pub max_expanded_nodes: usize,
    pub max_depth: usize,
}

impl Default for SearchLimits {
    fn default() -> SearchLimits {
        SearchLimits {
            max_expanded_nodes: 1_000_000,
            max_depth: 50,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SolveMode {
    Basic,
    Augmented,
}

/// What terminal states the search accepts.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Target {
    /// Goal satisfied, danger ignored (basic problem).
    Goal,
    /// Goal satisfied with terminal danger within threshold.
    GoalSafe,
    /// Goal satisfied with terminal danger above threshold.
    GoalUnsafe,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum SolveError {
    #[error("no plan exists: the reachable state space was exhausted")]
    Unsolvable,
    #[error("search limit exceeded: {0}")]
    LimitExceeded(LimitKind),
    #[error("planner self-check failed: produced plan does not validate")]
    SelfCheckFailed,
    #[error("numeric overflow during search")]
    Overflow,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LimitKind {
    Nodes,
    Depth,
}

impl std::fmt::Display for LimitKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            LimitKind::Nodes => write!(f, "nodes"),
            LimitKind::Depth => write!(f, "depth"),
        }
    }
}

/// Reference plans for a bundle plus the safety effort.
#[derive(Clone, Debug)]
pub struct ReferencePair {
    /// Shortest goal-reaching plan, danger ignored.
    pub feasible_plan: Plan,
    /// Shortest plan reaching the goal with terminal danger within
    /// threshold.
    pub safe_plan: Plan,
    /// Shortest goal-reaching plan whose terminal danger exceeds the
    /// threshold, when the danger specification makes one reachable.
    pub unsafe_plan: Option<Plan>,
    /// len(safe) - len(unsafe reference); falls back to the feasible
    /// reference when no unsafe plan exists. May be negative.
    pub safety_effort: i64,
}

/// All type-correct ground actions of the problem, sorted by
/// (schema name, args).
pub fn ground_actions(basic: &crate::domain::BasicProblem) -> Vec<GroundAction> {
    let mut out = Vec::new();
    for schema in &basic.domain.schemas {
        let mut per_param: Vec<Vec<crate::ident::Ident>> = Vec::new();
        for param in &schema.params {
            let objs: Vec<_> = basic
                .objects_of_type(&param.ty)
                .into_iter()
                .map(|o| o.name.clone())
                .collect();
            per_param.push(objs);
        }
        let mut tuples: Vec<Vec<crate::ident::Ident>> = vec![Vec::new()];
        for objs in &per_param {
            let mut next = Vec::new();
            for prefix in &tuples {
                for obj in objs {
                    let mut t = prefix.clone();
                    t.push(obj.clone());
                    next.push(t);
                }
            }
            tuples = next;
        }
        for args in tuples {
            out.push(GroundAction {
                schema: schema.name.clone(),
                args,
            });
        }
    }
    out.sort();
    out
}

/// Finds a minimum-length plan for the bundle in the given mode and
/// re-validates it through the executor before returning it.
pub fn solve(
    bundle: &TaskBundle,
    mode: SolveMode,
    limits: SearchLimits,
) -> Result<Plan, SolveError> {
    let target = match mode {
        SolveMode::Basic => Target::Goal,
        SolveMode::Augmented => Target::GoalSafe,
    };
    let plan = search(bundle, target, limits)?;
    let outcome = run_plan(&plan, bundle).map_err(|_| SolveError::Overflow)?;
    let ok = match mode {
        SolveMode::Basic => outcome.feasible,
        SolveMode::Augmented => matches!(outcome.verdict, Verdict::Safe),
    };
    if !ok {
        return Err(SolveError::SelfCheckFailed);
    }
    Ok(plan)
}

/// Computes reference plans and safety effort. Both the feasible and the
/// safe reference must exist; the unsafe reference is optional.
pub fn reference_pair(
    bundle: &TaskBundle,
    limits: SearchLimits,
) -> Result<ReferencePair, SolveError> {
    let feasible_plan = solve(bundle, SolveMode::Basic, limits)?;
    let safe_plan = solve(bundle, SolveMode::Augmented, limits)?;
    let unsafe_plan = match search(bundle, Target::GoalUnsafe, limits) {
        Ok(plan) => {
            let outcome = run_plan(&plan, bundle).map_err(|_| SolveError::Overflow)?;
            if !matches!(outcome.verdict, Verdict::FeasibleUnsafe { .. }) {
                return Err(SolveError::SelfCheckFailed);
            }
            Some(plan)
        }
        Err(SolveError::Unsolvable) | Err(SolveError::LimitExceeded(_)) => None,
        Err(e) => return Err(e),
    };
    let baseline = unsafe_plan.as_ref().unwrap_or(&feasible_plan).len() as i64;
    let safety_effort = safe_plan.len() as i64 - baseline;
    Ok(ReferencePair {
        feasible_plan,
        safe_plan,
        unsafe_plan,
        safety_effort,
    })
}

fn accepts(state: &State, bundle: &TaskBundle, target: Target) -> bool {
    let goal_ok = crate::executor::unsatisfied_conjuncts(
        state,
        &bundle.basic.goal,
        &std::collections::BTreeMap::new(),
    )
    .is_empty();
    if !goal_ok {
        return false;
    }
    match target {
        Target::Goal => true,
        Target::GoalSafe => state.danger.unwrap_or(0) <= bundle.augmented.d_max,
        Target::GoalUnsafe => state.danger.unwrap_or(0) > bundle.augmented.d_max,
    }
}

fn search(bundle: &TaskBundle, target: Target, limits: SearchLimits) -> Result<Plan, SolveError> {
    let view = match target {
        Target::Goal => ProblemView::Basic(&bundle.basic),
        Target::GoalSafe | Target::GoalUnsafe => ProblemView::Augmented(&bundle.augmented),
    };
    let actions = ground_actions(&bundle.basic);

    let init = view.initial_state();
    if accepts(&init, bundle, target) {
        return Ok(Plan::from_actions(vec![]));
    }

    // Arena of states with parent pointers for plan extraction.
    let mut states: Vec<State> = vec![init.clone()];
    let mut parent: Vec<Option<(usize, usize)>> = vec![None]; // (state, action index)
    let mut depth: Vec<usize> = vec![0];
    let mut visited: HashMap<State, usize> = HashMap::new();
    visited.insert(init, 0);

    let mut queue: VecDeque<usize> = VecDeque::new();
    queue.push_back(0);
    let mut expanded = 0usize;
    let mut truncated_by_depth = false;

    while let Some(node) = queue.pop_front() {
        if expanded >= limits.max_expanded_nodes {
            return Err(SolveError::LimitExceeded(LimitKind::Nodes));
        }
        expanded += 1;
        if depth[node] >= limits.max_depth {
            truncated_by_depth = true;
            continue;
        }
        for (action_idx, action) in actions.iter().enumerate() {
            let current = &states[node];
            let succ = match step(current, action, &view) {
                Ok(outcome) => outcome.state,
                Err(crate::executor::StepError::PreconditionViolated { .. }) => continue,
                Err(crate::executor::StepError::Overflow(_)) => {
                    return Err(SolveError::Overflow)
                }
            };
            if visited.contains_key(&succ) {
                continue;
            }
            let idx = states.len();
            visited.insert(succ.clone(), idx);
            states.push(succ);
            parent.push(Some((node, action_idx)));
            depth.push(depth[node] + 1);
            if accepts(&states[idx], bundle, target) {
                let mut rev = Vec::new();
                let mut cur = idx;
                while let Some((prev, act)) = parent[cur] {
                    rev.push(actions[act].clone());
                    cur = prev;
                }
                rev.reverse();
                return Ok(Plan::from_actions(rev));
            }
            queue.push_back(idx);
        }
    }

    if truncated_by_depth {
        Err(SolveError::LimitExceeded(LimitKind::Depth))
    } else {
        Err(SolveError::Unsolvable)
    }
}
