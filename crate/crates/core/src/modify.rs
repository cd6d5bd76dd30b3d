//! Plan modification: describe how a new problem differs from an old one,
//! break multi-proposition differences into single-proposition steps, decide
//! one-step solvability, and repair an existing plan with the least change.

use std::fmt;

use crate::error::{structural, Error, Result};
use crate::model::{execute, validate_plan, BeliefState, Instance, Literal, Operator, Plan, State};
use crate::oracle::{plan_bfs, SearchBudget, SearchOutcome};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DeltaKind {
    GoalAdded,
    GoalRemoved,
    /// The proposition becomes known (fixed to the literal) in every initial state.
    InitPropFixed,
    /// The proposition, previously fixed to the literal, becomes unknown.
    InitPropUnfixed,
}

impl DeltaKind {
    pub fn name(self) -> &'static str {
        match self {
            DeltaKind::GoalAdded => "goal-added",
            DeltaKind::GoalRemoved => "goal-removed",
            DeltaKind::InitPropFixed => "init-prop-fixed",
            DeltaKind::InitPropUnfixed => "init-prop-unfixed",
        }
    }
}

/// A single-proposition difference between two problems.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct Delta {
    pub kind: DeltaKind,
    pub literal: Literal,
}

impl Delta {
    pub fn new(kind: DeltaKind, literal: Literal) -> Self {
        Delta { kind, literal }
    }
}

impl fmt::Display for Delta {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}({})", self.kind.name(), self.literal)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModificationProblem {
    pub old: Instance,
    pub old_plan: Plan,
    pub new: Instance,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum OutcomeKind {
    Reused,
    ExtendedOneStep,
    Replanned,
    Failed,
}

impl fmt::Display for OutcomeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            OutcomeKind::Reused => "Reused",
            OutcomeKind::ExtendedOneStep => "ExtendedOneStep",
            OutcomeKind::Replanned => "Replanned",
            OutcomeKind::Failed => "Failed",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ModificationOutcome {
    /// The old plan already solves the new problem.
    Reused(Plan),
    /// The old plan followed by one extra operator.
    ExtendedOneStep { plan: Plan, appended: usize },
    /// A plan found from scratch.
    Replanned(Plan),
    Failed,
}

impl ModificationOutcome {
    pub fn kind(&self) -> OutcomeKind {
        match self {
            ModificationOutcome::Reused(_) => OutcomeKind::Reused,
            ModificationOutcome::ExtendedOneStep { .. } => OutcomeKind::ExtendedOneStep,
            ModificationOutcome::Replanned(_) => OutcomeKind::Replanned,
            ModificationOutcome::Failed => OutcomeKind::Failed,
        }
    }

    pub fn plan(&self) -> Option<&Plan> {
        match self {
            ModificationOutcome::Reused(plan)
            | ModificationOutcome::ExtendedOneStep { plan, .. }
            | ModificationOutcome::Replanned(plan) => Some(plan),
            ModificationOutcome::Failed => None,
        }
    }

    pub fn appended_op(&self) -> Option<usize> {
        match self {
            ModificationOutcome::ExtendedOneStep { appended, .. } => Some(*appended),
            _ => None,
        }
    }
}

fn check_compatible(old: &Instance, new: &Instance) -> Result<()> {
    if old.n() != new.n() {
        return Err(structural(format!(
            "problems range over {} and {} propositions",
            old.n(),
            new.n()
        )));
    }
    if old.operators() != new.operators() {
        return Err(structural("problems do not share the same operators"));
    }
    Ok(())
}

/// Every literal-level difference, weakening steps first: goal removals,
/// fixes of previously unknown propositions, unfixes, re-fixes of
/// propositions whose fixed value flipped, then goal additions.
fn differences(old: &Instance, new: &Instance) -> Vec<Delta> {
    let n = old.n();
    let goal_on = |inst: &Instance, p: usize| inst.goal().iter().copied().find(|l| l.prop.0 == p);
    let (old_fixed, new_fixed) = (fixed_by_prop(old.initial()), fixed_by_prop(new.initial()));

    let mut removed = Vec::new();
    let mut fixed = Vec::new();
    let mut unfixed = Vec::new();
    let mut refixed = Vec::new();
    let mut added = Vec::new();
    for p in 0..n {
        let (before, after) = (goal_on(old, p), goal_on(new, p));
        if before != after {
            if let Some(l) = before {
                removed.push(Delta::new(DeltaKind::GoalRemoved, l));
            }
            if let Some(l) = after {
                added.push(Delta::new(DeltaKind::GoalAdded, l));
            }
        }
        match (old_fixed[p], new_fixed[p]) {
            (None, Some(l)) => fixed.push(Delta::new(DeltaKind::InitPropFixed, l)),
            (Some(l), None) => unfixed.push(Delta::new(DeltaKind::InitPropUnfixed, l)),
            (Some(a), Some(b)) if a != b => {
                unfixed.push(Delta::new(DeltaKind::InitPropUnfixed, a));
                refixed.push(Delta::new(DeltaKind::InitPropFixed, b));
            }
            _ => {}
        }
    }
    [removed, fixed, unfixed, refixed, added].concat()
}

fn fixed_by_prop(b: &BeliefState) -> Vec<Option<Literal>> {
    let mut out = vec![None; b.n()];
    for l in b.fixed_literals() {
        out[l.prop.0] = Some(l);
    }
    out
}

/// The single-proposition difference between two problems over the same
/// propositions and operators. Initial beliefs are compared through their
/// fixed-literal sets.
pub fn classify_delta(old: &Instance, new: &Instance) -> Result<Delta> {
    check_compatible(old, new)?;
    let diffs = differences(old, new);
    match diffs.as_slice() {
        [] => Err(Error::NoDelta),
        [only] => Ok(*only),
        many => Err(Error::MultiDelta(many.iter().map(|d| d.literal).collect())),
    }
}

/// Applies one delta to `inst`, producing the next problem of a chain.
pub fn apply_delta(inst: &Instance, delta: Delta) -> Result<Instance> {
    let lit = delta.literal;
    let p = lit.prop.0;
    if p >= inst.n() {
        return Err(structural(format!("delta {delta} mentions a proposition outside 0..{}", inst.n())));
    }
    match delta.kind {
        DeltaKind::GoalAdded => {
            if inst.goal().iter().any(|l| l.prop == lit.prop) {
                return Err(structural(format!("goal already mentions {}", lit.prop)));
            }
            let mut goal = inst.goal().to_vec();
            goal.push(lit);
            inst.with_goal(goal)
        }
        DeltaKind::GoalRemoved => {
            if !inst.goal().contains(&lit) {
                return Err(structural(format!("goal does not contain {lit}")));
            }
            inst.with_goal(inst.goal().iter().copied().filter(|&l| l != lit).collect())
        }
        DeltaKind::InitPropFixed => {
            if fixed_by_prop(inst.initial())[p].is_some() {
                return Err(structural(format!("{} is already fixed initially", lit.prop)));
            }
            let kept = inst.initial().states().filter(|s| lit.holds(s)).cloned();
            inst.with_initial(BeliefState::new(kept)?)
        }
        DeltaKind::InitPropUnfixed => {
            if fixed_by_prop(inst.initial())[p] != Some(lit) {
                return Err(structural(format!("{lit} is not fixed initially")));
            }
            let widened = inst.initial().states().flat_map(|s| {
                let mut flipped = s.0.clone();
                flipped[p] = !flipped[p];
                [s.clone(), State(flipped)]
            });
            inst.with_initial(BeliefState::new(widened)?)
        }
    }
}

/// A chain of single-proposition deltas turning `old` into `new`. Folding
/// [`apply_delta`] over the chain reproduces `new` exactly; beliefs that
/// cannot be reached that way are rejected as incompatible.
pub fn decompose(old: &Instance, new: &Instance) -> Result<Vec<Delta>> {
    check_compatible(old, new)?;
    let chain = differences(old, new);
    let mut current = old.clone();
    for &delta in &chain {
        current = apply_delta(&current, delta)?;
    }
    if current != *new {
        return Err(structural(
            "initial belief states are not related by fixing and unfixing propositions",
        ));
    }
    Ok(chain)
}

/// The lowest-id operator that is applicable in every initial state and
/// leaves the whole goal (target and protected literals) true everywhere.
pub fn one_step_solvable(inst: &Instance) -> Option<usize> {
    inst.operators()
        .iter()
        .find(|op| solves_in_one_step(op, inst.initial(), inst.goal()))
        .map(|op| op.id)
}

/// Whether `op` alone takes every state of `initial` into `goal`: its
/// preconditions hold everywhere, and each goal literal is either asserted
/// by a postcondition or untouched and already true everywhere.
pub fn solves_in_one_step(op: &Operator, initial: &BeliefState, goal: &[Literal]) -> bool {
    initial.states().all(|s| op.pre().iter().all(|l| l.holds(s)))
        && goal.iter().all(|&g| match op.post_on(g.prop) {
            Some(effect) => effect == g,
            None => initial.entails(g),
        })
}

/// Repairs `old_plan` for the new problem, preferring in order: reuse as
/// is, one appended operator, a fresh plan from breadth-first search.
pub fn modify_plan(prob: &ModificationProblem, budget: SearchBudget) -> Result<ModificationOutcome> {
    check_compatible(&prob.old, &prob.new)?;
    if !validate_plan(&prob.old, &prob.old_plan)?.is_valid() {
        return Err(Error::Precondition("the old plan does not solve the old problem".into()));
    }
    if validate_plan(&prob.new, &prob.old_plan)?.is_valid() {
        return Ok(ModificationOutcome::Reused(prob.old_plan.clone()));
    }
    if let Some(after) = execute(prob.new.operators(), prob.new.initial(), &prob.old_plan)? {
        let residual = prob.new.with_initial(after)?;
        if let Some(op) = one_step_solvable(&residual) {
            return Ok(ModificationOutcome::ExtendedOneStep { plan: prob.old_plan.then(op), appended: op });
        }
    }
    Ok(match plan_bfs(&prob.new, budget)? {
        SearchOutcome::FoundPlan(plan) => ModificationOutcome::Replanned(plan),
        SearchOutcome::NoPlanWithinDepth | SearchOutcome::BudgetExhausted => ModificationOutcome::Failed,
    })
}

/// One link of a modification chain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainStep {
    pub delta: Delta,
    pub outcome: ModificationOutcome,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ChainReport {
    pub steps: Vec<ChainStep>,
    /// Set when some intermediate problem could not be repaired and the
    /// final problem was planned directly instead.
    pub fell_back: bool,
    pub outcome: ModificationOutcome,
}

/// Walks the delta chain from `old` to `new`, repairing the plan at each
/// link. If a link fails, the final problem is searched from scratch.
pub fn modify_chain(old: &Instance, old_plan: &Plan, new: &Instance, budget: SearchBudget) -> Result<ChainReport> {
    let deltas = decompose(old, new)?;
    if !validate_plan(old, old_plan)?.is_valid() {
        return Err(Error::Precondition("the old plan does not solve the old problem".into()));
    }
    if deltas.is_empty() {
        return Ok(ChainReport {
            steps: Vec::new(),
            fell_back: false,
            outcome: ModificationOutcome::Reused(old_plan.clone()),
        });
    }

    let mut steps = Vec::with_capacity(deltas.len());
    let (mut current, mut plan) = (old.clone(), old_plan.clone());
    for delta in deltas {
        let next = apply_delta(&current, delta)?;
        let prob = ModificationProblem { old: current, old_plan: plan, new: next.clone() };
        let outcome = modify_plan(&prob, budget)?;
        steps.push(ChainStep { delta, outcome: outcome.clone() });
        match outcome.plan() {
            Some(p) => plan = p.clone(),
            None => {
                let outcome = match plan_bfs(new, budget)? {
                    SearchOutcome::FoundPlan(p) => ModificationOutcome::Replanned(p),
                    _ => ModificationOutcome::Failed,
                };
                return Ok(ChainReport { steps, fell_back: true, outcome });
            }
        }
        current = next;
    }
    let outcome = steps.last().expect("nonempty chain").outcome.clone();
    Ok(ChainReport { steps, fell_back: false, outcome })
}
