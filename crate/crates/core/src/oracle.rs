//! Brute-force reference engines. Nothing here is clever; everything here is
//! meant to be obviously right, so the faster code elsewhere can be checked
//! against it.

use std::collections::{HashMap, VecDeque};

use crate::bounds::Probability;
use crate::error::{invalid, Error, Result};
use crate::model::{apply_belief, satisfies, validate_plan, BeliefState, Instance, Literal, Plan};

/// Largest `n` accepted by [`enumerate_consistency_prob`].
pub const MAX_ENUMERATION_PROPS: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchBudget {
    pub max_depth: usize,
    pub max_beliefs: usize,
}

impl Default for SearchBudget {
    fn default() -> Self {
        SearchBudget { max_depth: 8, max_beliefs: 1 << 20 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum SearchOutcome {
    /// A shortest conformant plan.
    FoundPlan(Plan),
    /// No plan of length at most `max_depth` exists.
    NoPlanWithinDepth,
    /// The visited set outgrew `max_beliefs` before the search could decide.
    BudgetExhausted,
}

/// Breadth-first search over belief states, expanding operators in
/// ascending id order. Only operators applicable in every member state are
/// expanded, so every returned plan is conformant and of minimal length.
pub fn plan_bfs(inst: &Instance, budget: SearchBudget) -> Result<SearchOutcome> {
    let goal = inst.goal();
    let start = inst.initial().clone();
    if satisfies(&start, goal) {
        return Ok(SearchOutcome::FoundPlan(Plan::empty()));
    }
    if budget.max_beliefs == 0 {
        return Ok(SearchOutcome::BudgetExhausted);
    }

    // parent index and operator for plan reconstruction
    let mut nodes: Vec<(Option<usize>, usize)> = vec![(None, usize::MAX)];
    let mut visited: HashMap<BeliefState, usize> = HashMap::from([(start.clone(), 0)]);
    let mut frontier: VecDeque<(BeliefState, usize)> = VecDeque::from([(start, 0)]);

    for _depth in 0..budget.max_depth {
        let mut next = VecDeque::new();
        while let Some((belief, node)) = frontier.pop_front() {
            for op in inst.operators() {
                let succ = match apply_belief(op, &belief) {
                    Ok(succ) => succ,
                    Err(Error::InapplicableInBelief { .. }) => continue,
                    Err(e) => return Err(e),
                };
                if visited.contains_key(&succ) {
                    continue;
                }
                nodes.push((Some(node), op.id));
                let id = nodes.len() - 1;
                if satisfies(&succ, goal) {
                    return Ok(SearchOutcome::FoundPlan(reconstruct(&nodes, id)));
                }
                if visited.len() >= budget.max_beliefs {
                    return Ok(SearchOutcome::BudgetExhausted);
                }
                visited.insert(succ.clone(), id);
                next.push_back((succ, id));
            }
        }
        if next.is_empty() {
            break;
        }
        frontier = next;
    }
    Ok(SearchOutcome::NoPlanWithinDepth)
}

fn reconstruct(nodes: &[(Option<usize>, usize)], mut id: usize) -> Plan {
    let mut steps = Vec::new();
    while let (Some(parent), op) = nodes[id] {
        steps.push(op);
        id = parent;
    }
    steps.reverse();
    Plan(steps)
}

/// `f(j, n, w)` by direct enumeration: every choice of `j` distinct
/// propositions and every sign assignment, counted against the canonical
/// target set `{p0, .., p(w-1)}`.
pub fn enumerate_consistency_prob(j: usize, n: usize, w: usize) -> Result<Probability> {
    if w > n {
        return Err(invalid(format!("w = {w} exceeds n = {n}")));
    }
    let target: Vec<Literal> = (0..w).map(Literal::pos).collect();
    enumerate_consistency_prob_against(j, n, &target)
}

/// Same as [`enumerate_consistency_prob`] against an arbitrary target set.
pub fn enumerate_consistency_prob_against(j: usize, n: usize, target: &[Literal]) -> Result<Probability> {
    if n > MAX_ENUMERATION_PROPS {
        return Err(Error::Budget(format!(
            "enumeration over n = {n} exceeds the limit of {MAX_ENUMERATION_PROPS}"
        )));
    }
    if j > n {
        return Err(invalid(format!("j = {j} exceeds n = {n}")));
    }
    if target.iter().any(|l| l.prop.0 >= n) {
        return Err(invalid("target literal outside 0..n"));
    }
    let required: Vec<Option<bool>> = (0..n)
        .map(|p| target.iter().find(|l| l.prop.0 == p).map(|l| l.value()))
        .collect();

    // Subsets of size j as bitmasks; each subset is equally likely and each
    // of its 2^j sign patterns too.
    let (mut consistent, mut total) = (0u64, 0u64);
    for subset in 0u32..(1 << n) {
        if subset.count_ones() as usize != j {
            continue;
        }
        let props: Vec<usize> = (0..n).filter(|&p| subset >> p & 1 == 1).collect();
        for signs in 0u32..(1 << j) {
            total += 1;
            let ok = props.iter().enumerate().all(|(i, &p)| {
                let value = signs >> i & 1 == 1;
                required[p].is_none_or(|want| want == value)
            });
            consistent += ok as u64;
        }
    }
    Probability::new(consistent as f64 / total as f64)
}

/// Every operator that on its own is a valid conformant plan, found by plan
/// validation alone.
pub fn exhaustive_one_step(inst: &Instance) -> Result<Vec<usize>> {
    let mut solving = Vec::new();
    for op in inst.operators() {
        if validate_plan(inst, &Plan(vec![op.id]))?.is_valid() {
            solving.push(op.id);
        }
    }
    Ok(solving)
}
