//! Propositions, states, belief states and operators, together with the
//! execution semantics used everywhere else: an operator is applicable in a
//! state when all of its precondition literals hold there, and applying it
//! overwrites exactly the propositions named by its postconditions.
//!
//! A belief state is a set of complete states. Conformant execution of an
//! operator requires applicability in every member state.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use crate::error::{structural, Error, Result};

/// Index of a proposition, in `0..n` of the enclosing instance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Proposition(pub usize);

impl Proposition {
    pub fn index(self) -> usize {
        self.0
    }
}

impl fmt::Display for Proposition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "p{}", self.0)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Literal {
    pub prop: Proposition,
    pub negated: bool,
}

impl Literal {
    pub fn new(prop: usize, negated: bool) -> Self {
        Literal { prop: Proposition(prop), negated }
    }

    pub fn pos(prop: usize) -> Self {
        Literal::new(prop, false)
    }

    pub fn neg(prop: usize) -> Self {
        Literal::new(prop, true)
    }

    pub fn negation(self) -> Self {
        Literal { prop: self.prop, negated: !self.negated }
    }

    /// The truth value this literal asserts for its proposition.
    pub fn value(self) -> bool {
        !self.negated
    }

    /// Whether the literal holds in `s`. A proposition outside the state
    /// never holds; use [`literal_holds`] for the checked variant.
    #[inline]
    pub fn holds(self, s: &State) -> bool {
        s.0.get(self.prop.0).is_some_and(|&v| v != self.negated)
    }
}

impl fmt::Display for Literal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.negated {
            write!(f, "¬{}", self.prop)
        } else {
            write!(f, "{}", self.prop)
        }
    }
}

/// A complete truth assignment, one value per proposition.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct State(pub Vec<bool>);

impl State {
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, prop: usize) -> Option<bool> {
        self.0.get(prop).copied()
    }
}

impl fmt::Display for State {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &v in &self.0 {
            f.write_str(if v { "T" } else { "F" })?;
        }
        Ok(())
    }
}

/// Parses the `TF..` notation used in diagnostics and tests.
impl FromStr for State {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|ch| match ch {
                'T' | '1' => Ok(true),
                'F' | '0' => Ok(false),
                other => Err(Error::Parse(format!("bad state character {other:?}"))),
            })
            .collect::<Result<Vec<_>>>()
            .map(State)
    }
}

/// A nonempty set of states over the same propositions, kept in
/// lexicographic order so that equal sets compare and hash equal.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct BeliefState {
    states: BTreeSet<State>,
    n: usize,
}

impl BeliefState {
    pub fn new(states: impl IntoIterator<Item = State>) -> Result<Self> {
        let states: BTreeSet<State> = states.into_iter().collect();
        let n = match states.iter().next() {
            Some(s) => s.len(),
            None => return Err(structural("belief state must contain at least one state")),
        };
        if states.iter().any(|s| s.len() != n) {
            return Err(structural("belief state members differ in length"));
        }
        Ok(BeliefState { states, n })
    }

    pub fn singleton(s: State) -> Self {
        let n = s.len();
        BeliefState { states: BTreeSet::from([s]), n }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> impl Iterator<Item = &State> + '_ {
        self.states.iter()
    }

    pub fn contains(&self, s: &State) -> bool {
        self.states.contains(s)
    }

    /// Whether `lit` holds in every member state.
    pub fn entails(&self, lit: Literal) -> bool {
        self.states.iter().all(|s| lit.holds(s))
    }

    /// Literals true in every member state, ordered by proposition.
    pub fn fixed_literals(&self) -> Vec<Literal> {
        let first = self.states.iter().next().expect("belief state is nonempty");
        (0..self.n)
            .filter(|&p| self.states.iter().all(|s| s.0[p] == first.0[p]))
            .map(|p| Literal::new(p, !first.0[p]))
            .collect()
    }
}

impl fmt::Display for BeliefState {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("{")?;
        for (i, s) in self.states.iter().enumerate() {
            if i > 0 {
                f.write_str(", ")?;
            }
            write!(f, "{s}")?;
        }
        f.write_str("}")
    }
}

fn check_condition_set(lits: &mut Vec<Literal>, what: &str) -> Result<()> {
    lits.sort();
    if lits.windows(2).any(|w| w[0].prop == w[1].prop) {
        return Err(structural(format!("{what} mentions a proposition twice")));
    }
    Ok(())
}

/// An operator with unconditional precondition and postcondition literal
/// sets, each holding at most one literal per proposition.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Operator {
    pub id: usize,
    pre: Vec<Literal>,
    post: Vec<Literal>,
}

impl Operator {
    pub fn new(id: usize, mut pre: Vec<Literal>, mut post: Vec<Literal>) -> Result<Self> {
        check_condition_set(&mut pre, "precondition")?;
        check_condition_set(&mut post, "postcondition")?;
        Ok(Operator { id, pre, post })
    }

    /// Preconditions, ordered by proposition.
    pub fn pre(&self) -> &[Literal] {
        &self.pre
    }

    /// Postconditions, ordered by proposition.
    pub fn post(&self) -> &[Literal] {
        &self.post
    }

    /// The postcondition mentioning `prop`, if any.
    pub fn post_on(&self, prop: Proposition) -> Option<Literal> {
        self.post
            .binary_search_by_key(&prop, |l| l.prop)
            .ok()
            .map(|i| self.post[i])
    }

    fn max_prop(&self) -> Option<usize> {
        self.pre.iter().chain(&self.post).map(|l| l.prop.0).max()
    }

    fn applicable_unchecked(&self, s: &State) -> bool {
        self.pre.iter().all(|l| l.holds(s))
    }

    fn apply_unchecked(&self, s: &State) -> State {
        let mut out = s.clone();
        for l in &self.post {
            out.0[l.prop.0] = l.value();
        }
        out
    }
}

impl fmt::Display for Operator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |lits: &[Literal]| lits.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(",");
        write!(f, "a{}: pre={{{}}} post={{{}}}", self.id, join(&self.pre), join(&self.post))
    }
}

/// A conformant planning problem: operators, an initial belief state and a
/// goal. The goal splits into `protected` literals (already true in every
/// initial state) and `target` literals (false in at least one).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Instance {
    n: usize,
    operators: Vec<Operator>,
    initial: BeliefState,
    goal: Vec<Literal>,
    protected: Vec<Literal>,
    target: Vec<Literal>,
}

impl Instance {
    /// Operators must be listed in id order starting at 0; literals must lie
    /// within `0..n`; the goal may mention each proposition at most once.
    pub fn new(
        n: usize,
        operators: Vec<Operator>,
        initial: BeliefState,
        mut goal: Vec<Literal>,
    ) -> Result<Self> {
        if n == 0 {
            return Err(structural("an instance needs at least one proposition"));
        }
        if initial.n() != n {
            return Err(structural(format!(
                "initial states have {} propositions, expected {n}",
                initial.n()
            )));
        }
        for (i, op) in operators.iter().enumerate() {
            if op.id != i {
                return Err(structural(format!("operator at position {i} has id {}", op.id)));
            }
            if op.max_prop().is_some_and(|p| p >= n) {
                return Err(structural(format!("operator a{i} mentions a proposition outside 0..{n}")));
            }
        }
        check_condition_set(&mut goal, "goal")?;
        if goal.iter().any(|l| l.prop.0 >= n) {
            return Err(structural(format!("goal mentions a proposition outside 0..{n}")));
        }
        let (protected, target) = goal.iter().partition(|&&l| initial.entails(l));
        Ok(Instance { n, operators, initial, goal, protected, target })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn operators(&self) -> &[Operator] {
        &self.operators
    }

    pub fn operator(&self, id: usize) -> Option<&Operator> {
        self.operators.get(id)
    }

    pub fn initial(&self) -> &BeliefState {
        &self.initial
    }

    pub fn goal(&self) -> &[Literal] {
        &self.goal
    }

    pub fn protected(&self) -> &[Literal] {
        &self.protected
    }

    pub fn target(&self) -> &[Literal] {
        &self.target
    }

    pub fn with_goal(&self, goal: Vec<Literal>) -> Result<Self> {
        Instance::new(self.n, self.operators.clone(), self.initial.clone(), goal)
    }

    pub fn with_initial(&self, initial: BeliefState) -> Result<Self> {
        Instance::new(self.n, self.operators.clone(), initial, self.goal.clone())
    }
}

/// A sequence of operator ids.
#[derive(Debug, Clone, Default, PartialEq, Eq, Hash)]
pub struct Plan(pub Vec<usize>);

impl Plan {
    pub fn empty() -> Self {
        Plan(Vec::new())
    }

    pub fn steps(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn then(&self, op: usize) -> Plan {
        let mut steps = self.0.clone();
        steps.push(op);
        Plan(steps)
    }
}

impl fmt::Display for Plan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("(empty)");
        }
        for (i, id) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(" ")?;
            }
            write!(f, "a{id}")?;
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FailureKind {
    /// Some step's operator is inapplicable in at least one branch.
    Inapplicable,
    /// The plan runs to completion but the goal does not hold everywhere.
    GoalUnmet,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PlanFailure {
    /// Index of the offending step; equal to the plan length for `GoalUnmet`.
    pub step: usize,
    pub kind: FailureKind,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ValidationReport {
    pub failure: Option<PlanFailure>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.failure.is_none()
    }
}

fn check_in_range(prop: Proposition, n: usize) -> Result<()> {
    if prop.0 >= n {
        return Err(structural(format!("{prop} is outside a state of {n} propositions")));
    }
    Ok(())
}

fn check_operator_fits(op: &Operator, n: usize) -> Result<()> {
    match op.max_prop() {
        Some(p) if p >= n => Err(structural(format!(
            "operator a{} mentions p{p} but states have {n} propositions",
            op.id
        ))),
        _ => Ok(()),
    }
}

pub fn literal_holds(lit: Literal, s: &State) -> Result<bool> {
    check_in_range(lit.prop, s.len())?;
    Ok(lit.holds(s))
}

pub fn is_applicable(op: &Operator, s: &State) -> Result<bool> {
    check_operator_fits(op, s.len())?;
    Ok(op.applicable_unchecked(s))
}

pub fn apply(op: &Operator, s: &State) -> Result<State> {
    if !is_applicable(op, s)? {
        return Err(Error::Inapplicable { op: op.id, state: s.clone() });
    }
    Ok(op.apply_unchecked(s))
}

pub fn apply_belief(op: &Operator, b: &BeliefState) -> Result<BeliefState> {
    check_operator_fits(op, b.n())?;
    if let Some(witness) = b.states().find(|s| !op.applicable_unchecked(s)) {
        return Err(Error::InapplicableInBelief { op: op.id, witness: witness.clone() });
    }
    Ok(BeliefState {
        states: b.states().map(|s| op.apply_unchecked(s)).collect(),
        n: b.n(),
    })
}

/// Whether every goal literal holds in every state of `b`.
pub fn satisfies(b: &BeliefState, goals: &[Literal]) -> bool {
    goals.iter().all(|&g| b.entails(g))
}

/// Executes `plan` conformantly from the initial belief and checks the goal.
pub fn validate_plan(inst: &Instance, plan: &Plan) -> Result<ValidationReport> {
    if let Some(&bad) = plan.steps().iter().find(|&&id| id >= inst.operators.len()) {
        return Err(structural(format!("plan refers to unknown operator a{bad}")));
    }
    let mut belief = inst.initial.clone();
    for (step, &id) in plan.steps().iter().enumerate() {
        belief = match apply_belief(&inst.operators[id], &belief) {
            Ok(next) => next,
            Err(Error::InapplicableInBelief { .. }) => {
                return Ok(ValidationReport {
                    failure: Some(PlanFailure { step, kind: FailureKind::Inapplicable }),
                })
            }
            Err(e) => return Err(e),
        };
    }
    let failure = (!satisfies(&belief, &inst.goal))
        .then_some(PlanFailure { step: plan.len(), kind: FailureKind::GoalUnmet });
    Ok(ValidationReport { failure })
}

/// Executes `plan` from `belief`, returning the final belief state, or
/// `None` if some step is inapplicable in some branch.
pub fn execute(ops: &[Operator], belief: &BeliefState, plan: &Plan) -> Result<Option<BeliefState>> {
    let mut belief = belief.clone();
    for &id in plan.steps() {
        let op = ops
            .get(id)
            .ok_or_else(|| structural(format!("plan refers to unknown operator a{id}")))?;
        belief = match apply_belief(op, &belief) {
            Ok(next) => next,
            Err(Error::InapplicableInBelief { .. }) => return Ok(None),
            Err(e) => return Err(e),
        };
    }
    Ok(Some(belief))
}
