//! Random instance generation under the variable and fixed models.
//!
//! Every random draw comes from an [`RngStream`] keyed by the master seed and
//! a label path (operator `i` uses `[OPERATOR, i]`, the initial belief uses
//! `[INITIAL]`, the goal uses `[GOAL]`). Streams are never shared, so an
//! instance is the same whether its operators are drawn eagerly, lazily, or
//! on different threads.

use std::fmt;
use std::str::FromStr;

use rand::seq::index;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::model::{BeliefState, Instance, Literal, Operator, State};

/// Upper limit on unknown propositions; the initial belief holds `2^m` states.
pub const MAX_UNKNOWN: usize = 16;

const STREAM_OPERATOR: u64 = 1;
const STREAM_INITIAL: u64 = 2;
const STREAM_GOAL: u64 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum ModelKind {
    /// Each proposition joins a condition set independently.
    Variable,
    /// Every operator has exactly `r` preconditions and `c` postconditions.
    Fixed,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Variable => "variable",
            ModelKind::Fixed => "fixed",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "variable" => Ok(ModelKind::Variable),
            "fixed" => Ok(ModelKind::Fixed),
            other => Err(Error::Parse(format!("unknown model kind {other:?}"))),
        }
    }
}

/// Everything needed to sample an instance reproducibly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ModelParams {
    pub model: ModelKind,
    /// Proposition count.
    pub n: usize,
    /// Operator count.
    pub o: usize,
    /// Preconditions per operator (exact for the fixed model, expected for the variable one).
    pub r: usize,
    /// Postconditions per operator, read like `r`.
    pub c: usize,
    /// Unknown propositions in the initial belief.
    pub m: usize,
    /// Goal size for raw instances.
    pub g: usize,
    pub seed: u64,
    pub protect_achieved: bool,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            model: ModelKind::Variable,
            n: 10,
            o: 0,
            r: 3,
            c: 2,
            m: 1,
            g: 1,
            seed: 0,
            protect_achieved: true,
        }
    }
}

impl ModelParams {
    pub fn validate(&self) -> Result<()> {
        self.validate_operator_counts()?;
        if self.m >= self.n {
            return Err(invalid(format!("m = {} must be below n = {}", self.m, self.n)));
        }
        if self.m > MAX_UNKNOWN {
            return Err(invalid(format!("m = {} exceeds the supported maximum {MAX_UNKNOWN}", self.m)));
        }
        if self.g == 0 || self.g > self.n {
            return Err(invalid(format!("g = {} must lie in 1..={}", self.g, self.n)));
        }
        Ok(())
    }

    fn validate_operator_counts(&self) -> Result<()> {
        if self.n == 0 {
            return Err(invalid("n must be at least 1"));
        }
        if self.r > self.n {
            return Err(invalid(format!("r = {} exceeds n = {}", self.r, self.n)));
        }
        if self.c == 0 || self.c > self.n {
            return Err(invalid(format!("c = {} must lie in 1..={}", self.c, self.n)));
        }
        Ok(())
    }

    pub fn initial_state_count(&self) -> usize {
        1 << self.m
    }
}

/// Mixes a seed with a label path (SplitMix64 finalizer per word).
pub fn derive_seed(seed: u64, label: &[u64]) -> u64 {
    fn mix(mut z: u64) -> u64 {
        z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^ (z >> 31)
    }
    label.iter().fold(mix(seed), |acc, &word| mix(acc ^ mix(word)))
}

/// A deterministic random stream derived from `(seed, label)`; ChaCha8
/// underneath, so draws are identical on every platform.
#[derive(Debug, Clone)]
pub struct RngStream(ChaCha8Rng);

impl RngStream {
    pub fn new(seed: u64, label: &[u64]) -> Self {
        RngStream(ChaCha8Rng::seed_from_u64(derive_seed(seed, label)))
    }
}

impl RngCore for RngStream {
    fn next_u32(&mut self) -> u32 {
        self.0.next_u32()
    }

    fn next_u64(&mut self) -> u64 {
        self.0.next_u64()
    }

    fn fill_bytes(&mut self, dest: &mut [u8]) {
        self.0.fill_bytes(dest)
    }

    fn try_fill_bytes(&mut self, dest: &mut [u8]) -> std::result::Result<(), rand::Error> {
        self.0.try_fill_bytes(dest)
    }
}

fn variable_conditions(n: usize, count: usize, rng: &mut RngStream) -> Vec<Literal> {
    // positive with probability count/2n, negative with count/2n, else absent
    let half = count as f64 / (2 * n) as f64;
    (0..n)
        .filter_map(|p| {
            let u: f64 = rng.gen();
            if u < half {
                Some(Literal::pos(p))
            } else if u < 2.0 * half {
                Some(Literal::neg(p))
            } else {
                None
            }
        })
        .collect()
}

fn fixed_conditions(n: usize, count: usize, rng: &mut RngStream) -> Vec<Literal> {
    let mut props = index::sample(rng, n, count).into_vec();
    props.sort_unstable();
    props.into_iter().map(|p| Literal::new(p, rng.gen())).collect()
}

pub fn gen_operator_variable(params: &ModelParams, id: usize, rng: &mut RngStream) -> Result<Operator> {
    params.validate_operator_counts()?;
    let pre = variable_conditions(params.n, params.r, rng);
    let post = variable_conditions(params.n, params.c, rng);
    Operator::new(id, pre, post)
}

pub fn gen_operator_fixed(params: &ModelParams, id: usize, rng: &mut RngStream) -> Result<Operator> {
    params.validate_operator_counts()?;
    let pre = fixed_conditions(params.n, params.r, rng);
    let post = fixed_conditions(params.n, params.c, rng);
    Operator::new(id, pre, post)
}

/// Operator `id` of the instance described by `params`, drawn from its own stream.
pub fn gen_operator(params: &ModelParams, id: usize) -> Result<Operator> {
    let mut rng = RngStream::new(params.seed, &[STREAM_OPERATOR, id as u64]);
    match params.model {
        ModelKind::Variable => gen_operator_variable(params, id, &mut rng),
        ModelKind::Fixed => gen_operator_fixed(params, id, &mut rng),
    }
}

pub fn gen_operators(params: &ModelParams) -> Result<Vec<Operator>> {
    (0..params.o).map(|id| gen_operator(params, id)).collect()
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InitialDraw {
    pub belief: BeliefState,
    /// Literals true in every state of `belief`, ordered by proposition.
    pub fixed: Vec<Literal>,
    /// The propositions left open, ascending.
    pub unknown: Vec<usize>,
}

/// All `2^m` completions of a random partial state with `m` open propositions.
pub fn gen_initial_belief(params: &ModelParams, rng: &mut RngStream) -> Result<InitialDraw> {
    let (n, m) = (params.n, params.m);
    if n == 0 || m >= n {
        return Err(invalid(format!("m = {m} must be below n = {n}")));
    }
    if m > MAX_UNKNOWN {
        return Err(invalid(format!("m = {m} exceeds the supported maximum {MAX_UNKNOWN}")));
    }
    let mut unknown = index::sample(rng, n, m).into_vec();
    unknown.sort_unstable();
    let mut base = vec![false; n];
    let mut fixed = Vec::with_capacity(n - m);
    for (p, slot) in base.iter_mut().enumerate() {
        if unknown.binary_search(&p).is_err() {
            *slot = rng.gen();
            fixed.push(Literal::new(p, !*slot));
        }
    }
    let states = (0..1usize << m).map(|mask| {
        let mut values = base.clone();
        for (bit, &p) in unknown.iter().enumerate() {
            values[p] = mask >> bit & 1 == 1;
        }
        State(values)
    });
    Ok(InitialDraw { belief: BeliefState::new(states)?, fixed, unknown })
}

/// Initial belief and goal of a modification instance, without operators.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ModificationSetup {
    pub initial: InitialDraw,
    pub target: Literal,
    pub protected: Vec<Literal>,
}

impl ModificationSetup {
    pub fn goal(&self) -> Vec<Literal> {
        let mut goal = self.protected.clone();
        goal.push(self.target);
        goal.sort();
        goal
    }
}

pub fn gen_modification_setup(params: &ModelParams) -> Result<ModificationSetup> {
    params.validate()?;
    if params.m == 0 {
        return Err(invalid("m = 0 leaves no unachieved goal literal; need m >= 1"));
    }
    let initial = gen_initial_belief(params, &mut RngStream::new(params.seed, &[STREAM_INITIAL]))?;
    let mut rng = RngStream::new(params.seed, &[STREAM_GOAL]);
    let prop = initial.unknown[rng.gen_range(0..initial.unknown.len())];
    let target = Literal::new(prop, rng.gen());
    let protected = if params.protect_achieved { initial.fixed.clone() } else { Vec::new() };
    Ok(ModificationSetup { initial, target, protected })
}

/// An instance with a single unachieved goal literal over an unknown
/// proposition; with `protect_achieved` the fixed literals join the goal.
/// For `m = 1` this yields `n` goal literals of which `n - 1` already hold.
pub fn gen_modification_instance(params: &ModelParams) -> Result<Instance> {
    let setup = gen_modification_setup(params)?;
    let goal = setup.goal();
    Instance::new(params.n, gen_operators(params)?, setup.initial.belief, goal)
}

/// An instance with `g` random goal literals on distinct propositions.
pub fn gen_raw_instance(params: &ModelParams) -> Result<Instance> {
    params.validate()?;
    let initial = gen_initial_belief(params, &mut RngStream::new(params.seed, &[STREAM_INITIAL]))?;
    let mut rng = RngStream::new(params.seed, &[STREAM_GOAL]);
    let mut props = index::sample(&mut rng, params.n, params.g).into_vec();
    props.sort_unstable();
    let goal = props.into_iter().map(|p| Literal::new(p, rng.gen())).collect();
    Instance::new(params.n, gen_operators(params)?, initial.belief, goal)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiment::wilson_ci;

    fn params(model: ModelKind) -> ModelParams {
        ModelParams { model, n: 10, o: 5, r: 3, c: 2, m: 1, g: 3, seed: 7, ..Default::default() }
    }

    #[test]
    fn zero_preconditions_give_empty_pre() {
        for model in [ModelKind::Variable, ModelKind::Fixed] {
            let p = ModelParams { r: 0, ..params(model) };
            for i in 0..200 {
                assert!(gen_operator(&p, i).unwrap().pre().is_empty());
            }
        }
    }

    #[test]
    fn operators_are_deterministic() {
        for model in [ModelKind::Variable, ModelKind::Fixed] {
            let p = params(model);
            let mut a = RngStream::new(p.seed, &[9, 4]);
            let mut b = RngStream::new(p.seed, &[9, 4]);
            let (x, y) = match model {
                ModelKind::Variable => {
                    (gen_operator_variable(&p, 0, &mut a).unwrap(), gen_operator_variable(&p, 0, &mut b).unwrap())
                }
                ModelKind::Fixed => {
                    (gen_operator_fixed(&p, 0, &mut a).unwrap(), gen_operator_fixed(&p, 0, &mut b).unwrap())
                }
            };
            assert_eq!(x, y);
        }
    }

    #[test]
    fn different_labels_give_different_streams() {
        let mut a = RngStream::new(1, &[1, 0]);
        let mut b = RngStream::new(1, &[1, 1]);
        let mut c = RngStream::new(2, &[1, 0]);
        let (x, y, z) = (a.next_u64(), b.next_u64(), c.next_u64());
        assert!(x != y && x != z && y != z);
    }

    #[test]
    fn variable_model_mean_precondition_count() {
        let p = ModelParams { model: ModelKind::Variable, n: 10, r: 3, ..Default::default() };
        let draws = 100_000;
        let total: usize = (0..draws).map(|i| gen_operator(&p, i).unwrap().pre().len()).sum();
        let mean = total as f64 / draws as f64;
        assert!((mean - 3.0).abs() < 0.05, "mean |pre| = {mean}");
    }

    #[test]
    fn fixed_model_cardinalities() {
        let p = ModelParams { model: ModelKind::Fixed, n: 5, r: 2, c: 1, m: 1, ..Default::default() };
        for i in 0..1000 {
            let op = gen_operator(&p, i).unwrap();
            assert_eq!(op.pre().len(), 2);
            assert_eq!(op.post().len(), 1);
        }
    }

    #[test]
    fn fixed_model_literal_inclusion_rate() {
        let p = ModelParams { model: ModelKind::Fixed, n: 10, r: 3, c: 2, seed: 11, ..Default::default() };
        let draws = 100_000;
        let hits = (0..draws)
            .filter(|&i| gen_operator(&p, i).unwrap().post().contains(&Literal::pos(0)))
            .count();
        let (lo, hi) = wilson_ci(hits as u64, draws as u64, 0.99).unwrap();
        assert!(lo <= 0.1 && 0.1 <= hi, "CI ({lo}, {hi})");
    }

    #[test]
    fn operator_counts_are_validated() {
        let p = ModelParams { n: 10, r: 11, ..Default::default() };
        assert!(matches!(gen_operator(&p, 0), Err(Error::InvalidParameters(_))));
        let p = ModelParams { n: 10, c: 11, ..Default::default() };
        assert!(matches!(gen_operator(&p, 0), Err(Error::InvalidParameters(_))));
    }

    #[test]
    fn initial_belief_shapes() {
        let p = ModelParams { n: 6, m: 0, ..Default::default() };
        let draw = gen_initial_belief(&p, &mut RngStream::new(3, &[])).unwrap();
        assert_eq!(draw.belief.len(), 1);
        assert_eq!(draw.fixed.len(), 6);

        let p = ModelParams { n: 4, m: 2, ..Default::default() };
        let draw = gen_initial_belief(&p, &mut RngStream::new(3, &[])).unwrap();
        assert_eq!(draw.belief.len(), 4);
        assert_eq!(draw.belief.fixed_literals().len(), 2);
        assert_eq!(draw.belief.fixed_literals(), draw.fixed);

        let p = ModelParams { n: 4, m: 4, ..Default::default() };
        assert!(gen_initial_belief(&p, &mut RngStream::new(3, &[])).is_err());
    }

    #[test]
    fn unknown_proposition_is_uniform() {
        let p = ModelParams { n: 3, m: 1, ..Default::default() };
        let draws = 60_000u64;
        let mut counts = [0u64; 3];
        for t in 0..draws {
            let draw = gen_initial_belief(&p, &mut RngStream::new(5, &[t])).unwrap();
            counts[draw.unknown[0]] += 1;
        }
        for count in counts {
            let (lo, hi) = wilson_ci(count, draws, 0.99).unwrap();
            assert!(lo <= 1.0 / 3.0 && 1.0 / 3.0 <= hi, "count {count}");
        }
    }

    #[test]
    fn modification_instance_shapes() {
        let p = ModelParams { n: 10, m: 1, o: 4, protect_achieved: true, ..Default::default() };
        let inst = gen_modification_instance(&p).unwrap();
        assert_eq!(inst.goal().len(), 10);
        assert_eq!(inst.protected().len(), 9);
        assert_eq!(inst.initial().len(), 2);
        assert_eq!(inst.operators().len(), 4);

        let p = ModelParams { n: 10, m: 3, protect_achieved: false, ..Default::default() };
        let inst = gen_modification_instance(&p).unwrap();
        assert_eq!(inst.goal().len(), 1);
        assert_eq!(inst.initial().len(), 8);

        let p = ModelParams { m: 0, ..Default::default() };
        assert!(matches!(gen_modification_instance(&p), Err(Error::InvalidParameters(_))));
    }

    #[test]
    fn modification_instance_invariants_hold_on_random_draws() {
        for seed in 0..10_000u64 {
            let p = ModelParams {
                model: if seed % 2 == 0 { ModelKind::Variable } else { ModelKind::Fixed },
                n: 3 + (seed % 6) as usize,
                o: (seed % 5) as usize,
                m: 1 + (seed % 2) as usize,
                r: 2,
                c: 1 + (seed % 2) as usize,
                protect_achieved: seed % 3 != 0,
                seed,
                ..Default::default()
            };
            let inst = gen_modification_instance(&p).unwrap();
            assert_eq!(inst.target().len(), 1);
            let target = inst.target()[0];
            assert!(inst.initial().states().any(|s| !target.holds(s)));
            for &lit in inst.protected() {
                assert!(inst.initial().entails(lit));
            }
            let mut props: Vec<_> = inst.goal().iter().map(|l| l.prop).collect();
            props.dedup();
            assert_eq!(props.len(), inst.goal().len());
            let expected_goal = if p.protect_achieved { p.n - p.m + 1 } else { 1 };
            assert_eq!(inst.goal().len(), expected_goal);
        }
    }

    #[test]
    fn raw_instance_goals() {
        let p = ModelParams { g: 0, ..Default::default() };
        assert!(matches!(gen_raw_instance(&p), Err(Error::InvalidParameters(_))));

        let p = ModelParams { n: 6, g: 6, m: 0, o: 3, seed: 17, ..Default::default() };
        let inst = gen_raw_instance(&p).unwrap();
        let only = inst.initial().states().next().unwrap().clone();
        let expected: Vec<_> = inst.goal().iter().copied().filter(|l| l.holds(&only)).collect();
        assert_eq!(inst.protected(), expected.as_slice());

        for seed in 0..500 {
            let p = ModelParams { n: 8, g: 5, m: 2, seed, ..Default::default() };
            let inst = gen_raw_instance(&p).unwrap();
            assert_eq!(inst.goal().len(), 5);
            assert!(inst.goal().windows(2).all(|w| w[0].prop < w[1].prop));
        }
    }

    #[test]
    fn same_params_same_instance() {
        for model in [ModelKind::Variable, ModelKind::Fixed] {
            let p = params(model);
            assert_eq!(gen_modification_instance(&p).unwrap(), gen_modification_instance(&p).unwrap());
            assert_eq!(gen_raw_instance(&p).unwrap(), gen_raw_instance(&p).unwrap());
        }
    }
}
