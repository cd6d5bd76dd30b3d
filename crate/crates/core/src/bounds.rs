//! Analytic solvability machinery: the consistency probability `f(j, n, w)`,
//! the operator-count thresholds below which almost no instance and above
//! which almost every instance is solvable in one step, and the per-operator
//! success probabilities those thresholds are built from.
//!
//! Thresholds are returned as reals. Callers round: floor when testing the
//! "almost never solvable" side, ceiling for the "almost always" side.

use std::fmt;

use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Probability(f64);

impl Probability {
    pub fn new(value: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&value) {
            return Err(invalid(format!("{value} is not a probability")));
        }
        Ok(Probability(value))
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl fmt::Display for Probability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// `f(j, n, w)`: probability that `j` conditions drawn without replacement
/// from `n` propositions, each with a uniform sign, are consistent with a
/// fixed set of `w` conditions.
///
/// Evaluated by the recurrence
/// `f(j, n, w) = (n - w)/n * f(j-1, n-1, w) + w/(2n) * f(j-1, n-1, w-1)`
/// with `f(0, ., .) = 1` and `f(., ., 0) = 1`. The other boundary values
/// (`f(j, n, n) = 2^-j`, `f(n, n, w) = 2^-w`) fall out of the recurrence.
pub fn consistency_prob(j: usize, n: usize, w: usize) -> Result<Probability> {
    if j > n || w > n {
        return Err(invalid(format!("f({j}, {n}, {w}) needs j <= n and w <= n")));
    }
    // Along every path n - j stays constant, so level `i` (conditions left)
    // sits at n - (j - i) propositions. row[v] holds f(i, n - j + i, v).
    let offset = n - j;
    let mut row = vec![1.0f64; w + 1];
    for i in 1..=j {
        let props = offset + i;
        let mut next = vec![1.0f64; w + 1];
        for v in 1..=w.min(props) {
            let miss = if v < props { (props - v) as f64 / props as f64 * row[v] } else { 0.0 };
            let hit = v as f64 / (2 * props) as f64 * row[v - 1];
            next[v] = miss + hit;
        }
        row = next;
    }
    Probability::new(row[w])
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundParams {
    pub n: usize,
    pub r: usize,
    pub c: usize,
    /// Initial-state count.
    pub k: usize,
    pub sigma: f64,
}

impl BoundParams {
    pub fn validate(&self) -> Result<()> {
        check_counts(self.n, self.r, self.c)?;
        if self.k == 0 {
            return Err(invalid("k must be at least 1"));
        }
        check_sigma(self.sigma)
    }

    pub fn alpha_ub(&self) -> Result<f64> {
        self.validate()?;
        upper_bound_alpha(self.n, self.c, self.sigma)
    }

    pub fn alpha_lb(&self) -> Result<f64> {
        self.validate()?;
        lower_bound_alpha(self.n, self.r, self.c, self.k, self.sigma)
    }
}

fn check_sigma(sigma: f64) -> Result<()> {
    if !(sigma > 0.0 && sigma < 1.0) {
        return Err(invalid(format!("sigma = {sigma} must lie strictly between 0 and 1")));
    }
    Ok(())
}

fn check_counts(n: usize, r: usize, c: usize) -> Result<()> {
    if n == 0 {
        return Err(invalid("n must be at least 1"));
    }
    if r > n {
        return Err(invalid(format!("r = {r} exceeds n = {n}")));
    }
    if c == 0 || c > n {
        return Err(invalid(format!("c = {c} must lie in 1..={n}")));
    }
    Ok(())
}

/// Probability that one random operator has a given literal among its postconditions.
fn post_atom(n: usize, c: usize) -> f64 {
    c as f64 / (2 * n) as f64
}

/// `ln(1 - sigma) / ln(1 - c/2n)`: with at most this many operators, at
/// least a `1 - sigma` fraction of instances has no one-step solution.
pub fn upper_bound_alpha(n: usize, c: usize, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    if n == 0 || c == 0 || c >= 2 * n {
        return Err(invalid(format!("need 1 <= c < 2n, got c = {c}, n = {n}")));
    }
    Ok((1.0 - sigma).ln() / (1.0 - post_atom(n, c)).ln())
}

/// `e^(rk) e^c (2n/c) ln(1/sigma)`: with at least this many operators, at
/// least a `1 - sigma` fraction of instances has a one-step solution.
pub fn lower_bound_alpha(n: usize, r: usize, c: usize, k: usize, sigma: f64) -> Result<f64> {
    check_sigma(sigma)?;
    check_counts(n, r, c)?;
    if k == 0 {
        return Err(invalid("k must be at least 1"));
    }
    let (r, c, k) = (r as f64, c as f64, k as f64);
    Ok((r * k).exp() * c.exp() * (2.0 * n as f64 / c) * (1.0 / sigma).ln())
}

/// `(1 - r/2n)^(nk) (1 - c/2n)^(n-1) (c/2n)` under the variable model.
pub fn one_op_success_prob_variable(n: usize, r: usize, c: usize, k: usize) -> Result<Probability> {
    check_counts(n, r, c)?;
    if k == 0 {
        return Err(invalid("k must be at least 1"));
    }
    let pre_ok = (1.0 - r as f64 / (2 * n) as f64).powf((n * k) as f64);
    let no_clobber = (1.0 - post_atom(n, c)).powi(n as i32 - 1);
    Probability::new(pre_ok * no_clobber * post_atom(n, c))
}

/// `2^(-rk) f(c-1, n-1, n-1) (c/2n)` under the fixed model.
pub fn one_op_success_prob_fixed(n: usize, r: usize, c: usize, k: usize) -> Result<Probability> {
    check_counts(n, r, c)?;
    if k == 0 {
        return Err(invalid("k must be at least 1"));
    }
    let pre_ok = 2f64.powf(-((r * k) as f64));
    let no_clobber = consistency_prob(c - 1, n - 1, n - 1)?.value();
    Probability::new(pre_ok * no_clobber * post_atom(n, c))
}

/// `1 - (1 - c/2n)^o`: probability that a given literal is a postcondition
/// of at least one of `o` operators.
pub fn goal_in_some_postcond_prob(n: usize, c: usize, o: usize) -> Result<Probability> {
    if n == 0 || c > 2 * n {
        return Err(invalid(format!("need n >= 1 and c <= 2n, got c = {c}, n = {n}")));
    }
    let miss = (1.0 - post_atom(n, c)).powf(o as f64);
    Probability::new((1.0 - miss).clamp(0.0, 1.0))
}
