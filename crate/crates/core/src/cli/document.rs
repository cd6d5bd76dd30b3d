//! On-disk formats: instances as JSON documents, plans as one operator id
//! per line, sweep curves as CSV.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::experiment::{Curve, CurvePoint};
use crate::generate::ModelKind;
use crate::model::{BeliefState, Instance, Literal, Operator, Plan, State};

pub const CSV_HEADER: &str = "alpha,operators,trials,successes,p_hat,ci_low,ci_high";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct LiteralDoc {
    pub prop: usize,
    pub neg: bool,
}

impl From<Literal> for LiteralDoc {
    fn from(l: Literal) -> Self {
        LiteralDoc { prop: l.prop.0, neg: l.negated }
    }
}

impl From<LiteralDoc> for Literal {
    fn from(l: LiteralDoc) -> Self {
        Literal::new(l.prop, l.neg)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct OperatorDoc {
    pub id: usize,
    pub pre: Vec<LiteralDoc>,
    pub post: Vec<LiteralDoc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum GenMode {
    Modification,
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct GenParams {
    pub mode: GenMode,
    pub n: usize,
    pub o: usize,
    pub r: usize,
    pub c: usize,
    pub m: usize,
    pub g: usize,
    pub protect_achieved: bool,
}

/// Where a generated instance came from, enough to regenerate it.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Provenance {
    pub model: ModelKind,
    pub params: GenParams,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InstanceDocument {
    pub n: usize,
    pub operators: Vec<OperatorDoc>,
    pub initial: Vec<Vec<bool>>,
    pub goal: Vec<LiteralDoc>,
    pub protected: Vec<LiteralDoc>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub provenance: Option<Provenance>,
}

fn docs(lits: &[Literal]) -> Vec<LiteralDoc> {
    lits.iter().copied().map(LiteralDoc::from).collect()
}

fn lits(docs: &[LiteralDoc]) -> Vec<Literal> {
    docs.iter().copied().map(Literal::from).collect()
}

impl InstanceDocument {
    pub fn from_instance(inst: &Instance, provenance: Option<Provenance>) -> Self {
        InstanceDocument {
            n: inst.n(),
            operators: inst
                .operators()
                .iter()
                .map(|op| OperatorDoc { id: op.id, pre: docs(op.pre()), post: docs(op.post()) })
                .collect(),
            initial: inst.initial().states().map(|s| s.0.clone()).collect(),
            goal: docs(inst.goal()),
            protected: docs(inst.protected()),
            provenance,
        }
    }

    /// Builds the instance, checking that `protected` is exactly the set of
    /// goal literals true in every initial state.
    pub fn to_instance(&self) -> Result<Instance> {
        let operators = self
            .operators
            .iter()
            .map(|op| Operator::new(op.id, lits(&op.pre), lits(&op.post)))
            .collect::<Result<Vec<_>>>()?;
        let initial = BeliefState::new(self.initial.iter().cloned().map(State))?;
        let inst = Instance::new(self.n, operators, initial, lits(&self.goal))?;
        let mut protected = lits(&self.protected);
        protected.sort();
        if protected != inst.protected() {
            return Err(Error::Structural(
                "protected literals must be exactly the goal literals true in every initial state".into(),
            ));
        }
        Ok(inst)
    }

    pub fn parse(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("instance documents always serialize");
        text.push('\n');
        text
    }
}

pub fn parse_instance(text: &str) -> Result<Instance> {
    InstanceDocument::parse(text)?.to_instance()
}

/// One operator id per line; `a` prefixes, blank lines and `#` comments are allowed.
pub fn parse_plan(text: &str) -> Result<Plan> {
    text.lines()
        .map(|line| line.split('#').next().unwrap_or("").trim())
        .filter(|line| !line.is_empty())
        .map(|line| {
            line.strip_prefix('a')
                .unwrap_or(line)
                .parse::<usize>()
                .map_err(|_| Error::Parse(format!("bad plan step {line:?}")))
        })
        .collect::<Result<Vec<_>>>()
        .map(Plan)
}

pub fn write_plan(plan: &Plan) -> String {
    plan.steps().iter().map(|id| format!("{id}\n")).collect()
}

/// Floats use the shortest representation that parses back to the same value.
pub fn curve_to_csv(curve: &Curve) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for p in &curve.points {
        writeln!(
            out,
            "{},{},{},{},{},{},{}",
            p.alpha, p.operators, p.trials, p.successes, p.p_hat, p.ci_low, p.ci_high
        )
        .unwrap();
    }
    out
}

pub fn parse_curve_csv(text: &str) -> Result<Vec<CurvePoint>> {
    let mut lines = text.lines();
    if lines.next() != Some(CSV_HEADER) {
        return Err(Error::Parse("missing or unexpected CSV header".into()));
    }
    lines
        .map(|line| {
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != 7 {
                return Err(Error::Parse(format!("expected 7 fields in {line:?}")));
            }
            let float = |s: &str| s.parse::<f64>().map_err(|e| Error::Parse(format!("{s:?}: {e}")));
            let int = |s: &str| s.parse::<u64>().map_err(|e| Error::Parse(format!("{s:?}: {e}")));
            Ok(CurvePoint {
                alpha: float(fields[0])?,
                operators: int(fields[1])? as usize,
                trials: int(fields[2])?,
                successes: int(fields[3])?,
                p_hat: float(fields[4])?,
                ci_low: float(fields[5])?,
                ci_high: float(fields[6])?,
            })
        })
        .collect()
}

/// Whitespace-separated columns for plotting tools.
pub fn curve_to_columns(curve: &Curve) -> String {
    let mut out = String::from("# alpha p_hat ci_low ci_high\n");
    for p in &curve.points {
        writeln!(out, "{} {} {} {}", p.alpha, p.p_hat, p.ci_low, p.ci_high).unwrap();
    }
    out
}
