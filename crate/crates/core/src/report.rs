//! Report-style validation results shared by the model, controller and chain types.

use std::fmt;

use serde::Serialize;

/// Tolerance applied to every stochasticity check.
pub const STOCHASTIC_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    /// A transition row `(s, u_def, u_adv)` does not sum to one.
    TransitionRow {
        state: usize,
        def_action: String,
        adv_action: String,
        sum: f64,
    },
    /// An observation distribution for one agent does not sum to one.
    ObservationRow {
        agent: String,
        state: usize,
        sum: f64,
    },
    /// A controller row `(g, o)` does not sum to one.
    ControllerRow {
        node: usize,
        observation: usize,
        sum: f64,
    },
    /// `mu > 0` disagrees with the structure indicator.
    SupportMismatch {
        node: usize,
        observation: usize,
        next_node: usize,
        action: usize,
    },
    ProbabilityRange {
        location: String,
        value: f64,
    },
    /// A row of a composed chain does not sum to one.
    ChainRow {
        state: usize,
        sum: f64,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::TransitionRow {
                state,
                def_action,
                adv_action,
                sum,
            } => write!(
                f,
                "transition row (s={state}, u_def={def_action}, u_adv={adv_action}) sums to {sum}"
            ),
            Violation::ObservationRow { agent, state, sum } => {
                write!(f, "{agent} observation row for s={state} sums to {sum}")
            }
            Violation::ControllerRow { node, observation, sum } => {
                write!(f, "controller row (g={node}, o={observation}) sums to {sum}")
            }
            Violation::SupportMismatch {
                node,
                observation,
                next_node,
                action,
            } => write!(
                f,
                "support mismatch at (g'={next_node}, u={action} | g={node}, o={observation})"
            ),
            Violation::ProbabilityRange { location, value } => {
                write!(f, "probability {value} outside [0, 1] at {location}")
            }
            Violation::ChainRow { state, sum } => write!(f, "chain row {state} sums to {sum}"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn push(&mut self, v: Violation) {
        self.violations.push(v);
    }

    pub fn into_result(self) -> crate::Result<()> {
        if self.is_empty() {
            Ok(())
        } else {
            Err(crate::Error::Validation(self))
        }
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for v in &self.violations {
            writeln!(f, "  - {v}")?;
        }
        Ok(())
    }
}

pub(crate) fn check_probability(report: &mut ValidationReport, location: impl FnOnce() -> String, p: f64) {
    if !(0.0..=1.0).contains(&p) || p.is_nan() {
        report.push(Violation::ProbabilityRange {
            location: location(),
            value: p,
        });
    }
}
