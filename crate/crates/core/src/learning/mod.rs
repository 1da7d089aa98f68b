//! Off-policy learning objectives over linear-softmax policies.
//!
//! The score-function family maximises `Σ φ(β r̃_t)` for a score `φ`
//! sandwiched between `-ln(1 - x + x²/(c₁ + c₂x))` and `ln(1 + x)`;
//! the remaining families are the usual importance-weighting baselines.

mod diagnostics;
mod objective;
mod train;

pub use diagnostics::{
    assumption1_check, assumption1_check_fn, log_grid, negative_influence, Assumption1Report,
    NegativeInfluenceEstimate,
};
pub use objective::{objective_gradient, objective_value};
pub use train::{train_policy, TrainConfig, TrainedPolicy};

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bandit::BanditError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LearningError {
    #[error("domain error: {0}")]
    DomainError(String),
    #[error("beta {beta} not allowed for {family}")]
    BetaOutOfRange { family: String, beta: f64 },
    #[error("objective gradients need a linear-softmax policy")]
    NonDifferentiable,
    #[error("the {0} objective needs the behavior policy")]
    MissingBehavior(String),
    #[error("invalid training configuration: {0}")]
    InvalidConfig(String),
    #[error("unknown objective {0:?}")]
    UnknownObjective(String),
    #[error(transparent)]
    Bandit(#[from] BanditError),
}

pub type Result<T> = std::result::Result<T, LearningError>;

/// Score functions satisfying the sandwich condition with the constants
/// returned by [`ScoreFunction::c1`] and [`ScoreFunction::c2`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ScoreFunction {
    /// `ln(1 + x)`
    Ls,
    /// `ln(1 + min(x, 1))`
    Clipping,
    /// `ln(1 + x · 1{x ≤ 1})`
    Freezing,
}

impl ScoreFunction {
    pub const ALL: [ScoreFunction; 3] = [ScoreFunction::Ls, ScoreFunction::Clipping, ScoreFunction::Freezing];

    pub fn c1(self) -> f64 {
        match self {
            ScoreFunction::Ls => 1.0,
            ScoreFunction::Clipping | ScoreFunction::Freezing => 0.5,
        }
    }

    pub fn c2(self) -> f64 {
        self.c1()
    }

    pub fn eval(self, x: f64) -> Result<f64> {
        if !(x >= 0.0) {
            return Err(LearningError::DomainError(format!("score argument must be nonnegative, got {x}")));
        }
        Ok(self.value(x))
    }

    pub(crate) fn value(self, x: f64) -> f64 {
        match self {
            ScoreFunction::Ls => x.ln_1p(),
            ScoreFunction::Clipping => x.min(1.0).ln_1p(),
            ScoreFunction::Freezing => {
                if x <= 1.0 {
                    x.ln_1p()
                } else {
                    0.0
                }
            }
        }
    }

    /// Derivative, taken as 0 at the kink `x = 1` for clipping and freezing.
    pub fn derivative(self, x: f64) -> f64 {
        match self {
            ScoreFunction::Ls => 1.0 / (1.0 + x),
            ScoreFunction::Clipping | ScoreFunction::Freezing => {
                if x < 1.0 {
                    1.0 / (1.0 + x)
                } else {
                    0.0
                }
            }
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ScoreFunction::Ls => "ls",
            ScoreFunction::Clipping => "clipping",
            ScoreFunction::Freezing => "freezing",
        }
    }
}

/// Objective family; the score-function family carries its `φ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Family {
    Score(ScoreFunction),
    /// `Σ r̃_t`
    Iw,
    /// `Σ π(a_t|x_t) r_t`
    Naive,
    /// `Σ (r̃_t - β Σ_a π(a|x_t)/π_ref(a|x_t))`
    Pl,
    /// `Σ π(a_t|x_t) r_t / max(p_t, β)`
    ClippedIw,
    /// `Σ π(a_t|x_t) r_t / (p_t + β)`
    Ix,
}

impl Family {
    pub const ALL: [Family; 8] = [
        Family::Iw,
        Family::Naive,
        Family::Pl,
        Family::ClippedIw,
        Family::Ix,
        Family::Score(ScoreFunction::Ls),
        Family::Score(ScoreFunction::Clipping),
        Family::Score(ScoreFunction::Freezing),
    ];

    /// Whether `β` changes the objective.
    pub fn uses_beta(self) -> bool {
        !matches!(self, Family::Iw | Family::Naive)
    }
}

impl fmt::Display for Family {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Family::Score(s) => f.write_str(s.name()),
            Family::Iw => f.write_str("iw"),
            Family::Naive => f.write_str("naive"),
            Family::Pl => f.write_str("pl"),
            Family::ClippedIw => f.write_str("clipped-iw"),
            Family::Ix => f.write_str("ix"),
        }
    }
}

impl FromStr for Family {
    type Err = LearningError;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "ls" => Ok(Family::Score(ScoreFunction::Ls)),
            "clipping" | "ls+clipping" => Ok(Family::Score(ScoreFunction::Clipping)),
            "freezing" | "ls+freezing" => Ok(Family::Score(ScoreFunction::Freezing)),
            "iw" => Ok(Family::Iw),
            "naive" => Ok(Family::Naive),
            "pl" => Ok(Family::Pl),
            "clipped-iw" | "clippediw" => Ok(Family::ClippedIw),
            "ix" => Ok(Family::Ix),
            other => Err(LearningError::UnknownObjective(other.into())),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Objective {
    pub family: Family,
    pub beta: f64,
}

impl Objective {
    pub fn new(family: Family, beta: f64) -> Result<Self> {
        let ok = match family {
            Family::ClippedIw => beta > 0.0 && beta <= 1.0,
            _ => beta >= 0.0 && beta.is_finite(),
        };
        if !ok {
            return Err(LearningError::BetaOutOfRange {
                family: family.to_string(),
                beta,
            });
        }
        Ok(Self { family, beta })
    }

    pub fn score(phi: ScoreFunction, beta: f64) -> Result<Self> {
        Self::new(Family::Score(phi), beta)
    }
}
