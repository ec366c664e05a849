//! Control-pattern language: four labeled lines (`X`, `Y`, `Z`, `G`) that
//! describe per-step end-effector displacements in millimeters and the
//! gripper state.
//!
//! Two surface grammars share one AST:
//!
//! * **baseline**: unseparated digit runs, `Y: -1-1-1-1`
//! * **improved**: bracketed repetition and concatenation,
//!   `G: [0]*99 + [1]*1`, plus bounded trig comprehensions,
//!   `X: [cos(t) for t in range(360)]` (argument in degrees)
//!
//! ```
//! use langarm::pattern_dsl::{parse_block, expand, net_displacement, ParseMode};
//!
//! let block = parse_block("X: [1]*70\nY: [0]*70\nZ: [0]*70\nG: [0]*70", ParseMode::Auto).unwrap();
//! let traj = expand(&block).unwrap();
//! assert_eq!(traj.len(), 70);
//! assert_eq!(net_displacement(&traj).x, 70.0);
//! ```

mod expand;
mod parse;
mod serialize;

use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use expand::{expand, expand_with, net_displacement, ExpandMode};
pub use parse::{lex_digit_run, parse_block};
pub use serialize::serialize;

/// Upper bound on the expanded length of a single axis.
pub const MAX_STEPS: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Axis {
    X,
    Y,
    Z,
    G,
}

impl Axis {
    pub const ALL: [Axis; 4] = [Axis::X, Axis::Y, Axis::Z, Axis::G];

    pub fn label(self) -> char {
        match self {
            Axis::X => 'X',
            Axis::Y => 'Y',
            Axis::Z => 'Z',
            Axis::G => 'G',
        }
    }

    pub fn from_label(c: char) -> Option<Axis> {
        match c.to_ascii_uppercase() {
            'X' => Some(Axis::X),
            'Y' => Some(Axis::Y),
            'Z' => Some(Axis::Z),
            'G' => Some(Axis::G),
            _ => None,
        }
    }
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.label())
    }
}

/// Surface grammar a block was read from or is written to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Grammar {
    Baseline,
    Improved,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseMode {
    Baseline,
    Improved,
    Auto,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PatternError {
    #[error("axis {0} is missing")]
    MissingAxis(Axis),
    #[error("axis {0} appears more than once")]
    DuplicateAxis(Axis),
    #[error("unexpected input at byte {position}")]
    Lex { position: usize },
    #[error("unsupported expression `{0}`")]
    UnsupportedExpression(String),
    #[error("axis {axis}: step magnitude {value} exceeds 1mm")]
    MagnitudeExceeded { axis: Axis, value: f64 },
    #[error("gripper value {0} is not 0 or 1")]
    InvalidGripper(f64),
    #[error("axis {axis} expands to {got} steps, expected {expected}")]
    LengthMismatch {
        axis: Axis,
        expected: usize,
        got: usize,
    },
    #[error("axis expands to {0} steps, more than the supported maximum")]
    TooLong(usize),
    #[error("not representable in the baseline grammar: {0}")]
    NotRepresentable(String),
}

pub type Result<T> = std::result::Result<T, PatternError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrigFn {
    Sin,
    Cos,
}

impl TrigFn {
    pub fn name(self) -> &'static str {
        match self {
            TrigFn::Sin => "sin",
            TrigFn::Cos => "cos",
        }
    }
}

/// `amplitude · fn(frequency · t + phase)` for `t = 0..n`, argument in degrees.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrigTerm {
    pub func: TrigFn,
    pub amplitude: f64,
    pub frequency: f64,
    pub phase: f64,
    pub n: usize,
}

impl TrigTerm {
    pub fn value_at(&self, t: usize) -> f64 {
        let arg = (self.frequency * t as f64 + self.phase).to_radians();
        let v = match self.func {
            TrigFn::Sin => arg.sin(),
            TrigFn::Cos => arg.cos(),
        };
        self.amplitude * v
    }
}

/// One axis line of a pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AxisExpr {
    /// Explicit per-step values from {-1, 0, 1}.
    DigitRun(Vec<i8>),
    Repeat { value: f64, count: usize },
    Concat(Vec<AxisExpr>),
    Trig(TrigTerm),
}

impl AxisExpr {
    pub fn empty() -> Self {
        AxisExpr::DigitRun(Vec::new())
    }

    pub fn repeat(value: f64, count: usize) -> Self {
        AxisExpr::Repeat { value, count }
    }

    /// Flattening concatenation that drops zero-length parts.
    pub fn concat<I: IntoIterator<Item = AxisExpr>>(parts: I) -> Self {
        let mut out = Vec::new();
        for p in parts {
            match p {
                AxisExpr::Concat(inner) => {
                    if let AxisExpr::Concat(flat) = AxisExpr::concat(inner) {
                        out.extend(flat);
                    }
                }
                p if p.len() == 0 => {}
                p => out.push(p),
            }
        }
        AxisExpr::Concat(out)
    }

    /// Expanded length; saturates instead of overflowing.
    pub fn len(&self) -> usize {
        match self {
            AxisExpr::DigitRun(v) => v.len(),
            AxisExpr::Repeat { count, .. } => *count,
            AxisExpr::Concat(parts) => parts.iter().fold(0usize, |a, p| a.saturating_add(p.len())),
            AxisExpr::Trig(t) => t.n,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Expanded per-step values. Callers must validate length first.
    pub fn values(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.len().min(MAX_STEPS));
        self.push_values(&mut out);
        out
    }

    fn push_values(&self, out: &mut Vec<f64>) {
        match self {
            AxisExpr::DigitRun(v) => out.extend(v.iter().map(|&d| d as f64)),
            AxisExpr::Repeat { value, count } => out.extend(std::iter::repeat_n(*value, *count)),
            AxisExpr::Concat(parts) => parts.iter().for_each(|p| p.push_values(out)),
            AxisExpr::Trig(t) => out.extend((0..t.n).map(|i| t.value_at(i))),
        }
    }

    /// True when every value is an integer in {-1, 0, 1} without evaluating
    /// trig terms (those are never strict-integer).
    pub fn is_strict_integer(&self) -> bool {
        match self {
            AxisExpr::DigitRun(_) => true,
            AxisExpr::Repeat { value, count } => *count == 0 || [-1.0, 0.0, 1.0].contains(value),
            AxisExpr::Concat(parts) => parts.iter().all(AxisExpr::is_strict_integer),
            AxisExpr::Trig(_) => false,
        }
    }

    fn validate(&self, axis: Axis) -> Result<()> {
        let len = self.len();
        if len > MAX_STEPS {
            return Err(PatternError::TooLong(len));
        }
        self.validate_values(axis)
    }

    fn validate_values(&self, axis: Axis) -> Result<()> {
        match self {
            AxisExpr::DigitRun(v) => {
                for &d in v {
                    if !(-1..=1).contains(&d) {
                        return Err(PatternError::MagnitudeExceeded { axis, value: d as f64 });
                    }
                    if axis == Axis::G && d < 0 {
                        return Err(PatternError::InvalidGripper(d as f64));
                    }
                }
                Ok(())
            }
            AxisExpr::Repeat { value, .. } => check_value(axis, *value),
            AxisExpr::Concat(parts) => parts.iter().try_for_each(|p| p.validate_values(axis)),
            AxisExpr::Trig(t) => {
                if axis == Axis::G {
                    return Err(PatternError::InvalidGripper(t.amplitude));
                }
                if !(t.amplitude.is_finite() && t.frequency.is_finite() && t.phase.is_finite()) {
                    return Err(PatternError::UnsupportedExpression(format!(
                        "{}(...) with non-finite parameters",
                        t.func.name()
                    )));
                }
                if t.amplitude.abs() > 1.0 {
                    return Err(PatternError::MagnitudeExceeded { axis, value: t.amplitude });
                }
                Ok(())
            }
        }
    }
}

fn check_value(axis: Axis, value: f64) -> Result<()> {
    if axis == Axis::G {
        if value == 0.0 || value == 1.0 {
            Ok(())
        } else {
            Err(PatternError::InvalidGripper(value))
        }
    } else if !value.is_finite() || value.abs() > 1.0 {
        Err(PatternError::MagnitudeExceeded { axis, value })
    } else {
        Ok(())
    }
}

/// Four axis expressions forming one command pattern.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatternBlock {
    pub x: AxisExpr,
    pub y: AxisExpr,
    pub z: AxisExpr,
    pub g: AxisExpr,
    pub source_grammar: Grammar,
}

impl PatternBlock {
    /// Builds and validates a block.
    pub fn new(x: AxisExpr, y: AxisExpr, z: AxisExpr, g: AxisExpr, source_grammar: Grammar) -> Result<Self> {
        let b = Self { x, y, z, g, source_grammar };
        b.validate()?;
        Ok(b)
    }

    pub fn axis(&self, a: Axis) -> &AxisExpr {
        match a {
            Axis::X => &self.x,
            Axis::Y => &self.y,
            Axis::Z => &self.z,
            Axis::G => &self.g,
        }
    }

    pub fn validate(&self) -> Result<()> {
        Axis::ALL.iter().try_for_each(|&a| self.axis(a).validate(a))
    }

    pub fn is_strict_integer(&self) -> bool {
        Axis::ALL.iter().all(|&a| self.axis(a).is_strict_integer())
    }

    /// Length of the longest axis.
    pub fn max_len(&self) -> usize {
        Axis::ALL.iter().map(|&a| self.axis(a).len()).max().unwrap_or(0)
    }
}

/// One column of the motion matrix: a displacement (mm) and gripper command.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct StepDelta {
    pub dx: f64,
    pub dy: f64,
    pub dz: f64,
    /// 0 open, 1 closed.
    pub g: u8,
}

impl StepDelta {
    pub fn new(dx: f64, dy: f64, dz: f64, g: u8) -> Self {
        Self { dx, dy, dz, g }
    }

    pub fn is_valid(&self) -> bool {
        [self.dx, self.dy, self.dz].iter().all(|v| v.is_finite() && v.abs() <= 1.0) && self.g <= 1
    }

    pub fn is_strict_integer(&self) -> bool {
        [self.dx, self.dy, self.dz].iter().all(|v| [-1.0, 0.0, 1.0].contains(v))
    }

    pub fn displacement(&self) -> crate::geometry::Vec3 {
        crate::geometry::Vec3::new(self.dx, self.dy, self.dz)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Parsed,
    MockPlanner,
    RemotePlanner,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub steps: Vec<StepDelta>,
    pub provenance: Provenance,
}

impl Trajectory {
    pub fn new(steps: Vec<StepDelta>, provenance: Provenance) -> Self {
        Self { steps, provenance }
    }

    pub fn empty() -> Self {
        Self::new(Vec::new(), Provenance::Parsed)
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    pub fn with_provenance(mut self, p: Provenance) -> Self {
        self.provenance = p;
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn concat_flattens_and_drops_empty() {
        let e = AxisExpr::concat([
            AxisExpr::repeat(1.0, 3),
            AxisExpr::Concat(vec![AxisExpr::empty(), AxisExpr::repeat(0.0, 2)]),
            AxisExpr::repeat(1.0, 0),
        ]);
        assert_eq!(
            e,
            AxisExpr::Concat(vec![AxisExpr::repeat(1.0, 3), AxisExpr::repeat(0.0, 2)])
        );
        assert_eq!(e.len(), 5);
    }

    #[test]
    fn amplitude_above_one_rejected() {
        let t = AxisExpr::Trig(TrigTerm { func: TrigFn::Cos, amplitude: 1.5, frequency: 1.0, phase: 0.0, n: 10 });
        let err = PatternBlock::new(t, AxisExpr::repeat(0.0, 10), AxisExpr::repeat(0.0, 10), AxisExpr::repeat(0.0, 10), Grammar::Improved);
        assert!(matches!(err, Err(PatternError::MagnitudeExceeded { axis: Axis::X, .. })));
    }

    #[test]
    fn gripper_domain_checked() {
        let err = PatternBlock::new(AxisExpr::empty(), AxisExpr::empty(), AxisExpr::empty(), AxisExpr::repeat(0.5, 1), Grammar::Improved);
        assert_eq!(err, Err(PatternError::InvalidGripper(0.5)));
        let err = PatternBlock::new(AxisExpr::empty(), AxisExpr::empty(), AxisExpr::empty(), AxisExpr::DigitRun(vec![-1]), Grammar::Baseline);
        assert_eq!(err, Err(PatternError::InvalidGripper(-1.0)));
    }
}
