use super::{Axis, PatternBlock, PatternError, Provenance, Result, StepDelta, Trajectory};
use crate::geometry::Vec3;

/// How unequal axis lengths are handled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ExpandMode {
    /// Unequal lengths are an error.
    #[default]
    Strict,
    /// Shorter movement axes are zero-padded; `G` repeats its last value.
    Lenient,
}

/// Expands a block in [`ExpandMode::Strict`].
pub fn expand(block: &PatternBlock) -> Result<Trajectory> {
    expand_with(block, ExpandMode::Strict)
}

pub fn expand_with(block: &PatternBlock, mode: ExpandMode) -> Result<Trajectory> {
    block.validate()?;
    let x = block.x.values();
    let y = block.y.values();
    let z = block.z.values();
    let g = block.g.values();

    let len = match mode {
        ExpandMode::Strict => {
            let expected = x.len();
            for (axis, got) in [(Axis::Y, y.len()), (Axis::Z, z.len()), (Axis::G, g.len())] {
                if got != expected {
                    return Err(PatternError::LengthMismatch { axis, expected, got });
                }
            }
            expected
        }
        ExpandMode::Lenient => x.len().max(y.len()).max(z.len()).max(g.len()),
    };

    let last_g = g.last().copied().unwrap_or(0.0);
    let steps = (0..len)
        .map(|t| StepDelta {
            dx: x.get(t).copied().unwrap_or(0.0),
            dy: y.get(t).copied().unwrap_or(0.0),
            dz: z.get(t).copied().unwrap_or(0.0),
            g: g.get(t).copied().unwrap_or(last_g) as u8,
        })
        .collect();
    Ok(Trajectory::new(steps, Provenance::Parsed))
}

/// Componentwise sum of all step displacements.
pub fn net_displacement(traj: &Trajectory) -> Vec3 {
    traj.steps.iter().fold(Vec3::ZERO, |acc, s| acc + s.displacement())
}
