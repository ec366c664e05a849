//! JSON world definitions and line-delimited trace export.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ObjectSpec, SimError, TraceRecord, WorldState, Zone, DEFAULT_EE_HALF_EXTENT_MM};
use crate::geometry::Vec3;

/// On-disk world description.
///
/// ```json
/// { "ee_start": [0, 0, 0],
///   "objects": [{ "id": "red", "color": "red", "center": [0, 100, 0],
///                 "half_extents": [15, 15, 15], "attribute": "wood" }],
///   "zones": [] }
/// ```
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldDef {
    #[serde(default)]
    pub ee_start: Vec3,
    #[serde(default = "default_ee_half")]
    pub ee_half_extents: Vec3,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub grasped: Option<String>,
    #[serde(default)]
    pub objects: Vec<ObjectSpec>,
    #[serde(default)]
    pub zones: Vec<Zone>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub goal: Option<GoalDef>,
}

fn default_ee_half() -> Vec3 {
    Vec3::splat(DEFAULT_EE_HALF_EXTENT_MM)
}

/// Optional end-effector goal stored alongside a world.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GoalDef {
    pub target: Vec3,
    #[serde(default = "default_tol")]
    pub tolerance_mm: f64,
}

fn default_tol() -> f64 {
    super::GOAL_TOLERANCE_MM
}

impl WorldDef {
    pub fn build(&self) -> Result<WorldState, SimError> {
        let mut w = WorldState::new(self.ee_start, self.objects.clone(), self.zones.clone())?;
        w.ee_half_extents = self.ee_half_extents;
        if !(w.ee_half_extents.x > 0.0 && w.ee_half_extents.y > 0.0 && w.ee_half_extents.z > 0.0) {
            return Err(SimError::InvalidWorld("ee_half_extents must be positive".into()));
        }
        w.refresh_derived();
        match &self.grasped {
            Some(id) => w.with_grasped(id),
            None => Ok(w),
        }
    }

    pub fn from_state(w: &WorldState) -> Self {
        Self {
            ee_start: w.ee_pos,
            ee_half_extents: w.ee_half_extents,
            grasped: w.grasped.clone(),
            objects: w.objects.clone(),
            zones: w.zones.clone(),
            goal: None,
        }
    }
}

pub fn load_world(path: impl AsRef<Path>) -> Result<(WorldState, WorldDef), SimError> {
    let text = std::fs::read_to_string(path)?;
    let def: WorldDef = serde_json::from_str(&text)?;
    Ok((def.build()?, def))
}

/// One JSON object per line: full [`TraceRecord`] with stable field order.
pub fn trace_to_jsonl(trace: &[TraceRecord]) -> String {
    let mut out = String::new();
    for r in trace {
        out.push_str(&serde_json::to_string(r).expect("trace records serialize"));
        out.push('\n');
    }
    out
}

pub fn read_trace(text: &str) -> Result<Vec<TraceRecord>, SimError> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(|l| serde_json::from_str(l).map_err(SimError::from))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern_dsl::{Provenance, StepDelta, Trajectory};
    use crate::world_sim::execute;

    #[test]
    fn world_def_defaults() {
        let def: WorldDef = serde_json::from_str(
            r#"{"objects":[{"id":"red","color":"red","center":[0,100,0],"half_extents":[15,15,15]}]}"#,
        )
        .unwrap();
        let w = def.build().unwrap();
        assert_eq!(w.ee_half_extents, Vec3::splat(10.0));
        assert!(w.objects[0].graspable);
        assert!(!w.objects[0].fixed);
    }

    #[test]
    fn trace_round_trip() {
        let w = WorldState::new(Vec3::ZERO, vec![], vec![]).unwrap();
        let t = Trajectory::new(vec![StepDelta::new(1.0, 0.0, 0.0, 0); 3], Provenance::Parsed);
        let ex = execute(&w, &t, None);
        let text = trace_to_jsonl(&ex.trace);
        assert_eq!(text.lines().count(), 3);
        assert!(text.starts_with("{\"tick\":1,\"ee_pos\":[1.0,0.0,0.0]"));
        assert_eq!(read_trace(&text).unwrap(), ex.trace);
    }
}
