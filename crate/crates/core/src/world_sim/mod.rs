//! Deterministic Cartesian end-effector world.
//!
//! A [`WorldState`] is an immutable snapshot; [`step`] and [`execute`] return
//! new snapshots together with the [`SimEvent`]s produced on the way. There
//! is no dynamics: collisions are reported and execution continues.
//!
//! Conventions:
//! * the end effector is a box (20 mm cube by default) centered at `ee_pos`
//! * closing the gripper grasps the nearest graspable object whose center is
//!   within [`GRASP_TOLERANCE_MM`] of `ee_pos` (ties by object id)
//! * `force_z` is `-1.0` while the EE box rests on top of a fixed object

mod file;
mod observe;
mod step;

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Aabb, Vec3};

pub use file::{load_world, read_trace, trace_to_jsonl, GoalDef, WorldDef};
pub use observe::{object_positions, observe, Observation, ObservationParseError};
pub use step::{execute, execute_states, step, try_place, ExecGoal, Execution, GoalSubject, TraceRecord};

pub const GRASP_TOLERANCE_MM: f64 = 5.0;
pub const DEFAULT_EE_HALF_EXTENT_MM: f64 = 10.0;
pub const GOAL_TOLERANCE_MM: f64 = 1.0;

#[derive(Debug, Error)]
pub enum SimError {
    #[error("no object is grasped")]
    NothingGrasped,
    #[error("unknown object `{0}`")]
    UnknownObject(String),
    #[error("invalid world: {0}")]
    InvalidWorld(String),
    #[error("world file: {0}")]
    Io(#[from] std::io::Error),
    #[error("world file: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "String", into = "String")]
pub enum Color {
    Red,
    Blue,
    Black,
    Other(String),
}

impl Color {
    pub fn name(&self) -> &str {
        match self {
            Color::Red => "red",
            Color::Blue => "blue",
            Color::Black => "black",
            Color::Other(s) => s,
        }
    }
}

impl From<String> for Color {
    fn from(s: String) -> Self {
        match s.to_ascii_lowercase().as_str() {
            "red" => Color::Red,
            "blue" => Color::Blue,
            "black" => Color::Black,
            other => Color::Other(other.to_string()),
        }
    }
}

impl From<&str> for Color {
    fn from(s: &str) -> Self {
        Color::from(s.to_string())
    }
}

impl From<Color> for String {
    fn from(c: Color) -> Self {
        c.name().to_string()
    }
}

impl fmt::Display for Color {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// A cube or obstacle in the scene.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub id: String,
    pub color: Color,
    pub center: Vec3,
    pub half_extents: Vec3,
    /// Material or semantic tag (`wood`, `ice`, `fire`, ...).
    #[serde(default)]
    pub attribute: String,
    #[serde(default = "default_true")]
    pub graspable: bool,
    #[serde(default)]
    pub fixed: bool,
}

fn default_true() -> bool {
    true
}

impl ObjectSpec {
    pub fn cube(id: &str, color: impl Into<Color>, center: Vec3, half: f64) -> Self {
        Self {
            id: id.to_string(),
            color: color.into(),
            center,
            half_extents: Vec3::splat(half),
            attribute: String::new(),
            graspable: true,
            fixed: false,
        }
    }

    pub fn obstacle(id: &str, aabb: Aabb) -> Self {
        Self {
            id: id.to_string(),
            color: Color::Black,
            center: aabb.center(),
            half_extents: aabb.half_extents(),
            attribute: String::new(),
            graspable: false,
            fixed: true,
        }
    }

    pub fn with_attribute(mut self, attr: &str) -> Self {
        self.attribute = attr.to_string();
        self
    }

    pub fn aabb(&self) -> Aabb {
        Aabb::from_center(self.center, self.half_extents)
    }

    /// Short human name, e.g. "red cube".
    pub fn display_name(&self) -> String {
        if self.fixed {
            format!("{} obstacle", self.color)
        } else {
            format!("{} cube", self.color)
        }
    }
}

/// Cuboid region with a semantic tag.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Zone {
    pub id: String,
    pub label: String,
    pub aabb: Aabb,
    #[serde(default)]
    pub attribute: String,
}

impl Zone {
    pub fn new(id: &str, label: &str, aabb: Aabb, attribute: &str) -> Self {
        Self {
            id: id.to_string(),
            label: label.to_string(),
            aabb,
            attribute: attribute.to_string(),
        }
    }

    /// Zones tagged or labeled `safe` constrain motion.
    pub fn is_safe_zone(&self) -> bool {
        self.attribute.eq_ignore_ascii_case("safe") || self.label.eq_ignore_ascii_case("safe")
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Gripper {
    Open,
    Closed,
}

/// Simulator snapshot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WorldState {
    pub ee_pos: Vec3,
    pub ee_vel: Vec3,
    pub ee_half_extents: Vec3,
    pub gripper: Gripper,
    pub grasped: Option<String>,
    /// Carried object center minus `ee_pos`, fixed at grasp time.
    pub grasp_offset: Vec3,
    pub objects: Vec<ObjectSpec>,
    pub zones: Vec<Zone>,
    pub force_z: f64,
    pub tick: u64,
    /// Fixed objects currently overlapped by the EE or the carried object.
    pub contacts: BTreeSet<String>,
    /// Zones currently containing `ee_pos`.
    pub inside_zones: BTreeSet<String>,
}

impl WorldState {
    /// Builds a validated world with the EE at `ee_pos`, gripper open.
    pub fn new(ee_pos: Vec3, objects: Vec<ObjectSpec>, zones: Vec<Zone>) -> Result<Self, SimError> {
        let mut w = WorldState {
            ee_pos,
            ee_vel: Vec3::ZERO,
            ee_half_extents: Vec3::splat(DEFAULT_EE_HALF_EXTENT_MM),
            gripper: Gripper::Open,
            grasped: None,
            grasp_offset: Vec3::ZERO,
            objects,
            zones,
            force_z: 0.0,
            tick: 0,
            contacts: BTreeSet::new(),
            inside_zones: BTreeSet::new(),
        };
        w.validate()?;
        w.refresh_derived();
        Ok(w)
    }

    /// Starts the world holding `id` with the current center/EE offset.
    pub fn with_grasped(mut self, id: &str) -> Result<Self, SimError> {
        let obj = self.object(id).ok_or_else(|| SimError::UnknownObject(id.to_string()))?;
        if !obj.graspable {
            return Err(SimError::InvalidWorld(format!("object `{id}` is not graspable")));
        }
        self.grasp_offset = obj.center - self.ee_pos;
        self.grasped = Some(id.to_string());
        self.gripper = Gripper::Closed;
        self.refresh_derived();
        Ok(self)
    }

    pub fn validate(&self) -> Result<(), SimError> {
        let bad = |m: String| Err(SimError::InvalidWorld(m));
        let mut ids = BTreeSet::new();
        for o in &self.objects {
            if !ids.insert(o.id.as_str()) {
                return bad(format!("duplicate object id `{}`", o.id));
            }
            let h = o.half_extents;
            if !(h.x > 0.0 && h.y > 0.0 && h.z > 0.0) || !o.center.is_finite() {
                return bad(format!("object `{}` needs positive half extents", o.id));
            }
            if o.fixed && o.graspable {
                return bad(format!("fixed object `{}` cannot be graspable", o.id));
            }
        }
        let mut zone_ids = BTreeSet::new();
        for z in &self.zones {
            if !zone_ids.insert(z.id.as_str()) {
                return bad(format!("duplicate zone id `{}`", z.id));
            }
            if !z.aabb.is_valid() {
                return bad(format!("zone `{}` has an empty box", z.id));
            }
        }
        if let Some(g) = &self.grasped {
            match self.object(g) {
                Some(o) if o.graspable => {}
                _ => return bad(format!("grasped object `{g}` is missing or not graspable")),
            }
        }
        Ok(())
    }

    pub fn object(&self, id: &str) -> Option<&ObjectSpec> {
        self.objects.iter().find(|o| o.id == id)
    }

    pub(crate) fn object_mut(&mut self, id: &str) -> Option<&mut ObjectSpec> {
        self.objects.iter_mut().find(|o| o.id == id)
    }

    pub fn zone(&self, id: &str) -> Option<&Zone> {
        self.zones.iter().find(|z| z.id == id)
    }

    /// Looks a zone up by id or label, case-insensitively.
    pub fn zone_by_name(&self, name: &str) -> Option<&Zone> {
        self.zones
            .iter()
            .find(|z| z.id.eq_ignore_ascii_case(name) || z.label.eq_ignore_ascii_case(name))
    }

    /// First object of the given color, movable objects preferred.
    pub fn object_by_color(&self, color: &Color) -> Option<&ObjectSpec> {
        self.objects
            .iter()
            .filter(|o| &o.color == color)
            .min_by_key(|o| o.fixed)
    }

    pub fn ee_box(&self) -> Aabb {
        Aabb::from_center(self.ee_pos, self.ee_half_extents)
    }

    pub fn carried(&self) -> Option<&ObjectSpec> {
        self.grasped.as_deref().and_then(|id| self.object(id))
    }

    /// Union of all object, zone and EE boxes.
    pub fn bounds(&self) -> Aabb {
        let mut b = self.ee_box();
        for o in &self.objects {
            b = b.union(&o.aabb());
        }
        for z in &self.zones {
            b = b.union(&z.aabb);
        }
        b
    }

    /// Recomputes contacts, zone membership and force from geometry.
    pub(crate) fn refresh_derived(&mut self) {
        self.contacts = step::fixed_contacts(self);
        self.inside_zones = self
            .zones
            .iter()
            .filter(|z| z.aabb.contains_point(self.ee_pos))
            .map(|z| z.id.clone())
            .collect();
        self.force_z = step::contact_force(self);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    Collision { with: String },
    Grasp { object: String },
    Release { object: String },
    Penetration { object: String },
    ZoneEnter { zone: String },
    ZoneExit { zone: String },
    GoalReached,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimEvent {
    pub tick: u64,
    #[serde(flatten)]
    pub kind: EventKind,
    pub detail: String,
}

impl SimEvent {
    pub fn is_collision(&self) -> bool {
        matches!(self.kind, EventKind::Collision { .. })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_bad_worlds() {
        let mut o = ObjectSpec::cube("a", "red", Vec3::ZERO, 15.0);
        o.fixed = true;
        assert!(WorldState::new(Vec3::ZERO, vec![o], vec![]).is_err());
        let dup = vec![
            ObjectSpec::cube("a", "red", Vec3::ZERO, 15.0),
            ObjectSpec::cube("a", "blue", Vec3::splat(100.0), 15.0),
        ];
        assert!(WorldState::new(Vec3::ZERO, dup, vec![]).is_err());
        let z = Zone::new("z", "A", Aabb::new(Vec3::splat(1.0), Vec3::splat(1.0)), "");
        assert!(WorldState::new(Vec3::ZERO, vec![], vec![z]).is_err());
    }

    #[test]
    fn color_serde_round_trip() {
        let c: Color = serde_json::from_str("\"Yellow\"").unwrap();
        assert_eq!(c, Color::Other("yellow".into()));
        assert_eq!(serde_json::to_string(&Color::Red).unwrap(), "\"red\"");
    }
}
