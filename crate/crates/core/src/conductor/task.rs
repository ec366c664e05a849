use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::ConductorError;
use crate::geometry::Vec3;
use crate::pattern_dsl::Grammar;
use crate::prompt_forge::{ExampleSet, Level};
use crate::world_sim::{WorldDef, WorldState, GOAL_TOLERANCE_MM};

fn default_tol() -> f64 {
    GOAL_TOLERANCE_MM
}

/// End condition a task is scored against.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Goal {
    /// Object held with its center within tolerance of the EE.
    Grasped {
        object: String,
        #[serde(default = "default_tol")]
        tolerance_mm: f64,
    },
    ObjectAt {
        object: String,
        target: Vec3,
        #[serde(default = "default_tol")]
        tolerance_mm: f64,
    },
    EeAt {
        target: Vec3,
        #[serde(default = "default_tol")]
        tolerance_mm: f64,
    },
    /// Released with its center inside the zone box.
    InZone { object: String, zone: String },
    /// Released resting centered on `bottom`.
    Stacked {
        top: String,
        bottom: String,
        #[serde(default = "default_tol")]
        tolerance_mm: f64,
    },
    All { goals: Vec<Goal> },
}

impl Goal {
    pub fn validate(&self, world: &WorldState) -> Result<(), ConductorError> {
        let obj = |id: &str| {
            world
                .object(id)
                .map(|_| ())
                .ok_or_else(|| ConductorError::Task(format!("goal references unknown object `{id}`")))
        };
        match self {
            Goal::Grasped { object, .. } | Goal::ObjectAt { object, .. } => obj(object),
            Goal::EeAt { .. } => Ok(()),
            Goal::InZone { object, zone } => {
                obj(object)?;
                world
                    .zone_by_name(zone)
                    .map(|_| ())
                    .ok_or_else(|| ConductorError::Task(format!("goal references unknown zone `{zone}`")))
            }
            Goal::Stacked { top, bottom, .. } => {
                obj(top)?;
                obj(bottom)
            }
            Goal::All { goals } => goals.iter().try_for_each(|g| g.validate(world)),
        }
    }

    /// Distance in mm between what the goal asks for and what `world` shows.
    /// Computed from the final state alone.
    pub fn error_mm(&self, world: &WorldState) -> f64 {
        let center = |id: &str| world.object(id).map(|o| o.center);
        match self {
            Goal::Grasped { object, .. } => center(object).map_or(f64::INFINITY, |c| c.distance(world.ee_pos)),
            Goal::ObjectAt { object, target, .. } => center(object).map_or(f64::INFINITY, |c| c.distance(*target)),
            Goal::EeAt { target, .. } => world.ee_pos.distance(*target),
            Goal::InZone { object, zone } => match (center(object), world.zone_by_name(zone)) {
                (Some(c), Some(z)) => z.aabb.distance_to_point(c),
                _ => f64::INFINITY,
            },
            Goal::Stacked { top, bottom, .. } => match (world.object(top), world.object(bottom)) {
                (Some(t), Some(b)) => {
                    let want = b.center + Vec3::new(0.0, 0.0, b.half_extents.z + t.half_extents.z);
                    t.center.distance(want)
                }
                _ => f64::INFINITY,
            },
            Goal::All { goals } => goals.iter().map(|g| g.error_mm(world)).fold(0.0, f64::max),
        }
    }

    pub fn holds(&self, world: &WorldState) -> bool {
        let held = |id: &str| world.grasped.as_deref() == Some(id);
        match self {
            Goal::Grasped { object, tolerance_mm } => held(object) && self.error_mm(world) <= *tolerance_mm + 1e-9,
            Goal::ObjectAt { object, tolerance_mm, .. } => !held(object) && self.error_mm(world) <= *tolerance_mm + 1e-9,
            Goal::EeAt { tolerance_mm, .. } => self.error_mm(world) <= *tolerance_mm + 1e-9,
            Goal::InZone { object, .. } => !held(object) && self.error_mm(world) == 0.0,
            Goal::Stacked { top, tolerance_mm, .. } => !held(top) && self.error_mm(world) <= *tolerance_mm + 1e-9,
            Goal::All { goals } => goals.iter().all(|g| g.holds(world)),
        }
    }
}

/// Which planner answers a task.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PlannerSpec {
    #[default]
    Mock,
    Remote,
    /// Transcript corpus file.
    Replay(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize, PartialOrd, Ord)]
#[serde(rename_all = "snake_case")]
pub enum Strategy {
    Baseline,
    #[default]
    Improved,
}

impl Strategy {
    pub const ALL: [Strategy; 2] = [Strategy::Baseline, Strategy::Improved];

    pub fn grammar(self) -> Grammar {
        match self {
            Strategy::Baseline => Grammar::Baseline,
            Strategy::Improved => Grammar::Improved,
        }
    }

    pub fn examples(self) -> ExampleSet {
        match self {
            Strategy::Baseline => ExampleSet::Baseline,
            Strategy::Improved => ExampleSet::Improved,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Strategy::Baseline => "baseline",
            Strategy::Improved => "improved",
        }
    }
}

impl std::str::FromStr for Strategy {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.to_ascii_lowercase().as_str() {
            "baseline" => Ok(Strategy::Baseline),
            "improved" => Ok(Strategy::Improved),
            _ => Err(format!("unknown strategy `{s}`")),
        }
    }
}

/// World given inline or as a path relative to the task file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum WorldSource {
    Path(PathBuf),
    Inline(Box<WorldDef>),
}

fn default_level() -> Level {
    Level::B
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskSpec {
    pub id: String,
    pub command: String,
    pub world: WorldSource,
    pub goal: Goal,
    #[serde(default)]
    pub planner: PlannerSpec,
    #[serde(default)]
    pub strategy: Strategy,
    /// Prompt level used for remote and replay planners.
    #[serde(default = "default_level")]
    pub level: Level,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub robot: Option<PathBuf>,
    /// Key into the phrase-variation asset; defaults to `id`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phrase_set: Option<String>,
    #[serde(skip)]
    pub base_dir: PathBuf,
}

impl TaskSpec {
    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConductorError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| ConductorError::Task(format!("{}: {e}", path.display())))?;
        let mut spec: TaskSpec =
            serde_json::from_str(&text).map_err(|e| ConductorError::Task(format!("{}: {e}", path.display())))?;
        spec.base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
        Ok(spec)
    }

    pub fn resolve(&self, p: &Path) -> PathBuf {
        if p.is_absolute() {
            p.to_path_buf()
        } else {
            self.base_dir.join(p)
        }
    }

    pub fn world_def(&self) -> Result<WorldDef, ConductorError> {
        match &self.world {
            WorldSource::Inline(d) => Ok((**d).clone()),
            WorldSource::Path(p) => {
                let path = self.resolve(p);
                let text = std::fs::read_to_string(&path)
                    .map_err(|e| ConductorError::WorldLoad(format!("{}: {e}", path.display())))?;
                serde_json::from_str(&text).map_err(|e| ConductorError::WorldLoad(format!("{}: {e}", path.display())))
            }
        }
    }

    pub fn phrase_key(&self) -> &str {
        self.phrase_set.as_deref().unwrap_or(&self.id)
    }
}
