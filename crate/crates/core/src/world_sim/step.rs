use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use super::{EventKind, Gripper, SimError, SimEvent, WorldState, GOAL_TOLERANCE_MM, GRASP_TOLERANCE_MM};
use crate::geometry::{Aabb, Vec3};
use crate::pattern_dsl::{StepDelta, Trajectory};

/// Advances the world by one step delta.
///
/// Order within a step: move (carrying any grasped object), then gripper
/// transition, then contact and zone bookkeeping. All events carry the new
/// tick.
pub fn step(world: &WorldState, delta: StepDelta) -> (WorldState, Vec<SimEvent>) {
    let mut w = world.clone();
    let mut events = Vec::new();
    w.tick += 1;
    let tick = w.tick;

    let d = delta.displacement();
    w.ee_pos += d;
    w.ee_vel = d;
    if let Some(id) = w.grasped.clone() {
        let c = w.ee_pos + w.grasp_offset;
        if let Some(o) = w.object_mut(&id) {
            o.center = c;
        }
    }

    match (w.gripper, delta.g) {
        (Gripper::Open, 1) => {
            w.gripper = Gripper::Closed;
            if w.grasped.is_none() {
                if let Some(id) = grasp_candidate(&w) {
                    let center = w.object(&id).map(|o| o.center).unwrap_or(w.ee_pos);
                    w.grasp_offset = center - w.ee_pos;
                    events.push(SimEvent {
                        tick,
                        detail: format!("grasped {id} at {}", center),
                        kind: EventKind::Grasp { object: id.clone() },
                    });
                    w.grasped = Some(id);
                }
            }
        }
        (Gripper::Closed, 0) => {
            w.gripper = Gripper::Open;
            if let Some(id) = w.grasped.take() {
                let released = w.object(&id).map(|o| o.aabb());
                events.push(SimEvent {
                    tick,
                    detail: format!("released {id} at {}", w.object(&id).map(|o| o.center).unwrap_or_default()),
                    kind: EventKind::Release { object: id.clone() },
                });
                if let Some(b) = released {
                    for other in w.objects.iter().filter(|o| o.id != id && o.aabb().intersects(&b)) {
                        events.push(SimEvent {
                            tick,
                            detail: format!("{id} released inside {}", other.id),
                            kind: EventKind::Penetration { object: other.id.clone() },
                        });
                    }
                }
                w.grasp_offset = Vec3::ZERO;
            }
        }
        _ => {}
    }

    let contacts = fixed_contacts(&w);
    for id in contacts.difference(&w.contacts) {
        events.push(SimEvent {
            tick,
            detail: format!("contact with {id} at ee {}", w.ee_pos),
            kind: EventKind::Collision { with: id.clone() },
        });
    }
    w.contacts = contacts;
    w.force_z = contact_force(&w);

    let inside: BTreeSet<String> = w
        .zones
        .iter()
        .filter(|z| z.aabb.contains_point(w.ee_pos))
        .map(|z| z.id.clone())
        .collect();
    for z in &w.zones {
        let (was, is) = (w.inside_zones.contains(&z.id), inside.contains(&z.id));
        if !was && is {
            events.push(SimEvent { tick, detail: format!("entered zone {}", z.label), kind: EventKind::ZoneEnter { zone: z.id.clone() } });
        } else if was && !is {
            events.push(SimEvent { tick, detail: format!("left zone {}", z.label), kind: EventKind::ZoneExit { zone: z.id.clone() } });
        }
    }
    w.inside_zones = inside;

    (w, events)
}

fn grasp_candidate(w: &WorldState) -> Option<String> {
    w.objects
        .iter()
        .filter(|o| o.graspable && !o.fixed)
        .map(|o| (o.center.distance(w.ee_pos), &o.id))
        .filter(|(d, _)| *d <= GRASP_TOLERANCE_MM + 1e-9)
        .min_by(|a, b| a.0.total_cmp(&b.0).then_with(|| a.1.cmp(b.1)))
        .map(|(_, id)| id.clone())
}

/// Ids of fixed objects overlapping the EE box or the carried object.
pub(crate) fn fixed_contacts(w: &WorldState) -> BTreeSet<String> {
    let ee = w.ee_box();
    let carried = w.carried().map(|o| o.aabb());
    w.objects
        .iter()
        .filter(|o| o.fixed)
        .filter(|o| {
            let b = o.aabb();
            ee.intersects(&b) || carried.is_some_and(|c| c.intersects(&b))
        })
        .map(|o| o.id.clone())
        .collect()
}

/// `-1.0` when the EE box bottom touches or sinks into the top face of a fixed
/// object while its center is still above that face.
pub(crate) fn contact_force(w: &WorldState) -> f64 {
    let ee = w.ee_box();
    let touching = w.objects.iter().filter(|o| o.fixed).any(|o| {
        let b = o.aabb();
        let xy = ee.min.x < b.max.x && b.min.x < ee.max.x && ee.min.y < b.max.y && b.min.y < ee.max.y;
        xy && ee.min.z <= b.max.z + 1e-9 && w.ee_pos.z >= b.max.z
    });
    if touching {
        -1.0
    } else {
        0.0
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GoalSubject {
    EndEffector,
    Grasped,
}

/// Target checked after the last step of [`execute`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExecGoal {
    pub target: Vec3,
    pub subject: GoalSubject,
    pub tolerance_mm: f64,
}

impl ExecGoal {
    pub fn ee(target: Vec3) -> Self {
        Self { target, subject: GoalSubject::EndEffector, tolerance_mm: GOAL_TOLERANCE_MM }
    }

    pub fn grasped(target: Vec3) -> Self {
        Self { target, subject: GoalSubject::Grasped, tolerance_mm: GOAL_TOLERANCE_MM }
    }

    fn reached(&self, w: &WorldState) -> bool {
        let p = match self.subject {
            GoalSubject::EndEffector => Some(w.ee_pos),
            GoalSubject::Grasped => w.carried().map(|o| o.center),
        };
        p.is_some_and(|p| p.distance(self.target) <= self.tolerance_mm)
    }
}

/// One line of the per-step trace.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRecord {
    pub tick: u64,
    pub ee_pos: Vec3,
    pub ee_vel: Vec3,
    pub gripper: Gripper,
    pub grasped: Option<String>,
    pub carried_center: Option<Vec3>,
    pub force_z: f64,
    pub events: Vec<SimEvent>,
}

impl TraceRecord {
    fn of(w: &WorldState, events: Vec<SimEvent>) -> Self {
        Self {
            tick: w.tick,
            ee_pos: w.ee_pos,
            ee_vel: w.ee_vel,
            gripper: w.gripper,
            grasped: w.grasped.clone(),
            carried_center: w.carried().map(|o| o.center),
            force_z: w.force_z,
            events,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Execution {
    pub final_state: WorldState,
    pub events: Vec<SimEvent>,
    pub trace: Vec<TraceRecord>,
}

impl Execution {
    pub fn collision_count(&self) -> usize {
        self.events.iter().filter(|e| e.is_collision()).count()
    }

    pub fn goal_reached(&self) -> bool {
        self.events.iter().any(|e| e.kind == EventKind::GoalReached)
    }
}

/// Folds [`step`] over the trajectory.
pub fn execute(world: &WorldState, traj: &Trajectory, goal: Option<ExecGoal>) -> Execution {
    let mut w = world.clone();
    let mut events = Vec::new();
    let mut trace = Vec::with_capacity(traj.len());
    for &delta in &traj.steps {
        let (next, ev) = step(&w, delta);
        w = next;
        events.extend(ev.iter().cloned());
        trace.push(TraceRecord::of(&w, ev));
    }
    if let Some(g) = goal {
        if g.reached(&w) {
            let ev = SimEvent { tick: w.tick, kind: EventKind::GoalReached, detail: format!("goal {} reached", g.target) };
            if let Some(last) = trace.last_mut() {
                last.events.push(ev.clone());
            }
            events.push(ev);
        }
    }
    Execution { final_state: w, events, trace }
}

/// Every intermediate snapshot, starting with `world` itself.
pub fn execute_states(world: &WorldState, traj: &Trajectory) -> Vec<WorldState> {
    let mut out = Vec::with_capacity(traj.len() + 1);
    out.push(world.clone());
    for &delta in &traj.steps {
        let (next, _) = step(out.last().unwrap(), delta);
        out.push(next);
    }
    out
}

/// Releases the grasped object directly at `target`, refusing placements
/// whose box would overlap any other object.
pub fn try_place(world: &WorldState, target: Vec3) -> Result<(WorldState, SimEvent), SimError> {
    let id = world.grasped.clone().ok_or(SimError::NothingGrasped)?;
    let obj = world.object(&id).ok_or_else(|| SimError::UnknownObject(id.clone()))?;
    let placed = Aabb::from_center(target, obj.half_extents);
    if let Some(other) = world.objects.iter().find(|o| o.id != id && o.aabb().intersects(&placed)) {
        let ev = SimEvent {
            tick: world.tick,
            detail: format!("placing {id} at {target} would penetrate {}", other.id),
            kind: EventKind::Penetration { object: other.id.clone() },
        };
        return Ok((world.clone(), ev));
    }
    let mut w = world.clone();
    if let Some(o) = w.object_mut(&id) {
        o.center = target;
    }
    w.grasped = None;
    w.grasp_offset = Vec3::ZERO;
    w.gripper = Gripper::Open;
    w.refresh_derived();
    let ev = SimEvent {
        tick: w.tick,
        detail: format!("released {id} at {target}"),
        kind: EventKind::Release { object: id },
    };
    Ok((w, ev))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::world_sim::ObjectSpec;

    fn d(dx: f64, dy: f64, dz: f64, g: u8) -> StepDelta {
        StepDelta::new(dx, dy, dz, g)
    }

    #[test]
    fn single_step_moves_ee() {
        let w = WorldState::new(Vec3::ZERO, vec![], vec![]).unwrap();
        let (n, ev) = step(&w, d(0.0, 1.0, 0.0, 0));
        assert_eq!(n.ee_pos, Vec3::new(0.0, 1.0, 0.0));
        assert_eq!(n.ee_vel, Vec3::new(0.0, 1.0, 0.0));
        assert!(ev.is_empty());
        assert_eq!(n.tick, 1);
    }

    #[test]
    fn grasp_nearest_within_tolerance() {
        let objs = vec![
            ObjectSpec::cube("red", "red", Vec3::new(3.0, 0.0, 0.0), 15.0),
            ObjectSpec::cube("blue", "blue", Vec3::new(0.0, 4.0, 0.0), 15.0),
        ];
        let w = WorldState::new(Vec3::ZERO, objs, vec![]).unwrap();
        let (n, ev) = step(&w, d(0.0, 0.0, 0.0, 1));
        assert_eq!(n.grasped.as_deref(), Some("red"));
        assert_eq!(ev[0].kind, EventKind::Grasp { object: "red".into() });
        assert_eq!(n.grasp_offset, Vec3::new(3.0, 0.0, 0.0));
    }

    #[test]
    fn grasp_tie_breaks_by_id_and_respects_tolerance() {
        let objs = vec![
            ObjectSpec::cube("b", "blue", Vec3::new(5.0, 0.0, 0.0), 2.0),
            ObjectSpec::cube("a", "red", Vec3::new(-5.0, 0.0, 0.0), 2.0),
        ];
        let w = WorldState::new(Vec3::ZERO, objs.clone(), vec![]).unwrap();
        assert_eq!(step(&w, d(0.0, 0.0, 0.0, 1)).0.grasped.as_deref(), Some("a"));
        let far = WorldState::new(Vec3::new(0.0, 5.1, 0.0), vec![objs[0].clone()], vec![]).unwrap();
        let mut far = far;
        far.ee_pos = Vec3::new(5.0, 5.1, 0.0);
        let (n, ev) = step(&far, d(0.0, 0.0, 0.0, 1));
        assert!(n.grasped.is_none());
        assert!(ev.is_empty());
        assert_eq!(n.gripper, Gripper::Closed);
    }

    #[test]
    fn obstacle_entry_reported_once() {
        let obs = ObjectSpec::obstacle("black", Aabb::new(Vec3::new(15.0, -20.0, -20.0), Vec3::new(45.0, 20.0, 20.0)));
        let w = WorldState::new(Vec3::ZERO, vec![obs], vec![]).unwrap();
        let traj = Trajectory::new(vec![d(1.0, 0.0, 0.0, 0); 60], crate::pattern_dsl::Provenance::Parsed);
        let ex = execute(&w, &traj, None);
        assert_eq!(ex.collision_count(), 1);
        // EE half extent 10: box reaches x=15 at ee x=5, overlaps from ee x=6
        assert_eq!(ex.events[0].tick, 6);
    }

    #[test]
    fn force_on_downward_contact() {
        let obs = ObjectSpec::obstacle("table", Aabb::new(Vec3::new(-50.0, -50.0, -20.0), Vec3::new(50.0, 50.0, 0.0)));
        let w = WorldState::new(Vec3::new(0.0, 0.0, 12.0), vec![obs], vec![]).unwrap();
        assert_eq!(w.force_z, 0.0);
        let (w1, _) = step(&w, d(0.0, 0.0, -1.0, 0));
        assert_eq!(w1.force_z, 0.0);
        let (w2, ev) = step(&w1, d(0.0, 0.0, -1.0, 0));
        assert_eq!(w2.force_z, -1.0);
        // touching the face is not an overlap
        assert!(ev.is_empty());
    }

    #[test]
    fn place_refused_on_overlap() {
        let objs = vec![
            ObjectSpec::cube("red", "red", Vec3::new(-170.0, 190.0, 30.0), 15.0),
            ObjectSpec::cube("blue", "blue", Vec3::new(-270.0, 190.0, 30.0), 15.0),
        ];
        let w = WorldState::new(Vec3::new(-170.0, 190.0, 30.0), objs, vec![])
            .unwrap()
            .with_grasped("red")
            .unwrap();
        let (after, ev) = try_place(&w, Vec3::new(-270.0, 190.0, 30.0)).unwrap();
        assert_eq!(ev.kind, EventKind::Penetration { object: "blue".into() });
        assert_eq!(after, w);
        // centers 10 mm apart with 15 mm half extents overlap
        let (_, ev) = try_place(&w, Vec3::new(-260.0, 190.0, 30.0)).unwrap();
        assert!(matches!(ev.kind, EventKind::Penetration { .. }));
        let (after, ev) = try_place(&w, Vec3::new(0.0, 0.0, 30.0)).unwrap();
        assert_eq!(ev.kind, EventKind::Release { object: "red".into() });
        assert_eq!(after.object("red").unwrap().center, Vec3::new(0.0, 0.0, 30.0));
        assert!(after.grasped.is_none());
    }

    #[test]
    fn place_without_grasp_errors() {
        let w = WorldState::new(Vec3::ZERO, vec![], vec![]).unwrap();
        assert!(matches!(try_place(&w, Vec3::ZERO), Err(SimError::NothingGrasped)));
    }

    #[test]
    fn empty_trajectory_is_identity() {
        let w = WorldState::new(Vec3::new(1.0, 2.0, 3.0), vec![], vec![]).unwrap();
        let ex = execute(&w, &Trajectory::empty(), None);
        assert_eq!(ex.final_state, w);
        assert!(ex.events.is_empty());
        assert!(ex.trace.is_empty());
    }
}
