use std::collections::BTreeMap;

use super::{params, CheckId, Sentinel, SentinelError, Severity, Verdict};
use crate::geometry::{Aabb, Vec3};
use crate::pattern_dsl::Trajectory;
use crate::robot_model::ReachVerdict;
use crate::world_sim::{step, EventKind, ObjectSpec, WorldState, Zone};

fn name_of(world: &WorldState, id: &str) -> String {
    world.object(id).map(|o| o.display_name()).unwrap_or_else(|| id.to_string())
}

fn zone_name(z: &Zone) -> String {
    format!("{} zone", z.label)
}

fn mm(v: f64) -> String {
    format!("{:.1}", v)
}

/// Objects other than `ignore` and the carried one whose box, grown by the
/// EE half extents, meets the straight segment `from → to`.
pub fn obstruction_between<'w>(world: &'w WorldState, from: Vec3, to: Vec3, ignore: &[&str]) -> Vec<&'w ObjectSpec> {
    world
        .objects
        .iter()
        .filter(|o| !ignore.contains(&o.id.as_str()) && world.grasped.as_deref() != Some(o.id.as_str()))
        .filter(|o| o.aabb().inflate(world.ee_half_extents).segment_intersects(from, to))
        .collect()
}

impl Sentinel {
    /// Judges releasing `object_id` with its center at `target`.
    pub fn check_placement(&self, world: &WorldState, object_id: &str, target: Vec3) -> Result<Verdict, SentinelError> {
        let obj = world.object(object_id).ok_or_else(|| SentinelError::UnknownObject(object_id.to_string()))?;
        let placed = Aabb::from_center(target, obj.half_extents);
        if let Some(other) = world.objects.iter().find(|o| o.id != obj.id && o.aabb().intersects(&placed)) {
            return Ok(self.templates.make(
                "penetration",
                Severity::Reject,
                CheckId::Placement,
                None,
                params([
                    ("object", obj.display_name()),
                    ("other", other.display_name()),
                    ("target", target.to_string()),
                ]),
            ));
        }
        let mut worst: Option<Verdict> = None;
        for z in world.zones.iter().filter(|z| z.aabb.contains_point(target)) {
            if let Some(v) = self.zone_hazard(obj, z) {
                if worst.as_ref().is_none_or(|w| v.severity > w.severity) {
                    worst = Some(v);
                }
            }
        }
        Ok(worst.unwrap_or_else(|| {
            self.safe(CheckId::Placement, format!("place the {} at {}", obj.display_name(), target))
        }))
    }

    /// Hazard verdict for putting `obj` into `zone`, `None` when the matrix
    /// has no warn or reject rule for the pair.
    pub fn zone_hazard(&self, obj: &ObjectSpec, zone: &Zone) -> Option<Verdict> {
        let rule = self.matrix.lookup(&obj.attribute, &zone.attribute)?;
        let key = match rule.verdict {
            Severity::Ok => return None,
            Severity::Warn => "hazard_warn",
            Severity::Reject => "hazard",
        };
        let mut p = self.hazard_params(obj, zone);
        let rationale = super::fill(&rule.rationale, &p);
        p.insert("rationale".into(), rationale);
        Some(self.templates.make(key, rule.verdict, CheckId::Placement, None, p))
    }

    pub(crate) fn hazard_params(&self, obj: &ObjectSpec, zone: &Zone) -> BTreeMap<String, String> {
        params([
            ("object", obj.display_name()),
            ("attribute", obj.attribute.clone()),
            ("position", obj.center.to_string()),
            ("zone", zone_name(zone)),
            ("zone_attribute", zone.attribute.clone()),
        ])
    }

    /// Judges moving `object_id` into the zone named `zone` (id or label).
    pub fn check_zone_move(&self, world: &WorldState, object_id: &str, zone: &str) -> Result<Verdict, SentinelError> {
        let obj = world.object(object_id).ok_or_else(|| SentinelError::UnknownObject(object_id.to_string()))?;
        let z = world.zone_by_name(zone).ok_or_else(|| SentinelError::UnknownObject(zone.to_string()))?;
        Ok(self.zone_hazard(obj, z).unwrap_or_else(|| {
            self.safe(CheckId::Placement, format!("move the {} to the {}", obj.display_name(), zone_name(z)))
        }))
    }

    pub fn safe(&self, source: CheckId, action: String) -> Verdict {
        self.templates.make("safe", Severity::Ok, source, None, params([("action", action)]))
    }

    /// Dry-runs `traj` from `world` and reports collisions, release
    /// penetrations, safe-zone exits and reach problems, in tick order.
    pub fn check_trajectory(&self, world: &WorldState, traj: &Trajectory) -> Vec<Verdict> {
        let mut out = Vec::new();
        let safe: Vec<&Zone> = world.zones.iter().filter(|z| z.is_safe_zone()).collect();
        let mut inside: Vec<bool> = safe.iter().map(|z| zone_holds(z, world).is_none()).collect();
        let mut reach_state = 0u8;
        let mut w = world.clone();
        for &delta in &traj.steps {
            let (next, events) = step(&w, delta);
            let tick = next.tick;
            for ev in &events {
                match &ev.kind {
                    EventKind::Collision { with } => out.push(self.templates.make(
                        "collision",
                        Severity::Reject,
                        CheckId::Trajectory,
                        Some(tick),
                        params([
                            ("other", name_of(&next, with)),
                            ("position", next.ee_pos.to_string()),
                            ("tick", tick.to_string()),
                        ]),
                    )),
                    EventKind::Penetration { object } => {
                        let released = events.iter().find_map(|e| match &e.kind {
                            EventKind::Release { object } => Some(object.clone()),
                            _ => None,
                        });
                        let released = released.unwrap_or_default();
                        out.push(self.templates.make(
                            "release_penetration",
                            Severity::Reject,
                            CheckId::Trajectory,
                            Some(tick),
                            params([
                                ("object", name_of(&next, &released)),
                                ("other", name_of(&next, object)),
                                ("position", next.ee_pos.to_string()),
                                ("tick", tick.to_string()),
                            ]),
                        ))
                    }
                    _ => {}
                }
            }
            for (i, z) in safe.iter().enumerate() {
                let outside = zone_holds(z, &next);
                if inside[i] {
                    if let Some(subject) = &outside {
                        out.push(self.templates.make(
                            "zone_exit",
                            Severity::Warn,
                            CheckId::Trajectory,
                            Some(tick),
                            params([
                                ("zone", zone_name(z)),
                                ("subject", subject.clone()),
                                ("position", next.ee_pos.to_string()),
                                ("tick", tick.to_string()),
                            ]),
                        ));
                    }
                }
                inside[i] = outside.is_none();
            }
            if let Some(env) = &self.reach {
                let (state, v) = match env.check(next.ee_pos) {
                    ReachVerdict::Reachable => (0, None),
                    ReachVerdict::NearSingularity(m) => (1, Some(("near_singularity", Severity::Warn, "margin", m))),
                    ReachVerdict::OutOfReach(d) => (2, Some(("out_of_reach", Severity::Reject, "deficit", d))),
                };
                if state != reach_state {
                    if let Some((key, sev, pname, val)) = v {
                        out.push(self.templates.make(
                            key,
                            sev,
                            CheckId::Reach,
                            Some(tick),
                            params([
                                (pname, mm(val)),
                                ("radius", mm(env.max_radius)),
                                ("position", next.ee_pos.to_string()),
                                ("tick", tick.to_string()),
                            ]),
                        ));
                    }
                    reach_state = state;
                }
            }
            w = next;
        }
        out
    }

    /// Warns about every object lying on the straight EE path to `target`.
    pub fn check_obstruction(&self, world: &WorldState, target: Vec3, ignore: &[&str]) -> Vec<Verdict> {
        obstruction_between(world, world.ee_pos, target, ignore)
            .into_iter()
            .map(|o| {
                self.templates.make(
                    "obstruction",
                    Severity::Warn,
                    CheckId::Obstruction,
                    None,
                    params([
                        ("other", o.display_name()),
                        ("obstacle_position", o.center.to_string()),
                        ("position", world.ee_pos.to_string()),
                        ("target", target.to_string()),
                    ]),
                )
            })
            .collect()
    }
}

/// `None` when the EE point and any carried box are inside `zone`, otherwise
/// the name of what is outside.
fn zone_holds(zone: &Zone, w: &WorldState) -> Option<String> {
    if !zone.aabb.contains_point(w.ee_pos) {
        return Some("end effector".into());
    }
    match w.carried() {
        Some(c) if !zone.aabb.contains_box(&c.aabb()) => Some(c.display_name()),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern_dsl::{Provenance, StepDelta};
    use crate::robot_model::ReachEnvelope;

    fn world() -> WorldState {
        WorldState::new(
            Vec3::ZERO,
            vec![
                ObjectSpec::cube("red", "red", Vec3::new(0.0, 100.0, 15.0), 15.0).with_attribute("wood"),
                ObjectSpec::cube("blue", "blue", Vec3::new(-270.0, 190.0, 30.0), 15.0).with_attribute("ice"),
                ObjectSpec::obstacle("wall", Aabb::new(Vec3::new(40.0, -20.0, -20.0), Vec3::new(60.0, 20.0, 20.0))),
            ],
            vec![
                Zone::new("yellow", "yellow", Aabb::new(Vec3::new(200.0, 0.0, 0.0), Vec3::new(300.0, 100.0, 100.0)), "fire"),
                Zone::new("gray", "gray", Aabb::new(Vec3::new(-100.0, -100.0, -100.0), Vec3::new(30.0, 100.0, 100.0)), "safe"),
            ],
        )
        .unwrap()
    }

    fn line(dx: f64, n: usize) -> Trajectory {
        Trajectory::new(vec![StepDelta::new(dx, 0.0, 0.0, 0); n], Provenance::Parsed)
    }

    #[test]
    fn placement_penetration() {
        let v = Sentinel::default().check_placement(&world(), "red", Vec3::new(-270.0, 190.0, 30.0)).unwrap();
        assert_eq!(v.severity, Severity::Reject);
        assert!(v.reason.contains("blue cube") && v.reason.contains("penetration"));
        assert!(v.detail.contains("red cube") && v.detail.contains("blue cube") && v.detail.contains("penetration"));
    }

    #[test]
    fn placement_hazard_and_ok() {
        let s = Sentinel::default();
        let v = s.check_placement(&world(), "red", Vec3::new(250.0, 50.0, 50.0)).unwrap();
        assert_eq!((v.severity, v.template.as_str()), (Severity::Reject, "hazard"));
        assert!(v.reason.contains("wood"));
        let v = s.check_placement(&world(), "red", Vec3::new(-100.0, -300.0, 15.0)).unwrap();
        assert_eq!(v.severity, Severity::Ok);
        assert!(v.detail.contains("safe"));
        assert!(s.check_placement(&world(), "ghost", Vec3::ZERO).is_err());
    }

    #[test]
    fn trajectory_collision_and_exit() {
        let s = Sentinel::default();
        let vs = s.check_trajectory(&world(), &line(1.0, 40));
        let rejects: Vec<_> = vs.iter().filter(|v| v.is_reject()).collect();
        assert_eq!(rejects.len(), 1);
        // wall min x 40, EE half extent 10: overlap once ee.x > 30
        assert_eq!(rejects[0].tick, Some(31));
        let warns: Vec<_> = vs.iter().filter(|v| v.severity == Severity::Warn).collect();
        assert_eq!(warns.len(), 1);
        assert_eq!(warns[0].tick, Some(31));
        assert!(warns[0].reason.contains("wall proximity"));
        assert!(s.check_trajectory(&world(), &Trajectory::empty()).is_empty());
    }

    #[test]
    fn clean_trajectory_is_silent() {
        let vs = Sentinel::default().check_trajectory(&world(), &line(-1.0, 50));
        assert!(vs.is_empty(), "{vs:?}");
    }

    #[test]
    fn reach_warnings() {
        let env = ReachEnvelope { base_position: Vec3::ZERO, max_radius: 20.0, singularity_margin: 5.0 };
        let s = Sentinel::default().with_envelope(env);
        let vs = s.check_trajectory(&world(), &line(-1.0, 25));
        let kinds: Vec<_> = vs.iter().map(|v| (v.template.as_str(), v.tick)).collect();
        assert_eq!(kinds, vec![("near_singularity", Some(15)), ("out_of_reach", Some(21))]);
    }

    #[test]
    fn obstruction_on_segment() {
        let s = Sentinel::default();
        let vs = s.check_obstruction(&world(), Vec3::new(100.0, 0.0, 0.0), &[]);
        assert_eq!(vs.len(), 1);
        assert!(vs[0].summary.contains("black obstacle"));
        assert!(s.check_obstruction(&world(), Vec3::new(100.0, 0.0, 0.0), &["wall"]).is_empty());
    }
}
