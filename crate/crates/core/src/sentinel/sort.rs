use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use super::{params, CheckId, Sentinel, Severity, Verdict};
use crate::world_sim::{ObjectSpec, Zone};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SortOutcome {
    /// Object id → zone id.
    pub assignment: BTreeMap<String, String>,
    pub verdicts: Vec<Verdict>,
}

impl Sentinel {
    /// Assigns every object a zone the hazard matrix does not reject.
    ///
    /// Objects with a single admissible zone are fixed first; the rest take
    /// the first admissible zone, preferring `ok` rules and zones not yet
    /// used. Safe zones are not sorting targets.
    pub fn sort_assignment(&self, objects: &[ObjectSpec], zones: &[Zone]) -> SortOutcome {
        let targets: Vec<&Zone> = zones.iter().filter(|z| !z.is_safe_zone()).collect();
        let mut per_object: Vec<Vec<Verdict>> = vec![Vec::new(); objects.len()];
        let mut admissible: Vec<Vec<(Severity, &Zone)>> = Vec::with_capacity(objects.len());
        for (i, o) in objects.iter().enumerate() {
            let mut ok = Vec::new();
            for z in &targets {
                match self.zone_hazard(o, z) {
                    Some(v) if v.is_reject() => per_object[i].push(Verdict { source: CheckId::Sorting, ..v }),
                    Some(v) => ok.push((v.severity, *z)),
                    None => ok.push((Severity::Ok, *z)),
                }
            }
            admissible.push(ok);
        }

        let mut chosen: Vec<Option<(Severity, &Zone)>> = vec![None; objects.len()];
        let mut used = BTreeSet::new();
        for (i, adm) in admissible.iter().enumerate() {
            if let [only] = adm.as_slice() {
                chosen[i] = Some(*only);
                used.insert(only.1.id.clone());
            }
        }
        for (i, adm) in admissible.iter().enumerate() {
            if chosen[i].is_some() || adm.is_empty() {
                continue;
            }
            let pick = adm
                .iter()
                .min_by_key(|(sev, z)| (*sev, used.contains(&z.id)))
                .copied()
                .expect("non-empty");
            used.insert(pick.1.id.clone());
            chosen[i] = Some(pick);
        }

        let mut out = SortOutcome { assignment: BTreeMap::new(), verdicts: Vec::new() };
        for (i, o) in objects.iter().enumerate() {
            out.verdicts.append(&mut per_object[i]);
            match chosen[i] {
                Some((sev, z)) => {
                    out.assignment.insert(o.id.clone(), z.id.clone());
                    let v = self.templates.make("assignment", sev, CheckId::Sorting, None, self.hazard_params(o, z));
                    out.verdicts.push(v);
                }
                None => {
                    let v = self.templates.make(
                        "unassignable",
                        Severity::Reject,
                        CheckId::Sorting,
                        None,
                        params([("object", o.display_name()), ("attribute", o.attribute.clone())]),
                    );
                    out.verdicts.push(v);
                }
            }
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{Aabb, Vec3};

    fn zone(id: &str, attr: &str, x: f64) -> Zone {
        Zone::new(id, id, Aabb::from_center(Vec3::new(x, 300.0, 0.0), Vec3::new(50.0, 50.0, 5.0)), attr)
    }

    #[test]
    fn fire_ice_sorting() {
        let objs = [
            ObjectSpec::cube("red", "red", Vec3::ZERO, 15.0).with_attribute("fire"),
            ObjectSpec::cube("blue", "blue", Vec3::new(50.0, 0.0, 0.0), 15.0).with_attribute("ice"),
        ];
        let zones = [zone("yellow", "fire", -150.0), zone("green", "forest", 150.0)];
        let out = Sentinel::default().sort_assignment(&objs, &zones);
        assert_eq!(out.assignment["red"], "yellow");
        assert_eq!(out.assignment["blue"], "green");
        let rejects: Vec<_> = out.verdicts.iter().filter(|v| v.is_reject()).collect();
        assert_eq!(rejects.len(), 2);
        assert!(rejects.iter().all(|v| v.source == CheckId::Sorting && !v.reason.is_empty()));
    }

    #[test]
    fn exhausted_matrix() {
        let objs = [ObjectSpec::cube("w", "brown", Vec3::ZERO, 15.0).with_attribute("wood")];
        let zones = [zone("a", "fire", 0.0), zone("b", "fire", 200.0)];
        let out = Sentinel::default().sort_assignment(&objs, &zones);
        assert!(out.assignment.is_empty());
        assert_eq!(out.verdicts.last().unwrap().template, "unassignable");
        assert!(Sentinel::default().sort_assignment(&[], &zones).assignment.is_empty());
    }
}
