use serde::{Deserialize, Serialize};

use super::RobotModel;
use crate::geometry::Vec3;

pub const DEFAULT_SINGULARITY_MARGIN_MM: f64 = 10.0;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReachEnvelope {
    pub base_position: Vec3,
    pub max_radius: f64,
    pub singularity_margin: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "verdict", content = "mm", rename_all = "snake_case")]
pub enum ReachVerdict {
    Reachable,
    /// Distance left before full extension.
    NearSingularity(f64),
    /// Distance beyond full extension.
    OutOfReach(f64),
}

impl ReachEnvelope {
    /// Sphere whose radius is the largest sum of joint offset norms over all
    /// root-to-leaf chains.
    pub fn from_model(model: &RobotModel, base: Vec3, margin: f64) -> Self {
        let max_radius = model
            .leaves()
            .into_iter()
            .map(|leaf| model.chain_to(leaf).iter().map(|j| j.origin.norm()).sum::<f64>())
            .fold(0.0, f64::max);
        ReachEnvelope { base_position: base, max_radius, singularity_margin: margin.max(0.0) }
    }

    pub fn check(&self, target: Vec3) -> ReachVerdict {
        let d = self.base_position.distance(target);
        if d > self.max_radius {
            ReachVerdict::OutOfReach(d - self.max_radius)
        } else if self.max_radius - d <= self.singularity_margin {
            ReachVerdict::NearSingularity(self.max_radius - d)
        } else {
            ReachVerdict::Reachable
        }
    }
}

pub fn reach_check(model: &RobotModel, base: Vec3, target: Vec3) -> ReachVerdict {
    ReachEnvelope::from_model(model, base, DEFAULT_SINGULARITY_MARGIN_MM).check(target)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robot_model::tests::chain;

    #[test]
    fn verdicts() {
        let m = chain(&[300.0, 250.0, 150.0]);
        let base = Vec3::new(5.0, -3.0, 2.0);
        let at = |d: f64| base + Vec3::new(d, 0.0, 0.0);
        assert_eq!(reach_check(&m, base, at(800.0)), ReachVerdict::OutOfReach(100.0));
        assert_eq!(reach_check(&m, base, base), ReachVerdict::Reachable);
        assert_eq!(reach_check(&m, base, at(695.0)), ReachVerdict::NearSingularity(5.0));
        assert_eq!(reach_check(&m, base, at(689.0)), ReachVerdict::Reachable);
    }

    #[test]
    fn branches_take_longest() {
        let mut m = chain(&[100.0, 100.0]);
        m.links.push(crate::robot_model::Link { name: "side".into() });
        let mut j = m.joints[0].clone();
        j.name = "side_j".into();
        j.child = "side".into();
        j.origin = Vec3::new(0.0, 500.0, 0.0);
        m.joints.push(j);
        let env = ReachEnvelope::from_model(&m, Vec3::ZERO, 10.0);
        assert_eq!(env.max_radius, 500.0);
    }
}
