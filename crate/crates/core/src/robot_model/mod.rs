//! Kinematic-chain model read from URDF, with hierarchy export and a
//! conservative spherical reach check.

mod mermaid;
mod reach;
mod urdf;

use std::collections::BTreeMap;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{fmt_coord, Vec3};

pub use mermaid::{parse_mermaid, to_mermaid, MermaidEdge};
pub use reach::{reach_check, ReachEnvelope, ReachVerdict, DEFAULT_SINGULARITY_MARGIN_MM};
pub use urdf::parse_urdf;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum UrdfError {
    #[error("malformed XML at {row}:{col}: {message}")]
    MalformedXml { row: u32, col: u32, message: String },
    #[error("cyclic kinematic chain through link '{0}'")]
    CyclicChain(String),
    #[error("joint references unknown link '{0}'")]
    DanglingReference(String),
    #[error("link '{0}' has more than one parent joint")]
    MultipleParents(String),
    #[error("model has no root link")]
    NoRoot,
    #[error("model has several root links: {0:?}")]
    MultipleRoots(Vec<String>),
    #[error("invalid attribute {attr} on {element}: {value}")]
    InvalidAttribute { element: String, attr: String, value: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum JointType {
    Fixed,
    Revolute,
    Prismatic,
    Continuous,
}

impl JointType {
    pub fn name(self) -> &'static str {
        match self {
            JointType::Fixed => "fixed",
            JointType::Revolute => "revolute",
            JointType::Prismatic => "prismatic",
            JointType::Continuous => "continuous",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        Some(match s {
            "fixed" => JointType::Fixed,
            "revolute" => JointType::Revolute,
            "prismatic" => JointType::Prismatic,
            "continuous" => JointType::Continuous,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JointLimits {
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Link {
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Joint {
    pub name: String,
    pub joint_type: JointType,
    pub parent: String,
    pub child: String,
    /// Origin translation in millimeters.
    pub origin: Vec3,
    pub axis: Vec3,
    pub limits: Option<JointLimits>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RobotModel {
    pub name: String,
    pub links: Vec<Link>,
    pub joints: Vec<Joint>,
    pub root: String,
}

impl RobotModel {
    /// Builds a model and checks the tree invariants.
    pub fn new(name: &str, links: Vec<Link>, joints: Vec<Joint>) -> Result<Self, UrdfError> {
        let root = find_root(&links, &joints)?;
        Ok(RobotModel { name: name.to_string(), links, joints, root })
    }

    pub fn link_index(&self, name: &str) -> Option<usize> {
        self.links.iter().position(|l| l.name == name)
    }

    pub fn children_of(&self, link: &str) -> impl Iterator<Item = &Joint> {
        let link = link.to_string();
        self.joints.iter().filter(move |j| j.parent == link)
    }

    pub fn parent_joint(&self, link: &str) -> Option<&Joint> {
        self.joints.iter().find(|j| j.child == link)
    }

    pub fn leaves(&self) -> Vec<&str> {
        self.links
            .iter()
            .filter(|l| !self.joints.iter().any(|j| j.parent == l.name))
            .map(|l| l.name.as_str())
            .collect()
    }

    /// Joints from the root down to `link`, root first.
    pub fn chain_to(&self, link: &str) -> Vec<&Joint> {
        let mut chain = Vec::new();
        let mut cur = link;
        while let Some(j) = self.parent_joint(cur) {
            chain.push(j);
            cur = &j.parent;
            if chain.len() > self.joints.len() {
                break;
            }
        }
        chain.reverse();
        chain
    }

    /// Number of links on the longest root-to-leaf path.
    pub fn depth(&self) -> usize {
        self.longest_path().len()
    }

    /// Link names on the longest root-to-leaf path; ties resolve to the leaf
    /// that appears first in document order.
    pub fn longest_path(&self) -> Vec<String> {
        let mut best: Vec<String> = vec![self.root.clone()];
        for leaf in self.leaves() {
            let chain = self.chain_to(leaf);
            if chain.len() + 1 > best.len() {
                best = std::iter::once(self.root.clone())
                    .chain(chain.iter().map(|j| j.child.clone()))
                    .collect();
            }
        }
        best
    }

    /// Plain-text summary for prompt inclusion.
    pub fn structure_summary(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "Robot: {}", self.name);
        let _ = writeln!(s, "Links ({}): {}", self.links.len(), self.links.iter().map(|l| l.name.as_str()).collect::<Vec<_>>().join(", "));
        let _ = writeln!(s, "Hierarchy depth: {}", self.depth());
        let _ = writeln!(s, "Joints ({}):", self.joints.len());
        for j in &self.joints {
            let _ = write!(
                s,
                "- {} ({}): {} -> {}, offset {} mm, axis {}",
                j.name,
                j.joint_type.name(),
                j.parent,
                j.child,
                j.origin,
                j.axis
            );
            if let Some(l) = j.limits {
                let _ = write!(s, ", limits [{}, {}]", fmt_coord(l.lower), fmt_coord(l.upper));
            }
            s.push('\n');
        }
        s
    }
}

fn find_root(links: &[Link], joints: &[Joint]) -> Result<String, UrdfError> {
    for j in joints {
        for name in [&j.parent, &j.child] {
            if !links.iter().any(|l| &l.name == name) {
                return Err(UrdfError::DanglingReference(name.clone()));
            }
        }
    }
    if let Some(link) = find_cycle(links, joints) {
        return Err(UrdfError::CyclicChain(link));
    }
    let mut seen = BTreeMap::new();
    for j in joints {
        if seen.insert(j.child.as_str(), ()).is_some() {
            return Err(UrdfError::MultipleParents(j.child.clone()));
        }
    }
    let roots: Vec<String> = links
        .iter()
        .filter(|l| !seen.contains_key(l.name.as_str()))
        .map(|l| l.name.clone())
        .collect();
    match roots.len() {
        0 => Err(UrdfError::NoRoot),
        1 => Ok(roots.into_iter().next().unwrap()),
        _ => Err(UrdfError::MultipleRoots(roots)),
    }
}

/// First link found on a directed parent->child cycle.
fn find_cycle(links: &[Link], joints: &[Joint]) -> Option<String> {
    #[derive(Clone, Copy, PartialEq)]
    enum Mark {
        New,
        Open,
        Done,
    }
    let idx = |n: &str| links.iter().position(|l| l.name == n).unwrap();
    let mut adj = vec![Vec::new(); links.len()];
    for j in joints {
        adj[idx(&j.parent)].push(idx(&j.child));
    }
    let mut mark = vec![Mark::New; links.len()];
    for start in 0..links.len() {
        if mark[start] != Mark::New {
            continue;
        }
        let mut stack = vec![(start, 0usize)];
        mark[start] = Mark::Open;
        while let Some(&mut (node, ref mut next)) = stack.last_mut() {
            if let Some(&c) = adj[node].get(*next) {
                *next += 1;
                match mark[c] {
                    Mark::Open => return Some(links[c].name.clone()),
                    Mark::New => {
                        mark[c] = Mark::Open;
                        stack.push((c, 0));
                    }
                    Mark::Done => {}
                }
            } else {
                mark[node] = Mark::Done;
                stack.pop();
            }
        }
    }
    None
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub fn chain(offsets_mm: &[f64]) -> RobotModel {
        let links = (0..=offsets_mm.len()).map(|i| Link { name: format!("l{i}") }).collect();
        let joints = offsets_mm
            .iter()
            .enumerate()
            .map(|(i, &d)| Joint {
                name: format!("j{i}"),
                joint_type: JointType::Revolute,
                parent: format!("l{i}"),
                child: format!("l{}", i + 1),
                origin: Vec3::new(0.0, 0.0, d),
                axis: Vec3::new(0.0, 0.0, 1.0),
                limits: None,
            })
            .collect();
        RobotModel::new("chain", links, joints).unwrap()
    }

    #[test]
    fn tree_law_and_depth() {
        let m = chain(&[300.0, 250.0, 150.0]);
        assert_eq!(m.links.len(), m.joints.len() + 1);
        assert_eq!(m.depth(), 4);
        assert_eq!(m.root, "l0");
        assert_eq!(m.leaves(), vec!["l3"]);
    }

    #[test]
    fn summary_lists_joints() {
        let s = chain(&[100.0]).structure_summary();
        assert!(s.contains("- j0 (revolute): l0 -> l1, offset [0, 0, 100] mm"), "{s}");
    }
}
