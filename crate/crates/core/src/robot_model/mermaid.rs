use std::collections::BTreeMap;
use std::fmt::Write as _;

use super::RobotModel;

/// `graph TD` flowchart: one `nK["link"]` node per link in model order and
/// one labeled edge per joint.
pub fn to_mermaid(model: &RobotModel) -> String {
    let mut out = String::from("graph TD\n");
    for (i, l) in model.links.iter().enumerate() {
        let _ = writeln!(out, "    n{i}[\"{}\"]", escape(&l.name));
    }
    for j in &model.joints {
        let p = model.link_index(&j.parent).expect("validated model");
        let c = model.link_index(&j.child).expect("validated model");
        let _ = writeln!(out, "    n{p} -->|\"{} ({})\"| n{c}", escape(&j.name), j.joint_type.name());
    }
    out
}

fn escape(s: &str) -> String {
    s.replace('"', "#quot;")
}

fn unescape(s: &str) -> String {
    s.replace("#quot;", "\"")
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct MermaidEdge {
    pub parent: String,
    pub child: String,
    pub label: String,
}

/// Reads back the dialect written by [`to_mermaid`]. Returns the node labels
/// and edges; lines that are neither are ignored.
pub fn parse_mermaid(text: &str) -> (Vec<String>, Vec<MermaidEdge>) {
    let mut nodes = BTreeMap::new();
    let mut order = Vec::new();
    let mut raw_edges = Vec::new();
    for line in text.lines().map(str::trim) {
        if let Some((id, rest)) = line.split_once("[\"") {
            if let Some(label) = rest.strip_suffix("\"]") {
                nodes.insert(id.to_string(), unescape(label));
                order.push(id.to_string());
                continue;
            }
        }
        if let Some((from, rest)) = line.split_once(" -->|\"") {
            if let Some((label, to)) = rest.split_once("\"| ") {
                raw_edges.push((from.to_string(), to.to_string(), unescape(label)));
            }
        }
    }
    let name = |id: &str| nodes.get(id).cloned().unwrap_or_else(|| id.to_string());
    let edges = raw_edges
        .into_iter()
        .map(|(f, t, label)| MermaidEdge { parent: name(&f), child: name(&t), label })
        .collect();
    (order.iter().map(|id| name(id)).collect(), edges)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::robot_model::tests::chain;

    #[test]
    fn two_links() {
        let text = to_mermaid(&chain(&[10.0]));
        assert_eq!(text, "graph TD\n    n0[\"l0\"]\n    n1[\"l1\"]\n    n0 -->|\"j0 (revolute)\"| n1\n");
        let (nodes, edges) = parse_mermaid(&text);
        assert_eq!(nodes, vec!["l0", "l1"]);
        assert_eq!(edges.len(), 1);
        assert_eq!((edges[0].parent.as_str(), edges[0].child.as_str()), ("l0", "l1"));
    }
}
