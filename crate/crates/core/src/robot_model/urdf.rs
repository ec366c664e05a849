use roxmltree::{Document, Node};

use super::{Joint, JointLimits, JointType, Link, RobotModel, UrdfError};
use crate::geometry::Vec3;

const M_TO_MM: f64 = 1000.0;

/// Reads the robot/link/joint/origin/axis/limit subset of URDF. Other
/// elements are ignored. Translations are converted from meters to
/// millimeters.
pub fn parse_urdf(xml: &str) -> Result<RobotModel, UrdfError> {
    let doc = Document::parse(xml).map_err(|e| {
        let pos = e.pos();
        UrdfError::MalformedXml { row: pos.row, col: pos.col, message: e.to_string() }
    })?;
    let robot = doc.root_element();
    if robot.tag_name().name() != "robot" {
        let pos = doc.text_pos_at(robot.range().start);
        return Err(UrdfError::MalformedXml {
            row: pos.row,
            col: pos.col,
            message: format!("expected <robot>, found <{}>", robot.tag_name().name()),
        });
    }
    let name = robot.attribute("name").unwrap_or("robot");
    let mut links = Vec::new();
    let mut joints = Vec::new();
    for node in robot.children().filter(Node::is_element) {
        match node.tag_name().name() {
            "link" => links.push(Link { name: required(node, "name")?.to_string() }),
            "joint" => joints.push(joint(node)?),
            _ => {}
        }
    }
    RobotModel::new(name, links, joints)
}

fn required<'a>(node: Node<'a, '_>, attr: &str) -> Result<&'a str, UrdfError> {
    node.attribute(attr).ok_or_else(|| UrdfError::InvalidAttribute {
        element: node.tag_name().name().to_string(),
        attr: attr.to_string(),
        value: "<missing>".to_string(),
    })
}

fn child<'a, 'i>(node: Node<'a, 'i>, tag: &str) -> Option<Node<'a, 'i>> {
    node.children().find(|c| c.is_element() && c.tag_name().name() == tag)
}

fn invalid(node: Node, attr: &str, value: &str) -> UrdfError {
    UrdfError::InvalidAttribute {
        element: node.tag_name().name().to_string(),
        attr: attr.to_string(),
        value: value.to_string(),
    }
}

fn triple(node: Node, attr: &str, default: Vec3) -> Result<Vec3, UrdfError> {
    let Some(text) = node.attribute(attr) else {
        return Ok(default);
    };
    let parts: Vec<f64> = text
        .split_whitespace()
        .map(str::parse)
        .collect::<Result<_, _>>()
        .map_err(|_| invalid(node, attr, text))?;
    match parts.as_slice() {
        [x, y, z] if x.is_finite() && y.is_finite() && z.is_finite() => Ok(Vec3::new(*x, *y, *z)),
        _ => Err(invalid(node, attr, text)),
    }
}

fn scalar(node: Node, attr: &str) -> Result<Option<f64>, UrdfError> {
    match node.attribute(attr) {
        None => Ok(None),
        Some(t) => t.trim().parse().map(Some).map_err(|_| invalid(node, attr, t)),
    }
}

fn joint(node: Node) -> Result<Joint, UrdfError> {
    let name = required(node, "name")?;
    let ty = required(node, "type")?;
    let joint_type = JointType::from_name(ty).ok_or_else(|| invalid(node, "type", ty))?;
    let parent = child(node, "parent")
        .map(|p| required(p, "link"))
        .transpose()?
        .ok_or_else(|| invalid(node, "parent", "<missing>"))?;
    let child_link = child(node, "child")
        .map(|p| required(p, "link"))
        .transpose()?
        .ok_or_else(|| invalid(node, "child", "<missing>"))?;
    let origin = match child(node, "origin") {
        Some(o) => triple(o, "xyz", Vec3::ZERO)? * M_TO_MM,
        None => Vec3::ZERO,
    };
    let axis = match child(node, "axis") {
        Some(a) => triple(a, "xyz", Vec3::new(1.0, 0.0, 0.0))?,
        None => Vec3::new(1.0, 0.0, 0.0),
    };
    let limits = match child(node, "limit") {
        Some(l) => match (scalar(l, "lower")?, scalar(l, "upper")?) {
            (None, None) => None,
            (lo, hi) => Some(JointLimits { lower: lo.unwrap_or(0.0), upper: hi.unwrap_or(0.0) }),
        },
        None => None,
    };
    Ok(Joint {
        name: name.to_string(),
        joint_type,
        parent: parent.to_string(),
        child: child_link.to_string(),
        origin,
        axis,
        limits,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_fixed_joint() {
        let m = parse_urdf(
            r#"<robot name="r"><link name="base"/><link name="tool"/>
               <joint name="j" type="fixed"><parent link="base"/><child link="tool"/>
               <origin xyz="0 0 0.1" rpy="0 0 0"/></joint><material name="x"/></robot>"#,
        )
        .unwrap();
        assert_eq!(m.depth(), 2);
        assert_eq!(m.joints[0].origin, Vec3::new(0.0, 0.0, 100.0));
        assert_eq!(m.joints[0].axis, Vec3::new(1.0, 0.0, 0.0));
    }

    #[test]
    fn child_is_ancestor() {
        let err = parse_urdf(
            r#"<robot name="r"><link name="a"/><link name="b"/><link name="c"/>
               <joint name="j1" type="revolute"><parent link="a"/><child link="b"/></joint>
               <joint name="j2" type="revolute"><parent link="b"/><child link="c"/></joint>
               <joint name="j3" type="revolute"><parent link="c"/><child link="a"/></joint></robot>"#,
        )
        .unwrap_err();
        assert!(matches!(err, UrdfError::CyclicChain(_)), "{err:?}");
    }

    #[test]
    fn cycle_below_root() {
        let err = parse_urdf(
            r#"<robot name="r"><link name="a"/><link name="b"/><link name="c"/>
               <joint name="j1" type="revolute"><parent link="a"/><child link="b"/></joint>
               <joint name="j2" type="revolute"><parent link="b"/><child link="c"/></joint>
               <joint name="j3" type="revolute"><parent link="c"/><child link="b"/></joint></robot>"#,
        )
        .unwrap_err();
        assert_eq!(err, UrdfError::CyclicChain("b".into()));
    }

    #[test]
    fn dangling_and_malformed() {
        let err = parse_urdf(
            r#"<robot name="r"><link name="a"/>
               <joint name="j" type="fixed"><parent link="a"/><child link="ghost"/></joint></robot>"#,
        )
        .unwrap_err();
        assert_eq!(err, UrdfError::DanglingReference("ghost".into()));
        let err = parse_urdf("<robot name=\"r\">\n  <link name=\"a\">\n</robot>").unwrap_err();
        assert!(matches!(err, UrdfError::MalformedXml { row: 3, .. }), "{err:?}");
    }

    #[test]
    fn limits_parsed() {
        let m = parse_urdf(
            r#"<robot name="r"><link name="a"/><link name="b"/>
               <joint name="j" type="revolute"><parent link="a"/><child link="b"/>
               <axis xyz="0 0 1"/><limit lower="-1.5" upper="1.5" effort="10" velocity="1"/></joint></robot>"#,
        )
        .unwrap();
        assert_eq!(m.joints[0].limits, Some(JointLimits { lower: -1.5, upper: 1.5 }));
        assert_eq!(m.joints[0].axis, Vec3::new(0.0, 0.0, 1.0));
    }
}
