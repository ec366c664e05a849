use std::fmt;
use std::str::FromStr;

use thiserror::Error;

use super::{Color, WorldState};
use crate::geometry::Vec3;

/// The six-entry observation list, in fixed order: grasped flag, EE
/// position, EE velocity, red cube position, blue cube position, force in z.
#[derive(Debug, Clone, PartialEq)]
pub struct Observation {
    pub grasped: bool,
    pub ee_pos: Vec3,
    pub ee_vel: Vec3,
    pub red: Option<Vec3>,
    pub blue: Option<Vec3>,
    pub force_z: f64,
}

pub fn observe(world: &WorldState) -> Observation {
    let pos = |c: Color| world.object_by_color(&c).map(|o| o.center);
    Observation {
        grasped: world.grasped.is_some(),
        ee_pos: world.ee_pos,
        ee_vel: world.ee_vel,
        red: pos(Color::Red),
        blue: pos(Color::Blue),
        force_z: world.force_z,
    }
}

/// Centers of every object in world order, `[[x, y, z], ...]`.
pub fn object_positions(world: &WorldState) -> String {
    let items: Vec<String> = world.objects.iter().map(|o| o.center.to_string()).collect();
    format!("[{}]", items.join(", "))
}

const ABSENT: &str = "[absent]";

fn fmt_force(f: f64) -> String {
    if f == f.trunc() {
        format!("{:.1}", if f == 0.0 { 0.0 } else { f })
    } else {
        format!("{f}")
    }
}

impl fmt::Display for Observation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let opt = |p: Option<Vec3>| p.map(|v| v.to_string()).unwrap_or_else(|| ABSENT.to_string());
        write!(
            f,
            "[[{}], {}, {}, {}, {}, [{}]]",
            self.grasped,
            self.ee_pos,
            self.ee_vel,
            opt(self.red),
            opt(self.blue),
            fmt_force(self.force_z)
        )
    }
}

#[derive(Debug, Error, PartialEq)]
#[error("malformed observation list: {0}")]
pub struct ObservationParseError(pub String);

impl FromStr for Observation {
    type Err = ObservationParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let err = |m: &str| ObservationParseError(m.to_string());
        let s = s.trim();
        let inner = s
            .strip_prefix('[')
            .and_then(|r| r.strip_suffix(']'))
            .ok_or_else(|| err("outer brackets"))?;
        let mut entries = Vec::new();
        let mut rest = inner.trim();
        while !rest.is_empty() {
            let body_start = rest.strip_prefix('[').ok_or_else(|| err("entry must start with ["))?;
            let end = body_start.find(']').ok_or_else(|| err("unterminated entry"))?;
            entries.push(body_start[..end].trim().to_string());
            rest = body_start[end + 1..].trim_start();
            rest = rest.strip_prefix(',').unwrap_or(rest).trim_start();
        }
        if entries.len() != 6 {
            return Err(err("expected six entries"));
        }
        let grasped = match entries[0].as_str() {
            "true" => true,
            "false" => false,
            _ => return Err(err("grasped flag")),
        };
        let vec = |e: &str| -> Result<Option<Vec3>, ObservationParseError> {
            if e == "absent" {
                return Ok(None);
            }
            let parts: Vec<f64> = e
                .split(',')
                .map(|p| p.trim().parse::<f64>())
                .collect::<Result<_, _>>()
                .map_err(|_| err("number"))?;
            match parts.as_slice() {
                [x, y, z] => Ok(Some(Vec3::new(*x, *y, *z))),
                _ => Err(err("expected three coordinates")),
            }
        };
        Ok(Observation {
            grasped,
            ee_pos: vec(&entries[1])?.ok_or_else(|| err("ee position absent"))?,
            ee_vel: vec(&entries[2])?.ok_or_else(|| err("ee velocity absent"))?,
            red: vec(&entries[3])?,
            blue: vec(&entries[4])?,
            force_z: entries[5].parse().map_err(|_| err("force"))?,
        })
    }
}
