#![allow(dead_code)]

use std::path::PathBuf;

use langarm::geometry::{Aabb, Vec3};
use langarm::world_sim::{load_world, ObjectSpec, WorldState};

pub fn fixture(rel: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(rel)
}

pub fn world(name: &str) -> WorldState {
    load_world(fixture(&format!("worlds/{name}.json"))).expect("fixture world").0
}

/// EE at the origin-side start, an obstacle wall between it and the red cube.
pub fn obstacle_world(cube_x: f64, cube_y: f64, wall_x: f64, wall_w: f64, wall_y: f64, wall_h: f64) -> WorldState {
    WorldState::new(
        Vec3::new(0.0, 0.0, 15.0),
        vec![
            ObjectSpec::obstacle(
                "black",
                Aabb::new(Vec3::new(wall_x - wall_w, wall_y, 0.0), Vec3::new(wall_x + wall_w, wall_y + 20.0, wall_h)),
            ),
            ObjectSpec::cube("red", "red", Vec3::new(cube_x, cube_y, 15.0), 15.0),
        ],
        vec![],
    )
    .expect("valid obstacle world")
}
