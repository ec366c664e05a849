//! Language-to-motion workbench.

pub mod conductor;
pub mod geometry;
pub mod pattern_dsl;
pub mod planner_gateway;
pub mod prompt_forge;
pub mod robot_model;
pub mod scene_render;
pub mod sentinel;
pub mod world_sim;
