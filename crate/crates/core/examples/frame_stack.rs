//! Render a task's evolution as a multi-view frame stack plus an ROI zoom.

use langarm::conductor::execute_response;
use langarm::geometry::{Aabb, Vec3};
use langarm::pattern_dsl::Provenance;
use langarm::planner_gateway::mock_plan;
use langarm::scene_render::{frame_stack, roi_zoom, Viewpoint};
use langarm::sentinel::Sentinel;
use langarm::world_sim::load_world;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).map(std::path::PathBuf::from).unwrap_or_else(|| std::env::temp_dir().join("langarm-frame-stack"));
    let (w, _) = load_world(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/worlds/stacking.json"))?;
    let resp = mock_plan("Move the red cube on top of the blue cube", &w, None);
    let ex = execute_response(&w, &resp, &Sentinel::default(), Provenance::MockPlanner);
    let stack = frame_stack(&ex.states, 60, &[Viewpoint::top(), Viewpoint::side()])?;
    let manifest = stack.write(&out, "png")?;
    println!("{} samples at ticks {:?} -> {}", stack.frame_count(), manifest.ticks, out.join(&manifest.composite).display());

    let top = ex.final_state.object("blue").unwrap().center;
    let region = Aabb::from_center(top + Vec3::new(0.0, 0.0, 15.0), Vec3::splat(40.0));
    roi_zoom(&ex.final_state, &Viewpoint::front(), &region, 4.0)?.save(out.join("zoom.png"))?;
    println!("zoom -> {}", out.join("zoom.png").display());
    Ok(())
}
