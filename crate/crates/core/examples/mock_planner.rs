//! Ask the deterministic planner for patterns, refusals and clarifications.

use langarm::conductor::execute_response;
use langarm::pattern_dsl::Provenance;
use langarm::planner_gateway::mock_plan;
use langarm::sentinel::Sentinel;
use langarm::world_sim::load_world;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let fixtures = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/worlds");
    let cases = [
        ("obstacle", "Pick the red cube while avoiding the obstacle"),
        ("stacking", "Move the red cube on top of the blue cube"),
        ("sorting", "Move the cubes to the zones"),
        ("attributes", "Move the red cube to the yellow zone"),
        ("zone", "Move left"),
    ];
    for (world, command) in cases {
        let (w, _) = load_world(format!("{fixtures}/{world}.json"))?;
        let resp = mock_plan(command, &w, None);
        println!("== {command}  [{}]", resp.classified.kind());
        let first: String = resp.raw_text.lines().take(6).collect::<Vec<_>>().join("\n");
        println!("{first}");
        let ex = execute_response(&w, &resp, &Sentinel::default(), Provenance::MockPlanner);
        println!("-> {} after {} steps, {} collisions\n", ex.outcome, ex.steps, ex.collision_count());
    }
    Ok(())
}
