//! Run a pattern through the simulator and print events and observations.

use langarm::pattern_dsl::{expand, parse_block, ParseMode};
use langarm::world_sim::{execute, load_world, observe, trace_to_jsonl};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args().nth(1).unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/worlds/literal71.json").into());
    let (world, _) = load_world(&path)?;
    println!("start: {}", observe(&world));

    for (name, text) in [
        ("straight", "X: [1]*50\nY: [0]*50\nZ: [0]*50\nG: [0]*50"),
        ("lifted", "X: [0]*10 + [1]*50 + [0]*10 + [0]*1\nY: [0]*71\nZ: [1]*10 + [0]*50 + [-1]*10 + [0]*1\nG: [0]*71"),
    ] {
        let ex = execute(&world, &expand(&parse_block(text, ParseMode::Improved)?)?, None);
        println!("\n{name}: {} collisions, end {}", ex.collision_count(), observe(&ex.final_state));
        for e in &ex.events {
            println!("  tick {:>3}  {}", e.tick, e.detail);
        }
        if name == "lifted" {
            let jsonl = trace_to_jsonl(&ex.trace);
            println!("  first trace record: {}", jsonl.lines().next().unwrap_or(""));
        }
    }
    Ok(())
}
