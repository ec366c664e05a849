//! Parse a control pattern, expand it and re-serialize in both grammars.

use langarm::pattern_dsl::{expand, net_displacement, parse_block, serialize, Grammar, ParseMode};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let text = "X: [0]*10 + [1]*50 + [0]*10 + [0]*1\nY: [0]*71\nZ: [1]*10 + [0]*50 + [-1]*10 + [0]*1\nG: [0]*71";
    let block = parse_block(text, ParseMode::Auto)?;
    let traj = expand(&block)?;
    println!("{} steps, net displacement {}", traj.len(), net_displacement(&traj));
    println!("\nimproved:\n{}", serialize(&block, Grammar::Improved)?);
    let baseline = serialize(&block, Grammar::Baseline)?;
    println!("\nbaseline (first 80 chars per line):");
    for line in baseline.lines() {
        println!("{}", line.chars().take(80).collect::<String>());
    }

    let circle = parse_block(
        "X: [cos(t) for t in range(360)]\nY: [sin(t) for t in range(360)]\nZ: [0]*360\nG: [0]*360",
        ParseMode::Improved,
    )?;
    let t = expand(&circle)?;
    println!("\ncircle: {} steps, |net| = {:.2e} mm", t.len(), net_displacement(&t).norm());
    match serialize(&circle, Grammar::Baseline) {
        Ok(_) => println!("circle fits the baseline grammar"),
        Err(e) => println!("circle in baseline grammar: {e}"),
    }
    Ok(())
}
