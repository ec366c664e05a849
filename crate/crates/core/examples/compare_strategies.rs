//! Baseline vs improved grammar over jittered runs, printed next to the
//! reference figures.

use langarm::conductor::{compare_strategies, CompareOptions, PhraseSet, RunEnv, TaskSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = env!("CARGO_MANIFEST_DIR");
    let runs = std::env::args().nth(1).and_then(|s| s.parse().ok()).unwrap_or(10);
    let specs = ["grasping", "obstacle"]
        .iter()
        .map(|t| TaskSpec::load(format!("{root}/fixtures/tasks/{t}.json")))
        .collect::<Result<Vec<_>, _>>()?;
    let opts = CompareOptions { runs, ..CompareOptions::default() };
    let cmp = compare_strategies(&specs, &PhraseSet::builtin(), &opts, &RunEnv::default())?;
    print!("{}", cmp.render_table());
    println!("\n{}", cmp.to_csv()?);
    Ok(())
}
