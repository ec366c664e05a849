//! Re-score the bundled transcript corpus and check it against the stored
//! metrics.

use langarm::conductor::{compare_strategies, CompareOptions, Comparison, PhraseSet, PlannerSpec, RunEnv, TaskSpec};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let root = env!("CARGO_MANIFEST_DIR");
    let specs = ["grasping", "obstacle"]
        .iter()
        .map(|t| TaskSpec::load(format!("{root}/fixtures/tasks/{t}.json")))
        .collect::<Result<Vec<_>, _>>()?;
    let corpus = format!("{root}/fixtures/corpus/transcripts.jsonl");
    let opts = CompareOptions { planner: Some(PlannerSpec::Replay(corpus.into())), ..CompareOptions::default() };
    let cmp = compare_strategies(&specs, &PhraseSet::builtin(), &opts, &RunEnv::default())?;
    let stored = Comparison::read_csv(&std::fs::read_to_string(format!("{root}/fixtures/corpus/metrics.csv"))?)?;
    print!("{}", cmp.render_table());
    println!("matches stored metrics: {}", stored == cmp.rows);
    Ok(())
}
