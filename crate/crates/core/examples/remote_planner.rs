//! Send a level-B prompt to an OpenAI-compatible endpoint.
//!
//! Needs `PLANNER_ENDPOINT`, `PLANNER_MODEL` and the key in `PLANNER_API_KEY`;
//! prints the request body and exits otherwise.

use langarm::planner_gateway::{complete, ChatRequest, Expect, ProviderConfig};
use langarm::prompt_forge::{build, BuildInputs, Level};
use langarm::world_sim::load_world;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (world, _) = load_world(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/worlds/grasping.json"))?;
    let inputs = BuildInputs { world: Some(&world), ..BuildInputs::default() };
    let bundle = build(Level::B, "Pick the red cube", &inputs)?;
    let (Ok(endpoint), Ok(model)) = (std::env::var("PLANNER_ENDPOINT"), std::env::var("PLANNER_MODEL")) else {
        let req = ChatRequest { model: "<model>".into(), text: bundle.rendered.clone(), images: Vec::new() };
        println!("{}", serde_json::to_string_pretty(&req.to_json())?.chars().take(600).collect::<String>());
        println!("…\nset PLANNER_ENDPOINT, PLANNER_MODEL and PLANNER_API_KEY to send it");
        return Ok(());
    };
    let cfg = ProviderConfig::new(&endpoint, &model, "PLANNER_API_KEY");
    let (resp, latency) = complete(&cfg, &bundle, Expect::Pattern)?;
    println!("{} in {latency:.2} s\n{}", resp.classified.kind(), resp.raw_text);
    Ok(())
}
