//! Drive a session in-process, then optionally serve it over HTTP.
//!
//! `cargo run --example session_server -- serve 127.0.0.1:8080`

use std::sync::Arc;

use langarm::conductor::{serve, CreateSession, PlannerKind, SessionManager, Strategy};
use langarm::prompt_forge::Level;
use langarm::world_sim::{load_world, WorldDef};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (world, _) = load_world(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/worlds/attributes.json"))?;
    let manager = Arc::new(SessionManager::new(None, std::env::temp_dir().join("langarm-session-frames")));
    let id = manager
        .create(CreateSession {
            world: WorldDef::from_state(&world),
            planner: PlannerKind::Mock,
            robot_urdf: None,
            level: Level::B,
            strategy: Strategy::Improved,
        })?
        .id;
    for cmd in ["Move up 20mm", "Move the red cube to the yellow zone", "Pick the blue cube"] {
        let out = manager.post_command(&id, cmd)?;
        println!("{cmd:<40} {:<10} seq {}..{}", out.status, out.first_seq, out.last_seq);
        for line in &out.verbalized {
            println!("    {}", line.replace('\n', " | "));
        }
    }
    let h = manager.session(&id)?;
    for ev in h.lock().unwrap().feed.iter() {
        println!("#{:<3} {:<17} tick {:?}", ev.seq, ev.kind, ev.tick);
    }

    let mut args = std::env::args().skip(1);
    if args.next().as_deref() == Some("serve") {
        let addr = args.next().unwrap_or_else(|| "127.0.0.1:8080".into());
        println!("serving {addr}");
        tokio::runtime::Runtime::new()?.block_on(serve(manager, &addr))?;
    }
    Ok(())
}
