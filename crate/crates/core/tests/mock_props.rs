mod common;

use langarm::conductor::execute_response;
use langarm::geometry::Vec3;
use langarm::pattern_dsl::Provenance;
use langarm::planner_gateway::{mock_plan, Classification};
use langarm::sentinel::Sentinel;
use langarm::world_sim::{ObjectSpec, WorldState};
use proptest::prelude::*;

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    /// Every mock plan around a randomly placed wall grasps the cube without
    /// touching the wall.
    #[test]
    fn obstacle_plans_are_sound(
        cube_x in -60.0f64..60.0,
        cube_y in 150.0f64..260.0,
        wall_x in -50.0f64..50.0,
        wall_w in 20.0f64..80.0,
        wall_y in 50.0f64..100.0,
        wall_h in 20.0f64..90.0,
    ) {
        let w = common::obstacle_world(cube_x, cube_y, wall_x, wall_w, wall_y, wall_h);
        let resp = mock_plan("Pick the red cube while avoiding the obstacle", &w, None);
        prop_assert!(matches!(resp.classified, Classification::Pattern { .. }), "{}", resp.raw_text);
        let ex = execute_response(&w, &resp, &Sentinel::default(), Provenance::MockPlanner);
        prop_assert_eq!(ex.outcome.as_str(), "executed");
        prop_assert_eq!(ex.collision_count(), 0);
        let f = &ex.final_state;
        prop_assert_eq!(f.grasped.as_deref(), Some("red"));
        prop_assert!(f.ee_pos.distance(f.object("red").unwrap().center) <= 1.0);
    }

    /// The mock refuses a placement exactly when the sentinel rejects it, and
    /// executes accepted placements to the letter.
    #[test]
    fn refusals_follow_the_sentinel(tx in -40i32..100, ty in -40i32..80) {
        let w = WorldState::new(
            Vec3::new(0.0, 0.0, 120.0),
            vec![
                ObjectSpec::cube("red", "red", Vec3::new(-100.0, 0.0, 15.0), 15.0),
                ObjectSpec::cube("blue", "blue", Vec3::new(50.0, 20.0, 15.0), 15.0),
            ],
            vec![],
        )
        .unwrap();
        let target = Vec3::new(tx as f64, ty as f64, 15.0);
        let sentinel = Sentinel::default();
        let verdict = sentinel.check_placement(&w, "red", target).unwrap();
        let resp = mock_plan(&format!("Place the red cube at [{tx}, {ty}, 15]"), &w, None);
        match &resp.classified {
            Classification::Refusal { .. } => prop_assert!(verdict.is_reject(), "{}", resp.raw_text),
            Classification::Pattern { .. } => {
                prop_assert!(!verdict.is_reject());
                let ex = execute_response(&w, &resp, &sentinel, Provenance::MockPlanner);
                prop_assert_eq!(ex.collision_count(), 0);
                prop_assert!(ex.final_state.object("red").unwrap().center.distance(target) <= 1.0);
            }
            other => prop_assert!(false, "unexpected {other:?}"),
        }
    }
}
