use std::collections::BTreeMap;

use langarm::prompt_forge::{build, BuildInputs, ImageRef, Level, SectionKind};
use langarm::robot_model::{parse_mermaid, parse_urdf, to_mermaid, ReachEnvelope, ReachVerdict};
use langarm::geometry::Vec3;
use langarm::sentinel::{fifty_char, verbalize, CheckId, Severity, VerbalMode, Verdict, FIFTY_CHAR_LIMIT};
use langarm::world_sim::{ObjectSpec, WorldState};
use proptest::prelude::*;

fn verdict(summary: String, reason: String) -> Verdict {
    Verdict {
        severity: Severity::Reject,
        summary,
        reason,
        detail: String::new(),
        source: CheckId::Placement,
        tick: None,
        template: "fuzz".into(),
        params: BTreeMap::new(),
    }
}

fn chain_urdf(offsets_m: &[f64]) -> String {
    let mut s = String::from("<robot name=\"chain\">\n<link name=\"l0\"/>\n");
    for (i, d) in offsets_m.iter().enumerate() {
        s += &format!(
            "<link name=\"l{n}\"/>\n<joint name=\"j{i}\" type=\"revolute\"><parent link=\"l{i}\"/><child link=\"l{n}\"/>\
             <origin xyz=\"{d} 0 0\"/><axis xyz=\"0 0 1\"/><limit lower=\"-3\" upper=\"3\" effort=\"1\" velocity=\"1\"/></joint>\n",
            n = i + 1
        );
    }
    s + "</robot>\n"
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(2000))]

    #[test]
    fn fifty_char_lines(text in "\\PC{0,300}") {
        let out = fifty_char(&text);
        prop_assert!(out.chars().count() <= FIFTY_CHAR_LIMIT);
        prop_assert!(!out.contains('\n'));
    }

    #[test]
    fn verbalized_pairs_fit(s in "[a-zA-Z ,.()]{0,200}", r in "\\PC{0,200}") {
        let text = verbalize(&verdict(s, r), VerbalMode::FiftyChar);
        let lines: Vec<&str> = text.split('\n').collect();
        prop_assert_eq!(lines.len(), 2);
        prop_assert!(lines.iter().all(|l| l.chars().count() <= FIFTY_CHAR_LIMIT));
    }

    /// Short word sequences survive unchanged apart from whitespace collapse.
    #[test]
    fn fifty_char_keeps_short_text(words in prop::collection::vec("[a-z]{1,8}", 0..5)) {
        let text = words.join("   ");
        prop_assert_eq!(fifty_char(&text), words.join(" "));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(200))]

    #[test]
    fn mermaid_parse_back(n in 1usize..12) {
        let model = parse_urdf(&chain_urdf(&vec![0.1; n])).unwrap();
        let (nodes, edges) = parse_mermaid(&to_mermaid(&model));
        prop_assert_eq!(nodes.len(), n + 1);
        prop_assert_eq!(edges.len(), n);
        for (i, e) in edges.iter().enumerate() {
            prop_assert_eq!(&e.parent, &format!("l{i}"));
            prop_assert_eq!(&e.child, &format!("l{}", i + 1));
        }
    }

    /// Offsets in meters become millimeters, and scaling every offset scales
    /// the reach radius by the same factor.
    #[test]
    fn reach_scales(offsets in prop::collection::vec(0.01f64..0.5, 1..8), k in 0.5f64..4.0) {
        let r1 = ReachEnvelope::from_model(&parse_urdf(&chain_urdf(&offsets)).unwrap(), Vec3::ZERO, 10.0).max_radius;
        let scaled: Vec<f64> = offsets.iter().map(|d| d * k).collect();
        let r2 = ReachEnvelope::from_model(&parse_urdf(&chain_urdf(&scaled)).unwrap(), Vec3::ZERO, 10.0).max_radius;
        let sum_mm: f64 = offsets.iter().sum::<f64>() * 1000.0;
        prop_assert!((r1 - sum_mm).abs() < 1e-6 * sum_mm.max(1.0));
        prop_assert!((r2 - k * r1).abs() < 1e-6 * r2.max(1.0));
        let env = ReachEnvelope::from_model(&parse_urdf(&chain_urdf(&offsets)).unwrap(), Vec3::ZERO, 10.0);
        let out = env.check(Vec3::new(r1 + 100.0, 0.0, 0.0));
        prop_assert!(matches!(out, ReachVerdict::OutOfReach(d) if (d - 100.0).abs() < 1e-6));
    }

    /// Each level's sections reappear verbatim in every higher level.
    #[test]
    fn prompt_levels_nest(task in "[A-Za-z][A-Za-z ]{0,40}", x in -200.0f64..200.0) {
        let w = WorldState::new(
            Vec3::ZERO,
            vec![
                ObjectSpec::cube("red", "red", Vec3::new(x, 100.0, 15.0), 15.0),
                ObjectSpec::cube("blue", "blue", Vec3::new(-x, 150.0, 15.0), 15.0),
            ],
            vec![],
        )
        .unwrap();
        let robot = parse_urdf(&chain_urdf(&[0.3, 0.2])).unwrap();
        let images = [ImageRef::labeled("top.png", "top view")];
        let inputs = BuildInputs { world: Some(&w), images: &images, robot: Some(&robot), ..BuildInputs::default() };
        let bundles: Vec<_> = Level::ALL.iter().map(|&l| build(l, &task, &inputs).unwrap()).collect();
        for pair in bundles.windows(2) {
            for s in &pair[0].sections {
                let up = pair[1].section(s.kind);
                prop_assert!(up.is_some_and(|u| u.text == s.text), "{:?} missing at {}", s.kind, pair[1].level);
            }
            prop_assert!(pair[1].sections.len() > pair[0].sections.len());
        }
        prop_assert!(bundles[3].section(SectionKind::Task).is_some());
    }
}
