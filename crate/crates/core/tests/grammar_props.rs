use langarm::pattern_dsl::{
    expand, lex_digit_run, net_displacement, parse_block, serialize, AxisExpr, Grammar, ParseMode, PatternBlock,
    PatternError, TrigFn, TrigTerm,
};
use proptest::prelude::*;

fn segment(len: usize, integer: bool) -> BoxedStrategy<AxisExpr> {
    let int_value = prop_oneof![Just(-1.0), Just(0.0), Just(1.0)];
    if integer {
        prop_oneof![
            (int_value, Just(len)).prop_map(|(v, n)| AxisExpr::repeat(v, n)),
            prop::collection::vec(-1i8..=1, len).prop_map(AxisExpr::DigitRun),
        ]
        .boxed()
    } else {
        prop_oneof![
            (int_value, Just(len)).prop_map(|(v, n)| AxisExpr::repeat(v, n)),
            (-1.0f64..=1.0, Just(len)).prop_map(|(v, n)| AxisExpr::repeat(v, n)),
            (
                prop_oneof![Just(TrigFn::Sin), Just(TrigFn::Cos)],
                -1.0f64..=1.0,
                -10i32..=10,
                -180i32..=180,
                Just(len)
            )
                .prop_map(|(func, amplitude, f, p, n)| AxisExpr::Trig(TrigTerm {
                    func,
                    amplitude,
                    frequency: f as f64,
                    phase: p as f64,
                    n
                })),
        ]
        .boxed()
    }
}

fn axis(lens: Vec<usize>, integer: bool) -> BoxedStrategy<AxisExpr> {
    lens.into_iter()
        .map(|n| segment(n, integer))
        .collect::<Vec<_>>()
        .prop_map(AxisExpr::concat)
        .boxed()
}

fn gripper(lens: Vec<usize>) -> BoxedStrategy<AxisExpr> {
    lens.into_iter()
        .map(|n| prop_oneof![Just(0.0), Just(1.0)].prop_map(move |v| AxisExpr::repeat(v, n)))
        .collect::<Vec<_>>()
        .prop_map(AxisExpr::concat)
        .boxed()
}

fn block(integer: bool) -> impl Strategy<Value = PatternBlock> {
    prop::collection::vec(1usize..40, 1..5).prop_flat_map(move |lens| {
        let total: usize = lens.iter().sum();
        // each axis splits the same total differently
        let split = move |k: usize| {
            let mut parts = Vec::new();
            let mut left = total;
            let mut i = 0;
            while left > 0 {
                let n = ((i * 7 + k * 3) % 13 + 1).min(left);
                parts.push(n);
                left -= n;
                i += 1;
            }
            parts
        };
        let grammar = if integer { Grammar::Baseline } else { Grammar::Improved };
        (axis(split(0), integer), axis(split(1), integer), axis(split(2), integer), gripper(split(3)))
            .prop_map(move |(x, y, z, g)| PatternBlock::new(x, y, z, g, grammar).expect("equal lengths"))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(1000))]

    #[test]
    fn improved_round_trip(b in block(false)) {
        let text = serialize(&b, Grammar::Improved).unwrap();
        let back = parse_block(&text, ParseMode::Improved).unwrap();
        prop_assert_eq!(expand(&back).unwrap().steps, expand(&b).unwrap().steps);
    }

    #[test]
    fn baseline_round_trip(b in block(true)) {
        let text = serialize(&b, Grammar::Baseline).unwrap();
        let back = parse_block(&text, ParseMode::Baseline).unwrap();
        prop_assert_eq!(&expand(&back).unwrap().steps, &expand(&b).unwrap().steps);
        // the same block also survives the improved grammar
        let text = serialize(&b, Grammar::Improved).unwrap();
        let back = parse_block(&text, ParseMode::Auto).unwrap();
        prop_assert_eq!(expand(&back).unwrap().steps, expand(&b).unwrap().steps);
    }

    #[test]
    fn fractional_blocks_are_not_baseline(b in block(false)) {
        match serialize(&b, Grammar::Baseline) {
            Ok(_) => prop_assert!(b.is_strict_integer()),
            Err(e) => prop_assert!(matches!(e, PatternError::NotRepresentable(_))),
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(10_000))]

    #[test]
    fn digit_run_tokens(tokens in prop::collection::vec((-1i8..=1, prop_oneof![Just(""), Just(" "), Just(",")]), 0..60)) {
        let text: String = tokens.iter().map(|(d, sep)| format!("{d}{sep}")).collect();
        let want: Vec<i8> = tokens.iter().map(|(d, _)| *d).collect();
        prop_assert_eq!(lex_digit_run(&text).unwrap(), want);
    }

    #[test]
    fn digit_run_garbage(text in "[-01 ,2a+*\\[\\]]{0,40}") {
        match lex_digit_run(&text) {
            Ok(v) => {
                prop_assert!(v.iter().all(|d| (-1..=1).contains(d)));
                let digits = text.chars().filter(|c| matches!(c, '0' | '1')).count();
                prop_assert_eq!(v.len(), digits);
            }
            Err(PatternError::Lex { position }) => {
                let b = text.as_bytes()[position];
                prop_assert!(!matches!(b, b'0' | b'1' | b' ' | b','));
            }
            Err(e) => prop_assert!(false, "unexpected error {e}"),
        }
    }
}

#[test]
fn circle_block_closes() {
    let text = "X: [cos(t) for t in range(360)]\nY: [sin(t) for t in range(360)]\nZ: [0]*360\nG: [0]*360";
    let t = expand(&parse_block(text, ParseMode::Improved).unwrap()).unwrap();
    assert_eq!(t.len(), 360);
    // independent closed form: sum over a full period of unit phasors
    let (sx, sy) = (0..360).fold((0.0f64, 0.0f64), |(a, b), k| {
        let r = (k as f64).to_radians();
        (a + r.cos(), b + r.sin())
    });
    let net = net_displacement(&t);
    assert!((net.x - sx).abs() < 1e-12 && (net.y - sy).abs() < 1e-12);
    assert!(net.norm() <= 1e-9, "{net}");
}
