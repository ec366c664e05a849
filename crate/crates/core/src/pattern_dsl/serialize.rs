use super::{Axis, AxisExpr, Grammar, PatternBlock, PatternError, Result, TrigTerm};
use crate::geometry::fmt_coord;

/// Canonical text for a block: four lines in `X, Y, Z, G` order joined by
/// `\n`, no trailing newline.
///
/// Improved form writes `X: [v]*n + [w]*m`; digit runs are run-length
/// encoded. Baseline form writes unseparated tokens (`Y: -1-1-1`) and fails
/// with [`PatternError::NotRepresentable`] on non-integer steps or trig terms.
pub fn serialize(block: &PatternBlock, grammar: Grammar) -> Result<String> {
    let mut lines = Vec::with_capacity(4);
    for axis in Axis::ALL {
        let expr = block.axis(axis);
        let body = match grammar {
            Grammar::Improved => improved_expr(expr),
            Grammar::Baseline => baseline_expr(axis, expr)?,
        };
        lines.push(if body.is_empty() {
            format!("{}:", axis.label())
        } else {
            format!("{}: {}", axis.label(), body)
        });
    }
    Ok(lines.join("\n"))
}

fn improved_expr(expr: &AxisExpr) -> String {
    let mut terms = Vec::new();
    push_terms(expr, &mut terms);
    if terms.is_empty() {
        "[0]*0".to_string()
    } else {
        terms.join(" + ")
    }
}

fn push_terms(expr: &AxisExpr, out: &mut Vec<String>) {
    match expr {
        AxisExpr::DigitRun(v) => {
            let mut i = 0;
            while i < v.len() {
                let run = v[i..].iter().take_while(|&&d| d == v[i]).count();
                out.push(format!("[{}]*{}", v[i], run));
                i += run;
            }
        }
        AxisExpr::Repeat { value, count } => {
            if *count > 0 {
                out.push(format!("[{}]*{}", fmt_coord(*value), count));
            }
        }
        AxisExpr::Concat(parts) => parts.iter().for_each(|p| push_terms(p, out)),
        AxisExpr::Trig(t) => out.push(trig_text(t)),
    }
}

fn trig_text(t: &TrigTerm) -> String {
    let amp = if t.amplitude == 1.0 {
        String::new()
    } else if t.amplitude == -1.0 {
        "-".to_string()
    } else {
        format!("{}*", fmt_coord(t.amplitude))
    };
    let var = if t.frequency == 1.0 {
        "t".to_string()
    } else {
        format!("{}*t", fmt_coord(t.frequency))
    };
    let phase = if t.phase == 0.0 {
        String::new()
    } else if t.phase > 0.0 {
        format!(" + {}", fmt_coord(t.phase))
    } else {
        format!(" - {}", fmt_coord(-t.phase))
    };
    format!("[{amp}{}({var}{phase}) for t in range({})]", t.func.name(), t.n)
}

fn baseline_expr(axis: Axis, expr: &AxisExpr) -> Result<String> {
    if let Some(t) = find_trig(expr) {
        return Err(PatternError::NotRepresentable(format!("axis {axis}: {}", trig_text(t))));
    }
    let mut out = String::new();
    for v in expr.values() {
        let tok = match v {
            v if v == 1.0 => "1",
            v if v == 0.0 => "0",
            v if v == -1.0 => "-1",
            v => {
                return Err(PatternError::NotRepresentable(format!(
                    "axis {axis}: step {v} is not -1, 0 or 1"
                )))
            }
        };
        out.push_str(tok);
    }
    Ok(out)
}

fn find_trig(expr: &AxisExpr) -> Option<&TrigTerm> {
    match expr {
        AxisExpr::Trig(t) => Some(t),
        AxisExpr::Concat(parts) => parts.iter().find_map(find_trig),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pattern_dsl::{expand, parse_block, ParseMode, TrigFn};

    fn blk(x: AxisExpr, y: AxisExpr, z: AxisExpr, g: AxisExpr) -> PatternBlock {
        PatternBlock::new(x, y, z, g, Grammar::Improved).unwrap()
    }

    #[test]
    fn canonical_repeat() {
        let b = blk(
            AxisExpr::repeat(1.0, 70),
            AxisExpr::repeat(0.0, 70),
            AxisExpr::repeat(0.0, 70),
            AxisExpr::repeat(0.0, 70),
        );
        assert_eq!(
            serialize(&b, Grammar::Improved).unwrap(),
            "X: [1]*70\nY: [0]*70\nZ: [0]*70\nG: [0]*70"
        );
    }

    #[test]
    fn baseline_backward_line() {
        let b = blk(
            AxisExpr::repeat(0.0, 26),
            AxisExpr::repeat(-1.0, 26),
            AxisExpr::repeat(0.0, 26),
            AxisExpr::concat([AxisExpr::repeat(1.0, 25), AxisExpr::repeat(0.0, 1)]),
        );
        let text = serialize(&b, Grammar::Baseline).unwrap();
        let y_line = text.lines().nth(1).unwrap();
        assert_eq!(y_line, format!("Y: {}", "-1".repeat(26)));
        assert_eq!(text.lines().nth(3).unwrap(), format!("G: {}0", "1".repeat(25)));
        let back = parse_block(&text, ParseMode::Auto).unwrap();
        assert_eq!(expand(&back).unwrap(), expand(&b).unwrap());
    }

    #[test]
    fn circle_improved_text() {
        let c = |func| AxisExpr::Trig(TrigTerm { func, amplitude: 1.0, frequency: 1.0, phase: 0.0, n: 360 });
        let b = blk(c(TrigFn::Cos), c(TrigFn::Sin), AxisExpr::repeat(0.0, 360), AxisExpr::repeat(0.0, 360));
        let text = serialize(&b, Grammar::Improved).unwrap();
        assert_eq!(
            text,
            "X: [cos(t) for t in range(360)]\nY: [sin(t) for t in range(360)]\nZ: [0]*360\nG: [0]*360"
        );
        assert!(matches!(serialize(&b, Grammar::Baseline), Err(PatternError::NotRepresentable(_))));
    }

    #[test]
    fn fractional_step_not_baseline() {
        let b = blk(AxisExpr::repeat(0.5, 1), AxisExpr::repeat(0.0, 1), AxisExpr::repeat(0.0, 1), AxisExpr::repeat(0.0, 1));
        assert!(matches!(serialize(&b, Grammar::Baseline), Err(PatternError::NotRepresentable(_))));
        assert_eq!(serialize(&b, Grammar::Improved).unwrap().lines().next(), Some("X: [0.5]*1"));
    }

    #[test]
    fn trig_parameters_round_trip() {
        let t = TrigTerm { func: TrigFn::Sin, amplitude: -0.25, frequency: 2.5, phase: -45.5, n: 12 };
        let b = blk(AxisExpr::Trig(t), AxisExpr::repeat(0.0, 12), AxisExpr::repeat(0.0, 12), AxisExpr::repeat(1.0, 12));
        let text = serialize(&b, Grammar::Improved).unwrap();
        assert!(text.starts_with("X: [-0.25*sin(2.5*t - 45.5) for t in range(12)]"));
        assert_eq!(parse_block(&text, ParseMode::Auto).unwrap().x, AxisExpr::Trig(t));
    }
}
