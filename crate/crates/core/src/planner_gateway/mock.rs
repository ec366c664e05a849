use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};

use super::{parse_response, Classification, Expect, PlannerResponse};
use crate::geometry::Vec3;
use crate::pattern_dsl::{
    expand, serialize, AxisExpr, Grammar, PatternBlock, Provenance, StepDelta, Trajectory, TrigFn, TrigTerm,
};
use crate::robot_model::RobotModel;
use crate::sentinel::{Sentinel, Verdict, FIFTY_CHAR_LIMIT};
use crate::world_sim::{step, Color, EventKind, Gripper, ObjectSpec, WorldState};

static COORDS: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(r"\[\s*(-?\d+(?:\.\d+)?)\s*,\s*(-?\d+(?:\.\d+)?)\s*,\s*(-?\d+(?:\.\d+)?)\s*\]").expect("static regex")
});
static DIRECTED: LazyLock<Regex> = LazyLock::new(|| {
    Regex::new(
        r"\b(left|right|forwards?|backwards?|back|up|upwards|down|downwards)\b(?:\s+(?:for|by))?\s*(\d+(?:\.\d+)?)\s*(mm|millimet(?:er|re)s?|cm|centimet(?:er|re)s?)?",
    )
    .expect("static regex")
});
static DIRECTION: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\b(left|right|forwards?|backwards?|back|up|upwards|down|downwards)\b").expect("static regex"));
static NOUN: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"\b([a-z]+)\s+(?:cube|block|box|object)s?\b").expect("static regex"));
static ZONE_AFTER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\bzone\s+([a-z0-9_-]+)").expect("static regex"));
static ZONE_BEFORE: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"([a-z0-9_-]+)\s+zone\b").expect("static regex"));

/// What the mock planner understood.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "intent", rename_all = "snake_case")]
pub enum Intent {
    Move { delta: Vec3, grip: Option<u8> },
    MoveTo { target: Vec3 },
    Pick { object: String },
    Approach { object: String },
    Release,
    PlaceAt { object: String, target: Vec3 },
    PlaceInZone { object: String, zone: String, target: Vec3 },
    Stack { top: String, bottom: String, target: Vec3 },
    Circle,
    Sort { assignment: Vec<(String, String)> },
    Unsupported,
}

/// Mock reply plus the parsed intent and the verdicts behind a refusal.
#[derive(Debug, Clone, PartialEq)]
pub struct MockPlan {
    pub response: PlannerResponse,
    pub intent: Intent,
    pub verdicts: Vec<Verdict>,
}

/// Deterministic command → pattern oracle.
#[derive(Debug, Clone)]
pub struct MockPlanner {
    pub sentinel: Sentinel,
    pub grammar: Grammar,
    /// Vertical clearance kept above obstacles when lifting over them.
    pub clearance_mm: f64,
}

impl Default for MockPlanner {
    fn default() -> Self {
        MockPlanner { sentinel: Sentinel::default(), grammar: Grammar::Improved, clearance_mm: 5.0 }
    }
}

/// Plans with defaults; a robot adds the reach check with its base at the
/// world origin.
pub fn mock_plan(command: &str, world: &WorldState, robot: Option<&RobotModel>) -> PlannerResponse {
    let mut p = MockPlanner::default();
    if let Some(r) = robot {
        p.sentinel = p.sentinel.with_robot(r, Vec3::ZERO);
    }
    p.plan(command, world).response
}

enum Outcome {
    Blocks(Vec<PatternBlock>, Option<String>),
    Refuse(Verdict),
    Ask(String),
}

impl MockPlanner {
    pub fn with_grammar(mut self, grammar: Grammar) -> Self {
        self.grammar = grammar;
        self
    }

    pub fn plan(&self, command: &str, world: &WorldState) -> MockPlan {
        let text = command_text(command);
        let (intent, outcome) = self.interpret(&text, world);
        let mut verdicts = Vec::new();
        let outcome = match outcome {
            Outcome::Blocks(blocks, preface) => {
                let steps: Vec<StepDelta> = blocks
                    .iter()
                    .flat_map(|b| expand(b).map(|t| t.steps).unwrap_or_default())
                    .collect();
                let traj = Trajectory::new(steps, Provenance::MockPlanner);
                let checks = self.sentinel.check_trajectory(world, &traj);
                match checks.iter().find(|v| v.is_reject()) {
                    Some(r) => Outcome::Refuse(r.clone()),
                    None => {
                        verdicts = checks;
                        Outcome::Blocks(blocks, preface)
                    }
                }
            }
            o => o,
        };
        let raw = match &outcome {
            Outcome::Blocks(blocks, preface) => {
                let mut raw = String::new();
                if let Some(p) = preface {
                    raw.push_str(p);
                    raw.push('\n');
                }
                raw.push_str("Control pattern:\n");
                let texts: Vec<String> = blocks
                    .iter()
                    .map(|b| serialize(b, self.grammar).expect("planner emits representable blocks"))
                    .collect();
                raw.push_str(&texts.join("\n\n"));
                raw
            }
            Outcome::Refuse(v) => {
                verdicts = vec![v.clone()];
                let mut detail = v.detail.trim().to_string();
                if !detail.ends_with('.') {
                    detail.push('.');
                }
                format!("Refused: {detail} I cannot provide a control pattern for this command.")
            }
            Outcome::Ask(q) => q.clone(),
        };
        let mut response = parse_response(&raw, Expect::Pattern, FIFTY_CHAR_LIMIT);
        if matches!(response.classified, Classification::Pattern { .. }) {
            response.warnings.extend(verdicts.iter().map(|v| format!("{}: {}", v.severity.name(), v.summary)));
        }
        MockPlan { response, intent, verdicts }
    }

    fn interpret(&self, text: &str, world: &WorldState) -> (Intent, Outcome) {
        let has = |w: &str| text.contains(w);
        if has("cubes") && has("zones") {
            return self.sort(world);
        }
        if has("circle") {
            return (Intent::Circle, Outcome::Blocks(vec![self.circle(world)], None));
        }
        if has("on top of") || has("stack") {
            return self.stack(text, world);
        }
        if Regex::new(r"\bzone\b").expect("static regex").is_match(text) {
            return self.place_in_zone(text, world);
        }
        if let Some(target) = coords(text) {
            if ["place", "put", "release", "drop", "set"].iter().any(|w| has(w)) {
                return self.place_at(text, world, target);
            }
            let mut m = Motion::new(self, world);
            m.travel(target, &[], None);
            return (Intent::MoveTo { target }, m.finish());
        }
        let moves: Vec<(Vec3, f64)> = DIRECTED
            .captures_iter(text)
            .map(|c| {
                let unit = match c.get(3).map(|u| u.as_str()) {
                    Some(u) if u.starts_with('c') => 10.0,
                    _ => 1.0,
                };
                (direction(&c[1]), c[2].parse::<f64>().unwrap_or(0.0) * unit)
            })
            .collect();
        if !moves.is_empty() {
            let grip = if has("pick") || has("grasp") || has("grab") {
                Some(1)
            } else if has("release") || has("drop") || has("let go") {
                Some(0)
            } else {
                None
            };
            let mut m = Motion::new(self, world);
            let n = moves.len();
            let mut total = Vec3::ZERO;
            for (i, (dir, dist)) in moves.into_iter().enumerate() {
                let d = dir * dist;
                total += d;
                let target = m.world.ee_pos + d;
                m.straight(target, if i + 1 == n { grip } else { None });
            }
            return (Intent::Move { delta: total, grip }, m.finish());
        }
        let pick = has("pick") || has("grasp") || has("grab");
        if pick || has("towards") || has("approach") || has("reach") {
            let obj = match select_object(text, world) {
                Ok(o) => o,
                Err(q) => return (Intent::Unsupported, Outcome::Ask(q)),
            };
            let id = obj.id.clone();
            if pick {
                if let Some(held) = world.carried() {
                    let q = if held.id == id {
                        format!("The {} is already in the gripper. Where should I put it?", held.display_name())
                    } else {
                        format!("I am holding the {}. Should I release it first?", held.display_name())
                    };
                    return (Intent::Unsupported, Outcome::Ask(q));
                }
            }
            let mut m = Motion::new(self, world);
            if pick {
                m.travel(obj.center, &[&id], Some(1));
                return (Intent::Pick { object: id }, m.finish());
            }
            m.travel(obj.center, &[&id], None);
            return (Intent::Approach { object: id }, m.finish());
        }
        if (has("release") || has("drop") || has("let go") || has("open")) && world.grasped.is_some() {
            let mut m = Motion::new(self, world);
            m.segment(&[], Some(0));
            return (Intent::Release, m.finish());
        }
        if let Some(c) = DIRECTION.captures(text) {
            return (
                Intent::Unsupported,
                Outcome::Ask(format!("How far should I move {}? Please specify a distance in millimeters.", &c[1])),
            );
        }
        (
            Intent::Unsupported,
            Outcome::Ask(
                "Could you rephrase the command? I can move by a distance, pick, place, stack, sort into zones or move in a circle."
                    .into(),
            ),
        )
    }

    fn circle(&self, world: &WorldState) -> PatternBlock {
        let g = if world.gripper == Gripper::Closed { 1.0 } else { 0.0 };
        let term = |func| TrigTerm { func, amplitude: 1.0, frequency: 1.0, phase: 0.0, n: 360 };
        let x = AxisExpr::Trig(term(TrigFn::Cos));
        let y = AxisExpr::Trig(term(TrigFn::Sin));
        match self.grammar {
            Grammar::Improved => PatternBlock::new(x, y, AxisExpr::repeat(0.0, 360), AxisExpr::repeat(g, 360), Grammar::Improved)
                .expect("valid circle"),
            Grammar::Baseline => {
                let rx = rasterize(&x.values());
                let ry = rasterize(&y.values());
                PatternBlock::new(
                    AxisExpr::DigitRun(rx),
                    AxisExpr::DigitRun(ry),
                    AxisExpr::DigitRun(vec![0; 360]),
                    AxisExpr::DigitRun(vec![g as i8; 360]),
                    Grammar::Baseline,
                )
                .expect("valid circle")
            }
        }
    }

    fn place_at(&self, text: &str, world: &WorldState, target: Vec3) -> (Intent, Outcome) {
        let obj = match held_or_named(text, world) {
            Ok(o) => o,
            Err(q) => return (Intent::Unsupported, Outcome::Ask(q)),
        };
        let id = obj.id.clone();
        let intent = Intent::PlaceAt { object: id.clone(), target };
        self.carry(world, &id, target, intent, self.sentinel.check_placement(world, &id, target))
    }

    fn place_in_zone(&self, text: &str, world: &WorldState) -> (Intent, Outcome) {
        let zone = ZONE_AFTER
            .captures_iter(text)
            .chain(ZONE_BEFORE.captures_iter(text))
            .find_map(|c| world.zone_by_name(&c[1]));
        let Some(zone) = zone else {
            let names: Vec<&str> = world.zones.iter().map(|z| z.label.as_str()).collect();
            return (
                Intent::Unsupported,
                Outcome::Ask(format!("Which zone do you mean? Please specify one of: {}.", names.join(", "))),
            );
        };
        let obj = match held_or_named(text, world) {
            Ok(o) => o,
            Err(q) => return (Intent::Unsupported, Outcome::Ask(q)),
        };
        let id = obj.id.clone();
        let check = self.sentinel.check_zone_move(world, &id, &zone.id);
        if let Ok(v) = &check {
            if v.is_reject() {
                let intent = Intent::PlaceInZone { object: id, zone: zone.id.clone(), target: zone.aabb.center() };
                return (intent, Outcome::Refuse(v.clone()));
            }
        }
        let Some(target) = free_spot_in_zone(self, world, obj, zone) else {
            return (
                Intent::Unsupported,
                Outcome::Ask(format!("Zone {} has no free spot for the {}. Where should I put it?", zone.label, obj.display_name())),
            );
        };
        let intent = Intent::PlaceInZone { object: id.clone(), zone: zone.id.clone(), target };
        self.carry(world, &id, target, intent, check)
    }

    fn stack(&self, text: &str, world: &WorldState) -> (Intent, Outcome) {
        let named = named_objects(text, world);
        let (top, bottom) = match named.as_slice() {
            [a, b, ..] if a.id != b.id => (*a, *b),
            _ => {
                return (
                    Intent::Unsupported,
                    Outcome::Ask("Which cube should go on top of which? Please name both cubes.".into()),
                )
            }
        };
        let target = bottom.center + Vec3::new(0.0, 0.0, bottom.half_extents.z + top.half_extents.z);
        let intent = Intent::Stack { top: top.id.clone(), bottom: bottom.id.clone(), target };
        let check = self.sentinel.check_placement(world, &top.id, target);
        self.carry(world, &top.id.clone(), target, intent, check)
    }

    /// Pick `id` if needed, carry it so its center lands on `target`, release.
    fn carry(
        &self,
        world: &WorldState,
        id: &str,
        target: Vec3,
        intent: Intent,
        check: Result<Verdict, crate::sentinel::SentinelError>,
    ) -> (Intent, Outcome) {
        match check {
            Ok(v) if v.is_reject() => return (intent, Outcome::Refuse(v)),
            Ok(_) => {}
            Err(e) => return (intent, Outcome::Ask(format!("Which object do you mean? {e}."))),
        }
        let mut m = Motion::new(self, world);
        if let Err(q) = m.pick(id) {
            return (intent, Outcome::Ask(q));
        }
        m.place(target);
        (intent, m.finish())
    }

    fn sort(&self, world: &WorldState) -> (Intent, Outcome) {
        let movable: Vec<ObjectSpec> = world.objects.iter().filter(|o| o.graspable && !o.fixed).cloned().collect();
        let outcome = self.sentinel.sort_assignment(&movable, &world.zones);
        if let Some(v) = outcome.verdicts.iter().find(|v| v.template == "unassignable") {
            return (Intent::Sort { assignment: Vec::new() }, Outcome::Refuse(v.clone()));
        }
        let assignment: Vec<(String, String)> = movable
            .iter()
            .filter_map(|o| outcome.assignment.get(&o.id).map(|z| (o.id.clone(), z.clone())))
            .collect();
        let mut preface: Vec<String> = outcome.verdicts.iter().map(|v| v.detail.clone()).collect();
        let mut blocks = Vec::new();
        let mut w = world.clone();
        for (obj_id, zone_id) in &assignment {
            let (Some(obj), Some(zone)) = (w.object(obj_id), w.zone(zone_id)) else { continue };
            preface.push(format!("Moving the {} to zone {}.", obj.display_name(), zone.label));
            let Some(target) = free_spot_in_zone(self, &w, obj, zone) else {
                let q = format!("Zone {} has no free spot for the {}. Where should I put it?", zone.label, obj.display_name());
                return (Intent::Sort { assignment }, Outcome::Ask(q));
            };
            let mut m = Motion::new(self, &w);
            if let Err(q) = m.pick(obj_id) {
                return (Intent::Sort { assignment }, Outcome::Ask(q));
            }
            m.place(target);
            w = m.world.clone();
            match m.finish() {
                Outcome::Blocks(mut b, _) => blocks.append(&mut b),
                other => return (Intent::Sort { assignment }, other),
            }
        }
        if blocks.is_empty() {
            return (Intent::Sort { assignment }, Outcome::Ask("Which cubes should go to which zones?".into()));
        }
        (Intent::Sort { assignment }, Outcome::Blocks(blocks, Some(preface.join("\n"))))
    }
}

/// Lowercased command without any appended observation list.
fn command_text(command: &str) -> String {
    let lower = command.to_lowercase();
    let cut = ["with observation", "observation", "object positions", "<observation"]
        .iter()
        .filter_map(|m| lower.find(m))
        .min()
        .unwrap_or(lower.len());
    lower[..cut].trim().to_string()
}

fn coords(text: &str) -> Option<Vec3> {
    let c = COORDS.captures(text)?;
    let v = |i: usize| c[i].parse::<f64>().ok();
    Some(Vec3::new(v(1)?, v(2)?, v(3)?))
}

fn direction(word: &str) -> Vec3 {
    match word {
        "left" => Vec3::new(-1.0, 0.0, 0.0),
        "right" => Vec3::new(1.0, 0.0, 0.0),
        "forward" | "forwards" => Vec3::new(0.0, 1.0, 0.0),
        "backward" | "backwards" | "back" => Vec3::new(0.0, -1.0, 0.0),
        "up" | "upwards" => Vec3::new(0.0, 0.0, 1.0),
        _ => Vec3::new(0.0, 0.0, -1.0),
    }
}

/// Objects named by color in order of mention.
fn named_objects<'w>(text: &str, world: &'w WorldState) -> Vec<&'w ObjectSpec> {
    NOUN.captures_iter(text)
        .filter_map(|c| world.object_by_color(&Color::from(&c[1])))
        .filter(|o| !o.fixed)
        .collect()
}

fn unknown_color(text: &str, world: &WorldState) -> Option<String> {
    const IGNORE: [&str; 6] = ["the", "a", "grasped", "held", "that", "this"];
    NOUN.captures_iter(text)
        .map(|c| c[1].to_string())
        .find(|w| !IGNORE.contains(&w.as_str()) && world.object_by_color(&Color::from(w.as_str())).is_none() && is_color_word(w))
}

fn is_color_word(w: &str) -> bool {
    ["red", "blue", "green", "yellow", "black", "white", "purple", "orange", "cyan", "brown", "gray", "grey", "pink"]
        .contains(&w)
}

fn select_object<'w>(text: &str, world: &'w WorldState) -> Result<&'w ObjectSpec, String> {
    if let Some(o) = named_objects(text, world).into_iter().next() {
        return Ok(o);
    }
    if let Some(c) = unknown_color(text, world) {
        return Err(format!("Which object do you mean? I cannot see a {c} cube."));
    }
    let mut movable: Vec<&ObjectSpec> = world.objects.iter().filter(|o| o.graspable && !o.fixed).collect();
    if text.contains("on the right") {
        movable.sort_by(|a, b| b.center.x.total_cmp(&a.center.x));
    } else if text.contains("on the left") {
        movable.sort_by(|a, b| a.center.x.total_cmp(&b.center.x));
    } else {
        movable.sort_by(|a, b| a.center.distance(world.ee_pos).total_cmp(&b.center.distance(world.ee_pos)));
    }
    movable.into_iter().next().ok_or_else(|| "Which object do you mean? I see no object to pick.".to_string())
}

fn held_or_named<'w>(text: &str, world: &'w WorldState) -> Result<&'w ObjectSpec, String> {
    if let Some(o) = named_objects(text, world).into_iter().next() {
        return Ok(o);
    }
    if let Some(c) = world.carried() {
        return Ok(c);
    }
    if let Some(c) = unknown_color(text, world) {
        return Err(format!("Which object do you mean? I cannot see a {c} cube."));
    }
    Err("Which object should I move? Nothing is grasped.".into())
}

/// Zone floor center, then a grid of offsets inside the zone, first spot the
/// sentinel does not reject.
fn free_spot_in_zone(p: &MockPlanner, world: &WorldState, obj: &ObjectSpec, zone: &crate::world_sim::Zone) -> Option<Vec3> {
    let c = zone.aabb.center();
    let h = obj.half_extents;
    let z = (zone.aabb.min.z + h.z).min(zone.aabb.max.z);
    let (hx, hy) = (zone.aabb.half_extents().x - h.x, zone.aabb.half_extents().y - h.y);
    let mut candidates = vec![Vec3::new(c.x, c.y, z)];
    if hx >= 0.0 && hy >= 0.0 {
        let step = 2.0 * h.x.max(h.y) + 2.0;
        let nx = (hx / step).floor() as i64;
        let ny = (hy / step).floor() as i64;
        let mut grid = Vec::new();
        for i in -nx..=nx {
            for j in -ny..=ny {
                grid.push(Vec3::new(c.x + i as f64 * step, c.y + j as f64 * step, z));
            }
        }
        grid.sort_by(|a, b| a.distance(c).total_cmp(&b.distance(c)));
        candidates.extend(grid);
    }
    candidates.into_iter().find(|t| {
        let occupied = world.objects.iter().any(|o| o.id != obj.id && o.aabb().intersects(&crate::geometry::Aabb::from_center(*t, h)));
        !occupied && p.sentinel.check_placement(world, &obj.id, *t).is_ok_and(|v| !v.is_reject())
    })
}

/// Turns sampled per-step values into unit digits by differencing rounded
/// cumulative sums.
fn rasterize(values: &[f64]) -> Vec<i8> {
    let mut acc = 0.0;
    let mut prev = 0.0_f64;
    values
        .iter()
        .map(|v| {
            acc += v;
            let r = (acc + 0.5).floor();
            let d = (r - prev) as i8;
            prev = r;
            d
        })
        .collect()
}

/// Incremental trajectory builder that keeps a simulated world in sync.
struct Motion<'p> {
    planner: &'p MockPlanner,
    world: WorldState,
    steps: Vec<StepDelta>,
    grip: u8,
    failed: Option<String>,
}

impl<'p> Motion<'p> {
    fn new(planner: &'p MockPlanner, world: &WorldState) -> Self {
        let grip = u8::from(world.gripper == Gripper::Closed);
        Motion { planner, world: world.clone(), steps: Vec::new(), grip, failed: None }
    }

    fn deltas(&self, d: Vec3) -> Vec<Vec3> {
        let axis = |v: f64| -> Vec<f64> {
            let a = v.abs();
            let s = v.signum();
            match self.planner.grammar {
                Grammar::Improved => {
                    let k = (a + 1e-9).floor();
                    let f = a - k;
                    let mut out = vec![s; k as usize];
                    if f > 1e-9 {
                        out.push(s * f);
                    }
                    out
                }
                Grammar::Baseline => vec![s; (a + 0.5).floor() as usize],
            }
        };
        let (x, y, z) = (axis(d.x), axis(d.y), axis(d.z));
        let n = x.len().max(y.len()).max(z.len());
        let at = |v: &Vec<f64>, i: usize| v.get(i).copied().unwrap_or(0.0);
        (0..n).map(|i| Vec3::new(at(&x, i), at(&y, i), at(&z, i))).collect()
    }

    /// Appends moves; the last one carries `end_grip` (a zero move is added
    /// when there is nothing to move).
    fn segment(&mut self, moves: &[Vec3], end_grip: Option<u8>) {
        let mut moves = moves.to_vec();
        if moves.is_empty() && end_grip.is_some_and(|g| g != self.grip) {
            moves.push(Vec3::ZERO);
        }
        let n = moves.len();
        for (i, d) in moves.into_iter().enumerate() {
            let g = if i + 1 == n { end_grip.unwrap_or(self.grip) } else { self.grip };
            let s = StepDelta::new(d.x, d.y, d.z, g);
            self.world = step(&self.world, s).0;
            self.steps.push(s);
        }
        if let Some(g) = end_grip {
            self.grip = g;
        }
    }

    fn straight(&mut self, target: Vec3, end_grip: Option<u8>) {
        let moves = self.deltas(target - self.world.ee_pos);
        self.segment(&moves, end_grip);
    }

    /// Extent below/around the EE that must clear obstacles.
    fn reach_extent(&self) -> Vec3 {
        let e = self.world.ee_half_extents;
        match self.world.carried() {
            Some(c) => {
                let off = self.world.grasp_offset;
                let h = c.half_extents;
                Vec3::new(e.x.max(off.x.abs() + h.x), e.y.max(off.y.abs() + h.y), e.z.max(off.z.abs() + h.z))
            }
            None => e,
        }
    }

    fn blockers(&self, from: Vec3, to: Vec3, ignore: &[&str]) -> Vec<&ObjectSpec> {
        let ext = self.reach_extent();
        let carried = self.world.grasped.as_deref();
        self.world
            .objects
            .iter()
            .filter(|o| !ignore.contains(&o.id.as_str()) && carried != Some(o.id.as_str()))
            .filter(|o| o.aabb().inflate(ext).segment_intersects(from, to))
            .collect()
    }

    fn collides(&self, moves: &[Vec3]) -> bool {
        let mut w = self.world.clone();
        for d in moves {
            let (next, ev) = step(&w, StepDelta::new(d.x, d.y, d.z, self.grip));
            if ev.iter().any(|e| matches!(e.kind, EventKind::Collision { .. })) {
                return true;
            }
            w = next;
        }
        false
    }

    /// Straight to `target` when clear, otherwise lift over whatever is in
    /// the way, traverse and descend.
    fn travel(&mut self, target: Vec3, ignore: &[&str], end_grip: Option<u8>) {
        let from = self.world.ee_pos;
        let direct = self.deltas(target - from);
        let mut blocking: Vec<&ObjectSpec> = self.blockers(from, target, ignore);
        if blocking.is_empty() && !self.collides(&direct) {
            self.segment(&direct, end_grip);
            return;
        }
        if blocking.is_empty() {
            blocking = self.world.objects.iter().filter(|o| o.fixed).collect();
        }
        let below = {
            let e = self.world.ee_half_extents.z;
            match self.world.carried() {
                Some(c) => e.max(c.half_extents.z - self.world.grasp_offset.z),
                None => e,
            }
        };
        let mut top = blocking.iter().map(|o| o.aabb().max.z).fold(f64::MIN, f64::max);
        let mut z_up = from.z;
        for _ in 0..8 {
            z_up = (top + self.planner.clearance_mm + below).max(from.z).max(target.z);
            let a = Vec3::new(from.x, from.y, z_up);
            let b = Vec3::new(target.x, target.y, z_up);
            let higher = self
                .blockers(a, b, ignore)
                .iter()
                .map(|o| o.aabb().max.z)
                .fold(f64::MIN, f64::max);
            if higher <= top {
                break;
            }
            top = higher;
        }
        let z_up = (z_up * 1e6).ceil() / 1e6;
        self.straight(Vec3::new(from.x, from.y, z_up), None);
        self.straight(Vec3::new(target.x, target.y, z_up), None);
        self.straight(target, end_grip);
    }

    fn pick(&mut self, id: &str) -> Result<(), String> {
        match self.world.grasped.as_deref() {
            Some(g) if g == id => return Ok(()),
            Some(g) => {
                let name = self.world.object(g).map(|o| o.display_name()).unwrap_or_default();
                return Err(format!("I am holding the {name}. Should I release it first?"));
            }
            None => {}
        }
        let center = self.world.object(id).map(|o| o.center).ok_or_else(|| format!("Which object do you mean? `{id}` is unknown."))?;
        self.travel(center, &[id], Some(1));
        if self.world.grasped.as_deref() != Some(id) {
            self.failed = Some(format!("Could not grasp {id}; which object should I pick?"));
        }
        Ok(())
    }

    fn place(&mut self, target: Vec3) {
        let ee = target - self.world.grasp_offset;
        self.travel(ee, &[], Some(0));
    }

    fn finish(self) -> Outcome {
        if let Some(q) = self.failed {
            return Outcome::Ask(q);
        }
        let steps = &self.steps;
        let col = |f: fn(&StepDelta) -> f64| steps.iter().map(f).collect::<Vec<f64>>();
        let block = match self.planner.grammar {
            Grammar::Improved => PatternBlock::new(
                runs(&col(|s| s.dx)),
                runs(&col(|s| s.dy)),
                runs(&col(|s| s.dz)),
                runs(&col(|s| s.g as f64)),
                Grammar::Improved,
            ),
            Grammar::Baseline => {
                let digits = |v: Vec<f64>| AxisExpr::DigitRun(v.into_iter().map(|x| x as i8).collect());
                PatternBlock::new(
                    digits(col(|s| s.dx)),
                    digits(col(|s| s.dy)),
                    digits(col(|s| s.dz)),
                    digits(col(|s| s.g as f64)),
                    Grammar::Baseline,
                )
            }
        };
        Outcome::Blocks(vec![block.expect("planner steps stay within 1mm")], None)
    }
}

fn runs(values: &[f64]) -> AxisExpr {
    let mut parts = Vec::new();
    let mut i = 0;
    while i < values.len() {
        let v = values[i];
        let mut j = i;
        while j < values.len() && values[j] == v {
            j += 1;
        }
        parts.push(AxisExpr::repeat(v, j - i));
        i = j;
    }
    match parts.len() {
        0 => AxisExpr::repeat(0.0, 0),
        1 => parts.pop().expect("one part"),
        _ => AxisExpr::Concat(parts),
    }
}
