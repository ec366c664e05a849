//! Incremental prompt assembly for workflows A to D.
//!
//! Level A carries the control-pattern instructions and the task. B adds the
//! verbalized observation list, C adds image references, D adds the robot
//! structure. Canonical texts come from bundled assets (see [`assets`]).

pub mod assets;

use std::fmt;
use std::fmt::Write as _;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::robot_model::{to_mermaid, RobotModel};
use crate::world_sim::{object_positions, observe, WorldState};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum PromptError {
    #[error("task text is empty")]
    EmptyTask,
    #[error("level {0} needs a world snapshot")]
    MissingWorld(Level),
    #[error("level {0} needs image references")]
    MissingImages(Level),
    #[error("level {0} needs a robot model")]
    MissingRobot(Level),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Level {
    A,
    B,
    C,
    D,
}

impl Level {
    pub const ALL: [Level; 4] = [Level::A, Level::B, Level::C, Level::D];

    pub fn from_letter(s: &str) -> Option<Level> {
        match s.trim().to_ascii_uppercase().as_str() {
            "A" => Some(Level::A),
            "B" => Some(Level::B),
            "C" => Some(Level::C),
            "D" => Some(Level::D),
            _ => None,
        }
    }
}

impl fmt::Display for Level {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Section kinds in render order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SectionKind {
    Role,
    MovementDescriptions,
    PatternRules,
    Examples,
    Task,
    Observations,
    Constraints,
    UrdfText,
    ImageRefs,
    OutputDirectives,
}

impl SectionKind {
    /// Kinds a bundle of `level` must contain.
    pub fn required(level: Level) -> Vec<SectionKind> {
        use SectionKind::*;
        let mut v = vec![Role, MovementDescriptions, PatternRules, Examples, Task];
        if level >= Level::B {
            v.push(Observations);
        }
        if level >= Level::C {
            v.push(ImageRefs);
        }
        if level >= Level::D {
            v.push(UrdfText);
        }
        v
    }
}

/// An image handed to a vision-capable planner. Encoding for the wire is the
/// gateway's job.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageRef {
    pub path: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl ImageRef {
    pub fn new(path: impl Into<String>) -> Self {
        ImageRef { path: path.into(), label: None }
    }

    pub fn labeled(path: impl Into<String>, label: &str) -> Self {
        ImageRef { path: path.into(), label: Some(label.to_string()) }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Section {
    pub kind: SectionKind,
    pub text: String,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub images: Vec<ImageRef>,
}

/// Which few-shot set fills the examples section.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExampleSet {
    /// The examples shipped with the canonical control prompt.
    #[default]
    Canonical,
    /// Bracketed-repeat examples.
    Improved,
    /// Digit-run examples.
    Baseline,
}

#[derive(Debug, Clone, Default)]
pub struct BuildInputs<'a> {
    pub world: Option<&'a WorldState>,
    pub images: &'a [ImageRef],
    pub robot: Option<&'a RobotModel>,
    pub constraints: &'a [String],
    pub examples: ExampleSet,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PromptBundle {
    pub level: Level,
    pub sections: Vec<Section>,
    pub rendered: String,
}

impl PromptBundle {
    pub fn section(&self, kind: SectionKind) -> Option<&Section> {
        self.sections.iter().find(|s| s.kind == kind)
    }

    pub fn images(&self) -> impl Iterator<Item = &ImageRef> {
        self.sections.iter().flat_map(|s| s.images.iter())
    }

    pub fn has_output_directive(&self) -> bool {
        self.section(SectionKind::OutputDirectives).is_some()
    }

    /// SHA-256 of the rendered text; the replay key for transcripts.
    pub fn checksum(&self) -> String {
        assets::sha256_hex(&self.rendered)
    }

    fn push(&mut self, s: Section) {
        let at = self.sections.iter().position(|x| x.kind > s.kind).unwrap_or(self.sections.len());
        self.sections.insert(at, s);
        self.rerender();
    }

    fn rerender(&mut self) {
        self.rendered = self.sections.iter().map(|s| s.text.as_str()).collect::<Vec<_>>().join("\n");
    }
}

pub fn build(level: Level, task: &str, inputs: &BuildInputs<'_>) -> Result<PromptBundle, PromptError> {
    if task.trim().is_empty() {
        return Err(PromptError::EmptyTask);
    }
    if level >= Level::B && inputs.world.is_none() {
        return Err(PromptError::MissingWorld(level));
    }
    if level >= Level::C && inputs.images.is_empty() {
        return Err(PromptError::MissingImages(level));
    }
    if level >= Level::D && inputs.robot.is_none() {
        return Err(PromptError::MissingRobot(level));
    }

    let a = assets::sections(assets::BASELINE_PROMPT);
    let canon = |h: &str| assets::section(&a, h).to_string();
    let examples = match inputs.examples {
        ExampleSet::Canonical => canon("Examples"),
        ExampleSet::Improved => format!("# Examples\n{}", assets::EXAMPLES_IMPROVED),
        ExampleSet::Baseline => format!("# Examples\n{}", assets::EXAMPLES_BASELINE),
    };
    let plain = |kind, text| Section { kind, text, images: Vec::new() };
    let mut sections = vec![
        plain(SectionKind::Role, canon("Role")),
        plain(SectionKind::MovementDescriptions, canon("Movement Descriptions")),
        plain(SectionKind::PatternRules, canon("General Pattern Rules")),
        plain(SectionKind::Examples, examples),
        plain(SectionKind::Task, format!("# Task\nInput: {}\n", task.trim())),
    ];
    if level >= Level::B {
        sections.push(plain(SectionKind::Observations, observation_text(inputs.world.expect("checked"))));
    }
    if !inputs.constraints.is_empty() {
        let mut t = String::from("# Constraints\n");
        for c in inputs.constraints {
            t.push_str(c);
            t.push('\n');
        }
        sections.push(plain(SectionKind::Constraints, t));
    }
    if level >= Level::D {
        sections.push(plain(SectionKind::UrdfText, urdf_text(inputs.robot.expect("checked"))));
    }
    if level >= Level::C {
        sections.push(Section { kind: SectionKind::ImageRefs, text: image_text(inputs.images), images: inputs.images.to_vec() });
    }
    let mut b = PromptBundle { level, sections, rendered: String::new() };
    b.rerender();
    Ok(b)
}

/// Appends the two-line 50-character response directive once.
pub fn output_directive_50(mut bundle: PromptBundle) -> PromptBundle {
    if !bundle.has_output_directive() {
        bundle.push(Section {
            kind: SectionKind::OutputDirectives,
            text: assets::OUTPUT_DIRECTIVE_50.to_string(),
            images: Vec::new(),
        });
    }
    bundle
}

/// Text of the observation section: the ordering description from the
/// perception asset, then the live list and all object centers.
pub fn observation_text(world: &WorldState) -> String {
    let b = assets::sections(assets::PERCEPTION_PROMPT);
    let desc = assets::section(&b, "Observation Description");
    let mut t: String = desc.lines().filter(|l| !l.starts_with("To help visually")).map(|l| format!("{l}\n")).collect();
    let _ = writeln!(t, "observation = {}", observe(world));
    let _ = writeln!(t, "object positions = {}", object_positions(world));
    t
}

/// Extracts the `observation = [...]` line of a rendered prompt.
pub fn find_observation(rendered: &str) -> Option<&str> {
    rendered.lines().find_map(|l| l.strip_prefix("observation = "))
}

fn image_text(images: &[ImageRef]) -> String {
    let b = assets::sections(assets::PERCEPTION_PROMPT);
    let desc = assets::section(&b, "Observation Description");
    let mut t = String::from("# Images\n");
    if let Some(line) = desc.lines().find(|l| l.starts_with("To help visually")) {
        t.push_str(line);
        t.push('\n');
    }
    for (i, img) in images.iter().enumerate() {
        match &img.label {
            Some(l) => {
                let _ = writeln!(t, "[image {}] {}: {}", i + 1, l, img.path);
            }
            None => {
                let _ = writeln!(t, "[image {}] {}", i + 1, img.path);
            }
        }
    }
    t
}

fn urdf_text(robot: &RobotModel) -> String {
    format!("# Robot Structure\n{}Hierarchy (mermaid):\n{}", robot.structure_summary(), to_mermaid(robot))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;
    use crate::world_sim::{ObjectSpec, Observation};

    fn world() -> WorldState {
        WorldState::new(
            Vec3::new(-170.0, 190.0, 30.0),
            vec![
                ObjectSpec::cube("black", "black", Vec3::new(110.0, 490.0, 140.0), 15.0),
                ObjectSpec::cube("red", "red", Vec3::new(-170.0, 190.0, 30.0), 15.0),
                ObjectSpec::cube("blue", "blue", Vec3::new(-270.0, 190.0, 30.0), 15.0),
            ],
            vec![],
        )
        .unwrap()
        .with_grasped("red")
        .unwrap()
    }

    #[test]
    fn level_a_starts_with_canonical_text() {
        let b = build(Level::A, "Move right for 70mm", &BuildInputs::default()).unwrap();
        assert!(b.rendered.starts_with(assets::BASELINE_PROMPT));
        assert!(b.rendered.ends_with("# Task\nInput: Move right for 70mm\n"));
        let kinds: Vec<_> = b.sections.iter().map(|s| s.kind).collect();
        assert_eq!(kinds, SectionKind::required(Level::A));
    }

    #[test]
    fn errors() {
        assert_eq!(build(Level::A, "  ", &BuildInputs::default()), Err(PromptError::EmptyTask));
        assert_eq!(build(Level::B, "x", &BuildInputs::default()), Err(PromptError::MissingWorld(Level::B)));
        let w = world();
        let i = BuildInputs { world: Some(&w), ..Default::default() };
        assert_eq!(build(Level::C, "x", &i), Err(PromptError::MissingImages(Level::C)));
        let imgs = [ImageRef::new("f.ppm")];
        let i = BuildInputs { world: Some(&w), images: &imgs, ..Default::default() };
        assert_eq!(build(Level::D, "x", &i), Err(PromptError::MissingRobot(Level::D)));
    }

    #[test]
    fn observations_section() {
        let w = world();
        let i = BuildInputs { world: Some(&w), ..Default::default() };
        let b = build(Level::B, "place the grasped red cube to position [-270, 190, 30]", &i).unwrap();
        let obs = b.section(SectionKind::Observations).unwrap();
        assert!(obs.text.contains("[[110, 490, 140], [-170, 190, 30], [-270, 190, 30]]"));
        let parsed: Observation = find_observation(&b.rendered).unwrap().parse().unwrap();
        assert_eq!(parsed, observe(&w));
    }

    #[test]
    fn directive_last_and_idempotent() {
        let w = world();
        let imgs = [ImageRef::labeled("stack.ppm", "frame stack")];
        let i = BuildInputs { world: Some(&w), images: &imgs, ..Default::default() };
        let b = output_directive_50(build(Level::C, "grasp the red cube", &i).unwrap());
        assert!(b.rendered.ends_with(assets::OUTPUT_DIRECTIVE_50));
        let again = output_directive_50(b.clone());
        assert_eq!(again, b);
        assert_eq!(b.rendered.matches("# Output").count(), 1);
    }

    #[test]
    fn manifest_matches() {
        assert!(assets::verify_manifest().is_empty());
        let secs = assets::sections(assets::BASELINE_PROMPT);
        let joined: Vec<_> = secs.iter().map(|(_, t)| t.as_str()).collect();
        assert_eq!(joined.join("\n"), assets::BASELINE_PROMPT);
    }
}
