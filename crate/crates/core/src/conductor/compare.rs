use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::eval::{run_variant, EvalResult, RunEnv};
use super::task::{PlannerSpec, Strategy, TaskSpec};
use super::ConductorError;
use crate::geometry::Vec3;
use crate::world_sim::WorldState;

const PHRASES: &str = include_str!("../../assets/conductor/phrases.toml");

/// Paraphrase sets keyed by task.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PhraseSet {
    #[serde(flatten)]
    pub sets: BTreeMap<String, PhraseList>,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PhraseList {
    pub phrases: Vec<String>,
}

impl PhraseSet {
    pub fn builtin() -> Self {
        Self::parse(PHRASES).expect("bundled phrase asset parses")
    }

    pub fn parse(text: &str) -> Result<Self, ConductorError> {
        toml::from_str(text).map_err(|e| ConductorError::Config(e.to_string()))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, ConductorError> {
        Self::parse(&std::fs::read_to_string(path)?)
    }

    /// Phrase for run `i`, falling back to the task's own command.
    pub fn phrase<'a>(&'a self, spec: &'a TaskSpec, i: usize) -> &'a str {
        match self.sets.get(spec.phrase_key()) {
            Some(l) if !l.phrases.is_empty() => &l.phrases[i % l.phrases.len()],
            _ => &spec.command,
        }
    }
}

/// Placement jitter half-widths in mm, applied in x and y.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Jitter {
    pub object_mm: f64,
    pub ee_mm: f64,
    pub obstacle_mm: f64,
}

impl Default for Jitter {
    fn default() -> Self {
        Jitter { object_mm: 20.0, ee_mm: 10.0, obstacle_mm: 10.0 }
    }
}

impl Jitter {
    pub const NONE: Jitter = Jitter { object_mm: 0.0, ee_mm: 0.0, obstacle_mm: 0.0 };

    /// A jittered copy of `world`. Draws that start with overlapping objects
    /// or the EE touching a fixed object are redrawn; after 32 failures the
    /// world is returned unchanged.
    pub fn apply(&self, world: &WorldState, rng: &mut ChaCha8Rng) -> WorldState {
        let off = |a: f64, rng: &mut ChaCha8Rng| {
            if a > 0.0 {
                Vec3::new(rng.random_range(-a..=a), rng.random_range(-a..=a), 0.0)
            } else {
                Vec3::ZERO
            }
        };
        for _ in 0..32 {
            let mut w = world.clone();
            w.ee_pos += off(self.ee_mm, rng);
            for o in &mut w.objects {
                let a = if o.fixed { self.obstacle_mm } else { self.object_mm };
                let d = off(a, rng);
                if w.grasped.as_deref() == Some(o.id.as_str()) {
                    continue;
                }
                o.center += d;
            }
            if let Some(id) = w.grasped.clone() {
                let c = w.ee_pos + w.grasp_offset;
                if let Some(o) = w.objects.iter_mut().find(|o| o.id == id) {
                    o.center = c;
                }
            }
            let Ok(w) = WorldState::new(w.ee_pos, w.objects.clone(), w.zones.clone()).map(|mut fresh| {
                fresh.ee_half_extents = w.ee_half_extents;
                fresh.gripper = w.gripper;
                fresh.grasped = w.grasped.clone();
                fresh.grasp_offset = w.grasp_offset;
                fresh.refresh_derived();
                fresh
            }) else {
                continue;
            };
            let overlap = w
                .objects
                .iter()
                .enumerate()
                .any(|(i, a)| w.objects[i + 1..].iter().any(|b| a.aabb().intersects(&b.aabb())));
            if !overlap && w.contacts.is_empty() {
                return w;
            }
        }
        world.clone()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareOptions {
    pub runs: usize,
    pub seed: u64,
    pub jitter: Jitter,
    pub strategies: Vec<Strategy>,
    /// Replaces every task's own planner when set.
    pub planner: Option<PlannerSpec>,
}

impl Default for CompareOptions {
    fn default() -> Self {
        CompareOptions { runs: 10, seed: 7, jitter: Jitter::default(), strategies: Strategy::ALL.to_vec(), planner: None }
    }
}

/// One (task, strategy) line of the comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonRow {
    pub task: String,
    pub strategy: Strategy,
    pub runs: usize,
    pub mean_time_s: f64,
    pub mean_error_m: f64,
    pub success_rate: f64,
    /// Sample standard deviations; absent for single runs.
    pub std_time_s: Option<f64>,
    pub std_error_m: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub rows: Vec<ComparisonRow>,
    pub results: Vec<EvalResult>,
}

/// A published comparison figure kept for side-by-side display.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceRow {
    pub task: &'static str,
    pub method: &'static str,
    pub time_s: f64,
    pub error_m: f64,
    pub success: f64,
}

pub const REFERENCE_TABLE: [ReferenceRow; 4] = [
    ReferenceRow { task: "grasping", method: "baseline", time_s: 6.90, error_m: 0.01, success: 0.90 },
    ReferenceRow { task: "grasping", method: "improved", time_s: 6.10, error_m: 0.00, success: 1.00 },
    ReferenceRow { task: "obstacle", method: "baseline", time_s: 5.84, error_m: 0.05, success: 0.3 },
    ReferenceRow { task: "obstacle", method: "improved", time_s: 6.82, error_m: 0.018, success: 0.5 },
];

fn seed_for(base: u64, task: &str, run: usize) -> u64 {
    // FNV-1a over the task id keeps per-task streams independent
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in task.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    base ^ h ^ (run as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15)
}

/// Runs every task `runs` times per strategy with rotated phrasings and
/// jittered placements. Both strategies see the same phrase and world in a
/// given run.
pub fn compare_strategies(
    specs: &[TaskSpec],
    phrases: &PhraseSet,
    opts: &CompareOptions,
    env: &RunEnv,
) -> Result<Comparison, ConductorError> {
    if opts.runs == 0 {
        return Err(ConductorError::Task("runs must be at least 1".into()));
    }
    let mut rows = Vec::new();
    let mut results = Vec::new();
    for spec in specs {
        let spec = match &opts.planner {
            Some(p) => TaskSpec { planner: p.clone(), ..spec.clone() },
            None => spec.clone(),
        };
        let base = spec.world_def()?.build().map_err(|e| ConductorError::WorldLoad(e.to_string()))?;
        let worlds: Vec<WorldState> = (0..opts.runs)
            .map(|i| opts.jitter.apply(&base, &mut ChaCha8Rng::seed_from_u64(seed_for(opts.seed, &spec.id, i))))
            .collect();
        for &strategy in &opts.strategies {
            let mut batch = Vec::with_capacity(opts.runs);
            for (i, world) in worlds.iter().enumerate() {
                batch.push(run_variant(&spec, phrases.phrase(&spec, i), world, strategy, env)?);
            }
            rows.push(summarize(&spec.id, strategy, &batch));
            results.extend(batch);
        }
    }
    Ok(Comparison { rows, results })
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn std(v: &[f64]) -> Option<f64> {
    if v.len() < 2 {
        return None;
    }
    let m = mean(v);
    Some((v.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (v.len() - 1) as f64).sqrt())
}

fn summarize(task: &str, strategy: Strategy, batch: &[EvalResult]) -> ComparisonRow {
    let times: Vec<f64> = batch.iter().map(|r| r.generation_time_s).collect();
    let errors: Vec<f64> = batch.iter().map(|r| r.final_error_m).collect();
    ComparisonRow {
        task: task.to_string(),
        strategy,
        runs: batch.len(),
        mean_time_s: mean(&times),
        mean_error_m: mean(&errors),
        success_rate: batch.iter().filter(|r| r.success).count() as f64 / batch.len() as f64,
        std_time_s: std(&times),
        std_error_m: std(&errors),
    }
}

impl Comparison {
    pub fn row(&self, task: &str, strategy: Strategy) -> Option<&ComparisonRow> {
        self.rows.iter().find(|r| r.task == task && r.strategy == strategy)
    }

    pub fn to_csv(&self) -> Result<String, ConductorError> {
        let mut w = csv::Writer::from_writer(Vec::new());
        for r in &self.rows {
            w.serialize(r).map_err(|e| ConductorError::Config(e.to_string()))?;
        }
        let bytes = w.into_inner().map_err(|e| ConductorError::Config(e.to_string()))?;
        Ok(String::from_utf8(bytes).expect("csv is utf-8"))
    }

    pub fn read_csv(text: &str) -> Result<Vec<ComparisonRow>, ConductorError> {
        csv::Reader::from_reader(text.as_bytes())
            .deserialize()
            .collect::<Result<Vec<ComparisonRow>, _>>()
            .map_err(|e| ConductorError::Config(e.to_string()))
    }

    /// Two-strategy table, one line per task, with reference figures where
    /// the task id has them.
    pub fn render_table(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(
            out,
            "{:<12} | {:>8} {:>9} {:>7} | {:>8} {:>9} {:>7}",
            "task", "base t/s", "base err", "base ok", "impr t/s", "impr err", "impr ok"
        );
        let mut tasks: Vec<&str> = Vec::new();
        for r in &self.rows {
            if !tasks.contains(&r.task.as_str()) {
                tasks.push(&r.task);
            }
        }
        let cell = |r: Option<&ComparisonRow>| match r {
            Some(r) => format!("{:>8.3} {:>9.3} {:>7.2}", r.mean_time_s, r.mean_error_m, r.success_rate),
            None => format!("{:>8} {:>9} {:>7}", "-", "-", "-"),
        };
        for t in tasks {
            let _ = writeln!(
                out,
                "{:<12} | {} | {}",
                t,
                cell(self.row(t, Strategy::Baseline)),
                cell(self.row(t, Strategy::Improved))
            );
            let refs: Vec<&ReferenceRow> = REFERENCE_TABLE.iter().filter(|r| r.task == t).collect();
            if refs.len() == 2 {
                let c = |r: &ReferenceRow| format!("{:>8.2} {:>9.3} {:>7.2}", r.time_s, r.error_m, r.success);
                let _ = writeln!(out, "{:<12} | {} | {}", "  reference", c(refs[0]), c(refs[1]));
            }
        }
        out
    }
}

/// Runs the comparison with the mock planner while recording every exchange
/// into the corpus at `corpus`, and stores the resulting metrics as CSV at
/// `metrics`.
pub fn record_corpus(
    specs: &[TaskSpec],
    phrases: &PhraseSet,
    opts: &CompareOptions,
    corpus: &Path,
    metrics: &Path,
) -> Result<Comparison, ConductorError> {
    if corpus.exists() {
        std::fs::remove_file(corpus)?;
    }
    let store = crate::planner_gateway::TranscriptStore::open(corpus)?;
    let env = RunEnv::default().recording_to(store);
    let opts = CompareOptions { planner: Some(PlannerSpec::Mock), ..opts.clone() };
    let cmp = compare_strategies(specs, phrases, &opts, &env)?;
    std::fs::write(metrics, cmp.to_csv()?)?;
    Ok(cmp)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_phrases() {
        let p = PhraseSet::builtin();
        for key in ["grasping", "obstacle", "stacking", "zone"] {
            assert_eq!(p.sets[key].phrases.len(), 10, "{key}");
        }
    }

    #[test]
    fn std_needs_two() {
        assert_eq!(std(&[1.0]), None);
        assert_eq!(std(&[1.0, 3.0]), Some(2f64.sqrt()));
    }

    #[test]
    fn seeds_differ_per_run() {
        assert_ne!(seed_for(7, "grasping", 0), seed_for(7, "grasping", 1));
        assert_ne!(seed_for(7, "grasping", 0), seed_for(7, "obstacle", 0));
    }
}
