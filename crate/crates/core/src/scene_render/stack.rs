use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{render_framed, Raster, RenderError, Viewpoint};
use crate::world_sim::WorldState;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StackLayout {
    HorizontalRow,
    /// One row per viewpoint.
    Grid,
}

/// Time-sampled frames, `rows[view][sample]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameStack {
    pub rows: Vec<Vec<Raster>>,
    pub ticks: Vec<usize>,
    pub layout: StackLayout,
}

/// Ordered file list plus layout, written next to the frames.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StackManifest {
    pub layout: StackLayout,
    pub ticks: Vec<usize>,
    pub frame_width: u32,
    pub frame_height: u32,
    pub rows: Vec<Vec<String>>,
    pub composite: String,
}

/// Samples `history` at indices `0, stride, 2·stride, …` and renders every
/// sample from every view. All frames of a view share one framing: the union
/// of the sampled scene bounds.
pub fn frame_stack(history: &[WorldState], stride: usize, views: &[Viewpoint]) -> Result<FrameStack, RenderError> {
    if stride == 0 {
        return Err(RenderError::InvalidStride);
    }
    let ticks: Vec<usize> = (0..history.len()).step_by(stride).collect();
    let layout = if views.len() > 1 { StackLayout::Grid } else { StackLayout::HorizontalRow };
    let Some(first) = ticks.first() else {
        return Ok(FrameStack { rows: vec![Vec::new(); views.len()], ticks, layout });
    };
    let frame = ticks.iter().skip(1).fold(history[*first].bounds(), |b, &i| b.union(&history[i].bounds()));
    let rows = views
        .iter()
        .map(|v| ticks.iter().map(|&i| render_framed(&history[i], v, &frame)).collect::<Result<Vec<_>, _>>())
        .collect::<Result<Vec<_>, _>>()?;
    Ok(FrameStack { rows, ticks, layout })
}

impl FrameStack {
    pub fn frame_count(&self) -> usize {
        self.ticks.len()
    }

    /// Rows joined horizontally, then stacked top to bottom.
    pub fn compose(&self) -> Result<Raster, RenderError> {
        let rows = self.rows.iter().map(|r| Raster::hconcat(r)).collect::<Result<Vec<_>, _>>()?;
        Raster::vconcat(&rows)
    }

    /// Writes `frame_{row}_{k}.{ext}`, `stack.{ext}` and `manifest.json`.
    pub fn write(&self, dir: impl AsRef<Path>, ext: &str) -> Result<StackManifest, RenderError> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir)?;
        let mut rows = Vec::new();
        for (r, frames) in self.rows.iter().enumerate() {
            let mut names = Vec::new();
            for (k, f) in frames.iter().enumerate() {
                let name = format!("frame_{r}_{k:03}.{ext}");
                f.save(dir.join(&name))?;
                names.push(name);
            }
            rows.push(names);
        }
        let composite = format!("stack.{ext}");
        self.compose()?.save(dir.join(&composite))?;
        let first = self.rows.iter().flatten().next();
        let m = StackManifest {
            layout: self.layout,
            ticks: self.ticks.clone(),
            frame_width: first.map_or(0, |f| f.width),
            frame_height: first.map_or(0, |f| f.height),
            rows,
            composite,
        };
        let json = serde_json::to_string_pretty(&m).map_err(|e| RenderError::Encode(e.to_string()))?;
        std::fs::write(dir.join("manifest.json"), json)?;
        Ok(m)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Vec3;
    use crate::pattern_dsl::{Provenance, StepDelta, Trajectory};
    use crate::world_sim::{execute_states, ObjectSpec};

    fn history(n: usize) -> Vec<WorldState> {
        let w = WorldState::new(
            Vec3::ZERO,
            vec![ObjectSpec::cube("red", "red", Vec3::new(0.0, 100.0, 0.0), 15.0)],
            vec![],
        )
        .unwrap();
        let t = Trajectory::new(vec![StepDelta::new(0.0, 1.0, 0.0, 0); n - 1], Provenance::Parsed);
        execute_states(&w, &t)
    }

    #[test]
    fn stride_sampling() {
        let h = history(26);
        let s = frame_stack(&h, 5, &[Viewpoint::top()]).unwrap();
        assert_eq!(s.ticks, vec![0, 5, 10, 15, 20, 25]);
        let img = s.compose().unwrap();
        assert_eq!(img.width, 6 * Viewpoint::DEFAULT_WIDTH);
        assert_eq!(img.height, Viewpoint::DEFAULT_HEIGHT);
        assert_eq!(s.layout, StackLayout::HorizontalRow);
    }

    #[test]
    fn grid_of_views() {
        let h = history(3);
        let s = frame_stack(&h, 1, &[Viewpoint::top(), Viewpoint::front()]).unwrap();
        assert_eq!(s.layout, StackLayout::Grid);
        let img = s.compose().unwrap();
        assert_eq!((img.width, img.height), (3 * 320, 2 * 240));
        assert_eq!(frame_stack(&h[..1], 4, &[Viewpoint::top()]).unwrap().frame_count(), 1);
        assert!(frame_stack(&h, 0, &[Viewpoint::top()]).is_err());
    }

    #[test]
    fn manifest_written() {
        let dir = tempfile::tempdir().unwrap();
        let s = frame_stack(&history(4), 2, &[Viewpoint::top()]).unwrap();
        let m = s.write(dir.path(), "ppm").unwrap();
        assert_eq!(m.rows, vec![vec!["frame_0_000.ppm".to_string(), "frame_0_001.ppm".to_string()]]);
        let bytes = std::fs::read(dir.path().join("stack.ppm")).unwrap();
        assert_eq!(Raster::from_ppm(&bytes).unwrap(), s.compose().unwrap());
    }
}
