//! Flat-shaded orthographic rasterizer for world snapshots.
//!
//! Pixels are filled when their centers fall inside a projected box. Zones
//! are 1 px gray outlines, the end effector is an orange outline drawn last,
//! fixed objects are black and movable objects use their color.

mod raster;
mod stack;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{Aabb, Vec3};
use crate::world_sim::{Color, WorldState};

pub use raster::{PixelBox, Raster, Rgb};
pub use stack::{frame_stack, FrameStack, StackLayout, StackManifest};

#[derive(Debug, Error)]
pub enum RenderError {
    #[error("world needs {need_w:.1}x{need_h:.1} px but the canvas is {w}x{h}")]
    CanvasTooSmall { need_w: f64, need_h: f64, w: u32, h: u32 },
    #[error("region does not intersect the scene")]
    EmptyRegion,
    #[error("invalid viewpoint: {0}")]
    InvalidView(String),
    #[error("stride must be at least 1")]
    InvalidStride,
    #[error("layout: {0}")]
    Layout(String),
    #[error("encode: {0}")]
    Encode(String),
    #[error("decode: {0}")]
    Decode(String),
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

pub const BACKGROUND: Rgb = [255, 255, 255];
pub const ZONE_GRAY: Rgb = [128, 128, 128];
pub const EE_ORANGE: Rgb = [255, 140, 0];
pub const FIXED_BLACK: Rgb = [0, 0, 0];

/// Fill color for an object color. Named colors come from a fixed table;
/// other names hash into a reserved band so they cannot hit the table.
pub fn palette(c: &Color) -> Rgb {
    match c {
        Color::Red => [220, 30, 30],
        Color::Blue => [30, 60, 220],
        Color::Black => [20, 20, 20],
        Color::Other(name) => match name.as_str() {
            "yellow" => [230, 200, 0],
            "green" => [30, 160, 60],
            "purple" => [130, 40, 160],
            "cyan" => [0, 180, 200],
            "brown" => [140, 90, 40],
            "white" => [235, 235, 235],
            "gray" | "grey" => [90, 90, 90],
            other => {
                let mut h: u32 = 2166136261;
                for b in other.bytes() {
                    h = (h ^ b as u32).wrapping_mul(16777619);
                }
                [1 + (h & 0x3f) as u8 * 2, 64 + ((h >> 8) & 0x3f) as u8 * 2, 129 + ((h >> 16) & 0x3f) as u8]
            }
        },
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind")]
pub enum ViewKind {
    /// Looking down: image right = +X, image up = +Y.
    Top,
    /// Looking along +Y: image right = +X, image up = +Z.
    Front,
    /// Looking along -X: image right = +Y, image up = +Z.
    Side,
    /// Orthographic with unit image axes `u` (right) and `v` (up).
    Custom { u: Vec3, v: Vec3 },
}

impl ViewKind {
    fn basis(&self) -> (Vec3, Vec3) {
        match *self {
            ViewKind::Top => (Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 1.0, 0.0)),
            ViewKind::Front => (Vec3::new(1.0, 0.0, 0.0), Vec3::new(0.0, 0.0, 1.0)),
            ViewKind::Side => (Vec3::new(0.0, 1.0, 0.0), Vec3::new(0.0, 0.0, 1.0)),
            ViewKind::Custom { u, v } => (u, v),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Viewpoint {
    pub kind: ViewKind,
    /// Pixels per millimeter.
    pub scale: f64,
    pub width: u32,
    pub height: u32,
    /// World point at the canvas center; `None` centers on the scene bounds.
    #[serde(default)]
    pub center: Option<Vec3>,
    #[serde(default = "yes")]
    pub show_ee: bool,
}

fn yes() -> bool {
    true
}

impl Viewpoint {
    pub const DEFAULT_WIDTH: u32 = 320;
    pub const DEFAULT_HEIGHT: u32 = 240;
    pub const DEFAULT_SCALE: f64 = 0.25;

    pub fn new(kind: ViewKind) -> Self {
        Viewpoint {
            kind,
            scale: Self::DEFAULT_SCALE,
            width: Self::DEFAULT_WIDTH,
            height: Self::DEFAULT_HEIGHT,
            center: None,
            show_ee: true,
        }
    }

    pub fn top() -> Self {
        Self::new(ViewKind::Top)
    }

    pub fn front() -> Self {
        Self::new(ViewKind::Front)
    }

    pub fn side() -> Self {
        Self::new(ViewKind::Side)
    }

    pub fn with_scale(mut self, scale: f64) -> Self {
        self.scale = scale;
        self
    }

    pub fn with_canvas(mut self, w: u32, h: u32) -> Self {
        self.width = w;
        self.height = h;
        self
    }

    pub fn centered_at(mut self, c: Vec3) -> Self {
        self.center = Some(c);
        self
    }

    pub fn validate(&self) -> Result<(), RenderError> {
        if !(self.scale > 0.0 && self.scale.is_finite()) {
            return Err(RenderError::InvalidView(format!("scale {}", self.scale)));
        }
        if self.width == 0 || self.height == 0 {
            return Err(RenderError::InvalidView("empty canvas".into()));
        }
        if let ViewKind::Custom { u, v } = self.kind {
            let unit = |a: Vec3| (a.norm() - 1.0).abs() < 1e-9;
            if !unit(u) || !unit(v) || u.dot(v).abs() > 1e-9 {
                return Err(RenderError::InvalidView("custom basis must be orthonormal".into()));
            }
        }
        Ok(())
    }
}

/// Projection of world millimeters to continuous image coordinates.
#[derive(Debug, Clone, Copy)]
struct Camera {
    u: Vec3,
    v: Vec3,
    cu: f64,
    cv: f64,
    scale: f64,
    w: f64,
    h: f64,
}

impl Camera {
    fn new(view: &Viewpoint, center: Vec3, scale: f64) -> Self {
        let (u, v) = view.kind.basis();
        Camera { u, v, cu: u.dot(center), cv: v.dot(center), scale, w: view.width as f64, h: view.height as f64 }
    }

    /// `(x0, y0, x1, y1)` image rectangle covering the box.
    fn rect(&self, b: &Aabb) -> (f64, f64, f64, f64) {
        let (mut u0, mut u1, mut v0, mut v1) = (f64::INFINITY, f64::NEG_INFINITY, f64::INFINITY, f64::NEG_INFINITY);
        for i in 0..8 {
            let p = Vec3::new(
                if i & 1 == 0 { b.min.x } else { b.max.x },
                if i & 2 == 0 { b.min.y } else { b.max.y },
                if i & 4 == 0 { b.min.z } else { b.max.z },
            );
            let (pu, pv) = (self.u.dot(p), self.v.dot(p));
            u0 = u0.min(pu);
            u1 = u1.max(pu);
            v0 = v0.min(pv);
            v1 = v1.max(pv);
        }
        (
            self.w / 2.0 + (u0 - self.cu) * self.scale,
            self.h / 2.0 - (v1 - self.cv) * self.scale,
            self.w / 2.0 + (u1 - self.cu) * self.scale,
            self.h / 2.0 - (v0 - self.cv) * self.scale,
        )
    }

    fn depth(&self, b: &Aabb) -> f64 {
        let n = cross(self.u, self.v);
        let c = b.center();
        let e = b.half_extents();
        n.dot(c) + n.x.abs() * e.x + n.y.abs() * e.y + n.z.abs() * e.z
    }
}

fn cross(a: Vec3, b: Vec3) -> Vec3 {
    Vec3::new(a.y * b.z - a.z * b.y, a.z * b.x - a.x * b.z, a.x * b.y - a.y * b.x)
}

/// Inclusive pixel range whose centers lie in `[lo, hi)`, clipped to `n`.
fn span(lo: f64, hi: f64, n: u32) -> Option<(u32, u32)> {
    let a = (lo - 0.5).ceil().max(0.0);
    let b = ((hi - 0.5).ceil() - 1.0).min(n as f64 - 1.0);
    (a <= b).then_some((a as u32, b as u32))
}

fn pixel_rect(r: (f64, f64, f64, f64), w: u32, h: u32) -> Option<PixelBox> {
    let (x0, x1) = span(r.0, r.2, w)?;
    let (y0, y1) = span(r.1, r.3, h)?;
    Some(PixelBox { x0, y0, x1, y1 })
}

fn fill(img: &mut Raster, b: PixelBox, c: Rgb) {
    for y in b.y0..=b.y1 {
        for x in b.x0..=b.x1 {
            img.set(x, y, c);
        }
    }
}

fn outline(img: &mut Raster, b: PixelBox, c: Rgb, mask: Option<PixelBox>) {
    let mut put = |x: u32, y: u32| {
        if mask.is_none_or(|m| x >= m.x0 && x <= m.x1 && y >= m.y0 && y <= m.y1) {
            img.set(x, y, c);
        }
    };
    for x in b.x0..=b.x1 {
        put(x, b.y0);
        put(x, b.y1);
    }
    for y in b.y0..=b.y1 {
        put(b.x0, y);
        put(b.x1, y);
    }
}

fn intersect(b: PixelBox, m: Option<PixelBox>) -> Option<PixelBox> {
    let Some(m) = m else { return Some(b) };
    let c = PixelBox { x0: b.x0.max(m.x0), y0: b.y0.max(m.y0), x1: b.x1.min(m.x1), y1: b.y1.min(m.y1) };
    (c.x0 <= c.x1 && c.y0 <= c.y1).then_some(c)
}

fn paint(world: &WorldState, view: &Viewpoint, cam: &Camera, mask: Option<(f64, f64, f64, f64)>) -> Raster {
    let mut img = Raster::new(view.width, view.height, BACKGROUND);
    let (w, h) = (view.width, view.height);
    let mask = match mask {
        None => None,
        Some(m) => match pixel_rect(m, w, h) {
            Some(px) => Some(px),
            None => return img,
        },
    };
    for z in &world.zones {
        if let Some(b) = pixel_rect(cam.rect(&z.aabb), w, h) {
            outline(&mut img, b, ZONE_GRAY, mask);
        }
    }
    let mut order: Vec<usize> = (0..world.objects.len()).collect();
    order.sort_by(|&a, &b| cam.depth(&world.objects[a].aabb()).total_cmp(&cam.depth(&world.objects[b].aabb())));
    for i in order {
        let o = &world.objects[i];
        let color = if o.fixed { FIXED_BLACK } else { palette(&o.color) };
        if let Some(b) = pixel_rect(cam.rect(&o.aabb()), w, h).and_then(|b| intersect(b, mask)) {
            fill(&mut img, b, color);
        }
    }
    if view.show_ee {
        if let Some(b) = pixel_rect(cam.rect(&world.ee_box()), w, h) {
            outline(&mut img, b, EE_ORANGE, mask);
        }
    }
    img
}

/// Renders `world` from `view`. Fails when the scene bounds do not fit the
/// canvas at the view scale.
pub fn render_view(world: &WorldState, view: &Viewpoint) -> Result<Raster, RenderError> {
    render_framed(world, view, &world.bounds())
}

/// Like [`render_view`] but centers on `frame` (when the view has no fixed
/// center) and checks that `frame` fits.
pub fn render_framed(world: &WorldState, view: &Viewpoint, frame: &Aabb) -> Result<Raster, RenderError> {
    view.validate()?;
    let center = view.center.unwrap_or_else(|| frame.center());
    let cam = Camera::new(view, center, view.scale);
    let (x0, y0, x1, y1) = cam.rect(frame);
    let eps = 1e-9;
    if x0 < -eps || y0 < -eps || x1 > cam.w + eps || y1 > cam.h + eps {
        return Err(RenderError::CanvasTooSmall { need_w: x1 - x0, need_h: y1 - y0, w: view.width, h: view.height });
    }
    Ok(paint(world, view, &cam, None))
}

/// Renders only `region`, centered on the canvas at `scale × zoom`.
pub fn roi_zoom(world: &WorldState, view: &Viewpoint, region: &Aabb, zoom: f64) -> Result<Raster, RenderError> {
    view.validate()?;
    if !(zoom >= 1.0 && zoom.is_finite()) {
        return Err(RenderError::InvalidView(format!("zoom {zoom}")));
    }
    let bounds = world.bounds();
    let overlaps = region.min.x <= bounds.max.x
        && bounds.min.x <= region.max.x
        && region.min.y <= bounds.max.y
        && bounds.min.y <= region.max.y
        && region.min.z <= bounds.max.z
        && bounds.min.z <= region.max.z;
    if !region.is_valid() || !overlaps {
        return Err(RenderError::EmptyRegion);
    }
    let cam = Camera::new(view, region.center(), view.scale * zoom);
    Ok(paint(world, view, &cam, Some(cam.rect(region))))
}
