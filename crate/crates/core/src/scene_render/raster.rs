use std::io::Write;
use std::path::Path;

use super::RenderError;

pub type Rgb = [u8; 3];

/// Row-major RGB8 image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Raster {
    pub width: u32,
    pub height: u32,
    pub data: Vec<u8>,
}

/// Inclusive pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PixelBox {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
}

impl PixelBox {
    pub fn center(&self) -> (f64, f64) {
        ((self.x0 + self.x1) as f64 / 2.0, (self.y0 + self.y1) as f64 / 2.0)
    }

    pub fn width(&self) -> u32 {
        self.x1 - self.x0 + 1
    }

    pub fn height(&self) -> u32 {
        self.y1 - self.y0 + 1
    }
}

impl Raster {
    pub fn new(width: u32, height: u32, fill: Rgb) -> Self {
        let n = width as usize * height as usize;
        let mut data = Vec::with_capacity(n * 3);
        for _ in 0..n {
            data.extend_from_slice(&fill);
        }
        Raster { width, height, data }
    }

    fn idx(&self, x: u32, y: u32) -> usize {
        (y as usize * self.width as usize + x as usize) * 3
    }

    pub fn get(&self, x: u32, y: u32) -> Rgb {
        let i = self.idx(x, y);
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set(&mut self, x: u32, y: u32, c: Rgb) {
        if x < self.width && y < self.height {
            let i = self.idx(x, y);
            self.data[i..i + 3].copy_from_slice(&c);
        }
    }

    pub fn pixels(&self) -> impl Iterator<Item = (u32, u32, Rgb)> + '_ {
        let w = self.width.max(1);
        self.data
            .chunks_exact(3)
            .enumerate()
            .map(move |(i, p)| (i as u32 % w, i as u32 / w, [p[0], p[1], p[2]]))
    }

    pub fn count(&self, c: Rgb) -> usize {
        self.data.chunks_exact(3).filter(|p| **p == c).count()
    }

    /// Distinct colors present, sorted.
    pub fn colors(&self) -> Vec<Rgb> {
        let mut v: Vec<Rgb> = self.data.chunks_exact(3).map(|p| [p[0], p[1], p[2]]).collect();
        v.sort_unstable();
        v.dedup();
        v
    }

    pub fn bbox(&self, c: Rgb) -> Option<PixelBox> {
        let mut b: Option<PixelBox> = None;
        for (x, y, p) in self.pixels() {
            if p == c {
                b = Some(match b {
                    None => PixelBox { x0: x, y0: y, x1: x, y1: y },
                    Some(b) => PixelBox { x0: b.x0.min(x), y0: b.y0.min(y), x1: b.x1.max(x), y1: b.y1.max(y) },
                });
            }
        }
        b
    }

    /// Binary PPM (`P6`), maxval 255.
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.data);
        out
    }

    pub fn from_ppm(bytes: &[u8]) -> Result<Self, RenderError> {
        let bad = || RenderError::Decode("not a binary PPM".into());
        let mut fields = Vec::new();
        let mut pos = 0;
        while fields.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(bad());
            }
            fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad())?.to_string());
        }
        pos += 1;
        if fields[0] != "P6" || fields[3] != "255" {
            return Err(bad());
        }
        let w: u32 = fields[1].parse().map_err(|_| bad())?;
        let h: u32 = fields[2].parse().map_err(|_| bad())?;
        let data = bytes.get(pos..).ok_or_else(bad)?.to_vec();
        if data.len() != w as usize * h as usize * 3 {
            return Err(bad());
        }
        Ok(Raster { width: w, height: h, data })
    }

    pub fn to_png(&self) -> Result<Vec<u8>, RenderError> {
        use image::ImageEncoder;
        let mut out = Vec::new();
        image::codecs::png::PngEncoder::new(&mut out)
            .write_image(&self.data, self.width, self.height, image::ExtendedColorType::Rgb8)
            .map_err(|e| RenderError::Encode(e.to_string()))?;
        Ok(out)
    }

    /// Writes PNG for `.png` paths and PPM otherwise.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<(), RenderError> {
        let path = path.as_ref();
        let bytes = match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("png") => self.to_png()?,
            _ => self.to_ppm(),
        };
        let mut f = std::fs::File::create(path)?;
        f.write_all(&bytes)?;
        Ok(())
    }

    /// Side by side; all heights must match.
    pub fn hconcat(parts: &[Raster]) -> Result<Raster, RenderError> {
        let Some(first) = parts.first() else {
            return Ok(Raster::new(0, 0, [0; 3]));
        };
        if parts.iter().any(|p| p.height != first.height) {
            return Err(RenderError::Layout("frames differ in height".into()));
        }
        let width: u32 = parts.iter().map(|p| p.width).sum();
        let mut data = Vec::with_capacity(width as usize * first.height as usize * 3);
        for y in 0..first.height as usize {
            for p in parts {
                let row = p.width as usize * 3;
                data.extend_from_slice(&p.data[y * row..(y + 1) * row]);
            }
        }
        Ok(Raster { width, height: first.height, data })
    }

    /// Stacked top to bottom; all widths must match.
    pub fn vconcat(parts: &[Raster]) -> Result<Raster, RenderError> {
        let Some(first) = parts.first() else {
            return Ok(Raster::new(0, 0, [0; 3]));
        };
        if parts.iter().any(|p| p.width != first.width) {
            return Err(RenderError::Layout("rows differ in width".into()));
        }
        let height = parts.iter().map(|p| p.height).sum();
        let data = parts.iter().flat_map(|p| p.data.iter().copied()).collect();
        Ok(Raster { width: first.width, height, data })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ppm_round_trip() {
        let mut r = Raster::new(3, 2, [255; 3]);
        r.set(1, 1, [1, 2, 3]);
        let bytes = r.to_ppm();
        assert!(bytes.starts_with(b"P6\n3 2\n255\n"));
        assert_eq!(Raster::from_ppm(&bytes).unwrap(), r);
        assert_eq!(r.bbox([1, 2, 3]), Some(PixelBox { x0: 1, y0: 1, x1: 1, y1: 1 }));
    }

    #[test]
    fn png_signature() {
        let png = Raster::new(4, 4, [10, 20, 30]).to_png().unwrap();
        assert_eq!(&png[..8], b"\x89PNG\r\n\x1a\n");
    }

    #[test]
    fn concat_shapes() {
        let a = Raster::new(2, 3, [0; 3]);
        let b = Raster::new(5, 3, [1; 3]);
        let h = Raster::hconcat(&[a.clone(), b]).unwrap();
        assert_eq!((h.width, h.height), (7, 3));
        assert_eq!(h.get(2, 0), [1; 3]);
        assert!(Raster::hconcat(&[a.clone(), Raster::new(2, 4, [0; 3])]).is_err());
        let v = Raster::vconcat(&[a.clone(), a]).unwrap();
        assert_eq!((v.width, v.height), (2, 6));
    }
}
