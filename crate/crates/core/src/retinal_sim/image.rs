use serde::Serialize;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::gaze_transform::{GazeState, Vec3};

/// Plain 8-bit RGB raster, row-major from the top-left corner.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize) -> Self {
        RgbImage {
            width,
            height,
            data: vec![0; width * height * 3],
        }
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let i = (y * self.width + x) * 3;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set_pixel(&mut self, x: usize, y: usize, c: [u8; 3]) {
        let i = (y * self.width + x) * 3;
        self.data[i..i + 3].copy_from_slice(&c);
    }

    /// Binary PPM (P6, maxval 255).
    pub fn to_ppm(&self) -> Vec<u8> {
        let mut out = format!("P6\n{} {}\n255\n", self.width, self.height).into_bytes();
        out.extend_from_slice(&self.data);
        out
    }

    pub fn write_ppm(&self, w: &mut impl Write) -> Result<()> {
        w.write_all(&self.to_ppm())?;
        Ok(())
    }

    pub fn from_ppm(bytes: &[u8]) -> Result<Self> {
        let bad = |m: &str| Error::Io(format!("bad PPM: {m}"));
        let mut pos = 0;
        let mut fields = Vec::with_capacity(4);
        while fields.len() < 4 {
            while pos < bytes.len() && bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if pos < bytes.len() && bytes[pos] == b'#' {
                while pos < bytes.len() && bytes[pos] != b'\n' {
                    pos += 1;
                }
                continue;
            }
            let start = pos;
            while pos < bytes.len() && !bytes[pos].is_ascii_whitespace() {
                pos += 1;
            }
            if start == pos {
                return Err(bad("truncated header"));
            }
            fields.push(std::str::from_utf8(&bytes[start..pos]).map_err(|_| bad("header"))?);
        }
        if fields[0] != "P6" {
            return Err(bad("only P6 is supported"));
        }
        let parse = |s: &str| s.parse::<usize>().map_err(|_| bad("header number"));
        let (w, h, maxval) = (parse(fields[1])?, parse(fields[2])?, parse(fields[3])?);
        if maxval != 255 {
            return Err(bad("maxval must be 255"));
        }
        pos += 1;
        let n = w * h * 3;
        if bytes.len() < pos + n {
            return Err(bad("truncated pixel data"));
        }
        Ok(RgbImage {
            width: w,
            height: h,
            data: bytes[pos..pos + n].to_vec(),
        })
    }

    pub fn read_ppm_file(path: &Path) -> Result<Self> {
        let mut buf = Vec::new();
        std::fs::File::open(path)?.read_to_end(&mut buf)?;
        Self::from_ppm(&buf)
    }
}

/// Viewing geometry recorded with a rendered image, enough to map any pixel
/// back to a visual direction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ImageGeometry {
    /// Tangent-plane extent `(left, right, bottom, top)` of the image.
    pub tan_bounds: [f64; 4],
    /// Unit gaze direction relative to the rendered eye.
    pub gaze_direction: Vec3,
    pub fov_h_deg: f64,
    pub fov_v_deg: f64,
}

impl ImageGeometry {
    /// Visual direction through the centre of pixel `(x, y)`.
    pub fn pixel_direction(&self, x: f64, y: f64, width: usize, height: usize) -> Vec3 {
        let [l, r, b, t] = self.tan_bounds;
        let tx = l + (x + 0.5) / width as f64 * (r - l);
        let ty = t - (y + 0.5) / height as f64 * (t - b);
        Vec3::new(tx, ty, -1.0).normalize()
    }

    /// Angle in degrees between the pixel's direction and the gaze.
    pub fn eccentricity_deg(&self, x: f64, y: f64, width: usize, height: usize) -> f64 {
        let d = self.pixel_direction(x, y, width, height);
        d.dot(&self.gaze_direction).clamp(-1.0, 1.0).acos().to_degrees()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RetinalImage {
    pub image: RgbImage,
    pub geometry: ImageGeometry,
    pub gaze: GazeState,
}

impl RetinalImage {
    pub fn width(&self) -> usize {
        self.image.width
    }

    pub fn height(&self) -> usize {
        self.image.height
    }

    /// Pixels with a visible red excess over green.
    pub fn count_pixels(&self, pred: impl Fn([u8; 3]) -> bool) -> usize {
        self.image.data.chunks_exact(3).filter(|c| pred([c[0], c[1], c[2]])).count()
    }
}
