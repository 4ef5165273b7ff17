//! Green-highlight detection in HSV space.

use serde::{Deserialize, Serialize};

use super::raster::{MaskImage, RasterImage};
use super::DepictError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct HsvRange {
    /// Degrees.
    pub hue_min: f64,
    pub hue_max: f64,
    pub sat_min: f64,
    pub val_min: f64,
}

impl Default for HsvRange {
    fn default() -> Self {
        HsvRange {
            hue_min: 90.0,
            hue_max: 150.0,
            sat_min: 0.4,
            val_min: 0.4,
        }
    }
}

/// `(hue in degrees [0, 360), saturation, value)`; hue is 0 for grays.
pub fn rgb_to_hsv(rgb: [u8; 3]) -> (f64, f64, f64) {
    let [r, g, b] = rgb.map(|c| c as f64 / 255.0);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    let v = max;
    let s = if max == 0.0 { 0.0 } else { delta / max };
    if delta == 0.0 {
        return (0.0, s, v);
    }
    let h = if max == r {
        60.0 * (((g - b) / delta).rem_euclid(6.0))
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    (h, s, v)
}

impl HsvRange {
    pub fn contains(&self, rgb: [u8; 3]) -> bool {
        let (h, s, v) = rgb_to_hsv(rgb);
        h >= self.hue_min && h <= self.hue_max && s >= self.sat_min && v >= self.val_min
    }

}

/// Pixels passing the HSV threshold, with no recovery or dilation.
pub fn green_pixels(img: &RasterImage, range: &HsvRange) -> MaskImage {
    let mut m = MaskImage::empty(img.width(), img.height());
    for y in 0..img.height() {
        for x in 0..img.width() {
            if range.contains(img.pixel(x, y)) {
                m.set(x, y, true);
            }
        }
    }
    m
}

/// HSV threshold followed by dilation by `dilation` pixels.
pub fn extract_green_mask(img: &RasterImage, range: &HsvRange, dilation: u32) -> Result<MaskImage, DepictError> {
    let raw = green_pixels(img, range);
    if raw.is_empty() {
        return Err(DepictError::EmptyMask);
    }
    Ok(raw.dilate(dilation))
}
