use std::path::Path;

use super::DepictError;

pub const WHITE: [u8; 3] = [255, 255, 255];
pub const GREEN: [u8; 3] = [0, 255, 0];

/// 8-bit RGB raster, row-major, origin top-left.
#[derive(Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: u32,
    height: u32,
    data: Vec<u8>,
}

impl std::fmt::Debug for RasterImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "RasterImage({}x{})", self.width, self.height)
    }
}

impl RasterImage {
    pub fn white(width: u32, height: u32) -> Self {
        RasterImage {
            width,
            height,
            data: vec![255; (width * height * 3) as usize],
        }
    }

    pub fn from_raw(width: u32, height: u32, data: Vec<u8>) -> Result<Self, DepictError> {
        if data.len() != (width * height * 3) as usize {
            return Err(DepictError::DimensionMismatch);
        }
        Ok(RasterImage { width, height, data })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    /// Interleaved RGB bytes.
    pub fn as_bytes(&self) -> &[u8] {
        &self.data
    }

    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = ((y * self.width + x) * 3) as usize;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    pub fn set_pixel(&mut self, x: u32, y: u32, rgb: [u8; 3]) {
        let i = ((y * self.width + x) * 3) as usize;
        self.data[i..i + 3].copy_from_slice(&rgb);
    }

    pub fn is_all_white(&self) -> bool {
        self.data.iter().all(|&b| b == 255)
    }

    pub fn save_png(&self, path: &Path) -> Result<(), DepictError> {
        image::save_buffer(path, &self.data, self.width, self.height, image::ExtendedColorType::Rgb8)?;
        Ok(())
    }

    pub fn load_png(path: &Path) -> Result<Self, DepictError> {
        let img = image::open(path)?.to_rgb8();
        let (w, h) = img.dimensions();
        Ok(RasterImage {
            width: w,
            height: h,
            data: img.into_raw(),
        })
    }
}

/// Binary mask; set pixels are the ones to whiten.
#[derive(Clone, PartialEq, Eq)]
pub struct MaskImage {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl std::fmt::Debug for MaskImage {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "MaskImage({}x{}, {} set)", self.width, self.height, self.count())
    }
}

impl MaskImage {
    pub fn empty(width: u32, height: u32) -> Self {
        MaskImage {
            width,
            height,
            bits: vec![false; (width * height) as usize],
        }
    }

    pub fn full(width: u32, height: u32) -> Self {
        MaskImage {
            width,
            height,
            bits: vec![true; (width * height) as usize],
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn get(&self, x: u32, y: u32) -> bool {
        self.bits[(y * self.width + x) as usize]
    }

    pub fn set(&mut self, x: u32, y: u32, v: bool) {
        self.bits[(y * self.width + x) as usize] = v;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        !self.bits.iter().any(|&b| b)
    }

    pub fn union_with(&mut self, other: &MaskImage) -> Result<(), DepictError> {
        if (self.width, self.height) != (other.width, other.height) {
            return Err(DepictError::DimensionMismatch);
        }
        for (a, &b) in self.bits.iter_mut().zip(&other.bits) {
            *a |= b;
        }
        Ok(())
    }

    /// Morphological dilation with a disc of the given pixel radius.
    pub fn dilate(&self, radius: u32) -> MaskImage {
        if radius == 0 {
            return self.clone();
        }
        let offsets = disc_offsets(radius as i64);
        let (w, h) = (self.width as i64, self.height as i64);
        let mut out = MaskImage::empty(self.width, self.height);
        for y in 0..h {
            for x in 0..w {
                if !self.bits[(y * w + x) as usize] {
                    continue;
                }
                for &(dx, dy) in &offsets {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx >= 0 && ny >= 0 && nx < w && ny < h {
                        out.bits[(ny * w + nx) as usize] = true;
                    }
                }
            }
        }
        out
    }

    /// Intersection over union; 1.0 when both masks are empty.
    pub fn iou(&self, other: &MaskImage) -> Result<f64, DepictError> {
        if (self.width, self.height) != (other.width, other.height) {
            return Err(DepictError::DimensionMismatch);
        }
        let (mut inter, mut union) = (0usize, 0usize);
        for (&a, &b) in self.bits.iter().zip(&other.bits) {
            inter += usize::from(a && b);
            union += usize::from(a || b);
        }
        Ok(if union == 0 { 1.0 } else { inter as f64 / union as f64 })
    }

    /// Grayscale PNG with set pixels white.
    pub fn save_png(&self, path: &Path) -> Result<(), DepictError> {
        let data: Vec<u8> = self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect();
        image::save_buffer(path, &data, self.width, self.height, image::ExtendedColorType::L8)?;
        Ok(())
    }
}

fn disc_offsets(r: i64) -> Vec<(i64, i64)> {
    (-r..=r)
        .flat_map(|dy| (-r..=r).map(move |dx| (dx, dy)))
        .filter(|&(dx, dy)| dx * dx + dy * dy <= r * r)
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dilation_disc() {
        let mut m = MaskImage::empty(9, 9);
        m.set(4, 4, true);
        // Radius-2 disc: 13 lattice points.
        assert_eq!(m.dilate(2).count(), 13);
        assert_eq!(m.dilate(0), m);
        let mut corner = MaskImage::empty(9, 9);
        corner.set(0, 0, true);
        assert_eq!(corner.dilate(1).count(), 3);
    }

    #[test]
    fn iou_fixture() {
        let mut a = MaskImage::empty(4, 1);
        let mut b = MaskImage::empty(4, 1);
        a.set(0, 0, true);
        a.set(1, 0, true);
        b.set(1, 0, true);
        b.set(2, 0, true);
        assert!((a.iou(&b).unwrap() - 1.0 / 3.0).abs() < 1e-12);
        assert!(a.iou(&MaskImage::empty(3, 1)).is_err());
    }

    #[test]
    fn png_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut img = RasterImage::white(5, 3);
        img.set_pixel(1, 2, [10, 20, 30]);
        let p = dir.path().join("x.png");
        img.save_png(&p).unwrap();
        assert_eq!(RasterImage::load_png(&p).unwrap(), img);
    }
}
