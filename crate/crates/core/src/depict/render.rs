//! Rasterization of a laid-out molecule with optional green highlighting.
//!
//! Highlight shapes are filled hard-edged (a pixel is inside when its center
//! is), so the painter's record of the region is exact. Ink is accumulated as
//! per-pixel coverage (maximum over strokes, anti-aliased by distance) and
//! composited once: black over the background, a dark shade of green over the
//! highlight.

use serde::{Deserialize, Serialize};

use super::font::{glyph, GLYPH_HEIGHT, GLYPH_WIDTH};
use super::layout::{Layout, Point};
use super::raster::{MaskImage, RasterImage, GREEN};
use crate::chem::{BondOrder, Element, MoleculeGraph};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct RenderConfig {
    /// Square canvas edge in pixels.
    pub image_size: u32,
    /// Ink line width in pixels.
    pub stroke_width: f64,
    /// Fraction of the canvas the padded molecule may span.
    pub fill_fraction: f64,
    /// Upper bound on the bond length in pixels, so small molecules are not
    /// blown up.
    pub max_bond_px: f64,
    /// Highlight disc radius around an atom, in bond lengths. Discs of
    /// labeled atoms grow to enclose the label.
    pub atom_radius: f64,
    /// Highlight capsule half-width around a bond, in bond lengths.
    pub bond_radius: f64,
}

impl Default for RenderConfig {
    fn default() -> Self {
        RenderConfig {
            image_size: 224,
            stroke_width: 2.0,
            fill_fraction: 0.85,
            max_bond_px: 30.0,
            atom_radius: 0.35,
            bond_radius: 0.2,
        }
    }
}

/// What to paint green.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Highlight {
    Atom(usize),
    Bond(usize),
    /// Union of member-atom discs and member-bond capsules.
    Region { atoms: Vec<usize>, bonds: Vec<usize> },
}

#[derive(Debug, Clone)]
pub struct Rendered {
    pub image: RasterImage,
    /// Pixels the painter filled green, before ink was drawn over them.
    pub highlight_region: Option<MaskImage>,
}

/// Fraction of the highlight color kept under solid ink, so strokes across a
/// highlight stay above the detector's value threshold.
pub const HIGHLIGHT_INK_SHADE: f64 = 0.45;

/// Bond-length units to pixels.
#[derive(Debug, Clone, Copy)]
struct Transform {
    scale: f64,
    center: Point,
    half: f64,
}

impl Transform {
    fn new(layout: &Layout, cfg: &RenderConfig) -> Self {
        let (lo, hi) = layout.bounding_box();
        let margin = 0.5;
        let span = (hi[0] - lo[0]).max(hi[1] - lo[1]) + 2.0 * margin;
        let size = cfg.image_size as f64;
        let scale = (cfg.fill_fraction * size / span).min(cfg.max_bond_px);
        Transform {
            scale,
            center: [(lo[0] + hi[0]) / 2.0, (lo[1] + hi[1]) / 2.0],
            half: size / 2.0,
        }
    }

    fn px(&self, p: Point) -> Point {
        [
            self.half + (p[0] - self.center[0]) * self.scale,
            self.half - (p[1] - self.center[1]) * self.scale,
        ]
    }
}

/// Bond length in pixels for this layout and configuration.
pub fn bond_length_px(layout: &Layout, cfg: &RenderConfig) -> f64 {
    Transform::new(layout, cfg).scale
}

enum Shape {
    Disc(Point, f64),
    Capsule(Point, Point, f64),
    Polygon(Vec<Point>),
}

fn seg_dist(p: Point, a: Point, b: Point) -> f64 {
    let ab = [b[0] - a[0], b[1] - a[1]];
    let ap = [p[0] - a[0], p[1] - a[1]];
    let len2 = ab[0] * ab[0] + ab[1] * ab[1];
    let t = if len2 == 0.0 {
        0.0
    } else {
        ((ap[0] * ab[0] + ap[1] * ab[1]) / len2).clamp(0.0, 1.0)
    };
    let q = [a[0] + t * ab[0], a[1] + t * ab[1]];
    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2)).sqrt()
}

impl Shape {
    fn contains(&self, p: Point) -> bool {
        match *self {
            Shape::Disc(c, r) => (p[0] - c[0]).powi(2) + (p[1] - c[1]).powi(2) <= r * r,
            Shape::Capsule(a, b, r) => seg_dist(p, a, b) <= r,
            Shape::Polygon(ref v) => {
                let mut inside = false;
                for (i, a) in v.iter().enumerate() {
                    let b = v[(i + 1) % v.len()];
                    if (a[1] > p[1]) != (b[1] > p[1]) && p[0] < a[0] + (p[1] - a[1]) / (b[1] - a[1]) * (b[0] - a[0]) {
                        inside = !inside;
                    }
                }
                inside
            }
        }
    }

    fn bbox(&self) -> (Point, Point) {
        match *self {
            Shape::Disc(c, r) => ([c[0] - r, c[1] - r], [c[0] + r, c[1] + r]),
            Shape::Capsule(a, b, r) => (
                [a[0].min(b[0]) - r, a[1].min(b[1]) - r],
                [a[0].max(b[0]) + r, a[1].max(b[1]) + r],
            ),
            Shape::Polygon(ref v) => v.iter().fold(
                ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]),
                |(lo, hi), p| ([lo[0].min(p[0]), lo[1].min(p[1])], [hi[0].max(p[0]), hi[1].max(p[1])]),
            ),
        }
    }
}

/// Pixel index range covering `[lo, hi]`, clipped to the canvas.
fn span(lo: f64, hi: f64, size: u32) -> std::ops::Range<u32> {
    let a = (lo.floor() - 1.0).max(0.0) as u32;
    let b = ((hi.ceil() + 1.0).max(0.0) as u32).min(size);
    a.min(b)..b
}

struct Ink {
    size: u32,
    cov: Vec<f32>,
}

impl Ink {
    fn put(&mut self, x: u32, y: u32, c: f64) {
        let i = (y * self.size + x) as usize;
        let c = c as f32;
        if c > self.cov[i] {
            self.cov[i] = c;
        }
    }

    fn line(&mut self, a: Point, b: Point, width: f64) {
        let h = width / 2.0 + 0.5;
        for y in span(a[1].min(b[1]) - h, a[1].max(b[1]) + h, self.size) {
            for x in span(a[0].min(b[0]) - h, a[0].max(b[0]) + h, self.size) {
                let d = seg_dist([x as f64 + 0.5, y as f64 + 0.5], a, b);
                let c = (h - d).clamp(0.0, 1.0);
                if c > 0.0 {
                    self.put(x, y, c);
                }
            }
        }
    }

    fn circle(&mut self, c: Point, r: f64, width: f64) {
        let h = width / 2.0 + 0.5;
        for y in span(c[1] - r - h, c[1] + r + h, self.size) {
            for x in span(c[0] - r - h, c[0] + r + h, self.size) {
                let d = ((x as f64 + 0.5 - c[0]).powi(2) + (y as f64 + 0.5 - c[1]).powi(2)).sqrt();
                let cov = (h - (d - r).abs()).clamp(0.0, 1.0);
                if cov > 0.0 {
                    self.put(x, y, cov);
                }
            }
        }
    }

    /// Solid glyphs from the embedded bitmap font, centered on `c`.
    fn text(&mut self, text: &str, c: Point, glyph_scale: u32) {
        let mut pixels: Vec<(i64, i64)> = Vec::new();
        for (k, ch) in text.chars().enumerate() {
            for (row, bits) in glyph(ch).iter().enumerate() {
                for col in 0..GLYPH_WIDTH {
                    if bits & (1 << (GLYPH_WIDTH - 1 - col)) != 0 {
                        pixels.push((k as i64 * (GLYPH_WIDTH as i64 + 1) + col as i64, row as i64));
                    }
                }
            }
        }
        if pixels.is_empty() {
            return;
        }
        let s = glyph_scale as i64;
        let (x0, x1) = (
            pixels.iter().map(|p| p.0).min().unwrap(),
            pixels.iter().map(|p| p.0).max().unwrap(),
        );
        let (y0, y1) = (
            pixels.iter().map(|p| p.1).min().unwrap(),
            pixels.iter().map(|p| p.1).max().unwrap(),
        );
        let w = (x1 - x0 + 1) * s;
        let h = (y1 - y0 + 1) * s;
        let left = (c[0] - w as f64 / 2.0).round() as i64;
        let top = (c[1] - h as f64 / 2.0).round() as i64;
        for (gx, gy) in pixels {
            for dy in 0..s {
                for dx in 0..s {
                    let x = left + (gx - x0) * s + dx;
                    let y = top + (gy - y0) * s + dy;
                    if x >= 0 && y >= 0 && x < self.size as i64 && y < self.size as i64 {
                        self.put(x as u32, y as u32, 1.0);
                    }
                }
            }
        }
    }
}

/// Atoms drawn with an element label: heteroatoms, charged atoms, and
/// isolated atoms.
pub fn is_labeled(g: &MoleculeGraph, atom: usize) -> bool {
    let a = g.atom(atom);
    a.element != Element::C || a.formal_charge != 0 || g.degree(atom) == 0
}

fn label_text(g: &MoleculeGraph, atom: usize) -> String {
    let a = g.atom(atom);
    let mut s = a.element.symbol().to_string();
    match a.formal_charge {
        0 => {}
        1 => s.push('+'),
        -1 => s.push('-'),
        c if c > 0 => s.push_str(&format!("{c}+")),
        c => s.push_str(&format!("{}-", -(c as i16))),
    }
    s
}

/// Pixel width and height of a label's glyph box.
fn label_box(text: &str, glyph_scale: u32) -> (f64, f64) {
    let n = text.chars().count();
    let w = (n * (GLYPH_WIDTH + 1)).saturating_sub(1) * glyph_scale as usize;
    (w as f64, (GLYPH_HEIGHT * glyph_scale as usize) as f64)
}

/// Clearance between a label's corners and the edge of its highlight disc.
const LABEL_MARGIN_PX: f64 = 2.0;

fn glyph_scale_for(bond_px: f64) -> u32 {
    ((bond_px / 15.0).round() as u32).max(1)
}

/// Radius in pixels of the highlight disc around `atom` at bond length `s` pixels.
pub fn atom_disc_radius(g: &MoleculeGraph, atom: usize, s: f64, cfg: &RenderConfig) -> f64 {
    let r = cfg.atom_radius * s;
    if !is_labeled(g, atom) {
        return r;
    }
    let (w, h) = label_box(&label_text(g, atom), glyph_scale_for(s));
    r.max((w * w + h * h).sqrt() / 2.0 + LABEL_MARGIN_PX)
}

/// Offsets of the extra lines of multiple bonds, in bond lengths.
const RING_DOUBLE_OFFSET: f64 = 0.18;
const DOUBLE_OFFSET: f64 = 0.1;
const TRIPLE_OFFSET: f64 = 0.14;

fn bond_capsule_radius(g: &MoleculeGraph, bond: usize, s: f64, cfg: &RenderConfig) -> f64 {
    let offset = match g.bond(bond).order {
        BondOrder::Single | BondOrder::Aromatic => return cfg.bond_radius * s,
        BondOrder::Double if g.bond_in_ring(bond) => RING_DOUBLE_OFFSET,
        BondOrder::Double => DOUBLE_OFFSET,
        BondOrder::Triple => TRIPLE_OFFSET,
    };
    (cfg.bond_radius * s).max(offset * s + cfg.stroke_width / 2.0 + LABEL_MARGIN_PX)
}

fn highlight_shapes(g: &MoleculeGraph, px: &[Point], h: &Highlight, s: f64, cfg: &RenderConfig) -> Vec<Shape> {
    let disc = |a: usize| Shape::Disc(px[a], atom_disc_radius(g, a, s, cfg));
    let capsule = |b: usize| {
        let bond = g.bond(b);
        Shape::Capsule(px[bond.a], px[bond.b], bond_capsule_radius(g, b, s, cfg))
    };
    match h {
        Highlight::Atom(a) => vec![disc(*a)],
        Highlight::Bond(b) => vec![capsule(*b)],
        Highlight::Region { atoms, bonds } => {
            // Rings lying wholly inside the region are filled as well.
            let info = g.ring_info();
            let rings = info
                .rings
                .iter()
                .zip(&info.ring_bonds)
                .filter(|(_, rb)| rb.iter().all(|b| bonds.contains(b)))
                .map(|(ring, _)| Shape::Polygon(ring.iter().map(|&a| px[a]).collect()));
            atoms
                .iter()
                .map(|&a| disc(a))
                .chain(bonds.iter().map(|&b| capsule(b)))
                .chain(rings)
                .collect()
        }
    }
}

/// Ring whose interior is used to offset the inner line of a ring double bond.
fn ring_center_for_bond(g: &MoleculeGraph, px: &[Point], bond: usize) -> Option<Point> {
    let info = g.ring_info();
    let r = info
        .ring_bonds
        .iter()
        .enumerate()
        .filter(|(_, bs)| bs.contains(&bond))
        .min_by_key(|(_, bs)| bs.len())?
        .0;
    let n = info.rings[r].len() as f64;
    let mut c = [0.0; 2];
    for &a in &info.rings[r] {
        c[0] += px[a][0] / n;
        c[1] += px[a][1] / n;
    }
    Some(c)
}

/// Renders onto a white `image_size`² canvas. An empty graph yields an
/// all-white image.
pub fn render(g: &MoleculeGraph, layout: &Layout, highlight: Option<&Highlight>, cfg: &RenderConfig) -> Rendered {
    let size = cfg.image_size;
    let mut image = RasterImage::white(size, size);
    if g.is_empty() {
        return Rendered {
            image,
            highlight_region: highlight.map(|_| MaskImage::empty(size, size)),
        };
    }
    let t = Transform::new(layout, cfg);
    let s = t.scale;
    let px: Vec<Point> = layout.coords.iter().map(|&p| t.px(p)).collect();

    let highlight_region = highlight.map(|h| {
        let mut region = MaskImage::empty(size, size);
        for shape in highlight_shapes(g, &px, h, s, cfg) {
            let (lo, hi) = shape.bbox();
            for y in span(lo[1], hi[1], size) {
                for x in span(lo[0], hi[0], size) {
                    if shape.contains([x as f64 + 0.5, y as f64 + 0.5]) {
                        region.set(x, y, true);
                        image.set_pixel(x, y, GREEN);
                    }
                }
            }
        }
        region
    });

    let mut ink = Ink {
        size,
        cov: vec![0.0; (size * size) as usize],
    };
    let w = cfg.stroke_width;
    let labeled: Vec<bool> = (0..g.atom_count()).map(|a| is_labeled(g, a)).collect();
    let trim = 0.3 * s;
    for (bi, bond) in g.bonds().iter().enumerate() {
        let (mut a, mut b) = (px[bond.a], px[bond.b]);
        let len = ((b[0] - a[0]).powi(2) + (b[1] - a[1]).powi(2)).sqrt();
        if len < 1e-9 {
            continue;
        }
        let dir = [(b[0] - a[0]) / len, (b[1] - a[1]) / len];
        let normal = [-dir[1], dir[0]];
        if labeled[bond.a] {
            a = [a[0] + dir[0] * trim, a[1] + dir[1] * trim];
        }
        if labeled[bond.b] {
            b = [b[0] - dir[0] * trim, b[1] - dir[1] * trim];
        }
        let off = |p: Point, d: f64| [p[0] + normal[0] * d, p[1] + normal[1] * d];
        match bond.order {
            BondOrder::Single | BondOrder::Aromatic => ink.line(a, b, w),
            BondOrder::Double => match ring_center_for_bond(g, &px, bi) {
                Some(c) => {
                    ink.line(a, b, w);
                    let mid = [(a[0] + b[0]) / 2.0, (a[1] + b[1]) / 2.0];
                    let side = if (c[0] - mid[0]) * normal[0] + (c[1] - mid[1]) * normal[1] >= 0.0 {
                        1.0
                    } else {
                        -1.0
                    };
                    let shrink = 0.15 * s;
                    let ia = [a[0] + dir[0] * shrink, a[1] + dir[1] * shrink];
                    let ib = [b[0] - dir[0] * shrink, b[1] - dir[1] * shrink];
                    ink.line(off(ia, side * RING_DOUBLE_OFFSET * s), off(ib, side * RING_DOUBLE_OFFSET * s), w);
                }
                None => {
                    let d = DOUBLE_OFFSET * s;
                    ink.line(off(a, d), off(b, d), w);
                    ink.line(off(a, -d), off(b, -d), w);
                }
            },
            BondOrder::Triple => {
                let d = TRIPLE_OFFSET * s;
                ink.line(a, b, w);
                ink.line(off(a, d), off(b, d), w);
                ink.line(off(a, -d), off(b, -d), w);
            }
        }
    }
    let info = g.ring_info();
    for ring in &info.rings {
        if !ring.iter().all(|&a| g.atom(a).aromatic) {
            continue;
        }
        let n = ring.len() as f64;
        let c = ring.iter().fold([0.0, 0.0], |acc, &a| [acc[0] + px[a][0] / n, acc[1] + px[a][1] / n]);
        let inradius = ring
            .iter()
            .zip(ring.iter().cycle().skip(1))
            .map(|(&a, &b)| {
                let m = [(px[a][0] + px[b][0]) / 2.0, (px[a][1] + px[b][1]) / 2.0];
                ((m[0] - c[0]).powi(2) + (m[1] - c[1]).powi(2)).sqrt()
            })
            .sum::<f64>()
            / n;
        let r = inradius - 0.35 * s;
        if r > 0.1 * s {
            ink.circle(c, r, w);
        }
    }
    let glyph_scale = glyph_scale_for(s);
    for a in 0..g.atom_count() {
        if labeled[a] {
            ink.text(&label_text(g, a), px[a], glyph_scale);
        }
    }

    for y in 0..size {
        for x in 0..size {
            let c = ink.cov[(y * size + x) as usize] as f64;
            if c > 0.0 {
                let base = image.pixel(x, y);
                let highlighted = highlight_region.as_ref().is_some_and(|m| m.get(x, y));
                let keep = if highlighted {
                    1.0 - c * (1.0 - HIGHLIGHT_INK_SHADE)
                } else {
                    1.0 - c
                };
                let rgb = base.map(|v| (v as f64 * keep).round() as u8);
                image.set_pixel(x, y, rgb);
            }
        }
    }
    debug_assert!(highlight.is_some() || image.as_bytes().chunks(3).all(|p| p[0] == p[1] && p[1] == p[2]));
    Rendered {
        image,
        highlight_region,
    }
}
