//! Synthetic ground-truth frames: rendered tags warped into backgrounds
//! under a pinhole camera, followed by a photometric perturbation chain.

use std::path::Path;

use image::{Rgb, RgbImage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::codec::TagFamily;
use crate::error::{Error, Result};
use crate::geometry::{Homography, Point2, Quad};
use crate::taggen::{render_tag, TagGeometry, TagPalette};

pub const MANIFEST_SCHEMA: &str = "chromatag.manifest.v1";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CameraModel {
    pub focal: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

impl Default for CameraModel {
    /// 752x480 sensor with a moderate field of view.
    fn default() -> Self {
        Self {
            focal: 600.0,
            cx: 376.0,
            cy: 240.0,
            width: 752,
            height: 480,
        }
    }
}

impl CameraModel {
    pub fn validate(&self) -> Result<()> {
        let inside = self.cx >= 0.0
            && self.cy >= 0.0
            && self.cx <= f64::from(self.width)
            && self.cy <= f64::from(self.height);
        if !(self.focal > 0.0) || !inside || self.width == 0 || self.height == 0 {
            return Err(Error::InvalidArgument(format!("invalid camera {self:?}")));
        }
        Ok(())
    }
}

/// Tag pose relative to the camera. The tag center sits on the optical axis
/// at `distance` (in tag cell units), so `viewing_angle_deg` is exactly the
/// angle between the tag normal and the ray to the camera. `translation`
/// then shifts the whole projection in the image.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScenePose {
    pub viewing_angle_deg: f64,
    pub in_plane_rotation_deg: f64,
    pub distance: f64,
    pub translation: Point2,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PhotometricPreset {
    pub name: String,
    pub gains: [f64; 3],
    #[serde(default)]
    pub bias: f64,
    #[serde(default)]
    pub blur_sigma: f64,
    #[serde(default)]
    pub noise_sigma: f64,
}

impl PhotometricPreset {
    pub fn neutral() -> Self {
        Self {
            name: "neutral".into(),
            gains: [1.0, 1.0, 1.0],
            bias: 0.0,
            blur_sigma: 0.0,
            noise_sigma: 0.0,
        }
    }

    pub fn wb() -> Self {
        Self {
            name: "WB".into(),
            blur_sigma: 1.0,
            noise_sigma: 2.0,
            ..Self::neutral()
        }
    }

    /// Warm, unbalanced lighting proxy.
    pub fn nwb() -> Self {
        Self {
            name: "NWB".into(),
            gains: [1.3, 0.9, 0.7],
            ..Self::wb()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.gains.iter().any(|&g| !(g > 0.0 && g.is_finite()))
            || !(self.blur_sigma >= 0.0)
            || !(self.noise_sigma >= 0.0)
        {
            return Err(Error::InvalidArgument(format!("invalid preset {:?}", self.name)));
        }
        Ok(())
    }
}

/// Canonical tag coordinates to image pixels for a pose.
pub fn pose_to_homography(pose: &ScenePose, cam: &CameraModel) -> Result<Homography> {
    let th = pose.viewing_angle_deg.to_radians();
    let ph = pose.in_plane_rotation_deg.to_radians();
    if !(0.0..90.0).contains(&pose.viewing_angle_deg) {
        return Err(Error::InvalidArgument(format!(
            "viewing angle must lie in [0, 90), got {}",
            pose.viewing_angle_deg
        )));
    }
    // nearest point of the tag, including the white ring
    let reach = TagGeometry::WHITE_HALF * std::f64::consts::SQRT_2;
    if !(pose.distance - reach * th.sin() > 1e-6) {
        return Err(Error::Synth("tag intersects or lies behind the camera".into()));
    }
    let (s, c) = ph.sin_cos();
    let (st, ct) = th.sin_cos();
    // R = Rx(th) * Rz(ph); only the first two columns matter for a plane
    let r1 = [c, s * ct, s * st];
    let r2 = [-s, c * ct, c * st];
    let t = [0.0, 0.0, pose.distance];
    let (px, py) = (cam.cx + pose.translation.x, cam.cy + pose.translation.y);
    let k = [[cam.focal, 0.0, px], [0.0, cam.focal, py], [0.0, 0.0, 1.0]];
    let mut m = [[0.0; 3]; 3];
    for (row, krow) in m.iter_mut().zip(k.iter()) {
        let dot = |v: &[f64; 3]| krow[0] * v[0] + krow[1] * v[1] + krow[2] * v[2];
        *row = [dot(&r1), dot(&r2), dot(&t)];
    }
    Ok(Homography::from_matrix(m)?)
}

/// Ground-truth quad: the black/white boundary projected through `h`.
pub fn project_canonical(h: &Homography) -> Result<[Point2; 4]> {
    let mut out = [Point2::default(); 4];
    for (o, c) in out.iter_mut().zip(TagGeometry::CANONICAL_CORNERS) {
        *o = h.project(c)?;
    }
    Ok(out)
}

/// Rotation the detector should report for a tag rendered with `rotation`
/// whose canonical corners land at `projected`.
pub fn expected_rotation(rotation: u8, projected: &[Point2; 4]) -> Result<u8> {
    let q = Quad::new(*projected)?;
    let first = q.starting_top_left().corners[0];
    let s = projected.iter().position(|&p| p == first).unwrap_or(0) as u8;
    Ok((rotation + 4 - s) % 4)
}

/// Distance that makes the projected black/white square `tag_size` pixels
/// on a side (square root of its area).
pub fn solve_distance(
    tag_size: f64,
    viewing_angle_deg: f64,
    in_plane_rotation_deg: f64,
    cam: &CameraModel,
) -> Result<f64> {
    let side = 2.0 * TagGeometry::BLACK_HALF;
    let mut d = cam.focal * side / tag_size;
    for _ in 0..50 {
        let pose = ScenePose {
            viewing_angle_deg,
            in_plane_rotation_deg,
            distance: d,
            translation: Point2::default(),
        };
        let h = pose_to_homography(&pose, cam)?;
        let size = Quad::new(project_canonical(&h)?)?.area().sqrt();
        let ratio = size / tag_size;
        d *= ratio;
        if (ratio - 1.0).abs() < 1e-9 {
            break;
        }
    }
    Ok(d)
}

fn bilinear(img: &RgbImage, q: Point2) -> [f32; 3] {
    let (w, h) = (img.width() as i64, img.height() as i64);
    let fx = q.x - 0.5;
    let fy = q.y - 0.5;
    let (x0, y0) = (fx.floor(), fy.floor());
    let (ax, ay) = ((fx - x0) as f32, (fy - y0) as f32);
    let px = |x: i64, y: i64| img.get_pixel(x.clamp(0, w - 1) as u32, y.clamp(0, h - 1) as u32).0;
    let (x0, y0) = (x0 as i64, y0 as i64);
    let (p00, p10, p01, p11) = (px(x0, y0), px(x0 + 1, y0), px(x0, y0 + 1), px(x0 + 1, y0 + 1));
    let mut out = [0.0f32; 3];
    for c in 0..3 {
        let top = f32::from(p00[c]) * (1.0 - ax) + f32::from(p10[c]) * ax;
        let bot = f32::from(p01[c]) * (1.0 - ax) + f32::from(p11[c]) * ax;
        out[c] = top * (1.0 - ay) + bot * ay;
    }
    out
}

/// Supersampling factor per axis for the inverse warp.
const SUPERSAMPLE: u32 = 3;

/// Float RGB working buffer.
struct Planar {
    w: usize,
    h: usize,
    data: Vec<[f32; 3]>,
}

impl Planar {
    fn from_image(img: &RgbImage) -> Self {
        Self {
            w: img.width() as usize,
            h: img.height() as usize,
            data: img.pixels().map(|p| p.0.map(f32::from)).collect(),
        }
    }

    fn to_image(&self) -> RgbImage {
        let mut out = RgbImage::new(self.w as u32, self.h as u32);
        for (o, v) in out.pixels_mut().zip(&self.data) {
            *o = Rgb(v.map(|c| c.round().clamp(0.0, 255.0) as u8));
        }
        out
    }
}

fn gaussian_kernel(sigma: f64) -> Vec<f32> {
    let r = (3.0 * sigma).ceil() as i64;
    let mut k: Vec<f64> = (-r..=r)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= s);
    k.into_iter().map(|v| v as f32).collect()
}

fn blur(buf: &mut Planar, sigma: f64) {
    if sigma <= 0.0 {
        return;
    }
    let k = gaussian_kernel(sigma);
    let r = (k.len() / 2) as i64;
    let (w, h) = (buf.w as i64, buf.h as i64);
    let mut tmp = vec![[0.0f32; 3]; buf.data.len()];
    for y in 0..h {
        for x in 0..w {
            let mut acc = [0.0f32; 3];
            for (i, kv) in k.iter().enumerate() {
                let xx = (x + i as i64 - r).clamp(0, w - 1);
                let p = buf.data[(y * w + xx) as usize];
                for c in 0..3 {
                    acc[c] += kv * p[c];
                }
            }
            tmp[(y * w + x) as usize] = acc;
        }
    }
    for y in 0..h {
        for x in 0..w {
            let mut acc = [0.0f32; 3];
            for (i, kv) in k.iter().enumerate() {
                let yy = (y + i as i64 - r).clamp(0, h - 1);
                let p = tmp[(yy * w + x) as usize];
                for c in 0..3 {
                    acc[c] += kv * p[c];
                }
            }
            buf.data[(y * w + x) as usize] = acc;
        }
    }
}

/// Apply gains, bias, blur and noise in that order.
pub fn apply_photometric(image: &RgbImage, preset: &PhotometricPreset, seed: u64) -> RgbImage {
    let mut buf = Planar::from_image(image);
    let gains = preset.gains.map(|g| g as f32);
    let bias = preset.bias as f32;
    for v in &mut buf.data {
        for c in 0..3 {
            v[c] = v[c] * gains[c] + bias;
        }
    }
    blur(&mut buf, preset.blur_sigma);
    if preset.noise_sigma > 0.0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let normal = Normal::new(0.0f32, preset.noise_sigma as f32).expect("sigma is finite");
        for v in &mut buf.data {
            for c in v.iter_mut() {
                *c += normal.sample(&mut rng);
            }
        }
    }
    buf.to_image()
}

/// RGGB mosaic followed by bilinear demosaicing.
pub fn bayer_roundtrip(image: &RgbImage) -> RgbImage {
    let (w, h) = (image.width() as i64, image.height() as i64);
    let channel = |x: i64, y: i64| -> usize {
        match (y & 1, x & 1) {
            (0, 0) => 0,
            (1, 1) => 2,
            _ => 1,
        }
    };
    let raw = |x: i64, y: i64| -> f32 {
        let (x, y) = (x.clamp(0, w - 1), y.clamp(0, h - 1));
        f32::from(image.get_pixel(x as u32, y as u32)[channel(x, y)])
    };
    RgbImage::from_fn(w as u32, h as u32, |x, y| {
        let (x, y) = (i64::from(x), i64::from(y));
        let mut out = [0u8; 3];
        for (c, o) in out.iter_mut().enumerate() {
            let (mut s, mut n) = (0.0, 0.0);
            for dy in -1..=1 {
                for dx in -1..=1 {
                    let (xx, yy) = ((x + dx).clamp(0, w - 1), (y + dy).clamp(0, h - 1));
                    if channel(xx, yy) == c {
                        // nearer samples count double
                        let wgt = if dx == 0 || dy == 0 { 2.0 } else { 1.0 };
                        s += wgt * raw(xx, yy);
                        n += wgt;
                    }
                }
            }
            *o = (s / n).round().clamp(0.0, 255.0) as u8;
        }
        Rgb(out)
    })
}

/// Inverse-warp `tag` (mapped by `h` from tag pixels to background pixels)
/// over `background`, then run the photometric chain.
pub fn warp_composite(
    tag: &RgbImage,
    background: &RgbImage,
    h: &Homography,
    preset: &PhotometricPreset,
    seed: u64,
) -> Result<RgbImage> {
    let (tw, th) = (f64::from(tag.width()), f64::from(tag.height()));
    let (bw, bh) = (f64::from(background.width()), f64::from(background.height()));
    let outline = [
        Point2::new(0.0, 0.0),
        Point2::new(tw, 0.0),
        Point2::new(tw, th),
        Point2::new(0.0, th),
    ];
    let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for c in outline {
        if h.depth(c) <= 0.0 {
            return Err(Error::Synth("tag crosses the camera plane".into()));
        }
        let p = h.project(c)?;
        lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    if lo.x < 0.0 || lo.y < 0.0 || hi.x > bw || hi.y > bh {
        return Err(Error::Synth("warped tag does not fit the background".into()));
    }
    let inv = h.inverse()?;
    let mut out = background.clone();
    let n = SUPERSAMPLE;
    let inv_n = 1.0 / f64::from(n);
    let rows: Vec<(u32, Vec<[u8; 3]>)> = (lo.y.floor() as u32..hi.y.ceil().min(bh) as u32)
        .into_par_iter()
        .map(|y| {
            let x0 = lo.x.floor() as u32;
            let x1 = hi.x.ceil().min(bw) as u32;
            let row = (x0..x1)
                .map(|x| {
                    let bg = background.get_pixel(x, y).0.map(f32::from);
                    let mut acc = [0.0f32; 3];
                    for sy in 0..n {
                        for sx in 0..n {
                            let q = Point2::new(
                                f64::from(x) + (f64::from(sx) + 0.5) * inv_n,
                                f64::from(y) + (f64::from(sy) + 0.5) * inv_n,
                            );
                            let v = match inv.project(q) {
                                Ok(t) if t.x >= 0.0 && t.y >= 0.0 && t.x < tw && t.y < th => {
                                    bilinear(tag, t)
                                }
                                _ => bg,
                            };
                            for c in 0..3 {
                                acc[c] += v[c];
                            }
                        }
                    }
                    let k = (n * n) as f32;
                    acc.map(|v| (v / k).round().clamp(0.0, 255.0) as u8)
                })
                .collect();
            (y, row)
        })
        .collect();
    let x0 = lo.x.floor() as u32;
    for (y, row) in rows {
        for (i, px) in row.into_iter().enumerate() {
            out.put_pixel(x0 + i as u32, y, Rgb(px));
        }
    }
    Ok(apply_photometric(&out, preset, seed))
}

/// One synthetic frame with ground truth.
#[derive(Debug, Clone)]
pub struct SynthFrame {
    pub image: RgbImage,
    pub gt_quad: Quad,
    pub gt_id: usize,
    /// Rotation the decoder reports for this view.
    pub gt_rotation: u8,
    pub tag_size: f64,
    pub viewing_angle: f64,
    pub preset: String,
    pub seed: u64,
}

/// Everything needed to render one frame, drawn up front so rendering order
/// does not affect the result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FramePlan {
    pub index: usize,
    pub id: usize,
    /// Code rotation baked into the render.
    pub render_rotation: u8,
    pub pose: ScenePose,
    pub tag_size: f64,
    pub preset: PhotometricPreset,
    pub background: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SweepSpec {
    pub tag_sizes: Vec<f64>,
    pub viewing_angles: Vec<f64>,
    pub presets: Vec<PhotometricPreset>,
    pub ids_per_cell: usize,
    pub camera: CameraModel,
    pub bayer: bool,
    pub seed: u64,
}

impl Default for SweepSpec {
    fn default() -> Self {
        Self {
            tag_sizes: (2..=16).map(|k| f64::from(k) * 10.0).collect(),
            viewing_angles: (0..=8).map(|k| f64::from(k) * 10.0).collect(),
            presets: vec![PhotometricPreset::wb(), PhotometricPreset::nwb()],
            ids_per_cell: 1,
            camera: CameraModel::default(),
            bayer: false,
            seed: 0,
        }
    }
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.camera.validate()?;
        for p in &self.presets {
            p.validate()?;
        }
        if self.tag_sizes.is_empty()
            || self.viewing_angles.is_empty()
            || self.presets.is_empty()
            || self.ids_per_cell == 0
        {
            return Err(Error::InvalidArgument("sweep grid is empty".into()));
        }
        Ok(())
    }
}

/// Extent of the full tag (white ring included) under `h`.
fn outer_bounds(h: &Homography) -> Result<(Point2, Point2)> {
    let w = TagGeometry::WHITE_HALF;
    let mut lo = Point2::new(f64::INFINITY, f64::INFINITY);
    let mut hi = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for c in [(-w, -w), (w, -w), (w, w), (-w, w)] {
        let p = h.project(Point2::new(c.0, c.1))?;
        lo = Point2::new(lo.x.min(p.x), lo.y.min(p.y));
        hi = Point2::new(hi.x.max(p.x), hi.y.max(p.y));
    }
    Ok((lo, hi))
}

/// Draw the per-frame parameters of a sweep in grid order (size, angle,
/// preset, repeat). Infeasible cells are skipped with a warning.
pub fn plan_sweep(spec: &SweepSpec, family_len: usize, backgrounds: usize) -> Result<Vec<FramePlan>> {
    spec.validate()?;
    if family_len == 0 || backgrounds == 0 {
        return Err(Error::InvalidArgument("need at least one id and background".into()));
    }
    let cam = &spec.camera;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut plans = Vec::new();
    for &size in &spec.tag_sizes {
        for &angle in &spec.viewing_angles {
            for preset in &spec.presets {
                for _ in 0..spec.ids_per_cell {
                    let id = rng.random_range(0..family_len);
                    let render_rotation = rng.random_range(0..4u8);
                    let in_plane = rng.random_range(0.0..360.0);
                    let background = rng.random_range(0..backgrounds);
                    let seed = rng.random::<u64>();
                    let u: (f64, f64) = (rng.random(), rng.random());
                    let pose = solve_distance(size, angle, in_plane, cam).and_then(|d| {
                        let centered = ScenePose {
                            viewing_angle_deg: angle,
                            in_plane_rotation_deg: in_plane,
                            distance: d,
                            translation: Point2::default(),
                        };
                        let (lo, hi) = outer_bounds(&pose_to_homography(&centered, cam)?)?;
                        // slack left in the frame, with a 2 px margin
                        let (fw, fh) = (f64::from(cam.width) - 4.0, f64::from(cam.height) - 4.0);
                        let (ew, eh) = (hi.x - lo.x, hi.y - lo.y);
                        if ew > fw || eh > fh {
                            return Err(Error::Synth(format!(
                                "tag of size {size} at {angle} degrees does not fit the frame"
                            )));
                        }
                        let tx = 2.0 - lo.x + u.0 * (fw - ew);
                        let ty = 2.0 - lo.y + u.1 * (fh - eh);
                        Ok(ScenePose {
                            translation: Point2::new(tx, ty),
                            ..centered
                        })
                    });
                    match pose {
                        Ok(pose) => plans.push(FramePlan {
                            index: plans.len(),
                            id,
                            render_rotation,
                            pose,
                            tag_size: size,
                            preset: preset.clone(),
                            background,
                            seed,
                        }),
                        Err(e) => log::warn!("skipping sweep cell: {e}"),
                    }
                }
            }
        }
    }
    Ok(plans)
}

/// Render one planned frame.
pub fn render_plan(
    plan: &FramePlan,
    family: &TagFamily,
    palette: &TagPalette,
    backgrounds: &[RgbImage],
    spec: &SweepSpec,
) -> Result<SynthFrame> {
    let cam = &spec.camera;
    let h = pose_to_homography(&plan.pose, cam)?;
    let bg = backgrounds
        .get(plan.background)
        .ok_or_else(|| Error::InvalidArgument("background index out of range".into()))?;
    let bg = fit_background(bg, cam.width, cam.height);
    // raster at least twice as dense as the projection
    let ppc = ((plan.tag_size * 2.0 / 6.0).ceil() as u32).clamp(4, 64);
    let tag = render_tag(family, plan.id, plan.render_rotation, ppc, palette)?;
    // tag pixels -> canonical cell units -> image
    let s = 1.0 / f64::from(ppc);
    let to_canonical = Homography::from_matrix([
        [s, 0.0, -TagGeometry::WHITE_HALF],
        [0.0, s, -TagGeometry::WHITE_HALF],
        [0.0, 0.0, 1.0],
    ])?;
    let full = h.compose(&to_canonical)?;
    let mut image = warp_composite(&tag.image, &bg, &full, &plan.preset, plan.seed)?;
    if spec.bayer {
        image = bayer_roundtrip(&image);
    }
    let corners = project_canonical(&h)?;
    let gt_rotation = expected_rotation(plan.render_rotation, &corners)?;
    let gt_quad = Quad::new(corners)?.starting_top_left();
    Ok(SynthFrame {
        image,
        tag_size: gt_quad.area().sqrt(),
        gt_quad,
        gt_id: plan.id,
        gt_rotation,
        viewing_angle: plan.pose.viewing_angle_deg,
        preset: plan.preset.name.clone(),
        seed: plan.seed,
    })
}

/// Render a planned frame with the tag left out: same background, preset
/// and noise seed.
pub fn render_tagless(plan: &FramePlan, backgrounds: &[RgbImage], spec: &SweepSpec) -> Result<RgbImage> {
    let cam = &spec.camera;
    let bg = backgrounds
        .get(plan.background)
        .ok_or_else(|| Error::InvalidArgument("background index out of range".into()))?;
    let mut image = apply_photometric(&fit_background(bg, cam.width, cam.height), &plan.preset, plan.seed);
    if spec.bayer {
        image = bayer_roundtrip(&image);
    }
    Ok(image)
}

/// Resize a background to the camera frame when its size differs.
pub fn fit_background(bg: &RgbImage, width: u32, height: u32) -> RgbImage {
    if bg.dimensions() == (width, height) {
        bg.clone()
    } else {
        image::imageops::resize(bg, width, height, image::imageops::FilterType::Triangle)
    }
}

/// Plan and render a whole sweep in parallel; output is in grid order.
pub fn generate_sweep(
    spec: &SweepSpec,
    family: &TagFamily,
    palette: &TagPalette,
    backgrounds: &[RgbImage],
) -> Result<Vec<SynthFrame>> {
    let plans = plan_sweep(spec, family.len(), backgrounds.len())?;
    plans
        .par_iter()
        .map(|p| render_plan(p, family, palette, backgrounds, spec))
        .collect()
}

/// One manifest line.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestRecord {
    pub schema: String,
    pub path: String,
    pub id: usize,
    pub rotation: u8,
    pub corners: [[f64; 2]; 4],
    pub tag_size: f64,
    pub viewing_angle: f64,
    pub preset: String,
    pub seed: u64,
}

impl ManifestRecord {
    pub fn new(frame: &SynthFrame, path: &str) -> Self {
        Self {
            schema: MANIFEST_SCHEMA.to_string(),
            path: path.to_string(),
            id: frame.gt_id,
            rotation: frame.gt_rotation,
            corners: frame.gt_quad.corners.map(Point2::to_array),
            tag_size: frame.tag_size,
            viewing_angle: frame.viewing_angle,
            preset: frame.preset.clone(),
            seed: frame.seed,
        }
    }

    pub fn quad(&self) -> Result<Quad> {
        Ok(Quad::new(self.corners.map(Point2::from))?)
    }
}

/// Load every decodable image in a directory, sorted by file name.
pub fn load_backgrounds(dir: &Path) -> Result<Vec<RgbImage>> {
    let io = |source| Error::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(io)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .and_then(|e| e.to_str())
                .is_some_and(|e| matches!(e.to_ascii_lowercase().as_str(), "png" | "jpg" | "jpeg" | "ppm"))
        })
        .collect();
    paths.sort();
    paths
        .iter()
        .map(|p| {
            image::open(p).map(|i| i.to_rgb8()).map_err(|source| Error::Image {
                path: p.clone(),
                source,
            })
        })
        .collect()
}

/// The photographs shipped with the crate.
pub fn bundled_backgrounds_dir() -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("assets/backgrounds")
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pose(angle: f64, rot: f64, d: f64) -> ScenePose {
        ScenePose {
            viewing_angle_deg: angle,
            in_plane_rotation_deg: rot,
            distance: d,
            translation: Point2::default(),
        }
    }

    #[test]
    fn frontal_is_axis_aligned_square() {
        let cam = CameraModel::default();
        let h = pose_to_homography(&pose(0.0, 0.0, 50.0), &cam).unwrap();
        let q = project_canonical(&h).unwrap();
        assert!((q[0].y - q[1].y).abs() < 1e-9 && (q[0].x - q[3].x).abs() < 1e-9);
        let side = q[1].x - q[0].x;
        assert!((side - 600.0 * 6.0 / 50.0).abs() < 1e-9);
        assert!(((q[2].y - q[1].y) - side).abs() < 1e-9);
    }

    #[test]
    fn near_far_ratio_closed_form() {
        let cam = CameraModel::default();
        let (d, th) = (40.0, 60f64.to_radians());
        let h = pose_to_homography(&pose(60.0, 0.0, d), &cam).unwrap();
        let q = project_canonical(&h).unwrap();
        let top = q[0].dist(q[1]);
        let bottom = q[3].dist(q[2]);
        let want = (d + 3.0 * th.sin()) / (d - 3.0 * th.sin());
        assert!((top / bottom - want).abs() < 1e-6, "{} vs {want}", top / bottom);
    }

    #[test]
    fn doubling_distance_halves_size() {
        let cam = CameraModel::default();
        let size = |d| {
            let h = pose_to_homography(&pose(10.0, 20.0, d), &cam).unwrap();
            Quad::new(project_canonical(&h).unwrap()).unwrap().area().sqrt()
        };
        let r = size(200.0) / size(400.0);
        assert!((r - 2.0).abs() / 2.0 < 0.01, "{r}");
    }

    #[test]
    fn behind_camera_rejected() {
        let cam = CameraModel::default();
        assert!(pose_to_homography(&pose(80.0, 0.0, 3.0), &cam).is_err());
    }

    #[test]
    fn solve_distance_hits_target() {
        let cam = CameraModel::default();
        let d = solve_distance(80.0, 40.0, 33.0, &cam).unwrap();
        let h = pose_to_homography(&pose(40.0, 33.0, d), &cam).unwrap();
        let s = Quad::new(project_canonical(&h).unwrap()).unwrap().area().sqrt();
        assert!((s - 80.0).abs() < 1e-6);
    }

    #[test]
    fn neutral_chain_is_identity() {
        let img = RgbImage::from_fn(17, 9, |x, y| Rgb([(x * 13) as u8, (y * 27) as u8, 200]));
        assert_eq!(apply_photometric(&img, &PhotometricPreset::neutral(), 7), img);
    }

    #[test]
    fn identity_warp_keeps_interior() {
        let tag = RgbImage::from_fn(16, 16, |x, y| {
            if x < 8 {
                Rgb([255, 0, 0])
            } else if y < 8 {
                Rgb([0, 255, 0])
            } else {
                Rgb([0, 0, 255])
            }
        });
        let bg = RgbImage::from_pixel(16, 16, Rgb([9, 9, 9]));
        let out = warp_composite(&tag, &bg, &Homography::IDENTITY, &PhotometricPreset::neutral(), 0)
            .unwrap();
        for (x, y) in [(2, 2), (12, 3), (12, 12), (5, 14)] {
            assert_eq!(out.get_pixel(x, y), tag.get_pixel(x, y));
        }
    }

    #[test]
    fn out_of_bounds_warp_fails() {
        let tag = RgbImage::new(16, 16);
        let bg = RgbImage::new(10, 10);
        assert!(warp_composite(&tag, &bg, &Homography::IDENTITY, &PhotometricPreset::neutral(), 0)
            .is_err());
    }

    #[test]
    fn grid_counting() {
        let spec = SweepSpec {
            tag_sizes: vec![60.0, 90.0],
            viewing_angles: vec![0.0, 30.0],
            presets: vec![PhotometricPreset::wb()],
            ids_per_cell: 5,
            ..Default::default()
        };
        let plans = plan_sweep(&spec, 20, 3).unwrap();
        assert_eq!(plans.len(), 20);
        assert_eq!(plans, plan_sweep(&spec, 20, 3).unwrap());
    }

    #[test]
    fn infeasible_cell_skipped() {
        let spec = SweepSpec {
            tag_sizes: vec![60.0, 5000.0],
            viewing_angles: vec![0.0],
            presets: vec![PhotometricPreset::wb()],
            ..Default::default()
        };
        assert_eq!(plan_sweep(&spec, 20, 1).unwrap().len(), 1);
    }
}
