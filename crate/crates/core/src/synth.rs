//! Synthetic aerial sequences with exact ground truth.
//!
//! A planar value-noise background is rendered once onto an oversized canvas.
//! Each frame is a homography-resampled window of that canvas (pan, zoom,
//! rotation and seeded jitter). Square sprites are composited afterwards in
//! frame coordinates, so their motion is independent of the camera.

use nalgebra::Matrix3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{sample_bilinear, Homography, Point};
use crate::motion::{dilate, MotionMask};
use crate::raster::{BinaryMask, Frame};

/// Dilation radius applied to ground-truth masks.
pub const GT_DILATION_PX: usize = 3;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackgroundSpec {
    /// Lattice spacing of the coarsest octave, in canvas pixels.
    pub base_cell: f64,
    pub octaves: usize,
    /// Amplitude ratio between successive octaves.
    pub persistence: f64,
    /// Peak deviation from mid-gray.
    pub contrast: f64,
}

impl Default for BackgroundSpec {
    fn default() -> Self {
        Self {
            base_cell: 16.0,
            octaves: 3,
            persistence: 0.8,
            contrast: 120.0,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EgoMotionSpec {
    /// Canvas translation per frame `(x, y)`.
    pub pan: (f64, f64),
    /// Magnification factor per frame; 0 or 1 disables zoom.
    pub zoom: f64,
    /// Rotation per frame, radians.
    pub rotation: f64,
    /// Half-width of the uniform per-frame translation jitter, pixels.
    pub jitter: f64,
}

impl EgoMotionSpec {
    fn zoom_factor(&self) -> f64 {
        if self.zoom > 0.0 {
            self.zoom
        } else {
            1.0
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpriteSpec {
    /// Side length in pixels.
    pub size: usize,
    /// Frame-coordinate velocity `(x, y)` in pixels per frame.
    pub velocity: (f64, f64),
    /// Intensity offset added to the background under the sprite.
    pub contrast: f64,
    /// Top-left pixel at frame 0.
    pub start: (f64, f64),
}

impl SpriteSpec {
    /// Top-left corner at frame `t`.
    pub fn position(&self, t: usize) -> Point {
        Point::new(
            self.start.0 + self.velocity.0 * t as f64,
            self.start.1 + self.velocity.1 * t as f64,
        )
    }

    /// Whether pixel center `p` lies inside the sprite at frame `t`.
    pub fn covers(&self, t: usize, p: Point) -> bool {
        let o = self.position(t);
        let s = self.size as f64;
        p.x >= o.x - 0.5 && p.x < o.x + s - 0.5 && p.y >= o.y - 0.5 && p.y < o.y + s - 0.5
    }

    /// Area fraction of pixel `(x, y)` covered at frame `t`.
    fn coverage(&self, t: usize, x: usize, y: usize) -> f64 {
        let o = self.position(t);
        let s = self.size as f64;
        let overlap = |p: f64, lo: f64| {
            let (a, b) = (p - 0.5, p + 0.5);
            (b.min(lo + s - 0.5) - a.max(lo - 0.5)).max(0.0)
        };
        overlap(x as f64, o.x) * overlap(y as f64, o.y)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SynthConfig {
    /// `(H, W)` of every frame.
    pub dims: (usize, usize),
    pub frames: usize,
    pub background: BackgroundSpec,
    pub ego_motion: EgoMotionSpec,
    pub sprites: Vec<SpriteSpec>,
    /// Long interval used for exported ground-truth masks.
    pub k_long: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            dims: (240, 320),
            frames: 30,
            background: BackgroundSpec::default(),
            ego_motion: EgoMotionSpec::default(),
            sprites: Vec::new(),
            k_long: 5,
            seed: 0,
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        let (h, w) = self.dims;
        if h == 0 || w == 0 {
            return Err(Error::Config("synthetic frames must have nonzero area".into()));
        }
        if self.k_long < 2 {
            return Err(Error::Config("k_long must be >= 2".into()));
        }
        if self.frames < self.k_long + 1 {
            return Err(Error::Config(format!(
                "need at least k_long + 1 = {} frames, got {}",
                self.k_long + 1,
                self.frames
            )));
        }
        if !(self.ego_motion.jitter >= 0.0) {
            return Err(Error::Config("jitter amplitude must be >= 0".into()));
        }
        let b = &self.background;
        if !(b.base_cell >= 1.0) || b.octaves == 0 {
            return Err(Error::Config(
                "background needs base_cell >= 1 and at least one octave".into(),
            ));
        }
        for (i, s) in self.sprites.iter().enumerate() {
            if s.size == 0 {
                return Err(Error::Config(format!("sprite {i} has zero size")));
            }
            for t in [0, self.frames - 1] {
                let p = s.position(t);
                if p.x < 0.0
                    || p.y < 0.0
                    || p.x + s.size as f64 > w as f64
                    || p.y + s.size as f64 > h as f64
                {
                    return Err(Error::Config(format!(
                        "sprite {i} leaves the canvas at frame {t}"
                    )));
                }
            }
        }
        Ok(())
    }
}

/// Frames plus exact ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSequence {
    pub frames: Vec<Frame>,
    /// `gt_homographies[t] = H_{t,t-1}`; entry 0 is the identity.
    pub gt_homographies: Vec<Homography>,
    /// Ground-truth motion masks per frame. Before `k_long` the long-interval
    /// footprint is omitted.
    pub gt_masks: Vec<MotionMask>,
}

fn translation(x: f64, y: f64) -> Matrix3<f64> {
    *Homography::translation(x, y).matrix()
}

/// Canvas placement of the camera window, independent of where the canvas
/// origin sits.
fn relative_pose(cfg: &SynthConfig, t: usize) -> Matrix3<f64> {
    let ego = &cfg.ego_motion;
    let (h, w) = cfg.dims;
    let tf = t as f64;
    let jitter = jitter_at(cfg, t);
    let scale = ego.zoom_factor().powf(-tf);
    let centre = translation(-(w as f64 - 1.0) / 2.0, -(h as f64 - 1.0) / 2.0);
    let rotation = *Homography::rotation(ego.rotation * tf).matrix();
    let zoom = Matrix3::new(scale, 0.0, 0.0, 0.0, scale, 0.0, 0.0, 0.0, 1.0);
    let shift = translation(ego.pan.0 * tf + jitter.0, ego.pan.1 * tf + jitter.1);
    shift * rotation * zoom * centre
}

fn jitter_at(cfg: &SynthConfig, t: usize) -> (f64, f64) {
    let a = cfg.ego_motion.jitter;
    if a <= 0.0 {
        return (0.0, 0.0);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(t as u64 + 1);
    (rng.gen_range(-a..=a), rng.gen_range(-a..=a))
}

/// `H_{t,t-1} = P_{t-1}^{-1} P_t` where `P_t` maps frame pixels to the canvas.
pub fn gt_step_homography(cfg: &SynthConfig, t: usize) -> Result<Homography> {
    if t < 1 || t >= cfg.frames {
        return Err(Error::IndexOutOfRange {
            index: t,
            min: 1,
            max: cfg.frames,
        });
    }
    gt_interval_homography(cfg, t, 1)
}

/// Closed-form `H_{t,t-k}`.
pub fn gt_interval_homography(cfg: &SynthConfig, t: usize, k: usize) -> Result<Homography> {
    if k > t || t >= cfg.frames {
        return Err(Error::IndexOutOfRange {
            index: t,
            min: k,
            max: cfg.frames,
        });
    }
    let prev = relative_pose(cfg, t - k)
        .try_inverse()
        .ok_or(Error::NotInvertible(0.0))?;
    Homography::new(prev * relative_pose(cfg, t))
}

struct Canvas {
    width: usize,
    height: usize,
    /// Canvas position of the pose origin.
    origin: (f64, f64),
    image: Frame,
}

fn lattice_value(seed: u64, octave: usize, ix: i64, iy: i64) -> f64 {
    // splitmix-style hash of (seed, octave, ix, iy) to [-1, 1].
    let mut z = seed
        ^ (octave as u64).wrapping_mul(0xD1B5_4A32_D192_ED03)
        ^ (ix as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
        ^ (iy as u64).wrapping_mul(0xC2B2_AE3D_27D4_EB4F);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    (z >> 11) as f64 / (1u64 << 53) as f64 * 2.0 - 1.0
}

fn value_noise(bg: &BackgroundSpec, seed: u64, x: f64, y: f64) -> f64 {
    let mut total = 0.0;
    let mut norm = 0.0;
    let mut amp = 1.0;
    let mut cell = bg.base_cell;
    for o in 0..bg.octaves {
        let (fx, fy) = (x / cell, y / cell);
        let (ix, iy) = (fx.floor(), fy.floor());
        let (tx, ty) = (fx - ix, fy - iy);
        let (sx, sy) = (tx * tx * (3.0 - 2.0 * tx), ty * ty * (3.0 - 2.0 * ty));
        let (ix, iy) = (ix as i64, iy as i64);
        let v = |dx: i64, dy: i64| lattice_value(seed, o, ix + dx, iy + dy);
        let top = v(0, 0) + (v(1, 0) - v(0, 0)) * sx;
        let bottom = v(0, 1) + (v(1, 1) - v(0, 1)) * sx;
        total += amp * (top + (bottom - top) * sy);
        norm += amp;
        amp *= bg.persistence;
        cell = (cell / 2.0).max(1.0);
    }
    total / norm
}

fn build_canvas(cfg: &SynthConfig) -> Canvas {
    let (h, w) = cfg.dims;
    let corners = crate::geometry::raster_corners(cfg.dims);
    let (mut min_x, mut min_y) = (f64::INFINITY, f64::INFINITY);
    let (mut max_x, mut max_y) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    for t in 0..cfg.frames {
        let pose = Homography::new(relative_pose(cfg, t)).expect("poses are similarities");
        for c in corners {
            let p = pose.project(c).expect("affine pose");
            min_x = min_x.min(p.x);
            min_y = min_y.min(p.y);
            max_x = max_x.max(p.x);
            max_y = max_y.max(p.y);
        }
    }
    let margin = 4.0;
    let width = ((max_x - min_x + 2.0 * margin).ceil() as usize).max(2 * w);
    let height = ((max_y - min_y + 2.0 * margin).ceil() as usize).max(2 * h);
    let origin = (
        (width as f64 - (max_x - min_x)) / 2.0 - min_x,
        (height as f64 - (max_y - min_y)) / 2.0 - min_y,
    );
    let bg = &cfg.background;
    let mut data = Vec::with_capacity(width * height);
    for y in 0..height {
        for x in 0..width {
            let n = value_noise(bg, cfg.seed, x as f64, y as f64);
            data.push((128.0 + bg.contrast * n).clamp(0.0, 255.0) as f32);
        }
    }
    Canvas {
        width,
        height,
        origin,
        image: Frame::gray(width, height, data).expect("canvas dims"),
    }
}

fn render_frame(cfg: &SynthConfig, canvas: &Canvas, t: usize) -> Frame {
    let (h, w) = cfg.dims;
    let pose = Homography::new(translation(canvas.origin.0, canvas.origin.1) * relative_pose(cfg, t))
        .expect("poses are similarities");
    let mut frame = crate::geometry::warp_perspective_into(&canvas.image, &pose, (h, w)).with_index(t as u64);
    debug_assert!(canvas.width > 0 && canvas.height > 0);
    for sprite in &cfg.sprites {
        let o = sprite.position(t);
        let x0 = (o.x - 1.0).floor().max(0.0) as usize;
        let y0 = (o.y - 1.0).floor().max(0.0) as usize;
        let x1 = ((o.x + sprite.size as f64 + 1.0).ceil() as usize).min(w);
        let y1 = ((o.y + sprite.size as f64 + 1.0).ceil() as usize).min(h);
        for y in y0..y1 {
            for x in x0..x1 {
                let cov = sprite.coverage(t, x, y);
                if cov > 0.0 {
                    let v = f64::from(frame.get(x, y)) + sprite.contrast * cov;
                    frame.set(x, y, v.clamp(0.0, 255.0) as f32);
                }
            }
        }
    }
    frame
}

/// Undilated footprint of sprite `index` at frame `t`.
pub fn sprite_footprint(cfg: &SynthConfig, index: usize, t: usize) -> MotionMask {
    let (h, w) = cfg.dims;
    let s = &cfg.sprites[index];
    BinaryMask::from_fn(w, h, |x, y| s.covers(t, Point::new(x as f64, y as f64)))
}

/// Footprints of one sprite at `t`, `t-1` and `t-k` mapped into frame `t`
/// through the ground-truth homographies; intervals reaching before frame 0
/// are skipped.
fn sprite_union(cfg: &SynthConfig, index: usize, t: usize, k_long: usize) -> Result<MotionMask> {
    let (h, w) = cfg.dims;
    let s = &cfg.sprites[index];
    let mut refs = Vec::new();
    for k in [1, k_long] {
        if k <= t {
            refs.push((t - k, gt_interval_homography(cfg, t, k)?));
        }
    }
    Ok(BinaryMask::from_fn(w, h, |x, y| {
        let p = Point::new(x as f64, y as f64);
        s.covers(t, p)
            || refs
                .iter()
                .any(|(tr, hm)| hm.project(p).is_ok_and(|q| s.covers(*tr, q)))
    }))
}

/// Ground-truth mask of a single sprite, dilated by [`GT_DILATION_PX`].
pub fn sprite_gt_mask(cfg: &SynthConfig, index: usize, t: usize, k_long: usize) -> Result<MotionMask> {
    Ok(dilate(&sprite_union(cfg, index, t, k_long)?, 2 * GT_DILATION_PX + 1))
}

fn gt_mask_unchecked(cfg: &SynthConfig, t: usize, k_long: usize) -> Result<MotionMask> {
    let (h, w) = cfg.dims;
    let mut union = BinaryMask::zeros(w, h);
    for i in 0..cfg.sprites.len() {
        union = union.or(&sprite_union(cfg, i, t, k_long)?)?;
    }
    Ok(dilate(&union, 2 * GT_DILATION_PX + 1))
}

/// Union of every sprite's footprint at `t`, `t-1` and `t-k_long` in frame-`t`
/// coordinates, dilated by three pixels.
pub fn gt_mask(cfg: &SynthConfig, t: usize, k_long: usize) -> Result<MotionMask> {
    if t < k_long || t >= cfg.frames {
        return Err(Error::IndexOutOfRange {
            index: t,
            min: k_long,
            max: cfg.frames,
        });
    }
    gt_mask_unchecked(cfg, t, k_long)
}

pub fn generate_sequence(cfg: &SynthConfig) -> Result<SyntheticSequence> {
    cfg.validate()?;
    let canvas = build_canvas(cfg);
    let frames = (0..cfg.frames).map(|t| render_frame(cfg, &canvas, t)).collect();
    let mut gt_homographies = vec![Homography::identity()];
    for t in 1..cfg.frames {
        gt_homographies.push(gt_step_homography(cfg, t)?);
    }
    let gt_masks = (0..cfg.frames)
        .map(|t| gt_mask_unchecked(cfg, t, cfg.k_long))
        .collect::<Result<_>>()?;
    Ok(SyntheticSequence {
        frames,
        gt_homographies,
        gt_masks,
    })
}

/// Canvas sample helper used by tests that need direct window sampling.
#[doc(hidden)]
pub fn render_background_window(cfg: &SynthConfig, offset: (f64, f64)) -> Frame {
    let canvas = build_canvas(cfg);
    let (h, w) = cfg.dims;
    let pose = Homography::new(
        translation(canvas.origin.0 + offset.0, canvas.origin.1 + offset.1) * relative_pose(&SynthConfig {
            ego_motion: EgoMotionSpec::default(),
            ..cfg.clone()
        }, 0),
    )
    .expect("translation");
    let mut out = Frame::filled(w, h, 0.0);
    for y in 0..h {
        for x in 0..w {
            let p = pose.project(Point::new(x as f64, y as f64)).expect("affine");
            out.set(x, y, sample_bilinear(&canvas.image, p.x, p.y, 0).unwrap_or(0.0));
        }
    }
    out
}
