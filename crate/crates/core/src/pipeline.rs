//! Stream orchestration: ring buffer, homography acquisition modes, fallback
//! handling, letterboxing, attention and per-stage timing.

use std::collections::VecDeque;
use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::attention::{apply_mga_level, FeatureMap, MgaWeights, DEFAULT_CMID, PYRAMID_STRIDES};
use crate::error::{Error, Result};
use crate::features::{extract_features, match_hamming_ratio, refine_matches, Feature, FeatureParams};
use crate::geometry::{
    cascade_homographies, estimate_homography_ransac, warp_with_valid_region, Homography,
    RansacParams,
};
use crate::io::ReportValue;
use crate::motion::{
    fuse_masks, gaussian_blur_sigma, masked_abs_diff, morphology, threshold_binary, MorphOp,
    MotionMask, MotionParams, MotionStages,
};
use crate::raster::{BinaryMask, Frame};

/// RGB letterbox fill value.
pub const RGB_PAD: f32 = 114.0;
/// Motion-channel letterbox fill value.
pub const MOTION_PAD: u8 = 0;
/// Channels of the synthetic feature maps used when no detector is attached.
pub const SYNTHETIC_FEATURE_CHANNELS: usize = 16;
/// Seed of the default attention weights.
pub const DEFAULT_WEIGHT_SEED: u64 = 0;

/// How the long-interval homography is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Matches the current frame directly against frame `t - k_long`.
    Independent,
    /// Chains the stored step homographies.
    #[default]
    Cascaded,
}

impl FromStr for Mode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "independent" => Ok(Self::Independent),
            "cascaded" => Ok(Self::Cascaded),
            other => Err(Error::Config(format!(
                "unknown mode '{other}', expected 'independent' or 'cascaded'"
            ))),
        }
    }
}

impl fmt::Display for Mode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Independent => "independent",
            Self::Cascaded => "cascaded",
        })
    }
}

/// Policy when a homography cannot be estimated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Fallback {
    /// Use the last successful estimate for the same interval.
    #[default]
    ReuseLastH,
    /// Assume no camera motion.
    IdentityH,
    /// Emit an empty mask for the frame.
    EmitEmptyMask,
}

/// Output selection for the CLI and for optional stream stages.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmitFlags {
    pub masks: bool,
    pub composite: bool,
    pub report: bool,
    /// Runs the attention block on letterboxed synthetic feature maps.
    pub attention: bool,
}

impl Default for EmitFlags {
    fn default() -> Self {
        Self {
            masks: true,
            composite: false,
            report: true,
            attention: false,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    pub mode: Mode,
    pub motion: MotionParams,
    pub features: FeatureParams,
    pub ransac: RansacParams,
    /// Letterbox target `(H, W)`.
    pub target_dims: (usize, usize),
    pub fallback: Fallback,
    pub emit: EmitFlags,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            mode: Mode::default(),
            motion: MotionParams::default(),
            features: FeatureParams::default(),
            ransac: RansacParams::default(),
            target_dims: (640, 640),
            fallback: Fallback::default(),
            emit: EmitFlags::default(),
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.target_dims.0 == 0 || self.target_dims.1 == 0 {
            return Err(Error::Config("target_dims must be positive".into()));
        }
        self.motion.validate()?;
        self.features.validate()?;
        self.ransac.validate()
    }
}

struct Slot {
    frame: Frame,
    features: Vec<Feature>,
    step: Option<Homography>,
}

/// The last `k_long + 1` grayscale frames with their features and the step
/// homography `H_{t,t-1}` of each slot.
pub struct FrameRing {
    capacity: usize,
    slots: VecDeque<Slot>,
}

impl FrameRing {
    pub fn new(k_long: usize) -> Self {
        Self {
            capacity: k_long + 1,
            slots: VecDeque::with_capacity(k_long + 1),
        }
    }

    pub fn capacity(&self) -> usize {
        self.capacity
    }

    pub fn len(&self) -> usize {
        self.slots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.slots.is_empty()
    }

    pub fn is_full(&self) -> bool {
        self.slots.len() == self.capacity
    }

    fn push(&mut self, slot: Slot) {
        if self.slots.len() == self.capacity {
            self.slots.pop_front();
        }
        self.slots.push_back(slot);
    }

    /// Frame `k` steps back from the newest (0 = newest).
    pub fn frame_back(&self, k: usize) -> Option<&Frame> {
        let n = self.slots.len();
        (k < n).then(|| &self.slots[n - 1 - k].frame)
    }

    fn slot_back(&self, k: usize) -> Option<&Slot> {
        let n = self.slots.len();
        (k < n).then(|| &self.slots[n - 1 - k])
    }

    /// Frame indices from oldest to newest.
    pub fn indices(&self) -> Vec<u64> {
        self.slots.iter().map(|s| s.frame.index).collect()
    }

    /// Stored step homographies, newest first: `H_{t,t-1}, H_{t-1,t-2}, ...`.
    /// The oldest slot's step refers to a frame no longer held and is
    /// excluded.
    pub fn steps_newest_first(&self) -> Vec<Homography> {
        self.slots
            .iter()
            .skip(1)
            .rev()
            .map(|s| s.step.expect("every slot after the first stores its step"))
            .collect()
    }
}

/// Per-frame wall-clock durations in milliseconds.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct StageTimings {
    pub decode: f64,
    pub features: f64,
    pub matching: f64,
    pub ransac: f64,
    pub warp: f64,
    pub diff: f64,
    pub morphology: f64,
    pub fusion: f64,
    pub attention: f64,
    pub encode: f64,
    pub end_to_end: f64,
}

impl StageTimings {
    pub const STAGE_NAMES: [&'static str; 10] = [
        "decode",
        "features",
        "match",
        "ransac",
        "warp",
        "diff",
        "morphology",
        "fusion",
        "attention",
        "encode",
    ];

    /// Stage values in [`Self::STAGE_NAMES`] order.
    pub fn stages(&self) -> [f64; 10] {
        [
            self.decode,
            self.features,
            self.matching,
            self.ransac,
            self.warp,
            self.diff,
            self.morphology,
            self.fusion,
            self.attention,
            self.encode,
        ]
    }

    fn from_stages(s: [f64; 10], end_to_end: f64) -> Self {
        Self {
            decode: s[0],
            features: s[1],
            matching: s[2],
            ransac: s[3],
            warp: s[4],
            diff: s[5],
            morphology: s[6],
            fusion: s[7],
            attention: s[8],
            encode: s[9],
            end_to_end,
        }
    }

    pub fn stage_sum(&self) -> f64 {
        self.stages().iter().sum()
    }
}

/// Aggregate of a single quantity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Aggregate {
    pub mean: f64,
    pub p50: f64,
    pub p95: f64,
}

/// Per-stage mean, median and 95th percentile.
#[derive(Debug, Clone, PartialEq)]
pub struct ProfileSummary {
    pub frames: usize,
    pub mean: StageTimings,
    pub p50: StageTimings,
    pub p95: StageTimings,
}

impl ProfileSummary {
    pub fn stage(&self, name: &str) -> Option<Aggregate> {
        let i = StageTimings::STAGE_NAMES.iter().position(|&n| n == name);
        let pick = |t: &StageTimings| match i {
            Some(i) => t.stages()[i],
            None => t.end_to_end,
        };
        (i.is_some() || name == "end_to_end").then(|| Aggregate {
            mean: pick(&self.mean),
            p50: pick(&self.p50),
            p95: pick(&self.p95),
        })
    }

    /// Stage names ordered by decreasing mean time.
    pub fn ranked_stages(&self) -> Vec<&'static str> {
        let means = self.mean.stages();
        let mut order: Vec<usize> = (0..means.len()).collect();
        order.sort_by(|&a, &b| means[b].total_cmp(&means[a]).then(a.cmp(&b)));
        order.into_iter().map(|i| StageTimings::STAGE_NAMES[i]).collect()
    }

    pub fn to_report(&self) -> ReportValue {
        let mut stages = ReportValue::object();
        for name in StageTimings::STAGE_NAMES.iter().copied().chain(["end_to_end"]) {
            let a = self.stage(name).expect("known stage");
            stages.insert(
                name,
                ReportValue::object()
                    .with("mean_ms", a.mean)
                    .with("p50_ms", a.p50)
                    .with("p95_ms", a.p95),
            );
        }
        let fps = if self.mean.end_to_end > 0.0 {
            1000.0 / self.mean.end_to_end
        } else {
            0.0
        };
        ReportValue::object()
            .with("frames", self.frames)
            .with("stages", stages)
            .with("fps", fps)
    }
}

/// Nearest-rank percentile of sorted data.
fn nearest_rank(sorted: &[f64], p: f64) -> f64 {
    let n = sorted.len();
    let rank = ((p / 100.0) * n as f64).ceil() as usize;
    sorted[rank.clamp(1, n) - 1]
}

/// Mean, p50 and p95 (nearest rank) of every stage.
pub fn profile_report(records: &[StageTimings]) -> Result<ProfileSummary> {
    if records.is_empty() {
        return Err(Error::EmptyInput);
    }
    let n = records.len();
    let mut mean = [0.0; 11];
    let mut p50 = [0.0; 11];
    let mut p95 = [0.0; 11];
    for i in 0..11 {
        let mut col: Vec<f64> = records
            .iter()
            .map(|r| if i < 10 { r.stages()[i] } else { r.end_to_end })
            .collect();
        mean[i] = col.iter().sum::<f64>() / n as f64;
        col.sort_by(f64::total_cmp);
        p50[i] = nearest_rank(&col, 50.0);
        p95[i] = nearest_rank(&col, 95.0);
    }
    let build = |a: [f64; 11]| StageTimings::from_stages(a[..10].try_into().expect("ten stages"), a[10]);
    Ok(ProfileSummary {
        frames: n,
        mean: build(mean),
        p50: build(p50),
        p95: build(p95),
    })
}

/// Where the content sits inside a letterboxed raster.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Placement {
    pub scale: f64,
    pub offset_x: usize,
    pub offset_y: usize,
    pub content_width: usize,
    pub content_height: usize,
}

impl Placement {
    pub fn contains(&self, x: usize, y: usize) -> bool {
        x >= self.offset_x
            && x < self.offset_x + self.content_width
            && y >= self.offset_y
            && y < self.offset_y + self.content_height
    }
}

/// RGB plus motion channel at the detector resolution.
#[derive(Debug, Clone, PartialEq)]
pub struct Letterboxed {
    pub rgb: Frame,
    pub motion: MotionMask,
    pub placement: Placement,
}

impl Letterboxed {
    /// Pixel `(x, y)` as `[r, g, b, motion]`.
    pub fn pixel(&self, x: usize, y: usize) -> [f32; 4] {
        let i = (y * self.rgb.width() + x) * 3;
        let d = self.rgb.data();
        [d[i], d[i + 1], d[i + 2], f32::from(self.motion.get(x, y))]
    }

    /// Interleaved `RGBM` bytes, row-major.
    pub fn to_rgbm_u8(&self) -> Vec<u8> {
        let rgb = self.rgb.to_u8();
        let mut out = Vec::with_capacity(rgb.len() / 3 * 4);
        for (px, &m) in rgb.chunks_exact(3).zip(self.motion.data()) {
            out.extend_from_slice(px);
            out.push(m);
        }
        out
    }
}

/// Fits the frame into `target = (H, W)` with a uniform scale, centered.
/// RGB content is resampled bilinearly and padded with 114; the motion mask is
/// resampled by nearest neighbor and padded with 0. Grayscale input is
/// replicated into three channels.
pub fn letterbox_channel_aware(rgb: &Frame, motion: &MotionMask, target: (usize, usize)) -> Result<Letterboxed> {
    let (th, tw) = target;
    let (h, w) = rgb.dims();
    if th == 0 || tw == 0 || h == 0 || w == 0 {
        return Err(Error::InvalidInput("letterbox needs positive dimensions".into()));
    }
    if motion.dims() != (h, w) {
        return Err(Error::DimensionMismatch {
            expected: (h, w),
            found: motion.dims(),
        });
    }
    let scale = (tw as f64 / w as f64).min(th as f64 / h as f64);
    let cw = ((w as f64 * scale).round() as usize).clamp(1, tw);
    let ch = ((h as f64 * scale).round() as usize).clamp(1, th);
    let placement = Placement {
        scale,
        offset_x: (tw - cw) / 2,
        offset_y: (th - ch) / 2,
        content_width: cw,
        content_height: ch,
    };
    let src_c = rgb.channels();
    let sx = w as f64 / cw as f64;
    let sy = h as f64 / ch as f64;
    let src = rgb.data();
    let mut out = vec![RGB_PAD; tw * th * 3];
    let mut mot = vec![MOTION_PAD; tw * th];
    let coord = |o: usize, s: f64, n: usize| {
        let u = ((o as f64 + 0.5) * s - 0.5).clamp(0.0, (n - 1) as f64);
        let i0 = u.floor() as usize;
        (i0, (i0 + 1).min(n - 1), u - i0 as f64)
    };
    for oy in 0..ch {
        let (y0, y1, fy) = coord(oy, sy, h);
        let ny = (((oy as f64 + 0.5) * sy) as usize).min(h - 1);
        for ox in 0..cw {
            let (x0, x1, fx) = coord(ox, sx, w);
            let nx = (((ox as f64 + 0.5) * sx) as usize).min(w - 1);
            let di = ((oy + placement.offset_y) * tw + ox + placement.offset_x) * 3;
            for c in 0..3 {
                let sc = if src_c == 3 { c } else { 0 };
                let at = |x: usize, y: usize| f64::from(src[(y * w + x) * src_c + sc]);
                let top = at(x0, y0) + (at(x1, y0) - at(x0, y0)) * fx;
                let bottom = at(x0, y1) + (at(x1, y1) - at(x0, y1)) * fx;
                out[di + c] = (top + (bottom - top) * fy) as f32;
            }
            mot[di / 3] = u8::from(motion.get(nx, ny));
        }
    }
    Ok(Letterboxed {
        rgb: Frame::new(tw, th, 3, out)?,
        motion: BinaryMask::from_vec(tw, th, mot)?,
        placement,
    })
}

/// Instrumentation counters.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PassCounters {
    pub frames: usize,
    pub feature_extractions: usize,
    pub matching_passes: usize,
    pub ransac_calls: usize,
    pub fallbacks: usize,
}

/// Everything emitted for one input frame.
#[derive(Debug, Clone)]
pub struct FrameRecord {
    pub index: u64,
    /// True for the first `k_long` frames, which carry empty masks.
    pub warmup: bool,
    pub mask: MotionMask,
    /// Short, long and fused masks; absent during warm-up and when an empty
    /// mask was emitted by the fallback policy.
    pub stages: Option<MotionStages>,
    pub step_homography: Option<Homography>,
    pub long_homography: Option<Homography>,
    pub step_inliers: Option<usize>,
    pub long_inliers: Option<usize>,
    pub fallback: bool,
    pub matching_passes: usize,
    /// Mean attention value per pyramid level when attention is enabled.
    pub attention_mean: Option<[f64; 3]>,
    pub timings: StageTimings,
}

impl FrameRecord {
    /// Deterministic summary (no timings).
    pub fn to_report(&self) -> ReportValue {
        let mut r = ReportValue::object()
            .with("index", self.index)
            .with("warmup", self.warmup)
            .with("fallback", self.fallback)
            .with("matching_passes", self.matching_passes)
            .with("mask_pixels", self.mask.count_ones())
            .with("mask_density", self.mask.density())
            .with("step_inliers", self.step_inliers)
            .with("long_inliers", self.long_inliers)
            .with("step_homography", self.step_homography.as_ref().map(ReportValue::from))
            .with("long_homography", self.long_homography.as_ref().map(ReportValue::from));
        if let Some(a) = self.attention_mean {
            r.insert("attention_mean", a.to_vec());
        }
        r
    }
}

fn ms_since(t: Instant) -> f64 {
    t.elapsed().as_secs_f64() * 1e3
}

fn is_estimation_failure(e: &Error) -> bool {
    matches!(
        e,
        Error::InsufficientInliers { .. }
            | Error::DegenerateConfiguration(_)
            | Error::NotInvertible(_)
            | Error::SingularComposition(_)
            | Error::PointAtInfinity
    )
}

/// Sequential frame processor.
pub struct Pipeline {
    cfg: PipelineConfig,
    weights: [MgaWeights; 3],
    ring: FrameRing,
    last_step: Option<Homography>,
    last_long: Option<Homography>,
    counters: PassCounters,
    next_index: u64,
}

impl Pipeline {
    /// Pipeline with seeded default attention weights.
    pub fn new(cfg: PipelineConfig) -> Result<Self> {
        let w = MgaWeights::random(DEFAULT_CMID, DEFAULT_WEIGHT_SEED);
        Self::with_weights(cfg, [w.clone(), w.clone(), w])
    }

    /// Pipeline with explicit attention weights for P3, P4 and P5.
    pub fn with_weights(cfg: PipelineConfig, weights: [MgaWeights; 3]) -> Result<Self> {
        cfg.validate()?;
        for w in &weights {
            w.validate()?;
        }
        Ok(Self {
            ring: FrameRing::new(cfg.motion.k_long),
            cfg,
            weights,
            last_step: None,
            last_long: None,
            counters: PassCounters::default(),
            next_index: 0,
        })
    }

    pub fn config(&self) -> &PipelineConfig {
        &self.cfg
    }

    pub fn counters(&self) -> PassCounters {
        self.counters
    }

    pub fn ring(&self) -> &FrameRing {
        &self.ring
    }

    /// One matching pass plus RANSAC, timed into `tm.matching` and
    /// `tm.ransac`.
    fn estimate(
        cfg: &PipelineConfig,
        counters: &mut PassCounters,
        tm: &mut StageTimings,
        current: (&Frame, &[Feature]),
        reference: (&Frame, &[Feature]),
    ) -> Result<(Homography, usize)> {
        let t0 = Instant::now();
        counters.matching_passes += 1;
        let mut matches = match_hamming_ratio(current.1, reference.1, &cfg.features);
        if cfg.features.subpixel_refinement {
            matches = refine_matches(current.0, reference.0, &matches);
        }
        tm.matching += ms_since(t0);
        let t0 = Instant::now();
        counters.ransac_calls += 1;
        let result = estimate_homography_ransac(&matches, &cfg.ransac).map(|(h, inliers)| (h, inliers.len()));
        tm.ransac += ms_since(t0);
        result
    }

    /// Processes the next frame. Frames keep arrival order; the record index
    /// counts frames pushed into this pipeline.
    pub fn process(&mut self, frame: &Frame) -> Result<FrameRecord> {
        let start = Instant::now();
        let mut tm = StageTimings::default();
        let index = self.next_index;
        let passes_before = self.counters.matching_passes;
        let gray = if frame.is_gray() {
            frame.clone()
        } else {
            frame.to_gray()
        }
        .with_index(index);
        if let Some(prev) = self.ring.frame_back(0) {
            if prev.dims() != gray.dims() {
                return Err(Error::DimensionMismatch {
                    expected: prev.dims(),
                    found: gray.dims(),
                });
            }
        }

        let t0 = Instant::now();
        let features = extract_features(&gray, &self.cfg.features)?;
        self.counters.feature_extractions += 1;
        tm.features = ms_since(t0);

        let mut fallback = false;
        let mut step = None;
        let mut step_inliers = None;
        let mut step_failed = false;
        if let Some(prev) = self.ring.slot_back(0) {
            let result = Self::estimate(
                &self.cfg,
                &mut self.counters,
                &mut tm,
                (&gray, &features),
                (&prev.frame, &prev.features),
            );
            let h = match result {
                Ok((h, n)) => {
                    step_inliers = Some(n);
                    self.last_step = Some(h);
                    h
                }
                Err(e) if is_estimation_failure(&e) => {
                    fallback = true;
                    step_failed = true;
                    match self.cfg.fallback {
                        Fallback::IdentityH => Homography::identity(),
                        Fallback::ReuseLastH | Fallback::EmitEmptyMask => {
                            self.last_step.unwrap_or_else(Homography::identity)
                        }
                    }
                }
                Err(e) => return Err(e),
            };
            step = Some(h);
        }

        self.ring.push(Slot {
            frame: gray,
            features,
            step,
        });
        self.next_index += 1;
        self.counters.frames += 1;

        let (h, w) = frame.dims();
        let empty = BinaryMask::zeros(w, h);
        let mut record = FrameRecord {
            index,
            warmup: !self.ring.is_full(),
            mask: empty,
            stages: None,
            step_homography: step,
            long_homography: None,
            step_inliers,
            long_inliers: None,
            fallback,
            matching_passes: 0,
            attention_mean: None,
            timings: tm,
        };

        if record.warmup {
            record.matching_passes = self.counters.matching_passes - passes_before;
            record.timings.end_to_end = ms_since(start);
            return Ok(record);
        }

        let k_long = self.cfg.motion.k_long;
        let steps = self.ring.steps_newest_first();
        let long = match self.cfg.mode {
            Mode::Cascaded => {
                let t0 = Instant::now();
                let h = cascade_homographies(&steps).map(|h| (h, None));
                record.timings.ransac += ms_since(t0);
                h
            }
            Mode::Independent => {
                let cur = self.ring.slot_back(0).expect("full ring");
                let old = self.ring.slot_back(k_long).expect("full ring");
                Self::estimate(
                    &self.cfg,
                    &mut self.counters,
                    &mut record.timings,
                    (&cur.frame, &cur.features),
                    (&old.frame, &old.features),
                )
                    .map(|(h, n)| (h, Some(n)))
            }
        };
        let (h_long, long_failed) = match long {
            Ok((h, n)) => {
                record.long_inliers = n;
                self.last_long = Some(h);
                (h, false)
            }
            Err(e) if is_estimation_failure(&e) => {
                record.fallback = true;
                let h = match self.cfg.fallback {
                    Fallback::IdentityH => Homography::identity(),
                    Fallback::ReuseLastH | Fallback::EmitEmptyMask => self
                        .last_long
                        .or_else(|| cascade_homographies(&steps).ok())
                        .unwrap_or_else(Homography::identity),
                };
                (h, true)
            }
            Err(e) => return Err(e),
        };
        record.long_homography = Some(h_long);
        if record.fallback {
            self.counters.fallbacks += 1;
        }

        let suppress = (step_failed || long_failed) && self.cfg.fallback == Fallback::EmitEmptyMask;
        if !suppress {
            let h_step = step.expect("full ring has a step");
            let stages = self.motion_stages(&h_step, &h_long, &mut record.timings)?;
            record.mask = stages.fused.clone();
            record.stages = Some(stages);
        }

        if self.cfg.emit.attention {
            let t0 = Instant::now();
            record.attention_mean = Some(self.attention(frame, &record.mask, index)?);
            record.timings.attention = ms_since(t0);
        }

        record.matching_passes = self.counters.matching_passes - passes_before;
        record.timings.end_to_end = ms_since(start);
        Ok(record)
    }

    fn motion_stages(&self, h_step: &Homography, h_long: &Homography, tm: &mut StageTimings) -> Result<MotionStages> {
        let p = &self.cfg.motion;
        let cur = self.ring.frame_back(0).expect("full ring");
        let ref_short = self.ring.frame_back(p.k_short).expect("full ring");
        let ref_long = self.ring.frame_back(p.k_long).expect("full ring");

        let t0 = Instant::now();
        let (warped_s, valid_s) = warp_with_valid_region(ref_short, h_step);
        let (warped_l, valid_l) = warp_with_valid_region(ref_long, h_long);
        tm.warp = ms_since(t0);

        let t0 = Instant::now();
        let delta_s = masked_abs_diff(cur, &warped_s, &valid_s, p.k_short)?;
        let delta_l = masked_abs_diff(cur, &warped_l, &valid_l, p.k_long)?;
        let blurred = gaussian_blur_sigma(&delta_s, p.blur_sigma);
        tm.diff = ms_since(t0);

        let t0 = Instant::now();
        let short = threshold_binary(&blurred, p.tau_s)?;
        let long = morphology(&threshold_binary(&delta_l, p.tau_l)?, MorphOp::Open, p.open_kernel)?;
        tm.morphology = ms_since(t0);

        let t0 = Instant::now();
        let fused = fuse_masks(&short, &long, p)?;
        tm.fusion = ms_since(t0);
        Ok(MotionStages { short, long, fused })
    }

    fn attention(&self, frame: &Frame, mask: &MotionMask, index: u64) -> Result<[f64; 3]> {
        let boxed = letterbox_channel_aware(frame, mask, self.cfg.target_dims)?;
        let maps: Vec<FeatureMap> = PYRAMID_STRIDES
            .iter()
            .enumerate()
            .map(|(level, &s)| {
                FeatureMap::random(
                    SYNTHETIC_FEATURE_CHANNELS,
                    self.cfg.target_dims,
                    s,
                    index.wrapping_mul(3).wrapping_add(level as u64),
                )
            })
            .collect();
        let mut means = [0.0; 3];
        for (i, (f, w)) in maps.iter().zip(&self.weights).enumerate() {
            means[i] = apply_mga_level(f, &boxed.motion, w)?.1.mean();
        }
        Ok(means)
    }
}

/// Aggregated outcome of [`run_stream`].
#[derive(Debug, Clone)]
pub struct RunSummary {
    pub counters: PassCounters,
    pub timings: Vec<StageTimings>,
}

/// Drives a pipeline over `source`, timing each `next()` as decode and each
/// `sink` call as encode. Estimation failures are absorbed by the fallback
/// policy; other errors abort.
pub fn run_stream<I, F>(pipeline: &mut Pipeline, source: I, mut sink: F) -> Result<RunSummary>
where
    I: IntoIterator<Item = Result<Frame>>,
    F: FnMut(&FrameRecord) -> Result<()>,
{
    let mut timings = Vec::new();
    let mut iter = source.into_iter();
    loop {
        let t0 = Instant::now();
        let Some(frame) = iter.next() else { break };
        let frame = frame?;
        let decode = ms_since(t0);
        let mut record = pipeline.process(&frame)?;
        let t1 = Instant::now();
        sink(&record)?;
        record.timings.decode = decode;
        record.timings.encode = ms_since(t1);
        record.timings.end_to_end = ms_since(t0);
        timings.push(record.timings);
    }
    Ok(RunSummary {
        counters: pipeline.counters(),
        timings,
    })
}

/// Runs a whole in-memory sequence and returns every record.
pub fn collect_stream(cfg: &PipelineConfig, frames: &[Frame]) -> Result<Vec<FrameRecord>> {
    let mut p = Pipeline::new(cfg.clone())?;
    frames.iter().map(|f| p.process(f)).collect()
}
