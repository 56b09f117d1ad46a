//! Dual-interval motion extraction.
//!
//! Two motion-compensated difference maps are computed against the previous
//! frame (`k = 1`) and a frame `k_long` steps back. The short branch is
//! smoothed and thresholded at `tau_s`; the long branch is thresholded at the
//! stricter `tau_l` and opened. Their intersection, closed, is the motion mask.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{warp_with_valid_region, Homography, ValidRegionMask};
use crate::raster::{BinaryMask, Frame};

/// Binary per-pixel motion indicator.
pub type MotionMask = BinaryMask;

/// Motion-compensated absolute difference `|I_t - warp(I_{t-k})| * R_{t-k}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiffMap {
    width: usize,
    height: usize,
    interval: usize,
    data: Vec<f64>,
}

impl DiffMap {
    pub fn new(width: usize, height: usize, interval: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::InvalidInput(format!(
                "diff map holds {} values, expected {}x{}",
                data.len(),
                width,
                height
            )));
        }
        if data.iter().any(|v| !(*v >= 0.0)) {
            return Err(Error::InvalidInput(
                "difference maps must be non-negative".into(),
            ));
        }
        Ok(Self {
            width,
            height,
            interval,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, interval: usize, value: f64) -> Self {
        Self {
            width,
            height,
            interval,
            data: vec![value; width * height],
        }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn interval(&self) -> usize {
        self.interval
    }

    #[inline]
    pub fn dims(&self) -> (usize, usize) {
        (self.height, self.width)
    }

    #[inline]
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MotionParams {
    pub tau_s: f64,
    pub tau_l: f64,
    pub k_short: usize,
    pub k_long: usize,
    /// Side of the square opening element for the long branch.
    pub open_kernel: usize,
    /// Side of the square closing element applied after fusion.
    pub close_kernel: usize,
    /// Sigma of the 5x5 Gaussian in the short branch.
    pub blur_sigma: f64,
}

impl Default for MotionParams {
    fn default() -> Self {
        Self {
            tau_s: 15.0,
            tau_l: 30.0,
            k_short: 1,
            k_long: 5,
            open_kernel: 3,
            close_kernel: 7,
            blur_sigma: 1.1,
        }
    }
}

impl MotionParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.tau_s >= 0.0) {
            return Err(Error::Config("tau_s must be >= 0".into()));
        }
        if !(self.tau_l > self.tau_s) {
            return Err(Error::Config("tau_l must exceed tau_s".into()));
        }
        if self.k_short != 1 {
            return Err(Error::Config("k_short is fixed at 1".into()));
        }
        if self.k_long <= self.k_short {
            return Err(Error::Config("k_long must exceed k_short".into()));
        }
        for (name, k) in [
            ("open_kernel", self.open_kernel),
            ("close_kernel", self.close_kernel),
        ] {
            if k % 2 == 0 {
                return Err(Error::Config(format!("{name} must be odd, got {k}")));
            }
        }
        if !(self.blur_sigma > 0.0) {
            return Err(Error::Config("blur_sigma must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MorphOp {
    Open,
    Close,
}

fn check_pair(cur: &Frame, reference: &Frame) -> Result<()> {
    if !cur.is_gray() || !reference.is_gray() {
        return Err(Error::InvalidInput(
            "motion extraction expects grayscale frames".into(),
        ));
    }
    if cur.dims() != reference.dims() {
        return Err(Error::DimensionMismatch {
            expected: cur.dims(),
            found: reference.dims(),
        });
    }
    Ok(())
}

/// `|cur - warped| * valid` for an already-warped reference.
pub fn masked_abs_diff(
    cur: &Frame,
    warped: &Frame,
    valid: &ValidRegionMask,
    interval: usize,
) -> Result<DiffMap> {
    check_pair(cur, warped)?;
    if valid.dims() != cur.dims() {
        return Err(Error::DimensionMismatch {
            expected: cur.dims(),
            found: valid.dims(),
        });
    }
    let data = cur
        .data()
        .iter()
        .zip(warped.data())
        .zip(valid.data())
        .map(|((&a, &b), &r)| f64::from((a - b).abs()) * f64::from(r))
        .collect();
    Ok(DiffMap {
        width: cur.width(),
        height: cur.height(),
        interval,
        data,
    })
}

/// Warps `reference` by `h` onto `cur`'s grid and differences inside the
/// valid region. `interval` is the frame distance `k`.
pub fn compensated_diff(
    cur: &Frame,
    reference: &Frame,
    h: &Homography,
    interval: usize,
) -> Result<DiffMap> {
    check_pair(cur, reference)?;
    let (warped, valid) = warp_with_valid_region(reference, h);
    masked_abs_diff(cur, &warped, &valid, interval)
}

/// Normalized 5-tap Gaussian weights.
pub fn gaussian_taps(sigma: f64) -> [f64; 5] {
    let mut taps = [0.0; 5];
    for (i, t) in taps.iter_mut().enumerate() {
        let d = i as f64 - 2.0;
        *t = (-d * d / (2.0 * sigma * sigma)).exp();
    }
    let sum: f64 = taps.iter().sum();
    taps.map(|t| t / sum)
}

/// Mirror index without repeating the edge sample (`-1 -> 1`, `n -> n-2`).
#[inline]
pub(crate) fn reflect101(i: i64, n: usize) -> usize {
    let n = n as i64;
    if n == 1 {
        return 0;
    }
    let period = 2 * (n - 1);
    let mut i = i.rem_euclid(period);
    if i >= n {
        i = period - i;
    }
    i as usize
}

/// 5x5 Gaussian (sigma 1.1) with mirrored borders.
pub fn gaussian_blur(map: &DiffMap) -> DiffMap {
    gaussian_blur_sigma(map, MotionParams::default().blur_sigma)
}

/// Separable 5x5 Gaussian: horizontal pass, then vertical.
pub fn gaussian_blur_sigma(map: &DiffMap, sigma: f64) -> DiffMap {
    let taps = gaussian_taps(sigma);
    let (w, h) = (map.width, map.height);
    let cols: Vec<[usize; 5]> = (0..w)
        .map(|x| [0, 1, 2, 3, 4].map(|k| reflect101(x as i64 + k as i64 - 2, w)))
        .collect();
    let mut tmp = vec![0.0f64; w * h];
    for y in 0..h {
        let row = &map.data[y * w..(y + 1) * w];
        for (x, idx) in cols.iter().enumerate() {
            let mut acc = 0.0;
            for (t, &i) in taps.iter().zip(idx) {
                acc += t * row[i];
            }
            tmp[y * w + x] = acc;
        }
    }
    let mut out = vec![0.0f64; w * h];
    for y in 0..h {
        let rows = [0, 1, 2, 3, 4].map(|k| reflect101(y as i64 + k as i64 - 2, h) * w);
        for x in 0..w {
            let mut acc = 0.0;
            for (t, r) in taps.iter().zip(rows) {
                acc += t * tmp[r + x];
            }
            out[y * w + x] = acc;
        }
    }
    DiffMap {
        width: w,
        height: h,
        interval: map.interval,
        data: out,
    }
}

/// `out(x) = 1` iff `map(x) > tau`.
pub fn threshold_binary(map: &DiffMap, tau: f64) -> Result<MotionMask> {
    if !(tau >= 0.0) {
        return Err(Error::InvalidInput(format!("threshold must be >= 0, got {tau}")));
    }
    let data = map.data.iter().map(|&v| u8::from(v > tau)).collect();
    BinaryMask::from_vec(map.width, map.height, data)
}

/// One separable pass of a flat square element along rows (`horizontal`) or
/// columns. Erosion ignores out-of-raster samples, dilation treats them as
/// background; the two form an adjunction so openings and closings are
/// idempotent.
fn flat_pass(src: &[u8], w: usize, h: usize, radius: usize, erode: bool, horizontal: bool) -> Vec<u8> {
    let mut out = vec![0u8; w * h];
    if !horizontal {
        // Row-major sweep: each output row combines the in-raster rows of its window.
        for y in 0..h {
            let (lo, hi) = (y.saturating_sub(radius), (y + radius).min(h - 1));
            let dst = &mut out[y * w..(y + 1) * w];
            dst.copy_from_slice(&src[lo * w..(lo + 1) * w]);
            for r in lo + 1..=hi {
                let row = &src[r * w..(r + 1) * w];
                for (d, &s) in dst.iter_mut().zip(row) {
                    *d = if erode { *d & s } else { *d | s };
                }
            }
        }
        return out;
    }
    let mut prefix = vec![0u32; w + 1];
    for (row, dst) in src.chunks_exact(w).zip(out.chunks_exact_mut(w)) {
        for (i, &v) in row.iter().enumerate() {
            // Count of foreground pixels.
            prefix[i + 1] = prefix[i] + u32::from(v);
        }
        for (i, d) in dst.iter_mut().enumerate() {
            let lo = i.saturating_sub(radius);
            let hi = (i + radius).min(w - 1);
            let ones = prefix[hi + 1] - prefix[lo];
            let on = if erode { ones as usize == hi + 1 - lo } else { ones > 0 };
            *d = u8::from(on);
        }
    }
    out
}

fn flat(mask: &MotionMask, kernel: usize, erode: bool) -> MotionMask {
    let (w, h) = (mask.width(), mask.height());
    if w == 0 || h == 0 {
        return mask.clone();
    }
    let r = kernel / 2;
    let pass = flat_pass(mask.data(), w, h, r, erode, true);
    let pass = flat_pass(&pass, w, h, r, erode, false);
    BinaryMask::from_vec(w, h, pass).expect("dims preserved")
}

pub fn erode(mask: &MotionMask, kernel: usize) -> MotionMask {
    flat(mask, kernel, true)
}

pub fn dilate(mask: &MotionMask, kernel: usize) -> MotionMask {
    flat(mask, kernel, false)
}

/// Opening (erode, dilate) or closing (dilate, erode) with a `kernel x kernel`
/// square of ones.
pub fn morphology(mask: &MotionMask, op: MorphOp, kernel: usize) -> Result<MotionMask> {
    if kernel % 2 == 0 {
        return Err(Error::InvalidInput(format!(
            "structuring element side must be odd, got {kernel}"
        )));
    }
    Ok(match op {
        MorphOp::Open => dilate(&erode(mask, kernel), kernel),
        MorphOp::Close => erode(&dilate(mask, kernel), kernel),
    })
}

/// `D_s = T_{tau_s}(G_5x5(delta1))`.
pub fn short_term_mask(delta1: &DiffMap, params: &MotionParams) -> Result<MotionMask> {
    if delta1.interval != params.k_short {
        return Err(Error::IntervalMismatch {
            expected: params.k_short,
            found: delta1.interval,
        });
    }
    threshold_binary(&gaussian_blur_sigma(delta1, params.blur_sigma), params.tau_s)
}

/// `D_l = OPEN(T_{tau_l}(delta_long))`.
pub fn long_term_mask(delta_long: &DiffMap, params: &MotionParams) -> Result<MotionMask> {
    if delta_long.interval != params.k_long {
        return Err(Error::IntervalMismatch {
            expected: params.k_long,
            found: delta_long.interval,
        });
    }
    let raw = threshold_binary(delta_long, params.tau_l)?;
    morphology(&raw, MorphOp::Open, params.open_kernel)
}

/// `M = CLOSE(D_s AND D_l)`.
pub fn fuse_masks(d_s: &MotionMask, d_l: &MotionMask, params: &MotionParams) -> Result<MotionMask> {
    let both = d_s.and(d_l)?;
    morphology(&both, MorphOp::Close, params.close_kernel)
}

/// Intermediate and final masks of one extraction.
#[derive(Debug, Clone, PartialEq)]
pub struct MotionStages {
    pub short: MotionMask,
    pub long: MotionMask,
    pub fused: MotionMask,
}

/// Full extraction for frame `t` given the frames at `t-1` and `t-k_long`
/// and the homographies mapping `cur` into each of them.
pub fn extract_motion_stages(
    cur: &Frame,
    ref_short: &Frame,
    ref_long: &Frame,
    h_short: &Homography,
    h_long: &Homography,
    params: &MotionParams,
) -> Result<MotionStages> {
    params.validate()?;
    let delta_short = compensated_diff(cur, ref_short, h_short, params.k_short)?;
    let delta_long = compensated_diff(cur, ref_long, h_long, params.k_long)?;
    let short = short_term_mask(&delta_short, params)?;
    let long = long_term_mask(&delta_long, params)?;
    let fused = fuse_masks(&short, &long, params)?;
    Ok(MotionStages { short, long, fused })
}

pub fn extract_motion_mask(
    cur: &Frame,
    ref_short: &Frame,
    ref_long: &Frame,
    h_short: &Homography,
    h_long: &Homography,
    params: &MotionParams,
) -> Result<MotionMask> {
    extract_motion_stages(cur, ref_short, ref_long, h_short, h_long, params).map(|s| s.fused)
}
