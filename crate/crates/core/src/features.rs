//! Single-scale ORB: FAST-9 corners, intensity-centroid orientation and a
//! steered 256-bit BRIEF descriptor, plus brute-force Hamming matching.

use serde::{Deserialize, Serialize};

use crate::brief_pairs::BRIEF_PAIRS;
use crate::error::{Error, Result};
use crate::geometry::{sample_bilinear, Point, PointMatch};
use crate::raster::Frame;

/// Radius of the orientation / descriptor patch.
pub const PATCH_RADIUS: i32 = 15;
/// Minimum distance between a keypoint and the image border.
pub const SAMPLING_MARGIN: usize = 19;
/// Smallest accepted image side.
pub const MIN_IMAGE_SIDE: usize = 64;

/// Bresenham circle of radius 3, clockwise from 12 o'clock.
const CIRCLE: [(i32, i32); 16] = [
    (0, -3),
    (1, -3),
    (2, -2),
    (3, -1),
    (3, 0),
    (3, 1),
    (2, 2),
    (1, 3),
    (0, 3),
    (-1, 3),
    (-2, 2),
    (-3, 1),
    (-3, 0),
    (-3, -1),
    (-2, -2),
    (-1, -3),
];

const ARC_LENGTH: usize = 9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct FeatureParams {
    pub fast_threshold: f32,
    pub max_keypoints: usize,
    pub ratio_test: f64,
    /// `(rows, cols)` of the retention grid.
    pub grid_cells: (usize, usize),
    /// Refines matched positions to subpixel accuracy before estimation.
    pub subpixel_refinement: bool,
}

impl Default for FeatureParams {
    fn default() -> Self {
        Self {
            fast_threshold: 20.0,
            max_keypoints: 500,
            ratio_test: 0.75,
            grid_cells: (4, 4),
            subpixel_refinement: true,
        }
    }
}

impl FeatureParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.ratio_test > 0.0 && self.ratio_test < 1.0) {
            return Err(Error::Config(
                "features.ratio_test must lie in (0, 1)".into(),
            ));
        }
        if self.max_keypoints < 4 {
            return Err(Error::Config("features.max_keypoints must be >= 4".into()));
        }
        if self.grid_cells.0 == 0 || self.grid_cells.1 == 0 {
            return Err(Error::Config("features.grid_cells must be positive".into()));
        }
        if !(self.fast_threshold >= 0.0) {
            return Err(Error::Config("features.fast_threshold must be >= 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Keypoint {
    pub x: f64,
    pub y: f64,
    pub response: f32,
    /// Orientation in radians.
    pub angle: f64,
}

impl Keypoint {
    pub fn point(&self) -> Point {
        Point::new(self.x, self.y)
    }

    #[inline]
    fn pixel(&self) -> (i64, i64) {
        (self.x.round() as i64, self.y.round() as i64)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default)]
pub struct BinaryDescriptor {
    words: [u64; 4],
}

impl BinaryDescriptor {
    pub fn from_bytes(bytes: [u8; 32]) -> Self {
        let mut words = [0u64; 4];
        for (w, chunk) in words.iter_mut().zip(bytes.chunks_exact(8)) {
            *w = u64::from_le_bytes(chunk.try_into().expect("8-byte chunk"));
        }
        Self { words }
    }

    pub fn to_bytes(&self) -> [u8; 32] {
        let mut out = [0u8; 32];
        for (chunk, w) in out.chunks_exact_mut(8).zip(self.words) {
            chunk.copy_from_slice(&w.to_le_bytes());
        }
        out
    }

    #[inline]
    pub fn bit(&self, i: usize) -> bool {
        (self.words[i / 64] >> (i % 64)) & 1 == 1
    }

    #[inline]
    pub fn set_bit(&mut self, i: usize, on: bool) {
        let mask = 1u64 << (i % 64);
        if on {
            self.words[i / 64] |= mask;
        } else {
            self.words[i / 64] &= !mask;
        }
    }

    #[inline]
    pub fn hamming(&self, other: &BinaryDescriptor) -> u32 {
        self.words
            .iter()
            .zip(&other.words)
            .map(|(a, b)| (a ^ b).count_ones())
            .sum()
    }
}

/// A keypoint together with its descriptor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Feature {
    pub keypoint: Keypoint,
    pub descriptor: BinaryDescriptor,
}

fn require_gray(image: &Frame) -> Result<()> {
    if image.is_gray() {
        Ok(())
    } else {
        Err(Error::InvalidInput(
            "feature extraction expects a grayscale frame".into(),
        ))
    }
}

/// True when the 16-bit ring mask holds `ARC_LENGTH` contiguous set bits,
/// wrapping around.
#[inline]
fn has_arc(mask: u32) -> bool {
    let doubled = mask | (mask << 16);
    let mut run = doubled;
    for shift in 1..ARC_LENGTH {
        run &= doubled >> shift;
    }
    run & 0xffff != 0
}

/// Segment-test score at `(x, y)`, or `None` when the pixel is not a corner.
///
/// The score is the sum of absolute deltas along the strongest qualifying arc.
#[inline]
fn fast_score(data: &[f32], offsets: &[isize; 16], center: usize, threshold: f32) -> Option<f32> {
    let c = data[center];
    let at = |k: usize| data[center.wrapping_add_signed(offsets[k])];
    let hi = c + threshold;
    let lo = c - threshold;

    // Any 9-arc contains at least two of the four compass points.
    let (a, b, cc, d) = (at(0), at(4), at(8), at(12));
    let n_hi = u8::from(a > hi) + u8::from(b > hi) + u8::from(cc > hi) + u8::from(d > hi);
    let n_lo = u8::from(a < lo) + u8::from(b < lo) + u8::from(cc < lo) + u8::from(d < lo);
    if n_hi < 2 && n_lo < 2 {
        return None;
    }

    let mut ring = [0.0f32; 16];
    let (mut bright, mut dark) = (0u32, 0u32);
    for (k, v) in ring.iter_mut().enumerate() {
        *v = at(k);
        bright |= u32::from(*v > hi) << k;
        dark |= u32::from(*v < lo) << k;
    }
    if !has_arc(bright) && !has_arc(dark) {
        return None;
    }
    let mut best: Option<f32> = None;
    for brighter in [true, false] {
        let passes = |v: f32| if brighter { v > hi } else { v < lo };
        // Walk the ring twice so arcs may wrap around.
        let mut run = 0usize;
        let mut sum = 0.0f32;
        for i in 0..32 {
            let v = ring[i % 16];
            if passes(v) {
                run += 1;
                sum += (v - c).abs();
                if run > 16 {
                    // Whole ring qualifies; drop the oldest element.
                    run = 16;
                    sum -= (ring[(i - 16) % 16] - c).abs();
                }
                if run >= ARC_LENGTH {
                    best = Some(best.map_or(sum, |b: f32| b.max(sum)));
                }
            } else {
                run = 0;
                sum = 0.0;
            }
        }
    }
    best
}

/// FAST-9 corners with 3x3 non-maximum suppression and grid-balanced
/// retention. Returned keypoints carry their intensity-centroid orientation.
pub fn detect_fast(image: &Frame, params: &FeatureParams) -> Result<Vec<Keypoint>> {
    require_gray(image)?;
    let (w, h) = (image.width(), image.height());
    if w.min(h) < MIN_IMAGE_SIDE {
        return Err(Error::ImageTooSmall {
            width: w,
            height: h,
            min: MIN_IMAGE_SIDE,
        });
    }
    let data = image.data();
    let m = SAMPLING_MARGIN;
    let mut response = vec![0.0f32; w * h];
    let mut candidates = Vec::new();
    let offsets = CIRCLE.map(|(dx, dy)| dy as isize * w as isize + dx as isize);
    for y in m..h - m {
        for x in m..w - m {
            if let Some(s) = fast_score(data, &offsets, y * w + x, params.fast_threshold) {
                response[y * w + x] = s;
                candidates.push((x, y));
            }
        }
    }

    // Ties are broken in raster order: a pixel must beat earlier neighbours
    // strictly and later ones weakly.
    let mut kept: Vec<Keypoint> = candidates
        .into_iter()
        .filter(|&(x, y)| {
            let r = response[y * w + x];
            for dy in -1i64..=1 {
                for dx in -1i64..=1 {
                    if dx == 0 && dy == 0 {
                        continue;
                    }
                    let n = response[(y as i64 + dy) as usize * w + (x as i64 + dx) as usize];
                    let earlier = dy < 0 || (dy == 0 && dx < 0);
                    if (earlier && n >= r) || (!earlier && n > r) {
                        return false;
                    }
                }
            }
            true
        })
        .map(|(x, y)| Keypoint {
            x: x as f64,
            y: y as f64,
            response: response[y * w + x],
            angle: 0.0,
        })
        .collect();

    kept = retain_balanced(kept, (w, h), params);
    for kp in &mut kept {
        kp.angle = orientation_ic(image, kp);
    }
    Ok(kept)
}

fn by_response(a: &Keypoint, b: &Keypoint) -> std::cmp::Ordering {
    b.response
        .total_cmp(&a.response)
        .then(a.y.total_cmp(&b.y))
        .then(a.x.total_cmp(&b.x))
}

fn retain_balanced(kps: Vec<Keypoint>, (w, h): (usize, usize), params: &FeatureParams) -> Vec<Keypoint> {
    let (rows, cols) = params.grid_cells;
    let n_cells = rows * cols;
    let per_cell = params.max_keypoints.div_ceil(n_cells);
    let mut cells: Vec<Vec<Keypoint>> = vec![Vec::new(); n_cells];
    for kp in kps {
        let r = ((kp.y as usize * rows) / h).min(rows - 1);
        let c = ((kp.x as usize * cols) / w).min(cols - 1);
        cells[r * cols + c].push(kp);
    }
    let mut out = Vec::with_capacity(params.max_keypoints);
    for mut cell in cells {
        cell.sort_by(by_response);
        cell.truncate(per_cell);
        out.extend(cell);
    }
    out.sort_by(by_response);
    out.truncate(params.max_keypoints);
    out
}

/// Intensity-centroid angle `atan2(m01, m10)` over a radius-15 disk.
pub fn orientation_ic(image: &Frame, kp: &Keypoint) -> f64 {
    let (cx, cy) = kp.pixel();
    let (w, h) = (image.width() as i64, image.height() as i64);
    let data = image.data();
    let ch = image.channels();
    let r = PATCH_RADIUS as i64;
    let (mut m10, mut m01) = (0.0f64, 0.0f64);
    for dy in -r..=r {
        let y = cy + dy;
        if y < 0 || y >= h {
            continue;
        }
        let half = ((r * r - dy * dy) as f64).sqrt().floor() as i64;
        let row = (y * w) as usize;
        let mut row_sum = 0.0f64;
        for dx in -half..=half {
            let x = cx + dx;
            if x < 0 || x >= w {
                continue;
            }
            let v = f64::from(data[(row + x as usize) * ch]);
            m10 += dx as f64 * v;
            row_sum += v;
        }
        m01 += dy as f64 * row_sum;
    }
    if m10 == 0.0 && m01 == 0.0 {
        0.0
    } else {
        m01.atan2(m10)
    }
}

/// 5x5 box filter with clamped borders; the smoothing BRIEF sampling expects.
pub fn smooth_for_descriptor(image: &Frame) -> Frame {
    let (w, h) = (image.width(), image.height());
    let src = image.to_gray();
    let d = src.data();
    let clamp = |v: i64, n: usize| v.clamp(0, n as i64 - 1) as usize;
    let mut tmp = vec![0.0f32; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut s = 0.0;
            for k in -2i64..=2 {
                s += d[y * w + clamp(x as i64 + k, w)];
            }
            tmp[y * w + x] = s;
        }
    }
    let mut out = vec![0.0f32; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut s = 0.0;
            for k in -2i64..=2 {
                s += tmp[clamp(y as i64 + k, h) * w + x];
            }
            out[y * w + x] = s / 25.0;
        }
    }
    Frame::gray(w, h, out)
        .expect("same dims")
        .with_index(image.index)
}

/// Steered BRIEF over a smoothed image (see [`smooth_for_descriptor`]).
pub fn brief_descriptor(smoothed: &Frame, kp: &Keypoint) -> Result<BinaryDescriptor> {
    let (w, h) = (smoothed.width() as i64, smoothed.height() as i64);
    let (cx, cy) = kp.pixel();
    let m = SAMPLING_MARGIN as i64;
    if cx < m || cy < m || cx >= w - m || cy >= h - m {
        return Err(Error::OutOfBounds {
            x: kp.x,
            y: kp.y,
            margin: SAMPLING_MARGIN,
        });
    }
    let (s, c) = kp.angle.sin_cos();
    let data = smoothed.data();
    let ch = smoothed.channels();
    let sample = |px: i8, py: i8| {
        let (px, py) = (f64::from(px), f64::from(py));
        let rx = (c * px - s * py).round() as i64;
        let ry = (s * px + c * py).round() as i64;
        data[((cy + ry) * w + cx + rx) as usize * ch]
    };
    let mut desc = BinaryDescriptor::default();
    for (i, &[px, py, qx, qy]) in BRIEF_PAIRS.iter().enumerate() {
        desc.set_bit(i, sample(px, py) < sample(qx, qy));
    }
    Ok(desc)
}

/// Detects keypoints and describes them.
pub fn extract_features(image: &Frame, params: &FeatureParams) -> Result<Vec<Feature>> {
    let keypoints = detect_fast(image, params)?;
    let smoothed = smooth_for_descriptor(image);
    keypoints
        .into_iter()
        .map(|kp| {
            Ok(Feature {
                keypoint: kp,
                descriptor: brief_descriptor(&smoothed, &kp)?,
            })
        })
        .collect()
}

/// Brute-force matching with Lowe's ratio test and a mutual cross-check.
///
/// `current` features become `p_cur`, `reference` features `p_ref`. Ties go to
/// the lower index.
pub fn match_hamming_ratio(
    current: &[Feature],
    reference: &[Feature],
    params: &FeatureParams,
) -> Vec<PointMatch> {
    if current.is_empty() || reference.is_empty() {
        return Vec::new();
    }
    let mut back_best = vec![(u32::MAX, usize::MAX); reference.len()];
    let mut forward = Vec::with_capacity(current.len());
    for (i, q) in current.iter().enumerate() {
        let (mut best, mut second, mut best_j) = (u32::MAX, u32::MAX, usize::MAX);
        for (j, r) in reference.iter().enumerate() {
            let d = q.descriptor.hamming(&r.descriptor);
            if d < best {
                second = best;
                best = d;
                best_j = j;
            } else if d < second {
                second = d;
            }
            if d < back_best[j].0 {
                back_best[j] = (d, i);
            }
        }
        forward.push((best, second, best_j));
    }
    forward
        .into_iter()
        .enumerate()
        .filter_map(|(i, (best, second, j))| {
            let ratio_ok = second == u32::MAX || f64::from(best) < params.ratio_test * f64::from(second);
            (ratio_ok && back_best[j].1 == i).then(|| {
                PointMatch::new(
                    current[i].keypoint.point(),
                    reference[j].keypoint.point(),
                    best,
                )
            })
        })
        .collect()
}

/// Half-width of the window used by [`refine_match_subpixel`].
pub const REFINE_RADIUS: i64 = 4;
const REFINE_MAX_ITERATIONS: usize = 12;
const REFINE_MAX_SHIFT: f64 = 2.0;

/// Refines `p_cur` of a match to subpixel accuracy by translational
/// Lucas-Kanade alignment of a window around `p_ref`.
///
/// Returns `None` when the window leaves either image, the window is
/// textureless, or the solution drifts more than two pixels from the
/// integer match.
pub fn refine_match_subpixel(current: &Frame, reference: &Frame, m: &PointMatch) -> Option<PointMatch> {
    let r = REFINE_RADIUS;
    let (cx, cy) = (m.p_ref.x.round() as i64, m.p_ref.y.round() as i64);
    let (w, h) = (reference.width() as i64, reference.height() as i64);
    if cx - r - 1 < 0 || cy - r - 1 < 0 || cx + r + 1 >= w || cy + r + 1 >= h {
        return None;
    }
    let at = |x: i64, y: i64| f64::from(reference.get(x as usize, y as usize));
    let mut template = Vec::with_capacity(((2 * r + 1) * (2 * r + 1)) as usize);
    let (mut gxx, mut gxy, mut gyy) = (0.0, 0.0, 0.0);
    for v in -r..=r {
        for u in -r..=r {
            let (x, y) = (cx + u, cy + v);
            let gx = (at(x + 1, y) - at(x - 1, y)) / 2.0;
            let gy = (at(x, y + 1) - at(x, y - 1)) / 2.0;
            gxx += gx * gx;
            gxy += gx * gy;
            gyy += gy * gy;
            template.push((u as f64, v as f64, at(x, y), gx, gy));
        }
    }
    let det = gxx * gyy - gxy * gxy;
    let trace = gxx + gyy;
    if !(trace > 0.0) || det <= 1e-3 * trace * trace {
        return None;
    }
    let start = (m.p_cur.x - cx as f64, m.p_cur.y - cy as f64);
    let mut d = start;
    for _ in 0..REFINE_MAX_ITERATIONS {
        let (mut bx, mut by) = (0.0, 0.0);
        for &(u, v, t, gx, gy) in &template {
            let i = sample_bilinear(current, cx as f64 + d.0 + u, cy as f64 + d.1 + v, 0)?;
            let e = f64::from(i) - t;
            bx += gx * e;
            by += gy * e;
        }
        let step = ((gyy * bx - gxy * by) / det, (gxx * by - gxy * bx) / det);
        d = (d.0 - step.0, d.1 - step.1);
        if (d.0 - start.0).hypot(d.1 - start.1) > REFINE_MAX_SHIFT {
            return None;
        }
        if step.0.hypot(step.1) < 1e-3 {
            break;
        }
    }
    Some(PointMatch::new(
        Point::new(cx as f64 + d.0, cy as f64 + d.1),
        Point::new(cx as f64, cy as f64),
        m.score,
    ))
}

/// Applies [`refine_match_subpixel`] to every match, dropping those that fail.
pub fn refine_matches(current: &Frame, reference: &Frame, matches: &[PointMatch]) -> Vec<PointMatch> {
    matches
        .iter()
        .filter_map(|m| refine_match_subpixel(current, reference, m))
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn square_image() -> Frame {
        let mut f = Frame::filled(64, 64, 0.0);
        for y in 27..37 {
            for x in 27..37 {
                f.set(x, y, 255.0);
            }
        }
        f
    }

    /// Direct segment test at every pixel, without any early rejection.
    fn brute_force_corners(f: &Frame, t: f32) -> Vec<(usize, usize)> {
        let mut out = Vec::new();
        for y in 3..f.height() - 3 {
            for x in 3..f.width() - 3 {
                let c = f.get(x, y);
                for brighter in [true, false] {
                    let flags: Vec<bool> = CIRCLE
                        .iter()
                        .map(|&(dx, dy)| {
                            let v = f.get((x as i32 + dx) as usize, (y as i32 + dy) as usize);
                            if brighter {
                                v > c + t
                            } else {
                                v < c - t
                            }
                        })
                        .collect();
                    let has_arc = (0..16).any(|s| (0..ARC_LENGTH).all(|k| flags[(s + k) % 16]));
                    if has_arc {
                        out.push((x, y));
                    }
                }
            }
        }
        out
    }

    /// Smooth value-noise texture for descriptor tests.
    pub(crate) fn texture(w: usize, h: usize, seed: u64) -> Frame {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cell = 6usize;
        let gw = w / cell + 2;
        let gh = h / cell + 2;
        let lattice: Vec<f32> = (0..gw * gh).map(|_| rng.gen_range(20.0..235.0)).collect();
        let mut data = Vec::with_capacity(w * h);
        for y in 0..h {
            for x in 0..w {
                let (fx, fy) = (x as f32 / cell as f32, y as f32 / cell as f32);
                let (ix, iy) = (fx as usize, fy as usize);
                let (tx, ty) = (fx - ix as f32, fy - iy as f32);
                let (sx, sy) = (tx * tx * (3.0 - 2.0 * tx), ty * ty * (3.0 - 2.0 * ty));
                let l = |a: usize, b: usize| lattice[b * gw + a];
                let top = l(ix, iy) + (l(ix + 1, iy) - l(ix, iy)) * sx;
                let bot = l(ix, iy + 1) + (l(ix + 1, iy + 1) - l(ix, iy + 1)) * sx;
                data.push(top + (bot - top) * sy);
            }
        }
        Frame::gray(w, h, data).unwrap()
    }

    #[test]
    fn uniform_image_has_no_corners() {
        let f = Frame::filled(80, 80, 128.0);
        assert!(detect_fast(&f, &FeatureParams::default()).unwrap().is_empty());
    }

    #[test]
    fn square_corners_only() {
        let f = square_image();
        let kps = detect_fast(&f, &FeatureParams::default()).unwrap();
        let oracle = brute_force_corners(&f, 20.0);
        let corners = [(27.0, 27.0), (36.0, 27.0), (27.0, 36.0), (36.0, 36.0)];
        assert!(!kps.is_empty());
        for kp in &kps {
            assert!(oracle.contains(&(kp.x as usize, kp.y as usize)));
            let near = corners
                .iter()
                .any(|&(cx, cy)| (kp.x - cx).abs() <= 2.0 && (kp.y - cy).abs() <= 2.0);
            assert!(near, "keypoint off-corner at ({}, {})", kp.x, kp.y);
        }
        for (cx, cy) in corners {
            assert!(kps
                .iter()
                .any(|kp| (kp.x - cx).abs() <= 2.0 && (kp.y - cy).abs() <= 2.0));
        }
        // The brute-force segment test never fires on straight edges either.
        for &(x, y) in &oracle {
            assert!(corners
                .iter()
                .any(|&(cx, cy)| (x as f64 - cx).abs() <= 3.0 && (y as f64 - cy).abs() <= 3.0));
        }
    }

    #[test]
    fn unreachable_threshold() {
        let params = FeatureParams {
            fast_threshold: 256.0,
            ..FeatureParams::default()
        };
        assert!(detect_fast(&square_image(), &params).unwrap().is_empty());
    }

    #[test]
    fn too_small() {
        let f = Frame::filled(63, 100, 0.0);
        assert!(matches!(
            detect_fast(&f, &FeatureParams::default()),
            Err(Error::ImageTooSmall { .. })
        ));
    }

    #[test]
    fn budget_and_margin_respected() {
        let f = texture(320, 240, 5);
        let params = FeatureParams {
            max_keypoints: 100,
            fast_threshold: 5.0,
            ..FeatureParams::default()
        };
        let kps = detect_fast(&f, &params).unwrap();
        assert!(kps.len() <= 100 && !kps.is_empty());
        let m = SAMPLING_MARGIN as f64;
        for kp in kps {
            assert!(kp.x >= m && kp.y >= m && kp.x <= 319.0 - m && kp.y <= 239.0 - m);
        }
    }

    fn kp_at(x: f64, y: f64) -> Keypoint {
        Keypoint {
            x,
            y,
            response: 0.0,
            angle: 0.0,
        }
    }

    #[test]
    fn orientation_symmetric_patch() {
        let f = Frame::filled(64, 64, 90.0);
        assert_eq!(orientation_ic(&f, &kp_at(32.0, 32.0)), 0.0);
    }

    #[test]
    fn orientation_half_planes() {
        let right = Frame::gray(64, 64, (0..64 * 64).map(|i| if i % 64 > 32 { 200.0 } else { 10.0 }).collect()).unwrap();
        let a = orientation_ic(&right, &kp_at(32.0, 32.0));
        // Direct moments: m01 cancels by symmetry, m10 > 0.
        assert!(a.abs() < 1e-6, "angle {a}");
        let below = Frame::gray(64, 64, (0..64 * 64).map(|i| if i / 64 > 32 { 200.0 } else { 10.0 }).collect()).unwrap();
        let b = orientation_ic(&below, &kp_at(32.0, 32.0));
        assert!((b - std::f64::consts::FRAC_PI_2).abs() < 0.05, "angle {b}");
    }

    #[test]
    fn descriptor_is_deterministic_and_checks_margin() {
        let f = smooth_for_descriptor(&texture(96, 96, 1));
        let kp = kp_at(48.0, 48.0);
        assert_eq!(brief_descriptor(&f, &kp).unwrap(), brief_descriptor(&f, &kp).unwrap());
        assert!(matches!(
            brief_descriptor(&f, &kp_at(10.0, 48.0)),
            Err(Error::OutOfBounds { .. })
        ));
    }

    #[test]
    fn descriptor_translation_invariant() {
        let base = texture(160, 160, 2);
        let shifted = crate::geometry::warp_perspective(
            &base,
            &crate::geometry::Homography::translation(-7.0, -4.0),
        );
        let mut a = kp_at(70.0, 70.0);
        let mut b = kp_at(77.0, 74.0);
        a.angle = orientation_ic(&base, &a);
        b.angle = orientation_ic(&shifted, &b);
        let da = brief_descriptor(&smooth_for_descriptor(&base), &a).unwrap();
        let db = brief_descriptor(&smooth_for_descriptor(&shifted), &b).unwrap();
        assert!(da.hamming(&db) <= 16, "distance {}", da.hamming(&db));
    }

    #[test]
    fn descriptor_rotation_steering() {
        let base = texture(160, 160, 3);
        let theta = std::f64::consts::FRAC_PI_4;
        // Output pixel x samples the source at R(-theta) about the center, so
        // content appears rotated by +theta.
        let c = 80.0;
        let to_origin = crate::geometry::Homography::translation(-c, -c);
        let back = crate::geometry::Homography::translation(c, c);
        let h = back
            .compose(&crate::geometry::Homography::rotation(-theta))
            .unwrap()
            .compose(&to_origin)
            .unwrap();
        let rotated = crate::geometry::warp_perspective(&base, &h);

        let mut a = kp_at(c, c);
        let mut b = kp_at(c, c);
        a.angle = orientation_ic(&base, &a);
        b.angle = orientation_ic(&rotated, &b);
        let sa = smooth_for_descriptor(&base);
        let sb = smooth_for_descriptor(&rotated);
        let steered = brief_descriptor(&sa, &a)
            .unwrap()
            .hamming(&brief_descriptor(&sb, &b).unwrap());
        a.angle = 0.0;
        b.angle = 0.0;
        let unsteered = brief_descriptor(&sa, &a)
            .unwrap()
            .hamming(&brief_descriptor(&sb, &b).unwrap());
        assert!(steered <= 64, "steered distance {steered}");
        assert!(unsteered > steered, "{unsteered} vs {steered}");
    }

    fn random_features(n: usize, rng: &mut ChaCha8Rng) -> Vec<Feature> {
        (0..n)
            .map(|i| {
                let mut bytes = [0u8; 32];
                rng.fill(&mut bytes);
                Feature {
                    keypoint: kp_at(i as f64, 0.0),
                    descriptor: BinaryDescriptor::from_bytes(bytes),
                }
            })
            .collect()
    }

    #[test]
    fn identical_lists_match_identically() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let a = random_features(50, &mut rng);
        let m = match_hamming_ratio(&a, &a, &FeatureParams::default());
        assert_eq!(m.len(), 50);
        assert!(m.iter().all(|m| m.score == 0 && m.p_cur == m.p_ref));
    }

    #[test]
    fn subpixel_refinement_recovers_fractional_shift() {
        let reference = texture(96, 96, 3);
        let (dx, dy) = (0.3, -0.4);
        let current = crate::geometry::warp_perspective(&reference, &crate::geometry::Homography::translation(dx, dy));
        let p_ref = Point::new(48.0, 50.0);
        let coarse = PointMatch::new(Point::new(48.0, 50.0), p_ref, 0);
        let refined = refine_match_subpixel(&current, &reference, &coarse).expect("well-conditioned window");
        assert_eq!(refined.p_ref, p_ref);
        assert!((refined.p_cur.x - (48.0 - dx)).abs() < 0.05, "{:?}", refined.p_cur);
        assert!((refined.p_cur.y - (50.0 - dy)).abs() < 0.05, "{:?}", refined.p_cur);

        let flat = Frame::filled(96, 96, 80.0);
        assert!(refine_match_subpixel(&flat, &flat, &coarse).is_none());
        let near_edge = PointMatch::new(Point::new(1.0, 1.0), Point::new(1.0, 1.0), 0);
        assert!(refine_match_subpixel(&current, &reference, &near_edge).is_none());
        assert!(refine_matches(&flat, &flat, &[coarse]).is_empty());
    }

    #[test]
    fn noisy_copies_match_mostly() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let a = random_features(200, &mut rng);
        // Known permutation: b[j] is a noisy copy of a[perm[j]].
        let mut perm: Vec<usize> = (0..200).collect();
        for i in (1..200).rev() {
            perm.swap(i, rng.gen_range(0..=i));
        }
        let b: Vec<Feature> = perm
            .iter()
            .enumerate()
            .map(|(j, &src)| {
                let mut d = a[src].descriptor;
                for _ in 0..8 {
                    let bit = rng.gen_range(0..256);
                    d.set_bit(bit, !d.bit(bit));
                }
                Feature {
                    keypoint: kp_at(src as f64, 1.0 + j as f64),
                    descriptor: d,
                }
            })
            .collect();
        let m = match_hamming_ratio(&a, &b, &FeatureParams::default());
        let correct = m.iter().filter(|m| m.p_cur.x == m.p_ref.x).count();
        assert!(correct as f64 >= 0.95 * 200.0, "correct {correct}");
    }

    #[test]
    fn ratio_survivors_are_mostly_geometric_inliers() {
        use crate::synth::{generate_sequence, EgoMotionSpec, SynthConfig};
        let cfg = SynthConfig {
            dims: (180, 240),
            frames: 6,
            ego_motion: EgoMotionSpec {
                pan: (3.0, -2.0),
                zoom: 1.01,
                rotation: 0.01,
                jitter: 0.0,
            },
            seed: 2,
            ..SynthConfig::default()
        };
        let seq = generate_sequence(&cfg).unwrap();
        let params = FeatureParams::default();
        let cur = extract_features(&seq.frames[1], &params).unwrap();
        let reference = extract_features(&seq.frames[0], &params).unwrap();
        let matches = match_hamming_ratio(&cur, &reference, &params);
        let h = seq.gt_homographies[1];
        let inliers = matches
            .iter()
            .filter(|m| h.project(m.p_cur).unwrap().distance(&m.p_ref) < 3.0)
            .count();
        assert!(matches.len() >= 50, "{} matches", matches.len());
        assert!(inliers as f64 >= 0.7 * matches.len() as f64, "{inliers}/{}", matches.len());
    }

    #[test]
    fn ambiguous_reference_is_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let a = random_features(10, &mut rng);
        let b: Vec<Feature> = (0..10)
            .map(|i| Feature {
                keypoint: kp_at(i as f64, 5.0),
                descriptor: a[0].descriptor,
            })
            .collect();
        assert!(match_hamming_ratio(&a, &b, &FeatureParams::default()).is_empty());
    }

    #[test]
    fn param_validation() {
        for ratio in [0.0, 1.0, 1.5] {
            let p = FeatureParams {
                ratio_test: ratio,
                ..FeatureParams::default()
            };
            assert!(p.validate().is_err());
        }
        let p = FeatureParams {
            max_keypoints: 3,
            ..FeatureParams::default()
        };
        assert!(p.validate().is_err());
    }

    fn desc(bytes: [u8; 32]) -> BinaryDescriptor {
        BinaryDescriptor::from_bytes(bytes)
    }

    proptest! {
        #[test]
        fn prop_hamming_is_metric(a in any::<[u8; 32]>(), b in any::<[u8; 32]>(), c in any::<[u8; 32]>()) {
            let (a, b, c) = (desc(a), desc(b), desc(c));
            prop_assert_eq!(a.hamming(&a), 0);
            prop_assert_eq!(a.hamming(&b), b.hamming(&a));
            prop_assert!(a.hamming(&c) <= a.hamming(&b) + b.hamming(&c));
        }

        #[test]
        fn prop_descriptor_bytes_round_trip(a in any::<[u8; 32]>()) {
            prop_assert_eq!(desc(a).to_bytes(), a);
        }
    }
}
