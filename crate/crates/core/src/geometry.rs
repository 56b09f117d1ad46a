//! Planar projective geometry for global motion compensation.
//!
//! Convention used throughout the crate: the homography `H_{t,t-k}` maps pixel
//! coordinates of the current frame `I_t` to coordinates of the reference
//! frame `I_{t-k}`. Warping the reference into the current grid therefore
//! samples the reference at `H x` for every output pixel `x`, and cascading
//! adjacent-frame steps is the matrix product
//! `H_{t-k+1,t-k} * ... * H_{t-1,t-2} * H_{t,t-1}`.

use nalgebra::{DMatrix, Matrix3, SMatrix, SVector};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::raster::{BinaryMask, Frame};

/// Determinant magnitude below which a matrix is treated as singular.
pub const SINGULAR_EPS: f64 = 1e-12;

/// Binary raster marking pixels covered by a warped reference frame.
pub type ValidRegionMask = BinaryMask;

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    #[inline]
    pub fn distance(&self, other: &Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

impl From<(f64, f64)> for Point {
    fn from((x, y): (f64, f64)) -> Self {
        Self { x, y }
    }
}

/// A normalized, invertible 3x3 projective transform.
///
/// The matrix is scaled so that `m[2][2] == 1`, or to unit Frobenius norm when
/// that entry vanishes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Homography {
    m: Matrix3<f64>,
}

impl Homography {
    pub fn new(m: Matrix3<f64>) -> Result<Self> {
        if m.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidInput("homography has non-finite entries".into()));
        }
        let m = normalize(m);
        let det = m.determinant();
        if !(det.abs() > SINGULAR_EPS) {
            return Err(Error::NotInvertible(det));
        }
        Ok(Self { m })
    }

    pub fn from_rows(rows: [[f64; 3]; 3]) -> Result<Self> {
        Self::new(Matrix3::from_fn(|r, c| rows[r][c]))
    }

    pub fn identity() -> Self {
        Self {
            m: Matrix3::identity(),
        }
    }

    pub fn translation(dx: f64, dy: f64) -> Self {
        let mut m = Matrix3::identity();
        m[(0, 2)] = dx;
        m[(1, 2)] = dy;
        Self { m }
    }

    /// Axis scaling about the origin. Panics on a zero factor.
    pub fn scaling(sx: f64, sy: f64) -> Self {
        Self::new(Matrix3::new(sx, 0.0, 0.0, 0.0, sy, 0.0, 0.0, 0.0, 1.0))
            .expect("scale factors must be nonzero")
    }

    /// Rotation by `theta` radians about the origin.
    pub fn rotation(theta: f64) -> Self {
        let (s, c) = theta.sin_cos();
        Self {
            m: Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0),
        }
    }

    #[inline]
    pub fn matrix(&self) -> &Matrix3<f64> {
        &self.m
    }

    pub fn to_rows(&self) -> [[f64; 3]; 3] {
        let mut rows = [[0.0; 3]; 3];
        for (r, row) in rows.iter_mut().enumerate() {
            for (c, v) in row.iter_mut().enumerate() {
                *v = self.m[(r, c)];
            }
        }
        rows
    }

    pub fn determinant(&self) -> f64 {
        self.m.determinant()
    }

    pub fn inverse(&self) -> Result<Self> {
        let inv = self
            .m
            .try_inverse()
            .ok_or_else(|| Error::NotInvertible(self.determinant()))?;
        Self::new(inv)
    }

    /// `self * rhs`: applies `rhs` first, then `self`.
    pub fn compose(&self, rhs: &Homography) -> Result<Self> {
        Self::new(self.m * rhs.m)
    }

    pub fn project(&self, p: Point) -> Result<Point> {
        project_point(self, p)
    }

    /// Largest displacement between `self` and `other` over the four corners
    /// of a `dims = (H, W)` raster.
    pub fn corner_deviation(&self, other: &Homography, dims: (usize, usize)) -> Result<f64> {
        let mut worst: f64 = 0.0;
        for c in raster_corners(dims) {
            let a = self.project(c)?;
            let b = other.project(c)?;
            worst = worst.max(a.distance(&b));
        }
        Ok(worst)
    }
}

impl Serialize for Homography {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Homography {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = <[[f64; 3]; 3]>::deserialize(d)?;
        Homography::from_rows(rows).map_err(serde::de::Error::custom)
    }
}

fn normalize(m: Matrix3<f64>) -> Matrix3<f64> {
    let pivot = m[(2, 2)];
    if pivot.abs() > SINGULAR_EPS {
        m / pivot
    } else {
        let norm = m.norm();
        if norm > 0.0 {
            m / norm
        } else {
            m
        }
    }
}

/// Pixel-center coordinates of the four raster corners for `dims = (H, W)`.
pub fn raster_corners((h, w): (usize, usize)) -> [Point; 4] {
    let (xm, ym) = (w.saturating_sub(1) as f64, h.saturating_sub(1) as f64);
    [
        Point::new(0.0, 0.0),
        Point::new(xm, 0.0),
        Point::new(xm, ym),
        Point::new(0.0, ym),
    ]
}

/// A putative correspondence between the current and a reference frame.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointMatch {
    /// Location in the current frame `I_t`.
    pub p_cur: Point,
    /// Location in the reference frame `I_{t-k}`.
    pub p_ref: Point,
    /// Descriptor distance, lower is better.
    pub score: u32,
}

impl PointMatch {
    pub fn new(p_cur: Point, p_ref: Point, score: u32) -> Self {
        Self {
            p_cur,
            p_ref,
            score,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RansacParams {
    pub max_iterations: usize,
    pub inlier_threshold_px: f64,
    pub min_inliers: usize,
    pub rng_seed: u64,
}

impl Default for RansacParams {
    fn default() -> Self {
        Self {
            max_iterations: 1000,
            inlier_threshold_px: 3.0,
            min_inliers: 12,
            rng_seed: 0,
        }
    }
}

impl RansacParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_iterations < 1 {
            return Err(Error::Config("ransac.max_iterations must be >= 1".into()));
        }
        if !(self.inlier_threshold_px > 0.0) {
            return Err(Error::Config("ransac.inlier_threshold_px must be > 0".into()));
        }
        if self.min_inliers < 4 {
            return Err(Error::Config("ransac.min_inliers must be >= 4".into()));
        }
        Ok(())
    }
}

#[inline]
pub fn project_point(h: &Homography, p: Point) -> Result<Point> {
    let m = &h.m;
    let w = m[(2, 0)] * p.x + m[(2, 1)] * p.y + m[(2, 2)];
    if w.abs() < SINGULAR_EPS {
        return Err(Error::PointAtInfinity);
    }
    Ok(Point::new(
        (m[(0, 0)] * p.x + m[(0, 1)] * p.y + m[(0, 2)]) / w,
        (m[(1, 0)] * p.x + m[(1, 1)] * p.y + m[(1, 2)]) / w,
    ))
}

/// Similarity that moves the centroid to the origin and the mean distance
/// to sqrt(2).
fn hartley(points: &[Point]) -> Result<(Vec<Point>, Matrix3<f64>)> {
    let n = points.len() as f64;
    let cx = points.iter().map(|p| p.x).sum::<f64>() / n;
    let cy = points.iter().map(|p| p.y).sum::<f64>() / n;
    let mean_dist = points
        .iter()
        .map(|p| (p.x - cx).hypot(p.y - cy))
        .sum::<f64>()
        / n;
    if !(mean_dist > 1e-12) {
        return Err(Error::DegenerateConfiguration(
            "all points coincide".into(),
        ));
    }
    let s = std::f64::consts::SQRT_2 / mean_dist;
    let t = Matrix3::new(s, 0.0, -s * cx, 0.0, s, -s * cy, 0.0, 0.0, 1.0);
    let normalized = points
        .iter()
        .map(|p| Point::new(s * (p.x - cx), s * (p.y - cy)))
        .collect();
    Ok((normalized, t))
}

#[inline]
fn triangle_area(a: Point, b: Point, c: Point) -> f64 {
    0.5 * ((b.x - a.x) * (c.y - a.y) - (c.x - a.x) * (b.y - a.y)).abs()
}

/// Minimum area (in Hartley-normalized units) a triangle of correspondences
/// must span before it is treated as collinear.
const MIN_TRIANGLE_AREA: f64 = 1e-4;

fn any_collinear_triple(points: &[Point]) -> bool {
    let n = points.len();
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                if triangle_area(points[i], points[j], points[k]) < MIN_TRIANGLE_AREA {
                    return true;
                }
            }
        }
    }
    false
}

/// Smallest eigenvalue of the 2x2 scatter matrix; zero iff all points lie on
/// one line.
fn min_spread(points: &[Point]) -> f64 {
    let n = points.len() as f64;
    let (mut sxx, mut sxy, mut syy) = (0.0, 0.0, 0.0);
    for p in points {
        sxx += p.x * p.x;
        sxy += p.x * p.y;
        syy += p.y * p.y;
    }
    let (sxx, sxy, syy) = (sxx / n, sxy / n, syy / n);
    let tr = sxx + syy;
    let det = sxx * syy - sxy * sxy;
    0.5 * (tr - (tr * tr - 4.0 * det).max(0.0).sqrt())
}

fn check_spread(src: &[Point], dst: &[Point]) -> Result<()> {
    let collinear = if src.len() <= 8 {
        any_collinear_triple(src) || any_collinear_triple(dst)
    } else {
        min_spread(src) < MIN_TRIANGLE_AREA || min_spread(dst) < MIN_TRIANGLE_AREA
    };
    if collinear {
        Err(Error::DegenerateConfiguration(
            "correspondences are (nearly) collinear".into(),
        ))
    } else {
        Ok(())
    }
}

/// Least-squares DLT homography with Hartley conditioning.
///
/// The result maps `p_cur` to `p_ref`.
pub fn dlt_solve(matches: &[PointMatch]) -> Result<Homography> {
    let n = matches.len();
    if n < 4 {
        return Err(Error::DegenerateConfiguration(format!(
            "need at least 4 correspondences, got {n}"
        )));
    }
    let src: Vec<Point> = matches.iter().map(|m| m.p_cur).collect();
    let dst: Vec<Point> = matches.iter().map(|m| m.p_ref).collect();
    let (src_n, t_src) = hartley(&src)?;
    let (dst_n, t_dst) = hartley(&dst)?;
    check_spread(&src_n, &dst_n)?;

    // Pad with zero rows so the SVD always exposes the full right null space.
    let rows = (2 * n).max(9);
    let mut a = DMatrix::<f64>::zeros(rows, 9);
    for (i, (s, d)) in src_n.iter().zip(&dst_n).enumerate() {
        let (x, y, u, v) = (s.x, s.y, d.x, d.y);
        let r0 = 2 * i;
        a[(r0, 0)] = -x;
        a[(r0, 1)] = -y;
        a[(r0, 2)] = -1.0;
        a[(r0, 6)] = u * x;
        a[(r0, 7)] = u * y;
        a[(r0, 8)] = u;
        let r1 = r0 + 1;
        a[(r1, 3)] = -x;
        a[(r1, 4)] = -y;
        a[(r1, 5)] = -1.0;
        a[(r1, 6)] = v * x;
        a[(r1, 7)] = v * y;
        a[(r1, 8)] = v;
    }

    let svd = a.svd(false, true);
    let v_t = svd
        .v_t
        .ok_or_else(|| Error::DegenerateConfiguration("SVD did not converge".into()))?;
    let sv = &svd.singular_values;
    let mut order: Vec<usize> = (0..sv.len()).collect();
    order.sort_by(|&i, &j| sv[i].total_cmp(&sv[j]));
    let (smallest, second) = (order[0], order[1]);
    if sv[second] <= 1e-10 * sv[order[sv.len() - 1]] {
        return Err(Error::DegenerateConfiguration(
            "DLT system is rank deficient".into(),
        ));
    }
    let h = v_t.row(smallest);
    let hn = Matrix3::from_fn(|r, c| h[3 * r + c]);

    let t_dst_inv = t_dst
        .try_inverse()
        .ok_or_else(|| Error::DegenerateConfiguration("conditioning not invertible".into()))?;
    Homography::new(t_dst_inv * hn * t_src).map_err(|e| match e {
        Error::NotInvertible(_) => Error::DegenerateConfiguration(e.to_string()),
        other => other,
    })
}

/// Exact four-point solve with `h22` fixed to one; used for RANSAC hypotheses.
fn minimal_solve(sample: &[PointMatch; 4]) -> Option<Homography> {
    let src: Vec<Point> = sample.iter().map(|m| m.p_cur).collect();
    let dst: Vec<Point> = sample.iter().map(|m| m.p_ref).collect();
    let (src_n, t_src) = hartley(&src).ok()?;
    let (dst_n, t_dst) = hartley(&dst).ok()?;
    if any_collinear_triple(&src_n) || any_collinear_triple(&dst_n) {
        return None;
    }
    let mut a = SMatrix::<f64, 8, 8>::zeros();
    let mut b = SVector::<f64, 8>::zeros();
    for (i, (s, d)) in src_n.iter().zip(&dst_n).enumerate() {
        let (x, y, u, v) = (s.x, s.y, d.x, d.y);
        let r0 = 2 * i;
        a[(r0, 0)] = x;
        a[(r0, 1)] = y;
        a[(r0, 2)] = 1.0;
        a[(r0, 6)] = -u * x;
        a[(r0, 7)] = -u * y;
        b[r0] = u;
        let r1 = r0 + 1;
        a[(r1, 3)] = x;
        a[(r1, 4)] = y;
        a[(r1, 5)] = 1.0;
        a[(r1, 6)] = -v * x;
        a[(r1, 7)] = -v * y;
        b[r1] = v;
    }
    let h = a.lu().solve(&b)?;
    let hn = Matrix3::new(h[0], h[1], h[2], h[3], h[4], h[5], h[6], h[7], 1.0);
    let m = t_dst.try_inverse()? * hn * t_src;
    Homography::new(m).ok()
}

fn collect_inliers(h: &Homography, matches: &[PointMatch], threshold: f64) -> Vec<usize> {
    let thr2 = threshold * threshold;
    matches
        .iter()
        .enumerate()
        .filter_map(|(i, m)| {
            let p = project_point(h, m.p_cur).ok()?;
            let (dx, dy) = (p.x - m.p_ref.x, p.y - m.p_ref.y);
            (dx * dx + dy * dy < thr2).then_some(i)
        })
        .collect()
}

/// Confidence used for adaptive early termination.
const RANSAC_CONFIDENCE: f64 = 0.999;

/// Robust homography from putative matches.
///
/// Returns the refit model and the sorted indices of its inliers. The result
/// depends only on `matches` and `params` (including `rng_seed`).
pub fn estimate_homography_ransac(
    matches: &[PointMatch],
    params: &RansacParams,
) -> Result<(Homography, Vec<usize>)> {
    params.validate()?;
    let n = matches.len();
    if n < params.min_inliers {
        return Err(Error::InsufficientInliers {
            found: n,
            required: params.min_inliers,
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(params.rng_seed);
    let mut best: Option<(Homography, Vec<usize>)> = None;
    let mut budget = params.max_iterations;
    let mut iter = 0;
    while iter < budget {
        iter += 1;
        let idx = rand::seq::index::sample(&mut rng, n, 4);
        let sample = [
            matches[idx.index(0)],
            matches[idx.index(1)],
            matches[idx.index(2)],
            matches[idx.index(3)],
        ];
        let Some(model) = minimal_solve(&sample) else {
            continue;
        };
        let inliers = collect_inliers(&model, matches, params.inlier_threshold_px);
        if best.as_ref().map_or(true, |(_, b)| inliers.len() > b.len()) {
            let ratio = inliers.len() as f64 / n as f64;
            let miss = 1.0 - ratio.powi(4);
            if miss <= f64::EPSILON {
                budget = iter;
            } else {
                let needed = ((1.0 - RANSAC_CONFIDENCE).ln() / miss.ln()).ceil();
                if needed.is_finite() && needed >= 0.0 {
                    budget = budget.min((needed as usize).max(iter));
                }
            }
            best = Some((model, inliers));
        }
    }

    let Some((mut model, mut inliers)) = best else {
        return Err(Error::InsufficientInliers {
            found: 0,
            required: params.min_inliers,
        });
    };
    if inliers.len() < params.min_inliers {
        return Err(Error::InsufficientInliers {
            found: inliers.len(),
            required: params.min_inliers,
        });
    }

    // Least-squares refit on the consensus set, repeated while it does not
    // shrink the support.
    for _ in 0..3 {
        let subset: Vec<PointMatch> = inliers.iter().map(|&i| matches[i]).collect();
        let Ok(refit) = dlt_solve(&subset) else {
            break;
        };
        let refit_inliers = collect_inliers(&refit, matches, params.inlier_threshold_px);
        if refit_inliers.len() < inliers.len() {
            break;
        }
        let converged = refit_inliers == inliers;
        model = refit;
        inliers = refit_inliers;
        if converged {
            break;
        }
    }
    Ok((model, inliers))
}

/// Bilinear sample of channel `c` at `(u, v)`. `None` outside
/// `[0, W-1] x [0, H-1]`.
#[inline]
pub fn sample_bilinear(frame: &Frame, u: f64, v: f64, c: usize) -> Option<f32> {
    let (w, h) = (frame.width(), frame.height());
    if !(u >= 0.0 && v >= 0.0 && u <= (w - 1) as f64 && v <= (h - 1) as f64) {
        return None;
    }
    let mut x0 = u.floor() as usize;
    let mut y0 = v.floor() as usize;
    if x0 + 1 >= w && w > 1 {
        x0 = w - 2;
    }
    if y0 + 1 >= h && h > 1 {
        y0 = h - 2;
    }
    let fx = (u - x0 as f64) as f32;
    let fy = (v - y0 as f64) as f32;
    let x1 = (x0 + 1).min(w - 1);
    let y1 = (y0 + 1).min(h - 1);
    let ch = frame.channels();
    let d = frame.data();
    let at = |x: usize, y: usize| d[(y * w + x) * ch + c];
    let top = at(x0, y0) + (at(x1, y0) - at(x0, y0)) * fx;
    let bottom = at(x0, y1) + (at(x1, y1) - at(x0, y1)) * fx;
    Some(top + (bottom - top) * fy)
}

/// Walks every output pixel of a `dims` grid with its projection under `h`.
#[inline]
fn for_each_projection(
    h: &Homography,
    (rows, cols): (usize, usize),
    mut f: impl FnMut(usize, Option<(f64, f64)>),
) {
    let m = h.matrix();
    for y in 0..rows {
        let yf = y as f64;
        let bx = m[(0, 1)] * yf + m[(0, 2)];
        let by = m[(1, 1)] * yf + m[(1, 2)];
        let bw = m[(2, 1)] * yf + m[(2, 2)];
        for x in 0..cols {
            let xf = x as f64;
            let w = m[(2, 0)] * xf + bw;
            let proj = if w.abs() < SINGULAR_EPS {
                None
            } else {
                Some(((m[(0, 0)] * xf + bx) / w, (m[(1, 0)] * xf + by) / w))
            };
            f(y * cols + x, proj);
        }
    }
}

/// Resamples `reference` into the grid of the current frame.
///
/// Output pixel `x` takes the bilinear sample of `reference` at `h * x`;
/// samples that land outside the reference raster are 0.
pub fn warp_perspective(reference: &Frame, h: &Homography) -> Frame {
    warp_perspective_into(reference, h, reference.dims())
}

/// Like [`warp_perspective`] but into an output grid of `dims = (H, W)`.
pub fn warp_perspective_into(reference: &Frame, h: &Homography, dims: (usize, usize)) -> Frame {
    let ch = reference.channels();
    let mut out = vec![0.0f32; dims.0 * dims.1 * ch];
    for_each_projection(h, dims, |i, proj| {
        if let Some((u, v)) = proj {
            for c in 0..ch {
                if let Some(s) = sample_bilinear(reference, u, v, c) {
                    out[i * ch + c] = s;
                }
            }
        }
    });
    Frame::new(dims.1, dims.0, ch, out)
        .expect("buffer sized from dims")
        .with_index(reference.index)
}

/// Coverage of a `dims`-sized reference raster after warping by `h`.
///
/// Identical to warping an all-ones image and thresholding at 0.999.
pub fn valid_region_mask(h: &Homography, dims: (usize, usize)) -> ValidRegionMask {
    let (rows, cols) = dims;
    let mut data = vec![0u8; rows * cols];
    let (xm, ym) = (cols as f64 - 1.0, rows as f64 - 1.0);
    for_each_projection(h, dims, |i, proj| {
        if let Some((u, v)) = proj {
            data[i] = u8::from(u >= 0.0 && v >= 0.0 && u <= xm && v <= ym);
        }
    });
    BinaryMask::from_vec(cols, rows, data).expect("buffer sized from dims")
}

/// Single-pass warp of a grayscale frame that also produces its valid-region
/// mask. Equivalent to calling [`warp_perspective`] and
/// [`valid_region_mask`] separately.
pub fn warp_with_valid_region(reference: &Frame, h: &Homography) -> (Frame, ValidRegionMask) {
    let dims = reference.dims();
    let ch = reference.channels();
    let mut out = vec![0.0f32; dims.0 * dims.1 * ch];
    let mut valid = vec![0u8; dims.0 * dims.1];
    if ch == 1 && dims.0 > 1 && dims.1 > 1 {
        warp_gray_into(reference, h, &mut out, &mut valid);
        return (
            Frame::new(dims.1, dims.0, 1, out)
                .expect("buffer sized from dims")
                .with_index(reference.index),
            BinaryMask::from_vec(dims.1, dims.0, valid).expect("buffer sized from dims"),
        );
    }
    for_each_projection(h, dims, |i, proj| {
        if let Some((u, v)) = proj {
            for c in 0..ch {
                if let Some(s) = sample_bilinear(reference, u, v, c) {
                    out[i * ch + c] = s;
                    valid[i] = 1;
                }
            }
        }
    });
    (
        Frame::new(dims.1, dims.0, ch, out)
            .expect("buffer sized from dims")
            .with_index(reference.index),
        BinaryMask::from_vec(dims.1, dims.0, valid).expect("buffer sized from dims"),
    )
}

/// Grayscale specialization of [`warp_with_valid_region`] for rasters of at
/// least 2x2. Arithmetic matches [`sample_bilinear`] exactly.
fn warp_gray_into(reference: &Frame, h: &Homography, out: &mut [f32], valid: &mut [u8]) {
    let (w, ht) = (reference.width(), reference.height());
    let (xm, ym) = ((w - 1) as f64, (ht - 1) as f64);
    let d = reference.data();
    let m = h.matrix();
    for y in 0..ht {
        let yf = y as f64;
        let bx = m[(0, 1)] * yf + m[(0, 2)];
        let by = m[(1, 1)] * yf + m[(1, 2)];
        let bw = m[(2, 1)] * yf + m[(2, 2)];
        let out_row = &mut out[y * w..(y + 1) * w];
        let valid_row = &mut valid[y * w..(y + 1) * w];
        for (x, (o, vl)) in out_row.iter_mut().zip(valid_row.iter_mut()).enumerate() {
            let xf = x as f64;
            let den = m[(2, 0)] * xf + bw;
            if den.abs() < SINGULAR_EPS {
                continue;
            }
            let u = (m[(0, 0)] * xf + bx) / den;
            let v = (m[(1, 0)] * xf + by) / den;
            if !(u >= 0.0 && v >= 0.0 && u <= xm && v <= ym) {
                continue;
            }
            let x0 = (u as usize).min(w - 2);
            let y0 = (v as usize).min(ht - 2);
            let fx = (u - x0 as f64) as f32;
            let fy = (v - y0 as f64) as f32;
            let i = y0 * w + x0;
            let (a, b) = (d[i], d[i + 1]);
            let (c, e) = (d[i + w], d[i + w + 1]);
            let top = a + (b - a) * fx;
            let bottom = c + (e - c) * fx;
            *o = top + (bottom - top) * fy;
            *vl = 1;
        }
    }
}

/// Long-interval transform from a window of adjacent-frame steps
/// `[H_{t,t-1}, H_{t-1,t-2}, ..., H_{t-k+1,t-k}]`.
pub fn cascade_homographies(window: &[Homography]) -> Result<Homography> {
    let (first, rest) = window
        .split_first()
        .ok_or_else(|| Error::InvalidInput("cascade window is empty".into()))?;
    let mut acc = first.m;
    for (i, step) in rest.iter().enumerate() {
        acc = step.m * acc;
        let det = acc.determinant();
        if !(det.abs() > SINGULAR_EPS) {
            return Err(Error::SingularComposition(i + 1));
        }
        acc = normalize(acc);
    }
    Homography::new(acc).map_err(|_| Error::SingularComposition(window.len() - 1))
}
