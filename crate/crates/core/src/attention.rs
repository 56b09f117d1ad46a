//! Motion-guided attention.
//!
//! The motion mask is resized to a pyramid level, passed through
//! `conv3x3 -> ReLU -> conv1x1 -> sigmoid` to form a soft attention map `A`,
//! and the level's features are amplified as `F * (1 + A)`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::motion::MotionMask;

/// Strides of the P3, P4 and P5 pyramid levels.
pub const PYRAMID_STRIDES: [usize; 3] = [8, 16, 32];

/// Default hidden width of the attention block.
pub const DEFAULT_CMID: usize = 8;

/// A single-channel real tensor (`1 x H' x W'`).
#[derive(Debug, Clone, PartialEq)]
pub struct Plane {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl Plane {
    pub fn new(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != width * height {
            return Err(Error::ShapeMismatch(format!(
                "plane holds {} values, expected {width}x{height}",
                data.len()
            )));
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }
}

/// Soft attention over one pyramid level. Values produced by
/// [`attention_map`] lie strictly inside (0, 1).
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionMap {
    pub width: usize,
    pub height: usize,
    pub data: Vec<f64>,
}

impl AttentionMap {
    /// Wraps raw values without range checking.
    pub fn from_raw(width: usize, height: usize, data: Vec<f64>) -> Result<Self> {
        let p = Plane::new(width, height, data)?;
        Ok(Self {
            width: p.width,
            height: p.height,
            data: p.data,
        })
    }

    pub fn filled(width: usize, height: usize, value: f64) -> Self {
        Self {
            width,
            height,
            data: vec![value; width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.data[y * self.width + x]
    }

    pub fn mean(&self) -> f64 {
        self.data.iter().sum::<f64>() / self.data.len().max(1) as f64
    }
}

/// `C x H' x W'` features of one pyramid level, channel-major.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub stride: usize,
    pub data: Vec<f64>,
}

impl FeatureMap {
    pub fn new(channels: usize, height: usize, width: usize, stride: usize, data: Vec<f64>) -> Result<Self> {
        if channels == 0 {
            return Err(Error::ShapeMismatch("feature maps need at least one channel".into()));
        }
        if data.len() != channels * height * width {
            return Err(Error::ShapeMismatch(format!(
                "feature map holds {} values, expected {channels}x{height}x{width}",
                data.len()
            )));
        }
        Ok(Self {
            channels,
            height,
            width,
            stride,
            data,
        })
    }

    /// Level dims for an `input = (H, W)` frame: `ceil(H / stride)` by
    /// `ceil(W / stride)`.
    pub fn level_dims(input: (usize, usize), stride: usize) -> (usize, usize) {
        (input.0.div_ceil(stride), input.1.div_ceil(stride))
    }

    /// Features uniform in [-1, 1), reproducible from `seed`.
    pub fn random(channels: usize, input: (usize, usize), stride: usize, seed: u64) -> Self {
        let (h, w) = Self::level_dims(input, stride);
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let data = (0..channels * h * w)
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        Self {
            channels,
            height: h,
            width: w,
            stride,
            data,
        }
    }

    #[inline]
    pub fn get(&self, c: usize, y: usize, x: usize) -> f64 {
        self.data[(c * self.height + y) * self.width + x]
    }
}

/// Weights of the attention block. Kernels are stored flat in row-major
/// order: `conv3_kernel[c * 9 + ky * 3 + kx]`, `conv1_kernel[c]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "MgaWeightsFile", into = "MgaWeightsFile")]
pub struct MgaWeights {
    pub cmid: usize,
    pub conv3_kernel: Vec<f64>,
    pub conv3_bias: Vec<f64>,
    pub conv1_kernel: Vec<f64>,
    pub conv1_bias: f64,
}

/// On-disk layout: nested arrays `[cmid][1][3][3]`, `[cmid]`, `[1][cmid][1][1]`
/// and a scalar bias.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct MgaWeightsFile {
    cmid: usize,
    conv3_kernel: Vec<Vec<Vec<Vec<f64>>>>,
    conv3_bias: Vec<f64>,
    conv1_kernel: Vec<Vec<Vec<Vec<f64>>>>,
    conv1_bias: f64,
}

impl TryFrom<MgaWeightsFile> for MgaWeights {
    type Error = Error;

    fn try_from(f: MgaWeightsFile) -> Result<Self> {
        let shape_err = |what: &str| Error::ShapeMismatch(format!("{what} does not match cmid = {}", f.cmid));
        if f.conv3_kernel.len() != f.cmid {
            return Err(shape_err("conv3_kernel outer dimension"));
        }
        let mut conv3 = Vec::with_capacity(f.cmid * 9);
        for k in &f.conv3_kernel {
            if k.len() != 1 || k[0].len() != 3 || k[0].iter().any(|row| row.len() != 3) {
                return Err(Error::ShapeMismatch("conv3_kernel must be cmid x 1 x 3 x 3".into()));
            }
            conv3.extend(k[0].iter().flatten().copied());
        }
        if f.conv1_kernel.len() != 1
            || f.conv1_kernel[0].len() != f.cmid
            || f.conv1_kernel[0].iter().any(|k| k.len() != 1 || k[0].len() != 1)
        {
            return Err(shape_err("conv1_kernel (1 x cmid x 1 x 1)"));
        }
        let conv1 = f.conv1_kernel[0].iter().map(|k| k[0][0]).collect();
        let w = MgaWeights {
            cmid: f.cmid,
            conv3_kernel: conv3,
            conv3_bias: f.conv3_bias,
            conv1_kernel: conv1,
            conv1_bias: f.conv1_bias,
        };
        w.validate()?;
        Ok(w)
    }
}

impl From<MgaWeights> for MgaWeightsFile {
    fn from(w: MgaWeights) -> Self {
        MgaWeightsFile {
            cmid: w.cmid,
            conv3_kernel: w
                .conv3_kernel
                .chunks(9)
                .map(|k| vec![k.chunks(3).map(<[f64]>::to_vec).collect()])
                .collect(),
            conv3_bias: w.conv3_bias,
            conv1_kernel: vec![w.conv1_kernel.iter().map(|&v| vec![vec![v]]).collect()],
            conv1_bias: w.conv1_bias,
        }
    }
}

impl MgaWeights {
    pub fn validate(&self) -> Result<()> {
        if self.cmid == 0 {
            return Err(Error::ShapeMismatch("cmid must be >= 1".into()));
        }
        if self.conv3_kernel.len() != self.cmid * 9
            || self.conv3_bias.len() != self.cmid
            || self.conv1_kernel.len() != self.cmid
        {
            return Err(Error::ShapeMismatch(format!(
                "weight shapes inconsistent with cmid = {}",
                self.cmid
            )));
        }
        let finite = self
            .conv3_kernel
            .iter()
            .chain(&self.conv3_bias)
            .chain(&self.conv1_kernel)
            .chain(std::iter::once(&self.conv1_bias))
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::InvalidInput("attention weights must be finite".into()));
        }
        Ok(())
    }

    pub fn zeros(cmid: usize) -> Self {
        Self {
            cmid,
            conv3_kernel: vec![0.0; cmid * 9],
            conv3_bias: vec![0.0; cmid],
            conv1_kernel: vec![0.0; cmid],
            conv1_bias: 0.0,
        }
    }

    /// Uniform fan-in initialization, reproducible from `seed`.
    pub fn random(cmid: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b3 = 1.0 / 3.0;
        let b1 = 1.0 / (cmid as f64).sqrt();
        Self {
            cmid,
            conv3_kernel: (0..cmid * 9).map(|_| rng.gen_range(-b3..b3)).collect(),
            conv3_bias: (0..cmid).map(|_| rng.gen_range(-b3..b3)).collect(),
            conv1_kernel: (0..cmid).map(|_| rng.gen_range(-b1..b1)).collect(),
            conv1_bias: rng.gen_range(-b1..b1),
        }
    }
}

/// Bilinear resize of a binary mask (`align_corners = false`).
pub fn resize_bilinear(mask: &MotionMask, (out_h, out_w): (usize, usize)) -> Result<Plane> {
    if out_h == 0 || out_w == 0 {
        return Err(Error::ShapeMismatch("resize target must be at least 1x1".into()));
    }
    let (in_w, in_h) = (mask.width(), mask.height());
    if in_w == 0 || in_h == 0 {
        return Err(Error::ShapeMismatch("cannot resize an empty mask".into()));
    }
    let axis = |out: usize, inp: usize| -> Vec<(usize, usize, f64)> {
        let scale = inp as f64 / out as f64;
        (0..out)
            .map(|o| {
                let src = ((o as f64 + 0.5) * scale - 0.5).max(0.0);
                let i0 = (src.floor() as usize).min(inp - 1);
                let i1 = (i0 + 1).min(inp - 1);
                (i0, i1, src - i0 as f64)
            })
            .collect()
    };
    let xs = axis(out_w, in_w);
    let ys = axis(out_h, in_h);
    let m = |x: usize, y: usize| f64::from(mask.data()[y * in_w + x]);
    let mut data = Vec::with_capacity(out_w * out_h);
    for &(y0, y1, fy) in &ys {
        for &(x0, x1, fx) in &xs {
            let top = m(x0, y0) * (1.0 - fx) + m(x1, y0) * fx;
            let bottom = m(x0, y1) * (1.0 - fx) + m(x1, y1) * fx;
            data.push(top * (1.0 - fy) + bottom * fy);
        }
    }
    Plane::new(out_w, out_h, data)
}

/// Logistic function kept strictly inside (0, 1).
#[inline]
fn sigmoid(z: f64) -> f64 {
    (1.0 / (1.0 + (-z).exp())).clamp(f64::EPSILON, 1.0 - f64::EPSILON)
}

/// `A = sigmoid(conv1x1(relu(conv3x3(m_down))))`, zero padding.
pub fn attention_map(m_down: &Plane, w: &MgaWeights) -> Result<AttentionMap> {
    w.validate()?;
    let (width, height) = (m_down.width, m_down.height);
    let mut logits = vec![w.conv1_bias; width * height];
    let mut hidden = vec![0.0f64; width * height];
    for c in 0..w.cmid {
        let k = &w.conv3_kernel[c * 9..c * 9 + 9];
        let bias = w.conv3_bias[c];
        for y in 0..height {
            for x in 0..width {
                let mut acc = bias;
                for ky in 0..3 {
                    let sy = y as i64 + ky as i64 - 1;
                    if sy < 0 || sy >= height as i64 {
                        continue;
                    }
                    for kx in 0..3 {
                        let sx = x as i64 + kx as i64 - 1;
                        if sx < 0 || sx >= width as i64 {
                            continue;
                        }
                        acc += k[ky * 3 + kx] * m_down.data[sy as usize * width + sx as usize];
                    }
                }
                hidden[y * width + x] = acc.max(0.0);
            }
        }
        let k1 = w.conv1_kernel[c];
        for (l, h) in logits.iter_mut().zip(&hidden) {
            *l += k1 * h;
        }
    }
    Ok(AttentionMap {
        width,
        height,
        data: logits.into_iter().map(sigmoid).collect(),
    })
}

/// `out[c, y, x] = f[c, y, x] * (1 + a[y, x])`.
pub fn modulate(f: &FeatureMap, a: &AttentionMap) -> Result<FeatureMap> {
    if (f.height, f.width) != (a.height, a.width) {
        return Err(Error::ShapeMismatch(format!(
            "feature map is {}x{}, attention map is {}x{}",
            f.height, f.width, a.height, a.width
        )));
    }
    let plane = f.height * f.width;
    let data = f
        .data
        .iter()
        .enumerate()
        .map(|(i, &v)| v * (1.0 + a.data[i % plane]))
        .collect();
    Ok(FeatureMap {
        data,
        ..f.clone()
    })
}

/// Resize, attend and modulate one level.
pub fn apply_mga_level(f: &FeatureMap, mask: &MotionMask, w: &MgaWeights) -> Result<(FeatureMap, AttentionMap)> {
    let expected = FeatureMap::level_dims(mask.dims(), f.stride);
    if (f.height, f.width) != expected {
        return Err(Error::ShapeMismatch(format!(
            "stride-{} level should be {}x{} for a {}x{} input, got {}x{}",
            f.stride,
            expected.0,
            expected.1,
            mask.height(),
            mask.width(),
            f.height,
            f.width
        )));
    }
    let m_down = resize_bilinear(mask, (f.height, f.width))?;
    let a = attention_map(&m_down, w)?;
    Ok((modulate(f, &a)?, a))
}

/// Applies the attention block independently at P3, P4 and P5.
pub fn apply_mga_pyramid(
    levels: [&FeatureMap; 3],
    mask: &MotionMask,
    weights: [&MgaWeights; 3],
) -> Result<[FeatureMap; 3]> {
    for (f, stride) in levels.iter().zip(PYRAMID_STRIDES) {
        if f.stride != stride {
            return Err(Error::StrideMismatch {
                expected: stride,
                found: f.stride,
            });
        }
    }
    let p3 = apply_mga_level(levels[0], mask, weights[0])?.0;
    let p4 = apply_mga_level(levels[1], mask, weights[1])?.0;
    let p5 = apply_mga_level(levels[2], mask, weights[2])?.0;
    Ok([p3, p4, p5])
}
