//! C ABI over the motionguide frontend.
//!
//! Every entry point returns an [`MgStatus`]. On failure a human-readable
//! message is stored per thread and can be read with
//! [`mg_last_error_message`]. Pipelines are opaque handles created by
//! [`mg_pipeline_new`] and released by [`mg_pipeline_free`]. Images are
//! row-major `uint8_t` buffers with an explicit row stride in bytes.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use motionguide::error::Error;
use motionguide::geometry::{cascade_homographies, Homography};
use motionguide::io::{parse_json, parse_pipeline_config_str};
use motionguide::motion::{extract_motion_mask, MotionParams};
use motionguide::pipeline::{letterbox_channel_aware, Pipeline, PipelineConfig};
use motionguide::raster::{BinaryMask, Frame};

/// Result codes shared by all functions.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MgStatus {
    MgOk = 0,
    MgErrNullPointer = 1,
    MgErrInvalidArgument = 2,
    MgErrConfig = 3,
    MgErrDimension = 4,
    MgErrEstimation = 5,
    MgErrBufferTooSmall = 6,
    MgErrNoResult = 7,
    MgErrInternal = 8,
}

/// Opaque streaming pipeline.
pub struct MgPipeline {
    inner: Pipeline,
    last_mask: Option<BinaryMask>,
}

/// Summary of the most recent frame pushed into a pipeline.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct MgFrameInfo {
    pub index: u64,
    /// Nonzero while the ring is still filling; the mask is then empty.
    pub warmup: u8,
    /// Nonzero when a homography had to be replaced by the fallback policy.
    pub fallback: u8,
    /// Nonzero when `step_homography` holds `H_{t,t-1}`.
    pub has_step_homography: u8,
    pub matching_passes: usize,
    pub mask_pixels: usize,
    pub width: usize,
    pub height: usize,
    /// Row-major 3x3 matrix mapping current to previous frame coordinates.
    pub step_homography: [f64; 9],
}

/// Cumulative instrumentation counters of a pipeline.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct MgCounters {
    pub frames: usize,
    pub feature_extractions: usize,
    pub matching_passes: usize,
    pub ransac_calls: usize,
    pub fallbacks: usize,
}

/// Content placement inside a letterboxed image.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default)]
pub struct MgPlacement {
    pub scale: f64,
    pub offset_x: usize,
    pub offset_y: usize,
    pub content_width: usize,
    pub content_height: usize,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: impl Into<String>) {
    let msg = message.into().replace('\0', " ");
    LAST_ERROR.with(|e| *e.borrow_mut() = CString::new(msg).ok());
}

fn status_for(err: &Error) -> MgStatus {
    match err {
        Error::Config(_) | Error::Parse { .. } => MgStatus::MgErrConfig,
        Error::DimensionMismatch { .. }
        | Error::ShapeMismatch(_)
        | Error::ImageTooSmall { .. }
        | Error::StrideMismatch { .. } => MgStatus::MgErrDimension,
        Error::InsufficientInliers { .. }
        | Error::DegenerateConfiguration(_)
        | Error::NotInvertible(_)
        | Error::SingularComposition(_)
        | Error::PointAtInfinity => MgStatus::MgErrEstimation,
        _ => MgStatus::MgErrInvalidArgument,
    }
}

fn fail(err: Error) -> MgStatus {
    let status = status_for(&err);
    set_last_error(err.to_string());
    status
}

fn fail_with(status: MgStatus, message: &str) -> MgStatus {
    set_last_error(message);
    status
}

/// Runs `body`, converting panics into `MgErrInternal`.
fn guard(body: impl FnOnce() -> MgStatus) -> MgStatus {
    match catch_unwind(AssertUnwindSafe(body)) {
        Ok(status) => {
            if status == MgStatus::MgOk {
                LAST_ERROR.with(|e| *e.borrow_mut() = None);
            }
            status
        }
        Err(_) => fail_with(MgStatus::MgErrInternal, "internal panic"),
    }
}

/// Copies a strided `u8` image into a frame.
///
/// # Safety
/// `data` must point to at least `stride * (height - 1) + width * channels`
/// readable bytes.
unsafe fn read_image(
    data: *const u8,
    width: usize,
    height: usize,
    stride: usize,
    channels: usize,
) -> Result<Frame, MgStatus> {
    if data.is_null() {
        return Err(fail_with(MgStatus::MgErrNullPointer, "image pointer is null"));
    }
    let row = width
        .checked_mul(channels)
        .ok_or_else(|| fail_with(MgStatus::MgErrInvalidArgument, "image too large"))?;
    if width == 0 || height == 0 || stride < row {
        return Err(fail_with(
            MgStatus::MgErrInvalidArgument,
            "image needs positive dims and stride >= width * channels",
        ));
    }
    let mut packed = Vec::with_capacity(row * height);
    for y in 0..height {
        packed.extend_from_slice(std::slice::from_raw_parts(data.add(y * stride), row));
    }
    Frame::from_u8(width, height, channels, &packed).map_err(fail)
}

/// # Safety
/// `m` must point to nine readable doubles.
unsafe fn read_homography(m: *const f64) -> Result<Homography, MgStatus> {
    if m.is_null() {
        return Err(fail_with(MgStatus::MgErrNullPointer, "homography pointer is null"));
    }
    let v = std::slice::from_raw_parts(m, 9);
    Homography::from_rows([[v[0], v[1], v[2]], [v[3], v[4], v[5]], [v[6], v[7], v[8]]]).map_err(fail)
}

/// # Safety
/// `out` must point to nine writable doubles.
unsafe fn write_homography(h: &Homography, out: *mut f64) {
    let rows = h.to_rows();
    for (i, v) in rows.iter().flatten().enumerate() {
        *out.add(i) = *v;
    }
}

/// # Safety
/// `s` must be null or a valid NUL-terminated string.
unsafe fn read_str<'a>(s: *const c_char) -> Result<Option<&'a str>, MgStatus> {
    if s.is_null() {
        return Ok(None);
    }
    CStr::from_ptr(s)
        .to_str()
        .map(Some)
        .map_err(|_| fail_with(MgStatus::MgErrInvalidArgument, "string is not valid UTF-8"))
}

/// Message describing the last failure on this thread, or null. The pointer
/// stays valid until the next call into this library on the same thread.
#[no_mangle]
pub extern "C" fn mg_last_error_message() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn mg_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Creates a pipeline from a JSON config (null for defaults).
///
/// # Safety
/// `config_json` must be null or NUL-terminated; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn mg_pipeline_new(config_json: *const c_char, out: *mut *mut MgPipeline) -> MgStatus {
    guard(|| {
        if out.is_null() {
            return fail_with(MgStatus::MgErrNullPointer, "output handle pointer is null");
        }
        *out = ptr::null_mut();
        let cfg = match read_str(config_json) {
            Ok(Some(text)) => match parse_pipeline_config_str(text) {
                Ok(c) => c,
                Err(e) => return fail(e),
            },
            Ok(None) => PipelineConfig::default(),
            Err(s) => return s,
        };
        match Pipeline::new(cfg) {
            Ok(inner) => {
                *out = Box::into_raw(Box::new(MgPipeline {
                    inner,
                    last_mask: None,
                }));
                MgStatus::MgOk
            }
            Err(e) => fail(e),
        }
    })
}

/// Releases a pipeline. Null is ignored.
///
/// # Safety
/// `pipeline` must come from [`mg_pipeline_new`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn mg_pipeline_free(pipeline: *mut MgPipeline) {
    if !pipeline.is_null() {
        drop(Box::from_raw(pipeline));
    }
}

/// Pushes one 8-bit grayscale frame and runs the pipeline on it.
///
/// # Safety
/// `pipeline` must be a live handle; `data` must cover the strided image;
/// `info` may be null.
#[no_mangle]
pub unsafe extern "C" fn mg_pipeline_push_gray(
    pipeline: *mut MgPipeline,
    data: *const u8,
    width: usize,
    height: usize,
    stride: usize,
    info: *mut MgFrameInfo,
) -> MgStatus {
    guard(|| {
        let Some(p) = pipeline.as_mut() else {
            return fail_with(MgStatus::MgErrNullPointer, "pipeline handle is null");
        };
        let frame = match read_image(data, width, height, stride, 1) {
            Ok(f) => f,
            Err(s) => return s,
        };
        let record = match p.inner.process(&frame) {
            Ok(r) => r,
            Err(e) => return fail(e),
        };
        if let Some(info) = info.as_mut() {
            *info = MgFrameInfo {
                index: record.index,
                warmup: u8::from(record.warmup),
                fallback: u8::from(record.fallback),
                has_step_homography: u8::from(record.step_homography.is_some()),
                matching_passes: record.matching_passes,
                mask_pixels: record.mask.count_ones(),
                width,
                height,
                step_homography: record
                    .step_homography
                    .map(|h| {
                        let r = h.to_rows();
                        [r[0][0], r[0][1], r[0][2], r[1][0], r[1][1], r[1][2], r[2][0], r[2][1], r[2][2]]
                    })
                    .unwrap_or([0.0; 9]),
            };
        }
        p.last_mask = Some(record.mask);
        MgStatus::MgOk
    })
}

/// Copies the most recent mask (values 0 or 1, row-major) into `out`.
///
/// # Safety
/// `pipeline` must be a live handle and `out` must hold `len` bytes.
#[no_mangle]
pub unsafe extern "C" fn mg_pipeline_last_mask(pipeline: *const MgPipeline, out: *mut u8, len: usize) -> MgStatus {
    guard(|| {
        let Some(p) = pipeline.as_ref() else {
            return fail_with(MgStatus::MgErrNullPointer, "pipeline handle is null");
        };
        if out.is_null() {
            return fail_with(MgStatus::MgErrNullPointer, "output buffer is null");
        }
        let Some(mask) = p.last_mask.as_ref() else {
            return fail_with(MgStatus::MgErrNoResult, "no frame has been processed yet");
        };
        if len < mask.data().len() {
            return fail_with(MgStatus::MgErrBufferTooSmall, "mask buffer is smaller than width * height");
        }
        ptr::copy_nonoverlapping(mask.data().as_ptr(), out, mask.data().len());
        MgStatus::MgOk
    })
}

/// Reads the cumulative counters.
///
/// # Safety
/// `pipeline` must be a live handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn mg_pipeline_counters(pipeline: *const MgPipeline, out: *mut MgCounters) -> MgStatus {
    guard(|| {
        let (Some(p), Some(out)) = (pipeline.as_ref(), out.as_mut()) else {
            return fail_with(MgStatus::MgErrNullPointer, "null argument");
        };
        let c = p.inner.counters();
        *out = MgCounters {
            frames: c.frames,
            feature_extractions: c.feature_extractions,
            matching_passes: c.matching_passes,
            ransac_calls: c.ransac_calls,
            fallbacks: c.fallbacks,
        };
        MgStatus::MgOk
    })
}

/// Chains `count` step homographies given newest first
/// (`H_{t,t-1}, H_{t-1,t-2}, ...`, nine row-major doubles each) into
/// `H_{t,t-count}`.
///
/// # Safety
/// `steps` must hold `9 * count` doubles and `out` nine writable doubles.
#[no_mangle]
pub unsafe extern "C" fn mg_cascade_homographies(steps: *const f64, count: usize, out: *mut f64) -> MgStatus {
    guard(|| {
        if steps.is_null() || out.is_null() {
            return fail_with(MgStatus::MgErrNullPointer, "null argument");
        }
        let mut window = Vec::with_capacity(count);
        for i in 0..count {
            match read_homography(steps.add(9 * i)) {
                Ok(h) => window.push(h),
                Err(s) => return s,
            }
        }
        match cascade_homographies(&window) {
            Ok(h) => {
                write_homography(&h, out);
                MgStatus::MgOk
            }
            Err(e) => fail(e),
        }
    })
}

/// Runs dual-interval motion extraction on three tightly packed grayscale
/// frames. `params_json` may be null for default parameters. `mask_out`
/// receives `width * height` bytes of 0 or 1.
///
/// # Safety
/// Image pointers must hold `width * height` bytes, homography pointers nine
/// doubles, and `mask_out` `width * height` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn mg_extract_motion_mask(
    cur: *const u8,
    ref_short: *const u8,
    ref_long: *const u8,
    width: usize,
    height: usize,
    h_short: *const f64,
    h_long: *const f64,
    params_json: *const c_char,
    mask_out: *mut u8,
) -> MgStatus {
    guard(|| {
        if mask_out.is_null() {
            return fail_with(MgStatus::MgErrNullPointer, "mask buffer is null");
        }
        let params = match read_str(params_json) {
            Ok(Some(text)) => match parse_json::<MotionParams>(text) {
                Ok(p) => p,
                Err(e) => return fail(e),
            },
            Ok(None) => MotionParams::default(),
            Err(s) => return s,
        };
        let frames = (
            read_image(cur, width, height, width, 1),
            read_image(ref_short, width, height, width, 1),
            read_image(ref_long, width, height, width, 1),
        );
        let (c, s, l) = match frames {
            (Ok(c), Ok(s), Ok(l)) => (c, s, l),
            (Err(e), _, _) | (_, Err(e), _) | (_, _, Err(e)) => return e,
        };
        let (hs, hl) = match (read_homography(h_short), read_homography(h_long)) {
            (Ok(a), Ok(b)) => (a, b),
            (Err(e), _) | (_, Err(e)) => return e,
        };
        match extract_motion_mask(&c, &s, &l, &hs, &hl, &params) {
            Ok(mask) => {
                ptr::copy_nonoverlapping(mask.data().as_ptr(), mask_out, mask.data().len());
                MgStatus::MgOk
            }
            Err(e) => fail(e),
        }
    })
}

/// Letterboxes a packed RGB image and its mask into `target_width` by
/// `target_height`, writing interleaved R, G, B, motion bytes to `out`.
/// RGB padding is 114 and motion padding is 0.
///
/// # Safety
/// `rgb` must hold `3 * width * height` bytes, `mask` `width * height` bytes,
/// `out` `4 * target_width * target_height` writable bytes; `placement` may
/// be null.
#[no_mangle]
pub unsafe extern "C" fn mg_letterbox(
    rgb: *const u8,
    mask: *const u8,
    width: usize,
    height: usize,
    target_width: usize,
    target_height: usize,
    out: *mut u8,
    placement: *mut MgPlacement,
) -> MgStatus {
    guard(|| {
        if mask.is_null() || out.is_null() {
            return fail_with(MgStatus::MgErrNullPointer, "null argument");
        }
        let image = match read_image(rgb, width, height, width * 3, 3) {
            Ok(f) => f,
            Err(s) => return s,
        };
        let m = std::slice::from_raw_parts(mask, width * height).to_vec();
        let m = match BinaryMask::from_vec(width, height, m) {
            Ok(m) => m,
            Err(e) => return fail(e),
        };
        match letterbox_channel_aware(&image, &m, (target_height, target_width)) {
            Ok(lb) => {
                let bytes = lb.to_rgbm_u8();
                ptr::copy_nonoverlapping(bytes.as_ptr(), out, bytes.len());
                if let Some(p) = placement.as_mut() {
                    *p = MgPlacement {
                        scale: lb.placement.scale,
                        offset_x: lb.placement.offset_x,
                        offset_y: lb.placement.offset_y,
                        content_width: lb.placement.content_width,
                        content_height: lb.placement.content_height,
                    };
                }
                MgStatus::MgOk
            }
            Err(e) => fail(e),
        }
    })
}
