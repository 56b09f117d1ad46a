use std::ffi::{CStr, CString};
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use motionguide::synth::{generate_sequence, EgoMotionSpec, SpriteSpec, SynthConfig};
use motionguide_ffi::*;

fn last_error() -> String {
    let p = mg_last_error_message();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn rows(h: [[f64; 3]; 3]) -> [f64; 9] {
    [h[0][0], h[0][1], h[0][2], h[1][0], h[1][1], h[1][2], h[2][0], h[2][1], h[2][2]]
}

#[test]
fn pipeline_handle_lifecycle() {
    let cfg = SynthConfig {
        dims: (120, 160),
        frames: 8,
        ego_motion: EgoMotionSpec {
            pan: (1.5, 0.5),
            ..EgoMotionSpec::default()
        },
        sprites: vec![SpriteSpec {
            size: 10,
            velocity: (3.0, 1.0),
            contrast: 70.0,
            start: (20.0, 30.0),
        }],
        ..SynthConfig::default()
    };
    let seq = generate_sequence(&cfg).unwrap();
    let config = CString::new(r#"{"mode": "independent"}"#).unwrap();
    let mut handle = ptr::null_mut();
    unsafe {
        assert_eq!(mg_pipeline_new(config.as_ptr(), &mut handle), MgStatus::MgOk);
        let mut mask = vec![0u8; 160 * 120];
        assert_eq!(
            mg_pipeline_last_mask(handle, mask.as_mut_ptr(), mask.len()),
            MgStatus::MgErrNoResult
        );
        let mut info = MgFrameInfo::default();
        for (t, f) in seq.frames.iter().enumerate() {
            // Pad rows to exercise the stride argument.
            let bytes = f.to_u8();
            let stride = 176;
            let mut padded = vec![0u8; stride * 120];
            for y in 0..120 {
                padded[y * stride..y * stride + 160].copy_from_slice(&bytes[y * 160..(y + 1) * 160]);
            }
            let status = mg_pipeline_push_gray(handle, padded.as_ptr(), 160, 120, stride, &mut info);
            assert_eq!(status, MgStatus::MgOk, "{}", last_error());
            assert_eq!(info.index, t as u64);
            assert_eq!(info.warmup != 0, t < 5);
            assert_eq!(info.has_step_homography != 0, t > 0);
        }
        assert_eq!(info.matching_passes, 2);
        assert!(info.mask_pixels > 0);
        let gt = seq.gt_homographies[7].to_rows();
        for (a, b) in info.step_homography.iter().zip(rows(gt)) {
            assert!((a - b).abs() < 0.05);
        }
        assert_eq!(mg_pipeline_last_mask(handle, mask.as_mut_ptr(), mask.len()), MgStatus::MgOk);
        assert_eq!(mask.iter().filter(|&&v| v == 1).count(), info.mask_pixels);
        assert_eq!(
            mg_pipeline_last_mask(handle, mask.as_mut_ptr(), 10),
            MgStatus::MgErrBufferTooSmall
        );
        let mut counters = MgCounters::default();
        assert_eq!(mg_pipeline_counters(handle, &mut counters), MgStatus::MgOk);
        assert_eq!(counters.frames, 8);
        assert_eq!(counters.matching_passes, 7 + 3);

        let tiny = vec![0u8; 16];
        assert_eq!(
            mg_pipeline_push_gray(handle, tiny.as_ptr(), 4, 4, 4, ptr::null_mut()),
            MgStatus::MgErrDimension
        );
        mg_pipeline_free(handle);
        mg_pipeline_free(ptr::null_mut());
    }
}

#[test]
fn config_errors_are_reported() {
    let bad = CString::new(r#"{"motion": {"tau_s": 30, "tau_l": 15}}"#).unwrap();
    let mut handle = ptr::null_mut();
    unsafe {
        assert_eq!(mg_pipeline_new(bad.as_ptr(), &mut handle), MgStatus::MgErrConfig);
        assert!(handle.is_null());
        assert!(last_error().contains("tau_l must exceed tau_s"));
        assert_eq!(mg_pipeline_new(ptr::null(), ptr::null_mut()), MgStatus::MgErrNullPointer);
        assert_eq!(mg_pipeline_new(ptr::null(), &mut handle), MgStatus::MgOk);
        assert!(mg_last_error_message().is_null());
        mg_pipeline_free(handle);
    }
}

#[test]
fn cascade_matches_product() {
    let a = rows([[1.0, 0.0, 2.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
    let b = rows([[1.0, 0.0, 0.0], [0.0, 1.0, -3.0], [0.0, 0.0, 1.0]]);
    let steps: Vec<f64> = a.iter().chain(&b).copied().collect();
    let mut out = [0.0; 9];
    unsafe {
        assert_eq!(mg_cascade_homographies(steps.as_ptr(), 2, out.as_mut_ptr()), MgStatus::MgOk);
    }
    assert_eq!(out, rows([[1.0, 0.0, 2.0], [0.0, 1.0, -3.0], [0.0, 0.0, 1.0]]));
    let singular = [0.0; 9];
    unsafe {
        assert_eq!(
            mg_cascade_homographies(singular.as_ptr(), 1, out.as_mut_ptr()),
            MgStatus::MgErrEstimation
        );
    }
}

#[test]
fn motion_mask_and_letterbox() {
    let (w, h) = (64usize, 48usize);
    let frame: Vec<u8> = (0..w * h).map(|i| ((i * 37) % 251) as u8).collect();
    let id = rows([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
    let mut mask = vec![7u8; w * h];
    unsafe {
        let status = mg_extract_motion_mask(
            frame.as_ptr(),
            frame.as_ptr(),
            frame.as_ptr(),
            w,
            h,
            id.as_ptr(),
            id.as_ptr(),
            ptr::null(),
            mask.as_mut_ptr(),
        );
        assert_eq!(status, MgStatus::MgOk);
    }
    assert!(mask.iter().all(|&v| v == 0));

    let rgb = vec![200u8; w * h * 3];
    let ones = vec![1u8; w * h];
    let (tw, th) = (64usize, 64usize);
    let mut out = vec![0u8; tw * th * 4];
    let mut placement = MgPlacement::default();
    unsafe {
        let status = mg_letterbox(rgb.as_ptr(), ones.as_ptr(), w, h, tw, th, out.as_mut_ptr(), &mut placement);
        assert_eq!(status, MgStatus::MgOk);
    }
    assert_eq!((placement.offset_y, placement.content_height), (8, 48));
    for y in 0..th {
        let px = &out[(y * tw) * 4..(y * tw) * 4 + 4];
        if (8..56).contains(&y) {
            assert_eq!(px, &[200, 200, 200, 1]);
        } else {
            assert_eq!(px, &[114, 114, 114, 0]);
        }
    }
}

fn artifact_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn header_compiles_and_links_from_c() {
    let header_dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let header = std::fs::read_to_string(header_dir.join("motionguide.h")).unwrap();
    for symbol in [
        "mg_pipeline_new",
        "mg_pipeline_free",
        "mg_pipeline_push_gray",
        "mg_pipeline_last_mask",
        "mg_cascade_homographies",
        "mg_extract_motion_mask",
        "mg_letterbox",
        "mg_last_error_message",
        "typedef struct MgPipeline MgPipeline",
        "MG_ERR_CONFIG = 3",
    ] {
        assert!(header.contains(symbol), "header lacks {symbol}");
    }

    let lib = artifact_dir().join("libmotionguide_ffi.a");
    let cc = Command::new("cc").arg("--version").output();
    if !lib.is_file() || cc.is_err() {
        eprintln!("skipping C link check: static library or C compiler unavailable");
        return;
    }
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("smoke.c");
    std::fs::write(
        &src,
        r#"
#include <stdio.h>
#include <string.h>
#include "motionguide.h"

int main(void) {
    MgPipeline *p = NULL;
    if (mg_pipeline_new("{\"mode\": \"bogus\"}", &p) != MG_ERR_CONFIG || p != NULL) return 1;
    if (mg_last_error_message() == NULL) return 2;
    if (mg_pipeline_new(NULL, &p) != MG_OK) return 3;
    unsigned char frame[96 * 96];
    memset(frame, 90, sizeof frame);
    MgFrameInfo info;
    for (int i = 0; i < 7; i++) {
        if (mg_pipeline_push_gray(p, frame, 96, 96, 96, &info) != MG_OK) return 4;
    }
    if (info.warmup != 0 || info.mask_pixels != 0) return 5;
    MgCounters c;
    if (mg_pipeline_counters(p, &c) != MG_OK || c.frames != 7) return 6;
    mg_pipeline_free(p);
    double steps[18] = {1, 0, 1, 0, 1, 0, 0, 0, 1, 1, 0, 1, 0, 1, 0, 0, 0, 1};
    double out[9];
    if (mg_cascade_homographies(steps, 2, out) != MG_OK || out[2] != 2.0) return 7;
    printf("ok %s\n", mg_version());
    return 0;
}
"#,
    )
    .unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(&header_dir)
        .arg(&lib)
        .args(["-lpthread", "-ldl", "-lm", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success(), "C smoke program failed to compile");
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "C smoke program exited with {:?}", run.status);
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("ok "));
}
