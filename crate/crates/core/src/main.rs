use std::cell::RefCell;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use motionguide::attention::MgaWeights;
use motionguide::error::{Error, Result};
use motionguide::io::{
    load_frame, load_homographies, load_mask, parse_json, parse_pipeline_config, parse_synth_config,
    save_frame, save_homographies, save_mask, write_report, Manifest, ReportValue,
};
use motionguide::pipeline::{profile_report, run_stream, Mode, Pipeline, PipelineConfig};
use motionguide::raster::Frame;
use motionguide::synth::generate_sequence;

#[derive(Parser)]
#[command(name = "motionguide", version, about = "Motion-guided UAV detection frontend")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Extract motion masks from a frame sequence.
    Run {
        /// Frame directory or manifest JSON.
        #[arg(long)]
        input: PathBuf,
        /// Pipeline config JSON; defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the configured homography mode.
        #[arg(long)]
        mode: Option<Mode>,
        /// Output directory.
        #[arg(long)]
        out: PathBuf,
        /// Comma-separated outputs: masks, composite, report, attention.
        #[arg(long, value_delimiter = ',')]
        emit: Option<Vec<String>>,
        /// Attention weights: one object for all levels or a list of three.
        #[arg(long)]
        weights: Option<PathBuf>,
    },
    /// Render a synthetic sequence with ground truth.
    Synth {
        #[arg(long)]
        config: PathBuf,
        /// Output directory for frames, masks and ground truth.
        #[arg(long)]
        out: PathBuf,
    },
    /// Compare predicted masks against ground-truth masks.
    Score {
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        gt: PathBuf,
        #[arg(long)]
        report: PathBuf,
    },
    /// Time the pipeline stages.
    Bench {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        config: Option<PathBuf>,
        /// Number of frames to process (at most the sequence length).
        #[arg(long)]
        frames: Option<usize>,
        #[arg(long)]
        mode: Option<Mode>,
        /// Write the timing JSON here instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(command: Command) -> Result<()> {
    match command {
        Command::Run {
            input,
            config,
            mode,
            out,
            emit,
            weights,
        } => run(&input, config.as_deref(), mode, &out, emit, weights.as_deref()),
        Command::Synth { config, out } => synth(&config, &out),
        Command::Score { pred, gt, report } => score(&pred, &gt, &report),
        Command::Bench {
            input,
            config,
            frames,
            mode,
            out,
        } => bench(&input, config.as_deref(), frames, mode, out.as_deref()),
    }
}

fn load_config(path: Option<&Path>, mode: Option<Mode>) -> Result<PipelineConfig> {
    let mut cfg = match path {
        Some(p) => parse_pipeline_config(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(m) = mode {
        cfg.mode = m;
    }
    Ok(cfg)
}

fn load_weights(path: &Path) -> Result<[MgaWeights; 3]> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    if let Ok(levels) = parse_json::<[MgaWeights; 3]>(&text) {
        return Ok(levels);
    }
    let w: MgaWeights = parse_json(&text)?;
    Ok([w.clone(), w.clone(), w])
}

fn create_dir(path: &Path) -> Result<()> {
    std::fs::create_dir_all(path).map_err(|e| Error::Write {
        path: path.to_path_buf(),
        message: e.to_string(),
    })
}

/// Current frame with motion pixels tinted red.
fn composite(frame: &Frame, mask: &motionguide::MotionMask) -> Result<Frame> {
    let (h, w) = frame.dims();
    let c = frame.channels();
    let mut data = Vec::with_capacity(w * h * 3);
    for (i, px) in frame.data().chunks_exact(c).enumerate() {
        let rgb = if c == 3 { [px[0], px[1], px[2]] } else { [px[0]; 3] };
        if mask.data()[i] == 1 {
            data.extend([255.0, rgb[1] * 0.5, rgb[2] * 0.5]);
        } else {
            data.extend(rgb);
        }
    }
    Frame::new(w, h, 3, data)
}

fn run(
    input: &Path,
    config: Option<&Path>,
    mode: Option<Mode>,
    out: &Path,
    emit: Option<Vec<String>>,
    weights: Option<&Path>,
) -> Result<()> {
    let mut cfg = load_config(config, mode)?;
    if let Some(list) = emit {
        cfg.emit.masks = false;
        cfg.emit.composite = false;
        cfg.emit.report = false;
        cfg.emit.attention = false;
        for item in list.iter().map(|s| s.trim()) {
            match item {
                "masks" => cfg.emit.masks = true,
                "composite" => cfg.emit.composite = true,
                "report" => cfg.emit.report = true,
                "attention" => cfg.emit.attention = true,
                other => return Err(Error::Config(format!("unknown --emit entry '{other}'"))),
            }
        }
    }
    let mut pipeline = match weights {
        Some(p) => {
            cfg.emit.attention = true;
            Pipeline::with_weights(cfg.clone(), load_weights(p)?)?
        }
        None => Pipeline::new(cfg.clone())?,
    };
    let manifest = Manifest::open(input)?;
    let gt = manifest
        .gt_homographies
        .as_deref()
        .map(load_homographies)
        .transpose()?;
    create_dir(out)?;
    if cfg.emit.masks {
        create_dir(&out.join("masks"))?;
    }
    if cfg.emit.composite {
        create_dir(&out.join("composite"))?;
    }

    let mut records = Vec::new();
    let mut corner_errors = Vec::new();
    let current: RefCell<Option<Frame>> = RefCell::new(None);
    let source = manifest.frames.iter().map(|p| {
        let f = load_frame(p)?;
        if cfg.emit.composite {
            *current.borrow_mut() = Some(f.clone());
        }
        Ok(f)
    });
    let summary = run_stream(&mut pipeline, source, |rec| {
        let name = format!("{:06}.png", rec.index);
        if cfg.emit.masks {
            save_mask(&rec.mask, &out.join("masks").join(&name))?;
        }
        if cfg.emit.composite {
            if let Some(frame) = current.borrow().as_ref() {
                save_frame(&composite(frame, &rec.mask)?, &out.join("composite").join(&name))?;
            }
        }
        let mut entry = rec.to_report();
        if let (Some(gt), Some(h)) = (gt.as_ref(), rec.step_homography.as_ref()) {
            if let Some(truth) = gt.get(rec.index as usize) {
                let err = h.corner_deviation(truth, rec.mask.dims())?;
                entry.insert("gt_corner_error_px", err);
                corner_errors.push(err);
            }
        }
        records.push(entry);
        Ok(())
    })?;

    if cfg.emit.report {
        let c = summary.counters;
        let mut report = ReportValue::object()
            .with("frames", records.len())
            .with("mode", cfg.mode.to_string())
            .with("warmup_frames", cfg.motion.k_long.min(records.len()))
            .with(
                "counters",
                ReportValue::object()
                    .with("feature_extractions", c.feature_extractions)
                    .with("matching_passes", c.matching_passes)
                    .with("ransac_calls", c.ransac_calls)
                    .with("fallbacks", c.fallbacks),
            )
            .with("records", ReportValue::List(records));
        if !corner_errors.is_empty() {
            let n = corner_errors.len() as f64;
            let max = corner_errors.iter().copied().fold(0.0, f64::max);
            report.insert(
                "gt_corner_error_px",
                ReportValue::object()
                    .with("mean", corner_errors.iter().sum::<f64>() / n)
                    .with("max", max),
            );
        }
        write_report(&report, &out.join("report.json"))?;
        if !summary.timings.is_empty() {
            write_report(&profile_report(&summary.timings)?.to_report(), &out.join("timings.json"))?;
        }
    }
    Ok(())
}

fn synth(config: &Path, out: &Path) -> Result<()> {
    let cfg = parse_synth_config(config)?;
    let seq = generate_sequence(&cfg)?;
    let gt_dir = out.join("gt");
    create_dir(&gt_dir)?;
    let mut names = Vec::new();
    for (t, (frame, mask)) in seq.frames.iter().zip(&seq.gt_masks).enumerate() {
        let name = format!("f{t:04}.pgm");
        save_frame(frame, &out.join(&name))?;
        save_mask(mask, &gt_dir.join(format!("{t:06}.png")))?;
        names.push(PathBuf::from(name));
    }
    save_homographies(&seq.gt_homographies, &out.join("gt.json"))?;
    Manifest {
        frames: names,
        gt_homographies: Some(PathBuf::from("gt.json")),
    }
    .save(&out.join("manifest.json"))
}

fn list_masks(dir: &Path) -> Result<Vec<String>> {
    let mut names = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| Error::Io {
        path: dir.to_path_buf(),
        source: e,
    })? {
        let entry = entry.map_err(|e| Error::Io {
            path: dir.to_path_buf(),
            source: e,
        })?;
        let name = entry.file_name().to_string_lossy().into_owned();
        if name.ends_with(".png") || name.ends_with(".pgm") {
            names.push(name);
        }
    }
    names.sort();
    Ok(names)
}

fn score(pred: &Path, gt: &Path, report: &Path) -> Result<()> {
    let names = list_masks(pred)?;
    let mut frames = Vec::new();
    let (mut iou_sum, mut precision_sum, mut recall_sum, mut density_sum) = (0.0, 0.0, 0.0, 0.0);
    for name in &names {
        let p = load_mask(&pred.join(name))?;
        let g = load_mask(&gt.join(name))?;
        if p.dims() != g.dims() {
            return Err(Error::DimensionMismatch {
                expected: g.dims(),
                found: p.dims(),
            });
        }
        let tp = p.overlap(&g) as f64;
        let precision = if p.count_ones() == 0 { 1.0 } else { tp / p.count_ones() as f64 };
        let recall = if g.count_ones() == 0 { 1.0 } else { tp / g.count_ones() as f64 };
        let iou = p.iou(&g);
        iou_sum += iou;
        precision_sum += precision;
        recall_sum += recall;
        density_sum += p.density();
        frames.push(
            ReportValue::object()
                .with("name", name.as_str())
                .with("iou", iou)
                .with("precision", precision)
                .with("recall", recall)
                .with("pred_density", p.density())
                .with("gt_density", g.density()),
        );
    }
    let n = names.len().max(1) as f64;
    let summary = ReportValue::object()
        .with("frames", names.len())
        .with("mean_iou", iou_sum / n)
        .with("mean_precision", precision_sum / n)
        .with("mean_recall", recall_sum / n)
        .with("mean_pred_density", density_sum / n)
        .with("per_frame", ReportValue::List(frames));
    write_report(&summary, report)
}

fn bench(
    input: &Path,
    config: Option<&Path>,
    frames: Option<usize>,
    mode: Option<Mode>,
    out: Option<&Path>,
) -> Result<()> {
    let cfg = load_config(config, mode)?;
    let manifest = Manifest::open(input)?;
    let n = frames.unwrap_or(manifest.frames.len()).min(manifest.frames.len());
    let mut pipeline = Pipeline::new(cfg)?;
    let source = manifest.frames[..n].iter().map(|p| load_frame(p));
    let summary = run_stream(&mut pipeline, source, |_| Ok(()))?;
    let profile = profile_report(&summary.timings)?;
    let report = profile.to_report().with("ranked_stages", profile.ranked_stages());
    match out {
        Some(p) => write_report(&report, p),
        None => {
            let text = report.render().map_err(|m| Error::Write {
                path: PathBuf::from("<stdout>"),
                message: m,
            })?;
            print!("{text}");
            Ok(())
        }
    }
}
