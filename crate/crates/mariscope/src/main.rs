use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use std::collections::HashMap;

use mariscope::config::{Config, ImageFormat, RegistrationMode};
use mariscope::error::{Error, Result};
use mariscope::manifest::{CameraClass, DatasetManifest};
use mariscope::overlay::{emit_overlay, Overlay};
use mariscope::pipeline::{self, BackgroundStage, DetectStage, EvalInputs, Registrar};
use mariscope::{formats, io};
use mariscope_core::background::{BackgroundMethod, MixtureParams, SingleGaussianParams};
use mariscope_core::evalbench::HorizonRecord;
use mariscope_core::registration::Warped;
use mariscope_core::Channels;
use mariscope_core::horizon::DistanceMetric;
use mariscope_core::synth::{self, SceneSpec};
use rayon::prelude::*;

/// Maritime video processing: horizon detection, registration, background
/// subtraction, object tracking and evaluation.
#[derive(Parser)]
#[command(name = "mariscope", version)]
struct Cli {
    /// JSON configuration file; unspecified fields take their defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Worker threads (default: all cores). Results do not depend on it.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Seed for synthetic scenes (overrides the spec's seed).
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Render a synthetic scene with ground truth.
    Synth(SynthArgs),
    /// Detect the horizon in every frame.
    Horizon {
        #[arg(long)]
        frames: PathBuf,
        /// Statistical distance: mean-shift, bhattacharyya or intra-variance.
        #[arg(long)]
        metric: Option<String>,
        /// Report CSV: frame_index,Y,alpha,score,candidate_rank.
        #[arg(long)]
        out: PathBuf,
        /// Write each frame with the detected line drawn.
        #[arg(long)]
        overlay: Option<PathBuf>,
    },
    /// Register frames onto a reference frame.
    Register(RegisterArgs),
    /// Background subtraction; writes one mask per post-warm-up frame.
    Bgsub {
        #[arg(long)]
        frames: PathBuf,
        #[arg(long, value_enum)]
        method: Option<MethodArg>,
        #[arg(long)]
        warmup: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Extract blobs from masks and track them.
    Detect {
        #[arg(long)]
        masks: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate artifacts against ground truth.
    Eval(EvalArgs),
    /// Run every stage on a dataset.
    Pipeline {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct RegisterArgs {
    #[arg(long)]
    frames: PathBuf,
    /// horizon, horizon+strip or landmarks.
    #[arg(long)]
    mode: Option<String>,
    /// Landmark CSV: frame_index_a,frame_index_b,xa,ya,xb,yb.
    #[arg(long)]
    landmarks: Option<PathBuf>,
    /// Horizon CSV from `horizon`; detected afresh when omitted.
    #[arg(long)]
    horizon: Option<PathBuf>,
    /// Camera class; on-shore sequences are passed through unless the
    /// configuration enables registration explicitly.
    #[arg(long, value_enum, default_value = "at-sea")]
    camera: CameraArg,
    /// Registered frames, validity masks and transforms.csv.
    #[arg(long)]
    out: PathBuf,
    /// Differences of consecutive registered frames.
    #[arg(long)]
    diff: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CameraArg {
    AtSea,
    OnShore,
}

#[derive(Clone, Copy, ValueEnum)]
enum MethodArg {
    Sg,
    Gmm,
}

#[derive(Args)]
struct SynthArgs {
    /// Scene spec (JSON).
    #[arg(long, conflicts_with = "preset", required_unless_present = "preset")]
    spec: Option<PathBuf>,
    /// calm-onshore, buoy-motion or hazy.
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    out: PathBuf,
    /// Override the number of frames.
    #[arg(long)]
    frames: Option<u64>,
    #[arg(long, value_enum, default_value = "pnm")]
    format: FormatArg,
}

#[derive(Clone, Copy, ValueEnum)]
enum FormatArg {
    Pnm,
    Png,
}

#[derive(Args)]
struct EvalArgs {
    /// Dataset manifest supplying the name, frame list and ground truth.
    #[arg(long)]
    manifest: Option<PathBuf>,
    #[arg(long)]
    horizon_gt: Option<PathBuf>,
    #[arg(long)]
    objects_gt: Option<PathBuf>,
    /// Horizon estimates (horizon.csv).
    #[arg(long)]
    horizon: Option<PathBuf>,
    #[arg(long)]
    tracks: Option<PathBuf>,
    /// Frame transforms (transforms.csv) mapping ground truth into registered coordinates.
    #[arg(long)]
    transforms: Option<PathBuf>,
    /// First frame scored for detection (the first post-warm-up frame).
    #[arg(long, default_value_t = 0)]
    start: u64,
    /// Method name used as the report key (default: configured metric).
    #[arg(long)]
    method: Option<String>,
    #[arg(long, default_value = "dataset")]
    name: String,
    #[arg(long)]
    out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut config = match &cli.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    let pool = pipeline::thread_pool(cli.threads)?;
    pool.install(|| match cli.command {
        Command::Synth(args) => synth_cmd(args, cli.seed),
        Command::Horizon { frames, metric, out, overlay } => {
            if let Some(m) = metric {
                config.horizon.metric = DistanceMetric::from_name(&m).ok_or_else(|| Error::InvalidInput(format!("unknown metric {m:?}")))?;
            }
            horizon_cmd(&frames, &out, overlay.as_deref(), &config)
        }
        Command::Register(args) => {
            if let Some(m) = &args.mode {
                config.registration.mode = RegistrationMode::from_name(m).ok_or_else(|| Error::InvalidInput(format!("unknown registration mode {m:?}")))?;
            }
            if args.landmarks.is_some() {
                config.registration.landmarks = args.landmarks.clone();
            }
            config.validate()?;
            register_cmd(&args, &config)
        }
        Command::Bgsub { frames, method, warmup, out } => {
            match (method, config.background.method) {
                (Some(MethodArg::Sg), BackgroundMethod::Gmm(_)) => config.background.method = BackgroundMethod::SingleGaussian(SingleGaussianParams::default()),
                (Some(MethodArg::Gmm), BackgroundMethod::SingleGaussian(_)) => config.background.method = BackgroundMethod::Gmm(MixtureParams::default()),
                _ => {}
            }
            if let Some(w) = warmup {
                config.background.warmup = w;
            }
            bgsub_cmd(&frames, &out, &config)
        }
        Command::Detect { masks, out } => detect_cmd(&masks, &out, &config),
        Command::Eval(args) => eval_cmd(args, &config),
        Command::Pipeline { manifest, out } => {
            let dataset = DatasetManifest::load(&manifest)?;
            let s = pipeline::run_pipeline(&dataset, &config, &out)?;
            eprintln!("{} frames, {} without a horizon estimate; artifacts in {}", s.frames, s.horizon_failures, out.display());
            Ok(())
        }
    })
}

fn frame_list(dir: &Path) -> Result<Vec<(u64, PathBuf)>> {
    let frames = io::list_frames(dir)?;
    if frames.is_empty() {
        return Err(Error::InvalidInput(format!("no frames in {}", dir.display())));
    }
    Ok(frames)
}

fn synth_cmd(args: SynthArgs, seed: Option<u64>) -> Result<()> {
    let (mut spec, camera) = match (&args.spec, &args.preset) {
        (Some(p), _) => {
            let text = std::fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            let spec: SceneSpec = serde_json::from_str(&text).map_err(|e| Error::format(p, e))?;
            (spec, CameraClass::AtSea)
        }
        (None, Some(name)) => {
            let spec = synth::preset(name, 0).ok_or_else(|| Error::InvalidInput(format!("unknown preset {name:?}; expected one of {:?}", synth::PRESETS)))?;
            (spec, if name == "calm-onshore" { CameraClass::OnShore } else { CameraClass::AtSea })
        }
        (None, None) => unreachable!("clap requires --spec or --preset"),
    };
    if let Some(s) = seed {
        spec.seed = s;
    }
    if let Some(n) = args.frames {
        spec.frames = n;
    }
    spec.validate().map_err(|e| Error::InvalidInput(e.to_string()))?;
    let format = match args.format {
        FormatArg::Pnm => ImageFormat::Pnm,
        FormatArg::Png => ImageFormat::Png,
    };

    let out = &args.out;
    let (frames_dir, masks_dir) = (out.join("frames"), out.join("masks_gt"));
    io::create_dir(&frames_dir)?;
    io::create_dir(&masks_dir)?;
    let mut horizon = formats::CsvSink::horizon(&out.join("horizon_gt.csv"))?;
    let mut objects = formats::CsvSink::objects(&out.join("objects_gt.csv"))?;
    let indices: Vec<u64> = (0..spec.frames).collect();
    for chunk in indices.chunks(32) {
        let rendered: Vec<_> = chunk
            .par_iter()
            .map(|&t| {
                let r = spec.render_frame(t).map_err(|e| Error::stage("synth", t, e))?;
                io::write_frame(&io::numbered(&frames_dir, io::FRAME_PREFIX, t, format.ext(false)), &r.frame)?;
                io::write_mask(&io::numbered(&masks_dir, io::MASK_PREFIX, t, format.ext(true)), &r.object_mask)?;
                Ok((r.horizon, r.objects))
            })
            .collect::<Result<_>>()?;
        for (h, objs) in &rendered {
            horizon.push_horizon(h)?;
            for o in objs {
                objects.push_object(o)?;
            }
        }
    }
    horizon.flush()?;
    objects.flush()?;
    pipeline::write_json(&out.join("spec.json"), &spec)?;
    let manifest = DatasetManifest {
        name: args.preset.clone().unwrap_or_else(|| "synthetic".into()),
        frames: "frames".into(),
        horizon_gt: Some("horizon_gt.csv".into()),
        objects_gt: Some("objects_gt.csv".into()),
        camera,
    };
    pipeline::write_json(&out.join("manifest.json"), &manifest)
}

fn horizon_cmd(frames_dir: &Path, out: &Path, overlay: Option<&Path>, config: &Config) -> Result<()> {
    let frames = frame_list(frames_dir)?;
    if let Some(dir) = overlay {
        io::create_dir(dir)?;
    }
    let mut sink = formats::CsvSink::horizon_report(out)?;
    let mut failures = 0;
    for chunk in frames.chunks(config.pipeline.chunk_frames) {
        let fs = pipeline::read_frames(chunk)?;
        let detected = pipeline::detect_horizons(&fs, &config.horizon);
        for (f, r) in fs.iter().zip(&detected) {
            match r {
                Ok(e) => sink.push_estimate(f.index, e)?,
                Err(e) => {
                    failures += 1;
                    eprintln!("frame {}: {e}", f.index);
                }
            }
        }
        if let Some(dir) = overlay {
            fs.par_iter().zip(&detected).try_for_each(|(f, r)| {
                let img = emit_overlay(f, &Overlay { horizon: r.as_ref().ok().map(|e| e.line()), boxes: &[], mask: None })?;
                io::write_frame(&io::numbered(dir, io::FRAME_PREFIX, f.index, config.pipeline.image_format.ext(false)), &img)
            })?;
        }
    }
    sink.flush()?;
    eprintln!("{} frames, {failures} without a horizon estimate", frames.len());
    Ok(())
}

fn register_cmd(args: &RegisterArgs, config: &Config) -> Result<()> {
    let frames = frame_list(&args.frames)?;
    let camera = match args.camera {
        CameraArg::AtSea => CameraClass::AtSea,
        CameraArg::OnShore => CameraClass::OnShore,
    };
    let mut registrar = Registrar::new(config.registration.clone(), camera)?;
    let estimates: Option<HashMap<u64, HorizonRecord>> =
        args.horizon.as_deref().map(formats::read_horizon_csv).transpose()?.map(|v| v.into_iter().map(|r| (r.frame_index, r)).collect());
    let need_horizon = registrar.enabled() && config.registration.mode.uses_horizon();
    io::create_dir(&args.out)?;
    if let Some(d) = &args.diff {
        io::create_dir(d)?;
    }
    let fmt = config.pipeline.image_format;
    let mut sink = formats::CsvSink::transforms(&args.out.join("transforms.csv"))?;
    let mut previous: Option<Warped> = None;
    for chunk in frames.chunks(config.pipeline.chunk_frames) {
        let fs = pipeline::read_frames(chunk)?;
        let hs: Vec<Option<HorizonRecord>> = match (&estimates, need_horizon) {
            (_, false) => vec![None; fs.len()],
            (Some(m), true) => fs.iter().map(|f| m.get(&f.index).copied()).collect(),
            (None, true) => pipeline::detect_horizons(&fs, &config.horizon).iter().zip(&fs).map(|(r, f)| r.as_ref().ok().map(|e| pipeline::horizon_record(f.index, e))).collect(),
        };
        let ts = registrar.transforms(&fs, &hs)?;
        for (f, t) in fs.iter().zip(&ts) {
            sink.push_transform(f.index, t)?;
        }
        let warped = pipeline::apply_transforms(&fs, &ts, &config.registration);
        pipeline::write_registered(&args.out, &warped, fmt)?;
        if let Some(dir) = &args.diff {
            let earlier = previous.iter().chain(&warped);
            let pairs: Vec<(&Warped, &Warped)> = earlier.zip(warped.iter().skip(usize::from(previous.is_none()))).collect();
            pairs.par_iter().try_for_each(|(a, b)| {
                let d = pipeline::registered_difference(a, b)?;
                io::write_frame(&io::numbered(dir, io::FRAME_PREFIX, d.index, fmt.ext(d.channels() == Channels::Gray)), &d)
            })?;
        }
        previous = warped.into_iter().last();
    }
    sink.flush()
}

fn bgsub_cmd(frames_dir: &Path, out: &Path, config: &Config) -> Result<()> {
    let frames = frame_list(frames_dir)?;
    if config.background.warmup >= frames.len() {
        return Err(Error::InvalidInput(format!("warmup {} must be below the frame count {}", config.background.warmup, frames.len())));
    }
    let valid: std::collections::HashMap<u64, PathBuf> = io::list_numbered(frames_dir, io::VALID_PREFIX)?.into_iter().collect();
    io::create_dir(out)?;
    let mut stage = BackgroundStage::new(config.background.method, config.background.warmup);
    for chunk in frames.chunks(config.pipeline.chunk_frames) {
        let fs = pipeline::read_frames(chunk)?;
        let vs: Vec<Option<Vec<bool>>> = fs.par_iter().map(|f| valid.get(&f.index).map(|p| io::read_mask(p).map(|m| m.data)).transpose()).collect::<Result<_>>()?;
        let mut masks = Vec::new();
        for (f, v) in fs.iter().zip(&vs) {
            if let Some(m) = stage.push(f, v.as_deref())? {
                masks.push((f.index, m));
            }
        }
        pipeline::write_masks(out, &masks, config.pipeline.image_format)?;
    }
    Ok(())
}

fn detect_cmd(masks_dir: &Path, out: &Path, config: &Config) -> Result<()> {
    let masks = io::list_numbered(masks_dir, io::MASK_PREFIX)?;
    let d = &config.detection;
    let mut stage = DetectStage::new(d.connectivity, d.min_area, d.tracker);
    for chunk in masks.chunks(config.pipeline.chunk_frames) {
        let ms: Vec<_> = chunk.par_iter().map(|(i, p)| io::read_mask(p).map(|m| (*i, m))).collect::<Result<_>>()?;
        let refs: Vec<_> = ms.iter().map(|(i, m)| (*i, m)).collect();
        stage.push(&refs)?;
    }
    formats::write_tracks_csv(out, &stage.finish())
}

fn eval_cmd(args: EvalArgs, config: &Config) -> Result<()> {
    let dataset = args.manifest.as_deref().map(DatasetManifest::load).transpose()?;
    let horizon_gt_path = args.horizon_gt.or_else(|| dataset.as_ref().and_then(|d| d.manifest.horizon_gt.clone()));
    let objects_gt_path = args.objects_gt.or_else(|| dataset.as_ref().and_then(|d| d.manifest.objects_gt.clone()));
    let horizon_gt = horizon_gt_path.as_deref().map(formats::read_horizon_csv).transpose()?;
    let objects_gt = objects_gt_path.as_deref().map(formats::read_objects_csv).transpose()?;
    let estimates = args.horizon.as_deref().map(formats::read_horizon_csv).transpose()?;
    let tracks = args.tracks.as_deref().map(formats::read_tracks_csv).transpose()?;
    let transforms = args.transforms.as_deref().map(formats::read_transforms_csv).transpose()?;
    let frame_indices: Vec<u64> = match &dataset {
        Some(d) => d.frames.iter().map(|f| f.0).collect(),
        None => {
            let mut v: Vec<u64> = horizon_gt.iter().flatten().map(|r| r.frame_index).chain(objects_gt.iter().flatten().map(|o| o.frame_index)).collect();
            v.sort_unstable();
            v.dedup();
            v
        }
    };
    let name = dataset.as_ref().map_or(args.name.clone(), |d| d.manifest.name.clone());
    let method = args.method.unwrap_or_else(|| config.horizon.metric.name().to_string());
    let report = pipeline::evaluate(&EvalInputs {
        dataset: &name,
        method: &method,
        frame_indices: &frame_indices,
        horizon_estimates: estimates.as_deref(),
        horizon_gt: horizon_gt.as_deref(),
        tracks: tracks.as_deref(),
        objects_gt: objects_gt.as_deref(),
        transforms: transforms.as_deref(),
        detection_start: args.start,
        iou_threshold: config.eval.iou_threshold,
    })?;
    pipeline::write_json(&args.out, &report)
}
