use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use dicentric::pca::{image_to_vector, PcaClassifier, CROP_SIDE};
use dicentric::pipeline::{
    chromosome_crops, list_images, load_truth, match_calls, render_overlay, score_batch, segment_and_filter, BatchOptions,
    ImageReport, Mode, PipelineConfig, Scorer, DEFAULT_CONFIG_TOML,
};
use dicentric::synth::{generate_scene, write_scene, SceneLabel, SceneSpec, SpriteKind};
use dicentric::{load_image, save_image, ConfusionMatrix, ImageFormat};

#[derive(Parser)]
#[command(name = "dicentric", version, about = "Dicentric chromosome scoring for metaphase images")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Score every PGM/PNG image in a directory.
    Score(ScoreArgs),
    /// Generate synthetic metaphase scenes with ground truth.
    Synth(SynthArgs),
    /// Train or apply PCA reconstruction-error classifiers.
    #[command(subcommand)]
    Pca(PcaCommand),
    /// Compare scored reports against ground truth.
    Eval(EvalArgs),
    /// Print the default configuration.
    Config,
}

#[derive(Args)]
struct ScoreArgs {
    dir: PathBuf,
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the mode in the config file.
    #[arg(long)]
    mode: Option<Mode>,
    /// Write annotated images here.
    #[arg(long)]
    overlays: Option<PathBuf>,
    /// Directory of `<stem>.json` truth files; adds a confusion matrix to the summary.
    #[arg(long)]
    truth: Option<PathBuf>,
    /// Write binarized masks here.
    #[arg(long)]
    debug_masks: Option<PathBuf>,
    #[arg(long)]
    threads: Option<usize>,
    /// Report file (JSON lines); standard output when absent.
    #[arg(long, short)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 1)]
    count: usize,
    /// Canvas size as WxH.
    #[arg(long, default_value = "1024x1280", value_parser = parse_canvas)]
    canvas: (usize, usize),
    #[arg(long, default_value_t = 44)]
    mc: usize,
    #[arg(long, default_value_t = 2)]
    dc: usize,
    #[arg(long, default_value_t = 4)]
    debris: usize,
    #[arg(long, default_value_t = 1)]
    nuclei: usize,
    /// Seed of the first scene; scene i uses seed + i.
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.0)]
    noise_sigma: f64,
    #[arg(long)]
    out_dir: PathBuf,
    /// Also cut chromosome crops into `<dir>/mc` and `<dir>/dc` for PCA training.
    #[arg(long)]
    crops: Option<PathBuf>,
}

#[derive(Subcommand)]
enum PcaCommand {
    /// Fit one subspace per class and save the model.
    Train {
        /// `label=dir`, repeated once per class.
        #[arg(long = "class", required = true, value_parser = parse_class)]
        classes: Vec<(String, PathBuf)>,
        #[arg(long)]
        k: Option<usize>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Label every crop in a directory.
    Classify {
        #[arg(long)]
        model: PathBuf,
        dir: PathBuf,
    },
}

#[derive(Args)]
struct EvalArgs {
    /// Reports written by `score`.
    #[arg(long)]
    pred: PathBuf,
    /// Truth directory, or a single truth file when there is one report.
    #[arg(long)]
    truth: PathBuf,
}

fn parse_canvas(s: &str) -> Result<(usize, usize), String> {
    let (w, h) = s.split_once(['x', 'X']).ok_or("expected WxH")?;
    let dim = |v: &str| v.trim().parse::<usize>().map_err(|e| format!("{v:?}: {e}"));
    Ok((dim(w)?, dim(h)?))
}

fn parse_class(s: &str) -> Result<(String, PathBuf), String> {
    let (label, dir) = s.split_once('=').ok_or("expected label=dir")?;
    if label.is_empty() {
        return Err("empty label".into());
    }
    Ok((label.to_string(), PathBuf::from(dir)))
}

fn stem(id: &str) -> String {
    Path::new(id).file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default()
}

fn score(args: ScoreArgs) -> Result<()> {
    let mut cfg = match &args.config {
        Some(p) => PipelineConfig::load(p)?,
        None => PipelineConfig::default(),
    };
    if let Some(m) = args.mode {
        cfg.mode = m;
    }
    let scorer = Scorer::new(cfg.clone())?;
    let mut report = score_batch(&args.dir, &scorer, &BatchOptions { threads: args.threads })?;

    if let Some(truth) = &args.truth {
        let mut total = ConfusionMatrix::default();
        for r in &report.images {
            if let Some(label) = load_truth(truth, &r.id)? {
                total += match_calls(r, &label).confusion;
            }
        }
        report.confusion = Some(total);
    }
    for out_dir in [&args.overlays, &args.debug_masks].into_iter().flatten() {
        fs::create_dir_all(out_dir).with_context(|| format!("creating {}", out_dir.display()))?;
    }
    if args.overlays.is_some() || args.debug_masks.is_some() {
        for r in &report.images {
            let Ok(img) = load_image(args.dir.join(&r.id)) else { continue };
            if let Some(dir) = &args.overlays {
                save_image(&render_overlay(&img, r), dir.join(format!("{}.pgm", stem(&r.id))), ImageFormat::Pgm)?;
            }
            if let Some(dir) = &args.debug_masks {
                if let Ok((seg, _)) = segment_and_filter(&img, &cfg) {
                    save_image(&seg.mask.to_image(), dir.join(format!("{}.mask.pgm", stem(&r.id))), ImageFormat::Pgm)?;
                }
            }
        }
    }

    let lines = report.to_json_lines();
    match &args.out {
        Some(p) => fs::write(p, lines).with_context(|| format!("writing {}", p.display()))?,
        None => io::stdout().write_all(lines.as_bytes())?,
    }
    let s = report.summary();
    eprintln!(
        "{} images: {} accepted, {} rejected; {} chromosomes, {} dicentrics{}",
        s.images,
        s.accepted,
        s.rejected,
        s.chromosomes,
        s.dc_total,
        s.dc_frequency.map_or(String::new(), |f| format!(" ({f:.3} per accepted cell)"))
    );
    if let Some(cm) = report.confusion {
        eprintln!("{}", cm.summary());
    }
    Ok(())
}

fn synth(args: SynthArgs) -> Result<()> {
    let spec = SceneSpec {
        width: args.canvas.0,
        height: args.canvas.1,
        mc: args.mc,
        dc: args.dc,
        debris: args.debris,
        nuclei: args.nuclei,
        noise_sigma: args.noise_sigma,
        ..SceneSpec::default()
    };
    fs::create_dir_all(&args.out_dir)?;
    let cfg = PipelineConfig::default();
    if let Some(dir) = &args.crops {
        fs::create_dir_all(dir.join("mc"))?;
        fs::create_dir_all(dir.join("dc"))?;
    }
    let mut crops = [0usize; 2];
    for i in 0..args.count {
        let (img, label) = generate_scene(&spec, args.seed + i as u64)?;
        write_scene(&args.out_dir, i, &img, &label)?;
        if let Some(dir) = &args.crops {
            let Ok(found) = chromosome_crops(&img, &cfg) else { continue };
            for (k, (bbox, crop)) in found.into_iter().enumerate() {
                let best = label
                    .objects
                    .iter()
                    .filter(|o| o.kind.is_chromosome())
                    .map(|o| (o.bbox.iou(&bbox), o.kind))
                    .max_by(|a, b| a.0.total_cmp(&b.0));
                let kind = match best {
                    Some((iou, kind)) if iou >= 0.5 => kind,
                    _ => continue,
                };
                let class = if kind == SpriteKind::Dc { "dc" } else { "mc" };
                crops[(kind == SpriteKind::Dc) as usize] += 1;
                save_image(&crop, dir.join(class).join(format!("{i:04}_{k:03}.pgm")), ImageFormat::Pgm)?;
            }
        }
    }
    eprintln!("wrote {} scenes to {}", args.count, args.out_dir.display());
    if let Some(dir) = &args.crops {
        eprintln!("wrote {} mc and {} dc crops to {}", crops[0], crops[1], dir.display());
    }
    Ok(())
}

fn load_vectors(dir: &Path) -> Result<Vec<(String, Vec<f64>)>> {
    list_images(dir)?
        .into_iter()
        .map(|p| {
            let img = load_image(&p).with_context(|| format!("reading {}", p.display()))?;
            let v = image_to_vector(&img, CROP_SIDE).with_context(|| format!("vectorizing {}", p.display()))?;
            Ok((dicentric::pipeline::image_id(&p), v))
        })
        .collect()
}

fn pca(cmd: PcaCommand) -> Result<()> {
    match cmd {
        PcaCommand::Train { classes, k, out } => {
            let mut data = Vec::new();
            for (label, dir) in classes {
                let vectors: Vec<Vec<f64>> = load_vectors(&dir)?.into_iter().map(|(_, v)| v).collect();
                eprintln!("{label}: {} samples from {}", vectors.len(), dir.display());
                data.push((label, vectors));
            }
            let clf = PcaClassifier::fit(&data, k)?;
            clf.save(&out)?;
            let ks: Vec<String> = clf.labels().iter().zip(clf.models()).map(|(l, m)| format!("{l} k={}", m.k())).collect();
            eprintln!("saved {} ({})", out.display(), ks.join(", "));
        }
        PcaCommand::Classify { model, dir } => {
            let clf = PcaClassifier::load(&model)?;
            let mut stdout = io::stdout().lock();
            for (id, v) in load_vectors(&dir)? {
                let c = clf.classify(&v)?;
                let errors: serde_json::Map<String, serde_json::Value> =
                    clf.labels().iter().cloned().zip(c.mse.iter().map(|&e| e.into())).collect();
                writeln!(stdout, "{}", serde_json::json!({ "id": id, "label": c.label, "mse": errors }))?;
            }
        }
    }
    Ok(())
}

fn read_reports(path: &Path) -> Result<Vec<ImageReport>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for (n, line) in text.lines().enumerate() {
        let value: serde_json::Value =
            serde_json::from_str(line).with_context(|| format!("{}:{}: not JSON", path.display(), n + 1))?;
        if value.get("summary").is_some() {
            continue;
        }
        out.push(serde_json::from_value(value).with_context(|| format!("{}:{}: not a report", path.display(), n + 1))?);
    }
    Ok(out)
}

fn eval(args: EvalArgs) -> Result<()> {
    let reports = read_reports(&args.pred)?;
    let single: Option<SceneLabel> = if args.truth.is_file() {
        if reports.len() != 1 {
            bail!("a single truth file needs exactly one report, found {}", reports.len());
        }
        Some(serde_json::from_str(&fs::read_to_string(&args.truth)?)?)
    } else {
        None
    };
    let (mut cm, mut matched, mut missing_truth, mut unmatched_truth, mut unmatched_calls) =
        (ConfusionMatrix::default(), 0, 0, 0, 0);
    for r in &reports {
        let label = match &single {
            Some(l) => Some(l.clone()),
            None => load_truth(&args.truth, &r.id)?,
        };
        let Some(label) = label else {
            missing_truth += 1;
            continue;
        };
        let m = match_calls(r, &label);
        cm += m.confusion;
        matched += 1;
        unmatched_truth += m.unmatched_truth;
        unmatched_calls += m.unmatched_calls;
    }
    if matched == 0 {
        bail!("no report has a truth file");
    }
    let summary = cm.summary();
    println!("images evaluated  {matched} ({missing_truth} without truth)");
    println!("unmatched truth   {unmatched_truth}");
    println!("unmatched calls   {unmatched_calls}");
    println!("{summary}");
    println!(
        "{}",
        serde_json::json!({
            "images": matched,
            "missing_truth": missing_truth,
            "unmatched_truth": unmatched_truth,
            "unmatched_calls": unmatched_calls,
            "metrics": summary,
        })
    );
    Ok(())
}

/// Error chain joined by ": ", skipping causes already quoted by their parent.
fn describe(e: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in e.chain() {
        let msg = cause.to_string();
        if !out.contains(&msg) {
            if !out.is_empty() {
                out.push_str(": ");
            }
            out.push_str(&msg);
        }
    }
    out
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Score(a) => score(a),
        Command::Synth(a) => synth(a),
        Command::Pca(c) => pca(c),
        Command::Eval(a) => eval(a),
        Command::Config => {
            print!("{DEFAULT_CONFIG_TOML}");
            Ok(())
        }
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        // a closed downstream pipe (for example `| head`) is not a failure
        Err(e) if e.downcast_ref::<io::Error>().is_some_and(|io| io.kind() == io::ErrorKind::BrokenPipe) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::FAILURE
        }
    }
}
