use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use strokeforge::pipeline::{resample_strokes, roundtrip_binary, run, Resampler};
use strokeforge::raster::{binarize, load_png_file};
use strokeforge::retrieval::{read_distance_csv, read_labels};
use strokeforge::sequence::{to_deltas, write_deltas_csv};
use strokeforge::thinning::generate_training_pairs;
use strokeforge::{
    leave_one_out_eval, order_strokes, render_online, thin, vectorize, BinarizeMethod, BinaryImage,
    OnlineSequence, ResampleParams, RetrievalProblem, StrokeSet,
};

/// Offline handwriting skeletons to approximate online pen trajectories.
///
/// Rasters are PNG (dark ink on light paper), strokes and sequences are
/// JSON, deltas and distance matrices are CSV.
#[derive(Parser)]
#[command(name = "strokeforge", version)]
struct Cli {
    /// Worker threads; 0 picks one per core. Output does not depend on it.
    #[arg(long, global = true, default_value_t = 0)]
    threads: usize,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Binarize and thin an image to a 1-pixel skeleton PNG.
    Skeletonize {
        input: PathBuf,
        #[arg(short, long)]
        output: PathBuf,
        #[command(flatten)]
        bin: BinarizeOpts,
    },
    /// Trace a skeleton PNG into strokes: {"strokes": [[[x, y], ...], ...]}.
    Vectorize {
        input: PathBuf,
        /// Defaults to standard output.
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        bin: BinarizeOpts,
    },
    /// Resample strokes JSON into a sequence:
    /// {"strokes": [{"samples": [[x, y], ...], "fallback": bool}, ...]}.
    Resample {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        resample: ResampleOpts,
    },
    /// Order and orient the strokes of a sequence JSON left to right.
    Order {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Write a sequence JSON as `dx,dy,lift` CSV rows, the first relative to
    /// the first sample.
    ExportDeltas {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Draw a sequence JSON as a 1-pixel polyline PNG.
    Render {
        input: PathBuf,
        /// Canvas width in pixels.
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        width: u32,
        /// Canvas height in pixels.
        #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
        height: u32,
        #[arg(short, long)]
        output: PathBuf,
    },
    /// Run the pipeline, render the result and print chamfer distances
    /// against the skeleton as JSON.
    Roundtrip {
        input: PathBuf,
        #[command(flatten)]
        bin: BinarizeOpts,
        #[command(flatten)]
        resample: ResampleOpts,
    },
    /// Write (original, skeleton) PNG pairs and manifest.json for every PNG
    /// in a directory.
    DatasetGen {
        /// Directory of input PNGs; other files are ignored.
        #[arg(long = "in")]
        input: PathBuf,
        /// Created if missing.
        #[arg(long = "out")]
        output: PathBuf,
        #[command(flatten)]
        bin: BinarizeOpts,
    },
    /// Leave-one-out retrieval metrics from an N×N distance CSV and N labels
    /// (one per line). Prints {map, accuracy, soft, skipped} in percent.
    Eval {
        /// Symmetric, header-free distance matrix with a zero diagonal.
        #[arg(long)]
        dist: PathBuf,
        /// Writer identity per sample, one per line, in matrix order.
        #[arg(long)]
        labels: PathBuf,
        /// Ranks for soft-top-K accuracy.
        #[arg(long, value_delimiter = ',', default_value = "2,3,4,5", value_parser = clap::value_parser!(u64).range(1..))]
        soft: Vec<u64>,
        /// CSV of `query,item` index pairs to leave out of the rankings.
        #[arg(long)]
        exclude: Option<PathBuf>,
    },
    /// Skeletonize, vectorize, resample and order an image into sequence JSON.
    Pipeline {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        bin: BinarizeOpts,
        #[command(flatten)]
        resample: ResampleOpts,
        /// Also write the skeleton PNG here.
        #[arg(long)]
        skeleton: Option<PathBuf>,
    },
}

#[derive(Args)]
struct BinarizeOpts {
    /// Ink is darker than this luminance; `otsu` picks it per image.
    #[arg(long, default_value = "otsu", value_parser = parse_threshold)]
    threshold: BinarizeMethod,
}

#[derive(Clone, Copy, ValueEnum)]
enum Method {
    Maxaccel,
    Constvel,
    None,
}

#[derive(Args)]
struct ResampleOpts {
    /// Maximum velocity change per step, in pixels.
    #[arg(long, default_value_t = 3.0, value_parser = positive)]
    accel: f64,
    /// Pre-sampling interval; defaults to accel / 3.
    #[arg(long, value_parser = positive)]
    spacing: Option<f64>,
    /// Straight-line tolerance for skipping points; defaults to 3 × spacing.
    #[arg(long, value_parser = positive)]
    reach: Option<f64>,
    #[arg(long, value_enum, default_value = "maxaccel")]
    method: Method,
    /// Step length for `constvel`; defaults to accel.
    #[arg(long, value_parser = positive)]
    speed: Option<f64>,
}

impl ResampleOpts {
    fn resampler(&self) -> Result<Resampler> {
        Ok(match self.method {
            Method::Maxaccel => Resampler::MaxAccel(ResampleParams::new(self.accel, self.spacing, self.reach)?),
            Method::Constvel => Resampler::ConstVel(self.speed.unwrap_or(self.accel)),
            Method::None => Resampler::None,
        })
    }
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v.is_finite() && v > 0.0 => Ok(v),
        Ok(_) => Err("must be a positive number".into()),
        Err(e) => Err(e.to_string()),
    }
}

fn parse_threshold(s: &str) -> Result<BinarizeMethod, String> {
    if s.eq_ignore_ascii_case("otsu") {
        return Ok(BinarizeMethod::Otsu);
    }
    s.parse::<u8>()
        .map(BinarizeMethod::Fixed)
        .map_err(|_| "expected `otsu` or a luminance from 0 to 255".into())
}

fn read_text(path: &Path) -> Result<String> {
    std::fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))
}

fn read_binary(path: &Path, method: BinarizeMethod) -> Result<BinaryImage> {
    Ok(binarize(&load_png_file(path)?, method))
}

fn emit(output: Option<&Path>, bytes: &[u8]) -> Result<()> {
    match output {
        Some(path) => std::fs::write(path, bytes).with_context(|| format!("cannot write {}", path.display())),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(bytes)?;
            out.flush()?;
            Ok(())
        }
    }
}

fn emit_json(output: Option<&Path>, json: String) -> Result<()> {
    emit(output, format!("{json}\n").as_bytes())
}

fn save_png(img: &BinaryImage, path: &Path) -> Result<()> {
    emit(Some(path), &img.to_png_bytes()?)
}

fn read_exclusions(path: &Path) -> Result<Vec<(usize, usize)>> {
    let rows = read_distance_csv(BufReader::new(File::open(path).with_context(|| format!("cannot read {}", path.display()))?))?;
    rows.into_iter()
        .enumerate()
        .map(|(i, row)| match row[..] {
            [q, j] if q >= 0.0 && j >= 0.0 && q.fract() == 0.0 && j.fract() == 0.0 => Ok((q as usize, j as usize)),
            _ => bail!("{}: row {} is not a `query,item` index pair", path.display(), i + 1),
        })
        .collect()
}

fn execute(command: Command) -> Result<()> {
    match command {
        Command::Skeletonize { input, output, bin } => {
            save_png(&thin(&read_binary(&input, bin.threshold)?), &output)?;
        }
        Command::Vectorize { input, output, bin } => {
            let strokes = vectorize(&read_binary(&input, bin.threshold)?)?;
            emit_json(output.as_deref(), strokes.to_json())?;
        }
        Command::Resample { input, output, resample } => {
            let strokes = StrokeSet::from_json(&read_text(&input)?)?;
            let seq = OnlineSequence {
                strokes: resample_strokes(&strokes, &resample.resampler()?)?,
            };
            emit_json(output.as_deref(), seq.to_json())?;
        }
        Command::Order { input, output } => {
            let seq = OnlineSequence::from_json(&read_text(&input)?)?;
            emit_json(output.as_deref(), order_strokes(seq.strokes)?.to_json())?;
        }
        Command::ExportDeltas { input, output } => {
            let seq = OnlineSequence::from_json(&read_text(&input)?)?;
            let mut buf = Vec::new();
            write_deltas_csv(&to_deltas(&seq), &mut buf)?;
            emit(output.as_deref(), &buf)?;
        }
        Command::Render { input, width, height, output } => {
            let seq = OnlineSequence::from_json(&read_text(&input)?)?;
            save_png(&render_online(&seq, width, height)?, &output)?;
        }
        Command::Roundtrip { input, bin, resample } => {
            let binary = read_binary(&input, bin.threshold)?;
            let (_, report) = roundtrip_binary(binary, &resample.resampler()?)?;
            emit_json(None, serde_json::to_string(&report)?)?;
        }
        Command::DatasetGen { input, output, bin } => {
            let manifest = generate_training_pairs(&input, &output, bin.threshold)?;
            for entry in manifest.entries.iter().filter(|e| e.error.is_some()) {
                eprintln!("skipped {}: {}", entry.original, entry.error.as_deref().unwrap_or(""));
            }
            eprintln!("{} pairs written, {} skipped", manifest.ok_count(), manifest.skipped_count());
        }
        Command::Eval { dist, labels, soft, exclude } => {
            let matrix = read_distance_csv(BufReader::new(
                File::open(&dist).with_context(|| format!("cannot read {}", dist.display()))?,
            ))?;
            let labels = read_labels(BufReader::new(
                File::open(&labels).with_context(|| format!("cannot read {}", labels.display()))?,
            ))?;
            let exclusions = exclude.as_deref().map(read_exclusions).transpose()?.unwrap_or_default();
            let problem = RetrievalProblem::new(matrix, labels)?;
            let ks: Vec<usize> = soft.iter().map(|&k| k as usize).collect();
            let report = leave_one_out_eval(&problem, &exclusions, &ks)?;
            if report.skipped > 0 {
                eprintln!("{} queries had no relevant item and were skipped", report.skipped);
            }
            emit_json(None, serde_json::to_string(&report)?)?;
        }
        Command::Pipeline { input, output, bin, resample, skeleton } => {
            let out = run(&load_png_file(&input)?, bin.threshold, &resample.resampler()?)?;
            if let Some(path) = skeleton {
                save_png(&out.skeleton, &path)?;
            }
            let fallbacks = out.sequence.strokes.iter().filter(|s| s.fallback).count();
            if fallbacks > 0 {
                eprintln!("{fallbacks} strokes fell back to pre-sampled points");
            }
            emit_json(output.as_deref(), out.sequence.to_json())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            // Help and version go to stdout, usage errors to stderr.
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    if cli.threads > 0 {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(cli.threads).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    }
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
