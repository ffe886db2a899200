//! Command line front end: one subcommand per pipeline stage, so every
//! stage can run in batch jobs and CI without touching the library API.
//!
//! Output is machine-readable by default (flat key-value lines or CSV);
//! `--pretty` switches to human tables. All numeric output is printed with
//! shortest round-trip formatting and is byte-identical across reruns and
//! thread counts.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use gaitkit::io::{
    read_embeddings, read_feature_map, read_pose_sequence, read_silhouette, read_walker_spec,
    write_pose_sequence,
};
use gaitkit::{
    alignment_report, evaluate_protocol, gon_forward, gon_stats, relative_thickness,
    retarget_sequence, synth_walker, thickness_level, walker_rest_pose, DistanceMetric,
    EvalReport, FeatureMap, GonParams, PoseSequence, RestPose, Silhouette, StripPartition,
    ThicknessLevel, DEFAULT_EPSILON,
};

#[derive(Parser)]
#[command(
    name = "gaitkit",
    version,
    about = "Motion retargeting, gait metrics, and retrieval evaluation"
)]
struct Cli {
    /// Worker threads for batch stages; 0 uses the machine default.
    /// When absent, the GAITKIT_THREADS environment variable is consulted.
    #[arg(long, global = true)]
    threads: Option<usize>,

    /// Human-readable tables instead of machine output.
    #[arg(long, global = true)]
    pretty: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Transfer a motion sequence onto a differently proportioned skeleton.
    Retarget(RetargetArgs),
    /// Position and angle alignment metrics between two sequences.
    Validate(ValidateArgs),
    /// Relative clothing thickness between silhouette masks.
    Thickness(ThicknessArgs),
    /// Rank-1 / mAP retrieval report over labeled embeddings.
    Evaluate(EvaluateArgs),
    /// Normalization invariant suite on a tensor fixture.
    GonCheck(GonCheckArgs),
    /// Generate a synthetic walking sequence.
    Synth(SynthArgs),
}

#[derive(Args)]
struct RetargetArgs {
    /// Motion to transfer (.pose).
    #[arg(long)]
    source: PathBuf,
    /// Rest pose of the skeleton the motion was captured on (one frame).
    #[arg(long)]
    source_rest: PathBuf,
    /// Rest pose of the skeleton to drive (one frame).
    #[arg(long)]
    target_rest: PathBuf,
    /// Where to write the retargeted sequence.
    #[arg(short, long)]
    output: PathBuf,
}

#[derive(Args)]
struct ValidateArgs {
    #[arg(long)]
    a: PathBuf,
    #[arg(long)]
    b: PathBuf,
    /// Subtract each frame's root position before measuring.
    #[arg(long)]
    root_relative: bool,
}

#[derive(Args)]
struct ThicknessArgs {
    /// Unclothed reference mask (.pgm).
    #[arg(long, requires = "clothed", conflicts_with_all = ["unclothed_dir", "clothed_dir"])]
    unclothed: Option<PathBuf>,
    /// Clothed mask to compare against it (.pgm).
    #[arg(long, requires = "unclothed")]
    clothed: Option<PathBuf>,
    /// Directory of unclothed masks, one `<subject>.pgm` each.
    #[arg(long, requires = "clothed_dir")]
    unclothed_dir: Option<PathBuf>,
    /// Directory of clothed masks named `<subject>__<outfit>.pgm`.
    #[arg(long, requires = "unclothed_dir", conflicts_with_all = ["unclothed", "clothed"])]
    clothed_dir: Option<PathBuf>,
    /// Write the batch CSV here instead of stdout.
    #[arg(short, long)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct EvaluateArgs {
    /// Labeled embeddings CSV with THK covariates.
    #[arg(long)]
    embeddings: PathBuf,
    /// euclidean or cosine.
    #[arg(long, default_value = "euclidean")]
    metric: DistanceMetric,
}

#[derive(Args)]
struct GonCheckArgs {
    /// Dense tensor fixture (.ten).
    #[arg(long)]
    tensor: PathBuf,
    /// Number of equal-split horizontal strips.
    #[arg(long)]
    strips: usize,
    /// Epsilon added to sigma during the cross-checks that allow it.
    #[arg(long, default_value_t = DEFAULT_EPSILON)]
    eps: f64,
}

#[derive(Args)]
struct SynthArgs {
    /// Walker description (.json).
    #[arg(long)]
    spec: PathBuf,
    /// Where to write the walking sequence.
    #[arg(short, long)]
    output: PathBuf,
    /// Also write the walker's rest pose as a one-frame sequence.
    #[arg(long)]
    rest_out: Option<PathBuf>,
}

// Die quietly when a downstream pipe closes, like any other filter.
#[cfg(unix)]
fn reset_sigpipe() {
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
}

#[cfg(not(unix))]
fn reset_sigpipe() {}

fn main() -> ExitCode {
    reset_sigpipe();
    let cli = Cli::parse();
    if let Err(e) = init_threads(cli.threads) {
        eprintln!("error: {e:#}");
        return ExitCode::from(1);
    }
    match run(&cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn init_threads(flag: Option<usize>) -> anyhow::Result<()> {
    let count = match flag {
        Some(n) => Some(n),
        None => match std::env::var("GAITKIT_THREADS") {
            Ok(v) => Some(
                v.parse::<usize>()
                    .map_err(|_| anyhow!("GAITKIT_THREADS must be a non-negative integer, got {v:?}"))?,
            ),
            Err(_) => None,
        },
    };
    if let Some(n) = count {
        if n > 0 {
            rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build_global()
                .context("thread pool setup failed")?;
        }
    }
    Ok(())
}

fn run(cli: &Cli) -> anyhow::Result<ExitCode> {
    match &cli.command {
        Command::Retarget(args) => retarget(args)?,
        Command::Validate(args) => validate(args, cli.pretty)?,
        Command::Thickness(args) => thickness(args, cli.pretty)?,
        Command::Evaluate(args) => evaluate(args, cli.pretty)?,
        Command::GonCheck(args) => return gon_check(args, cli.pretty),
        Command::Synth(args) => synth(args)?,
    }
    Ok(ExitCode::SUCCESS)
}

/// Rest files are one-frame sequences; refusing extra frames catches the
/// common mistake of passing a motion file.
fn read_rest(path: &Path) -> anyhow::Result<RestPose> {
    let seq = read_pose_sequence(path)?;
    if seq.len() != 1 {
        bail!(
            "{}: a rest pose file must contain exactly 1 frame, found {}",
            path.display(),
            seq.len()
        );
    }
    Ok(RestPose::new(seq.topology().clone(), seq.frames()[0].clone())?)
}

fn retarget(args: &RetargetArgs) -> anyhow::Result<()> {
    let source = read_pose_sequence(&args.source)?;
    let source_rest = read_rest(&args.source_rest)?;
    let target_rest = read_rest(&args.target_rest)?;
    let result = retarget_sequence(&source, &source_rest, &target_rest)?;
    write_pose_sequence(&result.sequence, &args.output)?;
    Ok(())
}

fn validate(args: &ValidateArgs, pretty: bool) -> anyhow::Result<()> {
    let a = read_pose_sequence(&args.a)?;
    let b = read_pose_sequence(&args.b)?;
    let report = alignment_report(&a, &b, args.root_relative)?;
    if pretty {
        println!("frames             {}", report.frame_count);
        println!("mpjpe              {:.6} mm", report.mean_joint_position_error_mm);
        println!("joint angle error  {:.6} deg", report.mean_joint_angle_error_deg);
        println!();
        println!("{:<16} {:>14} {:>12}", "joint", "position mm", "angle deg");
        let angles: BTreeMap<&str, f64> = report
            .per_bone_angle_error_deg
            .iter()
            .map(|(name, v)| (name.as_str(), *v))
            .collect();
        for (name, pos) in &report.per_joint_position_error_mm {
            match angles.get(name.as_str()) {
                Some(angle) => {
                    println!("{name:<16} {pos:>14.6} {angle:>12.6}")
                }
                None => println!("{name:<16} {pos:>14.6} {:>12}", "-"),
            }
        }
    } else {
        println!("frames {}", report.frame_count);
        println!("mpjpe_mm {:?}", report.mean_joint_position_error_mm);
        println!(
            "joint_angle_error_deg {:?}",
            report.mean_joint_angle_error_deg
        );
    }
    Ok(())
}

fn thickness(args: &ThicknessArgs, pretty: bool) -> anyhow::Result<()> {
    match (&args.unclothed, &args.clothed, &args.unclothed_dir, &args.clothed_dir) {
        (Some(unclothed), Some(clothed), None, None) => {
            thickness_single(unclothed, clothed, pretty)
        }
        (None, None, Some(unclothed_dir), Some(clothed_dir)) => {
            thickness_batch(unclothed_dir, clothed_dir, args.output.as_deref())
        }
        _ => {
            // requires/conflicts keep pairs together; only "no mode chosen"
            // can reach this point.
            let mut cmd = <Cli as clap::CommandFactory>::command();
            cmd.error(
                clap::error::ErrorKind::MissingRequiredArgument,
                "pass --unclothed/--clothed or --unclothed-dir/--clothed-dir",
            )
            .exit();
        }
    }
}

fn thickness_single(unclothed: &Path, clothed: &Path, pretty: bool) -> anyhow::Result<()> {
    let u = read_silhouette(unclothed)?;
    let c = read_silhouette(clothed)?;
    let (ratio, level) = measure(&u, &c)?;
    if pretty {
        println!("relative thickness {ratio:.4} ({level})");
    } else {
        println!("ratio {ratio:?}");
        println!("level {level}");
    }
    Ok(())
}

fn measure(u: &Silhouette, c: &Silhouette) -> anyhow::Result<(f64, ThicknessLevel)> {
    let ratio = relative_thickness(u, c)?;
    Ok((ratio, thickness_level(ratio)?))
}

/// Clothed masks are named `<subject>__<outfit>.pgm`; each pairs with the
/// unclothed `<subject>.pgm`. A clothed file without the separator pairs
/// with its own stem and gets an empty outfit column.
fn thickness_batch(
    unclothed_dir: &Path,
    clothed_dir: &Path,
    output: Option<&Path>,
) -> anyhow::Result<()> {
    let unclothed = pgm_files(unclothed_dir)?;
    let mut pairs: Vec<(String, String, PathBuf, PathBuf)> = Vec::new();
    for (stem, clothed_path) in pgm_files(clothed_dir)? {
        let (subject, outfit) = match stem.split_once("__") {
            Some((s, o)) => (s.to_string(), o.to_string()),
            None => (stem.clone(), String::new()),
        };
        let unclothed_path = unclothed.get(&subject).ok_or_else(|| {
            anyhow!(
                "{}: no unclothed mask {subject}.pgm in {}",
                clothed_path.display(),
                unclothed_dir.display()
            )
        })?;
        pairs.push((subject, outfit, unclothed_path.clone(), clothed_path));
    }
    pairs.sort_by(|a, b| (&a.0, &a.1).cmp(&(&b.0, &b.1)));

    let rows: Vec<[String; 4]> = pairs
        .par_iter()
        .map(|(subject, outfit, u_path, c_path)| -> anyhow::Result<[String; 4]> {
            let u = read_silhouette(u_path)?;
            let c = read_silhouette(c_path)?;
            let (ratio, level) = measure(&u, &c)
                .with_context(|| format!("{} vs {}", u_path.display(), c_path.display()))?;
            Ok([
                subject.clone(),
                outfit.clone(),
                format!("{ratio:?}"),
                level.to_string(),
            ])
        })
        .collect::<anyhow::Result<_>>()?;

    let mut writer = csv::Writer::from_writer(Vec::new());
    writer
        .write_record(["subject", "outfit", "ratio", "level"])
        .and_then(|_| rows.iter().try_for_each(|row| writer.write_record(row)))
        .context("CSV assembly failed")?;
    let bytes = writer.into_inner().context("CSV assembly failed")?;
    match output {
        Some(path) => std::fs::write(path, bytes)
            .with_context(|| format!("writing {}", path.display()))?,
        None => std::io::stdout().write_all(&bytes)?,
    }
    Ok(())
}

/// Maps file stem to path for every .pgm directly inside `dir`.
fn pgm_files(dir: &Path) -> anyhow::Result<BTreeMap<String, PathBuf>> {
    let mut files = BTreeMap::new();
    let entries = std::fs::read_dir(dir)
        .with_context(|| format!("reading directory {}", dir.display()))?;
    for entry in entries {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) != Some("pgm") {
            continue;
        }
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .ok_or_else(|| anyhow!("{}: file stem is not valid UTF-8", path.display()))?;
        files.insert(stem.to_string(), path.clone());
    }
    Ok(files)
}

fn evaluate(args: &EvaluateArgs, pretty: bool) -> anyhow::Result<()> {
    let set = read_embeddings(&args.embeddings)?;
    let report = evaluate_protocol(&set, args.metric)?;
    if pretty {
        print_pretty_report(&report);
    } else {
        println!("level,probes,rank1,map");
        for level in &report.per_level {
            println!(
                "{},{},{:?},{:?}",
                level.level, level.probes, level.rank1, level.map
            );
        }
        println!(
            "AVG,{},{:?},{:?}",
            report.included_probes(),
            report.overall_rank1,
            report.overall_map
        );
    }
    Ok(())
}

fn print_pretty_report(report: &EvalReport) {
    println!("{:<6} {:>7} {:>8} {:>8}", "level", "probes", "R1", "mAP");
    for level in &report.per_level {
        println!(
            "{:<6} {:>7} {:>8.2} {:>8.2}",
            level.level.to_string(),
            level.probes,
            level.rank1,
            level.map
        );
    }
    println!(
        "{:<6} {:>7} {:>8.2} {:>8.2}",
        "AVG",
        report.included_probes(),
        report.overall_rank1,
        report.overall_map
    );
    println!();
    println!(
        "gallery {} embeddings, {} probes excluded",
        report.gallery_count, report.excluded_probes
    );
}

struct Check {
    name: &'static str,
    passed: bool,
    detail: String,
}

fn gon_check(args: &GonCheckArgs, pretty: bool) -> anyhow::Result<ExitCode> {
    let map = read_feature_map(&args.tensor)?;
    let (n, c, h, w) = map.dims();
    let strips = StripPartition::equal_split(h, args.strips)?;
    let with_eps = GonParams::scalar(&vec![(1.0, 0.0); strips.strip_count()], args.eps)?;
    let exact = GonParams::identity(strips.strip_count(), 0.0);
    // Checks that compare statistics run at epsilon 0 so their tolerances
    // are about arithmetic only; the strip-independence cross-check runs
    // at the requested epsilon since it must hold for any epsilon.
    let mut checks = Vec::new();

    let out_eps = gon_forward(&map, &strips, &with_eps);
    checks.push(match &out_eps {
        Ok(out) => Check {
            name: "shape_preservation",
            passed: out.dims() == (n, c, h, w),
            detail: format!("dims {:?}", out.dims()),
        },
        Err(e) => fail("shape_preservation", e),
    });

    let out_zero = gon_forward(&map, &strips, &exact);
    checks.push(match &out_zero {
        Ok(out) => {
            let mut worst_mu: f64 = 0.0;
            let mut worst_sigma: f64 = 0.0;
            for batch in 0..n {
                let stats = gon_stats(out, &strips, batch)?;
                for (mu, sigma) in stats.mu.iter().zip(&stats.sigma) {
                    worst_mu = worst_mu.max(mu.abs());
                    worst_sigma = worst_sigma.max((sigma - 1.0).abs());
                }
            }
            Check {
                name: "strip_normalization",
                passed: worst_mu <= 1e-6 && worst_sigma <= 1e-5,
                detail: format!("max |mean| {worst_mu:.3e}, max |std-1| {worst_sigma:.3e}"),
            }
        }
        Err(e) => fail("strip_normalization", e),
    });

    checks.push(match &out_zero {
        Ok(base) => {
            let moved: Vec<f64> = map.values().iter().map(|v| 2.0 * v + 0.5).collect();
            let moved = FeatureMap::new(n, c, h, w, moved)?;
            match gon_forward(&moved, &strips, &exact) {
                Ok(out) => {
                    let worst = max_abs_diff(&out, base);
                    Check {
                        name: "affine_invariance",
                        passed: worst <= 1e-6,
                        detail: format!("max |gon(2x+0.5) - gon(x)| {worst:.3e}"),
                    }
                }
                Err(e) => fail("affine_invariance", &e),
            }
        }
        Err(e) => fail("affine_invariance", e),
    });

    checks.push(match &out_eps {
        Ok(out) => strip_independence(&map, &strips, args.eps, out)?,
        Err(e) => fail("strip_independence", e),
    });

    let all = checks.iter().all(|c| c.passed);
    for check in &checks {
        let verdict = if check.passed { "PASS" } else { "FAIL" };
        if pretty {
            println!("{:<22} {verdict}  ({})", check.name, check.detail);
        } else {
            println!("{} {verdict}", check.name);
        }
    }
    if pretty {
        println!();
    }
    println!("result {}", if all { "PASS" } else { "FAIL" });
    Ok(if all { ExitCode::SUCCESS } else { ExitCode::from(1) })
}

fn fail(name: &'static str, e: &dyn std::fmt::Display) -> Check {
    Check {
        name,
        passed: false,
        detail: e.to_string(),
    }
}

/// Each strip normalized as a standalone map must reproduce its rows of
/// the full output bit for bit; strips may not leak into each other.
fn strip_independence(
    map: &FeatureMap,
    strips: &StripPartition,
    eps: f64,
    full: &FeatureMap,
) -> anyhow::Result<Check> {
    let (n, c, _, w) = map.dims();
    let single = GonParams::scalar(&[(1.0, 0.0)], eps)?;
    let mut row0 = 0;
    for &rows in strips.heights() {
        let mut values = Vec::with_capacity(n * c * rows * w);
        for batch in 0..n {
            for channel in 0..c {
                for y in row0..row0 + rows {
                    for x in 0..w {
                        values.push(map.get(batch, channel, y, x));
                    }
                }
            }
        }
        let part = FeatureMap::new(n, c, rows, w, values)?;
        let out = gon_forward(&part, &StripPartition::new(vec![rows])?, &single)?;
        for batch in 0..n {
            for channel in 0..c {
                for y in 0..rows {
                    for x in 0..w {
                        if out.get(batch, channel, y, x)
                            != full.get(batch, channel, row0 + y, x)
                        {
                            return Ok(Check {
                                name: "strip_independence",
                                passed: false,
                                detail: format!(
                                    "row {} differs from standalone strip",
                                    row0 + y
                                ),
                            });
                        }
                    }
                }
            }
        }
        row0 += rows;
    }
    Ok(Check {
        name: "strip_independence",
        passed: true,
        detail: "standalone strips match bit for bit".to_string(),
    })
}

fn max_abs_diff(a: &FeatureMap, b: &FeatureMap) -> f64 {
    a.values()
        .iter()
        .zip(b.values())
        .map(|(x, y)| (x - y).abs())
        .fold(0.0, f64::max)
}

fn synth(args: &SynthArgs) -> anyhow::Result<()> {
    let spec = read_walker_spec(&args.spec)?;
    let sequence = synth_walker(&spec)?;
    write_pose_sequence(&sequence, &args.output)?;
    if let Some(rest_path) = &args.rest_out {
        let rest = walker_rest_pose(&spec)?;
        let rest_seq = PoseSequence::new(
            rest.topology().clone(),
            vec![rest.pose().clone()],
            spec.frame_rate_hz,
        )?;
        write_pose_sequence(&rest_seq, rest_path)?;
    }
    Ok(())
}
