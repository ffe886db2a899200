//! End-to-end acceptance gate. Each test covers one numbered criterion,
//! pins its tolerances in code, and prints one PASS line on success. The
//! oracles here are deliberately naive re-implementations, independent of
//! the library's summation and ranking strategies.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use gaitkit::fixtures::{self, random_feature_map, random_fk_pose, random_rest_pose};
use gaitkit::io::{
    read_embeddings, read_pose_sequence, read_silhouette, write_embeddings,
    write_pose_sequence, write_silhouette, FormatError, FormatErrorKind,
};
use gaitkit::{
    evaluate_protocol, forward_kinematics, gon_forward, gon_stats, joint_angle_error,
    match_skeleton_lengths, mean_average_precision, non_overlap_area, rank1, retarget_frame,
    retarget_sequence, synth_walker, thickness_level, walker_rest_pose, Covariate,
    DistanceMetric, Embedding, EmbeddingSet, FeatureMap, GonParams, Pose3D, RestPose,
    Silhouette, SkeletonTopology, StripPartition, ThicknessLevel, Vec3, WalkerSpec,
    DEFAULT_EPSILON,
};
use rand::Rng;

fn max_joint_error_m(a: &Pose3D, b: &Pose3D) -> f64 {
    a.positions()
        .iter()
        .zip(b.positions())
        .map(|(p, q)| p.distance(*q))
        .fold(0.0, f64::max)
}

fn walker_spec(seed: u64) -> WalkerSpec {
    WalkerSpec {
        stride_frequency_hz: 0.8 + 0.1 * (seed % 5) as f64,
        stride_amplitude_rad: 0.3 + 0.05 * (seed % 7) as f64,
        arm_swing_amplitude_rad: 0.2 + 0.03 * (seed % 4) as f64,
        forward_speed_m_per_s: 1.0 + 0.1 * (seed % 3) as f64,
        frame_count: 25,
        seed,
        ..WalkerSpec::default()
    }
}

#[test]
fn criterion_1_retarget_round_trip() {
    // 100 seeded random poses on random trees of up to 20 joints.
    for seed in 0..100u64 {
        let mut rng = fixtures::rng(seed);
        let rest = random_rest_pose(&mut rng, 20);
        let (_, target) = random_fk_pose(&mut rng, &rest);
        let drives = retarget_frame(&rest, &target).unwrap();
        let root = target.position(rest.topology().root());
        let rebuilt = forward_kinematics(&rest, &drives, root).unwrap();
        let err = max_joint_error_m(&rebuilt, &target);
        assert!(err <= 1e-6, "seed {seed}: per-joint error {err} m");
    }

    // 10 walker sequences retargeted onto their own rest skeleton.
    for seed in 0..10u64 {
        let spec = walker_spec(seed);
        let source = synth_walker(&spec).unwrap();
        let rest = walker_rest_pose(&spec).unwrap();
        let out = retarget_sequence(&source, &rest, &rest).unwrap();
        for (frame, (got, want)) in
            out.sequence.frames().iter().zip(source.frames()).enumerate()
        {
            let err = max_joint_error_m(got, want);
            assert!(err <= 1e-6, "walker {seed} frame {frame}: {err} m");
        }
    }
    println!("ACCEPTANCE criterion 1 (retarget round trip): PASS");
}

#[test]
fn criterion_2_angle_preservation() {
    let spec = walker_spec(3);
    let source = synth_walker(&spec).unwrap();
    let rest = walker_rest_pose(&spec).unwrap();
    let scaled = match_skeleton_lengths(&rest, &rest.bone_lengths().scaled(1.1)).unwrap();
    let out = retarget_sequence(&source, &rest, &scaled).unwrap();
    let err = joint_angle_error(&source, &out.sequence).unwrap();
    assert!(err <= 1e-4, "joint angle error {err} deg");
    println!("ACCEPTANCE criterion 2 (angle preservation): PASS");
}

#[test]
fn criterion_3_rest_to_rest_identity() {
    let mut rests: Vec<RestPose> = (0..10u64)
        .map(|seed| random_rest_pose(&mut fixtures::rng(1000 + seed), 20))
        .collect();
    rests.push(walker_rest_pose(&WalkerSpec::default()).unwrap());
    for (i, rest) in rests.iter().enumerate() {
        let drives = retarget_frame(rest, rest.pose()).unwrap();
        for (bone, q) in drives.rotations().iter().enumerate() {
            let angle = q.angle();
            assert!(angle <= 1e-9, "rest {i} bone {bone}: {angle} rad");
        }
    }
    println!("ACCEPTANCE criterion 3 (rest-to-rest identity): PASS");
}

/// Chain whose rest runs +Y, +X, -Y; references chosen to stay valid both
/// at rest and after the pose edits below.
fn vertical_rig() -> RestPose {
    let topology = SkeletonTopology::new(
        vec![
            "root".to_string(),
            "j1".to_string(),
            "j2".to_string(),
            "j3".to_string(),
        ],
        vec![None, Some(0), Some(1), Some(2)],
        vec![None, Some(3), Some(3), Some(0)],
    )
    .unwrap();
    let pose = Pose3D::new(vec![
        Vec3::ZERO,
        Vec3::new(0.0, 1.0, 0.0),
        Vec3::new(1.0, 1.0, 0.0),
        Vec3::new(1.0, 0.0, 0.0),
    ])
    .unwrap();
    RestPose::new(topology, pose).unwrap()
}

fn assert_vertical(pose: &Pose3D, parent: usize, child: usize, up: bool) {
    let v = pose.position(child) - pose.position(parent);
    assert_eq!(v.x, 0.0);
    assert_eq!(v.z, 0.0);
    assert_eq!(v.y > 0.0, up);
}

#[test]
fn criterion_4_gimbal_robustness() {
    // A pose that stacks two exactly vertical bones, one of which was
    // horizontal at rest.
    let rest = vertical_rig();
    let pose = Pose3D::new(vec![
        Vec3::ZERO,
        Vec3::new(0.0, 1.0, 0.0),
        Vec3::new(0.0, 2.0, 0.0),
        Vec3::new(1.0, 2.0, 0.0),
    ])
    .unwrap();
    assert_vertical(&pose, 0, 1, true);
    assert_vertical(&pose, 1, 2, true);
    let drives = retarget_frame(&rest, &pose).unwrap();
    let rebuilt = forward_kinematics(&rest, &drives, Vec3::ZERO).unwrap();
    assert!(max_joint_error_m(&rebuilt, &pose) <= 1e-6);

    // Heading changes keep vertical bones exactly vertical: rotating about
    // +Y leaves (0, y, 0) untouched bit for bit.
    let q = gaitkit::Quaternion::from_axis_angle(Vec3::Y, 0.647);
    let shift = Vec3::new(0.3, -0.2, 1.1);
    let turned = Pose3D::new(
        rest.pose()
            .positions()
            .iter()
            .map(|p| q.rotate(*p) + shift)
            .collect(),
    )
    .unwrap();
    assert_vertical(&turned, 0, 1, true);
    assert_vertical(&turned, 2, 3, false);
    let drives = retarget_frame(&rest, &turned).unwrap();
    let rebuilt = forward_kinematics(&rest, &drives, turned.position(0)).unwrap();
    assert!(max_joint_error_m(&rebuilt, &turned) <= 1e-6);

    // The walker's first frame holds both legs and the torso at exact
    // +-90 degree elevation.
    let spec = walker_spec(0);
    let source = synth_walker(&spec).unwrap();
    let topo = source.topology().clone();
    let frame0 = &source.frames()[0];
    let pelvis = topo.index_of("pelvis").unwrap();
    let spine = topo.index_of("spine").unwrap();
    let l_hip = topo.index_of("l_hip").unwrap();
    let l_knee = topo.index_of("l_knee").unwrap();
    assert_vertical(frame0, pelvis, spine, true);
    assert_vertical(frame0, l_hip, l_knee, false);
    let rest = walker_rest_pose(&spec).unwrap();
    let drives = retarget_frame(&rest, frame0).unwrap();
    let rebuilt = forward_kinematics(&rest, &drives, frame0.position(pelvis)).unwrap();
    assert!(max_joint_error_m(&rebuilt, frame0) <= 1e-6);

    println!("ACCEPTANCE criterion 4 (gimbal robustness): PASS");
}

#[test]
fn criterion_5_thickness_oracle() {
    for seed in 0..50u64 {
        let mut rng = fixtures::rng(seed);
        let unclothed = fixtures::random_silhouette(&mut rng, 64, 64, true);
        let pixels = unclothed.width() * unclothed.height();
        let mask: Vec<bool> = (0..pixels).map(|_| rng.gen_bool(0.5)).collect();
        let clothed =
            Silhouette::new(unclothed.width(), unclothed.height(), mask).unwrap();

        let mut brute = 0usize;
        for y in 0..unclothed.height() {
            for x in 0..unclothed.width() {
                if unclothed.get(x, y) != clothed.get(x, y) {
                    brute += 1;
                }
            }
        }
        assert_eq!(non_overlap_area(&unclothed, &clothed).unwrap(), brute);
    }

    let cases = [
        (0.0, 0u8),
        (0.1499999999999999, 0),
        (0.15, 1),
        (0.30, 2),
        (1.34, 8),
        (1.35, 9),
        (10.0, 9),
    ];
    for (t, want) in cases {
        assert_eq!(thickness_level(t).unwrap().level(), want, "ratio {t}");
    }
    println!("ACCEPTANCE criterion 5 (thickness oracle): PASS");
}

/// Plain nested loops with running sums; no pairwise summation.
fn naive_gon(
    map: &FeatureMap,
    strips: &StripPartition,
    gamma: f64,
    beta: f64,
    eps: f64,
) -> Vec<f64> {
    let (n, c, h, w) = map.dims();
    let mut out = vec![0.0; n * c * h * w];
    for b in 0..n {
        let mut y0 = 0;
        for &sh in strips.heights() {
            let count = (c * sh * w) as f64;
            let mut sum = 0.0;
            for ch in 0..c {
                for y in y0..y0 + sh {
                    for x in 0..w {
                        sum += map.get(b, ch, y, x);
                    }
                }
            }
            let mu = sum / count;
            let mut var = 0.0;
            for ch in 0..c {
                for y in y0..y0 + sh {
                    for x in 0..w {
                        let d = map.get(b, ch, y, x) - mu;
                        var += d * d;
                    }
                }
            }
            let sigma = (var / count).sqrt();
            for ch in 0..c {
                for y in y0..y0 + sh {
                    for x in 0..w {
                        let idx = ((b * c + ch) * h + y) * w + x;
                        out[idx] = gamma * (map.get(b, ch, y, x) - mu) / (sigma + eps) + beta;
                    }
                }
            }
            y0 += sh;
        }
    }
    out
}

#[test]
fn criterion_6_gon_invariants() {
    let mut rng = fixtures::rng(606);
    let mut done = 0;
    while done < 20 {
        let map = random_feature_map(&mut rng, 2, 8, 16, 11);
        let (n, c, h, w) = map.dims();
        let strips = fixtures::random_partition(&mut rng, h);
        // A one-element strip is constant by construction and meaningless
        // to normalize; redraw those configurations.
        if strips.heights().iter().any(|&sh| c * sh * w < 2) {
            continue;
        }
        done += 1;

        // (a) identity parameters, epsilon 0: exact standardization.
        let exact = GonParams::identity(strips.strip_count(), 0.0);
        let out = gon_forward(&map, &strips, &exact).unwrap();
        for batch in 0..n {
            let stats = gon_stats(&out, &strips, batch).unwrap();
            for (mu, sigma) in stats.mu.iter().zip(&stats.sigma) {
                assert!(mu.abs() <= 1e-6, "mean {mu}");
                assert!((sigma - 1.0).abs() <= 1e-5, "std {sigma}");
            }
        }

        // (b) per-strip affine input invariance.
        let scales: Vec<f64> = (0..strips.strip_count())
            .map(|_| rng.gen_range(0.5..3.0))
            .collect();
        let offsets: Vec<f64> = (0..strips.strip_count())
            .map(|_| rng.gen_range(-2.0..2.0))
            .collect();
        let mut strip_of_row = Vec::with_capacity(h);
        for (s, &sh) in strips.heights().iter().enumerate() {
            strip_of_row.extend(std::iter::repeat_n(s, sh));
        }
        let mut moved = Vec::with_capacity(n * c * h * w);
        for b in 0..n {
            for ch in 0..c {
                for (y, &s) in strip_of_row.iter().enumerate() {
                    for x in 0..w {
                        moved.push(scales[s] * map.get(b, ch, y, x) + offsets[s]);
                    }
                }
            }
        }
        let moved = FeatureMap::new(n, c, h, w, moved).unwrap();
        let out_moved = gon_forward(&moved, &strips, &exact).unwrap();
        let worst = out
            .values()
            .iter()
            .zip(out_moved.values())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        assert!(worst <= 1e-6, "affine invariance drift {worst}");

        // (c) naive triple-loop oracle, 1e-9 relative.
        let gamma = rng.gen_range(0.5..2.0);
        let beta = rng.gen_range(-1.0..1.0);
        let pairs: Vec<(f64, f64)> =
            (0..strips.strip_count()).map(|_| (gamma, beta)).collect();
        let params = GonParams::scalar(&pairs, DEFAULT_EPSILON).unwrap();
        let got = gon_forward(&map, &strips, &params).unwrap();
        let want = naive_gon(&map, &strips, gamma, beta, DEFAULT_EPSILON);
        for (g, w) in got.values().iter().zip(&want) {
            let tol = 1e-9 * g.abs().max(w.abs()).max(1.0);
            assert!((g - w).abs() <= tol, "{g} vs {w}");
        }
    }
    println!("ACCEPTANCE criterion 6 (gon invariants): PASS");
}

fn naive_pair_scores(
    probes: &[Embedding],
    gallery: &[Embedding],
    metric: DistanceMetric,
) -> Option<(f64, f64)> {
    let dist = |a: &[f64], b: &[f64]| -> f64 {
        match metric {
            DistanceMetric::Euclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            DistanceMetric::Cosine => {
                let dot: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
                let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
                if na == 0.0 || nb == 0.0 {
                    1.0
                } else {
                    1.0 - dot / (na * nb)
                }
            }
        }
    };
    let mut hits = 0usize;
    let mut ap_sum = 0.0;
    let mut scored = 0usize;
    for probe in probes {
        if !gallery.iter().any(|g| g.subject_id == probe.subject_id) {
            continue;
        }
        scored += 1;
        let mut ranked: Vec<(f64, usize)> = gallery
            .iter()
            .enumerate()
            .map(|(i, g)| (dist(&probe.features, &g.features), i))
            .collect();
        ranked.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        if gallery[ranked[0].1].subject_id == probe.subject_id {
            hits += 1;
        }
        let mut positives = 0usize;
        let mut precision = 0.0;
        for (rank, (_, i)) in ranked.iter().enumerate() {
            if gallery[*i].subject_id == probe.subject_id {
                positives += 1;
                precision += positives as f64 / (rank + 1) as f64;
            }
        }
        ap_sum += precision / positives as f64;
    }
    if scored == 0 {
        return None;
    }
    Some((
        100.0 * hits as f64 / scored as f64,
        100.0 * ap_sum / scored as f64,
    ))
}

#[test]
fn criterion_7_evaluation_oracle() {
    let mut checked = 0;
    let mut seed = 0u64;
    while checked < 50 {
        seed += 1;
        let mut rng = fixtures::rng(7000 + seed);
        let dimension = rng.gen_range(2..=8);
        let mut all = fixtures::random_embeddings(&mut rng, 10, 200, dimension);
        if all.len() < 2 {
            continue;
        }
        let cut = rng.gen_range(1..all.len());
        let probes = all.split_off(cut);
        let gallery = all;
        let metric = if seed.is_multiple_of(2) {
            DistanceMetric::Euclidean
        } else {
            DistanceMetric::Cosine
        };
        let Some((want_r1, want_map)) = naive_pair_scores(&probes, &gallery, metric) else {
            continue;
        };
        checked += 1;
        let got_r1 = rank1(&probes, &gallery, metric).unwrap();
        let got_map = mean_average_precision(&probes, &gallery, metric).unwrap();
        assert!((got_r1 - want_r1).abs() <= 1e-9, "{got_r1} vs {want_r1}");
        assert!((got_map - want_map).abs() <= 1e-9, "{got_map} vs {want_map}");
    }

    // Hand-computed AP cases. Single positive at rank 2 of 3.
    let emb = |s: &str, x: f64| Embedding::new(s, None, vec![x]).unwrap();
    let gallery = vec![emb("a", 0.0), emb("b", 5.0), emb("c", 9.0)];
    let probe = vec![emb("b", 0.1)];
    assert_eq!(
        mean_average_precision(&probe, &gallery, DistanceMetric::Euclidean).unwrap(),
        50.0
    );

    // Positives at ranks 1 and 3: (1/1 + 2/3) / 2 = 83.33.
    let gallery = vec![emb("a", 0.0), emb("b", 1.0), emb("a", 2.0)];
    let probe = vec![emb("a", 0.0)];
    let map = mean_average_precision(&probe, &gallery, DistanceMetric::Euclidean).unwrap();
    assert!((map - 500.0 / 6.0).abs() <= 1e-12, "{map}");
    assert_eq!(format!("{map:.2}"), "83.33");

    // Identical embeddings per subject: perfect scores at every level.
    let mut all = Vec::new();
    for s in 0..5 {
        for level in 0..10u32 {
            all.push(
                Embedding::new(
                    format!("s{s}"),
                    Some(Covariate::Thickness(ThicknessLevel::new(level).unwrap())),
                    vec![s as f64, -1.0],
                )
                .unwrap(),
            );
        }
    }
    let report =
        evaluate_protocol(&EmbeddingSet::new(all).unwrap(), DistanceMetric::Euclidean)
            .unwrap();
    assert_eq!(report.per_level.len(), 9);
    for level in &report.per_level {
        assert_eq!(level.rank1, 100.0, "{}", level.level);
        assert_eq!(level.map, 100.0, "{}", level.level);
    }
    assert_eq!(report.overall_rank1, 100.0);
    assert_eq!(report.overall_map, 100.0);

    println!("ACCEPTANCE criterion 7 (evaluation oracle): PASS");
}

struct CliRun {
    stdout: Vec<u8>,
    files: BTreeMap<String, Vec<u8>>,
}

/// Runs the binary in `dir`, asserting success, and snapshots stdout plus
/// the named output files.
fn run_cli(dir: &Path, args: &[&str], outputs: &[&str]) -> CliRun {
    let output: Output = Command::new(env!("CARGO_BIN_EXE_gaitkit"))
        .args(args)
        .current_dir(dir)
        .env_remove("GAITKIT_THREADS")
        .output()
        .expect("binary runs");
    assert!(
        output.status.success(),
        "gaitkit {args:?} failed: {}",
        String::from_utf8_lossy(&output.stderr)
    );
    let files = outputs
        .iter()
        .map(|name| {
            let bytes = std::fs::read(dir.join(name)).expect("output file exists");
            (name.to_string(), bytes)
        })
        .collect();
    CliRun {
        stdout: output.stdout,
        files,
    }
}

fn assert_identical(a: &CliRun, b: &CliRun, what: &str) {
    assert_eq!(a.stdout, b.stdout, "{what}: stdout differs");
    for (name, bytes) in &a.files {
        assert_eq!(
            Some(bytes.as_slice()),
            b.files.get(name).map(|v| v.as_slice()),
            "{what}: {name} differs"
        );
    }
}

#[test]
fn criterion_8_cli_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();

    // Shared inputs for every subcommand.
    let spec = walker_spec(8);
    gaitkit::io::write_walker_spec(&spec, &dir.join("walker.json")).unwrap();

    let mut rng = fixtures::rng(88);
    std::fs::create_dir(dir.join("udir")).unwrap();
    std::fs::create_dir(dir.join("cdir")).unwrap();
    for (i, subject) in ["ada", "mira", "odo"].iter().enumerate() {
        let unclothed = fixtures::random_silhouette(&mut rng, 32, 32, true);
        write_silhouette(&unclothed, &dir.join(format!("udir/{subject}.pgm"))).unwrap();
        let pixels = unclothed.width() * unclothed.height();
        let mask: Vec<bool> = (0..pixels).map(|_| rng.gen_bool(0.5)).collect();
        let clothed =
            Silhouette::new(unclothed.width(), unclothed.height(), mask).unwrap();
        write_silhouette(&clothed, &dir.join(format!("cdir/{subject}__coat{i}.pgm")))
            .unwrap();
        if i == 0 {
            write_silhouette(&unclothed, &dir.join("u.pgm")).unwrap();
            write_silhouette(&clothed, &dir.join("c.pgm")).unwrap();
        }
    }

    let set = fixtures::random_protocol_set(&mut rng, 6, 4, 0.05);
    write_embeddings(&set, &dir.join("emb.csv")).unwrap();

    let map = random_feature_map(&mut rng, 2, 4, 12, 7);
    gaitkit::io::write_feature_map(&map, &dir.join("t.ten")).unwrap();

    let synth_args = [
        "synth", "--spec", "walker.json", "-o", "walk.pose", "--rest-out", "rest.pose",
    ];
    run_cli(dir, &synth_args, &["walk.pose", "rest.pose"]);

    let subcommands: Vec<(&str, Vec<&str>, Vec<&str>)> = vec![
        ("synth", synth_args.to_vec(), vec!["walk.pose", "rest.pose"]),
        (
            "retarget",
            vec![
                "retarget", "--source", "walk.pose", "--source-rest", "rest.pose",
                "--target-rest", "rest.pose", "-o", "out.pose",
            ],
            vec!["out.pose"],
        ),
        (
            "validate",
            vec!["validate", "--a", "walk.pose", "--b", "walk.pose"],
            vec![],
        ),
        (
            "thickness single",
            vec!["thickness", "--unclothed", "u.pgm", "--clothed", "c.pgm"],
            vec![],
        ),
        (
            "thickness batch",
            vec![
                "thickness", "--unclothed-dir", "udir", "--clothed-dir", "cdir", "-o",
                "batch.csv",
            ],
            vec!["batch.csv"],
        ),
        (
            "evaluate",
            vec!["evaluate", "--embeddings", "emb.csv"],
            vec![],
        ),
        (
            "gon-check",
            vec!["gon-check", "--tensor", "t.ten", "--strips", "3"],
            vec![],
        ),
    ];

    for (name, args, outputs) in &subcommands {
        let first = run_cli(dir, args, outputs);
        let rerun = run_cli(dir, args, outputs);
        assert_identical(&first, &rerun, &format!("{name} rerun"));

        let mut one = vec!["--threads", "1"];
        one.extend(args.iter().copied());
        let mut eight = vec!["--threads", "8"];
        eight.extend(args.iter().copied());
        let t1 = run_cli(dir, &one, outputs);
        let t8 = run_cli(dir, &eight, outputs);
        assert_identical(&first, &t1, &format!("{name} threads 1"));
        assert_identical(&t1, &t8, &format!("{name} threads 8"));
    }
    println!("ACCEPTANCE criterion 8 (cli determinism): PASS");
}

fn write(path: &Path, text: &str) -> PathBuf {
    std::fs::write(path, text).unwrap();
    path.to_path_buf()
}

fn parse_failure(err: FormatError) -> (usize, FormatErrorKind) {
    match err {
        FormatError::Parse { line, kind, .. } => (line, kind),
        other => panic!("expected a line-located parse error, got {other:?}"),
    }
}

#[test]
fn criterion_9_format_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let dir = dir.path();

    // Write -> read -> write, second write byte-identical.
    let spec = walker_spec(9);
    let seq = synth_walker(&spec).unwrap();
    let a = dir.join("w1.pose");
    let b = dir.join("w2.pose");
    write_pose_sequence(&seq, &a).unwrap();
    write_pose_sequence(&read_pose_sequence(&a).unwrap(), &b).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let mut rng = fixtures::rng(99);
    let sil = fixtures::random_silhouette(&mut rng, 48, 48, true);
    let a = dir.join("s1.pgm");
    let b = dir.join("s2.pgm");
    write_silhouette(&sil, &a).unwrap();
    write_silhouette(&read_silhouette(&a).unwrap(), &b).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    let set = fixtures::random_protocol_set(&mut rng, 5, 3, 0.1);
    let a = dir.join("e1.csv");
    let b = dir.join("e2.csv");
    write_embeddings(&set, &a).unwrap();
    write_embeddings(&read_embeddings(&a).unwrap(), &b).unwrap();
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());

    // Malformed fixtures, each with its designated located error.
    let pose_header = "GAITKIT-POSE 1\nunits m\nrate 30.0\njoints 3\n\
joint root -1 -1\njoint mid 0 2\njoint tip 1 0\nframes 1\n";

    let err = read_pose_sequence(&write(
        &dir.join("magic.pose"),
        "NOT-A-POSE 1\nunits m\n",
    ))
    .unwrap_err();
    let (line, kind) = parse_failure(err);
    assert_eq!(line, 1);
    assert!(matches!(kind, FormatErrorKind::BadMagic { .. }));

    let err = read_pose_sequence(&write(
        &dir.join("version.pose"),
        "GAITKIT-POSE 2\nunits m\n",
    ))
    .unwrap_err();
    let (line, kind) = parse_failure(err);
    assert_eq!(line, 1);
    assert_eq!(
        kind,
        FormatErrorKind::VersionMismatch { supported: 1, found: 2 }
    );

    let err = read_pose_sequence(&write(
        &dir.join("units.pose"),
        "GAITKIT-POSE 1\nunits cm\nrate 30.0\njoints 1\njoint root -1 -1\nframes 1\n0.0 0.0 0.0\n",
    ))
    .unwrap_err();
    let (line, kind) = parse_failure(err);
    assert_eq!(line, 2);
    assert!(matches!(kind, FormatErrorKind::BadField { .. }));

    let err = read_pose_sequence(&write(
        &dir.join("count.pose"),
        &format!("{pose_header}0.0 0.0 0.0 1.0 0.0 0.0 1.0 1.0\n"),
    ))
    .unwrap_err();
    let (line, kind) = parse_failure(err);
    assert_eq!(line, 9);
    assert_eq!(kind, FormatErrorKind::WrongValueCount { expected: 9, got: 8 });

    let err = read_pose_sequence(&write(
        &dir.join("nan.pose"),
        &format!("{pose_header}0.0 0.0 0.0 nan 0.0 0.0 1.0 1.0 0.0\n"),
    ))
    .unwrap_err();
    let (line, kind) = parse_failure(err);
    assert_eq!(line, 9);
    assert!(matches!(kind, FormatErrorKind::NonFinite { .. }));

    let err = read_pose_sequence(&write(
        &dir.join("trunc.pose"),
        "GAITKIT-POSE 1\nunits m\nrate 30.0\njoints 3\njoint root -1 -1\n",
    ))
    .unwrap_err();
    let (_, kind) = parse_failure(err);
    assert!(matches!(kind, FormatErrorKind::Truncated { .. }));

    let err = read_pose_sequence(&write(
        &dir.join("trail.pose"),
        &format!("{pose_header}0.0 0.0 0.0 1.0 0.0 0.0 1.0 1.0 0.0\nextra\n"),
    ))
    .unwrap_err();
    let (line, kind) = parse_failure(err);
    assert_eq!(line, 10);
    assert_eq!(kind, FormatErrorKind::TrailingContent);

    // PGM errors locate by byte offset.
    let err = read_silhouette(&write(&dir.join("p2.pgm"), "P2\n2 2\n255\n0 0 0 0\n"))
        .unwrap_err();
    match err {
        FormatError::ParseAt { offset, kind, .. } => {
            assert_eq!(offset, 0);
            assert_eq!(kind, FormatErrorKind::UnsupportedPgm { found: "P2".to_string() });
        }
        other => panic!("expected byte-located error, got {other:?}"),
    }

    let short = b"P5\n2 2\n255\n\x00\x01".to_vec();
    let path = dir.join("short.pgm");
    std::fs::write(&path, &short).unwrap();
    let err = read_silhouette(&path).unwrap_err();
    match err {
        FormatError::ParseAt { offset, kind, .. } => {
            assert_eq!(offset, short.len());
            assert!(matches!(kind, FormatErrorKind::Truncated { .. }));
        }
        other => panic!("expected byte-located error, got {other:?}"),
    }

    let err = read_silhouette(&write(
        &dir.join("maxval.pgm"),
        "P5\n1 1\n65535\n\x00\x00",
    ))
    .unwrap_err();
    match err {
        FormatError::ParseAt { kind, .. } => {
            assert_eq!(kind, FormatErrorKind::BadMaxval { maxval: 65535 });
        }
        other => panic!("expected byte-located error, got {other:?}"),
    }

    // Embedding CSV errors carry 1-based line numbers.
    let err = read_embeddings(&write(
        &dir.join("header.csv"),
        "subject,covariate,d0\na,,1.0\n",
    ))
    .unwrap_err();
    let (line, kind) = parse_failure(err);
    assert_eq!(line, 1);
    assert!(matches!(kind, FormatErrorKind::BadField { .. }));

    let err = read_embeddings(&write(
        &dir.join("ragged.csv"),
        "subject_id,covariate,d0,d1\na,,1.0,2.0\nb,,3.0\n",
    ))
    .unwrap_err();
    let (line, kind) = parse_failure(err);
    assert_eq!(line, 3);
    assert!(matches!(kind, FormatErrorKind::WrongValueCount { .. }));

    let err = read_embeddings(&write(
        &dir.join("badcell.csv"),
        "subject_id,covariate,d0\na,,oops\n",
    ))
    .unwrap_err();
    let (line, kind) = parse_failure(err);
    assert_eq!(line, 2);
    assert!(matches!(kind, FormatErrorKind::BadField { .. }));

    let err = read_embeddings(&write(
        &dir.join("inf.csv"),
        "subject_id,covariate,d0\na,,inf\n",
    ))
    .unwrap_err();
    let (line, kind) = parse_failure(err);
    assert_eq!(line, 2);
    assert!(matches!(kind, FormatErrorKind::NonFinite { .. }));

    println!("ACCEPTANCE criterion 9 (format round trips): PASS");
}
