//! Silhouette thickness checked against a frozen brute-force oracle: walk
//! every pixel pair, count XOR mismatches, divide by the unclothed
//! foreground. The library must agree exactly on integer counts.

use gaitkit::fixtures::{self, random_silhouette};
use gaitkit::{
    non_overlap_area, relative_thickness, thickness_level, Silhouette, ThicknessError,
    THICKNESS_BIN_WIDTH,
};
use proptest::prelude::*;
use rand::Rng;

fn oracle_xor(a: &Silhouette, b: &Silhouette) -> usize {
    let mut count = 0;
    for y in 0..a.height() {
        for x in 0..a.width() {
            if a.get(x, y) != b.get(x, y) {
                count += 1;
            }
        }
    }
    count
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    /// XOR area and the derived ratio match the pixel-walk oracle on
    /// random mask pairs up to 64x64.
    #[test]
    fn xor_area_matches_brute_force(seed in any::<u64>()) {
        let mut rng = fixtures::rng(seed);
        let unclothed = random_silhouette(&mut rng, 64, 64, true);
        let pixels = unclothed.width() * unclothed.height();
        let mask: Vec<bool> = (0..pixels).map(|_| rng.gen_bool(0.5)).collect();
        let clothed = Silhouette::new(unclothed.width(), unclothed.height(), mask).unwrap();

        let want = oracle_xor(&unclothed, &clothed);
        prop_assert_eq!(non_overlap_area(&unclothed, &clothed).unwrap(), want);

        let t = relative_thickness(&unclothed, &clothed).unwrap();
        let naive = want as f64 / unclothed.foreground_count() as f64;
        prop_assert_eq!(t, naive);
    }
}

#[test]
fn mismatched_shapes_are_rejected() {
    let a = Silhouette::new(4, 4, vec![true; 16]).unwrap();
    let b = Silhouette::new(4, 5, vec![true; 20]).unwrap();
    assert_eq!(
        non_overlap_area(&a, &b),
        Err(ThicknessError::DimensionMismatch {
            aw: 4,
            ah: 4,
            bw: 4,
            bh: 5,
        })
    );
}

#[test]
fn empty_unclothed_foreground_is_an_error() {
    let a = Silhouette::new(3, 3, vec![false; 9]).unwrap();
    let b = Silhouette::new(3, 3, vec![true; 9]).unwrap();
    assert_eq!(
        relative_thickness(&a, &b),
        Err(ThicknessError::EmptyUnclothed)
    );
}

#[test]
fn bin_edges_round_half_open() {
    // Lower edges belong to the bin above; everything past the top edge
    // clamps into the last bin.
    let cases = [
        (0.0, 0),
        (0.1499999, 0),
        (0.15, 1),
        (0.30, 2),
        (1.34, 8),
        (1.35, 9),
        (10.0, 9),
    ];
    for (t, want) in cases {
        assert_eq!(
            thickness_level(t).unwrap().level(),
            want,
            "ratio {t} should land in THK{want}"
        );
    }
    assert_eq!(THICKNESS_BIN_WIDTH, 0.15);
}

#[test]
fn negative_and_non_finite_ratios_are_rejected() {
    assert!(matches!(
        thickness_level(-0.01),
        Err(ThicknessError::BadRatio { .. })
    ));
    assert!(matches!(
        thickness_level(f64::NAN),
        Err(ThicknessError::BadRatio { .. })
    ));
}
