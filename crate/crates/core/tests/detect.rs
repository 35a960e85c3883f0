// SPDX-License-Identifier: MIT OR Apache-2.0

use drecusum::cusum::{compute_cusum, detect_slope_changes, SegmentationConfig};
use drecusum::detect::{
    detect_multi, detect_single, ensemble_detect, online_detect, DetectOptions, EnsembleConfig,
    OnlineConfig,
};
use drecusum::distributions::{GaussianSpec, PiecewiseGaussian};
use drecusum::dre::{DreConfig, MlpConfig};
use drecusum::eval::{generate_with_process, Preset};
use drecusum::ratio::RatioSource;
use drecusum::{RandomSource, SplitConfig, TimeSeries};
use ndarray::{Array1, Array2};
use proptest::prelude::*;

fn preset(p: Preset, seed: u64) -> (TimeSeries<f64>, PiecewiseGaussian<f64>) {
    let v = &p.variants()[0];
    generate_with_process(&v.spec, &RandomSource::new(seed)).unwrap()
}

fn small_mlp() -> DreConfig {
    DreConfig::Mlp(MlpConfig {
        hidden_widths: vec![16, 16],
        iterations: 200,
        ..MlpConfig::default()
    })
}

fn near(found: &[usize], truth: &[usize], tol: usize) -> bool {
    found.len() == truth.len() && found.iter().zip(truth).all(|(a, b)| a.abs_diff(*b) <= tol)
}

#[test]
fn oracle_single_change_is_located() {
    let opts = DetectOptions::default();
    for seed in 1..=5 {
        let (s, p) = preset(Preset::Fig2b, seed);
        let source = RatioSource::Oracle(p);
        for t in [100, 250, 400] {
            let r = detect_single(
                &s,
                &SplitConfig::new(t),
                &source,
                &opts,
                &RandomSource::new(seed),
            )
            .unwrap();
            assert!(
                near(&r.indices(), &[150], 10),
                "seed {seed} split {t}: {:?}",
                r.indices()
            );
        }
    }
}

#[test]
fn oracle_two_changes_are_located() {
    let opts = DetectOptions::default();
    for seed in 1..=5 {
        let (s, p) = preset(Preset::Fig3b, seed);
        let r = detect_multi(
            &s,
            &SplitConfig::new(300),
            &RatioSource::Oracle(p),
            &opts,
            &RandomSource::new(seed),
        )
        .unwrap();
        assert!(
            near(&r.indices(), &[150, 450], 15),
            "seed {seed}: {:?}",
            r.indices()
        );
    }
}

#[test]
fn oracle_null_has_no_changes() {
    let p = PiecewiseGaussian::stationary(400, GaussianSpec::<f64>::standard(3).unwrap()).unwrap();
    let s = p.sample(&mut RandomSource::new(9).rng());
    let source = RatioSource::Oracle(p);
    let opts = DetectOptions::default();
    let rng = RandomSource::new(1);
    let single = detect_single(&s, &SplitConfig::new(200), &source, &opts, &rng).unwrap();
    let multi = detect_multi(&s, &SplitConfig::new(200), &source, &opts, &rng).unwrap();
    assert!(single.change_points.is_empty());
    assert!(multi.change_points.is_empty());
    assert!(single.cusum[0].values().iter().all(|v| *v == 0.0));
}

#[test]
fn learned_null_has_no_verified_change() {
    let p = PiecewiseGaussian::stationary(300, GaussianSpec::<f32>::standard(2).unwrap()).unwrap();
    let s = p.sample(&mut RandomSource::new(4).rng());
    let r = detect_single(
        &s,
        &SplitConfig::new(150),
        &RatioSource::Learned(small_mlp()),
        &DetectOptions::default(),
        &RandomSource::new(2),
    )
    .unwrap();
    assert!(r.change_points.is_empty(), "{:?}", r.indices());
}

#[test]
fn single_and_multi_agree_on_one_change() {
    let opts = DetectOptions::default();
    for seed in 1..=3 {
        let (s, p) = preset(Preset::Fig2b, seed);
        let source = RatioSource::Oracle(p);
        let rng = RandomSource::new(seed);
        let split = SplitConfig::new(250);
        let a = detect_single(&s, &split, &source, &opts, &rng).unwrap();
        let b = detect_multi(&s, &split, &source, &opts, &rng).unwrap();
        // Single reports the refined argmax, multi the fitted vertex.
        let gap = opts.segmentation.min_gap_for(s.n());
        assert!(
            near(&a.indices(), &b.indices(), gap),
            "{:?} {:?}",
            a.indices(),
            b.indices()
        );
    }
}

#[test]
fn ensemble_of_identical_splits_matches_multi() {
    let (s, p) = preset(Preset::Fig3b, 2);
    let source = RatioSource::Oracle(p);
    let opts = DetectOptions::default();
    let rng = RandomSource::new(3);
    let multi = detect_multi(&s, &SplitConfig::new(300), &source, &opts, &rng).unwrap();
    let cfg = EnsembleConfig {
        split_points: Some(vec![300, 300, 300]),
        ..EnsembleConfig::default()
    };
    let ens = ensemble_detect(&s, &cfg, &source, &opts, &rng).unwrap();
    assert_eq!(ens.indices(), multi.indices());
    assert_eq!(ens.t_splits, vec![300, 300, 300]);
}

#[test]
fn single_window_online_matches_multi() {
    let (s, p) = preset(Preset::Fig3b, 5);
    let source = RatioSource::Oracle(p);
    let opts = DetectOptions::default();
    let rng = RandomSource::new(1);
    let multi = detect_multi(&s, &SplitConfig::midpoint(s.n()), &source, &opts, &rng).unwrap();
    let cfg = OnlineConfig {
        stride: Some(s.n()),
        ..OnlineConfig::new(s.n())
    };
    let feed = s.rows().map(|r| r.to_owned());
    let out = online_detect(feed, &cfg, &source, &opts, &rng).unwrap();
    let online: Vec<usize> = out.iter().flat_map(|r| r.indices()).collect();
    assert_eq!(online, multi.indices());
    assert_eq!(out[0].window, Some((1, s.n())));
}

#[test]
fn change_on_a_window_boundary_is_reported_once() {
    // Windows of 200 every 100: the change at 200 sits at the edge of the
    // first window and in the middle of the second.
    let seg = vec![
        GaussianSpec::<f64>::identity(Array1::zeros(5)).unwrap(),
        GaussianSpec::identity(Array1::from_elem(5, 1.5)).unwrap(),
    ];
    let p = PiecewiseGaussian::new(600, vec![200], seg).unwrap();
    let s = p.sample(&mut RandomSource::new(8).rng());
    let cfg = OnlineConfig {
        stride: Some(100),
        ..OnlineConfig::new(200)
    };
    let out = online_detect(
        s.rows().map(|r| r.to_owned()),
        &cfg,
        &RatioSource::Oracle(p),
        &DetectOptions::default(),
        &RandomSource::new(1),
    )
    .unwrap();
    let all: Vec<usize> = out.iter().flat_map(|r| r.indices()).collect();
    assert!(near(&all, &[200], 10), "{all:?}");
}

#[test]
fn constant_stream_emits_nothing() {
    let rows = Array2::<f32>::from_elem((400, 3), 0.7);
    let cfg = OnlineConfig {
        stride: Some(100),
        ..OnlineConfig::new(200)
    };
    let out = online_detect(
        rows.rows().into_iter().map(|r| r.to_owned()),
        &cfg,
        &RatioSource::Learned(small_mlp()),
        &DetectOptions::default(),
        &RandomSource::new(1),
    )
    .unwrap();
    assert!(out.is_empty());
}

#[test]
fn learned_detection_is_deterministic() {
    let (s, _) = preset(Preset::Fig2b, 3);
    let s = s.cast::<f32>();
    let run = || {
        detect_single(
            &s,
            &SplitConfig::new(250),
            &RatioSource::Learned(small_mlp()),
            &DetectOptions::default(),
            &RandomSource::new(11),
        )
        .unwrap()
    };
    let (a, b) = (run(), run());
    assert_eq!(a.indices(), b.indices());
    let bits = |r: &drecusum::detect::DetectionResult| -> Vec<u64> {
        r.cusum[0].values().iter().map(|v| v.to_bits()).collect()
    };
    assert_eq!(bits(&a), bits(&b));
}

#[test]
fn noiseless_breakpoints_are_exact() {
    let mut r = vec![0.5; 150];
    r.extend(vec![-1.0; 250]);
    r.extend(vec![2.0; 200]);
    let s = compute_cusum(&r, 300).unwrap();
    let cs = detect_slope_changes(&s, &SegmentationConfig::default()).unwrap();
    let idx: Vec<usize> = cs.iter().map(|c| c.index).collect();
    assert_eq!(idx, vec![150, 400]);
    assert_eq!(cs[0].slope_before, 0.5);
    assert_eq!(cs[0].slope_after, -1.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn cusum_is_prefix_sum_of_clipped_ratios(
        r in proptest::collection::vec(-30.0f64..30.0, 20..80),
        split in 1usize..19,
    ) {
        let s = compute_cusum(&r, split).unwrap();
        let mut acc = 0.0;
        for (t, x) in r.iter().enumerate() {
            acc += x.clamp(-10.0, 10.0);
            prop_assert!((s.at(t + 1) - acc).abs() <= 1e-9 * (1.0 + acc.abs()));
        }
    }

    #[test]
    fn one_slope_change_is_found_exactly(k in 60usize..340, a in -3.0f64..3.0, jump in 0.5f64..3.0) {
        let mut r = vec![a; k];
        r.extend(vec![a + jump; 400 - k]);
        let s = compute_cusum(&r, 200).unwrap();
        let cs = detect_slope_changes(&s, &SegmentationConfig::default()).unwrap();
        prop_assert_eq!(cs.len(), 1);
        prop_assert_eq!(cs[0].index, k);
    }
}
