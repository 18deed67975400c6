use tau_coherence::model::derive_schedule;
use tau_coherence::sampler::{build_window, CoefficientSource};
use tau_coherence::study::{
    estimate_tail_probability, read_samples, replication_seed, run_replication, run_study,
    samples_path, window_seed, StudyConfig, WindowDescriptor,
};
use tau_coherence::Error;

fn config(reps: usize, threads: usize, dir: &std::path::Path) -> StudyConfig {
    let mut c = StudyConfig::new(vec![200, 260], reps, 0x5eed);
    c.threads = Some(threads);
    c.out_dir = Some(dir.to_path_buf());
    c
}

#[test]
fn csv_identical_across_thread_counts() {
    let (d1, d4) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let a = run_study(&config(4, 1, d1.path())).unwrap();
    let b = run_study(&config(4, 4, d4.path())).unwrap();
    for n in [200, 260] {
        let fa = std::fs::read(samples_path(d1.path(), n)).unwrap();
        let fb = std::fs::read(samples_path(d4.path(), n)).unwrap();
        assert_eq!(fa, fb);
    }
    assert_eq!(a[0].samples, b[0].samples);
    assert_eq!(a[0].samples.len(), 4);
}

#[test]
fn growing_reps_keeps_earlier_samples() {
    let dir = tempfile::tempdir().unwrap();
    let small = run_study(&config(3, 1, dir.path())).unwrap();
    let large = run_study(&config(6, 1, dir.path())).unwrap();
    assert_eq!(small[1].samples[..], large[1].samples[..3]);
}

#[test]
fn samples_reproduce_from_the_recorded_seeds() {
    let dir = tempfile::tempdir().unwrap();
    let sets = run_study(&config(2, 1, dir.path())).unwrap();
    let set = &sets[0];
    let WindowDescriptor::Fixed { seed, window } = &set.window else {
        panic!("window should be fixed by default");
    };
    assert_eq!(*seed, window_seed(0x5eed, 200, None));
    let rebuilt = build_window(set.params.tau, set.params.k, set.params.eps, CoefficientSource::Seed(*seed)).unwrap();
    assert_eq!(&rebuilt, window);
    for (r, &t) in set.samples.iter().enumerate() {
        let seed = replication_seed(0x5eed, 200, r);
        assert_eq!(set.seeds[r], seed);
        assert_eq!(run_replication(&set.params, window, seed, set.block_size).unwrap(), t);
    }
    let file = read_samples(&samples_path(dir.path(), 200)).unwrap();
    assert_eq!(file.samples, set.samples);
    assert_eq!(file.header["seeds"][1], set.seeds[1]);
}

#[test]
fn block_size_changes_samples_only_by_rounding() {
    let params = derive_schedule(200).unwrap();
    let window = build_window(params.tau, params.k, params.eps, CoefficientSource::Seed(1)).unwrap();
    let full = run_replication(&params, &window, 9, params.p).unwrap();
    for tb in [1, 13, 50] {
        let t = run_replication(&params, &window, 9, tb).unwrap();
        assert!((t - full).abs() <= 1e-12, "Tb={tb}: {t} vs {full}");
    }
}

#[test]
fn redrawn_windows_differ_per_replication() {
    let mut c = StudyConfig::new(vec![200], 2, 3);
    c.redraw_window = true;
    let set = &run_study(&c).unwrap()[0];
    assert_eq!(set.window, WindowDescriptor::Redrawn);
    assert_ne!(window_seed(3, 200, Some(0)), window_seed(3, 200, Some(1)));
}

#[test]
fn failing_replications_are_recorded() {
    let mut c = StudyConfig::new(vec![200], 2, 3);
    c.block_size = Some(10_000);
    assert!(matches!(run_study(&c), Err(Error::EmptySample)));
}

#[test]
fn tail_probability_matches_leading_term_at_low_threshold() {
    // a_n(-8) sits at about 2.5 standard deviations of <X, Y>.
    let t = estimate_tail_probability(100, 50, 0.0, -8.0, 100_000, 17).unwrap();
    let ratio = t.ratio.unwrap();
    assert!((0.5..=2.0).contains(&ratio), "ratio {ratio}");
    assert!(t.half_width < t.estimate);
}

#[test]
fn scaled_tail_probability_decreases_for_correlated_pairs() {
    // rho = 0.5 sqrt(ln p / n): p times the pair probability should vanish.
    let scaled: Vec<f64> = [200, 400, 800]
        .iter()
        .map(|&n| {
            let p = derive_schedule(n).unwrap().p;
            let rho = 0.5 * ((p as f64).ln() / n as f64).sqrt();
            let t = estimate_tail_probability(n, p, rho, 0.0, 1_000_000, 23).unwrap();
            assert!(t.reference.is_none());
            t.estimate * p as f64
        })
        .collect();
    assert!(scaled[0] > scaled[1] && scaled[1] > scaled[2], "{scaled:?}");
}
