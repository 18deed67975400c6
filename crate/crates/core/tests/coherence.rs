use ndarray::Array2;
use proptest::prelude::*;
use tau_coherence::coherence::{
    jiang_diagnostics, tau_coherence_blockwise, tau_coherence_naive, v_statistic, BlockwiseScan,
    Mode,
};
use tau_coherence::format::{write_tcoh, MatrixSource, TcohFile};
use tau_coherence::sampler::SeededStream;
use tau_coherence::Error;

fn gaussian(n: usize, p: usize, seed: u64) -> Array2<f64> {
    let mut v = vec![0.0; n * p];
    SeededStream::new(seed, 0).fill_normal(0, &mut v);
    Array2::from_shape_vec((n, p), v).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn blockwise_matches_naive(
        n in 3usize..40,
        p in 3usize..30,
        tau_pick in 0usize..3,
        tb_frac in 0.0f64..1.0,
        seed in any::<u64>(),
    ) {
        let tau = [1, 2, 5][tau_pick];
        prop_assume!(tau < p);
        let tb = 1 + ((p - 1) as f64 * tb_frac) as usize;
        let x = gaussian(n, p, seed);
        let naive = tau_coherence_naive(x.view(), tau, &Mode::Centered).unwrap();
        let block = tau_coherence_blockwise(&x, tau, tb, &Mode::Centered).unwrap();
        prop_assert!((naive.l_n_tau - block.l_n_tau).abs() <= 1e-12);
        prop_assert_eq!(naive.argmax_pair, block.argmax_pair);
        prop_assert_eq!(naive.pairs_scanned, block.pairs_scanned);
    }

    #[test]
    fn scale_and_shift_leave_l_unchanged(
        seed in any::<u64>(),
        scales in proptest::collection::vec(0.01f64..100.0, 12),
        shifts in proptest::collection::vec(-50.0f64..50.0, 12),
    ) {
        let x = gaussian(25, 12, seed);
        let mut y = x.clone();
        for (j, mut col) in y.columns_mut().into_iter().enumerate() {
            col.mapv_inplace(|v| scales[j] * v + shifts[j]);
        }
        let a = tau_coherence_blockwise(&x, 2, 5, &Mode::Centered).unwrap();
        let b = tau_coherence_blockwise(&y, 2, 5, &Mode::Centered).unwrap();
        prop_assert!((a.l_n_tau - b.l_n_tau).abs() <= 1e-12);
        prop_assert_eq!(a.argmax_pair, b.argmax_pair);
    }

    #[test]
    fn jiang_bound_holds(seed in any::<u64>(), shift in -0.5f64..0.5, scale in 0.5f64..2.0) {
        let x = gaussian(30, 10, seed).mapv(|v| scale * v + shift);
        let r = jiang_diagnostics(x.view(), 2).unwrap();
        prop_assert!(r.lhs <= r.rhs);
        prop_assert!(r.delta_n <= r.lhs);
    }
}

#[test]
fn known_mean_scales_with_the_mean() {
    let x = gaussian(40, 9, 3).mapv(|v| v + 2.0);
    let mu = vec![2.0; 9];
    let a = tau_coherence_blockwise(&x, 1, 4, &Mode::KnownMean(mu)).unwrap();
    let y = x.mapv(|v| 3.0 * v);
    let b = tau_coherence_blockwise(&y, 1, 4, &Mode::KnownMean(vec![6.0; 9])).unwrap();
    assert!((a.l_n_tau - b.l_n_tau).abs() <= 1e-12);
    assert_eq!(a.argmax_pair, b.argmax_pair);
    let naive = tau_coherence_naive(x.view(), 1, &Mode::KnownMean(vec![2.0; 9])).unwrap();
    assert!((naive.l_n_tau - a.l_n_tau).abs() <= 1e-12);
}

#[test]
fn exact_affine_dependence_gives_one() {
    let mut x = gaussian(20, 8, 11);
    let src = x.column(0).to_owned();
    x.column_mut(6).assign(&src.mapv(|v| -4.0 * v + 1.0));
    let r = tau_coherence_blockwise(&x, 3, 3, &Mode::Centered).unwrap();
    assert!((1.0 - r.l_n_tau).abs() <= 1e-12);
    assert_eq!(r.argmax_pair, (0, 6));
    let y = gaussian(20, 8, 12);
    assert!(tau_coherence_blockwise(&y, 3, 3, &Mode::Centered).unwrap().l_n_tau < 1.0);
}

#[test]
fn bit_identical_across_thread_counts() {
    let x = gaussian(50, 700, 21);
    let run = |t| {
        BlockwiseScan::new(3, 700)
            .threads(Some(t))
            .run(&x)
            .unwrap()
    };
    let (a, b) = (run(1), run(4));
    assert_eq!(a.value.to_bits(), b.value.to_bits());
    assert_eq!(a.pair, b.pair);
}

#[test]
fn degenerate_column_is_an_error() {
    let mut x = gaussian(10, 6, 1);
    x.column_mut(4).fill(3.0);
    assert!(matches!(
        tau_coherence_blockwise(&x, 1, 2, &Mode::Centered),
        Err(Error::DegenerateColumn { column: 4 })
    ));
    assert!(matches!(
        tau_coherence_naive(x.view(), 1, &Mode::Centered),
        Err(Error::DegenerateColumn { column: 4 })
    ));
}

#[test]
fn file_sources_agree_with_memory() {
    let x = gaussian(33, 41, 8);
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("x.tcoh");
    write_tcoh(&path, x.view()).unwrap();
    let mem = tau_coherence_blockwise(&x, 2, 7, &Mode::Centered).unwrap();
    let file = tau_coherence_blockwise(&TcohFile::open(&path).unwrap(), 2, 7, &Mode::Centered).unwrap();
    assert_eq!(mem, file);
    let auto = MatrixSource::open(&path, 0).unwrap();
    assert_eq!(v_statistic(&auto, 2, 7).unwrap(), v_statistic(&x, 2, 7).unwrap());
}

#[test]
fn v_statistic_matches_direct_loop() {
    let x = gaussian(15, 12, 4).mapv(|v| v + 0.3);
    let mut best: f64 = 0.0;
    for k in 0..12 {
        for j in k + 2..12 {
            let dot: f64 = x.column(k).iter().zip(x.column(j)).map(|(a, b)| a * b).sum();
            best = best.max(dot.abs());
        }
    }
    assert!((v_statistic(&x, 2, 5).unwrap() - best).abs() <= 1e-12 * best);
}
