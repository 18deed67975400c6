use tau_coherence::gof::{density_distances, ecdf_ks, gof_report, Kde};
use tau_coherence::limitlaw::{limit_quantile, LimitLaw};
use tau_coherence::sampler::SeededStream;

fn limit_draws(count: usize, seed: u64) -> Vec<f64> {
    let s = SeededStream::new(seed, 0);
    (0..count as u64)
        .map(|i| limit_quantile(s.uniform_at(i).max(f64::MIN_POSITIVE)).unwrap())
        .collect()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    0.5 * (v[(v.len() - 1) / 2] + v[v.len() / 2])
}

#[test]
fn limit_sample_is_close_in_every_distance() {
    let x = limit_draws(10_000, 1);
    let r = gof_report(&x, None, 4096).unwrap();
    assert!(r.d_ks <= 0.0136, "d_ks {}", r.d_ks);
    assert!(r.d_tv <= 0.05, "d_tv {}", r.d_tv);
    assert!(r.d_l2 >= 0.0 && r.d_l2 < 1e-3);
    assert!(r.warning.is_none());
}

#[test]
fn median_ks_decreases_with_sample_size() {
    let medians: Vec<f64> = [1_000, 10_000, 100_000]
        .iter()
        .map(|&r| median((0..20).map(|k| ecdf_ks(&limit_draws(r, 100 + k)).unwrap()).collect()))
        .collect();
    assert!(medians[0] > medians[1] && medians[1] > medians[2], "{medians:?}");
}

#[test]
fn total_variation_is_symmetric_and_bounded() {
    let a = Kde::new(&limit_draws(500, 3), None).unwrap();
    let b = Kde::new(&limit_draws(500, 4).iter().map(|v| v + 1.5).collect::<Vec<_>>(), None).unwrap();
    let ab = density_distances(&a, &b, 4096);
    let ba = density_distances(&b, &a, 4096);
    assert!((ab.d_tv - ba.d_tv).abs() < 1e-12);
    assert!((ab.d_l2 - ba.d_l2).abs() < 1e-12);
    assert!(ab.d_tv > 0.0 && ab.d_tv <= 1.0);
    let same = density_distances(&LimitLaw, &LimitLaw, 4096);
    assert!(same.d_tv < 1e-8 && same.d_l2 < 1e-8);
}
