use isar_core::geometry::RadarPose;
use isar_core::imaging::{form_image, synthesize_point_scatterers, PhaseHistory, WaveformSpec};
use isar_core::noise::{add_noise, noise_variance, NoiseError, NoiseSpec, NO_NOISE_DB};
use isar_core::Vec3;
use proptest::prelude::*;

fn clean() -> PhaseHistory {
    let pose = RadarPose::from_ground(120.0, 30.0, 1000.0).unwrap();
    let pts = [(Vec3::new(0.5, 1.0, 0.2), 2.0), (Vec3::new(-1.5, 0.3, -0.4), 0.7)];
    synthesize_point_scatterers(&WaveformSpec::default(), &pose, &pts).unwrap()
}

fn diff_energy(a: &[num_complex::Complex64], b: &[num_complex::Complex64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (y - x).norm_sqr()).sum()
}

#[test]
fn noise_power_matches_formula() {
    let h = clean();
    for snr in [100.0, 40.0, 10.0, 0.0] {
        let mean_power = h.samples().iter().map(|z| z.norm_sqr()).sum::<f64>() / h.samples().len() as f64;
        let expected = 10f64.powf(-snr / 10.0) * mean_power * h.samples().len() as f64;
        assert!((noise_variance(mean_power, snr) * h.samples().len() as f64 - expected).abs() <= 1e-12 * expected);
        let measured: f64 = (0..100u64)
            .map(|s| diff_energy(h.samples(), add_noise(&h, &NoiseSpec::new(snr, s).unwrap()).unwrap().samples()))
            .sum::<f64>()
            / 100.0;
        assert!((measured / expected - 1.0).abs() < 0.02, "snr {snr}: ratio {}", measured / expected);
    }
}

#[test]
fn image_domain_snr_matches_request() {
    let h = clean();
    let clean_img = form_image(&h).unwrap();
    let signal: f64 = clean_img.pixels().iter().map(|z| z.norm_sqr()).sum();
    for snr in [100.0, 20.0] {
        let noise: f64 = (0..100u64)
            .map(|s| {
                let img = form_image(&add_noise(&h, &NoiseSpec::new(snr, s).unwrap()).unwrap()).unwrap();
                diff_energy(clean_img.pixels(), img.pixels())
            })
            .sum::<f64>()
            / 100.0;
        let measured = 10.0 * (signal / noise).log10();
        assert!((measured - snr).abs() < 0.1, "requested {snr}, measured {measured}");
    }
}

#[test]
fn sentinel_and_zero_signal() {
    let h = clean();
    assert_eq!(add_noise(&h, &NoiseSpec::new(NO_NOISE_DB, 1).unwrap()).unwrap(), h);
    let zero = PhaseHistory::zeros(WaveformSpec::default(), 1000.0);
    assert!(matches!(add_noise(&zero, &NoiseSpec::new(100.0, 1).unwrap()), Err(NoiseError::ZeroEnergy(_))));
    assert!(NoiseSpec::new(f64::NAN, 0).is_err());
    assert!(NoiseSpec::new(-1.0, 0).is_err());
    assert!(NoiseSpec::new(201.5, 0).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn distinct_seeds_give_distinct_noise(a in any::<u64>(), b in any::<u64>(), snr in 0.0..150.0f64) {
        prop_assume!(a != b);
        let h = clean();
        let x = add_noise(&h, &NoiseSpec::new(snr, a).unwrap()).unwrap();
        let y = add_noise(&h, &NoiseSpec::new(snr, b).unwrap()).unwrap();
        prop_assert!(x.samples().iter().zip(y.samples()).any(|(p, q)| p != q));
        let again = add_noise(&h, &NoiseSpec::new(snr, a).unwrap()).unwrap();
        prop_assert_eq!(x, again);
    }
}
