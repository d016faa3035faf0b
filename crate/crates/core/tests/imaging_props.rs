use std::f64::consts::TAU;

use isar_core::imaging::{form_image, PhaseHistory, WaveformSpec, IMAGE_SIZE};
use isar_core::noise::{add_noise, NoiseSpec};
use num_complex::Complex64;
use proptest::prelude::*;

const N: usize = IMAGE_SIZE;

fn history_strategy() -> impl Strategy<Value = PhaseHistory> {
    (prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), N * N), 0.0..20_000.0f64).prop_map(|(v, reference)| {
        let samples = v.into_iter().map(|(re, im)| Complex64::new(re, im)).collect();
        PhaseHistory::with_reference(WaveformSpec::default(), reference, samples).unwrap()
    })
}

fn complex() -> impl Strategy<Value = Complex64> {
    (-3.0..3.0f64, -3.0..3.0f64).prop_map(|(re, im)| Complex64::new(re, im))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn imaging_is_linear(h1 in history_strategy(), v in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64), N * N), a in complex(), b in complex()) {
        let samples = v.into_iter().map(|(re, im)| Complex64::new(re, im)).collect();
        let h2 = PhaseHistory::with_reference(*h1.waveform(), h1.reference_range_m(), samples).unwrap();
        let combined = form_image(&h1.combine(a, &h2, b)).unwrap();
        let (i1, i2) = (form_image(&h1).unwrap(), form_image(&h2).unwrap());
        for ((z, x), y) in combined.pixels().iter().zip(i1.pixels()).zip(i2.pixels()) {
            prop_assert!((z - (a * x + b * y)).norm() <= 1e-9);
        }
    }

    #[test]
    fn energy_is_conserved(h in history_strategy()) {
        let img = form_image(&h).unwrap();
        let e_img: f64 = img.pixels().iter().map(|z| z.norm_sqr()).sum();
        let e_ph: f64 = h.samples().iter().map(|z| z.norm_sqr()).sum();
        prop_assert!((e_img - e_ph).abs() <= 1e-9 * e_ph);
    }

    /// A phase ramp exp(+i2πkm/54) over frequency steps moves the image up
    /// by m rows (circularly), leaving columns alone.
    #[test]
    fn phase_ramp_shifts_rows(h in history_strategy(), m in 0usize..N) {
        let ramped: Vec<Complex64> = h
            .samples()
            .iter()
            .enumerate()
            .map(|(i, z)| z * Complex64::from_polar(1.0, TAU * ((i / N) * m) as f64 / N as f64))
            .collect();
        let shifted = PhaseHistory::with_reference(*h.waveform(), h.reference_range_m(), ramped).unwrap();
        let (a, b) = (form_image(&h).unwrap(), form_image(&shifted).unwrap());
        for r in 0..N {
            for c in 0..N {
                prop_assert!((b.get(r, c) - a.get((r + m) % N, c)).norm() <= 1e-9);
            }
        }
    }

    #[test]
    fn imaging_is_deterministic(h in history_strategy(), seed in any::<u64>()) {
        let noisy = |s| add_noise(&h, &NoiseSpec::new(30.0, s).unwrap()).unwrap();
        let a = form_image(&noisy(seed)).unwrap();
        let b = form_image(&noisy(seed)).unwrap();
        let bits = |img: &isar_core::imaging::ComplexImage| -> Vec<(u64, u64)> {
            img.pixels().iter().map(|z| (z.re.to_bits(), z.im.to_bits())).collect()
        };
        prop_assert_eq!(bits(&a), bits(&b));
    }
}

#[test]
fn single_peak_moves_with_ramp() {
    let wf = WaveformSpec::default();
    let flat = PhaseHistory::with_reference(wf, 0.0, vec![Complex64::new(1.0, 0.0); N * N]).unwrap();
    assert_eq!(form_image(&flat).unwrap().peak().0, 27);
    for m in [1usize, 5, 20] {
        let ramp: Vec<Complex64> =
            (0..N * N).map(|i| Complex64::from_polar(1.0, TAU * ((i / N) * m) as f64 / N as f64)).collect();
        let img = form_image(&PhaseHistory::with_reference(wf, 0.0, ramp).unwrap()).unwrap();
        let (row, col, _) = img.peak();
        assert_eq!((row, col), ((27 + N - m) % N, 27));
    }
}
