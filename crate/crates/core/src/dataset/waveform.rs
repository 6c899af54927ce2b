//! Breiman's three-class waveform generator.
//!
//! Attributes are indexed `m = 1..=21`. The three base waves are triangles of
//! height 6 and half-width 6:
//!
//! ```text
//! h1(m) = max(6 - |m - 11|, 0)      peak at m = 11
//! h2(m) = h1(m - 4)                 peak at m = 15
//! h3(m) = h1(m + 4)                 peak at m = 7
//! ```
//!
//! A sample of class 0 is `u*h1 + (1-u)*h2 + e`, class 1 is `u*h1 + (1-u)*h3 + e`
//! and class 2 is `u*h2 + (1-u)*h3 + e`, with `u ~ U(0, 1)` drawn once per
//! sample and `e` independent `N(0, 1)` noise on every attribute. Classes are
//! drawn uniformly.

use ndarray::Array2;
use rand::Rng as _;
use rand_distr::{Distribution, StandardNormal};

use super::{LabeledDataset, Result};
use crate::rng;
use crate::Scalar;

pub const WAVEFORM_FEATURES: usize = 21;

const PAIRS: [(usize, usize); 3] = [(0, 1), (0, 2), (1, 2)];

/// Value of base wave `wave` (0, 1 or 2) at attribute `m` in `1..=21`.
pub fn waveform_base(wave: usize, m: usize) -> f64 {
    let h1 = |m: i64| (6 - (m - 11).abs()).max(0) as f64;
    let m = m as i64;
    match wave {
        0 => h1(m),
        1 => h1(m - 4),
        2 => h1(m + 4),
        _ => panic!("waveform has three base waves, got index {wave}"),
    }
}

pub fn generate_waveform<T: Scalar>(n: usize, seed: u64) -> Result<LabeledDataset<T>> {
    generate_waveform_with_noise(n, seed, 1.0)
}

/// Waveform data with attribute noise of standard deviation `noise_sd`.
pub fn generate_waveform_with_noise<T: Scalar>(n: usize, seed: u64, noise_sd: f64) -> Result<LabeledDataset<T>> {
    assert!(n >= 3, "waveform needs at least 3 samples, got {n}");
    let mut rng = rng::stream(seed, &[rng::hash_str("waveform")]);
    let mut features = Array2::<T>::zeros((n, WAVEFORM_FEATURES));
    let mut labels = Vec::with_capacity(n);
    for i in 0..n {
        let class = rng.random_range(0..3usize);
        let u: f64 = rng.random();
        let (a, b) = PAIRS[class];
        for m in 1..=WAVEFORM_FEATURES {
            let e: f64 = StandardNormal.sample(&mut rng);
            let v = u * waveform_base(a, m) + (1.0 - u) * waveform_base(b, m) + noise_sd * e;
            features[[i, m - 1]] = T::lit(v);
        }
        labels.push(class);
    }
    let mut ds = LabeledDataset { features, labels, class_names: ["0", "1", "2"].map(String::from).to_vec() };
    // Tiny n can miss a class; relabel densely so the invariants hold.
    let counts = ds.class_counts();
    if counts.contains(&0) {
        let keep: Vec<usize> = (0..3).filter(|&c| counts[c] > 0).collect();
        let mut remap = [usize::MAX; 3];
        for (new, &old) in keep.iter().enumerate() {
            remap[old] = new;
        }
        ds.labels.iter_mut().for_each(|l| *l = remap[*l]);
        ds.class_names = keep.iter().map(|c| c.to_string()).collect();
    }
    LabeledDataset::new(ds.features, ds.labels, ds.class_names)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn base_wave_table() {
        let h: Vec<Vec<f64>> = (0..3).map(|w| (1..=21).map(|m| waveform_base(w, m)).collect()).collect();
        assert_eq!(h[0][10], 6.0);
        assert_eq!(h[1][14], 6.0);
        assert_eq!(h[2][6], 6.0);
        assert_eq!(h[0].iter().sum::<f64>(), 36.0);
        assert_eq!(h[1][20], 0.0);
        assert_eq!(h[2][0], 0.0);
        assert_eq!(h[2][1], 1.0);
    }

    #[test]
    fn class_counts_are_near_uniform() {
        let ds = generate_waveform::<f64>(5000, 11).unwrap();
        assert_eq!(ds.n_features(), 21);
        assert_eq!(ds.n_classes(), 3);
        for c in ds.class_counts() {
            // 4 binomial standard deviations (about 33) around 5000/3
            assert!((c as f64 - 5000.0 / 3.0).abs() < 4.0 * (5000.0f64 * 2.0 / 9.0).sqrt(), "{c}");
        }
    }

    #[test]
    fn reproducible_per_seed() {
        let a = generate_waveform::<f64>(3, 5).unwrap();
        let b = generate_waveform::<f64>(3, 5).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n_samples(), 3);
        assert_ne!(a.features(), generate_waveform::<f64>(3, 6).unwrap().features());
    }

    #[test]
    fn noiseless_rows_are_convex_combinations() {
        let ds = generate_waveform_with_noise::<f64>(200, 2, 0.0).unwrap();
        for (row, &label) in ds.features().outer_iter().zip(ds.labels()) {
            let (a, b) = PAIRS[ds.class_names()[label].parse::<usize>().unwrap()];
            // recover u from an attribute where the two waves differ
            let m = (1..=21).find(|&m| waveform_base(a, m) != waveform_base(b, m)).unwrap();
            let (ha, hb) = (waveform_base(a, m), waveform_base(b, m));
            let u = (row[m - 1] - hb) / (ha - hb);
            assert!((-1e-12..=1.0 + 1e-12).contains(&u));
            for m in 1..=21 {
                let expected = u * waveform_base(a, m) + (1.0 - u) * waveform_base(b, m);
                assert!((row[m - 1] - expected).abs() < 1e-9);
            }
        }
    }
}
