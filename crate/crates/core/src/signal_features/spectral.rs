//! Frequency-domain window features.
//!
//! The spectrum is the magnitude of the unwindowed (rectangular) FFT of the
//! full window. All features ignore the DC bin and use bins `1..=n/2`:
//! total power, dominant bin index, spectral centroid in Hz, and `band_count`
//! equal-width band powers over the bin range.

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

pub const SPECTRAL_BASE_FEATURES: usize = 3;

/// Feature names for one signal, given the configured band count.
pub fn spectral_feature_names(band_count: usize) -> Vec<String> {
    let mut names = vec![
        "spec_total_power".to_string(),
        "spec_dom_bin".to_string(),
        "spec_centroid_hz".to_string(),
    ];
    for b in 0..band_count {
        names.push(format!("spec_band{b}_power"));
    }
    names
}

/// FFT of a fixed window length, reused across windows.
pub struct SpectrumAnalyzer {
    fft: std::sync::Arc<dyn rustfft::Fft<f64>>,
    len: usize,
}

impl SpectrumAnalyzer {
    pub fn new(window_len: usize) -> Self {
        let fft = FftPlanner::new().plan_fft_forward(window_len);
        SpectrumAnalyzer { fft, len: window_len }
    }

    /// Magnitudes of bins `0..=len/2`.
    pub fn magnitudes(&self, window: &[f64]) -> Vec<f64> {
        debug_assert_eq!(window.len(), self.len);
        let mut buf: Vec<Complex<f64>> =
            window.iter().map(|&x| Complex::new(x, 0.0)).collect();
        self.fft.process(&mut buf);
        buf[..=self.len / 2].iter().map(|c| c.norm()).collect()
    }

    /// The `3 + band_count` spectral features for one window.
    pub fn features(&self, window: &[f64], sample_rate_hz: f64, band_count: usize) -> Vec<f64> {
        let mags = self.magnitudes(window);
        spectral_features_from_magnitudes(&mags, self.len, sample_rate_hz, band_count)
    }
}

/// Feature computation split out so tests can drive it with an independent
/// DFT oracle.
pub fn spectral_features_from_magnitudes(
    mags: &[f64],
    window_len: usize,
    sample_rate_hz: f64,
    band_count: usize,
) -> Vec<f64> {
    let kmax = window_len / 2;
    debug_assert!(mags.len() > kmax);

    let mut total_power = 0.0;
    let mut dom_bin = 0usize;
    let mut dom_mag = f64::NEG_INFINITY;
    let mut centroid_num = 0.0;
    let mut centroid_den = 0.0;
    let mut bands = vec![0.0f64; band_count];

    for k in 1..=kmax {
        let m = mags[k];
        let p = m * m;
        total_power += p;
        if m > dom_mag {
            dom_mag = m;
            dom_bin = k;
        }
        let f_hz = k as f64 * sample_rate_hz / window_len as f64;
        centroid_num += f_hz * m;
        centroid_den += m;
        if band_count > 0 {
            let band = ((k - 1) * band_count) / kmax;
            bands[band.min(band_count - 1)] += p;
        }
    }

    let centroid = if centroid_den > 0.0 { centroid_num / centroid_den } else { 0.0 };
    if dom_mag <= 0.0 {
        // No energy outside DC; bin 0 marks the degenerate spectrum.
        dom_bin = 0;
    }
    let mut out = vec![total_power, dom_bin as f64, centroid];
    out.extend(bands);
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sine(n: usize, fs: f64, f: f64) -> Vec<f64> {
        (0..n)
            .map(|i| (2.0 * std::f64::consts::PI * f * i as f64 / fs).sin())
            .collect()
    }

    #[test]
    fn bin_aligned_sine_hits_its_bin() {
        // 210-sample window at 50 Hz; bin 8 is 8*50/210 = 1.905 Hz.
        let n = 210;
        let fs = 50.0;
        let k0 = 8;
        let w = sine(n, fs, k0 as f64 * fs / n as f64);
        let f = SpectrumAnalyzer::new(n).features(&w, fs, 4);
        assert_eq!(f[1] as usize, k0);
    }

    #[test]
    fn off_bin_sine_lands_on_nearest_bin() {
        // 2.0 Hz on a 210-sample 50 Hz window leaks around bin 8.4.
        let n = 210;
        let fs = 50.0;
        let w = sine(n, fs, 2.0);
        let f = SpectrumAnalyzer::new(n).features(&w, fs, 4);
        assert_eq!(f[1] as usize, 8);
    }

    #[test]
    fn zero_signal_features_are_zero() {
        let f = SpectrumAnalyzer::new(64).features(&vec![0.0; 64], 50.0, 4);
        assert!(f.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn dc_is_excluded_from_power() {
        // Pure DC has no energy outside bin 0.
        let f = SpectrumAnalyzer::new(64).features(&vec![5.0; 64], 50.0, 4);
        assert!(f[0].abs() < 1e-18);
    }

    #[test]
    fn band_partition_covers_all_bins() {
        let n = 210;
        let kmax = n / 2;
        let mut counts = vec![0usize; 4];
        for k in 1..=kmax {
            counts[(((k - 1) * 4) / kmax).min(3)] += 1;
        }
        assert_eq!(counts.iter().sum::<usize>(), kmax);
        // Near-equal split.
        assert!(counts.iter().all(|&c| c >= kmax / 4));
    }
}
