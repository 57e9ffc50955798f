//! Model-order estimation by counting DFT peaks of a sub-sampled stream.

use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::signal_model::SampledStream;
use crate::{Complex64, Error, Result};

const MIN_STREAM_LEN: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OrderConfig {
    /// Peaks below this fraction of the largest DFT magnitude are ignored.
    pub rel_peak_threshold: f64,
    /// A peak must exceed every bin within this many bins on either side.
    pub min_peak_separation_bins: usize,
}

impl Default for OrderConfig {
    fn default() -> Self {
        Self {
            rel_peak_threshold: 0.1,
            min_peak_separation_bins: 2,
        }
    }
}

impl OrderConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.rel_peak_threshold > 0.0 && self.rel_peak_threshold < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "rel_peak_threshold must lie in (0, 1), got {}",
                self.rel_peak_threshold
            )));
        }
        if self.min_peak_separation_bins == 0 {
            return Err(Error::InvalidArgument(
                "min_peak_separation_bins must be positive".into(),
            ));
        }
        Ok(())
    }
}

/// Unwindowed DFT magnitude of the stream.
pub fn magnitude_spectrum(stream: &SampledStream) -> Vec<f64> {
    let mut buf: Vec<Complex64> = stream.samples.clone();
    FftPlanner::<f64>::new()
        .plan_fft_forward(buf.len())
        .process(&mut buf);
    buf.iter().map(|c| c.norm()).collect()
}

/// Indices of the DFT bins counted as peaks. The spectrum of a complex
/// stream is circular, so neighbors wrap around.
pub fn spectral_peaks(stream: &SampledStream, cfg: &OrderConfig) -> Result<Vec<usize>> {
    cfg.validate()?;
    let n = stream.len();
    if n < MIN_STREAM_LEN {
        return Err(Error::InsufficientSamples {
            needed: MIN_STREAM_LEN,
            got: n,
        });
    }
    let mag = magnitude_spectrum(stream);
    let max = mag.iter().cloned().fold(0.0, f64::max);
    if max == 0.0 {
        return Ok(Vec::new());
    }
    let floor = cfg.rel_peak_threshold * max;
    let reach = cfg.min_peak_separation_bins.min((n - 1) / 2);
    Ok((0..n)
        .filter(|&k| {
            mag[k] >= floor
                && (1..=reach).all(|d| mag[k] > mag[(k + d) % n] && mag[k] > mag[(k + n - d) % n])
        })
        .collect())
}

/// Number of components visible in the stream's spectrum.
pub fn estimate_order(stream: &SampledStream, cfg: &OrderConfig) -> Result<usize> {
    spectral_peaks(stream, cfg).map(|p| p.len())
}

/// Working order for both channels. An alias collision can merge two peaks
/// in one channel only, so the larger count wins.
pub fn combine_order(order1: usize, order2: usize) -> usize {
    order1.max(order2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal_model::{add_awgn, synthesize, SignalSpec, Tone};
    use proptest::prelude::*;

    fn spec(freqs: &[f64], amps: &[f64]) -> SignalSpec {
        SignalSpec::new(
            freqs
                .iter()
                .zip(amps)
                .enumerate()
                .map(|(i, (&f, &a))| Tone::new(f, a, 0.7 * i as f64).unwrap())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn zero_stream_has_no_peaks() {
        let s = SampledStream::new(10.0, vec![Complex64::new(0.0, 0.0); 64]).unwrap();
        assert_eq!(estimate_order(&s, &OrderConfig::default()).unwrap(), 0);
    }

    #[test]
    fn short_stream_rejected() {
        let s = SampledStream::new(10.0, vec![Complex64::new(1.0, 0.0); 7]).unwrap();
        assert!(matches!(
            estimate_order(&s, &OrderConfig::default()),
            Err(Error::InsufficientSamples { needed: 8, got: 7 })
        ));
    }

    #[test]
    fn three_tones_at_40_db() {
        // rate 100 Hz, n = 2048: bin = 0.0488 Hz; aliases 10, 30, 60.3 Hz
        let sp = spec(&[10.0, 230.0, 460.3], &[1.0, 1.0, 1.0]);
        let clean = synthesize(&sp, 100.0, 2048).unwrap();
        for seed in 0..100 {
            let noisy = add_awgn(&clean, 40.0, seed).unwrap();
            assert_eq!(estimate_order(&noisy, &OrderConfig::default()).unwrap(), 3, "seed {seed}");
        }
    }

    #[test]
    fn ten_well_separated_tones() {
        let freqs: Vec<f64> = (0..10).map(|i| 503.7 + 1020.0 * i as f64).collect();
        let amps = vec![1.0; 10];
        let s = synthesize(&spec(&freqs, &amps), 101.0, 1024).unwrap();
        assert_eq!(estimate_order(&s, &OrderConfig::default()).unwrap(), 10);
    }

    #[test]
    fn combine_is_max() {
        assert_eq!(combine_order(3, 3), 3);
        assert_eq!(combine_order(2, 3), 3);
        assert_eq!(combine_order(0, 0), 0);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn scale_invariant(re in -5.0f64..5.0, im in -5.0f64..5.0, f in 0.0f64..50.0) {
            prop_assume!(re.abs() + im.abs() > 1e-3);
            let s = add_awgn(&synthesize(&spec(&[f, f + 23.0], &[1.0, 0.5]), 50.0, 128).unwrap(), 10.0, 3).unwrap();
            let cfg = OrderConfig::default();
            prop_assert_eq!(
                estimate_order(&s.scaled(Complex64::new(re, im)), &cfg).unwrap(),
                estimate_order(&s, &cfg).unwrap()
            );
        }

        #[test]
        fn threshold_monotone(t1 in 0.01f64..0.99, t2 in 0.01f64..0.99, seed in 0u64..1000) {
            let s = add_awgn(&synthesize(&spec(&[3.0, 17.5, 31.0], &[1.0, 0.4, 0.2]), 50.0, 256).unwrap(), 5.0, seed).unwrap();
            let (lo, hi) = if t1 < t2 { (t1, t2) } else { (t2, t1) };
            let c = |t| estimate_order(&s, &OrderConfig { rel_peak_threshold: t, ..OrderConfig::default() }).unwrap();
            prop_assert!(c(hi) <= c(lo));
        }

        #[test]
        fn noiseless_equal_amplitude_count(slots in proptest::collection::btree_set(0u32..16, 1..6), off in 0.0f64..1.0) {
            // n = 256 at 64 Hz: bin = 0.25 Hz; slot spacing 4 Hz = 16 bins
            let freqs: Vec<f64> = slots.iter().map(|&s| 4.0 * s as f64 + off + 64.0 * (s % 3) as f64).collect();
            let amps = vec![1.0; freqs.len()];
            let s = synthesize(&spec(&freqs, &amps), 64.0, 256).unwrap();
            prop_assert_eq!(estimate_order(&s, &OrderConfig::default()).unwrap(), freqs.len());
        }
    }
}
