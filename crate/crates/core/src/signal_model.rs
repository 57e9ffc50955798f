//! Multi-tone complex signal model and sub-rate sample streams.
//!
//! A signal is a finite sum of complex exponentials
//! `x(t) = Σ a_i exp(j(2π f_i t + φ_i))`. Sampling it at a rate `fs` gives
//! `x[n] = x(n / fs)`; when `fs` is below the highest `f_i` every component
//! shows up at its folded frequency `f_i mod fs`.

use std::f64::consts::PI;

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::rng::rng_from_seed;
use crate::{Complex64, Error, Result};

/// Wraps an angle into `[-π, π)`.
pub fn canonical_phase(phase: f64) -> f64 {
    let wrapped = (phase + PI).rem_euclid(2.0 * PI) - PI;
    // rem_euclid can round up to exactly 2π for tiny negative inputs
    if wrapped >= PI {
        -PI
    } else {
        wrapped
    }
}

/// Wraps an angle difference into `(-π, π]`.
pub fn wrap_phase_diff(delta: f64) -> f64 {
    let w = canonical_phase(delta);
    if w == -PI {
        PI
    } else {
        w
    }
}

/// One complex-exponential component.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "ToneRepr", deny_unknown_fields)]
pub struct Tone {
    pub freq_hz: f64,
    pub amplitude: f64,
    pub phase_rad: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ToneRepr {
    freq_hz: f64,
    amplitude: f64,
    phase_rad: f64,
}

impl TryFrom<ToneRepr> for Tone {
    type Error = Error;

    fn try_from(r: ToneRepr) -> Result<Self> {
        Tone::new(r.freq_hz, r.amplitude, r.phase_rad)
    }
}

impl Tone {
    /// Builds a tone, canonicalizing the phase into `[-π, π)`.
    pub fn new(freq_hz: f64, amplitude: f64, phase_rad: f64) -> Result<Self> {
        if !freq_hz.is_finite() || freq_hz < 0.0 {
            return Err(Error::InvalidArgument(format!(
                "tone frequency must be finite and non-negative, got {freq_hz}"
            )));
        }
        if !amplitude.is_finite() || amplitude <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "tone amplitude must be finite and positive, got {amplitude}"
            )));
        }
        if !phase_rad.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "tone phase must be finite, got {phase_rad}"
            )));
        }
        Ok(Self {
            freq_hz,
            amplitude,
            phase_rad: canonical_phase(phase_rad),
        })
    }
}

/// Ground-truth component set with pairwise distinct frequencies.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SignalSpecRepr", deny_unknown_fields)]
pub struct SignalSpec {
    tones: Vec<Tone>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SignalSpecRepr {
    tones: Vec<Tone>,
}

impl TryFrom<SignalSpecRepr> for SignalSpec {
    type Error = Error;

    fn try_from(r: SignalSpecRepr) -> Result<Self> {
        SignalSpec::new(r.tones)
    }
}

impl SignalSpec {
    pub fn new(tones: Vec<Tone>) -> Result<Self> {
        if tones.is_empty() {
            return Err(Error::InvalidArgument(
                "signal spec needs at least one tone".into(),
            ));
        }
        for (i, a) in tones.iter().enumerate() {
            if let Some(b) = tones[i + 1..].iter().find(|b| b.freq_hz == a.freq_hz) {
                return Err(Error::InvalidArgument(format!(
                    "duplicate tone frequency {} Hz",
                    b.freq_hz
                )));
            }
        }
        Ok(Self { tones })
    }

    pub fn tones(&self) -> &[Tone] {
        &self.tones
    }

    pub fn len(&self) -> usize {
        self.tones.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tones.is_empty()
    }

    pub fn max_freq_hz(&self) -> f64 {
        self.tones.iter().map(|t| t.freq_hz).fold(0.0, f64::max)
    }
}

/// A uniformly sampled complex sequence. Sample `i` of `samples` is taken at
/// time `(start_index + i) / rate_hz`.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledStream {
    pub rate_hz: f64,
    pub samples: Vec<Complex64>,
    pub start_index: i64,
}

impl SampledStream {
    pub fn new(rate_hz: f64, samples: Vec<Complex64>) -> Result<Self> {
        Self::with_start(rate_hz, samples, 0)
    }

    pub fn with_start(rate_hz: f64, samples: Vec<Complex64>, start_index: i64) -> Result<Self> {
        if !rate_hz.is_finite() || rate_hz <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "sampling rate must be positive, got {rate_hz}"
            )));
        }
        Ok(Self {
            rate_hz,
            samples,
            start_index,
        })
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Mean of `|x[n]|²`.
    pub fn mean_power(&self) -> f64 {
        if self.samples.is_empty() {
            return 0.0;
        }
        self.samples.iter().map(|s| s.norm_sqr()).sum::<f64>() / self.samples.len() as f64
    }

    /// Multiplies every sample by `c`.
    pub fn scaled(&self, c: Complex64) -> Self {
        Self {
            rate_hz: self.rate_hz,
            samples: self.samples.iter().map(|&s| s * c).collect(),
            start_index: self.start_index,
        }
    }

    pub fn conj(&self) -> Self {
        Self {
            rate_hz: self.rate_hz,
            samples: self.samples.iter().map(|s| s.conj()).collect(),
            start_index: self.start_index,
        }
    }
}

/// `exp(j 2π f n / rate)` with the cycle count reduced modulo one before the
/// multiplication by 2π, so large `n·f/rate` products keep full precision.
#[inline]
pub fn unit_phasor(freq_hz: f64, rate_hz: f64, n: i64) -> Complex64 {
    let cycles = (freq_hz * n as f64 / rate_hz).rem_euclid(1.0);
    Complex64::from_polar(1.0, 2.0 * PI * cycles)
}

/// Samples the noiseless signal at `rate_hz`, starting at sample index 0.
pub fn synthesize(spec: &SignalSpec, rate_hz: f64, n_samples: usize) -> Result<SampledStream> {
    synthesize_from(spec, rate_hz, n_samples, 0)
}

/// Samples the noiseless signal for `n = start_index .. start_index + n_samples`.
pub fn synthesize_from(
    spec: &SignalSpec,
    rate_hz: f64,
    n_samples: usize,
    start_index: i64,
) -> Result<SampledStream> {
    if !rate_hz.is_finite() || rate_hz <= 0.0 {
        return Err(Error::InvalidArgument(format!(
            "sampling rate must be positive, got {rate_hz}"
        )));
    }
    if n_samples == 0 {
        return Err(Error::InvalidArgument("n_samples must be at least 1".into()));
    }
    let samples = (0..n_samples as i64)
        .map(|i| {
            let n = start_index + i;
            spec.tones
                .iter()
                .map(|t| {
                    unit_phasor(t.freq_hz, rate_hz, n)
                        * Complex64::from_polar(t.amplitude, t.phase_rad)
                })
                .sum()
        })
        .collect();
    SampledStream::with_start(rate_hz, samples, start_index)
}

/// Adds circular complex white Gaussian noise at the given SNR, measured
/// against the mean power of the whole stream.
///
/// `snr_db = +∞` returns the stream unchanged. The noise draw depends on
/// `seed` only, so the same seed at different SNRs yields the same noise
/// shape at different scales.
pub fn add_awgn(stream: &SampledStream, snr_db: f64, seed: u64) -> Result<SampledStream> {
    if stream.is_empty() {
        return Err(Error::InvalidArgument("cannot add noise to an empty stream".into()));
    }
    if snr_db.is_nan() {
        return Err(Error::InvalidArgument("snr_db is NaN".into()));
    }
    if snr_db == f64::INFINITY {
        return Ok(stream.clone());
    }
    let noise_var = stream.mean_power() / 10f64.powf(snr_db / 10.0);
    let sigma = (noise_var / 2.0).sqrt();
    let mut rng = rng_from_seed(seed);
    let samples = stream
        .samples
        .iter()
        .map(|&s| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            s + Complex64::new(sigma * re, sigma * im)
        })
        .collect();
    Ok(SampledStream {
        rate_hz: stream.rate_hz,
        samples,
        start_index: stream.start_index,
    })
}

/// Folded frequency `freq_hz mod rate_hz`, in `[0, rate_hz)`.
pub fn alias_of(freq_hz: f64, rate_hz: f64) -> f64 {
    let r = freq_hz.rem_euclid(rate_hz);
    if r >= rate_hz {
        0.0
    } else {
        r
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn one_tone(f: f64, a: f64, p: f64) -> SignalSpec {
        SignalSpec::new(vec![Tone::new(f, a, p).unwrap()]).unwrap()
    }

    fn max_dev(a: &[Complex64], b: &[Complex64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).norm()).fold(0.0, f64::max)
    }

    #[test]
    fn dc_tone() {
        let s = synthesize(&one_tone(0.0, 1.0, 0.0), 100.0, 4).unwrap();
        assert_eq!(s.samples, vec![c(1.0, 0.0); 4]);
    }

    #[test]
    fn quarter_cycle_rotation() {
        let s = synthesize(&one_tone(25.0, 1.0, 0.0), 100.0, 4).unwrap();
        let want = [c(1.0, 0.0), c(0.0, 1.0), c(-1.0, 0.0), c(0.0, -1.0)];
        assert!(max_dev(&s.samples, &want) < 1e-15);
    }

    #[test]
    fn linear_superposition() {
        let a = Tone::new(13.0, 0.7, 0.3).unwrap();
        let b = Tone::new(171.5, 1.9, -2.0).unwrap();
        let both = SignalSpec::new(vec![a, b]).unwrap();
        let sa = synthesize(&SignalSpec::new(vec![a]).unwrap(), 37.0, 50).unwrap();
        let sb = synthesize(&SignalSpec::new(vec![b]).unwrap(), 37.0, 50).unwrap();
        let sum: Vec<_> = sa.samples.iter().zip(&sb.samples).map(|(x, y)| x + y).collect();
        let s = synthesize(&both, 37.0, 50).unwrap();
        assert!(max_dev(&s.samples, &sum) < 1e-12);
    }

    #[test]
    fn start_index_shifts_time() {
        let spec = one_tone(11.0, 1.0, 0.5);
        let full = synthesize(&spec, 40.0, 10).unwrap();
        let tail = synthesize_from(&spec, 40.0, 4, 6).unwrap();
        assert!(max_dev(&full.samples[6..], &tail.samples) < 1e-13);
        assert_eq!(tail.start_index, 6);
    }

    #[test]
    fn bad_arguments() {
        let spec = one_tone(1.0, 1.0, 0.0);
        assert!(synthesize(&spec, 0.0, 4).is_err());
        assert!(synthesize(&spec, -3.0, 4).is_err());
        assert!(synthesize(&spec, 10.0, 0).is_err());
        assert!(Tone::new(1.0, 0.0, 0.0).is_err());
        assert!(Tone::new(-1.0, 1.0, 0.0).is_err());
        assert!(SignalSpec::new(vec![]).is_err());
        let t = Tone::new(5.0, 1.0, 0.0).unwrap();
        assert!(SignalSpec::new(vec![t, t]).is_err());
    }

    #[test]
    fn phase_is_canonical() {
        assert_eq!(Tone::new(1.0, 1.0, PI).unwrap().phase_rad, -PI);
        let t = Tone::new(1.0, 1.0, 7.0).unwrap();
        assert!((t.phase_rad - (7.0 - 2.0 * PI)).abs() < 1e-15);
        assert!((-PI..PI).contains(&canonical_phase(-1e-300)));
        assert_eq!(wrap_phase_diff(-PI), PI);
    }

    #[test]
    fn alias_examples() {
        assert_eq!(alias_of(250.0, 100.0), 50.0);
        assert_eq!(alias_of(30.0, 100.0), 30.0);
        assert_eq!(alias_of(0.0, 100.0), 0.0);
    }

    #[test]
    fn infinite_snr_is_identity() {
        let s = synthesize(&one_tone(3.0, 1.0, 0.0), 10.0, 16).unwrap();
        assert_eq!(add_awgn(&s, f64::INFINITY, 1).unwrap(), s);
    }

    #[test]
    fn noise_is_deterministic() {
        let s = synthesize(&one_tone(3.0, 1.0, 0.0), 10.0, 64).unwrap();
        let a = add_awgn(&s, 5.0, 99).unwrap();
        let b = add_awgn(&s, 5.0, 99).unwrap();
        assert_eq!(a, b);
        assert_ne!(a, add_awgn(&s, 5.0, 100).unwrap());
        assert_eq!(a.len(), s.len());
        assert_eq!(a.rate_hz, s.rate_hz);
    }

    #[test]
    fn measured_snr_matches_request() {
        let s = synthesize(&one_tone(0.123, 1.0, 0.0), 1.0, 100_000).unwrap();
        let noisy = add_awgn(&s, 20.0, 2024).unwrap();
        let noise_pow = noisy
            .samples
            .iter()
            .zip(&s.samples)
            .map(|(y, x)| (y - x).norm_sqr())
            .sum::<f64>()
            / s.len() as f64;
        let snr = 10.0 * (s.mean_power() / noise_pow).log10();
        assert!((snr - 20.0).abs() < 0.5, "measured {snr} dB");
    }

    #[test]
    fn noise_mean_converges_to_clean() {
        // n * trials = 1e6 draws at unit amplitude, 0 dB
        let s = synthesize(&one_tone(0.31, 1.0, 0.2), 1.0, 1000).unwrap();
        let trials = 1000u64;
        let mut acc = Complex64::new(0.0, 0.0);
        for t in 0..trials {
            let y = add_awgn(&s, 0.0, t).unwrap();
            acc += y.samples.iter().zip(&s.samples).map(|(y, x)| y - x).sum::<Complex64>();
        }
        let mean = acc / (trials as f64 * s.len() as f64);
        assert!(mean.norm() < 0.01, "noise mean {mean}");
    }

    proptest! {
        #[test]
        fn alias_in_range_and_congruent(f in 0.0f64..1e6, fs in 0.5f64..5e3) {
            let a = alias_of(f, fs);
            prop_assert!(a >= 0.0 && a < fs);
            let k = ((f - a) / fs).round();
            prop_assert!(((f - a) - k * fs).abs() <= 1e-12 * f.abs().max(1.0));
        }
    }
}
