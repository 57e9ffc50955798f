//! Matrix-pencil extraction of aliased components from one sample stream.
//!
//! Two Hankel matrices offset by one sample form the pencil
//! `(x_right, x_left)`. For a noiseless sum of `m` exponentials
//! `x_left = A D B` and `x_right = A D Z B` with `Z = diag(z_i)`, so the
//! non-trivial generalized eigenvalues of the pencil are the signal poles
//! `z_i = exp(j 2π f_i / fs)`. The pencil is reduced onto the dominant
//! rank-`r` singular subspace of `x_left`, which also acts as the noise filter:
//!
//! ```text
//! x_left ≈ U_r Σ_r V_rᴴ,    Z_r = Σ_r⁻¹ U_rᴴ x_right V_r    (r × r)
//! ```
//!
//! and the eigenvalues of `Z_r` are the poles. Amplitudes and phases follow
//! from a least-squares Vandermonde fit at the recovered frequencies.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector, Schur};
use serde::{Deserialize, Serialize};

use crate::signal_model::{canonical_phase, unit_phasor, SampledStream};
use crate::{Complex64, Error, Result};

/// Relative singular-value floor below which the Hankel matrix is treated as
/// rank-deficient when an explicit order is requested.
const RANK_COLLAPSE_REL: f64 = 1e-10;

/// Components whose amplitude is below this fraction of the largest one are
/// numerical zeros from an over-specified order.
const AMPLITUDE_FLOOR_REL: f64 = 1e-12;

/// Shifted Hankel pair built from one stream.
#[derive(Debug, Clone, PartialEq)]
pub struct HankelPencil {
    /// `x_left[(r, c)] = samples[r + c]`
    pub x_left: DMatrix<Complex64>,
    /// `x_right[(r, c)] = samples[r + c + 1]`
    pub x_right: DMatrix<Complex64>,
    pub pencil_param_l: usize,
}

/// Rank-truncation and gating parameters for [`solve_pencil`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PencilConfig {
    /// Pencil parameter `L`; `None` selects `floor(N / 3)`.
    pub pencil_param_l: Option<usize>,
    /// Number of components; `None` truncates by `svd_rel_threshold`.
    pub model_order: Option<usize>,
    pub svd_rel_threshold: f64,
    pub unit_circle_tol: f64,
}

impl Default for PencilConfig {
    fn default() -> Self {
        Self {
            pencil_param_l: None,
            model_order: None,
            svd_rel_threshold: 1e-3,
            unit_circle_tol: 1e-2,
        }
    }
}

impl PencilConfig {
    pub fn with_order(order: usize) -> Self {
        Self {
            model_order: Some(order),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.svd_rel_threshold > 0.0 && self.svd_rel_threshold < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "svd_rel_threshold must lie in (0, 1), got {}",
                self.svd_rel_threshold
            )));
        }
        if !(self.unit_circle_tol > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "unit_circle_tol must be positive, got {}",
                self.unit_circle_tol
            )));
        }
        if self.pencil_param_l == Some(0) {
            return Err(Error::InvalidArgument("pencil_param_l must be positive".into()));
        }
        if self.model_order == Some(0) {
            return Err(Error::InvalidArgument("model_order must be positive".into()));
        }
        Ok(())
    }
}

/// One per-channel pencil output: a folded frequency with its complex weight.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AliasedComponent {
    pub alias_freq_hz: f64,
    pub amplitude: f64,
    pub phase_rad: f64,
    /// Generalized eigenvalue, nominally `exp(j 2π alias_freq_hz / rate)`.
    pub pole: Complex64,
}

/// Folded frequency of a pole, with the pole angle taken in `[0, 2π)`.
pub fn pole_to_alias(pole: Complex64, rate_hz: f64) -> f64 {
    let turns = pole.arg().rem_euclid(2.0 * PI) / (2.0 * PI);
    let f = turns * rate_hz;
    if f >= rate_hz {
        0.0
    } else {
        f
    }
}

pub fn build_pencil(stream: &SampledStream, l: usize) -> Result<HankelPencil> {
    let n = stream.len();
    if l == 0 {
        return Err(Error::InvalidArgument("pencil parameter L must be at least 1".into()));
    }
    if n < l + 1 {
        return Err(Error::InsufficientSamples {
            needed: l + 1,
            got: n,
        });
    }
    let rows = n - l;
    let s = &stream.samples;
    Ok(HankelPencil {
        x_left: DMatrix::from_fn(rows, l, |r, c| s[r + c]),
        x_right: DMatrix::from_fn(rows, l, |r, c| s[r + c + 1]),
        pencil_param_l: l,
    })
}

/// Default `L = floor(N/3)` (or the configured value), clamped to
/// `[order, N - order]` and to the valid range `[1, N - 1]`.
fn choose_l(n: usize, requested: Option<usize>, order: usize) -> usize {
    let l = requested.unwrap_or(n / 3);
    let lo = order.max(1);
    let hi = n.saturating_sub(order.max(1)).max(lo);
    l.clamp(lo, hi).min(n - 1).max(1)
}

/// Extracts the aliased components of a stream, sorted by ascending folded
/// frequency.
pub fn solve_pencil(stream: &SampledStream, cfg: &PencilConfig) -> Result<Vec<AliasedComponent>> {
    cfg.validate()?;
    let n = stream.len();
    let order_hint = cfg.model_order.unwrap_or(1);
    let needed = 2 * (order_hint + 1);
    if n < needed {
        return Err(Error::InsufficientSamples { needed, got: n });
    }
    let l = choose_l(n, cfg.pencil_param_l, order_hint);
    let pencil = build_pencil(stream, l)?;

    let svd = pencil.x_left.clone().svd(true, true);
    let sigma = &svd.singular_values;
    let sigma_max = sigma.iter().cloned().fold(0.0, f64::max);
    if sigma_max == 0.0 {
        return match cfg.model_order {
            None => Ok(Vec::new()),
            Some(requested) => Err(Error::OrderDeficient {
                requested,
                achieved: 0,
            }),
        };
    }

    let rank = match cfg.model_order {
        Some(requested) => {
            let achieved = sigma
                .iter()
                .filter(|&&s| s > RANK_COLLAPSE_REL * sigma_max)
                .count();
            if achieved < requested {
                return Err(Error::OrderDeficient {
                    requested,
                    achieved,
                });
            }
            requested
        }
        None => sigma
            .iter()
            .filter(|&&s| s >= cfg.svd_rel_threshold * sigma_max)
            .count(),
    };

    let u = svd.u.as_ref().expect("left singular vectors requested");
    let v_t = svd.v_t.as_ref().expect("right singular vectors requested");
    let u_r = u.columns(0, rank);
    let v_r = v_t.rows(0, rank).adjoint();
    let mut reduced = u_r.adjoint() * &pencil.x_right * v_r;
    for (i, mut row) in reduced.row_iter_mut().enumerate() {
        row /= Complex64::from(sigma[i]);
    }

    let poles = eigenvalues(reduced)?;
    let rate = stream.rate_hz;
    let mut kept: Vec<(f64, Complex64)> = poles
        .into_iter()
        .filter(|z| (z.norm() - 1.0).abs() <= cfg.unit_circle_tol)
        .map(|z| (pole_to_alias(z, rate), z))
        .collect();
    kept.sort_by(|a, b| a.0.total_cmp(&b.0));
    kept.dedup_by(|b, a| circular_gap(a.0, b.0, rate) <= 1e-9 * rate);

    if kept.is_empty() {
        return Ok(Vec::new());
    }

    let freqs: Vec<f64> = kept.iter().map(|k| k.0).collect();
    let weights = estimate_amplitudes(stream, &freqs)?;
    let amp_max = weights.iter().map(|w| w.0).fold(0.0, f64::max);
    Ok(kept
        .into_iter()
        .zip(weights)
        .filter(|(_, (a, _))| *a > AMPLITUDE_FLOOR_REL * amp_max)
        .map(|((alias_freq_hz, pole), (amplitude, phase_rad))| AliasedComponent {
            alias_freq_hz,
            amplitude,
            phase_rad,
            pole,
        })
        .collect())
}

/// Solves two channels at a common `order`. Unit-circle gating can leave the
/// channels with different counts; both are then re-solved at the smaller
/// count until the counts agree (or one channel is empty).
pub fn solve_pencil_pair(
    s1: &SampledStream,
    s2: &SampledStream,
    mut order: usize,
    base: &PencilConfig,
) -> Result<(Vec<AliasedComponent>, Vec<AliasedComponent>)> {
    loop {
        let cfg = PencilConfig {
            model_order: Some(order),
            ..*base
        };
        let set1 = solve_pencil(s1, &cfg)?;
        let set2 = solve_pencil(s2, &cfg)?;
        let common = set1.len().min(set2.len());
        if set1.len() == set2.len() || common == 0 {
            return Ok((set1, set2));
        }
        order = common;
    }
}

fn circular_gap(a: f64, b: f64, rate: f64) -> f64 {
    let d = (a - b).rem_euclid(rate);
    d.min(rate - d)
}

fn eigenvalues(m: DMatrix<Complex64>) -> Result<Vec<Complex64>> {
    let dim = m.nrows();
    if dim == 0 {
        return Ok(Vec::new());
    }
    if dim == 1 {
        return Ok(vec![m[(0, 0)]]);
    }
    let schur = Schur::try_new(m, 1e-15, 10_000 * dim)
        .ok_or_else(|| Error::Numerical("Schur iteration did not converge".into()))?;
    // the complex Schur form is triangular, its diagonal holds the eigenvalues
    let (_, t) = schur.unpack();
    Ok((0..dim).map(|i| t[(i, i)]).collect())
}

/// Least-squares complex weights of `exp(j 2π f_i n / rate)` in the stream,
/// with phases referenced to absolute sample index 0.
///
/// Returns `(|c_i|, arg c_i)` per frequency; an exactly zero weight reports
/// phase 0.
pub fn estimate_amplitudes(stream: &SampledStream, alias_freqs: &[f64]) -> Result<Vec<(f64, f64)>> {
    let rate = stream.rate_hz;
    let n = stream.len();
    if alias_freqs.is_empty() {
        return Ok(Vec::new());
    }
    if alias_freqs.len() > n {
        return Err(Error::InsufficientSamples {
            needed: alias_freqs.len(),
            got: n,
        });
    }
    for (i, &a) in alias_freqs.iter().enumerate() {
        if !a.is_finite() {
            return Err(Error::InvalidArgument(format!("non-finite frequency {a}")));
        }
        for &b in &alias_freqs[i + 1..] {
            if circular_gap(a, b, rate) <= 1e-9 * rate {
                return Err(Error::DegenerateBasis(a, b));
            }
        }
    }

    let basis = DMatrix::from_fn(n, alias_freqs.len(), |r, c| {
        unit_phasor(alias_freqs[c], rate, stream.start_index + r as i64)
    });
    let rhs = DVector::from_column_slice(&stream.samples);
    let coeffs = basis
        .svd(true, true)
        .solve(&rhs, 1e-13)
        .map_err(|e| Error::Numerical(e.to_string()))?;

    Ok(coeffs
        .iter()
        .map(|c| {
            let amp = c.norm();
            let phase = if amp == 0.0 { 0.0 } else { canonical_phase(c.arg()) };
            (amp, phase)
        })
        .collect())
}
