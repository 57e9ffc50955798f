//! Compressed-sensing baseline: row-orthonormal Gaussian sensing of a
//! Nyquist-rate record and orthogonal matching pursuit over the unitary DFT
//! dictionary.
//!
//! The effective dictionary is `A = Φ Fᴴ` where `Φ` is the `M × N` sensing
//! matrix and `F` the unitary DFT. Neither `A` nor `F` is formed: correlations
//! `Aᴴ r = F Φᵀ r` take one FFT, and only the selected atoms are materialized.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, StandardNormal};
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::rng::rng_from_seed;
use crate::signal_model::{canonical_phase, Tone};
use crate::{Complex64, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CsConfig {
    pub full_length_n: usize,
    pub sparsity_k: usize,
    /// `None` selects [`min_measurements`].
    pub measurements_m: Option<usize>,
    pub seed: u64,
}

impl Default for CsConfig {
    fn default() -> Self {
        Self {
            full_length_n: 2048,
            sparsity_k: 10,
            measurements_m: None,
            seed: 0,
        }
    }
}

impl CsConfig {
    pub fn measurements(&self) -> Result<usize> {
        match self.measurements_m {
            Some(m) => Ok(m),
            None => min_measurements(self.full_length_n, self.sparsity_k),
        }
    }

    pub fn validate(&self) -> Result<()> {
        let m = self.measurements()?;
        if !(1 <= self.sparsity_k && self.sparsity_k <= m && m <= self.full_length_n) {
            return Err(Error::InvalidArgument(format!(
                "need 1 <= K <= M <= N, got K={}, M={m}, N={}",
                self.sparsity_k, self.full_length_n
            )));
        }
        Ok(())
    }
}

/// `max(K, ceil(K · ln(N / K)))`.
pub fn min_measurements(n: usize, k: usize) -> Result<usize> {
    if k == 0 || k > n {
        return Err(Error::Precondition(format!("need 1 <= K <= N, got K={k}, N={n}")));
    }
    let m = (k as f64 * (n as f64 / k as f64).ln()).ceil() as usize;
    Ok(m.max(k))
}

/// Real `M × N` matrix with orthonormal rows, stored row-major, together
/// with the column norms of the effective dictionary `Φ Fᴴ`.
#[derive(Debug, Clone, PartialEq)]
pub struct SensingMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
    atom_norms: Vec<f64>,
}

impl SensingMatrix {
    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    /// `‖Φ f_k‖` for every unitary DFT atom `f_k`.
    pub fn atom_norms(&self) -> &[f64] {
        &self.atom_norms
    }

    pub fn to_dmatrix(&self) -> DMatrix<f64> {
        DMatrix::from_row_slice(self.rows, self.cols, &self.data)
    }

    /// `Φ x` for a complex vector.
    pub fn apply(&self, x: &[Complex64]) -> Result<Vec<Complex64>> {
        if x.len() != self.cols {
            return Err(Error::InvalidArgument(format!(
                "vector length {} does not match {} columns",
                x.len(),
                self.cols
            )));
        }
        Ok((0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(x)
                    .fold(Complex64::new(0.0, 0.0), |acc, (&p, &v)| acc + v * p)
            })
            .collect())
    }

    /// `Φᵀ y`.
    fn apply_transpose(&self, y: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); self.cols];
        for (i, &yi) in y.iter().enumerate() {
            for (o, &p) in out.iter_mut().zip(self.row(i)) {
                *o += yi * p;
            }
        }
        out
    }
}

/// Gaussian `M × N` draw with rows orthonormalized by modified Gram-Schmidt.
pub fn make_sensing_matrix(m: usize, n: usize, seed: u64) -> Result<SensingMatrix> {
    if m == 0 || m > n {
        return Err(Error::Precondition(format!("need 1 <= M <= N, got M={m}, N={n}")));
    }
    let mut rng = rng_from_seed(seed);
    let mut data: Vec<f64> = (0..m * n).map(|_| StandardNormal.sample(&mut rng)).collect();
    for i in 0..m {
        let (done, rest) = data.split_at_mut(i * n);
        let row = &mut rest[..n];
        for j in 0..i {
            let prev = &done[j * n..(j + 1) * n];
            let dot: f64 = row.iter().zip(prev).map(|(a, b)| a * b).sum();
            for (a, b) in row.iter_mut().zip(prev) {
                *a -= dot * b;
            }
        }
        let norm = row.iter().map(|a| a * a).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Err(Error::Numerical("sensing rows are linearly dependent".into()));
        }
        row.iter_mut().for_each(|a| *a /= norm);
    }
    let atom_norms = dictionary_norms(&data, m, n);
    Ok(SensingMatrix {
        rows: m,
        cols: n,
        data,
        atom_norms,
    })
}

// Φ is real, so (Φ f_k)[m] = conj(FFT(Φ_m)[k]) / √N.
fn dictionary_norms(data: &[f64], m: usize, n: usize) -> Vec<f64> {
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let mut acc = vec![0.0; n];
    let mut buf = vec![Complex64::new(0.0, 0.0); n];
    for i in 0..m {
        for (b, &p) in buf.iter_mut().zip(&data[i * n..(i + 1) * n]) {
            *b = Complex64::new(p, 0.0);
        }
        fft.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
    }
    acc.into_iter().map(|a| (a / n as f64).sqrt()).collect()
}

/// `k`-th unitary DFT atom, `exp(j 2π k n / N) / √N`.
pub fn dft_atom(k: usize, n: usize) -> Vec<Complex64> {
    let scale = 1.0 / (n as f64).sqrt();
    (0..n)
        .map(|i| Complex64::from_polar(scale, 2.0 * PI * ((k * i) % n) as f64 / n as f64))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SparseRecovery {
    /// Selected DFT bins, in selection order.
    pub support: Vec<usize>,
    /// Unitary-DFT coefficients aligned with `support`.
    pub coefficients: Vec<Complex64>,
    pub residual_norm: f64,
    /// Residual norm after each iteration.
    pub residual_history: Vec<f64>,
}

fn norm(v: &[Complex64]) -> f64 {
    v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt()
}

/// Orthogonal matching pursuit with exactly `k` iterations (fewer only if the
/// residual vanishes). Atoms are scored by `|⟨a_k, r⟩| / ‖a_k‖`, the
/// correlation against the unit-normalized atom; ties go to the lowest bin.
pub fn omp_recover(
    measurements: &[Complex64],
    sensing: &SensingMatrix,
    k: usize,
) -> Result<SparseRecovery> {
    let (m, n) = (sensing.rows(), sensing.cols());
    if measurements.len() != m {
        return Err(Error::InvalidArgument(format!(
            "{} measurements for a {m}-row sensing matrix",
            measurements.len()
        )));
    }
    if k > m {
        return Err(Error::Precondition(format!("sparsity {k} exceeds {m} measurements")));
    }
    let fft = FftPlanner::<f64>::new().plan_fft_forward(n);
    let inv_sqrt_n = 1.0 / (n as f64).sqrt();
    let atom_norms = sensing.atom_norms();

    let mut residual = measurements.to_vec();
    let mut support: Vec<usize> = Vec::with_capacity(k);
    let mut atoms: Vec<Vec<Complex64>> = Vec::with_capacity(k);
    let mut coefficients: Vec<Complex64> = Vec::new();
    let mut history = Vec::with_capacity(k);
    let mut residual_norm = norm(&residual);

    for _ in 0..k {
        if residual_norm == 0.0 {
            break;
        }
        let mut corr = sensing.apply_transpose(&residual);
        fft.process(&mut corr);
        let mut best: Option<(usize, f64)> = None;
        for (bin, c) in corr.iter().enumerate() {
            if support.contains(&bin) {
                continue;
            }
            if atom_norms[bin] == 0.0 {
                continue;
            }
            let mag = c.norm() * inv_sqrt_n / atom_norms[bin];
            if best.is_none_or(|(_, b)| mag > b) {
                best = Some((bin, mag));
            }
        }
        let Some((bin, _)) = best else { break };
        support.push(bin);
        atoms.push(sensing.apply(&dft_atom(bin, n))?);

        let basis = DMatrix::from_fn(m, atoms.len(), |r, c| atoms[c][r]);
        let rhs = DVector::from_column_slice(measurements);
        let fit = basis
            .clone()
            .svd(true, true)
            .solve(&rhs, 1e-13)
            .map_err(|e| Error::Numerical(e.to_string()))?;
        let approx = &basis * &fit;
        residual = rhs.iter().zip(approx.iter()).map(|(y, a)| y - a).collect();
        coefficients = fit.iter().copied().collect();
        residual_norm = norm(&residual);
        history.push(residual_norm);
    }

    Ok(SparseRecovery {
        support,
        coefficients,
        residual_norm,
        residual_history: history,
    })
}

/// Maps each recovered bin to a tone. A unit-amplitude on-grid tone has
/// unitary-DFT coefficient `√N`, so amplitudes are `|c| / √N`. Zero
/// coefficients are skipped.
pub fn extract_tones(recovery: &SparseRecovery, n: usize, nyquist_rate_hz: f64) -> Vec<Tone> {
    let scale = 1.0 / (n as f64).sqrt();
    let mut tones: Vec<Tone> = recovery
        .support
        .iter()
        .zip(&recovery.coefficients)
        .filter_map(|(&bin, c)| {
            let freq = bin as f64 * nyquist_rate_hz / n as f64;
            Tone::new(freq, c.norm() * scale, canonical_phase(c.arg())).ok()
        })
        .collect();
    tones.sort_by(|a, b| a.freq_hz.total_cmp(&b.freq_hz));
    tones
}
