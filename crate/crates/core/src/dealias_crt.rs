//! Cross-channel pairing and fold-index resolution of true frequencies.
//!
//! A tone at `f` appears in channel `c` at `alias_c = f mod rate_c` with the
//! same amplitude and phase in both channels. Pairing therefore runs on
//! (amplitude, phase) only; the true frequency is the value satisfying
//! `f = k1·rate1 + alias1 = k2·rate2 + alias2` for some fold indices
//! `k1, k2 ∈ [0, n]`. Noisy aliases never satisfy this exactly, so the
//! resolver searches for index pairs whose two reconstructions agree within a
//! tolerance. Integer rates and aliases take an exact CRT path instead.

use serde::{Deserialize, Serialize};

use crate::matrix_pencil::AliasedComponent;
use crate::signal_model::{canonical_phase, wrap_phase_diff};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PairedComponent {
    pub chan1: AliasedComponent,
    pub chan2: AliasedComponent,
    pub match_cost: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DealiasConfig {
    pub rate1_hz: f64,
    pub rate2_hz: f64,
    /// Largest fold index searched in either channel.
    pub max_fold_index_n: u32,
    pub freq_match_tol_hz: f64,
    pub amp_weight: f64,
    pub phase_weight: f64,
}

/// Optional overrides for [`DealiasConfig`] as they appear in a config file;
/// the rates come from the streams themselves.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DealiasSettings {
    pub max_fold_index_n: Option<u32>,
    /// Highest frequency expected in the signal; sets `n` when
    /// `max_fold_index_n` is absent.
    pub f_max_hint_hz: Option<f64>,
    pub freq_match_tol_hz: Option<f64>,
    pub amp_weight: Option<f64>,
    pub phase_weight: Option<f64>,
}

impl DealiasConfig {
    /// Defaults: tolerance `max(rate1, rate2)·1e-3`, unit weights.
    pub fn new(rate1_hz: f64, rate2_hz: f64, max_fold_index_n: u32) -> Result<Self> {
        let cfg = Self {
            rate1_hz,
            rate2_hz,
            max_fold_index_n,
            freq_match_tol_hz: rate1_hz.max(rate2_hz) * 1e-3,
            amp_weight: 1.0,
            phase_weight: 1.0,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// Builds a config from optional overrides. `n` comes from
    /// `max_fold_index_n`, else `ceil(f_max_hint / min rate)`, else the largest
    /// `n` whose search window stays inside the unambiguous range.
    pub fn from_settings(rate1_hz: f64, rate2_hz: f64, s: &DealiasSettings) -> Result<Self> {
        let mut cfg = Self::new(rate1_hz, rate2_hz, 0)?;
        cfg.max_fold_index_n = match (s.max_fold_index_n, s.f_max_hint_hz) {
            (Some(n), _) => n,
            (None, Some(hint)) => default_fold_index(hint, rate1_hz, rate2_hz)?,
            (None, None) => {
                let range = unambiguous_range(rate1_hz, rate2_hz);
                let min_rate = rate1_hz.min(rate2_hz);
                if range.is_finite() {
                    ((range / min_rate).floor() as u32).saturating_sub(1)
                } else {
                    return Err(Error::InvalidArgument(
                        "rates have no common grid; set max_fold_index_n or f_max_hint_hz".into(),
                    ));
                }
            }
        };
        if let Some(t) = s.freq_match_tol_hz {
            cfg.freq_match_tol_hz = t;
        }
        if let Some(w) = s.amp_weight {
            cfg.amp_weight = w;
        }
        if let Some(w) = s.phase_weight {
            cfg.phase_weight = w;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        for (name, r) in [("rate1_hz", self.rate1_hz), ("rate2_hz", self.rate2_hz)] {
            if !r.is_finite() || r <= 0.0 {
                return Err(Error::InvalidArgument(format!("{name} must be positive, got {r}")));
            }
        }
        if self.rate1_hz == self.rate2_hz {
            return Err(Error::InvalidArgument("rates must differ".into()));
        }
        if !self.freq_match_tol_hz.is_finite() || self.freq_match_tol_hz <= 0.0 {
            return Err(Error::InvalidArgument(format!(
                "freq_match_tol_hz must be positive, got {}",
                self.freq_match_tol_hz
            )));
        }
        if !(self.amp_weight >= 0.0 && self.phase_weight >= 0.0)
            || !self.amp_weight.is_finite()
            || !self.phase_weight.is_finite()
        {
            return Err(Error::InvalidArgument("pairing weights must be finite and non-negative".into()));
        }
        Ok(())
    }

    /// Upper end of the searched frequency window, `(n + 1)·min(rate1, rate2)`.
    pub fn search_window_hz(&self) -> f64 {
        (self.max_fold_index_n as f64 + 1.0) * self.rate1_hz.min(self.rate2_hz)
    }

    /// True when the searched window fits inside the unambiguous range.
    pub fn window_is_unambiguous(&self) -> bool {
        self.search_window_hz() <= unambiguous_range(self.rate1_hz, self.rate2_hz)
    }

    fn swapped(&self) -> Self {
        Self {
            rate1_hz: self.rate2_hz,
            rate2_hz: self.rate1_hz,
            ..*self
        }
    }
}

/// `ceil(f_max / min(rate1, rate2))`.
pub fn default_fold_index(f_max_hz: f64, rate1_hz: f64, rate2_hz: f64) -> Result<u32> {
    if !f_max_hz.is_finite() || f_max_hz < 0.0 {
        return Err(Error::InvalidArgument(format!("invalid f_max hint {f_max_hz}")));
    }
    Ok((f_max_hz / rate1_hz.min(rate2_hz)).ceil() as u32)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ResolvedTone {
    pub freq_hz: f64,
    pub amplitude: f64,
    pub phase_rad: f64,
    pub k1: u32,
    pub k2: u32,
    pub residual_hz: f64,
}

fn pair_cost(a: &AliasedComponent, b: &AliasedComponent, cfg: &DealiasConfig) -> f64 {
    cfg.amp_weight * (a.amplitude / b.amplitude).ln().abs()
        + cfg.phase_weight * wrap_phase_diff(a.phase_rad - b.phase_rad).abs()
}

/// Minimum-total-cost perfect matching between the two channels' components.
/// Output is ordered by the channel-1 index.
pub fn pair_components(
    set1: &[AliasedComponent],
    set2: &[AliasedComponent],
    cfg: &DealiasConfig,
) -> Result<Vec<PairedComponent>> {
    if set1.is_empty() || set2.is_empty() || set1.len() != set2.len() {
        return Err(Error::Cardinality(set1.len(), set2.len()));
    }
    let m = set1.len();
    let mut cost = vec![vec![0.0; m]; m];
    for (i, a) in set1.iter().enumerate() {
        for (j, b) in set2.iter().enumerate() {
            let c = pair_cost(a, b, cfg);
            if !c.is_finite() {
                return Err(Error::InvalidComponent(format!(
                    "non-finite pairing cost between channel-1 #{i} and channel-2 #{j}"
                )));
            }
            cost[i][j] = c;
        }
    }
    let assignment = min_cost_assignment(&cost);
    Ok(assignment
        .into_iter()
        .enumerate()
        .map(|(i, j)| PairedComponent {
            chan1: set1[i],
            chan2: set2[j],
            match_cost: cost[i][j],
        })
        .collect())
}

/// Hungarian algorithm (shortest augmenting paths with potentials) on a
/// square cost matrix. Returns the column assigned to each row.
pub fn min_cost_assignment(cost: &[Vec<f64>]) -> Vec<usize> {
    let n = cost.len();
    // 1-based internal indexing, column 0 is the virtual start
    let mut u = vec![0.0; n + 1];
    let mut v = vec![0.0; n + 1];
    let mut row_of = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];
    for i in 1..=n {
        row_of[0] = i;
        let mut j0 = 0;
        let mut minv = vec![f64::INFINITY; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = row_of[j0];
            let mut delta = f64::INFINITY;
            let mut j1 = 0;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if cur < minv[j] {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if minv[j] < delta {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for j in 0..=n {
                if used[j] {
                    u[row_of[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
            if row_of[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            row_of[j0] = row_of[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }
    let mut col_of = vec![0; n];
    for j in 1..=n {
        if row_of[j] > 0 {
            col_of[row_of[j] - 1] = j - 1;
        }
    }
    col_of
}

#[derive(Debug, Clone, Copy)]
struct Candidate {
    k1: u32,
    k2: u32,
    f1: f64,
    f2: f64,
    residual: f64,
}

impl Candidate {
    fn freq(&self) -> f64 {
        0.5 * (self.f1 + self.f2)
    }
}

fn is_integral(x: f64) -> bool {
    x.is_finite() && x.fract() == 0.0 && x.abs() < 2f64.powi(52)
}

/// Exact candidates for integer rates and aliases: the CRT solution plus
/// its translates by `lcm` inside the fold-index window. Returns `None` when
/// the inputs do not qualify for the exact path.
fn exact_candidates(a1: f64, a2: f64, cfg: &DealiasConfig) -> Option<Vec<Candidate>> {
    let (r1, r2) = (cfg.rate1_hz, cfg.rate2_hz);
    // a tolerance of 1 Hz or more admits off-by-one integer candidates
    if cfg.freq_match_tol_hz >= 1.0 || ![r1, r2, a1, a2].iter().all(|&x| is_integral(x)) {
        return None;
    }
    let (r1, r2, a1, a2) = (r1 as u64, r2 as u64, a1 as u64, a2 as u64);
    if gcd(r1, r2) != 1 || a1 >= r1 || a2 >= r2 {
        return None;
    }
    let x0 = crt_integer(&[a1, a2], &[r1, r2]).ok()?;
    let lcm = r1 * r2;
    let n = cfg.max_fold_index_n as u64;
    let mut out = Vec::new();
    let mut x = x0;
    loop {
        let (k1, k2) = ((x - a1) / r1, (x - a2) / r2);
        if k1 > n || k2 > n {
            break;
        }
        out.push(Candidate {
            k1: k1 as u32,
            k2: k2 as u32,
            f1: x as f64,
            f2: x as f64,
            residual: 0.0,
        });
        x += lcm;
    }
    Some(out)
}

fn search_candidates(a1: f64, a2: f64, cfg: &DealiasConfig) -> Vec<Candidate> {
    let (r1, r2, tol) = (cfg.rate1_hz, cfg.rate2_hz, cfg.freq_match_tol_hz);
    let n = cfg.max_fold_index_n as i64;
    let mut out = Vec::new();
    for k1 in 0..=n {
        let f1 = k1 as f64 * r1 + a1;
        // every k2 whose reconstruction can fall within tol of f1
        let lo = (((f1 - tol - a2) / r2).ceil() as i64).max(0);
        let hi = (((f1 + tol - a2) / r2).floor() as i64).min(n);
        for k2 in lo..=hi {
            let f2 = k2 as f64 * r2 + a2;
            let residual = (f1 - f2).abs();
            if residual <= tol {
                out.push(Candidate {
                    k1: k1 as u32,
                    k2: k2 as u32,
                    f1,
                    f2,
                    residual,
                });
            }
        }
    }
    out
}

/// Unfolds one paired component to its true frequency.
///
/// Among all `(k1, k2) ∈ [0, n]²` whose reconstructions agree within
/// `freq_match_tol_hz`, the one with the smallest residual wins (ties go to
/// the lower frequency). Two candidates further apart than the tolerance
/// make the pair ambiguous.
pub fn resolve_frequency(pair: &PairedComponent, cfg: &DealiasConfig) -> Result<ResolvedTone> {
    cfg.validate()?;
    let (a1, a2) = (pair.chan1.alias_freq_hz, pair.chan2.alias_freq_hz);
    if !(a1 >= 0.0 && a1 < cfg.rate1_hz) || !(a2 >= 0.0 && a2 < cfg.rate2_hz) {
        return Err(Error::InvalidComponent(format!(
            "aliases ({a1}, {a2}) outside [0, rate)"
        )));
    }
    let candidates =
        exact_candidates(a1, a2, cfg).unwrap_or_else(|| search_candidates(a1, a2, cfg));

    let best = candidates
        .iter()
        .min_by(|x, y| {
            x.residual
                .total_cmp(&y.residual)
                .then(x.freq().total_cmp(&y.freq()))
        })
        .copied()
        .ok_or(Error::NoCandidate {
            tol_hz: cfg.freq_match_tol_hz,
        })?;
    if let Some(other) = candidates
        .iter()
        .filter(|c| (c.freq() - best.freq()).abs() > cfg.freq_match_tol_hz)
        .min_by(|x, y| x.freq().total_cmp(&y.freq()))
    {
        let (lo, hi) = if other.freq() < best.freq() {
            (other.freq(), best.freq())
        } else {
            (best.freq(), other.freq())
        };
        return Err(Error::Ambiguous {
            first_hz: lo,
            second_hz: hi,
        });
    }

    let (p1, p2) = (pair.chan1.phase_rad, pair.chan2.phase_rad);
    Ok(ResolvedTone {
        freq_hz: best.freq(),
        amplitude: 0.5 * (pair.chan1.amplitude + pair.chan2.amplitude),
        phase_rad: canonical_phase(p1 + 0.5 * wrap_phase_diff(p2 - p1)),
        k1: best.k1,
        k2: best.k2,
        residual_hz: best.residual,
    })
}

/// Resolves a pair with the channels swapped; used to check symmetry.
pub fn resolve_swapped(pair: &PairedComponent, cfg: &DealiasConfig) -> Result<ResolvedTone> {
    let swapped = PairedComponent {
        chan1: pair.chan2,
        chan2: pair.chan1,
        match_cost: pair.match_cost,
    };
    resolve_frequency(&swapped, &cfg.swapped())
}

pub fn gcd(mut a: u64, mut b: u64) -> u64 {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Returns `(g, x, y)` with `a·x + b·y = g = gcd(a, b)`.
fn extended_gcd(a: i128, b: i128) -> (i128, i128, i128) {
    let (mut old_r, mut r) = (a, b);
    let (mut old_s, mut s) = (1i128, 0i128);
    let (mut old_t, mut t) = (0i128, 1i128);
    while r != 0 {
        let q = old_r / r;
        (old_r, r) = (r, old_r - q * r);
        (old_s, s) = (s, old_s - q * s);
        (old_t, t) = (t, old_t - q * t);
    }
    (old_r, old_s, old_t)
}

/// Unique `x ∈ [0, Π moduli)` with `x ≡ residues[i] (mod moduli[i])`.
///
/// Moduli must be pairwise coprime and the product must fit in a `u64`.
pub fn crt_integer(residues: &[u64], moduli: &[u64]) -> Result<u64> {
    if residues.len() != moduli.len() {
        return Err(Error::Precondition(format!(
            "{} residues for {} moduli",
            residues.len(),
            moduli.len()
        )));
    }
    for (i, (&r, &m)) in residues.iter().zip(moduli).enumerate() {
        if m == 0 {
            return Err(Error::Precondition(format!("modulus #{i} is zero")));
        }
        if r >= m {
            return Err(Error::Precondition(format!("residue {r} not below modulus {m}")));
        }
        for &m2 in &moduli[i + 1..] {
            if gcd(m, m2) != 1 {
                return Err(Error::Precondition(format!("moduli {m} and {m2} are not coprime")));
            }
        }
    }
    let mut x: i128 = 0;
    let mut modulus: i128 = 1;
    for (&r, &m) in residues.iter().zip(moduli) {
        let m = m as i128;
        // solve x + modulus·t ≡ r (mod m)
        let (_, inv, _) = extended_gcd(modulus.rem_euclid(m), m);
        let t = ((r as i128 - x).rem_euclid(m) * inv.rem_euclid(m)).rem_euclid(m);
        x += modulus * t;
        modulus = modulus
            .checked_mul(m)
            .filter(|&p| p <= u64::MAX as i128)
            .ok_or_else(|| Error::Precondition("product of moduli overflows u64".into()))?;
    }
    Ok(x as u64)
}

/// Smallest power-of-ten grid step (down to 1e-9 Hz) on which both rates are
/// integers, or `None` if there is none.
pub fn common_grid_step(rate1_hz: f64, rate2_hz: f64) -> Option<f64> {
    (0..=9).find_map(|p| {
        let scale = 10f64.powi(p);
        let (s1, s2) = (rate1_hz * scale, rate2_hz * scale);
        let near = |x: f64| (x - x.round()).abs() <= 1e-9 * x.abs().max(1.0);
        (near(s1) && near(s2)).then_some(1.0 / scale)
    })
}

/// Length of the interval `[0, R)` on which the residue pair identifies a
/// frequency uniquely, measured on the given grid step.
pub fn unambiguous_range_on_grid(rate1_hz: f64, rate2_hz: f64, step_hz: f64) -> f64 {
    let a = (rate1_hz / step_hz).round() as u64;
    let b = (rate2_hz / step_hz).round() as u64;
    let lcm = a / gcd(a, b) * b;
    lcm as f64 * step_hz
}

/// `lcm(rate1, rate2)` for integer rates. Non-integer rates are scaled by
/// the coarsest decimal grid step that makes both integral; rates with no
/// such step give `+∞`.
pub fn unambiguous_range(rate1_hz: f64, rate2_hz: f64) -> f64 {
    match common_grid_step(rate1_hz, rate2_hz) {
        Some(step) => unambiguous_range_on_grid(rate1_hz, rate2_hz, step),
        None => f64::INFINITY,
    }
}
