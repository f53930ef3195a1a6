//! Matched-filter receiver and the effective channel it sees.
//!
//! The received waveform is filtered with a(−t), sampled at
//! `t = τ_1 + (k' − D)·T/N` and, after the prefix is dropped, mapped to the
//! chirp domain. The lead `D` moves part of the acausal side of the
//! ambiguity function into non-negative tap indices, so that
//!
//! ```text
//! y[k'] = Σ_{l<L} h[k', l]·x[k' − l]
//! h[k', l] = Σ_p h_p·exp(j2πν_p((k' − D)·Ts − τ̃_p))·A((l − D)·Ts − τ̃_p, −ν_p)
//! ```
//!
//! with τ̃_p = τ_p − τ_1 and A the auto-ambiguity function of the pulse.
//! Negative indices of `x` are served by the chirp-periodic prefix, which
//! folds the tap grid into an N×N matrix.

use std::path::Path;

use num_complex::Complex64;

use crate::channel::DDChannel;
use crate::csvio::{sci, write_records};
use crate::error::{Error, Result};
use crate::linalg::{cis_cycles, CMatrix};
use crate::transforms::{ChirpConfig, DaftPlan};
use crate::waveform::{check_same_rate, shape, SrrcFilter, Waveform};

const ZERO: Complex64 = Complex64::new(0.0, 0.0);

/// Tolerance, in fine samples, for treating a lag as lying on the tap grid.
const GRID_TOL: f64 = 1e-6;

/// Evaluates A(τ, ν) = ∫ a(t)·a(t − τ)·exp(−j2πν(t − τ)) dt for a real pulse.
///
/// On-grid lags are summed over the filter taps directly; any other lag, or
/// a resolution above one, uses the continuous pulse on a grid refined by
/// `resolution`.
#[derive(Clone, Copy, Debug)]
pub struct AmbiguityEvaluator<'a> {
    filt: &'a SrrcFilter,
    resolution: usize,
}

impl<'a> AmbiguityEvaluator<'a> {
    pub fn new(filt: &'a SrrcFilter) -> Self {
        AmbiguityEvaluator { filt, resolution: 1 }
    }

    pub fn with_resolution(filt: &'a SrrcFilter, resolution: usize) -> Result<Self> {
        if resolution == 0 {
            return Err(Error::out_of_range("quadrature resolution", "must be at least 1"));
        }
        Ok(AmbiguityEvaluator { filt, resolution })
    }

    pub fn filter(&self) -> &SrrcFilter {
        self.filt
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    /// Largest |τ| with a nonzero value: the full filter span Q·Ts.
    pub fn support(&self) -> f64 {
        2.0 * self.filt.half_support()
    }

    pub fn eval(&self, tau: f64, nu: f64) -> Complex64 {
        let dt = self.filt.dt();
        let m = tau / dt;
        let mr = m.round();
        if tau.abs() > self.support() * (1.0 + 1e-12) {
            return ZERO;
        }
        if self.resolution == 1 && (m - mr).abs() <= GRID_TOL {
            return self.eval_lag(mr as i64, nu);
        }
        self.eval_refined(tau, nu)
    }

    /// A(m·dt, ν) summed over the taps.
    pub fn eval_lag(&self, m: i64, nu: f64) -> Complex64 {
        let taps = self.filt.taps();
        let len = taps.len() as i64;
        if m.abs() >= len {
            return ZERO;
        }
        let dt = self.filt.dt();
        let c = self.filt.center() as i64;
        let mut acc = ZERO;
        for i in m.max(0)..len.min(len + m) {
            let w = taps[i as usize] * taps[(i - m) as usize];
            // t_i − τ = (i − c − m)·dt
            acc += cis_cycles(-nu * (i - c - m) as f64 * dt) * w;
        }
        acc * dt
    }

    fn eval_refined(&self, tau: f64, nu: f64) -> Complex64 {
        let h = self.filt.dt() / self.resolution as f64;
        let half = self.filt.half_support();
        let count = self.filt.taps().len().saturating_sub(1) * self.resolution + 1;
        let mut acc = ZERO;
        for i in 0..count {
            let t = -half + i as f64 * h;
            let b = self.filt.eval(t - tau);
            if b != 0.0 {
                acc += cis_cycles(-nu * (t - tau)) * (self.filt.eval(t) * b);
            }
        }
        acc * h
    }
}

/// A(τ, ν) at the default (tap-grid) resolution; exactly zero beyond the
/// filter span.
pub fn cross_ambiguity(filt: &SrrcFilter, tau: f64, nu: f64) -> Complex64 {
    AmbiguityEvaluator::new(filt).eval(tau, nu)
}

/// Effective matched-filter taps h[k', l] for k' < N and l < L.
#[derive(Clone, Debug, PartialEq)]
pub struct TapGrid {
    taps: Vec<Complex64>,
    n: usize,
    support: usize,
    lead: usize,
    tau1: f64,
}

impl TapGrid {
    /// Wraps row-major taps (`n` rows of `support` entries).
    pub fn new(n: usize, support: usize, lead: usize, tau1: f64, taps: Vec<Complex64>) -> Result<Self> {
        if support == 0 {
            return Err(Error::out_of_range("tap support", "L must be at least 1"));
        }
        if taps.len() != n * support {
            return Err(Error::LengthMismatch { expected: n * support, got: taps.len() });
        }
        if taps.iter().any(|h| !(h.re.is_finite() && h.im.is_finite())) {
            return Err(Error::out_of_range("tap value", "non-finite entry"));
        }
        Ok(TapGrid { taps, n, support, lead, tau1 })
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// L.
    pub fn support(&self) -> usize {
        self.support
    }

    /// D, in base intervals.
    pub fn lead(&self) -> usize {
        self.lead
    }

    pub fn tau1(&self) -> f64 {
        self.tau1
    }

    pub fn get(&self, k: usize, l: usize) -> Complex64 {
        self.taps[k * self.support + l]
    }

    pub fn row(&self, k: usize) -> &[Complex64] {
        &self.taps[k * self.support..(k + 1) * self.support]
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.taps
    }

    /// max over (k', l) of |h[k', l] − h[0, l]|; zero for a time-invariant
    /// channel.
    pub fn max_row_variation(&self) -> f64 {
        let first = self.row(0);
        (1..self.n)
            .flat_map(|k| self.row(k).iter().zip(first).map(|(a, b)| (a - b).norm()))
            .fold(0.0, f64::max)
    }

    /// y[k'] = Σ_l h[k', l]·x̄[k' − l], where x̄ extends `x` to negative
    /// indices by the chirp-periodic prefix. Equals `fold_cpp_taps(..)·x`.
    pub fn apply_folded(&self, cfg: &ChirpConfig, x: &[Complex64]) -> Result<Vec<Complex64>> {
        cfg.check_len(x.len())?;
        check_fold(cfg, self.support, self.support)?;
        let n = self.n;
        let prefix: Vec<Complex64> = (1..self.support)
            .map(|back| x[n - back] * cpp_phase(cfg, -(back as i64)))
            .collect();
        Ok((0..n)
            .map(|k| {
                self.row(k)
                    .iter()
                    .enumerate()
                    .map(|(l, h)| if l <= k { h * x[k - l] } else { h * prefix[l - k - 1] })
                    .sum()
            })
            .collect())
    }
}

/// Lead D = Q/2 base intervals.
pub fn default_lead(filt: &SrrcFilter) -> usize {
    filt.span() / 2
}

/// L = ⌈τ̃_P·N/T⌉ + Q + 1.
pub fn default_tap_support(cfg: &ChirpConfig, ch: &DDChannel, filt: &SrrcFilter) -> usize {
    let spread = ch.delay_spread() / cfg.sample_period();
    (spread - 1e-9).ceil().max(0.0) as usize + filt.span() + 1
}

/// Effective taps with the default lead.
pub fn effective_taps(cfg: &ChirpConfig, ch: &DDChannel, filt: &SrrcFilter, support: usize) -> Result<TapGrid> {
    effective_taps_with_lead(cfg, ch, filt, support, default_lead(filt))
}

/// Effective taps h[k', l] with sampling reference τ_1 (the first path) and
/// lead `lead`. Every path's main lobe must fall inside the grid.
pub fn effective_taps_with_lead(
    cfg: &ChirpConfig,
    ch: &DDChannel,
    filt: &SrrcFilter,
    support: usize,
    lead: usize,
) -> Result<TapGrid> {
    let ts = cfg.sample_period();
    check_same_rate(filt.symbol_period(), ts)?;
    let rel = ch.relative_delays();
    let last = rel.iter().fold(0.0f64, |m, &d| m.max(d));
    let need = (last / ts).round() as usize + lead + 1;
    if support < need {
        return Err(Error::out_of_range(
            "tap support",
            format!("L = {support} does not cover the delay spread and lead (needs at least {need})"),
        ));
    }
    let amb = AmbiguityEvaluator::new(filt);
    let n = cfg.n();
    let d = lead as f64;
    // A((l − D)Ts − τ̃_p, −ν_p), one row per path.
    let lobes: Vec<Vec<Complex64>> = ch
        .paths()
        .iter()
        .zip(&rel)
        .map(|(p, &tr)| (0..support).map(|l| amb.eval((l as f64 - d) * ts - tr, -p.doppler)).collect())
        .collect();
    let mut taps = vec![ZERO; n * support];
    for (p, (lobe, &tr)) in ch.paths().iter().zip(lobes.iter().zip(&rel)) {
        for k in 0..n {
            let w = p.gain * cis_cycles(p.doppler * ((k as f64 - d) * ts - tr));
            for (h, a) in taps[k * support..(k + 1) * support].iter_mut().zip(lobe) {
                *h += w * a;
            }
        }
    }
    TapGrid::new(n, support, lead, ch.tau1(), taps)
}

/// Convolution with a*(−t) = a(t) on the fine grid. The output starts
/// Q·Ts/2 before the input.
pub fn matched_filter(wf: &Waveform, filt: &SrrcFilter) -> Result<Waveform> {
    check_same_rate(wf.sample_rate, filt.sample_rate())?;
    let taps = filt.taps();
    let dt = wf.dt();
    let len = if wf.is_empty() { 0 } else { wf.len() + taps.len() - 1 };
    let mut out = vec![ZERO; len];
    for (j, y) in wf.samples.iter().enumerate() {
        if *y == ZERO {
            continue;
        }
        let y = y * dt;
        for (o, a) in out[j..j + taps.len()].iter_mut().zip(taps) {
            *o += y * a;
        }
    }
    Ok(Waveform::new(out, wf.sample_rate, wf.t0 - filt.half_support()))
}

/// y[k'] = wf(τ_1 + k'·T/N) for k' < count.
pub fn sample_base_rate(wf: &Waveform, cfg: &ChirpConfig, tau1: f64, count: usize) -> Result<Vec<Complex64>> {
    let ts = cfg.sample_period();
    (0..count)
        .map(|k| {
            let t = tau1 + k as f64 * ts;
            wf.index_at(t).map(|i| wf.samples[i]).ok_or(Error::OffGrid(t))
        })
        .collect()
}

/// [`matched_filter`] followed by [`sample_base_rate`], evaluating only the
/// requested outputs. Input samples outside the span count as zero.
pub fn matched_filter_samples(
    wf: &Waveform,
    filt: &SrrcFilter,
    cfg: &ChirpConfig,
    tau1: f64,
    count: usize,
) -> Result<Vec<Complex64>> {
    check_same_rate(wf.sample_rate, filt.sample_rate())?;
    let taps = filt.taps();
    let c = filt.center() as i64;
    let dt = wf.dt();
    let ts = cfg.sample_period();
    let len = wf.len() as i64;
    (0..count)
        .map(|k| {
            let t = tau1 + k as f64 * ts;
            let pos = (t - wf.t0) * wf.sample_rate;
            let idx = pos.round();
            if (pos - idx).abs() > GRID_TOL {
                return Err(Error::OffGrid(t));
            }
            let centre = idx as i64;
            let lo = (centre - c).max(0);
            let hi = (centre + c + 1).min(len);
            let mut acc = ZERO;
            for j in lo..hi {
                acc += wf.samples[j as usize] * taps[(j - centre + c) as usize];
            }
            Ok(acc * dt)
        })
        .collect()
}

fn check_fold(cfg: &ChirpConfig, support: usize, prefix: usize) -> Result<()> {
    if support > prefix {
        return Err(Error::PrefixTooShort { taps: support, prefix });
    }
    if support > cfg.n() {
        return Err(Error::out_of_range("tap support", format!("L = {support} exceeds N = {}", cfg.n())));
    }
    Ok(())
}

/// Prefix factor for index m < 0: x[m] = x[N + m]·exp(−j2πc1(N² + 2N·m)).
fn cpp_phase(cfg: &ChirpConfig, m: i64) -> Complex64 {
    let n = cfg.n() as f64;
    cis_cycles(-cfg.c1() * (n * n + 2.0 * n * m as f64))
}

/// Folds the tap grid into the N×N time-domain matrix H^MF, using a prefix
/// of `prefix_len` samples.
pub fn fold_cpp_taps(cfg: &ChirpConfig, grid: &TapGrid, prefix_len: usize) -> Result<CMatrix> {
    check_fold(cfg, grid.support(), prefix_len)?;
    let n = cfg.n();
    let mut h = CMatrix::zeros(n, n);
    for k in 0..n {
        for (l, v) in grid.row(k).iter().enumerate() {
            if l <= k {
                h[(k, k - l)] += v;
            } else {
                h[(k, n + k - l)] += v * cpp_phase(cfg, k as i64 - l as i64);
            }
        }
    }
    Ok(h)
}

/// A·H·Aᴴ, one column at a time through the fast transforms.
pub fn daft_domain(cfg: &ChirpConfig, h: &CMatrix) -> Result<CMatrix> {
    let n = cfg.n();
    if h.rows() != n || h.cols() != n {
        return Err(Error::LengthMismatch { expected: n, got: h.rows() });
    }
    let plan = DaftPlan::new(cfg);
    // Channel matrices are banded, so only the nonzeros are visited.
    let nz: Vec<Vec<(usize, Complex64)>> = (0..n)
        .map(|r| h.row(r).iter().copied().enumerate().filter(|(_, v)| *v != ZERO).collect())
        .collect();
    let mut out = CMatrix::zeros(n, n);
    let mut e = vec![ZERO; n];
    let mut hx = vec![ZERO; n];
    for col in 0..n {
        e.fill(ZERO);
        e[col] = Complex64::new(1.0, 0.0);
        let x = plan.modulate(&e)?;
        for (v, row) in hx.iter_mut().zip(&nz) {
            *v = row.iter().map(|&(c, h)| h * x[c]).sum();
        }
        let y = plan.demodulate(&hx)?;
        for (row, v) in y.into_iter().enumerate() {
            out[(row, col)] = v;
        }
    }
    Ok(out)
}

/// Entry-wise evaluation of H_u^MF straight from the tap grid:
///
/// ```text
/// [H_u]_{n',n} = (1/N)·e^{j2πc2(n² − n'²)} Σ_{k',l} h[k',l]·e^{j2πc1((k'−l)² − k'²)}·e^{j2π((k'−l)n − k'n')/N}
/// ```
///
/// The sum over k' is an inverse DFT in n − n', so the cost is O(N²·L).
pub fn hu_entry_formula(cfg: &ChirpConfig, grid: &TapGrid) -> Result<CMatrix> {
    let n = cfg.n();
    if grid.n() != n {
        return Err(Error::LengthMismatch { expected: n, got: grid.n() });
    }
    let ll = grid.support();
    let mut planner = rustfft::FftPlanner::new();
    let ifft = planner.plan_fft_inverse(n);
    // g[l][m] = Σ_k' h[k',l]·e^{j2πc1((k'−l)² − k'²)}·e^{j2πk'm/N}
    let mut g = vec![ZERO; ll * n];
    for l in 0..ll {
        let row = &mut g[l * n..(l + 1) * n];
        for (k, v) in row.iter_mut().enumerate() {
            let d = k as f64 - l as f64;
            let kf = k as f64;
            *v = grid.get(k, l) * cis_cycles(cfg.c1() * (d * d - kf * kf));
        }
        ifft.process(row);
    }
    let lin: Vec<Complex64> = (0..n).map(|i| cis_cycles(-(i as f64) / n as f64)).collect();
    let chirp: Vec<Complex64> = (0..n).map(|i| cis_cycles(cfg.c2() * (i * i) as f64)).collect();
    let inv_n = 1.0 / n as f64;
    Ok(CMatrix::from_fn(n, n, |np, nn| {
        let m = (nn + n - np) % n;
        let mut acc = ZERO;
        for l in 0..ll {
            acc += lin[(l * nn) % n] * g[l * n + m];
        }
        acc * chirp[nn] * chirp[np].conj() * inv_n
    }))
}

/// The chirp-domain effective channel seen through the matched filter.
#[derive(Clone, Debug)]
pub struct EffectiveChannel {
    pub h_mf: CMatrix,
    pub hu_mf: CMatrix,
    pub prefix_len: usize,
    /// max |product path − entry formula| found while building.
    pub path_gap: f64,
}

impl EffectiveChannel {
    pub fn n(&self) -> usize {
        self.h_mf.rows()
    }
}

/// Folds the taps, computes H_u^MF through A·H^MF·Aᴴ and through the entry
/// formula, and fails if the two disagree.
pub fn build_hu_mf(cfg: &ChirpConfig, grid: &TapGrid, prefix_len: usize) -> Result<EffectiveChannel> {
    let h_mf = fold_cpp_taps(cfg, grid, prefix_len)?;
    let hu_mf = daft_domain(cfg, &h_mf)?;
    let direct = hu_entry_formula(cfg, grid)?;
    let path_gap = hu_mf.max_abs_diff(&direct);
    let scale = grid.as_slice().iter().map(|h| h.norm()).fold(1.0, f64::max);
    if path_gap.is_nan() || path_gap > 1e-9 * scale {
        return Err(Error::Consistency(format!(
            "DAFT-domain channel: product and entry-formula paths differ by {path_gap:e}"
        )));
    }
    Ok(EffectiveChannel { h_mf, hu_mf, prefix_len, path_gap })
}

/// One path of the sample-spaced model: integer delay and Doppler in
/// cycles per base interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BaselinePath {
    pub gain: Complex64,
    pub delay: usize,
    pub doppler: f64,
}

/// H = Σ_p h_p·Γ_p·Δ_{ν_p}·Π^{l_p} and its chirp-domain image.
#[derive(Clone, Debug)]
pub struct BaselineChannel {
    pub h: CMatrix,
    pub hu: CMatrix,
}

impl BaselinePath {
    /// Converts a channel whose relative delays sit on the T/N grid.
    pub fn from_channel(cfg: &ChirpConfig, ch: &DDChannel) -> Result<Vec<BaselinePath>> {
        let ts = cfg.sample_period();
        ch.paths()
            .iter()
            .zip(ch.relative_delays())
            .map(|(p, tr)| {
                let l = tr / ts;
                if (l - l.round()).abs() > 1e-6 {
                    return Err(Error::OffGrid(tr));
                }
                Ok(BaselinePath { gain: p.gain, delay: l.round() as usize, doppler: p.doppler * ts })
            })
            .collect()
    }
}

pub fn build_baseline(cfg: &ChirpConfig, paths: &[BaselinePath]) -> Result<BaselineChannel> {
    let n = cfg.n();
    let nf = n as f64;
    let mut h = CMatrix::zeros(n, n);
    for p in paths {
        if p.delay >= n {
            return Err(Error::out_of_range("path delay", format!("l = {} not below N = {n}", p.delay)));
        }
        let l = p.delay;
        for row in 0..n {
            let gamma = if row < l {
                cis_cycles(-cfg.c1() * (nf * nf - 2.0 * nf * (l - row) as f64))
            } else {
                Complex64::new(1.0, 0.0)
            };
            h[(row, (row + n - l) % n)] += p.gain * gamma * cis_cycles(p.doppler * row as f64);
        }
    }
    let hu = daft_domain(cfg, &h)?;
    Ok(BaselineChannel { h, hu })
}

/// ‖a − b‖_F / ‖b‖_F.
pub fn relative_gap(a: &CMatrix, b: &CMatrix) -> f64 {
    a.sub(b).frobenius_norm() / b.frobenius_norm()
}

/// Chirp-domain outputs as N correlations of `wf` against the shaped chirps
/// φ_n^(a)(t) = Σ_k e^{j2π(c1k² + nk/N)}·a(t − τ_1 − k·T/N), scaled by
/// e^{−j2πc2n²}/√N.
pub fn correlator_receive(wf: &Waveform, cfg: &ChirpConfig, filt: &SrrcFilter, tau1: f64) -> Result<Vec<Complex64>> {
    check_same_rate(wf.sample_rate, filt.sample_rate())?;
    let n = cfg.n();
    let first = tau1 - filt.half_support();
    let last = tau1 + (n - 1) as f64 * cfg.sample_period() + filt.half_support();
    let slack = 1e-6 * wf.dt();
    if first < wf.t0 - slack || last > wf.t0 + (wf.len() as f64 - 1.0) * wf.dt() + slack {
        return Err(Error::out_of_range(
            "receive window",
            format!("[{first:e}, {last:e}] s not covered by the waveform"),
        ));
    }
    let scale = 1.0 / (n as f64).sqrt();
    (0..n)
        .map(|m| {
            let seq: Vec<Complex64> = (0..n)
                .map(|k| cis_cycles(cfg.c1() * (k * k) as f64 + ((m * k) % n) as f64 / n as f64))
                .collect();
            let phi = shape(cfg, &seq, filt)?.delayed_label(tau1);
            Ok(wf.inner(&phi)? * cis_cycles(-cfg.c2() * (m * m) as f64) * scale)
        })
        .collect()
}

/// Writes a matrix as `row,col,re,im` records.
pub fn write_matrix_csv(m: &CMatrix, path: &Path) -> Result<()> {
    let rows = (0..m.rows()).flat_map(|r| {
        (0..m.cols()).map(move |c| vec![r.to_string(), c.to_string(), sci(m[(r, c)].re), sci(m[(r, c)].im)])
    });
    write_records(path, &["row", "col", "re", "im"], rows)
}
