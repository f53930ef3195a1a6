//! Continuous-time emulation of chirp waveforms.
//!
//! Continuous time is represented on a fine grid of `O` samples per base
//! interval Δt = T/N. Integrals over a [`Waveform`] are Riemann sums on that
//! grid, which is exact for the band-limited products used here once `O`
//! comfortably exceeds the occupied bandwidth.
//!
//! Two waveforms live here: the ideal chirp waveform built from the basis
//! `φ_n(t) = Π_T(t)·exp(j2π c1 N² (t/T)²)·exp(j2π n t/T)`, and the implemented
//! one obtained by sample-wise SRRC shaping of the discrete sequence.

use std::f64::consts::PI;

use num_complex::Complex64;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::linalg::{cis_cycles, wrap};
use crate::transforms::ChirpConfig;

/// Default fine-grid oversampling factor for continuous-time emulation.
pub const DEFAULT_OVERSAMPLE: usize = 16;

/// A uniformly sampled complex baseband signal.
#[derive(Clone, Debug, PartialEq)]
pub struct Waveform {
    pub samples: Vec<Complex64>,
    /// Samples per second.
    pub sample_rate: f64,
    /// Time of `samples[0]` in seconds.
    pub t0: f64,
}

impl Waveform {
    pub fn new(samples: Vec<Complex64>, sample_rate: f64, t0: f64) -> Self {
        Waveform { samples, sample_rate, t0 }
    }

    pub fn zeros(len: usize, sample_rate: f64, t0: f64) -> Self {
        Waveform { samples: vec![Complex64::new(0.0, 0.0); len], sample_rate, t0 }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn dt(&self) -> f64 {
        1.0 / self.sample_rate
    }

    pub fn time(&self, i: usize) -> f64 {
        self.t0 + i as f64 / self.sample_rate
    }

    pub fn duration(&self) -> f64 {
        self.len() as f64 / self.sample_rate
    }

    /// Index of the sample at time `t`, if `t` falls on the grid (within
    /// 1e-6 of a sample period) and inside the span.
    pub fn index_at(&self, t: f64) -> Option<usize> {
        let pos = (t - self.t0) * self.sample_rate;
        let idx = pos.round();
        if (pos - idx).abs() > 1e-6 || idx < 0.0 || idx >= self.len() as f64 {
            return None;
        }
        Some(idx as usize)
    }

    /// ∫|x(t)|² dt as a Riemann sum.
    pub fn energy(&self) -> f64 {
        self.samples.iter().map(|z| z.norm_sqr()).sum::<f64>() * self.dt()
    }

    /// ⟨self, other⟩ = ∫ self(t)·other*(t) dt over the common span. Both
    /// waveforms must share the sample grid.
    pub fn inner(&self, other: &Waveform) -> Result<Complex64> {
        check_same_rate(self.sample_rate, other.sample_rate)?;
        let shift = ((other.t0 - self.t0) * self.sample_rate).round() as i64;
        let mut acc = Complex64::new(0.0, 0.0);
        for (j, b) in other.samples.iter().enumerate() {
            let i = j as i64 + shift;
            if i >= 0 && (i as usize) < self.len() {
                acc += self.samples[i as usize] * b.conj();
            }
        }
        Ok(acc * self.dt())
    }

    /// Same samples re-labelled to start at `t0 + dt`.
    pub fn delayed_label(mut self, dt: f64) -> Self {
        self.t0 += dt;
        self
    }

    pub fn scale(&mut self, k: Complex64) {
        for s in &mut self.samples {
            *s *= k;
        }
    }
}

pub(crate) fn check_same_rate(a: f64, b: f64) -> Result<()> {
    if ((a - b) / a).abs() > 1e-9 {
        return Err(Error::RateMismatch(format!("{a} Hz vs {b} Hz")));
    }
    Ok(())
}

/// Amplitude convention for the rectangular window Π_T.
///
/// `UnitAmplitude` gives ⟨φ_n, φ_n'⟩ = T·δ(n − n'); `UnitEnergy` scales the
/// window by 1/√T so that every basis function has unit energy.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RectScaling {
    #[default]
    UnitAmplitude,
    UnitEnergy,
}

impl RectScaling {
    pub fn amplitude(self, duration: f64) -> f64 {
        match self {
            RectScaling::UnitAmplitude => 1.0,
            RectScaling::UnitEnergy => 1.0 / duration.sqrt(),
        }
    }
}

/// Root chirp prototype g(t) = Π_T(t)·exp(j2π c1 N² (t/T)²).
#[derive(Clone, Copy, Debug)]
pub struct PrototypePulse {
    pub cfg: ChirpConfig,
    pub scaling: RectScaling,
}

impl PrototypePulse {
    pub fn new(cfg: ChirpConfig) -> Self {
        PrototypePulse { cfg, scaling: RectScaling::default() }
    }

    pub fn eval(&self, t: f64) -> Complex64 {
        let big_t = self.cfg.duration();
        if !(0.0..big_t).contains(&t) {
            return Complex64::new(0.0, 0.0);
        }
        let n = self.cfg.n() as f64;
        let u = t / big_t;
        cis_cycles(self.cfg.c1() * n * n * u * u) * self.scaling.amplitude(big_t)
    }
}

fn check_oversample(o: usize) -> Result<()> {
    if o == 0 {
        return Err(Error::out_of_range("oversampling factor", "must be at least 1"));
    }
    Ok(())
}

/// Phase of the root chirp at fine-grid index `i` with `o` samples per
/// base interval: c1·N²·(t/T)² = c1·(i/o)².
fn root_chirp(cfg: &ChirpConfig, i: usize, o: usize) -> Complex64 {
    let ii = (i as f64) * (i as f64);
    cis_cycles(wrap(cfg.c1() * ii / (o * o) as f64))
}

/// Basis function φ_n sampled at rate O·N/T on [0, T) with unit-amplitude Π_T.
pub fn ideal_basis(cfg: &ChirpConfig, n: usize, o: usize) -> Result<Waveform> {
    ideal_basis_scaled(cfg, n, o, RectScaling::UnitAmplitude)
}

pub fn ideal_basis_scaled(cfg: &ChirpConfig, n: usize, o: usize, scaling: RectScaling) -> Result<Waveform> {
    if n >= cfg.n() {
        return Err(Error::out_of_range("subcarrier index", format!("{n} not below N = {}", cfg.n())));
    }
    check_oversample(o)?;
    let len = cfg.n() * o;
    let amp = scaling.amplitude(cfg.duration());
    let samples = (0..len)
        .map(|i| {
            // n·t/T = n·i/(N·O)
            let lin = ((n * i) % len) as f64 / len as f64;
            root_chirp(cfg, i, o) * cis_cycles(lin) * amp
        })
        .collect();
    Ok(Waveform::new(samples, fine_rate(cfg, o), 0.0))
}

pub fn fine_rate(cfg: &ChirpConfig, o: usize) -> f64 {
    o as f64 / cfg.sample_period()
}

/// The ideal chirp waveform x(t) = Σ_n X[n]·φ̇_n(t) on [0, T), where
/// φ̇_n = N^{-1/2}·e^{j2π c2 n²}·φ_n. At `o = 1` the samples coincide with
/// the IDAFT output.
pub fn synth_ideal(cfg: &ChirpConfig, symbols: &[Complex64], o: usize) -> Result<Waveform> {
    cfg.check_len(symbols.len())?;
    check_oversample(o)?;
    let n = cfg.n();
    let len = n * o;
    let scale = 1.0 / (n as f64).sqrt();
    let mut buf = vec![Complex64::new(0.0, 0.0); len];
    for (m, (b, x)) in buf.iter_mut().zip(symbols).enumerate() {
        *b = x * cis_cycles(wrap(cfg.c2() * (m * m) as f64)) * scale;
    }
    FftPlanner::new().plan_fft_inverse(len).process(&mut buf);
    for (i, b) in buf.iter_mut().enumerate() {
        *b *= root_chirp(cfg, i, o);
    }
    Ok(Waveform::new(buf, fine_rate(cfg, o), 0.0))
}

/// Prepends the chirp-periodic prefix
/// `x[k] = x[N+k]·exp(−j2π c1 (N² + 2Nk))`, k = −L..−1.
pub fn add_cpp(cfg: &ChirpConfig, seq: &[Complex64], prefix_len: usize) -> Result<Vec<Complex64>> {
    cfg.check_len(seq.len())?;
    let n = cfg.n();
    if prefix_len == 0 || prefix_len >= n {
        return Err(Error::out_of_range("CPP length", format!("{prefix_len} not in [1, {n})")));
    }
    let mut out = Vec::with_capacity(n + prefix_len);
    for k in -(prefix_len as i64)..0 {
        let idx = (n as i64 + k) as usize;
        let m = (n * n) as f64 + 2.0 * n as f64 * k as f64;
        out.push(seq[idx] * cis_cycles(-wrap(cfg.c1() * m)));
    }
    out.extend_from_slice(seq);
    Ok(out)
}

/// Drops the first `prefix_len` entries.
pub fn strip_prefix(seq: &[Complex64], prefix_len: usize) -> &[Complex64] {
    &seq[prefix_len..]
}

/// Truncated, energy-normalized square-root raised cosine interpolation
/// filter sampled at `O` points per symbol period.
#[derive(Clone, Debug, PartialEq)]
pub struct SrrcFilter {
    beta: f64,
    span: usize,
    oversample: usize,
    symbol_period: f64,
    scale: f64,
    taps: Vec<f64>,
}

impl SrrcFilter {
    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Span Q in symbol periods.
    pub fn span(&self) -> usize {
        self.span
    }

    pub fn oversample(&self) -> usize {
        self.oversample
    }

    pub fn symbol_period(&self) -> f64 {
        self.symbol_period
    }

    pub fn sample_rate(&self) -> f64 {
        self.oversample as f64 / self.symbol_period
    }

    pub fn dt(&self) -> f64 {
        self.symbol_period / self.oversample as f64
    }

    /// Q·O + 1 taps; tap `i` sits at t = (i − Q·O/2)·dt.
    pub fn taps(&self) -> &[f64] {
        &self.taps
    }

    /// Index of the t = 0 tap.
    pub fn center(&self) -> usize {
        self.span * self.oversample / 2
    }

    /// Half support Q·Ts/2 in seconds.
    pub fn half_support(&self) -> f64 {
        self.span as f64 * self.symbol_period / 2.0
    }

    /// The truncated, normalized pulse a(t) at an arbitrary instant. Agrees
    /// with [`taps`](Self::taps) on the tap grid.
    pub fn eval(&self, t: f64) -> f64 {
        let x = t / self.symbol_period;
        if x.abs() > self.span as f64 / 2.0 + 1e-12 {
            return 0.0;
        }
        self.scale * srrc_shape(x, self.beta)
    }

    /// Σ|a|²·dt; one up to rounding.
    pub fn energy(&self) -> f64 {
        self.taps.iter().map(|a| a * a).sum::<f64>() * self.dt()
    }

    /// Discrete self-correlation R(m·dt) = Σ_i a_i·a_{i−m}·dt for m ≥ 0.
    pub fn self_correlation(&self, lag_samples: usize) -> f64 {
        if lag_samples >= self.taps.len() {
            return 0.0;
        }
        self.taps[lag_samples..].iter().zip(&self.taps).map(|(a, b)| a * b).sum::<f64>() * self.dt()
    }
}

/// Un-normalized SRRC impulse response at `x = t/Ts`, with the removable
/// singularities at x = 0 and |x| = 1/(4β) replaced by their limits.
pub fn srrc_shape(x: f64, beta: f64) -> f64 {
    if x.abs() < 1e-12 {
        return 1.0 - beta + 4.0 * beta / PI;
    }
    if beta > 0.0 && (x.abs() - 1.0 / (4.0 * beta)).abs() < 1e-9 {
        let a = PI / (4.0 * beta);
        return beta / 2f64.sqrt() * ((1.0 + 2.0 / PI) * a.sin() + (1.0 - 2.0 / PI) * a.cos());
    }
    let num = (PI * x * (1.0 - beta)).sin() + 4.0 * beta * x * (PI * x * (1.0 + beta)).cos();
    let den = PI * x * (1.0 - (4.0 * beta * x).powi(2));
    num / den
}

/// Designs a truncated SRRC filter with roll-off `beta`, span `q` symbol
/// periods of length `ts`, and `o` samples per symbol.
pub fn design_srrc(beta: f64, q: usize, o: usize, ts: f64) -> Result<SrrcFilter> {
    if !(0.0..=1.0).contains(&beta) {
        return Err(Error::InvalidFilter(format!("roll-off {beta} outside [0, 1]")));
    }
    if q < 2 || q % 2 != 0 {
        return Err(Error::InvalidFilter(format!("span {q} must be even and at least 2")));
    }
    if o < 2 {
        return Err(Error::InvalidFilter(format!("oversampling {o} must be at least 2")));
    }
    if !(ts.is_finite() && ts > 0.0) {
        return Err(Error::InvalidFilter(format!("symbol period {ts} must be positive")));
    }
    let c = (q * o / 2) as i64;
    let raw: Vec<f64> = (0..=(q * o) as i64)
        .map(|i| srrc_shape((i - c) as f64 / o as f64, beta))
        .collect();
    let dt = ts / o as f64;
    let scale = 1.0 / (raw.iter().map(|a| a * a).sum::<f64>() * dt).sqrt();
    let taps = raw.into_iter().map(|a| a * scale).collect();
    Ok(SrrcFilter { beta, span: q, oversample: o, symbol_period: ts, scale, taps })
}

/// Sample-wise pulse shaping x(t) = Σ_k seq[k]·a(t − k·T/N).
///
/// `seq[0]` sits at t = 0, so the output starts at −Q·T/(2N) and runs to
/// (len − 1 + Q/2)·T/N.
pub fn shape(cfg: &ChirpConfig, seq: &[Complex64], filt: &SrrcFilter) -> Result<Waveform> {
    let ts = cfg.sample_period();
    if ((filt.symbol_period() - ts) / ts).abs() > 1e-9 {
        return Err(Error::RateMismatch(format!(
            "filter symbol period {} s differs from T/N = {ts} s",
            filt.symbol_period()
        )));
    }
    let o = filt.oversample();
    let taps = filt.taps();
    let len = if seq.is_empty() { 0 } else { (seq.len() - 1) * o + taps.len() };
    let mut out = vec![Complex64::new(0.0, 0.0); len];
    for (k, s) in seq.iter().enumerate() {
        if *s == Complex64::new(0.0, 0.0) {
            continue;
        }
        for (o_s, a) in out[k * o..k * o + taps.len()].iter_mut().zip(taps) {
            *o_s += s * a;
        }
    }
    Ok(Waveform::new(out, filt.sample_rate(), -filt.half_support()))
}
