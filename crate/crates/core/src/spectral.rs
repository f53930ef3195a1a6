//! Power spectral density of chirp waveforms: the closed-form PS-OFDM
//! expression built on the root-chirp spectrum, and a Welch estimator for
//! simulated frames.

use std::f64::consts::PI;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;

use crate::csvio::{sci, write_records};
use crate::error::{Error, Result};
use crate::quadrature::integrate_adaptive;
use crate::transforms::ChirpConfig;
use crate::waveform::{check_same_rate, Waveform};

/// Welch segment length per unit of oversampling.
pub const WELCH_SEGMENT_PER_OVERSAMPLE: usize = 4096;

/// Default drop from the peak used to define occupied bandwidth.
pub const OCCUPIED_DROP_DB: f64 = 20.0;

/// A sampled PSD in power per hertz.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct PsdCurve {
    pub freq: Vec<f64>,
    pub psd: Vec<f64>,
    pub meta: Vec<(String, String)>,
}

impl PsdCurve {
    pub fn len(&self) -> usize {
        self.freq.len()
    }

    pub fn is_empty(&self) -> bool {
        self.freq.is_empty()
    }

    pub fn psd_db(&self) -> Vec<f64> {
        self.psd.iter().map(|&p| to_db(p)).collect()
    }

    pub fn peak(&self) -> f64 {
        self.psd.iter().copied().fold(0.0, f64::max)
    }

    /// Lower and upper band edges where the PSD first and last reaches
    /// `drop_db` below its peak, linearly interpolated between bins.
    pub fn occupied_band(&self, drop_db: f64) -> Option<(f64, f64)> {
        let thr = self.peak() * 10f64.powf(-drop_db / 10.0);
        let first = self.psd.iter().position(|&p| p >= thr)?;
        let last = self.psd.iter().rposition(|&p| p >= thr)?;
        let cross = |i: usize, j: usize| {
            let (pi, pj) = (self.psd[i], self.psd[j]);
            let w = if pj != pi { (thr - pi) / (pj - pi) } else { 0.0 };
            self.freq[i] + w * (self.freq[j] - self.freq[i])
        };
        let lo = if first > 0 { cross(first - 1, first) } else { self.freq[first] };
        let hi = if last + 1 < self.len() { cross(last + 1, last) } else { self.freq[last] };
        Some((lo, hi))
    }

    pub fn occupied_bandwidth(&self, drop_db: f64) -> Option<f64> {
        self.occupied_band(drop_db).map(|(lo, hi)| hi - lo)
    }

    /// Bins with `lo ≤ f ≤ hi`.
    pub fn restrict(&self, lo: f64, hi: f64) -> PsdCurve {
        let (freq, psd) = self
            .freq
            .iter()
            .zip(&self.psd)
            .filter(|(f, _)| (lo..=hi).contains(*f))
            .map(|(f, p)| (*f, *p))
            .unzip();
        PsdCurve { freq, psd, meta: self.meta.clone() }
    }

    /// Averages consecutive blocks of `block` bins; a trailing partial block
    /// is dropped.
    pub fn band_average(&self, block: usize) -> PsdCurve {
        let block = block.max(1);
        let avg = |v: &[f64]| v.chunks_exact(block).map(|c| c.iter().sum::<f64>() / block as f64).collect();
        PsdCurve { freq: avg(&self.freq), psd: avg(&self.psd), meta: self.meta.clone() }
    }

    /// Trapezoid integral of the PSD.
    pub fn total_power(&self) -> f64 {
        self.freq
            .windows(2)
            .zip(self.psd.windows(2))
            .map(|(f, p)| 0.5 * (p[0] + p[1]) * (f[1] - f[0]))
            .sum()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let rows = self.freq.iter().zip(&self.psd).map(|(f, p)| vec![sci(*f), sci(to_db(*p))]);
        write_records(path, &["freq_hz", "psd_db"], rows)
    }
}

pub fn to_db(p: f64) -> f64 {
    10.0 * p.max(1e-300).log10()
}

fn check_increasing(freqs: &[f64]) -> Result<()> {
    if freqs.iter().any(|f| !f.is_finite()) {
        return Err(Error::out_of_range("frequency", "non-finite value"));
    }
    if freqs.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::out_of_range("frequency grid", "must be strictly increasing"));
    }
    Ok(())
}

/// Root-chirp spectrum at a single frequency, in seconds:
/// G(f) = ∫_0^T exp(j2π c1 N² (t/T)²)·exp(−j2π f t) dt.
pub fn prototype_spectrum_at(cfg: &ChirpConfig, f: f64) -> Complex64 {
    let big_t = cfg.duration();
    let n = cfg.n() as f64;
    let alpha = cfg.c1() * n * n;
    let ft = f * big_t;
    // One initial panel per cycle of total phase excursion.
    let pieces = (alpha.abs() + ft.abs()).ceil() as usize + 1;
    let g = integrate_adaptive(
        |u| Complex64::from_polar(1.0, 2.0 * PI * (alpha * u * u - ft * u)),
        0.0,
        1.0,
        1e-8,
        pieces,
    );
    g * big_t
}

/// [`prototype_spectrum_at`] over a list of frequencies.
pub fn prototype_spectrum(cfg: &ChirpConfig, freqs: &[f64]) -> Result<Vec<Complex64>> {
    if freqs.iter().any(|f| !f.is_finite()) {
        return Err(Error::out_of_range("frequency", "non-finite value"));
    }
    Ok(freqs.par_iter().map(|&f| prototype_spectrum_at(cfg, f)).collect())
}

/// S(f) = σ²/(N·T)·Σ_{n=−N/2}^{N/2−1} |G(f − (n + N/2)/T)|².
///
/// Frequencies sharing the fractional part of f·T reuse the same comb of
/// G evaluations, so a uniform grid with spacing 1/(kT) costs about k times
/// the number of distinct comb points.
pub fn analytic_psd(cfg: &ChirpConfig, sigma2: f64, freqs: &[f64]) -> Result<PsdCurve> {
    check_increasing(freqs)?;
    if !(sigma2.is_finite() && sigma2 >= 0.0) {
        return Err(Error::out_of_range("symbol power", format!("{sigma2}")));
    }
    let big_t = cfg.duration();
    let n = cfg.n() as i64;

    // Group by the comb phase φ = frac(f·T).
    let mut groups: std::collections::BTreeMap<i64, Vec<(usize, i64)>> = Default::default();
    let mut phases = std::collections::BTreeMap::new();
    for (idx, &f) in freqs.iter().enumerate() {
        let x = f * big_t;
        let i0 = x.floor();
        let phi = x - i0;
        let key = (phi * (1u64 << 40) as f64).round() as i64;
        phases.entry(key).or_insert(phi);
        groups.entry(key).or_default().push((idx, i0 as i64));
    }

    let mut psd = vec![0.0; freqs.len()];
    for (key, members) in groups {
        let phi = phases[&key];
        // Needed comb indices: i0 − m for m = 0..N−1, merged into ranges.
        let mut ranges: Vec<(i64, i64)> = members.iter().map(|&(_, i0)| (i0 - (n - 1), i0)).collect();
        ranges.sort_unstable();
        let mut merged: Vec<(i64, i64)> = Vec::new();
        for (lo, hi) in ranges {
            match merged.last_mut() {
                Some(last) if lo <= last.1 + 1 => last.1 = last.1.max(hi),
                _ => merged.push((lo, hi)),
            }
        }
        let points: Vec<i64> = merged.iter().flat_map(|&(lo, hi)| lo..=hi).collect();
        let power: Vec<f64> = points
            .par_iter()
            .map(|&i| prototype_spectrum_at(cfg, (i as f64 + phi) / big_t).norm_sqr())
            .collect();
        for (idx, i0) in members {
            // Merged ranges are contiguous in `points`, so the N comb values
            // for this frequency are adjacent.
            let start = points.binary_search(&(i0 - (n - 1))).expect("comb point computed");
            let s: f64 = power[start..start + n as usize].iter().sum();
            psd[idx] = sigma2 / (n as f64 * big_t) * s;
        }
    }
    Ok(PsdCurve {
        freq: freqs.to_vec(),
        psd,
        meta: vec![
            ("kind".into(), "analytic".into()),
            ("n".into(), cfg.n().to_string()),
            ("c1".into(), cfg.c1().to_string()),
            ("sigma2".into(), sigma2.to_string()),
        ],
    })
}

/// Closed-form bandwidth (2·c1·N² + N − 1)/T of the ideal waveform. Only
/// defined for c1 ≥ 0.
pub fn bandwidth_estimate(cfg: &ChirpConfig) -> Result<f64> {
    if cfg.c1() < 0.0 {
        return Err(Error::out_of_range(
            "c1",
            format!("{} is negative; the closed form is stated for c1 ≥ 0", cfg.c1()),
        ));
    }
    let n = cfg.n() as f64;
    Ok((2.0 * cfg.c1() * n * n + n - 1.0) / cfg.duration())
}

/// Frequency interval holding the ideal waveform's spectrum, from the chirp
/// sweep of the prototype and the subcarrier comb.
pub fn ideal_support(cfg: &ChirpConfig) -> (f64, f64) {
    let n = cfg.n() as f64;
    let sweep = 2.0 * cfg.c1() * n * n;
    (sweep.min(0.0) / cfg.duration(), (sweep.max(0.0) + n) / cfg.duration())
}

/// Welch estimate with a periodic Hann window and 50 % overlap.
///
/// The frames are treated as consecutive pieces of one stream. The result
/// is two-sided, ordered from −fs/2 and scaled to power per hertz, so a
/// white sequence of variance σ² gives σ²/fs.
pub fn empirical_psd(frames: &[Waveform], nfft: usize) -> Result<PsdCurve> {
    let first = frames.first().ok_or_else(|| Error::InvalidConfig("no frames for PSD estimate".into()))?;
    let fs = first.sample_rate;
    for f in frames {
        check_same_rate(fs, f.sample_rate)?;
    }
    let stream: Vec<Complex64> = frames.iter().flat_map(|f| f.samples.iter().copied()).collect();
    if nfft < 2 || stream.len() < nfft {
        return Err(Error::out_of_range(
            "Welch segment length",
            format!("{nfft} with {} samples available", stream.len()),
        ));
    }
    let window: Vec<f64> = (0..nfft).map(|i| 0.5 - 0.5 * (2.0 * PI * i as f64 / nfft as f64).cos()).collect();
    let wpow: f64 = window.iter().map(|w| w * w).sum();
    let step = nfft / 2;
    let segments = (stream.len() - nfft) / step + 1;
    let fft = FftPlanner::new().plan_fft_forward(nfft);
    let mut acc = vec![0.0; nfft];
    let mut buf = vec![Complex64::new(0.0, 0.0); nfft];
    for s in 0..segments {
        let seg = &stream[s * step..s * step + nfft];
        for ((b, x), w) in buf.iter_mut().zip(seg).zip(&window) {
            *b = x * w;
        }
        fft.process(&mut buf);
        for (a, b) in acc.iter_mut().zip(&buf) {
            *a += b.norm_sqr();
        }
    }
    let scale = 1.0 / (fs * wpow * segments as f64);
    let half = nfft / 2;
    let mut freq = Vec::with_capacity(nfft);
    let mut psd = Vec::with_capacity(nfft);
    for k in 0..nfft {
        let src = (k + nfft - half) % nfft;
        freq.push((k as f64 - half as f64) * fs / nfft as f64);
        psd.push(acc[src] * scale);
    }
    Ok(PsdCurve {
        freq,
        psd,
        meta: vec![
            ("kind".into(), "welch".into()),
            ("nfft".into(), nfft.to_string()),
            ("segments".into(), segments.to_string()),
        ],
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transforms::SymbolVector;
    use crate::waveform::synth_ideal;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn cfg(n: usize, t: f64, c1: f64) -> ChirpConfig {
        ChirpConfig::new(n, t, c1, 1.0 / (3.0 * n as f64)).unwrap()
    }

    #[test]
    fn flat_prototype_spectrum() {
        let c = cfg(64, 1e-3, 0.0);
        let g = prototype_spectrum(&c, &[0.0, 1e3, 5e3, -2e3]).unwrap();
        assert!((g[0].re - 1e-3).abs() < 1e-15 && g[0].im.abs() < 1e-15);
        for v in &g[1..] {
            assert!(v.norm() < 1e-14);
        }
    }

    #[test]
    fn chirp_spectrum_matches_refined_quadrature() {
        let c = ChirpConfig::reference();
        let t = c.duration();
        let alpha = c.c1() * 1024.0 * 1024.0;
        for &f in &[0.0, 1.1e6, 2.3e6, -4e5, 9e6] {
            let g = prototype_spectrum_at(&c, f);
            let ft = f * t;
            let pieces = 10 * ((alpha + ft.abs()).ceil() as usize + 1);
            let oracle = integrate_adaptive(
                |u| Complex64::from_polar(1.0, 2.0 * PI * (alpha * u * u - ft * u)),
                0.0,
                1.0,
                1e-11,
                pieces,
            ) * t;
            assert!((g - oracle).norm() <= 1e-6 * oracle.norm().max(1e-3 * t), "f = {f}");
        }
    }

    #[test]
    fn ofdm_limit_is_sinc_squared_sum() {
        let n = 16;
        let t = 1e-3;
        let c = cfg(n, t, 0.0);
        let freqs: Vec<f64> = (0..200).map(|i| -5e3 + 137.0 * i as f64 + 0.3).collect();
        let s = analytic_psd(&c, 1.0, &freqs).unwrap();
        for (f, p) in freqs.iter().zip(&s.psd) {
            // |G(f)|² = T² sinc²(fT)
            let want: f64 = (0..n)
                .map(|m| {
                    let x = (f - m as f64 / t) * t;
                    let sinc = if x.abs() < 1e-12 { 1.0 } else { (PI * x).sin() / (PI * x) };
                    t * t * sinc * sinc
                })
                .sum::<f64>()
                / (n as f64 * t);
            assert!((p - want).abs() < 1e-9 * want.max(1e-6));
        }
    }

    #[test]
    fn psd_scales_with_symbol_power() {
        let c = cfg(32, 1e-3, 1.0 / 128.0);
        let freqs: Vec<f64> = (0..50).map(|i| i as f64 * 1000.0).collect();
        let a = analytic_psd(&c, 1.0, &freqs).unwrap();
        let b = analytic_psd(&c, 2.0, &freqs).unwrap();
        for (x, y) in a.psd.iter().zip(&b.psd) {
            assert_eq!(2.0 * x, *y);
        }
    }

    #[test]
    fn psd_integrates_to_symbol_power() {
        let n = 64;
        let t = 1e-3;
        let c = cfg(n, t, 1.0 / (4.0 * n as f64));
        let (lo, hi) = ideal_support(&c);
        let w = hi - lo;
        let df = 0.25 / t;
        let freqs: Vec<f64> = (0..)
            .map(|i| lo - 8.0 * w + i as f64 * df)
            .take_while(|&f| f <= hi + 8.0 * w)
            .collect();
        let s = analytic_psd(&c, 1.0, &freqs).unwrap();
        assert!((s.total_power() - 1.0).abs() < 0.02, "{}", s.total_power());
    }

    #[test]
    fn grid_with_shared_combs_matches_pointwise() {
        let c = cfg(32, 1e-3, 1.0 / 128.0);
        let freqs: Vec<f64> = (0..80).map(|i| -2e4 + 250.0 * i as f64).collect();
        let s = analytic_psd(&c, 1.0, &freqs).unwrap();
        for (f, p) in freqs.iter().zip(&s.psd).step_by(7) {
            let direct: f64 = (0..32)
                .map(|m| prototype_spectrum_at(&c, f - m as f64 / 1e-3).norm_sqr())
                .sum::<f64>()
                / (32.0 * 1e-3);
            assert!((p - direct).abs() < 1e-12 * direct.max(1e-12));
        }
    }

    #[test]
    fn bandwidth_formula() {
        let c = ChirpConfig::reference();
        let b = bandwidth_estimate(&c).unwrap();
        assert!((b - 5.76e6).abs() / 5.76e6 < 2e-3, "{b}");
        let c0 = cfg(1024, c.duration(), 0.0);
        assert!((bandwidth_estimate(&c0).unwrap() - 1023.0 / c.duration()).abs() < 1e-6);
        assert!(bandwidth_estimate(&cfg(64, 1e-3, -1.0 / 128.0)).is_err());
        assert!(b > 1024.0 / c.duration());
    }

    #[test]
    fn occupied_bandwidth_tracks_formula_half_scale() {
        let n = 512;
        let t = 133.333e-6;
        let c = cfg(n, t, 1.0 / (4.0 * n as f64));
        let (lo, hi) = ideal_support(&c);
        let w = hi - lo;
        let df = 0.5 / t;
        let freqs: Vec<f64> =
            (0..).map(|i| lo - 0.2 * w + i as f64 * df).take_while(|&f| f <= hi + 0.2 * w).collect();
        let s = analytic_psd(&c, 1.0, &freqs).unwrap();
        let occ = s.occupied_bandwidth(OCCUPIED_DROP_DB).unwrap();
        let est = bandwidth_estimate(&c).unwrap();
        assert!((occ - est).abs() / est < 0.05, "occupied {occ}, estimate {est}");
    }

    #[test]
    fn welch_white_noise_is_flat() {
        let fs = 1e6;
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let var = 2.5;
        let sd = (var / 2.0f64).sqrt();
        let samples: Vec<Complex64> = (0..1 << 20)
            .map(|_| {
                let re: f64 = StandardNormal.sample(&mut rng);
                let im: f64 = StandardNormal.sample(&mut rng);
                Complex64::new(re * sd, im * sd)
            })
            .collect();
        let s = empirical_psd(&[Waveform::new(samples, fs, 0.0)], 512).unwrap();
        let want = to_db(var / fs);
        for p in s.band_average(8).psd_db() {
            assert!((p - want).abs() < 0.5, "{p} vs {want}");
        }
    }

    #[test]
    fn welch_tone_peaks_at_its_bin() {
        let fs = 1024.0;
        let f0 = 100.0;
        let samples: Vec<Complex64> =
            (0..8192).map(|i| Complex64::from_polar(1.0, 2.0 * PI * f0 * i as f64 / fs)).collect();
        let s = empirical_psd(&[Waveform::new(samples, fs, 0.0)], 1024).unwrap();
        let (imax, _) = s.psd.iter().enumerate().fold((0, 0.0), |a, (i, &p)| if p > a.1 { (i, p) } else { a });
        assert_eq!(s.freq[imax], f0);
        // Unit-power tone: the integrated PSD is one.
        assert!((s.total_power() - 1.0).abs() < 1e-3);
    }

    #[test]
    fn welch_rejects_bad_input() {
        assert!(empirical_psd(&[], 64).is_err());
        let a = Waveform::zeros(128, 1.0, 0.0);
        let b = Waveform::zeros(128, 2.0, 0.0);
        assert!(empirical_psd(&[a.clone(), b], 64).is_err());
        assert!(empirical_psd(&[a], 256).is_err());
    }

    #[test]
    fn ideal_frames_match_analytic_small() {
        let n = 64;
        let o = 8;
        let c = cfg(n, 1e-3, 1.0 / (4.0 * n as f64));
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let frames: Vec<Waveform> = (0..400)
            .map(|_| synth_ideal(&c, &SymbolVector::random_qam4(n, &mut rng), o).unwrap())
            .collect();
        let emp = empirical_psd(&frames, 4 * n * o).unwrap();
        let (lo, hi) = ideal_support(&c);
        let band = emp.restrict(lo + 0.05 * (hi - lo), hi - 0.05 * (hi - lo));
        let ana = analytic_psd(&c, 1.0, &band.freq).unwrap();
        for (e, a) in band.band_average(8).psd_db().iter().zip(ana.band_average(8).psd_db()) {
            assert!((e - a).abs() < 1.0, "{e} vs {a}");
        }
    }
}
