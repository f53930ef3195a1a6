//! Experiment drivers: PSD comparison, orthogonality grids, NMSE sweeps of
//! the matched-filter I/O relation, I/O-relation checks and the complexity
//! report. Every driver is deterministic in its configuration and seed.

pub mod acceptance;
pub mod config;

use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::aliasing::{
    inner_product_matrix, predict_orthogonality, Orthogonality, OrthogonalityMatrix, ALIASED_THRESHOLD,
};
use crate::channel::{add_awgn_with, apply_channel, make_channel, ChannelRealizationSpec, DDChannel, DDPath};
use crate::csvio::{sci, write_records};
use crate::error::{Error, Result};
use crate::linalg::{energy, CMatrix};
use crate::receiver::{
    build_baseline, build_hu_mf, default_lead, default_tap_support, effective_taps, effective_taps_with_lead,
    matched_filter, matched_filter_samples, relative_gap, sample_base_rate, BaselinePath, TapGrid,
};
use crate::spectral::{
    analytic_psd, bandwidth_estimate, empirical_psd, ideal_support, to_db, PsdCurve, OCCUPIED_DROP_DB,
    WELCH_SEGMENT_PER_OVERSAMPLE,
};
use crate::transforms::{ChirpConfig, DaftPlan, SymbolVector};
use crate::waveform::{add_cpp, design_srrc, shape, synth_ideal, SrrcFilter, Waveform};

pub use config::{ChirpRate, ExperimentConfig, ExperimentKind, SweepKind};

/// Largest N for which the NMSE model path multiplies by the dense H_u^MF;
/// above it the same product is applied as A·H^MF·Aᴴ·x through the fast
/// transforms.
pub const DENSE_MODEL_LIMIT: usize = 256;

fn trial_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One transmit/receive chain: chirp parameters, pulse and transform plan.
#[derive(Clone, Debug)]
pub struct Link {
    pub cfg: ChirpConfig,
    pub filt: SrrcFilter,
    plan: DaftPlan,
}

/// Both receiver outputs of one frame in the chirp domain.
#[derive(Clone, Debug)]
pub struct FrameOutcome {
    pub simulated: Vec<Complex64>,
    pub predicted: Vec<Complex64>,
    pub support: usize,
}

impl FrameOutcome {
    /// ‖predicted − simulated‖² / ‖simulated‖².
    pub fn nmse(&self) -> f64 {
        let err: f64 = self.predicted.iter().zip(&self.simulated).map(|(a, b)| (a - b).norm_sqr()).sum();
        err / energy(&self.simulated)
    }
}

impl Link {
    pub fn new(cfg: ChirpConfig, beta: f64, q: usize, oversample: usize) -> Result<Self> {
        let filt = design_srrc(beta, q, oversample, cfg.sample_period())?;
        Ok(Link { plan: DaftPlan::new(&cfg), cfg, filt })
    }

    /// Sends `symbols` through `ch` twice: as a shaped waveform through the
    /// delay–Doppler channel and matched filter, and through the tap-grid
    /// model. Path delays are first snapped to the fine grid.
    pub fn run_frame(&self, ch: &DDChannel, symbols: &[Complex64]) -> Result<FrameOutcome> {
        let cfg = &self.cfg;
        let ts = cfg.sample_period();
        let ch = ch.quantized(self.filt.sample_rate());
        ch.check_frame(cfg)?;
        let support = default_tap_support(cfg, &ch, &self.filt);
        let lead = default_lead(&self.filt);
        let prefix = support;

        let x = self.plan.modulate(symbols)?;
        let seq = add_cpp(cfg, &x, prefix)?;
        let wf = shape(cfg, &seq, &self.filt)?.delayed_label(-(prefix as f64) * ts);
        let rx = apply_channel(&wf, &ch)?;
        let y = matched_filter_samples(&rx, &self.filt, cfg, ch.tau1() - lead as f64 * ts, cfg.n())?;
        let simulated = self.plan.demodulate(&y)?;

        let grid = effective_taps(cfg, &ch, &self.filt, support)?;
        let predicted = if cfg.n() <= DENSE_MODEL_LIMIT {
            build_hu_mf(cfg, &grid, prefix)?.hu_mf.mul_vec(symbols)
        } else {
            self.plan.demodulate(&grid.apply_folded(cfg, &x)?)?
        };
        Ok(FrameOutcome { simulated, predicted, support })
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepPoint {
    pub value: f64,
    pub nmse_db: f64,
    pub stderr_db: f64,
    pub trials: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SweepResult {
    pub variable: SweepKind,
    pub points: Vec<SweepPoint>,
    pub meta: Vec<(String, String)>,
}

impl SweepResult {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let rows = self
            .points
            .iter()
            .map(|p| vec![sci(p.value), sci(p.nmse_db), sci(p.stderr_db)]);
        write_records(path, &["sweep_value", "nmse_db", "stderr_db"], rows)
    }

    pub fn nmse_db(&self) -> Vec<f64> {
        self.points.iter().map(|p| p.nmse_db).collect()
    }
}

/// Mean of linear NMSE in dB, with the standard error carried through the
/// logarithm to first order.
fn summarize(value: f64, samples: &[f64]) -> SweepPoint {
    let t = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / t;
    let var = if samples.len() > 1 { samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (t - 1.0) } else { 0.0 };
    let se = (var / t).sqrt();
    SweepPoint { value, nmse_db: to_db(mean), stderr_db: 10.0 / std::f64::consts::LN_10 * se / mean, trials: samples.len() }
}

/// Link and channel speed for one sweep point.
fn sweep_point(ec: &ExperimentConfig, cfg: &ChirpConfig, value: f64) -> Result<(Link, f64)> {
    match ec.sweep {
        SweepKind::Speed => Ok((Link::new(*cfg, ec.beta, ec.q, ec.oversample)?, value)),
        SweepKind::Rolloff => Ok((Link::new(*cfg, value, ec.q, ec.oversample)?, ec.speed_kmh)),
        SweepKind::Span => {
            if value.fract() != 0.0 || value < 2.0 {
                return Err(Error::ConfigKey { key: "values".into(), msg: format!("span {value} is not an integer ≥ 2") });
            }
            Ok((Link::new(*cfg, ec.beta, value as usize, ec.oversample)?, ec.speed_kmh))
        }
    }
}

/// NMSE between simulated and predicted chirp-domain outputs per sweep
/// point. Trial `i` draws its symbols and channel from streams `2i + 1`
/// and `2i` of the master seed, so all points share the same realizations.
pub fn run_nmse_sweep(ec: &ExperimentConfig) -> Result<SweepResult> {
    ec.validate()?;
    let cfg = ec.chirp_config()?;
    let values = ec.sweep_values();
    if values.is_empty() {
        return Err(Error::ConfigKey { key: "values".into(), msg: "empty sweep".into() });
    }
    let points: Vec<(Link, f64)> = values.iter().map(|&v| sweep_point(ec, &cfg, v)).collect::<Result<_>>()?;
    let trials = ec.trials;
    let nmse: Vec<f64> = (0..points.len() * trials)
        .into_par_iter()
        .map(|job| {
            let (link, speed) = &points[job / trials];
            let trial = (job % trials) as u64;
            let symbols = SymbolVector::random_qam4(cfg.n(), &mut trial_rng(ec.seed, 2 * trial + 1));
            let spec = ChannelRealizationSpec {
                profile: ec.profile.clone(),
                fc_hz: ec.fc_hz,
                speed_kmh: *speed,
                seed: ec.seed,
                stream: 2 * trial,
                normalize_power: true,
            };
            let ch = make_channel(&spec)?;
            Ok(link.run_frame(&ch, &symbols)?.nmse())
        })
        .collect::<Result<_>>()?;
    let points = values.iter().zip(nmse.chunks(trials)).map(|(&v, s)| summarize(v, s)).collect();
    let mut meta = ec.echo();
    meta.push(("sweep".into(), ec.sweep.to_string()));
    Ok(SweepResult { variable: ec.sweep, points, meta })
}

#[derive(Clone, Debug)]
pub struct PsdReport {
    pub analytic: PsdCurve,
    pub empirical: PsdCurve,
    /// −20 dB bandwidth of the band-averaged empirical PSD, Hz.
    pub occupied_bw: f64,
    /// −20 dB bandwidth of the analytic PSD, Hz.
    pub analytic_bw: f64,
    /// (2c1N² + N − 1)/T, Hz.
    pub nominal_bw: f64,
    /// Largest |analytic − empirical| in dB over the inner 90 % of the band
    /// after averaging blocks of [`PSD_AVERAGE_BINS`] bins.
    pub inband_dev_db: f64,
}

/// Welch bins averaged together before the in-band comparison.
pub const PSD_AVERAGE_BINS: usize = 8;

impl PsdReport {
    /// `freq_hz,analytic_db,empirical_db` over the analytic window.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let emp = &self.empirical;
        let rows = self.analytic.freq.iter().zip(&self.analytic.psd).map(|(f, a)| {
            let i = emp.freq.partition_point(|x| x < f).min(emp.len() - 1);
            vec![sci(*f), sci(to_db(*a)), sci(to_db(emp.psd[i]))]
        });
        write_records(path, &["freq_hz", "analytic_db", "empirical_db"], rows)
    }
}

/// Welch PSD of `frames` ideal frames against the analytic PSD. The analytic
/// curve covers the ideal support widened by a quarter on each side.
pub fn run_psd_experiment(ec: &ExperimentConfig) -> Result<PsdReport> {
    ec.validate()?;
    let cfg = ec.chirp_config()?;
    let o = ec.oversample;
    let frames: Vec<Waveform> = (0..ec.frames)
        .into_par_iter()
        .map(|f| {
            let sym = SymbolVector::random_qam4(cfg.n(), &mut trial_rng(ec.seed, f as u64));
            synth_ideal(&cfg, &sym, o)
        })
        .collect::<Result<_>>()?;
    let empirical = empirical_psd(&frames, WELCH_SEGMENT_PER_OVERSAMPLE * o)?;
    let (lo, hi) = ideal_support(&cfg);
    let w = hi - lo;
    let window = empirical.restrict(lo - 0.25 * w, hi + 0.25 * w);
    let analytic = analytic_psd(&cfg, 1.0, &window.freq)?;
    let inner = empirical.restrict(lo + 0.05 * w, hi - 0.05 * w);
    let inner_an = analytic_psd(&cfg, 1.0, &inner.freq)?;
    let inband_dev_db = inner
        .band_average(PSD_AVERAGE_BINS)
        .psd_db()
        .iter()
        .zip(inner_an.band_average(PSD_AVERAGE_BINS).psd_db())
        .map(|(e, a)| (e - a).abs())
        .fold(0.0, f64::max);
    let bw = |c: &PsdCurve| {
        c.occupied_bandwidth(OCCUPIED_DROP_DB)
            .ok_or_else(|| Error::Consistency("PSD never drops 20 dB below its peak".into()))
    };
    let occupied_bw = bw(&empirical.band_average(PSD_AVERAGE_BINS))?;
    let analytic_bw = bw(&analytic)?;
    let nominal_bw = bandwidth_estimate(&cfg).unwrap_or((cfg.n() - 1) as f64 / cfg.duration());
    Ok(PsdReport { analytic, empirical, occupied_bw, analytic_bw, nominal_bw, inband_dev_db })
}

/// One off-diagonal pair of the orthogonality grid.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PairClass {
    pub n: usize,
    pub n_prime: usize,
    pub abs_over_t: f64,
    pub measured: Orthogonality,
    /// None when C is not an integer.
    pub predicted: Option<Orthogonality>,
}

#[derive(Clone, Debug)]
pub struct OrthoReport {
    pub grid: OrthogonalityMatrix,
    pub pairs: Vec<PairClass>,
}

impl OrthoReport {
    pub fn disagreements(&self) -> Vec<PairClass> {
        self.pairs.iter().filter(|p| p.predicted.is_some_and(|c| c != p.measured)).copied().collect()
    }

    pub fn write_predictions_csv(&self, path: &Path) -> Result<()> {
        let rows = self.pairs.iter().map(|p| {
            vec![
                p.n.to_string(),
                p.n_prime.to_string(),
                sci(p.abs_over_t),
                p.predicted.map_or_else(|| "n/a".to_string(), |c| c.to_string()),
                p.measured.to_string(),
            ]
        });
        write_records(path, &["n", "n_prime", "abs_I_over_T", "predicted", "measured"], rows)
    }
}

/// Chirp parameters for the orthogonality grid: c1 = C/(2N) when `c` is set.
pub fn ortho_config(ec: &ExperimentConfig) -> Result<ChirpConfig> {
    let cfg = ec.chirp_config()?;
    match ec.c {
        Some(c) => cfg.with_c1(c / (2.0 * ec.n as f64)),
        None => Ok(cfg),
    }
}

/// |I_{n,n'}|/T by quadrature with `oversample` panels per base interval,
/// plus the integer-C predictor on every off-diagonal pair.
pub fn run_ortho_experiment(ec: &ExperimentConfig) -> Result<OrthoReport> {
    ec.validate()?;
    let cfg = ortho_config(ec)?;
    let grid = inner_product_matrix(&cfg, ec.oversample)?;
    let integer_c = cfg.integer_chirp_index().is_some_and(|c| c > 0);
    let n = cfg.n();
    let mut pairs = Vec::with_capacity(n * (n - 1));
    for a in 0..n {
        for b in (0..n).filter(|&b| b != a) {
            let v = grid.normalized(a, b);
            let measured = if v > ALIASED_THRESHOLD { Orthogonality::Aliased } else { Orthogonality::Orthogonal };
            let predicted = if integer_c { Some(predict_orthogonality(&cfg, a, b)?) } else { None };
            pairs.push(PairClass { n: a, n_prime: b, abs_over_t: v, measured, predicted });
        }
    }
    Ok(OrthoReport { grid, pairs })
}

/// Compares effective taps with a waveform-path oracle: one unit sample at
/// a time is shaped, sent through the channel, matched-filtered and
/// sampled. Returns (max relative deviation, entries compared) over taps
/// above `floor` times the largest tap.
pub fn tap_oracle_check(cfg: &ChirpConfig, filt: &SrrcFilter, ch: &DDChannel, floor: f64) -> Result<(f64, usize)> {
    let ts = cfg.sample_period();
    let ch = ch.quantized(filt.sample_rate());
    let l = default_tap_support(cfg, &ch, filt);
    let lead = default_lead(filt);
    let grid = effective_taps(cfg, &ch, filt, l)?;
    let n = cfg.n();
    let peak = grid.as_slice().iter().map(|h| h.norm()).fold(0.0, f64::max);
    let results: Vec<(f64, usize)> = (-(l as i64 - 1)..n as i64)
        .into_par_iter()
        .map(|m| {
            let mut seq = vec![Complex64::new(0.0, 0.0); l - 1 + n];
            seq[(m + l as i64 - 1) as usize] = Complex64::new(1.0, 0.0);
            let wf = shape(cfg, &seq, filt)?.delayed_label(-((l - 1) as f64) * ts);
            let mf = matched_filter(&apply_channel(&wf, &ch)?, filt)?;
            let y = sample_base_rate(&mf, cfg, ch.tau1() - lead as f64 * ts, n)?;
            let mut worst = 0.0f64;
            let mut count = 0;
            for (k, yk) in y.iter().enumerate() {
                let li = k as i64 - m;
                if (0..l as i64).contains(&li) {
                    let h = grid.get(k, li as usize);
                    if h.norm() > floor * peak {
                        worst = worst.max((h - yk).norm() / h.norm());
                        count += 1;
                    }
                }
            }
            Ok((worst, count))
        })
        .collect::<Result<_>>()?;
    Ok(results.iter().fold((0.0, 0), |(w, c), &(a, b)| (w.max(a), c + b)))
}

/// Relative Frobenius gaps ‖H_u^MF − H_u‖/‖H_u‖ for a three-path channel on
/// the T/N grid, without and with Doppler. `nu_max` scales the Dopplers
/// (ν_max, −ν_max/2, ν_max/2).
pub fn deviation_dichotomy(cfg: &ChirpConfig, filt: &SrrcFilter, nu_max: f64) -> Result<(f64, f64)> {
    let ts = cfg.sample_period();
    let gains = [Complex64::new(0.8, 0.0), Complex64::new(0.3, -0.4), Complex64::new(-0.2, 0.25)];
    let delays = [0.0, 2.0 * ts, 5.0 * ts];
    let gap = |nus: [f64; 3]| -> Result<f64> {
        let ch = DDChannel::new((0..3).map(|i| DDPath::new(gains[i], delays[i], nus[i])).collect())?;
        let l = default_tap_support(cfg, &ch, filt);
        // The sample-spaced model has no lead, so neither does the receiver here.
        let grid = effective_taps_with_lead(cfg, &ch, filt, l, 0)?;
        let eff = build_hu_mf(cfg, &grid, l)?;
        let base = build_baseline(cfg, &BaselinePath::from_channel(cfg, &ch)?)?;
        Ok(relative_gap(&eff.hu_mf, &base.hu))
    };
    Ok((gap([0.0; 3])?, gap([nu_max, -0.5 * nu_max, 0.5 * nu_max])?))
}

/// max |product path − entry formula| for random taps.
pub fn dual_path_gap(cfg: &ChirpConfig, support: usize, seed: u64) -> Result<f64> {
    let mut rng = trial_rng(seed, 0);
    let taps = (0..cfg.n() * support)
        .map(|_| Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0)))
        .collect();
    let grid = TapGrid::new(cfg.n(), support, 0, 0.0, taps)?;
    let eff = build_hu_mf(cfg, &grid, support)?;
    Ok(eff.path_gap)
}

/// Sample covariance of matched-filtered, base-rate-sampled AWGN.
#[derive(Clone, Debug, PartialEq)]
pub struct NoiseStats {
    pub samples: usize,
    /// E|w[k]|² / N0.
    pub diag_ratio: f64,
    /// max over lags 1..=Q of |E w[k+m]w*[k]| / N0.
    pub max_off_ratio: f64,
}

/// Whiteness of the receiver noise over at least `min_samples` samples.
pub fn noise_whiteness(cfg: &ChirpConfig, filt: &SrrcFilter, n0: f64, min_samples: usize, seed: u64) -> Result<NoiseStats> {
    let n = cfg.n();
    let o = filt.oversample();
    let lags = filt.span();
    let blocks = min_samples.div_ceil(n - lags);
    let mut rng = trial_rng(seed, 0);
    let pad = filt.taps().len();
    let mut diag = 0.0;
    let mut off = vec![Complex64::new(0.0, 0.0); lags];
    let mut count = 0usize;
    for _ in 0..blocks {
        let noise = add_awgn_with(&Waveform::zeros(n * o + 2 * pad, filt.sample_rate(), 0.0), n0, &mut rng)?;
        let y = matched_filter_samples(&noise, filt, cfg, pad as f64 * filt.dt(), n)?;
        for k in 0..n - lags {
            diag += y[k].norm_sqr();
            for (m, acc) in off.iter_mut().enumerate() {
                *acc += y[k + m + 1] * y[k].conj();
            }
            count += 1;
        }
    }
    let c = count as f64;
    Ok(NoiseStats {
        samples: count,
        diag_ratio: diag / c / n0,
        max_off_ratio: off.iter().map(|v| v.norm() / c / n0).fold(0.0, f64::max),
    })
}

#[derive(Clone, Debug)]
pub struct IorelReport {
    pub tap_max_rel: f64,
    pub taps_compared: usize,
    pub gap_still: f64,
    pub gap_moving: f64,
    pub dual_path_gap: f64,
    pub noise: NoiseStats,
}

impl IorelReport {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let rows = [
            ("tap_max_rel", self.tap_max_rel),
            ("taps_compared", self.taps_compared as f64),
            ("gap_still", self.gap_still),
            ("gap_moving", self.gap_moving),
            ("dual_path_gap", self.dual_path_gap),
            ("noise_samples", self.noise.samples as f64),
            ("noise_diag_ratio", self.noise.diag_ratio),
            ("noise_max_off_ratio", self.noise.max_off_ratio),
        ];
        write_records(path, &["quantity", "value"], rows.iter().map(|(k, v)| vec![k.to_string(), sci(*v)]))
    }
}

/// Runs the I/O-relation checks on one EVA realization at `speed_kmh`.
pub fn run_iorel_checks(ec: &ExperimentConfig) -> Result<IorelReport> {
    ec.validate()?;
    let cfg = ec.chirp_config()?;
    let filt = design_srrc(ec.beta, ec.q, ec.oversample, cfg.sample_period())?;
    let spec = ChannelRealizationSpec {
        profile: ec.profile.clone(),
        fc_hz: ec.fc_hz,
        speed_kmh: ec.speed_kmh,
        seed: ec.seed,
        stream: 0,
        normalize_power: true,
    };
    let ch = make_channel(&spec)?;
    let (tap_max_rel, taps_compared) = tap_oracle_check(&cfg, &filt, &ch, 1e-4)?;
    let (gap_still, gap_moving) = deviation_dichotomy(&cfg, &filt, spec.max_doppler())?;
    let dual_cfg = cfg.rescaled(cfg.n().min(128))?;
    let dual_path_gap = dual_path_gap(&dual_cfg, 16.min(dual_cfg.n()), ec.seed)?;
    let noise = noise_whiteness(&cfg, &filt, ec.n0, 100_000, ec.seed)?;
    Ok(IorelReport { tap_max_rel, taps_compared, gap_still, gap_moving, dual_path_gap, noise })
}

#[derive(Clone, Debug)]
pub struct ComplexityReport {
    pub n: usize,
    pub n_od: usize,
    pub m_od: usize,
    /// N·log₂N complex multiplies.
    pub afdm_mults: f64,
    /// M_od·N_od·log₂N_od complex multiplies.
    pub oddm_mults: f64,
    pub ratio: f64,
    /// (N, seconds per modulation) of this crate's transform.
    pub timings: Vec<(usize, f64)>,
    /// Least-squares slope of log time against log N.
    pub slope: f64,
}

/// Transform-stage multiply counts for one AFDM frame and for ODDM with
/// M_od = N/N_od blocks of size N_od.
pub fn complexity_counts(n: usize, n_od: usize) -> Result<(f64, f64)> {
    if n_od < 2 || n_od > n || n % n_od != 0 {
        return Err(Error::ConfigKey { key: "n_od".into(), msg: format!("{n_od} must divide N = {n} and be at least 2") });
    }
    let m_od = n / n_od;
    Ok((n as f64 * (n as f64).log2(), (m_od * n_od) as f64 * (n_od as f64).log2()))
}

/// Seconds per modulation for each size: the minimum over `repeats`
/// rounds, each round timing every size once in turn so that load drift
/// hits all sizes alike. Batches are long enough to dwarf timer resolution.
pub fn measure_transform_times(sizes: &[usize], repeats: usize) -> Result<Vec<(usize, f64)>> {
    struct Bench {
        plan: DaftPlan,
        buf: Vec<Complex64>,
        scratch: Vec<Complex64>,
        iters: usize,
        best: f64,
    }
    let mut benches = sizes
        .iter()
        .map(|&n| {
            let cfg = ChirpConfig::ocdm(n, 1.0)?.with_c1(1.0 / (4.0 * n as f64))?;
            let plan = DaftPlan::new(&cfg);
            let scratch = vec![Complex64::new(0.0, 0.0); plan.scratch_len()];
            let buf = (0..n).map(|i| Complex64::new((i % 7) as f64, (i % 3) as f64)).collect();
            Ok(Bench { plan, buf, scratch, iters: (1 << 22) / n, best: f64::INFINITY })
        })
        .collect::<Result<Vec<_>>>()?;
    for _ in 0..repeats.max(1) {
        for b in &mut benches {
            let start = Instant::now();
            for _ in 0..b.iters {
                b.plan.modulate_with_scratch(std::hint::black_box(&mut b.buf), &mut b.scratch);
            }
            b.best = b.best.min(start.elapsed().as_secs_f64() / b.iters as f64);
        }
    }
    Ok(sizes.iter().zip(&benches).map(|(&n, b)| (n, b.best)).collect())
}

pub fn loglog_slope(points: &[(usize, f64)]) -> f64 {
    let xs: Vec<f64> = points.iter().map(|p| (p.0 as f64).ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let k = xs.len() as f64;
    let (mx, my) = (xs.iter().sum::<f64>() / k, ys.iter().sum::<f64>() / k);
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

pub const TIMING_SIZES: [usize; 3] = [256, 1024, 4096];

pub fn complexity_compare(n: usize, n_od: usize) -> Result<ComplexityReport> {
    let (afdm_mults, oddm_mults) = complexity_counts(n, n_od)?;
    let timings = measure_transform_times(&TIMING_SIZES, 15)?;
    let slope = loglog_slope(&timings);
    Ok(ComplexityReport { n, n_od, m_od: n / n_od, afdm_mults, oddm_mults, ratio: afdm_mults / oddm_mults, timings, slope })
}

impl ComplexityReport {
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut rows = vec![
            vec!["afdm_mults".to_string(), sci(self.afdm_mults)],
            vec!["oddm_mults".to_string(), sci(self.oddm_mults)],
            vec!["ratio".to_string(), sci(self.ratio)],
            vec!["slope".to_string(), sci(self.slope)],
        ];
        rows.extend(self.timings.iter().map(|(n, t)| vec![format!("seconds_n{n}"), sci(*t)]));
        write_records(path, &["quantity", "value"], rows)
    }
}

/// Dense channel matrix of a frame for external inspection.
pub fn effective_matrix(ec: &ExperimentConfig) -> Result<CMatrix> {
    let cfg = ec.chirp_config()?;
    let filt = design_srrc(ec.beta, ec.q, ec.oversample, cfg.sample_period())?;
    let spec = ChannelRealizationSpec::eva(ec.fc_hz, ec.speed_kmh, ec.seed);
    let ch = make_channel(&spec)?.quantized(filt.sample_rate());
    let l = default_tap_support(&cfg, &ch, &filt);
    Ok(build_hu_mf(&cfg, &effective_taps(&cfg, &ch, &filt, l)?, l)?.hu_mf)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_ec() -> ExperimentConfig {
        ExperimentConfig { n: 64, t: 266.667e-6 / 16.0, trials: 3, oversample: 8, ..Default::default() }
    }

    #[test]
    fn frame_model_tracks_simulation() {
        let ec = small_ec();
        let link = Link::new(ec.chirp_config().unwrap(), 0.2, 12, 8).unwrap();
        let ch = make_channel(&ChannelRealizationSpec::eva(5e9, 500.0, 1)).unwrap();
        let sym = SymbolVector::random_qam4(64, &mut trial_rng(1, 1));
        let out = link.run_frame(&ch, &sym).unwrap();
        assert!(out.nmse() < 1e-3, "{}", out.nmse());
        assert_eq!(out.support, 10 + 13);
    }

    #[test]
    fn dense_and_fast_model_paths_agree() {
        let cfg = ChirpConfig::new(256, 66.67e-6, 1.0 / 1024.0, 1.0 / 768.0).unwrap();
        let link = Link::new(cfg, 0.3, 8, 4).unwrap();
        let ch = make_channel(&ChannelRealizationSpec::eva(5e9, 300.0, 2)).unwrap().quantized(link.filt.sample_rate());
        let sym = SymbolVector::random_qam4(256, &mut trial_rng(2, 1));
        let l = default_tap_support(&cfg, &ch, &link.filt);
        let grid = effective_taps(&cfg, &ch, &link.filt, l).unwrap();
        let dense = build_hu_mf(&cfg, &grid, l).unwrap().hu_mf.mul_vec(&sym);
        let plan = DaftPlan::new(&cfg);
        let fast = plan.demodulate(&grid.apply_folded(&cfg, &plan.modulate(&sym).unwrap()).unwrap()).unwrap();
        assert!(crate::linalg::max_abs_diff(&dense, &fast) < 1e-12);
    }

    #[test]
    fn sweep_is_deterministic_and_ordered() {
        let ec = ExperimentConfig { values: vec![0.0, 500.0], ..small_ec() };
        let a = run_nmse_sweep(&ec).unwrap();
        let b = run_nmse_sweep(&ec).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.points.len(), 2);
        assert!(a.points.iter().all(|p| p.nmse_db.is_finite() && p.stderr_db >= 0.0 && p.trials == 3));
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        a.write_csv(&p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("sweep_value,nmse_db,stderr_db\n"));
        assert_eq!(text.lines().count(), 3);
        let bad = ExperimentConfig { sweep: SweepKind::Span, values: vec![7.5], ..small_ec() };
        assert!(run_nmse_sweep(&bad).is_err());
    }

    #[test]
    fn counts_and_slope() {
        let (a, o) = complexity_counts(1024, 32).unwrap();
        assert_eq!(a / o, 2.0);
        let (a, o) = complexity_counts(1024, 1024).unwrap();
        assert_eq!(a / o, 1.0);
        assert!(complexity_counts(1024, 48).is_err());
        let s = loglog_slope(&[(10, 2.0), (100, 20.0), (1000, 200.0)]);
        assert!((s - 1.0).abs() < 1e-12);
    }

    #[test]
    fn summary_statistics() {
        let p = summarize(1.0, &[1e-3, 1e-3]);
        assert!((p.nmse_db + 30.0).abs() < 1e-12);
        assert_eq!(p.stderr_db, 0.0);
        let p = summarize(1.0, &[1e-3]);
        assert_eq!(p.stderr_db, 0.0);
    }
}
