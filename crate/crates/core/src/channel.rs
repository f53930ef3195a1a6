//! Delay–Doppler multipath channels and their application to oversampled
//! waveforms.

use std::f64::consts::PI;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use num_complex::Complex64;
use rand::SeedableRng;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::csvio::{sci, write_records};
use crate::error::{Error, Result};
use crate::linalg::cis_cycles;
use crate::transforms::ChirpConfig;
use crate::waveform::Waveform;

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT: f64 = 299_792_458.0;

/// Extended Vehicular A delays in nanoseconds.
pub const EVA_DELAYS_NS: [f64; 9] = [0.0, 30.0, 150.0, 310.0, 370.0, 710.0, 1090.0, 1730.0, 2510.0];

/// Extended Vehicular A relative powers in dB.
pub const EVA_POWERS_DB: [f64; 9] = [0.0, -1.5, -1.4, -3.6, -0.6, -9.1, -7.0, -12.0, -16.9];

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DDPath {
    /// Baseband complex gain h_p.
    pub gain: Complex64,
    /// Delay τ_p in seconds.
    pub delay: f64,
    /// Doppler shift ν_p in hertz.
    pub doppler: f64,
}

impl DDPath {
    pub fn new(gain: Complex64, delay: f64, doppler: f64) -> Self {
        DDPath { gain, delay, doppler }
    }
}

/// Paths ordered by non-decreasing delay.
#[derive(Clone, Debug, PartialEq)]
pub struct DDChannel {
    paths: Vec<DDPath>,
}

impl DDChannel {
    pub fn new(paths: Vec<DDPath>) -> Result<Self> {
        if paths.is_empty() {
            return Err(Error::InvalidConfig("channel needs at least one path".into()));
        }
        for (i, p) in paths.iter().enumerate() {
            if !(p.gain.re.is_finite() && p.gain.im.is_finite() && p.delay.is_finite() && p.doppler.is_finite()) {
                return Err(Error::InvalidConfig(format!("path {i} has a non-finite parameter")));
            }
            if p.delay < 0.0 {
                return Err(Error::InvalidConfig(format!("path {i} has negative delay {}", p.delay)));
            }
        }
        if paths.windows(2).any(|w| w[1].delay < w[0].delay) {
            return Err(Error::InvalidConfig("path delays must be non-decreasing".into()));
        }
        Ok(DDChannel { paths })
    }

    /// Single path with unit gain.
    pub fn single(delay: f64, doppler: f64) -> Self {
        DDChannel { paths: vec![DDPath::new(Complex64::new(1.0, 0.0), delay, doppler)] }
    }

    pub fn paths(&self) -> &[DDPath] {
        &self.paths
    }

    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    /// τ_1, the first-arrival delay.
    pub fn tau1(&self) -> f64 {
        self.paths[0].delay
    }

    /// τ̃_p = τ_p − τ_1.
    pub fn relative_delays(&self) -> Vec<f64> {
        self.paths.iter().map(|p| p.delay - self.tau1()).collect()
    }

    /// τ̃_P.
    pub fn delay_spread(&self) -> f64 {
        self.paths.last().unwrap().delay - self.tau1()
    }

    pub fn max_doppler(&self) -> f64 {
        self.paths.iter().map(|p| p.doppler.abs()).fold(0.0, f64::max)
    }

    pub fn total_power(&self) -> f64 {
        self.paths.iter().map(|p| p.gain.norm_sqr()).sum()
    }

    /// Rejects channels whose delay spread reaches the frame duration.
    pub fn check_frame(&self, cfg: &ChirpConfig) -> Result<()> {
        if self.delay_spread() >= cfg.duration() {
            return Err(Error::InvalidConfig(format!(
                "delay spread {} s is not below the frame duration {} s",
                self.delay_spread(),
                cfg.duration()
            )));
        }
        Ok(())
    }

    /// Same channel with every delay rounded to the nearest multiple of 1/fs.
    pub fn quantized(&self, fs: f64) -> DDChannel {
        let paths = self
            .paths
            .iter()
            .map(|p| DDPath { delay: (p.delay * fs).round() / fs, ..*p })
            .collect();
        DDChannel { paths }
    }

    /// Same channel with all Doppler shifts set to zero.
    pub fn without_doppler(&self) -> DDChannel {
        DDChannel { paths: self.paths.iter().map(|p| DDPath { doppler: 0.0, ..*p }).collect() }
    }

    /// Loads `gain_re,gain_im,delay_s,doppler_hz` rows.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| csv_err(path, e))?;
        let header = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
        let want = ["gain_re", "gain_im", "delay_s", "doppler_hz"];
        if header.iter().collect::<Vec<_>>() != want {
            return Err(Error::Parse {
                path: path.into(),
                line: 1,
                msg: format!("expected header `{}`", want.join(",")),
            });
        }
        let mut paths = Vec::new();
        for (i, rec) in rdr.records().enumerate() {
            let line = i + 2;
            let rec = rec.map_err(|e| csv_err(path, e))?;
            let vals: Vec<f64> = rec
                .iter()
                .map(|f| f.parse::<f64>())
                .collect::<std::result::Result<_, _>>()
                .map_err(|e| Error::Parse { path: path.into(), line, msg: e.to_string() })?;
            if vals.len() != 4 {
                return Err(Error::Parse { path: path.into(), line, msg: format!("{} fields, expected 4", vals.len()) });
            }
            paths.push(DDPath::new(Complex64::new(vals[0], vals[1]), vals[2], vals[3]));
        }
        DDChannel::new(paths)
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let rows = self
            .paths
            .iter()
            .map(|p| vec![sci(p.gain.re), sci(p.gain.im), sci(p.delay), sci(p.doppler)]);
        write_records(path, &["gain_re", "gain_im", "delay_s", "doppler_hz"], rows)
    }
}

fn csv_err(path: &Path, e: csv::Error) -> Error {
    let line = e.position().map(|p| p.line() as usize).unwrap_or(0);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => Error::io(path, io),
        other => Error::Parse { path: path.into(), line, msg: format!("{other:?}") },
    }
}

/// Power-delay profile used to draw channel realizations.
#[derive(Clone, Debug, PartialEq)]
pub enum Profile {
    Eva,
    Custom { delays_s: Vec<f64>, powers_db: Vec<f64> },
}

impl Profile {
    pub fn taps(&self) -> (Vec<f64>, Vec<f64>) {
        match self {
            Profile::Eva => (EVA_DELAYS_NS.iter().map(|d| d * 1e-9).collect(), EVA_POWERS_DB.to_vec()),
            Profile::Custom { delays_s, powers_db } => (delays_s.clone(), powers_db.clone()),
        }
    }
}

impl FromStr for Profile {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "eva" => Ok(Profile::Eva),
            _ => Err(Error::UnknownProfile(s.to_string())),
        }
    }
}

impl fmt::Display for Profile {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Profile::Eva => f.write_str("EVA"),
            Profile::Custom { .. } => f.write_str("custom"),
        }
    }
}

/// Everything needed to draw one reproducible channel realization.
#[derive(Clone, Debug, PartialEq)]
pub struct ChannelRealizationSpec {
    pub profile: Profile,
    pub fc_hz: f64,
    pub speed_kmh: f64,
    pub seed: u64,
    /// Independent stream under `seed`, typically the trial number.
    pub stream: u64,
    /// Scale the profile powers to sum to one.
    pub normalize_power: bool,
}

impl ChannelRealizationSpec {
    pub fn eva(fc_hz: f64, speed_kmh: f64, seed: u64) -> Self {
        ChannelRealizationSpec { profile: Profile::Eva, fc_hz, speed_kmh, seed, stream: 0, normalize_power: true }
    }

    pub fn with_stream(mut self, stream: u64) -> Self {
        self.stream = stream;
        self
    }

    /// ν_max = v·f_c/c₀.
    pub fn max_doppler(&self) -> f64 {
        self.speed_kmh / 3.6 * self.fc_hz / SPEED_OF_LIGHT
    }

    fn validate(&self) -> Result<()> {
        if !(self.speed_kmh.is_finite() && self.speed_kmh >= 0.0) {
            return Err(Error::InvalidConfig(format!("speed {} km/h must be non-negative", self.speed_kmh)));
        }
        if !(self.fc_hz.is_finite() && self.fc_hz > 0.0) {
            return Err(Error::InvalidConfig(format!("carrier {} Hz must be positive", self.fc_hz)));
        }
        Ok(())
    }
}

/// Draws a Rayleigh-fading realization of `spec.profile` with Jakes
/// Doppler ν_p = ν_max·cos θ_p, θ_p uniform on [−π, π], and gains rotated
/// by exp(−j2π f_c τ_p).
///
/// Gains and angles depend only on (seed, stream), so realizations at
/// different speeds share their fading and angles.
pub fn make_channel(spec: &ChannelRealizationSpec) -> Result<DDChannel> {
    spec.validate()?;
    let (delays, powers_db) = spec.profile.taps();
    if delays.len() != powers_db.len() || delays.is_empty() {
        return Err(Error::InvalidConfig("profile delays and powers differ in length".into()));
    }
    let mut lin: Vec<f64> = powers_db.iter().map(|p| 10f64.powf(p / 10.0)).collect();
    if spec.normalize_power {
        let s: f64 = lin.iter().sum();
        lin.iter_mut().for_each(|p| *p /= s);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(spec.stream);
    let nu_max = spec.max_doppler();
    let paths = delays
        .iter()
        .zip(&lin)
        .map(|(&tau, &p)| {
            let re: f64 = StandardNormal.sample(&mut rng);
            let im: f64 = StandardNormal.sample(&mut rng);
            let theta = rng.random_range(-PI..=PI);
            let gain = Complex64::new(re, im) * (p / 2.0).sqrt() * cis_cycles(-spec.fc_hz * tau);
            DDPath::new(gain, tau, nu_max * theta.cos())
        })
        .collect();
    DDChannel::new(paths)
}

/// [`make_channel`] for the EVA profile.
pub fn make_eva_channel(spec: &ChannelRealizationSpec) -> Result<DDChannel> {
    if spec.profile != Profile::Eva {
        return Err(Error::UnknownProfile(spec.profile.to_string()));
    }
    make_channel(spec)
}

/// y(t) = Σ_p h_p·exp(j2πν_p(t − τ_p))·x(t − τ_p) on the input's sample
/// grid. Delays are rounded to the grid; the output keeps the input's time
/// origin and is extended by the largest delay.
pub fn apply_channel(wf: &Waveform, ch: &DDChannel) -> Result<Waveform> {
    let fs = wf.sample_rate;
    let shifts: Vec<usize> = ch.paths.iter().map(|p| (p.delay * fs).round() as usize).collect();
    let max_shift = *shifts.iter().max().unwrap();
    if max_shift > wf.len() {
        return Err(Error::DelayExceedsSpan { delay_samples: max_shift, span: wf.len() });
    }
    let mut out = Waveform::zeros(wf.len() + max_shift, fs, wf.t0);
    for (p, &d) in ch.paths.iter().zip(&shifts) {
        for (i, x) in wf.samples.iter().enumerate() {
            let j = i + d;
            let t = out.time(j);
            out.samples[j] += p.gain * cis_cycles(p.doppler * (t - p.delay)) * x;
        }
    }
    Ok(out)
}

/// Adds circularly symmetric complex Gaussian noise of one-sided PSD `n0`,
/// i.e. per-sample variance n0·fs.
pub fn add_awgn(wf: &Waveform, n0: f64, seed: u64) -> Result<Waveform> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    add_awgn_with(wf, n0, &mut rng)
}

pub fn add_awgn_with<R: Rng + ?Sized>(wf: &Waveform, n0: f64, rng: &mut R) -> Result<Waveform> {
    if !(n0.is_finite() && n0 >= 0.0) {
        return Err(Error::out_of_range("noise PSD", format!("{n0}")));
    }
    let mut out = wf.clone();
    if n0 == 0.0 {
        return Ok(out);
    }
    let sd = (n0 * wf.sample_rate / 2.0).sqrt();
    for s in &mut out.samples {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        *s += Complex64::new(re, im) * sd;
    }
    Ok(out)
}
