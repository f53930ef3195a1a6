//! Flat `key = value` experiment configuration.
//!
//! Blank lines and `#` comments are ignored. Chirp rates are rationals whose
//! denominator may carry a trailing `N`, so `c1_num = 1`, `c1_den = 4N`
//! means 1/(4N) for whatever N is in effect.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::channel::Profile;
use crate::error::{Error, Result};
use crate::transforms::ChirpConfig;

/// Desk-scale fallback sizes used by `--small`.
pub const SMALL_N: usize = 256;
pub const SMALL_TRIALS: usize = 20;
pub const SMALL_OVERSAMPLE: usize = 8;

pub const KEYS: &[&str] = &[
    "n", "t_us", "c1_num", "c1_den", "c2_num", "c2_den", "beta", "q", "oversample", "profile", "fc_hz",
    "speed_kmh", "trials", "seed", "sweep", "values", "c", "frames", "n0", "n_od",
];

/// num / (den·N^k) with k ∈ {0, 1}.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChirpRate {
    pub num: f64,
    pub den: f64,
    pub per_n: bool,
}

impl ChirpRate {
    pub fn per_n(num: f64, den: f64) -> Self {
        ChirpRate { num, den, per_n: true }
    }

    pub fn absolute(value: f64) -> Self {
        ChirpRate { num: value, den: 1.0, per_n: false }
    }

    pub fn value(&self, n: usize) -> f64 {
        let scale = if self.per_n { n as f64 } else { 1.0 };
        self.num / (self.den * scale)
    }

    fn parse_den(s: &str) -> Option<(f64, bool)> {
        let s = s.trim();
        let (body, per_n) = match s.strip_suffix('N').or_else(|| s.strip_suffix('n')) {
            Some(b) => (b.trim().trim_end_matches('*').trim(), true),
            None => (s, false),
        };
        let den = if body.is_empty() && per_n { 1.0 } else { body.parse::<f64>().ok()? };
        (den.is_finite() && den != 0.0).then_some((den, per_n))
    }
}

impl fmt::Display for ChirpRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/({}{})", self.num, self.den, if self.per_n { "N" } else { "" })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepKind {
    Speed,
    Rolloff,
    Span,
}

impl SweepKind {
    pub fn default_values(self) -> Vec<f64> {
        match self {
            SweepKind::Speed => (0..=10).map(|i| 50.0 * i as f64).collect(),
            SweepKind::Rolloff => (1..=10).map(|i| 0.1 * i as f64).collect(),
            SweepKind::Span => (3..=10).map(|i| 2.0 * i as f64).collect(),
        }
    }
}

impl FromStr for SweepKind {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s.trim() {
            "speed" => Ok(SweepKind::Speed),
            "rolloff" | "beta" => Ok(SweepKind::Rolloff),
            "span" | "q" => Ok(SweepKind::Span),
            other => Err(format!("unknown sweep `{other}` (speed, rolloff or span)")),
        }
    }
}

impl fmt::Display for SweepKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SweepKind::Speed => "speed",
            SweepKind::Rolloff => "rolloff",
            SweepKind::Span => "span",
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExperimentKind {
    Psd,
    Ortho,
    Nmse(SweepKind),
    IorelCheck,
    Complexity,
}

impl fmt::Display for ExperimentKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ExperimentKind::Psd => f.write_str("psd"),
            ExperimentKind::Ortho => f.write_str("ortho"),
            ExperimentKind::Nmse(s) => write!(f, "nmse-{s}"),
            ExperimentKind::IorelCheck => f.write_str("iorel-check"),
            ExperimentKind::Complexity => f.write_str("complexity"),
        }
    }
}

/// Every knob of every experiment; each driver reads the subset it needs.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    pub n: usize,
    /// Frame duration in seconds.
    pub t: f64,
    pub c1: ChirpRate,
    pub c2: ChirpRate,
    pub beta: f64,
    pub q: usize,
    pub oversample: usize,
    pub profile: Profile,
    pub fc_hz: f64,
    /// Fixed speed for the roll-off and span sweeps.
    pub speed_kmh: f64,
    pub trials: usize,
    pub seed: u64,
    pub sweep: SweepKind,
    /// Sweep points; the sweep's defaults when empty.
    pub values: Vec<f64>,
    /// Chirp index C = 2N·c1 for the orthogonality grid; overrides c1 there.
    pub c: Option<f64>,
    pub frames: usize,
    pub n0: f64,
    pub n_od: usize,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            n: 1024,
            t: 266.667e-6,
            c1: ChirpRate::per_n(1.0, 4.0),
            c2: ChirpRate::per_n(1.0, 3.0),
            beta: 0.2,
            q: 12,
            oversample: 16,
            profile: Profile::Eva,
            fc_hz: 5e9,
            speed_kmh: 500.0,
            trials: 100,
            seed: 1,
            sweep: SweepKind::Speed,
            values: Vec::new(),
            c: None,
            frames: 200,
            n0: 1.0,
            n_od: 32,
        }
    }
}

fn bad(key: &str, msg: impl Into<String>) -> Error {
    Error::ConfigKey { key: key.to_string(), msg: msg.into() }
}

fn num<T: FromStr>(key: &str, v: &str) -> Result<T> {
    v.trim().parse::<T>().map_err(|_| bad(key, format!("cannot parse `{}`", v.trim())))
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::parse(&text, path)
    }

    /// Parses configuration text; `origin` only labels error messages.
    pub fn parse(text: &str, origin: &Path) -> Result<Self> {
        let mut ec = ExperimentConfig::default();
        let mut seen: Vec<String> = Vec::new();
        let (mut c1_num, mut c1_den, mut c2_num, mut c2_den) = (None, None, None, None);
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let Some((key, value)) = line.split_once('=') else {
                return Err(Error::Parse {
                    path: origin.to_path_buf(),
                    line: i + 1,
                    msg: format!("expected `key = value`, found `{line}`"),
                });
            };
            let key = key.trim();
            let value = value.trim();
            if !KEYS.contains(&key) {
                return Err(bad(key, "unknown key"));
            }
            if seen.iter().any(|k| k == key) {
                return Err(bad(key, "given twice"));
            }
            seen.push(key.to_string());
            match key {
                "n" => ec.n = num(key, value)?,
                "t_us" => ec.t = num::<f64>(key, value)? * 1e-6,
                "c1_num" => c1_num = Some(num::<f64>(key, value)?),
                "c2_num" => c2_num = Some(num::<f64>(key, value)?),
                "c1_den" => c1_den = Some(ChirpRate::parse_den(value).ok_or_else(|| bad(key, "expected a nonzero number, optionally followed by N"))?),
                "c2_den" => c2_den = Some(ChirpRate::parse_den(value).ok_or_else(|| bad(key, "expected a nonzero number, optionally followed by N"))?),
                "beta" => ec.beta = num(key, value)?,
                "q" => ec.q = num(key, value)?,
                "oversample" => ec.oversample = num(key, value)?,
                "profile" => ec.profile = value.parse().map_err(|e: Error| bad(key, e.to_string()))?,
                "fc_hz" => ec.fc_hz = num(key, value)?,
                "speed_kmh" => ec.speed_kmh = num(key, value)?,
                "trials" => ec.trials = num(key, value)?,
                "seed" => ec.seed = num(key, value)?,
                "sweep" => ec.sweep = value.parse().map_err(|e: String| bad(key, e))?,
                "values" => {
                    ec.values = value
                        .split(',')
                        .filter(|s| !s.trim().is_empty())
                        .map(|s| num::<f64>(key, s))
                        .collect::<Result<_>>()?
                }
                "c" => ec.c = Some(num(key, value)?),
                "frames" => ec.frames = num(key, value)?,
                "n0" => ec.n0 = num(key, value)?,
                "n_od" => ec.n_od = num(key, value)?,
                _ => unreachable!("key list and match arms disagree"),
            }
        }
        ec.c1 = merge_rate("c1", ec.c1, c1_num, c1_den)?;
        ec.c2 = merge_rate("c2", ec.c2, c2_num, c2_den)?;
        ec.validate()?;
        Ok(ec)
    }

    pub fn validate(&self) -> Result<()> {
        let pos = |key: &str, ok: bool, what: &str| if ok { Ok(()) } else { Err(bad(key, what.to_string())) };
        pos("n", self.n >= 2, "must be at least 2")?;
        pos("t_us", self.t.is_finite() && self.t > 0.0, "must be positive")?;
        pos("beta", (0.0..=1.0).contains(&self.beta), "must lie in [0, 1]")?;
        pos("q", self.q >= 2 && self.q % 2 == 0, "must be even and at least 2")?;
        pos("oversample", self.oversample >= 2, "must be at least 2")?;
        pos("fc_hz", self.fc_hz.is_finite() && self.fc_hz > 0.0, "must be positive")?;
        pos("speed_kmh", self.speed_kmh.is_finite() && self.speed_kmh >= 0.0, "must be non-negative")?;
        pos("trials", self.trials >= 1, "must be at least 1")?;
        pos("frames", self.frames >= 1, "must be at least 1")?;
        pos("n0", self.n0.is_finite() && self.n0 > 0.0, "must be positive")?;
        pos("n_od", self.n_od >= 1, "must be at least 1")?;
        pos("values", self.values.iter().all(|v| v.is_finite()), "must be finite")?;
        pos("values", self.values.windows(2).all(|w| w[0] < w[1]), "must be strictly increasing")?;
        if let Some(c) = self.c {
            pos("c", c.is_finite() && c > 0.0, "must be positive")?;
        }
        Ok(())
    }

    /// `--small`: N → 256, trials → 20, O → 8 with T/N and c·N unchanged.
    pub fn small(mut self) -> Self {
        if self.n > SMALL_N {
            let ratio = SMALL_N as f64 / self.n as f64;
            self.t *= ratio;
            for c in [&mut self.c1, &mut self.c2] {
                if !c.per_n {
                    c.num /= ratio;
                }
            }
            self.n = SMALL_N;
        }
        self.trials = self.trials.min(SMALL_TRIALS);
        self.oversample = self.oversample.min(SMALL_OVERSAMPLE);
        self
    }

    pub fn chirp_config(&self) -> Result<ChirpConfig> {
        ChirpConfig::new(self.n, self.t, self.c1.value(self.n), self.c2.value(self.n))
    }

    pub fn sweep_values(&self) -> Vec<f64> {
        if self.values.is_empty() { self.sweep.default_values() } else { self.values.clone() }
    }

    /// Key/value echo for CSV side files and reports.
    pub fn echo(&self) -> Vec<(String, String)> {
        vec![
            ("n".into(), self.n.to_string()),
            ("t_us".into(), format!("{}", self.t * 1e6)),
            ("c1".into(), self.c1.to_string()),
            ("c2".into(), self.c2.to_string()),
            ("beta".into(), self.beta.to_string()),
            ("q".into(), self.q.to_string()),
            ("oversample".into(), self.oversample.to_string()),
            ("profile".into(), self.profile.to_string()),
            ("fc_hz".into(), self.fc_hz.to_string()),
            ("speed_kmh".into(), self.speed_kmh.to_string()),
            ("trials".into(), self.trials.to_string()),
            ("seed".into(), self.seed.to_string()),
        ]
    }
}

fn merge_rate(name: &str, current: ChirpRate, num: Option<f64>, den: Option<(f64, bool)>) -> Result<ChirpRate> {
    match (num, den) {
        (None, None) => Ok(current),
        (Some(num), None) => Ok(ChirpRate { num, ..current }),
        (None, Some((den, per_n))) => Ok(ChirpRate { den, per_n, ..current }),
        (Some(num), Some((den, per_n))) => {
            let r = ChirpRate { num, den, per_n };
            if r.value(1).is_finite() {
                Ok(r)
            } else {
                Err(bad(&format!("{name}_den"), "rate is not finite"))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ExperimentConfig> {
        ExperimentConfig::parse(text, Path::new("test.cfg"))
    }

    #[test]
    fn defaults_are_the_reference_setup() {
        let ec = parse("").unwrap();
        let cfg = ec.chirp_config().unwrap();
        assert_eq!(cfg.n(), 1024);
        assert!((cfg.c1() - 1.0 / 4096.0).abs() < 1e-18);
        assert!((cfg.subcarrier_spacing() - 3750.0).abs() < 0.01);
        assert_eq!(ec.sweep_values().len(), 11);
    }

    #[test]
    fn parses_keys_and_rationals() {
        let ec = parse(
            "# EVA at 500 km/h\n n = 64\nt_us=100\nc1_num = 3\nc1_den = 8N  # trailing comment\nc2_den = 128\n\
             sweep = span\nvalues = 6, 8,10\nprofile = EVA\nseed = 9\n",
        )
        .unwrap();
        assert_eq!(ec.n, 64);
        assert!((ec.t - 1e-4).abs() < 1e-18);
        assert_eq!(ec.c1.value(64), 3.0 / 512.0);
        assert_eq!(ec.c2.value(64), 1.0 / 128.0);
        assert_eq!(ec.sweep, SweepKind::Span);
        assert_eq!(ec.sweep_values(), vec![6.0, 8.0, 10.0]);
        assert_eq!(ec.seed, 9);
        assert_eq!(ChirpRate::parse_den("N"), Some((1.0, true)));
        assert_eq!(ChirpRate::parse_den("2*N"), Some((2.0, true)));
        assert_eq!(ChirpRate::parse_den("0"), None);
    }

    #[test]
    fn errors_name_the_key() {
        let e = parse("bogus = 1").unwrap_err().to_string();
        assert!(e.contains("bogus"), "{e}");
        let e = parse("q = 7").unwrap_err().to_string();
        assert!(e.contains("`q`"), "{e}");
        let e = parse("beta = x").unwrap_err().to_string();
        assert!(e.contains("beta"), "{e}");
        let e = parse("n = 4\nn = 8").unwrap_err().to_string();
        assert!(e.contains("twice"), "{e}");
        assert!(matches!(parse("just words"), Err(Error::Parse { line: 1, .. })));
        assert!(parse("profile = etu").is_err());
        assert!(parse("values = 3, 1").is_err());
        let missing = ExperimentConfig::load(Path::new("/nonexistent/eva.cfg")).unwrap_err();
        assert!(missing.to_string().contains("/nonexistent/eva.cfg"));
    }

    #[test]
    fn small_keeps_rate_and_sample_period() {
        let ec = ExperimentConfig { c2: ChirpRate::absolute(1.0 / 3072.0), ..Default::default() };
        let full = ec.chirp_config().unwrap();
        let small = ec.clone().small();
        let s = small.chirp_config().unwrap();
        assert_eq!((small.n, small.trials, small.oversample), (256, 20, 8));
        assert!((s.sample_period() - full.sample_period()).abs() < 1e-18);
        assert!((s.c1() * 256.0 - full.c1() * 1024.0).abs() < 1e-15);
        assert!((s.c2() * 256.0 - full.c2() * 1024.0).abs() < 1e-15);
    }
}
