//! Discrete affine Fourier transform (DAFT) and discrete Fresnel transform.
//!
//! The inverse DAFT maps `N` chirp-domain symbols to `N` time samples,
//!
//! ```text
//! x[k] = 1/√N · Σ_n X[n] · exp(j2π(c2·n² + n·k/N + c1·k²)),
//! ```
//!
//! and factors as chirp(c2) → inverse DFT → chirp(c1). [`DaftPlan`] is the
//! production O(N log N) path; the dense matrices are kept for checking it.
//! Every transform here is unitary (1/√N on both sides).

use std::f64::consts::PI;
use std::fmt;
use std::ops::Deref;
use std::sync::Arc;

use num_complex::Complex64;
use rand::Rng;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::linalg::{cis_cycles, wrap, CMatrix};

/// Frame parameters shared by every transform, basis and channel model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChirpConfig {
    n: usize,
    duration: f64,
    c1: f64,
    c2: f64,
}

impl ChirpConfig {
    /// `n` subcarriers over a frame of `duration` seconds with chirp
    /// parameters `c1` and `c2`.
    pub fn new(n: usize, duration: f64, c1: f64, c2: f64) -> Result<Self> {
        if n < 2 || n % 2 != 0 {
            return Err(Error::InvalidConfig(format!("N must be even and at least 2, got {n}")));
        }
        if !(duration.is_finite() && duration > 0.0) {
            return Err(Error::InvalidConfig(format!("frame duration must be positive, got {duration}")));
        }
        if !c1.is_finite() || !c2.is_finite() {
            return Err(Error::InvalidConfig("chirp parameters must be finite".into()));
        }
        Ok(ChirpConfig { n, duration, c1, c2 })
    }

    /// The simulation set-up used throughout the experiments:
    /// N = 1024, T = 266.667 µs (3.75 kHz spacing), c1 = 1/(4N), c2 = 1/(3N).
    pub fn reference() -> Self {
        let n = 1024;
        ChirpConfig {
            n,
            duration: 1.0 / 3750.0,
            c1: 1.0 / (4.0 * n as f64),
            c2: 1.0 / (3.0 * n as f64),
        }
    }

    /// OCDM parameters: c1 = c2 = −1/(2N).
    pub fn ocdm(n: usize, duration: f64) -> Result<Self> {
        let c = -1.0 / (2.0 * n as f64);
        Self::new(n, duration, c, c)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Frame duration T in seconds.
    pub fn duration(&self) -> f64 {
        self.duration
    }

    pub fn c1(&self) -> f64 {
        self.c1
    }

    pub fn c2(&self) -> f64 {
        self.c2
    }

    /// Base sample interval Δt = T/N.
    pub fn sample_period(&self) -> f64 {
        self.duration / self.n as f64
    }

    /// Subcarrier spacing 1/T.
    pub fn subcarrier_spacing(&self) -> f64 {
        1.0 / self.duration
    }

    /// Chirp-rate index C = 2N|c1|.
    pub fn chirp_index(&self) -> f64 {
        2.0 * self.n as f64 * self.c1.abs()
    }

    /// C when it is an integer (within 1e-9).
    pub fn integer_chirp_index(&self) -> Option<usize> {
        let c = self.chirp_index();
        let r = c.round();
        ((c - r).abs() < 1e-9).then_some(r as usize)
    }

    pub fn with_c1(self, c1: f64) -> Result<Self> {
        Self::new(self.n, self.duration, c1, self.c2)
    }

    pub fn with_c2(self, c2: f64) -> Result<Self> {
        Self::new(self.n, self.duration, self.c1, c2)
    }

    /// Same chirp parameters and sample period, different subcarrier count.
    /// c1 and c2 are rescaled so that `c·N` is preserved.
    pub fn rescaled(self, n: usize) -> Result<Self> {
        let ratio = self.n as f64 / n as f64;
        Self::new(n, self.sample_period() * n as f64, self.c1 * ratio, self.c2 * ratio)
    }

    pub(crate) fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::LengthMismatch { expected: self.n, got: len });
        }
        Ok(())
    }
}

/// Chirp-domain symbols for one frame together with their average power.
#[derive(Clone, Debug, PartialEq)]
pub struct SymbolVector {
    pub entries: Vec<Complex64>,
    pub sigma2: f64,
}

impl SymbolVector {
    pub fn new(entries: Vec<Complex64>, sigma2: f64) -> Self {
        SymbolVector { entries, sigma2 }
    }

    /// Uniform 4-QAM symbols with unit average power.
    pub fn random_qam4<R: Rng + ?Sized>(n: usize, rng: &mut R) -> Self {
        let a = std::f64::consts::FRAC_1_SQRT_2;
        let entries = (0..n)
            .map(|_| {
                let re = if rng.random::<bool>() { a } else { -a };
                let im = if rng.random::<bool>() { a } else { -a };
                Complex64::new(re, im)
            })
            .collect();
        SymbolVector { entries, sigma2: 1.0 }
    }

    /// Unit impulse at index `at`.
    pub fn impulse(n: usize, at: usize) -> Self {
        let mut entries = vec![Complex64::new(0.0, 0.0); n];
        entries[at] = Complex64::new(1.0, 0.0);
        SymbolVector { entries, sigma2: 1.0 / n as f64 }
    }
}

impl Deref for SymbolVector {
    type Target = [Complex64];

    fn deref(&self) -> &[Complex64] {
        &self.entries
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TransformKind {
    Daft,
    Idaft,
    Idfnt,
}

impl fmt::Display for TransformKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            TransformKind::Daft => "DAFT",
            TransformKind::Idaft => "IDAFT",
            TransformKind::Idfnt => "IDFnT",
        })
    }
}

/// Dense N×N transform matrix.
#[derive(Clone, Debug)]
pub struct TransformMatrix {
    pub kind: TransformKind,
    pub entries: CMatrix,
}

impl TransformMatrix {
    pub fn n(&self) -> usize {
        self.entries.rows()
    }

    pub fn apply(&self, x: &[Complex64]) -> Vec<Complex64> {
        self.entries.mul_vec(x)
    }

    /// ‖M·Mᴴ − I‖_max.
    pub fn unitarity_error(&self) -> f64 {
        let g = self.entries.matmul(&self.entries.conj_transpose());
        g.max_abs_diff(&CMatrix::identity(self.n()))
    }
}

/// IDAFT matrix, entry (k, n) = 1/√N · exp(j2π(c2·n² + n·k/N + c1·k²)).
pub fn idaft_matrix(cfg: &ChirpConfig) -> TransformMatrix {
    let n = cfg.n();
    let scale = 1.0 / (n as f64).sqrt();
    let entries = CMatrix::from_fn(n, n, |k, m| {
        // nk/N is reduced in integers first.
        let lin = ((m * k) % n) as f64 / n as f64;
        let (k, m) = (k as f64, m as f64);
        cis_cycles(wrap(cfg.c2() * m * m) + lin + wrap(cfg.c1() * k * k)) * scale
    });
    TransformMatrix { kind: TransformKind::Idaft, entries }
}

/// DAFT matrix A, the conjugate transpose of [`idaft_matrix`].
pub fn daft_matrix(cfg: &ChirpConfig) -> TransformMatrix {
    TransformMatrix { kind: TransformKind::Daft, entries: idaft_matrix(cfg).entries.conj_transpose() }
}

/// Inverse discrete Fresnel transform, entry (k, n) = 1/√N · e^{jπ/4} · e^{−jπ(k−n)²/N}.
pub fn idfnt_matrix(n: usize) -> Result<TransformMatrix> {
    if n < 2 || n % 2 != 0 {
        return Err(Error::InvalidConfig(format!("the discrete Fresnel transform needs an even N, got {n}")));
    }
    let scale = 1.0 / (n as f64).sqrt();
    let rot = Complex64::from_polar(1.0, PI / 4.0);
    let entries = CMatrix::from_fn(n, n, |k, m| {
        let d = k as i64 - m as i64;
        let d2 = ((d * d) as u64 % (2 * n as u64)) as f64;
        rot * cis_cycles(-d2 / (2.0 * n as f64)) * scale
    });
    Ok(TransformMatrix { kind: TransformKind::Idfnt, entries })
}

/// Precomputed chirp tables and FFT plans for fast (I)DAFT application.
#[derive(Clone)]
pub struct DaftPlan {
    cfg: ChirpConfig,
    pre: Vec<Complex64>,
    post: Vec<Complex64>,
    inverse: Arc<dyn Fft<f64>>,
    forward: Arc<dyn Fft<f64>>,
}

impl fmt::Debug for DaftPlan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("DaftPlan").field("cfg", &self.cfg).finish_non_exhaustive()
    }
}

impl DaftPlan {
    pub fn new(cfg: &ChirpConfig) -> Self {
        let n = cfg.n();
        let mut planner = FftPlanner::new();
        let pre = (0..n).map(|i| cis_cycles(cfg.c2() * (i * i) as f64)).collect();
        let post = (0..n).map(|i| cis_cycles(cfg.c1() * (i * i) as f64)).collect();
        DaftPlan {
            cfg: *cfg,
            pre,
            post,
            inverse: planner.plan_fft_inverse(n),
            forward: planner.plan_fft_forward(n),
        }
    }

    pub fn config(&self) -> &ChirpConfig {
        &self.cfg
    }

    /// IDAFT: symbols → time samples.
    pub fn modulate(&self, symbols: &[Complex64]) -> Result<Vec<Complex64>> {
        self.cfg.check_len(symbols.len())?;
        let mut buf: Vec<Complex64> = symbols.iter().zip(&self.pre).map(|(x, c)| x * c).collect();
        self.modulate_in_place(&mut buf);
        Ok(buf)
    }

    /// DAFT: time samples → symbols.
    pub fn demodulate(&self, samples: &[Complex64]) -> Result<Vec<Complex64>> {
        self.cfg.check_len(samples.len())?;
        let mut buf: Vec<Complex64> = samples.iter().zip(&self.post).map(|(y, c)| y * c.conj()).collect();
        self.forward.process(&mut buf);
        let scale = 1.0 / (self.cfg.n() as f64).sqrt();
        for (v, c) in buf.iter_mut().zip(&self.pre) {
            *v *= c.conj() * scale;
        }
        Ok(buf)
    }

    /// IDAFT on a buffer already multiplied by the c2 chirp.
    fn modulate_in_place(&self, buf: &mut [Complex64]) {
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.scratch_len()];
        self.finish_modulate(buf, &mut scratch);
    }

    fn finish_modulate(&self, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        self.inverse.process_with_scratch(buf, scratch);
        let scale = 1.0 / (self.cfg.n() as f64).sqrt();
        for (v, c) in buf.iter_mut().zip(&self.post) {
            *v *= c * scale;
        }
    }

    /// Scratch length needed by [`modulate_with_scratch`](Self::modulate_with_scratch).
    pub fn scratch_len(&self) -> usize {
        self.inverse.get_inplace_scratch_len()
    }

    /// Full IDAFT in place without allocating. `buf` holds N symbols;
    /// `scratch` at least [`scratch_len`](Self::scratch_len) entries.
    pub fn modulate_with_scratch(&self, buf: &mut [Complex64], scratch: &mut [Complex64]) {
        for (v, c) in buf.iter_mut().zip(&self.pre) {
            *v *= c;
        }
        self.finish_modulate(buf, scratch);
    }

    /// Full IDAFT in place.
    pub fn modulate_into(&self, buf: &mut [Complex64]) {
        let mut scratch = vec![Complex64::new(0.0, 0.0); self.scratch_len()];
        self.modulate_with_scratch(buf, &mut scratch);
    }
}

/// IDAFT of `symbols` through the chirp–IDFT–chirp factorization.
pub fn modulate(cfg: &ChirpConfig, symbols: &[Complex64]) -> Result<Vec<Complex64>> {
    DaftPlan::new(cfg).modulate(symbols)
}

/// DAFT of `samples`; the inverse of [`modulate`].
pub fn demodulate(cfg: &ChirpConfig, samples: &[Complex64]) -> Result<Vec<Complex64>> {
    DaftPlan::new(cfg).demodulate(samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::max_abs_diff;
    use proptest::prelude::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn cfg(n: usize, c1: f64, c2: f64) -> ChirpConfig {
        ChirpConfig::new(n, 1e-3, c1, c2).unwrap()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn rejects_odd_or_tiny_n() {
        assert!(ChirpConfig::new(7, 1.0, 0.0, 0.0).is_err());
        assert!(ChirpConfig::new(0, 1.0, 0.0, 0.0).is_err());
        assert!(ChirpConfig::new(4, 0.0, 0.0, 0.0).is_err());
        assert!(idfnt_matrix(5).is_err());
    }

    #[test]
    fn derived_quantities() {
        let cfg = ChirpConfig::new(32, 2e-3, 0.25, 0.0).unwrap();
        assert_eq!(cfg.sample_period() * 32.0, 2e-3);
        assert_eq!(cfg.chirp_index(), 16.0);
        assert_eq!(cfg.integer_chirp_index(), Some(16));
        let r = ChirpConfig::reference();
        assert!((r.subcarrier_spacing() - 3750.0).abs() < 1e-9);
    }

    #[test]
    fn zero_chirp_is_scaled_idft() {
        let m = idaft_matrix(&cfg(4, 0.0, 0.0));
        for k in 0..4 {
            for n in 0..4 {
                let want = Complex64::from_polar(0.5, 2.0 * PI * (n * k) as f64 / 4.0);
                assert!((m.entries[(k, n)] - want).norm() < 1e-15);
            }
        }
    }

    #[test]
    fn first_column_is_root_chirp() {
        let m = idaft_matrix(&cfg(8, 1.0 / 32.0, 1.0 / 24.0));
        for k in 0..8 {
            let want = Complex64::from_polar(1.0 / 8f64.sqrt(), 2.0 * PI * (k * k) as f64 / 32.0);
            assert!((m.entries[(k, 0)] - want).norm() < 1e-15);
        }
    }

    #[test]
    fn dense_idaft_is_unitary() {
        let m = idaft_matrix(&cfg(16, 1.0 / 64.0, 1.0 / 48.0));
        assert!(m.unitarity_error() < 1e-12);
        let a = daft_matrix(&cfg(16, 1.0 / 64.0, 1.0 / 48.0));
        assert!(a.entries.max_abs_diff(&m.entries.conj_transpose()) == 0.0);
    }

    #[test]
    fn fast_modulate_matches_dense() {
        let cfg = cfg(32, 1.0 / 128.0, 1.0 / 96.0);
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let x = SymbolVector::random_qam4(32, &mut rng);
        let fast = modulate(&cfg, &x).unwrap();
        let dense = idaft_matrix(&cfg).apply(&x);
        assert!(max_abs_diff(&fast, &dense) < 1e-12);
    }

    #[test]
    fn impulse_modulates_to_root_chirp() {
        let cfg = cfg(16, 0.013, 0.31);
        let x = modulate(&cfg, &SymbolVector::impulse(16, 0)).unwrap();
        for (k, v) in x.iter().enumerate() {
            let want = cis_cycles(cfg.c1() * (k * k) as f64) / 4.0;
            assert!((v - want).norm() < 1e-14);
        }
        let back = demodulate(&cfg, &x).unwrap();
        assert!(max_abs_diff(&back, &SymbolVector::impulse(16, 0)) < 1e-14);
    }

    #[test]
    fn demodulate_matches_dense_daft() {
        let cfg = cfg(24, 0.02, -0.7);
        let y: Vec<_> = (0..24).map(|i| c((i as f64).sin(), (i as f64 * 0.3).cos())).collect();
        let fast = demodulate(&cfg, &y).unwrap();
        let dense = daft_matrix(&cfg).apply(&y);
        assert!(max_abs_diff(&fast, &dense) < 1e-12);
    }

    #[test]
    fn round_trip_64() {
        let cfg = cfg(64, 1.0 / 256.0, 1.0 / 192.0);
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let x = SymbolVector::random_qam4(64, &mut rng);
        let back = demodulate(&cfg, &modulate(&cfg, &x).unwrap()).unwrap();
        assert!(max_abs_diff(&back, &x) < 1e-12);
    }

    #[test]
    fn length_mismatch_is_rejected() {
        let cfg = cfg(8, 0.0, 0.0);
        assert!(matches!(modulate(&cfg, &[c(1.0, 0.0); 7]), Err(Error::LengthMismatch { expected: 8, got: 7 })));
        assert!(demodulate(&cfg, &[c(1.0, 0.0); 9]).is_err());
    }

    #[test]
    fn idfnt_two_point() {
        let m = idfnt_matrix(2).unwrap();
        let rot = Complex64::from_polar(1.0 / 2f64.sqrt(), PI / 4.0);
        assert!((m.entries[(0, 0)] - rot).norm() < 1e-15);
        // exp(−jπ/2) = −j
        assert!((m.entries[(0, 1)] - rot * c(0.0, -1.0)).norm() < 1e-15);
        assert!((m.entries[(1, 0)] - rot * c(0.0, -1.0)).norm() < 1e-15);
        assert!(idfnt_matrix(32).unwrap().unitarity_error() < 1e-12);
    }

    #[test]
    fn idfnt_is_rotated_idaft() {
        let n = 32;
        let ocdm = ChirpConfig::ocdm(n, 1.0).unwrap();
        let f = idfnt_matrix(n).unwrap();
        let a = idaft_matrix(&ocdm);
        let rot = Complex64::from_polar(1.0, PI / 4.0);
        let diff = CMatrix::from_fn(n, n, |k, m| f.entries[(k, m)] - rot * a.entries[(k, m)]);
        assert!(diff.frobenius_norm() < 1e-11);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]

        #[test]
        fn modulate_is_linear(seed in any::<u64>(), a_re in -2.0..2.0f64, b_im in -2.0..2.0f64, c1 in -0.1..0.1f64) {
            let cfg = cfg(16, c1, 0.05);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = SymbolVector::random_qam4(16, &mut rng);
            let y = SymbolVector::random_qam4(16, &mut rng);
            let (a, b) = (c(a_re, 0.3), c(0.1, b_im));
            let mix: Vec<_> = x.iter().zip(y.iter()).map(|(u, v)| a * u + b * v).collect();
            let lhs = modulate(&cfg, &mix).unwrap();
            let mx = modulate(&cfg, &x).unwrap();
            let my = modulate(&cfg, &y).unwrap();
            let rhs: Vec<_> = mx.iter().zip(&my).map(|(u, v)| a * u + b * v).collect();
            prop_assert!(max_abs_diff(&lhs, &rhs) < 1e-12);
        }

        #[test]
        fn fast_and_dense_agree(seed in any::<u64>(), log_n in 1u32..7, c1 in -0.5..0.5f64, c2 in -0.5..0.5f64) {
            let n = 1usize << log_n;
            let cfg = cfg(n, c1, c2);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let x = SymbolVector::random_qam4(n, &mut rng);
            let fast = modulate(&cfg, &x).unwrap();
            let dense = idaft_matrix(&cfg).apply(&x);
            prop_assert!(max_abs_diff(&fast, &dense) < 1e-11);
            let back = demodulate(&cfg, &fast).unwrap();
            prop_assert!(max_abs_diff(&back, &x) < 1e-11);
        }
    }
}
