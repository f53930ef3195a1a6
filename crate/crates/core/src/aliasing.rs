//! Ideal aliased chirps and their mutual inner products.
//!
//! Sub-Nyquist base-rate samples of a chirp whose sweep exceeds N/T are, read
//! as a band-limited signal, a chirp whose instantaneous frequency folds back
//! by N/T each time it crosses a boundary t_{n,q}. Between boundaries
//!
//! ```text
//! φ̂_n(t) = exp(j2π(c2·n² + c1·u² + n·u/N − q·u)),   u = t/Δt,
//! q = q_n(t) = ⌊C·t/T + n/N⌋,                        C = 2N·c1.
//! ```
//!
//! The inner products I_{n,n'} are evaluated two ways: boundary-aligned
//! Gauss–Legendre quadrature of the sampled definition, and, for integer C,
//! the closed form that follows from splitting [0, T) into C segments and
//! summing the geometric series over segments.

use std::fmt;
use std::path::Path;

use num_complex::Complex64;
use rayon::prelude::*;

use crate::csvio::{sci, write_records};
use crate::error::{Error, Result};
use crate::linalg::{cis_cycles, wrap};
use crate::quadrature::GaussLegendre;
use crate::transforms::ChirpConfig;
use crate::waveform::{fine_rate, Waveform};

/// Default threshold on |I|/T separating aliased from orthogonal pairs.
pub const ALIASED_THRESHOLD: f64 = 0.05;

const GL_ORDER: usize = 8;

/// One aliased chirp: its index and the boundaries of its constant-q intervals.
#[derive(Clone, Debug, PartialEq)]
pub struct AliasedChirpSpec {
    cfg: ChirpConfig,
    n: usize,
    boundaries: Vec<f64>,
}

impl AliasedChirpSpec {
    /// Folding is defined for up-chirps only (c1 > 0).
    pub fn new(cfg: ChirpConfig, n: usize) -> Result<Self> {
        if cfg.c1() <= 0.0 {
            return Err(Error::InvalidConfig(format!("aliased chirps need c1 > 0, got {}", cfg.c1())));
        }
        check_index(&cfg, n)?;
        let c = cfg.chirp_index();
        let t = cfg.duration();
        let shift = n as f64 / cfg.n() as f64;
        // t_{n,q} = (T/C)(q − n/N) for every q whose boundary falls inside (0, T).
        let mut boundaries = vec![0.0];
        let mut q = 1u64;
        loop {
            let b = t / c * (q as f64 - shift);
            if b >= t * (1.0 - 1e-12) {
                break;
            }
            boundaries.push(b);
            q += 1;
        }
        boundaries.push(t);
        Ok(AliasedChirpSpec { cfg, n, boundaries })
    }

    pub fn config(&self) -> &ChirpConfig {
        &self.cfg
    }

    pub fn index(&self) -> usize {
        self.n
    }

    /// 0 = t_{n,0} < t_{n,1} < … < t_{n,last} = T; interval `q` is
    /// [boundaries[q], boundaries[q+1]).
    pub fn boundaries(&self) -> &[f64] {
        &self.boundaries
    }

    pub fn interval_count(&self) -> usize {
        self.boundaries.len() - 1
    }

    /// φ̂_n at `t` ∈ [0, T) using the given interval index.
    fn eval_with_q(&self, t: f64, q: i64) -> Complex64 {
        let u = t / self.cfg.sample_period();
        let n = self.n as f64;
        let ph = wrap(self.cfg.c2() * n * n) + wrap(self.cfg.c1() * u * u) + n * u / self.cfg.n() as f64
            - (q as f64) * u;
        cis_cycles(ph)
    }

    pub fn eval(&self, t: f64) -> Result<Complex64> {
        let q = q_index(&self.cfg, self.n, t)?;
        Ok(self.eval_with_q(t, q))
    }
}

fn check_index(cfg: &ChirpConfig, n: usize) -> Result<()> {
    if n >= cfg.n() {
        return Err(Error::out_of_range("chirp index", format!("{n} not below N = {}", cfg.n())));
    }
    Ok(())
}

/// q_n(t) = ⌊C·t/T + n/N⌋ for t ∈ [0, T).
pub fn q_index(cfg: &ChirpConfig, n: usize, t: f64) -> Result<i64> {
    check_index(cfg, n)?;
    if !(0.0..cfg.duration()).contains(&t) {
        return Err(Error::out_of_range("time", format!("{t} s outside [0, {})", cfg.duration())));
    }
    Ok((cfg.chirp_index() * t / cfg.duration() + n as f64 / cfg.n() as f64).floor() as i64)
}

/// Samples φ̂_n at rate O·N/T on [0, T).
pub fn ideal_aliased_chirp(spec: &AliasedChirpSpec, o: usize) -> Result<Waveform> {
    if o == 0 {
        return Err(Error::out_of_range("oversampling factor", "must be at least 1"));
    }
    let cfg = &spec.cfg;
    let len = cfg.n() * o;
    let int_c = cfg.integer_chirp_index();
    let samples = (0..len)
        .map(|i| {
            let t = cfg.sample_period() * i as f64 / o as f64;
            // Exact integer floor when C is an integer, so samples sitting on
            // a boundary land in the right interval.
            let q = match int_c {
                Some(c) => ((c * i + spec.n * o) / (cfg.n() * o)) as i64,
                None => (cfg.chirp_index() * t / cfg.duration() + spec.n as f64 / cfg.n() as f64).floor() as i64,
            };
            spec.eval_with_q(t, q)
        })
        .collect();
    Ok(Waveform::new(samples, fine_rate(cfg, o), 0.0))
}

/// How an [`OrthogonalityMatrix`] was obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum InnerProductMethod {
    /// Boundary-aligned Gauss–Legendre with `panels_per_sample` panels per Δt.
    Quadrature { panels_per_sample: usize },
    /// Closed-form segment sum; integer C only.
    Exact,
}

impl fmt::Display for InnerProductMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            InnerProductMethod::Quadrature { panels_per_sample } => write!(f, "quadrature(O={panels_per_sample})"),
            InnerProductMethod::Exact => write!(f, "exact"),
        }
    }
}

/// |I_{n,n'}| for all pairs, in seconds.
#[derive(Clone, Debug, PartialEq)]
pub struct OrthogonalityMatrix {
    pub cfg: ChirpConfig,
    pub method: InnerProductMethod,
    abs: Vec<f64>,
}

impl OrthogonalityMatrix {
    pub fn n(&self) -> usize {
        self.cfg.n()
    }

    pub fn abs(&self, n: usize, n_prime: usize) -> f64 {
        self.abs[n * self.n() + n_prime]
    }

    /// |I_{n,n'}|/T.
    pub fn normalized(&self, n: usize, n_prime: usize) -> f64 {
        self.abs(n, n_prime) / self.cfg.duration()
    }

    pub fn max_off_diagonal(&self) -> f64 {
        let n = self.n();
        (0..n)
            .flat_map(|a| (0..n).filter(move |&b| b != a).map(move |b| (a, b)))
            .map(|(a, b)| self.normalized(a, b))
            .fold(0.0, f64::max)
    }

    /// Pairs with |I|/T above `threshold`, row-major.
    pub fn bright(&self, threshold: f64) -> Vec<(usize, usize)> {
        let n = self.n();
        (0..n)
            .flat_map(|a| (0..n).map(move |b| (a, b)))
            .filter(|&(a, b)| self.normalized(a, b) > threshold)
            .collect()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let n = self.n();
        let rows = (0..n).flat_map(|a| {
            (0..n).map(move |b| vec![a.to_string(), b.to_string(), sci(self.normalized(a, b))])
        });
        write_records(path, &["n", "n_prime", "abs_I_over_T"], rows)
    }
}

/// I_{n,n'} = ∫_0^T φ̂_n(t)·φ̂*_{n'}(t) dt by Gauss–Legendre on every
/// interval between the merged boundaries of both chirps, with `o` panels
/// per base interval Δt.
pub fn inner_product_quadrature(cfg: &ChirpConfig, n: usize, n_prime: usize, o: usize) -> Result<Complex64> {
    let a = AliasedChirpSpec::new(*cfg, n)?;
    let b = AliasedChirpSpec::new(*cfg, n_prime)?;
    Ok(pair_quadrature(&a, &b, o, &GaussLegendre::new(GL_ORDER)))
}

fn pair_quadrature(a: &AliasedChirpSpec, b: &AliasedChirpSpec, o: usize, gl: &GaussLegendre) -> Complex64 {
    let ts = a.cfg.sample_period();
    let mut acc = Complex64::new(0.0, 0.0);
    let (mut ia, mut ib) = (0usize, 0usize);
    let mut lo = 0.0;
    while ia < a.interval_count() && ib < b.interval_count() {
        let hi = a.boundaries[ia + 1].min(b.boundaries[ib + 1]);
        if hi > lo {
            let panels = ((hi - lo) / ts * o as f64).ceil().max(1.0) as usize;
            let (qa, qb) = (ia as i64, ib as i64);
            acc += gl.integrate(|t| a.eval_with_q(t, qa) * b.eval_with_q(t, qb).conj(), lo, hi, panels);
        }
        lo = hi;
        if a.boundaries[ia + 1] <= hi {
            ia += 1;
        }
        if b.boundaries[ib + 1] <= hi {
            ib += 1;
        }
    }
    acc
}

/// Quadrature evaluation of the full matrix. Works for any C.
pub fn inner_product_matrix(cfg: &ChirpConfig, o: usize) -> Result<OrthogonalityMatrix> {
    if o == 0 {
        return Err(Error::out_of_range("oversampling factor", "must be at least 1"));
    }
    let n = cfg.n();
    let specs: Vec<AliasedChirpSpec> = (0..n).map(|i| AliasedChirpSpec::new(*cfg, i)).collect::<Result<_>>()?;
    let gl = GaussLegendre::new(GL_ORDER);
    let abs: Vec<f64> = (0..n * n)
        .into_par_iter()
        .map(|k| pair_quadrature(&specs[k / n], &specs[k % n], o, &gl).norm())
        .collect();
    Ok(OrthogonalityMatrix { cfg: *cfg, method: InnerProductMethod::Quadrature { panels_per_sample: o }, abs })
}

/// Constant pieces of η(ε) = (n − n') − N·(⌊ε + n/N⌋ − ⌊ε + n'/N⌋) on
/// [0, 1): (start, end, η). At most three pieces.
pub fn eta_pieces(n_total: usize, n: usize, n_prime: usize) -> Vec<(f64, f64, i64)> {
    let nn = n_total as f64;
    let mut cuts = vec![0.0, 1.0];
    for k in [n, n_prime] {
        if k > 0 {
            cuts.push(1.0 - k as f64 / nn);
        }
    }
    cuts.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cuts.dedup();
    cuts.windows(2)
        .map(|w| {
            let mid = 0.5 * (w[0] + w[1]);
            let dq = (mid + n as f64 / nn).floor() - (mid + n_prime as f64 / nn).floor();
            (w[0], w[1], n as i64 - n_prime as i64 - n_total as i64 * dq as i64)
        })
        .collect()
}

/// Closed-form I_{n,n'} for integer C:
/// e^{j2πc2(n² − n'²)}·T·Σ_{pieces with C | η} ∫ e^{j2π(η/C)ε} dε.
pub fn inner_product_exact(cfg: &ChirpConfig, n: usize, n_prime: usize) -> Result<Complex64> {
    check_index(cfg, n)?;
    check_index(cfg, n_prime)?;
    if cfg.c1() <= 0.0 {
        return Err(Error::InvalidConfig(format!("aliased chirps need c1 > 0, got {}", cfg.c1())));
    }
    let c = cfg.integer_chirp_index().ok_or(Error::NonIntegerChirpIndex(cfg.chirp_index()))? as i64;
    let mut sum = Complex64::new(0.0, 0.0);
    for (a, b, eta) in eta_pieces(cfg.n(), n, n_prime) {
        if eta.rem_euclid(c) != 0 {
            continue;
        }
        let k = (eta / c) as f64;
        sum += if k == 0.0 {
            Complex64::new(b - a, 0.0)
        } else {
            (cis_cycles(k * b) - cis_cycles(k * a)) / Complex64::new(0.0, 2.0 * std::f64::consts::PI * k)
        };
    }
    let (nf, npf) = (n as f64, n_prime as f64);
    let lead = cis_cycles(wrap(cfg.c2() * nf * nf) - wrap(cfg.c2() * npf * npf));
    Ok(lead * sum * cfg.duration())
}

pub fn inner_product_matrix_exact(cfg: &ChirpConfig) -> Result<OrthogonalityMatrix> {
    let n = cfg.n();
    let mut abs = Vec::with_capacity(n * n);
    for a in 0..n {
        for b in 0..n {
            abs.push(inner_product_exact(cfg, a, b)?.norm());
        }
    }
    Ok(OrthogonalityMatrix { cfg: *cfg, method: InnerProductMethod::Exact, abs })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Orthogonality {
    Orthogonal,
    Aliased,
}

impl fmt::Display for Orthogonality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Orthogonality::Orthogonal => "ORTHOGONAL",
            Orthogonality::Aliased => "ALIASED",
        })
    }
}

/// ALIASED iff some constant piece of η is a multiple of C. Needs integer C.
pub fn predict_orthogonality(cfg: &ChirpConfig, n: usize, n_prime: usize) -> Result<Orthogonality> {
    check_index(cfg, n)?;
    check_index(cfg, n_prime)?;
    if n == n_prime {
        return Err(Error::out_of_range("chirp pair", format!("n = n' = {n}")));
    }
    let c = cfg.integer_chirp_index().ok_or(Error::NonIntegerChirpIndex(cfg.chirp_index()))? as i64;
    if c == 0 {
        return Err(Error::NonIntegerChirpIndex(0.0));
    }
    let aliased = eta_pieces(cfg.n(), n, n_prime).iter().any(|&(_, _, eta)| eta.rem_euclid(c) == 0);
    Ok(if aliased { Orthogonality::Aliased } else { Orthogonality::Orthogonal })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::transforms::ChirpConfig;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn cfg_c(n: usize, c: usize) -> ChirpConfig {
        // C = 2N·c1  ⇒  c1 = C/(2N)
        ChirpConfig::new(n, 1e-3, c as f64 / (2.0 * n as f64), 1.0 / (3.0 * n as f64)).unwrap()
    }

    #[test]
    fn q_index_examples() {
        let cfg = cfg_c(32, 16);
        assert_eq!(q_index(&cfg, 0, 0.0).unwrap(), 0);
        assert_eq!(q_index(&cfg, 8, 0.5e-3).unwrap(), 8);
        assert!(q_index(&cfg, 8, 1e-3).is_err());
        assert!(q_index(&cfg, 32, 0.0).is_err());
    }

    #[test]
    fn q_index_agrees_with_boundary_scan() {
        let cfg = cfg_c(32, 16);
        let specs: Vec<_> = (0..32).map(|n| AliasedChirpSpec::new(cfg, n).unwrap()).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..1000 {
            let n = rng.random_range(0..32);
            let t = rng.random_range(0.0..1e-3);
            let b = specs[n].boundaries();
            let scan = b.windows(2).position(|w| w[0] <= t && t < w[1]).unwrap() as i64;
            assert_eq!(q_index(&cfg, n, t).unwrap(), scan);
        }
    }

    #[test]
    fn boundaries_increase_from_zero_to_t() {
        let cfg = cfg_c(32, 16);
        for n in 0..32 {
            let s = AliasedChirpSpec::new(cfg, n).unwrap();
            let b = s.boundaries();
            assert_eq!(b[0], 0.0);
            assert_eq!(*b.last().unwrap(), 1e-3);
            assert!(b.windows(2).all(|w| w[1] > w[0]));
            // q runs over 0..C, plus a last partial interval q = C when n > 0.
            assert_eq!(s.interval_count(), 16 + usize::from(n > 0));
        }
        assert!(AliasedChirpSpec::new(cfg_c(32, 16).with_c1(-0.1).unwrap(), 0).is_err());
    }

    #[test]
    fn base_rate_samples_equal_chirp_sequence() {
        let cfg = cfg_c(32, 16);
        for n in [0, 5, 31] {
            let wf = ideal_aliased_chirp(&AliasedChirpSpec::new(cfg, n).unwrap(), 1).unwrap();
            for (k, z) in wf.samples.iter().enumerate() {
                let (kf, nf) = (k as f64, n as f64);
                let want = cis_cycles(cfg.c1() * kf * kf + nf * kf / 32.0 + cfg.c2() * nf * nf);
                assert!((z - want).norm() < 1e-12);
            }
        }
    }

    #[test]
    fn first_interval_is_root_chirp() {
        let cfg = cfg_c(32, 64);
        let s = AliasedChirpSpec::new(cfg, 0).unwrap();
        let wf = ideal_aliased_chirp(&s, 16).unwrap();
        let end = s.boundaries()[1];
        for (i, z) in wf.samples.iter().enumerate() {
            let t = wf.time(i);
            if t >= end {
                break;
            }
            let u = t / cfg.sample_period();
            assert!((z - cis_cycles(cfg.c1() * u * u)).norm() < 1e-12);
        }
    }

    #[test]
    fn instantaneous_frequency_stays_in_one_base_band() {
        // Inside each interval the fold keeps the frequency in [0, N/T). The
        // phase is discontinuous at the boundaries, so steps across them are
        // skipped.
        let cfg = cfg_c(32, 16);
        let o = 64;
        let band = 32.0 / cfg.duration();
        for n in [0, 7, 20] {
            let spec = AliasedChirpSpec::new(cfg, n).unwrap();
            let wf = ideal_aliased_chirp(&spec, o).unwrap();
            let dt = wf.dt();
            for (i, w) in wf.samples.windows(2).enumerate() {
                // q = ⌊(C·i + n·O)/(N·O)⌋ exactly on the fine grid.
                let q = |i: usize| (16 * i + n * o) / (32 * o);
                if q(i) != q(i + 1) {
                    continue;
                }
                let f = (w[1] * w[0].conj()).arg() / (2.0 * std::f64::consts::PI * dt);
                assert!(f >= -1e-6 * band && f < band, "f = {f}");
            }
        }
    }

    #[test]
    fn exact_and_quadrature_agree() {
        for c in [16, 32, 48] {
            let cfg = cfg_c(16, c);
            let mut rng = ChaCha8Rng::seed_from_u64(c as u64);
            for _ in 0..20 {
                let (a, b) = (rng.random_range(0..16), rng.random_range(0..16));
                let q = inner_product_quadrature(&cfg, a, b, 8).unwrap();
                let e = inner_product_exact(&cfg, a, b).unwrap();
                assert!((q - e).norm() < 1e-9 * cfg.duration(), "C={c} ({a},{b}): {q} vs {e}");
            }
        }
    }

    #[test]
    fn diagonal_is_t() {
        let m = inner_product_matrix(&cfg_c(16, 8), 64).unwrap();
        for n in 0..16 {
            assert!((m.normalized(n, n) - 1.0).abs() < 1e-3);
        }
    }

    #[test]
    fn known_zero_in_band_at_quarter_offsets() {
        // With N = 32, C = 16 the separation-16 pair (24, 8) integrates to 0:
        // its η pieces ±16 give ∫ e^{±j2πε} over arcs that cancel.
        let cfg = cfg_c(32, 16);
        assert!(inner_product_exact(&cfg, 24, 8).unwrap().norm() < 1e-15);
        let v = inner_product_exact(&cfg, 20, 4).unwrap().norm() / cfg.duration();
        let want = 2.0 / std::f64::consts::PI * (2.0 * std::f64::consts::PI * (1.0 - 20.0 / 32.0)).cos().abs();
        assert!((v - want).abs() < 1e-12);
    }

    #[test]
    fn predictor_examples() {
        let c48 = cfg_c(32, 48);
        for a in 0..32 {
            for b in 0..32 {
                if a != b {
                    assert_eq!(predict_orthogonality(&c48, a, b).unwrap(), Orthogonality::Orthogonal);
                }
            }
        }
        assert_eq!(predict_orthogonality(&cfg_c(32, 16), 20, 4).unwrap(), Orthogonality::Aliased);
        assert!(predict_orthogonality(&c48, 3, 3).is_err());
        let frac = ChirpConfig::new(32, 1e-3, 0.3, 0.0).unwrap();
        assert!(matches!(predict_orthogonality(&frac, 1, 2), Err(Error::NonIntegerChirpIndex(_))));
    }

    #[test]
    fn csv_export() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("ortho.csv");
        let m = inner_product_matrix_exact(&cfg_c(4, 2)).unwrap();
        m.write_csv(&p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("n,n_prime,abs_I_over_T\n0,0,1.00000000000e0\n"));
        assert_eq!(text.lines().count(), 17);
    }

    proptest! {
        #[test]
        fn eta_has_at_most_three_pieces(nn in 1usize..40, a in 0usize..80, b in 0usize..80) {
            let n_total = 2 * nn;
            let (a, b) = (a % n_total, b % n_total);
            let p = eta_pieces(n_total, a, b);
            prop_assert!(p.len() <= 3);
            prop_assert!(p.iter().all(|&(_, _, e)| e.unsigned_abs() < n_total as u64));
        }

        #[test]
        fn case_one_is_always_orthogonal(nn in 1usize..20, extra in 0usize..20, a in 0usize..40, b in 0usize..40) {
            let n = 2 * nn;
            let cfg = cfg_c(n, n + extra);
            let (a, b) = (a % n, b % n);
            prop_assume!(a != b);
            prop_assert_eq!(predict_orthogonality(&cfg, a, b).unwrap(), Orthogonality::Orthogonal);
            prop_assert!(inner_product_exact(&cfg, a, b).unwrap().norm() < 1e-12 * cfg.duration());
        }

        #[test]
        fn exact_is_hermitian(c in 1usize..40, a in 0usize..16, b in 0usize..16) {
            let cfg = cfg_c(16, c);
            let x = inner_product_exact(&cfg, a, b).unwrap();
            let y = inner_product_exact(&cfg, b, a).unwrap();
            prop_assert!((x - y.conj()).norm() < 1e-12 * cfg.duration());
        }
    }
}
