//! Averages over uniformly distributed pure qudit states.
//!
//! States are drawn in Hurwitz coordinates: `d − 1` polar angles
//! `θ_p ∈ [0, π/2]` and `d − 1` phases `χ_p ∈ [0, 2π)`, with density
//! `Π_p cos θ_p (sin θ_p)^{2p−1}` for the polar angles and uniform phases.
//! The marginal CDF of `θ_p` is `sin^{2p} θ_p`, so `θ_p = asin(u^{1/2p})`.

use std::f64::consts::{FRAC_PI_2, TAU};

use nalgebra::DVector;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::ChainConfig;
use crate::error::{ChainError, Result};
use crate::transfer::{Corrections, QuditAmplitudes, TransferSimulator};

/// Samples are drawn in fixed-size chunks, each from its own stream, so the
/// result does not depend on how many threads run them.
const CHUNK: usize = 1024;

/// Hurwitz coordinates of a pure qudit state; index `p − 1` holds `θ_p`, `χ_p`.
#[derive(Debug, Clone, PartialEq)]
pub struct HurwitzAngles {
    thetas: Vec<f64>,
    chis: Vec<f64>,
}

impl HurwitzAngles {
    pub fn new(thetas: Vec<f64>, chis: Vec<f64>) -> Result<Self> {
        if thetas.is_empty() || thetas.len() != chis.len() {
            return Err(ChainError::Domain(format!(
                "need d-1 >= 1 polar angles and as many phases, got {} and {}",
                thetas.len(),
                chis.len()
            )));
        }
        if let Some(t) = thetas.iter().find(|t| !(0.0..=FRAC_PI_2).contains(*t)) {
            return Err(ChainError::Domain(format!("polar angle {t} outside [0, π/2]")));
        }
        if let Some(c) = chis.iter().find(|c| !(**c >= 0.0 && **c < TAU)) {
            return Err(ChainError::Domain(format!("phase {c} outside [0, 2π)")));
        }
        Ok(Self { thetas, chis })
    }

    /// Qudit dimension `d`.
    pub fn dim(&self) -> usize {
        self.thetas.len() + 1
    }

    pub fn thetas(&self) -> &[f64] {
        &self.thetas
    }

    pub fn chis(&self) -> &[f64] {
        &self.chis
    }
}

/// `(cos θ_{d−1}, sin θ_{d−1} cos θ_{d−2} e^{iχ_{d−1}}, …, Π sin θ_p e^{iχ_1})`.
pub fn hurwitz_state(angles: &HurwitzAngles) -> QuditAmplitudes {
    let d = angles.dim();
    let mut alpha = DVector::zeros(d);
    let mut sin_prod = 1.0;
    for k in 0..d {
        // component k uses θ_{d−1−k} (cosine) after the sines of θ_{d−1} … θ_{d−k}
        let modulus = if k + 1 < d {
            sin_prod * angles.thetas[d - 2 - k].cos()
        } else {
            sin_prod
        };
        let phase = if k == 0 { 0.0 } else { angles.chis[d - 1 - k] };
        alpha[k] = Complex64::from_polar(modulus, phase);
        if k + 1 < d {
            sin_prod *= angles.thetas[d - 2 - k].sin();
        }
    }
    QuditAmplitudes::new(alpha).expect("Hurwitz states are normalized")
}

/// Draws Hurwitz angles from the uniform measure.
pub fn sample_angles<R: Rng + ?Sized>(d: usize, rng: &mut R) -> HurwitzAngles {
    let mut thetas = Vec::with_capacity(d - 1);
    let mut chis = Vec::with_capacity(d - 1);
    for p in 1..d {
        let u: f64 = rng.gen();
        thetas.push(u.powf(1.0 / (2 * p) as f64).asin().min(FRAC_PI_2));
        chis.push(rng.gen::<f64>() * TAU);
    }
    HurwitzAngles { thetas, chis }
}

/// Seeded stream of uniformly random pure qudit states.
#[derive(Debug, Clone)]
pub struct HaarSampler {
    d: usize,
    rng: ChaCha8Rng,
}

impl HaarSampler {
    pub fn new(d: usize, seed: u64) -> Result<Self> {
        Self::with_stream(d, seed, 0)
    }

    /// Independent sub-stream `stream` of `seed`.
    pub fn with_stream(d: usize, seed: u64, stream: u64) -> Result<Self> {
        if d < 2 {
            return Err(ChainError::Domain("qudit dimension must be at least 2".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Ok(Self { d, rng })
    }

    pub fn sample(&mut self) -> QuditAmplitudes {
        hurwitz_state(&sample_angles(self.d, &mut self.rng))
    }
}

impl Iterator for HaarSampler {
    type Item = QuditAmplitudes;

    fn next(&mut self) -> Option<Self::Item> {
        Some(self.sample())
    }
}

/// One uniformly random pure qudit state.
pub fn sample_haar(d: usize, seed: u64) -> Result<QuditAmplitudes> {
    Ok(HaarSampler::new(d, seed)?.sample())
}

/// `E[α_a α_b* α_c α_e*]` for Haar-random `α`.
pub fn quartic_moment(d: usize, a: usize, b: usize, c: usize, e: usize) -> f64 {
    let delta = |x: usize, y: usize| if x == y { 1.0 } else { 0.0 };
    (delta(a, b) * delta(c, e) + delta(a, e) * delta(c, b)) / (d * (d + 1)) as f64
}

/// Sample mean and its standard error.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    pub mean: f64,
    pub standard_error: f64,
    pub samples: usize,
}

/// Monte Carlo estimate of `E[f(φ)]` over Haar-random `φ`.
///
/// Deterministic in `(seed, n_samples)`: chunk `i` uses stream `i` of `seed`
/// and chunks are reduced in index order.
pub fn monte_carlo<F>(d: usize, n_samples: usize, seed: u64, f: F) -> Result<McEstimate>
where
    F: Fn(&QuditAmplitudes) -> Result<f64> + Sync,
{
    if n_samples < 2 {
        return Err(ChainError::Domain("need at least two samples".into()));
    }
    let n_chunks = n_samples.div_ceil(CHUNK);
    let sums = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut sampler = HaarSampler::with_stream(d, seed, chunk as u64)?;
            let count = CHUNK.min(n_samples - chunk * CHUNK);
            let (mut s1, mut s2) = (0.0, 0.0);
            for _ in 0..count {
                let x = f(&sampler.sample())?;
                s1 += x;
                s2 += x * x;
            }
            Ok((s1, s2))
        })
        .collect::<Result<Vec<_>>>()?;
    let (s1, s2) = sums.iter().fold((0.0, 0.0), |(a, b), (x, y)| (a + x, b + y));
    let n = n_samples as f64;
    let mean = s1 / n;
    let var = ((s2 - n * mean * mean) / (n - 1.0)).max(0.0);
    Ok(McEstimate {
        mean,
        standard_error: (var / n).sqrt(),
        samples: n_samples,
    })
}

/// Monte Carlo Haar average of the corrected fidelity; every sample is evolved
/// through the chain directly.
pub fn average_fidelity_mc(config: &ChainConfig, tau: f64, n_samples: usize, seed: u64) -> Result<McEstimate> {
    average_fidelity_mc_with(&TransferSimulator::new(config)?, tau, n_samples, seed, default_corrections(config))
}

pub fn average_fidelity_mc_with(
    sim: &TransferSimulator,
    tau: f64,
    n_samples: usize,
    seed: u64,
    corrections: Corrections,
) -> Result<McEstimate> {
    if n_samples < 100 {
        return Err(ChainError::Domain(format!("need at least 100 samples, got {n_samples}")));
    }
    monte_carlo(sim.config().qudit_dim, n_samples, seed, |alpha| {
        sim.corrected_fidelity(alpha, tau, corrections)
    })
}

/// Exact Haar average via the quartic-moment contraction of the receiver channel.
pub fn average_fidelity_exact(config: &ChainConfig, tau: f64) -> Result<f64> {
    average_fidelity_exact_with(&TransferSimulator::new(config)?, tau, default_corrections(config))
}

pub fn average_fidelity_exact_with(sim: &TransferSimulator, tau: f64, corrections: Corrections) -> Result<f64> {
    Ok(sim.channel(tau, corrections)?.haar_average())
}

/// Both corrections for odd `N`; only the field phase for even `N`, where no
/// swap phase is defined.
pub fn default_corrections(config: &ChainConfig) -> Corrections {
    Corrections {
        phase_gate: config.bus_length % 2 == 1,
        field_phase: true,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_1_SQRT_2;

    #[test]
    fn zero_angles_give_ground_level() {
        let a = hurwitz_state(&HurwitzAngles::new(vec![0.0; 3], vec![0.0; 3]).unwrap());
        assert_eq!(a.get(0), Complex64::new(1.0, 0.0));
        assert!((1..4).all(|k| a.get(k).norm() == 0.0));
    }

    #[test]
    fn qubit_equator() {
        let a = hurwitz_state(&HurwitzAngles::new(vec![std::f64::consts::FRAC_PI_4], vec![0.0]).unwrap());
        assert!((a.get(0).re - FRAC_1_SQRT_2).abs() < 1e-15);
        assert!((a.get(1).re - FRAC_1_SQRT_2).abs() < 1e-15);
    }

    #[test]
    fn component_layout() {
        // d = 3: (cos θ2, sin θ2 cos θ1 e^{iχ2}, sin θ2 sin θ1 e^{iχ1})
        let (t1, t2, c1, c2) = (0.3, 1.1, 0.7, 2.9);
        let a = hurwitz_state(&HurwitzAngles::new(vec![t1, t2], vec![c1, c2]).unwrap());
        assert!((a.get(0) - Complex64::new(t2.cos(), 0.0)).norm() < 1e-15);
        assert!((a.get(1) - Complex64::from_polar(t2.sin() * t1.cos(), c2)).norm() < 1e-15);
        assert!((a.get(2) - Complex64::from_polar(t2.sin() * t1.sin(), c1)).norm() < 1e-15);
    }

    #[test]
    fn angle_ranges_enforced() {
        assert!(HurwitzAngles::new(vec![1.6], vec![0.0]).is_err());
        assert!(HurwitzAngles::new(vec![0.2], vec![TAU]).is_err());
        assert!(HurwitzAngles::new(vec![0.2], vec![-0.1]).is_err());
        assert!(HurwitzAngles::new(vec![0.2, 0.1], vec![0.0]).is_err());
    }

    #[test]
    fn sampler_is_seed_deterministic() {
        let a: Vec<_> = HaarSampler::new(4, 9).unwrap().take(5).collect();
        let b: Vec<_> = HaarSampler::new(4, 9).unwrap().take(5).collect();
        let c: Vec<_> = HaarSampler::new(4, 10).unwrap().take(5).collect();
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn first_and_second_moments() {
        let d = 3;
        let est2 = monte_carlo(d, 100_000, 1, |a| Ok(a.get(0).norm_sqr())).unwrap();
        assert!((est2.mean - 1.0 / 3.0).abs() < 3.0 * est2.standard_error, "{est2:?}");
        let est4 = monte_carlo(d, 100_000, 2, |a| Ok(a.get(0).norm_sqr().powi(2))).unwrap();
        let exact = quartic_moment(d, 0, 0, 0, 0);
        assert!((exact - 1.0 / 6.0).abs() < 1e-15);
        assert!((est4.mean - exact).abs() < 3.0 * est4.standard_error, "{est4:?}");
    }

    #[test]
    fn off_diagonal_quartic_moment() {
        // E[|α_0|²|α_1|²] = 1/(d(d+1))
        let d = 4;
        assert!((quartic_moment(d, 0, 0, 1, 1) - 0.05).abs() < 1e-15);
        let est = monte_carlo(d, 100_000, 3, |a| Ok(a.get(0).norm_sqr() * a.get(1).norm_sqr())).unwrap();
        assert!((est.mean - 0.05).abs() < 3.0 * est.standard_error);
    }

    #[test]
    fn quartic_trace_identities() {
        for d in 2..6 {
            // Σ_a E|α_a|⁴ = 2/(d+1) and Σ_ab E|α_a|²|α_b|² = 1
            let diag: f64 = (0..d).map(|a| quartic_moment(d, a, a, a, a)).sum();
            assert!((diag * (d * (d + 1)) as f64 / 2.0 - d as f64).abs() < 1e-12);
            let all: f64 = (0..d)
                .flat_map(|a| (0..d).map(move |b| (a, b)))
                .map(|(a, b)| quartic_moment(d, a, a, b, b))
                .sum();
            assert!((all - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn too_few_samples() {
        let c = ChainConfig::new(1, 4, 2, 0.1).unwrap();
        assert!(average_fidelity_mc(&c, 1.0, 10, 0).is_err());
    }

    #[test]
    fn decoupled_chain_averages_to_one_over_d() {
        for d in 2..=4 {
            let c = ChainConfig::new(3, 8, d, 0.0).unwrap();
            let f = average_fidelity_exact(&c, 2.0).unwrap();
            assert!((f - 1.0 / d as f64).abs() < 1e-14, "d={d}: {f}");
        }
    }
}
