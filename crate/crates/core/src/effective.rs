//! Closed-form predictions of the linearized, resonant-mode picture.
//!
//! With `g ≪ J` the two registers couple resonantly to the zero-energy bus
//! mode `κ = (N+1)/2` (odd `N` only). The three coupled modes then perform a
//! sender ↔ receiver swap at `τ₀ = π / (√2 |t_κ|)`, picking up a phase
//! `(−1)^κ` per transferred excitation.

use std::f64::consts::{PI, SQRT_2};

use nalgebra::{DMatrix, Matrix3};
use num_complex::Complex64;

use crate::config::ChainConfig;
use crate::error::{ChainError, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct EffectivePrediction {
    pub kappa: usize,
    pub t_kappa: f64,
    pub tau0: f64,
    /// `ε_k`, `k = 1..=N`.
    pub mode_energies: Vec<f64>,
    /// `t_k`, `k = 1..=N`.
    pub mode_couplings: Vec<f64>,
    /// Each transferred excitation picks up `(−1)^swap_phase_exponent`.
    pub swap_phase_exponent: usize,
}

/// Bus mode energies `ε_k = −4SJ cos(kπ/(N+1))` and register couplings
/// `t_k = −(2Sg/A) sin(kπ/(N+1))`, `A = √((N+1)/2)`.
pub fn mode_spectrum(config: &ChainConfig) -> (Vec<f64>, Vec<f64>) {
    let n = config.bus_length as f64;
    let spin = config.spin();
    let a = ((n + 1.0) / 2.0).sqrt();
    (1..=config.bus_length)
        .map(|k| {
            let x = k as f64 * PI / (n + 1.0);
            (
                -4.0 * spin * config.coupling_j * x.cos(),
                -2.0 * spin * config.coupling_g / a * x.sin(),
            )
        })
        .unzip()
}

/// `κ = (N+1)/2`; only defined for odd `N`.
pub fn resonant_mode(config: &ChainConfig) -> Result<usize> {
    if config.bus_length % 2 == 0 {
        return Err(ChainError::Unsupported(format!(
            "bus length N = {} is even, so the bus has no zero-energy mode and no optimal transfer time",
            config.bus_length
        )));
    }
    Ok((config.bus_length + 1) / 2)
}

/// `τ₀ = π / (√2 |t_κ|)` in units of `1/J`.
pub fn optimal_time(config: &ChainConfig) -> Result<f64> {
    Ok(predict(config)?.tau0)
}

pub fn predict(config: &ChainConfig) -> Result<EffectivePrediction> {
    let kappa = resonant_mode(config)?;
    if config.coupling_g <= 0.0 {
        return Err(ChainError::Unsupported(
            "g = 0 decouples the registers; the optimal time is infinite".into(),
        ));
    }
    let (mode_energies, mode_couplings) = mode_spectrum(config);
    let t_kappa = mode_couplings[kappa - 1];
    Ok(EffectivePrediction {
        kappa,
        t_kappa,
        tau0: PI / (SQRT_2 * t_kappa.abs()),
        mode_energies,
        mode_couplings,
        swap_phase_exponent: kappa,
    })
}

/// `(−1)^{μκ}` for `μ = 0..d`.
pub fn phase_gate_diagonal(kappa: usize, d: usize) -> Vec<f64> {
    (0..d).map(|mu| if (mu * kappa) % 2 == 0 { 1.0 } else { -1.0 }).collect()
}

/// Diagonal correction `diag((−1)^{μκ})` applied to the receiver.
pub fn phase_gate(kappa: usize, d: usize) -> DMatrix<f64> {
    DMatrix::from_diagonal(&nalgebra::DVector::from_vec(phase_gate_diagonal(kappa, d)))
}

/// Single-particle propagator of the resonant three-mode model in the basis
/// (sender, bus mode κ, receiver).
///
/// With `σ = (−1)^{κ−1}` the effective hopping matrix is
/// `t_κ [[0,1,0],[1,0,σ],[0,σ,0]]`, giving
/// `u_ss = (1 + cos ωτ)/2`, `u_rs = σ(cos ωτ − 1)/2`, `u_κs = −i sin ωτ / √2`
/// with `ω = √2 t_κ`.
pub fn effective_evolution(config: &ChainConfig, tau: f64) -> Result<Matrix3<Complex64>> {
    let kappa = resonant_mode(config)?;
    let (_, couplings) = mode_spectrum(config);
    let t = couplings[kappa - 1];
    let sigma = if (kappa - 1) % 2 == 0 { 1.0 } else { -1.0 };
    let (s, c) = (SQRT_2 * t * tau).sin_cos();
    let re = |x: f64| Complex64::new(x, 0.0);
    let im = |x: f64| Complex64::new(0.0, x);
    Ok(Matrix3::new(
        re((1.0 + c) / 2.0),
        im(-s / SQRT_2),
        re(sigma * (c - 1.0) / 2.0),
        im(-s / SQRT_2),
        re(c),
        im(-sigma * s / SQRT_2),
        re(sigma * (c - 1.0) / 2.0),
        im(-sigma * s / SQRT_2),
        re((1.0 + c) / 2.0),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(n: usize, s2: u32, g: f64) -> ChainConfig {
        ChainConfig::new(n, s2, 2, g).unwrap()
    }

    #[test]
    fn band_centre_is_zero_mode() {
        let (eps, _) = mode_spectrum(&cfg(3, 20, 0.1));
        assert!(eps[1].abs() < 1e-14);
        assert!((eps[0] + 40.0 * (PI / 4.0).cos()).abs() < 1e-12);
        assert!((eps[0] + 28.2843).abs() < 1e-4);
    }

    #[test]
    fn zero_mode_coupling() {
        let (_, t) = mode_spectrum(&cfg(3, 20, 0.1));
        assert!((t[1] + SQRT_2).abs() < 1e-12);
    }

    #[test]
    fn optimal_times() {
        assert!((optimal_time(&cfg(3, 20, 0.1)).unwrap() - PI / 2.0).abs() < 1e-12);
        let tau = optimal_time(&cfg(1, 6, 0.1)).unwrap();
        assert!((tau - PI / (SQRT_2 * 0.6)).abs() < 1e-12);
        assert!((tau - 3.7024).abs() < 1e-4);
        assert!(matches!(optimal_time(&cfg(2, 6, 0.1)), Err(ChainError::Unsupported(_))));
    }

    #[test]
    fn phase_gates() {
        assert_eq!(phase_gate(2, 4), DMatrix::identity(4, 4));
        assert_eq!(phase_gate_diagonal(1, 4), vec![1.0, -1.0, 1.0, -1.0]);
        let p = phase_gate(3, 5);
        assert_eq!(&p * &p, DMatrix::identity(5, 5));
    }

    #[test]
    fn swap_at_optimal_time() {
        for n in [1usize, 3, 5, 7] {
            let c = cfg(n, 4, 0.05);
            let p = predict(&c).unwrap();
            let u = effective_evolution(&c, p.tau0).unwrap();
            let phase = if p.kappa % 2 == 0 { 1.0 } else { -1.0 };
            assert!((u[(2, 0)] - Complex64::new(phase, 0.0)).norm() < 1e-12, "N={n}");
            assert!(u[(0, 0)].norm() < 1e-12);
            assert!(u[(1, 0)].norm() < 1e-12);
        }
    }

    #[test]
    fn effective_evolution_is_unitary_and_matches_generator() {
        let c = cfg(3, 6, 0.2);
        let p = predict(&c).unwrap();
        assert_eq!(effective_evolution(&c, 0.0).unwrap(), Matrix3::identity());
        let half = effective_evolution(&c, p.tau0 / 2.0).unwrap();
        assert!((half[(1, 0)].norm() - std::f64::consts::FRAC_1_SQRT_2).abs() < 1e-12);
        for tau in [0.3, 1.1, 4.0] {
            let u = effective_evolution(&c, tau).unwrap();
            assert!((u.adjoint() * u - Matrix3::identity()).camax() < 1e-12);
            // compare with spectral exponentiation of the hopping matrix
            let sigma = if (p.kappa - 1) % 2 == 0 { 1.0 } else { -1.0 };
            let h = nalgebra::Matrix3::new(0.0, 1.0, 0.0, 1.0, 0.0, sigma, 0.0, sigma, 0.0) * p.t_kappa;
            let eig = h.symmetric_eigen();
            let mut expect = Matrix3::<Complex64>::zeros();
            for k in 0..3 {
                let v = eig.eigenvectors.column(k).map(|x| Complex64::new(x, 0.0));
                let ph = Complex64::from_polar(1.0, -eig.eigenvalues[k] * tau);
                expect += v * v.transpose() * ph;
            }
            assert!((u - expect).camax() < 1e-12);
        }
    }
}
