//! Transfer through a bus that starts in a Gibbs state.
//!
//! The isolated bus (exchange plus its Zeeman term) is diagonalized per
//! excitation sector up to a cut `n_cut`. Each eigenstate `|φ_i⟩` becomes an
//! ensemble member with Boltzmann weight `p_i`; the sender and receiver start
//! pure, so every member is evolved coherently and the receiver fidelity is
//! the weighted sum over members.

use std::sync::OnceLock;

use nalgebra::DVector;
use num_complex::Complex64;
use rayon::prelude::*;

use crate::basis::{sector_dimension, ChainSpace, GlobalPureState, OccupationVector, SectorBasis};
use crate::config::ChainConfig;
use crate::error::{ChainError, Result};
use crate::hamiltonian::build_isolated_bus_hamiltonian;
use crate::haar::{default_corrections, monte_carlo};
use crate::propagator::{decompose, Propagator, SectorSpectrum};
use crate::transfer::{check_time, Corrections, ReceiverChannel, ReceiverTrace};

pub const DEFAULT_TAIL_TOLERANCE: f64 = 1e-8;
/// Members lighter than this are dropped and counted in the tail.
pub const WEIGHT_CUTOFF: f64 = 1e-12;

/// One bus eigenstate with its Boltzmann weight.
#[derive(Debug, Clone, PartialEq)]
pub struct ThermalMember {
    pub weight: f64,
    pub bus_sector: usize,
    /// Amplitudes over the bus sector basis.
    pub bus_state: DVector<f64>,
    pub energy: f64,
    /// Position in [`ThermalBus::levels`].
    pub level: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThermalEnsemble {
    /// Sorted by descending weight.
    pub members: Vec<ThermalMember>,
    pub temperature: f64,
    /// `ln Z` over the retained states.
    pub log_partition: f64,
    /// Upper bound on the Boltzmann weight not represented by `members`.
    pub truncation_tail: f64,
}

impl ThermalEnsemble {
    pub fn partition_value(&self) -> f64 {
        self.log_partition.exp()
    }

    pub fn retained_weight(&self) -> f64 {
        self.members.iter().map(|m| m.weight).sum()
    }
}

/// A bus eigenstate: sector and column of its spectrum.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BusLevel {
    pub sector: usize,
    pub column: usize,
    pub energy: f64,
}

/// Spectrum of the isolated bus up to `n_cut` excitations.
#[derive(Debug, Clone)]
pub struct ThermalBus {
    config: ChainConfig,
    n_cut: usize,
    bases: Vec<SectorBasis>,
    spectra: Vec<SectorSpectrum>,
    levels: Vec<BusLevel>,
}

impl ThermalBus {
    pub fn new(config: &ChainConfig, n_cut: usize) -> Result<Self> {
        config.validate()?;
        let max = config.twice_spin as usize * config.bus_length;
        if n_cut > max {
            return Err(ChainError::Range(format!("n_cut {n_cut} exceeds 2S·N = {max}")));
        }
        let bases: Vec<SectorBasis> = (0..=n_cut)
            .map(|n| SectorBasis::enumerate(config.bus_length, config.twice_spin, n))
            .collect();
        let spectra = bases
            .par_iter()
            .map(|b| decompose(&build_isolated_bus_hamiltonian(config, b)?))
            .collect::<Result<Vec<_>>>()?;
        let levels = spectra
            .iter()
            .flat_map(|s| {
                (0..s.dim()).map(move |column| BusLevel {
                    sector: s.sector(),
                    column,
                    energy: s.energies()[column],
                })
            })
            .collect();
        Ok(Self {
            config: config.clone(),
            n_cut,
            bases,
            spectra,
            levels,
        })
    }

    pub fn n_cut(&self) -> usize {
        self.n_cut
    }

    pub fn levels(&self) -> &[BusLevel] {
        &self.levels
    }

    pub fn basis(&self, sector: usize) -> &SectorBasis {
        &self.bases[sector]
    }

    pub fn eigenvector(&self, level: usize) -> DVector<f64> {
        let l = self.levels[level];
        self.spectra[l.sector].vectors().column(l.column).clone_owned()
    }

    /// Lower bound on bus energies in sector `n`.
    ///
    /// In a sector, `−H_B` has non-negative entries bounded entrywise by the
    /// bosonic hopping `2SJ √(n_a (n_b+1))`, so its spectral radius is at most
    /// the free-boson value `n·4SJ cos(π/(N+1))`. The cruder `4JS²(N−1)` norm
    /// bound is used where it is tighter.
    fn energy_floor(&self, n: usize) -> f64 {
        let c = &self.config;
        let spin = c.spin();
        let bonds = c.bus_length.saturating_sub(1) as f64;
        let band = 4.0 * spin * c.coupling_j * (std::f64::consts::PI / (c.bus_length as f64 + 1.0)).cos();
        let exchange = (n as f64 * band).min(4.0 * c.coupling_j * spin * spin * bonds);
        -c.field_h * c.bus_length as f64 * spin + c.field_h * n as f64 - exchange
    }

    /// Bound on the unnormalized weight of sectors above `cut`, relative to `e^{−E_ref/T}`.
    fn excluded_mass(&self, cut: usize, e_ref: f64, temperature: f64) -> f64 {
        let max = self.config.twice_spin as usize * self.config.bus_length;
        (cut + 1..=max)
            .map(|n| {
                let dim = sector_dimension(self.config.bus_length, self.config.twice_spin, n) as f64;
                dim * (-(self.energy_floor(n) - e_ref) / temperature).exp()
            })
            .sum()
    }

    /// Gibbs ensemble at temperature `T` (units of `J`).
    pub fn ensemble(&self, temperature: f64, tolerance: f64) -> Result<ThermalEnsemble> {
        if !(temperature.is_finite() && temperature > 0.0) {
            return Err(ChainError::Domain(format!("temperature must be positive, got {temperature}")));
        }
        let e_ref = self
            .levels
            .iter()
            .map(|l| l.energy)
            .fold(f64::INFINITY, f64::min);
        let boltzmann: Vec<f64> = self
            .levels
            .iter()
            .map(|l| (-(l.energy - e_ref) / temperature).exp())
            .collect();
        let retained: f64 = boltzmann.iter().sum();
        let excluded = self.excluded_mass(self.n_cut, e_ref, temperature);
        let total = retained + excluded;

        let mut tail = excluded / total;
        let mut members = Vec::new();
        for (level, (l, w)) in self.levels.iter().zip(&boltzmann).enumerate() {
            let p = w / total;
            if p < WEIGHT_CUTOFF {
                tail += p;
                continue;
            }
            members.push(ThermalMember {
                weight: p,
                bus_sector: l.sector,
                bus_state: self.eigenvector(level),
                energy: l.energy,
                level,
            });
        }
        if tail > tolerance {
            return Err(ChainError::Truncation {
                tail,
                tolerance,
                suggested_cut: self.suggest_cut(e_ref, retained, temperature, tolerance),
            });
        }
        members.sort_by(|a, b| b.weight.total_cmp(&a.weight).then(a.level.cmp(&b.level)));
        Ok(ThermalEnsemble {
            members,
            temperature,
            log_partition: retained.ln() - e_ref / temperature,
            truncation_tail: tail,
        })
    }

    fn suggest_cut(&self, e_ref: f64, retained: f64, temperature: f64, tolerance: f64) -> usize {
        let max = self.config.twice_spin as usize * self.config.bus_length;
        (self.n_cut + 1..=max)
            .find(|&cut| {
                let ex = self.excluded_mass(cut, e_ref, temperature);
                ex / (retained + ex) <= tolerance / 2.0
            })
            .unwrap_or(max)
    }
}

/// Gibbs ensemble of the bus at temperature `T` with the default tail tolerance.
pub fn bus_thermal_state(config: &ChainConfig, temperature: f64, n_cut: usize) -> Result<ThermalEnsemble> {
    ThermalBus::new(config, n_cut)?.ensemble(temperature, DEFAULT_TAIL_TOLERANCE)
}

/// How to average over input states.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Averaging {
    /// Quartic-moment contraction.
    Exact,
    /// Monte Carlo over Hurwitz samples.
    MonteCarlo { samples: usize, seed: u64 },
}

/// Transfer with a thermal bus: bus spectrum, chain spectra up to
/// `n_cut + d − 1` excitations, and a lazily built receiver channel per bus level.
#[derive(Debug)]
pub struct ThermalSimulator {
    bus: ThermalBus,
    space: ChainSpace,
    propagator: Propagator,
    trace: ReceiverTrace,
    channels: Vec<OnceLock<ReceiverChannel>>,
    channel_time: f64,
    corrections: Corrections,
}

impl ThermalSimulator {
    /// `tau` is fixed per simulator so member channels can be cached.
    pub fn new(config: &ChainConfig, n_cut: usize, tau: f64) -> Result<Self> {
        check_time(tau)?;
        let bus = ThermalBus::new(config, n_cut)?;
        let chain = config.clone().with_excitation_cap(n_cut + config.qudit_dim - 1)?;
        let space = ChainSpace::new(&chain)?;
        let propagator = Propagator::for_space(&space)?;
        let trace = ReceiverTrace::new(&space);
        let corrections = default_corrections(config);
        // fail early on unsupported corrections
        corrections.diagonal(config, tau, config.qudit_dim)?;
        let channels = (0..bus.levels().len()).map(|_| OnceLock::new()).collect();
        Ok(Self {
            bus,
            space,
            propagator,
            trace,
            channels,
            channel_time: tau,
            corrections,
        })
    }

    pub fn config(&self) -> &ChainConfig {
        &self.bus.config
    }

    pub fn bus(&self) -> &ThermalBus {
        &self.bus
    }

    pub fn tau(&self) -> f64 {
        self.channel_time
    }

    /// Chain state `|μ⟩_s ⊗ |φ_level⟩_bus ⊗ |0⟩_r`.
    pub fn member_initial(&self, level: usize, mu: usize) -> Result<GlobalPureState> {
        let l = self.bus.levels()[level];
        let basis = self.bus.basis(l.sector);
        let vector = self.bus.eigenvector(level);
        let sector = l.sector + mu;
        let chain_basis = self.space.basis(sector)?;
        let mut amps = DVector::zeros(chain_basis.len());
        for (bus_occ, &amp) in basis.states().iter().zip(vector.iter()) {
            if amp == 0.0 {
                continue;
            }
            let mut occ = Vec::with_capacity(self.config().n_sites());
            occ.push(mu as u8);
            occ.extend_from_slice(bus_occ.as_slice());
            occ.push(0);
            let idx = chain_basis
                .index_of(&OccupationVector::new(occ))
                .ok_or_else(|| ChainError::Range(format!("sender level {mu} exceeds 2S")))?;
            amps[idx] = Complex64::new(amp, 0.0);
        }
        let mut sectors = std::collections::BTreeMap::new();
        sectors.insert(sector, amps);
        Ok(GlobalPureState::from_sectors(sectors))
    }

    /// Corrected receiver channel with the bus initialized to one eigenstate.
    pub fn member_channel(&self, level: usize) -> Result<&ReceiverChannel> {
        if let Some(ch) = self.channels[level].get() {
            return Ok(ch);
        }
        let d = self.config().qudit_dim;
        let tau = self.channel_time;
        let images = (0..d)
            .map(|mu| self.propagator.evolve(&self.member_initial(level, mu)?, tau))
            .collect::<Result<Vec<_>>>()?;
        let diag = self.corrections.diagonal(self.config(), tau, d)?;
        let ch = ReceiverChannel::from_images(&self.trace, &images, &diag)?;
        Ok(self.channels[level].get_or_init(|| ch))
    }

    /// Haar-averaged fidelity with the bus in its Gibbs state at `T`,
    /// normalized over the retained members.
    pub fn average_fidelity(&self, temperature: f64, averaging: Averaging, tolerance: f64) -> Result<ThermalFidelity> {
        let ensemble = self.bus.ensemble(temperature, tolerance)?;
        // build channels in parallel, then reduce in member order
        ensemble
            .members
            .par_iter()
            .map(|m| self.member_channel(m.level).map(|_| ()))
            .collect::<Result<Vec<_>>>()?;
        let retained = ensemble.retained_weight();
        let mean = match averaging {
            Averaging::Exact => {
                ensemble
                    .members
                    .iter()
                    .map(|m| Ok(m.weight * self.member_channel(m.level)?.haar_average()))
                    .sum::<Result<f64>>()?
                    / retained
            }
            Averaging::MonteCarlo { samples, seed } => {
                monte_carlo(self.config().qudit_dim, samples, seed, |alpha| {
                    let f: Result<f64> = ensemble
                        .members
                        .iter()
                        .map(|m| Ok(m.weight * self.member_channel(m.level)?.fidelity(alpha)))
                        .sum();
                    Ok(f? / retained)
                })?
                .mean
            }
        };
        Ok(ThermalFidelity {
            mean: mean.clamp(0.0, 1.0),
            truncation_tail: ensemble.truncation_tail,
            members: ensemble.members.len(),
        })
    }

    /// Smallest temperature in `[t_lo, t_hi]` at which the exact average
    /// fidelity falls below `threshold`, by bisection to `rel_tol`. `None` if
    /// it never does on the interval.
    pub fn crossing_temperature(&self, threshold: f64, t_lo: f64, t_hi: f64, rel_tol: f64) -> Result<Option<f64>> {
        let f = |t: f64| -> Result<f64> {
            Ok(self
                .average_fidelity(t, Averaging::Exact, DEFAULT_TAIL_TOLERANCE)?
                .mean)
        };
        if f(t_hi)? >= threshold {
            return Ok(None);
        }
        if f(t_lo)? < threshold {
            return Ok(Some(t_lo));
        }
        let (mut lo, mut hi) = (t_lo, t_hi);
        while (hi - lo) > rel_tol * hi {
            let mid = 0.5 * (lo + hi);
            if f(mid)? >= threshold {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(Some(0.5 * (lo + hi)))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThermalFidelity {
    pub mean: f64,
    pub truncation_tail: f64,
    pub members: usize,
}

/// One-shot thermal average fidelity.
pub fn thermal_average_fidelity(
    config: &ChainConfig,
    temperature: f64,
    tau: f64,
    n_cut: usize,
    averaging: Averaging,
) -> Result<f64> {
    Ok(ThermalSimulator::new(config, n_cut, tau)?
        .average_fidelity(temperature, averaging, DEFAULT_TAIL_TOLERANCE)?
        .mean)
}

/// Smallest `n_cut` whose ensemble at `temperature` meets `tolerance`.
pub fn minimal_cut(config: &ChainConfig, temperature: f64, tolerance: f64) -> Result<usize> {
    let max = config.twice_spin as usize * config.bus_length;
    let mut cut = 0;
    loop {
        match ThermalBus::new(config, cut)?.ensemble(temperature, tolerance) {
            Ok(_) => return Ok(cut),
            Err(ChainError::Truncation { suggested_cut, .. }) if cut < max => {
                cut = suggested_cut.max(cut + 1).min(max);
            }
            Err(e) => return Err(e),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::effective::optimal_time;
    use crate::haar::average_fidelity_exact;

    #[test]
    fn strong_field_cold_bus_is_polarized() {
        let c = ChainConfig::new(3, 4, 2, 0.1).unwrap();
        let h = 4.0 * c.spin() * (std::f64::consts::PI / 4.0).cos() + 0.5;
        let c = c.with_field(h).unwrap();
        let ens = bus_thermal_state(&c, 0.01, 2).unwrap();
        assert_eq!(ens.members.len(), 1);
        assert_eq!(ens.members[0].bus_sector, 0);
        assert!((ens.members[0].weight - 1.0).abs() < 1e-12);
    }

    #[test]
    fn single_site_bus_weights() {
        let (s2, h, t) = (6u32, 1.5, 2.0);
        let c = ChainConfig::new(1, s2, 3, 0.1).unwrap().with_field(h).unwrap();
        let ens = bus_thermal_state(&c, t, s2 as usize).unwrap();
        let z: f64 = (0..=s2).map(|n| (-h * n as f64 / t).exp()).sum();
        assert_eq!(ens.truncation_tail, 0.0);
        for m in &ens.members {
            let expected = (-h * m.bus_sector as f64 / t).exp() / z;
            assert!((m.weight - expected).abs() < 1e-14);
            assert!((m.energy + h * (3.0 - m.bus_sector as f64)).abs() < 1e-12);
        }
        let direct: f64 = (0..=s2).map(|n| (h * (3.0 - n as f64) / t).exp()).sum();
        assert!((ens.partition_value() - direct).abs() < 1e-10 * direct);
    }

    #[test]
    fn weights_and_tail_sum_to_one() {
        let c = ChainConfig::new(3, 2, 2, 0.1).unwrap().with_field(2.0).unwrap();
        let ens = ThermalBus::new(&c, 4).unwrap().ensemble(1.5, 0.5).unwrap();
        assert!(ens.truncation_tail > 0.0);
        assert!((ens.retained_weight() + ens.truncation_tail - 1.0).abs() < 1e-12);
        assert!(ens.members.windows(2).all(|w| w[0].weight >= w[1].weight));
    }

    #[test]
    fn truncation_error_suggests_cut() {
        let c = ChainConfig::new(2, 4, 2, 0.1).unwrap().with_field(0.5).unwrap();
        match ThermalBus::new(&c, 1).unwrap().ensemble(5.0, 1e-8) {
            Err(ChainError::Truncation { suggested_cut, .. }) => assert!(suggested_cut > 1),
            other => panic!("expected truncation error, got {other:?}"),
        }
        let cut = minimal_cut(&c, 5.0, 1e-8).unwrap();
        assert!(ThermalBus::new(&c, cut).unwrap().ensemble(5.0, 1e-8).is_ok());
    }

    #[test]
    fn cold_limit_matches_pure_transfer() {
        let s2 = 6;
        let base = ChainConfig::new(1, s2, 3, 0.1).unwrap();
        let c = base.clone().with_field(4.0 * base.spin()).unwrap();
        let tau = optimal_time(&c).unwrap();
        let cold = thermal_average_fidelity(&c, 0.05, tau, s2 as usize, Averaging::Exact).unwrap();
        let pure = average_fidelity_exact(&c, tau).unwrap();
        assert!((cold - pure).abs() < 1e-6, "{cold} vs {pure}");
    }

    #[test]
    fn invalid_temperature() {
        let c = ChainConfig::new(1, 2, 2, 0.1).unwrap();
        assert!(bus_thermal_state(&c, 0.0, 2).is_err());
        assert!(bus_thermal_state(&c, 1.0, 3).is_err());
    }
}
