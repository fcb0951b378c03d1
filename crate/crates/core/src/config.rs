use serde::{Deserialize, Serialize};

use crate::error::{ChainError, Result};

/// Physical parameters of a register–bus–register chain plus the excitation
/// cap used to truncate the Hilbert space.
///
/// The spin is stored as `2S` so half-integer spins stay exact. Energies are in
/// units of `coupling_j` and times in units of `1 / coupling_j`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    pub bus_length: usize,
    pub twice_spin: u32,
    pub qudit_dim: usize,
    pub coupling_j: f64,
    pub coupling_g: f64,
    pub field_h: f64,
    pub excitation_cap: usize,
}

impl ChainConfig {
    /// A zero-field chain with `J = 1` and the excitation cap set to `d - 1`.
    pub fn new(bus_length: usize, twice_spin: u32, qudit_dim: usize, coupling_g: f64) -> Result<Self> {
        let config = Self {
            bus_length,
            twice_spin,
            qudit_dim,
            coupling_j: 1.0,
            coupling_g,
            field_h: 0.0,
            excitation_cap: qudit_dim.saturating_sub(1),
        };
        config.validate()?;
        Ok(config)
    }

    pub fn with_field(mut self, field_h: f64) -> Result<Self> {
        self.field_h = field_h;
        self.validate()?;
        Ok(self)
    }

    pub fn with_coupling_j(mut self, coupling_j: f64) -> Result<Self> {
        self.coupling_j = coupling_j;
        self.validate()?;
        Ok(self)
    }

    pub fn with_excitation_cap(mut self, excitation_cap: usize) -> Result<Self> {
        self.excitation_cap = excitation_cap;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.bus_length < 1 {
            return Err(ChainError::Domain("bus length must be at least 1".into()));
        }
        if self.twice_spin < 1 {
            return Err(ChainError::Domain("spin must be at least 1/2".into()));
        }
        if self.twice_spin > u8::MAX as u32 {
            return Err(ChainError::Domain(format!(
                "2S = {} exceeds the supported maximum of {}",
                self.twice_spin,
                u8::MAX
            )));
        }
        if self.qudit_dim < 2 {
            return Err(ChainError::Domain("qudit dimension must be at least 2".into()));
        }
        if self.qudit_dim > self.local_dim() {
            return Err(ChainError::Domain(format!(
                "qudit dimension {} needs more than the {} levels of a spin {}",
                self.qudit_dim,
                self.local_dim(),
                self.spin()
            )));
        }
        if !(self.coupling_j.is_finite() && self.coupling_j > 0.0) {
            return Err(ChainError::Domain("J must be positive and finite".into()));
        }
        if !(self.coupling_g.is_finite() && self.coupling_g >= 0.0) {
            return Err(ChainError::Domain("g must be non-negative and finite".into()));
        }
        if !(self.field_h.is_finite() && self.field_h >= 0.0) {
            return Err(ChainError::Domain("h must be non-negative and finite".into()));
        }
        if self.excitation_cap > self.max_excitation() {
            return Err(ChainError::Domain(format!(
                "excitation cap {} exceeds 2S(N+2) = {}",
                self.excitation_cap,
                self.max_excitation()
            )));
        }
        if self.qudit_dim as f64 > self.spin() {
            log::warn!(
                "d = {} exceeds S = {}; linearized spin-wave picture is far from valid",
                self.qudit_dim,
                self.spin()
            );
        }
        Ok(())
    }

    pub fn spin(&self) -> f64 {
        self.twice_spin as f64 / 2.0
    }

    /// Levels per site, `2S + 1`.
    pub fn local_dim(&self) -> usize {
        self.twice_spin as usize + 1
    }

    /// Sender, bus sites and receiver.
    pub fn n_sites(&self) -> usize {
        self.bus_length + 2
    }

    pub fn sender(&self) -> usize {
        0
    }

    pub fn receiver(&self) -> usize {
        self.bus_length + 1
    }

    /// Largest total excitation the chain can hold, `2S(N+2)`.
    pub fn max_excitation(&self) -> usize {
        self.twice_spin as usize * self.n_sites()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_cap_to_d_minus_one() {
        let c = ChainConfig::new(3, 20, 4, 0.1).unwrap();
        assert_eq!(c.excitation_cap, 3);
        assert_eq!(c.n_sites(), 5);
        assert_eq!(c.receiver(), 4);
        assert_eq!(c.spin(), 10.0);
    }

    #[test]
    fn rejects_qudit_larger_than_spin_multiplet() {
        assert!(matches!(ChainConfig::new(1, 1, 3, 0.1), Err(ChainError::Domain(_))));
        assert!(ChainConfig::new(1, 2, 3, 0.1).is_ok());
    }

    #[test]
    fn rejects_bad_couplings() {
        assert!(ChainConfig::new(0, 2, 2, 0.1).is_err());
        assert!(ChainConfig::new(1, 2, 2, -0.1).is_err());
        let c = ChainConfig::new(1, 2, 2, 0.1).unwrap();
        assert!(c.clone().with_coupling_j(0.0).is_err());
        assert!(c.clone().with_field(-1.0).is_err());
        assert!(c.with_excitation_cap(7).is_err());
    }
}
