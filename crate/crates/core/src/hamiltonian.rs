//! Sector blocks of the spin-S XX chain Hamiltonian.
//!
//! All matrix elements use the exact Holstein–Primakoff ladder coefficients,
//! so nothing here assumes the spin-wave (linearized boson) limit. Every
//! operator is real symmetric in the occupation basis.

use nalgebra::DMatrix;

use crate::basis::SectorBasis;
use crate::config::ChainConfig;
use crate::error::{ChainError, Result};

/// Which spin ladder operator acts on a site.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Ladder {
    /// `S⁺`: removes one excitation, `S⁺|n⟩ = √(n(2S−n+1)) |n−1⟩`.
    Raise,
    /// `S⁻`: adds one excitation, `S⁻|n⟩ = √((n+1)(2S−n)) |n+1⟩`.
    Lower,
}

/// Magnitude of the ladder matrix element out of level `n`.
pub fn ladder_coefficient(twice_spin: u32, n: u32, direction: Ladder) -> Result<f64> {
    if n > twice_spin {
        return Err(ChainError::Range(format!("level {n} outside [0, {twice_spin}]")));
    }
    Ok(ladder_unchecked(twice_spin, n, direction))
}

#[inline]
fn ladder_unchecked(twice_spin: u32, n: u32, direction: Ladder) -> f64 {
    let (n, s2) = (n as f64, twice_spin as f64);
    match direction {
        Ladder::Raise => (n * (s2 - n + 1.0)).sqrt(),
        Ladder::Lower => ((n + 1.0) * (s2 - n)).sqrt(),
    }
}

/// A Hamiltonian block restricted to one excitation sector.
#[derive(Debug, Clone, PartialEq)]
pub struct SectorOperator {
    sector: usize,
    matrix: DMatrix<f64>,
}

impl SectorOperator {
    pub fn new(sector: usize, matrix: DMatrix<f64>) -> Result<Self> {
        if !matrix.is_square() {
            return Err(ChainError::Contract(format!(
                "sector operator must be square, got {}x{}",
                matrix.nrows(),
                matrix.ncols()
            )));
        }
        Ok(Self { sector, matrix })
    }

    pub fn zeros(sector: usize, dim: usize) -> Self {
        Self {
            sector,
            matrix: DMatrix::zeros(dim, dim),
        }
    }

    pub fn sector(&self) -> usize {
        self.sector
    }

    pub fn dim(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn matrix(&self) -> &DMatrix<f64> {
        &self.matrix
    }

    pub fn into_matrix(self) -> DMatrix<f64> {
        self.matrix
    }

    /// Largest `|H_ij − H_ji|`.
    pub fn asymmetry(&self) -> f64 {
        let m = &self.matrix;
        (m - m.transpose()).amax()
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.asymmetry() <= tol
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.sector != other.sector || self.dim() != other.dim() {
            return Err(ChainError::Config(format!(
                "cannot add blocks of sectors {} and {}",
                self.sector, other.sector
            )));
        }
        Ok(Self {
            sector: self.sector,
            matrix: &self.matrix + &other.matrix,
        })
    }
}

/// Accumulates `(row, col, value)` entries and symmetrizes once at the end.
struct TripletBuilder {
    sector: usize,
    dim: usize,
    entries: Vec<(usize, usize, f64)>,
}

impl TripletBuilder {
    fn new(basis: &SectorBasis) -> Self {
        Self {
            sector: basis.sector(),
            dim: basis.len(),
            entries: Vec::new(),
        }
    }

    fn push(&mut self, row: usize, col: usize, value: f64) {
        if value != 0.0 {
            self.entries.push((row, col, value));
        }
    }

    fn finish(self) -> SectorOperator {
        let mut m = DMatrix::zeros(self.dim, self.dim);
        for (r, c, v) in self.entries {
            m[(r, c)] += v;
        }
        let sym = (&m + m.transpose()) * 0.5;
        SectorOperator {
            sector: self.sector,
            matrix: sym,
        }
    }
}

/// Adds `−strength (S⁺_a S⁻_b + S⁻_a S⁺_b)` for every bond `(a, b, strength)`.
fn add_exchange(builder: &mut TripletBuilder, basis: &SectorBasis, bonds: &[(usize, usize, f64)]) {
    let s2 = basis.twice_spin();
    for (col, state) in basis.states().iter().enumerate() {
        for &(a, b, strength) in bonds {
            for (from, to) in [(a, b), (b, a)] {
                let n_from = state.get(from) as u32;
                let n_to = state.get(to) as u32;
                if n_from == 0 || n_to == s2 {
                    continue;
                }
                let target = state.hopped(from, to);
                let row = basis.index_of(&target).expect("hop stays inside the sector");
                let amp = ladder_unchecked(s2, n_from, Ladder::Raise) * ladder_unchecked(s2, n_to, Ladder::Lower);
                builder.push(row, col, -strength * amp);
            }
        }
    }
}

fn check_chain_basis(config: &ChainConfig, basis: &SectorBasis) -> Result<()> {
    if basis.n_sites() != config.n_sites() || basis.twice_spin() != config.twice_spin {
        return Err(ChainError::Config(format!(
            "basis over {} sites with 2S = {} does not match chain of {} sites with 2S = {}",
            basis.n_sites(),
            basis.twice_spin(),
            config.n_sites(),
            config.twice_spin
        )));
    }
    Ok(())
}

fn bus_bonds(config: &ChainConfig, first_bus_site: usize) -> Vec<(usize, usize, f64)> {
    (0..config.bus_length.saturating_sub(1))
        .map(|i| (first_bus_site + i, first_bus_site + i + 1, config.coupling_j))
        .collect()
}

/// Nearest-neighbour XX exchange between bus sites, strength `J`.
pub fn build_bus_hamiltonian(config: &ChainConfig, basis: &SectorBasis) -> Result<SectorOperator> {
    check_chain_basis(config, basis)?;
    let mut b = TripletBuilder::new(basis);
    add_exchange(&mut b, basis, &bus_bonds(config, 1));
    Ok(b.finish())
}

/// Register–bus exchange, sender ↔ bus site 1 and receiver ↔ bus site N, strength `g`.
pub fn build_interaction_hamiltonian(config: &ChainConfig, basis: &SectorBasis) -> Result<SectorOperator> {
    check_chain_basis(config, basis)?;
    let bonds = [
        (config.sender(), 1, config.coupling_g),
        (config.receiver(), config.bus_length, config.coupling_g),
    ];
    let mut b = TripletBuilder::new(basis);
    add_exchange(&mut b, basis, &bonds);
    Ok(b.finish())
}

/// Zeeman term `−h Σ S^z` over all `N + 2` sites; a multiple of the identity
/// in each sector, `−(N+2)hS + h·n`.
pub fn build_zeeman_hamiltonian(config: &ChainConfig, basis: &SectorBasis) -> Result<SectorOperator> {
    check_chain_basis(config, basis)?;
    Ok(zeeman_block(basis, config.field_h))
}

fn zeeman_block(basis: &SectorBasis, field_h: f64) -> SectorOperator {
    let spin = basis.twice_spin() as f64 / 2.0;
    let value = -field_h * (spin * basis.n_sites() as f64 - basis.sector() as f64);
    SectorOperator {
        sector: basis.sector(),
        matrix: DMatrix::from_diagonal_element(basis.len(), basis.len(), value),
    }
}

/// `H_XX` = bus exchange + register coupling.
pub fn build_xx_hamiltonian(config: &ChainConfig, basis: &SectorBasis) -> Result<SectorOperator> {
    check_chain_basis(config, basis)?;
    let mut bonds = bus_bonds(config, 1);
    bonds.push((config.sender(), 1, config.coupling_g));
    bonds.push((config.receiver(), config.bus_length, config.coupling_g));
    let mut b = TripletBuilder::new(basis);
    add_exchange(&mut b, basis, &bonds);
    Ok(b.finish())
}

/// Full chain Hamiltonian `H_XX + H_M` in one sector.
pub fn build_total_hamiltonian(config: &ChainConfig, basis: &SectorBasis) -> Result<SectorOperator> {
    build_xx_hamiltonian(config, basis)?.add(&zeeman_block(basis, config.field_h))
}

/// Hamiltonian of the isolated bus (`N` sites, no registers): bus exchange plus
/// the bus part of the Zeeman term. `basis` must span `N` sites.
pub fn build_isolated_bus_hamiltonian(config: &ChainConfig, basis: &SectorBasis) -> Result<SectorOperator> {
    if basis.n_sites() != config.bus_length || basis.twice_spin() != config.twice_spin {
        return Err(ChainError::Config(format!(
            "isolated bus basis must span {} sites with 2S = {}",
            config.bus_length, config.twice_spin
        )));
    }
    let mut b = TripletBuilder::new(basis);
    add_exchange(&mut b, basis, &bus_bonds(config, 0));
    b.finish().add(&zeeman_block(basis, config.field_h))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::OccupationVector;

    fn idx(basis: &SectorBasis, v: &[u8]) -> usize {
        basis.index_of(&OccupationVector::new(v.to_vec())).unwrap()
    }

    #[test]
    fn ladder_boundaries() {
        assert_eq!(ladder_coefficient(6, 0, Ladder::Raise).unwrap(), 0.0);
        assert_eq!(ladder_coefficient(6, 6, Ladder::Lower).unwrap(), 0.0);
        assert!((ladder_coefficient(6, 0, Ladder::Lower).unwrap() - 6f64.sqrt()).abs() < 1e-15);
        assert!(matches!(ladder_coefficient(6, 7, Ladder::Raise), Err(ChainError::Range(_))));
    }

    #[test]
    fn vacuum_sector_has_no_exchange() {
        let c = ChainConfig::new(3, 4, 3, 0.2).unwrap();
        let b = SectorBasis::enumerate(5, 4, 0);
        assert_eq!(build_bus_hamiltonian(&c, &b).unwrap().matrix().amax(), 0.0);
        assert_eq!(build_interaction_hamiltonian(&c, &b).unwrap().matrix().amax(), 0.0);
    }

    #[test]
    fn spin_half_bus_hop_is_minus_j() {
        let c = ChainConfig::new(2, 1, 2, 0.1).unwrap().with_coupling_j(1.3).unwrap();
        let b = SectorBasis::enumerate(4, 1, 1);
        let h = build_bus_hamiltonian(&c, &b).unwrap();
        let (i, j) = (idx(&b, &[0, 1, 0, 0]), idx(&b, &[0, 0, 1, 0]));
        assert!((h.matrix()[(i, j)] + 1.3).abs() < 1e-15);
    }

    #[test]
    fn spin_half_register_hop_is_minus_g() {
        let c = ChainConfig::new(1, 1, 2, 0.25).unwrap();
        let b = SectorBasis::enumerate(3, 1, 1);
        let h = build_interaction_hamiltonian(&c, &b).unwrap();
        let m = h.matrix();
        assert!((m[(idx(&b, &[0, 1, 0]), idx(&b, &[1, 0, 0]))] + 0.25).abs() < 1e-15);
        assert!((m[(idx(&b, &[0, 1, 0]), idx(&b, &[0, 0, 1]))] + 0.25).abs() < 1e-15);
        // sender and receiver are not directly coupled
        assert_eq!(m[(idx(&b, &[1, 0, 0]), idx(&b, &[0, 0, 1]))], 0.0);
    }

    #[test]
    fn zeeman_is_scalar_per_sector() {
        let c = ChainConfig::new(3, 3, 3, 0.1).unwrap().with_field(0.7).unwrap();
        let vac = SectorBasis::enumerate(5, 3, 0);
        let z0 = build_zeeman_hamiltonian(&c, &vac).unwrap();
        assert!((z0.matrix()[(0, 0)] + 5.0 * 0.7 * 1.5).abs() < 1e-14);
        let b2 = SectorBasis::enumerate(5, 3, 2);
        let z2 = build_zeeman_hamiltonian(&c, &b2).unwrap();
        let expected = DMatrix::from_diagonal_element(b2.len(), b2.len(), -5.0 * 0.7 * 1.5 + 0.7 * 2.0);
        assert!((z2.matrix() - expected).amax() < 1e-14);
        let zero_field = ChainConfig::new(3, 3, 3, 0.1).unwrap();
        assert_eq!(build_zeeman_hamiltonian(&zero_field, &b2).unwrap().matrix().amax(), 0.0);
    }

    #[test]
    fn single_excitation_bus_spectrum() {
        for (n, s2) in [(3usize, 20u32), (5, 3), (4, 1)] {
            let c = ChainConfig::new(n, s2, 2, 0.1).unwrap();
            let b = SectorBasis::enumerate(n + 2, s2, 1);
            let h = build_bus_hamiltonian(&c, &b).unwrap();
            // drop the register rows, which are zero
            let bus = h.matrix().view((1, 1), (n, n)).clone_owned();
            let mut evals: Vec<f64> = bus.symmetric_eigenvalues().iter().copied().collect();
            evals.sort_by(f64::total_cmp);
            let spin = s2 as f64 / 2.0;
            let mut expected: Vec<f64> = (1..=n)
                .map(|k| -4.0 * spin * (k as f64 * std::f64::consts::PI / (n as f64 + 1.0)).cos())
                .collect();
            expected.sort_by(f64::total_cmp);
            for (a, e) in evals.iter().zip(&expected) {
                assert!((a - e).abs() < 1e-10, "N={n} 2S={s2}: {a} vs {e}");
            }
        }
    }

    #[test]
    fn three_site_spin_half_total() {
        let c = ChainConfig::new(1, 1, 2, 0.3).unwrap().with_field(0.5).unwrap();
        let b = enumerate(&c, 1);
        let h = build_total_hamiltonian(&c, &b).unwrap();
        let diag = -3.0 * 0.5 * 0.5 + 0.5;
        let expected = DMatrix::from_row_slice(3, 3, &[diag, -0.3, 0.0, -0.3, diag, -0.3, 0.0, -0.3, diag]);
        assert!((h.matrix() - expected).amax() < 1e-15);
    }

    #[test]
    fn blocks_are_symmetric() {
        let c = ChainConfig::new(3, 5, 4, 0.4).unwrap().with_field(0.2).unwrap();
        for n in 0..=3 {
            let b = enumerate(&c, n);
            assert!(build_total_hamiltonian(&c, &b).unwrap().is_hermitian(1e-12));
        }
    }

    #[test]
    fn mismatched_basis_is_rejected() {
        let c = ChainConfig::new(3, 2, 2, 0.1).unwrap();
        let b = SectorBasis::enumerate(4, 2, 1);
        assert!(matches!(build_total_hamiltonian(&c, &b), Err(ChainError::Config(_))));
        assert!(build_isolated_bus_hamiltonian(&c, &SectorBasis::enumerate(3, 2, 1)).is_ok());
    }

    fn enumerate(c: &ChainConfig, n: usize) -> SectorBasis {
        SectorBasis::enumerate(c.n_sites(), c.twice_spin, n)
    }
}
