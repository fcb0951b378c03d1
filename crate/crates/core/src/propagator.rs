//! Spectral time evolution, `U(τ) = V e^{−iEτ} Vᵀ` sector by sector.

use std::collections::BTreeMap;

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use num_complex::Complex64;
use rayon::prelude::*;

use crate::basis::{ChainSpace, GlobalPureState};
use crate::error::{ChainError, Result};
use crate::hamiltonian::{build_total_hamiltonian, SectorOperator};

const HERMITIAN_TOL: f64 = 1e-12;

/// Eigen-decomposition of one sector block.
#[derive(Debug, Clone)]
pub struct SectorSpectrum {
    sector: usize,
    /// Ascending.
    energies: DVector<f64>,
    /// Orthonormal eigenvectors as columns, each with its largest-magnitude
    /// component made positive.
    vectors: DMatrix<f64>,
}

impl SectorSpectrum {
    pub fn sector(&self) -> usize {
        self.sector
    }

    pub fn energies(&self) -> &DVector<f64> {
        &self.energies
    }

    pub fn vectors(&self) -> &DMatrix<f64> {
        &self.vectors
    }

    pub fn dim(&self) -> usize {
        self.energies.len()
    }

    /// `V diag(E) Vᵀ`.
    pub fn reconstruct(&self) -> DMatrix<f64> {
        let scaled = &self.vectors * DMatrix::from_diagonal(&self.energies);
        scaled * self.vectors.transpose()
    }

    /// Applies `e^{−iHτ}` to a sector amplitude vector.
    pub fn propagate(&self, amps: &DVector<Complex64>, tau: f64) -> DVector<Complex64> {
        let (re, im) = split(amps);
        let vt = self.vectors.transpose();
        let (cr, ci) = (&vt * re, &vt * im);
        let mut rot_re = DVector::zeros(cr.len());
        let mut rot_im = DVector::zeros(cr.len());
        for k in 0..cr.len() {
            let (s, c) = (-self.energies[k] * tau).sin_cos();
            rot_re[k] = c * cr[k] - s * ci[k];
            rot_im[k] = s * cr[k] + c * ci[k];
        }
        let (out_re, out_im) = (&self.vectors * rot_re, &self.vectors * rot_im);
        DVector::from_fn(out_re.len(), |i, _| Complex64::new(out_re[i], out_im[i]))
    }

    /// `⟨ψ|H|ψ⟩` for one sector's amplitudes.
    pub fn expectation(&self, amps: &DVector<Complex64>) -> f64 {
        let (re, im) = split(amps);
        let vt = self.vectors.transpose();
        let (cr, ci) = (&vt * re, &vt * im);
        (0..cr.len())
            .map(|k| self.energies[k] * (cr[k] * cr[k] + ci[k] * ci[k]))
            .sum()
    }
}

fn split(v: &DVector<Complex64>) -> (DVector<f64>, DVector<f64>) {
    (v.map(|z| z.re), v.map(|z| z.im))
}

/// Full spectrum of a symmetric sector block, eigenvalues ascending.
pub fn decompose(op: &SectorOperator) -> Result<SectorSpectrum> {
    let asym = op.asymmetry();
    let scale = op.matrix().camax().max(1.0);
    if asym > HERMITIAN_TOL * scale {
        return Err(ChainError::Contract(format!(
            "sector {} block is not Hermitian (asymmetry {asym:.3e})",
            op.sector()
        )));
    }
    let dim = op.dim();
    if dim == 0 {
        return Ok(SectorSpectrum {
            sector: op.sector(),
            energies: DVector::zeros(0),
            vectors: DMatrix::zeros(0, 0),
        });
    }
    let eig = SymmetricEigen::new(op.matrix().clone());
    let mut order: Vec<usize> = (0..dim).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]).then(a.cmp(&b)));
    let energies = DVector::from_iterator(dim, order.iter().map(|&k| eig.eigenvalues[k]));
    let mut vectors = DMatrix::zeros(dim, dim);
    for (col, &k) in order.iter().enumerate() {
        let v = eig.eigenvectors.column(k);
        let pivot = v.iamax();
        let sign = if v[pivot] < 0.0 { -1.0 } else { 1.0 };
        vectors.set_column(col, &(v * sign));
    }
    Ok(SectorSpectrum {
        sector: op.sector(),
        energies,
        vectors,
    })
}

/// Spectra of every sector of a chain space, used to evolve states.
#[derive(Debug, Clone)]
pub struct Propagator {
    spectra: BTreeMap<usize, SectorSpectrum>,
}

impl Propagator {
    pub fn from_spectra(spectra: impl IntoIterator<Item = SectorSpectrum>) -> Self {
        Self {
            spectra: spectra.into_iter().map(|s| (s.sector(), s)).collect(),
        }
    }

    /// Diagonalizes the total Hamiltonian in every sector of `space`.
    pub fn for_space(space: &ChainSpace) -> Result<Self> {
        let config = space.config();
        let spectra = space
            .sectors()
            .par_iter()
            .map(|basis| decompose(&build_total_hamiltonian(config, basis)?))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self::from_spectra(spectra))
    }

    pub fn spectrum(&self, sector: usize) -> Option<&SectorSpectrum> {
        self.spectra.get(&sector)
    }

    fn require(&self, sector: usize) -> Result<&SectorSpectrum> {
        self.spectra
            .get(&sector)
            .ok_or_else(|| ChainError::Config(format!("no spectrum available for sector {sector}")))
    }

    /// `e^{−iHτ}|ψ⟩`.
    pub fn evolve(&self, state: &GlobalPureState, tau: f64) -> Result<GlobalPureState> {
        let mut out = BTreeMap::new();
        for (n, amps) in state.sectors() {
            let spectrum = self.require(n)?;
            if spectrum.dim() != amps.len() {
                return Err(ChainError::Config(format!(
                    "sector {n}: state has {} amplitudes, spectrum has {}",
                    amps.len(),
                    spectrum.dim()
                )));
            }
            out.insert(n, spectrum.propagate(amps, tau));
        }
        Ok(GlobalPureState::from_sectors(out))
    }

    /// Evolves every member of a pure-state ensemble; weights are untouched.
    pub fn evolve_density(&self, ensemble: &PureEnsemble, tau: f64) -> Result<PureEnsemble> {
        let members = ensemble
            .members()
            .par_iter()
            .map(|(w, psi)| Ok((*w, self.evolve(psi, tau)?)))
            .collect::<Result<Vec<_>>>()?;
        Ok(PureEnsemble { members })
    }

    /// `⟨ψ|H|ψ⟩`.
    pub fn energy(&self, state: &GlobalPureState) -> Result<f64> {
        state
            .sectors()
            .map(|(n, amps)| Ok(self.require(n)?.expectation(amps)))
            .sum()
    }
}

/// Mixed state written as `Σ p_i |ψ_i⟩⟨ψ_i|`.
#[derive(Debug, Clone)]
pub struct PureEnsemble {
    members: Vec<(f64, GlobalPureState)>,
}

impl PureEnsemble {
    pub fn new(members: Vec<(f64, GlobalPureState)>) -> Result<Self> {
        if members.iter().any(|(w, _)| !(w.is_finite() && *w >= 0.0)) {
            return Err(ChainError::Domain("ensemble weights must be non-negative".into()));
        }
        let total: f64 = members.iter().map(|(w, _)| w).sum();
        if (total - 1.0).abs() > 1e-10 {
            return Err(ChainError::Domain(format!("ensemble weights sum to {total}, not 1")));
        }
        Ok(Self { members })
    }

    pub fn pure(state: GlobalPureState) -> Self {
        Self {
            members: vec![(1.0, state)],
        }
    }

    pub fn members(&self) -> &[(f64, GlobalPureState)] {
        &self.members
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::basis::OccupationVector;
    use crate::config::ChainConfig;
    use std::f64::consts::PI;

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    #[test]
    fn zero_operator_spectrum() {
        let spectrum = decompose(&SectorOperator::zeros(2, 4)).unwrap();
        assert_eq!(spectrum.energies().camax(), 0.0);
        assert_eq!(spectrum.vectors(), &DMatrix::identity(4, 4));
    }

    #[test]
    fn two_level_splitting() {
        let g = 0.3;
        let op = SectorOperator::new(1, DMatrix::from_row_slice(2, 2, &[0.0, -g, -g, 0.0])).unwrap();
        let spectrum = decompose(&op).unwrap();
        assert!((spectrum.energies()[0] + g).abs() < 1e-15);
        assert!((spectrum.energies()[1] - g).abs() < 1e-15);
        assert!((spectrum.reconstruct() - op.matrix()).camax() < 1e-14);
    }

    #[test]
    fn non_hermitian_rejected() {
        let op = SectorOperator::new(1, DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 0.0, 0.0])).unwrap();
        assert!(matches!(decompose(&op), Err(ChainError::Contract(_))));
    }

    #[test]
    fn rabi_swap_at_half_period() {
        let g = 0.7;
        let op = SectorOperator::new(1, DMatrix::from_row_slice(2, 2, &[0.0, -g, -g, 0.0])).unwrap();
        let prop = Propagator::from_spectra([decompose(&op).unwrap()]);
        let mut sectors = BTreeMap::new();
        sectors.insert(1, DVector::from_vec(vec![c(1.0), c(0.0)]));
        let psi = GlobalPureState::from_sectors(sectors);
        let out = prop.evolve(&psi, PI / (2.0 * g)).unwrap();
        let amps = out.sector(1).unwrap();
        assert!(amps[0].norm() < 1e-12);
        assert!((amps[1].norm() - 1.0).abs() < 1e-12);
        assert!((prop.evolve(&psi, 0.0).unwrap().sector(1).unwrap()[0] - c(1.0)).norm() < 1e-15);
    }

    #[test]
    fn missing_sector_is_config_error() {
        let prop = Propagator::from_spectra([decompose(&SectorOperator::zeros(0, 1)).unwrap()]);
        let mut sectors = BTreeMap::new();
        sectors.insert(3, DVector::from_vec(vec![c(1.0)]));
        let psi = GlobalPureState::from_sectors(sectors);
        assert!(matches!(prop.evolve(&psi, 1.0), Err(ChainError::Config(_))));
    }

    #[test]
    fn eigenstate_only_changes_phase() {
        let config = ChainConfig::new(3, 4, 3, 0.3).unwrap();
        let space = ChainSpace::new(&config).unwrap();
        let prop = Propagator::for_space(&space).unwrap();
        let spectrum = prop.spectrum(2).unwrap();
        let v = spectrum.vectors().column(3).map(c);
        let mut sectors = BTreeMap::new();
        sectors.insert(2, v.clone());
        let psi = GlobalPureState::from_sectors(sectors);
        let out = prop.evolve(&psi, 2.3).unwrap();
        let phase = Complex64::from_polar(1.0, -spectrum.energies()[3] * 2.3);
        assert!((out.sector(2).unwrap() - v * phase).camax() < 1e-12);
    }

    #[test]
    fn ensemble_weights_validated() {
        let config = ChainConfig::new(1, 2, 2, 0.3).unwrap();
        let space = ChainSpace::new(&config).unwrap();
        let psi = space.product_state(&OccupationVector::zeros(3)).unwrap();
        assert!(PureEnsemble::new(vec![(0.5, psi.clone())]).is_err());
        assert!(PureEnsemble::new(vec![(0.5, psi.clone()), (0.5, psi)]).is_ok());
    }

    #[test]
    fn maximally_mixed_sector_is_stationary() {
        let config = ChainConfig::new(2, 2, 2, 0.4).unwrap();
        let space = ChainSpace::new(&config).unwrap();
        let prop = Propagator::for_space(&space).unwrap();
        let basis = space.basis(1).unwrap();
        let w = 1.0 / basis.len() as f64;
        let members = basis
            .states()
            .iter()
            .map(|s| (w, space.product_state(s).unwrap()))
            .collect();
        let ens = PureEnsemble::new(members).unwrap();
        let out = prop.evolve_density(&ens, 1.7).unwrap();
        // populations of Σ p_i |ψ_i(τ)⟩⟨ψ_i(τ)| stay uniform
        for (i, _) in basis.states().iter().enumerate() {
            let pop: f64 = out
                .members()
                .iter()
                .map(|(p, psi)| p * psi.sector(1).unwrap()[i].norm_sqr())
                .sum();
            assert!((pop - w).abs() < 1e-12);
        }
    }
}
