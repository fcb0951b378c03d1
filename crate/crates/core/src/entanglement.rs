//! Entanglement distribution through the chain.
//!
//! An ancilla `a` that never touches the chain starts maximally entangled with
//! the sender `b`; after evolution the entanglement between `a` and the
//! receiver `c` is measured by the logarithmic negativity. The ancilla is kept
//! as a label on the chain's basis-input images rather than a tensor factor:
//! `|Ψ(τ)⟩ = d^{−1/2} Σ_μ |μ⟩_a ⊗ U(τ)|μ⟩_b|0…0⟩|0⟩_c`.

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::basis::GlobalPureState;
use crate::config::ChainConfig;
use crate::error::{ChainError, Result};
use crate::transfer::{check_time, Corrections, TransferSimulator};

/// Eigenvalues at or above this count as non-negative.
const NEGATIVE_EIGEN_THRESHOLD: f64 = -1e-12;

/// Density matrix of two parties with local dimensions `dims`, party 1 the
/// most significant index.
#[derive(Debug, Clone, PartialEq)]
pub struct BipartiteDensity {
    rho: DMatrix<Complex64>,
    dims: (usize, usize),
}

/// Which party a partial transpose acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Party {
    First,
    Second,
}

impl BipartiteDensity {
    pub fn new(rho: DMatrix<Complex64>, dims: (usize, usize)) -> Result<Self> {
        const TOL: f64 = 1e-10;
        let n = dims.0 * dims.1;
        if rho.nrows() != n || rho.ncols() != n {
            return Err(ChainError::Domain(format!(
                "a {}x{} bipartite density must be {n}x{n}",
                dims.0, dims.1
            )));
        }
        if (&rho - rho.adjoint()).camax() > TOL {
            return Err(ChainError::Domain("bipartite density is not Hermitian".into()));
        }
        let tr = rho.trace();
        if (tr - Complex64::new(1.0, 0.0)).norm() > TOL {
            return Err(ChainError::Domain(format!("bipartite density has trace {tr}")));
        }
        if rho.clone().symmetric_eigenvalues().min() < -TOL {
            return Err(ChainError::Domain("bipartite density is not positive".into()));
        }
        Ok(Self { rho, dims })
    }

    /// `|ψ⟩⟨ψ|` for a pure state given in the product basis.
    pub fn pure(psi: &[Complex64], dims: (usize, usize)) -> Result<Self> {
        let v = nalgebra::DVector::from_column_slice(psi);
        Self::new(&v * v.adjoint(), dims)
    }

    pub fn matrix(&self) -> &DMatrix<Complex64> {
        &self.rho
    }

    pub fn dims(&self) -> (usize, usize) {
        self.dims
    }
}

/// `⟨i₁ j₂|ρ^{T₁}|k₁ l₂⟩ = ⟨k₁ j₂|ρ|i₁ l₂⟩` (and the analogue for party 2).
pub fn partial_transpose(rho: &BipartiteDensity, party: Party) -> DMatrix<Complex64> {
    let (d1, d2) = rho.dims;
    let m = &rho.rho;
    DMatrix::from_fn(d1 * d2, d1 * d2, |row, col| {
        let (i, j) = (row / d2, row % d2);
        let (k, l) = (col / d2, col % d2);
        match party {
            Party::First => m[(k * d2 + j, i * d2 + l)],
            Party::Second => m[(i * d2 + l, k * d2 + j)],
        }
    })
}

/// `log₂ ‖ρ^{T₁}‖₁` with `‖ρ^{T₁}‖₁ = 1 + 2 |Σ λ_neg|`.
pub fn log_negativity(rho: &BipartiteDensity) -> f64 {
    let pt = partial_transpose(rho, Party::First);
    let negative: f64 = pt
        .symmetric_eigenvalues()
        .iter()
        .filter(|&&x| x < NEGATIVE_EIGEN_THRESHOLD)
        .sum();
    (1.0 + 2.0 * negative.abs()).log2()
}

/// Ancilla-labelled initial state: component `μ` is the chain state with the
/// sender in `|μ⟩`, carrying weight `1/√d`.
#[derive(Debug, Clone)]
pub struct EntangledInitial {
    components: Vec<GlobalPureState>,
}

impl EntangledInitial {
    pub fn dim(&self) -> usize {
        self.components.len()
    }

    /// Chain state paired with `|μ⟩_a`, unnormalized by the `1/√d` weight.
    pub fn component(&self, mu: usize) -> &GlobalPureState {
        &self.components[mu]
    }

    pub fn components(&self) -> &[GlobalPureState] {
        &self.components
    }

    /// Squared norm of the joint state.
    pub fn norm_squared(&self) -> f64 {
        let d = self.dim() as f64;
        self.components.iter().map(|c| c.norm_squared() / d).sum()
    }

    /// Reduced state of the ancilla, `ρ_a[μ][ν] = ⟨ψ_ν|ψ_μ⟩ / d`.
    pub fn ancilla_density(&self) -> DMatrix<Complex64> {
        let d = self.dim();
        DMatrix::from_fn(d, d, |mu, nu| {
            self.components[nu].inner(&self.components[mu]) / Complex64::new(d as f64, 0.0)
        })
    }
}

pub fn entangled_initial(sim: &TransferSimulator) -> Result<EntangledInitial> {
    let d = sim.config().qudit_dim;
    let components = (0..d).map(|mu| sim.sender_basis_state(mu)).collect::<Result<Vec<_>>>()?;
    Ok(EntangledInitial { components })
}

/// Evolves the chain part and traces down to the `(a, c)` pair.
pub fn distributed_pair(sim: &TransferSimulator, tau: f64, corrections: Corrections) -> Result<BipartiteDensity> {
    check_time(tau)?;
    let d = sim.config().qudit_dim;
    let initial = entangled_initial(sim)?;
    let evolved = initial
        .components()
        .iter()
        .map(|psi| sim.evolve(psi, tau))
        .collect::<Result<Vec<_>>>()?;
    let diag = corrections.diagonal(sim.config(), tau, d)?;
    let mats = evolved
        .iter()
        .map(|psi| sim.trace().split(psi, d))
        .collect::<Result<Vec<_>>>()?;
    let scale = Complex64::new(1.0 / d as f64, 0.0);
    let mut rho = DMatrix::zeros(d * d, d * d);
    for (mu, ma) in mats.iter().enumerate() {
        for (nu, mb) in mats.iter().enumerate() {
            let block = ma.transpose() * mb.conjugate();
            for i in 0..d {
                for j in 0..d {
                    rho[(mu * d + i, nu * d + j)] = diag[i] * block[(i, j)] * diag[j].conj() * scale;
                }
            }
        }
    }
    BipartiteDensity::new(rho, (d, d))
}

/// `LE_ac / log₂ d`, reported clamped to at most 1.
pub fn distribution_efficiency(config: &ChainConfig, tau: f64, phase_correction: bool) -> Result<f64> {
    let sim = TransferSimulator::new(config)?;
    distribution_efficiency_with(&sim, tau, phase_correction)
}

pub fn distribution_efficiency_with(sim: &TransferSimulator, tau: f64, phase_correction: bool) -> Result<f64> {
    let corrections = Corrections {
        phase_gate: phase_correction,
        field_phase: true,
    };
    let pair = distributed_pair(sim, tau, corrections)?;
    let d = sim.config().qudit_dim as f64;
    Ok((log_negativity(&pair) / d.log2()).min(1.0))
}

/// `d^{−1/2} Σ_μ s_μ |μμ⟩` with unit-modulus `s_μ`.
pub fn maximally_entangled(d: usize, phases: &[Complex64]) -> Result<BipartiteDensity> {
    let mut psi = vec![Complex64::new(0.0, 0.0); d * d];
    let norm = 1.0 / (d as f64).sqrt();
    for mu in 0..d {
        psi[mu * d + mu] = phases.get(mu).copied().unwrap_or(Complex64::new(1.0, 0.0)) * norm;
    }
    BipartiteDensity::pure(&psi, (d, d))
}
