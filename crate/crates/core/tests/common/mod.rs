//! Independent dense oracles shared by the integration tests.
//!
//! Nothing here uses the library's basis, Hamiltonian or propagator code: spin
//! operators come from the textbook `|S, m⟩` matrix elements, and operators on
//! the chain are Kronecker products over all sites (site 0 most significant).

#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use qudit_chain::{ChainConfig, GlobalPureState};

/// `S⁺`, `S⁻`, `S^z` in the basis ordered by `m = S, S−1, …, −S`.
pub fn spin_matrices(twice_spin: u32) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let s = twice_spin as f64 / 2.0;
    let dim = twice_spin as usize + 1;
    let m = |i: usize| s - i as f64;
    let mut plus = DMatrix::zeros(dim, dim);
    for i in 1..dim {
        // S⁺|m⟩ = √(S(S+1) − m(m+1)) |m+1⟩, and |m+1⟩ sits one row up
        plus[(i - 1, i)] = (s * (s + 1.0) - m(i) * (m(i) + 1.0)).sqrt();
    }
    let minus = plus.transpose();
    let z = DMatrix::from_diagonal(&DVector::from_fn(dim, |i, _| m(i)));
    (plus, minus, z)
}

pub fn kron(a: &DMatrix<f64>, b: &DMatrix<f64>) -> DMatrix<f64> {
    a.kronecker(b)
}

/// `op` acting on `site` of an `n_sites` chain with local dimension `dim`.
pub fn embed(op: &DMatrix<f64>, site: usize, n_sites: usize, dim: usize) -> DMatrix<f64> {
    let mut out = DMatrix::identity(1, 1);
    for k in 0..n_sites {
        let factor = if k == site { op.clone() } else { DMatrix::identity(dim, dim) };
        out = kron(&out, &factor);
    }
    out
}

/// Full-space Hamiltonian pieces `(H_XX, H_M)` for the whole chain.
pub fn full_hamiltonian(config: &ChainConfig) -> (DMatrix<f64>, DMatrix<f64>) {
    let n_sites = config.bus_length + 2;
    let dim = config.twice_spin as usize + 1;
    let (plus, minus, z) = spin_matrices(config.twice_spin);
    let total = dim.pow(n_sites as u32);
    let mut xx = DMatrix::zeros(total, total);
    for a in 0..n_sites - 1 {
        let c = if a == 0 || a == n_sites - 2 {
            config.coupling_g
        } else {
            config.coupling_j
        };
        let hop = embed(&plus, a, n_sites, dim) * embed(&minus, a + 1, n_sites, dim)
            + embed(&minus, a, n_sites, dim) * embed(&plus, a + 1, n_sites, dim);
        xx -= hop * c;
    }
    let mut zeeman = DMatrix::zeros(total, total);
    for a in 0..n_sites {
        zeeman -= embed(&z, a, n_sites, dim) * config.field_h;
    }
    (xx, zeeman)
}

/// Total excitation number `Σ (S − S^z_i)` on the full space.
pub fn full_excitation_number(config: &ChainConfig) -> DMatrix<f64> {
    let n_sites = config.bus_length + 2;
    let dim = config.twice_spin as usize + 1;
    let n = DMatrix::from_diagonal(&DVector::from_fn(dim, |i, _| i as f64));
    let total = dim.pow(n_sites as u32);
    (0..n_sites).fold(DMatrix::zeros(total, total), |acc, a| acc + embed(&n, a, n_sites, dim))
}

/// Product-space index of an occupation list (occupation = row index of `|m⟩`).
pub fn product_index(occupations: &[u8], dim: usize) -> usize {
    occupations.iter().fold(0, |acc, &n| acc * dim + n as usize)
}

/// Embeds a sector-resolved state into the full product space.
pub fn to_full(config: &ChainConfig, state: &GlobalPureState) -> DVector<Complex64> {
    let space = qudit_chain::ChainSpace::new(config).unwrap();
    let dim = config.local_dim();
    let mut out = DVector::zeros(dim.pow(config.n_sites() as u32));
    for (n, amps) in state.sectors() {
        let basis = space.basis(n).unwrap();
        for (i, occ) in basis.states().iter().enumerate() {
            out[product_index(occ.as_slice(), dim)] += amps[i];
        }
    }
    out
}

/// Receiver (last site) density of a full-space pure state by explicit summation.
pub fn dense_receiver_density(psi: &DVector<Complex64>, dim: usize) -> DMatrix<Complex64> {
    let env = psi.len() / dim;
    DMatrix::from_fn(dim, dim, |a, b| {
        (0..env).map(|e| psi[e * dim + a] * psi[e * dim + b].conj()).sum()
    })
}

/// `exp(−i H τ)` by Taylor series with scaling and squaring.
pub fn expm_minus_i(h: &DMatrix<f64>, tau: f64) -> DMatrix<Complex64> {
    let a = h.map(|x| Complex64::new(0.0, -x * tau));
    let norm = a.iter().map(|z| z.norm()).fold(0.0, f64::max) * a.nrows() as f64;
    let squarings = if norm > 0.5 { (norm / 0.5).log2().ceil() as u32 } else { 0 };
    let scaled = &a / Complex64::new(2f64.powi(squarings as i32), 0.0);
    let n = a.nrows();
    let mut result = DMatrix::<Complex64>::identity(n, n);
    let mut term = DMatrix::<Complex64>::identity(n, n);
    for k in 1..40 {
        term = &term * &scaled / Complex64::new(k as f64, 0.0);
        result += &term;
    }
    for _ in 0..squarings {
        result = &result * &result;
    }
    result
}

pub fn c(x: f64) -> Complex64 {
    Complex64::new(x, 0.0)
}
