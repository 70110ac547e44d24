//! Spectral analysis of a tight-binding ring with two complex onsite defects.
//!
//! The ring has `N` sites, unit hopping and defects `alpha` at site `k` and
//! `beta` at site `k'`. In the PT-symmetric case `beta = conj(alpha)` with
//! `alpha = a + i eta`, so site `k` is a source and `k'` a drain.
//!
//! Energies are written as `E = 2 cos(theta)`; the quasi-momentum `theta`
//! solves a closed-form equation ([`ring::char_fn`]) and determines the
//! eigenvector in closed form. A dense eigensolver ([`oracle::dense_eig`])
//! seeds and cross-checks every analytic result.

pub mod asymptotics;
pub mod config;
pub mod error;
pub mod export;
pub mod oracle;
pub mod ring;
pub mod singular;
pub mod spectrum;
pub mod sweep;
pub mod tolerance;
pub mod transport;

pub use asymptotics::{
    classify_large_eta, delta_theta_a, delta_theta_eta, edge_theta_small_a, localized_pair_energy,
    LargeEtaClass, LargeEtaKind,
};
pub use config::RingConfig;
pub use error::{Error, Result};
pub use num_complex::Complex64;
pub use oracle::{dense_eig, OracleResult};
pub use ring::{
    boundary_matrix, build_hamiltonian, char_fn, eigvec_from_theta, energy_of, theta_of,
    BoundaryMatrix, ComplexMatrix,
};
pub use singular::{
    accidental_singular, circle_law_check, is_opaque, structural_singular, SingularKind,
    SingularPrediction,
};
pub use spectrum::{solve_spectrum, solve_spectrum_with_oracle, EigenPair, Spectrum, VectorSource};
pub use sweep::{
    count_real, detect_events, pt_threshold, sweep_spectrum, EventKind, SingularityEvent,
    SpectrumBranch, SweepResult,
};
pub use tolerance::Tolerances;
pub use transport::{
    branch_flux_closed_form, branch_weights, classify_directionality, local_flux, BranchWeights,
    Directionality, DirectionalityTag, FluxProfile, TransportClass,
};
