//! Disorder ensembles of helical (H-CROW) and regular coupled-resonator
//! optical waveguides.
//!
//! The crate is organized bottom-up:
//!
//! * [`lattice`] builds tight-binding Hamiltonians for both lattice kinds and
//!   both circulation directions, samples on-site disorder and evaluates the
//!   Bloch band structure.
//! * [`transport`] solves the driven, lossy steady state on a frequency grid
//!   with a banded complex LU and derives transmission, reflection, intensity
//!   profiles and group delays.
//! * [`quantum`] turns a pair of output spectra into two-photon observables:
//!   Hong-Ou-Mandel coincidence, the N00N-state density matrix, its purity and
//!   the entanglement entropy of one output port.
//! * [`ensemble`] runs seeded disorder ensembles in parallel and reduces them
//!   into deterministic summaries.
//!
//! All frequencies and rates are in units of the hopping strength `J`, and
//! times are in units of `1/J`.
//!
//! ```
//! use hcrow::lattice::{build_hamiltonian, Circulation, LatticeSpec};
//! use hcrow::transport::{solve_steady_state, transmission, Channel, FrequencyGrid};
//!
//! let spec = LatticeSpec::hcrow(10).with_disorder_std(0.0);
//! let grid = FrequencyGrid::symmetric(4.0, 129).unwrap();
//! let h = build_hamiltonian(&spec, Circulation::Ccw, None).unwrap();
//! let fs = solve_steady_state(&h, &spec, &grid, Channel::One).unwrap();
//! let t = transmission(&fs);
//! assert!(t.iter().all(|&x| (0.0..=1.0 + 1e-8).contains(&x)));
//! ```

pub mod ensemble;
pub mod error;
pub mod lattice;
pub mod quantum;
pub mod seed;
pub mod stats;
pub mod transport;

pub use error::{Error, Result};

pub use num_complex::Complex64;

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/lattice.md")]
    mod lattice {}
    #[doc = include_str!("../../../book/src/transport.md")]
    mod transport {}
    #[doc = include_str!("../../../book/src/quantum.md")]
    mod quantum {}
    #[doc = include_str!("../../../book/src/ensemble.md")]
    mod ensemble {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
