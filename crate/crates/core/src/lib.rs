//! Robust throughput maximization for a decode-and-forward MIMO relay whose
//! residual self-interference is partially cancelled by an intelligent
//! reconfigurable surface (IRS).
//!
//! The crate is organised bottom-up:
//!
//! * [`tensor_ops`] – Khatri-Rao products, vectorization and ordered
//!   Hermitian decompositions.
//! * [`channel`] – scenario configuration, Rician channel generation and the
//!   trace-ball uncertainty model.
//! * [`rsi_bound`] – worst-case residual interference after the best IRS
//!   response, plus a brute-force oracle.
//! * [`rates`] – exact log-det rates, Fiedler determinant bounds and the
//!   eigenvalue-domain rate expressions.
//! * [`covariance`] – commuting covariance construction and majorization
//!   predicates.
//! * [`allocation`] – water-filling, multi-level (capped) water-filling and the
//!   adversary's closed-form response.
//! * [`optimizer`] – relay-power bisection, half-duplex solve and FD/HD mode
//!   selection.
//! * [`sim`] – paired-seed Monte Carlo sweeps.
//! * [`suites`] – randomized property suites shared by the CLI and tests.

pub mod allocation;
pub mod channel;
pub mod covariance;
mod error;
pub mod optimizer;
pub mod oracles;
pub mod rates;
pub mod rsi_bound;
pub mod sim;
pub mod suites;
pub mod tensor_ops;

pub use error::{Error, Result};

pub use allocation::AllocationState;
pub use channel::{ChannelSet, Geometry, IrsMode, ScenarioConfig, TBounds};
pub use optimizer::{Bottleneck, OptimizerResult, SolveOptions};
pub use rates::{OperatingMode, RateResult};
pub use rsi_bound::RsiBoundResult;
pub use sim::{SweepAxis, SweepRow, SweepSpec, TrScale};
pub use tensor_ops::{CMatrix, CVector, Spectrum};

pub use num_complex::Complex64;
