// Grid- and matrix-indexed loops are the house style here; iterator
// rewrites of multi-index numerics obscure the math.
#![allow(clippy::needless_range_loop)]

//! Numerical models of nonlocal-game strategies: quantum (Hilbert-space),
//! statistical (sample-space averaging), ergodic (measure-preserving
//! dynamics) and Gaussian (Monte Carlo) pictures of the same correlation
//! sets, with the CHSH game worked end to end in each of them.

pub mod chsh;
pub mod duality;
pub mod error;
pub mod games;
pub mod gauss;
pub mod linalg;
pub mod observables;
pub mod quantum;
pub mod random;
pub mod rational;
pub mod suites;

pub use error::{Error, Result};
pub use games::{BareStrategy, DualCorrelationTable, GameValue, NonlocalGame};
pub use linalg::{Mat, C64};
pub use observables::{FiniteSampleSpace, Observable};
pub use quantum::{ProjectionValuedMeasure, Wavefunction};
