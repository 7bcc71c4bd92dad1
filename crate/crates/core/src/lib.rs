//! Quantum Riemannian geometry and the geometric Dirac operator on the
//! non-reduced fuzzy sphere `C_λ[S²]`.

pub mod algebra;
pub mod calculus;
pub mod dirac;
pub mod distance;
pub mod error;
pub mod geometry;
pub mod hilbert;
pub mod linalg;
pub mod reduced;
pub mod spin;

pub use algebra::{AlgebraElement, FuzzySphere, Monomial, Parameters, C64, DEFAULT_TOL};
pub use calculus::{OneForm, ThreeForm, TwoForm};
pub use error::{Error, Result};
pub use geometry::{ChristoffelSymbols, QuantumMetric};
pub use spin::{AxiomReport, SpinData};
pub use dirac::{DiracBlock, SpectralReport, SpinorField};
pub use hilbert::{FormKind, InnerProductContext};
pub use distance::{DistanceResult, State};
pub use reduced::{CoherentState, ReducedRep};
