//! Exact finite-field machinery for forbidden-intersection problems on
//! families of linear maps `F_q^m -> F_q^n`.
//!
//! The crate is organised bottom-up:
//!
//! * [`gf`] – arithmetic in `F_{p^s}`, the absolute trace and character roots.
//! * [`cyclo`] – exact arithmetic in the cyclotomic field `Q(ω)`, `ω = e^{2πi/p}`.
//! * [`matspace`] – matrices, canonical subspaces, counting formulas, enumeration.
//! * [`fourier`] – characters of `(M(n,m), +)`, transforms, rank components, projections.
//! * [`spectra`] – eigenvalues of the rank-generated Cayley graphs and ratio bounds.
//! * [`families`] – restrictions, juntas, capture/quasiregularity searches, regularity trees.
//! * [`extremal`] – canonical families, Singer cycles, derangement counts, extremal searches.
//!
//! Everything is exact: counts are big integers, measures are big rationals and
//! character sums live in `Q(ω)`.

pub mod budget;
pub mod cyclo;
pub mod error;
pub mod extremal;
pub mod families;
pub mod fourier;
pub mod gf;
pub mod graph;
pub mod io;
pub mod matspace;
pub mod power;
pub mod report;
pub mod spectra;
pub mod verify;

pub use budget::Budget;
pub use cyclo::Cyclo;
pub use error::{Error, Result};
pub use gf::{Field, FieldSpec, Fq};
pub use matspace::{Mat, Subspace};
