//! Degeneracy certification for bubbles `ω = π(P/Q) + b` of the constant
//! mean curvature equation `Δω = 2 ω_x ∧ ω_y`.
//!
//! A bubble is degenerate when its Jacobi operator has kernel beyond the
//! `4k + 5` dimensions generated by its moduli. [`classify`] decides this
//! from a finite residue system at the branch points; [`kernel_count`]
//! counts the kernel independently by a Galerkin discretization on the
//! sphere. All numerics are generic over `f32` and `f64`.

pub mod bubble;
pub mod cpoly;
pub mod error;
pub mod jacobi;
pub mod linalg;
pub mod mobius;
pub mod moduli;
pub mod num;
pub mod quadrature;
pub mod residue;
pub mod spectral;

pub use bubble::{make_bubble, BranchPoint, BranchSet, Bubble, BubbleDescriptor};
pub use cpoly::{gcd_coprime, GcdOutcome, Polynomial, RootCluster, RootConfig};
pub use error::{Error, Result};
pub use jacobi::{reconstruct_field, tangent_fields, trivial_solutions, FieldSample, Grid};
pub use mobius::{ExtPoint, Mobius};
pub use moduli::{degeneracy_objective, solve_degenerate, uniqueness_sweep, FamilyPoint, SearchConfig, SweepConfig};
pub use num::{Cx, Real};
pub use quadrature::QuadratureSpec;
pub use residue::{classify, classify_detailed, ClassifyConfig, DegeneracyReport, ResidueSystem, Verdict};
pub use spectral::{kernel_count, spectrum, SpectralConfig, SpectrumResult};

pub type Polynomial64 = Polynomial<f64>;
pub type Polynomial32 = Polynomial<f32>;
pub type Bubble64 = Bubble<f64>;
pub type Bubble32 = Bubble<f32>;
pub type Mobius64 = Mobius<f64>;
pub type Mobius32 = Mobius<f32>;
pub type BranchSet64 = BranchSet<f64>;
pub type DegeneracyReport64 = DegeneracyReport<f64>;
pub type SpectrumResult64 = SpectrumResult<f64>;
