//! Cone geometry, membership, multiplicity, and growth analysis for
//! semigroups generated by integer vectors.
//!
//! Start with [`vecset::VectorSet`] to validate a generator list, then:
//!
//! - [`semigroup`] decides reachability and computes the finite set of
//!   minimal saturated-cone apexes (the higher-dimensional Frobenius set);
//! - [`multiplicity`] counts walks exactly and extends the count to real
//!   points through nearest reachable members;
//! - [`maxent`] solves the constrained entropy maximization behind
//!   closed-form growth rates;
//! - [`growth`] computes directional growth rates, closed-form and
//!   empirical, and full curve sweeps;
//! - [`rigidity`] decides whether two generator sets share a growth
//!   function, with exact witnesses either way;
//! - [`io`] fixes the file formats and canonical serialization used by
//!   the `frobnd` binary.
//!
//! The [`guide`] module mirrors the long-form book; its examples are the
//! book's examples and run as doc-tests.

mod exact;
pub mod growth;
pub mod io;
pub mod maxent;
pub mod multiplicity;
pub mod rigidity;
pub mod semigroup;
pub mod vecset;

/// The book, chapter by chapter, compiled so every example stays honest.
pub mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    pub mod overview {}
    #[doc = include_str!("../../../book/src/generators.md")]
    pub mod generator_sets {}
    #[doc = include_str!("../../../book/src/reachability.md")]
    pub mod reachability {}
    #[doc = include_str!("../../../book/src/counting.md")]
    pub mod counting_walks {}
    #[doc = include_str!("../../../book/src/growth.md")]
    pub mod growth_rates {}
    #[doc = include_str!("../../../book/src/rigidity.md")]
    pub mod growth_rigidity {}
    #[doc = include_str!("../../../book/src/cli.md")]
    pub mod command_line {}
    #[doc = include_str!("../../../book/src/numerics.md")]
    pub mod exactness {}
}
