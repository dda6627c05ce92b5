//! Systemic risk in surety contractor networks.
//!
//! The crate models a network of contractors where a failing principal can
//! drag down the obligees it works for. It provides:
//!
//! - [`netgraph`]: the network type, ingestion, validation and structure.
//! - [`meanfield`]: limiting failure probabilities, centrality, sensitivity.
//! - [`cascade`]: Monte Carlo simulation of the failure process.
//! - [`exactdist`]: exact joint laws on small instances.
//! - [`synthgen`]: synthetic, anonymized and imputed networks.

pub mod cascade;
pub mod exactdist;
pub mod meanfield;
pub mod netgraph;
pub mod synthgen;

pub use netgraph::{ContractorNetwork, Role};

#[cfg(doctest)]
mod guide {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/mean-field.md")]
    mod mean_field {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/exact-laws.md")]
    mod exact_laws {}
    #[doc = include_str!("../../../book/src/loss-dominance.md")]
    mod loss_dominance {}
    #[doc = include_str!("../../../book/src/synthetic-networks.md")]
    mod synthetic_networks {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
    #[doc = include_str!("../../../README.md")]
    mod readme {}
}
