//! Kernel of a mutual assistance community for ambient assisted living.
//!
//! * [`ontology`] loads the concept taxonomy and answers subsumption queries.
//! * [`matcher`] compares service requests with advertisements facet by facet.
//! * [`registry`] is the coordination center: pending requests, deadlines,
//!   peer pairing and the two-sided confirmation handshake.
//! * [`sim`] is the discrete-time cell-grid model of the community.
//! * [`sweep`] runs replicated parameter sweeps over the simulator.

pub mod error;
pub mod matcher;
pub mod ontology;
pub mod registry;
pub mod sim;
pub mod sweep;

pub use error::{MatchError, OntologyError, ParamsError, RegistryError, SweepError};
pub use matcher::{
    match_request, rank_matches, MatchVerdict, ServiceAdvertisement, ServiceForm, ServiceRequest,
    Timestamp,
};
pub use ontology::{ConceptId, MatchDegree, Taxonomy};
