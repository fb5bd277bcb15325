//! Facet-wise comparison of a service request against a service advertisement.
//!
//! Provider class and service type are matched independently through the
//! taxonomy, each against its own minimum degree. Location, deadline and
//! service form are plain compatibility checks.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::MatchError;
use crate::ontology::{ConceptId, MatchDegree, Taxonomy};

/// Integer time units. The shipped scenarios use minutes.
pub type Timestamp = i64;

/// Provider class every participant-seeking request offers to its peer.
pub const PARTICIPANT_CLASS: &str = "participant";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ServiceForm {
    /// Someone provides the service to the requester.
    Provided,
    /// The requester looks for peers to join a group activity.
    ParticipantSeeking,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceAdvertisement {
    pub id: String,
    pub provider_class: ConceptId,
    pub service_type: ConceptId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deadline: Option<Timestamp>,
    #[serde(default = "provided")]
    pub form: ServiceForm,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ServiceRequest {
    pub id: String,
    pub wanted_provider_class: ConceptId,
    pub wanted_service_type: ConceptId,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub location: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub deadline: Option<Timestamp>,
    #[serde(default = "provided")]
    pub form: ServiceForm,
    #[serde(default = "exact")]
    pub min_provider_degree: MatchDegree,
    #[serde(default = "exact")]
    pub min_type_degree: MatchDegree,
}

fn provided() -> ServiceForm {
    ServiceForm::Provided
}

fn exact() -> MatchDegree {
    MatchDegree::Exact
}

impl ServiceRequest {
    /// The facets this request offers to a peer when pairing participants:
    /// its own service type, offered by a `participant`.
    pub fn participant_offer(&self) -> ServiceAdvertisement {
        ServiceAdvertisement {
            id: self.id.clone(),
            provider_class: ConceptId::new(PARTICIPANT_CLASS).expect("non-empty constant"),
            service_type: self.wanted_service_type.clone(),
            location: self.location.clone(),
            deadline: self.deadline,
            form: ServiceForm::ParticipantSeeking,
        }
    }

    pub fn validate(&self, taxonomy: &Taxonomy) -> Result<(), MatchError> {
        if self.min_provider_degree == MatchDegree::Fail || self.min_type_degree == MatchDegree::Fail {
            return Err(MatchError::FailThreshold(self.id.clone()));
        }
        for c in [&self.wanted_provider_class, &self.wanted_service_type] {
            if !taxonomy.contains(c) {
                return Err(crate::error::OntologyError::UnknownConcept(c.to_string()).into());
            }
        }
        Ok(())
    }
}

impl ServiceAdvertisement {
    pub fn validate(&self, taxonomy: &Taxonomy) -> Result<(), MatchError> {
        for c in [&self.provider_class, &self.service_type] {
            if !taxonomy.contains(c) {
                return Err(crate::error::OntologyError::UnknownConcept(c.to_string()).into());
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchVerdict {
    pub provider_degree: MatchDegree,
    pub type_degree: MatchDegree,
    pub location_ok: bool,
    pub deadline_ok: bool,
    pub form_ok: bool,
    pub overall: bool,
}

impl MatchVerdict {
    /// Ranking order: better type degree first, then better provider degree.
    fn rank_cmp(&self, other: &Self) -> Ordering {
        other
            .type_degree
            .cmp(&self.type_degree)
            .then(other.provider_degree.cmp(&self.provider_degree))
    }
}

/// Trimmed, lowercased, with internal whitespace runs collapsed.
pub fn normalize_location(raw: &str) -> String {
    raw.split_whitespace()
        .map(str::to_lowercase)
        .collect::<Vec<_>>()
        .join(" ")
}

fn locations_compatible(a: Option<&str>, b: Option<&str>) -> bool {
    match (a, b) {
        (Some(a), Some(b)) => normalize_location(a) == normalize_location(b),
        _ => true,
    }
}

pub fn match_request(
    taxonomy: &Taxonomy,
    req: &ServiceRequest,
    adv: &ServiceAdvertisement,
    now: Timestamp,
) -> Result<MatchVerdict, MatchError> {
    req.validate(taxonomy)?;
    let provider_degree = taxonomy.match_concepts(&req.wanted_provider_class, &adv.provider_class)?;
    let type_degree = taxonomy.match_concepts(&req.wanted_service_type, &adv.service_type)?;
    let location_ok = locations_compatible(req.location.as_deref(), adv.location.as_deref());
    let deadline_ok = [req.deadline, adv.deadline]
        .into_iter()
        .flatten()
        .all(|d| d >= now);
    let form_ok = req.form == adv.form;
    let overall = provider_degree >= req.min_provider_degree
        && type_degree >= req.min_type_degree
        && location_ok
        && deadline_ok
        && form_ok;
    Ok(MatchVerdict {
        provider_degree,
        type_degree,
        location_ok,
        deadline_ok,
        form_ok,
        overall,
    })
}

/// Accepted advertisements, best first: type degree desc, provider degree
/// desc, advertisement id asc.
pub fn rank_matches<'a>(
    taxonomy: &Taxonomy,
    req: &ServiceRequest,
    adverts: impl IntoIterator<Item = &'a ServiceAdvertisement>,
    now: Timestamp,
) -> Result<Vec<(&'a ServiceAdvertisement, MatchVerdict)>, MatchError> {
    let mut out = Vec::new();
    for adv in adverts {
        let verdict = match_request(taxonomy, req, adv, now)?;
        if verdict.overall {
            out.push((adv, verdict));
        }
    }
    out.sort_by(|(a, va), (b, vb)| va.rank_cmp(vb).then_with(|| a.id.cmp(&b.id)));
    Ok(out)
}

/// Every advertisement with its verdict, accepted ones first in rank order,
/// then rejected ones under the same key.
pub fn evaluate_all<'a>(
    taxonomy: &Taxonomy,
    req: &ServiceRequest,
    adverts: impl IntoIterator<Item = &'a ServiceAdvertisement>,
    now: Timestamp,
) -> Result<Vec<(&'a ServiceAdvertisement, MatchVerdict)>, MatchError> {
    let mut out = adverts
        .into_iter()
        .map(|adv| match_request(taxonomy, req, adv, now).map(|v| (adv, v)))
        .collect::<Result<Vec<_>, _>>()?;
    out.sort_by(|(a, va), (b, vb)| {
        vb.overall
            .cmp(&va.overall)
            .then(va.rank_cmp(vb))
            .then_with(|| a.id.cmp(&b.id))
    });
    Ok(out)
}
