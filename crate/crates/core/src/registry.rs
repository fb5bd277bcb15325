//! Service coordination center.
//!
//! Stores advertisements and pending requests, proposes matches, runs the
//! two-sided confirmation handshake and expires entries at their deadlines.
//!
//! The registry is event-sourced: every operation first decides which
//! [`Event`]s happen, then applies them one by one. All state changes live in
//! [`Registry::apply`], so folding a recorded log with
//! [`Registry::from_events`] rebuilds the same state.
//!
//! Each request is, at any time, in exactly one place: pending, held by one
//! open proposal, or gone. Advertisements are offers and may sit in several
//! open proposals at once; the first confirmation consumes the advertisement
//! and withdraws its other proposals.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::error::RegistryError;
use crate::matcher::{
    match_request, rank_matches, MatchVerdict, ServiceAdvertisement, ServiceForm, ServiceRequest,
    Timestamp,
};
use crate::ontology::Taxonomy;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    A,
    B,
}

impl fmt::Display for Side {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Side::A => "a",
            Side::B => "b",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Answer {
    Pending,
    Accepted,
    Declined,
}

/// A party's reply to a proposal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Response {
    Accepted,
    Declined,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ProposalStatus {
    Open,
    Confirmed,
    Dissolved,
}

/// The party on side B of a proposal: a peer request or an advertisement.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Counterpart {
    Request(String),
    Advertisement(String),
}

impl Counterpart {
    pub fn id(&self) -> &str {
        match self {
            Self::Request(id) | Self::Advertisement(id) => id,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchProposal {
    pub id: String,
    /// Always a request id.
    pub side_a: String,
    pub side_b: Counterpart,
    /// Side A's request evaluated against what side B offers.
    pub verdict: MatchVerdict,
    pub accept_a: Answer,
    pub accept_b: Answer,
    pub status: ProposalStatus,
    pub proposed_time: Timestamp,
    pub activity_deadline: Option<Timestamp>,
}

impl MatchProposal {
    fn answer(&self, side: Side) -> Answer {
        match side {
            Side::A => self.accept_a,
            Side::B => self.accept_b,
        }
    }

    fn party(&self, side: Side) -> &str {
        match side {
            Side::A => &self.side_a,
            Side::B => self.side_b.id(),
        }
    }

    fn request_sides(&self) -> impl Iterator<Item = &str> {
        let b = match &self.side_b {
            Counterpart::Request(id) => Some(id.as_str()),
            Counterpart::Advertisement(_) => None,
        };
        std::iter::once(self.side_a.as_str()).chain(b)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Entry {
    Request(ServiceRequest),
    Advertisement(ServiceAdvertisement),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpiryTarget {
    Request,
    Advertisement,
    Proposal,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EventKind {
    Submitted {
        entry: Entry,
    },
    /// The request found no partner and is parked as pending.
    NoMatch {
        request: String,
    },
    Proposed {
        proposal: String,
        side_a: String,
        side_b: Counterpart,
        verdict: MatchVerdict,
        activity_deadline: Option<Timestamp>,
    },
    Accepted {
        proposal: String,
        side: Side,
        party: String,
    },
    /// The declining party's entry leaves the registry; the other side's
    /// request returns to pending.
    Declined {
        proposal: String,
        side: Side,
        party: String,
    },
    Confirmed {
        proposal: String,
    },
    ContactExchanged {
        proposal: String,
        side_a: String,
        side_b: Counterpart,
    },
    /// An open proposal lost its advertisement to another proposal or to
    /// the advertiser declining elsewhere.
    Withdrawn {
        proposal: String,
        advertisement: String,
    },
    Expired {
        target: ExpiryTarget,
        id: String,
    },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Event {
    pub time: Timestamp,
    #[serde(flatten)]
    pub kind: EventKind,
}

/// One line of a scenario file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TimedCommand {
    pub at: Timestamp,
    #[serde(flatten)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Command {
    SubmitRequest { request: ServiceRequest },
    SubmitAdvertisement { advertisement: ServiceAdvertisement },
    Respond { proposal: String, side: Side, answer: Response },
    AdvanceClock,
}

#[derive(Debug, Error)]
#[error("command {index} failed: {source}")]
pub struct ReplayError {
    pub index: usize,
    #[source]
    pub source: RegistryError,
}

/// Comparable view of the registry contents, used to check that folding the
/// event log reproduces the live state.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Snapshot {
    pub adverts: BTreeMap<String, ServiceAdvertisement>,
    pub requests: BTreeMap<String, ServiceRequest>,
    pub pending: BTreeSet<String>,
    pub proposals: BTreeMap<u64, MatchProposal>,
}

#[derive(Debug, Clone)]
pub struct Registry {
    taxonomy: Taxonomy,
    adverts: BTreeMap<String, ServiceAdvertisement>,
    // every live request, pending or held by an open proposal
    requests: BTreeMap<String, ServiceRequest>,
    pending: BTreeSet<String>,
    proposals: BTreeMap<u64, MatchProposal>,
    seen_ids: BTreeSet<String>,
    clock: Timestamp,
    next_proposal: u64,
    log: Vec<Event>,
}

fn proposal_name(key: u64) -> String {
    format!("p{key}")
}

fn proposal_key(name: &str) -> Option<u64> {
    name.strip_prefix('p')?.parse().ok()
}

impl Registry {
    pub fn new(taxonomy: Taxonomy) -> Self {
        Self {
            taxonomy,
            adverts: BTreeMap::new(),
            requests: BTreeMap::new(),
            pending: BTreeSet::new(),
            proposals: BTreeMap::new(),
            seen_ids: BTreeSet::new(),
            clock: 0,
            next_proposal: 1,
            log: Vec::new(),
        }
    }

    /// Rebuilds a registry by folding a recorded event log.
    pub fn from_events<'a>(taxonomy: Taxonomy, events: impl IntoIterator<Item = &'a Event>) -> Self {
        let mut reg = Self::new(taxonomy);
        for e in events {
            reg.apply(e);
            reg.log.push(e.clone());
        }
        reg
    }

    pub fn taxonomy(&self) -> &Taxonomy {
        &self.taxonomy
    }

    pub fn clock(&self) -> Timestamp {
        self.clock
    }

    pub fn events(&self) -> &[Event] {
        &self.log
    }

    pub fn proposal(&self, id: &str) -> Option<&MatchProposal> {
        self.proposals.get(&proposal_key(id)?)
    }

    pub fn proposals(&self) -> impl Iterator<Item = &MatchProposal> {
        self.proposals.values()
    }

    pub fn pending(&self) -> impl Iterator<Item = &ServiceRequest> {
        self.pending.iter().map(|id| &self.requests[id])
    }

    pub fn is_pending(&self, id: &str) -> bool {
        self.pending.contains(id)
    }

    pub fn advertisements(&self) -> impl Iterator<Item = &ServiceAdvertisement> {
        self.adverts.values()
    }

    pub fn snapshot(&self) -> Snapshot {
        Snapshot {
            adverts: self.adverts.clone(),
            requests: self.requests.clone(),
            pending: self.pending.clone(),
            proposals: self.proposals.clone(),
        }
    }

    pub fn submit_request(&mut self, req: ServiceRequest) -> Result<Vec<Event>, RegistryError> {
        if self.seen_ids.contains(&req.id) {
            return Err(RegistryError::DuplicateId(req.id));
        }
        req.validate(&self.taxonomy)?;
        if let Some(deadline) = req.deadline.filter(|&d| d < self.clock) {
            return Err(RegistryError::ExpiredOnArrival {
                id: req.id,
                deadline,
                now: self.clock,
            });
        }
        let mark = self.log.len();
        let id = req.id.clone();
        self.emit(EventKind::Submitted {
            entry: Entry::Request(req),
        });
        self.seek_partner(&id)?;
        Ok(self.log[mark..].to_vec())
    }

    pub fn submit_advertisement(
        &mut self,
        adv: ServiceAdvertisement,
    ) -> Result<Vec<Event>, RegistryError> {
        if self.seen_ids.contains(&adv.id) {
            return Err(RegistryError::DuplicateId(adv.id));
        }
        adv.validate(&self.taxonomy)?;

        let mut matches = Vec::new();
        for id in &self.pending {
            let req = &self.requests[id];
            if req.form != ServiceForm::Provided {
                continue;
            }
            let verdict = match_request(&self.taxonomy, req, &adv, self.clock)?;
            if verdict.overall {
                matches.push((id.clone(), verdict));
            }
        }
        matches.sort_by(|(ia, va), (ib, vb)| {
            vb.type_degree
                .cmp(&va.type_degree)
                .then(vb.provider_degree.cmp(&va.provider_degree))
                .then_with(|| ia.cmp(ib))
        });

        let mark = self.log.len();
        let adv_id = adv.id.clone();
        self.emit(EventKind::Submitted {
            entry: Entry::Advertisement(adv),
        });
        for (req_id, verdict) in matches {
            self.propose(req_id, Counterpart::Advertisement(adv_id.clone()), verdict);
        }
        Ok(self.log[mark..].to_vec())
    }

    pub fn respond(
        &mut self,
        proposal: &str,
        side: Side,
        answer: Response,
    ) -> Result<Vec<Event>, RegistryError> {
        let key = proposal_key(proposal)
            .filter(|k| self.proposals.contains_key(k))
            .ok_or_else(|| RegistryError::UnknownProposal(proposal.to_string()))?;
        let p = &self.proposals[&key];
        if p.status != ProposalStatus::Open {
            return Err(RegistryError::ProposalResolved(p.id.clone()));
        }
        if p.answer(side) != Answer::Pending {
            return Err(RegistryError::AlreadyAnswered {
                proposal: p.id.clone(),
                side: side.to_string(),
            });
        }
        let p = p.clone();
        let party = p.party(side).to_string();
        let mark = self.log.len();

        match answer {
            Response::Accepted => {
                self.emit(EventKind::Accepted {
                    proposal: p.id.clone(),
                    side,
                    party,
                });
                let other = match side {
                    Side::A => p.accept_b,
                    Side::B => p.accept_a,
                };
                if other == Answer::Accepted {
                    self.emit(EventKind::Confirmed {
                        proposal: p.id.clone(),
                    });
                    self.emit(EventKind::ContactExchanged {
                        proposal: p.id.clone(),
                        side_a: p.side_a.clone(),
                        side_b: p.side_b.clone(),
                    });
                    if let Counterpart::Advertisement(adv) = &p.side_b {
                        let restored = self.withdraw_advert_proposals(adv);
                        self.rematch(restored)?;
                    }
                }
            }
            Response::Declined => {
                self.emit(EventKind::Declined {
                    proposal: p.id.clone(),
                    side,
                    party,
                });
                let mut restored = Vec::new();
                match (side, &p.side_b) {
                    (Side::A, Counterpart::Request(b)) => restored.push(b.clone()),
                    (Side::A, Counterpart::Advertisement(_)) => {}
                    (Side::B, Counterpart::Request(_)) => restored.push(p.side_a.clone()),
                    (Side::B, Counterpart::Advertisement(adv)) => {
                        restored.push(p.side_a.clone());
                        restored.extend(self.withdraw_advert_proposals(adv));
                    }
                }
                self.rematch(restored)?;
            }
        }
        Ok(self.log[mark..].to_vec())
    }

    /// Moves the clock forward and expires everything whose deadline has
    /// passed. Deadlines are inclusive: an entry due at `t` survives a move
    /// to `t` and expires on any later time.
    pub fn advance_clock(&mut self, new_time: Timestamp) -> Result<Vec<Event>, RegistryError> {
        if new_time < self.clock {
            return Err(RegistryError::TimeRegression {
                now: self.clock,
                requested: new_time,
            });
        }
        self.clock = new_time;
        let mark = self.log.len();

        let stale: Vec<MatchProposal> = self
            .proposals
            .values()
            .filter(|p| p.status == ProposalStatus::Open)
            .filter(|p| p.activity_deadline.is_some_and(|d| d < new_time))
            .cloned()
            .collect();
        let mut restored = Vec::new();
        for p in &stale {
            self.emit(EventKind::Expired {
                target: ExpiryTarget::Proposal,
                id: p.id.clone(),
            });
            restored.extend(p.request_sides().map(str::to_string));
        }

        let expired_requests: Vec<String> = self
            .pending
            .iter()
            .filter(|id| self.requests[*id].deadline.is_some_and(|d| d < new_time))
            .cloned()
            .collect();
        for id in expired_requests {
            self.emit(EventKind::Expired {
                target: ExpiryTarget::Request,
                id,
            });
        }
        let expired_adverts: Vec<String> = self
            .adverts
            .values()
            .filter(|a| a.deadline.is_some_and(|d| d < new_time))
            .map(|a| a.id.clone())
            .collect();
        for id in expired_adverts {
            let restored_here = self.withdraw_advert_proposals(&id);
            restored.extend(restored_here);
            self.emit(EventKind::Expired {
                target: ExpiryTarget::Advertisement,
                id,
            });
        }

        self.rematch(restored)?;
        Ok(self.log[mark..].to_vec())
    }

    /// Advances the clock to the command's time, then runs the command.
    /// The clock move stands even if the command itself is rejected.
    pub fn execute(&mut self, cmd: TimedCommand) -> Result<Vec<Event>, RegistryError> {
        let mut events = if cmd.at > self.clock || matches!(cmd.command, Command::AdvanceClock) {
            self.advance_clock(cmd.at)?
        } else if cmd.at < self.clock {
            return Err(RegistryError::TimeRegression {
                now: self.clock,
                requested: cmd.at,
            });
        } else {
            Vec::new()
        };
        let more = match cmd.command {
            Command::SubmitRequest { request } => self.submit_request(request)?,
            Command::SubmitAdvertisement { advertisement } => self.submit_advertisement(advertisement)?,
            Command::Respond {
                proposal,
                side,
                answer,
            } => self.respond(&proposal, side, answer)?,
            Command::AdvanceClock => Vec::new(),
        };
        events.extend(more);
        Ok(events)
    }

    /// Checks the structural invariants, returning a description of the
    /// first violation.
    pub fn check_invariants(&self) -> Result<(), String> {
        let mut holders: BTreeMap<&str, usize> = BTreeMap::new();
        for p in self.proposals.values().filter(|p| p.status == ProposalStatus::Open) {
            for id in p.request_sides() {
                if !self.requests.contains_key(id) {
                    return Err(format!("open proposal {} holds unknown request {id}", p.id));
                }
                *holders.entry(id).or_default() += 1;
            }
            if let Counterpart::Advertisement(adv) = &p.side_b {
                if !self.adverts.contains_key(adv) {
                    return Err(format!("open proposal {} holds unknown advert {adv}", p.id));
                }
            }
        }
        for id in self.requests.keys() {
            let held = holders.get(id.as_str()).copied().unwrap_or(0);
            let pending = self.pending.contains(id);
            if usize::from(pending) + held != 1 {
                return Err(format!("request {id} is pending={pending} and held by {held} proposals"));
            }
        }
        if let Some(id) = self.pending.iter().find(|id| !self.requests.contains_key(*id)) {
            return Err(format!("pending id {id} has no request"));
        }
        for p in self.proposals.values() {
            let both = p.accept_a == Answer::Accepted && p.accept_b == Answer::Accepted;
            if (p.status == ProposalStatus::Confirmed) != both {
                return Err(format!("proposal {} status {:?} disagrees with answers", p.id, p.status));
            }
        }
        Ok(())
    }

    fn emit(&mut self, kind: EventKind) {
        let event = Event {
            time: self.clock,
            kind,
        };
        self.apply(&event);
        self.log.push(event);
    }

    /// The single place where state changes.
    fn apply(&mut self, event: &Event) {
        self.clock = self.clock.max(event.time);
        match &event.kind {
            EventKind::Submitted { entry } => match entry {
                Entry::Request(r) => {
                    self.seen_ids.insert(r.id.clone());
                    self.pending.insert(r.id.clone());
                    self.requests.insert(r.id.clone(), r.clone());
                }
                Entry::Advertisement(a) => {
                    self.seen_ids.insert(a.id.clone());
                    self.adverts.insert(a.id.clone(), a.clone());
                }
            },
            EventKind::NoMatch { .. } => {}
            EventKind::Proposed {
                proposal,
                side_a,
                side_b,
                verdict,
                activity_deadline,
            } => {
                let key = proposal_key(proposal).expect("proposal ids are p<n>");
                self.next_proposal = self.next_proposal.max(key + 1);
                let p = MatchProposal {
                    id: proposal.clone(),
                    side_a: side_a.clone(),
                    side_b: side_b.clone(),
                    verdict: *verdict,
                    accept_a: Answer::Pending,
                    accept_b: Answer::Pending,
                    status: ProposalStatus::Open,
                    proposed_time: event.time,
                    activity_deadline: *activity_deadline,
                };
                for id in p.request_sides() {
                    self.pending.remove(id);
                }
                self.proposals.insert(key, p);
            }
            EventKind::Accepted { proposal, side, .. } => {
                let p = self.proposal_mut(proposal);
                match side {
                    Side::A => p.accept_a = Answer::Accepted,
                    Side::B => p.accept_b = Answer::Accepted,
                }
            }
            EventKind::Declined { proposal, side, .. } => {
                let p = self.proposal_mut(proposal);
                match side {
                    Side::A => p.accept_a = Answer::Declined,
                    Side::B => p.accept_b = Answer::Declined,
                }
                p.status = ProposalStatus::Dissolved;
                let p = p.clone();
                match side {
                    Side::A => {
                        self.requests.remove(&p.side_a);
                        if let Counterpart::Request(b) = &p.side_b {
                            self.pending.insert(b.clone());
                        }
                    }
                    Side::B => {
                        match &p.side_b {
                            Counterpart::Request(b) => self.requests.remove(b),
                            Counterpart::Advertisement(a) => {
                                self.adverts.remove(a);
                                None
                            }
                        };
                        self.pending.insert(p.side_a.clone());
                    }
                }
            }
            EventKind::Confirmed { proposal } => {
                self.proposal_mut(proposal).status = ProposalStatus::Confirmed;
            }
            EventKind::ContactExchanged { side_a, side_b, .. } => {
                self.requests.remove(side_a);
                match side_b {
                    Counterpart::Request(b) => {
                        self.requests.remove(b);
                    }
                    Counterpart::Advertisement(a) => {
                        self.adverts.remove(a);
                    }
                }
            }
            EventKind::Withdrawn { proposal, .. } => self.dissolve_and_restore(proposal),
            EventKind::Expired { target, id } => match target {
                ExpiryTarget::Request => {
                    self.pending.remove(id);
                    self.requests.remove(id);
                }
                ExpiryTarget::Advertisement => {
                    self.adverts.remove(id);
                }
                ExpiryTarget::Proposal => self.dissolve_and_restore(id),
            },
        }
    }

    fn proposal_mut(&mut self, name: &str) -> &mut MatchProposal {
        let key = proposal_key(name).expect("proposal ids are p<n>");
        self.proposals.get_mut(&key).expect("event references a known proposal")
    }

    fn dissolve_and_restore(&mut self, name: &str) {
        let p = self.proposal_mut(name);
        p.status = ProposalStatus::Dissolved;
        let p = p.clone();
        for id in p.request_sides() {
            if self.requests.contains_key(id) {
                self.pending.insert(id.to_string());
            }
        }
    }

    /// Withdraws every open proposal holding `adv`, returning the requests
    /// that went back to pending.
    fn withdraw_advert_proposals(&mut self, adv: &str) -> Vec<String> {
        let holding: Vec<(String, String)> = self
            .proposals
            .values()
            .filter(|p| p.status == ProposalStatus::Open)
            .filter(|p| matches!(&p.side_b, Counterpart::Advertisement(a) if a == adv))
            .map(|p| (p.id.clone(), p.side_a.clone()))
            .collect();
        let mut restored = Vec::with_capacity(holding.len());
        for (proposal, side_a) in holding {
            self.emit(EventKind::Withdrawn {
                proposal,
                advertisement: adv.to_string(),
            });
            restored.push(side_a);
        }
        restored
    }

    fn rematch(&mut self, ids: Vec<String>) -> Result<(), RegistryError> {
        for id in ids {
            if self.pending.contains(&id) {
                self.seek_partner(&id)?;
            }
        }
        Ok(())
    }

    /// Looks for the best partner of a pending request and proposes it, or
    /// records that none exists.
    fn seek_partner(&mut self, id: &str) -> Result<(), RegistryError> {
        let req = self.requests[id].clone();
        let found = match req.form {
            ServiceForm::Provided => {
                rank_matches(&self.taxonomy, &req, self.adverts.values(), self.clock)?
                    .into_iter()
                    .next()
                    .map(|(adv, v)| (Counterpart::Advertisement(adv.id.clone()), v))
            }
            ServiceForm::ParticipantSeeking => {
                let offers: Vec<ServiceAdvertisement> = self
                    .pending
                    .iter()
                    .filter(|other| other.as_str() != id)
                    .map(|other| &self.requests[other])
                    .filter(|other| other.form == ServiceForm::ParticipantSeeking)
                    .map(ServiceRequest::participant_offer)
                    .collect();
                let own_offer = req.participant_offer();
                let mut found = None;
                for (offer, v) in rank_matches(&self.taxonomy, &req, &offers, self.clock)? {
                    let peer = &self.requests[&offer.id];
                    if match_request(&self.taxonomy, peer, &own_offer, self.clock)?.overall {
                        found = Some((Counterpart::Request(offer.id.clone()), v));
                        break;
                    }
                }
                found
            }
        };
        match found {
            Some((counterpart, verdict)) => self.propose(id.to_string(), counterpart, verdict),
            None => self.emit(EventKind::NoMatch {
                request: id.to_string(),
            }),
        }
        Ok(())
    }

    fn propose(&mut self, side_a: String, side_b: Counterpart, verdict: MatchVerdict) {
        let deadline_a = self.requests[&side_a].deadline;
        let deadline_b = match &side_b {
            Counterpart::Request(id) => self.requests[id].deadline,
            Counterpart::Advertisement(id) => self.adverts[id].deadline,
        };
        let activity_deadline = match (deadline_a, deadline_b) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        let proposal = proposal_name(self.next_proposal);
        self.emit(EventKind::Proposed {
            proposal,
            side_a,
            side_b,
            verdict,
            activity_deadline,
        });
    }
}

/// Runs a scenario from an empty registry and returns the full event log.
pub fn replay(
    taxonomy: Taxonomy,
    commands: impl IntoIterator<Item = TimedCommand>,
) -> Result<Registry, ReplayError> {
    let mut reg = Registry::new(taxonomy);
    for (index, cmd) in commands.into_iter().enumerate() {
        reg.execute(cmd)
            .map_err(|source| ReplayError { index, source })?;
    }
    Ok(reg)
}

pub fn parse_scenario(json: &str) -> Result<Vec<TimedCommand>, serde_json::Error> {
    serde_json::from_str(json)
}

/// One JSON object per line, newline-terminated.
pub fn events_to_jsonl(events: &[Event]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&serde_json::to_string(e).expect("events serialize"));
        out.push('\n');
    }
    out
}
