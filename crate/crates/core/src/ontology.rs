//! Concept taxonomy used to compare service types and provider classes.
//!
//! A taxonomy is a directed acyclic graph of concepts with `child -> parent`
//! edges. Subsumption is the reflexive-transitive closure of that relation and
//! is precomputed at load time, so every query is a bitset lookup.

use std::collections::{BTreeSet, HashMap};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::OntologyError;

/// Graded outcome of comparing a requested concept with an advertised one.
///
/// Variants are declared worst-first so the derived ordering gives
/// `Exact > Subsume > PlugIn > Fail`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum MatchDegree {
    Fail,
    #[serde(rename = "plugin")]
    PlugIn,
    Subsume,
    Exact,
}

impl MatchDegree {
    pub const ALL: [MatchDegree; 4] = [Self::Exact, Self::Subsume, Self::PlugIn, Self::Fail];

    pub fn as_str(self) -> &'static str {
        match self {
            Self::Exact => "exact",
            Self::Subsume => "subsume",
            Self::PlugIn => "plugin",
            Self::Fail => "fail",
        }
    }
}

impl fmt::Display for MatchDegree {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// A normalized concept name: trimmed and lowercased, never empty.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(transparent)]
pub struct ConceptId(String);

impl ConceptId {
    pub fn new(raw: &str) -> Result<Self, OntologyError> {
        let name = raw.trim().to_lowercase();
        if name.is_empty() {
            return Err(OntologyError::EmptyConcept);
        }
        Ok(Self(name))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ConceptId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for ConceptId {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        ConceptId::new(&raw).map_err(serde::de::Error::custom)
    }
}

impl std::str::FromStr for ConceptId {
    type Err = OntologyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Self::new(s)
    }
}

/// On-disk taxonomy layout: `{"concepts": [...], "edges": [[child, parent], ...]}`.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TaxonomyDocument {
    #[serde(default)]
    pub concepts: Vec<String>,
    #[serde(default)]
    pub edges: Vec<(String, String)>,
}

impl TaxonomyDocument {
    /// Every structural problem in the document, not just the first.
    /// Empty exactly when [`Taxonomy::from_document`] would succeed.
    pub fn diagnose(&self) -> Vec<OntologyError> {
        let mut problems = Vec::new();
        let mut index = HashMap::new();
        let mut concepts = Vec::new();
        for raw in &self.concepts {
            match ConceptId::new(raw) {
                Ok(c) if index.contains_key(&c) => problems.push(OntologyError::DuplicateConcept(c.to_string())),
                Ok(c) => {
                    index.insert(c.clone(), concepts.len());
                    concepts.push(c);
                }
                Err(e) => problems.push(e),
            }
        }

        let mut seen = BTreeSet::new();
        let mut edges = Vec::new();
        for (child, parent) in &self.edges {
            let (c, p) = match (ConceptId::new(child), ConceptId::new(parent)) {
                (Ok(c), Ok(p)) => (c, p),
                (Err(e), _) | (_, Err(e)) => {
                    problems.push(e);
                    continue;
                }
            };
            let missing = [&c, &p].into_iter().find(|x| !index.contains_key(*x));
            if let Some(m) = missing {
                problems.push(OntologyError::DanglingEdge {
                    child: c.to_string(),
                    parent: p.to_string(),
                    missing: m.to_string(),
                });
                continue;
            }
            let e = (index[&c], index[&p]);
            if !seen.insert(e) {
                problems.push(OntologyError::DuplicateEdge {
                    child: c.to_string(),
                    parent: p.to_string(),
                });
                continue;
            }
            edges.push(e);
        }

        if let Err(cycle) = topological_order(concepts.len(), &edges) {
            problems.push(OntologyError::Cycle(
                cycle.into_iter().map(|i| concepts[i].to_string()).collect(),
            ));
        }
        problems
    }
}

/// Validated, immutable concept DAG.
#[derive(Debug, Clone)]
pub struct Taxonomy {
    concepts: Vec<ConceptId>,
    index: HashMap<ConceptId, usize>,
    edges: Vec<(usize, usize)>,
    // ancestors[i] has bit j set iff concept i is a (reflexive) subclass of j
    ancestors: Vec<BitRow>,
}

#[derive(Debug, Clone)]
struct BitRow(Vec<u64>);

impl BitRow {
    fn new(len: usize) -> Self {
        Self(vec![0; len.div_ceil(64)])
    }

    fn set(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }

    fn get(&self, i: usize) -> bool {
        self.0[i / 64] & (1 << (i % 64)) != 0
    }

    fn union_with(&mut self, other: &BitRow) {
        for (a, b) in self.0.iter_mut().zip(&other.0) {
            *a |= *b;
        }
    }
}

impl Taxonomy {
    /// Parses and validates a JSON taxonomy document.
    pub fn from_json(document: &str) -> Result<Self, OntologyError> {
        let doc: TaxonomyDocument =
            serde_json::from_str(document).map_err(|e| OntologyError::Parse(e.to_string()))?;
        Self::from_document(&doc)
    }

    pub fn from_document(doc: &TaxonomyDocument) -> Result<Self, OntologyError> {
        let concepts = doc
            .concepts
            .iter()
            .map(|c| ConceptId::new(c))
            .collect::<Result<Vec<_>, _>>()?;
        let edges = doc
            .edges
            .iter()
            .map(|(c, p)| Ok((ConceptId::new(c)?, ConceptId::new(p)?)))
            .collect::<Result<Vec<_>, OntologyError>>()?;
        Self::new(concepts, edges)
    }

    /// Builds a taxonomy from already-normalized concepts and `(child, parent)` edges.
    pub fn new(
        concepts: Vec<ConceptId>,
        edges: Vec<(ConceptId, ConceptId)>,
    ) -> Result<Self, OntologyError> {
        let mut index = HashMap::with_capacity(concepts.len());
        for (i, c) in concepts.iter().enumerate() {
            if index.insert(c.clone(), i).is_some() {
                return Err(OntologyError::DuplicateConcept(c.to_string()));
            }
        }

        let mut seen = BTreeSet::new();
        let mut idx_edges = Vec::with_capacity(edges.len());
        for (child, parent) in &edges {
            let lookup = |c: &ConceptId| {
                index.get(c).copied().ok_or_else(|| OntologyError::DanglingEdge {
                    child: child.to_string(),
                    parent: parent.to_string(),
                    missing: c.to_string(),
                })
            };
            let e = (lookup(child)?, lookup(parent)?);
            if !seen.insert(e) {
                return Err(OntologyError::DuplicateEdge {
                    child: child.to_string(),
                    parent: parent.to_string(),
                });
            }
            idx_edges.push(e);
        }

        let order = topological_order(concepts.len(), &idx_edges).map_err(|cycle| {
            OntologyError::Cycle(cycle.into_iter().map(|i| concepts[i].to_string()).collect())
        })?;

        let mut parents = vec![Vec::new(); concepts.len()];
        for &(c, p) in &idx_edges {
            parents[c].push(p);
        }
        let mut ancestors: Vec<BitRow> = (0..concepts.len()).map(|_| BitRow::new(concepts.len())).collect();
        // `order` lists parents before children, so each parent's row is final when read.
        for &c in &order {
            let mut row = BitRow::new(concepts.len());
            row.set(c);
            for &p in &parents[c] {
                row.union_with(&ancestors[p]);
            }
            ancestors[c] = row;
        }

        Ok(Self {
            concepts,
            index,
            edges: idx_edges,
            ancestors,
        })
    }

    /// The example taxonomy shipped in `ontology/aal.json`.
    pub fn builtin() -> Self {
        Self::from_json(BUILTIN_TAXONOMY).expect("shipped taxonomy is valid")
    }

    pub fn len(&self) -> usize {
        self.concepts.len()
    }

    pub fn is_empty(&self) -> bool {
        self.concepts.is_empty()
    }

    pub fn concepts(&self) -> &[ConceptId] {
        &self.concepts
    }

    pub fn edges(&self) -> impl Iterator<Item = (&ConceptId, &ConceptId)> + '_ {
        self.edges
            .iter()
            .map(|&(c, p)| (&self.concepts[c], &self.concepts[p]))
    }

    pub fn contains(&self, concept: &ConceptId) -> bool {
        self.index.contains_key(concept)
    }

    fn position(&self, concept: &ConceptId) -> Result<usize, OntologyError> {
        self.index
            .get(concept)
            .copied()
            .ok_or_else(|| OntologyError::UnknownConcept(concept.to_string()))
    }

    /// True iff `x == y` or a child-to-parent path leads from `x` to `y`.
    pub fn is_subclass_of(&self, x: &ConceptId, y: &ConceptId) -> Result<bool, OntologyError> {
        let (xi, yi) = (self.position(x)?, self.position(y)?);
        Ok(self.ancestors[xi].get(yi))
    }

    /// Degree of `advertised` with respect to `requested`.
    ///
    /// Checks run in order: identical concepts are `Exact`, a requested concept
    /// below the advertised one is `Subsume`, the mirror case is `PlugIn`.
    pub fn match_concepts(
        &self,
        requested: &ConceptId,
        advertised: &ConceptId,
    ) -> Result<MatchDegree, OntologyError> {
        let (r, a) = (self.position(requested)?, self.position(advertised)?);
        Ok(if r == a {
            MatchDegree::Exact
        } else if self.ancestors[r].get(a) {
            MatchDegree::Subsume
        } else if self.ancestors[a].get(r) {
            MatchDegree::PlugIn
        } else {
            MatchDegree::Fail
        })
    }

    pub fn to_document(&self) -> TaxonomyDocument {
        TaxonomyDocument {
            concepts: self.concepts.iter().map(|c| c.to_string()).collect(),
            edges: self
                .edges()
                .map(|(c, p)| (c.to_string(), p.to_string()))
                .collect(),
        }
    }
}

pub(crate) const BUILTIN_TAXONOMY: &str = include_str!("../../../ontology/aal.json");

/// Kahn's algorithm over `child -> parent` edges, emitting parents first.
/// On failure returns one cycle as a closed path of concept indices.
fn topological_order(n: usize, edges: &[(usize, usize)]) -> Result<Vec<usize>, Vec<usize>> {
    let mut children = vec![Vec::new(); n];
    let mut out_degree = vec![0usize; n];
    for &(c, p) in edges {
        children[p].push(c);
        out_degree[c] += 1;
    }
    let mut ready: Vec<usize> = (0..n).filter(|&i| out_degree[i] == 0).rev().collect();
    let mut order = Vec::with_capacity(n);
    while let Some(p) = ready.pop() {
        order.push(p);
        for &c in &children[p] {
            out_degree[c] -= 1;
            if out_degree[c] == 0 {
                ready.push(c);
            }
        }
    }
    if order.len() == n {
        return Ok(order);
    }

    // Every unordered node still has a parent inside the unordered set; walk
    // parent links until a node repeats.
    let mut parent_of = vec![None; n];
    for &(c, p) in edges {
        if out_degree[c] > 0 && out_degree[p] > 0 && parent_of[c].is_none() {
            parent_of[c] = Some(p);
        }
    }
    let start = (0..n).find(|&i| out_degree[i] > 0).expect("cycle exists");
    let mut pos = vec![None; n];
    let mut path = Vec::new();
    let mut cur = start;
    loop {
        if let Some(at) = pos[cur] {
            let mut cycle: Vec<usize> = path[at..].to_vec();
            cycle.push(cur);
            return Err(cycle);
        }
        pos[cur] = Some(path.len());
        path.push(cur);
        cur = parent_of[cur].expect("unordered node has an unordered parent");
    }
}
