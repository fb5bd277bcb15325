//! Independent oracles shared by the integration tests. Nothing here calls
//! into the code under test except to read state back out.
#![allow(dead_code)]

use mutual_assist::sim::{Grid, Neighborhood, RequestKind, Role, SimParams};
use mutual_assist::MatchDegree;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A random DAG as raw JSON-ready names plus `(child, parent)` index edges.
#[derive(Debug, Clone)]
pub struct RandomDag {
    pub names: Vec<String>,
    /// The same concepts spelled differently, used in the edge list to
    /// exercise name normalization.
    pub edge_names: Vec<String>,
    pub edges: Vec<(usize, usize)>,
}

impl RandomDag {
    pub fn generate(seed: u64, max_nodes: usize) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n = rng.gen_range(1..=max_nodes);
        let density: f64 = rng.gen_range(0.0..0.45);
        // Edges only run from later to earlier positions of a random
        // permutation, so the graph is acyclic by construction.
        let mut perm: Vec<usize> = (0..n).collect();
        perm.shuffle(&mut rng);
        let mut edges = Vec::new();
        for hi in 0..n {
            for lo in 0..hi {
                if rng.gen_bool(density) {
                    edges.push((perm[hi], perm[lo]));
                }
            }
        }
        edges.shuffle(&mut rng);
        let names = (0..n).map(|i| format!("Concept_{i}")).collect();
        let edge_names = (0..n).map(|i| format!("  CONCEPT_{i} ")).collect();
        Self {
            names,
            edge_names,
            edges,
        }
    }

    pub fn to_json(&self) -> String {
        let edges: Vec<[&str; 2]> = self
            .edges
            .iter()
            .map(|&(c, p)| [self.edge_names[c].as_str(), self.edge_names[p].as_str()])
            .collect();
        serde_json::json!({ "concepts": self.names, "edges": edges }).to_string()
    }

    /// Normalized name of concept `i`, as the taxonomy reports it.
    pub fn id(&self, i: usize) -> String {
        format!("concept_{i}")
    }

    /// Is there a directed child→parent path from `x` to `y` (length ≥ 0)?
    /// Plain depth-first path search over the raw edge list.
    pub fn path_exists(&self, x: usize, y: usize) -> bool {
        let mut stack = vec![x];
        let mut seen = vec![false; self.names.len()];
        while let Some(v) = stack.pop() {
            if v == y {
                return true;
            }
            if std::mem::replace(&mut seen[v], true) {
                continue;
            }
            for &(c, p) in &self.edges {
                if c == v && !seen[p] {
                    stack.push(p);
                }
            }
        }
        false
    }

    pub fn degree(&self, requested: usize, advertised: usize) -> MatchDegree {
        if requested == advertised {
            MatchDegree::Exact
        } else if self.path_exists(requested, advertised) {
            MatchDegree::Subsume
        } else if self.path_exists(advertised, requested) {
            MatchDegree::PlugIn
        } else {
            MatchDegree::Fail
        }
    }
}

/// Compares every ordered pair of a random DAG against the oracle. Returns
/// a description of the first disagreement.
pub fn check_dag_against_oracle(dag: &RandomDag) -> Result<(), String> {
    let t = mutual_assist::Taxonomy::from_json(&dag.to_json()).map_err(|e| format!("load: {e}"))?;
    let n = dag.names.len();
    if t.len() != n {
        return Err(format!("taxonomy has {} concepts, expected {n}", t.len()));
    }
    let ids: Vec<mutual_assist::ConceptId> = (0..n).map(|i| dag.id(i).parse().unwrap()).collect();
    for x in 0..n {
        for y in 0..n {
            let want = dag.path_exists(x, y);
            let got = t.is_subclass_of(&ids[x], &ids[y]).map_err(|e| e.to_string())?;
            if got != want {
                return Err(format!("is_subclass_of({x}, {y}) = {got}, oracle {want}"));
            }
            let want = dag.degree(x, y);
            let got = t.match_concepts(&ids[x], &ids[y]).map_err(|e| e.to_string())?;
            if got != want {
                return Err(format!("match_concepts({x}, {y}) = {got}, oracle {want}"));
            }
        }
    }
    Ok(())
}

fn partner_in_reach(params: &SimParams, a: usize, b: usize) -> bool {
    let n = params.n as i64;
    let (ra, ca) = (a as i64 / n, a as i64 % n);
    let (rb, cb) = (b as i64 / n, b as i64 % n);
    let axis = |d: i64| {
        let d = d.abs();
        if params.torus {
            d.min(n - d)
        } else {
            d
        }
    };
    let (dr, dc) = (axis(ra - rb), axis(ca - cb));
    let r = params.radius as i64;
    match params.neighborhood {
        Neighborhood::Moore => dr.max(dc) <= r,
        Neighborhood::VonNeumann => dr + dc <= r,
    }
}

fn eligible(requester: Role, partner: Role) -> bool {
    match requester {
        Role::Requester(RequestKind::Alarm) => partner == Role::ProfessionalCaregiver,
        Role::Requester(RequestKind::Normal) => {
            matches!(partner, Role::ProfessionalCaregiver | Role::InformalCaregiver)
        }
        Role::Requester(RequestKind::Participant) => partner == Role::Requester(RequestKind::Participant),
        _ => false,
    }
}

/// Checks one step's state change without looking at the step's own event
/// report: conservation, link symmetry and exclusivity, eligibility and
/// reach of every link, no role change while linked, and workload that
/// only ever counts down by one.
pub fn check_transition(params: &SimParams, before: &Grid, after: &Grid) -> Result<(), String> {
    let (b, a) = (before.cells(), after.cells());
    if b.len() != a.len() || a.len() != params.n * params.n {
        return Err(format!("population changed: {} -> {}", b.len(), a.len()));
    }
    let total: usize = Role::ALL.iter().map(|&r| after.count(r)).sum();
    if total != a.len() {
        return Err(format!("role counts sum to {total}, not {}", a.len()));
    }
    for i in 0..a.len() {
        if let Some(j) = a[i].link {
            if j >= a.len() || j == i || a[j].link != Some(i) {
                return Err(format!("cell {i}: link to {j} not symmetric"));
            }
            if a[i].remaining_work != a[j].remaining_work || a[i].remaining_work.is_none() {
                return Err(format!("cells {i},{j}: work missing or unequal"));
            }
            let (req, other) = if a[i].role.request_kind().is_some() { (i, j) } else { (j, i) };
            if !eligible(a[req].role, a[other].role) {
                return Err(format!(
                    "cells {i},{j}: ineligible pair {} / {}",
                    a[i].role.name(),
                    a[j].role.name()
                ));
            }
            if !partner_in_reach(params, i, j) {
                return Err(format!("cells {i},{j}: linked outside the neighborhood"));
            }
        } else if a[i].remaining_work.is_some() {
            return Err(format!("cell {i}: unlinked but has work"));
        }

        match (b[i].link, b[i].remaining_work) {
            (Some(j), Some(w)) if w > 1 => {
                if a[i].link != Some(j) || a[i].remaining_work != Some(w - 1) {
                    return Err(format!(
                        "cell {i}: link {j} with work {w} became {:?} / {:?}",
                        a[i].link, a[i].remaining_work
                    ));
                }
                if a[i].role != b[i].role {
                    return Err(format!("cell {i}: role changed while linked"));
                }
            }
            (Some(j), Some(_)) => {
                // last unit of work: the pair must have dissolved
                if a[i].link == Some(j) {
                    return Err(format!("cell {i}: finished link to {j} still present"));
                }
            }
            (None, None) => {
                if let (Some(j), Some(w)) = (a[i].link, a[i].remaining_work) {
                    if w < params.workload_min || w > params.workload_max {
                        return Err(format!("cells {i},{j}: fresh link with work {w}"));
                    }
                }
            }
            _ => return Err(format!("cell {i}: link and work disagree before the step")),
        }
    }
    Ok(())
}

/// Average ranks (1-based), ties sharing the mean rank.
pub fn ranks(xs: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..xs.len()).collect();
    idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]));
    let mut out = vec![0.0; xs.len()];
    let mut i = 0;
    while i < idx.len() {
        let mut j = i;
        while j + 1 < idx.len() && xs[idx[j + 1]] == xs[idx[i]] {
            j += 1;
        }
        let r = (i + j) as f64 / 2.0 + 1.0;
        for &k in &idx[i..=j] {
            out[k] = r;
        }
        i = j + 1;
    }
    out
}

pub fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let cov: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let vx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    let vy: f64 = y.iter().map(|b| (b - my).powi(2)).sum();
    cov / (vx * vy).sqrt()
}

pub fn spearman(x: &[f64], y: &[f64]) -> f64 {
    pearson(&ranks(x), &ranks(y))
}

/// Mean and standard error of the mean (sample SD / sqrt(n)).
pub fn mean_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (n - 1.0);
    (m, (var / n).sqrt())
}
