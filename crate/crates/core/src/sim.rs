//! Discrete-time `n x n` cell-grid model of the community.
//!
//! Every cell is one dweller with a [`Role`]. A step runs three phases in a
//! fixed order:
//!
//! 1. **Service**: linked pairs burn one unit of work; finished requesters
//!    turn neutral and providers become available again.
//! 2. **Matching**: unlinked requesters, in scan order, link with the first
//!    eligible unlinked neighbor.
//! 3. **Churn**: every unlinked cell changes role according to its row of
//!    the transition matrix.
//!
//! All randomness comes from one ChaCha8 stream seeded by [`SimParams::seed`],
//! consumed in a fixed order, so a parameter set determines the whole run.

use std::fmt::Write as _;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::ParamsError;

const TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RequestKind {
    /// Needs a professional caregiver.
    Alarm,
    /// Served by an informal or a professional caregiver.
    Normal,
    /// Looks for a peer participant to share a group activity.
    Participant,
}

impl RequestKind {
    pub const ALL: [RequestKind; 3] = [Self::Alarm, Self::Normal, Self::Participant];

    fn index(self) -> usize {
        self as usize
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    ProfessionalCaregiver,
    InformalCaregiver,
    Neutral,
    Requester(RequestKind),
}

impl Role {
    /// Canonical order used by fraction vectors and transition matrices.
    pub const ALL: [Role; 6] = [
        Role::ProfessionalCaregiver,
        Role::InformalCaregiver,
        Role::Neutral,
        Role::Requester(RequestKind::Alarm),
        Role::Requester(RequestKind::Normal),
        Role::Requester(RequestKind::Participant),
    ];

    pub fn index(self) -> usize {
        match self {
            Role::ProfessionalCaregiver => 0,
            Role::InformalCaregiver => 1,
            Role::Neutral => 2,
            Role::Requester(k) => 3 + k.index(),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Role::ProfessionalCaregiver => "professional",
            Role::InformalCaregiver => "informal",
            Role::Neutral => "neutral",
            Role::Requester(RequestKind::Alarm) => "alarm",
            Role::Requester(RequestKind::Normal) => "normal",
            Role::Requester(RequestKind::Participant) => "participant",
        }
    }

    pub fn from_name(name: &str) -> Option<Role> {
        Role::ALL.into_iter().find(|r| r.name() == name)
    }

    pub fn request_kind(self) -> Option<RequestKind> {
        match self {
            Role::Requester(k) => Some(k),
            _ => None,
        }
    }
}

/// Initial probability of each role. Missing entries default to zero.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RoleFractions {
    pub professional: f64,
    pub informal: f64,
    pub neutral: f64,
    pub alarm: f64,
    pub normal: f64,
    pub participant: f64,
}

impl RoleFractions {
    pub fn as_array(&self) -> [f64; 6] {
        [
            self.professional,
            self.informal,
            self.neutral,
            self.alarm,
            self.normal,
            self.participant,
        ]
    }

    pub fn from_array(a: [f64; 6]) -> Self {
        Self {
            professional: a[0],
            informal: a[1],
            neutral: a[2],
            alarm: a[3],
            normal: a[4],
            participant: a[5],
        }
    }

    pub fn get(&self, role: Role) -> f64 {
        self.as_array()[role.index()]
    }

    pub fn set(&mut self, role: Role, value: f64) {
        let mut a = self.as_array();
        a[role.index()] = value;
        *self = Self::from_array(a);
    }

    pub fn requesters(&self) -> f64 {
        self.alarm + self.normal + self.participant
    }

    fn validate(&self) -> Result<(), ParamsError> {
        for role in Role::ALL {
            let value = self.get(role);
            if !(0.0..=1.0).contains(&value) {
                return Err(ParamsError::FractionRange {
                    role: role.name(),
                    value,
                });
            }
        }
        let sum: f64 = self.as_array().iter().sum();
        if (sum - 1.0).abs() > TOLERANCE {
            return Err(ParamsError::FractionSum(sum));
        }
        Ok(())
    }
}

/// Per-step role change of unlinked cells.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Transition {
    /// With this probability a cell redraws its role from the initial
    /// fractions, so the community composition stays where it started.
    /// Off-diagonal mass of row `i` is `rate * (1 - f_i)`.
    Resample(f64),
    /// Like `Resample`, with a separate redraw rate for each role in
    /// [`Role::ALL`] order.
    PerRole([f64; 6]),
    /// Explicit row-stochastic matrix in [`Role::ALL`] order.
    Matrix(Vec<Vec<f64>>),
}

impl Default for Transition {
    fn default() -> Self {
        Transition::Resample(0.02)
    }
}

impl Transition {
    pub fn identity() -> Self {
        Transition::Resample(0.0)
    }

    pub fn matrix(&self, fractions: &RoleFractions) -> [[f64; 6]; 6] {
        let mut m = [[0.0; 6]; 6];
        let resample = |m: &mut [[f64; 6]; 6], rates: [f64; 6]| {
            let f = fractions.as_array();
            for (i, row) in m.iter_mut().enumerate() {
                for (j, p) in row.iter_mut().enumerate() {
                    *p = if i == j {
                        1.0 - rates[i] * (1.0 - f[j])
                    } else {
                        rates[i] * f[j]
                    };
                }
            }
        };
        match self {
            Transition::Resample(rate) => resample(&mut m, [*rate; 6]),
            Transition::PerRole(rates) => resample(&mut m, *rates),
            Transition::Matrix(rows) => {
                for (i, row) in rows.iter().enumerate().take(6) {
                    for (j, p) in row.iter().enumerate().take(6) {
                        m[i][j] = *p;
                    }
                }
            }
        }
        m
    }

    fn validate(&self) -> Result<(), ParamsError> {
        match self {
            Transition::Resample(rate) => {
                if !(0.0..=1.0).contains(rate) {
                    return Err(ParamsError::ChurnRate(*rate));
                }
            }
            Transition::PerRole(rates) => {
                if let Some(rate) = rates.iter().find(|r| !(0.0..=1.0).contains(*r)) {
                    return Err(ParamsError::ChurnRate(*rate));
                }
            }
            Transition::Matrix(rows) => {
                if rows.len() != 6 {
                    return Err(ParamsError::TransitionRow {
                        role: "matrix",
                        sum: f64::NAN,
                    });
                }
                for (i, row) in rows.iter().enumerate() {
                    let from = Role::ALL[i].name();
                    if row.len() != 6 {
                        return Err(ParamsError::TransitionRow { role: from, sum: f64::NAN });
                    }
                    for (j, &value) in row.iter().enumerate() {
                        if !(0.0..=1.0).contains(&value) {
                            return Err(ParamsError::TransitionEntry {
                                from,
                                to: Role::ALL[j].name(),
                                value,
                            });
                        }
                    }
                    let sum: f64 = row.iter().sum();
                    if (sum - 1.0).abs() > TOLERANCE {
                        return Err(ParamsError::TransitionRow { role: from, sum });
                    }
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Neighborhood {
    VonNeumann,
    #[default]
    Moore,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ScanOrder {
    #[default]
    RowMajor,
    /// Seeded random permutation each step.
    Shuffled,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimParams {
    pub n: usize,
    pub init_fractions: RoleFractions,
    #[serde(default)]
    pub transition: Transition,
    #[serde(default = "default_workload_min")]
    pub workload_min: u32,
    #[serde(default = "default_workload_max")]
    pub workload_max: u32,
    #[serde(default)]
    pub neighborhood: Neighborhood,
    #[serde(default = "default_radius")]
    pub radius: usize,
    #[serde(default)]
    pub torus: bool,
    #[serde(default)]
    pub scan_order: ScanOrder,
    /// Largest latency, in steps, still counted as timely.
    #[serde(default)]
    pub timely_window: u64,
    pub max_steps: u64,
    pub seed: u64,
}

fn default_workload_min() -> u32 {
    5
}

fn default_workload_max() -> u32 {
    25
}

fn default_radius() -> usize {
    1
}

impl SimParams {
    /// Defaults for everything but the grid size and composition.
    pub fn new(n: usize, init_fractions: RoleFractions) -> Self {
        Self {
            n,
            init_fractions,
            transition: Transition::default(),
            workload_min: default_workload_min(),
            workload_max: default_workload_max(),
            neighborhood: Neighborhood::default(),
            radius: default_radius(),
            torus: false,
            scan_order: ScanOrder::default(),
            timely_window: 0,
            max_steps: 500,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), ParamsError> {
        if self.n == 0 {
            return Err(ParamsError::EmptyGrid);
        }
        self.init_fractions.validate()?;
        self.transition.validate()?;
        if self.workload_min < 1 || self.workload_min > self.workload_max {
            return Err(ParamsError::Workload {
                min: self.workload_min,
                max: self.workload_max,
            });
        }
        if self.radius < 1 {
            return Err(ParamsError::Radius);
        }
        Ok(())
    }

    fn offsets(&self) -> Vec<(isize, isize)> {
        let r = self.radius as isize;
        let mut out = Vec::new();
        for dr in -r..=r {
            for dc in -r..=r {
                let inside = match self.neighborhood {
                    Neighborhood::Moore => true,
                    Neighborhood::VonNeumann => dr.abs() + dc.abs() <= r,
                };
                if inside && (dr, dc) != (0, 0) {
                    out.push((dr, dc));
                }
            }
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Cell {
    pub role: Role,
    /// Index of the partner cell.
    pub link: Option<usize>,
    /// Steps of service left; present exactly while linked.
    pub remaining_work: Option<u32>,
    /// Workload a requester brings before it is linked.
    pub demand: Option<u32>,
    /// Step at which the current request was created.
    pub request_birth: Option<u64>,
}

impl Cell {
    fn with_role(role: Role) -> Self {
        Self {
            role,
            link: None,
            remaining_work: None,
            demand: None,
            request_birth: None,
        }
    }

    pub fn is_linked(&self) -> bool {
        self.link.is_some()
    }
}

#[derive(Debug, Clone)]
pub struct Grid {
    n: usize,
    cells: Vec<Cell>,
    rng: ChaCha8Rng,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Link {
    pub requester: usize,
    pub partner: usize,
    pub kind: RequestKind,
    pub work: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Served {
    pub cell: usize,
    pub kind: RequestKind,
    pub latency: u64,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct StepEvents {
    pub completed: Vec<(usize, usize)>,
    pub linked: Vec<Link>,
    pub served: Vec<Served>,
    /// Requesters that churned away unserved.
    pub failed: Vec<(usize, RequestKind)>,
    pub born: Vec<(usize, RequestKind)>,
    /// Cells whose role changed in the churn phase.
    pub churned: Vec<usize>,
}

fn cumulative(row: &[f64]) -> [f64; 6] {
    let mut acc = 0.0;
    let mut out = [0.0; 6];
    for (o, p) in out.iter_mut().zip(row) {
        acc += p;
        *o = acc;
    }
    out
}

fn pick(cum: &[f64; 6], u: f64) -> Role {
    // Rounding can leave the last bucket short of 1; fall back to the last
    // role with positive mass.
    for (i, &c) in cum.iter().enumerate() {
        if u < c {
            return Role::ALL[i];
        }
    }
    let last = (0..6)
        .rev()
        .find(|&i| cum[i] > if i == 0 { 0.0 } else { cum[i - 1] })
        .unwrap_or(2);
    Role::ALL[last]
}

impl Grid {
    pub fn side(&self) -> usize {
        self.n
    }

    pub fn cells(&self) -> &[Cell] {
        &self.cells
    }

    pub fn cell(&self, row: usize, col: usize) -> &Cell {
        &self.cells[row * self.n + col]
    }

    pub fn coords(&self, index: usize) -> (usize, usize) {
        (index / self.n, index % self.n)
    }

    /// Builds a grid from explicit cells, e.g. a hand-made fixture.
    /// Cells should already satisfy the link invariants.
    pub fn from_cells(n: usize, cells: Vec<Cell>, seed: u64) -> Self {
        assert_eq!(cells.len(), n * n, "expected {} cells", n * n);
        Self {
            n,
            cells,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn count(&self, role: Role) -> usize {
        self.cells.iter().filter(|c| c.role == role).count()
    }

    /// One byte per cell: role index in [`Role::ALL`] order, with bit 3 set
    /// when the cell is linked.
    pub fn role_codes(&self) -> Vec<u8> {
        self.cells
            .iter()
            .map(|c| c.role.index() as u8 | if c.is_linked() { 8 } else { 0 })
            .collect()
    }

    fn neighbors(&self, index: usize, offsets: &[(isize, isize)], torus: bool, out: &mut Vec<usize>) {
        out.clear();
        let n = self.n as isize;
        let (r, c) = (index as isize / n, index as isize % n);
        for &(dr, dc) in offsets {
            let (mut nr, mut nc) = (r + dr, c + dc);
            if torus {
                nr = nr.rem_euclid(n);
                nc = nc.rem_euclid(n);
            } else if nr < 0 || nr >= n || nc < 0 || nc >= n {
                continue;
            }
            let j = (nr * n + nc) as usize;
            // wrapping on small tori can revisit cells
            if j != index && !out.contains(&j) {
                out.push(j);
            }
        }
    }

    /// Checks the per-state invariants of every cell.
    pub fn check_invariants(&self, params: &SimParams) -> Result<(), String> {
        if self.cells.len() != self.n * self.n {
            return Err(format!("{} cells on a {}x{} grid", self.cells.len(), self.n, self.n));
        }
        for (i, cell) in self.cells.iter().enumerate() {
            if cell.link.is_some() != cell.remaining_work.is_some() {
                return Err(format!("cell {i}: link and remaining_work disagree"));
            }
            if matches!(cell.role, Role::Requester(_)) != cell.request_birth.is_some() {
                return Err(format!("cell {i}: request_birth set on a non-requester or missing"));
            }
            let Some(j) = cell.link else { continue };
            let other = self.cells.get(j).ok_or(format!("cell {i}: link out of range"))?;
            if j == i || other.link != Some(i) {
                return Err(format!("cell {i}: link to {j} is not mutual"));
            }
            if other.remaining_work != cell.remaining_work {
                return Err(format!("cells {i},{j}: linked pair disagrees on work"));
            }
            let work = cell.remaining_work.unwrap_or(0);
            if work > params.workload_max {
                return Err(format!("cell {i}: remaining work {work} above maximum"));
            }
            let ok = match (cell.role, other.role) {
                (Role::Requester(RequestKind::Alarm), p) | (p, Role::Requester(RequestKind::Alarm)) => {
                    p == Role::ProfessionalCaregiver
                }
                (Role::Requester(RequestKind::Normal), p) | (p, Role::Requester(RequestKind::Normal)) => {
                    matches!(p, Role::ProfessionalCaregiver | Role::InformalCaregiver)
                }
                (Role::Requester(RequestKind::Participant), p) => {
                    p == Role::Requester(RequestKind::Participant)
                }
                _ => false,
            };
            if !ok {
                return Err(format!(
                    "cells {i},{j}: {} linked to {}",
                    cell.role.name(),
                    other.role.name()
                ));
            }
        }
        Ok(())
    }
}

/// Draws each cell's role independently from the initial fractions.
pub fn init_grid(params: &SimParams) -> Result<Grid, ParamsError> {
    params.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
    let cum = cumulative(&params.init_fractions.as_array());
    let cells = (0..params.n * params.n)
        .map(|_| {
            let role = pick(&cum, rng.gen::<f64>());
            let mut cell = Cell::with_role(role);
            if role.request_kind().is_some() {
                cell.request_birth = Some(0);
                cell.demand = Some(rng.gen_range(params.workload_min..=params.workload_max));
            }
            cell
        })
        .collect();
    Ok(Grid {
        n: params.n,
        cells,
        rng,
    })
}

/// Advances the grid by one step, returning what happened.
pub fn step(grid: &mut Grid, params: &SimParams, step_index: u64) -> StepEvents {
    let matrix = params.transition.matrix(&params.init_fractions);
    let cumulative_rows: Vec<[f64; 6]> = matrix.iter().map(|row| cumulative(row)).collect();
    step_with(grid, params, &params.offsets(), &cumulative_rows, step_index)
}

fn step_with(
    grid: &mut Grid,
    params: &SimParams,
    offsets: &[(isize, isize)],
    cumulative_rows: &[[f64; 6]],
    step_index: u64,
) -> StepEvents {
    let mut ev = StepEvents::default();
    service_phase(grid, &mut ev);
    matching_phase(grid, params, offsets, step_index, &mut ev);
    churn_phase(grid, cumulative_rows, step_index, &mut ev);
    ev
}

fn service_phase(grid: &mut Grid, ev: &mut StepEvents) {
    for i in 0..grid.cells.len() {
        let Some(j) = grid.cells[i].link else { continue };
        if j < i {
            continue;
        }
        let work = grid.cells[i].remaining_work.expect("linked cell has work") - 1;
        if work > 0 {
            grid.cells[i].remaining_work = Some(work);
            grid.cells[j].remaining_work = Some(work);
            continue;
        }
        ev.completed.push((i, j));
        for k in [i, j] {
            let cell = &mut grid.cells[k];
            cell.link = None;
            cell.remaining_work = None;
            if cell.role.request_kind().is_some() {
                *cell = Cell::with_role(Role::Neutral);
            }
        }
    }
}

fn matching_phase(
    grid: &mut Grid,
    params: &SimParams,
    offsets: &[(isize, isize)],
    step_index: u64,
    ev: &mut StepEvents,
) {
    let mut order: Vec<usize> = (0..grid.cells.len())
        .filter(|&i| !grid.cells[i].is_linked() && grid.cells[i].role.request_kind().is_some())
        .collect();
    if params.scan_order == ScanOrder::Shuffled {
        order.shuffle(&mut grid.rng);
    }

    let mut hood = Vec::with_capacity(offsets.len());
    for i in order {
        let cell = grid.cells[i];
        let Some(kind) = cell.role.request_kind() else { continue };
        if cell.is_linked() {
            // taken as a peer earlier in this scan
            continue;
        }
        grid.neighbors(i, offsets, params.torus, &mut hood);
        let free = |want: Role| {
            hood.iter()
                .copied()
                .find(|&j| grid.cells[j].role == want && !grid.cells[j].is_linked())
        };
        let partner = match kind {
            RequestKind::Alarm => free(Role::ProfessionalCaregiver),
            RequestKind::Normal => {
                free(Role::InformalCaregiver).or_else(|| free(Role::ProfessionalCaregiver))
            }
            RequestKind::Participant => free(Role::Requester(RequestKind::Participant)),
        };
        let Some(j) = partner else { continue };

        let peer = grid.cells[j];
        let work = match cell.demand.or(peer.demand.filter(|_| kind == RequestKind::Participant)) {
            Some(w) => w,
            None => grid.rng.gen_range(params.workload_min..=params.workload_max),
        };
        for (a, b) in [(i, j), (j, i)] {
            let c = &mut grid.cells[a];
            c.link = Some(b);
            c.remaining_work = Some(work);
            c.demand = None;
        }
        ev.linked.push(Link {
            requester: i,
            partner: j,
            kind,
            work,
        });
        for k in [i, j] {
            if let (Some(kind), Some(birth)) = (grid.cells[k].role.request_kind(), grid.cells[k].request_birth) {
                ev.served.push(Served {
                    cell: k,
                    kind,
                    latency: step_index - birth,
                });
            }
        }
    }
}

fn churn_phase(grid: &mut Grid, cumulative_rows: &[[f64; 6]], step_index: u64, ev: &mut StepEvents) {
    for i in 0..grid.cells.len() {
        if grid.cells[i].is_linked() {
            continue;
        }
        let old = grid.cells[i].role;
        let new = pick(&cumulative_rows[old.index()], grid.rng.gen::<f64>());
        if new == old {
            continue;
        }
        ev.churned.push(i);
        if let Some(kind) = old.request_kind() {
            ev.failed.push((i, kind));
        }
        let mut cell = Cell::with_role(new);
        if let Some(kind) = new.request_kind() {
            cell.request_birth = Some(step_index + 1);
            ev.born.push((i, kind));
        }
        grid.cells[i] = cell;
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct KindCounts {
    pub created: u64,
    pub served: u64,
    pub timely: u64,
    pub failed: u64,
    pub open: u64,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PerKind {
    pub alarm: KindCounts,
    pub normal: KindCounts,
    pub participant: KindCounts,
}

impl PerKind {
    fn get_mut(&mut self, kind: RequestKind) -> &mut KindCounts {
        match kind {
            RequestKind::Alarm => &mut self.alarm,
            RequestKind::Normal => &mut self.normal,
            RequestKind::Participant => &mut self.participant,
        }
    }
}

/// One row of the per-step CSV, taken after the step finished.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    pub step: u64,
    pub open_requests: u64,
    pub served_cum: u64,
    pub failed_cum: u64,
    pub mean_latency_cum: Option<f64>,
    pub satisfaction_cum: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub n: usize,
    pub steps: u64,
    pub seed: u64,
    pub total_requests: u64,
    pub served: u64,
    pub timely: u64,
    pub failed: u64,
    /// Requests still waiting when the run ended; not failures.
    pub open: u64,
    /// Timely-served requests over all requests; absent when there were none.
    pub satisfaction_rate: Option<f64>,
    /// Mean link latency over served requests.
    pub mean_latency: Option<f64>,
    pub failure_rate: Option<f64>,
    pub per_kind: PerKind,
    pub series: Vec<StepRecord>,
}

pub const SERIES_CSV_HEADER: &str =
    "step,open_requests,served_cum,failed_cum,mean_latency_cum,satisfaction_cum";

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

impl MetricsReport {
    /// Per-step series as CSV; undefined values are left empty.
    pub fn series_csv(&self) -> String {
        let mut out = String::from(SERIES_CSV_HEADER);
        out.push('\n');
        let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
        for r in &self.series {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.step,
                r.open_requests,
                r.served_cum,
                r.failed_cum,
                opt(r.mean_latency_cum),
                opt(r.satisfaction_cum)
            );
        }
        out
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }

    pub fn summary(&self) -> String {
        let fmt = |v: Option<f64>| v.map(|x| format!("{x:.4}")).unwrap_or_else(|| "n/a".into());
        format!(
            "n={} steps={} seed={} requests={} served={} failed={} open={} satisfaction={} latency={} failure={}",
            self.n,
            self.steps,
            self.seed,
            self.total_requests,
            self.served,
            self.failed,
            self.open,
            fmt(self.satisfaction_rate),
            fmt(self.mean_latency),
            fmt(self.failure_rate)
        )
    }
}

/// Step-by-step driver that accumulates metrics as it goes.
#[derive(Debug, Clone)]
pub struct Simulation {
    params: SimParams,
    grid: Grid,
    offsets: Vec<(isize, isize)>,
    cumulative_rows: Vec<[f64; 6]>,
    step_index: u64,
    per_kind: PerKind,
    latency_sum: u64,
    series: Vec<StepRecord>,
}

impl Simulation {
    pub fn new(params: SimParams) -> Result<Self, ParamsError> {
        let grid = init_grid(&params)?;
        Ok(Self::with_grid(params, grid))
    }

    /// Starts from a prepared grid. Requesters already on it count as
    /// created requests.
    pub fn with_grid(params: SimParams, grid: Grid) -> Self {
        let matrix = params.transition.matrix(&params.init_fractions);
        let mut per_kind = PerKind::default();
        for cell in grid.cells() {
            if let Some(kind) = cell.role.request_kind() {
                per_kind.get_mut(kind).created += 1;
            }
        }
        Self {
            offsets: params.offsets(),
            cumulative_rows: matrix.iter().map(|row| cumulative(row)).collect(),
            params,
            grid,
            step_index: 0,
            per_kind,
            latency_sum: 0,
            series: Vec::new(),
        }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn params(&self) -> &SimParams {
        &self.params
    }

    pub fn steps_done(&self) -> u64 {
        self.step_index
    }

    pub fn step(&mut self) -> StepEvents {
        let ev = step_with(
            &mut self.grid,
            &self.params,
            &self.offsets,
            &self.cumulative_rows,
            self.step_index,
        );
        for s in &ev.served {
            let k = self.per_kind.get_mut(s.kind);
            k.served += 1;
            if s.latency <= self.params.timely_window {
                k.timely += 1;
            }
            self.latency_sum += s.latency;
        }
        for &(_, kind) in &ev.failed {
            self.per_kind.get_mut(kind).failed += 1;
        }
        for &(_, kind) in &ev.born {
            self.per_kind.get_mut(kind).created += 1;
        }
        let (total, served, timely, failed) = self.totals();
        self.series.push(StepRecord {
            step: self.step_index,
            open_requests: total - served - failed,
            served_cum: served,
            failed_cum: failed,
            mean_latency_cum: ratio(self.latency_sum, served),
            satisfaction_cum: ratio(timely, total),
        });
        self.step_index += 1;
        ev
    }

    fn totals(&self) -> (u64, u64, u64, u64) {
        let k = [self.per_kind.alarm, self.per_kind.normal, self.per_kind.participant];
        (
            k.iter().map(|c| c.created).sum(),
            k.iter().map(|c| c.served).sum(),
            k.iter().map(|c| c.timely).sum(),
            k.iter().map(|c| c.failed).sum(),
        )
    }

    pub fn report(&self) -> MetricsReport {
        let (total, served, timely, failed) = self.totals();
        let mut per_kind = self.per_kind;
        for kind in RequestKind::ALL {
            let k = per_kind.get_mut(kind);
            k.open = k.created - k.served - k.failed;
        }
        MetricsReport {
            n: self.params.n,
            steps: self.step_index,
            seed: self.params.seed,
            total_requests: total,
            served,
            timely,
            failed,
            open: total - served - failed,
            satisfaction_rate: ratio(timely, total),
            mean_latency: ratio(self.latency_sum, served),
            failure_rate: ratio(failed, total),
            per_kind,
            series: self.series.clone(),
        }
    }
}

/// Runs `max_steps` steps from a fresh grid.
pub fn run(params: &SimParams) -> Result<MetricsReport, ParamsError> {
    let mut sim = Simulation::new(params.clone())?;
    for _ in 0..params.max_steps {
        sim.step();
    }
    Ok(sim.report())
}
