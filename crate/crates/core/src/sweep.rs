//! Replicated parameter sweeps over the simulator.
//!
//! A [`SweepSpec`] names one axis of [`SimParams`], the values to try and how
//! many seeded replicates to run per value. Replicates are independent, so
//! they run in parallel when the `parallel` feature is on; results are always
//! reduced in spec order.

use std::fmt::{self, Write as _};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::SweepError;
use crate::sim::{self, MetricsReport, Role, RoleFractions, SimParams, Transition};

/// Which parameter a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Absolute initial fraction of a role; the neutral fraction absorbs the
    /// difference.
    Fraction(Role),
    /// Fraction of the non-requester population given to a provider role;
    /// the neutral fraction absorbs the rest of that population.
    ShareOfNonRequesters(Role),
    /// Contact radius of the neighborhood.
    Radius,
}

impl fmt::Display for Axis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Axis::Fraction(r) => f.write_str(r.name()),
            Axis::ShareOfNonRequesters(r) => write!(f, "{}_share", r.name()),
            Axis::Radius => f.write_str("radius"),
        }
    }
}

impl FromStr for Axis {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "radius" {
            return Ok(Axis::Radius);
        }
        let (name, share) = match s.strip_suffix("_share") {
            Some(name) => (name, true),
            None => (s, false),
        };
        let role = Role::from_name(name).ok_or_else(|| format!("unknown sweep axis `{s}`"))?;
        if role == Role::Neutral {
            return Err("the neutral fraction absorbs the others and cannot be swept".into());
        }
        if share {
            if role.request_kind().is_some() {
                return Err(format!("`{s}`: shares apply to provider roles only"));
            }
            Ok(Axis::ShareOfNonRequesters(role))
        } else {
            Ok(Axis::Fraction(role))
        }
    }
}

impl Serialize for Axis {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Axis {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        String::deserialize(deserializer)?
            .parse()
            .map_err(serde::de::Error::custom)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    /// Used to name output files when several specs share one file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    pub base: SimParams,
    pub axis: Axis,
    pub values: Vec<f64>,
    pub replicates: u32,
    pub seed_base: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub axis_value: f64,
    pub satisfaction_mean: Option<f64>,
    pub satisfaction_sd: Option<f64>,
    pub latency_mean: Option<f64>,
    pub latency_sd: Option<f64>,
    pub failure_mean: Option<f64>,
    pub failure_sd: Option<f64>,
    pub replicates: u32,
}

pub const SWEEP_CSV_HEADER: &str =
    "axis_value,satisfaction_mean,satisfaction_sd,latency_mean,latency_sd,failure_mean,failure_sd,replicates";

fn splitmix64(mut x: u64) -> u64 {
    x = x.wrapping_add(0x9e37_79b9_7f4a_7c15);
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

/// Platform-independent hash of an axis value and replicate index.
pub fn stable_hash(value: f64, replicate: u32) -> u64 {
    splitmix64(value.to_bits() ^ splitmix64(u64::from(replicate)))
}

pub fn replicate_seed(seed_base: u64, value: f64, replicate: u32) -> u64 {
    seed_base.wrapping_add(stable_hash(value, replicate))
}

const SLACK: f64 = 1e-12;

impl SweepSpec {
    /// Base parameters with the axis set to `value`.
    pub fn params_for(&self, value: f64) -> Result<SimParams, SweepError> {
        let bad = |reason: String| SweepError::Substitution {
            axis: self.axis.to_string(),
            value,
            reason,
        };
        let mut p = self.base.clone();
        match self.axis {
            Axis::Radius => {
                if value < 1.0 || value.fract() != 0.0 {
                    return Err(bad("radius must be a positive integer".into()));
                }
                p.radius = value as usize;
            }
            Axis::Fraction(role) => {
                if !(0.0..=1.0).contains(&value) {
                    return Err(bad("fractions lie in [0, 1]".into()));
                }
                let mut f = p.init_fractions;
                f.set(role, value);
                p.init_fractions = absorb_into_neutral(f, 1.0).map_err(bad)?;
            }
            Axis::ShareOfNonRequesters(role) => {
                if !(0.0..=1.0).contains(&value) {
                    return Err(bad("shares lie in [0, 1]".into()));
                }
                let mut f = p.init_fractions;
                let population = 1.0 - f.requesters();
                f.set(role, value * population);
                p.init_fractions = absorb_into_neutral(f, 1.0).map_err(bad)?;
            }
        }
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<(), SweepError> {
        if self.replicates == 0 {
            return Err(SweepError::NoReplicates);
        }
        for &v in &self.values {
            self.params_for(v)?;
        }
        Ok(())
    }
}

fn absorb_into_neutral(mut f: RoleFractions, total: f64) -> Result<RoleFractions, String> {
    let others: f64 = Role::ALL
        .into_iter()
        .filter(|&r| r != Role::Neutral)
        .map(|r| f.get(r))
        .sum();
    let neutral = total - others;
    if neutral < -SLACK {
        return Err(format!("other roles already take {others}, leaving no room for neutral cells"));
    }
    f.neutral = neutral.max(0.0);
    Ok(f)
}

fn mean_sd(values: impl Iterator<Item = Option<f64>>) -> (Option<f64>, Option<f64>) {
    let xs: Vec<f64> = values.flatten().collect();
    if xs.is_empty() {
        return (None, None);
    }
    let n = xs.len() as f64;
    let mean = xs.iter().sum::<f64>() / n;
    let sd = if xs.len() < 2 {
        0.0
    } else {
        (xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
    };
    (Some(mean), Some(sd))
}

/// Mean and sample standard deviation over replicate reports. Replicates
/// where a metric is undefined are left out of that metric.
pub fn aggregate(axis_value: f64, reports: &[MetricsReport]) -> SweepRow {
    let (satisfaction_mean, satisfaction_sd) = mean_sd(reports.iter().map(|r| r.satisfaction_rate));
    let (latency_mean, latency_sd) = mean_sd(reports.iter().map(|r| r.mean_latency));
    let (failure_mean, failure_sd) = mean_sd(reports.iter().map(|r| r.failure_rate));
    SweepRow {
        axis_value,
        satisfaction_mean,
        satisfaction_sd,
        latency_mean,
        latency_sd,
        failure_mean,
        failure_sd,
        replicates: reports.len() as u32,
    }
}

/// Every replicate report, grouped by axis value in spec order.
pub fn run_replicates(spec: &SweepSpec) -> Result<Vec<Vec<MetricsReport>>, SweepError> {
    spec.validate()?;
    let mut jobs = Vec::with_capacity(spec.values.len() * spec.replicates as usize);
    for &v in &spec.values {
        let params = spec.params_for(v)?;
        for k in 0..spec.replicates {
            let mut p = params.clone();
            p.seed = replicate_seed(spec.seed_base, v, k);
            jobs.push(p);
        }
    }

    #[cfg(feature = "parallel")]
    let reports: Vec<MetricsReport> = {
        use rayon::prelude::*;
        jobs.par_iter()
            .map(|p| sim::run(p).expect("validated above"))
            .collect()
    };
    #[cfg(not(feature = "parallel"))]
    let reports: Vec<MetricsReport> = jobs
        .iter()
        .map(|p| sim::run(p).expect("validated above"))
        .collect();

    Ok(reports
        .chunks(spec.replicates as usize)
        .map(<[MetricsReport]>::to_vec)
        .collect())
}

pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>, SweepError> {
    let groups = run_replicates(spec)?;
    Ok(spec
        .values
        .iter()
        .zip(&groups)
        .map(|(&v, reports)| aggregate(v, reports))
        .collect())
}

pub fn rows_to_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from(SWEEP_CSV_HEADER);
    out.push('\n');
    let opt = |v: Option<f64>| v.map(|x| x.to_string()).unwrap_or_default();
    for r in rows {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            r.axis_value,
            opt(r.satisfaction_mean),
            opt(r.satisfaction_sd),
            opt(r.latency_mean),
            opt(r.latency_sd),
            opt(r.failure_mean),
            opt(r.failure_sd),
            r.replicates
        );
    }
    out
}

/// `0.05, 0.10, ..., 0.60`, each the nearest double to `i / 20`.
pub fn five_percent_steps() -> Vec<f64> {
    (1..=12).map(|i| f64::from(i) / 20.0).collect()
}

pub const FIG9_CLIENT_FRACTIONS: [f64; 5] = [0.05, 0.10, 0.20, 0.40, 0.60];
pub const DEFAULT_REPLICATES: u32 = 30;

fn fig9_base(client_fraction: f64) -> SimParams {
    let mut p = SimParams::new(
        40,
        RoleFractions {
            professional: 0.02,
            normal: client_fraction,
            neutral: 0.98 - client_fraction,
            ..RoleFractions::default()
        },
    );
    p.max_steps = 500;
    p
}

/// Informal-caregiver sweeps, one per initial client fraction.
pub fn preset_fig9() -> Vec<SweepSpec> {
    FIG9_CLIENT_FRACTIONS
        .iter()
        .map(|&client| SweepSpec {
            label: Some(format!("clients_{:02}", (client * 100.0).round() as u32)),
            base: fig9_base(client),
            axis: Axis::ShareOfNonRequesters(Role::InformalCaregiver),
            values: five_percent_steps(),
            replicates: DEFAULT_REPLICATES,
            seed_base: 9000,
        })
        .collect()
}

/// Redraw rates for the participant sweep: providers and neutral cells as
/// in the default churn, requesters give up four times more slowly.
pub const FIG10_RATES: [f64; 6] = [0.02, 0.02, 0.02, 0.005, 0.005, 0.005];

/// Participant-rate sweep over a community of participants and neutral
/// cells, with a contact radius of 2.
pub fn preset_fig10() -> SweepSpec {
    let mut base = SimParams::new(
        40,
        RoleFractions {
            participant: 0.15,
            neutral: 0.85,
            ..RoleFractions::default()
        },
    );
    base.transition = Transition::PerRole(FIG10_RATES);
    base.radius = 2;
    base.max_steps = 500;
    SweepSpec {
        label: Some("participants".into()),
        base,
        axis: Axis::Fraction(Role::Requester(sim::RequestKind::Participant)),
        values: five_percent_steps(),
        replicates: DEFAULT_REPLICATES,
        seed_base: 10_000,
    }
}
