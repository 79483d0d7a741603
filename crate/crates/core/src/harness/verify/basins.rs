//! Basin selection on the three-basin landscape: how often each method ends
//! in the wide-deep basin from uniformly drawn starting points.

use std::collections::BTreeMap;

use rand::Rng;
use serde::Serialize;

use crate::dist_runtime::{run_distributed, DistConfig};
use crate::dual_loop::{run_chain_observed, EtaDecay, RhoMode, ScheduleSpec};
use crate::error::Result;
use crate::landscapes::{basin_of, make_basin_landscape, BasinLabel, BasinLandscape, Objective, BASIN_DOMAIN};
use crate::param::ParamVec;
use crate::rng::SeedStreams;
use crate::sam_map::SamParams;

use super::{Outcome, VerifyOptions};

/// Wide-deep hit counts out of 200 from the first verified run at the
/// default seed, kept as regression values.
pub const FROZEN_WIDE_DEEP_HITS: [(&str, usize); 3] = [("esgd", 79), ("sam", 79), ("lsam", 133)];

/// The single chains use a constant step at the perturbed-chain cap
/// `1/(4(L+lambda))` unless `chain_eta` is set: the decaying schedule with
/// the sharp basin's curvature would barely move the iterates.
#[derive(Debug, Clone, Serialize)]
pub struct BasinExperiment {
    pub landscape_seed: i64,
    /// Single-chain step and horizon for ESGD and SAM.
    pub chain_eta: Option<f64>,
    pub chain_steps: u64,
    pub esgd_lambda: f64,
    pub esgd_alpha: f64,
    pub sam_rho: f64,
    pub lsam_workers: usize,
    pub lsam_tau: usize,
    pub lsam_eta: f64,
    pub lsam_lambda0: f64,
    pub lsam_rho: f64,
    pub lsam_temperature: f64,
    pub lsam_eta_outer: f64,
    pub lsam_outer_steps: u64,
}

impl Default for BasinExperiment {
    fn default() -> Self {
        BasinExperiment {
            landscape_seed: 0,
            chain_eta: None,
            chain_steps: 40_000,
            esgd_lambda: 0.1,
            esgd_alpha: 0.1,
            sam_rho: 0.5,
            lsam_workers: 4,
            lsam_tau: 16,
            lsam_eta: 0.005,
            lsam_lambda0: 0.02,
            lsam_rho: 0.5,
            lsam_temperature: 1.0,
            lsam_eta_outer: super::protocol::DESK_ETA_OUTER,
            lsam_outer_steps: 300,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MethodOutcome {
    pub method: &'static str,
    pub runs: usize,
    pub counts: BTreeMap<String, usize>,
    pub wide_deep_fraction: f64,
}

impl MethodOutcome {
    fn new(method: &'static str, labels: &[Option<BasinLabel>]) -> Self {
        let mut counts = BTreeMap::new();
        for l in labels {
            let key = l.map(|b| b.to_string()).unwrap_or_else(|| "unclassified".into());
            *counts.entry(key).or_insert(0) += 1;
        }
        let wide = labels.iter().filter(|l| **l == Some(BasinLabel::WideDeep)).count();
        MethodOutcome {
            method,
            runs: labels.len(),
            counts,
            wide_deep_fraction: wide as f64 / labels.len().max(1) as f64,
        }
    }

    pub fn wide_deep_hits(&self) -> usize {
        self.counts.get(&BasinLabel::WideDeep.to_string()).copied().unwrap_or(0)
    }
}

pub fn uniform_inits(count: usize, seed: u64) -> Vec<ParamVec> {
    let mut rng = SeedStreams::new(seed).rng("basin-inits", 0);
    let (lo, hi) = BASIN_DOMAIN;
    (0..count)
        .map(|_| ParamVec::from([rng.random_range(lo..hi), rng.random_range(lo..hi)]))
        .collect()
}

impl BasinExperiment {
    pub fn chain_step(&self, land: &BasinLandscape) -> f64 {
        let l = land.smoothness().expect("basin landscape has an estimated L");
        self.chain_eta.unwrap_or(1.0 / (4.0 * (l + self.esgd_lambda)))
    }
}

fn chain_end(
    land: &BasinLandscape,
    sched: &ScheduleSpec,
    sam: &SamParams,
    x0: &ParamVec,
    steps: u64,
    seed: u64,
) -> Result<ParamVec> {
    let (_, last) = run_chain_observed(land, sched, sam, x0.clone(), x0.clone(), steps, seed, |_, _| {})?;
    Ok(last.y)
}

/// Noise-free ESGD: coupled chain, plain gradients.
pub fn esgd_endpoint(exp: &BasinExperiment, land: &BasinLandscape, x0: &ParamVec, seed: u64) -> Result<ParamVec> {
    let mut sched = ScheduleSpec::esgd(exp.chain_step(land), exp.esgd_lambda, exp.esgd_alpha);
    sched.eta_decay = EtaDecay::Constant;
    chain_end(land, &sched, &SamParams::off(2), x0, exp.chain_steps, seed)
}

/// Single-chain SAM: no coupling, so the anchor follows the iterate.
pub fn sam_endpoint(exp: &BasinExperiment, land: &BasinLandscape, x0: &ParamVec, seed: u64) -> Result<ParamVec> {
    let mut sched = ScheduleSpec::esgd(exp.chain_step(land), 0.0, 1.0).with_rho(RhoMode::Constant, exp.sam_rho);
    sched.eta_decay = EtaDecay::Constant;
    let sam = SamParams::with_default_gamma(exp.sam_rho, 2)?;
    chain_end(land, &sched, &sam, x0, exp.chain_steps, seed)
}

/// LSAM: sampling workers started at `x0` around a center at `x0`.
pub fn lsam_endpoint(exp: &BasinExperiment, land: &BasinLandscape, x0: &ParamVec, seed: u64) -> Result<ParamVec> {
    let mut cfg = DistConfig::new(
        exp.lsam_workers,
        exp.lsam_tau,
        exp.lsam_eta,
        exp.lsam_lambda0,
        SamParams::with_default_gamma(exp.lsam_rho, 2)?,
    );
    cfg.temperature = exp.lsam_temperature;
    cfg.eta_outer = exp.lsam_eta_outer;
    cfg.record_metrics = false;
    let x0s = vec![x0.clone(); exp.lsam_workers];
    Ok(run_distributed(land, &cfg, &x0s, x0, exp.lsam_outer_steps, seed)?
        .center
        .y)
}

#[derive(Debug, Clone, Serialize)]
pub struct BasinTable {
    pub experiment: BasinExperiment,
    pub inits: usize,
    pub methods: Vec<MethodOutcome>,
}

impl BasinTable {
    pub fn method(&self, name: &str) -> Option<&MethodOutcome> {
        self.methods.iter().find(|m| m.method == name)
    }
}

pub fn basin_table(exp: &BasinExperiment, inits: usize, seed: u64) -> Result<BasinTable> {
    let land = make_basin_landscape(exp.landscape_seed);
    let starts = uniform_inits(inits, seed);
    let streams = SeedStreams::new(seed);
    let mut labels: [Vec<Option<BasinLabel>>; 3] = Default::default();
    for (i, x0) in starts.iter().enumerate() {
        let s = streams.seed("basin-run", i as u64);
        labels[0].push(basin_of(&land, &esgd_endpoint(exp, &land, x0, s)?));
        labels[1].push(basin_of(&land, &sam_endpoint(exp, &land, x0, s)?));
        labels[2].push(basin_of(&land, &lsam_endpoint(exp, &land, x0, s)?));
    }
    let [esgd, sam, lsam] = labels;
    Ok(BasinTable {
        experiment: exp.clone(),
        inits,
        methods: vec![
            MethodOutcome::new("esgd", &esgd),
            MethodOutcome::new("sam", &sam),
            MethodOutcome::new("lsam", &lsam),
        ],
    })
}

pub fn basin_criterion(opts: &VerifyOptions) -> Result<Outcome> {
    let table = basin_table(&BasinExperiment::default(), opts.basin_inits, opts.seed)?;
    let frac = |m: &str| table.method(m).map(|o| o.wide_deep_fraction).unwrap_or(f64::NAN);
    let (e, s, l) = (frac("esgd"), frac("sam"), frac("lsam"));
    let rows: Vec<String> = table
        .methods
        .iter()
        .map(|m| {
            let c: Vec<String> = m.counts.iter().map(|(k, v)| format!("{k}={v}")).collect();
            format!("{} [{}]", m.method, c.join(" "))
        })
        .collect();
    let frozen = matches_frozen(&table, opts);
    let frozen_note = match frozen {
        Some(m) => format!("; frozen counts match = {m}"),
        None => String::new(),
    };
    Ok(Outcome {
        name: "basin-selection",
        passed: l > e && l > s,
        detail: format!(
            "wide-deep lsam {l:.3} > esgd {e:.3}, sam {s:.3}; {}{frozen_note}",
            rows.join("; ")
        ),
        measurements: serde_json::json!({ "table": table, "frozen_match": frozen }),
    })
}

/// Compare wide-deep hits against [`FROZEN_WIDE_DEEP_HITS`]; `None` unless the
/// run used the default seed and 200 inits.
pub fn matches_frozen(table: &BasinTable, opts: &VerifyOptions) -> Option<bool> {
    let d = VerifyOptions::default();
    if opts.seed != d.seed || table.inits != 200 {
        return None;
    }
    Some(
        FROZEN_WIDE_DEEP_HITS
            .iter()
            .all(|(m, n)| table.method(m).map(MethodOutcome::wide_deep_hits) == Some(*n)),
    )
}
