//! Tier definitions, seeded trial campaigns and Table-I-shaped summaries.

use std::collections::BTreeSet;
use std::path::Path;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::bruce::action_bound;
use crate::diagram::{knot_template, CableDiagram, KnotSpec, TemplateError, TemplateName};
use crate::executor::{run_trial, run_trial_traced, FailureMode, Policy, SimConfig, TrialResult};
use crate::percept::frame_svg;

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("no tier {0}")]
    UnknownTier(u8),
    #[error("tier {tier}: {reason}")]
    InvalidTier { tier: u8, reason: String },
    #[error(transparent)]
    Template(#[from] TemplateError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TierSpec {
    pub tier: u8,
    pub templates: Vec<TemplateName>,
    pub dense: bool,
    pub seen_in_training: bool,
}

fn base_templates(tier: u8) -> Option<Vec<TemplateName>> {
    use TemplateName::*;
    Some(match tier {
        1 => vec![Overhand, FigureEight],
        2 | 3 => vec![TwoOverhand, OverhandPlusFigureEight],
        4 => vec![DoubleOverhand, Square],
        5 => vec![Stevedore, Bowline, AshleyStopper, Granny, HeavingLine],
        _ => return None,
    })
}

fn is_nonplanar(name: TemplateName) -> bool {
    knot_template(KnotSpec::new(name), 0, 6.0).is_ok_and(|d| d.crossings().iter().any(|c| c.is_triple()))
}

impl TierSpec {
    /// Checks the structural rules: tiers 4 and 5 hold a non-planar knot, and
    /// tier 5 shares no template with the lower tiers.
    pub fn new(tier: u8, templates: Vec<TemplateName>, dense: bool, seen_in_training: bool) -> Result<TierSpec, BenchError> {
        let bad = |reason: &str| BenchError::InvalidTier { tier, reason: reason.to_string() };
        if !(1..=5).contains(&tier) {
            return Err(BenchError::UnknownTier(tier));
        }
        if templates.is_empty() {
            return Err(bad("empty template set"));
        }
        if tier >= 4 && !templates.iter().any(|&t| is_nonplanar(t)) {
            return Err(bad("needs a non-planar template"));
        }
        if tier == 5 {
            let lower: BTreeSet<_> = (1..=4).flat_map(|t| base_templates(t).unwrap()).collect();
            if templates.iter().any(|t| lower.contains(t)) {
                return Err(bad("shares a template with tiers 1-4"));
            }
        }
        Ok(TierSpec { tier, templates, dense, seen_in_training })
    }

    pub fn standard(tier: u8) -> Result<TierSpec, BenchError> {
        let templates = base_templates(tier).ok_or(BenchError::UnknownTier(tier))?;
        TierSpec::new(tier, templates, tier == 3, tier != 5)
    }

    pub fn knot(&self, i: usize) -> KnotSpec {
        KnotSpec { name: self.templates[i % self.templates.len()], dense: self.dense }
    }
}

/// Seed for trial `i` of `tier`; shared by every policy so they face the same
/// cables and the same noise draws.
pub fn trial_seed(seed: u64, tier: u8, i: usize) -> u64 {
    let mut x = seed ^ (tier as u64).wrapping_mul(0xa076_1d64_78bd_642f) ^ (i as u64).wrapping_mul(0xe703_7ed1_a0b4_28db);
    // splitmix64 finaliser
    x = (x ^ (x >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    x = (x ^ (x >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    x ^ (x >> 31)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrialSetup {
    pub index: usize,
    pub knot: KnotSpec,
    pub seed: u64,
    pub diagram: CableDiagram,
}

/// `n` initial diagrams, round-robin over the tier's templates.
pub fn tier_configs(tier: u8, n: usize, seed: u64, cable_width: f64) -> Result<Vec<TrialSetup>, BenchError> {
    let spec = TierSpec::standard(tier)?;
    (0..n)
        .map(|i| {
            let knot = spec.knot(i);
            let s = trial_seed(seed, tier, i);
            Ok(TrialSetup { index: i, knot, seed: s, diagram: knot_template(knot, s, cable_width)? })
        })
        .collect()
}

/// One H+L+S run under the oracle configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleCase {
    pub knot: KnotSpec,
    pub seed: u64,
    pub initial: CableDiagram,
    pub result: TrialResult,
}

impl OracleCase {
    pub fn bound(&self) -> usize {
        action_bound(self.initial.crossing_count())
    }

    pub fn untangled_within_bound(&self) -> bool {
        self.result.success && self.result.total_actions <= self.bound()
    }
}

/// Every template variant the five tiers use, once each.
pub fn tier_knots() -> Vec<KnotSpec> {
    let mut out: Vec<KnotSpec> = Vec::new();
    for tier in 1..=5 {
        let spec = TierSpec::standard(tier).expect("standard tiers are valid");
        for &name in &spec.templates {
            let k = KnotSpec { name, dense: spec.dense };
            if !out.contains(&k) {
                out.push(k);
            }
        }
    }
    out
}

/// Every tier template variant on seeds `0..seeds`, run as H+L+S under `cfg`.
pub fn oracle_suite(seeds: u64, cfg: &SimConfig) -> Result<Vec<OracleCase>, BenchError> {
    let w = cfg.dynamics.cable_width;
    let mut jobs = Vec::new();
    for knot in tier_knots() {
        for seed in 0..seeds {
            jobs.push((knot, seed, knot_template(knot, seed, w)?));
        }
    }
    Ok(jobs
        .into_par_iter()
        .map(|(knot, seed, initial)| {
            let result = run_trial(&initial, Policy::HLS, cfg, seed);
            OracleCase { knot, seed, initial, result }
        })
        .collect())
}

/// Oracle configuration with one failure forced: every reference comparison
/// inverted (C), every Node Deletion wedging with no recovery (B), or every
/// Node Deletion springing the cable to the border with a short reach (E).
/// E needs Re-Posing, so it only shows with S policies.
pub fn adversarial_config(mode: FailureMode) -> Option<SimConfig> {
    let mut cfg = SimConfig::oracle();
    match mode {
        FailureMode::C => cfg.forced_flips.reference = true,
        FailureMode::B => {
            cfg.dynamics.wedge_base_prob = 1.0;
            cfg.dynamics.recovery_success_prob = 0.0;
        }
        FailureMode::E => {
            cfg.dynamics.springout_prob = 1.0;
            cfg.dynamics.springout_range = (600.0, 600.0);
            cfg.dynamics.reach_radius = 60.0;
        }
        FailureMode::A | FailureMode::D => return None,
    }
    Some(cfg)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialRecord {
    pub tier: u8,
    pub index: usize,
    pub template: String,
    pub result: TrialResult,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub tier: u8,
    pub policy: String,
    pub successes: usize,
    pub trials: usize,
    pub success_rate: f64,
    pub median_node_deletions: Option<f64>,
    pub median_recovery_actions: Option<f64>,
    pub median_total_actions: Option<f64>,
    pub fail_a: usize,
    pub fail_b: usize,
    pub fail_c: usize,
    pub fail_d: usize,
    pub fail_e: usize,
}

impl SummaryRow {
    pub fn failures(&self) -> [usize; 5] {
        [self.fail_a, self.fail_b, self.fail_c, self.fail_d, self.fail_e]
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct SummaryTable {
    pub rows: Vec<SummaryRow>,
}

impl SummaryTable {
    pub fn row(&self, tier: u8, policy: Policy) -> Option<&SummaryRow> {
        self.rows.iter().find(|r| r.tier == tier && r.policy == policy.name())
    }

    pub fn to_csv(&self) -> Result<String, BenchError> {
        let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(Vec::new());
        w.write_record([
            "tier",
            "policy",
            "successes",
            "trials",
            "success_rate",
            "median_node_deletions",
            "median_recovery_actions",
            "median_total_actions",
            "fail_a",
            "fail_b",
            "fail_c",
            "fail_d",
            "fail_e",
        ])?;
        for r in &self.rows {
            w.serialize(r)?;
        }
        let bytes = w.into_inner().map_err(|e| e.into_error())?;
        Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
    }
}

pub fn median(values: &mut [usize]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    values.sort_unstable();
    let n = values.len();
    Some(if n % 2 == 1 { values[n / 2] as f64 } else { (values[n / 2 - 1] + values[n / 2]) as f64 / 2.0 })
}

/// Deterministic fold of trial results for one (tier, policy) cell.
pub fn summarize(tier: u8, policy: Policy, results: &[&TrialResult]) -> SummaryRow {
    let ok: Vec<_> = results.iter().filter(|r| r.success).collect();
    let mut fails = [0usize; 5];
    for r in results {
        if let Some(m) = r.failure_mode {
            fails[FailureMode::ALL.iter().position(|x| *x == m).unwrap()] += 1;
        }
    }
    let med = |f: fn(&TrialResult) -> usize| median(&mut ok.iter().map(|r| f(r)).collect::<Vec<_>>());
    SummaryRow {
        tier,
        policy: policy.name().to_string(),
        successes: ok.len(),
        trials: results.len(),
        success_rate: if results.is_empty() { 0.0 } else { ok.len() as f64 / results.len() as f64 },
        median_node_deletions: med(|r| r.node_deletions),
        median_recovery_actions: med(|r| r.recovery_actions),
        median_total_actions: med(|r| r.total_actions),
        fail_a: fails[0],
        fail_b: fails[1],
        fail_c: fails[2],
        fail_d: fails[3],
        fail_e: fails[4],
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Campaign {
    pub table: SummaryTable,
    pub trials: Vec<TrialRecord>,
}

/// Runs every (tier, policy, trial). Trials run in parallel; results are
/// gathered in (tier, policy, index) order.
pub fn run_benchmark(tiers: &[u8], policies: &[Policy], n_trials: usize, cfg: &SimConfig, seed: u64) -> Result<Campaign, BenchError> {
    let mut setups = Vec::new();
    for &tier in tiers {
        setups.push((tier, tier_configs(tier, n_trials, seed, cfg.dynamics.cable_width)?));
    }
    let jobs: Vec<(u8, Policy, &TrialSetup)> = setups
        .iter()
        .flat_map(|(tier, ss)| policies.iter().flat_map(move |&p| ss.iter().map(move |s| (*tier, p, s))))
        .collect();
    let trials: Vec<TrialRecord> = jobs
        .par_iter()
        .map(|&(tier, policy, s)| TrialRecord {
            tier,
            index: s.index,
            template: s.knot.to_string(),
            result: run_trial(&s.diagram, policy, cfg, s.seed),
        })
        .collect();
    let mut rows = Vec::new();
    for &tier in tiers {
        for &policy in policies {
            let cell: Vec<&TrialResult> =
                trials.iter().filter(|t| t.tier == tier && t.result.policy == policy).map(|t| &t.result).collect();
            rows.push(summarize(tier, policy, &cell));
        }
    }
    Ok(Campaign { table: SummaryTable { rows }, trials })
}

/// Writes the SVG frames of one trial, one file per state.
pub fn write_frames(dir: &Path, prefix: &str, setup: &TrialSetup, policy: Policy, cfg: &SimConfig) -> Result<usize, BenchError> {
    std::fs::create_dir_all(dir)?;
    let (_, frames) = run_trial_traced(&setup.diagram, policy, cfg, setup.seed, true);
    for (k, f) in frames.iter().enumerate() {
        std::fs::write(dir.join(format!("{prefix}_{k:03}.svg")), frame_svg(&f.diagram, cfg.dynamics.cable_width, &f.overlay))?;
    }
    Ok(frames.len())
}

/// `summary.csv`, `summary.json` and `trials.jsonl` under `out`, plus frames for
/// the first `frame_trials` trials of every (tier, policy) cell.
pub fn render_report(campaign: &Campaign, out: &Path, cfg: &SimConfig, seed: u64, frame_trials: usize) -> Result<(), BenchError> {
    std::fs::create_dir_all(out)?;
    std::fs::write(out.join("summary.csv"), campaign.table.to_csv()?)?;
    std::fs::write(out.join("summary.json"), serde_json::to_string_pretty(&campaign.table)? + "\n")?;
    let mut lines = String::new();
    for t in &campaign.trials {
        lines.push_str(&serde_json::to_string(t)?);
        lines.push('\n');
    }
    std::fs::write(out.join("trials.jsonl"), lines)?;
    if frame_trials > 0 {
        let tiers: BTreeSet<u8> = campaign.trials.iter().map(|t| t.tier).collect();
        let policies: BTreeSet<Policy> = campaign.trials.iter().map(|t| t.result.policy).collect();
        for tier in tiers {
            let setups = tier_configs(tier, frame_trials, seed, cfg.dynamics.cable_width)?;
            for &policy in &policies {
                for s in &setups {
                    let prefix = format!("t{tier}_{}_{:03}", policy.name().replace('+', ""), s.index);
                    write_frames(&out.join("frames"), &prefix, s, policy, cfg)?;
                }
            }
        }
    }
    Ok(())
}
