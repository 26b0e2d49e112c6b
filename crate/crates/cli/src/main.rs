use std::path::{Path, PathBuf};
use std::time::Instant;

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand};
use untangle_core::bench::{render_report, run_benchmark};
use untangle_core::diagram::{knot_template, KnotSpec};
use untangle_core::executor::{run_trial_traced, Policy, SimConfig};
use untangle_core::loki::{export_dataset, CropParams};
use untangle_core::percept::frame_svg;

#[derive(Parser)]
#[command(name = "untangle-sim", version, about = "Seeded cable untangling simulator")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Runs a benchmark campaign and writes summary.csv, trials.jsonl and frames.
    Run {
        /// Tier list: "1..5", "2-4" or "1,3,5".
        #[arg(long, default_value = "1..5")]
        tiers: String,
        #[arg(long, default_value = "H,HL,HS,HLS", value_delimiter = ',')]
        policies: Vec<Policy>,
        #[arg(long, default_value_t = 100)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// SimConfig as JSON; missing fields take their defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Noiseless perception and dynamics (ignores --config).
        #[arg(long)]
        oracle: bool,
        #[arg(long, default_value = "out")]
        out: PathBuf,
        /// Trials per (tier, policy) cell to render as SVG frame sequences.
        #[arg(long, default_value_t = 1)]
        frame_trials: usize,
    },
    /// Writes synthetic LOKI crops with their labels.
    GenCrops {
        #[arg(long, default_value_t = 1000)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "crops")]
        out: PathBuf,
        /// CropParams as JSON.
        #[arg(long)]
        params: Option<PathBuf>,
    },
    /// Runs one trial on a template and writes its action log.
    Rollout {
        /// Template name, e.g. overhand or dense_two_overhand.
        #[arg(long, default_value = "overhand")]
        template: KnotSpec,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value = "HLS")]
        policy: Policy,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        oracle: bool,
        /// Also write one SVG per state.
        #[arg(long)]
        frames: bool,
        #[arg(long, default_value = "rollout")]
        out: PathBuf,
    },
}

fn parse_tiers(s: &str) -> Result<Vec<u8>> {
    let range = s.split_once("..").or_else(|| s.split_once('-'));
    let tiers: Vec<u8> = match range {
        Some((a, b)) => {
            let (a, b): (u8, u8) = (a.trim().parse()?, b.trim().trim_start_matches('=').parse()?);
            (a..=b).collect()
        }
        None => s.split(',').map(|t| t.trim().parse()).collect::<Result<_, _>>()?,
    };
    if tiers.is_empty() || tiers.iter().any(|t| !(1..=5).contains(t)) {
        bail!("tiers must lie in 1..5, got {s:?}");
    }
    Ok(tiers)
}

fn load_config(path: Option<&Path>, oracle: bool) -> Result<SimConfig> {
    if oracle {
        return Ok(SimConfig::oracle());
    }
    let cfg = match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?
        }
        None => SimConfig::default(),
    };
    cfg.validate().map_err(anyhow::Error::msg)?;
    Ok(cfg)
}

fn main() -> Result<()> {
    match Cli::parse().cmd {
        Cmd::Run { tiers, policies, trials, seed, config, oracle, out, frame_trials } => {
            let tiers = parse_tiers(&tiers)?;
            let cfg = load_config(config.as_deref(), oracle)?;
            let t0 = Instant::now();
            let campaign = run_benchmark(&tiers, &policies, trials, &cfg, seed)?;
            render_report(&campaign, &out, &cfg, seed, frame_trials.min(trials))?;
            for r in &campaign.table.rows {
                println!(
                    "tier {} {:<6} {:>4}/{:<4} A{} B{} C{} D{} E{}",
                    r.tier, r.policy, r.successes, r.trials, r.fail_a, r.fail_b, r.fail_c, r.fail_d, r.fail_e
                );
            }
            eprintln!("{} trials in {:.1?}, results in {}", campaign.trials.len(), t0.elapsed(), out.display());
        }
        Cmd::GenCrops { n, seed, out, params } => {
            let params: CropParams = match params {
                Some(p) => serde_json::from_str(&std::fs::read_to_string(&p)?)?,
                None => CropParams::default(),
            };
            export_dataset(&out, n, seed, &params)?;
            eprintln!("{n} crops in {}", out.display());
        }
        Cmd::Rollout { template, seed, policy, config, oracle, frames, out } => {
            let cfg = load_config(config.as_deref(), oracle)?;
            let diagram = knot_template(template, seed, cfg.dynamics.cable_width)?;
            std::fs::create_dir_all(&out)?;
            let (result, trace) = run_trial_traced(&diagram, policy, &cfg, seed, frames);
            std::fs::write(out.join("actions.jsonl"), result.log_jsonl())?;
            std::fs::write(out.join("result.json"), serde_json::to_string_pretty(&result)? + "\n")?;
            if frames {
                let dir = out.join("frames");
                std::fs::create_dir_all(&dir)?;
                for (k, f) in trace.iter().enumerate() {
                    std::fs::write(dir.join(format!("frame_{k:03}.svg")), frame_svg(&f.diagram, cfg.dynamics.cable_width, &f.overlay))?;
                }
            }
            println!(
                "{} {}: success={} crossings {} -> {} in {} actions",
                template, policy, result.success, result.initial_crossings, result.final_crossings, result.total_actions
            );
        }
    }
    Ok(())
}
