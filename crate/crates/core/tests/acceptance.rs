//! Acceptance checks, one line per criterion. Exits nonzero if any fails.

use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use untangle_core::bench::{adversarial_config, oracle_suite, run_benchmark, OracleCase};
use untangle_core::diagram::build_graph;
use untangle_core::executor::{run_trial, FailureMode, MoveKind, Policy, SimConfig};
use untangle_core::geom::{axis_angle_dist, point_segment_dist, Point};
use untangle_core::loki::{
    label_for, offset_from_argmax, refine_keypoint, sample, AnalyticEstimator, CropParams, Estimate, Estimator, Heatmap,
    LokiError, CROP_SIZE, HEATMAP_SIGMA,
};
use untangle_core::percept::render::{paint_stroke, RasterImage};
use untangle_core::percept::{Comparator, ForcedFlips, Observation, REFERENCE_ID};
use untangle_core::spiderman::{
    leaving_workspace_condition, rotate_condition, termination_verdict, wedged_condition, GripperPose, ObservationHistory,
};

const CAMPAIGN_SEED: u64 = 2024;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome { pass, detail: detail.into() }
}

fn secs(d: Duration) -> String {
    format!("{:.2}s", d.as_secs_f64())
}

fn ac1(cases: &[OracleCase], elapsed: Duration) -> Outcome {
    let bad: Vec<String> = cases
        .iter()
        .filter(|c| !c.untangled_within_bound())
        .map(|c| format!("{} seed {} ({} actions, bound {})", c.knot, c.seed, c.result.total_actions, c.bound()))
        .collect();
    let fast = elapsed < Duration::from_secs(5);
    let mut detail = format!("{}/{} untangled within 2n+2 actions in {}", cases.len() - bad.len(), cases.len(), secs(elapsed));
    if let Some(first) = bad.first() {
        detail += &format!("; first miss: {first}");
    }
    outcome(bad.is_empty() && fast, detail)
}

fn ac2(cases: &[OracleCase]) -> Outcome {
    let (mut steps, mut violations) = (0, 0);
    for c in cases {
        let g = build_graph(&c.initial);
        let (mut v, mut e) = (g.vertex_count() as i64, g.edge_count() as i64);
        for r in &c.result.log {
            let (v2, e2) = (r.vertices_after as i64, r.edges_after as i64);
            if r.kind == MoveKind::NodeDeletion {
                steps += 1;
                if v2 - v > -1 || e2 - e > -2 {
                    violations += 1;
                }
            }
            (v, e) = (v2, e2);
        }
    }
    outcome(steps > 0 && violations == 0, format!("{steps} node deletions, {violations} violations"))
}

/// Returns a heatmap peaked at a fixed pixel, whatever the crop.
struct FixedPeak(usize, usize);

impl Estimator for FixedPeak {
    fn estimate(&self, _crop: &RasterImage) -> Result<Estimate, LokiError> {
        Ok(Estimate { theta_hat: 0.0, heatmap: Heatmap::gaussian(CROP_SIZE, CROP_SIZE, (self.0, self.1), HEATMAP_SIGMA) })
    }
}

fn ac3() -> Outcome {
    let img = RasterImage::blank(640, 480);
    let p = Point::new(320.0, 240.0);
    let exact = |a: usize| ((a as i64 - 100) * 3) as f64 / 10.0;
    let mut offset_bad = 0;
    for u in 0..CROP_SIZE {
        for v in 0..CROP_SIZE {
            let r = refine_keypoint(&img, p, &FixedPeak(u, v));
            let want = Point::new(exact(u), exact(v));
            if r.offset != want || offset_from_argmax(u, v) != want || r.refined_point != p + want {
                offset_bad += 1;
            }
        }
    }
    let params = CropParams::default();
    let label_bad = (0..1000)
        .filter(|&i| {
            let s = sample(7, i, &params);
            let want = (90.0 + s.beta).rem_euclid(180.0);
            s.label_theta != want || label_for(s.beta) != want
        })
        .count();
    outcome(
        offset_bad == 0 && label_bad == 0,
        format!("{offset_bad}/40000 offset mismatches, {label_bad}/1000 label mismatches"),
    )
}

fn quantile(v: &mut [f64], q: f64) -> f64 {
    v.sort_by(|a, b| a.partial_cmp(b).unwrap());
    v[((v.len() - 1) as f64 * q).round() as usize]
}

/// A straight top strand over a straight bottom one, at image scale.
/// Returns the image, the top centreline and the crossing point.
fn crossing_scene(rng: &mut ChaCha8Rng) -> (RasterImage, (Point, Point), Point) {
    let mut img = RasterImage::blank(640, 480);
    let c = Point::new(rng.random_range(200.0..440.0), rng.random_range(160.0..320.0));
    let beta: f64 = rng.random_range(0.0..180.0);
    let cross: f64 = rng.random_range(35.0..145.0);
    let dir = |deg: f64| Point::new(deg.to_radians().cos(), deg.to_radians().sin());
    let line = |d: Point| vec![c - d * 120.0, c + d * 120.0];
    let bottom = line(dir(beta + cross));
    let top = line(dir(beta));
    paint_stroke(&mut img, &bottom, rng.random_range(4.2..7.2), 0.6);
    paint_stroke(&mut img, &top, rng.random_range(4.2..7.2), 0.6);
    (img, (top[0], top[1]), c)
}

fn ac4() -> Outcome {
    let est = AnalyticEstimator::default();
    let params = CropParams { curvature: 0.0, ..CropParams::default() };
    let mut errs = Vec::with_capacity(1000);
    let mut failed = 0;
    for i in 0..1000 {
        let s = sample(11, i, &params);
        match est.estimate(&s.image) {
            Ok(e) => errs.push(axis_angle_dist(e.theta_hat, s.label_theta)),
            Err(_) => {
                failed += 1;
                errs.push(90.0);
            }
        }
    }
    let med = quantile(&mut errs, 0.5);
    let p95 = quantile(&mut errs, 0.95);

    let mut rng = ChaCha8Rng::seed_from_u64(12);
    let noise = Normal::new(0.0, 8.0).unwrap();
    let (mut coarse, mut refined) = (Vec::with_capacity(1000), Vec::with_capacity(1000));
    for _ in 0..1000 {
        let (img, (a, b), c) = crossing_scene(&mut rng);
        let p = c + Point::new(noise.sample(&mut rng), noise.sample(&mut rng));
        coarse.push(point_segment_dist(p, a, b));
        refined.push(point_segment_dist(refine_keypoint(&img, p, &est).refined_point, a, b));
    }
    let (mc, mr) = (quantile(&mut coarse, 0.5), quantile(&mut refined, 0.5));
    outcome(
        med <= 3.0 && p95 <= 10.0 && mr < mc,
        format!(
            "angle error median {med:.2} deg, P95 {p95:.2} deg ({failed} empty); centreline miss median {mc:.2} px coarse -> {mr:.2} px refined"
        ),
    )
}

fn ac5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    // offsets at exactly the threshold, then random ones
    let on_20 = [(20, 0), (0, -20), (12, 16), (-16, 12)];
    let on_200 = [(200, 0), (0, 200), (-120, 160), (160, -120)];
    let mut grid_bad = 0;
    for i in 0..10_000 {
        let p = (rng.random_range(0..640i64), rng.random_range(0..480i64));
        let pick = |rng: &mut ChaCha8Rng, on: &[(i64, i64)], r: i64| {
            if i % 4 == 0 {
                let (dx, dy) = on[rng.random_range(0..on.len())];
                (p.0 + dx, p.1 + dy)
            } else {
                (p.0 + rng.random_range(-r..=r), p.1 + rng.random_range(-r..=r))
            }
        };
        let gl = pick(&mut rng, &on_20, 30);
        let gr = pick(&mut rng, &on_20, 30);
        let wc = pick(&mut rng, &on_200, 260);
        let d2 = |q: (i64, i64)| (q.0 - p.0).pow(2) + (q.1 - p.1).pow(2);
        let pt = |q: (i64, i64)| Point::new(q.0 as f64, q.1 as f64);
        let g = GripperPose { g_l: pt(gl), g_r: pt(gr), ..GripperPose::default() };
        let wedged_ref = d2(gl) < 400 || d2(gr) < 400;
        let leaving_ref = d2(wc) > 40_000;
        if wedged_condition(pt(p), &g, 20.0) != wedged_ref || leaving_workspace_condition(pt(p), pt(wc), 200.0) != leaving_ref {
            grid_bad += 1;
        }
    }

    let margin = 1e-6;
    let mut hist_bad = 0;
    for k in 0..1000u64 {
        let len = rng.random_range(0..10);
        // a few levels, so ties and equal neighbours are common
        let levels = [0.0, 0.05, 1.0, 1.0 + margin / 2.0, 2.3, 4.0];
        let dens: Vec<f64> = (0..len).map(|_| levels[rng.random_range(0..levels.len())]).collect();
        let reference = Observation { id: REFERENCE_ID, density: levels[rng.random_range(0..levels.len())] };
        let mut h = ObservationHistory::new(reference);
        for (t, &d) in dens.iter().enumerate() {
            h.push(t, Observation { id: t as u64, density: d }, 0).unwrap();
        }
        let noisy = Comparator {
            flip_prob: if k % 2 == 0 { 0.0 } else { 0.3 },
            margin,
            seed: k,
            forced: ForcedFlips { reference: k % 5 == 1, consecutive: k % 7 == 3 },
        };
        let exact = Comparator { flip_prob: 0.0, margin, seed: k, forced: ForcedFlips::default() };
        let at = |back: usize| h.entries.len().checked_sub(back + 1).map(|i| h.entries[i].observation);

        // denser and not-looser from raw inequalities, then the noisy comparator
        // through its flip alone
        let gt = |a: &Observation, b: &Observation| a.density > b.density + margin;
        let ge = |a: &Observation, b: &Observation| a.density >= b.density - margin;
        let flip = |a: &Observation, b: &Observation| noisy.denser(a, b) != gt(a, b);
        let rotate_ref = |c: &Comparator, raw: bool| match (at(0), at(1), at(2)) {
            (Some(a), Some(b), Some(d)) if raw => gt(&a, &b) && gt(&b, &d),
            (Some(a), Some(b), Some(d)) => c.denser(&a, &b) && c.denser(&b, &d),
            _ => false,
        };
        let v = termination_verdict(&h, &noisy);
        let now = at(0);
        let np_exact = matches!((now, at(5)), (Some(a), Some(o)) if ge(&a, &o));
        let np_noisy = matches!((now, at(5)), (Some(a), Some(o)) if ge(&a, &o) != flip(&a, &o));
        let ref_exact = now.is_some_and(|a| gt(&reference, &a));
        let ref_noisy = now.is_some_and(|a| gt(&reference, &a) != flip(&reference, &a));
        let ok = rotate_condition(&h, &exact) == rotate_ref(&exact, true)
            && rotate_condition(&h, &noisy) == rotate_ref(&noisy, false)
            && v.no_progress_exact == np_exact
            && v.reference_exact == ref_exact
            && v.no_progress == np_noisy
            && v.reference == ref_noisy
            && v.fires() == (np_noisy || ref_noisy);
        if !ok {
            hist_bad += 1;
        }
    }
    outcome(
        grid_bad == 0 && hist_bad == 0,
        format!("{grid_bad}/10000 grid mismatches, {hist_bad}/1000 history mismatches"),
    )
}

fn rate(campaign: &untangle_core::bench::Campaign, tier: u8, p: Policy) -> f64 {
    let r = campaign.table.row(tier, p).expect("row present");
    100.0 * r.successes as f64 / r.trials as f64
}

fn ac6(campaign: &untangle_core::bench::Campaign, elapsed: Duration) -> Outcome {
    let mut pass = elapsed < Duration::from_secs(120);
    let mut parts = Vec::new();
    for tier in 3..=5 {
        let [h, hl, hs, hls] = Policy::ALL.map(|p| rate(campaign, tier, p));
        pass &= hls >= hl && hls >= hs && hls >= h + 10.0;
        parts.push(format!("T{tier} H {h:.0} HL {hl:.0} HS {hs:.0} HLS {hls:.0}"));
    }
    outcome(pass, format!("{} (%); campaign {}", parts.join(", "), secs(elapsed)))
}

fn ac7(first: &str) -> Outcome {
    let again = run_benchmark(&[1, 2, 3, 4, 5], &Policy::ALL, 100, &SimConfig::default(), CAMPAIGN_SEED)
        .and_then(|c| c.table.to_csv());
    match again {
        Ok(csv) => outcome(csv == first, format!("summary.csv {} bytes, rerun identical: {}", first.len(), csv == first)),
        Err(e) => outcome(false, format!("rerun failed: {e}")),
    }
}

fn ac8() -> Outcome {
    let knots = untangle_core::bench::tier_knots();
    let mut pass = true;
    let mut parts = Vec::new();
    for mode in [FailureMode::C, FailureMode::B, FailureMode::E] {
        let cfg = adversarial_config(mode).expect("adversarial config");
        let (mut hit, mut total, mut repeat_ok) = (0, 0, true);
        for &knot in &knots {
            for seed in 0..5 {
                let d = untangle_core::diagram::knot_template(knot, seed, cfg.dynamics.cable_width).unwrap();
                let r = run_trial(&d, Policy::HLS, &cfg, seed);
                repeat_ok &= run_trial(&d, Policy::HLS, &cfg, seed) == r;
                total += 1;
                if r.failure_mode == Some(mode) {
                    hit += 1;
                }
            }
        }
        pass &= hit == total && repeat_ok;
        parts.push(format!("{mode} {hit}/{total}{}", if repeat_ok { "" } else { " (nondeterministic)" }));
    }
    outcome(pass, parts.join(", "))
}

fn main() {
    let mut results: Vec<(&str, Outcome)> = Vec::new();

    let t0 = Instant::now();
    let cases = oracle_suite(20, &SimConfig::oracle()).expect("oracle suite");
    let oracle_time = t0.elapsed();
    results.push(("AC1 oracle equivalence", ac1(&cases, oracle_time)));
    results.push(("AC2 progress law", ac2(&cases)));
    results.push(("AC3 LOKI arithmetic", ac3()));
    results.push(("AC4 LOKI estimator quality", ac4()));
    results.push(("AC5 condition exactness", ac5()));

    let t0 = Instant::now();
    let campaign = run_benchmark(&[1, 2, 3, 4, 5], &Policy::ALL, 100, &SimConfig::default(), CAMPAIGN_SEED);
    let campaign_time = t0.elapsed();
    match campaign.and_then(|c| c.table.to_csv().map(|csv| (c, csv))) {
        Ok((c, csv)) => {
            results.push(("AC6 ablation ordering", ac6(&c, campaign_time)));
            results.push(("AC7 reproducibility", ac7(&csv)));
        }
        Err(e) => {
            results.push(("AC6 ablation ordering", outcome(false, format!("campaign failed: {e}"))));
            results.push(("AC7 reproducibility", outcome(false, "no campaign")));
        }
    }
    results.push(("AC8 failure taxonomy", ac8()));

    let mut failed = 0;
    for (name, o) in &results {
        println!("{} {name}: {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
        failed += usize::from(!o.pass);
    }
    println!("{}/{} criteria pass", results.len() - failed, results.len());
    if failed > 0 {
        std::process::exit(1);
    }
}
