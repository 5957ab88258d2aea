//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use tactile_core::channel::{run_channel, ChannelConfig, DelayProfile, Variance};
use tactile_core::force::jacobian;
use tactile_core::kinematics::{
    forward_kinematics, inverse_kinematics, Backend, DeviceGeometry, JointAngles,
};
use tactile_core::latency::{builtin_graphs, calibrate, t_hardware};
use tactile_core::numerics::{
    cordic_acos, cordic_atan2, cordic_sincos, float_to_fixed, CordicConfig,
};
use tactile_core::pipeline::{
    hardware_time_limit, module_mse, run_pipeline, speedup_report, PipelineConfig, STANDARD_LIMITS,
};
use tactile_core::scenario::Scenario;

type Criterion = (&'static str, fn() -> Outcome);

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

/// Interior workspace poses used by the kinematics criteria.
fn interior_pose(rng: &mut ChaCha8Rng) -> JointAngles {
    const M: f64 = 0.05;
    JointAngles::new(
        rng.gen_range(-FRAC_PI_2 + M..=FRAC_PI_2 - M),
        rng.gen_range(M..=FRAC_PI_2 - M),
        rng.gen_range(M..=FRAC_PI_2 - M),
    )
}

fn mse_bands() -> Outcome {
    let start = Instant::now();
    let loaded = Scenario::with_seed(0)
        .resolve(Path::new("."))
        .expect("default scenario");
    let oracle = run_pipeline(&loaded.pipeline, &Backend::Oracle).expect("oracle run");
    let hybrid = run_pipeline(
        &loaded.pipeline,
        &loaded.backend(tactile_core::scenario::BackendKind::Hybrid),
    )
    .expect("hybrid run");
    let entries = module_mse(
        &oracle,
        &loaded.pipeline.geometry,
        &loaded.pipeline.scene,
        &loaded.cordic,
    )
    .expect("module mse");
    let elapsed = start.elapsed();
    let mut failures = Vec::new();
    for e in &entries {
        let (lo, hi) = match e.module.as_str() {
            "fk_hmd" | "fk_hsd" => (1e-9, 1e-7),
            "ik_hsd" => (1e-7, 1e-5),
            "kff_hmd" => (1e-9, 1e-6),
            "fbf_hsd" => (0.0, 1e-12),
            m => panic!("unexpected module {m}"),
        };
        if !(e.mse >= lo && e.mse <= hi) {
            failures.push(format!(
                "{}.{}={:.3e} not in [{lo:e}, {hi:e}]",
                e.module, e.component, e.mse
            ));
        }
    }
    let fast = elapsed < Duration::from_secs(5);
    if !fast {
        failures.push(format!("runtime {elapsed:?} >= 5 s"));
    }
    let pass =
        failures.is_empty() && entries.len() == 15 && oracle.len() == 1200 && hybrid.len() == 1200;
    let detail = if failures.is_empty() {
        format!("15 entries in band, {elapsed:.2?}")
    } else {
        failures.join("; ")
    };
    outcome(pass, detail)
}

fn budget_arithmetic() -> Outcome {
    let l1 = hardware_time_limit(1e-3);
    let l10 = hardware_time_limit(10e-3);
    let rows = speedup_report(403e-9, &STANDARD_LIMITS).expect("speedup report");
    let speedups: Vec<u64> = rows.iter().map(|r| r.speedup).collect();
    let pass = l1 == 37.5e-6 && l10 == 375e-6 && speedups == [93, 930];
    outcome(
        pass,
        format!("limits {l1:e} s, {l10:e} s; speedups {speedups:?}"),
    )
}

fn calibrated_latency() -> Outcome {
    let targets = [("fk", 47.0), ("kff", 70.0), ("ik", 218.0), ("fbf", 21.0)]
        .into_iter()
        .map(|(k, v)| (k.to_string(), v))
        .collect();
    let graphs = builtin_graphs();
    let report = match calibrate(&graphs, &targets) {
        Ok(r) => r,
        Err(e) => return outcome(false, format!("calibration failed: {e}")),
    };
    let paths: std::collections::BTreeMap<String, f64> = graphs
        .iter()
        .map(|(k, g)| {
            (
                k.clone(),
                g.critical_path(&report.table).expect("acyclic").latency,
            )
        })
        .collect();
    let ordered =
        paths["fbf"] < paths["fk"] && paths["fk"] < paths["kff"] && paths["kff"] < paths["ik"];
    let worst = report
        .modules
        .iter()
        .map(|m| m.relative_residual)
        .fold(0.0, f64::max);
    let total = t_hardware(&paths).expect("all modules present");
    let pass = ordered && worst <= 0.20 && (total - 403.0).abs() <= 0.20 * 403.0;
    outcome(
        pass,
        format!(
            "fbf {:.2} < fk {:.2} < kff {:.2} < ik {:.2} ns: {ordered}; worst residual {:.1}%; total {total:.2} ns",
            paths["fbf"], paths["fk"], paths["kff"], paths["ik"], worst * 100.0
        ),
    )
}

fn round_trip() -> Outcome {
    let start = Instant::now();
    let g = DeviceGeometry::default();
    let hybrid = Backend::hybrid_default();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let (mut worst_o, mut worst_h) = (0.0f64, 0.0f64);
    let mut unreachable = 0;
    for _ in 0..10_000 {
        let q = interior_pose(&mut rng);
        for (b, worst) in [(&Backend::Oracle, &mut worst_o), (&hybrid, &mut worst_h)] {
            let p = forward_kinematics(q, &g, b);
            match inverse_kinematics(p, &g, b) {
                Ok(r) => {
                    let e = q
                        .to_array()
                        .iter()
                        .zip(r.to_array())
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max);
                    *worst = worst.max(e);
                }
                Err(_) => unreachable += 1,
            }
        }
    }
    let elapsed = start.elapsed();
    let pass =
        worst_o <= 1e-9 && worst_h <= 5e-3 && unreachable == 0 && elapsed < Duration::from_secs(10);
    outcome(
        pass,
        format!("oracle {worst_o:.2e} rad, hybrid {worst_h:.2e} rad, {unreachable} unreachable, {elapsed:.2?}"),
    )
}

fn jacobian_finite_difference() -> Outcome {
    let g = DeviceGeometry::default();
    let h = 1e-6;
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    for _ in 0..1_000 {
        let q = interior_pose(&mut rng);
        let j = jacobian(q, &g, &Backend::Oracle);
        for col in 0..3 {
            let mut plus = q.to_array();
            let mut minus = q.to_array();
            plus[col] += h;
            minus[col] -= h;
            let fp =
                forward_kinematics(JointAngles::from_array(plus), &g, &Backend::Oracle).to_array();
            let fm =
                forward_kinematics(JointAngles::from_array(minus), &g, &Backend::Oracle).to_array();
            for row in 0..3 {
                let fd = (fp[row] - fm[row]) / (2.0 * h);
                worst = worst.max((fd - j.entries[row][col]).abs());
            }
        }
    }
    outcome(worst <= 1e-6, format!("max entry error {worst:.2e}"))
}

fn cordic_envelope() -> Outcome {
    let cfg = CordicConfig::default();
    let fmt = cfg.format();
    let lsb = fmt.lsb();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut sc, mut at, mut ac) = (0.0f64, 0.0f64, 0.0f64);
    for _ in 0..100_000 {
        let a = float_to_fixed(rng.gen_range(-PI..=PI), fmt);
        let (s, c) = cordic_sincos(a, &cfg);
        let x = a.to_f64();
        sc = sc
            .max((s.to_f64() - x.sin()).abs())
            .max((c.to_f64() - x.cos()).abs());

        // atan2 is singular at the origin; keep both inputs off it.
        let (y, xx) = loop {
            let y = float_to_fixed(rng.gen_range(-1.0..=1.0), fmt);
            let xx = float_to_fixed(rng.gen_range(-1.0..=1.0), fmt);
            if y.raw().abs().max(xx.raw().abs()) >= 16 {
                break (y, xx);
            }
        };
        let r = cordic_atan2(y, xx, &cfg).to_f64();
        at = at.max((r - y.to_f64().atan2(xx.to_f64())).abs());

        // acos away from the |t| = 1 endpoints.
        let t = float_to_fixed(rng.gen_range(-0.99..=0.99), fmt);
        ac = ac.max((cordic_acos(t, &cfg).to_f64() - t.to_f64().acos()).abs());
    }
    let pass = sc <= 4.0 * lsb && at <= 8.0 * lsb && ac <= 8.0 * lsb;
    outcome(
        pass,
        format!(
            "sin/cos {:.2} LSB, atan2 {:.2} LSB, acos {:.2} LSB",
            sc / lsb,
            at / lsb,
            ac / lsb
        ),
    )
}

fn channel_statistics() -> Outcome {
    const N: usize = 100_000;
    let sigma2 = 1e-6;
    let cfg = ChannelConfig {
        sigma2: Variance::Uniform(sigma2),
        delay: DelayProfile::Constant { samples: 0 },
        seed: 7,
        initial_hold: None,
    };
    let input = vec![[0.0; 3]; N];
    let out = run_channel(&cfg, &input).expect("channel runs");
    let repeat = run_channel(&cfg, &input).expect("channel runs");
    let identical = out
        .iter()
        .zip(&repeat)
        .all(|(a, b)| a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()));
    let mut pass = identical;
    let mut parts = Vec::new();
    for k in 0..3 {
        let mean = out.iter().map(|o| o[k]).sum::<f64>() / N as f64;
        let var = out.iter().map(|o| (o[k] - mean).powi(2)).sum::<f64>() / (N - 1) as f64;
        let mean_ok = mean.abs() <= 4.0 * sigma2.sqrt() / (N as f64).sqrt();
        let var_ok = (var - sigma2).abs() <= 0.05 * sigma2;
        pass &= mean_ok && var_ok;
        parts.push(format!("mean {mean:.2e} var {var:.4e}"));
    }
    outcome(
        pass,
        format!("{}; repeat identical: {identical}", parts.join(", ")),
    )
}

fn loop_transparency() -> Outcome {
    let cfg = PipelineConfig {
        forward: ChannelConfig::transparent(),
        backward: ChannelConfig::transparent(),
        ..PipelineConfig::default()
    };
    let trace = run_pipeline(&cfg, &Backend::Oracle).expect("oracle run");
    let worst = trace
        .records
        .iter()
        .flat_map(|r| (0..3).map(move |i| (r.l[i] - r.c[i]).abs()))
        .fold(0.0, f64::max);
    outcome(
        worst <= 1e-9,
        format!("max |l - c| = {worst:.2e} m over {} samples", trace.len()),
    )
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("1 module MSE bands", mse_bands),
        ("2 latency budget arithmetic", budget_arithmetic),
        ("3 calibrated latency model", calibrated_latency),
        ("4 FK/IK round trip", round_trip),
        ("5 Jacobian finite differences", jacobian_finite_difference),
        ("6 CORDIC error envelope", cordic_envelope),
        ("7 channel statistics", channel_statistics),
        ("8 loop transparency", loop_transparency),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let o = check();
        if !o.pass {
            failed += 1;
        }
        println!(
            "{} criterion {name}: {}",
            if o.pass { "PASS" } else { "FAIL" },
            o.detail
        );
    }
    println!("acceptance: {} passed, {failed} failed", 8 - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}
