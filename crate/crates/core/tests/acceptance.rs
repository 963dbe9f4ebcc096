//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.

use std::collections::BTreeMap;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use feedsched::experiment::{run_experiment, to_csv_string, ExperimentRow, ExperimentSpec, Sweep};
use feedsched::io::{
    preset_processor, preset_taskset, taskset_preset_name, GammaSpec, POWERPC_405LP,
    TASKSET_DENSITIES, XSCALE,
};
use feedsched::oracle::{enumerate_lp_optimum, roundtrip_check};
use feedsched::sim::{plan, FeedbackEvents};
use feedsched::{
    build_partition_lp, simulate, solve_lp, wrap_around, LinearProgram, LpOutcome, Mode,
    ProcessorModel, ScenarioConfig, SchedulingInstance, Segment, Snapshot, Task, TaskId, TaskLoad,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const PRESETS: [&str; 2] = [POWERPC_405LP, XSCALE];
const LP_TOL: f64 = 1e-6;
const CLOSED_FORM_TOL: f64 = 1e-6;
const ROUNDTRIP_COST_TOL: f64 = 1e-9;
const COLLAPSE_TOL: f64 = 1e-6;
const TREND_SLACK: f64 = 1.02;
const MIN_BEST_SAVING: f64 = 0.30;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn processor(name: &str) -> ProcessorModel {
    preset_processor(name).expect("built-in processor")
}

fn taskset(density: f64) -> Vec<Task> {
    preset_taskset(&taskset_preset_name(density)).expect("built-in taskset")
}

fn gammas() -> Vec<f64> {
    (1..=10).map(|k| k as f64 / 10.0).collect()
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(elapsed: Duration, limit: Duration) -> Result<(), String> {
    ensure(elapsed < limit, || {
        format!("took {elapsed:?}, limit {limit:?}")
    })
}

fn dynamic_energy(tasks: &[Task], preset: &str, gamma: f64, mode: Mode) -> Result<f64, String> {
    let instance =
        SchedulingInstance::new(tasks.to_vec(), processor(preset), 2).map_err(|e| e.to_string())?;
    let config = ScenarioConfig::uniform(instance, gamma, mode).map_err(|e| e.to_string())?;
    let trace = simulate(&config).map_err(|e| format!("{preset} γ={gamma} {mode}: {e}"))?;
    Ok(trace.energy.dynamic_mj)
}

fn c1_golden() -> Outcome {
    let loads = vec![
        TaskLoad::new(TaskId(1), vec![0.1, 0.2]),
        TaskLoad::new(TaskId(2), vec![0.0, 0.5]),
        TaskLoad::new(TaskId(3), vec![0.2, 0.4]),
        TaskLoad::new(TaskId(4), vec![0.4, 0.0]),
    ];
    let seg = |processor, task, level, start, end| Segment {
        processor,
        task: TaskId(task),
        level,
        start,
        end,
    };
    let expected = vec![
        seg(0, 1, 0, 0.0, 0.1),
        seg(0, 1, 1, 0.1, 0.3),
        seg(0, 2, 1, 0.3, 0.8),
        seg(0, 3, 0, 0.8, 1.0),
        seg(1, 3, 1, 0.0, 0.4),
        seg(1, 4, 0, 0.4, 0.8),
    ];
    let started = Instant::now();
    let schedule = wrap_around(0, &loads, 2).map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    ensure(schedule.segments == expected, || {
        format!("got {:?}", schedule.segments)
    })?;
    within(elapsed, Duration::from_millis(1))?;
    Ok(format!("6 segments exact in {elapsed:?}"))
}

fn random_lp(rng: &mut ChaCha8Rng) -> LinearProgram {
    let n = rng.gen_range(1..=4);
    let n_eq = rng.gen_range(0..=2);
    let n_ub = rng.gen_range(0..=4 - n_eq);
    // Half the programs use integer data (degenerate, tie-heavy), half decimals.
    let integral = rng.gen_bool(0.5);
    let coeff = |rng: &mut ChaCha8Rng, lo: i32, hi: i32| -> f64 {
        if integral {
            rng.gen_range(lo..=hi) as f64
        } else {
            (rng.gen_range(lo as f64..hi as f64) * 100.0).round() / 100.0
        }
    };
    let objective = (0..n).map(|_| coeff(rng, -5, 5)).collect();
    let lower: Vec<f64> = (0..n).map(|_| rng.gen_range(-2..=1) as f64).collect();
    let upper = lower
        .iter()
        .map(|l| l + rng.gen_range(1..=3) as f64)
        .collect();
    let mut lp = LinearProgram::with_bounds(objective, lower, upper);
    for _ in 0..n_eq {
        let row = (0..n).map(|_| coeff(rng, -5, 5)).collect();
        let rhs = coeff(rng, -6, 6);
        lp.add_eq(row, rhs);
    }
    for _ in 0..n_ub {
        let row = (0..n).map(|_| coeff(rng, -5, 5)).collect();
        let rhs = coeff(rng, -6, 8);
        lp.add_le(row, rhs);
    }
    lp
}

fn c2_lp_oracle() -> Outcome {
    const COUNT: usize = 400;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_0002);
    let started = Instant::now();
    let mut optimal = 0;
    for k in 0..COUNT {
        let lp = random_lp(&mut rng);
        let got = solve_lp(&lp).map_err(|e| format!("lp #{k}: {e}"))?;
        let want = enumerate_lp_optimum(&lp).map_err(|e| format!("lp #{k}: {e}"))?;
        match (&got, &want) {
            (LpOutcome::Optimal { objective: a, .. }, LpOutcome::Optimal { objective: b, .. }) => {
                ensure((a - b).abs() <= LP_TOL, || {
                    format!("lp #{k}: simplex {a} vs enumeration {b}: {lp:?}")
                })?;
                optimal += 1;
            }
            (LpOutcome::Infeasible, LpOutcome::Infeasible) => {}
            _ => return Err(format!("lp #{k}: status {got:?} vs {want:?}: {lp:?}")),
        }
    }
    let elapsed = started.elapsed();
    within(elapsed, Duration::from_secs(5))?;
    Ok(format!(
        "{COUNT} LPs ({optimal} optimal) agree within {LP_TOL:e} in {elapsed:?}"
    ))
}

fn c3_closed_form() -> Outcome {
    let task = Task::new(1, 0.0, 2.0, 5.0).map_err(|e| e.to_string())?;
    let snapshot =
        Snapshot::initial(0.0, &[task], processor(POWERPC_405LP), 1).map_err(|e| e.to_string())?;
    let expected = 5490.0 / 7.0;

    let enumerated = enumerate_lp_optimum(&build_partition_lp(&snapshot).lp)
        .map_err(|e| e.to_string())?
        .objective()
        .ok_or("enumeration found no optimum")?;
    ensure((enumerated - expected).abs() <= CLOSED_FORM_TOL, || {
        format!("enumeration gives {enumerated}, expected {expected}")
    })?;

    let record = plan(snapshot).map_err(|e| e.to_string())?;
    let w = &record.plan.interval(0)[0];
    let mix = [(1, 6.0 / 7.0), (3, 1.0 / 7.0)];
    for (q, want) in mix {
        ensure((w[q] - want).abs() <= 1e-9, || format!("fractions {w:?}"))?;
    }
    ensure(w[0].abs() <= 1e-9 && w[2].abs() <= 1e-9, || {
        format!("fractions {w:?}")
    })?;

    let instance = SchedulingInstance::new(vec![task], processor(POWERPC_405LP), 1)
        .map_err(|e| e.to_string())?;
    let trace = simulate(
        &ScenarioConfig::uniform(instance, 1.0, Mode::OpenLoop).map_err(|e| e.to_string())?,
    )
    .map_err(|e| e.to_string())?;
    let energy = trace.energy.dynamic_mj;
    ensure((energy - expected).abs() <= CLOSED_FORM_TOL, || {
        format!("simulated {energy}, expected {expected}")
    })?;
    Ok(format!("{energy:.6} mJ, mix 6/7 @0.3 + 1/7 @1.0"))
}

fn c4_roundtrip() -> Outcome {
    let mut worst: f64 = 0.0;
    for preset in PRESETS {
        for d in TASKSET_DENSITIES {
            let snapshot = Snapshot::initial(0.0, &taskset(d), processor(preset), 2)
                .map_err(|e| e.to_string())?;
            let record = plan(snapshot).map_err(|e| format!("{preset} D={d}: {e}"))?;
            let report = roundtrip_check(&record.plan, &record.schedules, &record.snapshot);
            ensure(report.is_clean(), || {
                format!("{preset} D={d}: {:?}", report.violations)
            })?;
            let gap = (report.lp_cost - report.continuous_cost).abs();
            ensure(gap <= ROUNDTRIP_COST_TOL, || {
                format!("{preset} D={d}: cost gap {gap:e}")
            })?;
            worst = worst.max(gap);
        }
    }
    Ok(format!("14 plans clean, max cost gap {worst:e} mJ"))
}

fn c5_no_misses() -> Outcome {
    let mut runs = 0;
    for preset in PRESETS {
        for d in TASKSET_DENSITIES {
            let tasks = taskset(d);
            for g in gammas() {
                for mode in Mode::ALL {
                    let instance = SchedulingInstance::new(tasks.clone(), processor(preset), 2)
                        .map_err(|e| e.to_string())?;
                    let config =
                        ScenarioConfig::uniform(instance, g, mode).map_err(|e| e.to_string())?;
                    let trace = simulate(&config)
                        .map_err(|e| format!("{preset} D={d} γ={g} {mode}: {e}"))?;
                    let misses = trace.deadline_misses();
                    ensure(misses.is_empty(), || {
                        format!("{preset} D={d} γ={g} {mode}: missed {misses:?}")
                    })?;
                    runs += 1;
                }
            }
        }
    }
    Ok(format!("{runs} runs, zero misses"))
}

fn c6_collapse() -> Outcome {
    let mut worst: f64 = 0.0;
    for preset in PRESETS {
        for d in TASKSET_DENSITIES {
            let tasks = taskset(d);
            let e: Vec<f64> = Mode::ALL
                .iter()
                .map(|&mode| dynamic_energy(&tasks, preset, 1.0, mode))
                .collect::<Result<_, _>>()?;
            let spread = e.iter().cloned().fold(f64::MIN, f64::max)
                - e.iter().cloned().fold(f64::MAX, f64::min);
            ensure(spread <= COLLAPSE_TOL, || {
                format!("{preset} D={d}: energies {e:?}")
            })?;
            worst = worst.max(spread);
        }
    }
    Ok(format!("14 tasksets, max spread {worst:e} mJ"))
}

fn density_rows(preset: &str) -> Result<Vec<ExperimentRow>, String> {
    run_experiment(&ExperimentSpec {
        processor: processor(preset),
        m: 2,
        taskset: Vec::new(),
        gamma: GammaSpec::Uniform(0.5),
        modes: vec![Mode::Feedback, Mode::OpenLoop],
        events: FeedbackEvents::default(),
        sweep: Sweep::all_densities(),
        timing: false,
    })
    .map_err(|e| e.to_string())
}

/// (density, feedback, open-loop) dynamic energies.
fn pairs(rows: &[ExperimentRow]) -> Result<Vec<(f64, f64, f64)>, String> {
    rows.chunks(2)
        .map(|c| match (c[0].dynamic_mj, c[1].dynamic_mj) {
            (Some(fb), Some(ol)) => Ok((c[0].sweep_value, fb, ol)),
            _ => Err(format!("D={} infeasible", c[0].sweep_value)),
        })
        .collect()
}

fn c7_powerpc_density_trend() -> Outcome {
    let started = Instant::now();
    let rows = density_rows(POWERPC_405LP)?;
    let elapsed = started.elapsed();
    let mut best: f64 = 0.0;
    for (d, fb, ol) in pairs(&rows)? {
        ensure(fb <= ol, || {
            format!("D={d}: feedback {fb} > open-loop {ol}")
        })?;
        best = best.max(1.0 - fb / ol);
    }
    ensure(best >= MIN_BEST_SAVING, || {
        format!("best saving {:.1}%", best * 100.0)
    })?;
    within(elapsed, Duration::from_secs(10))?;
    Ok(format!("best saving {:.1}% in {elapsed:?}", best * 100.0))
}

fn c8_xscale_density_trend() -> Outcome {
    let mut worst: f64 = 0.0;
    for (d, fb, ol) in pairs(&density_rows(XSCALE)?)? {
        if d < 1.25 {
            continue;
        }
        ensure(fb <= TREND_SLACK * ol, || {
            format!("D={d}: feedback {fb} > 1.02 × open-loop {ol}")
        })?;
        worst = worst.max(fb / ol);
    }
    Ok(format!("max feedback/open-loop {worst:.4} for D ≥ 1.25"))
}

fn c9_gamma_ordering() -> Outcome {
    let tasks = taskset(1.25);
    let mut gaps = BTreeMap::new();
    for preset in PRESETS {
        for g in gammas() {
            let ideal = dynamic_energy(&tasks, preset, g, Mode::Ideal)?;
            let fb = dynamic_energy(&tasks, preset, g, Mode::Feedback)?;
            let ol = dynamic_energy(&tasks, preset, g, Mode::OpenLoop)?;
            ensure(ideal <= fb + COLLAPSE_TOL, || {
                format!("{preset} γ={g}: ideal {ideal} > feedback {fb}")
            })?;
            ensure(fb <= TREND_SLACK * ol, || {
                format!("{preset} γ={g}: feedback {fb} > 1.02 × open-loop {ol}")
            })?;
            if preset == POWERPC_405LP {
                gaps.insert((g * 10.0).round() as u32, fb - ideal);
            }
        }
    }
    let (g3, g9) = (gaps[&3], gaps[&9]);
    ensure(g9 < g3, || {
        format!("PowerPC gap at γ=0.9 ({g9}) not below γ=0.3 ({g3})")
    })?;
    Ok(format!(
        "PowerPC feedback−ideal gap {g3:.3} mJ at γ=0.3, {g9:.3} mJ at γ=0.9"
    ))
}

fn density_sweep_csv() -> Result<String, String> {
    let mut out = String::new();
    for preset in PRESETS {
        let rows = run_experiment(&ExperimentSpec {
            processor: processor(preset),
            m: 2,
            taskset: Vec::new(),
            gamma: GammaSpec::Uniform(0.5),
            modes: Mode::ALL.to_vec(),
            events: FeedbackEvents::default(),
            sweep: Sweep::all_densities(),
            timing: false,
        })
        .map_err(|e| e.to_string())?;
        out.push_str(&to_csv_string(&rows).map_err(|e| e.to_string())?);
    }
    Ok(out)
}

fn c10_determinism() -> Outcome {
    let a = density_sweep_csv()?;
    let b = density_sweep_csv()?;
    ensure(a == b, || "CSV output differs between runs".to_string())?;
    Ok(format!("{} bytes identical", a.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("wrap-around golden layout", c1_golden),
        ("simplex vs vertex enumeration", c2_lp_oracle),
        ("single-task closed-form optimum", c3_closed_form),
        ("plan/continuous round trip", c4_roundtrip),
        ("no deadline misses", c5_no_misses),
        ("gamma=1 collapse", c6_collapse),
        ("PowerPC density sweep trend", c7_powerpc_density_trend),
        ("XScale density sweep trend", c8_xscale_density_trend),
        ("estimation-factor ordering", c9_gamma_ordering),
        ("deterministic CSV", c10_determinism),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        match check() {
            Ok(detail) => println!("PASS {:>2} {name}: {detail}", k + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {:>2} {name}: {detail}", k + 1);
            }
        }
    }
    println!("{} passed, {failed} failed", criteria.len() - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
