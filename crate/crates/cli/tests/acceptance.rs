//! Acceptance checks. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails.

use std::collections::{HashSet, VecDeque};
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use coordlab::aggregation::{
    all_rankings, nth_profile, pairwise_majority, profile_count, run_mogd, Aggregator, DiagnosticThresholds,
    GradientProblem, PreferenceProfile, TrajectoryStatus,
};
use coordlab::bounds::{protocol_length, simple_estimate, topological_decomposition, ConflictTerm, CoordinationParams};
use coordlab::dynamics::{
    hysteresis_sweep, rg_flow, rg_flow_exact, simulate, Driver, Drivers, DynamicsConfig, HysteresisScenario,
    PopulationSpec, Scenario, SystemState, TemperatureRamp,
};
use coordlab::findability::{cascade, pressure_ratio, utility, Acceptance, Lattice, OmegaSpec, Solution, SolutionKind};
use coordlab::hierarchy::{optimal_group_count, single_level_min_cost};
use coordlab::population::{cooling_work, critical_temperature, LogBase};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Check = Result<String, String>;
type Criterion = (&'static str, fn() -> Check, Option<Duration>);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn bistromathics_counts() -> Check {
    let cases = [
        (4, 2, ConflictTerm::ObjectivePairs, 0.0, 110.0),
        (8, 4, ConflictTerm::ObjectivePairs, 50.0, 1210.0),
        (6, 4, ConflictTerm::Full, 0.0, 1290.0),
    ];
    let mut got = Vec::new();
    for (n, d, term, rules, want) in cases {
        let total = simple_estimate(n, d, 10.0, 5.0, term, rules).total;
        ensure(total == want, || format!("N={n}, d={d}: {total} != {want}"))?;
        got.push(total.to_string());
    }
    Ok(format!("{} bits", got.join(" / ")))
}

fn model_term() -> Check {
    let c = protocol_length(&CoordinationParams::new(100, 2, 100.0, 0.9, 0.01).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    ensure((6.5e3..=6.8e3).contains(&c.l_models), || {
        format!("l_models = {}", c.l_models)
    })?;
    let rel = (c.l_comm / 1.644e5 - 1.0).abs();
    ensure(rel < 1e-3, || {
        format!("l_comm = {} is {rel:.2e} from 1.644e5", c.l_comm)
    })?;
    Ok(format!(
        "l_models = {:.1} bits, l_comm = {:.1} bits",
        c.l_models, c.l_comm
    ))
}

fn derivation_identity() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(20_240_601);
    let tuples = 20_000;
    let mut worst = 0.0f64;
    for _ in 0..tuples {
        let p = CoordinationParams::new(
            rng.random_range(1..=5_000),
            rng.random_range(1..=64),
            rng.random_range(0.5..1e4),
            rng.random_range(0.0..=1.0),
            rng.random_range(1e-9..0.999),
        )
        .map_err(|e| e.to_string())?;
        let a = protocol_length(&p).map_err(|e| e.to_string())?.total;
        let b = topological_decomposition(&p).map_err(|e| e.to_string())?.total;
        let rel = if a == b {
            0.0
        } else {
            ((a - b) / a.abs().max(b.abs())).abs()
        };
        worst = worst.max(rel);
        ensure(rel < 1e-12, || format!("{p:?}: {a} vs {b}"))?;
    }
    Ok(format!("{tuples} seeded tuples, worst relative error {worst:.1e}"))
}

fn group_optimum() -> Check {
    let p = |n| CoordinationParams::new(n, 2, 100.0, 0.9, 0.01).map_err(|e| e.to_string());
    let opt = optimal_group_count(&p(1000)?, 2).map_err(|e| e.to_string())?;
    ensure([79, 80].contains(&opt.exact), || format!("M_opt = {}", opt.exact))?;
    let ratio = 100.0 / opt.exact as f64;
    ensure((0.5..=2.0).contains(&ratio), || format!("N^(2/3) ratio {ratio}"))?;
    let big = p(10_000)?;
    let exact = optimal_group_count(&big, 2).map_err(|e| e.to_string())?.exact_cost;
    let closed = single_level_min_cost(&big, 2).map_err(|e| e.to_string())?;
    let rel = (closed / exact - 1.0).abs();
    ensure(rel < 0.15, || format!("closed form {closed} vs exact {exact}"))?;
    Ok(format!(
        "M_opt(1000) = {}, closed form at 10^4 within {:.1}%",
        opt.exact,
        100.0 * rel
    ))
}

fn critical_point() -> Check {
    let cp = critical_temperature(50.0, 20.0, 10.0, LogBase::Natural).map_err(|e| e.to_string())?;
    ensure((cp.t_c - 0.1278).abs() <= 1e-3, || format!("T_c = {}", cp.t_c))?;
    let w1 = cooling_work(50.0, 20.0, 10.0, 0.3, 0.3).map_err(|e| e.to_string())?;
    ensure(w1 == 0.0, || format!("W(1) = {w1}"))?;
    let w_half = cooling_work(50.0, 20.0, 10.0, 0.3, 0.15).map_err(|e| e.to_string())?;
    ensure(w_half == 500.0, || format!("W(0.5) = {w_half}"))?;
    Ok(format!("T_c = {:.4}, W(1) = {w1}, W(0.5) = {w_half} bits", cp.t_c))
}

fn ode_fidelity() -> Check {
    let mut worst_flow = 0.0f64;
    for (k_init, k0, y) in [(100.0, 10.0, 1.0), (2.0, 10.0, 0.5), (50.0, 5.0, 3.0)] {
        for (l, k) in rg_flow(k_init, k0, y, 10.0, 1e-3).map_err(|e| e.to_string())? {
            let exact = rg_flow_exact(k_init, k0, y, l);
            worst_flow = worst_flow.max(((k - exact) / exact).abs());
        }
    }
    ensure(worst_flow < 1e-4, || format!("flow error {worst_flow}"))?;

    let scenario = Scenario {
        initial: SystemState::new(5, 2.0, 0.8),
        config: DynamicsConfig {
            dt: 1e-3,
            lambda: 0.5,
            l_critical: Some(1e12),
            ..DynamicsConfig::default()
        },
        drivers: Drivers {
            conflicts: Driver::Constant { rate: 0.0 },
            resolutions: Driver::Constant { rate: 0.0 },
        },
        population: PopulationSpec {
            model_len: 3,
            spread: 0.3,
        },
        perturbations: vec![],
        record_every: 10,
    };
    let out = simulate(&scenario, 5.0).map_err(|e| e.to_string())?;
    let mut worst_cool = 0.0f64;
    for row in &out.rows {
        let exact = 0.8 * (-0.5 * row.time).exp();
        worst_cool = worst_cool.max(((row.t_co - exact) / exact).abs());
    }
    ensure(worst_cool < 1e-3, || format!("cooling error {worst_cool}"))?;
    Ok(format!("flow error {worst_flow:.1e}, cooling error {worst_cool:.1e}"))
}

fn findability_properties() -> Check {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let omegas = [OmegaSpec::identity(), OmegaSpec::power(2.5), OmegaSpec::concave()];
    let mut worst = 0.0f64;
    for trial in 0..2_000 {
        let m = rng.random_range(1..=6);
        let fs: Vec<f64> = (0..m).map(|_| rng.random_range(0.0..=1.0)).collect();
        let sol = Solution::new(rng.random_range(0.0..=1.0), fs).map_err(|e| e.to_string())?;
        let omega = &omegas[trial % omegas.len()];
        for i in 0..m {
            let at = |f: f64| {
                sol.with_findability(i, f)
                    .map(|s| utility(&s, omega))
                    .map_err(|e| e.to_string())
            };
            let slopes = [(0.0, 1.0), (0.1, 0.6), (0.3, 0.9), (0.25, 0.75)]
                .iter()
                .map(|&(a, b)| Ok((at(b)? - at(a)?) / (b - a)))
                .collect::<Result<Vec<f64>, String>>()?;
            let scale = slopes.iter().fold(1e-300f64, |s, v| s.max(v.abs()));
            for s in &slopes {
                worst = worst.max((s - slopes[0]).abs() / scale);
            }
            ensure(at(0.0)? == 0.0, || format!("U != 0 with F_{i} = 0"))?;
        }
    }
    ensure(worst < 1e-12, || format!("slope spread {worst}"))?;

    let concave = OmegaSpec::concave();
    let mut sentinels = 0;
    for k in 0..=100 {
        let a = k as f64 / 100.0;
        let sol = Solution::new(a, vec![0.4, 0.9]).map_err(|e| e.to_string())?;
        let r = pressure_ratio(&sol, &concave, 0).map_err(|e| e.to_string())?;
        let flat = concave.derivative(a, 2) == 0.0;
        ensure((r == f64::INFINITY) == flat, || format!("A = {a}: ratio {r}"))?;
        sentinels += usize::from(flat);
    }
    ensure(sentinels == 1, || format!("{sentinels} sentinel points"))?;
    Ok(format!("slope spread {worst:.1e}, +inf exactly at A = 1"))
}

const CELLS: [Acceptance; 4] = [
    Acceptance::Neither,
    Acceptance::Findable,
    Acceptance::Accurate,
    Acceptance::Both,
];

/// Breadth-first reach of accepting cells from accepting seeds, and whether
/// any reached cluster touches both opposite edges.
fn flood(l: &Lattice, kind: SolutionKind, seeds: &[(usize, usize)]) -> (HashSet<(usize, usize)>, bool) {
    let (w, h) = (l.width(), l.height());
    let ok = |x: usize, y: usize| l.cell(x, y).accepts(kind);
    let neighbours = |(x, y): (usize, usize)| {
        let mut v = Vec::with_capacity(4);
        if x > 0 {
            v.push((x - 1, y));
        }
        if x + 1 < w {
            v.push((x + 1, y));
        }
        if y > 0 {
            v.push((x, y - 1));
        }
        if y + 1 < h {
            v.push((x, y + 1));
        }
        v
    };
    let mut reached = HashSet::new();
    let mut spans = false;
    for &s in seeds.iter().filter(|&&(x, y)| ok(x, y)) {
        if reached.contains(&s) {
            continue;
        }
        let mut cluster = vec![s];
        reached.insert(s);
        let mut queue = VecDeque::from([s]);
        while let Some(c) = queue.pop_front() {
            for n in neighbours(c) {
                if ok(n.0, n.1) && reached.insert(n) {
                    cluster.push(n);
                    queue.push_back(n);
                }
            }
        }
        let touches = |f: &dyn Fn(&(usize, usize)) -> bool| cluster.iter().any(f);
        spans |= (touches(&|c| c.1 == 0) && touches(&|c| c.1 == h - 1))
            || (touches(&|c| c.0 == 0) && touches(&|c| c.0 == w - 1));
    }
    (reached, spans)
}

fn cascade_oracle() -> Check {
    let mut compared = 0usize;
    for size in [2usize, 3] {
        let n = size * size;
        for code in 0..4usize.pow(n as u32) {
            let cells = (0..n).map(|i| CELLS[(code >> (2 * i)) & 3]).collect();
            let l = Lattice::new(size, size, cells, 1).map_err(|e| e.to_string())?;
            for kind in [SolutionKind::Findable, SolutionKind::Accurate] {
                for seeds in [
                    vec![(0, 0)],
                    vec![(size - 1, size / 2)],
                    vec![(0, size - 1), (size - 1, 0)],
                ] {
                    let r = cascade(&l, kind, &seeds).map_err(|e| e.to_string())?;
                    let got: HashSet<_> = r.frames.iter().flatten().copied().collect();
                    let (want, spans) = flood(&l, kind, &seeds);
                    ensure(got == want && r.spans == spans, || {
                        format!("{kind} {seeds:?}\n{}", l.to_text())
                    })?;
                    compared += 1;
                }
            }
        }
    }
    let fixture = Lattice::figure_fixture();
    let seed_of = |kind| {
        fixture
            .accepting(kind)
            .first()
            .copied()
            .ok_or("empty fixture".to_string())
    };
    let findable =
        cascade(&fixture, SolutionKind::Findable, &[seed_of(SolutionKind::Findable)?]).map_err(|e| e.to_string())?;
    let accurate =
        cascade(&fixture, SolutionKind::Accurate, &[seed_of(SolutionKind::Accurate)?]).map_err(|e| e.to_string())?;
    ensure(findable.spans && !accurate.spans, || {
        format!(
            "fixture spans: findable {}, accurate {}",
            findable.spans, accurate.spans
        )
    })?;
    Ok(format!(
        "{compared} cascades match the oracle; fixture spans findable only"
    ))
}

fn condorcet() -> Check {
    let p = PreferenceProfile::condorcet();
    let rel = pairwise_majority(&p).map_err(|e| e.to_string())?;
    let cycle = rel.cycle.clone().ok_or("no cycle on the Condorcet profile")?;
    let text = format!("{}>{}", p.format_order(&cycle), p.alternatives()[cycle[0]]);
    ensure(text == "A>B>C>A", || format!("cycle {text}"))?;

    let orders = all_rankings(3);
    let (mut unanimous, mut cyclic) = (0, 0);
    for i in 0..profile_count(3, 3) as u64 {
        let rankings = nth_profile(i, &orders, 3);
        let same = rankings.iter().all(|r| r == &rankings[0]);
        let rel = pairwise_majority(&PreferenceProfile::lettered(rankings).map_err(|e| e.to_string())?)
            .map_err(|e| e.to_string())?;
        if same {
            unanimous += 1;
            ensure(!rel.has_cycle(), || format!("unanimous profile {i} cycles"))?;
        }
        cyclic += usize::from(rel.has_cycle());
    }
    ensure(unanimous == 6, || format!("{unanimous} unanimous profiles"))?;
    Ok(format!(
        "{text}; {unanimous} unanimous profiles acyclic, {cyclic} of 216 profiles cycle"
    ))
}

fn mogd_diagnostics() -> Check {
    let t = DiagnosticThresholds::default();
    let pair = GradientProblem::conflicting_pair();
    let (_, d) = run_mogd(&pair, &Aggregator::equal(2), &[3.0], 0.1, 1000, &t).map_err(|e| e.to_string())?;
    ensure(d.status == TrajectoryStatus::Converged, || {
        format!("pair: {:?}", d.status)
    })?;

    let triple = GradientProblem::rotational_triple();
    let centers: Vec<Vec<f64>> = triple.objectives().iter().map(|q| q.center.clone()).collect();
    for q in triple.objectives() {
        let identity = q.curvature == vec![vec![1.0, 0.0], vec![0.0, 1.0]];
        ensure(identity, || "triple objectives are not unit bowls".into())?;
    }
    let (eta, start) = (0.25, [2.0, -1.0]);
    let long = 100_000;
    let mut orbit = vec![start.to_vec()];
    for k in 0..long {
        let th = orbit.last().unwrap();
        let c = &centers[k % 3];
        orbit.push(th.iter().zip(c).map(|(x, ci)| x - eta * 2.0 * (x - ci)).collect());
    }
    let dist = |a: &[f64], b: &[f64]| a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let radius = orbit.iter().map(|p| dist(p, &[0.0, 0.0])).fold(0.0, f64::max);
    ensure(radius < 10.0 * 2.0, || format!("orbit radius {radius}"))?;
    let tail = &orbit[long - 300..];
    let step = tail
        .windows(2)
        .map(|w| dist(&w[0], &w[1]))
        .fold(f64::INFINITY, f64::min);
    ensure(step > 1e-3, || format!("orbit settles, smallest step {step}"))?;
    let recur = tail.windows(4).map(|w| dist(&w[0], &w[3])).fold(0.0, f64::max);
    ensure(recur < 1e-12, || {
        format!("orbit does not recur with period 3 ({recur})")
    })?;

    let steps = 3000;
    let (traj, d) = run_mogd(&triple, &Aggregator::RoundRobin, &start, eta, steps, &t).map_err(|e| e.to_string())?;
    ensure(d.status == TrajectoryStatus::Cycling, || {
        format!("triple: {:?}", d.status)
    })?;
    ensure(d.recurrence_period_estimate == Some(3.0), || {
        format!("period {:?}", d.recurrence_period_estimate)
    })?;
    let gap = dist(traj.points.last().unwrap(), &orbit[steps]);
    ensure(gap < 1e-9, || format!("trajectory leaves the orbit by {gap}"))?;
    Ok(format!(
        "pair converges; triple cycles with period 3 (orbit radius {radius:.3})"
    ))
}

fn hysteresis() -> Check {
    let ramp = TemperatureRamp::default();
    let r = hysteresis_sweep(&ramp, &HysteresisScenario::default()).map_err(|e| e.to_string())?;
    ensure(r.loop_area > 0.0, || format!("loop area {}", r.loop_area))?;
    let (up, down) = match (r.midpoint_up, r.midpoint_down) {
        (Some(u), Some(d)) => (u, d),
        other => return Err(format!("missing midpoints {other:?}")),
    };
    ensure(up - down > r.width / 2.0, || {
        format!("midpoints {up} and {down}, width {}", r.width)
    })?;
    let flat = HysteresisScenario {
        barrier: 0.0,
        ..HysteresisScenario::default()
    };
    let r0 = hysteresis_sweep(&ramp, &flat).map_err(|e| e.to_string())?;
    ensure(r0.loop_area == 0.0, || format!("zero-barrier area {}", r0.loop_area))?;
    Ok(format!(
        "area {:.4}, midpoints {up:.4} / {down:.4} (ΔT/2 = {:.4}), zero barrier area 0",
        r.loop_area,
        r.width / 2.0
    ))
}

fn files_under(root: &Path) -> Vec<PathBuf> {
    let mut out = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in fs::read_dir(&dir).into_iter().flatten().flatten() {
            let path = entry.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                out.push(path.strip_prefix(root).unwrap().to_path_buf());
            }
        }
    }
    out.sort();
    out
}

fn determinism() -> Check {
    let tmp = std::env::temp_dir().join(format!("coordlab-acceptance-{}", std::process::id()));
    let _ = fs::remove_dir_all(&tmp);
    let runs: [&[&str]; 4] = [
        &["simulate", "--preset", "bistromathics"],
        &[
            "simulate",
            "--preset",
            "bistromathics",
            "--seed",
            "9",
            "--name",
            "other",
        ],
        &["simulate", "--preset", "phase-transition"],
        &["sweep", "--seeds", "1,2,3", "--name", "seeds"],
    ];
    let mut dirs = Vec::new();
    for rep in 0..3 {
        let out = tmp.join(format!("rep{rep}"));
        for args in runs {
            let status = Command::new(env!("CARGO_BIN_EXE_coordlab"))
                .args(args)
                .arg("--out")
                .arg(&out)
                .output()
                .map_err(|e| e.to_string())?;
            ensure(status.status.success(), || {
                format!("{args:?}: {}", String::from_utf8_lossy(&status.stderr))
            })?;
        }
        dirs.push(out);
    }
    let files = files_under(&dirs[0]);
    ensure(files.len() > 10, || format!("only {} files written", files.len()))?;
    for other in &dirs[1..] {
        ensure(files_under(other) == files, || {
            "reruns wrote different file sets".into()
        })?;
        for f in &files {
            let a = fs::read(dirs[0].join(f)).map_err(|e| e.to_string())?;
            let b = fs::read(other.join(f)).map_err(|e| e.to_string())?;
            ensure(a == b, || format!("{} differs between reruns", f.display()))?;
        }
    }
    let seed_a = fs::read(dirs[0].join("seeds/run-00000/bistromathics.events.jsonl")).map_err(|e| e.to_string())?;
    let seed_b = fs::read(dirs[0].join("seeds/run-00001/bistromathics.events.jsonl")).map_err(|e| e.to_string())?;
    ensure(seed_a != seed_b, || "different seeds gave identical events".into())?;
    let _ = fs::remove_dir_all(&tmp);
    Ok(format!("{} files identical across 3 reruns", files.len()))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 12] = [
        (
            "Bill-splitting bit counts",
            bistromathics_counts,
            Some(Duration::from_millis(1)),
        ),
        ("Model-sharing and communication terms", model_term, None),
        (
            "Bound equals its topological decomposition",
            derivation_identity,
            Some(Duration::from_secs(1)),
        ),
        ("Optimal group count", group_optimum, Some(Duration::from_secs(1))),
        ("Critical temperature and cooling work", critical_point, None),
        (
            "Flow and cooling integrators",
            ode_fidelity,
            Some(Duration::from_secs(2)),
        ),
        (
            "Utility multilinearity and pressure sentinel",
            findability_properties,
            Some(Duration::from_secs(1)),
        ),
        (
            "Cascades against a flood-fill oracle",
            cascade_oracle,
            Some(Duration::from_secs(5)),
        ),
        ("Majority cycles", condorcet, Some(Duration::from_secs(5))),
        (
            "Descent trajectory diagnostics",
            mogd_diagnostics,
            Some(Duration::from_secs(10)),
        ),
        ("Hysteresis loop", hysteresis, Some(Duration::from_secs(30))),
        ("Bit-identical reruns", determinism, None),
    ];
    let mut failed = 0;
    for (i, (title, check, limit)) in criteria.iter().enumerate() {
        let start = Instant::now();
        let result = check();
        let elapsed = start.elapsed();
        let result = match (result, limit) {
            (Ok(_), Some(limit)) if elapsed > *limit => Err(format!("took {elapsed:?}, limit {limit:?}")),
            (r, _) => r,
        };
        match result {
            Ok(detail) => println!("PASS [{}] {title}: {detail} ({elapsed:.2?})", i + 1),
            Err(why) => {
                failed += 1;
                println!("FAIL [{}] {title}: {why} ({elapsed:.2?})", i + 1);
            }
        }
    }
    println!("{} of {} criteria passed", criteria.len() - failed, criteria.len());
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
