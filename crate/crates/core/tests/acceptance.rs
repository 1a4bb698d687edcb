//! Acceptance run: one pass/fail line per criterion.
//!
//! Built with `harness = false`; exits non-zero if any criterion fails.

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use maropf::bess::{discharge_energy, exact_conversion, lower_bound_conversion, Mode};
use maropf::conditions::check_conditions;
use maropf::conic::DEFAULT_TOL;
use maropf::grid::{graph_matrices, NetworkCase};
use maropf::maropf::{
    bound_ordering_violation, build_relaxed_linear, build_ropf, default_initial_guess,
    enumerate_modes_optimum, iterate_maropf, solve_program, tightness, IterateOptions,
    IterationOutcome, ModeGuess, DEFAULT_PATTERN_LIMIT,
};
use maropf::pf::{solve_pf, validate};
use maropf::scenario::{bundled_case, gen_synthetic, BUNDLED};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const MARGIN_TOL: f64 = 1e-6;
const TIGHT_TOL: f64 = 1e-6;
const ORDER_TOL: f64 = 1e-6;
const DISCHARGE_TOL: f64 = 1e-9;
const ENUM_TOL: f64 = 1e-6;
const PF_CLOSED_TOL: f64 = 1e-12;
const PF_RESIDUAL_TOL: f64 = 1e-10;

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

fn inverted(guess: ModeGuess) -> ModeGuess {
    guess
        .into_iter()
        .map(|row| row.into_iter().map(Mode::flipped).collect())
        .collect()
}

/// Runs of the generated-feeder sweep shared by criteria 1 to 3.
struct Sweep {
    feeders: usize,
    skipped: Vec<String>,
    runs: Vec<(String, IterationOutcome)>,
    errors: Vec<String>,
    elapsed: Duration,
}

fn sweep() -> Sweep {
    let start = Instant::now();
    let opts = IterateOptions::default();
    let mut out = Sweep {
        feeders: 0,
        skipped: Vec::new(),
        runs: Vec::new(),
        errors: Vec::new(),
        elapsed: Duration::ZERO,
    };
    for spec in common::feeder_specs() {
        let label = format!("seed {} ({} nodes, T={})", spec.seed, spec.nodes, spec.steps);
        let case = match gen_synthetic(&spec).and_then(|f| f.into_case()) {
            Ok(c) => c,
            Err(e) => {
                out.errors.push(format!("{label}: {e}"));
                continue;
            }
        };
        match check_conditions(&case) {
            Ok(r) if r.all_pass() => {}
            Ok(r) => {
                out.skipped.push(format!("{label}: {:?}", r.failed()));
                continue;
            }
            Err(e) => {
                out.errors.push(format!("{label}: {e}"));
                continue;
            }
        }
        out.feeders += 1;
        let guesses = [
            ("default", default_initial_guess(&case)),
            ("inverted", inverted(default_initial_guess(&case))),
        ];
        for (kind, guess) in guesses {
            match iterate_maropf(&case, Some(guess), &opts) {
                Ok(run) => out.runs.push((format!("{label} {kind}"), run)),
                Err(e) => out.errors.push(format!("{label} {kind}: {e}")),
            }
        }
    }
    out.elapsed = start.elapsed();
    out
}

fn case_of(label: &str, sweep_specs: &[maropf::scenario::SyntheticSpec]) -> NetworkCase {
    let seed: u64 = label
        .strip_prefix("seed ")
        .and_then(|s| s.split(' ').next())
        .and_then(|s| s.parse().ok())
        .expect("label carries seed");
    let spec = sweep_specs.iter().find(|s| s.seed == seed).expect("known seed");
    gen_synthetic(spec).unwrap().into_case().unwrap()
}

fn criterion_1(s: &Sweep) -> Outcome {
    let mut worst = f64::INFINITY;
    let mut where_worst = String::new();
    let mut iterates = 0;
    for (label, run) in &s.runs {
        for (k, (_, report)) in run.iterates.iter().enumerate() {
            iterates += 1;
            let m = report.margins.min();
            if m < worst {
                worst = m;
                where_worst = format!("{label} iter {k}");
            }
        }
    }
    let pass = s.feeders >= 20
        && s.errors.is_empty()
        && worst >= -MARGIN_TOL
        && s.elapsed <= Duration::from_secs(600);
    let mut detail = format!(
        "{} feeders passing C1-C4, {} runs, {iterates} iterates, worst margin {worst:.3e} ({where_worst}), {:.1}s",
        s.feeders,
        s.runs.len(),
        s.elapsed.as_secs_f64()
    );
    if !s.skipped.is_empty() {
        detail += &format!("; skipped {:?}", s.skipped);
    }
    if !s.errors.is_empty() {
        detail += &format!("; errors {:?}", s.errors);
    }
    outcome(pass, detail)
}

fn criterion_2(s: &Sweep) -> Outcome {
    let specs = common::feeder_specs();
    let mut conversion = 0.0f64;
    let mut cone = 0.0f64;
    let mut converged = 0;
    for (label, run) in s.runs.iter().filter(|(_, r)| r.converged) {
        converged += 1;
        let case = case_of(label, &specs);
        let t = tightness(&case, &run.solution);
        conversion = conversion.max(t.conversion);
        cone = cone.max(t.line_cone);
    }
    outcome(
        converged > 0 && conversion <= TIGHT_TOL && cone <= TIGHT_TOL,
        format!("{converged} converged optima, conversion gap {conversion:.3e}, line cone gap {cone:.3e}"),
    )
}

fn criterion_3(s: &Sweep) -> Outcome {
    let worst = s
        .runs
        .iter()
        .flat_map(|(_, r)| r.iterates.iter())
        .map(|(sol, _)| bound_ordering_violation(sol))
        .fold(0.0f64, f64::max);
    let with_aux = s
        .runs
        .iter()
        .flat_map(|(_, r)| r.iterates.iter())
        .all(|(sol, _)| sol.aux.is_some());
    outcome(
        with_aux && worst <= ORDER_TOL,
        format!("worst ordering violation {worst:.3e}"),
    )
}

fn criterion_4() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let mut failures = 0;
    let draws = 10_000;
    for _ in 0..draws {
        let spec = common::random_spec(&mut rng);
        let p_r = if rng.gen_bool(0.02) { 0.0 } else { rng.gen_range(-2.0..2.0) };
        let exact = exact_conversion(p_r, &spec);
        if (exact - common::terminal_power(p_r, &spec)).abs() > 1e-15 {
            failures += 1;
        }
        for guess in [Mode::Charging, Mode::Discharging] {
            let lower = lower_bound_conversion(p_r, guess, &spec);
            let matches = p_r == 0.0 || Mode::of(p_r) == guess;
            if lower > exact || (lower == exact) != matches {
                failures += 1;
            }
        }
    }
    outcome(failures == 0, format!("{draws} draws, {failures} failures"))
}

fn criterion_5() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut worst = 0.0f64;
    let trajectories = 1_000;
    for k in 0..trajectories {
        let spec = common::random_spec(&mut rng);
        let len = rng.gen_range(1..=48);
        let dt = rng.gen_range(0.1..1.0);
        let p_r: Vec<f64> = (0..len)
            .map(|_| {
                // every fourth trajectory is pure discharge
                if k % 4 == 0 {
                    -rng.gen_range(0.0..1.0)
                } else {
                    rng.gen_range(-1.0..1.0)
                }
            })
            .collect();
        let p_b: Vec<f64> = p_r.iter().map(|&p| exact_conversion(p, &spec)).collect();
        let formula = discharge_energy(&p_b, &p_r, &spec, dt).unwrap();
        let oracle = if k % 4 == 0 {
            -p_r.iter().sum::<f64>() * dt
        } else {
            common::reservoir_outflow(&p_r, dt)
        };
        worst = worst.max((formula - oracle).abs());
    }
    outcome(
        worst <= DISCHARGE_TOL,
        format!("{trajectories} trajectories, worst error {worst:.3e}"),
    )
}

fn criterion_6() -> Outcome {
    let opts = IterateOptions::default();
    let mut pass = true;
    let mut parts = Vec::new();
    for name in BUNDLED {
        let case = bundled_case(name).unwrap();
        let start = Instant::now();
        match iterate_maropf(&case, None, &opts) {
            Ok(run) => {
                let secs = start.elapsed().as_secs_f64();
                let flips = run.log.entries.last().map_or(usize::MAX, |e| e.flips);
                let ok = run.converged && flips == 0 && run.iterations() <= 5 && secs <= 60.0;
                pass &= ok;
                parts.push(format!("{name} {} it {secs:.2}s", run.iterations()));
            }
            Err(e) => {
                pass = false;
                parts.push(format!("{name} error: {e}"));
            }
        }
    }
    outcome(pass, parts.join(", "))
}

fn criterion_7() -> Outcome {
    let case = bundled_case("case2-arbitrage").unwrap();
    let run = iterate_maropf(&case, None, &IterateOptions::default());
    let all = enumerate_modes_optimum(&case, DEFAULT_PATTERN_LIMIT, DEFAULT_TOL, MARGIN_TOL);
    match (run, all) {
        (Ok(run), Ok(all)) => {
            let cap = &case.batteries[0].spec;
            let e_max = run
                .report
                .batteries[0]
                .energy
                .iter()
                .copied()
                .fold(f64::NEG_INFINITY, f64::max);
            let non_binding = e_max < cap.soc_max * cap.e_cap - 1e-3;
            let diff = (run.solution.objective - all.solution.objective).abs();
            outcome(
                run.converged && non_binding && diff <= ENUM_TOL,
                format!(
                    "iterate {:.9}, enumeration {:.9} over {} patterns, diff {diff:.3e}",
                    run.solution.objective, all.solution.objective, all.patterns
                ),
            )
        }
        (Err(e), _) | (_, Err(e)) => outcome(false, format!("error: {e}")),
    }
}

fn criterion_8a() -> Outcome {
    let case = bundled_case("case5-pv-surplus").unwrap();
    let result = (|| -> maropf::Result<Outcome> {
        let (_, linear) = solve_program(&build_relaxed_linear(&case)?, DEFAULT_TOL)?;
        let report = validate(&case, &linear, MARGIN_TOL)?;
        let run = iterate_maropf(&case, None, &IterateOptions::default())?;
        let simultaneous = linear.batteries.iter().any(|b| {
            match (&b.p_charge, &b.p_discharge) {
                (Some(c), Some(d)) => c.iter().zip(d).any(|(c, d)| c.min(*d) > 1e-4),
                _ => false,
            }
        });
        let soc = report.margins.soc_lower.min(report.margins.soc_upper);
        let ordered = linear.objective <= run.solution.objective + 1e-6;
        Ok(outcome(
            simultaneous && soc < -MARGIN_TOL && ordered,
            format!(
                "simultaneous {simultaneous}, validated soc margin {soc:.3e}, objective {:.6} vs maropf {:.6}",
                linear.objective, run.solution.objective
            ),
        ))
    })();
    result.unwrap_or_else(|e| outcome(false, format!("error: {e}")))
}

fn criterion_8b() -> Outcome {
    let case = bundled_case("case5-highpv").unwrap();
    let result = (|| -> maropf::Result<Outcome> {
        let (_, ropf) = solve_program(&build_ropf(&case)?, DEFAULT_TOL)?;
        let ropf_report = validate(&case, &ropf, MARGIN_TOL)?;
        let run = iterate_maropf(&case, None, &IterateOptions::default())?;
        let vup = ropf_report.margins.v_upper;
        Ok(outcome(
            vup < 0.0 && run.report.feasible,
            format!(
                "ropf upper-voltage margin {vup:.3e}, maropf feasible {} (min margin {:.3e})",
                run.report.feasible,
                run.report.margins.min()
            ),
        ))
    })();
    result.unwrap_or_else(|e| outcome(false, format!("error: {e}")))
}

fn criterion_9() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut closed = 0.0f64;
    for _ in 0..200 {
        let z = Complex64::new(rng.gen_range(0.001..0.05), rng.gen_range(0.001..0.05));
        let u = Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-0.5..0.5));
        let v0 = rng.gen_range(0.95..1.05);
        let mut case = common::random_tree(&mut rng, 1);
        case.v0 = v0;
        case.lines[0].r = z.re;
        case.lines[0].x = z.im;
        let state = match solve_pf(&case, &[u], 0) {
            Ok(s) => s,
            Err(e) => return outcome(false, format!("one-line sweep failed: {e}")),
        };
        let (f, v, s) = common::one_line_closed_form(z, u, v0);
        closed = closed
            .max((state.f[0] - f).abs())
            .max((state.v[0] - v).abs())
            .max((state.s[0] - s).norm());
    }
    let mut residual = 0.0f64;
    let mut sweeps = 0;
    let mut cases: Vec<NetworkCase> = BUNDLED.iter().map(|n| bundled_case(n).unwrap()).collect();
    cases.extend(
        common::feeder_specs()
            .iter()
            .map(|s| gen_synthetic(s).unwrap().into_case().unwrap()),
    );
    for case in &cases {
        for t in 0..case.horizon() {
            let inj: Vec<Complex64> = (0..case.n_lines()).map(|l| case.net_load[l][t]).collect();
            match solve_pf(case, &inj, t) {
                Ok(s) => {
                    sweeps += 1;
                    residual = residual.max(s.residual);
                }
                Err(e) => return outcome(false, format!("{}: {e}", case.name)),
            }
        }
    }
    outcome(
        closed <= PF_CLOSED_TOL && residual <= PF_RESIDUAL_TOL,
        format!("closed-form error {closed:.3e}, worst residual {residual:.3e} over {sweeps} sweeps"),
    )
}

fn criterion_10() -> Outcome {
    let mut base = bundled_case("case34like").unwrap();
    let mut big = base.clone();
    for line in &mut base.lines {
        line.r = 0.0;
        line.x = 0.0;
    }
    for line in &mut big.lines {
        line.r *= 1000.0;
        line.x *= 1000.0;
    }
    let zero = check_conditions(&base).unwrap();
    let scaled = check_conditions(&big).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let mut exact = 0;
    for _ in 0..100 {
        let n = rng.gen_range(1..=40);
        let case = common::random_tree(&mut rng, n);
        let gm = graph_matrices(&case);
        let id = DMatrix::<i64>::identity(n, n);
        if &gm.h * (&id - &gm.g) == id {
            exact += 1;
        }
    }
    outcome(
        zero.all_pass() && !scaled.c1 && exact == 100,
        format!(
            "zero impedance pass {}, x1000 C1 {} (norm {:.3e}), H(I-G)=I on {exact}/100 trees",
            zero.all_pass(),
            scaled.c1,
            scaled.e_norm
        ),
    )
}

fn main() -> ExitCode {
    let s = sweep();
    let criteria: Vec<(&str, Box<dyn Fn() -> Outcome + '_>)> = vec![
        ("1 feasibility", Box::new(|| criterion_1(&s))),
        ("2 tightness", Box::new(|| criterion_2(&s))),
        ("3 bound ordering", Box::new(|| criterion_3(&s))),
        ("4 lower-bound conversion", Box::new(criterion_4)),
        ("5 discharge energy", Box::new(criterion_5)),
        ("6 convergence", Box::new(criterion_6)),
        ("7 enumeration optimum", Box::new(criterion_7)),
        ("8a relaxed-linear baseline", Box::new(criterion_8a)),
        ("8b ropf baseline", Box::new(criterion_8b)),
        ("9 power flow oracle", Box::new(criterion_9)),
        ("10 conditions checker", Box::new(criterion_10)),
    ];
    let mut failed = 0;
    for (name, run) in &criteria {
        let o = run();
        if !o.pass {
            failed += 1;
        }
        println!("criterion {name}: {} | {}", if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    if failed == 0 {
        println!("acceptance: all criteria pass");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
