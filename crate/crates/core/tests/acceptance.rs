//! End-to-end acceptance checks. Prints one PASS/FAIL line per criterion and
//! exits nonzero if any criterion fails.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use tripartite::analytic::{exact_constants, ghz_avg_entropy, w_branch_data, BlochPoint};
use tripartite::ancilla::bound_mixed_state;
use tripartite::measurement::{average_entropy, decompose, ensemble_residual, sweep, MeasurementBasis};
use tripartite::optimality::{check_eigenbasis_condition, check_optimality};
use tripartite::optimizer::{brute_force_qubit, optimize, OptimizeConfig, Target};
use tripartite::perturbation::{all_directions, apply_et, perturbation_data};
use tripartite::states::{Dims, Part, TripartiteState};
use tripartite::CMatrix;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn timed(limit: Option<Duration>, f: impl FnOnce() -> Outcome) -> Outcome {
    let start = Instant::now();
    let mut o = f();
    let elapsed = start.elapsed();
    o.detail = format!("{}; {:.3}s", o.detail, elapsed.as_secs_f64());
    if let Some(limit) = limit {
        if elapsed > limit {
            o.pass = false;
            o.detail = format!("{} exceeds {}s", o.detail, limit.as_secs());
        }
    }
    o
}

/// True when `u` equals `v` up to a column permutation and column phases.
fn same_basis_up_to_phases(u: &CMatrix, v: &CMatrix, tol: f64) -> bool {
    let overlap = &u.adjoint() * v;
    let n = overlap.rows();
    (0..n).all(|r| {
        let big = (0..n).filter(|&c| overlap[(r, c)].norm() > 1.0 - tol).count();
        let small = (0..n).filter(|&c| overlap[(r, c)].norm() < tol.sqrt()).count();
        big == 1 && small == n - 1
    })
}

fn w_assistance() -> Outcome {
    let w = TripartiteState::w();
    let r = optimize(&w, Target::Max, &OptimizeConfig::default()).unwrap();
    let eig = MeasurementBasis::eigenbasis(&w).unwrap();
    let err = (r.value - 2.0 / 3.0).abs();
    let same = same_basis_up_to_phases(r.basis.matrix(), eig.matrix(), 1e-6);
    outcome(err <= 1e-6 && same, format!("E_A={:.12} |err|={err:.2e} eigenbasis match={same}", r.value))
}

fn w_formation() -> Outcome {
    let w = TripartiteState::w();
    let cfg = OptimizeConfig { seed: 1, ..Default::default() };
    let r = optimize(&w, Target::Min, &cfg).unwrap();
    let brute = brute_force_qubit(&w, 181).unwrap();
    let err = (r.value - exact_constants().w_ef).abs();
    let gap = (r.value - brute.min).abs();
    outcome(
        err <= 1e-6 && gap <= 1e-5,
        format!("E_F={:.12} |err|={err:.2e} brute-force gap={gap:.2e}", r.value),
    )
}

fn ghz_extremes() -> Outcome {
    let ghz = TripartiteState::ghz();
    let at = |t: f64| average_entropy(&ghz, &MeasurementBasis::bloch(t, 0.0)).unwrap();
    let lo = optimize(&ghz, Target::Min, &OptimizeConfig::default()).unwrap();
    let hi = optimize(&ghz, Target::Max, &OptimizeConfig::default()).unwrap();
    // cos²(θ/2) = |U₀₀|² locates the optimal Bloch angle
    let c_lo = lo.basis.matrix()[(0, 0)].norm_sqr();
    let c_hi = hi.basis.matrix()[(0, 0)].norm_sqr();
    let lo_at_pole = c_lo.min(1.0 - c_lo) <= 1e-8;
    let hi_at_equator = (c_hi - 0.5).abs() <= 1e-6;
    let pass = at(0.0) <= 1e-8
        && at(PI) <= 1e-8
        && (at(PI / 2.0) - 1.0).abs() <= 1e-8
        && lo.value.abs() <= 1e-8
        && (hi.value - 1.0).abs() <= 1e-8
        && lo_at_pole
        && hi_at_equator;
    outcome(
        pass,
        format!("E_F={:.3e} E_A={:.12} min at pole={lo_at_pole} max at equator={hi_at_equator}", lo.value, hi.value),
    )
}

fn figure_sweeps() -> Outcome {
    let w = sweep(&TripartiteState::w(), 181, 1).unwrap();
    let g = sweep(&TripartiteState::ghz(), 181, 1).unwrap();
    let mut worst: f64 = 0.0;
    for (pw, pg) in w.iter().zip(&g) {
        let bp = BlochPoint::new(pw.theta, pw.phi).unwrap();
        worst = worst.max((pw.avg_entropy - w_branch_data(bp).avg).abs());
        worst = worst.max((pg.avg_entropy - ghz_avg_entropy(bp)).abs());
    }
    let ends = [0, 180];
    let max_of = |v: &[tripartite::measurement::SweepPoint]| v.iter().map(|p| p.avg_entropy).fold(f64::MIN, f64::max);
    let min_of = |v: &[tripartite::measurement::SweepPoint]| v.iter().map(|p| p.avg_entropy).fold(f64::MAX, f64::min);
    let w_ok = ends.iter().all(|&k| w[k].avg_entropy >= max_of(&w) - 1e-12) && w[90].avg_entropy <= min_of(&w) + 1e-12;
    let g_ok = ends.iter().all(|&k| g[k].avg_entropy <= min_of(&g) + 1e-12) && g[90].avg_entropy >= max_of(&g) - 1e-12;
    outcome(
        worst <= 1e-10 && w_ok && g_ok,
        format!("max deviation {worst:.2e}; W extrema placed={w_ok} GHZ extrema placed={g_ok}"),
    )
}

fn optimality_condition() -> Outcome {
    let comp = MeasurementBasis::computational(2);
    let mut worst: f64 = 0.0;
    let mut worst_eig: f64 = 0.0;
    for s in [TripartiteState::w(), TripartiteState::ghz()] {
        worst = worst.max(check_optimality(&s, &comp, 1e-7).unwrap().worst_residual);
        worst_eig = worst_eig.max(check_eigenbasis_condition(&s, 1e-8).unwrap().worst_residual);
    }
    let delta = perturbation_data(&TripartiteState::w(), &comp, tripartite::perturbation::EtDirection::real(0, 1))
        .unwrap()
        .delta_ij;
    let off = 0.5 * FRAC_1_SQRT_2;
    let expected = CMatrix::from_fn(2, 2, |r, c| if r != c { tripartite::C64::new(off, 0.0) } else { tripartite::C64::new(0.0, 0.0) });
    let delta_err = delta.max_abs_diff(&expected);
    outcome(
        worst <= 1e-7 && worst_eig <= 1e-8 && delta_err <= 1e-12,
        format!("residual {worst:.2e}; eigenbasis residual {worst_eig:.2e}; W Δ₁₂ error {delta_err:.2e}"),
    )
}

fn perturbation_fd() -> Outcome {
    let h = 1e-5;
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_fd: f64 = 0.0;
    let mut worst_trace: f64 = 0.0;
    let mut checked = 0;
    for (dims, count) in [(Dims::new(2, 2, 2), 100), (Dims::new(3, 2, 4), 50)] {
        for _ in 0..count {
            let s = TripartiteState::haar_random_with(dims, &mut rng).unwrap();
            let u = MeasurementBasis::haar_random(dims.c, &mut rng);
            for dir in all_directions(dims.c) {
                let data = perturbation_data(&s, &u, dir).unwrap();
                let plus = average_entropy(&s, &apply_et(&u, dir, h).unwrap()).unwrap();
                let minus = average_entropy(&s, &apply_et(&u, dir, -h).unwrap()).unwrap();
                let fd = (plus - minus) / (2.0 * h);
                worst_fd = worst_fd.max((fd - data.sbar1).abs());
                worst_trace = worst_trace.max(data.rho_a1_ij.trace().norm()).max(data.rho_a1_ji.trace().norm());
                checked += 1;
            }
        }
    }
    outcome(
        worst_fd <= 1e-6 && worst_trace <= 1e-9,
        format!("{checked} directions; worst |S̄₁ − FD| {worst_fd:.2e}; worst |Tr ρ^A_1| {worst_trace:.2e}"),
    )
}

fn hjw_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let shapes = [Dims::new(2, 2, 2), Dims::new(3, 2, 4), Dims::new(2, 3, 3), Dims::new(3, 3, 2)];
    let mut worst: f64 = 0.0;
    for k in 0..100 {
        let dims = shapes[k % shapes.len()];
        let s = TripartiteState::haar_random_with(dims, &mut rng).unwrap();
        let u = MeasurementBasis::haar_random(dims.c, &mut rng);
        worst = worst.max(ensemble_residual(&s, &decompose(&s, &u).unwrap()));
    }
    outcome(worst <= 1e-9, format!("worst |Σ p_i ρ_i − ρ^S| {worst:.2e}"))
}

fn ancilla_monotonicity() -> Outcome {
    let cfg = OptimizeConfig { seed: 8, ..Default::default() };
    let mut cases = vec![
        ("W", TripartiteState::w().reduced_density(Part::AB)),
        ("GHZ", TripartiteState::ghz().reduced_density(Part::AB)),
    ];
    for seed in 0..10 {
        let s = TripartiteState::haar_random(Dims::new(2, 2, 2), 800 + seed).unwrap();
        cases.push(("random", s.reduced_density(Part::AB)));
    }
    let mut ok = true;
    let mut worst_violation: f64 = 0.0;
    let mut ghz_err: f64 = 0.0;
    for (name, rho) in &cases {
        let rows = bound_mixed_state(rho, 2, 2, &[1, 2, 4], &cfg).unwrap();
        for pair in rows.windows(2) {
            let v = (pair[1].ef_bound - pair[0].ef_bound).max(pair[0].ea_bound - pair[1].ea_bound);
            worst_violation = worst_violation.max(v);
        }
        if *name == "GHZ" {
            for r in &rows {
                ghz_err = ghz_err.max(r.ef_bound.abs()).max((r.ea_bound - 1.0).abs());
            }
        }
    }
    ok &= worst_violation <= 1e-6 && ghz_err <= 1e-6;
    outcome(
        ok,
        format!("{} states; worst monotonicity violation {worst_violation:.2e}; GHZ bound error {ghz_err:.2e}", cases.len()),
    )
}

fn oracle_equivalence() -> Outcome {
    let mut worst: f64 = 0.0;
    for seed in 0..25 {
        let s = TripartiteState::haar_random(Dims::new(2, 2, 2), 900 + seed).unwrap();
        let cfg = OptimizeConfig { seed, ..Default::default() };
        let lo = optimize(&s, Target::Min, &cfg).unwrap();
        let hi = optimize(&s, Target::Max, &cfg).unwrap();
        let brute = brute_force_qubit(&s, 61).unwrap();
        worst = worst.max((lo.value - brute.min).abs()).max((hi.value - brute.max).abs());
    }
    outcome(worst <= 1e-4, format!("25 states; worst optimizer/brute-force gap {worst:.2e}"))
}

fn main() -> ExitCode {
    let secs = |s: u64| Some(Duration::from_secs(s));
    let criteria: Vec<(&str, Option<Duration>, fn() -> Outcome)> = vec![
        ("W entanglement of assistance", secs(1), w_assistance),
        ("W entanglement of formation", secs(5), w_formation),
        ("GHZ extremes", secs(1), ghz_extremes),
        ("Bloch sweeps vs closed forms", secs(2), figure_sweeps),
        ("optimality condition", None, optimality_condition),
        ("first-order calculus vs finite differences", secs(30), perturbation_fd),
        ("ensemble reconstruction", None, hjw_consistency),
        ("ancilla bound monotonicity", secs(60), ancilla_monotonicity),
        ("optimizer vs brute force", None, oracle_equivalence),
    ];
    let mut failed = 0;
    for (n, (name, limit, run)) in criteria.into_iter().enumerate() {
        let o = timed(limit, run);
        if !o.pass {
            failed += 1;
        }
        println!("criterion {} {}: {} ({})", n + 1, name, if o.pass { "PASS" } else { "FAIL" }, o.detail);
    }
    if failed == 0 {
        println!("acceptance: all criteria passed");
        ExitCode::SUCCESS
    } else {
        println!("acceptance: {failed} criteria failed");
        ExitCode::FAILURE
    }
}
