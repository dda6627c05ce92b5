use std::cmp::Ordering;

use log::{info, warn};
use serde::Serialize;

use suretynet::cascade::{
    coupled_dominance_test, mixing_horizon, sample_stationary_losses, simulate_time_varying, Horizon, MixingCertificate,
    PairedLosses, SimulationConfig, StateVector, TimeVaryingNetwork,
};
use suretynet::exactdist::{brute_force_stationary, dag_stationary, independent_product_law, tv_distance, LAYERED_MAX_NODES};
use suretynet::meanfield::{centrality, expected_loss, solve_fixed_point, uplift_pct, CentralityVector, MeanFieldSolution};
use suretynet::netgraph::{
    check_assumption_monotone, layer_decomposition, load_path, load_snapshots, AssumptionReport, Severity,
};
use suretynet::synthgen::{
    anonymize_rewire, generate_random_network, impute_unobserved, AnonymizationConfig, GeneratorSpec, ImputationReport,
};
use suretynet::{ContractorNetwork, Role};

use crate::args::{
    CentralityArgs, Cli, Command, ExactArgs, GenerateArgs, MeanfieldArgs, ReportArgs, SimulateArgs, SolverArgs,
    SweepArgs,
};
use crate::output::{OutputSet, RunManifest};
use crate::CliError;

pub(crate) fn dispatch(cli: &Cli) -> Result<RunManifest, CliError> {
    let mut out = OutputSet::create(&cli.global.output_dir, cli.global.format)?;
    match &cli.command {
        Command::Validate => validate(cli, &mut out)?,
        Command::Meanfield(a) => meanfield(cli, a, &mut out)?,
        Command::Centrality(a) => centrality_cmd(cli, a, &mut out)?,
        Command::Simulate(a) => simulate(cli, a, &mut out)?,
        Command::Exact(a) => exact(cli, a, &mut out)?,
        Command::Generate(a) => generate(cli, a, &mut out)?,
        Command::Impute => impute(cli, &mut out)?,
        Command::Report(a) => report(cli, a, &mut out)?,
        Command::SweepAlpha(a) => sweep(cli, a, &mut out)?,
    }
    out.finish(cli)
}

fn load(cli: &Cli) -> Result<ContractorNetwork, CliError> {
    let path = cli.global.input.as_deref().ok_or(CliError::MissingInput(cli.command.name()))?;
    let net = load_path(path, &cli.global.validation())?;
    if let Some(first) = net.warnings().first() {
        warn!("{} validation warning(s); first: {first}", net.warnings().len());
    }
    info!("loaded {} nodes, {} edges from {}", net.n(), net.edge_count(), path.display());
    Ok(net)
}

fn validate(cli: &Cli, out: &mut OutputSet) -> Result<(), CliError> {
    let net = load(cli)?;
    debug_assert!(net.warnings().iter().all(|d| d.severity == Severity::Warning));
    out.json("diagnostics", net.warnings())
}

#[derive(Debug, Clone, Serialize)]
struct AssumptionSummary {
    intermediaries: usize,
    satisfied: usize,
    all_satisfied: bool,
    all_reversed: bool,
    delta: Option<f64>,
    min_margin: Option<f64>,
}

impl From<&AssumptionReport> for AssumptionSummary {
    fn from(r: &AssumptionReport) -> Self {
        AssumptionSummary {
            intermediaries: r.intermediaries.len(),
            satisfied: r.intermediaries.iter().filter(|m| m.satisfied).count(),
            all_satisfied: r.all_satisfied,
            all_reversed: r.all_reversed,
            delta: r.delta,
            min_margin: r.intermediaries.iter().map(|m| m.margin).min_by(f64::total_cmp),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
struct Expectations {
    expected_loss_independent: f64,
    expected_loss_network: f64,
    uplift_pct: Option<f64>,
    uplift_note: Option<String>,
}

fn expectations(net: &ContractorNetwork, m: &[f64]) -> Result<Expectations, CliError> {
    let independent = expected_loss(net, net.r())?;
    let network = expected_loss(net, m)?;
    let uplift = uplift_pct(independent, network);
    Ok(Expectations {
        expected_loss_independent: independent,
        expected_loss_network: network,
        uplift_pct: uplift,
        uplift_note: uplift
            .is_none()
            .then(|| "undefined: the independent expected loss beta^T r is zero".to_string()),
    })
}

#[derive(Serialize)]
struct MeanFieldRow<'a> {
    node_id: &'a str,
    r: f64,
    m: f64,
    m_minus_r: f64,
    u: f64,
    u_tilde: f64,
}

fn meanfield_rows<'a>(net: &'a ContractorNetwork, m: &[f64], c: &CentralityVector) -> Vec<MeanFieldRow<'a>> {
    (0..net.n())
        .map(|i| MeanFieldRow {
            node_id: &net.node(i).id,
            r: net.r()[i],
            m: m[i],
            m_minus_r: m[i] - net.r()[i],
            u: c.u[i],
            u_tilde: c.u_tilde[i],
        })
        .collect()
}

#[derive(Serialize)]
struct MeanFieldSummary {
    n: usize,
    edges: usize,
    is_dag: bool,
    depth: Option<usize>,
    method: suretynet::meanfield::SolveMethod,
    iterations: usize,
    residual: f64,
    #[serde(flatten)]
    expectations: Expectations,
    assumption: AssumptionSummary,
}

fn solve_all(net: &ContractorNetwork, solver: &SolverArgs) -> Result<(MeanFieldSolution, CentralityVector), CliError> {
    let cfg = solver.config();
    let sol = solve_fixed_point(net, &cfg)?;
    let c = centrality(net, &cfg)?;
    Ok((sol, c))
}

fn meanfield(cli: &Cli, a: &MeanfieldArgs, out: &mut OutputSet) -> Result<(), CliError> {
    let net = load(cli)?;
    let (sol, c) = solve_all(&net, &a.solver)?;
    out.table("meanfield", &meanfield_rows(&net, &sol.m, &c))?;
    let layers = layer_decomposition(&net);
    let summary = MeanFieldSummary {
        n: net.n(),
        edges: net.edge_count(),
        is_dag: layers.is_dag,
        depth: layers.depth,
        method: sol.method,
        iterations: sol.iterations,
        residual: sol.residual,
        expectations: expectations(&net, &sol.m)?,
        assumption: (&check_assumption_monotone(&net)).into(),
    };
    out.json("summary", &summary)
}

#[derive(Serialize)]
struct CentralityRow<'a> {
    measure: &'static str,
    rank: usize,
    node_id: &'a str,
    role: String,
    value: f64,
}

/// Top `k` by `u` and by `u_tilde`. Pure obligees have no obligees to drag
/// down and are never listed.
fn top_k<'a>(net: &'a ContractorNetwork, c: &CentralityVector, k: usize) -> Vec<CentralityRow<'a>> {
    let mut rows = Vec::new();
    for (measure, values) in [("u", &c.u), ("u_tilde", &c.u_tilde)] {
        let mut idx: Vec<usize> = (0..net.n()).filter(|&i| net.role(i) != Role::PureObligee).collect();
        idx.sort_by(|&a, &b| values[b].partial_cmp(&values[a]).unwrap_or(Ordering::Equal).then(a.cmp(&b)));
        rows.extend(idx.into_iter().take(k).enumerate().map(|(rank, i)| CentralityRow {
            measure,
            rank: rank + 1,
            node_id: &net.node(i).id,
            role: net.role(i).to_string(),
            value: values[i],
        }));
    }
    rows
}

fn centrality_cmd(cli: &Cli, a: &CentralityArgs, out: &mut OutputSet) -> Result<(), CliError> {
    let net = load(cli)?;
    let c = centrality(&net, &a.solver.config())?;
    out.table("centrality_top", &top_k(&net, &c, a.top))
}

#[derive(Serialize)]
struct LossRow {
    replication: usize,
    loss_t0: f64,
    loss_stationary: f64,
}

#[derive(Debug, Clone, Serialize)]
struct QuantileRow {
    q: f64,
    t0_point: f64,
    t0_lo: f64,
    t0_hi: f64,
    stat_point: f64,
    stat_lo: f64,
    stat_hi: f64,
}

fn quantile_rows(p: &PairedLosses) -> Vec<QuantileRow> {
    p.t0.quantiles
        .iter()
        .zip(&p.stationary.quantiles)
        .map(|(a, b)| QuantileRow {
            q: a.q,
            t0_point: a.point,
            t0_lo: a.lower,
            t0_hi: a.upper,
            stat_point: b.point,
            stat_lo: b.lower,
            stat_hi: b.upper,
        })
        .collect()
}

fn loss_rows(p: &PairedLosses) -> Vec<LossRow> {
    p.per_replication
        .iter()
        .enumerate()
        .map(|(replication, &(loss_t0, loss_stationary))| LossRow {
            replication,
            loss_t0,
            loss_stationary,
        })
        .collect()
}

#[derive(Serialize)]
struct SimulationSummary {
    replications: usize,
    horizon: usize,
    mixing: Option<MixingCertificate>,
    confidence: f64,
    mean_loss_t0: f64,
    mean_loss_stationary: f64,
    standard_error_t0: f64,
    standard_error_stationary: f64,
    quantiles: Vec<QuantileRow>,
}

fn simulation_summary(net: &ContractorNetwork, cfg: &SimulationConfig, p: &PairedLosses) -> SimulationSummary {
    let mixing = (cfg.horizon == Horizon::Auto).then(|| mixing_horizon(&cfg.effective_network(net), cfg.epsilon));
    SimulationSummary {
        replications: cfg.replications,
        horizon: p.horizon,
        mixing,
        confidence: cfg.confidence,
        mean_loss_t0: p.t0.mean,
        mean_loss_stationary: p.stationary.mean,
        standard_error_t0: p.t0.standard_error(),
        standard_error_stationary: p.stationary.standard_error(),
        quantiles: quantile_rows(p),
    }
}

#[derive(Serialize)]
struct DominanceRow {
    t: usize,
    epsilon: f64,
    survival: f64,
}

#[derive(Serialize)]
struct CoalescenceRow {
    t: usize,
    tv_bound: f64,
    product_bound: f64,
    uncoalesced_fraction: f64,
    mean_discrepancy: f64,
}

fn simulate(cli: &Cli, a: &SimulateArgs, out: &mut OutputSet) -> Result<(), CliError> {
    let cfg = a.sim.config(cli.global.seed);
    if a.time_varying {
        return simulate_snapshots(cli, a, &cfg, out);
    }
    let net = load(cli)?;
    let paired = sample_stationary_losses(&net, &cfg)?;
    info!("simulated {} replications to horizon {}", cfg.replications, paired.horizon);
    out.table("losses", &loss_rows(&paired))?;
    out.table("quantiles", &quantile_rows(&paired))?;
    let mut summary = serde_json::to_value(simulation_summary(&net, &cfg, &paired))?;
    if a.dominance {
        let mut eps = if a.thresholds.is_empty() {
            paired.stationary.quantiles.iter().map(|q| q.point).collect()
        } else {
            a.thresholds.clone()
        };
        eps.sort_by(f64::total_cmp);
        eps.dedup();
        let rep = coupled_dominance_test(&net, &cfg, &eps)?;
        let rows: Vec<DominanceRow> = rep
            .survival_curves
            .iter()
            .map(|p| DominanceRow {
                t: p.t,
                epsilon: p.epsilon,
                survival: p.survival,
            })
            .collect();
        out.table("dominance", &rows)?;
        summary["dominance"] = serde_json::json!({
            "exploratory": rep.exploratory,
            "mean_field_monotone": rep.mean_field_monotone,
            "pathwise_monotone": rep.pathwise_monotone,
            "violations": rep.violations,
        });
    }
    out.json("summary", &summary)
}

fn simulate_snapshots(cli: &Cli, a: &SimulateArgs, cfg: &SimulationConfig, out: &mut OutputSet) -> Result<(), CliError> {
    let dir = cli.global.input.as_deref().ok_or(CliError::MissingInput("simulate --time-varying"))?;
    if !dir.is_dir() {
        return Err(CliError::Usage("--time-varying needs a snapshot directory as --input".into()));
    }
    let snapshots = load_snapshots(dir, &cli.global.validation())?;
    let alpha_bar = match a.alpha_bar {
        Some(b) => b,
        None => snapshots
            .iter()
            .flat_map(|s| (0..s.n()).filter(|&i| s.role(i) != Role::PureObligee).map(|i| s.alpha()[i]))
            .fold(0.0, f64::max),
    };
    let tv = TimeVaryingNetwork::new(snapshots, alpha_bar)?;
    let n = tv.n();
    let rep = simulate_time_varying(&tv, &StateVector::zeros(n), &StateVector::ones(n), cfg)?;
    let rows: Vec<CoalescenceRow> = (0..rep.tv_bound.len())
        .map(|t| CoalescenceRow {
            t,
            tv_bound: rep.tv_bound[t],
            product_bound: rep.product_bound[t],
            uncoalesced_fraction: rep.uncoalesced_fraction[t],
            mean_discrepancy: rep.mean_discrepancy[t],
        })
        .collect();
    out.table("coalescence", &rows)?;
    out.json(
        "summary",
        &serde_json::json!({
            "snapshots": tv.snapshots().len(),
            "alpha_bar": alpha_bar,
            "replications": rep.replications,
            "horizon": rows.len() - 1,
            "start_states": ["all zero", "all one"],
        }),
    )
}

#[derive(Serialize)]
struct JointRow {
    /// Character `k` is the state of node `k`.
    state_bits: String,
    probability: f64,
}

fn joint_rows(n: usize, probs: &[f64]) -> Vec<JointRow> {
    probs
        .iter()
        .enumerate()
        .map(|(s, &p)| JointRow {
            state_bits: (0..n).map(|k| if s >> k & 1 == 1 { '1' } else { '0' }).collect(),
            probability: p,
        })
        .collect()
}

fn exact(cli: &Cli, a: &ExactArgs, out: &mut OutputSet) -> Result<(), CliError> {
    let net = load(cli)?;
    let layers = layer_decomposition(&net);
    let (law, method) = if layers.is_dag && net.n() <= LAYERED_MAX_NODES {
        (dag_stationary(&net)?, "layered")
    } else {
        (brute_force_stationary(&net, a.t_max)?, "dense_kernel")
    };
    out.table("joint", &joint_rows(net.n(), law.probabilities()))?;
    let ids: Vec<&str> = net.nodes().iter().map(|v| v.id.as_str()).collect();
    let mut summary = serde_json::json!({
        "method": method,
        "n": net.n(),
        "states": law.probabilities().len(),
        "total_probability": law.total(),
        "node_ids": ids,
        "marginals": law.marginals(),
    });
    if a.independent {
        let m = solve_fixed_point(&net, &Default::default())?.m;
        let ind = independent_product_law(&net, &m)?;
        out.table("joint_independent", &joint_rows(net.n(), ind.probabilities()))?;
        summary["tv_to_independent"] = tv_distance(&law, &ind)?.into();
    }
    out.json("summary", &summary)
}

#[derive(Serialize)]
struct NetworkSummary {
    n: usize,
    edges: usize,
    principals: usize,
    intermediaries: usize,
    obligees: usize,
    is_dag: bool,
    depth: Option<usize>,
    assumption: AssumptionSummary,
}

fn network_summary(net: &ContractorNetwork) -> NetworkSummary {
    let count = |role| net.roles().iter().filter(|&&r| r == role).count();
    let layers = layer_decomposition(net);
    NetworkSummary {
        n: net.n(),
        edges: net.edge_count(),
        principals: count(Role::PurePrincipal),
        intermediaries: count(Role::Intermediary),
        obligees: count(Role::PureObligee),
        is_dag: layers.is_dag,
        depth: layers.depth,
        assumption: (&check_assumption_monotone(net)).into(),
    }
}

fn generator_spec(a: &GenerateArgs, cli: &Cli) -> Result<GeneratorSpec, CliError> {
    let mut spec: GeneratorSpec = match &a.spec {
        Some(p) => {
            let bytes = std::fs::read(p).map_err(|source| CliError::Io { path: p.clone(), source })?;
            serde_json::from_slice(&bytes)?
        }
        None => GeneratorSpec::default(),
    };
    macro_rules! set {
        ($($field:ident).+ = $v:expr) => {
            if let Some(v) = $v {
                spec.$($field).+ = v.into();
            }
        };
    }
    set!(n = a.n);
    set!(depth = a.depth);
    set!(max_in_degree = a.max_in_degree);
    set!(role_fractions.principal = a.principal_fraction);
    set!(role_fractions.intermediary = a.intermediary_fraction);
    set!(role_fractions.obligee = a.obligee_fraction);
    set!(assumption_mode = a.assumption_mode);
    set!(unobserved_share = a.unobserved_share);
    set!(segments = a.segments);
    set!(intermediary_alpha = cli.global.intermediary_alpha);
    Ok(spec)
}

fn generate(cli: &Cli, a: &GenerateArgs, out: &mut OutputSet) -> Result<(), CliError> {
    let net = if cli.global.input.is_some() {
        let source = load(cli)?;
        let cfg = AnonymizationConfig {
            seed: cli.global.seed,
            laplace_scale_r: a.noise_scale_r,
            laplace_scale_beta: a.noise_scale_beta,
            laplace_scale_bond: a.noise_scale_bond,
            rescale_r: a.rescale_r,
            rescale_beta: a.rescale_beta,
            rescale_bond: a.rescale_bond,
        };
        out.resolve(&cfg)?;
        anonymize_rewire(&source, &cfg)?
    } else {
        let spec = generator_spec(a, cli)?;
        out.resolve(&spec)?;
        generate_random_network(&spec, cli.global.seed)?
    };
    out.network(&net)?;
    out.json("summary", &network_summary(&net))
}

fn impute(cli: &Cli, out: &mut OutputSet) -> Result<(), CliError> {
    let net = load(cli)?;
    let (imputed, report) = impute_unobserved(&net)?;
    out.network(&imputed)?;
    out.json("imputation", &report)
}

#[derive(Serialize)]
struct ReportSummary {
    n: usize,
    edges: usize,
    #[serde(flatten)]
    expectations: Expectations,
    simulation: SimulationSummary,
    assumption: AssumptionSummary,
    imputation: Option<ImputationSummary>,
}

#[derive(Serialize)]
struct ImputationSummary {
    dummies_added: usize,
    assumption: String,
}

impl From<&ImputationReport> for ImputationSummary {
    fn from(r: &ImputationReport) -> Self {
        ImputationSummary {
            dummies_added: r.dummies_added,
            assumption: r.assumption.clone(),
        }
    }
}

fn report(cli: &Cli, a: &ReportArgs, out: &mut OutputSet) -> Result<(), CliError> {
    let mut net = load(cli)?;
    let mut imputation = None;
    if a.impute {
        let (imputed, rep) = impute_unobserved(&net)?;
        out.json("imputation", &rep)?;
        imputation = Some((&rep).into());
        net = imputed;
    }
    let cfg = a.sim.config(cli.global.seed);
    // Mean field and centrality describe the network that is simulated.
    let analysed = cfg.effective_network(&net);
    let (sol, c) = solve_all(&analysed, &a.solver)?;
    out.table("meanfield", &meanfield_rows(&analysed, &sol.m, &c))?;
    out.table("centrality_top", &top_k(&analysed, &c, a.top))?;
    let paired = sample_stationary_losses(&net, &cfg)?;
    out.table("quantiles", &quantile_rows(&paired))?;
    out.table("losses", &loss_rows(&paired))?;
    let summary = ReportSummary {
        n: analysed.n(),
        edges: analysed.edge_count(),
        expectations: expectations(&analysed, &sol.m)?,
        simulation: simulation_summary(&net, &cfg, &paired),
        assumption: (&check_assumption_monotone(&analysed)).into(),
        imputation,
    };
    out.json("summary", &summary)
}

#[derive(Serialize)]
struct SweepRow {
    alpha: f64,
    q: f64,
    t0_point: f64,
    stat_point: f64,
    stat_lo: f64,
    stat_hi: f64,
}

#[derive(Serialize)]
struct Trend {
    q: f64,
    nondecreasing: bool,
    nonincreasing: bool,
    /// Either of the two above.
    monotone: bool,
}

fn sweep(cli: &Cli, a: &SweepArgs, out: &mut OutputSet) -> Result<(), CliError> {
    if a.grid < 2 {
        return Err(CliError::Usage("--grid needs at least two points".into()));
    }
    if a.sim.alpha_override.is_some() {
        warn!("--alpha-override is ignored by sweep-alpha");
    }
    let net = load(cli)?;
    let mut rows = Vec::new();
    let mut expected = Vec::new();
    let mut per_q: Vec<Vec<f64>> = vec![Vec::new(); a.sim.quantiles.len()];
    for k in 0..a.grid {
        let alpha = k as f64 / (a.grid - 1) as f64;
        let cfg = SimulationConfig {
            alpha_override: Some(alpha),
            ..a.sim.config(cli.global.seed)
        };
        let eff = cfg.effective_network(&net);
        let m = solve_fixed_point(&eff, &a.solver.config())?.m;
        let e = expectations(&eff, &m)?;
        expected.push(serde_json::json!({
            "alpha": alpha,
            "expected_loss_network": e.expected_loss_network,
            "uplift_pct": e.uplift_pct,
        }));
        let paired = sample_stationary_losses(&net, &cfg)?;
        for (j, row) in quantile_rows(&paired).into_iter().enumerate() {
            per_q[j].push(row.stat_point);
            rows.push(SweepRow {
                alpha,
                q: row.q,
                t0_point: row.t0_point,
                stat_point: row.stat_point,
                stat_lo: row.stat_lo,
                stat_hi: row.stat_hi,
            });
        }
    }
    out.table("sweep", &rows)?;
    let trends: Vec<Trend> = a
        .sim
        .quantiles
        .iter()
        .zip(&per_q)
        .map(|(&q, pts)| {
            let nondecreasing = pts.windows(2).all(|w| w[0] <= w[1]);
            let nonincreasing = pts.windows(2).all(|w| w[0] >= w[1]);
            Trend {
                q,
                nondecreasing,
                nonincreasing,
                monotone: nondecreasing || nonincreasing,
            }
        })
        .collect();
    out.json(
        "summary",
        &serde_json::json!({
            "grid": a.grid,
            "replications": a.sim.reps,
            "trends": trends,
            "expected_losses": expected,
        }),
    )
}
