//! Seeded Monte-Carlo runs of the networked estimator, learning curves and
//! the comparison against the steady-state theory.

use nalgebra::DVector;
use rayon::prelude::*;
use serde::Serialize;

use crate::algorithm::{Channels, NetworkState, Observation, PdrlsNetwork};
use crate::config::ExperimentConfig;
use crate::error::{Error, Result};
use crate::network::{
    build_uniform_combination, enumerate_links, generate_random_topology, CombinationMatrix, Link,
    Topology,
};
use crate::rng::{derive_seed, stream, Purpose};
use crate::selection::{SchemeKind, SelectionScheme};
use crate::signal::{
    draw_measurement, draw_regressor, generate_link_noise, generate_node_profiles, GroundTruth,
    LinkNoiseProfile, NodeProfile,
};
use crate::theory::{to_db, MsdPrediction, StabilityReport, TheoryModel};

/// Fraction of iterations averaged for the steady-state estimate.
pub const STEADY_STATE_FRACTION: f64 = 0.1;
/// Fraction of iterations used for the trailing slope.
pub const SLOPE_FRACTION: f64 = 0.2;

/// Network MSD `(1/N) sum_k |w_o - w_k|^2`.
pub fn simulated_msd(state: &NetworkState, w_o: &GroundTruth) -> f64 {
    let total: f64 = state
        .nodes
        .iter()
        .map(|node| (w_o.vector() - &node.w).norm_squared())
        .sum();
    total / state.n_nodes() as f64
}

/// A configuration with every random ingredient drawn: topology, weights,
/// profiles and link noise. These are fixed across runs.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub config: ExperimentConfig,
    pub topology: Topology,
    pub weights: CombinationMatrix,
    pub profiles: Vec<NodeProfile>,
    /// Link noise after the configured scale factor.
    pub link_noise: LinkNoiseProfile,
    /// Link noise before scaling, so sweeps over the scale share the draws.
    pub base_link_noise: LinkNoiseProfile,
}

impl Scenario {
    pub fn resolve(config: &ExperimentConfig) -> Result<Self> {
        config.validate()?;
        let net = &config.network;
        let topology = match &net.edges {
            Some(edges) => {
                let pairs: Vec<(usize, usize)> = edges.iter().map(|[a, b]| (*a, *b)).collect();
                Topology::from_edges(net.nodes, &pairs)?
            }
            None if net.nodes == 1 => Topology::from_edges(1, &[])?,
            None => {
                let seed = net
                    .topology_seed
                    .unwrap_or_else(|| derive_seed(config.seed, &[Purpose::Topology as u64]));
                generate_random_topology(net.nodes, net.avg_degree.unwrap_or(2.0), seed)?
            }
        };
        let weights = build_uniform_combination(&topology);
        let index = enumerate_links(&topology);
        let mut rng = stream(config.seed, 0, Purpose::Profiles, 0);
        let p = &config.profiles;
        let profiles = match &p.nodes {
            Some(nodes) => nodes
                .iter()
                .map(|n| NodeProfile::new(n.r_u().to_vec(), n.sigma2_v()))
                .collect::<Result<Vec<_>>>()?,
            None => generate_node_profiles(net.nodes, config.selection.dim, &p.ranges, &mut rng)?,
        };
        let base_link_noise = match &p.link_variances {
            Some(v) => LinkNoiseProfile::new(index, v.clone())?,
            None => generate_link_noise(&index, &p.ranges, &mut rng)?,
        };
        let link_noise = base_link_noise.scaled(p.link_noise_scale)?;
        Ok(Scenario {
            config: config.clone(),
            topology,
            weights,
            profiles,
            link_noise,
            base_link_noise,
        })
    }

    pub fn n_nodes(&self) -> usize {
        self.topology.n_nodes()
    }

    pub fn dim(&self) -> usize {
        self.config.selection.dim
    }

    /// Same draws with a different number of transmitted entries.
    pub fn with_entries(&self, entries: usize) -> Result<Self> {
        let mut out = self.clone();
        out.config.selection.entries = entries;
        out.config.validate()?;
        Ok(out)
    }

    /// Same draws with the link noise rescaled.
    pub fn with_link_noise_scale(&self, scale: f64) -> Result<Self> {
        let mut out = self.clone();
        out.config.profiles.link_noise_scale = scale;
        out.config.validate()?;
        out.link_noise = self.base_link_noise.scaled(scale)?;
        Ok(out)
    }

    pub fn with_lambda(&self, lambda: f64) -> Result<Self> {
        let mut out = self.clone();
        out.config.lambda = lambda;
        out.config.validate()?;
        Ok(out)
    }

    /// Parameter vector used by `run`.
    pub fn ground_truth(&self, run: u64) -> Result<GroundTruth> {
        if let Some(w) = &self.config.profiles.ground_truth {
            return GroundTruth::new(DVector::from_vec(w.clone()));
        }
        let (r, id) = if self.config.per_run_truth { (run, 1) } else { (0, 0) };
        Ok(GroundTruth::draw(self.dim(), &mut stream(self.config.seed, r, Purpose::GroundTruth, id)))
    }

    fn network(&self, run: u64) -> Result<PdrlsNetwork> {
        let sel = &self.config.selection;
        let mut scheme = SelectionScheme::new(sel.scheme, sel.entries, sel.dim)?;
        if sel.scheme == SchemeKind::Sequential {
            // the schedule starts at a random point of the cycle in every run
            let mut rng = stream(self.config.seed, run, Purpose::Phase, 0);
            let phase = rand::Rng::random_range(&mut rng, 0..scheme.partition().len());
            scheme = scheme.with_phase(phase);
        }
        PdrlsNetwork::new(
            self.topology.clone(),
            self.weights.clone(),
            self.link_noise.clone(),
            scheme,
            self.config.lambda,
        )
    }

    pub fn theory(&self) -> Result<TheoryModel> {
        let sel = &self.config.selection;
        TheoryModel::build(
            &self.weights,
            &self.profiles,
            &self.link_noise,
            sel.scheme,
            sel.entries,
            self.config.lambda,
        )
    }

    /// Transmitted entries over the whole experiment, `L * iterations * links`.
    pub fn communication_cost(&self) -> u64 {
        (self.config.selection.entries * self.config.iterations * self.link_noise.index().len()) as u64
    }
}

/// MSD after each iteration of one run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    pub run: u64,
    /// Entry `i` is the MSD after `i + 1` iterations. Entries from the
    /// divergence point on are `+inf`.
    pub msd: Vec<f64>,
    /// First iteration (zero-based) whose MSD was not finite.
    pub diverged_at: Option<usize>,
}

/// One realization; deterministic in `(scenario, run)`.
pub fn run_single(scenario: &Scenario, run: u64) -> Result<RunTrace> {
    let cfg = &scenario.config;
    let net = scenario.network(run)?;
    let w_o = scenario.ground_truth(run)?;
    let n = scenario.n_nodes();
    let mut data_rng: Vec<_> = (0..n)
        .map(|k| stream(cfg.seed, run, Purpose::NodeData, k as u64))
        .collect();
    let mut channels = Channels::new(cfg.seed, run, n, scenario.link_noise.index().len());
    let mut state = NetworkState::init(n, scenario.dim(), cfg.delta)?;
    let mut msd = Vec::with_capacity(cfg.iterations);
    let mut diverged_at = None;
    for i in 0..cfg.iterations {
        let data: Vec<Observation> = scenario
            .profiles
            .iter()
            .zip(data_rng.iter_mut())
            .map(|(p, rng)| {
                let u = draw_regressor(p, rng);
                let d = draw_measurement(&u, &w_o, p.sigma2_v(), rng);
                Observation { u, d }
            })
            .collect();
        let next = net.step(&state, &data, &mut channels);
        let value = match &next {
            Ok(s) if s.is_finite() => simulated_msd(s, &w_o),
            _ => f64::INFINITY,
        };
        if !value.is_finite() {
            diverged_at = Some(i);
            msd.resize(cfg.iterations, f64::INFINITY);
            break;
        }
        msd.push(value);
        state = next?;
    }
    Ok(RunTrace { run, msd, diverged_at })
}

/// Averaged learning curve.
#[derive(Debug, Clone, PartialEq)]
pub struct MsdCurve {
    /// Mean MSD over the runs that did not diverge.
    pub msd: Vec<f64>,
    pub runs: Vec<RunTrace>,
}

impl MsdCurve {
    pub fn msd_db(&self) -> Vec<f64> {
        self.msd.iter().map(|&x| to_db(x)).collect()
    }

    pub fn converged_runs(&self) -> impl Iterator<Item = &RunTrace> {
        self.runs.iter().filter(|r| r.diverged_at.is_none())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SteadyState {
    pub msd: f64,
    pub msd_db: f64,
    /// Standard error of `msd` across runs; absent with a single run.
    pub stderr: Option<f64>,
    /// Number of final iterations averaged.
    pub window: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Divergence {
    pub run: u64,
    pub iteration: usize,
}

/// Mean over the final `window` entries.
fn tail_mean(values: &[f64], window: usize) -> f64 {
    let tail = &values[values.len() - window..];
    tail.iter().sum::<f64>() / window as f64
}

fn tail_window(iterations: usize, fraction: f64) -> usize {
    ((iterations as f64 * fraction).round() as usize).clamp(1, iterations)
}

/// Least-squares slope of `values` against their index over the trailing
/// fraction, in units per iteration.
pub fn trailing_slope(values: &[f64], fraction: f64) -> Option<f64> {
    let w = tail_window(values.len(), fraction);
    if w < 2 {
        return None;
    }
    let tail = &values[values.len() - w..];
    let xm = (w - 1) as f64 / 2.0;
    let ym = tail.iter().sum::<f64>() / w as f64;
    let (mut sxy, mut sxx) = (0.0, 0.0);
    for (i, y) in tail.iter().enumerate() {
        let dx = i as f64 - xm;
        sxy += dx * (y - ym);
        sxx += dx * dx;
    }
    let slope = sxy / sxx;
    slope.is_finite().then_some(slope)
}

/// Tail-mean estimate from the runs that stayed finite.
pub fn steady_state(curve: &MsdCurve) -> Option<SteadyState> {
    let iterations = curve.msd.len();
    let window = tail_window(iterations, STEADY_STATE_FRACTION);
    let per_run: Vec<f64> = curve.converged_runs().map(|r| tail_mean(&r.msd, window)).collect();
    if per_run.is_empty() {
        return None;
    }
    let r = per_run.len() as f64;
    let mean = per_run.iter().sum::<f64>() / r;
    let stderr = (per_run.len() > 1).then(|| {
        let var = per_run.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (r - 1.0);
        (var / r).sqrt()
    });
    Some(SteadyState {
        msd: mean,
        msd_db: to_db(mean),
        stderr,
        window,
    })
}

/// Runs `config.runs` realizations in parallel and averages them in run order.
pub fn monte_carlo_curve(scenario: &Scenario) -> Result<MsdCurve> {
    let runs: Vec<RunTrace> = (0..scenario.config.runs as u64)
        .into_par_iter()
        .map(|r| run_single(scenario, r))
        .collect::<Result<_>>()?;
    let iterations = scenario.config.iterations;
    let mut msd = vec![0.0; iterations];
    let mut count = 0usize;
    for r in runs.iter().filter(|r| r.diverged_at.is_none()) {
        for (acc, x) in msd.iter_mut().zip(&r.msd) {
            *acc += x;
        }
        count += 1;
    }
    if count == 0 {
        msd.fill(f64::INFINITY);
    } else {
        msd.iter_mut().for_each(|x| *x /= count as f64);
    }
    Ok(MsdCurve { msd, runs })
}

/// Theory numbers for one configuration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TheorySummary {
    pub entries: usize,
    pub rho: f64,
    pub stability: StabilityReport,
    pub msd_ideal: f64,
    pub msd_noisy: f64,
    pub noise_penalty: f64,
    pub msd_ideal_db: f64,
    pub msd_noisy_db: f64,
    /// `msd_noisy_db - msd_ideal_db`.
    pub noise_penalty_db: f64,
    /// `msd_noisy - msd_ideal - noise_penalty`; zero up to rounding.
    pub identity_residual: f64,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl TheorySummary {
    pub fn from_model(model: &TheoryModel) -> Result<Self> {
        let stability = model.stability_checks()?;
        let MsdPrediction {
            msd_ideal,
            msd_noisy,
            noise_penalty,
            ..
        } = model.steady_state_msd()?;
        Ok(TheorySummary {
            entries: model.entries,
            rho: model.rho,
            stability,
            msd_ideal,
            msd_noisy,
            noise_penalty,
            msd_ideal_db: to_db(msd_ideal),
            msd_noisy_db: to_db(msd_noisy),
            noise_penalty_db: to_db(msd_noisy) - to_db(msd_ideal),
            identity_residual: msd_noisy - msd_ideal - noise_penalty,
            warnings: model.warnings.clone(),
        })
    }
}

/// Resolved random ingredients, echoed into every summary.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ScenarioEcho {
    pub edges: Vec<(usize, usize)>,
    pub mean_degree: f64,
    pub weights: Vec<Vec<f64>>,
    pub profiles: Vec<NodeProfile>,
    pub links: Vec<Link>,
    pub link_variances: Vec<f64>,
    pub ground_truth: Vec<f64>,
}

impl ScenarioEcho {
    pub fn new(s: &Scenario) -> Result<Self> {
        Ok(ScenarioEcho {
            edges: s.topology.edges(),
            mean_degree: s.topology.mean_degree(),
            weights: s.weights.to_rows(),
            profiles: s.profiles.clone(),
            links: s.link_noise.index().links().to_vec(),
            link_variances: s.link_noise.variances().to_vec(),
            ground_truth: s.ground_truth(0)?.vector().iter().copied().collect(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExperimentSummary {
    pub config: ExperimentConfig,
    pub scenario: ScenarioEcho,
    pub runs: usize,
    pub iterations: usize,
    pub diverged: Vec<Divergence>,
    pub all_diverged: bool,
    pub steady_state: Option<SteadyState>,
    /// Least-squares slope of the mean curve in dB over the final 20%.
    pub trailing_slope_db_per_iteration: Option<f64>,
    pub communication_cost: u64,
    /// Present when the forgetting factor is below one.
    pub theory: Option<TheorySummary>,
}

/// Monte-Carlo run plus summary, with the theory attached when it is defined.
pub fn monte_carlo(scenario: &Scenario) -> Result<(MsdCurve, ExperimentSummary)> {
    let curve = monte_carlo_curve(scenario)?;
    let diverged: Vec<Divergence> = curve
        .runs
        .iter()
        .filter_map(|r| r.diverged_at.map(|iteration| Divergence { run: r.run, iteration }))
        .collect();
    let all_diverged = diverged.len() == curve.runs.len();
    let theory = if scenario.config.lambda < 1.0 {
        Some(TheorySummary::from_model(&scenario.theory()?)?)
    } else {
        None
    };
    let summary = ExperimentSummary {
        config: scenario.config.clone(),
        scenario: ScenarioEcho::new(scenario)?,
        runs: curve.runs.len(),
        iterations: scenario.config.iterations,
        all_diverged,
        steady_state: steady_state(&curve),
        trailing_slope_db_per_iteration: if all_diverged {
            None
        } else {
            trailing_slope(&curve.msd_db(), SLOPE_FRACTION)
        },
        diverged,
        communication_cost: scenario.communication_cost(),
        theory,
    };
    Ok((curve, summary))
}

/// Simulation against theory for one `L`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonRow {
    pub entries: usize,
    pub msd_sim_db: f64,
    pub msd_sim_stderr: Option<f64>,
    pub msd_ideal_db: f64,
    pub msd_noisy_db: f64,
    pub noise_penalty: f64,
    /// `msd_sim_db - msd_noisy_db`.
    pub gap_db: f64,
    pub diverged_runs: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonReport {
    pub config: ExperimentConfig,
    pub scenario: ScenarioEcho,
    pub rows: Vec<ComparisonRow>,
}

/// Simulates and predicts every `L` in `entries`, holding all draws fixed.
pub fn compare_theory_sim(scenario: &Scenario, entries: &[usize]) -> Result<ComparisonReport> {
    if scenario.config.lambda >= 1.0 {
        return Err(Error::domain("theory undefined at λ=1 (singular system)"));
    }
    let rows = entries
        .iter()
        .map(|&l| {
            let s = scenario.with_entries(l)?;
            let theory = TheorySummary::from_model(&s.theory()?)?;
            let curve = monte_carlo_curve(&s)?;
            let ss = steady_state(&curve);
            let sim_db = ss.map(|s| s.msd_db).unwrap_or(f64::INFINITY);
            Ok(ComparisonRow {
                entries: l,
                msd_sim_db: sim_db,
                msd_sim_stderr: ss.and_then(|s| s.stderr),
                msd_ideal_db: theory.msd_ideal_db,
                msd_noisy_db: theory.msd_noisy_db,
                noise_penalty: theory.noise_penalty,
                gap_db: sim_db - theory.msd_noisy_db,
                diverged_runs: curve.runs.iter().filter(|r| r.diverged_at.is_some()).count(),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ComparisonReport {
        config: scenario.config.clone(),
        scenario: ScenarioEcho::new(scenario)?,
        rows,
    })
}
