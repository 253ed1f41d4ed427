//! Smoothed-input machinery: density-capped coefficient samplers, random
//! instance generation over a few standard topologies, the triangular
//! sum-CDF used to validate the samplers, and a Monte-Carlo check of the
//! expectation bound that drives the polynomial iteration guarantee.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::game::{Edge, Instance, Player};

/// Floor applied to generated cost coefficients; keeps them strictly
/// positive without measurably perturbing the distribution.
pub const COEFF_FLOOR: f64 = 1e-9;

const PAIR_RETRIES: usize = 64;
const GRAPH_RETRIES: usize = 64;

#[derive(Debug, Error)]
pub enum SmoothedError {
    #[error("invalid distribution spec: {0}")]
    BadDistribution(String),
    #[error("invalid topology spec: {0}")]
    BadTopology(String),
    #[error("invalid parameter: {0}")]
    BadParameter(String),
    #[error("could not connect all players after {retries} attempts")]
    Unreachable { retries: usize },
}

/// A distribution on [0, 1] whose density never exceeds its cap.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum DistributionSpec {
    /// Density `phi` on `[offset, offset + 1/phi]`, zero elsewhere.
    UniformWindow {
        phi: f64,
        #[serde(default)]
        offset: f64,
    },
    /// Piecewise-constant density over equal-width bins on [0, 1].
    CappedDensity { phi: f64, bins: Vec<f64> },
}

impl DistributionSpec {
    pub fn phi(&self) -> f64 {
        match self {
            DistributionSpec::UniformWindow { phi, .. } => *phi,
            DistributionSpec::CappedDensity { phi, .. } => *phi,
        }
    }

    pub fn validate(&self) -> Result<(), SmoothedError> {
        let bad = |msg: String| Err(SmoothedError::BadDistribution(msg));
        match self {
            DistributionSpec::UniformWindow { phi, offset } => {
                if !phi.is_finite() || *phi < 1.0 {
                    return bad(format!("density cap must be >= 1, got {phi}"));
                }
                if !offset.is_finite() || *offset < 0.0 || *offset > 1.0 - 1.0 / phi + 1e-12 {
                    return bad(format!(
                        "window offset {offset} outside [0, 1 - 1/{phi}]"
                    ));
                }
                Ok(())
            }
            DistributionSpec::CappedDensity { phi, bins } => {
                if !phi.is_finite() || *phi < 1.0 {
                    return bad(format!("density cap must be >= 1, got {phi}"));
                }
                if bins.is_empty() {
                    return bad("density table is empty".to_string());
                }
                for (i, &d) in bins.iter().enumerate() {
                    if !d.is_finite() || d < 0.0 {
                        return bad(format!("bin {i} has invalid density {d}"));
                    }
                    if d > phi + 1e-12 {
                        return bad(format!("bin {i} density {d} exceeds the cap {phi}"));
                    }
                }
                let mass: f64 = bins.iter().sum::<f64>() / bins.len() as f64;
                if (mass - 1.0).abs() > 1e-6 {
                    return bad(format!("density mass is {mass}, not 1"));
                }
                Ok(())
            }
        }
    }

    /// Draws from the described density; assumes a validated spec.
    pub fn sample<R: Rng>(&self, rng: &mut R) -> f64 {
        match self {
            DistributionSpec::UniformWindow { phi, offset } => offset + rng.gen::<f64>() / phi,
            DistributionSpec::CappedDensity { phi, bins } => loop {
                let x = rng.gen::<f64>();
                let y = rng.gen::<f64>() * phi;
                if y < bin_density(bins, x) {
                    return x;
                }
            },
        }
    }

    /// Analytic CDF at `x`.
    pub fn cdf(&self, x: f64) -> f64 {
        match self {
            DistributionSpec::UniformWindow { phi, offset } => ((x - offset) * phi).clamp(0.0, 1.0),
            DistributionSpec::CappedDensity { bins, .. } => {
                if x <= 0.0 {
                    return 0.0;
                }
                if x >= 1.0 {
                    return 1.0;
                }
                let k = bins.len() as f64;
                let idx = ((x * k) as usize).min(bins.len() - 1);
                let before: f64 = bins[..idx].iter().sum::<f64>() / k;
                (before + bins[idx] * (x - idx as f64 / k)).clamp(0.0, 1.0)
            }
        }
    }
}

fn bin_density(bins: &[f64], x: f64) -> f64 {
    let idx = ((x * bins.len() as f64) as usize).min(bins.len() - 1);
    bins[idx]
}

/// Validates the spec, then draws once.
pub fn sample_phi_smooth<R: Rng>(
    spec: &DistributionSpec,
    rng: &mut R,
) -> Result<f64, SmoothedError> {
    spec.validate()?;
    Ok(spec.sample(rng))
}

/// Graph shapes the generator knows how to build.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum GraphKind {
    /// `links` parallel edges from a single source to a single sink.
    ParallelLinks { links: usize },
    /// `layers` fully connected ranks of `width` vertices between a
    /// source and a sink.
    LayeredDag { layers: usize, width: usize },
    /// Directed grid with rightward and downward edges.
    Grid { rows: usize, cols: usize },
    /// Each ordered vertex pair carries an edge with probability
    /// `edge_prob`.
    RandomDigraph { vertices: usize, edge_prob: f64 },
}

/// How players' weights are assigned; both keep the minimum at 1.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "scheme", rename_all = "kebab-case")]
pub enum WeightScheme {
    AllOnes,
    /// Weights cycle 1, 2, ..., w_max, 1, 2, ...
    Ramp { w_max: u32 },
}

impl WeightScheme {
    pub fn weight(&self, player_index: usize) -> f64 {
        match self {
            WeightScheme::AllOnes => 1.0,
            WeightScheme::Ramp { w_max } => (player_index as u32 % w_max + 1) as f64,
        }
    }
}

/// Where players' terminal pairs come from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Placement {
    /// Every player routes the kind's designated source to its sink.
    SharedEndpoints,
    /// Distinct random pairs, resampled until connected.
    RandomPairs,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlayerTemplate {
    pub count: usize,
    pub weights: WeightScheme,
    pub placement: Placement,
}

/// Graph shape plus the players to place on it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologySpec {
    pub graph: GraphKind,
    pub players: PlayerTemplate,
}

impl TopologySpec {
    pub fn validate(&self) -> Result<(), SmoothedError> {
        let bad = |msg: String| Err(SmoothedError::BadTopology(msg));
        match self.graph {
            GraphKind::ParallelLinks { links } if links == 0 => {
                return bad("parallel-links needs at least one link".into())
            }
            GraphKind::LayeredDag { layers, width } if layers == 0 || width == 0 => {
                return bad("layered-dag needs positive layers and width".into())
            }
            GraphKind::Grid { rows, cols } if rows < 2 && cols < 2 => {
                return bad("grid needs at least two rows or columns".into())
            }
            GraphKind::RandomDigraph { vertices, edge_prob } => {
                if vertices < 2 {
                    return bad("random-digraph needs at least two vertices".into());
                }
                if !(0.0..=1.0).contains(&edge_prob) {
                    return bad(format!("edge probability {edge_prob} outside [0, 1]"));
                }
            }
            _ => {}
        }
        if self.players.count == 0 {
            return bad("player template needs at least one player".into());
        }
        if let WeightScheme::Ramp { w_max } = self.players.weights {
            if w_max == 0 {
                return bad("ramp weight scheme needs w_max >= 1".into());
            }
        }
        Ok(())
    }
}

struct GraphDraft {
    vertices: Vec<String>,
    arcs: Vec<(usize, usize)>,
    shared_source: usize,
    shared_sink: usize,
}

fn build_graph<R: Rng>(kind: &GraphKind, rng: &mut R) -> GraphDraft {
    match *kind {
        GraphKind::ParallelLinks { links } => GraphDraft {
            vertices: vec!["s".to_string(), "t".to_string()],
            arcs: (0..links).map(|_| (0, 1)).collect(),
            shared_source: 0,
            shared_sink: 1,
        },
        GraphKind::LayeredDag { layers, width } => {
            let mut vertices = vec!["s".to_string()];
            for l in 0..layers {
                for k in 0..width {
                    vertices.push(format!("l{l}w{k}"));
                }
            }
            vertices.push("t".to_string());
            let node = |l: usize, k: usize| 1 + l * width + k;
            let sink = vertices.len() - 1;
            let mut arcs = Vec::new();
            for k in 0..width {
                arcs.push((0, node(0, k)));
            }
            for l in 0..layers.saturating_sub(1) {
                for k in 0..width {
                    for k2 in 0..width {
                        arcs.push((node(l, k), node(l + 1, k2)));
                    }
                }
            }
            for k in 0..width {
                arcs.push((node(layers - 1, k), sink));
            }
            GraphDraft {
                vertices,
                arcs,
                shared_source: 0,
                shared_sink: sink,
            }
        }
        GraphKind::Grid { rows, cols } => {
            let mut vertices = Vec::with_capacity(rows * cols);
            for r in 0..rows {
                for c in 0..cols {
                    vertices.push(format!("r{r}c{c}"));
                }
            }
            let node = |r: usize, c: usize| r * cols + c;
            let mut arcs = Vec::new();
            for r in 0..rows {
                for c in 0..cols {
                    if c + 1 < cols {
                        arcs.push((node(r, c), node(r, c + 1)));
                    }
                    if r + 1 < rows {
                        arcs.push((node(r, c), node(r + 1, c)));
                    }
                }
            }
            GraphDraft {
                vertices,
                arcs,
                shared_source: 0,
                shared_sink: rows * cols - 1,
            }
        }
        GraphKind::RandomDigraph { vertices, edge_prob } => {
            let names = (0..vertices).map(|i| format!("v{i}")).collect();
            let mut arcs = Vec::new();
            for i in 0..vertices {
                for j in 0..vertices {
                    if i != j && rng.gen::<f64>() < edge_prob {
                        arcs.push((i, j));
                    }
                }
            }
            GraphDraft {
                vertices: names,
                arcs,
                shared_source: 0,
                shared_sink: vertices - 1,
            }
        }
    }
}

fn arcs_reachable(arcs: &[(usize, usize)], nv: usize, s: usize, t: usize) -> bool {
    if s == t {
        return true;
    }
    let mut adj = vec![Vec::new(); nv];
    for &(a, b) in arcs {
        adj[a].push(b);
    }
    let mut seen = vec![false; nv];
    let mut stack = vec![s];
    seen[s] = true;
    while let Some(v) = stack.pop() {
        for &u in &adj[v] {
            if u == t {
                return true;
            }
            if !seen[u] {
                seen[u] = true;
                stack.push(u);
            }
        }
    }
    false
}

fn place_players<R: Rng>(
    draft: &GraphDraft,
    template: &PlayerTemplate,
    rng: &mut R,
) -> Result<Vec<(usize, usize)>, SmoothedError> {
    let nv = draft.vertices.len();
    let mut terminals = Vec::with_capacity(template.count);
    for _ in 0..template.count {
        match template.placement {
            Placement::SharedEndpoints => {
                if !arcs_reachable(&draft.arcs, nv, draft.shared_source, draft.shared_sink) {
                    return Err(SmoothedError::Unreachable {
                        retries: PAIR_RETRIES,
                    });
                }
                terminals.push((draft.shared_source, draft.shared_sink));
            }
            Placement::RandomPairs => {
                let mut placed = false;
                for _ in 0..PAIR_RETRIES {
                    let s = rng.gen_range(0..nv);
                    let t = rng.gen_range(0..nv);
                    if s != t && arcs_reachable(&draft.arcs, nv, s, t) {
                        terminals.push((s, t));
                        placed = true;
                        break;
                    }
                }
                if !placed {
                    return Err(SmoothedError::Unreachable {
                        retries: PAIR_RETRIES,
                    });
                }
            }
        }
    }
    Ok(terminals)
}

/// Builds the topology, draws every cost coefficient independently from
/// `dist` (floored at [`COEFF_FLOOR`]), and places players per the
/// template. Deterministic in `rng_seed`; a random digraph that cannot
/// connect its players is regenerated up to a retry cap.
pub fn gen_instance(
    topology: &TopologySpec,
    dist: &DistributionSpec,
    rng_seed: u64,
) -> Result<Instance, SmoothedError> {
    topology.validate()?;
    dist.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let retryable = matches!(topology.graph, GraphKind::RandomDigraph { .. });
    let mut last_err = SmoothedError::Unreachable {
        retries: GRAPH_RETRIES,
    };
    for _ in 0..GRAPH_RETRIES {
        let draft = build_graph(&topology.graph, &mut rng);
        match place_players(&draft, &topology.players, &mut rng) {
            Ok(terminals) => {
                let edges = draft
                    .arcs
                    .iter()
                    .enumerate()
                    .map(|(i, &(tail, head))| Edge {
                        id: format!("e{i:03}"),
                        tail: draft.vertices[tail].clone(),
                        head: draft.vertices[head].clone(),
                        a: dist.sample(&mut rng).max(COEFF_FLOOR),
                        b: dist.sample(&mut rng).max(COEFF_FLOOR),
                    })
                    .collect();
                let players = terminals
                    .iter()
                    .enumerate()
                    .map(|(i, &(s, t))| Player {
                        id: format!("p{i}"),
                        w: topology.players.weights.weight(i),
                        source: draft.vertices[s].clone(),
                        sink: draft.vertices[t].clone(),
                    })
                    .collect();
                return Ok(Instance {
                    vertices: draft.vertices,
                    edges,
                    players,
                });
            }
            Err(e) if retryable => last_err = e,
            Err(e) => return Err(e),
        }
    }
    Err(last_err)
}

/// CDF of the sum of two independent uniform draws on `[0, upper]`:
/// `t^2 / (2 upper^2)` below `upper`, `2t/upper - t^2/(2 upper^2) - 1`
/// above. `t` is clamped to `[0, 2 upper]`.
pub fn uniform_sum_cdf(t: f64, upper: f64) -> Result<f64, SmoothedError> {
    if !(upper > 0.0) || !upper.is_finite() {
        return Err(SmoothedError::BadParameter(format!(
            "interval endpoint must be positive and finite, got {upper}"
        )));
    }
    let t = t.clamp(0.0, 2.0 * upper);
    Ok(if t < upper {
        t * t / (2.0 * upper * upper)
    } else {
        2.0 * t / upper - t * t / (2.0 * upper * upper) - 1.0
    })
}

/// One Monte-Carlo check of the expectation bound
/// `E[g(min_i(X_i + Y_i))] <= alpha * phi * (n^2 + 1) * ln(alpha * phi * n)`
/// where `g(x) = min((alpha/x) ln(alpha/x), n^lambda)`, clamped at 0.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct McReport {
    pub n: usize,
    pub phi: f64,
    pub alpha: f64,
    pub lambda: u32,
    pub trials: u64,
    pub estimate: f64,
    pub std_error: f64,
    pub bound: f64,
    pub ratio: f64,
}

/// Estimates the expectation by simulation, drawing the pair coordinates
/// from the uniform window at offset 0 (the dominating case for the
/// bound). Deterministic in `rng_seed`.
pub fn lemma2_mc(
    n: usize,
    phi: f64,
    alpha: f64,
    lambda: u32,
    trials: u64,
    rng_seed: u64,
) -> Result<McReport, SmoothedError> {
    if n < 2 {
        return Err(SmoothedError::BadParameter(format!(
            "need at least two pairs, got {n}"
        )));
    }
    if !phi.is_finite() || phi < 1.0 {
        return Err(SmoothedError::BadParameter(format!(
            "density cap must be >= 1, got {phi}"
        )));
    }
    if !alpha.is_finite() || alpha < 1.0 {
        return Err(SmoothedError::BadParameter(format!(
            "factor must be >= 1, got {alpha}"
        )));
    }
    if lambda == 0 {
        return Err(SmoothedError::BadParameter(
            "exponent must be a positive integer".to_string(),
        ));
    }
    if trials < 10_000 {
        return Err(SmoothedError::BadParameter(format!(
            "need at least 10^4 trials, got {trials}"
        )));
    }
    let spec = DistributionSpec::UniformWindow { phi, offset: 0.0 };
    let cap = (n as f64).powi(lambda as i32);
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);
    let mut sum = 0.0;
    let mut sum_sq = 0.0;
    for _ in 0..trials {
        let mut min_pair = f64::INFINITY;
        for _ in 0..n {
            let pair = spec.sample(&mut rng) + spec.sample(&mut rng);
            min_pair = min_pair.min(pair);
        }
        let value = g_clamped(min_pair, alpha, cap);
        sum += value;
        sum_sq += value * value;
    }
    let t = trials as f64;
    let estimate = sum / t;
    let variance = ((sum_sq - sum * sum / t) / (t - 1.0)).max(0.0);
    let std_error = (variance / t).sqrt();
    let bound = alpha * phi * ((n * n + 1) as f64) * (alpha * phi * n as f64).ln();
    Ok(McReport {
        n,
        phi,
        alpha,
        lambda,
        trials,
        estimate,
        std_error,
        bound,
        ratio: estimate / bound,
    })
}

fn g_clamped(x: f64, alpha: f64, cap: f64) -> f64 {
    if x <= 0.0 {
        return cap;
    }
    let r = alpha / x;
    let first = if r <= 1.0 { 0.0 } else { r * r.ln() };
    first.min(cap)
}

/// Kolmogorov-Smirnov distance between the samples' empirical CDF and an
/// analytic CDF. Sorts the slice in place.
pub fn ks_statistic(samples: &mut [f64], cdf: impl Fn(f64) -> f64) -> f64 {
    samples.sort_by(|x, y| x.partial_cmp(y).expect("no NaN samples"));
    let n = samples.len() as f64;
    let mut d = 0.0f64;
    for (i, &x) in samples.iter().enumerate() {
        let f = cdf(x);
        d = d.max((f - i as f64 / n).abs());
        d = d.max(((i + 1) as f64 / n - f).abs());
    }
    d
}
