//! Best responses via shortest-path search, the epsilon-approximate
//! best-response loop with certified termination, equilibrium
//! verification, and the closed-form iteration bound.

use serde::{Deserialize, Serialize};

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::GameError;
use crate::game::{EdgeId, Instance, Ix, PlayerId, Profile};

/// Guard against float ties when testing strict cost improvements.
const IMPROVE_GUARD: f64 = 1e-12;

/// True when switching to `new_cost` improves on `old_cost` by strictly
/// more than `factor`, with a relative guard against float ties.
pub fn is_improving(old_cost: f64, new_cost: f64, factor: f64) -> bool {
    debug_assert!(factor >= 1.0);
    factor * new_cost < old_cost * (1.0 - IMPROVE_GUARD)
}

/// Cheapest reply of one player against the others' fixed paths.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BestResponse {
    pub path: Vec<EdgeId>,
    pub cost: f64,
}

/// Computes the player's cheapest simple path given the rest of the
/// profile. Each edge's candidate share is fixed once the opponents'
/// loads are, so a nonnegative-weight shortest-path search is exact.
pub fn best_response(
    inst: &Instance,
    profile: &Profile,
    player: &str,
) -> Result<BestResponse, GameError> {
    let ix = Ix::new(inst)?;
    let paths = ix.index_profile(profile)?;
    let p = ix.player_index(player)?;
    let loads = ix.loads(&paths);
    let loads_without = ix.loads_without(&loads, &paths[p], ix.weight[p]);
    let (path, cost) = br_search(&ix, &loads_without, p)?;
    Ok(BestResponse {
        path: ix.edge_ids(&path),
        cost,
    })
}

fn br_search(ix: &Ix, loads_without: &[f64], p: usize) -> Result<(Vec<usize>, f64), GameError> {
    let w = ix.weight[p];
    let dev: Vec<f64> = (0..ix.num_edges())
        .map(|e| ix.deviation_weight(e, loads_without[e], w))
        .collect();
    ix.dijkstra(&dev, ix.source[p], ix.sink[p]).ok_or_else(|| {
        let player = &ix.inst.players[p];
        GameError::NoPath {
            player: player.id.clone(),
            from: player.source.clone(),
            to: player.sink.clone(),
        }
    })
}

/// Which player gets polled next during the dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Schedule {
    /// Cycle through players in instance order.
    RoundRobin,
    /// Poll a uniformly random player each iteration (seeded).
    UniformRandom,
    /// Each round, poll everyone and commit the largest admitted ratio.
    MaxRatioFirst,
}

/// Built-in starting profiles for the dynamics.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitRule {
    /// Every player takes the path it would choose alone in the network.
    SoloShortestPath,
    /// Players enter one by one, each best-responding to those placed.
    GreedyBestResponse,
}

/// Builds a starting profile per `rule`.
pub fn initial_profile(inst: &Instance, rule: InitRule) -> Result<Profile, GameError> {
    let ix = Ix::new(inst)?;
    let n = ix.num_players();
    let mut paths: Vec<Vec<usize>> = Vec::with_capacity(n);
    match rule {
        InitRule::SoloShortestPath => {
            let empty = vec![0.0; ix.num_edges()];
            for p in 0..n {
                let (path, _) = br_search(&ix, &empty, p)?;
                paths.push(path);
            }
        }
        InitRule::GreedyBestResponse => {
            let mut loads = vec![0.0; ix.num_edges()];
            for p in 0..n {
                let (path, _) = br_search(&ix, &loads, p)?;
                for &e in &path {
                    loads[e] += ix.weight[p];
                }
                paths.push(path);
            }
        }
    }
    Ok(ix.profile_from_paths(&paths))
}

/// One committed deviation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DeviationStep {
    pub step: usize,
    pub player: PlayerId,
    pub old_path: Vec<EdgeId>,
    pub new_path: Vec<EdgeId>,
    pub old_cost: f64,
    pub new_cost: f64,
    pub phi_before: f64,
    pub phi_after: f64,
    pub improvement_ratio: f64,
}

/// Ordered record of one dynamics run; the evidence object for every
/// property the run is supposed to satisfy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrajectoryLog {
    pub steps: Vec<DeviationStep>,
    pub initial: Profile,
    pub final_profile: Profile,
    /// True when a full pass certified the profile; false on the
    /// max-iteration cutoff.
    pub terminated: bool,
    pub epsilon: f64,
    pub alpha: f64,
}

/// Runs the approximate best-response loop: poll players per `schedule`,
/// commit a player's best response whenever it improves its cost by more
/// than `(1 + epsilon) * alpha`, and stop once every player has been
/// polled against the current profile without an admitted deviation
/// (certifying the output) or the step cap is hit.
///
/// `max_iterations` caps committed deviations; `None` selects ten times
/// the closed-form bound when it applies, else 10^7.
pub fn epsilon_abrd(
    inst: &Instance,
    initial: &Profile,
    epsilon: f64,
    schedule: Schedule,
    max_iterations: Option<u64>,
    rng_seed: u64,
) -> Result<TrajectoryLog, GameError> {
    if !(epsilon > 0.0) {
        return Err(GameError::NonPositiveEpsilon(epsilon));
    }
    let violations = inst.validate();
    if !violations.is_empty() {
        return Err(GameError::InvalidInstance {
            reasons: violations.iter().map(ToString::to_string).collect(),
        });
    }
    let ix = Ix::new(inst)?;
    let mut paths = ix.index_profile(initial)?;
    let alpha = inst.alpha_bound()?.value;
    let factor = (1.0 + epsilon) * alpha;
    let max_steps = max_iterations.unwrap_or_else(|| default_step_cap(inst, epsilon));

    let n = ix.num_players();
    let mut loads = ix.loads(&paths);
    let mut phi = ix.potential_of(&loads);
    let mut steps: Vec<DeviationStep> = Vec::new();
    let mut terminated = false;
    let mut rng = ChaCha8Rng::seed_from_u64(rng_seed);

    let poll = |ix: &Ix,
                loads: &[f64],
                paths: &[Vec<usize>],
                p: usize|
     -> Result<(f64, Vec<usize>, f64), GameError> {
        let w = ix.weight[p];
        let loads_without = ix.loads_without(loads, &paths[p], w);
        let old_cost = ix.player_cost_of(loads, &paths[p], w);
        let (path, cost) = br_search(ix, &loads_without, p)?;
        Ok((old_cost, path, cost))
    };

    let commit = |paths: &mut Vec<Vec<usize>>,
                      loads: &mut Vec<f64>,
                      phi: &mut f64,
                      steps: &mut Vec<DeviationStep>,
                      p: usize,
                      old_cost: f64,
                      new_path: Vec<usize>,
                      new_cost: f64| {
        let old_path = std::mem::replace(&mut paths[p], new_path);
        *loads = ix.loads(paths);
        let phi_after = ix.potential_of(loads);
        steps.push(DeviationStep {
            step: steps.len(),
            player: ix.inst.players[p].id.clone(),
            old_path: ix.edge_ids(&old_path),
            new_path: ix.edge_ids(&paths[p]),
            old_cost,
            new_cost,
            phi_before: *phi,
            phi_after,
            improvement_ratio: old_cost / new_cost,
        });
        *phi = phi_after;
    };

    match schedule {
        Schedule::RoundRobin | Schedule::UniformRandom => {
            // A player is "clean" once polled without an admitted deviation
            // since the last commit; all clean certifies the profile.
            let mut clean = vec![false; n];
            let mut clean_count = 0;
            let mut cursor = 0;
            loop {
                if steps.len() as u64 >= max_steps {
                    break;
                }
                let p = match schedule {
                    Schedule::RoundRobin => {
                        let p = cursor;
                        cursor = (cursor + 1) % n;
                        p
                    }
                    _ => rng.gen_range(0..n),
                };
                let (old_cost, new_path, new_cost) = poll(&ix, &loads, &paths, p)?;
                if is_improving(old_cost, new_cost, factor) {
                    commit(
                        &mut paths, &mut loads, &mut phi, &mut steps, p, old_cost, new_path,
                        new_cost,
                    );
                    clean.fill(false);
                    clean_count = 0;
                } else if !clean[p] {
                    clean[p] = true;
                    clean_count += 1;
                    if clean_count == n {
                        terminated = true;
                        break;
                    }
                }
            }
        }
        Schedule::MaxRatioFirst => loop {
            if steps.len() as u64 >= max_steps {
                break;
            }
            let mut best: Option<(f64, usize, f64, Vec<usize>, f64)> = None;
            for p in 0..n {
                let (old_cost, new_path, new_cost) = poll(&ix, &loads, &paths, p)?;
                if is_improving(old_cost, new_cost, factor) {
                    let ratio = old_cost / new_cost;
                    if best.as_ref().map_or(true, |b| ratio > b.0) {
                        best = Some((ratio, p, old_cost, new_path, new_cost));
                    }
                }
            }
            match best {
                None => {
                    terminated = true;
                    break;
                }
                Some((_, p, old_cost, new_path, new_cost)) => commit(
                    &mut paths, &mut loads, &mut phi, &mut steps, p, old_cost, new_path, new_cost,
                ),
            }
        },
    }

    Ok(TrajectoryLog {
        steps,
        initial: initial.clone(),
        final_profile: ix.profile_from_paths(&paths),
        terminated,
        epsilon,
        alpha,
    })
}

fn default_step_cap(inst: &Instance, epsilon: f64) -> u64 {
    match iteration_bound(inst, epsilon) {
        Ok(report) => {
            let cap = 10.0 * report.effective_bound;
            if cap.is_finite() && cap < u64::MAX as f64 {
                cap as u64
            } else {
                u64::MAX
            }
        }
        Err(_) => 10_000_000,
    }
}

/// Outcome of checking a profile against a given approximation factor.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ApneVerdict {
    pub ok: bool,
    pub worst_player: PlayerId,
    pub worst_ratio: f64,
}

/// Verifies `c_i <= factor * best_response_i` for every player, reporting
/// the worst current-cost-to-best-response ratio.
pub fn verify_apne(inst: &Instance, profile: &Profile, factor: f64) -> Result<ApneVerdict, GameError> {
    let ratios = per_player_costs(inst, profile)?;
    let mut ok = true;
    let mut worst: Option<(usize, f64)> = None;
    for &(p, current, best) in &ratios {
        if current > factor * best * (1.0 + IMPROVE_GUARD) {
            ok = false;
        }
        let ratio = current / best;
        if worst.map_or(true, |(_, r)| ratio > r) {
            worst = Some((p, ratio));
        }
    }
    let (p, worst_ratio) = worst.expect("at least one player");
    Ok(ApneVerdict {
        ok,
        worst_player: inst.players[p].id.clone(),
        worst_ratio,
    })
}

/// Tightest factor at which the profile satisfies the equilibrium
/// inequality: `max_i current_cost_i / best_response_i`. 1 means the
/// profile is an exact equilibrium.
pub fn empirical_alpha(inst: &Instance, profile: &Profile) -> Result<f64, GameError> {
    let ratios = per_player_costs(inst, profile)?;
    Ok(ratios
        .iter()
        .map(|&(_, current, best)| current / best)
        .fold(f64::NEG_INFINITY, f64::max))
}

fn per_player_costs(
    inst: &Instance,
    profile: &Profile,
) -> Result<Vec<(usize, f64, f64)>, GameError> {
    if inst.players.is_empty() {
        return Err(GameError::NoPlayers);
    }
    let ix = Ix::new(inst)?;
    let paths = ix.index_profile(profile)?;
    let loads = ix.loads(&paths);
    let mut out = Vec::with_capacity(ix.num_players());
    for p in 0..ix.num_players() {
        let w = ix.weight[p];
        let loads_without = ix.loads_without(&loads, &paths[p], w);
        let current = ix.player_cost_of(&loads, &paths[p], w);
        let (_, best) = br_search(&ix, &loads_without, p)?;
        out.push((p, current, best));
    }
    Ok(out)
}

/// Closed-form quantities limiting how long the dynamics can run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundReport {
    /// `max_e (a_e * W + b_e)`.
    pub c_max: f64,
    /// `min_e (a_e + b_e)`.
    pub c_min: f64,
    /// Guaranteed per-step relative potential decrease, in (0, 1).
    pub epsilon_prime: f64,
    /// `(1 + 1/eps) * W * log2(1+W) * (m*c_max/c_min) * ln(m*c_max/c_min)`.
    pub analytic_bound: f64,
    /// `2^(n*m)`: profiles never repeat, so steps cannot exceed this.
    pub profile_count_bound: f64,
    /// The smaller of the two bounds.
    pub effective_bound: f64,
    /// True when `m * c_max / c_min = 1`, which zeroes the analytic bound.
    pub degenerate: bool,
}

impl BoundReport {
    pub fn from_parts(
        num_players: usize,
        num_edges: usize,
        total_weight: f64,
        c_max: f64,
        c_min: f64,
        epsilon: f64,
    ) -> BoundReport {
        let m = num_edges as f64;
        let lg = (1.0 + total_weight).log2();
        let ratio = m * c_max / c_min;
        let analytic_bound = (1.0 + 1.0 / epsilon) * total_weight * lg * ratio * ratio.ln();
        let profile_count_bound = ((num_players * num_edges) as f64).exp2();
        let epsilon_prime =
            epsilon * c_min / ((1.0 + epsilon) * total_weight * lg * m * c_max);
        BoundReport {
            c_max,
            c_min,
            epsilon_prime,
            analytic_bound,
            profile_count_bound,
            effective_bound: analytic_bound.min(profile_count_bound),
            degenerate: (ratio - 1.0).abs() <= 1e-12,
        }
    }
}

/// Iteration bound for the dynamics on a normalized instance (minimum
/// weight 1, at least two players).
pub fn iteration_bound(inst: &Instance, epsilon: f64) -> Result<BoundReport, GameError> {
    if !(epsilon > 0.0) {
        return Err(GameError::NonPositiveEpsilon(epsilon));
    }
    match inst.players.len() {
        0 => return Err(GameError::NoPlayers),
        1 => return Err(GameError::TooFewPlayers(1)),
        _ => {}
    }
    if !inst.weights_normalized() {
        return Err(GameError::NotNormalized {
            min_weight: inst.min_weight().expect("players nonempty"),
        });
    }
    if inst.edges.is_empty() {
        return Err(GameError::InvalidInstance {
            reasons: vec!["instance declares no edges".to_string()],
        });
    }
    let total = inst.total_weight();
    let c_max = inst
        .edges
        .iter()
        .map(|e| e.a * total + e.b)
        .reduce(f64::max)
        .expect("edges nonempty");
    let c_min = inst
        .edges
        .iter()
        .map(|e| e.a + e.b)
        .reduce(f64::min)
        .expect("edges nonempty");
    Ok(BoundReport::from_parts(
        inst.players.len(),
        inst.edges.len(),
        total,
        c_max,
        c_min,
        epsilon,
    ))
}
