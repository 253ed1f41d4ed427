//! Acceptance suite: one test per criterion, each printing a PASS line
//! with the evidence it gathered. The dynamics criteria share one seeded
//! sweep over the default experiment grid.

use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::sync::OnceLock;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use ndg_core::dynamics::{
    empirical_alpha, epsilon_abrd, initial_profile, iteration_bound, verify_apne, InitRule,
    Schedule,
};
use ndg_core::oracle::{cross_check_best_response, exact_min_alpha, path_catalog, OracleCaps};
use ndg_core::smoothed::{
    gen_instance, ks_statistic, lemma2_mc, uniform_sum_cdf, DistributionSpec, GraphKind,
    Placement, PlayerTemplate, TopologySpec, WeightScheme,
};
use ndg_core::{Instance, Profile};

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

fn mix(parts: &[u64]) -> u64 {
    parts.iter().fold(0x00AC_CE97u64, |acc, &p| splitmix(acc ^ p))
}

/// Everything the criteria need from one dynamics run, reduced to plain
/// numbers so the 8000-run sweep stays small in memory.
struct RunStats {
    epsilon: f64,
    alpha: f64,
    steps: u64,
    terminated: bool,
    effective_bound: f64,
    verify_ok: bool,
    empirical: f64,
    /// max over steps of `dphi - (alpha * new_cost - old_cost)`.
    worst_eq4_slack: f64,
    /// max over steps of `dphi + eps/(1+eps) * old_cost`.
    worst_decrease_slack: f64,
    share_conservation_ok: bool,
    cost_consistency_ok: bool,
    anonymity_ok: Option<bool>,
    bounds_ok: bool,
    no_revisit_ok: bool,
}

fn default_grid_topologies() -> Vec<GraphKind> {
    vec![
        GraphKind::ParallelLinks { links: 5 },
        GraphKind::LayeredDag { layers: 2, width: 3 },
        GraphKind::Grid { rows: 3, cols: 4 },
    ]
}

/// Each player starts on its most expensive solo path; stresses the
/// dynamics into admitting deviations.
fn worst_solo_profile(inst: &Instance) -> Profile {
    let catalog = path_catalog(inst, &OracleCaps::default()).expect("catalog fits");
    let mut paths = BTreeMap::new();
    for player in &inst.players {
        let options = &catalog.per_player[&player.id];
        let worst = options
            .iter()
            .max_by(|x, y| {
                let cost = |path: &Vec<String>| -> f64 {
                    path.iter()
                        .map(|e| {
                            let edge = inst.edge(e).expect("edge");
                            edge.a * player.w + edge.b
                        })
                        .sum()
                };
                cost(x).partial_cmp(&cost(y)).expect("finite")
            })
            .expect("nonempty catalog");
        paths.insert(player.id.clone(), worst.clone());
    }
    Profile { paths }
}

fn random_catalog_profile(inst: &Instance, seed: u64) -> Profile {
    let catalog = path_catalog(inst, &OracleCaps::default()).expect("catalog fits");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut paths = BTreeMap::new();
    for player in &inst.players {
        let options = &catalog.per_player[&player.id];
        paths.insert(
            player.id.clone(),
            options[rng.gen_range(0..options.len())].clone(),
        );
    }
    Profile { paths }
}

fn canonical_users(inst: &Instance, profile: &Profile) -> Vec<(String, BTreeSet<String>)> {
    let mut users: BTreeMap<String, BTreeSet<String>> = BTreeMap::new();
    for (player, path) in &profile.paths {
        for edge in path {
            users.entry(edge.clone()).or_default().insert(player.clone());
        }
    }
    users.into_iter().collect()
}

fn structural_checks(inst: &Instance, profile: &Profile) -> (bool, bool, bool) {
    let loads = inst.compute_loads(profile).expect("valid profile");
    let mut shares_ok = true;
    for (edge_id, load) in &loads.edges {
        if load.users.is_empty() {
            continue;
        }
        let paid: f64 = load
            .users
            .iter()
            .map(|p| inst.cost_share(&loads, p, edge_id).expect("user"))
            .sum();
        let full = inst.edge_cost(edge_id, load.weight).expect("edge");
        if (paid - full).abs() > 1e-9 * full.abs().max(1.0) {
            shares_ok = false;
        }
    }
    let by_players: f64 = inst
        .players
        .iter()
        .map(|p| inst.player_cost(profile, &p.id).expect("player"))
        .sum();
    let social = inst.social_cost(profile).expect("profile");
    let consistency_ok = (by_players - social).abs() <= 1e-9 * social.abs().max(1.0);

    let bounds = inst.potential_bounds().expect("normalized, n >= 2");
    let phi = inst.potential(profile).expect("profile");
    let bounds_ok = bounds.lower <= phi + 1e-9 && phi <= bounds.upper + 1e-9;
    (shares_ok, consistency_ok, bounds_ok)
}

fn anonymity_check(inst: &Instance, profile: &Profile) -> Option<bool> {
    let mut pair: Option<(usize, usize)> = None;
    'outer: for i in 0..inst.players.len() {
        for j in i + 1..inst.players.len() {
            if inst.players[i].w == inst.players[j].w {
                pair = Some((i, j));
                break 'outer;
            }
        }
    }
    let (i, j) = pair?;
    let mut swapped = profile.clone();
    let a = inst.players[i].id.clone();
    let b = inst.players[j].id.clone();
    let pa = swapped.paths[&a].clone();
    let pb = swapped.paths[&b].clone();
    swapped.paths.insert(a, pb);
    swapped.paths.insert(b, pa);
    let phi_a = inst.potential(profile).expect("profile");
    let phi_b = inst.potential(&swapped).expect("profile");
    let sc_a = inst.social_cost(profile).expect("profile");
    let sc_b = inst.social_cost(&swapped).expect("profile");
    Some(
        (phi_a - phi_b).abs() <= 1e-12 * phi_a.abs().max(1.0)
            && (sc_a - sc_b).abs() <= 1e-12 * sc_a.abs().max(1.0),
    )
}

#[derive(Clone, Copy)]
enum StartChoice {
    /// Rotate solo / greedy / worst / random by seed.
    Rotate,
    /// Always start from the most expensive solo paths.
    Worst,
}

fn run_once(
    graph: &GraphKind,
    n: usize,
    weights: WeightScheme,
    dist: &DistributionSpec,
    epsilon: f64,
    seed: u64,
    start_choice: StartChoice,
) -> RunStats {
    let topology = TopologySpec {
        graph: graph.clone(),
        players: PlayerTemplate {
            count: n,
            weights,
            placement: Placement::SharedEndpoints,
        },
    };
    let inst = gen_instance(&topology, dist, seed).expect("generable topology");
    assert!(inst.edges.len() <= 40, "sweep stays within m <= 40");
    assert!(inst.weights_normalized(), "sweep keeps min weight 1");

    let start = match start_choice {
        StartChoice::Worst => worst_solo_profile(&inst),
        StartChoice::Rotate => match seed % 4 {
            0 => initial_profile(&inst, InitRule::SoloShortestPath).expect("init"),
            1 => initial_profile(&inst, InitRule::GreedyBestResponse).expect("init"),
            2 => worst_solo_profile(&inst),
            _ => random_catalog_profile(&inst, splitmix(seed)),
        },
    };
    let log = epsilon_abrd(&inst, &start, epsilon, Schedule::RoundRobin, None, seed)
        .expect("dynamics runs");
    let factor = (1.0 + epsilon) * log.alpha;
    let verdict = verify_apne(&inst, &log.final_profile, factor).expect("verify");
    let empirical = empirical_alpha(&inst, &log.final_profile).expect("empirical");
    let bound = iteration_bound(&inst, epsilon).expect("normalized instance");

    let mut worst_eq4_slack = f64::NEG_INFINITY;
    let mut worst_decrease_slack = f64::NEG_INFINITY;
    for step in &log.steps {
        let dphi = step.phi_after - step.phi_before;
        worst_eq4_slack =
            worst_eq4_slack.max(dphi - (log.alpha * step.new_cost - step.old_cost));
        worst_decrease_slack =
            worst_decrease_slack.max(dphi + epsilon / (1.0 + epsilon) * step.old_cost);
    }

    let (shares_ok, consistency_ok, bounds_ok) = structural_checks(&inst, &log.final_profile);
    let (shares_ok0, consistency_ok0, bounds_ok0) = structural_checks(&inst, &log.initial);
    let anonymity_ok = anonymity_check(&inst, &log.final_profile);

    let mut seen = HashSet::new();
    let mut current = log.initial.clone();
    let mut no_revisit_ok = seen.insert(format!("{:?}", canonical_users(&inst, &current)));
    for step in &log.steps {
        current
            .paths
            .insert(step.player.clone(), step.new_path.clone());
        no_revisit_ok &= seen.insert(format!("{:?}", canonical_users(&inst, &current)));
    }
    no_revisit_ok &= current == log.final_profile;

    RunStats {
        epsilon,
        alpha: log.alpha,
        steps: log.steps.len() as u64,
        terminated: log.terminated,
        effective_bound: bound.effective_bound,
        verify_ok: verdict.ok,
        empirical,
        worst_eq4_slack,
        worst_decrease_slack,
        share_conservation_ok: shares_ok && shares_ok0,
        cost_consistency_ok: consistency_ok && consistency_ok0,
        anonymity_ok,
        bounds_ok: bounds_ok && bounds_ok0,
        no_revisit_ok,
    }
}

static SWEEP: OnceLock<Vec<RunStats>> = OnceLock::new();

/// The default grid (three topologies, n in {2,4,6}, phi in {1,2,5},
/// eps in {0.1,0.5,1.0}, 100 instances per cell), a weighted-ramp
/// extension, and a bimodal-density extension whose coefficient spreads
/// force admitted deviations. All cells keep minimum weight 1, m <= 40.
fn sweep() -> &'static [RunStats] {
    SWEEP.get_or_init(|| {
        let mut runs = Vec::new();
        let mut cell = 0u64;
        for graph in &default_grid_topologies() {
            for &n in &[2usize, 4, 6] {
                for &phi in &[1.0, 2.0, 5.0] {
                    for &epsilon in &[0.1, 0.5, 1.0] {
                        cell += 1;
                        for k in 0..100u64 {
                            let seed = mix(&[cell, k]);
                            let dist = DistributionSpec::UniformWindow { phi, offset: 0.0 };
                            runs.push(run_once(
                                graph,
                                n,
                                WeightScheme::AllOnes,
                                &dist,
                                epsilon,
                                seed,
                                StartChoice::Rotate,
                            ));
                        }
                    }
                }
            }
        }
        for graph in &default_grid_topologies() {
            for &n in &[2usize, 4, 6] {
                cell += 1;
                for k in 0..20u64 {
                    let seed = mix(&[cell, k]);
                    let dist = DistributionSpec::UniformWindow { phi: 2.0, offset: 0.0 };
                    runs.push(run_once(
                        graph,
                        n,
                        WeightScheme::Ramp { w_max: 3 },
                        &dist,
                        0.5,
                        seed,
                        StartChoice::Rotate,
                    ));
                }
            }
        }
        // Density capped at 5 with all mass near the endpoints: coefficient
        // ratios span orders of magnitude, so polls actually admit moves.
        let bimodal = DistributionSpec::CappedDensity {
            phi: 5.0,
            bins: vec![5.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 5.0],
        };
        for graph in &default_grid_topologies() {
            for &n in &[2usize, 4, 6] {
                for &epsilon in &[0.1, 0.5] {
                    cell += 1;
                    for k in 0..50u64 {
                        let seed = mix(&[cell, k]);
                        runs.push(run_once(
                            graph,
                            n,
                            WeightScheme::AllOnes,
                            &bimodal,
                            epsilon,
                            seed,
                            StartChoice::Worst,
                        ));
                    }
                }
            }
        }
        runs
    })
}

#[test]
fn criterion_1_potential_decrease() {
    let runs = sweep();
    let total_steps: u64 = runs.iter().map(|r| r.steps).sum();
    assert!(runs.len() >= 1000, "need at least 1000 instances");
    assert!(total_steps > 1000, "sweep admitted too few deviations to be meaningful");
    let worst_eq4 = runs
        .iter()
        .map(|r| r.worst_eq4_slack)
        .fold(f64::NEG_INFINITY, f64::max);
    let worst_decrease = runs
        .iter()
        .map(|r| r.worst_decrease_slack)
        .fold(f64::NEG_INFINITY, f64::max);
    assert!(
        worst_eq4 < 1e-9,
        "potential drop must beat alpha*new - old: worst slack {worst_eq4}"
    );
    assert!(
        worst_decrease < 1e-9,
        "potential drop must beat eps/(1+eps)*old: worst slack {worst_decrease}"
    );
    println!(
        "acceptance 1 (potential decrease): PASS — {} runs, {} steps, worst slacks {:.3e} / {:.3e}",
        runs.len(),
        total_steps,
        worst_eq4,
        worst_decrease
    );
}

#[test]
fn criterion_2_certified_output() {
    let runs = sweep();
    let terminated = runs.iter().filter(|r| r.terminated).count();
    for r in runs {
        if !r.terminated {
            continue;
        }
        assert!(r.verify_ok, "terminated run failed verification");
        let factor = (1.0 + r.epsilon) * r.alpha;
        assert!(
            r.empirical <= factor + 1e-9,
            "empirical factor {} above {}",
            r.empirical,
            factor
        );
    }
    println!(
        "acceptance 2 (certified output): PASS — {terminated}/{} runs terminated, all verified",
        runs.len()
    );
}

#[test]
fn criterion_3_iteration_bound() {
    let runs = sweep();
    let mut violations = 0usize;
    let mut max_t = 0u64;
    for r in runs {
        max_t = max_t.max(r.steps);
        if !r.terminated || (r.steps as f64) > r.effective_bound {
            violations += 1;
        }
    }
    assert_eq!(violations, 0, "iteration bound violated");
    println!(
        "acceptance 3 (iteration bound): PASS — {} runs, zero violations, max T {}",
        runs.len(),
        max_t
    );
}

#[test]
fn criterion_4_oracle_equivalence() {
    let kinds = [
        GraphKind::ParallelLinks { links: 2 },
        GraphKind::ParallelLinks { links: 3 },
        GraphKind::ParallelLinks { links: 4 },
        GraphKind::ParallelLinks { links: 5 },
        GraphKind::LayeredDag { layers: 1, width: 2 },
        GraphKind::LayeredDag { layers: 1, width: 3 },
        GraphKind::Grid { rows: 2, cols: 2 },
        GraphKind::Grid { rows: 2, cols: 3 },
        GraphKind::Grid { rows: 3, cols: 3 },
    ];
    let mut instances = 0usize;
    let mut checks = 0usize;
    for (gi, graph) in kinds.iter().enumerate() {
        for &n in &[2usize, 3] {
            for &phi in &[1.0, 2.0] {
                for s in 0..6u64 {
                    let seed = mix(&[400, gi as u64, n as u64, phi as u64, s]);
                    let weights = if s % 2 == 0 {
                        WeightScheme::AllOnes
                    } else {
                        WeightScheme::Ramp { w_max: 3 }
                    };
                    let topology = TopologySpec {
                        graph: graph.clone(),
                        players: PlayerTemplate {
                            count: n,
                            weights,
                            placement: Placement::SharedEndpoints,
                        },
                    };
                    let dist = DistributionSpec::UniformWindow { phi, offset: 0.0 };
                    let inst = gen_instance(&topology, &dist, seed).expect("generable");
                    let catalog = path_catalog(&inst, &OracleCaps::default()).expect("small");
                    for player in &inst.players {
                        assert!(
                            catalog.count(&player.id).unwrap() <= 10,
                            "tiny sweep keeps catalogs at <= 10 paths"
                        );
                    }
                    instances += 1;

                    for k in 0..5u64 {
                        let profile = random_catalog_profile(&inst, mix(&[seed, k]));
                        for player in &inst.players {
                            assert!(
                                cross_check_best_response(&inst, &profile, &player.id)
                                    .expect("cross-check runs"),
                                "search/enumeration mismatch (seed {seed})"
                            );
                            checks += 1;
                        }
                    }

                    let report = exact_min_alpha(&inst).expect("enumerable");
                    let alpha = inst.alpha_bound().unwrap().value;
                    let tight = empirical_alpha(&inst, &report.phi_minimizer).unwrap();
                    assert!(
                        tight <= alpha,
                        "potential minimizer must satisfy the factor bound: {tight} vs {alpha}"
                    );
                    assert!(report.exact_min_alpha <= report.phi_minimizer_alpha + 1e-12);
                }
            }
        }
    }
    assert!(instances >= 200, "need at least 200 tiny instances, got {instances}");
    println!(
        "acceptance 4 (oracle equivalence): PASS — {instances} instances, {checks} best-response cross-checks"
    );
}

#[test]
fn criterion_5_expectation_bound_monte_carlo() {
    let mut points = 0usize;
    let mut worst_margin = f64::NEG_INFINITY;
    for &n in &[2usize, 5, 10] {
        for &phi in &[1.0, 2.0, 5.0] {
            for &alpha in &[1.0, 2.0] {
                for &lambda in &[2u32, 3] {
                    let seed = mix(&[500, n as u64, phi as u64, alpha as u64, lambda as u64]);
                    let report = lemma2_mc(n, phi, alpha, lambda, 100_000, seed).expect("valid");
                    let margin = report.estimate - report.bound;
                    worst_margin = worst_margin.max(margin / report.std_error);
                    assert!(
                        report.estimate <= report.bound + 3.0 * report.std_error,
                        "bound violated at n={n} phi={phi} alpha={alpha} lambda={lambda}: \
                         estimate {} vs bound {}",
                        report.estimate,
                        report.bound
                    );
                    points += 1;
                }
            }
        }
    }
    assert_eq!(points, 36);
    println!(
        "acceptance 5 (expectation bound): PASS — 36 grid points, worst (estimate-bound)/se {:.2}",
        worst_margin
    );
}

#[test]
fn criterion_6_pair_sum_cdf() {
    for &upper in &[0.5f64, 1.0] {
        let mut rng = ChaCha8Rng::seed_from_u64(606);
        let mut sums: Vec<f64> = (0..100_000)
            .map(|_| rng.gen::<f64>() * upper + rng.gen::<f64>() * upper)
            .collect();
        let d = ks_statistic(&mut sums, |t| uniform_sum_cdf(t, upper).unwrap());
        assert!(d <= 0.01, "KS distance {d} at upper={upper}");

        // The two branch formulas agree where they meet.
        let below = upper * upper / (2.0 * upper * upper);
        let above = 2.0 * upper / upper - upper * upper / (2.0 * upper * upper) - 1.0;
        assert!((below - above).abs() <= 1e-15);
        assert!((uniform_sum_cdf(upper, upper).unwrap() - 0.5).abs() <= 1e-15);
    }
    println!("acceptance 6 (pair-sum CDF): PASS — KS <= 0.01 for both interval lengths");
}

#[test]
fn criterion_7_structural_invariants() {
    let runs = sweep();
    let mut anonymity_checked = 0usize;
    for r in runs {
        assert!(r.share_conservation_ok, "share conservation failed");
        assert!(r.cost_consistency_ok, "cost consistency failed");
        assert!(r.bounds_ok, "potential left its envelope");
        assert!(r.no_revisit_ok, "trajectory revisited a load pattern");
        if let Some(ok) = r.anonymity_ok {
            assert!(ok, "equal-weight anonymity failed");
            anonymity_checked += 1;
        }
    }
    println!(
        "acceptance 7 (structural invariants): PASS — {} runs, {} anonymity checks, zero failures",
        runs.len(),
        anonymity_checked
    );
}
