//! Brute-force ground truth on small instances: simple-path catalogs,
//! full profile enumeration, the exact minimal equilibrium factor, and the
//! potential-minimizer certificate. A rational-arithmetic recheck mode
//! backs up float comparisons that land near tolerance.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::error::GameError;
use crate::game::{EdgeId, Instance, Ix, PlayerId, Profile};

/// Agreement tolerance between the shortest-path search and exhaustive
/// enumeration.
const AGREE_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum OracleError {
    #[error("too many {what}: {found} > cap {cap}; shrink the instance or raise the cap")]
    TooLarge {
        what: &'static str,
        found: u128,
        cap: u128,
    },
    #[error(
        "best-response search disagrees with exhaustive minimum for player `{player}`: \
         {search} vs {enumerated}"
    )]
    BestResponseMismatch {
        player: String,
        search: f64,
        enumerated: f64,
    },
    #[error(transparent)]
    Game(#[from] GameError),
}

/// Size limits the oracle refuses to exceed. It never samples: an
/// oversized input is an error, not an approximation.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleCaps {
    pub max_paths_per_player: usize,
    pub max_profiles: u128,
}

impl Default for OracleCaps {
    fn default() -> Self {
        OracleCaps {
            max_paths_per_player: 10_000,
            max_profiles: 1_000_000,
        }
    }
}

/// All simple source->sink paths per player, in lexicographic edge-id
/// order.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PathCatalog {
    pub per_player: BTreeMap<PlayerId, Vec<Vec<EdgeId>>>,
}

impl PathCatalog {
    pub fn count(&self, player: &str) -> Option<usize> {
        self.per_player.get(player).map(Vec::len)
    }

    /// Product of per-player path counts, saturating at `u128::MAX`.
    pub fn profile_count(&self) -> u128 {
        self.per_player
            .values()
            .map(|paths| paths.len() as u128)
            .try_fold(1u128, u128::checked_mul)
            .unwrap_or(u128::MAX)
    }
}

/// Depth-first enumeration of every simple directed `source -> sink`
/// path, emitted in lexicographic edge-id order.
pub fn enumerate_simple_paths(
    inst: &Instance,
    source: &str,
    sink: &str,
    cap: usize,
) -> Result<Vec<Vec<EdgeId>>, OracleError> {
    let ix = Ix::new(inst)?;
    let s = ix.vertex_index(source)?;
    let t = ix.vertex_index(sink)?;
    let paths = simple_paths_ix(&ix, s, t, cap)?;
    Ok(paths.iter().map(|p| ix.edge_ids(p)).collect())
}

fn simple_paths_ix(ix: &Ix, s: usize, t: usize, cap: usize) -> Result<Vec<Vec<usize>>, OracleError> {
    let mut out = Vec::new();
    let mut on_path = vec![false; ix.out.len()];
    let mut stack = Vec::new();
    on_path[s] = true;
    dfs(ix, s, t, cap, &mut on_path, &mut stack, &mut out)?;
    Ok(out)
}

fn dfs(
    ix: &Ix,
    v: usize,
    t: usize,
    cap: usize,
    on_path: &mut Vec<bool>,
    stack: &mut Vec<usize>,
    out: &mut Vec<Vec<usize>>,
) -> Result<(), OracleError> {
    for &e in &ix.out[v] {
        let u = ix.head[e];
        if u == t {
            if out.len() >= cap {
                return Err(OracleError::TooLarge {
                    what: "simple paths",
                    found: cap as u128 + 1,
                    cap: cap as u128,
                });
            }
            stack.push(e);
            out.push(stack.clone());
            stack.pop();
        } else if !on_path[u] {
            on_path[u] = true;
            stack.push(e);
            dfs(ix, u, t, cap, on_path, stack, out)?;
            stack.pop();
            on_path[u] = false;
        }
    }
    Ok(())
}

/// Builds the full per-player path catalog.
pub fn path_catalog(inst: &Instance, caps: &OracleCaps) -> Result<PathCatalog, OracleError> {
    let ix = Ix::new(inst)?;
    let catalogs = catalogs_ix(&ix, caps)?;
    let mut per_player = BTreeMap::new();
    for (p, paths) in catalogs.iter().enumerate() {
        per_player.insert(
            inst.players[p].id.clone(),
            paths.iter().map(|path| ix.edge_ids(path)).collect(),
        );
    }
    Ok(PathCatalog { per_player })
}

fn catalogs_ix(ix: &Ix, caps: &OracleCaps) -> Result<Vec<Vec<Vec<usize>>>, OracleError> {
    let mut out = Vec::with_capacity(ix.num_players());
    for p in 0..ix.num_players() {
        out.push(simple_paths_ix(
            ix,
            ix.source[p],
            ix.sink[p],
            caps.max_paths_per_player,
        )?);
    }
    Ok(out)
}

fn checked_profile_count(catalogs: &[Vec<Vec<usize>>], cap: u128) -> Result<u128, OracleError> {
    let count = catalogs
        .iter()
        .map(|c| c.len() as u128)
        .try_fold(1u128, u128::checked_mul)
        .unwrap_or(u128::MAX);
    if count > cap {
        return Err(OracleError::TooLarge {
            what: "profiles",
            found: count,
            cap,
        });
    }
    Ok(count)
}

/// Iterator over every profile, in odometer order: players in instance
/// order, the last player's path index varying fastest.
pub struct ProfileIter {
    player_ids: Vec<PlayerId>,
    catalogs: Vec<Vec<Vec<EdgeId>>>,
    counters: Vec<usize>,
    done: bool,
}

impl Iterator for ProfileIter {
    type Item = Profile;

    fn next(&mut self) -> Option<Profile> {
        if self.done {
            return None;
        }
        let mut paths = BTreeMap::new();
        for (p, &c) in self.counters.iter().enumerate() {
            paths.insert(self.player_ids[p].clone(), self.catalogs[p][c].clone());
        }
        // Advance the odometer.
        self.done = true;
        for p in (0..self.counters.len()).rev() {
            self.counters[p] += 1;
            if self.counters[p] < self.catalogs[p].len() {
                self.done = false;
                break;
            }
            self.counters[p] = 0;
        }
        Some(Profile { paths })
    }
}

/// Enumerates all profiles of the instance, refusing to start when the
/// Cartesian product exceeds `cap`.
pub fn enumerate_profiles(inst: &Instance, cap: u128) -> Result<ProfileIter, OracleError> {
    let ix = Ix::new(inst)?;
    let caps = OracleCaps {
        max_profiles: cap,
        ..OracleCaps::default()
    };
    let catalogs = catalogs_ix(&ix, &caps)?;
    checked_profile_count(&catalogs, cap)?;
    let done = catalogs.iter().any(Vec::is_empty) || catalogs.is_empty();
    Ok(ProfileIter {
        player_ids: inst.players.iter().map(|p| p.id.clone()).collect(),
        catalogs: catalogs
            .iter()
            .map(|paths| paths.iter().map(|path| ix.edge_ids(path)).collect())
            .collect(),
        counters: vec![0; inst.players.len()],
        done,
    })
}

/// Exhaustive certificate for one instance.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OracleReport {
    pub profile_count: u64,
    pub exists_pne: bool,
    /// Minimum over profiles of the worst current-to-best cost ratio;
    /// 1 means an exact equilibrium exists.
    pub exact_min_alpha: f64,
    /// First potential minimizer in enumeration order.
    pub phi_minimizer: Profile,
    pub phi_min: f64,
    /// Worst cost ratio at the potential minimizer.
    pub phi_minimizer_alpha: f64,
}

pub fn exact_min_alpha(inst: &Instance) -> Result<OracleReport, OracleError> {
    exact_min_alpha_with(inst, &OracleCaps::default())
}

/// Enumerates every profile, computing for each the worst ratio of a
/// player's current cost to its cheapest alternative (over the full path
/// catalog). Every inner minimum is cross-checked against the
/// shortest-path search; disagreement is an error, not a warning.
pub fn exact_min_alpha_with(
    inst: &Instance,
    caps: &OracleCaps,
) -> Result<OracleReport, OracleError> {
    let violations = inst.validate();
    if !violations.is_empty() {
        return Err(GameError::InvalidInstance {
            reasons: violations.iter().map(ToString::to_string).collect(),
        }
        .into());
    }
    let ix = Ix::new(inst)?;
    let catalogs = catalogs_ix(&ix, caps)?;
    let profile_count = checked_profile_count(&catalogs, caps.max_profiles)?;

    let n = ix.num_players();
    let mut counters = vec![0usize; n];
    let mut min_alpha = f64::INFINITY;
    let mut phi_min = f64::INFINITY;
    let mut phi_argmin: Option<Vec<usize>> = None;
    let mut phi_argmin_alpha = f64::INFINITY;

    loop {
        let paths: Vec<&Vec<usize>> = (0..n).map(|p| &catalogs[p][counters[p]]).collect();
        let mut loads = vec![0.0; ix.num_edges()];
        for (p, path) in paths.iter().enumerate() {
            for &e in path.iter() {
                loads[e] += ix.weight[p];
            }
        }
        let phi = ix.potential_of(&loads);

        let mut profile_alpha = 0.0f64;
        for p in 0..n {
            let w = ix.weight[p];
            let loads_without = ix.loads_without(&loads, paths[p], w);
            let current = ix.player_cost_of(&loads, paths[p], w);
            let enumerated = catalogs[p]
                .iter()
                .map(|cand| ix.path_cost_deviation(cand, &loads_without, w))
                .fold(f64::INFINITY, f64::min);
            let dev: Vec<f64> = (0..ix.num_edges())
                .map(|e| ix.deviation_weight(e, loads_without[e], w))
                .collect();
            let (_, search) = ix
                .dijkstra(&dev, ix.source[p], ix.sink[p])
                .expect("validated instance has a path");
            if (search - enumerated).abs() > AGREE_TOL * enumerated.abs().max(1.0) {
                return Err(OracleError::BestResponseMismatch {
                    player: inst.players[p].id.clone(),
                    search,
                    enumerated,
                });
            }
            profile_alpha = profile_alpha.max(current / enumerated);
        }
        min_alpha = min_alpha.min(profile_alpha);
        // Tie-break: keep the first minimizer, comparing at 1e-12 relative.
        if phi_argmin.is_none() || phi < phi_min * (1.0 - 1e-12) {
            phi_min = phi;
            phi_argmin = Some(counters.clone());
            phi_argmin_alpha = profile_alpha;
        }

        let mut advanced = false;
        for p in (0..n).rev() {
            counters[p] += 1;
            if counters[p] < catalogs[p].len() {
                advanced = true;
                break;
            }
            counters[p] = 0;
        }
        if !advanced {
            break;
        }
    }

    let argmin = phi_argmin.expect("at least one profile");
    let minimizer_paths: Vec<Vec<usize>> = (0..n)
        .map(|p| catalogs[p][argmin[p]].clone())
        .collect();
    Ok(OracleReport {
        profile_count: profile_count as u64,
        exists_pne: (min_alpha - 1.0).abs() <= 1e-12,
        exact_min_alpha: min_alpha,
        phi_minimizer: ix.profile_from_paths(&minimizer_paths),
        phi_min,
        phi_minimizer_alpha: phi_argmin_alpha,
    })
}

/// True when the shortest-path best response matches the exhaustive
/// minimum for this player against the fixed profile.
pub fn cross_check_best_response(
    inst: &Instance,
    profile: &Profile,
    player: &str,
) -> Result<bool, OracleError> {
    let ix = Ix::new(inst)?;
    let paths = ix.index_profile(profile)?;
    let p = ix.player_index(player)?;
    let w = ix.weight[p];
    let candidates = simple_paths_ix(
        &ix,
        ix.source[p],
        ix.sink[p],
        OracleCaps::default().max_paths_per_player,
    )?;
    let loads = ix.loads(&paths);
    let loads_without = ix.loads_without(&loads, &paths[p], w);
    let enumerated = candidates
        .iter()
        .map(|cand| ix.path_cost_deviation(cand, &loads_without, w))
        .fold(f64::INFINITY, f64::min);
    let dev: Vec<f64> = (0..ix.num_edges())
        .map(|e| ix.deviation_weight(e, loads_without[e], w))
        .collect();
    let search = match ix.dijkstra(&dev, ix.source[p], ix.sink[p]) {
        Some((_, cost)) => cost,
        None => return Ok(false),
    };
    Ok((search - enumerated).abs() <= AGREE_TOL * enumerated.abs().max(1.0))
}

/// Result of the rational-arithmetic recheck. Inputs are read back from
/// their shortest decimal form, so `0.1` means exactly one tenth.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CertifiedMinAlpha {
    pub exists_pne: bool,
    pub exact_min_alpha: f64,
    /// The exact value as a reduced fraction, e.g. `"4/3"`.
    pub exact_min_alpha_ratio: String,
}

/// Recomputes the minimal equilibrium factor with exact rational
/// arithmetic. Slow; intended for rechecking float results that land
/// within tolerance of a decision boundary.
pub fn exact_min_alpha_certified(
    inst: &Instance,
    caps: &OracleCaps,
) -> Result<CertifiedMinAlpha, OracleError> {
    let violations = inst.validate();
    if !violations.is_empty() {
        return Err(GameError::InvalidInstance {
            reasons: violations.iter().map(ToString::to_string).collect(),
        }
        .into());
    }
    let ix = Ix::new(inst)?;
    let catalogs = catalogs_ix(&ix, caps)?;
    checked_profile_count(&catalogs, caps.max_profiles)?;

    let a: Vec<BigRational> = inst.edges.iter().map(|e| decimal_rational(e.a)).collect();
    let b: Vec<BigRational> = inst.edges.iter().map(|e| decimal_rational(e.b)).collect();
    let w: Vec<BigRational> = inst.players.iter().map(|p| decimal_rational(p.w)).collect();

    let n = ix.num_players();
    let m = ix.num_edges();
    let mut counters = vec![0usize; n];
    let mut min_alpha: Option<BigRational> = None;

    let share = |e: usize, load: &BigRational, weight: &BigRational| -> BigRational {
        (&a[e] * load + &b[e]) * weight / load
    };

    loop {
        let paths: Vec<&Vec<usize>> = (0..n).map(|p| &catalogs[p][counters[p]]).collect();
        let mut loads = vec![BigRational::zero(); m];
        for (p, path) in paths.iter().enumerate() {
            for &e in path.iter() {
                loads[e] += &w[p];
            }
        }
        let mut profile_alpha: Option<BigRational> = None;
        for p in 0..n {
            let mut current = BigRational::zero();
            for &e in paths[p].iter() {
                current += share(e, &loads[e], &w[p]);
            }
            let mut best: Option<BigRational> = None;
            for cand in &catalogs[p] {
                let mut cost = BigRational::zero();
                for &e in cand.iter() {
                    let mut load = loads[e].clone();
                    if !paths[p].contains(&e) {
                        load += &w[p];
                    }
                    cost += share(e, &load, &w[p]);
                }
                if best.as_ref().map_or(true, |b| cost < *b) {
                    best = Some(cost);
                }
            }
            let ratio = current / best.expect("catalog nonempty");
            if profile_alpha.as_ref().map_or(true, |a| ratio > *a) {
                profile_alpha = Some(ratio);
            }
        }
        let alpha = profile_alpha.expect("players nonempty");
        if min_alpha.as_ref().map_or(true, |m| alpha < *m) {
            min_alpha = Some(alpha);
        }

        let mut advanced = false;
        for p in (0..n).rev() {
            counters[p] += 1;
            if counters[p] < catalogs[p].len() {
                advanced = true;
                break;
            }
            counters[p] = 0;
        }
        if !advanced {
            break;
        }
    }

    let min_alpha = min_alpha.expect("at least one profile");
    Ok(CertifiedMinAlpha {
        exists_pne: min_alpha.is_one(),
        exact_min_alpha: rational_to_f64(&min_alpha),
        exact_min_alpha_ratio: min_alpha.to_string(),
    })
}

/// Exact rational value of the shortest decimal rendering of `x`, i.e.
/// the number the user wrote in the serialized input.
fn decimal_rational(x: f64) -> BigRational {
    parse_decimal(&format!("{x}")).expect("finite float renders as a decimal")
}

fn parse_decimal(text: &str) -> Option<BigRational> {
    let (mantissa, exp10) = match text.split_once(['e', 'E']) {
        Some((m, e)) => (m, e.parse::<i64>().ok()?),
        None => (text, 0),
    };
    let (sign, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (-1, rest),
        None => (1, mantissa),
    };
    let (int_part, frac_part) = match digits.split_once('.') {
        Some((i, f)) => (i, f),
        None => (digits, ""),
    };
    if int_part.is_empty() && frac_part.is_empty() {
        return None;
    }
    let joined = format!("{int_part}{frac_part}");
    let numer: BigInt = joined.parse().ok()?;
    let scale = exp10 - frac_part.len() as i64;
    let ten = BigInt::from(10);
    let value = if scale >= 0 {
        BigRational::from_integer(numer * ten.pow(scale as u32))
    } else {
        BigRational::new(numer, ten.pow((-scale) as u32))
    };
    Some(if sign < 0 { -value } else { value })
}

fn rational_to_f64(r: &BigRational) -> f64 {
    // Scale into f64 range before dividing; inputs here are modest.
    let numer = r.numer();
    let denom = r.denom();
    let nf = bigint_to_f64(numer);
    let df = bigint_to_f64(denom);
    nf / df
}

fn bigint_to_f64(x: &BigInt) -> f64 {
    let s = x.to_string();
    let v: f64 = s.parse().unwrap_or(if x.is_negative() {
        f64::NEG_INFINITY
    } else {
        f64::INFINITY
    });
    v
}
