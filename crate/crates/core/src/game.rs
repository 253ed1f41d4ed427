//! Game model: a directed multigraph with affine edge costs, weighted
//! players routing between terminal pairs, proportional cost sharing, and
//! the logarithmic potential whose closed-form bounds certify approximate
//! equilibria.

use std::cmp::Ordering;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap, HashMap, VecDeque};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::GameError;

pub type VertexId = String;
pub type EdgeId = String;
pub type PlayerId = String;

/// Relative tolerance used when comparing derived quantities.
pub const REL_TOL: f64 = 1e-9;

/// Directed edge with cost `a * load + b` at total user weight `load`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Edge {
    pub id: EdgeId,
    pub tail: VertexId,
    pub head: VertexId,
    pub a: f64,
    pub b: f64,
}

/// A player routes its weight along one simple `source -> sink` path.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Player {
    pub id: PlayerId,
    pub w: f64,
    pub source: VertexId,
    pub sink: VertexId,
}

/// Immutable game description. Parallel edges are allowed (they carry
/// distinct ids); self-loops are not. Paths are edge-id sequences.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Instance {
    pub vertices: Vec<VertexId>,
    pub edges: Vec<Edge>,
    pub players: Vec<Player>,
}

/// One simple path per player; the game state that dynamics mutates.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub paths: BTreeMap<PlayerId, Vec<EdgeId>>,
}

/// Load and user set of one edge under a profile.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct EdgeLoad {
    pub weight: f64,
    pub users: BTreeSet<PlayerId>,
}

/// Per-edge total weights and user sets; covers every edge of the
/// instance, with unused edges at weight 0 and an empty user set.
#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct LoadMap {
    pub edges: BTreeMap<EdgeId, EdgeLoad>,
}

/// The equilibrium approximation factor `2 * log2(1 + W + w_max)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AlphaBound {
    pub value: f64,
    /// False when the minimum player weight is not 1. The closed-form
    /// guarantees assume that normalization; the value is still returned.
    pub weights_normalized: bool,
}

/// Closed-form envelope of the potential over all valid profiles.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PotentialBounds {
    pub lower: f64,
    pub upper: f64,
}

/// A broken instance invariant reported by [`Instance::validate`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub enum Violation {
    DuplicateVertex { id: VertexId },
    DuplicateEdge { id: EdgeId },
    DuplicatePlayer { id: PlayerId },
    UnknownEndpoint { edge: EdgeId, vertex: VertexId },
    SelfLoop { edge: EdgeId },
    NonPositiveSlope { edge: EdgeId, a: f64 },
    NonPositiveOffset { edge: EdgeId, b: f64 },
    NonPositiveWeight { player: PlayerId, w: f64 },
    UnknownTerminal { player: PlayerId, vertex: VertexId },
    SourceEqualsSink { player: PlayerId },
    NoPath { player: PlayerId },
    NoPlayers,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::DuplicateVertex { id } => write!(f, "duplicate vertex id `{id}`"),
            Violation::DuplicateEdge { id } => write!(f, "duplicate edge id `{id}`"),
            Violation::DuplicatePlayer { id } => write!(f, "duplicate player id `{id}`"),
            Violation::UnknownEndpoint { edge, vertex } => {
                write!(f, "edge `{edge}` references undeclared vertex `{vertex}`")
            }
            Violation::SelfLoop { edge } => write!(f, "edge `{edge}` is a self-loop"),
            Violation::NonPositiveSlope { edge, a } => {
                write!(f, "edge `{edge}` has nonpositive cost slope {a}")
            }
            Violation::NonPositiveOffset { edge, b } => {
                write!(f, "edge `{edge}` has nonpositive cost offset {b}")
            }
            Violation::NonPositiveWeight { player, w } => {
                write!(f, "player `{player}` has nonpositive weight {w}")
            }
            Violation::UnknownTerminal { player, vertex } => {
                write!(f, "player `{player}` references undeclared vertex `{vertex}`")
            }
            Violation::SourceEqualsSink { player } => {
                write!(f, "player `{player}` has source equal to sink")
            }
            Violation::NoPath { player } => {
                write!(f, "player `{player}` has no source -> sink path")
            }
            Violation::NoPlayers => write!(f, "instance declares no players"),
        }
    }
}

impl Instance {
    pub fn num_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn num_players(&self) -> usize {
        self.players.len()
    }

    pub fn edge(&self, id: &str) -> Result<&Edge, GameError> {
        self.edges
            .iter()
            .find(|e| e.id == id)
            .ok_or_else(|| GameError::UnknownEdge(id.to_string()))
    }

    pub fn player(&self, id: &str) -> Result<&Player, GameError> {
        self.players
            .iter()
            .find(|p| p.id == id)
            .ok_or_else(|| GameError::UnknownPlayer(id.to_string()))
    }

    /// Sum of all player weights.
    pub fn total_weight(&self) -> f64 {
        self.players.iter().map(|p| p.w).sum()
    }

    pub fn max_weight(&self) -> Option<f64> {
        self.players.iter().map(|p| p.w).reduce(f64::max)
    }

    pub fn min_weight(&self) -> Option<f64> {
        self.players.iter().map(|p| p.w).reduce(f64::min)
    }

    /// True when the minimum player weight is 1 within [`REL_TOL`].
    pub fn weights_normalized(&self) -> bool {
        match self.min_weight() {
            Some(min) => (min - 1.0).abs() <= REL_TOL,
            None => false,
        }
    }

    /// Evaluates the affine edge cost `a * load + b`.
    pub fn edge_cost(&self, edge: &str, load: f64) -> Result<f64, GameError> {
        debug_assert!(load >= 0.0);
        let e = self.edge(edge)?;
        Ok(e.a * load + e.b)
    }

    /// Checks that a profile assigns a valid simple path to exactly the
    /// instance's players.
    pub fn validate_profile(&self, profile: &Profile) -> Result<(), GameError> {
        let ix = Ix::new(self)?;
        ix.index_profile(profile).map(|_| ())
    }

    /// Total weight and user set per edge under `profile`.
    pub fn compute_loads(&self, profile: &Profile) -> Result<LoadMap, GameError> {
        let ix = Ix::new(self)?;
        let paths = ix.index_profile(profile)?;
        let loads = ix.loads(&paths);
        let mut edges: BTreeMap<EdgeId, EdgeLoad> = self
            .edges
            .iter()
            .map(|e| (e.id.clone(), EdgeLoad::default()))
            .collect();
        for (pi, path) in paths.iter().enumerate() {
            for &e in path {
                edges
                    .get_mut(&self.edges[e].id)
                    .expect("edge present")
                    .users
                    .insert(self.players[pi].id.clone());
            }
        }
        for (e, load) in loads.iter().enumerate() {
            edges.get_mut(&self.edges[e].id).expect("edge present").weight = *load;
        }
        Ok(LoadMap { edges })
    }

    /// A user's proportional share `c_e(w_e) * w_i / w_e` of an edge cost.
    pub fn cost_share(&self, loads: &LoadMap, player: &str, edge: &str) -> Result<f64, GameError> {
        let p = self.player(player)?;
        let e = self.edge(edge)?;
        let load = loads
            .edges
            .get(edge)
            .ok_or_else(|| GameError::UnknownEdge(edge.to_string()))?;
        if !load.users.contains(player) {
            return Err(GameError::NotAUser {
                player: player.to_string(),
                edge: edge.to_string(),
            });
        }
        Ok((e.a * load.weight + e.b) * p.w / load.weight)
    }

    /// Sum of the player's cost shares over its chosen path.
    pub fn player_cost(&self, profile: &Profile, player: &str) -> Result<f64, GameError> {
        let ix = Ix::new(self)?;
        let paths = ix.index_profile(profile)?;
        let p = ix.player_index(player)?;
        let loads = ix.loads(&paths);
        Ok(ix.player_cost_of(&loads, &paths[p], ix.weight[p]))
    }

    /// Total cost of the profile: the full edge cost summed over used edges.
    pub fn social_cost(&self, profile: &Profile) -> Result<f64, GameError> {
        let ix = Ix::new(self)?;
        let paths = ix.index_profile(profile)?;
        let loads = ix.loads(&paths);
        let mut used = vec![false; self.edges.len()];
        for path in &paths {
            for &e in path {
                used[e] = true;
            }
        }
        Ok(loads
            .iter()
            .enumerate()
            .filter(|(e, _)| used[*e])
            .map(|(e, &w)| self.edges[e].a * w + self.edges[e].b)
            .sum())
    }

    /// The potential `sum over edges of c_e(w_e) * log2(1 + w_e)`. Unused
    /// edges contribute 0 because `log2(1) = 0`.
    pub fn potential(&self, profile: &Profile) -> Result<f64, GameError> {
        let ix = Ix::new(self)?;
        let paths = ix.index_profile(profile)?;
        let loads = ix.loads(&paths);
        Ok(ix.potential_of(&loads))
    }

    /// `2 * log2(1 + W + w_max)`: the factor at which the potential
    /// certifies equilibrium existence.
    pub fn alpha_bound(&self) -> Result<AlphaBound, GameError> {
        if self.players.is_empty() {
            return Err(GameError::NoPlayers);
        }
        let total = self.total_weight();
        let max = self.max_weight().expect("players nonempty");
        Ok(AlphaBound {
            value: 2.0 * (1.0 + total + max).log2(),
            weights_normalized: self.weights_normalized(),
        })
    }

    /// Envelope `[c_min * log2(1+W), m * c_max * log2(1+W)]` containing the
    /// potential of every valid profile. Requires at least two players and
    /// minimum weight 1.
    pub fn potential_bounds(&self) -> Result<PotentialBounds, GameError> {
        match self.players.len() {
            0 => return Err(GameError::NoPlayers),
            1 => return Err(GameError::TooFewPlayers(1)),
            _ => {}
        }
        if !self.weights_normalized() {
            return Err(GameError::NotNormalized {
                min_weight: self.min_weight().expect("players nonempty"),
            });
        }
        if self.edges.is_empty() {
            return Err(GameError::InvalidInstance {
                reasons: vec!["instance declares no edges".to_string()],
            });
        }
        let total = self.total_weight();
        let lg = (1.0 + total).log2();
        let c_max = self
            .edges
            .iter()
            .map(|e| e.a * total + e.b)
            .reduce(f64::max)
            .expect("edges nonempty");
        let c_min = self
            .edges
            .iter()
            .map(|e| e.a + e.b)
            .reduce(f64::min)
            .expect("edges nonempty");
        Ok(PotentialBounds {
            lower: c_min * lg,
            upper: self.edges.len() as f64 * c_max * lg,
        })
    }

    /// Checks every instance invariant and reports each violation. An empty
    /// result means the instance is valid. A single player is accepted so
    /// that brute-force fixtures stay expressible; the theoretical-bound
    /// operations separately require two or more.
    pub fn validate(&self) -> Vec<Violation> {
        let mut out = Vec::new();
        let mut vertex_of = HashMap::new();
        for (i, v) in self.vertices.iter().enumerate() {
            if vertex_of.insert(v.as_str(), i).is_some() {
                out.push(Violation::DuplicateVertex { id: v.clone() });
            }
        }
        let mut edge_ids = HashMap::new();
        for e in &self.edges {
            if edge_ids.insert(e.id.as_str(), ()).is_some() {
                out.push(Violation::DuplicateEdge { id: e.id.clone() });
            }
            for v in [&e.tail, &e.head] {
                if !vertex_of.contains_key(v.as_str()) {
                    out.push(Violation::UnknownEndpoint {
                        edge: e.id.clone(),
                        vertex: v.clone(),
                    });
                }
            }
            if e.tail == e.head {
                out.push(Violation::SelfLoop { edge: e.id.clone() });
            }
            if !(e.a > 0.0) || !e.a.is_finite() {
                out.push(Violation::NonPositiveSlope {
                    edge: e.id.clone(),
                    a: e.a,
                });
            }
            if !(e.b > 0.0) || !e.b.is_finite() {
                out.push(Violation::NonPositiveOffset {
                    edge: e.id.clone(),
                    b: e.b,
                });
            }
        }
        if self.players.is_empty() {
            out.push(Violation::NoPlayers);
        }
        // Adjacency over structurally sound edges only, for reachability.
        let mut adj = vec![Vec::new(); self.vertices.len()];
        for e in &self.edges {
            if let (Some(&t), Some(&h)) = (
                vertex_of.get(e.tail.as_str()),
                vertex_of.get(e.head.as_str()),
            ) {
                if t != h {
                    adj[t].push(h);
                }
            }
        }
        let mut player_ids = HashMap::new();
        for p in &self.players {
            if player_ids.insert(p.id.as_str(), ()).is_some() {
                out.push(Violation::DuplicatePlayer { id: p.id.clone() });
            }
            if !(p.w > 0.0) || !p.w.is_finite() {
                out.push(Violation::NonPositiveWeight {
                    player: p.id.clone(),
                    w: p.w,
                });
            }
            let mut terminals_ok = true;
            for v in [&p.source, &p.sink] {
                if !vertex_of.contains_key(v.as_str()) {
                    out.push(Violation::UnknownTerminal {
                        player: p.id.clone(),
                        vertex: v.clone(),
                    });
                    terminals_ok = false;
                }
            }
            if p.source == p.sink {
                out.push(Violation::SourceEqualsSink { player: p.id.clone() });
                continue;
            }
            if terminals_ok {
                let s = vertex_of[p.source.as_str()];
                let t = vertex_of[p.sink.as_str()];
                if !bfs_reachable(&adj, s, t) {
                    out.push(Violation::NoPath { player: p.id.clone() });
                }
            }
        }
        out
    }

    pub fn from_json_str(text: &str) -> serde_json::Result<Instance> {
        serde_json::from_str(text)
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("instance serializes");
        s.push('\n');
        s
    }
}

impl Profile {
    pub fn from_json_str(text: &str) -> serde_json::Result<Profile> {
        serde_json::from_str(text)
    }

    pub fn to_json_string(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("profile serializes");
        s.push('\n');
        s
    }
}

fn bfs_reachable(adj: &[Vec<usize>], s: usize, t: usize) -> bool {
    if s == t {
        return true;
    }
    let mut seen = vec![false; adj.len()];
    let mut queue = VecDeque::from([s]);
    seen[s] = true;
    while let Some(v) = queue.pop_front() {
        for &u in &adj[v] {
            if u == t {
                return true;
            }
            if !seen[u] {
                seen[u] = true;
                queue.push_back(u);
            }
        }
    }
    false
}

/// Index-resolved view of an instance: id lookups done once, adjacency
/// lists sorted by edge id for deterministic traversal order.
pub(crate) struct Ix<'a> {
    pub inst: &'a Instance,
    vertex_of: HashMap<&'a str, usize>,
    player_of: HashMap<&'a str, usize>,
    pub tail: Vec<usize>,
    pub head: Vec<usize>,
    pub cost_a: Vec<f64>,
    pub cost_b: Vec<f64>,
    pub weight: Vec<f64>,
    pub source: Vec<usize>,
    pub sink: Vec<usize>,
    pub out: Vec<Vec<usize>>,
    edge_of: HashMap<&'a str, usize>,
}

impl<'a> Ix<'a> {
    pub fn new(inst: &'a Instance) -> Result<Self, GameError> {
        let mut vertex_of = HashMap::with_capacity(inst.vertices.len());
        for (i, v) in inst.vertices.iter().enumerate() {
            if vertex_of.insert(v.as_str(), i).is_some() {
                return Err(GameError::DuplicateId(v.clone()));
            }
        }
        let lookup = |id: &VertexId| -> Result<usize, GameError> {
            vertex_of
                .get(id.as_str())
                .copied()
                .ok_or_else(|| GameError::UnknownVertex(id.clone()))
        };
        let mut edge_of = HashMap::with_capacity(inst.edges.len());
        let mut tail = Vec::with_capacity(inst.edges.len());
        let mut head = Vec::with_capacity(inst.edges.len());
        let mut cost_a = Vec::with_capacity(inst.edges.len());
        let mut cost_b = Vec::with_capacity(inst.edges.len());
        for (i, e) in inst.edges.iter().enumerate() {
            if edge_of.insert(e.id.as_str(), i).is_some() {
                return Err(GameError::DuplicateId(e.id.clone()));
            }
            tail.push(lookup(&e.tail)?);
            head.push(lookup(&e.head)?);
            cost_a.push(e.a);
            cost_b.push(e.b);
        }
        let mut player_of = HashMap::with_capacity(inst.players.len());
        let mut weight = Vec::with_capacity(inst.players.len());
        let mut source = Vec::with_capacity(inst.players.len());
        let mut sink = Vec::with_capacity(inst.players.len());
        for (i, p) in inst.players.iter().enumerate() {
            if player_of.insert(p.id.as_str(), i).is_some() {
                return Err(GameError::DuplicateId(p.id.clone()));
            }
            weight.push(p.w);
            source.push(lookup(&p.source)?);
            sink.push(lookup(&p.sink)?);
        }
        let mut out = vec![Vec::new(); inst.vertices.len()];
        for e in 0..inst.edges.len() {
            out[tail[e]].push(e);
        }
        for list in &mut out {
            list.sort_by(|&x, &y| inst.edges[x].id.cmp(&inst.edges[y].id));
        }
        Ok(Ix {
            inst,
            vertex_of,
            player_of,
            tail,
            head,
            cost_a,
            cost_b,
            weight,
            source,
            sink,
            out,
            edge_of,
        })
    }

    pub fn num_edges(&self) -> usize {
        self.tail.len()
    }

    pub fn num_players(&self) -> usize {
        self.weight.len()
    }

    pub fn vertex_index(&self, id: &str) -> Result<usize, GameError> {
        self.vertex_of
            .get(id)
            .copied()
            .ok_or_else(|| GameError::UnknownVertex(id.to_string()))
    }

    pub fn player_index(&self, id: &str) -> Result<usize, GameError> {
        self.player_of
            .get(id)
            .copied()
            .ok_or_else(|| GameError::UnknownPlayer(id.to_string()))
    }

    pub fn edge_ids(&self, path: &[usize]) -> Vec<EdgeId> {
        path.iter().map(|&e| self.inst.edges[e].id.clone()).collect()
    }

    /// Resolves and checks one player's path: known edges, chained
    /// endpoints, correct terminals, no repeated vertex.
    pub fn index_path(&self, player: usize, path: &[EdgeId]) -> Result<Vec<usize>, GameError> {
        let pid = &self.inst.players[player].id;
        let fail = |reason: String| GameError::InvalidProfile {
            player: pid.clone(),
            reason,
        };
        if path.is_empty() {
            return Err(fail("path is empty".to_string()));
        }
        let mut idxs = Vec::with_capacity(path.len());
        for id in path {
            match self.edge_of.get(id.as_str()) {
                Some(&e) => idxs.push(e),
                None => return Err(fail(format!("references unknown edge `{id}`"))),
            }
        }
        if self.tail[idxs[0]] != self.source[player] {
            return Err(fail(format!(
                "path starts at `{}`, not the player's source",
                self.inst.vertices[self.tail[idxs[0]]]
            )));
        }
        if self.head[*idxs.last().expect("nonempty")] != self.sink[player] {
            return Err(fail(format!(
                "path ends at `{}`, not the player's sink",
                self.inst.vertices[self.head[*idxs.last().expect("nonempty")]]
            )));
        }
        let mut visited = vec![self.tail[idxs[0]]];
        for pair in idxs.windows(2) {
            if self.head[pair[0]] != self.tail[pair[1]] {
                return Err(fail(format!(
                    "edges `{}` and `{}` are not consecutive",
                    self.inst.edges[pair[0]].id, self.inst.edges[pair[1]].id
                )));
            }
        }
        for &e in &idxs {
            let v = self.head[e];
            if visited.contains(&v) {
                return Err(fail(format!(
                    "path revisits vertex `{}`",
                    self.inst.vertices[v]
                )));
            }
            visited.push(v);
        }
        Ok(idxs)
    }

    /// Resolves a profile to per-player edge-index paths, requiring exactly
    /// one path per instance player.
    pub fn index_profile(&self, profile: &Profile) -> Result<Vec<Vec<usize>>, GameError> {
        for key in profile.paths.keys() {
            if !self.player_of.contains_key(key.as_str()) {
                return Err(GameError::InvalidProfile {
                    player: key.clone(),
                    reason: "not a player of the instance".to_string(),
                });
            }
        }
        let mut out = Vec::with_capacity(self.inst.players.len());
        for (i, p) in self.inst.players.iter().enumerate() {
            let path = profile.paths.get(&p.id).ok_or_else(|| GameError::InvalidProfile {
                player: p.id.clone(),
                reason: "profile assigns no path".to_string(),
            })?;
            out.push(self.index_path(i, path)?);
        }
        Ok(out)
    }

    pub fn profile_from_paths(&self, paths: &[Vec<usize>]) -> Profile {
        let mut map = BTreeMap::new();
        for (i, path) in paths.iter().enumerate() {
            map.insert(self.inst.players[i].id.clone(), self.edge_ids(path));
        }
        Profile { paths: map }
    }

    /// Per-edge total weight, accumulated in player order.
    pub fn loads(&self, paths: &[Vec<usize>]) -> Vec<f64> {
        let mut loads = vec![0.0; self.num_edges()];
        for (i, path) in paths.iter().enumerate() {
            for &e in path {
                loads[e] += self.weight[i];
            }
        }
        loads
    }

    /// Loads with one player's contribution removed.
    pub fn loads_without(&self, loads: &[f64], path: &[usize], w: f64) -> Vec<f64> {
        let mut out = loads.to_vec();
        for &e in path {
            out[e] = (out[e] - w).max(0.0);
        }
        out
    }

    pub fn potential_of(&self, loads: &[f64]) -> f64 {
        loads
            .iter()
            .enumerate()
            .map(|(e, &w)| (self.cost_a[e] * w + self.cost_b[e]) * (1.0 + w).log2())
            .sum()
    }

    /// Cost share a player of weight `w` would pay on edge `e` after
    /// joining it on top of `load_without` (the load excluding the player).
    pub fn deviation_weight(&self, e: usize, load_without: f64, w: f64) -> f64 {
        let total = load_without + w;
        (self.cost_a[e] * total + self.cost_b[e]) * w / total
    }

    pub fn path_cost_deviation(&self, path: &[usize], loads_without: &[f64], w: f64) -> f64 {
        path.iter()
            .map(|&e| self.deviation_weight(e, loads_without[e], w))
            .sum()
    }

    /// Definitional player cost: shares of the already-loaded edges.
    pub fn player_cost_of(&self, loads: &[f64], path: &[usize], w: f64) -> f64 {
        path.iter()
            .map(|&e| (self.cost_a[e] * loads[e] + self.cost_b[e]) * w / loads[e])
            .sum()
    }

    /// Single-source shortest path over nonnegative per-edge weights.
    /// Deterministic: ties resolve by heap order on (distance, vertex) and
    /// by edge-id-sorted adjacency. Returns edge-index path and its cost.
    pub fn dijkstra(&self, weights: &[f64], source: usize, sink: usize) -> Option<(Vec<usize>, f64)> {
        let nv = self.out.len();
        let mut dist = vec![f64::INFINITY; nv];
        let mut pred: Vec<Option<usize>> = vec![None; nv];
        let mut settled = vec![false; nv];
        let mut heap = BinaryHeap::new();
        dist[source] = 0.0;
        heap.push(MinEntry {
            dist: 0.0,
            vertex: source,
        });
        while let Some(MinEntry { dist: d, vertex: v }) = heap.pop() {
            if settled[v] {
                continue;
            }
            settled[v] = true;
            if v == sink {
                break;
            }
            for &e in &self.out[v] {
                let u = self.head[e];
                if settled[u] {
                    continue;
                }
                let candidate = d + weights[e];
                if candidate < dist[u] {
                    dist[u] = candidate;
                    pred[u] = Some(e);
                    heap.push(MinEntry {
                        dist: candidate,
                        vertex: u,
                    });
                }
            }
        }
        if !dist[sink].is_finite() {
            return None;
        }
        let mut path = Vec::new();
        let mut v = sink;
        while v != source {
            let e = pred[v]?;
            path.push(e);
            v = self.tail[e];
        }
        path.reverse();
        Some((path, dist[sink]))
    }
}

/// Min-heap entry; distances are finite and never NaN here.
#[derive(Copy, Clone, PartialEq)]
struct MinEntry {
    dist: f64,
    vertex: usize,
}

impl Eq for MinEntry {}

impl Ord for MinEntry {
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .dist
            .partial_cmp(&self.dist)
            .expect("finite distances")
            .then_with(|| other.vertex.cmp(&self.vertex))
    }
}

impl PartialOrd for MinEntry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
