#![allow(dead_code)]

use std::path::PathBuf;

use rand::Rng;
use rsmarket::network::{Edge, Node, NodeId, RoadNetwork};
use rsmarket::withinday::{Assignment, DriverId, IdleDriver, PendingRequest, TravelerId};

pub fn scenario_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../scenarios")
}

pub const SCENARIOS: [&str; 7] = [
    "no_regulation",
    "weak_no_lockout",
    "weak_lockout",
    "moderate_no_lockout",
    "moderate_lockout",
    "strong_no_lockout",
    "strong_lockout",
];

/// Random strongly connected digraph with integer edge lengths: a random
/// Hamiltonian cycle plus extra arcs.
pub fn random_network<R: Rng>(rng: &mut R, max_nodes: usize) -> (RoadNetwork, Vec<Edge>) {
    let n = rng.random_range(2..=max_nodes);
    let nodes: Vec<Node> = (0..n).map(|i| Node { label: i as u32, x_m: 0.0, y_m: 0.0 }).collect();
    let mut order: Vec<u32> = (0..n as u32).collect();
    rand::seq::SliceRandom::shuffle(&mut order[..], rng);
    let mut edges = Vec::new();
    for i in 0..n {
        let (a, b) = (order[i], order[(i + 1) % n]);
        edges.push(Edge { from: NodeId(a), to: NodeId(b), length_m: rng.random_range(1..20) as f64 * 100.0 });
    }
    for _ in 0..rng.random_range(0..=2 * n) {
        let a = rng.random_range(0..n as u32);
        let b = rng.random_range(0..n as u32);
        if a != b {
            edges.push(Edge { from: NodeId(a), to: NodeId(b), length_m: rng.random_range(1..20) as f64 * 100.0 });
        }
    }
    let net = RoadNetwork::new(nodes, edges.clone(), 10.0).expect("strongly connected by construction");
    (net, edges)
}

/// All-pairs shortest lengths by Floyd–Warshall.
pub fn floyd_warshall(n: usize, edges: &[Edge]) -> Vec<Vec<f64>> {
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for e in edges {
        let (a, b) = (e.from.index(), e.to.index());
        d[a][b] = d[a][b].min(e.length_m);
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

/// FIFO nearest-idle assignment by scanning every remaining driver.
pub fn brute_force_match(
    pending: &[PendingRequest],
    idle: &[IdleDriver],
    dist: &[Vec<f64>],
    speed: f64,
) -> Vec<Assignment> {
    let mut free: Vec<usize> = (0..idle.len()).collect();
    let mut out = Vec::new();
    for (ri, req) in pending.iter().enumerate() {
        if free.is_empty() {
            break;
        }
        let key = |di: usize| (dist[idle[di].position.index()][req.origin.index()], idle[di].driver);
        let best = *free
            .iter()
            .min_by(|&&a, &&b| key(a).partial_cmp(&key(b)).expect("finite"))
            .expect("non-empty");
        free.retain(|&d| d != best);
        let secs = (dist[idle[best].position.index()][req.origin.index()] / speed).ceil() as u32;
        out.push(Assignment { request: ri, driver: best, pickup_secs: secs });
    }
    out
}

pub fn random_matching_instance<R: Rng>(
    rng: &mut R,
    net: &RoadNetwork,
) -> (Vec<PendingRequest>, Vec<IdleDriver>) {
    let n = net.node_count() as u32;
    let requests = (0..rng.random_range(0..=5))
        .map(|i| PendingRequest { traveler: TravelerId(i), origin: NodeId(rng.random_range(0..n)) })
        .collect();
    let mut ids: Vec<u32> = (0..10).collect();
    rand::seq::SliceRandom::shuffle(&mut ids[..], rng);
    let drivers = ids[..rng.random_range(0..=5)]
        .iter()
        .map(|&d| IdleDriver { driver: DriverId(d), position: NodeId(rng.random_range(0..n)) })
        .collect();
    (requests, drivers)
}

use rsmarket::game::{FareGrid, PricingMarket};
use rsmarket::withinday::PlatformId;
use std::sync::Arc;

/// Market whose daily profit depends only on the platform's own fare,
/// through a table indexed by grid position.
#[derive(Clone)]
pub struct TableMarket {
    pub grid: FareGrid,
    pub fares: [f64; 2],
    pub payoff: Arc<Vec<f64>>,
    pub day: usize,
}

impl PricingMarket for TableMarket {
    type Day = [f64; 2];

    fn fare(&self, platform: PlatformId) -> f64 {
        self.fares[platform.index()]
    }

    fn set_fare(&mut self, platform: PlatformId, fare: f64) {
        self.fares[platform.index()] = fare;
    }

    fn advance_day(&mut self) -> rsmarket::Result<[f64; 2]> {
        self.day += 1;
        let p = |f: f64| self.payoff[self.grid.index_of(f).expect("on grid")];
        Ok([p(self.fares[0]), p(self.fares[1])])
    }

    fn profit(day: &[f64; 2], platform: PlatformId) -> f64 {
        day[platform.index()]
    }
}

/// Every weak ordering of three items, as ranks (0 = best).
pub fn weak_orderings3() -> Vec<[u8; 3]> {
    let mut out = Vec::new();
    for a in 0..3u8 {
        for b in 0..3u8 {
            for c in 0..3u8 {
                let r = [a, b, c];
                let mut used: Vec<u8> = r.to_vec();
                used.sort_unstable();
                used.dedup();
                // ranks must be contiguous from 0
                if used.iter().enumerate().all(|(i, &v)| v as usize == i) {
                    out.push(r);
                }
            }
        }
    }
    out
}

/// Expected choice among ascending candidates: highest payoff, then the
/// current fare, then the lowest.
pub fn expected_pick(candidates: &[(f64, f64)], current: f64) -> f64 {
    let best = candidates.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<f64> = candidates.iter().filter(|c| c.1 == best).map(|c| c.0).collect();
    if tied.contains(&current) {
        current
    } else {
        tied[0]
    }
}
