use std::collections::HashSet;
use std::path::Path;

use rand::Rng;
use serde::Deserialize;

use crate::error::{Error, Result};
use crate::network::{NodeId, RoadNetwork};
use crate::withinday::{TravelerId, TripRequest};

/// A traveler's fixed trip.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TripSpec {
    pub origin: NodeId,
    pub destination: NodeId,
    /// Fixed request time in seconds from shift start; drawn daily when absent.
    pub request_time: Option<u32>,
}

/// Uniform distinct origin and destination nodes, one pair per traveler.
pub fn synth_population<R: Rng + ?Sized>(net: &RoadNetwork, travelers: usize, rng: &mut R) -> Result<Vec<TripSpec>> {
    let n = net.node_count();
    if travelers > 0 && n < 2 {
        return Err(Error::input("trips need at least two nodes"));
    }
    Ok((0..travelers)
        .map(|_| {
            let o = rng.random_range(0..n);
            let mut d = rng.random_range(0..n - 1);
            if d >= o {
                d += 1;
            }
            TripSpec { origin: NodeId(o as u32), destination: NodeId(d as u32), request_time: None }
        })
        .collect())
}

/// One request per participating traveler, in the order given. Travelers
/// without a fixed time request uniformly over the shift.
pub fn synth_demand<R: Rng + ?Sized>(
    trips: &[TripSpec],
    participants: &[TravelerId],
    shift_secs: u32,
    rng: &mut R,
) -> Vec<TripRequest> {
    participants
        .iter()
        .map(|&t| {
            let spec = &trips[t.0 as usize];
            let request_time = spec.request_time.unwrap_or_else(|| rng.random_range(0..shift_secs));
            TripRequest { traveler: t, origin: spec.origin, destination: spec.destination, request_time }
        })
        .collect()
}

#[derive(Deserialize)]
struct Row {
    traveler_id: u32,
    origin_node: u32,
    destination_node: u32,
    request_time_s: Option<u32>,
}

/// Reads a demand file: CSV with header
/// `traveler_id,origin_node,destination_node,request_time_s`. Node columns
/// hold network node ids, ids must be exactly `0..n` in any order and the
/// time column may be left empty.
pub fn load_demand(path: impl AsRef<Path>, net: &RoadNetwork, shift_secs: u32) -> Result<Vec<TripSpec>> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_path(path)?;
    let mut rows: Vec<(u32, TripSpec)> = Vec::new();
    let mut seen = HashSet::new();
    for (i, rec) in reader.deserialize::<Row>().enumerate() {
        let line = i + 2;
        let parse_err = |message: String| Error::Parse { path: path.to_path_buf(), line, message };
        let row = rec.map_err(|e| parse_err(e.to_string()))?;
        let node = |label: u32| net.node_by_label(label).ok_or_else(|| parse_err(format!("unknown node {label}")));
        let origin = node(row.origin_node)?;
        let destination = node(row.destination_node)?;
        if origin == destination {
            return Err(parse_err("origin equals destination".into()));
        }
        if row.request_time_s.is_some_and(|t| t >= shift_secs) {
            return Err(parse_err(format!("request time outside the {shift_secs} s shift")));
        }
        if !seen.insert(row.traveler_id) {
            return Err(parse_err(format!("duplicate traveler {}", row.traveler_id)));
        }
        rows.push((row.traveler_id, TripSpec { origin, destination, request_time: row.request_time_s }));
    }
    rows.sort_by_key(|r| r.0);
    if let Some(pos) = rows.iter().enumerate().position(|(i, r)| r.0 as usize != i) {
        return Err(Error::input(format!("{}: traveler ids must be 0..{}, missing {pos}", path.display(), rows.len())));
    }
    Ok(rows.into_iter().map(|r| r.1).collect())
}
