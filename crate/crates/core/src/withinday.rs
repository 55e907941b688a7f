//! One operating day as a discrete-event simulation.
//!
//! Requests arrive over the shift, each platform dispatches the closest idle
//! driver of its own fleet (first-dispatch), and requests that find no idle
//! driver wait in a per-platform FIFO queue until one frees up. Whatever is
//! still queued at shift end goes unserved. Rides already dispatched are
//! completed even if they finish after the shift.

use std::cmp::Reverse;
use std::collections::{BinaryHeap, VecDeque};

use crate::error::{Error, Result};
use crate::network::{NodeId, RoadNetwork};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TravelerId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct DriverId(pub u32);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PlatformId(pub u8);

impl PlatformId {
    #[inline]
    pub fn index(self) -> usize {
        self.0 as usize
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TripRequest {
    pub traveler: TravelerId,
    pub origin: NodeId,
    pub destination: NodeId,
    /// Seconds from shift start.
    pub request_time: u32,
}

/// A request together with the platform the traveler chose for the day.
#[derive(Debug, Clone, PartialEq)]
pub struct PlatformRequest {
    pub request: TripRequest,
    pub platform: PlatformId,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DriverStatus {
    Idle,
    EnroutePickup,
    InRide,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DriverShiftState {
    pub driver: DriverId,
    pub platform: PlatformId,
    pub position: NodeId,
    pub status: DriverStatus,
    /// Gross fares collected today; the commission split happens at
    /// settlement.
    pub fares_collected: f64,
    pub busy_time: u32,
    pub rides: u32,
}

impl DriverShiftState {
    pub fn idle_at(driver: DriverId, platform: PlatformId, position: NodeId) -> Self {
        DriverShiftState {
            driver,
            platform,
            position,
            status: DriverStatus::Idle,
            fares_collected: 0.0,
            busy_time: 0,
            rides: 0,
        }
    }

    fn advance(&mut self, to: DriverStatus) {
        use DriverStatus::*;
        let ok = matches!(
            (self.status, to),
            (Idle, EnroutePickup) | (EnroutePickup, InRide) | (InRide, Idle)
        );
        debug_assert!(ok, "illegal transition {:?} -> {:?}", self.status, to);
        self.status = to;
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RideRecord {
    pub traveler: TravelerId,
    pub driver: DriverId,
    pub platform: PlatformId,
    /// Request to pickup arrival, seconds.
    pub wait_time: u32,
    pub in_vehicle_time: u32,
    pub distance_m: f64,
    pub fare: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DayOutcome {
    pub rides: Vec<RideRecord>,
    pub unserved: Vec<(TravelerId, PlatformId)>,
    /// Final state of every driver who worked, in input order.
    pub drivers: Vec<DriverShiftState>,
    /// Gross fares per platform, indexed by platform.
    pub fare_totals: Vec<f64>,
}

/// A waiting request as seen by the matcher.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PendingRequest {
    pub traveler: TravelerId,
    pub origin: NodeId,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdleDriver {
    pub driver: DriverId,
    pub position: NodeId,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Assignment {
    /// Index into the pending slice.
    pub request: usize,
    /// Index into the idle slice.
    pub driver: usize,
    pub pickup_secs: u32,
}

/// First-dispatch matching for one platform.
///
/// Requests are taken in the given (FIFO) order; each gets the remaining
/// idle driver with the shortest travel time to its origin, ties going to
/// the lower driver id. Stops once drivers run out; the tail of `pending`
/// stays unmatched.
pub fn match_requests(pending: &[PendingRequest], idle: &[IdleDriver], net: &RoadNetwork) -> Vec<Assignment> {
    let mut taken = vec![false; idle.len()];
    let mut out = Vec::with_capacity(pending.len().min(idle.len()));
    for (ri, req) in pending.iter().enumerate() {
        let mut best: Option<(f64, DriverId, usize)> = None;
        for (di, d) in idle.iter().enumerate() {
            if taken[di] {
                continue;
            }
            let t = net.length_unchecked(d.position, req.origin);
            let better = match best {
                None => true,
                Some((bt, bid, _)) => t < bt || (t == bt && d.driver < bid),
            };
            if better {
                best = Some((t, d.driver, di));
            }
        }
        let Some((_, _, di)) = best else { break };
        taken[di] = true;
        out.push(Assignment {
            request: ri,
            driver: di,
            pickup_secs: net.travel_secs(idle[di].position, req.origin),
        });
    }
    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum EventKind {
    // drop-offs first so a driver freed at t can serve a request arriving at t
    DropOff,
    Pickup,
    Arrival,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
struct Event {
    time: u32,
    kind: EventKind,
    seq: u64,
    // request index for arrivals and pickups, driver slot for drop-offs
    subject: usize,
}

struct Ongoing {
    request: usize,
    dispatched_at: u32,
    pickup_at: u32,
}

/// Runs one shift.
///
/// `fares` holds the per-km fare of each platform, indexed by platform.
/// Drivers must be idle with zero earnings on entry.
pub fn run_day(
    net: &RoadNetwork,
    requests: &[PlatformRequest],
    drivers: &[DriverShiftState],
    fares: &[f64],
    shift_duration: u32,
) -> Result<DayOutcome> {
    for r in requests {
        let q = &r.request;
        if !net.contains(q.origin) || !net.contains(q.destination) {
            return Err(Error::input(format!("request of traveler {} uses an unknown node", q.traveler.0)));
        }
        if q.origin == q.destination {
            return Err(Error::input(format!("request of traveler {} has origin == destination", q.traveler.0)));
        }
        if q.request_time >= shift_duration {
            return Err(Error::input(format!(
                "request of traveler {} at {} s is outside the {} s shift",
                q.traveler.0, q.request_time, shift_duration
            )));
        }
        if r.platform.index() >= fares.len() {
            return Err(Error::input(format!("request for unknown platform {}", r.platform.0)));
        }
    }
    for d in drivers {
        if !net.contains(d.position) || d.platform.index() >= fares.len() {
            return Err(Error::input(format!("driver {} has an unknown node or platform", d.driver.0)));
        }
        if d.status != DriverStatus::Idle || d.fares_collected != 0.0 {
            return Err(Error::input(format!("driver {} must start the day idle", d.driver.0)));
        }
    }

    let platforms = fares.len();
    let mut fleet: Vec<DriverShiftState> = drivers.to_vec();
    let mut idle: Vec<Vec<usize>> = vec![Vec::new(); platforms];
    for (slot, d) in fleet.iter().enumerate() {
        idle[d.platform.index()].push(slot);
    }
    let mut queue: Vec<VecDeque<usize>> = vec![VecDeque::new(); platforms];
    let mut ongoing: Vec<Option<Ongoing>> = (0..fleet.len()).map(|_| None).collect();
    let mut assigned_driver: Vec<usize> = vec![usize::MAX; requests.len()];

    let mut heap = BinaryHeap::new();
    let mut seq = 0u64;
    let mut push = |heap: &mut BinaryHeap<Reverse<Event>>, time, kind, subject| {
        heap.push(Reverse(Event { time, kind, seq, subject }));
        seq += 1;
    };
    let mut order: Vec<usize> = (0..requests.len()).collect();
    order.sort_by_key(|&i| (requests[i].request.request_time, i));
    for i in order {
        push(&mut heap, requests[i].request.request_time, EventKind::Arrival, i);
    }

    let mut rides = Vec::new();
    let mut fare_totals = vec![0.0; platforms];

    // Matching pass for one platform at time `now`; returns pickups to schedule.
    let dispatch = |platform: usize,
                    now: u32,
                    queue: &mut Vec<VecDeque<usize>>,
                    idle: &mut Vec<Vec<usize>>,
                    fleet: &mut Vec<DriverShiftState>,
                    ongoing: &mut Vec<Option<Ongoing>>,
                    assigned_driver: &mut Vec<usize>|
     -> Vec<(u32, usize)> {
        if queue[platform].is_empty() || idle[platform].is_empty() {
            return Vec::new();
        }
        let pending: Vec<PendingRequest> = queue[platform]
            .iter()
            .map(|&ri| PendingRequest {
                traveler: requests[ri].request.traveler,
                origin: requests[ri].request.origin,
            })
            .collect();
        let candidates: Vec<IdleDriver> = idle[platform]
            .iter()
            .map(|&slot| IdleDriver { driver: fleet[slot].driver, position: fleet[slot].position })
            .collect();
        let matches = match_requests(&pending, &candidates, net);
        let mut scheduled = Vec::with_capacity(matches.len());
        let mut used = vec![false; candidates.len()];
        for m in &matches {
            let ri = queue[platform][m.request];
            let slot = idle[platform][m.driver];
            used[m.driver] = true;
            fleet[slot].advance(DriverStatus::EnroutePickup);
            ongoing[slot] = Some(Ongoing { request: ri, dispatched_at: now, pickup_at: 0 });
            assigned_driver[ri] = slot;
            scheduled.push((now + m.pickup_secs, ri));
        }
        // matches always cover a prefix of the queue
        queue[platform].drain(..matches.len());
        let mut keep = used.iter();
        idle[platform].retain(|_| !*keep.next().unwrap());
        scheduled
    };

    while let Some(Reverse(ev)) = heap.pop() {
        let now = ev.time;
        match ev.kind {
            EventKind::Arrival => {
                let p = requests[ev.subject].platform.index();
                queue[p].push_back(ev.subject);
                for (t, ri) in dispatch(p, now, &mut queue, &mut idle, &mut fleet, &mut ongoing, &mut assigned_driver) {
                    push(&mut heap, t, EventKind::Pickup, ri);
                }
            }
            EventKind::Pickup => {
                let ri = ev.subject;
                let slot = assigned_driver[ri];
                let q = &requests[ri].request;
                let d = &mut fleet[slot];
                d.advance(DriverStatus::InRide);
                d.position = q.origin;
                if let Some(o) = ongoing[slot].as_mut() {
                    o.pickup_at = now;
                }
                push(&mut heap, now + net.travel_secs(q.origin, q.destination), EventKind::DropOff, slot);
            }
            EventKind::DropOff => {
                let slot = ev.subject;
                let o = ongoing[slot].take().expect("drop-off without a ride");
                let pr = &requests[o.request];
                let q = &pr.request;
                let p = pr.platform.index();
                let distance_m = net.length_unchecked(q.origin, q.destination);
                let fare = fares[p] * distance_m / 1000.0;
                let d = &mut fleet[slot];
                d.advance(DriverStatus::Idle);
                d.position = q.destination;
                d.fares_collected += fare;
                d.busy_time += now - o.dispatched_at;
                d.rides += 1;
                fare_totals[p] += fare;
                rides.push(RideRecord {
                    traveler: q.traveler,
                    driver: d.driver,
                    platform: pr.platform,
                    wait_time: o.pickup_at - q.request_time,
                    in_vehicle_time: now - o.pickup_at,
                    distance_m,
                    fare,
                });
                idle[p].push(slot);
                if now < shift_duration {
                    for (t, ri) in dispatch(p, now, &mut queue, &mut idle, &mut fleet, &mut ongoing, &mut assigned_driver) {
                        push(&mut heap, t, EventKind::Pickup, ri);
                    }
                }
            }
        }
    }

    let unserved = queue
        .iter()
        .flat_map(|q| q.iter())
        .map(|&ri| (requests[ri].request.traveler, requests[ri].platform))
        .collect::<Vec<_>>();
    let mut unserved = unserved;
    unserved.sort();

    Ok(DayOutcome { rides, unserved, drivers: fleet, fare_totals })
}
