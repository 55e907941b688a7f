use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use super::demand::{load_demand, synth_demand, synth_population, TripSpec};
use super::rng::{Purpose, RngPlan};
use super::summary::mean;
use crate::choice::{
    driver_signal, marketing_round, nested_logit, traveler_signal, word_of_mouth_round, Alternative, ChoiceScales,
    LearningParams, Mind, TravelCosts, TripExperience,
};
use crate::error::Result;
use crate::game::PricingMarket;
use crate::network::{generate_grid, load_network, NodeId, RoadNetwork, DEFAULT_ALL_PAIRS_THRESHOLD};
use crate::platform::{lockout_select, settle_day, DriverSettlement, LoyaltyHistory, PlatformState, RegulationPolicy};
use crate::withinday::{run_day, DriverId, DriverShiftState, PlatformId, PlatformRequest, RideRecord, TravelerId};

pub const PLATFORMS: usize = 2;

/// One platform's KPIs for one day.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DayRecord {
    pub day: usize,
    /// 1-based platform number.
    pub platform: u8,
    pub fare_eur_per_km: f64,
    pub participating_travelers: usize,
    pub served_rides: usize,
    pub unserved_travelers: usize,
    /// Drivers who chose the platform, before any lockout.
    pub candidate_drivers: usize,
    pub locked_out_drivers: usize,
    pub active_drivers: usize,
    pub subsidized_drivers: usize,
    /// Mean over served rides; empty when none.
    pub mean_wait_s: Option<f64>,
    /// Mean over active drivers of realized income per shift hour.
    pub mean_hourly_income_eur: Option<f64>,
    pub fares_total_eur: f64,
    pub driver_gross_eur: f64,
    pub revenue_eur: f64,
    pub subsidy_eur: f64,
    pub fixed_cost_eur: f64,
    pub profit_eur: f64,
    pub capital_eur: f64,
}

/// Raw record of one day, enough to recompute every [`DayRecord`] field
/// given the previous day's capital.
#[derive(Debug, Clone, PartialEq)]
pub struct DayLog {
    pub day: usize,
    pub fares: Vec<f64>,
    pub fixed_costs: Vec<f64>,
    pub traveler_choices: Vec<Option<PlatformId>>,
    pub driver_choices: Vec<Option<PlatformId>>,
    /// Locked-out drivers per platform, sorted.
    pub locked_out: Vec<Vec<DriverId>>,
    pub requests: Vec<PlatformRequest>,
    pub rides: Vec<RideRecord>,
    pub unserved: Vec<(TravelerId, PlatformId)>,
    pub settlements: Vec<DriverSettlement>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DayResult {
    pub records: Vec<DayRecord>,
    pub log: DayLog,
}

/// Parts of the world that never change during a run.
#[derive(Debug)]
struct Fixed {
    cfg: ScenarioConfig,
    net: RoadNetwork,
    trips: Vec<TripSpec>,
    pt_cost: Vec<f64>,
    homes: Vec<NodeId>,
    policy: RegulationPolicy,
    scales: ChoiceScales,
    learning: LearningParams,
    costs: TravelCosts,
    plan: RngPlan,
    shift_secs: u32,
}

/// The whole two-sided market at the start of a day.
#[derive(Debug, Clone)]
pub struct WorldState {
    fixed: Arc<Fixed>,
    day: usize,
    travelers: Vec<Mind>,
    drivers: Vec<Mind>,
    platforms: Vec<PlatformState>,
    loyalty: LoyaltyHistory,
    /// Yesterday's participating travelers per platform.
    expected: Option<Vec<usize>>,
}

pub fn build_network(cfg: &ScenarioConfig) -> Result<RoadNetwork> {
    let net = match &cfg.network_file {
        Some(path) => load_network(path)?,
        None => generate_grid(cfg.grid_rows, cfg.grid_cols, cfg.grid_edge_m, cfg.speed_mps)?,
    };
    if cfg.all_pairs_threshold == DEFAULT_ALL_PAIRS_THRESHOLD {
        return Ok(net);
    }
    RoadNetwork::with_threshold(net.nodes().to_vec(), net.edges().to_vec(), net.speed_mps(), cfg.all_pairs_threshold)
}

/// Draws a participation choice for every agent. Agents aware of no
/// platform stay out without drawing; picking a platform makes an agent
/// aware of it.
fn choose_all<R: Rng + ?Sized>(minds: &mut [Mind], fixed: &Fixed, rng: &mut R) -> Result<Vec<Option<PlatformId>>> {
    let cfg = &fixed.cfg;
    let outside = vec![Alternative::known(cfg.outside_utility + cfg.asc_outside)];
    let mut out = Vec::with_capacity(minds.len());
    for m in minds.iter_mut() {
        if !m.awareness.any() {
            out.push(None);
            continue;
        }
        let rs: Vec<Alternative> = (0..m.platforms())
            .map(|k| Alternative {
                utility: m.perceived(k, &fixed.learning.weights, cfg.asc_platform),
                aware: m.awareness.is_aware(k),
            })
            .collect();
        let probs = nested_logit(&[rs, outside.clone()], &fixed.scales, cfg.unaware_excluded)?;
        let (nest, alt) = probs.sample(rng);
        if nest == 0 {
            m.awareness.notify(alt);
            out.push(Some(PlatformId(alt as u8)));
        } else {
            out.push(None);
        }
    }
    Ok(out)
}

impl WorldState {
    pub fn new(cfg: &ScenarioConfig) -> Result<Self> {
        cfg.validate()?;
        let net = build_network(cfg)?;
        Self::with_network(cfg, net)
    }

    /// Builds the market on an already loaded network.
    pub fn with_network(cfg: &ScenarioConfig, net: RoadNetwork) -> Result<Self> {
        cfg.validate()?;
        let plan = RngPlan::new(cfg.seed);
        let shift_secs = cfg.shift_secs();
        let mut setup = plan.stream(0, Purpose::Setup, None);
        let trips = match &cfg.demand_file {
            Some(path) => load_demand(path, &net, shift_secs)?,
            None => synth_population(&net, cfg.travelers, &mut setup)?,
        };
        let homes: Vec<NodeId> =
            (0..cfg.drivers).map(|_| NodeId(setup.random_range(0..net.node_count()) as u32)).collect();
        let mut pt_cost = Vec::with_capacity(trips.len());
        for t in &trips {
            let secs = net.path_length(t.origin, t.destination)? / cfg.pt_speed_mps + cfg.pt_access_s;
            pt_cost.push(cfg.pt_flat_fare_eur + cfg.value_of_time_eur_per_h * secs / 3600.0);
        }
        let platforms = (0..PLATFORMS)
            .map(|k| {
                PlatformState::new(PlatformId(k as u8), cfg.initial_fare, cfg.commission, cfg.fixed_cost_eur, cfg.lockout)
            })
            .collect::<Result<Vec<_>>>()?;
        let travelers = vec![Mind::new(PLATFORMS, cfg.initial_latent); trips.len()];
        let drivers = vec![Mind::new(PLATFORMS, cfg.initial_latent); cfg.drivers];
        let fixed = Fixed {
            policy: RegulationPolicy::new(cfg.min_wage_eur_per_h, cfg.shift_hours)?,
            scales: cfg.scales()?,
            learning: LearningParams { rate: cfg.learning_rate, weights: cfg.weights(), platform_asc: cfg.asc_platform },
            costs: TravelCosts { value_of_time: cfg.value_of_time_eur_per_h, wait_multiplier: cfg.wait_multiplier },
            cfg: cfg.clone(),
            net,
            trips,
            pt_cost,
            homes,
            plan,
            shift_secs,
        };
        Ok(WorldState {
            loyalty: LoyaltyHistory::new(cfg.drivers, cfg.loyalty_window_days)?,
            fixed: Arc::new(fixed),
            day: 0,
            travelers,
            drivers,
            platforms,
            expected: None,
        })
    }

    pub fn day(&self) -> usize {
        self.day
    }

    pub fn config(&self) -> &ScenarioConfig {
        &self.fixed.cfg
    }

    pub fn network(&self) -> &RoadNetwork {
        &self.fixed.net
    }

    pub fn platforms(&self) -> &[PlatformState] {
        &self.platforms
    }

    pub fn travelers(&self) -> &[Mind] {
        &self.travelers
    }

    pub fn drivers(&self) -> &[Mind] {
        &self.drivers
    }

    pub fn trips(&self) -> &[TripSpec] {
        &self.fixed.trips
    }

    /// Simulates one day and moves to the next.
    pub fn step(&mut self) -> Result<DayResult> {
        let fixed = Arc::clone(&self.fixed);
        let cfg = &fixed.cfg;
        let plan = fixed.plan;
        let day = self.day;
        let rate = cfg.learning_rate;

        for k in 0..PLATFORMS {
            let mut rng = plan.stream(day, Purpose::Marketing, Some(PlatformId(k as u8)));
            marketing_round(&mut self.travelers, k, cfg.marketing_reach, cfg.marketing_signal, rate, &mut rng)?;
            marketing_round(&mut self.drivers, k, cfg.marketing_reach, cfg.marketing_signal, rate, &mut rng)?;
        }

        let mut rng = plan.stream(day, Purpose::WordOfMouth, None);
        word_of_mouth_round(&mut self.travelers, cfg.wom_meetings_per_day, &fixed.learning, &mut rng)?;
        word_of_mouth_round(&mut self.drivers, cfg.wom_meetings_per_day, &fixed.learning, &mut rng)?;

        let mut rng = plan.stream(day, Purpose::Choice, None);
        let traveler_choices = choose_all(&mut self.travelers, &fixed, &mut rng)?;
        let driver_choices = choose_all(&mut self.drivers, &fixed, &mut rng)?;

        let mut working = driver_choices.clone();
        let mut locked_out = vec![Vec::new(); PLATFORMS];
        if let Some(expected) = &self.expected {
            for (k, p) in self.platforms.iter().enumerate() {
                if !(p.lockout_enabled && fixed.policy.is_regulated()) {
                    continue;
                }
                let candidates: Vec<DriverId> = (0..driver_choices.len())
                    .filter(|&d| driver_choices[d] == Some(p.id))
                    .map(|d| DriverId(d as u32))
                    .collect();
                let decision = lockout_select(p.id, &candidates, expected[k], cfg.driver_traveler_ratio, &self.loyalty);
                for d in &decision.locked_out {
                    working[d.0 as usize] = None;
                }
                locked_out[k] = decision.locked_out;
            }
        }

        let participants: Vec<TravelerId> = (0..traveler_choices.len())
            .filter(|&t| traveler_choices[t].is_some())
            .map(|t| TravelerId(t as u32))
            .collect();
        let mut rng = plan.stream(day, Purpose::Demand, None);
        let requests: Vec<PlatformRequest> = synth_demand(&fixed.trips, &participants, fixed.shift_secs, &mut rng)
            .into_iter()
            .map(|request| PlatformRequest {
                platform: traveler_choices[request.traveler.0 as usize].expect("participant"),
                request,
            })
            .collect();
        let shift_drivers: Vec<DriverShiftState> = working
            .iter()
            .enumerate()
            .filter_map(|(d, w)| w.map(|p| DriverShiftState::idle_at(DriverId(d as u32), p, fixed.homes[d])))
            .collect();
        let fares: Vec<f64> = self.platforms.iter().map(|p| p.fare).collect();
        let outcome = run_day(&fixed.net, &requests, &shift_drivers, &fares, fixed.shift_secs)?;

        let mut settlements = Vec::new();
        let mut records = Vec::with_capacity(PLATFORMS);
        for (k, state) in self.platforms.iter_mut().enumerate() {
            let (ledger, drivers) = settle_day(&outcome, &fixed.policy, state);
            let waits: Vec<f64> =
                outcome.rides.iter().filter(|r| r.platform == state.id).map(|r| r.wait_time as f64).collect();
            let hourly: Vec<f64> = drivers.iter().map(|s| s.hourly(cfg.shift_hours)).collect();
            records.push(DayRecord {
                day,
                platform: k as u8 + 1,
                fare_eur_per_km: state.fare,
                participating_travelers: traveler_choices.iter().filter(|c| **c == Some(state.id)).count(),
                served_rides: ledger.rides,
                unserved_travelers: outcome.unserved.iter().filter(|u| u.1 == state.id).count(),
                candidate_drivers: driver_choices.iter().filter(|c| **c == Some(state.id)).count(),
                locked_out_drivers: locked_out[k].len(),
                active_drivers: drivers.len(),
                subsidized_drivers: drivers.iter().filter(|s| s.subsidy > 0.0).count(),
                mean_wait_s: mean(waits),
                mean_hourly_income_eur: mean(hourly),
                fares_total_eur: ledger.fares_total,
                driver_gross_eur: ledger.driver_gross,
                revenue_eur: ledger.revenue,
                subsidy_eur: ledger.subsidy,
                fixed_cost_eur: ledger.fixed_cost,
                profit_eur: ledger.profit,
                capital_eur: state.accumulated_capital,
            });
            settlements.extend(drivers);
        }

        let mut ride_of: Vec<Option<&RideRecord>> = vec![None; self.travelers.len()];
        for r in &outcome.rides {
            ride_of[r.traveler.0 as usize] = Some(r);
        }
        for &t in &participants {
            let i = t.0 as usize;
            let k = traveler_choices[i].expect("participant").index();
            let trip = match ride_of[i] {
                Some(r) => TripExperience::Served {
                    wait_s: r.wait_time as f64,
                    in_vehicle_s: r.in_vehicle_time as f64,
                    fare: r.fare,
                },
                None => TripExperience::Unserved,
            };
            let signal = traveler_signal(trip, fixed.pt_cost[i], &fixed.costs)?;
            self.travelers[i].perceptions[k].experience.learn(signal, rate)?;
        }
        for s in &settlements {
            let signal = driver_signal(s.realized, cfg.shift_hours, cfg.reservation_wage_eur_per_h)?;
            self.drivers[s.driver.0 as usize].perceptions[s.platform.index()].experience.learn(signal, rate)?;
        }

        self.loyalty.record_day(&working);
        self.expected = Some(records.iter().map(|r| r.participating_travelers).collect());
        self.day += 1;

        let log = DayLog {
            day,
            fares,
            fixed_costs: self.platforms.iter().map(|p| p.fixed_cost).collect(),
            traveler_choices,
            driver_choices,
            locked_out,
            requests,
            rides: outcome.rides,
            unserved: outcome.unserved,
            settlements,
        };
        Ok(DayResult { records, log })
    }
}

impl PricingMarket for WorldState {
    type Day = DayResult;

    fn fare(&self, platform: PlatformId) -> f64 {
        self.platforms[platform.index()].fare
    }

    fn set_fare(&mut self, platform: PlatformId, fare: f64) {
        self.platforms[platform.index()].fare = fare;
    }

    fn advance_day(&mut self) -> Result<DayResult> {
        self.step()
    }

    fn profit(day: &DayResult, platform: PlatformId) -> f64 {
        day.records[platform.index()].profit_eur
    }
}
