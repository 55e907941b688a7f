//! Daily platform accounting, the minimum-wage top-up and driver lockout.

use std::collections::VecDeque;

use crate::error::{Error, Result};
use crate::withinday::{DayOutcome, DriverId, PlatformId};

#[derive(Debug, Clone, PartialEq)]
pub struct PlatformState {
    pub id: PlatformId,
    /// Euro per km.
    pub fare: f64,
    /// Share of each fare kept by the platform.
    pub commission: f64,
    /// Euro per day.
    pub fixed_cost: f64,
    pub lockout_enabled: bool,
    pub accumulated_capital: f64,
}

impl PlatformState {
    pub fn new(id: PlatformId, fare: f64, commission: f64, fixed_cost: f64, lockout_enabled: bool) -> Result<Self> {
        if !(0.0..=1.0).contains(&commission) {
            return Err(Error::input(format!("commission {commission} outside [0, 1]")));
        }
        if !(fixed_cost.is_finite() && fixed_cost >= 0.0) {
            return Err(Error::input("fixed cost must be nonnegative"));
        }
        Ok(PlatformState { id, fare, commission, fixed_cost, lockout_enabled, accumulated_capital: 0.0 })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RegulationPolicy {
    min_wage: Option<f64>,
    shift_hours: f64,
}

impl RegulationPolicy {
    pub fn new(min_wage: Option<f64>, shift_hours: f64) -> Result<Self> {
        if let Some(w) = min_wage {
            if !(w.is_finite() && w > 0.0) {
                return Err(Error::input(format!("minimum wage must be positive, got {w}")));
            }
        }
        if !(shift_hours.is_finite() && shift_hours > 0.0) {
            return Err(Error::input("shift hours must be positive"));
        }
        Ok(RegulationPolicy { min_wage, shift_hours })
    }

    pub fn unregulated(shift_hours: f64) -> Result<Self> {
        Self::new(None, shift_hours)
    }

    pub fn min_wage(&self) -> Option<f64> {
        self.min_wage
    }

    pub fn shift_hours(&self) -> f64 {
        self.shift_hours
    }

    pub fn is_regulated(&self) -> bool {
        self.min_wage.is_some()
    }

    /// Guaranteed daily income: the smallest amount whose hourly rate over
    /// the shift is not below the minimum wage in floating point.
    pub fn daily_floor(&self) -> Option<f64> {
        let w = self.min_wage?;
        let mut floor = w * self.shift_hours;
        while floor / self.shift_hours < w {
            floor = floor.next_up();
        }
        Some(floor)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct DailyLedger {
    pub rides: usize,
    pub fares_total: f64,
    /// Commission income.
    pub revenue: f64,
    /// Drivers' share of fares before any top-up.
    pub driver_gross: f64,
    pub subsidy: f64,
    pub fixed_cost: f64,
    pub profit: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriverSettlement {
    pub driver: DriverId,
    pub platform: PlatformId,
    pub rides: u32,
    pub busy_time: u32,
    /// Fares net of commission.
    pub earned: f64,
    pub subsidy: f64,
    /// `earned + subsidy`.
    pub realized: f64,
}

impl DriverSettlement {
    pub fn hourly(&self, shift_hours: f64) -> f64 {
        self.realized / shift_hours
    }
}

/// Settles one platform's day and books the profit into its capital.
///
/// Revenue is the commission on every fare. Under regulation each active
/// driver whose net earnings fall short of the guaranteed daily floor is
/// topped up to it by the platform.
pub fn settle_day(
    outcome: &DayOutcome,
    policy: &RegulationPolicy,
    state: &mut PlatformState,
) -> (DailyLedger, Vec<DriverSettlement>) {
    let gamma = state.commission;
    let floor = policy.daily_floor();

    let mut ledger = DailyLedger { fixed_cost: state.fixed_cost, ..DailyLedger::default() };
    for r in outcome.rides.iter().filter(|r| r.platform == state.id) {
        ledger.rides += 1;
        ledger.fares_total += r.fare;
    }
    ledger.revenue = gamma * ledger.fares_total;

    let mut drivers = Vec::new();
    for d in outcome.drivers.iter().filter(|d| d.platform == state.id) {
        let earned = (1.0 - gamma) * d.fares_collected;
        let realized = match floor {
            Some(f) => earned.max(f),
            None => earned,
        };
        let subsidy = realized - earned;
        ledger.driver_gross += earned;
        ledger.subsidy += subsidy;
        drivers.push(DriverSettlement {
            driver: d.driver,
            platform: d.platform,
            rides: d.rides,
            busy_time: d.busy_time,
            earned,
            subsidy,
            realized,
        });
    }
    ledger.profit = ledger.revenue - ledger.subsidy - ledger.fixed_cost;
    state.accumulated_capital += ledger.profit;
    (ledger, drivers)
}

/// Which platform, if any, each driver actually worked for on recent days.
#[derive(Debug, Clone, PartialEq)]
pub struct LoyaltyHistory {
    window: usize,
    days: Vec<VecDeque<Option<PlatformId>>>,
}

impl LoyaltyHistory {
    pub fn new(drivers: usize, window: usize) -> Result<Self> {
        if window == 0 {
            return Err(Error::input("loyalty window must be at least one day"));
        }
        Ok(LoyaltyHistory { window, days: vec![VecDeque::with_capacity(window); drivers] })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// Records one day; `worked[d]` is the platform driver `d` was active on.
    pub fn record_day(&mut self, worked: &[Option<PlatformId>]) {
        assert_eq!(worked.len(), self.days.len(), "one entry per driver");
        for (h, w) in self.days.iter_mut().zip(worked) {
            if h.len() == self.window {
                h.pop_front();
            }
            h.push_back(*w);
        }
    }

    /// Active days on `platform` within the window.
    pub fn active_days(&self, driver: DriverId, platform: PlatformId) -> usize {
        self.days[driver.0 as usize].iter().filter(|w| **w == Some(platform)).count()
    }

    pub fn rate(&self, driver: DriverId, platform: PlatformId) -> f64 {
        self.active_days(driver, platform) as f64 / self.window as f64
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LockoutDecision {
    pub active: Vec<DriverId>,
    pub locked_out: Vec<DriverId>,
}

/// Number of drivers a platform lets in for `expected_travelers`.
pub fn lockout_cap(expected_travelers: usize, travelers_per_driver: usize) -> usize {
    expected_travelers.div_ceil(travelers_per_driver.max(1))
}

/// Keeps the `lockout_cap` most loyal candidates (trailing participation on
/// this platform, ties to the lower id) and locks out the rest.
pub fn lockout_select(
    platform: PlatformId,
    candidates: &[DriverId],
    expected_travelers: usize,
    travelers_per_driver: usize,
    history: &LoyaltyHistory,
) -> LockoutDecision {
    let cap = lockout_cap(expected_travelers, travelers_per_driver);
    let mut ranked: Vec<(usize, DriverId)> =
        candidates.iter().map(|&d| (history.active_days(d, platform), d)).collect();
    ranked.sort_by(|a, b| b.0.cmp(&a.0).then(a.1.cmp(&b.1)));
    let mut active: Vec<DriverId> = ranked.iter().take(cap).map(|&(_, d)| d).collect();
    let mut locked_out: Vec<DriverId> = ranked.iter().skip(cap).map(|&(_, d)| d).collect();
    active.sort();
    locked_out.sort();
    LockoutDecision { active, locked_out }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::network::NodeId;
    use crate::withinday::{DriverShiftState, RideRecord, TravelerId};
    use proptest::prelude::*;

    const P: PlatformId = PlatformId(0);

    fn outcome(driver_fares: &[f64]) -> DayOutcome {
        let mut rides = Vec::new();
        let mut drivers = Vec::new();
        for (i, &f) in driver_fares.iter().enumerate() {
            let mut d = DriverShiftState::idle_at(DriverId(i as u32), P, NodeId(0));
            d.fares_collected = f;
            if f > 0.0 {
                d.rides = 1;
                rides.push(RideRecord {
                    traveler: TravelerId(i as u32),
                    driver: d.driver,
                    platform: P,
                    wait_time: 0,
                    in_vehicle_time: 60,
                    distance_m: 1000.0,
                    fare: f,
                });
            }
            drivers.push(d);
        }
        let total = driver_fares.iter().sum();
        DayOutcome { rides, unserved: vec![], drivers, fare_totals: vec![total] }
    }

    fn platform() -> PlatformState {
        PlatformState::new(P, 1.4, 0.2, 500.0, false).unwrap()
    }

    #[test]
    fn unregulated_has_no_subsidy() {
        let policy = RegulationPolicy::unregulated(4.0).unwrap();
        let (ledger, drivers) = settle_day(&outcome(&[0.0, 5.0, 300.0]), &policy, &mut platform());
        assert_eq!(ledger.subsidy, 0.0);
        assert!(drivers.iter().all(|d| d.subsidy == 0.0));
    }

    #[test]
    fn shortfall_is_topped_up() {
        // 50 euro of fares at 20% leaves 40 earned; floor is 12 * 4 = 48
        let policy = RegulationPolicy::new(Some(12.0), 4.0).unwrap();
        let (ledger, drivers) = settle_day(&outcome(&[50.0]), &policy, &mut platform());
        assert_eq!(drivers[0].earned, 40.0);
        assert_eq!(drivers[0].subsidy, 8.0);
        assert_eq!(drivers[0].realized, 48.0);
        assert_eq!(ledger.subsidy, 8.0);
    }

    #[test]
    fn one_day_profit() {
        // revenue 0.2 * 1000 = 200; the idle second driver is topped up to
        // 25 * 4 = 100; fixed cost 500
        let policy = RegulationPolicy::new(Some(25.0), 4.0).unwrap();
        let (ledger, _) = settle_day(&outcome(&[1000.0, 0.0]), &policy, &mut platform());
        assert_eq!(ledger.revenue, 200.0);
        assert_eq!(ledger.subsidy, 100.0);
        assert_eq!(ledger.profit, -400.0);
    }

    #[test]
    fn capital_accumulates() {
        let policy = RegulationPolicy::unregulated(4.0).unwrap();
        let mut state = platform();
        let mut sum = 0.0;
        for f in [100.0, 3000.0, 0.0, 2500.0] {
            let (l, _) = settle_day(&outcome(&[f]), &policy, &mut state);
            sum += l.profit;
            assert_eq!(state.accumulated_capital, sum);
        }
    }

    #[test]
    fn floor_is_exact_for_awkward_hours() {
        for (w, h) in [(9.6, 4.0), (14.4, 3.0), (12.0, 0.7), (0.1, 3.3)] {
            let p = RegulationPolicy::new(Some(w), h).unwrap();
            let f = p.daily_floor().unwrap();
            assert!(f / h >= w);
            assert!((f - w * h).abs() <= 4.0 * f64::EPSILON * f);
        }
    }

    #[test]
    fn lockout_keeps_ten_most_loyal_of_twenty() {
        let mut h = LoyaltyHistory::new(20, 20).unwrap();
        // driver d worked d days out of the last 20
        for day in 0..20 {
            let worked: Vec<_> = (0..20).map(|d| (day < d).then_some(P)).collect();
            h.record_day(&worked);
        }
        let candidates: Vec<_> = (0..20).map(DriverId).collect();
        let dec = lockout_select(P, &candidates, 100, 10, &h);
        assert_eq!(dec.active, (10..20).map(DriverId).collect::<Vec<_>>());
        assert_eq!(dec.locked_out.len(), 10);
    }

    #[test]
    fn lockout_without_travelers_admits_nobody() {
        let h = LoyaltyHistory::new(3, 20).unwrap();
        let dec = lockout_select(P, &[DriverId(0), DriverId(1)], 0, 10, &h);
        assert!(dec.active.is_empty());
    }

    #[test]
    fn lockout_rounds_up_and_breaks_ties_by_id() {
        let mut h = LoyaltyHistory::new(5, 20).unwrap();
        // drivers 3 and 4 worked once, the rest never
        h.record_day(&[None, None, None, Some(P), Some(P)]);
        let c: Vec<_> = (0..5).map(DriverId).collect();
        let dec = lockout_select(P, &c, 25, 10, &h);
        assert_eq!(dec.active, vec![DriverId(0), DriverId(3), DriverId(4)]);
    }

    #[test]
    fn loyalty_only_counts_this_platform_and_window() {
        let mut h = LoyaltyHistory::new(1, 3).unwrap();
        for w in [Some(P), Some(P), Some(PlatformId(1)), None] {
            h.record_day(&[w]);
        }
        assert_eq!(h.active_days(DriverId(0), P), 1);
        assert_eq!(h.active_days(DriverId(0), PlatformId(1)), 1);
        assert!((h.rate(DriverId(0), P) - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn cap_covers_everyone_when_large() {
        let h = LoyaltyHistory::new(2, 5).unwrap();
        let dec = lockout_select(P, &[DriverId(1), DriverId(0)], 1000, 10, &h);
        assert_eq!(dec.active, vec![DriverId(0), DriverId(1)]);
    }

    proptest! {
        #[test]
        fn money_is_conserved(
            fares in prop::collection::vec(0.0f64..200.0, 0..30),
            gamma in 0.0f64..=1.0,
            wage in prop::option::of(1.0f64..30.0),
        ) {
            let policy = RegulationPolicy::new(wage, 4.0).unwrap();
            let mut state = PlatformState::new(P, 1.0, gamma, 500.0, false).unwrap();
            let (l, drivers) = settle_day(&outcome(&fares), &policy, &mut state);
            prop_assert!((l.fares_total - (l.driver_gross + l.revenue)).abs() < 1e-9);
            let realized: f64 = drivers.iter().map(|d| d.realized).sum();
            prop_assert!((realized - (l.driver_gross + l.subsidy)).abs() < 1e-9);
            prop_assert_eq!(l.profit, l.revenue - l.subsidy - l.fixed_cost);
            if let Some(w) = wage {
                for d in &drivers {
                    prop_assert!(d.hourly(4.0) >= w);
                }
            }
        }

        #[test]
        fn higher_wage_never_lowers_subsidy(
            fares in prop::collection::vec(0.0f64..200.0, 1..30),
            lo in 1.0f64..20.0,
            step in 0.0f64..10.0,
        ) {
            let out = outcome(&fares);
            let low = RegulationPolicy::new(Some(lo), 4.0).unwrap();
            let high = RegulationPolicy::new(Some(lo + step), 4.0).unwrap();
            let (a, _) = settle_day(&out, &low, &mut platform());
            let (b, _) = settle_day(&out, &high, &mut platform());
            prop_assert!(b.subsidy >= a.subsidy);
        }

        #[test]
        fn lockout_never_exceeds_cap(n in 0usize..40, travelers in 0usize..500, ratio in 1usize..20) {
            let h = LoyaltyHistory::new(n, 20).unwrap();
            let c: Vec<_> = (0..n as u32).map(DriverId).collect();
            let dec = lockout_select(P, &c, travelers, ratio, &h);
            prop_assert!(dec.active.len() <= lockout_cap(travelers, ratio));
            prop_assert_eq!(dec.active.len() + dec.locked_out.len(), n);
        }
    }
}
