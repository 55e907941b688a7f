use serde::{Deserialize, Serialize};

use super::world::{DayLog, DayRecord, PLATFORMS};
use crate::error::{Error, Result};

/// One steady-state metric, per platform and for the whole market.
#[derive(Debug, Clone, PartialEq)]
pub struct KpiRow {
    pub metric: &'static str,
    pub platforms: Vec<Option<f64>>,
    pub market: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Summary {
    pub first_day: usize,
    pub last_day: usize,
    pub rows: Vec<KpiRow>,
}

impl Summary {
    pub fn get(&self, metric: &str) -> Option<&KpiRow> {
        self.rows.iter().find(|r| r.metric == metric)
    }
}

/// Running mean; returns exactly `c` for a constant series of `c`.
pub(crate) fn mean(xs: impl IntoIterator<Item = f64>) -> Option<f64> {
    weighted(xs.into_iter().map(|x| (x, 1.0)))
}

fn weighted(pairs: impl IntoIterator<Item = (f64, f64)>) -> Option<f64> {
    let mut total = 0.0;
    let mut m = 0.0;
    for (x, w) in pairs {
        if w > 0.0 {
            total += w;
            m += (x - m) * (w / total);
        }
    }
    (total > 0.0).then_some(m)
}

/// Days covered by the trailing `window`, validated against the series.
pub fn window_days(days: impl Iterator<Item = usize>, window: usize) -> Result<(usize, usize)> {
    if window == 0 {
        return Err(Error::input("summary window must be at least one day"));
    }
    let mut distinct: Vec<usize> = days.collect();
    distinct.sort_unstable();
    distinct.dedup();
    if window > distinct.len() {
        return Err(Error::input(format!("summary window {window} exceeds the {} simulated days", distinct.len())));
    }
    Ok((distinct[distinct.len() - window], distinct[distinct.len() - 1]))
}

/// Means over the final `window` days. Platform columns average the daily
/// values; the market column sums counts across platforms, weights income
/// by active drivers and waits by served rides, and averages money per
/// platform.
pub fn summarize(series: &[DayRecord], window: usize) -> Result<Summary> {
    let (first_day, last_day) = window_days(series.iter().map(|r| r.day), window)?;
    let recent: Vec<&DayRecord> = series.iter().filter(|r| r.day >= first_day).collect();
    let of = |k: usize| recent.iter().copied().filter(move |r| r.platform as usize == k + 1);
    let per = |f: &dyn Fn(&DayRecord) -> Option<f64>| -> Vec<Option<f64>> {
        (0..PLATFORMS).map(|k| mean(of(k).filter_map(f))).collect()
    };
    let days = window as f64;
    let total = |f: &dyn Fn(&DayRecord) -> f64| Some(recent.iter().map(|r| f(r)).sum::<f64>() / days);
    let across = |v: &[Option<f64>]| mean(v.iter().flatten().copied());

    let mut rows = Vec::new();
    let mut count = |metric, f: &dyn Fn(&DayRecord) -> f64| {
        rows.push(KpiRow { metric, platforms: per(&|r| Some(f(r))), market: total(f) });
    };
    count("active_drivers", &|r| r.active_drivers as f64);
    count("locked_out_drivers", &|r| r.locked_out_drivers as f64);
    count("subsidized_drivers", &|r| r.subsidized_drivers as f64);
    count("participating_travelers", &|r| r.participating_travelers as f64);
    count("served_rides", &|r| r.served_rides as f64);
    count("unserved_travelers", &|r| r.unserved_travelers as f64);

    let income = per(&|r| r.mean_hourly_income_eur);
    let market_income =
        weighted(recent.iter().filter_map(|r| r.mean_hourly_income_eur.map(|x| (x, r.active_drivers as f64))));
    rows.push(KpiRow { metric: "hourly_income_eur", platforms: income, market: market_income });
    let wait = per(&|r| r.mean_wait_s);
    let market_wait = weighted(recent.iter().filter_map(|r| r.mean_wait_s.map(|x| (x, r.served_rides as f64))));
    rows.push(KpiRow { metric: "wait_time_s", platforms: wait, market: market_wait });

    let mut money = |metric, f: &dyn Fn(&DayRecord) -> f64| {
        let platforms = per(&|r| Some(f(r)));
        let market = across(&platforms);
        rows.push(KpiRow { metric, platforms, market });
    };
    money("fare_eur_per_km", &|r| r.fare_eur_per_km);
    money("revenue_eur", &|r| r.revenue_eur);
    money("subsidy_eur", &|r| r.subsidy_eur);
    money("profit_eur", &|r| r.profit_eur);
    money("capital_eur", &|r| r.capital_eur);
    Ok(Summary { first_day, last_day, rows })
}

/// One observation behind the income and waiting-time distributions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionRow {
    pub kind: String,
    pub day: usize,
    /// 1-based platform number.
    pub platform: u8,
    pub agent: u32,
    pub value: f64,
}

pub const INCOME_KIND: &str = "driver_hourly_income_eur";
pub const WAIT_KIND: &str = "traveler_wait_s";

/// Realized hourly income of every active driver and the wait of every
/// served traveler over the final `window` days of `logs`.
pub fn distributions(logs: &[DayLog], window: usize, shift_hours: f64) -> Result<Vec<DistributionRow>> {
    let (first_day, _) = window_days(logs.iter().map(|l| l.day), window)?;
    let mut out = Vec::new();
    for log in logs.iter().filter(|l| l.day >= first_day) {
        for s in &log.settlements {
            out.push(DistributionRow {
                kind: INCOME_KIND.into(),
                day: log.day,
                platform: s.platform.0 + 1,
                agent: s.driver.0,
                value: s.hourly(shift_hours),
            });
        }
        for r in &log.rides {
            out.push(DistributionRow {
                kind: WAIT_KIND.into(),
                day: log.day,
                platform: r.platform.0 + 1,
                agent: r.traveler.0,
                value: r.wait_time as f64,
            });
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(day: usize, platform: u8, profit: f64) -> DayRecord {
        DayRecord {
            day,
            platform,
            fare_eur_per_km: 1.4,
            participating_travelers: 10,
            served_rides: 8,
            unserved_travelers: 2,
            candidate_drivers: 3,
            locked_out_drivers: 0,
            active_drivers: 3,
            subsidized_drivers: 0,
            mean_wait_s: Some(120.0),
            mean_hourly_income_eur: Some(12.0),
            fares_total_eur: 50.0,
            driver_gross_eur: 40.0,
            revenue_eur: 10.0,
            subsidy_eur: 0.0,
            fixed_cost_eur: 500.0,
            profit_eur: profit,
            capital_eur: 0.0,
        }
    }

    fn series(profits: &[f64]) -> Vec<DayRecord> {
        profits.iter().enumerate().flat_map(|(d, &p)| [record(d, 1, p), record(d, 2, p)]).collect()
    }

    #[test]
    fn constant_series_summarizes_to_the_constant() {
        let s = summarize(&series(&[-490.0; 8]), 5).unwrap();
        assert_eq!((s.first_day, s.last_day), (3, 7));
        let profit = s.get("profit_eur").unwrap();
        assert_eq!(profit.platforms, vec![Some(-490.0), Some(-490.0)]);
        assert_eq!(profit.market, Some(-490.0));
        assert_eq!(s.get("active_drivers").unwrap().market, Some(6.0));
        assert_eq!(s.get("wait_time_s").unwrap().market, Some(120.0));
        assert_eq!(s.get("hourly_income_eur").unwrap().platforms[0], Some(12.0));
    }

    #[test]
    fn alternating_profit_averages_to_fifty() {
        let profits: Vec<f64> = (0..10).map(|d| if d % 2 == 0 { 0.0 } else { 100.0 }).collect();
        let s = summarize(&series(&profits), 4).unwrap();
        assert_eq!(s.get("profit_eur").unwrap().market, Some(50.0));
    }

    #[test]
    fn full_window_is_global_mean() {
        let profits = [1.0, 2.0, 3.0, 6.0];
        let s = summarize(&series(&profits), 4).unwrap();
        assert_eq!(s.get("profit_eur").unwrap().platforms[1], Some(3.0));
    }

    #[test]
    fn window_bounds_are_checked() {
        assert!(summarize(&series(&[0.0; 3]), 0).is_err());
        assert!(summarize(&series(&[0.0; 3]), 4).is_err());
        assert!(distributions(&[], 1, 4.0).is_err());
    }

    #[test]
    fn weighted_market_means() {
        let mut s = series(&[0.0]);
        s[0].mean_hourly_income_eur = Some(10.0);
        s[0].active_drivers = 1;
        s[1].mean_hourly_income_eur = Some(20.0);
        s[1].active_drivers = 3;
        s[1].mean_wait_s = None;
        s[1].served_rides = 0;
        let out = summarize(&s, 1).unwrap();
        assert_eq!(out.get("hourly_income_eur").unwrap().market, Some(17.5));
        let wait = out.get("wait_time_s").unwrap();
        assert_eq!(wait.platforms, vec![Some(120.0), None]);
        assert_eq!(wait.market, Some(120.0));
    }
}
