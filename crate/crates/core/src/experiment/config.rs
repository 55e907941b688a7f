use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::choice::{ChoiceScales, UtilityWeights};
use crate::error::{Error, Result};
use crate::game::FareGrid;

/// Everything a run needs. Every key has a default; unknown keys are
/// rejected when parsing.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioConfig {
    pub name: String,
    pub seed: u64,
    pub horizon_days: usize,
    pub travelers: usize,
    pub drivers: usize,
    /// Clock hour the shift starts at. Informational: event times are
    /// seconds from shift start.
    pub shift_start_h: f64,
    pub shift_hours: f64,

    /// Road network file; when absent a grid is generated.
    pub network_file: Option<PathBuf>,
    pub grid_rows: usize,
    pub grid_cols: usize,
    pub grid_edge_m: f64,
    pub speed_mps: f64,
    pub all_pairs_threshold: usize,
    /// Fixed trips, one row per traveler; when present it defines the
    /// traveler population and `travelers` is ignored.
    pub demand_file: Option<PathBuf>,

    pub reservation_wage_eur_per_h: f64,

    pub learning_rate: f64,
    pub initial_latent: f64,
    pub mu: f64,
    pub mu_nest: f64,
    pub beta_experience: f64,
    pub beta_wom: f64,
    pub beta_marketing: f64,
    pub asc_platform: f64,
    pub asc_outside: f64,
    /// Perceived utility of the outside option before its ASC.
    pub outside_utility: f64,
    pub unaware_excluded: bool,
    pub value_of_time_eur_per_h: f64,
    pub wait_multiplier: f64,
    pub pt_speed_mps: f64,
    pub pt_flat_fare_eur: f64,
    /// Access, egress and waiting time added to every public transport trip.
    pub pt_access_s: f64,
    pub marketing_reach: f64,
    pub marketing_signal: f64,
    pub wom_meetings_per_day: f64,

    pub commission: f64,
    pub fixed_cost_eur: f64,
    pub min_wage_eur_per_h: Option<f64>,
    pub lockout: bool,
    pub loyalty_window_days: usize,
    pub driver_traveler_ratio: usize,

    pub pricing_game: bool,
    pub fare_grid_min: f64,
    pub fare_grid_max: f64,
    pub fare_step: f64,
    pub turnover_days: usize,
    pub initial_fare: f64,
    pub equilibrium_stay_turns: usize,
    pub freeze_on_equilibrium: bool,
    /// Day of the first pricing turn; defaults to one turnover interval.
    pub first_turn_day: Option<usize>,
    pub parallel_rollouts: bool,

    pub summary_window_days: usize,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        ScenarioConfig {
            name: "scenario".into(),
            seed: 1,
            horizon_days: 300,
            travelers: 200,
            drivers: 20,
            shift_start_h: 8.0,
            shift_hours: 4.0,
            network_file: None,
            grid_rows: 5,
            grid_cols: 5,
            grid_edge_m: 1500.0,
            speed_mps: 10.0,
            all_pairs_threshold: 2000,
            demand_file: None,
            reservation_wage_eur_per_h: 12.0,
            learning_rate: 1.0,
            initial_latent: 0.0,
            mu: 1.0,
            mu_nest: 2.0,
            beta_experience: 0.7,
            beta_wom: 0.2,
            beta_marketing: 0.1,
            asc_platform: 0.0,
            asc_outside: 0.0,
            outside_utility: 0.5,
            unaware_excluded: false,
            value_of_time_eur_per_h: 10.0,
            wait_multiplier: 2.0,
            pt_speed_mps: 4.0,
            pt_flat_fare_eur: 3.5,
            pt_access_s: 900.0,
            marketing_reach: 0.02,
            marketing_signal: 0.7,
            wom_meetings_per_day: 0.2,
            commission: 0.2,
            fixed_cost_eur: 500.0,
            min_wage_eur_per_h: None,
            lockout: false,
            loyalty_window_days: 20,
            driver_traveler_ratio: 10,
            pricing_game: true,
            fare_grid_min: 0.2,
            fare_grid_max: 3.0,
            fare_step: 0.2,
            turnover_days: 50,
            initial_fare: 1.4,
            equilibrium_stay_turns: 2,
            freeze_on_equilibrium: true,
            first_turn_day: None,
            parallel_rollouts: true,
            summary_window_days: 50,
        }
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(Error::config(format!("{name} must be positive, got {v}")))
    }
}

fn nonnegative(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v >= 0.0 {
        Ok(())
    } else {
        Err(Error::config(format!("{name} must be nonnegative, got {v}")))
    }
}

fn unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::config(format!("{name} must lie in [0, 1], got {v}")))
    }
}

impl ScenarioConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config(e.to_string()))
    }

    /// Reads and validates a scenario file. Relative network and demand
    /// paths are resolved against the file's directory.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut cfg = Self::from_toml(&text).map_err(|e| match e {
            Error::Config(m) => Error::config(format!("{}: {m}", path.display())),
            other => other,
        })?;
        let base = path.parent().unwrap_or(Path::new("."));
        for p in [&mut cfg.network_file, &mut cfg.demand_file].into_iter().flatten() {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn weights(&self) -> UtilityWeights {
        UtilityWeights {
            experience: self.beta_experience,
            word_of_mouth: self.beta_wom,
            marketing: self.beta_marketing,
        }
    }

    pub fn scales(&self) -> Result<ChoiceScales> {
        ChoiceScales::new(self.mu, self.mu_nest).map_err(|e| Error::config(e.to_string()))
    }

    pub fn fare_grid(&self) -> Result<FareGrid> {
        FareGrid::new(self.fare_grid_min, self.fare_grid_max, self.fare_step).map_err(|e| Error::config(e.to_string()))
    }

    pub fn shift_secs(&self) -> u32 {
        (self.shift_hours * 3600.0).round() as u32
    }

    pub fn first_turn(&self) -> usize {
        self.first_turn_day.unwrap_or(self.turnover_days)
    }

    pub fn validate(&self) -> Result<()> {
        positive("shift_hours", self.shift_hours)?;
        if !(0.0..24.0).contains(&self.shift_start_h) || self.shift_start_h + self.shift_hours > 24.0 {
            return Err(Error::config("shift must fit inside one calendar day"));
        }
        if self.shift_secs() == 0 {
            return Err(Error::config("shift is shorter than one second"));
        }
        if self.network_file.is_none() && (self.grid_rows < 2 || self.grid_cols < 2) {
            return Err(Error::config("grid_rows and grid_cols must be at least 2"));
        }
        positive("grid_edge_m", self.grid_edge_m)?;
        positive("speed_mps", self.speed_mps)?;
        positive("reservation_wage_eur_per_h", self.reservation_wage_eur_per_h)?;
        positive("learning_rate", self.learning_rate)?;
        if !self.initial_latent.is_finite() {
            return Err(Error::config("initial_latent must be finite"));
        }
        self.scales()?;
        self.weights().validate().map_err(|e| Error::config(e.to_string()))?;
        for (k, v) in [("asc_platform", self.asc_platform), ("asc_outside", self.asc_outside), ("outside_utility", self.outside_utility)] {
            if !v.is_finite() {
                return Err(Error::config(format!("{k} must be finite")));
            }
        }
        nonnegative("value_of_time_eur_per_h", self.value_of_time_eur_per_h)?;
        nonnegative("wait_multiplier", self.wait_multiplier)?;
        positive("pt_speed_mps", self.pt_speed_mps)?;
        nonnegative("pt_flat_fare_eur", self.pt_flat_fare_eur)?;
        nonnegative("pt_access_s", self.pt_access_s)?;
        if self.pt_flat_fare_eur == 0.0 && self.value_of_time_eur_per_h == 0.0 {
            return Err(Error::config("public transport must have a positive generalized cost"));
        }
        unit("marketing_reach", self.marketing_reach)?;
        unit("marketing_signal", self.marketing_signal)?;
        nonnegative("wom_meetings_per_day", self.wom_meetings_per_day)?;
        unit("commission", self.commission)?;
        nonnegative("fixed_cost_eur", self.fixed_cost_eur)?;
        if let Some(w) = self.min_wage_eur_per_h {
            positive("min_wage_eur_per_h", w)?;
        }
        if self.lockout && self.min_wage_eur_per_h.is_none() {
            return Err(Error::config("lockout only applies under minimum wage regulation; set min_wage_eur_per_h"));
        }
        if self.loyalty_window_days == 0 {
            return Err(Error::config("loyalty_window_days must be at least 1"));
        }
        if self.driver_traveler_ratio == 0 {
            return Err(Error::config("driver_traveler_ratio must be at least 1"));
        }
        let grid = self.fare_grid()?;
        grid.index_of(self.initial_fare)
            .map_err(|_| Error::config(format!("initial_fare {} is not on the fare grid", self.initial_fare)))?;
        if self.turnover_days == 0 {
            return Err(Error::config("turnover_days must be at least 1"));
        }
        if self.equilibrium_stay_turns == 0 {
            return Err(Error::config("equilibrium_stay_turns must be at least 1"));
        }
        if self.summary_window_days == 0 {
            return Err(Error::config("summary_window_days must be at least 1"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_validate() {
        ScenarioConfig::default().validate().unwrap();
    }

    #[test]
    fn empty_document_is_default() {
        assert_eq!(ScenarioConfig::from_toml("").unwrap(), ScenarioConfig::default());
    }

    #[test]
    fn unknown_key_is_rejected() {
        let err = ScenarioConfig::from_toml("comission = 0.3").unwrap_err();
        assert!(err.to_string().contains("comission"), "{err}");
    }

    #[test]
    fn toml_round_trip() {
        let cfg = ScenarioConfig { min_wage_eur_per_h: Some(9.6), lockout: true, ..Default::default() };
        assert_eq!(ScenarioConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);
    }

    #[test]
    fn invalid_values_are_reported() {
        let bad = [
            ScenarioConfig { lockout: true, ..Default::default() },
            ScenarioConfig { initial_fare: 1.3, ..Default::default() },
            ScenarioConfig { mu: 3.0, ..Default::default() },
            ScenarioConfig { beta_wom: 0.5, ..Default::default() },
            ScenarioConfig { commission: 1.5, ..Default::default() },
            ScenarioConfig { grid_rows: 1, ..Default::default() },
            ScenarioConfig { min_wage_eur_per_h: Some(-1.0), ..Default::default() },
            ScenarioConfig { shift_start_h: 22.0, ..Default::default() },
            ScenarioConfig { summary_window_days: 0, ..Default::default() },
        ];
        for cfg in bad {
            assert!(matches!(cfg.validate(), Err(Error::Config(_))), "{cfg:?}");
        }
    }
}
