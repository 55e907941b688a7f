use serde::{Deserialize, Serialize};

use super::config::ScenarioConfig;
use super::world::{DayLog, DayRecord, DayResult, WorldState, PLATFORMS};
use crate::error::Result;
use crate::game::{play_turn, GameSchedule};

/// One committed pricing move.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TurnRecord {
    pub turn: usize,
    pub day: usize,
    /// 1-based platform number.
    pub mover: u8,
    pub from_fare_eur_per_km: f64,
    pub to_fare_eur_per_km: f64,
    #[serde(rename = "move")]
    pub movement: String,
    pub days: usize,
    pub utility_down_eur: Option<f64>,
    pub utility_stay_eur: Option<f64>,
    pub utility_up_eur: Option<f64>,
    pub predicted_eur: f64,
    pub realized_eur: f64,
    pub equilibrium: bool,
}

/// Everything a run produced.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct ScenarioOutput {
    pub records: Vec<DayRecord>,
    pub logs: Vec<DayLog>,
    pub turns: Vec<TurnRecord>,
}

/// Receives simulated days and turns as they complete.
pub trait RunSink {
    fn day(&mut self, result: DayResult) -> Result<()>;
    fn turn(&mut self, turn: TurnRecord) -> Result<()>;
}

impl RunSink for ScenarioOutput {
    fn day(&mut self, result: DayResult) -> Result<()> {
        self.records.extend(result.records);
        self.logs.push(result.log);
        Ok(())
    }

    fn turn(&mut self, turn: TurnRecord) -> Result<()> {
        self.turns.push(turn);
        Ok(())
    }
}

/// Runs a scenario to its horizon and keeps every day in memory.
pub fn run_scenario(cfg: &ScenarioConfig) -> Result<ScenarioOutput> {
    let mut out = ScenarioOutput::default();
    run_scenario_into(cfg, &mut out)?;
    Ok(out)
}

/// Runs a scenario, handing each completed day to `sink` in order.
pub fn run_scenario_into(cfg: &ScenarioConfig, sink: &mut impl RunSink) -> Result<()> {
    let mut world = WorldState::new(cfg)?;
    if cfg.horizon_days == 0 {
        return Ok(());
    }
    let grid = cfg.fare_grid()?;
    let mut schedule = GameSchedule::new(
        cfg.turnover_days,
        cfg.first_turn(),
        PLATFORMS,
        cfg.equilibrium_stay_turns,
        cfg.freeze_on_equilibrium,
    )?;
    while world.day() < cfg.horizon_days {
        let day = world.day();
        if !(cfg.pricing_game && schedule.is_turn_day(day)) {
            sink.day(world.step()?)?;
            continue;
        }
        let days = cfg.turnover_days.min(cfg.horizon_days - day);
        let mover = schedule.current_mover();
        let outcome = play_turn(&mut world, mover, &grid, days, cfg.parallel_rollouts)?;
        let turn = schedule.history.len();
        let equilibrium = schedule.record(outcome.movement, turn);
        let from = grid.index_of(outcome.from_fare)?;
        let mut by_move = [None; 3];
        for &(fare, u) in &outcome.candidates {
            by_move[grid.index_of(fare)? + 1 - from] = Some(u);
        }
        let record = TurnRecord {
            turn,
            day,
            mover: mover.0 + 1,
            from_fare_eur_per_km: outcome.from_fare,
            to_fare_eur_per_km: outcome.to_fare,
            movement: outcome.movement.as_str().to_string(),
            days,
            utility_down_eur: by_move[0],
            utility_stay_eur: by_move[1],
            utility_up_eur: by_move[2],
            predicted_eur: outcome.predicted,
            realized_eur: outcome.realized,
            equilibrium,
        };
        for d in outcome.days {
            sink.day(d)?;
        }
        sink.turn(record)?;
    }
    Ok(())
}
