//! Turn-based duopoly pricing on a discrete fare grid.
//!
//! On its turn a platform looks at lowering, keeping or raising its fare by
//! one grid step. Each option is played out on a private copy of the market
//! for one turnover interval with the competitor's fare fixed, and the
//! option with the highest summed daily profit is committed. Markets derive
//! their randomness from the day index, so every copy sees the same random
//! draws and the real market then reproduces the winning rollout.

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::withinday::PlatformId;

const GRID_TOLERANCE: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FareGrid {
    min: f64,
    max: f64,
    step: f64,
    steps: usize,
}

impl Default for FareGrid {
    fn default() -> Self {
        FareGrid::new(0.2, 3.0, 0.2).expect("valid default grid")
    }
}

impl FareGrid {
    pub fn new(min: f64, max: f64, step: f64) -> Result<Self> {
        if !(min.is_finite() && max.is_finite() && step.is_finite()) || step <= 0.0 || min < 0.0 {
            return Err(Error::input("fare grid bounds must be finite with a positive step"));
        }
        if min >= max {
            return Err(Error::input(format!("fare grid min {min} must be below max {max}")));
        }
        let span = (max - min) / step;
        let steps = span.round();
        if (span - steps).abs() > GRID_TOLERANCE {
            return Err(Error::input(format!("fare grid span {} is not a multiple of step {step}", max - min)));
        }
        Ok(FareGrid { min, max, step, steps: steps as usize })
    }

    pub fn min(&self) -> f64 {
        self.min
    }

    pub fn max(&self) -> f64 {
        self.max
    }

    pub fn step(&self) -> f64 {
        self.step
    }

    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Fare at grid index `k`, rounded to clear representation noise.
    pub fn point(&self, k: usize) -> f64 {
        assert!(k <= self.steps, "grid index {k} out of range");
        ((self.min + k as f64 * self.step) * 1e9).round() / 1e9
    }

    pub fn index_of(&self, fare: f64) -> Result<usize> {
        let k = ((fare - self.min) / self.step).round();
        if k < 0.0 || k > self.steps as f64 || (self.min + k * self.step - fare).abs() > GRID_TOLERANCE {
            return Err(Error::input(format!("fare {fare} is not on the grid")));
        }
        Ok(k as usize)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Move {
    Down,
    Stay,
    Up,
}

impl Move {
    pub fn as_str(self) -> &'static str {
        match self {
            Move::Down => "down",
            Move::Stay => "stay",
            Move::Up => "up",
        }
    }
}

/// One step down, stay, one step up, clipped to the grid. Ascending.
pub fn candidate_moves(current: f64, grid: &FareGrid) -> Result<Vec<f64>> {
    let k = grid.index_of(current)?;
    let lo = k.saturating_sub(1);
    let hi = (k + 1).min(grid.len() - 1);
    Ok((lo..=hi).map(|i| grid.point(i)).collect())
}

/// A market a platform can price into and simulate forward.
///
/// Implementations must be deterministic given their state: two clones
/// advanced under the same fares produce the same days.
pub trait PricingMarket: Clone + Send + Sync {
    type Day: Send;

    fn fare(&self, platform: PlatformId) -> f64;
    fn set_fare(&mut self, platform: PlatformId, fare: f64);
    fn advance_day(&mut self) -> Result<Self::Day>;
    fn profit(day: &Self::Day, platform: PlatformId) -> f64;
}

/// Summed profit of `mover` over `days` days after switching to
/// `candidate`, simulated on a copy of `snapshot`.
pub fn evaluate_move<M: PricingMarket>(snapshot: &M, mover: PlatformId, candidate: f64, days: usize) -> Result<f64> {
    let mut rollout = snapshot.clone();
    rollout.set_fare(mover, candidate);
    let mut total = 0.0;
    for _ in 0..days {
        let day = rollout.advance_day()?;
        total += M::profit(&day, mover);
    }
    Ok(total)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TurnOutcome<D> {
    pub mover: PlatformId,
    pub from_fare: f64,
    pub to_fare: f64,
    pub movement: Move,
    /// `(fare, predicted utility)` for every candidate, ascending fare.
    pub candidates: Vec<(f64, f64)>,
    pub predicted: f64,
    pub realized: f64,
    pub days: Vec<D>,
}

/// Highest utility wins; ties keep the current fare, then take the lower.
fn pick(candidates: &[(f64, f64)], current: f64) -> usize {
    let best = candidates.iter().map(|c| c.1).fold(f64::NEG_INFINITY, f64::max);
    let tied: Vec<usize> = (0..candidates.len()).filter(|&i| candidates[i].1 == best).collect();
    tied.iter()
        .copied()
        .find(|&i| candidates[i].0 == current)
        .unwrap_or(tied[0])
}

/// Plays one turn: evaluates each candidate, commits the best, then
/// advances `world` for `days` days under it.
pub fn play_turn<M: PricingMarket>(
    world: &mut M,
    mover: PlatformId,
    grid: &FareGrid,
    days: usize,
    parallel: bool,
) -> Result<TurnOutcome<M::Day>> {
    let current = world.fare(mover);
    let fares = candidate_moves(current, grid)?;
    let snapshot: &M = world;
    let utilities: Vec<f64> = if parallel {
        fares
            .par_iter()
            .map(|&f| evaluate_move(snapshot, mover, f, days))
            .collect::<Result<_>>()?
    } else {
        fares
            .iter()
            .map(|&f| evaluate_move(snapshot, mover, f, days))
            .collect::<Result<_>>()?
    };
    let candidates: Vec<(f64, f64)> = fares.into_iter().zip(utilities).collect();
    let chosen = pick(&candidates, current);
    let (to_fare, predicted) = candidates[chosen];
    let movement = match to_fare.partial_cmp(&current) {
        Some(std::cmp::Ordering::Less) => Move::Down,
        Some(std::cmp::Ordering::Greater) => Move::Up,
        _ => Move::Stay,
    };

    world.set_fare(mover, to_fare);
    let mut realized = 0.0;
    let mut log = Vec::with_capacity(days);
    for _ in 0..days {
        let day = world.advance_day()?;
        realized += M::profit(&day, mover);
        log.push(day);
    }
    Ok(TurnOutcome { mover, from_fare: current, to_fare, movement, candidates, predicted, realized, days: log })
}

/// True once the last `required_stays` committed moves were all stays.
pub fn detect_equilibrium(history: &[Move], required_stays: usize) -> bool {
    required_stays > 0
        && history.len() >= required_stays
        && history[history.len() - required_stays..].iter().all(|m| *m == Move::Stay)
}

/// Who moves when, and whether fares have settled.
#[derive(Debug, Clone, PartialEq)]
pub struct GameSchedule {
    pub turnover_days: usize,
    pub first_turn_day: usize,
    pub platforms: usize,
    pub required_stays: usize,
    /// Keep fares fixed once an equilibrium is reached.
    pub freeze_on_equilibrium: bool,
    pub history: Vec<Move>,
    pub converged_at: Option<usize>,
}

impl GameSchedule {
    pub fn new(
        turnover_days: usize,
        first_turn_day: usize,
        platforms: usize,
        required_stays: usize,
        freeze_on_equilibrium: bool,
    ) -> Result<Self> {
        if turnover_days == 0 {
            return Err(Error::input("turnover interval must be at least one day"));
        }
        if platforms == 0 {
            return Err(Error::input("pricing game needs a platform"));
        }
        Ok(GameSchedule {
            turnover_days,
            first_turn_day,
            platforms,
            required_stays,
            freeze_on_equilibrium,
            history: Vec::new(),
            converged_at: None,
        })
    }

    /// Platform 0 moves first, then movers alternate.
    pub fn current_mover(&self) -> PlatformId {
        PlatformId((self.history.len() % self.platforms) as u8)
    }

    pub fn is_turn_day(&self, day: usize) -> bool {
        if self.converged_at.is_some() && self.freeze_on_equilibrium {
            return false;
        }
        day >= self.first_turn_day && (day - self.first_turn_day).is_multiple_of(self.turnover_days)
    }

    /// Records a committed move; returns true if this turn reached equilibrium.
    pub fn record(&mut self, movement: Move, turn: usize) -> bool {
        self.history.push(movement);
        if self.converged_at.is_none() && detect_equilibrium(&self.history, self.required_stays) {
            self.converged_at = Some(turn);
            return true;
        }
        false
    }
}
