//! Day-to-day behaviour of travelers and drivers.
//!
//! Every agent keeps, per platform, three learned utility components
//! (experience, word-of-mouth, marketing). Each component is a latent score
//! read out through a logistic curve, so a run of positive signals moves a
//! neutral agent quickly while an agent with an extreme opinion barely
//! moves. The composite perceived utility feeds a two-level nested logit:
//! ride-sourcing platforms in one nest, the outside option (public
//! transport or the reservation wage) in the other.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::error::{Error, Result};

#[inline]
pub fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

fn check_signal(signal: f64) -> Result<()> {
    if (0.0..=1.0).contains(&signal) {
        Ok(())
    } else {
        Err(Error::input(format!("signal {signal} outside [0, 1]")))
    }
}

/// One S-curve learned utility component.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearnedComponent {
    latent: f64,
}

impl LearnedComponent {
    pub fn new(latent: f64) -> Self {
        LearnedComponent { latent }
    }

    pub fn latent(&self) -> f64 {
        self.latent
    }

    /// Current utility, strictly inside (0, 1).
    pub fn value(&self) -> f64 {
        sigmoid(self.latent)
    }

    /// Moves the latent by `rate * (signal - 0.5)` and returns the new
    /// utility. A signal of exactly 0.5 is neutral.
    pub fn learn(&mut self, signal: f64, rate: f64) -> Result<f64> {
        let (latent, value) = update_component(self.latent, signal, rate)?;
        self.latent = latent;
        Ok(value)
    }
}

/// Pure form of [`LearnedComponent::learn`]: returns `(latent', U')`.
pub fn update_component(latent: f64, signal: f64, rate: f64) -> Result<(f64, f64)> {
    check_signal(signal)?;
    if !(rate.is_finite() && rate > 0.0) {
        return Err(Error::input(format!("learning rate must be positive, got {rate}")));
    }
    let next = latent + rate * (signal - 0.5);
    Ok((next, sigmoid(next)))
}

/// Weights of the experience, word-of-mouth and marketing components.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtilityWeights {
    pub experience: f64,
    pub word_of_mouth: f64,
    pub marketing: f64,
}

impl Default for UtilityWeights {
    fn default() -> Self {
        UtilityWeights { experience: 0.7, word_of_mouth: 0.2, marketing: 0.1 }
    }
}

impl UtilityWeights {
    pub fn validate(&self) -> Result<()> {
        let w = [self.experience, self.word_of_mouth, self.marketing];
        if w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::input("utility weights must be nonnegative"));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::input(format!("utility weights must sum to 1, got {sum}")));
        }
        Ok(())
    }
}

/// An agent's learned view of one platform.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlatformPerception {
    pub experience: LearnedComponent,
    pub word_of_mouth: LearnedComponent,
    pub marketing: LearnedComponent,
}

impl PlatformPerception {
    pub fn neutral(latent: f64) -> Self {
        let c = LearnedComponent::new(latent);
        PlatformPerception { experience: c, word_of_mouth: c, marketing: c }
    }

    /// Composite perceived utility `sum(beta * U) + ASC`.
    pub fn composite(&self, weights: &UtilityWeights, asc: f64) -> f64 {
        weights.experience * self.experience.value()
            + weights.word_of_mouth * self.word_of_mouth.value()
            + weights.marketing * self.marketing.value()
            + asc
    }
}

/// Per-platform notification flags. Flags can be raised but never cleared.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Awareness(Vec<bool>);

impl Awareness {
    pub fn none(platforms: usize) -> Self {
        Awareness(vec![false; platforms])
    }

    pub fn is_aware(&self, platform: usize) -> bool {
        self.0[platform]
    }

    pub fn notify(&mut self, platform: usize) {
        self.0[platform] = true;
    }

    pub fn any(&self) -> bool {
        self.0.iter().any(|&a| a)
    }

    pub fn count(&self) -> usize {
        self.0.iter().filter(|&&a| a).count()
    }

    pub fn flags(&self) -> &[bool] {
        &self.0
    }
}

/// Behavioural state shared by travelers and drivers.
#[derive(Debug, Clone, PartialEq)]
pub struct Mind {
    pub awareness: Awareness,
    pub perceptions: Vec<PlatformPerception>,
}

impl Mind {
    pub fn new(platforms: usize, initial_latent: f64) -> Self {
        Mind {
            awareness: Awareness::none(platforms),
            perceptions: vec![PlatformPerception::neutral(initial_latent); platforms],
        }
    }

    pub fn platforms(&self) -> usize {
        self.perceptions.len()
    }

    pub fn perceived(&self, platform: usize, weights: &UtilityWeights, asc: f64) -> f64 {
        self.perceptions[platform].composite(weights, asc)
    }
}

/// Nested-logit scale parameters: `nest` between nests, `within` inside a
/// nest. Consistency requires `0 < nest <= within`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChoiceScales {
    nest: f64,
    within: f64,
}

impl Default for ChoiceScales {
    fn default() -> Self {
        ChoiceScales { nest: 1.0, within: 2.0 }
    }
}

impl ChoiceScales {
    pub fn new(nest: f64, within: f64) -> Result<Self> {
        if !(nest.is_finite() && within.is_finite() && nest > 0.0 && within > 0.0) {
            return Err(Error::input("choice scales must be positive"));
        }
        if nest > within {
            return Err(Error::input(format!(
                "nest scale {nest} exceeds within-nest scale {within}"
            )));
        }
        Ok(ChoiceScales { nest, within })
    }

    pub fn nest(&self) -> f64 {
        self.nest
    }

    pub fn within(&self) -> f64 {
        self.within
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Alternative {
    pub utility: f64,
    pub aware: bool,
}

impl Alternative {
    pub fn known(utility: f64) -> Self {
        Alternative { utility, aware: true }
    }
}

/// Nest shares and within-nest conditional shares.
#[derive(Debug, Clone, PartialEq)]
pub struct NestedProbabilities {
    pub nest: Vec<f64>,
    pub conditional: Vec<Vec<f64>>,
}

impl NestedProbabilities {
    pub fn joint(&self, nest: usize, alternative: usize) -> f64 {
        self.nest[nest] * self.conditional[nest][alternative]
    }

    /// Draws `(nest, alternative)` by inverse CDF over the joint shares.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> (usize, usize) {
        let u: f64 = rng.random();
        let mut acc = 0.0;
        let mut last = None;
        for (n, cond) in self.conditional.iter().enumerate() {
            for (a, &c) in cond.iter().enumerate() {
                let p = self.nest[n] * c;
                if p <= 0.0 {
                    continue;
                }
                acc += p;
                last = Some((n, a));
                if u < acc {
                    return (n, a);
                }
            }
        }
        // rounding left the cumulative sum just under 1
        last.expect("at least one alternative has positive probability")
    }
}

fn log_sum_exp(xs: &[f64]) -> f64 {
    let m = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if m == f64::NEG_INFINITY {
        return m;
    }
    m + xs.iter().map(|x| (x - m).exp()).sum::<f64>().ln()
}

fn softmax(xs: &[f64]) -> Vec<f64> {
    let lse = log_sum_exp(xs);
    xs.iter().map(|x| (x - lse).exp()).collect()
}

/// Nested-logit shares.
///
/// Within nest `n` each alternative enters as `exp(within * G * U)`; the
/// nest's expected maximum utility is `ln(sum) / within`, and nest shares
/// are a logit over `nest * W_n`. With `unaware_excluded` an unaware
/// alternative is dropped instead of entering with `G = 0`, and a nest left
/// empty gets zero share.
pub fn nested_logit(
    nests: &[Vec<Alternative>],
    scales: &ChoiceScales,
    unaware_excluded: bool,
) -> Result<NestedProbabilities> {
    let mu_n = scales.within();
    let mut logsums = Vec::with_capacity(nests.len());
    let mut conditional = Vec::with_capacity(nests.len());
    for alts in nests {
        if alts.iter().any(|a| !a.utility.is_finite()) {
            return Err(Error::input("non-finite utility"));
        }
        let x: Vec<f64> = alts
            .iter()
            .map(|a| match (a.aware, unaware_excluded) {
                (true, _) => mu_n * a.utility,
                (false, false) => 0.0,
                (false, true) => f64::NEG_INFINITY,
            })
            .collect();
        let lse = log_sum_exp(&x);
        if lse == f64::NEG_INFINITY {
            logsums.push(f64::NEG_INFINITY);
            conditional.push(vec![0.0; alts.len()]);
        } else {
            logsums.push(lse / mu_n);
            conditional.push(softmax(&x));
        }
    }
    if logsums.iter().all(|w| *w == f64::NEG_INFINITY) {
        return Err(Error::input("no available alternative"));
    }
    let scaled: Vec<f64> = logsums.iter().map(|w| scales.nest() * w).collect();
    Ok(NestedProbabilities { nest: softmax(&scaled), conditional })
}

/// Experience signal of a driver's day: 0.5 at the reservation wage, 0 at
/// no income, saturating at 1 for twice the reservation wage.
pub fn driver_signal(income_today: f64, hours: f64, reservation_wage: f64) -> Result<f64> {
    if hours.is_nan() || hours <= 0.0 {
        return Err(Error::input(format!("shift hours must be positive, got {hours}")));
    }
    if reservation_wage.is_nan() || reservation_wage <= 0.0 {
        return Err(Error::input("reservation wage must be positive"));
    }
    let hourly = income_today / hours;
    Ok((0.5 + 0.5 * (hourly - reservation_wage) / reservation_wage).clamp(0.0, 1.0))
}

/// What a traveler lived through on the platform they picked.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum TripExperience {
    Served { wait_s: f64, in_vehicle_s: f64, fare: f64 },
    Unserved,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TravelCosts {
    /// Value of time, euro per hour.
    pub value_of_time: f64,
    /// Multiplier on waiting time relative to in-vehicle time.
    pub wait_multiplier: f64,
}

impl Default for TravelCosts {
    fn default() -> Self {
        TravelCosts { value_of_time: 10.0, wait_multiplier: 2.0 }
    }
}

impl TravelCosts {
    pub fn generalized_cost(&self, wait_s: f64, in_vehicle_s: f64, fare: f64) -> f64 {
        fare + self.value_of_time * (wait_s * self.wait_multiplier + in_vehicle_s) / 3600.0
    }
}

/// Experience signal of a traveler's trip relative to the public-transport
/// generalized cost; 0.5 at indifference, 0 when unserved.
pub fn traveler_signal(trip: TripExperience, pt_generalized_cost: f64, costs: &TravelCosts) -> Result<f64> {
    if pt_generalized_cost.is_nan() || pt_generalized_cost <= 0.0 {
        return Err(Error::input("public transport cost must be positive"));
    }
    match trip {
        TripExperience::Unserved => Ok(0.0),
        TripExperience::Served { wait_s, in_vehicle_s, fare } => {
            if wait_s < 0.0 || in_vehicle_s < 0.0 || fare < 0.0 {
                return Err(Error::input("trip components must be nonnegative"));
            }
            let g = costs.generalized_cost(wait_s, in_vehicle_s, fare);
            Ok((0.5 + 0.5 * (pt_generalized_cost - g) / pt_generalized_cost).clamp(0.0, 1.0))
        }
    }
}

/// Knobs of the learning process.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LearningParams {
    pub rate: f64,
    pub weights: UtilityWeights,
    pub platform_asc: f64,
}

fn exchange(speaker: &Mind, listener: &mut Mind, params: &LearningParams) -> Result<()> {
    for p in 0..speaker.platforms() {
        if !speaker.awareness.is_aware(p) {
            continue;
        }
        let opinion = speaker.perceived(p, &params.weights, params.platform_asc).clamp(0.0, 1.0);
        listener.awareness.notify(p);
        listener.perceptions[p].word_of_mouth.learn(opinion, params.rate)?;
    }
    Ok(())
}

/// Random pairwise meetings; each agent takes part in `rate` meetings on
/// average. Every whole unit of `rate` is a full round of disjoint pairs,
/// the fractional part a round where each pair meets with that
/// probability. Partners trade opinions on every platform they know of and
/// notify each other of it.
pub fn word_of_mouth_round<R: Rng + ?Sized>(
    minds: &mut [Mind],
    rate: f64,
    params: &LearningParams,
    rng: &mut R,
) -> Result<()> {
    if !(rate.is_finite() && rate >= 0.0) {
        return Err(Error::input(format!("meeting rate must be nonnegative, got {rate}")));
    }
    if minds.len() < 2 || rate == 0.0 {
        return Ok(());
    }
    let full = rate.floor() as usize;
    let frac = rate - full as f64;
    let mut order: Vec<usize> = (0..minds.len()).collect();
    for round in 0..=full {
        let p = if round < full { 1.0 } else { frac };
        if p <= 0.0 {
            continue;
        }
        order.shuffle(rng);
        for pair in order.chunks_exact(2) {
            if p < 1.0 && rng.random::<f64>() >= p {
                continue;
            }
            let (a, b) = (pair[0], pair[1]);
            let before_a = minds[a].clone();
            let before_b = minds[b].clone();
            exchange(&before_a, &mut minds[b], params)?;
            exchange(&before_b, &mut minds[a], params)?;
        }
    }
    Ok(())
}

/// One day of a platform's marketing: unaware agents are notified with
/// probability `reach`, then every aware agent receives `signal` into its
/// marketing component.
pub fn marketing_round<R: Rng + ?Sized>(
    minds: &mut [Mind],
    platform: usize,
    reach: f64,
    signal: f64,
    rate: f64,
    rng: &mut R,
) -> Result<()> {
    if !(0.0..=1.0).contains(&reach) {
        return Err(Error::input(format!("marketing reach {reach} outside [0, 1]")));
    }
    check_signal(signal)?;
    for m in minds.iter_mut() {
        if !m.awareness.is_aware(platform) && rng.random::<f64>() < reach {
            m.awareness.notify(platform);
        }
        if m.awareness.is_aware(platform) {
            m.perceptions[platform].marketing.learn(signal, rate)?;
        }
    }
    Ok(())
}
