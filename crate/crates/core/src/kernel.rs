//! Closed-form response functions that drive every ant decision.
//!
//! Movement: a saturating pheromone weight `W(σ) = (1 + σ / (1 + δσ))^β`
//! combined with a turn penalty `w(Δθ)`, normalized over the free neighbor
//! cells. Picking and dropping: a count threshold `χ(n) = n² / (n² + θ²)`
//! composed with the similarity thresholds
//!
//! ```text
//! δ(d) = (k1 / (k1 + d))²     drop:  P_d = χ(n) · δ(d)
//! ε(d) = (d  / (k2 + d))²     pick:  P_p = (1 − χ(n)) · ε(d)
//! ```
//!
//! where `d` is the normalized Euclidean distance between two feature
//! vectors. Everything here is pure.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::habitat::{Direction, GridCoord};

/// Constants of the response functions.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KernelParams {
    /// Osmotropotaxic sensitivity: exponent of the pheromone weight.
    pub beta: f64,
    /// Reciprocal sensory capacity; saturates the pheromone weight.
    pub sensory: f64,
    /// Similarity scale of the drop threshold.
    pub k1: f64,
    /// Similarity scale of the pick threshold.
    pub k2: f64,
    /// Neighbor count at which the count threshold reaches one half.
    pub theta_items: f64,
    /// Steepness exponent of the count threshold.
    pub steepness: f64,
    /// Base pheromone deposited per ant per step.
    pub eta: f64,
    /// Divisor of the neighbor-count bonus added to each deposit.
    pub alpha: f64,
    /// Fraction of pheromone lost per step.
    pub evap: f64,
    /// Decay constant of the turn penalty, per right angle.
    pub direction_falloff: f64,
}

impl Default for KernelParams {
    fn default() -> Self {
        KernelParams {
            beta: 3.5,
            sensory: 0.2,
            k1: 0.1,
            k2: 0.3,
            theta_items: 5.0,
            steepness: 2.0,
            eta: 0.07,
            alpha: 400.0,
            evap: 0.015,
            direction_falloff: 1.0,
        }
    }
}

impl KernelParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("beta", self.beta),
            ("sensory", self.sensory),
            ("k1", self.k1),
            ("k2", self.k2),
            ("theta_items", self.theta_items),
            ("steepness", self.steepness),
            ("eta", self.eta),
            ("alpha", self.alpha),
            ("evap", self.evap),
            ("direction_falloff", self.direction_falloff),
        ];
        for (name, v) in fields {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Config(format!("{name} must be positive and finite, got {v}")));
            }
        }
        if self.evap >= 1.0 {
            return Err(Error::Config(format!("evap must lie in (0, 1), got {}", self.evap)));
        }
        if self.steepness <= 1.0 {
            return Err(Error::Config(format!(
                "steepness must exceed 1, got {}",
                self.steepness
            )));
        }
        Ok(())
    }

    /// Upper bound on the pheromone any single cell can hold in the long
    /// run when each cell receives at most `depositors` deposits per step.
    pub fn stationary_bound(&self, depositors: usize) -> f64 {
        depositors as f64 * (self.eta + 8.0 / self.alpha) / self.evap
    }
}

/// Pheromone weight `W(σ)`. Equals 1 on a clean cell and approaches
/// `(1 + 1/sensory)^beta` as σ grows.
pub fn pheromone_weight(sigma: f64, params: &KernelParams) -> Result<f64> {
    if !(sigma >= 0.0) || sigma.is_infinite() {
        return Err(Error::Domain(format!("pheromone must be finite and nonnegative, got {sigma}")));
    }
    Ok((1.0 + sigma / (1.0 + params.sensory * sigma)).powf(params.beta))
}

/// A change of heading, in multiples of 45 degrees, normalized to `-3..=4`
/// (so a reversal is always `+4`).
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Turn(i8);

impl Turn {
    pub const STRAIGHT: Turn = Turn(0);

    pub fn from_steps(steps: i32) -> Turn {
        let s = steps.rem_euclid(8);
        Turn(if s > 4 { s - 8 } else { s } as i8)
    }

    /// Accepts only the eight lattice angles (any multiple of 45 degrees).
    pub fn from_degrees(degrees: f64) -> Result<Turn> {
        let steps = degrees / 45.0;
        if !steps.is_finite() || steps.fract() != 0.0 {
            return Err(Error::Domain(format!("{degrees} is not a lattice turn angle")));
        }
        Ok(Turn::from_steps((steps % 8.0) as i32))
    }

    pub fn between(from: Direction, to: Direction) -> Turn {
        Turn::from_steps(to.index() as i32 - from.index() as i32)
    }

    pub fn steps(self) -> i8 {
        self.0
    }

    pub fn degrees(self) -> f64 {
        self.0 as f64 * 45.0
    }
}

/// Turn penalty `w(Δθ) = exp(-falloff · |Δθ| / 90°)`.
pub fn direction_weight(turn: Turn, params: &KernelParams) -> f64 {
    (-params.direction_falloff * turn.degrees().abs() / 90.0).exp()
}

/// One cell an ant could step into.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct MoveCandidate {
    pub target: GridCoord,
    pub pheromone: f64,
    pub turn: Turn,
}

pub(crate) fn candidate_weight(c: &MoveCandidate, params: &KernelParams) -> Result<f64> {
    Ok(pheromone_weight(c.pheromone, params)? * direction_weight(c.turn, params))
}

/// Normalized transition probabilities over `candidates`, in input order.
pub fn transition_distribution(
    candidates: &[MoveCandidate],
    params: &KernelParams,
) -> Result<Vec<f64>> {
    if candidates.is_empty() {
        return Err(Error::Domain("no move candidates".into()));
    }
    let weights = candidates
        .iter()
        .map(|c| candidate_weight(c, params))
        .collect::<Result<Vec<_>>>()?;
    let total: f64 = weights.iter().sum();
    Ok(weights.into_iter().map(|w| w / total).collect())
}

/// Response threshold `s^n / (s^n + θ^n)`.
pub fn threshold_response(s: f64, theta: f64, steepness: f64) -> Result<f64> {
    if !(theta > 0.0) {
        return Err(Error::Domain(format!("threshold must be positive, got {theta}")));
    }
    if !(s >= 0.0) {
        return Err(Error::Domain(format!("stimulus must be nonnegative, got {s}")));
    }
    let sn = s.powf(steepness);
    Ok(sn / (sn + theta.powf(steepness)))
}

/// Count threshold `χ(n)`: how crowded the neighborhood is.
pub fn crowding(n: usize, params: &KernelParams) -> f64 {
    let n = n as f64;
    let sn = n.powf(params.steepness);
    sn / (sn + params.theta_items.powf(params.steepness))
}

/// `(1 / d_max) · sqrt(mean((fa - fb)²))`.
pub fn normalized_distance(fa: &[f64], fb: &[f64], d_max: f64) -> Result<f64> {
    if fa.len() != fb.len() || fa.is_empty() {
        return Err(Error::Domain(format!(
            "feature vectors must be non-empty and equally long ({} vs {})",
            fa.len(),
            fb.len()
        )));
    }
    if !(d_max > 0.0) {
        return Err(Error::Domain(format!("d_max must be positive, got {d_max}")));
    }
    let sum: f64 = fa.iter().zip(fb).map(|(a, b)| (a - b) * (a - b)).sum();
    Ok((sum / fa.len() as f64).sqrt() / d_max)
}

fn check_unit(d: f64) -> Result<()> {
    if (0.0..=1.0).contains(&d) {
        Ok(())
    } else {
        Err(Error::Domain(format!("distance {d} outside [0, 1]")))
    }
}

/// Drop similarity threshold `δ(d)`.
pub fn drop_similarity(d: f64, params: &KernelParams) -> f64 {
    let r = params.k1 / (params.k1 + d);
    r * r
}

/// Pick similarity threshold `ε(d)`.
pub fn pick_similarity(d: f64, params: &KernelParams) -> f64 {
    let r = d / (params.k2 + d);
    r * r
}

pub fn pick_probability(n: usize, d: f64, params: &KernelParams) -> Result<f64> {
    check_unit(d)?;
    Ok((1.0 - crowding(n, params)) * pick_similarity(d, params))
}

pub fn drop_probability(n: usize, d: f64, params: &KernelParams) -> Result<f64> {
    check_unit(d)?;
    Ok(crowding(n, params) * drop_similarity(d, params))
}
