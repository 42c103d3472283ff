//! Per-agent direction rules and the Search/Lock/Find state machine.

use serde::{Deserialize, Serialize};

use crate::geometry::{unit_from_angle, wrap_degrees, TorusSpec, Vec2};
use crate::rng::RngStream;

/// Norm below which a summed direction is treated as degenerate.
pub const DEGENERATE_NORM: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "tag")]
pub enum BehaviorState {
    Search,
    /// Homing on a feeding agent sitting at `anchor`.
    Lock { anchor: Vec2 },
    /// Moving straight to target `target`.
    Find { target: usize },
    /// Sitting on target `target` until the run ends.
    Arrived { target: usize },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum StateTag {
    Search,
    Lock,
    Find,
    Arrived,
}

impl StateTag {
    pub fn as_str(self) -> &'static str {
        match self {
            StateTag::Search => "search",
            StateTag::Lock => "lock",
            StateTag::Find => "find",
            StateTag::Arrived => "arrived",
        }
    }
}

impl BehaviorState {
    pub fn tag(&self) -> StateTag {
        match self {
            BehaviorState::Search => StateTag::Search,
            BehaviorState::Lock { .. } => StateTag::Lock,
            BehaviorState::Find { .. } => StateTag::Find,
            BehaviorState::Arrived { .. } => StateTag::Arrived,
        }
    }

    pub fn lock_anchor(&self) -> Option<Vec2> {
        match *self {
            BehaviorState::Lock { anchor } => Some(anchor),
            _ => None,
        }
    }

    pub fn target_id(&self) -> Option<usize> {
        match *self {
            BehaviorState::Find { target } | BehaviorState::Arrived { target } => Some(target),
            _ => None,
        }
    }

    #[inline]
    pub fn is_arrived(&self) -> bool {
        matches!(self, BehaviorState::Arrived { .. })
    }
}

/// Radii of the three interaction zones plus the target detection radius.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ZoneRadii {
    /// Repulsion zone outer bound.
    pub r1: f64,
    /// Alignment zone outer bound.
    pub r2: f64,
    /// Social detection radius, also the attraction zone outer bound.
    pub r_s: f64,
    /// Target detection radius.
    pub r_t: f64,
}

impl ZoneRadii {
    pub fn new(r1: f64, r2: f64, r_s: f64, r_t: f64) -> Option<Self> {
        let ok = r1.is_finite()
            && r2.is_finite()
            && r_s.is_finite()
            && r_t.is_finite()
            && 0.0 <= r1
            && r1 <= r2
            && r2 <= r_s
            && r_t > 0.0;
        ok.then_some(Self { r1, r2, r_s, r_t })
    }

    /// Radii with `r1 = r1_frac·r_s` and `r2 = r2_frac·r_s`.
    pub fn from_fractions(r_s: f64, r_t: f64, r1_frac: f64, r2_frac: f64) -> Option<Self> {
        Self::new(r1_frac * r_s, r2_frac * r_s, r_s, r_t)
    }
}

/// One sensed neighbor, described relative to the sensing agent.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Neighbor {
    /// Minimal-image displacement from the sensing agent to the neighbor.
    pub offset: Vec2,
    /// Neighbor's unit heading.
    pub heading: Vec2,
    pub distance: f64,
}

/// Record of the directions that went into one heading update.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DirectionUpdate {
    pub d_self: Vec2,
    pub d_social: Option<Vec2>,
    pub d_final: Vec2,
    pub alpha_draw: Option<f64>,
    pub beta_draw: f64,
}

/// Correlated-walk self heading in degrees.
///
/// On the first tick the heading is `α ~ U[0, 360)`. Afterwards it is the
/// previous *final* heading plus `β ~ N(0, σ)`.
pub fn self_direction(
    prev_final_heading: f64,
    sigma: f64,
    is_first_tick: bool,
    rng: &mut RngStream,
) -> f64 {
    if is_first_tick {
        return rng.uniform_range(0.0, 360.0);
    }
    if sigma == 0.0 {
        return prev_final_heading;
    }
    prev_final_heading + rng.normal(0.0, sigma)
}

/// Zonal social direction, or `None` when nothing usable is sensed.
///
/// Any neighbor strictly inside `r1` switches the rule to pure repulsion.
/// Otherwise alignment (`r1 ≤ d < r2`) and attraction (`r2 ≤ d ≤ r_s`)
/// contributions are summed with equal weight per neighbor.
pub fn social_direction(neighbors: &[Neighbor], zones: &ZoneRadii) -> Option<Vec2> {
    let mut repulse = Vec2::ZERO;
    let mut repulsing = false;
    for nb in neighbors {
        if nb.distance < zones.r1 {
            repulsing = true;
            if nb.distance > 0.0 {
                repulse += -nb.offset * (1.0 / nb.distance);
            }
        }
    }
    if repulsing {
        return repulse.normalized(DEGENERATE_NORM);
    }

    let mut sum = Vec2::ZERO;
    for nb in neighbors {
        if nb.distance > zones.r_s {
            continue;
        }
        if nb.distance < zones.r2 {
            sum += nb.heading;
        } else if nb.distance > 0.0 {
            sum += nb.offset * (1.0 / nb.distance);
        }
    }
    sum.normalized(DEGENERATE_NORM)
}

/// Weighted blend of self and social directions.
pub fn blended_direction(d_self: Vec2, d_social: Option<Vec2>, rho: f64) -> Vec2 {
    match d_social {
        None => d_self,
        Some(social) => (d_self * (1.0 - rho) + social * rho)
            .normalized(DEGENERATE_NORM)
            .unwrap_or(d_self),
    }
}

/// Full heading update of a Search agent.
///
/// On the first tick `prev_heading` must carry the initial uniform draw
/// `α` (see [`self_direction`]); it is used as the self heading unchanged.
/// Later ticks add turning noise to `prev_heading`, the previous final
/// heading.
pub fn search_update(
    prev_heading: f64,
    sigma: f64,
    rho: f64,
    is_first_tick: bool,
    neighbors: &[Neighbor],
    zones: &ZoneRadii,
    rng: &mut RngStream,
) -> DirectionUpdate {
    let self_deg = if is_first_tick {
        prev_heading
    } else {
        self_direction(prev_heading, sigma, false, rng)
    };
    let d_self = unit_from_angle(self_deg);
    let d_social = if rho > 0.0 {
        social_direction(neighbors, zones)
    } else {
        None
    };
    let d_final = blended_direction(d_self, d_social, rho);
    DirectionUpdate {
        d_self,
        d_social,
        d_final,
        alpha_draw: is_first_tick.then_some(wrap_degrees(self_deg)),
        beta_draw: self_deg - prev_heading,
    }
}

/// Next behavioral state.
///
/// `nearest_target` is `(target id, distance)`; `nearest_feeder` is the
/// position and distance of the closest agent already sitting on a target.
/// Reaching a target wins over locking; Search agents lock only on feeders;
/// Lock agents re-anchor to the nearest feeder in range.
pub fn transition_state(
    current: BehaviorState,
    nearest_target: Option<(usize, f64)>,
    nearest_feeder: Option<(Vec2, f64)>,
    zones: &ZoneRadii,
) -> BehaviorState {
    match current {
        BehaviorState::Arrived { .. } | BehaviorState::Find { .. } => current,
        BehaviorState::Search | BehaviorState::Lock { .. } => {
            if let Some((target, d)) = nearest_target {
                if d <= zones.r_t {
                    return BehaviorState::Find { target };
                }
            }
            match nearest_feeder {
                Some((anchor, d)) if d <= zones.r_s => BehaviorState::Lock { anchor },
                _ => current,
            }
        }
    }
}

/// Unit heading toward the goal of a Find or Lock agent.
///
/// Returns `None` for Search/Arrived agents and when the agent already sits
/// on its goal.
pub fn goal_steering(
    state: &BehaviorState,
    self_pos: Vec2,
    world: &TorusSpec,
    targets: &[Vec2],
) -> Option<Vec2> {
    let goal = goal_point(state, targets)?;
    world.delta(self_pos, goal).normalized(DEGENERATE_NORM)
}

/// Point a Find or Lock agent is steering to.
pub fn goal_point(state: &BehaviorState, targets: &[Vec2]) -> Option<Vec2> {
    match *state {
        BehaviorState::Find { target } => targets.get(target).copied(),
        BehaviorState::Lock { anchor } => Some(anchor),
        _ => None,
    }
}
