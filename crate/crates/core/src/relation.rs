//! Ego-relative spatial relations between object pairs.
//!
//! The angle is measured in the ground plane from the ego forward direction
//! to the displacement pointing from the reference object to the target,
//! counterclockwise positive, and binned into six 60°/120° sectors.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::scene::{EgoState, SceneObject};

/// Planar speed (m/s) below which the ego heading replaces the velocity
/// as the forward direction.
pub const FORWARD_SPEED_EPS: f64 = 0.2;

/// Center distance (m) below which two objects are considered coincident.
pub const COINCIDENT_EPS: f64 = 1e-6;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RelationError {
    #[error("degenerate pair: centers {reference:?} and {target:?} coincide")]
    DegeneratePair { reference: [f64; 2], target: [f64; 2] },
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("unknown relation `{0}`")]
pub struct UnknownRelation(pub String);

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Front,
    Back,
    FrontLeft,
    FrontRight,
    BackLeft,
    BackRight,
}

impl Relation {
    pub const ALL: [Relation; 6] = [
        Relation::Front,
        Relation::Back,
        Relation::FrontLeft,
        Relation::FrontRight,
        Relation::BackLeft,
        Relation::BackRight,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Relation::Front => "front",
            Relation::Back => "back",
            Relation::FrontLeft => "front_left",
            Relation::FrontRight => "front_right",
            Relation::BackLeft => "back_left",
            Relation::BackRight => "back_right",
        }
    }

    /// Phrase used in question text.
    pub fn phrase(self) -> &'static str {
        match self {
            Relation::Front => "front",
            Relation::Back => "back",
            Relation::FrontLeft => "front left",
            Relation::FrontRight => "front right",
            Relation::BackLeft => "back left",
            Relation::BackRight => "back right",
        }
    }

    /// The 180°-opposed relation.
    pub fn complement(self) -> Relation {
        match self {
            Relation::Front => Relation::Back,
            Relation::Back => Relation::Front,
            Relation::FrontLeft => Relation::BackRight,
            Relation::BackRight => Relation::FrontLeft,
            Relation::FrontRight => Relation::BackLeft,
            Relation::BackLeft => Relation::FrontRight,
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Relation {
    type Err = UnknownRelation;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let token = crate::scene::label_token(s);
        Relation::ALL
            .into_iter()
            .find(|r| r.as_str() == token)
            .ok_or_else(|| UnknownRelation(s.to_string()))
    }
}

/// Angle in degrees, normalized to `(-180, 180]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct SignedAngle(f64);

impl SignedAngle {
    pub fn from_degrees(degrees: f64) -> Self {
        let mut d = degrees % 360.0;
        if d <= -180.0 {
            d += 360.0;
        } else if d > 180.0 {
            d -= 360.0;
        }
        SignedAngle(d)
    }

    pub fn degrees(self) -> f64 {
        self.0
    }
}

/// Unit forward vector of the ego vehicle in the ground plane.
pub fn forward_direction(ego: &EgoState) -> [f64; 2] {
    let [vx, vy, _] = ego.velocity;
    let speed = vx.hypot(vy);
    if speed > FORWARD_SPEED_EPS {
        [vx / speed, vy / speed]
    } else {
        [ego.heading_yaw.cos(), ego.heading_yaw.sin()]
    }
}

pub fn signed_angle(
    reference: [f64; 2],
    target: [f64; 2],
    forward: [f64; 2],
) -> Result<SignedAngle, RelationError> {
    let dx = target[0] - reference[0];
    let dy = target[1] - reference[1];
    if dx.hypot(dy) < COINCIDENT_EPS {
        return Err(RelationError::DegeneratePair { reference, target });
    }
    let cross = forward[0] * dy - forward[1] * dx;
    let dot = forward[0] * dx + forward[1] * dy;
    Ok(SignedAngle::from_degrees(cross.atan2(dot).to_degrees()))
}

pub fn bin_relation(angle: SignedAngle) -> Relation {
    let t = angle.degrees();
    if -30.0 < t && t <= 30.0 {
        Relation::Front
    } else if 30.0 < t && t <= 90.0 {
        Relation::FrontLeft
    } else if -90.0 < t && t <= -30.0 {
        Relation::FrontRight
    } else if 90.0 < t && t <= 150.0 {
        Relation::BackLeft
    } else if -150.0 < t && t <= -90.0 {
        Relation::BackRight
    } else {
        Relation::Back
    }
}

/// Relation of `target` as seen from `reference` ("target is to the R of reference").
pub fn relation_from_centers(
    reference: [f64; 2],
    target: [f64; 2],
    forward: [f64; 2],
) -> Result<Relation, RelationError> {
    signed_angle(reference, target, forward).map(bin_relation)
}

pub fn relation_between(
    reference: &SceneObject,
    target: &SceneObject,
    ego: &EgoState,
) -> Result<Relation, RelationError> {
    relation_from_centers(reference.bbox.center_xy(), target.bbox.center_xy(), forward_direction(ego))
}
