//! Deterministic top-view quasi-static manipulation simulator.
//!
//! The object moves with velocity proportional to the net planar force and
//! torque acting on it (`v = f / c_lin`, `ω = τ / c_rot`); there is no
//! inertia. Finger links are kinematically driven capsules that push the
//! object through penalty springs along the object's signed-distance normal,
//! with viscous tangential friction capped by the Coulomb cone.

mod geometry;
mod hand;
mod object;
mod sim;
mod trajectory;

pub use geometry::{point_segment_distance, union_sdf, wrap_deg, Pose2, Primitive, Vec2};
pub use hand::{
    build_hand, Finger, HandModel, FF, FINGER_NAMES, JOINTS_PER_FINGER, JOINT_LIMITS, MF, N_FINGERS,
    N_JOINTS, RF, THUMB,
};
pub use object::{
    all_instances, instance_from_index, make_object, make_object_by_name, one_hot_index,
    parse_instances, scale_index, ObjectSizes, ObjectSpec, Shape, N_INSTANCES, SCALES,
};
pub use sim::{
    is_success, Contact, Disturbance, EpisodeConfig, PlanarSim, SimState, ACTION_DIM, OBS_DIM,
};
pub use trajectory::{TrajectoryRow, TrajectoryWriter, TRAJECTORY_HEADER};

use serde::{Deserialize, Serialize};

/// Per-step reward weights: position, angle, contact, success.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RewardWeights {
    pub position: f64,
    pub angle: f64,
    pub contact: f64,
    pub success: f64,
}

impl Default for RewardWeights {
    fn default() -> Self {
        Self { position: 1.0, angle: 0.5, contact: 0.1, success: 5.0 }
    }
}

/// Physics gains, task tolerances and episode sampling ranges.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EnvParams {
    /// Integration step, s.
    pub dt: f64,
    pub horizon: usize,
    pub hold_steps: usize,
    pub tol_pos_mm: f64,
    pub tol_ang_deg: f64,
    /// Normal penalty stiffness, N/m.
    pub contact_stiffness: f64,
    pub friction: f64,
    /// Linear damping, N·s/m.
    pub damping_lin: f64,
    /// Rotational damping, N·m·s/rad.
    pub damping_rot: f64,
    /// Viscous coefficient for tangential slip before the friction cap, N·s/m.
    pub tangential_damping: f64,
    /// Joint rate at full action, deg/s.
    pub joint_speed_deg_s: f64,
    /// Finger capsule radius, mm.
    pub finger_radius_mm: f64,
    /// Goal positions are drawn from a disc of this radius around the palm centre.
    pub goal_radius_mm: f64,
    /// Initial object pose is the goal perturbed by up to this distance...
    pub init_offset_mm: f64,
    /// ...and up to this rotation.
    pub init_offset_deg: f64,
    /// Any object coordinate beyond this magnitude aborts the episode.
    pub sanity_bound_mm: f64,
    pub reward: RewardWeights,
    pub objects: ObjectSizes,
}

impl Default for EnvParams {
    fn default() -> Self {
        Self {
            dt: 0.02,
            horizon: 300,
            hold_steps: 10,
            tol_pos_mm: 10.0,
            tol_ang_deg: 10.0,
            contact_stiffness: 200.0,
            friction: 0.8,
            damping_lin: 50.0,
            damping_rot: 5.0,
            tangential_damping: 50.0,
            joint_speed_deg_s: 150.0,
            finger_radius_mm: 7.0,
            goal_radius_mm: 60.0,
            init_offset_mm: 8.0,
            init_offset_deg: 8.0,
            sanity_bound_mm: 1.0e4,
            reward: RewardWeights::default(),
            objects: ObjectSizes::default(),
        }
    }
}

impl EnvParams {
    pub fn validate(&self) -> crate::Result<()> {
        let positive = [
            ("dt", self.dt),
            ("contact_stiffness", self.contact_stiffness),
            ("damping_lin", self.damping_lin),
            ("damping_rot", self.damping_rot),
            ("finger_radius_mm", self.finger_radius_mm),
            ("sanity_bound_mm", self.sanity_bound_mm),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(crate::Error::Config(format!("env.{name} must be > 0, got {v}")));
            }
        }
        let non_negative = [
            ("friction", self.friction),
            ("tangential_damping", self.tangential_damping),
            ("joint_speed_deg_s", self.joint_speed_deg_s),
            ("tol_pos_mm", self.tol_pos_mm),
            ("tol_ang_deg", self.tol_ang_deg),
            ("goal_radius_mm", self.goal_radius_mm),
            ("init_offset_mm", self.init_offset_mm),
            ("init_offset_deg", self.init_offset_deg),
        ];
        for (name, v) in non_negative {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(crate::Error::Config(format!("env.{name} must be >= 0, got {v}")));
            }
        }
        if self.horizon == 0 {
            return Err(crate::Error::Config("env.horizon must be >= 1".into()));
        }
        Ok(())
    }
}
