//! Planar hand kinematics derived from a design vector.
//!
//! Palm frame: origin at the centre of the palm's bottom edge, +y towards the
//! fingers. The palm rectangle spans `x ∈ [-w/2, w/2]`, `y ∈ [0, h]` and acts
//! as the support surface the object rests on; only finger links collide.
//!
//! Finger headings are measured counter-clockwise from +y. ff, mf and rf sit
//! at their design positions pointing along their design orientation; the
//! thumb is fixed at the bottom-edge centre pointing away from the palm (-y).
//! Flexion curls each digit back over the palm: ff, mf and the thumb curl
//! counter-clockwise, rf clockwise.

use serde::{Deserialize, Serialize};

use super::geometry::Vec2;
use crate::design::{DesignBounds, DesignParams};
use crate::Result;

pub const N_FINGERS: usize = 4;
pub const JOINTS_PER_FINGER: usize = 3;
pub const N_JOINTS: usize = N_FINGERS * JOINTS_PER_FINGER;

pub const THUMB: usize = 0;
pub const FF: usize = 1;
pub const MF: usize = 2;
pub const RF: usize = 3;
pub const FINGER_NAMES: [&str; N_FINGERS] = ["thumb", "ff", "mf", "rf"];

/// MCP, PIP, DIP limits in degrees, shared by every design.
pub const JOINT_LIMITS: [[f64; 2]; JOINTS_PER_FINGER] = [[-20.0, 90.0], [0.0, 110.0], [0.0, 90.0]];

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Finger {
    pub base: Vec2,
    pub base_heading_deg: f64,
    /// +1 curls counter-clockwise, -1 clockwise.
    pub flex_sign: f64,
    /// Proximal, middle, distal.
    pub links: [f64; 3],
}

impl Finger {
    pub fn span(&self) -> f64 {
        self.links.iter().sum()
    }

    /// Base, PIP, DIP and tip positions for joint angles `q` (degrees).
    pub fn joint_points(&self, q: &[f64]) -> [Vec2; 4] {
        let mut pts = [self.base; 4];
        let mut heading = self.base_heading_deg;
        for k in 0..3 {
            heading += self.flex_sign * q[k];
            let dir = Vec2::from_angle_deg(heading + 90.0);
            pts[k + 1] = pts[k] + dir * self.links[k];
        }
        pts
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HandModel {
    pub fingers: [Finger; N_FINGERS],
    pub palm_width: f64,
    pub palm_height: f64,
    pub joint_limits: [[f64; 2]; JOINTS_PER_FINGER],
    pub finger_radius: f64,
}

impl HandModel {
    pub fn palm_center(&self) -> Vec2 {
        Vec2::new(0.0, self.palm_height / 2.0)
    }

    pub fn clamp_joints(&self, q: &mut [f64; N_JOINTS]) {
        for (j, v) in q.iter_mut().enumerate() {
            let [lo, hi] = self.joint_limits[j % JOINTS_PER_FINGER];
            *v = v.clamp(lo, hi);
        }
    }

    pub fn joints_within_limits(&self, q: &[f64; N_JOINTS]) -> bool {
        q.iter().enumerate().all(|(j, v)| {
            let [lo, hi] = self.joint_limits[j % JOINTS_PER_FINGER];
            *v >= lo && *v <= hi
        })
    }
}

pub fn build_hand(theta: &DesignParams, bounds: &DesignBounds, finger_radius: f64) -> Result<HandModel> {
    bounds.check(theta)?;
    let links = [theta.proximal_len(), theta.middle_len(), theta.distal_len()];
    let finger = |(x, y): (f64, f64), heading: f64, flex_sign: f64| Finger {
        base: Vec2::new(x, y),
        base_heading_deg: heading,
        flex_sign,
        links,
    };
    Ok(HandModel {
        fingers: [
            finger((0.0, 0.0), 180.0, 1.0),
            finger(theta.ff_pos(), theta.ff_orient(), 1.0),
            finger(theta.mf_pos(), theta.mf_orient(), 1.0),
            finger(theta.rf_pos(), theta.rf_orient(), -1.0),
        ],
        palm_width: theta.palm_width(),
        palm_height: theta.palm_height(),
        joint_limits: JOINT_LIMITS,
        finger_radius,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn v3_lengths_and_span() {
        let h = build_hand(&DesignParams::v3(), &DesignBounds::table_i(), 7.0).unwrap();
        let ff = &h.fingers[FF];
        assert_eq!(ff.links, [45.0, 20.0, 35.0]);
        let pts = ff.joint_points(&[0.0; 3]);
        assert!((pts[3] - Vec2::new(28.0, 184.0)).norm() < 1e-12);
        assert_eq!(ff.span(), 100.0);
    }

    #[test]
    fn v7_orientations() {
        let h = build_hand(&DesignParams::v7(), &DesignBounds::table_i(), 7.0).unwrap();
        assert_eq!(h.fingers[FF].base_heading_deg, 2.9);
        assert_eq!(h.fingers[RF].base_heading_deg, -2.9);
        // Turned towards the middle finger: ff tip left of its base, rf tip right.
        let ff_tip = h.fingers[FF].joint_points(&[0.0; 3])[3];
        let rf_tip = h.fingers[RF].joint_points(&[0.0; 3])[3];
        assert!(ff_tip.x < 29.0 && rf_tip.x > -36.0);
    }

    #[test]
    fn all_fingers_share_link_lengths() {
        let h = build_hand(&DesignParams::v6(), &DesignBounds::table_i(), 7.0).unwrap();
        assert!(h.fingers.iter().all(|f| f.links == [45.0, 18.0, 35.0]));
    }

    #[test]
    fn out_of_bounds_design_is_rejected() {
        let mut v = DesignParams::v3().to_array();
        v[0] = 10.0;
        assert!(build_hand(&DesignParams::from_array(v), &DesignBounds::table_i(), 7.0).is_err());
    }

    #[test]
    fn flexion_curls_back_over_the_palm() {
        let h = build_hand(&DesignParams::v3(), &DesignBounds::table_i(), 7.0).unwrap();
        let tip = h.fingers[FF].joint_points(&[90.0, 90.0, 63.0])[3];
        assert!(tip.y < h.palm_height && tip.x.abs() < 42.0, "{tip:?}");
        let thumb_tip = h.fingers[THUMB].joint_points(&[90.0, 90.0, 63.0])[3];
        assert!(thumb_tip.y > 0.0 && thumb_tip.x > 0.0, "{thumb_tip:?}");
    }
}
