use rand::Rng;
use serde::{Deserialize, Serialize};

use super::geometry::{point_segment_distance, wrap_deg, Pose2, Vec2};
use super::hand::{build_hand, HandModel, JOINTS_PER_FINGER, N_FINGERS, N_JOINTS};
use super::object::{ObjectSpec, N_INSTANCES};
use super::EnvParams;
use crate::design::{DesignBounds, DesignParams};
use crate::{seed, Error, Result};

/// Two controls per finger (thumb, ff, mf, rf): MCP rate and the coupled
/// PIP/DIP rate.
pub const ACTION_DIM: usize = 2 * N_FINGERS;
/// 12 normalized joints, 3 pose-error terms, 3 palm-frame pose terms, 18 one-hot.
pub const OBS_DIM: usize = N_JOINTS + 3 + 3 + N_INSTANCES;

/// DIP follows PIP through the shared flexion tendon.
const DIP_PIP_RATIO: f64 = 0.7;
const SEGMENT_SAMPLES: usize = 12;
const REFINE_ITERS: usize = 20;
const MAX_SAMPLE_TRIES: usize = 64;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Disturbance {
    /// N
    pub magnitude: f64,
    pub direction: Vec2,
}

impl Disturbance {
    pub fn none() -> Self {
        Self { magnitude: 0.0, direction: Vec2::new(1.0, 0.0) }
    }

    pub fn force(&self) -> Vec2 {
        self.direction * self.magnitude
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpisodeConfig {
    pub object: ObjectSpec,
    pub goal_pose: Pose2,
    pub initial_object_pose: Pose2,
    pub disturbance: Disturbance,
    pub seed: u64,
    pub horizon: usize,
    pub dt: f64,
}

impl EpisodeConfig {
    pub fn validate(&self) -> Result<()> {
        let d = &self.disturbance;
        if !(d.magnitude >= 0.0 && d.magnitude.is_finite()) {
            return Err(Error::InvalidConfig(format!("disturbance magnitude {}", d.magnitude)));
        }
        if (d.direction.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidConfig("disturbance direction must be a unit vector".into()));
        }
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidConfig(format!("dt {}", self.dt)));
        }
        if self.horizon == 0 {
            return Err(Error::InvalidConfig("horizon must be >= 1".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Contact {
    pub finger: usize,
    /// 0 proximal, 1 middle, 2 distal.
    pub link: usize,
    /// Point on the object surface, mm.
    pub point: Vec2,
    /// Object's outward normal at `point`.
    pub normal: Vec2,
    /// N, pushing the object along `-normal`.
    pub normal_force: f64,
    /// N, applied to the object along `normal.perp()`.
    pub tangential_force: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimState {
    /// Degrees; finger-major (thumb, ff, mf, rf) × (MCP, PIP, DIP).
    pub joint_angles: [f64; N_JOINTS],
    pub object_pose: Pose2,
    pub step_count: usize,
    pub hold_counter: usize,
    pub contacts: Vec<Contact>,
}

impl SimState {
    /// Number of distinct fingers touching the object.
    pub fn fingers_in_contact(&self) -> usize {
        let mut seen = [false; N_FINGERS];
        for c in &self.contacts {
            seen[c.finger] = true;
        }
        seen.iter().filter(|&&s| s).count()
    }

    /// Position error (mm) and absolute wrapped heading error (deg).
    pub fn pose_error(&self, goal: &Pose2) -> (f64, f64) {
        let p = &self.object_pose;
        ((goal.position() - p.position()).norm(), wrap_deg(goal.phi - p.phi).abs())
    }
}

/// Per-step success condition: pose within tolerance and at least two
/// fingers on the object.
fn in_hand_at_goal(state: &SimState, goal: &Pose2, tol_pos: f64, tol_ang: f64) -> bool {
    let (ep, ea) = state.pose_error(goal);
    ep <= tol_pos && ea <= tol_ang && state.fingers_in_contact() >= 2
}

/// The condition must currently hold at the given tolerances and have held
/// for `hold_steps` consecutive steps. The hold counter itself is maintained
/// by [`PlanarSim::step`] at the simulator's tolerances.
pub fn is_success(
    state: &SimState,
    config: &EpisodeConfig,
    tol_pos: f64,
    tol_ang: f64,
    hold_steps: usize,
) -> bool {
    state.hold_counter >= hold_steps && in_hand_at_goal(state, &config.goal_pose, tol_pos, tol_ang)
}

/// A hand plus physics parameters. Holds no per-episode state.
#[derive(Clone, Debug)]
pub struct PlanarSim {
    pub hand: HandModel,
    pub params: EnvParams,
}

struct RawContact {
    finger: usize,
    link: usize,
    point: Vec2,
    normal: Vec2,
    normal_force: f64,
    finger_velocity: Vec2,
}

impl PlanarSim {
    pub fn new(theta: &DesignParams, bounds: &DesignBounds, params: EnvParams) -> Result<Self> {
        let hand = build_hand(theta, bounds, params.finger_radius_mm)?;
        Ok(Self { hand, params })
    }

    pub fn from_hand(hand: HandModel, params: EnvParams) -> Self {
        Self { hand, params }
    }

    /// Random goal pose in a disc around the palm centre, initial pose near
    /// the goal, random fixed disturbance direction, all from `seed`.
    /// Initial poses overlapping the resting hand are redrawn.
    pub fn sample_episode(&self, object: &ObjectSpec, force: f64, seed: u64) -> Result<EpisodeConfig> {
        let p = &self.params;
        let mut rng = seed::rng(seed);
        let center = self.hand.palm_center();
        for _ in 0..MAX_SAMPLE_TRIES {
            let r = p.goal_radius_mm * rng.random::<f64>().sqrt();
            let a = 360.0 * rng.random::<f64>();
            let goal_pos = center + Vec2::from_angle_deg(a) * r;
            let goal_phi = 180.0 - 360.0 * rng.random::<f64>();
            let ri = p.init_offset_mm * rng.random::<f64>().sqrt();
            let ai = 360.0 * rng.random::<f64>();
            let init_pos = goal_pos + Vec2::from_angle_deg(ai) * ri;
            let init_phi = wrap_deg(goal_phi + p.init_offset_deg * (2.0 * rng.random::<f64>() - 1.0));
            let dir = Vec2::from_angle_deg(360.0 * rng.random::<f64>());
            let cfg = EpisodeConfig {
                object: object.clone(),
                goal_pose: Pose2::new(goal_pos.x, goal_pos.y, goal_phi),
                initial_object_pose: Pose2::new(init_pos.x, init_pos.y, init_phi),
                disturbance: Disturbance { magnitude: force, direction: dir },
                seed,
                horizon: p.horizon,
                dt: p.dt,
            };
            if !self.penetrates_rest_hand(&cfg.object, &cfg.initial_object_pose) {
                return Ok(cfg);
            }
        }
        Err(Error::InvalidConfig(format!(
            "no non-penetrating start for {} after {MAX_SAMPLE_TRIES} draws",
            object.label()
        )))
    }

    fn penetrates_rest_hand(&self, object: &ObjectSpec, pose: &Pose2) -> bool {
        let rest = [0.0; JOINTS_PER_FINGER];
        self.hand.fingers.iter().any(|f| {
            let pts = f.joint_points(&rest);
            (0..3).any(|l| {
                self.link_min_distance(object, pose, pts[l], pts[l + 1])
                    .is_some_and(|(sd, _)| sd < self.hand.finger_radius)
            })
        })
    }

    pub fn reset(&self, config: &EpisodeConfig) -> Result<SimState> {
        config.validate()?;
        if self.penetrates_rest_hand(&config.object, &config.initial_object_pose) {
            return Err(Error::InvalidConfig(
                "object initially penetrates the resting hand".into(),
            ));
        }
        Ok(SimState {
            joint_angles: [0.0; N_JOINTS],
            object_pose: config.initial_object_pose,
            step_count: 0,
            hold_counter: 0,
            contacts: Vec::new(),
        })
    }

    /// Minimum signed distance from the segment `a..b` to the object and the
    /// segment parameter where it occurs, or `None` if the segment is farther
    /// than the capsule radius from the object's bounding disc.
    fn link_min_distance(&self, obj: &ObjectSpec, pose: &Pose2, a: Vec2, b: Vec2) -> Option<(f64, f64)> {
        let reach = obj.bounding_radius + self.hand.finger_radius;
        if point_segment_distance(pose.position(), a, b) > reach {
            return None;
        }
        let f = |t: f64| obj.signed_distance(pose, a + (b - a) * t).0;
        let n = SEGMENT_SAMPLES;
        let mut best = (f64::INFINITY, 0.0);
        for i in 0..n {
            let t = i as f64 / (n - 1) as f64;
            let d = f(t);
            if d < best.0 {
                best = (d, t);
            }
        }
        // Golden-section refinement around the best sample.
        let h = 1.0 / (n - 1) as f64;
        let (mut lo, mut hi) = ((best.1 - h).max(0.0), (best.1 + h).min(1.0));
        let g = 0.618_033_988_749_894_8;
        let mut c = hi - g * (hi - lo);
        let mut d = lo + g * (hi - lo);
        let (mut fc, mut fd) = (f(c), f(d));
        for _ in 0..REFINE_ITERS {
            if fc < fd {
                hi = d;
                d = c;
                fd = fc;
                c = hi - g * (hi - lo);
                fc = f(c);
            } else {
                lo = c;
                c = d;
                fc = fd;
                d = lo + g * (hi - lo);
                fd = f(d);
            }
        }
        for (v, t) in [(fc, c), (fd, d)] {
            if v < best.0 {
                best = (v, t);
            }
        }
        Some(best)
    }

    pub fn step(&self, state: &SimState, action: &[f64], config: &EpisodeConfig) -> Result<SimState> {
        assert_eq!(action.len(), ACTION_DIM, "action must have {ACTION_DIM} components");
        let p = &self.params;
        let dt = config.dt;
        let q_old = state.joint_angles;
        let mut q = q_old;
        for f in 0..N_FINGERS {
            let mcp = action[2 * f];
            let pip = action[2 * f + 1];
            if !(mcp.is_finite() && pip.is_finite()) {
                return Err(Error::NumericalBlowup {
                    step: state.step_count,
                    what: "non-finite action".into(),
                });
            }
            let (mcp, pip) = (mcp.clamp(-1.0, 1.0), pip.clamp(-1.0, 1.0));
            let j = f * JOINTS_PER_FINGER;
            q[j] += mcp * p.joint_speed_deg_s * dt;
            q[j + 1] += pip * p.joint_speed_deg_s * dt;
            q[j + 2] += DIP_PIP_RATIO * pip * p.joint_speed_deg_s * dt;
        }
        self.hand.clamp_joints(&mut q);

        let obj = &config.object;
        let pose = state.object_pose;
        let center = pose.position();
        let rc = self.hand.finger_radius;
        let k = p.contact_stiffness * 1e-3; // N/mm

        let mut raw: Vec<RawContact> = Vec::new();
        for (fi, finger) in self.hand.fingers.iter().enumerate() {
            let j0 = fi * JOINTS_PER_FINGER;
            let pts = finger.joint_points(&q[j0..j0 + 3]);
            let omegas: [f64; 3] = std::array::from_fn(|m| {
                finger.flex_sign * ((q[j0 + m] - q_old[j0 + m]) / dt).to_radians()
            });
            for link in 0..3 {
                let (a, b) = (pts[link], pts[link + 1]);
                let Some((sd, t)) = self.link_min_distance(obj, &pose, a, b) else {
                    continue;
                };
                if sd >= rc {
                    continue;
                }
                let on_link = a + (b - a) * t;
                let (_, normal) = obj.signed_distance(&pose, on_link);
                let point = on_link - normal * sd;
                let mut v = Vec2::ZERO;
                for m in 0..=link {
                    v += (point - pts[m]).perp() * omegas[m];
                }
                raw.push(RawContact {
                    finger: fi,
                    link,
                    point,
                    normal,
                    normal_force: k * (rc - sd),
                    finger_velocity: v,
                });
            }
        }

        let to_mm_s = 1000.0 / p.damping_lin;
        let disturbance = config.disturbance.force();
        let mut f_normal = Vec2::ZERO;
        let mut tau_normal = 0.0;
        for c in &raw {
            let f = -c.normal * c.normal_force;
            f_normal += f;
            tau_normal += ((c.point - center) * 1e-3).cross(f);
        }
        // Object motion from normal forces alone, used to measure slip.
        let v0 = (f_normal + disturbance) * to_mm_s;
        let w0 = tau_normal / p.damping_rot;

        let c_t = p.tangential_damping * 1e-3; // N·s/mm
        let mut force = f_normal + disturbance;
        let mut torque = tau_normal;
        let mut contacts = Vec::with_capacity(raw.len());
        for c in raw {
            let r = c.point - center;
            let v_obj = v0 + r.perp() * w0;
            let tangent = c.normal.perp();
            let slip = (c.finger_velocity - v_obj).dot(tangent);
            let cap = p.friction * c.normal_force;
            let ft = (c_t * slip).clamp(-cap, cap);
            let f = tangent * ft;
            force += f;
            torque += (r * 1e-3).cross(f);
            contacts.push(Contact {
                finger: c.finger,
                link: c.link,
                point: c.point,
                normal: c.normal,
                normal_force: c.normal_force,
                tangential_force: ft,
            });
        }

        let v = force * to_mm_s;
        let w = torque / p.damping_rot;
        let mut phi = pose.phi + (w * dt).to_degrees();
        if phi > 180.0 {
            phi -= 360.0;
        } else if phi <= -180.0 {
            phi += 360.0;
        }
        let object_pose = Pose2::new(pose.x + v.x * dt, pose.y + v.y * dt, phi);

        let bound = p.sanity_bound_mm;
        let ok = [object_pose.x, object_pose.y, object_pose.phi].iter().all(|c| c.is_finite())
            && object_pose.x.abs() <= bound
            && object_pose.y.abs() <= bound;
        if !ok {
            return Err(Error::NumericalBlowup {
                step: state.step_count + 1,
                what: format!("object pose {object_pose:?}"),
            });
        }

        let mut next = SimState {
            joint_angles: q,
            object_pose,
            step_count: state.step_count + 1,
            hold_counter: 0,
            contacts,
        };
        if in_hand_at_goal(&next, &config.goal_pose, p.tol_pos_mm, p.tol_ang_deg) {
            next.hold_counter = state.hold_counter + 1;
        }
        Ok(next)
    }

    /// Success at the simulator's own tolerances and hold length.
    pub fn succeeded(&self, state: &SimState, config: &EpisodeConfig) -> bool {
        is_success(state, config, self.params.tol_pos_mm, self.params.tol_ang_deg, self.params.hold_steps)
    }

    pub fn reward(&self, state: &SimState, _action: &[f64], config: &EpisodeConfig) -> f64 {
        let w = &self.params.reward;
        let (ep, ea) = state.pose_error(&config.goal_pose);
        let contact = if state.fingers_in_contact() >= 2 { 1.0 } else { 0.0 };
        let at_goal = in_hand_at_goal(state, &config.goal_pose, self.params.tol_pos_mm, self.params.tol_ang_deg);
        -w.position * ep / 100.0 - w.angle * ea / 180.0
            + w.contact * contact
            + if at_goal { w.success } else { 0.0 }
    }

    pub fn observe(&self, state: &SimState, config: &EpisodeConfig) -> [f64; OBS_DIM] {
        let mut obs = [0.0; OBS_DIM];
        for (j, q) in state.joint_angles.iter().enumerate() {
            let [lo, hi] = self.hand.joint_limits[j % JOINTS_PER_FINGER];
            obs[j] = 2.0 * (q - lo) / (hi - lo) - 1.0;
        }
        let pose = &state.object_pose;
        let goal = &config.goal_pose;
        obs[N_JOINTS] = (goal.x - pose.x) / 100.0;
        obs[N_JOINTS + 1] = (goal.y - pose.y) / 100.0;
        obs[N_JOINTS + 2] = wrap_deg(goal.phi - pose.phi) / 180.0;
        let c = self.hand.palm_center();
        obs[N_JOINTS + 3] = (pose.x - c.x) / 100.0;
        obs[N_JOINTS + 4] = (pose.y - c.y) / 100.0;
        obs[N_JOINTS + 5] = pose.phi / 180.0;
        obs[N_JOINTS + 6 + config.object.one_hot_index] = 1.0;
        obs
    }
}
