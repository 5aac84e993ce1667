//! Per-step trajectory dump used by `replay`.

use std::io::Write;

use super::hand::N_JOINTS;
use super::sim::SimState;
use crate::Result;

pub const TRAJECTORY_HEADER: &str =
    "t,q0,q1,q2,q3,q4,q5,q6,q7,q8,q9,q10,q11,obj_x,obj_y,obj_phi,n_contacts,reward";

#[derive(Clone, Debug, PartialEq)]
pub struct TrajectoryRow {
    pub t: usize,
    pub joint_angles: [f64; N_JOINTS],
    pub obj_x: f64,
    pub obj_y: f64,
    pub obj_phi: f64,
    pub n_contacts: usize,
    pub reward: f64,
}

impl TrajectoryRow {
    pub fn from_state(t: usize, state: &SimState, reward: f64) -> Self {
        Self {
            t,
            joint_angles: state.joint_angles,
            obj_x: state.object_pose.x,
            obj_y: state.object_pose.y,
            obj_phi: state.object_pose.phi,
            n_contacts: state.fingers_in_contact(),
            reward,
        }
    }

    fn record(&self) -> Vec<String> {
        let mut r = Vec::with_capacity(18);
        r.push(self.t.to_string());
        r.extend(self.joint_angles.iter().map(f64::to_string));
        r.push(self.obj_x.to_string());
        r.push(self.obj_y.to_string());
        r.push(self.obj_phi.to_string());
        r.push(self.n_contacts.to_string());
        r.push(self.reward.to_string());
        r
    }
}

pub struct TrajectoryWriter<W: Write> {
    inner: csv::Writer<W>,
}

impl<W: Write> TrajectoryWriter<W> {
    pub fn new(w: W) -> Result<Self> {
        let mut inner = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        inner.write_record(TRAJECTORY_HEADER.split(','))?;
        Ok(Self { inner })
    }

    pub fn write(&mut self, row: &TrajectoryRow) -> Result<()> {
        self.inner.write_record(row.record())?;
        Ok(())
    }

    pub fn finish(mut self) -> Result<()> {
        self.inner.flush()?;
        Ok(())
    }
}
