//! The six benchmark shapes at three uniform scales (18 instances).

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::geometry::{union_sdf, Pose2, Primitive, Vec2};
use crate::{Error, Result};

pub const SCALES: [f64; 3] = [0.75, 1.0, 1.25];
pub const N_INSTANCES: usize = 18;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Shape {
    Barbell,
    Board,
    Cross3d,
    Pen,
    Ring,
    Sphere,
}

impl Shape {
    pub const ALL: [Shape; 6] = [
        Shape::Barbell,
        Shape::Board,
        Shape::Cross3d,
        Shape::Pen,
        Shape::Ring,
        Shape::Sphere,
    ];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn name(self) -> &'static str {
        match self {
            Shape::Barbell => "barbell",
            Shape::Board => "board",
            Shape::Cross3d => "cross3d",
            Shape::Pen => "pen",
            Shape::Ring => "ring",
            Shape::Sphere => "sphere",
        }
    }
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Shape {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Shape::ALL
            .into_iter()
            .find(|sh| sh.name() == s)
            .ok_or_else(|| Error::UnknownShape(s.to_string()))
    }
}

pub fn scale_index(scale: f64) -> Result<usize> {
    SCALES
        .iter()
        .position(|&s| (s - scale).abs() < 1e-9)
        .ok_or(Error::UnknownScale(scale))
}

/// Base (scale 1) dimensions in mm.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ObjectSizes {
    pub sphere_radius: f64,
    pub board: [f64; 2],
    pub pen: [f64; 2],
    pub cross_bar: [f64; 2],
    pub barbell_disc_radius: f64,
    pub barbell_bar: [f64; 2],
    pub ring_radius: f64,
    pub ring_thickness: f64,
    /// Areal density used for the (informational) object mass, kg/m².
    pub areal_density: f64,
}

impl Default for ObjectSizes {
    fn default() -> Self {
        Self {
            sphere_radius: 25.0,
            board: [80.0, 50.0],
            pen: [100.0, 8.0],
            cross_bar: [60.0, 15.0],
            barbell_disc_radius: 15.0,
            barbell_bar: [50.0, 8.0],
            ring_radius: 30.0,
            ring_thickness: 8.0,
            areal_density: 25.0,
        }
    }
}

impl ObjectSizes {
    fn base_primitives(&self, shape: Shape) -> Vec<Primitive> {
        let o = Vec2::ZERO;
        match shape {
            Shape::Sphere => vec![Primitive::Disc { center: o, radius: self.sphere_radius }],
            Shape::Board => vec![Primitive::rect(o, self.board[0], self.board[1], 0.0)],
            Shape::Pen => vec![Primitive::rect(o, self.pen[0], self.pen[1], 0.0)],
            Shape::Cross3d => vec![
                Primitive::rect(o, self.cross_bar[0], self.cross_bar[1], 0.0),
                Primitive::rect(o, self.cross_bar[0], self.cross_bar[1], 90.0),
            ],
            Shape::Barbell => {
                let half = self.barbell_bar[0] / 2.0;
                vec![
                    Primitive::Disc { center: Vec2::new(-half, 0.0), radius: self.barbell_disc_radius },
                    Primitive::Disc { center: Vec2::new(half, 0.0), radius: self.barbell_disc_radius },
                    Primitive::rect(o, self.barbell_bar[0], self.barbell_bar[1], 0.0),
                ]
            }
            Shape::Ring => vec![Primitive::Annulus {
                center: o,
                radius: self.ring_radius,
                thickness: self.ring_thickness,
            }],
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ObjectSpec {
    pub shape: Shape,
    pub scale: f64,
    pub primitives: Vec<Primitive>,
    pub mass: f64,
    pub one_hot_index: usize,
    pub bounding_radius: f64,
}

impl ObjectSpec {
    /// `shape@scale`, e.g. `sphere@1.0`.
    pub fn label(&self) -> String {
        format!("{}@{:?}", self.shape, self.scale)
    }

    /// Signed distance (negative inside) and outward unit normal in world frame.
    pub fn signed_distance(&self, pose: &Pose2, p: Vec2) -> (f64, Vec2) {
        let (d, n) = union_sdf(&self.primitives, pose.to_local(p));
        (d, n.rotate_deg(pose.phi))
    }
}

pub fn one_hot_index(shape: Shape, scale: f64) -> Result<usize> {
    Ok(3 * shape.index() + scale_index(scale)?)
}

pub fn make_object(shape: Shape, scale: f64, sizes: &ObjectSizes) -> Result<ObjectSpec> {
    let one_hot_index = one_hot_index(shape, scale)?;
    let primitives: Vec<Primitive> = sizes
        .base_primitives(shape)
        .iter()
        .map(|p| p.scaled(scale))
        .collect();
    let bounding_radius = primitives.iter().map(Primitive::bounding_radius).fold(0.0, f64::max);
    // Overlaps in unions are ignored; the mass only informs reports.
    let area_mm2: f64 = primitives.iter().map(Primitive::area).sum();
    Ok(ObjectSpec {
        shape,
        scale,
        primitives,
        mass: area_mm2 * 1e-6 * sizes.areal_density,
        one_hot_index,
        bounding_radius,
    })
}

pub fn make_object_by_name(shape: &str, scale: f64, sizes: &ObjectSizes) -> Result<ObjectSpec> {
    make_object(shape.parse()?, scale, sizes)
}

pub fn instance_from_index(index: usize, sizes: &ObjectSizes) -> Result<ObjectSpec> {
    if index >= N_INSTANCES {
        return Err(Error::Config(format!("object index {index} out of range")));
    }
    make_object(Shape::ALL[index / 3], SCALES[index % 3], sizes)
}

pub fn all_instances(sizes: &ObjectSizes) -> Vec<ObjectSpec> {
    (0..N_INSTANCES)
        .map(|i| instance_from_index(i, sizes).expect("index in range"))
        .collect()
}

/// Parses `all` or a comma-separated list of `shape@scale` labels.
pub fn parse_instances(spec: &str, sizes: &ObjectSizes) -> Result<Vec<ObjectSpec>> {
    if spec.trim() == "all" {
        return Ok(all_instances(sizes));
    }
    spec.split(',')
        .map(|item| {
            let item = item.trim();
            let (shape, scale) = item
                .split_once('@')
                .ok_or_else(|| Error::Config(format!("instance `{item}` is not shape@scale")))?;
            let scale: f64 = scale
                .parse()
                .map_err(|_| Error::Config(format!("bad scale in instance `{item}`")))?;
            make_object_by_name(shape, scale, sizes)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeSet;

    #[test]
    fn sphere_is_a_scaled_disc() {
        let sizes = ObjectSizes::default();
        let s = make_object(Shape::Sphere, 1.0, &sizes).unwrap();
        assert_eq!(s.primitives, vec![Primitive::Disc { center: Vec2::ZERO, radius: 25.0 }]);
        let big = make_object(Shape::Sphere, 1.25, &sizes).unwrap();
        assert_eq!(big.primitives, vec![Primitive::Disc { center: Vec2::ZERO, radius: 31.25 }]);
    }

    #[test]
    fn eighteen_distinct_instances() {
        let all = all_instances(&ObjectSizes::default());
        let idx: BTreeSet<usize> = all.iter().map(|o| o.one_hot_index).collect();
        assert_eq!(idx.len(), 18);
        assert_eq!(*idx.iter().max().unwrap(), 17);
        for o in &all {
            assert_eq!(o.one_hot_index, 3 * o.shape.index() + scale_index(o.scale).unwrap());
            assert!(o.mass > 0.0);
        }
    }

    #[test]
    fn unknown_shape_and_scale() {
        let sizes = ObjectSizes::default();
        assert!(matches!(make_object_by_name("cube", 1.0, &sizes), Err(Error::UnknownShape(_))));
        assert!(matches!(make_object(Shape::Pen, 2.0, &sizes), Err(Error::UnknownScale(_))));
    }

    #[test]
    fn signed_distance_examples() {
        let disc = ObjectSpec {
            shape: Shape::Sphere,
            scale: 1.0,
            primitives: vec![Primitive::Disc { center: Vec2::ZERO, radius: 20.0 }],
            mass: 0.0,
            one_hot_index: 0,
            bounding_radius: 20.0,
        };
        let (d, n) = disc.signed_distance(&Pose2::default(), Vec2::new(50.0, 0.0));
        assert_eq!(d, 30.0);
        assert_eq!(n, Vec2::new(1.0, 0.0));

        let ring = ObjectSpec {
            primitives: vec![Primitive::Annulus { center: Vec2::ZERO, radius: 30.0, thickness: 8.0 }],
            ..disc.clone()
        };
        let (d, _) = ring.signed_distance(&Pose2::default(), Vec2::new(0.0, 30.0));
        assert_eq!(d, -4.0);

        let board = make_object(Shape::Board, 1.0, &ObjectSizes::default()).unwrap();
        let (d, _) = board.signed_distance(&Pose2::default(), Vec2::new(40.0, 3.0));
        assert!(d.abs() < 1e-12);
        let (d, n) = board.signed_distance(&Pose2::new(0.0, 0.0, 90.0), Vec2::new(0.0, 45.0));
        assert!((d - 5.0).abs() < 1e-12);
        assert!((n - Vec2::new(0.0, 1.0)).norm() < 1e-12);
    }

    #[test]
    fn parse_instance_lists() {
        let sizes = ObjectSizes::default();
        assert_eq!(parse_instances("all", &sizes).unwrap().len(), 18);
        let one = parse_instances("sphere@1.0", &sizes).unwrap();
        assert_eq!(one.len(), 1);
        assert_eq!(one[0].one_hot_index, 16);
        assert_eq!(one[0].label(), "sphere@1.0");
        assert_eq!(parse_instances("sphere@1.0, board@0.75", &sizes).unwrap().len(), 2);
        assert!(parse_instances("sphere", &sizes).is_err());
    }

    proptest::proptest! {
        #[test]
        fn signed_distance_scales_linearly(shape in 0usize..6, s in 0usize..3,
                                           px in -150.0f64..150.0, py in -150.0f64..150.0) {
            let sizes = ObjectSizes::default();
            let shape = instance_from_index(3 * shape + 1, &sizes).unwrap().shape;
            let base = make_object(shape, 1.0, &sizes).unwrap();
            let k = SCALES[s];
            let scaled = make_object(shape, k, &sizes).unwrap();
            let p = Vec2::new(px, py);
            let (d1, _) = base.signed_distance(&Pose2::default(), p);
            let (dk, _) = scaled.signed_distance(&Pose2::default(), p * k);
            proptest::prop_assert!((dk - k * d1).abs() < 1e-9);
        }
    }
}
