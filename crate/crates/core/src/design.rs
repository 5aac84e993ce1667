//! The hand genome and the operators the search applies to it.
//!
//! A design is 14 scalars in a fixed order (see [`FIELD_NAMES`]): palm size,
//! the planar base positions and orientations of the index (ff), middle (mf)
//! and ring (rf) fingers, and the three link lengths every finger shares.
//! Lengths are millimetres, angles degrees.
//!
//! Distances and interpolation steps are measured in *normalized* space where
//! every dimension is rescaled to `[0, 1]` by its bounds, so that millimetres
//! and degrees are comparable.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

pub const DESIGN_DIM: usize = 14;

/// Flat-vector order, also the CSV column order.
pub const FIELD_NAMES: [&str; DESIGN_DIM] = [
    "palm_width",
    "palm_height",
    "ff_x",
    "ff_y",
    "mf_x",
    "mf_y",
    "rf_x",
    "rf_y",
    "ff_orient",
    "mf_orient",
    "rf_orient",
    "proximal_len",
    "middle_len",
    "distal_len",
];

pub const DESIGN_FORMAT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(into = "DesignRecord", try_from = "DesignRecord")]
pub struct DesignParams([f64; DESIGN_DIM]);

impl DesignParams {
    pub const fn from_array(values: [f64; DESIGN_DIM]) -> Self {
        Self(values)
    }

    pub fn from_slice(values: &[f64]) -> Option<Self> {
        <[f64; DESIGN_DIM]>::try_from(values).ok().map(Self)
    }

    pub fn as_array(&self) -> &[f64; DESIGN_DIM] {
        &self.0
    }

    pub fn to_array(self) -> [f64; DESIGN_DIM] {
        self.0
    }

    pub fn palm_width(&self) -> f64 {
        self.0[0]
    }
    pub fn palm_height(&self) -> f64 {
        self.0[1]
    }
    pub fn ff_pos(&self) -> (f64, f64) {
        (self.0[2], self.0[3])
    }
    pub fn mf_pos(&self) -> (f64, f64) {
        (self.0[4], self.0[5])
    }
    pub fn rf_pos(&self) -> (f64, f64) {
        (self.0[6], self.0[7])
    }
    pub fn ff_orient(&self) -> f64 {
        self.0[8]
    }
    pub fn mf_orient(&self) -> f64 {
        self.0[9]
    }
    pub fn rf_orient(&self) -> f64 {
        self.0[10]
    }
    pub fn proximal_len(&self) -> f64 {
        self.0[11]
    }
    pub fn middle_len(&self) -> f64 {
        self.0[12]
    }
    pub fn distal_len(&self) -> f64 {
        self.0[13]
    }

    /// Hand-iterated baseline `v3`.
    pub const fn v3() -> Self {
        Self([
            84.0, 84.0, 28.0, 84.0, 0.0, 84.0, -28.0, 84.0, 0.0, 0.0, 0.0, 45.0, 20.0, 35.0,
        ])
    }

    /// Hand-iterated baseline `v5`; differs from `v3` only in thumb placement,
    /// which is not part of the genome.
    pub const fn v5() -> Self {
        Self([
            84.0, 84.0, 28.0, 84.0, 0.0, 84.0, -28.0, 84.0, 0.0, 0.0, 0.0, 45.0, 20.0, 35.0,
        ])
    }

    /// Optimized design `v6`.
    pub const fn v6() -> Self {
        Self([
            92.0, 74.0, 28.0, 84.0, 0.0, 84.0, -36.0, 84.0, 0.0, 0.0, 0.0, 45.0, 18.0, 35.0,
        ])
    }

    /// Optimized design `v7`, best ranked.
    pub const fn v7() -> Self {
        Self([
            92.0, 74.0, 29.0, 83.0, 0.0, 84.0, -36.0, 83.0, 2.9, 0.0, -2.9, 45.0, 18.0, 35.0,
        ])
    }

    pub fn preset(name: &str) -> Option<Self> {
        match name {
            "v3" => Some(Self::v3()),
            "v5" => Some(Self::v5()),
            "v6" => Some(Self::v6()),
            "v7" => Some(Self::v7()),
            _ => None,
        }
    }

    pub fn csv_header() -> String {
        FIELD_NAMES.join(",")
    }

    pub fn to_csv_row(&self) -> String {
        self.0.iter().map(f64::to_string).collect::<Vec<_>>().join(",")
    }

    pub fn from_csv_row(row: &str) -> Result<Self> {
        let values = row
            .trim_end_matches(['\r', '\n'])
            .split(',')
            .map(|s| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::Config(format!("bad design value `{s}`: {e}")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::from_slice(&values).ok_or_else(|| {
            Error::Config(format!("design row has {} columns, expected {DESIGN_DIM}", values.len()))
        })
    }
}

impl std::ops::Index<usize> for DesignParams {
    type Output = f64;
    fn index(&self, i: usize) -> &f64 {
        &self.0[i]
    }
}

/// JSON shape of a design: the named fields plus a format version.
#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct DesignRecord {
    #[serde(default = "format_version")]
    version: u32,
    palm_width: f64,
    palm_height: f64,
    ff_x: f64,
    ff_y: f64,
    mf_x: f64,
    mf_y: f64,
    rf_x: f64,
    rf_y: f64,
    ff_orient: f64,
    mf_orient: f64,
    rf_orient: f64,
    proximal_len: f64,
    middle_len: f64,
    distal_len: f64,
}

fn format_version() -> u32 {
    DESIGN_FORMAT_VERSION
}

impl From<DesignParams> for DesignRecord {
    fn from(d: DesignParams) -> Self {
        let v = d.0;
        Self {
            version: DESIGN_FORMAT_VERSION,
            palm_width: v[0],
            palm_height: v[1],
            ff_x: v[2],
            ff_y: v[3],
            mf_x: v[4],
            mf_y: v[5],
            rf_x: v[6],
            rf_y: v[7],
            ff_orient: v[8],
            mf_orient: v[9],
            rf_orient: v[10],
            proximal_len: v[11],
            middle_len: v[12],
            distal_len: v[13],
        }
    }
}

impl TryFrom<DesignRecord> for DesignParams {
    type Error = String;
    fn try_from(r: DesignRecord) -> std::result::Result<Self, String> {
        if r.version != DESIGN_FORMAT_VERSION {
            return Err(format!("unsupported design version {}", r.version));
        }
        Ok(Self([
            r.palm_width,
            r.palm_height,
            r.ff_x,
            r.ff_y,
            r.mf_x,
            r.mf_y,
            r.rf_x,
            r.rf_y,
            r.ff_orient,
            r.mf_orient,
            r.rf_orient,
            r.proximal_len,
            r.middle_len,
            r.distal_len,
        ]))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DesignBounds {
    pub lower: [f64; DESIGN_DIM],
    pub upper: [f64; DESIGN_DIM],
    pub mutation_range: [f64; DESIGN_DIM],
}

impl DesignBounds {
    pub const DEFAULT_MUTATION_FRACTION: f64 = 0.05;

    pub const TABLE_LOWER: [f64; DESIGN_DIM] = [
        69.0, 69.0, 8.0, 64.0, -20.0, 64.0, -56.0, 64.0, 0.0, -35.0, -45.0, 35.0, 8.0, 25.0,
    ];
    pub const TABLE_UPPER: [f64; DESIGN_DIM] = [
        99.0, 99.0, 48.0, 84.0, 20.0, 84.0, -16.0, 84.0, 45.0, 35.0, 0.0, 55.0, 28.0, 45.0,
    ];

    pub fn new(
        lower: [f64; DESIGN_DIM],
        upper: [f64; DESIGN_DIM],
        mutation_range: [f64; DESIGN_DIM],
    ) -> Result<Self> {
        let b = Self { lower, upper, mutation_range };
        b.validate()?;
        Ok(b)
    }

    /// Bounds with the mutation range set to `fraction` of each dimension's span.
    pub fn with_mutation_fraction(
        lower: [f64; DESIGN_DIM],
        upper: [f64; DESIGN_DIM],
        fraction: f64,
    ) -> Result<Self> {
        let mut m = [0.0; DESIGN_DIM];
        for i in 0..DESIGN_DIM {
            m[i] = fraction * (upper[i] - lower[i]);
        }
        Self::new(lower, upper, m)
    }

    pub fn table_i() -> Self {
        Self::with_mutation_fraction(
            Self::TABLE_LOWER,
            Self::TABLE_UPPER,
            Self::DEFAULT_MUTATION_FRACTION,
        )
        .expect("table bounds are valid")
    }

    pub fn validate(&self) -> Result<()> {
        for i in 0..DESIGN_DIM {
            let (lo, hi, m) = (self.lower[i], self.upper[i], self.mutation_range[i]);
            if !(lo.is_finite() && hi.is_finite() && lo < hi) {
                return Err(Error::InvalidBounds(format!(
                    "{}: lower {lo} must be < upper {hi}",
                    FIELD_NAMES[i]
                )));
            }
            if !(m.is_finite() && m >= 0.0) {
                return Err(Error::InvalidBounds(format!(
                    "{}: mutation range {m} must be >= 0",
                    FIELD_NAMES[i]
                )));
            }
        }
        Ok(())
    }

    pub fn span(&self, i: usize) -> f64 {
        self.upper[i] - self.lower[i]
    }

    pub fn check(&self, theta: &DesignParams) -> Result<()> {
        for i in 0..DESIGN_DIM {
            let v = theta.0[i];
            if !(v >= self.lower[i] && v <= self.upper[i]) {
                return Err(Error::OutOfBoundsDesign {
                    name: FIELD_NAMES[i],
                    value: v,
                    lower: self.lower[i],
                    upper: self.upper[i],
                });
            }
        }
        Ok(())
    }

    pub fn contains(&self, theta: &DesignParams) -> bool {
        self.check(theta).is_ok()
    }

    pub fn normalize(&self, theta: &DesignParams) -> [f64; DESIGN_DIM] {
        std::array::from_fn(|i| (theta.0[i] - self.lower[i]) / self.span(i))
    }

    pub fn denormalize(&self, u: &[f64; DESIGN_DIM]) -> DesignParams {
        DesignParams(std::array::from_fn(|i| self.lower[i] + u[i] * self.span(i)))
    }

    pub fn lower_design(&self) -> DesignParams {
        DesignParams(self.lower)
    }

    pub fn upper_design(&self) -> DesignParams {
        DesignParams(self.upper)
    }

    /// Uniform sample from the box.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> DesignParams {
        DesignParams(std::array::from_fn(|i| {
            self.lower[i] + rng.random::<f64>() * self.span(i)
        }))
    }
}

impl Default for DesignBounds {
    fn default() -> Self {
        Self::table_i()
    }
}

/// Element-wise random crossover: each gene comes from `a` or `b` with
/// probability one half.
pub fn crossover<R: Rng + ?Sized>(a: &DesignParams, b: &DesignParams, rng: &mut R) -> DesignParams {
    DesignParams(std::array::from_fn(|i| {
        if rng.random_bool(0.5) {
            a.0[i]
        } else {
            b.0[i]
        }
    }))
}

/// Adds noise drawn uniformly from `[-mutation_range, mutation_range]`.
/// The result is not clamped; see [`clamp`].
pub fn mutate<R: Rng + ?Sized>(
    theta: &DesignParams,
    bounds: &DesignBounds,
    rng: &mut R,
) -> DesignParams {
    DesignParams(std::array::from_fn(|i| {
        let m = bounds.mutation_range[i];
        if m > 0.0 {
            theta.0[i] + rng.random_range(-m..=m)
        } else {
            theta.0[i]
        }
    }))
}

pub fn clamp(theta: &DesignParams, bounds: &DesignBounds) -> DesignParams {
    DesignParams(std::array::from_fn(|i| {
        theta.0[i].min(bounds.upper[i]).max(bounds.lower[i])
    }))
}

pub fn normalized_distance(a: &DesignParams, b: &DesignParams, bounds: &DesignBounds) -> f64 {
    (0..DESIGN_DIM)
        .map(|i| {
            let d = (a.0[i] - b.0[i]) / bounds.span(i);
            d * d
        })
        .sum::<f64>()
        .sqrt()
}

/// Moves `min(step, remaining)` along the straight line (in normalized space)
/// from `current` towards `target`. A step that would reach or pass the
/// target returns the target exactly.
pub fn interp_step(
    current: &DesignParams,
    target: &DesignParams,
    step: f64,
    bounds: &DesignBounds,
) -> Result<DesignParams> {
    let remaining = normalized_distance(current, target, bounds);
    if remaining == 0.0 {
        return Err(Error::ZeroDistance);
    }
    if step >= remaining {
        return Ok(*target);
    }
    let uc = bounds.normalize(current);
    let ut = bounds.normalize(target);
    let frac = step / remaining;
    let u: [f64; DESIGN_DIM] = std::array::from_fn(|i| uc[i] + frac * (ut[i] - uc[i]));
    // Round-off can leave a component one ulp outside the box.
    Ok(clamp(&bounds.denormalize(&u), bounds))
}

/// The stepping stones from `source` to `target`: repeated [`interp_step`]
/// until within `eps` of the target. The source itself is not included; the
/// last stone is the target unless `eps` stopped the walk first.
pub fn interpolation_path(
    source: &DesignParams,
    target: &DesignParams,
    step: f64,
    eps: f64,
    bounds: &DesignBounds,
) -> Result<Vec<DesignParams>> {
    if !(step > 0.0) {
        return Err(Error::Config(format!("interpolation step must be > 0, got {step}")));
    }
    let mut stones = Vec::new();
    let mut current = *source;
    while normalized_distance(&current, target, bounds) > eps {
        current = interp_step(&current, target, step, bounds)?;
        stones.push(current);
    }
    Ok(stones)
}
