//! Sampling primitives on an annulus centered at the base station.

use std::f64::consts::PI;

use rand::Rng;
use rand_distr::{Distribution, Exp1, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::RngStream;

/// Largest expected point count a single realization may request.
pub const MAX_EXPECTED_POINTS: f64 = u32::MAX as f64;

/// Region between the protection radius and an outer radius, in meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Annulus {
    inner_radius: f64,
    outer_radius: f64,
}

impl Annulus {
    pub fn new(inner_radius: f64, outer_radius: f64) -> Result<Self> {
        if !(inner_radius.is_finite() && outer_radius.is_finite()) {
            return Err(Error::invalid("annulus", "radii must be finite"));
        }
        if inner_radius < 0.0 || inner_radius >= outer_radius {
            return Err(Error::invalid(
                "annulus",
                format!("need 0 <= R0 < R, got R0 = {inner_radius}, R = {outer_radius}"),
            ));
        }
        Ok(Self {
            inner_radius,
            outer_radius,
        })
    }

    pub fn inner_radius(&self) -> f64 {
        self.inner_radius
    }

    pub fn outer_radius(&self) -> f64 {
        self.outer_radius
    }

    pub fn area(&self) -> f64 {
        PI * (self.outer_radius.powi(2) - self.inner_radius.powi(2))
    }

    /// CDF of the radius of a uniformly placed point.
    pub fn radial_cdf(&self, r: f64) -> f64 {
        let (a, b) = (self.inner_radius, self.outer_radius);
        let r = r.clamp(a, b);
        (r * r - a * a) / (b * b - a * a)
    }

    pub fn contains(&self, p: Point) -> bool {
        let r = p.norm();
        r >= self.inner_radius && r <= self.outer_radius
    }

    /// Inverse-CDF radius for a uniform point, `u` in [0, 1).
    fn radius_from_uniform(&self, u: f64) -> f64 {
        let (a2, b2) = (self.inner_radius.powi(2), self.outer_radius.powi(2));
        (a2 + u * (b2 - a2)).sqrt().clamp(self.inner_radius, self.outer_radius)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point {
    pub x: f64,
    pub y: f64,
}

impl Point {
    pub fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn norm(self) -> f64 {
        self.x.hypot(self.y)
    }

    pub fn distance(self, other: Point) -> f64 {
        (self.x - other.x).hypot(self.y - other.y)
    }
}

/// Candidate D2D nodes with their unit-mean exponential channel power gains.
#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct PointPattern {
    positions: Vec<Point>,
    fading: Vec<f64>,
}

impl PointPattern {
    pub fn new(positions: Vec<Point>, fading: Vec<f64>) -> Result<Self> {
        if positions.len() != fading.len() {
            return Err(Error::invalid(
                "pattern",
                format!(
                    "{} positions but {} fading marks",
                    positions.len(),
                    fading.len()
                ),
            ));
        }
        if let Some(f) = fading.iter().find(|f| !(f.is_finite() && **f >= 0.0)) {
            return Err(Error::invalid("pattern", format!("fading mark {f} is not a finite nonnegative value")));
        }
        Ok(Self { positions, fading })
    }

    /// Pattern with unit fading, handy for geometry-only work.
    pub fn from_positions(positions: Vec<Point>) -> Self {
        let fading = vec![1.0; positions.len()];
        Self { positions, fading }
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn positions(&self) -> &[Point] {
        &self.positions
    }

    pub fn fading(&self) -> &[f64] {
        &self.fading
    }

    /// Appends `other`; indices of `self` are preserved.
    pub fn extend(&mut self, other: PointPattern) {
        self.positions.extend(other.positions);
        self.fading.extend(other.fading);
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolarPosition {
    pub r: f64,
    pub theta: f64,
}

impl PolarPosition {
    pub fn to_cartesian(self) -> Point {
        Point::new(self.r * self.theta.cos(), self.r * self.theta.sin())
    }
}

/// Homogeneous PPP of intensity `density` (points per m^2) on `region`,
/// marked with i.i.d. unit-mean exponential fading.
pub fn sample_ppp(region: &Annulus, density: f64, stream: RngStream) -> Result<PointPattern> {
    if !(density >= 0.0) || !density.is_finite() {
        return Err(Error::invalid("density", format!("must be finite and >= 0, got {density}")));
    }
    let mean = density * region.area();
    if !mean.is_finite() || mean > MAX_EXPECTED_POINTS {
        return Err(Error::Capacity {
            expected: mean,
            limit: MAX_EXPECTED_POINTS,
        });
    }
    if mean == 0.0 {
        return Ok(PointPattern::empty());
    }

    let mut rng = stream.generator();
    let count = Poisson::new(mean)
        .map_err(|e| Error::invalid("density", e.to_string()))?
        .sample(&mut rng) as usize;

    let positions = (0..count)
        .map(|_| {
            let r = region.radius_from_uniform(rng.random());
            let theta = 2.0 * std::f64::consts::PI * rng.random::<f64>();
            Point::new(r * theta.cos(), r * theta.sin())
        })
        .collect();
    let fading = draw_fading(count, &mut rng);
    Ok(PointPattern { positions, fading })
}

/// Cellular user position: radius with density `2r / (R^2 - R0^2)` on `[R0, R]`,
/// uniform angle.
pub fn sample_cell_user(region: &Annulus, stream: RngStream) -> PolarPosition {
    let mut rng = stream.generator();
    let r = region.radius_from_uniform(rng.random());
    let theta = 2.0 * PI * rng.random::<f64>();
    PolarPosition { r, theta }
}

/// `count` i.i.d. exponential power gains with mean 1 (Rayleigh amplitude).
pub fn sample_fading(count: usize, stream: RngStream) -> Vec<f64> {
    let mut rng = stream.generator();
    draw_fading(count, &mut rng)
}

fn draw_fading<R: Rng + ?Sized>(count: usize, rng: &mut R) -> Vec<f64> {
    (0..count).map(|_| Exp1.sample(rng)).collect()
}
