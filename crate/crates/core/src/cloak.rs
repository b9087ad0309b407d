//! Two-dimensional cylindrical cloak.
//!
//! The shell is the annulus a ≤ r ≤ R around `center`; the disk r < a is
//! hidden. Incident rays travel along +x at lateral offset y₁ between the
//! detector planes x = ∓L. Inside the shell, rays follow the image of their
//! straight chord under the linear radial map r′ = a + r(R − a)/R.
//! Lengths are in units of 1/k and the speed is v = ω/k.

use nalgebra::{Point2, Vector2};

use crate::error::{Error, Result};

/// Extra polyline points outside the shell: one on each detector plane.
pub const OUTSIDE_SAMPLES: usize = 2;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CloakGeometry {
    inner_radius: f64,
    outer_radius: f64,
    half_span: f64,
    speed: f64,
    center: Point2<f64>,
}

impl CloakGeometry {
    /// Requires 0 < a < R ≤ L and v > 0.
    pub fn new(inner_radius: f64, outer_radius: f64, half_span: f64, speed: f64) -> Result<Self> {
        let finite = [inner_radius, outer_radius, half_span, speed].iter().all(|x| x.is_finite());
        if !finite || inner_radius <= 0.0 || inner_radius >= outer_radius || outer_radius > half_span {
            return Err(Error::InvalidParameter {
                name: "geometry",
                reason: format!("need 0 < a < R <= L, got a = {inner_radius}, R = {outer_radius}, L = {half_span}"),
            });
        }
        if speed <= 0.0 {
            return Err(Error::InvalidParameter { name: "speed", reason: format!("must be positive, got {speed}") });
        }
        Ok(Self { inner_radius, outer_radius, half_span, speed, center: Point2::origin() })
    }

    /// Inner radius defaults to R/2.
    pub fn with_default_inner(outer_radius: f64, half_span: f64, speed: f64) -> Result<Self> {
        Self::new(0.5 * outer_radius, outer_radius, half_span, speed)
    }

    /// Speed derived from the wave number and angular frequency, v = ω/k.
    pub fn from_wave(inner_radius: f64, outer_radius: f64, half_span: f64, k: f64, omega: f64) -> Result<Self> {
        if !(k > 0.0 && k.is_finite()) {
            return Err(Error::InvalidParameter { name: "k", reason: format!("must be positive, got {k}") });
        }
        Self::new(inner_radius, outer_radius, half_span, omega / k)
    }

    pub fn with_center(mut self, center: Point2<f64>) -> Self {
        self.center = center;
        self
    }

    pub fn inner_radius(&self) -> f64 {
        self.inner_radius
    }

    pub fn outer_radius(&self) -> f64 {
        self.outer_radius
    }

    pub fn half_span(&self) -> f64 {
        self.half_span
    }

    pub fn speed(&self) -> f64 {
        self.speed
    }

    pub fn center(&self) -> Point2<f64> {
        self.center
    }

    /// Lateral offset of the ray from the cloak axis, after the aperture check.
    fn offset(&self, y1: f64) -> Result<f64> {
        let d = y1 - self.center.y;
        if !(d.abs() <= self.half_span) {
            return Err(Error::OutOfAperture { y1, half_span: self.half_span });
        }
        Ok(d)
    }

    /// Half-length of the straight chord through the outer disk, 0 on a miss.
    fn half_chord(&self, d: f64) -> f64 {
        if d.abs() < self.outer_radius {
            (self.outer_radius * self.outer_radius - d * d).sqrt()
        } else {
            0.0
        }
    }

    /// g(r) = a + r(R − a)/R.
    fn map_radius(&self, r: f64) -> f64 {
        self.inner_radius + r * (self.outer_radius - self.inner_radius) / self.outer_radius
    }

    fn unmap_radius(&self, r_image: f64) -> f64 {
        (r_image - self.inner_radius) * self.outer_radius / (self.outer_radius - self.inner_radius)
    }
}

/// Time spent inside the shell, 2√(R² − y₁²)/v, or 0 if the ray misses.
///
/// Fixed by requiring that a shell traversal accumulate the same phase as
/// free flight between the detector planes.
pub fn dwell_time(geom: &CloakGeometry, y1: f64) -> Result<f64> {
    let d = geom.offset(y1)?;
    Ok(2.0 * geom.half_chord(d) / geom.speed)
}

/// Time outside the shell plus dwell time; always 2L/v.
pub fn total_traversal_time(geom: &CloakGeometry, y1: f64) -> Result<f64> {
    let d = geom.offset(y1)?;
    let chord = 2.0 * geom.half_chord(d);
    let outside = (2.0 * geom.half_span - chord) / geom.speed;
    Ok(outside + chord / geom.speed)
}

/// Pushes a point of the disk r ≤ R into the shell at fixed polar angle.
/// The center maps to (a, 0) relative to the center.
pub fn radial_map(geom: &CloakGeometry, p: Point2<f64>) -> Result<Point2<f64>> {
    let rel = p - geom.center;
    let r = rel.norm();
    if r > geom.outer_radius {
        return Err(Error::OutsideDisk { radius: r, outer: geom.outer_radius });
    }
    if r == 0.0 {
        return Ok(geom.center + Vector2::new(geom.inner_radius, 0.0));
    }
    Ok(geom.center + rel * (geom.map_radius(r) / r))
}

/// Inverse of [`radial_map`] on the shell a ≤ r′ ≤ R.
pub fn radial_map_inverse(geom: &CloakGeometry, p: Point2<f64>) -> Result<Point2<f64>> {
    let rel = p - geom.center;
    let r = rel.norm();
    if r > geom.outer_radius {
        return Err(Error::OutsideDisk { radius: r, outer: geom.outer_radius });
    }
    if r < geom.inner_radius {
        return Err(Error::HiddenRegion { radius: r, inner: geom.inner_radius });
    }
    Ok(geom.center + rel * (geom.unmap_radius(r) / r))
}

/// Polyline of one ray in the lab frame.
#[derive(Clone, Debug, PartialEq)]
pub struct Trajectory {
    pub impact_parameter: f64,
    pub points: Vec<Point2<f64>>,
    pub dwell_time: f64,
}

/// Samples the ray at offset `y1`.
///
/// The polyline is the start point on x = −L, `samples_inside` points
/// spanning the shell crossing, and the end point on x = +L. A ray that
/// misses the shell is sampled straight over |x| ≤ R instead. The y₁ = 0
/// ray is rejected: its image splits around the hidden disk.
pub fn trajectory(geom: &CloakGeometry, y1: f64, samples_inside: usize) -> Result<Trajectory> {
    let d = geom.offset(y1)?;
    if d == 0.0 {
        return Err(Error::Separatrix);
    }
    if samples_inside < 2 {
        return Err(Error::InvalidParameter {
            name: "samples_inside",
            reason: format!("need at least 2, got {samples_inside}"),
        });
    }
    let c = geom.center;
    let hits = d.abs() < geom.outer_radius;
    let half = if hits { geom.half_chord(d) } else { geom.outer_radius };

    let mut points = Vec::with_capacity(samples_inside + OUTSIDE_SAMPLES);
    points.push(Point2::new(c.x - geom.half_span, y1));
    let last = (samples_inside - 1) as f64;
    for k in 0..samples_inside {
        // Symmetric parameterization so the midpoint lands exactly on x = 0.
        let s = (2 * k) as f64 / last - 1.0;
        let virtual_point = Point2::new(c.x + s * half, y1);
        let p = if hits { radial_map(geom, clamp_to_disk(geom, virtual_point))? } else { virtual_point };
        points.push(p);
    }
    points.push(Point2::new(c.x + geom.half_span, y1));

    Ok(Trajectory { impact_parameter: y1, points, dwell_time: 2.0 * geom.half_chord(d) / geom.speed })
}

/// Chord endpoints can land a rounding error outside r = R.
fn clamp_to_disk(geom: &CloakGeometry, p: Point2<f64>) -> Point2<f64> {
    let rel = p - geom.center;
    let r = rel.norm();
    if r > geom.outer_radius {
        geom.center + rel * (geom.outer_radius / r)
    } else {
        p
    }
}

/// Unit direction of the probability current at `p`.
///
/// Outside the shell the flow is +x̂. Inside, it is the pushforward of x̂
/// under the Jacobian of the radial map at the preimage of `p`:
/// DF·x̂ = (g/r) x̂ + (g′ − g/r)(q̂·x̂) q̂ with g(r) = a + r(R − a)/R.
pub fn current_direction(geom: &CloakGeometry, p: Point2<f64>) -> Result<Vector2<f64>> {
    let rel = p - geom.center;
    let r_image = rel.norm();
    if r_image < geom.inner_radius {
        return Err(Error::HiddenRegion { radius: r_image, inner: geom.inner_radius });
    }
    let x_hat = Vector2::new(1.0, 0.0);
    if r_image > geom.outer_radius {
        return Ok(x_hat);
    }
    let q_hat = rel / r_image;
    let r = geom.unmap_radius(r_image);
    let slope = (geom.outer_radius - geom.inner_radius) / geom.outer_radius;
    let tangent_part = x_hat - q_hat * q_hat.x;
    let dir = if r > 0.0 {
        let g_over_r = geom.map_radius(r) / r;
        x_hat * g_over_r + q_hat * ((slope - g_over_r) * q_hat.x)
    } else {
        // r → 0: the g/r term dominates, leaving the tangential component.
        tangent_part
    };
    let norm = dir.norm();
    if norm == 0.0 {
        return Err(Error::Separatrix);
    }
    Ok(dir / norm)
}
