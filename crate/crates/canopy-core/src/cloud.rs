//! Point and cloud data model, density and footprint arithmetic.
//!
//! Coordinates are planar, pre-projected to a metric system; x/y/z are meters.
//! Each point carries pulse identity and return numbering because decimation
//! keeps or drops whole pulses. `height_above_ground` stays absent until DEM
//! normalization fills it in.

use alloc::format;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;

/// Axis-aligned planar bounding region.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Extent {
    pub min_x: f64,
    pub min_y: f64,
    pub max_x: f64,
    pub max_y: f64,
}

impl Extent {
    pub fn new(min_x: f64, min_y: f64, max_x: f64, max_y: f64) -> Result<Self> {
        if !(min_x <= max_x && min_y <= max_y) {
            return Err(Error::invalid(format!(
                "extent minimum corner must not exceed maximum corner: \
                 ({min_x}, {min_y})..({max_x}, {max_y})"
            )));
        }
        Ok(Extent {
            min_x,
            min_y,
            max_x,
            max_y,
        })
    }

    /// Smallest extent containing every point; errors on an empty slice.
    pub fn of_points(points: &[LidarPoint]) -> Result<Self> {
        let first = points
            .first()
            .ok_or(Error::EmptyInput("extent of no points"))?;
        let mut e = Extent {
            min_x: first.x,
            min_y: first.y,
            max_x: first.x,
            max_y: first.y,
        };
        for p in points {
            e.min_x = e.min_x.min(p.x);
            e.min_y = e.min_y.min(p.y);
            e.max_x = e.max_x.max(p.x);
            e.max_y = e.max_y.max(p.y);
        }
        Ok(e)
    }

    pub fn width(&self) -> f64 {
        self.max_x - self.min_x
    }

    pub fn height(&self) -> f64 {
        self.max_y - self.min_y
    }

    pub fn contains(&self, x: f64, y: f64) -> bool {
        x >= self.min_x && x <= self.max_x && y >= self.min_y && y <= self.max_y
    }

    /// Union with a point, growing the region as needed.
    pub fn expand(&mut self, x: f64, y: f64) {
        self.min_x = self.min_x.min(x);
        self.min_y = self.min_y.min(y);
        self.max_x = self.max_x.max(x);
        self.max_y = self.max_y.max(y);
    }
}

/// One georeferenced LiDAR return.
///
/// Up to four returns share a pulse; `return_number` orders them along the
/// pulse and every return of a pulse reports the same `returns_of_pulse`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LidarPoint {
    pub x: f64,
    pub y: f64,
    pub z: f64,
    /// Ordinal of this return within its pulse, 1-based.
    pub return_number: u8,
    /// Total returns captured for the pulse, 1..=4.
    pub returns_of_pulse: u8,
    /// Opaque identifier grouping the returns of one emitted pulse.
    pub pulse_id: u64,
    /// Ground classification flag (set upstream; this crate never classifies).
    pub is_ground: bool,
    /// Meters above the DEM surface; absent until normalization.
    pub height_above_ground: Option<f64>,
}

impl LidarPoint {
    pub fn new(
        x: f64,
        y: f64,
        z: f64,
        return_number: u8,
        returns_of_pulse: u8,
        pulse_id: u64,
        is_ground: bool,
    ) -> Result<Self> {
        let point = LidarPoint {
            x,
            y,
            z,
            return_number,
            returns_of_pulse,
            pulse_id,
            is_ground,
            height_above_ground: None,
        };
        point.validate()?;
        Ok(point)
    }

    /// Checks the return-numbering invariants.
    pub fn validate(&self) -> Result<()> {
        if !(1..=4).contains(&self.returns_of_pulse) {
            return Err(Error::MalformedInput(format!(
                "returns_of_pulse must be 1..=4, got {}",
                self.returns_of_pulse
            )));
        }
        if self.return_number == 0 || self.return_number > self.returns_of_pulse {
            return Err(Error::MalformedInput(format!(
                "return_number {} outside 1..={}",
                self.return_number, self.returns_of_pulse
            )));
        }
        Ok(())
    }

    /// Squared planar distance to another location.
    #[inline]
    pub fn planar_dist2(&self, x: f64, y: f64) -> f64 {
        math::hypot2(self.x - x, self.y - y)
    }
}

/// An ordered collection of returns over a region of interest.
///
/// The area is declared rather than inferred: a circular plot covers πr²
/// regardless of where its points happen to fall.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    pub points: Vec<LidarPoint>,
    pub extent: Extent,
    /// Square meters of the region of interest.
    pub area: f64,
}

impl PointCloud {
    pub fn new(points: Vec<LidarPoint>, extent: Extent, area: f64) -> Result<Self> {
        if !(area > 0.0) {
            return Err(Error::invalid(format!(
                "cloud area must be positive, got {area}"
            )));
        }
        if let Some(p) = points.iter().find(|p| !extent.contains(p.x, p.y)) {
            return Err(Error::MalformedInput(format!(
                "point ({}, {}) lies outside the declared extent",
                p.x, p.y
            )));
        }
        Ok(PointCloud {
            points,
            extent,
            area,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

/// A circular survey plot with its border-tree buffer.
///
/// The buffer is the annulus `radius < r <= radius + buffer_width`; crowns
/// whose apex falls there are excluded from commission errors.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PlotGeometry {
    pub center_x: f64,
    pub center_y: f64,
    pub radius: f64,
    pub buffer_width: f64,
}

impl PlotGeometry {
    /// Radius of a 0.04 ha circular plot, √(400/π).
    pub const STANDARD_RADIUS: f64 = 11.283791670955125;
    /// Border-tree buffer width used by the survey protocol.
    pub const STANDARD_BUFFER: f64 = 4.7;

    pub fn new(center_x: f64, center_y: f64, radius: f64, buffer_width: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::invalid(format!(
                "plot radius must be positive, got {radius}"
            )));
        }
        if !(buffer_width >= 0.0) {
            return Err(Error::invalid(format!(
                "buffer width must be non-negative, got {buffer_width}"
            )));
        }
        Ok(PlotGeometry {
            center_x,
            center_y,
            radius,
            buffer_width,
        })
    }

    /// 0.04 ha plot with the standard buffer, centered at (x, y).
    pub fn standard(center_x: f64, center_y: f64) -> Self {
        PlotGeometry {
            center_x,
            center_y,
            radius: Self::STANDARD_RADIUS,
            buffer_width: Self::STANDARD_BUFFER,
        }
    }

    fn dist(&self, x: f64, y: f64) -> f64 {
        math::sqrt(math::hypot2(x - self.center_x, y - self.center_y))
    }

    /// Inside the plot proper (closed disk).
    pub fn contains(&self, x: f64, y: f64) -> bool {
        self.dist(x, y) <= self.radius
    }

    /// Inside the buffer annulus.
    pub fn in_buffer(&self, x: f64, y: f64) -> bool {
        let d = self.dist(x, y);
        d > self.radius && d <= self.radius + self.buffer_width
    }
}

/// Average footprint: the grid cell width at which about one point lands per
/// cell, 1/√density.
pub fn compute_afp(density: f64) -> Result<f64> {
    if !(density > 0.0) {
        return Err(Error::invalid(format!(
            "footprint is defined for positive densities only, got {density}"
        )));
    }
    Ok(1.0 / math::sqrt(density))
}

/// Point density of the whole cloud in points per square meter.
pub fn point_density(cloud: &PointCloud) -> Result<f64> {
    if !(cloud.area > 0.0) {
        return Err(Error::invalid("cloud area must be positive"));
    }
    Ok(cloud.len() as f64 / cloud.area)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    fn pt(x: f64, y: f64, z: f64) -> LidarPoint {
        LidarPoint::new(x, y, z, 1, 1, 0, false).unwrap()
    }

    #[test]
    fn afp_identity_case() {
        assert_eq!(compute_afp(1.0).unwrap(), 1.0);
    }

    #[test]
    fn afp_perfect_square() {
        assert_eq!(compute_afp(4.0).unwrap(), 0.5);
    }

    #[test]
    fn afp_at_fifty() {
        // 1/√50 evaluated independently at high precision.
        let expected = 0.141_421_356_237_309_5;
        assert!((compute_afp(50.0).unwrap() - expected).abs() < 1e-12);
    }

    #[test]
    fn afp_rejects_non_positive() {
        assert!(compute_afp(0.0).is_err());
        assert!(compute_afp(-3.0).is_err());
    }

    #[test]
    fn density_direct_ratio() {
        let points: Vec<_> = (0..100)
            .map(|i| pt(f64::from(i) * 0.01, 0.5, 1.0))
            .collect();
        let cloud = PointCloud::new(points, Extent::new(0.0, 0.0, 2.0, 1.0).unwrap(), 2.0).unwrap();
        assert_eq!(point_density(&cloud).unwrap(), 50.0);
    }

    #[test]
    fn density_of_empty_cloud_is_zero() {
        let cloud =
            PointCloud::new(vec![], Extent::new(0.0, 0.0, 5.0, 2.0).unwrap(), 10.0).unwrap();
        assert_eq!(point_density(&cloud).unwrap(), 0.0);
    }

    #[test]
    fn afp_density_round_trip() {
        for density in [0.37, 1.0, 4.0, 50.5, 170.0] {
            let afp = compute_afp(density).unwrap();
            assert!((afp * math::sqrt(density) - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn cloud_rejects_zero_area() {
        assert!(PointCloud::new(vec![], Extent::new(0.0, 0.0, 1.0, 1.0).unwrap(), 0.0).is_err());
    }

    #[test]
    fn cloud_rejects_points_outside_extent() {
        let points = vec![pt(5.0, 5.0, 1.0)];
        assert!(PointCloud::new(points, Extent::new(0.0, 0.0, 1.0, 1.0).unwrap(), 1.0).is_err());
    }

    #[test]
    fn point_validation_enforces_return_model() {
        assert!(LidarPoint::new(0.0, 0.0, 0.0, 0, 1, 0, false).is_err());
        assert!(LidarPoint::new(0.0, 0.0, 0.0, 3, 2, 0, false).is_err());
        assert!(LidarPoint::new(0.0, 0.0, 0.0, 2, 5, 0, false).is_err());
        assert!(LidarPoint::new(0.0, 0.0, 0.0, 4, 4, 0, false).is_ok());
    }

    #[test]
    fn standard_plot_radius_matches_area_inversion() {
        // √(400/π) recomputed from the closed form.
        let expected = math::sqrt(400.0 / math::PI);
        assert!((PlotGeometry::STANDARD_RADIUS - expected).abs() < 1e-12);
        let plot = PlotGeometry::standard(0.0, 0.0);
        let area = math::PI * plot.radius * plot.radius;
        assert!((area - 400.0).abs() < 1e-9);
    }

    #[test]
    fn buffer_annulus_membership() {
        let plot = PlotGeometry::new(0.0, 0.0, 10.0, 4.7).unwrap();
        assert!(plot.contains(10.0, 0.0));
        assert!(!plot.in_buffer(10.0, 0.0));
        assert!(plot.in_buffer(11.0, 0.0));
        assert!(plot.in_buffer(14.7, 0.0));
        assert!(!plot.in_buffer(14.8, 0.0));
    }
}
