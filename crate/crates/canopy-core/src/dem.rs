//! Ground elevation raster and height normalization.
//!
//! Ground returns arrive pre-classified; each raster cell takes the mean z of
//! its ground points, empty cells are filled from the nearest non-void cell,
//! and point heights are measured against a bilinear interpolation of the
//! filled raster.

use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::cloud::{Extent, LidarPoint, PointCloud};
use crate::error::{Error, Result};
use crate::math;

/// Bare-ground elevation raster.
///
/// `void_mask` keeps the pre-fill state for diagnostics; after construction no
/// cell is void.
#[derive(Debug, Clone)]
pub struct Dem {
    resolution: f64,
    origin_x: f64,
    origin_y: f64,
    n_cols: usize,
    n_rows: usize,
    elevations: Vec<f64>,
    void_mask: Vec<bool>,
}

/// Default raster resolution in meters per cell.
pub const DEFAULT_RESOLUTION: f64 = 1.0;

impl Dem {
    /// Rasterizes classified ground returns at `resolution` meters per cell.
    ///
    /// The raster covers `extent` when given, otherwise the bounding box of
    /// the ground points. Cells holding at least one ground point take the
    /// mean z of their points; void cells are filled with the elevation of the
    /// nearest non-void cell center, ties broken by the smaller row-major cell
    /// index.
    pub fn build(
        ground_points: &[LidarPoint],
        resolution: f64,
        extent: Option<Extent>,
    ) -> Result<Self> {
        if ground_points.is_empty() {
            return Err(Error::EmptyInput("DEM construction needs ground points"));
        }
        if !(resolution > 0.0) {
            return Err(Error::invalid(format!(
                "DEM resolution must be positive, got {resolution}"
            )));
        }
        let extent = match extent {
            Some(e) => e,
            None => Extent::of_points(ground_points)?,
        };
        let n_cols = (math::floor(extent.width() / resolution) as usize) + 1;
        let n_rows = (math::floor(extent.height() / resolution) as usize) + 1;
        let n_cells = n_cols * n_rows;

        let mut sums = vec![0.0f64; n_cells];
        let mut counts = vec![0u32; n_cells];
        for p in ground_points {
            let col =
                (math::floor((p.x - extent.min_x) / resolution).max(0.0) as usize).min(n_cols - 1);
            let row =
                (math::floor((p.y - extent.min_y) / resolution).max(0.0) as usize).min(n_rows - 1);
            let cell = row * n_cols + col;
            sums[cell] += p.z;
            counts[cell] += 1;
        }

        let mut elevations = vec![f64::NAN; n_cells];
        let mut void_mask = vec![true; n_cells];
        for cell in 0..n_cells {
            if counts[cell] > 0 {
                elevations[cell] = sums[cell] / f64::from(counts[cell]);
                void_mask[cell] = false;
            }
        }

        let mut dem = Dem {
            resolution,
            origin_x: extent.min_x,
            origin_y: extent.min_y,
            n_cols,
            n_rows,
            elevations,
            void_mask,
        };
        dem.fill_voids();
        Ok(dem)
    }

    /// Fills each void cell from the nearest non-void cell center.
    fn fill_voids(&mut self) {
        let filled_src = self.elevations.clone();
        let voids: Vec<usize> = (0..self.void_mask.len())
            .filter(|&c| self.void_mask[c])
            .collect();
        if voids.is_empty() || voids.len() == self.void_mask.len() {
            // Nothing to fill, or nothing to fill from (the latter cannot
            // happen: build() always places at least one ground point).
            return;
        }
        for cell in voids {
            let row = cell / self.n_cols;
            let col = cell % self.n_cols;
            self.elevations[cell] = self.nearest_non_void(col, row, &filled_src);
        }
    }

    /// Expanding ring search. A hit in Chebyshev ring r can still be beaten by
    /// a Euclidean-closer cell out to ring ceil(best); rings keep growing
    /// until past that bound. Ties prefer the smaller row-major index, which
    /// the scan order guarantees via strict improvement.
    fn nearest_non_void(&self, col: usize, row: usize, src: &[f64]) -> f64 {
        let max_ring = self.n_cols.max(self.n_rows);
        let mut best_d2 = f64::INFINITY;
        let mut best_cell = usize::MAX;
        let mut ring = 1usize;
        while ring <= max_ring {
            for r in row.saturating_sub(ring)..=(row + ring).min(self.n_rows - 1) {
                for c in col.saturating_sub(ring)..=(col + ring).min(self.n_cols - 1) {
                    let on_ring = r.abs_diff(row) == ring || c.abs_diff(col) == ring;
                    if !on_ring {
                        continue;
                    }
                    let cell = r * self.n_cols + c;
                    if src[cell].is_nan() {
                        continue;
                    }
                    let dr = r as f64 - row as f64;
                    let dc = c as f64 - col as f64;
                    let d2 = dr * dr + dc * dc;
                    let better = d2 < best_d2 || (d2 == best_d2 && cell < best_cell);
                    if better {
                        best_d2 = d2;
                        best_cell = cell;
                    }
                }
            }
            if best_cell != usize::MAX && (ring * ring) as f64 >= best_d2 {
                break;
            }
            ring += 1;
        }
        src[best_cell]
    }

    pub fn resolution(&self) -> f64 {
        self.resolution
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn origin(&self) -> (f64, f64) {
        (self.origin_x, self.origin_y)
    }

    /// Elevation stored for a cell.
    pub fn cell_elevation(&self, col: usize, row: usize) -> f64 {
        self.elevations[row * self.n_cols + col]
    }

    /// Whether the cell was void before filling.
    pub fn was_void(&self, col: usize, row: usize) -> bool {
        self.void_mask[row * self.n_cols + col]
    }

    /// Row-major elevations, row 0 first.
    pub fn elevations(&self) -> &[f64] {
        &self.elevations
    }

    /// True if (x, y) falls inside the raster rectangle.
    pub fn covers(&self, x: f64, y: f64) -> bool {
        x >= self.origin_x
            && y >= self.origin_y
            && x <= self.origin_x + self.n_cols as f64 * self.resolution
            && y <= self.origin_y + self.n_rows as f64 * self.resolution
    }

    /// Bilinear interpolation over the cell-center lattice, clamped at the
    /// raster border. Errors when the point is outside the raster rectangle.
    pub fn elevation_at(&self, x: f64, y: f64) -> Result<f64> {
        if !self.covers(x, y) {
            return Err(Error::OutOfCoverage { x, y });
        }
        // Continuous cell coordinates with the origin at the first center.
        let gx = (x - self.origin_x) / self.resolution - 0.5;
        let gy = (y - self.origin_y) / self.resolution - 0.5;
        let max_col = (self.n_cols - 1) as f64;
        let max_row = (self.n_rows - 1) as f64;
        let gx = gx.clamp(0.0, max_col);
        let gy = gy.clamp(0.0, max_row);
        let c0 = (math::floor(gx) as usize).min(self.n_cols.saturating_sub(2));
        let r0 = (math::floor(gy) as usize).min(self.n_rows.saturating_sub(2));
        let c1 = (c0 + 1).min(self.n_cols - 1);
        let r1 = (r0 + 1).min(self.n_rows - 1);
        let fx = (gx - c0 as f64).clamp(0.0, 1.0);
        let fy = (gy - r0 as f64).clamp(0.0, 1.0);

        let z00 = self.cell_elevation(c0, r0);
        let z10 = self.cell_elevation(c1, r0);
        let z01 = self.cell_elevation(c0, r1);
        let z11 = self.cell_elevation(c1, r1);
        let top = z00 + (z10 - z00) * fx;
        let bottom = z01 + (z11 - z01) * fx;
        Ok(top + (bottom - top) * fy)
    }
}

/// Height-normalized cloud plus normalization diagnostics.
#[derive(Debug, Clone)]
pub struct Normalized {
    pub cloud: PointCloud,
    /// Points whose raw height fell below the DEM and were clamped to 0.
    pub clamped_below_ground: usize,
}

/// Fills `height_above_ground = z − dem(x, y)` for every point.
///
/// Ground points are normalized too but keep their flag so downstream stages
/// exclude them. Negative heights (classification noise) clamp to 0 and are
/// counted in the result.
pub fn normalize_heights(cloud: &PointCloud, dem: &Dem) -> Result<Normalized> {
    let mut points = cloud.points.clone();
    let mut clamped = 0usize;
    for p in &mut points {
        let ground = dem.elevation_at(p.x, p.y)?;
        let mut height = p.z - ground;
        if height < 0.0 {
            height = 0.0;
            clamped += 1;
        }
        p.height_above_ground = Some(height);
    }
    Ok(Normalized {
        cloud: PointCloud {
            points,
            extent: cloud.extent,
            area: cloud.area,
        },
        clamped_below_ground: clamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ground(x: f64, y: f64, z: f64) -> LidarPoint {
        LidarPoint::new(x, y, z, 1, 1, 0, true).unwrap()
    }

    fn veg(x: f64, y: f64, z: f64) -> LidarPoint {
        LidarPoint::new(x, y, z, 1, 1, 0, false).unwrap()
    }

    #[test]
    fn constant_field_fills_every_cell() {
        let pts: Vec<_> = (0..25)
            .map(|i| ground(f64::from(i % 5) + 0.5, f64::from(i / 5) + 0.5, 100.0))
            .collect();
        let dem = Dem::build(&pts, 1.0, None).unwrap();
        for row in 0..dem.n_rows() {
            for col in 0..dem.n_cols() {
                assert_eq!(dem.cell_elevation(col, row), 100.0);
            }
        }
    }

    #[test]
    fn single_point_cell_takes_its_elevation() {
        let pts = [ground(0.5, 0.5, 12.25), ground(1.5, 0.5, 13.75)];
        let dem = Dem::build(&pts, 1.0, None).unwrap();
        assert_eq!(dem.cell_elevation(0, 0), 12.25);
        assert_eq!(dem.cell_elevation(1, 0), 13.75);
    }

    #[test]
    fn cell_mean_of_multiple_points() {
        let pts = [ground(0.2, 0.2, 10.0), ground(0.8, 0.8, 14.0)];
        let dem = Dem::build(&pts, 1.0, None).unwrap();
        assert_eq!(dem.cell_elevation(0, 0), 12.0);
    }

    #[test]
    fn rejects_empty_input() {
        assert!(matches!(
            Dem::build(&[], 1.0, None),
            Err(Error::EmptyInput(_))
        ));
    }

    #[test]
    fn void_fill_takes_nearest_with_row_major_ties() {
        // 3x3 raster, center cell void. Neighbors at distance 1 in all four
        // directions; the tie must resolve to the smallest row-major index,
        // which is the north neighbor (row 0, col 1) holding 10.0.
        let mut pts = Vec::new();
        let values = [
            (0, 0, 10.0),
            (1, 0, 10.0),
            (2, 0, 10.0),
            (0, 1, 12.0),
            (2, 1, 12.0),
            (0, 2, 12.0),
            (1, 2, 12.0),
            (2, 2, 12.0),
        ];
        for (c, r, z) in values {
            pts.push(ground(c as f64 + 0.5, r as f64 + 0.5, z));
        }
        let extent = Extent::new(0.0, 0.0, 2.9, 2.9).unwrap();
        let dem = Dem::build(&pts, 1.0, Some(extent)).unwrap();
        assert!(dem.was_void(1, 1));

        // Oracle: exhaustive scan over all non-void cells.
        let mut best = (f64::INFINITY, usize::MAX, f64::NAN);
        for (c, r, z) in values {
            let d2 = ((c as f64) - 1.0).powi(2) + ((r as f64) - 1.0).powi(2);
            let idx = r * 3 + c;
            if d2 < best.0 || (d2 == best.0 && idx < best.1) {
                best = (d2, idx, z);
            }
        }
        assert_eq!(dem.cell_elevation(1, 1), best.2);
        assert_eq!(dem.cell_elevation(1, 1), 10.0);
    }

    #[test]
    fn flat_dem_subtraction() {
        let pts: Vec<_> = (0..16)
            .map(|i| ground(f64::from(i % 4) + 0.5, f64::from(i / 4) + 0.5, 100.0))
            .collect();
        let dem = Dem::build(&pts, 1.0, None).unwrap();
        let cloud = PointCloud::new(
            alloc::vec![veg(2.0, 2.0, 108.3)],
            Extent::new(0.0, 0.0, 3.9, 3.9).unwrap(),
            16.0,
        )
        .unwrap();
        let normalized = normalize_heights(&cloud, &dem).unwrap();
        let h = normalized.cloud.points[0].height_above_ground.unwrap();
        assert!((h - 8.3).abs() < 1e-12);
        assert_eq!(normalized.clamped_below_ground, 0);
    }

    #[test]
    fn lattice_point_degenerates_to_cell_value() {
        let pts = [
            ground(0.5, 0.5, 10.0),
            ground(1.5, 0.5, 20.0),
            ground(0.5, 1.5, 30.0),
            ground(1.5, 1.5, 40.0),
        ];
        let extent = Extent::new(0.0, 0.0, 1.9, 1.9).unwrap();
        let dem = Dem::build(&pts, 1.0, Some(extent)).unwrap();
        // (0.5, 0.5) is exactly the center of cell (0, 0).
        assert!((dem.elevation_at(0.5, 0.5).unwrap() - 10.0).abs() < 1e-12);
        assert!((dem.elevation_at(1.5, 1.5).unwrap() - 40.0).abs() < 1e-12);
    }

    #[test]
    fn ramp_matches_analytic_profile() {
        // Terrain z = x sampled at every cell center over a 10x3 raster.
        let mut pts = Vec::new();
        for row in 0..3 {
            for col in 0..10 {
                let x = col as f64 + 0.5;
                let y = row as f64 + 0.5;
                pts.push(ground(x, y, x));
            }
        }
        let extent = Extent::new(0.0, 0.0, 9.9, 2.9).unwrap();
        let dem = Dem::build(&pts, 1.0, Some(extent)).unwrap();
        // Query between cell centers; the ramp is affine so bilinear must
        // reproduce it exactly in the interior.
        for x in [0.5, 1.0, 2.5, 4.75, 9.49] {
            let z = dem.elevation_at(x, 1.5).unwrap();
            assert!((z - x).abs() < 1e-9, "x={x} got {z}");
        }
    }

    #[test]
    fn affine_field_reproduced_exactly() {
        // z = 3 + 0.25x - 0.5y at cell centers.
        let f = |x: f64, y: f64| 3.0 + 0.25 * x - 0.5 * y;
        let mut pts = Vec::new();
        for row in 0..6 {
            for col in 0..6 {
                let (x, y) = (col as f64 + 0.5, row as f64 + 0.5);
                pts.push(ground(x, y, f(x, y)));
            }
        }
        let extent = Extent::new(0.0, 0.0, 5.9, 5.9).unwrap();
        let dem = Dem::build(&pts, 1.0, Some(extent)).unwrap();
        for (x, y) in [(0.5, 0.5), (2.3, 3.1), (5.49, 5.49), (1.0, 4.2)] {
            let z = dem.elevation_at(x, y).unwrap();
            assert!((z - f(x, y)).abs() < 1e-12, "({x},{y})");
        }
    }

    #[test]
    fn out_of_coverage_names_the_point() {
        let pts = [ground(0.5, 0.5, 1.0)];
        let dem = Dem::build(&pts, 1.0, None).unwrap();
        match dem.elevation_at(100.0, 3.0) {
            Err(Error::OutOfCoverage { x, y }) => {
                assert_eq!((x, y), (100.0, 3.0));
            }
            other => panic!("expected OutOfCoverage, got {other:?}"),
        }
    }

    #[test]
    fn normalization_is_idempotent_and_clamps() {
        let pts: Vec<_> = (0..9)
            .map(|i| ground(f64::from(i % 3) + 0.5, f64::from(i / 3) + 0.5, 50.0))
            .collect();
        let dem = Dem::build(&pts, 1.0, None).unwrap();
        let cloud = PointCloud::new(
            alloc::vec![veg(1.0, 1.0, 49.0), veg(1.5, 1.5, 58.0)],
            Extent::new(0.0, 0.0, 2.9, 2.9).unwrap(),
            9.0,
        )
        .unwrap();
        let once = normalize_heights(&cloud, &dem).unwrap();
        assert_eq!(once.clamped_below_ground, 1);
        assert_eq!(once.cloud.points[0].height_above_ground, Some(0.0));
        assert_eq!(once.cloud.points[1].height_above_ground, Some(8.0));
        let twice = normalize_heights(&once.cloud, &dem).unwrap();
        assert_eq!(
            once.cloud
                .points
                .iter()
                .map(|p| p.height_above_ground)
                .collect::<Vec<_>>(),
            twice
                .cloud
                .points
                .iter()
                .map(|p| p.height_above_ground)
                .collect::<Vec<_>>(),
        );
    }

    #[test]
    fn filled_elevations_stay_within_ground_range() {
        let pts = [ground(0.5, 0.5, 10.0), ground(7.5, 7.5, 30.0)];
        let extent = Extent::new(0.0, 0.0, 7.9, 7.9).unwrap();
        let dem = Dem::build(&pts, 1.0, Some(extent)).unwrap();
        for row in 0..dem.n_rows() {
            for col in 0..dem.n_cols() {
                let z = dem.cell_elevation(col, row);
                assert!(z.is_finite());
                assert!((9.0..=31.0).contains(&z));
            }
        }
    }
}
