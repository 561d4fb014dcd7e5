//! Uniform planar grid index with closed-disk radius queries.
//!
//! The index is a compressed layout rather than a hash map: cells are numbered
//! row-major over the extent, `cell_starts` delimits each cell's slice of
//! `order`, and `order` lists point indices sorted by cell with the input
//! order preserved inside a cell. Planar coordinates are mirrored into
//! cell-sorted arrays so disk queries scan contiguous memory row slab by row
//! slab. Construction is single-writer; queries are read-only and freely
//! shareable across threads.

use alloc::vec;
use alloc::vec::Vec;

use crate::cloud::{Extent, LidarPoint};
use crate::error::{Error, Result};
use crate::math;

/// Grid index over a point slice. The cell of a point is
/// `floor((p − origin) / cell_width)` componentwise, with the origin anchored
/// at the extent minimum corner.
#[derive(Debug, Clone)]
pub struct GridIndex {
    cell_width: f64,
    origin_x: f64,
    origin_y: f64,
    n_cols: usize,
    n_rows: usize,
    cell_starts: Vec<u32>,
    order: Vec<u32>,
    // Coordinates gathered into cell order for cache-friendly disk scans.
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl GridIndex {
    /// Bins `points` into cells of `cell_width` meters over `extent`.
    pub fn build(points: &[LidarPoint], extent: Extent, cell_width: f64) -> Result<Self> {
        let indices: Vec<u32> = (0..points.len() as u32).collect();
        Self::build_subset(points, &indices, extent, cell_width)
    }

    /// Bins only the points named by `subset` (indices into `points`).
    ///
    /// Stratification repeatedly re-grids the shrinking remainder of a cloud;
    /// indexing a subset avoids copying points between iterations.
    pub fn build_subset(
        points: &[LidarPoint],
        subset: &[u32],
        extent: Extent,
        cell_width: f64,
    ) -> Result<Self> {
        if !(cell_width > 0.0) {
            return Err(Error::invalid(alloc::format!(
                "cell width must be positive, got {cell_width}"
            )));
        }
        let origin_x = extent.min_x;
        let origin_y = extent.min_y;
        let n_cols = (math::floor(extent.width() / cell_width) as usize) + 1;
        let n_rows = (math::floor(extent.height() / cell_width) as usize) + 1;
        let n_cells = n_cols
            .checked_mul(n_rows)
            .ok_or_else(|| Error::invalid("grid dimensions overflow"))?;

        let col_of = |x: f64| -> usize {
            let c = math::floor((x - origin_x) / cell_width);
            (c.max(0.0) as usize).min(n_cols - 1)
        };
        let row_of = |y: f64| -> usize {
            let r = math::floor((y - origin_y) / cell_width);
            (r.max(0.0) as usize).min(n_rows - 1)
        };

        // Counting sort by cell id keeps input order within each cell.
        let mut counts = vec![0u32; n_cells + 1];
        for &i in subset {
            let p = &points[i as usize];
            let cell = row_of(p.y) * n_cols + col_of(p.x);
            counts[cell + 1] += 1;
        }
        for cell in 0..n_cells {
            counts[cell + 1] += counts[cell];
        }
        let cell_starts = counts;

        let mut cursor: Vec<u32> = cell_starts[..n_cells].to_vec();
        let mut order = vec![0u32; subset.len()];
        let mut xs = vec![0.0f64; subset.len()];
        let mut ys = vec![0.0f64; subset.len()];
        for &i in subset {
            let p = &points[i as usize];
            let cell = row_of(p.y) * n_cols + col_of(p.x);
            let slot = cursor[cell] as usize;
            cursor[cell] += 1;
            order[slot] = i;
            xs[slot] = p.x;
            ys[slot] = p.y;
        }

        Ok(GridIndex {
            cell_width,
            origin_x,
            origin_y,
            n_cols,
            n_rows,
            cell_starts,
            order,
            xs,
            ys,
        })
    }

    pub fn cell_width(&self) -> f64 {
        self.cell_width
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    pub fn len(&self) -> usize {
        self.order.len()
    }

    pub fn is_empty(&self) -> bool {
        self.order.is_empty()
    }

    /// Planar center of a cell.
    pub fn cell_center(&self, col: usize, row: usize) -> (f64, f64) {
        (
            self.origin_x + (col as f64 + 0.5) * self.cell_width,
            self.origin_y + (row as f64 + 0.5) * self.cell_width,
        )
    }

    /// Point indices (into the original slice) stored in a cell, input order.
    pub fn points_in_cell(&self, col: usize, row: usize) -> &[u32] {
        let cell = row * self.n_cols + col;
        let lo = self.cell_starts[cell] as usize;
        let hi = self.cell_starts[cell + 1] as usize;
        &self.order[lo..hi]
    }

    /// (col, row) coordinates of every cell holding at least one point,
    /// row-major order.
    pub fn occupied_cells(&self) -> Vec<(usize, usize)> {
        let mut cells = Vec::new();
        for row in 0..self.n_rows {
            for col in 0..self.n_cols {
                let cell = row * self.n_cols + col;
                if self.cell_starts[cell + 1] > self.cell_starts[cell] {
                    cells.push((col, row));
                }
            }
        }
        cells
    }

    /// All point indices with planar distance ≤ `radius` from the center
    /// (closed disk, ties included).
    pub fn radius_query(&self, center_x: f64, center_y: f64, radius: f64) -> Result<Vec<u32>> {
        if !(radius > 0.0) {
            return Err(Error::invalid(alloc::format!(
                "query radius must be positive, got {radius}"
            )));
        }
        let mut hits = Vec::new();
        self.for_each_in_disk(center_x, center_y, radius, |slot| {
            hits.push(self.order[slot]);
        });
        Ok(hits)
    }

    /// Visits the cell-order slot of every point within the closed disk.
    ///
    /// Slots index the grid's internal cell-sorted arrays; callers translate
    /// through [`GridIndex::order_slot`] when they need the original index.
    #[inline]
    pub fn for_each_in_disk<F: FnMut(usize)>(
        &self,
        center_x: f64,
        center_y: f64,
        radius: f64,
        mut visit: F,
    ) {
        let r2 = radius * radius;
        let min_row = ((center_y - radius - self.origin_y) / self.cell_width).max(0.0) as usize;
        let max_row_f = (center_y + radius - self.origin_y) / self.cell_width;
        if max_row_f < 0.0 {
            return;
        }
        let max_row = (max_row_f as usize).min(self.n_rows - 1);
        let min_col = ((center_x - radius - self.origin_x) / self.cell_width).max(0.0) as usize;
        let max_col_f = (center_x + radius - self.origin_x) / self.cell_width;
        if max_col_f < 0.0 {
            return;
        }
        let max_col = (max_col_f as usize).min(self.n_cols - 1);

        for row in min_row..=max_row {
            // One contiguous slab of candidate slots per cell row.
            let lo = self.cell_starts[row * self.n_cols + min_col] as usize;
            let hi = self.cell_starts[row * self.n_cols + max_col + 1] as usize;
            for slot in lo..hi {
                let dx = self.xs[slot] - center_x;
                let dy = self.ys[slot] - center_y;
                if dx * dx + dy * dy <= r2 {
                    visit(slot);
                }
            }
        }
    }

    /// Original point index stored at a cell-order slot.
    #[inline]
    pub fn order_slot(&self, slot: usize) -> u32 {
        self.order[slot]
    }
}
