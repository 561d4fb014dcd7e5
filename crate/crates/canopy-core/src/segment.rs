//! Baseline per-layer tree segmentation.
//!
//! Crowns are detected per canopy layer: rasterize the layer's heights into a
//! canopy height model, take local maxima that dominate their neighborhood as
//! apexes, and assign each layer point to its nearest apex. The segmenter is
//! deliberately simple — it exists so density sweeps run end to end — and sits
//! behind [`LayerSegmenter`] so stronger methods can be swapped in without
//! touching evaluation.

use alloc::vec;
use alloc::vec::Vec;

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::math;
use crate::stratify;

/// Canopy height model: per-cell maximum height with absent cells marked NaN.
#[derive(Debug, Clone)]
pub struct Chm {
    cell_width: f64,
    origin_x: f64,
    origin_y: f64,
    n_cols: usize,
    n_rows: usize,
    values: Vec<f64>,
}

impl Chm {
    pub fn cell_width(&self) -> f64 {
        self.cell_width
    }

    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    pub fn n_rows(&self) -> usize {
        self.n_rows
    }

    /// Cell value; NaN when no point fell in the cell.
    pub fn value(&self, col: usize, row: usize) -> f64 {
        self.values[row * self.n_cols + col]
    }

    pub fn is_present(&self, col: usize, row: usize) -> bool {
        !self.value(col, row).is_nan()
    }

    pub fn cell_center(&self, col: usize, row: usize) -> (f64, f64) {
        (
            self.origin_x + (col as f64 + 0.5) * self.cell_width,
            self.origin_y + (row as f64 + 0.5) * self.cell_width,
        )
    }
}

/// Rasterizes the maximum height above ground of the given layer points and
/// applies one pass of 3×3 mean smoothing over present cells.
pub fn build_chm(cloud: &PointCloud, members: &[u32], cell_width: f64) -> Result<Chm> {
    if members.is_empty() {
        return Err(Error::EmptyInput("CHM of an empty layer"));
    }
    if !(cell_width > 0.0) {
        return Err(Error::invalid("CHM cell width must be positive"));
    }
    let extent = cloud.extent;
    let n_cols = (math::floor(extent.width() / cell_width) as usize) + 1;
    let n_rows = (math::floor(extent.height() / cell_width) as usize) + 1;
    let mut max_heights = vec![f64::NAN; n_cols * n_rows];
    for &i in members {
        let p = &cloud.points[i as usize];
        let h = p.height_above_ground.unwrap_or(0.0);
        let col =
            (math::floor((p.x - extent.min_x) / cell_width).max(0.0) as usize).min(n_cols - 1);
        let row =
            (math::floor((p.y - extent.min_y) / cell_width).max(0.0) as usize).min(n_rows - 1);
        let cell = row * n_cols + col;
        if max_heights[cell].is_nan() || h > max_heights[cell] {
            max_heights[cell] = h;
        }
    }

    // 3x3 mean over present cells; absent cells stay absent.
    let mut smoothed = max_heights.clone();
    for row in 0..n_rows {
        for col in 0..n_cols {
            if max_heights[row * n_cols + col].is_nan() {
                continue;
            }
            let mut sum = 0.0;
            let mut count = 0usize;
            for r in row.saturating_sub(1)..=(row + 1).min(n_rows - 1) {
                for c in col.saturating_sub(1)..=(col + 1).min(n_cols - 1) {
                    let v = max_heights[r * n_cols + c];
                    if !v.is_nan() {
                        sum += v;
                        count += 1;
                    }
                }
            }
            smoothed[row * n_cols + col] = sum / count as f64;
        }
    }

    Ok(Chm {
        cell_width,
        origin_x: extent.min_x,
        origin_y: extent.min_y,
        n_cols,
        n_rows,
        values: smoothed,
    })
}

/// Parameters of the baseline segmenter.
///
/// These are artifact defaults, not survey-derived constants; the minimum
/// separation and crown size roughly match the 12.5 cm DBH field threshold
/// scale.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SegmenterParams {
    /// Neighborhood radius a local maximum must dominate, meters.
    pub min_separation: f64,
    /// CHM cell width, meters.
    pub cell_width: f64,
    /// Points farther than this from every apex stay unassigned, meters.
    pub max_assignment_radius: f64,
    /// Crowns with fewer member points are discarded.
    pub min_crown_points: usize,
}

impl Default for SegmenterParams {
    fn default() -> Self {
        SegmenterParams {
            min_separation: 2.0,
            cell_width: 0.5,
            max_assignment_radius: 10.0,
            min_crown_points: 5,
        }
    }
}

/// A segmented crown: apex plus member points of one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeCrown {
    pub apex_x: f64,
    pub apex_y: f64,
    /// Apex height above ground, meters.
    pub apex_height: f64,
    /// Indices into the source cloud's point list.
    pub member_points: Vec<u32>,
    /// 1-based canopy layer the crown came from (1 = top).
    pub source_layer: u32,
}

/// Segmentation strategy for the points of one canopy layer.
///
/// The baseline [`MaximaSegmenter`] implements this; alternative segmenters
/// plug in here without touching stratification or evaluation.
pub trait LayerSegmenter {
    fn segment(&self, cloud: &PointCloud, members: &[u32], source_layer: u32) -> Vec<TreeCrown>;
}

/// CHM local-maxima segmenter with nearest-apex point assignment.
#[derive(Debug, Clone, Default)]
pub struct MaximaSegmenter {
    pub params: SegmenterParams,
}

impl LayerSegmenter for MaximaSegmenter {
    fn segment(&self, cloud: &PointCloud, members: &[u32], source_layer: u32) -> Vec<TreeCrown> {
        segment_layer(cloud, members, source_layer, &self.params)
    }
}

/// Segments one layer's points into crowns; empty layers yield no crowns.
pub fn segment_layer(
    cloud: &PointCloud,
    members: &[u32],
    source_layer: u32,
    params: &SegmenterParams,
) -> Vec<TreeCrown> {
    if members.is_empty() {
        return Vec::new();
    }
    let chm = match build_chm(cloud, members, params.cell_width) {
        Ok(chm) => chm,
        Err(_) => return Vec::new(),
    };

    // Local maxima dominating their min_separation neighborhood; equal values
    // resolve toward the smaller row-major cell index.
    let reach = math::ceil(params.min_separation / params.cell_width) as usize;
    let sep2 = params.min_separation * params.min_separation;
    let mut apexes: Vec<(f64, f64)> = Vec::new();
    for row in 0..chm.n_rows() {
        for col in 0..chm.n_cols() {
            let v = chm.value(col, row);
            if v.is_nan() {
                continue;
            }
            let idx = row * chm.n_cols() + col;
            let mut dominant = true;
            'scan: for r in row.saturating_sub(reach)..=(row + reach).min(chm.n_rows() - 1) {
                for c in col.saturating_sub(reach)..=(col + reach).min(chm.n_cols() - 1) {
                    if (r, c) == (row, col) {
                        continue;
                    }
                    let dr = (r as f64 - row as f64) * params.cell_width;
                    let dc = (c as f64 - col as f64) * params.cell_width;
                    if dr * dr + dc * dc > sep2 {
                        continue;
                    }
                    let n = chm.value(c, r);
                    if n.is_nan() {
                        continue;
                    }
                    let n_idx = r * chm.n_cols() + c;
                    if n > v || (n == v && n_idx < idx) {
                        dominant = false;
                        break 'scan;
                    }
                }
            }
            if dominant {
                apexes.push(chm.cell_center(col, row));
            }
        }
    }
    if apexes.is_empty() {
        return Vec::new();
    }

    // Nearest-apex assignment, capped at the assignment radius.
    let cap2 = params.max_assignment_radius * params.max_assignment_radius;
    let mut crown_members: Vec<Vec<u32>> = vec![Vec::new(); apexes.len()];
    for &i in members {
        let p = &cloud.points[i as usize];
        let mut best = usize::MAX;
        let mut best_d2 = cap2;
        for (k, &(ax, ay)) in apexes.iter().enumerate() {
            let d2 = math::hypot2(p.x - ax, p.y - ay);
            if d2 < best_d2 {
                best_d2 = d2;
                best = k;
            }
        }
        if best != usize::MAX {
            crown_members[best].push(i);
        }
    }

    let mut crowns = Vec::new();
    for members in crown_members {
        if members.len() < params.min_crown_points {
            continue;
        }
        // The apex is the highest member point; ties resolve to the earliest.
        let mut apex = members[0];
        let mut apex_h = f64::NEG_INFINITY;
        for &i in &members {
            let h = cloud.points[i as usize].height_above_ground.unwrap_or(0.0);
            if h > apex_h {
                apex_h = h;
                apex = i;
            }
        }
        let apex_point = &cloud.points[apex as usize];
        crowns.push(TreeCrown {
            apex_x: apex_point.x,
            apex_y: apex_point.y,
            apex_height: apex_h,
            member_points: members,
            source_layer,
        });
    }
    crowns
}

/// Stratifies the cloud and segments every canopy layer with the baseline
/// segmenter; ground vegetation is never segmented.
pub fn segment_cloud(cloud: &PointCloud) -> Result<Vec<TreeCrown>> {
    segment_cloud_with(cloud, &MaximaSegmenter::default())
}

/// [`segment_cloud`] with a caller-supplied segmenter.
pub fn segment_cloud_with(
    cloud: &PointCloud,
    segmenter: &dyn LayerSegmenter,
) -> Result<Vec<TreeCrown>> {
    if cloud.is_empty() {
        return Ok(Vec::new());
    }
    let strata = stratify::stratify(cloud)?;
    let mut crowns = Vec::new();
    for layer in &strata.layers {
        crowns.extend(segmenter.segment(cloud, &layer.member_points, layer.index_from_top));
    }
    Ok(crowns)
}
