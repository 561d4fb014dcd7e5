//! Iterative canopy stratification.
//!
//! Each pass bins the remaining points into a grid one average footprint
//! wide, pools the height histogram of a circular locale around every
//! occupied cell, smooths it, and reads the salient curves (height ranges of
//! negative second derivative) as canopy layers. The midpoint between the top
//! two salient ranges thresholds that cell; everything above is stripped as
//! the current top layer. The footprint is recomputed from the remainder and
//! the loop repeats until the cloud empties. Because neighboring locales
//! overlap, thresholds vary smoothly across cells and crowns are not sliced
//! between layers.
//!
//! Strata that never reach [`GROUND_VEG_CEILING`] in any cell are pooled as
//! ground vegetation rather than counted as canopy layers.

use alloc::vec;
use alloc::vec::Vec;

use crate::cloud::{compute_afp, PointCloud};
use crate::error::{Error, Result};
use crate::grid::GridIndex;
use crate::math;

/// Height histogram bin width in meters.
pub const BIN_WIDTH: f64 = 0.25;
/// Gaussian smoothing bandwidth in meters; wide enough to erase the vertical
/// structure of a single crown.
pub const SMOOTHING_SIGMA: f64 = 5.0;
/// Locale radius as a multiple of the average footprint, giving roughly
/// π·6² ≈ 113 points per locale at uniform density.
pub const LOCALE_RADIUS_FACTOR: f64 = 6.0;
/// Lower bound on the locale radius in meters.
pub const MIN_LOCALE_RADIUS: f64 = 1.5;
/// Strata entirely below this height are ground vegetation, not canopy.
pub const GROUND_VEG_CEILING: f64 = 4.0;
/// Divergence guard on the peeling loop.
pub const MAX_ITERATIONS: u32 = 32;

/// Histogram of point heights above ground.
///
/// Bin `i` covers `[i·bin_width, (i+1)·bin_width)`. `smoothed` is empty until
/// [`smooth_histogram`] fills it.
#[derive(Debug, Clone, PartialEq)]
pub struct HeightHistogram {
    pub bin_width: f64,
    pub counts: Vec<f64>,
    pub smoothed: Vec<f64>,
}

impl HeightHistogram {
    /// Bins non-negative heights; the array is sized to the tallest point.
    pub fn from_heights(heights: &[f64], bin_width: f64) -> Result<Self> {
        if heights.is_empty() {
            return Err(Error::EmptyInput("histogram of no heights"));
        }
        if !(bin_width > 0.0) {
            return Err(Error::invalid("histogram bin width must be positive"));
        }
        let max_h = heights.iter().fold(0.0f64, |a, &h| a.max(h));
        let n_bins = (max_h / bin_width) as usize + 1;
        let mut counts = vec![0.0f64; n_bins];
        for &h in heights {
            let bin = ((h.max(0.0) / bin_width) as usize).min(n_bins - 1);
            counts[bin] += 1.0;
        }
        Ok(HeightHistogram {
            bin_width,
            counts,
            smoothed: Vec::new(),
        })
    }

    pub fn total(&self) -> f64 {
        self.counts.iter().sum()
    }
}

/// Discretized Gaussian taps covering ±4σ, normalized to unit sum so that a
/// flat field passes through smoothing unchanged and interior mass is
/// conserved exactly.
fn gaussian_kernel(sigma: f64, bin_width: f64) -> Vec<f64> {
    let half = math::ceil(4.0 * sigma / bin_width) as usize;
    let mut weights = Vec::with_capacity(2 * half + 1);
    for d in -(half as i64)..=(half as i64) {
        let x = d as f64 * bin_width;
        weights.push(math::exp(-x * x / (2.0 * sigma * sigma)));
    }
    let sum: f64 = weights.iter().sum();
    for w in &mut weights {
        *w /= sum;
    }
    weights
}

/// Convolves `counts` with `kernel` into `out` (same length as `counts`),
/// treating everything beyond the array ends as zero.
fn smooth_into(counts: &[f64], kernel: &[f64], out: &mut [f64]) {
    let n = counts.len();
    let half = kernel.len() / 2;
    out[..n].fill(0.0);
    for (j, &c) in counts.iter().enumerate() {
        if c == 0.0 {
            continue;
        }
        let lo = j.saturating_sub(half);
        let hi = (j + half).min(n - 1);
        let k_lo = lo + half - j;
        for (o, w) in out[lo..=hi]
            .iter_mut()
            .zip(&kernel[k_lo..k_lo + (hi - lo + 1)])
        {
            *o += c * w;
        }
    }
}

/// Gaussian-smooths a histogram; see [`gaussian_kernel`] for the kernel.
pub fn smooth_histogram(hist: &HeightHistogram, sigma: f64) -> HeightHistogram {
    let kernel = gaussian_kernel(sigma, hist.bin_width);
    let mut smoothed = vec![0.0f64; hist.counts.len()];
    smooth_into(&hist.counts, &kernel, &mut smoothed);
    HeightHistogram {
        bin_width: hist.bin_width,
        counts: hist.counts.clone(),
        smoothed,
    }
}

/// Inclusive bin runs where the central-difference second derivative of
/// `smoothed` is strictly negative, scanned bottom-up.
///
/// Curvature below the numerical noise floor counts as zero, and single-bin
/// runs are discarded as noise.
fn salient_bin_runs(smoothed: &[f64]) -> Vec<(usize, usize)> {
    let n = smoothed.len();
    let mut runs = Vec::new();
    if n < 3 {
        return runs;
    }
    let peak = smoothed.iter().fold(0.0f64, |a, &v| a.max(v));
    let tol = peak * 1e-12;
    let mut start: Option<usize> = None;
    for i in 1..n - 1 {
        let d2 = smoothed[i + 1] - 2.0 * smoothed[i] + smoothed[i - 1];
        if d2 < -tol {
            if start.is_none() {
                start = Some(i);
            }
        } else if let Some(s) = start.take() {
            if i - s >= 2 {
                runs.push((s, i - 1));
            }
        }
    }
    if let Some(s) = start {
        if (n - 1) - s >= 2 {
            runs.push((s, n - 2));
        }
    }
    runs
}

/// Salient curves of a smoothed histogram as height intervals, topmost first.
///
/// Interval bounds sit on the centers of the first and last bin of each run.
pub fn salient_ranges(hist: &HeightHistogram) -> Vec<(f64, f64)> {
    let bw = hist.bin_width;
    let mut ranges: Vec<(f64, f64)> = salient_bin_runs(&hist.smoothed)
        .into_iter()
        .map(|(s, e)| ((s as f64 + 0.5) * bw, (e as f64 + 0.5) * bw))
        .collect();
    ranges.reverse();
    ranges
}

fn threshold_from_ranges(ranges: &[(f64, f64)]) -> Option<f64> {
    if ranges.len() >= 2 {
        // Midpoint between the facing boundaries of the top two layers.
        Some(0.5 * (ranges[0].0 + ranges[1].1))
    } else {
        None
    }
}

/// Height threshold separating the top canopy layer of a locale, or `None`
/// when the locale shows at most one layer (everything belongs to the top).
pub fn locale_threshold(heights: &[f64]) -> Result<Option<f64>> {
    if heights.is_empty() {
        return Err(Error::EmptyInput("locale threshold of no points"));
    }
    let hist = HeightHistogram::from_heights(heights, BIN_WIDTH)?;
    let smoothed = smooth_histogram(&hist, SMOOTHING_SIGMA);
    Ok(threshold_from_ranges(&salient_ranges(&smoothed)))
}

/// Per-cell height bounds recorded when a layer was stripped.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellBounds {
    pub col: u32,
    pub row: u32,
    /// Threshold the cell was cut at, or its lowest stripped height when the
    /// whole cell belonged to the layer.
    pub lower: f64,
    /// Highest stripped height in the cell.
    pub upper: f64,
}

/// One stripped canopy layer.
#[derive(Debug, Clone, PartialEq)]
pub struct CanopyLayer {
    /// 1-based ordinal from the top of the canopy.
    pub index_from_top: u32,
    /// Indices into the source cloud's point list, ascending.
    pub member_points: Vec<u32>,
    /// Bounds of every cell that contributed points, row-major order.
    pub cell_thresholds: Vec<CellBounds>,
    /// Grid cell width in force when the layer was stripped.
    pub grid_cell_width: f64,
    /// Median of per-cell lower bounds, meters.
    pub starting_height: f64,
    /// Median of per-cell (upper − lower), meters.
    pub thickness: f64,
    /// Points per square meter of the cloud area.
    pub density: f64,
}

/// Outcome of stratifying one cloud.
#[derive(Debug, Clone, PartialEq)]
pub struct StratificationResult {
    /// Canopy layers, top first.
    pub layers: Vec<CanopyLayer>,
    /// Points of strata that stayed entirely below [`GROUND_VEG_CEILING`].
    pub ground_vegetation: Vec<u32>,
    /// Peeling iterations executed.
    pub iterations: u32,
}

impl StratificationResult {
    /// Total points assigned across layers and ground vegetation.
    pub fn total_assigned(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.member_points.len())
            .sum::<usize>()
            + self.ground_vegetation.len()
    }

    /// Layer densities from the top down.
    pub fn layer_densities(&self) -> Vec<f64> {
        self.layers.iter().map(|l| l.density).collect()
    }
}

/// Reusable per-worker buffers for locale analysis.
struct LocaleScratch {
    counts: Vec<f64>,
    smoothed: Vec<f64>,
}

impl LocaleScratch {
    fn new(capacity: usize) -> Self {
        LocaleScratch {
            counts: vec![0.0; capacity],
            smoothed: vec![0.0; capacity],
        }
    }
}

/// Analyses one cell's locale; returns the stratification threshold.
fn analyze_locale(
    grid: &GridIndex,
    slot_heights: &[f64],
    col: usize,
    row: usize,
    radius: f64,
    kernel: &[f64],
    scratch: &mut LocaleScratch,
) -> Option<f64> {
    let (cx, cy) = grid.cell_center(col, row);
    let n_bins_cap = scratch.counts.len();
    let mut max_bin = 0usize;
    let mut total = 0usize;
    grid.for_each_in_disk(cx, cy, radius, |slot| {
        let h = slot_heights[slot];
        let bin = ((h / BIN_WIDTH) as usize).min(n_bins_cap - 1);
        scratch.counts[bin] += 1.0;
        if bin > max_bin {
            max_bin = bin;
        }
        total += 1;
    });
    if total == 0 {
        // Heavily depleted neighborhoods can leave an occupied cell with an
        // empty locale only through float edge effects; treat as single-layer.
        return None;
    }
    let n_bins = max_bin + 1;
    smooth_into(
        &scratch.counts[..n_bins],
        kernel,
        &mut scratch.smoothed[..n_bins],
    );
    let runs = salient_bin_runs(&scratch.smoothed[..n_bins]);
    scratch.counts[..n_bins].fill(0.0);
    if runs.len() >= 2 {
        let top = runs[runs.len() - 1];
        let below = runs[runs.len() - 2];
        Some(0.5 * ((top.0 as f64 + 0.5) * BIN_WIDTH + (below.1 as f64 + 0.5) * BIN_WIDTH))
    } else {
        None
    }
}

/// Elements of sorted `a` not present in sorted `b`.
fn sorted_difference(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(a.len() - b.len());
    let mut j = 0usize;
    for &x in a {
        while j < b.len() && b[j] < x {
            j += 1;
        }
        if j < b.len() && b[j] == x {
            j += 1;
        } else {
            out.push(x);
        }
    }
    out
}

/// Peels canopy layers off a height-normalized cloud until it empties.
///
/// Ground-flagged points are ignored; every other point must carry
/// `height_above_ground`. The result partitions those points exactly between
/// `layers` and `ground_vegetation`. The routine is deterministic: identical
/// input produces an identical result regardless of thread count.
pub fn stratify(cloud: &PointCloud) -> Result<StratificationResult> {
    if !(cloud.area > 0.0) {
        return Err(Error::invalid("cloud area must be positive"));
    }
    let mut active: Vec<u32> = Vec::new();
    for (i, p) in cloud.points.iter().enumerate() {
        if p.is_ground {
            continue;
        }
        if p.height_above_ground.is_none() {
            return Err(Error::invalid(
                "stratification requires height-normalized points; run DEM normalization first",
            ));
        }
        active.push(i as u32);
    }
    let heights: Vec<f64> = cloud
        .points
        .iter()
        .map(|p| p.height_above_ground.unwrap_or(0.0).max(0.0))
        .collect();

    let mut result = StratificationResult {
        layers: Vec::new(),
        ground_vegetation: Vec::new(),
        iterations: 0,
    };
    if active.is_empty() {
        return Ok(result);
    }

    let kernel = gaussian_kernel(SMOOTHING_SIGMA, BIN_WIDTH);
    let max_height = active
        .iter()
        .map(|&i| heights[i as usize])
        .fold(0.0f64, f64::max);
    let bin_capacity = (max_height / BIN_WIDTH) as usize + 2;

    while !active.is_empty() {
        if result.iterations >= MAX_ITERATIONS {
            return Err(Error::AlgorithmDivergence {
                iterations: result.iterations,
            });
        }
        result.iterations += 1;

        let density = active.len() as f64 / cloud.area;
        let afp = compute_afp(density)?;
        let grid = GridIndex::build_subset(&cloud.points, &active, cloud.extent, afp)?;
        let radius = (LOCALE_RADIUS_FACTOR * afp).max(MIN_LOCALE_RADIUS);
        let occupied = grid.occupied_cells();

        // Heights mirrored into cell order so locale scans stay sequential.
        let slot_heights: Vec<f64> = (0..grid.len())
            .map(|s| heights[grid.order_slot(s) as usize])
            .collect();

        let thresholds: Vec<Option<f64>> = {
            #[cfg(feature = "parallel")]
            {
                use rayon::prelude::*;
                occupied
                    .par_iter()
                    .map_init(
                        || LocaleScratch::new(bin_capacity),
                        |scratch, &(col, row)| {
                            analyze_locale(&grid, &slot_heights, col, row, radius, &kernel, scratch)
                        },
                    )
                    .collect()
            }
            #[cfg(not(feature = "parallel"))]
            {
                let mut scratch = LocaleScratch::new(bin_capacity);
                occupied
                    .iter()
                    .map(|&(col, row)| {
                        analyze_locale(
                            &grid,
                            &slot_heights,
                            col,
                            row,
                            radius,
                            &kernel,
                            &mut scratch,
                        )
                    })
                    .collect()
            }
        };

        // Strip everything above each cell's threshold (whole cells when the
        // locale showed a single layer).
        let mut members: Vec<u32> = Vec::new();
        let mut bounds: Vec<CellBounds> = Vec::new();
        for (&(col, row), &threshold) in occupied.iter().zip(&thresholds) {
            let mut lowest = f64::INFINITY;
            let mut highest = f64::NEG_INFINITY;
            let mut stripped_here = 0usize;
            for &pi in grid.points_in_cell(col, row) {
                let h = heights[pi as usize];
                let take = match threshold {
                    Some(t) => h > t,
                    None => true,
                };
                if take {
                    members.push(pi);
                    lowest = lowest.min(h);
                    highest = highest.max(h);
                    stripped_here += 1;
                }
            }
            if stripped_here > 0 {
                bounds.push(CellBounds {
                    col: col as u32,
                    row: row as u32,
                    lower: threshold.unwrap_or(lowest),
                    upper: highest,
                });
            }
        }

        if members.is_empty() {
            return Err(Error::AlgorithmDivergence {
                iterations: result.iterations,
            });
        }
        members.sort_unstable();
        active = sorted_difference(&active, &members);

        let stays_below_ceiling = bounds.iter().all(|b| b.upper < GROUND_VEG_CEILING);
        if stays_below_ceiling {
            result.ground_vegetation.extend_from_slice(&members);
        } else {
            let mut lowers: Vec<f64> = bounds.iter().map(|b| b.lower.max(0.0)).collect();
            // A stripped stratum spans at least one histogram bin per cell.
            let mut spans: Vec<f64> = bounds
                .iter()
                .map(|b| (b.upper - b.lower).max(BIN_WIDTH))
                .collect();
            let starting_height = math::median(&mut lowers);
            let thickness = math::median(&mut spans);
            let density = members.len() as f64 / cloud.area;
            result.layers.push(CanopyLayer {
                index_from_top: result.layers.len() as u32 + 1,
                member_points: members,
                cell_thresholds: bounds,
                grid_cell_width: afp,
                starting_height,
                thickness,
                density,
            });
        }
    }

    result.ground_vegetation.sort_unstable();
    Ok(result)
}

/// Aggregated layer statistics across many plots.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LayerSummaryRow {
    /// Layer depth this row describes; 0 marks the all-layers aggregate.
    pub layer: u32,
    /// Fraction of plots whose stratification produced exactly this many
    /// layers (for the aggregate row: at least one layer).
    pub plot_fraction: f64,
    /// Number of plots contributing statistics to this row.
    pub n_plots: usize,
    pub starting_height_mean: f64,
    pub starting_height_sd: f64,
    pub thickness_mean: f64,
    pub thickness_sd: f64,
    pub density_mean: f64,
    pub density_sd: f64,
}

/// Per-depth rows plus an aggregate row over whole canopies.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LayerSummary {
    pub per_layer: Vec<LayerSummaryRow>,
    pub aggregate: LayerSummaryRow,
}

/// Summarizes stratification results across plots: per layer depth, the share
/// of plots with exactly that many layers and mean/SD of starting height,
/// thickness and density; plus an aggregate row treating each plot's canopy
/// as one slab (minimum start, total vertical span, summed density).
pub fn layer_summary(results: &[StratificationResult]) -> Result<LayerSummary> {
    if results.is_empty() {
        return Err(Error::EmptyInput("layer summary of no plots"));
    }
    let n_plots = results.len();
    let max_depth = results.iter().map(|r| r.layers.len()).max().unwrap_or(0);

    let row_from =
        |layer: u32, plot_fraction: f64, starts: &[f64], thicks: &[f64], densities: &[f64]| {
            let (sh_m, sh_sd) = math::mean_sd(starts);
            let (th_m, th_sd) = math::mean_sd(thicks);
            let (d_m, d_sd) = math::mean_sd(densities);
            LayerSummaryRow {
                layer,
                plot_fraction,
                n_plots: starts.len(),
                starting_height_mean: sh_m,
                starting_height_sd: sh_sd,
                thickness_mean: th_m,
                thickness_sd: th_sd,
                density_mean: d_m,
                density_sd: d_sd,
            }
        };

    let mut per_layer = Vec::with_capacity(max_depth);
    for depth in 1..=max_depth {
        let exactly = results.iter().filter(|r| r.layers.len() == depth).count();
        let mut starts = Vec::new();
        let mut thicks = Vec::new();
        let mut densities = Vec::new();
        for r in results {
            if let Some(layer) = r.layers.get(depth - 1) {
                starts.push(layer.starting_height);
                thicks.push(layer.thickness);
                densities.push(layer.density);
            }
        }
        per_layer.push(row_from(
            depth as u32,
            exactly as f64 / n_plots as f64,
            &starts,
            &thicks,
            &densities,
        ));
    }

    let mut agg_starts = Vec::new();
    let mut agg_thicks = Vec::new();
    let mut agg_densities = Vec::new();
    for r in results {
        if r.layers.is_empty() {
            continue;
        }
        let start = r
            .layers
            .iter()
            .map(|l| l.starting_height)
            .fold(f64::INFINITY, f64::min);
        let top = r
            .layers
            .iter()
            .map(|l| l.starting_height + l.thickness)
            .fold(f64::NEG_INFINITY, f64::max);
        agg_starts.push(start);
        agg_thicks.push(top - start);
        agg_densities.push(r.layers.iter().map(|l| l.density).sum());
    }
    let with_layers = agg_starts.len();
    let aggregate = row_from(
        0,
        with_layers as f64 / n_plots as f64,
        &agg_starts,
        &agg_thicks,
        &agg_densities,
    );

    Ok(LayerSummary {
        per_layer,
        aggregate,
    })
}
