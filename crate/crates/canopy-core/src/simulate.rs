//! Synthetic stands and airborne scan simulation.
//!
//! Stands are ellipsoidal crowns on stems placed in up to three height tiers;
//! scanning fires pulses on a jittered grid, tilts each by a random angle
//! inside the scanner's half field of view, and walks crown entry surfaces
//! top-down. Every traversal returns with the configured attenuation
//! probability and a pulse that clears the canopy may return from the ground.
//! This Bernoulli-per-surface model is deliberately minimal: it produces the
//! qualitative effect that matters — per-layer point density decaying with
//! depth — and carries exact per-point ground truth for testing the rest of
//! the toolkit.

use alloc::vec::Vec;

use crate::cloud::{Extent, LidarPoint, PointCloud};
use crate::error::{Error, Result};
use crate::evaluate::{CrownClass, FieldStem};
use crate::math;
use crate::rng::{mix3, SplitMix64};

/// Stem height bands per tier (meters): tier 1 tops stay above tier 2 tops,
/// which stay above tier 3 tops.
pub const TIER_HEIGHT_BANDS: [(f64, f64); 3] = [(18.0, 28.0), (8.0, 15.0), (4.0, 8.0)];
/// Crown horizontal semi-axis bands per tier (meters).
pub const TIER_CROWN_BANDS: [(f64, f64); 3] = [(2.0, 3.5), (1.5, 2.5), (1.0, 2.0)];
/// Minimum planar spacing between stems (meters).
pub const MIN_STEM_SPACING: f64 = 1.5;
/// Rejection budget for stem placement.
pub const MAX_PLACEMENT_REJECTIONS: usize = 10_000;

/// Ellipsoidal crown: circular in plan view, `vertical_semi` tall on each
/// side of the center.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CrownShape {
    /// Height of the ellipsoid center above the terrain, meters.
    pub center_height: f64,
    pub vertical_semi: f64,
    pub horizontal_semi: f64,
}

impl CrownShape {
    pub fn top(&self) -> f64 {
        self.center_height + self.vertical_semi
    }

    pub fn bottom(&self) -> f64 {
        self.center_height - self.vertical_semi
    }
}

/// One synthetic tree.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SyntheticStem {
    pub x: f64,
    pub y: f64,
    /// Height tier, 1 (overstory) through 3.
    pub tier: u8,
    /// Stem height above the terrain, meters.
    pub height: f64,
    pub crown: CrownShape,
}

/// Terrain under the stand.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "lowercase"))]
pub enum Terrain {
    Flat,
    /// Elevation grows linearly with x: z = slope · x.
    Ramp {
        slope: f64,
    },
}

impl Terrain {
    pub fn elevation(&self, x: f64, _y: f64) -> f64 {
        match self {
            Terrain::Flat => 0.0,
            Terrain::Ramp { slope } => slope * x,
        }
    }
}

/// A generated stand with known geometry.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SyntheticStand {
    pub stems: Vec<SyntheticStem>,
    pub terrain: Terrain,
    pub extent: Extent,
    pub area: f64,
}

/// Scanner and flight parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ScanConfig {
    /// Emitted pulses per square meter.
    pub pulse_density: f64,
    /// Most returns a single pulse can yield.
    pub max_returns: u8,
    /// Half of the scanner's field of view, degrees from nadir.
    pub scan_half_angle_deg: f64,
    /// Probability that a crown traversal emits a return.
    pub attenuation: f64,
    /// Probability that a pulse reaching the ground returns from it.
    pub ground_reflect: f64,
    pub seed: u64,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            pulse_density: 50.0,
            max_returns: 4,
            scan_half_angle_deg: 20.0,
            attenuation: 0.6,
            ground_reflect: 0.95,
            seed: 0,
        }
    }
}

impl ScanConfig {
    fn validate(&self) -> Result<()> {
        if !(self.pulse_density > 0.0) {
            return Err(Error::invalid("pulse density must be positive"));
        }
        if self.max_returns == 0 {
            return Err(Error::invalid("a pulse must allow at least one return"));
        }
        if !(0.0..90.0).contains(&self.scan_half_angle_deg) {
            return Err(Error::invalid(
                "scan half angle must lie in [0, 90) degrees",
            ));
        }
        for (name, p) in [
            ("attenuation", self.attenuation),
            ("ground_reflect", self.ground_reflect),
        ] {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::invalid(alloc::format!(
                    "{name} must be a probability in [0, 1], got {p}"
                )));
            }
        }
        Ok(())
    }
}

/// Generator ground truth for one emitted point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PointTruth {
    /// Index into the stand's stem list, absent for ground returns.
    pub stem: Option<u32>,
    /// Tier of the emitting crown; 0 for ground returns.
    pub tier: u8,
}

/// A simulated acquisition: the cloud plus per-point truth labels.
///
/// Truth rides in a parallel vector, never inside the points themselves, so
/// the cloud is indistinguishable from converted real data.
#[derive(Debug, Clone)]
pub struct Scan {
    pub cloud: PointCloud,
    pub truth: Vec<PointTruth>,
}

/// Places `tier_counts` stems per tier by seeded rejection sampling with the
/// minimum spacing, on flat terrain.
pub fn generate_stand(
    extent: Extent,
    tier_counts: [usize; 3],
    seed: u64,
) -> Result<SyntheticStand> {
    let requested: usize = tier_counts.iter().sum();
    let mut rng = SplitMix64::new(seed);
    let mut stems: Vec<SyntheticStem> = Vec::with_capacity(requested);
    let mut rejections = 0usize;

    for (tier_idx, &count) in tier_counts.iter().enumerate() {
        let (h_lo, h_hi) = TIER_HEIGHT_BANDS[tier_idx];
        let (c_lo, c_hi) = TIER_CROWN_BANDS[tier_idx];
        for _ in 0..count {
            loop {
                let x = rng.next_range(extent.min_x, extent.max_x);
                let y = rng.next_range(extent.min_y, extent.max_y);
                let clear = stems
                    .iter()
                    .all(|s| math::hypot2(s.x - x, s.y - y) >= MIN_STEM_SPACING * MIN_STEM_SPACING);
                if !clear {
                    rejections += 1;
                    if rejections >= MAX_PLACEMENT_REJECTIONS {
                        return Err(Error::PlacementFailure {
                            placed: stems.len(),
                            requested,
                        });
                    }
                    continue;
                }
                let height = rng.next_range(h_lo, h_hi);
                let horizontal_semi = rng.next_range(c_lo, c_hi);
                let vertical_semi = height * rng.next_range(0.20, 0.30);
                stems.push(SyntheticStem {
                    x,
                    y,
                    tier: tier_idx as u8 + 1,
                    height,
                    crown: CrownShape {
                        center_height: height - vertical_semi,
                        vertical_semi,
                        horizontal_semi,
                    },
                });
                break;
            }
        }
    }

    Ok(SyntheticStand {
        stems,
        terrain: Terrain::Flat,
        extent,
        area: extent.width() * extent.height(),
    })
}

/// Field-survey view of a stand: tier 1 maps to the overstory classes, tiers
/// 2 and 3 to intermediate and overtopped.
pub fn field_stems(stand: &SyntheticStand) -> Vec<FieldStem> {
    stand
        .stems
        .iter()
        .map(|s| {
            let class = match s.tier {
                1 => {
                    if s.height >= 24.0 {
                        CrownClass::Dominant
                    } else {
                        CrownClass::CoDominant
                    }
                }
                2 => CrownClass::Intermediate,
                _ => CrownClass::Overtopped,
            };
            FieldStem::new(
                s.x,
                s.y,
                s.height,
                10.0 + 2.0 * s.height,
                class,
                "synthetic",
            )
            .expect("generated stems satisfy the survey constraints")
        })
        .collect()
}

/// Simulates one acquisition over the stand.
pub fn scan_stand(stand: &SyntheticStand, config: &ScanConfig) -> Result<Scan> {
    config.validate()?;
    let extent = stand.extent;
    let width = extent.width();
    let depth = extent.height();
    if !(width > 0.0 && depth > 0.0) {
        return Err(Error::invalid(
            "stand extent must have positive width and height",
        ));
    }

    let spacing = 1.0 / math::sqrt(config.pulse_density);
    let nx = (math::round(width / spacing) as usize).max(1);
    let ny = (math::round(depth / spacing) as usize).max(1);
    let ceiling = stand
        .stems
        .iter()
        .map(|s| s.crown.top() + stand.terrain.elevation(s.x, s.y))
        .fold(1.0f64, f64::max)
        + 1.0;
    let tan_half = math::tan(config.scan_half_angle_deg * math::PI / 180.0);

    let mut points: Vec<LidarPoint> = Vec::new();
    let mut truth: Vec<PointTruth> = Vec::new();
    let mut cloud_extent = extent;
    // Crown entry hits of the current pulse: (t, stem index).
    let mut hits: Vec<(f64, u32)> = Vec::new();
    // Returns of the current pulse, completed once its count is known.
    let mut emitted: Vec<(f64, f64, f64, bool, PointTruth)> = Vec::new();

    for row in 0..ny {
        for col in 0..nx {
            let pulse_id = (row * nx + col) as u64;
            let mut rng = SplitMix64::new(mix3(config.seed, col as u64, row as u64));

            // Jittered position within the pulse's grid cell.
            let px = extent.min_x + (col as f64 + rng.next_f64()) * width / nx as f64;
            let py = extent.min_y + (row as f64 + rng.next_f64()) * depth / ny as f64;
            // Tilt from nadir plus azimuth.
            let tilt = config.scan_half_angle_deg * math::PI / 180.0 * rng.next_f64();
            let azimuth = 2.0 * math::PI * rng.next_f64();
            let (sin_t, cos_t) = (math::sin(tilt), math::cos(tilt));
            let dir = (
                sin_t * math::cos(azimuth),
                sin_t * math::sin(azimuth),
                -cos_t,
            );

            hits.clear();
            for (si, stem) in stand.stems.iter().enumerate() {
                let ground = stand.terrain.elevation(stem.x, stem.y);
                let cz = ground + stem.crown.center_height;
                let a = stem.crown.horizontal_semi;
                let b = stem.crown.vertical_semi;
                // Cheap reject: the ray drifts at most tan(half angle) per
                // meter of descent from the ceiling.
                let reach = a + tan_half * (ceiling - (cz - b)).max(0.0);
                if math::hypot2(px - stem.x, py - stem.y) > reach * reach {
                    continue;
                }
                let ex = (px - stem.x) / a;
                let ey = (py - stem.y) / a;
                let ez = (ceiling - cz) / b;
                let fx = dir.0 / a;
                let fy = dir.1 / a;
                let fz = dir.2 / b;
                let qa = fx * fx + fy * fy + fz * fz;
                let qb = 2.0 * (ex * fx + ey * fy + ez * fz);
                let qc = ex * ex + ey * ey + ez * ez - 1.0;
                let disc = qb * qb - 4.0 * qa * qc;
                if disc <= 0.0 {
                    continue;
                }
                let t_entry = (-qb - math::sqrt(disc)) / (2.0 * qa);
                if t_entry > 0.0 {
                    hits.push((t_entry, si as u32));
                }
            }
            hits.sort_unstable_by(|a, b| a.0.partial_cmp(&b.0).expect("finite entry distances"));

            emitted.clear();
            for &(t, si) in hits.iter() {
                if rng.next_f64() < config.attenuation {
                    let x = px + t * dir.0;
                    let y = py + t * dir.1;
                    let z = ceiling + t * dir.2;
                    let stem = &stand.stems[si as usize];
                    emitted.push((
                        x,
                        y,
                        z,
                        false,
                        PointTruth {
                            stem: Some(si),
                            tier: stem.tier,
                        },
                    ));
                    if emitted.len() == config.max_returns as usize {
                        break;
                    }
                }
            }
            if emitted.len() < config.max_returns as usize {
                // The pulse cleared the canopy; intersect the terrain.
                let t_ground = match stand.terrain {
                    Terrain::Flat => ceiling / cos_t,
                    Terrain::Ramp { slope } => {
                        let denom = dir.2 - slope * dir.0;
                        // A pulse at most 20° off nadir cannot run parallel
                        // to a gentle ramp; denom stays negative.
                        (slope * px - ceiling) / denom
                    }
                };
                if rng.next_f64() < config.ground_reflect {
                    let x = px + t_ground * dir.0;
                    let y = py + t_ground * dir.1;
                    // Pin the return to the surface; the ray parameter is
                    // only float-exact where the terrain is.
                    let z = stand.terrain.elevation(x, y);
                    emitted.push((
                        x,
                        y,
                        z,
                        true,
                        PointTruth {
                            stem: None,
                            tier: 0,
                        },
                    ));
                }
            }

            let n_returns = emitted.len() as u8;
            for (ret, &(x, y, z, is_ground, label)) in emitted.iter().enumerate() {
                cloud_extent.expand(x, y);
                points.push(LidarPoint {
                    x,
                    y,
                    z,
                    return_number: ret as u8 + 1,
                    returns_of_pulse: n_returns,
                    pulse_id,
                    is_ground,
                    height_above_ground: None,
                });
                truth.push(label);
            }
        }
    }

    Ok(Scan {
        cloud: PointCloud {
            points,
            extent: cloud_extent,
            area: stand.area,
        },
        truth,
    })
}
