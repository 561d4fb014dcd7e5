//! Segmentation accuracy against field-surveyed stem maps.
//!
//! Each crown/stem pair gets a score when the height difference stays under
//! 30% and the apex leans less than 15° from nadir over the stem; optimal
//! assignment over those scores yields matched trees, omission errors
//! (unmatched stems) and commission errors (unmatched in-plot crowns, with
//! buffer-area crowns excluded). Recall, precision and F-score summarize the
//! counts.

mod hungarian;

pub use hungarian::{hungarian_assign, ScoreMatrix};

use alloc::string::String;
use alloc::vec::Vec;

use crate::cloud::PlotGeometry;
use crate::error::{Error, Result};
use crate::math;
use crate::segment::TreeCrown;

/// Eligibility bound on |apex height − stem height| / stem height.
pub const MAX_RELATIVE_HEIGHT_DIFF: f64 = 0.30;
/// Eligibility bound on the apex lean angle from nadir, degrees.
pub const MAX_LEAN_DEGREES: f64 = 15.0;

/// Crown position of a surveyed tree.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum CrownClass {
    Dominant,
    CoDominant,
    Intermediate,
    Overtopped,
    Dead,
}

impl CrownClass {
    /// Dominant and co-dominant crowns form the overstory.
    pub fn is_overstory(self) -> bool {
        matches!(self, CrownClass::Dominant | CrownClass::CoDominant)
    }

    /// Intermediate and overtopped crowns form the understory.
    pub fn is_understory(self) -> bool {
        matches!(self, CrownClass::Intermediate | CrownClass::Overtopped)
    }
}

/// A field-surveyed stem.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldStem {
    pub x: f64,
    pub y: f64,
    /// Tree height, meters.
    pub height: f64,
    /// Diameter at breast height, centimeters; surveys record trees above
    /// 12.5 cm only.
    pub dbh_cm: f64,
    pub crown_class: CrownClass,
    pub species: String,
}

impl FieldStem {
    pub fn new(
        x: f64,
        y: f64,
        height: f64,
        dbh_cm: f64,
        crown_class: CrownClass,
        species: impl Into<String>,
    ) -> Result<Self> {
        if !(height > 0.0) {
            return Err(Error::MalformedInput(alloc::format!(
                "stem height must be positive, got {height}"
            )));
        }
        if !(dbh_cm > 12.5) {
            return Err(Error::MalformedInput(alloc::format!(
                "stems below the 12.5 cm DBH survey threshold are not valid records, got {dbh_cm}"
            )));
        }
        Ok(FieldStem {
            x,
            y,
            height,
            dbh_cm,
            crown_class,
            species: species.into(),
        })
    }
}

/// Score of a crown/stem pair, or `None` when the pair is ineligible.
///
/// Both constraints are strict; an eligible pair scores the sum of its two
/// normalized slacks, in (0, 2]. Crowns with non-positive apex height are
/// degenerate and never eligible.
pub fn pair_score(crown: &TreeCrown, stem: &FieldStem) -> Option<f64> {
    if crown.apex_height <= 0.0 || stem.height <= 0.0 {
        return None;
    }
    let rel_height = math::abs(crown.apex_height - stem.height) / stem.height;
    if rel_height >= MAX_RELATIVE_HEIGHT_DIFF {
        return None;
    }
    let dist = math::sqrt(math::hypot2(crown.apex_x - stem.x, crown.apex_y - stem.y));
    // Lean from nadir with the apex height as the vertical leg.
    let lean_deg = math::atan(dist / crown.apex_height) * 180.0 / math::PI;
    if lean_deg >= MAX_LEAN_DEGREES {
        return None;
    }
    Some((1.0 - rel_height / MAX_RELATIVE_HEIGHT_DIFF) + (1.0 - lean_deg / MAX_LEAN_DEGREES))
}

/// Outcome of matching crowns against a stem map.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    /// (crown index, stem index, score) triples, each index at most once.
    pub pairs: Vec<(usize, usize, f64)>,
    /// Matched trees.
    pub mt: usize,
    /// Omission errors: stems without a matched crown.
    pub oe: usize,
    /// Commission errors: unmatched crowns whose apex lies inside the plot.
    pub ce: usize,
    /// Crown indices counted in `ce`.
    pub commission_crowns: Vec<usize>,
    /// Unmatched crowns excluded because their apex sits in the buffer.
    pub excluded_buffer_crowns: usize,
    /// Unmatched crowns beyond plot and buffer.
    pub out_of_region_crowns: usize,
    /// Crowns with non-positive apex height (never eligible).
    pub degenerate_crowns: usize,
}

/// Scores all pairs, solves the assignment, and classifies the leftovers.
pub fn match_trees(crowns: &[TreeCrown], stems: &[FieldStem], plot: &PlotGeometry) -> MatchResult {
    let mut scores = ScoreMatrix::new(crowns.len(), stems.len());
    let mut degenerate = 0usize;
    for (i, crown) in crowns.iter().enumerate() {
        if crown.apex_height <= 0.0 {
            degenerate += 1;
            continue;
        }
        for (j, stem) in stems.iter().enumerate() {
            if let Some(score) = pair_score(crown, stem) {
                scores.set(i, j, score);
            }
        }
    }
    let pairs = hungarian_assign(&scores);

    let mut crown_matched = alloc::vec![false; crowns.len()];
    let mut stem_matched = alloc::vec![false; stems.len()];
    for &(i, j, _) in &pairs {
        crown_matched[i] = true;
        stem_matched[j] = true;
    }

    let oe = stem_matched.iter().filter(|&&m| !m).count();
    let mut commission_crowns = Vec::new();
    let mut excluded_buffer = 0usize;
    let mut out_of_region = 0usize;
    for (i, crown) in crowns.iter().enumerate() {
        if crown_matched[i] {
            continue;
        }
        if plot.contains(crown.apex_x, crown.apex_y) {
            commission_crowns.push(i);
        } else if plot.in_buffer(crown.apex_x, crown.apex_y) {
            excluded_buffer += 1;
        } else {
            out_of_region += 1;
        }
    }

    MatchResult {
        mt: pairs.len(),
        oe,
        ce: commission_crowns.len(),
        commission_crowns,
        excluded_buffer_crowns: excluded_buffer,
        out_of_region_crowns: out_of_region,
        degenerate_crowns: degenerate,
        pairs,
    }
}

/// Recall, precision and F-score in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AccuracyScores {
    pub recall: f64,
    pub precision: f64,
    pub f_score: f64,
}

/// Recall = MT/(MT+OE), precision = MT/(MT+CE), F = their harmonic mean;
/// each 0/0 evaluates to 0.
pub fn metrics(mt: usize, oe: usize, ce: usize) -> AccuracyScores {
    let ratio = |num: usize, den: usize| {
        if den == 0 {
            0.0
        } else {
            num as f64 / den as f64
        }
    };
    let recall = ratio(mt, mt + oe);
    let precision = ratio(mt, mt + ce);
    let f_score = if recall + precision == 0.0 {
        0.0
    } else {
        2.0 * recall * precision / (recall + precision)
    };
    AccuracyScores {
        recall,
        precision,
        f_score,
    }
}

/// Matched/omitted/committed counts for one stem class.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct ClassCounts {
    pub mt: usize,
    pub oe: usize,
    pub ce: usize,
}

impl ClassCounts {
    pub fn scores(&self) -> AccuracyScores {
        metrics(self.mt, self.oe, self.ce)
    }
}

/// Splits a match result into overstory and understory tallies.
///
/// Stems partition by crown class (dead stems belong to neither). Commission
/// errors split by the crown's source layer: top-layer crowns count against
/// the overstory, deeper ones against the understory.
pub fn split_by_class(
    result: &MatchResult,
    crowns: &[TreeCrown],
    stems: &[FieldStem],
) -> (ClassCounts, ClassCounts) {
    let mut overstory = ClassCounts::default();
    let mut understory = ClassCounts::default();

    let mut stem_matched = alloc::vec![false; stems.len()];
    for &(_, j, _) in &result.pairs {
        stem_matched[j] = true;
        let class = stems[j].crown_class;
        if class.is_overstory() {
            overstory.mt += 1;
        } else if class.is_understory() {
            understory.mt += 1;
        }
    }
    for (j, stem) in stems.iter().enumerate() {
        if stem_matched[j] {
            continue;
        }
        if stem.crown_class.is_overstory() {
            overstory.oe += 1;
        } else if stem.crown_class.is_understory() {
            understory.oe += 1;
        }
    }
    for &i in &result.commission_crowns {
        if crowns[i].source_layer <= 1 {
            overstory.ce += 1;
        } else {
            understory.ce += 1;
        }
    }
    (overstory, understory)
}
