//! Subcommand argument surfaces and implementations.

use std::path::{Path, PathBuf};

use clap::Args;

use canopy_core::cloud::{compute_afp, Extent, PlotGeometry};
use canopy_core::decimate::{decimate, DecimationSpec};
use canopy_core::dem::{normalize_heights, Dem};
use canopy_core::evaluate::{match_trees, metrics, split_by_class, ClassCounts, CrownClass};
use canopy_core::occlusion::{fit_theta, observed_fractions};
use canopy_core::point_density;
use canopy_core::segment::{segment_cloud_with, MaximaSegmenter, SegmenterParams};
use canopy_core::simulate::{field_stems, generate_stand, scan_stand, ScanConfig, Terrain};
use canopy_core::stratify::{layer_summary, stratify};

use crate::error::{CliError, Result};
use crate::formats;
use crate::sweep::{
    aggregate_rows, density_sweep, report_csv, rows_csv, summary_document, PlotInput, SweepConfig,
    SweepOutcome, DEFAULT_PCD_MIN, DEFAULT_TARGETS,
};

fn parse_extent(spec: &str) -> Result<Extent> {
    let dims: Vec<&str> = spec.split('x').collect();
    let parse = |s: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .map_err(|_| CliError::InvalidArguments(format!("bad extent dimension {s:?}")))
    };
    let (w, h) = match dims.as_slice() {
        [side] => {
            let side = parse(side)?;
            (side, side)
        }
        [w, h] => (parse(w)?, parse(h)?),
        _ => {
            return Err(CliError::InvalidArguments(format!(
                "extent must be SIDE or WIDTHxHEIGHT, got {spec:?}"
            )))
        }
    };
    if !(w > 0.0 && h > 0.0) {
        return Err(CliError::InvalidArguments(
            "extent dimensions must be positive".into(),
        ));
    }
    Extent::new(0.0, 0.0, w, h).map_err(CliError::from)
}

fn parse_tiers(spec: &str) -> Result<[usize; 3]> {
    let counts: Vec<usize> = spec
        .split(',')
        .map(|s| {
            s.trim()
                .parse::<usize>()
                .map_err(|_| CliError::InvalidArguments(format!("bad tier count {s:?}")))
        })
        .collect::<Result<_>>()?;
    if counts.len() != 3 {
        return Err(CliError::InvalidArguments(format!(
            "tiers must be three comma-separated counts, got {spec:?}"
        )));
    }
    Ok([counts[0], counts[1], counts[2]])
}

fn parse_terrain(spec: &str) -> Result<Terrain> {
    if spec == "flat" {
        return Ok(Terrain::Flat);
    }
    if let Some(slope) = spec.strip_prefix("ramp:") {
        let slope = slope
            .parse::<f64>()
            .map_err(|_| CliError::InvalidArguments(format!("bad ramp slope {slope:?}")))?;
        return Ok(Terrain::Ramp { slope });
    }
    Err(CliError::InvalidArguments(format!(
        "terrain must be `flat` or `ramp:<slope>`, got {spec:?}"
    )))
}

fn parse_center(spec: &str) -> Result<(f64, f64)> {
    let parts: Vec<&str> = spec.split(',').collect();
    if parts.len() != 2 {
        return Err(CliError::InvalidArguments(format!(
            "center must be X,Y, got {spec:?}"
        )));
    }
    let parse = |s: &str| -> Result<f64> {
        s.trim()
            .parse::<f64>()
            .map_err(|_| CliError::InvalidArguments(format!("bad coordinate {s:?}")))
    };
    Ok((parse(parts[0])?, parse(parts[1])?))
}

fn parse_targets(spec: &str) -> Result<Vec<f64>> {
    spec.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|_| CliError::InvalidArguments(format!("bad density target {s:?}")))
        })
        .collect()
}

// ---------------------------------------------------------------------------
// simulate
// ---------------------------------------------------------------------------

#[derive(Args, Debug)]
pub struct SimulateArgs {
    /// Scan an existing stand JSON instead of generating one.
    #[arg(long, conflicts_with_all = ["extent", "tiers", "terrain"])]
    pub stand: Option<PathBuf>,
    /// Stand extent: SIDE or WIDTHxHEIGHT, meters.
    #[arg(long, default_value = "32")]
    pub extent: String,
    /// Stems per height tier, e.g. 4,5,4.
    #[arg(long, default_value = "4,5,4")]
    pub tiers: String,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Scan configuration JSON; explicit flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub pulse_density: Option<f64>,
    #[arg(long)]
    pub max_returns: Option<u8>,
    /// Scanner half field of view from nadir, degrees.
    #[arg(long)]
    pub half_angle: Option<f64>,
    #[arg(long)]
    pub attenuation: Option<f64>,
    #[arg(long)]
    pub ground_reflect: Option<f64>,
    /// `flat` or `ramp:<slope>`.
    #[arg(long, default_value = "flat")]
    pub terrain: String,
    #[arg(long)]
    pub out_cloud: PathBuf,
    #[arg(long)]
    pub out_stand: Option<PathBuf>,
    /// Per-point generator truth sidecar CSV.
    #[arg(long)]
    pub out_truth: Option<PathBuf>,
    /// Field-survey style stem map CSV.
    #[arg(long)]
    pub out_stems: Option<PathBuf>,
    #[arg(long, default_value = "plot")]
    pub plot_id: String,
}

pub fn run_simulate(args: &SimulateArgs) -> Result<()> {
    let stand = match &args.stand {
        Some(path) => {
            let text = formats::read_to_string(path)?;
            serde_json::from_str(&text)
                .map_err(|e| CliError::MalformedInput(format!("{}: {e}", path.display())))?
        }
        None => {
            let extent = parse_extent(&args.extent)?;
            let tiers = parse_tiers(&args.tiers)?;
            let mut stand = generate_stand(extent, tiers, args.seed)?;
            stand.terrain = parse_terrain(&args.terrain)?;
            stand
        }
    };

    let mut config = match &args.config {
        Some(path) => {
            let text = formats::read_to_string(path)?;
            serde_json::from_str::<ScanConfig>(&text)
                .map_err(|e| CliError::MalformedInput(format!("{}: {e}", path.display())))?
        }
        None => ScanConfig::default(),
    };
    config.seed = args.seed;
    if let Some(v) = args.pulse_density {
        config.pulse_density = v;
    }
    if let Some(v) = args.max_returns {
        config.max_returns = v;
    }
    if let Some(v) = args.half_angle {
        config.scan_half_angle_deg = v;
    }
    if let Some(v) = args.attenuation {
        config.attenuation = v;
    }
    if let Some(v) = args.ground_reflect {
        config.ground_reflect = v;
    }

    let scan = scan_stand(&stand, &config)?;
    formats::write_cloud(&args.out_cloud, &scan.cloud)?;
    if let Some(path) = &args.out_stand {
        formats::write_string(
            path,
            &format!("{}\n", serde_json::to_string_pretty(&stand).unwrap()),
        )?;
    }
    if let Some(path) = &args.out_truth {
        formats::write_truth(path, &scan.truth)?;
    }
    if let Some(path) = &args.out_stems {
        formats::write_stems(path, &args.plot_id, &field_stems(&stand))?;
    }
    println!(
        "simulated {} points from {} stems ({:.1} pt/m²)",
        scan.cloud.len(),
        stand.stems.len(),
        scan.cloud.len() as f64 / stand.area
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// dem
// ---------------------------------------------------------------------------

#[derive(Args, Debug)]
pub struct DemArgs {
    #[arg(long)]
    pub cloud: PathBuf,
    /// Raster resolution, meters per cell.
    #[arg(long, default_value_t = 1.0)]
    pub resolution: f64,
    /// Plain-text grid export.
    #[arg(long)]
    pub out_dem: Option<PathBuf>,
    /// Height-normalized cloud (adds the height_above_ground column).
    #[arg(long)]
    pub out_cloud: Option<PathBuf>,
}

pub fn run_dem(args: &DemArgs) -> Result<()> {
    if args.out_dem.is_none() && args.out_cloud.is_none() {
        return Err(CliError::InvalidArguments(
            "dem needs --out-dem and/or --out-cloud".into(),
        ));
    }
    let cloud = formats::read_cloud(&args.cloud)?;
    let ground: Vec<_> = cloud
        .points
        .iter()
        .filter(|p| p.is_ground)
        .cloned()
        .collect();
    if ground.is_empty() {
        return Err(CliError::MalformedInput(format!(
            "{}: no ground-classified points to build a DEM from",
            args.cloud.display()
        )));
    }
    let dem = Dem::build(&ground, args.resolution, Some(cloud.extent))?;
    if let Some(path) = &args.out_dem {
        formats::write_dem(path, &dem)?;
    }
    if let Some(path) = &args.out_cloud {
        let normalized = normalize_heights(&cloud, &dem)?;
        if normalized.clamped_below_ground > 0 {
            eprintln!(
                "warning: clamped {} points below the ground surface to height 0",
                normalized.clamped_below_ground
            );
        }
        formats::write_cloud(path, &normalized.cloud)?;
    }
    println!(
        "DEM {}x{} cells at {} m from {} ground returns",
        dem.n_cols(),
        dem.n_rows(),
        dem.resolution(),
        ground.len()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// stratify
// ---------------------------------------------------------------------------

#[derive(Args, Debug)]
pub struct StratifyArgs {
    #[arg(long)]
    pub cloud: PathBuf,
    /// Per-point layer assignment CSV (layer 0 = ground vegetation).
    #[arg(long)]
    pub out_layers: Option<PathBuf>,
    /// Layer statistics JSON.
    #[arg(long)]
    pub out_stats: Option<PathBuf>,
    /// Appendable fractions row for the occlusion fit.
    #[arg(long)]
    pub out_fractions: Option<PathBuf>,
    #[arg(long, default_value = "plot")]
    pub plot_id: String,
}

fn require_normalized(cloud: &canopy_core::PointCloud, path: &Path) -> Result<()> {
    if cloud
        .points
        .iter()
        .any(|p| !p.is_ground && p.height_above_ground.is_none())
    {
        return Err(CliError::MalformedInput(format!(
            "{}: cloud is not height-normalized (run the dem stage first)",
            path.display()
        )));
    }
    Ok(())
}

pub fn run_stratify(args: &StratifyArgs) -> Result<()> {
    let cloud = formats::read_cloud(&args.cloud)?;
    require_normalized(&cloud, &args.cloud)?;
    let result = stratify(&cloud)?;

    if let Some(path) = &args.out_layers {
        let mut out = String::from(formats::LAYER_HEADER);
        out.push('\n');
        let mut assignment: Vec<(u32, u32)> = Vec::with_capacity(result.total_assigned());
        for layer in &result.layers {
            for &pi in &layer.member_points {
                assignment.push((pi, layer.index_from_top));
            }
        }
        for &pi in &result.ground_vegetation {
            assignment.push((pi, 0));
        }
        assignment.sort_unstable();
        use std::fmt::Write as _;
        for (pi, layer) in assignment {
            let _ = writeln!(out, "{pi},{layer}");
        }
        formats::write_string(path, &out)?;
    }

    if let Some(path) = &args.out_stats {
        let summary = layer_summary(std::slice::from_ref(&result))?;
        let layers: Vec<serde_json::Value> = result
            .layers
            .iter()
            .map(|l| {
                serde_json::json!({
                    "layer": l.index_from_top,
                    "points": l.member_points.len(),
                    "starting_height_m": l.starting_height,
                    "thickness_m": l.thickness,
                    "density_pt_m2": l.density,
                })
            })
            .collect();
        let doc = serde_json::json!({
            "iterations": result.iterations,
            "layers": layers,
            "ground_vegetation_points": result.ground_vegetation.len(),
            "aggregate": {
                "starting_height_m": summary.aggregate.starting_height_mean,
                "thickness_m": summary.aggregate.thickness_mean,
                "density_pt_m2": summary.aggregate.density_mean,
            },
        });
        formats::write_string(
            path,
            &format!("{}\n", serde_json::to_string_pretty(&doc).unwrap()),
        )?;
    }

    if let Some(path) = &args.out_fractions {
        let pcd = point_density(&cloud)?;
        let sample = observed_fractions(&result, pcd, args.plot_id.clone())?;
        // Append to an existing table so multi-plot runs accumulate rows.
        let mut rows = if path.exists() {
            formats::read_fractions(path)?
        } else {
            Vec::new()
        };
        rows.retain(|s| s.plot_id != sample.plot_id);
        rows.push(sample);
        formats::write_fractions(path, &rows)?;
    }

    println!(
        "stratified {} points into {} layers (+{} ground vegetation) in {} iterations",
        result.total_assigned(),
        result.layers.len(),
        result.ground_vegetation.len(),
        result.iterations
    );
    for layer in &result.layers {
        println!(
            "  layer {}: {} points, density {:.2} pt/m², starts {:.1} m, {:.1} m thick",
            layer.index_from_top,
            layer.member_points.len(),
            layer.density,
            layer.starting_height,
            layer.thickness
        );
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// decimate
// ---------------------------------------------------------------------------

#[derive(Args, Debug)]
pub struct DecimateArgs {
    #[arg(long)]
    pub cloud: PathBuf,
    /// Nominal density target, pt/m².
    #[arg(long)]
    pub target_pcd: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub out_cloud: PathBuf,
    /// Decimation metadata JSON.
    #[arg(long)]
    pub out_meta: Option<PathBuf>,
}

pub fn run_decimate(args: &DecimateArgs) -> Result<()> {
    let cloud = formats::read_cloud(&args.cloud)?;
    let spec = DecimationSpec {
        target_pcd: args.target_pcd,
        seed: args.seed,
    };
    let out = decimate(&cloud, &spec)?;
    formats::write_cloud(&args.out_cloud, &out.cloud)?;
    if let Some(path) = &args.out_meta {
        let doc = serde_json::json!({
            "target_pcd": spec.target_pcd,
            "achieved_pcd": out.achieved_pcd,
            "seed": spec.seed,
        });
        formats::write_string(
            path,
            &format!("{}\n", serde_json::to_string_pretty(&doc).unwrap()),
        )?;
    }
    println!(
        "decimated {} -> {} points (target {} pt/m², achieved {:.3} pt/m², cell {:.3} m)",
        cloud.len(),
        out.cloud.len(),
        spec.target_pcd,
        out.achieved_pcd,
        compute_afp(spec.target_pcd)?
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// fit / required-density
// ---------------------------------------------------------------------------

#[derive(Args, Debug)]
pub struct FitArgs {
    /// Fractions table (plot_id,p1..p5).
    #[arg(long)]
    pub fractions: PathBuf,
    #[arg(long)]
    pub out_model: PathBuf,
}

pub fn run_fit(args: &FitArgs) -> Result<()> {
    let samples = formats::read_fractions(&args.fractions)?;
    let model = fit_theta(&samples)?;
    formats::write_model(&args.out_model, &model)?;
    println!(
        "fitted theta {:.6} (MSE {:.6}, {} pooled pairs from {} plots)",
        model.theta,
        model.fit_mse,
        model.n_samples,
        samples.len()
    );
    Ok(())
}

#[derive(Args, Debug)]
pub struct RequiredDensityArgs {
    /// Fitted model JSON.
    #[arg(long)]
    pub model: PathBuf,
    /// Density at which top-layer accuracy plateaus.
    #[arg(long, default_value_t = DEFAULT_PCD_MIN)]
    pub pcd_min: f64,
    /// Deepest layer to predict for.
    #[arg(long, default_value_t = 3)]
    pub max_layer: u32,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn run_required_density(args: &RequiredDensityArgs) -> Result<()> {
    let model = formats::read_model(&args.model)?;
    let rows = crate::sweep::required_density_rows(&model, args.pcd_min, args.max_layer)?;
    let doc = serde_json::json!({
        "theta": model.theta,
        "pcd_min": args.pcd_min,
        "required_pcd": rows,
    });
    let text = format!("{}\n", serde_json::to_string_pretty(&doc).unwrap());
    if let Some(path) = &args.out {
        formats::write_string(path, &text)?;
    }
    print!("{text}");
    Ok(())
}

// ---------------------------------------------------------------------------
// segment
// ---------------------------------------------------------------------------

#[derive(Args, Debug)]
pub struct SegmentArgs {
    #[arg(long)]
    pub cloud: PathBuf,
    #[arg(long)]
    pub out_crowns: PathBuf,
    /// Neighborhood a local maximum must dominate, meters.
    #[arg(long, default_value_t = 2.0)]
    pub min_separation: f64,
    /// CHM cell width, meters.
    #[arg(long, default_value_t = 0.5)]
    pub cell_width: f64,
    /// Points beyond this distance from every apex stay unassigned, meters.
    #[arg(long, default_value_t = 10.0)]
    pub max_assignment_radius: f64,
    /// Minimum points for a crown to be kept.
    #[arg(long, default_value_t = 5)]
    pub min_crown_points: usize,
}

pub fn run_segment(args: &SegmentArgs) -> Result<()> {
    let cloud = formats::read_cloud(&args.cloud)?;
    require_normalized(&cloud, &args.cloud)?;
    let segmenter = MaximaSegmenter {
        params: SegmenterParams {
            min_separation: args.min_separation,
            cell_width: args.cell_width,
            max_assignment_radius: args.max_assignment_radius,
            min_crown_points: args.min_crown_points,
        },
    };
    let crowns = segment_cloud_with(&cloud, &segmenter)?;
    formats::write_crowns(&args.out_crowns, &crowns)?;
    println!(
        "segmented {} crowns from {} points",
        crowns.len(),
        cloud.len()
    );
    Ok(())
}

// ---------------------------------------------------------------------------
// evaluate
// ---------------------------------------------------------------------------

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub crowns: PathBuf,
    #[arg(long)]
    pub stems: PathBuf,
    /// Restrict the stem map to one plot id.
    #[arg(long)]
    pub plot_id: Option<String>,
    /// Plot center as X,Y meters.
    #[arg(long)]
    pub center: String,
    #[arg(long, default_value_t = PlotGeometry::STANDARD_RADIUS)]
    pub radius: f64,
    #[arg(long, default_value_t = PlotGeometry::STANDARD_BUFFER)]
    pub buffer: f64,
    /// Drop dead stems before matching.
    #[arg(long, default_value_t = false)]
    pub exclude_dead: bool,
    /// Also report overstory/understory breakdowns.
    #[arg(long, default_value_t = false)]
    pub class_split: bool,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn class_json(counts: &ClassCounts) -> serde_json::Value {
    let scores = counts.scores();
    serde_json::json!({
        "mt": counts.mt,
        "oe": counts.oe,
        "ce": counts.ce,
        "recall": scores.recall,
        "precision": scores.precision,
        "f_score": scores.f_score,
    })
}

pub fn run_evaluate(args: &EvaluateArgs) -> Result<()> {
    let crowns = formats::read_crowns(&args.crowns)?;
    let mut stems = formats::read_stems(&args.stems, args.plot_id.as_deref())?;
    if args.exclude_dead {
        stems.retain(|s| !matches!(s.crown_class, CrownClass::Dead));
    }
    let (cx, cy) = parse_center(&args.center)?;
    let plot = PlotGeometry::new(cx, cy, args.radius, args.buffer)?;
    let result = match_trees(&crowns, &stems, &plot);
    let scores = metrics(result.mt, result.oe, result.ce);

    let mut doc = serde_json::json!({
        "plot_id": args.plot_id.clone().unwrap_or_default(),
        "mt": result.mt,
        "oe": result.oe,
        "ce": result.ce,
        "recall": scores.recall,
        "precision": scores.precision,
        "f_score": scores.f_score,
        "excluded_buffer_crowns": result.excluded_buffer_crowns,
        "out_of_region_crowns": result.out_of_region_crowns,
        "degenerate_crowns": result.degenerate_crowns,
    });
    if args.class_split {
        let (over, under) = split_by_class(&result, &crowns, &stems);
        doc["by_class"] = serde_json::json!({
            "overstory": class_json(&over),
            "understory": class_json(&under),
        });
    }
    let text = format!("{}\n", serde_json::to_string_pretty(&doc).unwrap());
    if let Some(path) = &args.out {
        formats::write_string(path, &text)?;
    }
    print!("{text}");
    Ok(())
}

// ---------------------------------------------------------------------------
// sweep / report
// ---------------------------------------------------------------------------

#[derive(Args, Debug)]
pub struct SweepArgs {
    /// Plot manifest JSON: {"plots": [{plot_id, cloud, stems, center, radius, buffer}]}.
    #[arg(long)]
    pub plots: PathBuf,
    /// Comma-separated density targets; defaults to the standard ladder.
    #[arg(long)]
    pub targets: Option<String>,
    #[arg(long, default_value_t = 5)]
    pub repetitions: u32,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = false)]
    pub class_split: bool,
    #[arg(long, default_value_t = false)]
    pub exclude_dead: bool,
    /// Sweep configuration JSON; explicit flags take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
    #[arg(long)]
    pub out_json: Option<PathBuf>,
}

fn load_plots(manifest: &Path) -> Result<Vec<PlotInput>> {
    let text = formats::read_to_string(manifest)?;
    let doc: serde_json::Value = serde_json::from_str(&text)
        .map_err(|e| CliError::MalformedInput(format!("{}: {e}", manifest.display())))?;
    let entries = doc.get("plots").and_then(|v| v.as_array()).ok_or_else(|| {
        CliError::MalformedInput(format!("{}: missing plots array", manifest.display()))
    })?;
    let base = manifest.parent().unwrap_or_else(|| Path::new("."));
    let mut plots = Vec::new();
    for (i, entry) in entries.iter().enumerate() {
        let field = |name: &str| {
            entry.get(name).ok_or_else(|| {
                CliError::MalformedInput(format!(
                    "{}: plot {i}: missing field {name}",
                    manifest.display()
                ))
            })
        };
        let plot_id = field("plot_id")?
            .as_str()
            .ok_or_else(|| {
                CliError::MalformedInput(format!(
                    "{}: plot {i}: plot_id must be a string",
                    manifest.display()
                ))
            })?
            .to_string();
        let rel = |v: &serde_json::Value| -> Result<PathBuf> {
            let s = v.as_str().ok_or_else(|| {
                CliError::MalformedInput(format!(
                    "{}: plot {i}: path must be a string",
                    manifest.display()
                ))
            })?;
            Ok(base.join(s))
        };
        let cloud_path = rel(field("cloud")?)?;
        let stems_path = rel(field("stems")?)?;
        let center = field("center")?
            .as_array()
            .filter(|a| a.len() == 2)
            .and_then(|a| Some((a[0].as_f64()?, a[1].as_f64()?)))
            .ok_or_else(|| {
                CliError::MalformedInput(format!(
                    "{}: plot {i}: center must be [x, y]",
                    manifest.display()
                ))
            })?;
        let radius = entry
            .get("radius")
            .and_then(|v| v.as_f64())
            .unwrap_or(PlotGeometry::STANDARD_RADIUS);
        let buffer = entry
            .get("buffer")
            .and_then(|v| v.as_f64())
            .unwrap_or(PlotGeometry::STANDARD_BUFFER);

        plots.push(PlotInput {
            cloud: formats::read_cloud(&cloud_path)?,
            stems: formats::read_stems(&stems_path, Some(&plot_id))?,
            plot: PlotGeometry::new(center.0, center.1, radius, buffer)?,
            plot_id,
        });
    }
    Ok(plots)
}

pub fn run_sweep(args: &SweepArgs) -> Result<()> {
    if args.out_csv.is_none() && args.out_json.is_none() {
        return Err(CliError::InvalidArguments(
            "sweep needs --out-csv and/or --out-json".into(),
        ));
    }
    let mut config = match &args.config {
        Some(path) => {
            let text = formats::read_to_string(path)?;
            serde_json::from_str::<SweepConfig>(&text)
                .map_err(|e| CliError::MalformedInput(format!("{}: {e}", path.display())))?
        }
        None => SweepConfig {
            pcd_targets: DEFAULT_TARGETS.to_vec(),
            ..Default::default()
        },
    };
    if let Some(spec) = &args.targets {
        config.pcd_targets = parse_targets(spec)?;
    }
    config.repetitions = args.repetitions;
    config.seed = args.seed;
    config.class_split |= args.class_split;
    config.exclude_dead |= args.exclude_dead;

    let plots = load_plots(&args.plots)?;
    let outcome = density_sweep(&plots, &config)?;

    if let Some(path) = &args.out_csv {
        formats::write_string(path, &rows_csv(&outcome.rows))?;
    }
    if let Some(path) = &args.out_json {
        formats::write_string(
            path,
            &format!("{}\n", serde_json::to_string_pretty(&outcome).unwrap()),
        )?;
    }
    for failure in &outcome.failures {
        eprintln!("warning: {failure}");
    }
    println!(
        "swept {} plots x {} targets x {} repetitions: {} rows, theta {:.4}, source density {:.2} pt/m²",
        plots.len(),
        config.pcd_targets.len(),
        config.repetitions,
        outcome.rows.len(),
        outcome.model.theta,
        outcome.source_pcd_mean
    );
    Ok(())
}

#[derive(Args, Debug)]
pub struct ReportArgs {
    /// Sweep results JSON.
    #[arg(long)]
    pub results: PathBuf,
    #[arg(long, default_value_t = DEFAULT_PCD_MIN)]
    pub pcd_min: f64,
    #[arg(long)]
    pub out_csv: Option<PathBuf>,
    #[arg(long)]
    pub out_json: Option<PathBuf>,
}

pub fn run_report(args: &ReportArgs) -> Result<()> {
    let text = formats::read_to_string(&args.results)?;
    let outcome: SweepOutcome = serde_json::from_str(&text)
        .map_err(|e| CliError::MalformedInput(format!("{}: {e}", args.results.display())))?;
    if outcome.rows.is_empty() {
        return Err(CliError::MalformedInput(format!(
            "{}: results table is empty",
            args.results.display()
        )));
    }
    let aggregated = aggregate_rows(&outcome.rows);
    if let Some(path) = &args.out_csv {
        formats::write_string(path, &report_csv(&aggregated))?;
    }
    let summary = summary_document(&outcome, args.pcd_min)?;
    let text = format!("{}\n", serde_json::to_string_pretty(&summary).unwrap());
    if let Some(path) = &args.out_json {
        formats::write_string(path, &text)?;
    }
    print!("{text}");
    Ok(())
}
