//! File formats: point-cloud CSV with JSON metadata sidecar, stem maps,
//! crowns, fractions, DEM grids and model documents.
//!
//! The cloud interchange format is a CSV with header
//! `x,y,z,return_number,returns_of_pulse,pulse_id,is_ground`, meter values
//! with three decimals, plus a sidecar `<name>.meta.json` carrying
//! `{"area_m2": ..., "extent": [minx, miny, maxx, maxy]}`. Height-normalized
//! clouds append a `height_above_ground` column; readers accept both shapes.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use canopy_core::cloud::{Extent, LidarPoint, PointCloud};
use canopy_core::dem::Dem;
use canopy_core::evaluate::{CrownClass, FieldStem};
use canopy_core::occlusion::{FractionSample, LogSeriesModel, N_TRACKED_LAYERS};
use canopy_core::segment::TreeCrown;
use canopy_core::simulate::PointTruth;

use crate::error::{CliError, Result};

pub const CLOUD_HEADER: &str = "x,y,z,return_number,returns_of_pulse,pulse_id,is_ground";
pub const CLOUD_HEADER_NORMALIZED: &str =
    "x,y,z,return_number,returns_of_pulse,pulse_id,is_ground,height_above_ground";
pub const STEM_HEADER: &str = "plot_id,x,y,height_m,dbh_cm,crown_class,species";
pub const CROWN_HEADER: &str = "crown_id,apex_x,apex_y,apex_height,source_layer,n_points";
pub const FRACTION_HEADER: &str = "plot_id,p1,p2,p3,p4,p5";
pub const TRUTH_HEADER: &str = "point_index,stem_id,tier";
pub const LAYER_HEADER: &str = "point_index,layer";

pub fn read_to_string(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| CliError::io(path, e))
}

pub fn write_string(path: &Path, content: &str) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
        }
    }
    fs::write(path, content).map_err(|e| CliError::io(path, e))
}

/// Sidecar path for a cloud CSV: `points.csv` → `points.meta.json`.
pub fn meta_path(cloud_path: &Path) -> PathBuf {
    cloud_path.with_extension("meta.json")
}

fn bad_line(path: &Path, line_no: usize, msg: impl std::fmt::Display) -> CliError {
    CliError::MalformedInput(format!("{}:{line_no}: {msg}", path.display()))
}

fn parse_field<T: std::str::FromStr>(
    path: &Path,
    line_no: usize,
    name: &str,
    value: &str,
) -> Result<T> {
    value
        .trim()
        .parse::<T>()
        .map_err(|_| bad_line(path, line_no, format!("cannot parse {name} from {value:?}")))
}

/// Reads a cloud CSV plus its metadata sidecar.
pub fn read_cloud(path: &Path) -> Result<PointCloud> {
    let text = read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| bad_line(path, 1, "empty point cloud file"))?;
    let has_heights = match header.trim() {
        h if h == CLOUD_HEADER => false,
        h if h == CLOUD_HEADER_NORMALIZED => true,
        other => {
            return Err(bad_line(
                path,
                1,
                format!("unrecognized cloud header {other:?}"),
            ));
        }
    };

    let mut points = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        let expected = if has_heights { 8 } else { 7 };
        if fields.len() != expected {
            return Err(bad_line(
                path,
                line_no,
                format!("expected {expected} fields, found {}", fields.len()),
            ));
        }
        let is_ground = match fields[6].trim() {
            "0" => false,
            "1" => true,
            other => {
                return Err(bad_line(
                    path,
                    line_no,
                    format!("is_ground must be 0/1, got {other}"),
                ))
            }
        };
        let mut point = LidarPoint::new(
            parse_field(path, line_no, "x", fields[0])?,
            parse_field(path, line_no, "y", fields[1])?,
            parse_field(path, line_no, "z", fields[2])?,
            parse_field(path, line_no, "return_number", fields[3])?,
            parse_field(path, line_no, "returns_of_pulse", fields[4])?,
            parse_field(path, line_no, "pulse_id", fields[5])?,
            is_ground,
        )
        .map_err(|e| bad_line(path, line_no, e))?;
        if has_heights {
            point.height_above_ground = Some(parse_field(
                path,
                line_no,
                "height_above_ground",
                fields[7],
            )?);
        }
        points.push(point);
    }

    let meta = meta_path(path);
    let meta_text = read_to_string(&meta)?;
    let doc: serde_json::Value = serde_json::from_str(&meta_text)
        .map_err(|e| CliError::MalformedInput(format!("{}: {e}", meta.display())))?;
    let area = doc
        .get("area_m2")
        .and_then(|v| v.as_f64())
        .ok_or_else(|| CliError::MalformedInput(format!("{}: missing area_m2", meta.display())))?;
    let extent_arr = doc
        .get("extent")
        .and_then(|v| v.as_array())
        .filter(|a| a.len() == 4)
        .ok_or_else(|| {
            CliError::MalformedInput(format!(
                "{}: extent must be [minx,miny,maxx,maxy]",
                meta.display()
            ))
        })?;
    let coords: Vec<f64> = extent_arr.iter().filter_map(|v| v.as_f64()).collect();
    if coords.len() != 4 {
        return Err(CliError::MalformedInput(format!(
            "{}: extent entries must be numbers",
            meta.display()
        )));
    }
    let extent = Extent::new(coords[0], coords[1], coords[2], coords[3])
        .map_err(|e| CliError::MalformedInput(format!("{}: {e}", meta.display())))?;

    PointCloud::new(points, extent, area).map_err(CliError::from)
}

/// Writes a cloud CSV (with the height column when any point carries one)
/// and its metadata sidecar.
pub fn write_cloud(path: &Path, cloud: &PointCloud) -> Result<()> {
    let has_heights = cloud.points.iter().any(|p| p.height_above_ground.is_some());
    let mut out = String::with_capacity(cloud.points.len() * 48 + 64);
    out.push_str(if has_heights {
        CLOUD_HEADER_NORMALIZED
    } else {
        CLOUD_HEADER
    });
    out.push('\n');
    for p in &cloud.points {
        let _ = write!(
            out,
            "{:.3},{:.3},{:.3},{},{},{},{}",
            p.x,
            p.y,
            p.z,
            p.return_number,
            p.returns_of_pulse,
            p.pulse_id,
            u8::from(p.is_ground)
        );
        if has_heights {
            let _ = write!(out, ",{:.3}", p.height_above_ground.unwrap_or(0.0));
        }
        out.push('\n');
    }
    write_string(path, &out)?;

    // Coordinates are written with three decimals; round the extent outward
    // at the same precision so boundary points stay inside on re-read.
    let meta = serde_json::json!({
        "area_m2": cloud.area,
        "extent": [
            (cloud.extent.min_x * 1000.0).floor() / 1000.0,
            (cloud.extent.min_y * 1000.0).floor() / 1000.0,
            (cloud.extent.max_x * 1000.0).ceil() / 1000.0,
            (cloud.extent.max_y * 1000.0).ceil() / 1000.0,
        ],
    });
    write_string(
        &meta_path(path),
        &format!("{}\n", serde_json::to_string_pretty(&meta).unwrap()),
    )
}

pub fn crown_class_label(class: CrownClass) -> &'static str {
    match class {
        CrownClass::Dominant => "dominant",
        CrownClass::CoDominant => "co-dominant",
        CrownClass::Intermediate => "intermediate",
        CrownClass::Overtopped => "overtopped",
        CrownClass::Dead => "dead",
    }
}

fn parse_crown_class(path: &Path, line_no: usize, value: &str) -> Result<CrownClass> {
    match value.trim() {
        "dominant" => Ok(CrownClass::Dominant),
        "co-dominant" => Ok(CrownClass::CoDominant),
        "intermediate" => Ok(CrownClass::Intermediate),
        "overtopped" => Ok(CrownClass::Overtopped),
        "dead" => Ok(CrownClass::Dead),
        other => Err(bad_line(
            path,
            line_no,
            format!("unknown crown class {other:?}"),
        )),
    }
}

/// Reads a stem map, optionally keeping only one plot's rows.
pub fn read_stems(path: &Path, plot_id: Option<&str>) -> Result<Vec<FieldStem>> {
    let text = read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| bad_line(path, 1, "empty stem map"))?;
    if header.trim() != STEM_HEADER {
        return Err(bad_line(
            path,
            1,
            format!("unrecognized stem header {header:?}"),
        ));
    }
    let mut stems = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 7 {
            return Err(bad_line(
                path,
                line_no,
                format!("expected 7 fields, found {}", fields.len()),
            ));
        }
        if let Some(wanted) = plot_id {
            if fields[0].trim() != wanted {
                continue;
            }
        }
        let stem = FieldStem::new(
            parse_field(path, line_no, "x", fields[1])?,
            parse_field(path, line_no, "y", fields[2])?,
            parse_field(path, line_no, "height_m", fields[3])?,
            parse_field(path, line_no, "dbh_cm", fields[4])?,
            parse_crown_class(path, line_no, fields[5])?,
            fields[6].trim(),
        )
        .map_err(|e| bad_line(path, line_no, e))?;
        stems.push(stem);
    }
    Ok(stems)
}

pub fn write_stems(path: &Path, plot_id: &str, stems: &[FieldStem]) -> Result<()> {
    let mut out = String::from(STEM_HEADER);
    out.push('\n');
    for s in stems {
        let _ = writeln!(
            out,
            "{plot_id},{:.3},{:.3},{:.3},{:.1},{},{}",
            s.x,
            s.y,
            s.height,
            s.dbh_cm,
            crown_class_label(s.crown_class),
            s.species
        );
    }
    write_string(path, &out)
}

pub fn write_crowns(path: &Path, crowns: &[TreeCrown]) -> Result<()> {
    let mut out = String::from(CROWN_HEADER);
    out.push('\n');
    for (i, c) in crowns.iter().enumerate() {
        let _ = writeln!(
            out,
            "{},{:.3},{:.3},{:.3},{},{}",
            i + 1,
            c.apex_x,
            c.apex_y,
            c.apex_height,
            c.source_layer,
            c.member_points.len()
        );
    }
    write_string(path, &out)
}

/// Reads crowns back; member point lists are not persisted by the format.
pub fn read_crowns(path: &Path) -> Result<Vec<TreeCrown>> {
    let text = read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| bad_line(path, 1, "empty crown file"))?;
    if header.trim() != CROWN_HEADER {
        return Err(bad_line(
            path,
            1,
            format!("unrecognized crown header {header:?}"),
        ));
    }
    let mut crowns = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 6 {
            return Err(bad_line(
                path,
                line_no,
                format!("expected 6 fields, found {}", fields.len()),
            ));
        }
        crowns.push(TreeCrown {
            apex_x: parse_field(path, line_no, "apex_x", fields[1])?,
            apex_y: parse_field(path, line_no, "apex_y", fields[2])?,
            apex_height: parse_field(path, line_no, "apex_height", fields[3])?,
            member_points: Vec::new(),
            source_layer: parse_field(path, line_no, "source_layer", fields[4])?,
        });
    }
    Ok(crowns)
}

pub fn write_fractions(path: &Path, samples: &[FractionSample]) -> Result<()> {
    let mut out = String::from(FRACTION_HEADER);
    out.push('\n');
    for s in samples {
        let _ = write!(out, "{}", s.plot_id);
        for p in &s.fractions {
            let _ = write!(out, ",{p:.6}");
        }
        out.push('\n');
    }
    write_string(path, &out)
}

pub fn read_fractions(path: &Path) -> Result<Vec<FractionSample>> {
    let text = read_to_string(path)?;
    let mut lines = text.lines().enumerate();
    let (_, header) = lines
        .next()
        .ok_or_else(|| bad_line(path, 1, "empty fraction table"))?;
    if header.trim() != FRACTION_HEADER {
        return Err(bad_line(
            path,
            1,
            format!("unrecognized fraction header {header:?}"),
        ));
    }
    let mut samples = Vec::new();
    for (idx, line) in lines {
        let line_no = idx + 1;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 1 + N_TRACKED_LAYERS {
            return Err(bad_line(
                path,
                line_no,
                format!(
                    "expected {} fields, found {}",
                    1 + N_TRACKED_LAYERS,
                    fields.len()
                ),
            ));
        }
        let mut fractions = [0.0f64; N_TRACKED_LAYERS];
        for (k, f) in fractions.iter_mut().enumerate() {
            *f = parse_field(path, line_no, "fraction", fields[k + 1])?;
        }
        samples.push(
            FractionSample::new(fields[0].trim(), fractions)
                .map_err(|e| bad_line(path, line_no, e))?,
        );
    }
    Ok(samples)
}

pub fn write_model(path: &Path, model: &LogSeriesModel) -> Result<()> {
    write_string(
        path,
        &format!("{}\n", serde_json::to_string_pretty(model).unwrap()),
    )
}

pub fn read_model(path: &Path) -> Result<LogSeriesModel> {
    let text = read_to_string(path)?;
    serde_json::from_str(&text)
        .map_err(|e| CliError::MalformedInput(format!("{}: {e}", path.display())))
}

/// Plain-text grid export: six header lines then row-major elevations with
/// the northernmost row first.
pub fn write_dem(path: &Path, dem: &Dem) -> Result<()> {
    let (ox, oy) = dem.origin();
    let mut out = String::new();
    let _ = writeln!(out, "ncols {}", dem.n_cols());
    let _ = writeln!(out, "nrows {}", dem.n_rows());
    let _ = writeln!(out, "xllcorner {ox}");
    let _ = writeln!(out, "yllcorner {oy}");
    let _ = writeln!(out, "cellsize {}", dem.resolution());
    let _ = writeln!(out, "nodata_value -9999");
    for row in (0..dem.n_rows()).rev() {
        for col in 0..dem.n_cols() {
            if col > 0 {
                out.push(' ');
            }
            let _ = write!(out, "{:.3}", dem.cell_elevation(col, row));
        }
        out.push('\n');
    }
    write_string(path, &out)
}

pub fn write_truth(path: &Path, truth: &[PointTruth]) -> Result<()> {
    let mut out = String::from(TRUTH_HEADER);
    out.push('\n');
    for (i, t) in truth.iter().enumerate() {
        let stem = t.stem.map_or(-1i64, |s| s as i64);
        let _ = writeln!(out, "{i},{stem},{}", t.tier);
    }
    write_string(path, &out)
}
