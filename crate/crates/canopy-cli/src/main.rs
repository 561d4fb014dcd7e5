use clap::{Parser, Subcommand};

use canopy_cli::commands::{self, *};

/// Forest LiDAR canopy analysis: stratification, occlusion modelling,
/// density sweeps and segmentation evaluation.
#[derive(Parser, Debug)]
#[command(name = "canopy", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic stand and scan it into a point cloud.
    Simulate(SimulateArgs),
    /// Build a ground raster and normalize point heights.
    Dem(DemArgs),
    /// Peel a normalized cloud into canopy layers.
    Stratify(StratifyArgs),
    /// Thin a cloud to a nominal density, keeping whole pulses.
    Decimate(DecimateArgs),
    /// Fit the layer-fraction model to a fractions table.
    Fit(FitArgs),
    /// Predict the density required to reach deeper layers.
    RequiredDensity(RequiredDensityArgs),
    /// Segment a normalized cloud into crowns per canopy layer.
    Segment(SegmentArgs),
    /// Match crowns against a stem map and score the segmentation.
    Evaluate(EvaluateArgs),
    /// Run the full density-sweep experiment over a set of plots.
    Sweep(SweepArgs),
    /// Aggregate sweep results into report tables and the model summary.
    Report(ReportArgs),
}

fn configure_threads() {
    if let Ok(spec) = std::env::var("CANOPY_THREADS") {
        match spec.trim().parse::<usize>() {
            Ok(n) if n > 0 => {
                let _ = rayon::ThreadPoolBuilder::new()
                    .num_threads(n)
                    .build_global();
            }
            _ => eprintln!("warning: ignoring CANOPY_THREADS={spec:?} (want a positive integer)"),
        }
    }
}

fn main() {
    configure_threads();
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Simulate(args) => commands::run_simulate(args),
        Command::Dem(args) => commands::run_dem(args),
        Command::Stratify(args) => commands::run_stratify(args),
        Command::Decimate(args) => commands::run_decimate(args),
        Command::Fit(args) => commands::run_fit(args),
        Command::RequiredDensity(args) => commands::run_required_density(args),
        Command::Segment(args) => commands::run_segment(args),
        Command::Evaluate(args) => commands::run_evaluate(args),
        Command::Sweep(args) => commands::run_sweep(args),
        Command::Report(args) => commands::run_report(args),
    };
    if let Err(error) = result {
        eprintln!("error: {error}");
        std::process::exit(error.exit_code());
    }
}
