use clap::{Parser, Subcommand};
use elastoflow::config::RunConfig;
use elastoflow::convergence::{convergence_study, Axis};
use elastoflow::error::Result;
use elastoflow::ledger;
use elastoflow::plot::emit_plots;
use elastoflow::run::run;
use elastoflow::snapshot::read_snapshot;
use elastoflow::verify::run_verification;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

/// Pseudospectral solver for an incompressible viscoelastic fluid with
/// scalar stress diffusion and Korteweg coupling on the 2D periodic box.
#[derive(Parser)]
#[command(name = "elastoflow", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a simulation from a configuration file.
    Run {
        /// Path to a `key = value` configuration file.
        config: PathBuf,
    },
    /// Sweep one axis of a configuration and report observed orders.
    Converge {
        config: PathBuf,
        /// Axis to sweep: dt, l_b, n_v or N.
        #[arg(long)]
        axis: String,
        /// Comma-separated levels, coarsest first (e.g. 4e-3,2e-3,1e-3).
        #[arg(long, value_delimiter = ',')]
        levels: Vec<f64>,
        /// Where to write the rate table (defaults to the config's output dir).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the built-in oracle and property suite.
    Verify,
    /// Render the standard SVG plots from a ledger CSV.
    Plot {
        ledger: PathBuf,
        /// Output directory (defaults to the ledger's directory).
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print the header and field statistics of a snapshot.
    Inspect { snapshot: PathBuf },
}

fn cmd_run(config_path: &PathBuf) -> Result<()> {
    let text = fs::read_to_string(config_path)?;
    let config = RunConfig::parse(&text)?;
    let summary = run(&config)?;
    print!("{}", summary.report_text(&config));
    println!("outputs in {}", config.out_dir.display());
    Ok(())
}

fn cmd_converge(
    config_path: &PathBuf,
    axis: &str,
    levels: &[f64],
    out: Option<&PathBuf>,
) -> Result<bool> {
    let text = fs::read_to_string(config_path)?;
    let config = RunConfig::parse(&text)?;
    let axis = Axis::parse(axis)?;
    let table = convergence_study(&config, axis, levels)?;
    let rendered = table.render_text();
    print!("{rendered}");
    let dir = out.cloned().unwrap_or_else(|| config.out_dir.clone());
    fs::create_dir_all(&dir)?;
    fs::write(dir.join(format!("rates_{}.txt", table.axis.name())), &rendered)?;
    Ok(table.flagged())
}

fn cmd_plot(ledger_path: &PathBuf, out: Option<&PathBuf>) -> Result<()> {
    let text = fs::read_to_string(ledger_path)?;
    let rows = ledger::from_csv(&text)?;
    let dir = out
        .cloned()
        .or_else(|| ledger_path.parent().map(|p| p.to_path_buf()))
        .unwrap_or_else(|| PathBuf::from("."));
    fs::create_dir_all(&dir)?;
    for (name, svg) in emit_plots(&rows)? {
        let path = dir.join(&name);
        fs::write(&path, svg)?;
        println!("wrote {}", path.display());
    }
    Ok(())
}

fn cmd_inspect(snapshot_path: &PathBuf) -> Result<()> {
    let bytes = fs::read(snapshot_path)?;
    let (state, header) = read_snapshot(&bytes)?;
    println!("snapshot {}", snapshot_path.display());
    println!("  grid        : {} x {} on box length {}", header.n, header.n, header.length);
    println!("  time        : {}", header.time);
    println!(
        "  params      : rho {} nu {} nu1 {} mu {} sigma {}",
        header.params.rho, header.params.nu, header.params.nu1, header.params.mu,
        header.params.sigma
    );
    println!(
        "  indices     : n_v {} l_b {} n_cut {}",
        header.n_v, header.l_b, header.n_cut
    );
    let (b_lo, b_hi) = state.b.min_max();
    println!("  b range     : [{b_lo:.9}, {b_hi:.9}], mean {:.9}", state.b.mean());
    println!("  ||v||_2     : {:.9e}", state.v.l2_norm());
    println!("  max |div v| : {:.3e}", state.v.max_divergence());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome: Result<bool> = match &cli.command {
        Command::Run { config } => cmd_run(config).map(|_| false),
        Command::Converge { config, axis, levels, out } => {
            cmd_converge(config, axis, levels, out.as_ref())
        }
        Command::Verify => Ok(run_verification() > 0),
        Command::Plot { ledger, out } => cmd_plot(ledger, out.as_ref()).map(|_| false),
        Command::Inspect { snapshot } => cmd_inspect(snapshot).map(|_| false),
    };
    match outcome {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
