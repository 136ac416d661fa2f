use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use tvsup::experiment::{cmd_compare, cmd_phantom, cmd_run, Overrides, RunConfig};
use tvsup::TvMode;

#[derive(Parser)]
#[command(name = "tvsup", version, about = "TV-superiorized ART for IMRT inverse planning")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one solver arm and write summary.json, dvh.csv, iterates.csv, intensities.csv.
    Run {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = true, action = clap::ArgAction::Set)]
        superiorize: bool,
    },
    /// Run both arms from the same start and write compare.json.
    Compare {
        #[command(flatten)]
        common: Common,
    },
    /// Write phantom_labels.csv and matrix_stats.json.
    Phantom {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Args)]
struct Common {
    #[arg(long)]
    config: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    tv_mode: Option<TvMode>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    kernel_a: Option<f64>,
    #[arg(long)]
    inner_steps: Option<usize>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long)]
    max_sweeps: Option<usize>,
}

impl Common {
    fn load(&self) -> Result<RunConfig, tvsup::experiment::ConfigError> {
        let mut cfg = RunConfig::load(&self.config)?;
        cfg.apply(&Overrides {
            lambda: self.lambda,
            kernel_a: self.kernel_a,
            inner_steps: self.inner_steps,
            epsilon: self.epsilon,
            max_sweeps: self.max_sweeps,
            seed: self.seed,
            tv_mode: self.tv_mode,
            output_dir: self.out.clone(),
        })?;
        Ok(cfg)
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let common = match &cli.command {
        Command::Run { common, .. } | Command::Compare { common } | Command::Phantom { common } => common,
    };
    let config = match common.load() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(1);
        }
    };
    let result = match cli.command {
        Command::Run { superiorize, .. } => cmd_run(config, superiorize).map(|o| {
            let s = o.arm.trace.last();
            println!(
                "{}: sweep {} prox {:.4} Gy tv {:.4} -> {}",
                if superiorize { "superiorized" } else { "basic" },
                s.sweep,
                s.proximity,
                s.tv,
                o.output_dir.display()
            );
            o.exit_code
        }),
        Command::Compare { .. } => cmd_compare(config).map(|o| {
            let r = &o.report;
            println!(
                "superiorized: sweeps {} tv {:.4} all_pass {}",
                r.superiorized.summary.sweeps_run, r.superiorized.summary.final_tv, r.superiorized.summary.all_pass
            );
            println!(
                "basic:        sweeps {} tv {:.4} all_pass {}",
                r.basic.summary.sweeps_run, r.basic.summary.final_tv, r.basic.summary.all_pass
            );
            println!(
                "basic capped at {}: all_pass {} failed {:?}",
                r.capped_at_sweeps, r.basic_capped.summary.all_pass, r.basic_capped_failed
            );
            println!("tv reduction {:.2}%", r.tv_reduction_pct);
            o.exit_code
        }),
        Command::Phantom { .. } => cmd_phantom(config).map(|s| {
            println!("{}x{} matrix, {} nonzeros", s.rows, s.cols, s.nnz);
            0
        }),
    };
    match result {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
