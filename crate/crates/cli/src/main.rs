use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use robustte::agent::PolicyModel;
use robustte::baselines::Scheme;
use robustte::dataio::{synth_trace, SynthPattern, SynthSpec};
use robustte::harness::{
    churn_report, evaluate, export_plot_data, overutil_report, run_sweeps, train, write_csv,
    write_learning_curve, Experiment, ExperimentConfig, RSize,
};
use robustte::netmodel::load_topology;
use robustte::ErrorKind;

#[derive(Parser)]
#[command(name = "robustte", version, about = "Robust path selection experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train the path-selection policy and write its learning curve.
    Train {
        #[command(flatten)]
        common: Common,
        /// Continue from this checkpoint.
        #[arg(long)]
        resume: Option<PathBuf>,
    },
    /// Compare all configured schemes on the test windows.
    Evaluate {
        #[command(flatten)]
        common: Common,
        /// Checkpoint for the drl scheme; defaults to `<output_dir>/model.ckpt`.
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Per-interval path churn of MLU-optimal routing and the agent.
    Churn {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        model: Option<PathBuf>,
    },
    /// Per-link utilization change when traffic stays on the previous paths.
    Overutil {
        #[command(flatten)]
        common: Common,
    },
    /// Run the w and c sweeps and write the figure CSVs.
    Export {
        #[command(flatten)]
        common: Common,
    },
    /// Print the robust-set size calibrated on the training windows.
    CalibrateR {
        #[command(flatten)]
        common: Common,
    },
    /// Generate a synthetic trace CSV.
    Synth(SynthArgs),
}

#[derive(Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long, short)]
    config: PathBuf,
    #[arg(long)]
    w: Option<usize>,
    #[arg(long)]
    c: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
    /// Robust-set size or "auto".
    #[arg(long)]
    r_size: Option<RSize>,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    scale: Option<f64>,
    /// Comma-separated scheme list.
    #[arg(long, value_delimiter = ',')]
    schemes: Option<Vec<Scheme>>,
    /// Sets the split, init and sample seeds to `s`, `s+1`, `s+2`.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    output_dir: Option<PathBuf>,
}

impl Common {
    fn config(&self) -> Result<ExperimentConfig> {
        let mut cfg = ExperimentConfig::load(&self.config)?;
        if let Some(v) = self.w {
            cfg.w = v;
        }
        if let Some(v) = self.c {
            cfg.c = v;
        }
        if let Some(v) = self.k {
            cfg.k = v;
        }
        if let Some(v) = self.r_size {
            cfg.r_size = v;
        }
        if let Some(v) = self.epochs {
            cfg.epochs = v;
        }
        if let Some(v) = self.scale {
            cfg.scale = v;
        }
        if let Some(v) = &self.schemes {
            cfg.schemes = v.clone();
        }
        if let Some(s) = self.seed {
            cfg.seeds.split = s;
            cfg.seeds.init = s.wrapping_add(1);
            cfg.seeds.sample = s.wrapping_add(2);
        }
        if let Some(v) = &self.output_dir {
            cfg.output_dir = v.clone();
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn experiment(&self) -> Result<Experiment> {
        let exp = Experiment::prepare(self.config()?)?;
        std::fs::create_dir_all(&exp.config.output_dir)
            .with_context(|| format!("creating {}", exp.config.output_dir.display()))?;
        log::info!(
            "{} nodes, {} pairs, {} candidate paths, {} intervals, r_size {}, config {}",
            exp.topo.node_count(),
            exp.cps.pair_count(),
            exp.cps.total_paths(),
            exp.trace.len(),
            exp.r_size,
            exp.hash
        );
        Ok(exp)
    }
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    topology: PathBuf,
    #[arg(long, default_value = "gravity")]
    pattern: SynthPattern,
    #[arg(long, default_value_t = 288)]
    length: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1.0)]
    total_demand: f64,
    #[arg(long, default_value_t = 12)]
    period: usize,
    #[arg(long, default_value_t = 0.05)]
    noise: f64,
    /// Restrict traffic to `SRC:DST` pairs, comma-separated.
    #[arg(long, value_delimiter = ',')]
    pairs: Option<Vec<String>>,
    #[arg(long, short)]
    out: PathBuf,
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    let f = File::create(path).with_context(|| format!("writing {}", path.display()))?;
    Ok(BufWriter::new(f))
}

fn load_model(path: &Path) -> Result<PolicyModel> {
    PolicyModel::load_file(path).with_context(|| format!("loading checkpoint {}", path.display()))
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Train { common, resume } => {
            let exp = common.experiment()?;
            let out = &exp.config.output_dir;
            let resume = resume.as_deref().map(load_model).transpose()?;
            let trained = train(&exp, resume, Some(out))?;
            write_learning_curve(&trained.curve, &exp.hash, create(&out.join("learning_curve.csv"))?)?;
            std::fs::write(out.join("config.toml"), exp.config.to_toml())?;
            if let Some(last) = trained.curve.last() {
                println!(
                    "trained {} epochs, final mean reward {:.4}, mean MLU ratio {:.4}",
                    trained.curve.len(),
                    last.mean_reward,
                    last.mean_mlu_ratio
                );
            }
        }
        Command::Evaluate { common, model } => {
            let exp = common.experiment()?;
            let out = &exp.config.output_dir;
            let model = if exp.config.schemes.contains(&Scheme::Drl) {
                let path = model.unwrap_or_else(|| out.join("model.ckpt"));
                Some(load_model(&path)?)
            } else {
                None
            };
            let report = evaluate(&exp, model.as_ref())?;
            report.write_windows(create(&out.join("evaluation_windows.csv"))?)?;
            report.write_summary(create(&out.join("evaluation_summary.csv"))?)?;
            report.write_metadata(&exp, create(&out.join("evaluation_meta.toml"))?)?;
            println!("{:<12} {:>10} {:>10} {:>8}", "scheme", "mean_mlu", "ratio", "churn");
            for s in &report.summaries {
                println!(
                    "{:<12} {:>10.4} {:>10.4} {:>8.2}",
                    s.scheme.as_str(),
                    s.mean_mlu,
                    s.mean_mlu_ratio,
                    s.mean_churn
                );
            }
        }
        Command::Churn { common, model } => {
            let exp = common.experiment()?;
            let model = model.as_deref().map(load_model).transpose()?;
            let rows = churn_report(&exp, model.as_ref())?;
            write_csv(create(&exp.config.output_dir.join("churn.csv"))?, &rows)?;
            println!("{} churn rows", rows.len());
        }
        Command::Overutil { common } => {
            let exp = common.experiment()?;
            let rows = overutil_report(&exp)?;
            write_csv(create(&exp.config.output_dir.join("overutil.csv"))?, &rows)?;
            println!("{} link rows", rows.len());
        }
        Command::Export { common } => {
            let cfg = common.config()?;
            let data = run_sweeps(&cfg)?;
            for p in export_plot_data(&cfg.output_dir, &data)? {
                println!("{}", p.display());
            }
        }
        Command::CalibrateR { common } => {
            let mut cfg = common.config()?;
            cfg.r_size = RSize::default();
            let exp = Experiment::prepare(cfg)?;
            println!("{}", exp.r_size);
        }
        Command::Synth(args) => {
            let topo = load_topology(&args.topology)?;
            let pairs = args
                .pairs
                .map(|list| {
                    list.iter()
                        .map(|p| {
                            p.split_once(':')
                                .map(|(s, d)| (s.to_owned(), d.to_owned()))
                                .ok_or_else(|| robustte::Error::Config(format!("pair {p:?} is not SRC:DST")))
                        })
                        .collect::<robustte::Result<Vec<_>>>()
                })
                .transpose()?;
            let spec = SynthSpec {
                pattern: args.pattern,
                length: args.length,
                seed: args.seed,
                total_demand: args.total_demand,
                pairs,
                period: args.period,
                noise: args.noise,
                ..SynthSpec::default()
            };
            let trace = synth_trace(&topo, &spec)?;
            trace.write_csv(&topo, create(&args.out)?)?;
        }
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<robustte::Error>()) {
        Some(e) => match e.kind() {
            ErrorKind::Config => 2,
            ErrorKind::Data => 3,
            ErrorKind::Solver => 4,
            ErrorKind::Other => 1,
        },
        None => 1,
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
