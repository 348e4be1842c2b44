//! `trustcm`: generate toy data, train an evidential countermeasure, score
//! trials and evaluate score files.
//!
//! Exit status is 0 on success, 1 on runtime or domain errors and 2 on
//! usage errors.

use std::fmt::Write as _;
use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use trustcm::data::{gen_blobs, read_dataset, read_scores, write_dataset, write_scores, BlobConfig, ScoreRecord};
use trustcm::metrics::TdcfCosts;
use trustcm::net::{load_checkpoint, predict, save_checkpoint, train, Objective, TrainConfig, TrainedModel};
use trustcm::opinion::Class;
use trustcm::report::{build_report, write_plot_data, write_report, EvalConfig, ScoreNormalization};

#[derive(Parser)]
#[command(
    name = "trustcm",
    version,
    about = "Evidential spoofing countermeasure with calibrated uncertainty"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a two-cluster synthetic dataset.
    Gen(GenArgs),
    /// Train a model and write its checkpoint and loss trace.
    Train(TrainArgs),
    /// Score a dataset with a checkpoint.
    Predict(PredictArgs),
    /// Compute EER, min t-DCF and calibration metrics for a score file.
    Eval(EvalArgs),
}

#[derive(Args)]
struct GenArgs {
    /// Samples per class.
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 2)]
    dim: usize,
    /// Distance between the class means along the first axis.
    #[arg(long, default_value_t = 6.0)]
    sep: f64,
    /// Fraction of samples that receive extra Gaussian noise.
    #[arg(long, default_value_t = 0.0)]
    noise: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum ObjectiveArg {
    Evidential,
    Softmax,
}

#[derive(Args)]
struct TrainArgs {
    #[arg(long)]
    data: PathBuf,
    /// Checkpoint path.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 50)]
    epochs: usize,
    #[arg(long, default_value_t = 32)]
    batch_size: usize,
    #[arg(long, default_value_t = 0.05)]
    lr: f64,
    /// Epochs over which the KL weight ramps from 0 to 1.
    #[arg(long, default_value_t = 10)]
    anneal_epochs: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 0.5)]
    unknown_threshold: f64,
    /// Hidden layer widths, comma-separated.
    #[arg(long, value_delimiter = ',', default_values_t = [32, 32])]
    hidden: Vec<usize>,
    #[arg(long, value_enum, default_value_t = ObjectiveArg::Evidential)]
    objective: ObjectiveArg,
    /// Loss trace CSV [default: checkpoint path with extension `trace.csv`].
    #[arg(long)]
    trace: Option<PathBuf>,
}

#[derive(Args)]
struct PredictArgs {
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    data: PathBuf,
    /// Score file to write.
    #[arg(long)]
    out: PathBuf,
    /// Override the checkpoint's threshold for Unknown decisions.
    #[arg(long)]
    unknown_threshold: Option<f64>,
    /// Also write `trial_id  decision` lines here.
    #[arg(long)]
    decisions_out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum NormalizeArg {
    /// Scores are bonafide probabilities in [0, 1].
    None,
    /// Min-max normalize scores over the file.
    Minmax,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    scores: PathBuf,
    /// JSON report path.
    #[arg(long)]
    out: PathBuf,
    /// Equal-mass bins for aECE and PCC.
    #[arg(long, default_value_t = 10)]
    bins: usize,
    /// Directory for CSV plot data.
    #[arg(long)]
    plot_dir: Option<PathBuf>,
    #[arg(long)]
    no_tdcf: bool,
    #[arg(long, value_enum, default_value_t = NormalizeArg::None)]
    normalize: NormalizeArg,
    #[command(flatten)]
    costs: CostArgs,
}

/// t-DCF constants; defaults follow the ASVspoof 2019 evaluation plan with
/// an error-free ASV system.
#[derive(Args)]
struct CostArgs {
    #[arg(long, default_value_t = 1.0)]
    c_miss_asv: f64,
    #[arg(long, default_value_t = 1.0)]
    c_fa_asv: f64,
    #[arg(long, default_value_t = 1.0)]
    c_miss_cm: f64,
    #[arg(long, default_value_t = 1.0)]
    c_fa_cm: f64,
    #[arg(long, default_value_t = 0.9405)]
    p_target: f64,
    #[arg(long, default_value_t = 0.0095)]
    p_nontarget: f64,
    #[arg(long, default_value_t = 0.05)]
    p_spoof: f64,
    #[arg(long, default_value_t = 0.0)]
    p_miss_asv: f64,
    #[arg(long, default_value_t = 0.0)]
    p_fa_asv: f64,
    #[arg(long, default_value_t = 0.0)]
    p_miss_spoof_asv: f64,
}

impl From<&CostArgs> for TdcfCosts {
    fn from(c: &CostArgs) -> Self {
        TdcfCosts {
            c_miss_asv: c.c_miss_asv,
            c_fa_asv: c.c_fa_asv,
            c_miss_cm: c.c_miss_cm,
            c_fa_cm: c.c_fa_cm,
            p_target: c.p_target,
            p_nontarget: c.p_nontarget,
            p_spoof: c.p_spoof,
            p_miss_asv: c.p_miss_asv,
            p_fa_asv: c.p_fa_asv,
            p_miss_spoof_asv: c.p_miss_spoof_asv,
        }
    }
}

fn cmd_gen(a: GenArgs) -> Result<()> {
    let data = gen_blobs(&BlobConfig {
        n_per_class: a.n,
        dim: a.dim,
        separation: a.sep,
        noise_fraction: a.noise,
        seed: a.seed,
    })?;
    write_dataset(&data, &a.out)?;
    println!(
        "wrote {} samples (dim {}, {} bonafide, {} spoof) to {}",
        data.len(),
        data.dim(),
        data.count(Class::Bonafide),
        data.count(Class::Spoof),
        a.out.display()
    );
    Ok(())
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let data = read_dataset(&a.data)?;
    let cfg = TrainConfig {
        epochs: a.epochs,
        batch_size: a.batch_size,
        learning_rate: a.lr,
        anneal_epochs: a.anneal_epochs,
        seed: a.seed,
        unknown_threshold: a.unknown_threshold,
        hidden: a.hidden,
        objective: match a.objective {
            ObjectiveArg::Evidential => Objective::Evidential,
            ObjectiveArg::Softmax => Objective::Softmax,
        },
    };
    let model = train(&data, &cfg)?;
    save_checkpoint(&model, &a.out)?;

    let mut trace = String::from("epoch,ace,kl,lambda,total\n");
    for s in &model.trace {
        writeln!(trace, "{},{:?},{:?},{:?},{:?}", s.epoch, s.ace, s.kl, s.lambda, s.total)?;
    }
    print!("{trace}");
    let trace_path = a.trace.unwrap_or_else(|| a.out.with_extension("trace.csv"));
    fs::write(&trace_path, trace).with_context(|| format!("writing {}", trace_path.display()))?;
    println!("checkpoint: {}\ntrace: {}", a.out.display(), trace_path.display());
    Ok(())
}

fn cmd_predict(a: PredictArgs) -> Result<()> {
    let mut model: TrainedModel = load_checkpoint(&a.model)?;
    let data = read_dataset(&a.data)?;
    if data.dim() != model.params.input_dim() {
        bail!(
            "dimension mismatch: checkpoint expects {} features but {} has {}",
            model.params.input_dim(),
            a.data.display(),
            data.dim()
        );
    }
    if let Some(t) = a.unknown_threshold {
        if !(0.0..=1.0).contains(&t) {
            bail!("--unknown-threshold must lie in [0, 1], got {t}");
        }
        model.config.unknown_threshold = t;
    }
    let evidential = model.config.objective == Objective::Evidential;
    if a.decisions_out.is_some() && !evidential {
        bail!("--decisions-out needs an evidential checkpoint");
    }

    let mut records = Vec::with_capacity(data.len());
    let mut decisions = String::new();
    for (i, s) in data.samples().iter().enumerate() {
        let id = format!("t{}", i + 1);
        let (score, u) = if evidential {
            let o = predict(&model, &s.features)?;
            writeln!(decisions, "{id}\t{}", o.decision.as_str())?;
            (o.probs[Class::Bonafide.index()], Some(o.uncertainty))
        } else {
            (model.score(&s.features)?, None)
        };
        records.push(ScoreRecord::new(id, score, u, s.label)?);
    }
    write_scores(&records, &a.out)?;
    if let Some(p) = &a.decisions_out {
        fs::write(p, decisions).with_context(|| format!("writing {}", p.display()))?;
    }
    println!("scored {} trials to {}", records.len(), a.out.display());
    Ok(())
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let records = read_scores(&a.scores)?;
    let cfg = EvalConfig {
        r_bins: a.bins,
        normalization: match a.normalize {
            NormalizeArg::None => ScoreNormalization::None,
            NormalizeArg::Minmax => ScoreNormalization::Minmax,
        },
        tdcf: (!a.no_tdcf).then(|| TdcfCosts::from(&a.costs)),
    };
    let report = build_report(&records, &cfg)?;
    write_report(&report, &a.out)?;

    let m = &report.metrics;
    println!("trials: {} bonafide, {} spoof", m.n_bonafide, m.n_spoof);
    println!("EER: {:.4}% (threshold {:?})", m.eer * 100.0, m.eer_threshold);
    if let Some(t) = m.min_tdcf {
        println!("min t-DCF: {t:.6}");
    }
    let pcc = |c: &trustcm::CalibrationReport| c.pcc.map_or("undefined".to_string(), |p| format!("{p:.6}"));
    println!(
        "aECE: {:.6}  PCC: {}",
        report.calibration.aece,
        pcc(&report.calibration)
    );
    if let Some(c) = &report.calibration_uncertainty {
        println!("aECE (1 - u): {:.6}  PCC (1 - u): {}", c.aece, pcc(c));
    }
    if let Some(dir) = &a.plot_dir {
        for f in write_plot_data(&report, dir)? {
            println!("plot data: {}", f.display());
        }
    }
    println!("report: {}", a.out.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Gen(a) => cmd_gen(a),
        Command::Train(a) => cmd_train(a),
        Command::Predict(a) => cmd_predict(a),
        Command::Eval(a) => cmd_eval(a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
