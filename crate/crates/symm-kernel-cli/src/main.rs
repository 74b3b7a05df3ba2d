//! Experiment command line: reproducible sweeps and checks emitting CSV.
//!
//! Every run writes a `#`-prefixed config header followed by one column
//! header row and data rows; identical argv (and data files) produce
//! byte-identical output. Floats are printed with 17 significant digits.
//!
//! Exit codes: 0 success, 1 runtime failure, 2 usage error.

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use symm_kernel::datasets::{load_corpus, CorpusSource, Image};
use symm_kernel::experiments::{
    equivariance_checks, multi_class_accuracy, multi_seed_error, nonabelian_sweep, pair_scatter,
    sweep_delta, sweep_n, PairTask,
};
use symm_kernel::kernels::{KernelMode, KernelSpec, Readout};
use symm_kernel::Real;

mod checks;

const SCHEMA_VERSION: u32 = 1;

/// Environment variable pointing at a directory of IDX data files.
const DATA_DIR_ENV: &str = "SYMM_KERNEL_DATA_DIR";

#[derive(Parser)]
#[command(
    name = "symm-kernel",
    version,
    about = "Spectral analysis of kernel regression over group orbits",
    after_help = "Float grids use START:STOP:STEP, inclusive of START and exclusive of STOP.\n\
                  Integer lists are comma separated, e.g. 4,8,16,32,64.\n\
                  Set SYMM_KERNEL_DATA_DIR (or --data-dir) to a directory holding\n\
                  train-images-idx3-ubyte / train-labels-idx1-ubyte to run on real digits;\n\
                  otherwise a deterministic synthetic digit corpus is used."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Spectral vs exact error on the circular dataset as separation varies
    SweepDelta(SweepDeltaArgs),
    /// Spectral vs exact error as points per class vary
    SweepN(SweepNArgs),
    /// Per-pair scatter of spectral vs exact error on rotated digit orbits
    Pairs(PairsArgs),
    /// Pair-averaged spectral error vs exact error on multi-seed datasets
    Multiseed(MultiseedArgs),
    /// One-versus-many spectral classification accuracy per orbit density
    Multiclass(MulticlassArgs),
    /// Structural checks of conv kernels over translation/rotation orbits
    Equivariance(EquivarianceArgs),
    /// Irrep-basis error vs direct regression on the D4 x C2 orbit
    Nonabelian(NonabelianArgs),
    /// Run the invariant suites and print a pass/fail table
    Check,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum KernelKind {
    Rbf,
    Mlp,
    ConvFc,
    ConvGap,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Mode {
    Nngp,
    Ntk,
}

impl From<Mode> for KernelMode {
    fn from(m: Mode) -> Self {
        match m {
            Mode::Nngp => KernelMode::Nngp,
            Mode::Ntk => KernelMode::Ntk,
        }
    }
}

#[derive(Args)]
struct KernelArgs {
    /// Kernel family
    #[arg(long, value_enum)]
    kernel: KernelKind,
    /// RBF length scale L in exp(-L^2 d^2)
    #[arg(long, default_value_t = 1.0)]
    length_scale: f64,
    /// Hidden layers of the MLP kernel
    #[arg(long, default_value_t = 1)]
    hidden_layers: usize,
    /// Weight scale of MLP/conv kernels
    #[arg(long, default_value_t = 1.0)]
    w_std: f64,
    /// Bias scale of the MLP kernel (conv kernels have no biases)
    #[arg(long, default_value_t = 1.0)]
    b_std: f64,
    /// NNGP or NTK mode for MLP/conv kernels
    #[arg(long, value_enum, default_value_t = Mode::Ntk)]
    mode: Mode,
    /// Conv filter side length
    #[arg(long, default_value_t = 3)]
    filter_size: usize,
    /// Conv stride (must divide the image side)
    #[arg(long, default_value_t = 1)]
    stride: usize,
}

impl KernelArgs {
    fn spec(&self) -> Result<KernelSpec<Real>, String> {
        let spec = match self.kernel {
            KernelKind::Rbf => KernelSpec::Rbf { length_scale: self.length_scale },
            KernelKind::Mlp => KernelSpec::Mlp {
                hidden_layers: self.hidden_layers,
                weight_std: self.w_std,
                bias_std: self.b_std,
                mode: self.mode.into(),
            },
            KernelKind::ConvFc | KernelKind::ConvGap => KernelSpec::Conv {
                filter_size: self.filter_size,
                stride: self.stride,
                readout: if self.kernel == KernelKind::ConvFc { Readout::Fc } else { Readout::Gap },
                weight_std: self.w_std,
                mode: self.mode.into(),
            },
        };
        spec.validate().map_err(|e| e.to_string())?;
        Ok(spec)
    }

    fn describe(&self) -> Vec<String> {
        let mut lines = vec![format!(
            "kernel={}",
            match self.kernel {
                KernelKind::Rbf => "rbf",
                KernelKind::Mlp => "mlp",
                KernelKind::ConvFc => "conv-fc",
                KernelKind::ConvGap => "conv-gap",
            }
        )];
        match self.kernel {
            KernelKind::Rbf => lines.push(format!("length_scale={}", fmt(self.length_scale))),
            KernelKind::Mlp => {
                lines.push(format!("hidden_layers={}", self.hidden_layers));
                lines.push(format!("w_std={}", fmt(self.w_std)));
                lines.push(format!("b_std={}", fmt(self.b_std)));
                lines.push(format!("mode={}", mode_name(self.mode)));
            }
            KernelKind::ConvFc | KernelKind::ConvGap => {
                lines.push(format!("filter_size={}", self.filter_size));
                lines.push(format!("stride={}", self.stride));
                lines.push(format!("w_std={}", fmt(self.w_std)));
                lines.push(format!("mode={}", mode_name(self.mode)));
            }
        }
        lines
    }
}

fn mode_name(m: Mode) -> &'static str {
    match m {
        Mode::Nngp => "nngp",
        Mode::Ntk => "ntk",
    }
}

#[derive(Args)]
struct SweepDeltaArgs {
    #[command(flatten)]
    kernel: KernelArgs,
    /// Points per class
    #[arg(long, default_value_t = 8)]
    n: usize,
    /// Separation grid START:STOP:STEP
    #[arg(long)]
    deltas: String,
    /// Output CSV path
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SweepNArgs {
    #[command(flatten)]
    kernel: KernelArgs,
    /// Class separation
    #[arg(long, default_value_t = 1.0)]
    delta: f64,
    /// Comma-separated list of points per class
    #[arg(long)]
    ns: String,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct CorpusArgs {
    /// Directory of IDX files (falls back to SYMM_KERNEL_DATA_DIR, then to
    /// the synthetic corpus)
    #[arg(long)]
    data_dir: Option<PathBuf>,
    /// Number of digit classes
    #[arg(long, default_value_t = 10)]
    classes: usize,
    /// Seed images per class
    #[arg(long, default_value_t = 13)]
    seeds_per_class: usize,
}

type Corpus = Vec<Vec<Image<Real>>>;

impl CorpusArgs {
    fn load(&self, rng_seed: u64) -> Result<(Corpus, CorpusSource), String> {
        let dir = self.data_dir.clone().or_else(|| std::env::var_os(DATA_DIR_ENV).map(Into::into));
        let (corpus, source) =
            load_corpus(dir.as_deref(), self.classes, self.seeds_per_class, rng_seed)
                .map_err(|e| e.to_string())?;
        if source == CorpusSource::Synthetic {
            eprintln!("note: no data directory configured, using the synthetic digit corpus");
        }
        Ok((corpus, source))
    }
}

#[derive(Args)]
struct PairsArgs {
    #[command(flatten)]
    kernel: KernelArgs,
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Rotations per orbit
    #[arg(long, default_value_t = 8)]
    n_rot: usize,
    /// Number of random cross-class pairs
    #[arg(long, default_value_t = 200)]
    pairs: usize,
    /// RNG seed
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MultiseedArgs {
    #[command(flatten)]
    kernel: KernelArgs,
    #[command(flatten)]
    corpus: CorpusArgs,
    #[arg(long, default_value_t = 8)]
    n_rot: usize,
    /// Number of random two-class datasets
    #[arg(long, default_value_t = 30)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MulticlassArgs {
    #[command(flatten)]
    kernel: KernelArgs,
    #[command(flatten)]
    corpus: CorpusArgs,
    /// Comma-separated orbit densities, e.g. 4,8,16,32,64
    #[arg(long, default_value = "4,8,16,32,64")]
    n_rots: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct EquivarianceArgs {
    /// NNGP or NTK conv kernels
    #[arg(long, value_enum, default_value_t = Mode::Nngp)]
    mode: Mode,
    /// Image side length
    #[arg(long, default_value_t = 8)]
    side: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct NonabelianArgs {
    /// Separation grid START:STOP:STEP
    #[arg(long)]
    separations: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// RBF length scale
    #[arg(long, default_value_t = 1.0)]
    length_scale: f64,
    #[arg(long)]
    out: PathBuf,
}

/// 17-significant-digit float formatting; specials print as words.
fn fmt(x: f64) -> String {
    if x.is_infinite() {
        return if x > 0.0 { "inf".to_string() } else { "-inf".to_string() };
    }
    if x.is_nan() {
        return "nan".to_string();
    }
    format!("{x:.16e}")
}

/// Parses START:STOP:STEP, inclusive of START, exclusive of STOP.
fn parse_grid(s: &str) -> Result<Vec<f64>, String> {
    let parts: Vec<&str> = s.split(':').collect();
    if parts.len() != 3 {
        return Err(format!("grid '{s}' must be START:STOP:STEP"));
    }
    let parse = |v: &str| v.parse::<f64>().map_err(|e| format!("bad grid number '{v}': {e}"));
    let (start, stop, step) = (parse(parts[0])?, parse(parts[1])?, parse(parts[2])?);
    if step <= 0.0 || step.is_nan() {
        return Err(format!("grid step must be positive, got {step}"));
    }
    if stop < start {
        return Err(format!("grid stop {stop} is below start {start}"));
    }
    let count = ((stop - start) / step - 1e-9).floor() as usize + 1;
    Ok((0..count).map(|k| start + k as f64 * step).collect())
}

/// Parses a comma-separated list of positive integers.
fn parse_int_list(s: &str) -> Result<Vec<usize>, String> {
    s.split(',')
        .map(|v| {
            let n = v.trim().parse::<usize>().map_err(|e| format!("bad integer '{v}': {e}"))?;
            if n == 0 {
                return Err(format!("list entry must be positive, got '{v}'"));
            }
            Ok(n)
        })
        .collect()
}

struct CsvWriter {
    out: std::io::BufWriter<std::fs::File>,
}

impl CsvWriter {
    fn create(
        path: &PathBuf,
        command: &str,
        config: &[String],
        columns: &[&str],
    ) -> Result<Self, String> {
        let file = std::fs::File::create(path)
            .map_err(|e| format!("cannot create {}: {e}", path.display()))?;
        let mut out = std::io::BufWriter::new(file);
        let mut write =
            |line: String| -> Result<(), String> { writeln!(out, "{line}").map_err(|e| e.to_string()) };
        write(format!("# schema_version={SCHEMA_VERSION}"))?;
        write(format!("# command={command}"))?;
        for entry in config {
            write(format!("# {entry}"))?;
        }
        write(columns.join(","))?;
        Ok(CsvWriter { out })
    }

    fn row(&mut self, fields: &[String]) -> Result<(), String> {
        writeln!(self.out, "{}", fields.join(",")).map_err(|e| e.to_string())
    }

    fn finish(mut self) -> Result<(), String> {
        self.out.flush().map_err(|e| e.to_string())
    }
}

fn corpus_config(corpus: &CorpusArgs, source: CorpusSource) -> Vec<String> {
    vec![
        format!("classes={}", corpus.classes),
        format!("seeds_per_class={}", corpus.seeds_per_class),
        format!(
            "data_source={}",
            match source {
                CorpusSource::Idx => "idx",
                CorpusSource::Synthetic => "synthetic",
            }
        ),
    ]
}

/// Deterministic cross-class pair sampling: (class_a, idx_a, class_b, idx_b)
/// with distinct classes.
fn sample_cross_pairs(
    corpus: &[Vec<Image<Real>>],
    count: usize,
    seed: u64,
) -> Vec<((usize, usize), (usize, usize))> {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let n_classes = corpus.len();
    (0..count)
        .map(|_| {
            let ca = rng.random_range(0..n_classes);
            let cb = {
                let mut c = rng.random_range(0..n_classes - 1);
                if c >= ca {
                    c += 1;
                }
                c
            };
            let ia = rng.random_range(0..corpus[ca].len());
            let ib = rng.random_range(0..corpus[cb].len());
            ((ca, ia), (cb, ib))
        })
        .collect()
}

fn run(cli: Cli) -> Result<(), String> {
    match cli.command {
        Command::SweepDelta(args) => {
            let spec = args.kernel.spec()?;
            let deltas = parse_grid(&args.deltas)?;
            let rows = sweep_delta(&spec, args.n, &deltas).map_err(|e| e.to_string())?;
            let mut config = args.kernel.describe();
            config.push(format!("n={}", args.n));
            config.push(format!("deltas={}", args.deltas));
            let mut csv = CsvWriter::create(
                &args.out,
                "sweep-delta",
                &config,
                &["delta", "spectral", "exact", "lambda_n_inv", "mean_inv_lambda"],
            )?;
            for r in rows {
                csv.row(&[
                    fmt(r.x),
                    fmt(r.spectral),
                    fmt(r.exact),
                    fmt(r.lambda_n_inv),
                    fmt(r.mean_inv_lambda),
                ])?;
            }
            csv.finish()
        }
        Command::SweepN(args) => {
            let spec = args.kernel.spec()?;
            let ns = parse_int_list(&args.ns)?;
            let rows = sweep_n(&spec, args.delta, &ns).map_err(|e| e.to_string())?;
            let mut config = args.kernel.describe();
            config.push(format!("delta={}", fmt(args.delta)));
            config.push(format!("ns={}", args.ns));
            let mut csv = CsvWriter::create(
                &args.out,
                "sweep-n",
                &config,
                &["n", "spectral", "exact", "lambda_n_inv", "mean_inv_lambda"],
            )?;
            for r in rows {
                csv.row(&[
                    format!("{}", r.x as usize),
                    fmt(r.spectral),
                    fmt(r.exact),
                    fmt(r.lambda_n_inv),
                    fmt(r.mean_inv_lambda),
                ])?;
            }
            csv.finish()
        }
        Command::Pairs(args) => {
            let spec = args.kernel.spec()?;
            let (corpus, source) = args.corpus.load(args.seed)?;
            let ids = sample_cross_pairs(&corpus, args.pairs, args.seed);
            let tasks: Vec<PairTask<'_, Real>> = ids
                .iter()
                .map(|&((ca, ia), (cb, ib))| ((ca, ia), &corpus[ca][ia], (cb, ib), &corpus[cb][ib]))
                .collect();
            let trials = pair_scatter(&spec, &tasks, args.n_rot).map_err(|e| e.to_string())?;
            let mut config = args.kernel.describe();
            config.extend(corpus_config(&args.corpus, source));
            config.push(format!("n_rot={}", args.n_rot));
            config.push(format!("pairs={}", args.pairs));
            config.push(format!("rng_seed={}", args.seed));
            let mut csv = CsvWriter::create(
                &args.out,
                "pairs",
                &config,
                &[
                    "class_a",
                    "seed_a",
                    "class_b",
                    "seed_b",
                    "spectral",
                    "exact",
                    "classification_errors",
                    "lambda_n",
                    "mean_inv_lambda",
                    "delta_sq",
                    "radius",
                    "inverse_radius",
                ],
            )?;
            for t in trials {
                csv.row(&[
                    t.seed_a.0.to_string(),
                    t.seed_a.1.to_string(),
                    t.seed_b.0.to_string(),
                    t.seed_b.1.to_string(),
                    fmt(t.spectral_epsilon),
                    fmt(t.exact_epsilon),
                    t.classification_errors.to_string(),
                    fmt(t.lambda_n),
                    fmt(t.mean_inv_lambda),
                    fmt(t.geometry.delta_sq),
                    fmt(t.geometry.radius),
                    fmt(t.geometry.inverse_radius),
                ])?;
            }
            csv.finish()
        }
        Command::Multiseed(args) => {
            let spec = args.kernel.spec()?;
            let (corpus, source) = args.corpus.load(args.seed)?;
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(args.seed);
            let mut config = args.kernel.describe();
            config.extend(corpus_config(&args.corpus, source));
            config.push(format!("n_rot={}", args.n_rot));
            config.push(format!("trials={}", args.trials));
            config.push(format!("rng_seed={}", args.seed));
            let mut csv = CsvWriter::create(
                &args.out,
                "multiseed",
                &config,
                &["trial", "class_a", "class_b", "avg_spectral", "exact_symmetrized"],
            )?;
            for trial in 0..args.trials {
                let ca = rng.random_range(0..corpus.len());
                let cb = {
                    let mut c = rng.random_range(0..corpus.len() - 1);
                    if c >= ca {
                        c += 1;
                    }
                    c
                };
                let res = multi_seed_error(&spec, &corpus[ca], &corpus[cb], args.n_rot)
                    .map_err(|e| e.to_string())?;
                csv.row(&[
                    trial.to_string(),
                    ca.to_string(),
                    cb.to_string(),
                    fmt(res.avg_spectral),
                    fmt(res.exact_symmetrized),
                ])?;
            }
            csv.finish()
        }
        Command::Multiclass(args) => {
            let spec = args.kernel.spec()?;
            let (corpus, source) = args.corpus.load(args.seed)?;
            let n_rots = parse_int_list(&args.n_rots)?;
            let accuracy =
                multi_class_accuracy(&spec, &corpus, &n_rots).map_err(|e| e.to_string())?;
            let mut config = args.kernel.describe();
            config.extend(corpus_config(&args.corpus, source));
            config.push(format!("n_rots={}", args.n_rots));
            config.push(format!("rng_seed={}", args.seed));
            let mut csv =
                CsvWriter::create(&args.out, "multiclass", &config, &["n_rot", "accuracy"])?;
            for (n_rot, acc) in accuracy {
                csv.row(&[n_rot.to_string(), fmt(acc)])?;
            }
            csv.finish()
        }
        Command::Equivariance(args) => {
            let report = equivariance_checks::<Real>(args.mode.into(), args.side, args.seed)
                .map_err(|e| e.to_string())?;
            let config = vec![
                format!("mode={}", mode_name(args.mode)),
                format!("side={}", args.side),
                format!("rng_seed={}", args.seed),
            ];
            let mut csv =
                CsvWriter::create(&args.out, "equivariance", &config, &["check", "value"])?;
            csv.row(&["fc_translation_circulance_dev".into(), fmt(report.fc_translation_dev)])?;
            csv.row(&["fc_rotation_circulance_dev".into(), fmt(report.fc_rotation_dev)])?;
            csv.row(&["gap_translation_spread".into(), fmt(report.gap_translation_spread)])?;
            csv.row(&["gap_rotation_rank".into(), report.gap_rotation_rank.to_string()])?;
            csv.row(&["gap_rotation_spread".into(), fmt(report.gap_rotation_spread)])?;
            csv.row(&["fc_single_pixel_rank".into(), report.fc_single_pixel_rank.to_string()])?;
            csv.row(&["gap_pair_spectral_epsilon".into(), fmt(report.gap_pair_spectral.epsilon)])?;
            csv.row(&[
                "gap_pair_diverged".into(),
                (report.gap_pair_spectral.diverged as u8).to_string(),
            ])?;
            csv.row(&["gap_pair_exact_error".into(), fmt(report.gap_pair_exact)])?;
            csv.finish()
        }
        Command::Nonabelian(args) => {
            let separations = parse_grid(&args.separations)?;
            let rows = nonabelian_sweep(&separations, args.seed, args.length_scale)
                .map_err(|e| e.to_string())?;
            let config = vec![
                format!("separations={}", args.separations),
                format!("length_scale={}", fmt(args.length_scale)),
                format!("rng_seed={}", args.seed),
            ];
            let mut csv = CsvWriter::create(
                &args.out,
                "nonabelian",
                &config,
                &["separation", "spectral", "exact", "jitter"],
            )?;
            for r in rows {
                csv.row(&[fmt(r.separation), fmt(r.spectral), fmt(r.exact), fmt(r.jitter)])?;
            }
            csv.finish()
        }
        Command::Check => checks::run_all(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(message) => {
            eprintln!("error: {message}");
            ExitCode::FAILURE
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_is_start_inclusive_stop_exclusive() {
        let g = parse_grid("0:5:0.25").unwrap();
        assert_eq!(g.len(), 20);
        assert_eq!(g[0], 0.0);
        assert!((g[19] - 4.75).abs() < 1e-12);
        let g = parse_grid("1:2:1").unwrap();
        assert_eq!(g, vec![1.0]);
    }

    #[test]
    fn grid_rejects_malformed_input() {
        assert!(parse_grid("1:2").is_err());
        assert!(parse_grid("0:1:0").is_err());
        assert!(parse_grid("2:1:0.5").is_err());
        assert!(parse_grid("a:1:0.5").is_err());
    }

    #[test]
    fn int_list_parses_and_validates() {
        assert_eq!(parse_int_list("4,8,16").unwrap(), vec![4, 8, 16]);
        assert!(parse_int_list("4,0").is_err());
        assert!(parse_int_list("4,x").is_err());
    }

    #[test]
    fn float_formatting_is_17_significant_digits() {
        assert_eq!(fmt(0.25), "2.5000000000000000e-1");
        assert_eq!(fmt(1.0 / 3.0), "3.3333333333333331e-1");
        assert_eq!(fmt(f64::INFINITY), "inf");
    }
}
