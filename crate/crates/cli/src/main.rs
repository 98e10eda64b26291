//! `bvsel`: Bayesian variable selection runs, diagnostics and simulation
//! sweeps from the command line.

mod config;
mod error;
mod io;
mod run;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bvsel_core::experiments::{C1Target, Design, Regime, SignalStrength};
use clap::{Args, Parser, Subcommand};

use config::{
    absolutize, load_config, resolve_seed, ConsistencyConfig, DataConfig, DiagnoseConfig, Manifest, OverfitConfig,
    PriorKind, SearchMode, SelectConfig, StableConfig, MANIFEST_FILE,
};
use error::{CliError, CliResult};

#[derive(Parser)]
#[command(name = "bvsel", version, about = "Bayesian variable selection with mixtures of g-priors")]
struct Cli {
    /// Worker threads (default: available parallelism).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Posterior over models for a design and response.
    Select(SelectArgs),
    /// Checks the design assumptions and reports violations.
    Diagnose(DiagnoseArgs),
    /// Generates a synthetic dataset with its truth sidecar.
    GenData(GenDataArgs),
    /// Posterior probability of the true model over a grid of n.
    Consistency(ConsistencyArgs),
    /// Posterior-odds sum over the overfitted class.
    OverfitClass(OverfitArgs),
    /// Normalized sums of exp(chi2/2) against the stable limit.
    StableSim(StableArgs),
    /// Re-runs a command from its manifest.
    Replay(ReplayArgs),
}

#[derive(Args)]
struct Common {
    /// TOML file with the command's settings; flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Args)]
struct SelectArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    x: Option<PathBuf>,
    #[arg(long)]
    y: Option<PathBuf>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long, value_enum)]
    prior: Option<PriorKind>,
    /// Exponent of the `p^{-c2}` size prior.
    #[arg(long)]
    c2_exponent: Option<f64>,
    #[arg(long, value_enum)]
    mode: Option<SearchMode>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    chains: Option<usize>,
    #[arg(long)]
    size_cap: Option<usize>,
}

#[derive(Args)]
struct DiagnoseArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    x: Option<PathBuf>,
    #[arg(long)]
    y: Option<PathBuf>,
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long)]
    mc_draws: Option<usize>,
    #[arg(long)]
    zeta_subset_size: Option<usize>,
    #[arg(long)]
    zeta_samples: Option<usize>,
    #[arg(long)]
    superset_cap: Option<usize>,
    #[arg(long)]
    v_constant: Option<f64>,
}

#[derive(Args)]
struct DataArgs {
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    f: Option<f64>,
    /// `nlogn:t=1`, `power:d=0.5` or `null`.
    #[arg(long)]
    regime: Option<Regime>,
    /// `auto` or a target value.
    #[arg(long)]
    c1: Option<C1Target>,
    /// An absolute value or `k/zeta`.
    #[arg(long)]
    c2: Option<SignalStrength>,
    #[arg(long)]
    sigma2: Option<f64>,
    /// `iid`, `equicorr:rho=0.3` or `controlled:noise=0.1`.
    #[arg(long)]
    design: Option<Design>,
    #[arg(long)]
    zeta_subset_size: Option<usize>,
    #[arg(long)]
    zeta_samples: Option<usize>,
}

impl DataArgs {
    fn apply(self, d: &mut DataConfig) {
        set(&mut d.n, self.n);
        set(&mut d.f, self.f);
        set(&mut d.regime, self.regime);
        set(&mut d.c1, self.c1);
        set(&mut d.c2, self.c2);
        set(&mut d.sigma2, self.sigma2);
        set(&mut d.design, self.design);
        set(&mut d.zeta_subset_size, self.zeta_subset_size);
        set(&mut d.zeta_samples, self.zeta_samples);
    }
}

#[derive(Args)]
struct GenDataArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    data: DataArgs,
}

#[derive(Args)]
struct ConsistencyArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_delimiter = ',')]
    n_grid: Option<Vec<usize>>,
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    #[arg(long)]
    iters: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    chains: Option<usize>,
}

#[derive(Args)]
struct OverfitArgs {
    #[command(flatten)]
    common: Common,
    #[command(flatten)]
    data: DataArgs,
    #[arg(long)]
    c: Option<usize>,
    #[arg(long, value_delimiter = ',')]
    n_grid: Option<Vec<usize>>,
    #[arg(long)]
    seeds: Option<usize>,
    /// Build the design so extraneous columns sit close to the true span.
    #[arg(long)]
    controlled: bool,
    #[arg(long)]
    lambda: Option<f64>,
    /// Class members sampled when the class is too large to enumerate.
    #[arg(long)]
    samples: Option<usize>,
}

#[derive(Args)]
struct StableArgs {
    #[command(flatten)]
    common: Common,
    #[arg(long)]
    c: Option<u32>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    replicates: Option<usize>,
    #[arg(long)]
    k_frac: Option<f64>,
    #[arg(long)]
    bins: Option<usize>,
}

#[derive(Args)]
struct ReplayArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// Defaults to the manifest's directory.
    #[arg(long)]
    out: Option<PathBuf>,
}

fn set<T>(slot: &mut T, v: Option<T>) {
    if let Some(v) = v {
        *slot = v;
    }
}

fn base<T: Default + for<'de> serde::Deserialize<'de>>(common: &Common) -> CliResult<T> {
    match &common.config {
        Some(p) => load_config(p),
        None => Ok(T::default()),
    }
}

fn require(path: &Path, flag: &str) -> CliResult<()> {
    if path.as_os_str().is_empty() {
        return Err(CliError::Input(format!("--{flag} is required")));
    }
    Ok(())
}

fn dispatch(cli: Cli) -> CliResult<()> {
    let threads = cli.threads;
    if let Some(t) = threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t.max(1))
            .build_global()
            .map_err(|e| CliError::Input(format!("thread pool: {e}")))?;
    }
    match cli.command {
        Command::Select(a) => {
            let mut c: SelectConfig = base(&a.common)?;
            set(&mut c.x, a.x);
            set(&mut c.y, a.y);
            set(&mut c.lambda, a.lambda);
            set(&mut c.prior, a.prior);
            set(&mut c.c2_exponent, a.c2_exponent);
            set(&mut c.mode, a.mode);
            set(&mut c.iters, a.iters);
            set(&mut c.burn_in, a.burn_in);
            set(&mut c.chains, a.chains);
            if a.size_cap.is_some() {
                c.size_cap = a.size_cap;
            }
            if a.common.seed.is_some() {
                c.seed = a.common.seed;
            }
            require(&c.x, "x")?;
            require(&c.y, "y")?;
            absolutize(&mut c.x)?;
            absolutize(&mut c.y)?;
            resolve_seed(&mut c.seed);
            run::select(&c, &a.common.out, threads)
        }
        Command::Diagnose(a) => {
            let mut c: DiagnoseConfig = base(&a.common)?;
            set(&mut c.x, a.x);
            set(&mut c.y, a.y);
            if a.truth.is_some() {
                c.truth = a.truth;
            }
            set(&mut c.mc_draws, a.mc_draws);
            set(&mut c.zeta_subset_size, a.zeta_subset_size);
            set(&mut c.zeta_samples, a.zeta_samples);
            set(&mut c.superset_cap, a.superset_cap);
            set(&mut c.v_constant, a.v_constant);
            if a.common.seed.is_some() {
                c.seed = a.common.seed;
            }
            require(&c.x, "x")?;
            require(&c.y, "y")?;
            absolutize(&mut c.x)?;
            absolutize(&mut c.y)?;
            if let Some(t) = c.truth.as_mut() {
                absolutize(t)?;
            }
            resolve_seed(&mut c.seed);
            run::diagnose_cmd(&c, &a.common.out, threads)
        }
        Command::GenData(a) => {
            let mut c: DataConfig = base(&a.common)?;
            a.data.apply(&mut c);
            if a.common.seed.is_some() {
                c.seed = a.common.seed;
            }
            resolve_seed(&mut c.seed);
            run::gen_data(&c, &a.common.out, threads)
        }
        Command::Consistency(a) => {
            let mut c: ConsistencyConfig = base(&a.common)?;
            a.data.apply(&mut c.data);
            set(&mut c.n_grid, a.n_grid);
            set(&mut c.seeds, a.seeds);
            set(&mut c.lambda, a.lambda);
            set(&mut c.iters, a.iters);
            set(&mut c.burn_in, a.burn_in);
            set(&mut c.chains, a.chains);
            if a.common.seed.is_some() {
                c.data.seed = a.common.seed;
            }
            // an interrupted run in the same directory keeps its seed
            let previous = a.common.out.join(MANIFEST_FILE);
            if c.data.seed.is_none() && previous.exists() {
                if let Ok(Some(old)) = Manifest::load(&previous).map(|m| m.consistency) {
                    c.data.seed = old.data.seed;
                }
            }
            resolve_seed(&mut c.data.seed);
            run::consistency(&c, &a.common.out, threads)
        }
        Command::OverfitClass(a) => {
            let mut c: OverfitConfig = base(&a.common)?;
            a.data.apply(&mut c.data);
            set(&mut c.c, a.c);
            set(&mut c.n_grid, a.n_grid);
            set(&mut c.seeds, a.seeds);
            set(&mut c.lambda, a.lambda);
            set(&mut c.samples, a.samples);
            c.controlled |= a.controlled;
            if a.common.seed.is_some() {
                c.data.seed = a.common.seed;
            }
            resolve_seed(&mut c.data.seed);
            run::overfit_class(&c, &a.common.out, threads)
        }
        Command::StableSim(a) => {
            let mut c: StableConfig = base(&a.common)?;
            set(&mut c.c, a.c);
            set(&mut c.m, a.m);
            set(&mut c.replicates, a.replicates);
            set(&mut c.k_frac, a.k_frac);
            set(&mut c.bins, a.bins);
            if a.common.seed.is_some() {
                c.seed = a.common.seed;
            }
            resolve_seed(&mut c.seed);
            run::stable_sim(&c, &a.common.out, threads)
        }
        Command::Replay(a) => {
            let m = Manifest::load(&a.manifest)?;
            let out = a.out.unwrap_or_else(|| run::default_out(&a.manifest));
            run::replay(&m, &out, threads.or(m.threads))
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
