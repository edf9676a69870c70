use clap::{Args, Parser, Subcommand, ValueEnum};
use nonlocal_cli::{run, Command, PlapMode, RunConfig, VerifyKind};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "nonlocal", version, about = "Nonlocal operators on the periodic torus")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory, overriding the configuration.
    #[arg(long)]
    output: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum PlapArg {
    Identity,
    Certificate,
    Bootstrap,
}

#[derive(Clone, Copy, ValueEnum)]
enum VerifyArg {
    Coercivity,
    Caccioppoli,
    Linfty,
    Log,
    Poincare,
}

#[derive(Subcommand)]
enum Sub {
    /// Periodized symbol table.
    Symbol(Common),
    /// Coercivity certificate of the symbol.
    Coercivity(Common),
    /// Constant-coefficient spectral solve and estimate ladder.
    SolveConst(Common),
    /// Frozen-coefficient fixed-point solve.
    SolveFrozen(Common),
    /// Regularity bootstrap over a ball cover.
    Bootstrap(Common),
    /// p-Laplacian effective kernel experiments.
    Plap {
        mode: PlapArg,
        #[command(flatten)]
        common: Common,
    },
    /// Energy inequality verification.
    Verify {
        kind: VerifyArg,
        #[command(flatten)]
        common: Common,
    },
    /// Norms of a field.
    Norms(Common),
}

impl Sub {
    fn split(self) -> (Command, Common) {
        match self {
            Sub::Symbol(c) => (Command::Symbol, c),
            Sub::Coercivity(c) => (Command::Coercivity, c),
            Sub::SolveConst(c) => (Command::SolveConst, c),
            Sub::SolveFrozen(c) => (Command::SolveFrozen, c),
            Sub::Bootstrap(c) => (Command::Bootstrap, c),
            Sub::Norms(c) => (Command::Norms, c),
            Sub::Plap { mode, common } => {
                let m = match mode {
                    PlapArg::Identity => PlapMode::Identity,
                    PlapArg::Certificate => PlapMode::Certificate,
                    PlapArg::Bootstrap => PlapMode::Bootstrap,
                };
                (Command::Plap(m), common)
            }
            Sub::Verify { kind, common } => {
                let k = match kind {
                    VerifyArg::Coercivity => VerifyKind::Coercivity,
                    VerifyArg::Caccioppoli => VerifyKind::Caccioppoli,
                    VerifyArg::Linfty => VerifyKind::Linfty,
                    VerifyArg::Log => VerifyKind::Log,
                    VerifyArg::Poincare => VerifyKind::Poincare,
                };
                (Command::Verify(k), common)
            }
        }
    }
}

fn init_threads() {
    if let Some(n) = std::env::var("NONLOCAL_THREADS").ok().and_then(|v| v.trim().parse::<usize>().ok()) {
        if n > 0 {
            let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
        }
    }
}

fn main() -> ExitCode {
    let (command, common) = Cli::parse().command.split();
    init_threads();
    let result = RunConfig::load(&common.config).and_then(|cfg| {
        let out = common.output.clone().or_else(|| cfg.output.as_ref().map(|o| cfg.base_dir.join(o))).unwrap_or_else(|| PathBuf::from("out"));
        run(command, &cfg, &out)
    });
    match result {
        Ok(outcome) => ExitCode::from(outcome.exit_code() as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
