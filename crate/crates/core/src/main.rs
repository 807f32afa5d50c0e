use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use serde::Serialize;

use iet_lab::catalog;
use iet_lab::experiments::{emit_report, run_campaign, run_experiment, Experiment, ExperimentConfig};
use iet_lab::friendship::{
    construct_good_perturbation, friendship_report, perturbation_constants, shadow_orbit,
};
use iet_lab::iet::{IdocOutcome, Iet};
use iet_lab::induction::{check_facts, matrix_product, return_time_oracle, run_induction};
use iet_lab::io::{self, StepFile};
use iet_lab::numeric::ExactScalar;
use iet_lab::skew::{birkhoff_sum, empirical_measure, induced_step, visit_count, Grid, SkewState, Window};
use iet_lab::step::{sample_step, BoundedFamily, SampleOptions, StepFunction};

#[derive(Parser)]
#[command(name = "iet-lab", version, about = "Exact experiments with interval exchanges and their skew products")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
#[allow(clippy::large_enum_variant)]
enum Command {
    /// Inspect an interval exchange.
    #[command(subcommand)]
    Iet(IetCmd),
    /// Sample or nudge step functions.
    #[command(subcommand)]
    Step(StepCmd),
    /// Orbits of the skew product and its induced map.
    #[command(subcommand)]
    Skew(SkewCmd),
    /// Induction stages and visit matrices.
    #[command(subcommand)]
    Induce(InduceCmd),
    /// Friendship conditions, perturbations and shadow orbits.
    #[command(subcommand)]
    Friend(FriendCmd),
    /// Configured campaigns.
    #[command(subcommand)]
    Lab(LabCmd),
}

#[derive(Args, Clone)]
struct IetSource {
    /// Catalog name: golden, third, three, four.
    #[arg(long, default_value = "golden", conflicts_with = "iet")]
    preset: String,
    /// JSON file with `permutation` and `lengths`.
    #[arg(long)]
    iet: Option<PathBuf>,
}

impl IetSource {
    fn load(&self) -> Result<Iet> {
        match &self.iet {
            Some(path) => io::read_iet(path).with_context(|| format!("reading {}", path.display())),
            None => catalog::by_name(&self.preset)
                .with_context(|| format!("unknown preset {:?}; known: {}", self.preset, catalog::NAMES.join(", "))),
        }
    }
}

#[derive(Args, Clone)]
struct StepSource {
    /// JSON file with `widths` and `values`; defaults to 1 on [0,1/2), −1 after.
    #[arg(long)]
    step: Option<PathBuf>,
}

impl StepSource {
    fn load(&self) -> Result<StepFunction> {
        match &self.step {
            Some(path) => io::read_step(path).with_context(|| format!("reading {}", path.display())),
            None => Ok(StepFile {
                widths: vec![half(), half()],
                values: vec![ExactScalar::one(), -ExactScalar::one()],
            }
            .build()?),
        }
    }
}

fn half() -> ExactScalar {
    ExactScalar::rational(1, 2).expect("nonzero")
}

#[derive(Subcommand)]
enum IetCmd {
    /// Permutation, lengths and discontinuities.
    Describe {
        #[command(flatten)]
        src: IetSource,
    },
    /// First `n` points of the orbit of `x`.
    Orbit {
        #[command(flatten)]
        src: IetSource,
        #[arg(long)]
        x: ExactScalar,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 53)]
        precision: u32,
    },
    /// Search for a connection `T^n β_i = β_j` up to `depth`.
    Idoc {
        #[command(flatten)]
        src: IetSource,
        #[arg(long)]
        depth: u64,
    },
    /// Recurrence constants `c1`, `c2`, `c3` and `δ`.
    Constants {
        #[command(flatten)]
        src: IetSource,
        #[arg(long)]
        depth: u64,
    },
}

#[derive(Subcommand)]
enum StepCmd {
    /// Draw a member of the bounded family.
    Sample {
        #[arg(long)]
        d: usize,
        #[arg(long = "D")]
        bound: ExactScalar,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 16)]
        bits: u32,
        #[arg(long, default_value = "0")]
        jump_floor: ExactScalar,
    },
    /// Move one discontinuity, keeping mean zero.
    Nudge {
        #[command(flatten)]
        src: StepSource,
        /// One-based discontinuity index.
        #[arg(long)]
        i: usize,
        #[arg(long, allow_hyphen_values = true)]
        zeta: ExactScalar,
    },
}

#[derive(Args, Clone)]
struct SkewArgs {
    #[command(flatten)]
    iet: IetSource,
    #[command(flatten)]
    step: StepSource,
    #[arg(long)]
    x: ExactScalar,
    #[arg(long, default_value = "0", allow_hyphen_values = true)]
    t: ExactScalar,
    #[arg(long, default_value_t = 53)]
    precision: u32,
}

#[derive(Subcommand)]
enum SkewCmd {
    /// Exact Birkhoff sums.
    Birkhoff {
        #[command(flatten)]
        args: SkewArgs,
        #[arg(long)]
        n: usize,
    },
    /// Count visits of the vertical coordinate to `[−B, B]`.
    Visits {
        #[command(flatten)]
        args: SkewArgs,
        #[arg(long = "B")]
        window: ExactScalar,
        #[arg(long)]
        n: u64,
    },
    /// Iterate the first-return map to the box.
    Induced {
        #[command(flatten)]
        args: SkewArgs,
        #[arg(long = "B")]
        window: ExactScalar,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1_000_000)]
        cap: u64,
    },
    /// Empirical occupancy of the induced map on a grid.
    Measure {
        #[command(flatten)]
        args: SkewArgs,
        #[arg(long = "B")]
        window: ExactScalar,
        #[arg(long)]
        n: u64,
        #[arg(long, default_value_t = 10)]
        nx: usize,
        #[arg(long, default_value_t = 10)]
        nt: usize,
        #[arg(long, default_value_t = 1_000_000)]
        cap: u64,
    },
}

#[derive(Subcommand)]
enum InduceCmd {
    /// Induction stages and visit matrices up to `depth`.
    Run {
        #[command(flatten)]
        src: IetSource,
        #[arg(long)]
        depth: usize,
        #[arg(long, default_value_t = 10_000_000)]
        cap: u64,
    },
    /// Distortion, positivity and angle statistics.
    Facts {
        #[command(flatten)]
        src: IetSource,
        #[arg(long, default_value_t = 15)]
        depth: usize,
        #[arg(long, default_value_t = 10_000_000)]
        cap: u64,
    },
    /// Brute-force return time from `I_l` to `I_k`.
    Oracle {
        #[command(flatten)]
        src: IetSource,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        l: usize,
        /// One-based piece of `I_l`.
        #[arg(long)]
        j: usize,
        #[arg(long, default_value_t = 10_000_000)]
        cap: u64,
    },
}

#[derive(Args, Clone)]
struct FriendArgs {
    #[command(flatten)]
    iet: IetSource,
    #[command(flatten)]
    step: StepSource,
    /// Tower half-width at scale 0; defaults to the `c_2/4` estimate.
    #[arg(long)]
    delta: Option<ExactScalar>,
    #[arg(long, default_value_t = 2000)]
    recurrence_depth: u64,
}

impl FriendArgs {
    fn delta(&self, iet: &Iet) -> Result<ExactScalar> {
        match &self.delta {
            Some(d) => Ok(d.clone()),
            None => Ok(iet.recurrence_constants(self.recurrence_depth)?.delta),
        }
    }
}

#[derive(Subcommand)]
enum FriendCmd {
    /// Report F1–F5 over scales `1..=kmax`.
    Check {
        #[command(flatten)]
        args: FriendArgs,
        #[arg(long)]
        x: ExactScalar,
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        t: ExactScalar,
        #[arg(long = "B")]
        window: ExactScalar,
        #[arg(long)]
        kmax: u32,
        #[arg(long)]
        beta: ExactScalar,
        #[arg(long)]
        mmin: usize,
    },
    /// Construct a good perturbation at scale `k`.
    Perturb {
        #[command(flatten)]
        args: FriendArgs,
        #[arg(long)]
        x: ExactScalar,
        /// One-based discontinuity index.
        #[arg(long)]
        i: usize,
        #[arg(long)]
        k: u32,
        /// Sup-norm bound of the family; defaults to ‖f‖_∞.
        #[arg(long = "D")]
        bound: Option<ExactScalar>,
    },
    /// Compare the orbits of `x` and `z` from height `t`.
    Shadow {
        #[command(flatten)]
        args: FriendArgs,
        #[arg(long)]
        x: ExactScalar,
        #[arg(long)]
        z: ExactScalar,
        #[arg(long, default_value = "0", allow_hyphen_values = true)]
        t: ExactScalar,
        #[arg(long)]
        k: u32,
    },
}

#[derive(Subcommand)]
enum LabCmd {
    /// Run one experiment, or `all` configured ones; exit 0 iff every check passes.
    Run {
        experiment: String,
        #[arg(long)]
        config: PathBuf,
        /// Overrides the config's output directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Names accepted by `lab run`.
    List,
}

fn print_json<T: Serialize>(v: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(v)?);
    Ok(())
}

fn one_based(i: usize, what: &str) -> Result<usize> {
    if i == 0 {
        bail!("{what} is one-based");
    }
    Ok(i - 1)
}

#[derive(Serialize)]
struct Description {
    permutation: Vec<usize>,
    lengths: Vec<ExactScalar>,
    starts: Vec<ExactScalar>,
    discontinuities: Vec<ExactScalar>,
    offsets: Vec<ExactScalar>,
    irreducible: bool,
}

fn iet_cmd(cmd: IetCmd) -> Result<()> {
    match cmd {
        IetCmd::Describe { src } => {
            let iet = src.load()?;
            print_json(&Description {
                permutation: iet.permutation().one_based(),
                lengths: iet.lengths().to_vec(),
                starts: iet.starts().to_vec(),
                discontinuities: iet.discontinuities().to_vec(),
                offsets: iet.offsets().to_vec(),
                irreducible: iet.permutation().is_irreducible(),
            })
        }
        IetCmd::Orbit { src, x, n, precision } => {
            let iet = src.load()?;
            println!("n,x,x_approx");
            for (m, p) in iet.orbit(&x, n)?.iter().enumerate() {
                println!("{m},{p},{}", p.approximate(precision));
            }
            Ok(())
        }
        IetCmd::Idoc { src, depth } => {
            match src.load()?.check_idoc(depth)? {
                IdocOutcome::PassedToDepth(n) => println!("passed to depth {n}"),
                IdocOutcome::FailsAt { n, from, to } => {
                    println!("fails at n = {n}: T^{n} of discontinuity {} is discontinuity {}", from + 1, to + 1)
                }
            }
            Ok(())
        }
        IetCmd::Constants { src, depth } => print_json(&src.load()?.recurrence_constants(depth)?),
    }
}

fn step_cmd(cmd: StepCmd) -> Result<()> {
    match cmd {
        StepCmd::Sample { d, bound, seed, bits, jump_floor } => {
            let family = BoundedFamily::new(d, bound)?;
            let options = SampleOptions { bits, jump_floor, ..SampleOptions::default() };
            println!("{}", io::step_to_json(&sample_step(&family, seed, &options)?));
            Ok(())
        }
        StepCmd::Nudge { src, i, zeta } => {
            let f = src.load()?;
            let g = f.nudge(one_based(i, "--i")?, &zeta)?;
            #[derive(Serialize)]
            struct Nudged {
                function: StepFile,
                distance: ExactScalar,
                mean: ExactScalar,
            }
            print_json(&Nudged {
                distance: f.distance(&g)?,
                mean: g.mean(),
                function: StepFile::from_step(&g),
            })
        }
    }
}

fn skew_cmd(cmd: SkewCmd) -> Result<()> {
    match cmd {
        SkewCmd::Birkhoff { args, n } => {
            let (iet, f) = (args.iet.load()?, args.step.load()?);
            let sums = birkhoff_sum(&iet, &f, &args.x, n)?;
            let xs = iet.orbit(&args.x, n + 1)?;
            println!("n,x,x_approx,s_n,s_n_approx");
            for (m, (p, s)) in xs.iter().zip(&sums).enumerate() {
                println!("{m},{p},{},{s},{}", p.approximate(args.precision), s.approximate(args.precision));
            }
        }
        SkewCmd::Visits { args, window, n } => {
            let (iet, f) = (args.iet.load()?, args.step.load()?);
            let start = SkewState::new(args.x, args.t)?;
            println!("{}", visit_count(&iet, &f, &start, &Window::new(window)?, n));
        }
        SkewCmd::Induced { args, window, n, cap } => {
            let (iet, f) = (args.iet.load()?, args.step.load()?);
            let window = Window::new(window)?;
            let mut s = SkewState::new(args.x, args.t)?;
            println!("step,return_time,x,t,x_approx,t_approx");
            println!("0,0,{},{},{},{}", s.x, s.t, s.x.approximate(args.precision), s.t.approximate(args.precision));
            for m in 1..=n {
                let (next, r) = induced_step(&iet, &f, &window, &s, cap)?;
                println!(
                    "{m},{r},{},{},{},{}",
                    next.x,
                    next.t,
                    next.x.approximate(args.precision),
                    next.t.approximate(args.precision)
                );
                s = next;
            }
        }
        SkewCmd::Measure { args, window, n, nx, nt, cap } => {
            let (iet, f) = (args.iet.load()?, args.step.load()?);
            let start = SkewState::new(args.x, args.t)?;
            let m = empirical_measure(&iet, &f, &Window::new(window)?, &start, n, Grid { nx, nt }, cap)?;
            println!("column,row,count,fraction");
            let fractions = m.fractions();
            for row in 0..nt {
                for col in 0..nx {
                    println!("{col},{row},{},{:.6}", m.count(col, row), fractions[row * nx + col]);
                }
            }
        }
    }
    Ok(())
}

fn induce_cmd(cmd: InduceCmd) -> Result<()> {
    match cmd {
        InduceCmd::Run { src, depth, cap } => {
            let ind = run_induction(&src.load()?, depth, cap)?;
            let b = ind.piece_count();
            let cols: Vec<String> = (1..=b).map(|j| format!("col{j}")).collect();
            println!("k,row,{}", cols.join(","));
            for (k, m) in ind.matrices.iter().enumerate() {
                for i in 0..b {
                    let entries: Vec<String> = (0..b).map(|j| m.get(i, j).to_string()).collect();
                    println!("{k},{},{}", i + 1, entries.join(","));
                }
            }
        }
        InduceCmd::Facts { src, depth, cap } => print_json(&check_facts(&run_induction(&src.load()?, depth, cap)?)?)?,
        InduceCmd::Oracle { src, k, l, j, cap } => {
            let iet = src.load()?;
            if l <= k {
                bail!("need k < l");
            }
            let j = one_based(j, "--j")?;
            let ind = run_induction(&iet, l, cap)?;
            let brute = return_time_oracle(&iet, &ind, k, l, j, cap)?;
            let column = matrix_product(&ind, k, l - k - 1)?.column_sums()[j];
            println!("oracle,column_sum,equal");
            println!("{brute},{column},{}", brute == column);
        }
    }
    Ok(())
}

fn friend_cmd(cmd: FriendCmd) -> Result<()> {
    match cmd {
        FriendCmd::Check { args, x, t, window, kmax, beta, mmin } => {
            let (iet, f) = (args.iet.load()?, args.step.load()?);
            let delta = args.delta(&iet)?;
            let start = SkewState::new(x, t)?;
            print_json(&friendship_report(&iet, &f, &start, &Window::new(window)?, &delta, kmax, &beta, mmin)?)
        }
        FriendCmd::Perturb { args, x, i, k, bound } => {
            let (iet, f) = (args.iet.load()?, args.step.load()?);
            let mut rc = iet.recurrence_constants(args.recurrence_depth)?;
            if let Some(d) = &args.delta {
                rc.delta = d.clone();
            }
            let family = BoundedFamily::new(f.discontinuity_count(), bound.unwrap_or_else(|| f.sup_norm()))?;
            let pc = perturbation_constants(&rc, &family, f.xi())?;
            print_json(&construct_good_perturbation(&iet, &f, &x, one_based(i, "--i")?, k, &pc)?)
        }
        FriendCmd::Shadow { args, x, z, t, k } => {
            let (iet, f) = (args.iet.load()?, args.step.load()?);
            let delta = args.delta(&iet)?;
            print_json(&shadow_orbit(&iet, &f, &x, &z, &t, k, &delta)?)
        }
    }
}

fn lab_cmd(cmd: LabCmd) -> Result<bool> {
    match cmd {
        LabCmd::List => {
            for e in Experiment::ALL {
                println!("{e}");
            }
            println!("all");
            Ok(true)
        }
        LabCmd::Run { experiment, config, out } => {
            let cfg = ExperimentConfig::load(&config).with_context(|| format!("loading {}", config.display()))?;
            let report = if experiment == "all" {
                run_campaign(&cfg)?
            } else {
                run_experiment(&cfg, experiment.parse()?)?
            };
            let dir = out.unwrap_or_else(|| cfg.output.clone());
            let files = emit_report(&report, &dir)?;
            for c in &report.checks {
                println!(
                    "{} [{}] {}: observed {} vs {} ({})",
                    if c.pass { "PASS" } else { "FAIL" },
                    c.experiment,
                    c.name,
                    c.observed,
                    c.threshold,
                    c.source
                );
            }
            for f in files {
                println!("wrote {}", f.display());
            }
            Ok(report.passed())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Iet(c) => iet_cmd(c).map(|_| true),
        Command::Step(c) => step_cmd(c).map(|_| true),
        Command::Skew(c) => skew_cmd(c).map(|_| true),
        Command::Induce(c) => induce_cmd(c).map(|_| true),
        Command::Friend(c) => friend_cmd(c).map(|_| true),
        Command::Lab(c) => lab_cmd(c),
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
