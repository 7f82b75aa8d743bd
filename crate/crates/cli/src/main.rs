use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;
use treepotts::graphgen::Model;
use treepotts_cli::{run, write_outputs, Command, ExperimentConfig, Point};

/// Potts phase diagrams, Swendsen-Wang sampling and exact tree laws on
/// random regular graphs.
#[derive(Parser)]
#[command(name = "treepotts", version)]
struct Cli {
    /// JSON config; missing fields take the command's defaults.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads (results do not depend on it).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Print the effective config as JSON and exit.
    #[arg(long, global = true)]
    print_config: bool,
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Random regular graph with simplicity, tree-likeness and expansion stats.
    Gen(Overrides),
    /// beta_free, beta_c and beta_+ over B in [0, B_+], CSV and SVG per panel.
    Phase(Overrides),
    /// Bethe fixed points, free energies and region at each parameter point.
    Fixedpoint(Overrides),
    /// Swendsen-Wang run at one point with observables against tree predictions.
    Sample(Overrides),
    /// Neighborhood-law distances and bond checks per parameter point.
    Lwc(Overrides),
    /// Laws conditioned on the dominant color at B = 0.
    Purestate(Overrides),
    /// Two-mode probe on the critical line.
    Critical(Overrides),
    /// Thermodynamic integration against the Bethe free energy.
    FreeEnergy(Overrides),
    /// Exhaustive oracle suite on small instances.
    Oracle(Overrides),
}

#[derive(Args, Default)]
struct Overrides {
    #[arg(long)]
    q: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    /// Replaces the parameter points by one point (with --field).
    #[arg(long)]
    beta: Option<f64>,
    #[arg(long)]
    field: Option<f64>,
    /// Graph size.
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    model: Option<Model>,
    #[arg(long)]
    chains: Option<usize>,
    #[arg(long)]
    burn_in: Option<usize>,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    thin: Option<usize>,
}

impl Cmd {
    fn split(&self) -> (Command, &Overrides) {
        match self {
            Cmd::Gen(o) => (Command::Gen, o),
            Cmd::Phase(o) => (Command::Phase, o),
            Cmd::Fixedpoint(o) => (Command::Fixedpoint, o),
            Cmd::Sample(o) => (Command::Sample, o),
            Cmd::Lwc(o) => (Command::Lwc, o),
            Cmd::Purestate(o) => (Command::Purestate, o),
            Cmd::Critical(o) => (Command::Critical, o),
            Cmd::FreeEnergy(o) => (Command::FreeEnergy, o),
            Cmd::Oracle(o) => (Command::Oracle, o),
        }
    }
}

fn apply(cfg: &mut ExperimentConfig, cli: &Cli, o: &Overrides) {
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(t) = cli.threads {
        cfg.threads = Some(t);
    }
    if let Some(dir) = &cli.out_dir {
        cfg.out_dir = dir.clone();
    }
    if let Some(q) = o.q {
        cfg.q = q;
        cfg.points.iter_mut().for_each(|p| p.q = None);
    }
    if let Some(d) = o.d {
        cfg.d = d;
    }
    if o.q.is_some() || o.d.is_some() {
        cfg.panels = vec![(cfg.q, cfg.d)];
    }
    if o.beta.is_some() || o.field.is_some() {
        let first = cfg.points.first().copied().unwrap_or(Point::new(0.0, 0.0));
        cfg.points = vec![Point {
            q: None,
            beta: o.beta.unwrap_or(first.beta),
            field: o.field.unwrap_or(first.field),
        }];
    }
    if let Some(n) = o.n {
        cfg.graph.n = n;
    }
    if let Some(m) = o.model {
        cfg.graph.model = m;
    }
    if let Some(c) = o.chains {
        cfg.chains = c;
    }
    if let Some(b) = o.burn_in {
        cfg.budget.burn_in = b;
    }
    if let Some(s) = o.samples {
        cfg.budget.samples = s;
    }
    if let Some(t) = o.thin {
        cfg.budget.thin = t;
    }
}

fn main_inner() -> Result<bool> {
    let cli = Cli::parse();
    let (cmd, overrides) = cli.cmd.split();
    let mut cfg = ExperimentConfig::load(cmd, cli.config.as_deref())?;
    apply(&mut cfg, &cli, overrides);
    if cli.print_config {
        println!("{}", serde_json::to_string_pretty(&cfg)?);
        return Ok(true);
    }
    if let Some(t) = cfg.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(t)
            .build_global()
            .context("configuring the thread pool")?;
    }
    let start = Instant::now();
    let out = run(cmd, &cfg)?;
    let elapsed = start.elapsed().as_secs_f64();
    for c in &out.checks {
        let status = if c.pass { "PASS" } else { "FAIL" };
        let detail = if c.detail.is_empty() {
            String::new()
        } else {
            format!("  {}", c.detail)
        };
        println!(
            "{status}  {}  value {:.6e} threshold {:.6e}{detail}",
            c.name, c.value, c.threshold
        );
    }
    for path in write_outputs(&cfg, &out, elapsed)? {
        println!("wrote {}", path.display());
    }
    let pass = out.pass();
    println!(
        "{} {}: {}/{} checks pass in {elapsed:.1} s",
        cfg.experiment,
        if pass { "PASS" } else { "FAIL" },
        out.checks.iter().filter(|c| c.pass).count(),
        out.checks.len()
    );
    Ok(pass)
}

fn main() -> ExitCode {
    match main_inner() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
