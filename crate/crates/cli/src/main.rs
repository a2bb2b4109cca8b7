use std::fs;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use nestlat::harness::pairs::point_specs;
use nestlat::harness::sim::{fine_g, EXPLICIT_TABLE_CAP};
use nestlat::harness::{bound_points, reproduce, write_bound_csv, write_simulate_csv, Figure, ReproOptions, SimConfig};
use nestlat::lattice::{named, NAMED_TAGS};
use nestlat::nesting::{coset_leaders_capped, is_clean_capped, rotation_degrees, verify_nesting};
use nestlat::theta::{theta_direct_pair, theta_modular_pair};
use nestlat::{Error, Method, Result};

#[derive(Parser)]
#[command(name = "nestlat", version, about = "Nested lattice codes for Wyner-Ziv coding")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Monte Carlo rate-distortion points
    Simulate(SimArgs),
    /// Analytic rate-distortion bounds
    Bound(BoundArgs),
    /// Theta series and its derivative
    Theta(ThetaArgs),
    /// Build nested pairs and report their properties
    NestCheck(NestArgs),
    /// Regenerate figure data
    Reproduce(ReproArgs),
    /// Known lattice tags
    ListLattices,
}

#[derive(Args)]
struct PairArgs {
    /// Flat key = value configuration file
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a configuration key
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    lattice: Option<String>,
    /// scale-rotate, complex, quaternion or construction-a
    #[arg(long)]
    construction: Option<String>,
    /// Comma-separated rates in bits per dimension
    #[arg(long)]
    rates: Option<String>,
    /// Comma-separated construction parameters
    #[arg(long)]
    params: Option<String>,
    #[arg(long)]
    sigma_z_sq: Option<f64>,
}

impl PairArgs {
    fn config(&self) -> Result<SimConfig> {
        let mut c = match &self.config {
            Some(p) => SimConfig::parse(&fs::read_to_string(p)?)?,
            None => SimConfig::default(),
        };
        let flags = [
            ("lattice", self.lattice.clone()),
            ("construction", self.construction.clone()),
            ("rates", self.rates.clone()),
            ("params", self.params.clone()),
            ("sigma_z_sq", self.sigma_z_sq.map(|v| v.to_string())),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                c.set(k, &v)?;
            }
        }
        for kv in &self.set {
            let (k, v) = kv.split_once('=').ok_or_else(|| Error::Config(format!("expected KEY=VALUE, got `{kv}`")))?;
            c.set(k.trim(), v.trim())?;
        }
        Ok(c)
    }
}

#[derive(Args)]
struct SimArgs {
    #[command(flatten)]
    pair: PairArgs,
    #[arg(long)]
    samples: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// on or off
    #[arg(long)]
    mmse: Option<String>,
    #[arg(long)]
    threads: Option<usize>,
    /// CSV output path (stdout if absent)
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct BoundArgs {
    #[command(flatten)]
    pair: PairArgs,
    /// Comma-separated methods
    #[arg(long, default_value = "wz-limit,lower-packing,upper-q-integral,upper-theta")]
    methods: String,
    #[arg(long, short)]
    output: Option<PathBuf>,
}

#[derive(Args)]
struct ThetaArgs {
    #[arg(long)]
    lattice: String,
    /// Comma-separated values of tau
    #[arg(long, default_value = "0.5,1,2")]
    tau: String,
}

#[derive(Args)]
struct NestArgs {
    #[command(flatten)]
    pair: PairArgs,
}

#[derive(Args)]
struct ReproArgs {
    /// fig1 … fig7, or all
    #[arg(long, default_value = "all")]
    figure: String,
    #[arg(long, default_value = "figures")]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    #[arg(long, default_value_t = 0)]
    threads: usize,
}

fn output(path: &Option<PathBuf>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(fs::File::create(p)?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    })
}

fn simulate(a: &SimArgs) -> Result<()> {
    let mut c = a.pair.config()?;
    if let Some(v) = a.samples {
        c.samples = v;
    }
    if let Some(v) = a.seed {
        c.seed = v;
    }
    if let Some(v) = &a.mmse {
        c.set("mmse", v)?;
    }
    if let Some(v) = a.threads {
        c.threads = v;
    }
    if a.output.is_some() {
        c.output = a.output.clone();
    }
    c.validate()?;
    let pts = nestlat::harness::sim::simulate_with_progress(&c, |p| {
        eprintln!("R = {:.4}: D = {:.6e} ({:+.3} dB)", p.rate, p.distortion, p.gap_db(c.sigma_z_sq));
    })?;
    let mut w = output(&c.output)?;
    write_simulate_csv(&mut w, &pts)?;
    w.flush()?;
    Ok(())
}

fn bound(a: &BoundArgs) -> Result<()> {
    let c = a.pair.config()?;
    if c.rates.is_empty() {
        return Err(Error::Config("bound needs --rates".into()));
    }
    let methods = a.methods.split(',').map(|m| m.trim().parse::<Method>()).collect::<Result<Vec<_>>>()?;
    let pts = bound_points(&c, &methods)?;
    let mut w = output(&a.output)?;
    write_bound_csv(&mut w, &pts)?;
    w.flush()?;
    Ok(())
}

fn theta(a: &ThetaArgs) -> Result<()> {
    let lat = named(&a.lattice)?;
    let mut w = output(&None)?;
    writeln!(w, "tau,theta,dtheta,path")?;
    for t in a.tau.split(',') {
        let tau: f64 = t.trim().parse().map_err(|_| Error::Config(format!("bad tau `{t}`")))?;
        if !(tau > 0.0) {
            return Err(Error::Config(format!("tau must be positive, got {tau}")));
        }
        let (th, d) = theta_direct_pair(&lat, tau, 1e-15)?;
        writeln!(w, "{tau},{th},{d},direct")?;
        if let Some((th, d)) = theta_modular_pair(&lat, tau)? {
            writeln!(w, "{tau},{th},{d},modular")?;
        }
    }
    w.flush()?;
    Ok(())
}

fn nest_check(a: &NestArgs) -> Result<()> {
    let c = a.pair.config()?;
    if c.rates.is_empty() && c.params.is_empty() {
        return Err(Error::Config("nest-check needs --rates or --params".into()));
    }
    let mut w = output(&None)?;
    writeln!(w, "params,N,rate,nested,clean,leaders,rotation_deg")?;
    for spec in point_specs(&c)? {
        let pair = spec.build(&c).map_err(|e| match e {
            e if e.is_config() => e,
            e => Error::InvalidNesting(format!("{} with {}: {e}", c.lattice, spec.label())),
        })?;
        let n = pair.nesting_ratio();
        let (clean, leaders) = if n <= EXPLICIT_TABLE_CAP {
            let t = coset_leaders_capped(&pair, EXPLICIT_TABLE_CAP)?;
            (is_clean_capped(&pair, EXPLICIT_TABLE_CAP)?.to_string(), t.len().to_string())
        } else {
            ("-".to_string(), "-".to_string())
        };
        let rot = rotation_degrees(&pair).map(|d| format!("{d:.4}")).unwrap_or_else(|| "-".into());
        writeln!(w, "{},{n},{},{},{clean},{leaders},{rot}", spec.label(), pair.rate(), verify_nesting(&pair))?;
    }
    w.flush()?;
    Ok(())
}

fn run_reproduce(a: &ReproArgs) -> Result<()> {
    let figs = if a.figure == "all" { Figure::ALL.to_vec() } else { vec![a.figure.parse()?] };
    let o = ReproOptions {
        out_dir: a.out_dir.clone(),
        samples: a.samples,
        seed: a.seed,
        threads: a.threads,
        ..ReproOptions::default()
    };
    if o.samples < nestlat::harness::config::MIN_SAMPLES {
        return Err(Error::Config(format!("samples must be at least {}", nestlat::harness::config::MIN_SAMPLES)));
    }
    for f in figs {
        for p in reproduce(f, &o)? {
            println!("{}", p.display());
        }
    }
    Ok(())
}

fn list_lattices() -> Result<()> {
    let mut w = output(&None)?;
    writeln!(w, "tag,dim,volume,decoder,G")?;
    for tag in ["Z1", "Z2", "A2", "D3", "D3*", "D4", "Z8", "E8", "Leech"] {
        let l = named(tag)?;
        writeln!(w, "{tag},{},{},{},{:.7}", l.dim(), l.volume(), l.decoder().as_str(), fine_g(&l))?;
    }
    writeln!(w, "# tag patterns: {}", NAMED_TAGS.join(", "))?;
    w.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let r = match &cli.command {
        Command::Simulate(a) => simulate(a),
        Command::Bound(a) => bound(a),
        Command::Theta(a) => theta(a),
        Command::NestCheck(a) => nest_check(a),
        Command::Reproduce(a) => run_reproduce(a),
        Command::ListLattices => list_lattices(),
    };
    match r {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(if e.is_config() { 2 } else { 3 })
        }
    }
}
