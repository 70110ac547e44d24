use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use ptring_core::export::{self, fmt_float};
use ptring_core::transport::decoupled_levels;
use ptring_core::{
    accidental_singular, branch_weights, classify_directionality, classify_large_eta,
    delta_theta_a, delta_theta_eta, detect_events, edge_theta_small_a, is_opaque, local_flux,
    localized_pair_energy, pt_threshold, solve_spectrum, structural_singular, sweep_spectrum,
    Complex64, EigenPair, FluxProfile, RingConfig, SingularPrediction, SweepResult, Tolerances,
};
use serde::Serialize;

/// Spectra, singularities and stationary transport of a PT-symmetric ring.
#[derive(Parser)]
#[command(name = "ptring", version)]
struct Cli {
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,

    /// Output formats.
    #[arg(long, global = true, value_delimiter = ',', default_value = "csv,json")]
    format: Vec<Format>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Subcommand)]
enum Command {
    /// Eigenvalues, quasi-momenta and eigenvectors.
    Spectrum(RingArgs),
    /// Spectrum along a gain grid, real-eigenvalue counts and singular events.
    Sweep {
        #[command(flatten)]
        ring: RingArgs,
        #[command(flatten)]
        range: RangeArgs,
    },
    /// Stationary bond fluxes of every state.
    Flux(RingArgs),
    /// Structural and accidental singular states of a ring geometry.
    Singular {
        #[arg(long)]
        n: usize,
        /// Distance k' - k between the leads.
        #[arg(long)]
        d: usize,
    },
    /// Perturbative shifts and large-gain classes.
    Asymptotics(RingArgs),
    /// Transport class and branch localization of every state.
    Classify(RingArgs),
    /// Dataset behind one of the reference figures (1 to 7).
    ReproduceFigure {
        #[arg(long, value_parser = clap::value_parser!(u8).range(1..=7))]
        id: u8,
    },
}

#[derive(Args)]
struct RingArgs {
    /// JSON file with a ring configuration; replaces the ring flags.
    #[arg(long, conflicts_with_all = ["n", "k", "kp", "a", "eta", "general"])]
    config: Option<PathBuf>,
    /// Number of sites.
    #[arg(long)]
    n: Option<usize>,
    /// Gain site (1-based).
    #[arg(long, default_value_t = 1)]
    k: usize,
    /// Loss site (1-based).
    #[arg(long)]
    kp: Option<usize>,
    /// Real onsite energy at both leads.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    a: f64,
    /// Gain/loss strength.
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    eta: f64,
    /// Arbitrary complex onsite energies instead of the PT pair.
    #[arg(long, requires_all = ["alpha_re", "alpha_im", "beta_re", "beta_im"])]
    general: bool,
    #[arg(long, requires = "general", allow_negative_numbers = true)]
    alpha_re: Option<f64>,
    #[arg(long, requires = "general", allow_negative_numbers = true)]
    alpha_im: Option<f64>,
    #[arg(long, requires = "general", allow_negative_numbers = true)]
    beta_re: Option<f64>,
    #[arg(long, requires = "general", allow_negative_numbers = true)]
    beta_im: Option<f64>,
}

#[derive(Args)]
struct RangeArgs {
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    eta_min: f64,
    #[arg(long, default_value_t = 3.0, allow_negative_numbers = true)]
    eta_max: f64,
    /// Grid points, including both ends.
    #[arg(long, default_value_t = 301)]
    points: usize,
}

/// Input mistakes: exit status 2.
#[derive(Debug)]
struct ConfigError(String);

impl std::fmt::Display for ConfigError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for ConfigError {}

impl RingArgs {
    fn config(&self) -> anyhow::Result<RingConfig> {
        if let Some(path) = &self.config {
            let text =
                fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            return serde_json::from_str(&text)
                .map_err(|e| ConfigError(format!("{}: {e}", path.display())).into());
        }
        let (Some(n), Some(kp)) = (self.n, self.kp) else {
            return Err(
                ConfigError("--n and --kp are required unless --config is given".into()).into(),
            );
        };
        let cfg = if self.general {
            let c = |re: Option<f64>, im: Option<f64>| {
                Complex64::new(re.unwrap_or(0.0), im.unwrap_or(0.0))
            };
            RingConfig::new(
                n,
                self.k,
                kp,
                c(self.alpha_re, self.alpha_im),
                c(self.beta_re, self.beta_im),
            )
        } else {
            RingConfig::pt(n, self.k, kp, self.a, self.eta)
        };
        Ok(cfg?)
    }
}

/// Files written so far, removed again if the command fails.
struct Outputs {
    dir: PathBuf,
    csv: bool,
    json: bool,
    written: Vec<PathBuf>,
}

impl Outputs {
    fn new(dir: &Path, formats: &[Format]) -> Self {
        Self {
            dir: dir.to_path_buf(),
            csv: formats.contains(&Format::Csv),
            json: formats.contains(&Format::Json),
            written: Vec::new(),
        }
    }

    fn file(
        &mut self,
        name: &str,
        body: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>,
    ) -> anyhow::Result<()> {
        let path = self.dir.join(name);
        if let Some(parent) = path.parent() {
            fs::create_dir_all(parent).with_context(|| format!("creating {}", parent.display()))?;
        }
        let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
        self.written.push(path.clone());
        let mut w = BufWriter::new(file);
        body(&mut w)
            .and_then(|()| w.flush())
            .with_context(|| format!("writing {}", path.display()))
    }

    fn csv(
        &mut self,
        name: &str,
        body: impl FnOnce(&mut BufWriter<File>) -> io::Result<()>,
    ) -> anyhow::Result<()> {
        if self.csv {
            self.file(&format!("{name}.csv"), body)?;
        }
        Ok(())
    }

    fn json<T: Serialize + ?Sized>(&mut self, name: &str, value: &T) -> anyhow::Result<()> {
        if self.json {
            self.file(&format!("{name}.json"), |w| export::write_json(w, value))?;
        }
        Ok(())
    }

    fn discard(&self) {
        for path in &self.written {
            let _ = fs::remove_file(path);
        }
    }
}

fn write_spectrum(
    out: &mut Outputs,
    name: &str,
    cfg: &RingConfig,
    pairs: &[EigenPair],
) -> anyhow::Result<()> {
    #[derive(Serialize)]
    struct Doc<'a> {
        config: &'a RingConfig,
        states: &'a [EigenPair],
    }
    out.csv(name, |w| export::write_spectrum_csv(w, pairs))?;
    out.csv(&format!("{name}_vectors"), |w| {
        export::write_vectors_csv(w, pairs)
    })?;
    out.json(
        name,
        &Doc {
            config: cfg,
            states: pairs,
        },
    )
}

fn run_sweep(
    out: &mut Outputs,
    name: &str,
    cfg: &RingConfig,
    range: (f64, f64, usize),
    tol: &Tolerances,
) -> anyhow::Result<SweepResult> {
    #[derive(Serialize)]
    struct Doc<'a> {
        config: &'a RingConfig,
        eta_pt: Option<f64>,
        events: Vec<export::EventRecord>,
    }
    let sweep = sweep_spectrum(cfg, range.0, range.1, range.2, tol)?;
    let events = detect_events(&sweep, cfg, tol)?;
    let eta_pt = if cfg.is_pt() {
        Some(pt_threshold(cfg, tol)?)
    } else {
        None
    };
    out.csv(name, |w| export::write_sweep_csv(w, &sweep))?;
    out.csv(&format!("{name}_real_count"), |w| {
        export::write_real_count_csv(w, &sweep)
    })?;
    out.csv(&format!("{name}_events"), |w| {
        export::write_events_csv(w, &events)
    })?;
    let doc = Doc {
        config: cfg,
        eta_pt,
        events: events.iter().map(export::EventRecord::from).collect(),
    };
    out.json(&format!("{name}_events"), &doc)?;
    Ok(sweep)
}

fn fluxes(
    pairs: &[EigenPair],
    cfg: &RingConfig,
    tol: &Tolerances,
) -> anyhow::Result<Vec<(Complex64, FluxProfile)>> {
    Ok(pairs
        .iter()
        .map(|p| Ok((p.energy, local_flux(p, cfg, tol)?)))
        .collect::<ptring_core::Result<_>>()?)
}

fn write_flux(
    out: &mut Outputs,
    name: &str,
    cfg: &RingConfig,
    tol: &Tolerances,
) -> anyhow::Result<()> {
    #[derive(Serialize)]
    struct Doc<'a> {
        config: &'a RingConfig,
        states: Vec<export::FluxRecord>,
    }
    let pairs = solve_spectrum(cfg)?;
    let states = fluxes(&pairs, cfg, tol)?;
    out.csv(name, |w| export::write_flux_csv(w, &states))?;
    out.json(
        name,
        &Doc {
            config: cfg,
            states: export::flux_records(&states),
        },
    )
}

fn write_singular(out: &mut Outputs, name: &str, n: usize, d: usize) -> anyhow::Result<()> {
    #[derive(Serialize)]
    struct Doc {
        n_sites: usize,
        d: usize,
        structural: Vec<SingularPrediction>,
        accidental: Vec<SingularPrediction>,
    }
    if n < 3 || d == 0 || d >= n {
        return Err(ConfigError(format!("need N >= 3 and 0 < d < N, got N={n}, d={d}")).into());
    }
    let structural = structural_singular(n, d)?;
    let accidental = accidental_singular(n, d)?;
    out.csv(name, |w| {
        writeln!(w, "kind,theta_over_pi,energy,tuned_a")?;
        for s in structural.iter().chain(&accidental) {
            let v = serde_json::to_value(s)?;
            let tuned = s.tuned_a.map(fmt_float).unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{tuned}",
                v["kind"].as_str().unwrap_or_default(),
                v["theta_over_pi"].as_str().unwrap_or_default(),
                fmt_float(s.energy)
            )?;
        }
        Ok(())
    })?;
    out.json(
        name,
        &Doc {
            n_sites: n,
            d,
            structural,
            accidental,
        },
    )
}

fn write_asymptotics(out: &mut Outputs, name: &str, cfg: &RingConfig) -> anyhow::Result<()> {
    #[derive(Serialize)]
    struct Shift {
        m: usize,
        theta0: f64,
        delta_theta_eta: Complex64,
        delta_theta_a: Option<f64>,
    }
    #[derive(Serialize)]
    struct Doc<'a> {
        config: &'a RingConfig,
        first_order: Vec<Shift>,
        band_edge_theta: Vec<Complex64>,
        large_eta: Vec<ptring_core::LargeEtaClass>,
        localized_pair: Option<(Complex64, Complex64)>,
    }
    let n = cfg.n_sites();
    let mut first_order = Vec::new();
    for m in 0..n {
        let theta0 = 2.0 * std::f64::consts::PI * m as f64 / n as f64;
        first_order.push(Shift {
            m,
            theta0,
            delta_theta_eta: delta_theta_eta(theta0, cfg)?,
            delta_theta_a: delta_theta_a(theta0, cfg).ok(),
        });
    }
    let mut band_edge_theta = vec![edge_theta_small_a(0.0, cfg.a(), cfg)?];
    if n.is_multiple_of(2) {
        band_edge_theta.push(edge_theta_small_a(std::f64::consts::PI, cfg.a(), cfg)?);
    }
    let large_eta = classify_large_eta(cfg)?;
    let localized_pair = localized_pair_energy(cfg.a(), cfg.eta()).ok();
    out.csv(name, |w| {
        writeln!(w, "m,theta0,re_dtheta_eta,im_dtheta_eta,dtheta_a")?;
        for s in &first_order {
            let da = s.delta_theta_a.map(fmt_float).unwrap_or_default();
            writeln!(
                w,
                "{},{},{},{},{da}",
                s.m,
                fmt_float(s.theta0),
                fmt_float(s.delta_theta_eta.re),
                fmt_float(s.delta_theta_eta.im)
            )?;
        }
        Ok(())
    })?;
    out.json(
        name,
        &Doc {
            config: cfg,
            first_order,
            band_edge_theta,
            large_eta,
            localized_pair,
        },
    )
}

fn write_classification(
    out: &mut Outputs,
    name: &str,
    cfg: &RingConfig,
    tol: &Tolerances,
) -> anyhow::Result<()> {
    #[derive(Serialize)]
    struct State {
        state_id: usize,
        #[serde(rename = "re_E")]
        re_e: f64,
        #[serde(rename = "im_E")]
        im_e: f64,
        transport_class: ptring_core::TransportClass,
        opaque: bool,
        weights: ptring_core::BranchWeights,
        directionality: ptring_core::Directionality,
        short_level: Option<usize>,
        long_level: Option<usize>,
    }
    #[derive(Serialize)]
    struct Doc<'a> {
        config: &'a RingConfig,
        short_levels: Vec<f64>,
        long_levels: Vec<f64>,
        states: Vec<State>,
    }
    let pairs = solve_spectrum(cfg)?;
    let flux = fluxes(&pairs, cfg, tol)?;
    let tags = classify_directionality(&pairs, cfg);
    let states: Vec<State> = pairs
        .iter()
        .zip(&flux)
        .zip(&tags)
        .enumerate()
        .map(|(i, ((pair, (_, f)), tag))| State {
            state_id: i,
            re_e: pair.energy.re,
            im_e: pair.energy.im,
            transport_class: f.transport_class,
            opaque: is_opaque(pair, cfg),
            weights: branch_weights(pair, cfg),
            directionality: tag.tag,
            short_level: tag.short_level,
            long_level: tag.long_level,
        })
        .collect();
    out.csv(name, |w| {
        writeln!(
            w,
            "state_id,re_E,im_E,transport_class,opaque,w_short,w_long,w_leads,ratio,directionality"
        )?;
        for s in &states {
            let class = serde_json::to_value(s.transport_class)?;
            let dir = serde_json::to_value(s.directionality)?;
            writeln!(
                w,
                "{},{},{},{},{},{},{},{},{},{}",
                s.state_id,
                fmt_float(s.re_e),
                fmt_float(s.im_e),
                class.as_str().unwrap_or_default(),
                u8::from(s.opaque),
                fmt_float(s.weights.w_short),
                fmt_float(s.weights.w_long),
                fmt_float(s.weights.w_leads),
                fmt_float(s.weights.ratio),
                dir.as_str().unwrap_or_default()
            )?;
        }
        Ok(())
    })?;
    let (short_levels, long_levels) = decoupled_levels(cfg);
    out.json(
        name,
        &Doc {
            config: cfg,
            short_levels,
            long_levels,
            states,
        },
    )
}

fn reproduce_figure(out: &mut Outputs, id: u8, tol: &Tolerances) -> anyhow::Result<()> {
    let dir = format!("fig{id}");
    let pt = |n, k, kp, a| RingConfig::pt(n, k, kp, a, 0.0);
    match id {
        1 => {
            for a in [0.0, 1.5] {
                run_sweep(
                    out,
                    &format!("{dir}/sweep_a{a}"),
                    &pt(6, 1, 3, a)?,
                    (0.0, 3.0, 301),
                    tol,
                )?;
            }
        }
        2 => {
            for eta in [0.05, 1.5, 3.0] {
                write_flux(
                    out,
                    &format!("{dir}/flux_eta{eta}"),
                    &RingConfig::pt(6, 1, 3, 0.5, eta)?,
                    tol,
                )?;
            }
        }
        3 => {
            for a in [0.5, 0.0] {
                let cfg = pt(6, 1, 4, a)?;
                run_sweep(
                    out,
                    &format!("{dir}/sweep_a{a}"),
                    &cfg,
                    (0.0, 3.0, 301),
                    tol,
                )?;
            }
            write_singular(out, &format!("{dir}/singular"), 6, 3)?;
        }
        4 => {
            run_sweep(
                out,
                &format!("{dir}/sweep"),
                &pt(5, 1, 3, 0.5)?,
                (0.0, 3.0, 301),
                tol,
            )?;
            write_singular(out, &format!("{dir}/singular"), 5, 2)?;
        }
        5 => {
            run_sweep(
                out,
                &format!("{dir}/sweep"),
                &pt(10, 1, 5, 0.5)?,
                (0.0, 12.0, 601),
                tol,
            )?;
        }
        6 => {
            for eta in [0.1, 10.0] {
                let cfg = RingConfig::pt(10, 1, 5, 0.5, eta)?;
                write_spectrum(
                    out,
                    &format!("{dir}/states_eta{eta}"),
                    &cfg,
                    &solve_spectrum(&cfg)?,
                )?;
                write_classification(out, &format!("{dir}/classify_eta{eta}"), &cfg, tol)?;
            }
        }
        7 => {
            run_sweep(
                out,
                &format!("{dir}/sweep"),
                &pt(12, 1, 5, 0.5)?,
                (0.0, 20.0, 801),
                tol,
            )?;
            for eta in [0.1, 20.0] {
                let cfg = RingConfig::pt(12, 1, 5, 0.5, eta)?;
                write_spectrum(
                    out,
                    &format!("{dir}/states_eta{eta}"),
                    &cfg,
                    &solve_spectrum(&cfg)?,
                )?;
                write_classification(out, &format!("{dir}/classify_eta{eta}"), &cfg, tol)?;
            }
        }
        _ => bail!(ConfigError(format!("unknown figure id {id}"))),
    }
    Ok(())
}

fn run(cli: &Cli, out: &mut Outputs) -> anyhow::Result<()> {
    let tol = Tolerances::from_env();
    match &cli.command {
        Command::Spectrum(ring) => {
            let cfg = ring.config()?;
            write_spectrum(out, "spectrum", &cfg, &solve_spectrum(&cfg)?)
        }
        Command::Sweep { ring, range } => {
            let cfg = ring.config()?;
            run_sweep(
                out,
                "sweep",
                &cfg,
                (range.eta_min, range.eta_max, range.points),
                &tol,
            )
            .map(|_| ())
        }
        Command::Flux(ring) => write_flux(out, "flux", &ring.config()?, &tol),
        Command::Singular { n, d } => write_singular(out, "singular", *n, *d),
        Command::Asymptotics(ring) => write_asymptotics(out, "asymptotics", &ring.config()?),
        Command::Classify(ring) => write_classification(out, "classify", &ring.config()?, &tol),
        Command::ReproduceFigure { id } => reproduce_figure(out, *id, &tol),
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<ptring_core::Error>() {
            return if e.is_config() { 2 } else { 3 };
        }
    }
    2
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut out = Outputs::new(&cli.out, &cli.format);
    match run(&cli, &mut out) {
        Ok(()) => {
            for path in &out.written {
                println!("{}", path.display());
            }
            ExitCode::SUCCESS
        }
        Err(err) => {
            out.discard();
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
