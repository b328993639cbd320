//! `landau-cone` — scenario runner. Every subcommand reads one TOML config
//! (`ScenarioFile` keys) and writes CSV or JSON to stdout or `--out`.
//!
//! Exit codes: 0 success, 1 pipeline error, 2 usage or config error,
//! 3 `verify` finished with failed criteria.

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use landau_cone::bloch::{compute_bands, compute_bands_with, torus_distance, BlochProblem};
use landau_cone::dirac::spectrum_L;
use landau_cone::error::Error;
use landau_cone::feshbach::{check_admissible, compare_spectra, random_admissible, RandomTripleSpec};
use landau_cone::harness::{prepare_problem, run_theorem_check, ProblemSource, ScenarioConfig, ScenarioFile};
use landau_cone::hopping::HoppingSet;
use landau_cone::local_model::{check_ellipticity, linearize_at_crossing, TwoBandSymbol};
use landau_cone::magnetic::{hofstadter_spectrum, FluxRational};
use landau_cone::sections::{build_global_section, check_section, open_gap, GapParams, SectionModel, SectionOptions};
use landau_cone::semiclassical::{cross_check_isospectral, ISO_TOL};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde_json::json;

#[derive(Parser, Debug)]
#[command(version, about, long_about = None)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Debug)]
struct Common {
    /// Scenario file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Cmd {
    /// Band energies on a res × res torus grid (CSV).
    Bands {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 32)]
        res: usize,
        /// Number of bands kept (default: all orbitals, or 4 for continuum problems).
        #[arg(long)]
        bands: Option<usize>,
    },
    /// Crossing point and hypothesis report (JSON).
    Crossing {
        #[command(flatten)]
        common: Common,
    },
    /// Linearization at the crossing and its ellipticity margin (JSON).
    Effmodel {
        #[command(flatten)]
        common: Common,
    },
    /// Gap opening and global sections of the gapped projector pair (JSON).
    Sections {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 64)]
        grid: usize,
        /// Gap strength; default c·r/8 from the hypothesis report.
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Magnetic spectrum at a rational flux (CSV).
    Hofstadter {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        flux: FluxRational,
        #[arg(long, num_args = 2, default_values_t = [4, 4])]
        grid: Vec<usize>,
        #[arg(long, num_args = 2, allow_negative_numbers = true, default_values_t = [-4.0, 4.0])]
        window: Vec<f64>,
    },
    /// 2D Hofstadter vs 1D Weyl route distance (JSON).
    Semiclassical {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        flux: FluxRational,
        #[arg(long, num_args = 2, default_values_t = [4, 4])]
        grid: Vec<usize>,
        #[arg(long, num_args = 2, allow_negative_numbers = true, default_values_t = [-4.0, 4.0])]
        window: Vec<f64>,
    },
    /// Lowest |λ| levels of the effective Dirac operator (CSV).
    Landau {
        #[command(flatten)]
        common: Common,
    },
    /// Random admissible triples against the Feshbach bound (JSON).
    FeshbachSuite {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 200)]
        count: usize,
        #[arg(long, default_value_t = 60)]
        dim: usize,
        #[arg(long, default_value_t = 2024)]
        seed: u64,
    },
    /// Full scaling check; artifacts go to `output_dir` when set (JSON report).
    Verify {
        #[command(flatten)]
        common: Common,
    },
}

enum Failure {
    Config(String),
    Pipeline(Error),
    Criteria,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure::Pipeline(e)
    }
}

type Res<T> = std::result::Result<T, Failure>;

fn load_config(path: &Path) -> Res<ScenarioConfig> {
    let text = fs::read_to_string(path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    let file: ScenarioFile = toml::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))?;
    // Relative problem files resolve against the config's directory.
    let base = path.parent().unwrap_or(Path::new("."));
    let mut file = file;
    for p in [&mut file.hoppings, &mut file.bloch, &mut file.output_dir].into_iter().flatten() {
        if p.is_relative() {
            *p = base.join(&*p);
        }
    }
    ScenarioConfig::try_from(file).map_err(|e| Failure::Config(e.to_string()))
}

fn read_json<T: serde::de::DeserializeOwned>(p: &Path) -> Res<T> {
    let text = fs::read_to_string(p).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?;
    serde_json::from_str(&text).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))
}

/// Tight-binding data for the magnetic stages; continuum sources go through
/// the full preparation (crossing → local symbol → interpolant).
fn load_hoppings(cfg: &ScenarioConfig) -> Res<HoppingSet> {
    match &cfg.source {
        ProblemSource::Builtin(b) => Ok(b.hoppings()),
        ProblemSource::Hoppings(p) => {
            let text = fs::read_to_string(p).map_err(|e| Failure::Config(format!("{}: {e}", p.display())))?;
            Ok(HoppingSet::from_json(&text)?)
        }
        ProblemSource::Bloch(_) => Ok(prepare_problem(cfg)?.hoppings),
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Res<()> {
    let r = match out {
        Some(p) => fs::write(p, text),
        None => std::io::stdout().lock().write_all(text.as_bytes()),
    };
    r.map_err(|e| Failure::Config(format!("writing output: {e}")))
}

fn pretty(v: &serde_json::Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("json values serialize");
    s.push('\n');
    s
}

fn window(v: &[f64]) -> Res<(f64, f64)> {
    match v {
        [lo, hi] if lo < hi => Ok((*lo, *hi)),
        _ => Err(Failure::Config(format!("window {v:?} must be lo < hi"))),
    }
}

fn grid2(v: &[usize]) -> Res<[usize; 2]> {
    match v {
        [a, b] if *a > 0 && *b > 0 => Ok([*a, *b]),
        _ => Err(Failure::Config(format!("grid {v:?} must be two positive integers"))),
    }
}

fn bands(cfg: &ScenarioConfig, res: usize, kept: Option<usize>) -> Res<String> {
    if res == 0 {
        return Err(Failure::Config("res must be positive".into()));
    }
    let grid = match &cfg.source {
        ProblemSource::Bloch(p) => {
            let problem: BlochProblem = read_json(p)?;
            compute_bands(&problem, res, kept.unwrap_or(4).min(problem.dim()))?
        }
        _ => {
            let h = load_hoppings(cfg)?;
            compute_bands_with(&h, res, kept.unwrap_or(h.orbitals()).min(h.orbitals()), [-PI, -PI], false)?
        }
    };
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut header = vec!["theta1".to_string(), "theta2".to_string()];
    header.extend((0..grid.bands()).map(|k| format!("lambda_{k}")));
    let io = |e: csv::Error| Failure::Config(format!("csv: {e}"));
    w.write_record(&header).map_err(io)?;
    for (f, t) in grid.nodes() {
        let mut row = vec![format!("{:.17e}", t[0]), format!("{:.17e}", t[1])];
        row.extend(grid.eigenvalues[f].iter().map(|v| format!("{v:.17e}")));
        w.write_record(&row).map_err(io)?;
    }
    let bytes = w.into_inner().map_err(|e| Failure::Config(format!("csv: {e}")))?;
    Ok(String::from_utf8(bytes).expect("csv output is utf-8"))
}

fn sections(cfg: &ScenarioConfig, n: usize, delta: Option<f64>) -> Res<String> {
    let h = match &cfg.source {
        ProblemSource::Bloch(_) => return Err(Failure::Config("sections needs a two-orbital tight-binding source".into())),
        _ => load_hoppings(cfg)?,
    };
    let prep = prepare_problem(cfg)?;
    let theta0 = prep.crossing.theta0;
    let mut gp = match &prep.hypotheses {
        Some(hyp) => GapParams::from_cone(hyp.c_lower, prep.crossing.sigma_radius),
        None => GapParams::from_cone(1.0, prep.crossing.sigma_radius),
    };
    if let Some(d) = delta {
        gp.delta = d;
    }
    // Gap the crossing and, when present, its mirror partner −θ₀.
    let mut sym = TwoBandSymbol::from_hoppings(h)?;
    let mirror = [-theta0[0], -theta0[1]];
    let mut sites = vec![theta0];
    let pm = sym.pauli(mirror);
    if torus_distance(theta0, mirror) > 1e-6 && pm.f.iter().map(|x| x * x).sum::<f64>().sqrt() < 1e-8 {
        sites.push(mirror);
    }
    let mut min_gap = f64::INFINITY;
    for t in &sites {
        let lin = linearize_at_crossing(&sym, *t, 1e-8)?;
        let g = open_gap(&sym, *t, &lin, &gp, 64)?;
        min_gap = min_gap.min(g.min_gap);
        sym = g.symbol;
    }
    let model = SectionModel::new(sym, theta0);
    let (p_minus, p_plus) = model.projectors(n, [0.0, 0.0], 1e-3)?;
    let (l_minus, l_plus) = model.local_frames(n, [0.0, 0.0], 3, 7);
    let mut checks = Vec::new();
    for (tag, p, l) in [("minus", &p_minus, &l_minus), ("plus", &p_plus, &l_plus)] {
        let g = build_global_section(p, l, &SectionOptions::default())?;
        let ck = check_section(&g.section, p, l, 3);
        if let Some(dir) = &cfg.output_dir {
            fs::create_dir_all(dir).map_err(|e| Failure::Config(format!("{}: {e}", dir.display())))?;
            let file = |name: String| {
                let path = dir.join(name);
                fs::File::create(&path).map_err(|e| Failure::Config(format!("{}: {e}", path.display())))
            };
            p.write_to(file(format!("projector_{tag}.bin"))?)?;
            g.section.write_to(file(format!("section_{tag}.bin"))?)?;
        }
        checks.push(json!({ "projector": tag, "check": ck, "warnings": g.warnings }));
    }
    Ok(pretty(&json!({
        "gap": gp,
        "gapped_sites": sites,
        "min_gap": min_gap,
        "grid": n,
        "sections": checks,
    })))
}

fn feshbach_suite(count: usize, dim: usize, seed: u64) -> Res<String> {
    if dim < 8 {
        return Err(Failure::Config("dim must be at least 8".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut violations = 0;
    let mut worst = 0.0f64;
    for k in 0..count {
        let spec = RandomTripleSpec {
            dim,
            rank: 2 + k % 6.min(dim / 2 - 1),
            coupling: 0.3 + (k % 5) as f64 * 0.4,
            ..Default::default()
        };
        let (h, pi, iv) = random_admissible(&mut rng, &spec);
        let r = compare_spectra(&check_admissible(&h, &pi, iv)?, (-0.6, 0.6))?;
        worst = worst.max(r.worst_ratio);
        if !r.verified {
            violations += 1;
        }
    }
    Ok(pretty(&json!({
        "count": count,
        "dim": dim,
        "seed": seed,
        "violations": violations,
        "worst_ratio": worst,
    })))
}

fn run(cmd: Cmd) -> Res<()> {
    match cmd {
        Cmd::Bands { common, res, bands: kept } => {
            let cfg = load_config(&common.config)?;
            emit(&common.out, &bands(&cfg, res, kept)?)
        }
        Cmd::Crossing { common } => {
            let cfg = load_config(&common.config)?;
            let prep = prepare_problem(&cfg)?;
            emit(&common.out, &pretty(&json!({ "crossing": prep.crossing, "hypotheses": prep.hypotheses })))
        }
        Cmd::Effmodel { common } => {
            let cfg = load_config(&common.config)?;
            let prep = prepare_problem(&cfg)?;
            let ell = check_ellipticity(&prep.linearization)?;
            emit(&common.out, &pretty(&json!({ "linearization": prep.linearization, "ellipticity": ell })))
        }
        Cmd::Sections { common, grid, delta } => {
            let cfg = load_config(&common.config)?;
            emit(&common.out, &sections(&cfg, grid, delta)?)
        }
        Cmd::Hofstadter { common, flux, grid, window: w } => {
            let cfg = load_config(&common.config)?;
            let h = load_hoppings(&cfg)?;
            let s = hofstadter_spectrum(&h, flux, grid2(&grid)?, window(&w)?)?;
            emit(&common.out, &s.to_csv())
        }
        Cmd::Semiclassical { common, flux, grid, window: w } => {
            let cfg = load_config(&common.config)?;
            let h = load_hoppings(&cfg)?;
            let r = cross_check_isospectral(&h, flux, grid2(&grid)?, window(&w)?, ISO_TOL)?;
            emit(
                &common.out,
                &pretty(&json!({
                    "flux": flux.to_string(),
                    "distance": r.distance,
                    "tol": r.tol,
                    "count_2d": r.two_d.values().len(),
                    "count_1d": r.one_d.values().len(),
                })),
            )
        }
        Cmd::Landau { common } => {
            let cfg = load_config(&common.config)?;
            let prep = prepare_problem(&cfg)?;
            let s = spectrum_L(&prep.linearization, cfg.levels, cfg.modes)?;
            let mut text = String::from("n,lambda\n");
            for (n, v) in s.levels.values().iter().enumerate() {
                text.push_str(&format!("{n},{v:.17e}\n"));
            }
            emit(&common.out, &text)
        }
        Cmd::FeshbachSuite { common, count, dim, seed } => {
            // The config is validated for uniformity; the suite itself is synthetic.
            load_config(&common.config)?;
            emit(&common.out, &feshbach_suite(count, dim, seed)?)
        }
        Cmd::Verify { common } => {
            let cfg = load_config(&common.config)?;
            let report = run_theorem_check(&cfg)?;
            let mut text = serde_json::to_string_pretty(&report).expect("report serializes");
            text.push('\n');
            emit(&common.out, &text)?;
            for c in &report.criteria {
                eprintln!("{}: {}  {}", c.id, if c.passed { "PASS" } else { "FAIL" }, c.detail);
            }
            if report.passed() {
                Ok(())
            } else {
                Err(Failure::Criteria)
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.cmd) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Pipeline(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
        Err(Failure::Criteria) => ExitCode::from(3),
    }
}

