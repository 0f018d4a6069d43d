//! `bergman`: kernel evaluation, lemma checks, equidistribution integrals and
//! the pre-trace check from the command line.
//!
//! Exit codes: 0 success, 2 configuration or precondition error, 3 cutoff or
//! resource failure, 4 verification finding.

mod parse;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use bergman_core::cuspform::{cusp_form, verify_pretrace, OracleError, PeterssonNorm, PretraceOracle, PretraceReport};
use bergman_core::equidist::{
    integrate_horizontal, integrate_region, integrate_vertical, BaseMeasure, EquidistError, IntegralReport,
    IntegrationOptions, RegionTestFunction, TestFunction,
};
use bergman_core::kernel::{bergman_r, KernelError, WeightConfig};
use bergman_core::lemmas::{
    displacement_lemma, half_distance_lemma, strip_bound_lemma, DisplacementReport, HalfDistanceReport,
    StripBoundReport,
};
use bergman_core::modular::{elliptic_points_in_strip, StripRegion};
use bergman_core::Point;
use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

const GENERATOR: &str = "ChaCha8 (rand_chacha)";

#[derive(Parser)]
#[command(name = "bergman", version, about = "Bergman kernel and equidistribution experiments on SL(2,Z)")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
    /// Write output here instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    /// Seed for every random choice; recorded in reports.
    #[arg(long, global = true, default_value_t = 1)]
    seed: u64,
    /// Unordered parallel reduction (results may differ in the last bits between runs).
    #[arg(long, global = true)]
    fast: bool,
    /// Skip the support-window preconditions of the integral experiments.
    #[arg(long = "unsafe", global = true)]
    unsafe_window: bool,
    /// Strip parameter: P(Y) = {|x| ≤ 1/2, y > 1/Y}.
    #[arg(long = "Y", global = true, default_value_t = 10.0)]
    y_param: f64,
    /// Radius of the excluded neighborhoods of elliptic points.
    #[arg(long, global = true, default_value_t = 0.05)]
    delta: f64,
    /// The large constant A in the admissible window.
    #[arg(long = "A", global = true, default_value_t = 2.0)]
    a: f64,
    /// Proximity constant c0.
    #[arg(long, global = true, default_value_t = 0.125)]
    c0: f64,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Format {
    Csv,
    Json,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Psi {
    Bump,
    Indicator,
    One,
    Zero,
}

#[derive(Copy, Clone, PartialEq, Eq, ValueEnum)]
enum Shape {
    Euclidean,
    Hyperbolic,
    Zero,
}

#[derive(Subcommand)]
enum Cmd {
    /// Evaluate R_k(z, w) with a certified tail bound.
    Kernel {
        #[arg(long, allow_hyphen_values = true)]
        z: String,
        /// Second argument; defaults to z.
        #[arg(long, allow_hyphen_values = true)]
        w: Option<String>,
        #[arg(long)]
        k: u32,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Evaluate R_k(z, z) on a rectangular grid.
    Scan {
        /// x range as x0,x1
        #[arg(long, default_value = "-0.5,0.5", allow_hyphen_values = true)]
        x_range: String,
        /// y range as y0,y1
        #[arg(long, default_value = "0.9,2.0")]
        y_range: String,
        #[arg(long, default_value_t = 11)]
        nx: usize,
        #[arg(long, default_value_t = 11)]
        ny: usize,
        #[arg(long)]
        k: u32,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
    },
    /// Check the displacement lemmas on sampled points.
    Lemmas {
        #[arg(long, default_value_t = 1000)]
        samples: usize,
        #[arg(long, default_value_t = 10_000)]
        triples: usize,
    },
    /// Integrate the averaged density along the vertical geodesic at x.
    Vertical {
        #[arg(long, default_value_t = 0.13, allow_hyphen_values = true)]
        x: f64,
        #[arg(long, default_value_t = 1200)]
        k: u32,
        /// Comma-separated weights; overrides --k.
        #[arg(long)]
        sweep: Option<String>,
        #[arg(long, value_enum, default_value_t = Psi::Bump)]
        psi: Psi,
        /// Support of psi as a,b (in y).
        #[arg(long, default_value = "1,2")]
        support: String,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(long, default_value_t = 1e-9)]
        rel_tol: f64,
    },
    /// Integrate the averaged density along the horizontal segment at height y.
    Horizontal {
        #[arg(long, default_value_t = 1.3)]
        y: f64,
        #[arg(long, default_value_t = 1200)]
        k: u32,
        #[arg(long)]
        sweep: Option<String>,
        #[arg(long, value_enum, default_value_t = Psi::One)]
        psi: Psi,
        /// Support of psi as a,b (in x, inside [-1/2, 1/2]).
        #[arg(long, default_value = "0,0.5", allow_hyphen_values = true)]
        support: String,
        /// Accept heights above k^(-1/4)(log k)^(1/4) instead of 1/Y.
        #[arg(long)]
        weak_window: bool,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(long, default_value_t = 1e-9)]
        rel_tol: f64,
    },
    /// Integrate a bump on the fundamental domain against the averaged density.
    Region {
        #[arg(long, value_enum, default_value_t = Shape::Euclidean)]
        shape: Shape,
        #[arg(long, default_value = "0.1+1.2i", allow_hyphen_values = true)]
        center: String,
        #[arg(long, default_value_t = 0.2)]
        radius: f64,
        #[arg(long, default_value_t = 1200)]
        k: u32,
        #[arg(long)]
        sweep: Option<String>,
        #[arg(long, default_value_t = 1e-12)]
        tol: f64,
        #[arg(long, default_value_t = 1e-8)]
        rel_tol: f64,
    },
    /// Compare y^k|f|²/<f,f> with (k-1)/(8π) R_k(z,z) for k = 12 or 16.
    Pretrace {
        #[arg(long, default_value_t = 20)]
        points: usize,
        /// A single point instead of seeded random ones.
        #[arg(long, allow_hyphen_values = true)]
        z: Option<String>,
        #[arg(long, default_value_t = 12)]
        k: u32,
        /// Largest acceptable relative residual.
        #[arg(long, default_value_t = 1e-8)]
        tol: f64,
        #[arg(long, default_value_t = 1e-14)]
        kernel_tol: f64,
        #[arg(long, default_value_t = 1e-10)]
        norm_tol: f64,
    },
    /// List the elliptic points in P(Y) as CSV.
    Elliptic,
    /// Dump q-expansion coefficients of the weight-12 (or 16) cusp form as CSV.
    Coeffs {
        #[arg(long, default_value_t = 50)]
        n: usize,
        #[arg(long, default_value_t = 12)]
        k: u32,
    },
}

enum CliError {
    Config(String),
    Cutoff(String),
    Finding(String),
    Io(io::Error),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Cutoff(_) => 3,
            CliError::Finding(_) => 4,
            CliError::Io(_) => 1,
        }
    }

    fn message(&self) -> String {
        match self {
            CliError::Config(m) => format!("configuration error: {m}"),
            CliError::Cutoff(m) => format!("cutoff failure: {m}"),
            CliError::Finding(m) => format!("verification finding: {m}"),
            CliError::Io(e) => format!("i/o error: {e}"),
        }
    }
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

impl From<KernelError> for CliError {
    fn from(e: KernelError) -> Self {
        match e {
            KernelError::CutoffExceeded { .. } => CliError::Cutoff(e.to_string()),
            _ => CliError::Config(e.to_string()),
        }
    }
}

impl From<EquidistError> for CliError {
    fn from(e: EquidistError) -> Self {
        match e {
            EquidistError::Kernel(k) => k.into(),
            other => CliError::Config(other.to_string()),
        }
    }
}

impl From<OracleError> for CliError {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::Kernel(k) => k.into(),
            OracleError::TailTooLarge { .. } => CliError::Cutoff(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

fn config<T, E: std::fmt::Display>(r: Result<T, E>) -> Result<T, CliError> {
    r.map_err(|e| CliError::Config(e.to_string()))
}

struct Output {
    sink: Box<dyn Write>,
}

impl Output {
    fn open(path: &Option<PathBuf>) -> Result<Self, CliError> {
        let sink: Box<dyn Write> = match path {
            Some(p) => Box::new(BufWriter::new(File::create(p)?)),
            None => Box::new(BufWriter::new(io::stdout())),
        };
        Ok(Output { sink })
    }

    fn json<T: Serialize>(&mut self, value: &T) -> Result<(), CliError> {
        let text = serde_json::to_string_pretty(value).expect("serializable report");
        writeln!(self.sink, "{text}")?;
        Ok(())
    }

    fn csv<R: Serialize>(&mut self, rows: &[R]) -> Result<(), CliError> {
        let mut w = csv::Writer::from_writer(&mut self.sink);
        for r in rows {
            w.serialize(r).map_err(|e| CliError::Io(io::Error::other(e)))?;
        }
        w.flush()?;
        Ok(())
    }

    fn finish(mut self) -> Result<(), CliError> {
        self.sink.flush()?;
        Ok(())
    }
}

fn parse_point(s: &str) -> Result<Point, CliError> {
    let c = parse::parse_complex(s).map_err(CliError::Config)?;
    config(Point::from_complex(c))
}

fn weight_config(cli: &Cli, k: u32, tol: f64) -> Result<WeightConfig, CliError> {
    if !(cli.a > 0.0 && cli.c0 > 0.0) {
        return Err(CliError::Config("A and c0 must be positive".into()));
    }
    Ok(WeightConfig::new(k, tol)?.with_a(cli.a).with_c0(cli.c0).with_fast(cli.fast))
}

fn weights(k: u32, sweep: &Option<String>) -> Result<Vec<u32>, CliError> {
    match sweep {
        Some(s) => parse::parse_k_list(s).map_err(CliError::Config),
        None => Ok(vec![k]),
    }
}

#[derive(Serialize)]
struct KernelRecord {
    z_re: f64,
    z_im: f64,
    w_re: f64,
    w_im: f64,
    k: u32,
    tol: f64,
    re: f64,
    im: f64,
    tail_bound: f64,
    terms_used: usize,
    cosets_used: usize,
}

#[derive(Serialize)]
struct ScanRow {
    x: f64,
    y: f64,
    k: u32,
    #[serde(rename = "re_R")]
    re_r: f64,
    #[serde(rename = "im_R")]
    im_r: f64,
    tail_bound: f64,
    terms_used: usize,
}

#[derive(Serialize)]
struct LemmaReport {
    generator: &'static str,
    seed: u64,
    displacement: DisplacementReport,
    half_distance: HalfDistanceReport,
    strip_bound: StripBoundReport,
    passed: bool,
}

#[derive(Serialize)]
struct SweepReport {
    weights: Vec<u32>,
    reports: Vec<IntegralReport>,
    /// `|gap|` non-increasing in k, each step allowed the reported errors as slack.
    gaps_decreasing: bool,
}

#[derive(Serialize)]
struct SweepRow {
    k: u32,
    x_or_y: Option<f64>,
    integral: f64,
    reference: f64,
    gap: f64,
    relative_gap: f64,
    reported_error: f64,
    nodes: usize,
    wall_time_ms: f64,
}

#[derive(Serialize)]
struct PretraceSummary {
    generator: &'static str,
    seed: u64,
    k: u32,
    tol: f64,
    kernel_tol: f64,
    norm: PeterssonNorm,
    points: Vec<PretraceReport>,
    max_residual: f64,
    passed: bool,
}

#[derive(Serialize)]
struct EllipticRow {
    x: f64,
    y: f64,
    stab_order: u32,
    gen_a: i64,
    gen_b: i64,
    gen_c: i64,
    gen_d: i64,
}

#[derive(Serialize)]
struct CoeffRow {
    n: usize,
    a_n: String,
}

fn emit_integrals(cli: &Cli, out: &mut Output, reports: Vec<IntegralReport>) -> Result<(), CliError> {
    let format = cli.format.unwrap_or(Format::Json);
    if format == Format::Csv {
        let rows: Vec<SweepRow> = reports
            .iter()
            .map(|r| SweepRow {
                k: r.k,
                x_or_y: r.x_or_y.is_finite().then_some(r.x_or_y),
                integral: r.integral,
                reference: r.reference,
                gap: r.gap,
                relative_gap: r.relative_gap,
                reported_error: r.reported_error,
                nodes: r.nodes,
                wall_time_ms: r.wall_time_ms,
            })
            .collect();
        return out.csv(&rows);
    }
    if reports.len() == 1 {
        return out.json(&reports[0]);
    }
    let gaps_decreasing = reports
        .windows(2)
        .all(|w| w[1].gap.abs() <= w[0].gap.abs() + w[0].reported_error + w[1].reported_error);
    out.json(&SweepReport {
        weights: reports.iter().map(|r| r.k).collect(),
        reports,
        gaps_decreasing,
    })
}

fn psi_1d(psi: Psi, support: &str, measure: BaseMeasure) -> Result<TestFunction, CliError> {
    let (a, b) = parse::parse_interval(support).map_err(CliError::Config)?;
    Ok(match psi {
        Psi::Zero => TestFunction::zero(measure),
        Psi::One if measure == BaseMeasure::Lebesgue => TestFunction::one_on_period(),
        Psi::One => return Err(CliError::Config("psi=one is only defined on a horizontal period".into())),
        Psi::Bump => TestFunction::smooth_bump(a, b, measure)?,
        Psi::Indicator => TestFunction::indicator(a, b, measure)?,
    })
}

fn run(cli: &Cli) -> Result<(), CliError> {
    let mut out = Output::open(&cli.out)?;
    let region = config(StripRegion::new(cli.y_param, cli.delta))?;
    match &cli.cmd {
        Cmd::Kernel { z, w, k, tol } => {
            let z = parse_point(z)?;
            let w = match w {
                Some(w) => parse_point(w)?,
                None => z,
            };
            let cfg = weight_config(cli, *k, *tol)?;
            let r = bergman_r(z, w, &cfg)?;
            let rec = KernelRecord {
                z_re: z.x(),
                z_im: z.y(),
                w_re: w.x(),
                w_im: w.y(),
                k: *k,
                tol: *tol,
                re: r.value.re,
                im: r.value.im,
                tail_bound: r.tail_bound,
                terms_used: r.terms_used,
                cosets_used: r.cosets_used,
            };
            match cli.format.unwrap_or(Format::Json) {
                Format::Json => out.json(&rec)?,
                Format::Csv => out.csv(&[ScanRow {
                    x: z.x(),
                    y: z.y(),
                    k: *k,
                    re_r: r.value.re,
                    im_r: r.value.im,
                    tail_bound: r.tail_bound,
                    terms_used: r.terms_used,
                }])?,
            }
        }
        Cmd::Scan { x_range, y_range, nx, ny, k, tol } => {
            let (x0, x1) = parse::parse_interval(x_range).map_err(CliError::Config)?;
            let (y0, y1) = parse::parse_interval(y_range).map_err(CliError::Config)?;
            if *nx == 0 || *ny == 0 || !(y0 > 0.0 && y1 >= y0 && x1 >= x0) {
                return Err(CliError::Config("malformed grid".into()));
            }
            let cfg = weight_config(cli, *k, *tol)?;
            let step = |lo: f64, hi: f64, n: usize, j: usize| {
                if n == 1 {
                    lo
                } else {
                    lo + (hi - lo) * j as f64 / (n - 1) as f64
                }
            };
            let nodes: Vec<(f64, f64)> = (0..*ny)
                .flat_map(|j| (0..*nx).map(move |i| (i, j)))
                .map(|(i, j)| (step(x0, x1, *nx, i), step(y0, y1, *ny, j)))
                .collect();
            let rows: Result<Vec<ScanRow>, KernelError> = nodes
                .par_iter()
                .map(|&(x, y)| {
                    let z = Point::new(x, y).expect("positive height");
                    let r = bergman_r(z, z, &cfg)?;
                    Ok(ScanRow {
                        x,
                        y,
                        k: *k,
                        re_r: r.value.re,
                        im_r: r.value.im,
                        tail_bound: r.tail_bound,
                        terms_used: r.terms_used,
                    })
                })
                .collect();
            let rows = rows?;
            match cli.format.unwrap_or(Format::Csv) {
                Format::Csv => out.csv(&rows)?,
                Format::Json => out.json(&rows)?,
            }
        }
        Cmd::Lemmas { samples, triples } => {
            let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
            let displacement = displacement_lemma(&mut rng, &region, *samples);
            let half_distance = half_distance_lemma(&mut rng, cli.y_param, *triples);
            let strip_bound = strip_bound_lemma(&mut rng, cli.y_param, *samples);
            let passed = displacement.passed && half_distance.passed && strip_bound.passed;
            out.json(&LemmaReport {
                generator: GENERATOR,
                seed: cli.seed,
                displacement,
                half_distance,
                strip_bound,
                passed,
            })?;
            out.finish()?;
            if !passed {
                return Err(CliError::Finding("a sampled point violates a lemma bound".into()));
            }
            return Ok(());
        }
        Cmd::Vertical { x, k, sweep, psi, support, tol, rel_tol } => {
            let psi = psi_1d(*psi, support, BaseMeasure::Multiplicative)?;
            let opts = IntegrationOptions { rel_tol: *rel_tol, unsafe_window: cli.unsafe_window, ..Default::default() };
            let mut reports = Vec::new();
            for k in weights(*k, sweep)? {
                let cfg = weight_config(cli, k, *tol)?;
                reports.push(integrate_vertical(*x, &psi, &cfg, &region, &opts)?);
            }
            emit_integrals(cli, &mut out, reports)?;
        }
        Cmd::Horizontal { y, k, sweep, psi, support, weak_window, tol, rel_tol } => {
            let psi = psi_1d(*psi, support, BaseMeasure::Lebesgue)?;
            let opts = IntegrationOptions {
                rel_tol: *rel_tol,
                unsafe_window: cli.unsafe_window,
                weak_horizontal_window: *weak_window,
                ..Default::default()
            };
            let mut reports = Vec::new();
            for k in weights(*k, sweep)? {
                let cfg = weight_config(cli, k, *tol)?;
                reports.push(integrate_horizontal(*y, &psi, &cfg, &region, &opts)?);
            }
            emit_integrals(cli, &mut out, reports)?;
        }
        Cmd::Region { shape, center, radius, k, sweep, tol, rel_tol } => {
            let c = parse_point(center)?;
            let phi = match shape {
                Shape::Zero => RegionTestFunction::Zero,
                Shape::Euclidean => RegionTestFunction::EuclideanBump { cx: c.x(), cy: c.y(), radius: *radius },
                Shape::Hyperbolic => RegionTestFunction::HyperbolicBump { center: c, radius: *radius },
            };
            let opts = IntegrationOptions { rel_tol: *rel_tol, ..Default::default() };
            let mut reports = Vec::new();
            for k in weights(*k, sweep)? {
                let cfg = weight_config(cli, k, *tol)?;
                reports.push(integrate_region(&phi, &cfg, &opts)?);
            }
            emit_integrals(cli, &mut out, reports)?;
        }
        Cmd::Pretrace { points, z, k, tol, kernel_tol, norm_tol } => {
            let oracle = PretraceOracle::new(*k, *norm_tol)?;
            let cfg = weight_config(cli, *k, *kernel_tol)?;
            let sample: Vec<Point> = match z {
                Some(z) => vec![parse_point(z)?],
                None => {
                    let mut rng = ChaCha8Rng::seed_from_u64(cli.seed);
                    (0..*points)
                        .map(|_| {
                            let x: f64 = rng.gen_range(-0.5..=0.5);
                            let y = rng.gen_range((1.0 - x * x).sqrt()..2.5);
                            Point::new(x, y).expect("positive height")
                        })
                        .collect()
                }
            };
            let reports = sample
                .iter()
                .map(|&z| verify_pretrace(z, &cfg, &oracle))
                .collect::<Result<Vec<_>, _>>()?;
            let max_residual = reports.iter().fold(0.0f64, |m, r| m.max(r.residual));
            let passed = max_residual <= *tol;
            out.json(&PretraceSummary {
                generator: GENERATOR,
                seed: cli.seed,
                k: *k,
                tol: *tol,
                kernel_tol: *kernel_tol,
                norm: oracle.norm,
                points: reports,
                max_residual,
                passed,
            })?;
            out.finish()?;
            if !passed {
                return Err(CliError::Finding(format!("max residual {max_residual:e} exceeds {tol:e}")));
            }
            return Ok(());
        }
        Cmd::Elliptic => {
            let rows: Vec<EllipticRow> = elliptic_points_in_strip(cli.y_param)
                .iter()
                .map(|e| {
                    let [a, b, c, d] = e.generator.entries();
                    EllipticRow {
                        x: e.location.x(),
                        y: e.location.y(),
                        stab_order: e.stabilizer_order,
                        gen_a: a,
                        gen_b: b,
                        gen_c: c,
                        gen_d: d,
                    }
                })
                .collect();
            match cli.format.unwrap_or(Format::Csv) {
                Format::Csv => out.csv(&rows)?,
                Format::Json => out.json(&rows)?,
            }
        }
        Cmd::Coeffs { n, k } => {
            if *n == 0 {
                return Err(CliError::Config("need at least one coefficient".into()));
            }
            let f = cusp_form(*k, *n)?;
            let rows: Vec<CoeffRow> = (1..=*n)
                .map(|j| CoeffRow { n: j, a_n: f.coeff(j).to_string() })
                .collect();
            match cli.format.unwrap_or(Format::Csv) {
                Format::Csv => out.csv(&rows)?,
                Format::Json => out.json(&rows)?,
            }
        }
    }
    out.finish()
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("bergman: {}", e.message());
            ExitCode::from(e.code())
        }
    }
}
