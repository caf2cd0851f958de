use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use milnor_scope::fiber::{inflate_to_sphere, phase, rplus_flow, sample_fiber, FiberParams};
use milnor_scope::mixed_poly::{complex_from_real, real_from_complex, to_real_map, DiagonalMixedPolynomial};
use milnor_scope::parse::{looks_like_real_map, parse_mixed, parse_real_map};
use milnor_scope::real_map::RealPolynomialMap;
use milnor_scope::structure::{analyze, radial_weights, SCHEMA};
use milnor_scope::transversality::{falsify_transversality, SearchParams, Tolerances, TransversalityVerdict};
use num_complex::Complex64;
use serde_json::{json, Value};

const EXIT_PARSE: u8 = 2;

#[derive(Parser)]
#[command(name = "milnor-scope", version, about = "Milnor fibration criteria for diagonal mixed polynomials")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Structure report: critical set, discriminant, weights, fibration verdict.
    Analyze(CommonArgs),
    /// Search for tangencies between fibers and spheres.
    Transversality(CommonArgs),
    /// Sample a fiber and count its components.
    Fiber(CommonArgs),
    /// Trace the weighted R+ orbit of a point.
    Flow(FlowArgs),
}

#[derive(Args)]
struct InputArgs {
    /// Mixed polynomial, e.g. "z1 z1~ + z2^2 z2~", or real map "(x*y, x) vars x,y".
    expr: Option<String>,
    /// Read the expression from a file instead.
    #[arg(long)]
    file: Option<PathBuf>,
}

#[derive(Args)]
struct CommonArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Sphere or ball radii, comma separated.
    #[arg(long, value_delimiter = ',')]
    eps: Vec<f64>,
    /// Multistart seeds (transversality) or Newton seeds (fiber).
    #[arg(long)]
    seeds: Option<usize>,
    #[arg(long, default_value_t = 0)]
    rng_seed: u64,
    #[arg(long)]
    tol_tangency: Option<f64>,
    #[arg(long)]
    tol_v: Option<f64>,
    /// Absolute margin for HoldsAtBudget; default 1e-2 × median |f| on the sphere.
    #[arg(long)]
    margin: Option<f64>,
    /// Fiber target: re,im for a mixed polynomial, p reals for a real map.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    value: Vec<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Omit timing fields so identical runs give identical bytes.
    #[arg(long)]
    no_timing: bool,
}

#[derive(Args)]
struct FlowArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Real coordinates x1,y1,…,xn,yn of the starting point.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
    point: Vec<f64>,
    #[arg(long, default_value_t = 0.1)]
    t_min: f64,
    #[arg(long, default_value_t = 3.0)]
    t_max: f64,
    #[arg(long, default_value_t = 50)]
    samples: usize,
    /// Also inflate the point onto the sphere of this radius.
    #[arg(long)]
    eps: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure { code, message: message.into() }
}

enum Input {
    Mixed(DiagonalMixedPolynomial),
    Real(RealPolynomialMap),
}

impl Input {
    fn real_map(&self) -> RealPolynomialMap {
        match self {
            Input::Mixed(psi) => to_real_map(psi),
            Input::Real(f) => f.clone(),
        }
    }

    fn render(&self) -> String {
        match self {
            Input::Mixed(psi) => psi.render(),
            Input::Real(f) => f.render(),
        }
    }
}

fn read_text(input: &InputArgs) -> Result<String, Failure> {
    match (&input.expr, &input.file) {
        (Some(e), None) => Ok(e.clone()),
        (None, Some(p)) => std::fs::read_to_string(p)
            .map(|s| s.trim().to_string())
            .map_err(|e| fail(EXIT_PARSE, format!("cannot read {}: {e}", p.display()))),
        (Some(_), Some(_)) => Err(fail(EXIT_PARSE, "give either an expression or --file, not both")),
        (None, None) => Err(fail(EXIT_PARSE, "missing expression (inline or --file)")),
    }
}

fn read_input(input: &InputArgs) -> Result<Input, Failure> {
    let text = read_text(input)?;
    if looks_like_real_map(&text) {
        parse_real_map(&text).map(Input::Real).map_err(|e| fail(EXIT_PARSE, e.to_string()))
    } else {
        parse_mixed(&text).map(Input::Mixed).map_err(|e| fail(EXIT_PARSE, e.to_string()))
    }
}

fn read_mixed(input: &InputArgs) -> Result<DiagonalMixedPolynomial, Failure> {
    match read_input(input)? {
        Input::Mixed(psi) => Ok(psi),
        Input::Real(_) => Err(fail(EXIT_PARSE, "this command needs a mixed polynomial, not a real map")),
    }
}

fn emit(text: &str, out: &Option<PathBuf>) -> Result<(), Failure> {
    match out {
        Some(p) => std::fs::write(p, text).map_err(|e| fail(EXIT_PARSE, format!("cannot write {}: {e}", p.display()))),
        None => match writeln!(std::io::stdout().lock(), "{text}") {
            Err(e) if e.kind() != std::io::ErrorKind::BrokenPipe => Err(fail(1, format!("cannot write output: {e}"))),
            _ => Ok(()),
        },
    }
}

fn to_json(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("JSON values always serialize")
}

fn search_params(args: &CommonArgs, epsilon: f64) -> Result<SearchParams, Failure> {
    if !(epsilon > 0.0) {
        return Err(fail(EXIT_PARSE, format!("epsilon must be positive, got {epsilon}")));
    }
    let mut p = SearchParams::new(epsilon);
    if let Some(s) = args.seeds {
        if s == 0 {
            return Err(fail(EXIT_PARSE, "--seeds must be at least 1"));
        }
        p.seeds = s;
    }
    p.rng_seed = args.rng_seed;
    let d = Tolerances::default();
    p.tolerances = Tolerances {
        tol_tangency: args.tol_tangency.unwrap_or(d.tol_tangency),
        tol_v: args.tol_v.unwrap_or(d.tol_v),
        margin: args.margin,
    };
    Ok(p)
}

fn with_timing(mut v: Value, start: Instant, no_timing: bool) -> Value {
    if !no_timing {
        v["timing_ms"] = json!(start.elapsed().as_secs_f64() * 1e3);
    }
    v
}

fn sweep(f: &RealPolynomialMap, args: &CommonArgs, radii: &[f64]) -> Result<(Vec<Value>, TransversalityVerdict), Failure> {
    let mut reports = Vec::new();
    let mut worst = TransversalityVerdict::HoldsAtBudget;
    for &eps in radii {
        let r = falsify_transversality(f, &search_params(args, eps)?);
        worst = match (worst, r.verdict) {
            (TransversalityVerdict::FailsWithWitness, _) | (_, TransversalityVerdict::FailsWithWitness) => {
                TransversalityVerdict::FailsWithWitness
            }
            (TransversalityVerdict::Inconclusive, _) | (_, TransversalityVerdict::Inconclusive) => {
                TransversalityVerdict::Inconclusive
            }
            _ => TransversalityVerdict::HoldsAtBudget,
        };
        reports.push(serde_json::to_value(&r).expect("reports serialize"));
    }
    Ok((reports, worst))
}

fn cmd_analyze(args: &CommonArgs) -> Result<u8, Failure> {
    let start = Instant::now();
    let psi = read_mixed(&args.input)?;
    let mut bundle = json!({
        "schema": SCHEMA,
        "tool_version": env!("CARGO_PKG_VERSION"),
        "structure": analyze(&psi),
    });
    if !args.eps.is_empty() {
        let (reports, _) = sweep(&to_real_map(&psi), args, &args.eps)?;
        bundle["transversality"] = Value::Array(reports);
    }
    emit(&to_json(&with_timing(bundle, start, args.no_timing)), &args.out)?;
    Ok(0)
}

fn cmd_transversality(args: &CommonArgs) -> Result<u8, Failure> {
    let start = Instant::now();
    let input = read_input(&args.input)?;
    let radii = if args.eps.is_empty() { vec![1.0, 0.5, 0.25, 0.125] } else { args.eps.clone() };
    let (reports, worst) = sweep(&input.real_map(), args, &radii)?;
    let bundle = json!({
        "schema": SCHEMA,
        "tool_version": env!("CARGO_PKG_VERSION"),
        "input": input.render(),
        "verdict": worst,
        "rng_seed": args.rng_seed,
        "reports": reports,
    });
    emit(&to_json(&with_timing(bundle, start, args.no_timing)), &args.out)?;
    Ok(match worst {
        TransversalityVerdict::HoldsAtBudget => 0,
        TransversalityVerdict::FailsWithWitness => 1,
        TransversalityVerdict::Inconclusive => 3,
    })
}

fn cmd_fiber(args: &CommonArgs) -> Result<u8, Failure> {
    let start = Instant::now();
    let input = read_input(&args.input)?;
    let f = input.real_map();
    let epsilon = match args.eps.as_slice() {
        [] => 1.0,
        [e] if *e > 0.0 => *e,
        _ => return Err(fail(EXIT_PARSE, "fiber takes a single positive --eps")),
    };
    if args.value.len() != f.p() {
        return Err(fail(EXIT_PARSE, format!("--value needs {} numbers, got {}", f.p(), args.value.len())));
    }
    let mut params = FiberParams::new(epsilon, args.seeds.unwrap_or(2000));
    params.rng_seed = args.rng_seed;
    let sample = sample_fiber(&f, &args.value, &params).map_err(|e| fail(EXIT_PARSE, e.to_string()))?;
    if !sample.reliable {
        eprintln!("warning: only {} points converged; component count is unreliable", sample.converged);
    }
    match args.format {
        Format::Json => {
            let mut v = serde_json::to_value(&sample).expect("samples serialize");
            v["input"] = json!(input.render());
            emit(&to_json(&with_timing(v, start, args.no_timing)), &args.out)?;
        }
        Format::Csv => {
            let mut meta = serde_json::to_value(&sample).expect("samples serialize");
            meta.as_object_mut().unwrap().remove("points");
            meta["input"] = json!(input.render());
            let meta = to_json(&with_timing(meta, start, args.no_timing));
            emit(sample.to_csv(f.n()).trim_end(), &args.out)?;
            if args.out.is_some() {
                println!("{meta}");
            } else {
                eprintln!("{meta}");
            }
        }
    }
    Ok(0)
}

fn cmd_flow(args: &FlowArgs) -> Result<u8, Failure> {
    let psi = read_mixed(&args.input)?;
    if args.point.len() != 2 * psi.n() {
        return Err(fail(EXIT_PARSE, format!("--point needs {} reals, got {}", 2 * psi.n(), args.point.len())));
    }
    let z = complex_from_real(&args.point);
    if z.iter().all(|c| c.norm_sqr() == 0.0) {
        return Err(fail(EXIT_PARSE, "the zero point has a trivial orbit"));
    }
    if !(args.t_min > 0.0 && args.t_max >= args.t_min) || args.samples == 0 {
        return Err(fail(EXIT_PARSE, "need 0 < t-min <= t-max and samples >= 1"));
    }
    let w = radial_weights(&psi).map_err(|e| fail(EXIT_PARSE, e.to_string()))?;
    let psi_z = psi.eval(&z);
    let cplx = |c: Complex64| json!([c.re, c.im]);
    let mut worst = 0.0f64;
    let orbit: Vec<Value> = (0..args.samples)
        .map(|i| {
            let t = if args.samples == 1 {
                args.t_min
            } else {
                args.t_min + (args.t_max - args.t_min) * i as f64 / (args.samples - 1) as f64
            };
            let zt = rplus_flow(&w, t, &z);
            let v = psi.eval(&zt);
            let residual = (v - psi_z * t.powi(w.a as i32)).norm() / (1.0 + psi_z.norm());
            worst = worst.max(residual);
            json!({
                "t": t,
                "point": real_from_complex(&zt),
                "psi": cplx(v),
                "phase": phase(&psi, &zt).ok().map(cplx),
                "equivariance_residual": residual,
            })
        })
        .collect();
    let mut trace = json!({
        "schema": SCHEMA,
        "tool_version": env!("CARGO_PKG_VERSION"),
        "input": psi.render(),
        "weights": w,
        "point": args.point,
        "psi": cplx(psi_z),
        "orbit": orbit,
        "max_equivariance_residual": worst,
    });
    if let Some(eps) = args.eps {
        if !(eps > 0.0) {
            return Err(fail(EXIT_PARSE, "--eps must be positive"));
        }
        let (t, zs) = inflate_to_sphere(&w, &z, eps).map_err(|e| fail(EXIT_PARSE, e.to_string()))?;
        let r = zs.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        trace["inflated"] = json!({
            "epsilon": eps,
            "t": t,
            "point": real_from_complex(&zs),
            "norm_error": (r - eps).abs(),
        });
    }
    emit(&to_json(&trace), &args.out)?;
    Ok(0)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        Command::Analyze(a) => cmd_analyze(a),
        Command::Transversality(a) => cmd_transversality(a),
        Command::Fiber(a) => cmd_fiber(a),
        Command::Flow(a) => cmd_flow(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {}", e.message);
            ExitCode::from(e.code)
        }
    }
}
