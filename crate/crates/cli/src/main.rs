//! `bubble-kernel`: classify bubbles, cross-check with the spectral count,
//! run the degree-3 sweep, and export energies and field samples.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use bubble_core::bubble::{Bubble, BubbleDescriptor};
use bubble_core::jacobi::{self, FieldSample, Grid};
use bubble_core::moduli::{self, SearchConfig, SweepConfig};
use bubble_core::quadrature::QuadratureSpec;
use bubble_core::residue::{classify, classify_detailed, ClassifyConfig, DegeneracyReport, Verdict};
use bubble_core::spectral::{spectrum, SpectralConfig, SpectrumResult};
use bubble_core::{Cx, Polynomial};
use clap::{Args, Parser, Subcommand};
use serde::{Deserialize, Serialize};

const VERSION: &str = env!("CARGO_PKG_VERSION");

const EXIT_OK: u8 = 0;
const EXIT_INPUT: u8 = 1;
const EXIT_UNCERTIFIED: u8 = 2;
const EXIT_DISAGREEMENT: u8 = 3;
const EXIT_DEGENERATE: u8 = 10;

const SAFE_TOL_NULLITY: (f64, f64) = (1e-12, 1e-4);
const SAFE_TOL_KERNEL: (f64, f64) = (1e-9, 1e-3);

#[derive(Parser, Debug)]
#[command(
    name = "bubble-kernel",
    version,
    about = "Degeneracy certification for CMC bubbles ω = π(P/Q) + b",
    after_help = "Exit codes:\n  0   nondegenerate / verified / sweep matched\n  10  degenerate (classify)\n  2   borderline or uncertified\n  3   disagreement between residue and spectral counts (verify)\n  1   input error\n\nBUBBLE_KERNEL_THREADS caps the worker threads."
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide degeneracy from the residue system.
    Classify(BubbleArgs),
    /// Classify and compare with the spectral kernel count.
    Verify(VerifyArgs),
    /// Search the degree-3 degenerate locus from random starts.
    Sweep(SweepArgs),
    /// Energy and enclosed volume.
    Energy(BubbleArgs),
    /// Write CSV samples of explicit kernel elements.
    Fields(FieldsArgs),
}

#[derive(Args, Debug, Clone)]
struct BubbleArgs {
    /// Numerator coefficients, constant term first, as `[[re,im],...]` or `[re,...]`.
    #[arg(long = "P", allow_hyphen_values = true)]
    p: Option<String>,
    /// Denominator coefficients, same format as --P.
    #[arg(long = "Q", allow_hyphen_values = true)]
    q: Option<String>,
    /// Translation `[x,y,z]`.
    #[arg(long = "b", allow_hyphen_values = true)]
    b: Option<String>,
    /// JSON file with fields P, Q and optional b, label.
    #[arg(long)]
    input: Option<PathBuf>,
    /// Output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Relative singular-value cutoff [default: 1e-8]
    #[arg(long = "tol-nullity")]
    tol_nullity: Option<f64>,
    /// Cross-check residues by contour integration for every row.
    #[arg(long)]
    audit: bool,
}

#[derive(Args, Debug)]
struct VerifyArgs {
    #[command(flatten)]
    bubble: BubbleArgs,
    /// Relative eigenvalue cutoff for the spectral kernel [default: 1e-5]
    #[arg(long = "tol-kernel")]
    tol_kernel: Option<f64>,
    #[arg(long = "Lmax", default_value_t = 40)]
    l_max: usize,
}

#[derive(Args, Debug)]
struct SweepArgs {
    #[arg(long, default_value_t = 3)]
    k: usize,
    #[arg(long, default_value_t = 50)]
    starts: usize,
    #[arg(long, default_value_t = 7)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct FieldsArgs {
    #[command(flatten)]
    bubble: BubbleArgs,
    /// Directory for the CSV files.
    #[arg(long = "csv-dir")]
    csv_dir: PathBuf,
    /// Grid points per side on [-2, 2]².
    #[arg(long, default_value_t = 64)]
    grid: usize,
}

/// Input or runtime failure with its exit code.
#[derive(Debug)]
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_INPUT,
            message: message.into(),
        }
    }

    fn uncertified(message: impl Into<String>) -> Self {
        Self {
            code: EXIT_UNCERTIFIED,
            message: message.into(),
        }
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Coefficient {
    Pair([f64; 2]),
    Real(f64),
}

fn parse_coefficients(field: &str, text: &str) -> Result<Vec<[f64; 2]>, Failure> {
    let raw: Vec<Coefficient> = serde_json::from_str(text)
        .map_err(|e| Failure::input(format!("--{field}: expected a list of [re, im] pairs or reals ({e})")))?;
    Ok(raw
        .into_iter()
        .map(|c| match c {
            Coefficient::Pair(p) => p,
            Coefficient::Real(r) => [r, 0.0],
        })
        .collect())
}

fn descriptor(args: &BubbleArgs) -> Result<BubbleDescriptor, Failure> {
    let mut desc = match &args.input {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| Failure::input(format!("--input {}: {e}", path.display())))?;
            serde_json::from_str::<BubbleDescriptor>(&text)
                .map_err(|e| Failure::input(format!("--input {}: {e}", path.display())))?
        }
        None => BubbleDescriptor {
            p: Vec::new(),
            q: Vec::new(),
            b: [0.0; 3],
            label: None,
        },
    };
    if let Some(p) = &args.p {
        desc.p = parse_coefficients("P", p)?;
    }
    if let Some(q) = &args.q {
        desc.q = parse_coefficients("Q", q)?;
    }
    if let Some(b) = &args.b {
        desc.b = serde_json::from_str(b).map_err(|e| Failure::input(format!("--b: expected [x, y, z] ({e})")))?;
    }
    if desc.p.is_empty() {
        return Err(Failure::input("--P: missing numerator (use --P or --input)"));
    }
    if desc.q.is_empty() {
        return Err(Failure::input("--Q: missing denominator (use --Q or --input)"));
    }
    Ok(desc)
}

fn load_bubble(args: &BubbleArgs) -> Result<Bubble<f64>, Failure> {
    let desc = descriptor(args)?;
    desc.to_bubble().map_err(|e| Failure::input(format!("bubble: {e}")))
}

fn range_warning(name: &str, value: f64, (lo, hi): (f64, f64)) -> Option<String> {
    (!(lo..=hi).contains(&value)).then(|| format!("{name} = {value:e} is outside the tested range [{lo:e}, {hi:e}]"))
}

fn classify_config(args: &BubbleArgs) -> (ClassifyConfig, Vec<String>) {
    let mut cfg = ClassifyConfig::default().with_seed(args.seed);
    let mut warnings = Vec::new();
    if let Some(t) = args.tol_nullity {
        cfg.tol_nullity = t;
        warnings.extend(range_warning("tol-nullity", t, SAFE_TOL_NULLITY));
    }
    if args.audit {
        cfg.audit = Some(true);
    }
    (cfg, warnings)
}

fn emit<S: Serialize>(value: &S, out: Option<&Path>) -> Result<(), Failure> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Failure::uncertified(format!("serialization: {e}")))?;
    match out {
        Some(path) => std::fs::write(path, text + "\n").map_err(|e| Failure::input(format!("--out {}: {e}", path.display()))),
        None => {
            println!("{text}");
            Ok(())
        }
    }
}

fn run_classify(args: &BubbleArgs) -> Result<u8, Failure> {
    let bubble = load_bubble(args)?;
    let (cfg, warnings) = classify_config(args);
    let mut report = classify(&bubble, &cfg).map_err(|e| Failure::uncertified(format!("classify: {e}")))?;
    report.warnings = warnings;
    emit(&report, args.out.as_deref())?;
    Ok(classify_code(&report))
}

fn classify_code(report: &DegeneracyReport<f64>) -> u8 {
    if report.borderline {
        EXIT_UNCERTIFIED
    } else if report.verdict == Verdict::Degenerate {
        EXIT_DEGENERATE
    } else {
        EXIT_OK
    }
}

#[derive(Serialize)]
struct VerifyReport {
    version: &'static str,
    seed: u64,
    d: usize,
    kernel_count: usize,
    expected_kernel_count: usize,
    agreement: bool,
    classify: DegeneracyReport<f64>,
    spectral: SpectrumResult<f64>,
}

fn run_verify(args: &VerifyArgs) -> Result<u8, Failure> {
    let bubble = load_bubble(&args.bubble)?;
    let (cfg, mut warnings) = classify_config(&args.bubble);
    let mut report = classify(&bubble, &cfg).map_err(|e| Failure::uncertified(format!("classify: {e}")))?;
    let mut scfg = SpectralConfig {
        l_max: args.l_max,
        ..SpectralConfig::default()
    };
    if let Some(t) = args.tol_kernel {
        scfg.tol_kernel = t;
        warnings.extend(range_warning("tol-kernel", t, SAFE_TOL_KERNEL));
    }
    report.warnings = warnings;
    let spec = spectrum(&bubble, &scfg).map_err(|e| Failure::uncertified(format!("spectral: {e}")))?;
    let expected = 3 + 2 * report.d;
    let agreement = spec.kernel_count == expected;
    let code = if !spec.certified || report.borderline {
        EXIT_UNCERTIFIED
    } else if !agreement {
        EXIT_DISAGREEMENT
    } else {
        EXIT_OK
    };
    let combined = VerifyReport {
        version: VERSION,
        seed: args.bubble.seed,
        d: report.d,
        kernel_count: spec.kernel_count,
        expected_kernel_count: expected,
        agreement,
        classify: report,
        spectral: spec,
    };
    emit(&combined, args.bubble.out.as_deref())?;
    Ok(code)
}

#[derive(Serialize)]
struct ClassSummary {
    j_invariant: [f64; 2],
    #[serde(rename = "representative_P")]
    representative_p: Polynomial<f64>,
    #[serde(rename = "representative_Q")]
    representative_q: Polynomial<f64>,
    member_count: usize,
    members: Vec<usize>,
    /// Normal-form distance to (z³ + 2)/z.
    reference_distance: f64,
    matches_reference: bool,
}

#[derive(Serialize)]
struct SweepReport {
    version: &'static str,
    seed: u64,
    k: usize,
    n_starts: usize,
    n_converged: usize,
    classes: Vec<ClassSummary>,
    failures: Vec<moduli::SweepFailure<f64>>,
    equivalence: &'static str,
    objective_tol: f64,
    match_tol: f64,
    collision_guard: f64,
    search: SearchConfig,
}

fn run_sweep(args: &SweepArgs) -> Result<u8, Failure> {
    if args.k != 3 {
        return Err(Failure::input(format!("--k {}: unsupported degree (only k = 3)", args.k)));
    }
    if args.starts == 0 {
        eprintln!("warning: --starts 0, nothing to search");
    }
    let cfg = SweepConfig {
        n_starts: args.starts,
        seed: args.seed,
        search: SearchConfig::default(),
    };
    let sweep = moduli::uniqueness_sweep::<f64>(args.k, &cfg).map_err(|e| Failure::input(e.to_string()))?;
    let reference = moduli::reference_bubble::<f64>();
    let classes: Vec<ClassSummary> = sweep
        .classes
        .iter()
        .map(|c| {
            let dist = moduli::normal_form_distance(&reference, &c.representative.bubble).unwrap_or(f64::INFINITY);
            ClassSummary {
                j_invariant: c.j_invariant,
                representative_p: c.representative.bubble.p().clone(),
                representative_q: c.representative.bubble.q().clone(),
                member_count: c.member_count,
                members: c.members.clone(),
                reference_distance: dist,
                matches_reference: dist < moduli::MATCH_TOL,
            }
        })
        .collect();
    let matched = classes.len() == 1 && classes[0].matches_reference;
    let report = SweepReport {
        version: VERSION,
        seed: args.seed,
        k: args.k,
        n_starts: sweep.n_starts,
        n_converged: sweep.n_converged(),
        classes,
        failures: sweep.failures,
        equivalence: "domain Möbius maps and target Möbius maps",
        objective_tol: cfg.search.objective_tol,
        match_tol: moduli::MATCH_TOL,
        collision_guard: moduli::COLLISION_GUARD,
        search: cfg.search,
    };
    emit(&report, args.out.as_deref())?;
    Ok(if args.starts == 0 || matched { EXIT_OK } else { EXIT_UNCERTIFIED })
}

#[derive(Serialize)]
struct EnergyReport {
    version: &'static str,
    k: usize,
    energy: f64,
    energy_error: f64,
    energy_over_8pi: f64,
    volume: f64,
    volume_error: f64,
    quadrature: QuadratureSpec,
}

fn run_energy(args: &BubbleArgs) -> Result<u8, Failure> {
    let bubble = load_bubble(args)?;
    let quad = QuadratureSpec::default();
    let e = bubble.energy(&quad).map_err(|e| Failure::uncertified(format!("energy: {e}")))?;
    let v = bubble.volume(&quad).map_err(|e| Failure::uncertified(format!("volume: {e}")))?;
    let report = EnergyReport {
        version: VERSION,
        k: bubble.degree(),
        energy: e.value,
        energy_error: e.error,
        energy_over_8pi: e.value / (8.0 * std::f64::consts::PI),
        volume: v.value,
        volume_error: v.error,
        quadrature: quad,
    };
    emit(&report, args.out.as_deref())?;
    Ok(EXIT_OK)
}

#[derive(Serialize)]
struct FieldEntry {
    file: String,
    tag: String,
    residual: f64,
    conformal: Option<f64>,
    boundedness: Option<f64>,
}

#[derive(Serialize)]
struct FieldsReport {
    version: &'static str,
    seed: u64,
    d: usize,
    grid: usize,
    step: f64,
    exclusion_radius: f64,
    gram_rank: usize,
    normalization: bubble_core::Mobius<f64>,
    target_rotation: bubble_core::Mobius<f64>,
    fields: Vec<FieldEntry>,
}

fn run_fields(args: &FieldsArgs) -> Result<u8, Failure> {
    let bubble = load_bubble(&args.bubble)?;
    let (cfg, _) = classify_config(&args.bubble);
    let c = classify_detailed(&bubble, &cfg).map_err(|e| Failure::uncertified(format!("classify: {e}")))?;
    std::fs::create_dir_all(&args.csv_dir)
        .map_err(|e| Failure::input(format!("--csv-dir {}: {e}", args.csv_dir.display())))?;
    let b = &c.normalized;
    let grid = Grid::square(&c.branch, 2.0, args.grid);
    let h = jacobi::DEFAULT_STEP;
    let label = args.bubble.input.as_ref().map_or("bubble".to_string(), |p| p.display().to_string());
    let write = |name: &str, sample: &FieldSample<f64>| -> Result<String, Failure> {
        let path = args.csv_dir.join(name);
        std::fs::write(&path, sample.to_csv()).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
        Ok(name.to_string())
    };
    let mut entries = Vec::new();
    let trivial = jacobi::trivial_solutions(b);
    for (i, f) in trivial.iter().enumerate() {
        let file = write(&format!("trivial_{i}.csv"), &FieldSample::scalar(&label, "trivial", &grid, &**f))?;
        entries.push(FieldEntry {
            file,
            tag: "trivial".into(),
            residual: jacobi::schrodinger_residual(b, &**f, &grid, h),
            conformal: None,
            boundedness: None,
        });
    }
    for (i, u) in jacobi::tangent_fields(b).iter().enumerate() {
        let file = write(&format!("tangent_{i}.csv"), &FieldSample::vector(&label, "tangent", &grid, &**u))?;
        entries.push(FieldEntry {
            file,
            tag: "tangent".into(),
            residual: jacobi::linearized_residual(b, &**u, &grid, h),
            conformal: Some(jacobi::conformal_jacobi_check(b, &**u, &grid, h)),
            boundedness: None,
        });
    }
    let mut reconstructed = Vec::new();
    for v in &c.system.basis {
        let field = jacobi::reconstruct_field(b, &c.branch, &c.system, v)
            .map_err(|e| Failure::uncertified(format!("reconstruction: {e}")))?;
        reconstructed.push(field);
    }
    for (i, field) in reconstructed.iter().enumerate() {
        let f = |z: Cx<f64>| field.f(z);
        let file = write(&format!("reconstructed_{i}.csv"), &FieldSample::scalar(&label, "reconstructed", &grid, &f))?;
        let bounded = jacobi::boundedness_check(&f, &c.branch, &grid).map_err(|e| Failure::uncertified(e.to_string()))?;
        entries.push(FieldEntry {
            file,
            tag: "reconstructed".into(),
            residual: jacobi::schrodinger_residual(b, &f, &grid, h),
            conformal: None,
            boundedness: Some(bounded),
        });
    }
    let closures: Vec<Box<dyn Fn(Cx<f64>) -> f64 + Sync + '_>> =
        reconstructed.iter().map(|r| Box::new(move |z| r.f(z)) as Box<dyn Fn(Cx<f64>) -> f64 + Sync>).collect();
    let mut all: Vec<&(dyn Fn(Cx<f64>) -> f64 + Sync)> = trivial.iter().map(|f| &**f as _).collect();
    all.extend(closures.iter().map(|f| &**f as &(dyn Fn(Cx<f64>) -> f64 + Sync)));
    let (rank, _) = jacobi::gram_rank(&all, &grid, cfg.tol_nullity);
    let report = FieldsReport {
        version: VERSION,
        seed: args.bubble.seed,
        d: c.report.d,
        grid: args.grid,
        step: h,
        exclusion_radius: grid.exclusion_radius,
        gram_rank: rank,
        normalization: c.report.normalization,
        target_rotation: c.report.target_rotation,
        fields: entries,
    };
    emit(&report, args.bubble.out.as_deref())?;
    Ok(if rank == 3 + c.report.d { EXIT_OK } else { EXIT_UNCERTIFIED })
}

fn configure_threads() -> Result<(), Failure> {
    if let Ok(v) = std::env::var("BUBBLE_KERNEL_THREADS") {
        let n: usize = v
            .parse()
            .ok()
            .filter(|&n| n > 0)
            .ok_or_else(|| Failure::input(format!("BUBBLE_KERNEL_THREADS: expected a positive integer, got {v:?}")))?;
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| Failure::input(format!("BUBBLE_KERNEL_THREADS: {e}")))?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let result = configure_threads().and_then(|()| match &cli.command {
        Command::Classify(a) => run_classify(a),
        Command::Verify(a) => run_verify(a),
        Command::Sweep(a) => run_sweep(a),
        Command::Energy(a) => run_energy(a),
        Command::Fields(a) => run_fields(a),
    });
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
