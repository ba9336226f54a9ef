//! `symhull`: command-line access to the hull, envelope and sparse PCA tools.
//!
//! Structured results go to stdout as JSON or CSV, diagnostics to stderr.
//! Exit codes: 0 on success, 2 on bad input, 3 when a solver fails.

use anyhow::{anyhow, bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Instant;
use symhull::envelope::{envelope_table, gap_row, Hypercube};
use symhull::ksupport::{separating_hyperplane, sparsity_certificate};
use symhull::majorization::{birkhoff, DoublyStochastic};
use symhull::model::lp_format::{export_lp, parse_lp};
use symhull::model::sdpa::{export_sdpa, SdpaProblem};
use symhull::model::{emit_permutahedron, Cmp, ConicModel, LinExpr, Sense};
use symhull::spca::{
    build_relaxation, exact_spca, gap_report, pitprops_instance, random_instance,
    solve_relaxation, GapReport, SpcaInstance,
};
use symhull::{BaseNorm, ConicSettings, MajorizationForm, Matrix, Membership, RelaxationKind, Status};

const SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(name = "symhull", version, about = "Convex hulls of permutation- and sign-invariant sets")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// c-norm of a vector over K-sparse points of a norm ball, with a separating cut when outside.
    Knorm {
        /// JSON array of numbers.
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        k: usize,
        /// l2, linf or lp:P with P > 1.
        #[arg(long, default_value = "l2")]
        norm: String,
    },
    /// Convex envelope of the product of coordinates at one point of a box.
    Envelope {
        /// Lower bound, upper bound and dimension, as `a,b,n`.
        #[arg(long = "box", allow_hyphen_values = true)]
        cube: String,
        /// JSON array of numbers inside the box.
        #[arg(long)]
        point: PathBuf,
        /// Also report the recursive McCormick value and the gap.
        #[arg(long)]
        compare_mccormick: bool,
    },
    /// Envelope against recursive McCormick at seeded sample points, as CSV.
    EnvelopeTable {
        #[arg(long = "box", allow_hyphen_values = true)]
        cube: String,
        #[arg(long, default_value_t = 9)]
        samples: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Sparse PCA: exact optimum, one relaxation, or gap-closed tables.
    Spca {
        #[command(subcommand)]
        action: SpcaAction,
    },
    /// Write a model in LP or SDPA sparse format.
    Export(ExportArgs),
    /// Write a doubly stochastic matrix as a convex combination of permutations.
    Birkhoff {
        /// JSON array of rows.
        #[arg(long)]
        matrix: PathBuf,
    },
}

#[derive(Args, Clone)]
struct InstanceArgs {
    /// `pitprops`, `random:n,seed`, or a JSON file holding an instance object or an array of rows.
    #[arg(long)]
    matrix: String,
    /// Cardinality: one value, a comma list, or an inclusive range `a..b`.
    /// Defaults to the instance's own K when it has one.
    #[arg(long)]
    k: Option<String>,
}

#[derive(Args, Clone)]
struct RelaxArgs {
    /// One or more of D, B, rowsum, diag, 2step, submat, T (comma separated), or `all`.
    #[arg(long)]
    kind: String,
    #[arg(long, default_value = "dual")]
    maj_form: String,
    #[arg(long, default_value_t = 1e-6)]
    tol: f64,
}

#[derive(Subcommand)]
enum SpcaAction {
    /// Exact optimum by support enumeration.
    Exact {
        #[command(flatten)]
        inst: InstanceArgs,
    },
    /// Solve relaxations and print their solver reports.
    Solve {
        #[command(flatten)]
        inst: InstanceArgs,
        #[command(flatten)]
        relax: RelaxArgs,
    },
    /// Percentage of the D-bound gap each relaxation closes.
    Gaps {
        #[command(flatten)]
        inst: InstanceArgs,
        #[command(flatten)]
        relax: RelaxArgs,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Lp,
    Sdpa,
}

#[derive(Args)]
struct ExportArgs {
    /// `spca:<kind>` (with --matrix and --k), `permutahedron` (with --input),
    /// or an existing `.lp` / `.dat-s` file to convert.
    #[arg(long)]
    model: String,
    #[arg(long, value_enum)]
    format: Format,
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    matrix: Option<String>,
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, default_value = "dual")]
    maj_form: String,
    /// JSON array used as the generating vector of a permutahedron.
    #[arg(long)]
    input: Option<PathBuf>,
}

/// A solver ran but did not deliver a usable answer.
#[derive(Debug)]
struct SolverFailure(String);

impl std::fmt::Display for SolverFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "solver failure: {}", self.0)
    }
}

impl std::error::Error for SolverFailure {}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<SolverFailure>().is_some() {
        return 3;
    }
    match err.downcast_ref::<symhull::Error>() {
        Some(symhull::Error::Solver(_)) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}

fn run(cmd: Command) -> anyhow::Result<()> {
    match cmd {
        Command::Knorm { input, k, norm } => knorm(&input, k, &norm),
        Command::Envelope { cube, point, compare_mccormick } => envelope(&cube, &point, compare_mccormick),
        Command::EnvelopeTable { cube, samples, seed } => table(&cube, samples, seed),
        Command::Spca { action } => match action {
            SpcaAction::Exact { inst } => spca_exact(&inst),
            SpcaAction::Solve { inst, relax } => spca_solve(&inst, &relax),
            SpcaAction::Gaps { inst, relax } => spca_gaps(&inst, &relax),
        },
        Command::Export(args) => export(&args),
        Command::Birkhoff { matrix } => birkhoff_cmd(&matrix),
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> anyhow::Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

fn print_json(value: serde_json::Value) -> anyhow::Result<()> {
    println!("{}", serde_json::to_string_pretty(&value)?);
    Ok(())
}

fn parse_box(spec: &str) -> anyhow::Result<Hypercube> {
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    let [a, b, n] = parts[..] else {
        bail!("--box expects a,b,n, got '{spec}'");
    };
    let a: f64 = a.parse().with_context(|| format!("bad lower bound '{a}'"))?;
    let b: f64 = b.parse().with_context(|| format!("bad upper bound '{b}'"))?;
    let n: usize = n.parse().with_context(|| format!("bad dimension '{n}'"))?;
    Ok(Hypercube::new(a, b, n)?)
}

fn knorm(input: &Path, k: usize, norm: &str) -> anyhow::Result<()> {
    let x: Vec<f64> = read_json(input)?;
    let base = BaseNorm::from_str(norm)?;
    let cert = sparsity_certificate(&x, k, base)?;
    let membership = symhull::ksupport::membership(&x, k, base, 1.0)?;
    let hyperplane = match membership {
        Membership::Outside => Some(separating_hyperplane(&x, k, base)?),
        _ => None,
    };
    print_json(json!({
        "schema": SCHEMA_VERSION,
        "k": k,
        "norm": norm,
        "cNorm": cert.c_norm,
        "u": cert.u_x,
        "splitIndex": cert.i_x,
        "membership": membership,
        "hyperplane": hyperplane,
    }))
}

fn envelope(cube: &str, point: &Path, compare: bool) -> anyhow::Result<()> {
    let cube = parse_box(cube)?;
    let x: Vec<f64> = read_json(point)?;
    let row = gap_row(1, &x, &cube)?;
    let mut out = json!({ "schema": SCHEMA_VERSION, "envelope": row.envelope });
    if compare {
        out["mccormick"] = json!(row.mccormick);
        out["gap"] = json!(row.gap);
        out["percentGap"] = json!(finite_or_null(row.percent_gap));
    }
    print_json(out)
}

fn finite_or_null(v: f64) -> Option<f64> {
    v.is_finite().then_some(v)
}

fn table(cube: &str, samples: usize, seed: u64) -> anyhow::Result<()> {
    let cube = parse_box(cube)?;
    if samples == 0 {
        bail!("--samples must be positive");
    }
    let rows = envelope_table(&cube, samples, seed)?;
    println!("sample,z_e,z_r,gap,percent_gap");
    for r in &rows {
        println!("{},{:.4},{:.4},{:.4},{}", r.sample, r.envelope, r.mccormick, r.gap, percent(r.percent_gap));
    }
    let avg = rows.iter().map(|r| r.percent_gap).sum::<f64>() / rows.len() as f64;
    println!("average,,,,{}", percent(avg));
    Ok(())
}

fn percent(v: f64) -> String {
    if v.is_finite() {
        format!("{v:.1}")
    } else {
        "undefined".into()
    }
}

fn load_instance(spec: &str, k: Option<usize>) -> anyhow::Result<SpcaInstance> {
    if spec == "pitprops" {
        let k = k.ok_or_else(|| anyhow!("--k is required for pitprops"))?;
        return Ok(pitprops_instance(k)?);
    }
    if let Some(rest) = spec.strip_prefix("random:") {
        let (n, seed) = rest.split_once(',').ok_or_else(|| anyhow!("expected random:n,seed, got '{spec}'"))?;
        let n: usize = n.trim().parse().with_context(|| format!("bad dimension '{n}'"))?;
        let seed: u64 = seed.trim().parse().with_context(|| format!("bad seed '{seed}'"))?;
        let inst = random_instance(n, seed)?;
        return Ok(match k {
            Some(k) => inst.with_k(k)?,
            None => inst,
        });
    }
    let path = Path::new(spec);
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {spec}"))?;
    if text.trim_start().starts_with('{') {
        let inst = SpcaInstance::from_json(&text)?;
        return Ok(match k {
            Some(k) => inst.with_k(k)?,
            None => inst,
        });
    }
    let rows: Vec<Vec<f64>> = serde_json::from_str(&text).with_context(|| format!("parsing {spec}"))?;
    let k = k.ok_or_else(|| anyhow!("--k is required when the matrix file is a bare array of rows"))?;
    Ok(SpcaInstance::new(Matrix::from_rows(&rows)?, k, spec)?)
}

fn parse_ks(spec: Option<&str>) -> anyhow::Result<Vec<Option<usize>>> {
    let Some(spec) = spec else { return Ok(vec![None]) };
    let mut out = Vec::new();
    for part in spec.split(',').map(str::trim) {
        if let Some((a, b)) = part.split_once("..") {
            let a: usize = a.parse().with_context(|| format!("bad K range '{part}'"))?;
            let b: usize = b.parse().with_context(|| format!("bad K range '{part}'"))?;
            if a > b {
                bail!("empty K range '{part}'");
            }
            out.extend((a..=b).map(Some));
        } else {
            out.push(Some(part.parse().with_context(|| format!("bad K '{part}'"))?));
        }
    }
    Ok(out)
}

fn instances(args: &InstanceArgs) -> anyhow::Result<Vec<SpcaInstance>> {
    parse_ks(args.k.as_deref())?.into_iter().map(|k| load_instance(&args.matrix, k)).collect()
}

fn parse_kinds(spec: &str) -> anyhow::Result<Vec<RelaxationKind>> {
    if spec == "all" {
        return Ok(RelaxationKind::ALL.to_vec());
    }
    Ok(spec.split(',').map(|s| RelaxationKind::from_str(s.trim())).collect::<Result<_, _>>()?)
}

fn settings(relax: &RelaxArgs) -> anyhow::Result<ConicSettings> {
    if !(relax.tol > 0.0 && relax.tol < 1.0) {
        bail!("--tol must lie in (0, 1)");
    }
    Ok(ConicSettings::with_tol(relax.tol))
}

/// Runs `f` on every item across the available cores; results keep input order.
fn fan_out<T: Sync, R: Send>(items: &[T], f: impl Fn(&T) -> R + Sync) -> Vec<R> {
    let workers = std::thread::available_parallelism().map_or(1, |n| n.get()).min(items.len());
    if workers <= 1 {
        return items.iter().map(f).collect();
    }
    let next = AtomicUsize::new(0);
    let slots: Mutex<Vec<Option<R>>> = Mutex::new((0..items.len()).map(|_| None).collect());
    std::thread::scope(|s| {
        for _ in 0..workers {
            s.spawn(|| loop {
                let i = next.fetch_add(1, Ordering::Relaxed);
                if i >= items.len() {
                    break;
                }
                let r = f(&items[i]);
                slots.lock().expect("no worker panics while holding the lock")[i] = Some(r);
            });
        }
    });
    slots.into_inner().expect("workers finished").into_iter().map(|r| r.expect("every slot filled")).collect()
}

fn spca_exact(args: &InstanceArgs) -> anyhow::Result<()> {
    println!("K,zStar,support,seconds");
    for inst in instances(args)? {
        let start = Instant::now();
        let sol = exact_spca(&inst)?;
        let support: Vec<String> = sol.support.iter().map(|i| (i + 1).to_string()).collect();
        println!("{},{:.4},{},{:.2}", inst.k(), sol.value, support.join(" "), start.elapsed().as_secs_f64());
    }
    Ok(())
}

fn check_status(status: Status, what: &str) -> anyhow::Result<()> {
    match status {
        Status::Optimal | Status::MaxIter => Ok(()),
        other => Err(SolverFailure(format!("{what} ended with status {other}")).into()),
    }
}

fn spca_solve(args: &InstanceArgs, relax: &RelaxArgs) -> anyhow::Result<()> {
    let kinds = parse_kinds(&relax.kind)?;
    let form = MajorizationForm::from_str(&relax.maj_form)?;
    let settings = settings(relax)?;
    let jobs: Vec<(SpcaInstance, RelaxationKind)> =
        instances(args)?.into_iter().flat_map(|i| kinds.iter().map(move |&k| (i.clone(), k))).collect();
    let results = fan_out(&jobs, |(inst, kind)| solve_relaxation(inst, *kind, form, &settings));
    println!("K,kind,status,objective,iterations,primalResidual,dualResidual,seconds");
    let mut failure = None;
    for ((inst, kind), res) in jobs.iter().zip(results) {
        let r = res?.report;
        println!(
            "{},{},{},{:.6},{},{:.2e},{:.2e},{:.2}",
            inst.k(),
            kind,
            r.status,
            r.objective,
            r.iterations,
            r.primal_residual,
            r.dual_residual,
            r.seconds
        );
        if let Err(e) = check_status(r.status, &format!("{kind} at K={}", inst.k())) {
            failure.get_or_insert(e);
        }
    }
    failure.map_or(Ok(()), Err)
}

fn spca_gaps(args: &InstanceArgs, relax: &RelaxArgs) -> anyhow::Result<()> {
    let kinds = parse_kinds(&relax.kind)?;
    let form = MajorizationForm::from_str(&relax.maj_form)?;
    let settings = settings(relax)?;
    let insts = instances(args)?;
    let reports: Vec<symhull::Result<GapReport>> = fan_out(&insts, |inst| gap_report(inst, &kinds, form, &settings));
    println!("{}", GapReport::CSV_HEADER);
    let mut failure = None;
    for report in reports {
        let report = report?;
        for row in report.csv_rows() {
            println!("{row}");
        }
        let statuses = std::iter::once((RelaxationKind::D, report.d_status))
            .chain(report.entries.iter().map(|e| (e.kind, e.status)));
        for (kind, status) in statuses {
            if let Err(e) = check_status(status, &format!("{kind} at K={}", report.k)) {
                failure.get_or_insert(e);
            }
        }
    }
    failure.map_or(Ok(()), Err)
}

fn permutahedron_model(u: &[f64], form: MajorizationForm) -> anyhow::Result<ConicModel> {
    let mut sorted = u.to_vec();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let mut model = ConicModel::new("permutahedron");
    let uv: Vec<LinExpr> = (0..u.len()).map(|i| model.free_var(format!("u{}", i + 1)).into()).collect();
    let xv: Vec<LinExpr> = (0..u.len()).map(|i| model.free_var(format!("x{}", i + 1)).into()).collect();
    for (i, (e, v)) in uv.iter().zip(&sorted).enumerate() {
        model.add_row(format!("fix{}", i + 1), e.clone(), Cmp::Eq, *v);
    }
    emit_permutahedron(&mut model, &uv, &xv, form, "perm")?;
    model.set_objective(Sense::Minimize, LinExpr::zero());
    Ok(model)
}

fn export(args: &ExportArgs) -> anyhow::Result<()> {
    let form = MajorizationForm::from_str(&args.maj_form)?;
    let model = if let Some(kind) = args.model.strip_prefix("spca:") {
        let kind = RelaxationKind::from_str(kind)?;
        let matrix = args.matrix.as_deref().ok_or_else(|| anyhow!("--matrix is required for spca models"))?;
        let inst = load_instance(matrix, args.k)?;
        build_relaxation(&inst, kind, form)?.model.into_inner()
    } else if args.model == "permutahedron" {
        let input = args.input.as_deref().ok_or_else(|| anyhow!("--input is required for permutahedron"))?;
        let u: Vec<f64> = read_json(input)?;
        if u.is_empty() {
            bail!("permutahedron vector is empty");
        }
        permutahedron_model(&u, form)?
    } else {
        let path = Path::new(&args.model);
        let text = std::fs::read_to_string(path).with_context(|| format!("reading model {}", args.model))?;
        if args.model.ends_with(".lp") {
            parse_lp(&text)?
        } else if args.model.ends_with(".dat-s") {
            let stem = path.file_stem().and_then(|s| s.to_str()).unwrap_or("model");
            SdpaProblem::parse(&text)?.to_model(stem)
        } else {
            bail!("unknown model '{}' (use spca:<kind>, permutahedron, or a .lp/.dat-s file)", args.model);
        }
    };
    let text = match args.format {
        Format::Lp => export_lp(&model)?,
        Format::Sdpa => export_sdpa(&model)?,
    };
    std::fs::write(&args.out, text).with_context(|| format!("writing {}", args.out.display()))?;
    eprintln!("wrote {} ({} variables, {} rows)", args.out.display(), model.num_vars(), model.num_rows());
    Ok(())
}

fn birkhoff_cmd(path: &Path) -> anyhow::Result<()> {
    let rows: Vec<Vec<f64>> = read_json(path)?;
    let ds = DoublyStochastic::new(Matrix::from_rows(&rows)?)?;
    let dec = birkhoff(&ds)?;
    let residual = dec.reconstruct(ds.n()).max_abs_diff(ds.matrix());
    print_json(json!({
        "schema": SCHEMA_VERSION,
        "n": ds.n(),
        "weights": dec.weights,
        "permutations": dec.permutations,
        "residual": residual,
    }))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solver_errors_map_to_three() {
        assert_eq!(exit_code(&SolverFailure("x".into()).into()), 3);
        assert_eq!(exit_code(&symhull::Error::Solver("x".into()).into()), 3);
        assert_eq!(exit_code(&symhull::Error::Input("x".into()).into()), 2);
        assert_eq!(exit_code(&anyhow!("bad flag")), 2);
        assert!(check_status(Status::MaxIter, "T").is_ok());
        assert_eq!(exit_code(&check_status(Status::Numerical, "T").unwrap_err()), 3);
    }

    #[test]
    fn k_lists_and_ranges() {
        assert_eq!(parse_ks(Some("3..5,8")).unwrap(), [Some(3), Some(4), Some(5), Some(8)]);
        assert_eq!(parse_ks(None).unwrap(), [None]);
        assert!(parse_ks(Some("5..3")).is_err());
    }

    #[test]
    fn fan_out_keeps_order() {
        let items: Vec<usize> = (0..50).collect();
        assert_eq!(fan_out(&items, |i| i * 2), items.iter().map(|i| i * 2).collect::<Vec<_>>());
    }
}
