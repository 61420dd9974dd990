//! Command-line frontend over the PDA / CDC toolkit: build and validate
//! arrays, compile schemes, execute simulated runs, and emit the exact
//! load tables. All outputs are deterministic for a given invocation.

pub mod json;

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Once;

use anyhow::{anyhow, bail, Context, Result};
use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use sha2::{Digest, Sha256};

use cdc_core::analysis::{
    h_ratio, l_star, lemma4_spot_check, lemma4_threshold, q_file_comparison, scan_h,
    sym_poly_check, theorem4_spot_check, theorem4_threshold, Scheme,
};
use cdc_core::builders::{fixture, BuilderFamily, BuilderParams};
use cdc_core::compile::{compile, CompiledScheme, FunctionAssignment};
use cdc_core::pda::{parse_pda, render_pda, Pda};
use cdc_core::rational::{dec4, decimal, format_rational, parse_rational};
use cdc_core::sim::{gen_dataset, run_map, run_reduce, run_shuffle, SimParams};

#[derive(Parser)]
#[command(
    name = "cdc",
    version,
    about = "Placement delivery arrays and cascaded coded MapReduce schemes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build, validate, and display placement delivery arrays.
    #[command(subcommand)]
    Pda(PdaCommand),
    /// Compile PDAs into cascaded CDC schemes.
    #[command(subcommand)]
    Scheme(SchemeCommand),
    /// Execute compiled schemes on synthetic data.
    #[command(subcommand)]
    Sim(SimCommand),
    /// Exact-rational load tables, scans, and checks.
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Regenerate the reference tables and example runs into files.
    Reproduce {
        /// One of: table-5, table-6, table-7, table-8, example-2, example-3.
        target: String,
        /// Directory for the produced files and their manifest.
        #[arg(long, default_value = ".")]
        out_dir: PathBuf,
    },
}

#[derive(Subcommand)]
enum PdaCommand {
    /// Construct an array from a known family and print its text form.
    Build(BuildArgs),
    /// Check the array conditions and report the parameters.
    Validate { file: PathBuf },
    /// Print the parameters and grid of an array file.
    Show { file: PathBuf },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum FamilyArg {
    Subset,
    Partition,
    #[value(name = "partition-complement")]
    PartitionComplement,
    Fixture,
}

#[derive(Args)]
struct BuildArgs {
    /// PDA family.
    #[arg(long, value_enum)]
    family: FamilyArg,
    /// Number of nodes (columns). Required for the constructive families.
    #[arg(long = "K")]
    num_nodes: Option<usize>,
    /// Family parameter t. Required for the constructive families.
    #[arg(long)]
    t: Option<usize>,
    /// Fixture name, for `--family fixture`.
    #[arg(long)]
    name: Option<String>,
    /// Write to a file instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AssignmentArgs {
    /// PDA file to compile.
    #[arg(long)]
    pda: PathBuf,
    /// Replication factor for the window assignment.
    #[arg(long = "s", conflicts_with = "custom")]
    replication: Option<usize>,
    /// Comma-separated single-round function per node, e.g. `0,0,1,0,0,1`.
    #[arg(long)]
    custom: Option<String>,
    /// Ship whole intermediate values instead of the coded exchange.
    #[arg(long)]
    uncoded_fallback: bool,
}

#[derive(Subcommand)]
enum SchemeCommand {
    /// Compile and emit the full scheme document (JSON).
    Compile {
        #[command(flatten)]
        assignment: AssignmentArgs,
        /// Write to a file instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compile and print a human-readable summary.
    Describe {
        #[command(flatten)]
        assignment: AssignmentArgs,
    },
}

#[derive(Subcommand)]
enum SimCommand {
    /// Run a compiled scheme end to end and emit a run report (JSON).
    Run {
        /// Scheme document produced by `scheme compile`.
        #[arg(long)]
        scheme: PathBuf,
        /// Dataset seed.
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Intermediate-value width in bits; default `(g-1) * 64`.
        #[arg(long = "T")]
        iva_bits: Option<usize>,
        /// File size in bits.
        #[arg(long = "D", default_value_t = 256)]
        file_bits: usize,
        /// Reduce-output width in bits.
        #[arg(long = "B", default_value_t = 256)]
        output_bits: usize,
        /// Also write a per-message trace CSV.
        #[arg(long)]
        trace: Option<PathBuf>,
        /// Write the report to a file instead of standard output.
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum SchemeArg {
    #[value(name = "1")]
    One,
    #[value(name = "2")]
    Two,
    #[value(name = "3")]
    Three,
}

impl From<SchemeArg> for Scheme {
    fn from(value: SchemeArg) -> Scheme {
        match value {
            SchemeArg::One => Scheme::One,
            SchemeArg::Two => Scheme::Two,
            SchemeArg::Three => Scheme::Three,
        }
    }
}

#[derive(Subcommand)]
enum AnalyzeCommand {
    /// CSV of optimal load, scheme load, and their ratio at one node count.
    Table {
        #[arg(long = "K")]
        num_nodes: usize,
        #[arg(long, value_enum, default_value = "1")]
        scheme: SchemeArg,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exhaustive ratio scan over all admissible (K, r, s).
    Scan {
        #[arg(long, value_enum, default_value = "1")]
        scheme: SchemeArg,
        #[arg(long = "Kmax", default_value_t = 60)]
        k_max: usize,
        /// Ratio bound to verify, e.g. `2` or `21/10`.
        #[arg(long)]
        bound: String,
        /// Allow node counts beyond 100 (minutes to hours of compute).
        #[arg(long)]
        long_run: bool,
        /// Write the per-K worst points as CSV.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Function and file counts of the baseline scheme vs the new ones.
    Compare {
        #[arg(long = "K")]
        num_nodes: usize,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        s: usize,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Node-count thresholds above which the ratio bounds are proven.
    Thresholds {
        #[arg(long)]
        r: usize,
        #[arg(long)]
        s: usize,
        /// Also evaluate the ratio at this many sampled K at/above each
        /// threshold.
        #[arg(long, default_value_t = 4)]
        samples: usize,
    },
    /// Elementary-symmetric-sum inequality check for one instance.
    Lemma5 {
        /// Comma-separated positive integers.
        #[arg(long)]
        a: String,
        #[arg(long = "K")]
        big_k: u64,
    },
}

/// Entry point shared by `main` and the tests. Returns the process exit
/// code: 0 success, 1 validation or runtime failure, 2 usage error.
pub fn run(args: Vec<OsString>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    init_thread_pool();
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(err) => {
            return match err.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    let _ = write!(stdout, "{err}");
                    0
                }
                _ => {
                    let _ = write!(stderr, "{err}");
                    2
                }
            };
        }
    };
    match dispatch(cli, stdout) {
        Ok(code) => code,
        Err(err) => {
            let _ = writeln!(stderr, "error: {err:#}");
            1
        }
    }
}

/// Honor `CDC_THREADS` for the scan worker pool.
fn init_thread_pool() {
    static INIT: Once = Once::new();
    INIT.call_once(|| {
        if let Some(threads) = std::env::var("CDC_THREADS")
            .ok()
            .and_then(|raw| raw.parse::<usize>().ok())
            .filter(|&n| n > 0)
        {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build_global();
        }
    });
}

fn dispatch(cli: Cli, out: &mut dyn Write) -> Result<i32> {
    match cli.command {
        Command::Pda(command) => run_pda(command, out),
        Command::Scheme(command) => run_scheme_command(command, out),
        Command::Sim(command) => run_sim(command, out),
        Command::Analyze(command) => run_analyze(command, out),
        Command::Reproduce { target, out_dir } => run_reproduce(&target, &out_dir, out),
    }
}

fn emit(out: &mut dyn Write, path: Option<&Path>, content: &str) -> Result<()> {
    match path {
        Some(path) => fs::write(path, content)
            .with_context(|| format!("cannot write {}", path.display()))?,
        None => out.write_all(content.as_bytes())?,
    }
    Ok(())
}

fn load_pda(path: &Path) -> Result<Pda> {
    let text =
        fs::read_to_string(path).with_context(|| format!("cannot read {}", path.display()))?;
    Ok(parse_pda(&text)?)
}

fn run_pda(command: PdaCommand, out: &mut dyn Write) -> Result<i32> {
    match command {
        PdaCommand::Build(args) => {
            let pda = match args.family {
                FamilyArg::Fixture => {
                    let name = args
                        .name
                        .ok_or_else(|| anyhow!("--family fixture requires --name"))?;
                    fixture(&name)?
                }
                family => {
                    let num_nodes = args.num_nodes.ok_or_else(|| anyhow!("--K is required"))?;
                    let t = args.t.ok_or_else(|| anyhow!("--t is required"))?;
                    let family = match family {
                        FamilyArg::Subset => BuilderFamily::Subset,
                        FamilyArg::Partition => BuilderFamily::Partition,
                        FamilyArg::PartitionComplement => BuilderFamily::PartitionComplement,
                        FamilyArg::Fixture => unreachable!(),
                    };
                    BuilderParams {
                        family,
                        num_nodes,
                        t,
                    }
                    .build()?
                }
            };
            emit(out, args.out.as_deref(), &render_pda(&pda))?;
            Ok(0)
        }
        PdaCommand::Validate { file } => {
            let pda = load_pda(&file)?;
            match pda.validate() {
                Ok(profile) => {
                    writeln!(out, "valid {}", pda.parameter_string(&profile))?;
                    Ok(0)
                }
                Err(err) => {
                    writeln!(out, "invalid: {err}")?;
                    Ok(1)
                }
            }
        }
        PdaCommand::Show { file } => {
            let pda = load_pda(&file)?;
            match pda.validate() {
                Ok(profile) => writeln!(out, "{} PDA", pda.parameter_string(&profile))?,
                Err(err) => writeln!(out, "invalid PDA ({err})")?,
            }
            let rendered = render_pda(&pda);
            let grid = rendered.split_once('\n').map(|x| x.1).unwrap_or_default();
            write!(out, "{grid}")?;
            Ok(0)
        }
    }
}

fn compile_from_args(args: &AssignmentArgs) -> Result<CompiledScheme> {
    let pda = load_pda(&args.pda)?;
    let assignment = match (&args.replication, &args.custom) {
        (Some(s), None) => FunctionAssignment::window(pda.num_nodes(), *s)?,
        (None, Some(list)) => {
            let functions: Vec<usize> = list
                .split(',')
                .map(|token| {
                    token
                        .trim()
                        .parse::<usize>()
                        .with_context(|| format!("bad function id `{token}`"))
                })
                .collect::<Result<_>>()?;
            FunctionAssignment::custom(&functions)?
        }
        _ => bail!("exactly one of --s or --custom is required"),
    };
    Ok(compile(&pda, assignment, args.uncoded_fallback)?)
}

fn run_scheme_command(command: SchemeCommand, out: &mut dyn Write) -> Result<i32> {
    match command {
        SchemeCommand::Compile { assignment, out: path } => {
            let scheme = compile_from_args(&assignment)?;
            let mut document = serde_json::to_string_pretty(&json::scheme_to_json(&scheme))?;
            document.push('\n');
            emit(out, path.as_deref(), &document)?;
            Ok(0)
        }
        SchemeCommand::Describe { assignment } => {
            let scheme = compile_from_args(&assignment)?;
            let loads = scheme.predicted_loads();
            writeln!(
                out,
                "scheme: {} nodes, {} files, {} reduce functions, {} round(s), {}-regular",
                scheme.num_nodes(),
                scheme.num_files(),
                scheme.num_functions(),
                scheme.rounds().len(),
                scheme.regularity(),
            )?;
            writeln!(
                out,
                "computation load r = {} ({})",
                format_rational(&loads.computation),
                dec4(&loads.computation)
            )?;
            match &loads.communication {
                Some(l) => {
                    let capped = if loads.exceeds_unity {
                        " (exceeds 1: uncoded forwarding would be cheaper)"
                    } else {
                        ""
                    };
                    writeln!(
                        out,
                        "communication load L = {} ({}){capped}",
                        format_rational(l),
                        dec4(l)
                    )?;
                }
                None => writeln!(out, "communication load: custom assignment, not normalized")?,
            }
            writeln!(
                out,
                "total coded IVA units = {} ({})",
                format_rational(&loads.total_coded_units),
                dec4(&loads.total_coded_units)
            )?;
            for node in 0..scheme.num_nodes() {
                let functions: Vec<String> = scheme
                    .assignment()
                    .functions_of(node)
                    .iter()
                    .map(usize::to_string)
                    .collect();
                let files: Vec<String> = scheme.placement()[node]
                    .iter()
                    .map(usize::to_string)
                    .collect();
                writeln!(
                    out,
                    "node {node}: files {{{}}}, functions [{}]",
                    files.join(","),
                    functions.join(",")
                )?;
            }
            Ok(0)
        }
    }
}

fn run_sim(command: SimCommand, out: &mut dyn Write) -> Result<i32> {
    let SimCommand::Run {
        scheme,
        seed,
        iva_bits,
        file_bits,
        output_bits,
        trace,
        out: report_path,
    } = command;
    let text =
        fs::read_to_string(&scheme).with_context(|| format!("cannot read {}", scheme.display()))?;
    let scheme = json::scheme_from_json(&text)?;
    let params = SimParams {
        iva_bits: iva_bits.unwrap_or((scheme.regularity() - 1) * 64),
        output_bits,
    };
    let dataset = gen_dataset(scheme.num_files(), file_bits, seed)?;
    let stores = run_map(&scheme, &dataset, &params)?;
    let shuffle = run_shuffle(&scheme, &stores, &params)?;
    let report = run_reduce(&scheme, &dataset, &stores, &shuffle, &params)?;

    if let Some(path) = trace {
        fs::write(&path, json::trace_csv(&shuffle.log))
            .with_context(|| format!("cannot write {}", path.display()))?;
    }
    let mut document =
        serde_json::to_string_pretty(&json::report_to_json(&scheme, &dataset, &params, &report))?;
    document.push('\n');
    emit(out, report_path.as_deref(), &document)?;
    Ok(if report.all_decodes_succeeded() { 0 } else { 1 })
}

fn table_csv(num_nodes: usize, scheme: Scheme) -> Result<String> {
    let mut csv = String::from("r,s,l_star,l_scheme,h_ratio\n");
    let rs: Vec<usize> = match scheme {
        Scheme::One => (1..num_nodes).collect(),
        Scheme::Two => (2..num_nodes).filter(|r| num_nodes % r == 0).collect(),
        Scheme::Three => {
            let mut rs: Vec<usize> = (2..num_nodes)
                .filter(|t| num_nodes % t == 0)
                .map(|t| num_nodes - t)
                .collect();
            rs.sort_unstable();
            rs
        }
    };
    for r in rs {
        for s in 1..=num_nodes {
            let optimal = l_star(num_nodes, r, s)?;
            let load = scheme.load(num_nodes, r, s)?;
            let ratio = h_ratio(num_nodes, r, s, scheme)?;
            csv.push_str(&format!(
                "{r},{s},{},{},{}\n",
                dec4(&optimal),
                dec4(&load),
                dec4(&ratio)
            ));
        }
    }
    Ok(csv)
}

fn run_analyze(command: AnalyzeCommand, out: &mut dyn Write) -> Result<i32> {
    match command {
        AnalyzeCommand::Table {
            num_nodes,
            scheme,
            out: path,
        } => {
            let csv = table_csv(num_nodes, scheme.into())?;
            emit(out, path.as_deref(), &csv)?;
            Ok(0)
        }
        AnalyzeCommand::Scan {
            scheme,
            k_max,
            bound,
            long_run,
            out: path,
        } => {
            if k_max > 100 && !long_run {
                writeln!(
                    out,
                    "Kmax = {k_max} needs --long-run (expect minutes to hours)"
                )?;
                return Ok(2);
            }
            let bound = parse_rational(&bound)?;
            let scheme: Scheme = scheme.into();
            let report = scan_h(k_max, scheme, &bound)?;
            writeln!(
                out,
                "scheme {scheme:?}: scanned {} points up to K = {}",
                report.points_checked, report.k_max
            )?;
            if let Some(worst) = &report.worst {
                writeln!(
                    out,
                    "worst ratio {} ({}) at K={} r={} s={}",
                    format_rational(&worst.ratio),
                    dec4(&worst.ratio),
                    worst.num_nodes,
                    worst.r,
                    worst.s
                )?;
            }
            if let Some(path) = path {
                let mut csv = String::from("k,r,s,h_exact,h_ratio\n");
                for point in &report.per_k_worst {
                    csv.push_str(&format!(
                        "{},{},{},{},{}\n",
                        point.num_nodes,
                        point.r,
                        point.s,
                        format_rational(&point.ratio),
                        dec4(&point.ratio)
                    ));
                }
                fs::write(&path, csv)
                    .with_context(|| format!("cannot write {}", path.display()))?;
            }
            if report.violations.is_empty() {
                writeln!(out, "no violations of bound {}", format_rational(&bound))?;
                Ok(0)
            } else {
                writeln!(
                    out,
                    "{} violation(s) of bound {}:",
                    report.violations.len(),
                    format_rational(&bound)
                )?;
                for point in report.violations.iter().take(20) {
                    writeln!(
                        out,
                        "  K={} r={} s={}: H = {} ({})",
                        point.num_nodes,
                        point.r,
                        point.s,
                        format_rational(&point.ratio),
                        dec4(&point.ratio)
                    )?;
                }
                Ok(1)
            }
        }
        AnalyzeCommand::Compare {
            num_nodes,
            r,
            s,
            out: path,
        } => {
            let csv = compare_csv(&[(num_nodes, r, s)])?;
            emit(out, path.as_deref(), &csv)?;
            Ok(0)
        }
        AnalyzeCommand::Thresholds { r, s, samples } => {
            let mut any = false;
            if r >= s {
                let threshold = lemma4_threshold(r, s)?;
                writeln!(
                    out,
                    "scheme-1 bound 2 holds for K >= {} ({})",
                    format_rational(&threshold),
                    decimal(&threshold, 2)
                )?;
                for (k, ratio) in lemma4_spot_check(r, s, samples)? {
                    writeln!(out, "  H1({k},{r},{s}) = {} ({})", format_rational(&ratio), dec4(&ratio))?;
                }
                any = true;
            }
            if r >= s + 2 {
                let threshold = theorem4_threshold(r, s)?;
                writeln!(
                    out,
                    "scheme-2/3 bound 21/10 holds for K >= {} ({})",
                    format_rational(&threshold),
                    decimal(&threshold, 2)
                )?;
                for (k, ratio) in theorem4_spot_check(r, s, samples)? {
                    writeln!(out, "  H2({k},{r},{s}) = {} ({})", format_rational(&ratio), dec4(&ratio))?;
                }
                any = true;
            }
            if !any {
                bail!("no threshold applies: need r >= s (scheme 1) or r >= s+2 (schemes 2/3)");
            }
            Ok(0)
        }
        AnalyzeCommand::Lemma5 { a, big_k } => {
            let values: Vec<u64> = a
                .split(',')
                .map(|token| {
                    token
                        .trim()
                        .parse::<u64>()
                        .with_context(|| format!("bad integer `{token}`"))
                })
                .collect::<Result<_>>()?;
            let report = sym_poly_check(&values, big_k)?;
            for (h, sum) in report.sums.iter().enumerate() {
                writeln!(out, "b_{h} = {sum}")?;
            }
            if report.passed() {
                writeln!(out, "both inequality families hold")?;
                Ok(0)
            } else {
                for (h, part) in &report.failures {
                    writeln!(out, "part {part} fails at h = {h}")?;
                }
                Ok(1)
            }
        }
    }
}

fn compare_csv(rows: &[(usize, usize, usize)]) -> Result<String> {
    let mut csv = String::from("k,r,s,q_baseline,q_new,n_baseline,n_scheme2,n_scheme3\n");
    for &(num_nodes, r, s) in rows {
        let cmp = q_file_comparison(num_nodes, r, s)?;
        let optional =
            |x: &Option<num_bigint::BigInt>| x.as_ref().map(ToString::to_string).unwrap_or_default();
        csv.push_str(&format!(
            "{num_nodes},{r},{s},{},{},{},{},{}\n",
            cmp.functions_baseline,
            cmp.functions_new,
            cmp.files_baseline,
            optional(&cmp.files_scheme2),
            optional(&cmp.files_scheme3),
        ));
    }
    Ok(csv)
}

/// The nine (r, s) pairs of the sixteen-node ratio table.
const TABLE5_PAIRS: [(usize, usize); 9] = [
    (3, 1),
    (3, 2),
    (3, 3),
    (5, 3),
    (5, 5),
    (5, 7),
    (8, 5),
    (8, 8),
    (8, 10),
];

fn run_reproduce(target: &str, out_dir: &Path, out: &mut dyn Write) -> Result<i32> {
    fs::create_dir_all(out_dir)
        .with_context(|| format!("cannot create {}", out_dir.display()))?;
    let mut files: Vec<(String, String)> = Vec::new(); // (name, content)

    match target {
        "table-5" => {
            let mut csv = String::from("r,s,l_star,l_scheme,h_ratio\n");
            for (r, s) in TABLE5_PAIRS {
                csv.push_str(&format!(
                    "{r},{s},{},{},{}\n",
                    dec4(&l_star(16, r, s)?),
                    dec4(&Scheme::One.load(16, r, s)?),
                    dec4(&h_ratio(16, r, s, Scheme::One)?)
                ));
            }
            files.push(("table5.csv".into(), csv));
        }
        "table-6" => {
            let mut csv = String::from("k,q_baseline,q_new\n");
            for k in (2..=20).step_by(2) {
                let cmp = q_file_comparison(k, 1, k / 2)?;
                csv.push_str(&format!(
                    "{k},{},{}\n",
                    cmp.functions_baseline, cmp.functions_new
                ));
            }
            files.push(("table6.csv".into(), csv));
        }
        "table-7" => {
            let mut csv = String::from("k,q_baseline,q_new\n");
            for k in (3..=18).step_by(3) {
                let cmp = q_file_comparison(k, 1, k / 3)?;
                csv.push_str(&format!(
                    "{k},{},{}\n",
                    cmp.functions_baseline, cmp.functions_new
                ));
            }
            files.push(("table7.csv".into(), csv));
        }
        "table-8" => {
            let triples = [
                (16, 3, 2),
                (16, 5, 4),
                (16, 8, 6),
                (20, 3, 2),
                (20, 5, 4),
                (20, 8, 6),
            ];
            let mut csv = String::from("k,r,s,q_baseline,q_new\n");
            for (k, r, s) in triples {
                let cmp = q_file_comparison(k, r, s)?;
                csv.push_str(&format!(
                    "{k},{r},{s},{},{}\n",
                    cmp.functions_baseline, cmp.functions_new
                ));
            }
            files.push(("table8.csv".into(), csv));
        }
        "example-2" => {
            let pda = fixture("example-6x4")?;
            let assignment = FunctionAssignment::custom(&[0, 0, 1, 0, 0, 1])?;
            let scheme = compile(&pda, assignment, false)?;
            reproduce_run(&scheme, "example2", &mut files)?;
        }
        "example-3" => {
            let pda = fixture("example-10x5")?;
            let scheme = compile(&pda, FunctionAssignment::window(10, 4)?, false)?;
            reproduce_run(&scheme, "example3", &mut files)?;
        }
        other => bail!(
            "unknown target `{other}`; expected table-5..table-8, example-2, or example-3"
        ),
    }

    let mut manifest = String::new();
    for (name, content) in &files {
        let path = out_dir.join(name);
        fs::write(&path, content)
            .with_context(|| format!("cannot write {}", path.display()))?;
        let digest = Sha256::digest(content.as_bytes());
        manifest.push_str(&format!("{}  {}\n", json::hex(&digest), name));
        writeln!(out, "wrote {}", path.display())?;
    }
    let manifest_name = format!("{}.manifest.txt", target.replace('-', ""));
    fs::write(out_dir.join(&manifest_name), &manifest)?;
    writeln!(out, "wrote {}", out_dir.join(&manifest_name).display())?;
    Ok(0)
}

fn reproduce_run(
    scheme: &CompiledScheme,
    stem: &str,
    files: &mut Vec<(String, String)>,
) -> Result<()> {
    let params = SimParams {
        iva_bits: (scheme.regularity() - 1) * 64,
        output_bits: SimParams::DEFAULT_OUTPUT_BITS,
    };
    let dataset = gen_dataset(scheme.num_files(), 256, 42)?;
    let stores = run_map(scheme, &dataset, &params)?;
    let shuffle = run_shuffle(scheme, &stores, &params)?;
    let report = run_reduce(scheme, &dataset, &stores, &shuffle, &params)?;
    if !report.all_decodes_succeeded() {
        bail!("decode failures in the {stem} run");
    }

    let mut scheme_doc = serde_json::to_string_pretty(&json::scheme_to_json(scheme))?;
    scheme_doc.push('\n');
    files.push((format!("{stem}_scheme.json"), scheme_doc));
    let mut report_doc =
        serde_json::to_string_pretty(&json::report_to_json(scheme, &dataset, &params, &report))?;
    report_doc.push('\n');
    files.push((format!("{stem}_report.json"), report_doc));
    files.push((format!("{stem}_trace.csv"), json::trace_csv(&shuffle.log)));
    Ok(())
}
