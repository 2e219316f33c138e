//! `gdh`: almost-commuting operators and Gelfand-Dickey hierarchies from
//! the command line.

mod cache;
mod error;
mod export;

use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use gd_core::hierarchy::{gd_equations_from_basis, kdv_sequence, proportionality};
use gd_core::pdo::oracle_basis_element;
use gd_core::wilson::{almost_commuting, almost_commuting_basis, generic_l};
use gd_core::AlmostCommutingResult;

use crate::cache::Cache;
use crate::error::{CliError, Result};
use crate::export::Format;

#[derive(Debug, Parser)]
#[command(name = "gdh", version, about = "Almost-commuting operators and Gelfand-Dickey hierarchies")]
struct Cli {
    /// Only print errors.
    #[arg(long, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write P_m and H_(m,0..n-2) for L of order n.
    Basis(BasisArgs),
    /// Write the level-m flow equations u_(i,t) = ... for i = 2..n.
    Hierarchy(HierarchyArgs),
    /// Print the KdV sequence from the recursion operator.
    Kdv(KdvArgs),
    /// Check P_m against the positive part of Q^m, Q the n-th root of L.
    Verify(RangeArgs),
    /// Time the computation for m = 2..max-m, skipping multiples of n.
    Bench(BenchArgs),
    /// Inspect or empty the result cache.
    Cache {
        #[command(subcommand)]
        action: CacheAction,
    },
}

#[derive(Debug, Args)]
struct OutputArgs {
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    /// Directory for the output files.
    #[arg(long, default_value = ".")]
    out: PathBuf,
}

#[derive(Debug, Args)]
struct BasisArgs {
    /// Order of L (at least 2).
    #[arg(long)]
    n: usize,
    /// Order of P (at least 1).
    #[arg(long)]
    m: usize,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct HierarchyArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    m: usize,
    /// Write the equations as constraints `rhs = 0`.
    #[arg(long)]
    stationary: bool,
    /// Include the formal constants c_(m,j).
    #[arg(long)]
    with_constants: bool,
    #[command(flatten)]
    output: OutputArgs,
}

#[derive(Debug, Args)]
struct KdvArgs {
    /// Compute kdv_0 .. kdv_terms.
    #[arg(long, default_value_t = 3)]
    terms: usize,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Also compare kdv_j with H_(2j+1,0) for n = 2.
    #[arg(long)]
    compare: bool,
}

#[derive(Debug, Args)]
struct RangeArgs {
    #[arg(long)]
    n: usize,
    #[arg(long)]
    max_m: usize,
}

#[derive(Debug, Args)]
struct BenchArgs {
    #[command(flatten)]
    range: RangeArgs,
    /// Write the CSV here instead of stdout.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
enum CacheAction {
    List,
    Clear,
}

struct Ctx {
    quiet: bool,
    cache: Cache,
}

impl Ctx {
    fn info(&self, msg: impl AsRef<str>) {
        if !self.quiet {
            println!("{}", msg.as_ref());
        }
    }

    fn result(&self, n: usize, m: usize) -> Result<AlmostCommutingResult> {
        if let Some(r) = self.cache.load(n, m) {
            return Ok(r);
        }
        let r = almost_commuting(n, m)?;
        self.store(&r);
        Ok(r)
    }

    /// Results for m = 1..=max_m, computing only if something is missing.
    fn basis(&self, n: usize, max_m: usize) -> Result<Vec<AlmostCommutingResult>> {
        let cached: Option<Vec<_>> = (1..=max_m).map(|m| self.cache.load(n, m)).collect();
        if let Some(all) = cached {
            return Ok(all);
        }
        let basis = almost_commuting_basis(n, max_m)?;
        for r in &basis {
            self.store(r);
        }
        Ok(basis)
    }

    // A cache that cannot be written only costs recomputation.
    fn store(&self, r: &AlmostCommutingResult) {
        if let Err(e) = self.cache.store(r) {
            eprintln!("warning: could not cache ({}_{}): {e}", r.n, r.m);
        }
    }
}

fn check_n(n: usize) -> Result<()> {
    if n < 2 {
        return Err(CliError::Usage(format!("--n must be at least 2, got {n}")));
    }
    Ok(())
}

fn report_written(ctx: &Ctx, paths: &[PathBuf]) {
    for p in paths {
        ctx.info(format!("wrote {}", p.display()));
    }
}

fn cmd_basis(ctx: &Ctx, args: &BasisArgs) -> Result<()> {
    check_n(args.n)?;
    if args.m < 1 {
        return Err(CliError::Usage(format!("--m must be at least 1, got {}", args.m)));
    }
    let r = ctx.result(args.n, args.m)?;
    let files = export::basis_files(&r, args.output.format);
    let written = export::write_files(&args.output.out, &files)?;
    report_written(ctx, &written);
    Ok(())
}

fn cmd_hierarchy(ctx: &Ctx, args: &HierarchyArgs) -> Result<()> {
    check_n(args.n)?;
    if args.m < 2 {
        return Err(CliError::Usage(format!("--m must be at least 2 for a flow, got {}", args.m)));
    }
    let basis = ctx.basis(args.n, args.m)?;
    let eqs = gd_equations_from_basis(&basis, args.m, args.with_constants)?;
    let files = export::hierarchy_files(args.n, args.m, &eqs, args.stationary, args.output.format);
    let written = export::write_files(&args.output.out, &files)?;
    report_written(ctx, &written);
    Ok(())
}

fn cmd_kdv(ctx: &Ctx, args: &KdvArgs) -> Result<()> {
    let seq = kdv_sequence(args.terms)?;
    let mut out = std::io::stdout().lock();
    for (j, k) in seq.iter().enumerate() {
        let body = export::render_poly(k, args.format);
        let line = match args.format {
            Format::Json => body,
            Format::Latex => format!("\\mathrm{{kdv}}_{{{j}}} = {body}"),
            Format::Text => format!("kdv_{j} = {body}"),
        };
        out.write_all(line.as_bytes()).map_err(|e| CliError::io("<stdout>", e))?;
    }
    drop(out);
    if args.compare {
        let basis = ctx.basis(2, 2 * args.terms + 1)?;
        for j in 0..=args.terms {
            let h = &basis[2 * j].h[0];
            match proportionality(&seq[j], h) {
                Some(c) => println!("kdv_{j} = {c} * H_({},0)", 2 * j + 1),
                None => println!("kdv_{j} is not proportional to H_({},0)", 2 * j + 1),
            }
        }
    }
    Ok(())
}

fn cmd_verify(ctx: &Ctx, args: &RangeArgs) -> Result<()> {
    check_n(args.n)?;
    let l = generic_l(args.n)?;
    let mut failed = Vec::new();
    for m in 1..=args.max_m {
        let t0 = Instant::now();
        let r = almost_commuting(args.n, m)?;
        let t_wilson = t0.elapsed().as_secs_f64();
        let t1 = Instant::now();
        let oracle = oracle_basis_element(&l, m as u32, m + 2)?;
        let t_oracle = t1.elapsed().as_secs_f64();
        let ok = oracle == r.p;
        if !ok {
            failed.push(m);
        }
        if !ctx.quiet || !ok {
            println!(
                "n={} m={m} {} (wilson {t_wilson:.3}s, oracle {t_oracle:.3}s)",
                args.n,
                if ok { "PASS" } else { "FAIL" }
            );
        }
    }
    ctx.info(format!("{}/{} PASS", args.max_m - failed.len(), args.max_m));
    if failed.is_empty() {
        Ok(())
    } else {
        Err(CliError::Verification(failed))
    }
}

fn cmd_bench(ctx: &Ctx, args: &BenchArgs) -> Result<()> {
    let n = args.range.n;
    check_n(n)?;
    let mut csv = String::from("n,m,seconds,monomials\n");
    for m in (2..=args.range.max_m).filter(|m| m % n != 0) {
        let t = Instant::now();
        let r = almost_commuting(n, m)?;
        let secs = t.elapsed().as_secs_f64();
        csv.push_str(&format!("{n},{m},{secs:.6},{}\n", r.p_monomials()));
    }
    match &args.csv {
        Some(path) => {
            write_text(path, &csv)?;
            ctx.info(format!("wrote {}", path.display()));
        }
        None => print!("{csv}"),
    }
    Ok(())
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::io(parent, e))?;
    }
    std::fs::write(path, text).map_err(|e| CliError::io(path, e))
}

fn cmd_cache(ctx: &Ctx, action: &CacheAction) -> Result<()> {
    match action {
        CacheAction::List => {
            let entries = ctx.cache.list()?;
            if entries.is_empty() {
                ctx.info(format!("cache at {} is empty", ctx.cache.dir().display()));
            }
            for (n, m, size) in entries {
                println!("({n}_{m}) {size} bytes");
            }
        }
        CacheAction::Clear => {
            let removed = ctx.cache.clear()?;
            ctx.info(format!("removed {removed} entries from {}", ctx.cache.dir().display()));
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    let ctx = Ctx {
        quiet: cli.quiet,
        cache: Cache::open_default(),
    };
    match &cli.command {
        Command::Basis(args) => cmd_basis(&ctx, args),
        Command::Hierarchy(args) => cmd_hierarchy(&ctx, args),
        Command::Kdv(args) => cmd_kdv(&ctx, args),
        Command::Verify(args) => cmd_verify(&ctx, args),
        Command::Bench(args) => cmd_bench(&ctx, args),
        Command::Cache { action } => cmd_cache(&ctx, action),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
