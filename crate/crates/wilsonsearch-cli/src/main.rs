//! Thin command-line front end over the `wilsonsearch` library. All real
//! work lives in the library; this binary parses flags, renders output and
//! maps error classes onto stable exit codes: 0 success, 2 integrity
//! failure, 3 budget error, 4 checkpoint error, 1 anything else.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_bigint::{BigInt, BigUint};
use num_traits::{One, ToPrimitive};

use wilsonsearch::checkpoint::{load_checkpoint, Stage};
use wilsonsearch::cyclotomic::CycloField;
use wilsonsearch::identities::{
    correction_c, gamma_factor, recover_wilson_trace, savings, stage3_root_check,
    teichmuller_lift, ESet, Stage3Context,
};
use wilsonsearch::primes::is_prime_64;
use wilsonsearch::search::{expected_count, render_residue_file};
use wilsonsearch::verify::{naive_factorial_mod, sqrt_factorial_mod};
use wilsonsearch::wilson::{factorial_mod, quotient_from_residue, wilson_range, WilsonRecord};
use wilsonsearch::{run_search, Error, Interval, Result, SearchConfig};

#[derive(Parser)]
#[command(name = "wilsonsearch", version, about = "Search for Wilson primes and near misses")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Scan an interval for Wilson primes and near misses
    Search(SearchArgs),
    /// Recompute one prime's residue by an independent route and compare
    Verify(VerifyArgs),
    /// Print one prime's Wilson quotient and residue
    Quotient(QuotientArgs),
    /// Exact cost ratio of restricting the scan to a divisor set
    Savings(SavingsArgs),
    /// Heuristically expected number of Wilson primes below a bound
    Stats(StatsArgs),
    /// Walk through the e = 18 recovery at p = 3333331, asserting every
    /// intermediate value
    ExamplePaper,
    /// Print the contents of a checkpoint file
    CheckpointInspect(InspectArgs),
}

#[derive(Args)]
struct SearchArgs {
    /// Lower bound, exclusive
    #[arg(long, default_value_t = 1)]
    min: u64,
    /// Upper bound, inclusive
    #[arg(long)]
    max: u64,
    /// Big-integer storage budget in bytes
    #[arg(long, default_value_t = u64::MAX / 2)]
    mem_bytes: u64,
    /// Divisor set: "full" or a comma-separated list like "2,4,6"
    #[arg(long, default_value = "full")]
    e_set: String,
    /// Near-miss threshold: report |w| <= (NUM/DEN)·p
    #[arg(long, value_parser = parse_ratio, default_value = "1/50000")]
    near_ratio: (u64, u64),
    /// Seed for the randomized cyclotomic steps; output is seed-stable
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads (0 = library default)
    #[arg(long, default_value_t = 0)]
    threads: usize,
    /// Write near misses to this file instead of stdout
    #[arg(long)]
    out: Option<PathBuf>,
    /// Directory for stage-boundary checkpoints
    #[arg(long)]
    checkpoint_dir: Option<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// The prime to check
    p: u64,
    /// Recomputation route to compare against the search engine
    #[arg(long, value_enum, default_value_t = Method::Sqrt)]
    method: Method,
    /// Big-integer storage budget in bytes
    #[arg(long, default_value_t = u64::MAX / 2)]
    mem_bytes: u64,
}

#[derive(Args)]
struct QuotientArgs {
    /// The prime whose quotient to print
    p: u64,
    /// Computation route
    #[arg(long, value_enum, default_value_t = Method::Tree)]
    method: Method,
    /// Big-integer storage budget in bytes
    #[arg(long, default_value_t = u64::MAX / 2)]
    mem_bytes: u64,
}

#[derive(Args)]
struct SavingsArgs {
    /// Divisor set: "full" or a comma-separated list like "2,4,6"
    #[arg(long, default_value = "full")]
    e_set: String,
}

#[derive(Args)]
struct StatsArgs {
    /// Count bound (primes strictly below it contribute)
    #[arg(long)]
    max: u64,
}

#[derive(Args)]
struct InspectArgs {
    /// Checkpoint file to read
    file: PathBuf,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Method {
    /// One modular multiplication per factor
    Naive,
    /// The production product-tree engine
    Tree,
    /// Square-root-time polynomial evaluation (p below 2^32)
    Sqrt,
}

fn parse_ratio(s: &str) -> std::result::Result<(u64, u64), String> {
    let (num, den) = s
        .split_once('/')
        .ok_or_else(|| format!("expected NUM/DEN, got {s:?}"))?;
    let num: u64 = num.trim().parse().map_err(|_| format!("bad numerator {num:?}"))?;
    let den: u64 = den.trim().parse().map_err(|_| format!("bad denominator {den:?}"))?;
    if num == 0 || den == 0 || num > den {
        return Err(format!("{num}/{den} is outside (0, 1]"));
    }
    Ok((num, den))
}

fn parse_eset(s: &str) -> Result<ESet> {
    if s == "full" {
        return Ok(ESet::full());
    }
    let values = s
        .split(',')
        .map(|t| t.trim().parse::<u64>())
        .collect::<std::result::Result<Vec<u64>, _>>()
        .map_err(|_| Error::InvalidInput(format!("bad e set {s:?}")))?;
    ESet::from_list(&values)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let ok = matches!(
                e.kind(),
                clap::error::ErrorKind::DisplayHelp | clap::error::ErrorKind::DisplayVersion
            );
            let _ = e.print();
            return ExitCode::from(if ok { 0 } else { 1 });
        }
    };
    let result = match cli.cmd {
        Cmd::Search(a) => run_search_cmd(a),
        Cmd::Verify(a) => run_verify(a),
        Cmd::Quotient(a) => run_quotient(a),
        Cmd::Savings(a) => run_savings(a),
        Cmd::Stats(a) => run_stats(a),
        Cmd::ExamplePaper => run_example(),
        Cmd::CheckpointInspect(a) => run_inspect(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(match e {
                Error::Integrity(_) | Error::Heuristic(_) => 2,
                Error::Budget { .. } => 3,
                Error::Checkpoint(_) => 4,
                _ => 1,
            })
        }
    }
}

fn run_search_cmd(a: SearchArgs) -> Result<()> {
    let mut cfg = SearchConfig::new(a.min, a.max);
    cfg.byte_budget = a.mem_bytes;
    cfg.e_set = parse_eset(&a.e_set)?;
    cfg.near_ratio = a.near_ratio;
    cfg.seed = a.seed;
    cfg.threads = a.threads;
    cfg.checkpoint_dir = a.checkpoint_dir;
    cfg.out_path = a.out.clone();
    let out = run_search(&cfg)?;

    println!("interval        ({}, {}]", a.min, a.max);
    println!("primes scanned  {}", out.primes_scanned);
    let wilson = if out.wilson_primes.is_empty() {
        "(none)".to_string()
    } else {
        let strs: Vec<String> = out.wilson_primes.iter().map(u64::to_string).collect();
        strs.join(" ")
    };
    println!("wilson primes   {wilson}");
    println!(
        "near misses     {}  (|w| <= {}/{} p)",
        out.near_misses.len(),
        a.near_ratio.0,
        a.near_ratio.1
    );
    let classes: Vec<String> = out
        .per_e
        .iter()
        .rev()
        .map(|(e, n)| format!("{e}:{n}"))
        .collect();
    println!("classes         {}", classes.join(" "));
    println!("peak tracked    {} bytes", out.peak_tracked_bytes);
    println!(
        "stage times     {} ms + {} ms + {} ms",
        out.stage1_ms, out.stage2_ms, out.stage3_ms
    );
    match &a.out {
        Some(path) => println!("wrote           {}", path.display()),
        None if !out.near_misses.is_empty() => print!("{}", render_residue_file(&out.near_misses)),
        None => {}
    }
    Ok(())
}

fn require_prime(p: u64) -> Result<()> {
    if is_prime_64(p) {
        Ok(())
    } else {
        Err(Error::InvalidInput(format!("{p} is not prime")))
    }
}

/// Residue straight from the production engine, as the search would emit it.
fn tree_record(p: u64, mem_bytes: u64) -> Result<WilsonRecord> {
    let recs = wilson_range(Interval::new(p - 1, p), mem_bytes)?;
    Ok(recs.into_iter().next().expect("one prime, one record"))
}

fn print_record(r: &WilsonRecord) {
    println!("p               {}", r.p);
    println!("w               {}", r.w);
    println!("residue         {} + {} p", r.a0(), r.a1());
}

fn sqrt_guard(p: u64) -> Result<()> {
    if p > 2 && p < (1 << 32) {
        Ok(())
    } else {
        Err(Error::InvalidInput(
            "the sqrt route needs an odd prime below 2^32".into(),
        ))
    }
}

fn run_verify(a: VerifyArgs) -> Result<()> {
    require_prime(a.p)?;
    let rec = tree_record(a.p, a.mem_bytes)?;
    print_record(&rec);
    let p2 = BigUint::from(a.p) * a.p;
    let (label, recomputed) = match a.method {
        Method::Tree => ("tree", factorial_mod(a.p - 1, &p2, a.mem_bytes)?),
        Method::Naive => ("naive", naive_factorial_mod(a.p - 1, &p2)),
        Method::Sqrt => {
            sqrt_guard(a.p)?;
            ("sqrt", sqrt_factorial_mod(a.p))
        }
    };
    if recomputed == rec.residue {
        println!("recheck         {label} route agrees");
        Ok(())
    } else {
        Err(Error::Integrity(format!(
            "{label} route disagrees for p = {}: engine {}, recheck {}",
            a.p, rec.residue, recomputed
        )))
    }
}

fn run_quotient(a: QuotientArgs) -> Result<()> {
    require_prime(a.p)?;
    let rec = match a.method {
        Method::Tree => tree_record(a.p, a.mem_bytes)?,
        Method::Naive => {
            let p2 = BigUint::from(a.p) * a.p;
            let residue = naive_factorial_mod(a.p - 1, &p2);
            let w = quotient_from_residue(a.p, &residue)?;
            WilsonRecord { p: a.p, w, residue }
        }
        Method::Sqrt => {
            sqrt_guard(a.p)?;
            let residue = sqrt_factorial_mod(a.p);
            let w = quotient_from_residue(a.p, &residue)?;
            WilsonRecord { p: a.p, w, residue }
        }
    };
    print_record(&rec);
    Ok(())
}

fn run_savings(a: SavingsArgs) -> Result<()> {
    let set = parse_eset(&a.e_set)?;
    let (q, ratio) = savings(&set);
    let values: Vec<String> = set.values().iter().map(u64::to_string).collect();
    println!("e set           {}", values.join(" "));
    println!("modulus Q       {q}");
    println!("cost ratio      {ratio}");
    println!("decimal         {:.6}", ratio.to_f64().unwrap_or(f64::NAN));
    Ok(())
}

fn run_stats(a: StatsArgs) -> Result<()> {
    if a.max < 3 {
        return Err(Error::InvalidInput("bound must be at least 3".into()));
    }
    let (sum, asym) = expected_count(a.max);
    println!("bound           {}", a.max);
    println!("expected count  {sum:.6}  (sum of 1/p over primes below the bound)");
    println!("asymptotic      {asym:.6}  (log log x + 0.2615)");
    Ok(())
}

fn run_inspect(a: InspectArgs) -> Result<()> {
    let st = load_checkpoint(&a.file, None)?;
    let hash: String = st.config_hash.iter().map(|b| format!("{b:02x}")).collect();
    println!("file            {}", a.file.display());
    println!("config hash     {hash}");
    println!("class           e = {}", st.e);
    println!("interval        ({}, {}]", st.interval.lo, st.interval.hi);
    let stage = match st.stage {
        Stage::Stage1Digit(d) => format!("stage 1, digit {d}"),
        Stage::Stage2Level(l) => format!("stage 2, level {l}"),
        Stage::Stage3 => "stage 3".to_string(),
    };
    println!("stage           {stage}");
    println!("stored values   {}", st.nums.len());
    Ok(())
}

fn ensure(cond: bool, what: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Integrity(what.into()))
    }
}

/// Base-p digits of `x`, least significant first.
fn digits(x: &BigUint, p: u64, n: usize) -> Vec<u64> {
    let big_p = BigUint::from(p);
    let mut rest = x.clone();
    (0..n)
        .map(|_| {
            let d = u64::try_from(&rest % &big_p).expect("digit fits u64");
            rest /= &big_p;
            d
        })
        .collect()
}

/// The full e = 18 recovery at p = 3333331, printing and checking every
/// intermediate: the Teichmüller lift, the correction term, the ideal
/// generator and its Stickelberger evaluation, the honest f! residue, and
/// the final rotation back to (p-1)! mod p².
fn run_example() -> Result<()> {
    const P: u64 = 3_333_331;
    const E: u64 = 18;
    let f = (P - 1) / E;
    let p1 = BigUint::from(P);
    let p2 = &p1 * &p1;
    println!("p = {P}, e = {E}, f = {f}");

    let omega0: u64 = 1_819_843;
    let one = BigUint::one();
    ensure(
        BigUint::from(omega0).modpow(&BigUint::from(E), &p1) == one,
        "omega0 is no 18th root of unity",
    )?;
    for q in [2u64, 3] {
        ensure(
            BigUint::from(omega0).modpow(&BigUint::from(E / q), &p1) != one,
            "omega0 has order below 18",
        )?;
    }
    println!("omega0 = {omega0}  (order {E} mod p)");

    let omega = teichmuller_lift(P, omega0);
    let od = digits(&omega, P, 3);
    println!("omega  = {} + {} p + {} p^2", od[0], od[1], od[2]);
    ensure(od == [1_819_843, 1_422_487, 90_367], "Teichmuller digits drifted")?;

    let c = correction_c(P, E, &omega)?;
    println!("C      = {c}");
    ensure(c == 418_399, "correction term drifted")?;

    let field = CycloField::new(E)?;
    let theta = field.from_i64(&[-4, 10, 3, 7, -10, -5]);
    let found = field.cyclo_gcd(&field.scalar(&BigInt::from(P)), &field.zeta_minus(omega0), 0)?;
    ensure(
        field.exact_div(&theta, &found).is_some() && field.exact_div(&found, &theta).is_some(),
        "gcd output is not an associate of the pinned generator",
    )?;
    let coords: Vec<i64> = [-4, 10, 3, 7, -10, -5].to_vec();
    println!("theta  = {coords:?}  (coordinates in the zeta basis)");

    let gamma = gamma_factor(P, E, &omega, &theta)?;
    let gd = digits(&gamma, P, 2);
    println!("gamma  = {} + {} p", gd[0], gd[1]);
    ensure(gd == [1_628_187, 503_367], "gamma drifted")?;

    let f_fact = factorial_mod(f, &p2, 1 << 30)?;
    let fd = digits(&f_fact, P, 2);
    println!("f!     = {} + {} p", fd[0], fd[1]);
    ensure(fd == [461_190, 275_007], "f! residue drifted")?;
    ensure(
        stage3_root_check(P, E, &f_fact, &gamma),
        "(-f!)^e gamma is no e-th root of unity",
    )?;

    // r' = (-f!)^e · gamma · (1 + pC), the pre-rotation residue.
    let neg_f = (&p2 - &f_fact) % &p2;
    let mut rp = neg_f.modpow(&BigUint::from(E), &p2);
    rp = rp * &gamma % &p2;
    rp = rp * ((&p1 * c + 1u32) % &p2) % &p2;
    let rd = digits(&rp, P, 2);
    println!("r'     = {} + {} p", rd[0], rd[1]);
    ensure(rd == [1_780_730, 2_171_988], "pre-rotation residue drifted")?;

    let ctx = Stage3Context {
        p: P,
        e: E,
        f,
        omega0,
        omega: omega.clone(),
        c,
        theta,
        gamma,
    };
    let (residue, i) = recover_wilson_trace(&f_fact, &ctx)?;
    println!("i      = {i}");
    ensure(i == 3, "matching index drifted")?;
    let rot = (&omega % &p2).modpow(&BigUint::from((E - i) % E), &p2);
    ensure(rot * &rp % &p2 == residue, "rotation identity failed")?;

    let sd = digits(&residue, P, 2);
    println!("(p-1)! = {} + {} p", sd[0], sd[1]);
    ensure(sd == [3_333_330, 27_003], "final residue drifted")?;

    let w = quotient_from_residue(P, &residue)?;
    println!("w      = {w}");
    ensure(w == 27_004, "quotient drifted")?;

    println!("all intermediates reproduced");
    Ok(())
}
