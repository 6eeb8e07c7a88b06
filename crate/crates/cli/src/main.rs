mod instance;
mod report;

use std::fs;
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::atomic::{AtomicUsize, Ordering};

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::Rational64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::json;

use coind_core::autf2::Endo;
use coind_core::family::{build_family, run_claims, transversal_relators};
use coind_core::groups::{
    cocycle_chain_check, cocycle_law_check, AutF2Closure, Instance, IntegerCosets, WreathCosets,
};
use coind_core::irs::{
    coinduce_value, distinguish_free_product, distinguish_wreath, eval_basic, nonatomicity_verdict,
    parse_rational, ParseIrs,
};
use coind_core::smallcanc::{
    dehn_reduce, non_membership_certificate, parse_relator_file, verify_dehn_trace, SymmetrizedSet,
};
use coind_core::words::{CyclicWord, Word};

use instance::{parse_instance, Inst};
use report::{to_value, Check, Clock, Report};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Io(io::Error),
}

macro_rules! usage_from {
    ($($t:ty),*) => {$(
        impl From<$t> for CliError {
            fn from(e: $t) -> Self {
                CliError::Usage(e.to_string())
            }
        }
    )*};
}

usage_from!(
    coind_core::words::WordError,
    coind_core::autf2::AutError,
    coind_core::family::FamilyError,
    coind_core::smallcanc::ScError,
    coind_core::groups::GroupError,
    coind_core::irs::IrsError
);

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        CliError::Io(e)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser, Serialize)]
#[command(name = "coind", version, about = "Exact verification runs for co-induced IRS and small cancellation")]
struct Cli {
    /// Worker threads for pair and grid maps.
    #[arg(long, global = true, env = "COIND_JOBS")]
    jobs: Option<usize>,
    /// Seed for randomized suites.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Write the report here instead of stdout.
    #[arg(long, global = true)]
    #[serde(skip)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "lowercase")]
enum Command {
    /// Free-group words.
    #[command(subcommand)]
    Words(WordsCmd),
    /// Automorphisms of F2.
    #[command(subcommand)]
    Auto(AutoCmd),
    /// The test-word family.
    #[command(subcommand)]
    Family(FamilyCmd),
    /// Small cancellation checks and Dehn reduction.
    #[command(subcommand)]
    Sc(ScCmd),
    /// Length and cancellation claims on the family.
    #[command(subcommand)]
    Claims(ClaimsCmd),
    /// Invariant random subgroups and co-induction.
    #[command(subcommand)]
    Irs(IrsCmd),
    /// Cocycle identities of the coset action.
    #[command(subcommand)]
    Cocycle(CocycleCmd),
    /// Chain and closure witnesses.
    #[command(subcommand)]
    Groups(GroupsCmd),
}

#[derive(Debug, Subcommand, Serialize)]
enum WordsCmd {
    /// Free and cyclic reduction of a word.
    Reduce {
        word: String,
        #[arg(long, default_value_t = 2)]
        rank: u32,
    },
}

#[derive(Debug, Subcommand, Serialize)]
enum AutoCmd {
    /// Applies an automorphism given by provenance, e.g. "xi phi psi".
    Apply {
        #[arg(long)]
        auto: String,
        word: String,
    },
}

#[derive(Debug, Subcommand, Serialize)]
enum FamilyCmd {
    /// The sixteen family words with their lengths.
    Build {
        #[arg(long, default_value_t = 102)]
        n: usize,
    },
}

#[derive(Debug, Args, Serialize)]
struct TruncArgs {
    #[arg(long, default_value_t = 102)]
    n: usize,
    /// Truncation length of the transversal.
    #[arg(long = "L", default_value_t = 3)]
    max_len: usize,
}

#[derive(Debug, Subcommand, Serialize)]
enum ScCmd {
    /// Piece ratios over all distinct pairs of the symmetrized set.
    Check {
        #[command(flatten)]
        trunc: TruncArgs,
        #[arg(long, default_value = "1/6")]
        lambda: String,
        /// Relators in the words text format, one per line; replaces the
        /// transversal set.
        #[arg(long)]
        relators: Option<PathBuf>,
    },
    /// Dehn reduction against the non-identity transversal relators.
    Dehn {
        #[command(flatten)]
        trunc: TruncArgs,
        word: String,
    },
    /// Non-membership certificate for `w` (or the given word).
    Certify {
        #[command(flatten)]
        trunc: TruncArgs,
        word: Option<String>,
    },
}

#[derive(Debug, Subcommand, Serialize)]
enum ClaimsCmd {
    Run {
        #[command(flatten)]
        trunc: TruncArgs,
        /// Exponent bound for the sign tables.
        #[arg(long, default_value_t = 3)]
        k: usize,
        /// Claims to run (repeatable); all when omitted.
        #[arg(long)]
        claim: Vec<usize>,
    },
}

#[derive(Debug, Args, Serialize)]
struct IrsArgs {
    #[arg(long)]
    instance: String,
    #[arg(long)]
    theta: String,
}

#[derive(Debug, Subcommand, Serialize)]
enum IrsCmd {
    /// θ(N_F); elements of F separated by `;`.
    Eval {
        #[command(flatten)]
        irs: IrsArgs,
        #[arg(long, default_value = "")]
        set: String,
    },
    /// The co-induced value CIND(θ)(N_F).
    Coinduce {
        #[command(flatten)]
        irs: IrsArgs,
        #[arg(long, default_value = "")]
        set: String,
    },
    /// Atomicity verdict for the co-induced IRS, tested at γ.
    Nonatomic {
        #[command(flatten)]
        irs: IrsArgs,
        #[arg(long)]
        gamma: Option<String>,
    },
    /// Co-induced values over a parameter grid, checked pairwise distinct.
    Grid {
        #[arg(long)]
        instance: String,
        /// Comma separated rationals.
        #[arg(long)]
        grid: String,
        /// Weak-mixing variant of the free-product family.
        #[arg(long)]
        mixing: bool,
    },
}

#[derive(Debug, Subcommand, Serialize)]
enum CocycleCmd {
    /// Cocycle law, plus the chain rule for instances with nested levels.
    Check {
        #[arg(long)]
        instance: String,
        #[arg(long, default_value_t = 1000)]
        samples: usize,
    },
}

#[derive(Debug, Subcommand, Serialize)]
enum GroupsCmd {
    /// Chain witness `t_j⁻¹γ₀t_j ∉ Γ̄_k`, or the non-membership witness for autf2.
    Witness {
        #[arg(long)]
        instance: String,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 0)]
        j: usize,
    },
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Words(WordsCmd::Reduce { .. }) => "words reduce",
        Command::Auto(AutoCmd::Apply { .. }) => "auto apply",
        Command::Family(FamilyCmd::Build { .. }) => "family build",
        Command::Sc(ScCmd::Check { .. }) => "sc check",
        Command::Sc(ScCmd::Dehn { .. }) => "sc dehn",
        Command::Sc(ScCmd::Certify { .. }) => "sc certify",
        Command::Claims(ClaimsCmd::Run { .. }) => "claims run",
        Command::Irs(IrsCmd::Eval { .. }) => "irs eval",
        Command::Irs(IrsCmd::Coinduce { .. }) => "irs coinduce",
        Command::Irs(IrsCmd::Nonatomic { .. }) => "irs nonatomic",
        Command::Irs(IrsCmd::Grid { .. }) => "irs grid",
        Command::Cocycle(CocycleCmd::Check { .. }) => "cocycle check",
        Command::Groups(GroupsCmd::Witness { .. }) => "groups witness",
    }
}

fn progress(label: &'static str) -> impl Fn(usize, usize) + Sync {
    let last = AtomicUsize::new(usize::MAX);
    move |done, total| {
        let pct = if total == 0 { 100 } else { done * 100 / total };
        let step = pct / 10;
        if last.swap(step, Ordering::Relaxed) != step {
            eprintln!("[{label}] {pct}% ({done}/{total})");
        }
    }
}

fn words_reduce(word: &str, rank: u32) -> Result<Vec<Check>, CliError> {
    let w = Word::parse(word, rank)?;
    let c = CyclicWord::new(&w);
    Ok(vec![Check::new(
        "reduce",
        true,
        json!({
            "input": word,
            "reduced": w.to_string(),
            "length": w.len(),
            "cyclic_canonical": c.to_string(),
            "cyclic_length": c.len(),
        }),
    )])
}

fn auto_apply(auto: &str, word: &str) -> Result<Vec<Check>, CliError> {
    let e = Endo::parse(auto)?;
    let w = Word::parse(word, 2)?;
    let img = e.apply(&w)?;
    Ok(vec![Check::new(
        "apply",
        true,
        json!({
            "auto": e.provenance_string(),
            "image_a": e.image_a().to_string(),
            "image_b": e.image_b().to_string(),
            "image": img.to_string(),
            "length": img.len(),
            "cyclic_length": img.cyclic_length(),
        }),
    )])
}

fn family(n: usize) -> Result<Vec<Check>, CliError> {
    Ok(build_family(n)?
        .iter()
        .map(|z| {
            Check::new(
                z.name(),
                true,
                json!({ "word": z.word.to_string(), "length": z.word.len(), "cyclic_length": z.word.cyclic_length() }),
            )
        })
        .collect())
}

fn parse_lambda(s: &str) -> Result<Rational64, CliError> {
    let bad = || CliError::Usage(format!("bad λ {s:?}"));
    let (p, q) = s.split_once('/').unwrap_or((s, "1"));
    let (p, q): (i64, i64) = (p.trim().parse().map_err(|_| bad())?, q.trim().parse().map_err(|_| bad())?);
    if q <= 0 || p <= 0 {
        return Err(bad());
    }
    Ok(Rational64::new(p, q))
}

fn sc_check(t: &TruncArgs, lambda: &str, relators: Option<&PathBuf>) -> Result<Vec<Check>, CliError> {
    let lambda = parse_lambda(lambda)?;
    let rels = match relators {
        Some(p) => parse_relator_file(&fs::read_to_string(p)?, 2)?,
        None => transversal_relators(t.n, t.max_len)?.into_iter().map(|(_, r)| r).collect(),
    };
    let set = SymmetrizedSet::new(&rels)?;
    eprintln!("[sc check] {} relators, {} classes", rels.len(), set.len());
    let rep = set.check_with_progress(lambda, &progress("sc check"));
    let details = json!({
        "relators": rels.len(),
        "classes": set.len(),
        "pairs_checked": rep.pairs_checked,
        "lambda": lambda.to_string(),
        "max_ratio": rep.max_ratio().to_string(),
        "self_overlaps": rep.self_overlaps,
    });
    let mut c = Check::new("small-cancellation", rep.pass, details);
    if let Some(w) = &rep.worst {
        c = c.with_witness(w);
    }
    Ok(vec![c])
}

fn closure(t: &TruncArgs) -> Result<AutF2Closure, CliError> {
    eprintln!("[closure] building n={} L={} and certifying C'(1/6)", t.n, t.max_len);
    Ok(AutF2Closure::new(t.n, t.max_len, true)?)
}

fn sc_dehn(t: &TruncArgs, word: &str) -> Result<Vec<Check>, CliError> {
    let c = closure(t)?;
    let z = Word::parse(word, 2)?;
    let res = dehn_reduce(&z, c.set())?;
    let valid = verify_dehn_trace(&z, &res, c.set());
    Ok(vec![
        Check::new("trace", valid, json!({ "steps": res.steps.len() })),
        Check::new(
            "membership",
            true,
            json!({
                "word": z.to_string(),
                "in_closure": res.reduced_to_identity(),
                "result": res.result.to_string(),
                "heuristic": res.heuristic,
            }),
        ),
    ])
}

fn sc_certify(t: &TruncArgs, word: Option<&str>) -> Result<Vec<Check>, CliError> {
    let c = closure(t)?;
    let certified = c.certification().is_some_and(|r| r.pass);
    let check = match word {
        None => {
            let wit = c.witness()?;
            Check::new("certificate", wit.verified(), &wit)
        }
        Some(s) => {
            let z = Word::parse(s, 2)?;
            let out = non_membership_certificate(&z, c.set())?;
            Check::new("certificate", certified && out.is_certificate(), json!({ "word": z.to_string(), "outcome": out }))
        }
    };
    let sc = c.certification().map(|r| json!({ "pass": r.pass, "max_ratio": r.max_ratio().to_string() }));
    Ok(vec![Check::new("full-set-c'(1/6)", certified, sc), check])
}

/// Violations listed per claim before truncation.
const SHOWN_VIOLATIONS: usize = 50;

fn claims(t: &TruncArgs, k: usize, which: &[usize]) -> Result<Vec<Check>, CliError> {
    eprintln!("[claims run] n={} L={} k={}", t.n, t.max_len, k);
    let rep = run_claims(t.n, t.max_len, k, which)?;
    Ok(rep
        .claims
        .iter()
        .map(|c| {
            let details = json!({
                "pairs_checked": c.pairs_checked,
                "identical_pairs_skipped": c.identical_pairs_skipped,
                "structural_checks": c.structural_checks,
                "violation_count": c.violations.len(),
                "violations": &c.violations[..c.violations.len().min(SHOWN_VIOLATIONS)],
                "structural_failures": &c.structural_failures,
                "table": &c.table,
            });
            let mut check = Check::new(format!("claim-{}", c.claim_id), c.pass(), details);
            if let Some(v) = c.violations.first() {
                check = check.with_witness(v);
            }
            check
        })
        .collect())
}

fn parse_set<I: Instance>(inst: &I, s: &str) -> Result<Vec<I::Elem>, CliError> {
    s.split(';').map(str::trim).filter(|t| !t.is_empty()).map(|t| Ok(inst.parse_elem(t)?)).collect()
}

enum IrsOp<'a> {
    Eval(&'a str),
    Coinduce(&'a str),
    Nonatomic(Option<&'a str>),
}

fn irs_op<I: ParseIrs>(inst: &I, theta: &str, op: IrsOp) -> Result<Vec<Check>, CliError> {
    let th = inst.parse_irs(theta)?;
    let base = json!({ "instance": inst.name(), "theta": th.to_string() });
    let check = match op {
        IrsOp::Eval(set) => {
            let f = parse_set(inst, set)?;
            let v = eval_basic(inst, &th, &f)?;
            Check::new("eval", true, json!({ "irs": base, "set": set, "value": v.to_string() }))
        }
        IrsOp::Coinduce(set) => {
            let f = parse_set(inst, set)?;
            let v = coinduce_value(inst, &th, &f)?;
            Check::new("coinduce", true, json!({ "irs": base, "set": set, "value": v }))
        }
        IrsOp::Nonatomic(gamma) => {
            let g = match gamma {
                Some(s) => inst.parse_elem(s)?,
                None => inst.default_gamma0(),
            };
            let v = nonatomicity_verdict(inst, &th, &g)?;
            Check::new("nonatomic", true, json!({ "irs": base, "gamma": g.to_string(), "verdict": v }))
        }
    };
    Ok(vec![check])
}

fn irs(cmd: &IrsCmd) -> Result<Vec<Check>, CliError> {
    let (args, op) = match cmd {
        IrsCmd::Eval { irs, set } => (irs, IrsOp::Eval(set)),
        IrsCmd::Coinduce { irs, set } => (irs, IrsOp::Coinduce(set)),
        IrsCmd::Nonatomic { irs, gamma } => (irs, IrsOp::Nonatomic(gamma.as_deref())),
        IrsCmd::Grid { instance, grid, mixing } => return irs_grid(instance, grid, *mixing),
    };
    match parse_instance(&args.instance)? {
        Inst::Wreath(i) => irs_op(&i, &args.theta, op),
        Inst::FreeProd(i) => irs_op(&i, &args.theta, op),
        Inst::IntChain(i) => irs_op(&i, &args.theta, op),
        _ => Err(CliError::Usage(format!("{} carries no IRS", args.instance))),
    }
}

fn irs_grid(instance: &str, grid: &str, mixing: bool) -> Result<Vec<Check>, CliError> {
    let grid: Vec<_> = grid.split(',').map(parse_rational).collect::<Result<_, _>>()?;
    let table = match parse_instance(instance)? {
        Inst::Wreath(i) if !mixing => distinguish_wreath(&i, &grid)?,
        Inst::FreeProd(i) => distinguish_free_product(&i, &grid, mixing)?,
        _ => return Err(CliError::Usage(format!("no distinguished family on {instance}"))),
    };
    Ok(vec![Check::new("pairwise-distinct", table.pairwise_distinct, &table)])
}

fn cocycle(instance: &str, samples: usize, seed: u64) -> Result<Vec<Check>, CliError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let law = |name: &str, r: coind_core::groups::CocycleReport| {
        let mut c = Check::new(name, r.pass(), json!({ "samples": r.samples, "failures": r.failures.len() }));
        if let Some(f) = r.failures.first() {
            c = c.with_witness(f);
        }
        c
    };
    Ok(match parse_instance(instance)? {
        Inst::Wreath(i) => {
            let h = i.h();
            let outer = WreathCosets::new(h, 1, 2, i.order())?;
            let inner = WreathCosets::new(h, 2, 0, i.order())?;
            vec![
                law("cocycle", cocycle_law_check(&i, samples, &mut rng)),
                law("chain", cocycle_chain_check(&outer, &inner, samples, &mut rng)),
            ]
        }
        Inst::IntChain(i) if !i.is_plane() => {
            let outer = i.cosets()?;
            let d = i.d() as i64;
            let inner = IntegerCosets::new(d, 2 * d)?;
            vec![
                law("cocycle", cocycle_law_check(&i, samples, &mut rng)),
                law("chain", cocycle_chain_check(&outer, &inner, samples, &mut rng)),
            ]
        }
        Inst::IntChain(i) => vec![law("cocycle", cocycle_law_check(&i, samples, &mut rng))],
        Inst::FreeProd(i) => vec![law("cocycle", cocycle_law_check(&i, samples, &mut rng))],
        _ => return Err(CliError::Usage(format!("no coset space for {instance}"))),
    })
}

fn groups_witness(instance: &str, k: usize, j: usize) -> Result<Vec<Check>, CliError> {
    Ok(match parse_instance(instance)? {
        Inst::Bs(b) => {
            let closure = b.closure()?;
            let v = b.chain_witness_verify(k, j)?;
            vec![Check::new("closure", true, &closure), Check::new("chain-witness", v.verified, &v)]
        }
        Inst::Wreath(i) => {
            let v = i.chain_witness_verify(&i.default_gamma0(), k, j)?;
            vec![Check::new("chain-witness", v.verified, &v)]
        }
        Inst::AutF2 { n, max_len } => {
            let c = closure(&TruncArgs { n, max_len })?;
            let w = c.witness()?;
            vec![Check::new("non-membership", w.verified(), &w)]
        }
        _ => return Err(CliError::Usage(format!("no chain witness for {instance}"))),
    })
}

fn dispatch(cli: &Cli) -> Result<Vec<Check>, CliError> {
    match &cli.command {
        Command::Words(WordsCmd::Reduce { word, rank }) => words_reduce(word, *rank),
        Command::Auto(AutoCmd::Apply { auto, word }) => auto_apply(auto, word),
        Command::Family(FamilyCmd::Build { n }) => family(*n),
        Command::Sc(ScCmd::Check { trunc, lambda, relators }) => sc_check(trunc, lambda, relators.as_ref()),
        Command::Sc(ScCmd::Dehn { trunc, word }) => sc_dehn(trunc, word),
        Command::Sc(ScCmd::Certify { trunc, word }) => sc_certify(trunc, word.as_deref()),
        Command::Claims(ClaimsCmd::Run { trunc, k, claim }) => claims(trunc, *k, claim),
        Command::Irs(c) => irs(c),
        Command::Cocycle(CocycleCmd::Check { instance, samples }) => cocycle(instance, *samples, cli.seed),
        Command::Groups(GroupsCmd::Witness { instance, k, j }) => groups_witness(instance, *k, *j),
    }
}

fn run(cli: &Cli) -> Result<bool, CliError> {
    if let Some(j) = cli.jobs {
        if j == 0 {
            return Err(CliError::Usage("--jobs must be positive".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(j)
            .build_global()
            .map_err(|e| CliError::Usage(e.to_string()))?;
    }
    let clock = Clock::start();
    let checks = dispatch(cli)?;
    let report = Report::new(command_name(&cli.command).to_string(), to_value(cli), checks, &clock);
    let mut out: Box<dyn Write> = match &cli.out {
        Some(p) => Box::new(io::BufWriter::new(fs::File::create(p)?)),
        None => Box::new(io::stdout().lock()),
    };
    match cli.format {
        Format::Json => report.write_json(&mut out)?,
        Format::Csv => report.write_csv(&mut out)?,
    }
    out.flush()?;
    Ok(report.summary.pass)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(CliError::Usage(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(CliError::Io(e)) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
