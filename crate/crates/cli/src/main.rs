mod config;

use std::fmt;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Duration;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

use relcommit_core::adversary::{
    brute_force_chsh, conditional_success, game_value_upper_bound, random_open_strategy, tightness_strategy,
    tightness_success, ChshTables,
};
use relcommit_core::analysis::{
    cond_indep_given_neq, couple_max_diagonal, frac, hiding_distance, max_fairly_binding_error, max_p0_plus_p1,
    open_game_monte_carlo, open_game_success, sim_open_epsilon, AnalysisError, Dist, OpenFamily, VerifierStrategy,
};
use relcommit_core::engine::{run_honest_session, HonestProver, Strategy, Transcript};
use relcommit_core::net::{run_prover, AbortReason, ProverOptions, SessionResult, VerifierListener};
use relcommit_core::rng::{stream_word, trial_seed};
use relcommit_core::scheme::{k_of_extr, ExtrRule};
use relcommit_core::{FieldElement, FieldSpec, OpenOutcome, Role, SchemeParams};

use config::ConfigFile;

/// Environment variable naming the directory for every file the tool writes.
const OUT_DIR_ENV: &str = "RELCOMMIT_OUT_DIR";
/// Monte-Carlo rates pass within this many binomial standard deviations.
const Z_MAX: f64 = 3.0;

#[derive(Parser)]
#[command(name = "relcommit", version, about = "Two-prover and relativistic commitments over GF(2^n)")]
struct Cli {
    /// `key=value` file supplying defaults for flags.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run honest sessions and report the failure rate.
    Run(RunArgs),
    #[command(subcommand)]
    Attack(AttackCommand),
    #[command(subcommand)]
    Analyze(AnalyzeCommand),
    /// Exhaustive CHSH game search, cached on disk by (n, poly).
    ChshSearch(CacheArgs),
    /// Re-open a transcript and compare with its recorded outcome.
    Verify {
        path: PathBuf,
    },
    /// Verifier for one networked session.
    Serve(ServeArgs),
    /// Honest prover for one networked session.
    Prove(ProveArgs),
}

#[derive(Subcommand)]
enum AttackCommand {
    /// The multi-round attack built from a CHSH game strategy.
    Tightness(TightnessArgs),
    /// Sustain honestly, then open with a uniformly random string.
    RandomOpen(RandomOpenArgs),
}

#[derive(Subcommand)]
enum AnalyzeCommand {
    /// Largest p0 + p1 over deterministic committers.
    P0p1(FieldArgs),
    /// Simultaneous-opening error.
    SimOpen(FieldArgs),
    /// Largest view distance between two committed values.
    Hiding(HidingArgs),
    /// Error of the greedy partition extractor over all commit tables.
    Extractor(ExtractorArgs),
    /// Opening strings per value for one commitment.
    K(FieldArgs),
    /// Checks of the maximal coupling on random pmf pairs.
    Coupling(CouplingArgs),
}

#[derive(Args, Clone, Default)]
struct FieldArgs {
    #[arg(long)]
    n: Option<u32>,
    /// Reduction polynomial, hex with 0x prefix.
    #[arg(long)]
    poly: Option<String>,
}

#[derive(Args, Clone, Default)]
struct SchemeArgs {
    #[command(flatten)]
    field: FieldArgs,
    /// Sustain rounds after the commit round.
    #[arg(long)]
    m: Option<u32>,
    #[arg(long)]
    domain_bits: Option<u32>,
    #[arg(long)]
    first_committer: Option<Role>,
}

#[derive(Args, Clone, Default)]
struct TrialArgs {
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    trials: Option<u64>,
}

#[derive(Args)]
struct RunArgs {
    #[command(flatten)]
    scheme: SchemeArgs,
    #[command(flatten)]
    trials: TrialArgs,
    /// Committed value, hex.
    #[arg(long)]
    value: Option<String>,
    /// Transcript of the first session.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CacheArgs {
    #[command(flatten)]
    field: FieldArgs,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

#[derive(Args)]
struct TightnessArgs {
    #[command(flatten)]
    scheme: SchemeArgs,
    #[command(flatten)]
    trials: TrialArgs,
    /// Value the attack tries to open to, hex.
    #[arg(long)]
    target: Option<String>,
    #[arg(long)]
    cache_dir: Option<PathBuf>,
}

#[derive(Args)]
struct RandomOpenArgs {
    #[command(flatten)]
    scheme: SchemeArgs,
    #[command(flatten)]
    trials: TrialArgs,
    /// Value the honest committer commits to, hex.
    #[arg(long)]
    value: Option<String>,
}

#[derive(Args)]
struct HidingArgs {
    #[command(flatten)]
    scheme: SchemeArgs,
    /// Last round in the view; defaults to m, the round before the opening.
    #[arg(long)]
    horizon: Option<u32>,
}

#[derive(Args)]
struct ExtractorArgs {
    #[command(flatten)]
    field: FieldArgs,
    /// Class mass threshold as p/q; defaults to 2^(-n/2) for even n.
    #[arg(long)]
    alpha: Option<String>,
}

#[derive(Args)]
struct CouplingArgs {
    #[command(flatten)]
    trials: TrialArgs,
}

#[derive(Args)]
struct ServeArgs {
    #[command(flatten)]
    scheme: SchemeArgs,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    deadline_ms: Option<u64>,
    #[arg(long, default_value = "127.0.0.1:7301")]
    p_listen: String,
    #[arg(long, default_value = "127.0.0.1:7302")]
    q_listen: String,
    /// Transcript of the completed session.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ProveArgs {
    #[command(flatten)]
    scheme: SchemeArgs,
    #[arg(long)]
    role: Role,
    /// Seed of the provers' joint randomness.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    value: Option<String>,
    #[arg(long)]
    connect: SocketAddr,
    /// Sleep before every response.
    #[arg(long)]
    delay_ms: Option<u64>,
}

/// Bad or missing input, reported like a flag error.
#[derive(Debug)]
struct UsageError(String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage<T>(msg: impl Into<String>) -> Result<T> {
    Err(UsageError(msg.into()).into())
}

struct Ctx {
    config: ConfigFile,
}

impl Ctx {
    fn field(&self, a: &FieldArgs) -> Result<FieldSpec> {
        let Some(n) = self.config.pick(a.n, "n")? else {
            return usage("--n is required");
        };
        let poly: Option<String> = self.config.pick(a.poly.clone(), "poly")?;
        let spec = match poly {
            Some(p) => format!("n={n} poly={p}"),
            None => format!("n={n}"),
        };
        Ok(spec.parse::<FieldSpec>()?)
    }

    fn params(&self, a: &SchemeArgs) -> Result<SchemeParams> {
        let f = self.field(&a.field)?;
        let m = self.config.pick(a.m, "m")?.unwrap_or(0);
        let k = self.config.pick(a.domain_bits, "domain_bits")?.unwrap_or(f.bits());
        let first = self.config.pick(a.first_committer, "first_committer")?.unwrap_or(Role::P);
        Ok(SchemeParams::new(f, m, k, first)?)
    }

    fn seed(&self, flag: Option<u64>) -> Result<u64> {
        match self.config.pick(flag, "seed")? {
            Some(s) => Ok(s),
            None => usage("--seed is required for randomized commands"),
        }
    }

    fn trials(&self, flag: Option<u64>, default: u64) -> Result<u64> {
        let t = self.config.pick(flag, "trials")?.unwrap_or(default);
        if t == 0 {
            return usage("trials must be at least 1");
        }
        Ok(t)
    }

    fn element(&self, f: &FieldSpec, flag: Option<String>, key: &str, default: u32) -> Result<FieldElement> {
        match self.config.pick(flag, key)? {
            Some(hex) => Ok(f.parse_element(&hex).with_context(|| format!("--{key}"))?),
            None => Ok(f.wrap(default)),
        }
    }

    fn cache_dir(&self, flag: Option<PathBuf>) -> Result<PathBuf> {
        Ok(out_path(&self.config.pick(flag, "cache_dir")?.unwrap_or_else(|| "chsh-cache".into())))
    }

    fn out(&self, flag: Option<PathBuf>, default: String) -> Result<PathBuf> {
        Ok(out_path(&self.config.pick(flag, "out")?.unwrap_or_else(|| default.into())))
    }
}

/// Relative paths land in the output directory.
fn out_path(p: &Path) -> PathBuf {
    match std::env::var_os(OUT_DIR_ENV) {
        Some(dir) if p.is_relative() => PathBuf::from(dir).join(p),
        _ => p.to_path_buf(),
    }
}

fn write_file(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    std::fs::write(path, text).with_context(|| format!("writing {}", path.display()))
}

fn pq(r: &num_rational::BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

fn to_f64(r: &num_rational::BigRational) -> f64 {
    num_traits::ToPrimitive::to_f64(r).unwrap_or(f64::NAN)
}

/// Prints one report line and returns its pass flag.
fn report(metric: &str, n: u32, value: &str, bound: &str, pass: bool, extra: &str) -> bool {
    let extra = if extra.is_empty() { String::new() } else { format!(" {extra}") };
    println!("metric={metric} n={n} value={value} bound={bound} pass={pass}{extra}");
    pass
}

fn cmd_run(ctx: &Ctx, a: RunArgs) -> Result<bool> {
    let p = ctx.params(&a.scheme)?;
    let seed = ctx.seed(a.trials.seed)?;
    let trials = ctx.trials(a.trials.trials, 1)?;
    let s = ctx.element(&p.field, a.value, "value", 0)?;
    if !p.in_domain(s.value()) {
        return usage(format!("value {} is outside the {}-bit domain", s.to_hex(), p.domain_bits));
    }
    let first = run_honest_session(&p, s, seed)?;
    let path = ctx.out(a.out, format!("transcript-n{}-m{}-seed{seed}.txt", p.field.bits(), p.m))?;
    write_file(&path, &first.to_text())?;
    let (accepted, rejected) = (0..trials)
        .into_par_iter()
        .map(|t| -> Result<(u64, u64)> {
            let out = run_honest_session(&p, s, trial_seed(seed, t))?.outcome;
            Ok((u64::from(out == OpenOutcome::Value(s.value())), u64::from(out.is_reject())))
        })
        .try_reduce(|| (0, 0), |x, y| Ok((x.0 + y.0, x.1 + y.1)))?;
    let failures = trials - accepted;
    let rate = failures as f64 / trials as f64;
    let expected = 1.0 - (1.0 - 2f64.powi(-(p.field.bits() as i32))).powi(p.m as i32 + 1);
    let sigma = (expected * (1.0 - expected) / trials as f64).sqrt();
    let z = if sigma > 0.0 { (rate - expected).abs() / sigma } else { 0.0 };
    let pass = z <= Z_MAX;
    println!(
        "run n={} m={} value={} seed={seed} trials={trials} accepted={accepted} rejected={rejected} wrong={} \
         failure_rate={rate:.5} expected={expected:.5} sigma={sigma:.5} z={z:.2} pass={pass}",
        p.field.bits(),
        p.m,
        s.to_hex(),
        failures - rejected,
    );
    println!("transcript={}", path.display());
    Ok(pass)
}

fn cache_file(dir: &Path, f: &FieldSpec) -> PathBuf {
    dir.join(format!("chsh-n{}-poly{:#x}.txt", f.bits(), f.poly()))
}

/// Cached tables for `f`, searching and storing them on a miss.
fn chsh_tables(f: &FieldSpec, dir: &Path) -> Result<ChshTables> {
    let path = cache_file(dir, f);
    if let Ok(text) = std::fs::read_to_string(&path) {
        match text.parse::<ChshTables>() {
            Ok(t) if t.field == *f => {
                eprintln!("chsh tables loaded from {}", path.display());
                return Ok(t);
            }
            _ => eprintln!("ignoring unreadable cache {}", path.display()),
        }
    }
    let t = brute_force_chsh(f)?;
    write_file(&path, &t.to_string())?;
    eprintln!("chsh tables written to {}", path.display());
    Ok(t)
}

fn chsh_bound(n: u32) -> num_rational::BigRational {
    if n % 2 == 0 {
        game_value_upper_bound(n)
    } else {
        frac(1, 1)
    }
}

fn cmd_chsh_search(ctx: &Ctx, a: CacheArgs) -> Result<bool> {
    let f = ctx.field(&a.field)?;
    let dir = ctx.cache_dir(a.cache_dir)?;
    let t = chsh_tables(&f, &dir)?;
    let bound = chsh_bound(f.bits());
    Ok(report(
        "chsh",
        f.bits(),
        &pq(&t.q),
        &pq(&bound),
        t.q <= bound,
        &format!("poly={:#x} optimal={}", f.poly(), t.optimal),
    ))
}

fn cmd_tightness(ctx: &Ctx, a: TightnessArgs) -> Result<bool> {
    let p = ctx.params(&a.scheme)?;
    let seed = ctx.seed(a.trials.seed)?;
    let sessions = ctx.trials(a.trials.trials, 1)?;
    let target = ctx.element(&p.field, a.target, "target", 0)?;
    let tables = chsh_tables(&p.field, &ctx.cache_dir(a.cache_dir)?)?;
    let (commit, open) = tightness_strategy(target, &tables);
    let est = conditional_success(&p, &commit, &open, target.value(), sessions, seed)?;
    let expected = tightness_success(&tables.q, p.m);
    let z = est.z_score(to_f64(&expected));
    Ok(report(
        "tightness",
        p.field.bits(),
        &format!("{}/{}", est.hits, est.trials),
        &pq(&expected),
        est.trials > 0 && z <= Z_MAX,
        &format!(
            "m={} target={} q={} sessions={sessions} rate={:.5} sigma={:.5} z={z:.2}",
            p.m,
            target.to_hex(),
            pq(&tables.q),
            est.p_hat(),
            est.sigma_at(to_f64(&expected))
        ),
    ))
}

fn cmd_random_open(ctx: &Ctx, a: RandomOpenArgs) -> Result<bool> {
    let p = ctx.params(&a.scheme)?;
    let seed = ctx.seed(a.trials.seed)?;
    let trials = ctx.trials(a.trials.trials, 1)?;
    let s = ctx.element(&p.field, a.value, "value", 0)?;
    let commit = HonestProver { s: s.value() };
    let family = |_t: u32| -> Box<dyn Strategy> { Box::new(random_open_strategy()) };
    let family: &OpenFamily<'_> = &family;
    let est = open_game_monte_carlo(&p, &commit, family, trials, seed)?;
    let n = p.field.bits();
    let (bound, pass, kind) = match open_game_success(&p, &commit, family) {
        Ok(exact) => {
            let z = est.z_score(to_f64(&exact));
            (exact, z <= Z_MAX, format!("exact z={z:.2}"))
        }
        Err(AnalysisError::Budget(_)) => {
            // Every nonzero-challenge session opens to a uniform string; each
            // zero challenge can add at most another 2^-n.
            let b = frac(p.m as u64 + 2, 1u64 << n);
            let pass = est.p_hat() <= to_f64(&b) + Z_MAX * est.sigma();
            (b, pass, "upper".to_string())
        }
        Err(e) => return Err(e.into()),
    };
    Ok(report(
        "random-open",
        n,
        &format!("{}/{}", est.hits, est.trials),
        &pq(&bound),
        pass,
        &format!("m={} rate={:.5} sigma={:.5} reference={kind}", p.m, est.p_hat(), est.sigma()),
    ))
}

fn cmd_analyze(ctx: &Ctx, c: AnalyzeCommand) -> Result<bool> {
    match c {
        AnalyzeCommand::P0p1(a) => {
            let f = ctx.field(&a)?;
            let v = max_p0_plus_p1(&f)?;
            let bound = frac(1, 1) + frac(1, f.order());
            Ok(report("p0p1", f.bits(), &pq(&v), &pq(&bound), v <= bound, ""))
        }
        AnalyzeCommand::SimOpen(a) => {
            let f = ctx.field(&a)?;
            let v = sim_open_epsilon(&f)?;
            let bound = frac(1, f.order());
            Ok(report("sim-open", f.bits(), &pq(&v), &pq(&bound), v <= bound, ""))
        }
        AnalyzeCommand::Hiding(a) => {
            let p = ctx.params(&a.scheme)?;
            let horizon = a.horizon.unwrap_or(p.m);
            let values = 1u32 << p.domain_bits;
            let mut worst = frac(0, 1);
            for s0 in 0..values {
                for s1 in s0 + 1..values {
                    let d = hiding_distance(&p, &VerifierStrategy::Honest, s0, s1, horizon)?;
                    if d > worst {
                        worst = d;
                    }
                }
            }
            let bound = frac(0, 1);
            Ok(report(
                "hiding",
                p.field.bits(),
                &pq(&worst),
                &pq(&bound),
                worst <= bound,
                &format!("m={} horizon={horizon}", p.m),
            ))
        }
        AnalyzeCommand::Extractor(a) => {
            let f = ctx.field(&a.field)?;
            let alpha = match a.alpha {
                Some(s) => s.parse::<num_rational::BigRational>().map_err(|e| UsageError(format!("--alpha: {e}")))?,
                None if f.bits() % 2 == 0 => frac(1, 1u64 << (f.bits() / 2)),
                None => return usage("--alpha is required for odd n"),
            };
            if alpha <= frac(0, 1) {
                return usage("--alpha must be positive");
            }
            let eps = frac(1, f.order());
            let bound = &alpha + &eps / &alpha;
            let v = max_fairly_binding_error(&f, &alpha)?;
            Ok(report("extractor", f.bits(), &pq(&v), &pq(&bound), v < bound, &format!("alpha={}", pq(&alpha))))
        }
        AnalyzeCommand::K(a) => {
            let f = ctx.field(&a)?;
            let k = k_of_extr(ExtrRule::Chsh, &f)?;
            Ok(report("k", f.bits(), &format!("{k}/1"), "1/1", k == 1, ""))
        }
        AnalyzeCommand::Coupling(a) => {
            let seed = ctx.seed(a.trials.seed)?;
            let pairs = ctx.trials(a.trials.trials, 1000)?;
            let ok = (0..pairs)
                .into_par_iter()
                .map(|i| coupling_pair_ok(trial_seed(seed, i)))
                .try_fold(|| 0u64, |acc, r| r.map(|b| acc + u64::from(b)))
                .try_reduce(|| 0, |x, y| Ok(x + y))?;
            Ok(report("coupling", 0, &format!("{ok}/{pairs}"), &format!("{pairs}/{pairs}"), ok == pairs, ""))
        }
    }
}

/// Two random pmfs on 2..=6 outcomes with weights drawn from the seed's
/// stream; checks marginals, the diagonal and off-diagonal independence.
fn coupling_pair_ok(seed: u64) -> Result<bool> {
    let word = |slot: u32| stream_word(seed, b'C', 0, slot);
    let len = 2 + word(0) % 5;
    let pmf = |offset: u32| -> Result<Dist<u32>> {
        let w: Vec<u64> = (0..len).map(|i| 1 + (word(offset + i) % 30) as u64).collect();
        let total: u64 = w.iter().sum();
        Ok(Dist::new(w.iter().enumerate().map(|(i, &x)| (i as u32, frac(x, total))))?)
    };
    let (p, q) = (pmf(1)?, pmf(1 + len)?);
    let j = couple_max_diagonal(&p, &q)?;
    let diag = p.outcomes().all(|k| j.mass(k, k) == p.mass(k).min(q.mass(k)));
    Ok(j.marginal_x() == p && j.marginal_y() == q && diag && cond_indep_given_neq(&j))
}

fn cmd_verify(path: &Path) -> Result<bool> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let t = Transcript::parse(&text).with_context(|| format!("parsing {}", path.display()))?;
    let outcome = t.verify()?;
    let f = t.params.field;
    let matched = outcome == t.outcome;
    println!("verify outcome={} recorded={} match={matched}", outcome.encode(f), t.outcome.encode(f));
    Ok(matched)
}

fn abort_name(r: AbortReason) -> &'static str {
    match r {
        AbortReason::Deadline => "deadline",
        AbortReason::Malformed => "malformed",
        AbortReason::ConnectionLost => "connection-lost",
        AbortReason::Handshake => "handshake",
    }
}

fn cmd_serve(ctx: &Ctx, a: ServeArgs) -> Result<bool> {
    let p = ctx.params(&a.scheme)?;
    let seed = ctx.seed(a.seed)?;
    let deadline = ctx.config.pick(a.deadline_ms, "deadline_ms")?.unwrap_or(50);
    if deadline == 0 {
        return usage("--deadline-ms must be positive");
    }
    let listener = VerifierListener::bind(a.p_listen.as_str(), a.q_listen.as_str())?;
    eprintln!("listening p={} q={}", listener.p_addr()?, listener.q_addr()?);
    match listener.run(&p, deadline, seed)? {
        SessionResult::Completed(t) => {
            let path = ctx.out(a.out, format!("serve-n{}-m{}-seed{seed}.txt", p.field.bits(), p.m))?;
            write_file(&path, &t.to_text())?;
            println!("serve status=completed outcome={} transcript={}", t.outcome.encode(p.field), path.display());
            Ok(true)
        }
        SessionResult::Aborted { reason, round } => {
            println!("serve status=aborted reason={} code={:#04x} round={round}", abort_name(reason), reason as u8);
            Ok(false)
        }
    }
}

fn cmd_prove(ctx: &Ctx, a: ProveArgs) -> Result<bool> {
    let p = ctx.params(&a.scheme)?;
    let seed = ctx.seed(a.seed)?;
    let s = ctx.element(&p.field, a.value, "value", 0)?;
    let opts = ProverOptions {
        delay: a.delay_ms.map(Duration::from_millis),
        ..Default::default()
    };
    let r = run_prover(a.role, &p, seed, s.value(), a.connect, &opts)?;
    match r.result {
        Ok(outcome) => {
            println!("prove role={} status=completed outcome={}", a.role, outcome.encode(p.field));
            Ok(true)
        }
        Err(reason) => {
            println!("prove role={} status=aborted reason={}", a.role, abort_name(reason));
            Ok(false)
        }
    }
}

fn dispatch(cli: Cli) -> Result<bool> {
    let config = match &cli.config {
        Some(path) => ConfigFile::load(path).map_err(|e| UsageError(format!("{e:#}")))?,
        None => ConfigFile::default(),
    };
    let ctx = Ctx { config };
    match cli.command {
        Command::Run(a) => cmd_run(&ctx, a),
        Command::Attack(AttackCommand::Tightness(a)) => cmd_tightness(&ctx, a),
        Command::Attack(AttackCommand::RandomOpen(a)) => cmd_random_open(&ctx, a),
        Command::Analyze(c) => cmd_analyze(&ctx, c),
        Command::ChshSearch(a) => cmd_chsh_search(&ctx, a),
        Command::Verify { path } => cmd_verify(&path),
        Command::Serve(a) => cmd_serve(&ctx, a),
        Command::Prove(a) => cmd_prove(&ctx, a),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(3)
        }
    }
}
