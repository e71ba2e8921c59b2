use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use num_rational::BigRational;
use serde_json::{json, Value};

use linfam::extremal::{self, Mode};
use linfam::families;
use linfam::fourier;
use linfam::matspace::{self, CountReport};
use linfam::power::QPow;
use linfam::{io, spectra, verify, Budget, Error, Field};

#[derive(Parser)]
#[command(name = "linfam", version, about = "Exact computations on families of linear maps over finite fields")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    cmd: Command,
}

#[derive(Args)]
struct Global {
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Worker threads (default: all cores). Outputs do not depend on this.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[arg(long, global = true, default_value_t = 1 << 28)]
    budget_items: u64,
    #[arg(long, global = true, default_value_t = 600)]
    budget_seconds: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Closed-form counts.
    Count(CountArgs),
    /// Eigenvalues of the rank-generated Cayley graph Γ_t.
    Spectrum {
        #[arg(long)]
        q: u32,
        #[arg(long)]
        m: usize,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        t: usize,
    },
    /// Fourier transform of a function file, with optional inequality checks.
    Fourier {
        #[arg(long)]
        input: PathBuf,
        /// Also check the level-d hypercontractive inequality with exponent k (even).
        #[arg(long, requires = "d")]
        k: Option<u32>,
        #[arg(long)]
        d: Option<usize>,
        /// Check projection norms for an (s, C)-quasiregular input.
        #[arg(long, requires = "c")]
        s: Option<usize>,
        #[arg(long)]
        c: Option<String>,
    },
    /// Regularity decomposition of a family file.
    Regularity {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        s: usize,
        /// Capture threshold (rational); defaults to q^{-4 min(m,n) r + r^2}.
        #[arg(long)]
        eps: Option<String>,
        #[arg(long)]
        junta_out: PathBuf,
        #[arg(long)]
        log_out: PathBuf,
    },
    /// Restrict a family until it is (s, alpha)-quasiregular.
    Bootstrap {
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        s: usize,
        #[arg(long)]
        alpha: String,
        #[arg(long, default_value_t = 64)]
        max_steps: usize,
    },
    /// Extremal constructions and checks.
    Extremal {
        #[arg(long, value_enum)]
        check: ExtremalCheck,
        #[arg(long)]
        q: u32,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 1)]
        t: usize,
        /// For `bound`: exhaustive, sample or spectral.
        #[arg(long, default_value = "exhaustive")]
        mode: String,
    },
    /// Built-in self-check suites.
    Verify {
        #[arg(long, default_value = "all")]
        suite: String,
    },
}

#[derive(Args)]
struct CountArgs {
    #[arg(long, value_enum)]
    kind: CountKind,
    #[arg(long)]
    q: u32,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    d: Option<usize>,
    #[arg(long)]
    t: Option<usize>,
    #[arg(long)]
    k: Option<usize>,
}

#[derive(Clone, Copy, ValueEnum)]
enum CountKind {
    /// Subspaces of dimension d in F_q^m.
    Gauss,
    /// Rank-d matrices in M(n, m).
    Rank,
    /// Size of the canonical t-intersecting family in GL(n, q).
    Mqt,
    /// Density of maps F^m -> F^n with kernel of dimension t.
    Phi,
    /// d-subspaces of F_q^n meeting a fixed k-subspace trivially.
    Avoid,
}

#[derive(Clone, Copy, ValueEnum)]
enum ExtremalCheck {
    Canonical,
    Singer,
    Sl,
    Derangement,
    Bound,
}

enum Failure {
    Usage(String),
    Budget(String),
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        match e {
            Error::BudgetExceeded(_) => Failure::Budget(e.to_string()),
            Error::StepBudgetExhausted(ref b) => {
                println!("{}", json!({"certified": false, "bootstrap": b.to_json()}));
                Failure::Budget(e.to_string())
            }
            _ => Failure::Usage(e.to_string()),
        }
    }
}

type Out = Result<bool, Failure>;

fn need(v: Option<usize>, name: &str) -> Result<usize, Failure> {
    v.ok_or_else(|| Failure::Usage(format!("--{name} is required for this kind")))
}

fn rational(s: &str) -> Result<BigRational, Failure> {
    BigRational::from_str(s).map_err(|_| Failure::Usage(format!("not a rational: {s:?}")))
}

fn read(path: &PathBuf) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn write(path: &PathBuf, text: &str) -> Result<(), Failure> {
    fs::write(path, text).map_err(|e| Failure::Usage(format!("{}: {e}", path.display())))
}

fn emit(v: &Value) {
    println!("{}", serde_json::to_string_pretty(v).expect("json"));
}

fn cmd_count(a: &CountArgs) -> Out {
    let q = a.q;
    Field::gf(q)?;
    let report = match a.kind {
        CountKind::Gauss => {
            let (m, d) = (need(a.m, "m")?, need(a.d, "d")?);
            let v = matspace::gaussian_binomial(m, d, q)?;
            CountReport::new("gauss", &[("q", q as usize), ("m", m), ("d", d)], &v)
        }
        CountKind::Rank => {
            let (n, m, d) = (need(a.n, "n")?, need(a.m, "m")?, need(a.d, "d")?);
            let v = matspace::count_rank_d(n, m, d, q)?;
            CountReport::new("rank", &[("q", q as usize), ("n", n), ("m", m), ("d", d)], &v)
        }
        CountKind::Mqt => {
            let (n, t) = (need(a.n, "n")?, need(a.t, "t")?);
            let v = matspace::m_qt(n, q, t)?;
            CountReport::new("mqt", &[("q", q as usize), ("n", n), ("t", t)], &v)
        }
        CountKind::Phi => {
            let (m, n, t) = (need(a.m, "m")?, need(a.n, "n")?, need(a.t, "t")?);
            let v = matspace::phi(m, n, t, q)?;
            CountReport::new("phi", &[("q", q as usize), ("m", m), ("n", n), ("t", t)], &v)
        }
        CountKind::Avoid => {
            let (n, k, d) = (need(a.n, "n")?, need(a.k, "k")?, need(a.d, "d")?);
            let v = matspace::count_subspaces_avoiding(n, k, d, q)?;
            CountReport::new("avoid", &[("q", q as usize), ("n", n), ("k", k), ("d", d)], &v)
        }
    };
    emit(&serde_json::to_value(&report).expect("json"));
    Ok(true)
}

fn cmd_fourier(input: &PathBuf, k: Option<u32>, d: Option<usize>, s: Option<usize>, c: Option<&str>) -> Out {
    let f = io::parse_function(&read(input)?)?;
    let spec = fourier::fast_transform(&f)?;
    let (n, m) = f.shape();
    let mut out = json!({
        "q": f.field().q(),
        "n": n,
        "m": m,
        "degree": fourier::degree(&f)?,
        "coefficients": spec.to_json(),
    });
    let mut ok = true;
    if let (Some(k), Some(d)) = (k, d) {
        if k % 2 == 1 || d == 0 || d > n.min(m) {
            return Err(Failure::Usage(format!("need even k and 1 <= d <= {}", n.min(m))));
        }
        let rep = fourier::verify_hypercontractive(&f, d, k)?;
        ok &= rep.holds;
        out["hypercontractive"] = serde_json::to_value(&rep).expect("json");
    }
    if let (Some(s), Some(c)) = (s, c) {
        let rep = fourier::projection_norm_check(&f, s, &rational(c)?)?;
        ok &= rep.holds;
        out["projection"] = serde_json::to_value(&rep).expect("json");
    }
    emit(&out);
    Ok(ok)
}

fn cmd_regularity(family: &PathBuf, r: usize, s: usize, eps: Option<&str>, junta_out: &PathBuf, log_out: &PathBuf, budget: &Budget) -> Out {
    let f = io::parse_family(&read(family)?)?;
    let q = f.field().q();
    let eps = eps.map(|e| rational(e).map(|x| QPow::rational(q, x))).transpose()?;
    let (junta, log) = families::regularity_decompose(&f, r, s, eps, budget)?;
    write(junta_out, &io::write_junta(&junta))?;
    write(log_out, &serde_json::to_string_pretty(&log.to_json()).expect("json"))?;
    let check = families::verify_decomposition(&f, &junta, &log, budget)?;
    emit(&json!({
        "components": junta.components().len(),
        "nodes": log.nodes.len(),
        "verification": check,
        "holds": check.holds(),
    }));
    Ok(check.holds())
}

fn cmd_bootstrap(family: &PathBuf, s: usize, alpha: &str, max_steps: usize, budget: &Budget) -> Out {
    let f = io::parse_family(&read(family)?)?;
    let boot = families::bootstrap_quasiregular(&f, s, &rational(alpha)?, max_steps, budget)?;
    emit(&boot.to_json());
    Ok(boot.certified)
}

fn cmd_extremal(check: ExtremalCheck, q: u32, n: usize, t: usize, mode: &str, seed: u64, budget: &Budget) -> Out {
    let field = Field::gf(q)?;
    let (v, ok) = match check {
        ExtremalCheck::Canonical => {
            let rep = extremal::canonical_size_report(&field, n, t, budget)?;
            (rep.to_json(), rep.passed())
        }
        ExtremalCheck::Singer => {
            let rep = extremal::verify_singer(&field, n, budget)?;
            let singer = extremal::singer_cycle(&field, n, budget)?;
            let mut v = serde_json::to_value(&rep).expect("json");
            v["modulus"] = json!(singer.modulus);
            v["generator"] = json!(singer.generator);
            (v, rep.holds())
        }
        ExtremalCheck::Sl => {
            let (fam, rep) = extremal::sl_family(&field, n, t, budget)?;
            let mut v = rep.to_json();
            v["size"] = Value::from(fam.len());
            (v, rep.passed())
        }
        ExtremalCheck::Derangement => {
            let tau = extremal::sample_tau(&field, n, t, seed)?;
            let rep = extremal::derangement_check(&field, n, t, &tau, budget)?;
            let mut v = serde_json::to_value(&rep).expect("json");
            v["seed"] = Value::from(seed);
            v["tau"] = Value::from(tau.to_literal());
            (v, rep.holds())
        }
        ExtremalCheck::Bound => {
            let mode: Mode = mode.parse()?;
            let rep = extremal::verify_extremal_bound(&field, n, t, mode, budget)?;
            (rep.to_json(), rep.passed())
        }
    };
    emit(&v);
    Ok(ok)
}

fn cmd_verify(suite: &str, seed: u64, budget: &Budget) -> Out {
    let checks = verify::run_suite(suite, seed, budget)?;
    for c in &checks {
        println!("{}", serde_json::to_string(c).expect("json"));
    }
    let failed = checks.iter().filter(|c| !c.pass).count();
    println!("{}", json!({"suite": suite, "seed": seed, "checks": checks.len(), "failed": failed, "pass": failed == 0}));
    Ok(failed == 0)
}

fn run(cli: Cli) -> Out {
    let g = &cli.global;
    let budget = Budget::new(g.budget_items, Some(g.budget_seconds));
    if let Some(t) = g.threads {
        if t == 0 {
            return Err(Failure::Usage("--threads must be positive".into()));
        }
        // Only fails if a pool already exists, which cannot happen this early.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(t).build_global();
    }
    match &cli.cmd {
        Command::Count(a) => cmd_count(a),
        Command::Spectrum { q, m, n, t } => {
            let sp = spectra::spectrum(&Field::gf(*q)?, *m, *n, *t, &budget)?;
            emit(&sp.to_json());
            Ok(sp.trace_check())
        }
        Command::Fourier { input, k, d, s, c } => cmd_fourier(input, *k, *d, *s, c.as_deref()),
        Command::Regularity { family, r, s, eps, junta_out, log_out } => {
            cmd_regularity(family, *r, *s, eps.as_deref(), junta_out, log_out, &budget)
        }
        Command::Bootstrap { family, s, alpha, max_steps } => cmd_bootstrap(family, *s, alpha, *max_steps, &budget),
        Command::Extremal { check, q, n, t, mode } => cmd_extremal(*check, *q, *n, *t, mode, g.seed, &budget),
        Command::Verify { suite } => cmd_verify(suite, g.seed, &budget),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(Failure::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(Failure::Budget(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}
