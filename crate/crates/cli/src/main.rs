//! `odp`: command-line front end for complementing, reducing, checking and
//! solving omega-regular decision processes, and for the biolab learner.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::{Duration, Instant};

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use serde_json::json;

use odp_core::automata::{canonical_lassos, intersect_nba, is_nonempty, Automaton, Kind, LassoChecker, Letter};
use odp_core::complement::{complement_uca, ComplementOpts, Pin};
use odp_core::hoa::{emit_hoa, parse_hoa};
use odp_core::mdp::{random_mdp, strategy_value_check, Mdp, MdpJson, StrategyJson};
use odp_core::odp::{solve_odp, CompileOpts, OdpJson};
use odp_core::reduce::{run_pipeline, PipelineOpts, PipelineStats};
use odp_core::rl::{build_biolab, lex_q_learn, render_policy, BiolabMap, BiolabParams, LexQConfig};
use odp_core::streett::{determinize_uca, gfm_value_test};
use odp_core::Error;

#[derive(Parser)]
#[command(name = "odp", version, about = "Omega-regular decision processes: complement, reduce, solve, learn")]
struct Cli {
    /// Seed for every randomised step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Wall-clock budget in seconds, checked while states are expanded.
    #[arg(long, global = true, default_value_t = 600)]
    timeout: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum PinArg {
    Auto,
    On,
    Off,
}

#[derive(clap::Args, Clone)]
struct ComplementFlags {
    /// Read a Büchi input as a co-Büchi automaton with the same structure.
    #[arg(long)]
    as_uca: bool,
    /// Let the second phase start from any tight ranking.
    #[arg(long)]
    no_odd_entry: bool,
    /// Pinning of the designated state to the maximal rank.
    #[arg(long, value_enum, default_value = "auto")]
    pin: PinArg,
    /// Always use the general construction.
    #[arg(long)]
    no_special_cases: bool,
    #[arg(long, default_value_t = 50_000_000)]
    max_states: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Complement a universal co-Büchi automaton into a good-for-MDPs NBA.
    Complement {
        input: PathBuf,
        /// Output HOA file; stdout if absent.
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        flags: ComplementFlags,
    },
    /// Complement and run all reductions; prints the stage counts as JSON.
    Reduce {
        input: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        #[command(flatten)]
        flags: ComplementFlags,
    },
    /// Run the reduction pipeline on every .hoa file of a directory and
    /// write one CSV row per file plus mean, stdev and max rows.
    Stats {
        dir: PathBuf,
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Worker threads; defaults to the available parallelism.
        #[arg(short, long)]
        jobs: Option<usize>,
        #[command(flatten)]
        flags: ComplementFlags,
    },
    /// Solve an ODP given as JSON: optimal value and strategy.
    Solve {
        input: PathBuf,
        #[arg(long, default_value_t = 0.99)]
        lambda: f64,
        #[arg(long, default_value_t = 1e-6)]
        epsilon: f64,
        /// Skip the reductions of the complement automaton.
        #[arg(long)]
        no_reduce: bool,
        /// Strategy JSON file.
        #[arg(short, long)]
        output: Option<PathBuf>,
    },
    /// Train the lexicographic Q-learner on a biolab map.
    Learn {
        /// Map file; the bundled map if absent.
        #[arg(long)]
        map: Option<PathBuf>,
        /// JSON training config: `{"params": {...}, "learning": {...}}`.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Overrides the number of training episodes.
        #[arg(long)]
        episodes: Option<usize>,
        /// Policy JSON file.
        #[arg(short, long)]
        output: Option<PathBuf>,
        /// Print the learned route.
        #[arg(long)]
        render: bool,
    },
    /// Compare an automaton with a claimed complement, or test whether a
    /// Büchi automaton is good for MDPs.
    Check {
        /// Universal co-Büchi automaton.
        input: PathBuf,
        /// Büchi automaton to compare with; the complement of the input if absent.
        #[arg(long)]
        against: Option<PathBuf>,
        /// Compare product values with semantic values on MDPs.
        #[arg(long)]
        gfm: bool,
        /// Number of random MDPs for --gfm.
        #[arg(long, default_value_t = 100)]
        mdps: usize,
        /// Additional MDP JSON files for --gfm.
        #[arg(long)]
        mdp: Vec<PathBuf>,
        /// Longest lasso |u| + |v| compared.
        #[arg(long, default_value_t = 6)]
        max_len: usize,
    },
    /// Print the history-tree Streett automaton of a co-Büchi automaton.
    Determinize {
        input: PathBuf,
        #[arg(long, default_value_t = 100_000)]
        max_states: usize,
    },
}

/// A failure with a category for the JSON report.
#[derive(Debug)]
struct Failure {
    kind: &'static str,
    message: String,
    file: Option<PathBuf>,
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure { kind: e.kind(), message: e.to_string(), file: None }
    }
}

impl Failure {
    fn new(kind: &'static str, message: impl Into<String>) -> Self {
        Failure { kind, message: message.into(), file: None }
    }

    fn at(mut self, file: &Path) -> Self {
        self.file.get_or_insert_with(|| file.to_path_buf());
        self
    }

    fn report(&self) {
        let mut v = json!({ "error": self.kind, "message": self.message });
        if let Some(f) = &self.file {
            v["file"] = json!(f.display().to_string());
        }
        eprintln!("{v}");
    }
}

type Outcome = Result<(), Vec<Failure>>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::from(Error::from(e)).at(path))
}

fn write_or_print(path: Option<&Path>, text: &str) -> Result<(), Failure> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| Failure::from(Error::from(e)).at(p)),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn read_hoa(path: &Path) -> Result<Automaton, Failure> {
    parse_hoa(&read(path)?).map_err(|e| Failure::from(e).at(path))
}

fn read_uca(path: &Path, as_uca: bool) -> Result<Automaton, Failure> {
    let a = read_hoa(path)?;
    match a.kind {
        Kind::Uca => Ok(a),
        _ if as_uca => Ok(a.reinterpret(Kind::Uca)),
        _ => Err(Failure::new("shape", "input is not co-Büchi; pass --as-uca to read it as one").at(path)),
    }
}

fn complement_opts(f: &ComplementFlags, deadline: Instant) -> ComplementOpts {
    ComplementOpts {
        odd_entry: !f.no_odd_entry,
        pin: match f.pin {
            PinArg::Auto => Pin::Auto,
            PinArg::On => Pin::On,
            PinArg::Off => Pin::Off,
        },
        special_cases: !f.no_special_cases,
        max_states: f.max_states,
        deadline: Some(deadline),
        ..ComplementOpts::default()
    }
}

fn to_json<T: Serialize>(v: &T) -> String {
    serde_json::to_string_pretty(v).expect("serialisable") + "\n"
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(failures) => {
            for f in &failures {
                f.report();
            }
            ExitCode::FAILURE
        }
    }
}

fn run(cli: &Cli) -> Outcome {
    let timeout = Duration::from_secs(cli.timeout);
    let deadline = Instant::now() + timeout;
    let one = |r: Result<(), Failure>| r.map_err(|f| vec![f]);
    match &cli.command {
        Command::Complement { input, output, flags } => one(cmd_complement(input, output.as_deref(), flags, deadline)),
        Command::Reduce { input, output, flags } => one(cmd_reduce(input, output.as_deref(), flags, timeout)),
        Command::Stats { dir, output, jobs, flags } => cmd_stats(dir, output.as_deref(), *jobs, flags, timeout),
        Command::Solve { input, lambda, epsilon, no_reduce, output } => {
            one(cmd_solve(input, *lambda, *epsilon, *no_reduce, output.as_deref(), deadline))
        }
        Command::Learn { map, config, episodes, output, render } => {
            one(cmd_learn(map.as_deref(), config.as_deref(), *episodes, output.as_deref(), *render, cli.seed, deadline))
        }
        Command::Check { input, against, gfm, mdps, mdp, max_len } => {
            one(cmd_check(input, against.as_deref(), *gfm, *mdps, mdp, *max_len, cli.seed, deadline))
        }
        Command::Determinize { input, max_states } => one(cmd_determinize(input, *max_states)),
    }
}

fn cmd_complement(input: &Path, output: Option<&Path>, flags: &ComplementFlags, deadline: Instant) -> Result<(), Failure> {
    let a = read_uca(input, flags.as_uca)?;
    let c = complement_uca(&a, &complement_opts(flags, deadline)).map_err(|e| Failure::from(e).at(input))?;
    write_or_print(output, &emit_hoa(&c.nba)?)?;
    if output.is_some() {
        print!("{}", to_json(&c.stats));
    }
    Ok(())
}

fn cmd_reduce(input: &Path, output: Option<&Path>, flags: &ComplementFlags, timeout: Duration) -> Result<(), Failure> {
    let a = read_uca(input, flags.as_uca)?;
    let opts = PipelineOpts { complement: complement_opts(flags, Instant::now() + timeout), timeout };
    let (c, stats) = run_pipeline(&a, &opts).map_err(|e| Failure::from(e).at(input))?;
    let Some(c) = c else {
        eprintln!("{}", to_json(&stats).trim_end());
        return Err(Failure::new("timeout", format!("pipeline stopped after {:.1} s", stats.time)).at(input));
    };
    write_or_print(output, &emit_hoa(&c.nba)?)?;
    if output.is_some() {
        print!("{}", to_json(&stats));
    }
    Ok(())
}

#[derive(Serialize)]
struct StatsRow {
    name: String,
    orig: Option<String>,
    compl: Option<String>,
    prune: Option<String>,
    lumpd: Option<String>,
    lang: Option<String>,
    lumpa: Option<String>,
    time: String,
}

fn stats_row(name: String, s: &PipelineStats) -> StatsRow {
    let f = |v: Option<usize>| v.map(|v| v.to_string());
    StatsRow {
        name,
        orig: f(Some(s.orig)),
        compl: f(s.compl),
        prune: f(s.prune),
        lumpd: f(s.lumpd),
        lang: f(s.lang),
        lumpa: f(s.lumpa),
        time: if s.timed_out { "timeout".into() } else { format!("{:.3}", s.time) },
    }
}

/// Mean, sample standard deviation and maximum of each numeric column.
fn summary_rows(stats: &[PipelineStats]) -> Vec<StatsRow> {
    let columns: [fn(&PipelineStats) -> Option<f64>; 7] = [
        |s| Some(s.orig as f64),
        |s| s.compl.map(|v| v as f64),
        |s| s.prune.map(|v| v as f64),
        |s| s.lumpd.map(|v| v as f64),
        |s| s.lang.map(|v| v as f64),
        |s| s.lumpa.map(|v| v as f64),
        |s| (!s.timed_out).then_some(s.time),
    ];
    let mut rows: Vec<Vec<Option<String>>> = vec![Vec::new(); 3];
    for col in columns {
        let xs: Vec<f64> = stats.iter().filter_map(col).collect();
        if xs.is_empty() {
            rows.iter_mut().for_each(|r| r.push(None));
            continue;
        }
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = if xs.len() > 1 { xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0) } else { 0.0 };
        let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for (r, v) in rows.iter_mut().zip([mean, var.sqrt(), max]) {
            r.push(Some(format!("{v:.3}")));
        }
    }
    ["mean", "stdev", "max"]
        .into_iter()
        .zip(rows)
        .map(|(name, mut r)| {
            let time = r.pop().flatten().unwrap_or_default();
            let mut it = r.into_iter();
            let mut next = || it.next().flatten();
            StatsRow {
                name: name.into(),
                orig: next(),
                compl: next(),
                prune: next(),
                lumpd: next(),
                lang: next(),
                lumpa: next(),
                time,
            }
        })
        .collect()
}

fn cmd_stats(dir: &Path, output: Option<&Path>, jobs: Option<usize>, flags: &ComplementFlags, timeout: Duration) -> Outcome {
    let mut files: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| vec![Failure::from(Error::from(e)).at(dir)])?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x == "hoa"))
        .collect();
    files.sort();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(jobs.unwrap_or(0))
        .build()
        .map_err(|e| vec![Failure::new("io", e.to_string())])?;
    let results: Vec<(String, Result<PipelineStats, Failure>)> = pool.install(|| {
        files
            .par_iter()
            .map(|path| {
                let name = path.file_stem().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default();
                let run = || -> Result<PipelineStats, Failure> {
                    let a = read_uca(path, true)?;
                    let opts = PipelineOpts { complement: complement_opts(flags, Instant::now() + timeout), timeout };
                    let (_, stats) = run_pipeline(&a, &opts).map_err(|e| Failure::from(e).at(path))?;
                    Ok(stats)
                };
                (name, run())
            })
            .collect()
    });
    let mut w = csv::Writer::from_writer(Vec::new());
    let mut ok = Vec::new();
    let mut failures = Vec::new();
    for (name, r) in results {
        let row = match r {
            Ok(s) => {
                let row = stats_row(name, &s);
                ok.push(s);
                row
            }
            Err(f) => {
                let row = StatsRow {
                    name,
                    orig: None,
                    compl: None,
                    prune: None,
                    lumpd: None,
                    lang: None,
                    lumpa: None,
                    time: format!("error: {}", f.kind),
                };
                failures.push(f);
                row
            }
        };
        w.serialize(row).map_err(|e| vec![Failure::new("io", e.to_string())])?;
    }
    if ok.is_empty() {
        if failures.is_empty() {
            w.write_record(["name", "orig", "compl", "prune", "lumpd", "lang", "lumpa", "time"])
                .map_err(|e| vec![Failure::new("io", e.to_string())])?;
        }
    } else {
        for row in summary_rows(&ok) {
            w.serialize(row).map_err(|e| vec![Failure::new("io", e.to_string())])?;
        }
    }
    let bytes = w.into_inner().map_err(|e| vec![Failure::new("io", e.to_string())])?;
    write_or_print(output, &String::from_utf8_lossy(&bytes)).map_err(|f| vec![f])?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(failures)
    }
}

fn cmd_solve(
    input: &Path,
    lambda: f64,
    eps: f64,
    no_reduce: bool,
    output: Option<&Path>,
    deadline: Instant,
) -> Result<(), Failure> {
    let d = OdpJson::parse(&read(input)?, input.parent()).map_err(|e| Failure::from(e).at(input))?;
    let opts = CompileOpts {
        complement: ComplementOpts { deadline: Some(deadline), ..ComplementOpts::default() },
        reduce: !no_reduce,
        ..CompileOpts::default()
    };
    let sol = solve_odp(&d, lambda, eps, &opts).map_err(|e| Failure::from(e).at(input))?;
    let m = &sol.product.mdp;
    let (sat, value) = strategy_value_check(m, sol.strategy(), lambda)?;
    let strategy = StrategyJson::new(m, sol.strategy(), |p| Some((sol.describe(p).0, sol.memory(p))));
    let report = json!({
        "value": sol.value,
        "strategy_value": value,
        "satisfaction": sat,
        "switch_step": sol.lex.switch_step,
        "product_states": m.num_states(),
        "automaton_states": sol.promise_mdp.automaton.num_states(),
    });
    match output {
        Some(p) => {
            write_or_print(Some(p), &to_json(&strategy))?;
            print!("{}", to_json(&report));
        }
        None => print!("{}", to_json(&json!({ "report": report, "strategy": strategy }))),
    }
    Ok(())
}

/// Training config file of `odp learn`.
#[derive(Default, Serialize, Deserialize)]
#[serde(default)]
struct LearnConfig {
    params: BiolabParams,
    learning: Option<LexQConfig>,
}

fn cmd_learn(
    map: Option<&Path>,
    config: Option<&Path>,
    episodes: Option<usize>,
    output: Option<&Path>,
    render: bool,
    seed: u64,
    deadline: Instant,
) -> Result<(), Failure> {
    let map = match map {
        Some(p) => BiolabMap::parse(&read(p)?).map_err(|e| Failure::from(e).at(p))?,
        None => BiolabMap::default_map(),
    };
    let cfg: LearnConfig = match config {
        Some(p) => serde_json::from_str(&read(p)?).map_err(|e| Failure::from(Error::from(e)).at(p))?,
        None => LearnConfig::default(),
    };
    let bio = build_biolab(&map, &cfg.params)?;
    let params = &cfg.params;
    let mut learning = cfg.learning.unwrap_or_default();
    learning.lambda = params.lambda;
    learning.zeta = params.zeta;
    learning.tau_lex = params.tau_lex;
    learning.seed = seed;
    learning.deadline = Some(deadline);
    if let Some(n) = episodes {
        learning.episodes = n;
    }
    let sol = solve_odp(&bio.odp, params.lambda, 1e-6, &CompileOpts::default())?;
    let m = &sol.product.mdp;
    let start = Instant::now();
    let tables = lex_q_learn(m, &learning)?;
    let strategy = tables.strategy();
    let (sat, value) = strategy_value_check(m, &strategy, params.lambda)?;
    let policy = StrategyJson::new(m, &strategy, |p| Some((sol.describe(p).0, sol.memory(p))));
    let report = json!({
        "episodes": learning.episodes,
        "seconds": start.elapsed().as_secs_f64(),
        "satisfaction": sat,
        "value": value,
        "optimal_value": sol.value,
        "switch_step": tables.switch_step,
        "rollout_accept_rate": tables.score.accept_rate,
        "rollout_return": tables.score.mean_return,
        "product_states": m.num_states(),
    });
    match output {
        Some(p) => {
            write_or_print(Some(p), &to_json(&policy))?;
            print!("{}", to_json(&report));
        }
        None => print!("{}", to_json(&json!({ "report": report, "policy": policy }))),
    }
    if render {
        print!("{}", render_policy(&bio, &sol, Some(&strategy)));
    }
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn cmd_check(
    input: &Path,
    against: Option<&Path>,
    gfm: bool,
    mdps: usize,
    mdp_files: &[PathBuf],
    max_len: usize,
    seed: u64,
    deadline: Instant,
) -> Result<(), Failure> {
    let a = read_uca(input, true)?;
    let c = match against {
        Some(p) => {
            let c = read_hoa(p)?;
            if c.kind == Kind::Uca {
                return Err(Failure::new("shape", "the automaton to compare with must be Büchi").at(p));
            }
            c
        }
        None => {
            let opts = ComplementOpts { deadline: Some(deadline), ..ComplementOpts::default() };
            complement_uca(&a, &opts).map_err(|e| Failure::from(e).at(input))?.nba
        }
    };
    if !c.alphabet.same_letters(&a.alphabet) {
        return Err(Failure::new("alphabet_mismatch", "the automata use different alphabets"));
    }
    let mut pass = true;
    let mut report = serde_json::Map::new();
    if !gfm || against.is_some() {
        let letters: Vec<Letter> = a.alphabet.letters().collect();
        let mut in_a = LassoChecker::new(&a);
        let mut in_c = LassoChecker::new(&c);
        let mut checked = 0usize;
        let mut mismatch = None;
        for w in canonical_lassos(&letters, max_len) {
            checked += 1;
            let (x, y) = (in_a.member_uca(&w), in_c.member_nba(&w));
            if x != y {
                mismatch = Some(json!({ "prefix": w.prefix, "cycle": w.cycle, "input": x, "against": y }));
                break;
            }
        }
        let disjoint = !is_nonempty(&intersect_nba(&c, &a.reinterpret(Kind::Nba))?);
        pass &= mismatch.is_none() && disjoint;
        report.insert("lassos".into(), json!(checked));
        report.insert("mismatch".into(), mismatch.unwrap_or(serde_json::Value::Null));
        report.insert("disjoint_from_input_as_nba".into(), json!(disjoint));
    }
    if gfm {
        let mut models: Vec<(String, Mdp)> = Vec::new();
        for p in mdp_files {
            models.push((p.display().to_string(), MdpJson::parse(&read(p)?).map_err(|e| Failure::from(e).at(p))?));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for i in 0..mdps {
            let n = rng.gen_range(1..=6);
            models.push((format!("random {i}"), random_mdp(&mut rng, n, a.alphabet.num_aps(), 2)));
        }
        let mut results = Vec::new();
        for (name, m) in &models {
            if Instant::now() >= deadline {
                return Err(Failure::from(Error::Timeout { built: results.len() }));
            }
            let v = gfm_value_test(&c, &a, m, 1_000_000).map_err(|e| Failure::from(e).at(input))?;
            pass &= v.agree;
            results.push(json!({ "mdp": name, "agree": v.agree, "product": v.product, "semantic": v.semantic }));
        }
        let failing: Vec<_> = results.iter().filter(|r| r["agree"] == json!(false)).cloned().collect();
        report.insert("mdps".into(), json!(results.len()));
        report.insert("disagreements".into(), json!(failing));
    }
    report.insert("result".into(), json!(if pass { "PASS" } else { "FAIL" }));
    print!("{}", to_json(&report));
    if pass {
        Ok(())
    } else {
        Err(Failure::new("check_failed", "the automata disagree").at(input))
    }
}

fn cmd_determinize(input: &Path, max_states: usize) -> Result<(), Failure> {
    let a = read_uca(input, true)?;
    let d = determinize_uca(&a, max_states).map_err(|e| Failure::from(e).at(input))?;
    print!("{}", d.dump());
    Ok(())
}
