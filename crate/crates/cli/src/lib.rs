//! File-based front end for the reachability solvers.
//!
//! Every subcommand writes its results under `--out` together with a
//! `manifest.json` that records the argument vector, the parsed
//! configuration, seeds, tolerances and versions. `replay` reruns a
//! manifest into a fresh directory.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, bail, Context, Result};
use avreach_core::avg::{evaluate_policy_gain, extract_policy, solve_gain, value_iteration_reach, Reward};
use avreach_core::grid::{build_grid, parse_rect, GridMap, GridSpec};
use avreach_core::model::{load_model, policy_from_json, policy_to_json, save_model, PolicyFile};
use avreach_core::reach::{
    check_closable, constrained_reach, infeasible_region, min_avoid_hit, p_domain_with, reach_avoid, values_csv,
    Feasibility,
};
use avreach_core::sim::{estimate_hitting, sample_rollouts, trajectories_csv, HittingSpec};
use avreach_core::transform::{make_absorbing, IndicatorReward};
use avreach_core::{Distribution, Error as CoreError, Model, StateSet};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

pub const EXIT_OK: i32 = 0;
pub const EXIT_INFEASIBLE: i32 = 1;
pub const EXIT_INPUT: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "avreach",
    version,
    about = "Reachability of finite MDPs via average-reward linear programs"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    /// Check a model file and report every violation.
    Validate(ValidateArgs),
    /// Maximal reach probabilities, level sets and the escape set of a target.
    PDomain(PDomainArgs),
    /// Maximal probability of reaching the target before the avoid set.
    ReachAvoid(ReachAvoidArgs),
    /// Maximal reach probability subject to a bound on hitting the avoid set first.
    Constrained(ConstrainedArgs),
    /// Seeded Monte Carlo estimate of the hitting probabilities of a policy.
    Simulate(SimulateArgs),
    /// Wind-grid models.
    #[command(subcommand)]
    Grid(GridCommand),
    /// Cross-check the LP solvers against value iteration on one instance.
    Oracle(OracleArgs),
    /// Rerun the command recorded in a manifest into a new directory.
    Replay(ReplayArgs),
}

#[derive(Debug, Subcommand, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum GridCommand {
    /// Write a grid model, its cell sidecar and its target and obstacle sets.
    Gen(GridGenArgs),
}

#[derive(Debug, Args, Serialize)]
pub struct Output {
    /// Output directory, created if missing.
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args, Serialize)]
pub struct ModelInput {
    /// Model JSON file.
    #[arg(long)]
    pub model: PathBuf,
    /// Grid sidecar; enables `r0:r1,c0:c1` sets and `row,col,value` CSV.
    #[arg(long)]
    pub grid: Option<PathBuf>,
}

#[derive(Debug, Args, Serialize)]
pub struct ValidateArgs {
    #[arg(long)]
    pub model: PathBuf,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args, Serialize)]
pub struct PDomainArgs {
    #[command(flatten)]
    pub input: ModelInput,
    /// Target set: labels or ids (`4`, `1,2`), a JSON file, or grid rectangles.
    #[arg(long)]
    pub target: String,
    /// Probability levels p for the sets {V* ≥ p}.
    #[arg(long, value_delimiter = ',')]
    pub p: Vec<f64>,
    /// Values at or below this count as zero when forming the escape set.
    #[arg(long, default_value_t = avreach_core::reach::ZERO_THRESHOLD)]
    pub zero_threshold: f64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args, Serialize)]
pub struct ReachAvoidArgs {
    #[command(flatten)]
    pub input: ModelInput,
    #[arg(long)]
    pub target: String,
    /// Avoid set, same forms as the target.
    #[arg(long)]
    pub avoid: String,
    /// Initial distribution: `uniform` or a JSON file (array of weights or label → weight).
    #[arg(long, default_value = "uniform")]
    pub nu: String,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args, Serialize)]
pub struct ConstrainedArgs {
    #[command(flatten)]
    pub input: ModelInput,
    #[arg(long)]
    pub target: String,
    #[arg(long)]
    pub avoid: String,
    #[arg(long, default_value = "uniform")]
    pub nu: String,
    /// Bound on the probability of hitting the avoid set before the target.
    #[arg(long)]
    pub eps: f64,
    /// Also write the per-state least hitting mass and the infeasible region.
    #[arg(long)]
    pub region: bool,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args, Serialize)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub input: ModelInput,
    /// Policy JSON, stationary or two-phase.
    #[arg(long)]
    pub policy: PathBuf,
    #[arg(long)]
    pub target: String,
    #[arg(long, default_value = "")]
    pub avoid: String,
    #[arg(long, default_value = "uniform")]
    pub nu: String,
    /// Number of rollouts.
    #[arg(long, default_value_t = 100_000)]
    pub n: u64,
    #[arg(long, default_value_t = 100)]
    pub horizon: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Run the rollouts on one thread (the estimate is identical either way).
    #[arg(long)]
    pub serial: bool,
    /// Write the first k rollouts to trajectories.csv.
    #[arg(long, default_value_t = 0)]
    pub trajectories: u64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Clone, Copy, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Domain,
    ReachAvoid,
    Constrained,
    Custom,
}

#[derive(Debug, Args, Serialize)]
pub struct GridGenArgs {
    #[arg(long, value_enum, default_value = "custom")]
    pub preset: Preset,
    #[arg(long)]
    pub rows: Option<usize>,
    #[arg(long)]
    pub cols: Option<usize>,
    /// Wind strength in [0, 1].
    #[arg(long)]
    pub wind: Option<f64>,
    /// Target rectangle `r0:r1,c0:c1` (inclusive, repeatable).
    #[arg(long)]
    pub target: Vec<String>,
    /// Obstacle rectangle (repeatable).
    #[arg(long)]
    pub obstacle: Vec<String>,
    /// Make the target cells absorbing.
    #[arg(long)]
    pub close_targets: bool,
    /// Let the top row move like any other row.
    #[arg(long)]
    pub open_top: bool,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args, Serialize)]
pub struct OracleArgs {
    #[command(flatten)]
    pub input: ModelInput,
    #[arg(long)]
    pub target: String,
    #[arg(long, default_value = "")]
    pub avoid: String,
    /// Largest deviation accepted before exiting with a numerical failure.
    #[arg(long, default_value_t = 1e-6)]
    pub tol: f64,
    #[command(flatten)]
    pub output: Output,
}

#[derive(Debug, Args, Serialize)]
pub struct ReplayArgs {
    /// A manifest.json written by an earlier run.
    pub manifest: PathBuf,
    #[command(flatten)]
    pub output: Output,
}

/// Parse `argv` (program name first), run, print diagnostics to stderr,
/// and return the exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let argv: Vec<OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let recorded: Vec<String> = argv.iter().skip(1).map(|a| a.to_string_lossy().into_owned()).collect();
    match dispatch(&cli.command, &recorded) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            exit_code(&e)
        }
    }
}

/// 3 for solver failures, 2 for everything else (bad files, flags, sets).
pub fn exit_code(e: &anyhow::Error) -> i32 {
    match e.chain().find_map(|c| c.downcast_ref::<CoreError>()) {
        Some(CoreError::Numerical(_) | CoreError::Lp(_) | CoreError::Infeasible) => EXIT_NUMERICAL,
        _ => EXIT_INPUT,
    }
}

fn dispatch(cmd: &Command, argv: &[String]) -> Result<i32> {
    match cmd {
        Command::Validate(a) => validate(a, argv),
        Command::PDomain(a) => p_domain_cmd(a, argv),
        Command::ReachAvoid(a) => reach_avoid_cmd(a, argv),
        Command::Constrained(a) => constrained_cmd(a, argv),
        Command::Simulate(a) => simulate(a, argv),
        Command::Grid(GridCommand::Gen(a)) => grid_gen(a, argv),
        Command::Oracle(a) => oracle(a, argv),
        Command::Replay(a) => replay(a),
    }
}

/// Collects output files and writes them together with the manifest.
struct Run<'a> {
    dir: &'a Path,
    subcommand: &'static str,
    argv: &'a [String],
    config: Value,
    seeds: Value,
    tolerances: Value,
    files: Vec<(String, String)>,
}

impl<'a> Run<'a> {
    fn new(out: &'a Output, subcommand: &'static str, argv: &'a [String], config: &impl Serialize) -> Result<Self> {
        Ok(Run {
            dir: &out.out,
            subcommand,
            argv,
            config: serde_json::to_value(config)?,
            seeds: json!({}),
            tolerances: default_tolerances(),
            files: Vec::new(),
        })
    }

    fn add(&mut self, name: &str, text: String) {
        self.files.push((name.to_string(), text));
    }

    fn add_json(&mut self, name: &str, value: &impl Serialize) -> Result<()> {
        self.add(name, avreach_core::fmt::to_json(value)?);
        Ok(())
    }

    fn finish(self) -> Result<()> {
        fs::create_dir_all(self.dir).with_context(|| format!("creating {}", self.dir.display()))?;
        let outputs: Vec<&str> = self.files.iter().map(|f| f.0.as_str()).collect();
        let manifest = json!({
            "tool": "avreach",
            "versions": {
                "cli": env!("CARGO_PKG_VERSION"),
                "core": avreach_core::VERSION,
            },
            "subcommand": self.subcommand,
            "argv": self.argv,
            "config": self.config,
            "seeds": self.seeds,
            "tolerances": self.tolerances,
            "outputs": outputs,
        });
        for (name, text) in &self.files {
            let p = self.dir.join(name);
            fs::write(&p, text).with_context(|| format!("writing {}", p.display()))?;
        }
        fs::write(self.dir.join("manifest.json"), avreach_core::fmt::to_json(&manifest)?)?;
        Ok(())
    }
}

fn default_tolerances() -> Value {
    use avreach_core::{avg, reach};
    json!({
        "probability": avreach_core::PROB_TOL,
        "zero_threshold": reach::ZERO_THRESHOLD,
        "level": reach::LEVEL_TOL,
        "slackness": reach::SLACKNESS_TOL,
        "policy": reach::POLICY_TOL,
        "mass": avg::MASS_TOL,
        "certificate": avg::CHECK_TOL,
    })
}

fn read(path: &Path) -> Result<String> {
    fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))
}

fn read_model(path: &Path) -> Result<Model> {
    load_model(&read(path)?).with_context(|| format!("loading model {}", path.display()))
}

struct Loaded {
    model: Model,
    grid: Option<GridMap>,
}

fn load(input: &ModelInput) -> Result<Loaded> {
    let model = read_model(&input.model)?;
    let grid = match &input.grid {
        Some(p) => {
            let g = GridMap::from_sidecar_json(&read(p)?).with_context(|| format!("loading grid {}", p.display()))?;
            if g.n_states() != model.n_states() {
                bail!(
                    "grid sidecar has {} cells but the model has {} states",
                    g.n_states(),
                    model.n_states()
                );
            }
            Some(g)
        }
        None => None,
    };
    Ok(Loaded { model, grid })
}

/// A set given inline (`4`, `1,2`), as a JSON file of labels or ids, or
/// (with a grid sidecar) as `;`-separated rectangles `r0:r1,c0:c1`.
pub fn parse_set(spec: &str, m: &Model, grid: Option<&GridMap>) -> Result<StateSet> {
    let spec = spec.trim();
    if spec.is_empty() {
        return Ok(StateSet::new());
    }
    let path = Path::new(spec);
    if path.is_file() {
        let items: Vec<Value> =
            serde_json::from_str(&read(path)?).with_context(|| format!("parsing set file {spec}"))?;
        return items
            .iter()
            .map(|v| match v {
                Value::Number(k) => k
                    .as_u64()
                    .map(|k| k as usize)
                    .filter(|&k| k < m.n_states())
                    .ok_or_else(|| anyhow!("state id {k} out of range")),
                Value::String(s) => m.find_state(s).ok_or_else(|| anyhow!("unknown state {s:?}")),
                other => Err(anyhow!("set entries must be labels or ids, found {other}")),
            })
            .collect();
    }
    if spec.contains(':') {
        let g = grid.ok_or_else(|| anyhow!("rectangle {spec:?} needs --grid"))?;
        let mut out = StateSet::new();
        for r in spec.split(';') {
            for (row, col) in parse_rect(r)? {
                if row >= g.rows || col >= g.cols {
                    bail!("cell ({row},{col}) is outside the {}x{} grid", g.rows, g.cols);
                }
                out.insert(g.state((row, col)));
            }
        }
        return Ok(out);
    }
    spec.split(',')
        .map(|s| {
            m.find_state(s.trim())
                .ok_or_else(|| anyhow!("unknown state {:?}", s.trim()))
        })
        .collect()
}

/// `uniform`, or a JSON file holding an array of weights or an object
/// from state labels to weights.
pub fn parse_nu(spec: &str, m: &Model) -> Result<Distribution> {
    let n = m.n_states();
    if spec == "uniform" {
        return Ok(Distribution::uniform(n));
    }
    let v: Value = serde_json::from_str(&read(Path::new(spec))?).with_context(|| format!("parsing {spec}"))?;
    let weights = match v {
        Value::Array(items) => {
            if items.len() != n {
                bail!(
                    "initial distribution has {} entries, the model {} states",
                    items.len(),
                    n
                );
            }
            items
                .iter()
                .map(|w| w.as_f64().ok_or_else(|| anyhow!("weight {w} is not a number")))
                .collect::<Result<Vec<f64>>>()?
        }
        Value::Object(map) => {
            let mut w = vec![0.0; n];
            for (k, x) in &map {
                let s = m.find_state(k).ok_or_else(|| anyhow!("unknown state {k:?}"))?;
                w[s] = x.as_f64().ok_or_else(|| anyhow!("weight {x} is not a number"))?;
            }
            w
        }
        _ => bail!("initial distribution must be an array or an object"),
    };
    Ok(Distribution::new(weights)?)
}

fn add_values(run: &mut Run, m: &Model, grid: Option<&GridMap>, values: &[f64]) {
    run.add("values.csv", values_csv(m, values));
    if let Some(g) = grid {
        run.add("values_grid.csv", g.values_csv(values));
    }
}

fn validate(a: &ValidateArgs, argv: &[String]) -> Result<i32> {
    let mut run = Run::new(&a.output, "validate", argv, a)?;
    let (report, code) = match load_model(&read(&a.model)?) {
        Ok(m) => {
            let r = json!({
                "valid": true,
                "n_states": m.n_states(),
                "n_actions": m.n_actions(),
                "n_pairs": m.n_pairs(),
                "violations": [],
            });
            println!("valid: {} states, {} state-action pairs", m.n_states(), m.n_pairs());
            (r, EXIT_OK)
        }
        Err(CoreError::Invalid(rep)) => {
            eprintln!("invalid model: {rep}");
            (json!({ "valid": false, "violations": rep.violations }), EXIT_INPUT)
        }
        Err(e) => {
            eprintln!("unreadable model: {e}");
            (json!({ "valid": false, "error": e.to_string() }), EXIT_INPUT)
        }
    };
    run.add_json("validation.json", &report)?;
    run.finish()?;
    Ok(code)
}

fn p_domain_cmd(a: &PDomainArgs, argv: &[String]) -> Result<i32> {
    let Loaded { model: m, grid } = load(&a.input)?;
    let target = parse_set(&a.target, &m, grid.as_ref())?;
    if let Some(&(x, _)) = check_closable(&m, &target)?.iter().find(|e| !e.1) {
        eprintln!(
            "warning: no action keeps state {} inside the target; values refer to the model with the target made absorbing",
            m.state_label(x)
        );
    }
    let r = p_domain_with(&m, &target, &a.p, a.zero_threshold)?;
    let mut run = Run::new(&a.output, "p-domain", argv, a)?;
    run.tolerances["zero_threshold"] = json!(a.zero_threshold);
    run.add("result.json", r.to_json(&m));
    run.add(
        "policy.json",
        policy_to_json(&m, &PolicyFile::Stationary(r.policy.clone())),
    );
    add_values(&mut run, &m, grid.as_ref(), &r.v_star);
    run.finish()?;
    println!("domain {} states, escape set {} states", r.domain.len(), r.escape.len());
    Ok(EXIT_OK)
}

fn reach_avoid_cmd(a: &ReachAvoidArgs, argv: &[String]) -> Result<i32> {
    let Loaded { model: m, grid } = load(&a.input)?;
    let target = parse_set(&a.target, &m, grid.as_ref())?;
    let avoid = parse_set(&a.avoid, &m, grid.as_ref())?;
    let nu = parse_nu(&a.nu, &m)?;
    let r = reach_avoid(&m, &target, &avoid, &nu)?;
    let mut run = Run::new(&a.output, "reach-avoid", argv, a)?;
    run.add("result.json", r.to_json(&m));
    run.add(
        "policy.json",
        policy_to_json(&m, &PolicyFile::Stationary(r.policy.clone())),
    );
    add_values(&mut run, &m, grid.as_ref(), &r.v_tilde);
    run.finish()?;
    println!("value {}", avreach_core::fmt::sig17(r.value));
    Ok(EXIT_OK)
}

fn constrained_cmd(a: &ConstrainedArgs, argv: &[String]) -> Result<i32> {
    let Loaded { model: m, grid } = load(&a.input)?;
    let target = parse_set(&a.target, &m, grid.as_ref())?;
    let avoid = parse_set(&a.avoid, &m, grid.as_ref())?;
    let nu = parse_nu(&a.nu, &m)?;
    if !(a.eps >= 0.0) {
        bail!("--eps must be nonnegative");
    }
    let r = constrained_reach(&m, &target, &avoid, &nu, a.eps)?;
    let mut run = Run::new(&a.output, "constrained", argv, a)?;
    run.add("result.json", r.to_json(&m));
    if let Some(tp) = &r.policy {
        run.add("policy.json", policy_to_json(&m, &PolicyFile::TwoPhase(tp.clone())));
    }
    if a.region {
        let w = min_avoid_hit(&m, &target, &avoid)?;
        let region = infeasible_region(&m, &target, &avoid, a.eps)?;
        let labels: Vec<String> = region.iter().map(|x| m.state_label(x)).collect();
        run.add_json("infeasible_region.json", &labels)?;
        run.add("min_hit.csv", values_csv(&m, &w));
        if let Some(g) = &grid {
            run.add("min_hit_grid.csv", g.values_csv(&w));
        }
    }
    run.finish()?;
    let s = avreach_core::fmt::sig17;
    match r.status {
        Feasibility::Feasible => {
            println!(
                "FEASIBLE value {} lambda_star {}",
                s(r.value.unwrap_or(f64::NAN)),
                s(r.lambda_star.unwrap_or(f64::NAN))
            );
            Ok(EXIT_OK)
        }
        Feasibility::Infeasible => {
            println!("INFEASIBLE");
            Ok(EXIT_INFEASIBLE)
        }
    }
}

fn simulate(a: &SimulateArgs, argv: &[String]) -> Result<i32> {
    let Loaded { model: m, grid } = load(&a.input)?;
    let target = parse_set(&a.target, &m, grid.as_ref())?;
    let avoid = parse_set(&a.avoid, &m, grid.as_ref())?;
    let nu = parse_nu(&a.nu, &m)?;
    let policy =
        policy_from_json(&m, &read(&a.policy)?).with_context(|| format!("loading policy {}", a.policy.display()))?;
    let spec = HittingSpec {
        target: &target,
        avoid: &avoid,
        n: a.n,
        horizon: a.horizon,
        seed: a.seed,
        parallel: !a.serial,
    };
    let est = estimate_hitting(&m, &policy, &nu, &spec)?;
    let mut run = Run::new(&a.output, "simulate", argv, a)?;
    run.seeds = json!({ "rollouts": a.seed, "streams": "one per trajectory index" });
    run.add_json("estimate.json", &est)?;
    if a.trajectories > 0 {
        let trajs = sample_rollouts(&m, &policy, &nu, &spec, a.trajectories.min(a.n))?;
        run.add("trajectories.csv", trajectories_csv(&m, &trajs));
    }
    run.finish()?;
    let s = avreach_core::fmt::sig17;
    println!("p_hat_A {} p_hat_B {} (n = {})", s(est.p_hat_a), s(est.p_hat_b), est.n);
    Ok(EXIT_OK)
}

fn grid_gen(a: &GridGenArgs, argv: &[String]) -> Result<i32> {
    let mut spec = match a.preset {
        Preset::Domain => GridSpec::domain_preset(),
        Preset::ReachAvoid => GridSpec::reach_avoid_preset(),
        Preset::Constrained => GridSpec::constrained_preset(),
        Preset::Custom => GridSpec::new(
            a.rows.ok_or_else(|| anyhow!("--rows is required without a preset"))?,
            a.cols.ok_or_else(|| anyhow!("--cols is required without a preset"))?,
            a.wind.unwrap_or(0.2),
        ),
    };
    spec.rows = a.rows.unwrap_or(spec.rows);
    spec.cols = a.cols.unwrap_or(spec.cols);
    spec.wind_strength = a.wind.unwrap_or(spec.wind_strength);
    if !a.target.is_empty() {
        spec.target_cells = a
            .target
            .iter()
            .map(|r| parse_rect(r))
            .collect::<Result<Vec<_>, _>>()?
            .concat();
    }
    if !a.obstacle.is_empty() {
        spec.obstacle_cells = a
            .obstacle
            .iter()
            .map(|r| parse_rect(r))
            .collect::<Result<Vec<_>, _>>()?
            .concat();
    }
    spec.close_targets |= a.close_targets;
    spec.absorbing_top &= !a.open_top;
    let (m, map) = build_grid(&spec)?;
    let mut run = Run::new(&a.output, "grid gen", argv, a)?;
    run.add("model.json", save_model(&m));
    run.add("grid.json", map.sidecar_json());
    run.add_json("target.json", &spec.target().to_vec())?;
    run.add_json("obstacles.json", &spec.obstacles().to_vec())?;
    run.add_json("spec.json", &spec)?;
    run.finish()?;
    println!("{}x{} grid, {} states", spec.rows, spec.cols, m.n_states());
    Ok(EXIT_OK)
}

fn oracle(a: &OracleArgs, argv: &[String]) -> Result<i32> {
    let Loaded { model: m, grid } = load(&a.input)?;
    let target = parse_set(&a.target, &m, grid.as_ref())?;
    let avoid = parse_set(&a.avoid, &m, grid.as_ref())?;
    let n = m.n_states();
    let max_dev = |x: &[f64], y: &[f64]| x.iter().zip(y).map(|(p, q)| (p - q).abs()).fold(0.0, f64::max);

    // reach-avoid LP against value iteration on the kernel with both sets absorbing
    let ra = reach_avoid(&m, &target, &avoid, &Distribution::uniform(n))?;
    let absorbed = make_absorbing(&m, &[&target, &avoid])?;
    let vi = value_iteration_reach(&absorbed, &target, 1e-13)?;
    let dev_ra = max_dev(&ra.v_tilde, &vi);

    // the extracted policy attains the LP values
    let ones = vec![1.0; n];
    let sol = solve_gain(&absorbed, &Reward::indicator(n, &target), &ones, None)?;
    let pi = extract_policy(&absorbed, &sol);
    let g = evaluate_policy_gain(&absorbed, &IndicatorReward::indicator(target.clone()), &pi, &ones)?;
    let dev_policy = max_dev(&g.per_state, &sol.v);

    let worst = dev_ra.max(dev_policy);
    let report = json!({
        "reach_avoid_vs_value_iteration": dev_ra,
        "extracted_policy_vs_lp": dev_policy,
        "duality_gap": sol.duality_gap,
        "max_deviation": worst,
        "tolerance": a.tol,
        "pass": worst <= a.tol,
    });
    let mut run = Run::new(&a.output, "oracle", argv, a)?;
    run.tolerances["oracle"] = json!(a.tol);
    run.add_json("oracle.json", &report)?;
    run.finish()?;
    println!("max deviation {}", avreach_core::fmt::sig17(worst));
    if worst > a.tol {
        eprintln!("deviation exceeds the tolerance {}", a.tol);
        return Ok(EXIT_NUMERICAL);
    }
    Ok(EXIT_OK)
}

fn replay(a: &ReplayArgs) -> Result<i32> {
    let v: Value = serde_json::from_str(&read(&a.manifest)?).context("parsing manifest")?;
    let argv: Vec<String> = v["argv"]
        .as_array()
        .ok_or_else(|| anyhow!("manifest has no argv"))?
        .iter()
        .map(|s| {
            s.as_str()
                .map(str::to_string)
                .ok_or_else(|| anyhow!("argv entries must be strings"))
        })
        .collect::<Result<_>>()?;
    if argv.first().map(String::as_str) == Some("replay") {
        bail!("refusing to replay a replay");
    }
    let mut args = vec!["avreach".to_string()];
    let mut it = argv.into_iter();
    while let Some(s) = it.next() {
        if s == "--out" {
            it.next();
        } else if !s.starts_with("--out=") {
            args.push(s);
        }
    }
    args.push("--out".into());
    args.push(a.output.out.to_string_lossy().into_owned());
    Ok(run(args))
}
