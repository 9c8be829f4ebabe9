//! Config-driven experiments that write CSV reports and a JSON manifest.

use std::path::{Path, PathBuf};
use std::time::Instant;

use rand::RngCore;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::builtin;
use crate::decoupling;
use crate::entropy::{self, EntropyValue};
use crate::error::{Error, Result};
use crate::io::{self, LoadedState};
use crate::layout::SystemLayout;
use crate::merging::{self, CostMode, MergeTask};
use crate::random;
use crate::report::{self, fmt_num, Table};
use crate::smoothing;
use crate::state::{DensityOperator, PureState};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Entropy,
    Smooth,
    Duality,
    Decouple,
    Merge,
    Converse,
    Convergence,
}

impl Command {
    pub fn as_str(&self) -> &'static str {
        match self {
            Command::Entropy => "entropy",
            Command::Smooth => "smooth",
            Command::Duality => "duality",
            Command::Decouple => "decouple",
            Command::Merge => "merge",
            Command::Converse => "converse",
            Command::Convergence => "convergence",
        }
    }

    pub fn stochastic(&self) -> bool {
        matches!(self, Command::Decouple | Command::Merge)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Params {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    /// Several smoothing parameters (smooth, converse).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eps_list: Option<Vec<f64>>,
    #[serde(default, rename = "L", skip_serializing_if = "Option::is_none")]
    pub l: Option<usize>,
    #[serde(default, rename = "K", skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub samples: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n_max: Option<usize>,
    /// Protocol runs per state (merge).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub runs: Option<usize>,
    /// Cost plan for merge: nonsmooth, smooth or corollary.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub mode: Option<String>,
    /// Dimensions of A for the decoupling grid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_a: Option<Vec<usize>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub d_r: Option<usize>,
    /// Number of random states (decouple grid, merge without a named state).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub random_states: Option<usize>,
    /// Factors playing the role of A and of the conditioning system (entropy).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub system: Option<Vec<String>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub conditioning: Option<Vec<String>>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub command: Command,
    /// Builtin name (bell, ghz, product, w) or path to a state JSON file.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<String>,
    #[serde(default)]
    pub params: Params,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
}

/// Where a state came from, plus the loaded object.
#[derive(Clone, Debug)]
pub struct NamedState {
    pub id: String,
    pub state: LoadedState,
}

/// Load a state JSON file, validating every invariant.
pub fn load_state(path: &Path) -> Result<LoadedState> {
    let text = std::fs::read_to_string(path)?;
    io::state_from_json(&text)
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }

    /// Checks that need no numerics: parameters in range, seed present for
    /// stochastic commands, state source recognizable.
    pub fn validate(&self) -> Result<()> {
        if self.command.stochastic() && self.seed.is_none() {
            return Err(Error::Argument(format!("command `{}` needs a seed", self.command.as_str())));
        }
        let p = &self.params;
        let mut all_eps: Vec<f64> = p.eps_list.clone().unwrap_or_default();
        all_eps.extend(p.eps);
        for e in all_eps {
            if !(0.0..1.0).contains(&e) {
                return Err(Error::Argument(format!("eps = {e} outside [0, 1)")));
            }
        }
        if let Some(m) = &p.mode {
            m.parse::<CostMode>()?;
        }
        if p.samples == Some(0) || p.runs == Some(0) || p.n_max == Some(0) {
            return Err(Error::Argument("counts must be positive".into()));
        }
        if let Some(s) = &self.state {
            if !builtin::NAMES.contains(&s.as_str()) && !Path::new(s).is_file() {
                return Err(Error::Argument(format!(
                    "unknown state `{s}`: not a builtin ({}) and not a file",
                    builtin::NAMES.join(", ")
                )));
            }
        }
        let needs_state = !matches!(self.command, Command::Decouple | Command::Merge);
        if needs_state && self.state.is_none() {
            return Err(Error::Argument(format!("command `{}` needs a state", self.command.as_str())));
        }
        if self.command == Command::Merge && self.state.is_none() && p.random_states.is_none() {
            return Err(Error::Argument("merge needs a state or params.random_states".into()));
        }
        Ok(())
    }

    fn load(&self) -> Result<Option<NamedState>> {
        let Some(s) = &self.state else { return Ok(None) };
        if builtin::NAMES.contains(&s.as_str()) {
            return Ok(Some(NamedState {
                id: s.clone(),
                state: LoadedState::Pure(builtin::by_name(s)?),
            }));
        }
        let path = Path::new(s);
        let id = path
            .file_stem()
            .map(|x| x.to_string_lossy().into_owned())
            .unwrap_or_else(|| s.clone());
        Ok(Some(NamedState {
            id,
            state: load_state(path)?,
        }))
    }
}

/// A failure tagged with the operation that produced it.
#[derive(Debug)]
pub struct RunError {
    pub operation: String,
    pub error: Error,
}

impl std::fmt::Display for RunError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}: {}", self.operation, self.error)
    }
}

impl std::error::Error for RunError {}

impl RunError {
    pub fn to_json(&self) -> serde_json::Value {
        let invariant = match &self.error {
            Error::Invariant { invariant, .. } => Some(invariant.clone()),
            _ => None,
        };
        serde_json::json!({
            "error": {
                "kind": self.error.kind(),
                "operation": self.operation,
                "invariant": invariant,
                "message": self.error.to_string(),
            }
        })
    }
}

trait Tag<T> {
    fn op(self, name: &str) -> std::result::Result<T, RunError>;
}

impl<T> Tag<T> for Result<T> {
    fn op(self, name: &str) -> std::result::Result<T, RunError> {
        self.map_err(|error| RunError {
            operation: name.to_string(),
            error,
        })
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Manifest {
    pub config: ExperimentConfig,
    pub toolkit: String,
    pub version: String,
    pub started_unix: u64,
    pub wall_time_seconds: f64,
    pub outputs: Vec<String>,
    pub rows: usize,
}

/// The CSV produced by a command, before anything is written.
#[derive(Clone, Debug)]
pub struct Report {
    pub name: String,
    pub table: Table,
}

fn pure_abr(ns: &NamedState, what: &str) -> Result<PureState> {
    match &ns.state {
        LoadedState::Pure(p) => {
            for l in ["A", "B", "R"] {
                p.layout().dim_of(l)?;
            }
            if p.layout().len() != 3 {
                return Err(Error::Layout(format!("{what} needs exactly the factors A, B, R")));
            }
            Ok(p.clone())
        }
        LoadedState::Density(_) => Err(Error::Argument(format!("{what} needs a pure state on A, B, R"))),
    }
}

fn entropy_row(t: &mut Table, id: &str, quantity: &str, cond: &[String], v: &EntropyValue) -> Result<()> {
    t.push(vec![
        id.to_string(),
        quantity.to_string(),
        cond.join("+"),
        fmt_num(v.bits),
        v.method.as_str().to_string(),
        fmt_num(v.gap),
    ])
}

/// (state on system+conditioning, system labels, conditioning labels) pairs
/// to evaluate for the entropy command.
fn entropy_targets(ns: &NamedState, p: &Params) -> Result<Vec<(DensityOperator, Vec<String>)>> {
    let rho = ns.state.density();
    if let Some(cond) = &p.conditioning {
        let mut keep = p.system.clone().unwrap_or_else(|| rho.layout().complement(cond).unwrap_or_default());
        keep.extend(cond.iter().cloned());
        return Ok(vec![(rho.partial_trace(&keep)?, cond.clone())]);
    }
    let labels: Vec<String> = rho.layout().labels().iter().map(|s| s.to_string()).collect();
    let is_abr = labels.len() == 3 && ["A", "B", "R"].iter().all(|l| labels.iter().any(|x| x == l));
    if is_abr {
        return Ok(vec![
            (rho.partial_trace(&["A", "R"])?, vec!["R".to_string()]),
            (rho.partial_trace(&["A", "B"])?, vec!["B".to_string()]),
        ]);
    }
    Ok(vec![(rho.clone(), labels[1..].to_vec())])
}

fn run_entropy(ns: &NamedState, p: &Params) -> std::result::Result<Table, RunError> {
    let mut t = Table::new(&report::ENTROPY_COLUMNS);
    for (rho, cond) in entropy_targets(ns, p).op("select systems")? {
        if cond.is_empty() {
            let v = EntropyValue {
                bits: entropy::h_min(&rho),
                method: entropy::Method::Eigen,
                witness: None,
                gap: 0.0,
                status: None,
                note: None,
                smoothed: None,
            };
            entropy_row(&mut t, &ns.id, "h_min", &cond, &v).op("report")?;
            let mut v2 = v.clone();
            v2.bits = entropy::h_max(&rho);
            entropy_row(&mut t, &ns.id, "h_max", &cond, &v2).op("report")?;
            v2.bits = entropy::von_neumann(&rho);
            entropy_row(&mut t, &ns.id, "von_neumann", &cond, &v2).op("report")?;
            continue;
        }
        let marg = rho.partial_trace(&cond).op("partial_trace")?;
        let v = entropy::h_min_rel(&rho, &marg).op("h_min_rel")?;
        entropy_row(&mut t, &ns.id, "h_min_marginal", &cond, &v).op("report")?;
        let v = entropy::h_min_cond(&rho, &cond).op("h_min_cond")?;
        entropy_row(&mut t, &ns.id, "h_min", &cond, &v).op("report")?;
        let v = entropy::h_max_cond_value(&rho, &cond).op("h_max_cond")?;
        entropy_row(&mut t, &ns.id, "h_max", &cond, &v).op("report")?;
        let v = entropy::h2_rel(&rho, &marg).op("h2_rel")?;
        entropy_row(&mut t, &ns.id, "h2_marginal", &cond, &v).op("report")?;
        let s = entropy::cond_von_neumann(&rho, &cond).op("cond_von_neumann")?;
        let v = EntropyValue {
            bits: s,
            method: entropy::Method::Eigen,
            witness: None,
            gap: 0.0,
            status: None,
            note: None,
            smoothed: None,
        };
        entropy_row(&mut t, &ns.id, "von_neumann", &cond, &v).op("report")?;
    }
    Ok(t)
}

fn eps_values(p: &Params, default: &[f64]) -> Vec<f64> {
    if let Some(l) = &p.eps_list {
        return l.clone();
    }
    if let Some(e) = p.eps {
        return vec![e];
    }
    default.to_vec()
}

fn run_smooth(ns: &NamedState, p: &Params) -> std::result::Result<Table, RunError> {
    let mut t = Table::new(&report::ENTROPY_COLUMNS);
    for (rho, cond) in entropy_targets(ns, p).op("select systems")? {
        if cond.is_empty() {
            continue;
        }
        let marg = rho.partial_trace(&cond).op("partial_trace")?;
        for eps in eps_values(p, &[0.0, 0.05, 0.1, 0.2]) {
            let v = smoothing::h_min_smooth_cond(&rho, &cond, eps).op("h_min_smooth_cond")?;
            entropy_row(&mut t, &ns.id, &format!("h_min_smooth@{}", fmt_num(eps)), &cond, &v).op("report")?;
            let (h, _) = smoothing::h_max_smooth_rel(&rho, &marg, eps).op("h_max_smooth_rel")?;
            let v = EntropyValue {
                bits: h,
                method: entropy::Method::SpectralTruncation,
                witness: None,
                gap: 0.0,
                status: None,
                note: None,
                smoothed: None,
            };
            entropy_row(&mut t, &ns.id, &format!("h_max_smooth_marginal@{}", fmt_num(eps)), &cond, &v)
                .op("report")?;
        }
    }
    Ok(t)
}

fn run_duality(ns: &NamedState) -> std::result::Result<Table, RunError> {
    let psi = pure_abr(ns, "duality").op("load state")?;
    let (hmin, hmax) = entropy::duality_pair(&psi, "A", "B", "R").op("duality_pair")?;
    let mut t = Table::new(&report::ENTROPY_COLUMNS);
    let row = |q: &str, c: &str, v: f64, m: &str, g: f64| {
        vec![ns.id.clone(), q.into(), c.into(), fmt_num(v), m.into(), fmt_num(g)]
    };
    t.push(row("h_min_marginal", "R", hmin, "eigen", 0.0)).op("report")?;
    t.push(row("h_max", "B", hmax, "closed-form", 0.0)).op("report")?;
    t.push(row("duality_sum", "R|B", hmin + hmax, "eigen", (hmin + hmax).abs())).op("report")?;
    Ok(t)
}

fn run_converse(ns: &NamedState, p: &Params) -> std::result::Result<Table, RunError> {
    let psi = pure_abr(ns, "converse").op("load state")?;
    let z = merging::zero_error_bound(&psi).op("zero_error_bound")?;
    let mut t = Table::new(&report::ENTROPY_COLUMNS);
    let id = ns.id.clone();
    t.push(vec![id.clone(), "zero_error_bound".into(), "R".into(), fmt_num(z.value), "eigen".into(), "0".into()])
        .op("report")?;
    t.push(vec![
        id.clone(),
        "zero_error_bound_max_form".into(),
        "B".into(),
        fmt_num(z.max_entropy_form),
        "closed-form".into(),
        fmt_num(z.discrepancy),
    ])
    .op("report")?;
    for eps in eps_values(p, &[0.0, 0.01, 0.05, 0.1]) {
        let rho_ar = psi.density().partial_trace(&["A", "R"]).op("partial_trace")?;
        let v = smoothing::h_min_smooth_cond(&rho_ar, &["R"], eps.sqrt()).op("eps_error_bound")?;
        t.push(vec![
            id.clone(),
            format!("eps_error_bound@{}", fmt_num(eps)),
            "R".into(),
            fmt_num(-v.bits),
            v.method.as_str().into(),
            fmt_num(v.gap),
        ])
        .op("report")?;
    }
    Ok(t)
}

fn run_convergence(ns: &NamedState, p: &Params) -> std::result::Result<Table, RunError> {
    let psi = pure_abr(ns, "convergence").op("load state")?;
    let eps = p.eps.unwrap_or(0.05);
    let s = smoothing::convergence_series(&psi, eps, p.n_max.unwrap_or(3)).op("convergence_series")?;
    let mut t = Table::new(&report::CONVERGENCE_COLUMNS);
    for pt in &s.points {
        t.push(vec![
            pt.n.to_string(),
            fmt_num(eps),
            fmt_num(pt.value_bits_per_copy),
            fmt_num(s.target_bits),
            fmt_num(pt.gap),
        ])
        .op("report")?;
    }
    Ok(t)
}

/// Seed for grid cell `index`, drawn from its own stream of the master seed.
pub fn child_seed(seed: u64, index: u64) -> u64 {
    random::substream(seed, index).next_u64()
}

fn run_decouple(ns: Option<&NamedState>, p: &Params, seed: u64) -> std::result::Result<Table, RunError> {
    let samples = p.samples.unwrap_or(2000);
    let mut cells: Vec<(String, DensityOperator, usize)> = Vec::new();
    if let Some(ns) = ns {
        let rho = ns.state.density();
        let ar = if rho.layout().contains("B") {
            rho.partial_trace(&["A", "R"]).op("partial_trace")?
        } else {
            rho
        };
        let da = ar.layout().dim_of("A").op("load state")?;
        let ls: Vec<usize> = p.l.map(|l| vec![l]).unwrap_or_else(|| (1..=da).collect());
        for l in ls {
            cells.push((ns.id.clone(), ar.clone(), l));
        }
    } else {
        let dr = p.d_r.unwrap_or(2);
        let n_states = p.random_states.unwrap_or(5);
        let mut counter = 0u64;
        for &da in p.d_a.as_deref().unwrap_or(&[2, 4, 6, 8]) {
            let layout = SystemLayout::new(&[("A", da), ("R", dr)]).op("layout")?;
            for k in 0..n_states {
                let mut rng = random::substream(seed, 1 << 32 | counter);
                counter += 1;
                let rho = random::random_density(layout.clone(), &mut rng);
                let ls: Vec<usize> = p.l.map(|l| vec![l]).unwrap_or_else(|| (1..=da).collect());
                for l in ls {
                    cells.push((format!("rand-d{da}-{k}"), rho.clone(), l));
                }
            }
        }
    }
    let reports: Vec<_> = cells
        .iter()
        .enumerate()
        .map(|(i, (_, rho, l))| {
            let sigma = rho.partial_trace(&["R"])?;
            decoupling::estimate_decoupling(rho, &sigma, *l, samples, child_seed(seed, i as u64))
        })
        .collect::<Result<Vec<_>>>()
        .op("estimate_decoupling")?;
    let mut t = Table::new(&report::DECOUPLING_COLUMNS);
    for ((id, _, _), r) in cells.iter().zip(&reports) {
        t.push(vec![
            r.d_a.to_string(),
            r.l.to_string(),
            r.n_blocks.to_string(),
            id.clone(),
            r.samples.to_string(),
            fmt_num(r.mean),
            fmt_num(r.stderr),
            fmt_num(r.bound_h2),
            fmt_num(r.bound_hmin),
            fmt_num(r.margin),
        ])
        .op("report")?;
    }
    Ok(t)
}

/// One row of the merge table.
#[derive(Clone, Debug, Serialize)]
pub struct MergeRow {
    pub state_id: String,
    pub seed: u64,
    pub k: usize,
    pub l: usize,
    pub cost_bits: f64,
    pub design_eps: f64,
    pub condition_value: f64,
    pub error: f64,
    pub guarantee: f64,
    pub lower_bound_at_error: f64,
    pub slack: f64,
}

/// Seeded protocol runs for one state at a fixed plan. Run i uses seed
/// `seed + i`; runs execute in parallel and are returned in order.
pub fn merge_runs(
    id: &str,
    psi: &PureState,
    plan: &merging::CostPlan,
    seed: u64,
    runs: usize,
) -> Result<Vec<MergeRow>> {
    (0..runs)
        .into_par_iter()
        .map(|i| {
            let s = seed.wrapping_add(i as u64);
            let task = MergeTask::from_plan(psi.clone(), plan, s)?;
            let out = merging::run_protocol(&task)?;
            if !out.chain_holds(1e-6) {
                return Err(Error::invariant(
                    "merging-condition",
                    format!("error {} exceeds 2 sqrt({})", out.error, out.condition_value),
                ));
            }
            let lb = merging::lower_bound_at_error(psi, out.error)?;
            Ok(MergeRow {
                state_id: id.to_string(),
                seed: s,
                k: out.k,
                l: out.l,
                cost_bits: out.cost,
                design_eps: plan.eps,
                condition_value: out.condition_value,
                error: out.error,
                guarantee: plan.guarantee,
                lower_bound_at_error: lb,
                slack: out.cost - lb,
            })
        })
        .collect()
}

fn run_merge(ns: Option<&NamedState>, p: &Params, seed: u64) -> std::result::Result<Table, RunError> {
    let eps = p.eps.unwrap_or(0.1);
    let mode: CostMode = p.mode.as_deref().unwrap_or("nonsmooth").parse().op("config")?;
    let runs = p.runs.unwrap_or(100);
    let mut states: Vec<(String, PureState)> = Vec::new();
    if let Some(ns) = ns {
        states.push((ns.id.clone(), pure_abr(ns, "merge").op("load state")?));
    }
    if let Some(n) = p.random_states {
        let layout = SystemLayout::new(&[("A", 2), ("B", 2), ("R", 2)]).op("layout")?;
        for k in 0..n {
            let mut rng = random::substream(seed, 1 << 40 | k as u64);
            states.push((format!("rand-{k}"), random::random_pure_state(layout.clone(), &mut rng)));
        }
    }
    let mut t = Table::new(&report::MERGE_COLUMNS);
    for (id, psi) in &states {
        let rho_ar = psi.density().partial_trace(&["A", "R"]).op("partial_trace")?;
        let mut plan = merging::plan_cost(&rho_ar, eps, mode).op("plan_cost")?;
        if let (Some(k), Some(l)) = (p.k, p.l) {
            plan.k = k;
            plan.l = l;
            plan.cost_bits = ((k as f64).log2() - (l as f64).log2()).round() as i64;
        }
        for r in merge_runs(id, psi, &plan, seed, runs).op("run_protocol")? {
            t.push(vec![
                r.state_id,
                r.seed.to_string(),
                r.k.to_string(),
                r.l.to_string(),
                fmt_num(r.cost_bits),
                fmt_num(r.design_eps),
                fmt_num(r.condition_value),
                fmt_num(r.error),
                fmt_num(r.guarantee),
                fmt_num(r.lower_bound_at_error),
                fmt_num(r.slack),
            ])
            .op("report")?;
        }
    }
    Ok(t)
}

/// Compute the report for a validated config without touching the disk.
pub fn compute(config: &ExperimentConfig) -> std::result::Result<Report, RunError> {
    config.validate().op("config")?;
    let ns = config.load().op("load state")?;
    let p = &config.params;
    let seed = config.seed.unwrap_or(0);
    let table = match config.command {
        Command::Entropy => run_entropy(ns.as_ref().expect("validated"), p)?,
        Command::Smooth => run_smooth(ns.as_ref().expect("validated"), p)?,
        Command::Duality => run_duality(ns.as_ref().expect("validated"))?,
        Command::Converse => run_converse(ns.as_ref().expect("validated"), p)?,
        Command::Convergence => run_convergence(ns.as_ref().expect("validated"), p)?,
        Command::Decouple => run_decouple(ns.as_ref(), p, seed)?,
        Command::Merge => run_merge(ns.as_ref(), p, seed)?,
    };
    Ok(Report {
        name: config.command.as_str().to_string(),
        table,
    })
}

/// Run a config and write `<command>.csv` and `manifest.json` into the
/// output directory.
pub fn run(config: &ExperimentConfig) -> std::result::Result<Manifest, RunError> {
    let started = Instant::now();
    let started_unix = std::time::SystemTime::now()
        .duration_since(std::time::UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    let out_dir = config.output.clone().unwrap_or_else(|| PathBuf::from("."));
    let rep = compute(config)?;
    std::fs::create_dir_all(&out_dir).map_err(Error::from).op("write output")?;
    let csv_path = out_dir.join(format!("{}.csv", rep.name));
    rep.table.write(&csv_path).op("write output")?;
    let manifest = Manifest {
        config: config.clone(),
        toolkit: env!("CARGO_PKG_NAME").to_string(),
        version: env!("CARGO_PKG_VERSION").to_string(),
        started_unix,
        wall_time_seconds: started.elapsed().as_secs_f64(),
        outputs: vec![csv_path.to_string_lossy().into_owned()],
        rows: rep.table.rows.len(),
    };
    let text = serde_json::to_string_pretty(&manifest).map_err(Error::from).op("write output")?;
    std::fs::write(out_dir.join("manifest.json"), text)
        .map_err(Error::from)
        .op("write output")?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg(text: &str) -> ExperimentConfig {
        ExperimentConfig::from_json(text).unwrap()
    }

    #[test]
    fn unknown_command_is_rejected() {
        assert!(ExperimentConfig::from_json(r#"{"command": "teleport", "state": "bell"}"#).is_err());
        assert!(ExperimentConfig::from_json(r#"{"command": "entropy", "state": "bell", "bogus": 1}"#).is_err());
    }

    #[test]
    fn unknown_state_is_rejected() {
        let c = cfg(r#"{"command": "entropy", "state": "no-such-state"}"#);
        let e = compute(&c).unwrap_err();
        assert_eq!(e.operation, "config");
    }

    #[test]
    fn stochastic_commands_need_seed() {
        let c = cfg(r#"{"command": "merge", "state": "bell"}"#);
        assert!(c.validate().is_err());
        let c = cfg(r#"{"command": "merge", "state": "bell", "seed": 1}"#);
        assert!(c.validate().is_ok());
    }

    #[test]
    fn duality_row_for_ghz() {
        let r = compute(&cfg(r#"{"command": "duality", "state": "ghz"}"#)).unwrap();
        let last = r.table.rows.last().unwrap();
        assert_eq!(last[1], "duality_sum");
        let gap: f64 = last[5].parse().unwrap();
        assert!(gap <= 1e-7);
    }

    #[test]
    fn entropy_bell() {
        let r = compute(&cfg(r#"{"command": "entropy", "state": "bell"}"#)).unwrap();
        let h = r.table.rows.iter().find(|row| row[1] == "h_min" && row[2] == "R").unwrap();
        let v: f64 = h[3].parse().unwrap();
        assert!((v + 1.0).abs() < 1e-7);
    }

    #[test]
    fn merge_is_deterministic() {
        let c = cfg(r#"{"command": "merge", "state": "bell", "seed": 7, "params": {"eps": 0.1, "runs": 4}}"#);
        let a = compute(&c).unwrap().table.to_csv_string().unwrap();
        let b = compute(&c).unwrap().table.to_csv_string().unwrap();
        assert_eq!(a, b);
        assert_eq!(a.lines().count(), 5);
    }
}
