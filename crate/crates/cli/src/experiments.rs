//! One runner per experiment kind. Each returns a JSON result, CSV tables
//! and the verdict of the experiment's own assertions.

use std::collections::HashMap;
use std::path::{Path, PathBuf};
use std::time::{Instant, SystemTime};

use afp_core::afp::{afp_run, verify_decomposition, AfpConfig, AveragingRun, Verdict};
use afp_core::convex::{AffineAction, AffineMap, ConvexModel, Norm};
use afp_core::embed::{
    commutation_residual, conjugated_action, default_family_seeded, euclidean, verify_embedding, EmbeddingVerdict,
    DEFAULT_EXTRA_MEMBERS,
};
use afp_core::folner::{box_schedule, ratio_profile, FolnerSchedule};
use afp_core::group::{Element, ElementSpec, GeneratingSet, Group};
use afp_core::reiter::{
    counterexample_run, kesten_estimate, reiter_minimize, CounterexampleOptions, KestenOptions, MinimizeOptions,
};
use afp_core::{Error as CoreError, Limits};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::config::{
    ActionSpec, AfpRunSpec, CounterexampleSpec, EmbedSpec, Expect, ExperimentConfig, FolnerProfileSpec, KestenSpec,
    ReiterSpec, ScheduleSpec, Spec,
};
use crate::error::Result;
use crate::output::{float, floats, rational, to_json_string, write_file, write_sidecar, Cell, Table};

/// Decomposition residuals above this fail an `afp_run`.
pub const DECOMPOSITION_TOLERANCE: f64 = 1e-9;
/// Kesten estimates may exceed 1 by at most this.
pub const SPECTRAL_SLACK: f64 = 1e-9;
pub const EMBED_AFFINE_TOLERANCE: f64 = 1e-12;
pub const COMMUTATION_TOLERANCE: f64 = 1e-9;
/// Slack on `‖T x − γ T x‖ ≤ L·‖x − γx‖`.
pub const MODULUS_SLACK: f64 = 1e-12;

/// Largest average written out in full.
const MAX_REPORTED_DIM: usize = 64;

#[derive(Clone, Debug)]
pub struct Outcome {
    pub result: Value,
    pub tables: Vec<Table>,
    pub passed: bool,
    pub summary: String,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunSummary {
    pub name: String,
    pub kind: &'static str,
    pub passed: bool,
    pub summary: String,
    pub report: PathBuf,
}

/// Builds everything a run needs without running it, so that a suite can
/// reject bad configs before any work starts.
pub fn check(config: &ExperimentConfig) -> Result<()> {
    let limits = config.limits()?;
    match &config.spec {
        Spec::FolnerProfile(s) => {
            let gens = generators(&s.group, &s.gens)?;
            schedule(&s.group, &gens, &s.schedule)?;
        }
        Spec::AfpRun(s) => {
            let gens = generators(&s.group, &s.gens)?;
            schedule(&s.group, &gens, &s.schedule)?;
            build_action(s, &gens, config.seed, &limits)?;
        }
        Spec::Reiter(s) => {
            generators(&s.group, &s.gens)?;
        }
        Spec::Kesten(s) => {
            generators(&s.group, &s.gens)?;
        }
        Spec::Counterexample(_) => {}
        Spec::Embed(s) => {
            s.domain.validate()?;
        }
    }
    Ok(())
}

pub fn execute(config: &ExperimentConfig) -> Result<Outcome> {
    let limits = config.limits()?;
    match &config.spec {
        Spec::FolnerProfile(s) => folner_profile(s, &limits),
        Spec::AfpRun(s) => afp(s, config.seed, &limits),
        Spec::Reiter(s) => reiter(s, &limits),
        Spec::Kesten(s) => kesten(s, &limits),
        Spec::Counterexample(s) => counterexample(s, &limits),
        Spec::Embed(s) => embed(s, config.seed.expect("checked at parse time")),
    }
}

/// Runs one experiment and writes `<name>.json`, its tables and the
/// `<name>.meta.json` timing sidecar into `out_dir`.
pub fn run_experiment(config: &ExperimentConfig, out_dir: &Path) -> Result<RunSummary> {
    std::fs::create_dir_all(out_dir).map_err(|e| crate::error::LabError::io(out_dir, e))?;
    let started = SystemTime::now();
    let clock = Instant::now();
    let outcome = execute(config)?;
    let elapsed = clock.elapsed();
    let kind = config.spec.kind().label();
    let report = json!({
        "name": config.name,
        "kind": kind,
        "seed": config.seed,
        "config": config.echo,
        "result": outcome.result,
        "verdict": {"passed": outcome.passed, "summary": outcome.summary},
    });
    let path = out_dir.join(format!("{}.json", config.name));
    write_file(&path, &to_json_string(&report))?;
    for table in &outcome.tables {
        write_file(&out_dir.join(format!("{}.{}.csv", config.name, table.suffix)), &table.to_csv()?)?;
    }
    write_sidecar(&out_dir.join(format!("{}.meta.json", config.name)), started, elapsed)?;
    Ok(RunSummary { name: config.name.clone(), kind, passed: outcome.passed, summary: outcome.summary, report: path })
}

fn generators(group: &Group, specs: &Option<Vec<ElementSpec>>) -> Result<GeneratingSet> {
    group.validate()?;
    Ok(match specs {
        None => GeneratingSet::standard(group)?,
        Some(specs) => {
            let gens = specs.iter().map(|s| group.parse(s)).collect::<afp_core::Result<Vec<_>>>()?;
            GeneratingSet::new(group, gens)?
        }
    })
}

fn schedule(group: &Group, gens: &GeneratingSet, spec: &ScheduleSpec) -> Result<FolnerSchedule> {
    Ok(match spec {
        ScheduleSpec::Boxes { sides } => box_schedule(group, (*sides).into())?,
        ScheduleSpec::Balls {} => FolnerSchedule::Balls { group: group.clone(), gens: gens.clone() },
        ScheduleSpec::WholeGroup {} => {
            if group.order().is_none() {
                return Err(CoreError::domain(format!("{} is infinite", group.name())).into());
            }
            FolnerSchedule::WholeGroup { group: group.clone() }
        }
        ScheduleSpec::Explicit { sets } => {
            let sets = sets
                .iter()
                .map(|set| set.iter().map(|s| group.parse(s)).collect::<afp_core::Result<Vec<_>>>())
                .collect::<afp_core::Result<Vec<_>>>()?;
            FolnerSchedule::Explicit { group: group.clone(), sets }
        }
    })
}

/// False when `x` is NaN.
fn at_most(x: f64, max: f64) -> bool {
    x <= max
}

/// False when `x` is NaN.
fn at_least(x: f64, min: f64) -> bool {
    x >= min
}

fn element(e: &Element) -> Value {
    Value::String(e.to_string())
}

fn folner_profile(s: &FolnerProfileSpec, limits: &Limits) -> Result<Outcome> {
    let gens = generators(&s.group, &s.gens)?;
    let schedule = schedule(&s.group, &gens, &s.schedule)?;
    let rows = ratio_profile(&schedule, &gens, s.max_index, limits)?;
    let mut table = Table::new("profile", &["index", "set_size", "generator", "ratio_num", "ratio_den", "ratio_float"]);
    let mut json_rows = Vec::new();
    for r in &rows {
        let ratio = r.ratio();
        table.push(vec![
            r.index.into(),
            r.set_size.into(),
            r.generator.to_string().into(),
            (*ratio.numer()).into(),
            (*ratio.denom()).into(),
            r.stats.ratio_f64().into(),
        ]);
        json_rows.push(json!({
            "index": r.index,
            "set_size": r.set_size,
            "generator": element(&r.generator),
            "outgoing": r.stats.outgoing,
            "incoming": r.stats.incoming,
            "ratio": rational(ratio),
            "ratio_float": float(r.stats.ratio_f64()),
        }));
    }
    let split_failures = rows.iter().filter(|r| r.stats.outgoing != r.stats.incoming).count();
    let last_index = rows.last().map(|r| r.index);
    let final_ratio = rows
        .iter()
        .filter(|r| Some(r.index) == last_index)
        .map(|r| r.ratio())
        .max()
        .unwrap_or_default();
    let final_float = *final_ratio.numer() as f64 / *final_ratio.denom() as f64;
    let within = s.max_final_ratio.is_none_or(|m| final_float <= m);
    let passed = split_failures == 0 && within;
    let summary = format!(
        "{} rows through index {}, final max ratio {}/{}{}",
        rows.len(),
        last_index.unwrap_or(0),
        final_ratio.numer(),
        final_ratio.denom(),
        if split_failures > 0 { format!(", {split_failures} split identity failures") } else { String::new() }
    );
    Ok(Outcome {
        result: json!({
            "rows": json_rows,
            "final_max_ratio": rational(final_ratio),
            "split_identity_failures": split_failures,
        }),
        tables: vec![table],
        passed,
        summary,
    })
}

fn build_action(s: &AfpRunSpec, gens: &GeneratingSet, seed: Option<u64>, limits: &Limits) -> Result<AffineAction> {
    let wrong = |what: &str| CoreError::domain(format!("{what} actions need {}, got {}", what_group(what), s.group.name()));
    let (maps, model) = match (&s.action, &s.group) {
        (ActionSpec::Permutation {}, Group::Symmetric { n }) => {
            let maps = gens
                .generators()
                .iter()
                .map(|g| match g {
                    Element::Perm(p) => AffineMap::permutation(p.to_vec()),
                    _ => unreachable!("Sym elements are permutations"),
                })
                .collect::<afp_core::Result<Vec<_>>>()?;
            (maps, ConvexModel::simplex(*n))
        }
        (ActionSpec::Rotation { angles }, Group::Lattice { dim }) => {
            if angles.len() != *dim {
                return Err(CoreError::domain(format!("{} angles for Z^{dim}", angles.len())).into());
            }
            let maps = gens
                .generators()
                .iter()
                .map(|g| match g {
                    Element::Vector(v) => AffineMap::rotation(v.iter().zip(angles).map(|(k, t)| *k as f64 * t).sum()),
                    _ => unreachable!("Z^d elements are vectors"),
                })
                .collect();
            (maps, ConvexModel::unit_ball(2, Norm::L2))
        }
        (ActionSpec::LeftRegular {}, Group::Free { rank }) => {
            let maps = gens
                .generators()
                .iter()
                .map(|g| AffineMap::LeftRegular { rank: *rank, by: g.clone() })
                .collect();
            (maps, ConvexModel::ProbN)
        }
        (ActionSpec::Affine { model, maps }, _) => {
            if maps.len() != gens.len() {
                return Err(CoreError::domain(format!("{} maps for {} generators", maps.len(), gens.len())).into());
            }
            let maps = maps
                .iter()
                .map(|m| AffineMap::dense(m.matrix.clone(), m.offset.clone()))
                .collect::<afp_core::Result<Vec<_>>>()?;
            (maps, model.clone())
        }
        (ActionSpec::Permutation {}, _) => return Err(wrong("permutation").into()),
        (ActionSpec::Rotation { .. }, _) => return Err(wrong("rotation").into()),
        (ActionSpec::LeftRegular {}, _) => return Err(wrong("left_regular").into()),
    };
    let action = AffineAction::new(&s.group, gens, maps, model, limits)?;
    if let ActionSpec::Affine { .. } = s.action {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.expect("checked at parse time"));
        let report = action.validate(&mut rng, 200, 4)?;
        if !report.passed(action.tolerance()) {
            return Err(CoreError::domain(format!(
                "affine maps do not define an action on the model (invariance {:.3e}, relations {:.3e}, affinity {:.3e})",
                report.invariance, report.relation, report.affine
            ))
            .into());
        }
    }
    Ok(action)
}

fn what_group(action: &str) -> &'static str {
    match action {
        "permutation" => "a symmetric group",
        "rotation" => "Z^d",
        _ => "a free group",
    }
}

fn run_json(run: &AveragingRun) -> (Value, Table) {
    let mut table =
        Table::new("records", &["index", "set_size", "generator", "displacement", "ratio_float", "bound", "residual"]);
    let records: Vec<Value> = run
        .records
        .iter()
        .map(|r| {
            let per_generator: Vec<Value> = r
                .per_generator
                .iter()
                .map(|g| {
                    table.push(vec![
                        r.index.into(),
                        r.set_size.into(),
                        g.generator.to_string().into(),
                        g.displacement.into(),
                        g.ratio().into(),
                        g.bound.into(),
                        g.residual.into(),
                    ]);
                    json!({
                        "generator": element(&g.generator),
                        "displacement": float(g.displacement),
                        "ratio": rational(g.stats.ratio()),
                        "bound": float(g.bound),
                        "residual": float(g.residual),
                    })
                })
                .collect();
            let mut rec = json!({
                "index": r.index,
                "set_size": r.set_size,
                "max_displacement": float(r.max_displacement()),
                "max_ratio": float(r.max_ratio()),
                "max_bound": float(r.max_bound()),
                "membership_violation": float(r.membership_violation),
                "per_generator": per_generator,
            });
            if r.average.len() <= MAX_REPORTED_DIM {
                rec["average"] = floats(&r.average);
            }
            rec
        })
        .collect();
    (Value::Array(records), table)
}

fn afp(s: &AfpRunSpec, seed: Option<u64>, limits: &Limits) -> Result<Outcome> {
    let gens = generators(&s.group, &s.gens)?;
    let schedule = schedule(&s.group, &gens, &s.schedule)?;
    let action = build_action(s, &gens, seed, limits)?;
    let config = AfpConfig { epsilon: s.epsilon, max_index: s.max_index, seminorm: s.seminorm.clone(), generators: None };
    let run = afp_run(&action, &schedule, &s.x0, &config, limits)?;

    let mut max_residual: f64 = run
        .records
        .iter()
        .flat_map(|r| &r.per_generator)
        .fold(0.0, |m, g| m.max(g.residual));
    if s.decomposition_checks > 0 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed.expect("checked at parse time"));
        let mut sets = HashMap::new();
        let last = run.records.len();
        for _ in 0..s.decomposition_checks {
            let index = run.records[rng.gen_range(0..last)].index;
            if let std::collections::hash_map::Entry::Vacant(e) = sets.entry(index) {
                e.insert(schedule.set(index, &gens, limits)?);
            }
            let x = action.model().sample(&mut rng);
            let gamma = random_element(&s.group, &gens, &mut rng);
            let d = verify_decomposition(&action, &sets[&index], &x, &gamma, &s.seminorm)?;
            max_residual = max_residual.max(d.residual);
        }
    }

    let violations = run.bound_violations();
    let (records, table) = run_json(&run);
    let (verdict, verdict_json) = match &run.verdict {
        Verdict::Success(c) => (
            Expect::Success,
            json!({"type": "success", "index": c.index, "displacement": float(c.displacement),
                   "ratio": float(c.ratio), "bound": float(c.bound)}),
        ),
        Verdict::NoDecay { through_index, displacement } => (
            Expect::NoDecay,
            json!({"type": "no_decay", "through_index": through_index, "displacement": float(*displacement)}),
        ),
    };
    let final_displacement = run.records.last().map_or(f64::NAN, |r| r.max_displacement());
    let mut failures = Vec::new();
    if violations > 0 {
        failures.push(format!("{violations} bound violations"));
    }
    if max_residual > DECOMPOSITION_TOLERANCE {
        failures.push(format!("decomposition residual {max_residual:.3e}"));
    }
    if let Some(expect) = s.expect {
        if expect != verdict {
            failures.push(format!("expected {expect:?}, observed {verdict:?}"));
        }
    }
    if let Some(max) = s.max_final_displacement {
        if !at_most(final_displacement, max) {
            failures.push(format!("final displacement {final_displacement:.6e} above {max:.6e}"));
        }
    }
    let summary = format!(
        "{} through index {}, final displacement {:.6e}{}",
        match verdict {
            Expect::Success => "success",
            Expect::NoDecay => "no decay observed",
        },
        run.records.last().map_or(0, |r| r.index),
        final_displacement,
        if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }
    );
    Ok(Outcome {
        result: json!({
            "diameter": float(run.diameter),
            "records": records,
            "bound_violations": violations,
            "decomposition": {"checks": s.decomposition_checks, "max_residual": float(max_residual)},
            "verdict": verdict_json,
        }),
        tables: vec![table],
        passed: failures.is_empty(),
        summary,
    })
}

/// A product of one or two generators or inverses.
fn random_element(group: &Group, gens: &GeneratingSet, rng: &mut ChaCha8Rng) -> Element {
    let pick = |rng: &mut ChaCha8Rng| {
        let g = &gens.generators()[rng.gen_range(0..gens.len())];
        if rng.gen_bool(0.5) {
            group.inv_unchecked(g)
        } else {
            g.clone()
        }
    };
    let first = pick(rng);
    if rng.gen_bool(0.5) {
        let second = pick(rng);
        group.mul_unchecked(&first, &second)
    } else {
        first
    }
}

fn reiter(s: &ReiterSpec, limits: &Limits) -> Result<Outcome> {
    let gens = generators(&s.group, &s.gens)?;
    let defaults = MinimizeOptions::default();
    let options = MinimizeOptions {
        iterations: s.iterations.unwrap_or(defaults.iterations),
        step0: s.step0.unwrap_or(defaults.step0),
        init: s.init.unwrap_or(defaults.init),
        warm_start: None,
        trace_every: s.trace_every.unwrap_or(defaults.trace_every),
    };
    let r = reiter_minimize(&s.group, &gens, s.radius, s.p, s.method, &options, limits)?;
    let mut trace = Table::new("trace", &["iteration", "objective", "best"]);
    for t in &r.trace {
        trace.push(vec![t.iteration.into(), t.objective.into(), t.best.into()]);
    }
    let mut density = Table::new("density", &["element", "mass"]);
    for (e, m) in r.density.iter() {
        density.push(vec![e.to_string().into(), m.into()]);
    }
    let mut failures = Vec::new();
    if let Some(max) = s.max_objective {
        if !at_most(r.objective, max) {
            failures.push(format!("objective above {max}"));
        }
    }
    if let Some(min) = s.min_objective {
        if !at_least(r.objective, min) {
            failures.push(format!("objective below {min}"));
        }
    }
    let summary = format!(
        "{} floor {:.6e} on a ball of {} elements{}",
        r.method.label(),
        r.objective,
        r.ball_size,
        if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }
    );
    Ok(Outcome {
        result: json!({
            "objective": float(r.objective),
            "lp_objective": r.lp_objective.map(float),
            "radius": r.radius,
            "p": s.p,
            "ball_size": r.ball_size,
            "method": r.method.label(),
            "iterations": r.iterations,
            "support_size": r.density.support_size(),
        }),
        tables: vec![trace, density],
        passed: failures.is_empty(),
        summary,
    })
}

fn kesten(s: &KestenSpec, limits: &Limits) -> Result<Outcome> {
    let gens = generators(&s.group, &s.gens)?.symmetric_closure(&s.group);
    let defaults = KestenOptions::default();
    let options = KestenOptions {
        max_iterations: s.max_iterations.unwrap_or(defaults.max_iterations),
        tolerance: s.tolerance.unwrap_or(defaults.tolerance),
    };
    let k = kesten_estimate(&s.group, &gens, s.radius, &options, limits)?;
    let mut failures = Vec::new();
    if k.estimate > 1.0 + SPECTRAL_SLACK {
        failures.push("estimate exceeds 1".to_string());
    }
    if let Some(min) = s.min_estimate {
        if !at_least(k.estimate, min) {
            failures.push(format!("estimate below {min}"));
        }
    }
    if let Some(max) = s.max_estimate {
        if !at_most(k.estimate, max) {
            failures.push(format!("estimate above {max}"));
        }
    }
    let summary = format!(
        "estimate {:.10} at radius {} ({} iterations{}){}",
        k.estimate,
        s.radius,
        k.iterations,
        if k.converged { "" } else { ", not converged" },
        if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }
    );
    Ok(Outcome {
        result: json!({
            "estimate": float(k.estimate),
            "radius": s.radius,
            "generators": gens.generators().iter().map(element).collect::<Vec<_>>(),
            "iterations": k.iterations,
            "converged": k.converged,
            "ball_size": k.ball_size,
            "boundary_size": k.boundary_size,
        }),
        tables: Vec::new(),
        passed: failures.is_empty(),
        summary,
    })
}

fn counterexample(s: &CounterexampleSpec, limits: &Limits) -> Result<Outcome> {
    let mut options = CounterexampleOptions::default();
    if let Some(r) = &s.radii {
        options.radii = r.clone();
    }
    if let Some(t) = s.threshold {
        options.threshold = t;
    }
    if let Some(r) = s.lp_max_radius {
        options.lp_max_radius = r;
    }
    if let Some(i) = s.iterations {
        options.subgradient.iterations = i;
    }
    if let Some(step) = s.step0 {
        options.subgradient.step0 = step;
    }
    if let Some(r) = s.control_radius {
        options.control_radius = r;
    }
    if let Some(t) = s.control_threshold {
        options.control_threshold = t;
    }
    let report = counterexample_run(&options, limits)?;
    let mut table = Table::new(
        "floors",
        &["group", "radius", "floor", "method", "iterations", "support_size", "ball_size", "prob_n_displacement"],
    );
    let rows: Vec<Value> = report
        .rows
        .iter()
        .map(|r| {
            table.push(vec![
                "F2".to_string().into(),
                r.radius.into(),
                r.floor.into(),
                r.method.label().to_string().into(),
                r.iterations.into(),
                r.support_size.into(),
                r.ball_size.into(),
                r.prob_n_displacement.into(),
            ]);
            json!({
                "radius": r.radius,
                "floor": float(r.floor),
                "method": r.method.label(),
                "iterations": r.iterations,
                "support_size": r.support_size,
                "ball_size": r.ball_size,
                "prob_n_displacement": float(r.prob_n_displacement),
            })
        })
        .collect();
    table.push(vec![
        "Z2".to_string().into(),
        report.control_radius.into(),
        report.control_floor.into(),
        "subgradient".to_string().into(),
        options.subgradient.iterations.into(),
        Cell::Text(String::new()),
        Cell::Text(String::new()),
        Cell::Text(String::new()),
    ]);
    let passed = report.passed();
    let summary = if passed {
        format!(
            "no decay observed: F2 floors stay above {} through radius {}, Z2 control {:.4e} at radius {}",
            report.threshold,
            report.rows.last().map_or(0, |r| r.radius),
            report.control_floor,
            report.control_radius
        )
    } else {
        let mut why = Vec::new();
        if !report.above_threshold() {
            why.push(format!("a floor fell to {} or below", report.threshold));
        }
        if !report.non_increasing() {
            why.push("floors increase".to_string());
        }
        if !report.control_below() {
            why.push(format!("control floor {:.4e} not below {}", report.control_floor, report.control_threshold));
        }
        if report.prob_n_gap() > 1e-12 {
            why.push(format!("prob(N) gap {:.3e}", report.prob_n_gap()));
        }
        format!("failed: {}", why.join("; "))
    };
    Ok(Outcome {
        result: json!({
            "rows": rows,
            "threshold": float(report.threshold),
            "control": {
                "group": "Z2",
                "radius": report.control_radius,
                "floor": float(report.control_floor),
                "threshold": float(report.control_threshold),
            },
            "checks": {
                "above_threshold": report.above_threshold(),
                "non_increasing": report.non_increasing(),
                "control_below": report.control_below(),
                "prob_n_gap": float(report.prob_n_gap()),
            },
        }),
        tables: vec![table],
        passed,
        summary,
    })
}

fn embed(s: &EmbedSpec, seed: u64) -> Result<Outcome> {
    s.domain.validate()?;
    let members = s.members.unwrap_or(s.domain.dim().unwrap_or(0) + 1 + DEFAULT_EXTRA_MEMBERS);
    let family = default_family_seeded(&s.domain, members, seed)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let report = verify_embedding(&family, s.samples, &mut rng);

    let dim = s.domain.dim().unwrap_or(0);
    let mut header: Vec<String> = vec!["sample".into()];
    header.extend((0..dim).map(|i| format!("x{i}")));
    header.extend((0..family.len()).map(|i| format!("t{i}")));
    let header_refs: Vec<&str> = header.iter().map(String::as_str).collect();
    let mut cloud = Table::new("points", &header_refs);
    for k in 0..s.samples {
        let x = s.domain.sample(&mut rng);
        let t = family.embed_unchecked(&x);
        let mut row: Vec<Cell> = vec![k.into()];
        row.extend(x.iter().map(|v| Cell::Float(*v)));
        row.extend(t.iter().map(|v| Cell::Float(*v)));
        cloud.push(row);
    }

    let mut failures = Vec::new();
    if let EmbeddingVerdict::Failed { .. } = report.verdict {
        failures.push("not injective".to_string());
    }
    if report.affine_residual > EMBED_AFFINE_TOLERANCE {
        failures.push(format!("affine residual {:.3e}", report.affine_residual));
    }
    if !at_least(report.injectivity_margin, f64::MIN_POSITIVE) {
        failures.push("vertices collide".to_string());
    }
    let conjugation = if s.conjugate {
        let ConvexModel::Simplex { coords } = s.domain else {
            return Err(CoreError::domain("conjugation is available for simplex domains only").into());
        };
        let action = AffineAction::coordinate_permutations(coords)?;
        let conj = conjugated_action(&action, &family)?;
        let residual = commutation_residual(&action, &conj, s.commutation_radius, s.commutation_samples, &mut rng)?;
        let q = euclidean();
        let gens = action.generators().generators().to_vec();
        let mut worst_excess = f64::NEG_INFINITY;
        let mut worst_ratio: f64 = 0.0;
        for _ in 0..s.commutation_samples {
            let x = action.model().sample(&mut rng);
            let original = action.displacement(&x, &gens, &q)?;
            let moved = conj.action.displacement(&conj.set.embed_unchecked(&x), &gens, &q)?;
            for (d0, d1) in original.per_generator.iter().zip(&moved.per_generator) {
                worst_excess = worst_excess.max(d1 - report.modulus * d0);
                if *d0 > 0.0 {
                    worst_ratio = worst_ratio.max(d1 / d0);
                }
            }
        }
        if residual > COMMUTATION_TOLERANCE {
            failures.push(format!("commutation residual {residual:.3e}"));
        }
        if worst_excess > MODULUS_SLACK {
            failures.push(format!("displacement exceeds modulus bound by {worst_excess:.3e}"));
        }
        json!({
            "commutation_residual": float(residual),
            "radius": s.commutation_radius,
            "samples": s.commutation_samples,
            "worst_excess": float(worst_excess),
            "worst_displacement_ratio": float(worst_ratio),
        })
    } else {
        Value::Null
    };
    let summary = format!(
        "{} functionals, affine residual {:.3e}, moduli {:.4}/{:.4}{}",
        family.len(),
        report.affine_residual,
        report.modulus,
        report.inverse_modulus,
        if failures.is_empty() { String::new() } else { format!("; {}", failures.join("; ")) }
    );
    Ok(Outcome {
        result: json!({
            "members": family.len(),
            "samples": s.samples,
            "affine_residual": float(report.affine_residual),
            "injectivity_margin": float(report.injectivity_margin),
            "modulus": float(report.modulus),
            "inverse_modulus": float(report.inverse_modulus),
            "sampled_modulus": float(report.sampled_modulus),
            "sampled_inverse_modulus": float(report.sampled_inverse_modulus),
            "max_image_norm": float(report.max_image_norm),
            "injective": matches!(report.verdict, EmbeddingVerdict::Passed),
            "conjugation": conjugation,
        }),
        tables: vec![cloud],
        passed: failures.is_empty(),
        summary,
    })
}
