use std::fmt;
use std::path::Path;

use serde::Serialize;

use eprb_core::checks::{chsh_scan, chsh_value, standard_quadruple, CheckError, ChshResult, ChshScan};
use eprb_core::contextuality::{
    analyse, preparation_context_mode, ContextualityError, EnumerationReport, PreparationMode,
};
use eprb_core::grid::SettingsGrid;
use eprb_core::models::{by_name, load_table_model, zoo, HvModel};
use eprb_core::pipeline::{
    angle_scan, build_classification_table, model_consistency, run_model_steps, run_pipeline, ModelConsistency,
    ModelStepReport, PipelineReport,
};
use eprb_core::quantum::{singlet_state, IdentityReport, PauliSet, QuantumState};
use eprb_core::report::{self, CsvTable, Envelope, ReportMeta};
use eprb_core::{tolerance, CheckConfig, Setting, Target};

use crate::{CheckArgs, ChshArgs, Common, Format, KsArgs, PipelineArgs, ScanArgs};

pub const EXIT_USAGE: u8 = 2;
pub const EXIT_ASSERTION: u8 = 3;

const QUANTUM_NAMES: [&str; 3] = ["qm", "quantum", "singlet"];

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Assertion(String),
}

impl Failure {
    pub fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => EXIT_USAGE,
            Failure::Assertion(_) => EXIT_ASSERTION,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) => write!(f, "usage error: {m}"),
            Failure::Assertion(m) => write!(f, "assertion failed: {m}"),
        }
    }
}

fn usage(e: impl fmt::Display) -> Failure {
    Failure::Usage(e.to_string())
}

fn assertion(e: impl fmt::Display) -> Failure {
    Failure::Assertion(e.to_string())
}

fn check_error(e: CheckError) -> Failure {
    match e {
        CheckError::Settings(_) | CheckError::Grid(_) => usage(e),
        _ => assertion(e),
    }
}

type CmdResult<T> = Result<T, Failure>;

fn degrees(name: &str, value: f64) -> CmdResult<Setting> {
    Setting::try_from_degrees(value).map_err(|e| usage(format!("--{name}: {e}")))
}

fn parse_grid(common: &Common) -> CmdResult<(SettingsGrid, String)> {
    let parts: Vec<&str> = common.grid.split(':').collect();
    let [start, stop, step] = parts.as_slice() else {
        return Err(usage(format!("--grid must be START:STOP:STEP, got {:?}", common.grid)));
    };
    let parse = |s: &str| {
        s.trim()
            .parse::<f64>()
            .map_err(|_| usage(format!("--grid: {s:?} is not a number")))
    };
    let (start, stop, mut step) = (parse(start)?, parse(stop)?, parse(step)?);
    if let Some(s) = common.grid_step {
        step = s;
    }
    let grid = SettingsGrid::square_degrees(start, stop, step).map_err(usage)?;
    Ok((grid, format!("{start}:{stop}:{step}")))
}

fn config(common: &Common) -> CmdResult<(CheckConfig, String)> {
    let (grid, spec) = parse_grid(common)?;
    let mut config = CheckConfig::default().with_grid(grid);
    if let Some(t) = common.tolerance {
        if !(t.is_finite() && t > 0.0) {
            return Err(usage(format!("--tol must be positive, got {t}")));
        }
        config.tolerance = t;
    }
    if let Some(s) = common.sigma {
        if !(s.is_finite() && s > 0.0) {
            return Err(usage(format!("--sigma must be positive, got {s}")));
        }
        config.sigma = s;
    }
    Ok((config, spec))
}

fn meta(command: &str, common: &Common, config: &CheckConfig, spec: &str) -> ReportMeta {
    ReportMeta::new(command, common.seed, common.samples as usize, spec, config)
}

fn load_model(name: Option<&str>, file: Option<&Path>, common: &Common) -> CmdResult<Option<HvModel>> {
    let model = match (name, file) {
        (_, Some(path)) => load_table_model(path).map_err(usage)?,
        (Some(name), None) if QUANTUM_NAMES.contains(&name.trim().to_ascii_lowercase().as_str()) => return Ok(None),
        (Some(name), None) => by_name(name).map_err(usage)?,
        (None, None) => return Ok(None),
    };
    Ok(Some(model.with_sampling(common.samples as usize, common.seed)))
}

/// Writes the report and prints `summary` unless the report goes to stdout.
fn emit<T: Serialize>(common: &Common, meta: ReportMeta, payload: T, table: CsvTable, summary: &str) -> CmdResult<()> {
    let to_stdout = common.out.as_deref() == Some(Path::new("-"));
    if !to_stdout {
        print!("{summary}");
    }
    let Some(out) = &common.out else {
        return Ok(());
    };
    let text = match common.format {
        Format::Json => Envelope::new(meta.clone(), payload).to_json().map(|s| s + "\n"),
        Format::Csv => table.to_string(&meta),
    }
    .map_err(usage)?;
    if to_stdout {
        print!("{text}");
    } else {
        std::fs::write(out, text).map_err(|e| usage(format!("cannot write {}: {e}", out.display())))?;
        println!("report written to {}", out.display());
    }
    Ok(())
}

fn mark(ok: bool) -> &'static str {
    if ok {
        "✓"
    } else {
        "✗"
    }
}

#[derive(Debug, Serialize)]
struct PipelineOutput {
    quantum: PipelineReport,
    #[serde(skip_serializing_if = "Option::is_none")]
    model: Option<ModelRun>,
}

#[derive(Debug, Serialize)]
struct ModelRun {
    name: String,
    steps: Vec<ModelStepReport>,
    consistency: ModelConsistency,
}

pub fn pipeline(args: PipelineArgs) -> CmdResult<()> {
    let (config, spec) = config(&args.common)?;
    let a = degrees("a", args.a)?;
    let b = degrees("b", args.b)?;
    let model = load_model(args.model.as_deref(), args.model_file.as_deref(), &args.common)?;
    let report = run_pipeline(a, b, args.outcome_a, args.outcome_b, args.common.seed, &config).map_err(assertion)?;

    let mut summary = String::new();
    let mut failures = Vec::new();
    for step in &report.steps {
        let q = &step.quantities;
        let p = q.joint.table();
        summary += &format!(
            "step {:?}: P(++,+-,-+,--) = ({:.6}, {:.6}, {:.6}, {:.6})  <A> = {:.6}  <B> = {:.6}  <AB> = {:.6}  cov = {:.6}  separable {}\n",
            step.step,
            p[0][0],
            p[0][1],
            p[1][0],
            p[1][1],
            q.mean_a,
            q.mean_b,
            q.joint_expectation,
            q.covariance,
            mark(step.flags.separable),
        );
        if (q.joint.total() - 1.0).abs() > tolerance::EXACT {
            failures.push(format!("step {:?} joint not normalised", step.step));
        }
        if step.delta_check == Some(false) {
            failures.push(format!("step {:?} product-state delta check", step.step));
        }
    }
    summary += &format!(
        "A' = {}{}  B' = {}{}\n",
        report.outcome_a,
        if report.sampled[0] { " (sampled)" } else { "" },
        report.outcome_b,
        if report.sampled[1] { " (sampled)" } else { "" },
    );

    let model_run = match &model {
        Some(m) => {
            let mut steps = Vec::new();
            for mode in args.conditioning.modes() {
                let r = run_model_steps(m, a, report.outcome_a, b, mode, &config).map_err(assertion)?;
                let pred = r.point.prediction(mode);
                summary += &format!(
                    "model {} step II ({mode}): <B> = {:.6} ± {:.2e}  quantum {:.6}  point {}  grid {} ({} failures / {})\n",
                    m.name(),
                    pred.value,
                    pred.error,
                    r.point.quantum,
                    mark(r.consistent_at_point),
                    mark(r.grid.consistent),
                    r.grid.failures,
                    r.grid.evaluated,
                );
                steps.push(r);
            }
            let consistency = model_consistency(m, &config).map_err(assertion)?;
            summary += &format!(
                "model {} QM consistency: step I {}  step II bayes {}  step II frozen {}  step III {}\n",
                m.name(),
                mark(consistency.step1.consistent),
                mark(consistency.step2_bayes.consistent),
                mark(consistency.step2_frozen.consistent),
                mark(consistency.step3.consistent),
            );
            Some(ModelRun {
                name: m.name().to_string(),
                steps,
                consistency,
            })
        }
        None => None,
    };

    let table = report::pipeline_table(&report);
    let mut meta = meta("pipeline", &args.common, &config, &spec);
    if model_run.is_some() {
        meta = meta.with_conditioning(format!("{:?}", args.conditioning).to_lowercase());
    }
    emit(
        &args.common,
        meta,
        PipelineOutput {
            quantum: report,
            model: model_run,
        },
        table,
        &summary,
    )?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(assertion(failures.join("; ")))
    }
}

pub fn check(args: CheckArgs) -> CmdResult<()> {
    let (config, spec) = config(&args.common)?;
    let mut models = if args.all { zoo() } else { Vec::new() };
    for name in &args.model {
        match load_model(Some(name), None, &args.common)? {
            Some(m) => models.push(m),
            None => {
                return Err(usage(format!(
                    "{name} is the quantum state, not a hidden-variable model"
                )))
            }
        }
    }
    for path in &args.model_file {
        models.extend(load_model(None, Some(path), &args.common)?);
    }
    if models.is_empty() {
        return Err(usage("no model given (use --model, --model-file or --all)"));
    }
    let models: Vec<HvModel> = models
        .into_iter()
        .map(|m| m.with_sampling(args.common.samples as usize, args.common.seed))
        .collect();
    let table = build_classification_table(&models, &config).map_err(assertion)?;

    let mut summary = String::new();
    for row in &table.rows {
        let c = &row.classification;
        let q = row.qm_consistent();
        summary += &format!(
            "{}: PI {} OI {} Fact {} LC {} NS {} Sep(λ) {} Sep {} det {}  max|S| = {:.6}  QM[I, II bayes, II frozen, III] = [{} {} {} {}]\n",
            row.model,
            mark(c.parameter_independence),
            mark(c.outcome_independence),
            mark(c.factorizability),
            mark(c.local_causality),
            mark(c.no_signalling),
            mark(c.separability_per_lambda),
            mark(c.separability_ensemble),
            mark(c.deterministic),
            row.report.chsh.max_abs_s,
            mark(q[0]),
            mark(q[1]),
            mark(q[2]),
            mark(q[3]),
        );
        for e in &row.report.errors {
            summary += &format!("  error: {e}\n");
        }
    }
    for c in &table.counterexamples {
        summary += &format!("counterexample: {} violates {}\n", c.model, c.implication.statement);
    }
    let consistent = table.is_consistent();
    let csv = report::classification_table(&table.rows);
    emit(
        &args.common,
        meta("check", &args.common, &config, &spec),
        &table,
        csv,
        &summary,
    )?;
    if consistent {
        Ok(())
    } else {
        Err(assertion(
            "classification table has failed implications or inconsistent verdicts",
        ))
    }
}

#[derive(Debug, Serialize)]
struct ChshOutput {
    target: String,
    #[serde(skip_serializing_if = "Option::is_none")]
    result: Option<ChshResult>,
    #[serde(skip_serializing_if = "Option::is_none")]
    scan: Option<ChshScan>,
}

pub fn chsh(args: ChshArgs) -> CmdResult<()> {
    let (config, spec) = config(&args.common)?;
    let model = load_model(Some(&args.model), args.model_file.as_deref(), &args.common)?;
    let state: QuantumState = singlet_state();
    let (target, name, classical): (Target<'_>, String, bool) = match &model {
        Some(m) => (
            Target::Model(m),
            m.name().to_string(),
            m.flags().claims_pi && m.flags().claims_oi,
        ),
        None => (Target::State(&state), "qm".to_string(), false),
    };
    let settings = match &args.angles {
        Some(v) => {
            let [a, a2, b, b2] = v.as_slice() else {
                return Err(usage("--angles takes exactly four values a,a',b,b'"));
            };
            Some([
                degrees("angles", *a)?,
                degrees("angles", *a2)?,
                degrees("angles", *b)?,
                degrees("angles", *b2)?,
            ])
        }
        None if args.standard_angles || args.scan.is_none() => Some(standard_quadruple()),
        None => None,
    };

    let mut summary = String::new();
    let mut failures = Vec::new();
    let mut table = CsvTable::new(&report::CHSH_COLUMNS);
    let result = match settings {
        Some([a, a2, b, b2]) => {
            let r = chsh_value(target, a, a2, b, b2, &config).map_err(check_error)?;
            summary += &format!(
                "{name}: a = {}, a' = {}, b = {}, b' = {}  S = {:.12}  |S| = {:.12} ± {:.2e}  classical bound {}  Tsirelson bound {}\n",
                a, a2, b, b2, r.s, r.abs_s, r.std_error,
                if r.within_classical { "respected" } else { "exceeded" },
                if r.within_quantum { "respected" } else { "exceeded" },
            );
            table.push(report::chsh_row(&name, &r));
            Some(r)
        }
        None => None,
    };
    let scan = match args.scan {
        Some(step) => {
            let s = chsh_scan(target, step, &config).map_err(check_error)?;
            let [a, a2, b, b2] = s.argmax.settings;
            summary += &format!(
                "{name}: scan step {step}°, {} angles, {} quadruples, max |S| = {:.12} at a = {a}, a' = {a2}, b = {b}, b' = {b2}\n",
                s.angles.len(),
                s.quadruples,
                s.max_abs_s,
            );
            table.push(report::chsh_row(&format!("{name}:scan-argmax"), &s.argmax));
            Some(s)
        }
        None => None,
    };
    for r in result.iter().chain(scan.as_ref().map(|s| &s.argmax)) {
        if !r.within_quantum {
            failures.push(format!("|S| = {} exceeds the Tsirelson bound", r.abs_s));
        }
        if classical && !r.within_classical {
            failures.push(format!("|S| = {} exceeds 2 for a model claiming PI and OI", r.abs_s));
        }
    }
    emit(
        &args.common,
        meta("chsh", &args.common, &config, &spec),
        ChshOutput {
            target: name,
            result,
            scan,
        },
        table,
        &summary,
    )?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(assertion(failures.join("; ")))
    }
}

#[derive(Debug, Serialize)]
struct KsOutput {
    #[serde(skip_serializing_if = "Option::is_none")]
    mode: Option<PreparationMode>,
    identities: IdentityReport,
    enumerations: Vec<EnumerationReport>,
}

pub fn ks(args: KsArgs) -> CmdResult<()> {
    let (config, spec) = config(&args.common)?;
    let paulis = match args.perturb {
        Some(eps) if eps.is_finite() => PauliSet::perturbed(eps),
        Some(eps) => return Err(usage(format!("--perturb must be finite, got {eps}"))),
        None => PauliSet::default(),
    };
    let identities = paulis.verify();
    let mut summary = format!(
        "operator identities: commutators {:.1e}, {:.1e}; four-fold sum {:.1e}  {}\n",
        identities.commutator_xx_yy,
        identities.commutator_xy_yx,
        identities.anticombination,
        if identities.passed { "pass" } else { "FAIL" },
    );
    let mut failures = Vec::new();
    let enumerations = if !identities.passed {
        failures.push(ContextualityError::Identities(identities).to_string());
        Vec::new()
    } else if let Some(mode) = args.mode {
        vec![preparation_context_mode(mode)]
    } else {
        let r = analyse(&paulis).map_err(assertion)?;
        r.enumerations().into_iter().cloned().collect()
    };
    for e in &enumerations {
        summary += &format!("{}\n", e.summary());
        if e.preparation_mode == Some(PreparationMode::Shared) && e.satisfying != 0 {
            failures.push(format!("{} found satisfying shared assignments", e.summary()));
        }
    }
    let table = report::enumeration_table(&enumerations.iter().collect::<Vec<_>>());
    let meta = meta("ks", &args.common, &config, &spec);
    emit(
        &args.common,
        meta,
        KsOutput {
            mode: args.mode,
            identities,
            enumerations,
        },
        table,
        &summary,
    )?;
    if failures.is_empty() {
        Ok(())
    } else {
        Err(assertion(failures.join("; ")))
    }
}

const MAX_SCAN_POINTS: usize = 100_000;

pub fn scan(args: ScanArgs) -> CmdResult<()> {
    let (config, spec) = config(&args.common)?;
    let a = degrees("a", args.a)?;
    if !(args.step.is_finite() && args.step > 0.0) {
        return Err(usage(format!("--step must be positive, got {}", args.step)));
    }
    if !(args.from.is_finite() && args.to.is_finite() && args.from <= args.to) {
        return Err(usage(format!(
            "need finite --from <= --to, got {} and {}",
            args.from, args.to
        )));
    }
    let count = ((args.to - args.from) / args.step + 1e-9).floor() as usize + 1;
    if count > MAX_SCAN_POINTS {
        return Err(usage(format!(
            "scan would have {count} points (limit {MAX_SCAN_POINTS})"
        )));
    }
    let thetas: Vec<f64> = (0..count).map(|i| args.from + i as f64 * args.step).collect();
    let model = load_model(args.model.as_deref(), args.model_file.as_deref(), &args.common)?;
    let points = angle_scan(a, &thetas, args.outcome_a, model.as_ref()).map_err(assertion)?;

    let mut summary = format!(
        "scan: a = {a}, theta from {} to {} in {} steps, A' = {}\n",
        args.from, args.to, args.step, args.outcome_a
    );
    if let Some(m) = &model {
        let worst = |f: &dyn Fn(&eprb_core::pipeline::ScanPoint) -> f64| {
            points.iter().map(f).filter(|x| x.is_finite()).fold(0.0_f64, f64::max)
        };
        let dev_e = worst(&|p| (p.model.unwrap().correlation - p.quantum_correlation).abs());
        let dev_b = worst(&|p| (p.model.unwrap().bayes - p.quantum_conditioned).abs());
        let dev_f = worst(&|p| (p.model.unwrap().frozen - p.quantum_conditioned).abs());
        summary += &format!(
            "{}: max deviation from quantum  E {:.3e}  bayes {:.3e}  frozen {:.3e}\n",
            m.name(),
            dev_e,
            dev_b,
            dev_f
        );
    }
    let table = report::scan_table(&points);
    emit(
        &args.common,
        meta("scan", &args.common, &config, &spec),
        points,
        table,
        &summary,
    )
}
