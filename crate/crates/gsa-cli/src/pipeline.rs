//! Pipeline stages behind the subcommands. `run` chains the stages through
//! the same artifact files the standalone subcommands use, so composing
//! sample / evaluate / analyze by hand gives byte-identical results.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use gsa::metamodel::{fit_polynomial_validated, sobol_via_metamodel, PolySpec};
use gsa::models::{evaluate, run_external, EvalError, EvaluationSet};
use gsa::regression::regression_indices;
use gsa::report::{cobweb, main_effects, write_cobweb_csv, write_main_effects_csv, write_scatter_csv};
use gsa::sampling::{
    default_morris_delta, lhs, monte_carlo, morris_trajectories, saltelli_design, DesignKind,
    MorrisDesign, PickFreezeDesign, SampleMatrix,
};
use gsa::screening::{elementary_effects, morris_measures, MorrisThresholds};
use gsa::sobol::{bootstrap_confidence, estimate_second_order, estimate_sobol, SobolResult};

use crate::artifacts::{
    eval_from_csv, read_csv, read_meta, write_design_csv, write_eval_csv, write_meta, DesignMeta,
    MorrisMeta, PickFreezeMeta,
};
use crate::config::{Problem, ResolvedModel};
use crate::CliError;

pub const BLOCKS: [&str; 4] = ["morris", "regression", "sobol", "metamodel"];

fn ensure_out_dir(problem: &Problem) -> Result<(), CliError> {
    std::fs::create_dir_all(&problem.out_dir).map_err(|e| {
        CliError::config(format!("cannot create {}: {e}", problem.out_dir.display()))
    })
}

fn out_path(problem: &Problem, name: &str) -> PathBuf {
    problem.out_dir.join(name)
}

/// Generate the design an analysis block needs and persist it with its
/// metadata sidecar. Returns the design CSV path.
pub fn stage_sample(problem: &Problem, block: &str) -> Result<PathBuf, CliError> {
    ensure_out_dir(problem)?;
    let seed = problem.seed;
    let (sample, morris, pick_freeze) = match block {
        "morris" => {
            let cfg = problem.analyses.morris.as_ref().ok_or_else(|| {
                CliError::config("config has no analyses.morris block")
            })?;
            let delta = cfg.delta.unwrap_or_else(|| default_morris_delta(cfg.levels));
            let design = morris_trajectories(&problem.space, cfg.r, cfg.levels, delta, seed)
                .map_err(|e| CliError::config(format!("analyses.morris: {e}")))?;
            (
                design.sample().clone(),
                Some(MorrisMeta { r: cfg.r, levels: cfg.levels, delta }),
                None,
            )
        }
        "regression" => {
            let cfg = problem.analyses.regression.as_ref().ok_or_else(|| {
                CliError::config("config has no analyses.regression block")
            })?;
            let sample = match cfg.design.as_str() {
                "lhs" => lhs(&problem.space, cfg.n, seed),
                _ => monte_carlo(&problem.space, cfg.n, seed),
            }
            .map_err(|e| CliError::config(format!("analyses.regression: {e}")))?;
            (sample, None, None)
        }
        "sobol" => {
            let cfg = problem.analyses.sobol.as_ref().ok_or_else(|| {
                CliError::config("config has no analyses.sobol block")
            })?;
            let design = saltelli_design(&problem.space, cfg.n, seed, cfg.second_order)
                .map_err(|e| CliError::config(format!("analyses.sobol: {e}")))?;
            (
                design.sample().clone(),
                None,
                Some(PickFreezeMeta { base_n: cfg.n, second_order: cfg.second_order }),
            )
        }
        "metamodel" => {
            let cfg = problem.analyses.metamodel.as_ref().ok_or_else(|| {
                CliError::config("config has no analyses.metamodel block")
            })?;
            let sample = lhs(&problem.space, cfg.n, seed)
                .map_err(|e| CliError::config(format!("analyses.metamodel: {e}")))?;
            (sample, None, None)
        }
        other => {
            return Err(CliError::config(format!(
                "unknown analysis block `{other}` (expected one of {BLOCKS:?})"
            )))
        }
    };

    let design_path = out_path(problem, &format!("{block}_design.csv"));
    let meta_path = out_path(problem, &format!("{block}_design.meta.json"));
    write_design_csv(&design_path, &sample, &problem.config_hash)?;
    write_meta(
        &meta_path,
        &DesignMeta {
            config_hash: problem.config_hash.clone(),
            seed,
            design: sample.design().as_str().to_string(),
            names: sample.names().to_vec(),
            n_rows: sample.n_rows(),
            morris,
            pick_freeze,
        },
    )?;
    Ok(design_path)
}

fn meta_path_for(artifact: &Path) -> PathBuf {
    let name = artifact.file_name().unwrap_or_default().to_string_lossy();
    let stem = name
        .strip_suffix("_design.csv")
        .or_else(|| name.strip_suffix("_eval.csv"))
        .unwrap_or(&name);
    artifact.with_file_name(format!("{stem}_design.meta.json"))
}

fn design_kind(meta: &DesignMeta) -> DesignKind {
    match meta.design.as_str() {
        "monte_carlo" => DesignKind::MonteCarlo,
        "lhs" => DesignKind::Lhs,
        "pick_freeze" => DesignKind::PickFreeze,
        "morris" => DesignKind::Morris,
        _ => DesignKind::External,
    }
}

/// Map evaluation failures to exit semantics: a design/schema mismatch is an
/// artifact problem, everything else is a model failure.
fn eval_error(e: EvalError) -> CliError {
    match e {
        EvalError::Schema { .. } => CliError::config(format!("{e}")),
        other => CliError::evaluation(format!("{other}")),
    }
}

/// Append the fixed inputs as constant columns (external models receive the
/// full physical row).
fn with_fixed_columns(problem: &Problem, sample: &SampleMatrix) -> SampleMatrix {
    if problem.fixed.is_empty() {
        return sample.clone();
    }
    let mut names = sample.names().to_vec();
    names.extend(problem.fixed.iter().map(|(n, _)| n.clone()));
    let rows: Vec<Vec<f64>> = sample
        .rows()
        .map(|row| {
            let mut full = row.to_vec();
            full.extend(problem.fixed.iter().map(|&(_, v)| v));
            full
        })
        .collect();
    SampleMatrix::from_rows(names, rows, sample.design(), sample.seed()).expect("non-empty")
}

/// Evaluate the configured model over a design, keeping the evaluation set
/// keyed by the free (sampled) columns.
pub fn evaluate_problem(
    problem: &Problem,
    sample: &SampleMatrix,
) -> Result<EvaluationSet, CliError> {
    match &problem.model {
        ResolvedModel::Builtin(m) => evaluate(m, sample).map_err(eval_error),
        ResolvedModel::External(ext) => {
            let full = with_fixed_columns(problem, sample);
            let eval = run_external(ext, &full).map_err(eval_error)?;
            let output = eval.output(&ext.output_name).expect("runner output").to_vec();
            Ok(EvaluationSet::new(
                sample.clone(),
                vec![(ext.output_name.clone(), output)],
                format!("external:{}", ext.command.join(" ")),
            ))
        }
    }
}

/// Evaluate the model over a persisted design file.
pub fn stage_evaluate(problem: &Problem, design_path: &Path) -> Result<PathBuf, CliError> {
    let meta = read_meta(&meta_path_for(design_path))?;
    let table = read_csv(design_path)?;
    if table.names != problem.space.names() {
        return Err(CliError::config(format!(
            "{}: design columns {:?} do not match the configured space {:?}",
            design_path.display(),
            table.names,
            problem.space.names()
        )));
    }
    let n = table.n_rows();
    let d = table.names.len();
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..d).map(|j| table.columns[j][i]).collect())
        .collect();
    let sample = SampleMatrix::from_rows(table.names, rows, design_kind(&meta), meta.seed)
        .map_err(|e| CliError::config(format!("{}: {e}", design_path.display())))?;
    let eval = evaluate_problem(problem, &sample)?;

    let name = design_path.file_name().unwrap_or_default().to_string_lossy();
    let eval_name = match name.strip_suffix("_design.csv") {
        Some(stem) => format!("{stem}_eval.csv"),
        None => format!("{name}.eval.csv"),
    };
    let eval_path = design_path.with_file_name(eval_name);
    write_eval_csv(&eval_path, &eval, &problem.config_hash)?;
    Ok(eval_path)
}

fn load_eval(
    problem: &Problem,
    eval_path: &Path,
    meta: &DesignMeta,
) -> Result<EvaluationSet, CliError> {
    eval_from_csv(eval_path, &problem.space.names(), design_kind(meta), meta.seed)
}

/// Pick the output column an analysis should target.
fn target_output(problem: &Problem, eval: &EvaluationSet) -> Result<String, CliError> {
    let configured = problem.model.output_name();
    if eval.output(configured).is_some() {
        return Ok(configured.to_string());
    }
    match eval.single_output() {
        Some((name, _)) => Ok(name.to_string()),
        None => Err(CliError::config(format!(
            "evaluation file has outputs {:?}; expected `{configured}` or a single output",
            eval.output_names()
        ))),
    }
}

fn write_result(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text)
        .map_err(|e| CliError::config(format!("cannot write {}: {e}", path.display())))
}

/// Run one analysis block against a persisted evaluation set.
pub fn stage_analyze(
    problem: &Problem,
    block: &str,
    eval_path: &Path,
    meta_path: Option<&Path>,
) -> Result<(), CliError> {
    ensure_out_dir(problem)?;
    let meta = read_meta(&meta_path.map(Path::to_path_buf).unwrap_or_else(|| meta_path_for(eval_path)))?;
    let eval = load_eval(problem, eval_path, &meta)?;
    let output = target_output(problem, &eval)?;
    match block {
        "morris" => analyze_morris(problem, &meta, &eval, &output),
        "regression" => analyze_regression(problem, &eval, &output),
        "sobol" => analyze_sobol(problem, &meta, &eval, &output),
        "metamodel" => analyze_metamodel(problem, &eval, &output),
        other => Err(CliError::config(format!(
            "unknown analysis block `{other}` (expected one of {BLOCKS:?})"
        ))),
    }
}

fn provenance(problem: &Problem) -> String {
    format!("# config_hash={}\n# seed={}\n", problem.config_hash, problem.seed)
}

fn rebuild_morris_design(
    problem: &Problem,
    meta: &DesignMeta,
    eval: &EvaluationSet,
) -> Result<MorrisDesign, CliError> {
    let m = meta.morris.as_ref().ok_or_else(|| {
        CliError::config("design metadata has no morris parameters")
    })?;
    let design = morris_trajectories(&problem.space, m.r, m.levels, m.delta, meta.seed)
        .map_err(|e| CliError::config(format!("cannot rebuild morris design: {e}")))?;
    // The persisted rows must be the regenerated ones; float formatting
    // round-trips exactly, so compare bitwise.
    let sample = eval.sample();
    if sample.n_rows() != design.sample().n_rows()
        || sample.rows().zip(design.sample().rows()).any(|(a, b)| a != b)
    {
        return Err(CliError::config(
            "evaluation rows do not match the design regenerated from metadata",
        ));
    }
    Ok(design)
}

fn analyze_morris(
    problem: &Problem,
    meta: &DesignMeta,
    eval: &EvaluationSet,
    output: &str,
) -> Result<(), CliError> {
    let design = rebuild_morris_design(problem, meta, eval)?;
    let effects = elementary_effects(&design, eval, output)
        .map_err(|e| CliError::analysis(format!("morris: {e}")))?;
    let result = morris_measures(&effects, &problem.space.names(), MorrisThresholds::default())
        .map_err(|e| CliError::analysis(format!("morris: {e}")))?;

    let mut csv = provenance(problem);
    csv.push_str("input,mu,mu_star,sigma,group\n");
    for m in &result.inputs {
        writeln!(csv, "{},{},{},{},{}", m.name, m.mu, m.mu_star, m.sigma, m.group.as_str())
            .unwrap();
    }
    write_result(&out_path(problem, "morris.csv"), &csv)?;

    let mut txt = provenance(problem);
    writeln!(
        txt,
        "Morris screening of `{output}`: r={}, levels={}, delta={}",
        result.r,
        meta.morris.as_ref().unwrap().levels,
        design.delta()
    )
    .unwrap();
    writeln!(txt, "{:<10} {:>12} {:>12} {:>12}  group", "input", "mu", "mu*", "sigma").unwrap();
    for m in &result.inputs {
        writeln!(
            txt,
            "{:<10} {:>12.5} {:>12.5} {:>12.5}  {}",
            m.name,
            m.mu,
            m.mu_star,
            m.sigma,
            m.group.as_str()
        )
        .unwrap();
    }
    write_result(&out_path(problem, "morris_summary.txt"), &txt)
}

fn analyze_regression(
    problem: &Problem,
    eval: &EvaluationSet,
    output: &str,
) -> Result<(), CliError> {
    let y = eval
        .output(output)
        .ok_or_else(|| CliError::analysis(format!("missing output `{output}`")))?;
    let indices = regression_indices(eval.sample(), y)
        .map_err(|e| CliError::analysis(format!("regression: {e}")))?;

    let mut csv = provenance(problem);
    writeln!(csv, "# r_squared={}", indices.r_squared).unwrap();
    writeln!(csv, "# r_squared_ranks={}", indices.r_squared_ranks).unwrap();
    csv.push_str("input,pearson,src,pcc,spearman,srrc,prcc\n");
    for (j, name) in indices.names.iter().enumerate() {
        writeln!(
            csv,
            "{name},{},{},{},{},{},{}",
            indices.pearson[j],
            indices.src[j],
            indices.pcc[j],
            indices.spearman[j],
            indices.srrc[j],
            indices.prcc[j]
        )
        .unwrap();
    }
    write_result(&out_path(problem, "regression.csv"), &csv)?;

    let mut txt = provenance(problem);
    writeln!(txt, "Regression measures of `{output}` on n={} runs", indices.n).unwrap();
    writeln!(
        txt,
        "R2={:.4} (raw), R2={:.4} (ranks); SRC^2 sums to {:.4}",
        indices.r_squared,
        indices.r_squared_ranks,
        indices.src.iter().map(|s| s * s).sum::<f64>()
    )
    .unwrap();
    writeln!(
        txt,
        "{:<10} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9}",
        "input", "pearson", "SRC", "PCC", "spearman", "SRRC", "PRCC"
    )
    .unwrap();
    for (j, name) in indices.names.iter().enumerate() {
        writeln!(
            txt,
            "{:<10} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>9.4}",
            name,
            indices.pearson[j],
            indices.src[j],
            indices.pcc[j],
            indices.spearman[j],
            indices.srrc[j],
            indices.prcc[j]
        )
        .unwrap();
    }
    write_result(&out_path(problem, "regression_summary.txt"), &txt)
}

fn sobol_json(problem: &Problem, result: &SobolResult, output: &str) -> String {
    let ci_bounds = |est: &gsa::sobol::IndexEstimate| match est.ci {
        Some(ci) => (serde_json::json!(ci.lo), serde_json::json!(ci.hi)),
        None => (serde_json::Value::Null, serde_json::Value::Null),
    };
    let inputs: Vec<serde_json::Value> = result
        .inputs
        .iter()
        .map(|i| {
            let (si_lo, si_hi) = ci_bounds(&i.first_order);
            let (sti_lo, sti_hi) = ci_bounds(&i.total);
            serde_json::json!({
                "name": i.name,
                "Si": i.first_order.value,
                "Si_lo": si_lo,
                "Si_hi": si_hi,
                "STi": i.total.value,
                "STi_lo": sti_lo,
                "STi_hi": sti_hi,
            })
        })
        .collect();
    let names = problem.space.names();
    let pairs: Vec<serde_json::Value> = result
        .pairs
        .iter()
        .map(|((i, j), est)| {
            let (lo, hi) = ci_bounds(est);
            serde_json::json!({
                "inputs": [names[*i], names[*j]],
                "Sij": est.value,
                "Sij_lo": lo,
                "Sij_hi": hi,
            })
        })
        .collect();
    let doc = serde_json::json!({
        "config_hash": problem.config_hash,
        "seed": problem.seed,
        "output": output,
        "estimator": result.estimator.as_str(),
        "n": result.base_n,
        "output_variance": result.output_variance,
        "inputs": inputs,
        "pairs": pairs,
    });
    serde_json::to_string_pretty(&doc).expect("serializable") + "\n"
}

fn analyze_sobol(
    problem: &Problem,
    meta: &DesignMeta,
    eval: &EvaluationSet,
    output: &str,
) -> Result<(), CliError> {
    let cfg = problem
        .analyses
        .sobol
        .as_ref()
        .ok_or_else(|| CliError::config("config has no analyses.sobol block"))?;
    let estimator = cfg.estimator()?;
    let pf = meta.pick_freeze.as_ref().ok_or_else(|| {
        CliError::config("design metadata has no pick-freeze parameters")
    })?;
    let design =
        PickFreezeDesign::from_sample(eval.sample().clone(), pf.base_n, pf.second_order)
            .map_err(|e| CliError::config(format!("sobol: {e}")))?;

    let mut result = match &cfg.ci {
        Some(ci) => bootstrap_confidence(
            &design,
            eval,
            output,
            estimator,
            ci.replicates,
            ci.level,
            problem.seed ^ 0x626f6f74,
        ),
        None => estimate_sobol(&design, eval, output, estimator),
    }
    .map_err(|e| CliError::analysis(format!("sobol: {e}")))?;
    if pf.second_order && result.pairs.is_empty() {
        result.pairs = estimate_second_order(&design, eval, output, estimator)
            .map_err(|e| CliError::analysis(format!("sobol: {e}")))?;
    }

    write_result(&out_path(problem, "sobol.json"), &sobol_json(problem, &result, output))?;

    let mut txt = provenance(problem);
    writeln!(
        txt,
        "Sobol' indices of `{output}`: {} at base n={} ({} model runs)",
        result.estimator.describe(),
        result.base_n,
        eval.sample().n_rows()
    )
    .unwrap();
    writeln!(txt, "output variance {:.6}", result.output_variance).unwrap();
    writeln!(txt, "{:<10} {:>9} {:>9}", "input", "Si", "STi").unwrap();
    for i in &result.inputs {
        writeln!(txt, "{:<10} {:>9.4} {:>9.4}", i.name, i.first_order.value, i.total.value)
            .unwrap();
    }
    let names = problem.space.names();
    for ((i, j), est) in &result.pairs {
        writeln!(txt, "S({},{}) = {:.4}", names[*i], names[*j], est.value).unwrap();
    }
    write_result(&out_path(problem, "sobol_summary.txt"), &txt)
}

fn analyze_metamodel(
    problem: &Problem,
    eval: &EvaluationSet,
    output: &str,
) -> Result<(), CliError> {
    let cfg = problem
        .analyses
        .metamodel
        .as_ref()
        .ok_or_else(|| CliError::config("config has no analyses.metamodel block"))?;
    let spec = PolySpec { degree: cfg.degree as usize, interactions: cfg.interactions };
    let mm = fit_polynomial_validated(eval, output, spec)
        .map_err(|e| CliError::analysis(format!("metamodel: {e}")))?;

    let text = provenance(problem) + &mm.to_text();
    write_result(&out_path(problem, "metamodel.txt"), &text)?;

    let mut txt = provenance(problem);
    writeln!(
        txt,
        "Polynomial surrogate of `{output}`: degree {}, interactions {}, trained on n={}",
        cfg.degree, cfg.interactions, mm.training_n
    )
    .unwrap();
    writeln!(txt, "R2={:.4}, LOO-Q2={:.4}", mm.r_squared, mm.loo_q2.unwrap()).unwrap();
    if let Some(base_n) = cfg.sobol_n {
        let via = sobol_via_metamodel(
            &mm,
            &problem.space,
            base_n,
            problem.seed ^ 0x6d6d,
            gsa::sobol::SobolEstimator::Jansen,
        )
        .map_err(|e| CliError::analysis(format!("metamodel sobol: {e}")))?;
        writeln!(txt, "surrogate-based Sobol' indices at base n={base_n}:").unwrap();
        writeln!(txt, "{:<10} {:>9} {:>9}", "input", "Si", "STi").unwrap();
        for i in &via.result.inputs {
            writeln!(txt, "{:<10} {:>9.4} {:>9.4}", i.name, i.first_order.value, i.total.value)
                .unwrap();
        }
        writeln!(
            txt,
            "unexplained output variance share (1 - Q2): {:.4}",
            via.unexplained_variance.unwrap()
        )
        .unwrap();
    }
    write_result(&out_path(problem, "metamodel_summary.txt"), &txt)
}

/// Exploration datasets from a persisted evaluation set.
pub fn stage_report(
    problem: &Problem,
    eval_path: &Path,
    bins: usize,
    top: f64,
) -> Result<(), CliError> {
    ensure_out_dir(problem)?;
    let meta = read_meta(&meta_path_for(eval_path))?;
    let eval = load_eval(problem, eval_path, &meta)?;
    let output = target_output(problem, &eval)?;

    let mut buf = provenance(problem).into_bytes();
    write_scatter_csv(&eval, &output, &mut buf)
        .map_err(|e| CliError::analysis(format!("scatter: {e}")))?;
    write_result(&out_path(problem, "scatter.csv"), &String::from_utf8(buf).unwrap())?;

    let curves = main_effects(&eval, &output, bins)
        .map_err(|e| CliError::analysis(format!("main effects: {e}")))?;
    let mut buf = provenance(problem).into_bytes();
    write_main_effects_csv(&curves, &mut buf)
        .map_err(|e| CliError::analysis(format!("main effects: {e}")))?;
    write_result(&out_path(problem, "main_effects.csv"), &String::from_utf8(buf).unwrap())?;

    let ds = cobweb(&eval, &output, top)
        .map_err(|e| CliError::analysis(format!("cobweb: {e}")))?;
    let mut buf = provenance(problem).into_bytes();
    write_cobweb_csv(&ds, &mut buf).map_err(|e| CliError::analysis(format!("cobweb: {e}")))?;
    write_result(&out_path(problem, "cobweb.csv"), &String::from_utf8(buf).unwrap())
}

/// The monolithic pipeline: every configured block, staged through the same
/// artifact files the standalone subcommands produce.
pub fn run(problem: &Problem) -> Result<(), CliError> {
    let configured: Vec<&str> = BLOCKS
        .iter()
        .copied()
        .filter(|b| match *b {
            "morris" => problem.analyses.morris.is_some(),
            "regression" => problem.analyses.regression.is_some(),
            "sobol" => problem.analyses.sobol.is_some(),
            "metamodel" => problem.analyses.metamodel.is_some(),
            _ => false,
        })
        .collect();
    for block in configured {
        let design_path = stage_sample(problem, block)?;
        let eval_path = stage_evaluate(problem, &design_path)?;
        stage_analyze(problem, block, &eval_path, None)?;
        println!("{block}: done ({})", eval_path.display());
    }
    Ok(())
}
