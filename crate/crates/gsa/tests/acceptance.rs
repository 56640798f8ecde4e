//! Acceptance suite: one test per release criterion, each printing a single
//! PASS/FAIL line (run with `--nocapture` to see them). Criterion 6 is
//! reported but never fails: surrogate-based index accuracy at tiny training
//! budgets is a target, not a gate.

mod common;

use std::time::Instant;

use gsa::distributions::{DistributionSpec, InputSpace};
use gsa::metamodel::{fit_polynomial_validated, loo_q2, sobol_via_metamodel, PolySpec};
use gsa::models::{evaluate, AnalyticModel, EvaluationSet, FixedInputs, FloodModel, Model};
use gsa::regression::regression_indices;
use gsa::report::cobweb;
use gsa::sampling::{
    default_morris_delta, lhs, monte_carlo, morris_trajectories, saltelli_design,
};
use gsa::screening::{elementary_effects, morris_measures, MorrisThresholds};
use gsa::sobol::{bootstrap_confidence, estimate_second_order, estimate_sobol, SobolEstimator};

fn criterion(n: u32, name: &str, pass: bool, detail: &str) {
    println!("criterion {n} [{name}]: {} - {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {n} [{name}] failed: {detail}");
}

fn reduced_flood_model(output: FloodModel) -> FixedInputs<FloodModel> {
    FixedInputs::new(output, gsa::models::flood_fixed_nominals().unwrap())
}

/// Paper's reduced-space input order used throughout: Q, Ks, Zv, Hd, Cb.
const REDUCED: [&str; 5] = ["Q", "Ks", "Zv", "Hd", "Cb"];

// 1. Morris screening on the full 8-input flood space: the three inputs with
// near-degenerate supports (Zm, L, B) screen out, overflow S behaves
// quasi-monotonically, and the cost output shows nonlinearity in Hd or Q.
#[test]
fn criterion_1_morris_screening() {
    let start = Instant::now();
    let space = gsa::models::flood_space();
    let design = morris_trajectories(&space, 10, 4, default_morris_delta(4), 101).unwrap();
    let names = space.names();

    let eval_s = evaluate(&FloodModel::overflow(), design.sample()).unwrap();
    let eval_cp = evaluate(&FloodModel::cost(), design.sample()).unwrap();
    let measures_s = morris_measures(
        &elementary_effects(&design, &eval_s, "S").unwrap(),
        &names,
        MorrisThresholds::default(),
    )
    .unwrap();
    let measures_cp = morris_measures(
        &elementary_effects(&design, &eval_cp, "Cp").unwrap(),
        &names,
        MorrisThresholds::default(),
    )
    .unwrap();
    let elapsed = start.elapsed();

    let mut detail = String::new();
    let mut pass = true;
    for measures in [&measures_s, &measures_cp] {
        let max_mu_star =
            measures.inputs.iter().map(|m| m.mu_star).fold(0.0, f64::max);
        for negligible in ["Zm", "L", "B"] {
            let m = measures.inputs.iter().find(|m| m.name == negligible).unwrap();
            if m.mu_star > 0.05 * max_mu_star {
                pass = false;
                detail.push_str(&format!(
                    "{negligible} above the 5% line (mu*={:.3} = {:.0}% of max {:.3}); ",
                    m.mu_star,
                    100.0 * m.mu_star / max_mu_star,
                    max_mu_star
                ));
            }
        }
    }
    for m in &measures_s.inputs {
        let max_mu_star =
            measures_s.inputs.iter().map(|m| m.mu_star).fold(0.0, f64::max);
        if m.mu_star >= 0.05 * max_mu_star && m.sigma > 0.5 * m.mu_star {
            pass = false;
            detail.push_str(&format!(
                "S not quasi-linear in {} (sigma={:.3}, mu*={:.3}); ",
                m.name, m.sigma, m.mu_star
            ));
        }
    }
    let cp_nonlinear = measures_cp
        .inputs
        .iter()
        .filter(|m| m.name == "Hd" || m.name == "Q")
        .any(|m| m.sigma >= 0.5 * m.mu_star);
    if !cp_nonlinear {
        pass = false;
        detail.push_str("Cp shows no nonlinearity in Hd or Q; ");
    }
    if elapsed.as_secs_f64() >= 1.0 {
        pass = false;
        detail.push_str(&format!("runtime {:.2}s >= 1s; ", elapsed.as_secs_f64()));
    }
    if detail.is_empty() {
        detail = format!(
            "r=10, 90 runs, Zm/L/B negligible on both outputs, {:.0}ms",
            elapsed.as_secs_f64() * 1e3
        );
    }
    criterion(1, "morris screening", pass, &detail);
}

// 2. SRC² decomposition of overflow S on the reduced 5-input space.
#[test]
fn criterion_2_src_squared() {
    let start = Instant::now();
    let space = gsa::models::flood_space_reduced();
    let sample = monte_carlo(&space, 10_000, 202).unwrap();
    let model = reduced_flood_model(FloodModel::overflow());
    let eval = evaluate(&model, &sample).unwrap();
    let indices = regression_indices(sample_of(&eval), eval.output("S").unwrap()).unwrap();
    let elapsed = start.elapsed();

    let targets = [("Q", 0.28), ("Ks", 0.12), ("Zv", 0.15), ("Hd", 0.26), ("Cb", 0.03)];
    let mut pass = indices.r_squared >= 0.95;
    let mut detail = format!("R2={:.3}", indices.r_squared);
    if !pass {
        detail.push_str(" < 0.95");
    }
    for (name, target) in targets {
        let j = indices.names.iter().position(|n| n == name).unwrap();
        let src2 = indices.src[j] * indices.src[j];
        detail.push_str(&format!(", {name}={src2:.3}"));
        if (src2 - target).abs() > 0.06 {
            pass = false;
            detail.push_str(&format!(" (target {target}±0.06)"));
        }
    }
    if elapsed.as_secs_f64() >= 5.0 {
        pass = false;
        detail.push_str(&format!(", runtime {:.2}s >= 5s", elapsed.as_secs_f64()));
    }
    criterion(2, "SRC^2 decomposition", pass, &detail);
}

fn sample_of(eval: &EvaluationSet) -> &gsa::sampling::SampleMatrix {
    eval.sample()
}

/// Criterion-3 reference pipeline, shared with the surrogate comparison.
fn direct_cost_sobol() -> gsa::sobol::SobolResult {
    let space = gsa::models::flood_space_reduced();
    let design = saltelli_design(&space, 10_000, 303, false).unwrap();
    let model = reduced_flood_model(FloodModel::cost());
    let eval = evaluate(&model, design.sample()).unwrap();
    estimate_sobol(&design, &eval, "Cp", SobolEstimator::Jansen).unwrap()
}

// 3. First-order and total indices of the cost output.
#[test]
fn criterion_3_sobol_indices_cost() {
    let start = Instant::now();
    let result = direct_cost_sobol();
    let elapsed = start.elapsed();

    let first_targets = [0.355, 0.159, 0.183, 0.125, 0.038];
    let total_targets = [0.482, 0.253, 0.229, 0.181, 0.038];
    let mut pass = true;
    let mut detail = String::new();
    for (k, name) in REDUCED.iter().enumerate() {
        let input = result.inputs.iter().find(|i| i.name == *name).unwrap();
        let (si, sti) = (input.first_order.value, input.total.value);
        detail.push_str(&format!("{name}: S={si:.3}/T={sti:.3} "));
        if (si - first_targets[k]).abs() > 0.03 {
            pass = false;
            detail.push_str(&format!("(S target {}±0.03) ", first_targets[k]));
        }
        if (sti - total_targets[k]).abs() > 0.03 {
            pass = false;
            detail.push_str(&format!("(T target {}±0.03) ", total_targets[k]));
        }
    }
    if elapsed.as_secs_f64() >= 60.0 {
        pass = false;
        detail.push_str(&format!("runtime {:.1}s >= 60s", elapsed.as_secs_f64()));
    }
    criterion(3, "sobol indices of cost", pass, detail.trim());
}

// 4. Second-order interaction between flowrate and friction on the cost.
#[test]
fn criterion_4_second_order_q_ks() {
    let space = gsa::models::flood_space_reduced();
    let design = saltelli_design(&space, 10_000, 404, true).unwrap();
    let model = reduced_flood_model(FloodModel::cost());
    let eval = evaluate(&model, design.sample()).unwrap();
    let pairs = estimate_second_order(&design, &eval, "Cp", SobolEstimator::Jansen).unwrap();
    let (q, ks) = (0, 1); // reduced-space order Q, Ks, Zv, Hd, Cb
    let s_q_ks = pairs.iter().find(|((i, j), _)| (*i, *j) == (q, ks)).unwrap().1.value;
    let pass = (s_q_ks - 0.06).abs() <= 0.03;
    criterion(
        4,
        "second-order Q x Ks",
        pass,
        &format!("S_Q,Ks = {s_q_ks:.3} (target 0.06±0.03)"),
    );
}

// 5. Predictivity of a degree-1 surrogate of the cost at n=100.
#[test]
fn criterion_5_linear_metamodel_q2() {
    let space = gsa::models::flood_space_reduced();
    let model = reduced_flood_model(FloodModel::cost());
    let mut q2s = Vec::with_capacity(20);
    for seed in 0..20 {
        let sample = lhs(&space, 100, 500 + seed).unwrap();
        let eval = evaluate(&model, &sample).unwrap();
        q2s.push(loo_q2(&eval, "Cp", PolySpec::linear()).unwrap());
    }
    let mean = q2s.iter().sum::<f64>() / q2s.len() as f64;
    let pass = (mean - 0.75).abs() <= 0.08;
    criterion(
        5,
        "linear metamodel LOO-Q2",
        pass,
        &format!("mean over 20 seeds = {mean:.3} (target 0.75±0.08)"),
    );
}

// 6. Soft criterion: indices estimated through a quadratic surrogate trained
// on 100 runs versus the direct pick-freeze estimates. Reported only.
#[test]
fn criterion_6_metamodel_sobol_soft() {
    let space = gsa::models::flood_space_reduced();
    let model = reduced_flood_model(FloodModel::cost());
    let sample = lhs(&space, 100, 606).unwrap();
    let eval = evaluate(&model, &sample).unwrap();
    let mm =
        fit_polynomial_validated(&eval, "Cp", PolySpec::quadratic_with_interactions()).unwrap();
    let via = sobol_via_metamodel(&mm, &space, 10_000, 607, SobolEstimator::Jansen).unwrap();
    let direct = direct_cost_sobol();

    let mut worst: f64 = 0.0;
    let mut detail = String::new();
    for (s, d) in via.result.inputs.iter().zip(&direct.inputs) {
        let rel_s = (s.first_order.value - d.first_order.value).abs() / d.first_order.value;
        let rel_t = (s.total.value - d.total.value).abs() / d.total.value;
        worst = worst.max(rel_s).max(rel_t);
        detail.push_str(&format!(
            "{}: S {:.3} vs {:.3}, T {:.3} vs {:.3}; ",
            s.name, s.first_order.value, d.first_order.value, s.total.value, d.total.value
        ));
    }
    let within = worst < 0.15;
    println!(
        "criterion 6 [metamodel sobol, soft]: {} - worst relative error {:.1}% \
         (target <15%, non-failing), surrogate LOO-Q2 {:.3}; {}",
        if within { "PASS" } else { "DEVIATION" },
        worst * 100.0,
        mm.loo_q2.unwrap(),
        detail.trim()
    );
}

// 7. Estimators agree with an independent quadrature oracle.
#[test]
fn criterion_7_oracle_equivalence() {
    let mut pass = true;
    let mut detail = String::new();

    let check = |space: &InputSpace,
                 f: &(dyn Fn(&[f64]) -> f64 + Sync),
                 m: usize,
                 seed: u64,
                 label: &str,
                 pass: &mut bool,
                 detail: &mut String| {
        let oracle = common::quadrature_sobol(space, m, f);
        let design = saltelli_design(space, 10_000, seed, true).unwrap();
        let model = gsa::models::FnModel::new("y", space.names(), move |v: &[f64]| Ok(f(v)));
        let eval = evaluate(&model, design.sample()).unwrap();
        let result = bootstrap_confidence(
            &design,
            &eval,
            "y",
            SobolEstimator::Jansen,
            500,
            0.95,
            seed + 1,
        )
        .unwrap();
        for (i, input) in result.inputs.iter().enumerate() {
            let se_s = input.first_order.std_error.unwrap().max(1e-6);
            let se_t = input.total.std_error.unwrap().max(1e-6);
            if (input.first_order.value - oracle.first[i]).abs() > 3.0 * se_s {
                *pass = false;
                detail.push_str(&format!(
                    "{label} S_{} {:.4} vs oracle {:.4} (3SE={:.4}); ",
                    i + 1,
                    input.first_order.value,
                    oracle.first[i],
                    3.0 * se_s
                ));
            }
            if (input.total.value - oracle.total[i]).abs() > 3.0 * se_t {
                *pass = false;
                detail.push_str(&format!(
                    "{label} ST_{} {:.4} vs oracle {:.4} (3SE={:.4}); ",
                    i + 1,
                    input.total.value,
                    oracle.total[i],
                    3.0 * se_t
                ));
            }
        }
        for (p, ((i, j), est)) in result.pairs.iter().enumerate() {
            let target = oracle.pairs[p].1;
            assert_eq!(oracle.pairs[p].0, (*i, *j));
            let se = est.std_error.unwrap().max(1e-6);
            if (est.value - target).abs() > 3.0 * se {
                *pass = false;
                detail.push_str(&format!(
                    "{label} S_{}{} {:.4} vs oracle {:.4} (3SE={:.4}); ",
                    i + 1,
                    j + 1,
                    est.value,
                    target,
                    3.0 * se
                ));
            }
        }
    };

    let product_space = InputSpace::new(vec![
        ("x1".into(), DistributionSpec::Uniform { lo: -1.0, hi: 1.0 }),
        ("x2".into(), DistributionSpec::Uniform { lo: -1.0, hi: 1.0 }),
    ])
    .unwrap();
    check(
        &product_space,
        &|v: &[f64]| v[0] * v[1],
        401,
        701,
        "product",
        &mut pass,
        &mut detail,
    );

    let linear_space = InputSpace::new(vec![
        ("x1".into(), DistributionSpec::Uniform { lo: 0.0, hi: 1.0 }),
        ("x2".into(), DistributionSpec::Uniform { lo: -1.0, hi: 2.0 }),
        ("x3".into(), DistributionSpec::Uniform { lo: 5.0, hi: 10.0 }),
    ])
    .unwrap();
    check(
        &linear_space,
        &|v: &[f64]| 2.0 * v[0] - v[1] + 0.5 * v[2],
        101,
        703,
        "linear",
        &mut pass,
        &mut detail,
    );

    if detail.is_empty() {
        detail = "product and linear test functions within 3 SE of quadrature".into();
    }
    criterion(7, "oracle equivalence", pass, detail.trim());
}

// 8. Structural invariants of the estimators and designs.
#[test]
fn criterion_8_estimator_invariants() {
    use rand::{Rng, SeedableRng};
    let mut pass = true;
    let mut detail = String::new();

    // S_Ti >= S_i - 3 SE on random quadratic polynomials.
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(808);
    for model_id in 0..50 {
        let d = rng.gen_range(2..=4);
        let space = InputSpace::new(
            (0..d)
                .map(|j| {
                    (format!("x{}", j + 1), DistributionSpec::Uniform { lo: -1.0, hi: 1.0 })
                })
                .collect(),
        )
        .unwrap();
        let lin: Vec<f64> = (0..d).map(|_| rng.gen_range(-2.0..2.0)).collect();
        let quad: Vec<f64> = (0..d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let cross: Vec<f64> = (0..d * d).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let f = move |v: &[f64]| {
            let mut y = 0.0;
            for i in 0..v.len() {
                y += lin[i] * v[i] + quad[i] * v[i] * v[i];
                for j in (i + 1)..v.len() {
                    y += cross[i * v.len() + j] * v[i] * v[j];
                }
            }
            Ok(y)
        };
        let model = gsa::models::FnModel::new("y", space.names(), f);
        let design = saltelli_design(&space, 2000, 900 + model_id, false).unwrap();
        let eval = evaluate(&model, design.sample()).unwrap();
        let result =
            bootstrap_confidence(&design, &eval, "y", SobolEstimator::Jansen, 200, 0.95, 1)
                .unwrap();
        for input in &result.inputs {
            let se = (input.first_order.std_error.unwrap().powi(2)
                + input.total.std_error.unwrap().powi(2))
            .sqrt();
            if input.total.value < input.first_order.value - 3.0 * se {
                pass = false;
                detail.push_str(&format!(
                    "model {model_id} {}: ST={:.4} < S={:.4} - 3SE; ",
                    input.name, input.total.value, input.first_order.value
                ));
            }
        }
    }

    // Affine output rescaling leaves every index unchanged to 1e-10.
    {
        let space = gsa::models::flood_space_reduced();
        let design = saltelli_design(&space, 2000, 81, true).unwrap();
        let model = reduced_flood_model(FloodModel::cost());
        let eval = evaluate(&model, design.sample()).unwrap();
        let y = eval.output("Cp").unwrap().to_vec();
        let scaled: Vec<f64> = y.iter().map(|v| 40.0 * v - 7.0).collect();
        let mut eval2 = EvaluationSet::new(design.sample().clone(), vec![], "rescaled");
        eval2.add_output("Cp", scaled);
        for est in [SobolEstimator::Saltelli, SobolEstimator::Jansen, SobolEstimator::JanonMonod]
        {
            let r1 = estimate_sobol(&design, &eval, "Cp", est).unwrap();
            let r2 = estimate_sobol(&design, &eval2, "Cp", est).unwrap();
            for (a, b) in r1.inputs.iter().zip(&r2.inputs) {
                if (a.first_order.value - b.first_order.value).abs() > 1e-10
                    || (a.total.value - b.total.value).abs() > 1e-10
                {
                    pass = false;
                    detail.push_str(&format!("rescaling moved {} under {est:?}; ", a.name));
                }
            }
            let p1 = estimate_second_order(&design, &eval, "Cp", est).unwrap();
            let p2 = estimate_second_order(&design, &eval2, "Cp", est).unwrap();
            for (a, b) in p1.iter().zip(&p2) {
                if (a.1.value - b.1.value).abs() > 1e-10 {
                    pass = false;
                    detail.push_str(&format!("rescaling moved pair {:?} under {est:?}; ", a.0));
                }
            }
        }
    }

    // Exact LHS stratification for n in {2, 10, 97}.
    {
        let space = gsa::models::flood_space_reduced();
        for n in [2usize, 10, 97] {
            let m = lhs(&space, n, 33).unwrap();
            for (j, (_, dist)) in space.inputs().iter().enumerate() {
                let mut ps: Vec<f64> =
                    m.column(j).iter().map(|&x| dist.cdf(x).unwrap()).collect();
                ps.sort_by(|a, b| a.partial_cmp(b).unwrap());
                for (k, p) in ps.iter().enumerate() {
                    if *p < k as f64 / n as f64 - 1e-9 || *p > (k + 1) as f64 / n as f64 + 1e-9 {
                        pass = false;
                        detail.push_str(&format!("LHS n={n} col {j} stratum {k} violated; "));
                    }
                }
            }
        }
    }

    // Parallel evaluation bit-identical to a serial pass.
    {
        let space = gsa::models::flood_space();
        let sample = monte_carlo(&space, 5000, 55).unwrap();
        let model = FloodModel::cost();
        let eval = evaluate(&model, &sample).unwrap();
        let serial: Vec<f64> =
            sample.rows().map(|row| model.eval_row(row).unwrap()).collect();
        if eval.output("Cp").unwrap() != serial.as_slice() {
            pass = false;
            detail.push_str("parallel evaluation differs from serial; ");
        }
    }

    if detail.is_empty() {
        detail = "ST>=S-3SE on 50 random polynomials, affine invariance 1e-10, \
                  exact LHS strata, parallel == serial"
            .into();
    }
    criterion(8, "estimator invariants", pass, detail.trim());
}

// 9. Distribution layer: quantile/cdf consistency and sampling correctness.
#[test]
fn criterion_9_distribution_layer() {
    let mut pass = true;
    let mut detail = String::new();
    let space = gsa::models::flood_space();
    for (name, dist) in space.inputs() {
        for k in 1..1000 {
            let p = k as f64 / 1000.0;
            let x = dist.quantile(p).unwrap();
            let round = dist.cdf(x).unwrap();
            if (round - p).abs() > 1e-8 {
                pass = false;
                detail.push_str(&format!("{name} roundtrip error {:.2e} at p={p}; ", (round - p).abs()));
                break;
            }
        }
    }
    // KS distance of the empirical CDF of 1e5 draws per marginal.
    let sample = monte_carlo(&space, 100_000, 909).unwrap();
    for (j, (name, dist)) in space.inputs().iter().enumerate() {
        let mut ps: Vec<f64> =
            sample.column(j).iter().map(|&x| dist.cdf(x).unwrap()).collect();
        ps.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let n = ps.len() as f64;
        let ks = ps
            .iter()
            .enumerate()
            .map(|(k, p)| {
                let hi = ((k + 1) as f64 / n - p).abs();
                let lo = (p - k as f64 / n).abs();
                hi.max(lo)
            })
            .fold(0.0, f64::max);
        if ks > 0.01 {
            pass = false;
            detail.push_str(&format!("{name} KS distance {ks:.4} > 0.01; "));
        }
    }
    if detail.is_empty() {
        detail = "roundtrip <= 1e-8 on 999-point grid, KS <= 0.01 at n=1e5, all 8 marginals"
            .into();
    }
    criterion(9, "distribution layer", pass, detail.trim());
}

// 10. The highlighted top-overflow trajectories have visibly shifted Q and Ks.
#[test]
fn criterion_10_cobweb_claim() {
    let space = gsa::models::flood_space();
    let sample = monte_carlo(&space, 10_000, 1001).unwrap();
    let eval = evaluate(&FloodModel::overflow(), &sample).unwrap();
    let ds = cobweb(&eval, "S", 0.05).unwrap();
    let k = ds.highlight.iter().filter(|&&f| f).count();

    let stats = |name: &str| {
        let j = sample.column_index(name).unwrap();
        let col = sample.column(j);
        let mean = col.iter().sum::<f64>() / col.len() as f64;
        let sd = (col.iter().map(|v| (v - mean).powi(2)).sum::<f64>()
            / (col.len() as f64 - 1.0))
            .sqrt();
        let top: Vec<f64> = col
            .iter()
            .zip(&ds.highlight)
            .filter(|(_, &h)| h)
            .map(|(&v, _)| v)
            .collect();
        let top_mean = top.iter().sum::<f64>() / top.len() as f64;
        (mean, top_mean, sd / (top.len() as f64).sqrt())
    };
    let (q_mean, q_top, q_se) = stats("Q");
    let (ks_mean, ks_top, ks_se) = stats("Ks");
    let mut pass = k == 500;
    let mut detail = format!("{k} rows highlighted; ");
    if q_top <= q_mean + 2.0 * q_se {
        pass = false;
    }
    if ks_top >= ks_mean - 2.0 * ks_se {
        pass = false;
    }
    detail.push_str(&format!(
        "Q: top {q_top:.0} vs overall {q_mean:.0} (+2SE={:.0}); Ks: top {ks_top:.1} vs overall {ks_mean:.1} (-2SE={:.1})",
        q_mean + 2.0 * q_se,
        ks_mean - 2.0 * ks_se
    ));
    criterion(10, "cobweb extremes", pass, &detail);
}
