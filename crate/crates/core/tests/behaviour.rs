use std::sync::Arc;

use rand::Rng;

use mvela::design::{sample_initial_design, Design};
use mvela::encoding::{shap_encode, EncoderConfig};
use mvela::problem::{
    generate_synthetic_suite, Assignment, FnObjective, MixedVariableProblem, SuiteConfig, Template, Value,
    VariableKind, VariableSpec,
};
use mvela::seed;

fn suite() -> Vec<MixedVariableProblem> {
    let config = SuiteConfig {
        templates: vec![
            Template::new("a", 2, 1, 1, 4),
            Template::new("b", 1, 1, 2, 4).hierarchical(),
            Template::new("c", 0, 0, 2, 2),
            Template::new("d", 0, 2, 1, 2),
        ],
    };
    generate_synthetic_suite(&config, 77).unwrap()
}

#[test]
fn every_categorical_variable_matters_somewhere() {
    for problem in suite() {
        let design = sample_initial_design(&problem, 100, 3).unwrap();
        let points: Vec<&Vec<Value>> = design.rows.iter().take(100).collect();
        for (j, var) in problem.variables().iter().enumerate() {
            let VariableKind::Categorical { categories } = &var.kind else {
                continue;
            };
            let differs = points.iter().any(|p| {
                let values: Vec<f64> = (0..categories.len())
                    .map(|l| {
                        let mut q = (*p).clone();
                        q[j] = Value::Category(l);
                        problem.evaluate_relaxed(&Assignment(q)).unwrap()
                    })
                    .collect();
                values.iter().any(|v| *v != values[0])
            });
            assert!(differs, "{}: `{}` never changes the objective", problem.instance_id(), var.name);
        }
    }
}

#[test]
fn category_frequencies_match_the_uniform_marginal() {
    let problem = &suite()[4];
    let d = problem.dim();
    let design = sample_initial_design(problem, 5000, 11).unwrap();
    let n = design.n_rows() as f64;
    assert_eq!(design.n_rows(), 5000 * d);
    for j in design.categorical_columns() {
        let VariableKind::Categorical { categories } = &design.columns[j].kind else {
            unreachable!()
        };
        let p = 1.0 / categories.len() as f64;
        let se = (p * (1.0 - p) / n).sqrt();
        for l in 0..categories.len() {
            let freq = design.rows.iter().filter(|r| r[j] == Value::Category(l)).count() as f64 / n;
            assert!((freq - p).abs() <= 3.0 * se, "level {l}: {freq} vs {p}");
        }
    }
}

fn irrelevant_category_design(n: usize) -> Design {
    let problem = MixedVariableProblem::new(
        "irrelevant",
        vec![
            VariableSpec::continuous("x0", 0.0, 1.0),
            VariableSpec::continuous("x1", 0.0, 1.0),
            VariableSpec::categorical("c", ["a", "b", "c"]),
        ],
        Arc::new(FnObjective(|p: &[Value]| {
            let (x0, x1) = (p[0].as_f64(), p[1].as_f64());
            (x0 - 0.3).powi(2) + 2.0 * x1
        })),
    )
    .unwrap();
    let mut d = sample_initial_design(&problem, n.div_ceil(3), 5).unwrap();
    d.rows.truncate(n);
    d.y.truncate(n);
    d
}

#[test]
fn shap_encoding_of_an_irrelevant_categorical_is_small() {
    let design = irrelevant_category_design(500);
    assert_eq!(design.n_rows(), 500);
    let enc = shap_encode(&design, &EncoderConfig::default()).unwrap();
    let mean_abs = enc.x.iter().map(|r| r[2].abs()).sum::<f64>() / enc.n_rows() as f64;
    let mean_y = design.y.iter().sum::<f64>() / design.y.len() as f64;
    let sd_y = (design.y.iter().map(|y| (y - mean_y).powi(2)).sum::<f64>() / (design.y.len() - 1) as f64).sqrt();
    assert!(mean_abs <= 0.05 * sd_y, "mean |phi| {mean_abs} vs sd(Y) {sd_y}");
}

#[test]
fn shap_encoding_is_reproducible() {
    let design = irrelevant_category_design(90);
    let mut rng = seed::rng(1);
    let cfg = EncoderConfig {
        seed: rng.random(),
        ..EncoderConfig::default()
    };
    assert_eq!(shap_encode(&design, &cfg).unwrap(), shap_encode(&design, &cfg).unwrap());
}
