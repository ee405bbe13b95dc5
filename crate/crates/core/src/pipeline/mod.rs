//! Evaluation of the four setups on a labelled test set.

mod report;
mod setups;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::elman::{ElmanModel, Example};
use crate::error::{Error, Result};
use crate::hw::{build_core, DEFAULT_THRESHOLD};
use crate::nlp::{preprocess, CoarseLabel, LabeledSentence, WordVectorTable};
use crate::quant::quantize_model;
use crate::sim::{ResetPolicy, SimOptions};

pub use report::Comparison;
pub use setups::{Artifacts, Setup, SetupFactory, SetupKind, SetupRegistry, SpikingSetup};

pub const N_CLASSES: usize = 6;

#[derive(Clone, Debug, PartialEq)]
pub struct EvalOptions {
    pub sim: SimOptions,
    /// Extra presentations of the test set for the stochastic encoder, each
    /// with the next seed. The headline accuracy is always the first pass.
    pub repeats: usize,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            sim: SimOptions::default(),
            repeats: 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub setup: SetupKind,
    pub accuracy: f64,
    pub total: usize,
    pub correct: usize,
    /// `confusion[true][predicted]`, classes in [`CoarseLabel::ALL`] order.
    pub confusion: [[usize; N_CLASSES]; N_CLASSES],
    pub seed: u64,
    /// Only meaningful for the spiking setup.
    pub encoder: String,
    pub reset: ResetPolicy,
    /// Accuracy of every pass when `repeats > 1`.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub repeat_accuracies: Vec<f64>,
    #[serde(skip)]
    pub predictions: Vec<usize>,
}

impl EvalReport {
    pub fn from_predictions(
        setup: SetupKind,
        labels: &[usize],
        predictions: Vec<usize>,
        sim: &SimOptions,
    ) -> Result<Self> {
        if labels.len() != predictions.len() {
            return Err(Error::Dimension {
                context: "predictions",
                expected: labels.len(),
                actual: predictions.len(),
            });
        }
        let mut confusion = [[0usize; N_CLASSES]; N_CLASSES];
        for (&t, &p) in labels.iter().zip(&predictions) {
            if t >= N_CLASSES || p >= N_CLASSES {
                return Err(Error::Input(format!("class index out of range ({t}, {p})")));
            }
            confusion[t][p] += 1;
        }
        let correct = (0..N_CLASSES).map(|i| confusion[i][i]).sum();
        let total = labels.len();
        Ok(Self {
            setup,
            accuracy: if total == 0 {
                0.0
            } else {
                correct as f64 / total as f64
            },
            total,
            correct,
            confusion,
            seed: sim.seed,
            encoder: sim.encoder.clone(),
            reset: sim.reset,
            repeat_accuracies: Vec::new(),
            predictions,
        })
    }

    /// Standard deviation over `repeat_accuracies`, if there are at least two.
    pub fn repeat_std(&self) -> Option<f64> {
        let n = self.repeat_accuracies.len();
        if n < 2 {
            return None;
        }
        let mean = self.repeat_accuracies.iter().sum::<f64>() / n as f64;
        let var = self
            .repeat_accuracies
            .iter()
            .map(|a| (a - mean).powi(2))
            .sum::<f64>()
            / (n - 1) as f64;
        Some(var.sqrt())
    }

    pub fn confusion_csv(&self) -> String {
        let mut out = String::from("true\\predicted");
        for l in CoarseLabel::ALL {
            out.push(',');
            out.push_str(l.code());
        }
        out.push('\n');
        for (i, row) in self.confusion.iter().enumerate() {
            out.push_str(CoarseLabel::ALL[i].code());
            for v in row {
                out.push(',');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }
}

/// Predictions of one setup on every example, in example order.
pub fn predict_all(setup: &dyn Setup, test: &[Example], seed: u64) -> Result<Vec<usize>> {
    test.par_iter()
        .enumerate()
        .map(|(i, ex)| setup.predict(&ex.inputs, i, seed))
        .collect()
}

pub fn evaluate(
    kind: SetupKind,
    artifacts: &Artifacts,
    test: &[Example],
    opts: &EvalOptions,
) -> Result<EvalReport> {
    evaluate_with(
        &SetupRegistry::builtin(),
        kind.name(),
        artifacts,
        test,
        opts,
    )
}

/// Evaluates the setup registered as `name`.
pub fn evaluate_with(
    registry: &SetupRegistry,
    name: &str,
    artifacts: &Artifacts,
    test: &[Example],
    opts: &EvalOptions,
) -> Result<EvalReport> {
    if opts.repeats == 0 {
        return Err(Error::Config("repeats must be at least 1".into()));
    }
    let setup = registry.create(name, artifacts, &opts.sim)?;
    let labels: Vec<usize> = test.iter().map(|e| e.label).collect();
    let predictions = predict_all(setup.as_ref(), test, opts.sim.seed)?;
    let mut report = EvalReport::from_predictions(setup.kind(), &labels, predictions, &opts.sim)?;
    if opts.repeats > 1 {
        report.repeat_accuracies.push(report.accuracy);
        for r in 1..opts.repeats as u64 {
            let p = predict_all(setup.as_ref(), test, opts.sim.seed.wrapping_add(r))?;
            let again = EvalReport::from_predictions(setup.kind(), &labels, p, &opts.sim)?;
            report.repeat_accuracies.push(again.accuracy);
        }
    }
    Ok(report)
}

/// Quantizes the model, maps it onto a core and evaluates all four setups.
pub fn compare_all(model: &ElmanModel, test: &[Example], opts: &EvalOptions) -> Result<Comparison> {
    let quantized = quantize_model(model)?;
    let core = build_core(&quantized, DEFAULT_THRESHOLD)?;
    let artifacts = Artifacts {
        model: Some(model.clone()),
        quantized: Some(quantized),
        core: Some(core),
    };
    let reports = SetupKind::ALL
        .into_iter()
        .map(|k| evaluate(k, &artifacts, test, opts))
        .collect::<Result<Vec<_>>>()?;
    Ok(Comparison {
        test_size: test.len(),
        reports,
    })
}

/// Preprocesses and embeds every sentence.
pub fn embed_corpus(corpus: &[LabeledSentence], table: &WordVectorTable) -> Vec<Example> {
    corpus
        .iter()
        .map(|s| Example {
            inputs: table.embed(&preprocess(&s.tokens)),
            label: s.coarse.index(),
        })
        .collect()
}

/// Sorted, de-duplicated preprocessed tokens of a corpus.
pub fn vocabulary(corpus: &[LabeledSentence]) -> Vec<String> {
    let mut v: Vec<String> = corpus.iter().flat_map(|s| preprocess(&s.tokens)).collect();
    v.sort();
    v.dedup();
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::elman::{ActivationMode, Dims, ElmanParams};
    use crate::linalg::argmax;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_examples(n: usize, seed: u64) -> Vec<Example> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let words = rng.random_range(1..6);
                let mut inputs: Vec<Vec<f64>> = (0..words)
                    .map(|_| (0..64).map(|_| rng.random_range(-1.0..1.0)).collect())
                    .collect();
                inputs.push(vec![0.0; 64]);
                Example {
                    inputs,
                    label: rng.random_range(0..N_CLASSES),
                }
            })
            .collect()
    }

    fn random_model(seed: u64) -> ElmanModel {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        ElmanModel::new(ElmanParams::glorot(Dims::default(), &mut rng), 1.0, seed)
    }

    #[test]
    fn perfect_classifier_gives_diagonal_confusion() {
        // Reads the label back out of the first input component.
        struct Cheat;
        impl Setup for Cheat {
            fn kind(&self) -> SetupKind {
                SetupKind::Float32Full
            }
            fn scores(&self, s: &[Vec<f64>], _: usize, _: u64) -> Result<Vec<f64>> {
                let mut v = vec![0.0; N_CLASSES];
                v[s[0][0] as usize] = 1.0;
                Ok(v)
            }
        }
        let mut reg = SetupRegistry::builtin();
        reg.register("CHEAT", |_, _| Ok(Box::new(Cheat)));
        let mut test = random_examples(60, 1);
        for ex in &mut test {
            ex.inputs.insert(0, {
                let mut v = vec![0.0; 64];
                v[0] = ex.label as f64;
                v
            });
        }
        let r = evaluate_with(
            &reg,
            "CHEAT",
            &Artifacts::default(),
            &test,
            &EvalOptions::default(),
        )
        .unwrap();
        assert_eq!(r.accuracy, 1.0);
        for i in 0..N_CLASSES {
            for j in 0..N_CLASSES {
                if i != j {
                    assert_eq!(r.confusion[i][j], 0);
                }
            }
        }
        assert!(reg.names().any(|n| n == "CHEAT"));
    }

    #[test]
    fn zero_weights_predict_the_first_class() {
        let model = ElmanModel::new(ElmanParams::zeros(Dims::default()), 1.0, 0);
        let test = random_examples(30, 2);
        let cmp = compare_all(&model, &test, &EvalOptions::default()).unwrap();
        for r in &cmp.reports {
            assert!(r.predictions.iter().all(|&p| p == 0), "{}", r.setup);
            let first = test.iter().filter(|e| e.label == 0).count();
            assert_eq!(r.correct, first);
        }
    }

    #[test]
    fn float_accuracy_matches_an_independent_recount() {
        let model = random_model(3);
        let test = random_examples(80, 3);
        let cmp = compare_all(&model, &test, &EvalOptions::default()).unwrap();
        let hits = test
            .iter()
            .filter(|e| {
                let probs = model
                    .params
                    .forward_sentence(&e.inputs, ActivationMode::Continuous)
                    .unwrap()
                    .0;
                argmax(&probs) == e.label
            })
            .count();
        let r = cmp.report(SetupKind::Float32Full).unwrap();
        assert_eq!(r.accuracy, hits as f64 / 80.0);
        let total: usize = r.confusion.iter().flatten().sum();
        assert_eq!(total, 80);
    }

    #[test]
    fn comparison_is_reproducible_and_ordered() {
        let model = random_model(4);
        let test = random_examples(40, 4);
        let opts = EvalOptions {
            sim: SimOptions {
                encoder: "poisson".into(),
                seed: 9,
                ..SimOptions::default()
            },
            repeats: 3,
        };
        let a = compare_all(&model, &test, &opts).unwrap();
        let b = compare_all(&model, &test, &opts).unwrap();
        assert_eq!(a.table(), b.table());
        assert_eq!(a.summary_json().unwrap(), b.summary_json().unwrap());
        let order: Vec<SetupKind> = a.reports.iter().map(|r| r.setup).collect();
        assert_eq!(order, SetupKind::ALL);
        assert_eq!(a.table().lines().count(), 5);
        let spiking = a.report(SetupKind::Spiking).unwrap();
        assert_eq!(spiking.repeat_accuracies.len(), 3);
        assert!(spiking.repeat_std().is_some());
        assert!(a.report(SetupKind::Float32Full).unwrap().repeat_std() == Some(0.0));
    }

    #[test]
    fn missing_artifacts_are_configuration_errors() {
        let test = random_examples(3, 5);
        let arts = Artifacts {
            model: Some(random_model(5)),
            ..Artifacts::default()
        };
        for kind in [SetupKind::Q4Weights, SetupKind::Spiking] {
            let err = evaluate(kind, &arts, &test, &EvalOptions::default()).unwrap_err();
            assert!(matches!(err, Error::Config(_)), "{err}");
        }
        assert!(evaluate(
            SetupKind::Float32Full,
            &arts,
            &test,
            &EvalOptions::default()
        )
        .is_ok());
        assert!(SetupRegistry::builtin()
            .create("NOPE", &arts, &SimOptions::default())
            .is_err());
    }

    #[test]
    fn spiking_scores_come_from_the_last_window() {
        let model = random_model(6);
        let q = quantize_model(&model).unwrap();
        let core = build_core(&q, DEFAULT_THRESHOLD).unwrap();
        let setup = SpikingSetup::new(q, core, SimOptions::default()).unwrap();
        for (i, ex) in random_examples(10, 6).iter().enumerate() {
            let run = setup.run(&ex.inputs, i, 0).unwrap();
            assert_eq!(run.counts.len(), ex.inputs.len());
            let direct = setup.scores(&ex.inputs, i, 0).unwrap();
            assert_eq!(
                direct,
                setup.scores_from_counts(run.final_counts()).unwrap()
            );
        }
    }

    #[test]
    fn confusion_csv_layout() {
        let sim = SimOptions::default();
        let r = EvalReport::from_predictions(SetupKind::Spiking, &[0, 1, 1], vec![0, 1, 2], &sim)
            .unwrap();
        let csv = r.confusion_csv();
        let lines: Vec<&str> = csv.lines().collect();
        assert_eq!(lines[0], "true\\predicted,ABBR,DESC,NUM,ENTY,HUM,LOC");
        assert_eq!(lines[2], "DESC,0,1,1,0,0,0");
        assert!((r.accuracy - 2.0 / 3.0).abs() < 1e-15);
        assert!(EvalReport::from_predictions(SetupKind::Spiking, &[0], vec![6], &sim).is_err());
    }
}
