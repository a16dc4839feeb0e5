use serde::{Deserialize, Serialize};

use crate::classify::TreeParams;
use crate::error::{Error, Result};
use crate::select::GaConfig;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Preprocessor {
    None,
    Pca { variance_target: f64 },
    Fpca { n_scores: usize },
    Mr { count: usize },
    Ga { config: GaConfig },
}

/// A fixed hyperparameter or a grid tuned by stratified cross-validation on
/// the training rows. Grids are ordered simplest first; ties go to the
/// earliest candidate.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Tuned<T> {
    Fixed(T),
    Grid { candidates: Vec<T>, folds: usize },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum ClassifierSpec {
    Lda,
    Qda,
    Knn { k: Tuned<usize> },
    Tree { params: TreeParams },
    Rf { n_trees: usize, mtry: Option<usize> },
    LogitBoost { n_iter: Tuned<usize> },
    Plsda { n_components: usize },
    /// Gaussian kernel with the median-distance bandwidth of the training
    /// rows.
    Svm { cost: Tuned<f64> },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineSpec {
    pub label: String,
    pub preprocessor: Preprocessor,
    pub classifier: ClassifierSpec,
}

impl PipelineSpec {
    pub fn new(label: impl Into<String>, preprocessor: Preprocessor, classifier: ClassifierSpec) -> Result<Self> {
        let spec = Self {
            label: label.into(),
            preprocessor,
            classifier,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(format!("pipeline '{}': {msg}", self.label)));
        match &self.preprocessor {
            Preprocessor::Pca { variance_target } if !(*variance_target > 0.0 && *variance_target <= 1.0) => {
                return bad(format!("variance target {variance_target} outside (0, 1]"));
            }
            Preprocessor::Fpca { n_scores: 0 } | Preprocessor::Mr { count: 0 } => {
                return bad("zero reduced features".into());
            }
            Preprocessor::Ga { config } => config.validate()?,
            _ => {}
        }
        fn grid<T>(t: &Tuned<T>) -> std::result::Result<(), String> {
            match t {
                Tuned::Grid { candidates, folds } if candidates.is_empty() || *folds < 2 => {
                    Err("tuning grid needs candidates and at least two folds".into())
                }
                _ => Ok(()),
            }
        }
        let checked = match &self.classifier {
            ClassifierSpec::Plsda { .. } if self.preprocessor != Preprocessor::None => {
                Err("PLS-DA runs on raw spectra only".to_string())
            }
            ClassifierSpec::Plsda { n_components: 0 } => Err("zero PLS components".into()),
            ClassifierSpec::Knn { k } => grid(k),
            ClassifierSpec::LogitBoost { n_iter } => grid(n_iter),
            ClassifierSpec::Svm { cost } => grid(cost),
            ClassifierSpec::Rf { n_trees: 0, .. } => Err("zero trees".into()),
            _ => Ok(()),
        };
        checked.or_else(bad)
    }

    pub fn is_ga(&self) -> bool {
        matches!(self.preprocessor, Preprocessor::Ga { .. })
    }
}

/// Settings shared by the preset rosters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PresetOptions {
    pub pca_target: f64,
    pub fpc_scores: usize,
    pub mr_count: usize,
    pub ga: GaConfig,
    pub pls_components: usize,
    pub tune_folds: usize,
    pub knn_grid: Vec<usize>,
    pub logitboost_grid: Vec<usize>,
    pub svm_costs: Vec<f64>,
    pub rf_trees: usize,
}

impl Default for PresetOptions {
    fn default() -> Self {
        Self {
            pca_target: 0.99,
            fpc_scores: 4,
            mr_count: 10,
            ga: GaConfig::default(),
            pls_components: 15,
            tune_folds: 10,
            knn_grid: vec![1, 3, 5, 7, 9, 11, 13, 15],
            logitboost_grid: vec![25, 50, 100, 200],
            svm_costs: vec![0.1, 1.0, 10.0, 100.0],
            rf_trees: 500,
        }
    }
}

pub const PRESETS: [&str; 3] = ["table2", "pls-only", "fast"];

/// Named roster of pipelines.
///
/// `table2` pairs LDA, QDA, kNN and a decision tree with each of PCA, FPCA,
/// MR and GA; LogitBoost, random forest and SVM with no preprocessing and
/// with each of the four; and PLS-DA on raw spectra. `fast` is a small
/// GA-free roster with reduced forests and grids.
pub fn preset(name: &str, opts: &PresetOptions) -> Result<Vec<PipelineSpec>> {
    let pre = |tag: &str| match tag {
        "PCA" => Preprocessor::Pca { variance_target: opts.pca_target },
        "FPCA" => Preprocessor::Fpca { n_scores: opts.fpc_scores },
        "MR" => Preprocessor::Mr { count: opts.mr_count },
        "GA" => Preprocessor::Ga { config: opts.ga },
        _ => Preprocessor::None,
    };
    let grid = |v: &Vec<usize>| Tuned::Grid { candidates: v.clone(), folds: opts.tune_folds };
    let knn = ClassifierSpec::Knn { k: grid(&opts.knn_grid) };
    let tree = ClassifierSpec::Tree { params: TreeParams::default() };
    let lb = ClassifierSpec::LogitBoost { n_iter: grid(&opts.logitboost_grid) };
    let rf = ClassifierSpec::Rf { n_trees: opts.rf_trees, mtry: None };
    let svm = ClassifierSpec::Svm {
        cost: Tuned::Grid { candidates: opts.svm_costs.clone(), folds: opts.tune_folds },
    };
    let pls = ClassifierSpec::Plsda { n_components: opts.pls_components };
    let mut specs = Vec::new();
    let mut push = |name: &str, tag: &str, c: &ClassifierSpec| -> Result<()> {
        let label = if tag.is_empty() { name.to_string() } else { format!("{name} {tag}") };
        specs.push(PipelineSpec::new(label, pre(tag), c.clone())?);
        Ok(())
    };
    let reduced = ["PCA", "FPCA", "MR", "GA"];
    match name {
        "table2" => {
            for (name, c) in [("LDA", &ClassifierSpec::Lda), ("QDA", &ClassifierSpec::Qda), ("kNN", &knn), ("DCT", &tree)] {
                for tag in reduced {
                    push(name, tag, c)?;
                }
            }
            for (name, c) in [("LB", &lb), ("RF", &rf), ("SVM", &svm)] {
                push(name, "", c)?;
                for tag in reduced {
                    push(name, tag, c)?;
                }
            }
            push("PLS", "", &pls)?;
        }
        "pls-only" => push("PLS", "", &pls)?,
        "fast" => {
            let small_knn = ClassifierSpec::Knn { k: Tuned::Grid { candidates: vec![1, 3, 5], folds: 5 } };
            let small_rf = ClassifierSpec::Rf { n_trees: 50, mtry: None };
            push("LDA", "PCA", &ClassifierSpec::Lda)?;
            push("QDA", "FPCA", &ClassifierSpec::Qda)?;
            push("kNN", "MR", &small_knn)?;
            push("DCT", "PCA", &tree)?;
            push("RF", "", &small_rf)?;
            push("SVM", "PCA", &ClassifierSpec::Svm { cost: Tuned::Fixed(10.0) })?;
            push("LB", "FPCA", &ClassifierSpec::LogitBoost { n_iter: Tuned::Fixed(50) })?;
            push("PLS", "", &pls)?;
        }
        other => {
            return Err(Error::InvalidArgument(format!(
                "unknown preset '{other}' (expected one of {})",
                PRESETS.join(", ")
            )))
        }
    }
    Ok(specs)
}

/// Parses a compact spec such as `pls:15`, `lda+pca`, `knn+mr:5`, `svm`,
/// `rf+ga` or `qda+fpca`. Reduction arguments such as `pca:0.95`, `fpca:3`,
/// `mr:10` or `ga:5` override the option defaults; classifier arguments fix the
/// hyperparameter instead of tuning it (`knn:3`, `lb:100`, `svm:10`,
/// `rf:200`, `pls:10`).
pub fn parse_spec(text: &str, opts: &PresetOptions) -> Result<PipelineSpec> {
    let bad = || Error::InvalidArgument(format!("cannot parse pipeline '{text}'"));
    let lower = text.trim().to_ascii_lowercase();
    let (clf, pre) = match lower.split_once('+') {
        Some((c, p)) => (c, Some(p)),
        None => (lower.as_str(), None),
    };
    let split_arg = |s: &str| -> (String, Option<String>) {
        match s.split_once(':') {
            Some((a, b)) => (a.to_string(), Some(b.to_string())),
            None => (s.to_string(), None),
        }
    };
    fn num<T: std::str::FromStr>(v: &Option<String>) -> Result<Option<T>> {
        v.as_ref()
            .map(|s| s.parse::<T>().map_err(|_| Error::InvalidArgument(format!("bad number '{s}'"))))
            .transpose()
    }
    let (pre_name, pre_arg) = pre.map(split_arg).unwrap_or(("".into(), None));
    let (pre_value, pre_tag) = match pre_name.as_str() {
        "" => (Preprocessor::None, ""),
        "pca" => (Preprocessor::Pca { variance_target: num(&pre_arg)?.unwrap_or(opts.pca_target) }, "PCA"),
        "fpca" => (Preprocessor::Fpca { n_scores: num(&pre_arg)?.unwrap_or(opts.fpc_scores) }, "FPCA"),
        "mr" => (Preprocessor::Mr { count: num(&pre_arg)?.unwrap_or(opts.mr_count) }, "MR"),
        "ga" => {
            let mut config = opts.ga;
            if let Some(k) = num(&pre_arg)? {
                config.top_k = k;
            }
            (Preprocessor::Ga { config }, "GA")
        }
        _ => return Err(bad()),
    };
    let (clf_name, clf_arg) = split_arg(clf);
    let grid = |v: &Vec<usize>| Tuned::Grid { candidates: v.clone(), folds: opts.tune_folds };
    let (classifier, name) = match clf_name.as_str() {
        "lda" => (ClassifierSpec::Lda, "LDA"),
        "qda" => (ClassifierSpec::Qda, "QDA"),
        "knn" => (
            ClassifierSpec::Knn { k: num(&clf_arg)?.map_or_else(|| grid(&opts.knn_grid), Tuned::Fixed) },
            "kNN",
        ),
        "dct" | "tree" => (ClassifierSpec::Tree { params: TreeParams::default() }, "DCT"),
        "rf" => (ClassifierSpec::Rf { n_trees: num(&clf_arg)?.unwrap_or(opts.rf_trees), mtry: None }, "RF"),
        "lb" | "logitboost" => (
            ClassifierSpec::LogitBoost {
                n_iter: num(&clf_arg)?.map_or_else(|| grid(&opts.logitboost_grid), Tuned::Fixed),
            },
            "LB",
        ),
        "pls" | "plsda" => (
            ClassifierSpec::Plsda { n_components: num(&clf_arg)?.unwrap_or(opts.pls_components) },
            "PLS",
        ),
        "svm" => (
            ClassifierSpec::Svm {
                cost: num(&clf_arg)?.map_or_else(
                    || Tuned::Grid { candidates: opts.svm_costs.clone(), folds: opts.tune_folds },
                    Tuned::Fixed,
                ),
            },
            "SVM",
        ),
        _ => return Err(bad()),
    };
    let label = if pre_tag.is_empty() { name.to_string() } else { format!("{name} {pre_tag}") };
    PipelineSpec::new(label, pre_value, classifier)
}
