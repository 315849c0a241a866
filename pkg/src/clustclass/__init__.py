"""Sparse linear classifiers with joint clustering of the positive class.

The package trains interpretable binary classifiers: penalized and
budgeted sparse linear SVMs, an alternating cluster-and-classify trainer
with an exact enumeration oracle, a top-K likelihood-ratio test over
quantized features, l1 logistic regression, finite-sample bound
calculators, cohort-labeling statistics, a planted-cluster synthetic
generator, and ROC/AUC evaluation utilities.
"""

__version__ = "0.1.0"

from .acc import (AccConfig, AccModel, acc_predict, acc_scores, acc_train,
                  ct_baseline, kmeans, recluster, select_cluster_features)
from .cohort import (ProportionTest, flag_admission_types, proportion_ztest,
                     select_target_year)
from .data import (Dataset, FactorRecord, FeatureRule, QuantizationScheme,
                   QuantizedDataset, Standardizer, column_means,
                   fit_quantizer, fit_standardizer, impute_missing, load_csv,
                   quantize, save_csv, split_train_test, summarize_time_blocks)
from .evaluate import (ConfusionMetrics, RocCurve, confusion_metrics,
                       cross_validate, roc_curve)
from .jcc import (JccInstance, JccSolution, jcc_objective, solve_exact,
                  verify_mip_equivalence)
from .klrt import (LrtModel, feature_importance, fit_lrt, score_klrt,
                   score_rows)
from .logreg import (LogisticModel, predict_proba, predict_proba_negative,
                     train_lr)
from .persist import (ModelArchive, archive_predictions, archive_scores,
                      load_model, make_archive, save_model)
from .svm import (LinearModel, SvmConstrainedParams, SvmPenalizedParams,
                  SvmSolution, decision_value, train_constrained,
                  train_penalized)
from .synth import PlantedTruth, SynthConfig, generate_planted
from .theory import generalization_gap, min_sample_size, vc_bound

__all__ = [name for name in dir() if not name.startswith("_")]
