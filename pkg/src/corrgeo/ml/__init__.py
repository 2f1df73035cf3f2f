"""Supervised learning pieces used by the cross-validated pipelines."""

from .cv import CVPlan, age_strata, check_disjoint, make_cv_plan
from .elastic_net import ElasticNetModel, elastic_net_fit, elastic_net_path, elastic_net_predict, kkt_residual, lambda_max
from .lda import LDAModel, lda_decision, lda_fit, lda_predict
from .metrics import binary_metrics, regression_metrics, roc_auc
from .pipelines import (
    CVReport,
    brainage_cv,
    classification_cv,
    run_brainage,
    run_classification,
    run_grassmann_pipeline,
    subspace_discriminant_cv,
)
from .preprocessing import PCAProjector, Scaler, pca_apply, pca_fit, standardize_apply, standardize_fit
from .selection import anova_f, anova_f_select
from .svm import LinearSVM, linear_svm_decision, linear_svm_fit
