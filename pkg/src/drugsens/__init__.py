"""Drug-sensitivity prediction and explanation toolkit for NSCLC screens."""

from . import errors
from .clinical import (
    ClinicalReport,
    LlmClientConfig,
    ResponseClass,
    build_prompt,
    classify_response,
    request_summary,
)
from .dataset import (
    EncodingSchema,
    FeatureMatrix,
    GdscRecord,
    SplitPair,
    clean,
    encode,
    filter_subtypes,
    fit_encoding,
    parse_gdsc,
    train_test_split,
)
from .evaluation import (
    CvReport,
    Metrics,
    ParamSpace,
    boosting_curve,
    k_fold_cv,
    randomized_search,
    regression_metrics,
)
from .explain import (
    GlobalImportance,
    ShapExplanation,
    brute_force_shap,
    expected_value,
    explain_rows,
    global_importance,
    top_k_features,
    tree_shap,
)
from .gbdt import (
    BaselineModel,
    GbdtModel,
    HyperParams,
    RegressionTree,
    fit_gbdt,
    fit_linear_regression,
    fit_random_forest,
    fit_tree,
)
from .persistence import load_model, save_model

__version__ = "0.1.0"
