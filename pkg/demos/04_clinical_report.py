"""From a prediction to a clinician-facing report.

Classifies the predicted LN-IC50 (resistant strictly above 4.0), assembles
the report with its top drivers, and builds the deterministic prompt. If
DRUGSENS_LLM_ENDPOINT and DRUGSENS_LLM_API_KEY are set, the summary is
fetched from the chat-completion service; otherwise the demo stops at the
prompt, which is exactly what would be sent.
"""

import os

from drugsens import dataset as ds
from drugsens import simulate
from drugsens.clinical import (
    ClinicalReport,
    LlmClientConfig,
    build_prompt,
    classify_response,
    request_summary,
)
from drugsens.errors import LlmClientError
from drugsens.explain import top_k_features, tree_shap
from drugsens.gbdt import HyperParams, fit_gbdt

records = ds.parse_gdsc(simulate.dataset_csv(seed=7).encode())
lung = ds.filter_subtypes(records, {"LUAD", "LUSC"})
cleaned, partial = ds.clean(lung)
schema = ds.fit_encoding(cleaned, base=partial)
fm, y = ds.encode(cleaned, schema)
split = ds.train_test_split(fm, y, 0.2, seed=42)
(X_train, y_train), (X_test, y_test) = split.train, split.test

model = fit_gbdt(X_train, y_train,
                 HyperParams(n_estimators=120, learning_rate=0.12, max_depth=4, seed=42))

by_id = {(r.cosmic_id, r.drug_id): r for r in cleaned}
i = 3
record = by_id[tuple(X_test.row_ids[i])]
prediction = model.predict(X_test.values[i])
response = classify_response(prediction, threshold=4.0)
explanation = tree_shap(model, X_test.values[i])

report = ClinicalReport(
    drug_name=record.drug_name,
    predicted_ln_ic50=prediction,
    response=response,
    top_features=top_k_features(explanation, 5),
)
print(f"{record.cell_line_name} x {record.drug_name}: "
      f"predicted LN-IC50 {prediction:.4f} -> {response.label} "
      f"(measured {y_test[i]:.4f})")

prompt = build_prompt(report)
print("\n--- prompt ---")
print(prompt)

endpoint = os.environ.get("DRUGSENS_LLM_ENDPOINT")
if endpoint and os.environ.get("DRUGSENS_LLM_API_KEY"):
    config = LlmClientConfig(
        endpoint=endpoint,
        model=os.environ.get("DRUGSENS_LLM_MODEL", "deepseek-chat"),
    )
    try:
        print("--- summary ---")
        print(request_summary(prompt, config))
    except LlmClientError as exc:
        print(f"summary unavailable: {exc}")
else:
    print("(set DRUGSENS_LLM_ENDPOINT and DRUGSENS_LLM_API_KEY to fetch the summary)")
