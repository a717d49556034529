"""Test metrics as the ensemble grows: the boosting-rounds curve.

A single 250-round fit is evaluated at nested prefixes, which is exact
because each boosting round depends only on the rounds before it.
"""

from drugsens import dataset as ds
from drugsens import simulate
from drugsens.evaluation import boosting_curve, curve_to_csv
from drugsens.gbdt import HyperParams

records = ds.parse_gdsc(simulate.dataset_csv(seed=7).encode())
lung = ds.filter_subtypes(records, {"LUAD", "LUSC"})
cleaned, partial = ds.clean(lung)
schema = ds.fit_encoding(cleaned, base=partial)
fm, y = ds.encode(cleaned, schema)
split = ds.train_test_split(fm, y, 0.2, seed=42)
(X_train, y_train), (X_test, y_test) = split.train, split.test

base = HyperParams(n_estimators=250, learning_rate=0.045, max_depth=3, seed=42)
curve = boosting_curve(X_train, y_train, X_test, y_test, [50, 100, 150, 200, 250], base)

print(f"{'rounds':>8}{'R2':>9}{'MAE':>9}")
for count, m in curve:
    bar = "#" * int(m.r2 * 40)
    print(f"{count:>8}{m.r2:>9.3f}{m.mae:>9.3f}  {bar}")

with open("curve.csv", "w", encoding="utf-8") as fh:
    fh.write(curve_to_csv(curve))
print("\nwrote curve.csv (columns: n_estimators, r2, mae)")
