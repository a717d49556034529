"""Generate the synthetic GDSC-shaped screen and look at what's in it.

The generator plants a response surface: each drug has a base potency and a
few genomics-by-pathway interactions shift it per cell line. AUC and
Z_SCORE are derived from LN_IC50 exactly like the real columns are, which
is why the pipeline drops them as leakage.
"""

import numpy as np

from drugsens import dataset as ds
from drugsens import simulate

csv_text = simulate.dataset_csv(seed=7)
path = "gdsc.csv"
with open(path, "w", encoding="utf-8") as fh:
    fh.write(csv_text)
print(f"wrote {path}: {csv_text.count(chr(10)) - 1} rows")

records = ds.parse_gdsc(csv_text.encode())
subtypes = {}
for r in records:
    subtypes[r.tcga_desc] = subtypes.get(r.tcga_desc, 0) + 1
print("subtype counts:", dict(sorted(subtypes.items())))

lung = ds.filter_subtypes(records, {"LUAD", "LUSC"})
cleaned, partial = ds.clean(lung)
print(f"LUAD/LUSC rows: {len(lung)}, after cleaning: {len(cleaned)}")
print("imputed:", partial.imputation_values)

schema = ds.fit_encoding(cleaned, base=partial)
fm, y = ds.encode(cleaned, schema)
print(f"design matrix: {fm.values.shape[0]} x {fm.values.shape[1]}")
print("dropped columns:", [c for c, _ in schema.dropped_columns])
print(f"LN_IC50: mean {y.mean():.2f}, sd {y.std():.2f}, "
      f"range [{y.min():.2f}, {y.max():.2f}]")

top = sorted(schema.categorical_levels.items(), key=lambda kv: -len(kv[1]))[:3]
for col, levels in top:
    print(f"  {col}: {len(levels)} levels, e.g. {levels[:3]}")
