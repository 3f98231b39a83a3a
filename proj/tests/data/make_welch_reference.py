# Regenerates welch_reference.json with scipy. Not needed for the build.
import json
import numpy as np
from scipy import stats

rng = np.random.default_rng(20240607)
cases = []
for _ in range(20):
    na, nb = rng.integers(3, 40, size=2)
    a = rng.normal(rng.uniform(-2, 2), rng.uniform(0.1, 3), na)
    b = rng.normal(rng.uniform(-2, 2), rng.uniform(0.1, 3), nb)
    res = stats.ttest_ind(a, b, equal_var=False)
    va, vb = a.var(ddof=1), b.var(ddof=1)
    df = (va / na + vb / nb) ** 2 / ((va / na) ** 2 / (na - 1) + (vb / nb) ** 2 / (nb - 1))
    pooled = np.sqrt(((na - 1) * va + (nb - 1) * vb) / (na + nb - 2))
    cases.append({
        "a": a.tolist(), "b": b.tolist(),
        "t": float(res.statistic), "p": float(res.pvalue), "df": float(df),
        "d": float((a.mean() - b.mean()) / pooled),
    })
with open("welch_reference.json", "w") as f:
    json.dump(cases, f, indent=1)
