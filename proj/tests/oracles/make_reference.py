# Copyright 2026 The retinarisk Authors
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Regenerates reference_data.hpp from statsmodels / scipy.

    python3 make_reference.py > ../reference_data.hpp
"""
import numpy as np
import statsmodels.api as sm
from scipy import stats
from statsmodels.duration.hazard_regression import PHReg
from statsmodels.duration.survfunc import survdiff

rng = np.random.default_rng(20261015)
HEADER = open(__file__).read().split('"""')[0].replace("# ", " * ").replace("#", " *")


def arr(name, values, ctype="double"):
    body = ", ".join(repr(float(v)) if ctype == "double" else str(int(v)) for v in values)
    return f"inline const std::vector<{ctype}> {name} = {{{body}}};"


out = ["/*", HEADER.rstrip(), " */", "", "// Generated by oracles/make_reference.py; do not edit.",
       "", "#pragma once", "", "#include <vector>", "", "namespace reference {", ""]

n = 60
x1 = np.round(rng.normal(size=n), 3)
x2 = rng.integers(0, 2, size=n).astype(float)
y = (rng.random(n) < 1 / (1 + np.exp(-(-0.4 + 0.9 * x1 - 0.7 * x2)))).astype(int)
fit = sm.Logit(y, sm.add_constant(np.column_stack([x1, x2]))).fit(disp=0, tol=1e-14)
out += ["// logistic regression, statsmodels Logit",
        arr("logit_x1", x1), arr("logit_x2", x2), arr("logit_y", y, "int"),
        arr("logit_params", fit.params), arr("logit_se", fit.bse),
        f"inline constexpr double logit_deviance = {float(-2 * fit.llf)!r};", ""]

n = 50
t = rng.integers(1, 15, size=n).astype(float)
e = (rng.random(n) < 0.7).astype(int)
z1 = np.round(rng.normal(size=n), 3)
z2 = rng.integers(0, 2, size=n).astype(float)
out += ["// Cox model with tied times, statsmodels PHReg",
        arr("cox_time", t), arr("cox_event", e, "int"), arr("cox_z1", z1), arr("cox_z2", z2)]
for ties in ("efron", "breslow"):
    m = PHReg(t, np.column_stack([z1, z2]), status=e, ties=ties).fit()
    out += [arr(f"cox_{ties}_params", m.params), arr(f"cox_{ties}_se", m.bse),
            f"inline constexpr double cox_{ties}_loglik = {float(m.llf)!r};"]
g = rng.integers(0, 3, size=n)
chi2, p = survdiff(t, e, g)
out += ["", "// three-group log-rank, statsmodels survdiff", arr("logrank_group", g, "int"),
        f"inline constexpr double logrank_chi2 = {float(chi2)!r};",
        f"inline constexpr double logrank_p = {float(p)!r};", ""]

# acute myelogenous leukaemia maintenance trial (Miller 1981), a standard survival example
aml_t = [9, 13, 13, 18, 23, 28, 31, 34, 45, 48, 161, 5, 5, 8, 8, 12, 16, 23, 27, 30, 33, 43, 45]
aml_e = [1, 1, 0, 1, 1, 0, 1, 1, 0, 1, 0, 1, 1, 1, 1, 1, 0, 1, 1, 1, 1, 1, 1]
aml_x = [0] * 11 + [1] * 12
chi2, p = survdiff(np.array(aml_t, float), np.array(aml_e), np.array(aml_x))
m = PHReg(np.array(aml_t, float), np.array(aml_x, float)[:, None], status=np.array(aml_e),
          ties="efron").fit()
out += ["// AML maintenance data", arr("aml_time", aml_t), arr("aml_event", aml_e, "int"),
        arr("aml_group", aml_x, "int"),
        f"inline constexpr double aml_logrank_chi2 = {float(chi2)!r};",
        f"inline constexpr double aml_cox_beta = {float(m.params[0])!r};",
        f"inline constexpr double aml_cox_se = {float(m.bse[0])!r};", ""]

cp = []
for k, m in [(0, 10), (3, 10), (5, 10), (10, 10), (7, 31), (685, 3678)]:
    lo = 0.0 if k == 0 else stats.beta.ppf(0.025, k, m - k + 1)
    hi = 1.0 if k == m else stats.beta.ppf(0.975, k + 1, m - k)
    cp += [k, m, lo, hi]
out += ["// Clopper-Pearson 95% intervals, scipy beta.ppf: (k, n, lo, hi) quadruples",
        arr("clopper_pearson", cp), "", "}  // namespace reference", ""]
print("\n".join(out))
