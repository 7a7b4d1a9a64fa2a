"""Student's t-test and the t-distribution CDF behind it.

The CDF uses the regularized incomplete beta function, evaluated with a
modified Lentz continued fraction.
"""

from __future__ import annotations

import csv
import io
import math
from dataclasses import dataclass
from typing import Mapping, Sequence

from aqg.errors import ConfigError, DataError

CF_TOLERANCE = 1e-12
CF_MAX_ITER = 300
_TINY = 1e-300


@dataclass(frozen=True, init=False)
class SampleVector:
    values: tuple[float, ...]
    label: str = ""

    def __init__(self, values: Sequence[float], label: str = ""):
        vals = tuple(float(v) for v in values)
        if len(vals) < 2:
            raise DataError(f"sample {label!r} needs at least 2 values")
        if not all(math.isfinite(v) for v in vals):
            raise DataError(f"sample {label!r} contains non-finite values")
        object.__setattr__(self, "values", vals)
        object.__setattr__(self, "label", label)

    @property
    def mean(self) -> float:
        return math.fsum(self.values) / len(self.values)

    @property
    def var(self) -> float:
        m = self.mean
        return math.fsum((v - m) ** 2 for v in self.values) / (len(self.values) - 1)


@dataclass(frozen=True)
class TestResult:
    __test__ = False  # keep pytest from collecting this class

    t: float
    df: float
    p_two_sided: float
    alpha: float = 0.05

    @property
    def significant(self) -> bool:
        return self.p_two_sided < self.alpha


def _betacf(a: float, b: float, x: float) -> float:
    qab, qap, qam = a + b, a + 1.0, a - 1.0
    c = 1.0
    d = 1.0 - qab * x / qap
    if abs(d) < _TINY:
        d = _TINY
    d = 1.0 / d
    h = d
    for m in range(1, CF_MAX_ITER + 1):
        m2 = 2 * m
        aa = m * (b - m) * x / ((qam + m2) * (a + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        h *= d * c
        aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2))
        d = 1.0 + aa * d
        if abs(d) < _TINY:
            d = _TINY
        c = 1.0 + aa / c
        if abs(c) < _TINY:
            c = _TINY
        d = 1.0 / d
        delta = d * c
        h *= delta
        if abs(delta - 1.0) < CF_TOLERANCE:
            return h
    raise ArithmeticError(f"incomplete beta did not converge (a={a}, b={b}, x={x})")


def betainc_regularized(a: float, b: float, x: float) -> float:
    """I_x(a, b) for a, b > 0 and 0 <= x <= 1."""
    if a <= 0 or b <= 0:
        raise ValueError("a and b must be positive")
    if not 0.0 <= x <= 1.0:
        raise ValueError("x must lie in [0, 1]")
    if x == 0.0 or x == 1.0:
        return x
    log_front = (
        math.lgamma(a + b) - math.lgamma(a) - math.lgamma(b) + a * math.log(x) + b * math.log1p(-x)
    )
    front = math.exp(log_front)
    # continued fraction converges fast for x < (a+1)/(a+b+2); use symmetry otherwise
    if x < (a + 1.0) / (a + b + 2.0):
        return front * _betacf(a, b, x) / a
    return 1.0 - front * _betacf(b, a, 1.0 - x) / b


def t_two_sided_p(t: float, df: float) -> float:
    if df <= 0:
        raise ConfigError(f"degrees of freedom must be positive, got {df}")
    if t == 0:
        return 1.0
    if math.isinf(t):
        return 0.0
    return betainc_regularized(df / 2.0, 0.5, df / (df + t * t))


def t_cdf(t: float, df: float) -> float:
    """P(T <= t) for Student's t with ``df`` degrees of freedom."""
    if df <= 0:
        raise ConfigError(f"degrees of freedom must be positive, got {df}")
    if t == 0:
        return 0.5
    tail = 0.5 * t_two_sided_p(t, df)
    return 1.0 - tail if t > 0 else tail


def t_test_two_sample(
    a: SampleVector | Sequence[float],
    b: SampleVector | Sequence[float],
    alpha: float = 0.05,
    equal_var: bool = True,
) -> TestResult:
    """Unpaired two-sided t-test; pooled variance by default, Welch when ``equal_var`` is False."""
    a = a if isinstance(a, SampleVector) else SampleVector(a, "a")
    b = b if isinstance(b, SampleVector) else SampleVector(b, "b")
    na, nb = len(a.values), len(b.values)
    diff = a.mean - b.mean
    if equal_var:
        df = float(na + nb - 2)
        pooled = ((na - 1) * a.var + (nb - 1) * b.var) / df
        se2 = pooled * (1.0 / na + 1.0 / nb)
    else:
        va, vb = a.var / na, b.var / nb
        se2 = va + vb
        df = se2**2 / (va**2 / (na - 1) + vb**2 / (nb - 1)) if se2 > 0 else float(na + nb - 2)
    if se2 == 0.0:
        if diff == 0.0:
            return TestResult(t=0.0, df=df, p_two_sided=1.0, alpha=alpha)
        raise DataError(f"zero variance in {a.label!r} and {b.label!r} with different means")
    t = diff / math.sqrt(se2)
    return TestResult(t=t, df=df, p_two_sided=t_two_sided_p(t, df), alpha=alpha)


def weakest_baseline(baselines: Mapping[str, SampleVector]) -> str:
    """Baseline with the lowest mean; ties go to the first in mapping order."""
    if not baselines:
        raise ConfigError("at least one baseline is required")
    return min(baselines, key=lambda k: baselines[k].mean)


def compare_to_baseline(
    sample: SampleVector, ref: SampleVector, alpha: float = 0.05, equal_var: bool = True
) -> tuple[TestResult, bool]:
    """Test ``sample`` against ``ref``; the star needs a higher mean and a rejection.

    Two constant samples with a strict mean gap count as a certain difference
    (p = 0) instead of raising.
    """
    try:
        res = t_test_two_sample(sample, ref, alpha, equal_var)
    except DataError:
        gap = sample.mean - ref.mean
        df = float(len(sample.values) + len(ref.values) - 2)
        res = TestResult(t=math.copysign(math.inf, gap), df=df, p_two_sided=0.0, alpha=alpha)
    return res, sample.mean > ref.mean and res.significant


def significance_stars(
    results: Mapping[str, SampleVector],
    baselines: Mapping[str, SampleVector],
    alpha: float = 0.05,
    equal_var: bool = True,
) -> dict[str, bool]:
    """Star a model when it beats the lowest-mean baseline and the test rejects at ``alpha``."""
    ref = baselines[weakest_baseline(baselines)]
    return {m: compare_to_baseline(s, ref, alpha, equal_var)[1] for m, s in results.items()}


@dataclass(frozen=True)
class SignificanceRow:
    model: str
    metric: str
    baseline: str
    result: TestResult
    star: bool


def significance_table(
    samples: Mapping[str, Mapping[str, SampleVector]],
    baseline_models: Sequence[str],
    alpha: float = 0.05,
    equal_var: bool = True,
) -> list[SignificanceRow]:
    """Test every non-baseline model on every metric against that metric's weakest baseline.

    ``samples`` maps metric -> model -> per-item sample.
    """
    rows = []
    for metric, by_model in samples.items():
        bases = {m: by_model[m] for m in baseline_models if m in by_model}
        if not bases:
            continue
        ref_name = weakest_baseline(bases)
        ref = bases[ref_name]
        for model, sample in by_model.items():
            if model in bases:
                continue
            res, star = compare_to_baseline(sample, ref, alpha, equal_var)
            rows.append(SignificanceRow(model, metric, ref_name, res, star))
    return rows


def significance_csv(rows: Sequence[SignificanceRow]) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(["model", "metric", "baseline", "t", "df", "p", "star"])
    for r in rows:
        w.writerow([r.model, r.metric, r.baseline, f"{r.result.t:.6g}", f"{r.result.df:.6g}", f"{r.result.p_two_sided:.6g}", int(r.star)])
    return buf.getvalue()
