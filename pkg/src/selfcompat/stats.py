"""Statistical tests used by discovery and scoring."""

from __future__ import annotations

import logging
import math
from dataclasses import dataclass, field
from typing import Iterable, Sequence

import numpy as np
from scipy import stats as sps

from .dataset import Dataset

__all__ = [
    "CiResult",
    "EffectTestResult",
    "StatsError",
    "partial_correlation",
    "fisher_z",
    "fisher_z_from_corr",
    "partial_regression_coefficient",
    "BootstrapGram",
    "equal_effects_test",
    "partial_correlation_analysis",
]

log = logging.getLogger(__name__)

N_BOOT = 500


class StatsError(ValueError):
    pass


@dataclass(frozen=True)
class CiResult:
    statistic: float
    p_value: float
    independent: bool


@dataclass(frozen=True)
class EffectTestResult:
    coefficients: list
    p_value: float
    reject: bool
    inconclusive: bool = False
    statistic: float = 0.0
    sets: list = field(default_factory=list)


def partial_correlation(corr: np.ndarray, i: int, j: int, cond: Sequence[int] = ()) -> float:
    """Partial correlation of ``i`` and ``j`` given ``cond`` from a correlation matrix."""
    if not cond:
        return float(corr[i, j])
    idx = [i, j, *cond]
    sub = corr[np.ix_(idx, idx)]
    try:
        prec = np.linalg.inv(sub)
    except np.linalg.LinAlgError as exc:
        raise StatsError("singular conditioning set") from exc
    denom = prec[0, 0] * prec[1, 1]
    if not np.isfinite(denom) or denom <= 0 or np.linalg.cond(sub) > 1e12:
        raise StatsError("singular conditioning set")
    return float(-prec[0, 1] / math.sqrt(denom))


def fisher_z_from_corr(r: float, m: int, k: int, alpha: float) -> CiResult:
    if m - k - 3 <= 0:
        raise StatsError(f"need more than {k + 3} samples, got {m}")
    r = min(max(r, -1.0 + 1e-15), 1.0 - 1e-15)
    stat = math.sqrt(m - k - 3) * math.atanh(r)
    p = float(2.0 * sps.norm.sf(abs(stat)))
    p = min(max(p, 0.0), 1.0)
    return CiResult(stat, p, p >= alpha)


def fisher_z(data: Dataset, x: str, y: str, z: Iterable[str] = (), alpha: float = 0.05) -> CiResult:
    """Fisher-Z test of ``x`` independent of ``y`` given ``z``.

    Returns the statistic ``sqrt(m - |z| - 3) * atanh(r)``, a two-sided normal
    p-value and whether the null of independence is kept at ``alpha``.
    """
    z = sorted(set(z))
    cols = [x, y, *z]
    idx = [data.index(c) for c in cols]
    m = data.n_samples
    if m - len(z) - 3 <= 0:
        raise StatsError(f"need more than {len(z) + 3} samples, got {m}")
    corr = np.corrcoef(data.values[:, idx], rowvar=False)
    corr = np.atleast_2d(corr)
    r = partial_correlation(corr, 0, 1, list(range(2, len(cols))))
    return fisher_z_from_corr(r, m, len(z), alpha)


def _design(data: Dataset, cols: Sequence[str]) -> np.ndarray:
    return np.column_stack([np.ones(data.n_samples)] + [data.column(c) for c in cols])


def partial_regression_coefficient(data: Dataset, response: str, regressor: str,
                                   controls: Iterable[str] = ()) -> float:
    """OLS coefficient of ``regressor`` when regressing ``response`` on the
    regressor, the controls and an intercept."""
    controls = sorted(set(controls))
    if regressor in controls or response in controls or response == regressor:
        raise StatsError("response, regressor and controls must be distinct")
    d = _design(data, [regressor, *controls])
    if data.n_samples <= d.shape[1]:
        raise StatsError("not enough samples for the regression")
    if np.linalg.matrix_rank(d) < d.shape[1]:
        raise StatsError("design matrix is rank deficient")
    coef, *_ = np.linalg.lstsq(d, data.column(response), rcond=None)
    return float(coef[1])


class BootstrapGram:
    """Bootstrap replicates of the cross-product matrix of one dataset.

    Column 0 is the intercept, column ``c + 1`` is ``data.columns[c]``.
    Computing all replicates once lets every regression on any column subset
    be solved for all replicates at the cost of a small batched solve.
    """

    def __init__(self, data: Dataset, rng: np.random.Generator, n_boot: int = N_BOOT):
        m = data.n_samples
        d = np.column_stack([np.ones(m), data.values])
        p = d.shape[1]
        prods = (d[:, :, None] * d[:, None, :]).reshape(m, p * p)
        boot = np.empty((n_boot, p * p))
        chunk = max(1, min(n_boot, 2_000_000 // m))
        pvals = np.full(m, 1.0 / m)
        for start in range(0, n_boot, chunk):
            stop = min(n_boot, start + chunk)
            counts = rng.multinomial(m, pvals, size=stop - start).astype(float)
            boot[start:stop] = counts @ prods
        self.data = data
        self.n_boot = n_boot
        self.full = d.T @ d
        self.boot = boot.reshape(n_boot, p, p)

    def _idx(self, name: str) -> int:
        return self.data.index(name) + 1

    def coefficients(self, response: str, regressor: str, controls: Iterable[str]) -> tuple[float, np.ndarray]:
        """Full-sample coefficient and its bootstrap replicates."""
        design = [0, self._idx(regressor)] + [self._idx(c) for c in sorted(controls)]
        r = self._idx(response)
        sxx = self.full[np.ix_(design, design)]
        sxy = self.full[design, r]
        try:
            beta = np.linalg.solve(sxx, sxy)[1]
        except np.linalg.LinAlgError as exc:
            raise StatsError("design matrix is rank deficient") from exc
        bxx = self.boot[:, design][:, :, design]
        bxy = self.boot[:, design, r]
        with np.errstate(all="ignore"):
            try:
                reps = np.linalg.solve(bxx, bxy[:, :, None])[:, 1, 0]
            except np.linalg.LinAlgError:
                reps = np.array([np.linalg.lstsq(a, b, rcond=None)[0][1] for a, b in zip(bxx, bxy)])
        return float(beta), reps


def equal_effects_test(data: Dataset, treatment: str, outcome: str, adjustment_sets: Sequence[Iterable[str]],
                       level: float = 0.001, rng: np.random.Generator | None = None,
                       include_null: bool = False, gram: BootstrapGram | None = None,
                       n_boot: int = N_BOOT) -> EffectTestResult:
    """Test whether all adjustment sets give the same regression coefficient.

    Each set ``C`` yields the coefficient of ``treatment`` when regressing
    ``outcome`` on the treatment and ``C``. The joint covariance of the
    coefficients comes from a nonparametric bootstrap on the shared sample; a
    Wald statistic on the differences to the first set is compared with a
    chi-squared law. With ``include_null`` the hypothesis is instead that
    every coefficient is zero.

    A singular bootstrap covariance makes the test inconclusive; it then
    reports ``p_value = 1`` and never rejects.
    """
    if not 0 < level < 1:
        raise StatsError("level must lie in (0, 1)")
    sets = []
    for s in adjustment_sets:
        fs = frozenset(s)
        if fs not in sets:
            sets.append(fs)
    if len(sets) < 2 and not (include_null and sets):
        if not sets:
            raise StatsError("need at least one adjustment set")
        return EffectTestResult([0.0], 1.0, False, sets=[sorted(s) for s in sets])
    if gram is None:
        rng = rng if rng is not None else np.random.default_rng(0)
        gram = BootstrapGram(data, rng, n_boot)
    betas, reps = [], []
    for s in sets:
        b, r = gram.coefficients(outcome, treatment, s)
        betas.append(b)
        reps.append(r)
    betas = np.array(betas)
    reps = np.array(reps)
    if include_null:
        diff, rdiff = betas, reps
    else:
        diff = betas[1:] - betas[0]
        rdiff = reps[1:] - reps[0]
    k = len(diff)
    ok = np.isfinite(rdiff).all(axis=0)
    rdiff = rdiff[:, ok]
    if rdiff.shape[1] < k + 2:
        return _inconclusive(betas, sets)
    cov = np.atleast_2d(np.cov(rdiff))
    eig = np.linalg.eigvalsh(cov)
    scale = max(float(np.max(np.abs(eig))), 1e-300)
    if eig.min() <= 1e-10 * scale or scale < 1e-24:
        return _inconclusive(betas, sets)
    stat = float(diff @ np.linalg.solve(cov, diff))
    p = float(sps.chi2.sf(stat, k))
    return EffectTestResult(betas.tolist(), p, p < level, False, stat, [sorted(s) for s in sets])


def _inconclusive(betas, sets) -> EffectTestResult:
    log.info("equal-effects test inconclusive: degenerate bootstrap covariance")
    return EffectTestResult(list(map(float, betas)), 1.0, False, True, 0.0, [sorted(s) for s in sets])


def partial_correlation_analysis(xs: Sequence[float], ys: Sequence[float],
                                 controls: Sequence[float] | Sequence[Sequence[float]] = ()) -> tuple[float, float]:
    """Pearson correlation of ``xs`` and ``ys`` after regressing out ``controls``.

    ``controls`` may be a single sequence or a list of sequences. The p-value
    is the two-sided t-test with ``n - 2 - k`` degrees of freedom.
    """
    x = np.asarray(xs, dtype=float)
    y = np.asarray(ys, dtype=float)
    n = len(x)
    if len(y) != n or n < 4:
        raise StatsError("need two equally long inputs with at least 4 entries")
    c = np.asarray(controls, dtype=float)
    if c.size == 0:
        c = np.empty((n, 0))
    elif c.ndim == 1:
        c = c[:, None]
    elif c.shape[0] != n:
        c = c.T
    if c.shape[0] != n:
        raise StatsError("controls must have one entry per observation")
    d = np.column_stack([np.ones(n), c])
    rx = x - d @ np.linalg.lstsq(d, x, rcond=None)[0]
    ry = y - d @ np.linalg.lstsq(d, y, rcond=None)[0]
    sx, sy = np.linalg.norm(rx), np.linalg.norm(ry)
    if sx < 1e-12 * max(1.0, np.linalg.norm(x)) or sy < 1e-12 * max(1.0, np.linalg.norm(y)):
        raise StatsError("input is constant after removing the controls")
    r = float(np.clip(rx @ ry / (sx * sy), -1.0, 1.0))
    df = n - 2 - c.shape[1]
    if df <= 0:
        raise StatsError("not enough observations for the number of controls")
    if abs(r) >= 1.0:
        return r, 0.0
    t = r * math.sqrt(df / (1.0 - r * r))
    return r, float(2.0 * sps.t.sf(abs(t), df))
