"""Regularization schedule, closed-form error bounds, and rate experiments.

The schedule lambda_n = (phi / (s~ o psi))^{-1}(1/n), with
s~(t) = s^{-1}(1/t), balances the bias term phi(lambda) against the
capacity term s^{-1}(psi(lambda)^{-1})/n.  The bound evaluators below are
the closed forms of the bias, uniform-bias, and variance lemmas, evaluated
verbatim; Monte-Carlo experiments then measure the realized risk decay and
fit its log-log slope.
"""

from __future__ import annotations

import csv
import json
import math
from dataclasses import dataclass, field

import numpy as np

from . import krr
from .errors import DomainError, NonMonotoneError
from .index_functions import (Composed, Ratio, STilde,
                              check_growth_assumptions, log_grid)
from .spectral import draw_dataset


def schedule_composite(phi, psi, s):
    """The strictly increasing composite phi(t) / s^{-1}(psi(t)^{-1})."""
    comp = Ratio(phi, Composed(STilde(s), psi))
    if not comp.increasing:
        raise NonMonotoneError("schedule composite is not certified increasing")
    return comp


def schedule(phi, psi, s, n, lambda_scale=1.0):
    """lambda_n = (phi / (s~ o psi))^{-1}(1/n), optionally rescaled."""
    if n < 1:
        raise DomainError("need n >= 1")
    comp = schedule_composite(phi, psi, s)
    return lambda_scale * comp.inverse(1.0 / n)


def predicted_rate(phi, psi, s, n):
    """The theoretical RMSE scale sqrt(phi(lambda_n))."""
    return math.sqrt(phi(schedule(phi, psi, s, n)))


def balance_ratio(phi, psi, s, n):
    """phi(lambda_n) * n / s^{-1}(psi(lambda_n)^{-1}); equals 1 at the exact
    schedule and must stay in [1/2, 2]."""
    lam = schedule(phi, psi, s, n)
    return phi(lam) * n / s.inverse(1.0 / psi(lam))


# ---------------------------------------------------------------------------
# closed-form bounds
# ---------------------------------------------------------------------------

def bias_bound(phi, lam, norm_phi):
    """sqrt(phi(lambda)) * ||f*||_phi, the source-condition bias bound."""
    return math.sqrt(phi(lam)) * norm_phi


def exact_bias(model, target, lam):
    """Exact L2(nu) bias of the population solution,
    sqrt(sum a_i^2 lambda^2 phi(mu_i) / (mu_i + lambda)^2)."""
    c_star = target.l2_coefficients()
    mus = model.mu[: c_star.size]
    return float(np.linalg.norm(c_star * lam / (mus + lam)))


def uniform_bias_bound(phi, psi, lam, k_psi_sup, norm_phi):
    """sqrt(phi(lambda)/psi(lambda)) * ||k^psi||_inf * ||f*||_phi."""
    return math.sqrt(phi(lam) / psi(lam)) * k_psi_sup * norm_phi


def variance_bound(phi, psi, s, lam, n, sigma, k_psi_sup, norm_phi, delta=0.05):
    """The closed-form high-probability variance bound, evaluated verbatim:

    log(1/delta) * sqrt( 1152 sigma^2 ||k^psi||^2 ||f*||_phi^2 / (n psi(lam))
                         * (phi(lam) + 1/n)  +  s^{-1}(psi(lam)^{-1}) / n )
    """
    if not (0 < delta < 1):
        raise DomainError("delta must lie in (0, 1)")
    head = 1152 * sigma**2 * k_psi_sup**2 * norm_phi**2 / (n * psi(lam))
    inner = head * (phi(lam) + 1.0 / n) + s.inverse(1.0 / psi(lam)) / n
    return math.log(1.0 / delta) * math.sqrt(inner)


def bv_bound(phi, psi, s, lam, n, k_psi_sup, norm_phi, delta=0.05):
    """The combined bias-variance form holding with probability 1 - 3 delta:

    ||f*||_phi sqrt(phi(lam)) + ||k^psi|| ||f*||_phi *
        sqrt(log(2/delta)/n * (1/(n psi(lam)) + phi(lam)/psi(lam)
                               + s^{-1}(psi(lam)^{-1})))
    """
    if not (0 < delta < 1):
        raise DomainError("delta must lie in (0, 1)")
    inner = (1.0 / (n * psi(lam)) + phi(lam) / psi(lam)
             + s.inverse(1.0 / psi(lam)))
    return (norm_phi * math.sqrt(phi(lam))
            + k_psi_sup * norm_phi * math.sqrt(math.log(2.0 / delta) / n * inner))


def variance_threshold_n(psi, lam, k_psi_sup, n_lambda, c_norm, delta=0.05):
    """Smallest n meeting the concentration condition
    n >= 8 log(1/delta) ||k^psi||^2 g_lam / psi(lam), with
    g_lam = log(2e N(lam) (1 + lam/||C_nu||))."""
    g_lam = math.log(2 * math.e * max(n_lambda, 1e-300) * (1 + lam / c_norm))
    return 8 * math.log(1.0 / delta) * k_psi_sup**2 * g_lam / psi(lam)


def effdim_bound_check(model, psi, s, lam_grid=None):
    """Sup over a lambda grid of N(lambda) / s^{-1}(psi(lambda)^{-1}).

    The grid must span at least 3 decades inside (mu_N, mu_1).  Returns the
    overall sup, the per-decade sups, and the max consecutive-decade drift
    factor (stable models keep the drift below 2).
    """
    if lam_grid is None:
        hi = model.mu[0]
        lo = max(model.mu[-1] * 10, hi * 1e-3)
        lo = min(lo, hi * 1e-3)
        lam_grid = log_grid(lo, hi, 48)
    lam_grid = np.asarray(lam_grid, dtype=float)
    span = math.log10(lam_grid.max() / lam_grid.min())
    if span < 3 - 1e-9:
        raise DomainError("effective-dimension check needs >= 3 decades")
    ratios = np.array([
        krr.effective_dimension(model, lam) / s.inverse(1.0 / psi(lam))
        for lam in lam_grid
    ])
    decades = np.floor(np.log10(lam_grid))
    uniq = np.unique(decades)
    per_decade = np.array([np.max(ratios[decades == d]) for d in uniq])
    drift = float(np.max(per_decade[1:] / per_decade[:-1])) if uniq.size > 1 else 1.0
    drift = max(drift, float(np.max(per_decade[:-1] / per_decade[1:]))) if uniq.size > 1 else drift
    return {
        "sup_ratio": float(np.max(ratios)),
        "per_decade": per_decade.tolist(),
        "max_decade_drift": drift,
    }


# ---------------------------------------------------------------------------
# Monte-Carlo experiments
# ---------------------------------------------------------------------------

@dataclass
class RatePoint:
    n: int
    lam: float
    errors: np.ndarray
    predicted: float
    balance: float

    @property
    def mean(self):
        return float(np.mean(self.errors))

    @property
    def stderr(self):
        if self.errors.size < 2:
            return 0.0
        return float(np.std(self.errors, ddof=1) / math.sqrt(self.errors.size))


@dataclass
class RateReport:
    """Per-n risk statistics plus the fitted log-log slope."""

    points: list
    slope: float = float("nan")
    half_width: float = float("nan")
    dropped_burnin: bool = False
    master_seed: int = 0
    config_digest: str = ""
    meta: dict = field(default_factory=dict)

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["n", "lambda", "mean_err", "stderr", "predicted"])
            for p in self.points:
                writer.writerow([p.n, repr(p.lam), repr(p.mean),
                                 repr(p.stderr), repr(p.predicted)])

    def to_json(self, path):
        payload = {
            "config_digest": self.config_digest,
            "master_seed": self.master_seed,
            "slope": self.slope,
            "half_width": self.half_width,
            "dropped_burnin": self.dropped_burnin,
            "points": [
                {
                    "n": p.n,
                    "lambda": p.lam,
                    "mean_err": p.mean,
                    "stderr": p.stderr,
                    "predicted": p.predicted,
                    "balance": p.balance,
                    "errors": [float(e) for e in p.errors],
                }
                for p in self.points
            ],
            "meta": self.meta,
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, sort_keys=True, indent=2)


def _trial_seeds(master_seed, n_count, trials):
    ss = np.random.SeedSequence(master_seed)
    state = ss.generate_state(n_count * trials, dtype=np.uint64)
    return state.reshape(n_count, trials)


def run_single_trial(model, target, phi, psi, s, sigma_bar, n, lam, seed,
                     trial=None):
    ds = draw_dataset(model, target, n, sigma_bar, seed)
    try:
        est = krr.fit(ds, model, lam)
    except np.linalg.LinAlgError as exc:
        raise np.linalg.LinAlgError(
            f"factorization failed at n={n}, trial={trial}: {exc}"
        ) from exc
    return krr.l2_error(model, est, target)


def run_experiment(model, target, phi, psi, s, sigma_bar, n_grid,
                   trials=20, master_seed=0, lambda_scale=1.0,
                   require_certified=True, strict_tail=False, jobs=1,
                   config_digest=""):
    """Monte-Carlo rate experiment: for each n, T trials of
    draw -> fit(lambda_n) -> exact L2 error; aggregates and fits the slope.

    Deterministic under the master seed (trial seeds are partitioned by
    (n-index, trial), so the jobs count does not affect results).
    """
    n_grid = [int(n) for n in n_grid]
    if any(b <= a for a, b in zip(n_grid, n_grid[1:])):
        raise DomainError("n-grid must be strictly increasing")
    if trials < 10:
        raise DomainError("need at least 10 trials per n")
    if require_certified:
        report = check_growth_assumptions(phi, psi, s=s)
        if not report.passed:
            raise NonMonotoneError(
                "growth assumptions failed: "
                + "; ".join(sorted(report.failures()))
            )
    # Truncation accounting.  For synthetic ground-truth models the finite
    # spectrum is exact by construction, so a heavy psi-tail (the signature
    # of the summability violation of bounded-basis families) is recorded
    # in the report; strict_tail turns it into a refusal.
    tail = model.tail_estimate(psi)
    head = float(np.sum(psi(model.mu)))
    tail_info = {
        "psi_tail": tail,
        "psi_head": head,
        "ratio": tail / head,
        "summability_ok": bool(tail <= 1e-6 * head),
    }
    if strict_tail and not tail_info["summability_ok"]:
        raise DomainError(
            f"truncation tail {tail:.3e} exceeds 1e-6 of head {head:.3e}; "
            "increase the truncation level"
        )

    seeds = _trial_seeds(master_seed, len(n_grid), trials)
    points = []
    for ni, n in enumerate(n_grid):
        lam = schedule(phi, psi, s, n, lambda_scale)
        args = [(model, target, phi, psi, s, sigma_bar, n, lam,
                 int(seeds[ni, t]), t) for t in range(trials)]
        if jobs > 1:
            from concurrent.futures import ProcessPoolExecutor
            with ProcessPoolExecutor(max_workers=jobs) as pool:
                errors = list(pool.map(_trial_star, args))
        else:
            errors = [run_single_trial(*a) for a in args]
        points.append(RatePoint(
            n=n, lam=float(lam), errors=np.asarray(errors),
            predicted=predicted_rate(phi, psi, s, n),
            balance=balance_ratio(phi, psi, s, n),
        ))
    report = RateReport(points=points, master_seed=int(master_seed),
                        config_digest=config_digest,
                        meta={"trials": trials, "sigma_bar": sigma_bar,
                              "lambda_scale": lambda_scale,
                              "truncation": tail_info})
    slope, half = fit_slope(report)
    report.slope, report.half_width = slope, half
    return report


def _trial_star(args):
    return run_single_trial(*args)


def fit_slope(report, drop_burnin=True):
    """OLS slope of log(mean error) on log(n); half-width = 2 * SE(slope).

    Drops the smallest n when its residual exceeds 3x the median residual
    (pre-asymptotic burn-in); the drop is recorded on the report.
    """
    points = report.points if hasattr(report, "points") else list(report)
    if len(points) < 4:
        raise DomainError("slope fit needs at least 4 n-values")
    ns = np.array([p.n for p in points], dtype=float)
    means = np.array([p.mean for p in points])
    if np.any(means <= 0):
        # exact-recovery trials; slope is meaningless but defined
        return 0.0, float("inf")

    def ols(x, y):
        A = np.vstack([x, np.ones_like(x)]).T
        coef, *_ = np.linalg.lstsq(A, y, rcond=None)
        resid = y - A @ coef
        dof = max(x.size - 2, 1)
        sxx = np.sum((x - x.mean()) ** 2)
        se = math.sqrt(float(resid @ resid) / dof / sxx)
        return float(coef[0]), 2 * se, np.abs(resid)

    x, y = np.log(ns), np.log(means)
    slope, half, resid = ols(x, y)
    if drop_burnin and len(points) >= 5:
        med = np.median(resid)
        if med > 0 and resid[0] > 3 * med:
            slope, half, _ = ols(x[1:], y[1:])
            if hasattr(report, "dropped_burnin"):
                report.dropped_burnin = True
    return slope, half
