"""Algebra of index functions.

An index function is a nondecreasing, continuous, nonnegative function on
(0, T] vanishing at 0.  Index functions rescale Mercer eigenvalues to define
Hilbert scales, and their growth behaviour (dilation function, extension
indices, doubling constants) controls every rate computation downstream.

The algebra is closed under pointwise composition, ratio, and the
``t -> s^{-1}(1/t)`` transform, so composites such as ``phi / (s~ o psi)``
are first-class invertible objects.
"""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np
from scipy.interpolate import PchipInterpolator

from .errors import DomainError, NonMonotoneError, RangeError

#: relative tolerance of bracketing inversion
INVERSE_RTOL = 1e-12
#: hard cap on bisection steps
INVERSE_MAX_STEPS = 200
#: log-spaced grid density used by default certificates
POINTS_PER_DECADE = 512


def log_grid(lo, hi, points_per_decade=POINTS_PER_DECADE):
    """Log-spaced grid on [lo, hi] with a fixed density per decade."""
    if not (0 < lo < hi):
        raise DomainError(f"need 0 < lo < hi, got ({lo}, {hi})")
    decades = np.log10(hi / lo)
    n = max(int(np.ceil(decades * points_per_decade)), 2)
    return np.geomspace(lo, hi, n)


class IndexFunction:
    """A monotone nonnegative function on (0, T].

    Subclasses implement ``_raw`` (vectorized evaluation without domain
    checks).  ``unbounded`` marks families whose defining formula extends to
    all of (0, inf); dilation grids may then roam past T.  ``increasing``
    is False only for derived objects such as the ``s~`` transform.
    """

    family = "abstract"
    unbounded = False
    increasing = True

    def __init__(self, T=1.0):
        if T <= 0:
            raise DomainError(f"domain endpoint must be positive, got {T}")
        self.T = float(T)

    def _raw(self, t):
        raise NotImplementedError

    def __call__(self, t):
        """Evaluate at ``t``; raises DomainError outside (0, T]."""
        t_arr = np.asarray(t, dtype=float)
        if np.any(t_arr <= 0):
            raise DomainError(f"{self.family}: argument must be positive")
        if not self.unbounded and np.any(t_arr > self.T * (1 + 1e-12)):
            raise DomainError(
                f"{self.family}: argument above domain endpoint T={self.T}"
            )
        out = self._raw(t_arr)
        return float(out) if np.isscalar(t) or t_arr.ndim == 0 else out

    def _eval_extended(self, t):
        """Evaluation for certification grids; ignores T when unbounded."""
        t_arr = np.asarray(t, dtype=float)
        if self.unbounded:
            return self._raw(t_arr)
        return self._raw(np.minimum(t_arr, self.T))

    def inverse(self, y, rtol=INVERSE_RTOL):
        """Solve f(t) = y for t in (0, T] by bracketing bisection.

        Requires f monotone; for functions with a non-monotone patch the
        lowest upward crossing is returned.  Closed-form families override
        this with the exact expression.
        """
        if y <= 0:
            raise RangeError(f"{self.family}: inverse target must be positive")
        if self.increasing:
            lo, hi = self._bracket_increasing(y)
        else:
            lo, hi = self._bracket_below_decreasing(y)

        want_ge = self.increasing
        for _ in range(INVERSE_MAX_STEPS):
            mid = np.sqrt(lo * hi)
            f_mid = self(mid)
            if abs(f_mid - y) <= rtol * abs(y):
                return mid
            if (f_mid >= y) == want_ge:
                hi = mid
            else:
                lo = mid
        mid = np.sqrt(lo * hi)
        if abs(self(mid) - y) > 1e3 * rtol * abs(y):
            raise NonMonotoneError(
                f"{self.family}: bisection stalled at t={mid}; "
                "function may not be strictly monotone"
            )
        return mid

    def _bracket_increasing(self, y, levels=1020):
        # dyadic ladder from T downward; lowest bracket [t_k, t_{k-1}]
        # with f(t_k) < y <= f(t_{k-1})
        ts = self.T * 2.0 ** -np.arange(levels, dtype=float)[::-1]
        ts = ts[ts > 0]
        vals = self._raw(ts)
        below = vals < y
        crossings = np.nonzero(below[:-1] & ~below[1:])[0]
        if crossings.size == 0:
            raise RangeError(
                f"{self.family}: target {y} outside attainable range"
            )
        k = int(crossings[0])
        return ts[k], ts[k + 1]

    def _bracket_below_decreasing(self, y):
        # decreasing f: f(lo) >= y >= f(hi); expand both ends as needed
        lo = hi = self.T if not self.unbounded else 1.0
        for _ in range(2400):
            if self(lo) >= y:
                break
            lo *= 0.5
        else:
            raise RangeError(f"{self.family}: target {y} out of range")
        cap = self.T if not self.unbounded else np.inf
        for _ in range(2400):
            if self(hi) <= y:
                break
            if hi >= cap:
                raise RangeError(f"{self.family}: target {y} out of range")
            hi = min(hi * 2, cap)
        else:
            raise RangeError(f"{self.family}: target {y} out of range")
        return lo, hi

    def certify_index(self, n_points=64):
        """Cheap construction-time certificate on a dyadic grid.

        Checks nonnegativity and (nondecreasing) monotonicity; raises
        CertificationError-compatible exceptions on blatant violations.
        Value 0 at 0+ is recorded as the smallest sampled value.
        """
        ts = self.T * 2.0 ** -np.arange(n_points, dtype=float)[::-1]
        vals = self._raw(ts)
        if np.any(vals < -1e-15):
            raise NonMonotoneError(f"{self.family}: negative values on dyadic grid")
        diffs = np.diff(vals)
        tol = 1e-12 * max(abs(vals[-1]), 1e-300)
        if np.any(diffs < -tol):
            k = int(np.argmin(diffs))
            raise NonMonotoneError(
                f"{self.family}: decreasing between t={ts[k]} and t={ts[k + 1]}"
            )
        return float(vals[0])

    # -- algebra ----------------------------------------------------------
    def compose(self, inner):
        return Composed(self, inner)

    def ratio(self, denominator):
        return Ratio(self, denominator)


class Power(IndexFunction):
    """f(t) = t^rho, exact for evaluation, inversion, and dilation."""

    family = "power"
    unbounded = True

    def __init__(self, rho, T=1.0):
        if rho <= 0:
            raise DomainError(f"power exponent must be positive, got {rho}")
        super().__init__(T)
        self.rho = float(rho)

    def _raw(self, t):
        return t ** self.rho

    def inverse(self, y, rtol=INVERSE_RTOL):
        if y <= 0:
            raise RangeError("power: inverse target must be positive")
        t = y ** (1.0 / self.rho)
        if t > self.T * (1 + 1e-9):
            raise RangeError(f"power: target {y} above f(T)")
        return t

    def __repr__(self):
        return f"Power(rho={self.rho}, T={self.T})"


class PowerLog(IndexFunction):
    """f(t) = t^rho * (1 + |ln t|)^q."""

    family = "power-log"
    unbounded = True

    def __init__(self, rho, log_exponent=1.0, T=1.0):
        if rho <= 0:
            raise DomainError(f"power-log exponent must be positive, got {rho}")
        super().__init__(T)
        self.rho = float(rho)
        self.log_exponent = float(log_exponent)

    def _raw(self, t):
        return t ** self.rho * (1 + np.abs(np.log(t))) ** self.log_exponent

    def __repr__(self):
        return f"PowerLog(rho={self.rho}, q={self.log_exponent}, T={self.T})"


class Table(IndexFunction):
    """Monotone interpolation (PCHIP) of tabulated (t, f(t)) samples."""

    family = "table-interpolated"

    def __init__(self, ts, values):
        ts = np.asarray(ts, dtype=float)
        values = np.asarray(values, dtype=float)
        if ts.ndim != 1 or ts.size < 2 or ts.shape != values.shape:
            raise DomainError("table: need matching 1-d arrays of length >= 2")
        if np.any(np.diff(ts) <= 0):
            raise DomainError("table: abscissae must be strictly increasing")
        if np.any(np.diff(values) < 0):
            raise NonMonotoneError("table: values must be nondecreasing")
        super().__init__(T=ts[-1])
        self.t_lo = float(ts[0])
        self._interp = PchipInterpolator(ts, values, extrapolate=False)
        self._ts, self._values = ts, values

    def _raw(self, t):
        # below the table we decay linearly to 0, preserving monotonicity
        t = np.asarray(t, dtype=float)
        out = self._interp(np.clip(t, self.t_lo, self.T))
        scale = np.where(t < self.t_lo, t / self.t_lo, 1.0)
        return out * scale

    @classmethod
    def from_callable(cls, fn, lo, hi, points_per_decade=64):
        ts = log_grid(lo, hi, points_per_decade)
        return cls(ts, np.asarray([fn(t) for t in ts], dtype=float))


class Wrapped(IndexFunction):
    """Adapter for an arbitrary vectorized callable (test/benchmark use)."""

    family = "callable"
    unbounded = True

    def __init__(self, fn, T=1.0, increasing=True):
        super().__init__(T)
        self._fn = fn
        self.increasing = increasing

    def _raw(self, t):
        return self._fn(t)


class Composed(IndexFunction):
    """Pointwise composition outer(inner(t))."""

    family = "composed"

    def __init__(self, outer, inner):
        super().__init__(inner.T)
        self.outer, self.inner = outer, inner
        self.unbounded = inner.unbounded
        self.increasing = outer.increasing == inner.increasing

    def _raw(self, t):
        return self.outer._eval_extended(self.inner._raw(t))


class Ratio(IndexFunction):
    """Pointwise ratio num(t)/den(t); monotonicity is not implied."""

    family = "composed"

    def __init__(self, num, den):
        super().__init__(min(num.T, den.T))
        self.num, self.den = num, den
        self.unbounded = num.unbounded and den.unbounded
        # increasing/decreasing only guaranteed when directions oppose
        self.increasing = num.increasing and not den.increasing

    def _raw(self, t):
        return self.num._raw(t) / self.den._raw(t)


class STilde(IndexFunction):
    """The transform s~(t) = s^{-1}(1/t); decreasing in t.

    Exact for power s; bisection-based otherwise.
    """

    family = "composed"
    unbounded = True
    increasing = False

    def __init__(self, s):
        super().__init__(T=np.inf if s.unbounded else 1.0 / s(s.T * 1e-12))
        self.s = s

    def _raw(self, t):
        t = np.asarray(t, dtype=float)
        if isinstance(self.s, Power):
            return (1.0 / t) ** (1.0 / self.s.rho)
        flat = np.atleast_1d(t)
        out = np.array([self.s.inverse(1.0 / v) for v in flat])
        return out.reshape(t.shape) if t.ndim else out[0]


def from_config(spec):
    """Build an index function from a config record.

    Records look like ``{family = "power", rho = 0.75}`` or
    ``{family = "power-log", rho = 0.5, log_exponent = 1.0}`` or
    ``{family = "table", t = [...], value = [...]}``.
    """
    fam = spec.get("family")
    if fam == "power":
        return Power(spec["rho"], T=spec.get("T", 1.0))
    if fam == "power-log":
        return PowerLog(spec["rho"], spec.get("log_exponent", 1.0), T=spec.get("T", 1.0))
    if fam == "table":
        return Table(spec["t"], spec["value"])
    raise DomainError(f"unknown index function family {fam!r}")


# ---------------------------------------------------------------------------
# growth diagnostics
# ---------------------------------------------------------------------------

def dilation(f, t, grid=None):
    """Grid estimate of the dilation function d_f(t) = sup_s f(st)/f(s).

    The returned value is a certified lower bound of the true supremum
    (exact for the power family, where the ratio is constant in s).
    """
    if isinstance(f, Power):
        return float(t) ** f.rho
    if grid is None:
        hi = 1e8 if f.unbounded else f.T
        grid = log_grid(hi * 1e-16, hi, 128)
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise DomainError("dilation: empty grid")
    if not f.unbounded:
        grid = grid[(grid * t <= f.T) & (grid <= f.T)]
        if grid.size == 0:
            raise DomainError("dilation: no grid point keeps s and s*t in domain")
    num = f._eval_extended(grid * t)
    den = f._eval_extended(grid)
    ok = den > 0
    if not np.any(ok):
        raise DomainError("dilation: f vanishes on the whole grid")
    return float(np.max(num[ok] / den[ok]))


@dataclass(frozen=True)
class IndicesEstimate:
    """Numerical extension indices with slope-fit residuals."""

    alpha: float
    beta: float
    alpha_residual: float
    beta_residual: float
    diverged: bool

    def as_tuple(self):
        return (self.alpha, self.beta)


def _log_slope(ts, vals):
    x, y = np.log(ts), np.log(vals)
    slope, intercept = np.polyfit(x, y, 1)
    resid = float(np.max(np.abs(y - (slope * x + intercept)))) / max(
        np.ptp(y), 1e-12
    )
    return float(slope), resid


def extension_indices(f, small=(1e-8, 1e-4), large=(1e4, 1e8), n_t=17,
                      dilation_grid=None):
    """Estimate the extension indices (alpha_f, beta_f).

    alpha_f is the limiting slope of log d_f(t)/log t as t -> 0, beta_f the
    slope as t -> inf; both are reported from a least-squares fit on log
    grids with the worst-case fit residual.  ``diverged`` flags residual
    above 0.05 on either end.
    """
    if isinstance(f, Power):
        return IndicesEstimate(f.rho, f.rho, 0.0, 0.0, False)
    ts_small = np.geomspace(small[0], small[1], n_t)
    ts_large = np.geomspace(large[0], large[1], n_t)
    d_small = np.array([dilation(f, t, dilation_grid) for t in ts_small])
    d_large = np.array([dilation(f, t, dilation_grid) for t in ts_large])
    alpha, r_a = _log_slope(ts_small, d_small)
    beta, r_b = _log_slope(ts_large, d_large)
    return IndicesEstimate(alpha, beta, r_a, r_b, max(r_a, r_b) > 0.05)


@dataclass(frozen=True)
class Delta2Estimate:
    """Doubling constants D1 = inf f(2t)/f(t), D2 = sup f(2t)/f(t) on a grid."""

    D1: float
    D2: float
    unbounded: bool
    witness_D2: float

    def as_tuple(self):
        return (self.D1, self.D2)


def check_delta2(f, grid=None, drift_factor=10.0):
    """Estimate the doubling (Delta_2) constants of f on a log grid.

    Flags ``unbounded`` when the per-decade supremum of f(2t)/f(t) drifts by
    more than ``drift_factor`` across the grid, which is the numerical
    signature of a failing Delta_2 condition.
    """
    if grid is None:
        hi = (1e6 if f.unbounded else f.T) / 2
        grid = log_grid(hi * 1e-10, hi, 128)
    grid = np.asarray(grid, dtype=float)
    if grid.size == 0:
        raise DomainError("check_delta2: empty grid")
    if not f.unbounded:
        grid = grid[2 * grid <= f.T]
    vals = f._eval_extended(grid)
    ok = vals > 0
    grid, vals = grid[ok], vals[ok]
    ratios = f._eval_extended(2 * grid) / vals
    decades = np.floor(np.log10(grid))
    per_decade = [np.max(ratios[decades == d]) for d in np.unique(decades)]
    drift = max(per_decade) / max(min(per_decade), 1e-300)
    k = int(np.argmax(ratios))
    return Delta2Estimate(
        D1=float(np.min(ratios)),
        D2=float(np.max(ratios)),
        unbounded=bool(drift > drift_factor) or not np.isfinite(np.max(ratios)),
        witness_D2=float(grid[k]),
    )


@dataclass(frozen=True)
class ConditionVerdict:
    holds: bool
    witness: float
    margin: float


@dataclass(frozen=True)
class GrowthReport:
    """Executable check of the growth assumptions on (phi, psi).

    ``conditions`` maps each named requirement to its verdict; failed
    conditions carry the violating grid point as witness.  ``delta2`` and
    ``indices`` hold the per-function numeric estimates.
    """

    conditions: dict = field(default_factory=dict)
    delta2: dict = field(default_factory=dict)
    indices: dict = field(default_factory=dict)

    @property
    def passed(self):
        return all(v.holds for v in self.conditions.values())

    def failures(self):
        return {k: v for k, v in self.conditions.items() if not v.holds}

    def summary_lines(self):
        lines = []
        for name, v in sorted(self.conditions.items()):
            status = "PASS" if v.holds else "FAIL"
            lines.append(
                f"{status} {name} margin={v.margin:.3e} witness={v.witness:.6g}"
            )
        return lines


def _monotone_verdict(ts, vals):
    diffs = np.diff(vals)
    scale = np.maximum(np.abs(vals[:-1]), 1e-300)
    margins = diffs / scale
    k = int(np.argmin(margins))
    worst = float(margins[k])
    return ConditionVerdict(holds=worst >= -1e-10, witness=float(ts[k + 1]), margin=worst)


def _concave_verdict(ts, vals):
    # slope differences generalize second differences to nonuniform grids
    slopes = np.diff(vals) / np.diff(ts)
    drops = slopes[:-1] - slopes[1:]
    scale = np.maximum(np.abs(slopes[:-1]), 1e-300)
    margins = drops / scale
    k = int(np.argmin(margins))
    worst = float(margins[k])
    return ConditionVerdict(holds=worst >= -1e-8, witness=float(ts[k + 1]), margin=worst)


def check_growth_assumptions(phi, psi, grid=None, s=None):
    """Certify the relative-growth requirements of the rate theory.

    Checks, on a common log grid: t/phi nondecreasing, phi/psi nondecreasing,
    t/psi concave, and the Delta_2 condition for phi, psi (and s when given).
    Extension indices of phi and psi are attached for reporting.
    """
    T = min(phi.T, psi.T)
    if grid is None:
        grid = log_grid(T * 1e-8, T)
    grid = np.asarray(grid, dtype=float)
    phi_v = phi._eval_extended(grid)
    psi_v = psi._eval_extended(grid)

    conditions = {
        "t/phi nondecreasing": _monotone_verdict(grid, grid / phi_v),
        "phi/psi nondecreasing": _monotone_verdict(grid, phi_v / psi_v),
        "t/psi concave": _concave_verdict(grid, grid / psi_v),
    }
    delta2 = {"phi": check_delta2(phi), "psi": check_delta2(psi)}
    if s is not None:
        delta2["s"] = check_delta2(s)
    for name, est in delta2.items():
        conditions[f"{name} delta2"] = ConditionVerdict(
            holds=(est.D1 > 1.0 and not est.unbounded),
            witness=est.witness_D2,
            margin=est.D1 - 1.0,
        )
    indices = {"phi": extension_indices(phi), "psi": extension_indices(psi)}
    return GrowthReport(conditions=conditions, delta2=delta2, indices=indices)
