"""Decreasing rearrangements and rearrangement-invariant (quasi-)norms.

All norm evaluation happens on step functions: continuous inputs are
sampled on declared grids first, after which every integral is a finite
sum, exact on the discretization.  Radial functions use the analytic
change of variable t = omega_d r^d between the radial profile and the
rearrangement.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import BudgetError, DomainError
from .fourier import hankel_transform
from .index_functions import Power, Wrapped

OL_RTOL = 1e-9


@dataclass(frozen=True)
class StepFunction:
    """A decreasing rearrangement: value values[i] on (breakpoints[i-1],
    breakpoints[i]], with an implicit leading breakpoint at 0."""

    breakpoints: np.ndarray
    values: np.ndarray

    def __post_init__(self):
        bp = np.asarray(self.breakpoints, dtype=float)
        v = np.asarray(self.values, dtype=float)
        if bp.shape != v.shape or bp.ndim != 1:
            raise DomainError("breakpoints and values must be matching 1-d arrays")
        if bp.size and (bp[0] <= 0 or np.any(np.diff(bp) <= 0)):
            raise DomainError("breakpoints must be positive and strictly increasing")
        if np.any(v < 0) or np.any(np.diff(v) > 1e-12 * np.maximum(v[:-1], 1e-300)):
            raise DomainError("values must be nonnegative and nonincreasing")
        object.__setattr__(self, "breakpoints", bp)
        object.__setattr__(self, "values", v)

    @property
    def edges(self):
        return np.concatenate([[0.0], self.breakpoints])

    def lp_integral(self, p):
        """integral (g*)^p dt, exact on the steps."""
        widths = np.diff(self.edges)
        return float(np.sum(self.values**p * widths))

    def scale(self, c):
        return StepFunction(self.breakpoints, np.abs(c) * self.values)


def decreasing_rearrangement(samples):
    """Step function of the decreasing rearrangement of weighted samples.

    ``samples`` is an iterable of (value, measure-weight) pairs; the
    result takes |value| sorted decreasingly over cumulative weights,
    preserving the distribution function.
    """
    pairs = [(abs(float(v)), float(w)) for v, w in samples]
    if any(w <= 0 for _, w in pairs):
        raise DomainError("measure weights must be positive")
    pairs.sort(key=lambda vw: -vw[0])
    vals = np.array([v for v, _ in pairs])
    weights = np.array([w for _, w in pairs])
    return StepFunction(np.cumsum(weights), vals)


def indicator(measure):
    """chi_(0, s) as a step function."""
    return StepFunction(np.array([float(measure)]), np.array([1.0]))


def radial_step_function(profile, d, r_grid):
    """Rearrangement of a radial function |x| -> profile(|x|) on R^d.

    For a nonincreasing profile this is the analytic formula
    g*(t) = profile((t/omega_d)^(1/d)); general profiles fall back to
    sorting cell samples against the radial measure.
    """
    r_grid = np.asarray(r_grid, dtype=float)
    if np.any(r_grid <= 0) or np.any(np.diff(r_grid) <= 0):
        raise DomainError("radial grid must be positive increasing")
    omega_d = math.pi ** (d / 2) / math.gamma(d / 2 + 1)
    ts = omega_d * r_grid**d
    vals = np.abs(np.asarray(profile(r_grid), dtype=float))
    if np.all(np.diff(vals) <= 1e-12 * np.maximum(vals[:-1], 1e-300)):
        return StepFunction(ts, vals)
    cells = np.diff(np.concatenate([[0.0], ts]))
    return decreasing_rearrangement(zip(vals, cells))


# ---------------------------------------------------------------------------
# norms
# ---------------------------------------------------------------------------

def _psi_at(f, t):
    # index functions vanish at 0 by definition
    t = np.asarray(t, dtype=float)
    out = np.zeros_like(t)
    pos = t > 0
    out[pos] = f._eval_extended(t[pos])
    return out


def lorentz_norm(g_star, Psi, q=1.0):
    """(integral (g*)^q d(Psi^q))^(1/q) on a step function."""
    if q < 1:
        raise DomainError("need q >= 1")
    psi_edges = _psi_at(Psi, g_star.edges) ** q
    return float(np.sum(g_star.values**q * np.diff(psi_edges)) ** (1.0 / q))


def marcinkiewicz_norm(g_star, phi):
    """sup_t phi(t) g*(t); attained at right endpoints on steps since phi
    is increasing and g* is constant per step."""
    if g_star.values.size == 0:
        return 0.0
    return float(np.max(g_star.values * _psi_at(phi, g_star.breakpoints)))


class PowerWeight:
    """w(t) = t^(-p) with exact step integrals; p < 1 keeps it integrable
    at the origin."""

    def __init__(self, p):
        self.p = float(p)

    def __call__(self, t):
        return np.asarray(t, dtype=float) ** (-self.p)

    def integral(self, a, b):
        if a < 0 or b < a:
            raise DomainError("bad integration limits")
        if self.p >= 1 and a == 0:
            return math.inf
        if self.p == 1:
            return math.log(b / a)
        e = 1 - self.p
        return (b**e - a**e) / e


def orlicz_lorentz_norm(f_star, Phi, weight, rtol=OL_RTOL):
    """Luxemburg-type gauge inf{lam > 0 : integral Phi(f*/lam) w dt <= 1}.

    The integrand is monotone in lam, so bracketing bisection applies.
    ``weight`` must provide exact step integrals (see PowerWeight).
    """
    if np.all(f_star.values == 0):
        return 0.0
    edges = f_star.edges
    w_cells = np.array([weight.integral(a, b)
                        for a, b in zip(edges[:-1], edges[1:])])
    active = f_star.values > 0
    if np.any(np.isinf(w_cells[active])):
        raise DomainError("weight is not integrable where f* is positive")

    def modular(lam):
        vals = np.asarray(Phi._eval_extended(f_star.values[active] / lam))
        return float(np.sum(vals * w_cells[active]))

    hi = lo = max(float(np.max(f_star.values)), 1e-300)
    for _ in range(600):
        if modular(hi) <= 1:
            break
        hi *= 2
    else:
        raise BudgetError("Orlicz-Lorentz gauge: no finite upper bracket")
    for _ in range(600):
        if modular(lo) > 1:
            break
        lo *= 0.5
    else:
        return 0.0
    while (hi - lo) > rtol * hi:
        mid = math.sqrt(lo * hi)
        if modular(mid) <= 1:
            hi = mid
        else:
            lo = mid
    return hi


def fundamental_function_check(rho, p, s_grid):
    """Computed gauge of chi_(0,s) in the weighted Orlicz space with
    Phi = t^rho, w = t^(-p) against the closed form
    (s^(1-p)/(1-p))^(1/rho); also checks the power-form expression
    s^((2-p)/rho) / Phi^{-1}(s) up to the constant (1-p)^(-1/rho).

    Returns the max relative deviation of each comparison over the grid.
    """
    if not (0 < p < 1):
        raise DomainError("need p in (0, 1)")
    if rho <= 0:
        raise DomainError("need rho > 0")
    Phi = Power(rho, T=1e300)
    w = PowerWeight(p)
    dev_closed = 0.0
    dev_form = 0.0
    for s in np.asarray(s_grid, dtype=float):
        computed = orlicz_lorentz_norm(indicator(s), Phi, w, rtol=1e-12)
        closed = (s ** (1 - p) / (1 - p)) ** (1.0 / rho)
        dev_closed = max(dev_closed, abs(computed / closed - 1.0))
        stated = s ** ((2 - p) / rho) / s ** (1.0 / rho)  # Phi^{-1}(s) = s^(1/rho)
        const = (1 - p) ** (-1.0 / rho)
        dev_form = max(dev_form, abs(closed / (const * stated) - 1.0))
    return {"deviation_closed_form": dev_closed, "deviation_stated_form": dev_form}


# ---------------------------------------------------------------------------
# Boas-type two-sided check
# ---------------------------------------------------------------------------

def certify_radial_admissible(profile, d, r_grid=None):
    """Certify the radially-decreasing hypotheses: profile(r) r^(d-1)
    nonincreasing and profile(r) r^(1/2) integrable; raises with the
    failing grid point."""
    if r_grid is None:
        r_grid = np.geomspace(1e-6, 1e6, 600)
    r_grid = np.asarray(r_grid, dtype=float)
    vals = np.abs(np.asarray(profile(r_grid), dtype=float)) * r_grid ** (d - 1)
    bad = np.nonzero(np.diff(vals) > 1e-10 * np.maximum(vals[:-1], 1e-300))[0]
    if bad.size:
        raise DomainError(
            f"profile(r) r^(d-1) increases at r={r_grid[bad[0] + 1]:.6g}"
        )
    half = np.abs(np.asarray(profile(r_grid), dtype=float)) * np.sqrt(r_grid)
    mass = float(np.trapezoid(half, r_grid))
    tail = float(half[-1] * r_grid[-1])
    if not np.isfinite(mass) or tail > 0.01 * max(mass, 1e-300):
        raise DomainError("profile(r) sqrt(r) fails the integrability certificate")
    return mass


def _log_trapezoid(values, r_grid):
    # integral f(r) dr/r on a log grid
    u = np.log(r_grid)
    return float(np.trapezoid(values, u))


def _transform_interpolant(grid, values):
    """Interpolant of transform samples: linear in log r inside the grid,
    power-law extrapolation (fitted on the last decade) above it, constant
    below (radial transforms flatten at the origin)."""
    grid = np.asarray(grid, dtype=float)
    values = np.asarray(values, dtype=float)
    top = grid[-1]
    tail = (grid >= top / 10) & (values > 0)
    if np.count_nonzero(tail) >= 3:
        slope = np.polyfit(np.log(grid[tail]), np.log(values[tail]), 1)[0]
        slope = min(slope, -1e-6)
    else:
        slope = -2.0
    v_top = values[-1]

    def interp(r):
        r = np.asarray(r, dtype=float)
        out = np.interp(np.log(np.maximum(r, grid[0])), np.log(grid), values)
        above = r > top
        if np.any(above):
            out = np.where(above, v_top * (r / top) ** slope, out)
        return out

    return interp


def boas_growth_indices(w, p, t_probe=None):
    """Numerical upper growth indices of the two cumulative weights
    W1_p(t) = int_0^t r^p w(r^{-1})^p dr/r and W2_p(t) = int_0^t w^p dr/r,
    read off as large-t log-slopes."""
    if t_probe is None:
        t_probe = np.geomspace(1e3, 1e7, 9)

    def w1_integrand(r):
        return r**p * np.asarray(w(1.0 / r), dtype=float) ** p

    def w2_integrand(r):
        return np.asarray(w(r), dtype=float) ** p

    def cumulative(fn, t):
        grid = np.geomspace(t * 1e-14, t, 800)
        return _log_trapezoid(fn(grid), grid)

    out = {}
    for name, fn in (("W1", w1_integrand), ("W2", w2_integrand)):
        vals = np.array([cumulative(fn, t) for t in t_probe])
        if np.any(~np.isfinite(vals)) or np.any(vals <= 0):
            out[name] = math.inf
            continue
        slope = np.polyfit(np.log(t_probe), np.log(vals), 1)[0]
        out[name] = float(slope)
    return out


def boas_check(profile, w, p, d, dilates=(0.25, 0.5, 1.0, 2.0, 4.0),
               r_grid=None, ratio_cap=50.0):
    """Two-sided Boas comparison for a radial profile.

    Checks the preconditions (radial admissibility and the growth indices
    beta_W1, beta_W2 < p), then compares

        LHS = int (|F_d f(r)| w(r^-d) r^d)^p dr/r
        RHS = int (w(r^d) |f(r)|)^p dr/r

    across the dilate family f(c .); passes when every LHS/RHS ratio lies
    in [1/ratio_cap, ratio_cap].
    """
    if p < 1:
        raise DomainError("need p >= 1")
    certify_radial_admissible(profile, d)
    growth = boas_growth_indices(w, p)
    if not (growth["W1"] < p and growth["W2"] < p):
        raise DomainError(
            f"growth indices {growth} must lie below p={p}"
        )
    if r_grid is None:
        r_grid = np.geomspace(1e-4, 1e4, 161)
    r_grid = np.asarray(r_grid, dtype=float)

    # dilation identity: F_d[f(c .)](r) = c^-d F_d[f](r/c); transform the
    # base profile once on the widened grid and interpolate
    c_min, c_max = min(dilates), max(dilates)
    base_grid = np.geomspace(r_grid[0] / c_max / 2, r_grid[-1] / c_min * 2, 241)
    base_F = np.array([hankel_transform(profile, r, d) for r in base_grid])
    base_transform = _transform_interpolant(base_grid, base_F)

    results = []
    for c in dilates:
        F_vals = np.abs(base_transform(r_grid / c)) / c**d
        f_vals = np.abs(np.asarray(profile(c * r_grid), dtype=float))
        w_inv = np.asarray(w(r_grid ** (-d)), dtype=float)
        w_fwd = np.asarray(w(r_grid**d), dtype=float)
        lhs = _log_trapezoid((F_vals * w_inv * r_grid**d) ** p, r_grid)
        rhs = _log_trapezoid((w_fwd * f_vals) ** p, r_grid)
        results.append({"dilate": c, "lhs": lhs, "rhs": rhs,
                        "ratio": lhs / rhs})
    ratios = np.array([r["ratio"] for r in results])
    passes = bool(np.all((ratios >= 1 / ratio_cap) & (ratios <= ratio_cap)))
    return {"results": results, "ratio_min": float(ratios.min()),
            "ratio_max": float(ratios.max()), "passes": passes}


# ---------------------------------------------------------------------------
# tight range space check
# ---------------------------------------------------------------------------

def corollary_range_function(psi, p):
    """Psi(t) = t^(1+1/p) / psi^{-1}(t), the fundamental function of the
    optimal q-Lorentz range space; exact power when psi is a power."""
    if isinstance(psi, Power):
        return Power(1 + 1.0 / p - 1.0 / psi.rho, T=1e300)
    def vals(t):
        flat = np.atleast_1d(np.asarray(t, dtype=float))
        inv = np.array([psi.inverse(v) for v in flat])
        out = flat ** (1 + 1.0 / p) / inv
        return out if np.ndim(t) else float(out[0])
    return Wrapped(vals, T=1e300)


def tight_range_check(psi, s, kernel, p, q, profiles,
                      dilates=(0.5, 1.0, 2.0), r_grid=None, ratio_cap=50.0):
    """Bounded-spread check of the Fourier multiplier range space.

    For each admissible radial profile f and dilate c, computes
    g = T f via F g = F_d kappa(||.||^(1/a)) F f (a the growth exponent
    of s), reconstructs the radial profile of g by the inverse transform,
    and compares lorentz_norm(g*, Psi, q) against the L^(p,q) norm of f,
    with Psi(t) = t^(1+1/p)/psi^{-1}(t).  Bounded ratio spread = pass.
    """
    if not isinstance(psi, Power) or not isinstance(s, Power):
        raise DomainError("the range check is defined for power psi and s")
    rho, a = psi.rho, s.rho
    if rho <= p / (p + 1):
        raise DomainError(f"need rho > p/(p+1) = {p / (p + 1):.4g}, got {rho}")
    d = kernel.d
    Psi = corollary_range_function(psi, p)
    lp_fun = Power(1.0 / p, T=1e300)
    if r_grid is None:
        r_grid = np.geomspace(1e-3, 1e3, 121)

    c_min, c_max = min(dilates), max(dilates)
    base_grid = np.geomspace(r_grid[0] / c_max / 2, r_grid[-1] / c_min * 2, 201)

    rows = []
    for name, profile in profiles.items():
        certify_radial_admissible(profile, d)
        base_F = np.array([hankel_transform(profile, r, d) for r in base_grid])
        f_transform = _transform_interpolant(base_grid, base_F)

        for c in dilates:
            def g_hat(r, c=c, f_transform=f_transform):
                r = np.asarray(r, dtype=float)
                mult = np.asarray(kernel.transform(
                    np.maximum(r, 1e-300) ** (1.0 / a)), dtype=float)
                return mult * f_transform(r / c) / c**d

            g_profile = np.array([
                hankel_transform(g_hat, r, d) / (2 * math.pi) ** d
                for r in r_grid
            ])
            g_star = radial_step_function(lambda r: np.interp(
                r, r_grid, np.abs(g_profile)), d, r_grid)
            f_star = radial_step_function(lambda r, c=c: np.abs(
                np.asarray(profile(c * r), dtype=float)), d, r_grid)
            num = lorentz_norm(g_star, Psi, q)
            den = lorentz_norm(f_star, lp_fun, q)
            rows.append({"profile": name, "dilate": c, "range_norm": num,
                         "domain_norm": den, "ratio": num / den})
    ratios = np.array([r["ratio"] for r in rows])
    spread = float(ratios.max() / ratios.min())
    return {"rows": rows, "ratio_min": float(ratios.min()),
            "ratio_max": float(ratios.max()), "spread": spread,
            "passes": bool(spread <= ratio_cap)}
