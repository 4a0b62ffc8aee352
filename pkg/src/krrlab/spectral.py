"""Synthetic Mercer systems.

A :class:`SpectralModel` is a truncated Mercer system {mu_i, e_i} over a
one-dimensional domain with probability measure nu.  Two orthonormal bases
are built in:

* trigonometric on [0, 2pi] with uniform nu -- the constant function
  followed by sqrt(2)*cos(j x), sqrt(2)*sin(j x) pairs; the Christoffel
  growth function is s(t) = t;
* Gegenbauer with parameter gamma >= 0 on [-1, 1] with the normalized
  weight (1 - x^2)^(gamma - 1/2) as nu; s(t) = t^(2*gamma + 1).

All operators (covariance, embedding, its adjoint) are diagonal in the
basis, so Hilbert-scale norms and error functionals reduce to weighted
coefficient sums, exact up to the declared truncation.
"""

from __future__ import annotations

import csv
import math
from dataclasses import dataclass, field

import numpy as np
from scipy.special import gammaln, roots_jacobi

from .errors import CertificationError, DomainError
from .index_functions import Power

DEFAULT_TRUNCATION = 512
ORTHONORMALITY_TOL = 1e-8


def _trig_basis(x, n):
    """First n trigonometric basis functions at points x (orthonormal in
    L2 of the uniform measure on [0, 2pi])."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    out = np.empty((x.size, n))
    out[:, 0] = 1.0
    root2 = math.sqrt(2.0)
    for i in range(1, n):
        j = (i + 1) // 2
        if i % 2 == 1:
            out[:, i] = root2 * np.cos(j * x)
        else:
            out[:, i] = root2 * np.sin(j * x)
    return out


def _gegenbauer_b(k, a):
    # monic Jacobi(a, a) recurrence coefficient b_k, k >= 1; valid for
    # a > -1/2 (the Chebyshev case a = -1/2 is handled separately)
    return k * (k + 2 * a) / ((2 * k + 2 * a + 1) * (2 * k + 2 * a - 1))


def _gegenbauer_basis(x, n, gamma):
    """First n orthonormal polynomials for the probability measure with
    density (1-x^2)^(gamma-1/2)/Z on [-1, 1], by the normalized three-term
    recurrence sqrt(b_{k+1}) p_{k+1} = x p_k - sqrt(b_k) p_{k-1}."""
    x = np.atleast_1d(np.asarray(x, dtype=float))
    if gamma == 0.0:
        # Chebyshev: stable closed form
        theta = np.arccos(np.clip(x, -1.0, 1.0))
        out = np.empty((x.size, n))
        out[:, 0] = 1.0
        for k in range(1, n):
            out[:, k] = math.sqrt(2.0) * np.cos(k * theta)
        return out
    a = gamma - 0.5
    out = np.empty((x.size, n))
    out[:, 0] = 1.0
    if n == 1:
        return out
    b = [_gegenbauer_b(k, a) for k in range(1, n)]
    out[:, 1] = x / math.sqrt(b[0])
    for k in range(1, n - 1):
        out[:, k + 1] = (x * out[:, k] - math.sqrt(b[k - 1]) * out[:, k - 1]) / math.sqrt(b[k])
    return out


def _gegenbauer_quadrature(n_nodes, gamma):
    """Gauss-Jacobi nodes/weights normalized to the probability measure."""
    a = gamma - 0.5
    nodes, weights = roots_jacobi(n_nodes, a, a)
    # total mass of (1-x^2)^a on [-1,1] = 2^(2a+1) B(a+1, a+1)
    log_mass = (2 * a + 1) * math.log(2) + 2 * gammaln(a + 1) - gammaln(2 * a + 2)
    return nodes, weights / math.exp(log_mass)


@dataclass(frozen=True)
class Dataset:
    """n observation pairs with the noise parameters they were drawn under."""

    x: np.ndarray
    y: np.ndarray
    sigma: float
    L: float
    seed: int

    @property
    def n(self):
        return self.x.size

    def to_csv(self, path):
        with open(path, "w", newline="") as fh:
            writer = csv.writer(fh)
            writer.writerow(["x", "y"])
            for xi, yi in zip(self.x, self.y):
                writer.writerow([repr(float(xi)), repr(float(yi))])

    @classmethod
    def from_csv(cls, path, sigma=0.0, L=0.0, seed=0):
        with open(path, newline="") as fh:
            reader = csv.reader(fh)
            header = next(reader)
            if [h.strip() for h in header] != ["x", "y"]:
                raise DomainError(f"dataset CSV must have header x,y, got {header}")
            rows = [(float(a), float(b)) for a, b in reader]
        x = np.array([r[0] for r in rows])
        y = np.array([r[1] for r in rows])
        return cls(x=x, y=y, sigma=sigma, L=L, seed=seed)


class SpectralModel:
    """Truncated Mercer system with nonincreasing positive eigenvalues.

    Parameters
    ----------
    basis : "trigonometric" or "gegenbauer"
    eigenvalues : 1-d array, nonincreasing and positive
    gamma : Gegenbauer parameter (ignored for the trigonometric basis)
    s_function : declared Christoffel growth function; defaults to the one
        induced by the basis family
    decay_exponent : declared tail law mu_i ~ i^(-decay_exponent) used for
        truncation-tail estimates; fitted from the spectrum when omitted
    """

    def __init__(self, basis, eigenvalues, gamma=None, s_function=None,
                 decay_exponent=None, certify=True):
        eigenvalues = np.asarray(eigenvalues, dtype=float)
        if eigenvalues.ndim != 1 or eigenvalues.size < 1:
            raise DomainError("eigenvalues must be a nonempty 1-d array")
        if np.any(eigenvalues <= 0):
            raise DomainError("eigenvalues must be strictly positive")
        if np.any(np.diff(eigenvalues) > 1e-12 * eigenvalues[:-1]):
            raise DomainError("eigenvalues must be nonincreasing")
        if basis not in ("trigonometric", "gegenbauer"):
            raise DomainError(f"unknown basis {basis!r}")
        if basis == "gegenbauer":
            if gamma is None or gamma < 0:
                raise DomainError("gegenbauer basis needs gamma >= 0")
            self.gamma = float(gamma)
        else:
            self.gamma = None
        self.basis = basis
        self.mu = eigenvalues
        self.N = eigenvalues.size
        self.d = 1
        if s_function is None:
            s_function = Power(1.0 if basis == "trigonometric" else 2 * self.gamma + 1,
                               T=1e18)
        self.s = s_function
        if decay_exponent is None:
            # fit the declared tail law from the last eigenvalue decade
            k = max(self.N // 2, 1)
            idx = np.arange(k, self.N + 1)
            if idx.size < 2:
                decay_exponent = 1.0
            else:
                decay_exponent = -np.polyfit(np.log(idx),
                                             np.log(self.mu[k - 1:]), 1)[0]
        self.decay_exponent = float(decay_exponent)
        if certify:
            self.certify_orthonormality()

    # -- domain -----------------------------------------------------------
    @property
    def support(self):
        return (0.0, 2 * math.pi) if self.basis == "trigonometric" else (-1.0, 1.0)

    def grid(self, n_points=2048):
        lo, hi = self.support
        return np.linspace(lo, hi, n_points)

    # -- basis ------------------------------------------------------------
    def basis_matrix(self, x, n=None):
        """Matrix [e_i(x_j)]_{j,i} of the first n basis functions."""
        n = self.N if n is None else n
        if n > self.N:
            raise DomainError(f"requested {n} functions from model of size {self.N}")
        if self.basis == "trigonometric":
            return _trig_basis(x, n)
        return _gegenbauer_basis(x, n, self.gamma)

    def certify_orthonormality(self, n_nodes=None, tol=ORTHONORMALITY_TOL):
        """Check the basis Gram under high-order quadrature equals identity."""
        if self.basis == "trigonometric":
            m = max(4 * self.N + 1, 64)
            # uniform-grid quadrature is exact for trigonometric polynomials
            x = np.linspace(0.0, 2 * math.pi, m, endpoint=False)
            w = np.full(m, 1.0 / m)
        else:
            m = n_nodes or max(2 * self.N, 256)
            x, w = _gegenbauer_quadrature(m, self.gamma)
        E = self.basis_matrix(x)
        gram = E.T @ (E * w[:, None])
        err = np.max(np.abs(gram - np.eye(self.N)))
        if err > tol:
            raise CertificationError(
                f"orthonormality certificate failed: max |Gram - I| = {err:.3e}"
            )
        return float(err)

    # -- kernel -----------------------------------------------------------
    def kernel(self, x, y):
        """Mercer kernel k(x, y) = sum_i mu_i e_i(x) e_i(y); vectorized to a
        matrix when x, y are arrays."""
        Ex = self.basis_matrix(np.atleast_1d(x))
        Ey = self.basis_matrix(np.atleast_1d(y))
        K = (Ex * self.mu) @ Ey.T
        if np.isscalar(x) and np.isscalar(y):
            return float(K[0, 0])
        return K

    # -- norms ------------------------------------------------------------
    def hilbert_norm(self, coeffs, f):
        """Hilbert-scale norm sqrt(sum c_i^2 / f(mu_i)) of sum c_i e_i."""
        coeffs = np.asarray(coeffs, dtype=float)
        if coeffs.size > self.N:
            raise DomainError("more coefficients than basis functions")
        weights = f(self.mu[: coeffs.size])
        weights = np.atleast_1d(np.asarray(weights, dtype=float))
        if np.any(weights <= 0):
            raise DomainError("index function vanishes on an active eigenvalue")
        return float(np.sqrt(np.sum(coeffs**2 / weights)))

    def k_sup_norm(self, f, x_grid=None):
        """Grid estimate (certified lower bound) of the embedding constant
        ||k^f||_inf = sup_x sqrt(sum f(mu_i) e_i(x)^2)."""
        if x_grid is None:
            x_grid = self.grid(4096)
        vals = np.atleast_1d(np.asarray(f(self.mu), dtype=float))
        E = self.basis_matrix(x_grid)
        return float(np.sqrt(np.max((E**2) @ vals)))

    def christoffel(self, n, x_grid=None):
        """Grid supremum of sqrt(sum_{i<=n} e_i(x)^2), the sharp constant in
        the coefficient-to-sup-norm inequality; estimates sqrt(s(n))."""
        if n > self.N:
            raise DomainError(f"n={n} exceeds truncation {self.N}")
        if x_grid is None:
            x_grid = self.grid(4096)
            if self.basis == "gegenbauer":
                # supremum sits at the endpoints for Gegenbauer systems
                x_grid = np.concatenate(([-1.0], x_grid, [1.0]))
        E = self.basis_matrix(x_grid, n)
        return float(np.sqrt(np.max(np.sum(E**2, axis=1))))

    # -- tail accounting --------------------------------------------------
    def tail_estimate(self, f):
        """Estimate sum_{i>N} f(mu_i) from the declared eigenvalue decay law,
        by integral comparison on mu(t) = mu_N (t/N)^(-decay)."""
        p = self.decay_exponent
        ts = self.N * np.geomspace(1.0, 1e6, 2048)
        mus = self.mu[-1] * (ts / self.N) ** (-p)
        vals = np.atleast_1d(np.asarray(f(mus), dtype=float))
        return float(np.trapezoid(vals, ts))

    # -- sampling ---------------------------------------------------------
    def sample_nu(self, n, rng):
        """Draw n i.i.d. points from nu (inverse CDF for the uniform case;
        Chebyshev change-of-variable with rejection for Gegenbauer)."""
        if self.basis == "trigonometric":
            return rng.random(n) * 2 * math.pi
        gamma = self.gamma
        out = np.empty(n)
        have = 0
        while have < n:
            m = max(int((n - have) * 2.2), 64)
            theta = rng.random(m) * math.pi
            u = rng.random(m)
            accept = u <= np.sin(theta) ** (2 * gamma)
            got = np.cos(theta[accept])
            take = min(got.size, n - have)
            out[have: have + take] = got[:take]
            have += take
        return out

    def __repr__(self):
        tag = self.basis if self.gamma is None else f"{self.basis}(gamma={self.gamma})"
        return f"SpectralModel({tag}, N={self.N})"


@dataclass(frozen=True)
class TargetSpec:
    """Target f* = sum_i a_i phi^(1/2)(mu_i) e_i with its cached norms.

    The parameterization makes the source-condition norm exact:
    ||f*||_phi = ||a||_2.
    """

    coefficients: np.ndarray
    phi: object
    model: SpectralModel
    norm_phi: float = field(init=False)
    norm_l2: float = field(init=False)

    def __post_init__(self):
        a = np.asarray(self.coefficients, dtype=float)
        if a.size > self.model.N:
            raise DomainError("target has more coefficients than the model")
        object.__setattr__(self, "coefficients", a)
        object.__setattr__(self, "norm_phi", float(np.linalg.norm(a)))
        object.__setattr__(self, "norm_l2",
                           float(np.linalg.norm(self.l2_coefficients())))

    def l2_coefficients(self):
        """Coefficients of f* in the L2(nu) basis: a_i phi^(1/2)(mu_i)."""
        mus = self.model.mu[: self.coefficients.size]
        vals = np.atleast_1d(np.asarray(self.phi(mus), dtype=float))
        return self.coefficients * np.sqrt(vals)

    def evaluate(self, x):
        c = self.l2_coefficients()
        E = self.model.basis_matrix(np.atleast_1d(x), c.size)
        out = E @ c
        return float(out[0]) if np.isscalar(x) else out

    def sup_norm_estimate(self, n_points=4096):
        return float(np.max(np.abs(self.evaluate(self.model.grid(n_points)))))


def build_model(basis, N=DEFAULT_TRUNCATION, eigenvalues=None, decay=None,
                psi=None, gamma=None, s_function=None):
    """Construct a spectral model from an eigenvalue specification.

    Either pass ``eigenvalues`` explicitly, or ``decay=p`` for
    mu_i = i^(-1/p), or ``psi`` for the induced law
    mu_i = psi^{-1}(s(i)^{-1}) with s the basis growth function.
    """
    if sum(x is not None for x in (eigenvalues, decay, psi)) != 1:
        raise DomainError("specify exactly one of eigenvalues, decay, psi")
    if eigenvalues is not None:
        mu = np.asarray(eigenvalues, dtype=float)
    else:
        idx = np.arange(1, N + 1, dtype=float)
        if decay is not None:
            mu = idx ** (-1.0 / decay)
        else:
            if s_function is None:
                g = 0.0 if basis == "trigonometric" else float(gamma)
                s_function = Power(1.0 if basis == "trigonometric" else 2 * g + 1,
                                   T=1e18)
            s_vals = np.asarray(s_function(idx), dtype=float)
            mu = np.array([psi.inverse(1.0 / sv) for sv in s_vals])
    return SpectralModel(basis, mu, gamma=gamma, s_function=s_function)


def make_target(model, phi, coefficients=None, decay=0.5, norm=1.0, n_modes=None):
    """Build a TargetSpec; default coefficients a_i ~ i^(-decay), scaled to
    the requested source norm."""
    if coefficients is None:
        m = n_modes or model.N
        a = np.arange(1, m + 1, dtype=float) ** (-decay)
        a *= norm / np.linalg.norm(a)
    else:
        a = np.asarray(coefficients, dtype=float)
    return TargetSpec(coefficients=a, phi=phi, model=model)


def draw_dataset(model, target, n, sigma_bar, seed):
    """Sample a dataset: X i.i.d. from nu, Y = f*(X) + N(0, sigma_bar^2).

    Gaussian noise satisfies the moment condition with sigma = L =
    sigma_bar; the draw is deterministic under the seed.
    """
    if n < 1:
        raise DomainError("need n >= 1")
    if sigma_bar < 0:
        raise DomainError("noise level must be nonnegative")
    rng = np.random.default_rng(seed)
    x = model.sample_nu(n, rng)
    y = target.evaluate(x)
    if sigma_bar > 0:
        y = y + sigma_bar * rng.standard_normal(n)
    return Dataset(x=x, y=y, sigma=float(sigma_bar), L=float(sigma_bar),
                   seed=int(seed))
