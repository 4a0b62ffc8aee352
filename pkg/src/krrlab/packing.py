"""Minimax lower-bound construction: binary packings, hard function
families, information radius, and empirical minimax evaluation.

The hard family places 2^(m/8) well-separated binary strings on the modes
m+1..2m of a spectral model, scaled so every member obeys declared source-
and sup-norm budgets.  All set invariants (Hamming separation, pairwise L2
distances, the information radius) are integer or closed-form arithmetic,
verified exactly.
"""

from __future__ import annotations

import csv
import io
import json
import math
import subprocess
from dataclasses import dataclass, field

import numpy as np

from . import krr
from .errors import BudgetError, DomainError
from .spectral import TargetSpec, draw_dataset

GV_MAX_BLOCK = 64


def hamming(a, b):
    return int(np.sum(a != b))


def gilbert_varshamov(m, target_size, seed=0, max_attempts=200_000):
    """Randomized-greedy packing of binary strings with pairwise Hamming
    distance >= ceil(m/8), exhaustively verified.

    The classical counting bound guarantees at least 2^(m/8) such strings
    exist; the search retries until ``target_size`` are found or the
    attempt budget runs out.
    """
    if m < 9:
        raise DomainError(f"block length must be at least 9, got {m}")
    if m > GV_MAX_BLOCK:
        raise DomainError(f"block length capped at {GV_MAX_BLOCK} for exact "
                          "pair verification")
    min_dist = math.ceil(m / 8)
    if target_size > 2 ** m:
        raise DomainError("more strings requested than the cube holds")
    rng = np.random.default_rng(seed)
    strings = [np.zeros(m, dtype=np.int8)]
    attempts = 0
    while len(strings) < target_size and attempts < max_attempts:
        cand = rng.integers(0, 2, size=m, dtype=np.int8)
        attempts += 1
        if all(hamming(cand, s) >= min_dist for s in strings):
            strings.append(cand)
    if len(strings) < target_size:
        raise BudgetError(
            f"greedy search found {len(strings)} < {target_size} strings; "
            "retry with a new seed"
        )
    verify_pairwise_distance(strings, min_dist)
    return strings


def verify_pairwise_distance(strings, min_dist):
    for i in range(len(strings)):
        for j in range(i + 1, len(strings)):
            dist = hamming(strings[i], strings[j])
            if dist < min_dist:
                raise DomainError(
                    f"pair ({i}, {j}) at Hamming distance {dist} < {min_dist}"
                )
    return True


@dataclass(frozen=True)
class PackingFamily:
    """Hard function family f_w = 2 sqrt(8 eps/m) sum_i w_i e_{i+m}."""

    m: int
    eps: float
    strings: list
    model: object
    phi: object
    norm_budget_phi: float
    norm_budget_sup: float
    member_norms: dict = field(default_factory=dict)

    @property
    def size(self):
        return len(self.strings)

    @property
    def scale(self):
        return 2 * math.sqrt(8 * self.eps / self.m)

    def coefficients(self, j):
        """L2(nu) coefficients of member j (zero-padded to 2m)."""
        c = np.zeros(2 * self.m)
        c[self.m:] = self.scale * np.asarray(self.strings[j], dtype=float)
        return c

    def member_target(self, j):
        """Member j wrapped as a TargetSpec (for dataset drawing)."""
        c = self.coefficients(j)
        mus = self.model.mu[: c.size]
        a = c / np.sqrt(np.asarray(self.phi(mus), dtype=float))
        return TargetSpec(coefficients=a, phi=self.phi, model=self.model)

    def pairwise_l2_sq(self, j, k):
        """Exact ||f_j - f_k||^2 = (32 eps / m) * Hamming(w_j, w_k)."""
        return 32 * self.eps / self.m * hamming(self.strings[j], self.strings[k])

    def member_l2_sq(self, j):
        return 32 * self.eps / self.m * int(np.sum(self.strings[j]))

    def separation_floor(self):
        return 4 * self.eps

    def to_json(self, path):
        payload = {
            "m": self.m,
            "eps": self.eps,
            "size": self.size,
            "scale": self.scale,
            "norm_budget_phi": self.norm_budget_phi,
            "norm_budget_sup": self.norm_budget_sup,
            "strings": ["".join(str(int(b)) for b in s) for s in self.strings],
            "member_norms": {str(k): v for k, v in self.member_norms.items()},
        }
        with open(path, "w") as fh:
            json.dump(payload, fh, sort_keys=True, indent=2)


def _member_norms(model, phi, m, eps, string):
    scale_sq = 32 * eps / m
    mus = model.mu[np.arange(m, 2 * m)]
    active = np.asarray(string, dtype=float)
    phi_norm_sq = scale_sq * float(np.sum(active / np.asarray(phi(mus), dtype=float)))
    c = np.zeros(2 * m)
    c[m:] = math.sqrt(scale_sq) * active
    E = model.basis_matrix(model.grid(2048), 2 * m)
    sup = float(np.max(np.abs(E @ c)))
    return math.sqrt(phi_norm_sq), sup


def admissible_block_length(phi, psi, s, eps):
    """The theoretical admissibility scale s~(psi(phi^{-1}(eps))) for the
    block length (reported next to the operational choice)."""
    return s.inverse(1.0 / psi(phi.inverse(eps)))


def build_packing(model, phi, eps, budget_phi, budget_sup, seed=0,
                  target_size=None):
    """Build a verified packing family under explicit norm budgets.

    The block length starts at the largest admissible value (growing m
    until a budget check fails on the all-ones string, then backing off)
    and every generated member's budgets are re-verified; on a member
    violation the block length shrinks and the search reruns.
    """
    if eps <= 0:
        raise DomainError("eps must be positive (a zero family is degenerate)")
    cap = min(GV_MAX_BLOCK, model.N // 2)
    if target_size is not None:
        # keep the family-size invariant M >= 2^(m/8) satisfiable
        cap = min(cap, int(8 * math.log2(target_size)))
    if cap < 9:
        raise DomainError("model truncation too small for packing (need N >= 18)")

    ones_ok = []
    for m in range(9, cap + 1):
        ones = np.ones(m, dtype=np.int8)
        n_phi, n_sup = _member_norms(model, phi, m, eps, ones)
        if n_phi <= budget_phi and n_sup <= budget_sup:
            ones_ok.append(m)
    if not ones_ok:
        m9 = _member_norms(model, phi, 9, eps, np.ones(9, dtype=np.int8))
        raise BudgetError(
            f"no block length in [9, {cap}] meets the budgets "
            f"(at m=9: ||f||_phi={m9[0]:.4g} vs {budget_phi}, "
            f"sup={m9[1]:.4g} vs {budget_sup}); decrease eps"
        )
    m = max(ones_ok)

    while m >= 9:
        size = target_size or max(2, math.ceil(2 ** (m / 8)))
        strings = gilbert_varshamov(m, size, seed=seed)
        norms = {}
        violated = False
        for j, w in enumerate(strings):
            n_phi, n_sup = _member_norms(model, phi, m, eps, w)
            norms[j] = {"phi": n_phi, "sup": n_sup}
            if n_phi > budget_phi or n_sup > budget_sup:
                violated = True
                break
        if not violated:
            fam = PackingFamily(m=m, eps=float(eps), strings=strings,
                                model=model, phi=phi,
                                norm_budget_phi=float(budget_phi),
                                norm_budget_sup=float(budget_sup),
                                member_norms=norms)
            verify_family(fam)
            return fam
        m -= 1
    raise BudgetError("family norms violate the budgets at every block length")


def verify_family(family):
    """Exact verification of the three family invariants."""
    min_dist = math.ceil(family.m / 8)
    verify_pairwise_distance(family.strings, min_dist)
    if family.size < 2 ** (family.m / 8) - 1e-9:
        raise DomainError(
            f"family size {family.size} below 2^(m/8) = {2 ** (family.m / 8):.2f}"
        )
    floor = family.separation_floor()
    for j in range(family.size):
        for k in range(j + 1, family.size):
            sep = family.pairwise_l2_sq(j, k)
            if sep < floor - 1e-12:
                raise DomainError(
                    f"pair ({j}, {k}) separation {sep:.6g} below 4 eps"
                )
    return True


def kl_radius(family, n, sigma):
    """Exact average KL divergence (Gaussian noise) of the member measures
    from the zero-function measure: (n / (2 sigma^2 M)) sum_j ||f_j||^2;
    at most 16 n eps / sigma^2, with equality iff all strings are all-ones.
    """
    if n < 0 or sigma <= 0:
        raise DomainError("need n >= 0 and sigma > 0")
    total = sum(family.member_l2_sq(j) for j in range(family.size))
    radius = n / (2 * sigma**2 * family.size) * total
    cap = 16 * n * family.eps / sigma**2
    if radius > cap + 1e-12 * max(cap, 1.0):
        raise DomainError(f"KL radius {radius:.6g} exceeds 16 n eps/sigma^2")
    return radius


def failure_probability_floor(family, n, sigma):
    """The information-theoretic floor on the worst-member failure
    probability: (sqrt(M)/(1+sqrt(M))) (1 - 48 n eps/(sigma^2 log M)
    - 1/(2 log M)).  Can be nonpositive at desk scale, in which case the
    bound is vacuous."""
    M = family.size
    log_m = math.log(M)
    return (math.sqrt(M) / (1 + math.sqrt(M))) * (
        1 - 48 * n * family.eps / (sigma**2 * log_m) - 1 / (2 * log_m)
    )


def minimax_eval(estimator, family, n, trials, sigma, seed=0):
    """Per-member failure frequencies of an estimator against the family.

    For each member j, ``trials`` datasets are drawn from the member
    measure; a failure is an estimate with ||f_D - f_j|| >= sqrt(eps).
    ``estimator`` maps (dataset, model) to spectral coefficients.
    """
    freqs = []
    for j in range(family.size):
        target = family.member_target(j)
        c_j = family.coefficients(j)
        failures = 0
        seeds = np.random.SeedSequence([seed, j]).generate_state(trials)
        for t in range(trials):
            ds = draw_dataset(family.model, target, n, sigma, int(seeds[t]))
            try:
                c_hat = np.asarray(estimator(ds, family.model), dtype=float)
            except Exception as exc:
                raise RuntimeError(f"estimator hook failed on member {j}") from exc
            m = max(c_hat.size, c_j.size)
            diff = np.zeros(m)
            diff[: c_hat.size] = c_hat
            diff[: c_j.size] -= c_j
            if np.linalg.norm(diff) >= math.sqrt(family.eps):
                failures += 1
        freqs.append(failures / trials)
    floor = failure_probability_floor(family, n, sigma)
    return {"failure_frequencies": freqs, "max_failure": max(freqs),
            "theoretical_floor": floor}


def krr_estimator(lam):
    """In-process estimator hook: KRR at a fixed regularization level."""
    def run(dataset, model):
        return krr.fit(dataset, model, lam).spectral_coefficients
    return run


def oracle_estimator(family, j):
    """Hook that returns the true member j (used as a consistency probe)."""
    coeffs = family.coefficients(j)

    def run(dataset, model):
        return coeffs
    return run


def subprocess_estimator(command):
    """Estimator hook running an external command: the dataset is piped as
    CSV (header x,y) on stdin and the prediction is read as coefficient
    CSV (header i,c) from stdout."""
    def run(dataset, model):
        buf = io.StringIO()
        writer = csv.writer(buf)
        writer.writerow(["x", "y"])
        for xi, yi in zip(dataset.x, dataset.y):
            writer.writerow([repr(float(xi)), repr(float(yi))])
        proc = subprocess.run(command, input=buf.getvalue(), text=True,
                              capture_output=True, check=True, shell=False)
        reader = csv.reader(io.StringIO(proc.stdout))
        header = next(reader)
        if [h.strip() for h in header] != ["i", "c"]:
            raise DomainError(f"estimator output must have header i,c, got {header}")
        rows = sorted((int(i), float(c)) for i, c in reader)
        return np.array([c for _, c in rows])
    return run
