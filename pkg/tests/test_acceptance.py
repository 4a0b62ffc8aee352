"""Acceptance suite: every top-level criterion at its stated tolerance.

Each test prints one PASS/FAIL line (visible under pytest -s) and asserts
the criterion, so the suite doubles as the go/no-go gate for the package.
"""

import math
import os

import numpy as np
import pytest

from krrlab import krr, rates
from krrlab.cli import main as cli_main
from krrlab.errors import DomainError
from krrlab.fourier import (RadialKernel, compare_empirical,
                            gram_min_eig_bound, interpolation_check,
                            random_cloud)
from krrlab.index_functions import Power
from krrlab.packing import build_packing, kl_radius, verify_family
from krrlab.rearrangement import boas_check, fundamental_function_check
from krrlab.spectral import build_model, make_target

PHI, PSI, S_ID = Power(0.75), Power(0.5), Power(1.0, T=1e18)
CONFIG_DIR = os.path.join(os.path.dirname(__file__), "..", "configs")


def _report(num, name, passed, detail):
    status = "PASS" if passed else "FAIL"
    print(f"[criterion {num:2d}] {status} {name}: {detail}")
    assert passed, f"criterion {num} failed: {detail}"


@pytest.fixture(scope="module")
def c1_report():
    model = build_model("trigonometric", N=512, decay=0.5)
    target = make_target(model, PHI, decay=0.5, norm=1.0)
    return rates.run_experiment(
        model, target, PHI, PSI, S_ID, sigma_bar=0.5,
        n_grid=[64, 128, 256, 512, 1024, 2048], trials=20,
        master_seed=20260810)


def test_criterion_01_rate_reproduction(c1_report):
    slope = c1_report.slope
    ok = abs(slope - (-0.30)) <= 0.07
    _report(1, "C1 RMSE log-log slope -0.30 +/- 0.07", ok,
            f"slope={slope:.4f} half_width={c1_report.half_width:.4f}")


def test_criterion_02_schedule_balance(c1_report):
    balances = [p.balance for p in c1_report.points]
    extra = [rates.balance_ratio(PHI, PSI, S_ID, n)
             for n in (1, 7, 33, 10**6)]
    allb = balances + extra
    ok = all(0.5 <= b <= 2.0 for b in allb)
    _report(2, "schedule balance in [1/2, 2]", ok,
            f"range [{min(allb):.6f}, {max(allb):.6f}]")


def test_criterion_03_bias_bound():
    model = build_model("trigonometric", N=256, decay=0.5)
    rng = np.random.default_rng(314)
    lam_grid = np.geomspace(1e-4, 1.0, 40)
    violations = 0
    for _ in range(20):
        c = rng.standard_normal(model.N) / np.arange(1, model.N + 1)
        target = make_target(model, PHI, coefficients=c)
        for lam in lam_grid:
            exact = rates.exact_bias(model, target, lam)
            bound = rates.bias_bound(PHI, lam, target.norm_phi)
            violations += exact > bound + 1e-12
    _report(3, "exact bias <= sqrt(phi(lambda))||f*||_phi", violations == 0,
            f"{violations} violations over 800 (lambda, target) pairs")


def test_criterion_04_uniform_bias_bound():
    model = build_model("trigonometric", N=256, decay=0.5)
    k_psi = model.k_sup_norm(PSI)
    rng = np.random.default_rng(2718)
    lam_grid = np.geomspace(1e-4, 1.0, 40)
    violations = 0
    for _ in range(20):
        c = rng.standard_normal(model.N) / np.arange(1, model.N + 1)
        target = make_target(model, PHI, coefficients=c)
        for lam in lam_grid:
            pop = krr.population_solution(model, target, lam)
            sup = krr.sup_error(model, pop, target)
            bound = rates.uniform_bias_bound(PHI, PSI, lam, k_psi,
                                             target.norm_phi)
            violations += sup > bound + 1e-12
    _report(4, "grid sup bias <= uniform bias bound", violations == 0,
            f"{violations} violations over 800 (lambda, target) pairs")


def test_criterion_05_effective_dimension():
    model = build_model("trigonometric", N=512, psi=PSI)
    res = rates.effdim_bound_check(model, PSI, S_ID,
                                   np.geomspace(1e-4, 1e-1, 60))
    ok = np.isfinite(res["sup_ratio"]) and res["max_decade_drift"] < 2.0
    _report(5, "N(lambda)/s^-1(psi(lambda)^-1) finite, decade drift < 2", ok,
            f"sup={res['sup_ratio']:.4f} drift={res['max_decade_drift']:.4f}")


def test_criterion_06_eigendecay_inference():
    results = {}
    trig = build_model("trigonometric", N=64, psi=PSI)
    results["trigonometric"] = compare_empirical(
        PSI, trig.s, trig.kernel, trig.sample_nu, 16, m=512, seed=606)
    geg = build_model("gegenbauer", N=64, gamma=1.0, psi=Power(1.0, T=10))
    results["gegenbauer"] = compare_empirical(
        Power(1.0, T=10), geg.s, geg.kernel, geg.sample_nu, 16, m=512,
        seed=606)
    ok = all(0.25 <= r["ratio_min"] and r["ratio_max"] <= 4.0
             for r in results.values())
    detail = "; ".join(f"{k}: [{v['ratio_min']:.3f}, {v['ratio_max']:.3f}]"
                       for k, v in results.items())
    _report(6, "empirical Gram spectrum within [1/4, 4] of inferred", ok,
            detail)


def test_criterion_07_gram_eigenvalue_bound():
    total = 0
    violations = 0
    for profile in ("gaussian", "exponential", "matern"):
        for d in (1, 2, 3):
            kernel = RadialKernel(profile, d=d)
            seeds = np.random.SeedSequence([99, d, total]).generate_state(200)
            for ci in range(200):
                rng = np.random.default_rng(int(seeds[ci]))
                n = int(rng.integers(4, 33))
                extent = float(rng.choice([0.5, 1.0, 5.0, 20.0]))
                pts, _ = random_cloud(n, d, extent, seed=int(seeds[ci]))
                res = gram_min_eig_bound(kernel, pts)
                violations += not res.holds
                total += 1
    _report(7, "lambda_min(K) >= separation lower bound", violations == 0,
            f"{violations} violations over {total} clouds "
            "(3 kernels x 3 dims x 200)")


def test_criterion_08_interpolation_inequality():
    margins = {}
    for tag, model in (
            ("trigonometric", build_model("trigonometric", N=128, decay=0.5)),
            ("gegenbauer", build_model("gegenbauer", N=64, gamma=1.0,
                                       decay=0.5))):
        margins[tag] = interpolation_check(model, PSI, n_draws=1000, seed=8)
    ok = all(m >= -1e-10 for m in margins.values())
    _report(8, "interpolation inequality margin >= -1e-10", ok,
            "; ".join(f"{k}: {v:.3e}" for k, v in margins.items()))


def test_criterion_09_packing_exactness():
    model = build_model("trigonometric", N=128, decay=0.5)
    fam = build_packing(model, PHI, eps=1e-4, budget_phi=1.0, budget_sup=1.0,
                        seed=909)
    verify_family(fam)
    min_dist = math.ceil(fam.m / 8)
    hamming_ok = all(
        int(np.sum(fam.strings[j] != fam.strings[k])) >= min_dist
        for j in range(fam.size) for k in range(j + 1, fam.size))
    size_ok = fam.size >= 2 ** (fam.m / 8) - 1e-9
    sep_ok = all(
        fam.pairwise_l2_sq(j, k) == pytest.approx(
            32 * fam.eps / fam.m
            * int(np.sum(fam.strings[j] != fam.strings[k])), rel=1e-12)
        and fam.pairwise_l2_sq(j, k) >= 4 * fam.eps - 1e-15
        for j in range(fam.size) for k in range(j + 1, fam.size))
    radius = kl_radius(fam, 50, 0.5)
    kl_ok = radius <= 16 * 50 * fam.eps / 0.25 + 1e-12
    ok = hamming_ok and size_ok and sep_ok and kl_ok
    _report(9, "packing invariants exact", ok,
            f"m={fam.m} M={fam.size} min_dist={min_dist} "
            f"kl={radius:.4g}")


def test_criterion_10_orlicz_lorentz_fundamental():
    worst = 0.0
    for rho, p in ((2.0, 0.5), (0.75, 0.25), (1.0, 0.5)):
        res = fundamental_function_check(rho, p, np.geomspace(1e-3, 1e3, 31))
        worst = max(worst, res["deviation_closed_form"])
    _report(10, "O-L gauge matches (s^(1-p)/(1-p))^(1/rho) within 1e-6",
            worst <= 1e-6, f"max rel deviation {worst:.2e}")


def test_criterion_11_boas_two_sidedness():
    profiles = {
        "exp": lambda r: np.exp(-np.asarray(r, dtype=float)),
        "poly4": lambda r: (1.0 + np.asarray(r, dtype=float)) ** -4,
    }
    ratios = []
    for profile in profiles.values():
        res = boas_check(profile, Power(0.25, T=1e300), 2.0, 1)
        ratios += [res["ratio_min"], res["ratio_max"]]
    in_band = all(1 / 50 <= r <= 50 for r in ratios)
    try:
        boas_check(lambda r: np.exp(-1.0 / np.asarray(r, dtype=float)),
                   Power(0.25, T=1e300), 2.0, 1)
        rejected = False
    except DomainError:
        rejected = True
    ok = in_band and rejected
    _report(11, "Boas ratios within [1/50, 50]; bad profile rejected", ok,
            f"ratios [{min(ratios):.3f}, {max(ratios):.3f}], "
            f"rejected={rejected}")


def test_criterion_12_determinism(tmp_path):
    cfg = os.path.join(CONFIG_DIR, "assumptions.toml")
    out_a, out_b = tmp_path / "a", tmp_path / "b"
    code_a = cli_main(["run", cfg, "--out", str(out_a)])
    code_b = cli_main(["run", cfg, "--out", str(out_b)])
    identical = all(
        (out_a / name).read_bytes() == (out_b / name).read_bytes()
        for name in os.listdir(out_a))
    ok = code_a == 0 and code_b == 0 and identical
    _report(12, "fixed seed -> byte-identical artifacts", ok,
            f"{len(os.listdir(out_a))} artifacts compared")
