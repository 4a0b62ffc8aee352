"""Experiment configuration: TOML parsing, validation, and digesting."""

from __future__ import annotations

import hashlib
import sys
from dataclasses import dataclass, field

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import index_functions as ifn
from .errors import DomainError
from .fourier import RadialKernel
from .index_functions import Power
from .spectral import build_model, make_target

EXPERIMENTS = ("rates", "bounds", "capacity", "rearrangement", "minimax",
               "assumptions")


class ConfigError(ValueError):
    """Invalid experiment configuration (maps to exit code 2)."""


@dataclass
class ExperimentConfig:
    """Validated configuration with its content digest."""

    experiment: str
    seed: int
    raw: dict
    digest: str
    path: str = ""
    options: dict = field(default_factory=dict)

    def index_function(self, name, default=None):
        spec = self.raw.get("index_functions", {}).get(name)
        if spec is None:
            if default is not None:
                return default
            raise ConfigError(f"missing index function {name!r}")
        try:
            return ifn.from_config(spec)
        except (DomainError, KeyError) as exc:
            raise ConfigError(f"bad index function {name!r}: {exc}") from exc

    def build_model(self):
        spec = dict(self.raw.get("model", {}))
        basis = spec.get("basis", "trigonometric")
        N = int(spec.get("N", 512))
        gamma = spec.get("gamma")
        kwargs = {}
        if "explicit" in spec:
            kwargs["eigenvalues"] = spec["explicit"]
        elif spec.get("induced"):
            kwargs["psi"] = self.index_function("psi")
        else:
            kwargs["decay"] = float(spec.get("decay", 0.5))
        try:
            return build_model(basis, N=N, gamma=gamma, **kwargs)
        except DomainError as exc:
            raise ConfigError(f"bad model spec: {exc}") from exc

    def build_target(self, model):
        spec = dict(self.raw.get("target", {}))
        phi = self.index_function("phi")
        try:
            if "coefficients" in spec:
                return make_target(model, phi, coefficients=spec["coefficients"])
            return make_target(model, phi, decay=float(spec.get("decay", 0.5)),
                               norm=float(spec.get("norm", 1.0)),
                               n_modes=spec.get("n_modes"))
        except DomainError as exc:
            raise ConfigError(f"bad target spec: {exc}") from exc

    def build_kernel(self):
        spec = dict(self.raw.get("kernel", {}))
        if not spec:
            raise ConfigError("this experiment needs a [kernel] section")
        try:
            return RadialKernel(
                profile=spec.get("profile", "gaussian"),
                d=int(spec.get("d", 1)),
                length=float(spec.get("length", 1.0)),
                nu_smooth=float(spec.get("nu_smooth", 1.5)),
                table_r=spec.get("table_r"),
                table_F=spec.get("table_F"),
            )
        except DomainError as exc:
            raise ConfigError(f"bad kernel spec: {exc}") from exc

    def s_function(self, model=None):
        if "s" in self.raw.get("index_functions", {}):
            return self.index_function("s")
        if model is not None:
            return model.s
        return Power(1.0, T=1e18)

    @property
    def sigma_bar(self):
        return float(self.raw.get("noise", {}).get("sigma_bar", 0.5))


def load_config(path, seed_override=None):
    """Parse and validate a TOML experiment configuration."""
    try:
        with open(path, "rb") as fh:
            data = fh.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config: {exc}") from exc
    try:
        raw = tomllib.loads(data.decode("utf-8"))
    except (tomllib.TOMLDecodeError, UnicodeDecodeError) as exc:
        raise ConfigError(f"config parse error: {exc}") from exc

    experiment = raw.get("experiment")
    if experiment not in EXPERIMENTS:
        raise ConfigError(
            f"experiment must be one of {EXPERIMENTS}, got {experiment!r}"
        )
    seed = int(seed_override if seed_override is not None
               else raw.get("seed", 0))
    digest = hashlib.sha256(data).hexdigest()[:16]
    options = dict(raw.get(experiment, {}))
    return ExperimentConfig(experiment=experiment, seed=seed, raw=raw,
                            digest=digest, path=str(path), options=options)
