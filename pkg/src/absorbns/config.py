"""YAML configuration documents for simulations.

A document is a flat mapping of scalars with nested ``ic``, ``forcing`` and
``theory`` sections::

    nu: 0.1
    alpha: 0.1
    sigma: 1.5
    grid: 64
    dt: 1.0e-3
    t_end: 10
    ic: {type: taylor_green, amplitude: 1.0}
    forcing: {type: vanishing_power, t_f: 5, epsilon: 1.0e-3, mu: auto}

Unknown keys are errors.
"""

from __future__ import annotations

import math
import re
from dataclasses import dataclass, fields
from pathlib import Path
from typing import Any, Optional

import yaml

from .solver import (
    BoundedConstant,
    Modes,
    RandomDivFree,
    SimConfig,
    TaylorGreen,
    VanishingPower,
    ZeroForcing,
    CustomForcing,
)
from .spectral import TorusGrid
from .theory import mu as mu_of_sigma

__all__ = ["ConfigError", "TheoryOptions", "parse_config", "parse_document", "config_to_dict", "load_config"]


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class TheoryOptions:
    """How the constants entering the bounds are chosen."""

    c_gns: Optional[float] = None
    c_s: Optional[float] = None
    calibrate: bool = False
    calibration_samples: int = 8
    kbar: Optional[float] = None


TOP_KEYS = {
    "nu", "alpha", "sigma", "grid", "domain_length", "dt", "t_end", "sample_interval", "dealias",
    "extinction_tol", "extinction_grace", "stop_on_extinction", "splitting", "cfl_action", "seed",
    "ic", "forcing", "theory",
}
REQUIRED = ("nu", "alpha", "sigma", "grid", "dt", "t_end")
IC_KEYS = {
    "taylor_green": {"amplitude"},
    "random": {"energy", "spectrum_exponent", "seed", "kmax"},
    "modes": {"coefficients"},
}
FORCING_KEYS = {
    "zero": set(),
    "vanishing_power": {"t_f", "epsilon", "mu", "shape"},
    "bounded_constant": {"C_f", "shape"},
}
THEORY_KEYS = {f.name for f in fields(TheoryOptions)}


class Loader(yaml.SafeLoader):
    """Safe loader that also reads ``1e4`` and ``1.0e4`` as floats."""


Loader.add_implicit_resolver(
    "tag:yaml.org,2002:float",
    re.compile(
        r"""^(?:[-+]?(?:[0-9][0-9_]*)\.[0-9_]*(?:[eE][-+]?[0-9]+)?
        |[-+]?(?:[0-9][0-9_]*)(?:[eE][-+]?[0-9]+)
        |\.[0-9_]+(?:[eE][-+]?[0-9]+)?
        |[-+]?\.(?:inf|Inf|INF)
        |\.(?:nan|NaN|NAN))$""",
        re.X,
    ),
    list("-+0123456789."),
)


def load_yaml(text: str):
    return yaml.load(text, Loader=Loader)


def _line_index(text: str) -> dict:
    """Map key paths to 1-based source lines."""
    lines: dict = {}
    try:
        root = yaml.compose(text, Loader=Loader)
    except yaml.YAMLError:
        return lines

    def walk(node, path):
        if isinstance(node, yaml.MappingNode):
            for k, v in node.value:
                p = path + (k.value,)
                lines[p] = k.start_mark.line + 1
                walk(v, p)

    if root is not None:
        walk(root, ())
    return lines


class _Ctx:
    def __init__(self, lines):
        self.lines = lines

    def fail(self, path, msg):
        line = self.lines.get(tuple(path))
        where = ".".join(path) if path else "document"
        loc = f" (line {line})" if line else ""
        raise ConfigError(f"{where}{loc}: {msg}")

    def check_keys(self, mapping, allowed, path):
        if not isinstance(mapping, dict):
            self.fail(path, "expected a mapping")
        for k in mapping:
            if k not in allowed:
                self.fail(list(path) + [str(k)], f"unknown key '{k}' (allowed: {', '.join(sorted(allowed))})")

    def number(self, mapping, key, path, default=None):
        if key not in mapping:
            if default is None:
                self.fail(list(path) + [key], "required key missing")
            return default
        v = mapping[key]
        if isinstance(v, bool) or not isinstance(v, (int, float)):
            self.fail(list(path) + [key], f"expected a number, got {v!r}")
        return float(v)


def _parse_shape(ctx, node, path):
    if node is None:
        return TaylorGreen()
    if isinstance(node, str):
        node = {"type": node}
    ctx.check_keys(node, {"type"} | set().union(*IC_KEYS.values()), path)
    kind = node.get("type", "taylor_green")
    if kind not in IC_KEYS:
        ctx.fail(list(path) + ["type"], f"unknown initial-condition type '{kind}' (allowed: {', '.join(IC_KEYS)})")
    ctx.check_keys(node, {"type"} | IC_KEYS[kind], path)
    if kind == "taylor_green":
        return TaylorGreen(ctx.number(node, "amplitude", path, 1.0))
    if kind == "random":
        seed = node.get("seed")
        kmax = node.get("kmax")
        return RandomDivFree(
            energy=ctx.number(node, "energy", path, 1.0),
            spectrum_exponent=ctx.number(node, "spectrum_exponent", path, -1.0),
            seed=None if seed is None else int(seed),
            kmax=None if kmax is None else float(kmax),
        )
    coeffs = []
    for i, item in enumerate(node.get("coefficients") or []):
        if not (isinstance(item, (list, tuple)) and len(item) == 6):
            ctx.fail(list(path) + ["coefficients"], f"entry {i} must be [kx, ky, re1, im1, re2, im2]")
        kx, ky, a, b, c, d = item
        coeffs.append(((int(kx), int(ky)), (complex(a, b), complex(c, d))))
    return Modes(tuple(coeffs))


def _parse_forcing(ctx, node, sigma):
    path = ["forcing"]
    if node is None:
        return ZeroForcing()
    if isinstance(node, str):
        node = {"type": node}
    ctx.check_keys(node, {"type"} | set().union(*FORCING_KEYS.values()), path)
    kind = node.get("type", "zero")
    if kind not in FORCING_KEYS:
        ctx.fail(path + ["type"], f"unknown forcing type '{kind}' (allowed: {', '.join(FORCING_KEYS)})")
    ctx.check_keys(node, {"type"} | FORCING_KEYS[kind], path)
    if kind == "zero":
        return ZeroForcing()
    shape = _parse_shape(ctx, node.get("shape"), path + ["shape"])
    try:
        if kind == "vanishing_power":
            m = node.get("mu", "auto")
            if m == "auto":
                if not 1 <= sigma < 2:
                    ctx.fail(path + ["mu"], "mu: auto needs 1 <= sigma < 2")
                m = mu_of_sigma(sigma, 2)
            return VanishingPower(
                t_f=ctx.number(node, "t_f", path),
                epsilon=ctx.number(node, "epsilon", path),
                mu=float(m),
                shape=shape,
            )
        return BoundedConstant(C_f=ctx.number(node, "C_f", path), shape=shape)
    except ValueError as exc:
        if isinstance(exc, ConfigError):
            raise
        ctx.fail(path, str(exc))


def parse_document(text: str) -> tuple[SimConfig, TheoryOptions]:
    """Parse and validate a configuration document."""
    try:
        doc = load_yaml(text)
    except yaml.YAMLError as exc:
        mark = getattr(exc, "problem_mark", None)
        loc = f" at line {mark.line + 1}, column {mark.column + 1}" if mark else ""
        ctx_mark = getattr(exc, "context_mark", None)
        if ctx_mark is not None and (mark is None or ctx_mark.line != mark.line):
            loc += f" (construct opened at line {ctx_mark.line + 1})"
        raise ConfigError(f"could not parse configuration{loc}: {getattr(exc, 'problem', exc)}") from None
    if doc is None:
        doc = {}
    ctx = _Ctx(_line_index(text))
    ctx.check_keys(doc, TOP_KEYS, [])
    for key in REQUIRED:
        if key not in doc:
            ctx.fail([key], "required key missing")

    grid_node = doc["grid"]
    if isinstance(grid_node, bool) or not isinstance(grid_node, int):
        ctx.fail(["grid"], f"expected an even integer >= 8, got {grid_node!r}")
    length = ctx.number(doc, "domain_length", [], 2 * math.pi)
    try:
        grid = TorusGrid(grid_node, length)
    except ValueError as exc:
        ctx.fail(["grid"], str(exc))

    sigma = ctx.number(doc, "sigma", [])
    if not sigma > 1:
        ctx.fail(["sigma"], f"σ > 1 required, got {sigma}")

    kwargs: dict[str, Any] = dict(
        nu=ctx.number(doc, "nu", []),
        alpha=ctx.number(doc, "alpha", []),
        sigma=sigma,
        grid=grid,
        dt=ctx.number(doc, "dt", []),
        t_end=ctx.number(doc, "t_end", []),
        initial_condition=_parse_shape(ctx, doc.get("ic"), ["ic"]),
        forcing=_parse_forcing(ctx, doc.get("forcing"), sigma),
    )
    for key in ("sample_interval", "extinction_tol", "extinction_grace"):
        if key in doc:
            kwargs[key] = ctx.number(doc, key, [])
    for key in ("dealias", "stop_on_extinction"):
        if key in doc:
            if not isinstance(doc[key], bool):
                ctx.fail([key], f"expected true/false, got {doc[key]!r}")
            kwargs[key] = doc[key]
    for key in ("splitting", "cfl_action"):
        if key in doc:
            kwargs[key] = str(doc[key])
    if "seed" in doc:
        if isinstance(doc["seed"], bool) or not isinstance(doc["seed"], int) or doc["seed"] < 0:
            ctx.fail(["seed"], f"expected a non-negative integer, got {doc['seed']!r}")
        kwargs["seed"] = doc["seed"]

    if kwargs["dt"] > kwargs["t_end"] and kwargs["t_end"] > 0:
        ctx.fail(["dt"], f"dt <= t_end required (dt={kwargs['dt']}, t_end={kwargs['t_end']})")
    try:
        cfg = SimConfig(**kwargs)
    except ValueError as exc:
        msg = str(exc)
        key = msg.split()[0].replace("σ", "sigma")
        ctx.fail([key] if key in TOP_KEYS else [], msg)

    theory_node = doc.get("theory") or {}
    ctx.check_keys(theory_node, THEORY_KEYS, ["theory"])
    topts = TheoryOptions(
        c_gns=theory_node.get("c_gns"),
        c_s=theory_node.get("c_s"),
        calibrate=bool(theory_node.get("calibrate", False)),
        calibration_samples=int(theory_node.get("calibration_samples", 8)),
        kbar=theory_node.get("kbar"),
    )
    return cfg, topts


def parse_config(source) -> SimConfig:
    """Parse inline YAML text or a path to a YAML file."""
    return load_config(source)[0]


def load_config(source) -> tuple[SimConfig, TheoryOptions]:
    if isinstance(source, Path) or (isinstance(source, str) and "\n" not in source and source.endswith((".yaml", ".yml"))):
        path = Path(source)
        try:
            text = path.read_text()
        except OSError as exc:
            raise ConfigError(f"cannot read configuration {path}: {exc.strerror}") from None
    else:
        text = str(source)
    return parse_document(text)


def _shape_dict(ic) -> dict:
    if isinstance(ic, TaylorGreen):
        return {"type": "taylor_green", "amplitude": ic.amplitude}
    if isinstance(ic, RandomDivFree):
        return {"type": "random", "energy": ic.energy, "spectrum_exponent": ic.spectrum_exponent,
                "seed": ic.seed, "kmax": ic.kmax}
    if isinstance(ic, Modes):
        return {"type": "modes", "coefficients": [
            [kx, ky, c1.real, c1.imag, c2.real, c2.imag] for (kx, ky), (c1, c2) in ic.coefficients
        ]}
    raise TypeError(f"cannot serialize {ic!r}")


def config_to_dict(cfg: SimConfig, theory: Optional[TheoryOptions] = None) -> dict:
    """Full echo of a configuration, defaults included; parses back to an equal config."""
    f = cfg.forcing
    if isinstance(f, ZeroForcing):
        forcing = {"type": "zero"}
    elif isinstance(f, VanishingPower):
        forcing = {"type": "vanishing_power", "t_f": f.t_f, "epsilon": f.epsilon, "mu": f.mu, "shape": _shape_dict(f.shape)}
    elif isinstance(f, BoundedConstant):
        forcing = {"type": "bounded_constant", "C_f": f.C_f, "shape": _shape_dict(f.shape)}
    elif isinstance(f, CustomForcing):
        raise TypeError("custom forcing cannot be serialized")
    out = {
        "nu": cfg.nu, "alpha": cfg.alpha, "sigma": cfg.sigma, "grid": cfg.grid.n,
        "domain_length": cfg.grid.length, "dt": cfg.dt, "t_end": cfg.t_end,
        "sample_interval": cfg.sample_interval, "dealias": cfg.dealias,
        "extinction_tol": cfg.extinction_tol, "extinction_grace": cfg.grace,
        "stop_on_extinction": cfg.stop_on_extinction, "splitting": cfg.splitting,
        "cfl_action": cfg.cfl_action, "seed": cfg.seed,
        "ic": _shape_dict(cfg.initial_condition), "forcing": forcing,
    }
    if theory is not None:
        out["theory"] = {k: getattr(theory, k) for k in sorted(THEORY_KEYS)}
    return out
