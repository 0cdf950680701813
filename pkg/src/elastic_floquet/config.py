"""Experiment configuration files (TOML).

A configuration is a nested table. Top level keys: ``kind``, ``seed`` and the
sections ``lattice``, ``medium``, ``material``, ``geometry`` or ``capacitance``,
``modulation``, ``sweep``, ``ep``, ``appendix2d``, ``green``, ``tolerances``,
``output``. Only the sections used by the chosen kind are required.
"""
from __future__ import annotations

import copy
import hashlib
import json
import sys
from dataclasses import dataclass
from pathlib import Path

import tomli_w

if sys.version_info >= (3, 11):
    import tomllib
else:  # pragma: no cover
    import tomli as tomllib

from .errors import ConfigError

KINDS = ("static-spectrum", "band", "floquet", "ep-construct", "ep-verify", "appendix2d",
         "green-validate")

DEFAULT_TOLERANCES = {
    "integrator": 1e-10,
    "degeneracy": 1e-12,
    "defect": 1e-8,
    "eta": 1e-2,
}

_NEEDS_CAPACITANCE = ("static-spectrum", "band", "floquet")
EP_ROUTES = ("fourier-selective", "case1", "case2", "search-case1", "search-case2", "certify")


@dataclass
class ExperimentConfig:
    """Validated configuration; ``data`` is the normalised nested table."""

    data: dict
    base_dir: Path = Path(".")

    @property
    def kind(self) -> str:
        return self.data["kind"]

    @property
    def seed(self) -> int:
        return int(self.data["seed"])

    @property
    def tolerances(self) -> dict:
        return self.data["tolerances"]

    def section(self, name, default=None):
        return self.data.get(name, {} if default is None else default)

    def capacitance_source(self):
        if "geometry" in self.data:
            return "computed-2d"
        if "capacitance" in self.data:
            return "file-3d" if self.data["capacitance"].get("dimension", 3) == 3 else "file"
        return None

    def resolve(self, path) -> Path:
        p = Path(path)
        return p if p.is_absolute() else self.base_dir / p

    def to_toml(self) -> str:
        return tomli_w.dumps(self.data)

    def hash(self) -> str:
        # where results land does not change them
        content = {k: v for k, v in self.data.items() if k != "output"}
        blob = json.dumps(content, sort_keys=True, separators=(",", ":")).encode()
        return hashlib.sha256(blob).hexdigest()

    def with_overrides(self, seed=None, tolerances=None, output=None) -> "ExperimentConfig":
        data = copy.deepcopy(self.data)
        if seed is not None:
            data["seed"] = int(seed)
        if tolerances:
            data["tolerances"].update(tolerances)
        if output is not None:
            data.setdefault("output", {})["directory"] = str(output)
        return validate(data, self.base_dir)


def parse_config(text: str, base_dir=".", kind: str = None) -> ExperimentConfig:
    """Parse and validate configuration text.

    Raises
    ------
    ConfigError
        Syntax errors (with line and column) or semantic errors naming the key.
    """
    try:
        data = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"configuration syntax error: {exc}") from exc
    if kind is not None:
        found = data.setdefault("kind", kind)
        if found != kind:
            raise ConfigError(f"configuration kind {found!r} does not match the subcommand {kind!r}")
    return validate(data, Path(base_dir))


def load_config(path, kind: str = None) -> ExperimentConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read configuration {path}: {exc}") from exc
    return parse_config(text, path.parent, kind)


def _require(table, key, where, kind=None):
    if key not in table:
        raise ConfigError(f"missing key '{where}.{key}'" if where else f"missing key '{key}'")
    v = table[key]
    if kind is not None and not isinstance(v, kind):
        raise ConfigError(f"key '{where}.{key}' has the wrong type ({type(v).__name__})")
    return v


def _number(table, key, where, positive=False, default=None):
    if key not in table:
        if default is None:
            raise ConfigError(f"missing key '{where}.{key}'")
        return default
    v = table[key]
    if isinstance(v, bool) or not isinstance(v, (int, float)):
        raise ConfigError(f"key '{where}.{key}' must be a number")
    if positive and not v > 0:
        raise ConfigError(f"key '{where}.{key}' must be positive")
    return v


def validate(raw: dict, base_dir=Path(".")) -> ExperimentConfig:
    data = copy.deepcopy(raw)
    kind = data.get("kind")
    if kind not in KINDS:
        raise ConfigError(f"unknown experiment kind {kind!r}; valid kinds: {', '.join(KINDS)}")
    seed = data.setdefault("seed", 0)
    if isinstance(seed, bool) or not isinstance(seed, int):
        raise ConfigError("key 'seed' must be an integer")
    tol = dict(DEFAULT_TOLERANCES)
    for k, v in data.get("tolerances", {}).items():
        if k not in DEFAULT_TOLERANCES:
            raise ConfigError(f"unknown tolerance 'tolerances.{k}'")
        if isinstance(v, bool) or not isinstance(v, (int, float)) or not v > 0:
            raise ConfigError(f"key 'tolerances.{k}' must be a positive number")
        tol[k] = float(v)
    data["tolerances"] = tol
    data.setdefault("output", {}).setdefault("directory", "results")

    if "geometry" in data and "capacitance" in data:
        raise ConfigError("exactly one capacitance source is allowed: found both 'geometry' "
                          "and 'capacitance'")
    if kind in _NEEDS_CAPACITANCE:
        if "geometry" not in data and "capacitance" not in data:
            raise ConfigError(f"kind '{kind}' needs a 'geometry' or a 'capacitance' section")
        if kind == "band" and "geometry" not in data:
            raise ConfigError("kind 'band' needs a computed 'geometry' source")
        mat = _require(data, "material", "", dict)
        _number(mat, "epsilon", "material", positive=True)
        rho = mat.setdefault("rho", None)
        if "geometry" in data:
            _check_geometry(data)
            d = 2
        else:
            cap = data["capacitance"]
            path = _require(cap, "file", "capacitance", str)
            if not base_dir.joinpath(path).exists() and not Path(path).is_absolute():
                raise ConfigError(f"capacitance file '{path}' does not exist")
            if Path(path).is_absolute() and not Path(path).exists():
                raise ConfigError(f"capacitance file '{path}' does not exist")
            vols = _require(cap, "volumes", "capacitance", list)
            if not vols or any(not isinstance(v, (int, float)) or v <= 0 for v in vols):
                raise ConfigError("key 'capacitance.volumes' must list positive volumes")
            d = int(cap.setdefault("dimension", 3))
        if rho is None:
            mat["rho"] = [1.0] * d
        elif len(mat["rho"]) != d or any(v <= 0 for v in mat["rho"]):
            raise ConfigError(f"key 'material.rho' must list {d} positive densities")
    if kind == "floquet":
        mod = _require(data, "modulation", "", dict)
        _number(mod, "omega", "modulation", positive=True)
        mod.setdefault("eta", 0.0)
        mod.setdefault("real", False)
        entries = mod.setdefault("entries", [])
        for e in entries:
            if not isinstance(e, list) or len(e) != 5:
                raise ConfigError("each 'modulation.entries' item is [resonator, direction, m, re, im]")
    if kind == "band":
        sw = _require(data, "sweep", "", dict)
        path = _require(sw, "path", "sweep", list)
        if len(path) < 2:
            raise ConfigError("key 'sweep.path' needs at least two quasimomenta")
        if int(_number(sw, "samples", "sweep", positive=True)) < 1:
            raise ConfigError("key 'sweep.samples' must be >= 1")
    if "sweep" in data and kind != "band":
        sw = data["sweep"]
        _require(sw, "parameter", "sweep", str)
        start = _number(sw, "start", "sweep")
        stop = _number(sw, "stop", "sweep")
        samples = int(_number(sw, "samples", "sweep", positive=True))
        sw.setdefault("scale", "linear")
        if sw["scale"] not in ("linear", "log"):
            raise ConfigError("key 'sweep.scale' must be 'linear' or 'log'")
        if samples > 1 and start == stop:
            raise ConfigError("sweep range is empty")
        if sw["scale"] == "log" and (start <= 0 or stop <= 0):
            raise ConfigError("log sweeps need positive bounds")
    if kind in ("ep-construct", "ep-verify"):
        ep = _require(data, "ep", "", dict)
        for key in ("c11", "c12", "c13"):
            _require(ep, key, "ep")
        if "c23" not in ep:
            raise ConfigError("missing key 'ep.c23'")
        ep.setdefault("epsilon", 1.0)
        ep.setdefault("volume", 1.0)
        ep.setdefault("n", 1)
        route = ep.setdefault("route", "fourier-selective" if kind == "ep-construct" else "certify")
        if route not in EP_ROUTES:
            raise ConfigError(f"unknown route 'ep.route' = {route!r}; valid: {', '.join(EP_ROUTES)}")
        if kind == "ep-verify":
            _number(ep, "Omega", "ep", positive=True)
            _require(ep, "xi1", "ep", list)
    if kind == "appendix2d":
        ap = data.setdefault("appendix2d", {})
        ap.setdefault("draws", 1000)
        ap.setdefault("bound", 5.0)
    if kind == "green-validate":
        gr = _require(data, "green", "", dict)
        for key in ("alpha", "theta", "r"):
            _require(gr, key, "green", list)
        _number(gr, "q_max", "green", positive=True)
        gr.setdefault("omega_min", 1e-3)
        gr.setdefault("omega_max", 1e-2)
        gr.setdefault("samples", 8)
        if "lattice" not in data:
            raise ConfigError("kind 'green-validate' needs a 'lattice' section")
        if "medium" not in data:
            raise ConfigError("kind 'green-validate' needs a 'medium' section")
    return ExperimentConfig(data, Path(base_dir))


def _check_geometry(data):
    geo = data["geometry"]
    if "lattice" not in data:
        data["lattice"] = {"basis": [[1.0, 0.0], [0.0, 1.0]]}
    med = data.setdefault("medium", {"lam": 1.0, "mu": 1.0})
    _number(med, "mu", "medium", positive=True)
    _number(med, "lam", "medium")
    if kind_of_alpha := geo.get("alpha"):
        if len(kind_of_alpha) != 2:
            raise ConfigError("key 'geometry.alpha' must have two components")
    _number(geo, "q_max", "geometry", positive=True)
    n = geo.setdefault("n_nodes", 64)
    if not isinstance(n, int) or n < 4 or n % 2:
        raise ConfigError("key 'geometry.n_nodes' must be an even integer >= 4")
    res = _require(geo, "resonators", "geometry", list)
    if not res:
        raise ConfigError("key 'geometry.resonators' is empty")
    for i, r in enumerate(res):
        t = r.get("type")
        if t == "circle":
            _require(r, "center", f"geometry.resonators[{i}]", list)
            _number(r, "radius", f"geometry.resonators[{i}]", positive=True)
        elif t == "star":
            _require(r, "center", f"geometry.resonators[{i}]", list)
            _number(r, "r0", f"geometry.resonators[{i}]", positive=True)
        else:
            raise ConfigError(f"key 'geometry.resonators[{i}].type' must be 'circle' or 'star'")
