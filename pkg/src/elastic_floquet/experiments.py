"""Experiment orchestration: build the inputs from a configuration, run the
computation (sweep points on a worker pool) and collect result tables."""
from __future__ import annotations

import json
import platform
import time
from concurrent.futures import ProcessPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from . import __version__
from .capacitance import compute_capacitance, load_capacitance, static_spectrum
from .config import ExperimentConfig
from .ep import (EPParameters, appendix_2d_check, case1_construct, case2_construct, certify,
                 fourier_selective_construct, search_case1, search_case2)
from .errors import (ConfigError, ConstructionError, ElasticFloquetError,
                     InvalidCapacitanceError)
from .floquet import (diagonalizability_report, floquet_exponents, integrate_monodromy,
                      match_eigenvalues, truncated_exponents)
from .geometry import Circle, ResonatorGeometry, StarCurve
from .green import BackgroundMedium, green_correction1, green_full, green_static
from .lattice import Lattice
from .modulation import ModulationProfile, assemble_system
from .results import ResultTable, write_document, write_results


@dataclass
class ExperimentOutput:
    """Tables and documents of one run; ``certified`` is None when not applicable."""

    kind: str
    tables: dict = field(default_factory=dict)
    documents: dict = field(default_factory=dict)
    certified: bool = None


# ----------------------------------------------------------------------------
# helpers

def parallel_map(func, items, workers: int = 1):
    """Order preserving map, on a process pool when ``workers > 1``."""
    items = list(items)
    if workers <= 1 or len(items) <= 1:
        return [func(x) for x in items]
    with ProcessPoolExecutor(max_workers=workers) as pool:
        return list(pool.map(func, items))


def sweep_values(spec: dict, default=None) -> np.ndarray:
    if not spec:
        return np.asarray(default, dtype=float)
    n = int(spec["samples"])
    if spec.get("scale", "linear") == "log":
        return np.logspace(np.log10(spec["start"]), np.log10(spec["stop"]), n)
    return np.linspace(spec["start"], spec["stop"], n)


def fit_slope(x, y) -> float:
    """Least squares slope of ``log y`` against ``log x``."""
    x, y = np.asarray(x, float), np.asarray(y, float)
    keep = (x > 0) & (y > 0)
    if keep.sum() < 2:
        return float("nan")
    return float(np.polyfit(np.log(x[keep]), np.log(y[keep]), 1)[0])


def _with_context(exc: ElasticFloquetError, context: str):
    if exc.args:
        exc.args = (f"{context}: {exc.args[0]}",) + exc.args[1:]
    else:
        exc.args = (context,)
    return exc


def build_lattice(cfg: ExperimentConfig) -> Lattice:
    basis = cfg.section("lattice").get("basis", [[1.0, 0.0], [0.0, 1.0]])
    return Lattice(np.asarray(basis, dtype=float))


def build_medium(cfg: ExperimentConfig) -> BackgroundMedium:
    m = cfg.section("medium")
    return BackgroundMedium(float(m.get("lam", 1.0)), float(m.get("mu", 1.0)))


def build_geometry(cfg: ExperimentConfig) -> ResonatorGeometry:
    curves = []
    for r in cfg.data["geometry"]["resonators"]:
        if r["type"] == "circle":
            curves.append(Circle(tuple(r["center"]), float(r["radius"])))
        else:
            curves.append(StarCurve(tuple(r["center"]), float(r["r0"]),
                                    tuple(r.get("cos", ())), tuple(r.get("sin", ()))))
    try:
        return ResonatorGeometry(curves, build_lattice(cfg))
    except ValueError as exc:
        raise ConfigError(f"geometry: {exc}") from exc


def _geometry_capacitance(cfg, alpha):
    geo = cfg.data["geometry"]
    return compute_capacitance(build_geometry(cfg), build_medium(cfg), alpha,
                               float(geo["q_max"]), int(geo["n_nodes"]))


def capacitance_and_volumes(cfg: ExperimentConfig, alpha=None):
    """Capacitance tensor and resonator volumes for either source."""
    if "geometry" in cfg.data:
        geo = cfg.data["geometry"]
        alpha = geo.get("alpha", [np.pi, np.pi]) if alpha is None else alpha
        C = _geometry_capacitance(cfg, alpha)
        return C, build_geometry(cfg).volumes(max(256, int(geo["n_nodes"])))
    cap = cfg.data["capacitance"]
    path = cfg.resolve(cap["file"])
    try:
        data = json.loads(path.read_text())
    except (OSError, ValueError) as exc:
        raise ConfigError(f"cannot read capacitance file {path}: {exc}") from exc
    try:
        C = load_capacitance(data, int(cap.get("dimension", 3)))
    except (KeyError, TypeError) as exc:
        raise InvalidCapacitanceError(f"malformed capacitance file {path}: {exc}") from exc
    if C.n_resonators != len(cap["volumes"]):
        raise ConfigError("key 'capacitance.volumes' must have one entry per resonator")
    return C, np.asarray(cap["volumes"], dtype=float)


def _metadata(cfg: ExperimentConfig, **extra) -> dict:
    meta = {"config_sha256": cfg.hash(), "tool_version": __version__, "kind": cfg.kind,
            "seed": cfg.seed}
    meta.update(extra)
    return meta


# ----------------------------------------------------------------------------
# kinds

def run_static_spectrum(cfg: ExperimentConfig, workers=1) -> ExperimentOutput:
    C, vols = capacitance_and_volumes(cfg)
    mat = cfg.data["material"]
    spec = static_spectrum(C, mat["rho"], vols, float(mat["epsilon"]))
    table = ResultTable([("index", "int"), ("xi", "complex"), ("omega", "complex")],
                        metadata=_metadata(cfg, symmetry_residual=format(C.symmetry_residual(), ".3e")))
    for i, (x, w) in enumerate(zip(spec.xi, spec.omega)):
        table.append((i, x, w))
    out = ExperimentOutput(cfg.kind, {"spectrum": table})
    out.documents["capacitance"] = C.to_dict()
    return out


def band_path(points, samples: int) -> tuple:
    """Piecewise linear path: ``samples`` points per segment plus the final vertex."""
    points = np.asarray(points, dtype=float)
    seg = np.linalg.norm(np.diff(points, axis=0), axis=1)
    s0 = np.concatenate([[0.0], np.cumsum(seg)])
    s, alpha = [], []
    for j in range(len(points) - 1):
        for t in np.arange(samples) / samples:
            s.append(s0[j] + t * seg[j])
            alpha.append(points[j] + t * (points[j + 1] - points[j]))
    s.append(s0[-1])
    alpha.append(points[-1])
    return np.array(s), np.array(alpha)


def _band_point(args):
    cfg, alpha = args
    if np.allclose(alpha, 0):
        return None
    C, vols = capacitance_and_volumes(cfg, alpha)
    mat = cfg.data["material"]
    return static_spectrum(C, mat["rho"], vols, float(mat["epsilon"])).omega


def run_band(cfg: ExperimentConfig, workers=1) -> ExperimentOutput:
    sw = cfg.data["sweep"]
    s, alphas = band_path(np.asarray(sw["path"], dtype=float) * float(sw.get("unit", 1.0)),
                          int(sw["samples"]))
    omegas = parallel_map(_band_point, [(cfg, a) for a in alphas], workers)
    n = len(next(w for w in omegas if w is not None))
    cols = [("s", "real"), ("alpha_1", "real"), ("alpha_2", "real")]
    cols += [(f"omega_{i + 1}", "complex") for i in range(n)]
    skipped = [i for i, w in enumerate(omegas) if w is None]
    table = ResultTable(cols, metadata=_metadata(cfg, skipped_zero_quasimomentum=len(skipped)))
    for si, a, w in zip(s, alphas, omegas):
        if w is not None:
            table.append((si, a[0], a[1], *w))
    table.sort(0)
    return ExperimentOutput(cfg.kind, {"band": table})


def _floquet_point(args):
    cfg, C, vols, eta = args
    mat, mod = cfg.data["material"], cfg.data["modulation"]
    profile = ModulationProfile.from_entries(mod["entries"], C.n_resonators, C.dimension,
                                             float(mod["omega"]), float(eta), bool(mod["real"]))
    asm = assemble_system(C, mat["rho"], vols, float(mat["epsilon"]), profile)
    mono = integrate_monodromy(lambda t: asm.A(t, eta), asm.period, cfg.tolerances["integrator"])
    fe = floquet_exponents(mono)
    qf = fe.quasi_frequencies
    gaps = np.abs(qf[:, None] - qf[None, :])
    gap = float(np.min(gaps[~np.eye(len(qf), dtype=bool)]))
    cond = float(np.linalg.cond(fe.vectors))
    return qf, gap, cond, mono.liouville_residual


def continue_branches(rows):
    """Reorder each row to follow the previous one (nearest neighbour continuation)."""
    out = [np.asarray(rows[0])]
    for r in rows[1:]:
        out.append(match_eigenvalues(out[-1], np.asarray(r)))
    return out


def run_floquet(cfg: ExperimentConfig, workers=1) -> ExperimentOutput:
    etas = sweep_values(cfg.data.get("sweep"), [cfg.data["modulation"]["eta"]])
    etas = np.sort(etas)
    C, vols = capacitance_and_volumes(cfg)
    res = parallel_map(_floquet_point, [(cfg, C, vols, e) for e in etas], workers)
    first = res[0][0]
    order = np.lexsort((first.imag, first.real))
    branches = continue_branches([res[0][0][order]] + [r[0] for r in res[1:]])
    n = len(first)
    cols = [("eta", "real")] + [(f"omega_{i + 1}", "complex") for i in range(n)]
    cols += [("eigengap", "real"), ("condition", "real"), ("liouville_residual", "real")]
    table = ResultTable(cols, metadata=_metadata(cfg, Omega=cfg.data["modulation"]["omega"]))
    for eta, qf, (_, gap, cond, liou) in zip(etas, branches, res):
        table.append((eta, *qf, gap, cond, liou))
    return ExperimentOutput(cfg.kind, {"floquet": table})


def ep_parameters(cfg: ExperimentConfig) -> EPParameters:
    ep = dict(cfg.data["ep"])
    keys = ("c11", "c12", "c13", "c23", "epsilon", "volume", "c22", "c33", "xi1")
    kw = {k: ep[k] for k in keys if k in ep}
    try:
        return EPParameters.from_dict(kw)
    except (TypeError, ValueError) as exc:
        raise ConfigError(f"invalid 'ep' parameters: {exc}") from exc


def pair_splitting(F, f0) -> float:
    """Distance between the two eigenvalues of ``F`` closest to ``f0``."""
    w = np.linalg.eigvals(F)
    near = w[np.argsort(np.abs(w - f0))[:2]]
    return float(abs(near[0] - near[1]))


def detuning_sweep(cert, taus):
    """Put ``tau`` on the harmonic that the vanishing coupling would need and measure the split."""
    xi = dict(cert.params.xi1)
    target = -int(cert.k_star)
    f0 = cert.diagnostics["f0"]
    out = []
    for tau in taus:
        mod = dict(xi)
        mod[target] = mod.get(target, 0) + tau
        q = cert.params.with_modulation(mod)
        trunc = truncated_exponents(q.assembly(cert.Omega))
        out.append(pair_splitting(trunc.matrix(cert.eta), f0))
    return np.array(out)


def _construct(cfg: ExperimentConfig, p: EPParameters):
    ep = cfg.data["ep"]
    route, n, eta = ep["route"], int(ep["n"]), float(ep.get("eta", cfg.tolerances["eta"]))
    branch = tuple(ep.get("branch", (1, 0, 1)))
    if route == "fourier-selective":
        pair = tuple(ep["pair"]) if "pair" in ep else None
        return fourier_selective_construct(p, pair, n, eta=eta), None
    if route == "case1":
        return case1_construct(p, branch, n, eta=eta), None
    if route == "case2":
        return case2_construct(p, branch, n, int(ep.get("root_sign", 1)), eta=eta), None
    if route in ("search-case1", "search-case2"):
        search = search_case1 if route == "search-case1" else search_case2
        result = search(p.c13, p.c23, p.c11, p.epsilon, p.volume, n, seed=cfg.seed)
        log = [{"start": [a.start.real, a.start.imag], "outcome": a.outcome,
                "valid": bool(a.certificate is not None and a.certificate.valid)}
               for a in result.attempts]
        certs = result.valid or result.certificates
        if not certs:
            exc = ConstructionError(f"{route}: no attempt produced a certificate")
            exc.search_log = log
            raise exc
        return certs[0], log
    raise ConfigError(f"route {route!r} cannot construct an EP")


def run_ep_construct(cfg: ExperimentConfig, workers=1) -> ExperimentOutput:
    p = ep_parameters(cfg)
    log = None
    try:
        cert, log = _construct(cfg, p)
    except ConstructionError as exc:
        out = ExperimentOutput(cfg.kind, certified=False)
        out.documents["certificate"] = {"route": cfg.data["ep"]["route"], "valid": False,
                                        "error": f"{type(exc).__name__}: {exc}",
                                        "parameters": p.to_dict()}
        if getattr(exc, "search_log", None) is not None:
            out.documents["certificate"]["search"] = exc.search_log
        return out
    out = ExperimentOutput(cfg.kind, certified=cert.valid)
    doc = cert.to_dict()
    if log is not None:
        doc["search"] = log
    out.documents["certificate"] = doc
    if cert.pair is not None:
        taus = sweep_values(cfg.data.get("sweep"), np.logspace(-6, -3, 7))
        split = detuning_sweep(cert, np.sort(taus))
        table = ResultTable([("tau", "real"), ("splitting", "real")],
                            metadata=_metadata(cfg, fitted_exponent=format(
                                fit_slope(np.sort(taus), split), ".17g")))
        for t, s in zip(np.sort(taus), split):
            table.append((t, s))
        out.tables["splitting"] = table
    return out


def run_ep_verify(cfg: ExperimentConfig, workers=1) -> ExperimentOutput:
    p = ep_parameters(cfg)
    ep = cfg.data["ep"]
    eta = float(ep.get("eta", cfg.tolerances["eta"]))
    pair = tuple(ep["pair"]) if "pair" in ep else None
    cert = certify(p, float(ep["Omega"]), int(ep["n"]), eta, pair)
    out = ExperimentOutput(cfg.kind, certified=cert.valid)
    out.documents["certificate"] = cert.to_dict()
    etas = np.sort(sweep_values(cfg.data.get("sweep"), np.logspace(-4, -2, 5)))
    trunc = truncated_exponents(p.assembly(float(ep["Omega"])), cfg.tolerances["degeneracy"])
    f0 = cert.diagnostics.get("f0")
    table = ResultTable([("eta", "real"), ("splitting", "real"), ("eigengap", "real"),
                         ("condition", "real"), ("defective", "int")], metadata=_metadata(cfg))
    for e in etas:
        F = trunc.matrix(e)
        rep = diagonalizability_report(F, cfg.tolerances["defect"])
        split = pair_splitting(F, f0) if f0 is not None else rep.eigengap
        table.append((e, split, rep.eigengap, rep.condition, int(rep.defective)))
    out.tables["splitting"] = table
    return out


def appendix_draws(seed: int, draws: int, bound: float):
    """Seeded draws ``(c11, c22, c12)`` with ``|c12|^2 != c11 c22``."""
    rng = np.random.default_rng(seed)
    out = []
    while len(out) < draws:
        c11, c22 = rng.uniform(-bound, bound, size=2)
        c12 = complex(*(rng.normal(size=2) * bound / 2))
        if abs(abs(c12) ** 2 - c11 * c22) > 1e-8 * bound ** 2 and abs(c12) > 0:
            out.append((float(c11), float(c22), c12))
    return out


def run_appendix2d(cfg: ExperimentConfig, workers=1) -> ExperimentOutput:
    ap = cfg.data["appendix2d"]
    cols = [("draw", "int"), ("c11", "real"), ("c22", "real"), ("c12", "complex"),
            ("phi_plus", "real"), ("phi_minus", "real"), ("identity_residual", "real"),
            ("relative_residual", "real"), ("candidate", "int")]
    rows, candidates, worst = [], 0, 0.0
    for i, (c11, c22, c12) in enumerate(appendix_draws(cfg.seed, int(ap["draws"]),
                                                       float(ap["bound"]))):
        rep = appendix_2d_check(c11, c22, c12)
        rel = rep.identity_residual / rep.identity_scale
        worst = max(worst, rel)
        candidates += rep.candidate
        rows.append((i, c11, c22, c12, rep.phi_plus, rep.phi_minus, rep.identity_residual,
                     rel, int(rep.candidate)))
    table = ResultTable(cols, rows, _metadata(cfg, candidates=candidates,
                                              max_relative_residual=format(worst, ".3e")))
    return ExperimentOutput(cfg.kind, {"appendix2d": table})


def _green_point(args):
    cfg, omega = args
    g = cfg.data["green"]
    med, lat = build_medium(cfg), build_lattice(cfg)
    x = np.asarray(g["r"], dtype=float)
    y = np.zeros_like(x)
    theta, alpha, q = np.asarray(g["theta"], float), np.asarray(g["alpha"], float), float(g["q_max"])
    G = green_full(med, lat, theta, omega, alpha, x, y, q)
    G0 = green_static(med, lat, alpha, x, y, q)
    G1 = green_correction1(med, lat, theta, alpha, x, y, q)
    return float(np.max(np.abs(G - G0 - omega ** 2 * G1)))


def run_green_validate(cfg: ExperimentConfig, workers=1) -> ExperimentOutput:
    g = cfg.data["green"]
    omegas = np.logspace(np.log10(g["omega_min"]), np.log10(g["omega_max"]), int(g["samples"]))
    norms = parallel_map(_green_point, [(cfg, w) for w in omegas], workers)
    slope = fit_slope(omegas, norms)
    table = ResultTable([("omega", "real"), ("remainder_norm", "real")],
                        metadata=_metadata(cfg, fitted_slope=format(slope, ".17g")))
    for w, r in zip(omegas, norms):
        table.append((w, r))
    return ExperimentOutput(cfg.kind, {"green_remainder": table})


RUNNERS = {
    "static-spectrum": run_static_spectrum,
    "band": run_band,
    "floquet": run_floquet,
    "ep-construct": run_ep_construct,
    "ep-verify": run_ep_verify,
    "appendix2d": run_appendix2d,
    "green-validate": run_green_validate,
}


def run_experiment(cfg: ExperimentConfig, workers: int = 1) -> ExperimentOutput:
    """Run the experiment named by ``cfg.kind``.

    Module errors propagate with the experiment kind prefixed to the message.
    """
    try:
        return RUNNERS[cfg.kind](cfg, workers)
    except ElasticFloquetError as exc:
        raise _with_context(exc, f"{cfg.kind}") from None


def write_outputs(output: ExperimentOutput, cfg: ExperimentConfig, out_dir) -> list:
    """Write tables (CSV), documents (JSON) and a run manifest; returns the paths."""
    out_dir = Path(out_dir)
    paths = []
    for name, table in sorted(output.tables.items()):
        paths.append(write_results(table, out_dir / f"{name}.csv"))
    for name, doc in sorted(output.documents.items()):
        paths.append(write_document({"config_sha256": cfg.hash(), **doc}, out_dir / f"{name}.json"))
    manifest = {
        "kind": cfg.kind, "config_sha256": cfg.hash(), "tool_version": __version__,
        "seed": cfg.seed, "timestamp": time.strftime("%Y-%m-%dT%H:%M:%S%z"),
        "python": platform.python_version(), "files": [p.name for p in paths],
        "certified": output.certified,
    }
    paths.append(write_document(manifest, out_dir / "run.json"))
    (out_dir / "config.toml").write_text(cfg.to_toml())
    return paths
