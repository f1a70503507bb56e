"""Run orchestration: stage execution, ground-state caching and reporting.

A run walks the configured stages in dependency order, records each stage's
outputs in a nested mapping, and grades the quantitative stages against the
thresholds below.  Reports carry a provenance header (config hash, package
version) and serialize deterministically, so rerunning an identical
configuration yields byte-identical report files.
"""
from __future__ import annotations

import hashlib
import json
import math
import os
from dataclasses import dataclass
from typing import Dict, List, Optional, Tuple

import numpy as np

from ._version import __version__
from .config import RunConfig, config_hash, save_config, to_mapping
from .constants import BubbleConstants, c1_c2, compute_constants, phi_coefficient
from .expansion import kernel_residual, sweep_and_fit, validate_eps_grid
from .ground_state import (GroundState, SolverOptions, load_ground_state,
                           save_ground_state, solve_ground_state,
                           validate_decay)
from .hyperbola import decay_rates
from .manifolds import (ModelManifold, PeakConfiguration, area_ratio_check,
                        default_area_radii)
from .reduction import (FinderOptions, find_critical_points, optimal_t, phi,
                        psi_k)

CACHE_ENV_VAR = "BUBBLELAB_CACHE_DIR"

# acceptance thresholds graded by the run verdicts
DECAY_SLOPE_TOL = 2e-2
L1_SPREAD_TOL = 1e-4
AREA_RATIO_TOL = 1e-2
SCALE_MATCH_TOL = 1e-6
HEADLINE_A_TOL = 1e-3
HEADLINE_B_TOL = 5e-2
HEADLINE_C_TOL = 5e-2
KERNEL_RESIDUAL_TOL = 1e-5
KERNEL_CONTROL_MIN = 1e-1


class StageError(RuntimeError):
    """A pipeline stage failed; carries the stage name."""

    def __init__(self, stage: str, cause: BaseException):
        super().__init__("stage %r failed: %s" % (stage, cause))
        self.stage = stage
        self.cause = cause


@dataclass(frozen=True)
class RunReport:
    config_digest: str
    version: str
    stages: Dict[str, Dict]
    verdicts: Dict[str, bool]
    failed_stage: Optional[str] = None
    failure: Optional[str] = None

    @property
    def all_passed(self) -> bool:
        return self.failed_stage is None and all(self.verdicts.values())

    def to_json(self) -> str:
        doc = {
            "provenance": {"config": self.config_digest,
                           "version": self.version},
            "stages": self.stages,
            "verdicts": self.verdicts,
            "failed_stage": self.failed_stage,
            "failure": self.failure,
            "all_passed": self.all_passed,
        }
        return json.dumps(doc, sort_keys=True, indent=2,
                          default=_json_default) + "\n"

    def report_hash(self) -> str:
        return hashlib.sha256(self.to_json().encode()).hexdigest()

    def to_text(self) -> str:
        """Human summary; six significant digits."""
        lines = ["run %s  (bubblelab %s)" % (self.config_digest[:12],
                                             self.version)]
        for name, out in self.stages.items():
            verdict = self.verdicts.get(name)
            mark = "" if verdict is None else ("  [pass]" if verdict
                                               else "  [FAIL]")
            lines.append("%s%s" % (name, mark))
            for key, val in out.items():
                lines.append("  %s = %s" % (key, _fmt6(val)))
        if self.failed_stage is not None:
            lines.append("FAILED at stage %s: %s" % (self.failed_stage,
                                                     self.failure))
        lines.append("overall: %s" % ("pass" if self.all_passed else "FAIL"))
        return "\n".join(lines) + "\n"


def _json_default(obj):
    if isinstance(obj, (np.floating,)):
        return float(obj)
    if isinstance(obj, (np.integer,)):
        return int(obj)
    if isinstance(obj, np.ndarray):
        return obj.tolist()
    raise TypeError("cannot serialize %r" % type(obj))


def _fmt6(val) -> str:
    if isinstance(val, float):
        return "%.6g" % val
    if isinstance(val, (list, tuple)) and val and all(
            isinstance(v, float) for v in val):
        return "[" + ", ".join("%.6g" % v for v in val) + "]"
    return repr(val)


# -- ground-state cache ---------------------------------------------------------

def cache_directory(cfg: RunConfig) -> str:
    env = os.environ.get(CACHE_ENV_VAR)
    if env:
        return env
    return os.path.join(cfg.output_dir, "cache")


def _cache_key(cfg: RunConfig) -> str:
    payload = json.dumps({
        "p": "%.17g" % cfg.p, "N": cfg.dimension,
        "r_max": "%.17g" % cfg.solver_r_max,
        "rtol": "%.17g" % cfg.solver_rtol,
        "grid_per_decade": cfg.solver_grid_per_decade,
    }, sort_keys=True)
    return "gs-" + hashlib.sha256(payload.encode()).hexdigest()[:16] + ".csv"


def cached_ground_state(cfg: RunConfig) -> Tuple[GroundState, bool]:
    """Solve or load the profile pair; returns (state, was_cached)."""
    cache_dir = cache_directory(cfg)
    path = os.path.join(cache_dir, _cache_key(cfg))
    if os.path.exists(path):
        return load_ground_state(path), True
    point = cfg.hyperbola()
    options = SolverOptions(r_max=cfg.solver_r_max, rtol=cfg.solver_rtol,
                            grid_per_decade=cfg.solver_grid_per_decade)
    gs = solve_ground_state(point, options)
    os.makedirs(cache_dir, exist_ok=True)
    save_ground_state(gs, path)
    return gs, False


# -- default peak placement ------------------------------------------------------

def default_peaks(manifold: ModelManifold, k: int, min_sep: float
                  ) -> List[np.ndarray]:
    """Deterministic k-point configuration with pairwise separation
    >= min_sep, used when the reduction stage is not part of the run."""
    base = manifold.base_point()
    if k == 1:
        return [base]
    frame = manifold.tangent_frame(base)
    points = [base]
    # walk a fixed geodesic, stepping by min_sep
    for j in range(1, k):
        step = frame.T @ (min_sep * j * np.eye(manifold.dim)[:, 0])
        points.append(manifold.exp_point(base, step))
    config = PeakConfiguration(manifold, points)
    config.require_separation(min_sep * (1.0 - 1e-12))
    return points


# -- stages ----------------------------------------------------------------------

def _stage_hyperbola(cfg: RunConfig, state: Dict) -> Tuple[Dict, Optional[bool]]:
    point = cfg.hyperbola()
    state["point"] = point
    rates = decay_rates(point.p, point.N)
    out = {
        "p": point.p, "q": point.q, "N": point.N,
        "regime": point.regime.name,
        "u_rate": rates.u_rate, "u_log": rates.u_log,
        "v_rate": rates.v_rate, "v_log": rates.v_log,
    }
    return out, None


def _stage_ground_state(cfg: RunConfig, state: Dict
                        ) -> Tuple[Dict, Optional[bool]]:
    gs, _ = cached_ground_state(cfg)
    state["gs"] = gs
    decay = validate_decay(gs)
    # note: whether the profile came from cache is deliberately not recorded;
    # reports must be byte-identical across reruns of the same config
    out = {
        "a": gs.a, "r_max": gs.r_max, "r_match": gs.r_match,
        "match_residual": gs.match_residual,
        "residual_max": gs.residual_max,
        "error_estimate": gs.error_estimate,
        "normalization": gs.normalization.tag(),
        "decay_max_relative_deviation": decay.max_relative_deviation,
    }
    return out, decay.max_relative_deviation <= DECAY_SLOPE_TOL


def _stage_constants(cfg: RunConfig, state: Dict
                     ) -> Tuple[Dict, Optional[bool]]:
    gs = state["gs"]
    consts = compute_constants(gs, panels_per_decade=cfg.quad_panels_per_decade,
                               nodes=cfg.quad_nodes)
    state["constants"] = consts
    out = {("l%d" % i): getattr(consts, "l%d" % i) for i in range(1, 8)}
    out.update({
        "l1_gradient": consts.l1_gradient, "l1_v": consts.l1_v,
        "l1_u": consts.l1_u,
        "l1_pairwise_spread": consts.l1_pairwise_spread,
        "phi_coefficient": phi_coefficient(consts, consts.p, consts.q,
                                           consts.N),
    })
    return out, consts.l1_pairwise_spread <= L1_SPREAD_TOL


def _stage_manifold_check(cfg: RunConfig, state: Dict
                          ) -> Tuple[Dict, Optional[bool]]:
    man = cfg.build_manifold()
    state["manifold"] = man
    radii = default_area_radii(man)
    check = area_ratio_check(man, radii)
    out = {
        "kappa_fit": check.kappa_fit,
        "kappa_predicted": check.kappa_predicted,
        "relative_error": check.relative_error,
        "radii": [float(r) for r in radii],
    }
    return out, check.relative_error <= AREA_RATIO_TOL


def _stage_reduction(cfg: RunConfig, state: Dict
                     ) -> Tuple[Dict, Optional[bool]]:
    man = state.get("manifold") or cfg.build_manifold()
    state["manifold"] = man
    consts = state["constants"]
    potential = cfg.build_potential(man)
    options = FinderOptions(seeds=32, rng_seed=cfg.seed,
                            t_box=(cfg.rho1, 1.0 / cfg.rho1),
                            min_separation=cfg.separation(man))
    points = find_critical_points(man, potential, consts, cfg.alpha, cfg.beta,
                                  cfg.peaks, options)
    best = points[0]
    state["critical_point"] = best
    base = man.base_point()
    t_deviation = 0.0
    for t, x in zip(best.ts, best.points):
        t0 = optimal_t(phi(man, potential, consts, x), consts,
                       cfg.alpha, cfg.beta)
        t_deviation = max(t_deviation, abs(t / t0 - 1.0))
    out = {
        "n_found": len(points),
        "value": best.value,
        "ts": [float(t) for t in best.ts],
        "chart_points": [[float(c) for c in man.to_chart(base, x)]
                         for x in best.points],
        "grad_norm": best.grad_norm,
        "degenerate": best.degenerate,
        "morse_index": best.morse_index,
        "t_relative_deviation": t_deviation,
    }
    return out, t_deviation <= SCALE_MATCH_TOL


def _stage_expansion(cfg: RunConfig, state: Dict
                     ) -> Tuple[Dict, Optional[bool]]:
    man = state.get("manifold") or cfg.build_manifold()
    state["manifold"] = man
    gs = state["gs"]
    consts = state["constants"]
    potential = cfg.build_potential(man)
    r0 = cfg.cutoff_radius(man)
    critical = state.get("critical_point")
    if critical is not None:
        peaks = [np.asarray(x) for x in critical.points]
        ts = list(critical.ts)
    else:
        peaks = default_peaks(man, cfg.peaks,
                              max(cfg.separation(man), 2.0 * r0))
        ts = [optimal_t(phi(man, potential, consts, x), consts,
                        cfg.alpha, cfg.beta) for x in peaks]
    fit = sweep_and_fit(gs, man, potential, peaks, ts, cfg.eps_grid(), r0,
                        alpha=cfg.alpha, beta=cfg.beta,
                        panels_per_decade=cfg.quad_panels_per_decade,
                        nodes=cfg.quad_nodes)
    state["fit"] = fit
    c1, c2 = c1_c2(consts, cfg.alpha, cfg.beta, consts.p, consts.q, cfg.peaks)
    psi = psi_k(man, potential, consts, cfg.alpha, cfg.beta, ts, peaks)
    a_pred = 2.0 * cfg.peaks * consts.l1 / consts.N
    b_pred = c1 + psi
    c_pred = -c2
    rel_a = abs(fit.a - a_pred) / abs(a_pred)
    rel_b = abs(fit.b - b_pred) / abs(fit.b)
    rel_c = abs(fit.c - c_pred) / abs(c_pred)
    out = {
        "eps": [float(e) for e in fit.eps],
        "values": [float(v) for v in fit.values],
        "a": fit.a, "b": fit.b, "c": fit.c,
        "a_predicted": a_pred, "b_predicted": b_pred, "c_predicted": c_pred,
        "a_relative_error": rel_a, "b_relative_error": rel_b,
        "c_relative_error": rel_c,
        "condition_number": fit.condition_number,
        "max_fit_residual": fit.max_fit_residual,
        "ts": [float(t) for t in ts],
    }
    verdict = (rel_a <= HEADLINE_A_TOL and rel_b <= HEADLINE_B_TOL
               and rel_c <= HEADLINE_C_TOL)
    return out, verdict


def _stage_kernel(cfg: RunConfig, state: Dict) -> Tuple[Dict, Optional[bool]]:
    gs = state["gs"]
    out: Dict = {}
    verdict = True
    for mode in ("dilation", "translation"):
        report = kernel_residual(gs, mode)
        out["%s_residual" % mode] = report.max_relative_residual
        out["%s_control" % mode] = report.control_residual
        verdict = (verdict
                   and report.max_relative_residual <= KERNEL_RESIDUAL_TOL
                   and report.control_residual >= KERNEL_CONTROL_MIN)
    return out, verdict


_STAGE_FUNCS = {
    "hyperbola": _stage_hyperbola,
    "ground_state": _stage_ground_state,
    "constants": _stage_constants,
    "manifold_check": _stage_manifold_check,
    "reduction": _stage_reduction,
    "expansion": _stage_expansion,
    "kernel": _stage_kernel,
}

_STAGE_DEPS = {
    "hyperbola": (),
    "ground_state": (),
    "constants": ("ground_state",),
    "manifold_check": (),
    "reduction": ("constants",),
    "expansion": ("constants",),
    "kernel": ("ground_state",),
}


def run(cfg: RunConfig, write_files: bool = True) -> RunReport:
    """Execute the configured stages in order.

    Stage outputs accumulate even when a later stage fails; the report then
    carries the failing stage's name and message, and the overall verdict is
    a failure.  With ``write_files`` the report pair (json and text) and a
    copy of the configuration land under ``output_dir``.
    """
    digest = config_hash(cfg)
    stages: Dict[str, Dict] = {}
    verdicts: Dict[str, bool] = {}
    state: Dict = {}
    failed_stage: Optional[str] = None
    failure: Optional[str] = None
    completed = set()

    for name in cfg.stages:
        missing = [d for d in _STAGE_DEPS[name]
                   if d not in completed and d not in cfg.stages]
        if missing:
            failed_stage, failure = name, (
                "missing dependency stages: %s" % ", ".join(missing))
            break
        if any(d not in completed for d in _STAGE_DEPS[name]):
            failed_stage, failure = name, "dependency stage failed earlier"
            break
        try:
            out, verdict = _STAGE_FUNCS[name](cfg, state)
        except Exception as exc:           # record and stop: dependents need it
            failed_stage = name
            failure = "%s: %s" % (type(exc).__name__, exc)
            break
        stages[name] = out
        if verdict is not None:
            verdicts[name] = bool(verdict)
        completed.add(name)

    report = RunReport(config_digest=digest, version=__version__,
                       stages=stages, verdicts=verdicts,
                       failed_stage=failed_stage, failure=failure)
    if write_files:
        run_dir = os.path.join(cfg.output_dir, digest[:12])
        os.makedirs(run_dir, exist_ok=True)
        with open(os.path.join(run_dir, "report.json"), "w") as fh:
            fh.write(report.to_json())
        with open(os.path.join(run_dir, "report.txt"), "w") as fh:
            fh.write(report.to_text())
        save_config(cfg, os.path.join(run_dir, "config.yaml"))
    return report
