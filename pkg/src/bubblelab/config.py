"""Run configuration: a single validated mapping that defines an experiment.

Experiments are config-defined rather than flag-defined so a run can be
reproduced from its stored configuration alone.  ``RunConfig`` carries the
exponent pair, the model manifold, the potential, the peak count and
separation parameters, solver and quadrature settings, and the epsilon grid
for the expansion sweep.  ``load_config``/``save_config`` round-trip YAML,
``config_hash`` fingerprints the validated content, and ``CONFIG_SCHEMA``
documents every key and default.
"""
from __future__ import annotations

import hashlib
import json
import math
from dataclasses import asdict, dataclass, field
from typing import Dict, List, Optional, Sequence, Tuple

import numpy as np
import yaml

from .hyperbola import hyperbola_point, q_from_p
from .manifolds import FlatTorus, ModelManifold, Sphere
from .numerics import smoothstep
from .reduction import (ChartPotential, ConstantPotential, PotentialSpec,
                        RadialPotential)

ALL_STAGES = ("hyperbola", "ground_state", "constants", "manifold_check",
              "reduction", "expansion", "kernel")

CONFIG_SCHEMA = """\
# bubblelab run configuration (YAML).  Every key is optional unless marked
# required; omitted keys take the defaults shown.

p: 1.5                  # required; first exponent, 1 < p <= (N+2)/(N-2)
q: null                 # second exponent; computed from the critical
                        # hyperbola when omitted, validated when given
dimension: 8            # required; ambient dimension N >= 3

manifold:
  kind: torus           # torus | sphere
  periods: null         # torus only: list of `dimension` periods, default 2*pi
  radius: 1.0           # sphere only: radius of the round sphere

potential:
  kind: constant        # constant | cosine | bump
  value: 1.0            # constant value, or offset for cosine/bump
  amplitudes: null      # cosine only: h(y) = value + sum_i amplitudes[i]*cos(y_i)
                        # in chart coordinates about the base point
  height: null          # bump only: peak height of the radial bump
  width: null           # bump only: support radius of the bump

peaks: 1                # number of concentration peaks k >= 1
alpha: 1.0              # subcritical perturbation rate on the p side, > 0
beta: 1.0               # subcritical perturbation rate on the q side, > 0
rho1: 1.0e-3            # scale box: t in (rho1, 1/rho1), 0 < rho1 < 1
rho2: null              # minimum peak separation, default inj/2; must
                        # exceed twice the cutoff radius
r0: null                # bubble cutoff radius, default 0.2 * injectivity

solver:
  r_max: 1000.0         # outer radius of the profile grid
  rtol: 1.0e-12         # integrator relative tolerance
  grid_per_decade: 400  # stored profile samples per radial decade

quadrature:
  panels_per_decade: 10 # geometric panels per decade in energy integrals
  nodes: 16             # Gauss-Legendre nodes per panel

eps_grid:
  count: 8              # number of sweep points, >= 6
  hi: 1.0e-5            # largest epsilon
  lo: 1.0e-8            # smallest epsilon; hi/lo >= 100

stages: [hyperbola, ground_state, constants, manifold_check, reduction,
         expansion, kernel]   # subset and order of stages to execute
output_dir: runs        # where reports and the default cache live
seed: 0                 # seed for the multi-start critical-point search
"""


class ConfigError(ValueError):
    """The configuration failed validation."""


@dataclass(frozen=True)
class RunConfig:
    p: float
    dimension: int
    q: Optional[float] = None
    manifold_kind: str = "torus"
    periods: Optional[Tuple[float, ...]] = None
    radius: float = 1.0
    potential_kind: str = "constant"
    potential_value: float = 1.0
    potential_amplitudes: Optional[Tuple[float, ...]] = None
    potential_height: Optional[float] = None
    potential_width: Optional[float] = None
    peaks: int = 1
    alpha: float = 1.0
    beta: float = 1.0
    rho1: float = 1e-3
    rho2: Optional[float] = None
    r0: Optional[float] = None
    solver_r_max: float = 1000.0
    solver_rtol: float = 1e-12
    solver_grid_per_decade: int = 400
    quad_panels_per_decade: int = 10
    quad_nodes: int = 16
    eps_count: int = 8
    eps_hi: float = 1e-5
    eps_lo: float = 1e-8
    stages: Tuple[str, ...] = ALL_STAGES
    output_dir: str = "runs"
    seed: int = 0

    # -- derived objects --------------------------------------------------

    def hyperbola(self):
        point = hyperbola_point(self.p, self.dimension)
        if self.q is not None and not math.isclose(
                self.q, point.q, rel_tol=0.0, abs_tol=1e-10):
            raise ConfigError(
                "q=%r is off the critical hyperbola (expected %.17g)"
                % (self.q, point.q))
        return point

    def build_manifold(self) -> ModelManifold:
        if self.manifold_kind == "torus":
            periods = self.periods
            if periods is None:
                periods = (2.0 * math.pi,) * self.dimension
            return FlatTorus(list(periods))
        if self.manifold_kind == "sphere":
            return Sphere(self.dimension, self.radius)
        raise ConfigError("unknown manifold kind %r" % self.manifold_kind)

    def build_potential(self, manifold: ModelManifold) -> PotentialSpec:
        kind = self.potential_kind
        if kind == "constant":
            return ConstantPotential(self.potential_value)
        if kind == "cosine":
            amps = self.potential_amplitudes
            if amps is None:
                raise ConfigError("cosine potential needs amplitudes")
            amps = np.asarray(amps, dtype=float)
            offset = self.potential_value
            return ChartPotential(
                manifold.base_point(),
                lambda y, a=amps, c=offset: c + float(
                    np.dot(a, np.cos(np.asarray(y)[: a.size]))))
        if kind == "bump":
            if self.potential_height is None or self.potential_width is None:
                raise ConfigError("bump potential needs height and width")
            height, width = self.potential_height, self.potential_width
            return RadialPotential(
                anchors=(manifold.base_point(),),
                profile=lambda d, h=height, w=width: h * smoothstep(
                    (w - d) / (0.5 * w)),
                offset=self.potential_value,
                support_radius=width)
        raise ConfigError("unknown potential kind %r" % kind)

    def cutoff_radius(self, manifold: ModelManifold) -> float:
        if self.r0 is not None:
            return self.r0
        return 0.2 * manifold.injectivity_radius

    def separation(self, manifold: ModelManifold) -> float:
        if self.rho2 is not None:
            return self.rho2
        return 0.5 * manifold.injectivity_radius

    def eps_grid(self) -> Tuple[float, ...]:
        return tuple(np.geomspace(self.eps_hi, self.eps_lo, self.eps_count))


def _require(cond: bool, message: str) -> None:
    if not cond:
        raise ConfigError(message)


def validate_config(cfg: RunConfig) -> RunConfig:
    """Check internal consistency; raises ConfigError before any compute."""
    _require(cfg.dimension >= 3 and int(cfg.dimension) == cfg.dimension,
             "dimension must be an integer >= 3")
    _require(cfg.p > 1.0, "p must exceed 1")
    _require(cfg.alpha > 0.0, "alpha must be positive")
    _require(cfg.beta > 0.0, "beta must be positive")
    _require(cfg.peaks >= 1, "peaks must be >= 1")
    _require(0.0 < cfg.rho1 < 1.0, "rho1 must lie in (0, 1)")
    _require(cfg.manifold_kind in ("torus", "sphere"),
             "manifold kind must be torus or sphere")
    _require(cfg.potential_kind in ("constant", "cosine", "bump"),
             "potential kind must be constant, cosine or bump")
    if cfg.periods is not None:
        _require(cfg.manifold_kind == "torus", "periods apply to the torus")
        _require(len(cfg.periods) == cfg.dimension,
                 "need one period per dimension")
        _require(all(p > 0 for p in cfg.periods), "periods must be positive")
    if cfg.manifold_kind == "sphere":
        _require(cfg.radius > 0.0, "sphere radius must be positive")
    _require(cfg.solver_r_max > 10.0, "solver r_max too small")
    _require(0 < cfg.solver_rtol <= 1e-6, "solver rtol must be in (0, 1e-6]")
    _require(cfg.solver_grid_per_decade >= 50,
             "grid_per_decade must be >= 50")
    _require(cfg.quad_panels_per_decade >= 2, "panels_per_decade must be >= 2")
    _require(cfg.quad_nodes >= 4, "quadrature nodes must be >= 4")
    _require(cfg.eps_count >= 6, "eps grid needs at least 6 points")
    _require(0.0 < cfg.eps_lo < cfg.eps_hi, "need 0 < eps lo < hi")
    _require(cfg.eps_hi / cfg.eps_lo >= 100.0,
             "eps grid must span at least two decades")
    unknown = [s for s in cfg.stages if s not in ALL_STAGES]
    _require(not unknown, "unknown stages: %r" % unknown)
    _require(len(cfg.stages) == len(set(cfg.stages)), "duplicate stages")
    man = cfg.build_manifold()
    r0 = cfg.cutoff_radius(man)
    _require(0.0 < r0 < man.injectivity_radius,
             "cutoff radius must lie inside the injectivity radius")
    if cfg.peaks >= 2:
        _require(cfg.separation(man) >= 2.0 * r0,
                 "peak separation rho2 must be at least twice the cutoff r0")
    cfg.build_potential(man)          # raises on malformed potential blocks
    cfg.hyperbola()                   # raises on off-hyperbola (p, q)
    return cfg


# -- YAML round trip -----------------------------------------------------------

def _from_mapping(doc: Dict) -> RunConfig:
    doc = dict(doc or {})

    def pop(key, default=None):
        return doc.pop(key, default)

    man = dict(pop("manifold", {}) or {})
    pot = dict(pop("potential", {}) or {})
    sol = dict(pop("solver", {}) or {})
    quad = dict(pop("quadrature", {}) or {})
    eps = dict(pop("eps_grid", {}) or {})
    if "p" not in doc:
        raise ConfigError("config requires p")
    if "dimension" not in doc:
        raise ConfigError("config requires dimension")
    periods = man.get("periods")
    amps = pot.get("amplitudes")
    stages = pop("stages", list(ALL_STAGES))
    cfg = RunConfig(
        p=float(doc.pop("p")),
        dimension=int(doc.pop("dimension")),
        q=None if doc.get("q") is None else float(doc.get("q")),
        manifold_kind=str(man.get("kind", "torus")),
        periods=None if periods is None else tuple(float(x) for x in periods),
        radius=float(man.get("radius", 1.0)),
        potential_kind=str(pot.get("kind", "constant")),
        potential_value=float(pot.get("value", 1.0)),
        potential_amplitudes=None if amps is None else tuple(
            float(x) for x in amps),
        potential_height=None if pot.get("height") is None else float(
            pot.get("height")),
        potential_width=None if pot.get("width") is None else float(
            pot.get("width")),
        peaks=int(doc.pop("peaks", 1)),
        alpha=float(doc.pop("alpha", 1.0)),
        beta=float(doc.pop("beta", 1.0)),
        rho1=float(doc.pop("rho1", 1e-3)),
        rho2=None if doc.get("rho2") is None else float(doc.get("rho2")),
        r0=None if doc.get("r0") is None else float(doc.get("r0")),
        solver_r_max=float(sol.get("r_max", 1000.0)),
        solver_rtol=float(sol.get("rtol", 1e-12)),
        solver_grid_per_decade=int(sol.get("grid_per_decade", 400)),
        quad_panels_per_decade=int(quad.get("panels_per_decade", 10)),
        quad_nodes=int(quad.get("nodes", 16)),
        eps_count=int(eps.get("count", 8)),
        eps_hi=float(eps.get("hi", 1e-5)),
        eps_lo=float(eps.get("lo", 1e-8)),
        stages=tuple(str(s) for s in stages),
        output_dir=str(doc.pop("output_dir", "runs")),
        seed=int(doc.pop("seed", 0)),
    )
    doc.pop("q", None)
    doc.pop("rho2", None)
    doc.pop("r0", None)
    if doc:
        raise ConfigError("unknown config keys: %s" % ", ".join(sorted(doc)))
    return validate_config(cfg)


def to_mapping(cfg: RunConfig) -> Dict:
    """Nested mapping mirroring the schema; inverse of _from_mapping."""
    return {
        "p": cfg.p,
        "q": cfg.q,
        "dimension": cfg.dimension,
        "manifold": {
            "kind": cfg.manifold_kind,
            "periods": None if cfg.periods is None else list(cfg.periods),
            "radius": cfg.radius,
        },
        "potential": {
            "kind": cfg.potential_kind,
            "value": cfg.potential_value,
            "amplitudes": None if cfg.potential_amplitudes is None else list(
                cfg.potential_amplitudes),
            "height": cfg.potential_height,
            "width": cfg.potential_width,
        },
        "peaks": cfg.peaks,
        "alpha": cfg.alpha,
        "beta": cfg.beta,
        "rho1": cfg.rho1,
        "rho2": cfg.rho2,
        "r0": cfg.r0,
        "solver": {
            "r_max": cfg.solver_r_max,
            "rtol": cfg.solver_rtol,
            "grid_per_decade": cfg.solver_grid_per_decade,
        },
        "quadrature": {
            "panels_per_decade": cfg.quad_panels_per_decade,
            "nodes": cfg.quad_nodes,
        },
        "eps_grid": {"count": cfg.eps_count, "hi": cfg.eps_hi,
                     "lo": cfg.eps_lo},
        "stages": list(cfg.stages),
        "output_dir": cfg.output_dir,
        "seed": cfg.seed,
    }


def load_config(path: str) -> RunConfig:
    with open(path) as fh:
        doc = yaml.safe_load(fh)
    if not isinstance(doc, dict):
        raise ConfigError("config file must contain a mapping")
    return _from_mapping(doc)


def parse_config(text: str) -> RunConfig:
    doc = yaml.safe_load(text)
    if not isinstance(doc, dict):
        raise ConfigError("config text must contain a mapping")
    return _from_mapping(doc)


def save_config(cfg: RunConfig, path: str) -> None:
    with open(path, "w") as fh:
        yaml.safe_dump(to_mapping(cfg), fh, sort_keys=False,
                       default_flow_style=False)


def config_hash(cfg: RunConfig) -> str:
    """Stable fingerprint of the validated configuration."""
    canon = json.dumps(to_mapping(cfg), sort_keys=True,
                       separators=(",", ":"))
    return hashlib.sha256(canon.encode()).hexdigest()


def merge_overrides(cfg: RunConfig, **overrides) -> RunConfig:
    """Replace fields (None values are ignored) and re-validate."""
    import dataclasses

    updates = {k: v for k, v in overrides.items() if v is not None}
    return validate_config(dataclasses.replace(cfg, **updates))
