"""End-to-end identification from a free response."""

from __future__ import annotations

from dataclasses import dataclass

from .basis import BasisLibrary, parse_terms
from .config import RunConfig
from .damping import DampingResult, identify_damping, prune_terms
from .models import IdentifiedSystem, Response
from .sindy import StlsqSpec, sindy_identify
from .stiffness import StiffnessResult, identify_stiffness


@dataclass(frozen=True)
class EddiResult:
    system: IdentifiedSystem
    damping: DampingResult
    stiffness: StiffnessResult


def identify_eddi(r: Response, damping_lib: BasisLibrary, stiffness_lib: BasisLibrary,
                  *, min_T_fraction: float = 1e-4, n_crossings: int | None = None,
                  eps_dq: float = 1e-3, smooth_window: int = 100,
                  weighted: bool = False, prune: bool = False,
                  scheme: str = "secant") -> EddiResult:
    """Damping from the energy balance at zero crossings, then stiffness
    from the Lagrangian rebuilt with the estimated mechanical energy."""
    d = identify_damping(r, damping_lib, min_T_fraction, n_crossings)
    if prune:
        d = prune_terms(r, d)
    s = identify_stiffness(r, d.energy.T, d.energy.E, stiffness_lib,
                           eps_dq, smooth_window, weighted, scheme)
    return EddiResult(IdentifiedSystem(r.inertia, d.model, s.model), d, s)


def run_eddi(r: Response, cfg: RunConfig) -> EddiResult:
    return identify_eddi(
        r,
        parse_terms(cfg.damping_terms),
        parse_terms(cfg.stiffness_terms),
        min_T_fraction=cfg.min_T_fraction,
        n_crossings=cfg.n_crossings,
        eps_dq=cfg.eps_dq,
        smooth_window=cfg.smooth_window,
        weighted=cfg.weighted_stiffness,
        prune=cfg.prune,
        scheme=cfg.stiffness_scheme,
    )


def run_sindy(r: Response, cfg: RunConfig) -> IdentifiedSystem:
    spec = StlsqSpec(cfg.sindy_threshold, cfg.sindy_max_iters, cfg.sindy_normalize)
    return sindy_identify(r, parse_terms(cfg.damping_terms),
                          parse_terms(cfg.stiffness_terms), spec)
