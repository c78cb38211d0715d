"""Run configuration shared by the command-line verbs.

Values come from defaults, then an optional JSON config file, then
command-line flags, later sources winning.
"""

from __future__ import annotations

import json
from dataclasses import asdict, dataclass, fields
from pathlib import Path
from typing import Optional

from .basis import parse_terms
from .errors import DataError

DEFAULT_DAMPING_TERMS = "qd, qd^2, qd^3, q^2*qd"
DEFAULT_STIFFNESS_TERMS = "q, q^2, q^3, q^4, q^5"


@dataclass
class RunConfig:
    inertia: Optional[float] = None
    damping_terms: str = DEFAULT_DAMPING_TERMS
    stiffness_terms: str = DEFAULT_STIFFNESS_TERMS
    cutoff_hz: float = 2.0
    trim_s: float = 0.25
    smooth_window: int = 100
    eps_dq: float = 1e-3
    min_T_fraction: float = 1e-4
    n_crossings: Optional[int] = None
    prune: bool = False
    weighted_stiffness: bool = False
    stiffness_scheme: str = "secant"
    sindy_threshold: float = 0.05
    sindy_normalize: bool = True
    sindy_max_iters: int = 20
    rtol: float = 1e-12
    atol: float = 1e-16

    def validate(self) -> RunConfig:
        if self.inertia is not None and not self.inertia > 0:
            raise DataError(f"inertia must be positive, got {self.inertia}")
        parse_terms(self.damping_terms)
        stiff = parse_terms(self.stiffness_terms)
        if not stiff.is_stiffness:
            raise DataError("stiffness terms must not contain qd")
        checks = [
            (self.cutoff_hz > 0, "cutoff_hz must be positive"),
            (self.trim_s >= 0, "trim_s must be nonnegative"),
            (self.smooth_window >= 1, "smooth_window must be at least 1"),
            (self.stiffness_scheme in ("secant", "point"),
             "stiffness_scheme must be 'secant' or 'point'"),
            (0 < self.eps_dq < 1, "eps_dq must lie in (0, 1)"),
            (0 <= self.min_T_fraction < 1, "min_T_fraction must lie in [0, 1)"),
            (self.n_crossings is None or self.n_crossings >= 1, "n_crossings must be at least 1"),
            (self.sindy_threshold >= 0, "sindy_threshold must be nonnegative"),
            (self.sindy_max_iters >= 1, "sindy_max_iters must be at least 1"),
            (0 < self.rtol < 1, "rtol must lie in (0, 1)"),
            (self.atol > 0, "atol must be positive"),
        ]
        for ok, msg in checks:
            if not ok:
                raise DataError(msg)
        return self

    def to_dict(self) -> dict:
        return asdict(self)

    @classmethod
    def load(cls, path=None, **overrides) -> RunConfig:
        """Defaults, updated by the JSON file at ``path``, updated by the
        non-``None`` ``overrides``."""
        values = {}
        names = {f.name for f in fields(cls)}
        if path is not None:
            try:
                raw = json.loads(Path(path).read_text())
            except json.JSONDecodeError as exc:
                raise DataError(f"{path}: invalid JSON config: {exc}") from None
            if not isinstance(raw, dict):
                raise DataError(f"{path}: config must be a JSON object")
            unknown = sorted(set(raw) - names)
            if unknown:
                raise DataError(f"{path}: unknown config keys {unknown}")
            values.update(raw)
        values.update({k: v for k, v in overrides.items() if v is not None and k in names})
        return cls(**values).validate()
