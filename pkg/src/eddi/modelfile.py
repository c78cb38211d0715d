"""JSON model files.

Terms are stored with explicit exponents so that coefficient order on disk
carries no meaning. Writing is canonical: fixed key order, two-space
indent, and Python's shortest round-trip float formatting, so a file read
and written again is byte-identical.
"""

from __future__ import annotations

import hashlib
import json
import math
from dataclasses import dataclass, field
from pathlib import Path
from typing import Optional

from .basis import BasisLibrary, BasisTerm
from .errors import ModelFileError
from .models import DampingModel, IdentifiedSystem, StiffnessModel

SCHEMA_VERSION = 1
METHODS = ("eddi", "sindy", "truth")


@dataclass
class ModelFile:
    system: IdentifiedSystem
    method: str
    input_digest: str = ""
    config: dict = field(default_factory=dict)
    residual_rms: dict = field(default_factory=dict)
    timestamp: Optional[str] = None

    def to_json(self) -> str:
        s = self.system
        doc = {
            "schema_version": SCHEMA_VERSION,
            "inertia": float(s.inertia),
            "damping": [
                {"q_exp": t.q_exp, "qd_exp": t.qd_exp, "coeff": float(c)}
                for t, c in zip(s.damping.library, s.damping.coeffs)
            ],
            "stiffness": [
                {"q_exp": t.q_exp, "coeff": float(c)}
                for t, c in zip(s.stiffness.library, s.stiffness.coeffs)
            ],
            "provenance": {
                "method": self.method,
                "input_digest": self.input_digest,
                "config": self.config,
                "residual_rms": {k: float(v) for k, v in self.residual_rms.items()},
            },
        }
        if self.timestamp is not None:
            doc["provenance"]["timestamp"] = self.timestamp
        return json.dumps(doc, indent=2, allow_nan=False) + "\n"

    def write(self, path) -> None:
        Path(path).write_text(self.to_json())

    @classmethod
    def from_json(cls, text: str, source: str = "<string>") -> ModelFile:
        try:
            doc = json.loads(text)
        except json.JSONDecodeError as exc:
            raise ModelFileError(f"{source}: not valid JSON: {exc}") from None
        try:
            if doc["schema_version"] != SCHEMA_VERSION:
                raise ModelFileError(
                    f"{source}: unsupported schema_version {doc['schema_version']}"
                )
            inertia = float(doc["inertia"])
            d_terms = [BasisTerm(int(e["q_exp"]), int(e["qd_exp"])) for e in doc["damping"]]
            d_coef = [float(e["coeff"]) for e in doc["damping"]]
            k_terms = [BasisTerm(int(e["q_exp"]), 0) for e in doc["stiffness"]]
            k_coef = [float(e["coeff"]) for e in doc["stiffness"]]
            prov = doc["provenance"]
            method = prov["method"]
        except ModelFileError:
            raise
        except (KeyError, TypeError, ValueError) as exc:
            raise ModelFileError(f"{source}: malformed model file: {exc!r}") from None
        if method not in METHODS:
            raise ModelFileError(f"{source}: unknown method {method!r}")
        if not all(math.isfinite(c) for c in d_coef + k_coef):
            raise ModelFileError(f"{source}: non-finite coefficient")
        try:
            system = IdentifiedSystem(
                inertia,
                DampingModel(BasisLibrary(d_terms), d_coef),
                StiffnessModel(BasisLibrary(k_terms), k_coef),
            )
        except ValueError as exc:
            raise ModelFileError(f"{source}: {exc}") from None
        return cls(
            system,
            method,
            prov.get("input_digest", ""),
            prov.get("config", {}),
            prov.get("residual_rms", {}),
            prov.get("timestamp"),
        )

    @classmethod
    def read(cls, path) -> ModelFile:
        path = Path(path)
        return cls.from_json(path.read_text(), str(path))


def file_digest(path) -> str:
    h = hashlib.sha256(Path(path).read_bytes())
    return "sha256:" + h.hexdigest()
