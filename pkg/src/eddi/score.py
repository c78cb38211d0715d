"""Coefficient errors of an identified model against ground truth."""

from __future__ import annotations

from typing import Optional

import numpy as np

from .basis import BasisTerm
from .dynamics import SolverSpec, integrate_rk45
from .models import IdentifiedSystem, Response


def _term_name(key) -> str:
    return BasisTerm(*key).render()


def compare_coefficients(candidate: dict, truth: dict) -> list[dict]:
    """Rows aligned by exponent pair.

    Terms nonzero in the truth get a percent error; a term the candidate
    lacks counts as 100 % and is flagged ``missing``. Terms zero or absent
    in the truth get their absolute magnitude and the ``spurious`` flag.
    """
    rows = []
    for key in sorted(set(candidate) | set(truth)):
        c = candidate.get(key)
        t = truth.get(key, 0.0)
        row = {"term": _term_name(key), "q_exp": key[0], "qd_exp": key[1],
               "truth": t, "identified": c}
        if t != 0.0:
            if c is None:
                row.update(error_pct=100.0, flag="missing")
            else:
                row.update(error_pct=abs(c - t) / abs(t) * 100.0, flag="")
        else:
            row.update(magnitude=abs(c or 0.0), flag="spurious" if c else "")
        rows.append(row)
    return rows


def response_error(system: IdentifiedSystem, reference: Response,
                   rtol: float = 1e-10, atol: float = 1e-14) -> float:
    """Relative L2 displacement error of ``system`` re-simulated from the
    reference's first state on the reference's grid."""
    q = reference.q
    spec = SolverSpec(q.sample_rate, q.t_end, q.t0, rtol, atol)
    sim = integrate_rk45(system, (q.values[0], reference.qd.values[0]), spec)
    n = min(len(sim.q), len(q))
    diff = sim.q.values[:n] - q.values[:n]
    return float(np.linalg.norm(diff) / np.linalg.norm(q.values[:n]))


def score(candidate: IdentifiedSystem, truth: IdentifiedSystem,
          reference: Optional[Response] = None) -> dict:
    report = {
        "inertia": {"truth": truth.inertia, "identified": candidate.inertia},
        "damping": compare_coefficients(candidate.damping.as_dict(),
                                         truth.damping.as_dict()),
        "stiffness": compare_coefficients(candidate.stiffness.as_dict(),
                                          truth.stiffness.as_dict()),
    }
    if reference is not None:
        report["response_rel_l2"] = response_error(candidate, reference)
    return report
