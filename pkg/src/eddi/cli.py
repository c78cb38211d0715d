"""Command-line interface.

Verbs: ``generate``, ``preprocess``, ``identify``, ``simulate``, ``score``,
``diagnose``. Data goes to files, messages to stderr. Exit codes: 0 ok,
2 usage, 3 data, 4 numerical.
"""

from __future__ import annotations

import argparse
import csv
import datetime
import json
import logging
import sys
import warnings
from pathlib import Path

import numpy as np

from . import dynamics
from .config import RunConfig
from .diagnostics import cwt_morlet, fft_magnitude
from .dynamics import ForceSignal, SolverSpec, integrate_rk45
from .errors import CSVFormatError, DataError, EddiError
from .identify import run_eddi, run_sindy
from .modelfile import ModelFile, file_digest
from .models import Response
from .preprocess import EDGES, HighpassSpec, accel_to_state, butterworth_highpass, filtfilt
from .score import score
from .series import read_csv, write_csv
from .stiffness import SCHEMES

log = logging.getLogger("eddi")

EXIT_USAGE = 2
EXIT_DATA = 3


def _fmt(x: float) -> str:
    return repr(float(x))


def load_response(path, inertia: float | None = None) -> Response:
    cols = read_csv(path)
    missing = [c for c in ("q", "qd") if c not in cols]
    if missing:
        raise CSVFormatError(f"{path}: missing column(s) {missing}")
    if inertia is None:
        raise DataError("the oscillator inertia is required (--inertia or config)")
    return Response(cols["q"], cols["qd"], inertia, cols.get("qdd"))


def write_response(path, r: Response) -> None:
    write_csv(path, {"q": r.q, "qd": r.qd, "qdd": r.acceleration()})


# -- verbs -------------------------------------------------------------------


def cmd_generate(args) -> int:
    gen = {"duffing": dynamics.gen_duffing, "pendulum": dynamics.gen_pendulum}[args.benchmark]
    r, truth = gen()
    out = Path(args.out)
    write_response(out, r)
    truth_path = Path(args.truth) if args.truth else out.with_suffix(".truth.json")
    ModelFile(truth, "truth", config={"benchmark": args.benchmark}).write(truth_path)
    log.info("wrote %s (%d samples) and %s", out, len(r.q), truth_path)
    return 0


def cmd_preprocess(args) -> int:
    cfg = RunConfig.load(args.config, cutoff_hz=args.cutoff, trim_s=args.trim)
    cols = read_csv(args.input)
    name = args.column or next(iter(cols))
    if name not in cols:
        raise CSVFormatError(f"{args.input}: no column {name!r}")
    a = cols[name]
    spec = HighpassSpec(cfg.cutoff_hz, a.sample_rate)
    q, qd = accel_to_state(a, spec, args.edge)
    qdd = filtfilt(butterworth_highpass(spec), a, spec.order, args.edge)
    r = Response(q, qd, 1.0, qdd)
    if cfg.trim_s > 0:
        r = r.window(q.t0 + cfg.trim_s, q.t_end - cfg.trim_s)
    write_response(args.out, r)
    log.info("wrote %s (%d samples)", args.out, len(r.q))
    return 0


def _write_energy(path, result) -> None:
    e = result.damping.energy
    write_csv(path, {"T": e.T, "D": e.D, "E": e.E})


def _write_forces(path, result) -> None:
    cf = result.stiffness.samples
    fitted = result.system.stiffness(cf.q)
    with Path(path).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["q", "force", "fitted_force"])
        for q, f, k in zip(cf.q, cf.restoring, fitted):
            w.writerow([_fmt(q), _fmt(f), _fmt(k)])


def cmd_identify(args) -> int:
    cfg = RunConfig.load(
        args.config,
        inertia=args.inertia,
        damping_terms=args.damping_terms,
        stiffness_terms=args.stiffness_terms,
        smooth_window=args.smooth_window,
        eps_dq=args.eps_dq,
        n_crossings=args.n_crossings,
        sindy_threshold=args.threshold,
        sindy_normalize=args.normalize,
        prune=args.prune,
        stiffness_scheme=args.scheme,
    )
    r = load_response(args.input, cfg.inertia)
    if args.t_start is not None or args.t_end is not None:
        r = r.window(args.t_start if args.t_start is not None else r.q.t0,
                     args.t_end if args.t_end is not None else r.q.t_end)

    if args.method == "eddi":
        result = run_eddi(r, cfg)
        system = result.system
        rms = {"damping": result.damping.residual_rms,
               "stiffness": result.stiffness.residual_rms}
        if args.energy:
            _write_energy(args.energy, result)
        if args.forces:
            _write_forces(args.forces, result)
    else:
        system = run_sindy(r, cfg)
        qdd = r.acceleration().values
        resid = -r.inertia * qdd - system.damping(r.q.values, r.qd.values) \
            - system.stiffness(r.q.values)
        rms = {"equation": float(np.sqrt(np.mean(resid**2)))}

    stamp = datetime.datetime.now(datetime.timezone.utc).isoformat() if args.timestamp else None
    ModelFile(system, args.method, file_digest(args.input), cfg.to_dict(), rms,
              stamp).write(args.out)
    for k, v in rms.items():
        print(f"residual_rms {k} {_fmt(v)}")
    return 0


def cmd_simulate(args) -> int:
    mf = ModelFile.read(args.model)
    force = None
    if args.force:
        cols = read_csv(args.force)
        name = args.force_column or next(iter(cols))
        if name not in cols:
            raise CSVFormatError(f"{args.force}: no column {name!r}")
        force = ForceSignal(cols[name])
    spec = SolverSpec(args.fs, args.t_end, 0.0, args.rtol, args.atol)
    r = integrate_rk45(mf.system, tuple(args.ic), spec, force)
    write_response(args.out, r)
    return 0


def cmd_score(args) -> int:
    cand = ModelFile.read(args.candidate).system
    truth = ModelFile.read(args.truth).system
    ref = load_response(args.response, truth.inertia) if args.response else None
    text = json.dumps(score(cand, truth, ref), indent=2, allow_nan=False) + "\n"
    if args.out:
        Path(args.out).write_text(text)
    else:
        sys.stdout.write(text)
    return 0


def cmd_diagnose(args) -> int:
    cols = read_csv(args.input)
    if args.column not in cols:
        raise CSVFormatError(f"{args.input}: no column {args.column!r}")
    s = cols[args.column]
    freqs, mag = fft_magnitude(s)
    with Path(args.spectrum).open("w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["freq_hz", "magnitude"])
        w.writerows([_fmt(f), _fmt(m)] for f, m in zip(freqs, mag))
    if args.scalogram:
        fmax = args.fmax if args.fmax is not None else 0.4 * s.sample_rate
        wf = np.linspace(args.fmin, fmax, args.nfreq)
        sc = cwt_morlet(s, wf, args.omega0)
        with Path(args.scalogram).open("w", newline="") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(["t"] + [_fmt(f) for f in wf] + ["coi_hz"])
            for i in range(0, sc.times.size, args.stride):
                w.writerow([_fmt(sc.times[i])] + [_fmt(m) for m in sc.magnitudes[:, i]]
                           + [_fmt(sc.coi_hz[i])])
    return 0


# -- parser ------------------------------------------------------------------


def _ic(text: str):
    try:
        q0, qd0 = (float(x) for x in text.split(","))
    except ValueError:
        raise argparse.ArgumentTypeError("expected 'q0,qd0'") from None
    return q0, qd0


def _bool(text: str) -> bool:
    if text.lower() in ("1", "true", "yes", "on"):
        return True
    if text.lower() in ("0", "false", "no", "off"):
        return False
    raise argparse.ArgumentTypeError("expected true/false")


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="eddi", description=__doc__.splitlines()[0])
    p.add_argument("-v", "--verbose", action="store_true")
    sub = p.add_subparsers(dest="command", required=True)

    g = sub.add_parser("generate", help="simulate a benchmark oscillator")
    g.add_argument("benchmark", choices=["duffing", "pendulum"])
    g.add_argument("--out", required=True, help="response CSV (t,q,qd,qdd)")
    g.add_argument("--truth", help="truth model JSON (default: <out>.truth.json)")
    g.set_defaults(func=cmd_generate)

    pp = sub.add_parser("preprocess", help="acceleration CSV to response CSV")
    pp.add_argument("input")
    pp.add_argument("--column", help="acceleration column (default: first)")
    pp.add_argument("--cutoff", type=float, help="high-pass cutoff in Hz (default 2)")
    pp.add_argument("--trim", type=float, help="seconds dropped at each end (default 0.25)")
    pp.add_argument("--edge", choices=EDGES, default="gust",
                    help="filter edge handling (default gust)")
    pp.add_argument("--config")
    pp.add_argument("--out", required=True)
    pp.set_defaults(func=cmd_preprocess)

    i = sub.add_parser("identify", help="identify damping and stiffness models")
    i.add_argument("method", choices=["eddi", "sindy"])
    i.add_argument("input", help="response CSV with q, qd (and optionally qdd)")
    i.add_argument("--config")
    i.add_argument("--inertia", type=float, help="mass or rotational inertia")
    i.add_argument("--damping-terms")
    i.add_argument("--stiffness-terms")
    i.add_argument("--smooth-window", type=int)
    i.add_argument("--eps-dq", type=float)
    i.add_argument("--scheme", choices=SCHEMES, help="conservative-force discretization")
    i.add_argument("--n-crossings", type=int)
    i.add_argument("--threshold", type=float, help="SINDy threshold")
    i.add_argument("--normalize", type=_bool, help="SINDy column normalization")
    i.add_argument("--prune", action="store_true", default=None)
    i.add_argument("--t-start", type=float)
    i.add_argument("--t-end", type=float)
    i.add_argument("--out", required=True, help="model JSON")
    i.add_argument("--energy", help="T/D/E trace CSV (eddi only)")
    i.add_argument("--forces", help="restoring-force samples CSV (eddi only)")
    i.add_argument("--timestamp", action="store_true", help="record a timestamp")
    i.set_defaults(func=cmd_identify)

    s = sub.add_parser("simulate", help="integrate a model file")
    s.add_argument("model")
    s.add_argument("--ic", type=_ic, default=(0.0, 0.0), help="q0,qd0")
    s.add_argument("--force", help="force CSV, zero outside its record")
    s.add_argument("--force-column")
    s.add_argument("--t-end", type=float, required=True)
    s.add_argument("--fs", type=float, required=True, help="output sample rate")
    s.add_argument("--rtol", type=float, default=1e-12)
    s.add_argument("--atol", type=float, default=1e-16)
    s.add_argument("--out", required=True)
    s.set_defaults(func=cmd_simulate)

    sc = sub.add_parser("score", help="compare a model against the truth")
    sc.add_argument("candidate")
    sc.add_argument("truth")
    sc.add_argument("--response", help="reference response for the L2 error")
    sc.add_argument("--out")
    sc.set_defaults(func=cmd_score)

    d = sub.add_parser("diagnose", help="spectrum and scalogram CSVs")
    d.add_argument("input")
    d.add_argument("--column", default="q")
    d.add_argument("--spectrum", required=True)
    d.add_argument("--scalogram")
    d.add_argument("--fmin", type=float, default=1.0)
    d.add_argument("--fmax", type=float)
    d.add_argument("--nfreq", type=int, default=100)
    d.add_argument("--omega0", type=float, default=6.0)
    d.add_argument("--stride", type=int, default=1, help="write every n-th time")
    d.set_defaults(func=cmd_diagnose)
    return p


def _origin(exc: BaseException) -> str:
    """Name of the innermost package module the exception passed through."""
    pkg = Path(__file__).resolve().parent
    origin = "cli"
    tb = exc.__traceback__
    while tb is not None:
        path = Path(tb.tb_frame.f_code.co_filename).resolve()
        if path.parent == pkg:
            origin = path.stem
        tb = tb.tb_next
    return origin


def main(argv=None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s")
    try:
        with warnings.catch_warnings():
            warnings.simplefilter("always")
            return args.func(args)
    except EddiError as exc:
        origin = _origin(exc)
        print(f"eddi {args.command}: error [{origin}] {type(exc).__name__}: {exc}",
              file=sys.stderr)
        return exc.exit_code
    except OSError as exc:
        print(f"eddi {args.command}: error [io] {exc}", file=sys.stderr)
        return EXIT_DATA


if __name__ == "__main__":
    sys.exit(main())
