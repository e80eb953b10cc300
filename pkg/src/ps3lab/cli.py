"""Command-line front end: ``ps3lab <command> ...``.

Exit codes: 0 success, 1 input error, 2 mathematical degeneracy,
3 solver failure.  PS3_THREADS caps the BLAS thread pools.
"""
from __future__ import annotations

import os

if "PS3_THREADS" in os.environ:
    for _var in ("OMP_NUM_THREADS", "OPENBLAS_NUM_THREADS", "MKL_NUM_THREADS"):
        os.environ.setdefault(_var, os.environ["PS3_THREADS"])

import argparse
import csv
import io
import json
import math
import sys
from dataclasses import dataclass, field

import numpy as np

from .errors import PS3Error

EXIT_OK, EXIT_INPUT, EXIT_DEGENERATE, EXIT_SOLVER = 0, 1, 2, 3


class InputError(Exception):
    pass


@dataclass
class RunConfig:
    command: str
    inputs: list = field(default_factory=list)
    out: str | None = None
    svg: str | None = None
    n: int = 64
    mesh_levels: int | None = None
    tol: float = 1e-6
    fashion: str | None = None
    m1: list = field(default_factory=lambda: [1])
    m2: list = field(default_factory=lambda: [0])
    seed: int = 0
    m1_given: bool = False
    m2_given: bool = False

    def __post_init__(self):
        if self.tol <= 0:
            raise InputError("tolerance must be positive")
        if self.n < 8:
            raise InputError("--n must be at least 8")
        if self.mesh_levels is not None and self.mesh_levels < 1:
            raise InputError("--mesh-levels must be positive")

    @property
    def K(self):
        """Fixed expansion order for a given number of mesh levels, else adaptive."""
        from .moduli import K_LADDER
        if self.mesh_levels is None:
            return None
        return K_LADDER[min(self.mesh_levels, len(K_LADDER)) - 1]


def parse_range(text):
    """'a..b' or 'a' into a list of integers; 'a..b' with b < a is empty."""
    text = str(text).strip()
    try:
        if ".." in text:
            a, b = text.split("..", 1)
            a, b = int(a), int(b)
            if abs(b - a) > 10000:
                raise InputError(f"sweep range {text} too long")
            return list(range(a, b + 1))
        return [int(text)]
    except ValueError as exc:
        raise InputError(f"bad integer range {text!r}") from exc


# ---------------------------------------------------------------- io helpers

def _load_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"cannot read {path}: {exc}") from exc


def load_rational(path):
    from .ratfun import RationalDeg3
    obj = _load_json(path)
    try:
        return RationalDeg3.from_json(obj)
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path} is not a rational function: {exc}") from exc


def load_pants(path):
    """Pants from a pants file, or the associated pants of a rational file."""
    from .pantsgeom import RealSlitPants, associate_pants
    from .ratfun import RationalDeg3
    obj = _load_json(path)
    try:
        if "slots" in obj:
            return RealSlitPants.from_json(obj)
        return associate_pants(RationalDeg3.from_json(obj))
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path} is neither pants nor a rational function: {exc}") from exc


def dumps(obj):
    return json.dumps(_plain(obj), indent=2, sort_keys=True) + "\n"


def _plain(obj):
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    if isinstance(obj, (np.floating, float)):
        v = float(obj)
        return v if math.isfinite(v) else ("inf" if v > 0 else "-inf" if v < 0 else "nan")
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return [float(obj.real), float(obj.imag)]
    if isinstance(obj, np.ndarray):
        return _plain(obj.tolist())
    return obj


def to_csv(header, rows):
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(header)
    for r in rows:
        w.writerow([f"{v:.17g}" if isinstance(v, (float, np.floating)) else v for v in r])
    return buf.getvalue()


def _emit(text, path, stdout):
    if path:
        with open(path, "w") as fh:
            fh.write(text)
    else:
        stdout.write(text)


def _write(path, text):
    with open(path, "w") as fh:
        fh.write(text)


def plot_svg(x, u, width=480, height=240):
    """Polyline plot of u(x) on [-1, 1]."""
    x, u = np.asarray(x, float), np.asarray(u, float)
    s = max(float(np.max(np.abs(u))), 1e-300)
    X = 20 + (x + 1) / 2 * (width - 40)
    Y = height / 2 - u / s * (height / 2 - 20)
    pts = " ".join(f"{a:.3f},{b:.3f}" for a, b in zip(X, Y))
    return (f'<svg xmlns="http://www.w3.org/2000/svg" width="{width}" height="{height}">\n'
            f'<line x1="20" y1="{height / 2}" x2="{width - 20}" y2="{height / 2}" stroke="#999"/>\n'
            f'<polyline fill="none" stroke="#c0392b" stroke-width="1.5" points="{pts}"/>\n</svg>\n')


# ---------------------------------------------------------------- commands

def cmd_classify(cfg, stdout):
    from .ratfun import classify, critical_data
    R = load_rational(cfg.inputs[0])
    R.check_nondegenerate()
    bd = critical_data(R)
    _emit(dumps({"case": classify(R), "branch": bd.to_json(), "seed": cfg.seed}), cfg.out, stdout)
    return EXIT_OK


def cmd_pants(cfg, stdout):
    p = load_pants(cfg.inputs[0])
    _emit(dumps(p.to_json()), cfg.out, stdout)
    return EXIT_OK


def cmd_spectrum(cfg, stdout):
    from .spectral import count_zeros, solve_spectrum
    R = load_rational(cfg.inputs[0])
    sr = solve_spectrum(R, cfg.n)
    rows = [(float(l), float(r), count_zeros(c))
            for l, r, c in zip(sr.eigenvalues, sr.residuals, sr.eigenvectors)]
    _emit(to_csv(("lambda", "residual", "zero_count"), rows), cfg.out, stdout)
    if cfg.out:
        _write(cfg.out + ".json", dumps({"N": sr.N, "eigenvalues": sr.eigenvalues,
                                         "const": sr.const_values,
                                         "coefficients": [list(c) for c in sr.eigenvectors],
                                         "discarded": sr.discarded, "seed": cfg.seed}))
    return EXIT_OK


def default_spec(fashion, m1=None, m2=None, lam=None, h1=None, h2=None):
    """First admissible spec on the matcher's grid, honoring given values.

    Unset integers are tried in the order (1,0), (1,1), (2,0), (2,1)."""
    from .membrane import MembraneSpec, check_spec
    from .moduli import FashionParams
    ms = [(a, b) for a, b in ((1, 0), (1, 1), (2, 0), (2, 1))
          if (m1 is None or a == m1) and (m2 is None or b == m2)] or [(m1, m2)]
    for a, b in ms:
        fp = FashionParams(fashion, a, b if b is not None else 0)
        for x in [np.zeros(3)] + fp.grid(5):
            s = fp.spec(x)
            s = MembraneSpec(fashion, s.lam if lam is None else lam, s.h1 if h1 is None else h1,
                             s.h2 if h2 is None else h2, s.m1, s.m2)
            try:
                check_spec(s)
                return s
            except PS3Error:
                continue
    return s  # invalid; the builder reports why


def _spec_from_args(args, cfg):
    from .membrane import FASHIONS, MembraneSpec
    if args.spec:
        return MembraneSpec.from_json(_load_json(args.spec))
    if cfg.fashion is None:
        raise InputError("need --spec or --fashion")
    if cfg.fashion not in FASHIONS:
        raise InputError(f"unknown fashion {cfg.fashion!r}")
    m1 = cfg.m1[0] if cfg.m1_given else None
    m2 = cfg.m2[0] if cfg.m2_given else None
    return default_spec(cfg.fashion, m1, m2, args.lam, args.h1, args.h2)


def cmd_membrane(cfg, stdout, args):
    from .membrane import build_membrane, render_svg
    atlas = build_membrane(_spec_from_args(args, cfg))
    _emit(atlas.dumps() + "\n", cfg.out, stdout)
    if cfg.svg:
        _write(cfg.svg, render_svg(atlas))
    return EXIT_OK


def cmd_moduli(cfg, stdout, args):
    from .membrane import build_membrane
    from .moduli import moduli_of_membrane, moduli_of_slit_pants
    if cfg.inputs:
        t = moduli_of_slit_pants(load_pants(cfg.inputs[0]), K=cfg.K)
    else:
        t = moduli_of_membrane(build_membrane(_spec_from_args(args, cfg)), K=cfg.K)
    _emit(dumps(dict(t.to_json(), seed=cfg.seed)), cfg.out, stdout)
    return EXIT_OK


def _target(path, K):
    from .moduli import ModuliTriple, moduli_of_slit_pants
    obj = _load_json(path)
    if "values" in obj and "labels" in obj:
        return ModuliTriple(tuple(obj["labels"]), tuple(float(v) for v in obj["values"]))
    return moduli_of_slit_pants(load_pants(path), K=K)


def cmd_match(cfg, stdout, args):
    from .moduli import match
    if cfg.fashion is None:
        raise InputError("--fashion is required")
    path = args.pants or (cfg.inputs[0] if cfg.inputs else None)
    if path is None:
        raise InputError("need --pants or an input file")
    res = match(_target(path, cfg.K), cfg.fashion, cfg.m1[0], cfg.m2[0], tol=cfg.tol,
                K=cfg.K, seed=cfg.seed)
    out = {k: v for k, v in res.to_json().items()}
    out["seed"] = cfg.seed
    _emit(dumps(out), cfg.out, stdout)
    return EXIT_OK


def _reconstruct(R, spec, cfg, p=None):
    from .membrane import FASHION_CASE, build_membrane
    from .pantsgeom import associate_pants
    from .recon import conformal_map, reconstruct_u, sample_points
    p = associate_pants(R) if p is None else p
    x, y = sample_points(R, cfg.n)
    K = None if cfg.K is None else (cfg.K, cfg.K)
    bm = conformal_map(p, build_membrane(spec), y=y, x=x, K=K)
    return bm, reconstruct_u(bm, FASHION_CASE[spec.fashion], spec.fashion)


def cmd_reconstruct(cfg, stdout, args):
    R = load_rational(cfg.inputs[0])
    spec = _spec_from_args(args, cfg)
    bm, rc = _reconstruct(R, spec, cfg)
    _emit(to_csv(("x", "u"), zip(rc.x, rc.u)), cfg.out, stdout)
    if cfg.svg:
        _write(cfg.svg, plot_svg(rc.x, rc.u))
    return EXIT_OK


def _read_u(path):
    try:
        with open(path) as fh:
            rows = list(csv.reader(fh))
        data = np.array([[float(a), float(b)] for a, b in rows[1:]])
    except (OSError, ValueError, IndexError) as exc:
        raise InputError(f"cannot read samples from {path}: {exc}") from exc
    return data[:, 0], data[:, 1]


def cmd_verify(cfg, stdout, args):
    from .recon import verify_pair
    R = load_rational(cfg.inputs[0])
    if args.lam is None or args.u is None:
        raise InputError("verify needs --lambda and --u samples.csv")
    x, u = _read_u(args.u)
    rep = verify_pair(R, args.lam, x, u, N=cfg.n)
    rep["seed"] = cfg.seed
    _emit(dumps(rep), cfg.out, stdout)
    return EXIT_OK


PIPELINE_HEADER = ("fashion", "m1", "m2", "lambda_matched", "lambda_direct", "rel_error",
                   "zero_count", "residual", "status")


def run_pipeline(R, fashion, sweep, cfg, log=None):
    """Rows of the pipeline table; per-point failures become status entries."""
    from .membrane import FASHION_CASE
    from .moduli import match, moduli_of_slit_pants
    from .pantsgeom import associate_pants
    from .ratfun import classify
    from .recon import verify_pair
    from .spectral import solve_spectrum
    case = classify(R)
    if FASHION_CASE[fashion] != case:
        raise InputError(f"fashion {fashion} does not belong to case {case}")
    p = associate_pants(R)
    rows, reports = [], []
    if not sweep:
        return rows, reports
    target = moduli_of_slit_pants(p, K=cfg.K)
    sr = solve_spectrum(R, cfg.n)
    for m1, m2 in sweep:
        row = {"fashion": fashion, "m1": m1, "m2": m2, "lambda_matched": "", "lambda_direct": "",
               "rel_error": "", "zero_count": "", "residual": "", "status": "ok"}
        try:
            res = match(target, fashion, m1, m2, tol=cfg.tol, K=cfg.K, seed=cfg.seed)
            row["lambda_matched"] = res.lam
            _, rc = _reconstruct(R, res.spec, cfg, p)
            rep = verify_pair(R, res.lam, rc.x, rc.u, N=cfg.n, spectrum=sr)
            row.update(lambda_direct=rep["lambda_direct"], rel_error=rep["lambda_rel_error"],
                       zero_count=rc.zero_count, residual=rep["residual"])
            reports.append({"m1": m1, "m2": m2, "match": res.to_json(), "verify": rep})
        except PS3Error as exc:
            row["status"] = f"{type(exc).__name__}: {exc}"
            reports.append({"m1": m1, "m2": m2, "error": str(exc),
                            "certificates": getattr(exc, "certificates", None)})
        if log:
            log(row)
        rows.append(row)
    return rows, reports


def cmd_pipeline(cfg, stdout, args):
    if cfg.fashion is None:
        raise InputError("--fashion is required")
    R = load_rational(cfg.inputs[0])
    if cfg.fashion.startswith("PB"):
        sweep = [(m, 0) for m in cfg.m1]
    else:
        sweep = [(a, b) for a in cfg.m1 for b in cfg.m2]
    rows, reports = run_pipeline(R, cfg.fashion, sweep, cfg)
    text = to_csv(PIPELINE_HEADER, [[r[k] for k in PIPELINE_HEADER] for r in rows])
    _emit(text, cfg.out, stdout)
    if cfg.out:
        _write(cfg.out + ".json", dumps({"seed": cfg.seed, "points": reports}))
    return EXIT_OK


COMMANDS = ("classify", "pants", "spectrum", "membrane", "moduli", "match", "reconstruct",
            "verify", "pipeline")


def build_parser():
    ap = argparse.ArgumentParser(prog="ps3lab", description=__doc__.splitlines()[0])
    ap.add_argument("command", choices=COMMANDS)
    ap.add_argument("inputs", nargs="*")
    ap.add_argument("--out")
    ap.add_argument("--svg")
    ap.add_argument("--n", type=int, default=64)
    ap.add_argument("--mesh-levels", type=int)
    ap.add_argument("--tol", type=float, default=1e-6)
    ap.add_argument("--fashion")
    ap.add_argument("--m", dest="m", default=None)
    ap.add_argument("--m1", default=None)
    ap.add_argument("--m2", default=None)
    ap.add_argument("--seed", type=int, default=0)
    ap.add_argument("--lambda", dest="lam", type=float)
    ap.add_argument("--h1", type=float)
    ap.add_argument("--h2", type=float)
    ap.add_argument("--spec")
    ap.add_argument("--pants")
    ap.add_argument("--u")
    return ap


def config_from_args(args):
    m1 = parse_range(args.m if args.m is not None else (args.m1 if args.m1 is not None else "1"))
    m2 = parse_range(args.m2 if args.m2 is not None else "0")
    return RunConfig(args.command, list(args.inputs), args.out, args.svg, args.n,
                     args.mesh_levels, args.tol, args.fashion, m1, m2, args.seed,
                     args.m is not None or args.m1 is not None, args.m2 is not None)


def main(argv=None, stdout=None, stderr=None):
    stdout = stdout or sys.stdout
    stderr = stderr or sys.stderr
    ap = build_parser()
    try:
        args = ap.parse_args(argv)
    except SystemExit as exc:
        return EXIT_OK if exc.code == 0 else EXIT_INPUT
    try:
        cfg = config_from_args(args)
        needs_input = {"classify", "pants", "spectrum", "reconstruct", "verify", "pipeline"}
        if cfg.command in needs_input and not cfg.inputs:
            raise InputError(f"{cfg.command} needs an input file")
        handler = globals()[f"cmd_{cfg.command}"]
        if cfg.command in ("classify", "pants", "spectrum"):
            return handler(cfg, stdout)
        return handler(cfg, stdout, args)
    except InputError as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_INPUT
    except PS3Error as exc:
        stderr.write(f"{type(exc).__name__}: {exc}\n")
        return exc.exit_code
    except (ValueError, KeyError, TypeError) as exc:
        stderr.write(f"error: {exc}\n")
        return EXIT_INPUT


if __name__ == "__main__":
    sys.exit(main())
