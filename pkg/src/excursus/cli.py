"""Command-line entry point.

Each subcommand reads its inputs from files, runs one engine and writes a
result JSON (stdout unless ``--out`` is given). Exit codes: 0 success,
2 invalid input, 3 matrix not positive definite, 4 unmet precondition.
"""

from __future__ import annotations

import argparse
import sys
import types
from typing import Optional, Sequence

import numpy as np

from . import __version__
from . import io as fio
from .model import METHODS, NotPositiveDefiniteError, ExcursionSpec

EXIT_OK = 0
EXIT_INPUT = 2
EXIT_NUMERIC = 3
EXIT_PRECONDITION = 4

LINKS = {
    "identity": lambda x: x,
    "exp": np.exp,
    "logit": lambda x: 1.0 / (1.0 + np.exp(-x)),
    "probit": None,  # filled lazily to keep scipy out of import time
}


class CLIError(Exception):
    def __init__(self, message: str, code: int = EXIT_INPUT):
        super().__init__(message)
        self.code = code


def _float_list(text: str) -> list[float]:
    try:
        return [float(v) for v in text.split(",") if v.strip()]
    except ValueError:
        raise argparse.ArgumentTypeError(f"expected comma-separated numbers, got {text!r}")


def _common(p: argparse.ArgumentParser, sampling: bool = True):
    p.add_argument("--out", help="result JSON path (default: stdout)")
    p.add_argument("--json-errors", action="store_true", help="report errors as JSON on stderr")
    if sampling:
        p.add_argument("--seed", type=int, default=0)
        p.add_argument("--samples", type=int, default=100_000, help="Monte Carlo sample size")
        p.add_argument("--threads", type=int, default=None,
                       help="worker threads (default: $EXCURSUS_THREADS or 1)")


def _field_args(p, ensemble=True, mixture=False):
    p.add_argument("--Q", help="precision matrix, Matrix Market")
    p.add_argument("--mu", help="mean vector, CSV")
    if ensemble:
        p.add_argument("--ensemble", help="d x N realizations, CSV (Monte Carlo mode)")
    if mixture:
        p.add_argument("--mixture", help="mixture description, JSON")


def _geometry_args(p):
    p.add_argument("--mesh", help="triangle mesh JSON")
    p.add_argument("--lattice-x", help="lattice x coordinates, CSV")
    p.add_argument("--lattice-y", help="lattice y coordinates, CSV")
    p.add_argument("--mask", help="lattice mask (1 keep, 0 drop), CSV")
    p.add_argument("--geojson", help="write the sets as GeoJSON to this path")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="excursus", description="Excursion sets, contour maps "
                                     "and simultaneous bands for latent Gaussian fields.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, metavar="COMMAND")

    p = sub.add_parser("gaussint", help="Gaussian box probability")
    _field_args(p, ensemble=False)
    p.add_argument("--a", help="lower limits, CSV (default: all -inf)")
    p.add_argument("--b", help="upper limits, CSV (default: all inf)")
    p.add_argument("--order", help="processing order (node indices), CSV")
    p.add_argument("--alpha-stop", type=float, default=1.0)
    _common(p)

    p = sub.add_parser("excursions", help="excursion / contour functions and sets")
    _field_args(p)
    p.add_argument("--type", dest="kind", default=">", choices=[">", "<", "!=", "="])
    p.add_argument("--u", type=float, required=True)
    p.add_argument("--alpha", type=float, default=0.1)
    p.add_argument("--method", default="EB", choices=METHODS)
    p.add_argument("--rho", help="marginal probabilities for QC, CSV")
    p.add_argument("--F-limit", dest="F_limit", type=float, default=1.0)
    p.add_argument("--ordering", default="strict", help="'strict' or 'grouped:N'")
    _common(p)

    p = sub.add_parser("contourmap", help="contour map quality measures")
    _field_args(p)
    p.add_argument("--levels", type=_float_list)
    p.add_argument("--n-levels", type=int)
    p.add_argument("--style", default="equidistant", choices=["equidistant", "equalarea"])
    p.add_argument("--compute", default="P2", help="comma list of F, P0, P2 (or 'none')")
    p.add_argument("--F-limit", dest="F_limit", type=float, default=1.0)
    p.add_argument("--weights", help="P0 weights, CSV")
    p.add_argument("--choose-levels", dest="K_max", type=int,
                   help="pick the largest K <= K_MAX whose P2 reaches --target")
    p.add_argument("--target", type=float, default=0.9)
    _common(p)

    p = sub.add_parser("simconf", help="simultaneous confidence band")
    _field_args(p, mixture=True)
    p.add_argument("--alpha", type=float, default=0.05)
    p.add_argument("--tol", type=float, default=None)
    p.add_argument("--link", default="identity", choices=sorted(LINKS),
                   help="inverse link applied to reported band endpoints")
    _common(p)

    p = sub.add_parser("continuous", help="continuous-domain excursion set polygons")
    p.add_argument("--result", required=True, help="result JSON from 'excursions'")
    p.add_argument("--alpha", type=float)
    p.add_argument("--refine", type=int, default=1)
    _geometry_args(p)
    _common(p, sampling=False)

    p = sub.add_parser("tricontour", help="contour curves / level-set regions on a mesh")
    p.add_argument("--z", required=True, help="nodal values, CSV")
    p.add_argument("--levels", type=_float_list, required=True)
    p.add_argument("--mode", default="curves", choices=["curves", "regions", "both"])
    _geometry_args(p)
    _common(p, sampling=False)

    # fixture regeneration; deliberately left out of the help listing
    p = sub.add_parser("oracle")
    _field_args(p, ensemble=False)
    p.add_argument("--a")
    p.add_argument("--b")
    _common(p)
    sub._choices_actions = [a for a in sub._choices_actions if a.dest != "oracle"]
    return parser


# -- helpers ---------------------------------------------------------------


def _require(args, *names, why=""):
    missing = [n for n in names if getattr(args, n, None) is None]
    if missing:
        flags = ", ".join("--" + n.replace("_", "-") for n in missing)
        raise CLIError(f"{args.command}: missing {flags}{why}")


def _gaussian(args):
    _require(args, "Q", "mu")
    return fio.read_field(args.Q, args.mu)


def _source(args):
    """Gaussian field or ensemble, exactly one of the two."""
    has_field = args.Q is not None or args.mu is not None
    has_ens = getattr(args, "ensemble", None) is not None
    if has_field and has_ens:
        raise CLIError(f"{args.command}: give either --Q/--mu or --ensemble, not both")
    if has_ens:
        return None, fio.read_ensemble(args.ensemble)
    if not has_field:
        raise CLIError(f"{args.command}: missing --Q/--mu (or --ensemble)")
    return _gaussian(args), None


def _limits(args, d):
    a = fio.read_vector(args.a) if args.a else np.full(d, -np.inf)
    b = fio.read_vector(args.b) if args.b else np.full(d, np.inf)
    if a.size != d or b.size != d:
        raise CLIError(f"limits have lengths {a.size}/{b.size}, field has {d}")
    return a, b


def _geometry(args):
    if args.mesh is not None:
        if args.lattice_x or args.lattice_y:
            raise CLIError("give either --mesh or --lattice-x/--lattice-y")
        return fio.read_mesh(args.mesh), None
    _require(args, "lattice_x", "lattice_y", why=" (or --mesh)")
    from .geometry import lattice_to_mesh

    x = fio.read_vector(args.lattice_x)
    y = fio.read_vector(args.lattice_y)
    mask = fio.read_vector(args.mask) != 0 if args.mask else None
    return lattice_to_mesh(x, y, mask=mask)


def _config(args) -> dict:
    skip = {"threads", "json_errors", "out", "geojson"}
    return {k: v for k, v in sorted(vars(args).items()) if k not in skip}


def _band_dict(band, link):
    f = LINKS[link]
    if f is None:
        from scipy.special import ndtr as f
    return {
        "a": f(band.a), "b": f(band.b),
        "a_marginal": f(band.a_marginal), "b_marginal": f(band.b_marginal),
        "rho": band.rho, "coverage": band.coverage, "coverage_se": band.coverage_se,
        "marginal_is_simultaneous": band.marginal_is_simultaneous,
        "n_evaluations": band.n_evaluations,
    }


# -- subcommands -------------------------------------------------------------


def cmd_gaussint(args):
    from .gaussint import gaussint

    field = _gaussian(args)
    a, b = _limits(args, field.dim)
    order = None
    if args.order:
        order = fio.read_vector(args.order).astype(np.int64)
    r = gaussint(field.mu, field.Q, (a, b), order=order, n_samples=args.samples,
                 alpha_stop=args.alpha_stop, seed=args.seed, threads=args.threads)
    return {"P": r.P, "E": r.E, "Pv": r.Pv, "Ev": r.Ev, "order": r.order,
            "n_processed": r.n_processed, "zero_position": r.zero_position}


def cmd_excursions(args):
    from .excursions import excursions, excursions_mc, parse_strategy

    field, ens = _source(args)
    if args.method == "QC":
        _require(args, "rho", why=" (required by --method QC)")
        if ens is not None:
            raise CLIError("--method QC applies to Gaussian fields only")
    rho = fio.read_vector(args.rho) if args.rho else None
    spec = ExcursionSpec(args.u, args.kind, args.alpha, args.method, args.F_limit, rho)
    if ens is not None:
        r = excursions_mc(ens, spec)
    else:
        r = excursions(field, spec, n_samples=args.samples, seed=args.seed,
                       strategy=parse_strategy(args.ordering), threads=args.threads)
    return {"F": r.F, "F_se": r.F_se, "order": r.order, "rho": r.rho, "E_set": r.E_set,
            "sign": None if r.sign is None else r.sign.tolist(), "kind": r.kind,
            "alpha": spec.alpha, "F_limit": spec.F_limit}


def cmd_contourmap(args):
    from .contourmap import choose_n_levels, contourmap, contourmap_mc

    field, ens = _source(args)
    compute = [] if args.compute == "none" else [c.strip() for c in args.compute.split(",") if c.strip()]
    weights = fio.read_vector(args.weights) if args.weights else None
    out = {}
    levels, n_levels = args.levels, args.n_levels
    if args.K_max is not None:
        if field is None:
            raise CLIError("--choose-levels needs a Gaussian field")
        K, table = choose_n_levels(field, args.style, args.target, args.K_max,
                                   n_samples=args.samples, seed=args.seed, threads=args.threads)
        out["chosen_n_levels"] = K
        out["P2_by_n_levels"] = {str(k): {"P2": p, "E": e} for k, (p, e) in table.items()}
        levels, n_levels = None, K
    if levels is None and n_levels is None:
        raise CLIError("contourmap: give --levels, --n-levels or --choose-levels")
    if ens is not None:
        r = contourmap_mc(ens, levels, n_levels, args.style, compute, args.F_limit, weights)
    else:
        r = contourmap(field, levels, n_levels, args.style, compute, args.F_limit, weights,
                       n_samples=args.samples, seed=args.seed, threads=args.threads)
    out.update({"levels": r.levels, "mid_levels": r.mid_levels, "set_index": r.set_index,
                "order": r.order, "F": r.F, "P0": r.P0, "P2": r.P2, "P2_se": r.P2_se})
    return out


def cmd_simconf(args):
    from .simconf import DEFAULT_TOL, simconf, simconf_mc, simconf_mixture

    sources = [args.Q is not None or args.mu is not None, args.ensemble is not None,
               args.mixture is not None]
    if sum(sources) != 1:
        raise CLIError("simconf: give exactly one of --Q/--mu, --ensemble, --mixture")
    tol = DEFAULT_TOL if args.tol is None else args.tol
    if args.ensemble is not None:
        band = simconf_mc(fio.read_ensemble(args.ensemble), args.alpha,
                          0.0 if args.tol is None else args.tol)
    elif args.mixture is not None:
        band = simconf_mixture(fio.read_mixture(args.mixture), args.alpha, args.samples,
                               args.seed, tol, args.threads)
    else:
        band = simconf(_gaussian(args), args.alpha, args.samples, args.seed, tol, args.threads)
    return {"rho_band": band.rho, "bands": _band_dict(band, args.link)}


def _result_from_json(path):
    obj = fio.read_json(path)
    res = obj.get("result", obj)
    try:
        F = np.array([fio.from_json_number(v) for v in res["F"]], dtype=np.float64)
        kind = res["kind"]
        sign = None if res.get("sign") is None else np.array(res["sign"])
        alpha = float(res.get("alpha", 0.1))
    except (KeyError, TypeError, ValueError) as exc:
        raise CLIError(f"{path}: not an excursions result ({exc})")
    return types.SimpleNamespace(F=F, kind=kind, sign=sign, spec=types.SimpleNamespace(alpha=alpha))


def cmd_continuous(args):
    from .geometry import continuous

    res = _result_from_json(args.result)
    mesh, node_map = _geometry(args)
    alpha = res.spec.alpha if args.alpha is None else args.alpha
    out = continuous(res, mesh, alpha, node_map=node_map, refine_levels=args.refine)
    gj = out.sets.to_geojson()
    if args.geojson:
        _write(args.geojson, fio.dumps(gj))
    areas = {str(k): out.sets.area(k) for k in out.sets.polygons}
    return {"alpha": alpha, "areas": areas, "n_polygons": {str(k): len(v) for k, v in out.sets.polygons.items()},
            "geojson": gj}


def cmd_tricontour(args):
    from .geometry import tricontour

    mesh, node_map = _geometry(args)
    z = fio.read_vector(args.z)
    if node_map is not None:
        z = z[node_map]
    sets = tricontour(mesh, z, args.levels, args.mode)
    gj = sets.to_geojson()
    if args.geojson:
        _write(args.geojson, fio.dumps(gj))
    return {"levels": args.levels, "geojson": gj}


def cmd_oracle(args):
    from .oracle import dense_box_probability

    field = _gaussian(args)
    a, b = _limits(args, field.dim)
    p, se = dense_box_probability(field.mu, field.Q.toarray(), a, b, args.samples, args.seed)
    return {"P": p, "E": se}


COMMANDS = {
    "gaussint": cmd_gaussint, "excursions": cmd_excursions, "contourmap": cmd_contourmap,
    "simconf": cmd_simconf, "continuous": cmd_continuous, "tricontour": cmd_tricontour,
    "oracle": cmd_oracle,
}


def _write(path, text):
    with open(path, "w") as fh:
        fh.write(text)


def _fail(args, code, exc):
    msg = str(exc)
    if getattr(args, "json_errors", False):
        sys.stderr.write(fio.dumps({"error": {"code": code, "type": type(exc).__name__, "message": msg}}))
    else:
        sys.stderr.write(f"excursus: error: {msg}\n")
    return code


def main(argv: Optional[Sequence[str]] = None) -> int:
    from .excursions import PreconditionError

    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        result = COMMANDS[args.command](args)
        doc = {"command": args.command, "config": _config(args), "result": result,
               "meta": {"seed": getattr(args, "seed", None), "version": __version__}}
        text = fio.dumps(doc)
        if args.out:
            _write(args.out, text)
        else:
            sys.stdout.write(text)
    except CLIError as exc:
        return _fail(args, exc.code, exc)
    except NotPositiveDefiniteError as exc:
        return _fail(args, EXIT_NUMERIC, exc)
    except PreconditionError as exc:
        return _fail(args, EXIT_PRECONDITION, exc)
    except (ValueError, OSError) as exc:
        return _fail(args, EXIT_INPUT, exc)
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())
