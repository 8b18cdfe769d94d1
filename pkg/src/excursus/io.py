"""File formats: Matrix Market precisions, CSV vectors and ensembles,
mesh and mixture JSON, and the result JSON encoding."""

from __future__ import annotations

import csv
import json
import math
import os

import numpy as np
import scipy.io
import scipy.sparse as sp

from .model import GaussianField, MixtureField, SampleEnsemble, SparsePrecision


class InputError(ValueError):
    """A file could not be read or failed validation."""


def read_precision(path) -> SparsePrecision:
    try:
        A = scipy.io.mmread(path)
    except (OSError, ValueError) as exc:
        raise InputError(f"{path}: cannot read Matrix Market file ({exc})") from exc
    try:
        return SparsePrecision(sp.csc_matrix(A))
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc


def write_precision(path, Q) -> None:
    A = Q.csc if isinstance(Q, SparsePrecision) else sp.csc_matrix(Q)
    scipy.io.mmwrite(path, sp.coo_matrix(A), symmetry="general", precision=17)


def _rows(path):
    try:
        with open(path, newline="") as fh:
            return [r for r in csv.reader(fh) if r and any(c.strip() for c in r)]
    except OSError as exc:
        raise InputError(f"{path}: {exc}") from exc


def _is_number(text: str) -> bool:
    try:
        float(text)
    except ValueError:
        return False
    return True


def read_vector(path) -> np.ndarray:
    """Single-column CSV; an optional header line and ``inf``/``-inf`` allowed."""
    rows = _rows(path)
    if rows and not _is_number(rows[0][0].strip()):
        rows = rows[1:]
    if any(len(r) != 1 for r in rows):
        raise InputError(f"{path}: expected a single column")
    try:
        v = np.array([float(r[0]) for r in rows], dtype=np.float64)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc
    if v.size == 0:
        raise InputError(f"{path}: empty vector")
    if np.any(np.isnan(v)):
        raise InputError(f"{path}: NaN entries are not allowed")
    return v


def write_vector(path, values, header: str | None = None) -> None:
    with open(path, "w") as fh:
        if header:
            fh.write(header + "\n")
        for v in np.asarray(values, dtype=np.float64).reshape(-1):
            fh.write(f"{v:.17g}\n")


def read_ensemble(path) -> SampleEnsemble:
    """d x N CSV, one row per node and one column per realization."""
    rows = _rows(path)
    if rows and not all(_is_number(c.strip()) for c in rows[0]):
        rows = rows[1:]
    try:
        X = np.array([[float(c) for c in r] for r in rows], dtype=np.float64)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc
    if X.ndim != 2 or X.size == 0:
        raise InputError(f"{path}: ragged or empty ensemble")
    try:
        return SampleEnsemble(X)
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc


def read_json(path):
    try:
        with open(path) as fh:
            return json.load(fh)
    except (OSError, json.JSONDecodeError) as exc:
        raise InputError(f"{path}: {exc}") from exc


def read_mesh(path):
    from .geometry import TriMesh

    obj = read_json(path)
    try:
        return TriMesh(obj["vertices"], obj["triangles"])
    except (KeyError, TypeError, ValueError) as exc:
        raise InputError(f"{path}: invalid mesh ({exc})") from exc


def read_field(Q_path, mu_path) -> GaussianField:
    Q = read_precision(Q_path)
    mu = read_vector(mu_path)
    if mu.size != Q.dim:
        raise InputError(f"mu has length {mu.size}, Q has dimension {Q.dim}")
    if not np.all(np.isfinite(mu)):
        raise InputError("mu must be finite")
    return GaussianField(mu, Q)


def read_mixture(path) -> MixtureField:
    """``{"weights": [...], "components": [{"Q": file, "mu": file}, ...]}``.

    Relative file names resolve against the JSON file's directory.
    """
    obj = read_json(path)
    base = os.path.dirname(os.path.abspath(path))
    try:
        comps = [
            read_field(os.path.join(base, c["Q"]), os.path.join(base, c["mu"]))
            for c in obj["components"]
        ]
        return MixtureField(obj["weights"], comps)
    except (KeyError, TypeError) as exc:
        raise InputError(f"{path}: invalid mixture description ({exc})") from exc
    except ValueError as exc:
        raise InputError(f"{path}: {exc}") from exc


def to_jsonable(obj):
    """Plain JSON types; NaN becomes null and infinities become strings."""
    if isinstance(obj, dict):
        return {str(k): to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, np.ndarray):
        return to_jsonable(obj.tolist())
    if isinstance(obj, (np.bool_, bool)):
        return bool(obj)
    if isinstance(obj, (np.integer, int)):
        return int(obj)
    if isinstance(obj, (np.floating, float)):
        x = float(obj)
        if math.isnan(x):
            return None
        if math.isinf(x):
            return "inf" if x > 0 else "-inf"
        return x
    if isinstance(obj, np.str_):
        return str(obj)
    return obj


def dumps(obj) -> str:
    return json.dumps(to_jsonable(obj), sort_keys=True, indent=1, allow_nan=False) + "\n"


def from_json_number(x) -> float:
    if x is None:
        return math.nan
    if isinstance(x, str):
        return float(x)
    return float(x)
