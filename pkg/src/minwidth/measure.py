"""Lp and uniform error measurement between functions or networks."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError, StructuralError
from .network import Network, eval_batch


@dataclass(frozen=True)
class ErrorReport:
    norm: str  # "Lp(p)" or "uniform"
    value: float
    method: str  # "grid(n)" or "monte_carlo(n, seed)"
    domain: tuple
    confidence_halfwidth: float | None = None


def _as_batch_fn(obj, d_in):
    if isinstance(obj, Network):
        if obj.in_width != d_in:
            raise StructuralError(
                f"network expects {obj.in_width} inputs, box has {d_in}"
            )
        return lambda xs: eval_batch(obj, xs)

    def wrapped(xs):
        return np.stack([np.asarray(obj(x), dtype=float).reshape(-1) for x in xs])

    return wrapped


def _check_same_width(fv, gv):
    if fv.shape != gv.shape:
        raise StructuralError(
            f"functions disagree on output shape: {fv.shape} vs {gv.shape}"
        )


def _grid_points(box, n, corners):
    axes = []
    for lo, hi in box:
        if corners:
            axes.append(np.linspace(lo, hi, n))
        else:
            edges = np.linspace(lo, hi, n + 1)
            axes.append(0.5 * (edges[1:] + edges[:-1]))
    mesh = np.meshgrid(*axes, indexing="ij")
    return np.stack(mesh, axis=-1).reshape(-1, len(box))


def error_lp(f, g, box, p: float, method: str = "grid", n: int = 128, seed: int = 0) -> ErrorReport:
    """||f - g||_{Lp(box)} by composite midpoint quadrature or Monte Carlo.

    The Monte-Carlo path reports a confidence half-width obtained by
    propagating a 1.96-sigma interval on the p-th moment through the
    1/p-th root.
    """
    if p < 1.0:
        raise DomainError("norm order must be >= 1")
    box = np.asarray(box, dtype=float)
    d = box.shape[0]
    vol = float(np.prod(box[:, 1] - box[:, 0]))
    ff = _as_batch_fn(f, d)
    gg = _as_batch_fn(g, d)
    if method == "grid":
        pts = _grid_points(box, n, corners=False)
        fv, gv = ff(pts), gg(pts)
        _check_same_width(fv, gv)
        dev = np.linalg.norm(fv - gv, axis=1) ** p
        value = float((np.mean(dev) * vol) ** (1.0 / p))
        return ErrorReport(f"Lp({p})", value, f"grid({n})", tuple(map(tuple, box)))
    if method == "monte_carlo":
        rng = np.random.default_rng(seed)
        pts = rng.uniform(box[:, 0], box[:, 1], size=(n, d))
        fv, gv = ff(pts), gg(pts)
        _check_same_width(fv, gv)
        dev = np.linalg.norm(fv - gv, axis=1) ** p
        mean = float(np.mean(dev))
        sem = float(np.std(dev, ddof=1) / np.sqrt(n)) if n > 1 else 0.0
        value = float((mean * vol) ** (1.0 / p))
        hi = ((mean + 1.96 * sem) * vol) ** (1.0 / p)
        lo_m = max(mean - 1.96 * sem, 0.0)
        lo = (lo_m * vol) ** (1.0 / p)
        return ErrorReport(
            f"Lp({p})",
            value,
            f"monte_carlo({n}, {seed})",
            tuple(map(tuple, box)),
            confidence_halfwidth=float(0.5 * (hi - lo)),
        )
    raise DomainError(f"unknown method {method!r}")


def error_uniform(f, g, box, grid_n: int = 101) -> ErrorReport:
    """Max pointwise deviation over a corner-including tensor grid.

    This is a lower estimate of the true sup, which is the conservative
    direction for detecting budget violations.
    """
    if grid_n < 2:
        raise DomainError("need at least 2 grid points per axis")
    box = np.asarray(box, dtype=float)
    d = box.shape[0]
    ff = _as_batch_fn(f, d)
    gg = _as_batch_fn(g, d)
    pts = _grid_points(box, grid_n, corners=True)
    fv, gv = ff(pts), gg(pts)
    _check_same_width(fv, gv)
    value = float(np.max(np.linalg.norm(fv - gv, axis=1)))
    return ErrorReport("uniform", value, f"grid({grid_n})", tuple(map(tuple, box)))
