"""Demo target corpus: the functions every pipeline is exercised on."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import DomainError


@dataclass(frozen=True)
class TargetSpec:
    name: str
    d_in: int
    d_out: int
    fn: object  # vector (d_in,) -> vector (d_out,)
    box: tuple
    lipschitz: float | None = None
    note: str = ""

    def __call__(self, x):
        return np.asarray(self.fn(np.asarray(x, dtype=float).reshape(-1)), dtype=float).reshape(-1)


def _norm_squared(x):
    return np.array([float(np.sum(x * x))])


def _cube_edge(t):
    s = 3.0 * float(t[0])
    if s <= 1.0:
        return np.array([s, 0.0, 0.0])
    if s <= 2.0:
        return np.array([1.0, s - 1.0, 0.0])
    return np.array([1.0, 1.0, s - 2.0])


_FOUR_WAYPOINTS = np.array(
    [
        [0.60, 0.95],
        [0.10, 0.45],
        [0.90, 0.45],
        [0.62, 0.45],
        [0.62, 0.05],
    ]
)


def _digit_four(t):
    # piecewise-linear stroke through the waypoints at uniform speed
    seg = np.linalg.norm(np.diff(_FOUR_WAYPOINTS, axis=0), axis=1)
    cum = np.concatenate([[0.0], np.cumsum(seg)])
    s = float(t[0]) * cum[-1]
    k = min(int(np.searchsorted(cum, s, side="right")) - 1, len(seg) - 1)
    lam = (s - cum[k]) / seg[k]
    return _FOUR_WAYPOINTS[k] + lam * (_FOUR_WAYPOINTS[k + 1] - _FOUR_WAYPOINTS[k])


_ROT_C = np.array([0.5, 0.5])
_ROT_R = np.array([[0.0, -1.0], [1.0, 0.0]])


def _rotation90(x):
    return _ROT_C + _ROT_R @ (x - _ROT_C)


def _swap(x):
    return x[::-1].copy()


def _cheb(n, u):
    return np.cos(n * np.arccos(np.clip(u, -1.0, 1.0)))


def _poly(n_ext):
    n = n_ext + 1

    def fn(x):
        return np.array([0.5 * (_cheb(n, 2.0 * float(x[0]) - 1.0) + 1.0)])

    return fn


def corpus():
    """All demo targets, keyed by name via corpus_by_name()."""
    specs = [
        TargetSpec(
            "norm_squared",
            2,
            1,
            _norm_squared,
            ((-2.0, 2.0), (-2.0, 2.0)),
            lipschitz=8.0,
            note="squared euclidean norm; gradient norm <= 2 |x| <= 8 on the box",
        ),
        TargetSpec(
            "cube_edge_curve",
            1,
            3,
            _cube_edge,
            ((0.0, 1.0),),
            lipschitz=3.0,
            note="curve from the zero corner to the ones corner along cube edges",
        ),
        TargetSpec(
            "digit_four_curve",
            1,
            2,
            _digit_four,
            ((0.0, 1.0),),
            lipschitz=3.0,
            note="piecewise-linear stroke tracing the digit 4; not injective",
        ),
        TargetSpec(
            "rotation90",
            2,
            2,
            _rotation90,
            ((0.0, 1.0), (0.0, 1.0)),
            lipschitz=1.0,
            note="quarter turn about the unit-square center",
        ),
        TargetSpec(
            "swap",
            2,
            2,
            _swap,
            ((0.0, 1.0), (0.0, 1.0)),
            lipschitz=1.0,
            note="coordinate swap",
        ),
    ]
    for k in range(1, 5):
        specs.append(
            TargetSpec(
                f"poly_{k}ext",
                1,
                1,
                _poly(k),
                ((0.0, 1.0),),
                lipschitz=float((k + 1) ** 2),
                note=f"rescaled degree-{k + 1} Chebyshev polynomial with {k} interior extrema",
            )
        )
    return specs


def corpus_by_name(name: str) -> TargetSpec:
    for spec in corpus():
        if spec.name == name:
            return spec
    raise DomainError(f"unknown target {name!r}; known: {[s.name for s in corpus()]}")
