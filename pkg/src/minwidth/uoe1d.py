"""One-dimensional width-1 universal approximation.

Centre piece is the scalar activation ``rho`` built from the concatenation
of all permutations of {1..n} for n = 2, 3, 4, ...  Its extrema realize
every finite ordering pattern, which is what lets a width-1 network with a
single nonmonotone activation reproduce the extrema structure of an
arbitrary continuous target.

The module provides:

* ``perm_sequence`` / ``uoe_eval`` - the sequence o_i and the activation.
* ``extract_extrema`` / ``ordering_signature`` - extrema profiles of
  piecewise-linear functions and their rank patterns.
* ``find_uoe_window`` - a window of rho whose extrema match a signature.
* ``match_composition`` - the exact decomposition f1 = v o f2 o u for two
  functions with the same ordering of extrema.
* ``build_c_uap_1d`` / ``build_lp_uap_1d`` - width-1 builders for uniform
  (UOE-only) and Lp (leaky-ReLU + Abs) approximation on [0, 1].
"""

from __future__ import annotations

import itertools
import math
import threading
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, StructuralError
from .mono1d import (
    PL1D,
    _rdp_simplify,
    build_sawtooth,
    compile_monotone,
    pl_eval,
    pl_from_points,
    pl_knots_on,
    pl_segment_slopes,
)
from .network import (
    UOE,
    Affine,
    Layer,
    Network,
    affine_network,
    compose,
    uniform_layer,
)

_TABLE_CAP = 4_000_000


class _OTable:
    """Append-only cache of the permutation sequence.

    Extension happens one whole block (all permutations of {1..n}) at a
    time under a lock; readers always see a consistent prefix.
    """

    def __init__(self):
        self._lock = threading.Lock()
        self._values = []
        self._next_block = 2

    def ensure(self, n: int):
        if len(self._values) >= n:
            return self._values
        with self._lock:
            while len(self._values) < n:
                if len(self._values) > _TABLE_CAP:
                    raise DomainError("permutation sequence cap exceeded")
                block = self._next_block
                for perm in itertools.permutations(range(1, block + 1)):
                    self._values.extend(perm)
                self._next_block += 1
        return self._values


_O = _OTable()


def perm_sequence(i: int) -> int:
    """i-th term (1-based) of the concatenated-permutations sequence."""
    if i < 1:
        raise DomainError("index must be >= 1")
    return _O.ensure(i)[i - 1]


def uoe_eval(x):
    """Exact evaluation of the UOE activation.

    x <= 0 gives x / 4; on [0, 1) the function ramps linearly from 0 to
    o_1 = 1; on [i, i + 1) it interpolates o_i to o_{i+1}.
    """
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    xv = np.atleast_1d(x).astype(float)
    out = np.empty_like(xv)
    neg = xv <= 0.0
    out[neg] = xv[neg] / 4.0
    ramp = (xv > 0.0) & (xv < 1.0)
    out[ramp] = xv[ramp]
    hi = xv >= 1.0
    if np.any(hi):
        idx = np.floor(xv[hi]).astype(np.int64)
        need = int(idx.max()) + 2
        if need > _TABLE_CAP:
            raise DomainError("UOE activation evaluated too far right")
        table = np.asarray(_O.ensure(need), dtype=float)
        o_i = table[idx - 1]
        o_n = table[idx]
        out[hi] = o_i + (xv[hi] - idx) * (o_n - o_i)
    return float(out[0]) if scalar else out


def rho_pl(lo: float, hi: float) -> PL1D:
    """The UOE activation as a PL1D covering [lo, hi]."""
    if not lo < hi:
        raise DomainError("empty interval")
    kinks = [float(k) for k in range(0, max(1, math.ceil(hi)) + 1) if lo < k < hi]
    xs = np.array([lo] + kinks + [hi], dtype=float)
    ys = uoe_eval(xs)
    if xs.size == 2:
        slope = (ys[1] - ys[0]) / (xs[1] - xs[0])
        return PL1D(xs[:1], ys[:1], slope, slope)
    return pl_from_points(xs, ys)


# --- extrema profiles ----------------------------------------------------


@dataclass(frozen=True)
class ExtremaProfile:
    locations: np.ndarray
    values: np.ndarray
    kinds: tuple[str, ...]  # alternating "min" / "max"
    left_tail_value: float
    right_tail_value: float

    @property
    def m(self):
        return len(self.kinds)

    def sequence(self):
        """Tail, extrema values, tail: the ordering-relevant value list."""
        return np.concatenate(
            [[self.left_tail_value], self.values, [self.right_tail_value]]
        )


@dataclass(frozen=True)
class OrderingSignature:
    ranks: tuple[int, ...]

    @property
    def m(self):
        return len(self.ranks) - 2


def _dense_ranks(values, tol=1e-9):
    values = np.asarray(values, dtype=float)
    order = np.argsort(values, kind="stable")
    scale = max(1.0, float(np.max(np.abs(values)))) if values.size else 1.0
    ranks = np.empty(values.size, dtype=int)
    rank = 0
    prev = None
    for idx in order:
        v = values[idx]
        if prev is None or v - prev > tol * scale:
            rank += 1
        ranks[idx] = rank
        prev = v
    return tuple(int(r) for r in ranks)


def ordering_signature(profile: ExtremaProfile, tol=1e-9) -> OrderingSignature:
    return OrderingSignature(_dense_ranks(profile.sequence(), tol))


def _walk_extrema(xs, ys):
    """Alternating strict extrema of PL knots, with shelf intervals.

    An extremum is a sign change of the slope; a flat top/bottom collapses
    to its midpoint.  A shelf is a flat stretch inside a monotone run
    (same slope sign on both sides).
    """
    slopes = np.diff(ys) / np.diff(xs)
    ext = []
    shelves = []
    prev_sign = 0
    prev_end = 0  # knot index ending the previous nonzero-slope segment
    for i, s in enumerate(slopes):
        sign = 0 if s == 0.0 else (1 if s > 0.0 else -1)
        if sign == 0:
            continue
        if prev_sign == 0:
            prev_sign = sign
            prev_end = i + 1
            continue
        if sign == prev_sign:
            if prev_end != i:
                shelves.append((float(xs[prev_end]), float(xs[i])))
            prev_end = i + 1
            continue
        left, right = prev_end, i
        ext.append(
            {
                "x_left": float(xs[left]),
                "x_right": float(xs[right]),
                "x": float(0.5 * (xs[left] + xs[right])),
                "value": float(ys[left]),
                "kind": "max" if prev_sign > 0 else "min",
                "plateau": right != left,
            }
        )
        prev_sign = sign
        prev_end = i + 1
    return ext, shelves


def extract_extrema(f: PL1D, domain) -> ExtremaProfile:
    """Interior strict local extrema of f on (a, b), plateau-collapsed."""
    a, b = float(domain[0]), float(domain[1])
    xs, ys = pl_knots_on(f, a, b)
    ext, _ = _walk_extrema(xs, ys)
    locs = np.array([e["x"] for e in ext])
    vals = np.array([e["value"] for e in ext])
    kinds = tuple(e["kind"] for e in ext)
    for i in range(1, len(kinds)):
        if kinds[i] == kinds[i - 1]:
            raise StructuralError("extrema failed to alternate")
    return ExtremaProfile(locs, vals, kinds, float(ys[0]), float(ys[-1]))


# --- window search over rho ----------------------------------------------


def _rho_extrema(upto: int):
    """Extrema and shelves of rho for x in [0, upto + 1]."""
    table = _O.ensure(upto + 2)
    ys = np.concatenate([[0.0], np.asarray(table[: upto + 1], dtype=float)])
    xs = np.arange(0.0, float(upto) + 2.0)
    return _walk_extrema(xs, ys)


def _canon(seq):
    return _dense_ranks(np.asarray(seq, dtype=float), tol=0.0)


class _Gap:
    """Allowed value set for a tail: an exact value or an open interval."""

    def __init__(self, exact=None, lo=-math.inf, hi=math.inf):
        self.exact = exact
        self.lo = lo
        self.hi = hi


def _tail_gap(rank, interior_ranks, interior_values):
    ties = [v for r, v in zip(interior_ranks, interior_values) if r == rank]
    if ties:
        return _Gap(exact=ties[0])
    lo = max(
        (v for r, v in zip(interior_ranks, interior_values) if r < rank),
        default=-math.inf,
    )
    hi = min(
        (v for r, v in zip(interior_ranks, interior_values) if r > rank),
        default=math.inf,
    )
    return _Gap(lo=lo, hi=hi)


def _reach(far_value, near_value):
    """Values a window endpoint can take on one monotone rho segment.

    Closed at the far extremum's value (the endpoint may sit exactly on
    that extremum), open at the near one (which must stay interior).
    """
    if far_value < near_value:
        return far_value, near_value, True, False
    return near_value, far_value, False, True


def _pick_in(gap: _Gap, reach, below=math.inf):
    """A value inside gap, reach and (-inf, below); None if impossible."""
    r_lo, r_hi, lo_closed, hi_closed = reach
    if gap.exact is not None:
        v = gap.exact
        ok_lo = v > r_lo or (lo_closed and v == r_lo)
        ok_hi = v < r_hi or (hi_closed and v == r_hi)
        return v if (ok_lo and ok_hi and v < below) else None
    lo = max(gap.lo, r_lo)
    hi = min(gap.hi, r_hi, below)
    if not lo < hi:
        return None
    if math.isinf(lo):
        return hi - 0.5
    return lo + 0.5 * (hi - lo)


def _segment_preimage(xs, ys, value):
    """x with PL(x) = value on a strictly monotone knot run."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if ys[0] < ys[-1]:
        return float(np.interp(value, ys, xs))
    return float(np.interp(value, ys[::-1], xs[::-1]))


def find_uoe_window(sig: OrderingSignature):
    """Leftmost interval [a, b] where rho's extrema realize the signature.

    Candidates with plateau extrema or shelves in their span are skipped
    (they would break strict monotonicity between extrema); every match is
    verified by re-extracting and re-ranking the windowed profile.
    """
    ranks = sig.ranks
    m = len(ranks) - 2
    if m < 0:
        raise DomainError("signature must include both tails")
    if m == 0:
        r0, r1 = ranks
        if r0 < r1:
            window = (-2.0, -1.0)
        elif r0 > r1:
            window = (3.125, 3.875)  # first descending stretch past the plateau
        else:
            window = (2.125, 2.875)  # inside the first plateau
        _verify_window(sig, window)
        return window

    horizon = 500
    while True:
        ext, shelves = _rho_extrema(horizon)
        found = _scan_candidates(sig, ext, shelves)
        if found is not None:
            return found
        if horizon > _TABLE_CAP:
            raise DomainError("no matching window found within the scan cap")
        horizon *= 8


def _scan_candidates(sig, ext, shelves):
    ranks = sig.ranks
    m = len(ranks) - 2
    interior = ranks[1:-1]
    interior_canon = _canon(interior)
    for j in range(1, len(ext) - m):
        run = ext[j : j + m]
        prev = ext[j - 1]
        nxt = ext[j + m]
        if any(e["plateau"] for e in run):
            continue
        span = (prev["x_right"], nxt["x_left"])
        if any(s0 < span[1] and s1 > span[0] for s0, s1 in shelves):
            continue
        values = [e["value"] for e in run]
        if _canon(values) != interior_canon:
            continue
        gap_l = _tail_gap(ranks[0], interior, values)
        gap_r = _tail_gap(ranks[-1], interior, values)
        reach_l = _reach(prev["value"], run[0]["value"])
        reach_r = _reach(nxt["value"], run[-1]["value"])

        if ranks[0] == ranks[-1] and gap_l.exact is None:
            lo = max(gap_l.lo, reach_l[0], reach_r[0])
            hi = min(gap_l.hi, reach_l[1], reach_r[1])
            if not lo < hi:
                continue
            t_l = t_r = (hi - 0.5) if math.isinf(lo) else lo + 0.5 * (hi - lo)
        elif ranks[0] < ranks[-1]:
            t_r = _pick_in(gap_r, reach_r)
            if t_r is None:
                continue
            t_l = _pick_in(gap_l, reach_l, below=t_r)
            if t_l is None:
                continue
        elif ranks[0] > ranks[-1]:
            t_l = _pick_in(gap_l, reach_l)
            if t_l is None:
                continue
            t_r = _pick_in(gap_r, reach_r, below=t_l)
            if t_r is None:
                continue
        else:  # equal ranks, both tied to the same interior value
            t_l = _pick_in(gap_l, reach_l)
            t_r = _pick_in(gap_r, reach_r)
            if t_l is None or t_r is None:
                continue

        a = _endpoint_location(prev, run[0], t_l)
        b = _endpoint_location(run[-1], nxt, t_r, right=True)
        if _verify_window(sig, (a, b), raise_on_fail=False):
            return (a, b)
    return None


def _endpoint_location(left_ext, right_ext, value, right=False):
    """Point on the monotone segment between two extrema taking ``value``."""
    if right and value == right_ext["value"]:
        return right_ext["x_left"]
    if not right and value == left_ext["value"]:
        return left_ext["x_right"]
    seg_lo, seg_hi = left_ext["x_right"], right_ext["x_left"]
    xs = np.arange(math.floor(seg_lo), math.ceil(seg_hi) + 1.0)
    xs = np.unique(np.clip(xs, seg_lo, seg_hi))
    ys = uoe_eval(xs)
    return _segment_preimage(xs, ys, value)


def _verify_window(sig, window, raise_on_fail=True):
    a, b = window
    prof = extract_extrema(rho_pl(min(a, -1.0) - 1.0, b + 1.0), (a, b))
    ok = ordering_signature(prof).ranks == sig.ranks
    if not ok and raise_on_fail:
        raise DomainError("window verification failed")
    return ok


# --- the exact decomposition f1 = v o f2 o u ------------------------------


def _dedupe_knots(xs, ys):
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    order = np.argsort(xs, kind="stable")
    xs, ys = xs[order], ys[order]
    scale = max(1.0, float(np.max(np.abs(xs))))
    keep = np.concatenate([[True], np.diff(xs) > 1e-13 * scale])
    return xs[keep], ys[keep]


def _g_knots(f2: PL1D, v: PL1D, a, b):
    """Knots (t, g(t)) of g = v o f2 on a monotone interval [a, b] of f2."""
    ts, zs = pl_knots_on(f2, a, b)
    lo, hi = min(zs[0], zs[-1]), max(zs[0], zs[-1])
    inner = v.breakpoints[(v.breakpoints > lo) & (v.breakpoints < hi)]
    pre = [_segment_preimage(ts, zs, z) for z in inner]
    all_t = np.unique(np.concatenate([ts, np.asarray(pre)]))
    all_g = pl_eval(v, pl_eval(f2, all_t))
    return all_t, all_g


def match_composition(f1: PL1D, f2: PL1D, domain1, domain2):
    """Strictly increasing v, u with f1 = v o f2 o u on domain1.

    The two functions must have the same ordering of extrema.  v is the
    piecewise-linear interpolation of f2's value sequence onto f1's; u
    transports extrema locations interval by interval via u = g^{-1} o f1
    with g = v o f2, which is exact in PL arithmetic.
    """
    p1 = extract_extrema(f1, domain1)
    p2 = extract_extrema(f2, domain2)
    if ordering_signature(p1).ranks != ordering_signature(p2).ranks:
        raise DomainError("functions do not share the same ordering of extrema")
    s1 = p1.sequence()
    s2 = p2.sequence()

    if np.ptp(s1) == 0.0 and np.ptp(s2) == 0.0:
        v = PL1D(np.array([s2[0]]), np.array([s1[0]]), 1.0, 1.0)
        u = pl_from_points(
            np.asarray(domain1, dtype=float), np.asarray(domain2, dtype=float)
        )
        return v, u

    xs1, ys1 = pl_knots_on(f1, *domain1)
    xs2, ys2 = pl_knots_on(f2, *domain2)
    if np.any(np.diff(ys1) == 0.0) or np.any(np.diff(ys2) == 0.0):
        raise DomainError("flat segments prevent the monotone decomposition")

    # one interpolation knot per rank; ties share the tolerance the
    # signature used, so near-equal values collapse to one representative
    r1 = _dense_ranks(s1)
    rep2, rep1 = {}, {}
    for rank, z2, z1 in zip(r1, s2.tolist(), s1.tolist()):
        rep2.setdefault(rank, z2)
        rep1.setdefault(rank, z1)
    order = sorted(rep2)
    vx = np.array([rep2[r] for r in order])
    vy = np.array([rep1[r] for r in order])
    if np.any(np.diff(vx) <= 0.0) or np.any(np.diff(vy) <= 0.0):
        raise DomainError("value sequences are not order-isomorphic")
    v = pl_from_points(vx, vy)

    b1 = np.concatenate([[domain1[0]], p1.locations, [domain1[1]]])
    b2 = np.concatenate([[domain2[0]], p2.locations, [domain2[1]]])
    ux_all, uy_all = [], []
    for i in range(len(b1) - 1):
        g_ts, g_vals = _g_knots(f2, v, b2[i], b2[i + 1])
        fxs, fys = pl_knots_on(f1, b1[i], b1[i + 1])
        lo, hi = min(fys[0], fys[-1]), max(fys[0], fys[-1])
        crossing = g_vals[(g_vals > lo) & (g_vals < hi)]
        pre = [_segment_preimage(fxs, fys, val) for val in crossing]
        knots_x = np.unique(
            np.clip(np.concatenate([fxs, np.asarray(pre)]), b1[i], b1[i + 1])
        )
        knots_y = np.array(
            [_segment_preimage(g_ts, g_vals, pl_eval(f1, x)) for x in knots_x]
        )
        knots_y[0] = b2[i]
        knots_y[-1] = b2[i + 1]
        # drop interior knots corrupted by fp drift at near-tie values; the
        # forced interval boundaries are authoritative
        xs_keep, ys_keep = [knots_x[0]], [knots_y[0]]
        for x, y in zip(knots_x[1:-1], knots_y[1:-1]):
            if ys_keep[-1] < y < knots_y[-1]:
                xs_keep.append(x)
                ys_keep.append(y)
        xs_keep.append(knots_x[-1])
        ys_keep.append(knots_y[-1])
        ux_all.append(np.asarray(xs_keep))
        uy_all.append(np.asarray(ys_keep))
    ux, uy = _dedupe_knots(np.concatenate(ux_all), np.concatenate(uy_all))
    u = pl_from_points(ux, uy)
    if not np.all(np.diff(uy) > 0.0):
        raise DomainError("inner map failed to be strictly increasing")
    return v, u


# --- builder preprocessing -----------------------------------------------


def _adaptive_samples(target, a, b, tol):
    n = 513
    while True:
        xs = np.linspace(a, b, n)
        ys = np.asarray([float(target(x)) for x in xs])
        probe = np.linspace(a, b, 2 * (n - 1) + 1)
        probe_y = np.asarray([float(target(x)) for x in probe])
        err = np.max(np.abs(np.interp(probe, xs, ys) - probe_y))
        if err <= tol or n > 2**16:
            break
        n = 2 * (n - 1) + 1
    if err > tol:
        raise DomainError("target is too rough to certify at this tolerance")
    return xs, ys


def _prune_extrema(ys, idx, tol):
    """Drop adjacent extrema pairs with value gap below tol."""
    idx = list(idx)
    while len(idx) >= 2:
        gaps = [abs(ys[idx[k + 1]] - ys[idx[k]]) for k in range(len(idx) - 1)]
        k = int(np.argmin(gaps))
        if gaps[k] >= tol:
            break
        del idx[k : k + 2]
    if (
        len(idx) == 1
        and abs(ys[idx[0]] - ys[0]) < tol
        and abs(ys[idx[0]] - ys[-1]) < tol
    ):
        idx = []
    return idx


def approx_with_alternating_extrema(target, domain, budget) -> PL1D:
    """PL approximation with strict alternating extrema, distinct values.

    Uniform error stays below ``budget``; all segment slopes are nonzero
    and interior extrema values are pairwise distinct - exactly what the
    window search and the decomposition step need.
    """
    a, b = float(domain[0]), float(domain[1])
    xs, ys = _adaptive_samples(target, a, b, 0.25 * budget)

    cand = []
    direction = 0
    for i in range(1, len(ys)):
        d = np.sign(ys[i] - ys[i - 1])
        if d == 0:
            continue
        if direction != 0 and d != direction:
            cand.append(i - 1)
        direction = d
    keep = _prune_extrema(ys, cand, 0.25 * budget)

    markers = [0] + keep + [len(ys) - 1]
    out_x, out_y = [xs[0]], [ys[0]]
    for k in range(len(markers) - 1):
        i0, i1 = markers[k], markers[k + 1]
        seg_x = xs[i0 : i1 + 1].copy()
        seg_y = ys[i0 : i1 + 1].copy()
        rising = seg_y[-1] >= seg_y[0]
        if rising:
            seg_y = np.minimum(np.maximum.accumulate(seg_y), seg_y[-1])
        else:
            seg_y = np.maximum(np.minimum.accumulate(seg_y), seg_y[-1])
        seg_x, seg_y = _rdp_simplify(seg_x, seg_y, 0.1 * budget)
        seg_y = _strictify_run(seg_x, seg_y, rising, budget, b - a)
        out_x.extend(seg_x[1:].tolist())
        out_y.extend(seg_y[1:].tolist())

    out_x = np.asarray(out_x)
    out_y = _separate_extrema_values(out_x, np.asarray(out_y), budget)
    return pl_from_points(out_x, out_y)


def _strictify_run(seg_x, seg_y, rising, budget, span):
    rise = abs(seg_y[-1] - seg_y[0])
    if rise == 0.0:
        slope = 0.125 * budget / span * (1.0 if rising else -1.0)
        return seg_y[0] + slope * (seg_x - seg_x[0])
    chord = seg_y[0] + (seg_y[-1] - seg_y[0]) * (seg_x - seg_x[0]) / (
        seg_x[-1] - seg_x[0]
    )
    theta = min(0.5, 0.125 * budget / rise)
    # blending a monotone run with its chord keeps monotonicity, makes it
    # strict, and fixes both endpoints
    return (1.0 - theta) * seg_y + theta * chord


def _separate_extrema_values(xs, ys, budget):
    slopes = np.abs(np.diff(ys) / np.diff(xs))
    nonzero = slopes[slopes > 0.0]
    if nonzero.size == 0:
        return ys
    min_len = float(np.min(np.diff(xs)))
    zeta = min(0.02 * budget, 0.2 * float(np.min(nonzero)) * min_len)
    ext, _ = _walk_extrema(xs, ys)
    idx = [int(np.searchsorted(xs, e["x"])) for e in ext]
    ys = ys.copy()
    for i, ei in enumerate(idx):
        ties = [k for k in idx[:i] if abs(ys[k] - ys[ei]) < 1e-12]
        if ties:
            bump = zeta * len(ties)
            ys[ei] += bump if ys[ei] >= ys[ei - 1] else -bump
    return ys


# --- sigma_{1/4} -> UOE conversion ---------------------------------------


def leaky_to_uoe(net: Network, in_box) -> Network:
    """Rewrite a LeakyReLU(1/4) network into an equivalent UOE network.

    The UOE activation is x/4 below zero and the identity on [0, 1), so
    each pre-activation is rescaled into that window (scales come from
    rigorous interval bounds over ``in_box``) and the scale is undone by
    the following affine map.  The rewrite is exact.
    """
    lo = np.asarray([b[0] for b in in_box], dtype=float)
    hi = np.asarray([b[1] for b in in_box], dtype=float)
    new_layers = []
    carry = None  # scales applied to the previous layer's outputs
    for layer in net.layers:
        for act in layer.activations:
            if act.tag != "LeakyReLU" or act.alpha != 0.25:
                raise StructuralError("conversion expects LeakyReLU(1/4) layers")
        w = layer.weight.copy()
        if carry is not None:
            w = w / carry
        b = layer.bias.copy()
        z_lo = np.minimum(w, 0.0) @ hi + np.maximum(w, 0.0) @ lo + b
        z_hi = np.maximum(w, 0.0) @ hi + np.minimum(w, 0.0) @ lo + b
        s = np.ones_like(b)
        mask = z_hi > 0.5
        s[mask] = 0.5 / z_hi[mask]
        w = w * s[:, None]
        b = b * s
        new_layers.append(Layer(w, b, (UOE,) * w.shape[0]))
        sz_lo, sz_hi = z_lo * s, z_hi * s
        lo = np.where(sz_lo >= 0.0, sz_lo, sz_lo / 4.0)
        hi = np.where(sz_hi >= 0.0, sz_hi, sz_hi / 4.0)
        carry = s
    fw = net.final_affine.weight.copy()
    if carry is not None:
        fw = fw / carry
    return Network(
        tuple(new_layers), Affine(fw, net.final_affine.bias), net.declared_width
    )


def pad_uoe_depth(net: Network, extra: int, value_interval) -> Network:
    """Equivalent net with ``extra`` more UOE layers (exact identity wires).

    Uses the identity stretch of the activation on [0, 1): values are
    squeezed into [0, 0.9] for the wires and restored by the final affine.
    """
    if extra <= 0:
        return net
    lo, hi = value_interval
    span = max(hi - lo, 1e-9)
    kappa = 0.9 / span
    width = net.final_affine.in_width
    layers = list(net.layers)
    layers.append(
        uniform_layer(np.eye(width) * kappa, np.full(width, -kappa * lo), UOE)
    )
    for _ in range(extra - 1):
        layers.append(uniform_layer(np.eye(width), np.zeros(width), UOE))
    fw = net.final_affine.weight / kappa
    fb = net.final_affine.bias + net.final_affine.weight @ np.full(width, lo)
    return Network(tuple(layers), Affine(fw, fb), net.declared_width)


def final_input_interval(net: Network, in_box=((0.0, 1.0),)):
    """Rigorous interval bounds of the final-affine input over in_box."""
    lo = np.asarray([b[0] for b in in_box], dtype=float)
    hi = np.asarray([b[1] for b in in_box], dtype=float)
    for layer in net.layers:
        w, b = layer.weight, layer.bias
        z_lo = np.minimum(w, 0.0) @ hi + np.maximum(w, 0.0) @ lo + b
        z_hi = np.maximum(w, 0.0) @ hi + np.minimum(w, 0.0) @ lo + b
        new_lo, new_hi = [], []
        for j, act in enumerate(layer.activations):
            va, vb = float(act.scalar(z_lo[j])), float(act.scalar(z_hi[j]))
            new_lo.append(min(va, vb))
            new_hi.append(max(va, vb))
        lo, hi = np.asarray(new_lo), np.asarray(new_hi)
    return lo, hi


def uoe_activation_layer() -> Network:
    """Width-1 net applying the UOE activation itself."""
    layer = uniform_layer(np.array([[1.0]]), np.array([0.0]), UOE)
    return Network((layer,), Affine(np.array([[1.0]]), np.array([0.0])), 1)


# --- end-to-end width-1 builders ------------------------------------------


def build_c_uap_1d(target, eps: float) -> Network:
    """Width-1 UOE-only net within eps of the target uniformly on [0, 1].

    Monotone increasing targets compile directly; everything else goes
    through signature -> window -> decomposition -> monotone compilation.
    """
    if eps <= 0.0:
        raise DomainError("eps must be positive")
    p = approx_with_alternating_extrema(target, (0.0, 1.0), 0.5 * eps)
    prof = extract_extrema(p, (0.0, 1.0))

    if prof.m == 0 and prof.right_tail_value > prof.left_tail_value:
        net = compile_monotone(p, 0.25, (0.0, 1.0), 0.5 * eps)
        return leaky_to_uoe(net, [(0.0, 1.0)])

    sig = ordering_signature(prof)
    a, b = find_uoe_window(sig)
    f2 = rho_pl(min(a, -1.0) - 1.0, b + 1.0)
    v, u = match_composition(p, f2, (0.0, 1.0), (a, b))

    rho_slice = rho_pl(a - 1.0, b + 1.0)
    l_rho = float(np.max(np.abs(pl_segment_slopes(rho_slice))))
    l_v = float(np.max(pl_segment_slopes(v)))
    eps_v = 0.25 * eps
    eps_u = 0.25 * eps / max(l_v * l_rho, 1e-9)

    u_net = compile_monotone(u, 0.25, (0.0, 1.0), eps_u)
    rho_lo = float(np.min(rho_slice.values)) - eps_v - 1.0
    rho_hi = float(np.max(rho_slice.values)) + eps_v + 1.0
    v_net = compile_monotone(v, 0.25, (rho_lo, rho_hi), eps_v)

    u_uoe = leaky_to_uoe(u_net, [(0.0, 1.0)])
    v_uoe = leaky_to_uoe(v_net, [(rho_lo, rho_hi)])
    return compose(v_uoe, compose(uoe_activation_layer(), u_uoe))


def build_lp_uap_1d(target, eps: float, p: float, alpha: float = 0.5) -> Network:
    """Width-1 LeakyReLU+Abs network with Lp([0, 1]) error below eps.

    Extrema are matched only up to narrow transition bands around each
    one; the bands' total measure is budgeted so their Lp contribution
    stays below eps / 4.
    """
    if eps <= 0.0:
        raise DomainError("eps must be positive")
    if p < 1.0:
        raise DomainError("norm order must be >= 1")
    pt = approx_with_alternating_extrema(target, (0.0, 1.0), 0.5 * eps)
    prof = extract_extrema(pt, (0.0, 1.0))
    m = prof.m

    if m == 0:
        if prof.right_tail_value > prof.left_tail_value:
            return compile_monotone(pt, alpha, (0.0, 1.0), 0.5 * eps)
        neg = PL1D(pt.breakpoints, -pt.values, -pt.left_slope, -pt.right_slope)
        net = compile_monotone(neg, alpha, (0.0, 1.0), 0.5 * eps)
        return compose(affine_network(np.array([[-1.0]]), np.array([0.0]), 1), net)

    b_lo = float(np.min(pt.values))
    b_hi = float(np.max(pt.values))
    osc = b_hi - b_lo
    rising_first = prof.kinds[0] == "max"

    pieces = m + 1
    saw_x = np.linspace(0.0, 1.0, pieces + 1)
    saw_y = np.tile([0.0, 1.0], pieces)[: pieces + 1]
    g_y = b_lo + osc * saw_y if rising_first else b_hi - osc * saw_y
    saw_net = build_sawtooth(pieces, (0.0, 1.0))
    scale = osc if rising_first else -osc
    offset = b_lo if rising_first else b_hi
    g_net = compose(affine_network(np.array([[scale]]), np.array([offset]), 1), saw_net)

    band_measure = (0.25 * eps / max(osc, 1e-12)) ** p
    bx = np.concatenate([[0.0], prof.locations, [1.0]])
    u_x, u_y = [], []
    for i in range(pieces):
        dl = 0.0 if i == 0 else _band_halfwidth(bx, i, band_measure, m)
        dr = 0.0 if i == pieces - 1 else _band_halfwidth(bx, i + 1, band_measure, m)
        x0, x1 = bx[i] + dl, bx[i + 1] - dr
        c, d = g_y[i], g_y[i + 1] - g_y[i]
        seg_knots = pt.breakpoints[(pt.breakpoints > x0) & (pt.breakpoints < x1)]
        seg_x = np.concatenate([[x0], seg_knots, [x1]])
        vals = pl_eval(pt, seg_x)
        u_x.append(seg_x)
        u_y.append(saw_x[i] + (vals - c) / (d * pieces))
    ux, uy = _dedupe_knots(np.concatenate(u_x), np.concatenate(u_y))
    u = pl_from_points(ux, uy)
    if not np.all(np.diff(uy) > 0.0):
        raise DomainError("transition bands failed to keep the inner map increasing")

    l_g = osc * pieces
    eps_u = 0.25 * eps / max(l_g, 1e-12)
    u_net = compile_monotone(u, alpha, (0.0, 1.0), eps_u)
    return compose(g_net, u_net)


def _band_halfwidth(bx, k, band_measure, m):
    gap_l = bx[k] - bx[k - 1]
    gap_r = bx[k + 1] - bx[k]
    return min(band_measure / (4.0 * m), 0.25 * gap_l, 0.25 * gap_r)


def build_c_uap_curve(components, eps: float) -> Network:
    """Width-d_y UOE network approximating a curve [0, 1] -> R^{d_y}.

    Each component is built at width one; the chains run in parallel,
    shorter ones padded with exact UOE identity wires.
    """
    nets = [build_c_uap_1d(f, eps) for f in components]
    depth = max(n.depth for n in nets)
    padded = []
    for n in nets:
        lo, hi = final_input_interval(n)
        padded.append(pad_uoe_depth(n, depth - n.depth, (float(lo[0]) - 1e-9, float(hi[0]) + 1e-9)))
    return _stack_width1(padded)


def _stack_width1(nets):
    """Parallel composition of equal-depth width-1 nets sharing one input."""
    depth = nets[0].depth
    d = len(nets)
    layers = []
    for k in range(depth):
        if k == 0:
            w = np.vstack([n.layers[0].weight for n in nets])
        else:
            w = np.zeros((d, d))
            for j, n in enumerate(nets):
                w[j, j] = n.layers[k].weight[0, 0]
        b = np.array([n.layers[k].bias[0] for n in nets])
        acts = tuple(n.layers[k].activations[0] for n in nets)
        layers.append(Layer(w, b, acts))
    fw = np.zeros((d, d))
    fb = np.zeros(d)
    for j, n in enumerate(nets):
        fw[j, j] = n.final_affine.weight[0, 0]
        fb[j] = n.final_affine.bias[0]
    return Network(tuple(layers), Affine(fw, fb), d)
