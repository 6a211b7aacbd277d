"""Piecewise-linear 1D functions and width-1 monotone compilation.

PL1D is the workhorse representation: breakpoints with values, plus linear
tails.  A PL1D with zero breakpoints is the line ``x -> left_slope * x``
through the origin (left and right slopes must then agree).

``compile_monotone`` turns a strictly increasing PL1D into a width-1
leaky-ReLU network.  Breakpoints whose slope ratio is an exact integer power
of alpha compile exactly; other slopes are re-fit onto the alpha-power
lattice by a short alternating staircase inside the error budget.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, MonotonicityError
from .network import Affine, Layer, Network, leaky, ABS, uniform_layer, compose


@dataclass(frozen=True)
class PL1D:
    breakpoints: np.ndarray
    values: np.ndarray
    left_slope: float
    right_slope: float

    def __post_init__(self):
        b = np.asarray(self.breakpoints, dtype=float).reshape(-1)
        v = np.asarray(self.values, dtype=float).reshape(-1)
        object.__setattr__(self, "breakpoints", b)
        object.__setattr__(self, "values", v)
        if b.shape != v.shape:
            raise DomainError("breakpoints and values must have equal length")
        if b.size and np.any(np.diff(b) <= 0.0):
            raise DomainError("breakpoints must be strictly increasing")
        if b.size == 0 and self.left_slope != self.right_slope:
            raise DomainError("a breakpoint-free PL1D needs equal tail slopes")

    def __call__(self, x):
        return pl_eval(self, x)

    @property
    def num_breakpoints(self):
        return self.breakpoints.size


def pl_line(slope: float) -> PL1D:
    return PL1D(np.empty(0), np.empty(0), slope, slope)


def pl_from_points(xs, ys, left_slope=None, right_slope=None) -> PL1D:
    """PL1D interpolating (xs, ys); tail slopes default to the end segments."""
    xs = np.asarray(xs, dtype=float)
    ys = np.asarray(ys, dtype=float)
    if xs.size < 2:
        raise DomainError("need at least two points")
    ls = (ys[1] - ys[0]) / (xs[1] - xs[0]) if left_slope is None else left_slope
    rs = (ys[-1] - ys[-2]) / (xs[-1] - xs[-2]) if right_slope is None else right_slope
    return PL1D(xs, ys, ls, rs)


def pl_eval(f: PL1D, x):
    """Exact piecewise-linear evaluation (scalar or array)."""
    x = np.asarray(x, dtype=float)
    scalar = x.ndim == 0
    xv = np.atleast_1d(x)
    b, v = f.breakpoints, f.values
    if b.size == 0:
        out = f.left_slope * xv
    else:
        out = np.interp(xv, b, v)
        left = xv < b[0]
        right = xv > b[-1]
        if np.any(left):
            out[left] = v[0] + f.left_slope * (xv[left] - b[0])
        if np.any(right):
            out[right] = v[-1] + f.right_slope * (xv[right] - b[-1])
    return float(out[0]) if scalar else out


def pl_segment_slopes(f: PL1D):
    """All slopes left-to-right: left tail, interior segments, right tail."""
    if f.breakpoints.size < 2:
        return np.array([f.left_slope, f.right_slope])
    interior = np.diff(f.values) / np.diff(f.breakpoints)
    return np.concatenate([[f.left_slope], interior, [f.right_slope]])


def pl_is_increasing(f: PL1D, strict=True) -> bool:
    s = pl_segment_slopes(f)
    return bool(np.all(s > 0.0)) if strict else bool(np.all(s >= 0.0))


def pl_invert(f: PL1D) -> PL1D:
    """Inverse of a strictly increasing PL1D."""
    if not pl_is_increasing(f):
        raise MonotonicityError("pl_invert needs a strictly increasing function")
    if f.breakpoints.size == 0:
        return pl_line(1.0 / f.left_slope)
    return PL1D(f.values, f.breakpoints, 1.0 / f.left_slope, 1.0 / f.right_slope)


def pl_knots_on(f: PL1D, a: float, b: float):
    """Knot arrays (xs, ys) of f restricted to [a, b], endpoints included."""
    if not a < b:
        raise DomainError("empty interval")
    inner = f.breakpoints[(f.breakpoints > a) & (f.breakpoints < b)]
    xs = np.concatenate([[a], inner, [b]])
    ys = pl_eval(f, xs)
    return xs, ys


def _collinear_collapse(xs, ys, tol=1e-13):
    """Drop interior knots that lie on the line through their neighbours."""
    keep = [0]
    for i in range(1, len(xs) - 1):
        x0, x1 = xs[keep[-1]], xs[i + 1]
        y0, y1 = ys[keep[-1]], ys[i + 1]
        yi = y0 + (y1 - y0) * (xs[i] - x0) / (x1 - x0)
        scale = max(1.0, abs(y0), abs(y1))
        if abs(yi - ys[i]) > tol * scale:
            keep.append(i)
    keep.append(len(xs) - 1)
    return xs[keep], ys[keep]


def _rdp_simplify(xs, ys, tol):
    """Ramer-Douglas-Peucker on a sampled curve; keeps endpoints."""
    n = len(xs)
    keep = np.zeros(n, dtype=bool)
    keep[0] = keep[-1] = True
    stack = [(0, n - 1)]
    while stack:
        i, j = stack.pop()
        if j <= i + 1:
            continue
        x0, y0, x1, y1 = xs[i], ys[i], xs[j], ys[j]
        seg = y0 + (y1 - y0) * (xs[i + 1 : j] - x0) / (x1 - x0)
        dev = np.abs(ys[i + 1 : j] - seg)
        k = int(np.argmax(dev))
        if dev[k] > tol:
            mid = i + 1 + k
            keep[mid] = True
            stack.append((i, mid))
            stack.append((mid, j))
    return xs[keep], ys[keep]


def _adaptive_refine(f, a, b, tol, cap=300000):
    """Knots of a PL interpolant probed within tol of f, curvature-adaptive.

    Each interval is accepted once the chord agrees with f at three probe
    points; otherwise it is bisected.  Concentrates knots where f bends,
    which matters for near-saturated maps over wide domains.
    """
    probes = (0.25, 0.5, 0.75)
    out = [(a, float(f(a)))]
    stack = [(a, float(f(a)), b, float(f(b)))]
    budget = cap
    while stack:
        x0, y0, x1, y1 = stack.pop()
        pys = [float(f(x0 + t * (x1 - x0))) for t in probes]
        chords = [y0 + t * (y1 - y0) for t in probes]
        err = max(abs(p - c) for p, c in zip(pys, chords))
        budget -= 3
        if budget <= 0:
            raise DomainError("target is too rough to certify at this eps")
        if err <= tol or (x1 - x0) < 1e-12 * max(1.0, abs(b - a)):
            out.append((x1, y1))
            continue
        xm = 0.5 * (x0 + x1)
        ym = pys[1]
        stack.append((xm, ym, x1, y1))
        stack.append((x0, y0, xm, ym))
    out.sort(key=lambda q: q[0])
    xs = np.array([q[0] for q in out])
    ys = np.array([q[1] for q in out])
    keep = np.concatenate([[True], np.diff(xs) > 0.0])
    return xs[keep], ys[keep]


def fit_monotone_pl(source, eps: float, domain=None, samples=None) -> PL1D:
    """Strictly increasing PL1D within eps of a nondecreasing target.

    ``source`` is a callable on ``domain=[a, b]``; alternatively pass
    ``samples`` as ordered (x, y) pairs and leave ``source=None``.  Flat
    stretches receive a slope floor eps / (4 (b - a)) so the output is
    strictly increasing while staying inside the uniform budget.
    """
    if eps <= 0.0:
        raise DomainError("eps must be positive")
    if samples is not None:
        pts = np.asarray(samples, dtype=float)
        if pts.ndim != 2 or pts.shape[1] != 2 or pts.shape[0] < 2:
            raise DomainError("samples must be an (n, 2) array with n >= 2")
        xs, ys = pts[:, 0].copy(), pts[:, 1].copy()
        if np.any(np.diff(xs) <= 0.0):
            raise DomainError("sample x values must be strictly increasing")
        a, b = float(xs[0]), float(xs[-1])
    else:
        if domain is None:
            raise DomainError("a callable target needs an explicit domain")
        a, b = float(domain[0]), float(domain[1])
        if not a < b:
            raise DomainError("empty domain")
        xs, ys = _adaptive_refine(source, a, b, 0.25 * eps)

    drops = np.maximum(np.maximum.accumulate(ys) - ys, 0.0)
    worst = float(drops.max()) if drops.size else 0.0
    if worst > 0.5 * eps:
        raise DomainError(
            f"input decreases by {worst:.3g}, beyond the eps/2 tolerance"
        )
    ys = np.maximum.accumulate(ys)

    xs, ys = _rdp_simplify(xs, ys, 0.25 * eps)
    xs, ys = _collinear_collapse(xs, ys)

    slopes = np.diff(ys) / np.diff(xs)
    delta_min = eps / (4.0 * (b - a))
    if np.any(slopes < delta_min):
        ys = ys + delta_min * (xs - a)

    if len(xs) == 2:
        s = (ys[1] - ys[0]) / (xs[1] - xs[0])
        if abs(ys[0] - s * xs[0]) <= 1e-12 * max(1.0, abs(ys[0])):
            return pl_line(s)  # pure linear map through the origin
        return PL1D(xs[:1], ys[:1], s, s)
    return pl_from_points(xs, ys)


# --- width-1 leaky-ReLU compilation -------------------------------------

def _domain_segments(u: PL1D, a: float, b: float):
    xs, ys = pl_knots_on(u, a, b)
    slopes = np.diff(ys) / np.diff(xs)
    return xs, ys, slopes


def _staircase(xs, ys, slopes, alpha, eps):
    """Re-knot so every slope is s_ref * alpha^k for integer k.

    Returns (knot_xs, knot_ys, exponents) where exponents[i] is the lattice
    exponent of the slope right of knot i.  Original knots keep their exact
    values, so the staircase deviates from the input by at most eps and the
    deviation never accumulates across segments.
    """
    s_ref = float(np.max(slopes))
    log_a = math.log(alpha)
    new_x, new_y, exps = [xs[0]], [ys[0]], []
    for i, s in enumerate(slopes):
        x0, x1 = xs[i], xs[i + 1]
        y0, y1 = ys[i], ys[i + 1]
        m = math.log(s / s_ref) / log_a  # >= 0 since s <= s_ref and alpha < 1
        if abs(m - round(m)) < 1e-9:
            exps.append(int(round(m)))
            new_x.append(x1)
            new_y.append(y1)
            continue
        k_hi, k_lo = math.floor(m), math.ceil(m)
        s_hi, s_lo = s_ref * alpha**k_hi, s_ref * alpha**k_lo
        lam = (s - s_lo) / (s_hi - s_lo)
        # max deviation of one alternation from the chord is exactly
        # lam (1 - lam) h' (s_hi - s_lo)
        nsub = max(1, math.ceil((x1 - x0) * lam * (1.0 - lam) * (s_hi - s_lo) / eps))
        h = (x1 - x0) / nsub
        for j in range(nsub):
            p = x0 + j * h
            yp = y0 + s * (p - x0)
            xm = p + lam * h
            exps.append(k_hi)
            new_x.append(xm)
            new_y.append(yp + s_hi * lam * h)
            exps.append(k_lo)
            # land exactly on the chord at the subinterval end
            if j == nsub - 1:
                new_x.append(x1)
                new_y.append(y1)
            else:
                new_x.append(p + h)
                new_y.append(y0 + s * (p + h - x0))
    return np.asarray(new_x), np.asarray(new_y), exps


def compile_monotone(u: PL1D, alpha: float, domain, eps: float) -> Network:
    """Width-1 LeakyReLU(alpha) network matching u within eps on the domain.

    The network is strictly increasing on all of R.  Slope changes that are
    exact powers of alpha are reproduced exactly (error is only roundoff);
    everything else costs staircase depth proportional to rise / eps.
    """
    if not (0.0 < alpha < 1.0):
        raise DomainError("alpha must be in (0, 1)")
    if eps <= 0.0:
        raise DomainError("eps must be positive")
    a, b = float(domain[0]), float(domain[1])
    xs, ys, slopes = _domain_segments(u, a, b)
    if np.any(slopes <= 0.0):
        raise MonotonicityError("compile_monotone needs a strictly increasing input")

    kxs, kys, exps = _staircase(xs, ys, slopes, alpha, eps)
    s_ref = float(np.max(slopes))

    # Pending affine: the true value is p * h + q, where h is the current
    # carrier (initially the network input x).
    s0 = s_ref * alpha ** exps[0]
    p, q = s0, kys[0] - s0 * kxs[0]
    layers = []
    act = (leaky(alpha),)
    for i in range(1, len(exps)):
        delta = exps[i] - exps[i - 1]
        y = kys[i]
        for _ in range(delta):  # shrink right-side slope by alpha
            layers.append(Layer(np.array([[-p]]), np.array([y - q]), act))
            p, q = -1.0, y
        for _ in range(-delta):  # grow right-side slope by 1/alpha
            layers.append(Layer(np.array([[p / alpha]]), np.array([(q - y) / alpha]), act))
            p, q = 1.0, y
    return Network(tuple(layers), Affine(np.array([[p]]), np.array([q])), 1)


def build_sawtooth(m: int, domain) -> Network:
    """Width-1 Abs network: triangle wave with m monotone pieces on [a, b].

    The wave starts at 0, alternates between 1 and 0 at the m - 1 interior
    extrema (at a + k (b - a) / m), and is exact.
    """
    if m < 1:
        raise DomainError("m must be >= 1")
    a, b = float(domain[0]), float(domain[1])
    if not a < b:
        raise DomainError("empty domain")

    def unit_wave(k: int) -> Network:
        # triangle wave with k monotone pieces on [0, 1]
        if k == 1:
            return Network((), Affine(np.array([[1.0]]), np.array([0.0])), 1)
        if k % 2 == 0:
            inner = Network(
                (uniform_layer(np.array([[2.0]]), np.array([-1.0]), ABS),),
                Affine(np.array([[-1.0]]), np.array([1.0])),
                1,
            )  # x -> 1 - |2x - 1|
            return compose(unit_wave(k // 2), inner)
        c = (k - 1) / k
        inner = Network(
            (uniform_layer(np.array([[1.0]]), np.array([-c]), ABS),),
            Affine(np.array([[1.0 / c]]), np.array([0.0])),
            1,
        )  # x -> |x - c| / c
        return compose(unit_wave(k - 1), inner)

    to_unit = Network(
        (), Affine(np.array([[1.0 / (b - a)]]), np.array([-a / (b - a)])), 1
    )
    return compose(unit_wave(m), to_unit)
