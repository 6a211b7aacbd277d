"""Neural ODE flow maps: integration, fitting, splitting, compilation.

The vector field is v(x, t) = A(t) tanh(W(t) x + b(t)) with piecewise
constant (A, W, b).  The flow map is approximated three ways that must
agree: a reference RK4 integrator, the composition of coordinate-wise
splitting maps, and a compiled width-d leaky-ReLU network.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np
import scipy.linalg

from .errors import DomainError, MonotonicityError, ParseError
from .mono1d import fit_monotone_pl, compile_monotone
from .network import Affine, Layer, Network, compose, leaky


@dataclass(frozen=True)
class ODEControls:
    """Piecewise-constant control schedule: list of (duration, A, W, b)."""

    pieces: tuple

    def __post_init__(self):
        pieces = []
        for k, (dur, a, w, b) in enumerate(self.pieces):
            a = np.asarray(a, dtype=float)
            w = np.asarray(w, dtype=float)
            b = np.asarray(b, dtype=float).reshape(-1)
            if dur <= 0.0:
                raise DomainError(f"piece {k}: duration must be positive")
            d = b.shape[0]
            if a.shape != (d, d) or w.shape != (d, d):
                raise DomainError(f"piece {k}: A and W must be {d}x{d}")
            pieces.append((float(dur), a, w, b))
        if not pieces:
            raise DomainError("controls need at least one piece")
        dims = {p[3].shape[0] for p in pieces}
        if len(dims) != 1:
            raise DomainError("pieces disagree on dimension")
        object.__setattr__(self, "pieces", tuple(pieces))

    @property
    def dim(self):
        return self.pieces[0][3].shape[0]

    @property
    def total_duration(self):
        return sum(p[0] for p in self.pieces)


def controls_to_json(controls: ODEControls) -> bytes:
    doc = {
        "pieces": [
            {"duration": dur, "A": a.tolist(), "W": w.tolist(), "b": b.tolist()}
            for dur, a, w, b in controls.pieces
        ]
    }
    return json.dumps(doc).encode("utf-8")


def controls_from_json(data) -> ODEControls:
    if isinstance(data, bytes):
        data = data.decode("utf-8")
    try:
        doc = json.loads(data)
    except json.JSONDecodeError as exc:
        raise ParseError("<document>", f"invalid JSON: {exc}") from None
    if not isinstance(doc, dict) or "pieces" not in doc:
        raise ParseError("pieces", "missing field")
    pieces = []
    for k, entry in enumerate(doc["pieces"]):
        for key in ("duration", "A", "W", "b"):
            if key not in entry:
                raise ParseError(f"pieces[{k}].{key}", "missing field")
        pieces.append((entry["duration"], entry["A"], entry["W"], entry["b"]))
    try:
        return ODEControls(tuple(pieces))
    except DomainError as exc:
        raise ParseError("pieces", str(exc)) from None


def _field(x, a, w, b):
    # x: (n, d) batch
    return np.tanh(x @ w.T + b) @ a.T


def integrate(controls: ODEControls, x0, steps_per_piece: int = 64):
    """Classical RK4 endpoint of the flow; the reference for everything else.

    Accepts a single point (d,) or a batch (n, d).
    """
    if steps_per_piece < 1:
        raise DomainError("steps_per_piece must be >= 1")
    x = np.asarray(x0, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    for dur, a, w, b in controls.pieces:
        h = dur / steps_per_piece
        for _ in range(steps_per_piece):
            k1 = _field(x, a, w, b)
            k2 = _field(x + 0.5 * h * k1, a, w, b)
            k3 = _field(x + 0.5 * h * k2, a, w, b)
            k4 = _field(x + h * k3, a, w, b)
            x = x + (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4)
    return x[0] if single else x


# --- fitting ---------------------------------------------------------------


def _pack(controls: ODEControls):
    return np.concatenate(
        [np.concatenate([a.ravel(), w.ravel(), b]) for _, a, w, b in controls.pieces]
    )


def _unpack(theta, durations, d):
    per = 2 * d * d + d
    pieces = []
    for k, dur in enumerate(durations):
        chunk = theta[k * per : (k + 1) * per]
        a = chunk[: d * d].reshape(d, d)
        w = chunk[d * d : 2 * d * d].reshape(d, d)
        b = chunk[2 * d * d :]
        pieces.append((dur, a, w, b))
    return ODEControls(tuple(pieces))


def _linear_flow_init(xs, ys, durations, d, eta=0.05):
    """Controls whose linearized field reproduces the best affine fit.

    Fits ys ~ L xs + t, takes the matrix logarithm of L, and realizes the
    affine field with W = eta Q for a dense diagonally-dominant Q (dense
    rows keep every elementary map nondegenerate) so the tanh stays in its
    near-linear regime.
    """
    tau = sum(durations)
    design = np.hstack([xs, np.ones((xs.shape[0], 1))])
    sol, *_ = np.linalg.lstsq(design, ys, rcond=None)
    big_l = sol[:d].T
    t_vec = sol[d]
    m_full = None
    for shrink in (0.0, 0.1, 0.3, 0.5):
        cand = (1.0 - shrink) * big_l + shrink * np.eye(d)
        try:
            with np.errstate(all="ignore"):
                import warnings

                with warnings.catch_warnings():
                    warnings.simplefilter("ignore")
                    log = scipy.linalg.logm(cand)
        except Exception:
            continue
        if np.all(np.isfinite(log)) and np.max(np.abs(np.imag(log))) < 1e-8:
            m_full = np.real(log)
            break
    if m_full is None:
        return None
    m_full = m_full / tau
    # affine part: the flow of v = M x + c over tau offsets by (int e^{Ms} ds) c
    s_grid = np.linspace(0.0, tau, 129)
    mats = sum(scipy.linalg.expm(m_full * s) for s in s_grid) * (tau / 128.0)
    mats -= 0.5 * (tau / 128.0) * (np.eye(d) + scipy.linalg.expm(m_full * tau))
    q = np.full((d, d), 0.35 / max(d - 1, 1)) + (1.0 - 0.35 / max(d - 1, 1)) * np.eye(d)
    w_mat = eta * q
    a_mat = m_full @ np.linalg.inv(w_mat)
    try:
        c_vec = np.linalg.solve(mats, t_vec)
        b_vec, *_ = np.linalg.lstsq(a_mat, c_vec, rcond=None)
    except np.linalg.LinAlgError:
        b_vec = np.zeros(d)
    pieces = tuple((dur, a_mat, w_mat, b_vec) for dur in durations)
    return ODEControls(pieces)


def fit_controls(
    samples,
    n_pieces: int,
    budget: int = 600,
    seed: int = 0,
    total_duration: float = 1.0,
    steps_per_piece: int = 24,
    n_restarts: int = 3,
):
    """Fit piecewise-constant controls to input-output samples.

    Central finite-difference gradients drive an Adam loop on the RK4
    endpoint mean-squared error; the integrator stays the single source of
    truth.  Restarts include a deterministic linearized-flow initialization
    plus seeded random ones; the best final loss wins.  Returns
    (controls, loss_history) where loss_history is a list of
    (iteration, loss) rows.
    """
    if n_pieces < 1:
        raise DomainError("n_pieces must be >= 1")
    samples = [(np.asarray(x, dtype=float), np.asarray(y, dtype=float)) for x, y in samples]
    if not samples:
        raise DomainError("need at least one sample")
    d = samples[0][0].shape[0]
    if d < 2:
        raise DomainError("flow fitting needs dimension >= 2")
    xs = np.stack([s[0] for s in samples])
    ys = np.stack([s[1] for s in samples])
    durations = [total_duration / n_pieces] * n_pieces

    def loss_of(theta):
        ctrl = _unpack(theta, durations, d)
        end = integrate(ctrl, xs, steps_per_piece)
        return float(np.mean(np.sum((end - ys) ** 2, axis=1)))

    rng = np.random.default_rng(seed)
    inits = []
    lin = _linear_flow_init(xs, ys, durations, d)
    if lin is not None:
        inits.append(_pack(lin))
    zero = np.zeros(n_pieces * (2 * d * d + d))
    inits.append(zero + 0.01 * rng.standard_normal(zero.shape))
    while len(inits) < n_restarts:
        inits.append(0.3 * rng.standard_normal(zero.shape))

    best_theta, best_loss, best_hist = None, math.inf, []
    per_restart = max(1, budget // len(inits))
    for theta0 in inits:
        theta, loss, hist = _adam_fd(loss_of, theta0.copy(), per_restart)
        if loss < best_loss:
            best_theta, best_loss, best_hist = theta, loss, hist
    return _unpack(best_theta, durations, d), best_hist


_PARAM_CLIP = 64.0  # unit-box targets never need stiffer fields


def _adam_fd(loss_of, theta, iters, lr=0.05, fd_h=1e-5):
    """Adam on central-difference gradients; returns the best iterate seen.

    Parameters are clipped to a sane box: unbounded magnitudes only ever
    win by exploiting integrator error on stiff fields.
    """
    m = np.zeros_like(theta)
    v = np.zeros_like(theta)
    theta = np.clip(theta, -_PARAM_CLIP, _PARAM_CLIP)
    cur = loss_of(theta)
    best_theta, best_loss = theta.copy(), cur
    hist = [(0, cur)]
    beta1, beta2, eps = 0.9, 0.999, 1e-9
    for t in range(1, iters + 1):
        grad = np.empty_like(theta)
        for i in range(theta.size):
            old = theta[i]
            theta[i] = old + fd_h
            up = loss_of(theta)
            theta[i] = old - fd_h
            dn = loss_of(theta)
            theta[i] = old
            grad[i] = (up - dn) / (2.0 * fd_h)
        m = beta1 * m + (1 - beta1) * grad
        v = beta2 * v + (1 - beta2) * grad * grad
        mh = m / (1 - beta1**t)
        vh = v / (1 - beta2**t)
        theta = np.clip(theta - lr * mh / (np.sqrt(vh) + eps), -_PARAM_CLIP, _PARAM_CLIP)
        cur = loss_of(theta)
        if cur < best_loss:
            best_theta, best_loss = theta.copy(), cur
        if t % 10 == 0 or t == iters:
            hist.append((t, cur))
    return best_theta, best_loss, hist


# --- splitting -------------------------------------------------------------


@dataclass(frozen=True)
class ElementaryMap:
    """One coordinate update  y_j = x_j + a dt tanh(w . x + beta)."""

    j: int  # target coordinate (0-based)
    a: float
    w: np.ndarray
    beta: float
    dt: float

    def __post_init__(self):
        object.__setattr__(self, "w", np.asarray(self.w, dtype=float).reshape(-1))
        if self.dt <= 0.0:
            raise DomainError("dt must be positive")

    @property
    def dim(self):
        return self.w.shape[0]

    def apply(self, x):
        x = np.asarray(x, dtype=float)
        single = x.ndim == 1
        x = np.atleast_2d(x).copy()
        x[:, self.j] += self.a * self.dt * np.tanh(x @ self.w + self.beta)
        return x[0] if single else x

    def lipschitz_bound(self):
        return 1.0 + abs(self.a) * self.dt * float(np.linalg.norm(self.w))


def split_steps(controls: ODEControls, dt: float):
    """Elementary maps of the first-order coordinate splitting.

    Per time step the (i, j) sweep is lexicographic; maps with A_ji
    exactly zero are skipped (they are the identity).  Remainders that do
    not divide a piece duration become one shorter final step.
    """
    if dt <= 0.0:
        raise DomainError("dt must be positive")
    d = controls.dim
    maps = []
    for dur, a, w, b in controls.pieces:
        n_full = int(math.floor(dur / dt + 1e-12))
        steps = [dt] * n_full
        rem = dur - n_full * dt
        if rem > 1e-12 * dur:
            steps.append(rem)
        for h in steps:
            for i in range(d):
                for j in range(d):
                    if a[j, i] == 0.0:
                        continue
                    maps.append(ElementaryMap(j, float(a[j, i]), w[i], float(b[i]), h))
    return maps


def apply_split(maps, x):
    x = np.asarray(x, dtype=float)
    single = x.ndim == 1
    x = np.atleast_2d(x)
    for m in maps:
        x = m.apply(x)
    return x[0] if single else x


def max_monotone_dt(m: ElementaryMap) -> float:
    """Largest dt keeping xi + w_j a dt tanh(xi) strictly increasing."""
    c = m.w[m.j] * m.a
    if c >= 0.0:
        return math.inf
    return 1.0 / (-c)


def monotone_dt_ceiling(controls: ODEControls) -> float:
    """Smallest monotone threshold over all elementary maps of the schedule."""
    d = controls.dim
    ceiling = math.inf
    for _, a, w, b in controls.pieces:
        for i in range(d):
            for j in range(d):
                if a[j, i] == 0.0:
                    continue
                c = w[i, j] * a[j, i]
                if c < 0.0:
                    ceiling = min(ceiling, 1.0 / (-c))
    return ceiling


# --- compilation -----------------------------------------------------------


def _box_interval(w, beta, box):
    lo = float(np.minimum(w, 0.0) @ box[:, 1] + np.maximum(w, 0.0) @ box[:, 0] + beta)
    hi = float(np.maximum(w, 0.0) @ box[:, 1] + np.minimum(w, 0.0) @ box[:, 0] + beta)
    return lo, hi


def compile_elementary(
    m: ElementaryMap, alpha: float, domain_box, eps: float
) -> Network:
    """Width-d LeakyReLU network within eps of the map on the box.

    Coordinates are changed so the update becomes the scalar increasing map
    g(xi) = xi + a dt tanh(w_j xi') ...; g is PL-fit and compiled at width
    one while the other coordinates ride through the activations via a
    positive bias shift that makes LeakyReLU the identity on them.
    """
    if eps <= 0.0:
        raise DomainError("eps must be positive")
    box = np.asarray(domain_box, dtype=float)
    d = m.dim
    if box.shape != (d, 2) or np.any(box[:, 1] <= box[:, 0]):
        raise DomainError("domain_box must be a (d, 2) array of proper intervals")
    if m.dt >= max_monotone_dt(m):
        raise MonotonicityError("dt at or beyond the monotone threshold")

    if m.a == 0.0:
        return Network((), Affine(np.eye(d), np.zeros(d)), d)

    w = m.w.copy()
    if w[m.j] == 0.0:
        # keep the coordinate change invertible; sign matches a so the
        # monotone threshold stays infinite and the map error is absorbed
        norm = float(np.linalg.norm(w))
        eta = 1e-3 * norm if norm > 0.0 else 1e-3
        span = float(box[m.j, 1] - box[m.j, 0])
        eta = min(eta, 0.5 * eps / (abs(m.a) * m.dt * max(span, 1e-9)))
        w[m.j] = math.copysign(eta, m.a)
        eps = 0.5 * eps

    wj = w[m.j]
    # Phi: coordinate j becomes xi = (w . x + beta) / w_j, so Phi_jj = 1 and
    # errors in xi translate one-to-one into errors in x_j.
    phi = np.eye(d)
    phi[m.j] = w / wj
    phi_b = np.zeros(d)
    phi_b[m.j] = m.beta / wj
    phi_inv = np.linalg.inv(phi)

    c = m.a * m.dt  # g(xi) = xi + c * tanh(w_j * xi)
    xi_lo, xi_hi = _box_interval(w / wj, m.beta / wj, box)
    pad = 0.1 * (xi_hi - xi_lo) + 1e-6
    xi_lo, xi_hi = xi_lo - pad, xi_hi + pad

    g = lambda xi: xi + c * math.tanh(wj * xi)
    g_pl = fit_monotone_pl(g, 0.45 * eps, domain=(xi_lo, xi_hi))
    chain = compile_monotone(g_pl, alpha, (xi_lo, xi_hi), 0.45 * eps)

    # lift the width-1 chain to width d with identity pass-through
    shift = np.maximum(0.0, -box[:, 0]) + 1.0  # per-coordinate positive shift
    layers = []
    act = leaky(alpha)
    n_chain = chain.depth
    for k in range(n_chain):
        lw = np.zeros((d, d))
        lb = np.zeros(d)
        for l in range(d):
            if l == m.j:
                lw[l, l] = chain.layers[k].weight[0, 0]
                lb[l] = chain.layers[k].bias[0]
            else:
                lw[l, l] = 1.0
                lb[l] = shift[l] if k == 0 else 0.0
        layers.append(Layer(lw, lb, (act,) * d))
    # final affine of the chain plus unshift, then Phi^{-1}
    fa_w = np.eye(d)
    fa_b = np.zeros(d)
    fa_w[m.j, m.j] = chain.final_affine.weight[0, 0]
    fa_b[m.j] = chain.final_affine.bias[0]
    if n_chain:
        for l in range(d):
            if l != m.j:
                fa_b[l] = -shift[l]

    # assemble: x -> Phi x + phi_b -> layers -> fa -> Phi^{-1} (. - phi_b)
    if layers:
        first = layers[0]
        fused = Layer(
            first.weight @ phi, first.weight @ phi_b + first.bias, first.activations
        )
        net_layers = (fused,) + tuple(layers[1:])
        final = Affine(phi_inv @ fa_w, phi_inv @ (fa_b - phi_b))
    else:
        net_layers = ()
        final = Affine(
            phi_inv @ fa_w @ phi, phi_inv @ (fa_w @ phi_b + fa_b - phi_b)
        )
    return Network(net_layers, final, d)


def compile_flow(
    controls: ODEControls,
    dt: float,
    alpha: float,
    domain_box,
    eps_per_map: float,
) -> Network:
    """Compose compiled elementary maps over the whole schedule.

    Per-map budgets are divided by an upper bound on the product of the
    Lipschitz constants of the maps still to come, so the sup error against
    the exact split composition is at most n_maps * eps_per_map.  Boxes are
    rolled forward by interval arithmetic and inflated by the error bound.
    """
    maps = split_steps(controls, dt)
    d = controls.dim
    box = np.asarray(domain_box, dtype=float).copy()
    if not maps:
        return Network((), Affine(np.eye(d), np.zeros(d)), d)
    for m in maps:
        if m.dt >= max_monotone_dt(m):
            raise MonotonicityError(
                "dt exceeds the monotone threshold of an elementary map"
            )
    lips = [m.lipschitz_bound() for m in maps]
    downstream = np.cumprod([1.0] + lips[::-1])[::-1][1:]  # product of later maps
    if downstream[0] > 1e8:
        raise DomainError(
            "control schedule too stiff to compile: the Lipschitz budget "
            f"propagation factor is {downstream[0]:.3g}"
        )
    nets = []
    err_bound = 0.0
    for k, m in enumerate(maps):
        budget = eps_per_map / max(downstream[k], 1.0)
        nets.append(compile_elementary(m, alpha, box, budget))
        err_bound = err_bound * lips[k] + budget
        box = _advance_box(m, box, err_bound)
    out = nets[0]
    for net in nets[1:]:
        out = compose(net, out)
    return out


def _advance_box(m: ElementaryMap, box, margin):
    lo, hi = _box_interval(m.w, m.beta, box)
    t_lo, t_hi = math.tanh(lo), math.tanh(hi)
    c = m.a * m.dt
    add_lo, add_hi = min(c * t_lo, c * t_hi), max(c * t_lo, c * t_hi)
    new = box.copy()
    new[m.j, 0] += add_lo
    new[m.j, 1] += add_hi
    new[:, 0] -= margin
    new[:, 1] += margin
    return new
