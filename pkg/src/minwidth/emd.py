"""Floor-based encoder / memorizer / decoder construction.

Inputs in the unit cube are quantized coordinate by coordinate and packed
into one scalar codeword; a scalar memorizer maps input codewords to
output codewords; a Floor decoder unpacks the output bits.  All Floor
arithmetic is kept exactly representable in 64-bit floats by the bit
budget invariants, so encoder and decoder are bit-exact.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError
from .mono1d import pl_from_points
from .network import (
    FLOOR,
    RELU,
    Affine,
    Layer,
    Network,
    compose,
    leaky,
    uniform_layer,
)
from .uoe1d import build_c_uap_1d, extract_extrema, leaky_to_uoe

# One-neuron clamping (min(t, 2^K - 1) via a ceil trick) needs the product
# t * (1 - 2^-K) to round correctly, which holds up to K = 26.
_MAX_BITS_PER_COORD = 26
_UOE_WINDOW_EXTREMA_CAP = 8


@dataclass(frozen=True)
class QuantSpec:
    d_in: int
    d_out: int
    k_in: int
    k_out: int

    def __post_init__(self):
        for name, v in (("d_in", self.d_in), ("d_out", self.d_out), ("k_in", self.k_in), ("k_out", self.k_out)):
            if v < 1:
                raise DomainError(f"{name} must be >= 1")
        if self.d_in * self.k_in > 52 or self.d_out * self.k_out > 52:
            raise DomainError("total bit budget must stay within 52 bits")
        if self.k_in > _MAX_BITS_PER_COORD or self.k_out > _MAX_BITS_PER_COORD:
            raise DomainError(f"bits per coordinate must stay <= {_MAX_BITS_PER_COORD}")

    @property
    def n_input_codewords(self):
        return 1 << (self.d_in * self.k_in)

    @property
    def input_quantum(self):
        return 2.0 ** (-self.d_in * self.k_in)

    @property
    def output_quantum(self):
        return 2.0 ** (-self.d_out * self.k_out)


def encode_reference(x, q: QuantSpec) -> float:
    """Pack the quantized coordinates of x into one scalar in [0, 1).

    Coordinate-major, most significant bits first; x_j = 1 clamps into the
    top cell.  Exact in 64-bit floats under the QuantSpec bit budget.
    """
    x = np.asarray(x, dtype=float).reshape(-1)
    if x.shape[0] != q.d_in:
        raise DomainError(f"expected {q.d_in} coordinates")
    if np.any(x < 0.0) or np.any(x > 1.0):
        raise DomainError("input must lie in the unit cube")
    scale = float(1 << q.k_in)
    total = 0.0
    for j in range(q.d_in):
        cell = min(math.floor(scale * x[j]), (1 << q.k_in) - 1)
        total += cell * 2.0 ** (q.k_in * (q.d_in - 1 - j))
    return total * q.input_quantum


def decode_reference(ybar: float, q: QuantSpec) -> np.ndarray:
    """Unpack an output codeword scalar into quantized coordinates."""
    out = np.empty(q.d_out)
    prev = 0.0
    for j in range(1, q.d_out + 1):
        r = math.floor(ybar * 2.0 ** (q.k_out * j) + 2.0 ** (q.k_out * (j - q.d_out) - 1))
        out[j - 1] = (r - (1 << q.k_out) * prev) * 2.0 ** (-q.k_out)
        prev = r
    return out


def build_encoder(q: QuantSpec) -> Network:
    """Width-d_in Floor network computing encode_reference bit-exactly.

    Layer one quantizes every coordinate at once (floor(2^K x_j)); layer
    two clamps each integer into the top cell with a single neuron via
    ceil(t (1 - 2^-K)) = -floor(-t (1 - 2^-K)) = min(t, 2^K - 1).
    """
    d, k = q.d_in, q.k_in
    scale = float(1 << k)
    l1 = uniform_layer(np.eye(d) * scale, np.zeros(d), FLOOR)
    a = 1.0 - 2.0 ** (-k)
    l2 = uniform_layer(np.eye(d) * (-a), np.zeros(d), FLOOR)
    weights = np.array([[-(2.0 ** (k * (d - 1 - j))) * q.input_quantum for j in range(d)]])
    final = Affine(weights, np.zeros(1))
    return Network((l1, l2), final, d)


def build_decoder(q: QuantSpec) -> Network:
    """Width-d_out Floor network inverting the output codeword packing.

    One Floor layer reads the scalar at d_out scales, shifted by half an
    output quantum at each scale so inputs within half a quantum of a
    codeword decode exactly; the final affine subtracts the already
    extracted high bits.
    """
    d, k = q.d_out, q.k_out
    w = np.array([[2.0 ** (k * j)] for j in range(1, d + 1)])
    b = np.array([2.0 ** (k * (j - d) - 1) for j in range(1, d + 1)])
    layer = uniform_layer(w, b, FLOOR)
    fw = np.zeros((d, d))
    for j in range(d):
        fw[j, j] = 2.0 ** (-k)
        if j > 0:
            fw[j, j - 1] = -(2.0 ** (-k)) * (1 << k)
    return Network((layer,), Affine(fw, np.zeros(d)), d)


@dataclass(frozen=True)
class CodewordTable:
    """Map from input codeword index n to output codeword scalar."""

    q: QuantSpec
    entries: np.ndarray  # (2^{d_in k_in},) of exact output-quantum multiples

    def __post_init__(self):
        entries = np.asarray(self.entries, dtype=float)
        if entries.shape != (self.q.n_input_codewords,):
            raise DomainError("table must cover every input codeword")
        quanta = entries / self.q.output_quantum
        if np.any(quanta != np.round(quanta)) or np.any(entries < 0.0) or np.any(
            entries >= 1.0
        ):
            raise DomainError("entries must be output-quantum multiples in [0, 1)")
        object.__setattr__(self, "entries", entries)

    def input_codeword(self, n: int) -> float:
        return n * self.q.input_quantum


def table_from_target(target, q: QuantSpec) -> CodewordTable:
    """Tabulate the quantized target at every input cell center."""
    k_in = q.k_in
    cells = 1 << k_in
    entries = np.empty(q.n_input_codewords)
    out_scale = float(1 << q.k_out)
    for n in range(q.n_input_codewords):
        digits = []
        rem = n
        for j in range(q.d_in):
            shift = q.k_in * (q.d_in - 1 - j)
            digits.append((rem >> shift) & (cells - 1))
        x = (np.asarray(digits, dtype=float) + 0.5) / cells
        y = np.clip(np.asarray(target(x), dtype=float).reshape(-1), 0.0, 1.0)
        if y.shape[0] != q.d_out:
            raise DomainError(f"target must produce {q.d_out} outputs")
        total = 0.0
        for j in range(q.d_out):
            cell = min(math.floor(out_scale * y[j]), (1 << q.k_out) - 1)
            total += cell * 2.0 ** (q.k_out * (q.d_out - 1 - j))
        entries[n] = total * q.output_quantum
    return CodewordTable(q, entries)


def table_to_csv(table: CodewordTable) -> str:
    """Rows (n, xbar, ybar) with hex floats for exactness."""
    lines = ["n,xbar,ybar"]
    for n, y in enumerate(table.entries):
        lines.append(f"{n},{table.input_codeword(n).hex()},{float(y).hex()}")
    return "\n".join(lines) + "\n"


def table_from_csv(text: str, q: QuantSpec) -> CodewordTable:
    rows = [r for r in text.strip().splitlines()[1:] if r]
    entries = np.empty(len(rows))
    for row in rows:
        n_str, _, y_str = row.split(",")
        entries[int(n_str)] = float.fromhex(y_str)
    return CodewordTable(q, entries)


def _interpolant_data(table: CodewordTable):
    xs = np.arange(table.q.n_input_codewords) * table.q.input_quantum
    return xs, table.entries.copy()


def _relu_accumulator(xs, ys, act_kind, domain_hi):
    """Width-2 exact PL accumulator network.

    Channel one clips the input left to right (c1 = act(x - t_k)); channel
    two rides the running partial interpolant, shifted positive so the
    activation is the identity on it.  Exact for ReLU; for LeakyReLU the
    same wiring is used with slope-jump coefficients solved backward to
    cancel the leak.
    """
    n = len(xs)
    slopes = np.diff(ys) / np.diff(xs)
    if n == 2 or np.allclose(slopes, slopes[0], rtol=0.0, atol=0.0):
        w = np.array([[slopes[0]]])
        b = np.array([ys[0] - slopes[0] * xs[0]])
        return Network((), Affine(w, b), 2)
    kinks = xs[1:-1]
    jumps = np.diff(slopes)
    keep = jumps != 0.0
    kinks, jumps = kinks[keep], jumps[keep]
    if kinks.size == 0:
        w = np.array([[slopes[0]]])
        b = np.array([ys[0] - slopes[0] * xs[0]])
        return Network((), Affine(w, b), 2)

    if act_kind.tag == "ReLU":
        deltas = jumps.copy()
        ramp_vals = lambda x: np.maximum(x[None, :] - kinks[:, None], 0.0)
    else:
        alpha = act_kind.alpha
        # solve sum_{j>=i} delta_j alpha^{j-i} (1-alpha) = jump_i backward
        deltas = np.empty_like(jumps)
        s_next = 0.0
        for i in range(len(jumps) - 1, -1, -1):
            deltas[i] = jumps[i] / (1.0 - alpha) - alpha * s_next
            s_next = deltas[i] + alpha * s_next
        ramp_vals = lambda x: _leaky_chain_values(x, kinks, alpha)

    # base affine so that base + sum_k delta_k ramp_k == interpolant
    probes = np.array([xs[0], xs[-1]])
    resid = np.array([ys[0], ys[-1]]) - deltas @ ramp_vals(probes)
    s_base = (resid[1] - resid[0]) / (probes[1] - probes[0])
    b_base = resid[0] - s_base * probes[0]

    # positive shift for the accumulator channel over [xs[0], domain_hi]
    grid = np.unique(np.concatenate([xs, [domain_hi]]))
    ramps = ramp_vals(grid)
    partial = s_base * grid + b_base
    m_shift = max(0.0, -float(partial.min()))
    for k in range(len(kinks)):
        partial = partial + deltas[k] * ramps[k]
        m_shift = max(m_shift, -float(partial.min()))
    m_shift += 1.0

    act = (act_kind, act_kind)
    layers = []
    for k in range(len(kinks)):
        if k == 0:
            w = np.array([[1.0], [s_base]])
            b = np.array([-kinks[0], b_base + m_shift])
        else:
            w = np.array([[1.0, 0.0], [deltas[k - 1], 1.0]])
            b = np.array([-(kinks[k] - kinks[k - 1]), 0.0])
        layers.append(Layer(w, b, act))
    final = Affine(np.array([[deltas[-1], 1.0]]), np.array([-m_shift]))
    return Network(tuple(layers), final, 2)


def _leaky_chain_values(x, kinks, alpha):
    """Values of each chained leaky ramp c1_k at the points x."""
    out = np.empty((len(kinks), len(x)))
    cur = x - kinks[0]
    cur = np.where(cur >= 0.0, cur, alpha * cur)
    out[0] = cur
    for k in range(1, len(kinks)):
        cur = cur - (kinks[k] - kinks[k - 1])
        cur = np.where(cur >= 0.0, cur, alpha * cur)
        out[k] = cur
    return out


def build_memorizer(table: CodewordTable, variant: str, eps_mem: float) -> Network:
    """Scalar network within eps_mem of every (xbar_n, ybar_n) pair.

    variant "relu": width-2 ReLU accumulator, exact at codewords.
    variant "uoe": width-1 UOE network via the ordering-of-extrema route
    when the interpolant has few extrema; tables whose extrema pattern is
    too long for a tractable window search fall back to a width-2
    accumulator built from LeakyReLU(1/4) and rewritten exactly into UOE.
    """
    if eps_mem <= 0.0 or eps_mem >= 0.5 * table.q.output_quantum:
        raise DomainError("eps_mem must be positive and below half an output quantum")
    if variant not in ("relu", "uoe"):
        raise DomainError(f"unknown memorizer variant {variant!r}")
    xs, ys = _interpolant_data(table)
    if variant == "relu":
        return _relu_accumulator(xs, ys, RELU, 1.0)

    if xs.size >= 3:
        interp = pl_from_points(xs, ys)
        m = extract_extrema(interp, (float(xs[0]), float(xs[-1]))).m
    else:
        m = 0
    if m <= _UOE_WINDOW_EXTREMA_CAP:
        interp_fn = (
            (lambda t: float(np.interp(t, xs, ys))) if xs.size >= 2 else (lambda t: float(ys[0]))
        )
        return build_c_uap_1d(interp_fn, eps_mem)
    net = _relu_accumulator(xs, ys, leaky(0.25), 1.0)
    if net.depth == 0:
        return net
    return leaky_to_uoe(net, [(0.0, 1.0)])


def build_emd(target, q: QuantSpec, variant: str, eps_mem=None) -> Network:
    """decoder o memorizer o encoder at width max(d_in, d_out).

    The memorizer only ever sees exact input codewords, and its output
    error below half an output quantum is absorbed by the decoder's
    rounding, so the end-to-end error is pure quantization error.
    """
    table = table_from_target(target, q)
    if eps_mem is None:
        eps_mem = 0.25 * q.output_quantum
    enc = build_encoder(q)
    mem = build_memorizer(table, variant, eps_mem)
    dec = build_decoder(q)
    net = compose(dec, compose(mem, enc))
    claim = 2 if variant == "relu" else 1
    width = max(q.d_in, q.d_out, claim, max(net.hidden_widths() or [1]))
    return Network(net.layers, net.final_affine, width)
