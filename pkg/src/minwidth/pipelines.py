"""End-to-end pipelines tying builders, fitting and measurement together."""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from . import emd, flowmap, uoe1d
from .errors import DomainError, FitError
from .measure import error_lp, error_uniform
from .network import Affine, Network, compose
from .targets import TargetSpec


@dataclass
class FlowConfig:
    n_pieces: int = 1
    fit_budget: int = 30
    seed: int = 0
    n_samples: int = 200
    dt: float = 0.05
    alpha: float = 0.99
    eps_per_map: float = 2e-3
    fit_rmse_threshold: float = 0.05
    box_margin: float = 0.2


def _scalarize(spec: TargetSpec):
    return lambda t: float(spec(np.array([t]))[0])


def _pad_affine(d_in, d):
    w = np.zeros((d, d_in))
    w[:d_in, :] = np.eye(d_in)
    return Network((), Affine(w, np.zeros(d)), d)


def _project_affine(d, d_out):
    w = np.zeros((d_out, d))
    w[:, :d_out] = np.eye(d_out)
    return Network((), Affine(w, np.zeros(d_out)), d)


def pipeline_lp(
    spec: TargetSpec,
    eps: float,
    p: float,
    config: FlowConfig | None = None,
    route: str = "auto",
):
    """Lp approximation pipeline.

    1D-to-1D targets go through the width-1 leaky-ReLU+Abs builder by
    default; all other shapes (or ``route="flow"``) are zero-padded to
    d = max(d_in, d_out, 2) and compiled through the neural-ODE flow route
    at width d with leaky-ReLU only.  A fit that cannot reach the
    configured loss floor raises FitError rather than silently emitting a
    bad network.
    """
    config = config or FlowConfig()
    if route not in ("auto", "abs", "flow"):
        raise DomainError(f"unknown route {route!r}")
    if spec.d_in == 1 and spec.d_out == 1 and route != "flow":
        net = uoe1d.build_lp_uap_1d(_scalarize(spec), eps, p)
        report = error_lp(net, spec, spec.box, p, method="grid", n=20001)
        return net, report

    d = max(spec.d_in, spec.d_out, 2)
    rng = np.random.default_rng(config.seed)
    xs_in = rng.uniform(
        [b[0] for b in spec.box], [b[1] for b in spec.box], size=(config.n_samples, spec.d_in)
    )
    samples = []
    for x in xs_in:
        xp = np.zeros(d)
        xp[: spec.d_in] = x
        yp = np.zeros(d)
        yp[: spec.d_out] = spec(x)
        samples.append((xp, yp))
    controls, history = flowmap.fit_controls(
        samples, config.n_pieces, budget=config.fit_budget, seed=config.seed
    )
    ends = flowmap.integrate(controls, np.stack([s[0] for s in samples]), 64)
    rmse = float(
        np.sqrt(np.mean(np.sum((ends - np.stack([s[1] for s in samples])) ** 2, axis=1)))
    )
    if rmse > config.fit_rmse_threshold:
        raise FitError(
            f"flow fit stalled at endpoint RMSE {rmse:.4g} "
            f"(threshold {config.fit_rmse_threshold}); compilation not attempted"
        )

    flow_box = np.zeros((d, 2))
    for k in range(d):
        lo = spec.box[k][0] if k < spec.d_in else 0.0
        hi = spec.box[k][1] if k < spec.d_in else 0.0
        flow_box[k] = (lo - config.box_margin, hi + config.box_margin)
    dt = min(config.dt, 0.5 * flowmap.monotone_dt_ceiling(controls))
    flow_net = flowmap.compile_flow(
        controls, dt, config.alpha, flow_box, config.eps_per_map
    )
    net = compose(_project_affine(d, spec.d_out), compose(flow_net, _pad_affine(spec.d_in, d)))
    report = error_lp(net, spec, spec.box, p, method="monte_carlo", n=10000, seed=config.seed)
    return net, report


def pipeline_c(spec: TargetSpec, q: emd.QuantSpec, variant: str):
    """Uniform-norm approximation pipeline.

    1D-to-1D targets with the UOE variant use the width-1 builder directly
    (their quantized tables would have far more extrema than the window
    search can chase); everything else goes through the Floor
    encoder-memorizer-decoder at width max(d_in, d_out) for UOE and
    max(d_in, 2, d_out) for ReLU memorizers.
    """
    if spec.d_in != q.d_in or spec.d_out != q.d_out:
        raise DomainError("quantization spec does not match the target shape")
    for lo, hi in spec.box:
        if lo != 0.0 or hi != 1.0:
            raise DomainError("uniform pipeline expects targets on the unit cube")
    if spec.d_in == 1 and spec.d_out == 1 and variant == "uoe":
        eps = (spec.lipschitz or 1.0) * 2.0 ** (-q.k_in) + 2.0 ** (-q.k_out)
        net = uoe1d.build_c_uap_1d(_scalarize(spec), eps)
    else:
        net = emd.build_emd(spec, q, variant)
    report = error_uniform(net, spec, spec.box, grid_n=65 if spec.d_in > 1 else 2001)
    return net, report


def emd_error_bound(spec: TargetSpec, q: emd.QuantSpec, eps_mem: float | None = None) -> float:
    """Quantization error bound: omega(input cell radius) + output quantum."""
    if spec.lipschitz is None:
        raise DomainError("bound needs a Lipschitz constant on the target")
    if eps_mem is None:
        eps_mem = 0.25 * q.output_quantum
    in_cell = np.sqrt(q.d_in) * 2.0 ** (-q.k_in)
    out_cell = np.sqrt(q.d_out) * 2.0 ** (-q.k_out)
    return spec.lipschitz * in_cell + out_cell + eps_mem


def expected_min_width(d_in: int, d_out: int, activation_set: str) -> int:
    """Published minimum widths per activation family."""
    table = {
        "leaky_relu": max(d_in, d_out, 2),
        "leaky_relu+abs": max(d_in, d_out),
        "relu+floor": max(d_in, d_out, 2),
        "uoe+floor": max(d_in, d_out),
        "uoe": d_out,
    }
    if activation_set not in table:
        raise DomainError(f"unknown activation set {activation_set!r}")
    return table[activation_set]


def table1_width_check():
    """Emit one cheap network per activation family and audit its width.

    Returns a list of (row, emitted_width, expected_width, tags) tuples;
    every emitted width must equal the published minimum.
    """
    from .targets import corpus_by_name

    rows = []

    # leaky-ReLU via the flow route on a shear (exactly representable)
    shear = flowmap.ODEControls(
        ((1.0, np.array([[0.0, 0.3], [0.0, 0.0]]), np.eye(2), np.zeros(2)),)
    )
    net = flowmap.compile_flow(shear, 0.5, 0.9, np.array([[-0.5, 1.5], [-0.5, 1.5]]), 1e-2)
    rows.append(("leaky_relu", net.declared_width, expected_min_width(2, 2, "leaky_relu"), net.activation_tags()))

    poly = corpus_by_name("poly_1ext")
    net = uoe1d.build_lp_uap_1d(_scalarize(poly), 0.2, 1)
    rows.append(
        ("leaky_relu+abs", net.declared_width, expected_min_width(1, 1, "leaky_relu+abs"), net.activation_tags())
    )

    swap = corpus_by_name("swap")
    q2 = emd.QuantSpec(2, 2, 1, 1)
    net = emd.build_emd(swap, q2, "relu")
    rows.append(("relu+floor", net.declared_width, expected_min_width(2, 2, "relu+floor"), net.activation_tags()))

    net = emd.build_emd(swap, q2, "uoe")
    rows.append(("uoe+floor", net.declared_width, expected_min_width(2, 2, "uoe+floor"), net.activation_tags()))

    net = uoe1d.build_c_uap_curve(
        [lambda t: 0.5 + 0.4 * t, lambda t: (2.0 * t - 1.0) ** 2], 0.2
    )
    rows.append(("uoe", net.declared_width, expected_min_width(1, 2, "uoe"), net.activation_tags()))
    return rows
