"""Certified approximation-error lower bounds below the critical width.

Two certificates, both sound for whole relaxed function classes rather
than single networks:

* null-direction: a network whose first layer has fewer rows than inputs
  is constant along a kernel direction v of that layer; the L1 error of
  ANY readout of W1 x + b1 is then bounded below by the integral of
  |f*(x) - f*(x + v)| over a ball.
* affine-range: a network whose last hidden width w is below the output
  dimension has range inside a w-dimensional affine subspace; the uniform
  error of ANY such map is bounded below by the distance of the target's
  range to the best such subspace.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass

import numpy as np

from .errors import DomainError, GeometryError, PreconditionError
from .network import Network

_STRICTLY_MONOTONE_TAGS = {"LeakyReLU", "Identity"}


@dataclass(frozen=True)
class Certificate:
    kind: str  # "null_direction" | "affine_range"
    bound: float
    norm: str  # "L1" | "Lp(p)" | "uniform"
    witness: dict
    audit: dict
    certified: bool = True

    def to_json(self) -> bytes:
        doc = {
            "kind": self.kind,
            "bound": self.bound,
            "norm": self.norm,
            "witness": self.witness,
            "audit": self.audit,
            "certified": self.certified,
        }
        return json.dumps(doc).encode("utf-8")


def _first_map(net: Network):
    if net.layers:
        return net.layers[0].weight, net.layers[0].bias
    return net.final_affine.weight, net.final_affine.bias


def null_direction_certificate(
    net_or_weight,
    target,
    box,
    ball_radius: float = 0.1,
    lipschitz: float | None = None,
    grid_n: int = 200,
    placement_candidates: int = 7,
) -> Certificate:
    """Certified L1 lower bound from a rank-deficient first layer.

    Any function of the form phi(W1 x + b1) is constant along unit kernel
    vectors v of W1, so its L1 distance to the target on the box is at
    least the integral of |target(x) - target(x + v)| over any radius-r
    ball A with A and A + v inside the box (and disjoint, r < 1/2).

    The integral is certified from below on a tensor grid: only cells
    fully inside the ball count, each contributing its area times
    max(0, |g(center)| - L_g * half_diagonal) with L_g = 2 * lipschitz.
    Without a Lipschitz constant the value is a plain quadrature estimate
    and the certificate is flagged as measured, not certified.
    """
    box = np.asarray(box, dtype=float)
    d = box.shape[0]
    if isinstance(net_or_weight, Network):
        w1, _ = _first_map(net_or_weight)
    else:
        w1 = np.atleast_2d(np.asarray(net_or_weight, dtype=float))
    if w1.shape[1] != d:
        raise DomainError("first layer width does not match the box dimension")
    if w1.shape[0] >= d:
        raise PreconditionError(
            "certificate does not apply: first hidden width is not below the input dimension"
        )
    if not 0.0 < ball_radius < 0.5:
        raise DomainError("ball radius must be in (0, 1/2) so A and A + v are disjoint")

    _, _, vh = np.linalg.svd(w1)
    v = vh[-1]
    v = v / np.linalg.norm(v)

    lo = np.maximum(box[:, 0], box[:, 0] - np.minimum(v, 0.0)) + ball_radius
    hi = np.minimum(box[:, 1], box[:, 1] - np.maximum(v, 0.0)) - ball_radius
    if np.any(lo > hi):
        raise GeometryError("no placement fits both balls inside the box")

    def certified_value(center, n):
        axes = [np.linspace(center[k] - ball_radius, center[k] + ball_radius, n + 1) for k in range(d)]
        mids = [0.5 * (ax[1:] + ax[:-1]) for ax in axes]
        mesh = np.stack(np.meshgrid(*mids, indexing="ij"), axis=-1).reshape(-1, d)
        cell = 2.0 * ball_radius / n
        half_diag = 0.5 * cell * math.sqrt(d)
        inside = np.linalg.norm(mesh - center, axis=1) + half_diag <= ball_radius
        pts = mesh[inside]
        if pts.size == 0:
            return 0.0
        gvals = np.abs(
            np.array([float(np.linalg.norm(target(x) - target(x + v))) for x in pts])
        )
        vol = cell**d
        if lipschitz is None:
            return float(np.sum(gvals) * vol)
        slack = 2.0 * lipschitz * half_diag
        return float(np.sum(np.maximum(gvals - slack, 0.0)) * vol)

    # deterministic placement search: coarse certified value over a small
    # candidate grid of centers, then a fine pass at the winner
    best_center, best_coarse = None, -1.0
    grids = [
        np.linspace(lo[k], hi[k], placement_candidates) if hi[k] > lo[k] else np.array([lo[k]])
        for k in range(d)
    ]
    for center in np.stack(np.meshgrid(*grids, indexing="ij"), axis=-1).reshape(-1, d):
        val = certified_value(center, 24)
        if val > best_coarse:
            best_coarse, best_center = val, center
    bound = certified_value(best_center, grid_n)

    return Certificate(
        kind="null_direction",
        bound=bound,
        norm="L1",
        witness={"direction": v.tolist(), "ball_center": best_center.tolist(), "radius": ball_radius},
        audit={
            "grid": grid_n,
            "lipschitz": lipschitz,
            "cells_rule": "inscribed cells only, integrand minus Lipschitz slack",
        },
        certified=lipschitz is not None,
    )


def _sphere_directions(resolution: int):
    """Deterministic direction grid on the half-sphere with a covering bound.

    3D: tensor grid in spherical angles; the covering radius (in chord
    distance) is at most (d_theta + d_phi) / 2.
    """
    thetas = np.linspace(0.0, 0.5 * math.pi, resolution)
    phis = np.linspace(0.0, 2.0 * math.pi, 4 * resolution, endpoint=False)
    t, p = np.meshgrid(thetas, phis, indexing="ij")
    dirs = np.stack(
        [np.sin(t) * np.cos(p), np.sin(t) * np.sin(p), np.cos(t)], axis=-1
    ).reshape(-1, 3)
    d_theta = 0.5 * math.pi / (resolution - 1)
    d_phi = 2.0 * math.pi / (4 * resolution)
    return dirs, 0.5 * (d_theta + d_phi)


def affine_range_certificate(
    net_last_width: int,
    target_samples,
    search_resolution: int = 181,
) -> Certificate:
    """Certified uniform-error lower bound from an output-deficient width.

    A map W psi(x) + b from a w-dimensional feature lies in a w-dim affine
    subspace, hence inside some hyperplane when w < d_y; so
    min over hyperplanes of max-over-samples distance lower-bounds its
    uniform error.  The hyperplane search runs over a deterministic
    direction grid and subtracts a covering-radius slack, which keeps the
    result a valid lower bound.  Supports d_y in {2, 3}.
    """
    ys = np.atleast_2d(np.asarray(target_samples, dtype=float))
    d_y = ys.shape[1]
    if net_last_width >= d_y:
        raise PreconditionError(
            "certificate does not apply: feature width is not below the output dimension"
        )
    centroid = ys.mean(axis=0)
    yc = ys - centroid
    radius = float(np.max(np.linalg.norm(yc, axis=1)))
    if radius == 0.0:
        return Certificate(
            kind="affine_range",
            bound=0.0,
            norm="uniform",
            witness={"normal": [0.0] * d_y, "offset": centroid.tolist()},
            audit={"resolution": search_resolution, "slack": 0.0},
            certified=True,
        )

    if d_y == 2:
        angles = np.linspace(0.0, math.pi, search_resolution, endpoint=False)
        dirs = np.stack([np.cos(angles), np.sin(angles)], axis=-1)
        covering = 0.5 * math.pi / search_resolution
    elif d_y == 3:
        dirs, covering = _sphere_directions(search_resolution)
    else:
        raise DomainError("hyperplane search supports output dimensions 2 and 3")

    proj = yc @ dirs.T  # (n_samples, n_dirs)
    half_width = 0.5 * (proj.max(axis=0) - proj.min(axis=0))
    k = int(np.argmin(half_width))
    grid_min = float(half_width[k])
    slack = radius * covering
    bound = max(0.0, grid_min - slack)
    normal = dirs[k]
    offset = 0.5 * float(proj[:, k].max() + proj[:, k].min())

    return Certificate(
        kind="affine_range",
        bound=bound,
        norm="uniform",
        witness={"normal": normal.tolist(), "offset": offset, "centroid": centroid.tolist()},
        audit={
            "resolution": search_resolution,
            "grid_min": grid_min,
            "slack": slack,
            "sample_radius": radius,
        },
        certified=True,
    )


def homeomorphism_obstruction_demo(target, net: Network, circle_n: int = 512) -> dict:
    """Diagnostic (not a certificate) for square strictly-monotone nets.

    For the target |x|^2 on [-2, 2]^2: a net built from strictly monotone
    activations and nonsingular square weights is a homeomorphism, so if
    its scalar readout tracks the target on the unit circle it must miss
    badly at the center.  Reports both errors; nothing is certified.
    """
    for layer in net.layers:
        if layer.weight.shape[0] != layer.weight.shape[1]:
            raise PreconditionError("demo needs square weight matrices")
        if abs(np.linalg.det(layer.weight)) < 1e-12:
            raise PreconditionError("demo needs nonsingular weight matrices")
        for act in layer.activations:
            if act.tag not in _STRICTLY_MONOTONE_TAGS:
                raise PreconditionError(
                    f"activation {act.tag} is not strictly monotone and continuous"
                )
    if net.in_width != 2:
        raise PreconditionError("demo is stated for planar inputs")

    angles = np.linspace(0.0, 2.0 * math.pi, circle_n, endpoint=False)
    circle = np.stack([np.cos(angles), np.sin(angles)], axis=-1)
    out_circle = np.array([float(np.asarray(net(x)).reshape(-1)[0]) for x in circle])
    ref_circle = np.array([float(target(x)) for x in circle])
    err_circle = float(np.max(np.abs(out_circle - ref_circle)))
    center = np.zeros(2)
    err_center = float(
        abs(float(np.asarray(net(center)).reshape(-1)[0]) - float(target(center)))
    )
    return {
        "error_on_circle": err_circle,
        "error_at_center": err_center,
        "predicted_min_center_error": max(0.0, 1.0 - err_circle),
        "consistent": err_center >= max(0.0, 1.0 - err_circle) - 1e-9,
    }
