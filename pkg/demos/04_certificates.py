"""Certified impossibility below the critical width max(d_in, d_out).

Two certificates, each bounding the error of a whole function class from
below.  A first layer with fewer rows than inputs is blind along a kernel
direction, which costs L1 error against the squared norm; a last hidden
width below the output dimension traps the range inside a hyperplane,
which costs uniform error against any genuinely three-dimensional curve.
"""

import numpy as np

from minwidth import (
    affine_range_certificate,
    homeomorphism_obstruction_demo,
    null_direction_certificate,
)
from minwidth.network import Affine, Network, leaky, uniform_layer
from minwidth.targets import corpus_by_name

norm_sq = corpus_by_name("norm_squared")
box = np.asarray(norm_sq.box)
cert = null_direction_certificate(
    np.array([[1.0, 1.0]]),
    lambda x: norm_sq(x),
    box,
    ball_radius=0.1,
    lipschitz=norm_sq.lipschitz,
)
print("null-direction certificate (first layer W1 = (1, 1), one row for two inputs):")
print(f"  kernel direction {np.round(cert.witness['direction'], 4)}")
print(f"  certified L1 lower bound {cert.bound:.5f} for ANY readout of W1 x + b1")

curve = corpus_by_name("cube_edge_curve")
ts = np.linspace(0.0, 1.0, 100)
samples = np.stack([curve(np.array([t])) for t in ts])
cert2 = affine_range_certificate(2, samples, search_resolution=100)
print()
print("affine-range certificate (two features for three outputs):")
print(f"  certified uniform lower bound {cert2.bound:.4f} against the cube-edge curve")
print(f"  grid minimum {cert2.audit['grid_min']:.4f} minus covering slack {cert2.audit['slack']:.4f}")

# a homeomorphic feature map that nails |x|^2 on the unit circle must miss
# at the center: constant readout 1 is exact on the circle, off by 1 at 0
net = Network(
    (uniform_layer(np.eye(2), np.array([10.0, 10.0]), leaky(0.5)),),
    Affine(np.zeros((1, 2)), np.array([1.0])),
    2,
)
report = homeomorphism_obstruction_demo(lambda x: float(np.sum(np.asarray(x) ** 2)), net)
print()
print("homeomorphism obstruction (diagnostic, not certified):")
print(f"  error on the unit circle {report['error_on_circle']:.3f}")
print(f"  error at the center      {report['error_at_center']:.3f}")
print(f"  predicted center error at least {report['predicted_min_center_error']:.3f}")
