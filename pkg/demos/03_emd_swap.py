"""Uniform-norm approximation by quantization: encode, memorize, decode.

Floor networks pack the quantized input coordinates into one scalar
codeword, a scalar memorizer maps input codewords to output codewords,
and a second Floor network unpacks the output bits.  Everything except
the memorizer is bit-exact, and the memorizer's error is absorbed by the
decoder's rounding, so the end-to-end error is pure quantization error.
"""

import numpy as np

from minwidth import (
    QuantSpec,
    build_emd,
    build_encoder,
    encode_reference,
    eval_batch,
    table_from_target,
)
from minwidth.emd import table_to_csv

q = QuantSpec(d_in=2, d_out=2, k_in=4, k_out=4)
swap = lambda x: np.asarray(x)[::-1]

encoder = build_encoder(q)
mismatches = 0
for cx in range(16):
    for cy in range(16):
        x = np.array([(cx + 0.5) / 16.0, (cy + 0.5) / 16.0])
        if encoder(x)[0] != encode_reference(x, q):
            mismatches += 1
print(f"encoder vs reference on all 256 cell centers: {mismatches} mismatches")

table = table_from_target(swap, q)
print("first rows of the codeword table (hex floats for exactness):")
for line in table_to_csv(table).splitlines()[:5]:
    print("  " + line)

net = build_emd(swap, q, variant="uoe")
g = np.linspace(0.0, 1.0, 65)
pts = np.array([[a, b] for a in g for b in g])
err = float(np.max(np.linalg.norm(eval_batch(net, pts) - pts[:, ::-1], axis=1)))
bound = np.sqrt(2.0) / 16.0 + np.sqrt(2.0) / 16.0 + 0.25 * q.output_quantum
print()
print(
    f"swap target end to end: width {net.declared_width}, depth {net.depth}, "
    f"activations {sorted(net.activation_tags())}"
)
print(f"uniform error on a 65x65 grid: {err:.4f}  (quantization bound {bound:.4f})")
