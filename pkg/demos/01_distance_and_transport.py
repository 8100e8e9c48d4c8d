"""
Distances and transport maps between covariance operators
=========================================================

Builds two covariance operators, measures how far apart they are, and
pushes one onto the other with an optimal transport map.
"""

import numpy as np

from funcov import SpdOperator, bw_distance, bw_distance_sq, transport_map

rng = np.random.default_rng(7)

# two covariance operators with different spectra in random frames
def random_cov(scale):
    frame, _ = np.linalg.qr(rng.standard_normal((6, 6)))
    lam = scale * rng.uniform(0.2, 1.0, size=6)
    return SpdOperator((frame * lam) @ frame.T)

a = random_cov(1.0)
b = random_cov(4.0)

print(f"dim           : {a.dim}")
print(f"trace a, b    : {a.trace:.4f}, {b.trace:.4f}")
print(f"distance(a,b) : {bw_distance(a, b):.6f}")
print(f"distance(b,a) : {bw_distance(b, a):.6f}   (symmetric)")
print(f"distance(a,a) : {bw_distance(a, a):.2e}   (zero up to roundoff)")

# the transport map is a symmetric PSD matrix; t a t recovers b
t = transport_map(a, b)
push = t.apply(a)
err = np.linalg.norm(push.entries - b.entries) / np.linalg.norm(b.entries)
print(f"\npushforward t a t vs b, relative error: {err:.2e}")

# transporting an operator onto itself is the identity
self_t = transport_map(a, a)
print(f"self-transport max |t - I|: {np.max(np.abs(self_t.entries - np.eye(6))):.2e}")

# moving along the map interpolates the covariances: the squared
# distance decomposes along the straight line of maps (I + s(t - I))
for s in (0.0, 0.5, 1.0):
    m = np.eye(6) + s * (t.entries - np.eye(6))
    between = SpdOperator(m @ a.entries @ m)
    print(f"s={s:.1f}: d^2 to a = {bw_distance_sq(a, between):8.4f}, "
          f"d^2 to b = {bw_distance_sq(between, b):8.4f}")
