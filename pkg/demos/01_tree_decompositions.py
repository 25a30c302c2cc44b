"""
Three ways to root a tree
=========================

Every layering starts from a rooted decomposition of the network. This
script builds the three available kinds on one random tree and compares
their depth and pivot size.
"""

import numpy as np

from channelflow.decomposition import build, decomposition_report, validate_decomposition
from channelflow.generate import random_tree

# A random 200-vertex tree, drawn from a uniform Pruefer sequence.
rng = np.random.default_rng(7)
net = random_tree(200, rng)

# Root-fixing keeps the original shape: one pivot per component, but the
# depth follows the tree. Balancing halves components at every level, at
# the price of larger pivot sets. The ideal kind keeps both small.
for kind in ("root_fixing", "balancing", "ideal"):
    dec = build(net, kind)
    rep = decomposition_report(dec, net)
    ok = validate_decomposition(dec, net) is None
    print(f"{kind:12s} depth={rep.depth:3d} theta={rep.theta} valid={ok}")

# The depth of the ideal kind grows with log2(n), not with the tree's own height.
for n in (16, 256, 4096):
    net = random_tree(n, rng)
    rep = decomposition_report(build(net, "ideal"), net)
    print(f"n={n:5d} ideal depth={rep.depth:3d} bound={2 * (n - 1).bit_length() + 1}")
