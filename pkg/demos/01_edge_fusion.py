"""
How the edge step pulls two neighbouring models together
=========================================================

Each link between two MEC nodes keeps its own copy of both endpoint models.
The fusion weight decides how hard the copies are pulled toward each other:
small weights leave them alone, large weights merge them at the midpoint.
"""

import numpy as np

from mectrust import z_update

a = np.array([1.0, 0.0])   # node i's model plus its dual
b = np.array([0.0, 1.0])   # node j's model plus its dual

# sweep the fusion weight; the gap shrinks linearly, then snaps shut
for lam in (0.0, 0.25, 0.5, 0.7, 1.0, 5.0):
    zi, zj = z_update(a, b, lam, rho=1.0)
    print(f"lambda={lam:4.2f}  z_ij={np.round(zi, 3)}  z_ji={np.round(zj, 3)}  gap={np.linalg.norm(zi - zj):.3f}")

# the snap happens once lambda reaches rho * |a - b| / 2
print("merge threshold:", np.linalg.norm(a - b) / 2)
