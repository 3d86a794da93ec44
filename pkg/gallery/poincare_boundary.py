"""
Decision boundaries on the Poincare disk
========================================

A separator ``w`` cuts the hyperboloid along a geodesic. After stereographic
projection the geodesic is either a circle arc orthogonal to the unit circle
or a diameter. This script trains a one-vs-rest model and prints both the
boundary geometry and a few projected points.
"""

# %%
import numpy as np

from hsvm_relax.data import gen_gaussian
from hsvm_relax.manifold import boundary_to_poincare, stereographic
from hsvm_relax.multiclass import predict, train
from hsvm_relax.train import TrainConfig

ds = gen_gaussian(3, 0.5, 20, 2, seed=4)
model = train(ds, "sdp", TrainConfig(C=1.0), scheme="ovr")

# %%
# Circle boundaries have their center outside the disk and meet the unit
# circle at right angles: |c|^2 = 1 + r^2.
for k, w in zip(model.classes, model.separators):
    b = boundary_to_poincare(w)
    if hasattr(b, "radius"):
        c = np.asarray(b.center)
        print(f"class {k}: circle c = {np.round(c, 3)}, r = {b.radius:.3f}, "
              f"|c|^2 - r^2 = {c @ c - b.radius ** 2:.6f}")
    else:
        print(f"class {k}: diameter with normal {np.round(b.normal, 3)}")

# %%
# Every projected point lies inside the unit disk.
P = stereographic(ds.points)
print("max |p| =", np.linalg.norm(P, axis=1).max())
print("train accuracy =", np.mean(predict(model, ds.points) == ds.labels))
