"""Sweep the rate surface over a distortion grid.

The surface is non-increasing and convex along each axis; the branch column
shows where the closed form applies and where the interior point takes over.
The same data comes out of `jointrdf sweep <source.json> --grid ...` as
plot-ready CSV.
"""

import numpy as np

from jointrdf import DistortionPair, solve, validate_source

Q = np.array(
    [
        [3.929, -0.11, 0.642, 0.976],
        [-0.11, 2.629, -0.859, 0.337],
        [0.642, -0.859, 2.142, 1.797],
        [0.976, 0.337, 1.797, 3.495],
    ]
)
src = validate_source(Q, 2, 2)

axis = np.linspace(0.3, 3.0, 7)
print("rate surface (nats), d1 down rows, d2 across columns")
print("        " + "".join(f"{b:>8.2f}" for b in axis))
branches = {}
for a in axis:
    rates = []
    for b in axis:
        report = solve(src, DistortionPair(float(a), float(b)))
        rates.append(report.rate_nats)
        branches[(round(float(a), 2), round(float(b), 2))] = report.branch.value
    print(f"{a:>8.2f}" + "".join(f"{r:>8.3f}" for r in rates))

print("\nbranch map (C = closed form, I = interior point, Z = zero rate)")
print("        " + "".join(f"{b:>8.2f}" for b in axis))
for a in axis:
    row = "".join(f"{branches[(round(float(a),2), round(float(b),2))][0]:>8}" for b in axis)
    print(f"{a:>8.2f}" + row)
