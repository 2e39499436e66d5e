#!/usr/bin/env python3
"""Render the trajectory overlay emitted next to this script."""
import sys

import matplotlib
matplotlib.use("Agg")
import matplotlib.pyplot as plt
import numpy as np

csv = sys.argv[1] if len(sys.argv) > 1 else 'trajectory.csv'
data = np.genfromtxt(csv, delimiter=",", names=True, comments="#")
fig, ax = plt.subplots(figsize=(7, 4))
ax.plot(data["s"], data["fid_full"], lw=0.7, label="full system")
ax.plot(data["s"], data["fid_rwa"], lw=2.0, label="first-order effective")
ax.plot(data["s"], data["fid_aa"], ls="--", lw=1.5, label="adiabatic eigenstate")
ax.set_xlabel("reduced time s")
ax.set_ylabel("|psi_1|")
ax.legend()
fig.tight_layout()
out = csv.rsplit(".", 1)[0] + ".png"
fig.savefig(out, dpi=160)
print(out)
