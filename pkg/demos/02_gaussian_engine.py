"""The cloner output seen through the Gaussian-state engine.

Builds the two-clone covariance matrix, checks it is physical, and runs the
partial-transpose test over several decades of cloner noise.
"""

import math

import numpy as np

from twoway_qkd.cloner import gqcm_joint_cm, joint_output_state
from twoway_qkd.core_math import ComplexAmplitude
from twoway_qkd.phase_space import (
    BeamSplitter,
    beam_splitter,
    heterodyne_samples,
    partial_transpose,
    ppt_separable_two_mode,
    pt_min_symplectic_eigenvalue,
    symplectic_eigenvalues,
)

v = gqcm_joint_cm(0.5)
print("joint CM at sigma^2 = 1/2:\n", v)
print("symplectic eigenvalues:", symplectic_eigenvalues(v))
print("after partial transpose:", symplectic_eigenvalues(partial_transpose(v)), " sqrt(3)/2 =", math.sqrt(3) / 2)

grid = np.logspace(-3, 3, 13)
nus = [pt_min_symplectic_eigenvalue(gqcm_joint_cm(s)) for s in grid]
print("\nsigma^2      min PT eigenvalue")
for s, nu in zip(grid, nus):
    print(f"{s:10.4g}   {nu:.6f}")
print("separable everywhere:", all(ppt_separable_two_mode(gqcm_joint_cm(s)) for s in grid))

# Mixing the two clones on a balanced beam splitter: the shared shift ends up
# entirely in the plus port and the minus port is left in vacuum.
state = joint_output_state(ComplexAmplitude(2.0, -1.0), 0.5)
mixed = beam_splitter(state, 0, 1, BeamSplitter.balanced())
print("\nport means:", mixed.mode_mean(0), mixed.mode_mean(1))
print("port variances:", np.diag(mixed.cov))

shots = heterodyne_samples(mixed, 1, np.random.default_rng(0), 100_000)
print("minus-port heterodyne variance:", shots.var(axis=0, ddof=1))
