"""Frozen constants for the O(.) bounds.

Each value was picked once by a calibration run (see
``tests/test_calibration.py``, which re-checks the target event rates) and
is not tuned per test.
"""

# Gaussian JL rows: m = ceil(C_JL / eps^2). eps=0.25 -> 128 rows.
C_JL = 8.0
# Fast JL rows: m = ceil(C_FAST_JL * ln(d) / eps^2).
C_FAST_JL = 1.0

# Leverage-score sampling: p_i = min(1, eps^-2 * u_i * C_LEV * ln(d)).
C_LEV = 2.0

# Replica framework: r = ceil(C_R * sqrt(Q) * L^2), k = ceil(C_K * L), L = max(ln(nQ), 1).
C_R = 44.0
C_K = 10.0
# Per-call private-median epsilon in the framework.
EPS_MED = 1.0

# Dynamic regression.
C_G = 1.5      # JL rows of G: ceil(C_G * eps^-2 * ln n)
C_T = 0.01     # epoch length: ceil(C_T * nnz(A) / (eps^2 K))
C_GAMMA = 1.0  # instances per epoch: ceil(C_GAMMA * sqrt(T) * ln(nT))
C_MED_REG = 120.0  # per-round median epsilon: C_MED_REG / (sqrt(T) ln(nT))

# SRHT distance estimation.
C_M_SRHT = 1.0   # blocks: ceil(C_M_SRHT * eps^-2 * ln(2 d n / eps))
C_R_SRHT = 0.14  # index-set families: ceil(C_R_SRHT * sqrt(Q) * ln^3(n d))
C_K_SRHT = 1.0   # coordinates per set: ceil(C_K_SRHT * eps^-2 * ln(2/eps) * ln(2 n d))
C_L_SRHT = 13.0  # per-query draws: ceil(C_L_SRHT * ln(n d))

# KDE sampling estimator: s = ceil(C_S * k_max * ln(1/delta) / (tau * eps^2)).
C_S = 1.0
