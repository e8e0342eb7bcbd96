"""Exact conjugate posterior update for Gaussian prior + Gaussian rewards.

One observation of reward r on arm a (indicator vector e_a) updates the
belief by a rank-1 precision increment:

    S_new = (S^-1 + e_a e_a' / sd^2)^-1
    mu_new = S_new (S^-1 mu + e_a r / sd^2)

The covariance is re-symmetrized after every update to bound drift over long
horizons.
"""

from __future__ import annotations

import numpy as np

from .errors import NumericError
from .gaussian import GaussianBelief, _with_cached_precision


def update(
    belief: GaussianBelief, arm: int, reward: float, noise_sd: float
) -> GaussianBelief:
    """Posterior after observing one reward on one arm.

    Evaluated in the Sherman-Morrison (scalar Kalman) form, which is
    algebraically identical to inverting the rank-1-updated precision but
    costs O(k^2): with u = S e_a and g = S_aa + sd^2,

        mu'  = mu + u (r - mu_a) / g
        S'   = S - u u' / g

    The precision is maintained by the exact rank-1 increment and cached on
    the result, so chains of updates never invert a matrix (the chain head
    still computes one inverse, which also enforces the PD precondition).
    """
    k = belief.n_arms
    if not 0 <= arm < k:
        raise ValueError(f"arm {arm} out of range for {k} arms")
    if not noise_sd > 0.0:
        raise ValueError("noise_sd must be positive")
    precision = belief.precision.copy()  # raises NumericError on singular input
    precision[arm, arm] += 1.0 / noise_sd**2
    u = belief.cov[:, arm]
    gain = float(belief.cov[arm, arm]) + noise_sd**2
    if not gain > 0.0:
        raise NumericError("posterior innovation variance is not positive")
    cov = belief.cov - np.outer(u, u / gain)
    cov = (cov + cov.T) / 2.0
    mean = belief.mean + u * ((reward - belief.mean[arm]) / gain)
    return _with_cached_precision(mean, cov, precision)
