import numpy as np

from teleqcp.correlators import CorrelatorSet, TwoQubitState


def random_x_form(rng):
    """Random valid X-form resource and the correlator set describing it.

    Diagonal (a, b, b, d) from a Dirichlet draw keeps the trace at 1;
    the anti-diagonal entries are drawn inside the positivity bounds
    |c| <= b and |e| <= sqrt(a d), so the state is valid by construction.
    """
    p = rng.dirichlet(np.ones(4))
    a, d = p[0], p[3]
    b = (p[1] + p[2]) / 2.0
    c = (2.0 * rng.random() - 1.0) * b
    e = (2.0 * rng.random() - 1.0) * np.sqrt(a * d)
    state = TwoQubitState.from_x_form(a, b, c, d, e)
    cors = CorrelatorSet(
        z=a - d,
        xx=2.0 * (c + e),
        yy=2.0 * (c - e),
        zz=a + d - 2.0 * b,
        kT=0.0,
        source="synthetic",
    )
    return state, cors
