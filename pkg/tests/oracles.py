"""Independent reference computations used by the tests."""
import mpmath
import numpy as np


def charpoly_eigenvalues(h: np.ndarray, dps: int = 40) -> np.ndarray:
    """Roots of det(lambda I - H) for a 3x3 Hermitian H, in high precision.

    Shares no code with the library's solver (which uses LAPACK).
    """
    with mpmath.workdps(dps):
        m = mpmath.matrix([[mpmath.mpc(complex(v)) for v in row] for row in h])
        tr = m[0, 0] + m[1, 1] + m[2, 2]
        minors = (
            m[0, 0] * m[1, 1] - m[0, 1] * m[1, 0]
            + m[0, 0] * m[2, 2] - m[0, 2] * m[2, 0]
            + m[1, 1] * m[2, 2] - m[1, 2] * m[2, 1]
        )
        det = mpmath.det(m)
        roots = mpmath.polyroots([1, -tr, minors, -det], maxsteps=200, extraprec=200)
        return np.sort([float(mpmath.re(r)) for r in roots])
