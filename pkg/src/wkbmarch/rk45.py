"""Embedded Runge-Kutta-Fehlberg 4(5) step on the untransformed equation.

The step acts directly on Y = (phi, phi') with phi'' = -a(x) phi / eps^2,
using the classical six-stage Fehlberg tableau, and returns the embedded
pair of 4th- and 5th-order results for the error controller. Near turning
points the solution is smooth and this is the method of choice; in the
oscillatory regime the controller hands over to the transformed steps.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .state import SolverError, WaveState

# Classical Fehlberg tableau.
_C = (0.0, 1.0 / 4.0, 3.0 / 8.0, 12.0 / 13.0, 1.0, 1.0 / 2.0)
_A = (
    (),
    (1.0 / 4.0,),
    (3.0 / 32.0, 9.0 / 32.0),
    (1932.0 / 2197.0, -7200.0 / 2197.0, 7296.0 / 2197.0),
    (439.0 / 216.0, -8.0, 3680.0 / 513.0, -845.0 / 4104.0),
    (-8.0 / 27.0, 2.0, -3544.0 / 2565.0, 1859.0 / 4104.0, -11.0 / 40.0),
)
_B4 = (25.0 / 216.0, 0.0, 1408.0 / 2565.0, 2197.0 / 4104.0, -1.0 / 5.0, 0.0)
_B5 = (16.0 / 135.0, 0.0, 6656.0 / 12825.0, 28561.0 / 56430.0,
       -9.0 / 50.0, 2.0 / 55.0)


@dataclass(frozen=True)
class RKPair:
    """Embedded results at x + h: 4th order and 5th order."""

    y4: WaveState
    y5: WaveState


def rkf45_step(problem, state: WaveState, h: float) -> RKPair:
    """One Fehlberg 4(5) step of size h from `state`.

    Raises SolverError on a non-finite right-hand side (overflow or an
    invalid coefficient evaluation).
    """
    if h <= 0.0:
        raise ValueError("step size must be positive")
    eps2 = problem.epsilon ** 2
    field = problem.field

    def rhs(x: float, y: np.ndarray) -> np.ndarray:
        return np.array([y[1], -field(x) * y[0] / eps2], dtype=complex)

    y0 = state.as_vector()
    x0 = state.x
    ks = []
    for i in range(6):
        yi = y0.copy()
        for j, aij in enumerate(_A[i]):
            yi += h * aij * ks[j]
        ki = rhs(x0 + _C[i] * h, yi)
        if not np.all(np.isfinite(ki.view(float))):
            raise SolverError(f"non-finite right-hand side near x={x0 + _C[i] * h}")
        ks.append(ki)
    y4 = y0 + h * sum(b * k for b, k in zip(_B4, ks))
    y5 = y0 + h * sum(b * k for b, k in zip(_B5, ks))
    x1 = x0 + h
    return RKPair(
        y4=WaveState(x1, complex(y4[0]), complex(y4[1])),
        y5=WaveState(x1, complex(y5[0]), complex(y5[1])),
    )
