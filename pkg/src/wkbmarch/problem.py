"""Problem definitions for eps^2 phi'' + a(x) phi = 0.

A Problem bundles the coefficient field a(x) with a derivative tower up to
order five, the semiclassical parameter, the integration interval, initial
data in the plain-derivative convention, and optional closed-form hooks
(phase antiderivative, exact solution) used by the benchmarks.
"""

from __future__ import annotations

import json
import math
from dataclasses import dataclass
from typing import Callable, Optional, Sequence

from . import reference
from .state import WaveState

# b_3 in the marching scheme chains three derivatives onto b(x), which
# already holds a''; anything deeper than a^(5) is never needed.
MAX_DERIVATIVE_ORDER = 5


class CoefficientField:
    """Real coefficient function a(x) with derivatives up to order five."""

    def __init__(self, derivatives: Callable[[float], Sequence[float]],
                 description: str = ""):
        self._derivatives = derivatives
        self.description = description

    def jet(self, x: float) -> tuple[float, ...]:
        """(a(x), a'(x), ..., a^(5)(x))."""
        vals = tuple(self._derivatives(x))
        if len(vals) != MAX_DERIVATIVE_ORDER + 1:
            raise ValueError("derivative tower must have six entries")
        return vals

    def eval(self, x: float, order: int = 0) -> float:
        if not 0 <= order <= MAX_DERIVATIVE_ORDER:
            raise ValueError(
                f"derivative order {order} outside 0..{MAX_DERIVATIVE_ORDER}")
        return self.jet(x)[order]

    def __call__(self, x: float) -> float:
        return self.jet(x)[0]


def polynomial_field(coeffs: Sequence[float],
                     description: str = "") -> CoefficientField:
    """Coefficient field for a polynomial a(x), ascending coefficients.

    The derivative tower is produced by exact polynomial differentiation.
    """
    if len(coeffs) == 0:
        raise ValueError("empty coefficient list")
    towers = [[float(c) for c in coeffs]]
    for _ in range(MAX_DERIVATIVE_ORDER):
        prev = towers[-1]
        towers.append([j * prev[j] for j in range(1, len(prev))])

    def derivs(x: float) -> list[float]:
        out = []
        for poly in towers:
            acc = 0.0
            for c in reversed(poly):
                acc = acc * x + c
            out.append(acc)
        return out

    if not description:
        description = "poly[" + ",".join(repr(float(c)) for c in coeffs) + "]"
    fld = CoefficientField(derivs, description)
    fld.coeffs = tuple(float(c) for c in coeffs)
    return fld


@dataclass(frozen=True)
class Problem:
    """Immutable description of one initial value problem."""

    epsilon: float
    field: CoefficientField
    x_start: float
    x_end: float
    initial: WaveState
    tau_guard: float = 1e-12
    # Optional closed-form antiderivative of sqrt(a) - eps^2 b.
    phase_antiderivative: Optional[Callable[[float], float]] = None
    # Optional exact-solution provider x -> WaveState.
    exact: Optional[Callable[[float], WaveState]] = None
    label: str = ""

    def __post_init__(self):
        if self.epsilon <= 0.0:
            raise ValueError("epsilon must be positive")
        if not self.x_start < self.x_end:
            raise ValueError("need x_start < x_end")
        if self.tau_guard <= 0.0:
            raise ValueError("tau_guard must be positive")

    def a(self, x: float, order: int = 0) -> float:
        return self.field.eval(x, order)


# ---------------------------------------------------------------------------
# Airy benchmark: a(x) = x
# ---------------------------------------------------------------------------

def _airy_exact_provider(epsilon: float) -> Callable[[float], WaveState]:
    scale = epsilon ** (-2.0 / 3.0)

    def exact(x: float) -> WaveState:
        quad = reference.airy_pair(x * scale)
        phi = complex(quad.ai, quad.bi)
        dphi = -scale * complex(quad.aip, quad.bip)
        return WaveState(x, phi, dphi)

    return exact


def make_airy_problem(epsilon: float, x_start: float = 0.1,
                      x_end: float = 50.0) -> Problem:
    """Linear-coefficient benchmark with the turning point at x = 0.

    Initial data is the exact solution Ai(-x/eps^(2/3)) + i Bi(-x/eps^(2/3))
    evaluated at x_start. The closed-form phase antiderivative
    (2/3) x^(3/2) - (5 eps^2 / 48) x^(-3/2) is attached for exact-phase runs.
    """
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    eps2 = epsilon * epsilon

    def phase_F(x: float) -> float:
        return (2.0 / 3.0) * x ** 1.5 - (5.0 * eps2 / 48.0) * x ** -1.5

    exact = _airy_exact_provider(epsilon)
    return Problem(
        epsilon=epsilon,
        field=polynomial_field([0.0, 1.0], "a(x) = x"),
        x_start=x_start,
        x_end=x_end,
        initial=exact(x_start),
        phase_antiderivative=phase_F,
        exact=exact,
        label="airy",
    )


# ---------------------------------------------------------------------------
# Parabolic cylinder benchmark: a(x) = -x^2/2 + x on (0, 2)
# ---------------------------------------------------------------------------

def _pcf_phase_antiderivative(epsilon: float) -> Callable[[float], float]:
    # With u = x - 1: a = (1 - u^2)/2, so
    #   int sqrt(a) dx = (u sqrt(1-u^2) + asin u) / (2 sqrt(2)),
    #   int b dx = -(5 sqrt(2)/24) u^3 (1-u^2)^(-3/2) - (sqrt(2)/4) u (1-u^2)^(-1/2).
    eps2 = epsilon * epsilon
    c1 = 5.0 * math.sqrt(2.0) / 24.0
    c2 = math.sqrt(2.0) / 4.0

    def phase_F(x: float) -> float:
        u = x - 1.0
        s = 1.0 - u * u
        if s <= 0.0:
            raise ValueError("phase antiderivative only defined inside (0, 2)")
        root = math.sqrt(s)
        lead = (u * root + math.asin(u)) / (2.0 * math.sqrt(2.0))
        corr = c1 * u ** 3 / root ** 3 + c2 * u / root
        return lead + eps2 * corr

    return phase_F


def make_pcf_problem(epsilon: float, x_start: float = 0.01,
                     x_end: float = 1.99) -> Problem:
    """Quadratic-coefficient benchmark with turning points at x = 0 and 2.

    The exact solution is kappa * U(nu, z(x)) with nu = -1/(sqrt(8) eps) and
    z(x) = 2^(1/4) (1 - x)/sqrt(eps); its derivative follows from the chain
    rule, phi' = -kappa 2^(1/4) eps^(-1/2) U'(nu, z). Values come from a
    checkpointed continuation of w'' = (z^2/4 + nu) w built once here.
    """
    if epsilon <= 0.0:
        raise ValueError("epsilon must be positive")
    if not 0.0 < x_start < x_end < 2.0:
        raise ValueError("domain must sit strictly inside (0, 2)")
    nu = -1.0 / (math.sqrt(8.0) * epsilon)
    z_scale = 2.0 ** 0.25 / math.sqrt(epsilon)

    u0, du0 = reference.pcf_origin_values(nu)
    kappa = 2.0 / complex(u0, -math.sqrt(epsilon) * 2.0 ** 0.75 * du0)
    table = reference._ContinuationTable(
        [nu, 0.0, 0.25], 0.0, (u0, du0), spacing=0.5)

    def exact(x: float) -> WaveState:
        z = z_scale * (1.0 - x)
        wh, wl, dh, dl = table.state_at(z)
        u = wh + wl
        du = dh + dl
        phi = kappa * u
        dphi = -kappa * z_scale * du
        return WaveState(x, phi, dphi)

    return Problem(
        epsilon=epsilon,
        field=polynomial_field([0.0, 1.0, -0.5], "a(x) = -x^2/2 + x"),
        x_start=x_start,
        x_end=x_end,
        initial=exact(x_start),
        phase_antiderivative=_pcf_phase_antiderivative(epsilon),
        exact=exact,
        label="pcf",
    )


# ---------------------------------------------------------------------------
# General polynomial problems
# ---------------------------------------------------------------------------

def make_polynomial_problem(coeffs: Sequence[float], epsilon: float,
                            domain: tuple[float, float],
                            initial: Optional[WaveState] = None,
                            tau_guard: float = 1e-12) -> Problem:
    """Problem with a polynomial coefficient function.

    When no initial state is given, the right-traveling scattering data
    phi = 1, eps phi' = -i sqrt(a(x_start)) is used; that requires
    a(x_start) > 0.
    """
    fld = polynomial_field(coeffs)
    x_start, x_end = float(domain[0]), float(domain[1])
    if initial is None:
        a0 = fld(x_start)
        if a0 <= 0.0:
            raise ValueError(
                "default initial data needs a(x_start) > 0; pass `initial`")
        initial = WaveState.from_scaled(
            x_start, 1.0 + 0.0j, -1j * math.sqrt(a0), epsilon)
    return Problem(
        epsilon=epsilon,
        field=fld,
        x_start=x_start,
        x_end=x_end,
        initial=initial,
        tau_guard=tau_guard,
        label="poly",
    )


def problem_from_json(spec) -> Problem:
    """Build a problem from a JSON object or string.

    Schema: {"type": "airy"|"pcf"|"poly", "epsilon": number,
             "coeffs": [..], "domain": [a, b], "initial": [re_phi, im_phi,
             re_dphi, im_dphi], "tau_guard": number}; coeffs/initial apply
    to "poly" only, domain is optional for the benchmarks.
    """
    if isinstance(spec, str):
        spec = json.loads(spec)
    kind = spec.get("type")
    epsilon = float(spec.get("epsilon", 1.0))
    domain = spec.get("domain")
    if kind == "airy":
        if domain is None:
            return make_airy_problem(epsilon)
        return make_airy_problem(epsilon, float(domain[0]), float(domain[1]))
    if kind == "pcf":
        if domain is None:
            return make_pcf_problem(epsilon)
        return make_pcf_problem(epsilon, float(domain[0]), float(domain[1]))
    if kind == "poly":
        coeffs = spec.get("coeffs")
        if not coeffs:
            raise ValueError("poly problems need a non-empty coeffs list")
        if domain is None:
            raise ValueError("poly problems need a domain")
        initial = None
        if "initial" in spec:
            re_p, im_p, re_d, im_d = (float(v) for v in spec["initial"])
            initial = WaveState(float(domain[0]), complex(re_p, im_p),
                                complex(re_d, im_d))
        return make_polynomial_problem(
            coeffs, epsilon, (float(domain[0]), float(domain[1])),
            initial=initial, tau_guard=float(spec.get("tau_guard", 1e-12)))
    raise ValueError(f"unknown problem type {kind!r}")
