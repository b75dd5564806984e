"""Self-contained special-function layer and error metrics.

Everything the benchmarks need to produce reference values lives here, with
no external special-function dependency:

* a real gamma function (Lanczos approximation plus reflection),
* oscillatory-side Airy values through a hybrid evaluator: Taylor-series
  analytic continuation of the Airy ODE for moderate arguments, classical
  large-argument asymptotic expansions beyond,
* parabolic cylinder values U(nu, z) by continuation of w'' = (z^2/4 + nu) w,
* global error norms over a trajectory and the transmission map that turns
  an initial-value solution into the scattering-normalized wave.

The Taylor continuation doubles as the independent cross-check for the
asymptotic expansions: both routes must reproduce the same values where
their ranges overlap.
"""

from __future__ import annotations

import math
from dataclasses import dataclass
from typing import Iterable, Sequence

import numpy as np

from .state import ContinuationError, WaveState

SQRT_PI = math.sqrt(math.pi)

# Hybrid evaluator switch points, in the (positive) oscillatory argument t
# of Ai(-t): values switch later than derivatives.
AIRY_VALUE_SWITCH = 500.0
AIRY_DERIV_SWITCH = 400.0
AIRY_ASYM_TERMS = 3

# ---------------------------------------------------------------------------
# double-double helpers
# ---------------------------------------------------------------------------
# The continuation marches through tens of thousands of oscillations; a plain
# float64 state loses ~eps of phase per radian, which is fatal for the large
# arguments the benchmarks reach. The series recurrence is linear with REAL
# polynomial coefficients, so every operation below acts componentwise on the
# real and imaginary parts; the error-free transformations therefore remain
# valid when the state is complex (two solution channels packed into one).

_SPLIT = 134217729.0  # 2**27 + 1


def _two_sum(a, b):
    s = a + b
    z = s - a
    return s, (a - (s - z)) + (b - z)


def _two_prod(a, b):
    p = a * b
    ca = _SPLIT * a
    ahi = ca - (ca - a)
    alo = a - ahi
    cb = _SPLIT * b
    bhi = cb - (cb - b)
    blo = b - bhi
    return p, ((ahi * bhi - p) + ahi * blo + alo * bhi) + alo * blo


def _dd_add(xh, xl, yh, yl):
    s, e = _two_sum(xh, yh)
    e = e + (xl + yl)
    return _two_sum(s, e)


def _dd_mul_d(xh, xl, b):
    """(xh + xl) * b with b a plain float (or duck-typed exact scalar)."""
    p, e = _two_prod(xh, b)
    e = e + xl * b
    return _two_sum(p, e)


def _dd_mul_dd(xh, xl, yh, yl):
    p, e = _two_prod(xh, yh)
    e = e + (xh * yl + xl * yh)
    return _two_sum(p, e)


def _dd_recip_int(k: int):
    """Double-double reciprocal of a positive integer."""
    rh = 1.0 / k
    p, e = _two_prod(rh, float(k))
    rl = ((1.0 - p) - e) / k
    return rh, rl


_TWO_PI_HI = 6.283185307179586
_TWO_PI_LO = 2.4492935982947064e-16
_TWO_THIRDS_HI = 2.0 / 3.0
_TWO_THIRDS_LO = ((2.0 - _two_prod(3.0, _TWO_THIRDS_HI)[0])
                  - _two_prod(3.0, _TWO_THIRDS_HI)[1]) / 3.0


def _dd_sqrt(x: float):
    """Double-double square root of a positive float."""
    sh = math.sqrt(x)
    p, e = _two_prod(sh, sh)
    sl = ((x - p) - e) / (2.0 * sh)
    return sh, sl


def _reduce_mod_2pi(xh: float, xl: float) -> float:
    """(xh + xl) mod 2*pi, returned as a plain float in [-pi, pi]."""
    n = round(xh / _TWO_PI_HI)
    if n != 0:
        ph, pe = _two_prod(float(n), _TWO_PI_HI)
        xh, xl = _dd_add(xh, xl, -ph, -(pe + n * _TWO_PI_LO))
    return xh + xl


# ---------------------------------------------------------------------------
# gamma function
# ---------------------------------------------------------------------------

# Lanczos coefficients, g = 7, n = 9 (double precision classic set).
_LANCZOS_G = 7.0
_LANCZOS_COEFFS = (
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
)


def gamma_fn(x: float) -> float:
    """Real gamma function.

    Lanczos approximation for x >= 0.5, reflection formula below. Accurate
    to about 1e-13 relative on the ranges the benchmarks touch.

    Raises
    ------
    ValueError
        At the poles (non-positive integers).
    """
    if x <= 0.0 and x == math.floor(x):
        raise ValueError(f"gamma pole at x={x}")
    if x < 0.5:
        # Gamma(x) Gamma(1-x) = pi / sin(pi x)
        return math.pi / (math.sin(math.pi * x) * gamma_fn(1.0 - x))
    x -= 1.0
    acc = _LANCZOS_COEFFS[0]
    for i, c in enumerate(_LANCZOS_COEFFS[1:], start=1):
        acc += c / (x + i)
    t = x + _LANCZOS_G + 0.5
    return math.sqrt(2.0 * math.pi) * t ** (x + 0.5) * math.exp(-t) * acc


# ---------------------------------------------------------------------------
# Taylor continuation for w'' = q(x) w with polynomial q
# ---------------------------------------------------------------------------

def _series_phase_cap(terms: int) -> float:
    """Largest per-substep phase sqrt(|q|)*h whose order-`terms` series tail
    stays below 1e-24 (bisection on phi**terms / terms! = 1e-24; the eight
    extra decades over the 1e-16 certificate absorb envelope slop near
    turning points, where the coefficient decay is not a clean power)."""
    log_fact = math.lgamma(terms + 1)
    lo, hi = 0.5, float(terms)
    for _ in range(60):
        mid = 0.5 * (lo + hi)
        if terms * math.log(mid) - log_fact <= math.log(1e-24):
            lo = mid
        else:
            hi = mid
    return lo


def _dd_shift_poly(coeffs: Sequence[float], x0: float):
    """Double-double coefficients of q(x0 + t), from real coefficients of q."""
    hi = [float(c) for c in coeffs]
    lo = [0.0] * len(hi)
    n = len(hi)
    for i in range(n - 1):
        for j in range(n - 2, i - 1, -1):
            ph, pl = _dd_mul_d(hi[j + 1], lo[j + 1], x0)
            hi[j], lo[j] = _dd_add(hi[j], lo[j], ph, pl)
    return hi, lo


def _dd_taylor_step(qhi, qlo, wh, wl, dh, dl, h: float, terms: int):
    """One double-double series step of length h for w'' = q(x0 + t) w.

    The state may be float or complex (componentwise error-free transforms
    stay exact because the multipliers q_j and h are real). Returns the new
    state plus tail/bulk magnitudes for the convergence certificate.
    """
    chi = [wh, dh]
    clo = [wl, dl]
    deg = len(qhi) - 1
    for m in range(terms - 2):
        sh = qhi[0] * 0.0  # zero of the state's dtype
        sl = sh
        for j in range(min(deg, m) + 1):
            ph, pl = _dd_mul_dd(chi[m - j], clo[m - j], qhi[j], qlo[j])
            sh, sl = _dd_add(sh, sl, ph, pl)
        rh, rl = _dd_recip_int((m + 1) * (m + 2))
        sh, sl = _dd_mul_dd(sh, sl, rh, rl)
        chi.append(sh)
        clo.append(sl)
    # Horner evaluation of the series and its h-derivative.
    n = len(chi)
    vh = chi[0] * 0.0
    vl = vh
    gh = vh
    gl = vh
    for m in range(n - 1, 0, -1):
        vh, vl = _dd_mul_d(vh, vl, h)
        vh, vl = _dd_add(vh, vl, chi[m], clo[m])
        gh, gl = _dd_mul_d(gh, gl, h)
        th, tl = _dd_mul_d(chi[m], clo[m], float(m))
        gh, gl = _dd_add(gh, gl, th, tl)
    vh, vl = _dd_mul_d(vh, vl, h)
    vh, vl = _dd_add(vh, vl, chi[0], clo[0])
    # Convergence certificate magnitudes.
    bulk = 0.0
    hpow = 1.0
    prev_mag = 0.0
    last_mag = 0.0
    for m in range(n):
        mag = abs(chi[m]) * hpow
        bulk += mag
        prev_mag, last_mag = last_mag, mag
        hpow *= abs(h)
    return vh, vl, gh, gl, last_mag + prev_mag, bulk


def _dd_march(q_coeffs, x0: float, state, x1: float,
              step: float = 1.0, terms: int = 30):
    """March the double-double state (wh, wl, dh, dl) of w'' = q(x) w from
    x0 to x1. Substeps shrink where |q| is large so the truncated series
    stays certified; every substep checks the tail against 1e-16 of the
    term-magnitude sum."""
    x = float(x0)
    wh, wl, dh, dl = state
    direction = 1.0 if x1 >= x0 else -1.0
    phase_cap = _series_phase_cap(terms)
    qpoly = [float(c) for c in q_coeffs]
    while x != x1:
        qhi, qlo = _dd_shift_poly(qpoly, x)
        # Coefficient-magnitude sum bounds |q| on the unit neighbourhood.
        qmag = sum(abs(qc) for qc in qhi)
        h_max = min(step, phase_cap / math.sqrt(1.0 + qmag))
        if abs(x1 - x) <= h_max:
            h = x1 - x
            x_next = x1
        else:
            # Keep substep endpoints exactly representable.
            x_next = x + direction * h_max
            h = x_next - x
        wh, wl, dh, dl, tail, bulk = _dd_taylor_step(
            qhi, qlo, wh, wl, dh, dl, h, terms)
        if bulk > 0.0 and tail > 1e-16 * bulk:
            raise ContinuationError(
                f"series tail {tail:.2e} above 1e-16 of partial sum at x={x}")
        x = x_next
    return wh, wl, dh, dl


def taylor_continuation(q_coeffs: Sequence[float], x0: float, w0, dw0,
                        x1: float, step: float = 1.0, terms: int = 30):
    """Continue the solution of w'' = q(x) w from x0 to x1.

    Parameters
    ----------
    q_coeffs : sequence of float
        Real polynomial coefficients of q, ascending powers.
    x0, x1 : float
        Start and target points.
    w0, dw0 : float or complex
        Initial value and derivative at x0.
    step : float
        Maximum substep length (<= 1). Substeps shrink automatically where
        |q| is large so the truncated series stays converged.
    terms : int
        Series length per substep (>= 25).

    Returns
    -------
    (w, dw) at x1.

    Raises
    ------
    ContinuationError
        If the series tail fails the convergence certificate.

    Notes
    -----
    The state is carried in compensated (double-double) arithmetic, so the
    accumulated phase stays accurate to roughly one float64 ulp even after
    tens of thousands of oscillations.
    """
    if step > 1.0 or step <= 0.0:
        raise ValueError("step must lie in (0, 1]")
    if terms < 25:
        raise ValueError("need at least 25 series terms")
    zero = w0 * 0.0
    wh, wl, dh, dl = _dd_march(q_coeffs, x0, (w0, zero, dw0, zero), x1,
                               step=step, terms=terms)
    return wh + wl, dh + dl


class _ContinuationTable:
    """Lazily extended double-double checkpoints of w'' = q w.

    Checkpoints sit on a uniform grid around x0 and are only appended, never
    mutated, so concurrent readers at worst redo one unit of work.
    """

    def __init__(self, q_coeffs, x0: float, state, spacing: float = 1.0,
                 terms: int = 30):
        self.q = [float(c) for c in q_coeffs]
        self.x0 = float(x0)
        self.spacing = float(spacing)
        self.terms = terms
        zero = state[0] * 0.0
        seed = (state[0], zero, state[1], zero)
        self._up = [seed]    # states at x0 + k*spacing
        self._down = [seed]  # states at x0 - k*spacing
    def _grid(self, k: int) -> float:
        return self.x0 + k * self.spacing

    def state_at(self, x: float):
        """Double-double state at x, resumed from the nearest checkpoint."""
        k = int(math.floor((x - self.x0) / self.spacing)) if x >= self.x0 \
            else -int(math.floor((self.x0 - x) / self.spacing))
        side = self._up if k >= 0 else self._down
        idx = abs(k)
        while len(side) <= idx:
            j = len(side) - 1
            sign = 1 if side is self._up else -1
            grown = _dd_march(self.q, self._grid(sign * j), side[j],
                              self._grid(sign * (j + 1)), terms=self.terms)
            side.append(grown)
        state = side[idx]
        anchor = self._grid(k)
        if x != anchor:
            state = _dd_march(self.q, anchor, state, x, terms=self.terms)
        return state


# ---------------------------------------------------------------------------
# Airy functions on the oscillatory side
# ---------------------------------------------------------------------------

@dataclass(frozen=True)
class AiryQuad:
    """Ai, Ai', Bi, Bi' evaluated at argument -t (t >= 0)."""

    ai: float
    aip: float
    bi: float
    bip: float

    def wronskian(self) -> float:
        return self.ai * self.bip - self.aip * self.bi


def airy_origin_values() -> AiryQuad:
    """Exact values of Ai, Ai', Bi, Bi' at the origin."""
    g13 = gamma_fn(1.0 / 3.0)
    g23 = gamma_fn(2.0 / 3.0)
    return AiryQuad(
        ai=3.0 ** (-2.0 / 3.0) / g23,
        aip=-(3.0 ** (-1.0 / 3.0)) / g13,
        bi=3.0 ** (-1.0 / 6.0) / g23,
        bip=3.0 ** (1.0 / 6.0) / g13,
    )


_UV_CACHE: list[tuple[float, float]] = [(1.0, 1.0)]


def asymptotic_coeffs(k: int) -> tuple[float, float]:
    """Coefficients (u_k, v_k) of the large-argument Airy expansions."""
    if k < 0:
        raise ValueError("k must be >= 0")
    while len(_UV_CACHE) <= k:
        j = len(_UV_CACHE)
        u_prev = _UV_CACHE[-1][0]
        u = u_prev * (6 * j - 5) * (6 * j - 3) * (6 * j - 1) / ((2 * j - 1) * 216 * j)
        v = u * (6 * j + 1) / (1 - 6 * j)
        _UV_CACHE.append((u, v))
    return _UV_CACHE[k]


def airy_asymptotic(t: float, terms: int = AIRY_ASYM_TERMS) -> AiryQuad:
    """Large-argument expansion of the Airy quad at -t, truncated after
    index `terms` in each of the paired cosine and sine sums.

    The phase zeta = (2/3) t^(3/2) is formed and reduced modulo 2*pi in
    compensated arithmetic, so the only irreducible error left is the
    quantization of t itself.
    """
    if t <= 0.0:
        raise ValueError("asymptotic branch needs t > 0")
    # zeta in double-double: t * sqrt(t) * 2/3.
    sh, sl = _dd_sqrt(t)
    zh, zl = _dd_mul_d(sh, sl, t)
    zh, zl = _dd_mul_dd(zh, zl, _TWO_THIRDS_HI, _TWO_THIRDS_LO)
    zeta = zh + zl
    arg = _reduce_mod_2pi(zh, zl) - 0.25 * math.pi
    cosz = math.cos(arg)
    sinz = math.sin(arg)
    even_u = odd_u = even_v = odd_v = 0.0
    for k in range(terms + 1):
        sign = -1.0 if k % 2 else 1.0
        u2k, v2k = asymptotic_coeffs(2 * k)
        u2k1, v2k1 = asymptotic_coeffs(2 * k + 1)
        even_u += sign * u2k / zeta ** (2 * k)
        odd_u += sign * u2k1 / zeta ** (2 * k + 1)
        even_v += sign * v2k / zeta ** (2 * k)
        odd_v += sign * v2k1 / zeta ** (2 * k + 1)
    amp = 1.0 / (SQRT_PI * t ** 0.25)
    damp = t ** 0.25 / SQRT_PI
    return AiryQuad(
        ai=amp * (cosz * even_u + sinz * odd_u),
        aip=damp * (sinz * even_v - cosz * odd_v),
        bi=amp * (-sinz * even_u + cosz * odd_u),
        bip=damp * (cosz * even_v + sinz * odd_v),
    )


# Continuation checkpoints in the Airy variable y = -t at unit spacing. Both
# real solutions ride in one complex channel, w = Ai + i Bi, which is valid
# because the series recurrence is linear with real coefficients.
_AIRY_TABLE: list[_ContinuationTable] = []


def _airy_continued(t: float) -> AiryQuad:
    """Airy quad at -t by checkpointed continuation of w'' = y w."""
    if not _AIRY_TABLE:
        q0 = airy_origin_values()
        _AIRY_TABLE.append(_ContinuationTable(
            [0.0, 1.0], 0.0,
            (complex(q0.ai, q0.bi), complex(q0.aip, q0.bip))))
    wh, wl, dh, dl = _AIRY_TABLE[0].state_at(-t)
    w = wh + wl
    dw = dh + dl
    return AiryQuad(ai=w.real, aip=dw.real, bi=w.imag, bip=dw.imag)


def airy_pair(t: float) -> AiryQuad:
    """Hybrid Airy quad at -t: continuation for moderate t, asymptotics
    beyond (values switch at 500, derivatives at 400)."""
    if t < 0.0:
        raise ValueError("only the oscillatory side t >= 0 is supported")
    need_cont = t <= AIRY_VALUE_SWITCH
    need_asym = t > AIRY_DERIV_SWITCH
    cont = _airy_continued(t) if need_cont else None
    asym = airy_asymptotic(t) if need_asym else None
    values = cont if t <= AIRY_VALUE_SWITCH else asym
    derivs = cont if t <= AIRY_DERIV_SWITCH else asym
    return AiryQuad(ai=values.ai, bi=values.bi, aip=derivs.aip, bip=derivs.bip)


# ---------------------------------------------------------------------------
# Parabolic cylinder function U(nu, z)
# ---------------------------------------------------------------------------

def pcf_origin_values(nu: float) -> tuple[float, float]:
    """Closed-form (U(nu, 0), U'(nu, 0))."""
    u0 = SQRT_PI / (2.0 ** (0.5 * nu + 0.25) * gamma_fn(0.75 + 0.5 * nu))
    du0 = -SQRT_PI / (2.0 ** (0.5 * nu - 0.25) * gamma_fn(0.25 + 0.5 * nu))
    return u0, du0


def pcf_U(nu: float, z: float) -> tuple[float, float]:
    """Parabolic cylinder pair (U(nu, z), U'(nu, z)).

    Continuation of w'' = (z^2/4 + nu) w from the closed-form origin values.
    Intended for the oscillatory span of the quadratic benchmark; very large
    |nu| runs into gamma overflow at the origin and raises OverflowError.
    """
    u0, du0 = pcf_origin_values(nu)
    if z == 0.0:
        return u0, du0
    return taylor_continuation([nu, 0.0, 0.25], 0.0, u0, du0, z)


# ---------------------------------------------------------------------------
# Error metrics and the transmission map
# ---------------------------------------------------------------------------

def exact_solution(problem, x: float) -> WaveState:
    """Exact (phi, phi') of a benchmark problem at x."""
    if problem.exact is None:
        raise ValueError("problem has no exact-solution provider")
    return problem.exact(x)


def _iter_states(trajectory_or_states) -> Iterable[WaveState]:
    states = getattr(trajectory_or_states, "states", trajectory_or_states)
    return list(states)


def global_error(trajectory, problem, norm: str = "sup",
                 return_details: bool = False):
    """Global error of an accepted trajectory against the exact solution.

    norm="sup":   max over nodes of |phi_n - phi(x_n)| / |phi(x_n)|,
                  skipping nodes where the exact value vanishes.
    norm="l2rel": ||phi_n - phi(x_n)||_2 / ||phi(x_n)||_2 over the nodes.
    """
    states = _iter_states(trajectory)
    if not states:
        raise ValueError("empty trajectory")
    if norm == "sup":
        worst = 0.0
        skipped = 0
        for s in states:
            ref = exact_solution(problem, s.x).phi
            if ref == 0:
                skipped += 1
                continue
            worst = max(worst, abs(s.phi - ref) / abs(ref))
        return (worst, skipped) if return_details else worst
    if norm == "l2rel":
        num = np.array([s.phi for s in states])
        ref = np.array([exact_solution(problem, s.x).phi for s in states])
        denom = np.linalg.norm(ref)
        if denom == 0.0:
            raise ValueError("exact solution vanishes on all nodes")
        err = float(np.linalg.norm(num - ref) / denom)
        return (err, 0) if return_details else err
    raise ValueError(f"unknown norm {norm!r}")


def transmission_map(states, k1: float) -> np.ndarray:
    """Scattering-normalized wave from an initial-value trajectory.

    Rescales phi so that the outgoing boundary row at x = 1 holds:
    psi(x) = -2i k1 / (phi'(1) - i k1 phi(1)) * phi(x). The trajectory must
    contain a node at x = 1 (clamped runs on [x0, 1] end there).
    """
    if k1 <= 0.0:
        raise ValueError("k1 must be positive")
    states = _iter_states(states)
    at_one = [s for s in states if abs(s.x - 1.0) <= 1e-12]
    if not at_one:
        raise ValueError("trajectory has no node at x = 1")
    end = at_one[-1]
    denom = end.dphi - 1j * k1 * end.phi
    if abs(denom) < 1e-300:
        raise ValueError("vanishing transmission denominator")
    scale = -2j * k1 / denom
    return np.array([scale * s.phi for s in states], dtype=complex)
