"""Fresnel integrals and the aperture terms built from them.

C(w) = int_0^w cos(pi q^2 / 2) dq and S(w) = int_0^w sin(pi q^2 / 2) dq,
evaluated to ~1e-15 absolute for finite w. Infinite arguments are accepted
as-is (``math.inf``); they are not replaced by large sentinels.

Small arguments use the Maclaurin series. Larger ones use the continued
fraction for the complementary error function, evaluated bottom-up at a
fixed depth so that whole arrays go through in one pass.
"""

from __future__ import annotations

from typing import NamedTuple

import numpy as np

SPEED_OF_LIGHT = 299_792_458.0

# series/continued-fraction split; both branches are ~1e-15 here
_SERIES_LIMIT = 1.6
_SERIES_TERMS = 24
_CF_DEPTH = 48


class FresnelPair(NamedTuple):
    c: np.ndarray | float
    s: np.ndarray | float


def _check_finite_or_inf(a: np.ndarray) -> None:
    if np.isnan(a).any():
        raise ValueError("invalid argument: NaN passed to a Fresnel routine")


def _series(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    t = 0.5 * np.pi * x * x
    t2 = t * t
    c_sum = np.zeros_like(x)
    s_sum = np.zeros_like(x)
    # term_c = (-1)^n t^(2n) / (2n)!,  term_s = (-1)^n t^(2n+1) / (2n+1)!
    term_c = np.ones_like(x)
    term_s = t.copy()
    for n in range(_SERIES_TERMS):
        c_sum += term_c / (4 * n + 1)
        s_sum += term_s / (4 * n + 3)
        term_c = -term_c * t2 / ((2 * n + 1) * (2 * n + 2))
        term_s = -term_s * t2 / ((2 * n + 2) * (2 * n + 3))
    return x * c_sum, x * s_sum


def _continued_fraction(x: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    pix2 = np.pi * x * x
    b0 = 1.0 - 1j * pix2
    tail = b0 + 4.0 * _CF_DEPTH
    for i in range(_CF_DEPTH, 0, -1):
        a_i = -(2.0 * i - 1.0) * (2.0 * i)
        tail = (b0 + 4.0 * (i - 1)) + a_i / tail
    h = (x - 1j * x) / tail
    # cos/sin(pi x^2 / 2) have period 4 in x^2
    phase = 0.5 * np.pi * np.fmod(x * x, 4.0)
    cs = (0.5 + 0.5j) * (1.0 - (np.cos(phase) + 1j * np.sin(phase)) * h)
    return cs.real, cs.imag


def fresnel_cs(w):
    """Return ``FresnelPair(C(w), S(w))`` for scalar or array ``w``.

    ``w`` may contain +-inf, which map to +-0.5 exactly. NaN raises
    ``ValueError``.
    """
    scalar = np.ndim(w) == 0
    arr = np.atleast_1d(np.asarray(w, dtype=float))
    _check_finite_or_inf(arr)

    x = np.abs(arr)
    c = np.empty_like(x)
    s = np.empty_like(x)

    inf = np.isinf(x)
    small = x <= _SERIES_LIMIT
    large = ~small & ~inf

    c[inf] = 0.5
    s[inf] = 0.5
    if small.any():
        c[small], s[small] = _series(x[small])
    if large.any():
        c[large], s[large] = _continued_fraction(x[large])

    sign = np.sign(arr)
    c = c * sign
    s = s * sign
    if scalar:
        return FresnelPair(float(c[0]), float(s[0]))
    return FresnelPair(c, s)


def fr_term(w1, w2):
    """Aperture factor [C(w2) - C(w1)] - j [S(w2) - S(w1)].

    Equals 1 - j for the fully open interval (-inf, inf) and 0 for a
    zero-width one. Arrays broadcast.
    """
    c1, s1 = fresnel_cs(w1)
    c2, s2 = fresnel_cs(w2)
    return (np.subtract(c2, c1)) - 1j * (np.subtract(s2, s1))


def fresnel_arg(u, u0, f, rho):
    """Dimensionless Fresnel argument sqrt(2 f / (c rho)) * (u - u0)."""
    f_arr = np.asarray(f, dtype=float)
    rho_arr = np.asarray(rho, dtype=float)
    if np.any(f_arr <= 0) or np.any(rho_arr <= 0):
        raise ValueError("invalid geometry/frequency: f and rho must be positive")
    return np.sqrt(2.0 * f_arr / (SPEED_OF_LIGHT * rho_arr)) * (np.subtract(u, u0))
