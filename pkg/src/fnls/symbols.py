"""Scalar symbol functions: dispersion, weights, resonance, remainder,
and the dyadic interaction classifier.

All functions accept scalars or numpy arrays and are pure.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .errors import ValidationError

SUM_ZERO_RTOL = 1e-9


def _check_alpha(alpha: float, allow_two: bool = True) -> float:
    alpha = float(alpha)
    hi_ok = alpha <= 2.0 if allow_two else alpha < 2.0
    if not (1.0 < alpha and hi_ok):
        rng = "(1, 2]" if allow_two else "(1, 2)"
        raise ValidationError(f"alpha must lie in {rng}, got {alpha}")
    return alpha


def dispersion_symbol(alpha: float, xi):
    """|xi|^alpha, the Fourier symbol of the fractional Laplacian.

    alpha = 2 is admitted as the classical Schrodinger reference limit.
    """
    alpha = _check_alpha(alpha, allow_two=True)
    return np.abs(xi) ** alpha


def sobolev_weight(s: float, xi):
    """(1 + xi^2)^(s/2), the H^s multiplier."""
    return (1.0 + np.asarray(xi, dtype=float) ** 2) ** (s / 2.0)


def bracket(x):
    """1 + |x|, the Japanese bracket used in the space-time weights."""
    return 1.0 + np.abs(x)


def resonance(alpha: float, xi1, xi2, xi3):
    """Resonance of a sum-zero triple: |xi1|^a - |xi2|^a + |xi3|^a."""
    alpha = _check_alpha(alpha, allow_two=True)
    xi1 = np.asarray(xi1, dtype=float)
    xi2 = np.asarray(xi2, dtype=float)
    xi3 = np.asarray(xi3, dtype=float)
    scale = np.maximum(
        1.0, np.maximum(np.abs(xi1), np.maximum(np.abs(xi2), np.abs(xi3)))
    )
    bad = np.abs(xi1 + xi2 + xi3) > SUM_ZERO_RTOL * scale
    if np.any(bad):
        raise ValidationError("frequencies must sum to zero")
    out = np.abs(xi1) ** alpha - np.abs(xi2) ** alpha + np.abs(xi3) ** alpha
    return out if out.ndim else float(out)


def envelope_scale(alpha: float, n_carrier: float) -> float:
    """Width ratio beta = (alpha(alpha-1)/2 * N^(alpha-2))^(1/2) of the
    wavepacket frame: y = (x + group_velocity*t) / beta."""
    alpha = _check_alpha(alpha, allow_two=True)
    return float(np.sqrt(0.5 * alpha * (alpha - 1.0) * n_carrier ** (alpha - 2.0)))


def group_velocity(alpha: float, n_carrier: float) -> float:
    """Speed alpha*N^(alpha-1) at which a carrier-N packet translates."""
    alpha = _check_alpha(alpha, allow_two=True)
    return float(alpha * n_carrier ** (alpha - 1.0))


# Beyond this value of |z| = |xi| / (beta*N) the binomial series for
# |1+z|^alpha is abandoned for the literal formula; the three cancelling
# leading terms are then only ~1e-2 of the total, so the literal evaluation
# keeps ~14 digits.
_SERIES_Z_MAX = 0.5
_SERIES_TERMS = 80


def _binomial_tail(alpha: float, z: np.ndarray) -> np.ndarray:
    """sum_{m>=3} C(alpha, m) z^m for |z| <= _SERIES_Z_MAX, to machine precision."""
    coeff = alpha * (alpha - 1.0) * (alpha - 2.0) / 6.0  # C(alpha, 3)
    term = coeff * z**3
    total = term.copy()
    zpow = z**3
    for m in range(4, _SERIES_TERMS):
        coeff *= (alpha - m + 1.0) / m
        zpow = zpow * z
        term = coeff * zpow
        total += term
        if np.all(np.abs(term) <= 1e-18 * np.maximum(np.abs(total), 1e-300)):
            break
    return total


def remainder_symbol(alpha: float, n_carrier: float, xi):
    """Cubic-and-higher remainder of the dispersion symbol expanded at N.

    R(xi) = |xi/(beta*N) + 1|^alpha * N^alpha - N^alpha
            - alpha*N^(alpha-1)/beta * xi - xi^2,
    with beta = (alpha(alpha-1)/2 * N^(alpha-2))^(1/2).  The subtracted terms
    are exactly the second-order Taylor polynomial, so R = R'(0) = R''(0) = 0
    and naive evaluation cancels catastrophically for |xi| << beta*N; there
    the equivalent binomial tail N^alpha * sum_{m>=3} C(alpha,m) z^m,
    z = xi/(beta*N), is used instead.
    """
    alpha = _check_alpha(alpha, allow_two=False)
    n_carrier = float(n_carrier)
    if n_carrier < 4.0:
        raise ValidationError(f"carrier frequency must be >= 4, got {n_carrier}")
    xi_arr = np.asarray(xi, dtype=float)
    scalar = xi_arr.ndim == 0
    beta_n = np.sqrt(0.5 * alpha * (alpha - 1.0)) * n_carrier ** (alpha / 2.0)
    z = np.atleast_1d(xi_arr / beta_n)
    n_a = n_carrier**alpha

    out = np.empty_like(z)
    small = np.abs(z) <= _SERIES_Z_MAX
    if np.any(small):
        out[small] = n_a * _binomial_tail(alpha, z[small])
    if np.any(~small):
        zl = z[~small]
        out[~small] = n_a * (np.abs(1.0 + zl) ** alpha - 1.0 - alpha * zl) - (
            zl * beta_n
        ) ** 2
    return float(out[0]) if scalar else out.reshape(xi_arr.shape)


def remainder_bound_constant(alpha: float) -> float:
    """Explicit constant c1 with |R(xi)| <= c1 N^(-alpha/2) |xi|^3.

    c1 = max(8*alpha*(alpha(alpha-1)/2)^(-3/2),
             2^(4-alpha)/6 * (2-alpha) * (alpha(alpha-1)/2)^(-1/2)).
    """
    alpha = _check_alpha(alpha, allow_two=False)
    half_prod = 0.5 * alpha * (alpha - 1.0)
    return float(
        max(
            8.0 * alpha * half_prod ** (-1.5),
            (2.0 ** (4.0 - alpha) / 6.0) * (2.0 - alpha) * half_prod ** (-0.5),
        )
    )


def dyadic_shell(m) -> np.ndarray:
    """Round a magnitude to its dyadic shell 2^round(log2(max(m, 1))).

    Shells below 1 collapse to 1, mirroring the unit-time-average restriction
    to modulations of size at least one.
    """
    m = np.maximum(np.abs(np.asarray(m, dtype=float)), 1.0)
    return 2.0 ** np.round(np.log2(m))


# "comparable" for dyadic shells: within this multiplicative factor
DYADIC_COMPARABLE = 4.0


@dataclass(frozen=True)
class DyadicClass:
    """Dyadic shells of one frequency/modulation triple and its admissibility."""

    n1: float
    n2: float
    n3: float
    h: float
    l1: float
    l2: float
    l3: float
    admissible: bool

    @property
    def n_sorted(self):
        return tuple(sorted((self.n1, self.n2, self.n3), reverse=True))

    @property
    def l_sorted(self):
        return tuple(sorted((self.l1, self.l2, self.l3), reverse=True))


def shells_admissible(n1, n2, n3, h, l1, l2, l3) -> bool:
    """Support constraint on dyadic shells: N_max ~ N_med and
    L_max ~ max(H, L_med), both within DYADIC_COMPARABLE."""
    n_max, n_med, _ = sorted((n1, n2, n3), reverse=True)
    l_max, l_med, _ = sorted((l1, l2, l3), reverse=True)
    rhs = max(h, l_med)
    return (n_max <= DYADIC_COMPARABLE * n_med) and (
        max(l_max, rhs) <= DYADIC_COMPARABLE * min(l_max, rhs)
    )


def classify_dyadic(
    alpha: float, xi1: float, xi2: float, xi3: float,
    lam1: float, lam2: float, lam3: float,
) -> DyadicClass:
    """Classify one interaction point into dyadic shells.

    The modulations lam_j = tau_j - h_j(xi_j) are supplied by the caller;
    the resonance magnitude H is recomputed here from the frequencies.
    """
    h = resonance(alpha, xi1, xi2, xi3)
    n1, n2, n3 = (float(dyadic_shell(v)) for v in (xi1, xi2, xi3))
    hs = float(dyadic_shell(h))
    l1, l2, l3 = (float(dyadic_shell(v)) for v in (lam1, lam2, lam3))
    return DyadicClass(
        n1, n2, n3, hs, l1, l2, l3,
        shells_admissible(n1, n2, n3, hs, l1, l2, l3),
    )
