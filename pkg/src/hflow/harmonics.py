"""Real spherical harmonics used by surface families and test fields.

Orthonormal convention: integral of Y_lm * Y_l'm' over the unit sphere is
a Kronecker delta.  Y_20(theta) = sqrt(5/16pi) (3 cos^2 theta - 1).
"""

import numpy as np


def _norm_legendre(l, m, x):
    """Fully normalized associated Legendre P̄_lm(x), stable upward recurrence.

    Normalized so that the complex harmonic P̄_lm e^{i m phi} has unit L2
    norm on the sphere: int P̄_lm^2 dx = 1/(2 pi).
    """
    x = np.asarray(x, dtype=float)
    s = np.sqrt(np.maximum(0.0, 1.0 - x * x))
    pmm = np.full_like(x, np.sqrt(1.0 / (4.0 * np.pi)))
    for k in range(m):
        pmm = -np.sqrt((2.0 * k + 3.0) / (2.0 * k + 2.0)) * s * pmm
    if l == m:
        return pmm
    pm1 = np.sqrt(2.0 * m + 3.0) * x * pmm
    if l == m + 1:
        return pm1
    for ll in range(m + 2, l + 1):
        a = np.sqrt((4.0 * ll * ll - 1.0) / (ll * ll - m * m))
        b = np.sqrt(((ll - 1.0) ** 2 - m * m) / (4.0 * (ll - 1.0) ** 2 - 1.0))
        pmm, pm1 = pm1, a * (x * pm1 - b * pmm)
    return pm1


def real_harmonic(l, m, theta, phi):
    """Real orthonormal spherical harmonic Y_lm(theta, phi).

    m > 0 pairs with cos(m phi), m < 0 with sin(|m| phi).
    """
    if l < 0 or abs(m) > l:
        raise ValueError(f"invalid harmonic degree/order ({l}, {m})")
    x = np.cos(theta)
    if m == 0:
        return _norm_legendre(l, 0, x)
    p = _norm_legendre(l, abs(m), x)
    if m > 0:
        return np.sqrt(2.0) * p * np.cos(m * phi)
    return np.sqrt(2.0) * p * np.sin(-m * phi)


def harmonic_expansion(coeffs, theta, phi):
    """Sum of real harmonics: coeffs is a mapping {(l, m): amplitude}."""
    out = np.zeros(np.broadcast(theta, phi).shape)
    for (l, m), amp in coeffs.items():
        if amp:
            out += amp * real_harmonic(l, m, theta, phi)
    return out
