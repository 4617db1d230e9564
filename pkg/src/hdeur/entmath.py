"""Scalar special functions and string/entropy utilities.

Everything here is a pure function of its arguments. Logarithms of Gamma
functions and binomials are kept in the log domain because the key-length
formulas evaluate them at arguments around 1e6 to 1e12, where the plain
functions overflow.
"""

import math

import numpy as np
from scipy import special

MAX_ALPHABET = 2**20
MAX_LENGTH = 2**32



def _check_alphabet(d):
    if int(d) != d or d < 2 or d > MAX_ALPHABET:
        raise ValueError(f"alphabet size d must be an integer in [2, 2^20], got {d}")
    return int(d)


def as_dstring(symbols, d):
    """Validate ``symbols`` as a string over {0, ..., d-1} and return it as an int array."""
    d = _check_alphabet(d)
    q = np.asarray(symbols)
    if q.ndim != 1:
        raise ValueError("a d-ary string must be one-dimensional")
    if q.size > MAX_LENGTH:
        raise ValueError("string longer than 2^32 symbols")
    if q.size and not np.issubdtype(q.dtype, np.integer):
        if not np.all(np.equal(np.mod(q, 1), 0)):
            raise ValueError("symbols must be integers")
        q = q.astype(np.int64)
    if q.size and (q.min() < 0 or q.max() >= d):
        raise ValueError(f"symbols must lie in [0, {d - 1}]")
    return q


def hamming_weight(q):
    """Number of non-zero symbols in ``q``."""
    return int(np.count_nonzero(np.asarray(q)))


def relative_weight(q):
    """Fraction of non-zero symbols in ``q``.

    >>> relative_weight([1, 2, 0, 3])
    0.75
    """
    q = np.asarray(q)
    if q.size == 0:
        raise ValueError("relative weight of an empty string is undefined")
    return np.count_nonzero(q) / q.size


def dary_entropy(x, d):
    """d-ary entropy ``h_d(x)``, normalised so that the maximum (at 1-1/d) is 1.

    Uses the convention 0*log 0 = 0 at both endpoints, so ``h_d(0) = 0`` and
    ``h_d(1) = log_d(d-1)``.
    """
    d = _check_alphabet(d)
    if not 0.0 <= x <= 1.0:
        raise ValueError(f"h_d is defined on [0, 1], got {x}")
    if x == 0.0:
        return 0.0
    val = x * math.log(d - 1) if d > 2 else 0.0
    val -= x * math.log(x)
    if x < 1.0:
        val -= (1.0 - x) * math.log1p(-x)
    return val / math.log(d)


def extended_dary_entropy(x, d):
    """Extended d-ary entropy: 0 below 0, ``h_d`` on [0, 1-1/d], 1 above."""
    d = _check_alphabet(d)
    if x <= 0.0:
        return 0.0
    if x > 1.0 - 1.0 / d:
        return 1.0
    return dary_entropy(x, d)


def log_gamma(x):
    """Natural log of the Gamma function for ``x > 0``."""
    if not x > 0:
        raise ValueError(f"log_gamma requires x > 0, got {x}")
    return float(special.gammaln(x))


def _stirling_tail(x):
    # Asymptotic series of lnGamma(x) - [(x-1/2)ln x - x + ln(2pi)/2]; error < 1e-17 for x >= 20.
    x2 = x * x
    return (1.0 / 12.0 - (1.0 / 360.0 - (1.0 / 1260.0 - 1.0 / (1680.0 * x2)) / x2) / x2) / x


def log_gamma_ratio(x, a):
    """``ln Gamma(x + a) - ln Gamma(x)`` without cancellation at large ``x``.

    Differencing two ``gammaln`` values loses about ``x * 1e-16`` in absolute
    terms, which is visible once ``x`` reaches 1e9. For large ``x`` the
    Stirling forms are subtracted analytically instead.
    """
    if not x > 0 or not x + a > 0:
        raise ValueError("log_gamma_ratio needs x > 0 and x + a > 0")
    if x < 20.0 or abs(a) > 0.05 * x:
        return float(special.gammaln(x + a) - special.gammaln(x))
    # (x+a-1/2) ln(x+a) - (x-1/2) ln x - a, regrouped around ln(1 + a/x)
    lead = (x + a - 0.5) * math.log1p(a / x) - a + a * math.log(x)
    return lead + _stirling_tail(x + a) - _stirling_tail(x)


def log_binomial(n, k, base=math.e):
    """Logarithm of ``C(n, k)`` in base 2 or e.

    Goes through ``betaln`` rather than three ``gammaln`` calls so that
    small ``k`` with huge ``n`` keeps full relative precision.
    """
    if int(n) != n or int(k) != k:
        raise ValueError("n and k must be integers")
    n, k = int(n), int(k)
    if n < 0 or k < 0 or k > n:
        raise ValueError(f"need 0 <= k <= n, got n={n}, k={k}")
    if base not in (2, math.e):
        raise ValueError("base must be 2 or e")
    if k == 0 or k == n:
        return 0.0
    val = -math.log1p(n) - float(special.betaln(n - k + 1, k + 1))
    return val / math.log(2) if base == 2 else val
