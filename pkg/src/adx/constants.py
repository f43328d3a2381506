"""Closed-form constants: the sharp Adams constant, j_{m,n}, sphere areas, ball volumes."""

import math
from dataclasses import dataclass

from .validation import ParameterError, check_int


@dataclass(frozen=True)
class DimPair:
    """Derivative order ``m`` and dimension ``n`` with ``1 <= m < n``."""

    m: int
    n: int

    def __post_init__(self):
        check_int("m", self.m, lo=1)
        check_int("n", self.n, lo=2)
        if self.m >= self.n:
            raise ParameterError(f"need m < n, got m={self.m}, n={self.n}")

    @property
    def hilbert(self):
        """True in the case ``n = 2m``."""
        return self.n == 2 * self.m


def sphere_area(n):
    """Area of the unit sphere in R^n, ``2 pi^(n/2) / Gamma(n/2)``."""
    check_int("n", n, lo=1)
    return 2.0 * math.pi ** (n / 2) / math.gamma(n / 2)


def ball_volume(n):
    """Volume of the unit ball in R^n."""
    return sphere_area(n) / n


def adams_constant(d):
    """Sharp Adams constant ``beta_0(m, n)``.

    Parameters
    ----------
    d : DimPair

    Returns
    -------
    float
    """
    m, n = d.m, d.n
    if m >= n:
        raise ParameterError(f"need m < n, got m={m}, n={n}")
    q = n / (n - m)
    if m % 2 == 0:
        c = math.pi ** (n / 2) * 2**m * math.gamma(m / 2) / math.gamma((n - m) / 2)
    else:
        c = math.pi ** (n / 2) * 2**m * math.gamma((m + 1) / 2) / math.gamma((n - m + 1) / 2)
    return n / sphere_area(n) * c**q


def min_index(d):
    """Smallest integer ``j`` with ``j >= n/m``."""
    return -(-d.n // d.m)
