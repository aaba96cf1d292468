"""Core parameter objects: the (n, s) pair and the spectral-symbol selector."""

import enum
from dataclasses import dataclass

from .errors import ParameterError


class MultiplierKind(enum.Enum):
    """Selector among the three spectral symbols.

    GJMS        -- the conformal operator symbol m_s
    INTERTWINED -- the auxiliary symbol conformally tied to (-Delta)^s
    REMAINDER   -- the bounded difference symbol (sin pi s / pi)|Gamma(s+1/2+i beta)|^2
    """

    GJMS = "gjms"
    INTERTWINED = "intertwined"
    REMAINDER = "remainder"


@dataclass(frozen=True)
class Params:
    """Dimension n >= 2 and operator order 0 < s < n/2.

    rho and the critical exponent are derived on demand, never stored.
    """

    n: int
    s: float

    def __post_init__(self):
        if not isinstance(self.n, int) or isinstance(self.n, bool):
            raise ParameterError(f"n must be an integer, got {self.n!r}")
        if self.n < 2:
            raise ParameterError(f"n must be >= 2, got {self.n}")
        s = float(self.s)
        if not (0.0 < s < self.n / 2.0):
            raise ParameterError(f"s must lie in (0, n/2) = (0, {self.n / 2}), got {s}")
        object.__setattr__(self, "s", s)

    @property
    def rho(self) -> float:
        return (self.n - 1) / 2.0

    @property
    def two_star(self) -> float:
        """Critical Sobolev exponent 2n/(n - 2s)."""
        return 2.0 * self.n / (self.n - 2.0 * self.s)
