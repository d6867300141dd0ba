"""Modified nodal analysis with polynomial-in-s entries.

The circuit class (grounded R, grounded C, DVCC) produces a square system
over node voltages plus one branch current per conveyor.  Every matrix entry
is a degree<=1 polynomial g + s*c, so the whole matrix is stored as a
constant part and an s-coefficient part.  The characteristic polynomial is
the determinant in s, extracted numerically by evaluating the matrix at a
handful of real frequencies and interpolating.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass

import numpy as np

from . import dvcc as dvcc_model
from .netlist import GROUND, Capacitor, Netlist, NetlistError, Resistor, validate

#: Relative threshold under which an interpolated coefficient is treated as
#: an exact zero (absorbs interpolation noise, e.g. a marginal damping term).
TRIM_REL = 1e-12

#: Marginal-oscillation classification tolerance, relative to omega0.
MARGINAL_REL = 1e-6


class AnalysisError(ValueError):
    """Raised for degenerate networks and unsupported polynomial orders."""


@dataclass(frozen=True)
class PolyMatrix:
    """Square matrix of first-degree polynomials in s: entries g + s*c."""

    labels: tuple[str, ...]
    g: np.ndarray
    c: np.ndarray

    @property
    def n(self) -> int:
        return self.g.shape[0]

    def eval_at(self, s: float) -> np.ndarray:
        return self.g + s * self.c


class MnaBuilder:
    """Allocates row/column indices and accumulates stamp contributions.

    Ordering is deterministic: non-ground nodes in first-use order, then one
    branch row per DVCC in element order.
    """

    def __init__(self, netlist: Netlist):
        self._nodes = {name: i for i, name in enumerate(netlist.nodes)}
        nn = len(self._nodes)
        self._branches = {d.name: nn + k for k, d in enumerate(netlist.dvccs())}
        n = nn + len(self._branches)
        self.labels = tuple(netlist.nodes) + tuple(
            f"I_X({name})" for name in self._branches)
        self.g = np.zeros((n, n))
        self.c = np.zeros((n, n))

    def node_index(self, name: str) -> int | None:
        if name == GROUND:
            return None
        return self._nodes[name]

    def branch_index(self, dvcc_name: str) -> int:
        return self._branches[dvcc_name]

    def add_g(self, i: int | None, j: int | None, value: float) -> None:
        if i is not None and j is not None:
            self.g[i, j] += value

    def add_c(self, i: int | None, j: int | None, value: float) -> None:
        if i is not None and j is not None:
            self.c[i, j] += value

    def build(self) -> PolyMatrix:
        return PolyMatrix(self.labels, self.g, self.c)


def build_mna(netlist: Netlist) -> PolyMatrix:
    """Assemble the nodal system.  Purely structural; no validation here."""
    b = MnaBuilder(netlist)
    for e in netlist.elements:
        if isinstance(e, Resistor):
            i = b.node_index(e.node)
            b.add_g(i, i, 1.0 / e.ohms)
        elif isinstance(e, Capacitor):
            i = b.node_index(e.node)
            b.add_c(i, i, e.farads)
        else:
            dvcc_model.stamp(e, b)
    return b.build()


@dataclass(frozen=True)
class CharPoly:
    """Characteristic polynomial, ascending coefficients, leading term 1."""

    coeffs: tuple[float, ...]

    @property
    def degree(self) -> int:
        return len(self.coeffs) - 1


def _geometric_mean(values: list[float]) -> float:
    return math.exp(sum(math.log(v) for v in values) / len(values))


def _rate_scale(netlist: Netlist) -> float:
    """Characteristic rate used to place determinant evaluation points.

    The geometric mean of 1/(R*C) keeps all interpolation points near the
    network's natural-frequency scale, which conditions the coefficient
    recovery even when component values span many decades.
    """
    rs = [e.ohms for e in netlist.resistors()]
    cs = [e.farads for e in netlist.capacitors()]
    scale = 1.0
    if rs:
        scale *= _geometric_mean(rs)
    if cs:
        scale *= _geometric_mean(cs)
    return 1.0 / scale


def char_poly(netlist: Netlist, eval_points: list[float] | None = None) -> CharPoly:
    """Determinant of the MNA matrix as a polynomial in s.

    Evaluates the numeric determinant (LU with partial pivoting) at
    degree+1 distinct real frequencies and solves the interpolation system.
    Coefficients below TRIM_REL of the largest are zeroed, then the result
    is normalized to a leading coefficient of 1.

    ``eval_points`` overrides the default points; any degree+1 distinct
    positive values of roughly the natural-frequency scale are admissible
    (exposed for verification).
    """
    problems = validate(netlist)
    if problems:
        raise NetlistError("; ".join(problems))
    m = build_mna(netlist)
    d = len(netlist.capacitors())
    if eval_points is None:
        sigma = _rate_scale(netlist)
        points = [sigma * (k + 1) for k in range(d + 1)]
    else:
        if len(eval_points) != d + 1:
            raise ValueError(f"need exactly {d + 1} evaluation points")
        points = list(eval_points)
        sigma = points[0]

    dets = np.array([np.linalg.det(m.eval_at(s)) for s in points])
    if not np.any(dets):
        raise AnalysisError("degenerate network (determinant identically zero)")

    # Interpolate on sigma-normalized points so the Vandermonde solve stays
    # well conditioned.  Trimming happens in the scaled basis, where
    # coefficients of different powers are unit-comparable; the per-power
    # scaling is undone afterwards.
    x = np.array(points) / sigma
    vander = np.vander(x, d + 1, increasing=True)
    scaled = np.linalg.solve(vander, dets)

    top = np.max(np.abs(scaled))
    scaled[np.abs(scaled) < TRIM_REL * top] = 0.0
    lead = d
    while lead > 0 and scaled[lead] == 0.0:
        lead -= 1
    if scaled[lead] == 0.0:
        raise AnalysisError("degenerate network (all coefficients vanish)")
    coeffs = scaled[: lead + 1] / sigma ** np.arange(lead + 1)
    normalized = coeffs / coeffs[lead] + 0.0  # +0.0 turns -0.0 into 0.0
    return CharPoly(tuple(float(a) for a in normalized))


class Growth(str, enum.Enum):
    DECAYING = "decaying"
    MARGINAL = "marginal"
    GROWING = "growing"


@dataclass(frozen=True)
class OscAnalysis:
    """Oscillation classification of a normalized second-order polynomial.

    omega0 is sqrt of the constant coefficient; a1_norm is the damping
    coefficient and doubles as the oscillation-condition margin (zero or
    negative means the poles sit on or right of the imaginary axis, i.e.
    the circuit starts up).
    """

    omega0: float
    f0: float
    a1_norm: float
    oscillates: bool
    growth: Growth


def analyze(poly: CharPoly) -> OscAnalysis:
    """Classify a degree-2 characteristic polynomial.

    The marginal band is |a1| <= MARGINAL_REL * omega0, a relative,
    unit-free tolerance.  Raises AnalysisError for other degrees or when no
    oscillatory root pair exists (a0 <= 0).
    """
    if poly.degree != 2:
        raise AnalysisError(f"unsupported order: degree {poly.degree} (need 2)")
    a0, a1 = poly.coeffs[0], poly.coeffs[1]
    if a0 <= 0:
        raise AnalysisError(f"no oscillatory pair (constant coefficient {a0!r} <= 0)")
    omega0 = math.sqrt(a0)
    tau = MARGINAL_REL * omega0
    if abs(a1) <= tau:
        growth = Growth.MARGINAL
    elif a1 > 0:
        growth = Growth.DECAYING
    else:
        growth = Growth.GROWING
    return OscAnalysis(
        omega0=omega0,
        f0=omega0 / (2.0 * math.pi),
        a1_norm=a1,
        oscillates=growth is not Growth.DECAYING,
        growth=growth,
    )
