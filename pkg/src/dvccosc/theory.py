"""Closed-form oscillator theory for the canonical quadrature circuit.

Everything here is analytic: characteristic-polynomial coefficients, the
oscillation frequency with and without conveyor tracking errors, the
equal-amplitude design procedure, the quadrature phasor relation, normalized
sensitivities with a finite-difference cross-check, and a Monte Carlo
component-tolerance sweep.

For R1, C1 on the differential input node, C2 on the integrated node and R2
on the conveyor output node, the characteristic polynomial is

    s^2 + s*(1/(R1*C1) + b2*a1/(R2*C2) - b1*a2/(R2*C1)) + b2*a1/(R1*R2*C1*C2)

with the ideal form recovered at unit gains.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .dvcc import DvccParams
from .netlist import Netlist, canonical_quadrature_netlist

TWO_PI = 2.0 * math.pi


@dataclass(frozen=True)
class OscParams:
    """Component values plus conveyor gains for the canonical oscillator."""

    r1: float
    r2: float
    c1: float
    c2: float
    dvcc: DvccParams = field(default_factory=DvccParams)

    def __post_init__(self):
        for label, v in (("r1", self.r1), ("r2", self.r2),
                         ("c1", self.c1), ("c2", self.c2)):
            if not v > 0:
                raise ValueError(f"{label} must be positive, got {v!r}")

    def netlist(self) -> Netlist:
        return canonical_quadrature_netlist(self.r1, self.r2, self.c1, self.c2, self.dvcc)


def co_coeffs_ideal(p: OscParams) -> tuple[float, float]:
    """Damping and constant coefficients (a1, a0) at unit gains."""
    a1 = 1.0 / (p.r1 * p.c1) + 1.0 / (p.r2 * p.c2) - 1.0 / (p.r2 * p.c1)
    a0 = 1.0 / (p.r1 * p.r2 * p.c1 * p.c2)
    return a1, a0


def co_coeffs_nonideal(p: OscParams) -> tuple[float, float]:
    """(a1, a0) including the conveyor tracking gains."""
    d = p.dvcc
    a1 = (1.0 / (p.r1 * p.c1)
          + d.beta2 * d.alpha1 / (p.r2 * p.c2)
          - d.beta1 * d.alpha2 / (p.r2 * p.c1))
    a0 = d.beta2 * d.alpha1 / (p.r1 * p.r2 * p.c1 * p.c2)
    return a1, a0


def fo_ideal(p: OscParams) -> float:
    """Oscillation frequency in Hz at unit gains: 1/(2*pi*sqrt(R1*R2*C1*C2)).

    Grouped as sqrt(1/(R1*R2*C1*C2))/(2*pi) so the unit-gain case of
    fo_nonideal reduces to it bit for bit.
    """
    return math.sqrt(1.0 / (p.r1 * p.r2 * p.c1 * p.c2)) / TWO_PI


def fo_nonideal(p: OscParams) -> float:
    """Oscillation frequency in Hz: sqrt(beta2*alpha1/(R1*R2*C1*C2))/(2*pi).

    Only beta2 and alpha1 enter; beta1 and alpha2 shift the damping term but
    not the frequency.
    """
    d = p.dvcc
    return math.sqrt(d.beta2 * d.alpha1 / (p.r1 * p.r2 * p.c1 * p.c2)) / TWO_PI


@dataclass(frozen=True)
class DesignResult:
    """Output of the equal-amplitude design: C2 = 2*C1 and R1 = 2*R2*(1+eps)."""

    params: OscParams
    epsilon: float
    f0_target: float
    f0_exact: float


def design_equal_amplitude(f0: float, r2: float, epsilon: float = 0.02) -> DesignResult:
    """Pick component values for target frequency f0 with equal output amplitudes.

    With C2 = 2*C1 and R1 = 2*R2 the two outputs have unit amplitude ratio
    and the frequency reduces to 1/(2*pi*R1*C1); the damping term is then
    exactly zero (marginal).  A startup margin epsilon > 0 stretches R1 to
    2*R2*(1+epsilon), which drives the damping negative (growing) while
    lowering the exact frequency by the known factor 1/sqrt(1+epsilon).
    Capacitors are chosen from the epsilon = 0 design so that single knob is
    the only deviation.
    """
    if not f0 > 0:
        raise ValueError(f"f0 must be positive, got {f0!r}")
    if not r2 > 0:
        raise ValueError(f"r2 must be positive, got {r2!r}")
    if not 0.0 <= epsilon <= 0.2:
        raise ValueError(f"epsilon must be in [0, 0.2], got {epsilon!r}")
    r1_nominal = 2.0 * r2
    c1 = 1.0 / (TWO_PI * f0 * r1_nominal)
    c2 = 2.0 * c1
    params = OscParams(r1=r1_nominal * (1.0 + epsilon), r2=r2, c1=c1, c2=c2)
    return DesignResult(params=params, epsilon=epsilon, f0_target=f0,
                        f0_exact=fo_ideal(params))


def quadrature_relation(p: OscParams) -> tuple[float, float]:
    """Phase lead and amplitude ratio of output V01 relative to V02.

    The conveyor output drives the C2 integrator, so at the ideal
    oscillation frequency V01 = j*omega0*R2*C2*V02: a +90 degree lead with
    amplitude ratio omega0*R2*C2 = sqrt(R2*C2/(R1*C1)).
    """
    omega0 = TWO_PI * fo_ideal(p)
    return 90.0, omega0 * p.r2 * p.c2


#: Parameters with a nonzero analytic frequency sensitivity.
SENSITIVITY_PARAMS = ("beta2", "alpha1", "r1", "r2", "c1", "c2")

#: All parameters accepted by sensitivity_fd.
FD_PARAMS = ("beta1", "beta2", "alpha1", "alpha2", "r1", "r2", "c1", "c2")


def sensitivities_analytic() -> dict[str, float]:
    """Normalized frequency sensitivities S_x = (x/omega0) * d(omega0)/dx.

    From the square root in fo_nonideal: +1/2 for each gain under the root
    and -1/2 for each component value.  None exceeds one half in magnitude.
    """
    return {
        "beta2": 0.5,
        "alpha1": 0.5,
        "r1": -0.5,
        "r2": -0.5,
        "c1": -0.5,
        "c2": -0.5,
    }


def _with_param(p: OscParams, name: str, value: float) -> OscParams:
    if name in ("r1", "r2", "c1", "c2"):
        return replace(p, **{name: value})
    return replace(p, dvcc=replace(p.dvcc, **{name: value}))


def _get_param(p: OscParams, name: str) -> float:
    if name in ("r1", "r2", "c1", "c2"):
        return getattr(p, name)
    return getattr(p.dvcc, name)


def sensitivity_fd(p: OscParams, param_name: str, rel_step: float = 1e-5) -> float:
    """Finite-difference estimate of the normalized frequency sensitivity.

    Central difference of ln(omega0) with respect to ln(x), which measures
    the same quantity as the analytic table and is numerically stable for
    parameters spanning decades.
    """
    if param_name not in FD_PARAMS:
        raise ValueError(f"unknown parameter {param_name!r}; expected one of {FD_PARAMS}")
    if not 1e-8 <= rel_step <= 1e-2:
        raise ValueError(f"rel_step must be in [1e-8, 1e-2], got {rel_step!r}")
    x = _get_param(p, param_name)
    up = math.log(fo_nonideal(_with_param(p, param_name, x * (1.0 + rel_step))))
    dn = math.log(fo_nonideal(_with_param(p, param_name, x * (1.0 - rel_step))))
    return (up - dn) / (math.log1p(rel_step) - math.log1p(-rel_step))


@dataclass(frozen=True)
class McF0Summary:
    """Distribution summary of the oscillation frequency under tolerances."""

    mean_hz: float
    std_hz: float
    min_hz: float
    max_hz: float
    n: int
    tol: float
    seed: int
    #: shape (n, 5) columns r1, r2, c1, c2, f0; None unless requested.
    draws: np.ndarray | None = None


def monte_carlo_f0(p: OscParams, tol: float, n: int, seed: int,
                   keep_draws: bool = False) -> McF0Summary:
    """Sample fo_nonideal with each R and C uniform within +-tol of nominal.

    Gains are held at their nominal values (component tolerance only).
    Deterministic for a given seed.
    """
    if not 0.0 <= tol < 0.5:
        raise ValueError(f"tol must be in [0, 0.5), got {tol!r}")
    if n < 1:
        raise ValueError(f"n must be >= 1, got {n!r}")
    rng = np.random.default_rng(seed)
    factors = rng.uniform(1.0 - tol, 1.0 + tol, size=(n, 4))
    nominal = np.array([p.r1, p.r2, p.c1, p.c2])
    comps = factors * nominal
    gain = p.dvcc.beta2 * p.dvcc.alpha1
    f0s = np.sqrt(gain / comps.prod(axis=1)) / TWO_PI
    draws = np.column_stack([comps, f0s]) if keep_draws else None
    lo, hi = float(f0s.min()), float(f0s.max())
    if lo == hi:  # constant sample; avoid half-ulp noise from the mean
        mean, std = lo, 0.0
    else:
        mean, std = float(f0s.mean()), float(f0s.std())
    return McF0Summary(
        mean_hz=mean, std_hz=std, min_hz=lo, max_hz=hi,
        n=n, tol=tol, seed=seed, draws=draws,
    )


def osc_params_from_netlist(netlist: Netlist) -> OscParams | None:
    """Recover OscParams from a netlist in the canonical topology.

    Returns None when the netlist is not a single-conveyor circuit wired as
    canonical_quadrature_netlist builds it (regardless of node names).
    """
    dvccs = netlist.dvccs()
    rs = netlist.resistors()
    cs = netlist.capacitors()
    if len(dvccs) != 1 or len(rs) != 2 or len(cs) != 2:
        return None
    d = dvccs[0]
    t = d.terminals
    r_by_node = {r.node: r for r in rs}
    c_by_node = {c.node: c for c in cs}
    if len(r_by_node) != 2 or len(c_by_node) != 2:
        return None
    # X carries R2; the differential input node carries R1 and C1 and is fed
    # by Z2; the integrated node carries C2 and is fed by Z1.
    if t.x not in r_by_node or t.y1 not in r_by_node or t.y1 == t.x:
        return None
    if t.y1 not in c_by_node or t.y2 not in c_by_node or t.y1 == t.y2:
        return None
    if t.z1 != t.y2 or t.z2 != t.y1:
        return None
    return OscParams(
        r1=r_by_node[t.y1].ohms,
        r2=r_by_node[t.x].ohms,
        c1=c_by_node[t.y1].farads,
        c2=c_by_node[t.y2].farads,
        dvcc=d.params,
    )
