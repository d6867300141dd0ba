"""Behavioral model of the modified differential voltage current conveyor.

The conveyor is a five-terminal element (Y1, Y2, X, Z1, Z2).  Its X terminal
follows the Y1-Y2 differential voltage through near-unity voltage gains, and
both Z outputs copy the X-terminal current through near-unity current gains.
The Y terminals draw no current.  An optional saturation on the X output
voltage models the supply-rail amplitude limit of a physical implementation;
it is the single nonlinearity of the model.
"""

from __future__ import annotations

import enum
import math
from dataclasses import dataclass


class SatModel(str, enum.Enum):
    """Shape of the X-output amplitude limiter."""

    NONE = "none"
    HARD = "hard"
    TANH = "tanh"


@dataclass(frozen=True)
class DvccParams:
    """Conveyor tracking gains and saturation settings.

    beta1/beta2 are the voltage gains from Y1/Y2 to X, alpha1/alpha2 the
    current gains from X to Z1/Z2.  All four are dimensionless and near
    unity for a good device; the deviations are exposed as the eps_*
    tracking errors.  v_sat is the clipping level in volts.
    """

    beta1: float = 1.0
    beta2: float = 1.0
    alpha1: float = 1.0
    alpha2: float = 1.0
    v_sat: float = 2.5
    sat_model: SatModel = SatModel.TANH

    @property
    def eps_v1(self) -> float:
        return 1.0 - self.beta1

    @property
    def eps_v2(self) -> float:
        return 1.0 - self.beta2

    @property
    def eps_i1(self) -> float:
        return 1.0 - self.alpha1

    @property
    def eps_i2(self) -> float:
        return 1.0 - self.alpha2


#: Gains are accepted up to this bound; a working conveyor tracks near unity.
GAIN_MAX = 1.2


def saturate(u: float, model: SatModel, v_sat: float) -> float:
    """Apply the selected amplitude limiter to a voltage."""
    if model is SatModel.NONE:
        return u
    if model is SatModel.HARD:
        if u > v_sat:
            return v_sat
        if u < -v_sat:
            return -v_sat
        return u
    return v_sat * math.tanh(u / v_sat)


def x_voltage(params: DvccParams, v_y1: float, v_y2: float,
              saturate_output: bool = True) -> float:
    """X-terminal voltage for the given Y-terminal voltages.

    Linear in the inputs when saturation is off; otherwise the limiter of
    ``params.sat_model`` is applied to the differential combination.
    """
    u = params.beta1 * v_y1 - params.beta2 * v_y2
    if not saturate_output:
        return u
    return saturate(u, params.sat_model, params.v_sat)


def z_currents(params: DvccParams, i_x: float) -> tuple[float, float]:
    """Currents flowing into the conveyor at Z1 and Z2.

    ``i_x`` is the current flowing into the X terminal.  Each Z terminal
    draws alpha_i * i_x from its external node, i.e. the node sees
    -alpha_i * i_x delivered.
    """
    return (params.alpha1 * i_x, params.alpha2 * i_x)


def stamp(dvcc, builder) -> None:
    """Add the conveyor's contributions to a nodal-analysis builder.

    One branch unknown, the X-terminal current I_X, must have been
    allocated for this element.  Contributions:

    * branch row:  V(x) - beta1*V(y1) + beta2*V(y2) = 0
    * KCL at x:    +I_X   (current into the conveyor leaves the node)
    * KCL at z1:   +alpha1*I_X
    * KCL at z2:   +alpha2*I_X

    Y terminals contribute nothing to any KCL row.
    """
    p = dvcc.params
    t = dvcc.terminals
    b = builder.branch_index(dvcc.name)
    ix = builder.node_index(t.x)
    builder.add_g(b, ix, 1.0)
    builder.add_g(b, builder.node_index(t.y1), -p.beta1)
    builder.add_g(b, builder.node_index(t.y2), p.beta2)
    builder.add_g(ix, b, 1.0)
    builder.add_g(builder.node_index(t.z1), b, p.alpha1)
    builder.add_g(builder.node_index(t.z2), b, p.alpha2)
