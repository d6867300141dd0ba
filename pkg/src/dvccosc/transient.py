"""State-space derivation and fixed-step transient simulation.

Supported topology class: every grounded-capacitor node is a state, and
every remaining node must be the X node of exactly one conveyor, carrying
only grounded resistors (Y terminals may attach anywhere since they draw no
current; Z terminals must land on state nodes or ground).  Under those
rules every X voltage is an explicit function of the state, so the system
is an explicit ODE and a classical fixed-step 4th-order Runge-Kutta
integrator applies without any implicit solve.

The hot loop lives in a Cython extension (dvccosc._kernel) with a
pure-Python twin (dvccosc._kernel_py) selected at import time; both produce
bit-identical waveforms.  See benchmarks/bench_transient.py for the speed
comparison.
"""

from __future__ import annotations

import math
from dataclasses import dataclass

import numpy as np

from .dvcc import SatModel
from .netlist import GROUND, Capacitor, Netlist, NetlistError, Resistor, validate

try:
    from . import _kernel as _compiled
except ImportError:  # extension not built; fall back to the Python kernel
    _compiled = None
from . import _kernel_py as _pure

#: Terminal-reference code for ground in the compiled state-space arrays.
GROUND_REF = -1

_SAT_CODE = {SatModel.NONE: 0, SatModel.HARD: 1, SatModel.TANH: 2}


def kernel_backend() -> str:
    """Name of the kernel selected at import: "compiled" or "python"."""
    return "compiled" if _compiled is not None else "python"


class TopologyError(ValueError):
    """Netlist is outside the explicitly-integrable topology class."""


class SimulationDiverged(RuntimeError):
    """State became non-finite; carries the failure time and state."""

    def __init__(self, time: float, state: np.ndarray):
        super().__init__(f"non-finite state at t={time:.6e} s: {state.tolist()}")
        self.time = time
        self.state = state


@dataclass(frozen=True)
class StateSpace:
    """Explicit ODE compiled from a netlist.

    States are grounded-capacitor node voltages in capacitor declaration
    order.  Conveyors are stored in an order where each X voltage depends
    only on states, ground, or X voltages of earlier conveyors.  Terminal
    references use integers: GROUND_REF, a state index, or ns + conveyor
    index for an X node.
    """

    state_names: tuple[str, ...]
    cap: np.ndarray
    gnd_g: np.ndarray
    inj: np.ndarray           # (ns, nd) current-injection coefficients
    dvcc_names: tuple[str, ...]
    y1_ref: np.ndarray
    y2_ref: np.ndarray
    beta1: np.ndarray
    beta2: np.ndarray
    vsat: np.ndarray
    sat_kind: np.ndarray
    taps: tuple[tuple[str, int], ...]

    @property
    def n_states(self) -> int:
        return len(self.state_names)

    @property
    def tap_labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.taps)

    def _ref_value(self, ref: int, v: np.ndarray, xv: np.ndarray) -> float:
        if ref < 0:
            return 0.0
        ns = self.n_states
        return float(v[ref]) if ref < ns else float(xv[ref - ns])

    def x_voltages(self, v: np.ndarray, saturate_output: bool = True) -> np.ndarray:
        """X-node voltages for a given state vector, in conveyor order."""
        nd = len(self.dvcc_names)
        xv = np.zeros(nd)
        for d in range(nd):
            a = self._ref_value(int(self.y1_ref[d]), v, xv)
            b = self._ref_value(int(self.y2_ref[d]), v, xv)
            u = self.beta1[d] * a - self.beta2[d] * b
            if saturate_output:
                kind = int(self.sat_kind[d])
                if kind == 1:
                    u = min(max(u, -self.vsat[d]), self.vsat[d])
                elif kind == 2:
                    u = self.vsat[d] * math.tanh(u / self.vsat[d])
            xv[d] = u
        return xv

    def derivative(self, v: np.ndarray, saturate_output: bool = True) -> np.ndarray:
        """Time derivative of the state vector (reference implementation)."""
        xv = self.x_voltages(np.asarray(v, dtype=float), saturate_output)
        return (-self.gnd_g * np.asarray(v, dtype=float) + self.inj @ xv) / self.cap

    def linear_matrix(self) -> np.ndarray:
        """State matrix A of the saturation-free linearization (dv/dt = A v).

        Also the Jacobian of the saturating system at the origin, since
        both limiter shapes have unit slope there.
        """
        ns, nd = self.n_states, len(self.dvcc_names)
        dxv = np.zeros((nd, ns))
        for d in range(nd):
            row = np.zeros(ns)
            for ref, gain in ((int(self.y1_ref[d]), self.beta1[d]),
                              (int(self.y2_ref[d]), -self.beta2[d])):
                if ref < 0:
                    continue
                if ref < ns:
                    row[ref] += gain
                else:
                    row += gain * dxv[ref - ns]
            dxv[d] = row
        a = np.diag(-self.gnd_g / self.cap)
        if nd:
            a += (self.inj @ dxv) / self.cap[:, None]
        return a

    def tap_values(self, v: np.ndarray) -> dict[str, float]:
        xv = self.x_voltages(np.asarray(v, dtype=float))
        return {label: self._ref_value(ref, v, xv) for label, ref in self.taps}


def derive_state_space(netlist: Netlist) -> StateSpace:
    """Compile a netlist into an explicit StateSpace.

    Raises NetlistError when the netlist fails validation, TopologyError
    with "unsupported topology" when an X node carries a capacitor or a Z
    terminal lands outside the state nodes, and with "implicit node" when
    some node voltage is not explicitly determined (a non-state node that
    is no conveyor's X node, or X voltages coupled in a cycle through Y
    terminals).
    """
    problems = validate(netlist)
    if problems:
        raise NetlistError("; ".join(problems))

    state_index: dict[str, int] = {}
    for e in netlist.elements:
        if isinstance(e, Capacitor) and e.node not in state_index:
            state_index[e.node] = len(state_index)
    ns = len(state_index)
    cap = np.zeros(ns)
    gnd_g = np.zeros(ns)
    for e in netlist.elements:
        if isinstance(e, Capacitor):
            cap[state_index[e.node]] += e.farads
        elif isinstance(e, Resistor) and e.node in state_index:
            gnd_g[state_index[e.node]] += 1.0 / e.ohms

    dvccs = netlist.dvccs()
    x_owner: dict[str, int] = {}
    for k, d in enumerate(dvccs):
        x = d.terminals.x
        if x in state_index:
            raise TopologyError(
                f"unsupported topology: capacitor on X node {x!r} of DVCC {d.name!r}")
        if x in x_owner:
            raise TopologyError(
                f"unsupported topology: X node {x!r} shared by multiple DVCCs")
        x_owner[x] = k
    for node in netlist.nodes:
        if node not in state_index and node not in x_owner:
            raise TopologyError(f"implicit node: {node!r} is neither a capacitor "
                                "node nor a DVCC X node")

    gx = np.zeros(len(dvccs))
    for e in netlist.elements:
        if isinstance(e, Resistor) and e.node in x_owner:
            gx[x_owner[e.node]] += 1.0 / e.ohms

    # Order conveyors so Y references to X nodes always point backwards.
    order = _resolution_order(dvccs, state_index, x_owner)
    pos = {k: i for i, k in enumerate(order)}

    def term_ref(node: str) -> int:
        if node == GROUND:
            return GROUND_REF
        if node in state_index:
            return state_index[node]
        return ns + pos[x_owner[node]]

    nd = len(dvccs)
    inj = np.zeros((ns, nd))
    y1_ref = np.zeros(nd, dtype=np.intc)
    y2_ref = np.zeros(nd, dtype=np.intc)
    beta1 = np.zeros(nd)
    beta2 = np.zeros(nd)
    vsat = np.zeros(nd)
    sat_kind = np.zeros(nd, dtype=np.intc)
    names = []
    for i, k in enumerate(order):
        d = dvccs[k]
        names.append(d.name)
        t, p = d.terminals, d.params
        y1_ref[i] = term_ref(t.y1)
        y2_ref[i] = term_ref(t.y2)
        beta1[i] = p.beta1
        beta2[i] = p.beta2
        vsat[i] = p.v_sat if p.sat_model is not SatModel.NONE else 1.0
        sat_kind[i] = _SAT_CODE[p.sat_model]
        # I_X = -Gx * V_X, and each Z terminal delivers -alpha*I_X to its node.
        for z_node, alpha in ((t.z1, p.alpha1), (t.z2, p.alpha2)):
            if z_node == GROUND:
                continue
            if z_node not in state_index:
                raise TopologyError(
                    f"unsupported topology: Z terminal of DVCC {d.name!r} on "
                    f"non-capacitor node {z_node!r}")
            inj[state_index[z_node], i] += alpha * gx[k]

    if netlist.probes:
        taps = tuple((pr.label, term_ref(pr.node)) for pr in netlist.probes)
    else:
        taps = tuple((node, i) for node, i in state_index.items())

    return StateSpace(
        state_names=tuple(state_index),
        cap=cap, gnd_g=gnd_g, inj=inj,
        dvcc_names=tuple(names),
        y1_ref=y1_ref, y2_ref=y2_ref,
        beta1=beta1, beta2=beta2, vsat=vsat, sat_kind=sat_kind,
        taps=taps,
    )


def _resolution_order(dvccs, state_index, x_owner) -> list[int]:
    """Topological order of conveyors along Y-to-X-node dependencies."""
    deps: list[list[int]] = []
    for d in dvccs:
        dd = []
        for y in (d.terminals.y1, d.terminals.y2):
            if y != GROUND and y not in state_index:
                dd.append(x_owner[y])
        deps.append(dd)
    order: list[int] = []
    mark = [0] * len(dvccs)  # 0 unvisited, 1 on stack, 2 done

    def visit(k: int):
        if mark[k] == 2:
            return
        if mark[k] == 1:
            raise TopologyError(
                f"implicit node: X voltage of DVCC {dvccs[k].name!r} depends on "
                "itself through Y terminals")
        mark[k] = 1
        for j in deps[k]:
            visit(j)
        mark[k] = 2
        order.append(k)

    for k in range(len(dvccs)):
        visit(k)
    return order


@dataclass(frozen=True)
class SimConfig:
    """Fixed-step integration settings.

    initial_state holds one voltage per state, in StateSpace order.
    """

    t_end: float
    dt: float
    initial_state: tuple[float, ...]
    record_stride: int = 1


def default_sim_config(ss: StateSpace, f0_estimate: float) -> SimConfig:
    """Defaults tuned for startup-to-steady-state oscillator runs.

    1000 steps per expected period, a 200-period horizon, and a 1 mV kick
    on the last-declared capacitor node.  Long enough for a 2% startup
    margin to grow from 1 mV to the saturation limit with a comfortable
    steady-state measurement window left over.
    """
    if not f0_estimate > 0:
        raise ValueError(f"f0_estimate must be positive, got {f0_estimate!r}")
    init = [0.0] * ss.n_states
    init[-1] = 1e-3
    return SimConfig(
        t_end=200.0 / f0_estimate,
        dt=1.0 / (1000.0 * f0_estimate),
        initial_state=tuple(init),
        record_stride=1,
    )


@dataclass(frozen=True)
class Waveform:
    """Uniformly sampled multi-channel time series."""

    t0: float
    dt: float
    channels: tuple[tuple[str, np.ndarray], ...]

    def __post_init__(self):
        if not self.dt > 0:
            raise ValueError(f"dt must be positive, got {self.dt!r}")
        lengths = {len(samples) for _, samples in self.channels}
        if len(lengths) != 1 or min(lengths) < 2:
            raise ValueError("channels must share one length >= 2")

    @property
    def n_samples(self) -> int:
        return len(self.channels[0][1])

    @property
    def labels(self) -> tuple[str, ...]:
        return tuple(label for label, _ in self.channels)

    def times(self) -> np.ndarray:
        return self.t0 + self.dt * np.arange(self.n_samples)

    def channel(self, label: str) -> np.ndarray:
        for name, samples in self.channels:
            if name == label:
                return samples
        raise KeyError(f"no channel {label!r}; have {self.labels}")


def simulate(ss: StateSpace, cfg: SimConfig, backend: str = "auto") -> Waveform:
    """Integrate with classical fixed-step RK4 and record the tap channels.

    Deterministic: identical inputs give bit-identical waveforms, on either
    backend.  Raises SimulationDiverged if the state leaves the finite
    range (the recorded samples are always finite).
    """
    if not cfg.dt > 0:
        raise ValueError(f"dt must be positive, got {cfg.dt!r}")
    if cfg.t_end < 100.0 * cfg.dt:
        raise ValueError(f"t_end must cover at least 100 steps, got {cfg.t_end!r}")
    if cfg.record_stride < 1:
        raise ValueError(f"record_stride must be >= 1, got {cfg.record_stride!r}")
    if len(cfg.initial_state) != ss.n_states:
        raise ValueError(f"initial_state needs {ss.n_states} entries, "
                         f"got {len(cfg.initial_state)}")
    if not all(math.isfinite(x) for x in cfg.initial_state):
        raise ValueError("initial_state must be finite")

    if backend == "auto":
        impl = _compiled if _compiled is not None else _pure
    elif backend == "compiled":
        if _compiled is None:
            raise RuntimeError("compiled kernel not available (extension not built)")
        impl = _compiled
    elif backend == "python":
        impl = _pure
    else:
        raise ValueError(f"backend must be auto|compiled|python, got {backend!r}")

    n_steps = int(round(cfg.t_end / cfg.dt))
    n_rec = n_steps // cfg.record_stride + 1
    out = np.empty((len(ss.taps), n_rec))
    state = np.array(cfg.initial_state, dtype=float)
    tap_refs = np.array([ref for _, ref in ss.taps], dtype=np.intc)
    fail = impl.rk4_run(ss.cap, ss.gnd_g, ss.inj, ss.y1_ref, ss.y2_ref,
                        ss.beta1, ss.beta2, ss.vsat, ss.sat_kind,
                        tap_refs, state, cfg.dt, n_steps, cfg.record_stride, out)
    if fail >= 0:
        raise SimulationDiverged((fail + 1) * cfg.dt, state)
    channels = tuple((label, out[i]) for i, (label, _) in enumerate(ss.taps))
    return Waveform(t0=0.0, dt=cfg.dt * cfg.record_stride, channels=channels)


def write_waveform_csv(w: Waveform, path) -> None:
    """CSV export: header ``t,<label...>``, 10 significant digits, SI units."""
    with open(path, "w") as fh:
        fh.write("t," + ",".join(w.labels) + "\n")
        times = w.times()
        arrays = [samples for _, samples in w.channels]
        for i in range(w.n_samples):
            row = [f"{times[i]:.9e}"] + [f"{a[i]:.9e}" for a in arrays]
            fh.write(",".join(row) + "\n")
