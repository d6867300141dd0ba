"""Shared fixtures and helpers for the test suite."""

import contextlib
import io
import math
import random

import numpy as np
import pytest

from dvccosc import DvccParams, Netlist, SatModel, canonical_quadrature_netlist
from dvccosc.netlist import Capacitor, Dvcc, Probe, Resistor, TerminalMap

# Reference design values: 2 kOhm / 1 kOhm / 10 pF / 20 pF.
R1, R2, C1, C2 = 2e3, 1e3, 10e-12, 20e-12

# Exact design frequency for those values, derived independently:
# sqrt(R1*R2*C1*C2) = sqrt(4e-16) = 2e-8 s, f0 = 1/(2*pi*2e-8) = 1e8/(4*pi).
EXACT_F0 = 1e8 / (4.0 * math.pi)


@pytest.fixture
def canonical_netlist() -> Netlist:
    return canonical_quadrature_netlist(R1, R2, C1, C2, DvccParams())


def run_cli(argv):
    """Run the CLI in-process; returns (exit_code, stdout, stderr)."""
    from dvccosc import cli

    out, err = io.StringIO(), io.StringIO()
    with contextlib.redirect_stdout(out), contextlib.redirect_stderr(err):
        code = cli.main(list(argv))
    return code, out.getvalue(), err.getvalue()


def random_valid_netlist(rng: random.Random) -> Netlist:
    """Generate an arbitrary netlist that passes validation.

    Covers plain RC networks and canonical-style conveyor circuits with
    random value magnitudes, gains, saturation models and probe sets.
    """
    def value(lo_exp, hi_exp):
        return 10.0 ** rng.uniform(lo_exp, hi_exp) * rng.uniform(1.0, 9.99)

    elements = []
    nodes = [f"n{k}" for k in range(1, rng.randint(2, 5))]
    for i, node in enumerate(nodes):
        elements.append(Capacitor(f"C{i + 1}", node, value(-13, -5)))
        if rng.random() < 0.7:
            elements.append(Resistor(f"R{i + 1}", node, value(1, 6)))
    if rng.random() < 0.6:
        xnode = "nx"
        elements.append(Resistor("RX", xnode, value(1, 6)))
        pick = lambda: rng.choice(nodes + ["0"])
        params = DvccParams(
            beta1=rng.uniform(0.5, 1.2),
            beta2=rng.uniform(0.5, 1.2),
            alpha1=rng.uniform(0.5, 1.2),
            alpha2=rng.uniform(0.5, 1.2),
            v_sat=value(-1, 1),
            sat_model=rng.choice(list(SatModel)),
        )
        elements.append(Dvcc(
            "X1", TerminalMap(y1=pick(), y2=pick(), x=xnode, z1=pick(), z2=pick()),
            params))
    probes = []
    for i, node in enumerate(rng.sample(nodes, rng.randint(0, len(nodes)))):
        probes.append(Probe(f"P{i + 1}", node))
    return Netlist(tuple(elements), tuple(probes))


def make_sine_wave(freqs_and_phases, fs, n, amplitude=1.0):
    """Multi-channel synthetic sinusoid Waveform on a uniform grid."""
    from dvccosc import Waveform

    t = np.arange(n) / fs
    channels = []
    for label, f, phase_deg in freqs_and_phases:
        channels.append(
            (label, amplitude * np.cos(2 * np.pi * f * t + math.radians(phase_deg))))
    return Waveform(t0=0.0, dt=1.0 / fs, channels=tuple(channels))
