"""Behavioral toolkit for DVCC-based grounded-component quadrature oscillators.

Submodules
----------
netlist    data model, text parser and renderer for the grounded-element class
dvcc       conveyor port relations, tracking gains, output saturation, stamps
mna        nodal system assembly, characteristic polynomial, oscillation test
theory     closed-form frequency/condition formulas, design, sensitivities
transient  state-space derivation and fixed-step RK4 simulation
waveform   frequency/THD/quadrature measurements on simulated waveforms
cli        command-line front end emitting JSON reports and CSV files
"""

__version__ = "0.1.0"

from .dvcc import DvccParams, SatModel, x_voltage, z_currents
from .mna import (AnalysisError, CharPoly, Growth, OscAnalysis, analyze,
                  build_mna, char_poly)
from .netlist import (Netlist, NetlistError, canonical_quadrature_netlist,
                      parse, render, validate)
from .theory import (DesignResult, OscParams, co_coeffs_ideal,
                     co_coeffs_nonideal, design_equal_amplitude, fo_ideal,
                     fo_nonideal, monte_carlo_f0, osc_params_from_netlist,
                     quadrature_relation, sensitivities_analytic,
                     sensitivity_fd)
from .transient import (SimConfig, SimulationDiverged, StateSpace,
                        TopologyError, Waveform, default_sim_config,
                        derive_state_space, kernel_backend, simulate,
                        write_waveform_csv)
from .waveform import (MeasurementError, QuadratureReport, Spectrum,
                       estimate_frequency, phase_and_ratio, quadrature_report,
                       spectrum, steady_state_window, thd, write_spectrum_csv)
