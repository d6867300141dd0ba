"""Nodal-system assembly, characteristic polynomial and oscillation tests.

The closed forms in dvccosc.theory act as the independent oracle for the
numeric determinant-interpolation route, and vice versa.
"""

import math

import numpy as np
import pytest

from conftest import C1, C2, R1, R2
from dvccosc import (AnalysisError, DvccParams, Growth, Netlist, OscParams,
                     analyze, build_mna, canonical_quadrature_netlist,
                     char_poly, co_coeffs_nonideal, fo_nonideal, parse)
from dvccosc.mna import CharPoly
from dvccosc.netlist import Capacitor, Resistor


class TestBuildMna:
    def test_single_resistor(self):
        n = Netlist((Resistor("R1", "n1", 50.0),))
        m = build_mna(n)
        np.testing.assert_array_equal(m.g, [[1.0 / 50.0]])
        np.testing.assert_array_equal(m.c, [[0.0]])

    def test_single_capacitor(self):
        n = Netlist((Capacitor("C1", "n1", 3e-9),))
        m = build_mna(n)
        np.testing.assert_array_equal(m.g, [[0.0]])
        np.testing.assert_array_equal(m.c, [[3e-9]])

    def test_canonical_matrix_exact(self):
        params = DvccParams(beta1=0.97, beta2=0.94, alpha1=0.92, alpha2=0.99)
        n = canonical_quadrature_netlist(R1, R2, C1, C2, params)
        m = build_mna(n)
        assert m.n == 4  # three nodes plus one conveyor branch
        assert m.labels == ("n1", "n2", "n3", "I_X(X1)")
        # Rows: KCL at n1, n2, n3 then the X-follower branch equation.
        expected_g = np.array([
            [1.0 / R1, 0.0, 0.0, params.alpha2],
            [0.0, 0.0, 0.0, params.alpha1],
            [0.0, 0.0, 1.0 / R2, 1.0],
            [-params.beta1, params.beta2, 1.0, 0.0],
        ])
        expected_c = np.zeros((4, 4))
        expected_c[0, 0] = C1
        expected_c[1, 1] = C2
        np.testing.assert_array_equal(m.g, expected_g)
        np.testing.assert_array_equal(m.c, expected_c)

    def test_y_terminals_contribute_nothing(self):
        # The Y-node KCL rows carry only the passive-element entries, no
        # conveyor conductance or current terms beyond the Z injections.
        n = canonical_quadrature_netlist(R1, R2, C1, C2, DvccParams())
        m = build_mna(n)
        assert m.g[0, 0] == 1.0 / R1 and m.g[0, 1] == 0.0 and m.g[0, 2] == 0.0
        assert m.g[1, 0] == 0.0 and m.g[1, 1] == 0.0 and m.g[1, 2] == 0.0


class TestCharPoly:
    def test_reference_design_values(self, canonical_netlist):
        poly = char_poly(canonical_netlist)
        assert poly.degree == 2
        a0, a1, a2 = poly.coeffs
        assert a2 == 1.0
        assert a1 == 0.0  # the marginal damping term trims to an exact zero
        assert a0 == pytest.approx(2.5e15, rel=1e-9)

    def test_unit_values(self):
        # Hand KCL with R1=R2=1, C1=C2=1: damping 1/1 + 1/1 - 1/1 = 1 and
        # constant term 1, so s^2 + s + 1.
        n = canonical_quadrature_netlist(1.0, 1.0, 1.0, 1.0, DvccParams())
        poly = char_poly(n)
        assert poly.coeffs[2] == 1.0
        assert poly.coeffs[1] == pytest.approx(1.0, rel=1e-9)
        assert poly.coeffs[0] == pytest.approx(1.0, rel=1e-9)

    def test_matches_closed_form_on_random_draws(self):
        rng = np.random.default_rng(99)
        for _ in range(50):
            r1, r2 = 10 ** rng.uniform(2, 5, 2)
            c1, c2 = 10 ** rng.uniform(-12, -6, 2)
            gains = rng.uniform(0.9, 1.0, 4)
            dp = DvccParams(beta1=gains[0], beta2=gains[1],
                            alpha1=gains[2], alpha2=gains[3])
            p = OscParams(r1, r2, c1, c2, dp)
            want_a1, want_a0 = co_coeffs_nonideal(p)
            got = char_poly(canonical_quadrature_netlist(r1, r2, c1, c2, dp))
            assert got.coeffs[1] == pytest.approx(want_a1, rel=1e-9)
            assert got.coeffs[0] == pytest.approx(want_a0, rel=1e-9)

    def test_evaluation_point_independence(self, canonical_netlist):
        default = char_poly(canonical_netlist)
        sigma = 1.0 / math.sqrt(R1 * R2 * C1 * C2)
        alternative = char_poly(canonical_netlist,
                                eval_points=[0.7 * sigma, 1.3 * sigma, 2.9 * sigma])
        assert alternative.coeffs[0] == pytest.approx(default.coeffs[0], rel=1e-9)
        assert abs(alternative.coeffs[1] - default.coeffs[1]) <= 1e-9 * math.sqrt(
            default.coeffs[0])

    def test_wrong_point_count_rejected(self, canonical_netlist):
        with pytest.raises(ValueError, match="evaluation points"):
            char_poly(canonical_netlist, eval_points=[1.0, 2.0])

    def test_impedance_scaling_leaves_omega0(self):
        k = 137.0
        base = analyze(char_poly(canonical_quadrature_netlist(R1, R2, C1, C2)))
        scaled = analyze(char_poly(canonical_quadrature_netlist(
            R1 * k, R2 * k, C1 / k, C2 / k)))
        assert scaled.omega0 == pytest.approx(base.omega0, rel=1e-12)

    def test_degree_one_network(self):
        poly = char_poly(parse("R1 n1 0 1k\nC1 n1 0 1u\n"))
        assert poly.degree == 1
        assert poly.coeffs[0] == pytest.approx(1000.0, rel=1e-9)

    def test_degenerate_network(self):
        # n3 appears only as a Y terminal: its KCL row is empty, so the
        # determinant vanishes identically.
        text = ("C1 n1 0 1p\nR1 n2 0 1k\n"
                "X1 DVCC Y1=n3 Y2=0 X=n2 Z1=n1 Z2=0\n")
        with pytest.raises(AnalysisError, match="degenerate"):
            char_poly(parse(text))

    def test_invalid_netlist_rejected(self):
        n = Netlist((Resistor("R1", "n1", 1e3),))
        with pytest.raises(Exception, match="no dynamic elements"):
            char_poly(n)

    def test_agrees_with_nonideal_frequency(self):
        rng = np.random.default_rng(4)
        for _ in range(20):
            r1, r2 = 10 ** rng.uniform(2, 5, 2)
            c1, c2 = 10 ** rng.uniform(-12, -6, 2)
            dp = DvccParams(beta2=rng.uniform(0.9, 1.0), alpha1=rng.uniform(0.9, 1.0))
            osc = analyze(char_poly(canonical_quadrature_netlist(r1, r2, c1, c2, dp)))
            want = 2 * math.pi * fo_nonideal(OscParams(r1, r2, c1, c2, dp))
            assert osc.omega0 == pytest.approx(want, rel=1e-9)


class TestAnalyze:
    def test_reference_marginal(self):
        osc = analyze(CharPoly((2.5e15, 0.0, 1.0)))
        assert osc.omega0 == pytest.approx(5e7, rel=1e-12)
        assert osc.f0 == pytest.approx(7.9577e6, rel=1e-4)
        assert osc.growth is Growth.MARGINAL
        assert osc.oscillates

    def test_decaying(self):
        osc = analyze(CharPoly((1.0, 1.0, 1.0)))
        assert osc.omega0 == 1.0
        assert osc.growth is Growth.DECAYING
        assert not osc.oscillates

    def test_growing(self):
        w0 = 5e7
        osc = analyze(CharPoly((w0 ** 2, -0.05 * w0, 1.0)))
        assert osc.growth is Growth.GROWING
        assert osc.oscillates

    def test_marginal_band_is_relative(self):
        w0 = 5e7
        assert analyze(CharPoly((w0 ** 2, 1e-7 * w0, 1.0))).growth is Growth.MARGINAL
        assert analyze(CharPoly((w0 ** 2, 1e-5 * w0, 1.0))).growth is Growth.DECAYING

    def test_wrong_degree_rejected(self):
        with pytest.raises(AnalysisError, match="unsupported order"):
            analyze(CharPoly((1.0, 1.0)))
        with pytest.raises(AnalysisError, match="unsupported order"):
            analyze(CharPoly((1.0, 1.0, 1.0, 1.0)))

    def test_no_oscillatory_pair_rejected(self):
        with pytest.raises(AnalysisError, match="no oscillatory pair"):
            analyze(CharPoly((-1.0, 0.5, 1.0)))

    def test_tied_y_terminals_never_oscillate(self):
        # Y1 = Y2 kills the differential drive: with ideal gains the X
        # voltage is pinned at zero, the loop opens, and the polynomial
        # factors as s * (s + 1/(R1*C1)): no oscillatory root pair.
        n = parse(
            "R1 n1 0 2k\nC1 n1 0 10p\nC2 n2 0 20p\nR2 n3 0 1k\n"
            "X1 DVCC Y1=n1 Y2=n1 X=n3 Z1=n2 Z2=n1 sat=none\n")
        poly = char_poly(n)
        assert poly.coeffs[0] == 0.0
        assert poly.coeffs[1] == pytest.approx(1.0 / (R1 * C1), rel=1e-9)
        with pytest.raises(AnalysisError, match="no oscillatory pair"):
            analyze(poly)
