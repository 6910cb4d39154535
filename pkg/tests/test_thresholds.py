import mpmath
import numpy as np
import pytest

from ipsteleport.errors import AmbiguousRootError, DomainError
from ipsteleport.teleport import average_fidelity_closed, twb_average_fidelity
from ipsteleport.thresholds import (
    TWB_SECURE_X,
    ThresholdCurve,
    energy_crossing,
    improvement_gap,
    secure_window,
    security_gap,
    sign_change_brackets,
    threshold_curve,
    x_threshold,
    x_two_thirds,
)


def fidelity_mp(x, t):
    # independent high-precision evaluation of the summed fidelity
    x, t = mpmath.mpf(x), mpmath.mpf(t)
    first = (1 + x) * (1 + x * t) * (1 - x * x * t) / ((1 + x * x * t) * (1 + (1 - t) * x))
    second = (2 - 2 * x * t + x * x * t) / (2 - (2 + (1 - t) * x) * x * t)
    return first * second / 2


def test_gap_reference():
    assert improvement_gap(0.5, 0.9) == pytest.approx(0.8057571719440179 - 0.75, abs=1e-14)


def test_gap_negative_at_half():
    assert all(improvement_gap(x, 0.5) < 0 for x in np.linspace(0.01, 0.99, 99))


def test_gap_near_zero():
    # both fidelities tend to 1/2; the gap vanishes linearly in x
    g = improvement_gap(1e-6, 0.9)
    assert abs(g) < 1e-6 and g == pytest.approx(float(fidelity_mp(1e-6, 0.9) - (1 + mpmath.mpf(1e-6)) / 2), abs=1e-15)


class TestThreshold:
    def test_none_at_or_below_half(self):
        assert x_threshold(0.5) is None
        assert x_threshold(0.3) is None

    def test_diverges(self):
        vals = [x_threshold(t) for t in (0.9, 0.99, 0.999)]
        assert vals[0] < vals[1] < vals[2] and vals[2] > 0.9

    def test_straddles(self):
        r = x_threshold(0.9)
        assert 0 < r < 1
        assert improvement_gap(r - 1e-4, 0.9) > 0 > improvement_gap(r + 1e-4, 0.9)

    def test_matches_mpmath(self):
        ref = mpmath.findroot(lambda x: fidelity_mp(x, 0.9) - (1 + x) / 2, 0.7)
        assert x_threshold(0.9) == pytest.approx(float(ref), abs=1e-9)

    def test_domain(self):
        with pytest.raises(DomainError):
            x_threshold(0.0)


class TestTwoThirds:
    def test_unit(self):
        r = x_two_thirds(1.0)
        assert r < 1 / 3
        assert average_fidelity_closed(r, 1.0) == pytest.approx(2 / 3, abs=1e-9)

    def test_matches_mpmath(self):
        ref = mpmath.findroot(lambda x: fidelity_mp(x, 0.9) - mpmath.mpf(2) / 3, 0.2)
        r = x_two_thirds(0.9)
        assert r == pytest.approx(float(ref), abs=1e-9)
        assert r == pytest.approx(0.2075578197575133, abs=1e-9)


class TestWindow:
    def test_none_at_half(self):
        assert secure_window(0.5) is None

    def test_nonempty(self):
        lo, hi = secure_window(0.95)
        mid = 0.5 * (lo + hi)
        assert lo < TWB_SECURE_X
        assert average_fidelity_closed(mid, 0.95) > 2 / 3
        assert average_fidelity_closed(mid, 0.95) > twb_average_fidelity(mid)

    def test_security_consistency(self):
        for x in np.linspace(0.01, 0.99, 99):
            assert (twb_average_fidelity(x) > 2 / 3) == (x > 1 / 3)


class TestCurve:
    def test_monotone(self):
        grid = [0.55 + 0.05 * k for k in range(9)] + [0.99, 0.999]
        curve = threshold_curve(grid)
        assert all(v is not None for v in curve.x_th)
        assert np.all(np.diff(curve.x_th) > 0)

    def test_jobs_ordering(self):
        grid = [0.6, 0.9, 0.7]
        assert threshold_curve(grid, jobs=3) == threshold_curve(grid)

    def test_invariant_enforced(self):
        with pytest.raises(DomainError):
            ThresholdCurve((0.9,), (0.2,), (0.5,), ((0.5, 0.2),))

    def test_length_mismatch(self):
        with pytest.raises(DomainError):
            ThresholdCurve((0.9, 0.8), (0.2,), (0.1,), (None,))


class TestRoots:
    def test_ambiguous(self):
        with pytest.raises(AmbiguousRootError) as info:
            from ipsteleport.thresholds import _single_root

            _single_root(lambda x: (x - 0.2) * (x - 0.7), "test")
        assert len(info.value.brackets) == 2

    def test_brackets(self):
        assert len(sign_change_brackets(lambda x: x - 0.5)) == 1
        assert sign_change_brackets(lambda x: 1.0) == []

    def test_security_gap(self):
        assert security_gap(0.5, 0.9) == pytest.approx(0.8057571719440179 - 2 / 3)


class TestEnergy:
    def test_crossing_at_09(self):
        r = energy_crossing(0.9)
        assert r == pytest.approx(0.99600887, abs=1e-7)

    def test_no_crossing_at_unit(self):
        assert energy_crossing(1.0) is None
