import json

import pytest

from ipsteleport.errors import DomainError
from ipsteleport.sweep import (
    SweepSpec,
    format_value,
    preset,
    run_sweep,
    tau_eff_grid_fig5,
    x_grid_default,
)


class TestFormat:
    @pytest.mark.parametrize(
        "value,text",
        [
            (1 / 56, "0.0178571428571"),
            (0.6666666666665, "0.666666666667"),
            (0.5, "0.5"),
            (0.0, "0"),
            (None, ""),
            (1e-7 / 3, "3.33333333333e-8"),
            (2.5e6, "2.50000000000e+6"),
        ],
    )
    def test_values(self, value, text):
        assert format_value(value) == text

    def test_precision(self):
        assert format_value(1 / 3, 4) == "0.3333"


class TestSpec:
    def test_exactly_one_grid(self):
        with pytest.raises(DomainError):
            SweepSpec("p11", x=(0.5,), tau_eff=(0.8,), tau=(0.8,), eta=(1.0,))
        with pytest.raises(DomainError):
            SweepSpec("p11", x=(0.5,))

    def test_pair_needs_both(self):
        with pytest.raises(DomainError):
            SweepSpec("p11", x=(0.5,), tau=(0.8,))

    def test_x_range(self):
        with pytest.raises(DomainError):
            SweepSpec("p11", x=(0.0, 0.5), tau_eff=(0.8,))

    def test_unknown_quantity(self):
        with pytest.raises(DomainError):
            SweepSpec("energy", x=(0.5,), tau_eff=(0.8,))

    def test_unknown_preset(self):
        with pytest.raises(DomainError):
            preset("fig9")

    def test_grids(self):
        xs = x_grid_default()
        assert len(xs) == 99 and xs[0] == 0.01 and xs[-1] == 0.99
        assert tau_eff_grid_fig5()[-1] == 0.999


class TestPresets:
    def test_fig2_unit_column(self):
        res = run_sweep(preset("fig2"))
        unit = [r["p11"] for r in res.rows if r["tau_eff"] == 1.0]
        assert len(unit) == 99 and all(v == 0 for v in unit)

    def test_fig4_columns(self):
        res = run_sweep(preset("fig4"))
        assert res.columns == ["x", "tau_eff", "avg_fidelity", "twb_fidelity"]
        assert len(res.rows) == 4 * 99
        assert {r["tau_eff"] for r in res.rows} == {1.0, 0.9, 0.8, 0.5}
        assert all(r["twb_fidelity"] == pytest.approx((1 + r["x"]) / 2) for r in res.rows)

    def test_fig5_columns(self):
        res = run_sweep(preset("fig5", tau_eff=(0.5, 0.9, 1.0)))
        assert res.columns[:3] == ["tau_eff", "x_th", "x_23"]
        assert all(r["x_twb_secure"] == pytest.approx(1 / 3) for r in res.rows)
        assert res.rows[0]["x_th"] is None and res.rows[1]["x_th"] is not None


class TestOutput:
    def test_numerical_footer(self):
        spec = SweepSpec("p11", x=(0.2, 0.4), tau_eff=(0.8,), numerical=True)
        res = run_sweep(spec)
        text = res.to_csv()
        assert "# max_abs_dev p11_numerical:" in text
        assert all(r["p11_ok"] == "pass" for r in res.rows)
        assert res.max_deviations()["p11_numerical"] < 1e-8

    def test_json_mirrors_csv(self):
        spec = SweepSpec("delta_ab", x=(0.3, 0.5), tau_eff=(0.8, 0.9))
        res = run_sweep(spec)
        doc = json.loads(res.to_json())
        assert doc["metadata"]["quantity"] == "delta_ab"
        assert len(doc["rows"]) == 4
        assert doc["rows"][0]["delta_ab"] == float(format_value(res.rows[0]["delta_ab"]))

    def test_deterministic_across_jobs(self):
        spec = SweepSpec("mean_photons", x=tuple(x_grid_default()[:20]), tau_eff=(0.8, 0.9), numerical=True, max_dim=30)
        assert run_sweep(spec, jobs=1).to_csv() == run_sweep(spec, jobs=2).to_csv()

    def test_max_dim_skips(self):
        spec = SweepSpec("delta_ab", x=(0.95,), tau_eff=(0.9,), numerical=True, max_dim=10)
        row = run_sweep(spec).rows[0]
        assert row["delta_ab_numerical"] is None
