"""Pipeline plumbing: dispatch, reproduction interface, serialization."""
import json

import pytest

from sigma_energy.config import default_config
from sigma_energy import pipelines as pl


def test_command_dispatch_rejects_unknown():
    with pytest.raises(ValueError):
        pl.run_command("transmogrify", default_config())


def test_case_registry_covers_spec_list():
    names = set(pl.case_names())
    required = {
        "identity-ratio", "alpha-join-ratio", "faddeev-minimizer-k2",
        "faddeev-minimizer-k4", "hopf-critical", "henon-critical",
        "nomizu-k1", "threshold-kappa1", "yano-identity",
        "newton-inequality", "conformal-invariance-m4", "degree-table",
    }
    assert required <= names


def test_unknown_case_raises():
    with pytest.raises(ValueError):
        pl.reproduce_case("nonexistent", default_config())


def test_case_reports_embed_claims():
    cfg = default_config()
    for name in ("identity-ratio", "henon-critical", "degree-table"):
        case = pl.reproduce_case(name, cfg)
        assert case.name == name
        assert len(case.claim) > 40          # a sentence, not a stub
        assert case.values and case.targets
        d = case.to_dict()
        json.dumps(d, sort_keys=True)        # JSON-clean
        assert d["claim"] == case.claim


def test_reproduce_single_exit_code_and_summary():
    res = pl.run_reproduce(default_config(), case="identity-ratio")
    assert res.exit_code == 0
    assert res.report["passed"] is True
    summary = res.tables[0]
    assert summary.name == "summary"
    assert ("identity-ratio", "pass") in summary.rows


def test_failed_case_yields_exit_code_2(monkeypatch):
    def failing(cfg):
        return pl.CaseResult("broken", "a deliberately failing check",
                             False, {"got": 0.0}, {"want": 1.0})

    monkeypatch.setitem(pl._CASES, "broken", failing)
    res = pl.run_reproduce(default_config(), case="broken")
    assert res.exit_code == 2
    assert res.report["passed"] is False
    assert ("broken", "FAIL") in res.tables[0].rows


def test_faddeev_case_reports_expected_fields():
    case = pl.reproduce_case("faddeev-minimizer-k2", default_config())
    assert case.passed
    assert case.values["q"] == pytest.approx(1.0, abs=1e-6)
    assert case.values["attained"] is True or case.values["attained"]


def test_to_jsonable_handles_numpy_and_bools():
    import numpy as np
    out = pl.to_jsonable({
        "f": np.float64(1.5), "i": np.int32(2), "b": np.bool_(True),
        "arr": np.arange(3), "nan": np.float64("nan"), "t": (1, 2),
    })
    assert out == {"f": 1.5, "i": 2, "b": True, "arr": [0, 1, 2],
                   "nan": None, "t": [1, 2]}
    assert isinstance(out["b"], bool)
    text = json.dumps(out, sort_keys=True)
    assert "true" in text


def test_table_csv_rendering():
    tab = pl.Table("demo", ("a", "b"), ((1, 2.5), (3, 4.0)))
    csv = tab.to_csv()
    lines = csv.strip().splitlines()
    assert lines[0] == "a,b"
    assert lines[1] == "1,2.5"


def test_minimize_plot_series_are_two_or_three_columns():
    cfg = default_config().override_text(
        {"map.k": "2", "map.l": "1", "minimize.max_iter": "30",
         "minimize.n_prof": "81"})
    res = pl.run_minimize(cfg)
    names = [p.name for p in res.plotdata]
    assert names == ["ratio_history", "residual_history", "profile"]
    for plot in res.plotdata:
        assert len(plot.header) in (2, 3)
        assert all(len(row) == len(plot.header) for row in plot.rows)


def test_build_map_honors_squash_and_radius():
    cfg = default_config().override(
        map__family="alpha_hopf", map__alpha="double", map__k=2, map__l=1,
        map__squash_k=2, map__squash_l=1)
    m = pl.build_map(cfg)
    assert "hopf_squash" in m.domain.name
    cfg2 = default_config().override(map__family="identity", radius=2.0)
    m2 = pl.build_map(cfg2)
    assert m2.domain.radius == pytest.approx(2.0)
