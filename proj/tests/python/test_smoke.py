"""Smoke tests of the python bindings against the built extension module."""

import pytest

import hamsys


KAC_KREIN = {
    "n": 2,
    "interval": {"kind": "half-line-positive", "a": 0},
    "J": [["0", "1"], ["-1", "0"]],
    "H": [["1", "0"], ["0", "1"]],
    "label": "smoke",
}


def test_version_and_registry():
    assert hamsys.__version__
    registry = hamsys.criteria_registry()
    assert len(registry) >= 18
    ids = {c["id"] for c in registry}
    assert "line-self-adjoint" in ids
    assert "sl-scalar" in ids


def test_load_and_validate():
    p = hamsys.load_dict(KAC_KREIN)
    assert p.is_system
    assert p.n == 2
    report = p.validate()
    assert report["pass"]


def test_deficiency_and_rank():
    p = hamsys.load_dict(KAC_KREIN)
    n_plus, n_minus, N_plus, N_minus = p.deficiency_indices(tmax_exponent=10)
    assert (n_plus, n_minus) == (1, 1)
    assert (N_plus, N_minus) == (1, 1)
    rank, stabilized = p.rank()
    assert rank == 2 and stabilized
    assert p.is_definite()


def test_criterion_evaluation():
    p = hamsys.load_dict(KAC_KREIN)
    verdict = p.evaluate_criterion("canonical-maximal")
    assert verdict["status"] == "fails"
    assert verdict["equivalence"] is True
    verdict = p.evaluate_criterion("halfline-minimal")
    assert verdict["status"] == "holds"


def test_full_analysis_report():
    p = hamsys.load_dict(KAC_KREIN)
    report = p.analyze(tmax_exponent=10)
    assert report["validation"]["pass"]
    assert report["deficiency"]["n_plus"] == 1
    assert report["conjugation_identity"]["max_defect"] <= 1e-7
    assert isinstance(report["criteria"], list)


def test_sturm_liouville_path():
    sl = {
        "n": 1,
        "interval": {"kind": "half-line-positive", "a": 0},
        "A": [["1"]],
        "Q": [["0"]],
        "R": [["0"]],
        "H": [["(1+x)^-4"]],
    }
    p = hamsys.load_dict(sl)
    assert not p.is_system
    verdict = p.evaluate_criterion("sl-scalar")
    assert verdict["status"] == "holds"
    assert verdict["extra"]["indices"] == 2
    n_plus, n_minus, _, _ = p.deficiency_indices(tmax_exponent=10)
    assert (n_plus, n_minus) == (2, 2)


def test_examples_roundtrip():
    ids = hamsys.examples()
    assert len(ids) >= 9
    report = hamsys.run_example("ml-s2.2")
    assert report["example"]["pass"]


def test_errors_are_typed():
    with pytest.raises(hamsys.SpecError):
        hamsys.load("{}")
    with pytest.raises(hamsys.SpecError):
        p = hamsys.load_dict(KAC_KREIN)
        p.evaluate_criterion("sl-scalar")
