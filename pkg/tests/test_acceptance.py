"""End-to-end checks on the triadic set, run through the reproduction pipeline steps."""

import pytest

import main as pipeline


@pytest.mark.parametrize(
    "check",
    [
        pipeline.check_dimension,
        pipeline.check_measure_identity,
        pipeline.check_zero_sets,
        pipeline.check_increments,
        pipeline.check_local_constancy,
        pipeline.check_dimension_selection,
        pipeline.check_calculus,
    ],
)
def test_pipeline_step(check):
    ok, details = check()
    assert ok, details


def test_ultrametric_step():
    ok, details = pipeline.check_ultrametric(500)
    assert ok, details


def test_quick_run(monkeypatch, capsys):
    monkeypatch.setattr("sys.argv", ["main.py", "--quick"])
    assert pipeline.main() == 0
    out = capsys.readouterr().out
    assert "[8/8] Calculus" in out
    assert "✓ Pipeline completed successfully" in out
