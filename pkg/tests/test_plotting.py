from adaptive_robust.attack import IterationRecord
from adaptive_robust.plotting import plot_attack


def records():
    return [
        IterationRecord(i, 1.0, {"naive": 1.0 + 0.01 * i, "robust": 1.0}, {"naive": 0.001 * i, "robust": 0.002 * i})
        for i in range(1, 30)
    ]


def test_writes_three_pngs(tmp_path):
    paths = plot_attack(records(), tmp_path / "figs", prefix="run")
    assert [p.name for p in paths] == ["run_trajectory.png", "run_histogram.png", "run_runtime.png"]
    for p in paths:
        assert p.read_bytes()[:8] == b"\x89PNG\r\n\x1a\n"


def test_reproducible_bytes(tmp_path):
    a = plot_attack(records(), tmp_path / "a")
    b = plot_attack(records(), tmp_path / "b")
    assert [p.read_bytes() for p in a] == [p.read_bytes() for p in b]


def test_empty(tmp_path):
    assert plot_attack([], tmp_path) == []
