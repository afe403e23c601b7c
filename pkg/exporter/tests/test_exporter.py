import io
import json
import subprocess
import sys

import numpy as np
import pytest

from falign_exporter import ExportError, export_attributions

FEATURES = [
    "Flow Duration",
    "SYN Flag Count",
    "Flow Bytes/s",
    "Destination Port",
    "ACK Flag Count",
    "Active Mean",
]

# 10 deterministic instances: 6 scan-like, 4 flood-like
IDS = [f"r{i:02d}" for i in range(10)]
TRUE = ["scan"] * 6 + ["flood"] * 4
PRED = ["scan"] * 5 + ["flood"] + ["flood"] * 4  # r05 misclassified
MATRIX = [
    [0.10, 0.90, -0.20, 0.70, 0.05, -0.01],
    [0.15, 0.80, -0.10, 0.60, 0.02, 0.03],
    [0.05, 0.85, 0.30, 0.75, -0.04, 0.02],
    [0.20, 0.70, -0.25, 0.65, 0.01, -0.05],
    [0.12, 0.95, 0.15, 0.55, 0.03, 0.04],
    [0.30, 0.20, 0.10, 0.40, 0.02, 0.01],
    [0.90, 0.10, 0.80, -0.05, 0.60, 0.02],
    [0.85, 0.05, 0.75, 0.10, 0.55, -0.03],
    [0.95, 0.15, 0.85, -0.20, 0.65, 0.01],
    [0.80, 0.20, 0.70, 0.05, 0.50, 0.04],
]

CATALOG = {
    "version": 1,
    "classes": [
        {"name": "scan", "aliases": [], "attack_refs": ["T1046"],
         "features": ["SYN Flag Count", "Destination Port"]},
        {"name": "flood", "aliases": [], "attack_refs": ["T1498"],
         "features": ["Flow Duration", "Flow Bytes/s", "ACK Flag Count"]},
    ],
}


def falign_cli(*args):
    return subprocess.run(
        [sys.executable, "-m", "falign", *args], capture_output=True, text=True
    )


def export_fixture_text() -> str:
    buf = io.StringIO()
    count = export_attributions(MATRIX, FEATURES, TRUE, PRED, IDS, buf)
    assert count == 10
    return buf.getvalue()


def hand_authored_text() -> str:
    # the same ten records, written out independently of the exporter
    lines = []
    for instance_id, true_class, predicted, row in zip(IDS, TRUE, PRED, MATRIX):
        record = {
            "id": instance_id,
            "true_class": true_class,
            "predicted_class": predicted,
            "attributions": [
                {"feature": feature, "value": value}
                for feature, value in zip(FEATURES, row)
            ],
        }
        lines.append(json.dumps(record, indent=None, separators=(",", ":")))
    return "\n".join(lines) + "\n"


class TestExportAttributions:
    def test_one_line_per_instance_with_all_features(self):
        buf = io.StringIO()
        export_attributions([[0.1, 0.2, 0.3], [0.4, 0.5, 0.6]], ["a", "b", "c"],
                            ["x", "x"], ["x", "x"], ["i1", "i2"], buf)
        lines = buf.getvalue().splitlines()
        assert len(lines) == 2
        first = json.loads(lines[0])
        assert [a["feature"] for a in first["attributions"]] == ["a", "b", "c"]
        assert [a["value"] for a in first["attributions"]] == [0.1, 0.2, 0.3]

    def test_values_never_reordered_or_rescaled(self):
        text = export_fixture_text()
        for line, row in zip(text.splitlines(), MATRIX):
            payload = json.loads(line)
            assert [a["value"] for a in payload["attributions"]] == row

    def test_shape_mismatch_rejected(self):
        buf = io.StringIO()
        with pytest.raises(ExportError, match="shape"):
            export_attributions([[0.1, 0.2]], ["a", "b", "c"], ["x"], ["x"], ["i1"], buf)
        with pytest.raises(ExportError, match="row mismatch"):
            export_attributions([[0.1], [0.2]], ["a"], ["x"], ["x", "y"], ["i1", "i2"], buf)

    def test_non_finite_value_names_instance_and_feature(self):
        buf = io.StringIO()
        matrix = [[0.1, float("nan")]]
        with pytest.raises(ExportError) as err:
            export_attributions(matrix, ["a", "b"], ["x"], ["x"], ["i9"], buf)
        assert "i9" in str(err.value) and "'b'" in str(err.value)

    def test_multiclass_selects_predicted_class_matrix(self):
        per_class = {
            "x": np.array([[1.0, 2.0], [3.0, 4.0]]),
            "y": np.array([[-1.0, -2.0], [-3.0, -4.0]]),
        }
        buf = io.StringIO()
        export_attributions(per_class, ["a", "b"], ["x", "x"], ["x", "y"], ["i1", "i2"], buf)
        rows = [json.loads(l) for l in buf.getvalue().splitlines()]
        assert [a["value"] for a in rows[0]["attributions"]] == [1.0, 2.0]
        assert [a["value"] for a in rows[1]["attributions"]] == [-3.0, -4.0]

    def test_multiclass_missing_matrix_rejected(self):
        with pytest.raises(ExportError, match="predicted class"):
            export_attributions({"x": [[0.1]]}, ["a"], ["x"], ["z"], ["i1"], io.StringIO())


class TestCriterion10RoundTrip:
    @pytest.fixture()
    def paths(self, tmp_path):
        exported = tmp_path / "exported.jsonl"
        exported.write_text(export_fixture_text(), encoding="utf-8")
        manual = tmp_path / "manual.jsonl"
        manual.write_text(hand_authored_text(), encoding="utf-8")
        catalog = tmp_path / "catalog.json"
        catalog.write_text(json.dumps(CATALOG), encoding="utf-8")
        return exported, manual, catalog

    def test_criterion_10_exporter_round_trip(self, paths, tmp_path):
        exported, manual, catalog = paths

        validated = falign_cli("validate", "--explanations", str(exported), "--catalog", str(catalog))
        assert validated.returncode == 0, validated.stdout + validated.stderr

        results = {}
        for label, source in (("exported", exported), ("manual", manual)):
            out = tmp_path / f"out_{label}"
            proc = falign_cli(
                "evaluate", "--explanations", f"m={source}", "--catalog", str(catalog),
                "--k", "1,2,3,4,5,6", "--out", str(out),
            )
            assert proc.returncode == 0, proc.stdout + proc.stderr
            doc = json.loads((out / "results.json").read_text(encoding="utf-8"))
            results[label] = {
                (p["metric"], p["level"], p["subject"], p["k"]): p["value"]
                for p in doc["models"]["m"]["points"]
            }

        assert results["exported"].keys() == results["manual"].keys()
        assert len(results["exported"]) > 0
        for key, value in results["exported"].items():
            assert abs(value - results["manual"][key]) <= 1e-12, key
