import json
import math
from pathlib import Path

import pytest

from vqakit.cli import main
from vqakit.report import flatten

FIXTURES = Path(__file__).parent / "fixtures"


def run(capsys, *argv):
    code = main(list(argv))
    captured = capsys.readouterr()
    return code, captured.out, captured.err


def run_report(capsys, *argv):
    code, out, err = run(capsys, *argv, "--no-timestamp")
    assert code == 0, err
    return json.loads(out)


class TestEvaluate:
    def test_perfect_predictions(self, capsys):
        report = run_report(
            capsys,
            "evaluate",
            "--dataset", str(FIXTURES / "dataset.json"),
            "--predictions", str(FIXTURES / "predictions_perfect.json"),
        )
        metrics = report["sections"]["metrics"]
        for k in range(1, 5):
            assert metrics[f"bleu@{k}"] == 1.0
        assert metrics["rouge_l"] == 1.0
        assert metrics["item_count"] == 12

    def test_oracle_corpus_hand_computed(self, capsys):
        report = run_report(
            capsys,
            "evaluate",
            "--dataset", str(FIXTURES / "oracle_dataset.json"),
            "--predictions", str(FIXTURES / "oracle_predictions.json"),
        )
        metrics = report["sections"]["metrics"]
        # frozen from a direct-formula hand computation of the 3-item corpus
        assert metrics["bleu@1"] == pytest.approx(2 / 3, abs=1e-9)
        assert metrics["bleu@2"] == 0.0
        assert metrics["bleu@3"] == 0.0
        assert metrics["bleu@4"] == 0.0
        assert metrics["rouge_l"] == pytest.approx(0.7227000925839847, abs=1e-9)
        assert metrics["meteor"] == pytest.approx(0.3979646084909243, abs=1e-9)
        assert metrics["cider"] == pytest.approx(0.05892556509887897, abs=1e-9)

    def test_types_and_groups(self, capsys):
        report = run_report(
            capsys,
            "evaluate",
            "--dataset", str(FIXTURES / "dataset.json"),
            "--predictions", str(FIXTURES / "predictions_perfect.json"),
            "--types", "--groups",
        )
        sections = report["sections"]
        assert set(sections["types"]) == {"text", "non_text"}
        assert sections["types"]["text"]["bleu@1"] == 1.0
        assert set(sections["groups"]) == {"question", "answer"}
        for group_report in sections["groups"]["answer"].values():
            assert group_report["bleu@1"] == 1.0
        assert all(0.0 <= v <= 1.0 for v in sections["repeat_rate"].values())

    def test_question_types_with_term_accuracy(self, capsys):
        report = run_report(
            capsys,
            "evaluate",
            "--dataset", str(FIXTURES / "dataset.json"),
            "--predictions", str(FIXTURES / "predictions_imperfect.json"),
            "--question-types",
        )
        qt = report["sections"]["question_types"]
        assert {"color", "quantity", "location"} <= set(qt)
        # q1 wrong color, q6 "xanh" canonicalizes to gold "xanh dương", q8 exact
        assert qt["color"]["term_accuracy"] == pytest.approx(2 / 3, abs=1e-12)
        # q2 exact; q4 gold has no quantity term; q11 predicts four vs gold three
        assert qt["quantity"]["term_accuracy"] == pytest.approx(1 / 3, abs=1e-12)
        assert "term_accuracy" not in qt["location"]

    def test_missing_qa_id_exits_2(self, capsys, tmp_path):
        bad = tmp_path / "preds.json"
        bad.write_text('[{"qa_id": "nope", "answer": "x"}]', encoding="utf-8")
        code, out, err = run(
            capsys,
            "evaluate",
            "--dataset", str(FIXTURES / "dataset.json"),
            "--predictions", str(bad),
        )
        assert code == 2
        assert "nope" in err

    def test_missing_file_exits_2(self, capsys):
        code, _, err = run(
            capsys,
            "evaluate",
            "--dataset", str(FIXTURES / "dataset.json"),
            "--predictions", "/does/not/exist.json",
        )
        assert code == 2
        assert "not found" in err


class TestAnalyze:
    def test_split_stats_match_hand_counts(self, capsys):
        report = run_report(capsys, "analyze", "--dataset", str(FIXTURES / "dataset.json"))
        splits = report["sections"]["splits"]
        assert splits["train"] == {"images": 2, "text": 2, "non_text": 4}
        assert splits["dev"] == {"images": 1, "text": 1, "non_text": 2}
        assert splits["test"] == {"images": 1, "text": 1, "non_text": 2}
        assert splits["total"] == {"images": 4, "text": 4, "non_text": 8}

    def test_length_histograms_count_every_record(self, capsys):
        report = run_report(capsys, "analyze", "--dataset", str(FIXTURES / "dataset.json"))
        hist = report["sections"]["length_histograms"]
        assert sum(hist["question"].values()) == 12
        assert sum(hist["answer"].values()) == 12

    def test_question_type_histogram(self, capsys):
        report = run_report(capsys, "analyze", "--dataset", str(FIXTURES / "dataset.json"))
        qt = report["sections"]["question_types"]
        assert qt["color"] == 3  # q1, q6, q8
        assert qt["quantity"] == 3  # q2, q4, q11
        assert qt["location"] == 2  # q3, q12
        assert qt["untyped"] == 4  # q5, q7, q9, q10

    def test_linguistics_section_with_parses(self, capsys):
        report = run_report(
            capsys,
            "analyze",
            "--dataset", str(FIXTURES / "dataset.json"),
            "--parses", str(FIXTURES / "parses.conllu"),
        )
        ling = report["sections"]["linguistics"]
        assert ling["levels"] == {"word": 1, "phrase": 1, "sentence": 1}
        assert ling["complexity"]["sentences"] == 3
        assert ling["complexity"]["word"]["min"] == 1
        assert ling["complexity"]["word"]["max"] == 4

    def test_without_parses_section_absent(self, capsys):
        report = run_report(capsys, "analyze", "--dataset", str(FIXTURES / "dataset.json"))
        assert "linguistics" not in report["sections"]

    def test_malformed_parse_names_line(self, capsys, tmp_path):
        bad = tmp_path / "bad.conllu"
        bad.write_text("1\tem\tN\tBAD\tsub\n", encoding="utf-8")
        code, _, err = run(
            capsys,
            "analyze",
            "--dataset", str(FIXTURES / "dataset.json"),
            "--parses", str(bad),
        )
        assert code == 2
        assert "line 1" in err


class TestAgreement:
    def test_unanimous(self, capsys):
        report = run_report(
            capsys, "agreement", "--ratings", str(FIXTURES / "ratings_unanimous.csv")
        )
        sections = report["sections"]
        assert sections["fleiss_kappa"] == 1.0
        assert sections["percent_agreement"] == 1.0
        assert sections["n_items"] == 3
        assert sections["n_annotators"] == 3
        assert sections["n_categories"] == 2

    def test_derived_case(self, capsys):
        report = run_report(
            capsys, "agreement", "--ratings", str(FIXTURES / "ratings_derived.csv")
        )
        assert report["sections"]["fleiss_kappa"] == pytest.approx(-1 / 3, abs=1e-12)
        assert report["sections"]["percent_agreement"] == 0.5

    def test_incomplete_rows_exit_2(self, capsys):
        code, _, err = run(
            capsys, "agreement", "--ratings", str(FIXTURES / "ratings_incomplete.csv")
        )
        assert code == 2
        assert "q2" in err


class TestKernelsSelfcheck:
    def test_default_run_passes(self, capsys):
        report = run_report(
            capsys, "kernels-selfcheck", "--grad-seeds", "2", "--random-cases", "10"
        )
        sections = report["sections"]
        assert sections["passed"] is True
        for entry in sections["gradients"].values():
            assert entry["max_relative_error"] < 1e-4

    def test_corrupted_weights_named(self, capsys, tmp_path):
        bad = tmp_path / "weights.json"
        bad.write_text(
            '{"w_q": {"shape": [4, 3], "data": ' + json.dumps([0.0] * 12) + "}}",
            encoding="utf-8",
        )
        code, _, err = run(
            capsys,
            "kernels-selfcheck", "--grad-seeds", "1", "--random-cases", "5",
            "--weights", str(bad),
        )
        assert code == 2
        assert "w_q" in err or "missing" in err

    def test_weight_bundle_roundtrip(self, capsys, tmp_path):
        import numpy as np

        from vqakit.kernels import init_mha_weights, save_bundle

        path = tmp_path / "weights.json"
        save_bundle(init_mha_weights(8, np.random.default_rng(3)), path)
        report = run_report(
            capsys,
            "kernels-selfcheck", "--grad-seeds", "1", "--random-cases", "5",
            "--weights", str(path),
        )
        assert report["sections"]["weight_bundle"]["forward_ok"] is True


class TestValidate:
    def test_compliant_dataset_has_zero_violations(self, capsys):
        report = run_report(capsys, "validate", "--dataset", str(FIXTURES / "dataset.json"))
        rules = report["sections"]["rules"]
        for name in ("min_qas_per_image", "single_word_answers",
                     "digit_written_quantities", "color_answers_outside_lexicon",
                     "unnormalized_prices"):
            assert rules[name]["count"] == 0, name

    def test_each_rule_fires(self, capsys):
        report = run_report(
            capsys, "validate", "--dataset", str(FIXTURES / "dataset_violations.json")
        )
        rules = report["sections"]["rules"]
        assert rules["min_qas_per_image"]["violations"] == [
            {"image_id": "imgA", "qa_count": 2}
        ]
        assert rules["single_word_answers"]["violations"] == [
            {"qa_id": "v1", "answer": "đỏ"}
        ]
        assert rules["digit_written_quantities"]["violations"] == [
            {"qa_id": "v2", "token": "3"}
        ]
        assert [v["qa_id"] for v in rules["color_answers_outside_lexicon"]["violations"]] == ["v3"]
        assert rules["unnormalized_prices"]["violations"] == [
            {"qa_id": "v4", "field": "answer"}
        ]


class TestDeterminismAndFormats:
    COMMANDS = [
        ("evaluate", ["--dataset", str(FIXTURES / "dataset.json"),
                      "--predictions", str(FIXTURES / "predictions_imperfect.json"),
                      "--groups", "--types"]),
        ("analyze", ["--dataset", str(FIXTURES / "dataset.json"),
                     "--parses", str(FIXTURES / "parses.conllu")]),
        ("agreement", ["--ratings", str(FIXTURES / "ratings_derived.csv")]),
        ("kernels-selfcheck", ["--grad-seeds", "1", "--random-cases", "5"]),
        ("validate", ["--dataset", str(FIXTURES / "dataset_violations.json")]),
    ]

    @pytest.mark.parametrize("command,argv", COMMANDS, ids=[c for c, _ in COMMANDS])
    def test_byte_identical_reports(self, command, argv, tmp_path, capsys):
        out_a = tmp_path / "a.json"
        out_b = tmp_path / "b.json"
        assert main([command, *argv, "--no-timestamp", "--out", str(out_a)]) == 0
        assert main([command, *argv, "--no-timestamp", "--out", str(out_b)]) == 0
        capsys.readouterr()
        assert out_a.read_bytes() == out_b.read_bytes()

    def test_timestamp_present_by_default(self, capsys):
        code, out, _ = run(
            capsys, "agreement", "--ratings", str(FIXTURES / "ratings_derived.csv")
        )
        assert code == 0
        assert "timestamp" in json.loads(out)

    def test_csv_and_json_numeric_content_identical(self, tmp_path, capsys):
        import csv as csv_mod

        argv = ["evaluate",
                "--dataset", str(FIXTURES / "dataset.json"),
                "--predictions", str(FIXTURES / "predictions_imperfect.json"),
                "--no-timestamp"]
        json_path = tmp_path / "r.json"
        csv_path = tmp_path / "r.csv"
        assert main([*argv, "--format", "json", "--out", str(json_path)]) == 0
        assert main([*argv, "--format", "csv", "--out", str(csv_path)]) == 0
        capsys.readouterr()
        report = json.loads(json_path.read_text(encoding="utf-8"))
        flat = {key: value for key, value in flatten(report)}
        with csv_path.open(encoding="utf-8", newline="") as fh:
            rows = list(csv_mod.reader(fh))
        assert rows[0] == ["key", "value"]
        csv_flat = {key: json.loads(value) for key, value in rows[1:]}
        assert csv_flat == flat
        numeric = {k: v for k, v in flat.items() if isinstance(v, float)}
        assert numeric  # the comparison actually covered numbers
        for key, value in numeric.items():
            assert math.isclose(csv_flat[key], value, rel_tol=0, abs_tol=0), key

    def test_summary_printed_when_out_given(self, tmp_path, capsys):
        out = tmp_path / "r.json"
        code, stdout, _ = run(
            capsys,
            "evaluate",
            "--dataset", str(FIXTURES / "dataset.json"),
            "--predictions", str(FIXTURES / "predictions_perfect.json"),
            "--out", str(out),
        )
        assert code == 0
        assert "bleu@1: 1.0000" in stdout
