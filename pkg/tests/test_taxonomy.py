import json
import random

import pytest

from transec.taxonomy import (
    CATEGORIES,
    SUBCATEGORIES,
    PatternLabel,
    UnknownPatternError,
    category_of,
    distribution_table,
    format_table,
    load_labels,
    validate_label,
)
from transec.metrics import round1


def make_labels(counts_by_sub, cwe="CWE-79", start=0):
    """counts_by_sub: {subcategory: n}; returns (labels, case->cwe map)."""
    labels, mapping = [], {}
    i = start
    for code, n in counts_by_sub.items():
        for _ in range(n):
            cid = f"case{i}"
            labels.append(PatternLabel(case_id=cid, subcategory=code))
            mapping[cid] = cwe
            i += 1
    return labels, mapping


class TestScheme:
    def test_five_categories_twenty_subcategories(self):
        assert len(CATEGORIES) == 5
        assert len(SUBCATEGORIES) == 20

    def test_every_subcategory_maps_to_a_category(self):
        for code in SUBCATEGORIES:
            assert category_of(code) in CATEGORIES

    def test_category_sizes(self):
        sizes = {}
        for code in SUBCATEGORIES:
            cat = category_of(code)
            sizes[cat] = sizes.get(cat, 0) + 1
        assert sizes == {"1": 4, "2": 4, "3": 4, "4": 5, "5": 3}

    def test_unknown_code_rejected_with_valid_codes_listed(self):
        with pytest.raises(UnknownPatternError, match="4.1"):
            validate_label(PatternLabel(case_id="c", subcategory="9.9"))


class TestLoadLabels:
    def test_round_trip(self, tmp_path):
        path = tmp_path / "labels.jsonl"
        path.write_text(
            json.dumps({"case_id": "c1", "subcategory": "1.2"}) + "\n"
            + json.dumps({"case_id": "c2", "subcategory": "4.5", "annotator_id": "a"})
            + "\n"
        )
        labels = load_labels(path)
        assert [l.subcategory for l in labels] == ["1.2", "4.5"]

    def test_bad_code_reports_line(self, tmp_path):
        path = tmp_path / "labels.jsonl"
        path.write_text(
            json.dumps({"case_id": "c1", "subcategory": "1.2"}) + "\n"
            + json.dumps({"case_id": "c2", "subcategory": "7.1"}) + "\n"
        )
        with pytest.raises(UnknownPatternError, match="line 2"):
            load_labels(path)


class TestDistributionTable:
    def test_columns_sum_to_100_full_precision(self):
        rng = random.Random(31)
        labels, mapping = [], {}
        i = 0
        for cwe in ("CWE-79", "CWE-89", "CWE-416"):
            for _ in range(rng.randint(5, 60)):
                cid = f"case{i}"
                labels.append(
                    PatternLabel(cid, rng.choice(list(SUBCATEGORIES)))
                )
                mapping[cid] = cwe
                i += 1
        table = distribution_table(labels, mapping)
        for cwe in table.cwes:
            col_sub = sum(table.subcategory_pct[c][cwe] for c in SUBCATEGORIES)
            col_cat = sum(table.category_pct[c][cwe] for c in CATEGORIES)
            assert col_sub == pytest.approx(100.0, abs=1e-9)
            assert col_cat == pytest.approx(100.0, abs=1e-9)
        assert sum(table.total_pct_cat.values()) == pytest.approx(100.0, abs=1e-9)

    def test_rounded_column_sums_near_100(self):
        rng = random.Random(32)
        labels, mapping = [], {}
        for i in range(137):
            cid = f"case{i}"
            labels.append(PatternLabel(cid, rng.choice(list(SUBCATEGORIES))))
            mapping[cid] = "CWE-22"
        table = distribution_table(labels, mapping)
        rounded = sum(round1(table.category_pct[c]["CWE-22"]) for c in CATEGORIES)
        assert abs(rounded - 100.0) <= 0.3

    def test_category_rows_are_subcategory_sums(self):
        counts = {"1.1": 3, "1.4": 2, "4.2": 5}
        labels, mapping = make_labels(counts)
        table = distribution_table(labels, mapping)
        assert table.category_pct["1"]["CWE-79"] == pytest.approx(50.0)
        assert table.category_pct["4"]["CWE-79"] == pytest.approx(50.0)
        assert table.subcategory_pct["1.1"]["CWE-79"] == pytest.approx(30.0)

    def test_memory_cwe_category_shares(self):
        # A memory-safety CWE column dominated by category 4, with the
        # remainder split between validation and API-usage patterns; the
        # full-precision category shares come out to 9.5 / 13.1 / 77.4.
        counts = {"1.1": 95, "3.2": 131, "4.1": 400, "4.3": 374}
        labels, mapping = make_labels(counts, cwe="CWE-416")
        table = distribution_table(labels, mapping)
        assert round1(table.category_pct["1"]["CWE-416"]) == 9.5
        assert round1(table.category_pct["3"]["CWE-416"]) == 13.1
        assert round1(table.category_pct["4"]["CWE-416"]) == 77.4
        assert table.category_pct["2"]["CWE-416"] == 0.0
        assert table.category_pct["5"]["CWE-416"] == 0.0

    def test_total_column_is_count_weighted(self):
        labels_a, map_a = make_labels({"1.1": 1}, cwe="CWE-79", start=0)
        labels_b, map_b = make_labels({"4.1": 3}, cwe="CWE-416", start=10)
        table = distribution_table(labels_a + labels_b, {**map_a, **map_b})
        # 1 of 4 labels overall is 1.1 -> 25%, not the 50% a per-CWE
        # average of (100%, 0%) would give.
        assert table.total_pct_sub["1.1"] == pytest.approx(25.0)
        assert table.total_pct_sub["4.1"] == pytest.approx(75.0)

    def test_unmapped_case_rejected(self):
        with pytest.raises(KeyError, match="case0"):
            distribution_table([PatternLabel("case0", "1.1")], {})

    def test_format_table_shape(self):
        labels, mapping = make_labels({"1.1": 2, "2.2": 1, "5.3": 1})
        text = format_table(distribution_table(labels, mapping))
        lines = text.strip().split("\n")
        # header + 5 category rows + 20 subcategory rows + counts + weighting note
        assert len(lines) == 1 + 5 + 20 + 1 + 1
        assert lines[0].split("\t") == ["pattern", "CWE-79", "Total"]
        assert lines[-1] == "# total_weighting=count_weighted"

    def test_single_label_is_100(self):
        labels, mapping = make_labels({"2.4": 1})
        table = distribution_table(labels, mapping)
        assert table.subcategory_pct["2.4"]["CWE-79"] == 100.0
