import math

import pytest

from fanci_privacy.dataset import DomainSet
from fanci_privacy.errors import EmptyRecordsError
from fanci_privacy.evaluation import (TABLE_COLUMNS, ReconstructionRecord, build_report, categorize_domain,
                                      cell_means, cross_matrix, evaluate_pairing, feature_overlap,
                                      read_records, render_table, score, top_fraction_analysis,
                                      transfer_records, write_records)
from fanci_privacy.reconstructor import ModelConfig, build_model

TINY = ModelConfig(state_width=6, seed=1, max_seq_len=24)


def _rec(original, normalized):
    return ReconstructionRecord(original, "", 0, normalized)


def test_score_matches_metrics():
    r = score("ab.com", "ba.com")
    assert (r.edits, r.normalized) == (1, 1 / 6)


def test_cell_means_examples():
    same = [score(d, d) for d in ("a.com", "bb.org")]
    assert cell_means(same) == (0.0, 0.0)
    empty = [score(d, "") for d in ("a.com", "bb.org")]
    assert cell_means(empty)[1] == 1.0
    assert cell_means([_rec("x", 0.2), _rec("y", 0.6)])[1] == pytest.approx(0.4)


def test_evaluate_pairing_shapes():
    model = build_model(TINY)
    records, (edits, norm) = evaluate_pairing(model, ["abc.com", "1.2.3.4.in-addr.arpa"])
    assert [r.original for r in records] == ["abc.com", "1.2.3.4.in-addr.arpa"]
    assert 0 <= norm <= 1
    assert edits == sum(r.edits for r in records) / 2


def _sets():
    return {
        "a": DomainSet("a", ["ab.com", "xyz.org", "mail.foo.net"]),
        "b": DomainSet("b", ["ba.com", "qq.de", "4.3.2.1.in-addr.arpa", "zzz.com"]),
    }


def test_cross_matrix_shape_and_baseline():
    sets = _sets()
    models = {n: build_model(TINY) for n in sets}
    m = cross_matrix(models, sets)
    assert len(m.cells) == 4
    for (a, b), cell in m.cells.items():
        assert cell.count == len(sets[b])
        assert cell.baseline == (a == b)
        assert 0 <= cell.mean_normalized <= 1
        assert (cell.mean_edits, cell.mean_normalized) == cell_means(m.records[(a, b)])


def test_single_source_matrix_equals_pairing():
    s = DomainSet("only", ["ab.com", "xyz.org"])
    model = build_model(TINY)
    m = cross_matrix({"only": model}, {"only": s})
    _, means = evaluate_pairing(model, s)
    assert (m.cell("only", "only").mean_edits, m.cell("only", "only").mean_normalized) == means
    assert transfer_records(m) == m.records[("only", "only")]


def test_records_reaggregate(tmp_path):
    sets = _sets()
    m = cross_matrix({n: build_model(TINY) for n in sets}, sets)
    write_records(tmp_path / "r.json", m)
    back = read_records(tmp_path / "r.json")
    for key, recs in back.items():
        edits, norm = cell_means(recs)
        assert abs(norm - m.cells[key].mean_normalized) <= 1e-9
        assert abs(edits - m.cells[key].mean_edits) <= 1e-9


def test_overlap_collision_example(small_psl):
    # under the bundled list "ba" is itself a suffix, which sets contains_tld_as_infix
    o = feature_overlap({"x": ["ab.com"], "y": ["ba.com"]}, small_psl)
    assert o.intersections[("x", "y")] == 1
    assert o.pct_eval_unique[("x", "y")] == 100.0


def test_overlap_identical_sets(small_psl):
    d = ["ab.com", "ba.com", "abc.org"]
    o = feature_overlap({"x": d, "y": list(d)}, small_psl)
    assert o.intersections[("x", "y")] == o.unique["y"] == 2
    assert o.pct_eval_unique[("x", "y")] == 100.0
    assert o.pct_eval_samples[("x", "y")] == 100.0


def test_overlap_invariants(small_psl):
    o = feature_overlap(_sets(), small_psl)
    for (a, b), n in o.intersections.items():
        assert n == o.intersections[(b, a)]
        assert n <= min(o.unique[a], o.unique[b])
        assert 0 <= o.pct_eval_unique[(a, b)] <= 100
    for name, n in o.unique.items():
        assert n <= o.sizes[name]
    # ab.com and ba.com collide
    assert o.global_unique == 6
    assert o.common_to_all == 1


def test_top_fraction_examples():
    recs = [_rec(f"d{i}.com", i / 10) for i in range(10)]
    b = top_fraction_analysis(list(reversed(recs)), 0.1)
    assert b.selected == 1
    assert b.mean_normalized == 0.0
    assert b.mean_normalized <= b.overall_mean_normalized
    rev = [_rec(f"{i}.4.3.2.in-addr.arpa", 0.5) for i in range(5)]
    assert top_fraction_analysis(rev, 0.4).shares["reverse-lookup"] == 1.0


def test_top_fraction_rounds_up_and_breaks_ties():
    recs = [_rec("b.com", 0.1), _rec("a.com", 0.1), _rec("c.com", 0.0)]
    b = top_fraction_analysis(recs, 0.5)
    assert b.selected == 2  # ceil(1.5)
    assert math.isclose(b.mean_normalized, 0.05)
    assert sum(b.shares.values()) == pytest.approx(1.0)


def test_top_fraction_errors():
    with pytest.raises(EmptyRecordsError):
        top_fraction_analysis([], 0.1)
    with pytest.raises(ValueError):
        top_fraction_analysis([_rec("a.com", 0)], 0)


@pytest.mark.parametrize("domain,category", [
    ("4.3.2.1.in-addr.arpa", "reverse-lookup"),
    ("b.a.9.8.ip6.arpa", "reverse-lookup"),
    ("10.20.30.com", "reverse-lookup"),
    ("foo.dnsbl.example.org", "dns-service"),
    ("mx1.example.com", "dns-service"),
    ("mytypo.com", "other"),
])
def test_categorize(domain, category):
    assert categorize_domain(domain) == category


def test_categorize_custom_keywords():
    assert categorize_domain("mytypo.com", keywords=("typo",)) == "dns-service"


def test_report_columns_and_table():
    sets = _sets()
    m = cross_matrix({n: build_model(TINY) for n in sets}, sets)
    o = feature_overlap(sets)
    rep = build_report(m, o, top_fraction_analysis(transfer_records(m), 0.1))
    assert tuple(rep["columns"]) == TABLE_COLUMNS
    assert all(tuple(row) == TABLE_COLUMNS for row in rep["rows"])
    text = render_table(rep)
    assert text.splitlines()[0].split(" | ")[0].strip() == "Training"
    assert "*a" in text and "best 10%" in text
