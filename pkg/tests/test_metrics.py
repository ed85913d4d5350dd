from __future__ import annotations

import random
from functools import lru_cache
from itertools import product

import pytest
from hypothesis import given, strategies as st

from promptprobe.errors import (
    EmptyReference,
    EmptyTemplateList,
    IncompleteMatrix,
    ZeroPerf,
    ZeroReferenceLength,
)
from promptprobe.metrics import (
    CellResult,
    EditCounts,
    TemplateMetrics,
    UtterancePrediction,
    WerMatrix,
    average_metrics,
    bperf,
    compute_template_metrics,
    edit_distance,
    macro_wer,
    matrix_from_dict,
    matrix_to_dict,
    micro_wer,
    perf,
    relative_improvement,
    row_argmins,
    tfr,
)

from conftest import (
    FIG_BPERF,
    FIG_PERF,
    FIG_ROW_ARGMIN,
    FIG_TFR,
    fig_matrix,
    random_matrix,
)


def oracle_distance(ref: tuple, hyp: tuple) -> int:
    """Independent top-down recursion over the edit recurrence."""

    @lru_cache(maxsize=None)
    def go(i: int, j: int) -> int:
        if i == 0:
            return j
        if j == 0:
            return i
        sub = go(i - 1, j - 1) + (0 if ref[i - 1] == hyp[j - 1] else 1)
        dele = go(i - 1, j) + 1
        ins = go(i, j - 1) + 1
        return min(sub, dele, ins)

    return go(len(ref), len(hyp))


token = st.sampled_from(("a", "b", "c"))
ref_seq = st.lists(token, min_size=1, max_size=6).map(tuple)
hyp_seq = st.lists(token, min_size=0, max_size=6).map(tuple)


class TestEditDistance:
    def test_identity(self):
        c = edit_distance(("a", "b", "c"), ("a", "b", "c"))
        assert (c.substitutions, c.deletions, c.insertions) == (0, 0, 0)

    def test_table3_pair(self):
        ref = ("let's", "趁", "机", "take", "some", "pictures")
        hyp = ("let's", "genji", "take", "some", "pictures")
        c = edit_distance(ref, hyp)
        assert c.total == 2 and c.ref_len == 6
        assert (c.substitutions, c.deletions, c.insertions) == (1, 1, 0)

    def test_total_deletion(self):
        c = edit_distance(("a", "b"), ())
        assert (c.substitutions, c.deletions, c.insertions) == (0, 2, 0)

    def test_empty_reference_rejected(self):
        with pytest.raises(EmptyReference):
            edit_distance((), ("a",))

    def test_tie_break_prefers_substitution(self):
        # one sub + one del, never two-step paths that avoid substitution
        c = edit_distance(("a", "b"), ("x",))
        assert (c.substitutions, c.deletions, c.insertions) == (1, 1, 0)

    @given(ref_seq, hyp_seq)
    def test_matches_recursion_oracle(self, ref, hyp):
        c = edit_distance(ref, hyp)
        assert c.total == oracle_distance(ref, hyp)
        assert c.substitutions + c.deletions <= c.ref_len

    @given(ref_seq, ref_seq)
    def test_zero_iff_equal(self, a, b):
        assert (edit_distance(a, b).total == 0) == (a == b)

    @given(ref_seq, ref_seq)
    def test_total_symmetric_under_swap(self, a, b):
        f = edit_distance(a, b)
        g = edit_distance(b, a)
        assert f.total == g.total
        # deletions minus insertions is pinned by the length difference
        assert f.deletions - f.insertions == len(a) - len(b)
        assert g.deletions - g.insertions == len(b) - len(a)

    @given(ref_seq, ref_seq, ref_seq)
    def test_triangle_inequality(self, a, b, c):
        assert edit_distance(a, c).total <= edit_distance(a, b).total + edit_distance(b, c).total


class TestMicroWer:
    def test_table3_rate(self):
        assert micro_wer([EditCounts(1, 1, 0, 6)]) == pytest.approx(2 / 6, abs=1e-4)

    def test_all_zero(self):
        assert micro_wer([EditCounts(0, 0, 0, 5)] * 3) == 0.0

    def test_hand_sum(self):
        # (1 edit / ref 2) and (0 edits / ref 1) -> 1/3
        assert micro_wer([EditCounts(1, 0, 0, 2), EditCounts(0, 0, 0, 1)]) == pytest.approx(1 / 3)

    def test_can_exceed_one(self):
        assert micro_wer([EditCounts(0, 0, 7, 3)]) > 1.0

    def test_zero_ref_len(self):
        with pytest.raises(ZeroReferenceLength):
            micro_wer([])

    def test_permutation_invariant(self):
        rng = random.Random(3)
        counts = [
            EditCounts(rng.randint(0, 3), rng.randint(0, 2), rng.randint(0, 2), rng.randint(5, 9))
            for _ in range(20)
        ]
        shuffled = counts[:]
        rng.shuffle(shuffled)
        assert micro_wer(counts) == micro_wer(shuffled)

    def test_macro_differs_from_micro(self):
        counts = [EditCounts(1, 0, 0, 1), EditCounts(0, 0, 0, 9)]
        assert micro_wer(counts) == pytest.approx(0.1)
        assert macro_wer(counts) == pytest.approx(0.5)


class TestMatrixMetrics:
    def test_fig_fixture_values(self):
        m = fig_matrix()
        assert perf(m) == pytest.approx(FIG_PERF)
        assert bperf(m) == pytest.approx(FIG_BPERF)
        assert tfr(m) == FIG_TFR
        assert row_argmins(m) == FIG_ROW_ARGMIN

    def test_fig_selection_matches_enumeration(self):
        # enumerate all per-row selections; the gathered minimum must equal bperf
        m = fig_matrix()
        best = min(
            micro_wer([c for i, j in enumerate(pick) for c in m.cells[i][j].counts()])
            for pick in product(range(4), repeat=4)
        )
        assert bperf(m) == pytest.approx(best)

    def test_diag_zero_perf(self):
        m = fig_matrix()
        assert perf(m) == pytest.approx(micro_wer([c for i in range(4) for c in m.cells[i][i].counts()]))

    def test_bperf_equals_perf_when_diagonal_minimal(self):
        preds = lambda s, e: (UtterancePrediction(f"{s}", ("x",), EditCounts(e, 0, 0, 4)),)
        topics = ("a", "b")
        cells = (
            (CellResult("a", "a", preds("a", 0)), CellResult("a", "b", preds("a", 2))),
            (CellResult("b", "a", preds("b", 3)), CellResult("b", "b", preds("b", 1))),
        )
        m = WerMatrix("t", topics, cells)
        assert bperf(m) == perf(m) and tfr(m) == 1.0

    def test_bperf_below_perf_with_off_diagonal_minima(self):
        preds = lambda s, e: (UtterancePrediction(f"{s}", ("x",), EditCounts(e, 0, 0, 4)),)
        topics = ("a", "b")
        cells = (
            (CellResult("a", "a", preds("a", 2)), CellResult("a", "b", preds("a", 1))),
            (CellResult("b", "a", preds("b", 0)), CellResult("b", "b", preds("b", 3))),
        )
        m = WerMatrix("t", topics, cells)
        assert bperf(m) < perf(m)
        assert tfr(m) == 0.0

    def test_tie_prefers_diagonal(self):
        preds = lambda s, e: (UtterancePrediction(f"{s}", ("x",), EditCounts(e, 0, 0, 4)),)
        cells = (
            (CellResult("a", "a", preds("a", 1)), CellResult("a", "b", preds("a", 1))),
        )
        m = WerMatrix("t", ("a",), ((cells[0][0],),))
        assert row_argmins(m) == (0,)

    def test_incomplete_matrix_rejected(self):
        preds = (UtterancePrediction("u", ("x",), EditCounts(0, 0, 0, 1)),)
        with pytest.raises(IncompleteMatrix):
            WerMatrix("t", ("a", "b"), ((CellResult("a", "a", preds),),))

    def test_empty_cell_rejected(self):
        with pytest.raises(IncompleteMatrix):
            WerMatrix("t", ("a",), ((CellResult("a", "a", ()),),))

    def test_mislabeled_cell_rejected(self):
        preds = (UtterancePrediction("u", ("x",), EditCounts(0, 0, 0, 1)),)
        with pytest.raises(IncompleteMatrix):
            WerMatrix("t", ("a",), ((CellResult("b", "a", preds),),))


class TestMatrixProperties:
    def test_random_matrices(self):
        rng = random.Random(12345)
        for _ in range(300):
            m = random_matrix(rng)
            p, b, f = perf(m), bperf(m), tfr(m)
            assert b <= p
            n = m.size
            assert abs(f * n - round(f * n)) < 1e-9
            if f == 1.0:
                assert b == p


class TestRelativeImprovement:
    @pytest.mark.parametrize(
        "p,b,expected_pct",
        [(0.1563, 0.1492, 5), (0.2355, 0.2269, 4), (0.0550, 0.0490, 11)],
    )
    def test_reported_rows(self, p, b, expected_pct):
        assert abs(relative_improvement(p, b) * 100 - expected_pct) <= 0.5

    def test_equal_is_zero(self):
        assert relative_improvement(0.2, 0.2) == 0.0

    def test_zero_perf_rejected(self):
        with pytest.raises(ZeroPerf):
            relative_improvement(0.0, 0.0)


class TestAverages:
    def _tm(self, tid, p, b, f):
        return TemplateMetrics(tid, p, b, f, (0,))

    def test_single_template(self):
        avg = average_metrics([self._tm("t", 0.2, 0.1, 0.5)])
        assert (avg.perf, avg.bperf, avg.tfr) == (0.2, 0.1, 0.5)

    def test_two_templates(self):
        avg = average_metrics([self._tm("a", 0.2, 0.1, 0.2), self._tm("b", 0.4, 0.3, 0.3)])
        assert avg.tfr == pytest.approx(0.25)

    def test_ten_template_hand_sum(self):
        rng = random.Random(9)
        ms = [self._tm(f"t{i}", rng.random(), rng.random(), rng.random()) for i in range(10)]
        avg = average_metrics(ms)
        assert avg.perf == pytest.approx(sum(t.perf for t in ms) / 10)
        assert avg.bperf == pytest.approx(sum(t.bperf for t in ms) / 10)
        assert avg.tfr == pytest.approx(sum(t.tfr for t in ms) / 10)

    def test_empty_rejected(self):
        with pytest.raises(EmptyTemplateList):
            average_metrics([])


class TestMatrixDump:
    def test_round_trip(self):
        m = fig_matrix()
        again = matrix_from_dict(matrix_to_dict(m))
        assert again == m

    def test_metrics_survive_round_trip(self):
        rng = random.Random(5)
        for _ in range(20):
            m = random_matrix(rng)
            again = matrix_from_dict(matrix_to_dict(m))
            assert compute_template_metrics(again) == compute_template_metrics(m)
