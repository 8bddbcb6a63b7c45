import numpy as np
import pytest
from hypothesis import given
from hypothesis import strategies as st

from phasekit.workflow import (
    PhaseLabel,
    PhaseTimeline,
    TransitionPair,
    all_transition_pairs,
    load_timelines,
    pair_for_phase,
    save_timelines,
    segment_boundaries,
)


class TestPhaseLabel:
    def test_valid_range(self):
        assert [PhaseLabel(i) for i in range(1, 8)] == [1, 2, 3, 4, 5, 6, 7]

    @pytest.mark.parametrize("bad", [0, 8, -1, 100])
    def test_out_of_range_rejected(self, bad):
        with pytest.raises(ValueError):
            PhaseLabel(bad)

    def test_behaves_as_int(self):
        assert PhaseLabel(3) + 1 == 4
        assert PhaseLabel(3) == 3


class TestTransitionPair:
    def test_exactly_six_pairs(self):
        pairs = all_transition_pairs()
        assert len(pairs) == 6
        assert pairs[0] == TransitionPair(1, 2)
        assert pairs[-1] == TransitionPair(6, 7)

    @pytest.mark.parametrize("low,high", [(1, 3), (2, 2), (7, 8), (0, 1), (3, 2)])
    def test_non_neighbors_rejected(self, low, high):
        with pytest.raises(ValueError):
            TransitionPair(low, high)

    def test_name_round_trip(self):
        for pair in all_transition_pairs():
            assert TransitionPair.from_name(pair.name) == pair

    def test_bad_names_rejected(self):
        for name in ("trans_12", "baseline", "trans_a_b", "trans_1_3"):
            with pytest.raises(ValueError):
                TransitionPair.from_name(name)


class TestPairForPhase:
    def test_phase_one(self):
        assert pair_for_phase(1) == TransitionPair(1, 2)

    def test_final_phase_reuses_last_pair(self):
        assert pair_for_phase(7) == TransitionPair(6, 7)

    def test_interior_phase(self):
        assert pair_for_phase(4) == TransitionPair(4, 5)

    @given(st.integers(min_value=1, max_value=7))
    def test_pair_brackets_phase(self, p):
        pair = pair_for_phase(p)
        assert pair.low <= p <= pair.high


class TestPhaseTimeline:
    def test_rejects_empty(self):
        with pytest.raises(ValueError):
            PhaseTimeline("v", [])

    def test_rejects_out_of_range(self):
        with pytest.raises(ValueError):
            PhaseTimeline("v", [1, 2, 9])

    def test_labels_read_only(self):
        t = PhaseTimeline("v", [1, 2, 3])
        with pytest.raises(ValueError):
            t.labels[0] = 5


class TestSegmentBoundaries:
    def test_single_change_point(self):
        t = PhaseTimeline("v", [1, 1, 2, 2])
        assert segment_boundaries(t) == [(2, 1, 2)]

    def test_constant_timeline(self):
        assert segment_boundaries(PhaseTimeline("v", [3, 3, 3])) == []

    def test_two_change_points(self):
        t = PhaseTimeline("v", [1, 2, 1])
        assert segment_boundaries(t) == [(1, 1, 2), (2, 2, 1)]

    @given(st.lists(st.integers(min_value=1, max_value=7), min_size=1, max_size=60))
    def test_count_matches_adjacent_unequal_pairs(self, labels):
        t = PhaseTimeline("v", labels)
        expected = sum(1 for a, b in zip(labels, labels[1:]) if a != b)
        assert len(segment_boundaries(t)) == expected


class TestTimelineIO:
    def test_round_trip(self, tmp_path):
        t1 = PhaseTimeline("a", [1, 1, 2, 7])
        t2 = PhaseTimeline("b", [3, 3])
        path = tmp_path / "gt.csv"
        save_timelines([t1, t2], path)
        loaded = load_timelines(path)
        assert set(loaded) == {"a", "b"}
        assert np.array_equal(loaded["a"].labels, t1.labels)
        assert np.array_equal(loaded["b"].labels, t2.labels)

    def test_header_required(self, tmp_path):
        path = tmp_path / "gt.csv"
        path.write_text("a,0,1\n")
        with pytest.raises(ValueError, match="header"):
            load_timelines(path)

    def test_error_names_line_number(self, tmp_path):
        path = tmp_path / "gt.csv"
        path.write_text("video_id,frame_idx,phase\na,0,1\na,1,banana\n")
        with pytest.raises(ValueError, match=":3:"):
            load_timelines(path)

    def test_comments_ignored(self, tmp_path):
        path = tmp_path / "gt.csv"
        path.write_text("# comment\nvideo_id,frame_idx,phase\n# another\na,0,4\n")
        assert np.array_equal(load_timelines(path)["a"].labels, [4])

    def test_empty_data_rejected(self, tmp_path):
        path = tmp_path / "gt.csv"
        path.write_text("video_id,frame_idx,phase\n")
        with pytest.raises(ValueError, match="no frames"):
            load_timelines(path)
