"""Sleep metrics: one fully hand-checked night plus algebraic identities."""
from __future__ import annotations

import json

import numpy as np
import pytest

from floss.errors import EmptyRecording, NoSleepDetected
from floss.mobility import TimeInBed
from floss.sleepstats import SleepStats, compute_stats, write_stats

# W, W, N1, N2, un, N2, W, N2, REM, W at 30 s per epoch
NIGHT = np.array([0, 0, 1, 2, -1, 2, 0, 2, 4, 0])


@pytest.fixture(scope="module")
def stats():
    return compute_stats(NIGHT, epoch_len_s=30.0)


@pytest.fixture(scope="module")
def nights():
    rng = np.random.default_rng(123)
    out = []
    while len(out) < 50:
        s = rng.choice([-1, 0, 1, 2, 3, 4], size=rng.integers(4, 240))
        if np.isin(s, [1, 2, 3, 4]).any():
            out.append(s)
    return out


class TestWorkedExample:
    def test_period_and_totals(self, stats):
        assert stats.spt_min == pytest.approx(3.5)
        assert stats.tst_min == pytest.approx(2.5)
        assert stats.tib_min == pytest.approx(5.0)

    def test_stage_minutes(self, stats):
        assert stats.n1_min == pytest.approx(0.5)
        assert stats.n2_min == pytest.approx(1.5)
        assert stats.n3_min == pytest.approx(0.0)
        assert stats.rem_min == pytest.approx(0.5)
        assert stats.nrem_min == pytest.approx(2.0)

    def test_stage_percentages(self, stats):
        assert stats.n1_pct == pytest.approx(20.0)
        assert stats.n2_pct == pytest.approx(60.0)
        assert stats.n3_pct == pytest.approx(0.0)
        assert stats.rem_pct == pytest.approx(20.0)
        assert stats.nrem_pct == pytest.approx(80.0)

    def test_wake_metrics(self, stats):
        assert stats.waso_min == pytest.approx(0.5)
        assert stats.psw_min == pytest.approx(0.5)

    def test_latencies(self, stats):
        assert stats.sol_min == pytest.approx(1.0)
        assert stats.n1_latency_min == pytest.approx(1.0)
        assert stats.n2_latency_min == pytest.approx(1.5)
        assert stats.n3_latency_min is None
        assert stats.rem_latency_min == pytest.approx(4.0)

    def test_efficiency(self, stats):
        assert stats.se_pct == pytest.approx(50.0)
        assert stats.sme_pct == pytest.approx(100 * 2.5 / 3.5)
        assert stats.scorable_pct == pytest.approx(90.0)

    def test_no_tib_means_no_lights_fields(self, stats):
        assert stats.lights_out_sec is None
        assert stats.lights_on_sec is None


class TestWithTimeInBed:
    def test_latencies_shift_by_lights_out(self):
        tib = TimeInBed(lights_out_s=30.0, lights_on_s=299.0, tib_min=270 / 60)
        stats = compute_stats(NIGHT, epoch_len_s=30.0, tib=tib)
        assert stats.lights_out_sec == pytest.approx(30.0)
        assert stats.lights_on_sec == pytest.approx(299.0)
        assert stats.tib_min == pytest.approx(4.5)
        assert stats.sol_min == pytest.approx((2 * 30 - 30) / 60)
        assert stats.rem_latency_min == pytest.approx((8 * 30 - 30) / 60)
        assert stats.se_pct == pytest.approx(100 * 2.5 / 4.5)

    def test_psw_stops_at_lights_on(self):
        # the trailing wake epoch starts at 270 s, on or after lights on
        tib = TimeInBed(lights_out_s=0.0, lights_on_s=270.0, tib_min=4.5)
        stats = compute_stats(NIGHT, epoch_len_s=30.0, tib=tib)
        assert stats.psw_min == pytest.approx(0.0)


class TestIdentities:
    def test_stage_percentages_sum_to_100(self, nights):
        for s in nights:
            st = compute_stats(s)
            total = st.n1_pct + st.n2_pct + st.n3_pct + st.rem_pct
            assert total == pytest.approx(100.0)
            assert st.nrem_pct + st.rem_pct == pytest.approx(100.0)

    def test_nrem_is_stage_sum(self, nights):
        for s in nights:
            st = compute_stats(s)
            assert st.nrem_min == pytest.approx(st.n1_min + st.n2_min + st.n3_min)

    def test_spt_bounds_tst_plus_waso(self, nights):
        # SPT = TST + WASO + unscorable time inside the sleep period
        for s in nights:
            st = compute_stats(s)
            assert st.spt_min >= st.tst_min + st.waso_min - 1e-9
            if not (s == -1).any():
                assert st.spt_min == pytest.approx(st.tst_min + st.waso_min)

    def test_efficiency_definitions(self, nights):
        for s in nights:
            st = compute_stats(s)
            assert st.se_pct == pytest.approx(100 * st.tst_min / st.tib_min)
            assert st.sme_pct == pytest.approx(100 * st.tst_min / st.spt_min)
            assert 0 < st.sme_pct <= 100 + 1e-9

    def test_epoch_length_scales_minutes(self):
        a = compute_stats(NIGHT, epoch_len_s=30.0)
        b = compute_stats(NIGHT, epoch_len_s=60.0)
        assert b.tst_min == pytest.approx(2 * a.tst_min)
        assert b.spt_min == pytest.approx(2 * a.spt_min)
        assert b.n2_pct == pytest.approx(a.n2_pct)


class TestErrors:
    def test_empty_scores(self):
        with pytest.raises(EmptyRecording):
            compute_stats(np.array([], dtype=np.int64))

    def test_all_wake_night(self):
        with pytest.raises(NoSleepDetected):
            compute_stats(np.array([0, 0, -1, 0]))


class TestSerialization:
    def test_key_names_and_omissions(self):
        d = compute_stats(NIGHT).to_dict()
        expected = {
            "Scorable_%", "TIB_min", "SPT_min", "TST_min",
            "N1_min", "N1_%", "N2_min", "N2_%", "N3_min", "N3_%",
            "REM_min", "REM_%", "NREM_min", "NREM_%",
            "WASO_min", "SOL_min",
            "N1_latency_min", "N2_latency_min", "REM_latency_min",
            "PSW_min", "SE_%", "SME_%",
        }
        assert set(d) == expected  # no lights fields, no N3 latency
        assert all(isinstance(v, float) for v in d.values())

    def test_lights_fields_present_with_tib(self):
        tib = TimeInBed(lights_out_s=0.0, lights_on_s=299.0, tib_min=5.0)
        d = compute_stats(NIGHT, tib=tib).to_dict()
        assert d["Lights_out_sec"] == 0.0
        assert d["Lights_on_sec"] == 299.0

    def test_write_round_trip(self, tmp_path):
        stats = compute_stats(NIGHT)
        path = tmp_path / "stats.json"
        write_stats(stats, path)
        assert json.loads(path.read_text()) == stats.to_dict()
        assert path.read_text().endswith("\n")

    def test_field_order_matches_declaration(self):
        tib = TimeInBed(lights_out_s=0.0, lights_on_s=299.0, tib_min=5.0)
        d = compute_stats(np.array([0, 1, 2, 3, 4, 0]), tib=tib).to_dict()
        assert list(d) == [
            "Lights_out_sec", "Lights_on_sec", "Scorable_%", "TIB_min",
            "SPT_min", "TST_min", "N1_min", "N1_%", "N2_min", "N2_%",
            "N3_min", "N3_%", "REM_min", "REM_%", "NREM_min", "NREM_%",
            "WASO_min", "SOL_min", "N1_latency_min", "N2_latency_min",
            "N3_latency_min", "REM_latency_min", "PSW_min", "SE_%", "SME_%",
        ]
