import math

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from oracles import hp_lambda0, propagate_nested, propagate_semi
from zenolink.analytic import lambda0, lambda1
from zenolink.protocol import (
    ABSORBED,
    CHANNEL_BOB_ONLY,
    D0,
    D1,
    Erasure,
    EnsembleStats,
    Kind,
    Label,
    ProtocolParams,
    TerminalEvent,
    Variant,
    decode,
    run_ensemble,
    run_exact,
    run_nested_exact,
    run_semi_exact,
    run_trial_mc,
    trial_stream,
)
from zenolink.quantum import ConfigurationError


def within_4_sigma(freq, p, n):
    sigma = math.sqrt(p * (1 - p) / n)
    return abs(freq - p) <= 4 * sigma if sigma > 0 else freq == p


class TestParams:
    def test_semi_normalizes_variant_and_m(self):
        p = ProtocolParams(Kind.SEMI, 3, 1, M=7, variant=Variant.MODIFIED)
        assert p.variant is Variant.ORIGINAL and p.M == 1

    @pytest.mark.parametrize("kw", [dict(N=0), dict(M=0), dict(bit=2), dict(kind="loop"), dict(variant="x")])
    def test_rejects_bad_values(self, kw):
        base = dict(kind="nested", N=2, bit=0, M=2, variant="original")
        base.update(kw)
        with pytest.raises(ConfigurationError):
            ProtocolParams(**base)

    def test_detection_events_carry_no_erasure(self):
        with pytest.raises(ConfigurationError):
            TerminalEvent(Label.D0, Erasure.BOTH)

    def test_decode_maps(self):
        assert decode(Kind.SEMI, Label.D1) == 0 and decode(Kind.SEMI, Label.D0) == 1
        assert decode(Kind.NESTED, Label.D0) == 0 and decode(Kind.NESTED, Label.D1) == 1
        assert decode(Kind.NESTED, Label.ABSORBED) is None


class TestSemiExact:
    def test_n2_bit1(self):
        d = run_semi_exact(2, 1)
        assert d.prob(D0) == pytest.approx(0.25, abs=1e-15)
        assert d.prob(ABSORBED) == pytest.approx(0.75, abs=1e-15)
        assert d.f_success == 2 and not d.channel_presence_on_success

    def test_n1_bit0(self):
        d = run_semi_exact(1, 0)
        assert d.prob(D1) == 1.0 and d.f_success == 0 and d.channel_presence_on_success

    def test_n25_bit1(self):
        # cos^50(pi/50) == lambda0(25)
        assert run_semi_exact(25, 1).prob(D0) == pytest.approx(float(hp_lambda0(25)), abs=1e-12)
        assert run_semi_exact(25, 1).prob(D0) == pytest.approx(0.9059591594, abs=1e-10)

    @pytest.mark.parametrize("N", [1, 2, 5, 17, 40])
    @pytest.mark.parametrize("bit", [0, 1])
    def test_matches_plain_propagation(self, N, bit):
        p0, p1, pa = propagate_semi(N, bit)
        d = run_semi_exact(N, bit)
        assert d.prob(D0) == pytest.approx(float(p0), abs=1e-12)
        assert d.prob(D1) == pytest.approx(float(p1), abs=1e-12)
        assert d.erasure == pytest.approx(float(pa), abs=1e-12)


class TestNestedExact:
    def test_m2_n2_bit0(self):
        d = run_nested_exact(2, 2, 0)
        assert d.prob(D0) == pytest.approx(0.25, abs=1e-15)
        assert d.prob(D1) == pytest.approx(0.0, abs=1e-15)
        assert d.prob(CHANNEL_BOB_ONLY) == pytest.approx(0.75, abs=1e-15)
        assert d.f_success == 2

    @pytest.mark.parametrize("variant", list(Variant))
    def test_m2_n2_bit1(self, variant):
        d = run_nested_exact(2, 2, 1, variant)
        assert d.prob(D1) == pytest.approx(0.140625, abs=1e-15)
        assert d.prob(D0) == pytest.approx(0.0625, abs=1e-15)
        assert d.prob(ABSORBED) == pytest.approx(0.796875, abs=1e-15)
        assert d.bit_error == d.prob(D0)
        assert d.f_success == 4
        assert d.prob(D1) == pytest.approx(lambda1(2, 2), abs=1e-15)

    @pytest.mark.parametrize("N", [1, 2, 9])
    def test_single_outer_cycle_bit0_never_succeeds(self, N):
        assert run_nested_exact(1, N, 0).prob(D0) == pytest.approx(0.0, abs=1e-30)

    @pytest.mark.parametrize("M,N", [(1, 1), (2, 3), (3, 5), (5, 2), (7, 7), (10, 4)])
    @pytest.mark.parametrize("bit", [0, 1])
    def test_matches_plain_propagation(self, M, N, bit):
        p0, p1, pe = propagate_nested(M, N, bit)
        d = run_nested_exact(M, N, bit)
        assert d.prob(D0) == pytest.approx(float(p0), abs=1e-12)
        assert d.prob(D1) == pytest.approx(float(p1), abs=1e-12)
        assert d.erasure == pytest.approx(float(pe), abs=1e-12)

    @settings(max_examples=40, deadline=None)
    @given(st.integers(1, 12), st.integers(1, 12), st.sampled_from([0, 1]), st.sampled_from(list(Variant)))
    def test_distribution_is_normalized(self, M, N, bit, variant):
        d = run_nested_exact(M, N, bit, variant)
        assert sum(d.probs.values()) == pytest.approx(1.0, abs=1e-12)
        assert all(-1e-15 <= p <= 1 + 1e-15 for p in d.probs.values())

    def test_modified_variant_relabels_erasure(self):
        orig = run_nested_exact(3, 4, 0, "original")
        mod = run_nested_exact(3, 4, 0, "modified")
        assert CHANNEL_BOB_ONLY in orig.probs and CHANNEL_BOB_ONLY not in mod.probs
        assert mod.prob(ABSORBED) == orig.prob(CHANNEL_BOB_ONLY)
        assert all(e.erasure_known_by is not Erasure.BOB_ONLY for e in mod.probs)

    def test_correct_detector_grows_with_cycles(self):
        vals = [run_nested_exact(k, k, 1).success for k in (2, 4, 8, 16, 32)]
        assert all(a <= b for a, b in zip(vals, vals[1:]))

    def test_correct_detector_approaches_one_with_many_inner_cycles(self):
        assert run_nested_exact(8, 256, 1).success > 0.9
        assert run_nested_exact(16, 512, 1).success > run_nested_exact(8, 256, 1).success

    @pytest.mark.parametrize("M", [2, 3, 5])
    def test_analytic_gap_shrinks_with_n(self, M):
        gaps = [abs(lambda1(M, N) - run_nested_exact(M, N, 1).prob(D1)) for N in (4, 8, 16, 32, 64)]
        assert all(a > b for a, b in zip(gaps, gaps[1:]))
        assert gaps[-1] < 1e-3

    @pytest.mark.parametrize("M", [1, 2, 3, 8, 32])
    def test_bit0_is_exactly_lambda0(self, M):
        for N in (1, 3, 8):
            assert run_nested_exact(M, N, 0).prob(D0) == pytest.approx(lambda0(M), abs=1e-12)


class TestMonteCarlo:
    def test_semi_n1_bit1_always_absorbed(self):
        params = ProtocolParams.semi(1, 1)
        for i in range(200):
            t = run_trial_mc(params, 3, i)
            assert t.event == ABSORBED and t.f == 1 and t.channel_visits == 1

    def test_semi_bit0_crosses_channel(self):
        params = ProtocolParams.semi(4, 0)
        t = run_trial_mc(params, 1, 0)
        assert t.event == D1 and t.f == 0 and t.channel_visits == 1

    def test_trial_is_deterministic(self):
        params = ProtocolParams.nested(3, 4, 1)
        assert [run_trial_mc(params, 99, i) for i in range(50)] == [run_trial_mc(params, 99, i) for i in range(50)]

    def test_trials_differ_across_indices(self):
        params = ProtocolParams.nested(2, 2, 1)
        assert len({(t.event, t.f) for t in (run_trial_mc(params, 5, i) for i in range(200))}) > 1

    def test_stream_depends_on_seed_and_index(self):
        a = trial_stream(1, 0).random(4)
        assert (a != trial_stream(1, 1).random(4)).all()
        assert (a != trial_stream(2, 0).random(4)).all()
        assert (a == trial_stream(1, 0).random(4)).all()

    @pytest.mark.parametrize(
        "params",
        [
            ProtocolParams.nested(2, 2, 1),
            ProtocolParams.nested(3, 5, 0, "modified"),
            ProtocolParams.nested(4, 3, 0),
            ProtocolParams.semi(3, 1),
            ProtocolParams.semi(3, 0),
        ],
    )
    def test_ensemble_replays_single_trials(self, params):
        """The batched ensemble path and the step-by-step trial agree trial by trial."""
        for i in range(300):
            t = run_trial_mc(params, 11, i)
            s = run_ensemble(params, 1, 11, first_index=i)
            assert s.counts == {t.event: 1}
            assert s.f_hist == {t.f: 1}
            assert s.channel_found == t.channel_visits

    def test_k1_matches_trial_outcome(self):
        params = ProtocolParams.nested(2, 3, 0)
        one = EnsembleStats(params, 4)
        one.add(run_trial_mc(params, 4, 0))
        assert run_ensemble(params, 1, 4) == one

    def test_merge_is_order_independent(self):
        params = ProtocolParams.nested(3, 3, 1)
        whole = run_ensemble(params, 3000, 8)
        a = run_ensemble(params, 1000, 8)
        b = run_ensemble(params, 2000, 8, first_index=1000)
        assert a.merge(b) == whole == b.merge(a)
        assert run_ensemble(params, 3000, 8, threads=4) == whole

    def test_threads_env_var(self, monkeypatch):
        params = ProtocolParams.nested(2, 2, 0)
        monkeypatch.setenv("ZENOLINK_THREADS", "3")
        assert run_ensemble(params, 500, 1) == run_ensemble(params, 500, 1, threads=1)

    def test_merge_rejects_mismatched_params(self):
        with pytest.raises(ConfigurationError):
            run_ensemble(ProtocolParams.nested(2, 2, 0), 1, 1).merge(run_ensemble(ProtocolParams.nested(2, 2, 1), 1, 1))

    def test_rejects_zero_trials(self):
        with pytest.raises(ConfigurationError):
            run_ensemble(ProtocolParams.nested(2, 2, 0), 0, 1)

    def test_nested_m2_n2_bit1_frequency(self):
        s = run_ensemble(ProtocolParams.nested(2, 2, 1), 100_000, 2024)
        assert within_4_sigma(s.frequency(D1), 0.140625, s.trials)

    def test_nested_m2_n2_bit0_epsilon(self):
        s = run_ensemble(ProtocolParams.nested(2, 2, 0), 100_000, 2024)
        assert within_4_sigma(s.epsilon_hat, 1 - lambda0(2), s.trials)

    def test_nested_m10_n20_bit1_success(self):
        params = ProtocolParams.nested(10, 20, 1)
        s = run_ensemble(params, 100_000, 77)
        assert within_4_sigma(s.successes / s.trials, run_exact(params).success, s.trials)

    def test_comparison_table_has_every_event(self):
        params = ProtocolParams.nested(2, 2, 0, "modified")
        rows = run_ensemble(params, 2000, 3).comparison()
        assert [r["event"] for r in rows] == ["D0", "D1", "AbsorbedByShutter", "channel_found"]
        assert all(abs(r["z"]) < 5 for r in rows)
