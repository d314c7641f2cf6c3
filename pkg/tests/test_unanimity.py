"""Exact threshold-profile solver tests for must-fill games.

Uniform quality on [0.5, 0.8] at even odds gives the reference profile:
both thresholds 0.4, completion probabilities 64/225 and 0.64, utility
16/90.  Everything here avoids the grid solver except the sweep helper,
which is allowed to fall back to it for three or more players.
"""

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from cascadefund.beliefs import QualitySpec, TypeDistribution
from cascadefund.unanimity import (
    DelegationReport,
    asymmetric_profiles,
    completion_prob_unanimity,
    delegation_analysis,
    delegation_pattern,
    hazard_J,
    J_monotone_segments,
    profile_discriminator,
    profile_utility,
    social_insurance_check,
    solve_unanimity,
    sweep_profiles,
    symmetric_threshold,
)
from cascadefund.unanimity import _member_residual


class TestReferenceProfile:
    def test_two_player_thresholds(self, dist_u58):
        prof = solve_unanimity(1.0, dist_u58, 2)
        for x in prof.thresholds:
            assert x == pytest.approx(0.4, abs=1e-10)
        assert prof.kinds == ("interior", "interior")

    def test_two_player_completion_and_utility(self, dist_u58):
        prof = solve_unanimity(1.0, dist_u58, 2)
        assert prof.pi0 == pytest.approx(64.0 / 225.0, abs=1e-9)
        assert prof.pi1 == pytest.approx(0.64, abs=1e-9)
        assert prof.utility == pytest.approx(16.0 / 90.0, abs=1e-9)

    def test_symmetric_root(self, dist_u58):
        assert symmetric_threshold(1.0, dist_u58, 2) == pytest.approx(0.4, abs=1e-10)

    def test_interior_residuals_vanish(self, dist_u58):
        prof = solve_unanimity(1.0, dist_u58, 2)
        for r in prof.residuals:
            assert abs(r) <= 1e-9

    def test_discriminators_agree_at_symmetry(self, dist_u58):
        prof = solve_unanimity(1.0, dist_u58, 2)
        d0, d1 = prof.discriminators
        assert d0 == pytest.approx(d1, rel=1e-9)

    def test_single_player_is_clipped_posterior(self, dist_u58):
        for L in (0.1, 0.3, 1.0, 3.0, 10.0):
            prof = solve_unanimity(L, dist_u58, 1)
            want = float(np.clip(1.0 / (1.0 + L), dist_u58.lo, dist_u58.hi))
            assert prof.thresholds == (want,)

    def test_to_dict_round_trip_fields(self, dist_u58):
        doc = solve_unanimity(1.0, dist_u58, 2).to_dict()
        assert set(doc) == {"L", "thresholds", "kinds", "pi0", "pi1", "utility"}


class TestHerdRegions:
    def test_dead_region_exact(self, dist_u58):
        prof = solve_unanimity(0.0624, dist_u58, 2)
        assert prof.thresholds == (dist_u58.hi, dist_u58.hi)
        assert prof.pi0 == 0.0 and prof.pi1 == 0.0
        assert all(k == "herd_decline" for k in prof.kinds)
        # Declining is weakly dominant there: residual cannot favor entry.
        assert all(r <= 0 for r in prof.residuals)

    def test_just_above_dead_bound_is_live(self, dist_u58):
        prof = solve_unanimity(0.0626, dist_u58, 2)
        assert all(k == "interior" for k in prof.kinds)
        assert 0.0 < prof.pi1 < 1e-5

    def test_up_cascade_exact(self, dist_u58):
        prof = solve_unanimity(4.1, dist_u58, 2)
        assert prof.thresholds == (dist_u58.lo, dist_u58.lo)
        assert prof.pi0 == 1.0 and prof.pi1 == 1.0
        assert all(k == "herd_invest" for k in prof.kinds)
        assert all(r >= 0 for r in prof.residuals)


class TestProfileFunctions:
    def test_completion_is_permutation_invariant(self, dist_u58):
        a = completion_prob_unanimity(dist_u58, (0.3, 0.5))
        b = completion_prob_unanimity(dist_u58, (0.5, 0.3))
        assert a == b

    def test_utility_is_permutation_invariant_for_two(self, dist_u58):
        a = profile_utility(dist_u58, 1.0, (0.3, 0.5))
        b = profile_utility(dist_u58, 1.0, (0.5, 0.3))
        assert a == pytest.approx(b, rel=1e-12)

    def test_hazard_closed_form(self, dist_u58):
        # x/(1-x) times the decline-to-invest tail ratio: at 0.4 both
        # tails are uniform so the value is (2/3)*(2/3).
        assert hazard_J(dist_u58, 0.4) == pytest.approx(4.0 / 9.0, rel=1e-12)

    @given(x=st.floats(0.21, 0.79))
    @settings(max_examples=60, deadline=None)
    def test_discriminator_matches_direct_formula(self, x):
        # Member 1's score pits the rival's continuation tail against the
        # rival's tremble, so member 1's own threshold drops out.
        dist = TypeDistribution(QualitySpec.uniform(0.5, 0.8))
        L = 1.3
        got = profile_discriminator(dist, L, (x, 0.45), 1)
        want = L * dist.sf(1, x) ** 2 - dist.sf(0, x) ** 2
        assert got == pytest.approx(want, rel=1e-9, abs=1e-12)

    def test_discriminator_three_members(self, dist_u58):
        L, xs = 1.2, (0.3, 0.45, 0.6)
        T1 = [dist_u58.sf(1, v) for v in xs]
        T0 = [dist_u58.sf(0, v) for v in xs]
        want = max(
            L * T1[j] * T1[1] * T1[2] - T0[j] * T0[1] * T0[2] for j in (1, 2)
        )
        assert profile_discriminator(dist_u58, L, xs, 0) == pytest.approx(
            want, rel=1e-12
        )


class TestLadderDepth:
    def test_three_player_residuals(self, dist_u58):
        prof = solve_unanimity(2.0, dist_u58, 3)
        for i in range(3):
            assert abs(_member_residual(dist_u58, 2.0, prof.thresholds, i)) <= 1e-9

    def test_three_player_pi_ordering(self, dist_u58):
        prof = solve_unanimity(2.0, dist_u58, 3)
        assert prof.pi1 > prof.pi0

    @given(L=st.floats(0.3, 3.9))
    @settings(max_examples=20, deadline=None)
    def test_two_player_system_solves(self, L):
        dist = TypeDistribution(QualitySpec.uniform(0.5, 0.8))
        prof = solve_unanimity(L, dist, 2)
        for i, kind in enumerate(prof.kinds):
            r = _member_residual(dist, L, prof.thresholds, i)
            if kind == "interior":
                assert abs(r) <= 1e-8
            elif kind == "herd_invest":
                assert r >= -1e-9
            else:
                assert r <= 1e-9


class TestAsymmetric:
    def test_even_odds_has_only_symmetric(self, dist_u58):
        profs = asymmetric_profiles(1.0, dist_u58, 2)
        assert len(profs) == 1
        x0, x1 = profs[0].thresholds
        assert x0 == pytest.approx(0.4, abs=1e-9)
        assert x1 == pytest.approx(0.4, abs=1e-9)

    def test_solver_picks_highest_utility_profile(self, dist_u658):
        for L in (0.9, 1.6, 2.4):
            profs = asymmetric_profiles(L, dist_u658, 2)
            sol = solve_unanimity(L, dist_u658, 2)
            gaps = [
                max(
                    abs(a - b)
                    for a, b in zip(sorted(p.thresholds), sorted(sol.thresholds))
                )
                for p in profs
            ]
            assert min(gaps) <= 1e-7
            assert sol.utility >= max(p.utility for p in profs) - 1e-9

    def test_asymmetric_beats_symmetric_when_present(self, dist_u658):
        profs = asymmetric_profiles(0.9, dist_u658, 2)
        assert len(profs) == 2
        sym = min(profs, key=lambda p: abs(p.thresholds[0] - p.thresholds[1]))
        asym = max(profs, key=lambda p: abs(p.thresholds[0] - p.thresholds[1]))
        assert asym.utility > sym.utility

    def test_profiles_are_valid_equilibria(self, dist_u658):
        for prof in asymmetric_profiles(1.6, dist_u658, 2):
            for i, kind in enumerate(prof.kinds):
                r = _member_residual(dist_u658, 1.6, prof.thresholds, i)
                if kind == "interior":
                    assert abs(r) <= 1e-7
                elif kind == "herd_invest":
                    assert r >= -1e-7
                else:
                    assert r <= 1e-7


class TestHazardSegments:
    def test_wide_uniform_is_single_increasing(self, dist_u58):
        segs = J_monotone_segments(dist_u58)
        assert len(segs) == 1
        assert segs[0][2] == 1

    def test_narrow_uniform_dips_then_rises(self, dist_u758):
        segs = J_monotone_segments(dist_u758)
        assert len(segs) == 2
        (a0, b0, s0), (a1, b1, s1) = segs
        assert (s0, s1) == (-1, 1)
        # The turn sits at the bottom of the upper support interval.
        assert b0 == pytest.approx(1.0 - dist_u758.spec.R, abs=1e-3)
        assert a1 == pytest.approx(1.0 - dist_u758.spec.R, abs=1e-3)


class TestDelegation:
    def test_wide_uniform_never_delegates(self, dist_u58):
        rep = delegation_analysis(dist_u58)
        assert isinstance(rep, DelegationReport)
        assert not rep.startable
        assert rep.witness_intervals == ()
        assert not rep.earliest_only and not rep.latest_only

    def test_mid_uniform_delegates_earliest_only(self, dist_u658):
        rep = delegation_analysis(dist_u658)
        assert rep.startable
        assert rep.earliest_only and not rep.latest_only
        (a, b), = rep.witness_intervals
        assert a == pytest.approx(0.3109477, abs=1e-3)
        assert b == pytest.approx(0.3972603, abs=1e-3)

    def test_narrow_uniform_interval_spans_more(self, dist_u758):
        rep = delegation_analysis(dist_u758)
        assert rep.startable
        assert not rep.earliest_only
        (a, b), = rep.witness_intervals
        assert a == pytest.approx(0.2000750, abs=1e-3)
        assert b == pytest.approx(0.4626866, abs=1e-3)

    def test_pattern_flags(self, dist_u658):
        ((_, flags_on),) = delegation_pattern(dist_u658, 2, 1.6)
        ((_, flags_off),) = delegation_pattern(dist_u658, 2, 1.0)
        assert flags_on == (True, False)
        assert flags_off == (False, False)

    def test_social_insurance_on_equilibrium_path(self, dist_u58, dist_u658):
        assert social_insurance_check(dist_u58, solve_unanimity(1.0, dist_u58, 2))
        assert social_insurance_check(dist_u658, solve_unanimity(1.6, dist_u658, 2))


class TestSweep:
    def test_two_player_sweep_fields(self, dist_u658):
        Ls = np.geomspace(0.5, 3.5, 11)
        sw = sweep_profiles(dist_u658, 2, Ls)
        assert set(sw) == {"L", "x", "pi0", "pi1", "utility", "delegate", "irregular"}
        assert sw["x"].shape == (11, 2)
        assert np.array_equal(sw["L"], Ls)

    def test_two_player_delegation_is_first_mover_only(self, dist_u658):
        # The second mover is pivotal and below the up-cascade bound plays
        # an interior threshold, so delegation can only hit mover one.
        sw = sweep_profiles(dist_u658, 2, np.geomspace(0.5, 3.5, 11))
        rows = {tuple(r.astype(bool)) for r in sw["delegate"]}
        assert rows <= {(False, False), (True, False)}
        assert (True, False) in rows

    def test_four_player_delegation_blocks(self, dist_u658, solved):
        # Automatic investing needs the running odds inside a band that
        # depends on how many slots remain, so the delegating movers sit
        # in one contiguous run, not necessarily at the front: an
        # informative first invest can lift the odds into the band.
        pol = solved(dist_u658.spec, 4, 4)
        Ls = np.geomspace(0.5, 3.5, 11)
        sw = sweep_profiles(dist_u658, 4, Ls, policy=pol)
        flags = sw["delegate"].astype(bool)
        for row in flags:
            run = np.flatnonzero(row)
            if run.size:
                assert np.array_equal(run, np.arange(run[0], run[-1] + 1))
        by_L = dict(zip(np.round(sw["L"], 4), map(tuple, flags)))
        assert by_L[0.7379] == (False, True, True, False)
        assert by_L[1.607] == (True, True, True, False)
        assert by_L[3.5] == (False, False, False, False)

    def test_sweep_monotone_completion(self, dist_u658):
        sw = sweep_profiles(dist_u658, 2, np.geomspace(0.5, 3.5, 11))
        assert np.all(np.diff(sw["pi1"]) > -1e-9)
        assert np.all(sw["pi1"] + 1e-12 >= sw["pi0"])
