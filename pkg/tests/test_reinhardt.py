import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from levislice.model import SpaceKind, SymmetricSpaceModel
from levislice.reinhardt import (
    EnvelopeResolutionError,
    ReinhardtShadow,
    classify_domain,
    envelope,
    is_complete,
    is_connected,
    is_log_convex,
    is_stein,
    log_convexity_witness,
)

E1, E2 = math.exp(-1.0), math.exp(-2.0)
TUBE = SymmetricSpaceModel(rank=2, kind=SpaceKind.TUBE)
NONTUBE = SymmetricSpaceModel(rank=2, kind=SpaceKind.NON_TUBE, mult_short=2)


def full(r=2):
    return ReinhardtShadow(r, [((0.0,) * r, (1.0,) * r)])


def annulus():
    return ReinhardtShadow(2, [((E2, E2), (E1, E1))])


# -- construction ---------------------------------------------------------------


def test_construction_validates_bounds():
    with pytest.raises(ValueError):
        ReinhardtShadow(1, [((0.5,), (0.5,))])
    with pytest.raises(ValueError):
        ReinhardtShadow(1, [((-0.1,), (0.5,))])
    with pytest.raises(ValueError):
        ReinhardtShadow(1, [((0.0,), (1.1,))])
    with pytest.raises(ValueError):
        ReinhardtShadow(2, [])


def test_symmetrization_flag_and_closure():
    asym = ReinhardtShadow(2, [((0.1, 0.5), (0.2, 0.6))])
    assert asym.symmetrized
    assert asym.contains([0.15, 0.55]) and asym.contains([0.55, 0.15])

    sym = ReinhardtShadow(2, [((0.1, 0.1), (0.2, 0.2))])
    assert not sym.symmetrized


def test_canonical_boxes_are_disjoint():
    S = ReinhardtShadow(1, [((0.0,), (0.6,)), ((0.4,), (1.0,))])
    assert S.boxes == [((0.0,), (1.0,))]


def test_equality_is_set_equality():
    a = ReinhardtShadow(1, [((0.0,), (1.0,))])
    b = ReinhardtShadow(1, [((0.0,), (0.5,)), ((0.5,), (1.0,))])
    assert a == b
    c = ReinhardtShadow(1, [((0.0,), (0.9,))])
    assert a != c


def test_contains_half_open_semantics():
    S = ReinhardtShadow(1, [((0.2,), (0.6,))])
    assert S.contains([0.2]) and S.contains([0.59])
    assert not S.contains([0.6]) and not S.contains([0.19])


# -- completeness ------------------------------------------------------------------


def test_full_polydisk_is_complete():
    assert is_complete(full())


def test_annulus_is_not_complete():
    assert not is_complete(annulus())


def test_union_staircase_is_complete():
    S = ReinhardtShadow(
        2, [((0.0, 0.0), (1.0, 0.5)), ((0.0, 0.0), (0.5, 1.0))]
    )
    assert is_complete(S)


def test_l_shape_is_not_complete():
    S = ReinhardtShadow(2, [((0.5, 0.0), (1.0, 1.0)), ((0.0, 0.5), (0.5, 1.0))])
    assert S.contains([0.7, 0.1])
    assert not S.contains([0.1, 0.1])
    assert not is_complete(S)


def test_down_closure_commutes_with_symmetrization():
    box = ((0.3, 0.1), (0.5, 0.9))
    sym_then_down = ReinhardtShadow(2, [box]).down_closure()
    down_then_sym = ReinhardtShadow(
        2, [((0.0, 0.0), box[1])]
    )
    assert sym_then_down == down_then_sym


# -- connectedness -------------------------------------------------------------------


def test_complete_shadow_is_connected():
    assert is_connected(full())


def test_separated_squares_are_disconnected():
    S = ReinhardtShadow(2, [((0.1, 0.1), (0.2, 0.2)), ((0.5, 0.5), (0.6, 0.6))])
    assert not is_connected(S)


def test_annulus_is_connected():
    assert is_connected(annulus())


def test_corner_touching_counts_as_adjacent():
    S = ReinhardtShadow(2, [((0.0, 0.0), (0.5, 0.5)), ((0.5, 0.5), (1.0, 1.0))])
    assert is_connected(S)


# -- log convexity --------------------------------------------------------------------


def test_annulus_is_log_convex():
    assert is_log_convex(annulus())


def test_two_squares_are_not_log_convex():
    S = ReinhardtShadow(2, [((0.1, 0.1), (0.2, 0.2)), ((0.5, 0.5), (0.6, 0.6))])
    assert not is_log_convex(S)
    p, q = log_convexity_witness(S)
    mid = np.sqrt(p * q)
    assert not S.contains(mid)


def test_full_polydisk_is_log_convex():
    assert is_log_convex(full())


# -- steinness --------------------------------------------------------------------------


def test_annulus_is_stein():
    assert is_stein(annulus())


def test_full_polydisk_is_stein():
    assert is_stein(full())


def test_l_shape_is_not_stein():
    S = ReinhardtShadow(2, [((0.5, 0.0), (1.0, 1.0)), ((0.0, 0.5), (0.5, 1.0))])
    assert not is_stein(S)


# -- classification ------------------------------------------------------------------------


def test_classify_tube_annulus_stein():
    assert classify_domain(TUBE, annulus()).stein


def test_classify_nontube_annulus_not_stein():
    result = classify_domain(NONTUBE, annulus())
    assert not result.stein
    assert any("complete" in reason for reason in result.reasons)


def test_classify_tube_disconnected_not_stein():
    S = ReinhardtShadow(2, [((0.1, 0.1), (0.2, 0.2)), ((0.5, 0.5), (0.6, 0.6))])
    result = classify_domain(TUBE, S)
    assert not result.stein
    assert any("connected" in reason for reason in result.reasons)


def test_classify_rank_mismatch():
    with pytest.raises(ValueError):
        classify_domain(TUBE, full(1))


# -- envelope ---------------------------------------------------------------------------------


def test_envelope_fixpoint_on_stein_input():
    S = annulus()
    assert envelope(TUBE, S) is S


def test_envelope_joins_disconnected_annuli_tube():
    S = ReinhardtShadow(2, [((0.1, 0.1), (0.2, 0.2)), ((0.5, 0.5), (0.6, 0.6))])
    env = envelope(TUBE, S)
    assert classify_domain(TUBE, env).stein
    # the log-segment midpoint of the two squares is now included
    assert env.contains([math.sqrt(0.15 * 0.55)] * 2)


def test_envelope_completes_for_nontube():
    env = envelope(NONTUBE, annulus())
    assert classify_domain(NONTUBE, env).stein
    assert is_complete(env)
    assert env.contains([0.0, 0.0])
    # down-closure of the annulus reaches [0, e^-1)^2 up to grid snap
    assert env.contains([E1 - 1e-6, E1 - 1e-6])
    assert not env.contains([0.6, 0.6])


def test_envelope_extensive_and_idempotent():
    cases = [
        (TUBE, ReinhardtShadow(2, [((0.1, 0.1), (0.2, 0.2)),
                                   ((0.5, 0.5), (0.6, 0.6))])),
        (NONTUBE, annulus()),
        (TUBE, ReinhardtShadow(2, [((0.5, 0.0), (1.0, 1.0)),
                                   ((0.0, 0.5), (0.5, 1.0))])),
    ]
    rng = np.random.default_rng(8)
    for model, S in cases:
        env = envelope(model, S)
        for _ in range(200):
            rho = rng.uniform(0, 1, size=2)
            if S.contains(rho):
                assert env.contains(rho)
        assert envelope(model, env) == env


def test_envelope_monotone():
    small = ReinhardtShadow(2, [((0.3, 0.3), (0.4, 0.4)), ((0.6, 0.6), (0.7, 0.7))])
    large = ReinhardtShadow(2, [((0.25, 0.25), (0.45, 0.45)),
                                ((0.55, 0.55), (0.75, 0.75))])
    env_small = envelope(TUBE, small)
    env_large = envelope(TUBE, large)
    rng = np.random.default_rng(10)
    for _ in range(300):
        rho = rng.uniform(0, 1, size=2)
        if env_small.contains(rho):
            assert env_large.contains(rho)


def test_envelope_rank_one():
    S = ReinhardtShadow(1, [((0.1,), (0.2,)), ((0.5,), (0.6,))])
    env = envelope(TUBE1 := SymmetricSpaceModel(rank=1), S)
    assert classify_domain(TUBE1, env).stein
    assert env.contains([0.35])


# -- hypothesis: random unions stay consistent -------------------------------------------------


@settings(max_examples=30, deadline=None)
@given(
    st.lists(
        st.tuples(st.floats(0.05, 0.7), st.floats(0.05, 0.25)),
        min_size=1,
        max_size=3,
    )
)
def test_random_unions_classify_and_envelope(boxes):
    shadow_boxes = []
    for lo, width in boxes:
        hi = min(lo + width, 0.99)
        if hi <= lo:
            continue
        shadow_boxes.append(((lo, lo), (hi, hi)))
    if not shadow_boxes:
        return
    S = ReinhardtShadow(2, shadow_boxes)
    env = envelope(TUBE, S)
    assert classify_domain(TUBE, env).stein
    assert envelope(TUBE, env) == env
