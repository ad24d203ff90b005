import math

import numpy as np
import pytest

from ppcorf import reference
from ppcorf.corf import SubunitMaps, cell_response, edge_stimulus
from ppcorf.pushpull import (
    PushPullCell,
    make_pushpull,
    pull_set,
    push_and_pull,
    pushpull_response,
    shift_set,
)
from ppcorf.synthetic import binary_noise


def test_shift_moves_away_from_axis(cell2):
    moved = shift_set(cell2, 2.0)
    for a, b in zip(cell2.subunits, moved.subunits):
        assert b.y == pytest.approx(a.y, abs=1e-12)
        assert b.x == pytest.approx(a.x + math.copysign(1.0, a.x), abs=1e-12)
        assert b.sigma_prime == pytest.approx(cell2.blur_sigma(b.rho))
        assert b.delta == a.delta


def test_shift_matches_reference_geometry(cell2):
    lit = reference.beta_shift(reference.cell_tuples(cell2), 3.0, cell2.sigma0, cell2.alpha)
    for s, (d, sg, rho, phi, sp) in zip(shift_set(cell2, 3.0).subunits, lit):
        assert (s.delta, s.sigma) == (d, sg)
        assert s.rho == pytest.approx(rho, abs=1e-12)
        assert math.cos(s.phi - phi) == pytest.approx(1.0, abs=1e-12)
        assert s.sigma_prime == pytest.approx(sp, abs=1e-12)


def test_on_axis_subunit_stays_put(cell2):
    from dataclasses import replace

    s0 = replace(cell2.subunits[0], rho=2.0, phi=math.pi / 2)
    cell = replace(cell2, subunits=(s0,) + cell2.subunits[1:])
    assert shift_set(cell, 4.0).subunits[0].offset() == s0.offset()


def test_zero_beta_is_identity(cell2):
    assert shift_set(cell2, 0.0) == cell2
    with pytest.raises(ValueError):
        shift_set(cell2, -1.0)


def test_pull_reverses_polarity(cell2):
    pull = pull_set(cell2, 2.0)
    assert [s.delta for s in pull.subunits] == [-s.delta for s in cell2.subunits]
    assert pull.weights == cell2.weights


def test_make_pushpull_defaults(cell2):
    pp = make_pushpull(cell2)
    assert pp.beta == cell2.source_sigma and pp.k == 1.8
    with pytest.raises(ValueError):
        PushPullCell(pp.push, pp.pull, 1.0, -0.1)
    with pytest.raises(ValueError):
        PushPullCell(pp.push, pp.pull, -1.0, 1.0)


def test_k_zero_reduces_to_push(cell2, rng):
    img = rng.random((20, 20))
    np.testing.assert_array_equal(pushpull_response(img, make_pushpull(cell2, k=0.0)),
                                  cell_response(img, cell2))


def test_rectified_and_signed(cell2, rng):
    img = rng.random((24, 24))
    pp = make_pushpull(cell2)
    signed = pushpull_response(img, pp, rectify=False)
    push, pull = push_and_pull(img, pp)
    np.testing.assert_allclose(signed, push - 1.8 * pull, atol=1e-15)
    np.testing.assert_array_equal(pushpull_response(img, pp), np.maximum(signed, 0))


def test_response_non_increasing_in_k(cell2, rng):
    img = rng.random((24, 24))
    prev = None
    for k in (0.0, 0.5, 1.0, 1.8, 3.0):
        r = pushpull_response(img, make_pushpull(cell2, k=k))
        if prev is not None:
            assert np.all(r <= prev + 1e-15)
        prev = r


def test_pull_is_silent_on_preferred_edge(cell2):
    img = edge_stimulus(40)
    push, pull = push_and_pull(img, make_pushpull(cell2))
    assert pull.max() < 1e-3 * push.max()


def test_noise_drives_pull(cell2):
    img = binary_noise(48, 0)
    push, pull = push_and_pull(img, make_pushpull(cell2))
    assert pull.mean() > 0.3 * push.mean()


def test_oracle_on_small_image(cell2, rng):
    img = rng.random((12, 12))
    pp = make_pushpull(cell2, beta=2.0, k=1.8)
    lit = reference.pushpull(img.tolist(), reference.cell_tuples(cell2), cell2.weights,
                             2.0, 1.8, cell2.sigma0, cell2.alpha, rectify=False)
    np.testing.assert_allclose(pushpull_response(img, pp, rectify=False), lit, atol=1e-12)


def test_rotation_applies_to_both_sets(cell2):
    pp = make_pushpull(cell2).rotated(math.pi / 2)
    assert pp.push.subunits[0].phi == pytest.approx((cell2.subunits[0].phi + math.pi / 2)
                                                     % (2 * math.pi))
    maps = SubunitMaps(edge_stimulus(40, math.pi / 2), 2.0)
    assert maps.cell(pp.push).max() > 0.1


def _single(rho, phi, delta=1):
    from ppcorf.corf import CorfCell, SubUnit

    units = [SubUnit(delta, 2.0, rho, phi, 0.5 + 0.1 * rho), SubUnit(-delta, 2.0, 1.0, 1.0, 0.6)]
    return CorfCell(units, (1.0, 1.0), 0.0, 2.0, 0.5, 0.1)


def test_shift_examples():
    right = shift_set(_single(2.0, 0.0), 1.0).subunits[0]
    assert right.rho == pytest.approx(2.5) and right.phi == pytest.approx(0.0)
    left = shift_set(_single(2.0, math.pi), 1.0).subunits[0]
    assert left.rho == pytest.approx(2.5) and left.phi == pytest.approx(math.pi)


def test_pull_set_examples(cell2):
    pull = pull_set(cell2, 2.0)
    on = sum(s.delta > 0 for s in cell2.subunits)
    assert sum(s.delta < 0 for s in pull.subunits) == on
    assert sum(s.delta > 0 for s in pull.subunits) == len(cell2.subunits) - on
    assert pull_set(pull_set(cell2, 0.0), 0.0) == cell2


def test_pull_duality_on_inverted_edge(cell2):
    from ppcorf.corf import cell_response

    img = edge_stimulus(40)
    pull = cell_response(img, pull_set(cell2, 2.0))
    push_inv = cell_response(1 - img, shift_set(cell2, 2.0))
    np.testing.assert_allclose(pull, push_inv, atol=1e-9)


def test_monotone_in_listed_k(cell2, rng):
    img = rng.random((24, 24))
    rs = [pushpull_response(img, make_pushpull(cell2, k=k)) for k in (0, 0.9, 1.8, 3.6)]
    assert all(np.all(b <= a) for a, b in zip(rs, rs[1:]))


def test_preferred_edge_peak_within_two_percent(cell2):
    img = edge_stimulus(40)
    push, _ = push_and_pull(img, make_pushpull(cell2))
    pp = pushpull_response(img, make_pushpull(cell2, k=1.8))
    assert pp.max() == pytest.approx(push.max(), rel=0.02)


def test_noise_mean_suppressed(cell2):
    img = binary_noise(64, 0)
    push, _ = push_and_pull(img, make_pushpull(cell2))
    assert pushpull_response(img, make_pushpull(cell2)).mean() < push.mean()


def test_wider_beta_weakens_separated_cell(cell2):
    from ppcorf.corf import cell_response

    img = edge_stimulus(40)
    near = cell_response(img, shift_set(cell2, 0.0)).max()
    far = cell_response(img, shift_set(cell2, 4.0)).max()
    assert far <= near


def test_wider_beta_releases_pull_on_preferred_edge(cell2):
    # the pull set moves off the edge, so the net response can only recover
    img = edge_stimulus(40)
    near = pushpull_response(img, make_pushpull(cell2, beta=0.0)).max()
    far = pushpull_response(img, make_pushpull(cell2, beta=4.0)).max()
    assert far >= near
