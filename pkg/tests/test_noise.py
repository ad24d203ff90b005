import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from ppcorf.bank import apply_bank, build_bank
from ppcorf.noise import (
    NoiseSpec,
    corrupt,
    feature_stability,
    mean_curves,
    noise_deltas,
    parse_percents,
    sweep,
)
from ppcorf.synthetic import fixture_suite


def test_noise_settings_validation():
    with pytest.raises(ValueError):
        NoiseSpec(-0.1, 0.5)
    with pytest.raises(ValueError):
        NoiseSpec(0.1, 1.5)


def test_zero_percent_is_identity(rng):
    img = rng.random((16, 16))
    np.testing.assert_array_equal(corrupt(img, NoiseSpec(0.3, 0.0, 5)), img)


def test_deterministic_per_seed(rng):
    img = rng.random((32, 32))
    a = corrupt(img, NoiseSpec(0.2, 0.5, 11))
    np.testing.assert_array_equal(a, corrupt(img, NoiseSpec(0.2, 0.5, 11)))
    assert not np.array_equal(a, corrupt(img, NoiseSpec(0.2, 0.5, 12)))


def test_noise_std_on_large_image():
    d = noise_deltas((256, 256), NoiseSpec(0.2, 1.0, 3))
    assert abs(d.std() - 0.2) <= 0.05 * 0.2
    assert abs(d.mean()) < 0.005


@settings(max_examples=30, deadline=None)
@given(st.floats(0, 1), st.floats(0.01, 0.5), st.integers(0, 2**63 - 1))
def test_count_and_clamp(percent, sigma, seed):
    img = np.full((20, 25), 0.5)
    out = corrupt(img, NoiseSpec(sigma, percent, seed))
    assert out.min() >= 0 and out.max() <= 1
    expected = int(np.floor(percent * img.size + 1e-9))
    changed = np.count_nonzero(out != img)
    assert changed <= expected
    assert changed >= 0.99 * expected


def test_clamping_at_extremes():
    out = corrupt(np.ones((30, 30)), NoiseSpec(0.5, 1.0, 1))
    assert out.max() == 1.0 and out.min() >= 0.0


def test_stability_conventions(rng):
    a = rng.random((2, 5, 5))
    assert feature_stability(a, a) == pytest.approx(1.0)
    assert feature_stability(a, np.zeros_like(a)) == 0.0
    assert feature_stability(np.zeros_like(a), np.zeros_like(a)) == 1.0
    x = np.zeros((1, 1, 2))
    y = np.zeros((1, 1, 2))
    x[..., 0] = 1
    y[..., 1] = 1
    assert feature_stability(x, y) == 0.0
    with pytest.raises(ValueError):
        feature_stability(a, a[:1])


def test_stability_drops_with_corruption():
    img = fixture_suite()["edge_vertical"]
    bank = build_bank((1.0, 2.0, 3.0))
    clean = apply_bank(img, bank)
    light = feature_stability(clean, apply_bank(corrupt(img, NoiseSpec(0.1, 0.1, 1)), bank))
    heavy = feature_stability(clean, apply_bank(corrupt(img, NoiseSpec(0.1, 1.0, 1)), bank))
    assert 0 < heavy < light <= 1


@pytest.mark.parametrize("text, expected", [
    ("10..100:10", [0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1.0]),
    ("10,50", [0.1, 0.5]),
    ("0..20:20", [0.0, 0.2]),
])
def test_parse_percents(text, expected):
    assert parse_percents(text) == pytest.approx(expected)


@pytest.mark.parametrize("bad", ["50..10:10", "10..20:0", "150", "-5"])
def test_parse_percents_rejects(bad):
    with pytest.raises(ValueError):
        parse_percents(bad)


def test_sweep_rows_and_threads():
    suite = fixture_suite()
    images = {k: suite[k] for k in ("disk", "cross")}
    bank = build_bank((1.5, 2.5))
    rows = sweep(images, bank, [0.1, 0.3], [0.2, 1.0], seed=42)
    assert len(rows) == 8
    assert [r["image"] for r in rows[:4]] == ["disk"] * 4
    assert set(rows[0]) == {"image", "sigma_noise", "percent", "stability", "clean_peak",
                            "noisy_peak"}
    assert rows == sweep(images, bank, [0.1, 0.3], [0.2, 1.0], seed=42, threads=3)
    assert rows != sweep(images, bank, [0.1, 0.3], [0.2, 1.0], seed=43)
    curves = mean_curves(rows)
    assert list(curves) == [0.1, 0.3]
    assert [p for p, _ in curves[0.1]] == [0.2, 1.0]
