"""Fading models, realification, and noise statistics."""
import numpy as np
import pytest
from scipy import stats

from ergolat import channel as ch


def test_deterministic_model():
    model = ch.fixed(np.eye(2))
    h = ch.sample_channel(model, 2, 2, np.random.default_rng(0))
    assert np.allclose(h, np.eye(2))


def test_rayleigh_unit_entry_power():
    rng = np.random.default_rng(1)
    h = ch.sample_channels(ch.rayleigh(), 100_000, 2, 2, rng)
    p = np.abs(h) ** 2
    se = p.std() / np.sqrt(p.size)
    assert np.mean(p) == pytest.approx(1.0, abs=3 * se)


def test_nakagami_inverse_power_moment():
    # E[1/|h|^2] = 1 + 1/(m-1) = 2 for m = 2
    rng = np.random.default_rng(2)
    h = ch.sample_channels(ch.nakagami(2.0), 1_000_000, 1, 1, rng)[:, 0, 0]
    inv = 1.0 / np.abs(h) ** 2
    se = inv.std() / np.sqrt(inv.size)
    assert inv.mean() == pytest.approx(2.0, abs=3 * se)


def test_nakagami_unit_power():
    rng = np.random.default_rng(3)
    h = ch.sample_channels(ch.nakagami(0.7), 200_000, 1, 1, rng)[:, 0, 0]
    p = np.abs(h) ** 2
    assert p.mean() == pytest.approx(1.0, abs=3 * p.std() / np.sqrt(p.size))


def test_realify_examples():
    assert np.allclose(ch.realify(np.array([[1.0 + 0j]])), np.eye(2))
    assert np.allclose(ch.realify(np.array([[1j]])), [[0, -1], [1, 0]])


def test_realify_identities(rng):
    a = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    b = rng.standard_normal((2, 2)) + 1j * rng.standard_normal((2, 2))
    assert np.allclose(ch.realify(a @ b), ch.realify(a) @ ch.realify(b), atol=1e-12)
    assert np.linalg.det(ch.realify(a)) == pytest.approx(abs(np.linalg.det(a)) ** 2, abs=1e-9)
    x = rng.standard_normal(2) + 1j * rng.standard_normal(2)
    xr = np.concatenate([x.real, x.imag])
    assert np.linalg.norm(ch.realify(a) @ xr) == pytest.approx(np.linalg.norm(a @ x), abs=1e-12)


def test_noise_moments():
    w = ch.sample_noise(1_000_000, np.random.default_rng(4))
    n = len(w)
    assert w.mean() == pytest.approx(0.0, abs=3 / np.sqrt(n))
    assert w.var() == pytest.approx(1.0, abs=3 * np.sqrt(2 / n))
    kurt = np.mean(w ** 4) / w.var() ** 2
    assert kurt == pytest.approx(3.0, abs=5 * np.sqrt(24 / n))


def test_isotropy_proxy_eigenvector_invariance():
    """Eigenvector statistics of H^H H match those of (HV)^H (HV) for fixed unitary V."""
    rng = np.random.default_rng(5)
    n = 4000
    h = ch.sample_channels(ch.rayleigh(), n, 2, 2, rng)
    theta = np.pi / 5
    v = np.array([[np.cos(theta), -np.sin(theta)], [np.sin(theta), np.cos(theta)]],
                 dtype=complex)
    def angles(mats):
        gram = np.swapaxes(mats.conj(), 1, 2) @ mats
        _, vecs = np.linalg.eigh(gram)
        lead = vecs[:, :, -1]
        return np.abs(lead[:, 0])  # |<e1, principal eigenvector>|
    ks = stats.ks_2samp(angles(h), angles(h @ v))
    assert ks.pvalue > 0.01


def test_channel_uses_complex_mode_shapes():
    cfg = ch.LinkConfig(n_t=2, n_r=3, rho=1.0, block_len=5)
    hs = ch.channel_uses(cfg, ch.rayleigh(), np.random.default_rng(6))
    assert hs.shape == (5, 6, 4)
    assert cfg.lattice_dim == 20


def test_determinism_same_seed():
    cfg = ch.LinkConfig(n_t=1, n_r=2, rho=1.0, block_len=8)
    a = ch.channel_uses(cfg, ch.rayleigh(), np.random.default_rng(42))
    b = ch.channel_uses(cfg, ch.rayleigh(), np.random.default_rng(42))
    assert np.array_equal(a, b)


def test_parse_model(tmp_path):
    assert ch.parse_model("rayleigh").kind == "rayleigh"
    m = ch.parse_model("nakagami:m=2.5")
    assert m.kind == "nakagami" and m.m == 2.5
    f = tmp_path / "h.txt"
    f.write_text("1+2j 0\n0 1\n")
    fm = ch.parse_model(f"fixed:{f}")
    assert fm.fixed_matrix()[0, 0] == 1 + 2j
    with pytest.raises(ch.ChannelError):
        ch.parse_model("rician")


def test_config_validation():
    with pytest.raises(ch.ChannelError):
        ch.LinkConfig(n_t=1, n_r=1, rho=-1.0, block_len=4)
    with pytest.raises(ch.ChannelError):
        ch.LinkConfig(n_t=1, n_r=1, rho=1.0, block_len=4, mode="quaternion")
    with pytest.raises(ch.ChannelError):
        ch.nakagami(-1.0)
