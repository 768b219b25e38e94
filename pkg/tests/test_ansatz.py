"""CNN/CPS/MaxEnt ansatz equivalences, grand-sum symmetry, gradients."""

from dataclasses import replace

import numpy as np
import pytest
from hypothesis import given, settings, strategies as st

from spinmotif.ansatz import (
    CnnParams,
    cnn_as_cps,
    cnn_logpsi,
    cnn_logpsi_batch,
    cnn_logpsi_motif_form,
    cps_logpsi,
    fit_maxent,
    grandsum,
    linear_activation_constant,
    linear_cnn_logpsi,
    logpsi_gradient,
    logpsi_gradient_batch,
    maxent_state_probs,
    project_grandsum,
    unpack_gradient,
)
from spinmotif.exact import exact_mev, ground_state
from spinmotif.motif import motif_vector
from spinmotif.spinchain import Relabel, apply_symmetry, enumerate_basis


@st.composite
def cnn_params(draw, k_range=(2, 4), scale=1.0):
    k = draw(st.integers(*k_range))
    flat = draw(st.lists(st.floats(-scale, scale), min_size=2 * k + 1,
                         max_size=2 * k + 1))
    w = np.array(flat[:-1]).reshape(k, 2)
    return CnnParams(w=w, b=flat[-1], v=draw(st.floats(0.5, 1.5)))


BASIS8 = enumerate_basis(8, 2)


def test_params_json_roundtrip():
    p = CnnParams(w=np.arange(6.0).reshape(3, 2), b=-0.5, v=1.25)
    q = CnnParams.from_json(p.to_json(8))
    assert np.array_equal(p.w, q.w) and p.b == q.b and p.v == q.v


@given(cnn_params(), st.sampled_from(BASIS8))
def test_motif_form_matches_direct_evaluation(p, s):
    direct = cnn_logpsi(p, s)
    counts = motif_vector(s, p.k, 2)
    assert cnn_logpsi_motif_form(p, counts) == pytest.approx(direct, abs=1e-12)


@given(cnn_params(), st.sampled_from(BASIS8))
def test_cps_embedding_reproduces_cnn(p, s):
    coeffs = cnn_as_cps(p)
    counts = motif_vector(s, p.k, 2)
    assert cps_logpsi(coeffs, counts) == pytest.approx(cnn_logpsi(p, s), abs=1e-12)


@given(cnn_params())
def test_batch_evaluation_matches_scalar(p):
    arr = np.asarray(BASIS8[:10], dtype=np.intp)
    batch = cnn_logpsi_batch(p, arr)
    for s, val in zip(BASIS8[:10], batch):
        assert val == pytest.approx(cnn_logpsi(p, s), abs=1e-12)


@given(cnn_params(), st.sampled_from(BASIS8), st.integers(1, 7))
def test_translation_invariance(p, s, shift):
    t = s[shift:] + s[:shift]
    assert cnn_logpsi(p, t) == pytest.approx(cnn_logpsi(p, s), abs=1e-12)


@given(cnn_params(scale=2.0))
def test_projection_zeroes_grandsum_and_enforces_relabeling(p):
    q = project_grandsum(p)
    assert abs(grandsum(q)) < 1e-12
    arr = np.asarray(BASIS8, dtype=np.intp)
    flipped = 1 - arr
    dev = np.abs(cnn_logpsi_batch(q, arr) - cnn_logpsi_batch(q, flipped)).max()
    assert dev < 1e-9


def test_projection_leaves_window_differences_intact():
    rng = np.random.default_rng(7)
    p = CnnParams(w=rng.uniform(-1, 1, (3, 2)), b=0.3, v=1.0)
    q = project_grandsum(p)
    # the shift is uniform, so preactivation differences are preserved
    assert np.allclose(q.w - p.w, (q.w - p.w)[0, 0])


@given(cnn_params(scale=1.0))
def test_linear_activation_is_constant(p):
    const = linear_activation_constant(p, 8)
    for s in BASIS8[::7]:
        assert linear_cnn_logpsi(p, s) == pytest.approx(const, abs=1e-10)


def test_gradient_matches_finite_differences():
    rng = np.random.default_rng(3)
    p = CnnParams(w=rng.uniform(-1, 1, (3, 2)), b=0.2, v=1.1)
    s = BASIS8[17]
    dv, dw, db = logpsi_gradient(p, s)
    eps = 1e-6

    def fd(plus, minus):
        return (cnn_logpsi(plus, s) - cnn_logpsi(minus, s)) / (2 * eps)

    assert dv == pytest.approx(fd(replace(p, v=p.v + eps), replace(p, v=p.v - eps)), rel=1e-5)
    assert db == pytest.approx(fd(replace(p, b=p.b + eps), replace(p, b=p.b - eps)), rel=1e-5)
    for idx in np.ndindex(3, 2):
        e = np.zeros((3, 2))
        e[idx] = eps
        assert dw[idx] == pytest.approx(
            fd(replace(p, w=p.w + e), replace(p, w=p.w - e)), rel=1e-5, abs=1e-6
        )


@given(cnn_params())
def test_gradient_batch_matches_scalar(p):
    arr = np.asarray(BASIS8[:6], dtype=np.intp)
    flat = logpsi_gradient_batch(p, arr)
    for s, row in zip(BASIS8[:6], flat):
        dv, dw, db = logpsi_gradient(p, s)
        fv, fw, fb = unpack_gradient(p, row)
        assert fv == pytest.approx(dv, abs=1e-12)
        assert fb == pytest.approx(db, abs=1e-12)
        assert np.allclose(fw, dw, atol=1e-12)


def test_relu_subgradient_at_zero_is_zero():
    # all preactivations exactly zero: gradient of w and b must vanish
    p = CnnParams(w=np.zeros((2, 2)), b=0.0, v=1.0)
    dv, dw, db = logpsi_gradient(p, BASIS8[0])
    assert dv == 0.0 and db == 0.0 and not dw.any()


class TestMaxEnt:
    def test_fit_reproduces_targets(self):
        gs = ground_state(8, 2, gauge=True)
        basis = gs.basis
        for k in (2, 3):
            targets = exact_mev(gs, k)
            mp = fit_maxent(targets, basis, k)
            probs = maxent_state_probs(mp, basis)
            model = np.zeros(2**k)
            for s, pr in zip(basis, probs):
                model += pr * motif_vector(s, k, 2) / 8.0
            for mo in mp.motifs:
                idx = sum(x * 2**i for i, x in enumerate(reversed(mo)))
                assert model[idx] == pytest.approx(targets[mo], abs=1e-8)

    def test_full_k_limit_recovers_state_probabilities(self):
        gs = ground_state(6, 2, gauge=True)
        targets = exact_mev(gs, 6)
        mp = fit_maxent(targets, gs.basis, 6)
        probs = maxent_state_probs(mp, gs.basis)
        assert np.allclose(probs, gs.amplitudes**2, atol=1e-10)

    def test_missing_targets_rejected(self):
        gs = ground_state(6, 2, gauge=True)
        targets = exact_mev(gs, 2)
        targets.pop((0, 1))
        with pytest.raises(ValueError):
            fit_maxent(targets, gs.basis, 2)


@given(cnn_params(scale=2.0))
@settings(deadline=None)
def test_grandsum_relabel_theorem_any_relabeling(p):
    q = project_grandsum(p)
    op = Relabel((1, 0))
    for s in BASIS8[::11]:
        t = apply_symmetry(op, s)
        assert cnn_logpsi(q, t) == pytest.approx(cnn_logpsi(q, s), abs=1e-9)
