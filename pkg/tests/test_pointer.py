"""Pointer registers, couplings, postselection, readout.

The weak-register math is cross-checked against a brute-force oracle
that keeps every register on its full position grid, so the compact
representation used by the package must agree to machine precision.
"""

from __future__ import annotations

import numpy as np
import pytest

from wvlab.errors import ContractError, GridTooSmallError
from wvlab.pointer import (
    PointerSpec,
    click_readout,
    couple_strong,
    couple_weak,
    initial_state,
    make_register,
    pattern_amplitudes,
    postselect,
)
from wvlab.qcore import basis_ket, identity, ket, operator, projector_from_ket

S3 = 1.0 / np.sqrt(3.0)
PSI = np.array([S3, S3, S3])
CHI = np.array([S3, S3, -S3])


def _proj(index):
    return projector_from_ket(basis_ket(3, index))


def _crossing():
    return projector_from_ket(ket([0.0, 1.0, 1.0]))


def _random_unitary(rng, n):
    z = rng.normal(size=(n, n)) + 1j * rng.normal(size=(n, n))
    q, r = np.linalg.qr(z)
    d = np.diag(r)
    return q * (d / np.abs(d))


# --- brute-force oracle on full grids --------------------------------------


def _grid_waves(spec):
    q = np.linspace(-spec.grid_extent * spec.sigma, spec.grid_extent * spec.sigma, spec.grid_size)
    g0 = np.exp(-(q**2) / (4.0 * spec.sigma**2))
    g0 = g0 / np.linalg.norm(g0)
    g1 = np.exp(-((q - spec.g) ** 2) / (4.0 * spec.sigma**2))
    g1 = g1 / np.linalg.norm(g1)
    return q, g0, g1


class DenseSim:
    """Full-grid tensor simulation; registers indexed by position."""

    def __init__(self, psi, specs):
        self.specs = list(specs)
        self.waves = [None if s.kind == "strong" else _grid_waves(s) for s in specs]
        t = np.asarray(psi, dtype=complex)
        for k, s in enumerate(specs):
            vec = np.array([1.0, 0.0]) if s.kind == "strong" else self.waves[k][1]
            t = np.multiply.outer(t, vec)
        self.t = t

    def couple(self, proj, k):
        ax = 1 + k
        hit = np.tensordot(proj.matrix, self.t, axes=(1, 0))
        miss = self.t - hit
        if self.specs[k].kind == "strong":
            ready_vec, moved_vec = np.array([1.0, 0.0]), np.array([0.0, 1.0])
        else:
            _, ready_vec, moved_vec = self.waves[k]
        # Register k is untouched so far, so the hit branch factors as
        # (rest) x ready_vec along this axis; swap that factor out.
        rest = np.tensordot(hit, ready_vec.conj(), axes=(ax, 0))
        self.t = np.moveaxis(np.multiply.outer(rest, moved_vec), -1, ax) + miss

    def postselect(self, chi):
        self.t = np.tensordot(np.asarray(chi).conj(), self.t, axes=(0, 0))
        prob = float(np.linalg.norm(self.t) ** 2)
        if prob > 0:
            self.t = self.t / np.sqrt(prob)
        return prob

    def strong_prob(self, k):
        p = np.abs(self.t) ** 2
        return float(np.take(p, 1, axis=k).sum())

    def weak_marginal(self, k):
        p = np.abs(self.t) ** 2
        axes = tuple(i for i in range(p.ndim) if i != k)
        return p.sum(axis=axes)

    def weak_mean_var(self, k):
        q = self.waves[k][0]
        marg = self.weak_marginal(k)
        mean = float(np.dot(q, marg))
        var = float(np.dot(q**2, marg)) - mean**2
        return mean, var


# --- specs and registers ----------------------------------------------------


@pytest.mark.parametrize(
    "kwargs",
    [
        dict(site="", kind="strong"),
        dict(site="X", kind="medium"),
        dict(site="X", kind="weak", sigma=0.0),
        dict(site="X", kind="weak", sigma=-1.0),
        dict(site="X", kind="weak", grid_size=200),
        dict(site="X", kind="weak", grid_size=1),
        dict(site="X", kind="weak", grid_extent=0.0),
        dict(site="X", kind="weak", g=1.0),  # overlap exp(-1/8) <= 0.9
        dict(site="X", kind="weak", g=np.nan),
    ],
)
def test_pointer_spec_rejections(kwargs):
    with pytest.raises(ContractError):
        PointerSpec(**kwargs)


def test_strong_register_states_are_orthogonal():
    reg = make_register(PointerSpec(site="D", kind="strong"))
    ready = np.array([1.0, 0.0])
    assert np.array_equal(reg.moved_coeffs, [0.0, 1.0])
    assert np.dot(ready, reg.moved_coeffs) == 0.0


def test_weak_register_waves():
    spec = PointerSpec(site="O", kind="weak", g=0.01)
    reg = make_register(spec)
    q, g0, g1 = _grid_waves(spec)
    assert abs(np.linalg.norm(reg.ready_wave) - 1.0) <= 1e-8
    assert np.max(np.abs(reg.ready_wave - g0)) <= 1e-15
    assert np.max(np.abs(reg.moved_wave - g1)) <= 1e-12
    # Overlap follows the Gaussian law up to grid truncation.
    analytic = np.exp(-(spec.g**2) / (8.0 * spec.sigma**2))
    assert abs(float(np.dot(g0, g1)) - analytic) <= 1e-8
    assert abs(np.dot(reg.moved_coeffs, reg.moved_coeffs) - 1.0) <= 1e-12
    # Ready packet is centered.
    assert abs(reg.pos_op[0, 0]) <= 1e-12
    assert reg.mass_loss <= 1e-6


def test_weak_register_with_zero_g_stays_two_dimensional():
    reg = make_register(PointerSpec(site="O", kind="weak", g=0.0))
    assert np.allclose(reg.moved_coeffs, [1.0, 0.0])
    gram = reg.basis @ reg.basis.T
    assert np.max(np.abs(gram - np.eye(2))) <= 1e-12


def test_translation_off_the_grid_is_rejected():
    with pytest.raises(GridTooSmallError):
        make_register(PointerSpec(site="O", kind="weak", g=0.9, grid_extent=2.0))


# --- composite states and couplings -----------------------------------------


def _fresh(pointers):
    return initial_state(ket(PSI, ("1", "2", "3")), pointers)


def test_initial_state_shape_and_labels():
    state = _fresh([PointerSpec(site="D", kind="strong"), PointerSpec(site="O", kind="weak")])
    assert state.shape == (3, 2, 2)
    assert np.isclose(state.norm(), 1.0)
    assert state.basis_label(0) == "path=1|D=ready|O=b0"
    assert state.basis_label(4) == "path=2|D=ready|O=b0"


def test_couple_strong_zero_and_identity_projectors():
    zero = operator(np.zeros((3, 3)))
    state = _fresh([PointerSpec(site="D", kind="strong")])
    same = couple_strong(state, zero, "D")
    assert np.array_equal(same.amps, state.amps)
    full = couple_strong(state, identity(3), "D")
    t = full.tensor_view()
    assert np.allclose(t[:, 1], PSI)
    assert np.allclose(t[:, 0], 0.0)


def test_register_consumed_after_coupling():
    state = _fresh([PointerSpec(site="D", kind="strong")])
    once = couple_strong(state, _proj(0), "D")
    with pytest.raises(ContractError):
        couple_strong(once, _proj(0), "D")


def test_couple_kind_must_match_register():
    state = _fresh([PointerSpec(site="D", kind="strong")])
    with pytest.raises(ContractError):
        couple_weak(state, _proj(0), "D")


def test_couple_requires_projector_and_matching_dim():
    state = _fresh([PointerSpec(site="D", kind="strong")])
    with pytest.raises(ContractError):
        couple_strong(state, operator(0.5 * np.eye(3)), "D")
    from wvlab.errors import DimensionMismatchError

    with pytest.raises(DimensionMismatchError):
        couple_strong(state, identity(2), "D")


def test_couplings_preserve_norm():
    rng = np.random.default_rng(41)
    for _ in range(30):
        n = int(rng.integers(2, 5))
        sys = ket(rng.normal(size=n) + 1j * rng.normal(size=n)).normalized()
        specs = [
            PointerSpec(site="s", kind="strong"),
            PointerSpec(site="w", kind="weak", g=0.05, grid_size=61),
        ]
        state = initial_state(sys, specs)
        u = ket(rng.normal(size=n) + 1j * rng.normal(size=n)).normalized()
        v = ket(rng.normal(size=n) + 1j * rng.normal(size=n)).normalized()
        state = couple_strong(state, projector_from_ket(u), "s")
        state = couple_weak(state, projector_from_ket(v), "w")
        assert abs(state.norm() - 1.0) <= 1e-12


def test_same_stage_orthogonal_strong_couplings_commute():
    specs = [PointerSpec(site="D", kind="strong"), PointerSpec(site="O", kind="strong")]
    a = couple_strong(couple_strong(_fresh(specs), _proj(0), "D"), _crossing(), "O")
    b = couple_strong(couple_strong(_fresh(specs), _crossing(), "O"), _proj(0), "D")
    assert np.max(np.abs(a.amps - b.amps)) <= 1e-14


def test_postselect_bare_state():
    state = _fresh([])
    res = postselect(state, ket(CHI, ("1", "2", "3")))
    assert np.isclose(res.probability, 1.0 / 9.0, atol=1e-12)
    assert not res.degenerate
    assert np.isclose(res.conditional.norm(), 1.0)
    orth = postselect(state, ket([0.0, 1.0 / np.sqrt(2), -1.0 / np.sqrt(2)], ("1", "2", "3")))
    assert orth.degenerate
    assert orth.conditional is None
    assert orth.probability <= 1e-20


def test_coupling_after_postselection_rejected():
    state = _fresh([PointerSpec(site="D", kind="strong")])
    res = postselect(state, ket(CHI, ("1", "2", "3")))
    with pytest.raises(ContractError):
        couple_strong(res.conditional, _proj(0), "D")


def _run_fig1():
    specs = [PointerSpec(site="D", kind="strong"), PointerSpec(site="O", kind="strong")]
    state = _fresh(specs)
    state = couple_strong(state, _proj(0), "D")
    state = couple_strong(state, _crossing(), "O")
    return postselect(state, ket(CHI, ("1", "2", "3")))


def test_two_strong_pointers_give_certain_detector_click():
    res = _run_fig1()
    assert np.isclose(res.probability, 1.0 / 9.0, atol=1e-12)
    # Conditional pointer state is exactly |shifted> x |ready>.
    t = res.conditional.tensor_view()
    assert abs(abs(t[1, 0]) - 1.0) <= 1e-12
    stats = click_readout(res.conditional)
    assert abs(stats.strong["D"] - 1.0) <= 1e-12
    assert abs(stats.strong["O"]) <= 1e-12
    assert abs(stats.patterns[("D",)] - 1.0) <= 1e-12


def test_four_strong_pointers_split_into_three_patterns():
    specs = [PointerSpec(site=s, kind="strong") for s in ("D", "O", "E'", "F'")]
    state = _fresh(specs)
    state = couple_strong(state, _proj(0), "D")
    state = couple_strong(state, _crossing(), "O")
    state = couple_strong(state, _proj(1), "E'")
    state = couple_strong(state, _proj(2), "F'")
    res = postselect(state, ket(CHI, ("1", "2", "3")))
    assert np.isclose(res.probability, 1.0 / 3.0, atol=1e-12)
    stats = click_readout(res.conditional)
    third = 1.0 / 3.0
    nonzero = {p: v for p, v in stats.patterns.items() if v > 1e-12}
    assert set(nonzero) == {("D",), ("O", "E'"), ("O", "F'")}
    for v in nonzero.values():
        assert abs(v - third) <= 1e-12
    amps = pattern_amplitudes(res.unnormalized)
    assert abs(amps[("D",)] - third) <= 1e-12
    assert abs(amps[("O", "E'")] - third) <= 1e-12
    assert abs(amps[("O", "F'")] + third) <= 1e-12


def test_click_readout_contracts():
    state = _fresh([])
    with pytest.raises(ContractError):
        click_readout(state)  # system still present
    res = postselect(state, ket(CHI, ("1", "2", "3")))
    with pytest.raises(ContractError):
        click_readout(res.unnormalized)


def test_composite_state_validation():
    with pytest.raises(ContractError):
        initial_state(
            ket(PSI), [PointerSpec(site="X", kind="strong"), PointerSpec(site="X", kind="weak")]
        )


# --- weak registers against the dense oracle --------------------------------


def _package_run(psi, chi, couplings, specs):
    state = initial_state(ket(psi, ("1", "2", "3")), specs)
    for proj, site in couplings:
        reg = state.register(site)
        if reg.kind == "strong":
            state = couple_strong(state, proj, site)
        else:
            state = couple_weak(state, proj, site)
    res = postselect(state, ket(chi, ("1", "2", "3")))
    return res, click_readout(res.conditional) if not res.degenerate else None


def _dense_run(psi, chi, couplings, specs):
    sim = DenseSim(psi, specs)
    index = {s.site: k for k, s in enumerate(specs)}
    for proj, site in couplings:
        sim.couple(proj, index[site])
    prob = sim.postselect(chi)
    return sim, prob


@pytest.mark.parametrize(
    "specs,couplings",
    [
        (
            [PointerSpec(site="F", kind="weak", g=0.01)],
            [("p2", "F")],
        ),
        (
            [PointerSpec(site="O", kind="weak", g=0.01)],
            [("cross", "O")],
        ),
        (
            [
                PointerSpec(site="D", kind="weak", g=0.02, grid_size=121),
                PointerSpec(site="O", kind="weak", g=0.01, grid_size=121),
            ],
            [("p0", "D"), ("cross", "O")],
        ),
        (
            [
                PointerSpec(site="D", kind="strong"),
                PointerSpec(site="O", kind="weak", g=0.01, grid_size=121),
            ],
            [("p0", "D"), ("cross", "O")],
        ),
    ],
)
def test_compact_representation_matches_dense_oracle(specs, couplings):
    projs = {"p0": _proj(0), "p2": _proj(2), "cross": _crossing()}
    couplings = [(projs[name], site) for name, site in couplings]
    res, stats = _package_run(PSI, CHI, couplings, specs)
    sim, prob = _dense_run(PSI, CHI, couplings, specs)
    assert abs(res.probability - prob) <= 1e-13
    for k, spec in enumerate(specs):
        if spec.kind == "strong":
            assert abs(stats.strong[spec.site] - sim.strong_prob(k)) <= 1e-13
            continue
        mean, var = sim.weak_mean_var(k)
        st = stats.weak[spec.site]
        assert abs(st.mean - mean) <= 1e-12
        assert abs(st.variance - var) <= 1e-12
        assert np.max(np.abs(st.probabilities - sim.weak_marginal(k))) <= 1e-12
        assert abs(st.probabilities.sum() - 1.0) <= 1e-12


def test_weak_pointer_mean_tracks_weak_value():
    g = 0.01
    res, stats = _package_run(
        PSI, CHI, [(_proj(2), "F")], [PointerSpec(site="F", kind="weak", g=g)]
    )
    # Weak value at F is -1; conditional mean shifts to about -g.
    assert abs(stats.weak["F"].mean - (-g)) <= 1e-4
    res, stats = _package_run(
        PSI, CHI, [(_crossing(), "O")], [PointerSpec(site="O", kind="weak", g=g)]
    )
    # Vanishing amplitude: the packet does not move at all.
    assert abs(stats.weak["O"].mean) <= 1e-12


def test_weak_coupling_with_identity_projector_shifts_fully():
    g = 0.05
    spec = PointerSpec(site="w", kind="weak", g=g)
    res, stats = _package_run(PSI, CHI, [(identity(3), "w")], [spec])
    sim, prob = _dense_run(PSI, CHI, [(identity(3), "w")], [spec])
    mean, _ = sim.weak_mean_var(0)
    assert abs(stats.weak["w"].mean - mean) <= 1e-12
    assert abs(stats.weak["w"].mean - g) <= 1e-6


def test_weak_coupling_with_zero_g_is_identity():
    state = _fresh([PointerSpec(site="O", kind="weak", g=0.0)])
    out = couple_weak(state, _crossing(), "O")
    assert np.max(np.abs(out.amps - state.amps)) <= 1e-15
