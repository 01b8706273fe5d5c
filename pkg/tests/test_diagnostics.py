import numpy as np
import pytest
import scipy.linalg

from gdm_pme.diagnostics import (SCALAR_PROBES, VECTOR_PROBES, coercivity_constant, consistency_defect,
                                 consistency_minimizer, dual_norm, gradient_gram, limit_conformity_defect)
from gdm_pme.gd import gradient_quadrature, region_quadrature
from gdm_pme.hmm import build_hmm
from gdm_pme.mesh import generate_polygonal, generate_triangular
from gdm_pme.mlp1 import build_mlp1


@pytest.fixture(params=["mlp1", "hmm-hex", "hmm-tri"])
def tiny(request):
    return {"mlp1": lambda: build_mlp1(generate_triangular(3)),
            "hmm-hex": lambda: build_hmm(generate_polygonal(2)),
            "hmm-tri": lambda: build_hmm(generate_triangular(2))}[request.param]()


def _free_basis(gd):
    """Columns: full-length unit vectors of the free dofs."""
    E = np.zeros((gd.ndof, len(gd.free)))
    E[gd.free, np.arange(len(gd.free))] = 1.0
    return E


def _black_box_gram(gd):
    """Dense Gram matrices of Pi_D and grad_D over the free basis, from field evaluations only."""
    E = _free_basis(gd)
    x, q, owner = region_quadrature(gd, levels=0)
    xg, qg, og = gradient_quadrature(gd, levels=0)
    P = np.array([np.sqrt(q) * e[owner] for e in E.T]).T
    G = np.array([(np.sqrt(qg)[:, None] * gd.gradient(e)[og]).ravel() for e in E.T]).T
    return P, G


def test_gram_matches_black_box(tiny):
    _, G = _black_box_gram(tiny)
    np.testing.assert_allclose(gradient_gram(tiny).toarray(), G.T @ G, atol=1e-12)


def test_dual_norm_oracle(tiny, rng):
    P, G = _black_box_gram(tiny)
    K = G.T @ G
    for _ in range(5):
        v = rng.normal(size=tiny.ndof)
        ell = P.T @ (P @ v[tiny.free])  # phi -> int Pi v Pi phi
        ref = np.sqrt(ell @ np.linalg.solve(K, ell))
        assert dual_norm(tiny, v) == pytest.approx(ref, rel=1e-8)
        # sampling never beats the supremum, and the maximiser attains it
        phis = rng.normal(size=(200, len(tiny.free)))
        ratios = np.abs(phis @ ell) / np.sqrt(np.einsum("ij,jk,ik->i", phis, K, phis))
        assert ratios.max() <= ref * (1 + 1e-10)
        best = np.linalg.solve(K, ell)
        assert abs(best @ ell) / np.sqrt(best @ K @ best) == pytest.approx(ref, rel=1e-10)
    assert dual_norm(tiny, np.zeros(tiny.ndof)) == 0.0


def test_coercivity_oracle(tiny):
    P, G = _black_box_gram(tiny)
    lam = scipy.linalg.eigh(P.T @ P, G.T @ G, eigvals_only=True)
    assert coercivity_constant(tiny, tol=1e-13) == pytest.approx(np.sqrt(lam.max()), rel=1e-8)


def test_dual_norm_bounded_by_coercivity(tiny, rng):
    c = coercivity_constant(tiny)
    for _ in range(10):
        v = rng.normal(size=tiny.ndof)
        v[tiny.fixed] = 0.0
        l2 = np.sqrt(tiny.mass @ v**2)
        assert dual_norm(tiny, v) <= c * l2 * (1 + 1e-8)


@pytest.mark.parametrize("name", sorted(SCALAR_PROBES))
def test_consistency_minimizer_oracle(tiny, name):
    phi, grad_phi = SCALAR_PROBES[name]
    levels = 2
    E = _free_basis(tiny)
    xg, qg, og = gradient_quadrature(tiny, levels, "midpoint")
    sg = np.sqrt(qg)
    # least squares over the free dofs of the discretised functional, built from field evaluations
    xm, qm, om = region_quadrature(tiny, levels, "midpoint")
    Pm = np.array([np.sqrt(qm) * e[om] for e in E.T]).T
    G = np.array([(sg[:, None] * tiny.gradient(e)[og]).ravel() for e in E.T]).T
    A = np.vstack([Pm, G])
    b = np.concatenate([np.sqrt(qm) * phi(xm), (sg[:, None] * grad_phi(xg)).ravel()])
    ref = np.linalg.lstsq(A, b, rcond=None)[0]
    w = consistency_minimizer(tiny, phi, grad_phi, levels)
    np.testing.assert_allclose(w[tiny.free], ref, atol=1e-8 * max(1.0, np.abs(ref).max()))
    assert not np.any(w[tiny.fixed])


@pytest.mark.parametrize("name", sorted(VECTOR_PROBES))
def test_limit_conformity_oracle(tiny, name):
    phi, div_phi = VECTOR_PROBES[name]
    E = _free_basis(tiny)
    xm, qm, om = region_quadrature(tiny, 1, "midpoint")
    xg, qg, og = gradient_quadrature(tiny, 1, "midpoint")
    ell = np.array([(qg[:, None] * tiny.gradient(e)[og] * phi(xg)).sum() + (qm * e[om] * div_phi(xm)).sum()
                    for e in E.T])
    _, G = _black_box_gram(tiny)
    ref = np.sqrt(ell @ np.linalg.solve(G.T @ G, ell))
    assert limit_conformity_defect(tiny, phi, div_phi) == pytest.approx(ref, rel=1e-8, abs=1e-13)


def test_mlp1_is_exactly_conforming_for_divergence_free_fields():
    # conforming P1 gradients integrate by parts exactly; shear is divergence free with
    # a piecewise-smooth normal trace, so only the quadrature of phi . grad v remains
    gd = build_mlp1(generate_triangular(8))
    phi, div_phi = VECTOR_PROBES["shear"]
    assert limit_conformity_defect(gd, phi, div_phi) < 1e-12


def test_defect_arguments(tiny):
    phi, grad_phi = SCALAR_PROBES["bubble"]
    s2 = consistency_defect(tiny, phi, grad_phi, m=2.0)
    s05 = consistency_defect(tiny, phi, grad_phi, m=0.5)
    assert s2 > 0 and s05 > 0
