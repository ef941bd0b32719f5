import math

import numpy as np
import pytest

from symcone.jordan import (
    ConeStructure,
    Direction,
    FrameScaling,
    Orthant,
    Psd,
    SecondOrder,
    SingularElementError,
    StructureMismatch,
    determinant,
    frame_scaling_apply,
    in_cone,
    in_interior,
    inner,
    inverse,
    jordan_product,
    min_eigenvalue,
    norm_1_inf,
    norms,
    parse_block,
    project_cone,
    project_simplex,
    quadratic_rep,
    quadratic_rep_generic,
    smat,
    spectral_decompose,
    spectraplex_project,
    svec,
    trace,
)

SOC3 = ConeStructure([SecondOrder(3)])
PSD2 = ConeStructure([Psd(2)])
MIXED = ConeStructure([Psd(3), SecondOrder(4), Orthant(2)])


def soc(vals):
    return SOC3.from_blocks([vals])


def natural(x):
    return SOC3.to_blocks(x)[0]


# -- structure ---------------------------------------------------------------


def test_structure_counts():
    s = ConeStructure([Orthant(3), SecondOrder(4), Psd(3)])
    assert (s.p, s.r, s.r_max, s.d) == (5, 3 + 2 + 3, 3, 3 + 4 + 6)
    e = s.identity()
    assert inner(e, e) == pytest.approx(s.r)


def test_block_validation():
    with pytest.raises(ValueError):
        SecondOrder(1)
    with pytest.raises(ValueError):
        Orthant(0)
    assert parse_block("psd:4") == Psd(4)
    with pytest.raises(ValueError):
        parse_block("cube:3")


def test_svec_isometry():
    rng = np.random.default_rng(0)
    A = rng.standard_normal((4, 4))
    A = A + A.T
    B = rng.standard_normal((4, 4))
    B = B + B.T
    assert svec(A) @ svec(B) == pytest.approx(np.trace(A @ B))
    assert np.allclose(smat(svec(A), 4), A)


def test_elements_are_immutable():
    x = soc([1, 0, 0])
    with pytest.raises(ValueError):
        x.coords[0] = 3.0
    with pytest.raises(AttributeError):
        x.coords = None


# -- products and inner products ----------------------------------------------


def test_product_examples():
    s = ConeStructure([Orthant(2)])
    assert np.allclose(jordan_product(s.element([1, 2]), s.element([3, 4])).coords, [3, 8])
    assert np.allclose(natural(jordan_product(soc([2, 1, 0]), soc([1, 0, 0]))), [2, 1, 0])
    X = PSD2.from_blocks([np.diag([1.0, 2.0])])
    Y = PSD2.from_blocks([np.diag([3.0, 4.0])])
    assert np.allclose(PSD2.to_blocks(jordan_product(X, Y))[0], np.diag([3.0, 8.0]))


def test_soc_product_matches_natural_formula():
    rng = np.random.default_rng(1)
    for _ in range(20):
        a, b = rng.standard_normal(3), rng.standard_normal(3)
        want = np.concatenate([[a @ b], a[0] * b[1:] + b[0] * a[1:]])
        assert np.allclose(natural(jordan_product(soc(a), soc(b))), want)


def test_inner_examples():
    assert inner(soc([2, 1, 0]), soc([1, 0, 0])) == pytest.approx(4.0)
    e = PSD2.identity()
    assert inner(e, e) == pytest.approx(2.0)
    s = ConeStructure([Orthant(3)])
    assert inner(s.element([1, 1, 1]), s.element([1, 1, 1])) == 3.0


def test_inner_is_trace_of_product():
    rng = np.random.default_rng(2)
    for _ in range(20):
        x = MIXED.element(rng.standard_normal(MIXED.d))
        y = MIXED.element(rng.standard_normal(MIXED.d))
        assert inner(x, y) == float(x.coords @ y.coords)
        assert inner(x, y) == pytest.approx(trace(jordan_product(x, y)))


def test_structure_mismatch():
    with pytest.raises(StructureMismatch):
        inner(soc([1, 0, 0]), PSD2.identity())
    with pytest.raises(StructureMismatch):
        jordan_product(soc([1, 0, 0]), PSD2.identity())


# -- spectral machinery -------------------------------------------------------


def test_soc_spectral_example():
    d = spectral_decompose(soc([2, 1, 0]))
    assert np.allclose(d.eigenvalues, [3, 1])
    c1, c2 = d.frame_elements()
    assert np.allclose(natural(c1), [0.5, 0.5, 0])
    assert np.allclose(natural(c2), [0.5, -0.5, 0])


def test_soc_identity_frame():
    d = spectral_decompose(soc([1, 0, 0]))
    assert np.allclose(d.eigenvalues, [1, 1])
    c1, c2 = d.frame_elements()
    assert np.allclose(natural(c1), [0.5, 0.5, 0])
    assert np.allclose((c1 + c2).coords, SOC3.identity().coords)


def test_psd_spectral_example():
    d = spectral_decompose(PSD2.from_blocks([np.diag([2.0, -1.0])]))
    assert np.allclose(d.eigenvalues, [2, -1])
    c1, c2 = (PSD2.to_blocks(c)[0] for c in d.frame_elements())
    assert np.allclose(c1, np.diag([1.0, 0.0]))
    assert np.allclose(c2, np.diag([0.0, 1.0]))


def test_eigenvalues_descending_per_block():
    rng = np.random.default_rng(3)
    x = MIXED.element(rng.standard_normal(MIXED.d))
    d = spectral_decompose(x)
    for b in MIXED.simple_blocks:
        lam = d.block_eigenvalues(b.index)
        assert np.all(np.diff(lam) <= 0)


def test_norm_examples():
    assert np.allclose(norms(soc([2, 1, 0])), (math.sqrt(10), 4, 3))
    s = ConeStructure([Orthant(3)])
    assert np.allclose(norms(s.identity()), (math.sqrt(3), 3, 1))
    assert norms(s.zeros()) == (0.0, 0.0, 0.0)


def test_norm_1_inf():
    s = ConeStructure([Orthant(2), SecondOrder(3)])
    x = s.from_blocks([[1.0, -2.0], [2.0, 1.0, 0.0]])
    assert norm_1_inf(x) == pytest.approx(4.0)


def test_norm_ordering():
    rng = np.random.default_rng(4)
    for _ in range(30):
        x = MIXED.element(rng.standard_normal(MIXED.d))
        nj, n1, ninf = norms(x)
        assert ninf <= nj + 1e-12 and nj <= n1 + 1e-12


def test_project_cone_examples():
    assert np.allclose(natural(project_cone(soc([0, 1, 0]))), [0.5, 0.5, 0])
    x = soc([3, 1, 2])
    assert project_cone(x).allclose(x)


def test_project_cone_idempotent():
    rng = np.random.default_rng(5)
    for _ in range(20):
        x = MIXED.element(rng.standard_normal(MIXED.d))
        px = project_cone(x)
        assert project_cone(px).allclose(px, 1e-10)
        assert in_cone(px, 1e-12)


def test_eigen_functions_soc():
    x = soc([2, 1, 0])
    assert determinant(x) == pytest.approx(3.0)
    assert trace(x) == pytest.approx(4.0)
    lam, u = min_eigenvalue(x)
    assert lam == pytest.approx(1.0)
    assert np.allclose(natural(u), [0.5, -0.5, 0])
    assert inner(MIXED.identity(), MIXED.identity()) == pytest.approx(MIXED.r)


def test_min_eigenvalue_embedding():
    s = ConeStructure([Orthant(2), SecondOrder(3)])
    x = s.from_blocks([[5.0, 4.0], [2.0, 1.0, 0.0]])
    lam, u = min_eigenvalue(x)
    assert lam == pytest.approx(1.0)
    assert inner(s.identity(), u) == pytest.approx(1.0)
    assert np.allclose(u.coords[:2], 0.0)
    assert inner(x, u) == pytest.approx(lam)


def test_identity_functions():
    e = MIXED.identity()
    assert inverse(e).allclose(e)
    assert determinant(e) == pytest.approx(1.0)
    assert trace(e) == pytest.approx(MIXED.r)


def test_psd_inverse():
    X = PSD2.from_blocks([np.diag([4.0, 1.0])])
    assert np.allclose(PSD2.to_blocks(inverse(X))[0], np.diag([0.25, 1.0]))
    with pytest.raises(SingularElementError):
        inverse(PSD2.from_blocks([np.diag([1.0, 0.0])]))


def test_inverse_is_product_inverse():
    rng = np.random.default_rng(6)
    x = MIXED.element(rng.standard_normal(MIXED.d))
    assert jordan_product(x, inverse(x)).allclose(MIXED.identity(), 1e-8)


def test_membership():
    assert in_interior(soc([2, 1, 0]))
    assert not in_interior(soc([1, 1, 0]))
    assert in_cone(soc([1, 1, 0]))
    assert not in_cone(soc([0, 1, 0]))


# -- quadratic representation -------------------------------------------------


def test_quadratic_rep_examples():
    rng = np.random.default_rng(7)
    x = MIXED.element(rng.standard_normal(MIXED.d))
    assert quadratic_rep(MIXED.identity(), x).allclose(x, 1e-12)
    V = PSD2.from_blocks([np.diag([2.0, 1.0])])
    assert np.allclose(PSD2.to_blocks(quadratic_rep(V, PSD2.identity()))[0], np.diag([4.0, 1.0]))


def test_quadratic_rep_matches_definition():
    rng = np.random.default_rng(8)
    for _ in range(20):
        v = MIXED.element(rng.standard_normal(MIXED.d))
        x = MIXED.element(rng.standard_normal(MIXED.d))
        assert quadratic_rep(v, x).allclose(quadratic_rep_generic(v, x), 1e-10)


def test_quadratic_rep_det_identity():
    rng = np.random.default_rng(9)
    for _ in range(50):
        v = MIXED.element(rng.standard_normal(MIXED.d))
        x = MIXED.element(rng.standard_normal(MIXED.d))
        lhs = determinant(quadratic_rep(v, x))
        rhs = determinant(v) ** 2 * determinant(x)
        assert abs(lhs - rhs) <= 1e-9 * abs(rhs)


def test_quadratic_rep_preserves_cone():
    rng = np.random.default_rng(10)
    for _ in range(20):
        v = project_cone(MIXED.element(rng.standard_normal(MIXED.d))) + MIXED.identity() * 0.1
        x = project_cone(MIXED.element(rng.standard_normal(MIXED.d)))
        assert in_cone(quadratic_rep(v, x), 1e-10)


# -- frame scalings -----------------------------------------------------------


def test_frame_scaling_inverse_on_cut_idempotent():
    d = spectral_decompose(soc([2, 1, 0]))
    c1 = d.idempotent(0)
    out = frame_scaling_apply(d, 0, [0], 0.25, c1, Direction.INVERSE)
    assert out.allclose(c1 * 4, 1e-12)


def test_frame_scaling_forward_fixes_uncut():
    d = spectral_decompose(soc([2, 1, 0]))
    c2 = d.idempotent(1)
    assert frame_scaling_apply(d, 0, [0], 0.25, c2).allclose(c2, 1e-12)


def test_frame_scaling_forward_on_identity():
    d = spectral_decompose(soc([2, 1, 0]))
    c1, c2 = d.frame_elements()
    out = frame_scaling_apply(d, 0, [0], 0.25, SOC3.identity())
    assert out.allclose(c1 * 0.25 + c2, 1e-12)


def test_frame_scaling_roundtrip_and_locality():
    rng = np.random.default_rng(11)
    v = MIXED.element(rng.standard_normal(MIXED.d))
    x = MIXED.element(rng.standard_normal(MIXED.d))
    d = spectral_decompose(v)
    for blk, cut in [(0, [0, 2]), (1, [1]), (3, [0])]:
        sc = FrameScaling.from_decomposition(d, blk, cut, 0.3)
        y = sc.apply(x)
        outside = np.ones(MIXED.d, bool)
        outside[MIXED.simple_blocks[blk].coords] = False
        assert np.array_equal(y.coords[outside], x.coords[outside])
        assert sc.apply(y, Direction.INVERSE).allclose(x, 1e-10)


def test_frame_scaling_rejects_empty_cut():
    d = spectral_decompose(soc([2, 1, 0]))
    with pytest.raises(ValueError):
        FrameScaling.from_decomposition(d, 0, [], 0.25)


# -- simplex / spectraplex ----------------------------------------------------


def test_spectraplex_examples():
    e = MIXED.identity() / MIXED.r
    assert spectraplex_project(e).allclose(e, 1e-12)
    s = ConeStructure([Orthant(2)])
    assert np.allclose(spectraplex_project(s.element([2.0, 0.0])).coords, [1.0, 0.0])
    s3 = ConeStructure([Orthant(3)])
    assert np.allclose(spectraplex_project(s3.element([0.5, 0.3, 0.2])).coords, [0.5, 0.3, 0.2])


def test_project_simplex_is_optimal():
    # compare against a brute-force search over active sets
    rng = np.random.default_rng(12)
    for _ in range(30):
        v = rng.standard_normal(4)
        w = project_simplex(v)
        assert w.sum() == pytest.approx(1.0)
        assert np.all(w >= 0)
        best = np.inf
        for mask in range(1, 16):
            idx = [i for i in range(4) if mask >> i & 1]
            cand = np.zeros(4)
            cand[idx] = v[idx] - (v[idx].sum() - 1) / len(idx)
            if np.all(cand >= 0):
                best = min(best, np.linalg.norm(cand - v))
        assert np.linalg.norm(w - v) == pytest.approx(best, abs=1e-12)
