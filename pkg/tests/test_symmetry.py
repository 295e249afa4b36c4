"""Helmholtz conditions, prolongations, symmetry transforms, Noether currents."""

import numpy as np

from varjet.einstein import (EHLagrangian, affine_supplier,
                             covariant_noether_current, natural_lift)
from varjet.jets import (JetFunction, JetPoint, PolySection, jet_of_section,
                         pair_index, sym_pairs)
from varjet.metric import metric_from_jet_point, random_metric_jet
from varjet.poly import Poly, parse_poly
from varjet.varcore import (GenericAffineSupplier, SecondOrderLagrangian,
                            VectorField, helmholtz_residuals, noether_current,
                            noether_divergence, projectability_check, prolong,
                            random_projectable_lagrangian, symmetry_transform)


def random_metric_section(rng, n, base_diag, scale=0.15):
    polys = []
    for k, (a, b) in enumerate(sym_pairs(n)):
        p = Poly.constant(n, base_diag[a] if a == b else 0.0)
        for i in range(n):
            p = p + round(rng.uniform(-scale, scale), 4) * Poly.variable(n, i)
        for i, j in sym_pairs(n):
            p = p + round(rng.uniform(-scale / 2, scale / 2), 4) \
                * Poly.variable(n, i) * Poly.variable(n, j)
        polys.append(p)
    return PolySection(n, polys)


# ---------------------------------------------------------------------------
# Helmholtz


def test_helmholtz_eh_small_dims():
    rng = np.random.default_rng(21)
    for n, sig, diag, cnt in [(2, (2, 0), [1.0, 1.0], 3), (3, (3, 0), [1.0, 1.0, 1.0], 2)]:
        eh = EHLagrangian(n, sig)
        sup = affine_supplier(eh)
        for _ in range(cnt):
            s = random_metric_section(rng, n, diag)
            x = [rng.uniform(-0.3, 0.3) for _ in range(n)]
            res = helmholtz_residuals(sup, s, x)
            assert res.max_all <= 1e-7, (n, res)


def test_helmholtz_first_order_toy():
    # L = (y')^2/2 - y^4/4 in one base dimension: variational, so all
    # three families vanish.
    F = JetFunction(2, lambda p: 0.5 * p.y1(0, 0) ** 2 - 0.25 * p.y[0] ** 4)
    lag = SecondOrderLagrangian(1, 1, F)
    sup = GenericAffineSupplier(lag)
    names = {"x1": 0}
    s = PolySection(1, [parse_poly("1 + x1 - x1^2/2 + x1^3/7", names, 1)])
    res = helmholtz_residuals(sup, s, [0.2])
    assert res.max_all <= 1e-8


def test_helmholtz_negative_control():
    # perturbing dA/dy (an E-coefficient) asymmetrically must be detected
    rng = np.random.default_rng(22)
    lag = random_projectable_lagrangian(rng, 2, 2)
    sup = GenericAffineSupplier(lag)
    s = PolySection(2, [Poly.constant(2, 0.2) + 0.3 * Poly.variable(2, 0),
                        Poly.constant(2, -0.1) + 0.4 * Poly.variable(2, 1)])

    def perturb(tables, xs):
        tables["V"][(0, 1, 0)] += 1.0
        return tables

    res = helmholtz_residuals(sup, s, [0.1, -0.2], perturb=perturb)
    assert res.max_all > 0.1


# ---------------------------------------------------------------------------
# prolongations


def test_prolong_vertical_constant_field():
    n, m = 2, 1
    X = VectorField(n, m, [Poly.constant(n, 0)] * n,
                    [Poly.constant(n + m, 3.0)])
    p = JetPoint(n, m, 2, (0.1, 0.2), (0.5,), ((1.0, 2.0),), ((0.3, 0.4, 0.5),))
    pro = prolong(X, p)
    assert pro.v == [3.0]
    assert all(v == 0 for row in pro.v1 for v in row)
    assert all(v == 0 for row in pro.v2 for v in row)


def test_prolong_base_dilation_hand_case():
    # X = x^1 d/dx^1, n=m=1: v_1 = -y_1, v_11 = -2 y_(11)
    n, m = 1, 1
    X = VectorField(n, m, [Poly.variable(n, 0)], [Poly.constant(n + m, 0)])
    p = JetPoint(n, m, 2, (0.7,), (0.3,), ((1.5,),), ((2.5,),))
    pro = prolong(X, p)
    assert pro.v1[0][0] == -1.5
    assert pro.v2[0][0] == -5.0


def test_prolong_natural_lift_matches_displayed_formula():
    """(X'_M)^(1) components equal the explicit second-order display."""
    rng = np.random.default_rng(23)
    n = 3
    names = {f"x{i+1}": i for i in range(n)}
    u = [parse_poly("x1*x2 - x3^2", names, n),
         parse_poly("x2^2/2 + x1", names, n),
         parse_poly("x1*x3", names, n)]
    m = len(sym_pairs(n))
    X = VectorField(n, m, u, natural_lift(n, u))
    mj = random_metric_jet(rng, n, (3, 0), order=2)
    p = mj.to_jet_point()
    pro = prolong(X, p)
    x = p.x
    du = [[u[h].diff(i).eval(x) for i in range(n)] for h in range(n)]
    d2u = [[[u[h].diff(i).diff(k).eval(x) for k in range(n)] for i in range(n)]
           for h in range(n)]
    for a, (i, j) in enumerate(sym_pairs(n)):
        for k in range(n):
            ref = 0.0
            for h in range(n):
                ref -= d2u[h][i][k] * mj.comp(h, j) + d2u[h][j][k] * mj.comp(h, i)
                ref -= du[h][i] * mj.dcomp(h, j, k) + du[h][j] * mj.dcomp(h, i, k)
                ref -= du[h][k] * mj.dcomp(i, j, h)
            assert abs(pro.v1[a][k] - ref) <= 1e-12


# ---------------------------------------------------------------------------
# symmetry transform


def test_symmetry_transform_zero_field():
    rng = np.random.default_rng(24)
    lag = random_projectable_lagrangian(rng, 2, 1)
    sup = GenericAffineSupplier(lag)
    n, m = 2, 1
    X = VectorField(n, m, [Poly.constant(n, 0)] * n, [Poly.constant(n + m, 0)])
    tsup, Lp = symmetry_transform(sup, X, n, m)
    p = JetPoint(n, m, 2, (0.2, -0.1), (0.4,), ((0.5, 0.6),), ((0.1, 0.2, 0.3),))
    assert abs(Lp(p)) == 0.0


def test_symmetry_transform_natural_lift_annihilates_eh():
    rng = np.random.default_rng(25)
    n = 2
    names = {f"x{i+1}": i for i in range(n)}
    u = [parse_poly("x1^2 - x2", names, n), parse_poly("x1*x2 + 1", names, n)]
    m = len(sym_pairs(n))
    X = VectorField(n, m, u, natural_lift(n, u))
    eh = EHLagrangian(n, (2, 0))
    tsup, Lp = symmetry_transform(affine_supplier(eh), X, n, m)
    for _ in range(4):
        mj = random_metric_jet(rng, n, (2, 0), order=2)
        val = Lp(mj.to_jet_point())
        assert abs(float(val)) <= 1e-8


def test_symmetry_transform_preserves_projectability():
    rng = np.random.default_rng(26)
    n, m = 2, 1
    lag = random_projectable_lagrangian(rng, n, m)
    sup = GenericAffineSupplier(lag)
    names = {f"x{i+1}": i for i in range(n)}
    u = [parse_poly("x1 + x2^2/3", names, n), parse_poly("1 - x1*x2/2", names, n)]
    v = [Poly.variable(n + m, 2) ** 2 * 0.3 + Poly.variable(n + m, 0) * 0.2]
    X = VectorField(n, m, u, v)
    tsup, Lp = symmetry_transform(sup, X, n, m)
    lag_p = SecondOrderLagrangian(n, m, Lp)
    pts = []
    for _ in range(3):
        pts.append(JetPoint(n, m, 2,
                            tuple(rng.uniform(-1, 1, n)), tuple(rng.uniform(-1, 1, m)),
                            tuple(tuple(rng.uniform(-1, 1, n)) for _ in range(m)),
                            tuple(tuple(rng.uniform(-1, 1, 3)) for _ in range(m))))
    rep = projectability_check(lag_p, pts, tol=1e-7)
    assert rep.affine and rep.projects_to_J1, rep.summary()


# ---------------------------------------------------------------------------
# Noether currents


def test_noether_zero_field_zero_current():
    eh = EHLagrangian(2, (2, 0))
    sup = affine_supplier(eh)
    n, m = 2, 3
    X = VectorField(n, m, [Poly.constant(n, 0)] * n,
                    [Poly.constant(n + m, 0)] * m)
    s = PolySection(2, [Poly.constant(2, 1.0), Poly.constant(2, 0.0),
                        Poly.constant(2, 1.0)])
    cur = noether_current(sup, X, s, (0.1, 0.2))
    assert all(v == 0 for v in cur)


def test_noether_divergence_natural_lift_flat():
    rng = np.random.default_rng(27)
    n = 3
    eh = EHLagrangian(n, (3, 0))
    sup = affine_supplier(eh)
    names = {f"x{i+1}": i for i in range(n)}
    u = [parse_poly("x2^2 + x1*x3", names, n),
         parse_poly("x1^2 - x3", names, n),
         parse_poly("x1*x2*x3", names, n)]
    m = len(sym_pairs(n))
    X = VectorField(n, m, u, natural_lift(n, u))
    s = PolySection(n, [Poly.constant(n, 1.0 if a == b else 0.0)
                        for a, b in sym_pairs(n)])
    for _ in range(3):
        x = [rng.uniform(-0.5, 0.5) for _ in range(n)]
        div = noether_divergence(sup, X, s, x)
        assert abs(div) <= 1e-6


def test_noether_jet_vs_covariant_flat_backgrounds():
    """The jet-coefficient current of a natural lift equals the covariant
    double-contraction expression on flat backgrounds."""
    rng = np.random.default_rng(28)
    n = 3
    eh = EHLagrangian(n, (1, 2))
    sup = affine_supplier(eh)
    names = {f"x{i+1}": i for i in range(n)}
    u = [parse_poly("x2^2", names, n), parse_poly("x1*x3 + x2", names, n),
         parse_poly("x3^2 - x1^2", names, n)]
    m = len(sym_pairs(n))
    X = VectorField(n, m, u, natural_lift(n, u))
    eta = [-1.0, 1.0, 1.0]
    # constant flat metric
    s_const = PolySection(n, [Poly.constant(n, eta[a] if a == b else 0.0)
                              for a, b in sym_pairs(n)])
    # flat polynomial pullback metric
    phi = [parse_poly("x1 + x2^2/8 + x1*x3/9", names, n),
           parse_poly("x2 - x1^2/7", names, n),
           parse_poly("x3 + x1*x2/6", names, n)]
    polys = []
    for a, b in sym_pairs(n):
        acc = Poly.constant(n, 0)
        for c in range(n):
            acc = acc + eta[c] * phi[c].diff(a) * phi[c].diff(b)
        polys.append(acc)
    s_pull = PolySection(n, polys)
    for s in (s_const, s_pull):
        for _ in range(2):
            x = [rng.uniform(-0.3, 0.3) for _ in range(n)]
            jet_cur = noether_current(sup, X, s, x)
            p3 = jet_of_section(s, x, 3)
            mj = metric_from_jet_point(p3, (1, 2))
            cov_cur = covariant_noether_current(n, u, mj, x)
            for a, b in zip(jet_cur, cov_cur):
                assert abs(a - b) <= 1e-7 * max(1.0, abs(a))


def test_noether_minkowski_hand_component():
    # u = (x^2)^2 d/dx^1, flat Minkowski: the covariant formula reduces to
    # second partials of u; component 1 = eps_1 sum_c u^c_{,1c}
    # - sum_a eps_a u^1_{,aa} = -2.
    n = 4
    eh = EHLagrangian(n, (1, 3))
    sup = affine_supplier(eh)
    names = {f"x{i+1}": i for i in range(n)}
    u = [parse_poly("x2^2", names, n)] + [Poly.constant(n, 0)] * 3
    m = len(sym_pairs(n))
    X = VectorField(n, m, u, natural_lift(n, u))
    eta = [-1.0, 1.0, 1.0, 1.0]
    s = PolySection(n, [Poly.constant(n, eta[a] if a == b else 0.0)
                        for a, b in sym_pairs(n)])
    x = (0.3, 0.5, -0.2, 0.1)
    cur = noether_current(sup, X, s, x)
    assert abs(cur[0] + 2.0) <= 1e-10
    p3 = jet_of_section(s, x, 3)
    cov = covariant_noether_current(n, u, metric_from_jet_point(p3, (1, 3)), x)
    assert abs(cov[0] + 2.0) <= 1e-12
