"""Linearized field equations along extremals (Jacobi equations).

The generic residual linearizes the Hamilton-Cartan system of a projectable
second-order Lagrangian: for a vertical field V along a section s,

    d2V/dx^i dx^j (dp_a^i/dy'^c_j) - V^c {...} - dV^c/dx^h {...} = 0,

with every brace a combination of first and second partials of the momenta
and Hamiltonian along j^1 s.  The Einstein-Hilbert specialization is the
explicit second-order operator in the metric, Christoffel symbols and
curvature; at a constant flat metric it degenerates to a constant-coefficient
operator whose matrix (quadratic polynomials in the formal symbols D^1..D^n)
is derived here exactly over the rationals, and whose polynomial solution
spaces are exact nullspace computations.
"""

from __future__ import annotations

from dataclasses import dataclass
from fractions import Fraction
from itertools import combinations_with_replacement

import numpy as np

from .fwd import value_of
from .jets import (JetPoint, MultiIndex, PolySection, jet_of_section,
                   pair_index, sym_pairs)
from .linalg import in_row_space, nullspace, rank, rref
from .metric import christoffel, curvature, metric_from_jet_point
from .poly import Poly
from .varcore import pipeline


# ---------------------------------------------------------------------------
# generic linearization


def jacobi_residual(supplier, s: PolySection, v_polys: list, x,
                    extremal_tol: float = 1e-7):
    """Residual of the linearized Hamilton-Cartan equation at x.

    `v_polys` are the components V^c of the vertical field (polynomials in
    the base variables, one per fibre coordinate).  Returns (residuals,
    hc_gap): hc_gap is the max first-family Hamilton-Cartan residual of s at
    x, attached as a warning when s is not extremal there.
    """
    n, m = s.n, s.m
    p2 = jet_of_section(s, x, 2)
    data = pipeline(supplier, p2.truncated(1), cap=2)
    jv = data.jv

    def dp(al, i, *labs):
        return data.p[(al, i)].deriv(*(jv.id_of[lab] for lab in labs))

    def dh(*labs):
        return data.h.deriv(*(jv.id_of[lab] for lab in labs))

    v0 = [p.eval(x) for p in v_polys]
    v1 = [[p.diff(i).eval(x) for i in range(n)] for p in v_polys]
    v2 = [[[p.diff(i).diff(j).eval(x) for j in range(n)] for i in range(n)]
          for p in v_polys]

    res = []
    for al in range(m):
        lhs = 0
        for c in range(m):
            for i in range(n):
                for j in range(n):
                    lhs = lhs + v2[c][i][j] * dp(al, i, ("y1", c, j))
        acc = lhs
        for c in range(m):
            br = dh(("y", al), ("y", c))
            for be in range(m):
                for i in range(n):
                    br = br + p2.y1(be, i) * (dp(be, i, ("y", al), ("y", c))
                                              - dp(al, i, ("y", be), ("y", c)))
                    for j in range(n):
                        br = br - p2.y2(be, i, j) * dp(al, i, ("y", c), ("y1", be, j))
            for i in range(n):
                br = br - dp(al, i, ("x", i), ("y", c))
            acc = acc - v0[c] * br
        for c in range(m):
            for h in range(n):
                br = dp(c, h, ("y", al)) - dp(al, h, ("y", c))
                br = br + dh(("y", al), ("y1", c, h))
                for be in range(m):
                    for i in range(n):
                        br = br + p2.y1(be, i) * (dp(be, i, ("y", al), ("y1", c, h))
                                                  - dp(al, i, ("y", be), ("y1", c, h)))
                        for j in range(n):
                            br = br - p2.y2(be, i, j) \
                                * dp(al, i, ("y1", be, j), ("y1", c, h))
                for i in range(n):
                    br = br - dp(al, i, ("x", i), ("y1", c, h))
                acc = acc - v1[c][h] * br
        res.append(acc)

    # extremality of the background (first H-C family, momentum-space
    # y-partial of H via the chain rule)
    hc_gap = 0.0
    for al in range(m):
        g = -data.h.deriv(jv.id_of[("y", al)])
        from .jets import total_derivative_j1
        for be in range(m):
            for i in range(n):
                g = g - p2.y1(be, i) * data.p[(be, i)].deriv(jv.id_of[("y", al)])
        for i in range(n):
            g = g + total_derivative_j1(data.p[(al, i)], jv, p2, i)
        hc_gap = max(hc_gap, abs(float(value_of(g))))
    return res, hc_gap


# ---------------------------------------------------------------------------
# Einstein-Hilbert specialization


def eh_jacobi_residual(s: PolySection, v_polys: list, x, signature):
    """The displayed second-order linear operator on vertical metric fields,
    evaluated along a metric section at x (ring-generic: exact over
    Fractions).  v_polys are the stored components V^{ab}, a <= b."""
    n = s.n
    p2 = jet_of_section(s, x, 2)
    mj = metric_from_jet_point(p2, signature)
    cdat = curvature(mj)
    gam = cdat.gamma
    g = cdat.ginv
    riem = cdat.riemann

    def vval(a, b):
        return v_polys[pair_index(n, a, b)]

    v0 = {}
    v1 = {}
    v2 = {}
    for a in range(n):
        for b in range(n):
            p = vval(a, b)
            v0[(a, b)] = p.eval(x)
            for i in range(n):
                v1[(a, b, i)] = p.diff(i).eval(x)
                for j in range(n):
                    v2[(a, b, i, j)] = p.diff(i).diff(j).eval(x)

    def d(i, j):
        return 1 if i == j else 0

    # helpers for the first-order bracket: T[c] = g^{sc} Gamma^l_{ls}
    # - g^{ls} (d_l g_{sb}) g^{cb}
    tr_gam = [sum(gam[la][la][sg] for la in range(n)) for sg in range(n)]
    t_vec = []
    for c in range(n):
        t1 = sum(g[sg][c] * tr_gam[sg] for sg in range(n))
        t2 = 0
        for la in range(n):
            for sg in range(n):
                for be in range(n):
                    t2 = t2 + g[la][sg] * mj.dcomp(sg, be, la) * g[c][be]
        t_vec.append(t1 - t2)

    half = Fraction(1, 2)
    out = []
    for mu, nu in sym_pairs(n):
        acc = 0
        for a in range(n):
            for b in range(n):
                # second-order part
                for i in range(n):
                    for j in range(n):
                        co = ((d(a, nu) * d(j, mu) + d(a, mu) * d(nu, j)) * g[i][b]
                              - g[i][j] * d(a, nu) * d(b, mu)
                              - g[a][b] * d(i, nu) * d(j, mu))
                        if co != 0:
                            acc = acc + half * co * v2[(a, b, i, j)]
                # first-order part
                for i in range(n):
                    br = half * g[a][b] * gam[i][mu][nu] - g[i][b] * gam[a][mu][nu]
                    co = d(a, nu) * d(i, mu) + d(a, mu) * d(i, nu)
                    if co:
                        br = br + half * co * t_vec[b]
                    if d(a, mu) * d(b, nu):
                        br = br - half * t_vec[i]
                    for la in range(n):
                        br = br + half * d(i, nu) * g[la][a] * gam[b][mu][la]
                        br = br + half * d(i, mu) * g[la][a] * gam[b][la][nu]
                        br = br + half * d(b, nu) * (g[la][i] * gam[a][mu][la]
                                                     - g[la][a] * gam[i][mu][la])
                        br = br + half * d(b, mu) * (g[la][i] * gam[a][nu][la]
                                                     - g[la][a] * gam[i][nu][la])
                    if br != 0:
                        acc = acc + br * v1[(a, b, i)]
                # zero-order part
                br0 = 0
                for la in range(n):
                    inner = riem[a][mu][nu][la]
                    for r in range(n):
                        for t in range(n):
                            for sg in range(n):
                                inner = inner + g[a][r] * mj.comp(t, sg) \
                                    * (gam[t][r][nu] * gam[sg][mu][la]
                                       - gam[t][r][la] * gam[sg][mu][nu])
                    for sg in range(n):
                        inner = inner + gam[a][nu][sg] * gam[sg][mu][la] \
                            - gam[a][la][sg] * gam[sg][mu][nu] \
                            - gam[sg][sg][la] * gam[a][mu][nu] \
                            + gam[a][mu][sg] * gam[sg][nu][la]
                    br0 = br0 + g[la][b] * inner
                if br0 != 0:
                    acc = acc + br0 * v0[(a, b)]
        out.append(acc)
    return out


# ---------------------------------------------------------------------------
# the flat constant-coefficient operator


@dataclass
class DiffOpMatrix:
    """Matrix of quadratic polynomials in the formal symbols D^1..D^n.

    entries[A][B] maps a sorted index pair (a, b) to the rational
    coefficient of D^a D^b in P^A_B."""

    n: int
    npairs: int
    entries: list

    def apply_poly(self, v_polys: list) -> list:
        out = []
        for arow in range(self.npairs):
            acc = Poly.constant(self.n, 0)
            for brow in range(self.npairs):
                for (a, b), c in self.entries[arow][brow].items():
                    acc = acc + c * v_polys[brow].diff(a).diff(b)
            out.append(acc)
        return out

    def mode_matrix(self, k) -> list:
        """P(D -> i k): D^a D^b maps to -k_a k_b; real rational output."""
        out = []
        for arow in range(self.npairs):
            row = []
            for brow in range(self.npairs):
                acc = Fraction(0)
                for (a, b), c in self.entries[arow][brow].items():
                    acc -= c * k[a] * k[b]
                row.append(acc)
            out.append(row)
        return out


def flat_operator_matrix(eps) -> DiffOpMatrix:
    """Derive the constant-coefficient operator at the metric diag(eps)
    exactly, by applying the E-H Jacobi operator to monomial probes."""
    n = len(eps)
    npairs = len(sym_pairs(n))
    npos = sum(1 for e in eps if e > 0)
    sig = (npos, n - npos)
    sec = PolySection(n, [Poly.constant(n, Fraction(eps[a]) if a == b else Fraction(0))
                          for a, b in sym_pairs(n)])
    x0 = tuple(Fraction(0) for _ in range(n))
    entries = [[{} for _ in range(npairs)] for _ in range(npairs)]
    zero = [Poly.constant(n, 0) for _ in range(npairs)]
    for brow in range(npairs):
        for (a, b) in combinations_with_replacement(range(n), 2):
            probe = list(zero)
            probe[brow] = Poly.variable(n, a) * Poly.variable(n, b)
            res = eh_jacobi_residual(sec, probe, x0, sig)
            scale = Fraction(1, 1 if a != b else 2)
            for arow in range(npairs):
                c = res[arow] * scale
                if c != 0:
                    entries[arow][brow][(a, b)] = Fraction(c)
    return DiffOpMatrix(n, npairs, entries)


# ---------------------------------------------------------------------------
# polynomial solution spaces


def _homogeneous_exponents(n: int, r: int):
    out = []

    def rec(prefix, rest, left):
        if rest == 1:
            out.append(tuple(prefix + [left]))
            return
        for k in range(left + 1):
            rec(prefix + [k], rest - 1, left - k)

    rec([], n, r)
    return out


@dataclass
class SolutionSpace:
    degree: int
    dimension: int
    monomials: list        # exponent tuples
    basis: list            # vectors of Fractions over (field, monomial) cols
    constraint_rank: int

    def basis_fields(self, n: int) -> list:
        fields = []
        for vec in self.basis:
            comp = []
            for b_i in range(len(vec) // len(self.monomials)):
                terms = {}
                for m_i, e in enumerate(self.monomials):
                    c = vec[b_i * len(self.monomials) + m_i]
                    if c != 0:
                        terms[e] = c
                comp.append(Poly(n, terms))
            fields.append(comp)
        return fields


def polynomial_solution_space(op: DiffOpMatrix, degree: int) -> SolutionSpace:
    """Exact nullspace of the operator on homogeneous degree-r fields."""
    n = op.n
    mons = _homogeneous_exponents(n, degree)
    nm = len(mons)
    cols = op.npairs * nm
    out_mons = _homogeneous_exponents(n, degree - 2) if degree >= 2 else []
    rows = []
    for arow in range(op.npairs):
        for K in out_mons:
            row = [Fraction(0)] * cols
            for brow in range(op.npairs):
                for (a, b), c in op.entries[arow][brow].items():
                    # coefficient of x^K in c * d^2(x^J)/dx^a dx^b
                    J = list(K)
                    J[a] += 1
                    J[b] += 1
                    J = tuple(J)
                    factor = J[a] * (J[b] - (1 if a == b else 0))
                    row[brow * nm + mons.index(J)] += c * factor
            if any(v != 0 for v in row):
                rows.append(row)
    basis = nullspace(rows, ncols=cols)
    return SolutionSpace(degree, len(basis), mons, basis,
                         rank(rows) if rows else 0)


def polynomial_solves(op: DiffOpMatrix, v_polys: list) -> bool:
    return all(p.is_zero() for p in op.apply_poly(v_polys))


def derivative_shift_check(op: DiffOpMatrix, v_polys: list,
                           index: MultiIndex, quad_constraints=None) -> bool:
    """Shift a homogeneous degree-r solution down by the multi-index of
    order r-2 and check the resulting quadratic field: it must solve the
    operator, and satisfy any supplied quadratic constraint functionals
    (the stated factorial weights are produced by the exact polynomial
    differentiation)."""
    shifted = [p.diff_multi(index.entries) for p in v_polys]
    if not polynomial_solves(op, shifted):
        return False
    if quad_constraints is not None:
        if any(abs(float(cf(shifted))) > 0 for cf in quad_constraints):
            return False
    return True
