#!/usr/bin/env python3
"""Independent reference computation for left-invariant qc structures.

Solves for the Biquard connection with a raw-coefficient formulation
(every Gamma^C_{AB} and every alpha_s(A) is an unknown), then evaluates the
curvature, torsion tensors, Ricci-type traces, L and WR with plain loops over
exact fractions. Used to produce the golden constants frozen into the Rust
test-suite; it shares no code or parametrization with the crate.

    python3 tools/qc_oracle.py            # summary for every builtin
"""
import itertools
import sys
from fractions import Fraction as F

BUILTINS = {
    "heisenberg-n1": (1, {
        5: [(2, 1, 2), (2, 3, 4)],
        6: [(2, 1, 3), (-2, 2, 4)],
        7: [(2, 1, 4), (2, 2, 3)],
    }),
    "heisenberg-n2": (2, {
        9: [(2, 1, 2), (2, 3, 4), (2, 5, 6), (2, 7, 8)],
        10: [(2, 1, 3), (-2, 2, 4), (2, 5, 7), (-2, 6, 8)],
        11: [(2, 1, 4), (2, 2, 3), (2, 5, 8), (2, 6, 7)],
    }),
    "g1": (1, {
        2: [(-1, 1, 2), (-2, 3, 4), (F(-1, 2), 3, 7), (F(1, 2), 4, 6)],
        3: [(-1, 1, 3), (2, 2, 4), (F(1, 2), 2, 7), (F(-1, 2), 4, 5)],
        4: [(-1, 1, 4), (-2, 2, 3), (F(-1, 2), 2, 6), (F(1, 2), 3, 5)],
        5: [(2, 1, 2), (2, 3, 4), (F(-1, 2), 6, 7)],
        6: [(2, 1, 3), (-2, 2, 4), (F(1, 2), 5, 7)],
        7: [(2, 1, 4), (2, 2, 3), (F(-1, 2), 5, 6)],
    }),
    "g3": (1, {
        1: [(F(-3, 2), 1, 3), (F(3, 2), 2, 4), (F(-3, 4), 2, 5), (F(1, 4), 3, 6),
            (F(-1, 4), 4, 7), (F(1, 8), 5, 7)],
        2: [(F(-3, 2), 1, 4), (F(-3, 2), 2, 3), (F(3, 4), 1, 5), (F(1, 4), 3, 7),
            (F(1, 4), 4, 6), (F(-1, 8), 5, 6)],
        4: [(1, 1, 2), (1, 3, 4), (F(1, 2), 1, 7), (F(-1, 2), 2, 6), (F(1, 4), 6, 7)],
        5: [(2, 1, 2), (2, 3, 4), (1, 1, 7), (-1, 2, 6), (F(1, 2), 6, 7)],
        6: [(2, 1, 3), (-2, 2, 4), (1, 2, 5)],
        7: [(2, 1, 4), (2, 2, 3), (-1, 1, 5)],
    }),
}


def brackets(n, eqs):
    d = 4 * n + 3
    c = [[[F(0)] * d for _ in range(d)] for _ in range(d)]  # c[k][i][j]
    for k, terms in eqs.items():
        for coef, i, j in terms:
            c[k - 1][i - 1][j - 1] -= F(coef)
            c[k - 1][j - 1][i - 1] += F(coef)
    return c


def triple(n):
    # column convention: J[s][c][b] = component c of I_s e_b
    m = 4 * n
    maps = [
        {0: (1, 1), 1: (0, -1), 2: (3, 1), 3: (2, -1)},
        {0: (2, 1), 1: (3, -1), 2: (0, -1), 3: (1, 1)},
        {0: (3, 1), 1: (2, 1), 2: (1, -1), 3: (0, -1)},
    ]
    js = []
    for mp in maps:
        J = [[F(0)] * m for _ in range(m)]
        for blk in range(n):
            for b, (cidx, sg) in mp.items():
                J[4 * blk + cidx][4 * blk + b] = F(sg)
        js.append(J)
    return js


def matmul(a, b):
    return [[sum(a[i][k] * b[k][j] for k in range(len(b))) for j in range(len(b[0]))]
            for i in range(len(a))]


def solve_sparse(rows, nunk):
    """rows: list of (dict col->coef, rhs). Returns unique solution or raises."""
    pivots = {}  # col -> (row dict, rhs)
    order = []
    for row, rhs in rows:
        row = {k: F(v) for k, v in row.items() if v != 0}
        rhs = F(rhs)
        # reduce by existing pivots
        changed = True
        while True:
            cols = [k for k in row if k in pivots]
            if not cols:
                break
            k = cols[0]
            prow, prhs = pivots[k]
            f = row[k]
            for kk, vv in prow.items():
                nv = row.get(kk, 0) - f * vv
                if nv == 0:
                    row.pop(kk, None)
                else:
                    row[kk] = nv
            rhs -= f * prhs
        if not row:
            if rhs != 0:
                raise RuntimeError("inconsistent")
            continue
        k = min(row)
        f = row[k]
        row = {kk: vv / f for kk, vv in row.items()}
        rhs = rhs / f
        # eliminate k from other pivots
        for pk, (prow, prhs) in list(pivots.items()):
            if k in prow:
                g = prow[k]
                for kk, vv in row.items():
                    nv = prow.get(kk, 0) - g * vv
                    if nv == 0:
                        prow.pop(kk, None)
                    else:
                        prow[kk] = nv
                pivots[pk] = (prow, prhs - g * rhs)
        pivots[k] = (row, rhs)
    if len(pivots) != nunk:
        raise RuntimeError(f"rank {len(pivots)} < {nunk}")
    x = [F(0)] * nunk
    for k, (row, rhs) in pivots.items():
        assert list(row.keys()) == [k]
        x[k] = rhs
    return x


class Model:
    def __init__(self, name, n, eqs, js=None, c=None):
        self.name, self.n = name, n
        self.m = 4 * n
        self.d = 4 * n + 3
        self.c = c if c is not None else brackets(n, eqs)
        self.J = js if js is not None else triple(n)
        self.check_structure()
        self.solve()
        self.derive()

    # ---- structure ----
    def check_structure(self):
        d, m, c, J = self.d, self.m, self.c, self.J
        for i, j, l, p in itertools.product(range(d), repeat=4):
            if i < j < l:
                s = sum(c[q][i][j] * c[p][q][l] + c[q][j][l] * c[p][q][i]
                        + c[q][l][i] * c[p][q][j] for q in range(d))
                assert s == 0, ("jacobi", i, j, l, p)
        # omega_s(e_a,e_b) = g(I_s e_a, e_b) = J[s][b][a]; d eta_s(e_a,e_b) = -c^{m+s}_{ab}
        for s in range(3):
            for a in range(m):
                for b in range(m):
                    assert -c[m + s][a][b] == 2 * J[s][b][a], ("compat", s, a, b)
        # Reeb: d eta_k(xi_s, X) = -c^{m+k}_{m+s, X}
        for s in range(3):
            for k in range(3):
                for x in range(m):
                    lhs = -c[m + k][m + s][x]
                    rhs = c[m + s][m + k][x]
                    if s == k:
                        assert lhs == 0, ("reeb", s, x)
                    else:
                        assert lhs == rhs, ("reeb", s, k, x)

    # ---- connection ----
    def solve(self):
        d, m, c, J = self.d, self.m, self.c, self.J
        G = lambda C, A, B: (C * d + A) * d + B  # Gamma^C_{AB}
        nG = d ** 3
        AL = lambda s, A: nG + s * d + A
        nunk = nG + 3 * d
        rows = []
        cyc = [(0, 1, 2), (1, 2, 0), (2, 0, 1)]
        for A, B, C in itertools.product(range(d), repeat=3):
            rows.append(({G(C, A, B): 1, G(B, A, C): 1}, 0))
            if (B < m) != (C < m):
                rows.append(({G(C, A, B): 1}, 0))
        for A in range(d):
            for (i, j, k) in cyc:
                # [Lambda_A, J_i] + alpha_j J_k - alpha_k J_j = 0, Lambda_{cb} = Gamma^c_{Ab}
                for r in range(m):
                    for col in range(m):
                        row = {}
                        for q in range(m):
                            if J[i][q][col] != 0:
                                row[G(r, A, q)] = row.get(G(r, A, q), 0) + J[i][q][col]
                            if J[i][r][q] != 0:
                                row[G(q, A, col)] = row.get(G(q, A, col), 0) - J[i][r][q]
                        if J[k][r][col] != 0:
                            row[AL(j, A)] = row.get(AL(j, A), 0) + J[k][r][col]
                        if J[j][r][col] != 0:
                            row[AL(k, A)] = row.get(AL(k, A), 0) - J[j][r][col]
                        rows.append((row, 0))
                # nabla_A xi_i = -alpha_j xi_k + alpha_k xi_j
                rows.append(({G(m + k, A, m + i): 1, AL(j, A): 1}, 0))
                rows.append(({G(m + j, A, m + i): 1, AL(k, A): -1}, 0))
                rows.append(({G(m + i, A, m + i): 1}, 0))
        for a in range(m):
            for b in range(a + 1, m):
                for cc in range(m):
                    rows.append(({G(cc, a, b): 1, G(cc, b, a): -1}, c[cc][a][b]))
        for s in range(3):
            xs = m + s
            # M_{ca} = Gamma^c_{xs,a} - c^c_{xs,a}; P = skew(M); need proj+++(P)=0 and <M,J_t>=0
            def Mrow(cc, a):
                return ({G(cc, xs, a): 1}, c[cc][xs][a])  # M = row - const

            for t in range(3):
                row = {}
                const = F(0)
                for cc in range(m):
                    for a in range(m):
                        if J[t][cc][a] != 0:
                            row[G(cc, xs, a)] = row.get(G(cc, xs, a), 0) + J[t][cc][a]
                            const += J[t][cc][a] * c[cc][xs][a]
                rows.append((row, const))
            # Q = P - sum_t J_t P J_t, with P = (M - M^T)/2 ; require Q = 0
            for r in range(m):
                for col in range(m):
                    row = {}
                    const = F(0)

                    def addP(i1, i2, w):
                        nonlocal const
                        # w * P_{i1 i2} = w/2 (M_{i1 i2} - M_{i2 i1})
                        for (x, y, sg) in ((i1, i2, 1), (i2, i1, -1)):
                            row[G(x, xs, y)] = row.get(G(x, xs, y), 0) + w * sg / 2
                            const += w * sg / 2 * c[x][xs][y]

                    addP(r, col, F(1))
                    for t in range(3):
                        for p in range(m):
                            if J[t][r][p] == 0:
                                continue
                            for q in range(m):
                                if J[t][q][col] == 0:
                                    continue
                                addP(p, q, -J[t][r][p] * J[t][q][col])
                    rows.append((row, const))
        x = solve_sparse(rows, nunk)
        self.Gam = [[[x[G(C, A, B)] for B in range(d)] for A in range(d)] for C in range(d)]
        self.alpha = [[x[AL(s, A)] for A in range(d)] for s in range(3)]

    def gam(self, C, A, B):
        return self.Gam[C][A][B]

    # ---- derived tensors ----
    def derive(self):
        d, m, c, J, n = self.d, self.m, self.c, self.J, self.n
        Gm = self.gam
        R = {}
        for A, B, C, D in itertools.product(range(d), repeat=4):
            v = sum(Gm(D, A, E) * Gm(E, B, C) - Gm(D, B, E) * Gm(E, A, C)
                    - c[E][A][B] * Gm(D, E, C) for E in range(d))
            R[A, B, C, D] = v
        self.R = R
        T = {}
        for A, B, C in itertools.product(range(d), repeat=3):
            T[A, B, C] = Gm(C, A, B) - Gm(C, B, A) - c[C][A][B]  # component C of T(A,B)
        self.T = T
        self.Ie = lambda s, a: [(cc, J[s][cc][a]) for cc in range(m) if J[s][cc][a] != 0]
        self.omega = [[[J[s][b][a] for b in range(m)] for a in range(m)] for s in range(3)]
        # torsion endomorphisms
        T0 = [[F(0)] * m for _ in range(m)]
        U = None
        us = []
        for s in range(3):
            Mx = [[T[m + s, a, cc] for a in range(m)] for cc in range(m)]  # M[c][a]
            sym = [[(Mx[i][j] + Mx[j][i]) / 2 for j in range(m)] for i in range(m)]
            skw = [[(Mx[i][j] - Mx[j][i]) / 2 for j in range(m)] for i in range(m)]
            u = [[-v for v in row] for row in matmul(J[s], skw)]
            us.append(u)
            N = matmul(sym, J[s])
            for a in range(m):
                for b in range(m):
                    T0[a][b] += N[b][a]
        assert us[0] == us[1] == us[2]
        self.u = us[0]
        self.T0 = T0
        self.U = [[self.u[b][a] for b in range(m)] for a in range(m)]
        self.Ric = [[sum(R[a, x, y, a] for a in range(m)) for y in range(m)] for x in range(m)]
        self.Scal = sum(self.Ric[a][a] for a in range(m))

        def rIs(A, B, C, s, slot):
            pass

        self.rho = [{(A, B): sum(R[A, B, a, cc] * J[s][cc][a] for a in range(m) for cc in range(m)) / (4 * n)
                     for A in range(d) for B in range(d)} for s in range(3)]
        self.tau = [[[sum(R[a, cc, x, y] * J[s][cc][a] for a in range(m) for cc in range(m)) / (4 * n)
                      for y in range(m)] for x in range(m)] for s in range(3)]
        self.zeta = [[[sum(R[a, x, y, cc] * J[s][cc][a] for a in range(m) for cc in range(m)) / (4 * n)
                       for y in range(m)] for x in range(m)] for s in range(3)]
        k = F(1, 32 * n * (n + 2)) * self.Scal
        self.L = [[self.T0[a][b] / 2 + self.U[a][b] + (k if a == b else 0) for b in range(m)] for a in range(m)]
        self.WR = self.wr_def(self.L, lambda a, b, cc, dd: R[a, b, cc, dd], 1)

    def ap(self, s, form, x, y, slot):
        """evaluate form with I_s applied to argument 'slot' (0 or 1) as basis index."""
        J, m = self.J, self.m
        if slot == 0:
            return sum(J[s][cc][x] * form[cc][y] for cc in range(m))
        return sum(J[s][cc][y] * form[x][cc] for cc in range(m))

    def wr_def(self, L, Rf, gs):
        """qcwdef with horizontal metric gs*delta, omega scaled by gs; traces taken with 1/gs."""
        m, n, J = self.m, self.n, self.J
        g = lambda a, b: gs if a == b else 0
        om = lambda s, a, b: gs * J[s][b][a]
        Lf = lambda a, b: L[a][b]
        LI = lambda s, a, b: sum(J[s][cc][b] * L[a][cc] for cc in range(m))   # L(X, I_s Y)
        IL_ = lambda s, a, b: sum(J[s][cc][a] * L[cc][b] for cc in range(m))  # L(I_s X, Y)
        LII = lambda s, t, a, b: sum(J[s][p][a] * J[t][q][b] * L[p][q] for p in range(m) for q in range(m))
        ISL = lambda s, a, b: -LI(s, a, b)
        trL = sum(L[a][a] for a in range(m)) / gs

        def kn(p, q, x, y, z, v):
            return p(x, z) * q(y, v) + p(y, v) * q(x, z) - p(y, z) * q(x, v) - p(x, v) * q(y, z)

        cyc = [(0, 1, 2), (1, 2, 0), (2, 0, 1)]
        out = {}
        for x, y, z, v in itertools.product(range(m), repeat=4):
            val = Rf(x, y, z, v) + kn(g, Lf, x, y, z, v)
            for s in range(3):
                val += kn(lambda a, b: om(s, a, b), lambda a, b: ISL(s, a, b), x, y, z, v)
            for (i, j, k) in cyc:
                val -= F(1, 2) * om(i, x, y) * (LI(i, z, v) - IL_(i, z, v) + LII(j, k, z, v) - LII(k, j, z, v))
            for s in range(3):
                val -= om(s, z, v) * (LI(s, x, y) - IL_(s, x, y))
            val += F(1, 2 * n) * trL * sum(om(s, x, y) * om(s, z, v) for s in range(3))
            out[x, y, z, v] = val
        return out


def summary(name):
    n, eqs = BUILTINS[name]
    md = Model(name, n, eqs)
    m = md.m
    gz = all(v == 0 for v in (x for a in md.Gam for b in a for x in b))
    print(f"== {name}")
    print("  Gamma zero:", gz, " alpha|H zero:", all(md.alpha[s][a] == 0 for s in range(3) for a in range(m)))
    print("  alpha:", [[str(v) for v in row] for row in md.alpha])
    print("  Scal:", md.Scal)
    print("  |T0|^2:", sum(v * v for r in md.T0 for v in r), " |U|^2:", sum(v * v for r in md.U for v in r))
    print("  |R|^2:", sum(v * v for v in md.R.values()))
    print("  |R_H|^2:", sum(md.R[k] ** 2 for k in md.R if all(i < m for i in k)))
    print("  |WR|^2:", sum(v * v for v in md.WR.values()))
    print("  Gamma nonzero:", sum(1 for a in md.Gam for b in a for x in b if x != 0))
    return md


if __name__ == "__main__":
    names = sys.argv[1:] or list(BUILTINS)
    for nm in names:
        summary(nm)
