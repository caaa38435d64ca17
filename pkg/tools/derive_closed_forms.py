"""Symbolic re-derivation of the parameter-estimation closed forms.

Rebuilds both distribution circuits (graph hub-out with device losses, and
the two-party comparator) in sympy, extracts the check-pair second moments
directly from the symbolic symplectic product, and verifies the closed-form
rescale factors and conditional variances shipped in
``cvqss.estimation`` / ``cvqss.networks``.

Offline tool: run ``python tools/derive_closed_forms.py``.  Equality is
checked symbolically where simplification terminates quickly, and always by
high-precision (50-digit) evaluation at random parameter draws.
"""

from __future__ import annotations

import random

import sympy as sp


def embed_rows(mats: list[sp.Matrix], row: int, n_modes: int) -> sp.Matrix:
    """Row ``row`` of the product mats[-1] @ ... @ mats[0] (1 x 2n)."""
    v = sp.zeros(1, 2 * n_modes)
    v[row] = 1
    for mat in reversed(mats):
        v = v * mat
    return v


def embed(block: sp.Matrix, modes: list[int], n_modes: int) -> sp.Matrix:
    out = sp.eye(2 * n_modes)
    k = len(modes)
    for a in range(k):
        for b in range(k):
            for qa in range(2):
                for qb in range(2):
                    out[2 * modes[a] + qa, 2 * modes[b] + qb] = block[2 * a + qa, 2 * b + qb]
    return out


def squeezer(r: sp.Expr) -> sp.Matrix:
    return sp.diag(sp.exp(-r), sp.exp(r))


def beamsplitter(t: sp.Expr) -> sp.Matrix:
    s, c = sp.sqrt(t), sp.sqrt(1 - t)
    return sp.Matrix(
        [
            [s, 0, c, 0],
            [0, s, 0, c],
            [-c, 0, s, 0],
            [0, -c, 0, s],
        ]
    )


def cz(g: sp.Expr) -> sp.Matrix:
    out = sp.eye(4)
    out[1, 2] = g
    out[3, 0] = g
    return out


def moment(rows: tuple[sp.Matrix, sp.Matrix], init: sp.Matrix) -> sp.Expr:
    va, vb = rows
    return sp.expand((va * init * vb.T)[0])


r, g, xi = sp.symbols("r g xi", positive=True)
t_a, t_b, t_c, eta_c, eta_d, t_e, eta_s = sp.symbols(
    "t_a t_b t_c eta_c eta_d t_e eta_s", positive=True
)


def graph_moments():
    """(V[p_A], V[x_B], Cov[p_A, x_B]) of the realistic graph distribution."""
    labels = ["A", "B", "C", "Be", "V1", "V2", "V3", "V4", "V5", "V6", "EA", "EB", "EC"]
    n = len(labels)
    idx = {name: k for k, name in enumerate(labels)}
    mats = []
    for mode in (0, 1, 2):
        mats.append(embed(squeezer(-r), [mode], n))
    mats.append(embed(cz(g), [0, 1], n))
    mats.append(embed(cz(g), [1, 2], n))
    mats.append(embed(beamsplitter(eta_c), [idx["A"], idx["V1"]], n))
    mats.append(embed(beamsplitter(eta_c), [idx["B"], idx["V2"]], n))
    mats.append(embed(beamsplitter(eta_c), [idx["C"], idx["V3"]], n))
    mats.append(embed(beamsplitter(t_a), [idx["A"], idx["EA"]], n))
    mats.append(embed(beamsplitter(t_b), [idx["B"], idx["EB"]], n))
    mats.append(embed(beamsplitter(t_c), [idx["C"], idx["EC"]], n))
    mats.append(embed(beamsplitter(t_e), [idx["B"], idx["Be"]], n))
    mats.append(embed(beamsplitter(eta_d), [idx["A"], idx["V4"]], n))
    mats.append(embed(beamsplitter(eta_d), [idx["B"], idx["V5"]], n))
    mats.append(embed(beamsplitter(eta_d), [idx["C"], idx["V6"]], n))

    init = sp.eye(2 * n)
    for env in ("EA", "EB", "EC"):
        k = idx[env]
        init[2 * k, 2 * k] = init[2 * k + 1, 2 * k + 1] = 1 + xi

    row_pa = embed_rows(mats, 2 * idx["A"] + 1, n)
    row_xb = embed_rows(mats, 2 * idx["B"], n)
    return (
        moment((row_pa, row_pa), init),
        moment((row_xb, row_xb), init),
        moment((row_pa, row_xb), init),
    )


def qkd_moments():
    """(V[x_A], V[x_B], Cov[x_A, x_B]) of the comparator distribution."""
    labels = ["A", "B", "Be", "V1", "V2", "V3", "V4", "EA", "EB"]
    n = len(labels)
    idx = {name: k for k, name in enumerate(labels)}
    mats = [embed(squeezer(r), [idx["A"]], n)]
    mats.append(embed(squeezer(-r), [idx["B"]], n))
    mats.append(embed(beamsplitter(sp.Rational(1, 2)), [idx["A"], idx["B"]], n))
    mats.append(embed(beamsplitter(eta_s), [idx["A"], idx["V1"]], n))
    mats.append(embed(beamsplitter(eta_c), [idx["B"], idx["V2"]], n))
    mats.append(embed(beamsplitter(t_a), [idx["B"], idx["EA"]], n))
    mats.append(embed(beamsplitter(t_a), [idx["B"], idx["EB"]], n))
    mats.append(embed(beamsplitter(t_e), [idx["B"], idx["Be"]], n))
    mats.append(embed(beamsplitter(eta_d), [idx["A"], idx["V3"]], n))
    mats.append(embed(beamsplitter(eta_d), [idx["B"], idx["V4"]], n))

    init = sp.eye(2 * n)
    for env in ("EA", "EB"):
        k = idx[env]
        init[2 * k, 2 * k] = init[2 * k + 1, 2 * k + 1] = 1 + xi

    row_xa = embed_rows(mats, 2 * idx["A"], n)
    row_xb = embed_rows(mats, 2 * idx["B"], n)
    return (
        moment((row_xa, row_xa), init),
        moment((row_xb, row_xb), init),
        moment((row_xa, row_xb), init),
    )


# Closed forms as shipped (graph: cvqss.estimation._graph_check_variance_analytic
# and rescale numerator; comparator: cvqss.estimation._qkd_check_variance_analytic).
def shipped_graph():
    e2r, em2r = sp.exp(2 * r), sp.exp(-2 * r)
    v_pa = t_a * eta_d * (eta_c * (g**2 * e2r + em2r - 1) - xi) + xi * eta_d + 1
    v_xb = eta_d * t_e * (e2r * t_b * eta_c - t_b * (xi + eta_c) + xi) + 1
    cov = g * e2r * eta_c * eta_d * sp.sqrt(t_e * t_a * t_b)
    return v_pa, v_xb, cov


def shipped_qkd():
    ch, sh = sp.cosh(2 * r), sp.sinh(2 * r)
    v_xa = eta_s * eta_d * ch + 1 - eta_s * eta_d
    v1 = eta_c * ch + 1 - eta_c
    v2 = t_a * v1 + (1 - t_a) * (1 + xi)
    v3 = t_a * v2 + (1 - t_a) * (1 + xi)
    v4 = t_e * v3 + 1 - t_e
    v_xb = eta_d * v4 + 1 - eta_d
    cov = sp.sqrt(eta_s * eta_d * eta_c * t_e * eta_d) * t_a * sh
    return v_xa, v_xb, cov


def check(name: str, derived: sp.Expr, shipped: sp.Expr, subs_pairs) -> None:
    diff = sp.simplify(sp.expand(derived - shipped.rewrite(sp.exp)))
    symbolic = diff == 0
    worst = 0.0
    rng = random.Random(7)
    for _ in range(50):
        point = {s: sp.Rational(rng.randint(40, 99), 100) for s in subs_pairs}
        point[r] = sp.Rational(rng.randint(10, 250), 100)
        point[g] = sp.Rational(rng.randint(10, 250), 100)
        point[xi] = sp.Rational(rng.randint(0, 50), 1000)
        err = abs((derived - shipped).evalf(50, subs=point))
        worst = max(worst, float(err))
    status = "exact" if symbolic else f"numeric (max |err| = {worst:.2e})"
    assert symbolic or worst < 1e-40, f"{name}: mismatch {worst}"
    print(f"  {name}: OK [{status}]")


def main() -> None:
    print("graph-family check pair (p_A, x_B):")
    v_pa, v_xb, cov = graph_moments()
    s_pa, s_xb, s_cov = shipped_graph()
    free = [t_a, t_b, t_c, eta_c, eta_d, t_e]
    check("V[p_A]", v_pa, s_pa, free)
    check("V[x_B]", v_xb, s_xb, free)
    check("Cov[p_A, x_B]", cov, s_cov, free)
    print("  rescale factor a = Cov/V[p_A]; conditional variance = V[p_A] - Cov^2/V[x_B]")

    print("comparator check pair (x_A, x_B):")
    v_xa, v_xb, cov = qkd_moments()
    s_xa, s_xb, s_cov = shipped_qkd()
    free = [t_a, eta_s, eta_c, eta_d, t_e]
    check("V[x_A]", v_xa, s_xa, free)
    check("V[x_B]", v_xb, s_xb, free)
    check("Cov[x_A, x_B]", cov, s_cov, free)
    print("all closed forms reproduced from the symbolic circuits")


if __name__ == "__main__":
    main()
