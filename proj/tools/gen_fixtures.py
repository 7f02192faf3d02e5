#!/usr/bin/env python3
"""Writes the problem fixtures under fixtures/. Exact rationals are computed with sympy and
serialized as shortest round-trip doubles. Expected reports are produced separately by
running `mflq solve` on these files (see tools/refresh_expected.sh)."""

import json
import math
import pathlib

import numpy as np
import scipy.linalg
import sympy as sp

R = sp.Rational
OUT = pathlib.Path(__file__).resolve().parent.parent / "fixtures"


def mat(M):
    M = sp.Matrix(M)
    return [[float(M[i, j]) for j in range(M.cols)] for i in range(M.rows)]


def negate(cost):
    return {k: [[-x for x in row] for row in v] for k, v in cost.items()}


def zero_sum(n, m1, m2, dynamics, cost):
    return {"n": n, "m1": m1, "m2": m2, "dynamics": dynamics, "players": [cost, negate(cost)]}


def scalar_blocks(**kw):
    return {k: [[float(v)]] for k, v in kw.items()}


def example1():
    dyn = scalar_blocks(A=R(-1, 2), D1=1, D2=1)
    # The mean cost matrix has S_bar = (-1, 1)', consistent with S_hat = 0.
    cost = scalar_blocks(Q=1, Q_bar=1, S1=1, S2=-1, S1_bar=-1, S2_bar=1, R11=1, R22=-1)
    return zero_sum(1, 1, 1, dyn, cost)


def example2():
    dyn = scalar_blocks(A=R(-1, 4), B2=R(-1, 2), C=-1, D1=1)
    cost = scalar_blocks(Q=R(1, 2), Q_bar=R(1, 2), S1=-1, S2=R(-1, 2), S2_bar=R(1, 2), R11=1, R22_bar=-1)
    return zero_sum(1, 1, 1, dyn, cost)


def example3():
    dyn = scalar_blocks(A=-8, B1=1, B2=-1, D1=1, D2=1)
    cost = scalar_blocks(Q=12, Q_bar=52, R11=1, R22=-1, R11_bar=1, R22_bar=-1)
    return zero_sum(1, 1, 1, dyn, cost)


def split_cols(M):
    M = sp.Matrix(M)
    return mat(M[:, 0]), mat(M[:, 1])


def two_by_two_dynamics(A, Ab, B, Bb, C, Cb, D, Db):
    d = {"A": mat(A), "A_bar": mat(Ab), "C": mat(C), "C_bar": mat(Cb)}
    for name, M in (("B", B), ("B_bar", Bb), ("D", D), ("D_bar", Db)):
        c1, c2 = split_cols(M)
        base, bar = (name[0], "_bar" if name.endswith("_bar") else "")
        d[f"{base}1{bar}"] = c1
        d[f"{base}2{bar}"] = c2
    return d


def two_by_two_cost(Q, Qb, S, Sb, Rm, Rb):
    S, Sb, Rm, Rb = (sp.Matrix(x) for x in (S, Sb, Rm, Rb))
    return {"Q": mat(Q), "Q_bar": mat(Qb), "S1": mat(S[0, :]), "S2": mat(S[1, :]),
            "S1_bar": mat(Sb[0, :]), "S2_bar": mat(Sb[1, :]),
            "R11": [[float(Rm[0, 0])]], "R12": [[float(Rm[0, 1])]], "R22": [[float(Rm[1, 1])]],
            "R11_bar": [[float(Rb[0, 0])]], "R12_bar": [[float(Rb[0, 1])]], "R22_bar": [[float(Rb[1, 1])]]}


half = R(1, 2)
C_SHARED = [[1, half], [half, 1]]
CB_SHARED = [[0, -half], [-half, 0]]
DB_SHARED = sp.diag(half, half)
BB_SHARED = sp.diag(R(5, 2), half)


def example4():
    dyn = two_by_two_dynamics([[1, half], [half, 1]], sp.eye(2), sp.eye(2), BB_SHARED, C_SHARED, CB_SHARED,
                              sp.eye(2), DB_SHARED)
    cost = two_by_two_cost([[R(57, 8), R(5, 2)], [R(5, 2), R(3, 2)]],
                           [[R(47, 8), -R(5, 2)], [-R(5, 2), R(11, 10)]], sp.zeros(2), sp.zeros(2),
                           sp.diag(2, -1), sp.diag(half, -half))
    return zero_sum(2, 1, 1, dyn, cost)


def example5_data():
    A = sp.Matrix([[-1, -1], [0, -3]])
    Ab = sp.Matrix([[-1, 0], [-1, -20]])
    B, D = sp.eye(2), sp.eye(2)
    C, Cb = sp.Matrix(C_SHARED), sp.Matrix(CB_SHARED)
    Rm, Rb = sp.diag(2, -2), sp.diag(R(3, 4), -half)
    # Q and Q_hat are fixed by requiring P = diag(1, 1/10), Phat = diag(1, 1/2) exactly; the
    # printed decimals are their rounding.
    P, Ph = sp.diag(1, R(1, 10)), sp.diag(1, half)
    Sig = Rm + D.T * P * D
    K = B.T * P + D.T * P * C
    Q = -(P * A + A.T * P + C.T * P * C - K.T * Sig.inv() * K)
    Ah, Bh, Ch, Dh = A + Ab, B + BB_SHARED, C + Cb, D + DB_SHARED
    Sb = Rm + Rb + Dh.T * P * Dh
    Kh = Bh.T * Ph + Dh.T * P * Ch
    Qh = -(Ph * Ah + Ah.T * Ph + Ch.T * P * Ch - Kh.T * Sb.inv() * Kh)
    return A, Ab, B, C, Cb, D, Q, Qh - Q, Rm, Rb


def example5():
    A, Ab, B, C, Cb, D, Q, Qb, Rm, Rb = example5_data()
    dyn = two_by_two_dynamics(A, Ab, B, BB_SHARED, C, Cb, D, DB_SHARED)
    cost = two_by_two_cost(Q, Qb, sp.zeros(2), sp.zeros(2), Rm, Rb)
    return zero_sum(2, 1, 1, dyn, cost)


GAME_A = [[-1, -1], [0, -1]]
GAME_AB = [[-1, 0], [-1, -1]]


def example6():
    dyn = two_by_two_dynamics(GAME_A, GAME_AB, sp.eye(2), BB_SHARED, C_SHARED, CB_SHARED, sp.eye(2), DB_SHARED)
    q1_bar_11 = 8 + R(15, 17) - R(57, 20)
    p1 = two_by_two_cost([[R(57, 20), R(9, 10)], [R(9, 10), R(99, 40)]],
                         [[q1_bar_11, R(3, 5)], [R(3, 5), R(13, 40)]], sp.zeros(2), sp.zeros(2), sp.eye(2),
                         sp.eye(2))
    p2 = two_by_two_cost([[R(27, 20), R(2, 5)], [R(2, 5), R(203, 80)]],
                         [[R(143, 20), R(8, 5)], [R(8, 5), R(229, 80)]], sp.zeros(2), sp.zeros(2),
                         sp.diag(1, R(3, 2)), sp.diag(half, 0))
    return {"n": 2, "m1": 1, "m2": 1, "dynamics": dyn, "players": [p1, p2]}


def example7():
    dyn = two_by_two_dynamics(GAME_A, GAME_AB, sp.zeros(2), sp.zeros(2), sp.zeros(2), sp.zeros(2), sp.eye(2),
                              sp.eye(2))
    r = sp.sqrt(R(5, 2))
    p1 = two_by_two_cost([[2, 1], [1, R(3, 2)]], [[R(83, 44), 1], [1, R(105, 44)]], [[0, 0], [r, 0]],
                         sp.zeros(2), sp.eye(2), sp.eye(2))
    p2 = two_by_two_cost([[1, half], [half, 3]], [[3, R(3, 2)], [R(3, 2), R(16, 11)]], [[0, 0], [0, r]],
                         sp.zeros(2), sp.diag(1, R(3, 2)), sp.diag(half, 0))
    return {"n": 2, "m1": 1, "m2": 1, "dynamics": dyn, "players": [p1, p2]}


def nonsymmetric_a():
    # Deterministic control problem whose A is upper triangular: transposing it changes P.
    A = [[-1.0, 2.0], [0.0, -3.0]]
    return {"n": 2, "m1": 1, "m2": 0,
            "dynamics": {"A": A, "B1": [[0.0], [1.0]]},
            "players": [{"Q": [[1.0, 0.0], [0.0, 1.0]], "R11": [[1.0]]}]}


def nonsymmetric_a_expected():
    A = np.array([[-1.0, 2.0], [0.0, -3.0]])
    B = np.array([[0.0], [1.0]])
    P = scipy.linalg.solve_continuous_are(A, B, np.eye(2), np.eye(1))
    return {"P": P.tolist(), "Theta": (-B.T @ P).tolist()}


def bad_dimension():
    return {"n": 2, "m1": 1, "m2": 0,
            "dynamics": {"A": [[0, 0, 0], [0, 0, 0], [0, 0, 0]], "B1": [[1], [0]]},
            "players": [{"Q": [[1, 0], [0, 1]], "R11": [[1]]}]}


def write(name, doc):
    (OUT / name).write_text(json.dumps(doc, indent=2) + "\n")


def main():
    OUT.mkdir(exist_ok=True)
    for k, f in enumerate([example1, example2, example3, example4, example5, example6, example7], start=1):
        write(f"example{k}.json", f())
    write("nonsymmetric_A.json", nonsymmetric_a())
    write("nonsymmetric_A.oracle.json", nonsymmetric_a_expected())
    write("bad_dimension.json", bad_dimension())
    # A free component for the fluctuation gain that makes the saddle strategy of example 2 stabilizing.
    write("example2_theta_free.json", {"theta": [[1.0], [0.0]], "theta_bar": [[0.0], [0.0]]})
    assert math.isclose(float(sp.sqrt(R(5, 2))), math.sqrt(2.5))


if __name__ == "__main__":
    main()
