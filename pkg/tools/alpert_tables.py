"""Solve the moment equations defining Alpert's log-singular end corrections.

The corrected rule on [0, inf) is

    h * sum_k w_k f(x_k h) + h * sum_{j >= a} f(j h)

and must be exact (in the zeta-regularised sense) for x**s and x**s*log(x),
s = 0..m-1.  Run with ``python tools/alpert_tables.py`` to regenerate the
constants embedded in ``helio2d.quadrature``.
"""
import mpmath as mp

mp.mp.dps = 40

GUESSES = {
    16: (10, [8.371529832014113e-04, 1.239382725542637e-02, 6.009290785739468e-02,
              1.805991249601928e-01, 4.142832599028031e-01, 7.964747731112430e-01,
              1.348993882467059e+00, 2.073471660264395e+00, 2.947904939031494e+00,
              3.928129252248612e+00, 4.957203086563112e+00, 5.986360113977494e+00,
              6.997957704791519e+00, 7.999888757524622e+00, 8.999998754306120e+00],
         [3.190919086626234e-03, 2.423621380426338e-02, 7.740135521653088e-02,
          1.704889420286369e-01, 3.029123478511309e-01, 4.652220834914617e-01,
          6.401489637096768e-01, 8.051212946181061e-01, 9.362411945698647e-01,
          1.014359775369075e+00, 1.035167721053657e+00, 1.020308624984610e+00,
          1.004798397441514e+00, 1.000395017352309e+00, 1.000007149422537e+00]),
    8: (5, [6.531815708567918e-03, 9.086744584657729e-02, 3.967966533375878e-01,
            1.027856640525646e+00, 1.945288592909266e+00, 2.980147933889640e+00,
            3.998861349951123e+00],
        [2.462194198995203e-02, 1.701315866854178e-01, 4.609256358650077e-01,
         7.947291148621895e-01, 1.008710414337933e+00, 1.036093649726216e+00,
         1.004787656533285e+00]),
    4: (2, [0.03, 0.4, 1.2], [0.1, 0.5, 0.9]),
}


def residual(v, m, a):
    x, w = v[:m], v[m:]
    out = []
    for s in range(m):
        out.append(mp.fsum(wk * xk**s for xk, wk in zip(x, w)) + mp.zeta(-s, a))
        out.append(mp.fsum(wk * xk**s * mp.log(xk) for xk, wk in zip(x, w))
                   - mp.zeta(-s, a, derivative=1))
    return out


def solve(order):
    a, x0, w0 = GUESSES[order]
    m = len(x0)
    v = [mp.mpf(t) for t in x0 + w0]
    sol = mp.findroot(lambda *v: residual(v, m, a), v, tol=mp.mpf(10) ** -34, maxsteps=200)
    sol = [sol[i] for i in range(2 * m)]
    return a, sol[:m], sol[m:]


if __name__ == "__main__":
    for order in (4, 8, 16):
        a, x, w = solve(order)
        print(f"# order {order}: a = {a}")
        print("nodes = [")
        for t in x:
            print(f"    {mp.nstr(t, 20, min_fixed=-50, max_fixed=50)},")
        print("]\nweights = [")
        for t in w:
            print(f"    {mp.nstr(t, 20, min_fixed=-50, max_fixed=50)},")
        print("]")
        # distance from guess
        _, x0, w0 = GUESSES[order]
        print("# max change from initial guess:",
              mp.nstr(max(abs(p - q) for p, q in zip(x + w, x0 + w0)), 3))
