"""Regenerate the frozen reference values used by the test suite.

Independent of the package: everything is evaluated with mpmath at 40
digits straight from the defining integrals and closed forms.  Run with
``python tests/oracles/goldens.py``; takes a few seconds.
"""

import mpmath as mp

mp.mp.dps = 40


def eff(rho, tau):
    return tau * rho**2 / (1 + rho + rho * tau)


def tx(reff, tau):
    return reff * (1 + tau + mp.sqrt((1 + tau) ** 2 + 4 * tau / reff)) / (2 * tau)


def rate_nats(R, t, T):
    return R * mp.log(2) / (1 - mp.mpf(t) / T)


def qfunc(x):
    return mp.erfc(x / mp.sqrt(2)) / 2


def gamma_case(M, N, t, T, R, P):
    """Fixed power, exact and mean-SNR adaptive power for Gamma-distributed gains."""
    shape, kfac = (M, M) if N == 1 else (N, 1)
    tau = mp.mpf(t) / M
    K = kfac * mp.expm1(rate_nats(R, t, T))
    om = mp.findroot(lambda w: mp.gammainc(shape, 0, w, regularized=True) - P, mp.mpf(shape) * 0.3)
    pdf = lambda w: w ** (shape - 1) * mp.e ** (-w) / mp.gamma(shape)
    exact = mp.quad(lambda w: tx(K / w, tau) * pdf(w), [om, 1, 10, mp.inf])
    mean = tx(mp.quad(lambda w: K / w * pdf(w), [om, 1, 10, mp.inf]), tau)
    return tx(K / om, tau), exact, mean


def siso_at(rho0, mode_exact):
    tau, K = mp.mpf(1), mp.expm1(rate_nats(mp.mpf("1.44"), 1, 25))
    om = K / eff(mp.mpf(rho0), tau)
    if mode_exact:
        return mp.quad(lambda w: tx(K / w, tau) * mp.e ** (-w), [om, 1, 10, mp.inf])
    return tx(K * mp.e1(om), tau)


def rmt(reff, c):
    x = 1 / mp.mpf(reff)
    s = 1 + c + x
    a = (s - mp.sqrt(s * s - 4 * c)) / 2
    mu = c * mp.log(1 + reff * (1 - a)) + mp.log(1 + reff * (c - a)) - a
    return a, mu, mp.sqrt(-mp.log(1 - a * a / c))


def mimo_case(M, N, t, T, R, P):
    c = mp.mpf(N) / M
    tau = mp.mpf(t) / M
    Rz = rate_nats(R, t, T)

    def out(log_rho):
        _, mu, sig = rmt(eff(mp.e**log_rho, tau), c)
        return qfunc((M * mu - Rz) / sig) - P

    rho0 = mp.e ** mp.findroot(out, mp.log(12))
    _, mu0, s0 = rmt(eff(rho0, tau), c)

    def required(target):
        if target <= 0:
            return mp.mpf(0)
        lo, hi = mp.mpf(-60), mp.mpf(60)
        for _ in range(100):
            mid = (lo + hi) / 2
            if M * rmt(mp.e**mid, c)[1] >= target:
                hi = mid
            else:
                lo = mid
        return mp.e**hi

    def integrand(psi):
        r = required(Rz - psi)
        density = mp.e ** (-psi**2 / (2 * s0**2)) / mp.sqrt(2 * mp.pi * s0**2)
        return (0 if r == 0 else tx(r, tau)) * density

    lo = Rz - M * mu0
    rho_min = mp.quad(integrand, [lo, lo + s0, lo + 3 * s0, Rz], maxdegree=6)
    return rho0, rho_min, tx(required(Rz), tau)


if __name__ == "__main__":
    R, P = mp.mpf("1.44"), mp.mpf("0.05")
    print("SISO outage at rho0=10:", mp.gammainc(1, 0, mp.expm1(rate_nats(R, 1, 25)) / eff(10, 1),
                                                  regularized=True))
    print("SISO adaptive at rho0=10 (mean-SNR, exact):", siso_at(10, False), siso_at(10, True))
    for M, N in ((1, 1), (2, 1), (1, 4)):
        print(f"gamma M={M} N={N} (rho0, exact, mean-SNR):", gamma_case(M, N, M, 25, R, P))
    for reff in (1, 10):
        print(f"rmt rho_eff={reff} c=1 (alpha, mu, sigma):", rmt(reff, 1))
    a, mu, sig = rmt(10, 1)
    print("2x2 at rho_eff=10, Rz=2:", qfunc((2 * mu - 2) / sig))
    print("4x4 R=5.76 (rho0, rho_min, sigma->0 limit):", mimo_case(4, 4, 4, 25, mp.mpf("5.76"), P))
