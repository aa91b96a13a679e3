"""Independent high-precision reference computations (mpmath, 30 digits)."""
import mpmath as mp

mp.mp.dps = 30


def gibbs(E, beta):
    w = [mp.e ** (-beta * mp.mpf(e)) for e in E]
    Z = mp.fsum(w)
    return [mp.sqrt(x / Z) for x in w]


def fixture_moment(E=1, c=1, alpha=mp.mpf(1) / 2):
    # 4 pi c^2 E^(2 alpha) exp(-2 E^2) for |B_12| = 1
    E = mp.mpf(E)
    return 4 * mp.pi * c ** 2 * E ** (2 * alpha) * mp.e ** (-2 * E * E)


def two_level_gamma(E, b1, b2, s1, s2):
    rho1 = 1 / mp.expm1(b1 * E)
    rho2 = 1 / mp.expm1(b2 * E)
    g1, g2 = E * E * s1, E * E * s2
    a = 1 + (g1 + g2) / (g1 * rho1 + g2 * rho2)
    return mp.sqrt(2) * a / (a + 1), mp.sqrt(2) / (a + 1), a


def two_level_eta_prime(E, b1, b2, s1, s2):
    ga, gb, _ = two_level_gamma(E, b1, b2, s1, s2)
    rho = 1 / mp.expm1(b1 * E)
    return 2 * mp.pi / mp.sqrt(2) * (gb * (1 + rho) - ga * rho) * E ** 3 * s1
