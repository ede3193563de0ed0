#!/usr/bin/env python3
"""Reference values for the certified constants, in 50-digit arithmetic.

Evaluates every constant from its closed-form definition, independently of
the Rust implementation. The printed values are frozen into the test suite.

    python3 tools/oracle_constants.py
"""

from mpmath import mp, mpf, pi, log

mp.dps = 50


def scenario(name, sigma, b, beta, rate, length, eps_min, eps_max, c_theta, c_u_max, energy):
    kind, a, alpha = sigma
    if kind == "log":
        s1 = lambda u: a / u
        s2 = lambda u: -a / u**2
        c_u = a * c_theta
        g_sigma = lambda c: (1 + c) / (beta * c)
    else:
        s1 = lambda u: a * alpha * u ** (alpha - 1)
        s2 = lambda u: a * alpha * (alpha - 1) * u ** (alpha - 2)
        c_u = (c_theta * a * alpha) ** (1 / (1 - alpha))
        g_sigma = lambda c: (1 - alpha) * (1 + c) / (beta * c)

    w = lambda u: b * (1 + u) ** beta
    w1 = lambda u: b * beta * (1 + u) ** (beta - 1)
    w2 = lambda u: b * beta * (beta - 1) * (1 + u) ** (beta - 2)

    g_w = beta / (1 - beta)
    big_g_w = (1 - beta) / beta
    n_max = w(c_u_max) / (c_theta * w1(c_u_max))
    if rate[0] == "constant":
        c_f = rate[1]
    else:
        _, k1, k2, k3 = rate
        c_f = 1 / (k1 + (k2 + k3) * n_max)
    c_p = (length / pi) ** 2

    u_inf = energy / length
    theta_inf = 1 / (s1(u_inf) + 2 * w1(u_inf))

    # -sigma'' and -w'' are decreasing for both families
    k_sigma_big = -s2(c_u) / 2
    k_w_big = -w2(c_u) / 2
    k_sigma = -s2(c_u_max) / 2
    k_w = -w2(c_u_max) / 2

    c1 = max(
        2 / w(0) + c_p / (theta_inf * eps_min),
        2 * (2 * w1(0) ** 2 / w(0) + k_w_big) + k_sigma_big,
    )
    g = max(g_sigma(c_u), big_g_w)
    c2_tilde = (
        (max(1, s1(c_u_max) / (4 * eps_max * c_f)) + 2 * g**2)
        * (2 * eps_max / (1 - 2 * g_w))
        * max(
            1 / s1(c_u_max),
            (c_p / eps_min)
            * (c_p * w(c_u_max) ** 2 / (4 * eps_min * c_theta * w1(c_u_max) ** 2) - 1 / s2(c_u_max)),
        )
    )
    c2 = (2 + max(4 * w1(0) ** 2 - 1, 0)) * c2_tilde
    c3_per_h0 = max(
        2 * length * (2 * w(c_u_max) / (3 * c_theta * w1(c_u_max)) + 4 * w(c_u_max) / 3 + w1(0) ** 2 / (2 * k_w)),
        length / k_sigma,
        2 * (1 + c_p) * theta_inf / eps_min,
    )
    values = [
        ("c_u", c_u),
        ("c_theta_max", 1 / s1(c_u_max)),
        ("n_max", n_max),
        ("c_f", c_f),
        ("g_sigma", g_sigma(c_u)),
        ("theta_inf", theta_inf),
        ("big_k_sigma", k_sigma_big),
        ("big_k_w", k_w_big),
        ("k_sigma", k_sigma),
        ("k_w", k_w),
        ("c1", c1),
        ("c2_tilde", c2_tilde),
        ("c2", c2),
        ("c3_per_h0", c3_per_h0),
        ("rate", 1 / (c1 * c2)),
    ]
    print(f"// scenario {name}")
    for key, v in values:
        print(f"{key} = {mp.nstr(v, 20)}")


scenario("A", ("log", mpf(1), None), mpf(1), mpf("0.25"), ("constant", mpf(1)), mpf(1), mpf(1), mpf(1), mpf("0.5"), mpf(2), mpf(1))
scenario(
    "B",
    ("power", mpf(2), mpf("0.5")),
    mpf(1),
    mpf("0.25"),
    ("srh", mpf("0.2"), mpf("0.1"), mpf("0.1")),
    mpf(1),
    mpf(1),
    mpf(1),
    mpf("0.4"),
    mpf("2.5"),
    mpf(1),
)
scenario("C", ("log", mpf("0.5"), None), mpf(2), mpf("0.2"), ("constant", mpf(2)), mpf(2), mpf(1), mpf("2.5"), mpf("0.5"), mpf(3), mpf(3))

