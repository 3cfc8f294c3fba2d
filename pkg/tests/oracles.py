#!/usr/bin/env python3
"""
Independent numerical references shared by the test modules.
"""

import numpy as np
from scipy import integrate, special, stats
from scipy.spatial.distance import cdist


def matern_bessel(h, phi: float, nu: float) -> np.ndarray:
    """Matérn correlation through the modified Bessel function, any nu > 0."""
    h = np.atleast_1d(np.asarray(h, dtype=float))
    scaled = np.sqrt(2.0 * nu) * h / phi
    out = np.ones_like(scaled)
    positive = scaled > 0
    s = scaled[positive]
    out[positive] = 2.0 ** (1.0 - nu) / special.gamma(nu) * s**nu * special.kv(nu, s)
    return out


def exponential_matrix(positions, phi: float, nugget_ratio: float = 0.0) -> np.ndarray:
    positions = np.asarray(positions, dtype=float)
    r = np.exp(-cdist(positions, positions) / phi)
    r[np.diag_indices_from(r)] += nugget_ratio
    return r


def vague_weights_by_quadrature(positions, values, support, correlation_matrix) -> np.ndarray:
    """
    Posterior weights over a uniform range support under pi(beta, sigma2) ~ 1/sigma2,
    from nested adaptive quadrature over beta and log sigma2.

    `correlation_matrix(phi)` returns R for the given range.
    """
    z = np.asarray(values, dtype=float)
    n = z.size
    ones = np.ones(n)
    logs = []
    for phi in support:
        r = correlation_matrix(phi)
        rinv = np.linalg.inv(r)
        _, log_det = np.linalg.slogdet(r)
        a = ones @ rinv @ ones
        beta_hat = (ones @ rinv @ z) / a
        resid = z - beta_hat
        s2 = resid @ rinv @ resid
        center = np.log(s2 / n)

        def log_lik(beta, t):
            q = (z - beta) @ rinv @ (z - beta)
            return -0.5 * n * (np.log(2.0 * np.pi) + t) - 0.5 * log_det - 0.5 * q / np.exp(t)

        shift = log_lik(beta_hat, center)

        def inner(t):
            sd = np.sqrt(np.exp(t) / a)
            value, _ = integrate.quad(
                lambda b: np.exp(log_lik(b, t) - shift), beta_hat - 12.0 * sd, beta_hat + 12.0 * sd, epsabs=0.0, epsrel=1e-10
            )
            return value

        # d sigma2 / sigma2 = d log sigma2
        outer, _ = integrate.quad(inner, center - 15.0, center + 25.0, epsabs=0.0, epsrel=1e-9, limit=200)
        logs.append(np.log(outer) + shift)
    logs = np.array(logs)
    return np.exp(logs - special.logsumexp(logs))


def conjugate_weights_by_quadrature(
    positions, values, support, correlation_matrix, beta_center, sigma2_center, sigma2_df, beta_scale
) -> np.ndarray:
    """
    Posterior weights over a uniform range support under
    sigma2 ~ Scaled-Inv-chi2(sigma2_df, sigma2_center) and
    beta | sigma2 ~ N(beta_center, sigma2 / beta_scale), integrating the joint
    density over beta and log sigma2.
    """
    z = np.asarray(values, dtype=float)
    n = z.size
    ones = np.ones(n)
    logs = []
    for phi in support:
        r = correlation_matrix(phi)
        rinv = np.linalg.inv(r)
        _, log_det = np.linalg.slogdet(r)
        a = ones @ rinv @ ones
        beta_c = (ones @ rinv @ z + beta_scale * beta_center) / (a + beta_scale)

        def log_joint(beta, t):
            sigma2 = np.exp(t)
            q = (z - beta) @ rinv @ (z - beta)
            log_lik = -0.5 * n * (np.log(2.0 * np.pi) + t) - 0.5 * log_det - 0.5 * q / sigma2
            log_beta = stats.norm.logpdf(beta, beta_center, np.sqrt(sigma2 / beta_scale))
            log_sigma2 = stats.invgamma.logpdf(sigma2, a=0.5 * sigma2_df, scale=0.5 * sigma2_df * sigma2_center)
            # d sigma2 = sigma2 d log sigma2
            return log_lik + log_beta + log_sigma2 + t

        resid = z - beta_c
        spread = sigma2_df * sigma2_center + resid @ rinv @ resid + beta_scale * (beta_c - beta_center) ** 2
        center = np.log(spread / (sigma2_df + n + 1.0))
        shift = log_joint(beta_c, center)

        def inner(t):
            sd = np.sqrt(np.exp(t) / (a + beta_scale))
            value, _ = integrate.quad(
                lambda b: np.exp(log_joint(b, t) - shift), beta_c - 12.0 * sd, beta_c + 12.0 * sd, epsabs=0.0, epsrel=1e-10
            )
            return value

        outer, _ = integrate.quad(inner, center - 15.0, center + 25.0, epsabs=0.0, epsrel=1e-9, limit=200)
        logs.append(np.log(outer) + shift)
    logs = np.array(logs)
    return np.exp(logs - special.logsumexp(logs))
