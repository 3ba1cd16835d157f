"""Shared test oracles.

The brute-force path sum re-derives the reduced density matrix by explicit
summation over every forward/backward path pair, assembling amplitudes and
influence exponents directly from the coefficient arrays.  It shares no
bookkeeping with the tensor engine.
"""

import numpy as np

from strucbath.quapi import bare_propagator


def brute_force_path_sum(model, table, n_steps):
    m = model.dimension
    m2 = m * m
    n = n_steps
    prop = bare_propagator(model, table.dt)
    s = np.asarray(model.dvr_values)
    rho0v = np.asarray(model.rho0).reshape(m2)
    n_paths = m2 ** (n + 1)
    digits = np.array(np.unravel_index(np.arange(n_paths), (m2,) * (n + 1)))
    a = digits // m
    b = digits % m
    sp = s[a]
    sm = s[b]
    amp = rho0v[digits[0]].astype(complex)
    for k in range(n):
        amp = amp * prop[a[k + 1], a[k]] * np.conj(prop[b[k + 1], b[k]])
    mu = table.counter_mu
    expo = np.zeros(n_paths, dtype=complex)
    for k in range(n + 1):
        for kp in range(k + 1):
            d = k - kp
            if d > table.dk_max:
                continue
            if d == 0:
                if n == 0:
                    continue
                if k == 0:
                    eta, width = table.eta_first[0], 0.5 * table.dt
                elif k == n:
                    eta, width = table.eta_last[0], 0.5 * table.dt
                else:
                    eta, width = table.eta_int[0], table.dt
                eta = eta + 1j * mu * width
            elif k == n and kp == 0:
                eta = table.eta_last_first[d]
            elif k == n:
                eta = table.eta_last[d]
            elif kp == 0:
                eta = table.eta_first[d]
            else:
                eta = table.eta_int[d]
            expo += (sp[k] - sm[k]) * (eta * sp[kp] - np.conj(eta) * sm[kp])
    weight = amp * np.exp(-expo)
    rho = np.zeros(m2, dtype=complex)
    np.add.at(rho, digits[n], weight)
    return rho.reshape(m, m)
