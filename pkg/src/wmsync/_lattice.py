"""Compiled forward/backward sweeps over the drift lattice.

All three decoders share one kernel. A step from drift j to drift k emits
``b = k - j + 1`` received bits; its weight is ``u[b] + f[b] * z`` where
``z`` scores the transmitted bit against the watermark. Second-order steps
additionally sum over the neighbouring interval (``b1``) through 2-D tables.
"""
import numpy as np
from numba import njit

OK = 0
FORWARD_FAILED = 1
BACKWARD_FAILED = 2
POSTERIOR_FAILED = 3


@njit(cache=True)
def _score(received, watermark, pf, bit, drift_after):
    # ``bit`` is 1-based; the transmitted copy sits at received[bit + drift_after]
    idx = bit + drift_after
    if idx < 1 or idx > received.shape[0]:
        return 0.0
    if received[idx - 1] == watermark[bit - 1]:
        return 1.0 - pf
    return pf


@njit(cache=True)
def sweep(received, watermark, gamma, x_max, imax, psi, pi, pf,
          u1, f1, u2, f2, second_order):
    n_states = 2 * x_max + 1
    nb = imax + 2
    fwd = np.zeros((n_states, gamma))
    bwd = np.zeros((n_states, gamma))
    post = np.zeros((n_states, gamma))
    status = OK

    fwd[:, 0] = pi
    for col in range(1, gamma):
        use2 = second_order and col >= 2
        for s in range(n_states):
            k = s - x_max
            z = _score(received, watermark, pf, col, k)
            acc = 0.0
            for b2 in range(nb):
                sj = s - b2 + 1
                if sj < 0 or sj >= n_states:
                    continue
                prev = fwd[sj, col - 1]
                if prev == 0.0:
                    continue
                if use2:
                    w = 0.0
                    for b1 in range(nb):
                        si = sj - b1 + 1
                        if si < 0 or si >= n_states:
                            continue
                        w += u2[b1, b2] + f2[b1, b2] * z
                    acc += prev * w
                else:
                    acc += prev * (u1[b2] + f1[b2] * z)
            fwd[s, col] = acc
        total = fwd[:, col].sum()
        if total <= 0.0:
            return fwd, bwd, post, FORWARD_FAILED
        fwd[:, col] /= total

    bwd[psi + x_max, gamma - 1] = 1.0
    for col in range(gamma - 2, -1, -1):
        use2 = second_order and col <= gamma - 3
        bit = col + 1
        for s in range(n_states):
            acc = 0.0
            for b2 in range(nb):
                sj = s + b2 - 1
                if sj < 0 or sj >= n_states:
                    continue
                nxt = bwd[sj, col + 1]
                if nxt == 0.0:
                    continue
                z = _score(received, watermark, pf, bit, sj - x_max)
                if use2:
                    w = 0.0
                    for b1 in range(nb):
                        si = sj + b1 - 1
                        if si < 0 or si >= n_states:
                            continue
                        w += u2[b1, b2] + f2[b1, b2] * z
                    acc += nxt * w
                else:
                    acc += nxt * (u1[b2] + f1[b2] * z)
            bwd[s, col] = acc
        total = bwd[:, col].sum()
        if total <= 0.0:
            return fwd, bwd, post, BACKWARD_FAILED
        bwd[:, col] /= total

    for col in range(gamma):
        total = 0.0
        for s in range(n_states):
            post[s, col] = fwd[s, col] * bwd[s, col]
            total += post[s, col]
        if total <= 0.0:
            status = POSTERIOR_FAILED
            continue
        for s in range(n_states):
            post[s, col] /= total
    return fwd, bwd, post, status
