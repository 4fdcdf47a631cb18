"""Hot numeric kernels: dense plane-wave sums.

Every wave-packet coefficient and every spatial Fourier integral in the
package reduces to

    out[i] = sum_j amps[j] * exp(i * sign * nodes[j] * points[i])

(optionally with a per-node frequency phase over a batch of times). Each
kernel has a numba version and a numpy version; ``plane_wave_sum`` and
``plane_wave_sum_t`` dispatch according to :mod:`fermiscat._accel`.
"""
import numpy as np

from ._accel import HAVE_NUMBA, njit


def _plane_wave_sum_numpy(points, nodes, amps, sign):
    phase = np.multiply.outer(points, nodes)
    return np.exp(1j * sign * phase) @ amps


def _plane_wave_sum_t_numpy(points, nodes, amps, freqs, times, sign):
    # (n_t, n_nodes) time phases folded into the amplitudes
    a_t = amps[None, :] * np.exp(-1j * sign * np.multiply.outer(times, freqs))
    basis = np.exp(1j * sign * np.multiply.outer(nodes, points))
    return a_t @ basis


@njit(cache=True)
def _plane_wave_sum_numba(points, nodes, amps, sign):
    n_pts = points.shape[0]
    n_nodes = nodes.shape[0]
    out = np.zeros(n_pts, dtype=np.complex128)
    for i in range(n_pts):
        re = 0.0
        im = 0.0
        x = points[i]
        for j in range(n_nodes):
            arg = sign * nodes[j] * x
            c = np.cos(arg)
            s = np.sin(arg)
            a = amps[j]
            re += a.real * c - a.imag * s
            im += a.real * s + a.imag * c
        out[i] = re + 1j * im
    return out


@njit(cache=True)
def _plane_wave_sum_t_numba(points, nodes, amps, freqs, times, sign):
    n_t = times.shape[0]
    n_pts = points.shape[0]
    n_nodes = nodes.shape[0]
    basis = np.empty((n_nodes, n_pts), dtype=np.complex128)
    for j in range(n_nodes):
        for i in range(n_pts):
            arg = sign * nodes[j] * points[i]
            basis[j, i] = np.cos(arg) + 1j * np.sin(arg)
    a_t = np.empty((n_t, n_nodes), dtype=np.complex128)
    for t in range(n_t):
        for j in range(n_nodes):
            arg = -sign * freqs[j] * times[t]
            a_t[t, j] = amps[j] * (np.cos(arg) + 1j * np.sin(arg))
    # the contraction is a plain matrix product; leave it to BLAS
    return np.dot(a_t, basis)


def _prep(*arrays):
    return [np.ascontiguousarray(a) for a in arrays]


def plane_wave_sum(points, nodes, amps, sign=1.0, *, use_numba=None):
    """Return ``sum_j amps[j] exp(i sign nodes[j] points[i])`` for every point."""
    points, nodes = _prep(np.asarray(points, dtype=float), np.asarray(nodes, dtype=float))
    (amps,) = _prep(np.asarray(amps, dtype=complex))
    if use_numba is None:
        use_numba = HAVE_NUMBA
    scalar = points.ndim == 0
    points = np.atleast_1d(points)
    fn = _plane_wave_sum_numba if use_numba else _plane_wave_sum_numpy
    out = fn(points, nodes, amps, float(sign))
    return out[0] if scalar else out


def plane_wave_sum_t(points, nodes, amps, freqs, times, sign=1.0, *, use_numba=None):
    """Batched version with node frequencies.

    ``out[t, i] = sum_j amps[j] exp(i sign (nodes[j] points[i] - freqs[j] times[t]))``
    """
    points, nodes, freqs, times = _prep(
        np.atleast_1d(np.asarray(points, dtype=float)),
        np.asarray(nodes, dtype=float),
        np.asarray(freqs, dtype=float),
        np.atleast_1d(np.asarray(times, dtype=float)),
    )
    (amps,) = _prep(np.asarray(amps, dtype=complex))
    if use_numba is None:
        use_numba = HAVE_NUMBA
    fn = _plane_wave_sum_t_numba if use_numba else _plane_wave_sum_t_numpy
    return fn(points, nodes, amps, freqs, times, float(sign))
