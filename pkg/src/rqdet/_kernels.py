"""Hot reduction kernels, each with a numba path and a pure-numpy path.

Every reduction here uses a fixed summation topology (sequential loops in
the numba path, unoptimized einsum in the numpy path), so results are
bit-reproducible and independent of thread count.  The coincidence kernel
additionally reduces its quadrature matrix diagonal-first and in symmetric
(a,b)+(b,a) pairs, which makes the total exactly invariant under a
transposition of the two detector axes.
"""

import numpy as np

from ._backend import active_backend

try:
    from numba import njit

    _HAS_NUMBA = True
except ImportError:  # pragma: no cover - numba is a declared dependency
    _HAS_NUMBA = False


# ---------------------------------------------------------------------------
# numpy path: einsum with optimize=False runs a single fixed-order C loop,
# never BLAS, so the reduction order does not depend on threading.

def _pair_sum_numpy(a):
    return complex(np.einsum("ij->", a, optimize=False))


def _quad_form_numpy(a, u):
    v = np.einsum("ij,j->i", a, np.conj(u), optimize=False)
    return complex(np.einsum("i,i->", u, v, optimize=False))


def _quad_form_scan_numpy(a, alpha, beta, taus):
    out = np.empty(taus.shape[0], dtype=np.complex128)
    for m in range(taus.shape[0]):
        u = np.exp(1j * (alpha * taus[m] + beta))
        v = np.einsum("ij,j->i", a, np.conj(u), optimize=False)
        out[m] = np.einsum("i,i->", u, v, optimize=False)
    return out


def _bilinear_form_numpy(a, v):
    w = np.einsum("ij,j->i", a, v, optimize=False)
    return complex(np.einsum("i,i->", v, w, optimize=False))


def _bilinear_scan_numpy(a, alpha, beta, taus):
    out = np.empty(taus.shape[0], dtype=np.complex128)
    for m in range(taus.shape[0]):
        v = np.exp(1j * (alpha * taus[m] + beta))
        w = np.einsum("ij,j->i", a, v, optimize=False)
        out[m] = np.einsum("i,i->", v, w, optimize=False)
    return out


def _amp_scan_numpy(c, alpha, taus):
    out = np.empty(taus.shape[0], dtype=np.complex128)
    for m in range(taus.shape[0]):
        u = np.exp(1j * (alpha * taus[m]))
        out[m] = np.einsum("i,i->", c, u, optimize=False)
    return out


def _sym_reduce(t):
    # diagonal first, then commutative (a,b)+(b,a) pairs: the result is
    # bit-invariant under transposition of t
    n = t.shape[0]
    acc = 0.0 + 0.0j
    for a in range(n):
        acc += t[a, a]
    for a in range(n):
        for b in range(a + 1, n):
            acc += t[a, b] + t[b, a]
    return acc


def _coincidence_total_numpy(w, p1p, p1m, p2p, p2m, c1, c2):
    def amp_matrix(pa, pb):
        # symmetrized two-point amplitude on all (s_a, s_b) node pairs
        t1 = np.einsum("ai,ij->aj", pa, w, optimize=False)
        bx = np.einsum("aj,bj->ab", t1, pb, optimize=False)
        t2 = np.einsum("bi,ij->bj", pb, w, optimize=False)
        by = np.einsum("bj,aj->ab", t2, pa, optimize=False)
        return 0.5 * (bx + by)

    bp = amp_matrix(p1p, p2p)
    bm = amp_matrix(p1m, p2m)
    t = (c1[:, None] * c2[None, :]) * (bp * np.conj(bm))
    if t.shape[0] == t.shape[1]:
        return _sym_reduce(t)
    return complex(np.einsum("ab->", t, optimize=False))


# ---------------------------------------------------------------------------
# numba path: explicit sequential loops

if _HAS_NUMBA:

    @njit(cache=True, nogil=True)
    def _pair_sum_numba(a):
        n, m = a.shape
        acc = 0.0 + 0.0j
        for i in range(n):
            for j in range(m):
                acc += a[i, j]
        return acc

    @njit(cache=True, nogil=True)
    def _quad_form_numba(a, u):
        n = u.shape[0]
        acc = 0.0 + 0.0j
        for i in range(n):
            row = 0.0 + 0.0j
            for j in range(n):
                row += a[i, j] * np.conj(u[j])
            acc += u[i] * row
        return acc

    @njit(cache=True, nogil=True)
    def _quad_form_scan_numba(a, alpha, beta, taus):
        n = alpha.shape[0]
        nt = taus.shape[0]
        out = np.empty(nt, dtype=np.complex128)
        u = np.empty(n, dtype=np.complex128)
        for m in range(nt):
            for i in range(n):
                u[i] = np.exp(1j * (alpha[i] * taus[m] + beta[i]))
            acc = 0.0 + 0.0j
            for i in range(n):
                row = 0.0 + 0.0j
                for j in range(n):
                    row += a[i, j] * np.conj(u[j])
                acc += u[i] * row
            out[m] = acc
        return out

    @njit(cache=True, nogil=True)
    def _bilinear_form_numba(a, v):
        n = v.shape[0]
        acc = 0.0 + 0.0j
        for i in range(n):
            row = 0.0 + 0.0j
            for j in range(n):
                row += a[i, j] * v[j]
            acc += v[i] * row
        return acc

    @njit(cache=True, nogil=True)
    def _bilinear_scan_numba(a, alpha, beta, taus):
        n = alpha.shape[0]
        nt = taus.shape[0]
        out = np.empty(nt, dtype=np.complex128)
        v = np.empty(n, dtype=np.complex128)
        for m in range(nt):
            for i in range(n):
                v[i] = np.exp(1j * (alpha[i] * taus[m] + beta[i]))
            acc = 0.0 + 0.0j
            for i in range(n):
                row = 0.0 + 0.0j
                for j in range(n):
                    row += a[i, j] * v[j]
                acc += v[i] * row
            out[m] = acc
        return out

    @njit(cache=True, nogil=True)
    def _amp_scan_numba(c, alpha, taus):
        n = c.shape[0]
        nt = taus.shape[0]
        out = np.empty(nt, dtype=np.complex128)
        for m in range(nt):
            acc = 0.0 + 0.0j
            for i in range(n):
                acc += c[i] * np.exp(1j * alpha[i] * taus[m])
            out[m] = acc
        return out

    @njit(cache=True, nogil=True)
    def _amp_matrix_numba(w, pa, pb):
        ma = pa.shape[0]
        mb = pb.shape[0]
        n = w.shape[0]
        t1 = np.empty((ma, n), dtype=np.complex128)
        for a in range(ma):
            for j in range(n):
                s = 0.0 + 0.0j
                for i in range(n):
                    s += pa[a, i] * w[i, j]
                t1[a, j] = s
        bx = np.empty((ma, mb), dtype=np.complex128)
        for a in range(ma):
            for b in range(mb):
                s = 0.0 + 0.0j
                for j in range(n):
                    s += t1[a, j] * pb[b, j]
                bx[a, b] = s
        t2 = np.empty((mb, n), dtype=np.complex128)
        for b in range(mb):
            for j in range(n):
                s = 0.0 + 0.0j
                for i in range(n):
                    s += pb[b, i] * w[i, j]
                t2[b, j] = s
        out = np.empty((ma, mb), dtype=np.complex128)
        for a in range(ma):
            for b in range(mb):
                s = 0.0 + 0.0j
                for j in range(n):
                    s += t2[b, j] * pa[a, j]
                out[a, b] = 0.5 * (bx[a, b] + s)
        return out

    @njit(cache=True, nogil=True)
    def _coincidence_total_numba(w, p1p, p1m, p2p, p2m, c1, c2):
        bp = _amp_matrix_numba(w, p1p, p2p)
        bm = _amp_matrix_numba(w, p1m, p2m)
        m1 = bp.shape[0]
        m2 = bp.shape[1]
        t = np.empty((m1, m2), dtype=np.complex128)
        for a in range(m1):
            for b in range(m2):
                t[a, b] = (c1[a] * c2[b]) * (bp[a, b] * np.conj(bm[a, b]))
        acc = 0.0 + 0.0j
        if m1 == m2:
            for a in range(m1):
                acc += t[a, a]
            for a in range(m1):
                for b in range(a + 1, m1):
                    acc += t[a, b] + t[b, a]
        else:
            for a in range(m1):
                for b in range(m2):
                    acc += t[a, b]
        return acc


# ---------------------------------------------------------------------------
# dispatchers

def _as_c128(a):
    return np.ascontiguousarray(a, dtype=np.complex128)


def _as_f64(a):
    return np.ascontiguousarray(a, dtype=np.float64)


def pair_sum(a):
    """Sum of all entries of a complex matrix, fixed row-major order."""
    a = _as_c128(a)
    if active_backend() == "numba":
        return complex(_pair_sum_numba(a))
    return _pair_sum_numpy(a)


def quad_form(a, u):
    """Sum_ij a[i,j] * u[i] * conj(u[j])."""
    a = _as_c128(a)
    u = _as_c128(u)
    if active_backend() == "numba":
        return complex(_quad_form_numba(a, u))
    return _quad_form_numpy(a, u)


def quad_form_scan(a, alpha, beta, taus):
    """quad_form with u_i(tau) = exp(i*(alpha_i*tau + beta_i)), per tau."""
    a = _as_c128(a)
    alpha = _as_f64(alpha)
    beta = _as_f64(beta)
    taus = _as_f64(taus)
    if active_backend() == "numba":
        return _quad_form_scan_numba(a, alpha, beta, taus)
    return _quad_form_scan_numpy(a, alpha, beta, taus)


def bilinear_form(a, v):
    """Sum_ij a[i,j] * v[i] * v[j] (no conjugation)."""
    a = _as_c128(a)
    v = _as_c128(v)
    if active_backend() == "numba":
        return complex(_bilinear_form_numba(a, v))
    return _bilinear_form_numpy(a, v)


def bilinear_scan(a, alpha, beta, taus):
    a = _as_c128(a)
    alpha = _as_f64(alpha)
    beta = _as_f64(beta)
    taus = _as_f64(taus)
    if active_backend() == "numba":
        return _bilinear_scan_numba(a, alpha, beta, taus)
    return _bilinear_scan_numpy(a, alpha, beta, taus)


def amp_scan(c, alpha, taus):
    """Sum_i c[i] * exp(i*alpha_i*tau), per tau."""
    c = _as_c128(c)
    alpha = _as_f64(alpha)
    taus = _as_f64(taus)
    if active_backend() == "numba":
        return _amp_scan_numba(c, alpha, taus)
    return _amp_scan_numpy(c, alpha, taus)


def coincidence_total(w, p1p, p1m, p2p, p2m, c1, c2):
    """Double s-quadrature of the coincidence integrand.

    w is the symmetric weighted two-particle matrix, p?p/p?m the plane-wave
    phase matrices on the +s/2 and -s/2 embedding points, c1/c2 the
    quadrature-weight times effective-window vectors.
    """
    w = _as_c128(w)
    p1p = _as_c128(p1p)
    p1m = _as_c128(p1m)
    p2p = _as_c128(p2p)
    p2m = _as_c128(p2m)
    c1 = _as_c128(c1)
    c2 = _as_c128(c2)
    if active_backend() == "numba":
        return complex(_coincidence_total_numba(w, p1p, p1m, p2p, p2m, c1, c2))
    return complex(_coincidence_total_numpy(w, p1p, p1m, p2p, p2m, c1, c2))
