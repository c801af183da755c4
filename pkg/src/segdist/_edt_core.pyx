# cython: boundscheck=False, wraparound=False, cdivision=True, initializedcheck=False
"""Compiled 1D lower-envelope pass of the separable squared EDT."""

from libc.math cimport INFINITY
from libc.stdlib cimport free, malloc


def edt_lines(double[:, ::1] f, double spacing):
    """Replace each row of ``f`` by its 1D squared-distance envelope, in place.

    ``f`` holds squared distances (``inf`` where no source is reachable yet);
    consecutive row elements are ``spacing`` mm apart.
    """
    cdef Py_ssize_t m = f.shape[0]
    cdef Py_ssize_t n = f.shape[1]
    cdef Py_ssize_t row, q, k, j, p
    cdef double w = spacing * spacing
    cdef double s, d
    if n == 0 or m == 0:
        return
    cdef Py_ssize_t *v = <Py_ssize_t *> malloc(n * sizeof(Py_ssize_t))
    cdef double *z = <double *> malloc((n + 1) * sizeof(double))
    cdef double *fv = <double *> malloc(n * sizeof(double))
    if v == NULL or z == NULL or fv == NULL:
        free(v); free(z); free(fv)
        raise MemoryError()
    try:
        with nogil:
            for row in range(m):
                k = -1
                for q in range(n):
                    if f[row, q] == INFINITY:
                        continue
                    if k < 0:
                        k = 0
                        v[0] = q
                        fv[0] = f[row, q]
                        z[0] = -INFINITY
                        z[1] = INFINITY
                        continue
                    while True:
                        p = v[k]
                        s = ((f[row, q] + w * q * q) - (fv[k] + w * p * p)) / (2.0 * w * (q - p))
                        if s <= z[k]:
                            k -= 1
                        else:
                            break
                    k += 1
                    v[k] = q
                    fv[k] = f[row, q]
                    z[k] = s
                    z[k + 1] = INFINITY
                if k < 0:
                    continue
                j = 0
                for q in range(n):
                    while z[j + 1] < q:
                        j += 1
                    d = (q - v[j]) * spacing
                    f[row, q] = d * d + fv[j]
    finally:
        free(v)
        free(z)
        free(fv)
