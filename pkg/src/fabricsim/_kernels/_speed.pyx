# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled hot kernels.

Bit-compatible with fabricsim._kernels.pure: same PCG64 block streams, same
draw order (see the pure module for the stream contract). Keep the two in
lockstep; the parity tests compare them for exact equality.
"""

from cpython.pycapsule cimport PyCapsule_GetPointer
from libc.stdlib cimport free, malloc
from numpy.random cimport bitgen_t

from numpy.random import PCG64, SeedSequence

cdef extern from *:
    int __builtin_popcount(unsigned int) nogil

cdef const char *CAPSULE_NAME = "BitGenerator"

MC_BLOCK = 1 << 16
FLAP_BLOCK = 1 << 20
ENUMERATION_EDGE_LIMIT = 30

cdef inline int uf_find(int *parent, int x) nogil:
    while parent[x] != x:
        parent[x] = parent[parent[x]]
        x = parent[x]
    return x


def disconnection_counts(int num_vertices, int[::1] eu, int[::1] ev):
    cdef int ne = eu.shape[0]
    if ne > ENUMERATION_EDGE_LIMIT:
        raise ValueError(f"{ne} edges is beyond the enumeration guard")
    cdef unsigned long long total = 1ULL << ne
    cdef unsigned long long mask
    cdef int i, ru, rv, comps
    cdef long long *counts = <long long *> malloc((ne + 1) * sizeof(long long))
    cdef int *parent = <int *> malloc(num_vertices * sizeof(int))
    if counts == NULL or parent == NULL:
        free(counts)
        free(parent)
        raise MemoryError()
    for i in range(ne + 1):
        counts[i] = 0
    with nogil:
        for mask in range(total):
            for i in range(num_vertices):
                parent[i] = i
            comps = num_vertices
            for i in range(ne):
                if (mask >> i) & 1:
                    continue
                ru = uf_find(parent, eu[i])
                rv = uf_find(parent, ev[i])
                if ru != rv:
                    parent[ru] = rv
                    comps -= 1
                    if comps == 1:
                        break
            if comps > 1:
                counts[__builtin_popcount(<unsigned int> mask)] += 1
    out = [counts[i] for i in range(ne + 1)]
    free(counts)
    free(parent)
    return out


def disconnection_mc(int num_vertices, int[::1] eu, int[::1] ev, double p,
                     long long trials, object seed):
    cdef int ne = eu.shape[0]
    cdef long long block = MC_BLOCK
    cdef long long n_blocks = (trials + block - 1) // block
    cdef long long failures = 0, done = 0, bt, t
    cdef int i, ru, rv, comps
    cdef bitgen_t *rng
    cdef int *parent = <int *> malloc(num_vertices * sizeof(int))
    if parent == NULL:
        raise MemoryError()
    try:
        for ss in SeedSequence(seed).spawn(n_blocks):
            bg = PCG64(ss)
            rng = <bitgen_t *> PyCapsule_GetPointer(bg.capsule, CAPSULE_NAME)
            bt = block if trials - done > block else trials - done
            with nogil:
                for t in range(bt):
                    for i in range(num_vertices):
                        parent[i] = i
                    comps = num_vertices
                    # draw every edge's uniform even after connectivity is
                    # settled, to keep stream consumption identical to pure
                    for i in range(ne):
                        if rng.next_double(rng.state) < p:
                            continue
                        ru = uf_find(parent, eu[i])
                        rv = uf_find(parent, ev[i])
                        if ru != rv:
                            parent[ru] = rv
                            comps -= 1
                    if comps > 1:
                        failures += 1
            done += bt
    finally:
        free(parent)
    return failures


def flapping_run(double to_bad, double to_good, double p_good, double p_bad,
                 long long slots, object seed):
    cdef long long block = FLAP_BLOCK
    cdef long long n_blocks = (slots + block - 1) // block
    cdef long long bad = 0, fails = 0, done = 0, bt, t
    cdef int state = 0
    cdef double u_fail, u_trans
    cdef bitgen_t *rng
    for ss in SeedSequence(seed).spawn(n_blocks):
        bg = PCG64(ss)
        rng = <bitgen_t *> PyCapsule_GetPointer(bg.capsule, CAPSULE_NAME)
        bt = block if slots - done > block else slots - done
        with nogil:
            for t in range(bt):
                u_fail = rng.next_double(rng.state)
                u_trans = rng.next_double(rng.state)
                if state:
                    bad += 1
                    if u_fail < p_bad:
                        fails += 1
                    if u_trans < to_good:
                        state = 0
                else:
                    if u_fail < p_good:
                        fails += 1
                    if u_trans < to_bad:
                        state = 1
        done += bt
    return bad, fails
