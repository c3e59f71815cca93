# cython: language_level=3, boundscheck=False, wraparound=False, cdivision=True
"""Compiled backtracking embedding search; mirrors ``_match_py`` exactly."""

import numpy as np
cimport numpy as cnp

cnp.import_array()


def find_embeddings(
    const cnp.int64_t[::1] p_labels,
    const cnp.int64_t[::1] p_parent,
    const cnp.int64_t[::1] p_parent_bond,
    const cnp.int64_t[::1] p_check_ptr,
    const cnp.int64_t[::1] p_check_pos,
    const cnp.int64_t[::1] p_check_bond,
    const cnp.int64_t[::1] p_degree,
    const cnp.int64_t[::1] t_labels,
    const cnp.int64_t[::1] t_degree,
    const cnp.int64_t[::1] t_nbr_ptr,
    const cnp.int64_t[::1] t_nbr_idx,
    const cnp.int64_t[:, ::1] t_bondmat,
    Py_ssize_t max_matches,
):
    cdef Py_ssize_t n_p = p_labels.shape[0]
    cdef Py_ssize_t n_t = t_labels.shape[0]
    if n_p == 0 or max_matches <= 0:
        return np.zeros((0, n_p), dtype=np.int64)
    cdef cnp.int64_t[::1] assign = np.full(n_p, -1, dtype=np.int64)
    # cursor[pos]: next candidate slot (target index for roots, CSR offset otherwise)
    cdef cnp.int64_t[::1] cursor = np.zeros(n_p, dtype=np.int64)
    cdef cnp.int64_t[::1] cur_end = np.zeros(n_p, dtype=np.int64)
    cdef cnp.uint8_t[::1] used = np.zeros(n_t, dtype=np.uint8)
    out = np.zeros((max_matches, n_p), dtype=np.int64)
    cdef cnp.int64_t[:, ::1] outv = out
    cdef Py_ssize_t n_found = 0
    cdef Py_ssize_t pos = 0, par, c, i, t, src
    cdef bint ok, advanced

    # initialise position 0
    par = p_parent[0]
    if par < 0:
        cursor[0] = 0
        cur_end[0] = n_t
    while pos >= 0:
        advanced = False
        par = p_parent[pos]
        while cursor[pos] < cur_end[pos]:
            if par < 0:
                t = cursor[pos]
            else:
                t = t_nbr_idx[cursor[pos]]
            cursor[pos] += 1
            if used[t] or t_labels[t] != p_labels[pos]:
                continue
            if p_degree[pos] >= 0 and t_degree[t] != p_degree[pos]:
                continue
            if par >= 0 and t_bondmat[assign[par], t] != p_parent_bond[pos]:
                continue
            ok = True
            for c in range(p_check_ptr[pos], p_check_ptr[pos + 1]):
                if t_bondmat[assign[p_check_pos[c]], t] != p_check_bond[c]:
                    ok = False
                    break
            if not ok:
                continue
            assign[pos] = t
            used[t] = 1
            advanced = True
            break
        if not advanced:
            pos -= 1
            if pos >= 0:
                used[assign[pos]] = 0
                assign[pos] = -1
            continue
        if pos == n_p - 1:
            for i in range(n_p):
                outv[n_found, i] = assign[i]
            n_found += 1
            if n_found >= max_matches:
                break
            used[assign[pos]] = 0
            assign[pos] = -1
            continue
        pos += 1
        par = p_parent[pos]
        if par < 0:
            cursor[pos] = 0
            cur_end[pos] = n_t
        else:
            src = assign[par]
            cursor[pos] = t_nbr_ptr[src]
            cur_end[pos] = t_nbr_ptr[src + 1]
    return out[:n_found].copy()
