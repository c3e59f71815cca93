"""Pure-Python backtracking embedding search (fallback for ``_match_cy``)."""

import numpy as np


def find_embeddings(
    p_labels,
    p_parent,
    p_parent_bond,
    p_check_ptr,
    p_check_pos,
    p_check_bond,
    p_degree,
    t_labels,
    t_degree,
    t_nbr_ptr,
    t_nbr_idx,
    t_bondmat,
    max_matches,
):
    """Enumerate injective label-, bond- and degree-preserving embeddings.

    Pattern atoms are visited in the given search order; a position with a
    parent draws candidates from the target neighbours of the parent's image,
    a root position from all target atoms. Returns an ``(n_found, n_pattern)``
    int64 array, rows in discovery order.
    """
    p_labels = [int(x) for x in p_labels]
    p_parent = [int(x) for x in p_parent]
    p_parent_bond = [int(x) for x in p_parent_bond]
    p_check_ptr = [int(x) for x in p_check_ptr]
    p_check_pos = [int(x) for x in p_check_pos]
    p_check_bond = [int(x) for x in p_check_bond]
    p_degree = [int(x) for x in p_degree]
    t_labels = [int(x) for x in t_labels]
    t_degree = [int(x) for x in t_degree]
    t_nbr_ptr = [int(x) for x in t_nbr_ptr]
    t_nbr_idx = [int(x) for x in t_nbr_idx]
    bondmat = t_bondmat.tolist() if hasattr(t_bondmat, "tolist") else t_bondmat
    n_p = len(p_labels)
    n_t = len(t_labels)
    found = []
    if n_p == 0 or max_matches <= 0:
        return np.zeros((0, n_p), dtype=np.int64)
    assign = [-1] * n_p
    used = [False] * n_t

    def candidates(pos):
        par = p_parent[pos]
        if par < 0:
            return range(n_t)
        src = assign[par]
        return t_nbr_idx[t_nbr_ptr[src] : t_nbr_ptr[src + 1]]

    def feasible(pos, t):
        if used[t] or t_labels[t] != p_labels[pos]:
            return False
        need = p_degree[pos]
        if need >= 0 and t_degree[t] != need:
            return False
        par = p_parent[pos]
        if par >= 0 and bondmat[assign[par]][t] != p_parent_bond[pos]:
            return False
        for c in range(p_check_ptr[pos], p_check_ptr[pos + 1]):
            if bondmat[assign[p_check_pos[c]]][t] != p_check_bond[c]:
                return False
        return True

    iters = [None] * n_p
    pos = 0
    iters[0] = iter(candidates(0))
    while pos >= 0:
        advanced = False
        for t in iters[pos]:
            if feasible(pos, t):
                assign[pos] = t
                used[t] = True
                advanced = True
                break
        if not advanced:
            pos -= 1
            if pos >= 0:
                used[assign[pos]] = False
                assign[pos] = -1
            continue
        if pos == n_p - 1:
            found.append(list(assign))
            if len(found) >= max_matches:
                break
            used[assign[pos]] = False
            assign[pos] = -1
            continue
        pos += 1
        iters[pos] = iter(candidates(pos))
    return np.array(found, dtype=np.int64).reshape(-1, n_p)
