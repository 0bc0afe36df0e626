"""Pure-Python/numpy implementations of the hot kernels.

These are the reference semantics for the compiled twin in ``_speed.pyx``.
Both backends consume pseudorandomness identically: PCG64 streams spawned
per block from the master seed, one double per decision in a fixed order,
so results are bit-identical whichever backend is selected at import.
"""

from __future__ import annotations

import numpy as np

MC_BLOCK = 1 << 16
FLAP_BLOCK = 1 << 20
ENUMERATION_EDGE_LIMIT = 30  # hard guard; callers impose tighter policy limits


def _spawned_bit_generators(seed: int, n_blocks: int) -> list[np.random.PCG64]:
    return [np.random.PCG64(ss) for ss in np.random.SeedSequence(seed).spawn(n_blocks)]


def _disconnected_after_removal(num_vertices: int, eu, ev, failed_mask: int) -> bool:
    parent = list(range(num_vertices))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    comps = num_vertices
    for i in range(len(eu)):
        if failed_mask >> i & 1:
            continue
        ru, rv = find(eu[i]), find(ev[i])
        if ru != rv:
            parent[ru] = rv
            comps -= 1
            if comps == 1:
                return False
    return comps > 1


def _row_disconnects(num_vertices: int, eu, ev, failed_row) -> bool:
    parent = list(range(num_vertices))

    def find(x: int) -> int:
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    comps = num_vertices
    for i in range(len(eu)):
        if failed_row[i]:
            continue
        ru, rv = find(eu[i]), find(ev[i])
        if ru != rv:
            parent[ru] = rv
            comps -= 1
    return comps > 1


def disconnection_counts(num_vertices: int, eu, ev) -> list[int]:
    """For each k, how many k-subsets of failed edges disconnect the graph.

    Full enumeration over all 2^E failed-edge subsets; exact integers.
    """
    ne = len(eu)
    if ne > ENUMERATION_EDGE_LIMIT:
        raise ValueError(f"{ne} edges is beyond the enumeration guard")
    counts = [0] * (ne + 1)
    eu = list(eu)
    ev = list(ev)
    for mask in range(1 << ne):
        if _disconnected_after_removal(num_vertices, eu, ev, mask):
            counts[mask.bit_count()] += 1
    return counts


def disconnection_mc(num_vertices: int, eu, ev, p: float, trials: int, seed: int) -> int:
    """Number of trials in which independent edge failures disconnect the graph.

    Trials run in blocks of MC_BLOCK, one spawned PCG64 stream per block;
    per trial, one uniform draw per edge in edge-id order.
    """
    ne = len(eu)
    n_blocks = -(-trials // MC_BLOCK)
    failures = 0
    done = 0
    eu_l, ev_l = list(eu), list(ev)
    use_masks = ne <= 64
    weights = (np.uint64(1) << np.arange(ne, dtype=np.uint64)) if use_masks else None
    verdict: dict[int, bool] = {}
    for bg in _spawned_bit_generators(seed, n_blocks):
        bt = min(MC_BLOCK, trials - done)
        u = np.random.Generator(bg).random((bt, ne))
        if use_masks:
            masks = (u < p).astype(np.uint64) @ weights
            vals, cnts = np.unique(masks, return_counts=True)
            for mask, cnt in zip(vals.tolist(), cnts.tolist()):
                d = verdict.get(mask)
                if d is None:
                    d = _disconnected_after_removal(num_vertices, eu_l, ev_l, mask)
                    verdict[mask] = d
                if d:
                    failures += cnt
        else:
            failed = u < p
            for t in range(bt):
                if _row_disconnects(num_vertices, eu_l, ev_l, failed[t]):
                    failures += 1
        done += bt
    return failures


def flapping_run(
    to_bad: float, to_good: float, p_good: float, p_bad: float, slots: int, seed: int
) -> tuple[int, int]:
    """Simulate a two-state good/bad link for `slots` reconciliation slots.

    Starts in the good state. Per slot two draws, in order: failure uniform
    (compared against the current state's failure probability), then
    transition uniform. Returns (slots spent in bad state, failed slots).
    """
    n_blocks = -(-slots // FLAP_BLOCK)
    bad = fails = 0
    state = 0  # 0 = good, 1 = bad
    done = 0
    for bg in _spawned_bit_generators(seed, n_blocks):
        bt = min(FLAP_BLOCK, slots - done)
        u = np.random.Generator(bg).random((bt, 2))
        fail_g = (u[:, 0] < p_good).tolist()
        fail_b = (u[:, 0] < p_bad).tolist()
        go_bad = (u[:, 1] < to_bad).tolist()
        go_good = (u[:, 1] < to_good).tolist()
        s = state
        for i in range(bt):
            if s:
                bad += 1
                if fail_b[i]:
                    fails += 1
                if go_good[i]:
                    s = 0
            else:
                if fail_g[i]:
                    fails += 1
                if go_bad[i]:
                    s = 1
        state = s
        done += bt
    return bad, fails
