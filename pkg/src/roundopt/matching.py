"""Exact minimum-weight perfect matching on small dense graphs.

Array-based port of the O(n^3) primal-dual blossom algorithm (Galil's
formulation, following van Rantwijk's widely used implementation).  The
port keeps the stage/substage structure but drops the best-edge caching:
dual deltas are recomputed by direct scans over the dense weight matrix,
which keeps the bookkeeping simple at the same O(n^2) per substage.

The kernel is numba-compiled and callable from other jitted code, since
the decoder runs one small matching per sampled shot.
"""

from __future__ import annotations

import numpy as np
from numba import njit

NONE = -1


@njit(cache=True)
def _mwm_dense(wmat: np.ndarray, maxcardinality: bool) -> np.ndarray:
    """Maximum-weight matching of the complete graph with weights wmat.

    Returns mate[v] = partner vertex or -1.  With maxcardinality=True the
    matching has maximum size, and maximum weight among those.
    """
    n = wmat.shape[0]
    mate = np.full(n, NONE, dtype=np.int64)
    if n == 0:
        return mate
    nb = 2 * n

    maxweight = 0.0
    for i in range(n):
        for j in range(n):
            if i != j and wmat[i, j] > maxweight:
                maxweight = wmat[i, j]

    # Vertex duals start at maxweight; nontrivial blossom duals at zero.
    dualvar = np.full(n, maxweight, dtype=np.float64)
    blossomdual = np.zeros(nb, dtype=np.float64)

    # Blossom ids: 0..n-1 trivial (the vertices), n..2n-1 allocatable slots.
    label = np.zeros(nb, dtype=np.int64)  # 0 free, 1 S, 2 T (bit 4 marks scans)
    labeledge_u = np.full(nb, NONE, dtype=np.int64)  # vertex outside the blossom
    labeledge_v = np.full(nb, NONE, dtype=np.int64)  # vertex inside
    inblossom = np.arange(n, dtype=np.int64)
    blossomparent = np.full(nb, NONE, dtype=np.int64)
    blossombase = np.empty(nb, dtype=np.int64)
    for v in range(n):
        blossombase[v] = v

    slot_used = np.zeros(n, dtype=np.uint8)
    free_stack = np.empty(n, dtype=np.int64)
    for s in range(n):
        free_stack[s] = n - 1 - s
    free_top = np.full(1, n, dtype=np.int64)

    # Blossom cycles: childs[s, i] and the cycle edge childs[i] -> childs[i+1]
    # as vertex pair (cedge_u, cedge_v)[s, i].
    nchilds = np.zeros(n, dtype=np.int64)
    childs = np.zeros((n, n + 1), dtype=np.int64)
    cedge_u = np.zeros((n, n + 1), dtype=np.int64)
    cedge_v = np.zeros((n, n + 1), dtype=np.int64)

    allowedge = np.zeros((n, n), dtype=np.uint8)
    queue = np.empty(4 * n * n + 64, dtype=np.int64)
    qtop = np.zeros(1, dtype=np.int64)

    # Scratch buffers shared by the helpers below; none of the uses overlap.
    leafbuf = np.empty(n, dtype=np.int64)
    lstack = np.empty(nb, dtype=np.int64)
    pathbuf = np.empty(nb, dtype=np.int64)
    tmp_child = np.empty(n + 1, dtype=np.int64)
    tmp_eu = np.empty(n + 1, dtype=np.int64)
    tmp_ev = np.empty(n + 1, dtype=np.int64)
    task_b = np.empty(2 * nb + 8, dtype=np.int64)
    task_v = np.empty(2 * nb + 8, dtype=np.int64)
    estack = np.empty(nb, dtype=np.int64)

    def slackf(i, j):
        return dualvar[i] + dualvar[j] - 2.0 * wmat[i, j]

    def leaves(b):
        # Fill leafbuf with the vertices under blossom b, return the count.
        if b < n:
            leafbuf[0] = b
            return 1
        sp = 0
        cnt = 0
        lstack[sp] = b
        sp += 1
        while sp > 0:
            sp -= 1
            t = lstack[sp]
            if t < n:
                leafbuf[cnt] = t
                cnt += 1
            else:
                s = t - n
                for i in range(nchilds[s]):
                    lstack[sp] = childs[s, i]
                    sp += 1
        return cnt

    def push_queue(v):
        if qtop[0] >= queue.shape[0]:
            raise RuntimeError("matching queue overflow")
        queue[qtop[0]] = v
        qtop[0] += 1

    def assign_label(v0, t0, u0):
        # Label vertex v0's top blossom; a T label immediately S-labels the
        # mate of its base (the tree grows by two levels at a time).
        v = v0
        t = t0
        u = u0
        while True:
            b = inblossom[v]
            label[v] = t
            label[b] = t
            if u == NONE:
                labeledge_u[v] = NONE
                labeledge_v[v] = NONE
                labeledge_u[b] = NONE
                labeledge_v[b] = NONE
            else:
                labeledge_u[v] = u
                labeledge_v[v] = v
                labeledge_u[b] = u
                labeledge_v[b] = v
            if t == 1:
                cnt = leaves(b)
                for i in range(cnt):
                    push_queue(leafbuf[i])
                return
            base = blossombase[b]
            u = base
            v = mate[base]
            t = 1

    def scan_blossom(v0, w0):
        # Walk up both alternating paths; return the common ancestor base
        # vertex, or NONE if the paths end in different trees.
        v = v0
        w = w0
        pcnt = 0
        base = NONE
        while v != NONE:
            b = inblossom[v]
            if label[b] & 4:
                base = blossombase[b]
                break
            pathbuf[pcnt] = b
            pcnt += 1
            label[b] = 5
            if labeledge_u[b] == NONE:
                v = NONE
            else:
                v = labeledge_u[b]
                b = inblossom[v]
                v = labeledge_u[b]
            if w != NONE:
                tt = v
                v = w
                w = tt
        for i in range(pcnt):
            label[pathbuf[i]] = 1
        return base

    def add_blossom(base, v0, w0):
        # Edge (v0, w0) joins two S-blossoms whose paths meet at base:
        # shrink the whole odd cycle into a new S-blossom.
        bb = inblossom[base]
        v = v0
        w = w0
        bv = inblossom[v]
        bw = inblossom[w]
        free_top[0] -= 1
        s = free_stack[free_top[0]]
        slot_used[s] = 1
        b = n + s
        blossombase[b] = base
        blossomparent[b] = NONE
        blossomparent[bb] = b
        # Trace from v's side back to base.
        cntv = 0
        while bv != bb:
            blossomparent[bv] = b
            tmp_child[cntv] = bv
            tmp_eu[cntv] = labeledge_u[bv]
            tmp_ev[cntv] = labeledge_v[bv]
            cntv += 1
            v = labeledge_u[bv]
            bv = inblossom[v]
        # childs = [bb] + reversed(v-side); cycle edges oriented
        # childs[i] -> childs[i+1], closing with (v0, w0).
        childs[s, 0] = bb
        for i in range(cntv):
            childs[s, 1 + i] = tmp_child[cntv - 1 - i]
            cedge_u[s, i] = tmp_eu[cntv - 1 - i]
            cedge_v[s, i] = tmp_ev[cntv - 1 - i]
        cedge_u[s, cntv] = v0
        cedge_v[s, cntv] = w0
        nch = cntv + 1
        # Trace from w's side back to base, appending with edges reversed.
        while bw != bb:
            blossomparent[bw] = b
            childs[s, nch] = bw
            cedge_u[s, nch] = labeledge_v[bw]
            cedge_v[s, nch] = labeledge_u[bw]
            nch += 1
            w = labeledge_u[bw]
            bw = inblossom[w]
        nchilds[s] = nch
        label[b] = 1
        labeledge_u[b] = labeledge_u[bb]
        labeledge_v[b] = labeledge_v[bb]
        blossomdual[b] = 0.0
        cnt = leaves(b)
        for i in range(cnt):
            vv = leafbuf[i]
            if label[inblossom[vv]] == 2:
                # Former T-vertex becomes S inside the new blossom.
                push_queue(vv)
            inblossom[vv] = b

    def expand_stage(b):
        # Expand a T-blossom whose dual reached zero, mid-stage: children
        # become top-level and the path through the cycle is relabeled.
        s = b - n
        nch = nchilds[s]
        for i in range(nch):
            c = childs[s, i]
            blossomparent[c] = NONE
            if c < n:
                inblossom[c] = c
            else:
                cnt = leaves(c)
                for k in range(cnt):
                    inblossom[leafbuf[k]] = c
        if label[b] == 2:
            entrychild = inblossom[labeledge_v[b]]
            j = 0
            for i in range(nch):
                if childs[s, i] == entrychild:
                    j = i
                    break
            if j & 1:
                j -= nch
                jstep = 1
            else:
                jstep = -1
            v = labeledge_u[b]
            w = labeledge_v[b]
            while j != 0:
                # Relabel the T-sub-blossom we are leaving.
                if jstep == 1:
                    p = cedge_u[s, j % nch]
                    q = cedge_v[s, j % nch]
                else:
                    q = cedge_u[s, (j - 1) % nch]
                    p = cedge_v[s, (j - 1) % nch]
                label[w] = 0
                label[q] = 0
                assign_label(w, 2, v)
                allowedge[p, q] = 1
                allowedge[q, p] = 1
                j += jstep
                if jstep == 1:
                    v = cedge_u[s, j % nch]
                    w = cedge_v[s, j % nch]
                else:
                    w = cedge_u[s, (j - 1) % nch]
                    v = cedge_v[s, (j - 1) % nch]
                allowedge[v, w] = 1
                allowedge[w, v] = 1
                j += jstep
            # Base child keeps the T label without growing through it.
            bw_child = childs[s, j % nch]
            label[w] = 2
            label[bw_child] = 2
            labeledge_u[w] = v
            labeledge_v[w] = w
            labeledge_u[bw_child] = v
            labeledge_v[bw_child] = w
            j += jstep
            while childs[s, j % nch] != entrychild:
                # Sub-blossoms on the other side get T labels only if some
                # vertex of theirs was individually reached.
                bv2 = childs[s, j % nch]
                if label[bv2] == 1:
                    j += jstep
                    continue
                cnt = leaves(bv2)
                found = NONE
                for k in range(cnt):
                    if label[leafbuf[k]] != 0:
                        found = leafbuf[k]
                        break
                if found != NONE:
                    label[found] = 0
                    label[mate[blossombase[bv2]]] = 0
                    assign_label(found, 2, labeledge_u[found])
                j += jstep
        label[b] = 0
        labeledge_u[b] = NONE
        labeledge_v[b] = NONE
        blossomparent[b] = NONE
        blossomdual[b] = 0.0
        slot_used[s] = 0
        free_stack[free_top[0]] = s
        free_top[0] += 1

    def expand_end(b0):
        # End-of-stage expansion of zero-dual S-blossoms, recursively into
        # zero-dual children; purely structural, no relabeling.
        sp = 0
        estack[sp] = b0
        sp += 1
        while sp > 0:
            sp -= 1
            b = estack[sp]
            s = b - n
            for i in range(nchilds[s]):
                c = childs[s, i]
                blossomparent[c] = NONE
                if c < n:
                    inblossom[c] = c
                elif blossomdual[c] == 0.0:
                    estack[sp] = c
                    sp += 1
                else:
                    cnt = leaves(c)
                    for k in range(cnt):
                        inblossom[leafbuf[k]] = c
            label[b] = 0
            labeledge_u[b] = NONE
            labeledge_v[b] = NONE
            blossomparent[b] = NONE
            blossomdual[b] = 0.0
            slot_used[s] = 0
            free_stack[free_top[0]] = s
            free_top[0] += 1

    def augment_blossom(b0, v0):
        # Promote v0 to the base of blossom b0, flipping matched edges along
        # the even path of the cycle; explicit work stack in place of the
        # recursion into sub-blossoms.
        tp = 0
        task_b[tp] = b0
        task_v[tp] = v0
        tp += 1
        while tp > 0:
            tp -= 1
            b = task_b[tp]
            v = task_v[tp]
            s = b - n
            nch = nchilds[s]
            t = v
            while blossomparent[t] != b:
                t = blossomparent[t]
            if t >= n:
                task_b[tp] = t
                task_v[tp] = v
                tp += 1
            i = 0
            for k in range(nch):
                if childs[s, k] == t:
                    i = k
                    break
            j = i
            if i & 1:
                j -= nch
                jstep = 1
            else:
                jstep = -1
            while j != 0:
                j += jstep
                t2 = childs[s, j % nch]
                if jstep == 1:
                    w = cedge_u[s, j % nch]
                    x = cedge_v[s, j % nch]
                else:
                    x = cedge_u[s, (j - 1) % nch]
                    w = cedge_v[s, (j - 1) % nch]
                if t2 >= n:
                    task_b[tp] = t2
                    task_v[tp] = w
                    tp += 1
                j += jstep
                t3 = childs[s, j % nch]
                if t3 >= n:
                    task_b[tp] = t3
                    task_v[tp] = x
                    tp += 1
                mate[w] = x
                mate[x] = w
            if i > 0:
                # Rotate the cycle so the new base child comes first.
                for k in range(nch):
                    tmp_child[k] = childs[s, (i + k) % nch]
                    tmp_eu[k] = cedge_u[s, (i + k) % nch]
                    tmp_ev[k] = cedge_v[s, (i + k) % nch]
                for k in range(nch):
                    childs[s, k] = tmp_child[k]
                    cedge_u[s, k] = tmp_eu[k]
                    cedge_v[s, k] = tmp_ev[k]
            # v ends up as the base of b (and, by induction, of the chain of
            # sub-blossoms containing it, whose tasks may still be pending;
            # setting it directly keeps the deferred task order immaterial).
            blossombase[b] = v

    def augment_matching(v0, w0):
        # Flip matched/unmatched edges along both tree paths from the
        # newly tight edge (v0, w0) down to the tree roots.
        for side in range(2):
            if side == 0:
                s_ = v0
                j_ = w0
            else:
                s_ = w0
                j_ = v0
            while True:
                bs = inblossom[s_]
                if bs >= n:
                    augment_blossom(bs, s_)
                mate[s_] = j_
                if labeledge_u[bs] == NONE:
                    break
                t = labeledge_u[bs]
                bt = inblossom[t]
                s_ = labeledge_u[bt]
                j_ = labeledge_v[bt]
                if bt >= n:
                    augment_blossom(bt, j_)
                mate[j_] = s_

    for _stage in range(n):
        for i in range(nb):
            label[i] = 0
            labeledge_u[i] = NONE
            labeledge_v[i] = NONE
        for i in range(n):
            for j in range(n):
                allowedge[i, j] = 0
        qtop[0] = 0
        for v in range(n):
            if mate[v] == NONE and label[inblossom[v]] == 0:
                assign_label(v, 1, NONE)
        augmented = False
        while True:
            while qtop[0] > 0 and not augmented:
                qtop[0] -= 1
                v = queue[qtop[0]]
                for w in range(n):
                    if w == v:
                        continue
                    bv = inblossom[v]
                    bw = inblossom[w]
                    if bv == bw:
                        continue
                    if allowedge[v, w] == 0:
                        kslack = slackf(v, w)
                        if kslack <= 0.0:
                            allowedge[v, w] = 1
                            allowedge[w, v] = 1
                    if allowedge[v, w] != 0:
                        lbw = label[bw]
                        if lbw == 0:
                            # Free blossom: becomes T (and its mate S).
                            assign_label(w, 2, v)
                        elif lbw == 1:
                            base = scan_blossom(v, w)
                            if base != NONE:
                                add_blossom(base, v, w)
                            else:
                                augment_matching(v, w)
                                augmented = True
                                break
                        elif label[w] == 0:
                            # Inside a T-blossom; remember how we reached it.
                            label[w] = 2
                            labeledge_u[w] = v
                            labeledge_v[w] = w
            if augmented:
                break

            # No more tight edges: compute the dual adjustment.
            deltatype = -1
            delta = 0.0
            delta_v = NONE
            delta_w = NONE
            delta_b = NONE
            if not maxcardinality:
                dmin = dualvar[0]
                for v in range(n):
                    if dualvar[v] < dmin:
                        dmin = dualvar[v]
                delta = dmin if dmin > 0.0 else 0.0
                deltatype = 1
            for v in range(n):
                bv = inblossom[v]
                if label[bv] != 1:
                    continue
                for w in range(n):
                    if w == v or inblossom[w] == bv:
                        continue
                    lw = label[inblossom[w]]
                    if lw == 0:
                        d = slackf(v, w)
                        if deltatype == -1 or d < delta:
                            delta = d
                            deltatype = 2
                            delta_v = v
                            delta_w = w
                    elif lw == 1 and w > v:
                        d = 0.5 * slackf(v, w)
                        if deltatype == -1 or d < delta:
                            delta = d
                            deltatype = 3
                            delta_v = v
                            delta_w = w
            for s in range(n):
                if slot_used[s] != 0:
                    b = n + s
                    if blossomparent[b] == NONE and label[b] == 2:
                        if deltatype == -1 or blossomdual[b] < delta:
                            delta = blossomdual[b]
                            deltatype = 4
                            delta_b = b
            if deltatype == -1:
                # No improvement possible: maximum cardinality reached.
                deltatype = 1
                dmin = dualvar[0]
                for v in range(n):
                    if dualvar[v] < dmin:
                        dmin = dualvar[v]
                delta = dmin if dmin > 0.0 else 0.0

            for v in range(n):
                lv = label[inblossom[v]]
                if lv == 1:
                    dualvar[v] -= delta
                elif lv == 2:
                    dualvar[v] += delta
            for s in range(n):
                if slot_used[s] != 0:
                    b = n + s
                    if blossomparent[b] == NONE:
                        if label[b] == 1:
                            blossomdual[b] += delta
                        elif label[b] == 2:
                            blossomdual[b] -= delta

            if deltatype == 1:
                break
            elif deltatype == 2:
                allowedge[delta_v, delta_w] = 1
                allowedge[delta_w, delta_v] = 1
                push_queue(delta_v)
            elif deltatype == 3:
                allowedge[delta_v, delta_w] = 1
                allowedge[delta_w, delta_v] = 1
                push_queue(delta_v)
            else:
                expand_stage(delta_b)
        if not augmented:
            break
        for s in range(n):
            if slot_used[s] != 0:
                b = n + s
                if blossomparent[b] == NONE and label[b] == 1 and blossomdual[b] == 0.0:
                    expand_end(b)
    return mate


def max_weight_matching(weights: np.ndarray, maxcardinality: bool = False) -> np.ndarray:
    """Matching maximizing total weight; mate[v] = partner or -1."""
    w = np.ascontiguousarray(weights, dtype=np.float64)
    if w.ndim != 2 or w.shape[0] != w.shape[1]:
        raise ValueError("weights must be a square matrix")
    return _mwm_dense(w, maxcardinality)


def min_weight_perfect_matching(cost: np.ndarray) -> np.ndarray:
    """Perfect matching minimizing total cost on a complete even-order graph.

    Reduces to maximum-weight maximum-cardinality matching of the
    complement weights; on a complete graph the result is perfect.
    """
    c = np.ascontiguousarray(cost, dtype=np.float64)
    if c.ndim != 2 or c.shape[0] != c.shape[1]:
        raise ValueError("cost must be a square matrix")
    n = c.shape[0]
    if n % 2 != 0:
        raise ValueError("perfect matching needs an even number of vertices")
    if n == 0:
        return np.empty(0, dtype=np.int64)
    if not np.all(np.isfinite(c)):
        raise ValueError("cost matrix must be finite")
    w = (c.max() + 1.0) - c
    np.fill_diagonal(w, 0.0)
    mate = _mwm_dense(w, True)
    if np.any(mate < 0):
        raise RuntimeError("failed to find a perfect matching")
    return mate


def matching_weight(weights: np.ndarray, mate: np.ndarray) -> float:
    """Total weight of the matched pairs."""
    total = 0.0
    for v, w in enumerate(mate):
        if w > v:
            total += weights[v, w]
    return float(total)
