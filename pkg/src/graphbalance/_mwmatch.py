"""Exact minimum-weight perfect matching on complete graphs.

The solver is the classic O(n^3) primal-dual blossom method for
maximum-weight matching, implemented over flat ``int64`` arrays so the whole
state machine JIT-compiles with numba.  Vertices are ``0..n-1`` and blossoms
``n..2n-1``; matched partners, labels, tree back-links, blossom structure and
dual variables all live in preallocated arrays.  Edge ``k`` has directed
"endpoint" slots ``2k`` and ``2k+1`` (the classic encoding), so ``p ^ 1`` is
the opposite end of the edge containing endpoint ``p``.

Minimum-weight *perfect* matching is reduced to maximum-weight matching by
scaling distances to integers and flipping them: with ``w' = max(w)+1-w`` all
edge weights are at least 1, so on a complete graph of even order every
maximum-weight matching is perfect (two exposed vertices always admit a
weight-increasing edge), and maximizing ``sum(w')`` minimizes ``sum(w)``.
Integer weights keep every dual variable and slack exact.

Recursions of the textbook formulation are converted to explicit stacks:

* blossom expansion recurses only during the end-of-stage sweep, where the
  expansion of one blossom is independent of the others, so a simple worklist
  suffices;
* path augmentation through nested blossoms uses frames ``(b, v)`` that each
  end by setting ``blossombase[b] = v`` (the classic invariant), making the
  frames order-independent.
"""

from __future__ import annotations

import numpy as np
from numba import njit

from .errors import ValidationError

__all__ = ["min_weight_perfect_matching"]

_NOEDGE = np.int64(-1)


@njit(cache=True)
def _pair_index(u, v, n):
    """Index of edge {u, v} in row-major upper-triangle order."""
    if u > v:
        u, v = v, u
    return u * (n - 1) - (u * (u - 1)) // 2 + (v - u - 1)


@njit(cache=True)
def _slack(k, edge_i, edge_j, edge_w, dualvar):
    return dualvar[edge_i[k]] + dualvar[edge_j[k]] - 2 * edge_w[k]


@njit(cache=True)
def _collect_leaves(b, nvertex, childs, nchilds, dfs_stack, out):
    """Write the vertices contained in blossom/vertex ``b`` into ``out``."""
    if b < nvertex:
        out[0] = b
        return 1
    sp = 0
    cnt = 0
    dfs_stack[sp] = b
    sp += 1
    while sp > 0:
        sp -= 1
        x = dfs_stack[sp]
        if x < nvertex:
            out[cnt] = x
            cnt += 1
        else:
            row = x - nvertex
            for ci in range(nchilds[row] - 1, -1, -1):
                dfs_stack[sp] = childs[row, ci]
                sp += 1
    return cnt


@njit(cache=True)
def _assign_label(
    w, t, p, qlen,
    nvertex, endpoint, mate, label, labelend, bestedge, inblossom,
    blossombase, childs, nchilds, queue, dfs_stack, leaves_buf,
):
    """Label vertex ``w``'s blossom with S (t=1) or T (t=2); returns queue len.

    A T label immediately propagates an S label to the mate of the blossom
    base (depth-2 recursion of the textbook code, unrolled into a loop).
    """
    while True:
        b = inblossom[w]
        label[w] = t
        label[b] = t
        labelend[w] = p
        labelend[b] = p
        bestedge[w] = -1
        bestedge[b] = -1
        if t == 1:
            cnt = _collect_leaves(b, nvertex, childs, nchilds, dfs_stack, leaves_buf)
            if qlen + cnt > queue.shape[0]:
                raise RuntimeError("matching queue overflow")
            for li in range(cnt):
                queue[qlen] = leaves_buf[li]
                qlen += 1
            return qlen
        # t == 2: continue by S-labeling the mate of the blossom base.
        base = blossombase[b]
        mp = mate[base]
        w = endpoint[mp]
        p = mp ^ 1
        t = 1


@njit(cache=True)
def _scan_blossom(
    v, w,
    inblossom, label, labelend, blossombase, endpoint, path_scratch,
):
    """Trace back from S-vertices v and w; return common ancestor base or -1."""
    npath = 0
    base = np.int64(-1)
    while v != -1 or w != -1:
        b = inblossom[v]
        if label[b] & 4:
            base = blossombase[b]
            break
        path_scratch[npath] = b
        npath += 1
        label[b] = 5
        if labelend[b] == -1:
            v = np.int64(-1)
        else:
            v = endpoint[labelend[b]]
            b = inblossom[v]
            v = endpoint[labelend[b]]
        if w != -1:
            tmp = v
            v = w
            w = tmp
    for i in range(npath):
        label[path_scratch[i]] = 1
    return base


@njit(cache=True)
def _add_blossom(
    base, k, qlen, unused_ptr,
    nvertex, edge_i, edge_j, edge_w, endpoint, dualvar,
    mate, label, labelend, bestedge, inblossom, blossomparent, blossombase,
    childs, nchilds, endps, bbe, nbeste, unusedblossoms,
    queue, dfs_stack, leaves_buf, path_tmp, endps_tmp, bestedgeto, touched,
):
    """Contract the odd cycle through edge k with common base into a blossom."""
    v = edge_i[k]
    w = edge_j[k]
    bb = inblossom[base]
    unused_ptr -= 1
    b = unusedblossoms[unused_ptr]
    row = b - nvertex
    blossombase[b] = base
    blossomparent[b] = -1
    blossomparent[bb] = b
    # Trace from v back to the base, recording sub-blossoms and linking edges.
    nv_side = 0
    bcur = inblossom[v]
    while bcur != bb:
        blossomparent[bcur] = b
        path_tmp[nv_side] = bcur
        endps_tmp[nv_side] = labelend[bcur]
        nv_side += 1
        vv = endpoint[labelend[bcur]]
        bcur = inblossom[vv]
    # childs = [bb] + reversed(v-side); endps aligned so that
    # endpoint[endps[i]] lies in childs[i].
    childs[row, 0] = bb
    for i in range(nv_side):
        childs[row, 1 + i] = path_tmp[nv_side - 1 - i]
        endps[row, i] = endps_tmp[nv_side - 1 - i]
    endps[row, nv_side] = 2 * k
    count = nv_side + 1
    bcur = inblossom[w]
    while bcur != bb:
        blossomparent[bcur] = b
        childs[row, count] = bcur
        endps[row, count] = labelend[bcur] ^ 1
        count += 1
        vv = endpoint[labelend[bcur]]
        bcur = inblossom[vv]
    nchilds[row] = count
    label[b] = 1
    labelend[b] = labelend[bb]
    dualvar[b] = 0
    # Relabel member vertices; former T-vertices become S and join the queue.
    cnt = _collect_leaves(b, nvertex, childs, nchilds, dfs_stack, leaves_buf)
    for li in range(cnt):
        vv = leaves_buf[li]
        if label[inblossom[vv]] == 2:
            if qlen >= queue.shape[0]:
                raise RuntimeError("matching queue overflow")
            queue[qlen] = vv
            qlen += 1
        inblossom[vv] = b
    # Merge least-slack edges toward other top-level S-blossoms.
    ntouched = 0
    for ci in range(count):
        bv = childs[row, ci]
        use_list = False
        if bv >= nvertex:
            if nbeste[bv - nvertex] >= 0:
                use_list = True
        if use_list:
            row_v = bv - nvertex
            for ei in range(nbeste[row_v]):
                kk = bbe[row_v, ei]
                jj = edge_j[kk]
                if inblossom[jj] == b:
                    jj = edge_i[kk]
                bj = inblossom[jj]
                if bj != b and label[bj] == 1:
                    old = bestedgeto[bj]
                    if old == -1:
                        touched[ntouched] = bj
                        ntouched += 1
                        bestedgeto[bj] = kk
                    elif _slack(kk, edge_i, edge_j, edge_w, dualvar) < _slack(
                        old, edge_i, edge_j, edge_w, dualvar
                    ):
                        bestedgeto[bj] = kk
            nbeste[row_v] = -1
        else:
            lcnt = _collect_leaves(bv, nvertex, childs, nchilds, dfs_stack, leaves_buf)
            for li in range(lcnt):
                vv = leaves_buf[li]
                for uu in range(nvertex):
                    if uu == vv:
                        continue
                    bj = inblossom[uu]
                    if bj != b and label[bj] == 1:
                        kk = _pair_index(vv, uu, nvertex)
                        old = bestedgeto[bj]
                        if old == -1:
                            touched[ntouched] = bj
                            ntouched += 1
                            bestedgeto[bj] = kk
                        elif _slack(kk, edge_i, edge_j, edge_w, dualvar) < _slack(
                            old, edge_i, edge_j, edge_w, dualvar
                        ):
                            bestedgeto[bj] = kk
        bestedge[bv] = -1
    cnt_b = 0
    best = np.int64(-1)
    best_sl = np.int64(0)
    for ti in range(ntouched):
        bj = touched[ti]
        kk = bestedgeto[bj]
        bestedgeto[bj] = -1
        if kk != -1:
            bbe[row, cnt_b] = kk
            cnt_b += 1
            sl = _slack(kk, edge_i, edge_j, edge_w, dualvar)
            if best == -1 or sl < best_sl:
                best = kk
                best_sl = sl
    nbeste[row] = cnt_b
    bestedge[b] = best
    return qlen, unused_ptr


@njit(cache=True)
def _expand_blossom(
    b, endstage, qlen, unused_ptr,
    nvertex, endpoint, mate, label, labelend, bestedge, inblossom,
    blossomparent, blossombase, childs, nchilds, endps, nbeste,
    dualvar, allowedge, unusedblossoms, queue, dfs_stack, leaves_buf,
    expand_stack,
):
    """Dissolve top-level blossom ``b``; recycle its identifier."""
    sp = 0
    expand_stack[sp] = b
    sp += 1
    while sp > 0:
        sp -= 1
        b = expand_stack[sp]
        row = b - nvertex
        nch = nchilds[row]
        for ci in range(nch):
            s = childs[row, ci]
            blossomparent[s] = -1
            if s < nvertex:
                inblossom[s] = s
            elif endstage and dualvar[s] == 0:
                expand_stack[sp] = s
                sp += 1
            else:
                cnt = _collect_leaves(s, nvertex, childs, nchilds, dfs_stack, leaves_buf)
                for li in range(cnt):
                    inblossom[leaves_buf[li]] = s
        if (not endstage) and label[b] == 2:
            # Mid-stage expansion of a T-blossom: relabel the even-length
            # path from the entry sub-blossom to the base, and mark every
            # other reachable sub-blossom as T.
            entrychild = inblossom[endpoint[labelend[b] ^ 1]]
            j = np.int64(0)
            for ci in range(nch):
                if childs[row, ci] == entrychild:
                    j = np.int64(ci)
                    break
            if j & 1:
                j -= nch
                jstep = np.int64(1)
                endptrick = np.int64(0)
            else:
                jstep = np.int64(-1)
                endptrick = np.int64(1)
            p = labelend[b]
            while j != 0:
                label[endpoint[p ^ 1]] = 0
                label[endpoint[endps[row, (j - endptrick) % nch] ^ endptrick ^ 1]] = 0
                qlen = _assign_label(
                    endpoint[p ^ 1], 2, p, qlen,
                    nvertex, endpoint, mate, label, labelend, bestedge,
                    inblossom, blossombase, childs, nchilds, queue,
                    dfs_stack, leaves_buf,
                )
                allowedge[endps[row, (j - endptrick) % nch] // 2] = True
                j += jstep
                p = endps[row, (j - endptrick) % nch] ^ endptrick
                allowedge[p // 2] = True
                j += jstep
            bv = childs[row, 0]
            label[endpoint[p ^ 1]] = 2
            label[bv] = 2
            labelend[endpoint[p ^ 1]] = p
            labelend[bv] = p
            bestedge[bv] = -1
            j += jstep
            while childs[row, j % nch] != entrychild:
                bv = childs[row, j % nch]
                if label[bv] == 1:
                    j += jstep
                    continue
                cnt = _collect_leaves(bv, nvertex, childs, nchilds, dfs_stack, leaves_buf)
                vfound = np.int64(-1)
                for li in range(cnt):
                    if label[leaves_buf[li]] != 0:
                        vfound = leaves_buf[li]
                        break
                if vfound >= 0:
                    label[vfound] = 0
                    label[endpoint[mate[blossombase[bv]]]] = 0
                    qlen = _assign_label(
                        vfound, 2, labelend[vfound], qlen,
                        nvertex, endpoint, mate, label, labelend, bestedge,
                        inblossom, blossombase, childs, nchilds, queue,
                        dfs_stack, leaves_buf,
                    )
                j += jstep
        # Recycle the blossom identifier.
        label[b] = 0
        labelend[b] = -1
        bestedge[b] = -1
        blossombase[b] = -1
        nbeste[row] = -1
        nchilds[row] = 0
        unusedblossoms[unused_ptr] = b
        unused_ptr += 1
    return qlen, unused_ptr


@njit(cache=True)
def _augment_blossom(
    b, v,
    nvertex, endpoint, mate, blossomparent, blossombase,
    childs, nchilds, endps, frame_b, frame_v, rot_scratch,
):
    """Re-match the interior of blossom ``b`` so vertex ``v`` becomes its base."""
    sp = 0
    frame_b[sp] = b
    frame_v[sp] = v
    sp += 1
    while sp > 0:
        sp -= 1
        b = frame_b[sp]
        v = frame_v[sp]
        row = b - nvertex
        nch = nchilds[row]
        # Bubble up from v to the immediate sub-blossom t of b.
        t = v
        while blossomparent[t] != b:
            t = blossomparent[t]
        if t >= nvertex:
            frame_b[sp] = t
            frame_v[sp] = v
            sp += 1
        i = np.int64(0)
        for ci in range(nch):
            if childs[row, ci] == t:
                i = np.int64(ci)
                break
        j = i
        if i & 1:
            j -= nch
            jstep = np.int64(1)
            endptrick = np.int64(0)
        else:
            jstep = np.int64(-1)
            endptrick = np.int64(1)
        while j != 0:
            j += jstep
            tt = childs[row, j % nch]
            p = endps[row, (j - endptrick) % nch] ^ endptrick
            if tt >= nvertex:
                frame_b[sp] = tt
                frame_v[sp] = endpoint[p]
                sp += 1
            j += jstep
            tt = childs[row, j % nch]
            if tt >= nvertex:
                frame_b[sp] = tt
                frame_v[sp] = endpoint[p ^ 1]
                sp += 1
            mate[endpoint[p]] = p ^ 1
            mate[endpoint[p ^ 1]] = p
        # Rotate the child/edge lists so the entry sub-blossom comes first.
        if i > 0:
            for ci in range(nch):
                rot_scratch[ci] = childs[row, (i + ci) % nch]
            for ci in range(nch):
                childs[row, ci] = rot_scratch[ci]
            for ci in range(nch):
                rot_scratch[ci] = endps[row, (i + ci) % nch]
            for ci in range(nch):
                endps[row, ci] = rot_scratch[ci]
        blossombase[b] = v


@njit(cache=True)
def _augment_matching(
    k,
    nvertex, edge_i, edge_j, endpoint, mate, label, labelend, inblossom,
    blossomparent, blossombase, childs, nchilds, endps,
    frame_b, frame_v, rot_scratch,
):
    """Swap matched/unmatched edges along the augmenting path through edge k."""
    for side in range(2):
        if side == 0:
            s = edge_i[k]
            p = 2 * k + 1
        else:
            s = edge_j[k]
            p = 2 * k
        while True:
            bs = inblossom[s]
            if bs >= nvertex:
                _augment_blossom(
                    bs, s, nvertex, endpoint, mate, blossomparent,
                    blossombase, childs, nchilds, endps,
                    frame_b, frame_v, rot_scratch,
                )
            mate[s] = p
            if labelend[bs] == -1:
                break  # reached the root of this alternating tree
            t = endpoint[labelend[bs]]
            bt = inblossom[t]
            s = endpoint[labelend[bt]]
            jj = endpoint[labelend[bt] ^ 1]
            if bt >= nvertex:
                _augment_blossom(
                    bt, jj, nvertex, endpoint, mate, blossomparent,
                    blossombase, childs, nchilds, endps,
                    frame_b, frame_v, rot_scratch,
                )
            mate[jj] = labelend[bt]
            p = labelend[bt] ^ 1


@njit(cache=True)
def _max_weight_matching(nvertex, edge_i, edge_j, edge_w):
    """Maximum-weight matching over a complete graph with int64 weights.

    Returns the vertex-to-vertex mate array (-1 for unmatched).
    """
    nedge = edge_i.shape[0]
    maxweight = np.int64(0)
    for k in range(nedge):
        if edge_w[k] > maxweight:
            maxweight = edge_w[k]
    two_n = 2 * nvertex

    endpoint = np.empty(2 * nedge, dtype=np.int64)
    for k in range(nedge):
        endpoint[2 * k] = edge_i[k]
        endpoint[2 * k + 1] = edge_j[k]

    mate = np.full(nvertex, -1, dtype=np.int64)
    label = np.zeros(two_n, dtype=np.int64)
    labelend = np.full(two_n, -1, dtype=np.int64)
    inblossom = np.arange(nvertex, dtype=np.int64)
    blossomparent = np.full(two_n, -1, dtype=np.int64)
    blossombase = np.empty(two_n, dtype=np.int64)
    for v in range(nvertex):
        blossombase[v] = v
    for b in range(nvertex, two_n):
        blossombase[b] = -1
    bestedge = np.full(two_n, -1, dtype=np.int64)
    dualvar = np.empty(two_n, dtype=np.int64)
    for v in range(nvertex):
        dualvar[v] = maxweight
    for b in range(nvertex, two_n):
        dualvar[b] = 0
    allowedge = np.zeros(nedge, dtype=np.bool_)

    childs = np.full((nvertex, nvertex + 1), -1, dtype=np.int64)
    nchilds = np.zeros(nvertex, dtype=np.int64)
    endps = np.full((nvertex, nvertex + 1), -1, dtype=np.int64)
    bbe = np.full((nvertex, nvertex + 1), -1, dtype=np.int64)
    nbeste = np.full(nvertex, -1, dtype=np.int64)
    unusedblossoms = np.empty(nvertex, dtype=np.int64)
    for i in range(nvertex):
        unusedblossoms[i] = nvertex + i
    unused_ptr = nvertex

    qcap = 8 * nvertex + 16
    queue = np.empty(qcap, dtype=np.int64)
    qlen = 0
    dfs_stack = np.empty(two_n + 2, dtype=np.int64)
    leaves_buf = np.empty(nvertex, dtype=np.int64)
    path_scratch = np.empty(two_n, dtype=np.int64)
    path_tmp = np.empty(nvertex + 1, dtype=np.int64)
    endps_tmp = np.empty(nvertex + 1, dtype=np.int64)
    bestedgeto = np.full(two_n, -1, dtype=np.int64)
    touched = np.empty(two_n, dtype=np.int64)
    expand_stack = np.empty(nvertex + 1, dtype=np.int64)
    frame_b = np.empty(2 * nvertex + 2, dtype=np.int64)
    frame_v = np.empty(2 * nvertex + 2, dtype=np.int64)
    rot_scratch = np.empty(nvertex + 1, dtype=np.int64)

    for _stage in range(nvertex):
        for x in range(two_n):
            label[x] = 0
            labelend[x] = -1
            bestedge[x] = -1
        for r in range(nvertex):
            nbeste[r] = -1
        for k in range(nedge):
            allowedge[k] = False
        qlen = 0
        for v in range(nvertex):
            if mate[v] == -1 and label[inblossom[v]] == 0:
                qlen = _assign_label(
                    v, 1, -1, qlen,
                    nvertex, endpoint, mate, label, labelend, bestedge,
                    inblossom, blossombase, childs, nchilds, queue,
                    dfs_stack, leaves_buf,
                )
        augmented = False
        while True:
            while qlen > 0 and not augmented:
                qlen -= 1
                v = queue[qlen]
                for u in range(nvertex):
                    if u == v:
                        continue
                    if inblossom[v] == inblossom[u]:
                        continue
                    k = _pair_index(v, u, nvertex)
                    kslack = np.int64(0)
                    if not allowedge[k]:
                        kslack = _slack(k, edge_i, edge_j, edge_w, dualvar)
                        if kslack <= 0:
                            allowedge[k] = True
                    if allowedge[k]:
                        lbu = label[inblossom[u]]
                        if lbu == 0:
                            # u's blossom is free: label it T (and its mate S).
                            p_to_u = 2 * k + 1 if edge_i[k] == v else 2 * k
                            qlen = _assign_label(
                                u, 2, p_to_u ^ 1, qlen,
                                nvertex, endpoint, mate, label, labelend,
                                bestedge, inblossom, blossombase, childs,
                                nchilds, queue, dfs_stack, leaves_buf,
                            )
                        elif lbu == 1:
                            base = _scan_blossom(
                                v, u, inblossom, label, labelend,
                                blossombase, endpoint, path_scratch,
                            )
                            if base >= 0:
                                qlen, unused_ptr = _add_blossom(
                                    base, k, qlen, unused_ptr,
                                    nvertex, edge_i, edge_j, edge_w, endpoint,
                                    dualvar, mate, label, labelend, bestedge,
                                    inblossom, blossomparent, blossombase,
                                    childs, nchilds, endps, bbe, nbeste,
                                    unusedblossoms, queue, dfs_stack,
                                    leaves_buf, path_tmp, endps_tmp,
                                    bestedgeto, touched,
                                )
                            else:
                                _augment_matching(
                                    k, nvertex, edge_i, edge_j, endpoint,
                                    mate, label, labelend, inblossom,
                                    blossomparent, blossombase, childs,
                                    nchilds, endps, frame_b, frame_v,
                                    rot_scratch,
                                )
                                augmented = True
                                break
                        elif label[u] == 0:
                            # u sits inside a T-blossom but is itself
                            # unreached; record how it was reached.
                            label[u] = 2
                            p_to_u = 2 * k + 1 if edge_i[k] == v else 2 * k
                            labelend[u] = p_to_u ^ 1
                    elif label[inblossom[u]] == 1:
                        bv = inblossom[v]
                        if bestedge[bv] == -1 or kslack < _slack(
                            bestedge[bv], edge_i, edge_j, edge_w, dualvar
                        ):
                            bestedge[bv] = k
                    elif label[u] == 0:
                        if bestedge[u] == -1 or kslack < _slack(
                            bestedge[u], edge_i, edge_j, edge_w, dualvar
                        ):
                            bestedge[u] = k
            if augmented:
                break
            # No augmenting path: compute the dual adjustment.
            deltatype = 1
            delta = dualvar[0]
            for v in range(1, nvertex):
                if dualvar[v] < delta:
                    delta = dualvar[v]
            deltaedge = np.int64(-1)
            deltablossom = np.int64(-1)
            for v in range(nvertex):
                if label[inblossom[v]] == 0 and bestedge[v] != -1:
                    d = _slack(bestedge[v], edge_i, edge_j, edge_w, dualvar)
                    if d < delta:
                        delta = d
                        deltatype = 2
                        deltaedge = bestedge[v]
            for b in range(two_n):
                if (
                    blossomparent[b] == -1
                    and label[b] == 1
                    and bestedge[b] != -1
                ):
                    kslack = _slack(bestedge[b], edge_i, edge_j, edge_w, dualvar)
                    if kslack % 2 != 0:
                        raise RuntimeError("odd slack between S-blossoms")
                    d = kslack // 2
                    if d < delta:
                        delta = d
                        deltatype = 3
                        deltaedge = bestedge[b]
            for b in range(nvertex, two_n):
                if (
                    blossombase[b] >= 0
                    and blossomparent[b] == -1
                    and label[b] == 2
                    and dualvar[b] < delta
                ):
                    delta = dualvar[b]
                    deltatype = 4
                    deltablossom = b
            # Apply the adjustment to all dual variables.
            for v in range(nvertex):
                lb = label[inblossom[v]]
                if lb == 1:
                    dualvar[v] -= delta
                elif lb == 2:
                    dualvar[v] += delta
            for b in range(nvertex, two_n):
                if blossombase[b] >= 0 and blossomparent[b] == -1:
                    if label[b] == 1:
                        dualvar[b] += delta
                    elif label[b] == 2:
                        dualvar[b] -= delta
            if deltatype == 1:
                break  # optimum reached
            elif deltatype == 2:
                allowedge[deltaedge] = True
                v = edge_i[deltaedge]
                if label[inblossom[v]] == 0:
                    v = edge_j[deltaedge]
                if qlen >= qcap:
                    raise RuntimeError("matching queue overflow")
                queue[qlen] = v
                qlen += 1
            elif deltatype == 3:
                allowedge[deltaedge] = True
                if qlen >= qcap:
                    raise RuntimeError("matching queue overflow")
                queue[qlen] = edge_i[deltaedge]
                qlen += 1
            else:
                qlen, unused_ptr = _expand_blossom(
                    deltablossom, False, qlen, unused_ptr,
                    nvertex, endpoint, mate, label, labelend, bestedge,
                    inblossom, blossomparent, blossombase, childs, nchilds,
                    endps, nbeste, dualvar, allowedge, unusedblossoms,
                    queue, dfs_stack, leaves_buf, expand_stack,
                )
        if not augmented:
            break
        # End of stage: dissolve S-blossoms whose dual fell to zero.
        for b in range(nvertex, two_n):
            if (
                blossombase[b] >= 0
                and blossomparent[b] == -1
                and label[b] == 1
                and dualvar[b] == 0
            ):
                qlen, unused_ptr = _expand_blossom(
                    b, True, qlen, unused_ptr,
                    nvertex, endpoint, mate, label, labelend, bestedge,
                    inblossom, blossomparent, blossombase, childs, nchilds,
                    endps, nbeste, dualvar, allowedge, unusedblossoms,
                    queue, dfs_stack, leaves_buf, expand_stack,
                )
    out = np.full(nvertex, -1, dtype=np.int64)
    for v in range(nvertex):
        if mate[v] >= 0:
            out[v] = endpoint[mate[v]]
    return out


_WEIGHT_BITS = 46


def min_weight_perfect_matching(D: np.ndarray) -> tuple[np.ndarray, float]:
    """Exact minimum-weight perfect matching of an even-order complete graph.

    Parameters
    ----------
    D : ndarray, shape (n, n)
        Symmetric nonnegative distance matrix with zero diagonal; ``n`` even.

    Returns
    -------
    mate : ndarray of int, shape (n,)
        ``mate[i]`` is the partner of unit ``i``.
    total_weight : float
        Sum of ``D[i, mate[i]]`` over the ``n/2`` pairs.

    Notes
    -----
    Distances are scaled by ``2**46 / max(D)`` and rounded to integers before
    solving, so the optimum is exact for the quantized weights; the induced
    error on the returned total weight is below ``n * max(D) * 2**-46``,
    negligible against the 1e-9 tolerances used throughout.
    """
    D = np.asarray(D, dtype=np.float64)
    n = D.shape[0]
    if n % 2 != 0:
        raise ValidationError("perfect matching requires an even number of units")
    if n == 0:
        return np.empty(0, dtype=np.int64), 0.0
    iu, ju = np.triu_indices(n, k=1)
    dvals = D[iu, ju]
    maxd = float(dvals.max()) if dvals.size else 0.0
    scale = (2.0**_WEIGHT_BITS) / maxd if maxd > 0 else 1.0
    w_int = np.rint(dvals * scale).astype(np.int64)
    w_adj = (w_int.max() + 1) - w_int  # all >= 1: max-weight matching is perfect
    mate = _max_weight_matching(
        n, iu.astype(np.int64), ju.astype(np.int64), w_adj
    )
    if np.any(mate < 0) or np.any(mate[mate] != np.arange(n)):
        raise RuntimeError("matching solver returned an imperfect matching")
    total = float(D[np.arange(n), mate].sum() / 2.0)
    return mate, total
