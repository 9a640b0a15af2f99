"""Pure numpy kernels; the reference semantics for _ckernels."""

import numpy as np


def total_specified(masks):
    return int(np.bitwise_count(masks).sum(dtype=np.int64))


def packed_raw(values, masks, query):
    agree = np.bitwise_count(~(values ^ query) & masks).sum(dtype=np.int64)
    return int(2 * agree - total_specified(masks))


def packed_raw_many(values, masks, queries):
    specified = total_specified(masks)
    out = np.empty(queries.shape[0], dtype=np.int64)
    for i, query in enumerate(queries):
        agree = np.bitwise_count(~(values ^ query) & masks).sum(dtype=np.int64)
        out[i] = 2 * agree - specified
    return out


def local_search(pos, val, start, max_iters, max_sideways):
    n, k = pos.shape
    m = start.shape[0]
    y = np.array(start, dtype=np.uint8, copy=True)
    agree = (y[pos] == val).sum(axis=1)
    count = int((agree == k).sum())
    trace = [count]
    sideways = 0
    last = -1
    rows = np.arange(n)
    for _ in range(max_iters):
        if count == 0:
            break
        full = agree == k
        near = agree == k - 1
        delta = -np.bincount(pos[full].ravel(), minlength=m)
        if near.any():
            # the single disagreeing slot of each near-matched entry
            slot = np.argmax(y[pos[near]] != val[near], axis=1)
            delta += np.bincount(pos[near][rows[: slot.size], slot], minlength=m)
        best = int(np.argmin(delta))
        if delta[best] < 0:
            sideways = 0
        else:
            if delta[best] > 0 or sideways >= max_sideways:
                break
            flat = np.flatnonzero(delta == 0)
            flat = flat[flat != last]
            if flat.size == 0:
                break
            best = int(flat[0])
            sideways += 1
        y[best] ^= 1
        touched = np.any(pos == best, axis=1)
        agree[touched] = (y[pos[touched]] == val[touched]).sum(axis=1)
        count = int((agree == k).sum())
        last = best
        trace.append(count)
    return y, count, len(trace) - 1, np.array(trace, dtype=np.int64)
