"""Label-setting shortest-path kernels (numba and pure-Python backends).

Both backends implement identical semantics: binary-heap Dijkstra with lazy
deletion, heap ordered lexicographically by (distance, node id) so that equal
labels settle lowest-id-first, and predecessors updated only on strict
improvement.  Distances accumulate as ``dist[u] + weight[e]`` in settle
order, which is the arithmetic the path-cost helpers reproduce.

The numba version parallelizes over sources; results are identical to the
fallback bit for bit because every float operation matches.
"""

from __future__ import annotations

import heapq

import numpy as np

from ._backend import USE_NUMBA


def _dijkstra_python(indptr, adj_node, adj_edge, weights, source, dist, pred):
    n = indptr.size - 1
    dist[:] = np.inf
    pred[:] = -1
    settled = np.zeros(n, dtype=bool)
    dist[source] = 0.0
    heap = [(0.0, int(source))]
    while heap:
        d, u = heapq.heappop(heap)
        if settled[u]:
            continue
        settled[u] = True
        for k in range(indptr[u], indptr[u + 1]):
            v = int(adj_node[k])
            if settled[v]:
                continue
            nd = d + weights[adj_edge[k]]
            if nd < dist[v]:
                dist[v] = nd
                pred[v] = u
                heapq.heappush(heap, (nd, v))


def _multi_python(indptr, adj_node, adj_edge, weights, sources):
    n = indptr.size - 1
    s = sources.size
    dist = np.empty((s, n), dtype=np.float64)
    pred = np.empty((s, n), dtype=np.int32)
    for i in range(s):
        _dijkstra_python(
            indptr, adj_node, adj_edge, weights, int(sources[i]), dist[i], pred[i]
        )
    return dist, pred


if USE_NUMBA:
    import numba
    from numba import njit, prange

    @njit(cache=True)
    def _heap_less(d1, n1, d2, n2):
        return d1 < d2 or (d1 == d2 and n1 < n2)

    @njit(cache=True)
    def _heap_push(heap_d, heap_n, size, d, node):
        i = size
        heap_d[i] = d
        heap_n[i] = node
        while i > 0:
            parent = (i - 1) >> 1
            if _heap_less(heap_d[i], heap_n[i], heap_d[parent], heap_n[parent]):
                heap_d[i], heap_d[parent] = heap_d[parent], heap_d[i]
                heap_n[i], heap_n[parent] = heap_n[parent], heap_n[i]
                i = parent
            else:
                break
        return size + 1

    @njit(cache=True)
    def _heap_pop(heap_d, heap_n, size):
        top_d = heap_d[0]
        top_n = heap_n[0]
        size -= 1
        heap_d[0] = heap_d[size]
        heap_n[0] = heap_n[size]
        i = 0
        while True:
            left = 2 * i + 1
            if left >= size:
                break
            right = left + 1
            best = left
            if right < size and _heap_less(
                heap_d[right], heap_n[right], heap_d[left], heap_n[left]
            ):
                best = right
            if _heap_less(heap_d[best], heap_n[best], heap_d[i], heap_n[i]):
                heap_d[i], heap_d[best] = heap_d[best], heap_d[i]
                heap_n[i], heap_n[best] = heap_n[best], heap_n[i]
                i = best
            else:
                break
        return top_d, top_n, size

    @njit(cache=True)
    def _dijkstra_numba(indptr, adj_node, adj_edge, weights, source, dist, pred):
        n = indptr.size - 1
        for i in range(n):
            dist[i] = np.inf
            pred[i] = -1
        settled = np.zeros(n, dtype=numba.boolean)
        cap = adj_node.size + 1
        heap_d = np.empty(cap, dtype=np.float64)
        heap_n = np.empty(cap, dtype=np.int64)
        size = 0
        dist[source] = 0.0
        size = _heap_push(heap_d, heap_n, size, 0.0, source)
        while size > 0:
            d, u, size = _heap_pop(heap_d, heap_n, size)
            if settled[u]:
                continue
            settled[u] = True
            for k in range(indptr[u], indptr[u + 1]):
                v = adj_node[k]
                if settled[v]:
                    continue
                nd = d + weights[adj_edge[k]]
                if nd < dist[v]:
                    dist[v] = nd
                    pred[v] = u
                    size = _heap_push(heap_d, heap_n, size, nd, v)

    @njit(cache=True, parallel=True)
    def _multi_numba(indptr, adj_node, adj_edge, weights, sources):
        n = indptr.size - 1
        s = sources.size
        dist = np.empty((s, n), dtype=np.float64)
        pred = np.empty((s, n), dtype=np.int32)
        for i in prange(s):
            _dijkstra_numba(
                indptr, adj_node, adj_edge, weights, sources[i], dist[i], pred[i]
            )
        return dist, pred


def multi_source_shortest(indptr, adj_node, adj_edge, weights, sources):
    """Distances and predecessors from each source, shape (S, N)."""
    sources = np.asarray(sources, dtype=np.int64)
    weights = np.ascontiguousarray(weights, dtype=np.float64)
    if USE_NUMBA:
        return _multi_numba(indptr, adj_node, adj_edge, weights, sources)
    return _multi_python(indptr, adj_node, adj_edge, weights, sources)
