"""Maximum bipartite matching by Hopcroft-Karp (layered augmenting paths)."""

from collections import deque

_INF = float("inf")


def maximum_matching(adjacency):
    """Return a maximum matching of a bipartite graph.

    Parameters
    ----------
    adjacency : dict
        Maps each left vertex to an iterable of right vertices. Vertices
        only need to be hashable.

    Returns
    -------
    dict
        ``{left: right}`` for every matched left vertex.
    """
    graph = {u: list(vs) for u, vs in adjacency.items()}
    pair_left = {}
    pair_right = {}
    dist = {}

    def bfs():
        queue = deque()
        for u in graph:
            if u in pair_left:
                dist[u] = _INF
            else:
                dist[u] = 0
                queue.append(u)
        found = False
        while queue:
            u = queue.popleft()
            for v in graph[u]:
                w = pair_right.get(v)
                if w is None:
                    found = True
                elif dist[w] == _INF:
                    dist[w] = dist[u] + 1
                    queue.append(w)
        return found

    def dfs(u):
        # iterative DFS along the layered graph
        stack = [(u, iter(graph[u]))]
        path = []
        while stack:
            node, it = stack[-1]
            advanced = False
            for v in it:
                w = pair_right.get(v)
                if w is None:
                    path.append((node, v))
                    for a, b in path:
                        pair_left[a] = b
                        pair_right[b] = a
                    return True
                if dist[w] == dist[node] + 1:
                    path.append((node, v))
                    stack.append((w, iter(graph[w])))
                    advanced = True
                    break
            if not advanced:
                dist[node] = _INF
                stack.pop()
                if path:
                    path.pop()
        return False

    while bfs():
        for u in graph:
            if u not in pair_left:
                dfs(u)
    return dict(pair_left)
