"""Pure-Python/numpy reference for the hot kernels.

Must stay result-identical (bitwise for the float kernels) with
``_ckernels.pyx``; tests compare the two whenever the extension is built.
"""
import numpy as np

SAT = 1
UNSAT = 0
BUDGET = -1


def dpll_flat(lits, offsets, n_vars, budget):
    """DPLL over a flattened clause list.

    ``lits`` holds all literals back to back, clause ``c`` spans
    ``lits[offsets[c]:offsets[c + 1]]``.  Returns ``(status, assignment,
    decisions)`` where ``assignment`` is an int8 array indexed by variable
    (slot 0 unused, unassigned variables reported as 0).
    """
    lits = [int(x) for x in lits]
    offsets = [int(x) for x in offsets]
    m = len(offsets) - 1
    assign = [-1] * (n_vars + 1)
    trail = []
    frames = []
    decisions = 0

    def propagate():
        while True:
            changed = False
            for c in range(m):
                nun = 0
                last = 0
                sat = False
                for p in range(offsets[c], offsets[c + 1]):
                    lit = lits[p]
                    a = assign[lit if lit > 0 else -lit]
                    if a == -1:
                        nun += 1
                        last = lit
                    elif (a == 1) == (lit > 0):
                        sat = True
                        break
                if sat:
                    continue
                if nun == 0:
                    return False
                if nun == 1:
                    v = last if last > 0 else -last
                    assign[v] = 1 if last > 0 else 0
                    trail.append(v)
                    changed = True
            if changed:
                continue
            pol = [0] * (n_vars + 1)
            for c in range(m):
                sat = False
                for p in range(offsets[c], offsets[c + 1]):
                    lit = lits[p]
                    a = assign[lit if lit > 0 else -lit]
                    if a != -1 and (a == 1) == (lit > 0):
                        sat = True
                        break
                if sat:
                    continue
                for p in range(offsets[c], offsets[c + 1]):
                    lit = lits[p]
                    v = lit if lit > 0 else -lit
                    if assign[v] == -1:
                        pol[v] |= 1 if lit > 0 else 2
            for v in range(1, n_vars + 1):
                if pol[v] == 1 or pol[v] == 2:
                    assign[v] = 1 if pol[v] == 1 else 0
                    trail.append(v)
                    changed = True
            if not changed:
                return True

    def first_open_literal():
        for c in range(m):
            lit_open = 0
            sat = False
            for p in range(offsets[c], offsets[c + 1]):
                lit = lits[p]
                a = assign[lit if lit > 0 else -lit]
                if a == -1:
                    if lit_open == 0:
                        lit_open = lit
                elif (a == 1) == (lit > 0):
                    sat = True
                    break
            if not sat:
                return lit_open
        return 0

    def undo(pos):
        while len(trail) > pos:
            assign[trail.pop()] = -1

    while True:
        if not propagate():
            while frames:
                pos, var, val, flipped = frames.pop()
                undo(pos)
                if not flipped:
                    assign[var] = 1 - val
                    trail.append(var)
                    frames.append((pos, var, 1 - val, True))
                    break
            else:
                return UNSAT, np.zeros(n_vars + 1, dtype=np.int8), decisions
            continue
        lit = first_open_literal()
        if lit == 0:
            out = np.array([max(a, 0) for a in assign], dtype=np.int8)
            return SAT, out, decisions
        decisions += 1
        if decisions > budget:
            return BUDGET, np.zeros(n_vars + 1, dtype=np.int8), decisions
        var = lit if lit > 0 else -lit
        val = 1 if lit > 0 else 0
        frames.append((len(trail), var, val, False))
        assign[var] = val
        trail.append(var)


def segment_mean(indptr, indices, h, n_out):
    """Row ``i`` of the result is the mean of ``h[indices[indptr[i]:indptr[i+1]]]``."""
    out = np.zeros((n_out, h.shape[1]), dtype=np.float64)
    deg = np.diff(indptr)
    rows = np.repeat(np.arange(n_out), deg)
    np.add.at(out, rows, h[indices])
    nz = deg > 0
    out[nz] /= deg[nz, None]
    return out


def segment_mean_backward(indptr, indices, grad_out, n_src):
    """Adjoint of :func:`segment_mean` with respect to ``h``."""
    grad = np.zeros((n_src, grad_out.shape[1]), dtype=np.float64)
    deg = np.diff(indptr)
    n_out = len(deg)
    scaled = np.zeros_like(grad_out)
    nz = deg > 0
    scaled[nz] = grad_out[nz] / deg[nz, None]
    rows = np.repeat(np.arange(n_out), deg)
    np.add.at(grad, indices, scaled[rows])
    return grad
