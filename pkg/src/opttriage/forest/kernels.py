"""Hot loops of the forest: split scanning and batch tree routing.

Two interchangeable backends: numba-compiled kernels and a pure-numpy
fallback. Set OPTTRIAGE_KERNELS=numpy (or =numba) to force one; the
default is numba when importable. Both paths evaluate the same IEEE
expressions in the same order, so results are bit-identical and models
trained on either backend serialize to the same bytes.
"""

from __future__ import annotations

import os

import numpy as np

ENV_VAR = "OPTTRIAGE_KERNELS"

try:
    from numba import njit

    _HAVE_NUMBA = True
except ImportError:  # pragma: no cover - numba is an install-time dependency
    _HAVE_NUMBA = False


def available_backends() -> tuple[str, ...]:
    return ("numba", "numpy") if _HAVE_NUMBA else ("numpy",)


def active_backend() -> str:
    """Backend selected by the environment, defaulting to the fastest available."""
    name = os.environ.get(ENV_VAR, "").strip().lower()
    if not name:
        return "numba" if _HAVE_NUMBA else "numpy"
    if name not in ("numba", "numpy"):
        raise ValueError(f"{ENV_VAR} must be 'numba' or 'numpy', not {name!r}")
    if name == "numba" and not _HAVE_NUMBA:
        raise ValueError("numba backend requested but numba is not importable")
    return name


# ----------------------------------------------------------------- split scan
#
# Scan one feature column for the threshold with the largest Gini decrease.
# Candidate thresholds are midpoints between consecutive distinct sorted
# values; a cut is valid when both sides hold at least min_leaf rows.
# Returns (found, threshold, decrease). Ties keep the lowest threshold via
# the strict ``>`` update over an ascending scan.


def _split_scan_py(values, labels, min_leaf):
    n = values.shape[0]
    order = np.argsort(values)
    sv = values[order]
    sl = labels[order]
    h_tot = 0
    for i in range(n):
        h_tot += sl[i]
    e_tot = n - h_tot
    pe = e_tot / n
    ph = h_tot / n
    g_parent = 1.0 - pe * pe - ph * ph
    found = False
    best_thr = 0.0
    best_dec = 0.0
    h_left = 0
    for cut in range(1, n):
        h_left += sl[cut - 1]
        if sv[cut] == sv[cut - 1]:
            continue
        n_l = cut
        n_r = n - cut
        if n_l < min_leaf or n_r < min_leaf:
            continue
        h_l = h_left
        e_l = n_l - h_l
        h_r = h_tot - h_l
        e_r = e_tot - e_l
        pe_l = e_l / n_l
        ph_l = h_l / n_l
        g_l = 1.0 - pe_l * pe_l - ph_l * ph_l
        pe_r = e_r / n_r
        ph_r = h_r / n_r
        g_r = 1.0 - pe_r * pe_r - ph_r * ph_r
        w = (n_l * g_l + n_r * g_r) / n
        dec = g_parent - w
        if dec > best_dec:
            found = True
            best_dec = dec
            best_thr = (sv[cut - 1] + sv[cut]) / 2.0
    return found, best_thr, best_dec


def _split_scan_np(values, labels, min_leaf):
    n = values.shape[0]
    order = np.argsort(values)
    sv = values[order]
    sl = labels[order].astype(np.int64)
    h_tot = int(sl.sum())
    e_tot = n - h_tot
    pe = e_tot / n
    ph = h_tot / n
    g_parent = 1.0 - pe * pe - ph * ph

    n_l = np.arange(1, n, dtype=np.int64)
    n_r = n - n_l
    h_l = np.cumsum(sl)[:-1]
    usable = (sv[1:] != sv[:-1]) & (n_l >= min_leaf) & (n_r >= min_leaf)
    if not usable.any():
        return False, 0.0, 0.0
    e_l = n_l - h_l
    h_r = h_tot - h_l
    e_r = e_tot - e_l
    pe_l = e_l / n_l
    ph_l = h_l / n_l
    g_l = 1.0 - pe_l * pe_l - ph_l * ph_l
    pe_r = e_r / n_r
    ph_r = h_r / n_r
    g_r = 1.0 - pe_r * pe_r - ph_r * ph_r
    w = (n_l * g_l + n_r * g_r) / n
    dec = g_parent - w
    dec = np.where(usable, dec, -np.inf)
    at = int(np.argmax(dec))  # first occurrence keeps the lowest threshold
    best = float(dec[at])
    if best <= 0.0:
        return False, 0.0, 0.0
    thr = (sv[at] + sv[at + 1]) / 2.0
    return True, float(thr), best


# ---------------------------------------------------------------- tree routing
#
# Route rows through one tree laid out as parallel node arrays:
# feature[i] < 0 marks a leaf whose class is label[i], otherwise compare
# x[feature[i]] <= threshold[i] and continue left or right.


def _route_py(feature, threshold, left, right, label, x_rows):
    n = x_rows.shape[0]
    out = np.empty(n, dtype=np.int8)
    for i in range(n):
        node = 0
        while feature[node] >= 0:
            if x_rows[i, feature[node]] <= threshold[node]:
                node = left[node]
            else:
                node = right[node]
        out[i] = label[node]
    return out


def _route_np(feature, threshold, left, right, label, x_rows):
    n = x_rows.shape[0]
    node = np.zeros(n, dtype=np.int64)
    pending = feature[node] >= 0
    while pending.any():
        rows = np.nonzero(pending)[0]
        at = node[rows]
        goes_left = x_rows[rows, feature[at]] <= threshold[at]
        node[rows] = np.where(goes_left, left[at], right[at])
        pending = feature[node] >= 0
    return label[node].astype(np.int8)


if _HAVE_NUMBA:
    _split_scan_jit = njit(cache=True, nogil=True)(_split_scan_py)
    _route_jit = njit(cache=True, nogil=True)(_route_py)


def split_scan(values, labels, min_leaf, backend=None):
    """Best threshold for one feature column. values f8[:], labels i1[:] of 0/1."""
    name = backend or active_backend()
    if name == "numba":
        return _split_scan_jit(values, labels, min_leaf)
    return _split_scan_np(values, labels, min_leaf)


def route_tree(feature, threshold, left, right, label, x_rows, backend=None):
    """Leaf class (0/1) per row of x_rows for one array-layout tree."""
    name = backend or active_backend()
    if name == "numba":
        return _route_jit(feature, threshold, left, right, label, x_rows)
    return _route_np(feature, threshold, left, right, label, x_rows)


def warm_up() -> None:
    """Trigger one-time JIT compilation so later calls run at full speed."""
    if not _HAVE_NUMBA:
        return
    vals = np.array([0.0, 1.0, 2.0, 3.0])
    labs = np.array([0, 0, 1, 1], dtype=np.int8)
    _split_scan_jit(vals, labs, 1)
    one = np.array([0], dtype=np.int32)
    _route_jit(
        np.array([-1], dtype=np.int32),
        np.array([0.0]),
        one,
        one,
        np.array([1], dtype=np.int8),
        np.zeros((1, 1)),
    )
