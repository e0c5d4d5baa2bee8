"""Pure-numpy convolution kernels (stride 1, "same" zero padding).

The convolution is unrolled into one einsum per kernel tap, which numpy
lowers to matrix products.  Used when the compiled extension is absent
or explicitly disabled.
"""

from __future__ import annotations

import numpy as np


def conv2d_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    nb, ci, h, wd = x.shape
    co, _, kh, kw = w.shape
    ph, pw = kh // 2, kw // 2
    xp = np.pad(x, ((0, 0), (0, 0), (ph, ph), (pw, pw)))
    out = np.broadcast_to(b[None, :, None, None], (nb, co, h, wd)).copy()
    for di in range(kh):
        for dj in range(kw):
            tap = xp[:, :, di : di + h, dj : dj + wd]
            out += np.einsum("bchw,oc->bohw", tap, w[:, :, di, dj], optimize=True)
    return out


def conv2d_backward(dout: np.ndarray, x: np.ndarray, w: np.ndarray):
    nb, ci, h, wd = x.shape
    co, _, kh, kw = w.shape
    ph, pw = kh // 2, kw // 2
    xp = np.pad(x, ((0, 0), (0, 0), (ph, ph), (pw, pw)))
    dxp = np.zeros_like(xp)
    dw = np.zeros_like(w)
    for di in range(kh):
        for dj in range(kw):
            tap = xp[:, :, di : di + h, dj : dj + wd]
            dw[:, :, di, dj] = np.einsum("bohw,bchw->oc", dout, tap, optimize=True)
            dxp[:, :, di : di + h, dj : dj + wd] += np.einsum(
                "bohw,oc->bchw", dout, w[:, :, di, dj], optimize=True
            )
    db = dout.sum(axis=(0, 2, 3))
    dx = dxp[:, :, ph : ph + h, pw : pw + wd]
    return np.ascontiguousarray(dx), dw, db


def conv1d_forward(x: np.ndarray, w: np.ndarray, b: np.ndarray) -> np.ndarray:
    nb, ci, ln = x.shape
    co, _, kw = w.shape
    pw = kw // 2
    xp = np.pad(x, ((0, 0), (0, 0), (pw, pw)))
    out = np.broadcast_to(b[None, :, None], (nb, co, ln)).copy()
    for dj in range(kw):
        out += np.einsum("bcl,oc->bol", xp[:, :, dj : dj + ln], w[:, :, dj], optimize=True)
    return out


def conv1d_backward(dout: np.ndarray, x: np.ndarray, w: np.ndarray):
    nb, ci, ln = x.shape
    co, _, kw = w.shape
    pw = kw // 2
    xp = np.pad(x, ((0, 0), (0, 0), (pw, pw)))
    dxp = np.zeros_like(xp)
    dw = np.zeros_like(w)
    for dj in range(kw):
        tap = xp[:, :, dj : dj + ln]
        dw[:, :, dj] = np.einsum("bol,bcl->oc", dout, tap, optimize=True)
        dxp[:, :, dj : dj + ln] += np.einsum("bol,oc->bcl", dout, w[:, :, dj], optimize=True)
    db = dout.sum(axis=(0, 2))
    dx = dxp[:, :, pw : pw + ln]
    return np.ascontiguousarray(dx), dw, db
