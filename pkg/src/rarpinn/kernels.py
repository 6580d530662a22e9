"""Elementwise hot kernels: activation jets and CGNLS residuals.

Stream arrays are laid out ``(4, N, W)`` with stream order
(value, d/dt, d/dx, d2/dx2). Output jets of the network are ``(4, N, 4)``
with output order (u1, v1, u2, v2).

Every kernel has a numba and a numpy implementation with identical
semantics; the public wrappers dispatch on :func:`numba_enabled`.
"""

import numpy as np

from ._accel import njit, numba_enabled

VALUE, DT, DX, DXX = 0, 1, 2, 3


# --------------------------------------------------------------------------
# activation derivatives
# --------------------------------------------------------------------------


def activation_derivs(name: str, z: np.ndarray, a: np.ndarray):
    """Return (s1, s2, s3), the first three derivatives of the activation at z."""
    if name == "tanh":
        s1 = 1.0 - a * a
        s2 = -2.0 * a * s1
        s3 = s1 * (6.0 * a * a - 2.0)
        return s1, s2, s3
    if name == "sin":
        c = np.cos(z)
        return c, -a, -c
    if name == "identity":
        one = np.ones_like(z)
        zero = np.zeros_like(z)
        return one, zero, zero
    raise KeyError(name)


def activation_value(name: str, z: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
    if name == "tanh":
        return np.tanh(z, out=out)
    if name == "sin":
        return np.sin(z, out=out)
    if name == "identity":
        if out is None:
            return z.copy()
        np.copyto(out, z)
        return out
    raise KeyError(name)


ACTIVATIONS = ("tanh", "sin", "identity")


# --------------------------------------------------------------------------
# activation jet, forward
# --------------------------------------------------------------------------


def _jet_act_forward_np(name, Z, A):
    z = Z[VALUE]
    s1, s2, _ = activation_derivs(name, z, A[VALUE])
    A[DT] = s1 * Z[DT]
    A[DX] = s1 * Z[DX]
    A[DXX] = s2 * Z[DX] * Z[DX] + s1 * Z[DXX]


@njit(cache=True)
def _tanh_jet_forward_nb(Z, A):
    n, w = Z.shape[1], Z.shape[2]
    for i in range(n):
        for j in range(w):
            a = A[0, i, j]
            s1 = 1.0 - a * a
            s2 = -2.0 * a * s1
            zx = Z[2, i, j]
            A[1, i, j] = s1 * Z[1, i, j]
            A[2, i, j] = s1 * zx
            A[3, i, j] = s2 * zx * zx + s1 * Z[3, i, j]


def jet_activation_forward(name: str, Z: np.ndarray, out: np.ndarray | None = None) -> np.ndarray:
    """Push pre-activation streams ``Z`` through the activation.

    The value stream always goes through numpy so that a plain forward pass
    reproduces it bit for bit.
    """
    A = np.empty_like(Z) if out is None else out
    activation_value(name, Z[VALUE], out=A[VALUE])
    if name == "tanh" and numba_enabled():
        _tanh_jet_forward_nb(Z, A)
    else:
        _jet_act_forward_np(name, Z, A)
    return A


# --------------------------------------------------------------------------
# activation jet, reverse
# --------------------------------------------------------------------------


def _jet_act_backward_np(name, Z, A, GA, GZ):
    s1, s2, s3 = activation_derivs(name, Z[VALUE], A[VALUE])
    zt, zx, zxx = Z[DT], Z[DX], Z[DXX]
    GZ[VALUE] = (
        GA[VALUE] * s1
        + GA[DT] * s2 * zt
        + GA[DX] * s2 * zx
        + GA[DXX] * (s3 * zx * zx + s2 * zxx)
    )
    GZ[DT] = GA[DT] * s1
    GZ[DX] = GA[DX] * s1 + GA[DXX] * 2.0 * s2 * zx
    GZ[DXX] = GA[DXX] * s1
    return GZ


@njit(cache=True)
def _tanh_jet_backward_nb(Z, A, GA, GZ):
    n, w = Z.shape[1], Z.shape[2]
    for i in range(n):
        for j in range(w):
            a = A[0, i, j]
            s1 = 1.0 - a * a
            s2 = -2.0 * a * s1
            s3 = s1 * (6.0 * a * a - 2.0)
            zt = Z[1, i, j]
            zx = Z[2, i, j]
            zxx = Z[3, i, j]
            g0 = GA[0, i, j]
            g1 = GA[1, i, j]
            g2 = GA[2, i, j]
            g3 = GA[3, i, j]
            GZ[0, i, j] = g0 * s1 + g1 * s2 * zt + g2 * s2 * zx + g3 * (s3 * zx * zx + s2 * zxx)
            GZ[1, i, j] = g1 * s1
            GZ[2, i, j] = g2 * s1 + g3 * 2.0 * s2 * zx
            GZ[3, i, j] = g3 * s1


def jet_activation_backward(
    name: str, Z: np.ndarray, A: np.ndarray, GA: np.ndarray, out: np.ndarray | None = None
) -> np.ndarray:
    """Adjoint of :func:`jet_activation_forward` with respect to ``Z``.

    ``out`` must not alias ``GA``.
    """
    GZ = np.empty_like(GA) if out is None else out
    if name == "tanh" and numba_enabled():
        _tanh_jet_backward_nb(Z, A, GA, GZ)
    else:
        _jet_act_backward_np(name, Z, A, GA, GZ)
    return GZ


# --------------------------------------------------------------------------
# CGNLS residuals
#
#   G   = alpha(u1^2+v1^2) + beta(u2^2+v2^2) + 2gR(u1u2+v1v2) - 2gI(v1u2-u1v2)
#   fju = vjt - dj ujxx - nj G uj
#   fjv = ujt + dj vjxx + nj G vj
# --------------------------------------------------------------------------


def _residual_forward_np(Y, disp, nonl, coef):
    alpha, beta, g_r, g_i = coef
    u1, v1, u2, v2 = (Y[VALUE, :, k] for k in range(4))
    G = (
        alpha * (u1 * u1 + v1 * v1)
        + beta * (u2 * u2 + v2 * v2)
        + 2.0 * g_r * (u1 * u2 + v1 * v2)
        - 2.0 * g_i * (v1 * u2 - u1 * v2)
    )
    F = np.empty((Y.shape[1], 4))
    F[:, 0] = Y[DT, :, 1] - disp[0] * Y[DXX, :, 0] - nonl[0] * G * u1
    F[:, 1] = Y[DT, :, 0] + disp[0] * Y[DXX, :, 1] + nonl[0] * G * v1
    F[:, 2] = Y[DT, :, 3] - disp[1] * Y[DXX, :, 2] - nonl[1] * G * u2
    F[:, 3] = Y[DT, :, 2] + disp[1] * Y[DXX, :, 3] + nonl[1] * G * v2
    return F


@njit(cache=True)
def _residual_forward_nb(Y, disp, nonl, coef, F):
    alpha, beta, g_r, g_i = coef[0], coef[1], coef[2], coef[3]
    d1, d2, n1, n2 = disp[0], disp[1], nonl[0], nonl[1]
    for i in range(Y.shape[1]):
        u1 = Y[0, i, 0]
        v1 = Y[0, i, 1]
        u2 = Y[0, i, 2]
        v2 = Y[0, i, 3]
        G = (
            alpha * (u1 * u1 + v1 * v1)
            + beta * (u2 * u2 + v2 * v2)
            + 2.0 * g_r * (u1 * u2 + v1 * v2)
            - 2.0 * g_i * (v1 * u2 - u1 * v2)
        )
        F[i, 0] = Y[1, i, 1] - d1 * Y[3, i, 0] - n1 * G * u1
        F[i, 1] = Y[1, i, 0] + d1 * Y[3, i, 1] + n1 * G * v1
        F[i, 2] = Y[1, i, 3] - d2 * Y[3, i, 2] - n2 * G * u2
        F[i, 3] = Y[1, i, 2] + d2 * Y[3, i, 3] + n2 * G * v2


def residual_forward(Y, disp, nonl, coef) -> np.ndarray:
    """Residuals ``(N, 4)`` ordered (f1u, f1v, f2u, f2v) from output jets ``Y``.

    ``disp`` = (d1, d2) and ``nonl`` = (n1, n2) scale the dispersion and
    nonlinear terms per component; ``coef`` = (alpha, beta, Re gamma, Im gamma).
    """
    disp = np.asarray(disp, dtype=np.float64)
    nonl = np.asarray(nonl, dtype=np.float64)
    coef = np.asarray(coef, dtype=np.float64)
    if numba_enabled():
        F = np.empty((Y.shape[1], 4))
        _residual_forward_nb(Y, disp, nonl, coef, F)
        return F
    return _residual_forward_np(Y, disp, nonl, coef)


def _residual_vjp_np(Y, disp, nonl, coef, GF):
    alpha, beta, g_r, g_i = coef
    u1, v1, u2, v2 = (Y[VALUE, :, k] for k in range(4))
    G = (
        alpha * (u1 * u1 + v1 * v1)
        + beta * (u2 * u2 + v2 * v2)
        + 2.0 * g_r * (u1 * u2 + v1 * v2)
        - 2.0 * g_i * (v1 * u2 - u1 * v2)
    )
    g1u, g1v, g2u, g2v = GF[:, 0], GF[:, 1], GF[:, 2], GF[:, 3]
    d1, d2 = disp
    n1, n2 = nonl
    GY = np.zeros_like(Y)
    GY[DT, :, 1] = g1u
    GY[DT, :, 0] = g1v
    GY[DT, :, 3] = g2u
    GY[DT, :, 2] = g2v
    GY[DXX, :, 0] = -d1 * g1u
    GY[DXX, :, 1] = d1 * g1v
    GY[DXX, :, 2] = -d2 * g2u
    GY[DXX, :, 3] = d2 * g2v
    gG = -n1 * g1u * u1 + n1 * g1v * v1 - n2 * g2u * u2 + n2 * g2v * v2
    GY[VALUE, :, 0] = -n1 * G * g1u + gG * 2.0 * (alpha * u1 + g_r * u2 + g_i * v2)
    GY[VALUE, :, 1] = n1 * G * g1v + gG * 2.0 * (alpha * v1 + g_r * v2 - g_i * u2)
    GY[VALUE, :, 2] = -n2 * G * g2u + gG * 2.0 * (beta * u2 + g_r * u1 - g_i * v1)
    GY[VALUE, :, 3] = n2 * G * g2v + gG * 2.0 * (beta * v2 + g_r * v1 + g_i * u1)
    g_disp = np.array([
        np.sum(-Y[DXX, :, 0] * g1u + Y[DXX, :, 1] * g1v),
        np.sum(-Y[DXX, :, 2] * g2u + Y[DXX, :, 3] * g2v),
    ])
    g_nonl = np.array([
        np.sum(G * (-u1 * g1u + v1 * g1v)),
        np.sum(G * (-u2 * g2u + v2 * g2v)),
    ])
    return GY, g_disp, g_nonl


@njit(cache=True)
def _residual_vjp_nb(Y, disp, nonl, coef, GF, GY, g_disp, g_nonl):
    alpha, beta, g_r, g_i = coef[0], coef[1], coef[2], coef[3]
    d1, d2, n1, n2 = disp[0], disp[1], nonl[0], nonl[1]
    sd1 = 0.0
    sd2 = 0.0
    sn1 = 0.0
    sn2 = 0.0
    for i in range(Y.shape[1]):
        u1 = Y[0, i, 0]
        v1 = Y[0, i, 1]
        u2 = Y[0, i, 2]
        v2 = Y[0, i, 3]
        G = (
            alpha * (u1 * u1 + v1 * v1)
            + beta * (u2 * u2 + v2 * v2)
            + 2.0 * g_r * (u1 * u2 + v1 * v2)
            - 2.0 * g_i * (v1 * u2 - u1 * v2)
        )
        g1u = GF[i, 0]
        g1v = GF[i, 1]
        g2u = GF[i, 2]
        g2v = GF[i, 3]
        GY[1, i, 1] = g1u
        GY[1, i, 0] = g1v
        GY[1, i, 3] = g2u
        GY[1, i, 2] = g2v
        GY[3, i, 0] = -d1 * g1u
        GY[3, i, 1] = d1 * g1v
        GY[3, i, 2] = -d2 * g2u
        GY[3, i, 3] = d2 * g2v
        gG = -n1 * g1u * u1 + n1 * g1v * v1 - n2 * g2u * u2 + n2 * g2v * v2
        GY[0, i, 0] = -n1 * G * g1u + gG * 2.0 * (alpha * u1 + g_r * u2 + g_i * v2)
        GY[0, i, 1] = n1 * G * g1v + gG * 2.0 * (alpha * v1 + g_r * v2 - g_i * u2)
        GY[0, i, 2] = -n2 * G * g2u + gG * 2.0 * (beta * u2 + g_r * u1 - g_i * v1)
        GY[0, i, 3] = n2 * G * g2v + gG * 2.0 * (beta * v2 + g_r * v1 + g_i * u1)
        for k in range(4):
            GY[2, i, k] = 0.0
        sd1 += -Y[3, i, 0] * g1u + Y[3, i, 1] * g1v
        sd2 += -Y[3, i, 2] * g2u + Y[3, i, 3] * g2v
        sn1 += G * (-u1 * g1u + v1 * g1v)
        sn2 += G * (-u2 * g2u + v2 * g2v)
    g_disp[0] = sd1
    g_disp[1] = sd2
    g_nonl[0] = sn1
    g_nonl[1] = sn2


def residual_vjp(Y, disp, nonl, coef, GF):
    """Adjoint of :func:`residual_forward`.

    Returns ``(GY, g_disp, g_nonl)``: the cotangent of the output jets and of
    the two per-component coefficient pairs.
    """
    disp = np.asarray(disp, dtype=np.float64)
    nonl = np.asarray(nonl, dtype=np.float64)
    coef = np.asarray(coef, dtype=np.float64)
    GF = np.ascontiguousarray(GF, dtype=np.float64)
    if numba_enabled():
        GY = np.empty_like(Y)
        g_disp = np.empty(2)
        g_nonl = np.empty(2)
        _residual_vjp_nb(Y, disp, nonl, coef, GF, GY, g_disp, g_nonl)
        return GY, g_disp, g_nonl
    return _residual_vjp_np(Y, disp, nonl, coef, GF)
