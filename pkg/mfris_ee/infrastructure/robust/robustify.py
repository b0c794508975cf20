"""Robust counterparts of the uncertain rate and power constraints.

Every builder accepts numpy arrays or cvxpy expressions for its operands, so the
same code produces numeric matrices in tests and affine LMIs inside a conic
program. At most one of the beam / surface operands may be a decision variable
at a time; the alternating solvers guarantee that.

Error vectors follow one convention throughout: for user k,
``z = [dh; vec(dF)]`` (unconjugated, column stacking), so that
``(h + u^T F + dh + u^T dF) w = s0 + p^T z`` with ``p = [w; kron(w, u)]``.
"""

from dataclasses import dataclass, field, replace
from typing import List, Optional, Sequence, Tuple, Union

import cvxpy as cp
import numpy as np
from scipy.linalg import sqrtm

from ...domain.exceptions import DimensionMismatchError, NotPositiveSemidefiniteError
from ...logging_config import get_logger
from ..linalg.complex_linalg import ensure_hermitian, herm

logger = get_logger(__name__)

Operand = Union[np.ndarray, cp.Expression, float]


# --------------------------------------------------------------------------- helpers
def _is_expr(*xs) -> bool:
    return any(isinstance(x, cp.Expression) for x in xs)


def _conj(x):
    return cp.conj(x) if _is_expr(x) else np.conj(x)


def _H(x):
    return cp.conj(x).T if _is_expr(x) else np.conj(x).T


def _col(x):
    n = x.shape[0]
    return cp.reshape(x, (n, 1), order="F") if _is_expr(x) else np.reshape(x, (n, 1))


def _row(x):
    n = x.shape[0]
    return cp.reshape(x, (1, n), order="F") if _is_expr(x) else np.reshape(x, (1, n))


def _scalar(x):
    if _is_expr(x):
        return cp.reshape(x, (1, 1), order="F")
    return np.reshape(np.asarray(x, dtype=complex), (1, 1))


def _bmat(rows):
    if any(_is_expr(b) for row in rows for b in row):
        return cp.bmat(rows)
    return np.block([[np.asarray(b, dtype=complex) for b in row] for row in rows])


def _hstack(xs):
    if _is_expr(*xs):
        return cp.hstack(list(xs))
    return np.concatenate([np.asarray(x, dtype=complex) for x in xs])


def _real(x):
    return cp.real(x) if _is_expr(x) else np.real(x)


def _sum_squares(x):
    return cp.sum_squares(x) if _is_expr(x) else float(np.sum(np.abs(x) ** 2))


def _square(x):
    return cp.square(x) if _is_expr(x) else float(x) ** 2


def _diag(v):
    return cp.diag(v) if _is_expr(v) else np.diag(v)


def _value(x):
    return np.asarray(x.value) if _is_expr(x) else np.asarray(x)


def kron_vector(w: Operand, u: Operand):
    """kron(w, u) for 1-D operands, affine when exactly one is a variable"""
    if _is_expr(w) and _is_expr(u):
        raise TypeError("kron of two decision variables is not affine")
    if _is_expr(w):
        return np.kron(np.eye(w.shape[0]), np.reshape(u, (-1, 1))) @ w
    if _is_expr(u):
        return np.kron(np.reshape(w, (-1, 1)), np.eye(u.shape[0])) @ u
    return np.kron(w, u)


def kron_identity(X: Operand, m: int):
    """kron(X, I_m), built blockwise so that X may be a variable"""
    if not _is_expr(X):
        return np.kron(X, np.eye(m))
    rows, cols = X.shape
    eye = np.eye(m)
    return cp.bmat([[X[i, j] * eye for j in range(cols)] for i in range(rows)])


# --------------------------------------------------------------------------- types
@dataclass
class QuadraticUncertainForm:
    """Quadratics f_i(x) = x^H B_i x + 2Re{b_i^H x} + c_i.

    Index 0 is the protected constraint f_0 >= 0; indices 1..P describe the
    uncertainty set {x : f_i(x) >= 0}. Only f_0 may depend on decision variables.
    """

    B: List[Operand]
    b: List[Operand]
    c: List[Operand]

    def __post_init__(self):
        if not (len(self.B) == len(self.b) == len(self.c)) or len(self.B) < 2:
            raise DimensionMismatchError("need f_0 and at least one set-defining quadratic")
        n = self.B[0].shape[0]
        for Bi, bi in zip(self.B, self.b):
            if Bi.shape != (n, n) or bi.shape != (n,):
                raise DimensionMismatchError("all quadratics must share the same dimension")
        for Bi in self.B[1:]:
            if _is_expr(Bi):
                raise TypeError("set-defining quadratics must be numeric")
            ensure_hermitian(Bi)
        if not _is_expr(self.B[0]):
            ensure_hermitian(self.B[0])

    @property
    def dim(self) -> int:
        return self.B[0].shape[0]

    @property
    def P(self) -> int:
        return len(self.B) - 1

    def evaluate(self, i: int, x: np.ndarray) -> float:
        B, b, c = (_value(self.B[i]), _value(self.b[i]), _value(self.c[i]))
        return float(np.real(np.conj(x) @ B @ x + 2 * np.conj(b) @ x + c))

    def block(self, i: int):
        return _bmat([[self.B[i], _col(self.b[i])], [_row(_conj(self.b[i])), _scalar(self.c[i])]])


@dataclass
class LmiBlock:
    """Hermitian-affine matrix that must be PSD"""

    name: str
    matrix: Operand

    @property
    def size(self) -> int:
        return self.matrix.shape[0]

    def value(self) -> np.ndarray:
        m = _value(self.matrix)
        return (m + np.conj(m).T) / 2

    def min_eigenvalue(self) -> float:
        return float(np.linalg.eigvalsh(self.value())[0])

    def is_hermitian(self, tol: float = 1e-9) -> bool:
        m = _value(self.matrix)
        return bool(np.max(np.abs(m - np.conj(m).T)) <= tol * (1 + np.max(np.abs(m))))

    def register(self, program, handle: Optional[str] = None) -> str:
        return program.add_lmi(handle or self.name, self.matrix)


@dataclass
class BernsteinBlock:
    """Deterministic pieces of the outage-constraint approximation for one user"""

    trace_term: Operand
    e_const: Operand
    sq_norm: Operand
    spectral: Operand
    rho: float
    norm_vector: Optional[Operand] = None
    clamped: bool = False

    @property
    def spectral_size(self) -> int:
        return self.spectral.shape[0]


# ----------------------------------------------------------------------- transforms
def s_procedure(form: QuadraticUncertainForm, multipliers: Sequence[Operand], name: str = "s_procedure") -> LmiBlock:
    """[[B0, b0], [b0^H, c0]] - sum_i w_i [[Bi, bi], [bi^H, ci]] >= 0"""
    if len(multipliers) != form.P:
        raise DimensionMismatchError(f"expected {form.P} multipliers, got {len(multipliers)}")
    matrix = form.block(0)
    for i, omega in enumerate(multipliers, start=1):
        matrix = matrix - omega * form.block(i)
    return LmiBlock(name, matrix)


def sign_definiteness(
    B: Operand,
    A: Sequence[Operand],
    D: Sequence[Optional[np.ndarray]],
    bounds: Sequence[float],
    multipliers: Sequence[Operand],
    penalty: Optional[Operand] = None,
    name: str = "sign_definiteness",
) -> LmiBlock:
    """Robust form of B >= sum_i (A_i^H X_i D_i + D_i^H X_i^H A_i) for all ||X_i||_F <= bound_i.

    ``penalty`` replaces sum_i v_i D_i^H D_i when that product is not affine
    (the caller then supplies an affine upper bound); the D_i may be None in that case.
    """
    P = len(A)
    if not (len(D) == len(bounds) == len(multipliers) == P):
        raise DimensionMismatchError("A, D, bounds and multipliers must have equal length")
    n = B.shape[0]
    top = B
    if penalty is not None:
        top = top - penalty
    else:
        for Di, vi in zip(D, multipliers):
            if Di.shape[1] != n:
                raise DimensionMismatchError("D_i must have as many columns as B")
            top = top - vi * (herm(Di) @ Di)
    widths = [Ai.shape[0] for Ai in A]
    rows = [[top] + [-bound * _H(Ai) for Ai, bound in zip(A, bounds)]]
    for i, (Ai, bound, vi) in enumerate(zip(A, bounds, multipliers)):
        if Ai.shape[1] != n:
            raise DimensionMismatchError("A_i must have as many columns as B")
        row = [-bound * Ai]
        for j, width in enumerate(widths):
            row.append(vi * np.eye(width) if i == j else np.zeros((widths[i], width)))
        rows.append(row)
    return LmiBlock(name, _bmat(rows))


# ------------------------------------------------------------------ bounded builders
def signal_form(
    w_hat: np.ndarray,
    u_hat: Optional[np.ndarray],
    w: Operand,
    u: Optional[Operand],
    h: np.ndarray,
    F: Optional[np.ndarray],
    xi_h: float,
    xi_F: float,
    alpha: Operand,
) -> QuadraticUncertainForm:
    """Tangent lower bound of |h_bar w|^2 - alpha as a quadratic in the channel error.

    With ``F`` None the user sees no surface and only the direct-link error remains.
    """
    N = h.shape[0]
    if F is None:
        p, p_hat = w, w_hat
        s0, s0_hat = h @ w, h @ w_hat
    else:
        M = F.shape[0]
        if F.shape != (M, N) or u_hat.shape != (M,):
            raise DimensionMismatchError("cascade and surface dimensions disagree")
        p = _hstack([w, kron_vector(w, u)])
        p_hat = np.concatenate([w_hat, np.kron(w_hat, u_hat)])
        s0 = h @ w + u @ (F @ w) if _is_expr(u) else (h + u @ F) @ w
        s0_hat = (h + u_hat @ F) @ w_hat
    n = p_hat.shape[0]
    ph_c = np.conj(p_hat).reshape(n, 1)
    p_row = _row(p)
    A = ph_c @ p_row + _H(ph_c @ p_row) - ph_c @ np.reshape(p_hat, (1, n))
    a = s0_hat * _conj(p) + s0 * np.conj(p_hat) - s0_hat * np.conj(p_hat)
    const = 2 * _real(np.conj(s0_hat) * s0) - abs(s0_hat) ** 2 - alpha

    sel_h = np.zeros((n, n))
    sel_h[:N, :N] = np.eye(N)
    B = [A, -sel_h]
    b = [a, np.zeros(n)]
    c = [const, xi_h ** 2]
    if F is not None:
        sel_F = np.zeros((n, n))
        sel_F[N:, N:] = np.eye(n - N)
        B.append(-sel_F)
        b.append(np.zeros(n))
        c.append(xi_F ** 2)
    return QuadraticUncertainForm(B=B, b=b, c=c)


def build_signal_lmi(
    w_hat, u_hat, w, u, h, F, xi_h, xi_F, alpha, omega_h, omega_F=None, name="signal"
) -> LmiBlock:
    """Worst-case useful-signal constraint |h_bar w|^2 >= alpha over both error balls"""
    form = signal_form(w_hat, u_hat, w, u, h, F, xi_h, xi_F, alpha)
    multipliers = [omega_h] if F is None else [omega_h, omega_F]
    return s_procedure(form, multipliers, name)


def build_interference_lmi(
    W_others: Operand,
    u: Optional[Operand],
    h: np.ndarray,
    F: Optional[np.ndarray],
    xi_h: float,
    xi_F: float,
    eta: Operand,
    noise_slack: Operand,
    sigma2_sq: float,
    upsilon_h: Operand,
    upsilon_F: Optional[Operand] = None,
    cascade_penalty: Optional[Operand] = None,
    name: str = "interference",
) -> LmiBlock:
    """Worst-case ||h_bar W_others||^2 + noise_slack + sigma2^2 <= eta.

    The cascade-error multiplier enters as upsilon_F * ||u||^2. When ``u`` is a
    variable that product is not affine and ``cascade_penalty`` must carry an
    affine upper bound of it.
    """
    N = h.shape[0]
    K_other = W_others.shape[1]
    h_bar0 = h if F is None else (h + u @ F if not _is_expr(u) else None)
    if K_other == 0:
        t_row = None
    elif h_bar0 is not None:
        t_row = _row(h_bar0 @ W_others) if _is_expr(W_others) else np.reshape(h_bar0 @ W_others, (1, K_other))
    else:
        t_row = _row(h @ W_others + u @ (F @ W_others))
    T = _scalar(eta - noise_slack - sigma2_sq)
    if t_row is None:
        B = T
        A_h = np.zeros((N, 1))
    else:
        B = _bmat([[T, t_row], [_H(t_row), np.eye(K_other)]])
        A_h = _bmat([[np.zeros((N, 1)), W_others]])
    D_h = np.zeros((1, 1 + K_other))
    D_h[0, 0] = 1.0
    A = [A_h]
    D = [D_h]
    bounds = [xi_h]
    mult = [upsilon_h]
    if F is not None:
        A.append(A_h)
        bounds.append(xi_F)
        mult.append(upsilon_F)
        if _is_expr(u):
            D.append(None)
        else:
            D_F = np.zeros((u.shape[0], 1 + K_other), dtype=complex)
            D_F[:, 0] = np.conj(u)
            D.append(D_F)
    penalty = None
    if F is not None and _is_expr(u):
        if cascade_penalty is None:
            raise ValueError("a variable surface needs an affine bound on upsilon_F * ||u||^2")
        size = 1 + K_other
        corner = np.zeros((size, size))
        corner[0, 0] = 1.0
        penalty = (upsilon_h + cascade_penalty) * corner
    return sign_definiteness(B, A, D, bounds, mult, penalty=penalty, name=name)


def build_noise_lmi(
    f: np.ndarray,
    u: Operand,
    xi_f: float,
    noise_slack: Operand,
    upsilon_f: Operand,
    sigma1_sq: float,
    name: str = "noise",
) -> LmiBlock:
    """Worst-case sigma1^2 ||f Theta||^2 <= noise_slack over ||df|| <= xi_f"""
    M = f.shape[0]
    sigma1 = np.sqrt(sigma1_sq)
    f_theta = cp.multiply(f, u) if _is_expr(u) else f * u
    B = _bmat([[_scalar(noise_slack), sigma1 * _row(f_theta)], [sigma1 * _H(_row(f_theta)), np.eye(M)]])
    A_f = _bmat([[np.zeros((M, 1)), sigma1 * _diag(u)]])
    D_f = np.zeros((1, 1 + M))
    D_f[0, 0] = 1.0
    return sign_definiteness(B, [A_f], [D_f], [xi_f], [upsilon_f], name=name)


def _robust_budget_lmi(
    surfaces: Sequence[Operand],
    G: np.ndarray,
    W: Operand,
    multipliers: Sequence[Operand],
    budget: Operand,
    radius_penalty: Operand,
    extra_rows: Sequence[Operand],
    name: str,
) -> LmiBlock:
    """S-procedure for budget - sum_c ||Theta_c (G + dG) W||_F^2 - ||extra||^2 >= 0.

    The uncertain part enters through y_c = vec(Theta_c dG) with ||y_c||^2 <= r_c^2;
    ``radius_penalty`` is sum_c multiplier_c * r_c^2 (or an affine upper bound of it).
    The quadratic is lifted by a Schur complement so that the matrix stays affine
    in whichever of W and the surfaces is the decision variable.
    """
    M, N = G.shape
    K = W.shape[1]
    C = len(surfaces)
    L = kron_identity(W.T, M)
    nominal = []
    for u in surfaces:
        if _is_expr(u):
            nominal.append(cp.vec(cp.diag(u) @ (G @ W), order="F"))
        elif _is_expr(W):
            nominal.append(cp.vec((u[:, None] * G) @ W, order="F"))
        else:
            nominal.append(((u[:, None] * G) @ W).reshape(-1, order="F"))
    extra = [x for x in extra_rows if x is not None and x.shape[0] > 0]
    e_len = sum(x.shape[0] for x in extra)

    NM, KM = N * M, K * M
    zeros = np.zeros
    rows = []
    for c in range(C):
        row = [zeros((NM, NM)) for _ in range(C)]
        row[c] = multipliers[c] * np.eye(NM)
        row.append(zeros((NM, 1)))
        row += [_H(L) if j == c else zeros((NM, KM)) for j in range(C)]
        if e_len:
            row.append(zeros((NM, e_len)))
        rows.append(row)
    centre = [zeros((1, NM)) for _ in range(C)] + [_scalar(budget - radius_penalty)]
    centre += [_H(_col(y)) for y in nominal]
    if e_len:
        centre.append(_H(_col(_hstack(extra))))
    rows.append(centre)
    for c in range(C):
        row = [L if j == c else zeros((KM, NM)) for j in range(C)]
        row.append(_col(nominal[c]))
        row += [np.eye(KM) if j == c else zeros((KM, KM)) for j in range(C)]
        if e_len:
            row.append(zeros((KM, e_len)))
        rows.append(row)
    if e_len:
        row = [zeros((e_len, NM)) for _ in range(C)]
        row.append(_col(_hstack(extra)))
        row += [zeros((e_len, KM)) for _ in range(C)]
        row.append(np.eye(e_len))
        rows.append(row)
    return LmiBlock(name, _bmat(rows))


def ris_error_radius_sq(u: np.ndarray, xi_G: float, mode: str = "spectral") -> float:
    """Squared bound on ||vec(Theta dG)|| for ||dG||_F <= xi_G"""
    if mode == "frobenius_mean":
        return xi_G ** 2 * float(np.sum(np.abs(u) ** 2)) / u.shape[0]
    return xi_G ** 2 * float(np.max(np.abs(u) ** 2, initial=0.0))


def build_ris_power_lmi(
    surfaces: Sequence[Operand],
    G: np.ndarray,
    W: Operand,
    xi_G: float,
    multipliers: Sequence[Operand],
    p_ris_max: float,
    sigma1_sq: float,
    radius_penalty: Optional[Operand] = None,
    radius_mode: str = "spectral",
    name: str = "ris_power",
) -> LmiBlock:
    """Worst-case surface power sum_c ||Theta_c G W||_F^2 + ||Theta_c||_F^2 sigma1^2 <= P_RIS"""
    if radius_penalty is None:
        radius_penalty = sum(
            mult * ris_error_radius_sq(u, xi_G, radius_mode) for u, mult in zip(surfaces, multipliers)
        )
    sigma1 = np.sqrt(sigma1_sq)
    extra = [sigma1 * u for u in surfaces]
    return _robust_budget_lmi(surfaces, G, W, multipliers, p_ris_max, radius_penalty, extra, name)


def build_total_power_lmi(
    surfaces: Sequence[Operand],
    G: np.ndarray,
    W: Operand,
    xi_G: float,
    multipliers: Sequence[Operand],
    rho_var: Operand,
    static_power: float,
    xi: float,
    zeta: float,
    sigma1_sq: float,
    radius_penalty: Optional[Operand] = None,
    radius_mode: str = "spectral",
    name: str = "total_power",
) -> LmiBlock:
    """Worst-case total consumption xi ||W||^2 + zeta P_RIS + static <= rho_var"""
    if radius_penalty is None:
        radius_penalty = sum(
            mult * ris_error_radius_sq(u, xi_G, radius_mode) for u, mult in zip(surfaces, multipliers)
        )
    sigma1 = np.sqrt(sigma1_sq)
    transmit = np.sqrt(xi / zeta) * (cp.vec(W, order="F") if _is_expr(W) else W.reshape(-1, order="F"))
    extra = [sigma1 * u for u in surfaces] + [transmit]
    budget = (rho_var - static_power) / zeta
    return _robust_budget_lmi(surfaces, G, W, multipliers, budget, radius_penalty, extra, name)


# ---------------------------------------------------------------- statistical pieces
def expected_quadratic(G_hat: np.ndarray, X: np.ndarray, A: np.ndarray, B: np.ndarray) -> np.ndarray:
    """E[G X G^H] for G with mean G_hat and Kronecker error covariance (rows A, columns B)"""
    for cov in (A, B):
        h = ensure_hermitian(cov)
        if h.size and np.linalg.eigvalsh(h)[0] < -1e-10:
            raise NotPositiveSemidefiniteError("covariance factors must be PSD")
    return G_hat @ X @ herm(G_hat) + np.trace(X @ B.T) * A


def kronecker_error(A: np.ndarray, B: np.ndarray, rng: np.random.Generator) -> np.ndarray:
    """One draw with E[dG X dG^H] = Tr(X B^T) A"""
    M, N = A.shape[0], B.shape[0]
    Z = (rng.standard_normal((M, N)) + 1j * rng.standard_normal((M, N))) / np.sqrt(2)
    return sqrtm(A) @ Z @ np.conj(sqrtm(B))


def expected_ris_power(
    psi: Operand,
    G: np.ndarray,
    W_sum: Operand,
    varpi_G: float,
    sigma1_sq: float,
):
    """Tr(Psi Q) + Tr(Psi) sigma1^2 with Q = G W G^H + varpi_G^2 Tr(W) I.

    ``psi`` is the diagonal of Psi = sum_c Theta_c Theta_c^H.
    """
    if _is_expr(W_sum):
        q = cp.real(cp.diag(G @ W_sum @ herm(G))) + varpi_G ** 2 * cp.real(cp.trace(W_sum))
    else:
        q = np.real(np.diag(G @ W_sum @ herm(G))) + varpi_G ** 2 * np.real(np.trace(W_sum))
    if _is_expr(psi) or _is_expr(q):
        return psi @ q + sigma1_sq * cp.sum(psi) if _is_expr(psi) else q @ psi + sigma1_sq * float(np.sum(psi))
    return float(psi @ q + sigma1_sq * np.sum(psi))


@dataclass
class SurfaceGram:
    """Diagonal of Phi = Theta Theta^H, from a fixed profile or a lifted matrix"""

    phi: Operand
    u: Optional[np.ndarray] = None
    V: Optional[Operand] = None

    @classmethod
    def from_profile(cls, u: np.ndarray) -> "SurfaceGram":
        phi = np.abs(u) ** 2
        assert np.all(phi >= 0)
        return cls(phi=phi, u=u)

    @classmethod
    def from_lifted(cls, V: Operand) -> "SurfaceGram":
        M = V.shape[0] - 1
        phi = cp.real(cp.diag(V))[:M] if _is_expr(V) else np.real(np.diag(V))[:M]
        if not _is_expr(phi):
            assert np.all(phi >= -1e-9), "lifted surface matrix has a negative diagonal"
        return cls(phi=phi, V=V)

    @property
    def M(self) -> int:
        return self.phi.shape[0]

    @property
    def trace(self):
        return cp.sum(self.phi) if _is_expr(self.phi) else float(np.sum(self.phi))

    @property
    def lifted(self) -> bool:
        return self.V is not None


def lifted_channel(h: np.ndarray, F: np.ndarray) -> np.ndarray:
    """[F; h], so that h_bar X h_bar^H = Tr(H X H^H V) for V = conj([u;1]) conj([u;1])^H"""
    return np.vstack([F, h[None, :]])


def lift_surface(u: np.ndarray) -> np.ndarray:
    y = np.conj(np.append(u, 1.0))
    return np.outer(y, np.conj(y))


def bernstein_blocks(
    C: Operand,
    surface: SurfaceGram,
    h: np.ndarray,
    f: np.ndarray,
    F: np.ndarray,
    varpi_h: float,
    varpi_f: float,
    varpi_F: float,
    sigma1_sq: float,
    sigma2_sq: float,
    rho: float,
    expansion: Optional[np.ndarray] = None,
) -> BernsteinBlock:
    """Trace, norm and spectral terms of the rate-outage quadratic for one user.

    With a lifted surface the product of the error scale and the gain term is
    bounded by a difference of squares linearized at ``expansion`` (the previous
    lifted matrix), which is exact there.
    """
    if not 0 < rho < 1:
        raise ValueError("outage probability must lie in (0, 1)")
    N = h.shape[0]
    phi = surface.phi
    a = varpi_h ** 2 + varpi_F ** 2 * surface.trace
    s1 = sigma1_sq
    f_abs_sq = np.abs(f) ** 2

    trace_C = cp.real(cp.trace(C)) if _is_expr(C) else float(np.real(np.trace(C)))
    trace_term = a * trace_C - s1 * varpi_f ** 2 * surface.trace
    noise_gain = f_abs_sq @ phi
    clamped = False

    if surface.lifted:
        if _is_expr(C):
            raise TypeError("lifted surface blocks need a fixed C")
        H = lifted_channel(h, F)
        K1 = H @ C @ herm(H)
        K2 = H @ C @ C @ herm(H)
        V = surface.V
        gain = cp.real(cp.trace(K1 @ V)) if _is_expr(V) else float(np.real(np.trace(K1 @ V)))
        leak = cp.real(cp.trace(K2 @ V)) if _is_expr(V) else float(np.real(np.trace(K2 @ V)))
        e_const = gain - s1 * noise_gain - sigma2_sq
        c_fro = float(np.sum(np.abs(C) ** 2))
        f_terms = s1 ** 2 * varpi_f ** 4 * _sum_squares(phi) + 2 * s1 ** 2 * varpi_f ** 2 * _sum_squares(
            cp.multiply(np.abs(f), phi) if _is_expr(phi) else np.abs(f) * phi
        )
        if _is_expr(V):
            if expansion is None:
                raise ValueError("a lifted variable surface needs an expansion point")
            phi0 = np.real(np.diag(expansion))[:-1]
            a0 = varpi_h ** 2 + varpi_F ** 2 * float(np.sum(phi0))
            l0 = float(np.real(np.trace(K2 @ expansion)))
            product = (cp.square(a + leak) - taylor_square_lower(a - leak, a0 - l0)) / 4
            sq_norm = c_fro * cp.square(a) + 2 * product + f_terms
        else:
            sq_norm = c_fro * a ** 2 + 2 * a * leak + f_terms
        norm_vector = None
        spectral_C = a * C
    else:
        u = surface.u
        d0 = np.conj(h + u @ F)
        gain = cp.real(np.conj(d0) @ C @ d0) if _is_expr(C) else float(np.real(np.conj(d0) @ C @ d0))
        e_const = gain - s1 * float(noise_gain) - sigma2_sq
        Cd0 = C @ d0
        parts = [
            a * (cp.vec(C, order="F") if _is_expr(C) else C.reshape(-1, order="F")),
            np.sqrt(2 * a) * Cd0,
            (s1 * varpi_f ** 2 * phi).astype(complex),
            (np.sqrt(2) * s1 * varpi_f * phi * np.conj(f)).astype(complex),
        ]
        norm_vector = _hstack(parts)
        sq_norm = _sum_squares(norm_vector)
        spectral_C = a * C

    if not _is_expr(sq_norm) and sq_norm < 0:
        logger.warning("bernstein_norm_clamped", value=float(sq_norm))
        sq_norm, clamped = 0.0, True
    M = surface.M
    noise_block = -s1 * varpi_f ** 2 * _diag(phi)
    spectral = _bmat([[spectral_C, np.zeros((N, M))], [np.zeros((M, N)), noise_block]])
    return BernsteinBlock(
        trace_term=trace_term,
        e_const=e_const,
        sq_norm=sq_norm,
        spectral=spectral,
        rho=rho,
        norm_vector=norm_vector,
        clamped=clamped,
    )


@dataclass
class BernsteinConstraints:
    trace: Operand
    norm: Operand
    spectral: LmiBlock
    y_nonneg: Operand
    norm_is_soc: bool = field(default=True)


def bernstein_trace(block: BernsteinBlock, x_tilde: Operand, y_tilde: Operand):
    """Left side of the trace condition for given norm and spectral slacks"""
    rho = block.rho
    return block.trace_term - np.sqrt(2 * np.log(1 / rho)) * x_tilde + np.log(rho) * y_tilde + block.e_const


def bernstein_constraints(
    block: BernsteinBlock,
    x_tilde: Operand,
    y_tilde: Operand,
    x_expansion: Optional[float] = None,
    name: str = "bernstein",
) -> BernsteinConstraints:
    """The three deterministic conditions that imply Pr{rate >= target} >= 1 - rho.

    Returned as cvxpy constraints (or booleans for numeric input). Without an
    expansion point the norm condition is the exact second-order cone; with one
    it is the tangent bound sq_norm <= 2 x0 x - x0^2.
    """
    trace = bernstein_trace(block, x_tilde, y_tilde)
    if x_expansion is None:
        if block.norm_vector is None:
            raise ValueError("exact norm form needs the stacked norm vector")
        norm = cp.norm(block.norm_vector, 2) <= x_tilde if _is_expr(block.norm_vector, x_tilde) else (
            np.linalg.norm(block.norm_vector) <= x_tilde + 1e-12
        )
        soc = True
    else:
        bound = taylor_square_lower(x_tilde, x_expansion)
        norm = block.sq_norm <= bound if _is_expr(block.sq_norm, x_tilde) else block.sq_norm <= bound + 1e-12
        soc = False
    size = block.spectral_size
    spectral = LmiBlock(f"{name}:spectral", y_tilde * np.eye(size) + block.spectral)
    if _is_expr(trace, y_tilde):
        return BernsteinConstraints(trace >= 0, norm, spectral, y_tilde >= 0, soc)
    return BernsteinConstraints(trace >= -1e-12, norm, spectral, y_tilde >= 0, soc)


def bernstein_margin(block: BernsteinBlock) -> float:
    """Closed-form left side of the trace condition with the tightest slacks"""
    sq = max(float(_value(block.sq_norm)), 0.0)
    spectral = _value(block.spectral)
    y = max(0.0, -float(np.linalg.eigvalsh((spectral + np.conj(spectral).T) / 2)[0]))
    numeric = replace(block, trace_term=_value(block.trace_term), e_const=_value(block.e_const))
    return float(bernstein_trace(numeric, np.sqrt(sq), y))


def bernstein_certified_rate(
    k: int,
    W: np.ndarray,
    u: np.ndarray,
    h: np.ndarray,
    f: np.ndarray,
    F: np.ndarray,
    varpi: Tuple[float, float, float],
    sigma1_sq: float,
    sigma2_sq: float,
    rho: float,
    users: Sequence[int],
    upper: float,
    tol: float = 1e-6,
) -> float:
    """Largest rate target whose outage condition holds for user k, by bisection"""
    surface = SurfaceGram.from_profile(u)
    others = sum((W[j] for j in users if j != k), np.zeros_like(W[k]))

    def margin(rate: float) -> float:
        gamma = 2.0 ** rate - 1.0
        C = W[k] / gamma - others
        block = bernstein_blocks(C, surface, h, f, F, *varpi, sigma1_sq, sigma2_sq, rho)
        return bernstein_margin(block)

    lo, hi = 0.0, max(upper, tol)
    if margin(tol) < 0:
        return 0.0
    lo = tol
    if margin(hi) >= 0:
        return hi
    while hi - lo > tol:
        mid = (lo + hi) / 2
        if margin(mid) >= 0:
            lo = mid
        else:
            hi = mid
    return lo


def bernstein_explicit(
    C: np.ndarray,
    u: np.ndarray,
    h: np.ndarray,
    f: np.ndarray,
    F: np.ndarray,
    varpi_h: float,
    varpi_f: float,
    varpi_F: float,
    sigma1_sq: float,
    sigma2_sq: float,
) -> Tuple[np.ndarray, np.ndarray, float]:
    """Full (E, e, e0) of x^H E x + 2Re{e^H x} + e0 in the standardized error
    x = conj([i_h; vec(I_F); i_f]), i.e. dh = varpi_h i_h, dF = varpi_F I_F, df = varpi_f i_f.
    """
    N, M = h.shape[0], u.shape[0]
    phi = np.diag(np.abs(u) ** 2)
    P = np.hstack([varpi_h * np.eye(N), varpi_F * np.kron(np.eye(N), np.conj(u)[None, :])])
    d0 = np.conj(h + u @ F)
    E_hF = herm(P) @ C @ P
    E = np.block(
        [
            [E_hF, np.zeros((E_hF.shape[0], M))],
            [np.zeros((M, E_hF.shape[0])), -sigma1_sq * varpi_f ** 2 * phi],
        ]
    )
    e = np.concatenate([herm(P) @ C @ d0, -sigma1_sq * varpi_f * phi @ np.conj(f)])
    e0 = float(np.real(np.conj(d0) @ C @ d0) - sigma1_sq * np.real(f @ phi @ np.conj(f)) - sigma2_sq)
    return E, e, e0


# ------------------------------------------------------------- convexification aids
def cub(x: Operand, y: Operand, t: float):
    """t/2 x^2 + y^2/(2t), an upper bound of x*y for x, y >= 0, tight at t = y/x"""
    if t <= 0:
        raise ValueError("the bound parameter must be positive")
    return t / 2 * _square(x) + _square(y) / (2 * t)


def taylor_square_lower(z: Operand, z0) -> Operand:
    """2Re<z0, z> - ||z0||^2, the tangent minorant of ||z||^2 at z0 (scalars or matrices)"""
    z0 = np.asarray(z0)
    if _is_expr(z):
        if z0.ndim == 0:
            return 2 * cp.real(np.conj(z0) * z) - float(np.abs(z0) ** 2)
        return 2 * cp.real(cp.sum(cp.multiply(np.conj(z0), z))) - float(np.sum(np.abs(z0) ** 2))
    z = np.asarray(z)
    return float(2 * np.real(np.sum(np.conj(z0) * z)) - np.sum(np.abs(z0) ** 2))


def exp_tangent(x: Operand, x_bar: float):
    """exp(x_bar) (x - x_bar + 1), the tangent minorant of exp at x_bar"""
    return np.exp(x_bar) * (x - x_bar + 1)
