"""q-block transfer matrices and their WKB-type asymptotic analysis.

A block is the product of q one-step matrices [[z - v, -1], [1, 0]] (the
"one-step matrix"; the diagonal difference operator of the determinant
machinery is a different object that shares its traditional symbol).  Each
block has unit determinant, eigenvalues multiplying to 1, and is
diagonalized by U = [[l1 - Q, l2 - Q], [P, P]].  The vector recursion
S_{m+1} = (I + W_m) diag(l1, l2) S_m with W_m = U_{m+1}^{-1}(U_m - U_{m+1})
is integrated in a scaled form: states store S_m / p_m together with
log p_m, where p_m = prod kappa_j (1 + alpha_j), so long runs at Im z > 0
never overflow.
"""

from __future__ import annotations

import cmath
from dataclasses import dataclass

import numpy as np

from .cxmat import eig2
from .errors import DegenerateEigenvaluesError
from .lattice import Potential
from .spectral import lambda_site


@dataclass(frozen=True)
class TransferBlock:
    """Product of q one-step matrices with its polynomial entries.

    Layout: T = [[P_tilde, Q_tilde], [P, Q]].
    """

    q: int
    z: complex
    T: np.ndarray
    block_potential: np.ndarray

    @property
    def P_tilde(self) -> complex:
        return complex(self.T[0, 0])

    @property
    def Q_tilde(self) -> complex:
        return complex(self.T[0, 1])

    @property
    def P(self) -> complex:
        return complex(self.T[1, 0])

    @property
    def Q(self) -> complex:
        return complex(self.T[1, 1])


def one_step_matrix(z: complex, v: float = 0.0) -> np.ndarray:
    return np.array([[z - v, -1.0], [1.0, 0.0]], dtype=np.complex128)


def build_block(v_block, z: complex) -> TransferBlock:
    """T = (O + V_q) ... (O + V_1): the site with the lowest index acts first."""
    vb = np.asarray(v_block, dtype=np.float64)
    t = np.eye(2, dtype=np.complex128)
    for v in vb:
        t = one_step_matrix(z, float(v)) @ t
    return TransferBlock(q=len(vb), z=complex(z), T=t, block_potential=vb)


@dataclass(frozen=True)
class BlockEigen:
    """Eigen-data of one block: values, trace defect, and diagonalizer."""

    block: TransferBlock
    lambda1: complex
    lambda2: complex
    d_value: complex
    U: np.ndarray
    U_inv: np.ndarray


def block_eigen(block: TransferBlock, degeneracy_tol: float = 1e-8) -> BlockEigen:
    """Eigenvalues by the quadratic formula (larger modulus first), the trace
    defect against the free block, and U with its explicit 2x2 inverse."""
    pair = eig2(block.T, degeneracy_tol=degeneracy_tol)
    l1, l2 = pair.values
    k = lambda_site(block.z, 0.0)
    q = block.q
    d_value = (block.P_tilde + block.Q) - (k ** q + k ** -q)
    p, qq = block.P, block.Q
    u = np.array([[l1 - qq, l2 - qq], [p, p]], dtype=np.complex128)
    det_u = p * (l1 - l2)
    if det_u == 0:
        raise DegenerateEigenvaluesError("diagonalizer is singular (P = 0 or zero gap)")
    u_inv = np.array([[p, qq - l2], [-p, l1 - qq]], dtype=np.complex128) / det_u
    return BlockEigen(block=block, lambda1=l1, lambda2=l2, d_value=d_value, U=u, U_inv=u_inv)


@dataclass(frozen=True)
class WStep:
    """U_{m+1}^{-1}(U_m - U_{m+1}) via the explicit entry formula, with the
    direct matrix product retained for cross-checking."""

    alpha: complex
    beta: complex
    gamma: complex
    delta: complex
    W_direct: np.ndarray

    @property
    def W(self) -> np.ndarray:
        return np.array([[self.alpha, self.beta], [self.gamma, self.delta]])


def w_step(e_prev: BlockEigen, e_next: BlockEigen) -> WStep:
    p0, q0 = e_prev.block.P, e_prev.block.Q
    p1, q1 = e_next.block.P, e_next.block.Q
    l10, l20 = e_prev.lambda1, e_prev.lambda2
    l11, l21 = e_next.lambda1, e_next.lambda2
    gap = l11 - l21
    if p1 == 0 or gap == 0:
        raise ZeroDivisionError("w_step needs P_{m+1} != 0 and a nonzero eigen gap")
    den = p1 * gap
    one_plus_alpha = (p1 * (l10 - q0) - p0 * (l21 - q1)) / den
    beta = (p1 * (l20 - q0) - p0 * (l21 - q1)) / den
    gamma = (-p1 * (l10 - q0) + p0 * (l11 - q1)) / den
    one_plus_delta = (-p1 * (l20 - q0) + p0 * (l11 - q1)) / den
    direct = e_next.U_inv @ (e_prev.U - e_next.U)
    return WStep(alpha=one_plus_alpha - 1.0, beta=beta, gamma=gamma,
                 delta=one_plus_delta - 1.0, W_direct=direct)


def alpha_decompose(e_prev: BlockEigen, e_next: BlockEigen) -> tuple:
    """The five-term splitting of 1 + alpha; t1+..+t5 reproduces alpha.

    On the real band t1, t3, t4 are purely imaginary while t2, t5 are real
    (the entry polynomials are real there and the eigen gap is imaginary).
    """
    p0, q0, pt0 = e_prev.block.P, e_prev.block.Q, e_prev.block.P_tilde
    p1, q1, pt1 = e_next.block.P, e_next.block.Q, e_next.block.P_tilde
    gap1 = e_next.lambda1 - e_next.lambda2
    gap0 = e_prev.lambda1 - e_prev.lambda2
    if p1 == 0 or gap1 == 0:
        raise ZeroDivisionError("alpha_decompose needs P_{m+1} != 0 and a nonzero gap")
    t1 = (p0 * q1 - p1 * q0) / (p1 * gap1)
    t2 = -(p1 - p0) / (2.0 * p1)
    t3 = (p1 - p0) * (pt1 + q1) / (2.0 * p1 * gap1)
    t4 = -(pt1 - pt0 + q1 - q0) / (2.0 * gap1)
    t5 = -(gap1 - gap0) / (2.0 * gap1)
    return t1, t2, t3, t4, t5


@dataclass
class AsymptoticState:
    """One step of the scaled recursion.

    ``s_scaled`` is S_m / p_m and ``p_log`` is log p_m, so
    S_m = s_scaled * exp(p_log).  ``W`` and the entries (alpha..delta)
    belong to the step m -> m+1 and are None on the final state; phi/nu
    are the Volterra-sum quantities (filled when Im z > 0).
    """

    m: int
    s_scaled: np.ndarray
    p_log: complex
    kappa: complex
    lambda2: complex
    eigen: BlockEigen
    W: np.ndarray | None = None
    alpha: complex | None = None
    beta: complex | None = None
    gamma: complex | None = None
    delta: complex | None = None
    phi: complex | None = None
    nu: complex | None = None

    @property
    def S(self) -> np.ndarray:
        return self.s_scaled * cmath.exp(self.p_log)

    @property
    def p(self) -> complex:
        return cmath.exp(self.p_log)


class _BlockSource:
    """Blocks of v in forward site order, or of the reversed potential
    w_j = v_{N-j} when running the truncation backward (N = q * m_total)."""

    def __init__(self, v: Potential, q: int, z: complex, ordering: str, m_total: int):
        if ordering not in ("forward", "backward"):
            raise ValueError("ordering must be 'forward' or 'backward'")
        self.v = v
        self.q = q
        self.z = complex(z)
        self.ordering = ordering
        self.n_total = q * m_total

    def site_value(self, n: int) -> float:
        if self.ordering == "forward":
            return self.v.value(n)
        return self.v.value(self.n_total - n)

    def block(self, m: int) -> TransferBlock:
        sites = [self.site_value(m * self.q + i) for i in range(1, self.q + 1)]
        return build_block(sites, self.z)


def run_s_recursion(v: Potential, q: int, z: complex, m_max: int,
                    ordering: str = "forward",
                    degeneracy_tol: float = 1e-8,
                    recon_tol: float = 1e-9) -> list[AsymptoticState]:
    """Integrate S_{m+1} = (I + W_m) diag(l1, l2) S_m for m = 0..m_max.

    The initial vector is S_0 = (k - 1/k)(k^q - k^{-q})^{-1} (1, 0)^t.  The
    reconstruction X_{mq} = U_m S_m is checked against the scalar three-term
    recursion block by block (in the same scaling); a residual above
    recon_tol raises.  Backward ordering consumes the potential of the
    truncation N = q*m_max from the top down.
    """
    if m_max < 1:
        raise ValueError("m_max must be at least 1")
    src = _BlockSource(v, q, z, ordering, m_max)
    k = lambda_site(z, 0.0)
    eigens = []
    for m in range(m_max + 1):
        try:
            eigens.append(block_eigen(src.block(m), degeneracy_tol=degeneracy_tol))
        except DegenerateEigenvaluesError as exc:
            raise DegenerateEigenvaluesError(f"degenerate eigen pair at block m={m}: {exc}") from exc
    s0 = (k - 1.0 / k) / (k ** q - k ** -q)
    cur = np.array([s0, 0.0], dtype=np.complex128)
    p_log = 0.0 + 0.0j
    states: list[AsymptoticState] = []
    worst_recon = 0.0
    for m in range(m_max):
        e_m, e_m1 = eigens[m], eigens[m + 1]
        ws = w_step(e_m, e_m1)
        growth = e_m.lambda1 * (1.0 + ws.alpha)
        if growth == 0:
            raise ZeroDivisionError(f"kappa (1 + alpha) vanished at m={m}")
        states.append(AsymptoticState(
            m=m, s_scaled=cur.copy(), p_log=p_log, kappa=e_m.lambda1,
            lambda2=e_m.lambda2, eigen=e_m, W=ws.W_direct,
            alpha=ws.alpha, beta=ws.beta, gamma=ws.gamma, delta=ws.delta,
        ))
        lam_s = np.array([e_m.lambda1 * cur[0], e_m.lambda2 * cur[1]])
        nxt = (lam_s + ws.W_direct @ lam_s) / growth

        # scalar three-term advance of X_mq = U_m S_m across this block
        x_cur = complex(e_m.U[0, 0] * cur[0] + e_m.U[0, 1] * cur[1])
        x_prev = complex(e_m.U[1, 0] * cur[0] + e_m.U[1, 1] * cur[1])
        for i in range(1, q + 1):
            vn = src.site_value(m * q + i)
            x_prev, x_cur = x_cur, (src.z - vn) * x_cur - x_prev
        tgt = growth * (e_m1.U @ nxt)
        scale = max(abs(x_cur), abs(x_prev), abs(tgt[0]), abs(tgt[1]), 1e-290)
        res = max(abs(tgt[0] - x_cur), abs(tgt[1] - x_prev)) / scale
        worst_recon = max(worst_recon, res)

        p_log += cmath.log(growth)
        cur = nxt
    states.append(AsymptoticState(
        m=m_max, s_scaled=cur.copy(), p_log=p_log, kappa=eigens[m_max].lambda1,
        lambda2=eigens[m_max].lambda2, eigen=eigens[m_max],
    ))
    if worst_recon > recon_tol:
        raise ArithmeticError(
            f"U_m S_m fails the three-term recursion: residual {worst_recon:.3e}"
        )
    if complex(z).imag > 0:
        _fill_split(states)
    return states


def _fill_split(states: list[AsymptoticState]) -> None:
    p_log, phi, nu = asymptotic_split(states, check=False)
    for st, f, n in zip(states, phi, nu):
        st.phi = complex(f)
        st.nu = complex(n)


def asymptotic_split(states: list[AsymptoticState], check: bool = True,
                     tol: float = 1e-9) -> tuple:
    """(log p_n, phi_n, nu_n) from the Volterra sums of the split recursion.

    phi_{n} = 1 + sum_{j<n} q_j p_{j+1}^{-1} kappa_j^{-1} beta_j y_j and
    y_n = sum_{j<n} p_j q_{j+1}^{-1} kappa_j gamma_j phi_j, with
    nu_n = q_n p_n^{-1} y_n.  The sums are advanced directly in the scaled
    variable nu (y itself grows like kappa^{2n} and would overflow):

        nu_{j+1}  = nu_j (1+delta_j) / (kappa_j^2 (1+alpha_j))
                    + gamma_j phi_j / (1+alpha_j)
        phi_{j+1} = phi_j + beta_j nu_j / (kappa_j^2 (1+alpha_j))

    With check=True the reconstruction s_scaled = s_0 (phi, nu) is verified
    against the direct evolution.
    """
    kappas = [st.kappa for st in states]
    if min(abs(k) for k in kappas) <= 1.0:
        raise ValueError("asymptotic_split needs |kappa| > 1 (Im z > 0)")
    n_states = len(states)
    p_log = np.array([st.p_log for st in states])
    phi = np.empty(n_states, dtype=np.complex128)
    nu = np.empty(n_states, dtype=np.complex128)
    phi[0] = 1.0
    nu[0] = 0.0
    for j in range(n_states - 1):
        st = states[j]
        shrink = 1.0 / (st.kappa * st.kappa * (1.0 + st.alpha))
        nu[j + 1] = nu[j] * (1.0 + st.delta) * shrink + st.gamma * phi[j] / (1.0 + st.alpha)
        phi[j + 1] = phi[j] + st.beta * nu[j] * shrink
    if check:
        s0 = states[0].s_scaled[0]
        worst = 0.0
        for st, f, n in zip(states, phi, nu):
            ref = np.array([s0 * f, s0 * n])
            worst = max(worst, float(np.max(np.abs(ref - st.s_scaled)))
                        / max(1e-290, float(np.max(np.abs(st.s_scaled)))))
        if worst > tol:
            raise ArithmeticError(f"split reconstruction residual {worst:.3e}")
    return p_log, phi, nu


def modified_jost(v: Potential, q: int, z: complex, n_trunc: int) -> complex:
    """f_N = x_0^N * (k^N prod_{j<m} (1 + alpha_j) kappa_j)^{-1}, N = q m.

    x_0^N comes from the backward Jost recursion on the truncation
    v * chi_{j<N}; the normalizer accumulates the backward-ordered block
    data in log form, so the k^N factors cancel without overflow.
    """
    from .scattering import jost_solve

    if n_trunc % q != 0:
        raise ValueError("n_trunc must be a multiple of q")
    m_total = n_trunc // q
    vt = v.truncated(n_trunc)
    sol = jost_solve(vt, z, n_trunc)
    mant0 = complex(sol.mant[2])
    if mant0 == 0:
        raise ZeroDivisionError("Jost value at the origin vanished")
    log_x0 = cmath.log(mant0) + float(sol.glog[2])
    src = _BlockSource(vt, q, z, "backward", m_total)
    k = sol.k
    norm_log = n_trunc * cmath.log(k)
    e_prev = block_eigen(src.block(0))
    for m in range(m_total):
        e_next = block_eigen(src.block(m + 1))
        ws = w_step(e_prev, e_next)
        growth = e_prev.lambda1 * (1.0 + ws.alpha)
        if growth == 0:
            raise ZeroDivisionError(f"vanishing normalizer factor at block m={m}")
        norm_log += cmath.log(growth)
        e_prev = e_next
    return cmath.exp(log_x0 - norm_log)


def gronwall_bound(v_seq) -> np.ndarray:
    """Discrete Gronwall majorant: out[i] bounds x_{i+1} whenever x_0 = 1 and
    x_{n+1} <= sum_{j<=n} v_j x_j; out[0] = v_0, out[i] = v_0 exp(v_1+..+v_i)."""
    v = np.asarray(v_seq, dtype=np.float64)
    if v.ndim != 1 or v.size == 0:
        raise ValueError("need a nonempty 1-d sequence")
    if np.any(v < 0):
        raise ValueError("gronwall_bound needs nonnegative entries")
    out = np.empty_like(v)
    out[0] = v[0]
    if v.size > 1:
        out[1:] = v[0] * np.exp(np.cumsum(v[1:]))
    return out
