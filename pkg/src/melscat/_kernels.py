"""JIT-compiled numeric kernels.

Internal module. Everything here works on flat arrays so the hot loops can
be compiled by numba; the public modules build the packed representations
and keep the friendly types. When numba is unavailable the kernels run as
plain Python (slow but correct).

Conventions
-----------
* Evaluation vector ``xs`` (length 2n+2d+2) laid out as
  ``[p_0..p_{n-1}, q_0..q_{n-1}, I_0..I_{d-1}, theta_0..theta_{d-1}, t, eps]``.
* ODE state ``z`` (length 2n+2d+1) is the same without the eps slot.
* Potentials are trig polynomials ``V(q) = sum_k c_k (cos(2 pi k q) - 1)``
  stored as concatenated coefficient arrays with per-pendulum offsets.
* The rotator Hamiltonian is a monomial list ``h0 = sum_m c_m prod I_j^e_mj``.
* Field kinds: 0 none, 1 compiled component programs (2n+2d entries in the
  order p.., q.., I.., theta..), 2 linear damping (consts = gamma_p, gamma_I),
  3 a single compiled Hamiltonian program differentiated on the fly.
"""
from __future__ import annotations

import numpy as np

try:
    from numba import njit

    HAVE_NUMBA = True
except ImportError:  # pragma: no cover - exercised only without numba
    HAVE_NUMBA = False

    def njit(*args, **kwargs):
        if args and callable(args[0]):
            return args[0]

        def wrap(f):
            return f

        return wrap


# --- stack program opcodes --------------------------------------------------
OP_CONST = 0
OP_VAR = 1
OP_ADD = 2
OP_SUB = 3
OP_MUL = 4
OP_DIV = 5
OP_POW = 6
OP_NEG = 7
OP_SIN = 8
OP_COS = 9
OP_EXP = 10
OP_TANH = 11
OP_SECH = 12
OP_SQRT = 13

BIN_OPS = {"+": OP_ADD, "-": OP_SUB, "*": OP_MUL, "/": OP_DIV, "^": OP_POW}
FUNC_OPS = {"sin": OP_SIN, "cos": OP_COS, "exp": OP_EXP, "tanh": OP_TANH,
            "sech": OP_SECH, "sqrt": OP_SQRT}

# field kinds
FIELD_NONE = 0
FIELD_COMPONENTS = 1
FIELD_DAMPING = 2
FIELD_HAMILTONIAN = 3

# integrator status codes
OK = 0
ERR_MAX_STEPS = 1
ERR_NONFINITE = 2
ERR_STALL = 3

_STACK_MAX = 64


@njit(cache=True)
def vm_eval(code, consts, xs):
    """Run one stack program and return its value."""
    stack = np.empty(_STACK_MAX)
    sp = 0
    i = 0
    m = code.size
    while i < m:
        op = code[i]
        arg = code[i + 1]
        i += 2
        if op == OP_CONST:
            stack[sp] = consts[arg]
            sp += 1
        elif op == OP_VAR:
            stack[sp] = xs[arg]
            sp += 1
        elif op == OP_ADD:
            sp -= 1
            stack[sp - 1] = stack[sp - 1] + stack[sp]
        elif op == OP_SUB:
            sp -= 1
            stack[sp - 1] = stack[sp - 1] - stack[sp]
        elif op == OP_MUL:
            sp -= 1
            stack[sp - 1] = stack[sp - 1] * stack[sp]
        elif op == OP_DIV:
            sp -= 1
            stack[sp - 1] = stack[sp - 1] / stack[sp]
        elif op == OP_POW:
            sp -= 1
            stack[sp - 1] = stack[sp - 1] ** stack[sp]
        elif op == OP_NEG:
            stack[sp - 1] = -stack[sp - 1]
        elif op == OP_SIN:
            stack[sp - 1] = np.sin(stack[sp - 1])
        elif op == OP_COS:
            stack[sp - 1] = np.cos(stack[sp - 1])
        elif op == OP_EXP:
            stack[sp - 1] = np.exp(stack[sp - 1])
        elif op == OP_TANH:
            stack[sp - 1] = np.tanh(stack[sp - 1])
        elif op == OP_SECH:
            stack[sp - 1] = 1.0 / np.cosh(stack[sp - 1])
        else:  # OP_SQRT
            stack[sp - 1] = np.sqrt(stack[sp - 1])
    return stack[0]


@njit(cache=True)
def vm_eval_dual(code, consts, xs, seed):
    """Forward-mode pass: returns (value, directional derivative along seed)."""
    val = np.empty(_STACK_MAX)
    dot = np.empty(_STACK_MAX)
    sp = 0
    i = 0
    m = code.size
    while i < m:
        op = code[i]
        arg = code[i + 1]
        i += 2
        if op == OP_CONST:
            val[sp] = consts[arg]
            dot[sp] = 0.0
            sp += 1
        elif op == OP_VAR:
            val[sp] = xs[arg]
            dot[sp] = seed[arg]
            sp += 1
        elif op == OP_ADD:
            sp -= 1
            val[sp - 1] = val[sp - 1] + val[sp]
            dot[sp - 1] = dot[sp - 1] + dot[sp]
        elif op == OP_SUB:
            sp -= 1
            val[sp - 1] = val[sp - 1] - val[sp]
            dot[sp - 1] = dot[sp - 1] - dot[sp]
        elif op == OP_MUL:
            sp -= 1
            a = val[sp - 1]
            b = val[sp]
            val[sp - 1] = a * b
            dot[sp - 1] = dot[sp - 1] * b + a * dot[sp]
        elif op == OP_DIV:
            sp -= 1
            a = val[sp - 1]
            b = val[sp]
            val[sp - 1] = a / b
            dot[sp - 1] = (dot[sp - 1] * b - a * dot[sp]) / (b * b)
        elif op == OP_POW:
            sp -= 1
            a = val[sp - 1]
            da = dot[sp - 1]
            b = val[sp]
            db = dot[sp]
            v = a ** b
            val[sp - 1] = v
            if db == 0.0:
                dot[sp - 1] = 0.0 if da == 0.0 else b * a ** (b - 1.0) * da
            else:
                dot[sp - 1] = v * (db * np.log(a) + b * da / a)
        elif op == OP_NEG:
            val[sp - 1] = -val[sp - 1]
            dot[sp - 1] = -dot[sp - 1]
        elif op == OP_SIN:
            a = val[sp - 1]
            val[sp - 1] = np.sin(a)
            dot[sp - 1] = np.cos(a) * dot[sp - 1]
        elif op == OP_COS:
            a = val[sp - 1]
            val[sp - 1] = np.cos(a)
            dot[sp - 1] = -np.sin(a) * dot[sp - 1]
        elif op == OP_EXP:
            a = np.exp(val[sp - 1])
            val[sp - 1] = a
            dot[sp - 1] = a * dot[sp - 1]
        elif op == OP_TANH:
            a = np.tanh(val[sp - 1])
            val[sp - 1] = a
            dot[sp - 1] = (1.0 - a * a) * dot[sp - 1]
        elif op == OP_SECH:
            a = val[sp - 1]
            s = 1.0 / np.cosh(a)
            val[sp - 1] = s
            dot[sp - 1] = -s * np.tanh(a) * dot[sp - 1]
        else:  # OP_SQRT
            a = np.sqrt(val[sp - 1])
            val[sp - 1] = a
            dot[sp - 1] = 0.5 / a * dot[sp - 1]
    return val[0], dot[0]


# --- trig-polynomial potentials ----------------------------------------------

TWO_PI = 2.0 * np.pi


@njit(cache=True)
def pot_value(pc, lo, hi, q):
    v = 0.0
    for k in range(lo, hi):
        kk = float(k - lo + 1)
        v += pc[k] * (np.cos(TWO_PI * kk * q) - 1.0)
    return v


@njit(cache=True)
def pot_dv(pc, lo, hi, q):
    v = 0.0
    for k in range(lo, hi):
        kk = float(k - lo + 1)
        v -= pc[k] * TWO_PI * kk * np.sin(TWO_PI * kk * q)
    return v


@njit(cache=True)
def pot_d2v(pc, lo, hi, q):
    v = 0.0
    for k in range(lo, hi):
        kk = float(k - lo + 1)
        v -= pc[k] * TWO_PI * TWO_PI * kk * kk * np.cos(TWO_PI * kk * q)
    return v


@njit(cache=True)
def omega_fill(h0c, h0e, I, out):
    """out_j = d h0 / d I_j for the monomial representation."""
    d = I.size
    for j in range(d):
        out[j] = 0.0
    for m in range(h0c.size):
        for j in range(d):
            e = h0e[m, j]
            if e == 0:
                continue
            term = h0c[m] * e
            for k in range(d):
                ek = h0e[m, k]
                if k == j:
                    ek -= 1
                if ek > 0:
                    base = I[k]
                    for _ in range(ek):
                        term *= base
            out[j] += term


# --- perturbation field -------------------------------------------------------

@njit(cache=True)
def field_component(fkind, codes, centry, fconsts, xs, seed, n, d, cls, idx):
    """One component of X^1 at the point encoded in xs.

    cls: 0 -> p, 1 -> q, 2 -> I, 3 -> theta; idx within the class.
    """
    if fkind == FIELD_NONE:
        return 0.0
    if fkind == FIELD_DAMPING:
        # consts = [gamma_p (n), gamma_I (d)]
        if cls == 0:
            return -fconsts[idx] * xs[idx]
        if cls == 2:
            return -fconsts[n + idx] * xs[2 * n + idx]
        return 0.0
    if fkind == FIELD_COMPONENTS:
        if cls == 0:
            prog = idx
        elif cls == 1:
            prog = n + idx
        elif cls == 2:
            prog = 2 * n + idx
        else:
            prog = 2 * n + d + idx
        lo = centry[prog]
        hi = centry[prog + 1]
        return vm_eval(codes[lo:hi], fconsts, xs)
    # FIELD_HAMILTONIAN: cls p -> -dH1/dq, q -> +dH1/dp, I -> -dH1/dtheta,
    # theta -> +dH1/dI
    for k in range(seed.size):
        seed[k] = 0.0
    if cls == 0:
        slot = n + idx
        sign = -1.0
    elif cls == 1:
        slot = idx
        sign = 1.0
    elif cls == 2:
        slot = 2 * n + d + idx
        sign = -1.0
    else:
        slot = 2 * n + idx
        sign = 1.0
    seed[slot] = 1.0
    lo = centry[0]
    hi = centry[1]
    _, dot = vm_eval_dual(codes[lo:hi], fconsts, xs, seed)
    return sign * dot


@njit(cache=True)
def _rhs(z, out, mode, eps, n, d, sgn, pc, poff, h0c, h0e,
         fkind, codes, centry, fconsts, xs, seed):
    """Time derivative of the extended state.

    mode 0: full system; mode 1: restriction to the p=q=0 slice (pendulum
    derivatives forced to zero); mode 2+i: single pendulum of index i plus
    its 2x2 tangent flow, state (p, q, dp, dq), no perturbation.
    """
    if mode >= 2:
        ip = mode - 2
        s0 = sgn[ip]
        out[0] = -s0 * pot_dv(pc, poff[ip], poff[ip + 1], z[1])
        out[1] = s0 * z[0]
        out[2] = -s0 * pot_d2v(pc, poff[ip], poff[ip + 1], z[1]) * z[3]
        out[3] = s0 * z[2]
        return
    if mode == 1:
        for i in range(2 * n):
            out[i] = 0.0
    else:
        for i in range(n):
            out[i] = -sgn[i] * pot_dv(pc, poff[i], poff[i + 1], z[n + i])
            out[n + i] = sgn[i] * z[i]
    for j in range(d):
        out[2 * n + j] = 0.0
    # theta-dot = omega(I)
    for k in range(2 * n + 2 * d + 1):
        xs[k] = z[k]
    xs[2 * n + 2 * d + 1] = eps
    Ivec = xs[2 * n:2 * n + d]
    om = out[2 * n + d:2 * n + 2 * d]
    omega_fill(h0c, h0e, Ivec, om)
    out[2 * n + 2 * d] = 1.0  # dt/ds
    if eps != 0.0 and fkind != FIELD_NONE:
        if mode != 1:
            for i in range(n):
                out[i] += eps * field_component(fkind, codes, centry, fconsts,
                                                xs, seed, n, d, 0, i)
                out[n + i] += eps * field_component(fkind, codes, centry,
                                                    fconsts, xs, seed, n, d,
                                                    1, i)
        for j in range(d):
            out[2 * n + j] += eps * field_component(fkind, codes, centry,
                                                    fconsts, xs, seed, n, d,
                                                    2, j)
            out[2 * n + d + j] += eps * field_component(fkind, codes, centry,
                                                        fconsts, xs, seed,
                                                        n, d, 3, j)


# --- embedded Runge-Kutta 7(8) pair -------------------------------------------

_A = np.zeros((13, 12))
_A[1, 0] = 2 / 27
_A[2, :2] = (1 / 36, 1 / 12)
_A[3, :3] = (1 / 24, 0, 1 / 8)
_A[4, :4] = (5 / 12, 0, -25 / 16, 25 / 16)
_A[5, :5] = (1 / 20, 0, 0, 1 / 4, 1 / 5)
_A[6, :6] = (-25 / 108, 0, 0, 125 / 108, -65 / 27, 125 / 54)
_A[7, :7] = (31 / 300, 0, 0, 0, 61 / 225, -2 / 9, 13 / 900)
_A[8, :8] = (2, 0, 0, -53 / 6, 704 / 45, -107 / 9, 67 / 90, 3)
_A[9, :9] = (-91 / 108, 0, 0, 23 / 108, -976 / 135, 311 / 54, -19 / 60,
             17 / 6, -1 / 12)
_A[10, :10] = (2383 / 4100, 0, 0, -341 / 164, 4496 / 1025, -301 / 82,
               2133 / 4100, 45 / 82, 45 / 164, 18 / 41)
_A[11, :11] = (3 / 205, 0, 0, 0, 0, -6 / 41, -3 / 205, -3 / 41, 3 / 41,
               6 / 41, 0)
_A[12, :12] = (-1777 / 4100, 0, 0, -341 / 164, 4496 / 1025, -289 / 82,
               2193 / 4100, 51 / 82, 33 / 164, 12 / 41, 0, 1)

_B8 = np.array([0, 0, 0, 0, 0, 34 / 105, 9 / 35, 9 / 35, 9 / 280, 9 / 280,
                0, 41 / 840, 41 / 840])
_B7 = np.array([41 / 840, 0, 0, 0, 0, 34 / 105, 9 / 35, 9 / 35, 9 / 280,
                9 / 280, 41 / 840, 0, 0])
_ERRW = _B7 - _B8


@njit(cache=True)
def _rk_step(z, h, eps, mode, n, d, sgn, pc, poff, h0c, h0e,
             fkind, codes, centry, fconsts, xs, seed, stages, ztmp, znew, errv):
    """One embedded step of size h from z; fills znew and errv."""
    nz = z.size
    _rhs(z, stages[0], mode, eps, n, d, sgn, pc, poff, h0c, h0e,
         fkind, codes, centry, fconsts, xs, seed)
    for i in range(1, 13):
        for k in range(nz):
            acc = 0.0
            for j in range(i):
                a = _A[i, j]
                if a != 0.0:
                    acc += a * stages[j][k]
            ztmp[k] = z[k] + h * acc
        _rhs(ztmp, stages[i], mode, eps, n, d, sgn, pc, poff, h0c, h0e,
             fkind, codes, centry, fconsts, xs, seed)
    for k in range(nz):
        acc = 0.0
        ea = 0.0
        for i in range(13):
            b = _B8[i]
            if b != 0.0:
                acc += b * stages[i][k]
            w = _ERRW[i]
            if w != 0.0:
                ea += w * stages[i][k]
        znew[k] = z[k] + h * acc
        errv[k] = h * ea


@njit(cache=True, nogil=True)
def integrate(z0, s_target, eps, mode, atol, rtol, h_init, h_max, max_steps,
              n, d, sgn, pc, poff, h0c, h0e, fkind, codes, centry, fconsts):
    """Adaptive integration of the extended system from s=0 to s=s_target.

    Returns (z_final, status, steps_taken). On failure z_final is the last
    accepted state.
    """
    nz = z0.size
    z = z0.copy()
    if s_target == 0.0:
        return z, OK, 0
    xs = np.empty(2 * n + 2 * d + 2)
    seed = np.empty(2 * n + 2 * d + 2)
    stages = np.empty((13, nz))
    ztmp = np.empty(nz)
    znew = np.empty(nz)
    errv = np.empty(nz)
    direction = 1.0 if s_target > 0 else -1.0
    s = 0.0
    h = min(abs(h_init), abs(s_target), h_max) * direction
    steps = 0
    while True:
        remaining = s_target - s
        if direction * remaining <= 0.0:
            break
        if abs(h) > abs(remaining):
            h = remaining
        _rk_step(z, h, eps, mode, n, d, sgn, pc, poff, h0c, h0e,
                 fkind, codes, centry, fconsts, xs, seed,
                 stages, ztmp, znew, errv)
        errnorm = 0.0
        ok = True
        for k in range(nz):
            if not np.isfinite(znew[k]):
                ok = False
                break
            sc = atol + rtol * max(abs(z[k]), abs(znew[k]))
            e = abs(errv[k]) / sc
            if e > errnorm:
                errnorm = e
        if not ok:
            h *= 0.25
            if abs(h) < 1e-15:
                return z, ERR_NONFINITE, steps
            continue
        if errnorm <= 1.0:
            s += h
            for k in range(nz):
                z[k] = znew[k]
        if errnorm == 0.0:
            fac = 4.0
        else:
            fac = 0.9 * errnorm ** (-1.0 / 8.0)
            if fac > 4.0:
                fac = 4.0
            elif fac < 0.2:
                fac = 0.2
        h *= fac
        if abs(h) > h_max:
            h = h_max * direction
        steps += 1
        if steps >= max_steps:
            return z, ERR_MAX_STEPS, steps
        if abs(h) < 1e-14 * max(1.0, abs(s)):
            return z, ERR_STALL, steps
    # dt/ds = 1 exactly
    if mode < 2:
        z[2 * n + 2 * d] = z0[2 * n + 2 * d] + s_target
    return z, OK, steps


@njit(cache=True, nogil=True)
def integrate_fixed(z0, s_target, eps, mode, nsteps,
                    n, d, sgn, pc, poff, h0c, h0e, fkind, codes, centry,
                    fconsts):
    """Fixed-step integration with the 8th-order weights (order checks)."""
    nz = z0.size
    z = z0.copy()
    xs = np.empty(2 * n + 2 * d + 2)
    seed = np.empty(2 * n + 2 * d + 2)
    stages = np.empty((13, nz))
    ztmp = np.empty(nz)
    znew = np.empty(nz)
    errv = np.empty(nz)
    h = s_target / nsteps
    for _ in range(nsteps):
        _rk_step(z, h, eps, mode, n, d, sgn, pc, poff, h0c, h0e,
                 fkind, codes, centry, fconsts, xs, seed,
                 stages, ztmp, znew, errv)
        for k in range(nz):
            z[k] = znew[k]
    if mode < 2:
        z[2 * n + 2 * d] = z0[2 * n + 2 * d] + s_target
    return z


ESCAPE_NONE = 0
ESCAPE_ROTATION = 1
ESCAPE_LIBRATION = -1


@njit(cache=True, nogil=True)
def integrate_escape(z0, s_max, eps, atol, rtol, h_init, h_max, max_steps,
                     q_far, sp_min, n, d, sgn, pc, poff, h0c, h0e,
                     fkind, codes, centry, fconsts):
    """Integrate (full system) until a pendulum component escapes the band.

    s_max may be negative (backward search). After each accepted step the
    pendulum components are classified: unwrapped q_i beyond q_far[i] in the
    direction of travel means the orbit left on the rotation side (energy
    above the separatrix branch); s_i p_i < sp_min means it turned around on
    the libration side. Returns (flag, component, z_last, s_elapsed).
    """
    nz = z0.size
    z = z0.copy()
    xs = np.empty(2 * n + 2 * d + 2)
    seed = np.empty(2 * n + 2 * d + 2)
    stages = np.empty((13, nz))
    ztmp = np.empty(nz)
    znew = np.empty(nz)
    errv = np.empty(nz)
    direction = 1.0 if s_max > 0 else -1.0
    s = 0.0
    h = min(abs(h_init), abs(s_max), h_max) * direction
    steps = 0
    while direction * (s_max - s) > 0.0:
        if abs(h) > abs(s_max - s):
            h = s_max - s
        _rk_step(z, h, eps, 0, n, d, sgn, pc, poff, h0c, h0e,
                 fkind, codes, centry, fconsts, xs, seed,
                 stages, ztmp, znew, errv)
        errnorm = 0.0
        ok = True
        for k in range(nz):
            if not np.isfinite(znew[k]):
                ok = False
                break
            sc = atol + rtol * max(abs(z[k]), abs(znew[k]))
            e = abs(errv[k]) / sc
            if e > errnorm:
                errnorm = e
        if not ok:
            h *= 0.25
            if abs(h) < 1e-15:
                return ESCAPE_NONE, -1, z, s
            continue
        if errnorm <= 1.0:
            s += h
            for k in range(nz):
                z[k] = znew[k]
            for i in range(n):
                if direction > 0:
                    if z[n + i] > q_far[i]:
                        return ESCAPE_ROTATION, i, z, s
                else:
                    if z[n + i] < q_far[i]:
                        return ESCAPE_ROTATION, i, z, s
                if sgn[i] * z[i] < sp_min:
                    return ESCAPE_LIBRATION, i, z, s
        if errnorm == 0.0:
            fac = 4.0
        else:
            fac = 0.9 * errnorm ** (-1.0 / 8.0)
            if fac > 4.0:
                fac = 4.0
            elif fac < 0.2:
                fac = 0.2
        h *= fac
        if abs(h) > h_max:
            h = h_max * direction
        steps += 1
        if steps >= max_steps:
            break
    return ESCAPE_NONE, -1, z, s


# --- separatrix evaluation ----------------------------------------------------

SEP_CLOSED = 0
SEP_TABLE = 1


@njit(cache=True)
def sep_pq(i, tau, sep_kind, sep_lam, sgn, pc, poff,
           tab_tau0, tab_dt, tab_len, tab_p, tab_q, tail_a, tail_b):
    """Pendulum-i separatrix point (p, q) at parameter tau.

    Closed form for the normalized cosine potential; otherwise a dense table
    with cubic Hermite interpolation (slopes from the vector field) and
    matched exponential tails beyond the table.
    """
    if sep_kind[i] == SEP_CLOSED:
        p = sgn[i] / (np.pi * np.cosh(tau))
        q = (2.0 / np.pi) * np.arctan(np.exp(tau))
        return p, q
    lam = sep_lam[i]
    t0 = tab_tau0[i]
    dt = tab_dt[i]
    m = tab_len[i]
    tend = t0 + dt * (m - 1)
    if tau <= t0:
        e = tail_a[i] * np.exp(lam * tau)
        return sgn[i] * lam * e, e
    if tau >= tend:
        e = tail_b[i] * np.exp(-lam * tau)
        return sgn[i] * lam * e, 1.0 - e
    x = (tau - t0) / dt
    j = int(x)
    if j >= m - 1:
        j = m - 2
    u = x - j
    p0 = tab_p[i, j]
    q0 = tab_q[i, j]
    p1 = tab_p[i, j + 1]
    q1 = tab_q[i, j + 1]
    s = sgn[i]
    # slopes from the field, exact at the nodes
    dp0 = -s * pot_dv(pc, poff[i], poff[i + 1], q0)
    dq0 = s * p0
    dp1 = -s * pot_dv(pc, poff[i], poff[i + 1], q1)
    dq1 = s * p1
    h00 = (1 + 2 * u) * (1 - u) * (1 - u)
    h10 = u * (1 - u) * (1 - u)
    h01 = u * u * (3 - 2 * u)
    h11 = u * u * (u - 1)
    p = h00 * p0 + h10 * dt * dp0 + h01 * p1 + h11 * dt * dp1
    q = h00 * q0 + h10 * dt * dq0 + h01 * q1 + h11 * dt * dq1
    return p, q


# --- batch integrands along the unperturbed orbit pair -------------------------

MEL_DXI = 0        # X1I_comp(slow orbit) - X1I_comp(homoclinic orbit)
MEL_DXTHETA = 1    # same for X1theta_comp
MEL_DXY = 2        # same for X1y_comp (chain rule in the (p,q) chart)
MEL_S_DXI = 3      # s * (X1I difference)
MEL_DH1 = 4        # H1(slow orbit) - H1(homoclinic orbit)
MEL_DTAU_H1 = 5    # d/dtau_comp H1(homoclinic orbit)
MEL_DH1_DI = 6     # dH1/dI_comp difference (slow - homoclinic)
MEL_DH1_DTHETA = 7  # dH1/dtheta_comp difference
MEL_S_DH1_DTHETA = 8  # s * (dH1/dtheta_comp difference)


@njit(cache=True, nogil=True)
def orbit_pair_batch(svals, out, which, comp, tau, I0, th0, t0, omega,
                     n, d, sgn, pc, poff, fkind, codes, centry, fconsts,
                     sep_kind, sep_lam, tab_tau0, tab_dt, tab_len,
                     tab_p, tab_q, tail_a, tail_b):
    """Evaluate a first-order integrand on the paired unperturbed orbits.

    The slow orbit is (0, 0, I0, th0 + omega s, t0 + s); the homoclinic
    orbit carries pendulum coordinates at separatrix parameter tau_i + s.
    All field evaluations use eps = 0. ``which`` selects the integrand
    (MEL_* constants); ``comp`` the vector component.
    """
    nx = 2 * n + 2 * d + 2
    xs = np.empty(nx)
    seed = np.empty(nx)
    for idx in range(svals.size):
        s = svals[idx]
        # common slow coordinates
        for j in range(d):
            xs[2 * n + j] = I0[j]
            xs[2 * n + d + j] = th0[j] + omega[j] * s
        xs[2 * n + 2 * d] = t0 + s
        xs[2 * n + 2 * d + 1] = 0.0
        # slow-orbit value
        for i in range(n):
            xs[i] = 0.0
            xs[n + i] = 0.0
        if which == MEL_DXI:
            a = field_component(fkind, codes, centry, fconsts, xs, seed,
                                n, d, 2, comp)
        elif which == MEL_DXTHETA:
            a = field_component(fkind, codes, centry, fconsts, xs, seed,
                                n, d, 3, comp)
        elif which == MEL_DXY:
            a = 0.0  # p=0 and V'(0)=0 kill both chain-rule terms
        elif which == MEL_S_DXI:
            a = s * field_component(fkind, codes, centry, fconsts, xs, seed,
                                    n, d, 2, comp)
        elif which == MEL_DH1:
            lo = centry[0]
            hi = centry[1]
            a = vm_eval(codes[lo:hi], fconsts, xs)
        elif which == MEL_DTAU_H1:
            a = 0.0  # slow orbit does not depend on tau
        else:
            for k in range(nx):
                seed[k] = 0.0
            if which == MEL_DH1_DI:
                seed[2 * n + comp] = 1.0
            else:
                seed[2 * n + d + comp] = 1.0
            lo = centry[0]
            hi = centry[1]
            _, a = vm_eval_dual(codes[lo:hi], fconsts, xs, seed)
            if which == MEL_S_DH1_DTHETA:
                a *= s
        # homoclinic-orbit value
        for i in range(n):
            p, q = sep_pq(i, tau[i] + s, sep_kind, sep_lam, sgn, pc, poff,
                          tab_tau0, tab_dt, tab_len, tab_p, tab_q,
                          tail_a, tail_b)
            xs[i] = p
            xs[n + i] = q
        if which == MEL_DXI:
            b = field_component(fkind, codes, centry, fconsts, xs, seed,
                                n, d, 2, comp)
        elif which == MEL_DXTHETA:
            b = field_component(fkind, codes, centry, fconsts, xs, seed,
                                n, d, 3, comp)
        elif which == MEL_DXY:
            xp = field_component(fkind, codes, centry, fconsts, xs, seed,
                                 n, d, 0, comp)
            xq = field_component(fkind, codes, centry, fconsts, xs, seed,
                                 n, d, 1, comp)
            dv = pot_dv(pc, poff[comp], poff[comp + 1], xs[n + comp])
            b = sgn[comp] * (xs[comp] * xp + dv * xq)
        elif which == MEL_S_DXI:
            b = s * field_component(fkind, codes, centry, fconsts, xs, seed,
                                    n, d, 2, comp)
        elif which == MEL_DH1:
            lo = centry[0]
            hi = centry[1]
            b = vm_eval(codes[lo:hi], fconsts, xs)
        elif which == MEL_DTAU_H1:
            # d/dtau H1 along the homoclinic orbit: seed (dp0, dq0) in the
            # pendulum slots of component `comp`
            for k in range(nx):
                seed[k] = 0.0
            sc = sgn[comp]
            seed[comp] = -sc * pot_dv(pc, poff[comp], poff[comp + 1],
                                      xs[n + comp])
            seed[n + comp] = sc * xs[comp]
            lo = centry[0]
            hi = centry[1]
            _, b = vm_eval_dual(codes[lo:hi], fconsts, xs, seed)
            out[idx] = b
            continue
        else:
            for k in range(nx):
                seed[k] = 0.0
            if which == MEL_DH1_DI:
                seed[2 * n + comp] = 1.0
            else:
                seed[2 * n + d + comp] = 1.0
            lo = centry[0]
            hi = centry[1]
            _, b = vm_eval_dual(codes[lo:hi], fconsts, xs, seed)
            if which == MEL_S_DH1_DTHETA:
                b *= s
        out[idx] = a - b
    return 0


@njit(cache=True, nogil=True)
def observable_pair_batch(svals, out, f_code, f_consts,
                          tau, Iz, thz, tz, om_z, If, thf, tf, om_f,
                          n, d, sgn, pc, poff,
                          sep_kind, sep_lam, tab_tau0, tab_dt, tab_len,
                          tab_p, tab_q, tail_a, tail_b):
    """F(unperturbed orbit of the footpoint) - F(unperturbed homoclinic orbit).

    The footpoint orbit is (0, 0, If, thf + om_f s, tf + s); the homoclinic
    orbit is (sep(tau + s), Iz, thz + om_z s, tz + s).
    """
    nx = 2 * n + 2 * d + 2
    xs = np.empty(nx)
    for idx in range(svals.size):
        s = svals[idx]
        for i in range(n):
            xs[i] = 0.0
            xs[n + i] = 0.0
        for j in range(d):
            xs[2 * n + j] = If[j]
            xs[2 * n + d + j] = thf[j] + om_f[j] * s
        xs[2 * n + 2 * d] = tf + s
        xs[2 * n + 2 * d + 1] = 0.0
        a = vm_eval(f_code, f_consts, xs)
        for i in range(n):
            p, q = sep_pq(i, tau[i] + s, sep_kind, sep_lam, sgn, pc, poff,
                          tab_tau0, tab_dt, tab_len, tab_p, tab_q,
                          tail_a, tail_b)
            xs[i] = p
            xs[n + i] = q
        for j in range(d):
            xs[2 * n + j] = Iz[j]
            xs[2 * n + d + j] = thz[j] + om_z[j] * s
        xs[2 * n + 2 * d] = tz + s
        b = vm_eval(f_code, f_consts, xs)
        out[idx] = a - b
    return 0
