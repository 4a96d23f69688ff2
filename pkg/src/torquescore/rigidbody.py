"""Floating-base articulated rigid-body model in Euler-angle coordinates.

Generalized coordinates are ``q = [r_root (3), theta_0 (3), ..., theta_{J-1} (3)]``
where every joint (the root included) is a 3-DoF rotation parameterized by
intrinsic X-Y-Z Euler angles, ``R = Rx(a) @ Ry(b) @ Rz(c)``. The root translation
is a world-aligned prismatic joint, so ``N = 3 + 3 J``.

Inverse dynamics is a recursive Newton-Euler pass written with explicit
3-component arithmetic and vectorized over an arbitrary leading batch axis.
Only elementwise numpy operations are used, so every batch element is
computed bitwise-identically no matter how states are grouped into batches.
The mass matrix is computed independently by the composite-rigid-body
algorithm in 6D spatial algebra.
"""
from __future__ import annotations

import functools
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import DimensionMismatch, ParseError, SingularEulerMap, ValidationError

MODEL_HEADER = "torquescore-model v1"
EULER_SINGULAR_TOL = 1e-10
DEFAULT_GRAVITY = (0.0, 0.0, -9.81)

_DATA = Path(__file__).resolve().parent / "data"


@dataclass(frozen=True)
class JointSpec:
    """One body of the tree, attached to its parent through a 3-DoF Euler joint.

    ``offset`` is the joint origin in the parent joint frame; ``com`` and
    ``inertia`` (about the centre of mass) are expressed in this joint's frame.
    """

    name: str
    parent: int
    offset: np.ndarray
    mass: float
    com: np.ndarray
    inertia: np.ndarray

    def __post_init__(self):
        for attr, shape in (("offset", (3,)), ("com", (3,)), ("inertia", (3, 3))):
            arr = np.asarray(getattr(self, attr), dtype=float)
            if arr.shape != shape:
                raise ValidationError(f"joint {self.name!r}: {attr} must have shape {shape}")
            if not np.all(np.isfinite(arr)):
                raise ValidationError(f"joint {self.name!r}: {attr} is not finite")
            arr.setflags(write=False)
            object.__setattr__(self, attr, arr)
        mass = float(self.mass)
        if not np.isfinite(mass) or mass < 0:
            raise ValidationError(f"joint {self.name!r}: mass must be >= 0, got {mass}")
        object.__setattr__(self, "mass", mass)
        inertia = self.inertia
        if np.max(np.abs(inertia - inertia.T)) > 1e-12:
            raise ValidationError(f"joint {self.name!r}: inertia is not symmetric")
        scale = max(1.0, float(np.max(np.abs(inertia))))
        if np.min(np.linalg.eigvalsh(inertia)) < -1e-12 * scale:
            raise ValidationError(f"joint {self.name!r}: inertia is not positive semi-definite")


@dataclass(frozen=True)
class KinematicModel:
    joints: tuple[JointSpec, ...]
    gravity: np.ndarray = field(default_factory=lambda: np.array(DEFAULT_GRAVITY))

    def __post_init__(self):
        joints = tuple(self.joints)
        object.__setattr__(self, "joints", joints)
        if not joints:
            raise ValidationError("model has no joints")
        roots = [i for i, j in enumerate(joints) if j.parent < 0]
        if roots != [0]:
            raise ValidationError(f"model must have exactly one root at index 0, found roots at {roots}")
        for i, j in enumerate(joints[1:], start=1):
            if not 0 <= j.parent < i:
                raise ValidationError(
                    f"joint {j.name!r} (index {i}) has parent {j.parent}; parents must precede "
                    "children (cyclic or unsorted tree)"
                )
        g = np.asarray(self.gravity, dtype=float)
        if g.shape != (3,) or not np.all(np.isfinite(g)):
            raise ValidationError("gravity must be a finite 3-vector")
        g.setflags(write=False)
        object.__setattr__(self, "gravity", g)

    @property
    def J(self) -> int:
        return len(self.joints)

    @property
    def N(self) -> int:
        return 3 + 3 * self.J

    @property
    def names(self) -> list[str]:
        return [j.name for j in self.joints]

    @functools.cached_property
    def parents(self) -> np.ndarray:
        return np.array([j.parent for j in self.joints], dtype=int)

    @functools.cached_property
    def children(self) -> tuple[tuple[int, ...], ...]:
        kids = [[] for _ in self.joints]
        for i, j in enumerate(self.joints[1:], start=1):
            kids[j.parent].append(i)
        return tuple(tuple(k) for k in kids)

    @functools.cached_property
    def total_mass(self) -> float:
        return float(sum(j.mass for j in self.joints))

    def with_gravity(self, gravity) -> "KinematicModel":
        return KinematicModel(self.joints, np.asarray(gravity, dtype=float))

    def scaled(self, c: float) -> "KinematicModel":
        """Copy with every mass and inertia multiplied by ``c``."""
        joints = tuple(
            JointSpec(j.name, j.parent, j.offset, j.mass * c, j.com, j.inertia * c) for j in self.joints
        )
        return KinematicModel(joints, self.gravity)

    def __getstate__(self):
        return {"joints": self.joints, "gravity": self.gravity}

    def __setstate__(self, state):
        object.__setattr__(self, "joints", state["joints"])
        object.__setattr__(self, "gravity", state["gravity"])


@dataclass(frozen=True)
class GeneralizedState:
    q: np.ndarray
    qdot: np.ndarray
    qddot: np.ndarray

    def __post_init__(self):
        for attr in ("q", "qdot", "qddot"):
            object.__setattr__(self, attr, np.asarray(getattr(self, attr), dtype=float))
        if not (self.q.shape == self.qdot.shape == self.qddot.shape) or self.q.ndim != 1:
            raise DimensionMismatch(
                f"q, qdot, qddot must be equal-length vectors, got {self.q.shape}, "
                f"{self.qdot.shape}, {self.qddot.shape}"
            )
        if not all(np.all(np.isfinite(v)) for v in (self.q, self.qdot, self.qddot)):
            raise ValidationError("state contains non-finite entries")

    def as_vector(self) -> np.ndarray:
        return np.concatenate([self.q, self.qdot, self.qddot])

    @classmethod
    def from_vector(cls, s: np.ndarray) -> "GeneralizedState":
        s = np.asarray(s, dtype=float)
        if s.ndim != 1 or s.size % 3:
            raise DimensionMismatch(f"state vector length {s.size} is not a multiple of 3")
        n = s.size // 3
        return cls(s[:n], s[n : 2 * n], s[2 * n :])

    @classmethod
    def static(cls, q) -> "GeneralizedState":
        q = np.asarray(q, dtype=float)
        return cls(q, np.zeros_like(q), np.zeros_like(q))


# ---------------------------------------------------------------------------
# model files


def _parse_floats(tokens, lineno, path):
    try:
        return [float(t) for t in tokens]
    except ValueError as exc:
        raise ParseError(f"{path}:{lineno}: {exc}") from None


def parse_model(text: str, source: str = "<string>") -> KinematicModel:
    lines = text.splitlines()
    body = []
    header = None
    for lineno, raw in enumerate(lines, start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if header is None:
            header = line
            if header != MODEL_HEADER:
                raise ParseError(f"{source}:{lineno}: expected header {MODEL_HEADER!r}, got {header!r}")
            continue
        body.append((lineno, line.split()))
    if header is None:
        raise ParseError(f"{source}: empty model file")
    joints = []
    for lineno, tokens in body:
        if len(tokens) != 15:
            raise ParseError(f"{source}:{lineno}: expected 15 fields per joint record, got {len(tokens)}")
        name = tokens[0]
        try:
            parent = int(tokens[1])
        except ValueError:
            raise ParseError(f"{source}:{lineno}: parent index {tokens[1]!r} is not an integer") from None
        vals = _parse_floats(tokens[2:], lineno, source)
        ixx, iyy, izz, ixy, ixz, iyz = vals[7:]
        inertia = np.array([[ixx, ixy, ixz], [ixy, iyy, iyz], [ixz, iyz, izz]])
        joints.append(JointSpec(name, parent, np.array(vals[0:3]), vals[3], np.array(vals[4:7]), inertia))
    if not joints:
        raise ParseError(f"{source}: no joint records")
    return KinematicModel(tuple(joints))


def load_model(path) -> KinematicModel:
    """Read and validate a ``torquescore-model v1`` file."""
    path = Path(path)
    try:
        text = path.read_text(encoding="utf-8")
    except UnicodeDecodeError as exc:
        raise ParseError(f"{path}: not UTF-8 ({exc})") from None
    return parse_model(text, str(path))


def format_model(model: KinematicModel, comment: str | None = None) -> str:
    out = [MODEL_HEADER]
    if comment:
        out.extend(f"# {c}" for c in comment.splitlines())
    out.append("# name parent off_x off_y off_z mass com_x com_y com_z Ixx Iyy Izz Ixy Ixz Iyz")
    for j in model.joints:
        I = j.inertia
        vals = [*j.offset, j.mass, *j.com, I[0, 0], I[1, 1], I[2, 2], I[0, 1], I[0, 2], I[1, 2]]
        out.append(" ".join([j.name, str(j.parent)] + [repr(float(v)) for v in vals]))
    return "\n".join(out) + "\n"


def save_model(model: KinematicModel, path, comment: str | None = None) -> None:
    Path(path).write_text(format_model(model, comment), encoding="utf-8")


def builtin_model_path(name: str = "default_humanoid") -> Path:
    return _DATA / "models" / f"{name}.model"


def default_humanoid() -> KinematicModel:
    return load_model(builtin_model_path("default_humanoid"))


# ---------------------------------------------------------------------------
# small-vector kernels; explicit component arithmetic keeps results independent
# of batch composition (no BLAS, no pairwise summation)


def _cross(a, b):
    out = np.empty(np.broadcast_shapes(a.shape, b.shape))
    out[..., 0] = a[..., 1] * b[..., 2] - a[..., 2] * b[..., 1]
    out[..., 1] = a[..., 2] * b[..., 0] - a[..., 0] * b[..., 2]
    out[..., 2] = a[..., 0] * b[..., 1] - a[..., 1] * b[..., 0]
    return out


def _mv(R, v):
    return R[..., :, 0] * v[..., 0, None] + R[..., :, 1] * v[..., 1, None] + R[..., :, 2] * v[..., 2, None]


def _mtv(R, v):
    return R[..., 0, :] * v[..., 0, None] + R[..., 1, :] * v[..., 1, None] + R[..., 2, :] * v[..., 2, None]


def _mm(A, B):
    return (
        A[..., :, 0, None] * B[..., None, 0, :]
        + A[..., :, 1, None] * B[..., None, 1, :]
        + A[..., :, 2, None] * B[..., None, 2, :]
    )


def euler_rotation(angles: np.ndarray) -> np.ndarray:
    """Rotation matrices ``Rx(a) Ry(b) Rz(c)`` for ``angles[..., (a, b, c)]``."""
    a, b, c = angles[..., 0], angles[..., 1], angles[..., 2]
    ca, sa, cb, sb, cc, sc = np.cos(a), np.sin(a), np.cos(b), np.sin(b), np.cos(c), np.sin(c)
    R = np.empty(angles.shape[:-1] + (3, 3))
    R[..., 0, 0] = cb * cc
    R[..., 0, 1] = -cb * sc
    R[..., 0, 2] = sb
    R[..., 1, 0] = sa * sb * cc + ca * sc
    R[..., 1, 1] = ca * cc - sa * sb * sc
    R[..., 1, 2] = -sa * cb
    R[..., 2, 0] = sa * sc - ca * sb * cc
    R[..., 2, 1] = ca * sb * sc + sa * cc
    R[..., 2, 2] = ca * cb
    return R


def euler_rate_map(angles: np.ndarray) -> np.ndarray:
    """Matrix E with ``omega_body = E @ d(angles)/dt`` for intrinsic X-Y-Z angles."""
    b, c = angles[..., 1], angles[..., 2]
    cb, sb, cc, sc = np.cos(b), np.sin(b), np.cos(c), np.sin(c)
    E = np.zeros(angles.shape[:-1] + (3, 3))
    E[..., 0, 0] = cb * cc
    E[..., 1, 0] = -cb * sc
    E[..., 2, 0] = sb
    E[..., 0, 1] = sc
    E[..., 1, 1] = cc
    E[..., 2, 2] = 1.0
    return E


def euler_rate_map_dot(angles: np.ndarray, rates: np.ndarray) -> np.ndarray:
    """``dE/dt @ rates``, the velocity-product part of the body angular acceleration."""
    b, c = angles[..., 1], angles[..., 2]
    ad, bd, cd = rates[..., 0], rates[..., 1], rates[..., 2]
    cb, sb, cc, sc = np.cos(b), np.sin(b), np.cos(c), np.sin(c)
    out = np.empty(angles.shape)
    out[..., 0] = ad * (-sb * cc * bd - cb * sc * cd) + bd * cc * cd
    out[..., 1] = ad * (sb * sc * bd - cb * cc * cd) - bd * sc * cd
    out[..., 2] = ad * cb * bd
    return out


def euler_map_min_singular(angles: np.ndarray) -> np.ndarray:
    """Smallest singular value of the Euler-rate map, ``|cos b| / sqrt(1 + |sin b|)``."""
    b = angles[..., 1]
    return np.abs(np.cos(b)) / np.sqrt(1.0 + np.abs(np.sin(b)))


def _check_q(model: KinematicModel, q) -> np.ndarray:
    q = np.asarray(q, dtype=float)
    if q.shape[-1:] != (model.N,):
        raise DimensionMismatch(f"expected generalized vectors of length N={model.N}, got shape {q.shape}")
    return q


# ---------------------------------------------------------------------------
# kinematics


def forward_kinematics(model: KinematicModel, q) -> tuple[np.ndarray, np.ndarray]:
    """Global joint positions ``(..., J, 3)`` and orientations ``(..., J, 3, 3)``."""
    q = _check_q(model, q)
    batch = q.shape[:-1]
    theta = q[..., 3:].reshape(batch + (model.J, 3))
    Rrel = euler_rotation(theta)
    pos = np.empty(batch + (model.J, 3))
    rot = np.empty(batch + (model.J, 3, 3))
    for i, joint in enumerate(model.joints):
        if joint.parent < 0:
            pos[..., i, :] = q[..., :3] + joint.offset
            rot[..., i, :, :] = Rrel[..., i, :, :]
        else:
            p = joint.parent
            pos[..., i, :] = pos[..., p, :] + _mv(rot[..., p, :, :], np.broadcast_to(joint.offset, batch + (3,)))
            rot[..., i, :, :] = _mm(rot[..., p, :, :], Rrel[..., i, :, :])
    return pos, rot


def body_com_positions(model: KinematicModel, q) -> np.ndarray:
    pos, rot = forward_kinematics(model, q)
    coms = np.stack([j.com for j in model.joints])
    return pos + _mv(rot, np.broadcast_to(coms, rot.shape[:-1]))


# ---------------------------------------------------------------------------
# inverse dynamics


def rnea(model: KinematicModel, q, qdot, qddot, f_ext=None, gravity=None):
    """Batched recursive Newton-Euler inverse dynamics.

    All inputs share a leading batch shape ``(..., N)``. Returns ``(tau,
    min_sv)`` where ``min_sv[...]`` is the smallest Euler-map singular value
    over all joints of each state; callers decide what counts as singular.
    """
    q = _check_q(model, q)
    qdot = _check_q(model, qdot)
    qddot = _check_q(model, qddot)
    batch = np.broadcast_shapes(q.shape, qdot.shape, qddot.shape)[:-1]
    q, qdot, qddot = (np.broadcast_to(v, batch + (model.N,)) for v in (q, qdot, qddot))
    J = model.J
    g = model.gravity if gravity is None else np.asarray(gravity, dtype=float)

    th = q[..., 3:].reshape(batch + (J, 3))
    thd = qdot[..., 3:].reshape(batch + (J, 3))
    thdd = qddot[..., 3:].reshape(batch + (J, 3))
    Rrel = euler_rotation(th)
    E = euler_rate_map(th)
    w_rel = _mv(E, thd)
    a_rel = _mv(E, thdd) + euler_rate_map_dot(th, thd)
    min_sv = np.min(euler_map_min_singular(th), axis=-1) if J else np.full(batch, np.inf)

    omega = [None] * J
    alpha = [None] * J
    acc = [None] * J
    force = [None] * J
    moment = [None] * J
    zeros = np.zeros(batch + (3,))
    base_acc = qddot[..., :3] - g
    for i, joint in enumerate(model.joints):
        R = Rrel[..., i, :, :]
        d = joint.offset
        if joint.parent < 0:
            w_p, al_p, a_p = zeros, zeros, base_acc
            a_org = a_p
        else:
            p = joint.parent
            w_p, al_p, a_p = omega[p], alpha[p], acc[p]
            a_org = a_p + _cross(al_p, d) + _cross(w_p, _cross(w_p, d))
        w_in = _mtv(R, w_p)
        w = w_in + w_rel[..., i, :]
        al = _mtv(R, al_p) + a_rel[..., i, :] + _cross(w_in, w_rel[..., i, :])
        a = _mtv(R, a_org)
        omega[i], alpha[i], acc[i] = w, al, a

        c = joint.com
        a_com = a + _cross(al, c) + _cross(w, _cross(w, c))
        F = joint.mass * a_com
        I = joint.inertia
        Iw = I[:, 0] * w[..., 0, None] + I[:, 1] * w[..., 1, None] + I[:, 2] * w[..., 2, None]
        Ial = I[:, 0] * al[..., 0, None] + I[:, 1] * al[..., 1, None] + I[:, 2] * al[..., 2, None]
        force[i] = F
        moment[i] = Ial + _cross(w, Iw) + _cross(np.broadcast_to(c, F.shape), F)

    tau = np.empty(batch + (model.N,))
    for i in range(J - 1, -1, -1):
        joint = model.joints[i]
        f, n = force[i], moment[i]
        tau[..., 3 + 3 * i : 6 + 3 * i] = _mtv(E[..., i, :, :], n)
        R = Rrel[..., i, :, :]
        f_par = _mv(R, f)
        n_par = _mv(R, n) + _cross(np.broadcast_to(joint.offset, f_par.shape), f_par)
        if joint.parent < 0:
            tau[..., :3] = f_par
        else:
            force[joint.parent] = force[joint.parent] + f_par
            moment[joint.parent] = moment[joint.parent] + n_par
    if f_ext is not None:
        tau = tau - np.asarray(f_ext, dtype=float)
    return tau, min_sv


def _raise_if_singular(min_sv):
    if np.any(min_sv < EULER_SINGULAR_TOL):
        raise SingularEulerMap(
            f"Euler-rate map singular (min singular value {float(np.min(min_sv)):.3e} "
            f"< {EULER_SINGULAR_TOL:g}); a joint is at gimbal lock"
        )


def inverse_dynamics(model: KinematicModel, s: GeneralizedState, f_ext=None) -> np.ndarray:
    """Generalized forces ``tau = M(q) qddot + h(q, qdot) - f_ext`` in Euler-rate coordinates."""
    if f_ext is not None:
        f_ext = _check_q(model, f_ext)
    tau, min_sv = rnea(model, s.q, s.qdot, s.qddot, f_ext)
    _raise_if_singular(min_sv)
    return tau


def bias_term(model: KinematicModel, q, qdot) -> np.ndarray:
    """Gravity, Coriolis and centrifugal generalized forces ``h(q, qdot)``."""
    q = _check_q(model, q)
    qdot = _check_q(model, qdot)
    tau, min_sv = rnea(model, q, qdot, np.zeros(model.N))
    _raise_if_singular(min_sv)
    return tau


# ---------------------------------------------------------------------------
# mass matrix (composite rigid body algorithm, spatial algebra)


def _skew(v):
    return np.array([[0.0, -v[2], v[1]], [v[2], 0.0, -v[0]], [-v[1], v[0], 0.0]])


def _spatial_transform(E, r):
    """Motion transform parent -> child: rotation ``E`` (parent->child coords), origin ``r``."""
    X = np.zeros((6, 6))
    X[:3, :3] = E
    X[3:, 3:] = E
    X[3:, :3] = -E @ _skew(r)
    return X


def _spatial_inertia(mass, com, inertia):
    C = _skew(com)
    I = np.zeros((6, 6))
    I[:3, :3] = inertia + mass * C @ C.T
    I[:3, 3:] = mass * C
    I[3:, :3] = mass * C.T
    I[3:, 3:] = mass * np.eye(3)
    return I


def mass_matrix(model: KinematicModel, q) -> np.ndarray:
    """Joint-space inertia matrix ``M(q)`` (N x N) via the composite-rigid-body algorithm."""
    q = _check_q(model, q)
    if q.ndim != 1:
        raise DimensionMismatch("mass_matrix takes a single configuration vector")
    J = model.J
    th = q[3:].reshape(J, 3)
    _raise_if_singular(euler_map_min_singular(th))
    Rrel = euler_rotation(th)
    E = euler_rate_map(th)
    X = [_spatial_transform(Rrel[i].T, model.joints[i].offset) for i in range(J)]
    S = []
    for i in range(J):
        Si = np.zeros((6, 3))
        Si[:3] = E[i]
        S.append(Si)
    Ic = [_spatial_inertia(j.mass, j.com, j.inertia) for j in model.joints]
    for i in range(J - 1, 0, -1):
        p = model.joints[i].parent
        Ic[p] = Ic[p] + X[i].T @ Ic[i] @ X[i]
    S_base = np.zeros((6, 3))
    S_base[3:] = np.eye(3)
    Ic_base = X[0].T @ Ic[0] @ X[0]

    M = np.zeros((model.N, model.N))
    M[:3, :3] = S_base.T @ Ic_base @ S_base
    for i in range(J):
        F = Ic[i] @ S[i]
        si = slice(3 + 3 * i, 6 + 3 * i)
        M[si, si] = S[i].T @ F
        j = i
        while model.joints[j].parent >= 0:
            F = X[j].T @ F
            j = model.joints[j].parent
            sj = slice(3 + 3 * j, 6 + 3 * j)
            M[si, sj] = F.T @ S[j]
            M[sj, si] = M[si, sj].T
        F = X[j].T @ F
        M[si, :3] = F.T @ S_base
        M[:3, si] = M[si, :3].T
    return M
