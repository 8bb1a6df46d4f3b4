"""Photonic mesh numerics: phase decomposition, forward propagation, noise.

An m x m weight tile is realized optically as U * Sigma * V^T: two
rectangular meshes of 2x2 interferometers (for the orthogonal factors) and a
column of m attenuators (for the singular values, normalized so the largest
maps to unit transmission).  Each interferometer implements

    T(phi) = [[sin phi, cos phi],
              [cos phi, -sin phi]]

on an adjacent waveguide pair.  T has determinant -1, so a product of T's
cannot reach every orthogonal matrix; the residual +/-1 signs left over by
the decomposition are folded into the attenuator column (physically a 0/pi
setting on the attenuator arm), keeping the total programmed value count at
m^2 per tile.

Lattice convention: layers are indexed 0..m-1 from the input; even layers
couple pairs (0,1),(2,3),... and odd layers couple (1,2),(3,4),...  A layer/
position pair identifies one interferometer; each signal path crosses 2m+1
devices (m per mesh plus the attenuator).

The decomposition runs in three steps:
  1. zig-zag Givens elimination of the orthogonal factor, alternating
     column and row rotations, leaving a +/-1 diagonal;
  2. greedy causal packing of the accumulated rotations onto the lattice;
  3. conversion of each rotation R(theta) to T(pi/2 - theta) with a trailing
     sign flip, commuting all sign diagonals to one side of the mesh.

Noise model (naive programming): each interferometer's phase is perturbed by
Gaussian(0, eps_phi) plus one Gaussian(0, eps_dc) per directional coupler
(two couplers per device, entering as rotation-angle error); attenuator
settings get phase noise on their arcsin angle.  Error-corrected programming
is not implemented; only its matrix-error scaling law is modeled (the
residual per-device error after first-order coupler cancellation is
quadratic in the coupler error, which `_realized_matrix` can inject for
calibrating the scaling-law constant).
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field

import numpy as np

__all__ = [
    "MeshError", "NoiseSpec", "PhaseProgram",
    "mzi_matrix", "svd_decompose", "clements_decompose", "program_tile",
    "mesh_forward", "mesh_matrix", "measure_matrix_error",
    "estimate_output_bits", "calibrate_error_model", "quantize_midrise",
    "DEFAULT_ERROR_CONSTANTS",
]

# Scaling-law constants (c1, c2, c3) fitted by calibrate_error_model with
# seed=1234, trials=400 at m in {8, 16, 32, 64}; see tests/test_mesh.py.
DEFAULT_ERROR_CONSTANTS = (1.9557, 3.9146, 0.0658)


class MeshError(ValueError):
    """Raised for invalid mesh inputs (non-finite, non-orthogonal, shape)."""


@dataclass(frozen=True)
class NoiseSpec:
    """Hardware error knobs for one Monte-Carlo realization.

    eps_phi and eps_dc are standard deviations (radians / dimensionless
    splitting fraction); b_in / b_out are converter bit widths applied as
    symmetric mid-rise quantization over [-1, 1] with saturation.
    """

    eps_phi: float = 0.0
    eps_dc: float = 0.0
    b_in: int = 16
    b_out: int = 16
    seed: int = 0

    def __post_init__(self):
        if self.eps_phi < 0 or self.eps_dc < 0:
            raise MeshError("noise std-devs must be non-negative")
        if not (1 <= self.b_in <= 16 and 1 <= self.b_out <= 16):
            raise MeshError("converter bit widths must be in [1, 16]")


@dataclass(eq=False)
class PhaseProgram:
    """Phases realizing one weight tile.

    phi_u / phi_v are (layer, position, phi) triples on the rectangular
    lattice, m(m-1)/2 each.  sigma holds attenuator magnitudes in [0, 1],
    sign the folded +/-1 column, and scale the absorbed largest singular
    value (0 marks the designated zero-program).
    """

    m: int
    scale: float
    phi_u: list[tuple[int, int, float]]
    sigma: np.ndarray
    sign: np.ndarray
    phi_v: list[tuple[int, int, float]]
    _grouped: dict = field(default_factory=dict, repr=False)

    def layers(self, which: str):
        """Per-layer (positions, phis) arrays for fast propagation."""
        if which not in self._grouped:
            triples = self.phi_u if which == "u" else self.phi_v
            grouped = [([], []) for _ in range(self.m)]
            for layer, pos, phi in triples:
                grouped[layer][0].append(pos)
                grouped[layer][1].append(phi)
            self._grouped[which] = [
                (np.asarray(p, dtype=np.intp), np.asarray(f, dtype=float))
                for p, f in grouped
            ]
        return self._grouped[which]

    def to_dict(self) -> dict:
        return {
            "m": self.m,
            "scale": self.scale,
            "phi_u": [[int(l), int(p), float(f)] for l, p, f in self.phi_u],
            "sigma": [float(x) for x in self.sigma],
            "sign": [int(x) for x in self.sign],
            "phi_v": [[int(l), int(p), float(f)] for l, p, f in self.phi_v],
        }

    @classmethod
    def from_dict(cls, d: dict) -> "PhaseProgram":
        return cls(
            m=int(d["m"]),
            scale=float(d["scale"]),
            phi_u=[(int(l), int(p), float(f)) for l, p, f in d["phi_u"]],
            sigma=np.asarray(d["sigma"], dtype=float),
            sign=np.asarray(d["sign"], dtype=float),
            phi_v=[(int(l), int(p), float(f)) for l, p, f in d["phi_v"]],
        )


def mzi_matrix(phi: float) -> np.ndarray:
    """2x2 transfer matrix of one interferometer at phase difference phi."""
    s, c = math.sin(phi), math.cos(phi)
    return np.array([[s, c], [c, -s]])


def quantize_midrise(x: np.ndarray, bits: int) -> np.ndarray:
    """Symmetric mid-rise quantization of x over [-1, 1] with saturation."""
    step = 2.0 ** (1 - bits)
    q = (np.floor(np.asarray(x, dtype=float) / step) + 0.5) * step
    return np.clip(q, -1.0 + step / 2, 1.0 - step / 2)


def svd_decompose(tile: np.ndarray):
    """Singular value decomposition of a square tile (U, sigma, Vt)."""
    tile = np.asarray(tile, dtype=float)
    if not np.all(np.isfinite(tile)):
        raise MeshError("tile contains non-finite entries")
    if tile.ndim != 2 or tile.shape[0] != tile.shape[1]:
        raise MeshError(f"tile must be square, got shape {tile.shape}")
    return np.linalg.svd(tile)


# ---------------------------------------------------------------------------
# Givens elimination in rotation form
# ---------------------------------------------------------------------------
#
# R_k(theta) embeds [[cos, -sin], [sin, cos]] on rows/cols (k, k+1).
# Column update (right mult):  col_k' = c*col_k + s*col_{k+1};
#                              col_{k+1}' = -s*col_k + c*col_{k+1}
# Row update (left mult):      row_k' = c*row_k - s*row_{k+1};
#                              row_{k+1}' = s*row_k + c*row_{k+1}


def _clements_rotation_factors(q: np.ndarray):
    """Zig-zag elimination; returns (diag, factors) with
    q = diag(+/-1) * F_1 * F_2 * ... * F_K, each factor (pair, theta)
    a rotation on adjacent indices, ordered output-to-input."""
    m = q.shape[0]
    work = q.copy()
    left: list[tuple[int, float]] = []
    right: list[tuple[int, float]] = []
    for i in range(m - 1):
        if i % 2 == 0:
            for j in range(i + 1):
                p, c = m - 1 - j, i - j
                theta = math.atan2(-work[p, c], work[p, c + 1])
                ct, st = math.cos(theta), math.sin(theta)
                col_a, col_b = work[:, c].copy(), work[:, c + 1].copy()
                work[:, c] = ct * col_a + st * col_b
                work[:, c + 1] = -st * col_a + ct * col_b
                right.append((c, theta))
        else:
            for j in range(i + 1):
                p = m - 1 - i + j
                c = j
                theta = math.atan2(-work[p, c], work[p - 1, c])
                ct, st = math.cos(theta), math.sin(theta)
                row_a, row_b = work[p - 1, :].copy(), work[p, :].copy()
                work[p - 1, :] = ct * row_a - st * row_b
                work[p, :] = st * row_a + ct * row_b
                left.append((p - 1, theta))

    diag = np.sign(np.diagonal(work)).astype(float)
    diag[diag == 0] = 1.0

    # q = L_1^T ... L_p^T * diag * R_q^T ... R_1^T; commute diag to the front
    # through the transposed left factors (innermost first).
    factors = [(k, -t) for k, t in left]
    for idx in range(len(factors) - 1, -1, -1):
        k, theta = factors[idx]
        a, b = diag[k], diag[k + 1]
        if a > 0 and b > 0:
            pass
        elif a < 0 and b < 0:
            theta += math.pi
            diag[k] = diag[k + 1] = 1.0
        elif a > 0 > b:
            theta = -theta
            diag[k], diag[k + 1] = 1.0, -1.0
        else:
            theta = math.pi - theta
            diag[k], diag[k + 1] = 1.0, -1.0
        factors[idx] = (k, theta)
    factors.extend((k, -t) for k, t in reversed(right))
    return diag, factors


def _pack_lattice(m: int, factors):
    """Assign output-to-input ordered rotation factors to (layer, position)
    lattice sites; factors acting on disjoint pairs commute, so a causal
    greedy packing from the input side reproduces the rectangle."""
    next_free = [0] * m
    packed = []
    for k, theta in reversed(factors):
        layer = max(next_free[k], next_free[k + 1])
        if layer >= m or layer % 2 != k % 2:
            raise MeshError("rotation sequence does not tile the rectangular lattice")
        next_free[k] = next_free[k + 1] = layer + 1
        packed.append((layer, k, theta))
    packed.sort()
    return packed


def _wrap(phi: float) -> float:
    return math.remainder(phi, 2 * math.pi)


def _commute_signs(signs, pos: int, phi: float) -> float:
    """Move a +/-1 sign pair across one device, in place.

    T is symmetric, so the rewrite rule is the same whichever side the
    diagonal enters from:  (-,-) folds into phi+pi, a single minus sign
    passes through as (+,-) with the phase reflected.
    """
    a, b = signs[pos], signs[pos + 1]
    if a > 0 and b > 0:
        return phi
    if a < 0 and b < 0:
        signs[pos] = signs[pos + 1] = 1.0
        return phi + math.pi
    if a > 0 > b:
        return math.pi - phi
    signs[pos], signs[pos + 1] = 1.0, -1.0
    return -phi


def _by_layer(m: int, phases):
    grouped: list[list[tuple[int, float]]] = [[] for _ in range(m)]
    for layer, pos, phi in phases:
        grouped[layer].append((pos, phi))
    return grouped


def _rotations_to_mzi(m: int, packed):
    """Rewrite a packed rotation mesh as T-form phases plus an input-side
    sign diagonal: rot-mesh = T-mesh * diag(signs).

    Each R(theta) = T(pi/2 - theta) * diag(1, -1) on its pair; the per-device
    sign flips are commuted to the input side layer by layer.
    """
    by_layer = _by_layer(m, ((l, p, math.pi / 2 - t) for l, p, t in packed))
    signs = np.ones(m)
    phases: list[tuple[int, int, float]] = []
    for layer in range(m - 1, -1, -1):
        updated = []
        for pos, phi in by_layer[layer]:
            phi = _commute_signs(signs, pos, phi)
            updated.append((pos, phi))
            signs[pos + 1] = -signs[pos + 1]  # trailing diag(1,-1) of this device
        by_layer[layer] = updated
    for layer in range(m):
        for pos, phi in sorted(by_layer[layer]):
            phases.append((layer, pos, _wrap(phi)))
    return phases, signs


def _push_diag(m: int, phases, diag, toward: str):
    """Commute a +/-1 diagonal through the mesh.

    toward="input":  diag * mesh -> mesh' * diag'   (layers output-first)
    toward="output": mesh * diag -> diag' * mesh'   (layers input-first)
    """
    signs = diag.copy()
    out = {}
    by_layer = _by_layer(m, phases)
    order = range(m - 1, -1, -1) if toward == "input" else range(m)
    for layer in order:
        for pos, phi in by_layer[layer]:
            out[(layer, pos)] = _wrap(_commute_signs(signs, pos, phi))
    return [(l, p, out[(l, p)]) for l, p, _ in phases], signs


def _orthogonality_defect(q: np.ndarray) -> float:
    return float(np.max(np.abs(q.T @ q - np.eye(q.shape[0]))))


def _decompose_orthogonal(q: np.ndarray):
    """Orthogonal q -> (phases, d_out, s_in) with
    q = diag(d_out) * T-mesh(phases) * diag(s_in)."""
    diag, factors = _clements_rotation_factors(q)
    packed = _pack_lattice(q.shape[0], factors)
    phases, s_in = _rotations_to_mzi(q.shape[0], packed)
    return phases, diag, s_in


def clements_decompose(q: np.ndarray) -> tuple[list[tuple[int, int, float]], np.ndarray]:
    """Factor an orthogonal matrix into rectangular-lattice phases.

    Returns (triples, sign) with exactly m(m-1)/2 (layer, position, phi)
    entries such that diag(sign) @ mesh(triples) reproduces q.  Sign pairs
    are folded into the phases wherever the lattice allows, so at most one
    residual minus sign survives per connected parity class.
    """
    q = np.asarray(q, dtype=float)
    if q.ndim != 2 or q.shape[0] != q.shape[1]:
        raise MeshError(f"expected a square matrix, got shape {q.shape}")
    if _orthogonality_defect(q) > 1e-8:
        raise MeshError("input is not orthogonal to 1e-8")
    m = q.shape[0]
    phases, d_out, s_in = _decompose_orthogonal(q)
    phases, s_out = _push_diag(m, phases, s_in, toward="output")
    # annihilation pass: adjacent minus pairs cancel where they meet a device
    phases, s_in2 = _push_diag(m, phases, d_out * s_out, toward="input")
    phases, sign = _push_diag(m, phases, s_in2, toward="output")
    return phases, sign


def program_tile(tile: np.ndarray) -> PhaseProgram:
    """Decompose a weight tile into mesh phases, attenuators, and scale.

    scale is the largest singular value; attenuators are sigma/scale.  The
    all-zero tile maps to the designated zero-program (scale 0).
    """
    tile = np.asarray(tile, dtype=float)
    u, sig, vt = svd_decompose(tile)
    m = tile.shape[0]
    n_phase = m * (m - 1) // 2
    if not np.any(tile):
        lattice = [(l, p, 0.0) for l in range(m)
                   for p in range(l % 2, m - 1, 2)]
        return PhaseProgram(m=m, scale=0.0,
                            phi_u=lattice[:n_phase], sigma=np.zeros(m),
                            sign=np.ones(m), phi_v=lattice[:n_phase])
    scale = float(sig[0])
    atten = sig / scale

    phases_u, du_out, su_in = _decompose_orthogonal(u)
    phases_u, du_in = _push_diag(m, phases_u, du_out, toward="input")
    phases_v, dv_out, sv_in = _decompose_orthogonal(vt)
    phases_v, sv_out = _push_diag(m, phases_v, sv_in, toward="output")

    # U = TU * diag(du_in * su_in);  Vt = diag(dv_out * sv_out) * TV
    sign = (du_in * su_in) * (dv_out * sv_out)
    return PhaseProgram(m=m, scale=scale, phi_u=phases_u,
                        sigma=atten, sign=sign, phi_v=phases_v)


# ---------------------------------------------------------------------------
# Forward propagation
# ---------------------------------------------------------------------------


def _apply_mesh(v: np.ndarray, layers, dphi=None) -> np.ndarray:
    """Propagate v (shape (m,) or (m, k)) through T-mesh layers in order."""
    offset = 0
    for pos, phi in layers:
        if pos.size == 0:
            continue
        if dphi is not None:
            phi = phi + dphi[offset:offset + phi.size]
            offset += phi.size
        s, c = np.sin(phi), np.cos(phi)
        if v.ndim == 2:
            s, c = s[:, None], c[:, None]
        va, vb = v[pos], v[pos + 1]
        v[pos] = s * va + c * vb
        v[pos + 1] = c * va - s * vb
    return v


def _noise_draws(program: PhaseProgram, noise: NoiseSpec, rng, programming: str):
    """Per-device phase perturbations (dphi_v, dphi_u, datten), drawn in a
    fixed order so identical seeds give bit-identical realizations."""
    n = len(program.phi_u)
    draws = []
    for _ in range(2):
        dphi = rng.normal(0.0, noise.eps_phi, n) if noise.eps_phi > 0 else np.zeros(n)
        if noise.eps_dc > 0:
            e1 = rng.normal(0.0, noise.eps_dc, n)
            e2 = rng.normal(0.0, noise.eps_dc, n)
            if programming == "naive":
                dphi = dphi + e1 + e2
            else:  # first-order coupler terms cancelled, quadratic residue
                dphi = dphi + 0.5 * (e1 ** 2 + e2 ** 2)
        draws.append(dphi)
    datten = rng.normal(0.0, noise.eps_phi, program.m) if noise.eps_phi > 0 else np.zeros(program.m)
    return draws[0], draws[1], datten


def _attenuator_column(program: PhaseProgram, datten=None) -> np.ndarray:
    a = np.clip(program.sigma, 0.0, 1.0)
    if datten is not None and np.any(datten):
        a = np.sin(np.arcsin(a) + datten)
        a = np.clip(a, -1.0, 1.0)
    return program.sign * a


def mesh_forward(program: PhaseProgram, v_in: np.ndarray,
                 noise: NoiseSpec | None = None) -> np.ndarray:
    """Propagate v_in through V^T mesh, attenuators, U mesh; scale output.

    Without noise this equals tile @ v_in up to decomposition round-off.
    With noise, phases are perturbed per NoiseSpec (naive programming), the
    input is quantized to b_in bits, and the output to b_out bits;
    deterministic for a given seed.
    """
    v = np.array(v_in, dtype=float)
    single = v.ndim == 1
    if v.shape[0] != program.m:
        raise MeshError(f"expected {program.m} input channels, got {v.shape[0]}")
    dv = du = datten = None
    if noise is not None:
        rng = np.random.default_rng(noise.seed)
        dv, du, datten = _noise_draws(program, noise, rng, "naive")
        v = quantize_midrise(v, noise.b_in)
    v = _apply_mesh(v, program.layers("v"), dv)
    col = _attenuator_column(program, datten)
    v = v * (col[:, None] if v.ndim == 2 else col)
    v = _apply_mesh(v, program.layers("u"), du)
    if noise is not None:
        v = quantize_midrise(v, noise.b_out)
    v = program.scale * v
    return v if not single else v.reshape(-1)


def mesh_matrix(program: PhaseProgram) -> np.ndarray:
    """Realized tile (noise-free): mesh applied to the identity."""
    return mesh_forward(program, np.eye(program.m))


def _realized_matrix(program: PhaseProgram, noise: NoiseSpec, rng,
                     programming: str) -> np.ndarray:
    """Noisy realized matrix without converter quantization."""
    dv, du, datten = _noise_draws(program, noise, rng, programming)
    v = _apply_mesh(np.eye(program.m), program.layers("v"), dv)
    v = v * _attenuator_column(program, datten)[:, None]
    v = _apply_mesh(v, program.layers("u"), du)
    return program.scale * v


def _haar_orthogonal(m: int, rng) -> np.ndarray:
    g = rng.normal(size=(m, m))
    q, r = np.linalg.qr(g)
    return q * np.sign(np.diagonal(r))


def measure_matrix_error(m: int, noise: NoiseSpec, trials: int,
                         programming: str = "naive"):
    """Monte-Carlo matrix error for random orthogonal tiles.

    Per trial, Delta M^2 = |M_real - M_intended|_F^2 / m, the mean squared
    output-vector error over isotropic unit-norm inputs (this is the
    normalization in which the naive scaling law reads c1*m*eps_phi^2 +
    c2*m*eps_dc^2).  Returns (mean, per-trial samples).
    """
    if trials < 1:
        raise MeshError("trials must be >= 1")
    children = np.random.SeedSequence(noise.seed).spawn(trials)
    samples = np.empty(trials)
    for t in range(trials):
        rng = np.random.default_rng(children[t])
        tile = _haar_orthogonal(m, rng)
        program = program_tile(tile)
        realized = _realized_matrix(program, noise, rng, programming)
        samples[t] = np.sum((realized - tile) ** 2) / m
    return float(samples.mean()), samples


def estimate_output_bits(m: int, noise: NoiseSpec,
                         mode: str = "error_corrected",
                         constants: tuple[float, float, float] = DEFAULT_ERROR_CONSTANTS) -> float:
    """Achievable output bit precision from the calibrated error budget.

    Output error adds in quadrature: dv_out^2 = dv_in^2 + dM^2 with
    dv_in = 2^-b_in and dM^2 following the naive or error-corrected
    scaling law.  Returns -log2(dv_out), floored at 0.
    """
    if mode not in ("naive", "error_corrected"):
        raise MeshError(f"unknown programming mode {mode!r}")
    c1, c2, c3 = constants
    dv_in_sq = 4.0 ** (-noise.b_in)
    dm_sq = c1 * m * noise.eps_phi ** 2
    if mode == "naive":
        dm_sq += c2 * m * noise.eps_dc ** 2
    else:
        dm_sq += c3 * m ** 2 * noise.eps_dc ** 4
    return max(0.0, -0.5 * math.log2(dv_in_sq + dm_sq))


def calibrate_error_model(sizes=(8, 16, 32, 64), trials: int = 400,
                          seed: int = 1234) -> tuple[float, float, float]:
    """Least-squares fit of the scaling-law constants against Monte Carlo.

    c1: phase-only naive runs against m * eps_phi^2;
    c2: coupler-only naive runs against m * eps_dc^2;
    c3: coupler-only corrected-residue runs against m^2 * eps_dc^4.
    """
    def fit(xs, ys):
        xs, ys = np.asarray(xs), np.asarray(ys)
        return float(xs @ ys / (xs @ xs))

    eps = 1e-3
    ys1, ys2, ys3, x1, x2, x3 = [], [], [], [], [], []
    for m in sizes:
        mean, _ = measure_matrix_error(m, NoiseSpec(eps_phi=eps, seed=seed), trials)
        ys1.append(mean); x1.append(m * eps ** 2)
        mean, _ = measure_matrix_error(m, NoiseSpec(eps_dc=eps, seed=seed + 1), trials)
        ys2.append(mean); x2.append(m * eps ** 2)
        eps_c = 0.02  # larger draw so the quadratic residue is resolvable
        mean, _ = measure_matrix_error(
            m, NoiseSpec(eps_dc=eps_c, seed=seed + 2), trials, programming="corrected")
        ys3.append(mean); x3.append(m ** 2 * eps_c ** 4)
    return fit(x1, ys1), fit(x2, ys2), fit(x3, ys3)
