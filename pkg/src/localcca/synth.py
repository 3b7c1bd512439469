"""Seeded generators for the synthetic experiments.

Each generator returns the observation sets together with the hidden
variables that produced them, so results can be scored against ground truth.
"""
from dataclasses import dataclass, field
from typing import Dict, List

import numpy as np

FRAME_SHAPE = (20, 40)   # rows, columns; 800 pixels
PROJECTED_DIM = 200


@dataclass
class GeneratedExperiment:
    sets: List[np.ndarray]
    hidden_common: np.ndarray
    hidden_specific: List[np.ndarray] = field(default_factory=list)
    meta: Dict[str, object] = field(default_factory=dict)

    @property
    def n_samples(self):
        return self.sets[0].shape[0]


def warp(z):
    """``f(z) = [z1^2 - z2, z1 + sqrt(z2)]`` applied row-wise."""
    z = np.atleast_2d(np.asarray(z, dtype=float))
    return np.column_stack([z[:, 0] ** 2 - z[:, 1], z[:, 0] + np.sqrt(z[:, 1])])


def gen_warped_square(n=400, seed=0):
    """Uniform samples on [0, 2]^2 observed through :func:`warp`."""
    if n < 2:
        raise ValueError("n must be >= 2")
    rng = np.random.default_rng(seed)
    z = rng.uniform(0.0, 2.0, size=(n, 2))
    return GeneratedExperiment([warp(z)], z, [],
                               {"experiment": "warped_square", "n": n,
                                "seed": seed})


# -- coupled pendulum ------------------------------------------------------

@dataclass(frozen=True)
class PendulumPhysics:
    length: float = 1.0      # m
    k: float = 10.0          # spring constant, N/m
    mass: float = 1.0        # kg
    delta: float = 0.05      # initial displacement of pendulum 1, m
    g: float = 9.81          # m/s^2

    @property
    def omega1(self):
        return np.sqrt(self.g / self.length)

    @property
    def omega2(self):
        return np.sqrt(self.g / self.length + 2.0 * self.k / self.mass)


def pendulum_solution(t, length=1.0, k=10.0, m=1.0, delta=0.05, g=9.81):
    """Horizontal displacements (m) of the linearized coupled pendulum.

    Initial conditions: pendulum 1 released from ``delta``, pendulum 2 at
    rest at equilibrium.
    """
    if length <= 0 or m <= 0 or g <= 0 or k < 0:
        raise ValueError("need length, m, g > 0 and k >= 0")
    t = np.asarray(t, dtype=float)
    w1 = np.sqrt(g / length)
    w2 = np.sqrt(g / length + 2.0 * k / m)
    c1, c2 = np.cos(w1 * t), np.cos(w2 * t)
    return 0.5 * delta * (c1 + c2), 0.5 * delta * (c1 - c2)


def pendulum_rhs(state, length=1.0, k=10.0, m=1.0, g=9.81):
    """Right-hand side of the linearized ODE for ``(u1, u2, u1', u2')``."""
    u1, u2, v1, v2 = state
    # spring pulls each bob toward the other
    a1 = -g / length * u1 + k / m * (u2 - u1)
    a2 = -g / length * u2 - k / m * (u2 - u1)
    return np.array([v1, v2, a1, a2])


_PIVOT_COL = {"left": (12.0, 27.0), "right": (27.0, 12.0)}
_ROD = (14.0, 12.0)      # main, extra pendulum rod lengths in pixels
_BOB = (3.5, 3.0)        # bob radii in pixels
EDGE_SOFTNESS = 1.0      # logistic edge width of the bob in pixels


def _soft_disk(rr, cc, r0, c0, radius):
    d = np.hypot(rr - r0, cc - c0)
    return 1.0 / (1.0 + np.exp((d - radius) / EDGE_SOFTNESS))


def _soft_segment(rr, cc, r0, c0, r1, c1, width=0.6):
    pr, pc = rr - r0, cc - c0
    sr, sc = r1 - r0, c1 - c0
    t = np.clip((pr * sr + pc * sc) / (sr * sr + sc * sc), 0.0, 1.0)
    d2 = (pr - t * sr) ** 2 + (pc - t * sc) ** 2
    return 0.6 * np.exp(-d2 / (2.0 * width ** 2))


def _draw_pendulum(rr, cc, pivot_col, angle, rod, bob):
    r_bob = rod * np.cos(angle)
    c_bob = pivot_col + rod * np.sin(angle)
    rod_img = _soft_segment(rr, cc, 0.0, pivot_col, r_bob, c_bob)
    return 1.0 - (1.0 - rod_img) * (1.0 - _soft_disk(rr, cc, r_bob, c_bob, bob))


def render_pendulum_frame(angle_main, angle_noise=None, side="left"):
    """Render one movie frame as a column-stacked vector of 800 pixels.

    The pendulum of interest hangs from a pivot in one half of a 20 x 40
    raster; the optional extra pendulum hangs in the other half. Edges are
    soft (logistic disk, Gaussian rod), so the frame is a smooth function of
    the angles. Intensities lie in [0, 1].
    """
    if side not in _PIVOT_COL:
        raise ValueError(f"side must be 'left' or 'right', got {side!r}")
    for a in (angle_main, angle_noise):
        if a is not None and abs(a) >= np.pi / 2:
            raise ValueError("angles must satisfy |angle| < pi/2")
    rr, cc = np.mgrid[0:FRAME_SHAPE[0], 0:FRAME_SHAPE[1]].astype(float)
    main_col, extra_col = _PIVOT_COL[side]
    img = _draw_pendulum(rr, cc, main_col, angle_main, _ROD[0], _BOB[0])
    if angle_noise is not None:
        extra = _draw_pendulum(rr, cc, extra_col, angle_noise, _ROD[1], _BOB[1])
        img = 1.0 - (1.0 - img) * (1.0 - extra)
    return img.ravel(order="F")


def random_projection(rng, out_dim=PROJECTED_DIM, in_dim=None):
    """Gaussian matrix with orthonormalized rows, shape (out_dim, in_dim)."""
    in_dim = in_dim or FRAME_SHAPE[0] * FRAME_SHAPE[1]
    q, _ = np.linalg.qr(rng.standard_normal((in_dim, out_dim)))
    return q.T


def gen_pendulum(noisy=False, n=400, ts=0.0125, seed=0,
                 physics=PendulumPhysics(), angle_gain=8.0):
    """Two projected movies of the coupled pendulum.

    Movie 1 shows the left pendulum, movie 2 the right one. With ``noisy``
    each movie also shows an extra simple pendulum swinging at
    ``omega1 / 5`` (left movie) or ``4 * omega1`` (right movie). Drawn
    angles are the physical small angles ``u / L`` scaled by ``angle_gain``
    so the motion spans several pixels.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    p = physics
    t = np.arange(n) * ts
    u1, u2 = pendulum_solution(t, p.length, p.k, p.mass, p.delta, p.g)
    th1 = angle_gain * u1 / p.length
    th2 = angle_gain * u2 / p.length
    w1, w2 = p.omega1, p.omega2
    w3, w4 = w1 / 5.0, 4.0 * w1
    amp = angle_gain * p.delta / p.length
    th3 = amp * np.cos(w3 * t) if noisy else None
    th4 = amp * np.cos(w4 * t) if noisy else None
    left = np.array([render_pendulum_frame(
        th1[i], None if th3 is None else th3[i], "left") for i in range(n)])
    right = np.array([render_pendulum_frame(
        th2[i], None if th4 is None else th4[i], "right") for i in range(n)])
    rng = np.random.default_rng(seed)
    F = random_projection(rng)
    G = random_projection(rng)
    meta = {"experiment": "pendulum", "noisy": bool(noisy), "n": n, "ts": ts,
            "seed": seed, "angle_gain": angle_gain,
            "physics": {"length": p.length, "k": p.k, "mass": p.mass,
                        "delta": p.delta, "g": p.g},
            "f1": w1 / (2 * np.pi), "f2": w2 / (2 * np.pi)}
    specific = []
    if noisy:
        meta["f3"] = w3 / (2 * np.pi)
        meta["f4"] = w4 / (2 * np.pi)
        specific = [th3[:, None], th4[:, None]]
    return GeneratedExperiment([left @ F.T, right @ G.T],
                               np.column_stack([u1, u2]), specific, meta)


# -- rotating icons --------------------------------------------------------

ICON_SIZE = 20
# angular speed in degrees per frame
ICON_SPEEDS = {"mario": 4, "mushroom": 6, "turtle": 10, "flower": 15}
# blobs as (radius / half-size, polar angle in degrees, width px, weight);
# no glyph has a rotational symmetry, so frames identify the angle
_GLYPHS = {
    "mario": [(0.55, 0, 4.4, 1.0), (0.35, 140, 3.2, 0.8),
              (0.6, 250, 2.6, 0.6)],
    "mushroom": [(0.55, 90, 4.8, 1.0), (0.5, 200, 3.0, 0.7),
                 (0.15, 0, 3.6, 0.5)],
    "turtle": [(0.6, 30, 3.6, 0.9), (0.45, 170, 4.6, 1.0),
               (0.5, 290, 2.4, 0.5)],
    "flower": [(0.5, 60, 3.0, 1.0), (0.6, 180, 3.0, 0.55),
               (0.3, 300, 4.0, 0.8)],
}
ICON_LAYOUTS = {
    "disjoint": [("mushroom", "mario"), ("mushroom", "turtle"),
                 ("mushroom", "flower")],
    "pairwise": [("mushroom", "mario", "turtle"),
                 ("mushroom", "mario", "flower"),
                 ("mushroom", "turtle", "flower")],
}


def render_icon(name, angle_deg):
    """A rotated procedural glyph as an ICON_SIZE x ICON_SIZE image."""
    half = ICON_SIZE / 2.0
    rr, cc = np.mgrid[0:ICON_SIZE, 0:ICON_SIZE].astype(float) - (half - 0.5)
    rot = np.deg2rad(angle_deg % 360)
    field_ = np.zeros_like(rr)
    for rad, phi, width, weight in _GLYPHS[name]:
        a = np.deg2rad(phi) + rot
        r0, c0 = -rad * half * np.sin(a), rad * half * np.cos(a)
        field_ += weight * np.exp(-((rr - r0) ** 2 + (cc - c0) ** 2)
                                  / (2.0 * width ** 2))
    return 1.0 - np.exp(-2.0 * field_)


def gen_icons(n=300, layout="disjoint", seed=0):
    """Three movies of rotating glyphs; only the 6 deg/frame glyph is shared.

    ``layout="disjoint"`` gives each movie the shared glyph plus one private
    glyph; ``"pairwise"`` gives each movie three glyphs so that every pair of
    movies shares two of them. Frames are flattened column-major.
    """
    if n < 2:
        raise ValueError("n must be >= 2")
    if layout not in ICON_LAYOUTS:
        raise ValueError(f"layout must be one of {sorted(ICON_LAYOUTS)}")
    frames = np.arange(n)
    angles = {name: (speed * frames) % 360 for name, speed in ICON_SPEEDS.items()}
    sets = []
    for names in ICON_LAYOUTS[layout]:
        movie = np.array([
            np.hstack([render_icon(name, angles[name][i]) for name in names])
            .ravel(order="F") for i in frames])
        sets.append(movie)
    meta = {"experiment": "icons", "layout": layout, "n": n, "seed": seed,
            "frequencies": {name: speed / 360.0
                            for name, speed in ICON_SPEEDS.items()},
            "common": "mushroom"}
    hidden = np.deg2rad(angles["mushroom"])[:, None]
    specific = [np.column_stack([np.deg2rad(angles[nm]) for nm in names[1:]])
                for names in ICON_LAYOUTS[layout]]
    return GeneratedExperiment(sets, hidden, specific, meta)
