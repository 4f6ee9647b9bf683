"""Wrist-camera software renderer and appearance randomization.

A small depth-buffered triangle rasterizer draws the table plane, the object
primitive and the two gripper fingers from a pinhole camera mounted behind
the fingertips, looking along the approach axis.  All textures are procedural
(solid / checker / noise / stripes evaluated in world or object-local
coordinates) and shading is flat Lambert with one directional light.

Frames are rendered at 128x80 and turned into 64x40 observations by the
augmentation pipeline (HSV jitter -> Gaussian blur -> 2x2 box downsample).
Everything in this module is a pure function of its inputs.
"""

import math
from dataclasses import dataclass

import numpy as np

from . import simcore
from .errors import ConfigurationError, ContractError
from .util import rng_from

RAW_WIDTH, RAW_HEIGHT = 128, 80
OBS_WIDTH, OBS_HEIGHT = 64, 40

TEXTURE_KINDS = ("solid", "checker", "noise", "stripes")

_TABLE_HALF = 0.8
_BACKGROUND = np.array([0.07, 0.07, 0.09])
_FINGER_COLOR = np.array([0.45, 0.45, 0.47])
_FINGER_THICKNESS = 0.008
_AMBIENT, _DIFFUSE = 0.35, 0.65
_NEAR_Z = 0.01


@dataclass(frozen=True)
class CameraModel:
    """Pinhole camera rigidly mounted on the wrist, aimed along the approach
    axis from ``back_offset`` meters behind the fingertip plane."""

    fx: float = 70.0
    fy: float = 70.0
    cx: float = 64.0
    cy: float = 40.0
    width: int = RAW_WIDTH
    height: int = RAW_HEIGHT
    back_offset: float = 0.08

    def __post_init__(self):
        if self.fx <= 0 or self.fy <= 0:
            raise ConfigurationError("focal length must be positive")
        if not (0 <= self.cx <= self.width and 0 <= self.cy <= self.height):
            raise ConfigurationError("principal point outside the image")


@dataclass(frozen=True)
class TableTexture:
    kind: str = "solid"
    color_a: tuple = (0.8, 0.8, 0.8)
    color_b: tuple = (0.2, 0.2, 0.2)
    scale: float = 0.04
    angle: float = 0.0
    noise_seed: int = 0

    def __post_init__(self):
        if self.kind not in TEXTURE_KINDS:
            raise ConfigurationError(f"unknown texture kind {self.kind!r}")
        if self.scale <= 0:
            raise ConfigurationError("texture scale must be positive")
        object.__setattr__(self, "color_a", tuple(float(v) for v in self.color_a))
        object.__setattr__(self, "color_b", tuple(float(v) for v in self.color_b))


@dataclass(frozen=True)
class SceneRandomization:
    """One draw of the domain-randomized appearance parameters.

    ``blur_kernel`` is sampled from [1.0, 3.0]; the special value 0 disables
    the blur entirely and is used only by fixed (augmentation-off) scenes.
    """

    table: TableTexture = TableTexture()
    light_dir: tuple = (0.0, 0.0, 1.0)
    light_intensity: float = 1.0
    hue_shift: float = 0.0
    sat_gain: float = 1.0
    val_gain: float = 1.0
    blur_kernel: float = 1.0

    def __post_init__(self):
        d = np.asarray(self.light_dir, dtype=float)
        n = np.linalg.norm(d)
        if n == 0:
            raise ConfigurationError("light direction must be non-zero")
        object.__setattr__(self, "light_dir", tuple(d / n))
        if not (self.blur_kernel == 0.0 or 1.0 <= self.blur_kernel <= 3.0):
            raise ConfigurationError("blur_kernel must be 0 (off) or in [1, 3]")
        if self.sat_gain <= 0 or self.val_gain <= 0:
            raise ConfigurationError("sat/val gains must be positive")
        if self.light_intensity <= 0:
            raise ConfigurationError("light intensity must be positive")


def randomize_scene(seed: int) -> SceneRandomization:
    """Sample table texture, light, HSV jitter and blur kernel for one episode.

    Draw order (fixed): texture kind, colors a/b, scale, stripe angle, noise
    seed, light azimuth, light z, intensity, hue shift, sat gain, val gain,
    blur kernel.
    """
    rng = rng_from(seed)
    kind = TEXTURE_KINDS[int(rng.integers(len(TEXTURE_KINDS)))]
    color_a = tuple(rng.uniform(0.05, 0.95, size=3))
    color_b = tuple(rng.uniform(0.05, 0.95, size=3))
    scale = float(rng.uniform(0.01, 0.08))
    angle = float(rng.uniform(-math.pi, math.pi))
    noise_seed = int(rng.integers(2**31))
    azimuth = float(rng.uniform(-math.pi, math.pi))
    lz = float(rng.uniform(0.35, 0.95))
    lxy = math.sqrt(1.0 - lz * lz)
    light_dir = (lxy * math.cos(azimuth), lxy * math.sin(azimuth), lz)
    intensity = float(rng.uniform(0.4, 1.6))
    hue_shift = float(rng.uniform(-0.1, 0.1))
    sat_gain = float(rng.uniform(0.6, 1.4))
    val_gain = float(rng.uniform(0.6, 1.4))
    blur = float(rng.uniform(1.0, 3.0))
    return SceneRandomization(
        table=TableTexture(kind, color_a, color_b, scale, angle, noise_seed),
        light_dir=light_dir,
        light_intensity=intensity,
        hue_shift=hue_shift,
        sat_gain=sat_gain,
        val_gain=val_gain,
        blur_kernel=blur,
    )


def held_out_randomization() -> SceneRandomization:
    """Reserved evaluation appearance: fixed light table, no jitter, blur 1.0.

    Never produced by randomize_scene's continuous color draws, so training
    episodes cannot collide with it.
    """
    return SceneRandomization(
        table=TableTexture("solid", (0.82, 0.80, 0.76)),
        light_dir=(0.3, -0.25, 0.92),
        light_intensity=1.0,
        hue_shift=0.0,
        sat_gain=1.0,
        val_gain=1.0,
        blur_kernel=1.0,
    )


def fixed_training_randomization() -> SceneRandomization:
    """Single fixed appearance used when image augmentation is ablated."""
    return SceneRandomization(
        table=TableTexture("solid", (0.38, 0.42, 0.47)),
        light_dir=(-0.2, 0.15, 0.95),
        light_intensity=1.0,
        hue_shift=0.0,
        sat_gain=1.0,
        val_gain=1.0,
        blur_kernel=0.0,
    )


# --------------------------------------------------------------------------
# Procedural textures
# --------------------------------------------------------------------------

def _hash01(ix, iy, seed):
    h = (ix.astype(np.uint64) * np.uint64(73856093)
         ^ iy.astype(np.uint64) * np.uint64(19349663)
         ^ np.uint64(seed & 0x7FFFFFFF) * np.uint64(83492791))
    h ^= h >> np.uint64(13)
    h = (h * np.uint64(0x2545F4914F6CDD1D)) & np.uint64(0xFFFFFFFFFFFFFFFF)
    h ^= h >> np.uint64(32)
    return (h & np.uint64(0xFFFFFF)).astype(np.float64) / float(0x1000000)


def _value_noise(xy, scale, seed):
    g = xy / scale
    gi = np.floor(g)
    f = g - gi
    f = f * f * (3.0 - 2.0 * f)
    ix, iy = gi[:, 0].astype(np.int64), gi[:, 1].astype(np.int64)
    v00 = _hash01(ix, iy, seed)
    v10 = _hash01(ix + 1, iy, seed)
    v01 = _hash01(ix, iy + 1, seed)
    v11 = _hash01(ix + 1, iy + 1, seed)
    top = v00 + (v10 - v00) * f[:, 0]
    bot = v01 + (v11 - v01) * f[:, 0]
    return top + (bot - top) * f[:, 1]


def table_albedo(tex: TableTexture, xy: np.ndarray) -> np.ndarray:
    """Procedural table color at world (x, y) points, shape (M, 2) -> (M, 3)."""
    a = np.asarray(tex.color_a)
    b = np.asarray(tex.color_b)
    if tex.kind == "solid":
        return np.broadcast_to(a, (len(xy), 3)).copy()
    if tex.kind == "checker":
        idx = (np.floor(xy[:, 0] / tex.scale) + np.floor(xy[:, 1] / tex.scale)) % 2
        return np.where(idx[:, None] == 0, a, b)
    if tex.kind == "stripes":
        t = xy[:, 0] * math.cos(tex.angle) + xy[:, 1] * math.sin(tex.angle)
        idx = np.floor(t / tex.scale) % 2
        return np.where(idx[:, None] == 0, a, b)
    v = _value_noise(xy, tex.scale, tex.noise_seed)
    return a + (b - a) * v[:, None]


def _hsv_basic(h, s, v):
    i = int(h * 6.0) % 6
    f = h * 6.0 - math.floor(h * 6.0)
    p, q, t = v * (1 - s), v * (1 - s * f), v * (1 - s * (1 - f))
    return [(v, t, p), (q, v, p), (p, v, t), (p, q, v), (t, p, v), (v, p, q)][i]


def object_albedo(obj: simcore.ObjectModel, points: np.ndarray) -> np.ndarray:
    """Object surface color: a hue keyed by texture_id with a contrasting
    band around the middle third of the height."""
    hue = (obj.texture_id * 0.6180339887498949) % 1.0
    base = np.array(_hsv_basic(hue, 0.75, 0.85))
    band = np.array(_hsv_basic((hue + 0.5) % 1.0, 0.8, 0.95))
    zf = points[:, 2] / obj.height
    in_band = (zf > 1 / 3) & (zf < 2 / 3)
    return np.where(in_band[:, None], band, base)


# --------------------------------------------------------------------------
# Meshes
# --------------------------------------------------------------------------

_BOX_FACES = (
    ((0, 1, 2), (0, 2, 3)),  # -z
    ((4, 6, 5), (4, 7, 6)),  # +z
    ((0, 4, 5), (0, 5, 1)),  # -y side
    ((3, 2, 6), (3, 6, 7)),  # +y side
    ((1, 5, 6), (1, 6, 2)),  # +x side
    ((0, 3, 7), (0, 7, 4)),  # -x side
)


def _oriented_box(center, axes, half) -> np.ndarray:
    """12 triangles of a box given its center, axis rows (3,3) and half extents."""
    signs = np.array([
        (-1, -1, -1), (1, -1, -1), (1, 1, -1), (-1, 1, -1),
        (-1, -1, 1), (1, -1, 1), (1, 1, 1), (-1, 1, 1),
    ], dtype=float)
    corners = center + (signs * half) @ axes
    tris = [corners[list(t)] for face in _BOX_FACES for t in face]
    return np.array(tris)


def _object_mesh(obj: simcore.ObjectModel, pose: simcore.Pose, segments=16) -> np.ndarray:
    center = pose.pos()
    if obj.shape == "box":
        yaw = pose.yaw
        axes = np.array([
            [math.cos(yaw), math.sin(yaw), 0.0],
            [-math.sin(yaw), math.cos(yaw), 0.0],
            [0.0, 0.0, 1.0],
        ])
        return _oriented_box(center, axes, obj.half_extents())
    r, h = obj.dimensions[0], obj.height
    ang = np.linspace(0.0, 2 * math.pi, segments, endpoint=False)
    ring = np.stack([r * np.cos(ang), r * np.sin(ang)], axis=1)
    lo = np.concatenate([center[:2] + ring, np.full((segments, 1), center[2] - h / 2)], axis=1)
    hi = np.concatenate([center[:2] + ring, np.full((segments, 1), center[2] + h / 2)], axis=1)
    tris = []
    c_lo = np.array([center[0], center[1], center[2] - h / 2])
    c_hi = np.array([center[0], center[1], center[2] + h / 2])
    for i in range(segments):
        j = (i + 1) % segments
        tris.append([lo[i], lo[j], hi[j]])
        tris.append([lo[i], hi[j], hi[i]])
        tris.append([c_lo, lo[j], lo[i]])
        tris.append([c_hi, hi[i], hi[j]])
    return np.array(tris)


def _finger_meshes(state: simcore.WorldState) -> np.ndarray:
    gr = state.gripper
    c, p, a = simcore.gripper_frame(gr)
    tcp = gr.pose.pos()
    axes = np.stack([c, p, a])
    half = np.array([
        _FINGER_THICKNESS / 2,
        simcore.FINGER_PAD_WIDTH / 2,
        simcore.FINGER_LENGTH / 2,
    ])
    tris = []
    for side in (1.0, -1.0):
        center = tcp + side * (gr.aperture / 2 + _FINGER_THICKNESS / 2) * c \
            - (simcore.FINGER_LENGTH / 2) * a
        tris.append(_oriented_box(center, axes, half))
    return np.concatenate(tris)


# --------------------------------------------------------------------------
# Rasterizer
# --------------------------------------------------------------------------

def _clip_near(cam_tri, world_tri, near):
    """Sutherland-Hodgman clip of one triangle against Z >= near."""
    out_cam, out_world = [], []
    for i in range(3):
        j = (i + 1) % 3
        ci, cj = cam_tri[i], cam_tri[j]
        wi, wj = world_tri[i], world_tri[j]
        in_i, in_j = ci[2] >= near, cj[2] >= near
        if in_i:
            out_cam.append(ci)
            out_world.append(wi)
        if in_i != in_j:
            t = (near - ci[2]) / (cj[2] - ci[2])
            out_cam.append(ci + t * (cj - ci))
            out_world.append(wi + t * (wj - wi))
    if len(out_cam) < 3:
        return []
    pieces = []
    for k in range(1, len(out_cam) - 1):
        pieces.append((
            np.stack([out_cam[0], out_cam[k], out_cam[k + 1]]),
            np.stack([out_world[0], out_world[k], out_world[k + 1]]),
        ))
    return pieces


def _rasterize_group(img, zbuf, cam, cam_rot, cam_pos, tris_world, albedo_fn, rand):
    light = np.asarray(rand.light_dir)
    for tri_world in tris_world:
        normal = np.cross(tri_world[1] - tri_world[0], tri_world[2] - tri_world[0])
        nn = np.linalg.norm(normal)
        if nn < 1e-16:
            continue
        shade = _AMBIENT + _DIFFUSE * rand.light_intensity * abs(normal @ light) / nn
        tri_cam = (tri_world - cam_pos) @ cam_rot.T
        for piece_cam, piece_world in _clip_near(tri_cam, tri_world, _NEAR_Z):
            _rasterize_triangle(img, zbuf, cam, piece_cam, piece_world, albedo_fn, shade)


def _rasterize_triangle(img, zbuf, cam, tri_cam, tri_world, albedo_fn, shade):
    z = tri_cam[:, 2]
    u = cam.fx * tri_cam[:, 0] / z + cam.cx
    v = cam.fy * tri_cam[:, 1] / z + cam.cy
    ix0 = max(0, int(math.floor(u.min() - 0.5)))
    ix1 = min(cam.width - 1, int(math.ceil(u.max() - 0.5)))
    iy0 = max(0, int(math.floor(v.min() - 0.5)))
    iy1 = min(cam.height - 1, int(math.ceil(v.max() - 0.5)))
    if ix0 > ix1 or iy0 > iy1:
        return
    px = np.arange(ix0, ix1 + 1) + 0.5
    py = np.arange(iy0, iy1 + 1) + 0.5
    pxg, pyg = np.meshgrid(px, py)

    def edge(ax, ay, bx, by):
        return (bx - ax) * (pyg - ay) - (by - ay) * (pxg - ax)

    w0 = edge(u[1], v[1], u[2], v[2])
    w1 = edge(u[2], v[2], u[0], v[0])
    w2 = edge(u[0], v[0], u[1], v[1])
    area = w0 + w1 + w2
    if abs(area[0, 0]) < 1e-12:
        return
    inside = ((w0 >= 0) & (w1 >= 0) & (w2 >= 0)) | ((w0 <= 0) & (w1 <= 0) & (w2 <= 0))
    if not inside.any():
        return
    l0, l1, l2 = w0 / area, w1 / area, w2 / area
    inv_z = l0 / z[0] + l1 / z[1] + l2 / z[2]
    sub = zbuf[iy0:iy1 + 1, ix0:ix1 + 1]
    visible = inside & (inv_z > sub)
    if not visible.any():
        return
    l0v, l1v, l2v = l0[visible], l1[visible], l2[visible]
    izv = inv_z[visible]
    pts = (np.outer(l0v / z[0], tri_world[0])
           + np.outer(l1v / z[1], tri_world[1])
           + np.outer(l2v / z[2], tri_world[2])) / izv[:, None]
    colors = np.clip(albedo_fn(pts) * shade, 0.0, 1.0)
    sub[visible] = izv
    img[iy0:iy1 + 1, ix0:ix1 + 1][visible] = colors


def render(state: simcore.WorldState, cam: CameraModel,
           rand: SceneRandomization) -> np.ndarray:
    """Rasterize the scene from the wrist camera; returns (height, width, 3)
    float32 in [0, 1]. Deterministic in its inputs."""
    c, p, a = simcore.gripper_frame(state.gripper)
    cam_pos = state.gripper.pose.pos() - a * cam.back_offset
    cam_rot = np.stack([c, p, a])  # rows: right, down, forward

    img = np.tile(_BACKGROUND, (cam.height, cam.width, 1))
    zbuf = np.zeros((cam.height, cam.width))

    th = _TABLE_HALF
    table = np.array([
        [[-th, -th, 0.0], [th, -th, 0.0], [th, th, 0.0]],
        [[-th, -th, 0.0], [th, th, 0.0], [-th, th, 0.0]],
    ])
    _rasterize_group(img, zbuf, cam, cam_rot, cam_pos, table,
                     lambda pts: table_albedo(rand.table, pts[:, :2]), rand)
    _rasterize_group(img, zbuf, cam, cam_rot, cam_pos,
                     _object_mesh(state.object, state.object_pose),
                     lambda pts: object_albedo(state.object, pts), rand)
    _rasterize_group(img, zbuf, cam, cam_rot, cam_pos, _finger_meshes(state),
                     lambda pts: np.broadcast_to(_FINGER_COLOR, (len(pts), 3)), rand)
    return img.astype(np.float32)


# --------------------------------------------------------------------------
# Augmentation pipeline
# --------------------------------------------------------------------------

def rgb_to_hsv(img: np.ndarray) -> np.ndarray:
    r, g, b = img[..., 0], img[..., 1], img[..., 2]
    maxc = img.max(axis=-1)
    minc = img.min(axis=-1)
    v = maxc
    diff = maxc - minc
    s = np.where(maxc > 0, diff / np.maximum(maxc, 1e-20), 0.0)
    safe = np.maximum(diff, 1e-20)
    rc = (maxc - r) / safe
    gc = (maxc - g) / safe
    bc = (maxc - b) / safe
    h = np.where(maxc == r, bc - gc, np.where(maxc == g, 2.0 + rc - bc, 4.0 + gc - rc))
    h = np.where(diff > 0, (h / 6.0) % 1.0, 0.0)
    return np.stack([h, s, v], axis=-1)


def hsv_to_rgb(hsv: np.ndarray) -> np.ndarray:
    h, s, v = hsv[..., 0], hsv[..., 1], hsv[..., 2]
    i = np.floor(h * 6.0).astype(int) % 6
    f = h * 6.0 - np.floor(h * 6.0)
    p = v * (1.0 - s)
    q = v * (1.0 - s * f)
    t = v * (1.0 - s * (1.0 - f))
    r = np.choose(i, [v, q, p, p, t, v])
    g = np.choose(i, [t, v, v, q, p, p])
    b = np.choose(i, [p, p, t, v, v, q])
    return np.stack([r, g, b], axis=-1)


def gaussian_kernel(blur_kernel: float) -> np.ndarray:
    """1-D normalized Gaussian with sigma = blur_kernel / 3 and an odd support
    of size 2*ceil(blur_kernel) + 1."""
    sigma = blur_kernel / 3.0
    half = int(math.ceil(blur_kernel))
    x = np.arange(-half, half + 1, dtype=float)
    w = np.exp(-0.5 * (x / sigma) ** 2)
    return w / w.sum()


def _convolve_axis(img, kernel, axis):
    half = len(kernel) // 2
    pad = [(0, 0)] * img.ndim
    pad[axis] = (half, half)
    padded = np.pad(img, pad, mode="reflect")
    windows = np.lib.stride_tricks.sliding_window_view(padded, len(kernel), axis=axis)
    return windows @ kernel


def make_observation(raw: np.ndarray, rand: SceneRandomization) -> np.ndarray:
    """HSV jitter + Gaussian blur + 2x2 box downsample of a raw frame.

    Returns a float32 (OBS_HEIGHT, OBS_WIDTH, 3) array in [0, 1].
    """
    raw = np.asarray(raw)
    if raw.shape != (RAW_HEIGHT, RAW_WIDTH, 3):
        raise ContractError(f"raw frame must be {(RAW_HEIGHT, RAW_WIDTH, 3)}, got {raw.shape}")
    img = raw.astype(np.float64)
    if rand.hue_shift != 0.0 or rand.sat_gain != 1.0 or rand.val_gain != 1.0:
        hsv = rgb_to_hsv(img)
        hsv[..., 0] = (hsv[..., 0] + rand.hue_shift) % 1.0
        hsv[..., 1] = np.clip(hsv[..., 1] * rand.sat_gain, 0.0, 1.0)
        hsv[..., 2] = np.clip(hsv[..., 2] * rand.val_gain, 0.0, 1.0)
        img = hsv_to_rgb(hsv)
    if rand.blur_kernel > 0.0:
        k = gaussian_kernel(rand.blur_kernel)
        img = _convolve_axis(img, k, axis=0)
        img = _convolve_axis(img, k, axis=1)
    obs = img.reshape(OBS_HEIGHT, 2, OBS_WIDTH, 2, 3).mean(axis=(1, 3))
    return np.clip(obs, 0.0, 1.0).astype(np.float32)


def observe(state, cam: CameraModel, rand: SceneRandomization) -> np.ndarray:
    """Full observation pipeline: render then augment/downsample."""
    return make_observation(render(state, cam, rand), rand)
