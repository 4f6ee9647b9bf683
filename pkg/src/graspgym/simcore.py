"""Kinematic grasping world.

A single parallel-jaw gripper above a table (z=0) with one object resting on
it.  Episodes follow a fixed protocol: randomized reset, ``k`` relative motion
steps expressed in the gripper frame, then a geometric grasp-and-lift test.
There is no rigid-body dynamics; contacts are a penetration-depth proxy and
the grasp test is an antipodal width/alignment/friction-cone check.

Conventions
-----------
* World frame: z up, table plane at z=0. Object poses store the centroid.
* Gripper frame: ``c`` closing axis (fingers close along it), ``p`` pad axis
  (finger-pad width direction), ``a`` approach axis pointing from wrist to
  fingertips. The tool-center point (TCP) sits midway between the fingertip
  pads, in the fingertip plane.
* Top-down grasps: ``a=(0,0,-1)`` and ``pose.yaw`` is the world yaw of the
  closing axis. Side grasps: ``a`` is horizontal at ``approach_yaw`` and
  ``pose.yaw`` is the roll about ``a`` (0 = fingers closing horizontally).
"""

import math
from dataclasses import dataclass, field, replace

import numpy as np

from .errors import ConfigurationError, ProtocolError
from .util import rng_from, wrap_angle, wrap_symmetric

# Gripper geometry and contact constants.
MAX_APERTURE = 0.04          # m between fully open finger pads
FINGER_LENGTH = 0.05         # m, pad extent along the approach axis
FINGER_PAD_WIDTH = 0.04      # m, pad extent along the pad axis
FRICTION_CONE_TOL = 0.25     # rad, max rotation offset that still holds
CONTACT_STIFFNESS = 100.0    # force proxy per meter of tip penetration
DISPLACEMENT_TOL = 0.005     # m of free object motion before the penalty fires
WORKSPACE_SIDE = 0.10        # m, side of the square the object is reset into

FACE_TOP = "top"
FACE_SIDE_A = "side_a"
FACE_SIDE_B = "side_b"
FACE_SIDE_ANY = "side_any"
ALL_FACES = (FACE_TOP, FACE_SIDE_A, FACE_SIDE_B, FACE_SIDE_ANY)

MODE_TOP = "top"
MODE_MULTI_SIDE = "multi_side"

APPROACH_TOP_DOWN = "top_down"
APPROACH_SIDE = "side"

_Z = np.array([0.0, 0.0, 1.0])


@dataclass(frozen=True)
class ActionBounds:
    """Per-dimension clipping box for relative gripper motions."""

    delta_tran: float = 0.05
    delta_rot: float = math.pi / 4

    def __post_init__(self):
        if self.delta_tran <= 0 or self.delta_rot <= 0:
            raise ConfigurationError("action bounds must be strictly positive")

    def as_vector(self) -> np.ndarray:
        return np.array([self.delta_tran] * 3 + [self.delta_rot])


DEFAULT_BOUNDS = ActionBounds()


@dataclass(frozen=True)
class Action:
    """Relative motion in the gripper frame plus rotation about the approach axis."""

    dx: float = 0.0
    dy: float = 0.0
    dz: float = 0.0
    dphi: float = 0.0

    def as_array(self) -> np.ndarray:
        return np.array([self.dx, self.dy, self.dz, self.dphi])

    @staticmethod
    def from_array(a) -> "Action":
        a = np.asarray(a, dtype=float)
        return Action(float(a[0]), float(a[1]), float(a[2]), float(a[3]))

    def clipped(self, bounds: ActionBounds = DEFAULT_BOUNDS) -> "Action":
        b = bounds.as_vector()
        return Action.from_array(np.clip(self.as_array(), -b, b))


@dataclass(frozen=True)
class Pose:
    """Position plus yaw; yaw is always stored wrapped into (-pi, pi]."""

    position: tuple = (0.0, 0.0, 0.0)
    yaw: float = 0.0

    def __post_init__(self):
        object.__setattr__(self, "position", tuple(float(v) for v in self.position))
        object.__setattr__(self, "yaw", wrap_angle(float(self.yaw)))

    def pos(self) -> np.ndarray:
        return np.array(self.position)


@dataclass(frozen=True)
class ObjectModel:
    """A graspable textured primitive standing on the table.

    ``dimensions`` is (width, depth, height) for boxes and
    (radius, radius, height) for cylinders.  ``yaw_symmetry`` is the smallest
    yaw period of the shape (pi for a generic box, 0 = fully symmetric).
    """

    shape: str = "box"
    dimensions: tuple = (0.016, 0.05, 0.06)
    yaw_symmetry: float = math.pi
    texture_id: int = 0
    graspable_faces: frozenset = frozenset({FACE_TOP, FACE_SIDE_A, FACE_SIDE_B})

    def __post_init__(self):
        object.__setattr__(self, "dimensions", tuple(float(v) for v in self.dimensions))
        object.__setattr__(self, "graspable_faces", frozenset(self.graspable_faces))
        if self.shape not in ("box", "cylinder"):
            raise ConfigurationError(f"unknown shape {self.shape!r}")
        if any(d <= 0 for d in self.dimensions) or self.yaw_symmetry < 0:
            raise ConfigurationError("object dimensions must be positive")
        if not self.graspable_faces:
            raise ConfigurationError("object needs at least one graspable face")
        for face in self.graspable_faces:
            if face not in ALL_FACES:
                raise ConfigurationError(f"unknown face {face!r}")
            if self.shape == "box" and face == FACE_SIDE_ANY:
                raise ConfigurationError("side_any is only valid for cylinders")
            if self.shape == "cylinder" and face in (FACE_SIDE_A, FACE_SIDE_B):
                raise ConfigurationError("cylinders use side_any, not side_a/side_b")
            if self.grasp_width(face) >= MAX_APERTURE:
                raise ConfigurationError(
                    f"face {face!r} is too wide for the {MAX_APERTURE} m aperture"
                )

    @property
    def height(self) -> float:
        return self.dimensions[2]

    def grasp_width(self, face: str) -> float:
        """Cross-section width along the ideal closing axis at the given face."""
        if self.shape == "cylinder":
            return 2.0 * self.dimensions[0]
        return self.dimensions[0]

    def half_extents(self) -> np.ndarray:
        w, d, h = self.dimensions
        return np.array([w / 2, d / 2, h / 2])


@dataclass(frozen=True)
class GripperState:
    """Parallel-jaw gripper pose and opening.

    ``pose.yaw`` is the closing-axis yaw for top-down approaches and the roll
    about the approach axis for side approaches; ``approach_yaw`` is the world
    yaw of the horizontal approach axis (side approaches only).
    """

    pose: Pose = Pose()
    approach: str = APPROACH_TOP_DOWN
    approach_yaw: float = 0.0
    aperture: float = MAX_APERTURE
    fingertip_force: float = 0.0

    def __post_init__(self):
        if self.approach not in (APPROACH_TOP_DOWN, APPROACH_SIDE):
            raise ConfigurationError(f"unknown approach {self.approach!r}")
        if not 0.0 <= self.aperture <= MAX_APERTURE:
            raise ConfigurationError("aperture outside [0, MAX_APERTURE]")
        if self.fingertip_force < 0:
            raise ConfigurationError("fingertip_force must be >= 0")


@dataclass(frozen=True)
class EpisodeConfig:
    """Reset randomization ranges and the episode length ``k``."""

    k: int = 5
    init_area: float = 0.05
    init_height_min: float = 0.02
    init_height_max: float = 0.045
    init_rot_offset_max: float = math.pi / 4
    grasp_mode: str = MODE_TOP

    def __post_init__(self):
        if self.k < 1:
            raise ConfigurationError("k must be >= 1")
        if self.init_area < 0 or self.init_height_min < 0:
            raise ConfigurationError("init ranges must be non-negative")
        if self.init_height_max < self.init_height_min:
            raise ConfigurationError("init_height_max < init_height_min")
        if self.grasp_mode not in (MODE_TOP, MODE_MULTI_SIDE):
            raise ConfigurationError(f"unknown grasp mode {self.grasp_mode!r}")


@dataclass(frozen=True)
class RewardWeights:
    """Magnitudes of the shaping terms; signs are applied by compute_reward."""

    w_success: float = 1.0
    w_dist: float = 2.0
    w_disp: float = 5.0
    w_contact: float = 0.1

    def __post_init__(self):
        if min(self.w_success, self.w_dist, self.w_disp, self.w_contact) < 0:
            raise ConfigurationError("reward weights must be >= 0")


@dataclass(frozen=True)
class StepInfo:
    """Per-step measurements; ``grasp_success`` is meaningful only when terminal."""

    centroid_distance: float
    rotation_offset: float
    object_displacement: float
    fingertip_force: float
    terminal: bool
    grasp_success: bool = False


@dataclass(frozen=True)
class WorldState:
    """Full simulator state for one episode; treat as an immutable value."""

    object: ObjectModel
    object_pose: Pose
    object_initial_pose: Pose
    gripper: GripperState
    step_index: int
    grasp_mode: str
    target_face: str
    max_steps: int


def gripper_frame(gripper: GripperState) -> tuple:
    """Return the (closing, pad, approach) unit axes in world coordinates."""
    if gripper.approach == APPROACH_TOP_DOWN:
        phi = gripper.pose.yaw
        c = np.array([math.cos(phi), math.sin(phi), 0.0])
        p = np.array([math.sin(phi), -math.cos(phi), 0.0])
        a = np.array([0.0, 0.0, -1.0])
        return c, p, a
    psi, rho = gripper.approach_yaw, gripper.pose.yaw
    a = np.array([math.cos(psi), math.sin(psi), 0.0])
    h_perp = np.array([math.sin(psi), -math.cos(psi), 0.0])
    c = math.cos(rho) * h_perp - math.sin(rho) * _Z
    p = -math.sin(rho) * h_perp - math.cos(rho) * _Z
    return c, p, a


def _face_approach_yaw(face: str, object_yaw: float) -> float:
    if face == FACE_SIDE_A:
        return wrap_angle(object_yaw - math.pi / 2)
    if face == FACE_SIDE_B:
        return wrap_angle(object_yaw + math.pi / 2)
    raise ConfigurationError(f"face {face!r} has no fixed approach yaw")


def ideal_grasp_angle(obj: ObjectModel, object_yaw: float, face: str) -> float:
    """Yaw (top-down) / roll (side) at which the closing axis is aligned."""
    if face == FACE_TOP and obj.shape == "box":
        return object_yaw
    return 0.0


def ideal_tcp_position(obj: ObjectModel, object_pose: Pose, face: str) -> np.ndarray:
    """TCP position of the perfectly aligned grasp (fingertips at centroid depth)."""
    return object_pose.pos()


def _support_along(obj: ObjectModel, object_yaw: float, direction_xy: np.ndarray) -> float:
    """Half-extent of the object footprint along a horizontal unit direction."""
    if obj.shape == "cylinder":
        return obj.dimensions[0]
    hw, hd, _ = obj.half_extents()
    cosd = direction_xy[0] * math.cos(object_yaw) + direction_xy[1] * math.sin(object_yaw)
    sind = -direction_xy[0] * math.sin(object_yaw) + direction_xy[1] * math.cos(object_yaw)
    return hw * abs(cosd) + hd * abs(sind)


def reset_episode(cfg: EpisodeConfig, obj: ObjectModel, rng_seed: int) -> WorldState:
    """Place the object randomly in the workspace and the gripper in the
    pre-grasp region of the chosen graspable face.

    Draw order (fixed for determinism): object x, y, yaw; face index; approach
    yaw (side_any only); two lateral offsets; approach-axis distance; rotation
    offset.
    """
    if cfg.grasp_mode == MODE_TOP:
        faces = [FACE_TOP]
    else:
        faces = sorted(obj.graspable_faces)
    faces = [f for f in faces if f in obj.graspable_faces]
    if not faces:
        raise ConfigurationError(
            f"grasp mode {cfg.grasp_mode!r} has no compatible graspable face"
        )

    rng = rng_from(rng_seed)
    half_ws = WORKSPACE_SIDE / 2
    ox, oy = rng.uniform(-half_ws, half_ws, size=2)
    oyaw = wrap_angle(rng.uniform(-math.pi, math.pi))
    face = faces[int(rng.integers(len(faces)))]
    psi = wrap_angle(rng.uniform(-math.pi, math.pi)) if face == FACE_SIDE_ANY else 0.0
    xi1, xi2 = rng.uniform(-cfg.init_area / 2, cfg.init_area / 2, size=2)
    u = rng.uniform(cfg.init_height_min, cfg.init_height_max)
    zeta = rng.uniform(-cfg.init_rot_offset_max, cfg.init_rot_offset_max)

    object_pose = Pose((ox, oy, obj.height / 2), oyaw)
    centroid = object_pose.pos()
    ideal_angle = ideal_grasp_angle(obj, oyaw, face)

    if face == FACE_TOP:
        pos = centroid + np.array([xi1, xi2, obj.height / 2 + u])
        gripper = GripperState(
            pose=Pose(tuple(pos), wrap_angle(ideal_angle + zeta)),
            approach=APPROACH_TOP_DOWN,
        )
    else:
        if face in (FACE_SIDE_A, FACE_SIDE_B):
            psi = _face_approach_yaw(face, oyaw)
        a = np.array([math.cos(psi), math.sin(psi), 0.0])
        h_perp = np.array([math.sin(psi), -math.cos(psi), 0.0])
        support = _support_along(obj, oyaw, -a[:2])
        pos = centroid - a * (support + u) + xi1 * h_perp + xi2 * _Z
        pos[2] = max(pos[2], 0.0)
        gripper = GripperState(
            pose=Pose(tuple(pos), wrap_angle(ideal_angle + zeta)),
            approach=APPROACH_SIDE,
            approach_yaw=psi,
        )

    return WorldState(
        object=obj,
        object_pose=object_pose,
        object_initial_pose=object_pose,
        gripper=gripper,
        step_index=0,
        grasp_mode=cfg.grasp_mode,
        target_face=face,
        max_steps=cfg.k,
    )


def centroid_distance(state: WorldState) -> float:
    """Euclidean distance from the TCP to the object centroid."""
    return float(np.linalg.norm(state.gripper.pose.pos() - state.object_pose.pos()))


def rotation_offset(state: WorldState) -> float:
    """Signed closing-axis misalignment, wrapped into the object's symmetry range.

    Fully symmetric objects (yaw_symmetry == 0) always report 0; the geometric
    grasp conditions still use the actual axes.
    """
    sym = state.object.yaw_symmetry
    if sym == 0.0:
        return 0.0
    ideal = ideal_grasp_angle(state.object, state.object_pose.yaw, state.target_face)
    return wrap_symmetric(state.gripper.pose.yaw - ideal, sym)


def _rot2(theta: float) -> np.ndarray:
    c, s = math.cos(theta), math.sin(theta)
    return np.array([[c, -s], [s, c]])


def _point_penetration(obj: ObjectModel, pose: Pose, point: np.ndarray) -> tuple:
    """Penetration depth of a point inside the object and the horizontal
    minimum-translation push to apply to the object (away from the point).
    """
    center = pose.pos()
    if obj.shape == "box":
        q = point - center
        q_local = np.array([*(_rot2(-pose.yaw) @ q[:2]), q[2]])
        half = obj.half_extents()
        if not np.all(np.abs(q_local) < half):
            return 0.0, np.zeros(2)
        exits = half - np.abs(q_local)
        axis = int(np.argmin(exits))
        depth = float(exits[axis])
        if axis == 2:
            return depth, np.zeros(2)
        sign = 1.0 if q_local[axis] >= 0 else -1.0
        dir_local = np.zeros(2)
        dir_local[axis] = sign
        return depth, -depth * (_rot2(pose.yaw) @ dir_local)
    q = point - center
    rho = math.hypot(q[0], q[1])
    r, hh = obj.dimensions[0], obj.height / 2
    if rho >= r or abs(q[2]) >= hh:
        return 0.0, np.zeros(2)
    e_r, e_z = r - rho, hh - abs(q[2])
    if e_r <= e_z:
        radial = q[:2] / rho if rho > 0 else np.array([1.0, 0.0])
        return e_r, -e_r * radial
    return e_z, np.zeros(2)


def step(state: WorldState, action: Action, bounds: ActionBounds = DEFAULT_BOUNDS) -> tuple:
    """Apply one clipped relative motion; returns (new state, StepInfo).

    The translation is expressed in the gripper frame as seen when the action
    was chosen (rotation is applied afterwards).  Fingertip contact is a
    point-tip penetration test: the object receives the horizontal component
    of the minimum-translation push and the penetration depth is turned into
    a force proxy.
    """
    if state.step_index >= state.max_steps:
        raise ProtocolError("episode already terminal; reset before stepping")

    act = action.clipped(bounds)
    gr = state.gripper
    c, p, a = gripper_frame(gr)
    new_pos = gr.pose.pos() + act.dx * c + act.dy * p + act.dz * a
    new_yaw = wrap_angle(gr.pose.yaw + act.dphi)

    moved = GripperState(
        pose=Pose(tuple(new_pos), new_yaw),
        approach=gr.approach,
        approach_yaw=gr.approach_yaw,
        aperture=gr.aperture,
    )
    c_new = gripper_frame(moved)[0]
    # Keep both fingertip points at or above the table plane.
    tip_drop = (gr.aperture / 2) * abs(c_new[2])
    if new_pos[2] < tip_drop:
        new_pos[2] = tip_drop
        moved = replace(moved, pose=Pose(tuple(new_pos), new_yaw))

    c2, p2, a2 = gripper_frame(moved)
    tcp = moved.pose.pos()
    half_ap = moved.aperture / 2
    total_push = np.zeros(2)
    total_depth = 0.0
    for tip in (tcp + half_ap * c2, tcp - half_ap * c2):
        depth, push = _point_penetration(state.object, state.object_pose, tip)
        total_depth += depth
        total_push += push
    force = CONTACT_STIFFNESS * total_depth

    obj_pos = state.object_pose.pos()
    new_object_pose = Pose(
        (obj_pos[0] + total_push[0], obj_pos[1] + total_push[1], obj_pos[2]),
        state.object_pose.yaw,
    )

    new_state = WorldState(
        object=state.object,
        object_pose=new_object_pose,
        object_initial_pose=state.object_initial_pose,
        gripper=replace(moved, fingertip_force=force),
        step_index=state.step_index + 1,
        grasp_mode=state.grasp_mode,
        target_face=state.target_face,
        max_steps=state.max_steps,
    )
    info = StepInfo(
        centroid_distance=centroid_distance(new_state),
        rotation_offset=rotation_offset(new_state),
        object_displacement=float(
            np.linalg.norm(new_object_pose.pos() - state.object_initial_pose.pos())
        ),
        fingertip_force=force,
        terminal=new_state.step_index == new_state.max_steps,
        grasp_success=False,
    )
    return new_state, info


def _slice_interval(state: WorldState):
    """Projection of the object cross-section at the fingertip plane onto the
    closing axis, as an interval relative to the TCP; None when the plane
    misses the object.
    """
    obj = state.object
    pose = state.object_pose
    gr = state.gripper
    c, p, a = gripper_frame(gr)
    g = gr.pose.pos()
    center = pose.pos()

    if gr.approach == APPROACH_TOP_DOWN:
        if not 0.0 <= g[2] < obj.height:
            return None
        offset = float((center[:2] - g[:2]) @ c[:2])
        if obj.shape == "cylinder":
            half = obj.dimensions[0]
        else:
            delta = gr.pose.yaw - pose.yaw
            hw, hd, _ = obj.half_extents()
            half = hw * abs(math.cos(delta)) + hd * abs(math.sin(delta))
        return offset - half, offset + half

    h_vec = np.array([a[1], -a[0]])  # horizontal in-plane direction (= a x z)
    if obj.shape == "box":
        lp = _rot2(-pose.yaw) @ (g[:2] - center[:2])
        ld = _rot2(-pose.yaw) @ h_vec
        hw, hd, _ = obj.half_extents()
        t0, t1 = -math.inf, math.inf
        for lo_i, d_i, half_i in ((lp[0], ld[0], hw), (lp[1], ld[1], hd)):
            if abs(d_i) < 1e-12:
                if abs(lo_i) >= half_i:
                    return None
                continue
            ta = (-half_i - lo_i) / d_i
            tb = (half_i - lo_i) / d_i
            t0 = max(t0, min(ta, tb))
            t1 = min(t1, max(ta, tb))
        if t0 >= t1:
            return None
    else:
        s_dist = float((center[:2] - g[:2]) @ a[:2])
        r = obj.dimensions[0]
        if abs(s_dist) >= r:
            return None
        chord = math.sqrt(r * r - s_dist * s_dist)
        t_c = float((center[:2] - g[:2]) @ h_vec)
        t0, t1 = t_c - chord, t_c + chord

    projections = []
    for t in (t0, t1):
        for z in (0.0, obj.height):
            pt = np.array([g[0] + t * h_vec[0], g[1] + t * h_vec[1], z])
            projections.append(float((pt - g) @ c))
    return min(projections), max(projections)


def attempt_grasp(state: WorldState) -> bool:
    """Geometric grasp-and-lift test at the end of an episode.

    Success requires: a graspable cross-section width at fingertip depth, the
    object interval strictly inside the open fingers (no closing-path
    collision), pad-axis alignment within half a pad width, and a rotation
    offset inside the friction-cone tolerance.
    """
    if state.step_index != state.max_steps:
        raise ProtocolError("grasp attempt only allowed after the final step")
    interval = _slice_interval(state)
    if interval is None:
        return False
    lo, hi = interval
    width = hi - lo
    if not 0.0 < width < MAX_APERTURE:
        return False
    half_ap = state.gripper.aperture / 2
    if not (lo > -half_ap and hi < half_ap):
        return False
    _, p, _ = gripper_frame(state.gripper)
    lateral = float((state.object_pose.pos() - state.gripper.pose.pos()) @ p)
    if not abs(lateral) < FINGER_PAD_WIDTH / 2:
        return False
    return abs(rotation_offset(state)) < FRICTION_CONE_TOL


def grasp_attempt_info(state: WorldState, grasp_success: bool) -> StepInfo:
    """StepInfo describing the terminal grasp attempt at the current state."""
    return StepInfo(
        centroid_distance=centroid_distance(state),
        rotation_offset=rotation_offset(state),
        object_displacement=float(
            np.linalg.norm(state.object_pose.pos() - state.object_initial_pose.pos())
        ),
        fingertip_force=state.gripper.fingertip_force,
        terminal=True,
        grasp_success=grasp_success,
    )


def compute_reward(info: StepInfo, weights: RewardWeights = RewardWeights()) -> float:
    """Shaped reward: terminal success bonus minus distance, displacement and
    (pre-attempt only) fingertip-contact penalties.
    """
    reward = 0.0
    if info.terminal and info.grasp_success:
        reward += weights.w_success
    reward -= weights.w_dist * info.centroid_distance
    reward -= weights.w_disp * max(0.0, info.object_displacement - DISPLACEMENT_TOL)
    if not info.terminal:
        reward -= weights.w_contact * info.fingertip_force
    return reward


def scripted_oracle_action(state: WorldState, bounds: ActionBounds = DEFAULT_BOUNDS) -> Action:
    """Move straight toward the ideal grasp pose (clipped); sanity-check policy."""
    c, p, a = gripper_frame(state.gripper)
    delta = ideal_tcp_position(state.object, state.object_pose, state.target_face) \
        - state.gripper.pose.pos()
    raw = Action(float(delta @ c), float(delta @ p), float(delta @ a),
                 -rotation_offset(state))
    return raw.clipped(bounds)


def random_action(rng: np.random.Generator, bounds: ActionBounds = DEFAULT_BOUNDS) -> Action:
    """Uniform random action inside the bounds box."""
    b = bounds.as_vector()
    return Action.from_array(rng.uniform(-b, b))
