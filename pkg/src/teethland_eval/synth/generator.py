"""Seeded synthetic jaws, degraded prediction sets and planted point fields.

Every random draw comes from NumPy's Philox4x64 counter-based generator, so a seed
reproduces the same fixtures on any platform.
"""

import logging
import math
from dataclasses import dataclass

import numpy as np
from pydantic import BaseModel, Field, model_validator
from scipy.spatial import cKDTree

from ..config import NoiseSpec, SynthConfig
from ..geometry.mesh import TriangleMesh
from ..models import Landmark, LandmarkClass, LandmarkFile, Prediction
from ..postprocess.fields import PointField
from ..utils.landmark_file import FORMAT_VERSION

logger = logging.getLogger(__name__)

# cusps per tooth by position from the midline: incisors, canine, premolars, molars
CUSP_TEMPLATE = (1, 1, 1, 2, 2, 4, 4, 3)

# relative heights of the flank landmarks on the crown profile
FACIAL_HEIGHT = 0.8
RIM_HEIGHT = 0.5
CONTACT_HEIGHT = 0.6
CUSP_OFFSET = 0.45

Seed = int | np.random.SeedSequence


def make_rng(seed: Seed) -> np.random.Generator:
    """Philox-backed generator for an integer seed or a SeedSequence."""
    return np.random.Generator(np.random.Philox(seed))


class ArchSpec(BaseModel):
    """Shape parameters of a synthetic dental arch."""

    tooth_count: int = Field(default=14, ge=1, description="Teeth along the arch")
    arch_radius: float = Field(default=30.0, gt=0, description="Arch radius in mm")
    cusp_counts: list[int] | None = Field(
        default=None, description="Cusps per tooth in arch order; template when omitted"
    )
    crown_height: float = Field(default=5.0, gt=0, description="Crown height in mm")
    cusp_radius: float = Field(default=1.2, gt=0, description="Radius of the cusp bumps")
    width_ratio: float = Field(
        default=0.4, gt=0, lt=0.5, description="Half crown width over the per-tooth arc length"
    )
    depth_ratio: float = Field(default=1.3, gt=0, description="Crown depth over crown width")
    arch_span: float = Field(
        default=0.9, gt=0, le=1, description="Fraction of a half circle covered by teeth"
    )
    resolution: float = Field(default=0.3, gt=0, description="Mesh grid spacing in mm")
    jitter: float = Field(default=0.05, ge=0, lt=0.5, description="Relative size variation")

    @model_validator(mode="after")
    def validate_cusps(self) -> "ArchSpec":
        """Explicit cusp counts cover every tooth with 1 to 5 cusps."""
        if self.cusp_counts is not None:
            if len(self.cusp_counts) != self.tooth_count:
                raise ValueError("cusp_counts must list one count per tooth")
            if any(not 1 <= c <= 5 for c in self.cusp_counts):
                raise ValueError("every tooth has between 1 and 5 cusps")
        return self

    def cusp_template(self) -> list[int]:
        """Cusp count of each tooth in arch order."""
        if self.cusp_counts is not None:
            return list(self.cusp_counts)
        middle = (self.tooth_count - 1) / 2.0
        return [
            CUSP_TEMPLATE[min(int(abs(i - middle)), len(CUSP_TEMPLATE) - 1)]
            for i in range(self.tooth_count)
        ]

    @classmethod
    def from_config(cls, config: SynthConfig) -> "ArchSpec":
        return cls(
            tooth_count=config.tooth_count,
            arch_radius=config.arch_radius,
            resolution=config.resolution,
        )


@dataclass(frozen=True)
class _Tooth:
    center: np.ndarray
    radial: np.ndarray
    tangent: np.ndarray
    half_width: float
    half_depth: float
    height: float
    cusps: tuple[tuple[float, float], ...]
    mesial_sign: float

    def world(self, s: float, q: float) -> np.ndarray:
        return self.center + s * self.tangent + q * self.radial


def _cusp_offsets(count: int, a: float, b: float) -> tuple[tuple[float, float], ...]:
    ds, dq = CUSP_OFFSET * a, CUSP_OFFSET * b
    layouts = {
        1: ((0.0, 0.0),),
        2: ((0.0, dq), (0.0, -dq)),
        3: ((-ds, dq), (ds, dq), (0.0, -dq)),
        4: ((-ds, dq), (ds, dq), (-ds, -dq), (ds, -dq)),
        5: ((-ds, dq), (ds, dq), (-ds, -dq), (ds, -dq), (0.0, 0.0)),
    }
    return layouts[count]


def _profile_radius(fraction: float) -> float:
    """Footprint radius rho at which the crown reaches `fraction` of its height."""
    return (1.0 - fraction**4) ** 0.25


def _layout(spec: ArchSpec, rng: np.random.Generator) -> list[_Tooth]:
    span = spec.arch_span * math.pi
    start = (math.pi - span) / 2.0
    step = span / spec.tooth_count
    arc = spec.arch_radius * step

    teeth = []
    for i, cusps in enumerate(spec.cusp_template()):
        scale = 1.0 + spec.jitter * rng.uniform(-1.0, 1.0, size=2)
        theta = start + (i + 0.5) * step
        radial = np.array([math.cos(theta), math.sin(theta)])
        a = spec.width_ratio * arc * min(scale[0], 1.0)
        b = spec.depth_ratio * a
        teeth.append(
            _Tooth(
                center=spec.arch_radius * radial,
                radial=radial,
                tangent=np.array([-math.sin(theta), math.cos(theta)]),
                half_width=a,
                half_depth=b,
                height=spec.crown_height * scale[1],
                cusps=_cusp_offsets(cusps, a, b),
                mesial_sign=1.0 if theta <= math.pi / 2 else -1.0,
            )
        )
    return teeth


def _surface(xy: np.ndarray, teeth: list[_Tooth], cusp_radius: float) -> np.ndarray:
    """Height of the jaw surface above the gingiva plane z = 0."""
    xy = np.atleast_2d(xy)
    z = np.zeros(len(xy))
    for tooth in teeth:
        rel = xy - tooth.center
        s = rel @ tooth.tangent
        q = rel @ tooth.radial
        rho2 = (s / tooth.half_width) ** 2 + (q / tooth.half_depth) ** 2
        inside = rho2 < 1.0
        if not inside.any():
            continue
        crown = tooth.height * np.clip(1.0 - rho2[inside] ** 2, 0.0, None) ** 0.25
        bump = np.zeros(inside.sum())
        for cs, cq in tooth.cusps:
            d2 = (s[inside] - cs) ** 2 + (q[inside] - cq) ** 2
            bump = np.maximum(bump, np.sqrt(np.clip(cusp_radius**2 - d2, 0.0, None)))
        z[inside] = np.maximum(z[inside], crown + bump)
    return z


def _tooth_landmarks(
    index: int, tooth: _Tooth, teeth: list[_Tooth], cusp_radius: float
) -> list[Landmark]:
    a, b = tooth.half_width, tooth.half_depth
    contact = _profile_radius(CONTACT_HEIGHT) * a
    rim = _profile_radius(RIM_HEIGHT) * b
    facial = _profile_radius(FACIAL_HEIGHT) * b

    local: list[tuple[str, LandmarkClass, float, float]] = [
        ("M", LandmarkClass.MESIAL, tooth.mesial_sign * contact, 0.0),
        ("D", LandmarkClass.DISTAL, -tooth.mesial_sign * contact, 0.0),
    ]
    local += [
        (f"C{k}", LandmarkClass.CUSP, cs, cq) for k, (cs, cq) in enumerate(tooth.cusps)
    ]
    local += [
        ("I", LandmarkClass.INNER_POINT, 0.0, -rim),
        ("O", LandmarkClass.OUTER_POINT, 0.0, rim),
        ("F", LandmarkClass.FACIAL_POINT, 0.0, facial),
    ]

    xy = np.array([tooth.world(s, q) for _, _, s, q in local])
    z = _surface(xy, teeth, cusp_radius)
    return [
        Landmark(
            key=f"t{index:02d}-{suffix}",
            landmark_class=landmark_class,
            position=(float(p[0]), float(p[1]), float(h)),
        )
        for (suffix, landmark_class, _, _), p, h in zip(local, xy, z, strict=True)
    ]


def _grid_mesh(spec: ArchSpec, teeth: list[_Tooth]) -> TriangleMesh:
    margin = 2.0
    depth = max(t.half_depth for t in teeth) + margin
    r = spec.arch_radius
    xs = np.arange(-r - depth, r + depth + spec.resolution, spec.resolution)
    ys = np.arange(-depth, r + depth + spec.resolution, spec.resolution)
    gx, gy = np.meshgrid(xs, ys, indexing="ij")
    xy = np.stack([gx.ravel(), gy.ravel()], axis=1)

    radius = np.hypot(xy[:, 0], xy[:, 1])
    angle = np.arctan2(xy[:, 1], xy[:, 0])
    span = spec.arch_span * math.pi
    slack = margin / r
    keep = (np.abs(radius - r) <= depth) & (
        np.abs(angle - math.pi / 2) <= span / 2 + slack
    )

    nx, ny = len(xs), len(ys)
    ids = np.arange(nx * ny).reshape(nx, ny)
    v00, v10 = ids[:-1, :-1].ravel(), ids[1:, :-1].ravel()
    v11, v01 = ids[1:, 1:].ravel(), ids[:-1, 1:].ravel()
    quad_ok = keep[v00] & keep[v10] & keep[v11] & keep[v01]
    # counter-clockwise seen from +z, so normals face the occlusal side
    faces = np.concatenate(
        [
            np.stack([v00, v10, v11], axis=1)[quad_ok],
            np.stack([v00, v11, v01], axis=1)[quad_ok],
        ]
    )

    used = np.unique(faces)
    remap = np.full(nx * ny, -1, dtype=np.int64)
    remap[used] = np.arange(len(used))
    vertices = np.column_stack([xy[used], _surface(xy[used], teeth, spec.cusp_radius)])
    return TriangleMesh(vertices=vertices, faces=remap[faces])


def generate_arch(
    spec: ArchSpec, seed: Seed = 0, scan_id: str = "synth-000"
) -> tuple[LandmarkFile, TriangleMesh]:
    """Build a jaw-like heightfield mesh and its landmark ground truth.

    Teeth sit on a circular arc as rounded crowns with hemispherical cusp bumps.
    Landmarks lie on the surface: cusps at bump apices, mesial/distal at the crown
    ends along the arch (mesial towards the midline), inner/outer at the lingual and
    buccal flanks, the facial point high on the buccal flank.

    Args:
        spec: Arch shape
        seed: Seed of the per-tooth size variation
        scan_id: Scan id of the returned file

    Returns:
        (ground-truth LandmarkFile, TriangleMesh)
    """
    teeth = _layout(spec, make_rng(seed))
    landmarks: list[Landmark] = []
    for index, tooth in enumerate(teeth):
        landmarks.extend(_tooth_landmarks(index, tooth, teeth, spec.cusp_radius))
    mesh = _grid_mesh(spec, teeth)
    logger.debug(
        f"{scan_id}: {len(teeth)} teeth, {len(landmarks)} landmarks, "
        f"{mesh.vertex_count} vertices"
    )
    gt = LandmarkFile(version=FORMAT_VERSION, scan_id=scan_id, objects=tuple(landmarks))
    return gt, mesh


def _scores(rng: np.random.Generator, count: int, overlap: float, hit: bool) -> np.ndarray:
    # hits ~ Beta(5, 1 + 4o), spurious ~ Beta(1 + 4o, 5); identical at o = 1
    spread = 1.0 + 4.0 * overlap
    return rng.beta(5.0, spread, size=count) if hit else rng.beta(spread, 5.0, size=count)


def perturb(gt: LandmarkFile, noise: NoiseSpec, seed: Seed = 0) -> LandmarkFile:
    """Degrade a ground-truth file into a scored prediction file.

    Each landmark is dropped with `drop_probability`, otherwise displaced by isotropic
    Gaussian noise of `sigma` mm. A Poisson(`spurious_rate`) number of landmarks with
    random classes is added uniformly inside the ground truth's bounding box. Kept
    landmarks score high and spurious ones low; `overlap` moves both towards 0.5.
    """
    rng = make_rng(seed)
    landmarks = gt.landmarks()
    n = len(landmarks)

    drops = rng.random(n) < noise.drop_probability
    shifts = rng.normal(0.0, 1.0, size=(n, 3)) * noise.sigma
    hit_scores = _scores(rng, n, noise.overlap, hit=True)

    predictions: list[Prediction] = []
    for landmark, dropped, shift, score in zip(landmarks, drops, shifts, hit_scores, strict=True):
        if dropped:
            continue
        position = tuple(float(c) for c in landmark.as_array() + shift)
        predictions.append(
            Prediction(
                landmark=landmark.model_copy(update={"position": position}),
                score=float(score),
            )
        )

    spurious = int(rng.poisson(noise.spurious_rate)) if noise.spurious_rate > 0 else 0
    if spurious:
        if n:
            positions = np.array([lm.position for lm in landmarks])
            low, high = positions.min(axis=0), positions.max(axis=0)
        else:
            low, high = np.zeros(3), np.zeros(3)
        points = rng.uniform(low, high, size=(spurious, 3))
        classes = rng.integers(0, len(LandmarkClass), size=spurious)
        scores = _scores(rng, spurious, noise.overlap, hit=False)
        taken = {lm.key for lm in landmarks}
        members = list(LandmarkClass)
        for i in range(spurious):
            key = f"spurious-{i}"
            while key in taken:
                key = f"_{key}"
            predictions.append(
                Prediction(
                    landmark=Landmark(
                        key=key,
                        landmark_class=members[int(classes[i])],
                        position=tuple(float(c) for c in points[i]),
                    ),
                    score=float(scores[i]),
                )
            )

    return LandmarkFile(
        version=gt.version, scan_id=gt.scan_id, objects=tuple(predictions), extra=gt.extra
    )


def plant_field(
    gt: LandmarkFile,
    density: int = 20,
    sigma: float = 0.0,
    seed: Seed = 0,
    landmark_class: LandmarkClass | None = None,
    shell: tuple[float, float] = (0.4, 1.2),
) -> PointField:
    """Sample a point field around ground-truth landmarks with exact channels plus noise.

    Every landmark contributes itself and `density - 1` points at random directions
    and radii within `shell`. Channels: distance to the nearest landmark (plus
    Gaussian noise, kept non-negative), confidence exp(-distance), and the offset to
    the nearest landmark (plus Gaussian noise).

    Args:
        gt: Ground truth to plant
        density: Samples per landmark, at least 1
        sigma: Channel noise in mm
        seed: Sampling seed
        landmark_class: Only plant landmarks of this class when given
        shell: Radial range of the non-central samples in mm
    """
    landmarks = [
        lm for lm in gt.landmarks() if landmark_class is None or lm.landmark_class is landmark_class
    ]
    if not landmarks:
        return PointField(
            points=np.zeros((0, 3)),
            confidence=np.zeros(0),
            distance=np.zeros(0),
            offsets=np.zeros((0, 3)),
            landmark_class=landmark_class,
        )

    rng = make_rng(seed)
    anchors = np.array([lm.position for lm in landmarks])
    extra = max(density, 1) - 1
    directions = rng.normal(size=(len(anchors), extra, 3))
    directions /= np.linalg.norm(directions, axis=2, keepdims=True)
    radii = rng.uniform(shell[0], shell[1], size=(len(anchors), extra, 1))
    around = anchors[:, None, :] + directions * radii
    points = np.concatenate([anchors[:, None, :], around], axis=1).reshape(-1, 3)

    distance, nearest = cKDTree(anchors).query(points)
    offsets = anchors[nearest] - points
    if sigma > 0:
        distance = np.abs(distance + rng.normal(0.0, sigma, size=len(points)))
        offsets = offsets + rng.normal(0.0, sigma, size=offsets.shape)

    return PointField(
        points=points,
        confidence=np.exp(-distance),
        distance=distance,
        offsets=offsets,
        landmark_class=landmark_class,
    )


def scan_seed(seed: int, *indices: int) -> np.random.SeedSequence:
    """Independent seed for a (scan, team, ...) position under a master seed."""
    return np.random.SeedSequence([seed, *indices])


def generate_dataset(config: SynthConfig) -> list[tuple[LandmarkFile, TriangleMesh]]:
    """Generate `config.scans` arches named synth-000, synth-001, ..."""
    spec = ArchSpec.from_config(config)
    dataset = [
        generate_arch(spec, scan_seed(config.seed, i), f"synth-{i:03d}")
        for i in range(config.scans)
    ]
    logger.info(f"Generated {len(dataset)} synthetic arches")
    return dataset
