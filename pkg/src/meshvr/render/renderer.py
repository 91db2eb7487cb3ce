"""Mesh volume renderer with per-chunk reverse tapes.

A batch of rays is split into fixed-size chunks. Each chunk:

  intervals -> stratified t -> pseudo-signed distances -> alphas
            -> tri-plane features + decoder colours -> compositing

and, when recording, leaves a small tape whose ops are registered below.
The appearance VJP recomputes features and decoder activations from the
stored sample points instead of caching them.

Chunk RNGs are seeded from (seed key, chunk index), so the chunk layout and
not the worker count decides the random stream.
"""

from __future__ import annotations

import logging
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace
from typing import Any, Optional, Sequence

import numpy as np

from meshvr.appearance.decoder import DECODER_PARAM_NAMES, MlpDecoder, decoder_input
from meshvr.appearance.triplanes import PLANE_NAMES, TriPlanes, sample_triplanes, triplanes_feature_vjp
from meshvr.core.camera import Camera, generate_rays
from meshvr.core.mesh import ClosestPointBatch, TriangleMesh, distance_vertex_vjp, signed_distances
from meshvr.optim.params import DECODER_GROUPS, PLANE_GROUPS, SCALE, VERTICES
from meshvr.optim.tape import GradTuple, Tape, register_vjp
from meshvr.render.composite import CompositeResult, composite_batch, composite_batch_vjp
from meshvr.render.density import AlphaContext, pair_alphas, pair_alphas_vjp
from meshvr.render.model import RenderModel
from meshvr.render.sampling import SeedLike, make_rng, pixel_centers, sample_intervals

logger = logging.getLogger(__name__)

GEOMETRY_SLOTS = (VERTICES, SCALE)
ALL_SLOTS = (VERTICES, *PLANE_GROUPS, *DECODER_GROUPS, SCALE)


@dataclass(frozen=True)
class RenderSettings:
    n_samples: int = 32
    band_factor: float = 4.0
    band: Optional[float] = None
    background: tuple[float, float, float] = (0.0, 0.0, 0.0)
    jitter: bool = True
    chunk_rays: int = 1024
    workers: int = 1
    with_color: bool = True

    def __post_init__(self) -> None:
        if self.n_samples < 2:
            raise ValueError("n_samples must be >= 2")
        if self.chunk_rays < 1 or self.workers < 1:
            raise ValueError("chunk_rays and workers must be >= 1")
        if self.band is not None and self.band <= 0.0:
            raise ValueError("band must be > 0")

    def band_for(self, model: RenderModel) -> float:
        return self.band if self.band is not None else model.density.band(self.band_factor)


@dataclass(frozen=True)
class SamplePoint:
    t: float
    position: np.ndarray
    signed_distance: float
    face_id: int
    normal: np.ndarray
    front_facing: bool


@dataclass(frozen=True)
class PixelRender:
    color: np.ndarray
    opacity: float
    culled: bool
    weights: np.ndarray
    samples: tuple[SamplePoint, ...]


@dataclass(frozen=True)
class ChunkPlan:
    """Detached sampling plan: which rays have samples and where."""

    hit: np.ndarray          # (R,) bool
    t: np.ndarray            # (R_hit, n)
    interval_id: np.ndarray  # (R_hit, n)


@dataclass
class ChunkRender:
    start: int
    stop: int
    plan: ChunkPlan
    color: np.ndarray        # (R, 3)
    opacity: np.ndarray      # (R,)
    culled: np.ndarray       # (R,)
    signed_distance: np.ndarray  # (R_hit, n)
    face_id: np.ndarray          # (R_hit, n)
    normal: np.ndarray           # (R_hit, n, 3)
    front_facing: np.ndarray     # (R_hit, n)
    weights: np.ndarray          # (R_hit, n)
    points: np.ndarray           # (R_hit, n, 3)
    tape: Optional[Tape] = field(default=None, repr=False)


@dataclass
class RayBatchRender:
    color: np.ndarray
    opacity: np.ndarray
    culled: np.ndarray
    hit: np.ndarray
    chunks: list[ChunkRender]
    slots: tuple[str, ...]
    workers: int = 1

    def plans(self) -> list[ChunkPlan]:
        return [c.plan for c in self.chunks]

    def backward(self, grad_color: Optional[np.ndarray], grad_opacity: Optional[np.ndarray]) -> dict[str, np.ndarray]:
        """Parameter-slot gradients, summed over chunks in chunk order."""
        n = self.color.shape[0]
        gc = np.zeros((n, 3)) if grad_color is None else np.asarray(grad_color, dtype=np.float64)
        go = np.zeros(n) if grad_opacity is None else np.asarray(grad_opacity, dtype=np.float64)

        def run(chunk: ChunkRender) -> dict[str, np.ndarray]:
            if chunk.tape is None:
                raise RuntimeError("render was not recorded; pass record=True to differentiate it")
            return chunk.tape.backward({"color": gc[chunk.start:chunk.stop], "opacity": go[chunk.start:chunk.stop]})

        if self.workers > 1 and len(self.chunks) > 1:
            with ThreadPoolExecutor(max_workers=self.workers) as ex:
                parts = list(ex.map(run, self.chunks))
        else:
            parts = [run(c) for c in self.chunks]
        out: dict[str, np.ndarray] = {}
        for part in parts:
            for slot in self.slots:
                if slot in part:
                    out[slot] = out[slot] + part[slot] if slot in out else part[slot]
        return out


# =============================================================================
# Tape contexts and VJPs
# =============================================================================


@dataclass(frozen=True)
class _DistanceCtx:
    mesh: TriangleMesh
    points: np.ndarray
    batch: ClosestPointBatch
    shape: tuple[int, int]


@dataclass(frozen=True)
class _AppearanceCtx:
    planes: TriPlanes
    decoder: MlpDecoder
    points: np.ndarray      # (M, 3)
    encoded: np.ndarray     # (M, E)
    shape: tuple[int, int]


@dataclass(frozen=True)
class _CompositeCtx:
    result: CompositeResult
    alpha: np.ndarray
    rgb: np.ndarray
    hit_rows: np.ndarray
    culled_hit: np.ndarray
    background: Optional[np.ndarray]
    with_color: bool


@register_vjp("mesh_distance")
def _mesh_distance_vjp(ctx: _DistanceCtx, outs: GradTuple) -> tuple[np.ndarray]:
    g = outs[0]
    assert g is not None
    return (distance_vertex_vjp(ctx.mesh, ctx.points, ctx.batch, g.reshape(-1)),)


@register_vjp("density_alpha")
def _density_alpha_vjp(ctx: AlphaContext, outs: GradTuple) -> tuple[np.ndarray, np.ndarray]:
    g = outs[0]
    assert g is not None
    g_d, g_s = pair_alphas_vjp(ctx, g)
    return g_d, np.array([g_s])


@register_vjp("appearance")
def _appearance_vjp(ctx: _AppearanceCtx, outs: GradTuple) -> list[np.ndarray]:
    g = outs[0]
    assert g is not None
    sample = sample_triplanes(ctx.planes, ctx.points)
    _, cache = ctx.decoder.forward(decoder_input(ctx.encoded, sample.features))
    grad_x, dec_grads = ctx.decoder.backward(cache, g.reshape(-1, 3))
    plane_grads = triplanes_feature_vjp(ctx.planes, sample, grad_x[:, : ctx.planes.feature_dim])
    return [plane_grads[n] for n in PLANE_NAMES] + [dec_grads[n] for n in DECODER_PARAM_NAMES]


@register_vjp("composite_rays")
def _composite_rays_vjp(ctx: _CompositeCtx, outs: GradTuple) -> list[Optional[np.ndarray]]:
    gc_full, go_full = outs
    n_hit = ctx.hit_rows.shape[0]
    gc = np.zeros((n_hit, 3)) if gc_full is None else gc_full[ctx.hit_rows].copy()
    go = np.zeros(n_hit) if go_full is None else go_full[ctx.hit_rows].copy()
    gc[ctx.culled_hit] = 0.0
    go[ctx.culled_hit] = 0.0
    g_alpha, g_rgb = composite_batch_vjp(ctx.result, ctx.alpha, ctx.rgb, gc, go, ctx.background)
    return [g_alpha, g_rgb] if ctx.with_color else [g_alpha]


@register_vjp("render")
def _render_vjp(ctx: RayBatchRender, outs: GradTuple) -> list[Optional[np.ndarray]]:
    grads = ctx.backward(outs[0], outs[1])
    return [grads.get(slot) for slot in ctx.slots]


def record_render(tape: Tape, key: str, result: RayBatchRender) -> tuple[str, str]:
    """Record a batch render on an outer tape; returns its (color, opacity) slot names."""
    slots = (f"{key}.color", f"{key}.opacity")
    tape.record("render", result.slots, slots, result)
    return slots


# =============================================================================
# Forward
# =============================================================================


def _plan_chunk(model: RenderModel, origin: np.ndarray, dirs: np.ndarray, settings: RenderSettings, rng: Optional[np.random.Generator]) -> ChunkPlan:
    band = settings.band_for(model)
    n = settings.n_samples
    intervals = model.octree.active_intervals(origin, dirs, band, merge_gap=2.0 * band / n)
    hit = np.array([iv.shape[0] > 0 for iv in intervals], dtype=bool)
    ts: list[np.ndarray] = []
    ids: list[np.ndarray] = []
    for iv in intervals:
        if iv.shape[0] == 0:
            continue
        rs = sample_intervals(iv, n, rng)
        ts.append(rs.t)
        ids.append(rs.interval_id)
    if ts:
        return ChunkPlan(hit, np.stack(ts), np.stack(ids))
    return ChunkPlan(hit, np.zeros((0, n)), np.zeros((0, n), dtype=np.int64))


def _render_chunk(
    model: RenderModel,
    origin: np.ndarray,
    dirs: np.ndarray,
    start: int,
    settings: RenderSettings,
    rng: Optional[np.random.Generator],
    plan: Optional[ChunkPlan],
    record: bool,
) -> ChunkRender:
    r = dirs.shape[0]
    if plan is None:
        plan = _plan_chunk(model, origin, dirs, settings, rng)
    bg = np.asarray(settings.background, dtype=np.float64)
    hit_rows = np.nonzero(plan.hit)[0]
    n_hit, n = plan.t.shape
    d_hit = dirs[hit_rows]
    points = origin[None, None, :] + plan.t[:, :, None] * d_hit[:, None, :]

    color = np.repeat(bg[None, :], r, axis=0)
    opacity = np.zeros(r)
    culled = np.zeros(r, dtype=bool)
    tape = Tape() if record else None

    if n_hit == 0:
        empty = np.zeros((0, n))
        return ChunkRender(start, start + r, plan, color, opacity, culled, empty, empty.astype(np.int64),
                           np.zeros((0, n, 3)), empty.astype(bool), empty, np.zeros((0, n, 3)), tape)

    flat = points.reshape(-1, 3)
    batch = signed_distances(model.mesh, model.octree, flat)
    sd = batch.signed_distance.reshape(n_hit, n)
    assert batch.normal is not None
    normals = batch.normal.reshape(n_hit, n, 3)
    front = np.einsum("rkc,rc->rk", normals, d_hit) < 0.0
    culled_hit = ~front.any(axis=1)

    pair_mask = plan.interval_id[:, 1:] == plan.interval_id[:, :-1]
    alpha, actx = pair_alphas(sd, model.density, pair_mask)

    if settings.with_color:
        enc = model.encoding.encode(d_hit)
        enc_flat = np.repeat(enc, n, axis=0)
        feats = sample_triplanes(model.planes, flat).features
        rgb_flat, _ = model.decoder.forward(decoder_input(enc_flat, feats))
        rgb = rgb_flat.reshape(n_hit, n, 3)
        comp = composite_batch(alpha, rgb, bg)
    else:
        rgb = np.zeros((n_hit, n, 3))
        comp = composite_batch(alpha, rgb)

    c_hit = comp.color.copy()
    o_hit = comp.opacity.copy()
    o_hit[culled_hit] = 0.0
    c_hit[culled_hit] = bg
    color[hit_rows] = c_hit
    opacity[hit_rows] = o_hit
    culled[hit_rows] = culled_hit

    if tape is not None:
        tape.record("mesh_distance", (VERTICES,), ("sdf",), _DistanceCtx(model.mesh, flat, batch, (n_hit, n)))
        tape.record("density_alpha", ("sdf", SCALE), ("alpha",), actx)
        comp_inputs: tuple[str, ...] = ("alpha",)
        if settings.with_color:
            planes = TriPlanes(model.planes.xy, model.planes.xz, model.planes.yz,
                               model.planes.bounds_min, model.planes.bounds_max)
            decoder = MlpDecoder(*model.decoder.arrays().values())
            tape.record("appearance", (*PLANE_GROUPS, *DECODER_GROUPS), ("rgb",),
                        _AppearanceCtx(planes, decoder, flat, enc_flat, (n_hit, n)))
            comp_inputs = ("alpha", "rgb")
        tape.record("composite_rays", comp_inputs, ("color", "opacity"),
                    _CompositeCtx(comp, alpha, rgb, hit_rows, culled_hit,
                                  bg if settings.with_color else None, settings.with_color))

    return ChunkRender(
        start=start,
        stop=start + r,
        plan=plan,
        color=color,
        opacity=opacity,
        culled=culled,
        signed_distance=sd,
        face_id=batch.face_id.reshape(n_hit, n),
        normal=normals,
        front_facing=front,
        weights=comp.weights,
        points=points,
        tape=tape,
    )


def _seed_key(seed: SeedLike) -> list[int]:
    if seed is None:
        return [0]
    if isinstance(seed, np.random.Generator):
        return [int(seed.integers(0, 2**31 - 1))]
    if isinstance(seed, (int, np.integer)):
        return [int(seed)]
    return [int(x) for x in seed]


def render_rays(
    model: RenderModel,
    origin: Any,
    dirs: Any,
    settings: RenderSettings,
    *,
    seed: SeedLike = 0,
    plans: Optional[Sequence[ChunkPlan]] = None,
    record: bool = True,
) -> RayBatchRender:
    """Render rays sharing one origin. `plans` replays a previous sampling plan."""
    o = np.asarray(origin, dtype=np.float64).reshape(3)
    d = np.asarray(dirs, dtype=np.float64).reshape(-1, 3)
    starts = list(range(0, d.shape[0], settings.chunk_rays))
    if plans is not None and len(plans) != len(starts):
        raise ValueError(f"sampling plan has {len(plans)} chunks, render needs {len(starts)}")
    _ = model.octree  # build once before workers read it
    key = _seed_key(seed)

    def run(k: int) -> ChunkRender:
        s = starts[k]
        rng = make_rng([*key, 0x5A, k]) if settings.jitter else None
        plan = plans[k] if plans is not None else None
        return _render_chunk(model, o, d[s:s + settings.chunk_rays], s, settings, rng, plan, record)

    if settings.workers > 1 and len(starts) > 1:
        with ThreadPoolExecutor(max_workers=settings.workers) as ex:
            chunks = list(ex.map(run, range(len(starts))))
    else:
        chunks = [run(k) for k in range(len(starts))]

    def cat(attr: str, empty: np.ndarray) -> np.ndarray:
        return np.concatenate([getattr(c, attr) for c in chunks]) if chunks else empty

    hit = np.concatenate([c.plan.hit for c in chunks]) if chunks else np.zeros(0, dtype=bool)
    return RayBatchRender(
        color=cat("color", np.zeros((0, 3))),
        opacity=cat("opacity", np.zeros(0)),
        culled=cat("culled", np.zeros(0, dtype=bool)),
        hit=hit,
        chunks=chunks,
        slots=ALL_SLOTS if settings.with_color else GEOMETRY_SLOTS,
        workers=settings.workers,
    )


def render_view(
    model: RenderModel,
    camera: Camera,
    pixels: Any,
    settings: RenderSettings,
    *,
    seed: SeedLike = 0,
    plans: Optional[Sequence[ChunkPlan]] = None,
    record: bool = True,
) -> RayBatchRender:
    origin, dirs = generate_rays(camera, pixels)
    return render_rays(model, origin, dirs, settings, seed=seed, plans=plans, record=record)


def render_pixel(
    model: RenderModel,
    camera: Camera,
    pixel: Any,
    settings: Optional[RenderSettings] = None,
    *,
    seed: SeedLike = 0,
) -> PixelRender:
    settings = settings or RenderSettings()
    res = render_view(model, camera, np.asarray(pixel, dtype=np.float64)[None, :], settings, seed=seed, record=False)
    chunk = res.chunks[0]
    samples: tuple[SamplePoint, ...] = ()
    weights = np.zeros(0)
    if chunk.plan.hit[0]:
        samples = tuple(
            SamplePoint(
                t=float(chunk.plan.t[0, k]),
                position=chunk.points[0, k].copy(),
                signed_distance=float(chunk.signed_distance[0, k]),
                face_id=int(chunk.face_id[0, k]),
                normal=chunk.normal[0, k].copy(),
                front_facing=bool(chunk.front_facing[0, k]),
            )
            for k in range(chunk.plan.t.shape[1])
        )
        weights = chunk.weights[0].copy()
    return PixelRender(
        color=res.color[0].copy(),
        opacity=float(res.opacity[0]),
        culled=bool(res.culled[0]),
        weights=weights,
        samples=samples,
    )


def ray_sample_points(
    model: RenderModel,
    ray: tuple[Any, Any],
    intervals: np.ndarray,
    n_samples: int,
    seed: SeedLike = None,
) -> tuple[SamplePoint, ...]:
    """Samples inside `intervals` filled with pseudo-signed distance, normal and facing."""
    origin = np.asarray(ray[0], dtype=np.float64)
    direction = np.asarray(ray[1], dtype=np.float64)
    rs = sample_intervals(intervals, n_samples, None if seed is None else make_rng(seed))
    if len(rs) == 0:
        return ()
    pts = origin[None, :] + rs.t[:, None] * direction[None, :]
    batch = signed_distances(model.mesh, model.octree, pts)
    assert batch.normal is not None
    front = batch.normal @ direction < 0.0
    return tuple(
        SamplePoint(float(rs.t[k]), pts[k], float(batch.signed_distance[k]), int(batch.face_id[k]),
                    batch.normal[k], bool(front[k]))
        for k in range(len(rs))
    )


def render_image(
    model: RenderModel,
    camera: Camera,
    settings: Optional[RenderSettings] = None,
) -> tuple[np.ndarray, np.ndarray]:
    """Full-resolution render at pixel centres without jitter: (rgb (H,W,3), opacity (H,W))."""
    settings = settings or RenderSettings()
    if settings.jitter:
        settings = replace(settings, jitter=False)
    px = pixel_centers(camera.width, camera.height)
    res = render_view(model, camera, px, settings, record=False)
    logger.debug("render_image: %d rays, %d hit, %d culled", px.shape[0], int(res.hit.sum()), int(res.culled.sum()))
    return res.color.reshape(camera.height, camera.width, 3), res.opacity.reshape(camera.height, camera.width)


__all__ = [
    "ALL_SLOTS",
    "ChunkPlan",
    "GEOMETRY_SLOTS",
    "PixelRender",
    "RayBatchRender",
    "RenderSettings",
    "SamplePoint",
    "ray_sample_points",
    "record_render",
    "render_image",
    "render_pixel",
    "render_rays",
    "render_view",
]
