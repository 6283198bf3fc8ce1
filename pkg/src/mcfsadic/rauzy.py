"""Generalized right eigenvectors, projections to 1-perp and Rauzy fractal clouds.

A cloud point is ``pi'_u l(p) = l(p) - |p| u`` for a proper prefix p of some
image ``sigma_[0,n)(j)``; it is stored both in ambient coordinates (R^d) and
in the coordinates of a fixed orthonormal basis of 1-perp.
"""

from __future__ import annotations

import csv
import io
from dataclasses import dataclass, field
from pathlib import Path
from typing import Sequence

import mpmath
import numpy as np

from .core import DEFAULT_PRECISION, SimplexPoint, is_positive, mat_mul, mat_vec
from .errors import NotPrimitive
from .sadic import DirectiveSequence

PALETTE = [(31, 119, 180), (255, 127, 14), (44, 160, 44), (214, 39, 40), (148, 103, 189),
           (140, 86, 75), (227, 119, 194), (127, 127, 127), (188, 189, 34)]


# ---------------------------------------------------------------- eigenvectors

def _normalize_mpf(v, precision):
    with mpmath.workprec(precision):
        v = [mpmath.mpf(c) for c in v]
        s = mpmath.fsum(v)
        return [c / s for c in v]


def _positive_power(P, max_squarings=12):
    """Smallest 2^k power of P that is positive, or None."""
    Q = P
    for k in range(max_squarings + 1):
        if is_positive(Q):
            return Q, k
        Q = mat_mul(Q, Q)
    return None, None


def perron_vector(P, precision: int = DEFAULT_PRECISION, max_squarings: int = 40):
    """Perron vector of a primitive nonnegative integer matrix by exact repeated squaring."""
    Q, _ = _positive_power(P)
    if Q is None:
        raise NotPrimitive("no positive power found")
    ones = (1,) * len(P)
    prev = _normalize_mpf(mat_vec(Q, ones), precision)
    tol = mpmath.mpf(2) ** (-precision + 8)
    for k in range(max_squarings):
        Q = mat_mul(Q, Q)
        cur = _normalize_mpf(mat_vec(Q, ones), precision)
        with mpmath.workprec(precision):
            diff = max(abs(a - b) for a, b in zip(cur, prev))
        if diff < tol:
            return cur, {"squarings": k + 1, "residual": float(diff)}
        prev = cur
    return cur, {"squarings": max_squarings, "residual": float(diff)}


def right_eigenvector(D: DirectiveSequence, mode: str = "auto", tol: float = 1e-12,
                      max_n: int = 512, precision: int = DEFAULT_PRECISION):
    """Return ``(u, info)`` with u a SimplexPoint and a diagnostics dict.

    modes: ``cf-point`` (the expanded point itself), ``periodic`` (Perron
    vector of the period product, pushed through the prefix), ``cone``
    (normalized ``M_[0,n) 1`` until successive iterates differ by < tol).
    """
    if mode == "auto":
        mode = "cf-point" if D.source == "cf" else "periodic" if D.period and D.source != "shift" else "cone"
    if mode == "cf-point":
        if D.point is None:
            raise ValueError("cf-point mode needs a CF-driven sequence")
        return D.point, {"mode": mode}
    if mode == "periodic":
        if not D.period:
            raise ValueError("periodic mode needs a period")
        pre = D.product(len(D.prefix))
        per = D.period[0].incidence
        for s in D.period[1:]:
            per = mat_mul(per, s.incidence)
        v, info = perron_vector(per, precision)
        if D.prefix:
            with mpmath.workprec(precision):
                v = _normalize_mpf([mpmath.fsum(a * b for a, b in zip(row, v)) for row in pre], precision)
        return SimplexPoint(v, precision=precision, normalize=False), {"mode": mode, **info}
    if mode == "cone":
        ones = (1,) * D.d
        prev = None
        seen_positive = False
        for n in range(1, max_n + 1):
            M = D.product(n)
            seen_positive = seen_positive or is_positive(M)
            cur = _normalize_mpf(mat_vec(M, ones), precision)
            if prev is not None and seen_positive:
                with mpmath.workprec(precision):
                    res = max(abs(a - b) for a, b in zip(cur, prev))
                if res < tol:
                    return SimplexPoint(cur, precision=precision, normalize=False), \
                        {"mode": mode, "n": n, "residual": float(res)}
            prev = cur
        if not seen_positive:
            raise NotPrimitive(f"no positive product within {max_n} steps")
        return SimplexPoint(cur, precision=precision, normalize=False), \
            {"mode": mode, "n": max_n, "residual": float(res), "converged": False}
    raise ValueError(f"unknown mode {mode!r}")


# ---------------------------------------------------------------- projections

class ProjectionFrame:
    """Projection along u onto 1-perp, with an orthonormal basis of 1-perp.

    The basis is Gram-Schmidt applied to e_1 - e_d, ..., e_(d-1) - e_d.
    """

    def __init__(self, u: SimplexPoint | Sequence):
        coords = u.to_floats() if isinstance(u, SimplexPoint) else tuple(float(c) for c in u)
        self.u = np.asarray(coords, dtype=float)
        self.u = self.u / self.u.sum()
        self.d = len(self.u)
        d = self.d
        vecs = []
        for i in range(d - 1):
            v = -np.eye(d)[d - 1] + np.eye(d)[i]
            for b in vecs:
                v = v - (v @ b) * b
            vecs.append(v / np.linalg.norm(v))
        self.basis = np.array(vecs).reshape(d - 1, d)

    def project(self, v: np.ndarray) -> np.ndarray:
        """pi'_u in ambient coordinates; rows of v are vectors."""
        v = np.asarray(v, dtype=float)
        return v - v.sum(axis=-1, keepdims=True) * self.u

    def coordinates(self, w: np.ndarray) -> np.ndarray:
        """Basis coordinates of vectors already in 1-perp."""
        return np.asarray(w, dtype=float) @ self.basis.T

    def __call__(self, v):
        return self.coordinates(self.project(v))

    @staticmethod
    def drop_last(v: np.ndarray) -> np.ndarray:
        """The coordinate map pi (omit the last coordinate)."""
        return np.asarray(v)[..., :-1]


# ---------------------------------------------------------------- clouds

@dataclass
class FractalCloud:
    frame: ProjectionFrame
    points: np.ndarray          # (N, d-1) basis coordinates
    ambient: np.ndarray         # (N, d) projected vectors in R^d
    tags: list                  # tag words as bytes
    seeds: np.ndarray           # seed letter j of each point
    lengths: np.ndarray         # prefix length |p|
    depth: int
    tag_length: int = 1
    meta: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.tags)

    @property
    def letters(self) -> np.ndarray:
        """First letter of each tag."""
        return np.array([t[0] for t in self.tags], dtype=np.int64) if self.tags else np.zeros(0, np.int64)

    def subtile(self, w: Sequence[int]) -> np.ndarray:
        w = bytes(w)
        return np.array([t[:len(w)] == w for t in self.tags], dtype=bool)

    def sup_norm(self) -> float:
        """Largest ambient sup-norm of a point."""
        return float(np.abs(self.ambient).max()) if len(self) else 0.0

    def letter_fractions(self) -> np.ndarray:
        counts = np.bincount(self.letters, minlength=self.frame.d + 1)[1:]
        return counts / max(1, counts.sum())


def cloud(D: DirectiveSequence, n: int, m: int = 1, u: SimplexPoint | None = None,
          seeds: Sequence[int] | None = None) -> FractalCloud:
    """Points ``pi'_u l(p)`` for proper prefixes p of ``sigma_[0,n)(j)``, tagged by the next m letters.

    A prefix is kept only if the m letters after it lie inside the same image
    (``p w`` must itself be a prefix).
    """
    if u is None:
        u, _ = right_eigenvector(D)
    frame = ProjectionFrame(u)
    d = D.d
    seeds = list(seeds) if seeds is not None else list(range(1, d + 1))
    amb, tags, seed_col, lens = [], [], [], []
    for j in seeds:
        img = D.image(n, j)
        L = len(img)
        if L < m:
            continue
        a = np.frombuffer(img, dtype=np.uint8).astype(np.int64) - 1
        onehot = np.zeros((L, d), dtype=np.int64)
        onehot[np.arange(L), a] = 1
        cum = np.vstack([np.zeros((1, d), dtype=np.int64), np.cumsum(onehot, axis=0)])
        k = L - m + 1           # prefixes of length 0..L-m
        amb.append(cum[:k])
        tags.extend(img[s:s + m] for s in range(k))
        seed_col.append(np.full(k, j, dtype=np.int64))
        lens.append(np.arange(k, dtype=np.int64))
    if amb:
        counts = np.vstack(amb).astype(float)
        ambient = frame.project(counts)
        seeds_arr = np.concatenate(seed_col)
        lengths = np.concatenate(lens)
    else:
        ambient = np.zeros((0, d))
        seeds_arr = np.zeros(0, dtype=np.int64)
        lengths = np.zeros(0, dtype=np.int64)
    return FractalCloud(frame=frame, points=frame.coordinates(ambient), ambient=ambient, tags=tags,
                        seeds=seeds_arr, lengths=lengths, depth=n, tag_length=m)


def depth_for_points(D: DirectiveSequence, target: int, seeds: Sequence[int] | None = None,
                     max_depth: int = 400) -> int:
    """Smallest depth at which the chosen seed images hold at least ``target`` letters."""
    seeds = list(seeds) if seeds is not None else list(range(1, D.d + 1))
    for n in range(max_depth + 1):
        if sum(len(D.image(n, j)) for j in seeds) >= target:
            return n
    raise NotPrimitive(f"images stay below {target} letters up to depth {max_depth}")


# ---------------------------------------------------------------- raster tiling check

@dataclass
class TilingRaster:
    window: tuple                # (xmin, xmax, ymin, ymax) in basis coordinates
    resolution: int
    claims: np.ndarray = field(repr=False)   # per-pixel number of distinct (translate, letter) claims
    owner: np.ndarray = field(repr=False)    # letter of the first claim, 0 if unclaimed
    coverage: float = 0.0
    overlap: float = 0.0
    translates: int = 0


def lattice_translates(d: int, radius: int) -> np.ndarray:
    """Vectors of Z^d with zero coordinate sum and sup-norm <= radius."""
    grids = np.meshgrid(*[np.arange(-radius, radius + 1)] * (d - 1), indexing="ij")
    head = np.stack([g.ravel() for g in grids], axis=1)
    last = -head.sum(axis=1)
    keep = np.abs(last) <= radius
    return np.hstack([head[keep], last[keep, None]])


def default_window() -> tuple:
    """Square centred at the origin with side the length of a shortest lattice translate (sqrt 2)."""
    half = float(np.sqrt(2.0)) / 2
    return (-half, half, -half, half)


def raster_tiling_check(c: FractalCloud, lattice_radius: int = 2, resolution: int = 512,
                        window: tuple | None = None) -> TilingRaster:
    if c.frame.d != 3:
        raise ValueError("raster tiling check is planar (d = 3)")
    if window is None:
        window = default_window()
    x0, x1, y0, y1 = window
    R = resolution
    claims = np.zeros(R * R, dtype=np.int32)
    owner = np.zeros(R * R, dtype=np.int8)
    if len(c) == 0:
        return TilingRaster(window, R, claims.reshape(R, R), owner.reshape(R, R), 0.0, 0.0, 0)
    shifts = lattice_translates(3, lattice_radius)
    letters = c.letters
    groups = [(i, c.points[letters == i]) for i in range(1, 4)]
    for t in shifts:
        dt = c.frame.coordinates(t.astype(float))
        for i, pts in groups:
            if not len(pts):
                continue
            p = pts + dt
            px = np.floor((p[:, 0] - x0) / (x1 - x0) * R).astype(np.int64)
            py = np.floor((p[:, 1] - y0) / (y1 - y0) * R).astype(np.int64)
            ok = (px >= 0) & (px < R) & (py >= 0) & (py < R)
            if not ok.any():
                continue
            flat = np.unique(py[ok] * R + px[ok])
            claims[flat] += 1
            fresh = flat[owner[flat] == 0]
            owner[fresh] = i
    return TilingRaster(window=window, resolution=R, claims=claims.reshape(R, R), owner=owner.reshape(R, R),
                        coverage=float(np.mean(claims >= 1)), overlap=float(np.mean(claims >= 2)),
                        translates=len(shifts))


# ---------------------------------------------------------------- export

def cloud_csv(c: FractalCloud, dedup: bool = False) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    k = c.points.shape[1] if c.points.ndim == 2 else c.frame.d - 1
    names = ["x", "y"] if k == 2 else [f"c{i + 1}" for i in range(k)]
    w.writerow(names + ["tag"])
    seen = set()
    for p, t in zip(c.points, c.tags):
        row = tuple(f"{v:.12g}" for v in p)
        tag = "".join(str(a) for a in t) if c.frame.d <= 9 else " ".join(str(a) for a in t)
        if dedup:
            if (row, tag) in seen:
                continue
            seen.add((row, tag))
        w.writerow(list(row) + [tag])
    return buf.getvalue()


def cloud_svg(c: FractalCloud, size: int = 512, radius: float = 0.6, max_points: int = 200_000) -> str:
    pts = c.points[:max_points]
    letters = c.letters[:max_points]
    if len(pts):
        lo = pts.min(axis=0)
        span = float((pts.max(axis=0) - lo).max()) or 1.0
    else:
        lo, span = np.zeros(2), 1.0
    out = [f'<svg xmlns="http://www.w3.org/2000/svg" width="{size}" height="{size}" '
           f'viewBox="0 0 {size} {size}">', f'<rect width="{size}" height="{size}" fill="white"/>']
    for p, a in zip(pts, letters):
        x = (p[0] - lo[0]) / span * (size - 2) + 1
        y = size - 1 - (p[1] - lo[1]) / span * (size - 2)
        r, g, b = PALETTE[(a - 1) % len(PALETTE)]
        out.append(f'<circle cx="{x:.2f}" cy="{y:.2f}" r="{radius}" fill="rgb({r},{g},{b})"/>')
    out.append("</svg>")
    return "\n".join(out) + "\n"


def cloud_image(c: FractalCloud, size: int = 512):
    from PIL import Image

    img = np.full((size, size, 3), 255, dtype=np.uint8)
    if len(c):
        pts = c.points
        lo = pts.min(axis=0)
        span = float((pts.max(axis=0) - lo).max()) or 1.0
        px = np.clip(((pts[:, 0] - lo[0]) / span * (size - 1)).astype(int), 0, size - 1)
        py = np.clip(size - 1 - ((pts[:, 1] - lo[1]) / span * (size - 1)).astype(int), 0, size - 1)
        colours = np.array(PALETTE, dtype=np.uint8)[(c.letters - 1) % len(PALETTE)]
        img[py, px] = colours
    return Image.fromarray(img, "RGB")


def raster_image(r: TilingRaster):
    from PIL import Image

    img = np.full((r.resolution, r.resolution, 3), 255, dtype=np.uint8)
    palette = np.array([(255, 255, 255)] + PALETTE, dtype=np.uint8)
    img[:] = palette[r.owner.astype(int)]
    img[r.claims >= 2] = (0, 0, 0)
    return Image.fromarray(img[::-1], "RGB")


def export(obj, path, dedup: bool = False) -> Path:
    """Write a cloud (.csv/.svg/.png) or raster (.png); the format follows the suffix."""
    path = Path(path)
    suffix = path.suffix.lower()
    if isinstance(obj, TilingRaster):
        if suffix != ".png":
            raise ValueError("rasters export to .png only")
        raster_image(obj).save(path, format="PNG", optimize=False)
        return path
    if suffix == ".csv":
        path.write_text(cloud_csv(obj, dedup=dedup))
    elif suffix == ".svg":
        path.write_text(cloud_svg(obj))
    elif suffix == ".png":
        cloud_image(obj).save(path, format="PNG", optimize=False)
    else:
        raise ValueError(f"unsupported export format {suffix!r}")
    return path
