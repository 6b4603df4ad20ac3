"""Instance families: CircleSquare, image pixels, colour images, embeddings.

Real-valued distances become integer costs through ``round(scale * d)``.
The default scales land each family inside the cost ranges of the
published benchmark tables; the original constants are not known.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, replace

import numpy as np
from scipy.spatial.distance import cdist

from .core import OTInstance, validate_instance

DEFAULT_SCALES = {
    "circlesquare": 10_000,
    "mnist": 6,
    "cifar": 292,
    "nlp": 1_000_000,
}
DEFAULT_TOTAL_MASS = 1_000_000


@dataclass(frozen=True)
class QuantizationPolicy:
    scale: int = 1
    total_mass: int = DEFAULT_TOTAL_MASS

    def __post_init__(self):
        if self.scale < 1 or self.total_mass < 1:
            raise ValueError("scale and total_mass must be >= 1")


@dataclass(frozen=True, eq=False)
class PointCloudDistribution:
    points: np.ndarray
    weights: np.ndarray

    def __post_init__(self):
        pts = np.atleast_2d(np.asarray(self.points, dtype=np.float64))
        w = np.asarray(self.weights, dtype=np.int64).ravel()
        if pts.shape[0] != w.size:
            raise ValueError("points and weights differ in length")
        if np.any(w < 1):
            raise ValueError("weights must be >= 1")
        object.__setattr__(self, "points", pts)
        object.__setattr__(self, "weights", w)

    @property
    def d(self) -> int:
        return self.points.shape[1]

    @property
    def total(self) -> int:
        return int(self.weights.sum())

    def __len__(self):
        return self.weights.size


def round_half_up(x):
    return np.floor(np.asarray(x, dtype=np.float64) + 0.5).astype(np.int64)


def circle_square_points(k: int):
    """Grid points of an ``s x s`` square and the ``k`` lattice points
    closest to the square's centre, both as integer coordinate arrays."""
    s = math.isqrt(k)
    if k < 1 or s * s != k:
        raise ValueError(f"k={k} is not a positive perfect square")
    xs, ys = np.meshgrid(np.arange(s), np.arange(s), indexing="ij")
    square = np.column_stack([xs.ravel(), ys.ravel()])

    # doubled coordinates keep the (possibly half-integer) centre exact
    centre2 = s - 1
    reach = int(math.ceil(math.sqrt(k / math.pi))) + 2
    lo = (centre2 // 2) - reach
    hi = (centre2 + 1) // 2 + reach
    gx, gy = np.meshgrid(np.arange(lo, hi + 1), np.arange(lo, hi + 1),
                         indexing="ij")
    gx, gy = gx.ravel(), gy.ravel()
    dx, dy = 2 * gx - centre2, 2 * gy - centre2
    r2 = dx * dx + dy * dy
    angle = np.mod(np.arctan2(dy, dx), 2 * np.pi)
    order = np.lexsort((gy, gx, angle, r2))[:k]
    disk = np.column_stack([gx[order], gy[order]])
    return square, disk


def gen_circle_square(k: int, scale: int = DEFAULT_SCALES["circlesquare"]):
    """Unit-capacity matching between a square grid and a lattice disk with
    the same centre and the same number ``k`` of points."""
    square, disk = circle_square_points(k)
    cost = round_half_up(scale * cdist(square, disk))
    ones = np.ones(k, dtype=np.int64)
    return OTInstance(cost, ones, ones, name=f"CS{k}",
                      meta={"family": "circlesquare", "scale": int(scale)})


def image_to_distribution(pixels, policy: QuantizationPolicy):
    """Nonzero pixels of a grey image as ``(x, y)`` points whose weights are
    intensities normalized to about ``policy.total_mass``."""
    img = np.asarray(pixels)
    if img.ndim != 2:
        raise ValueError("expected a 2-D intensity grid")
    ys, xs = np.nonzero(img)
    if xs.size == 0:
        raise ValueError("image has no nonzero pixel")
    inten = img[ys, xs].astype(np.int64)
    w = np.maximum(1, (inten * policy.total_mass) // int(inten.sum()))
    return PointCloudDistribution(np.column_stack([xs, ys]), w)


def balance_pair(a: PointCloudDistribution, b: PointCloudDistribution):
    """Lower the heavier side's largest weights until both totals agree."""
    diff = a.total - b.total
    if diff == 0:
        return a, b
    heavy, light = (a, b) if diff > 0 else (b, a)
    w = heavy.weights.copy()
    excess = abs(diff)
    for idx in np.argsort(-w, kind="stable"):
        take = min(excess, int(w[idx]) - 1)
        w[idx] -= take
        excess -= take
        if excess == 0:
            break
    if excess:
        raise ValueError("cannot balance: lighter side below point count")
    heavy = replace(heavy, weights=w)
    return (heavy, light) if diff > 0 else (light, heavy)


def color_image_to_points(image):
    """``(x, y, r, g, b)`` per pixel, each coordinate min-max scaled to
    [0, 1] over the image (constant coordinates map to 0); unit weights."""
    img = np.asarray(image, dtype=np.float64)
    if img.ndim != 3 or img.shape[2] != 3:
        raise ValueError("expected an H x W x 3 image")
    h, w, _ = img.shape
    ys, xs = np.meshgrid(np.arange(h), np.arange(w), indexing="ij")
    feats = np.column_stack([xs.ravel(), ys.ravel(), img.reshape(-1, 3)])
    lo = feats.min(axis=0)
    span = feats.max(axis=0) - lo
    safe = np.where(span > 0, span, 1.0)
    feats = np.where(span > 0, (feats - lo) / safe, 0.0)
    return PointCloudDistribution(feats, np.ones(h * w, dtype=np.int64))


def build_instance(a: PointCloudDistribution, b: PointCloudDistribution,
                   policy: QuantizationPolicy, name: str = "", **meta):
    """Costs ``round(scale * ||a_i - b_j||)`` with the clouds' weights."""
    if a.d != b.d:
        raise ValueError(f"dimension mismatch: {a.d} vs {b.d}")
    if a.total != b.total:
        raise ValueError("unbalanced totals; call balance_pair first")
    cost = round_half_up(policy.scale * cdist(a.points, b.points))
    inst = OTInstance(cost, a.weights, b.weights, name=name,
                      meta={"scale": int(policy.scale), **meta})
    problem = validate_instance(inst)
    assert problem is None, problem
    return inst


# -- synthetic stand-ins for the image and text corpora ---------------------

def synthetic_digit(rng: np.random.Generator, size: int = 28, box: int = 20):
    """A handwritten-looking stroke: a random polyline drawn with a soft
    brush, intensities 0..255, mostly zero.

    Like the digits of the usual 28x28 corpus, the stroke is scaled so its
    longer side spans a ``box``-pixel square and then translated so its
    centre of mass sits at the image centre.
    """
    n_ctrl = rng.integers(2, 6)
    ctrl = rng.uniform(0, 1, size=(n_ctrl, 2))
    t = np.linspace(0, 1, 200)
    seg = np.minimum((t * (n_ctrl - 1)).astype(int), n_ctrl - 2)
    frac = t * (n_ctrl - 1) - seg
    path = ctrl[seg] * (1 - frac)[:, None] + ctrl[seg + 1] * frac[:, None]
    lo = path.min(axis=0)
    span = max(float((path.max(axis=0) - lo).max()), 1e-9)
    path = (path - lo) * ((box - 1) / span)
    yy, xx = np.mgrid[0:size, 0:size]
    grid = np.stack([xx.ravel(), yy.ravel()], axis=1).astype(float)
    width = rng.uniform(0.8, 1.2)

    def render(p):
        d = cdist(grid, p).min(axis=1).reshape(size, size)
        img = 255.0 * np.exp(-0.5 * (d / width) ** 2)
        img[img < 25] = 0
        return img

    img = render(path)
    com = np.array([(img * xx).sum(), (img * yy).sum()]) / img.sum()
    img = render(path + ((size - 1) / 2 - com))
    return np.floor(img).astype(np.int64)


def synthetic_color_image(rng: np.random.Generator, size: int = 32):
    """Smooth colour image built from a few coloured Gaussian blobs over a
    gradient, uint8 range."""
    yy, xx = np.mgrid[0:size, 0:size] / (size - 1)
    base = rng.uniform(0, 255, 3)
    slope = rng.uniform(-120, 120, (2, 3))
    img = base + xx[..., None] * slope[0] + yy[..., None] * slope[1]
    for _ in range(rng.integers(2, 6)):
        cx, cy = rng.uniform(0, 1, 2)
        rad = rng.uniform(0.08, 0.3)
        colour = rng.uniform(-150, 150, 3)
        blob = np.exp(-((xx - cx) ** 2 + (yy - cy) ** 2) / (2 * rad ** 2))
        img = img + blob[..., None] * colour
    return np.clip(np.round(img), 0, 255).astype(np.int64)


def synthetic_embeddings(rng: np.random.Generator, vocab: int, dim: int = 100,
                         topics: int = 30, spread: float = 0.2):
    """Topic-clustered word vectors with varying norms."""
    centres = rng.normal(0.0, 0.4, size=(topics, dim))
    emb = centres[rng.integers(topics, size=vocab)]
    emb = emb + rng.normal(0.0, spread, size=(vocab, dim))
    return emb * rng.uniform(0.5, 1.5, size=(vocab, 1))


def zipf_weights(vocab: int, exponent: float = 1.1):
    p = 1.0 / np.arange(1, vocab + 1) ** exponent
    return p / p.sum()


def synthetic_document(rng: np.random.Generator, embeddings: np.ndarray,
                       n_tokens: int, p: np.ndarray):
    """Token counts of a document drawn from word frequencies ``p``,
    returned as an embedding cloud weighted by multiplicity."""
    counts = rng.multinomial(n_tokens, p)
    keep = np.flatnonzero(counts)
    return PointCloudDistribution(embeddings[keep], counts[keep])


def mnist_style_instance(seed: int, scale: int = DEFAULT_SCALES["mnist"],
                         total_mass: int = DEFAULT_TOTAL_MASS, name=None):
    rng = np.random.default_rng([seed, 28])
    policy = QuantizationPolicy(scale, total_mass)
    a = image_to_distribution(synthetic_digit(rng), policy)
    b = image_to_distribution(synthetic_digit(rng), policy)
    a, b = balance_pair(a, b)
    return build_instance(a, b, policy, name or f"mnist{seed}",
                          family="mnist", synthetic=True)


def cifar_style_instance(seed: int, scale: int = DEFAULT_SCALES["cifar"],
                         name=None):
    rng = np.random.default_rng([seed, 32])
    a = color_image_to_points(synthetic_color_image(rng))
    b = color_image_to_points(synthetic_color_image(rng))
    return build_instance(a, b, QuantizationPolicy(scale), name or
                          f"CIFAR{seed}", family="cifar", synthetic=True)


def nlp_style_instance(seed: int, vocab: int = 2000, n_tokens: int = 8000,
                       dim: int = 100, scale: int = DEFAULT_SCALES["nlp"],
                       name=None):
    """Two passages of one text: independent token samples from a shared
    Zipf law over a shared embedding table."""
    rng = np.random.default_rng([seed, 100])
    emb = synthetic_embeddings(rng, vocab, dim)
    p = zipf_weights(vocab)
    a = synthetic_document(rng, emb, n_tokens, p)
    b = synthetic_document(rng, emb, n_tokens, p)
    return build_instance(a, b, QuantizationPolicy(scale), name or
                          f"NLP{seed}", family="nlp", synthetic=True)
