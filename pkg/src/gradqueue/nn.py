"""Tiny line-detection model with exact per-sample gradients.

Two 3x3 convolution filters, global max pooling, and a 2-to-1 dense head
with a sigmoid/binary-cross-entropy loss. 23 parameters total. Gradients
are computed in closed form (reverse mode by hand), vectorized over the
batch, with the max-pool gradient routed to the first argmax location.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from numpy.lib.stride_tricks import sliding_window_view

__all__ = [
    "IDEAL_HORIZONTAL",
    "IDEAL_VERTICAL",
    "N_PARAMS",
    "LineDetectorModel",
    "LineDataset",
    "generate_lines",
    "save_dataset",
    "load_dataset",
    "forward",
    "batch_forward",
    "per_sample_grads",
    "batch_grad",
    "batch_loss",
    "template_alignment",
]

# ideal zero-mean detector filters: one per line orientation
IDEAL_HORIZONTAL = np.array([[-1, -1, -1], [2, 2, 2], [-1, -1, -1]], dtype=float)
IDEAL_VERTICAL = np.array([[-1, 2, -1], [-1, 2, -1], [-1, 2, -1]], dtype=float)

N_PARAMS = 23  # 2 * (9 + 1) conv + 2 + 1 dense


@dataclass
class LineDetectorModel:
    conv_filters: np.ndarray  # (2, 3, 3); index 0 horizontal role, 1 vertical
    conv_bias: np.ndarray  # (2,)
    dense_weights: np.ndarray  # (2,)
    dense_bias: float

    def to_vector(self) -> np.ndarray:
        return np.concatenate(
            [
                self.conv_filters.ravel(),
                self.conv_bias,
                self.dense_weights,
                [self.dense_bias],
            ]
        )

    @classmethod
    def from_vector(cls, vec) -> "LineDetectorModel":
        vec = np.asarray(vec, dtype=float)
        if vec.shape != (N_PARAMS,):
            raise ValueError(f"expected a vector of {N_PARAMS} parameters")
        return cls(
            conv_filters=vec[:18].reshape(2, 3, 3).copy(),
            conv_bias=vec[18:20].copy(),
            dense_weights=vec[20:22].copy(),
            dense_bias=float(vec[22]),
        )

    @classmethod
    def init_random(cls, seed: int) -> "LineDetectorModel":
        rng = np.random.default_rng(seed)
        model = cls.from_vector(rng.uniform(-0.5, 0.5, N_PARAMS))
        # fix channel order: the filter wired to the larger dense weight starts
        # as the vertical-line candidate and goes last
        if model.dense_weights[0] > model.dense_weights[1]:
            model.conv_filters = model.conv_filters[::-1].copy()
            model.conv_bias = model.conv_bias[::-1].copy()
            model.dense_weights = model.dense_weights[::-1].copy()
        return model

    def copy(self) -> "LineDetectorModel":
        return LineDetectorModel.from_vector(self.to_vector())


@dataclass
class LineDataset:
    images: np.ndarray  # (n, H, W) in [0, 1]
    labels: np.ndarray  # (n,) 0 = horizontal, 1 = vertical

    @property
    def counts(self) -> tuple[int, int]:
        return int(np.sum(self.labels == 0)), int(np.sum(self.labels == 1))

    def __len__(self) -> int:
        return self.images.shape[0]


def generate_lines(
    height: int,
    width: int,
    p: int,
    q: int,
    noise_std: float = 0.0,
    seed: int = 0,
) -> LineDataset:
    """p images with one random full row lit, q with one random full column.

    Pixels are in [0, 1]; optional additive Gaussian noise is clipped back
    into range. Deterministic for a fixed seed.
    """
    if height < 3 or width < 3:
        raise ValueError("images must be at least 3x3")
    if p < 0 or q < 0 or p + q < 1:
        raise ValueError("need non-negative counts with p + q >= 1")
    rng = np.random.default_rng(seed)
    n = p + q
    images = np.zeros((n, height, width))
    labels = np.concatenate([np.zeros(p, dtype=int), np.ones(q, dtype=int)])
    rows = rng.integers(0, height, size=p)
    cols = rng.integers(0, width, size=q)
    for i in range(p):
        images[i, rows[i], :] = 1.0
    for i in range(q):
        images[p + i, :, cols[i]] = 1.0
    if noise_std > 0.0:
        images = np.clip(images + rng.normal(0.0, noise_std, images.shape), 0.0, 1.0)
    return LineDataset(images=images, labels=labels)


def save_dataset(dataset: LineDataset, path) -> None:
    np.savez(path, images=dataset.images, labels=dataset.labels)


def load_dataset(path) -> LineDataset:
    with np.load(path) as data:
        return LineDataset(images=data["images"].copy(), labels=data["labels"].copy())


def _sigmoid(x):
    out = np.empty_like(x, dtype=float)
    pos = x >= 0
    out[pos] = 1.0 / (1.0 + np.exp(-x[pos]))
    ex = np.exp(x[~pos])
    out[~pos] = ex / (1.0 + ex)
    return out


def _bce_from_logit(logits, labels):
    # max(x,0) - x*y + log(1 + exp(-|x|)), stable for large |x|
    return (
        np.maximum(logits, 0.0)
        - logits * labels
        + np.log1p(np.exp(-np.abs(logits)))
    )


def batch_forward(model: LineDetectorModel, images: np.ndarray):
    """Logits, pooled features, and argmax patches for a batch of images.

    Returns (logits (B,), features (B, 2), patches (B, 2, 3, 3)) where
    patches are the image windows at each filter's max response, used for
    gradient routing.
    """
    images = np.asarray(images, dtype=float)
    if images.ndim == 2:
        images = images[None]
    B, H, W = images.shape
    if H < 3 or W < 3:
        raise ValueError("images must be at least 3x3")
    windows = sliding_window_view(images, (3, 3), axis=(1, 2))  # (B, H-2, W-2, 3, 3)
    resp = np.einsum("bijxy,fxy->bfij", windows, model.conv_filters)
    resp = resp + model.conv_bias[None, :, None, None]
    flat = resp.reshape(B, 2, -1)
    arg = np.argmax(flat, axis=2)  # first max in row-major order
    features = np.take_along_axis(flat, arg[:, :, None], axis=2)[:, :, 0]
    i_star, j_star = np.unravel_index(arg, resp.shape[2:])
    patches = windows[np.arange(B)[:, None], i_star, j_star]  # (B, 2, 3, 3)
    logits = features @ model.dense_weights + model.dense_bias
    return logits, features, patches


def forward(model: LineDetectorModel, image) -> tuple[float, np.ndarray]:
    """Logit and pooled 2-vector of features for a single image."""
    logits, features, _ = batch_forward(model, np.asarray(image, dtype=float)[None])
    return float(logits[0]), features[0]


def per_sample_grads(model: LineDetectorModel, images, labels):
    """Loss, exact loss gradient (23 parameters) and features per sample.

    Returns (losses (B,), grads (B, 23), features (B, 2)).
    """
    images = np.asarray(images, dtype=float)
    labels = np.asarray(labels, dtype=float)
    if images.ndim == 2:
        images = images[None]
    if images.shape[0] == 0:
        raise ValueError("batch must be non-empty")
    logits, features, patches = batch_forward(model, images)
    losses = _bce_from_logit(logits, labels)
    dlogit = _sigmoid(logits) - labels  # (B,)

    grads = np.empty((images.shape[0], N_PARAMS))
    dfilters = dlogit[:, None, None, None] * model.dense_weights[None, :, None, None]
    grads[:, :18] = (dfilters * patches).reshape(images.shape[0], 18)
    grads[:, 18:20] = dlogit[:, None] * model.dense_weights[None, :]
    grads[:, 20:22] = dlogit[:, None] * features
    grads[:, 22] = dlogit
    return losses, grads, features


def batch_grad(model: LineDetectorModel, images, labels) -> np.ndarray:
    """Gradient of the mean loss, accumulated directly over the batch."""
    images = np.asarray(images, dtype=float)
    labels = np.asarray(labels, dtype=float)
    logits, features, patches = batch_forward(model, images)
    dlogit = (_sigmoid(logits) - labels) / images.shape[0]  # (B,)
    grads = np.empty(N_PARAMS)
    grads[:18] = np.einsum(
        "b,f,bfxy->fxy", dlogit, model.dense_weights, patches
    ).ravel()
    grads[18:20] = dlogit.sum() * model.dense_weights
    grads[20:22] = dlogit @ features
    grads[22] = dlogit.sum()
    return grads


def batch_loss(model: LineDetectorModel, images, labels) -> float:
    logits, _, _ = batch_forward(model, np.asarray(images, dtype=float))
    return float(np.mean(_bce_from_logit(logits, np.asarray(labels, dtype=float))))


def _cosine(a: np.ndarray, b: np.ndarray) -> float:
    na, nb = np.linalg.norm(a), np.linalg.norm(b)
    if na == 0.0 or nb == 0.0:
        return 0.0
    return float(np.dot(a.ravel(), b.ravel()) / (na * nb))


def template_alignment(model: LineDetectorModel) -> np.ndarray:
    """Cosine similarity of each mean-subtracted filter to its ideal template.

    Index 0 compares against the horizontal template, index 1 against the
    vertical one. A zero-norm filter scores 0.
    """
    out = np.empty(2)
    for i, template in enumerate((IDEAL_HORIZONTAL, IDEAL_VERTICAL)):
        f = model.conv_filters[i]
        out[i] = _cosine(f - f.mean(), template)
    return out
