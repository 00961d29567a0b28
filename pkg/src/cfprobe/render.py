"""Procedural renderer for chest-X-ray-like 64x64 grayscale images.

The attribute-to-feature mapping is fixed so that oracles (region masks, template
kernels, linear probes) can be derived without running any model:

    sex              ribcage half-width: male 21 px, female 16 px
    age              global bone/tissue gain: young 1.00, middle 0.85, old 0.70
    race             torso outline taper (top/bottom width): asian 0.92, white 0.76, black 0.60
    pleural_effusion bright wedge filling the left-of-image lung base (intensity 0.85)
    cardiomegaly     cardiac ellipse half-width 16 px instead of 10 px
    pacemaker        high-intensity 8x6 rectangle in the upper-left lung (intensity 0.95)
    tube             thin bright curve from the top midline (intensity 0.90)

Geometry jitters by at most ~1 px / 2% via the record seed; the constants below are
the oracle contract and are intentionally conservative about overlaps.
"""

from __future__ import annotations

import numpy as np

from ._util import rng_for
from .records import AttributeRecord

H = W = 64
CX = 32.0

TORSO_TOP, TORSO_BOTTOM = 8.0, 62.0
TORSO_HALF_WIDTH = 25.0
RACE_TAPER = {"asian": 0.92, "white": 0.76, "black": 0.60}
AGE_GAIN = {"young": 1.00, "middle": 0.85, "old": 0.70}
SEX_RIB_HALF_WIDTH = {"male": 21.0, "female": 16.0}

LUNG_CENTERS = ((20.0, 30.0), (44.0, 30.0))  # (x, y)
LUNG_AXES = (8.5, 14.0)

HEART_CENTER = (35.0, 41.0)
HEART_HALF_WIDTH = {"normal": 10.0, "cardiomegaly": 16.0}
HEART_HALF_HEIGHT = 9.0

WEDGE_X = (12.0, 27.0)  # left-of-image lung base
WEDGE_Y = (36.0, 44.0)

PACEMAKER_ROWS = (12, 18)  # [lo, hi)
PACEMAKER_COLS = (10, 18)

TUBE_TOP = (32.0, 3.0)
TUBE_BOTTOM_DX, TUBE_LEN = 6.0, 27.0

BACKGROUND = 0.04
TISSUE = 0.26
LUNG = 0.12
RIB = 0.55
HEART = 0.42
WEDGE = 0.85
PACEMAKER = 0.95
TUBE = 0.90
NOISE_SIGMA = 0.008

_YY, _XX = np.mgrid[0:H, 0:W].astype(np.float64)


def _torso_mask(taper: float) -> np.ndarray:
    frac = np.clip((_YY - TORSO_TOP) / (TORSO_BOTTOM - TORSO_TOP), 0.0, 1.0)
    half = TORSO_HALF_WIDTH * (taper + (1.0 - taper) * frac)
    return (np.abs(_XX - CX) <= half) & (_YY >= TORSO_TOP) & (_YY <= TORSO_BOTTOM)


def _ellipse_mask(cx: float, cy: float, ax: float, ay: float) -> np.ndarray:
    return ((_XX - cx) / ax) ** 2 + ((_YY - cy) / ay) ** 2 <= 1.0


def render_image(record: AttributeRecord) -> np.ndarray:
    """Render one record to a [0,1] float32 64x64 image; deterministic given record.seed."""
    rng = rng_for("render_image", record.seed)
    jitter = rng.uniform(-1.0, 1.0, size=8)

    gain = AGE_GAIN[record.age_bin] + 0.02 * jitter[0]
    taper = RACE_TAPER[record.race] + 0.01 * jitter[1]
    rib_hw = SEX_RIB_HALF_WIDTH[record.sex] + 0.4 * jitter[2]

    img = np.full((H, W), BACKGROUND, dtype=np.float64)
    torso = _torso_mask(taper)
    img[torso] = TISSUE * gain

    for lx, ly in LUNG_CENTERS:
        img[_ellipse_mask(lx, ly, *LUNG_AXES) & torso] = LUNG * gain

    # rib arcs: five shallow elliptical bands across the chest
    for k, base_y in enumerate((16.0, 22.0, 28.0, 34.0, 40.0)):
        y_arc = base_y + 0.3 * jitter[3] + 2.0 * ((_XX - CX) / rib_hw) ** 2
        band = (np.abs(_YY - y_arc) <= 0.8) & (np.abs(_XX - CX) <= rib_hw) & torso
        img[band] = RIB * gain

    heart_hw = HEART_HALF_WIDTH["cardiomegaly" if record.has_finding("cardiomegaly") else "normal"]
    heart_hw += 0.4 * jitter[4]
    hx, hy = HEART_CENTER
    img[_ellipse_mask(hx + 0.4 * jitter[5], hy, heart_hw, HEART_HALF_HEIGHT)] = HEART * gain

    if record.has_finding("pleural_effusion"):
        x0, x1 = WEDGE_X
        y0, y1 = WEDGE_Y
        slope = (_XX - x0) / (x1 - x0)
        wedge = (_XX >= x0) & (_XX <= x1) & (_YY <= y1) & (_YY >= y1 - slope * (y1 - y0))
        img[wedge] = WEDGE

    if record.device == "pacemaker":
        r0, r1 = PACEMAKER_ROWS
        c0, c1 = PACEMAKER_COLS
        dr, dc = int(round(jitter[6])), int(round(jitter[7]))
        img[r0 + dr : r1 + dr, c0 + dc : c1 + dc] = PACEMAKER
    elif record.device == "tube":
        t = np.linspace(0.0, 1.0, 200)
        tx = TUBE_TOP[0] + TUBE_BOTTOM_DX * t**2 + 0.5 * jitter[6]
        ty = TUBE_TOP[1] + TUBE_LEN * t
        for cx, cy in zip(tx, ty):
            img[(np.abs(_XX - cx) <= 0.9) & (np.abs(_YY - cy) <= 0.9)] = TUBE

    img = img + rng.normal(0.0, NOISE_SIGMA, size=(H, W))
    return np.clip(img, 0.0, 1.0).astype(np.float32)


def validate_image(image) -> np.ndarray:
    """Check the ImageArray contract: 2-D, power-of-two sides, finite, in [0,1]."""
    arr = np.asarray(image)
    if arr.ndim != 2:
        raise ValueError(f"image must be 2-D, got shape {arr.shape}")
    h, w = arr.shape
    if h & (h - 1) or w & (w - 1) or h == 0 or w == 0:
        raise ValueError(f"image sides must be powers of two, got {arr.shape}")
    if not np.all(np.isfinite(arr)):
        raise ValueError("image has non-finite pixels")
    if arr.min() < 0.0 or arr.max() > 1.0:
        raise ValueError(f"pixels outside [0,1]: [{arr.min()}, {arr.max()}]")
    return arr


# -- oracle helpers (used by tests and the report path) -----------------------


def cardiac_region_mask() -> np.ndarray:
    """Ring covered by an enlarged cardiac silhouette but not a normal one."""
    hx, hy = HEART_CENTER
    outer = _ellipse_mask(hx, hy, HEART_HALF_WIDTH["cardiomegaly"] - 1.5, HEART_HALF_HEIGHT - 1.5)
    inner = _ellipse_mask(hx, hy, HEART_HALF_WIDTH["normal"] + 1.5, HEART_HALF_HEIGHT)
    return outer & ~inner


def wedge_region_mask() -> np.ndarray:
    x0, x1 = WEDGE_X
    y0, y1 = WEDGE_Y
    slope = (_XX - x0) / (x1 - x0)
    return (_XX >= x0 + 2) & (_XX <= x1 - 1) & (_YY <= y1) & (_YY >= y1 - slope * (y1 - y0) + 1)


def pacemaker_template() -> np.ndarray:
    r0, r1 = PACEMAKER_ROWS
    c0, c1 = PACEMAKER_COLS
    return np.ones((r1 - r0, c1 - c0), dtype=np.float64)


def pacemaker_match_score(image) -> float:
    """Max normalized cross-correlation of the rectangle kernel near its canonical spot."""
    img = np.asarray(image, dtype=np.float64)
    tpl = pacemaker_template()
    th, tw = tpl.shape
    tpl = tpl - tpl.mean()  # degenerate for an all-ones kernel, so correlate against shape + brightness
    r0, r1 = PACEMAKER_ROWS
    c0, c1 = PACEMAKER_COLS
    best = -1.0
    for dr in range(-3, 4):
        for dc in range(-3, 4):
            rr, cc = r0 + dr, c0 + dc
            if rr < 0 or cc < 0 or rr + th > img.shape[0] or cc + tw > img.shape[1]:
                continue
            # brightness-sensitive match: mean intensity in window minus surrounding ring,
            # scaled to [0,1] against the pacemaker/lung contrast
            window = img[rr : rr + th, cc : cc + tw]
            pad = img[max(rr - 3, 0) : rr + th + 3, max(cc - 3, 0) : cc + tw + 3]
            ring = (pad.sum() - window.sum()) / max(pad.size - window.size, 1)
            score = (window.mean() - ring) / (PACEMAKER - LUNG)
            best = max(best, score)
    return float(np.clip(best, 0.0, 1.0))
