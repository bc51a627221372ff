"""Segmental SNR, the voice-quality proxy used in place of PESQ."""

import numpy as np

WINDOW = 80  # 10 ms at 8 kHz
SNR_FLOOR_DB = -10.0
SNR_CEIL_DB = 35.0
ACTIVITY_RANGE_DB = 40.0


def segmental_snr(reference, degraded, window=WINDOW):
    """Mean per-window SNR in dB over windows with speech activity.

    A window counts as active when its reference energy is within
    ``ACTIVITY_RANGE_DB`` of the loudest window.  Per-window values are
    clamped to [-10, 35] dB so silent or perfect windows cannot dominate.
    """
    ref = np.asarray(getattr(reference, "samples", reference), dtype=np.float64)
    deg = np.asarray(getattr(degraded, "samples", degraded), dtype=np.float64)
    n = min(ref.size, deg.size) // window * window
    if n == 0:
        raise ValueError("signals shorter than one window")
    ref = ref[:n].reshape(-1, window)
    err = ref - deg[:n].reshape(-1, window)
    sig_e = np.sum(ref ** 2, axis=1)
    err_e = np.sum(err ** 2, axis=1)
    active = sig_e > sig_e.max() * 10 ** (-ACTIVITY_RANGE_DB / 10)
    if not active.any():
        raise ValueError("reference contains no active windows")
    with np.errstate(divide="ignore"):
        snr = 10 * np.log10(sig_e[active] / np.maximum(err_e[active], 1e-10))
    return float(np.mean(np.clip(snr, SNR_FLOOR_DB, SNR_CEIL_DB)))


def energy_dbfs(samples):
    x = np.asarray(getattr(samples, "samples", samples), dtype=np.float64)
    if x.size == 0:
        return float("-inf")
    rms = np.sqrt(np.mean(x ** 2))
    return float(20 * np.log10(max(rms, 1e-12) / 32768))
