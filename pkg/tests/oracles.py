"""Reference implementations that share no code with the package.

Kept deliberately naive: explicit loops, textbook definitions, direct sums.
"""

import math

import numpy as np


def df2t(sections, x):
    """Direct-form II transposed biquad cascade, one sample at a time."""
    y = [float(v) for v in x]
    for b0, b1, b2, a1, a2 in sections:
        s1 = s2 = 0.0
        out = []
        for v in y:
            o = b0 * v + s1
            s1 = b1 * v - a1 * o + s2
            s2 = b2 * v - a2 * o
            out.append(o)
        y = out
    return np.array(y)


def impulse_response(sections, n=1 << 15):
    imp = np.zeros(n)
    imp[0] = 1.0
    return df2t(sections, imp)


def dtft_db(h, freqs, rate):
    """Magnitude in dB of the DFT sum of ``h`` evaluated at arbitrary frequencies."""
    n = np.arange(len(h))
    out = []
    for f in np.atleast_1d(freqs):
        val = np.sum(h * np.exp(-2j * np.pi * f * n / rate))
        out.append(20 * math.log10(max(abs(val), 1e-300)))
    return np.array(out)


def naive_time_features(x):
    x = [float(v) for v in x]
    n = len(x)
    # correctly rounded sums, so a constant window has exactly zero variance
    mav = math.fsum(abs(v) for v in x) / n
    rms = math.sqrt(math.fsum(v * v for v in x) / n)
    mean = math.fsum(x) / n
    var = math.fsum((v - mean) ** 2 for v in x) / n
    wl = math.fsum(abs(x[i + 1] - x[i]) for i in range(n - 1))
    zc = 0
    prev = 0
    for v in x:
        s = (v > 0) - (v < 0)
        if s == 0:
            continue
        if prev and s != prev:
            zc += 1
        prev = s
    return [mav, rms, var, wl, float(zc)]


def naive_freq_features(x, rate, window="hann"):
    x = [float(v) for v in x]
    n = len(x)
    if max(x) == min(x):
        return [0.0, 0.0, 0.0]
    mean = sum(x) / n
    if window == "hann":
        w = [0.5 - 0.5 * math.cos(2 * math.pi * i / n) for i in range(n)]
    else:
        w = [1.0] * n
    z = [(x[i] - mean) * w[i] for i in range(n)]
    zm = sum(z) / n
    z = [v - zm for v in z]
    powers, freqs = [], []
    for k in range(1, n // 2 + 1):
        re = sum(z[i] * math.cos(2 * math.pi * k * i / n) for i in range(n))
        im = sum(z[i] * math.sin(2 * math.pi * k * i / n) for i in range(n))
        p = (re * re + im * im) / n
        if not (n % 2 == 0 and k == n // 2):
            p *= 2
        powers.append(p)
        freqs.append(k * rate / n)
    total = sum(powers)
    if total == 0:
        return [0.0, 0.0, 0.0]
    mnf = sum(f * p for f, p in zip(freqs, powers)) / total
    acc = 0.0
    mdf = freqs[-1]
    for f, p in zip(freqs, powers):
        acc += p
        if acc >= total * (0.5 - 1e-12):
            mdf = f
            break
    return [mnf, mdf, total]


def dft_freq_features(windows, rate):
    """Batch version of :func:`naive_freq_features` using explicit DFT matrices.

    Slower than an FFT but shares no code with it: the transform is an
    explicit cosine/sine sum evaluated as a matrix product.
    """
    w = np.asarray(windows, dtype=float)
    n = w.shape[1]
    i = np.arange(n)
    hann = 0.5 - 0.5 * np.cos(2 * np.pi * i / n)
    z = (w - w.mean(axis=1, keepdims=True)) * hann
    z = z - z.mean(axis=1, keepdims=True)
    k = np.arange(1, n // 2 + 1)
    arg = 2 * np.pi * np.outer(i, k) / n
    re, im = z @ np.cos(arg), z @ np.sin(arg)
    p = (re * re + im * im) / n
    paired = np.full(len(k), 2.0)
    if n % 2 == 0:
        paired[-1] = 1.0
    p = p * paired
    freqs = k * rate / n
    out = np.zeros((len(w), 3))
    for r in range(len(w)):
        if w[r].max() == w[r].min():
            continue
        total = p[r].sum()
        acc, mdf = 0.0, freqs[-1]
        for f, pk in zip(freqs, p[r]):
            acc += pk
            if acc >= total * (0.5 - 1e-12):
                mdf = f
                break
        out[r] = (p[r] @ freqs / total, mdf, total)
    return out
