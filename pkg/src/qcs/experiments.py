"""End-to-end pipelines and the experiment sweeps the CLI can run.

Each runner takes validated parameters plus a root SeedSequence and
returns ``{filename: (schema, rows)}``; the harness turns those into
checksummed CSV files.  All randomness flows from the root seed through
``SeedSequence.spawn``, so a sweep is reproducible bit for bit.
"""

from __future__ import annotations

import numpy as np

from . import baseline, coverage, reconstruction, signals, timelens
from .errors import InvalidArgument
from .frontend import (
    DetectorModel,
    JitterModel,
    PhotonStream,
    apply_detector,
    sample_arrivals,
)
from .signals import FOURIER_BASIS, ModulationConfig, SparseSignal, ToneSet
from .timelens import TimeLensConfig


def _child_rngs(seed_seq: np.random.SeedSequence, n: int):
    return [np.random.default_rng(ss) for ss in seed_seq.spawn(n)]


# ---------------------------------------------------------------------------
# pipelines

def dft_tone_pipeline(
    signal: SparseSignal,
    m_photons: int,
    seed,
    depth: float = 1.0,
    n_periods: int = 1000,
    grid_bins=None,
) -> reconstruction.ReconstructionResult:
    """Frequency-sparse signal -> intensity -> Poisson photons -> spectral
    estimate -> waveform, scored against the input signal.

    The candidate grid defaults to every bin up to the signal's Nyquist.
    Coefficient magnitudes drive top-K support selection; the measured
    phases feed the waveform synthesis so the spectral noise floor stays
    zero-mean in the reconstruction.
    """
    if signal.basis != FOURIER_BASIS:
        raise InvalidArgument("the spectral pipeline needs a frequency-sparse signal")
    n = signal.dimension
    period = signal.period
    span = period * n_periods
    rate = m_photons / span
    waveform = signals.render_intensity(signal, ModulationConfig(depth, rate), grid=max(n, 64))
    stream = sample_arrivals(waveform, span, seed)
    if grid_bins is None:
        grid_bins = np.arange(1, n // 2 + 1)
    grid_bins = np.asarray(grid_bins, dtype=np.int64)
    freqs = grid_bins / period
    spectrum = reconstruction.dft_coefficients(stream, freqs)
    coefs = np.zeros(n)
    phases = np.zeros(n)
    coefs[grid_bins] = np.abs(spectrum)
    phases[grid_bins] = np.angle(spectrum)
    estimate = reconstruction.SparseEstimate(coefficients=coefs, scale=1.0)
    return reconstruction.reconstruct(estimate, FOURIER_BASIS, truth=signal, phases=phases)


def tone_signal(tone_freq_hz: float, period_s: float, n: int) -> SparseSignal:
    tones = ToneSet(tones=((tone_freq_hz, 1.0, 0.0),), window=period_s)
    return signals.make_tone_signal(tones, n)


def comb_signal(k: int, spacing_hz: float, n: int) -> SparseSignal:
    """Equal-amplitude zero-phase comb: lines at spacing..k*spacing."""
    window = 1.0 / spacing_hz
    tones = ToneSet(
        tones=tuple((spacing_hz * (i + 1), 1.0, 0.0) for i in range(k)), window=window
    )
    return signals.make_tone_signal(tones, n)


# ---------------------------------------------------------------------------
# sweep runners

def run_success_vs_m(params: dict, seed_seq) -> dict:
    """Support-recovery success rate over an M grid for each sparsity."""
    k_list = [int(k) for k in params["k_list"]]
    p = float(params["p"])
    trials = int(params["trials"])
    min_hits = int(params["min_hits"])
    n = int(params["n"])
    dark = float(params["dark_per_period"])
    grid = params["m_grid"]
    threads = int(params.get("threads", 1))
    rows = []
    cases = [(k, m) for k in k_list for m in _m_grid_for(k, grid)]
    rngs = seed_seq.spawn(len(cases))
    for (k, m), ss in zip(cases, rngs):
        est = coverage.coverage_mc(
            k,
            p,
            m,
            trials,
            seed=ss,
            min_hits=min_hits,
            n_bins=n,
            dark_per_period=dark,
            exclusive=dark > 0,
            threads=threads,
        )
        rows.append((k, p, m, est.success_rate, est.ci_lo, est.ci_hi))
    return {"success_vs_m.csv": (("k", "p", "m", "success", "ci_lo", "ci_hi"), rows)}


def _m_grid_for(k: int, grid) -> list:
    if grid is not None:
        return [int(m) for m in grid]
    ladder = sorted({max(1, k // 2), k, 2 * k + 10, 2 * k + 30, 3 * k, 4 * k})
    return ladder


def run_mmin_vs_k(params: dict, seed_seq) -> dict:
    """Minimum M for a target success rate versus K, with the classical bound."""
    k_list = [int(k) for k in params["k_list"]]
    p = float(params["p"])
    target = float(params["target"])
    trials = int(params["trials"])
    bound_n = int(params["bound_n"])
    bound_c = float(params["bound_c"])
    threads = int(params.get("threads", 1))
    hits_list = [int(h) for h in params["min_hits_list"]]
    rngs = seed_seq.spawn(len(hits_list) * len(k_list))
    per_hits = {}
    idx = 0
    for hits in hits_list:
        vals = []
        for k in k_list:
            m_min = coverage.min_measurements(
                k, p, target, min_hits=hits, seed=rngs[idx], trials=trials, threads=threads
            )
            idx += 1
            vals.append(m_min)
        per_hits[hits] = vals
    out = {}
    for hits, vals in per_hits.items():
        rows = [(k, p, target, m) for k, m in zip(k_list, vals)]
        out[f"mmin_vs_k_c{hits}.csv"] = (("k", "p", "target", "m_min"), rows)
    overlay = []
    for i, k in enumerate(k_list):
        row = [k] + [per_hits[h][i] for h in hits_list]
        row += [baseline.classical_bound(k, bound_n, bound_c), k, 2 * k]
        overlay.append(tuple(row))
    schema = ["k"] + [f"m_min_c{h}" for h in hits_list] + ["classical_bound", "ideal_k", "twice_k"]
    out["mmin_overlay.csv"] = (tuple(schema), overlay)
    fits = []
    for hits, vals in per_hits.items():
        fit = coverage.fit_scaling(list(zip(k_list, vals)))
        fits.append((hits, fit.alpha, fit.c, fit.r2))
    out["mmin_scaling_fit.csv"] = (("min_hits", "alpha", "intercept", "r2"), fits)
    return out


def run_nmse_vs_m(params: dict, seed_seq) -> dict:
    """Reconstruction error of the spectral pipeline versus photon count."""
    m_list = [int(m) for m in params["m_list"]]
    trials = int(params["trials_per_m"])
    signal = tone_signal(
        float(params["tone_freq_hz"]), float(params["period_s"]), int(params["n"])
    )
    depth = float(params["depth"])
    n_periods = int(params["n_periods"])
    rngs = seed_seq.spawn(len(m_list) * trials)
    rows = []
    rmses = []
    idx = 0
    for m in m_list:
        nmses = []
        for _ in range(trials):
            res = dft_tone_pipeline(signal, m, rngs[idx], depth=depth, n_periods=n_periods)
            nmses.append(res.nmse)
            idx += 1
        nmse = float(np.mean(nmses))
        rmses.append(np.sqrt(nmse))
        rows.append([m, nmse, np.sqrt(nmse)])
    # 1/sqrt(M) reference anchored at the geometric mean of the data
    logm = np.log10(m_list)
    anchor = float(np.mean(np.log10(rmses) + 0.5 * logm))
    for row, lm in zip(rows, logm):
        row.append(10.0 ** (anchor - 0.5 * lm))
    out = {"nmse_vs_m.csv": (("m", "nmse", "rmse", "ref_rmse"), [tuple(r) for r in rows])}
    if len(m_list) >= 2:
        slope, intercept, r2 = baseline.fit_line(logm, np.log10(rmses))
        out["nmse_fit.csv"] = (("slope", "intercept", "r2"), [(slope, intercept, r2)])
    return out


def fit_background_for_accuracy(target_single_photon_accuracy: float) -> float:
    """Background fraction giving the target one-photon identification rate.

    With four candidate tones, a background photon is classified correctly
    a quarter of the time on average, so acc(b) = 1 - 3b/4 exactly.
    """
    if not 0 < target_single_photon_accuracy <= 1:
        raise InvalidArgument("target accuracy must be in (0, 1]")
    b = 4.0 * (1.0 - target_single_photon_accuracy) / 3.0
    if b >= 1.0:
        raise InvalidArgument("target accuracy below the 4-tone chance floor")
    return b


def run_confusion_tls(params: dict, seed_seq) -> dict:
    """Tone identification accuracy versus photon count, plus the confusion
    matrix at a chosen photon number."""
    tone_freqs = [float(f) for f in params["tone_freqs_hz"]]
    cfg = TimeLensConfig(
        dispersion=float(params["dispersion_s2"]), window=float(params["window_s"])
    )
    n_bins = int(params["n_bins"])
    photon_counts = [int(c) for c in params["photon_counts"]]
    trials = int(params["trials"])
    confusion_at = int(params["confusion_photons"])
    if params.get("background") is not None:
        b = float(params["background"])
    else:
        b = fit_background_for_accuracy(float(params["target_single_photon_accuracy"]))
    window_ps = int(round(cfg.window * 1e12))
    bins = np.array([timelens.tone_bin(f, cfg, n_bins) for f in tone_freqs])
    if len(set(bins.tolist())) != len(tone_freqs):
        raise InvalidArgument("tones collide in the lens bin grid; increase n_bins")
    per_tone = max(1, trials // len(tone_freqs))
    acc_rows = []
    confusion = np.zeros((len(tone_freqs), len(tone_freqs)), dtype=np.int64)
    rngs = _child_rngs(seed_seq, len(photon_counts) * len(tone_freqs) + 1)
    tie_rng = rngs[-1]
    idx = 0
    for m in photon_counts:
        hits = 0
        for true_idx, freq in enumerate(tone_freqs):
            rng = rngs[idx]
            idx += 1
            tones = ToneSet(tones=((freq, 1.0, 0.0),), window=cfg.window)
            draws = timelens._draw_timestamps(
                *timelens._spectrum_lines(tones), cfg, per_tone * m, b, rng, n_bins
            )
            draw_bins = (draws * n_bins) // window_ps
            counts = (draw_bins.reshape(per_tone, m)[:, :, None] == bins[None, None, :]).sum(
                axis=1
            )
            # random tie-break, including the all-background case
            scores = counts + 0.5 * tie_rng.random(counts.shape)
            predicted = np.argmax(scores, axis=1)
            hits += int(np.sum(predicted == true_idx))
            if m == confusion_at:
                for j in range(len(tone_freqs)):
                    confusion[true_idx, j] += int(np.sum(predicted == j))
        total = per_tone * len(tone_freqs)
        lo, hi = coverage.wilson_interval(hits, total)
        acc_rows.append((m, hits / total, lo, hi))
    conf_rows = []
    for i, fi in enumerate(tone_freqs):
        for j, fj in enumerate(tone_freqs):
            conf_rows.append((fi, fj, int(confusion[i, j]), confusion[i, j] / per_tone))
    return {
        "accuracy_vs_photons.csv": (("photons", "accuracy", "ci_lo", "ci_hi"), acc_rows),
        "confusion_matrix.csv": (
            ("true_tone_hz", "identified_tone_hz", "count", "fraction"),
            conf_rows,
        ),
        "confusion_params.csv": (
            ("background", "trials_per_tone", "confusion_photons"),
            [(b, per_tone, confusion_at)],
        ),
    }


def run_dft_demo(params: dict, seed_seq) -> dict:
    """Single-tone and comb reconstructions via the spectral pipeline."""
    out = {}
    rngs = seed_seq.spawn(2)
    tone = tone_signal(
        float(params["tone_freq_hz"]), float(params["tone_period_s"]), int(params["tone_n"])
    )
    res = dft_tone_pipeline(
        tone, int(params["tone_photons"]), rngs[0], n_periods=int(params["n_periods"])
    )
    out["dft_tone_waveform.csv"] = _waveform_rows(tone, res)
    out["dft_tone_coefficients.csv"] = _coefficient_rows(tone, res)
    comb = comb_signal(
        int(params["comb_k"]), float(params["comb_spacing_hz"]), int(params["comb_n"])
    )
    res_c = dft_tone_pipeline(
        comb, int(params["comb_photons"]), rngs[1], n_periods=int(params["n_periods"])
    )
    out["dft_comb_waveform.csv"] = _waveform_rows(comb, res_c)
    out["dft_comb_coefficients.csv"] = _coefficient_rows(comb, res_c)
    out["dft_demo_metrics.csv"] = (
        ("case", "k", "photons", "nmse", "support_recovered"),
        [
            ("tone", tone.sparsity, int(params["tone_photons"]), res.nmse, res.success),
            ("comb", comb.sparsity, int(params["comb_photons"]), res_c.nmse, res_c.success),
        ],
    )
    return out


def _waveform_rows(signal: SparseSignal, res: reconstruction.ReconstructionResult):
    n = signal.dimension
    original = signals.signal_waveform(signal, n)
    recon = res.waveform / np.abs(res.waveform).max()
    rows = [(i, original[i], recon[i], recon[i] - original[i]) for i in range(n)]
    return (("index", "original", "reconstructed", "residual"), rows)


def _coefficient_rows(signal: SparseSignal, res: reconstruction.ReconstructionResult):
    coefs = res.estimate.coefficients
    rows = []
    for b in range(signal.dimension):
        if coefs[b] > 0 or b in signal.support:
            rows.append((b, b / signal.period, coefs[b], int(b in signal.support)))
    return (("bin", "freq_hz", "magnitude", "true_line"), rows)


def run_jitter_bandwidth(params: dict, seed_seq) -> dict:
    """|H(f)| curves and 3 dB bandwidths for a list of jitter widths."""
    fwhm_list = [float(v) for v in params["fwhm_ps_list"]]
    tau_ps = float(params["tau_ps"])
    f_grid = np.logspace(
        np.log10(float(params["f_min_hz"])),
        np.log10(float(params["f_max_hz"])),
        int(params["f_points"]),
    )
    curve_rows = []
    band_rows = []
    for fwhm in fwhm_list:
        jit = JitterModel.from_fwhm(fwhm * 1e-12, tau=tau_ps * 1e-12)
        mags = timelens.jitter_response(jit, f_grid)
        for f, h in zip(f_grid, mags):
            curve_rows.append((fwhm, f, h))
        f3 = timelens.bandwidth_3db(jit)
        band_rows.append((fwhm, jit.sigma * 1e12, tau_ps, f3, f3 * fwhm * 1e-12))
    return {
        "jitter_response.csv": (("fwhm_ps", "f_hz", "magnitude"), curve_rows),
        "jitter_bandwidth.csv": (
            ("fwhm_ps", "sigma_ps", "tau_ps", "f3db_hz", "f3db_times_fwhm"),
            band_rows,
        ),
    }


def _estimate_peak_frequency(stream: PhotonStream, f0: float, span_hint: float):
    """Two-stage spectral peak search around f0."""
    t_span = stream.span
    coarse_step = 1.0 / (2.0 * t_span)
    half = max(span_hint, 20.0 * coarse_step)
    grid = np.arange(f0 - half, f0 + half + coarse_step, coarse_step)
    grid = grid[grid > 0]
    mags = reconstruction.dft_estimate(stream, grid)
    peak = grid[int(np.argmax(mags))]
    fine_step = 1.0 / (40.0 * t_span)
    grid2 = np.arange(peak - 2 * coarse_step, peak + 2 * coarse_step, fine_step)
    grid2 = grid2[grid2 > 0]
    mags2 = reconstruction.dft_estimate(stream, grid2)
    return float(grid2[int(np.argmax(mags2))])


def run_resolution_vs_integration(params: dict, seed_seq) -> dict:
    """Apparent frequency error versus integration time for clock settings.

    A skewed clock rescales every timestamp, shifting a tone at f0 by
    skew * f0; an ideal common clock leaves only the Fourier limit 1/T.
    """
    f0 = float(params["f0_hz"])
    photons = int(params["photons"])
    integrations = [float(t) for t in params["integration_s"]]
    clocks = params["clocks"]
    period = 1.0 / f0
    rows = []
    rngs = seed_seq.spawn(len(clocks) * len(integrations))
    idx = 0
    max_skew = max(abs(float(s)) for _, s in clocks)
    for name, skew in clocks:
        skew = float(skew)
        for t_int in integrations:
            rng_a, rng_b = np.random.default_rng(rngs[idx]), np.random.default_rng(
                rngs[idx].spawn(1)[0]
            )
            idx += 1
            rate = photons / t_int
            signal = tone_signal(f0, period, 4)
            waveform = signals.render_intensity(signal, ModulationConfig(1.0, rate), grid=64)
            stream = sample_arrivals(waveform, t_int, rng_a)
            det = DetectorModel(clock_skew=skew)
            stream = apply_detector(stream, det, rng_b)
            span_hint = 1.5 * max_skew * f0 + 5.0 / t_int
            f_hat = _estimate_peak_frequency(stream, f0, span_hint)
            err = abs(f_hat - f0)
            rows.append((name, skew, t_int, 1.0 / t_int, err, max(err, 1.0 / t_int)))
    return {
        "resolution_vs_integration.csv": (
            ("clock", "skew", "integration_s", "fourier_limit_hz", "freq_error_hz", "resolution_hz"),
            rows,
        )
    }


RUNNERS = {
    "SuccessVsM": run_success_vs_m,
    "MminVsK": run_mmin_vs_k,
    "NmseVsM": run_nmse_vs_m,
    "ConfusionTLS": run_confusion_tls,
    "DftDemo": run_dft_demo,
    "JitterBandwidth": run_jitter_bandwidth,
    "ResolutionVsIntegration": run_resolution_vs_integration,
}
