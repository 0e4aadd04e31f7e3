"""Seeded Monte Carlo experiments and CSV result persistence.

Trial ``t`` uses seed ``base_seed + t`` and the same channel realization for
every method (paired seeds). Rows with ``trial = -1`` hold the mean over
trials of the metric for that method and sweep value.
"""

from __future__ import annotations

import csv
import logging
from dataclasses import dataclass
from pathlib import Path

import numpy as np

from . import radarproc
from .config import ExperimentConfig
from .metrics import mean_spectral_efficiency, sinr_terms
from .pipeline import (LinkDesign, design_link, link_budget, ms_hybrid_combiners,
                       scenario_config)
from .propagation import build_channels, dbm_to_watt, db_to_lin, generate_scenario
from .rxcombiner import bcd_combiner, nsp_combiner, si_gram, si_objective

log = logging.getLogger(__name__)

CSV_HEADER = ("experiment", "method", "sweep", "trial", "metric", "value", "seed")


def _sig9(x):
    return float(f"{float(x):.9g}")


@dataclass(frozen=True)
class ResultRecord:
    experiment: str
    method: str
    sweep: float
    trial: int
    metric: str
    value: float
    seed: int

    @classmethod
    def make(cls, experiment, method, sweep, trial, metric, value, seed):
        """Values are rounded to 9 significant digits so CSV round trips are exact."""
        return cls(experiment, method, _sig9(sweep), int(trial), metric, _sig9(value), int(seed))

    def key(self):
        return (self.experiment, self.method, self.sweep, self.trial, self.metric)


def emit_csv(records, path):
    path = Path(path)
    try:
        with open(path, "w", newline="", encoding="utf-8") as fh:
            w = csv.writer(fh, lineterminator="\n")
            w.writerow(CSV_HEADER)
            for r in records:
                w.writerow([r.experiment, r.method, f"{r.sweep:.9g}", r.trial, r.metric,
                            f"{r.value:.9g}", r.seed])
    except OSError as exc:
        raise OSError(f"cannot write results to {path}: {exc}") from exc
    return path


def read_csv(path):
    with open(path, newline="", encoding="utf-8") as fh:
        rows = list(csv.reader(fh))
    if not rows or tuple(rows[0]) != CSV_HEADER:
        raise ValueError(f"{path}: missing or wrong header")
    return [ResultRecord(e, m, float(s), int(t), k, float(v), int(sd))
            for e, m, s, t, k, v, sd in rows[1:]]


def _label(method, tau=None, combiner=None):
    out = method if method == "optimal_svd" or tau is None else f"{method}@{tau:g}"
    return out if combiner is None else f"{out}+{combiner}"


def _with_means(records, experiment, base_seed):
    groups = {}
    for r in records:
        groups.setdefault((r.method, r.sweep, r.metric), []).append(r.value)
    means = [ResultRecord.make(experiment, m, s, -1, k, np.mean(v), base_seed)
             for (m, s, k), v in groups.items()]
    return means + records


def _sorted(records, sweeps):
    """Order by (sweep, trial); ties keep generation order (method, metric)."""
    pos = {_sig9(s): i for i, s in enumerate(sweeps)}
    return sorted(records, key=lambda r: (pos[r.sweep], r.trial))


def _channels(cfg, seed, targets=None, ms_los_angle_deg=None):
    s = cfg.system
    scen = generate_scenario(scenario_config(cfg, targets, ms_los_angle_deg), seed)
    return scen, build_channels(scen, s.M, s.N, s.subcarrier_spacing_hz, s.symbol_duration_s)


def _combiner(kind, channels, link: LinkDesign, cfg, seed):
    """BS combiner for already-designed precoders (one alternation)."""
    d, s = cfg.design, cfg.system
    F = link.precoders
    a = link.steering
    if kind == "bcd":
        return bcd_combiner(channels.si, F, a, s.n_rf, d.tau_r * s.n_bs, d.eps1, d.eps2,
                            d.block_fraction, d.bcd_iters, seed,
                            inner_rtol=d.bcd_inner_rtol).combiner
    if kind == "nsp":
        return nsp_combiner(channels.si, F, a, s.n_rf, d.nsp_energy_threshold)
    return np.tile(a[:, None], (1, s.n_rf))


def _designs_with_combiners(cfg, channels, method, angle, tau, seed):
    """Yield ``(combiner_kind, LinkDesign)`` sharing the precoder design when possible."""
    s, d = cfg.system, cfg.design
    if d.alternations == 1:
        base = design_link(channels, angle, method, "steering", d, s.n_rf, s.n_streams, tau, seed)
        for kind in cfg.combiners:
            W = base.combiner if kind == "steering" else _combiner(kind, channels, base, cfg, seed)
            yield kind, LinkDesign(base.angle, base.steering, base.digital, base.hybrid, W, kind)
    else:
        for kind in cfg.combiners:
            yield kind, design_link(channels, angle, method, kind, d, s.n_rf, s.n_streams, tau, seed)


# ---- experiments ---------------------------------------------------------

def run_se_vs_power(cfg: ExperimentConfig):
    s, d = cfg.system, cfg.design
    combiner = "bcd" if d.alternations > 1 else "steering"
    records = []
    for t in range(cfg.trials):
        seed = cfg.base_seed + t
        _, ch = _channels(cfg, seed)
        angle = np.deg2rad(cfg.scenario.targets[0].angle_deg)
        for method in cfg.methods:
            taus = [None] if method == "optimal_svd" else list(cfg.sweep.se_tau_t)
            for tau in taus:
                link = design_link(ch, angle, method, combiner, d, s.n_rf, s.n_streams, tau, seed)
                F = link.precoders
                W_ms = ms_hybrid_combiners(ch.downlink, F, s.n_rf, d)
                label = _label(method, tau)
                for p in cfg.sweep.power_dbm:
                    se = mean_spectral_efficiency(ch.downlink, F, W_ms, link_budget(cfg, p, 0.0))
                    records.append(ResultRecord.make("se_vs_power", label, p, t,
                                                     "spectral_efficiency", se, seed))
        log.info("se_vs_power trial %d/%d done", t + 1, cfg.trials)
    records = _with_means(records, "se_vs_power", cfg.base_seed)
    return _sorted(records, cfg.sweep.power_dbm)


def run_sinr_vs_si(cfg: ExperimentConfig):
    s = cfg.system
    tau = cfg.sweep.sinr_tau_t
    noise = dbm_to_watt(s.noise_dbm)
    records = []
    for t in range(cfg.trials):
        seed = cfg.base_seed + t
        _, ch = _channels(cfg, seed)
        angle = np.deg2rad(cfg.scenario.targets[0].angle_deg)
        for method in cfg.methods:
            tau_m = None if method == "optimal_svd" else tau
            for kind, link in _designs_with_combiners(cfg, ch, method, angle, tau_m, seed):
                W = link.combiner
                terms = sinr_terms(W, ch, link.precoders)
                gain = np.min(np.abs(W.conj().T @ link.steering)) / s.n_bs
                label = _label(method, tau_m, kind)
                for snr_db in cfg.sweep.si_to_noise_db:
                    budget = link_budget(cfg, cfg.sweep.sinr_tx_power_dbm, snr_db)
                    agg, _ = terms.sinr(budget)
                    p = budget.tx_power / budget.n_streams
                    resid = p * budget.si_power * terms.si.sum(0) / (noise * s.M * terms.wnorm2)
                    with np.errstate(divide="ignore"):
                        vals = {
                            "radar_sinr_db": 10 * np.log10(np.mean(agg)),
                            "residual_si_to_noise_db": max(10 * np.log10(np.mean(resid)), -300.0),
                            "rx_gain_min": gain,
                        }
                    for k, v in vals.items():
                        records.append(ResultRecord.make("sinr_vs_si", label, snr_db, t, k, v, seed))
        log.info("sinr_vs_si trial %d/%d done", t + 1, cfg.trials)
    records = _with_means(records, "sinr_vs_si", cfg.base_seed)
    return _sorted(records, cfg.sweep.si_to_noise_db)


# ---- radar ---------------------------------------------------------------

@dataclass
class TargetEstimate:
    index: int
    angle_deg: float
    range_true: float
    velocity_true: float
    rd: radarproc.RangeDopplerMap

    @property
    def range_error_bins(self):
        return abs(self.rd.range_m - self.range_true) / self.rd.range_bin

    @property
    def velocity_error_mps(self):
        """Physical velocity error (Doppler read as ``2 v / lambda``)."""
        return abs(self.rd.velocity_mps() - self.velocity_true)

    @property
    def doppler_error_bins(self):
        """Error in Doppler bins, i.e. on the axis indexed by ``nb``."""
        return abs(self.rd.velocity_mps("printed") - 2 * self.velocity_true) / self.rd.velocity_bin


@dataclass
class RadarResult:
    seed: int
    estimates: list
    angle_range: radarproc.AngleRangeMap | None


def angle_grid(cfg: ExperimentConfig):
    start, stop, step = cfg.radar.angle_grid_deg
    n = int(np.floor((stop - start) / step + 1e-9)) + 1
    grid = start + step * np.arange(n)
    extra = [t.angle_deg for t in cfg.radar.targets]
    return np.unique(np.round(np.concatenate([grid, extra]), 9))


def run_radar(cfg: ExperimentConfig, seed, with_angle_map=True) -> RadarResult:
    """Per-target range/velocity maps plus the per-angle range image.

    Every target is processed in its own frame with beams designed for its
    angle; all targets echo in every frame.
    """
    s, r = cfg.system, cfg.radar
    d = cfg.design
    scen, ch = _channels(cfg, seed, r.targets, r.ms_los_angle_deg)
    noise = dbm_to_watt(s.noise_dbm)
    p_t = dbm_to_watt(r.tx_power_dbm)
    rho = noise * db_to_lin(r.si_to_noise_db)
    Mbar, Nbar = r.Mbar_factor * s.M, r.Nbar_factor * s.N
    lam = scen.wavelength
    symbols = radarproc.pilot_symbols(s.M, s.N, s.n_streams, p_t, [seed, 7])
    tau = None if r.method == "optimal_svd" else r.tau_t
    cache = {}

    def matched(angle_deg):
        key = round(float(angle_deg), 9)
        if key not in cache:
            link = design_link(ch, np.deg2rad(angle_deg), r.method, r.combiner, d, s.n_rf,
                               s.n_streams, tau, seed)
            F = link.precoders
            y = radarproc.rx_frame(ch, link.combiner, F, symbols, rho,
                                   noise if r.noise else 0.0, [seed, 11, int(round((key + 360) * 1000))])
            cache[key] = radarproc.build_z(y, link.combiner, F, symbols, link.steering,
                                           conjugate=r.conjugate_reference)
        return cache[key]

    estimates = []
    for k, tg in enumerate(r.targets):
        rd = radarproc.range_doppler(matched(tg.angle_deg), Mbar, Nbar, s.subcarrier_spacing_hz,
                                     s.symbol_duration_s, lam)
        estimates.append(TargetEstimate(k, tg.angle_deg, tg.range_m, tg.velocity_mps, rd))
        log.info("target %d: range %.3f m (true %.3f), velocity %.3f m/s (true %.3f)",
                 k, rd.range_m, tg.range_m, rd.velocity_mps(), tg.velocity_mps)
    ar = None
    if with_angle_map:
        grid = angle_grid(cfg)
        ar = radarproc.angle_range_map(lambda th: matched(np.rad2deg(th)), np.deg2rad(grid),
                                       Mbar, s.subcarrier_spacing_hz)
    return RadarResult(seed, estimates, ar)


def angle_map_checks(ar: radarproc.AngleRangeMap, target, range_window=1):
    """Return (angle error of the column maximum, is-local-maximum flag) for one target."""
    angles = np.rad2deg(ar.angles)
    rbin = ar.ranges[1] - ar.ranges[0]
    j0 = int(round(target.range_m / rbin))
    lo, hi = max(0, j0 - range_window), min(ar.magnitudes.shape[1], j0 + range_window + 1)
    col = ar.magnitudes[:, lo:hi].max(axis=1)
    i_best = int(np.argmax(col))
    i_t = int(np.argmin(np.abs(angles - target.angle_deg)))
    nb = ar.magnitudes[max(0, i_t - 1):i_t + 2, max(0, lo - range_window):hi + range_window]
    local = bool(col[i_t] >= nb.max() * (1 - 1e-12))
    return abs(angles[i_best] - target.angle_deg), local


def radar_records(cfg: ExperimentConfig, res: RadarResult, trial):
    r = cfg.radar
    label = _label(r.method, None if r.method == "optimal_svd" else r.tau_t, r.combiner)
    records = []
    for est in res.estimates:
        vals = {
            "range_true_m": est.range_true,
            "range_est_m": est.rd.range_m,
            "range_error_bins": est.range_error_bins,
            "velocity_true_mps": est.velocity_true,
            "velocity_est_mps": est.rd.velocity_mps(),
            "velocity_printed_mps": est.rd.velocity_mps("printed"),
            "velocity_error_mps": est.velocity_error_mps,
            "doppler_error_bins": est.doppler_error_bins,
        }
        if res.angle_range is not None:
            ang_err, local = angle_map_checks(res.angle_range, r.targets[est.index])
            vals["angle_map_angle_error_deg"] = ang_err
            vals["angle_map_local_max"] = float(local)
        records += [ResultRecord.make("radar_maps", label, est.angle_deg, trial, k, v, res.seed)
                    for k, v in vals.items()]
    return records


def run_radar_maps(cfg: ExperimentConfig):
    records = []
    for t in range(cfg.radar.trials):
        records += radar_records(cfg, run_radar(cfg, cfg.base_seed + t), t)
    return _sorted(records, [tg.angle_deg for tg in cfg.radar.targets])


RUNNERS = {
    "se_vs_power": run_se_vs_power,
    "sinr_vs_si": run_sinr_vs_si,
    "radar_maps": run_radar_maps,
}


def run_experiment(cfg: ExperimentConfig):
    """Records of every experiment listed in ``cfg.experiment``, in that order."""
    cfg.validate()
    out = []
    for name in cfg.experiment:
        out.extend(RUNNERS[name](cfg))
    return out


# ---- one-shot design -----------------------------------------------------

def run_design(cfg: ExperimentConfig, angle_deg):
    """Metrics of every method/combiner pair for one realization at one angle."""
    s = cfg.system
    seed = cfg.base_seed
    _, ch = _channels(cfg, seed)
    angle = np.deg2rad(angle_deg)
    budget_se = link_budget(cfg, cfg.sweep.sinr_tx_power_dbm, 0.0)
    budget_sinr = link_budget(cfg, cfg.sweep.sinr_tx_power_dbm, cfg.radar.si_to_noise_db)
    records = []
    for method in cfg.methods:
        tau = None if method == "optimal_svd" else cfg.design.tau_t
        for kind, link in _designs_with_combiners(cfg, ch, method, angle, tau, seed):
            F = link.precoders
            W = link.combiner
            P = link.digital.matrices
            Q_ref = np.sum(np.abs(W.conj().T @ ch.si) ** 2) * s.n_streams * s.M
            vals = {
                "tx_gain_min": np.min(np.abs(np.einsum("mis,i->ms", F.conj(), link.steering))),
                "rx_gain_min": np.min(np.abs(W.conj().T @ link.steering)),
                "kappa_mean": np.mean(link.digital.kappa),
                "si_digital_rel": si_objective(W, si_gram(ch.si, P)) / Q_ref,
                "si_hybrid_rel": si_objective(W, si_gram(ch.si, F)) / Q_ref,
                "spectral_efficiency": mean_spectral_efficiency(
                    ch.downlink, F, ms_hybrid_combiners(ch.downlink, F, s.n_rf, cfg.design), budget_se),
                "radar_sinr_db": 10 * np.log10(np.mean(sinr_terms(W, ch, F).sinr(budget_sinr)[0])),
            }
            for k, v in vals.items():
                records.append(ResultRecord.make("design", _label(method, tau, kind), angle_deg, 0, k, v, seed))
    return records
