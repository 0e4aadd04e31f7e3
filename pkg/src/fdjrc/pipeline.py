"""End-to-end beamformer design for one scenario realization.

Order of operations for a target direction theta:

1. BS combiner starts as the steering vector on every RF chain.
2. Fully digital precoders against the SI seen through that combiner.
3. PE-AltMin hybrid decomposition of the precoders.
4. BS combiner redesign (BCD, NSP or plain steering) for the hybrid precoders.

Steps 2-4 repeat ``alternations`` times.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np

from .config import DesignConfig, ExperimentConfig
from .hybridize import HybridFactorization, pe_altmin
from .metrics import LinkBudget, tx_gain_threshold
from .propagation import ScenarioConfig, TargetConfig, dbm_to_watt, db_to_lin, ula_response
from .rxcombiner import BcdState, bcd_combiner, nsp_combiner
from .txdesign import PrecoderSet, design_precoders, ms_combiner


@dataclass
class LinkDesign:
    angle: float
    steering: np.ndarray
    digital: PrecoderSet
    hybrid: HybridFactorization
    combiner: np.ndarray            # BS combiner, N_BS x N_RF
    combiner_kind: str
    bcd: BcdState | None = None

    @property
    def precoders(self):
        """Effective hybrid precoders, (M, N_BS, Ns)."""
        return self.hybrid.effective()


def scenario_config(cfg: ExperimentConfig, targets=None, ms_los_angle_deg=None) -> ScenarioConfig:
    sc = cfg.scenario
    targets = sc.targets if targets is None else targets
    return ScenarioConfig(
        carrier_hz=cfg.system.carrier_hz,
        n_bs=cfg.system.n_bs,
        n_ms=cfg.system.n_ms,
        ms_distance_m=sc.ms_distance_m,
        n_paths=sc.n_paths,
        los_angle_range_deg=sc.los_angle_range_deg,
        nlos_angle_range_deg=sc.nlos_angle_range_deg,
        nlos_gain_offset_db=sc.nlos_gain_offset_db,
        nlos_excess_delay_max_s=sc.nlos_excess_delay_max_s,
        ms_los_angle_deg=sc.ms_los_angle_deg if ms_los_angle_deg is None else ms_los_angle_deg,
        array_separation_wl=sc.array_separation_wl,
        targets=tuple(TargetConfig(t.range_m, t.angle_deg, t.velocity_mps, t.rcs_m2)
                      for t in targets),
    )


def link_budget(cfg: ExperimentConfig, tx_power_dbm, si_to_noise_db) -> LinkBudget:
    noise = dbm_to_watt(cfg.system.noise_dbm)
    return LinkBudget(dbm_to_watt(tx_power_dbm), noise, noise,
                      noise * db_to_lin(si_to_noise_db), cfg.system.n_streams)


def design_link(channels, angle, method, combiner, design: DesignConfig, n_rf, n_streams,
                tau_t=None, seed=0) -> LinkDesign:
    """Design precoders and BS combiner toward ``angle`` (rad) for one realization."""
    n_bs = channels.si.shape[0]
    a = ula_response(channels.bs, angle)
    tau_frac = design.tau_t if tau_t is None else tau_t
    tau_t_abs = tx_gain_threshold(tau_frac, n_bs, design.gain_semantics)
    tau_r_abs = design.tau_r * n_bs
    W = np.tile(a[:, None], (1, n_rf))
    bcd = None
    for _ in range(design.alternations):
        digital = design_precoders(channels.downlink, channels.si, W, a, n_streams, tau_t_abs,
                                   method, design.ridge)
        hybrid = pe_altmin(digital.matrices, n_rf, max_iter=design.altmin_iters,
                           escapes=design.altmin_escapes)
        F = hybrid.effective()
        if combiner == "bcd":
            bcd = bcd_combiner(channels.si, F, a, n_rf, tau_r_abs, design.eps1, design.eps2,
                               design.block_fraction, design.bcd_iters, seed,
                               inner_rtol=design.bcd_inner_rtol)
            W = bcd.combiner
        elif combiner == "nsp":
            W = nsp_combiner(channels.si, F, a, n_rf, design.nsp_energy_threshold)
        elif combiner == "steering":
            W = np.tile(a[:, None], (1, n_rf))
        else:
            raise ValueError(f"unknown combiner {combiner!r}")
    return LinkDesign(float(angle), a, digital, hybrid, W, combiner, bcd)


def ms_hybrid_combiners(H, F, n_rf, design: DesignConfig):
    """Hybrid MS combiners approximating the left singular vectors of ``H_m F_m``."""
    n_streams = F.shape[-1]
    U = np.stack([ms_combiner(Hm @ Fm, n_streams) for Hm, Fm in zip(H, F)])
    fact = pe_altmin(U, n_rf, max_iter=design.altmin_iters, escapes=design.altmin_escapes)
    return fact.effective()
