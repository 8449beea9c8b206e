"""The iterative samplers: gated covariance adaptation, a plain adaptive
baseline, and a clipped-weights-for-both-moments baseline.

All three run the identical loop (sample N per mixand, weigh locally,
adapt each mixand from its own batch) and differ only in the transform
passed to adapt_component, so comparisons isolate the adaptation rule.
Per-iteration-per-component RNG streams come from SeedStreams, making a
run a pure function of (spec, target, config, master seed, replicate).
"""

from __future__ import annotations

from dataclasses import dataclass, field
from typing import Optional

import numpy as np

from .adaptation import AdaptationConfig, ProposalComponent, adapt_component
from .diagnostics import MetricRecord, kl_gaussians
from .distributions import TargetModel, mvn_sample
from .errors import InvalidConstraintError
from .rng import SeedStreams
from .spd import SpdMatrix, eigen_spectrum
from .weighting import compute_log_weights, make_batch

KL_DIRECTIONS = ("target_proposal", "proposal_target")


@dataclass
class SamplerOutput:
    """Everything a run produces.

    ``samples`` and ``log_weights`` are the flattened pairs from all
    iterations and components, in (iteration, component, draw) order;
    their length is always I*D*N. ``records`` holds one MetricRecord per
    (iteration, component) in the same order.
    """

    samples: np.ndarray
    log_weights: np.ndarray
    records: list = field(default_factory=list)
    initial_components: list = field(default_factory=list)
    final_components: list = field(default_factory=list)

    def iteration_stats(self) -> list:
        """Per-iteration (mean ESS, per-component ESS, degeneracy flags)."""
        by_iter: dict[int, list[MetricRecord]] = {}
        for rec in self.records:
            by_iter.setdefault(rec.iteration, []).append(rec)
        out = []
        for i in sorted(by_iter):
            recs = sorted(by_iter[i], key=lambda r: r.component)
            esses = [r.ess for r in recs]
            out.append(
                (float(np.mean(esses)), esses, [r.degenerate for r in recs])
            )
        return out


def init_population(spec, rng: np.random.Generator) -> list[ProposalComponent]:
    """Initial proposal population.

    ``spec.init`` selects the scheme: "fixed" places every mean at
    spec.init_mean (a scalar, broadcast); "uniform" draws each mean from
    the hypercube [init_low, init_high]^dim. Covariances start isotropic
    at sigma^2 I.
    """
    d = spec.dimension
    sigma2 = float(spec.sigma) ** 2
    cov = SpdMatrix(sigma2 * np.eye(d), chol=float(spec.sigma) * np.eye(d))
    if spec.init == "fixed":
        means = np.tile(np.full(d, float(spec.init_mean)), (spec.D, 1))
    elif spec.init == "uniform":
        low, high = float(spec.init_low), float(spec.init_high)
        if low >= high:
            raise InvalidConstraintError(
                f"init range must satisfy low < high, got [{low}, {high}]"
            )
        means = rng.uniform(low, high, size=(spec.D, d))
    else:
        raise InvalidConstraintError(f"unknown init scheme {spec.init!r}")
    return [
        ProposalComponent(mean=means[k], cov=cov, index=k + 1)
        for k in range(spec.D)
    ]


def _component_kl(
    target: TargetModel, comp: ProposalComponent, direction: str
) -> Optional[float]:
    """Closed-form KL for Gaussian targets with ground truth; else None."""
    truth = target.truth
    if truth is None or truth.cov is None or truth.mixture is not None:
        return None
    if direction == "target_proposal":
        return kl_gaussians(truth.mean, truth.cov, comp.mean, comp.cov)
    return kl_gaussians(comp.mean, comp.cov, truth.mean, truth.cov)


def _run_loop(
    spec,
    target: TargetModel,
    cfg: AdaptationConfig,
    streams: SeedStreams,
    kl_direction: str = "target_proposal",
) -> SamplerOutput:
    if kl_direction not in KL_DIRECTIONS:
        raise InvalidConstraintError(
            f"kl_direction must be one of {KL_DIRECTIONS}"
        )
    if target.dim != spec.dimension:
        raise InvalidConstraintError(
            f"target dimension {target.dim} != spec dimension {spec.dimension}"
        )
    components = init_population(spec, streams.init())
    initial = list(components)
    n_pairs = spec.I * spec.D * spec.N
    samples = np.empty((n_pairs, spec.dimension))
    log_weights = np.empty(n_pairs)
    records: list[MetricRecord] = []
    pos = 0

    for i in range(1, spec.I + 1):
        updated = []
        for comp in components:
            rng = streams.sampling(i, comp.index)
            x = mvn_sample(rng, comp.mean, comp.cov, spec.N)
            lw = compute_log_weights(x, target, comp)
            batch = make_batch(x, lw, comp.index, i)
            nxt, report = adapt_component(batch, comp, cfg)

            spectrum = eigen_spectrum(nxt.cov)
            records.append(
                MetricRecord(
                    iteration=i,
                    component=comp.index,
                    ess=report.ess,
                    branch=report.branch,
                    min_eig=float(spectrum[-1]),
                    max_eig=float(spectrum[0]),
                    gamma=report.gamma,
                    transformed_ess=report.transformed_ess,
                    kl_to_target=_component_kl(target, nxt, kl_direction),
                    jitter=report.jitter,
                    jitter0=report.jitter0,
                    repair_failed=report.repair_failed,
                    degenerate=report.degenerate or batch.degenerate,
                    gamma_capped=report.gamma_capped,
                )
            )
            samples[pos : pos + spec.N] = x
            log_weights[pos : pos + spec.N] = lw
            pos += spec.N
            updated.append(nxt)
        components = updated

    return SamplerOutput(
        samples=samples,
        log_weights=log_weights,
        records=records,
        initial_components=initial,
        final_components=components,
    )


def _check_threshold(spec, n_t: int) -> None:
    if not spec.dimension < n_t < spec.N:
        raise InvalidConstraintError(
            f"n_t must satisfy dimension < n_t < N "
            f"({spec.dimension} < {n_t} < {spec.N} fails)"
        )


def cais_run(
    spec,
    target: TargetModel,
    cfg: AdaptationConfig,
    streams: SeedStreams,
    kl_direction: str = "target_proposal",
) -> SamplerOutput:
    """Gated adaptation: covariance from transformed weights only when the
    batch ESS falls below cfg.n_t; the mean always uses raw weights."""
    if cfg.transform not in ("clip", "temper"):
        raise InvalidConstraintError(
            "gated runs need transform 'clip' or 'temper'"
        )
    _check_threshold(spec, cfg.n_t)
    return _run_loop(spec, target, cfg, streams, kl_direction)


def basic_ais_run(
    spec,
    target: TargetModel,
    streams: SeedStreams,
    kl_direction: str = "target_proposal",
    base_cfg: Optional[AdaptationConfig] = None,
) -> SamplerOutput:
    """Ungated baseline: both moments from untransformed weights."""
    cfg = base_cfg or AdaptationConfig(n_t=max(2, spec.N // 2), transform="direct")
    if cfg.transform != "direct":
        cfg = AdaptationConfig(
            n_t=cfg.n_t,
            transform="direct",
            gamma_eps=cfg.gamma_eps,
            mean_center=cfg.mean_center,
            jitter0=cfg.jitter0,
            fallback=cfg.fallback,
        )
    return _run_loop(spec, target, cfg, streams, kl_direction)


def npmc_baseline_run(
    spec,
    target: TargetModel,
    n_t: int,
    streams: SeedStreams,
    kl_direction: str = "target_proposal",
    base_cfg: Optional[AdaptationConfig] = None,
) -> SamplerOutput:
    """Clipped weights drive both mean and covariance every iteration."""
    _check_threshold(spec, n_t)
    base = base_cfg or AdaptationConfig(n_t=n_t, transform="npmc_clip")
    cfg = AdaptationConfig(
        n_t=n_t,
        transform="npmc_clip",
        gamma_eps=base.gamma_eps,
        mean_center=base.mean_center,
        jitter0=base.jitter0,
        fallback=base.fallback,
    )
    return _run_loop(spec, target, cfg, streams, kl_direction)
