"""Command-line pipeline: estimate -> observables -> null models -> tests
-> JSON report.

Subcommands: analyze, minimax-test, cycle-test, motion-fit, simulate.
Progress goes to stderr; stdout carries one machine-readable JSON summary
line. Exit codes: 0 success, 1 data/config error, 2 internal error.
"""

from __future__ import annotations

import json
import sys

import click
import numpy as np

from . import __version__
from .core import (
    MarkovEstimate,
    StateSpace,
    TreatmentDataset,
    estimate_markov,
    square_2x2,
    stationarity_diagnostic,
    triangle_3,
)
from .dataio import (
    AnalysisConfig,
    baseline_summary_dict,
    load_csv,
    load_space,
    observable_report_dict,
    test_result_dict,
    write_csv,
    write_report,
)
from .errors import ChainfluxError, ConfigError, ZeroVarianceError
from .nullmodels import (
    Seed,
    VnmParams,
    dos_baseline,
    simulate_chain,
    simulate_vnm,
    vnm_null_distribution,
)
from .observables import ZeroFluxPolicy, epr, full_report
from .stats import ols_fit, one_sample_t, paired_t, percentile_of, welch_t

__all__ = [
    "main",
    "entrypoint",
    "run_analyze",
    "run_minimax",
    "run_cycle_test",
    "run_motion_fit",
    "cycle_transition",
]

_MAX_SEED = (1 << 64) - 1


def _progress(message: str) -> None:
    click.echo(message, err=True)


def _parse_policy(text: str) -> ZeroFluxPolicy:
    try:
        return ZeroFluxPolicy.parse(text)
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc


def _make_config(
    *,
    input_path: str | None,
    output_path: str | None,
    seed: int,
    reps: int,
    policy_text: str,
    burn_in: int,
    alpha: float,
    space_text: str,
    workers: int,
    reproducible: bool,
) -> AnalysisConfig:
    if not (0 <= seed <= _MAX_SEED):
        raise ConfigError("--seed must be a 64-bit unsigned integer")
    return AnalysisConfig(
        space=load_space(space_text),
        policy=_parse_policy(policy_text),
        seed=Seed(seed),
        input=input_path,
        output=output_path,
        burn_in=burn_in,
        mc_reps=reps,
        alpha=alpha,
        workers=workers,
        reproducible=reproducible,
    )


def _load_treatments(config: AnalysisConfig) -> list[TreatmentDataset]:
    datasets = load_csv(config.input, config.space)
    _progress(f"loaded {len(datasets)} treatment(s) from {config.input}")
    return datasets


def _mc_exceedance_p(samples: np.ndarray, value: float) -> float:
    """Add-one Monte-Carlo p-value for 'value is above the null'."""
    return (1 + int(np.count_nonzero(samples >= value))) / (samples.size + 1)


def _safe_test(fn, *args, **kwargs) -> dict:
    try:
        return test_result_dict(fn(*args, **kwargs))
    except ZeroVarianceError as exc:
        return {"error": "zero_variance", "detail": str(exc)}


# ---------------------------------------------------------------------------
# pipelines
# ---------------------------------------------------------------------------


def run_analyze(config: AnalysisConfig) -> dict:
    """Per-treatment chain estimate, observables, and stationarity check."""
    entries = []
    for data in _load_treatments(config):
        est = estimate_markov(data, config.burn_in)
        report = full_report(est, config.policy)
        diag = stationarity_diagnostic(data, config.burn_in)
        _progress(
            f"treatment {data.treatment_id}: n={est.n_observations} "
            f"entropy={report.entropy:.4f} epr={report.epr:.4f}"
        )
        entries.append(
            {
                "treatment_id": data.treatment_id,
                "n_observations": est.n_observations,
                "n_sessions": len(data.sessions),
                "dos": est.dos.tolist(),
                "transition": est.transition.tolist(),
                "counts": est.counts.tolist(),
                "occupancy": est.occupancy.tolist(),
                "has_outflow": est.has_outflow.tolist(),
                "observables": observable_report_dict(report),
                "stationarity": {
                    "first_half_dos": diag.first_half_dos.tolist(),
                    "second_half_dos": diag.second_half_dos.tolist(),
                    "linf_distance": diag.linf_distance,
                },
            }
        )
    write_report(
        entries,
        {},
        {},
        config.output,
        config=config.echo(),
        reproducible=config.reproducible,
    )
    return {"command": "analyze", "output": config.output, "treatments": len(entries)}


def _vnm_params_from(est: MarkovEstimate, data: TreatmentDataset, burn_in: int) -> VnmParams:
    """Match the data's sample size and mean strategy frequencies."""
    p_hat = float(est.dos[2] + est.dos[3])  # P(row_action = 1)
    q_hat = float(est.dos[1] + est.dos[3])  # P(col_action = 1)
    lengths = [len(t) - burn_in for t in data.sessions if len(t) > burn_in]
    rounds = max(2, int(round(sum(lengths) / len(lengths))))
    return VnmParams(
        p=p_hat, q=q_hat, sessions=len(lengths), rounds_per_session=rounds
    )


def run_minimax(config: AnalysisConfig) -> dict:
    """Test the independent-randomization prediction: per-treatment nulls on
    entropy and EPR, plus across-treatment paired comparisons."""
    if config.space.size != 4 or not np.array_equal(
        config.space.coordinates, square_2x2().coordinates
    ):
        raise ConfigError(
            "minimax-test needs the 4-state square space "
            "(index = 2*row_action + col_action)"
        )
    entries = []
    emp_entropy, emp_epr = [], []
    null_entropy_mean, null_epr_mean = [], []
    for idx, data in enumerate(_load_treatments(config)):
        est = estimate_markov(data, config.burn_in)
        report = full_report(est, config.policy)
        params = _vnm_params_from(est, data, config.burn_in)
        trt_seed = config.seed.split(idx)
        ent_null, epr_null = vnm_null_distribution(
            params,
            config.mc_reps,
            config.policy,
            trt_seed,
            space=config.space,
            workers=config.workers,
        )
        _progress(
            f"treatment {data.treatment_id}: epr={report.epr:.4f} "
            f"null mean={epr_null.mean:.4f} (reps={config.mc_reps})"
        )
        entries.append(
            {
                "treatment_id": data.treatment_id,
                "n_observations": est.n_observations,
                "p_hat": params.p,
                "q_hat": params.q,
                "null_sessions": params.sessions,
                "null_rounds_per_session": params.rounds_per_session,
                "observables": observable_report_dict(report),
                "baselines": [
                    baseline_summary_dict(ent_null),
                    baseline_summary_dict(epr_null),
                ],
                "tests": {
                    "epr_vs_null_less": _safe_test(
                        one_sample_t, epr_null.samples, report.epr, "less"
                    ),
                    "entropy_vs_null_two_sided": _safe_test(
                        one_sample_t, ent_null.samples, report.entropy, "two_sided"
                    ),
                },
                "epr_percentile": percentile_of(epr_null.samples, report.epr),
                "entropy_percentile": percentile_of(ent_null.samples, report.entropy),
                "epr_mc_p": _mc_exceedance_p(epr_null.samples, report.epr),
            }
        )
        emp_entropy.append(report.entropy)
        emp_epr.append(report.epr)
        null_entropy_mean.append(ent_null.mean)
        null_epr_mean.append(epr_null.mean)

    tests = {}
    if len(entries) >= 2:
        tests["epr_paired_greater"] = _safe_test(
            paired_t, emp_epr, null_epr_mean, "greater"
        )
        tests["epr_welch_greater"] = _safe_test(
            welch_t, emp_epr, null_epr_mean, "greater"
        )
        tests["entropy_paired_two_sided"] = _safe_test(
            paired_t, emp_entropy, null_entropy_mean, "two_sided"
        )
    write_report(
        entries,
        tests,
        {},
        config.output,
        config=config.echo(),
        reproducible=config.reproducible,
    )
    summary = {
        "command": "minimax-test",
        "output": config.output,
        "treatments": len(entries),
    }
    if "epr_paired_greater" in tests and "p_value" in tests["epr_paired_greater"]:
        summary["epr_paired_p"] = tests["epr_paired_greater"]["p_value"]
    return summary


def run_cycle_test(config: AnalysisConfig) -> dict:
    """Detect persistent cycling: empirical EPR against the i.i.d.-DOS
    finite-sample baseline, per treatment."""
    if config.alpha < 1.0 / (config.mc_reps + 1):
        _progress(
            f"warning: alpha={config.alpha} is below the smallest achievable "
            f"Monte-Carlo p-value 1/(reps+1)={1.0 / (config.mc_reps + 1):.2e}; "
            f"detection can never fire at these reps"
        )
    entries = []
    detected = []
    for idx, data in enumerate(_load_treatments(config)):
        est = estimate_markov(data, config.burn_in)
        epr_value, skipped = epr(est, config.policy)
        baseline = dos_baseline(
            est.dos,
            est.n_observations,
            config.mc_reps,
            config.policy,
            config.seed.split(idx),
            workers=config.workers,
        )
        mc_p = _mc_exceedance_p(baseline.samples, epr_value)
        is_detected = mc_p < config.alpha
        _progress(
            f"treatment {data.treatment_id}: epr={epr_value:.4f} "
            f"baseline mean={baseline.mean:.4f} mc_p={mc_p:.2e} "
            f"detected={is_detected}"
        )
        entries.append(
            {
                "treatment_id": data.treatment_id,
                "n_observations": est.n_observations,
                "epr": epr_value,
                "skipped_pairs": skipped,
                "baseline": baseline_summary_dict(baseline),
                "test": _safe_test(one_sample_t, baseline.samples, epr_value, "less"),
                "percentile": percentile_of(baseline.samples, epr_value),
                "mc_exceedance_p": mc_p,
                "alpha": config.alpha,
                "cycle_detected": is_detected,
            }
        )
        if is_detected:
            detected.append(data.treatment_id)
    write_report(
        entries,
        {},
        {},
        config.output,
        config=config.echo(),
        reproducible=config.reproducible,
    )
    return {
        "command": "cycle-test",
        "output": config.output,
        "treatments": len(entries),
        "detected": detected,
    }


def run_motion_fit(config: AnalysisConfig) -> dict:
    """Regress motion on EPR across all input treatments."""
    entries = []
    eprs, motions = [], []
    for data in _load_treatments(config):
        est = estimate_markov(data, config.burn_in)
        report = full_report(est, config.policy)
        entries.append(
            {
                "treatment_id": data.treatment_id,
                "n_observations": est.n_observations,
                "epr": report.epr,
                "motion": report.motion,
            }
        )
        eprs.append(report.epr)
        motions.append(report.motion)
    fit = ols_fit(eprs, motions)
    _progress(
        f"motion = ({fit.slope:.4f} ± {fit.slope_stderr:.4f}) * epr "
        f"+ {fit.intercept:.4f}, R^2 = {fit.r_squared:.4f}"
    )
    write_report(
        entries,
        {},
        {"motion_on_epr": fit},
        config.output,
        config=config.echo(),
        reproducible=config.reproducible,
    )
    return {
        "command": "motion-fit",
        "output": config.output,
        "treatments": len(entries),
        "slope": fit.slope,
        "r_squared": fit.r_squared,
    }


# ---------------------------------------------------------------------------
# synthetic data generation
# ---------------------------------------------------------------------------


def cycle_transition(r: int, order, forward: float, backward: float) -> np.ndarray:
    """Row-stochastic matrix driving the states around `order`: probability
    `forward` to the next state, `backward` to the previous, remainder stays."""
    stay = 1.0 - forward - backward
    if forward < 0 or backward < 0 or stay < -1e-12:
        raise ConfigError(
            f"forward + backward must be <= 1 and nonnegative "
            f"(forward={forward}, backward={backward})"
        )
    stay = max(stay, 0.0)
    transition = np.zeros((r, r))
    k = len(order)
    for pos, state in enumerate(order):
        transition[state, order[(pos + 1) % k]] += forward
        transition[state, order[(pos - 1) % k]] += backward
        transition[state, state] += stay
    return transition


_SQUARE_CYCLE_ORDER = (0, 2, 3, 1)


def _simulate_datasets(
    model: str,
    space: StateSpace,
    seed: Seed,
    *,
    treatments: int,
    sessions: int,
    rounds: int,
    p: float,
    q: float,
    forward: float,
    backward: float,
    drive_sweep: list[float] | None,
    dos: list[float] | None,
) -> tuple[list[TreatmentDataset], StateSpace]:
    if model == "ring":
        space = triangle_3()
    r = space.size

    def chain_spec(t_index: int) -> tuple[np.ndarray, np.ndarray]:
        if model == "ring":
            return np.full(r, 1.0 / r), cycle_transition(r, (0, 1, 2), forward, backward)
        if model == "square-cycle":
            fwd = drive_sweep[t_index] if drive_sweep else forward
            return np.full(r, 1.0 / r), cycle_transition(
                r, _SQUARE_CYCLE_ORDER, fwd, backward
            )
        if model == "iid":
            if dos is None:
                raise ConfigError("--dos is required for the iid model")
            vec = np.asarray(dos, dtype=float)
            if vec.size != r:
                raise ConfigError(f"--dos has {vec.size} entries but the space has r={r}")
            return vec, np.tile(vec, (r, 1))
        raise ConfigError(f"unknown model {model!r}")

    if model == "square-cycle" and drive_sweep:
        treatments = len(drive_sweep)
    datasets = []
    for t in range(treatments):
        tid = f"T{t + 1:02d}"
        trt_seed = seed.split(t)
        if model == "vnm":
            params = VnmParams(p=p, q=q, sessions=sessions, rounds_per_session=rounds)
            datasets.append(simulate_vnm(params, space, trt_seed, treatment_id=tid))
            continue
        dos0, transition = chain_spec(t)
        trajs = tuple(
            simulate_chain(
                dos0, transition, rounds, trt_seed.split(s), session_id=f"s{s + 1}"
            )
            for s in range(sessions)
        )
        datasets.append(
            TreatmentDataset(treatment_id=tid, space=space, sessions=trajs)
        )
    return datasets, space


# ---------------------------------------------------------------------------
# click wiring
# ---------------------------------------------------------------------------


def _analysis_options(fn):
    options = [
        click.option("--input", "input_path", required=True,
                      help="CSV record file (see README for the schema)."),
        click.option("--output", "output_path", required=True,
                      help="Path of the JSON report to write."),
        click.option("--seed", default=0, show_default=True,
                      help="64-bit root seed for all Monte-Carlo draws."),
        click.option("--reps", default=10_000, show_default=True,
                      help="Monte-Carlo replicates per null distribution."),
        click.option("--zero-flux-policy", "policy_text", default="skip",
                      show_default=True,
                      help="EPR zero-flux policy: skip, strict, or smooth=EPS."),
        click.option("--burn-in", default=0, show_default=True,
                      help="Rounds discarded at the start of every session."),
        click.option("--alpha", default=0.001, show_default=True,
                      help="Detection significance level."),
        click.option("--space", "space_text", default="square", show_default=True,
                      help="State space: square, triangle, or a JSON descriptor path."),
        click.option("--workers", default=1, show_default=True,
                      help="Worker processes for Monte-Carlo replicates."),
        click.option("--reproducible", is_flag=True,
                      help="Omit the timestamp so identical runs are byte-identical."),
    ]
    for option in reversed(options):
        fn = option(fn)
    return fn


@click.group()
@click.version_option(__version__, prog_name="chainflux")
def cli() -> None:
    """Markov-chain estimation and nonequilibrium observables for recorded
    play sequences: entropy, entropy production rate, velocity, motion,
    Monte-Carlo null models, and the associated statistical tests."""


def _finish(summary: dict) -> None:
    click.echo(json.dumps(summary, sort_keys=True))


@cli.command("analyze")
@_analysis_options
def _analyze_cmd(**kwargs) -> None:
    """Estimate chains and compute all observables per treatment."""
    _finish(run_analyze(_make_config(**kwargs)))


@cli.command("minimax-test")
@_analysis_options
def _minimax_cmd(**kwargs) -> None:
    """Test the independent-randomization prediction against the data."""
    _finish(run_minimax(_make_config(**kwargs)))


@cli.command("cycle-test")
@_analysis_options
def _cycle_cmd(**kwargs) -> None:
    """Test each treatment's EPR against its finite-sample i.i.d. baseline."""
    _finish(run_cycle_test(_make_config(**kwargs)))


@cli.command("motion-fit")
@_analysis_options
def _motion_cmd(**kwargs) -> None:
    """Fit motion against EPR across treatments (OLS with stderr and R^2)."""
    _finish(run_motion_fit(_make_config(**kwargs)))


@cli.command("simulate")
@click.option("--model", required=True,
              type=click.Choice(["vnm", "ring", "square-cycle", "iid"]),
              help="Generator: independent play, 3-state ring, driven square "
                   "cycle, or i.i.d. draws from --dos.")
@click.option("--output", "output_path", required=True, help="CSV file to write.")
@click.option("--seed", default=0, show_default=True)
@click.option("--treatments", default=1, show_default=True)
@click.option("--sessions", default=1, show_default=True)
@click.option("--rounds", default=1000, show_default=True)
@click.option("--p", default=0.5, show_default=True, help="vnm: P(row_action=1).")
@click.option("--q", default=0.5, show_default=True, help="vnm: P(col_action=1).")
@click.option("--forward", default=0.5, show_default=True,
              help="ring/square-cycle: forward step probability.")
@click.option("--backward", default=0.25, show_default=True,
              help="ring/square-cycle: backward step probability.")
@click.option("--drive-sweep", default=None,
              help="square-cycle: comma list of forward values, one treatment each.")
@click.option("--dos", default=None, help="iid: comma list of state probabilities.")
@click.option("--encoding", default="state", show_default=True,
              type=click.Choice(["state", "actions"]))
@click.option("--space", "space_text", default="square", show_default=True)
def _simulate_cmd(
    model, output_path, seed, treatments, sessions, rounds, p, q,
    forward, backward, drive_sweep, dos, encoding, space_text,
) -> None:
    """Write synthetic record files for any of the bundled generators."""
    if not (0 <= seed <= _MAX_SEED):
        raise ConfigError("--seed must be a 64-bit unsigned integer")
    if rounds < 2:
        raise ConfigError("--rounds must be >= 2")
    if sessions < 1 or treatments < 1:
        raise ConfigError("--sessions and --treatments must be >= 1")
    sweep = None
    if drive_sweep is not None:
        try:
            sweep = [float(x) for x in drive_sweep.split(",") if x.strip()]
        except ValueError as exc:
            raise ConfigError(f"bad --drive-sweep: {exc}") from exc
    dos_vec = None
    if dos is not None:
        try:
            dos_vec = [float(x) for x in dos.split(",") if x.strip()]
        except ValueError as exc:
            raise ConfigError(f"bad --dos: {exc}") from exc
    try:
        datasets, space = _simulate_datasets(
            model,
            load_space(space_text),
            Seed(seed),
            treatments=treatments,
            sessions=sessions,
            rounds=rounds,
            p=p,
            q=q,
            forward=forward,
            backward=backward,
            drive_sweep=sweep,
            dos=dos_vec,
        )
    except ValueError as exc:
        raise ConfigError(str(exc)) from exc
    write_csv(datasets, output_path, encoding=encoding)
    rows = sum(d.n_rounds for d in datasets)
    _progress(f"wrote {rows} rows for {len(datasets)} treatment(s) to {output_path}")
    _finish(
        {
            "command": "simulate",
            "model": model,
            "output": output_path,
            "treatments": len(datasets),
            "rows": rows,
            "states": space.size,
        }
    )


def main(argv=None) -> int:
    """Run the CLI and map exceptions to the documented exit codes."""
    try:
        cli.main(args=argv, standalone_mode=False)
        return 0
    except click.exceptions.Exit as exc:
        return int(exc.exit_code)
    except click.ClickException as exc:
        exc.show()
        return 1
    except click.Abort:
        return 1
    except ChainfluxError as exc:
        click.echo(f"error: {exc}", err=True)
        return 1
    except Exception as exc:  # noqa: BLE001 -- exit 2 is the contract
        click.echo(f"internal error: {type(exc).__name__}: {exc}", err=True)
        return 2


def entrypoint() -> None:
    sys.exit(main())


if __name__ == "__main__":
    entrypoint()
