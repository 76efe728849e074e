"""Command-line front end: ``notimind {ingest,features,correlate,train,synth}``.

Every command accepts ``--seed``, ``--out`` and ``--config``.  A config
file holds ``key = value`` lines named after the command's options
(``max-gap`` or ``max_gap``); options given on the command line win.
Exit status is 0 on success, 1 on a validation or domain error and 2 on a
usage error.  Outputs are byte-identical across reruns with equal inputs.
"""

import functools
from collections import Counter
from contextlib import contextmanager
from datetime import timedelta
from pathlib import Path

import click

from ._kvfile import read_kv
from .errors import NotimindError

SEED = click.IntRange(0, 2**64 - 1)


def _load_config(ctx, param, value):
    if value is None:
        return value
    try:
        raw = read_kv(value)
    except (OSError, ValueError) as exc:
        raise click.BadParameter(str(exc), ctx=ctx, param=param) from exc
    known = {p.name for p in ctx.command.params} - {"config"}
    unknown = sorted(set(raw) - known)
    if unknown:
        raise click.BadParameter(f"unknown keys {unknown}", ctx=ctx, param=param)
    ctx.default_map = {**(ctx.default_map or {}), **raw}
    return value


def common_options(fn):
    """Attach ``--config`` and ``--out`` and map domain errors to exit code 1."""

    @functools.wraps(fn)
    def wrapper(*args, **kwargs):
        try:
            return fn(*args, **kwargs)
        except click.ClickException:
            raise
        except (NotimindError, ValueError, OSError) as exc:
            raise click.ClickException(f"{type(exc).__name__}: {exc}") from exc

    wrapper = click.option("--out", "out", type=click.Path(file_okay=False), default=".",
                           show_default=True, help="Output directory.")(wrapper)
    wrapper = click.option("--config", type=click.Path(exists=True, dir_okay=False),
                           callback=_load_config, is_eager=True, expose_value=False,
                           help="key = value file supplying option defaults.")(wrapper)
    return wrapper


@contextmanager
def stage(name):
    """Prefix errors raised inside a pipeline stage with its name."""
    try:
        yield
    except click.ClickException:
        raise
    except (NotimindError, ValueError, OSError) as exc:
        raise click.ClickException(f"{name}: {type(exc).__name__}: {exc}") from exc


def _out_dir(path):
    out = Path(path)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _write(path, text):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _open_out(path):
    return open(path, "w", encoding="utf-8", newline="\n")


@click.group()
@click.version_option(package_name="notimind")
def main():
    """Notification-log affect pipeline."""


# --------------------------------------------------------------------------
# ingest


@main.command()
@click.option("--events", "events_path", type=click.Path(exists=True, dir_okay=False), required=True,
              help="Notification event log (JSON lines).")
@click.option("--panas", "panas_path", type=click.Path(exists=True, dir_okay=False), required=True,
              help="PANAS report log (JSON lines).")
@click.option("--lenient", is_flag=True, help="Exit 0 even when lines fail to parse.")
@click.option("--seed", type=SEED, default=0, show_default=True, help="Unused; accepted for uniformity.")
@common_options
def ingest(events_path, panas_path, lenient, seed, out):
    """Validate both logs and write normalized copies plus parse_errors.txt."""
    from .ingest import parse_event_log, parse_panas_log, serialize_event, serialize_panas

    out = _out_dir(out)
    with open(events_path, encoding="utf-8") as fh:
        events, event_errors = parse_event_log(fh)
    with open(panas_path, encoding="utf-8") as fh:
        entries, panas_errors = parse_panas_log(fh)
    with _open_out(out / "events.jsonl") as fh:
        for event in events:
            fh.write(serialize_event(event) + "\n")
    with _open_out(out / "panas.jsonl") as fh:
        for entry in entries:
            fh.write(serialize_panas(entry) + "\n")
    lines = [f"events {err}" for err in event_errors] + [f"panas {err}" for err in panas_errors]
    _write(out / "parse_errors.txt", "".join(line + "\n" for line in lines))
    click.echo(f"events: {len(events)} ok, {len(event_errors)} errors")
    click.echo(f"panas: {len(entries)} ok, {len(panas_errors)} errors")
    n_errors = len(event_errors) + len(panas_errors)
    if n_errors and not lenient:
        raise click.ClickException(f"{n_errors} lines failed to parse (see parse_errors.txt)")


# --------------------------------------------------------------------------
# features


def overall_shares(segments):
    """Pooled state shares and sub-rates over all segments (percent)."""
    from .segment import FEATURE_LABELS, RawCounts

    total = Counter()
    for seg in segments:
        for name in RawCounts.__dataclass_fields__:
            total[name] += getattr(seg.counts, name)
    n = sum(total[s] for s in "proufk")

    def pct(a, b):
        return 100.0 * a / b if b > 0 else 0.0

    rows = [(FEATURE_LABELS[f"{s}_a"], pct(total[s], n)) for s in "profuk"]
    rows += [
        (FEATURE_LABELS["s_a"], pct(total["s"], total["p"])),
        (FEATURE_LABELS["m_a"], pct(total["m"], total["p"])),
        (FEATURE_LABELS["g_a"], pct(total["g"], total["p"])),
        (FEATURE_LABELS["e_a"], pct(total["e"], total["p"] - total["m"])),
        (FEATURE_LABELS["w_a"], pct(total["w"], total["p"] - total["s"])),
    ]
    return n, rows


@main.command()
@click.option("--events", "events_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--panas", "panas_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--detector-config", type=click.Path(exists=True, dir_okay=False),
              help="Overrides for the category detectors.")
@click.option("--max-gap", type=click.FloatRange(min=0, min_open=True), default=10.0, show_default=True,
              help="Hours above which a pair of reports is dismissed.")
@click.option("--discretization", type=click.Choice(["global", "per-user"]), default="global",
              show_default=True, help="One set of cuts for everybody or one per user.")
@click.option("--strategy", type=click.Choice(["optimal", "recursive"]), default="optimal",
              show_default=True)
@click.option("--seed", type=SEED, default=0, show_default=True, help="Unused; accepted for uniformity.")
@common_options
def features(events_path, panas_path, detector_config, max_gap, discretization, strategy, seed, out):
    """Enrich, segment and label; write features.csv, discretization.txt and summary.txt."""
    from .enrich import DetectorConfig, enrich_all
    from .ingest import format_timestamp, parse_event_log, parse_panas_log
    from .panas import discretize, distribution_report
    from .segment import assign_classes, segment_stream, write_feature_csv

    out = _out_dir(out)
    with stage("ingest"):
        with open(events_path, encoding="utf-8") as fh:
            events, event_errors = parse_event_log(fh)
        with open(panas_path, encoding="utf-8") as fh:
            entries, panas_errors = parse_panas_log(fh)
        if event_errors or panas_errors:
            first = (event_errors + panas_errors)[0]
            raise ValueError(f"{len(event_errors) + len(panas_errors)} invalid lines; first: {first}")
    with stage("enrich"):
        config = DetectorConfig.from_file(detector_config) if detector_config else DetectorConfig()
        enriched = enrich_all(events, config)
    with stage("segment"):
        result = segment_stream(enriched, entries, max_gap=timedelta(hours=max_gap))
        segments = result.segments
        if not segments:
            raise ValueError("no segments: every pair of reports was dismissed or missing")
    with stage("discretize"):
        scores = [seg.label_score for seg in segments]
        model = discretize(scores, strategy=strategy)
        per_user = {}
        if discretization == "per-user":
            by_user = {}
            for seg in segments:
                by_user.setdefault(seg.user_id, []).append(seg.label_score)
            for user, values in sorted(by_user.items()):
                if len(set(values)) >= 3:
                    per_user[user] = discretize(values, strategy=strategy)
        segments = assign_classes(segments, model, per_user)

    with _open_out(out / "features.csv") as fh:
        write_feature_csv(segments, fh)
    disc = ["[global]", model.to_text().rstrip("\n")]
    for user, user_model in per_user.items():
        disc += [f"[{user}]", user_model.to_text().rstrip("\n")]
    _write(out / "discretization.txt", "\n".join(disc) + "\n")

    classes = Counter(seg.label_class for seg in segments)
    n_events, shares = overall_shares(segments)
    lines = [
        f"segments {len(segments)}",
        f"dismissed_pairs {len(result.dismissed)}",
        f"events_assigned {result.assigned_events}",
        f"events_dropped {result.dropped_events}",
        "",
        "[score distribution]",
        distribution_report(scores).to_text().rstrip("\n"),
        "",
        "[classes]",
        *(f"class {c:+d} {classes.get(c, 0)} ({100.0 * classes.get(c, 0) / len(segments):.2f}%)"
          for c in (-1, 0, 1)),
        "",
        f"[overall shares] events {n_events}",
        *(f"{label} {value:.2f}%" for label, value in shares),
    ]
    if result.dismissed:
        lines += ["", "[dismissed pairs]"]
        lines += [f"{user} {format_timestamp(t0)} {format_timestamp(t1)}" for user, t0, t1 in result.dismissed]
    _write(out / "summary.txt", "\n".join(lines) + "\n")
    click.echo(f"segments: {len(segments)} (dismissed pairs: {len(result.dismissed)})")
    click.echo(f"cuts: {model.cut1!r} {model.cut2!r}")


# --------------------------------------------------------------------------
# correlate


@main.command()
@click.option("--features", "features_path", type=click.Path(exists=True, dir_okay=False), required=True,
              help="features.csv written by `features`.")
@click.option("--method", type=click.Choice(["t", "permutation"]), default="t", show_default=True,
              help="p-value from the t-transform or a shuffle test.")
@click.option("--permutations", type=click.IntRange(min=1), default=10_000, show_default=True)
@click.option("--seed", type=SEED, default=0, show_default=True)
@common_options
def correlate(features_path, method, permutations, seed, out):
    """Pearson r of every rate feature against the affect score: correlation.csv."""
    from .segment import FEATURE_LABELS, RATE_FEATURES, read_feature_csv
    from .stats import correlation_table

    out = _out_dir(out)
    with open(features_path, encoding="utf-8") as fh:
        table = read_feature_csv(fh)
    report = correlation_table(table.rates, table.score, RATE_FEATURES, method=method,
                               n_permutations=permutations, seed=seed)
    with _open_out(out / "correlation.csv") as fh:
        report.to_csv(fh)
    click.echo(f"n = {report.n}")
    for row in report.rows:
        flag = "  (constant)" if row.constant else ""
        click.echo(f"{FEATURE_LABELS[row.feature]:<14}{row.r:+.3f}  p={row.p:.3g}{flag}")


# --------------------------------------------------------------------------
# train


@main.command()
@click.option("--features", "features_path", type=click.Path(exists=True, dir_okay=False), required=True)
@click.option("--regime", type=click.Choice(["within", "global", "both"]), default="both", show_default=True)
@click.option("--classifiers", default="ann,svm,lr", show_default=True,
              help="Comma-separated subset of ann, svm, lr.")
@click.option("--select", "selection", type=click.Choice(["nine", "all", "threshold"]), default="nine",
              show_default=True, help="Nine-feature set, all eleven rates, or |r| above --threshold.")
@click.option("--threshold", type=click.FloatRange(0, 1), default=0.1, show_default=True)
@click.option("--folds", type=click.IntRange(min=2), default=15, show_default=True,
              help="k of the within-subject stratified CV.")
@click.option("--alpha", type=click.FloatRange(0, 1, min_open=True), default=0.05, show_default=True,
              help="Family-wise significance level.")
@click.option("--seed", type=SEED, default=0, show_default=True)
@common_options
def train(features_path, regime, classifiers, selection, threshold, folds, alpha, seed, out):
    """Cross-validate the classifiers and save models fit on all segments."""
    from .learn import CLASSIFIER_NAMES, GLOBAL, WITHIN, Dataset, Normalizer, cross_validate, make_classifier
    from .learn.evaluation import summary_table, write_pairwise_csv, write_summary_csv
    from .learn.model_selection import derive_seed
    from .learn.persistence import save_model
    from .segment import SELECTED_FEATURES, RATE_FEATURES, read_feature_csv
    from .stats import correlation_table, select_features

    names = [c.strip() for c in classifiers.split(",") if c.strip()]
    bad = [c for c in names if c not in CLASSIFIER_NAMES]
    if bad or not names:
        raise click.BadParameter(f"unknown classifiers {bad}; choose from {CLASSIFIER_NAMES}",
                                 param_hint="--classifiers")
    names = [c for c in CLASSIFIER_NAMES if c in names]
    out = _out_dir(out)
    with open(features_path, encoding="utf-8") as fh:
        table = read_feature_csv(fh)
    if table.label_class is None:
        raise click.ClickException("features.csv has no class labels; rerun `features`")
    if selection == "nine":
        columns = list(SELECTED_FEATURES)
    elif selection == "all":
        columns = list(RATE_FEATURES)
    else:
        report = correlation_table(table.rates, table.score, RATE_FEATURES)
        columns = select_features(report, threshold=threshold)
        if not columns:
            raise click.ClickException(f"no feature reaches |r| >= {threshold}")
    dataset = Dataset(table.columns(columns), table.label_class, table.users, columns)

    regimes = {"within": [WITHIN], "global": [GLOBAL], "both": [WITHIN, GLOBAL]}[regime]
    reports = []
    for name in regimes:
        with stage(name):
            reports.append(cross_validate(dataset, name, names, seed=seed, k=folds, family_alpha=alpha))

    with _open_out(out / "evaluation.csv") as fh:
        for i, report in enumerate(reports):
            report.to_csv(fh, header=i == 0)
    with _open_out(out / "summary.csv") as fh:
        write_summary_csv(reports, fh)
    with _open_out(out / "pairwise.csv") as fh:
        write_pairwise_csv(reports, fh)
    summary = summary_table(reports)
    _write(out / "summary.txt", "features: " + " ".join(columns) + "\n\n" + summary)

    models = _out_dir(out / "models")
    normalizer = Normalizer(on_constant="center").fit(dataset.X)
    Xn = normalizer.transform(dataset.X)
    for name in names:
        with stage(f"final {name}"):
            model = make_classifier(name, len(columns), derive_seed(seed, 3, CLASSIFIER_NAMES.index(name)))
            model.fit(Xn, dataset.y)
        save_model(models / f"{name}.model", model, normalizer, columns)
    click.echo(summary, nl=False)


# --------------------------------------------------------------------------
# synth


@main.command()
@click.option("--spec", "spec_path", type=click.Path(exists=True, dir_okay=False),
              help="Cohort spec (key = value); defaults reproduce the desk-scale cohort.")
@click.option("--n-users", type=click.IntRange(min=0), help="Override the spec's user count.")
@click.option("--days", type=click.IntRange(min=0), help="Override the spec's study length.")
@click.option("--verify", is_flag=True, help="Replay the pipeline on the written files and compare.")
@click.option("--seed", type=SEED, default=None, help="Override the spec's seed.")
@common_options
def synth(spec_path, n_users, days, verify, seed, out):
    """Generate events.jsonl, panas.jsonl and ground_truth.csv."""
    from dataclasses import replace

    from .ingest import parse_event_log, parse_panas_log
    from .synth import CohortSpec, generate_cohort, read_ground_truth, verify_cohort, write_cohort

    spec = CohortSpec.from_file(spec_path) if spec_path else CohortSpec()
    overrides = {k: v for k, v in (("n_users", n_users), ("days", days), ("seed", seed)) if v is not None}
    spec = replace(spec, **overrides)
    cohort = generate_cohort(spec)
    paths = write_cohort(cohort, _out_dir(out))
    click.echo(f"users {spec.n_users}, reports {len(cohort.panas)}, events {len(cohort.events)}, "
               f"segments {cohort.n_segments} (dismissed {cohort.dismissed})")
    if verify:
        with open(paths[0], encoding="utf-8") as fh:
            events, _ = parse_event_log(fh)
        with open(paths[1], encoding="utf-8") as fh:
            entries, _ = parse_panas_log(fh)
        with open(paths[2], encoding="utf-8") as fh:
            truth = read_ground_truth(fh)
        report = verify_cohort(events, entries, truth)
        click.echo(report.to_text(), nl=False)
        if not report.ok:
            raise click.ClickException(f"{report.n_mismatches} segments diverge from the ground truth")


if __name__ == "__main__":  # pragma: no cover
    main()
