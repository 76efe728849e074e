import io
from datetime import datetime, timedelta, timezone

import pytest
from hypothesis import HealthCheck, settings

from notimind.ingest import serialize_event, serialize_panas
from notimind.synth import CohortSpec, generate_cohort

settings.register_profile(
    "default", deadline=None, suppress_health_check=[HealthCheck.too_slow], print_blob=True
)
settings.load_profile("default")

T0 = datetime(2016, 4, 12, 9, 0, tzinfo=timezone.utc)


def at(hours=0.0, minutes=0.0, seconds=0.0):
    return T0 + timedelta(hours=hours, minutes=minutes, seconds=seconds)


SMALL_SPEC = CohortSpec(n_users=5, days=10, seed=7)


@pytest.fixture(scope="session")
def small_cohort():
    return generate_cohort(SMALL_SPEC)


@pytest.fixture(scope="session")
def small_cohort_files(small_cohort, tmp_path_factory):
    from notimind.synth import write_cohort

    out = tmp_path_factory.mktemp("small_cohort")
    write_cohort(small_cohort, out)
    return out


@pytest.fixture(scope="session")
def default_evaluation():
    """Both regimes on the default cohort, computed once per session."""
    import time
    import warnings

    import numpy as np

    from notimind.enrich import enrich_all
    from notimind.learn import GLOBAL, WITHIN, Dataset, cross_validate
    from notimind.panas import discretize
    from notimind.segment import SELECTED_FEATURES, build_segments

    start = time.perf_counter()
    cohort = generate_cohort(CohortSpec())
    segments = build_segments(enrich_all(cohort.events), cohort.panas)
    scores = [s.label_score for s in segments]
    y = discretize(scores).classify_many(scores)
    X = np.array([s.features.rates(SELECTED_FEATURES) for s in segments])
    dataset = Dataset(X, y, [s.user_id for s in segments], SELECTED_FEATURES)
    with warnings.catch_warnings():
        warnings.simplefilter("ignore")
        within = cross_validate(dataset, WITHIN, seed=0)
        glob = cross_validate(dataset, GLOBAL, seed=0)
    return {"within": within, "global": glob, "segments": len(segments),
            "elapsed": time.perf_counter() - start}


def lines_of(records, serialize):
    return io.StringIO("".join(serialize(r) + "\n" for r in records))


def event_stream(events):
    return lines_of(events, serialize_event)


def panas_stream(entries):
    return lines_of(entries, serialize_panas)


# The acceptance module appends (number, title, passed, detail) here; the
# summary hook prints one line per criterion at the end of the run.
ACCEPTANCE_RESULTS = []


def pytest_terminal_summary(terminalreporter):
    if not ACCEPTANCE_RESULTS:
        return
    terminalreporter.section("acceptance criteria")
    for number, title, passed, detail in sorted(ACCEPTANCE_RESULTS):
        verdict = "PASS" if passed else "FAIL"
        terminalreporter.write_line(f"[{verdict}] criterion {number:2d}: {title} ({detail})")
