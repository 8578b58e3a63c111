import pytest

from synthetic import make_dataset, write_dataset


@pytest.fixture(scope="session")
def small_dataset():
    return make_dataset(seed=7, n_images=3, beta=0.4, n_fix=200)


@pytest.fixture
def dataset_files(tmp_path, small_dataset):
    images, fixations, saliency = small_dataset
    ann, fix, sal = write_dataset(tmp_path / "data", images, fixations, saliency)
    return {"annotations": ann, "fixations": fix, "saliency_dir": sal, "root": tmp_path}


def pytest_configure(config):
    config.addinivalue_line("markers", "criterion(n): acceptance criterion number")
    config._criterion_results = {}


@pytest.hookimpl(hookwrapper=True)
def pytest_runtest_makereport(item, call):
    outcome = yield
    rep = outcome.get_result()
    mark = item.get_closest_marker("criterion")
    if mark is None:
        return
    results = item.config._criterion_results
    n = mark.args[0]
    if rep.skipped:
        results.setdefault(n, "SKIP")
    elif rep.failed:
        results[n] = "FAIL"
    elif rep.when == "call":
        results.setdefault(n, "PASS")


def pytest_terminal_summary(terminalreporter, config):
    results = config._criterion_results
    if not results:
        return
    terminalreporter.section("acceptance criteria")
    for n in sorted(results):
        terminalreporter.write_line(f"criterion {n}: {results[n]}")
