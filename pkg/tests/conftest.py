import pytest

from exactdnn import builders
from exactdnn.plan import LayerPlan

FOUR_SET_PLAN = "f1,f2|f3,f4;f12,f34"
# three-layer word plan whose f12/f34 neurons only check one letter each
NARROW_EDGE_PLAN = "f12:f1|f2,f3|f34:f4;f12,f23|f23,f34;f123,f234"


@pytest.fixture(scope="session")
def two_letter():
    return builders.build_selective(builders.TWO_LETTER_WORDS)


@pytest.fixture(scope="session")
def comb1():
    return builders.build_combinatoric(builders.uniform_feature_sets(2, 2))


@pytest.fixture(scope="session")
def comb2():
    return builders.build_combinatoric(builders.uniform_feature_sets(4, 2), FOUR_SET_PLAN)


@pytest.fixture(scope="session")
def words3():
    return builders.shipped_words(3)


@pytest.fixture(scope="session")
def words4():
    return builders.shipped_words(4)


def builder_models():
    """Every builder configuration exercised by the suites, keyed by name."""
    w3, w4 = builders.shipped_words(3), builders.shipped_words(4)
    return {
        "combinatoric-1": builders.build_combinatoric(builders.uniform_feature_sets(2, 2)),
        "combinatoric-2": builders.build_combinatoric(builders.uniform_feature_sets(4, 2),
                                                      FOUR_SET_PLAN),
        "combinatoric-3x3": builders.build_combinatoric(builders.uniform_feature_sets(3, 3)),
        "selective-2": builders.build_selective(builders.TWO_LETTER_WORDS),
        "selective-3-1": builders.build_selective(w3),
        "selective-3-2": builders.build_selective(w3, LayerPlan.sliding(3)),
        "selective-4-1": builders.build_selective(w4),
        "selective-4-2": builders.build_selective(w4, FOUR_SET_PLAN),
        "selective-4-3": builders.build_selective(w4, LayerPlan.sliding(4)),
        "selective-4-3-narrow": builders.build_selective(w4, NARROW_EDGE_PLAN),
    }


def pytest_terminal_summary(terminalreporter):
    try:
        from test_acceptance import RESULTS
    except ImportError:
        return
    if RESULTS:
        terminalreporter.section("acceptance criteria")
        for n in sorted(RESULTS):
            terminalreporter.write_line(RESULTS[n])
