import pytest

from ifslab.ifs import IFSystem, SimilarityMap, natural_weights


@pytest.fixture(scope="session")
def cantor():
    """Middle-third system {x/3, (x+2)/3}."""
    return IFSystem.from_maps(
        [SimilarityMap.from_exact([0], 3), SimilarityMap.from_exact([2], 3)])


@pytest.fixture(scope="session")
def twoscale():
    """Ratios (1/2, 1/4) on the line, separated: {x/2, (x+3)/4}."""
    return IFSystem.from_maps(
        [SimilarityMap.from_exact([0], 2), SimilarityMap.from_exact([3], 4)])


@pytest.fixture(scope="session")
def planar_three():
    """Three maps of ratio 1/2 in the plane (open set condition, unit square)."""
    return IFSystem.from_maps([
        SimilarityMap.from_exact([0, 0], 2),
        SimilarityMap.from_exact([1, 0], 2),
        SimilarityMap.from_exact([0, 1], 2),
    ])


@pytest.fixture(scope="session")
def planar_four():
    """Four-map planar system with denominators 2,4,5,3 (strongly separated)."""
    return IFSystem.from_maps([
        SimilarityMap.from_exact([0, 0], 2),
        SimilarityMap.from_exact([2, 0], 4),
        SimilarityMap.from_exact([0, 3], 5),
        SimilarityMap.from_exact([2, 2], 3),
    ])


@pytest.fixture(scope="session")
def overlap_pair():
    """{x/2, x/4}: the square of the first map equals the second."""
    return IFSystem.from_maps(
        [SimilarityMap.from_exact([0], 2), SimilarityMap.from_exact([0], 4)])


@pytest.fixture(scope="session")
def cantor_weights(cantor):
    return natural_weights(cantor)


@pytest.fixture(scope="session")
def twoscale_weights(twoscale):
    return natural_weights(twoscale)
