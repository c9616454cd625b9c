import random

from hypothesis import strategies as st

from stablelab.market import FULL, PARTIAL, MarriageMarket


@st.composite
def full_markets(draw, min_n=1, max_n=5):
    n = draw(st.integers(min_n, max_n))
    women = tuple(tuple(draw(st.permutations(range(1, n + 1)))) for _ in range(n))
    men = tuple(tuple(draw(st.permutations(range(1, n + 1)))) for _ in range(n))
    return MarriageMarket(n, FULL, women, men)


@st.composite
def partial_markets(draw, min_n=1, max_n=4):
    n = draw(st.integers(min_n, max_n))

    def one_list():
        subset = draw(st.lists(st.integers(1, n), unique=True, max_size=n))
        return tuple(subset)

    women = tuple(one_list() for _ in range(n))
    men = tuple(one_list() for _ in range(n))
    return MarriageMarket(n, PARTIAL, women, men)


def seeded_markets(count, n, model, base_seed):
    """Deterministic stream of random markets for loop-style tests."""
    from stablelab.market import random_market

    for t in range(count):
        yield random_market(n, model, random.Random(base_seed + t))
