"""The acceptance battery, one test per criterion.

Each criterion function pins its own tolerances; these tests simply execute
them and fail with the recorded details when a criterion does not hold.
"""

import pytest

from treewalk import acceptance


@pytest.mark.parametrize(
    "index,name",
    [(i, name) for i, (name, _) in enumerate(acceptance.CRITERIA, start=1)],
    ids=[f"{i:02d}-{name}" for i, (name, _) in enumerate(acceptance.CRITERIA, start=1)],
)
def test_acceptance_criterion(index, name):
    result = acceptance.run_criteria([index])[0]
    print(f"{'PASS' if result.passed else 'FAIL'} {index:2d} {name} "
          f"({result.seconds:.1f} s): {result.details}")
    assert result.passed, result.details
