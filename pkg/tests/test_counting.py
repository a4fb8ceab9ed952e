from itertools import product

import pytest

from sensechain.counting import (
    count_single_root,
    count_single_root_constructible,
    count_total,
    count_total_constructible,
    enumerate_annotations,
    round_significant,
    set_partitions,
)

# Rounded "# options" column: senses 2..10.
TABLE_ROUNDED = {
    2: "5",
    3: "49",
    4: "729",
    5: "146 x 10^2",
    6: "371 x 10^3",
    7: "114 x 10^5",
    8: "410 x 10^6",
    9: "170 x 10^8",
    10: "794 x 10^9",
}


def brute_force_forests(n: int, k: int) -> list[tuple]:
    """Independent oracle: try every (parent, label) assignment, keep forests.

    Each sense independently picks None (a root) or one of the other senses
    with one of k labels; an assignment counts when the parent links are
    acyclic. No partition or tree formula involved.
    """
    choices_per_node = []
    for node in range(1, n + 1):
        options: list[tuple[int | None, int | None]] = [(None, None)]
        for parent in range(1, n + 1):
            if parent != node:
                options.extend((parent, lab) for lab in range(k))
        choices_per_node.append(options)
    forests = []
    for assignment in product(*choices_per_node):
        ok = True
        for start in range(n):
            seen = set()
            cur: int | None = start + 1
            while cur is not None:
                if cur in seen:
                    ok = False
                    break
                seen.add(cur)
                cur = assignment[cur - 1][0]
            if not ok:
                break
        if ok:
            forests.append(tuple(assignment))
    return forests


def brute_force_single_root(n: int, k: int) -> int:
    return sum(
        1
        for forest in brute_force_forests(n, k)
        if sum(1 for parent, _ in forest if parent is None) == 1
    )


class TestSingleRoot:
    def test_lone_prototype(self):
        assert count_single_root(1, 2) == 1

    def test_three_senses_matches_brute_force(self):
        assert brute_force_single_root(3, 2) == 36
        assert count_single_root(3, 2) == 36

    def test_four_senses_matches_brute_force(self):
        assert brute_force_single_root(4, 2) == 512
        assert count_single_root(4, 2) == 512

    def test_zero_senses_rejected(self):
        with pytest.raises(ValueError):
            count_single_root(0, 2)


class TestTotal:
    @pytest.mark.parametrize("n,expected", [(2, 5), (3, 49), (4, 729), (5, 14641)])
    def test_exact_values(self, n, expected):
        assert count_total(n, 2) == expected

    @pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
    def test_matches_brute_force(self, n):
        assert count_total(n, 2) == len(brute_force_forests(n, 2))

    @pytest.mark.parametrize("n", [2, 3, 4])
    def test_matches_brute_force_three_labels(self, n):
        assert count_total(n, 3) == len(brute_force_forests(n, 3))

    def test_matches_partition_sum(self):
        # Same quantity via explicit set-partition enumeration.
        for n in range(1, 9):
            total = 0
            for blocks in set_partitions(list(range(n))):
                prod = 1
                for block in blocks:
                    prod *= count_single_root(len(block), 2)
                total += prod
            assert count_total(n, 2) == total

    @pytest.mark.parametrize("n,expected", sorted(TABLE_ROUNDED.items()))
    def test_rounding_matches_published_column(self, n, expected):
        assert round_significant(count_total(n, 2)) == expected

    def test_monotone_in_n_and_labels(self):
        for n in range(1, 12):
            assert count_total(n + 1, 2) > count_total(n, 2)
            assert count_total(n, 3) >= count_total(n, 2)
            if n >= 2:
                assert count_total(n, 3) > count_total(n, 2)

    def test_ceiling_enforced(self):
        with pytest.raises(ValueError):
            count_total(50, 2, ceiling=10)

    def test_big_values_are_exact_integers(self):
        # Well past 64-bit range; exactness is the point.
        value = count_total(30, 2)
        assert value % 10 == count_total(30, 2) % 10
        assert value > 2**64


class TestEnumeration:
    @pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
    def test_stream_length_and_uniqueness(self, n):
        forests = list(enumerate_annotations(n, 2))
        assert len(forests) == count_total(n, 2)
        assert len(set(forests)) == len(forests)

    def test_two_senses_lists_all_five(self):
        forests = set(enumerate_annotations(2, 2))
        expected = {
            ((None, None), (None, None)),
            ((None, None), (1, 0)),
            ((None, None), (1, 1)),
            ((2, 0), (None, None)),
            ((2, 1), (None, None)),
        }
        assert forests == expected

    def test_matches_brute_force_set(self):
        for n in (2, 3, 4):
            assert set(enumerate_annotations(n, 2)) == set(brute_force_forests(n, 2))

    def test_limit_enforced(self):
        with pytest.raises(ValueError):
            next(enumerate_annotations(7, 2))


class TestConstructible:
    def _constructible(self, forest) -> bool:
        # Default interface rules, no conduits: metonyms extend roots only,
        # metaphors never extend metaphors.
        for parent, label in forest:
            if parent is None:
                continue
            parent_parent, parent_label = forest[parent - 1]
            if label == 1 and parent_parent is not None:  # metonymy of non-root
                return False
            if label == 0 and parent_parent is not None and parent_label == 0:
                return False
        return True

    @pytest.mark.parametrize("n", [1, 2, 3, 4, 5])
    def test_matches_filtered_enumeration(self, n):
        # Label 0 is metaphor, label 1 is metonymy in the enumeration stream.
        filtered = [f for f in enumerate_annotations(n, 2) if self._constructible(f)]
        assert count_total_constructible(n) == len(filtered)
        single = [
            f for f in filtered if sum(1 for p, _ in f if p is None) == 1
        ]
        assert count_single_root_constructible(n) == len(single)

    def test_strictly_fewer_than_unconstrained_beyond_two(self):
        assert count_total_constructible(2) == count_total(2, 2)
        for n in range(3, 8):
            assert count_total_constructible(n) < count_total(n, 2)


class TestRounding:
    @pytest.mark.parametrize(
        "value,expected",
        [(5, "5"), (729, "729"), (1000, "100 x 10^1"), (14641, "146 x 10^2"),
         (9995, "100 x 10^2"), (999, "999")],
    )
    def test_three_significant_figures(self, value, expected):
        assert round_significant(value) == expected
