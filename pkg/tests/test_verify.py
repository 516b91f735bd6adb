import numpy as np

from bmstream import MatchParams
from bmstream.match_stream import SumTable
from bmstream.verify import run_ramp_verification


def _params():
    return MatchParams(block_size=3, window_size=8, max_matches=4)


def test_all_checks_pass_on_64():
    results = run_ramp_verification(64, _params())
    assert len(results) == 3
    assert all(r.passed for r in results), [(r.name, r.detail) for r in results]


def test_corrupted_sum_detected():
    def corrupt(table: SumTable) -> SumTable:
        sums = table.sums.copy()
        sums[0, 0] += 1
        return SumTable(
            offset=table.offset,
            base_rows=table.base_rows,
            base_cols=table.base_cols,
            sums=sums,
        )

    results = run_ramp_verification(32, _params(), corrupt=corrupt)
    by_name = {r.name: r for r in results}
    assert not by_name["constant-sum-per-offset"].passed


def test_strided_params_pass():
    results = run_ramp_verification(48, MatchParams(block_size=3, window_size=8, max_matches=4, stride=3))
    assert all(r.passed for r in results)


def test_warmup_growth_matches_expected_pattern():
    # independent closed form: partial blocks scale with the clipped area
    from bmstream import make_ramp_image
    from bmstream.match_stream import Offset, diff_stream, overlap_region, sliding_sums_with_warmup

    img = make_ramp_image(20, 20)
    region = overlap_region(20, 20, 4, 3)
    off = Offset(2, -3)
    full = sliding_sums_with_warmup(diff_stream(img, off, region), region, 3)
    for i in range(full.shape[0]):
        for j in range(full.shape[1]):
            assert full[i, j] == min(i + 1, 3) * min(j + 1, 3) * 9
