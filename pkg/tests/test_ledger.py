import math
import threading

import pytest

from rstwalk.ledger import (
    ISO_SAMPLE,
    ORACLE_INIT,
    TREE_INIT,
    QueryLedger,
    iso_sample_cost,
    oracle_init_cost,
    tree_init_cost,
)


def test_cost_formulas():
    assert tree_init_cost(200, 30) == math.sqrt(6000)
    assert oracle_init_cost(200, 30, 0.1) == pytest.approx(math.sqrt(6000) / 0.1)
    assert iso_sample_cost(400, 60) == math.sqrt(24000)


def test_record_and_totals():
    led = QueryLedger()
    led.record(TREE_INIT, calls=5, charged=2.5)
    led.record(ISO_SAMPLE, calls=3, charged=1.0, invocations=4)
    assert led.total_charged == 3.5
    assert led.total_classical == 8
    assert led.invocations[ISO_SAMPLE] == 4
    with pytest.raises(ValueError):
        led.record(TREE_INIT, calls=-1)


def test_merge_and_summary_order():
    a, b = QueryLedger(), QueryLedger()
    a.record(ORACLE_INIT, charged=1.0)
    b.record(ORACLE_INIT, charged=2.0, calls=3)
    a.merge(b)
    s = a.summary()
    assert s["ledger.oracle_init.charged_queries"] == "3.000000"
    assert list(s)[-1] == "ledger.total.charged_queries"
    assert not any("wall" in key for key in s)
    with a.timer(ORACLE_INIT):
        pass
    assert "ledger.oracle_init.wall_seconds" in a.summary(timings=True)


def test_counters_are_thread_safe():
    led = QueryLedger()

    def work():
        for _ in range(2000):
            led.record(ISO_SAMPLE, calls=1, charged=1.0)

    threads = [threading.Thread(target=work) for _ in range(4)]
    for t in threads:
        t.start()
    for t in threads:
        t.join()
    assert led.total_classical == 8000 and led.total_charged == 8000.0
