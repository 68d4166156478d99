import time

import pytest

from colfuse import iosim
from colfuse.errors import ColfuseError, QueueFullError


def _array_with(pages):
    dev = iosim.DeviceArray(3)
    for page_id, data in pages.items():
        dev.write(page_id % 3, 0, data)
    return dev


def test_round_robin_striping():
    dev = iosim.DeviceArray(4)
    assert [dev.device_for(p) for p in range(6)] == [0, 1, 2, 3, 0, 1]


def test_device_read_write_memory_and_file(tmp_path):
    for directory in (None, str(tmp_path / "devs")):
        dev = iosim.DeviceArray(2, directory)
        dev.write(1, 100, b"hello")
        assert dev.read(1, 100, 5) == b"hello"
        with pytest.raises(ColfuseError):
            dev.read(1, 100, 500)
        dev.flush()
        dev.close()


def test_file_backed_persistence(tmp_path):
    d = str(tmp_path / "devs")
    dev = iosim.DeviceArray(1, d)
    dev.write(0, 0, b"persist")
    dev.flush()
    dev.close()
    again = iosim.DeviceArray(1, d)
    assert again.read(0, 0, 7) == b"persist"
    again.close()


def test_queue_pair_completion_and_stats():
    stats = iosim.IoStats()
    dev = iosim.DeviceArray(1)
    dev.write(0, 0, b"abcdef")
    cfg = iosim.IoConfig(latency_s=1e-4)
    pair = iosim.QueuePair(0, dev, cfg, stats)
    t0 = time.monotonic()
    pair.submit(iosim.IoRequest(0, 0, 2, 3))
    done = pair.poll_wait()
    waited = time.monotonic() - t0
    assert done.payload == b"cde"
    assert done.page_id == 0
    assert waited >= cfg.latency_s
    assert stats.requests_issued == 1
    assert stats.bytes_read == 3


def test_queue_depth_backpressure():
    stats = iosim.IoStats()
    dev = iosim.DeviceArray(1)
    dev.write(0, 0, b"\x00" * 64)
    cfg = iosim.IoConfig(queue_depth=4, latency_s=1e-3)
    pair = iosim.QueuePair(0, dev, cfg, stats)
    for _ in range(4):
        pair.submit(iosim.IoRequest(0, 0, 0, 8))
    with pytest.raises(QueueFullError):
        pair.submit(iosim.IoRequest(0, 0, 0, 8))
    pair.poll_wait()
    pair.submit(iosim.IoRequest(0, 0, 0, 8))  # slot freed


def test_poll_returns_none_before_service_time():
    stats = iosim.IoStats()
    dev = iosim.DeviceArray(1)
    dev.write(0, 0, b"\x00" * 8)
    pair = iosim.QueuePair(0, dev, iosim.IoConfig(latency_s=0.05), stats)
    pair.submit(iosim.IoRequest(0, 0, 0, 8))
    assert pair.poll() is None


def test_requests_serialize_per_pair():
    stats = iosim.IoStats()
    dev = iosim.DeviceArray(1)
    dev.write(0, 0, b"\x00" * 64)
    cfg = iosim.IoConfig(latency_s=2e-3)
    pair = iosim.QueuePair(0, dev, cfg, stats)
    t0 = time.monotonic()
    for _ in range(5):
        pair.submit(iosim.IoRequest(0, 0, 0, 8))
    for _ in range(5):
        pair.poll_wait()
    assert time.monotonic() - t0 >= 5 * cfg.latency_s


def test_configure_queues_one_pair_per_worker():
    stats = iosim.IoStats()
    dev = iosim.DeviceArray(2)
    pairs = iosim.configure_queues(3, dev, iosim.IoConfig(), stats)
    assert [p.pair_id for p in pairs] == [0, 1, 2]
    with pytest.raises(ValueError):
        iosim.configure_queues(0, dev, iosim.IoConfig(), stats)


def test_stats_counters_and_reset():
    stats = iosim.IoStats()
    stats.add_request(10)
    stats.add_launch()
    stats.add_barrier(2)
    assert stats.as_dict() == {
        "requests_issued": 1, "bytes_read": 10,
        "pass_launches": 1, "barrier_count": 2,
    }
    stats.reset()
    assert stats.bytes_read == 0 and stats.pass_launches == 0
