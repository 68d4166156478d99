"""Simulated device array with queue-pair IO semantics.

Pages are striped across devices round-robin by page id.  Each queue
pair is owned by one IO worker; a request completes after a fixed
service time plus a per-byte transfer time.
"""

from __future__ import annotations

import os
import threading
import time
from collections import deque
from dataclasses import dataclass, field

from .errors import ColfuseError, QueueFullError

DEFAULT_LATENCY_S = 50e-6
DEFAULT_BANDWIDTH_BPS = 3e9
DEFAULT_QUEUE_DEPTH = 64


@dataclass
class IoConfig:
    latency_s: float = DEFAULT_LATENCY_S
    bandwidth_bps: float = DEFAULT_BANDWIDTH_BPS
    queue_depth: int = DEFAULT_QUEUE_DEPTH


class DeviceArray:
    """Byte stores for ``device_count`` devices, in memory or file-backed."""

    def __init__(self, device_count, directory=None):
        if device_count < 1:
            raise ValueError("need at least one device")
        self.device_count = device_count
        self.directory = directory
        if directory is None:
            self._stores = [bytearray() for _ in range(device_count)]
            self._files = None
        else:
            os.makedirs(directory, exist_ok=True)
            self._files = []
            for d in range(device_count):
                path = os.path.join(directory, "dev%d.bin" % d)
                if not os.path.exists(path):
                    open(path, "wb").close()
                self._files.append(open(path, "r+b"))

    def device_for(self, page_id):
        return page_id % self.device_count

    def write(self, device, offset, data):
        if self._files is None:
            store = self._stores[device]
            end = offset + len(data)
            if len(store) < end:
                store.extend(b"\x00" * (end - len(store)))
            store[offset:end] = data
        else:
            f = self._files[device]
            f.seek(offset)
            f.write(data)

    def read(self, device, offset, length):
        if self._files is None:
            data = bytes(self._stores[device][offset : offset + length])
        else:
            f = self._files[device]
            f.seek(offset)
            data = f.read(length)
        if len(data) != length:
            raise ColfuseError("short read on device %d" % device)
        return data

    def flush(self):
        if self._files:
            for f in self._files:
                f.flush()

    def close(self):
        if self._files:
            for f in self._files:
                f.close()
            self._files = []


@dataclass
class IoStats:
    requests_issued: int = 0
    bytes_read: int = 0
    pass_launches: int = 0
    barrier_count: int = 0
    _lock: threading.Lock = field(default_factory=threading.Lock, repr=False)

    def add_request(self, nbytes):
        with self._lock:
            self.requests_issued += 1
            self.bytes_read += nbytes

    def add_launch(self, n=1):
        with self._lock:
            self.pass_launches += n

    def add_barrier(self, n=1):
        with self._lock:
            self.barrier_count += n

    def reset(self):
        with self._lock:
            self.requests_issued = 0
            self.bytes_read = 0
            self.pass_launches = 0
            self.barrier_count = 0

    def as_dict(self):
        return {
            "requests_issued": self.requests_issued,
            "bytes_read": self.bytes_read,
            "pass_launches": self.pass_launches,
            "barrier_count": self.barrier_count,
        }


@dataclass(frozen=True)
class IoRequest:
    page_id: int
    device: int
    offset: int
    length: int


@dataclass(frozen=True)
class IoCompletion:
    ticket: int
    page_id: int
    payload: bytes


class QueuePair:
    """Bounded submission/completion FIFO pair owned by one IO worker."""

    def __init__(self, pair_id, devices, config, stats):
        self.pair_id = pair_id
        self.depth = config.queue_depth
        self._devices = devices
        self._config = config
        self._stats = stats
        self._sq = deque()
        self._cq = deque()
        self._next_ticket = 0
        self._busy_until = 0.0

    def in_flight(self):
        return len(self._sq) + len(self._cq)

    def submit(self, req):
        if self.in_flight() >= self.depth:
            raise QueueFullError("queue pair %d full" % self.pair_id)
        ticket = self._next_ticket
        self._next_ticket += 1
        now = time.monotonic()
        service = self._config.latency_s + req.length / self._config.bandwidth_bps
        self._busy_until = max(now, self._busy_until) + service
        self._sq.append((ticket, req, self._busy_until))
        self._stats.add_request(req.length)
        return ticket

    def poll(self):
        """Return one completion, or None if nothing has completed yet."""
        if self._cq:
            return self._cq.popleft()
        if not self._sq:
            return None
        ticket, req, ready = self._sq[0]
        if time.monotonic() < ready:
            return None
        self._sq.popleft()
        payload = self._devices.read(req.device, req.offset, req.length)
        return IoCompletion(ticket, req.page_id, payload)

    def poll_wait(self):
        """Poll until a completion is available (requests must be in flight)."""
        while True:
            done = self.poll()
            if done is not None:
                return done
            time.sleep(self._config.latency_s / 4)


def configure_queues(io_worker_count, devices, config, stats):
    """One dedicated queue pair per IO worker, fixed for the pipeline."""
    if io_worker_count < 1:
        raise ValueError("io_worker_count must be >= 1")
    return [QueuePair(i, devices, config, stats) for i in range(io_worker_count)]


def resolve_page(page_id, placement, offsets, sizes, device_count):
    """Map a page id to (device, byte offset, byte length)."""
    try:
        ordinal = placement.ordinal(page_id)
        if not 0 <= ordinal < len(placement.page_ids):
            raise IndexError
        return page_id % device_count, offsets[ordinal], sizes[ordinal]
    except (IndexError, ValueError):
        raise ColfuseError("unknown page id %d" % page_id) from None
