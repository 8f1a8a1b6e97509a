"""Reno-lite TCP model over a single link hop.

A connection spans exactly one link (proxies terminate connections), so
slow start, congestion avoidance, fast recovery and RTO all play out
against that hop's delay and loss.  Transfers run in per-RTT rounds: the
sender emits up to cwnd segments, arrivals are processed at the far end
one link delay later, and the ACK outcome one RTT after the send decides
the next window.  Bandwidth is infinite; only delay and loss matter.
"""

from __future__ import annotations

import math
from dataclasses import dataclass, field
from typing import Optional

from .network import Network

DEFAULT_MSS = 1460
INITIAL_CWND = 10.0
INITIAL_SSTHRESH = 64.0
RTO_MIN_MS = 200.0
SYN_TIMEOUT_MS = 1000.0
SYN_RETRY_BUDGET = 3
DEAD_PEER_RTO_LIMIT = 3


@dataclass
class TcpConnection:
    client: str
    server: str
    link: object
    established_at: float
    state: str = "established"      # handshake | established | closed | failed
    cwnd: float = INITIAL_CWND
    ssthresh: float = INITIAL_SSTHRESH
    mss: int = DEFAULT_MSS
    srtt: float = 0.0
    outstanding: int = 0
    dup_ack_count: int = 0


def tcp_open(net: Network, client: str, server: str, on_done,
             mss: int = DEFAULT_MSS):
    """Three-way handshake over the client-server link.

    Calls on_done(conn) once established (one full RTT after the SYN that
    got through), or on_done(None) when the retry budget is exhausted.
    SYN and SYN-ACK are subject to link loss; a lost handshake retries
    after 1 s, doubling.
    """
    link = net.link_between(client, server)
    sim = net.sim
    state = {"done": False}

    def finish(conn):
        if not state["done"]:
            state["done"] = True
            on_done(conn)

    def attempt(n):
        if state["done"]:
            return
        if n > SYN_RETRY_BUDGET:
            finish(None)
            return
        timeout = SYN_TIMEOUT_MS * (2 ** (n - 1))
        sim.after(timeout, attempt, n + 1)
        if link.up and not link.should_drop(client, server):
            sim.after(link.delay, syn_arrive)

    def syn_arrive():
        if state["done"] or not net.nodes[server].alive:
            return
        if link.up and not link.should_drop(server, client):
            sim.after(link.delay, established)

    def established():
        if state["done"] or not net.nodes[client].alive:
            return
        conn = TcpConnection(client, server, link, established_at=sim.now,
                             mss=mss, srtt=2.0 * link.delay)
        finish(conn)

    attempt(1)


def preestablished(net: Network, client: str, server: str,
                   mss: int = DEFAULT_MSS) -> TcpConnection:
    """A persistent connection assumed open before the scenario starts."""
    link = net.link_between(client, server)
    return TcpConnection(client, server, link, established_at=0.0,
                         mss=mss, srtt=2.0 * link.delay)


@dataclass
class TransferResult:
    success: bool = False
    reason: str = ""
    delivered_bytes: int = 0
    completion_time: Optional[float] = None
    arrivals: list = field(default_factory=list)  # (time, bytes) at receiver
    cwnd_trace: list = field(default_factory=list)  # (event, cwnd after)


class TcpTransfer:
    """One bulk transfer sender -> receiver over an established connection."""

    def __init__(self, net: Network, conn: TcpConnection, sender: str,
                 total_bytes: int, *, on_first_byte=None, on_done=None):
        if total_bytes <= 0:
            raise ValueError("total_bytes must be positive")
        if conn.state != "established":
            raise ValueError("connection not established")
        self.net = net
        self.conn = conn
        self.sender = sender
        self.receiver = conn.server if sender == conn.client else conn.client
        self.total_bytes = total_bytes
        self.total_segments = -(-total_bytes // conn.mss)
        self.on_first_byte = on_first_byte
        self.on_done = on_done
        self.result = TransferResult()
        self.done = False
        self._received = [False] * (self.total_segments + 1)
        self._received_count = 0
        self._cum_ack = 0
        self._consecutive_rto = 0

    @property
    def sim(self):
        return self.net.sim

    @property
    def rto(self) -> float:
        return max(2.0 * self.conn.srtt, RTO_MIN_MS)

    def _segment_bytes(self, seg: int) -> int:
        if seg < self.total_segments:
            return self.conn.mss
        return self.total_bytes - (self.total_segments - 1) * self.conn.mss

    def start(self):
        if self.sim.now < self.conn.established_at:
            raise ValueError("transfer started before handshake completion")
        self.sim.after(0.0, self._round)

    def _fail(self, reason: str):
        if self.done:
            return
        self.done = True
        self.conn.state = "failed"
        self.result.success = False
        self.result.reason = reason
        if self.on_done is not None:
            self.on_done(self.result)

    def _round(self):
        if self.done:
            return
        if not self.net.nodes[self.sender].alive:
            self._fail("sender died")
            return
        conn = self.conn
        window = max(1, math.floor(conn.cwnd))
        high = min(self.total_segments, self._cum_ack + window)
        batch = [s for s in range(self._cum_ack + 1, high + 1) if not self._received[s]]
        if not batch:
            return
        link = conn.link
        t = self.sim.now
        delay = link.delay
        delivered, lost = [], []
        for seg in batch:
            if link.up and not link.should_drop(self.sender, self.receiver):
                delivered.append(seg)
            else:
                lost.append(seg)
        conn.outstanding = len(batch)
        arrival_time = t + delay
        if delivered:
            self.sim.at(arrival_time, self._arrive, delivered)
        self.sim.at(t + 2.0 * delay, self._ack, batch, delivered, lost, t, arrival_time)

    def _arrive(self, delivered):
        if self.done or not self.net.nodes[self.receiver].alive:
            return
        now = self.sim.now
        first = self.result.delivered_bytes == 0
        for seg in delivered:
            if not self._received[seg]:
                self._received[seg] = True
                self._received_count += 1
                size = self._segment_bytes(seg)
                self.result.delivered_bytes += size
                self.result.arrivals.append((now, size))
        while self._cum_ack < self.total_segments and self._received[self._cum_ack + 1]:
            self._cum_ack += 1
        if first and self.result.delivered_bytes and self.on_first_byte is not None:
            self.on_first_byte(now)
        if self._received_count == self.total_segments:
            self.done = True
            self.conn.state = "closed"
            self.conn.outstanding = 0
            self.result.success = True
            self.result.completion_time = now
            if self.on_done is not None:
                self.on_done(self.result)

    def _ack(self, batch, delivered, lost, send_time, arrival_time):
        if self.done:
            return
        if not self.net.nodes[self.sender].alive:
            self._fail("sender died")
            return
        conn = self.conn
        receiver = self.net.nodes[self.receiver]
        if not receiver.alive and receiver.death_time <= arrival_time:
            delivered, lost = [], list(batch)
        if delivered:
            sample = self.sim.now - send_time
            conn.srtt = 0.875 * conn.srtt + 0.125 * sample if conn.srtt else sample
        if not lost:
            conn.dup_ack_count = 0
            self._consecutive_rto = 0
            if conn.cwnd < conn.ssthresh:
                conn.cwnd = min(conn.cwnd * 2.0, conn.ssthresh)
                self.result.cwnd_trace.append(("ss", conn.cwnd))
            else:
                conn.cwnd += 1.0
                self.result.cwnd_trace.append(("ca", conn.cwnd))
            self._round()
            return
        dupacks = sum(1 for seg in delivered if seg > lost[0])
        conn.dup_ack_count = dupacks
        if dupacks >= 3:
            conn.ssthresh = max(conn.cwnd / 2.0, 1.0)
            conn.cwnd = conn.ssthresh
            self._consecutive_rto = 0
            self.result.cwnd_trace.append(("fr", conn.cwnd))
            self._round()
            return
        conn.ssthresh = max(conn.cwnd / 2.0, 1.0)
        conn.cwnd = 1.0
        self.result.cwnd_trace.append(("rto", conn.cwnd))
        if not delivered:
            self._consecutive_rto += 1
            if self._consecutive_rto >= DEAD_PEER_RTO_LIMIT:
                self._fail("peer unreachable")
                return
        else:
            self._consecutive_rto = 0
        resume = max(self.sim.now, send_time + self.rto)
        self.sim.at(resume, self._round)
