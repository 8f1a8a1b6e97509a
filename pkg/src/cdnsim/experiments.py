"""Scenario harness: builds the two planes on the CDN topology and runs
the six comparative experiments.

Topology (defaults): client --50ms-- csc --10ms-- {int1, int2} -- origin,
with int1 10 ms and int2 50 ms from the origin.  The NDN plane runs a
consumer pipeline against forwarding nodes with Content Stores; the HTTP
plane runs a forward proxy (csc), two reverse proxies (int1, int2) and an
origin behind TCP hops.

Experiments:
  A  completion time with and without link loss
  B  time to first byte, cold/warm, over randomized topologies
  C  intermediate cache bytes after a mid-transfer source switch
  D  byte-range retrieval: segment reuse vs bypass / full-fetch proxies
  E  upstream killed mid-transfer: failover vs broken connection
  F  weighted path selection under scripted path degradation
"""

from __future__ import annotations

import dataclasses
import math
from dataclasses import dataclass, field

from .content import ContentObject
from .httpproxy import HttpNode, HttpPlane, HttpRequest, ProxyConfig
from .metrics import MetricsRecord, max_gap, summarize
from .names import Name, longest_prefix_match
from .ndn import ConsumerPipeline, NdnNode, strategy_select
from .network import Network
from .scenarios import ScenarioConfig, TopologyConfig
from .sim import Simulator, derive_seed, make_rng

CONTENT_PREFIX = Name(("data_file",))
CONTENT_URL = "/data_file"

NODE_ROLES = {
    "client": "client",
    "csc": "client_side_cache",
    "int1": "intermediate_cache",
    "int2": "intermediate_cache",
    "origin": "origin",
}


@dataclass
class ExperimentOutput:
    records: list
    plot_files: dict = field(default_factory=dict)
    details: dict = field(default_factory=dict)


def _link_specs(topo: TopologyConfig, loss_access: float, loss_upstream: float):
    l1 = topo.csc_int1_loss if topo.csc_int1_loss is not None else loss_upstream
    l2 = topo.csc_int2_loss if topo.csc_int2_loss is not None else loss_upstream
    return [
        ("client", "csc", topo.access_delay, loss_access),
        ("csc", "int1", topo.csc_int1_delay, l1),
        ("csc", "int2", topo.csc_int2_delay, l2),
        ("int1", "origin", topo.int1_origin_delay, loss_upstream),
        ("int2", "origin", topo.int2_origin_delay, loss_upstream),
    ]


class NdnWorld:
    def __init__(self, cfg: ScenarioConfig, seed: int, size: int, *,
                 loss_access: float = 0.0, loss_upstream: float = 0.0,
                 topo: TopologyConfig | None = None,
                 cache_nodes=None, strategy: str | None = None,
                 trace: bool = False):
        self.cfg = cfg
        self.seed = seed
        topo = topo if topo is not None else cfg.topology
        cache_nodes = set(cache_nodes if cache_nodes is not None else cfg.cache_nodes)
        strategy = strategy or cfg.strategy
        self.sim = Simulator(trace)
        self.net = Network(self.sim, seed)
        self.nodes: dict[str, NdnNode] = {}
        for name in NODE_ROLES:
            capacity = cfg.cache_budget if name in cache_nodes else 0
            node = NdnNode(name, cs_capacity=capacity, strategy=strategy,
                           pit_lifetime=cfg.pit_lifetime)
            self.net.add_node(node)
            self.nodes[name] = node
        for a, b, delay, loss in _link_specs(topo, loss_access, loss_upstream):
            self.net.add_link(a, b, delay, loss)
            self.nodes[a].add_face(b)
            self.nodes[b].add_face(a)
        self.content = ContentObject(CONTENT_PREFIX, size,
                                     chunk_size=cfg.chunk_size,
                                     signature_size=cfg.signature_size)
        self.nodes["origin"].publish(self.content)
        self.nodes["client"].add_route(CONTENT_PREFIX,
                                       [(self.face("client", "csc"), 10)])
        self.nodes["csc"].add_route(CONTENT_PREFIX,
                                    [(self.face("csc", "int1"), 10),
                                     (self.face("csc", "int2"), 20)])
        self.nodes["int1"].add_route(CONTENT_PREFIX,
                                     [(self.face("int1", "origin"), 10)])
        self.nodes["int2"].add_route(CONTENT_PREFIX,
                                     [(self.face("int2", "origin"), 10)])
        self.net.kill_hooks.append(self._on_kill)
        self.finished = False
        self.chosen_series = []   # (time_ms, neighbor name chosen by csc)
        self._fetches = 0

    def face(self, node: str, neighbor: str) -> int:
        return self.nodes[node].face_of[neighbor]

    def _on_kill(self, killed: str):
        # Oracle failure signal: neighbors learn immediately that the
        # face toward the dead node is gone.
        for node in self.nodes.values():
            if node.alive and killed in node.face_of:
                node.mark_face_dead(node.face_of[killed])

    def install_quality_oracle(self, node_name: str = "csc",
                               interval: float | None = None):
        node = self.nodes[node_name]
        interval = interval if interval is not None else self.cfg.strategy_interval
        net = self.net

        def tick():
            if self.finished or not node.alive:
                return
            for face_id, neighbor in node.faces.items():
                link = net.link_between(node.name, neighbor)
                q = node.qualities[face_id]
                q.delay_estimate = link.delay
                q.loss_estimate = link.loss * 100.0
                q.alive = net.nodes[neighbor].alive and link.up
            entry = longest_prefix_match(node.fib, CONTENT_PREFIX)
            chosen = strategy_select(entry, node.qualities, node.strategy)
            self.chosen_series.append(
                (self.sim.now, node.faces.get(chosen) if chosen is not None else None))
            self.sim.after(interval, tick)

        self.sim.at(self.sim.now, tick)

    def warm(self, node_name: str, segments):
        cs = self.nodes[node_name].cs
        for k in segments:
            cs.insert(self.content.segment_data(k))

    def fetch(self, byte_range=None, label: str = "fetch"):
        self._fetches += 1
        holder = {}

        def done(result):
            holder["result"] = result
            self.finished = True

        pipeline = ConsumerPipeline(
            self.nodes["client"], CONTENT_PREFIX,
            chunk_size=self.cfg.chunk_size, byte_range=byte_range,
            window=self.cfg.window, max_retries=self.cfg.max_retries,
            seed=derive_seed(self.seed, "consumer", label, self._fetches),
            on_done=done)
        self.sim.after(0.0, pipeline.start)
        self.sim.run()
        self.finished = False
        return holder["result"]

    @property
    def origin_touches(self) -> int:
        return self.nodes["origin"].counters.get("origin_touches", 0)

    def cache_bytes(self, node_name: str) -> int:
        cs = self.nodes[node_name].cs
        return cs.content_used if cs is not None else 0


class HttpWorld:
    def __init__(self, cfg: ScenarioConfig, seed: int, size: int, *,
                 loss_access: float = 0.0, loss_upstream: float = 0.0,
                 topo: TopologyConfig | None = None, cache_nodes=None,
                 lb_policy: str = "round_robin", range_mode: str | None = None,
                 trace: bool = False):
        self.cfg = cfg
        topo = topo if topo is not None else cfg.topology
        cache_nodes = set(cache_nodes if cache_nodes is not None else cfg.cache_nodes)
        range_mode = range_mode or cfg.range_mode
        self.sim = Simulator(trace)
        self.net = Network(self.sim, seed)
        budget = cfg.cache_budget

        def cap(name):
            return budget if name in cache_nodes else 0

        self.nodes = {}
        self.nodes["client"] = HttpNode("client")
        self.nodes["csc"] = HttpNode(
            "csc", cache_capacity=cap("csc"),
            proxy=ProxyConfig("forward", ["int1", "int2"], lb_policy=lb_policy,
                              range_mode=range_mode))
        for name in ("int1", "int2"):
            self.nodes[name] = HttpNode(
                name, cache_capacity=cap(name),
                proxy=ProxyConfig("reverse", ["origin"], lb_policy="single",
                                  range_mode=range_mode))
        self.nodes["origin"] = HttpNode("origin")
        for node in self.nodes.values():
            self.net.add_node(node)
        for a, b, delay, loss in _link_specs(topo, loss_access, loss_upstream):
            self.net.add_link(a, b, delay, loss)
        self.nodes["origin"].publish(CONTENT_URL, size)
        self.plane = HttpPlane(self.net, mss=cfg.mss)

    def fetch(self, byte_range=None, cacheable: bool = True):
        holder = {}
        request = HttpRequest(CONTENT_URL, byte_range=byte_range,
                              cacheable=cacheable)
        self.plane.get("client", "csc", request,
                       lambda meta: holder.update(meta=meta))
        self.sim.run()
        return holder["meta"]

    @property
    def origin_touches(self) -> int:
        return self.nodes["origin"].counters.get("origin_touches", 0)

    def cache_bytes(self, node_name: str) -> int:
        cache = self.nodes[node_name].cache
        return cache.content_used if cache is not None else 0


def _planes(cfg: ScenarioConfig):
    return ["ndn", "http"] if cfg.plane == "both" else [cfg.plane]


def _reps(cfg: ScenarioConfig, reps=None):
    return range(cfg.repetitions) if reps is None else reps


# --- experiment A: goodput with and without loss ----------------------------

def run_experiment_A(cfg: ScenarioConfig, reps=None) -> ExperimentOutput:
    records = []
    for size in cfg.file_sizes:
        for rep in _reps(cfg, reps):
            for plane in _planes(cfg):
                for mode in ("lossless", "lossy"):
                    if mode == "lossless":
                        la, lu = cfg.loss_access, cfg.loss_upstream
                    else:
                        la, lu = cfg.lossy_access, cfg.lossy_upstream
                    seed = derive_seed(cfg.base_seed, "A", plane, size, mode, rep)
                    rec = MetricsRecord("A", plane, size, mode, rep)
                    if plane == "ndn":
                        world = NdnWorld(cfg, seed, size,
                                         loss_access=la, loss_upstream=lu)
                        res = world.fetch()
                        rec.ttfb_ms = res.ttfb
                        rec.completion_ms = res.completion
                        rec.delivered_bytes = res.delivered_bytes
                        rec.origin_touches = world.origin_touches
                        rec.success = res.success
                    else:
                        world = HttpWorld(cfg, seed, size,
                                          loss_access=la, loss_upstream=lu)
                        meta = world.fetch()
                        rec.ttfb_ms = meta.ttfb
                        rec.completion_ms = meta.completion
                        rec.delivered_bytes = meta.delivered_bytes
                        rec.origin_touches = world.origin_touches
                        rec.success = meta.success
                    records.append(rec)
    return ExperimentOutput(records, plot_files=_completion_plot("A", records))


# --- experiment B: time to first byte ---------------------------------------

def experiment_b_topologies(cfg: ScenarioConfig):
    topos = [dataclasses.replace(cfg.topology)]
    rng = make_rng(cfg.base_seed, "B", "topologies")
    for _ in range(cfg.random_topologies):
        topos.append(TopologyConfig(
            access_delay=float(rng.randint(5, 100)),
            csc_int1_delay=float(rng.randint(5, 100)),
            csc_int2_delay=float(rng.randint(5, 100)),
            int1_origin_delay=float(rng.randint(5, 100)),
            int2_origin_delay=float(rng.randint(5, 100))))
    return topos


def run_experiment_B(cfg: ScenarioConfig, reps=None) -> ExperimentOutput:
    size = cfg.file_sizes[0]
    records = []
    topos = experiment_b_topologies(cfg)
    for rep in _reps(cfg, reps):
        for ti, topo in enumerate(topos):
            for state in ("cold", "warm"):
                mode = f"{state}-topo{ti}"
                for plane in _planes(cfg):
                    seed = derive_seed(cfg.base_seed, "B", plane, ti, state, rep)
                    rec = MetricsRecord("B", plane, size, mode, rep)
                    if plane == "ndn":
                        world = NdnWorld(cfg, seed, size, topo=topo)
                        if state == "warm":
                            world.warm("csc",
                                       range(1, world.content.segment_count + 1))
                        res = world.fetch()
                        rec.ttfb_ms = res.ttfb
                        rec.completion_ms = res.completion
                        rec.delivered_bytes = res.delivered_bytes
                        rec.success = res.success
                    else:
                        world = HttpWorld(cfg, seed, size, topo=topo)
                        if state == "warm":
                            world.nodes["csc"].warm_cache(CONTENT_URL, size)
                        meta = world.fetch()
                        rec.ttfb_ms = meta.ttfb
                        rec.completion_ms = meta.completion
                        rec.delivered_bytes = meta.delivered_bytes
                        rec.success = meta.success
                    records.append(rec)
    details = {"topologies": topos}
    return ExperimentOutput(records, plot_files=_ttfb_plot(records),
                            details=details)


# --- experiment C: cache utilization after a source switch ------------------

def run_experiment_C(cfg: ScenarioConfig, reps=None) -> ExperimentOutput:
    size = cfg.file_sizes[0]
    records = []
    details = {}
    for rep in _reps(cfg, reps):
        for plane in _planes(cfg):
            seed = derive_seed(cfg.base_seed, "C", plane, rep)
            rec = MetricsRecord("C", plane, size, "switch", rep)
            if plane == "ndn":
                world = NdnWorld(cfg, seed, size)
                n = world.content.segment_count
                k = math.ceil(cfg.switch_fraction * n)
                face1 = world.face("csc", "int1")
                face2 = world.face("csc", "int2")
                csc = world.nodes["csc"]
                csc.scripted_chooser = (
                    lambda interest: face1
                    if (interest.name.segment() or 0) <= k else face2)
                res1 = world.fetch(label="first")
                csc.scripted_chooser = lambda interest: face2
                res2 = world.fetch(label="second")
                rec.completion_ms = res1.completion + res2.completion
                rec.delivered_bytes = res1.delivered_bytes + res2.delivered_bytes
                rec.success = res1.success and res2.success
                rec.origin_touches = world.origin_touches
                rec.cache1_bytes = world.cache_bytes("int1")
                rec.cache2_bytes = world.cache_bytes("int2")
                details.setdefault("switch_segment", k)
            else:
                world = HttpWorld(cfg, seed, size, lb_policy="round_robin")
                meta1 = world.fetch()
                meta2 = world.fetch()
                rec.completion_ms = meta1.completion + meta2.completion
                rec.delivered_bytes = (meta1.delivered_bytes
                                       + meta2.delivered_bytes)
                rec.success = meta1.success and meta2.success
                rec.origin_touches = world.origin_touches
                rec.cache1_bytes = world.cache_bytes("int1")
                rec.cache2_bytes = world.cache_bytes("int2")
            records.append(rec)
    return ExperimentOutput(records, plot_files=_cache_plot(records),
                            details=details)


# --- experiment D: partial retrieval ----------------------------------------

def run_experiment_D(cfg: ScenarioConfig, reps=None) -> ExperimentOutput:
    size = cfg.file_sizes[0]
    records = []
    warm_last = math.ceil(cfg.warm_bytes / cfg.chunk_size)
    for rep in _reps(cfg, reps):
        for nbytes in cfg.ranges:
            byte_range = (0, nbytes - 1)
            for plane in _planes(cfg):
                if plane == "ndn":
                    seed = derive_seed(cfg.base_seed, "D", plane, nbytes, rep)
                    world = NdnWorld(cfg, seed, size)
                    world.warm("int1", range(1, warm_last + 1))
                    before = 0
                    for i in range(cfg.range_repeats):
                        res = world.fetch(byte_range=byte_range, label=f"r{i}")
                        touches = world.origin_touches
                        rec = MetricsRecord("D", plane, nbytes, "ndn-warm",
                                            rep * cfg.range_repeats + i)
                        rec.ttfb_ms = res.ttfb
                        rec.completion_ms = res.completion
                        rec.delivered_bytes = res.delivered_bytes
                        rec.success = res.success
                        rec.origin_touches = touches - before
                        rec.cache1_bytes = world.cache_bytes("int1")
                        rec.cache2_bytes = world.cache_bytes("int2")
                        before = touches
                        records.append(rec)
                else:
                    for range_mode in ("bypass", "full_fetch"):
                        seed = derive_seed(cfg.base_seed, "D", plane, nbytes,
                                           range_mode, rep)
                        world = HttpWorld(cfg, seed, size, range_mode=range_mode)
                        before = 0
                        for i in range(cfg.range_repeats):
                            meta = world.fetch(byte_range=byte_range)
                            touches = world.origin_touches
                            rec = MetricsRecord("D", plane, nbytes, range_mode,
                                                rep * cfg.range_repeats + i)
                            rec.ttfb_ms = meta.ttfb
                            rec.completion_ms = meta.completion
                            rec.delivered_bytes = meta.delivered_bytes
                            rec.success = meta.success
                            rec.origin_touches = touches - before
                            rec.cache1_bytes = world.cache_bytes("int1")
                            rec.cache2_bytes = world.cache_bytes("int2")
                            before = touches
                            records.append(rec)
    return ExperimentOutput(records, plot_files=_completion_plot("D", records))


# --- experiment E: transparent failover -------------------------------------

def run_experiment_E(cfg: ScenarioConfig, reps=None) -> ExperimentOutput:
    size = cfg.file_sizes[0]
    window = (cfg.kill_time - 500.0, cfg.kill_time + 1500.0)
    records = []
    details = {"ndn_results": [], "kill_time": cfg.kill_time}
    for rep in _reps(cfg, reps):
        for plane in _planes(cfg):
            seed = derive_seed(cfg.base_seed, "E", plane, rep)
            rec = MetricsRecord("E", plane, size, "failover", rep)
            if plane == "ndn":
                world = NdnWorld(cfg, seed, size)
                world.net.schedule_kill(cfg.kill_time, cfg.kill_node)
                res = world.fetch()
                rec.ttfb_ms = res.ttfb
                rec.completion_ms = res.completion
                rec.delivered_bytes = res.delivered_bytes
                rec.success = res.success
                rec.max_gap_ms = max_gap([t for t, _, _ in res.arrivals],
                                         window=window)
                details["ndn_results"].append(res)
            else:
                world = HttpWorld(cfg, seed, size, lb_policy="round_robin")
                world.net.schedule_kill(cfg.kill_time, cfg.kill_node)
                meta = world.fetch()
                rec.ttfb_ms = meta.ttfb
                rec.completion_ms = meta.completion
                rec.delivered_bytes = meta.delivered_bytes
                rec.success = meta.success
                rec.max_gap_ms = max_gap([t for t, _ in meta.arrivals],
                                         window=window)
            records.append(rec)
    return ExperimentOutput(records, plot_files=_completion_plot("E", records),
                            details=details)


# --- experiment F: automatic path switching ---------------------------------

def run_experiment_F(cfg: ScenarioConfig, reps=None) -> ExperimentOutput:
    size = cfg.file_sizes[0]
    records = []
    details = {"ndn_series": [], "http_series": [],
               "degrade_time": cfg.degrade_time}
    for rep in _reps(cfg, reps):
        for plane in _planes(cfg):
            seed = derive_seed(cfg.base_seed, "F", plane, rep)
            rec = MetricsRecord("F", plane, size, "degrade", rep)
            if plane == "ndn":
                world = NdnWorld(cfg, seed, size,
                                 strategy="weighted-best-path")
                world.install_quality_oracle("csc")
                world.net.schedule_link_change(
                    cfg.degrade_time, "csc", "int1",
                    delay=cfg.degrade_delay, loss=cfg.degrade_loss)
                res = world.fetch()
                rec.ttfb_ms = res.ttfb
                rec.completion_ms = res.completion
                rec.delivered_bytes = res.delivered_bytes
                rec.success = res.success
                details["ndn_series"].append(list(world.chosen_series))
                details.setdefault("ndn_arrivals", []).append(
                    [(t, b) for t, _, b in res.arrivals])
            else:
                world = HttpWorld(cfg, seed, size, lb_policy="single")
                world.net.schedule_link_change(
                    cfg.degrade_time, "csc", "int1",
                    delay=cfg.degrade_delay, loss=cfg.degrade_loss)
                meta = world.fetch()
                rec.ttfb_ms = meta.ttfb
                rec.completion_ms = meta.completion
                rec.delivered_bytes = meta.delivered_bytes
                rec.success = meta.success
                # The chain picks its upstream once; it stays on the
                # degraded path for the life of the transfer.
                ticks = []
                t = 0.0
                while meta.completion is not None and t <= meta.completion:
                    ticks.append((t, "int1"))
                    t += cfg.strategy_interval
                details["http_series"].append(ticks)
            records.append(rec)
    return ExperimentOutput(records, plot_files=_completion_plot("F", records),
                            details=details)


RUNNERS = {
    "A": run_experiment_A,
    "B": run_experiment_B,
    "C": run_experiment_C,
    "D": run_experiment_D,
    "E": run_experiment_E,
    "F": run_experiment_F,
}


def run_experiment(cfg: ScenarioConfig, reps=None) -> ExperimentOutput:
    return RUNNERS[cfg.experiment](cfg, reps=reps)


# --- plot-data files --------------------------------------------------------

def _completion_plot(exp: str, records) -> dict:
    rows, _ = summarize(records)
    lines = ["# plane mode size_bytes completion_median_ms"]
    for row in rows:
        _, plane, size, mode = row[0], row[1], row[2], row[3]
        median = row[10]
        if median is not None:
            lines.append(f"{plane} {mode} {size} {format(median, '.10g')}")
    return {f"fig_{exp}.dat": "\n".join(lines) + "\n"}


def _ttfb_plot(records) -> dict:
    rows, _ = summarize(records)
    lines = ["# plane mode size_bytes ttfb_median_ms"]
    for row in rows:
        plane, size, mode, median = row[1], row[2], row[3], row[7]
        if median is not None:
            lines.append(f"{plane} {mode} {size} {format(median, '.10g')}")
    return {"fig_B.dat": "\n".join(lines) + "\n"}


def _cache_plot(records) -> dict:
    lines = ["# plane seed cache1_bytes cache2_bytes"]
    for rec in records:
        lines.append(f"{rec.plane} {rec.seed} {rec.cache1_bytes} {rec.cache2_bytes}")
    return {"fig_C.dat": "\n".join(lines) + "\n"}
