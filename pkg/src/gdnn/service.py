"""HTTP API for the interactive architecture builder.

Sessions hold an admissible prefix; the server refuses layer additions that
would break the layerwise condition, so every export is admissible by
construction. All group/theta tables are shared immutable state; session
mutations take a per-session lock.
"""

from __future__ import annotations

import threading
import time
import uuid
from concurrent.futures import ThreadPoolExecutor

import numpy as np
from fastapi import FastAPI, HTTPException
from fastapi.middleware.cors import CORSMiddleware
from pydantic import BaseModel

from gdnn import group_core as gc
from gdnn import admissibility as adm
from gdnn.equivariant_basis import build_basis
from gdnn.group_core import SubgroupPair, UnknownName
from gdnn.reps import LayerRep, irrep

SESSION_IDLE_SECONDS = 24 * 3600

# groups small enough for full pair enumeration, plus the product-task group
# (whose catalog is curated: its full subgroup lattice is out of reach, but
# the experiment pairs are exactly what the builder needs)
SERVICE_GROUPS = ["C8", "C2xC4", "C2^3", "D4", "Q8", "Z6_cyclic_perms", "Icosahedral", "BinProd(16)"]
CURATED = {"BinProd(16)"}


class BuilderSession:
    def __init__(self, group_name):
        self.id = uuid.uuid4().hex
        self.group_name = group_name
        self.layers = []  # list of list[(pair id, mult)]
        self.created = time.time()
        self.updated = self.created
        self.lock = threading.Lock()

    def touch(self):
        self.updated = time.time()

    def expired(self, horizon=SESSION_IDLE_SECONDS):
        return time.time() - self.updated > horizon


class LayerRequest(BaseModel):
    pairs: list  # list of {"id": str, "mult": int}


class SessionRequest(BaseModel):
    group: str


class CountRequest(BaseModel):
    group: str
    mode: str = "gdnn"
    max_depth: int | None = None


def _pair_id(pair):
    h = "-".join(map(str, pair.H.members))
    k = "-".join(map(str, pair.K.members))
    return f"{h}_{k}"


class Registry:
    """Shared immutable group data plus per-group pair catalogs."""

    def __init__(self, names=None):
        self.names = names or SERVICE_GROUPS
        self._groups = {}
        self._catalog = {}

    def group(self, name):
        if name not in self.names:
            raise UnknownName(name)
        if name not in self._groups:
            self._groups[name] = gc.named_group(name)
        return self._groups[name]

    def catalog(self, name):
        """pair id -> canonical class representative."""
        if name not in self._catalog:
            G = self.group(name)
            if name in CURATED:
                from gdnn.train import binprod_architectures

                m = G.degree
                pairs = {}
                for arch in binprod_architectures(m).values():
                    for layer in arch.layers:
                        for rep, _ in layer.summands:
                            pairs[_pair_id(rep.pair)] = rep.pair
                self._catalog[name] = pairs
            else:
                table = adm.pair_table(G)
                self._catalog[name] = {
                    _pair_id(cls.representative): cls.representative for cls in table.classes
                }
        return self._catalog[name]


def _pair_info(pair):
    return {
        "id": _pair_id(pair),
        "H": list(pair.H.members),
        "K": list(pair.K.members),
        "degree": pair.rep_degree,
        "type": pair.index,
        "order_H": pair.H.order,
        "order_K": pair.K.order,
    }


def create_app(registry=None):
    registry = registry or Registry()
    app = FastAPI(title="gdnn builder service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    sessions = {}
    sessions_lock = threading.Lock()
    jobs = {}
    pool = ThreadPoolExecutor(max_workers=2)

    def get_session(sid) -> BuilderSession:
        with sessions_lock:
            sess = sessions.get(sid)
        if sess is None or sess.expired():
            raise HTTPException(status_code=404, detail="unknown session")
        return sess

    def session_layers(sess):
        G = registry.group(sess.group_name)
        catalog = registry.catalog(sess.group_name)
        layers = []
        for layer in sess.layers:
            summands = [(irrep(catalog[pid]), mult) for pid, mult in layer]
            layers.append(LayerRep(summands))
        return G, layers

    @app.get("/api/groups")
    def groups():
        out = []
        for name in registry.names:
            G = registry.group(name)
            out.append({"name": name, "order": G.order, "degree": G.degree})
        return out

    @app.get("/api/groups/{name}/pairs")
    def group_pairs(name):
        try:
            catalog = registry.catalog(name)
        except UnknownName:
            raise HTTPException(status_code=404, detail="unknown group")
        return [_pair_info(p) for p in catalog.values()]

    @app.post("/api/sessions")
    def create_session(req: SessionRequest):
        try:
            registry.group(req.group)
        except UnknownName:
            raise HTTPException(status_code=404, detail="unknown group")
        sess = BuilderSession(req.group)
        with sessions_lock:
            sessions[sess.id] = sess
        return session_state(sess.id)

    @app.get("/api/sessions/{sid}")
    def session_state(sid):
        sess = get_session(sid)
        return {
            "id": sess.id,
            "group": sess.group_name,
            "layers": [[{"id": pid, "mult": m} for pid, m in layer] for layer in sess.layers],
            "created": sess.created,
            "updated": sess.updated,
        }

    @app.get("/api/sessions/{sid}/admissible-next")
    def admissible_next_route(sid, strict_decrease: bool = False):
        sess = get_session(sid)
        G, layers = session_layers(sess)
        degree_filter = None
        if strict_decrease and layers:
            degree_filter = min(rep.degree for rep, _ in layers[-1].summands)
        if sess.group_name in CURATED:
            prefix_hs = [rep.H for layer in layers for rep, _ in layer.summands]
            options = []
            for pair in registry.catalog(sess.group_name).values():
                if degree_filter is not None and pair.rep_degree >= degree_filter:
                    continue
                sub = adm.phi(prefix_hs, G, pair.H, pair.K)
                if sub.members == pair.K.members:
                    options.append(pair)
            options.sort(key=lambda p: (-p.rep_degree, p.key()))
        else:
            options = adm.admissible_next(layers, G, degree_filter=degree_filter)
        return [_pair_info(p) for p in options]

    @app.post("/api/sessions/{sid}/layers")
    def add_layer(sid, req: LayerRequest):
        sess = get_session(sid)
        with sess.lock:
            G, layers = session_layers(sess)
            catalog = registry.catalog(sess.group_name)
            try:
                summands = [(irrep(catalog[p["id"]]), p.get("mult", 1)) for p in req.pairs]
            except KeyError as e:
                raise HTTPException(status_code=404, detail=f"unknown pair {e}")
            candidate = layers + [LayerRep(summands)]
            prefix_hs = []
            for li, layer in enumerate(candidate):
                for si, (rep, _) in enumerate(layer.summands):
                    sub = adm.phi(prefix_hs, G, rep.H, rep.K)
                    if sub.members != rep.K.members:
                        raise HTTPException(
                            status_code=409,
                            detail={
                                "failing_layer": li,
                                "phi_subgroup": list(sub.members),
                                "expected_K": list(rep.K.members),
                            },
                        )
                prefix_hs.extend(rep.H for rep, _ in layer.summands)
            sess.layers.append([(p["id"], p.get("mult", 1)) for p in req.pairs])
            sess.touch()
        return session_state(sid)

    @app.delete("/api/sessions/{sid}/layers/last")
    def remove_layer(sid):
        sess = get_session(sid)
        with sess.lock:
            if not sess.layers:
                raise HTTPException(status_code=409, detail="no layers to remove")
            sess.layers.pop()
            sess.touch()
        return session_state(sid)

    @app.get("/api/sessions/{sid}/export")
    def export(sid):
        from fastapi import Response

        sess = get_session(sid)
        G, layers = session_layers(sess)
        trivial = LayerRep([(irrep(SubgroupPair(G.full_subgroup(), G.full_subgroup())), 1)])
        if not layers or layers[-1].to_json() != trivial.to_json():
            layers = layers + [trivial]
        arch = adm.ArchitectureSpec(G, layers)
        report = adm.is_admissible(arch)
        if not report.admissible:
            raise HTTPException(status_code=409, detail=report.to_json())
        # canonical bytes so client-side exports can match byte for byte
        return Response(content=arch.to_json_str(), media_type="application/json")

    @app.get("/api/pairs/{name}/{pair_id}/pattern")
    def pattern(name, pair_id):
        try:
            catalog = registry.catalog(name)
        except UnknownName:
            raise HTTPException(status_code=404, detail="unknown group")
        if pair_id not in catalog:
            raise HTTPException(status_code=404, detail="unknown pair")
        G = registry.group(name)
        rep = irrep(catalog[pair_id])

        class _Input:
            degree = G.degree

            @staticmethod
            def evaluate(g):
                return G.elements[g]

        basis = build_basis(rep, _Input, G.generator_indices)
        return basis.to_json()

    @app.post("/api/count")
    def count(req: CountRequest):
        try:
            G = registry.group(req.group)
        except UnknownName:
            raise HTTPException(status_code=404, detail="unknown group")
        if req.mode not in ("gdnn", "crelu"):
            raise HTTPException(status_code=422, detail="mode must be gdnn or crelu")
        job_id = uuid.uuid4().hex

        def work():
            rows = adm.count_architectures(G, mode=req.mode, max_depth=req.max_depth)
            return [
                {"depth": r.depth, "admissible": r.admissible, "total": r.total, "mode": r.mode}
                for r in rows
            ]

        jobs[job_id] = pool.submit(work)
        return {"job": job_id}

    @app.get("/api/count/{job_id}")
    def count_result(job_id):
        fut = jobs.get(job_id)
        if fut is None:
            raise HTTPException(status_code=404, detail="unknown job")
        if not fut.done():
            return {"status": "running"}
        return {"status": "done", "rows": fut.result()}

    @app.post("/api/sessions/{sid}/smoke")
    def smoke(sid):
        from gdnn.model import GDNNModel, init_weights, invariance_deviation

        sess = get_session(sid)
        G, layers = session_layers(sess)
        trivial = LayerRep([(irrep(SubgroupPair(G.full_subgroup(), G.full_subgroup())), 1)])
        if not layers or layers[-1].to_json() != trivial.to_json():
            layers = layers + [trivial]
        arch = adm.ArchitectureSpec(G, layers)
        model = GDNNModel(arch, strict=False)
        weights = init_weights(model, seed=0)
        xs = np.random.default_rng(0).normal(size=(8, model.block_width[0]))
        dev = invariance_deviation(model, weights, xs, generators_only=False)
        return {"invariance_deviation": dev, "admissible": model.admissibility.admissible}

    return app
