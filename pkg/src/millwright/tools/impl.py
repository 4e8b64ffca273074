"""Tool implementations binding the manifest to the deterministic analytics.

Every tool is a pure function of its arguments plus loaded resources; side
effects are limited to session slots (live artifacts downstream calls read)
and the audited artifact cache written by the executor.
"""

from __future__ import annotations

import csv
from dataclasses import dataclass, field
from pathlib import Path
from typing import Any, Callable

from millwright import blade
from millwright.errors import ResourceMissing, ToolError
from millwright.kg.retrieval import RetrievalConfig, retrieve
from millwright.kg.store import TripleStore
from millwright.session import ResourceHandle, SessionState
from millwright.tools.registry import ToolRegistry, load_manifest

COMP_STRATEGIES = ("mean-deviation", "drift-at-target", "bounded-residual")


@dataclass
class ToolContext:
    state: SessionState
    kg_store: TripleStore | None = None
    retrieval_config: RetrievalConfig = field(default_factory=RetrievalConfig)
    embedder: Any = None
    theta_default: float = blade.DEFAULT_TILT_DEG
    comp_bound: float = 0.010

    # -- slots: live artifacts shared along a call chain --------------------

    def set_slot(self, name: str, value: Any) -> None:
        self.state._artifacts[f"slot:{name}"] = value

    def slot(self, name: str) -> Any:
        return self.state._artifacts.get(f"slot:{name}")

    def require_slot(self, name: str, hint: str) -> Any:
        value = self.slot(name)
        if value is None:
            raise ResourceMissing(f"resource missing: {hint}")
        return value

    # -- resource resolution -------------------------------------------------

    def resource(self, kind: str, name: str | None = None) -> ResourceHandle:
        if name is not None:
            handle = self.state.resources.get(name)
            if handle is None or handle.kind != kind:
                raise ResourceMissing(f"resource missing: no {kind} named {name!r}")
            return handle
        matches = [h for h in self.state.resources.values() if h.kind == kind]
        if not matches:
            raise ResourceMissing(f"resource missing: no {kind} loaded")
        if len(matches) > 1:
            raise ToolError(f"ambiguous {kind}: {len(matches)} loaded, name one")
        return matches[0]


def _read_inspection(handle: ResourceHandle) -> list[dict]:
    with Path(handle.uri).open(newline="") as fh:
        return list(csv.DictReader(fh))


def _read_pathing(handle: ResourceHandle) -> dict[str, float]:
    with Path(handle.uri).open(newline="") as fh:
        reader = csv.DictReader(fh)
        return {row["pair_key"]: float(row["r_k"]) for row in reader}


def _scope(ctx: ToolContext, parts: tuple[int, int] | None,
           pair_keys: list[str] | None) -> tuple[blade.PairingResult, list[str], range | None]:
    pairing = ctx.require_slot("pairing", "inspection pairs not computed")
    keys = pair_keys if pair_keys else pairing.pair_keys()
    window = range(parts[0], parts[1] + 1) if parts else None
    return pairing, keys, window


def _series(ctx: ToolContext, pairing: blade.PairingResult, key: str,
            window: range | None) -> blade.PairSeries:
    return pairing.series(key, parts=window, pathing=ctx.slot("pathing"))


# -- implementations ---------------------------------------------------------

def tool_compute_inspection_pairs(ctx: ToolContext, resource: str | None = None) -> dict:
    handle = ctx.resource("inspection-csv", resource)
    pairing = blade.compute_inspection_pairs(_read_inspection(handle))
    ctx.set_slot("pairing", pairing)
    parts = {m.part_index for m in pairing.measurements}
    return {
        "n_pairs": len(pairing.pair_keys()),
        "n_parts": len(parts),
        "n_rows": len(pairing.measurements),
        "n_unmatched": len(pairing.unmatched),
    }


def tool_fetch_inspection_slices(ctx: ToolContext, parts=None, pair_keys=None) -> dict:
    pairing, keys, window = _scope(ctx, parts, pair_keys)
    result = blade.fetch_inspection_slices(
        pairing, parts=parts, pair_keys=pair_keys)
    ctx.set_slot(f"slice:{result.cache_key}", result)
    fields = {"n_slice_rows": len(result.rows), "slice_key": result.cache_key}
    if result.warning:
        fields["warning"] = result.warning
    return fields


def tool_rb_compute_values(ctx: ToolContext, pair_key: str, parts=None) -> dict:
    pairing, _, window = _scope(ctx, parts, [pair_key])
    series = _series(ctx, pairing, pair_key, window)
    values = blade.rb_compute_values([s for _, s in series.parts])
    return {f"values[{pair_key}]": values}


def tool_rb_compute_average(ctx: ToolContext, parts=None, pair_keys=None) -> dict:
    pairing, keys, window = _scope(ctx, parts, pair_keys)
    fields: dict[str, Any] = {}
    all_values: list[float] = []
    for key in keys:
        series = _series(ctx, pairing, key, window)
        values = [s for _, s in series.parts]
        if not values:
            raise ToolError(f"no rows for pair {key} in the selected window")
        fields[f"avg[{key}]"] = blade.rb_compute_average(values)
        all_values.extend(values)
    fields["avg"] = blade.rb_compute_average(all_values)
    return fields


def tool_rb_compute_std_dev(ctx: ToolContext, parts=None, pair_keys=None) -> dict:
    pairing, keys, window = _scope(ctx, parts, pair_keys)
    fields: dict[str, Any] = {}
    all_values: list[float] = []
    for key in keys:
        series = _series(ctx, pairing, key, window)
        values = [s for _, s in series.parts]
        fields[f"std[{key}]"] = blade.rb_compute_std_dev(values)
        all_values.extend(values)
    fields["std"] = blade.rb_compute_std_dev(all_values)
    return fields


def tool_rb_compute_level(ctx: ToolContext, pair_key: str) -> dict:
    return {f"level[{pair_key}]": blade.rb_compute_level(pair_key)}


def tool_rb_compute_position_in_level(ctx: ToolContext, pair_key: str) -> dict:
    return {f"position[{pair_key}]": blade.rb_compute_position_in_level(pair_key)}


def tool_rb_compute_pathing_dev(ctx: ToolContext, resource: str | None = None,
                                pair_keys=None) -> dict:
    handle = ctx.resource("pathing-field", resource)
    field_map = blade.rb_compute_pathing_dev(_read_pathing(handle), pair_keys)
    ctx.set_slot("pathing", field_map)
    fields: dict[str, Any] = {f"p[{key}]": p for key, (_r, p) in field_map.entries.items()}
    fields["n_keys"] = len(field_map.entries)
    return fields


def _fits(ctx: ToolContext, parts, pair_keys) -> dict[str, blade.DriftFit]:
    pairing, keys, window = _scope(ctx, parts, pair_keys)
    fits = {}
    for key in keys:
        fits[key] = blade.rb_compute_wear_drift(_series(ctx, pairing, key, window))
    return fits


def tool_rb_compute_wear_drift(ctx: ToolContext, parts=None, pair_keys=None) -> dict:
    fields: dict[str, Any] = {}
    for key, fit in _fits(ctx, parts, pair_keys).items():
        fields[f"b[{key}]"] = fit.b
        fields[f"c[{key}]"] = fit.c
        fields[f"w_d[{key}]"] = fit.w_d
    return fields


def tool_rb_compute_process_variability(ctx: ToolContext, parts=None, pair_keys=None) -> dict:
    fields: dict[str, Any] = {}
    for key, fit in _fits(ctx, parts, pair_keys).items():
        fields[f"w_v[{key}]"] = blade.rb_compute_process_variability(fit)
    return fields


def tool_rb_compute_residual_systematic(ctx: ToolContext, parts=None, pair_keys=None) -> dict:
    fields: dict[str, Any] = {}
    for key, fit in _fits(ctx, parts, pair_keys).items():
        fields[f"c[{key}]"] = blade.rb_compute_residual_systematic(fit)
    return fields


def tool_rb_compute_attribution_fractions(ctx: ToolContext, target: int | None = None,
                                          eps: float = blade.DEFAULT_EPS,
                                          parts=None, pair_keys=None) -> dict:
    pathing = ctx.slot("pathing")
    fields: dict[str, Any] = {}
    fits = _fits(ctx, parts, pair_keys)
    for key, fit in fits.items():
        n_star = target if target is not None else int(fit.part_indices[-1])
        p_k = pathing.p(key) if pathing is not None else 0.0
        res = blade.rb_compute_attribution_fractions(p_k, fit, n_star, eps)
        fields[f"phi_p[{key}]"] = res.phi_p
        fields[f"phi_c[{key}]"] = res.phi_c
        fields[f"phi_d[{key}]"] = res.phi_d
        if res.psi_v is not None:
            fields[f"psi_v[{key}]"] = res.psi_v
        fields[f"s_hat[{key}]"] = res.s_hat
    return fields


def _delta_for(ctx: ToolContext, key: str, fit: blade.DriftFit, p_k: float,
               strategy: str, target: int | None, bound: float) -> float:
    if strategy == "mean-deviation":
        return fit.u_bar + p_k  # mean of s over the fitted window
    if strategy == "drift-at-target":
        n_star = target if target is not None else int(fit.part_indices[-1])
        return fit.b * (n_star - 1)
    if strategy == "bounded-residual":
        return max(-bound, min(bound, fit.c))
    raise ToolError(f"unknown compensation strategy {strategy!r}; "
                    f"choose one of {COMP_STRATEGIES}")


def tool_rb_compute_pair_tool_comp(ctx: ToolContext, parts=None, pair_keys=None,
                                   strategy: str = "mean-deviation",
                                   theta: float | None = None,
                                   target: int | None = None,
                                   bound: float | None = None) -> dict:
    theta = theta if theta is not None else ctx.theta_default
    bound = bound if bound is not None else ctx.comp_bound
    pathing = ctx.slot("pathing")
    fields: dict[str, Any] = {"strategy": strategy}
    vectors = []
    for key, fit in _fits(ctx, parts, pair_keys).items():
        p_k = pathing.p(key) if pathing is not None else 0.0
        delta = _delta_for(ctx, key, fit, p_k, strategy, target, bound)
        vec = blade.rb_compute_pair_tool_comp(delta, theta, pair_key=key)
        vectors.append(vec)
        fields[f"Trc[{key}]"] = vec.t_r
        fields[f"Tlc[{key}]"] = vec.t_l
        fields[f"delta[{key}]"] = vec.delta
    ctx.set_slot("compensation", vectors)
    return fields


def tool_rb_compute_tool_length(ctx: ToolContext, delta: float,
                                theta: float | None = None) -> dict:
    theta = theta if theta is not None else ctx.theta_default
    return {"t_l": blade.rb_compute_tool_length(delta, theta)}


def tool_rb_compute_radius_offset(ctx: ToolContext, delta: float,
                                  theta: float | None = None) -> dict:
    theta = theta if theta is not None else ctx.theta_default
    return {"t_r": blade.rb_compute_radius_offset(delta, theta)}


def tool_kg_initial(ctx: ToolContext, store_dir: str | None = None,
                    corpus: str | None = None) -> dict:
    if ctx.kg_store is None:
        if ctx.embedder is None:
            raise ToolError("kg_initial: no embedder configured")
        if store_dir:
            ctx.kg_store = TripleStore.load(store_dir, ctx.embedder)
        elif corpus:
            ctx.kg_store = TripleStore(ctx.embedder)
            for path in sorted(Path(corpus).glob("*.tsv")):
                ctx.kg_store.ingest_tsv(path)
        else:
            raise ResourceMissing("resource missing: no knowledge store configured")
    return {"n_triples": len(ctx.kg_store)}


def tool_kg_retrieve(ctx: ToolContext, query: str) -> dict:
    if ctx.kg_store is None:
        raise ResourceMissing("resource missing: knowledge store not initialized")
    result = retrieve(query, ctx.retrieval_config, ctx.embedder, ctx.kg_store)
    ctx.set_slot("retrieval", result)
    return {
        "n_selected": len(result.selected),
        "n_expanded": len(result.expanded),
        "tau": result.tau,
        "pool_size": result.pool_size,
        "evidence_ids": result.all_ids(),
    }


IMPLEMENTATIONS: dict[str, Callable] = {
    "compute_inspection_pairs": tool_compute_inspection_pairs,
    "rb_compute_surface_dev": tool_compute_inspection_pairs,  # legacy alias
    "fetch_inspection_slices": tool_fetch_inspection_slices,
    "rb_compute_values": tool_rb_compute_values,
    "rb_compute_average": tool_rb_compute_average,
    "rb_compute_std_dev": tool_rb_compute_std_dev,
    "rb_compute_level": tool_rb_compute_level,
    "rb_compute_position_in_level": tool_rb_compute_position_in_level,
    "rb_compute_pathing_dev": tool_rb_compute_pathing_dev,
    "rb_compute_wear_drift": tool_rb_compute_wear_drift,
    "rb_compute_process_variability": tool_rb_compute_process_variability,
    "rb_compute_residual_systematic": tool_rb_compute_residual_systematic,
    "rb_compute_attribution_fractions": tool_rb_compute_attribution_fractions,
    "rb_compute_tool_length": tool_rb_compute_tool_length,
    "rb_compute_radius_offset": tool_rb_compute_radius_offset,
    "rb_compute_pair_tool_comp": tool_rb_compute_pair_tool_comp,
    "kg_initial": tool_kg_initial,
    "kg_retrieve": tool_kg_retrieve,
}


def build_registry(manifest_path: str | None = None) -> ToolRegistry:
    registry = ToolRegistry()
    for spec in load_manifest(manifest_path):
        impl = IMPLEMENTATIONS.get(spec.name)
        if impl is None:
            raise ToolError(f"manifest names {spec.name} but no implementation exists")
        registry.register(spec, impl)
    return registry
