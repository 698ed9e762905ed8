"""Pydantic request/response models for the planning service."""

from __future__ import annotations

from typing import Optional

from pydantic import BaseModel, Field


class GenerateRequest(BaseModel):
    kind: str
    seed: int = 0


class GenerateResponse(BaseModel):
    scenario: dict


class PlanRequestModel(BaseModel):
    scenario: dict
    mode: str = "reachability"
    graph_seed: int = 0
    instance_seed: int = 0
    nodes: Optional[int] = None
    knn: Optional[int] = None
    steps_per_phase: Optional[int] = None
    timeout: float = 120.0
    dumps: list[str] = Field(default_factory=list)


class PlanResponseModel(BaseModel):
    success: bool
    actions: list[str]
    planning_time: float
    base_path_length: float
    steps: int
    failure_reason: Optional[str] = None
    stats: dict = Field(default_factory=dict)
    dumps: dict[str, str] = Field(default_factory=dict)


class BenchRequestModel(BaseModel):
    kind: str
    runs: int = 1
    seed_base: int = 0
    modes: list[str] = Field(default_factory=lambda: ["reachability"])
    nodes: Optional[int] = None
    knn: Optional[int] = None
    steps_per_phase: Optional[int] = None
    timeout: float = 120.0
    dump_graph: bool = False
    dump_library: bool = False
    dump_traj: bool = False


class BenchResponseModel(BaseModel):
    rows: list[dict]
    aggregates: list[dict]
    csv: str
    dumps: dict[str, str] = Field(default_factory=dict)


class DumpRequestModel(BaseModel):
    kind: str  # graph | library | traj
    scenario: dict
    mode: str = "reachability"
    graph_seed: int = 0
    nodes: Optional[int] = None
    knn: Optional[int] = None
    timeout: float = 120.0


class DumpResponseModel(BaseModel):
    kind: str
    content: str


class ErrorBody(BaseModel):
    error: str
    detail: str
