"""Request and response models for the HTTP service."""
from __future__ import annotations

from typing import Any, Dict, List, Optional

from pydantic import BaseModel, Field


class HealthResponse(BaseModel):
    status: str
    package: str
    version: str


class CasesResponse(BaseModel):
    cases: List[str]


class RunRequest(BaseModel):
    command: str = Field(description="analyze | energy | critical | "
                                     "minimize-profile | stability | "
                                     "reproduce")
    config_text: Optional[str] = Field(
        default=None, description="flat key = value configuration")
    overrides: Optional[Dict[str, Any]] = Field(
        default=None, description="single-key overrides applied on top")
    case: Optional[str] = Field(
        default=None, description="reproduction case for command=reproduce")


class EnergyRequest(BaseModel):
    config_text: Optional[str] = None
    overrides: Optional[Dict[str, Any]] = None


class TableModel(BaseModel):
    name: str
    header: List[str]
    rows: List[List[Any]]


class RunResponse(BaseModel):
    command: str
    report: Dict[str, Any]
    tables: List[TableModel] = []
    plotdata: List[TableModel] = []
    exit_code: int = 0
