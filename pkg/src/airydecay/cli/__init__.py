from .app import RunConfig, build_parser, main
from .report import CriterionResult, Report, Status
from .schema import Column, DataType, Table
