# Copyright 2026 Hasan Mavlonov
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.

# core/errors.py
"""
Exception hierarchy shared by the library and the CLI.

Every error carries an ``exit_code`` so ``cli.py`` can map failures to
process exit codes without inspecting messages:

    2  input could not be parsed / configured
    3  a solver did not converge
    4  a pricing precondition or model invariant failed
"""

from __future__ import annotations

EXIT_PARSE = 2
EXIT_SOLVER = 3
EXIT_INVARIANT = 4


class RpksError(Exception):
    exit_code = EXIT_INVARIANT


# ---------- parse family ----------
class ParseError(RpksError):
    exit_code = EXIT_PARSE

    def __init__(self, message: str, row: int | None = None, column: str | None = None):
        where = []
        if row is not None:
            where.append(f"row {row}")
        if column is not None:
            where.append(f"column '{column}'")
        if where:
            message = f"{message} ({', '.join(where)})"
        super().__init__(message)
        self.row = row
        self.column = column


class ConfigError(ParseError):
    pass


# ---------- solver family ----------
class SolverError(RpksError):
    exit_code = EXIT_SOLVER


class NoRoot(SolverError):
    pass


class SolverFail(SolverError):
    def __init__(self, message: str, best: object = None):
        super().__init__(message)
        self.best = best


class NoConvergence(SolverError):
    pass


class QuadratureNoConvergence(SolverError):
    pass


# ---------- invariant / pricing family ----------
class InvariantViolation(RpksError):
    pass


class DomainError(RpksError):
    pass


class NegativeTime(RpksError):
    pass


class OrderError(RpksError):
    pass


class DampingInfeasible(RpksError):
    pass


class MissingFixing(RpksError):
    pass


class NonPositiveCurve(RpksError):
    pass


class EmptySchedule(RpksError):
    pass


class WrongSpecKind(RpksError):
    pass


class NonAdditiveSpec(RpksError):
    pass


class MissingLiborCurve(RpksError):
    pass


class NoOverlap(RpksError):
    pass


class PriceOutOfBounds(RpksError):
    pass


class InsufficientStrikes(RpksError):
    pass


class UnsupportedTrade(RpksError):
    pass


class SeedMissing(RpksError):
    pass


class IdentifiabilityWarning(UserWarning):
    """b^R cannot be identified when the convexity channel is switched off."""
