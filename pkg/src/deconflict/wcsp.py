"""Weighted-CSP view of a conflict: integer formalization, the standard
``.wcsp`` text format (writer and reader), an exhaustive evaluator used as a
test oracle, and the adapter that hands instances to an external solver
binary.

Variables are the aircraft, domain values their cost-sorted trajectories,
unary soft costs the scaled fuel costs, and binary hard constraints the
incompatible trajectory pairs (listed as forbidden tuples at cost top).
"""

from __future__ import annotations

import math
import re
import shutil
import subprocess
import time
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path
from typing import Dict, List, Optional, Tuple

import numpy as np

from .errors import ParameterError, ResourceLimitError
from .model import SeparationParams
from .separation import CompatibilityMatrix, build_matrix
from .trajgen import CandidateSet

#: Scaled integer costs must stay comfortably within an int64 for external
#: solvers written in C/C++.
_MAX_SCALED_COST = 2**62


@dataclass
class WcspInstance:
    """Integer-cost constraint network: unary soft costs per variable value,
    binary hard constraints as forbidden value pairs, and the upper bound."""

    domain_sizes: Tuple[int, ...]
    unary: List[List[int]]
    forbidden: Dict[Tuple[int, int], List[Tuple[int, int]]]
    top: int
    scale: int = field(default=1000, compare=False)

    @property
    def n_variables(self) -> int:
        return len(self.domain_sizes)

    @property
    def n_constraints(self) -> int:
        return self.n_variables + len(self.forbidden)


def formalize_wcsp(
    candidates: CandidateSet,
    params: Optional[SeparationParams] = None,
    matrix: Optional[CompatibilityMatrix] = None,
    known_upper_bound: Optional[float] = None,
    scale: int = 1000,
) -> WcspInstance:
    """Build the integer WCSP from a candidate set.

    ``top`` is the scaled best-known-solution cost plus one when an upper
    bound is supplied, otherwise the sum of every variable's worst unary cost
    plus one.  Unary costs at or above ``top`` are clamped to ``top`` (the
    standard forbidden-value convention).
    """
    if matrix is None:
        if params is None:
            raise ParameterError("need separation params or a prebuilt matrix")
        matrix = build_matrix(candidates, params)
    if scale < 1:
        raise ParameterError("scale must be a positive integer")

    unary: List[List[int]] = []
    for lst in candidates.trajectories:
        scaled = [round(scale * t.cost) for t in lst]
        if any(c > _MAX_SCALED_COST for c in scaled):
            raise ParameterError(
                "scaled costs overflow 64-bit integers; use a smaller scale"
            )
        unary.append(scaled)

    if known_upper_bound is not None:
        top = round(scale * known_upper_bound) + 1
    else:
        top = sum(max(u) for u in unary) + 1
    unary = [[min(c, top) for c in u] for u in unary]

    n = candidates.n_aircraft
    forbidden: Dict[Tuple[int, int], List[Tuple[int, int]]] = {}
    for i in range(n):
        for j in range(i + 1, n):
            block = matrix.blocks[(i, j)]
            vi, vj = np.nonzero(~block)
            forbidden[(i, j)] = list(zip(vi.tolist(), vj.tolist()))
    return WcspInstance(
        domain_sizes=tuple(candidates.domain_sizes),
        unary=unary,
        forbidden=forbidden,
        top=top,
        scale=scale,
    )


def export_wcsp(inst: WcspInstance, path: Path | str, name: Optional[str] = None) -> Path:
    """Write the instance in the standard wcsp text format.

    Layout: a header line ``name n max_domain n_constraints top``, the domain
    sizes, then one unary cost function per variable (all values listed) and
    one binary function per variable pair (forbidden tuples at cost top),
    ordered by variable then by pair.
    """
    path = Path(path)
    name = name or path.stem
    lines = [
        f"{name} {inst.n_variables} {max(inst.domain_sizes)} {inst.n_constraints} {inst.top}",
        " ".join(str(d) for d in inst.domain_sizes),
    ]
    for var, costs in enumerate(inst.unary):
        lines.append(f"1 {var} 0 {len(costs)}")
        for value, c in enumerate(costs):
            lines.append(f"{value} {c}")
    for (i, j), pairs in sorted(inst.forbidden.items()):
        lines.append(f"2 {i} {j} 0 {len(pairs)}")
        for vi, vj in pairs:
            lines.append(f"{vi} {vj} {inst.top}")
    path.write_text("\n".join(lines) + "\n", encoding="ascii")
    return path


def parse_wcsp(path: Path | str, scale: int = 1000) -> Tuple[str, WcspInstance]:
    """Read a wcsp file written by export_wcsp; the round-trip is exact.

    The file format carries no cost scale, so the caller supplies it (pure
    bookkeeping for converting back to kg).
    """
    tokens_lines = Path(path).read_text(encoding="ascii").splitlines()
    header = tokens_lines[0].split()
    name = header[0]
    n_vars, _max_dom, n_cons, top = (int(x) for x in header[1:5])
    domain_sizes = tuple(int(x) for x in tokens_lines[1].split())
    if len(domain_sizes) != n_vars:
        raise ParameterError("domain size line does not match the variable count")

    pos = 2
    unary: List[List[int]] = [[] for _ in range(n_vars)]
    forbidden: Dict[Tuple[int, int], List[Tuple[int, int]]] = {}
    for _ in range(n_cons):
        head = tokens_lines[pos].split()
        pos += 1
        arity = int(head[0])
        if arity == 1:
            var, default, count = int(head[1]), int(head[2]), int(head[3])
            if default != 0:
                raise ParameterError("unary constraints must have default cost 0")
            costs = [0] * domain_sizes[var]
            for _ in range(count):
                value, c = (int(x) for x in tokens_lines[pos].split())
                pos += 1
                costs[value] = c
            unary[var] = costs
        elif arity == 2:
            i, j, default, count = (int(x) for x in head[1:5])
            if default != 0:
                raise ParameterError("binary constraints must have default cost 0")
            pairs = []
            for _ in range(count):
                vi, vj, c = (int(x) for x in tokens_lines[pos].split())
                pos += 1
                if c != top:
                    raise ParameterError("binary tuples must carry the top cost")
                pairs.append((vi, vj))
            forbidden[(i, j)] = pairs
        else:
            raise ParameterError(f"unsupported constraint arity {arity}")
    return name, WcspInstance(
        domain_sizes=domain_sizes, unary=unary, forbidden=forbidden, top=top, scale=scale
    )


def wcsp_exhaustive_optimum(
    inst: WcspInstance, cap: int = 10_000_000
) -> Optional[Tuple[int, Tuple[int, ...]]]:
    """Exact minimum over all complete assignments with cost below top, or
    None when no assignment qualifies.  Exhaustive; intended as a test oracle."""
    sizes = inst.domain_sizes
    n = len(sizes)
    if math.prod(sizes) > cap:
        raise ResourceLimitError("assignment space exceeds the evaluation cap")

    unary = [np.array(u, dtype=np.int64) for u in inst.unary]
    allowed: Dict[Tuple[int, int], np.ndarray] = {}
    for (i, j), pairs in inst.forbidden.items():
        mask = np.ones((sizes[i], sizes[j]), dtype=bool)
        for vi, vj in pairs:
            mask[vi, vj] = False
        allowed[(i, j)] = mask

    def pair_ok(i, j, vi, vj):
        m = allowed.get((i, j))
        return True if m is None else bool(m[vi, vj])

    best: Optional[Tuple[int, Tuple[int, ...]]] = None
    if n == 1:
        v = int(np.argmin(unary[0]))
        c = int(unary[0][v])
        return (c, (v,)) if c < inst.top else None

    a, b = n - 2, n - 1
    prefix_sizes = sizes[: n - 2]
    for flat_prefix in range(math.prod(prefix_sizes) if prefix_sizes else 1):
        rem = flat_prefix
        prefix = []
        for s in reversed(prefix_sizes):
            prefix.append(rem % s)
            rem //= s
        prefix = tuple(reversed(prefix))
        if any(
            not pair_ok(i, j, prefix[i], prefix[j])
            for i in range(len(prefix))
            for j in range(i + 1, len(prefix))
        ):
            continue
        feas = allowed.get((a, b), np.ones((sizes[a], sizes[b]), dtype=bool)).copy()
        base = 0
        for pos, v in enumerate(prefix):
            base += int(unary[pos][v])
            ma = allowed.get((pos, a))
            if ma is not None:
                feas &= ma[v][:, None]
            mb = allowed.get((pos, b))
            if mb is not None:
                feas &= mb[v][None, :]
        if not feas.any():
            continue
        grid = unary[a][:, None] + unary[b][None, :] + base
        grid = np.where(feas, grid, np.iinfo(np.int64).max)
        flat = int(np.argmin(grid))
        value = int(grid.flat[flat])
        if value < inst.top and (best is None or value < best[0]):
            best = (value, prefix + (flat // sizes[b], flat % sizes[b]))
    return best


class ExternalStatus(Enum):
    OK = "OK"
    UNAVAILABLE = "UNAVAILABLE"
    TIMEOUT = "TIMEOUT"
    FAILED = "FAILED"


@dataclass
class ExternalResult:
    status: ExternalStatus
    optimum: Optional[int] = None
    assignment: Optional[Tuple[int, ...]] = None
    wall_s: float = 0.0
    stdout: str = ""
    stderr: str = ""
    detail: str = ""


_OPTIMUM_RE = re.compile(r"Optimum:\s*(\d+)")


def run_external_solver(
    wcsp_path: Path | str,
    binary_path: str,
    timeout_s: float,
    n_variables: Optional[int] = None,
) -> ExternalResult:
    """Run an external wcsp solver on the exported file and parse its
    optimum and assignment.  A missing binary degrades to UNAVAILABLE."""
    binary = shutil.which(binary_path) or (
        binary_path if Path(binary_path).is_file() else None
    )
    if binary is None:
        return ExternalResult(
            ExternalStatus.UNAVAILABLE, detail=f"solver binary not found: {binary_path}"
        )
    cmd = [binary, str(wcsp_path), f"-timelimit={max(1, int(math.ceil(timeout_s)))}", "-s"]
    t0 = time.perf_counter()
    try:
        proc = subprocess.run(
            cmd,
            capture_output=True,
            text=True,
            timeout=timeout_s if timeout_s > 0 else 1e-3,
        )
    except subprocess.TimeoutExpired as exc:
        return ExternalResult(
            ExternalStatus.TIMEOUT,
            wall_s=time.perf_counter() - t0,
            stdout=(exc.stdout or b"").decode() if isinstance(exc.stdout, bytes) else (exc.stdout or ""),
            detail=f"no result within {timeout_s} s",
        )
    except OSError as exc:
        return ExternalResult(ExternalStatus.FAILED, detail=str(exc))

    wall = time.perf_counter() - t0
    out, err = proc.stdout, proc.stderr
    match = _OPTIMUM_RE.search(out)
    if proc.returncode not in (0, 1) and match is None:
        return ExternalResult(
            ExternalStatus.FAILED, wall_s=wall, stdout=out, stderr=err,
            detail=f"solver exited with code {proc.returncode}",
        )
    if match is None:
        return ExternalResult(
            ExternalStatus.FAILED, wall_s=wall, stdout=out, stderr=err,
            detail="no 'Optimum:' line in solver output",
        )
    optimum = int(match.group(1))

    assignment = None
    if n_variables is not None:
        for line in reversed(out.splitlines()):
            tokens = line.split()
            if len(tokens) == n_variables and all(
                t.isdigit() or (t.startswith("-") and t[1:].isdigit()) for t in tokens
            ):
                assignment = tuple(int(t) for t in tokens)
                break
    return ExternalResult(
        ExternalStatus.OK, optimum=optimum, assignment=assignment,
        wall_s=wall, stdout=out, stderr=err,
    )
