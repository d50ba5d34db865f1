"""Produces easy/hard training labels by timing real compiled code.

For each function we synthesize a standalone driver, compile it once with
basic flags and once with aggressive flags, time both binaries, and apply
the ratio rule: the function is easy to optimize when aggressive flags
barely help, i.e. t_aggr / t_basic > delta. Functions that fail anywhere
along that path are quarantined with the cause instead of aborting the
run. An injectable timer replaces the compile-and-run leg so the whole
pipeline can run hermetically.
"""

from __future__ import annotations

import re
import shlex
import statistics
import subprocess
import tempfile
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Callable, Optional, Sequence, Union

from opttriage.minic import FunctionUnit

EASY_NAME = "easy"
HARD_NAME = "hard"


class DriverError(Exception):
    """The function's signature cannot be wrapped in a timing driver."""


class CompileError(Exception):
    # stderr rides along in the message so quarantine reasons stay actionable
    def __init__(self, message: str, stderr: str = ""):
        tail = stderr.strip()
        if tail:
            if len(tail) > 400:
                tail = tail[:400] + "..."
            message = f"{message}: {tail}"
        super().__init__(message)
        self.stderr = stderr


class RunError(Exception):
    pass


@dataclass(frozen=True)
class LabelerConfig:
    delta: float = 0.8
    compiler_cmd: str = "cc -ffp-contract=off {flags} -o {output} {source}"
    flags_basic: tuple[str, ...] = ("-O1",)
    flags_aggr: tuple[str, ...] = ("-O3",)
    repetitions: int = 7
    timeout_s: float = 60.0
    min_runtime_s: float = 0.2
    array_extent: int = 512
    rng_seed: int = 20260814
    workdir: Optional[str] = None  # None: a throwaway temp dir per run

    def __post_init__(self):
        if not 0.0 < self.delta <= 1.0:
            raise ValueError("delta must be in (0, 1]")
        if self.repetitions < 1 or self.repetitions % 2 == 0:
            raise ValueError("repetitions must be a positive odd count")
        if self.timeout_s <= 0:
            raise ValueError("timeout_s must be positive")
        if self.min_runtime_s < 0:
            raise ValueError("min_runtime_s must be non-negative")
        if self.array_extent < 1:
            raise ValueError("array_extent must be positive")
        if "{source}" not in self.compiler_cmd or "{output}" not in self.compiler_cmd:
            raise ValueError("compiler_cmd must mention {source} and {output}")

    def to_dict(self) -> dict:
        doc = asdict(self)
        doc["flags_basic"] = list(self.flags_basic)
        doc["flags_aggr"] = list(self.flags_aggr)
        return doc

    @staticmethod
    def from_dict(doc: dict) -> "LabelerConfig":
        known = {f for f in LabelerConfig.__dataclass_fields__}
        unknown = set(doc) - known
        if unknown:
            raise ValueError(f"unknown labeler config keys: {sorted(unknown)}")
        clean = dict(doc)
        for key in ("flags_basic", "flags_aggr"):
            if key in clean:
                clean[key] = tuple(clean[key])
        return LabelerConfig(**clean)


@dataclass(frozen=True)
class TimingRecord:
    t_basic: float
    t_aggr: float
    ratio: float
    samples_basic: tuple[float, ...]
    samples_aggr: tuple[float, ...]

    def __post_init__(self):
        if self.t_basic <= 0 or self.t_aggr <= 0:
            raise ValueError("timings must be positive")

    @staticmethod
    def from_samples(samples_basic: Sequence[float], samples_aggr: Sequence[float]) -> "TimingRecord":
        t_basic = statistics.median(samples_basic)
        t_aggr = statistics.median(samples_aggr)
        if t_basic <= 0 or t_aggr <= 0:
            raise ValueError("timings must be positive")
        return TimingRecord(
            t_basic=t_basic,
            t_aggr=t_aggr,
            ratio=t_aggr / t_basic,
            samples_basic=tuple(samples_basic),
            samples_aggr=tuple(samples_aggr),
        )

    def to_dict(self) -> dict:
        return {
            "t_basic": self.t_basic,
            "t_aggr": self.t_aggr,
            "ratio": self.ratio,
            "samples_basic": list(self.samples_basic),
            "samples_aggr": list(self.samples_aggr),
        }

    @staticmethod
    def from_dict(doc: dict) -> "TimingRecord":
        return TimingRecord(
            t_basic=float(doc["t_basic"]),
            t_aggr=float(doc["t_aggr"]),
            ratio=float(doc["ratio"]),
            samples_basic=tuple(float(x) for x in doc["samples_basic"]),
            samples_aggr=tuple(float(x) for x in doc["samples_aggr"]),
        )


def label_from_ratio(t_basic: float, t_aggr: float, delta: float) -> str:
    """Easy iff t_aggr/t_basic > delta (strict); the boundary itself is hard."""
    if t_basic <= 0 or t_aggr <= 0:
        raise ValueError("timings must be positive")
    if not 0.0 < delta <= 1.0:
        raise ValueError("delta must be in (0, 1]")
    return EASY_NAME if t_aggr / t_basic > delta else HARD_NAME


# --------------------------------------------------------------------- driver


_DRIVER_PRELUDE = """\
#include <stdio.h>
#include <stdint.h>
#include <time.h>

static uint64_t rng_state;

static double rng_next(void)
{
    rng_state += 0x9e3779b97f4a7c15ULL;
    uint64_t z = rng_state;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    z ^= z >> 31;
    return (double)(z >> 11) * (1.0 / 9007199254740992.0);
}

static double now_seconds(void)
{
    struct timespec ts;
    clock_gettime(CLOCK_MONOTONIC, &ts);
    return (double)ts.tv_sec + (double)ts.tv_nsec * 1e-9;
}
"""


def _buffer_dims(param, defines: dict[str, int], extent: int) -> list[str]:
    dims = []
    for ext in param.extents:
        if isinstance(ext, int):
            dims.append(str(ext))
        elif ext in defines:
            dims.append(ext)  # macro carries the value
        else:
            dims.append(str(extent))  # extent named after another parameter
    return dims


def synthesize_driver(fn: FunctionUnit, cfg: LabelerConfig) -> str:
    """Standalone C program that times the function and prints a checksum.

    The driver binds every symbolic array extent and loop bound to one
    concrete size, fills arrays from a seeded generator, prints a checksum
    computed from a single verification call (so it does not depend on how
    far the timing loop scales), then reports per-call seconds from a
    repetition loop auto-scaled to run at least cfg.min_runtime_s.
    """
    if fn.name in ("main", "rng_next", "now_seconds", "init_data", "checksum_data"):
        raise DriverError(f"function name {fn.name!r} collides with the driver")
    if not fn.source_text.strip():
        raise DriverError("function has no source text to embed")
    # known literal bounds may exceed the configured extent; size up so every
    # in-bounds subscript of the original code stays in bounds here
    extent = max(cfg.array_extent, getattr(fn, "min_extent", 0))
    defines = {name: extent for name in fn.bound_symbols}

    lines = [_DRIVER_PRELUDE]
    for name in sorted(defines):
        lines.append(f"#define {name} {extent}")
    if defines:
        lines.append("")

    proto_params = []
    call_args = []
    globals_decl = []
    fills = []
    sums = []
    for p in fn.params:
        if p.tag == "scalar-int":
            proto_params.append(f"int {p.name}")
            globals_decl.append(f"static volatile int s_{p.name} = {extent};")
            call_args.append(f"s_{p.name}")
        elif p.tag == "scalar-float":
            proto_params.append(f"float {p.name}")
            globals_decl.append(f"static volatile float s_{p.name} = 1.5f;")
            call_args.append(f"s_{p.name}")
        else:
            dims = _buffer_dims(p, defines, extent)
            decl_dims = "".join(f"[{d}]" for d in dims)
            proto_params.append(f"{p.base_type} {p.name}{decl_dims}")
            globals_decl.append(f"static {p.base_type} g_{p.name}{decl_dims};")
            call_args.append(f"g_{p.name}")
            idx = [f"i{k}" for k in range(len(dims))]
            ref = f"g_{p.name}" + "".join(f"[{v}]" for v in idx)
            cast = "(float)rng_next()" if p.base_type == "float" else f"(int)(rng_next() * {extent}.0)"
            open_loops = "".join(
                f"for (long {v} = 0; {v} < {d}; {v}++) " for v, d in zip(idx, dims)
            )
            fills.append(f"    {open_loops}{ref} = {cast};")
            sums.append(f"    {open_loops}sum += (double){ref};")

    proto = f"{_c_return_type(fn)} {fn.name}({', '.join(proto_params) or 'void'})"
    lines.append(proto + " __attribute__((noinline));")
    lines.append("")
    lines.append(fn.source_text.rstrip())
    lines.append("")
    lines.extend(globals_decl)
    lines.append("")
    seed = cfg.rng_seed & 0xFFFFFFFFFFFFFFFF
    lines.append("static void init_data(void)")
    lines.append("{")
    lines.append(f"    rng_state = {seed}ULL;")
    lines.extend(fills)
    lines.append("}")
    lines.append("")
    lines.append("static double checksum_data(void)")
    lines.append("{")
    lines.append("    double sum = 0.0;")
    lines.extend(sums)
    lines.append("    return sum;")
    lines.append("}")
    lines.append("")

    call = f"{fn.name}({', '.join(call_args)})"
    nonvoid = _c_return_type(fn) != "void"
    if nonvoid:
        lines.append("static volatile double g_sink;")
        lines.append("")
        timed_call = f"g_sink = (double){call};"
    else:
        timed_call = f"{call};"

    lines.append("int main(void)")
    lines.append("{")
    lines.append("    double check = 0.0;")
    lines.append("    init_data();")
    if nonvoid:
        lines.append(f"    check += (double){call};")
    else:
        lines.append(f"    {call};")
    lines.append("    check += checksum_data();")
    lines.append('    printf("checksum %.6e\\n", check);')
    lines.append("")
    lines.append("    long calls = 1;")
    lines.append("    double elapsed = 0.0;")
    lines.append("    for (;;) {")
    lines.append("        init_data();")
    lines.append("        double start = now_seconds();")
    lines.append("        for (long c = 0; c < calls; c++) {")
    lines.append(f"            {timed_call}")
    lines.append('            __asm__ __volatile__("" ::: "memory");')
    lines.append("        }")
    lines.append("        elapsed = now_seconds() - start;")
    lines.append(f"        if (elapsed >= {cfg.min_runtime_s!r} || calls >= (1L << 30))")
    lines.append("            break;")
    lines.append("        calls *= 2;")
    lines.append("    }")
    lines.append('    printf("per_call_seconds %.9e\\n", elapsed / (double)calls);')
    lines.append('    printf("calls %ld\\n", calls);')
    lines.append("    return 0;")
    lines.append("}")
    return "\n".join(lines) + "\n"


def _c_return_type(fn: FunctionUnit) -> str:
    return fn.return_type


def _stem(fn_id: str, tag: str) -> str:
    return re.sub(r"[^A-Za-z0-9_.-]+", "_", fn_id) + f"_{tag}"


# ------------------------------------------------------------------ toolchain


def compile_variant(
    source: str,
    flags: Sequence[str],
    cfg: LabelerConfig,
    workdir: Union[str, Path],
    stem: str = "driver",
) -> Path:
    """Write the source and compile one binary; raises CompileError."""
    workdir = Path(workdir)
    src_path = workdir / f"{stem}.c"
    src_path.write_text(source, encoding="utf-8")
    out_path = workdir / f"{stem}.bin"
    cmd = cfg.compiler_cmd.format(
        flags=" ".join(flags),
        source=shlex.quote(str(src_path)),
        output=shlex.quote(str(out_path)),
    )
    argv = shlex.split(cmd)
    try:
        proc = subprocess.run(
            argv, capture_output=True, text=True, timeout=cfg.timeout_s
        )
    except subprocess.TimeoutExpired as e:
        raise CompileError(f"compiler timed out after {cfg.timeout_s}s", "") from e
    except OSError as e:
        raise CompileError(f"cannot run compiler {argv[0]!r}: {e}", "") from e
    if proc.returncode != 0:
        raise CompileError(
            f"compiler exited with {proc.returncode}", proc.stderr.strip()
        )
    if not out_path.exists():
        raise CompileError("compiler reported success but produced no binary", proc.stderr)
    return out_path


@dataclass(frozen=True)
class MeasureResult:
    samples: tuple[float, ...]  # per-call seconds, one per repetition
    checksum: str  # textual checksum, compared verbatim across variants


def _run_binary(binary: Path, cfg: LabelerConfig) -> tuple[float, str]:
    try:
        proc = subprocess.run(
            [str(binary)], capture_output=True, text=True, timeout=cfg.timeout_s
        )
    except subprocess.TimeoutExpired as e:
        raise RunError(f"run timed out after {cfg.timeout_s}s") from e
    if proc.returncode != 0:
        raise RunError(f"binary exited with {proc.returncode}: {proc.stderr.strip()[:200]}")
    checksum = None
    per_call = None
    for line in proc.stdout.splitlines():
        parts = line.split()
        if len(parts) == 2 and parts[0] == "checksum":
            checksum = parts[1]
        elif len(parts) == 2 and parts[0] == "per_call_seconds":
            per_call = float(parts[1])
    if checksum is None or per_call is None:
        raise RunError(f"malformed driver output: {proc.stdout[:200]!r}")
    return per_call, checksum


def measure(binary: Union[str, Path], cfg: LabelerConfig) -> MeasureResult:
    """One untimed warmup then cfg.repetitions strictly serial runs."""
    binary = Path(binary)
    _run_binary(binary, cfg)  # warmup, discarded
    samples = []
    checksums = set()
    for _ in range(cfg.repetitions):
        per_call, checksum = _run_binary(binary, cfg)
        samples.append(per_call)
        checksums.add(checksum)
    if len(checksums) != 1:
        raise RunError(f"checksum varies across runs of one binary: {sorted(checksums)}")
    return MeasureResult(samples=tuple(samples), checksum=checksums.pop())


# ------------------------------------------------------------------- pipeline


@dataclass(frozen=True)
class LabelResult:
    function_id: str
    timing: Optional[TimingRecord] = None
    label: Optional[str] = None
    quarantine_reason: Optional[str] = None


# A timer takes (function_id, FunctionUnit) and returns (t_basic, t_aggr)
# seconds, or None to say it has no entry for that function.
Timer = Callable[[str, FunctionUnit], Optional[tuple[float, float]]]


def _label_one(fn_id: str, fn: FunctionUnit, cfg: LabelerConfig, workdir: Path) -> LabelResult:
    try:
        driver = synthesize_driver(fn, cfg)
    except DriverError as e:
        return LabelResult(fn_id, quarantine_reason=f"driver: {e}")
    results = {}
    for tag, flags in (("basic", cfg.flags_basic), ("aggr", cfg.flags_aggr)):
        try:
            binary = compile_variant(driver, flags, cfg, workdir, stem=_stem(fn_id, tag))
        except CompileError as e:
            detail = f"; {e.stderr.splitlines()[-1]}" if e.stderr else ""
            return LabelResult(fn_id, quarantine_reason=f"compile[{tag}]: {e}{detail}")
        try:
            results[tag] = measure(binary, cfg)
        except RunError as e:
            return LabelResult(fn_id, quarantine_reason=f"run[{tag}]: {e}")
    if results["basic"].checksum != results["aggr"].checksum:
        return LabelResult(
            fn_id,
            quarantine_reason=(
                "checksum mismatch between variants: "
                f"basic={results['basic'].checksum} aggr={results['aggr'].checksum}"
            ),
        )
    timing = TimingRecord.from_samples(results["basic"].samples, results["aggr"].samples)
    return LabelResult(
        fn_id,
        timing=timing,
        label=label_from_ratio(timing.t_basic, timing.t_aggr, cfg.delta),
    )


def label_corpus(
    functions: Sequence[tuple[str, FunctionUnit]],
    cfg: LabelerConfig = LabelerConfig(),
    timer: Optional[Timer] = None,
) -> list[LabelResult]:
    """Label functions by measured timing ratio; failures become quarantines.

    With ``timer`` set, compilation and measurement are skipped entirely:
    the timer supplies (t_basic, t_aggr) per function and the rest of the
    pipeline (median bookkeeping, the ratio rule, quarantining) runs
    unchanged, which keeps the whole flow deterministic and hermetic.
    """
    if not functions:
        raise ValueError("no functions to label")
    results: list[LabelResult] = []
    if timer is not None:
        for fn_id, fn in functions:
            try:
                times = timer(fn_id, fn)
            except Exception as e:  # a broken entry must not sink the corpus
                results.append(LabelResult(fn_id, quarantine_reason=f"timer: {e}"))
                continue
            if times is None:
                results.append(
                    LabelResult(fn_id, quarantine_reason="timer: no timing entry")
                )
                continue
            t_basic, t_aggr = times
            try:
                timing = TimingRecord.from_samples(
                    (float(t_basic),) * cfg.repetitions, (float(t_aggr),) * cfg.repetitions
                )
            except ValueError as e:
                results.append(LabelResult(fn_id, quarantine_reason=f"timer: {e}"))
                continue
            results.append(
                LabelResult(
                    fn_id,
                    timing=timing,
                    label=label_from_ratio(timing.t_basic, timing.t_aggr, cfg.delta),
                )
            )
        return results

    if cfg.workdir is not None:
        workdir = Path(cfg.workdir)
        workdir.mkdir(parents=True, exist_ok=True)
        for fn_id, fn in functions:
            results.append(_label_one(fn_id, fn, cfg, workdir))
    else:
        with tempfile.TemporaryDirectory(prefix="opttriage-") as tmp:
            for fn_id, fn in functions:
                results.append(_label_one(fn_id, fn, cfg, Path(tmp)))
    return results
