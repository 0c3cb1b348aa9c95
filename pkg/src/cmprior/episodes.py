"""Episode spec files, key=value config files, and the K-shot episode runner."""

from __future__ import annotations

from dataclasses import dataclass, fields

from .core import BinaryMask, FormatError, Prior, SolverConfig, Tensor, read_mask_pgm, read_tensor
from .fusion import EvalReport, binarize, evaluate_episodes, kshot_fuse
from .graph import build_transfer
from .prior import initial_prior, mask_to_feature_prior
from .solver import SolverTrace, solve_fixed_point


@dataclass(frozen=True)
class EpisodeSpec:
    """One support/query episode as referenced from a spec file."""

    supports: list[tuple[str, str]]  # (feature path, mask path) per shot
    query_feat: str
    gt_mask: str | None = None
    class_id: int = 0

    def __post_init__(self):
        if len(self.supports) < 1:
            raise FormatError("episode needs at least one support line")


def parse_episode_spec(path) -> EpisodeSpec:
    """Parse the line-oriented episode format.

    Lines: `support=<feat>,<mask>` (K of them), `query=<feat>`, optional
    `gt=<mask>` and `class=<id>`. Blank lines and # comments are skipped.
    Parse failures name the offending line number.
    """
    supports: list[tuple[str, str]] = []
    query: str | None = None
    gt: str | None = None
    class_id = 0
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise FormatError(f"cannot read episode spec {path}: {exc}") from exc

    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise FormatError(f"episode spec line {lineno}: missing '=' in {line!r}")
        key = key.strip()
        value = value.strip()
        if key == "support":
            feat, sep2, mask = value.partition(",")
            if not sep2 or not feat.strip() or not mask.strip():
                raise FormatError(
                    f"episode spec line {lineno}: support needs <feat>,<mask>"
                )
            supports.append((feat.strip(), mask.strip()))
        elif key == "query":
            if query is not None:
                raise FormatError(f"episode spec line {lineno}: duplicate query")
            query = value
        elif key == "gt":
            gt = value
        elif key == "class":
            try:
                class_id = int(value)
            except ValueError as exc:
                raise FormatError(
                    f"episode spec line {lineno}: class id must be an integer"
                ) from exc
        else:
            raise FormatError(f"episode spec line {lineno}: unknown key {key!r}")

    if query is None:
        raise FormatError(f"episode spec {path}: no query line")
    if not supports:
        raise FormatError(f"episode spec {path}: no support lines")
    return EpisodeSpec(supports=supports, query_feat=query, gt_mask=gt, class_id=class_id)


_CONFIG_INT_KEYS = {"top_k", "max_iters"}


def parse_config_file(path) -> dict:
    """Parse `key=value` solver config lines (# comments allowed)."""
    valid = {f.name for f in fields(SolverConfig)}
    out: dict = {}
    try:
        with open(path, "r", encoding="utf-8") as fh:
            lines = fh.readlines()
    except OSError as exc:
        raise FormatError(f"cannot read config {path}: {exc}") from exc
    for lineno, raw in enumerate(lines, start=1):
        line = raw.strip()
        if not line or line.startswith("#"):
            continue
        key, sep, value = line.partition("=")
        if not sep:
            raise FormatError(f"config line {lineno}: missing '=' in {line!r}")
        key = key.strip()
        if key not in valid:
            raise FormatError(f"config line {lineno}: unknown key {key!r}")
        try:
            out[key] = int(value) if key in _CONFIG_INT_KEYS else float(value)
        except ValueError as exc:
            raise FormatError(f"config line {lineno}: bad value for {key!r}") from exc
    return out


@dataclass(frozen=True)
class EpisodeResult:
    """Everything one K-shot episode produces."""

    initial: Prior  # fused initial prior
    converged: Prior  # fused fixed prior
    mask: BinaryMask  # binarized converged prior
    mask_initial: BinaryMask  # binarized initial prior
    traces: list[SolverTrace]
    report: EvalReport | None


def run_episode(
    supports: list[tuple[Tensor, Prior]],
    f_q: Tensor,
    cfg: SolverConfig | None = None,
    gt: BinaryMask | None = None,
    class_id: int = 0,
) -> EpisodeResult:
    """Solve each shot independently against the shared query graph, fuse, binarize.

    `supports` holds (support features, support mask at feature resolution);
    the transfer matrix depends only on the query features and is built once.
    """
    cfg = cfg or SolverConfig()
    if not supports:
        raise ValueError("run_episode needs at least one support shot")
    p = build_transfer(f_q, cfg.top_k, cfg.temperature)
    shot_initials: list[Prior] = []
    shot_fixed: list[Prior] = []
    traces: list[SolverTrace] = []
    for f_s, m_s in supports:
        m0 = initial_prior(f_s, m_s, f_q)
        solved = solve_fixed_point(m0, p, cfg)
        shot_initials.append(m0)
        shot_fixed.append(solved.prior)
        traces.append(solved.trace)
    fused_init = kshot_fuse(shot_initials)
    fused_star = kshot_fuse(shot_fixed)
    mask = binarize(fused_star, cfg.threshold)
    mask_initial = binarize(fused_init, cfg.threshold)
    report = None
    if gt is not None:
        report = evaluate_episodes([(mask, gt, class_id)])
    return EpisodeResult(
        initial=fused_init,
        converged=fused_star,
        mask=mask,
        mask_initial=mask_initial,
        traces=traces,
        report=report,
    )


def load_episode(spec: EpisodeSpec) -> tuple[list[tuple[Tensor, Prior]], Tensor, BinaryMask | None]:
    """Read the files an EpisodeSpec references, resampling masks to feature size."""
    f_q = read_tensor(spec.query_feat)
    supports: list[tuple[Tensor, Prior]] = []
    for feat_path, mask_path in spec.supports:
        f_s = read_tensor(feat_path)
        if f_s.data.ndim != 3:
            raise FormatError(f"support features must be C×H×W, got {f_s.dims} in {feat_path}")
        mask = read_mask_pgm(mask_path)
        soft = mask_to_feature_prior(mask, f_s.dims[1], f_s.dims[2])
        supports.append((f_s, soft))
    gt = read_mask_pgm(spec.gt_mask) if spec.gt_mask else None
    return supports, f_q, gt
