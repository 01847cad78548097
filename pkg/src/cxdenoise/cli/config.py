"""Flat ``key = value`` run configuration covering STFT, model and training."""
from __future__ import annotations

from dataclasses import dataclass, fields
from pathlib import Path

from ..signal import StftConfig
from ..swin import SwinConfig
from ..train import ConfigError, TrainConfig

_TRUE = {"1", "true", "yes", "on"}
_FALSE = {"0", "false", "no", "off"}
_SECTIONS = (("stft", StftConfig), ("model", SwinConfig), ("train", TrainConfig))
_EXTRA = {"run_dir": "str", "toy_pairs": "int"}


def _coerce(key: str, kind: str, raw: str):
    raw = raw.strip()
    try:
        if "None" in kind and raw.lower() in ("none", ""):
            return None
        if kind.startswith("bool"):
            low = raw.lower()
            if low in _TRUE:
                return True
            if low in _FALSE:
                return False
            raise ValueError(raw)
        if kind.startswith("int"):
            return int(raw)
        if kind.startswith("float"):
            return float(raw)
        if kind.startswith("tuple"):
            return tuple(int(p) for p in raw.strip("()[]").split(",") if p.strip())
        return raw
    except ValueError:
        raise ConfigError(key, f"cannot parse {raw!r} as {kind}") from None


def known_keys() -> dict[str, str]:
    keys = dict(_EXTRA)
    for _, cls in _SECTIONS:
        for f in fields(cls):
            keys.setdefault(f.name, str(f.type))
    return keys


def parse_config_text(text: str, source: str = "<config>") -> dict[str, str]:
    out = {}
    for n, line in enumerate(text.splitlines(), 1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{n}", f"expected key = value, got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        out[key] = value
    return out


@dataclass
class RunConfig:
    stft: StftConfig
    model: SwinConfig
    train: TrainConfig
    run_dir: str = "runs/latest"
    toy_pairs: int = 0

    @classmethod
    def resolve(cls, raw: dict[str, str]) -> "RunConfig":
        """Build from raw strings; unknown keys and bad values are ConfigErrors.

        ``image_size`` and ``seed`` feed every section that has them.  When
        ``n_fft``/``win_length`` are not given they scale with ``image_size``.
        """
        kinds = known_keys()
        unknown = sorted(set(raw) - set(kinds))
        if unknown:
            raise ConfigError(unknown[0], f"unknown config key(s): {', '.join(unknown)}")
        values = {k: _coerce(k, kinds[k], v) for k, v in raw.items()}
        size = values.get("image_size", 512)
        base = StftConfig.for_image_size(size)
        stft_kw = {"n_fft": base.n_fft, "win_length": base.win_length}
        built = {}
        for name, klass in _SECTIONS:
            kw = {f.name: values[f.name] for f in fields(klass) if f.name in values}
            if name == "stft":
                kw = {**stft_kw, **kw}
            try:
                built[name] = klass(**kw)
            except ConfigError:
                raise
            except (TypeError, ValueError) as e:
                raise ConfigError(name, str(e)) from None
        return cls(built["stft"], built["model"], built["train"],
                   run_dir=values.get("run_dir", "runs/latest"),
                   toy_pairs=values.get("toy_pairs", 0))

    @classmethod
    def load(cls, path: str | Path | None, overrides: dict[str, str] | None = None) -> "RunConfig":
        raw = {}
        if path is not None:
            p = Path(path)
            if not p.is_file():
                raise ConfigError("config", f"no such file: {p}")
            raw = parse_config_text(p.read_text(), str(p))
        raw.update(overrides or {})
        return cls.resolve(raw)

    def as_flat(self) -> dict:
        flat = {}
        for name, _ in _SECTIONS:
            flat.update(getattr(self, name).to_dict())
        flat["run_dir"] = self.run_dir
        flat["toy_pairs"] = self.toy_pairs
        return flat

    def dump(self) -> str:
        lines = []
        for k, v in self.as_flat().items():
            if isinstance(v, (list, tuple)):
                v = ",".join(str(x) for x in v)
            elif isinstance(v, bool):
                v = str(v).lower()
            lines.append(f"{k} = {'none' if v is None else v}")
        return "\n".join(lines) + "\n"
