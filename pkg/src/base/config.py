import os
from typing import Callable, List, Mapping, Optional, TypeVar

true_values = ["1", "true", "yes"]
false_values = ["0", "false", "no"]

T = TypeVar("T")


class ConfigError(ValueError):
    pass


class ConfigValueMissingError(ConfigError):
    pass


class ConfigInvalidDefaultError(ConfigError):
    pass


class ConfigInvalidValueError(ConfigError):
    pass


class Config:
    """
    Typed access to process settings (environment by default, `.env` loaded by the
    entry points). Known keys: LOG_LEVEL, FED3R_THREADS, RELEASE, DEBUG, CORS_ORIGINS.

    `require_*` raise ConfigValueMissingError when the key is absent and
    ConfigInvalidValueError when it cannot be parsed; `get_*` fall back to a default
    of the right type.
    """

    def __init__(self, config_map: Optional[Mapping] = None):
        config_map = config_map if config_map is not None else os.environ
        self.config_map = {k: str(v) for k, v in config_map.items()}

    def _raw(self, name: str) -> str:
        if name not in self.config_map:
            raise ConfigValueMissingError(f"{name} isn't present in the config")
        return self.config_map[name]

    @staticmethod
    def _or_default(getter: Callable[[], T], default: T) -> T:
        try:
            return getter()
        except ConfigValueMissingError:
            return default

    def require_config(self, name: str) -> str:
        return self._raw(name)

    def get_config(self, name: str, default: str) -> str:
        return self.config_map.get(name, default)

    def require_bool(self, name: str) -> bool:
        value = self._raw(name).lower()
        if value in true_values:
            return True
        if value in false_values:
            return False
        raise ConfigInvalidValueError(f"value of {name} is not valid boolean: '{value}'")

    def get_bool(self, name: str, default: bool) -> bool:
        if not isinstance(default, bool):
            raise ConfigInvalidDefaultError("Default value must be boolean")
        return self._or_default(lambda: self.require_bool(name), default)

    def require_int(self, name: str) -> int:
        value = self._raw(name)
        try:
            return int(value)
        except ValueError as error:
            raise ConfigInvalidValueError(f"value of {name} is not valid int: '{value}'") from error

    def get_int(self, name: str, default: int) -> int:
        # bool is an int subclass
        if not isinstance(default, int) or isinstance(default, bool):
            raise ConfigInvalidDefaultError("Default value must be int")
        return self._or_default(lambda: self.require_int(name), default)

    def require_list(self, name: str, separator: str) -> List[str]:
        value = self._raw(name)
        items = [item.strip() for item in value.split(separator) if item.strip()]
        if not items:
            raise ConfigInvalidValueError(f"value of {name} is not valid list: '{value}'")
        return items

    def get_list(self, name: str, separator: str, default: List[str]) -> List[str]:
        if not isinstance(default, list) or not all(isinstance(item, str) for item in default):
            raise ConfigInvalidDefaultError("Default value must be a list of strings")
        return self._or_default(lambda: self.require_list(name, separator), default)
