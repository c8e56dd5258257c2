import pydantic_settings


class EnvConfigs(pydantic_settings.BaseSettings):
    model_config = pydantic_settings.SettingsConfigDict(
        env_file=".env", env_file_encoding="utf-8", env_prefix="CAVITYKIN_", extra="ignore"
    )

    LOG: str = "WARNING"
    SEED: int = 0
    STANDOFF: float = 1.0
    ROI_RADIUS: float = 1.0
    ROI_RESOLUTION: int = 64
    SOLVER_TOL: float = 1e-9
    SOLVER_MAX_ITERATIONS: int = 500
    FIT_RESTARTS: int = 8
    FIT_MAX_ITERATIONS: int = 500
    WORKERS: int = 1
