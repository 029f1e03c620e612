"""Runtime configuration loaded from environment variables."""

from pydantic import computed_field
from pydantic_settings import BaseSettings


class Settings(BaseSettings):
    """qrace configuration."""

    # Largest K for which a schedule is materialized (larger K is reported analytically)
    max_materialized_k: int = 10_000_000

    # Dense payoff matrices are only built up to this K; larger games use matrix-free paths
    max_matrix_k: int = 10_000

    # Exact-rational self-check mode is limited to small games
    exact_check_max_k: int = 100

    # Support enumeration cost grows as 4^K
    support_enum_max_k: int = 6

    # Tolerances
    tolerance: float = 1e-10  # equilibrium verification
    tie_tolerance: float = 1e-12  # best-response ties
    marginal_threshold: float = 1e-12  # flags near-zero strict decisions

    # Dual certificate sweep
    dual_grid_points: int = 200

    # Monte Carlo: trials per keyed generator block
    sim_block_size: int = 65_536

    # Numeric output
    output_digits: int = 17

    # Logging
    log_level: str = "info"

    model_config = {
        "env_file": ".env",
        "env_file_encoding": "utf-8",
        "env_prefix": "QRACE_",
        "extra": "ignore",
    }

    @computed_field
    @property
    def float_format(self) -> str:
        """printf-style format for CSV numbers."""
        return f"%.{self.output_digits}g"


settings = Settings()
