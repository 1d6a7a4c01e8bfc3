import math
from typing import Optional
from sqlalchemy import ForeignKey
from sqlalchemy.orm import Mapped, mapped_column, relationship
from .base import Base


def _optional(value):
    # NaN marks "not applicable" in sweep tables; store it as NULL
    if value is None or (isinstance(value, float) and math.isnan(value)):
        return None
    return float(value)


class SweepRow(Base):
    __tablename__ = "sweep_row"

    row_id: Mapped[int] = mapped_column(primary_key=True, autoincrement=True)
    row_index: Mapped[int]
    scheme: Mapped[str]
    mu: Mapped[Optional[float]]
    tau: Mapped[Optional[float]]
    convergence_time: Mapped[Optional[float]]
    final_err: Mapped[Optional[float]]
    failed: Mapped[bool] = mapped_column(default=False)
    failure: Mapped[str] = mapped_column(default="")
    sweep: Mapped["Sweep"] = relationship(back_populates="rows")
    # Foreign key to link the row to its sweep
    sweep_id: Mapped[int] = mapped_column(ForeignKey("sweep.sweep_id"))

    def to_dict(self):
        row_dict = {
            "index": self.row_index,
            "scheme": self.scheme,
            "mu": self.mu,
            "tau": self.tau,
            "convergence_time": self.convergence_time,
            "final_err": self.final_err,
            "failed": self.failed,
            "failure": self.failure
        }
        return row_dict

    @classmethod
    def from_dict(cls, row_data):
        new_row = cls(
            row_index=row_data["index"],
            scheme=row_data["scheme"],
            mu=_optional(row_data.get("mu")),
            tau=_optional(row_data.get("tau")),
            convergence_time=_optional(row_data.get("convergence_time")),
            final_err=_optional(row_data.get("final_err")),
            failed=bool(row_data.get("failed", False)),
            failure=row_data.get("failure", "")
        )
        return new_row
