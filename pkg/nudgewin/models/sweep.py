from sqlalchemy.orm import Mapped, mapped_column, relationship
from .base import Base


class Sweep(Base):
    __tablename__ = "sweep"

    sweep_id: Mapped[int] = mapped_column(primary_key=True, autoincrement=True)
    label: Mapped[str]
    config_hash: Mapped[str]
    rows: Mapped[list["SweepRow"]] = relationship(
        back_populates="sweep", order_by="SweepRow.row_index", cascade="all, delete-orphan"
    )

    def to_dict(self):
        sweep_dict = {
            "id": self.sweep_id,
            "label": self.label,
            "config_hash": self.config_hash
        }
        if self.rows:
            sweep_dict["rows"] = [row.to_dict() for row in self.rows]
        return sweep_dict

    @classmethod
    def from_dict(cls, sweep_data):
        new_sweep = cls(
            label=sweep_data["label"],
            config_hash=sweep_data["config_hash"]
        )
        return new_sweep

    def best_row(self):
        """The converged row with the earliest convergence time, or None."""
        converged = [row for row in self.rows if row.convergence_time is not None]
        if not converged:
            return None
        return min(converged, key=lambda row: (row.convergence_time, row.row_index))
