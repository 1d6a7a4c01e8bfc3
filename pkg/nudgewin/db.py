from sqlalchemy import create_engine, select
from sqlalchemy.orm import sessionmaker
from .models.base import Base
from .models.sweep import Sweep
from .models.sweep_row import SweepRow


def init_db(uri, echo=False):
    """Create the sweep tables if needed and return a session factory."""
    engine = create_engine(uri, echo=echo)
    Base.metadata.create_all(engine)
    return sessionmaker(bind=engine, expire_on_commit=False)


def store_sweep(session, label, config_hash, rows):
    """Persist one sweep table; rows are the dicts returned by experiment.sweep."""
    new_sweep = Sweep.from_dict({"label": label, "config_hash": config_hash})
    new_sweep.rows = [SweepRow.from_dict(row) for row in rows]
    session.add(new_sweep)
    session.commit()
    return new_sweep


def sweeps_for(session, config_hash):
    query = select(Sweep).where(Sweep.config_hash == config_hash).order_by(Sweep.sweep_id)
    return list(session.scalars(query))
