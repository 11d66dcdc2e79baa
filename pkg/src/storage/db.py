import json
import logging
import os
from datetime import datetime
from typing import Any, Dict, List, Optional

from sqlalchemy import Column, DateTime, Integer, String, Text, create_engine
from sqlalchemy.orm import Session, declarative_base, sessionmaker

from settings import settings

logger = logging.getLogger(__name__)

Base = declarative_base()


class RunRecord(Base):
    __tablename__ = "runs"

    id = Column(Integer, primary_key=True, index=True)
    experiment = Column(String(50), index=True)
    params = Column(Text)  # JSON
    seed = Column(Integer, nullable=True)
    outputs = Column(Text)  # JSON
    output_dir = Column(String(500))
    exit_status = Column(Integer, default=0)
    created_at = Column(DateTime, default=datetime.utcnow)


class RunLedger:
    """Append-only record of CLI runs, kept in SQLite next to the results."""

    def __init__(self, db_url: str):
        self.db_url = db_url
        self.engine = None
        self.SessionLocal = None
        self.init_db()

    @classmethod
    def for_output_dir(cls, output_dir: str, url_template: Optional[str] = None) -> "RunLedger":
        template = url_template or settings.storage.ledger_url
        return cls(template.format(output_dir=os.path.abspath(output_dir)))

    def init_db(self):
        self.engine = create_engine(self.db_url)
        self.SessionLocal = sessionmaker(autocommit=False, autoflush=False, bind=self.engine)
        Base.metadata.create_all(bind=self.engine)

    def get_session(self) -> Session:
        return self.SessionLocal()

    def record_run(
        self,
        experiment: str,
        params: Dict[str, Any],
        seed: Optional[int],
        outputs: Dict[str, Any],
        output_dir: str,
        exit_status: int = 0,
    ) -> int:
        session = self.get_session()
        try:
            record = RunRecord(
                experiment=experiment,
                params=json.dumps(params, sort_keys=True, default=str),
                seed=seed,
                outputs=json.dumps(outputs, sort_keys=True, default=str),
                output_dir=os.path.abspath(output_dir),
                exit_status=exit_status,
            )
            session.add(record)
            session.commit()
            logger.info(f"Recorded {experiment} run #{record.id} in {self.db_url}")
            return record.id
        finally:
            session.close()

    def runs(self, experiment: Optional[str] = None) -> List[RunRecord]:
        session = self.get_session()
        try:
            query = session.query(RunRecord)
            if experiment:
                query = query.filter(RunRecord.experiment == experiment)
            return query.order_by(RunRecord.id).all()
        finally:
            session.close()

    def close(self):
        if self.engine:
            self.engine.dispose()
