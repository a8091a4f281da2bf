from datetime import datetime

from kahler_dynamics import db


class RunRecord(db.Model):
    __tablename__ = 'runs'

    id = db.Column(db.Integer, primary_key=True)
    command = db.Column(db.String(20), nullable=False)
    config_digest = db.Column(db.String(64), nullable=False)
    output_path = db.Column(db.String(255))
    format = db.Column(db.Enum('json', 'csv'), default='json')
    status = db.Column(db.Enum('running', 'succeeded', 'failed'), default='running')
    error_code = db.Column(db.String(40))
    started_at = db.Column(db.DateTime, default=datetime.utcnow)
    finished_at = db.Column(db.DateTime)

    def finish(self, error_code=None):
        self.status = 'failed' if error_code else 'succeeded'
        self.error_code = error_code
        self.finished_at = datetime.utcnow()

    def __repr__(self):
        return f'<RunRecord {self.id} {self.command} - {self.status}>'
