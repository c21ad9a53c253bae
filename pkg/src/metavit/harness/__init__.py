"""Campaign configuration, orchestration, trial persistence and reporting."""
from .campaign import PartialCampaignError, resume_campaign, run_campaign, summarize
from .config import ConfigError, RunConfig, from_dict, load_config
from .report import write_report
from .trials import TrialLog, TrialRecord, strip_wall_time
