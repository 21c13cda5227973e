from .catalog import (
    PortType, ParamType, ParamSpec, InputSpec, ModelRule, ApiSpec, API_IDS,
    ApiCatalog
)
from .config import (
    PIPELINE_SCHEMA_VERSION, SCENARIO_FIELDS, CONVERT_PATH,
    StrategySelection, Binding, StageConfig, PipelineConfig
)
from .parse import extract_block, parse_selection, parse_pipeline, parse_table
from .validate import scenario_values, pipeline_violations, validate_pipeline
from .execute import FIT_SHARE, path_to_reference, execute_pipeline
from .prompts import (
    HISTORY_LIMIT, DocsMode, DocsBundle, load_template, system_prompt,
    prompt_messages, retrieve_api_docs, build_selection_prompt,
    build_pipeline_prompt, build_baseline_prompt
)
from .episode import (
    MAX_ROUNDS, DEFAULT_TIMEOUT_S, REASK_AFTER, ErrorKind, RoundRecord,
    EpisodeResult, diagnostic_summary, run_episode, predict_baseline_episode,
    count_errors
)
