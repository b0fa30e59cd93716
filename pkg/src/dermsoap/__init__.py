"""dermsoap: weakly supervised SOAP note synthesis and evaluation for dermatology."""

from .banks import DescriptorBank, load_bank
from .dataset import (
    Caption,
    CaptionSource,
    CaptionTemplate,
    LesionClass,
    LesionRecord,
    caption_from_record,
    caption_via_backend,
    load_records,
)
from .embeddings import RemoteEmbeddingClient, StubEmbedder, cosine
from .generation import (
    GenerationBackend,
    MockSoapBackend,
    Prompt,
    RemoteBackend,
    TrainingTriple,
    build_soap_prompt,
    export_training,
    generate_note,
    read_training,
    synthesize_weak_dataset,
)
from .judge import (
    DEFAULT_RUBRIC,
    JudgeScores,
    Rubric,
    build_judge_prompt,
    judge_notes,
    parse_judge_response,
)
from .metrics import (
    CcsResult,
    PRF,
    SectionScore,
    ccs,
    chrf_pp,
    embed_f1,
    med_concept_eval,
    meteor,
    rouge_l,
    rouge_n,
    tokenize,
)
from .retrieval import (
    Chunk,
    Document,
    ScoredChunk,
    VectorIndex,
    assemble_context,
    build_index,
    chunk_documents,
    query,
)
from .soap import (
    SectionKind,
    SoapNote,
    ValidationReport,
    parse_soap,
    render_soap,
    validate_soap,
)
from .stats import AnovaResult, GroupedSamples, f_cdf, one_way_anova, reg_incomplete_beta

__version__ = "0.1.0"
