import pytest

from replytopics.pipeline import Pipeline, PipelineConfig
from replytopics.synth import generate, write_corpus


@pytest.fixture(scope="session")
def mini_pipeline(tmp_path_factory):
    """A small fully-run pipeline over a chain corpus, shared read-only."""
    root = tmp_path_factory.mktemp("mini")
    pairs, oracle = generate("chain", seed=2, n_emails=250)
    corpus_path = root / "corpus.jsonl"
    write_corpus(pairs, oracle, corpus_path)
    config = PipelineConfig(corpus=str(corpus_path),
                            out_dir=str(root / "out"),
                            m_grid=(6,), seed=1, sweeps=60,
                            vocab_min_df=2, t2_subsets="full")
    pipeline = Pipeline(config)
    pipeline.run_all()
    return config, pipeline
