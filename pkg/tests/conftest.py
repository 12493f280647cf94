"""Shared fixtures: the default atlas and trained models are expensive, so
they are built once per session and reused across test modules."""
from __future__ import annotations

import pytest

from ftr.recognize import train_classifier
from ftr.segment import train_char_detector
from ftr.synth import (ConstructionSpace, NoiseSpec, build_default_atlas,
                       default_layout, generate_corpus, generate_line_dataset,
                       save_corpus)

TRAIN_SEED = 11
PER_LABEL = 12


@pytest.fixture(scope="session")
def atlas():
    return build_default_atlas()


@pytest.fixture(scope="session")
def space():
    return ConstructionSpace()


@pytest.fixture(scope="session")
def line_dataset(atlas, space):
    return generate_line_dataset(atlas, space, PER_LABEL, seed=TRAIN_SEED)


@pytest.fixture(scope="session")
def char_detector(atlas, line_dataset):
    samples = [(s.image, s.label) for s in line_dataset.subset("train")]
    return train_char_detector(samples, atlas.scripts)


@pytest.fixture(scope="session")
def chinese_classifier(atlas, line_dataset):
    samples = [(s.image, s.label) for s in line_dataset.subset("train")
               if atlas.scripts[s.label] == "chinese"]
    return train_classifier(samples)


@pytest.fixture(scope="session")
def model_dir(tmp_path_factory, char_detector, chinese_classifier):
    d = tmp_path_factory.mktemp("models")
    char_detector.save(d / "detector.json")
    chinese_classifier.save(d / "chinese.json")
    return d


@pytest.fixture(scope="session")
def clean_corpus(tmp_path_factory, atlas, space):
    """Small noise-free corpus with ground truth and keyword declarations."""
    d = tmp_path_factory.mktemp("corpus")
    layout = default_layout(atlas, n_fields=3)
    corpus = generate_corpus(atlas, layout, space, NoiseSpec(), count=4, seed=700)
    save_corpus(corpus, d, keywords=layout.keyword_dict())
    return d
