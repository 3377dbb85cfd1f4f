"""Shared fixtures: converted models built once per module."""

from __future__ import annotations

import pytest
import torch

from blendconvert import convert

from helpers_convert import TINY_SOURCES, VGG16_SOURCES, make_state, save_state


@pytest.fixture(scope="module")
def tiny_model(tmp_path_factory):
    """A converted vgg-tiny model plus everything needed to audit it."""
    root = tmp_path_factory.mktemp("tiny")
    state = make_state(TINY_SOURCES, seed=11, extra={"classifier.0.weight": torch.zeros((2, 8))})
    checkpoint = save_state(state, root / "tiny.pth")
    manifest_path = root / "tiny.json"
    report = convert(checkpoint, "vgg-tiny", manifest_path)
    return {
        "state": state,
        "checkpoint": checkpoint,
        "manifest": manifest_path,
        "blob": root / "tiny.blob",
        "report": report,
    }


@pytest.fixture(scope="module")
def vgg16_model(tmp_path_factory):
    """A converted full-shape vgg16 model (random synthetic weights)."""
    root = tmp_path_factory.mktemp("vgg16")
    state = make_state(VGG16_SOURCES, seed=13)
    checkpoint = save_state(state, root / "vgg16.pth")
    manifest_path = root / "vgg16.json"
    report = convert(checkpoint, "vgg16", manifest_path)
    return {
        "checkpoint": checkpoint,
        "manifest": manifest_path,
        "blob": root / "vgg16.blob",
        "report": report,
    }
