from .atlas import GlyphAtlas, build_default_atlas, GLYPH_SIZE
from .space import AxisRange, ConstructionSpace, SpacePoint, identity_point
from .noise import NoiseSpec, apply_noise, rotate_box, NOISE_PRESETS
from .ticket import (
    FieldTemplate,
    LayoutSpec,
    Region,
    TicketRecord,
    default_layout,
    generate_ticket,
    generate_corpus,
    save_corpus,
    load_ticket,
)
from .dataset import (GlyphSample, GlyphDataset, LayoutOverflowError, render_glyph,
                      render_string, generate_glyph_dataset, generate_line_dataset)

__all__ = [
    "GlyphAtlas", "build_default_atlas", "GLYPH_SIZE",
    "AxisRange", "ConstructionSpace", "SpacePoint", "identity_point",
    "NoiseSpec", "apply_noise", "rotate_box", "NOISE_PRESETS",
    "FieldTemplate", "LayoutSpec", "Region", "TicketRecord",
    "default_layout", "generate_ticket", "generate_corpus", "save_corpus", "load_ticket",
    "GlyphSample", "GlyphDataset", "LayoutOverflowError", "render_glyph",
    "render_string", "generate_glyph_dataset", "generate_line_dataset",
]
