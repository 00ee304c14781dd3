//! Toy residual and layer-norm stack for checking how an input segment
//! vector propagates to the output, plus a synthetic corpus generator.

mod stack;
mod synth;

pub use stack::{
    accumulated_segment_term, expand_layer, forward, layer_norm, moments, AccumulatedTerm, ForwardTrace,
    LayerExpansion, LayerParams, LayerTrace, StackConfig, SubLayer, SubLayerKind, TokenInput,
};
pub use synth::{
    gen_synthetic_corpus, segment_separability, SeparabilityOptions, SeparabilityReport, SyntheticCorpus,
    SyntheticParams,
};
