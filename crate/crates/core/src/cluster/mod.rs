//! Word-type clusters: centroid accumulation, silhouette scoring and the
//! analyses built on the resulting report.

mod analysis;
mod centroid;
mod silhouette;

pub use analysis::{
    cohesion_vs_separation_test, group_contrast, per_type_rows, regress_silhouette, DroppedPredictor,
    RegressionRow, SilhouetteRegression, LN_DEFINITIONS, LN_FREQUENCY,
};
pub use centroid::{
    accumulate_centroids, accumulate_centroids_par, CentroidTable, Centroids, ClusterKey, ClusterSum, KeyMode,
    SHARD_SIZE,
};
pub use silhouette::{
    silhouette_corpus, silhouette_token, CorpusAggregate, SilhouetteOptions, SilhouetteReport, SilhouetteValue,
    TokenScore, TypeAggregate,
};
