//! Persistence: epoch bundles, CSV import, and model files.

mod bundle;
mod json;
mod model;

pub use bundle::{
    import_csv, load_bundle, load_epochs, load_matrix_csv, manifest_path, save_epochs,
    BundleManifest, BUNDLE_FORMAT_VERSION,
};
pub use json::{read_json_file, to_json_string, write_json_file};
pub use model::{
    FlipFlopDiagnostics, ModelFile, WaveletMetadata, MODEL_FORMAT_VERSION,
};
