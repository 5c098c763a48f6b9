//! File formats: images, indexed-palette masks, Middlebury `.flo` flow and
//! benchmark directory layouts.

mod davis;
mod flo;
mod image;
mod mask;

pub use self::davis::{ingest_davis_layout, list_mask_tree, IngestReport, SequenceSet};
pub use self::flo::{decode_flo, encode_flo, read_flo, write_flo, FLO_MAGIC};
pub use self::image::{read_image, write_gray, write_image};
pub use self::mask::{davis_palette, read_bitmap, read_label_mask, write_bitmap, write_label_mask};

use std::path::Path;

use crate::error::{Error, Result};

pub(crate) fn create_parent(path: &Path) -> Result<()> {
    if let Some(parent) = path.parent() {
        if !parent.as_os_str().is_empty() {
            std::fs::create_dir_all(parent).map_err(|e| Error::io(parent, e))?;
        }
    }
    Ok(())
}
