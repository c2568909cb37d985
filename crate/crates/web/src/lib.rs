//! wasm-bindgen exports for the static demo page in `www/`.

use classgit_core::analytics::{pairwise_similarity, SimilarityBand};
use classgit_core::diff3;
use classgit_core::objstore::{hash_object, ObjectKind};
use wasm_bindgen::prelude::*;

/// Object id of `content` stored as `kind` ("blob", "tree", or "commit").
#[wasm_bindgen(js_name = hashObject)]
pub fn hash_object_js(kind: &str, content: &str) -> Result<String, JsError> {
    let kind: ObjectKind = kind.parse().map_err(|e: classgit_core::Error| JsError::new(&e.to_string()))?;
    hash_object(kind, content.as_bytes())
        .map(|id| id.to_hex())
        .map_err(|e| JsError::new(&e.to_string()))
}

#[wasm_bindgen]
pub struct Similarity {
    score: f64,
    band: String,
}

#[wasm_bindgen]
impl Similarity {
    #[wasm_bindgen(getter)]
    pub fn score(&self) -> f64 {
        self.score
    }

    /// "high", "medium", or "distinct".
    #[wasm_bindgen(getter)]
    pub fn band(&self) -> String {
        self.band.clone()
    }
}

#[wasm_bindgen]
pub fn similarity(a: &str, b: &str) -> Similarity {
    let score = pairwise_similarity(a.as_bytes(), b.as_bytes());
    let band = match SimilarityBand::classify(score) {
        SimilarityBand::High => "high",
        SimilarityBand::Medium => "medium",
        SimilarityBand::Distinct => "distinct",
    };
    Similarity {
        score,
        band: band.into(),
    }
}

#[wasm_bindgen]
pub struct Merge {
    clean: bool,
    conflicts: usize,
    text: String,
}

#[wasm_bindgen]
impl Merge {
    #[wasm_bindgen(getter)]
    pub fn clean(&self) -> bool {
        self.clean
    }

    #[wasm_bindgen(getter)]
    pub fn conflicts(&self) -> usize {
        self.conflicts
    }

    /// Merged text, with conflict markers where the sides disagree.
    #[wasm_bindgen(getter)]
    pub fn text(&self) -> String {
        self.text.clone()
    }
}

#[wasm_bindgen]
pub fn merge3(base: &str, ours: &str, theirs: &str) -> Merge {
    let m = diff3::merge(base.as_bytes(), ours.as_bytes(), theirs.as_bytes());
    Merge {
        clean: m.is_clean(),
        conflicts: m.conflicts().len(),
        text: String::from_utf8_lossy(&m.render()).into_owned(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_blob_id() {
        assert_eq!(hash_object_js("blob", "").unwrap(), "e69de29bb2d1d6434b8b29ae775ad8c2e48c5391");
        assert_eq!(hash_object_js("blob", "hello\n").unwrap(), "ce013625030ba8dba906f756967f9e9ca394464a");
    }

    #[test]
    fn similarity_bands() {
        let s = similarity("a\nb\nc\n", "a\nb\nc\n");
        assert_eq!((s.score(), s.band().as_str()), (1.0, "high"));
        let s = similarity("a\nb\nc\nd\ne\n", "a\nb\nc\nd\nx\n");
        assert_eq!((s.score(), s.band().as_str()), (0.8, "medium"));
        assert_eq!(similarity("a\n", "b\n").band(), "distinct");
    }

    #[test]
    fn merges() {
        let m = merge3("a\nb\nc\n", "A\nb\nc\n", "a\nb\nC\n");
        assert!(m.clean());
        assert_eq!(m.text(), "A\nb\nC\n");
        let m = merge3("a\nb\n", "x\nb\n", "y\nb\n");
        assert_eq!(m.conflicts(), 1);
        assert_eq!(m.text(), "<<<<<<< ours\nx\n=======\ny\n>>>>>>> theirs\nb\n");
    }
}
