//! Synthetic clustered fixtures with a known ground truth.
//!
//! Products live in clusters. Each cluster has one image center and one text
//! center on their unit spheres; a product's vector is its cluster center
//! plus isotropic gaussian noise. Outfits draw all items from a single
//! cluster, so cluster identity is exactly the co-occurrence signal a
//! trained head should recover.
//!
//! With `modality_split`, clusters are paired: the first half of the pairs
//! share an image center (distinguishable only by text), the second half
//! share a text center (distinguishable only by image). Neither single
//! modality can separate every cluster, but both together can.

use std::path::{Path, PathBuf};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::embedding_store::{
    encode_femb, EmbeddingTable, Modality, ModalityEmbedding,
};
use crate::rng::{seeded, Stream};

use super::{DatasetError, Outfit};

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticParams {
    pub n_clusters: usize,
    pub products_per_cluster: usize,
    /// Items per outfit; every product anchors exactly one outfit.
    pub outfit_size: usize,
    pub d_img: usize,
    pub d_txt: usize,
    /// Standard deviation of the per-component gaussian noise.
    pub noise_sigma: f64,
    /// Pair up clusters so no single modality separates all of them.
    pub modality_split: bool,
    pub seed: u64,
}

impl Default for SyntheticParams {
    fn default() -> Self {
        Self {
            n_clusters: 8,
            products_per_cluster: 20,
            outfit_size: 4,
            d_img: 16,
            d_txt: 16,
            noise_sigma: 0.05,
            modality_split: false,
            seed: 42,
        }
    }
}

impl SyntheticParams {
    pub fn validate(&self) -> Result<(), DatasetError> {
        let bad = |reason: String| DatasetError::InvalidParameter { reason };
        if self.n_clusters == 0 {
            return Err(bad("n_clusters must be at least 1".to_string()));
        }
        if self.products_per_cluster == 0 {
            return Err(bad("products_per_cluster must be at least 1".to_string()));
        }
        if self.outfit_size == 0 {
            return Err(bad("outfit_size must be at least 1".to_string()));
        }
        if self.outfit_size > self.products_per_cluster {
            return Err(bad(format!(
                "outfit_size {} exceeds products_per_cluster {}",
                self.outfit_size, self.products_per_cluster
            )));
        }
        if self.d_img == 0 || self.d_txt == 0 {
            return Err(bad("embedding dimensions must be at least 1".to_string()));
        }
        if !self.noise_sigma.is_finite() || self.noise_sigma < 0.0 {
            return Err(bad(format!("noise_sigma must be finite and >= 0, got {}", self.noise_sigma)));
        }
        if self.modality_split && self.n_clusters % 4 != 0 {
            return Err(bad(format!(
                "modality_split needs n_clusters divisible by 4, got {}",
                self.n_clusters
            )));
        }
        Ok(())
    }

    pub fn n_products(&self) -> usize {
        self.n_clusters * self.products_per_cluster
    }
}

/// A generated fixture, in memory. `manifest` maps each product to its
/// cluster as `cluster=<k>` metadata.
#[derive(Debug, Clone)]
pub struct SyntheticData {
    pub image: EmbeddingTable,
    pub text: EmbeddingTable,
    pub outfits: Vec<Outfit>,
    pub manifest: Vec<(String, String)>,
}

/// Paths written by [`SyntheticData::write_to`].
#[derive(Debug, Clone)]
pub struct SyntheticFiles {
    pub image: PathBuf,
    pub text: PathBuf,
    pub outfits: PathBuf,
    pub manifest: PathBuf,
}

impl SyntheticData {
    /// Writes `image.femb`, `text.femb`, `outfits.jsonl` and `manifest.tsv`
    /// into `dir`.
    pub fn write_to(&self, dir: &Path) -> Result<SyntheticFiles, DatasetError> {
        let files = SyntheticFiles {
            image: dir.join("image.femb"),
            text: dir.join("text.femb"),
            outfits: dir.join("outfits.jsonl"),
            manifest: dir.join("manifest.tsv"),
        };
        std::fs::write(&files.image, encode_femb(&self.image, Modality::Image))?;
        std::fs::write(&files.text, encode_femb(&self.text, Modality::Text))?;
        super::write_outfits(&self.outfits, &files.outfits)?;
        let mut manifest = String::new();
        for (id, meta) in &self.manifest {
            manifest.push_str(id);
            manifest.push('\t');
            manifest.push_str(meta);
            manifest.push('\n');
        }
        std::fs::write(&files.manifest, manifest)?;
        Ok(files)
    }
}

fn unit_vector(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if norm > 1e-9 {
            return v.into_iter().map(|x| x / norm).collect();
        }
    }
}

fn product_id(cluster: usize, index: usize) -> String {
    format!("c{cluster:03}p{index:03}")
}

/// Deterministic in `params.seed`.
pub fn generate_synthetic(params: &SyntheticParams) -> Result<SyntheticData, DatasetError> {
    params.validate()?;
    let mut rng = seeded(params.seed, Stream::Synthetic, 0);

    let mut image_centers: Vec<Vec<f64>> =
        (0..params.n_clusters).map(|_| unit_vector(&mut rng, params.d_img)).collect();
    let mut text_centers: Vec<Vec<f64>> =
        (0..params.n_clusters).map(|_| unit_vector(&mut rng, params.d_txt)).collect();
    if params.modality_split {
        // Cluster pairs (2a, 2a+1): the first half of the pairs collapse in
        // image space, the second half collapse in text space.
        let n_pairs = params.n_clusters / 2;
        for a in 0..n_pairs {
            let (lo, hi) = (2 * a, 2 * a + 1);
            if a < n_pairs / 2 {
                image_centers[hi] = image_centers[lo].clone();
            } else {
                text_centers[hi] = text_centers[lo].clone();
            }
        }
    }

    let n_products = params.n_products();
    let mut image_records = Vec::with_capacity(n_products);
    let mut text_records = Vec::with_capacity(n_products);
    let mut manifest = Vec::with_capacity(n_products);
    for cluster in 0..params.n_clusters {
        for index in 0..params.products_per_cluster {
            let id = product_id(cluster, index);
            let noisy = |center: &[f64], rng: &mut ChaCha8Rng| -> Vec<f32> {
                center
                    .iter()
                    .map(|&c| {
                        let noise: f64 = rng.sample(StandardNormal);
                        (c + params.noise_sigma * noise) as f32
                    })
                    .collect()
            };
            image_records.push(ModalityEmbedding {
                product_id: id.clone(),
                vector: noisy(&image_centers[cluster], &mut rng),
            });
            text_records.push(ModalityEmbedding {
                product_id: id.clone(),
                vector: noisy(&text_centers[cluster], &mut rng),
            });
            manifest.push((id, format!("cluster={cluster}")));
        }
    }

    // One outfit per product: the anchor plus `outfit_size - 1` other
    // products of its cluster.
    let mut outfits = Vec::with_capacity(n_products);
    for cluster in 0..params.n_clusters {
        for anchor in 0..params.products_per_cluster {
            let mut items = vec![product_id(cluster, anchor)];
            if params.outfit_size > 1 {
                let mut picked = rand::seq::index::sample(
                    &mut rng,
                    params.products_per_cluster - 1,
                    params.outfit_size - 1,
                )
                .into_vec();
                picked.sort_unstable();
                // Indices skip the anchor position.
                items.extend(picked.into_iter().map(|raw| {
                    let index = if raw >= anchor { raw + 1 } else { raw };
                    product_id(cluster, index)
                }));
            }
            outfits.push(Outfit { outfit_id: format!("o-c{cluster:03}-{anchor:03}"), items });
        }
    }

    let image = EmbeddingTable::new(params.d_img, image_records)
        .expect("generated image records are valid by construction");
    let text = EmbeddingTable::new(params.d_txt, text_records)
        .expect("generated text records are valid by construction");
    Ok(SyntheticData { image, text, outfits, manifest })
}
