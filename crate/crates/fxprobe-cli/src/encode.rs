//! Embedding extraction: every rendered clip becomes a raw f32 file in the
//! exchange format, with a meta.json sidecar per encoder directory.

use crate::config::RunConfig;
use crate::layout::{self, Layout};
use anyhow::{bail, Context, Result};
use fxprobe::audio_io::read_wav;
use fxprobe::encoders::{
    encode, load_external, write_embedding, write_meta, EncoderConfig, ExternalMeta,
};
use fxprobe::{CORPUS_CLIP_SAMPLES, SAMPLE_RATE};
use rayon::prelude::*;
use std::path::Path;

pub fn cmd_encode(config: &RunConfig, layout: &Layout) -> Result<()> {
    let manifest = crate::render::load_manifest(layout)?;
    match &config.encoder {
        EncoderConfig::External { directory } => validate_external(&manifest, directory),
        _ => encode_builtin(config, layout, &manifest),
    }
}

/// An external encoder's embeddings are produced out of process; this stage
/// only checks that every manifest clip is present and well formed.
fn validate_external(
    manifest: &fxprobe::audio_io::CorpusManifest,
    directory: &Path,
) -> Result<()> {
    let meta = ExternalMeta::load(directory).context("external embedding directory")?;
    let failures: Vec<String> = manifest
        .entries
        .par_iter()
        .filter_map(|entry| {
            load_external(directory, &entry.clip_id, &meta)
                .map(|_| ())
                .err()
                .map(|e| format!("clip {}: {e}", entry.clip_id))
        })
        .collect();
    if !failures.is_empty() {
        for f in &failures {
            log::error!("external embedding: {f}");
        }
        bail!(
            "{} of {} external embeddings failed validation",
            failures.len(),
            manifest.entries.len()
        );
    }
    log::info!(
        "validated {} external embeddings in {}",
        manifest.entries.len(),
        directory.display()
    );
    Ok(())
}

fn encode_builtin(
    config: &RunConfig,
    layout: &Layout,
    manifest: &fxprobe::audio_io::CorpusManifest,
) -> Result<()> {
    let (dims, hop) = match &config.encoder {
        EncoderConfig::Mel(c) => (c.n_mels, c.hop),
        EncoderConfig::RandomProjection(c) => (c.dims, c.mel.hop),
        EncoderConfig::External { .. } => unreachable!("handled by caller"),
    };
    let expected_frames = CORPUS_CLIP_SAMPLES / hop;
    let meta = ExternalMeta::new(
        dims,
        f64::from(SAMPLE_RATE) / hop as f64,
        &config.encoder.encoder_id(),
    );

    let dir = layout.embeddings_dir(&config.encoder);
    std::fs::create_dir_all(&dir).with_context(|| format!("creating {}", dir.display()))?;
    let hash = layout::encode_hash(config)?;
    let resume = layout::hash_matches(&layout.encode_hash_path(&config.encoder), &hash);
    write_meta(&dir, &meta)?;

    enum Outcome {
        Encoded,
        Skipped,
        Failed(String),
    }
    let outcomes: Vec<Outcome> = manifest
        .entries
        .par_iter()
        .map(|entry| {
            let dst = dir.join(format!("{}.f32", entry.clip_id));
            if resume && dst.is_file() {
                match load_external(&dir, &entry.clip_id, &meta) {
                    Ok(seq) if seq.frames() == expected_frames && seq.dims() == dims => {
                        return Outcome::Skipped;
                    }
                    Ok(seq) => log::warn!(
                        "{}: stale shape ({}, {}); re-encoding",
                        dst.display(),
                        seq.frames(),
                        seq.dims()
                    ),
                    Err(e) => log::warn!("{}: {e}; re-encoding", dst.display()),
                }
            }
            let run = || -> Result<()> {
                let clip = read_wav(&layout.clip_path(&entry.clip_id))?;
                let seq = encode(&clip, &config.encoder)?;
                write_embedding(&dir, &entry.clip_id, &seq)?;
                Ok(())
            };
            match run() {
                Ok(()) => Outcome::Encoded,
                Err(e) => Outcome::Failed(format!("clip {}: {e:#}", entry.clip_id)),
            }
        })
        .collect();

    layout::write_hash(&layout.encode_hash_path(&config.encoder), &hash)?;

    let encoded = outcomes.iter().filter(|o| matches!(o, Outcome::Encoded)).count();
    let skipped = outcomes.iter().filter(|o| matches!(o, Outcome::Skipped)).count();
    let failures: Vec<&String> = outcomes
        .iter()
        .filter_map(|o| match o {
            Outcome::Failed(msg) => Some(msg),
            _ => None,
        })
        .collect();
    log::info!(
        "embeddings in {}: {encoded} encoded, {skipped} already valid",
        dir.display()
    );
    if !failures.is_empty() {
        for f in &failures {
            log::error!("encode failure: {f}");
        }
        bail!(
            "{} of {} clips failed to encode; the rest were written",
            failures.len(),
            manifest.entries.len()
        );
    }
    Ok(())
}
