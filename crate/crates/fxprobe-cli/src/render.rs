//! Corpus rendering: normalized sources, ten effect variants per source,
//! and the manifest tying them together.

use crate::config::{CorpusConfig, RunConfig};
use crate::layout::{self, Layout};
use anyhow::{anyhow, bail, Context, Result};
use fxprobe::audio_io::{
    assign_splits, read_wav, slice_clips, synth_manifest, synth_source, write_wav, AudioClip,
    CorpusManifest, Instrument, ManifestEntry, Split,
};
use fxprobe::effects::{apply_effect, EffectId, EffectSpec};
use fxprobe::loudness::normalize_loudness;
use fxprobe::CORPUS_CLIP_SAMPLES;
use rayon::prelude::*;
use std::path::PathBuf;

struct SourceJob {
    id: String,
    instrument: Instrument,
    split: Split,
    /// None means synthesize on demand (synth corpus); Some holds a slice of
    /// external audio.
    audio: Option<AudioClip>,
    synth_index: u64,
}

struct SourceOutcome {
    entries: Vec<ManifestEntry>,
    failures: Vec<String>,
}

pub fn cmd_render(config: &RunConfig, layout: &Layout) -> Result<()> {
    let hash = layout::render_hash(config)?;
    let resume = layout::hash_matches(&layout.render_hash_path(), &hash);
    if resume {
        if let Some(manifest) = complete_outputs(layout) {
            log::info!(
                "render outputs up to date ({} clips); skipping",
                manifest.entries.len()
            );
            return Ok(());
        }
    }

    std::fs::create_dir_all(layout.sources_dir())
        .with_context(|| format!("creating {}", layout.sources_dir().display()))?;
    std::fs::create_dir_all(layout.clips_dir())
        .with_context(|| format!("creating {}", layout.clips_dir().display()))?;

    let jobs = source_jobs(config)?;
    log::info!(
        "rendering {} sources x {} effects into {}",
        jobs.len(),
        EffectId::ALL.len(),
        layout.root.display()
    );

    let outcomes: Vec<SourceOutcome> = jobs
        .par_iter()
        .map(|job| render_source(job, config, layout, resume))
        .collect();

    let mut entries = Vec::with_capacity(jobs.len() * EffectId::ALL.len());
    let mut failures = Vec::new();
    for outcome in outcomes {
        entries.extend(outcome.entries);
        failures.extend(outcome.failures);
    }

    let manifest = CorpusManifest {
        seed: config.seed,
        entries,
    };
    manifest.validate().context("rendered manifest")?;
    manifest
        .save(&layout.manifest_path())
        .context("writing manifest")?;
    layout::write_hash(&layout.render_hash_path(), &hash)?;
    log::info!("rendered {} clips", manifest.entries.len());

    if !failures.is_empty() {
        for f in &failures {
            log::error!("render failure: {f}");
        }
        bail!(
            "{} of {} clips failed to render; the rest were written",
            failures.len(),
            jobs.len() * EffectId::ALL.len()
        );
    }
    Ok(())
}

/// The manifest plus every file it implies, if all are present and sound.
fn complete_outputs(layout: &Layout) -> Option<CorpusManifest> {
    let manifest = CorpusManifest::load(&layout.manifest_path()).ok()?;
    manifest.validate().ok()?;
    for entry in &manifest.entries {
        if !layout::file_nonempty(&layout.root.join(&entry.source))
            || !layout::file_nonempty(&layout.clip_path(&entry.clip_id))
        {
            return None;
        }
    }
    Some(manifest)
}

fn source_jobs(config: &RunConfig) -> Result<Vec<SourceJob>> {
    match &config.corpus {
        CorpusConfig::Synth(c) => {
            let manifest = synth_manifest(c.n_per_instrument, config.seed);
            Ok(manifest
                .entries
                .into_iter()
                .enumerate()
                .map(|(i, e)| SourceJob {
                    id: e.clip_id,
                    instrument: e.instrument,
                    split: e.split,
                    audio: None,
                    synth_index: (i % c.n_per_instrument) as u64,
                })
                .collect())
        }
        CorpusConfig::External(c) => external_jobs(config, &c.input_dir),
    }
}

fn external_jobs(config: &RunConfig, input_dir: &PathBuf) -> Result<Vec<SourceJob>> {
    let mut files: Vec<PathBuf> = std::fs::read_dir(input_dir)
        .with_context(|| format!("reading input dir {}", input_dir.display()))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| {
            p.extension()
                .map(|x| x.eq_ignore_ascii_case("wav"))
                .unwrap_or(false)
        })
        .collect();
    files.sort();
    if files.is_empty() {
        bail!("input dir {} contains no .wav files", input_dir.display());
    }

    let mut slices = Vec::new();
    for file in &files {
        let clip = read_wav(file).with_context(|| format!("reading {}", file.display()))?;
        let stem = file
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| "clip".to_string());
        let windows = slice_clips(&clip, CORPUS_CLIP_SAMPLES)
            .with_context(|| format!("slicing {}", file.display()))?;
        if windows.is_empty() {
            log::warn!(
                "{} is shorter than one corpus window; skipped",
                file.display()
            );
        }
        for (k, window) in windows.into_iter().enumerate() {
            slices.push((format!("{stem}-{k:03}"), window));
        }
    }
    if slices.is_empty() {
        bail!("no file in {} spans a full corpus window", input_dir.display());
    }

    let splits = assign_splits(slices.len(), config.seed, Instrument::External.label());
    Ok(slices
        .into_iter()
        .zip(splits)
        .map(|((id, audio), split)| SourceJob {
            id,
            instrument: Instrument::External,
            split,
            audio: Some(audio),
            synth_index: 0,
        })
        .collect())
}

fn render_source(
    job: &SourceJob,
    config: &RunConfig,
    layout: &Layout,
    resume: bool,
) -> SourceOutcome {
    let entry = |fx: EffectId| ManifestEntry {
        clip_id: format!("{}__{}", job.id, fx.code()),
        source: PathBuf::from(format!("sources/{}.wav", job.id)),
        instrument: job.instrument,
        effect: fx,
        param_value: None,
        split: job.split,
    };

    let source_path = layout.root.join(format!("sources/{}.wav", job.id));
    if resume
        && layout::file_nonempty(&source_path)
        && EffectId::ALL
            .iter()
            .all(|fx| layout::file_nonempty(&layout.clip_path(&entry(*fx).clip_id)))
    {
        return SourceOutcome {
            entries: EffectId::ALL.iter().map(|&fx| entry(fx)).collect(),
            failures: Vec::new(),
        };
    }

    let prepare = || -> Result<AudioClip> {
        let raw = match &job.audio {
            Some(clip) => clip.clone(),
            None => synth_source(job.instrument, config.seed, job.synth_index)?,
        };
        let normalized = normalize_loudness(&raw, config.target_lufs)?;
        write_wav(&normalized, &source_path)?;
        Ok(normalized)
    };
    let source = match prepare() {
        Ok(clip) => clip,
        Err(e) => {
            return SourceOutcome {
                entries: Vec::new(),
                failures: vec![format!("source {}: {e:#}", job.id)],
            }
        }
    };

    let mut entries = Vec::with_capacity(EffectId::ALL.len());
    let mut failures = Vec::new();
    for fx in EffectId::ALL {
        let entry = entry(fx);
        let render = || -> Result<()> {
            let spec = EffectSpec::with_defaults(fx);
            let wet = apply_effect(&source, &spec)?;
            let leveled = normalize_loudness(&wet, config.target_lufs)?;
            write_wav(&leveled, &layout.clip_path(&entry.clip_id))?;
            Ok(())
        };
        match render() {
            Ok(()) => entries.push(entry),
            Err(e) => failures.push(format!("clip {}: {e:#}", entry.clip_id)),
        }
    }
    SourceOutcome { entries, failures }
}

pub fn load_manifest(layout: &Layout) -> Result<CorpusManifest> {
    let path = layout.manifest_path();
    let manifest = CorpusManifest::load(&path)
        .map_err(|e| anyhow!("{e} (run `fxprobe render` first?)"))
        .with_context(|| format!("loading {}", path.display()))?;
    manifest.validate()?;
    Ok(manifest)
}
