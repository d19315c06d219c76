//! Seeded synthetic gaze recordings with one generative profile per task.
//!
//! Gaze is a sequence of fixations: the eye jitters around a fixation point
//! that drifts slowly and occasionally jumps to a new target drawn around one
//! of the profile's regions of interest. Each user has a fixed gaze offset,
//! pupil scale and head-camera gain, so the same task looks slightly
//! different from user to user.

use std::path::{Path, PathBuf};

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gaze_data::{write_manifest, write_trial_csv, GazeSample, LabelSet, ManifestEntry, TaskLabel, Trial};
use crate::rng;

pub const SCREEN_WIDTH: f64 = 1024.0;
pub const SCREEN_HEIGHT: f64 = 768.0;
pub const SAMPLE_INTERVAL_MS: u64 = 2;

const HREF_GAIN: f64 = 1.8;
const USER_STREAM_BASE: u64 = 1 << 32;

#[derive(Debug, Clone, PartialEq)]
pub struct TaskProfile {
    pub name: String,
    /// Centres of the screen regions targeted by jumps, in pixels.
    pub regions: Vec<[f64; 2]>,
    /// Std of jump targets around their region centre.
    pub region_spread: f64,
    /// Per-sample probability of a jump to a new fixation.
    pub jump_rate: f64,
    /// Std of the fixation random walk, per sample.
    pub drift: f64,
    /// Std of gaze jitter around the fixation point.
    pub dispersion: f64,
    pub pupil_mean: f64,
    pub pupil_std: f64,
    pub blink_rate: f64,
    /// Jumps cycle through regions in order instead of picking at random.
    pub alternate: bool,
}

impl TaskProfile {
    pub fn blank() -> Self {
        TaskProfile {
            name: "Blank".into(),
            regions: vec![[SCREEN_WIDTH / 2.0, SCREEN_HEIGHT / 2.0]],
            region_spread: 40.0,
            jump_rate: 0.006,
            drift: 0.5,
            dispersion: 19.0,
            pupil_mean: 1250.0,
            pupil_std: 40.0,
            blink_rate: 0.02,
            alternate: false,
        }
    }

    pub fn waldo() -> Self {
        TaskProfile {
            name: "Waldo".into(),
            regions: vec![[SCREEN_WIDTH / 2.0, SCREEN_HEIGHT / 2.0]],
            region_spread: 480.0,
            jump_rate: 0.04,
            drift: 0.8,
            dispersion: 29.0,
            pupil_mean: 1000.0,
            pupil_std: 40.0,
            blink_rate: 0.02,
            alternate: false,
        }
    }

    pub fn natural() -> Self {
        TaskProfile {
            name: "Natural".into(),
            regions: vec![[SCREEN_WIDTH / 2.0, SCREEN_HEIGHT / 2.0 - 40.0]],
            region_spread: 190.0,
            jump_rate: 0.025,
            drift: 1.6,
            dispersion: 29.0,
            pupil_mean: 1100.0,
            pupil_std: 40.0,
            blink_rate: 0.02,
            alternate: false,
        }
    }

    pub fn puzzle() -> Self {
        TaskProfile {
            name: "Puzzle".into(),
            regions: vec![
                [SCREEN_WIDTH / 2.0 - 190.0, SCREEN_HEIGHT / 2.0],
                [SCREEN_WIDTH / 2.0 + 190.0, SCREEN_HEIGHT / 2.0],
            ],
            region_spread: 96.0,
            jump_rate: 0.025,
            drift: 1.0,
            dispersion: 29.0,
            pupil_mean: 1170.0,
            pupil_std: 40.0,
            blink_rate: 0.02,
            alternate: true,
        }
    }

    fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::Config(format!("profile `{}`: {what}", self.name)));
        if self.regions.is_empty() {
            return bad("needs at least one region");
        }
        let nonneg = [self.region_spread, self.drift, self.dispersion, self.pupil_std];
        if nonneg.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return bad("spreads must be finite and non-negative");
        }
        if !(self.pupil_mean.is_finite() && self.pupil_mean > 0.0) {
            return bad("pupil mean must be positive");
        }
        if !(0.0..=1.0).contains(&self.jump_rate) {
            return bad("jump rate must lie in [0, 1]");
        }
        if !(0.0..1.0).contains(&self.blink_rate) {
            return bad("blink rate must lie in [0, 1)");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub n_users: usize,
    pub samples_per_trial: usize,
    pub seed: u64,
    /// Multiplies every spatial spread and per-user offset.
    pub noise_scale: f64,
    /// One profile per task, in label order.
    pub task_profiles: Vec<TaskProfile>,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            n_users: 20,
            samples_per_trial: 500,
            seed: 42,
            noise_scale: 1.0,
            task_profiles: vec![
                TaskProfile::blank(),
                TaskProfile::waldo(),
                TaskProfile::natural(),
                TaskProfile::puzzle(),
            ],
        }
    }
}

impl SynthConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_users == 0 || self.samples_per_trial == 0 {
            return Err(Error::Config("user and sample counts must be positive".into()));
        }
        if !(self.noise_scale.is_finite() && self.noise_scale > 0.0) {
            return Err(Error::Config(format!("noise scale must be positive, got {}", self.noise_scale)));
        }
        self.label_set()?;
        self.task_profiles.iter().try_for_each(TaskProfile::validate)
    }

    pub fn label_set(&self) -> Result<LabelSet> {
        LabelSet::new(self.task_profiles.iter().map(|p| p.name.clone()))
    }
}

struct UserTraits {
    offset: [f64; 2],
    pupil_scale: f64,
    href_gain: f64,
}

impl UserTraits {
    fn draw(seed: u64, user: usize, noise: f64) -> Self {
        let mut r = rng::seeded_stream(seed, USER_STREAM_BASE + user as u64);
        let n = |r: &mut rng::SeededRng, sd: f64| Normal::new(0.0, sd).expect("finite std").sample(r);
        UserTraits {
            offset: [n(&mut r, 32.0 * noise), n(&mut r, 32.0 * noise)],
            pupil_scale: 1.0 + n(&mut r, 0.03),
            href_gain: HREF_GAIN * (1.0 + n(&mut r, 0.03)),
        }
    }
}

fn user_id(user: usize, n_users: usize) -> String {
    let width = n_users.to_string().len().max(2);
    format!("u{:0width$}", user + 1)
}

fn generate_trial(cfg: &SynthConfig, user: usize, traits: &UserTraits, task: usize) -> Trial {
    let p = &cfg.task_profiles[task];
    let noise = cfg.noise_scale;
    let stream = (user * cfg.task_profiles.len() + task) as u64;
    let mut r = rng::seeded_stream(cfg.seed, stream);
    let std_normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut z = |r: &mut rng::SeededRng| std_normal.sample(r);

    let mut region = r.random_range(0..p.regions.len());
    let target = |region: usize, r: &mut rng::SeededRng, z: &mut dyn FnMut(&mut rng::SeededRng) -> f64| {
        let c = p.regions[region];
        [c[0] + traits.offset[0] + p.region_spread * noise * z(r), c[1] + traits.offset[1] + p.region_spread * noise * z(r)]
    };
    let mut fix = target(region, &mut r, &mut z);
    let mut head = [0.0f64; 2];
    let mut pupil_noise = 0.0f64;
    // AR(1) pupil fluctuation with stationary std equal to the profile's.
    let rho = 0.99f64;
    let innovation = p.pupil_std * (1.0 - rho * rho).sqrt();

    let mut samples = Vec::with_capacity(cfg.samples_per_trial);
    for i in 0..cfg.samples_per_trial {
        if r.random::<f64>() < p.jump_rate {
            region = if p.alternate {
                (region + 1) % p.regions.len()
            } else {
                r.random_range(0..p.regions.len())
            };
            fix = target(region, &mut r, &mut z);
        } else {
            fix[0] += p.drift * noise * z(&mut r);
            fix[1] += p.drift * noise * z(&mut r);
        }
        let x = (fix[0] + p.dispersion * noise * z(&mut r)).clamp(0.0, SCREEN_WIDTH);
        let y = (fix[1] + p.dispersion * noise * z(&mut r)).clamp(0.0, SCREEN_HEIGHT);
        head[0] += 0.5 * z(&mut r);
        head[1] += 0.5 * z(&mut r);
        let hx = traits.href_gain * (x - SCREEN_WIDTH / 2.0) + head[0];
        let hy = traits.href_gain * (y - SCREEN_HEIGHT / 2.0) + head[1];
        pupil_noise = rho * pupil_noise + innovation * z(&mut r);
        let lp = (traits.pupil_scale * p.pupil_mean + pupil_noise).max(1.0);
        let rp = (0.97 * lp + 8.0 * z(&mut r)).max(1.0);
        let (lp, rp) = if r.random::<f64>() < p.blink_rate { (0.0, 0.0) } else { (lp, rp) };
        samples.push(GazeSample::new(i as u64 * SAMPLE_INTERVAL_MS, [x, y, hx, hy, lp, rp]));
    }
    Trial {
        user_id: user_id(user, cfg.n_users),
        task: TaskLabel::new(task),
        samples,
    }
}

/// One trial per (user, task) pair, user-major. Every trial draws from its own
/// seed-derived stream, so the output is independent of thread scheduling.
pub fn generate(cfg: &SynthConfig) -> Result<Vec<Trial>> {
    cfg.validate()?;
    let traits: Vec<UserTraits> = (0..cfg.n_users).map(|u| UserTraits::draw(cfg.seed, u, cfg.noise_scale)).collect();
    let n_tasks = cfg.task_profiles.len();
    Ok((0..cfg.n_users * n_tasks)
        .into_par_iter()
        .map(|k| generate_trial(cfg, k / n_tasks, &traits[k / n_tasks], k % n_tasks))
        .collect())
}

/// Writes each trial as `<user>_<task>.csv` under `dir` plus `manifest.csv`
/// with relative paths. Returns the manifest path.
pub fn write_corpus(dir: impl AsRef<Path>, trials: &[Trial], labels: &LabelSet) -> Result<PathBuf> {
    let dir = dir.as_ref();
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let entries: Vec<ManifestEntry> = trials
        .iter()
        .map(|t| ManifestEntry {
            path: PathBuf::from(format!("{}_{}.csv", t.user_id, labels.name(t.task).to_lowercase())),
            user_id: t.user_id.clone(),
            task: t.task,
        })
        .collect();
    trials
        .par_iter()
        .zip(&entries)
        .try_for_each(|(t, e)| write_trial_csv(dir.join(&e.path), t))?;
    let manifest = dir.join("manifest.csv");
    write_manifest(&manifest, &entries, labels)?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::preprocess::mean_std;

    fn small(seed: u64) -> SynthConfig {
        SynthConfig {
            n_users: 3,
            samples_per_trial: 400,
            seed,
            ..Default::default()
        }
    }

    #[test]
    fn deterministic() {
        assert_eq!(generate(&small(9)).unwrap(), generate(&small(9)).unwrap());
        assert_ne!(generate(&small(9)).unwrap(), generate(&small(10)).unwrap());
    }

    #[test]
    fn counts() {
        let cfg = SynthConfig {
            n_users: 10,
            samples_per_trial: 1000,
            ..Default::default()
        };
        let trials = generate(&cfg).unwrap();
        assert_eq!(trials.len(), 40);
        assert_eq!(trials.iter().map(|t| t.samples.len()).sum::<usize>(), 40_000);
        assert_eq!(trials[5].user_id, "u02");
        assert_eq!(trials[5].task, TaskLabel::new(1));
    }

    fn gaze_spread(t: &Trial) -> f64 {
        let sx = mean_std(t.samples.iter().map(|s| s.lx_pix.unwrap())).1;
        let sy = mean_std(t.samples.iter().map(|s| s.ly_pix.unwrap())).1;
        sx.hypot(sy)
    }

    #[test]
    fn blank_is_tighter_than_waldo() {
        for seed in 0..100 {
            let cfg = SynthConfig {
                n_users: 1,
                samples_per_trial: 500,
                seed,
                ..Default::default()
            };
            let trials = generate(&cfg).unwrap();
            assert!(gaze_spread(&trials[0]) < gaze_spread(&trials[1]), "seed {seed}");
        }
    }

    #[test]
    fn blink_fraction_matches_rate() {
        for rate in [0.0, 0.02, 0.1, 0.3] {
            let mut cfg = SynthConfig {
                n_users: 5,
                samples_per_trial: 1000,
                ..Default::default()
            };
            for p in &mut cfg.task_profiles {
                p.blink_rate = rate;
            }
            let trials = generate(&cfg).unwrap();
            let total: usize = trials.iter().map(|t| t.samples.len()).sum();
            let blinks = trials.iter().flat_map(|t| &t.samples).filter(|s| s.lp == Some(0.0)).count();
            let frac = blinks as f64 / total as f64;
            assert!((frac - rate).abs() <= 0.02, "rate {rate}: {frac}");
        }
    }

    #[test]
    fn rejects_bad_config() {
        let mut cfg = small(0);
        cfg.task_profiles[0].blink_rate = 1.0;
        assert!(generate(&cfg).is_err());
        let cfg = SynthConfig { n_users: 0, ..small(0) };
        assert!(generate(&cfg).is_err());
        let cfg = SynthConfig { noise_scale: 0.0, ..small(0) };
        assert!(generate(&cfg).is_err());
    }

    #[test]
    fn corpus_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = SynthConfig {
            n_users: 2,
            samples_per_trial: 50,
            ..Default::default()
        };
        let trials = generate(&cfg).unwrap();
        let labels = cfg.label_set().unwrap();
        let manifest = write_corpus(dir.path(), &trials, &labels).unwrap();
        let back = crate::gaze_data::load_manifest(&manifest, &labels).unwrap();
        assert_eq!(back, trials);
    }
}
