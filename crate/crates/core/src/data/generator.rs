//! Synthetic interview corpora with planted, context-dependent salience.
//!
//! Every position has a job type. The job type names one decisive question
//! and the motif that marks a hirable answer to it. A motif is three
//! consecutive frames activating feature channels 0, 1, 2 in order
//! (`Rising`) or 2, 1, 0 (`Falling`); in text it is the matching token
//! trigram. The decisive answer of a hirable candidate carries the job's
//! positive motif and that of a non-hirable candidate the opposite one.
//! Other answers carry a random motif with probability `distractor_rate`,
//! independent of the label. Per-channel statistics of the two motifs are
//! identical, so only an order-aware reader can tell them apart.

use std::collections::BTreeMap;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{Annotation, DatasetMeta, FeatureKind, Interview, Label, Modality, QaPair};
use crate::error::{Error, Result};

/// Amplitude added to a channel on a motif frame of a continuous stream.
const BURST: f64 = 1.0;
/// Firing probability of the background binary channels.
const BACKGROUND_RATE: f64 = 0.2;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Motif {
    Rising,
    Falling,
}

impl Motif {
    /// Channel (or motif-token offset) activated on each of the three frames.
    pub fn order(self) -> [usize; 3] {
        match self {
            Motif::Rising => [0, 1, 2],
            Motif::Falling => [2, 1, 0],
        }
    }

    pub fn opposite(self) -> Motif {
        match self {
            Motif::Rising => Motif::Falling,
            Motif::Falling => Motif::Rising,
        }
    }
}

/// Which question decides the label for a job type, and which motif marks
/// a hirable answer to it.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct JobRule {
    pub decisive_question: usize,
    pub positive_motif: Motif,
}

/// Parameters of a synthetic corpus.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorSpec {
    pub seed: u64,
    pub candidates: usize,
    pub positions: usize,
    pub questions_min: usize,
    pub questions_max: usize,
    pub answer_len_min: usize,
    pub answer_len_max: usize,
    pub question_len_min: usize,
    pub question_len_max: usize,
    /// Position-specific tokens appended to the job-type token of a title.
    pub title_extra_min: usize,
    pub title_extra_max: usize,
    pub filler_vocab: usize,
    pub audio_dim: usize,
    pub video_binary_dim: usize,
    pub video_continuous_dim: usize,
    pub hirable_rate: f64,
    /// Half-width of the uniform background noise on continuous channels.
    pub noise: f64,
    /// Probability that a non-decisive answer carries a random motif.
    pub distractor_rate: f64,
    /// Probability that the audio or video stream of a candidate is absent.
    pub missing_rate: f64,
    pub job_rules: Vec<JobRule>,
}

impl Default for GeneratorSpec {
    fn default() -> Self {
        GeneratorSpec {
            seed: 0,
            candidates: 2000,
            positions: 40,
            questions_min: 5,
            questions_max: 5,
            answer_len_min: 20,
            answer_len_max: 60,
            question_len_min: 3,
            question_len_max: 6,
            title_extra_min: 1,
            title_extra_max: 3,
            filler_vocab: 200,
            audio_dim: 4,
            video_binary_dim: 4,
            video_continuous_dim: 2,
            hirable_rate: 0.45,
            noise: 0.3,
            distractor_rate: 0.5,
            missing_rate: 0.0,
            job_rules: vec![
                JobRule {
                    decisive_question: 1,
                    positive_motif: Motif::Rising,
                },
                JobRule {
                    decisive_question: 3,
                    positive_motif: Motif::Rising,
                },
            ],
        }
    }
}

/// Ground truth of one generated answer.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PlantedAnswer {
    pub len: usize,
    pub motif: Option<Motif>,
    /// First frame of the motif.
    pub offset: usize,
}

/// Ground truth of one generated candidate.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Planting {
    pub candidate_id: String,
    pub position: usize,
    pub job_type: usize,
    pub decisive_question: usize,
    pub answers: Vec<PlantedAnswer>,
    pub missing: Vec<Modality>,
}

impl Planting {
    /// The three frame indices of the decisive motif.
    pub fn decisive_frames(&self) -> [usize; 3] {
        let o = self.answers[self.decisive_question].offset;
        [o, o + 1, o + 2]
    }
}

/// A generated corpus: one interview list per modality plus ground truth.
#[derive(Clone, Debug, PartialEq)]
pub struct GeneratedCorpus {
    pub spec: GeneratorSpec,
    pub corpora: BTreeMap<Modality, Vec<Interview>>,
    pub plantings: Vec<Planting>,
}

impl GeneratedCorpus {
    pub fn corpus(&self, modality: Modality) -> &[Interview] {
        &self.corpora[&modality]
    }
}

struct PositionLayout {
    job_type: usize,
    title: Vec<usize>,
    questions: Vec<Vec<usize>>,
}

impl GeneratorSpec {
    /// A corpus where every position shares one job rule and only the
    /// decisive answer carries a motif, so answer-level readers see the
    /// signal directly and only motif order separates the classes.
    pub fn order_sensitive() -> Self {
        GeneratorSpec {
            distractor_rate: 0.0,
            job_rules: vec![JobRule {
                decisive_question: 2,
                positive_motif: Motif::Rising,
            }],
            ..GeneratorSpec::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: &str| Err(Error::Config(m.to_string()));
        if self.candidates == 0 || self.positions == 0 {
            return fail("candidates and positions must be positive");
        }
        if self.questions_min == 0 || self.questions_min > self.questions_max {
            return fail("need 1 <= questions_min <= questions_max");
        }
        if self.answer_len_min < 3 || self.answer_len_min > self.answer_len_max {
            return fail("need 3 <= answer_len_min <= answer_len_max");
        }
        if self.question_len_min == 0 || self.question_len_min > self.question_len_max {
            return fail("need 1 <= question_len_min <= question_len_max");
        }
        if self.title_extra_min > self.title_extra_max {
            return fail("need title_extra_min <= title_extra_max");
        }
        if self.filler_vocab < 2 {
            return fail("filler_vocab must be at least 2");
        }
        if self.audio_dim < 3 || self.video_binary_dim < 3 {
            return fail("audio_dim and video_binary_dim must be at least 3");
        }
        if !(self.hirable_rate > 0.0 && self.hirable_rate < 1.0) {
            return fail("hirable_rate must lie in (0, 1)");
        }
        if !(0.0..0.5).contains(&self.noise) {
            return fail("noise must lie in [0, 0.5) so motif frames stay detectable");
        }
        if !(0.0..=1.0).contains(&self.distractor_rate) || !(0.0..1.0).contains(&self.missing_rate) {
            return fail("distractor_rate must lie in [0, 1] and missing_rate in [0, 1)");
        }
        if self.job_rules.is_empty() {
            return fail("at least one job rule is required");
        }
        if self.job_rules.iter().any(|r| r.decisive_question >= self.questions_min) {
            return fail("every decisive question index must be below questions_min");
        }
        Ok(())
    }

    pub fn job_types(&self) -> usize {
        self.job_rules.len()
    }

    fn question_kind_base(&self) -> usize {
        self.job_types()
    }

    fn motif_token_base(&self) -> usize {
        self.question_kind_base() + self.questions_max
    }

    fn filler_base(&self) -> usize {
        self.motif_token_base() + 3
    }

    pub fn vocab_size(&self) -> usize {
        self.filler_base() + self.filler_vocab
    }

    /// Token id naming job type `j`.
    pub fn job_token(&self, j: usize) -> usize {
        j
    }

    pub fn motif_tokens(&self, motif: Motif) -> [usize; 3] {
        motif.order().map(|k| self.motif_token_base() + k)
    }

    pub fn feature_dim(&self, modality: Modality) -> usize {
        match modality {
            Modality::Text => 1,
            Modality::Audio => self.audio_dim,
            Modality::Video => self.video_binary_dim + self.video_continuous_dim,
        }
    }

    pub fn feature_kinds(&self, modality: Modality) -> Vec<FeatureKind> {
        match modality {
            Modality::Text => vec![FeatureKind::Continuous],
            Modality::Audio => vec![FeatureKind::Continuous; self.audio_dim],
            Modality::Video => {
                let mut k = vec![FeatureKind::Binary; self.video_binary_dim];
                k.extend(vec![FeatureKind::Continuous; self.video_continuous_dim]);
                k
            }
        }
    }

    pub fn meta(&self) -> DatasetMeta {
        DatasetMeta {
            spec: self.clone(),
            vocab_size: self.vocab_size(),
            feature_dims: Modality::ALL.iter().map(|&m| (m, self.feature_dim(m))).collect(),
            feature_kinds: Modality::ALL.iter().map(|&m| (m, self.feature_kinds(m))).collect(),
        }
    }

    /// Job type encoded in a title, if its first token names one.
    pub fn job_type_of(&self, interview: &Interview) -> Option<usize> {
        interview
            .job_tokens
            .first()
            .copied()
            .filter(|&t| t < self.job_types())
    }

    /// Finds the first complete motif in an answer.
    pub fn detect_motif(&self, qa: &QaPair) -> Option<Motif> {
        let frames = &qa.answer;
        if frames.len() < 3 {
            return None;
        }
        let hit = |row: &[f64], k: usize| -> bool {
            match qa.modality {
                Modality::Text => row[0] as usize == self.motif_token_base() + k,
                Modality::Audio => row[k] > BURST / 2.0,
                Modality::Video => row[k] == 1.0,
            }
        };
        let others_quiet = |row: &[f64], k: usize| -> bool {
            qa.modality == Modality::Text || (0..3).filter(|&c| c != k).all(|c| !hit(row, c))
        };
        for t in 0..frames.len() - 2 {
            for motif in [Motif::Rising, Motif::Falling] {
                let order = motif.order();
                if (0..3).all(|s| hit(&frames[t + s], order[s]) && others_quiet(&frames[t + s], order[s])) {
                    return Some(motif);
                }
            }
        }
        None
    }

    /// The planted rule applied to an interview: hirable iff the decisive
    /// answer for the title's job type carries that job's positive motif.
    pub fn oracle_label(&self, interview: &Interview) -> Result<Label> {
        let job = self.job_type_of(interview).ok_or_else(|| Error::Validation {
            candidate: interview.candidate_id.clone(),
            message: "job title carries no job-type token".into(),
        })?;
        let rule = self.job_rules[job];
        let qa = interview.qa.get(rule.decisive_question).ok_or_else(|| Error::Validation {
            candidate: interview.candidate_id.clone(),
            message: format!("no answer at decisive index {}", rule.decisive_question),
        })?;
        Ok(Label::from_bool(self.detect_motif(qa) == Some(rule.positive_motif)))
    }

    /// Position titles carry the job type; question texts are shared by
    /// every position, so only the title reveals which rule applies.
    fn layout(&self) -> Vec<PositionLayout> {
        let mut rng = substream(self.seed, u64::MAX);
        let filler = |rng: &mut ChaCha8Rng| self.filler_base() + rng.gen_range(0..self.filler_vocab);
        let bank: Vec<Vec<usize>> = (0..self.questions_max)
            .map(|i| {
                let len = rng.gen_range(self.question_len_min..=self.question_len_max);
                let mut q = vec![self.question_kind_base() + i];
                q.extend((1..len).map(|_| filler(&mut rng)));
                q
            })
            .collect();
        (0..self.positions)
            .map(|p| {
                let job_type = p % self.job_types();
                let mut title = vec![self.job_token(job_type)];
                let extra = rng.gen_range(self.title_extra_min..=self.title_extra_max);
                title.extend((0..extra).map(|_| filler(&mut rng)));
                let n = rng.gen_range(self.questions_min..=self.questions_max);
                PositionLayout {
                    job_type,
                    title,
                    questions: bank[..n].to_vec(),
                }
            })
            .collect()
    }

    fn render(&self, modality: Modality, plan: &PlantedAnswer, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
        let motif_at = |t: usize| -> Option<usize> {
            let m = plan.motif?;
            (t >= plan.offset && t < plan.offset + 3).then(|| m.order()[t - plan.offset])
        };
        (0..plan.len)
            .map(|t| match modality {
                Modality::Text => {
                    let tok = match motif_at(t) {
                        Some(k) => self.motif_token_base() + k,
                        None => self.filler_base() + rng.gen_range(0..self.filler_vocab),
                    };
                    vec![tok as f64]
                }
                Modality::Audio => {
                    let mut row: Vec<f64> = (0..self.audio_dim)
                        .map(|_| noise(rng, self.noise))
                        .collect();
                    if let Some(k) = motif_at(t) {
                        row[k] += BURST;
                    }
                    row
                }
                Modality::Video => {
                    let mut row = vec![0.0; self.video_binary_dim + self.video_continuous_dim];
                    for v in row.iter_mut().take(self.video_binary_dim).skip(3) {
                        *v = f64::from(u8::from(rng.gen_bool(BACKGROUND_RATE)));
                    }
                    for v in row.iter_mut().skip(self.video_binary_dim) {
                        *v = noise(rng, self.noise);
                    }
                    if let Some(k) = motif_at(t) {
                        row[k] = 1.0;
                    }
                    row
                }
            })
            .collect()
    }
}

fn noise(rng: &mut ChaCha8Rng, half_width: f64) -> f64 {
    if half_width == 0.0 {
        0.0
    } else {
        rng.gen_range(-half_width..half_width)
    }
}

/// Independent generator stream for `(seed, stream)`.
fn substream(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

fn annotations_for(label: Label, rng: &mut ChaCha8Rng) -> Vec<Annotation> {
    let k = rng.gen_range(1..=3u32);
    let half_up = k.div_ceil(2);
    let yes = if label.is_hirable() {
        rng.gen_range(half_up..=k)
    } else {
        rng.gen_range(0..half_up)
    };
    (0..k)
        .map(|a| {
            if a < yes {
                let shortlisted = rng.gen_bool(0.5);
                Annotation {
                    annotator_id: a + 1,
                    liked: !shortlisted || rng.gen_bool(0.5),
                    shortlisted,
                    disliked: false,
                }
            } else {
                Annotation {
                    annotator_id: a + 1,
                    liked: false,
                    shortlisted: false,
                    disliked: true,
                }
            }
        })
        .collect()
}

/// Generates a corpus. Candidate `c` draws its plan from stream `4c` and
/// renders modality `m` from stream `4c + 1 + m`, so candidates can be
/// produced independently and in any order.
pub fn generate_corpus(spec: &GeneratorSpec) -> Result<GeneratedCorpus> {
    spec.validate()?;
    let layout = spec.layout();
    let mut corpora: BTreeMap<Modality, Vec<Interview>> =
        Modality::ALL.iter().map(|&m| (m, Vec::with_capacity(spec.candidates))).collect();
    let mut plantings = Vec::with_capacity(spec.candidates);

    for c in 0..spec.candidates {
        let mut rng = substream(spec.seed, 4 * c as u64);
        let candidate_id = format!("c{c:05}");
        let position = rng.gen_range(0..spec.positions);
        let pos = &layout[position];
        let rule = spec.job_rules[pos.job_type];
        let label = Label::from_bool(rng.gen_bool(spec.hirable_rate));

        let answers: Vec<PlantedAnswer> = (0..pos.questions.len())
            .map(|i| {
                let len = rng.gen_range(spec.answer_len_min..=spec.answer_len_max);
                let motif = if i == rule.decisive_question {
                    Some(if label.is_hirable() {
                        rule.positive_motif
                    } else {
                        rule.positive_motif.opposite()
                    })
                } else if rng.gen_bool(spec.distractor_rate) {
                    Some(if rng.gen_bool(0.5) { Motif::Rising } else { Motif::Falling })
                } else {
                    None
                };
                let offset = rng.gen_range(0..=len - 3);
                PlantedAnswer { len, motif, offset }
            })
            .collect();
        let annotations = annotations_for(label, &mut rng);
        let missing: Vec<Modality> = [Modality::Audio, Modality::Video]
            .into_iter()
            .filter(|_| spec.missing_rate > 0.0 && rng.gen_bool(spec.missing_rate))
            .collect();

        for (m_idx, &modality) in Modality::ALL.iter().enumerate() {
            if missing.contains(&modality) {
                continue;
            }
            let mut mrng = substream(spec.seed, 4 * c as u64 + 1 + m_idx as u64);
            let qa = pos
                .questions
                .iter()
                .zip(&answers)
                .map(|(q, plan)| QaPair {
                    q_tokens: q.clone(),
                    answer: spec.render(modality, plan, &mut mrng),
                    modality,
                })
                .collect();
            corpora.get_mut(&modality).expect("all modalities present").push(Interview {
                candidate_id: candidate_id.clone(),
                job_tokens: pos.title.clone(),
                qa,
                label,
                annotations: Some(annotations.clone()),
            });
        }
        plantings.push(Planting {
            candidate_id,
            position,
            job_type: pos.job_type,
            decisive_question: rule.decisive_question,
            answers,
            missing,
        });
    }
    Ok(GeneratedCorpus {
        spec: spec.clone(),
        corpora,
        plantings,
    })
}
