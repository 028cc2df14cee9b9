//! Synthetic breast-cancer screening.
//!
//! A round is one patient. The initial state is a risk level derived from
//! the count of the patient's risk factors. Each stage applies one screening
//! modality (mammography, ultrasound or MRI), each at most once per round,
//! and observes a BI-RADS score that sets the next state: 1 gives very
//! unlikely, 2 unlikely, 3 likely, 4 or more very likely. When the round
//! stops, a predictor labels the patient and the terminal reward depends on
//! whether the label is right.
//!
//! All probabilities, rewards and costs are configuration. The defaults are
//! synthetic and only chosen so that finding a cancer is worth much more
//! than avoiding a false alarm and mammography is the cheapest test.
//!
//! Patients carry hidden labels, so the simulator samples them directly.
//! The accompanying [`EnvironmentSpec`] summarizes the cohort: it is the
//! exact state-level law when modalities are applied in a uniformly random
//! order, and it is what the benchmark and the regret computation use.

use rand::seq::SliceRandom;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::ScenarioError;
use crate::engine::{
    EngineError, Environment, PatientFlags, Purpose, RngStream, RoundContext, RoundStreams, RoundTrace, StreamKey,
};
use crate::engine::Lane;
use crate::model::{Choice, EnvironmentSpec, Model, NoiseModel, NORMALIZATION_TOLERANCE};
use crate::policies::{terminal_predict, FrequencyTable, Label, Predictor};

pub const RISK_STATES: [&str; 4] = ["very unlikely", "unlikely", "likely", "very likely"];
pub const MODALITIES: [&str; 3] = ["MG", "US", "MR"];
pub const BIRADS: [&str; 6] = ["1", "2", "3", "4", "5", "6"];
/// Three tests, then a forced stop.
pub const SCREENING_STAGES: usize = 4;

/// BI-RADS score law of one modality for each label.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EmissionPair {
    pub benign: [f64; 6],
    pub malignant: [f64; 6],
}

impl EmissionPair {
    pub fn for_label(&self, label: Label) -> &[f64; 6] {
        match label {
            Label::Benign => &self.benign,
            Label::Malignant => &self.malignant,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Emissions {
    pub mg: EmissionPair,
    pub us: EmissionPair,
    pub mr: EmissionPair,
}

impl Emissions {
    fn by_index(&self, modality: usize) -> &EmissionPair {
        [&self.mg, &self.us, &self.mr][modality]
    }
}

impl Default for Emissions {
    fn default() -> Self {
        Self {
            mg: EmissionPair {
                benign: [0.60, 0.28, 0.108, 0.008, 0.003, 0.001],
                malignant: [0.03, 0.05, 0.12, 0.35, 0.30, 0.15],
            },
            us: EmissionPair {
                benign: [0.55, 0.30, 0.135, 0.01, 0.004, 0.001],
                malignant: [0.04, 0.06, 0.15, 0.35, 0.25, 0.15],
            },
            mr: EmissionPair {
                benign: [0.50, 0.35, 0.14, 0.007, 0.002, 0.001],
                malignant: [0.01, 0.02, 0.05, 0.30, 0.32, 0.30],
            },
        }
    }
}

/// A binary risk factor with its prevalence among benign and malignant
/// patients. The first factor is read as breast density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RiskFactor {
    pub name: String,
    pub benign: f64,
    pub malignant: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutcomeRewards {
    pub detection: f64,
    pub correct_negative: f64,
    pub missed: f64,
    pub false_alarm: f64,
}

impl OutcomeRewards {
    pub fn reward(&self, predicted: Label, actual: Label) -> f64 {
        match (predicted, actual) {
            (Label::Malignant, Label::Malignant) => self.detection,
            (Label::Benign, Label::Benign) => self.correct_negative,
            (Label::Benign, Label::Malignant) => self.missed,
            (Label::Malignant, Label::Benign) => self.false_alarm,
        }
    }
}

impl Default for OutcomeRewards {
    fn default() -> Self {
        Self {
            detection: 10.0,
            correct_negative: 2.0,
            missed: 0.0,
            false_alarm: 0.5,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModalityCosts {
    pub mg: f64,
    pub us: f64,
    pub mr: f64,
}

impl ModalityCosts {
    fn by_index(&self, modality: usize) -> f64 {
        [self.mg, self.us, self.mr][modality]
    }
}

impl Default for ModalityCosts {
    fn default() -> Self {
        Self {
            mg: 0.2,
            us: 0.5,
            mr: 0.8,
        }
    }
}

/// Which predictor labels a patient when a round stops.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PredictorKind {
    /// Majority label of the cohort at the terminal stage and state.
    #[default]
    Frequency,
    /// Malignant iff some score is 4 or more.
    Threshold,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScreeningConfig {
    pub prevalence: f64,
    pub cohort_size: usize,
    pub emissions: Emissions,
    pub risk_factors: Vec<RiskFactor>,
    pub rewards: OutcomeRewards,
    pub costs: ModalityCosts,
    pub predictor: PredictorKind,
}

impl Default for ScreeningConfig {
    fn default() -> Self {
        let factor = |name: &str, benign, malignant| RiskFactor {
            name: name.to_string(),
            benign,
            malignant,
        };
        Self {
            prevalence: 0.0268,
            cohort_size: 5000,
            emissions: Emissions::default(),
            risk_factors: vec![
                factor("dense breast", 0.40, 0.60),
                factor("family history", 0.10, 0.35),
                factor("prior biopsy", 0.10, 0.30),
                factor("age over 60", 0.25, 0.45),
            ],
            rewards: OutcomeRewards::default(),
            costs: ModalityCosts::default(),
            predictor: PredictorKind::Frequency,
        }
    }
}

impl ScreeningConfig {
    pub fn validate(&self) -> Result<(), ScenarioError> {
        if !(self.prevalence > 0.0 && self.prevalence < 1.0) {
            return Err(ScenarioError::InvalidPrevalence(self.prevalence));
        }
        if self.cohort_size == 0 {
            return Err(ScenarioError::Config("cohort_size must be at least 1".into()));
        }
        for (m, name) in MODALITIES.iter().enumerate() {
            let pair = self.emissions.by_index(m);
            for (label, probs) in [("benign", &pair.benign), ("malignant", &pair.malignant)] {
                let sum: f64 = probs.iter().sum();
                if probs.iter().any(|p| !(p.is_finite() && *p >= 0.0)) || (sum - 1.0).abs() > NORMALIZATION_TOLERANCE {
                    return Err(ScenarioError::Config(format!(
                        "{name} emission law for {label} patients is not a distribution"
                    )));
                }
            }
            if !(self.costs.by_index(m).is_finite() && self.costs.by_index(m) >= 0.0) {
                return Err(ScenarioError::Config(format!("{name} cost must be nonnegative")));
            }
        }
        for f in &self.risk_factors {
            for p in [f.benign, f.malignant] {
                if !(0.0..=1.0).contains(&p) {
                    return Err(ScenarioError::InvalidPrior {
                        item: f.name.clone(),
                        value: p,
                    });
                }
            }
        }
        let r = self.rewards;
        if [r.detection, r.correct_negative, r.missed, r.false_alarm]
            .iter()
            .any(|v| !(v.is_finite() && *v >= 0.0))
        {
            return Err(ScenarioError::Config("outcome rewards must be nonnegative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Patient {
    pub label: Label,
    pub risk_factors: Vec<bool>,
}

impl Patient {
    pub fn risk_count(&self) -> usize {
        self.risk_factors.iter().filter(|&&f| f).count()
    }

    /// Index into [`RISK_STATES`].
    pub fn risk_level(&self) -> usize {
        self.risk_count().min(3)
    }

    pub fn flags(&self) -> PatientFlags {
        PatientFlags {
            dense_breast: self.risk_factors.first().copied().unwrap_or(false),
            high_risk: self.risk_count() >= 2,
        }
    }
}

/// Next state after observing a BI-RADS score (1-based).
pub fn state_after_score(score: usize) -> usize {
    score.clamp(1, 4) - 1
}

/// Draws a cohort with exactly `round(prevalence · size)` malignant
/// patients and label-conditional risk factors.
pub fn generate_cohort(config: &ScreeningConfig, seed: u64) -> Result<Vec<Patient>, ScenarioError> {
    config.validate()?;
    let mut rng = RngStream::new(
        seed,
        StreamKey {
            replication: 0,
            round: 0,
            stage: 0,
            purpose: Purpose::Setup,
            lane: Lane::Learner,
        },
    );
    let malignant = (config.prevalence * config.cohort_size as f64).round() as usize;
    let mut labels: Vec<Label> = (0..config.cohort_size)
        .map(|i| if i < malignant { Label::Malignant } else { Label::Benign })
        .collect();
    labels.shuffle(rng.inner());
    Ok(labels
        .into_iter()
        .map(|label| {
            let risk_factors = config
                .risk_factors
                .iter()
                .map(|f| {
                    let p = match label {
                        Label::Benign => f.benign,
                        Label::Malignant => f.malignant,
                    };
                    rng.uniform() < p
                })
                .collect();
            Patient { label, risk_factors }
        })
        .collect())
}

/// Label-wise weights accumulated over all reference paths.
struct PathTotals {
    visits: Vec<[f64; 2]>,
    actions: Vec<[f64; 2]>,
    reward: Vec<f64>,
}

fn label_index(label: Label) -> usize {
    match label {
        Label::Benign => 0,
        Label::Malignant => 1,
    }
}

const ALL_ORDERS: [[usize; 3]; 6] = [[0, 1, 2], [0, 2, 1], [1, 0, 2], [1, 2, 0], [2, 0, 1], [2, 1, 0]];

/// Enumerates every modality order and score sequence for every
/// (label, risk level) group of the cohort.
fn enumerate_paths(config: &ScreeningConfig, cohort: &[Patient], predictor: Option<&Predictor>) -> PathTotals {
    let ns = RISK_STATES.len();
    let mut totals = PathTotals {
        visits: vec![[0.0; 2]; SCREENING_STAGES * ns],
        actions: vec![[0.0; 2]; (SCREENING_STAGES - 1) * ns * MODALITIES.len()],
        reward: vec![0.0; SCREENING_STAGES * ns],
    };
    let mut groups = [[0usize; 4]; 2];
    for p in cohort {
        groups[label_index(p.label)][p.risk_level()] += 1;
    }

    struct Walk<'a> {
        config: &'a ScreeningConfig,
        predictor: Option<&'a Predictor>,
        label: Label,
        order: [usize; 3],
    }

    fn visit(w: &Walk<'_>, totals: &mut PathTotals, t: usize, x: usize, mass: f64, scores: &mut Vec<usize>) {
        let ns = RISK_STATES.len();
        let li = label_index(w.label);
        totals.visits[(t - 1) * ns + x][li] += mass;
        if let Some(predictor) = w.predictor {
            let predicted = terminal_predict(scores, t, x, predictor);
            totals.reward[(t - 1) * ns + x] += mass * w.config.rewards.reward(predicted, w.label);
        }
        if t == SCREENING_STAGES {
            return;
        }
        let a = w.order[t - 1];
        totals.actions[((t - 1) * ns + x) * MODALITIES.len() + a][li] += mass;
        let law = w.config.emissions.by_index(a).for_label(w.label);
        for (s, &e) in law.iter().enumerate().filter(|(_, &e)| e > 0.0) {
            scores.push(s + 1);
            visit(w, totals, t + 1, state_after_score(s + 1), mass * e, scores);
            scores.pop();
        }
    }

    let n = cohort.len() as f64;
    for label in [Label::Benign, Label::Malignant] {
        for (level, &count) in groups[label_index(label)].iter().enumerate() {
            if count == 0 {
                continue;
            }
            for order in ALL_ORDERS {
                let walk = Walk {
                    config,
                    predictor,
                    label,
                    order,
                };
                let mass = count as f64 / n / ALL_ORDERS.len() as f64;
                visit(&walk, &mut totals, 1, level, mass, &mut Vec::new());
            }
        }
    }
    totals
}

/// Builds the summary document and the cohort predictor.
#[allow(clippy::needless_range_loop)]
fn summarize(config: &ScreeningConfig, cohort: &[Patient]) -> (EnvironmentSpec, Predictor) {
    let ns = RISK_STATES.len();
    let na = MODALITIES.len();
    let visits = enumerate_paths(config, cohort, None).visits;
    let predictor = match config.predictor {
        PredictorKind::Threshold => Predictor::guideline(),
        PredictorKind::Frequency => {
            let mut table = FrequencyTable::default();
            for t in 1..=SCREENING_STAGES {
                for x in 0..ns {
                    let [b, m] = visits[(t - 1) * ns + x];
                    table.add(t, x, Label::Benign, b);
                    table.add(t, x, Label::Malignant, m);
                }
            }
            Predictor::Frequency(table)
        }
    };
    let totals = enumerate_paths(config, cohort, Some(&predictor));

    let mut spec = EnvironmentSpec::empty(
        SCREENING_STAGES,
        RISK_STATES.iter().map(|s| s.to_string()).collect(),
        MODALITIES.iter().map(|s| s.to_string()).collect(),
        BIRADS.iter().map(|s| s.to_string()).collect(),
    );
    let r = config.rewards;
    spec.r_max = [r.detection, r.correct_negative, r.missed, r.false_alarm]
        .into_iter()
        .fold(0.0, f64::max);
    spec.c_max = (0..na).map(|m| config.costs.by_index(m)).fold(0.0, f64::max);
    spec.noise = NoiseModel::none();

    let mut initial = std::collections::BTreeMap::new();
    for x in 0..ns {
        let [b, m] = totals.visits[x];
        if b + m > 0.0 {
            initial.insert(RISK_STATES[x].to_string(), b + m);
        }
    }
    spec.initial_dist = Some(initial);

    let successors: Vec<&str> = (1..=BIRADS.len()).map(|s| RISK_STATES[state_after_score(s)]).collect();
    for t in 1..=SCREENING_STAGES {
        for x in 0..ns {
            let [b, m] = totals.visits[(t - 1) * ns + x];
            if b + m <= 0.0 {
                continue;
            }
            let reward = (totals.reward[(t - 1) * ns + x] / (b + m)).clamp(0.0, spec.r_max);
            spec.set_reward(t, RISK_STATES[x], reward);
            if t == SCREENING_STAGES {
                continue;
            }
            for a in 0..na {
                let [ab, am] = totals.actions[((t - 1) * ns + x) * na + a];
                let q = if ab + am > 0.0 { am / (ab + am) } else { m / (b + m) };
                let pair = config.emissions.by_index(a);
                let probs: Vec<f64> = (0..BIRADS.len())
                    .map(|s| (1.0 - q) * pair.benign[s] + q * pair.malignant[s])
                    .collect();
                spec.set_transition(t, RISK_STATES[x], MODALITIES[a], probs, &successors, config.costs.by_index(a));
            }
        }
    }
    (spec, predictor)
}

/// Patient-level screening simulator with its summary model.
#[derive(Debug, Clone)]
pub struct ScreeningEnvironment {
    model: Model,
    config: ScreeningConfig,
    cohort: Vec<Patient>,
    predictor: Predictor,
}

/// Generates a cohort from `seed` and builds the screening environment.
pub fn screening_env(config: &ScreeningConfig, seed: u64) -> Result<ScreeningEnvironment, ScenarioError> {
    let cohort = generate_cohort(config, seed)?;
    let (spec, predictor) = summarize(config, &cohort);
    Ok(ScreeningEnvironment {
        model: Model::new(spec)?,
        config: config.clone(),
        cohort,
        predictor,
    })
}

impl ScreeningEnvironment {
    pub fn spec(&self) -> &EnvironmentSpec {
        self.model.spec()
    }

    pub fn cohort(&self) -> &[Patient] {
        &self.cohort
    }

    pub fn config(&self) -> &ScreeningConfig {
        &self.config
    }

    pub fn predictor(&self) -> &Predictor {
        &self.predictor
    }
}

impl Environment for ScreeningEnvironment {
    type Latent = usize;

    fn model(&self) -> &Model {
        &self.model
    }

    fn begin_round(&self, streams: &RoundStreams) -> (RoundContext, usize) {
        let mut rng = streams.stream(0, Purpose::Start);
        let i = rng.inner().random_range(0..self.cohort.len() as u64) as usize;
        let patient = &self.cohort[i];
        (
            RoundContext {
                initial_state: patient.risk_level(),
                flags: Some(patient.flags()),
            },
            i,
        )
    }

    fn sample_feedback(&self, _t: usize, _x: usize, a: usize, latent: &usize, rng: &mut RngStream) -> Result<usize, EngineError> {
        let label = self.cohort[*latent].label;
        Ok(rng.categorical(self.config.emissions.by_index(a).for_label(label)))
    }

    fn realize_outcomes(&self, trace: &mut RoundTrace, latent: &usize, _streams: &RoundStreams) {
        let label = self.cohort[*latent].label;
        trace.costs = trace
            .actions
            .iter()
            .filter_map(|c| match c {
                Choice::Continue(a) => Some(self.config.costs.by_index(*a)),
                Choice::Stop => None,
            })
            .collect();
        let scores: Vec<usize> = trace.feedbacks.iter().map(|f| f + 1).collect();
        trace.rewards = (1..=trace.stop_stage())
            .map(|t| {
                let predicted = terminal_predict(&scores[..t - 1], t, trace.states[t - 1], &self.predictor);
                self.config.rewards.reward(predicted, label)
            })
            .collect();
    }

    fn once_per_round(&self) -> bool {
        true
    }
}
