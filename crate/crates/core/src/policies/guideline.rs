//! The clinical guideline baseline for screening.

use crate::engine::{EngineError, PatientFlags, Policy, RoundContext, Step};
use crate::model::{Choice, Model};

/// Indices of the three screening modalities.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Modalities {
    pub mg: usize,
    pub us: usize,
    pub mr: usize,
}

impl Modalities {
    /// Looks up `MG`, `US` and `MR` among the model's actions.
    pub fn from_model(model: &Model) -> Result<Self, EngineError> {
        let find = |name: &str| {
            model
                .action_id(name)
                .ok_or_else(|| EngineError::Config(format!("the guideline needs action {name}")))
        };
        Ok(Self {
            mg: find("MG")?,
            us: find("US")?,
            mr: find("MR")?,
        })
    }
}

/// Mammography first, ultrasound if the breast is dense, MRI if the patient
/// is high risk, then stop.
pub fn guideline_plan(modalities: Modalities, flags: PatientFlags) -> Vec<usize> {
    let mut plan = vec![modalities.mg];
    if flags.dense_breast {
        plan.push(modalities.us);
    }
    if flags.high_risk {
        plan.push(modalities.mr);
    }
    plan
}

pub fn guideline_action(modalities: Modalities, flags: PatientFlags, t: usize) -> Choice {
    guideline_plan(modalities, flags)
        .get(t - 1)
        .map_or(Choice::Stop, |&a| Choice::Continue(a))
}

#[derive(Debug, Clone)]
pub struct GuidelinePolicy {
    modalities: Modalities,
    flags: PatientFlags,
}

impl GuidelinePolicy {
    pub fn new(model: &Model) -> Result<Self, EngineError> {
        Ok(Self {
            modalities: Modalities::from_model(model)?,
            flags: PatientFlags::default(),
        })
    }
}

impl Policy for GuidelinePolicy {
    fn name(&self) -> &str {
        "guideline"
    }

    fn begin_round(&mut self, _round: usize, context: &RoundContext) {
        self.flags = context.flags.unwrap_or_default();
    }

    fn select(&mut self, step: &Step<'_>) -> Choice {
        match guideline_action(self.modalities, self.flags, step.stage) {
            Choice::Continue(a) if step.available.contains(&a) => Choice::Continue(a),
            _ => Choice::Stop,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const M: Modalities = Modalities { mg: 0, us: 1, mr: 2 };

    fn actions(dense_breast: bool, high_risk: bool) -> Vec<Choice> {
        let flags = PatientFlags { dense_breast, high_risk };
        (1..=4).map(|t| guideline_action(M, flags, t)).take_while(|c| !c.is_stop()).collect()
    }

    #[test]
    fn guideline_sequences() {
        use Choice::Continue as C;
        assert_eq!(actions(false, false), vec![C(0)]);
        assert_eq!(actions(true, false), vec![C(0), C(1)]);
        assert_eq!(actions(false, true), vec![C(0), C(2)]);
        assert_eq!(actions(true, true), vec![C(0), C(1), C(2)]);
        assert_eq!(guideline_action(M, PatientFlags::default(), 2), Choice::Stop);
    }
}
