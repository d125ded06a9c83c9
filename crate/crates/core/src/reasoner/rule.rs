use crate::label::{Stage, StageStatus};
use crate::purpose::classify_purpose;

use super::{ModelSettings, Reasoner, ReasonerEntities, ReasonerFailure, ReasonerKind, ReasonerQuery, ReasonerVerdict};

/// Deterministic keyword/attribute reasoner. It reads the request only and
/// never offers a label of its own.
#[derive(Debug, Clone, Copy, Default)]
pub struct RuleReasoner;

impl Reasoner for RuleReasoner {
    fn settings(&self) -> ModelSettings {
        ModelSettings {
            reasoner: ReasonerKind::Rule,
            model: None,
            temperature: None,
        }
    }

    fn interpret(&self, query: &ReasonerQuery<'_>) -> Result<ReasonerVerdict, ReasonerFailure> {
        let request = query.request;
        let reading = classify_purpose(&request.purpose);
        let entities = ReasonerEntities {
            purpose_category: reading.category,
            retention_days: request.declared_retention_days,
            sharing_scope: Some(request.sharing_scope),
        };
        let status = match query.stage {
            Stage::Context if reading.category.is_some() => StageStatus::Pass,
            Stage::Context if reading.broad => StageStatus::Uncertain,
            Stage::Context => StageStatus::Fail,
            _ => StageStatus::Pass,
        };
        Ok(ReasonerVerdict {
            status,
            entities,
            ..ReasonerVerdict::pass()
        })
    }
}
