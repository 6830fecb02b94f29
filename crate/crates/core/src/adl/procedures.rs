use std::collections::BTreeSet;
use std::sync::Arc;

use crate::fluent::Statement;
use crate::metrics::{MetricEvent, RecognitionRecord};
use crate::network::{
    ImplementationRegistry, Outcome, ProcContext, Procedure, ProcedureError, ProcedureSpec,
};
use crate::rules::NameBinding;

pub const TAG_RECOGNIZED: &str = "Recognized";

/// Copies relevant statements from a source node into the target, then
/// updates the target's reasoner even when nothing new arrived.
///
/// Relevance defaults to the exact names and tags read by the target's
/// models; `names` and `tags` params replace it.
#[derive(Debug, Clone)]
pub struct Importer {
    pub source: String,
    pub names: Option<BTreeSet<String>>,
    pub tags: Option<BTreeSet<String>>,
}

fn string_list(spec: &ProcedureSpec, key: &str) -> Result<Option<BTreeSet<String>>, String> {
    let Some(value) = spec.params.get(key) else {
        return Ok(None);
    };
    let list = value.as_array().ok_or_else(|| format!("`{key}` must be a list"))?;
    list.iter()
        .map(|v| v.as_str().map(str::to_string).ok_or_else(|| format!("`{key}` entries must be strings")))
        .collect::<Result<BTreeSet<_>, _>>()
        .map(Some)
}

impl Importer {
    pub fn from_spec(spec: &ProcedureSpec) -> Result<Importer, String> {
        let source = match spec.params.get("source") {
            Some(v) => v.as_str().ok_or("`source` must be a string")?.to_string(),
            None => "O0".to_string(),
        };
        Ok(Importer {
            source,
            names: string_list(spec, "names")?,
            tags: string_list(spec, "tags")?,
        })
    }
}

impl Procedure for Importer {
    fn run(&self, ctx: &mut ProcContext<'_>) -> Result<Outcome, ProcedureError> {
        let source = ctx
            .node(&self.source)
            .ok_or_else(|| ProcedureError(format!("unknown source node `{}`", self.source)))?;
        let (names, tags) = {
            let target = ctx.target.read();
            let mut names = BTreeSet::new();
            let mut tags = BTreeSet::new();
            for model in &target.models {
                names.extend(model.input_names().into_iter().map(str::to_string));
                for p in model.rules.iter().flat_map(|r| &r.patterns) {
                    if let NameBinding::Tag(t) = &p.binding {
                        tags.insert(t.clone());
                    }
                }
            }
            (self.names.clone().unwrap_or(names), self.tags.clone().unwrap_or(tags))
        };
        // read snapshot; never hold two node locks at once
        let snapshot: Vec<Statement> = source
            .read()
            .store
            .iter()
            .filter(|st| names.contains(&st.name) || st.tags.iter().any(|t| tags.contains(t)))
            .cloned()
            .collect();
        let mut node = ctx.target.write();
        let mut propagated = 0;
        for st in snapshot {
            if node.watermark.is_some_and(|w| st.time <= w)
                || node.store.contains_fact(&st.name, st.state, st.time)
            {
                continue;
            }
            node.store.insert(st);
            propagated += 1;
        }
        let ev = node.evaluate(ctx.now, propagated)?;
        drop(node);
        ctx.emit(MetricEvent::Eval(ev.sample));
        Ok(Outcome::rearm())
    }
}

/// Reports `Recognized` statements of the target and resets it.
#[derive(Debug, Clone)]
pub struct Detector {
    pub activity: u8,
}

impl Detector {
    pub fn from_spec(spec: &ProcedureSpec) -> Result<Detector, String> {
        let activity = spec
            .params
            .get("activity")
            .and_then(|v| v.as_integer())
            .ok_or("`activity` must be an integer")?;
        let activity = u8::try_from(activity).map_err(|_| "`activity` out of range".to_string())?;
        Ok(Detector { activity })
    }
}

impl Procedure for Detector {
    fn run(&self, ctx: &mut ProcContext<'_>) -> Result<Outcome, ProcedureError> {
        let mut node = ctx.target.write();
        let recognized: Vec<Statement> = node
            .store
            .query(&crate::fluent::NamePattern::Any, Some(TAG_RECOGNIZED))
            .into_iter()
            .cloned()
            .collect();
        let Some(last) = recognized.iter().map(|s| s.time).max() else {
            return Ok(Outcome::done());
        };
        node.reset(Some(last));
        let sample = node.record(ctx.now, 0, 0);
        let id = node.id.clone();
        drop(node);
        for st in recognized {
            ctx.emit(MetricEvent::Recognition(RecognitionRecord::new(self.activity, st.time, id.clone())));
        }
        ctx.emit(MetricEvent::Eval(sample));
        Ok(Outcome::done())
    }
}

/// Registry with the `importer` and `detector` implementations.
pub fn registry() -> ImplementationRegistry {
    let mut reg = ImplementationRegistry::new();
    reg.register("importer", |spec: &ProcedureSpec| {
        Importer::from_spec(spec).map(|p| Arc::new(p) as Arc<dyn Procedure>)
    });
    reg.register("detector", |spec: &ProcedureSpec| {
        Detector::from_spec(spec).map(|p| Arc::new(p) as Arc<dyn Procedure>)
    });
    reg
}
