//! The elicitation questionnaire: one question per distinct compatible
//! configuration.

use cptgen_core::{CompatibilityMap, ParentalConfiguration};

#[derive(Debug, Clone, PartialEq)]
pub struct Question {
    pub configuration: ParentalConfiguration,
    /// `{PM=vh, PT=vh, ME=vh}`
    pub label: String,
    /// The `Comp(Y=s)` entries this answer serves.
    pub covers: Vec<String>,
    pub text: String,
}

/// Questions in first-appearance order over parents and their states.
pub fn questionnaire(compat: &CompatibilityMap) -> Vec<Question> {
    let spec = compat.spec();
    compat
        .distinct_configurations()
        .into_iter()
        .map(|config| {
            let label = config.display(spec).to_string();
            let covers = compat
                .sources(config)
                .into_iter()
                .map(|(p, s)| format!("Comp({}={})", spec.parents[p].name, spec.parents[p].states[s]))
                .collect();
            let text = format!(
                "Given the parental configuration {label}, what should be the probability distribution over the states of {} ({})?",
                spec.child_name,
                spec.child_states.join(", ")
            );
            Question {
                configuration: config.clone(),
                label,
                covers,
                text,
            }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use cptgen_core::{NetworkSpec, ParentSpec};

    #[test]
    fn diagonal_map_asks_once_per_state() {
        let states = ["lo", "hi"];
        let spec = NetworkSpec::new(
            "X",
            &states,
            vec![ParentSpec::new("A", &states, 0.5), ParentSpec::new("B", &states, 0.5)],
        );
        let qs = questionnaire(&CompatibilityMap::diagonal(&spec).unwrap());
        assert_eq!(qs.len(), 2);
        assert_eq!(qs[0].label, "{A=lo, B=lo}");
        assert_eq!(qs[0].covers, vec!["Comp(A=lo)", "Comp(B=lo)"]);
        assert!(qs[1].text.contains("{A=hi, B=hi}"));
    }
}
