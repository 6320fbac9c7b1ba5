use super::ContextError;
use crate::dom::tokenize::{count_tokens, truncate_tokens};
use serde::{Deserialize, Serialize};
use std::cmp::Reverse;
use std::collections::BinaryHeap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ComponentName {
    Dom,
    Candidates,
    Utterances,
    Actions,
    Viewport,
    ScreenshotNote,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TruncationBudget {
    total_limit: usize,
    component_threshold: usize,
}

impl TruncationBudget {
    pub fn new(total_limit: usize, component_threshold: usize) -> Result<Self, ContextError> {
        if component_threshold > total_limit {
            return Err(ContextError::InvalidBudget {
                total: total_limit,
                threshold: component_threshold,
            });
        }
        Ok(Self {
            total_limit,
            component_threshold,
        })
    }

    pub fn total_limit(&self) -> usize {
        self.total_limit
    }

    pub fn component_threshold(&self) -> usize {
        self.component_threshold
    }
}

impl Default for TruncationBudget {
    fn default() -> Self {
        Self {
            total_limit: 2048,
            component_threshold: 64,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Component {
    pub name: ComponentName,
    pub text: String,
    pub token_count: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ActionModelInput {
    pub components: Vec<Component>,
    pub total_tokens: usize,
}

impl ActionModelInput {
    pub fn render(&self) -> String {
        self.components
            .iter()
            .filter(|c| !c.text.is_empty())
            .map(|c| c.text.as_str())
            .collect::<Vec<_>>()
            .join("\n")
    }
}

/// Fits components to `budget`. Components are trimmed from the tail one
/// token at a time, always taking from the currently largest component
/// above the threshold. Once none is above it, the largest remaining
/// component is cut (down to nothing if necessary) before the next largest
/// is touched.
pub fn truncate_hierarchical(
    components: &[(ComponentName, Vec<String>)],
    budget: &TruncationBudget,
) -> ActionModelInput {
    let rendered: Vec<(ComponentName, String)> = components
        .iter()
        .map(|(name, subs)| (*name, subs.join("\n")))
        .collect();
    let mut counts: Vec<usize> = rendered.iter().map(|(_, t)| count_tokens(t)).collect();
    let mut total: usize = counts.iter().sum();
    let limit = budget.total_limit;
    let floor = budget.component_threshold;

    if total > limit {
        let mut heap: BinaryHeap<(usize, Reverse<usize>)> = counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c > floor)
            .map(|(i, &c)| (c, Reverse(i)))
            .collect();
        while total > limit {
            let Some((count, Reverse(i))) = heap.pop() else { break };
            counts[i] = count - 1;
            total -= 1;
            if counts[i] > floor {
                heap.push((counts[i], Reverse(i)));
            }
        }
    }

    if total > limit {
        let mut order: Vec<usize> = (0..counts.len()).collect();
        order.sort_by_key(|&i| (Reverse(counts[i]), i));
        for i in order {
            let cut = (total - limit).min(counts[i]);
            counts[i] -= cut;
            total -= cut;
            if total <= limit {
                break;
            }
        }
    }

    let components: Vec<Component> = rendered
        .into_iter()
        .zip(counts)
        .map(|((name, text), count)| Component {
            name,
            text: truncate_tokens(&text, count).to_owned(),
            token_count: count,
        })
        .collect();
    ActionModelInput {
        total_tokens: components.iter().map(|c| c.token_count).sum(),
        components,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn words(n: usize) -> Vec<String> {
        (0..n).map(|i| format!("w{i}")).collect()
    }

    fn counts(input: &ActionModelInput) -> Vec<usize> {
        input.components.iter().map(|c| c.token_count).collect()
    }

    #[test]
    fn under_budget_unchanged() {
        let comps = vec![(ComponentName::Dom, words(25)), (ComponentName::Actions, words(15))];
        let out = truncate_hierarchical(&comps, &TruncationBudget::new(60, 10).unwrap());
        assert_eq!(out.total_tokens, 40);
        assert_eq!(out.components[0].text, words(25).join("\n"));
    }

    #[test]
    fn largest_trimmed_first() {
        let comps = vec![(ComponentName::Dom, words(100)), (ComponentName::Actions, words(10))];
        let out = truncate_hierarchical(&comps, &TruncationBudget::new(60, 20).unwrap());
        assert_eq!(counts(&out), [50, 10]);
        assert_eq!(out.components[0].text, words(50).join("\n"));
    }

    #[test]
    fn fallback_below_threshold() {
        let comps = vec![(ComponentName::Dom, words(15)), (ComponentName::Actions, words(15))];
        let out = truncate_hierarchical(&comps, &TruncationBudget::new(20, 20).unwrap());
        assert_eq!(counts(&out), [5, 15]);
        assert_eq!(out.total_tokens, 20);
    }

    #[test]
    fn leveling_between_large_components() {
        let comps = vec![(ComponentName::Dom, words(100)), (ComponentName::Candidates, words(90))];
        let out = truncate_hierarchical(&comps, &TruncationBudget::new(100, 10).unwrap());
        assert_eq!(counts(&out), [50, 50]);
    }

    #[test]
    fn zero_budget_empties_everything() {
        let comps = vec![(ComponentName::Dom, words(3)), (ComponentName::Viewport, words(2))];
        let out = truncate_hierarchical(&comps, &TruncationBudget::new(0, 0).unwrap());
        assert_eq!(out.total_tokens, 0);
        assert!(out.components.iter().all(|c| c.text.is_empty()));
    }

    #[test]
    fn invalid_budget() {
        assert!(TruncationBudget::new(10, 11).is_err());
    }
}
