use std::collections::BTreeSet;

/// Macro-averaged F1 over every label seen in either `truth` or `predicted`.
/// A label that is never predicted and never true cannot appear; a label
/// with no true positives scores 0.
pub fn macro_f1<L: Ord>(truth: &[L], predicted: &[L]) -> f64 {
    assert_eq!(truth.len(), predicted.len(), "label vectors differ in length");
    let labels: BTreeSet<&L> = truth.iter().chain(predicted).collect();
    if labels.is_empty() {
        return 0.0;
    }
    let total: f64 = labels
        .iter()
        .map(|&l| {
            let mut tp = 0usize;
            let mut fp = 0usize;
            let mut fn_ = 0usize;
            for (t, p) in truth.iter().zip(predicted) {
                match (t == l, p == l) {
                    (true, true) => tp += 1,
                    (false, true) => fp += 1,
                    (true, false) => fn_ += 1,
                    _ => {}
                }
            }
            if tp == 0 {
                0.0
            } else {
                2.0 * tp as f64 / (2 * tp + fp + fn_) as f64
            }
        })
        .sum();
    total / labels.len() as f64
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_predictor() {
        let y = ["a", "b", "c", "a"];
        assert_eq!(macro_f1(&y, &y), 1.0);
    }

    #[test]
    fn constant_predictor_on_balanced_classes() {
        for c in 2..6usize {
            let truth: Vec<usize> = (0..c * 10).map(|i| i % c).collect();
            let predicted = vec![0usize; truth.len()];
            // the predicted class has precision 1/c and recall 1; the rest score 0
            let predicted_class_f1 = (2.0 / c as f64) / (1.0 + 1.0 / c as f64);
            let expected = predicted_class_f1 / c as f64;
            assert!((macro_f1(&truth, &predicted) - expected).abs() < 1e-12);
        }
    }

    #[test]
    fn hand_case() {
        // a: tp 1, fn 1 -> 2/3 ; b: tp 1, fp 1 -> 2/3
        let f = macro_f1(&["a", "a", "b"], &["a", "b", "b"]);
        assert!((f - 2.0 / 3.0).abs() < 1e-12);
    }
}
