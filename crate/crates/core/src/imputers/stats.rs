//! Column statistics for the mean, median and mode imputers.

/// Sum in input order divided by the count.
pub fn column_mean(values: &[f64]) -> Option<f64> {
    (!values.is_empty()).then(|| values.iter().sum::<f64>() / values.len() as f64)
}

/// Middle element of the sorted values; the lower middle for even counts.
pub fn column_median(values: &[f64]) -> Option<f64> {
    if values.is_empty() {
        return None;
    }
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    Some(sorted[(sorted.len() - 1) / 2])
}

/// Most frequent exact value; ties go to the smallest value.
pub fn column_mode(values: &[f64]) -> Option<f64> {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    let mut best: Option<(f64, usize)> = None;
    let mut i = 0;
    while i < sorted.len() {
        let v = sorted[i];
        let mut j = i + 1;
        while j < sorted.len() && sorted[j] == v {
            j += 1;
        }
        let count = j - i;
        if best.is_none_or(|(_, c)| count > c) {
            best = Some((v, count));
        }
        i = j;
    }
    best.map(|(v, _)| v)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_columns() {
        assert_eq!(column_mean(&[]), None);
        assert_eq!(column_median(&[]), None);
        assert_eq!(column_mode(&[]), None);
    }

    #[test]
    fn median_lower_middle() {
        assert_eq!(column_median(&[4.0, 1.0, 3.0, 2.0]), Some(2.0));
        assert_eq!(column_median(&[5.0]), Some(5.0));
    }

    #[test]
    fn mode_tie_breaks_low() {
        assert_eq!(column_mode(&[3.0, 2.0, 3.0, 2.0, 9.0]), Some(2.0));
        assert_eq!(column_mode(&[7.0, 1.0, 7.0]), Some(7.0));
        assert_eq!(column_mode(&[-0.0, 0.0, 1.0]), Some(-0.0));
    }
}
