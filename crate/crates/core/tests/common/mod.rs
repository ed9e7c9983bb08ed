//! Independent reference implementations shared by the test targets.

/// ARI straight from the four pair categories over all n(n-1)/2 pairs.
pub fn pair_counting_ari(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len();
    let (mut both, mut only_a, mut only_b, mut neither) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..n {
        for j in i + 1..n {
            match (a[i] == a[j], b[i] == b[j]) {
                (true, true) => both += 1,
                (true, false) => only_a += 1,
                (false, true) => only_b += 1,
                (false, false) => neither += 1,
            }
        }
    }
    let total = both + only_a + only_b + neither;
    let same_a = both + only_a;
    let same_b = both + only_b;
    // (index - expected) / (max - expected), scaled by 2*total to stay integral
    let num = 2 * (total * both - same_a * same_b);
    let den = total * (same_a + same_b) - 2 * same_a * same_b;
    if den == 0 {
        return 1.0;
    }
    num as f64 / den as f64
}

fn entropy(counts: &[f64], n: f64) -> f64 {
    counts.iter().filter(|&&c| c > 0.0).map(|&c| -(c / n) * (c / n).ln()).sum()
}

/// Homogeneity, completeness and V from conditional entropies.
pub fn entropy_v_measure(truth: &[usize], pred: &[usize]) -> (f64, f64, f64) {
    let n = truth.len() as f64;
    let rt = truth.iter().max().unwrap() + 1;
    let rp = pred.iter().max().unwrap() + 1;
    let mut joint = vec![vec![0.0; rp]; rt];
    for (&t, &p) in truth.iter().zip(pred) {
        joint[t][p] += 1.0;
    }
    let ct: Vec<f64> = joint.iter().map(|r| r.iter().sum()).collect();
    let cp: Vec<f64> = (0..rp).map(|j| joint.iter().map(|r| r[j]).sum()).collect();
    let h_t = entropy(&ct, n);
    let h_p = entropy(&cp, n);
    let mut h_t_given_p = 0.0;
    let mut h_p_given_t = 0.0;
    for t in 0..rt {
        for p in 0..rp {
            let c = joint[t][p];
            if c > 0.0 {
                h_t_given_p -= (c / n) * (c / cp[p]).ln();
                h_p_given_t -= (c / n) * (c / ct[t]).ln();
            }
        }
    }
    let h = if h_t == 0.0 { 1.0 } else { 1.0 - h_t_given_p / h_t };
    let c = if h_p == 0.0 { 1.0 } else { 1.0 - h_p_given_t / h_p };
    let v = if h + c == 0.0 { 0.0 } else { 2.0 * h * c / (h + c) };
    (h, c, v)
}
