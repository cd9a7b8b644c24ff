//! Dynamic time warping with the unit step set `{(1,0), (0,1), (1,1)}`.

/// Total cost and the warping path as `(i, j)` index pairs from `(0, 0)` to
/// `(n-1, m-1)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Alignment {
    pub cost: f64,
    pub path: Vec<(usize, usize)>,
}

/// Aligns sequences of lengths `n` and `m` given a pairwise cost. Both lengths
/// must be non-zero. On equal-cost predecessors the diagonal step is preferred,
/// then advancing `i`, then advancing `j`.
pub fn dtw<F>(n: usize, m: usize, cost: F) -> Alignment
where
    F: Fn(usize, usize) -> f64,
{
    assert!(n > 0 && m > 0, "dtw on empty sequence");
    let w = m + 1;
    let mut acc = vec![f64::INFINITY; (n + 1) * w];
    acc[0] = 0.0;
    for i in 1..=n {
        for j in 1..=m {
            let best = acc[(i - 1) * w + (j - 1)]
                .min(acc[(i - 1) * w + j])
                .min(acc[i * w + (j - 1)]);
            acc[i * w + j] = cost(i - 1, j - 1) + best;
        }
    }
    let mut path = Vec::with_capacity(n + m);
    let (mut i, mut j) = (n, m);
    while i > 0 && j > 0 {
        path.push((i - 1, j - 1));
        if i == 1 && j == 1 {
            break;
        }
        let diag = acc[(i - 1) * w + (j - 1)];
        let up = acc[(i - 1) * w + j];
        let left = acc[i * w + (j - 1)];
        if diag <= up && diag <= left {
            i -= 1;
            j -= 1;
        } else if up <= left {
            i -= 1;
        } else {
            j -= 1;
        }
    }
    path.reverse();
    Alignment {
        cost: acc[n * w + m],
        path,
    }
}

/// DTW distance between two scalar sequences under absolute difference.
pub fn dtw_distance_1d(a: &[f64], b: &[f64]) -> f64 {
    dtw(a.len(), b.len(), |i, j| (a[i] - b[j]).abs()).cost
}
