//! Side-by-side ranking of parametric distance against the similarity
//! estimate on a 16-class synthetic scenario.
//!
//! For every class the 15 neighbors are ranked twice — by similarity
//! (descending) and by parametric distance (ascending) — and the two
//! orderings are compared with a Spearman coefficient (average ranks for
//! ties). The per-row coefficients are printed as a report; the only hard
//! assertion is that the orderings agree in direction on average, since
//! the two quantities measure different things and diverge where variance
//! differences dominate the moment distance but barely move the overlap.

use classim::classifier::TrainConfig;
use classim::oracle::{validate_classim, OracleMode, Scenario};
use classim::pd::pd_matrix;

fn scenario_toml() -> String {
    let means = [
        0.0, 0.7, 1.6, 2.1, 3.5, 4.1, 5.8, 6.2, 8.0, 8.5, 10.4, 11.2, 13.0, 14.5, 17.0, 20.0,
    ];
    let stds = [
        1.0, 1.4, 0.8, 1.0, 1.2, 0.9, 1.0, 1.3, 0.8, 1.0, 1.1, 0.9, 1.0, 1.2, 1.0, 0.8,
    ];
    let mut text = String::from("seed = 4242\nsamples_per_class = 1500\n");
    for (i, (mean, std)) in means.iter().zip(stds).enumerate() {
        text.push_str(&format!(
            "\n[classes.c{i:02}]\nkind = \"gaussian-1d\"\nmean = {mean}\nstd = {std}\n"
        ));
    }
    text
}

/// Average ranks (1-based, ties share their mean rank).
fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < order.len() {
        let mut end = start + 1;
        while end < order.len() && values[order[end]] == values[order[start]] {
            end += 1;
        }
        let mean_rank = (start + 1 + end) as f64 / 2.0;
        for &idx in &order[start..end] {
            ranks[idx] = mean_rank;
        }
        start = end;
    }
    ranks
}

/// Pearson correlation of the two rank vectors.
fn spearman(xs: &[f64], ys: &[f64]) -> f64 {
    let rx = average_ranks(xs);
    let ry = average_ranks(ys);
    let n = rx.len() as f64;
    let mx = rx.iter().sum::<f64>() / n;
    let my = ry.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (x, y) in rx.iter().zip(&ry) {
        cov += (x - mx) * (y - my);
        vx += (x - mx).powi(2);
        vy += (y - my).powi(2);
    }
    cov / (vx.sqrt() * vy.sqrt())
}

#[test]
fn parametric_distance_ranking_tracks_similarity_ranking() {
    let scenario = Scenario::from_toml(&scenario_toml()).unwrap();
    let classes = scenario.classes().clone();
    let k = classes.len();

    let report =
        validate_classim(&scenario, OracleMode::Ideal, &TrainConfig::default()).unwrap();
    let mut sim = vec![vec![0.0; k]; k];
    for row in &report.rows {
        let a = classes.index_of(&row.a).unwrap();
        let b = classes.index_of(&row.b).unwrap();
        sim[a][b] = row.class_sim;
        sim[b][a] = row.class_sim;
    }

    let dataset = scenario.sample().unwrap();
    let pd = pd_matrix(&dataset.train).unwrap();

    let mut sum = 0.0;
    println!("per-class Spearman between similarity and distance rankings:");
    for (i, label) in classes.labels().iter().enumerate() {
        let others: Vec<usize> = (0..k).filter(|&j| j != i).collect();
        // Negate similarity so that for both vectors smaller = more similar.
        let neg_sim: Vec<f64> = others.iter().map(|&j| -sim[i][j]).collect();
        let dist: Vec<f64> = others.iter().map(|&j| pd.get(i, j)).collect();
        let rho = spearman(&neg_sim, &dist);
        println!("  {label}: {rho:+.3}");
        assert!(rho.is_finite() && (-1.0..=1.0).contains(&rho));
        sum += rho;
    }
    let mean = sum / k as f64;
    println!("mean: {mean:+.3}");
    assert!(mean > 0.0, "rankings should agree in direction, got {mean}");
}
