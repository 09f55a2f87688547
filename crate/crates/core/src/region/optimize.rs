//! Multistart projected local search over the product of row simplices of the
//! two auxiliary channels. Restarts are independent and run in parallel; the
//! merge is deterministic regardless of scheduling.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::region::evaluate::{
    feasible_for, separation_key_rate, theorem1_key_rate, TermEvaluator,
};
use crate::region::types::{
    AuxiliaryPair, Baseline, JointSource, OptimizerConfig, RateConstraints, RegionPoint,
    RegionTerms,
};

/// Penalty weight on constraint violation, in bits of objective per bit of
/// violation. Lets the search walk through infeasible territory while never
/// preferring it near the boundary.
const VIOLATION_PENALTY: f64 = 10.0;

/// Smallest coordinate step of the shrinking schedule.
const MIN_STEP: f64 = 1e-5;

#[derive(Debug, Clone)]
struct Candidate {
    u_rows: Vec<f64>,
    t_rows: Vec<f64>,
    terms: RegionTerms,
    key_rate: f64,
    feasible: bool,
}

fn violation(terms: &RegionTerms, rc: RateConstraints, baseline: Baseline) -> f64 {
    match baseline {
        Baseline::Joint => {
            (terms.i_ux_y - (rc.r1 + rc.r2)).max(0.0) + (terms.i_tx_y - rc.r1).max(0.0)
        }
        Baseline::Separation => (terms.i_ux_y - rc.r1).max(0.0),
    }
}

fn score(terms: &RegionTerms, rc: RateConstraints, baseline: Baseline) -> f64 {
    terms.mi_difference() + rc.r2 - VIOLATION_PENALTY * violation(terms, rc, baseline)
}

/// Deterministic "is `a` a better witness than `b`" predicate: larger key
/// rate first, then smaller I(U;X|Y), then lexicographically smaller
/// channel matrices.
fn better(a: &Candidate, b: &Candidate) -> bool {
    if a.key_rate != b.key_rate {
        return a.key_rate > b.key_rate;
    }
    if a.terms.i_ux_y != b.terms.i_ux_y {
        return a.terms.i_ux_y < b.terms.i_ux_y;
    }
    let ka = (&a.t_rows, &a.u_rows);
    let kb = (&b.t_rows, &b.u_rows);
    ka < kb
}

fn random_simplex_rows(rng: &mut impl Rng, rows: usize, cols: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(rows * cols);
    for _ in 0..rows {
        let mut row: Vec<f64> = (0..cols)
            .map(|_| -(rng.gen::<f64>().max(1e-300)).ln())
            .collect();
        let sum: f64 = row.iter().sum();
        for v in &mut row {
            *v /= sum;
        }
        out.extend(row);
    }
    out
}

fn pad_columns(rows: &[Vec<f64>], cols: usize) -> Vec<f64> {
    let mut out = Vec::with_capacity(rows.len() * cols);
    for row in rows {
        for j in 0..cols {
            out.push(if j < row.len() { row[j] } else { 0.0 });
        }
    }
    out
}

struct Restart {
    u_rows: Vec<f64>,
    t_rows: Vec<f64>,
}

fn seeded_starts(
    src: &JointSource,
    card_t: usize,
    card_u: usize,
    warm_starts: &[AuxiliaryPair],
) -> Vec<Restart> {
    let card_x = src.card_x();
    let mut starts = Vec::new();
    // the zero-information pair is always admissible and anchors feasibility
    let mut const_u = vec![0.0; card_x * card_u];
    for x in 0..card_x {
        const_u[x * card_u] = 1.0;
    }
    let mut const_t = vec![0.0; card_u * card_t];
    for u in 0..card_u {
        const_t[u * card_t] = 1.0;
    }
    starts.push(Restart { u_rows: const_u, t_rows: const_t.clone() });
    // copy-as-much-of-X-as-fits start
    let mut ident_u = vec![0.0; card_x * card_u];
    for x in 0..card_x {
        ident_u[x * card_u + x.min(card_u - 1)] = 1.0;
    }
    starts.push(Restart { u_rows: ident_u, t_rows: const_t });
    for w in warm_starts {
        if w.card_x() == card_x && w.card_u() <= card_u && w.card_t() <= card_t {
            starts.push(Restart {
                u_rows: pad_columns(w.u_given_x().rows(), card_u),
                t_rows: {
                    // pad both input letters (rows) and output letters (cols)
                    let mut rows = w.t_given_u().rows().to_vec();
                    while rows.len() < card_u {
                        let mut filler = vec![0.0; w.card_t()];
                        filler[0] = 1.0;
                        rows.push(filler);
                    }
                    pad_columns(&rows, card_t)
                },
            });
        }
    }
    starts
}

fn local_search(
    ev: &mut TermEvaluator,
    rc: RateConstraints,
    baseline: Baseline,
    start: Restart,
    cfg: &OptimizerConfig,
    card_x: usize,
    card_u: usize,
    card_t: usize,
) -> Option<Candidate> {
    let mut u_rows = start.u_rows;
    let mut t_rows = start.t_rows;
    let mut terms = ev.eval(&u_rows, &t_rows);
    let mut current = score(&terms, rc, baseline);
    let mut evals = 1usize;

    let make_candidate = |u_rows: &[f64], t_rows: &[f64], terms: &RegionTerms| Candidate {
        u_rows: u_rows.to_vec(),
        t_rows: t_rows.to_vec(),
        terms: *terms,
        key_rate: terms.mi_difference() + rc.r2,
        feasible: feasible_for(terms, rc, baseline),
    };

    let mut best_feasible: Option<Candidate> = None;
    let consider = |cand: Candidate, best: &mut Option<Candidate>| {
        if cand.feasible && best.as_ref().map_or(true, |b| better(&cand, b)) {
            *best = Some(cand);
        }
    };
    consider(make_candidate(&u_rows, &t_rows, &terms), &mut best_feasible);

    let mut step = 0.5;
    'outer: while step >= MIN_STEP {
        let mut improved_this_level = 0.0f64;
        let mut any = true;
        while any {
            any = false;
            for mat in 0..2 {
                let (rows, cols) = if mat == 0 { (card_x, card_u) } else { (card_u, card_t) };
                if cols < 2 {
                    continue;
                }
                for r in 0..rows {
                    for from in 0..cols {
                        for to in 0..cols {
                            if from == to {
                                continue;
                            }
                            let base = r * cols;
                            let amount = {
                                let m = if mat == 0 { &u_rows } else { &t_rows };
                                m[base + from].min(step)
                            };
                            if amount <= 0.0 {
                                continue;
                            }
                            {
                                let m = if mat == 0 { &mut u_rows } else { &mut t_rows };
                                m[base + from] -= amount;
                                m[base + to] += amount;
                            }
                            let cand_terms = ev.eval(&u_rows, &t_rows);
                            evals += 1;
                            let cand_score = score(&cand_terms, rc, baseline);
                            if cand_score > current + 1e-15 {
                                improved_this_level += cand_score - current;
                                current = cand_score;
                                terms = cand_terms;
                                any = true;
                                consider(
                                    make_candidate(&u_rows, &t_rows, &terms),
                                    &mut best_feasible,
                                );
                            } else {
                                let m = if mat == 0 { &mut u_rows } else { &mut t_rows };
                                m[base + from] += amount;
                                m[base + to] -= amount;
                            }
                            if evals >= cfg.max_iterations {
                                break 'outer;
                            }
                        }
                    }
                }
            }
        }
        if improved_this_level < cfg.convergence_tol && step < 1e-3 {
            break;
        }
        step *= 0.5;
    }
    best_feasible
}

/// Best feasible operating point found by multistart local search. The
/// constant auxiliary is always seeded, so a feasible point always exists;
/// any `warm_starts` are evaluated as given, making the result at least as
/// good as the best feasible warm start.
pub fn optimize_key_rate(
    src: &JointSource,
    rc: RateConstraints,
    card_t: usize,
    card_u: usize,
    cfg: &OptimizerConfig,
    baseline: Baseline,
    warm_starts: &[AuxiliaryPair],
) -> Result<RegionPoint> {
    cfg.validate()?;
    if card_t < 1 || card_u < 1 {
        return Err(Error::InvalidParameter(
            "auxiliary cardinalities must be >= 1".into(),
        ));
    }
    let card_x = src.card_x();
    let seeded = seeded_starts(src, card_t, card_u, warm_starts);
    let total = cfg.restarts.max(seeded.len());

    let results: Vec<Option<Candidate>> = (0..total)
        .into_par_iter()
        .map(|i| {
            let mut ev = TermEvaluator::new(src, card_u, card_t);
            let start = if i < seeded.len() {
                Restart {
                    u_rows: seeded[i].u_rows.clone(),
                    t_rows: seeded[i].t_rows.clone(),
                }
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
                rng.set_stream(1 + i as u64);
                Restart {
                    u_rows: random_simplex_rows(&mut rng, card_x, card_u),
                    t_rows: random_simplex_rows(&mut rng, card_u, card_t),
                }
            };
            local_search(&mut ev, rc, baseline, start, cfg, card_x, card_u, card_t)
        })
        .collect();

    let mut best: Option<Candidate> = None;
    for cand in results.into_iter().flatten() {
        if best.as_ref().map_or(true, |b| better(&cand, b)) {
            best = Some(cand);
        }
    }
    let best = best.expect("constant auxiliary start is always feasible");

    let to_rows = |flat: &[f64], rows: usize, cols: usize| -> Vec<Vec<f64>> {
        (0..rows).map(|r| flat[r * cols..(r + 1) * cols].to_vec()).collect()
    };
    let witness = AuxiliaryPair::from_rows(
        to_rows(&best.u_rows, card_x, card_u),
        to_rows(&best.t_rows, card_u, card_t),
    )?;
    // report through the reference evaluation path so the returned point
    // always recomputes from its own witness
    match baseline {
        Baseline::Joint => theorem1_key_rate(src, &witness, rc),
        Baseline::Separation => separation_key_rate(src, &witness, rc),
    }
}
