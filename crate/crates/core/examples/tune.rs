// scratch harness for picking acceptance-test configurations; not shipped
use skw_core::codec::{leakage_exact, leakage_plugin, run_trials, CodecParams};
use skw_core::prob::{Axis, Channel, Pmf};
use skw_core::region::{AuxiliaryPair, JointSource, RateConstraints};

fn coin_padded_aux(card_x: usize, coins_u: usize, card_t: usize) -> AuxiliaryPair {
    // U = (X, coin) over card_x * coins_u letters; T independent uniform
    let card_u = card_x * coins_u;
    let mut u_rows = Vec::new();
    for x in 0..card_x {
        let mut row = vec![0.0; card_u];
        for c in 0..coins_u {
            row[c * card_x + x] = 1.0 / coins_u as f64;
        }
        u_rows.push(row);
    }
    let t_rows = vec![vec![1.0 / card_t as f64; card_t]; card_u];
    AuxiliaryPair::from_rows(u_rows, t_rows).unwrap()
}

fn main() {
    let src = JointSource::bsc_pair(0.1, 0.2).unwrap();

    println!("== criterion 7 candidates (n=16, delta=0.2, margin=0.15, 2000 trials) ==");
    for (label, aux, r1) in [
        ("U=X T=const r1=2.0", AuxiliaryPair::identity_u_const_t(2).unwrap(), 2.0),
        ("coin U4 T8 r1=1.5", coin_padded_aux(2, 2, 8), 1.5),
        ("coin U4 T32 r1=1.5", coin_padded_aux(2, 2, 32), 1.5),
        ("coin U4 T32 r1=2.0", coin_padded_aux(2, 2, 32), 2.0),
    ] {
        let rc = RateConstraints::new(r1, 0.25).unwrap();
        let params = CodecParams {
            n: 16,
            delta: 0.2,
            margin: 0.15,
            seed: 7,
            trials: 2000,
            ..Default::default()
        };
        let t0 = std::time::Instant::now();
        match run_trials(&src, &aux, rc, &params) {
            Ok(r) => println!(
                "{label}: agree {:.4} encf {} s1f {} s2f {} ({:?})",
                r.agreements as f64 / r.trials as f64,
                r.encoder_fallbacks,
                r.decoder_step1_failures,
                r.decoder_step2_failures,
                t0.elapsed()
            ),
            Err(e) => println!("{label}: ERROR {e}"),
        }
    }

    println!("== criterion 7 noiseless (Y = X) ==");
    {
        let x = Pmf::uniform(vec![Axis::new("x", 2)]).unwrap();
        let xy = x.extend(&Channel::identity("x", "y", 2).unwrap()).unwrap();
        let xyz = xy.extend(&Channel::bsc("x", "z", 0.2).unwrap()).unwrap();
        let nl = JointSource::new(xyz).unwrap();
        let aux = AuxiliaryPair::identity_u_const_t(2).unwrap();
        let rc = RateConstraints::new(2.0, 0.25).unwrap();
        let params = CodecParams {
            n: 16,
            delta: 0.2,
            margin: 0.15,
            seed: 7,
            trials: 2000,
            ..Default::default()
        };
        let r = run_trials(&nl, &aux, rc, &params).unwrap();
        println!(
            "noiseless: agree {:.4} encf {} s1f {} s2f {} (success trials {})",
            r.agreements as f64 / r.trials as f64,
            r.encoder_fallbacks,
            r.decoder_step1_failures,
            r.decoder_step2_failures,
            r.trials - r.encoder_fallbacks,
        );
    }

    println!("== criterion 8 leakage trend (U=X, T const, r1=h(0.1)+eps, r2=0.1) ==");
    let aux = AuxiliaryPair::identity_u_const_t(2).unwrap();
    let h01 = 0.46899559358928117f64;
    for margin in [0.1, 0.15] {
        let mut line = format!("margin {margin}: ");
        for n in [6usize, 8, 10, 12] {
            let params = CodecParams { n, seed: 7, margin, ..Default::default() };
            let rc = RateConstraints::new(h01 + 1e-9, 0.1).unwrap();
            let t0 = std::time::Instant::now();
            match leakage_exact(&src, &aux, rc, &params) {
                Ok(r) => line.push_str(&format!(
                    "n={n}: {:.4} ({:.1?})  ",
                    r.leakage_per_symbol,
                    t0.elapsed()
                )),
                Err(e) => line.push_str(&format!("n={n}: ERR {e}  ")),
            }
        }
        println!("{line}");
    }

    println!("== criterion 8 plugin cross-check at n=10 ==");
    {
        let params = CodecParams { n: 10, seed: 7, trials: 20_000, ..Default::default() };
        let rc = RateConstraints::new(h01 + 1e-9, 0.1).unwrap();
        let e = leakage_exact(&src, &aux, rc, &params).unwrap();
        let p = leakage_plugin(&src, &aux, rc, &params).unwrap();
        println!(
            "exact {:.4} plugin {:.4} diff {:.4}",
            e.leakage_per_symbol,
            p.leakage_per_symbol,
            (e.leakage_per_symbol - p.leakage_per_symbol).abs()
        );
    }
}
