//! One pass/fail line per acceptance criterion.

mod common;

use std::collections::BTreeMap;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::time::{Duration, Instant};

use common::{notes, plaintext_oracle, random_auction, submitted_sigmas};
use knapsack_auction::cli::{cmd_run, RunArgs, TransportArg};
use knapsack_auction::knapsack::{encode_subset, gen_superincreasing, solve_knapsack, KnapsackError};
use knapsack_auction::ot::{
    encode_residue, ot_run, ot_verify_receiver_isolation, Backend, OtChoice, OtOffer, OtSeeds,
};
use knapsack_auction::protocol::{
    apply_randomizer_correction, run_auction, seller_init, BidderFault, Body, DisqualifyPhase,
    Note, Outcome, ProtocolError, RunReport, RunSpec, SELLER,
};
use knapsack_auction::report::{ntp_attack, tiebreak};
use knapsack_auction::rng::Seeded;
use knapsack_auction::scenario::{bundled, ScenarioConfig, TABLE1_CSV};
use knapsack_auction::knapsack::Modulus;
use knapsack_auction::protocol::Transport;

type Check = Result<(), String>;
type Criterion = (&'static str, fn() -> Check);

fn ensure(cond: bool, what: impl FnOnce() -> String) -> Check {
    if cond {
        Ok(())
    } else {
        Err(what())
    }
}

fn eq<T: PartialEq + std::fmt::Debug>(what: &str, got: T, want: T) -> Check {
    ensure(got == want, || format!("{what}: got {got:?}, want {want:?}"))
}

fn run_bundled(name: &str) -> Result<(RunReport, Duration), String> {
    let scenario = ScenarioConfig::parse(bundled(name).unwrap()).map_err(|e| e.to_string())?;
    let start = Instant::now();
    let r = run_auction(&scenario.to_run_spec(Transport::Sim)).map_err(|e| e.to_string())?;
    Ok((r, start.elapsed()))
}

fn outcome(r: &RunReport) -> Result<&Outcome, String> {
    r.result.as_ref().map_err(|f| f.to_string())
}

/// Values recorded in the trace itself, not the harness summary.
struct Observed {
    codes: Vec<u64>,
    sigmas: Vec<u64>,
    subset_sum: Option<u64>,
    flags: Option<String>,
    winning_price: Option<u64>,
    claims: Vec<(String, u64, bool)>,
}

fn observe(r: &RunReport) -> Observed {
    let ns = notes(&r.trace.events);
    let announced = r
        .trace
        .events
        .iter()
        .filter(|e| e.sender == SELLER && !e.is_local())
        .filter_map(|e| e.parse::<knapsack_auction::protocol::Message>())
        .find_map(|m| match m.body {
            Body::Result { flags, winning_price, .. } => Some((flags.to_string(), winning_price)),
            _ => None,
        });
    let order: Vec<String> = r.roster.clone();
    let mut codes: BTreeMap<String, u64> = BTreeMap::new();
    for n in &ns {
        if let Note::RandomizedCode { bidder, value, .. } = n {
            codes.insert(bidder.clone(), *value);
        }
    }
    let sigmas: BTreeMap<String, u64> = submitted_sigmas(&r.trace.events).into_iter().collect();
    Observed {
        codes: order.iter().filter_map(|b| codes.get(b).copied()).collect(),
        sigmas: order.iter().filter_map(|b| sigmas.get(b).copied()).collect(),
        subset_sum: ns.iter().rev().find_map(|n| match n {
            Note::SubsetSum { value, .. } => Some(*value),
            _ => None,
        }),
        flags: announced.as_ref().map(|a| a.0.clone()),
        winning_price: announced.map(|a| a.1),
        claims: ns
            .iter()
            .filter_map(|n| match n {
                Note::ClaimChecked { bidder, revealed_code, accepted } => {
                    Some((bidder.clone(), *revealed_code, *accepted))
                }
                _ => None,
            })
            .collect(),
    }
}

fn criterion_1() -> Check {
    let (r, took) = run_bundled("example1")?;
    let o = observe(&r);
    eq("codes", o.codes, vec![905, 715, 800, 207])?;
    eq("sigmas", o.sigmas, vec![500, 635, 780, 712])?;
    eq("subset sum", o.subset_sum, Some(640))?;
    eq("flags", o.flags.as_deref(), Some("{1,0,1,0,0,1,0,1,0}"))?;
    eq("winning price", o.winning_price, Some(450))?;
    eq("claims", o.claims, vec![("B3".to_string(), 800, true)])?;
    eq("winner", outcome(&r)?.winner_id.as_deref(), Some("B3"))?;
    ensure(took < Duration::from_secs(1), || format!("took {took:?}"))
}

fn criterion_2() -> Check {
    let (r, took) = run_bundled("example2")?;
    let o = observe(&r);
    eq("codes", o.codes, vec![2507, 1530, 3809])?;
    eq("sigmas", o.sigmas, vec![3030, 2309, 2507])?;
    eq("subset sum", o.subset_sum, Some(2637))?;
    eq("flags", o.flags.as_deref(), Some("{0,1,0,1,0,0,0,0,0,1}"))?;
    eq("winning price", o.winning_price, Some(1000))?;
    eq("ranked", outcome(&r)?.ranked_prices.clone(), vec![1000, 400, 200])?;
    ensure(took < Duration::from_secs(1), || format!("took {took:?}"))
}

fn criterion_3() -> Check {
    let start = Instant::now();
    for seed in 0..50u64 {
        let k = 1 + (seed % 12) as usize;
        let codes = gen_superincreasing(k, &mut Seeded::new(seed), 20, 20).map_err(|e| e.to_string())?;
        for mask in 0u32..(1 << k) {
            let chosen: Vec<usize> = (1..=k).filter(|p| mask >> (p - 1) & 1 == 1).collect();
            let direct: u64 = chosen.iter().map(|&p| codes.as_slice()[p - 1]).sum();
            let sigma = encode_subset(&codes, &chosen).map_err(|e| e.to_string())?;
            eq("encoded sum", sigma, direct)?;
            let flags = solve_knapsack(sigma, &codes).map_err(|e| e.to_string())?;
            eq("decoded positions", flags.positions(), chosen)?;
        }
    }
    let took = start.elapsed();
    ensure(took < Duration::from_secs(30), || format!("took {took:?}"))
}

fn criterion_4() -> Check {
    let start = Instant::now();
    for seed in 0..1000u64 {
        let a = random_auction(seed, 1);
        let r = run_auction(&a.spec).map_err(|e| e.to_string())?;
        let o = outcome(&r).map_err(|e| format!("seed {seed}: {e}"))?;
        let (flags, win, ranked) = plaintext_oracle(&a.spec);
        eq(&format!("seed {seed} flags"), &o.flags, &flags)?;
        eq(&format!("seed {seed} winning price"), o.winning_price, win)?;
        eq(&format!("seed {seed} ranked"), &o.ranked_prices, &ranked)?;
    }
    let took = start.elapsed();
    ensure(took < Duration::from_secs(30), || format!("took {took:?}"))
}

fn criterion_5() -> Check {
    let a = tiebreak(TABLE1_CSV, 0).map_err(|e| e.to_string())?;
    let g = a[0].groups.iter().find(|g| g.price == 80).ok_or("no group for 80")?;
    eq("accepted", (g.accepted.0.as_str(), g.accepted.1.to_string()), ("A", "2.826".into()))?;
    let rejected: Vec<(String, String)> = g.rejected.iter().map(|(b, t)| (b.clone(), t.to_string())).collect();
    eq("rejected", rejected, vec![("B".into(), "2.907".into())])?;
    eq("final price", a[0].final_price, Some(120))?;
    // the same data through the full protocol
    let (r, _) = run_bundled("table1")?;
    eq("disqualified", r.disqualified.clone(), vec![("B".to_string(), DisqualifyPhase::PreOt)])?;
    eq("protocol final price", outcome(&r)?.winning_price, 120)
}

fn criterion_6() -> Check {
    let r = ntp_attack(30_000);
    eq("paper bound", r.paper_error_bound_ms.whole_millis(), Some(15_000))?;
    eq("standard offset", r.standard_offset_ms.whole_millis(), Some(-14_500))
}

fn criterion_7() -> Check {
    let mut s = ScenarioConfig::parse(bundled("example1").unwrap()).map_err(|e| e.to_string())?;
    s.auction.strict_modulus = true;
    match seller_init(&s.auction, 4, 0, &s.injected_params()) {
        Err(ProtocolError::Knapsack(KnapsackError::TooSmall { modulus: 1987, sum: 1989 })) => {}
        other => return Err(format!("strict mode gave {:?}", other.map(|_| ())))
    }
    s.auction.strict_modulus = false;
    seller_init(&s.auction, 4, 0, &s.injected_params()).map(|_| ()).map_err(|e| e.to_string())
}

fn fresh_equivalent(spec: &RunSpec, dropped: &str) -> Result<Outcome, String> {
    let mut fresh = spec.clone();
    fresh.bidders.retain(|b| b.id != dropped);
    fresh.seed = spec.seed.wrapping_add(1_000_003);
    let r = run_auction(&fresh).map_err(|e| e.to_string())?;
    r.result.map_err(|f| f.to_string())
}

fn criterion_8() -> Check {
    let faults = [
        (DisqualifyPhase::PreOt, BidderFault::WithdrawBeforeBid),
        (DisqualifyPhase::Ot, BidderFault::AbortTransfer),
        (DisqualifyPhase::Share, BidderFault::WithholdShares),
    ];
    for (phase, fault) in faults {
        for seed in 0..100u64 {
            let mut a = random_auction(seed, 2);
            a.spec.config.post_ot_correction = seed % 2 == 1;
            let victim = (seed as usize) % a.spec.bidders.len();
            a.spec.bidders[victim].fault = Some(fault.clone());
            let id = a.spec.bidders[victim].id.clone();
            let r = run_auction(&a.spec).map_err(|e| e.to_string())?;
            eq(&format!("{phase:?} seed {seed} disqualified"), r.disqualified.clone(), vec![(id.clone(), phase)])?;
            let got = outcome(&r)?;
            let want = fresh_equivalent(&a.spec, &id)?;
            eq(&format!("{phase:?} seed {seed} flags"), &got.flags, &want.flags)?;
            eq(&format!("{phase:?} seed {seed} ranked"), &got.ranked_prices, &want.ranked_prices)?;
            eq(&format!("{phase:?} seed {seed} winner"), &got.winner_id, &want.winner_id)?;
        }
    }
    let q = Modulus::new(1987).map_err(|e| e.to_string())?;
    let partial = (905 + 715 + 800) % 1987;
    let sigma = apply_randomizer_correction(partial, &[87], q);
    eq("corrected sigma", sigma, 520)?;
    let codes = knapsack_auction::knapsack::validate_code_set(vec![5, 9, 15, 30, 60, 120, 250, 500, 1000])
        .map_err(|e| e.to_string())?;
    eq(
        "corrected positions",
        solve_knapsack(sigma, &codes).map_err(|e| e.to_string())?.positions(),
        vec![1, 3, 8],
    )
}

fn criterion_9() -> Check {
    use rand::seq::SliceRandom;
    use rand::SeedableRng;
    for seed in 0..100u64 {
        let a = random_auction(seed, 2);
        let base = run_auction(&a.spec).map_err(|e| e.to_string())?;
        let mut permuted = a.spec.clone();
        let mut prices: Vec<u64> = permuted.bidders.iter().map(|b| b.price).collect();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x5eed);
        while prices.len() > 1 && prices == a.spec.bidders.iter().map(|b| b.price).collect::<Vec<_>>() {
            prices.shuffle(&mut rng);
        }
        for (b, p) in permuted.bidders.iter_mut().zip(prices) {
            b.price = p;
        }
        let other = run_auction(&permuted).map_err(|e| e.to_string())?;
        let (x, y) = (outcome(&base)?, outcome(&other)?);
        eq(&format!("seed {seed} subset sum"), base.subset_sum, other.subset_sum)?;
        eq(&format!("seed {seed} flags"), &x.flags, &y.flags)?;
        eq(&format!("seed {seed} winning price"), x.winning_price, y.winning_price)?;
    }
    Ok(())
}

fn criterion_10() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    for name in ["example1", "example2", "table1"] {
        let mut files = Vec::new();
        for attempt in 0..2 {
            let out = dir.path().join(format!("{name}-{attempt}"));
            let args = RunArgs {
                scenario: name.into(),
                seed: None,
                strict: false,
                paper_compat: false,
                out_dir: out.clone(),
                transport: TransportArg::Sim,
                csv: None,
            };
            cmd_run(&args).map_err(|e| e.message)?;
            let read = |f: &str| std::fs::read(out.join(f)).map_err(|e| e.to_string());
            files.push((read("results.json")?, read("trace.jsonl")?));
        }
        ensure(files[0] == files[1], || format!("{name} differs between runs"))?;
    }
    Ok(())
}

fn criterion_11() -> Check {
    for k in 1..=16usize {
        let offer = OtOffer::new(7, (0..k as u64).map(|v| encode_residue(v * 31 + 5)).collect())
            .map_err(|e| e.to_string())?;
        let seeds = OtSeeds { sender: 11, receiver: 12 };
        let mut views = Vec::new();
        for index in 1..=k {
            let choice = OtChoice { session_id: 7, index };
            let (got, t) = ot_run(&offer, choice, Backend::Ideal, seeds).map_err(|e| e.to_string())?;
            eq("ideal payload", Some(got.as_slice()), offer.payload(index))?;
            views.push(t.sender_view(Backend::Ideal));

            let (got, t) = ot_run(&offer, choice, Backend::Group, seeds).map_err(|e| e.to_string())?;
            eq("group payload", Some(got.as_slice()), offer.payload(index))?;
            let rep = ot_verify_receiver_isolation(&offer, choice, seeds.receiver, &t).map_err(|e| e.to_string())?;
            eq("opened", rep.opened, vec![index])?;
            eq("failed", rep.failed.len(), k - 1)?;
            ensure(!rep.corrupted, || format!("k={k} index={index} corrupted"))?;
        }
        ensure(views.windows(2).all(|w| w[0] == w[1]), || format!("k={k}: ideal sender views differ"))?;
    }
    Ok(())
}

#[test]
fn acceptance() {
    let criteria: [Criterion; 11] = [
        ("Example 1 golden run", criterion_1),
        ("Example 2 golden run", criterion_2),
        ("knapsack exhaustive round trip", criterion_3),
        ("cancellation against plaintext oracle", criterion_4),
        ("Table 1 tie-break", criterion_5),
        ("clock synchronization attack", criterion_6),
        ("strict modulus guard", criterion_7),
        ("recovery equivalence", criterion_8),
        ("seller ignorance of assignment", criterion_9),
        ("determinism of bundled scenarios", criterion_10),
        ("oblivious transfer contract", criterion_11),
    ];
    let mut failed = Vec::new();
    for (i, (name, check)) in criteria.iter().enumerate() {
        let n = i + 1;
        let result = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|_| Err("panicked".into()));
        match result {
            Ok(()) => println!("criterion {n:>2} PASS  {name}"),
            Err(why) => {
                println!("criterion {n:>2} FAIL  {name}: {why}");
                failed.push(n);
            }
        }
    }
    assert!(failed.is_empty(), "failed criteria: {failed:?}");
}
