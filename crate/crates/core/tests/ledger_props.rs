mod common;

use std::collections::BTreeMap;

use bank_core::ledger::{AccountKind, EntryDraft, EntryKind};
use bank_core::{AccountId, Bank, BankError, Clock, Money};
use chrono::{Days, NaiveDate};
use common::*;
use proptest::prelude::*;

/// Opens `n` accounts across a few customers; every third one is a credit card.
fn accounts(bank: &Bank, n: usize) -> Vec<(AccountId, AccountKind, i64)> {
    let mut out = Vec::new();
    for c in 0..n.div_ceil(4) {
        let kinds: Vec<_> = (0..4.min(n - c * 4))
            .map(|i| {
                if (c * 4 + i) % 3 == 2 {
                    account(AccountKind::CreditCard, 20_000)
                } else {
                    account(AccountKind::Current, 0)
                }
            })
            .collect();
        let client = client(bank, &format!("c{c}"), &kinds, 0);
        for (id, k) in client.accounts.into_iter().zip(&kinds) {
            out.push((id, k.kind, k.credit_limit_minor));
        }
    }
    out
}

#[derive(Debug, Clone)]
enum Op {
    Deposit(usize, i64),
    Move(usize, usize, i64),
    Split(usize, usize, usize, i64, i64),
}

fn op(n: usize) -> impl Strategy<Value = Op> {
    prop_oneof![
        (0..n, 1i64..50_000).prop_map(|(a, x)| Op::Deposit(a, x)),
        (0..n, 0..n, 1i64..30_000).prop_map(|(a, b, x)| Op::Move(a, b, x)),
        (0..n, 0..n, 0..n, 1i64..9_000, 1i64..9_000).prop_map(|(a, b, c, x, y)| Op::Split(a, b, c, x, y)),
    ]
}

/// Independent model: applies an entry iff every leg keeps its account in range.
fn model_apply(model: &mut BTreeMap<usize, i64>, kinds: &[(AccountId, AccountKind, i64)], legs: &[(usize, i64)]) -> bool {
    let mut next = model.clone();
    for (a, x) in legs {
        *next.entry(*a).or_default() += x;
    }
    let ok = next.iter().all(|(a, &sum)| match kinds[*a].1 {
        AccountKind::CreditCard => (0..=kinds[*a].2).contains(&-sum),
        _ => sum >= 0,
    });
    if ok {
        *model = next;
    }
    ok
}

fn run(ops: &[Op], n: usize) {
    let (bank, _, _) = memory_bank();
    let accts = accounts(&bank, n);
    let clearing = AccountId::clearing(Default::default());
    let mut model: BTreeMap<usize, i64> = BTreeMap::new();
    for op in ops {
        let (draft, legs): (EntryDraft, Vec<(usize, i64)>) = match *op {
            Op::Deposit(a, x) => (
                EntryDraft::between(EntryKind::Deposit, "dep", clearing.clone(), accts[a].0.clone(), Money::myr(x)).unwrap(),
                vec![(a, x)],
            ),
            Op::Move(a, b, x) => (
                EntryDraft::between(EntryKind::Transfer, "mv", accts[a].0.clone(), accts[b].0.clone(), Money::myr(x)).unwrap(),
                vec![(a, -x), (b, x)],
            ),
            Op::Split(a, b, c, x, y) => (
                EntryDraft::new(EntryKind::Adjustment, "split")
                    .leg(accts[a].0.clone(), Money::myr(-(x + y)))
                    .leg(accts[b].0.clone(), Money::myr(x))
                    .leg(accts[c].0.clone(), Money::myr(y)),
                vec![(a, -(x + y)), (b, x), (c, y)],
            ),
        };
        let expected = model_apply(&mut model, &accts, &legs);
        let got = bank.post_entry(&draft);
        assert_eq!(got.is_ok(), expected, "{op:?} -> {got:?}");
        if let Err(e) = got {
            assert!(matches!(e, BankError::InsufficientFunds(_) | BankError::OverLimit(_)), "{e:?}");
        }
    }

    let state = bank.state();
    let ledger = &state.ledger;
    // fold oracle straight over the postings
    let mut fold: BTreeMap<AccountId, i64> = BTreeMap::new();
    for e in ledger.entries() {
        for p in &e.postings {
            *fold.entry(p.account_id.clone()).or_default() += p.amount.amount_minor;
        }
    }
    for (i, (id, kind, _)) in accts.iter().enumerate() {
        let sum = fold.get(id).copied().unwrap_or(0);
        assert_eq!(ledger.posting_sum(id).unwrap(), sum);
        assert_eq!(sum, model.get(&i).copied().unwrap_or(0));
        let shown = bank.balance(id).unwrap().amount_minor;
        assert_eq!(shown, if *kind == AccountKind::CreditCard { -sum } else { sum });
    }
    let global: i64 = ledger.accounts().map(|a| ledger.posting_sum(&a.account_id).unwrap()).sum();
    assert_eq!(global, 0, "money is conserved");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn balances_match_fold_and_model(ops in prop::collection::vec(op(8), 1..200)) {
        run(&ops, 8);
    }
}

#[test]
fn ten_thousand_ops_over_twenty_accounts() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand::rngs::StdRng::seed_from_u64(5);
    let ops: Vec<Op> = (0..10_000)
        .map(|_| match rng.random_range(0..3) {
            0 => Op::Deposit(rng.random_range(0..20), rng.random_range(1..50_000)),
            1 => Op::Move(rng.random_range(0..20), rng.random_range(0..20), rng.random_range(1..30_000)),
            _ => Op::Split(
                rng.random_range(0..20),
                rng.random_range(0..20),
                rng.random_range(0..20),
                rng.random_range(1..9_000),
                rng.random_range(1..9_000),
            ),
        })
        .collect();
    run(&ops, 20);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn history_equals_filter_oracle(
        days in prop::collection::vec(0i64..200, 1..120),
        queries in prop::collection::vec((0i64..220, 0i64..60), 1..20),
    ) {
        let (bank, clock, _) = memory_bank();
        let c = client(&bank, "h", &[account(AccountKind::Current, 0)], 0);
        let acct = c.accounts[0].clone();
        let base = clock.now();
        let mut sorted = days.clone();
        sorted.sort_unstable();
        for d in &sorted {
            clock.set(base.plus_secs(d * 86_400 + 3_600));
            bank.deposit(&acct, Money::myr(100), "d").unwrap();
        }
        let now = bank.now();
        let state = bank.state();
        for (back, span) in queries {
            let to = now.date().checked_sub_days(Days::new(back as u64)).unwrap();
            let from = to.checked_sub_days(Days::new(span as u64)).unwrap();
            let got = state.ledger.history(&acct, from, to, now).unwrap();
            let horizon = now.minus_days(90);
            let mut expect: Vec<u64> = state
                .ledger
                .entries()
                .iter()
                .filter(|e| e.touches(&acct))
                .filter(|e| e.posted_at >= horizon && e.posted_at <= now)
                .filter(|e| e.posted_at.date() >= from && e.posted_at.date() <= to)
                .map(|e| e.entry_id)
                .collect();
            expect.reverse();
            prop_assert_eq!(got.iter().map(|h| h.entry_id).collect::<Vec<_>>(), expect);
            prop_assert!(got.iter().all(|h| h.posted_at >= horizon));
        }
    }
}

#[test]
fn inverted_range_is_rejected() {
    let (bank, _, _) = memory_bank();
    let c = client(&bank, "r", &[account(AccountKind::Current, 0)], 100);
    let d = NaiveDate::from_ymd_opt(2025, 1, 5).unwrap();
    let err = bank
        .account_history(&c.token, &c.accounts[0], d, d.pred_opt().unwrap())
        .unwrap_err();
    assert_eq!(err.code(), "INVALID_RANGE");
}
