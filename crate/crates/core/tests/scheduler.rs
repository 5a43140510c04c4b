mod common;

use std::collections::BTreeMap;
use std::time::Instant;

use bank_core::bank::{OpenPaymentRequest, TargetRef, TransferRequest};
use bank_core::ledger::AccountKind;
use bank_core::payments::{InstructionKind, InstructionStatus};
use bank_core::{Clock, Money};
use chrono::Days;
use common::*;
use rand::rngs::StdRng;
use rand::{Rng, SeedableRng};

#[derive(Debug, Clone)]
struct Planned {
    id: u64,
    kind: InstructionKind,
    date_offset: u64,
    from: usize,
    /// `None` for bill payments, which leave the bank.
    to: Option<usize>,
    amount: i64,
}

/// Sorts by (date, id) and simulates balances one instruction at a time.
fn oracle(plan: &[Planned], opening: &[i64], upto: u64) -> BTreeMap<u64, bool> {
    let mut balances = opening.to_vec();
    let mut due: Vec<&Planned> = plan.iter().filter(|p| p.date_offset <= upto).collect();
    due.sort_by_key(|p| (p.date_offset, p.id));
    due.into_iter()
        .map(|p| {
            let ok = balances[p.from] >= p.amount;
            if ok {
                balances[p.from] -= p.amount;
                if let Some(t) = p.to {
                    balances[t] += p.amount;
                }
            }
            (p.id, ok)
        })
        .collect()
}

fn scenario(seed: u64) {
    let mut rng = StdRng::seed_from_u64(seed);
    let (bank, clock, _) = memory_bank();
    let n_accounts = 3;
    let kinds: Vec<_> = (0..n_accounts).map(|_| account(AccountKind::Current, 0)).collect();
    let c = client(&bank, "payer", &kinds, 0);
    let opening: Vec<i64> = (0..n_accounts).map(|_| rng.random_range(0..20_000)).collect();
    for (id, amount) in c.accounts.iter().zip(&opening) {
        if *amount > 0 {
            bank.deposit(id, Money::myr(*amount), "open").unwrap();
        }
    }
    let today = clock.today();
    let mut plan = Vec::new();
    for _ in 0..rng.random_range(1..25) {
        let from = rng.random_range(0..n_accounts);
        let amount = rng.random_range(1..9_000);
        let date_offset = rng.random_range(1..5);
        let effective_date = today + Days::new(date_offset);
        if rng.random_bool(0.6) {
            let to = (from + rng.random_range(1..n_accounts)) % n_accounts;
            let tac = bank.issue_tac(&c.token).unwrap();
            let t = bank
                .create_transfer(
                    &c.token,
                    TransferRequest {
                        source_account: c.accounts[from].clone(),
                        target: TargetRef::Own(c.accounts[to].clone()),
                        amount: Money::myr(amount),
                        effective_date,
                        tac,
                        notify_email: None,
                    },
                )
                .unwrap();
            plan.push(Planned { id: t.transfer_id, kind: InstructionKind::Transfer, date_offset, from, to: Some(to), amount });
        } else {
            let p = bank
                .open_payment(
                    &c.token,
                    OpenPaymentRequest {
                        corporation: format!("Corp{}", rng.random_range(0..4)),
                        bill_account_no: "B-1".into(),
                        holder_name: "Payer".into(),
                        payer_account: Some(c.accounts[from].clone()),
                        amount: Money::myr(amount),
                        bill_ref: None,
                        effective_date,
                    },
                )
                .unwrap()
                .payment;
            plan.push(Planned { id: p.payment_id, kind: InstructionKind::BillPayment, date_offset, from, to: None, amount });
        }
    }

    // run a random increasing subset of business days, always ending past the last item
    let mut days: Vec<u64> = (1..=5).filter(|_| rng.random_bool(0.5)).collect();
    if days.last() != Some(&5) {
        days.push(5);
    }
    for &d in &days {
        clock.set(bank_core::Timestamp::start_of(today + Days::new(d)).plus_secs(3_600));
        let report = bank.run_value_date(today + Days::new(d)).unwrap();
        let expected = oracle(&plan, &opening, d);
        let state = bank.state();
        for p in &plan {
            let status = match p.kind {
                InstructionKind::Transfer => state.payments.transfers[&p.id].status,
                InstructionKind::BillPayment => state.payments.bill_payments[&p.id].status,
            };
            let want = match expected.get(&p.id) {
                None => InstructionStatus::Pending,
                Some(true) => InstructionStatus::Executed,
                Some(false) => InstructionStatus::Failed,
            };
            assert_eq!(status, want, "seed {seed} day {d} item {p:?}");
        }
        let executed_order: Vec<u64> = report.executed_items.iter().map(|i| i.instruction_id).collect();
        let mut sorted = executed_order.clone();
        sorted.sort_by_key(|id| plan.iter().find(|p| p.id == *id).map(|p| (p.date_offset, p.id)));
        assert_eq!(executed_order, sorted, "execution follows (date, id)");

        // running the same date again changes nothing
        let seq = bank.journal_seq();
        let again = bank.run_value_date(today + Days::new(d)).unwrap();
        assert_eq!((again.executed, again.failed), (0, 0));
        assert_eq!(bank.journal_seq(), seq);
        assert_eq!(bank.state(), state);
    }
    let err = bank.run_value_date(today).unwrap_err();
    assert_eq!(err.code(), "DATE_REGRESSION");

    // balances agree with the oracle simulation
    let mut balances = opening.clone();
    let outcome = oracle(&plan, &opening, 5);
    let mut ordered = plan.clone();
    ordered.sort_by_key(|p| (p.date_offset, p.id));
    for p in ordered {
        if outcome[&p.id] {
            balances[p.from] -= p.amount;
            if let Some(t) = p.to {
                balances[t] += p.amount;
            }
        }
    }
    for (id, want) in c.accounts.iter().zip(balances) {
        assert_eq!(bank.balance(id).unwrap().amount_minor, want);
    }
}

#[test]
fn hundred_contended_schedules_match_the_oracle() {
    let started = Instant::now();
    for seed in 0..100 {
        scenario(seed);
    }
    assert!(started.elapsed().as_secs_f64() < 10.0);
}

#[test]
fn only_the_first_of_two_draining_items_runs() {
    let (bank, clock, _) = memory_bank();
    let c = client(&bank, "drain", &[account(AccountKind::Current, 0), account(AccountKind::Saving, 0)], 1_000);
    let tomorrow = clock.today() + Days::new(1);
    let mut ids = Vec::new();
    for _ in 0..2 {
        let tac = bank.issue_tac(&c.token).unwrap();
        ids.push(
            bank.create_transfer(
                &c.token,
                TransferRequest {
                    source_account: c.accounts[0].clone(),
                    target: TargetRef::Own(c.accounts[1].clone()),
                    amount: Money::myr(800),
                    effective_date: tomorrow,
                    tac,
                    notify_email: Some("drain@example.test".into()),
                },
            )
            .unwrap()
            .transfer_id,
        );
    }
    let report = bank.run_value_date(tomorrow).unwrap();
    assert_eq!(report.executed_items[0].instruction_id, ids[0]);
    assert_eq!(report.failed_items[0].instruction_id, ids[1]);
    assert_eq!(report.failed_items[0].reason, "INSUFFICIENT_FUNDS");
}

#[test]
fn pending_list_shrinks_as_days_close() {
    let (bank, clock, _) = memory_bank();
    let c = client(&bank, "plan", &[account(AccountKind::Current, 0)], 10_000);
    let d = clock.today();
    for offset in [1, 3] {
        bank.open_payment(
            &c.token,
            OpenPaymentRequest {
                corporation: "Telco".into(),
                bill_account_no: "T-9".into(),
                holder_name: "Plan".into(),
                payer_account: None,
                amount: Money::myr(100),
                bill_ref: Some("INV-1".into()),
                effective_date: d + Days::new(offset),
            },
        )
        .unwrap();
    }
    bank.run_value_date(d + Days::new(1)).unwrap();
    let left = bank.enquire_future_payments(&c.token).unwrap();
    assert_eq!(left.len(), 1);
    assert_eq!(left[0].effective_date, d + Days::new(3));
}
