//! Emulator properties checked on random walks through the reference models.

use std::collections::BTreeSet;

use actor_mbt::actor::{
    Action, ActionKind, Actor, ActorId, Discipline, Emulator, EmulatorConfig, Endpoint, Event, EventStore,
    StepError, SystemState,
};
use actor_mbt::conformance::{compare_states, Comparison};
use actor_mbt::model::Model;
use actor_mbt::systems::kv::{KvBounds, KvModel, KEY};
use actor_mbt::systems::vr::{vr_config, VrBounds, VrModel};
use actor_mbt::value::Value;
use proptest::prelude::*;

/// Follows the model, picking among enabled actions by `choices`.
fn walk<M: Model>(model: &M, choices: &[u32]) -> Vec<Action> {
    let mut state = model.init();
    let mut actions = Vec::new();
    for &c in choices {
        let succ = model.successors(&state);
        if succ.is_empty() {
            break;
        }
        let (a, next) = succ[c as usize % succ.len()].clone();
        actions.push(a);
        state = next;
    }
    actions
}

fn replay<A: Actor>(config: &EmulatorConfig<A>, actions: &[Action]) -> (Emulator<A>, Vec<SystemState>) {
    let mut emu = Emulator::new(config.clone()).unwrap();
    let mut snaps = vec![emu.snapshot()];
    for a in actions {
        emu.step(a).unwrap_or_else(|e| panic!("{a}: {e}"));
        snaps.push(emu.snapshot());
    }
    (emu, snaps)
}

fn kv_faults() -> KvBounds {
    KvBounds { actors: 2, sets: 1, gets: 1, crashes: 1, drops: 1, corruptions: 1 }
}

fn vr_small() -> VrBounds {
    VrBounds { replicas: 3, max_queries: 1, max_views: 1 }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn store_size_changes_by_requests_minus_withdrawals(choices in prop::collection::vec(any::<u32>(), 0..40)) {
        let bounds = kv_faults();
        let model = KvModel::new(bounds);
        let mut emu = Emulator::new(bounds.emulator_config()).unwrap();
        let mut state = model.init();
        for a in walk(&model, &choices) {
            let before = emu.store().len();
            let outcome = emu.step(&a).unwrap();
            prop_assert_eq!(emu.store().len() + outcome.removed, before + outcome.added);
            match a.kind() {
                ActionKind::Inject => prop_assert_eq!((outcome.removed, outcome.added), (0, 1)),
                ActionKind::Deliver => prop_assert_eq!(outcome.removed, 1),
                ActionKind::Drop => prop_assert_eq!((outcome.removed, outcome.added), (1, 0)),
                ActionKind::Corrupt => prop_assert_eq!((outcome.removed, outcome.added), (1, 1)),
                _ => {}
            }
            state = model.successor(&state, &a);
            prop_assert_eq!(compare_states(&emu.snapshot(), &state), Comparison::Equal);
        }
    }

    #[test]
    fn replay_is_deterministic(choices in prop::collection::vec(any::<u32>(), 0..30)) {
        let actions = walk(&VrModel::new(vr_small()), &choices);
        let config = vr_config(3, None);
        prop_assert_eq!(replay(&config, &actions).1, replay(&config, &actions).1);
    }

    #[test]
    fn deliveries_to_distinct_actors_commute(choices in prop::collection::vec(any::<u32>(), 0..25)) {
        let actions = walk(&VrModel::new(vr_small()), &choices);
        let config = vr_config(3, None);
        let (emu, _) = replay(&config, &actions);
        let pending: Vec<Event> = emu.store().withdrawable().into_iter().collect();
        for (i, e1) in pending.iter().enumerate() {
            for e2 in &pending[i + 1..] {
                if e1.dst == e2.dst {
                    continue;
                }
                let order = |first: &Event, second: &Event| {
                    let mut emu = replay(&config, &actions).0;
                    emu.step(&Action::deliver(first.clone())).unwrap();
                    emu.step(&Action::deliver(second.clone())).unwrap();
                    emu.snapshot()
                };
                prop_assert_eq!(order(e1, e2), order(e2, e1));
            }
        }
    }

    #[test]
    fn crash_and_restart_keep_the_persistent_part(
        choices in prop::collection::vec(any::<u32>(), 0..30),
        victim in 0u16..3,
    ) {
        let actions = walk(&VrModel::new(vr_small()), &choices);
        let config = vr_config(3, None).allow([ActionKind::Crash, ActionKind::Restart]);
        let (mut emu, _) = replay(&config, &actions);
        let id = ActorId(victim);
        let before = emu.actor(id).unwrap().persistent();
        emu.step(&Action::Crash { actor: id, dropped: BTreeSet::new() }).unwrap();
        prop_assert!(!emu.is_alive(id));
        emu.step(&Action::Restart { actor: id }).unwrap();
        prop_assert_eq!(emu.actor(id).unwrap().persistent(), before);
    }

    #[test]
    fn fifo_store_serves_each_pair_in_insertion_order(
        sends in prop::collection::vec((0u16..3, 0u16..3), 1..40),
        picks in prop::collection::vec(any::<u32>(), 40),
    ) {
        let mut store: EventStore<()> = EventStore::new(Discipline::FifoPairwise);
        for (seq, &(s, d)) in sends.iter().enumerate() {
            let ev = Event::new("M", Endpoint::Actor(ActorId(s)), Endpoint::Actor(ActorId(d)), Value::Int(seq as i64));
            store.insert(ev, ());
        }
        let mut last = std::collections::BTreeMap::new();
        let mut taken = 0;
        for p in picks.iter().cycle().take(sends.len()) {
            let heads: Vec<Event> = store.withdrawable().into_iter().collect();
            // One head per non-empty ordered pair.
            let pairs: BTreeSet<_> = heads.iter().map(|e| (e.src, e.dst)).collect();
            prop_assert_eq!(pairs.len(), heads.len());
            let e = heads[*p as usize % heads.len()].clone();
            prop_assert!(store.withdraw(&e).is_some());
            taken += 1;
            let seq = e.payload.as_int().unwrap();
            if let Some(prev) = last.insert((e.src, e.dst), seq) {
                prop_assert!(prev < seq);
            }
        }
        prop_assert_eq!(taken, sends.len());
        prop_assert!(store.is_empty());
    }
}

#[test]
fn deliver_to_crashed_actor_is_illegal() {
    let config = KvBounds { actors: 2, crashes: 1, ..KvBounds::default() }.emulator_config();
    let mut emu = Emulator::new(config).unwrap();
    let set = Action::external("Set", ActorId(1), Value::record([("key", Value::str(KEY)), ("value", Value::str("v"))]));
    emu.step(&Action::inject(set.clone())).unwrap();
    emu.step(&Action::Crash { actor: ActorId(1), dropped: BTreeSet::new() }).unwrap();
    assert!(matches!(emu.step(&Action::deliver(set)), Err(StepError::IllegalAction { .. })));
}

#[test]
fn injected_set_delivered_to_single_actor_leaves_one_self_notification() {
    let mut emu = Emulator::new(KvBounds::default().emulator_config()).unwrap();
    let set = Action::external("Set", ActorId(0), Value::record([("key", Value::str(KEY)), ("value", Value::str("v"))]));
    emu.step(&Action::inject(set.clone())).unwrap();
    assert_eq!(emu.store().len(), 1);
    emu.step(&Action::deliver(set)).unwrap();
    let events: Vec<Event> = emu.snapshot().events.into_iter().collect();
    assert_eq!(events.len(), 1);
    assert_eq!(events[0].kind.as_ref(), "KeyUpdated");
    assert_eq!((events[0].src, events[0].dst), (Endpoint::Actor(ActorId(0)), Endpoint::Actor(ActorId(0))));
}

#[test]
fn set_store_allows_any_pending_event() {
    let mut store: EventStore<()> = EventStore::new(Discipline::Set);
    let events: Vec<Event> = (0..4)
        .map(|i| Event::new("M", Endpoint::Actor(ActorId(0)), Endpoint::Actor(ActorId(1)), Value::Int(i)))
        .collect();
    for e in &events {
        store.insert(e.clone(), ());
    }
    assert_eq!(store.withdrawable().len(), 4);
    assert!(store.withdraw(&events[3]).is_some());
    assert!(store.withdraw(&events[0]).is_some());
    assert_eq!(store.len(), 2);
}

#[test]
fn fault_actions_need_permission() {
    let mut emu = Emulator::new(vr_config(3, None)).unwrap();
    let crash = Action::Crash { actor: ActorId(0), dropped: BTreeSet::new() };
    assert!(matches!(emu.step(&crash), Err(StepError::IllegalAction { .. })));
}
