//! Fault injection in the emulator: drop, corrupt, crash and restart, plus
//! the error an illegal action produces.

use std::collections::BTreeSet;

use actor_mbt::actor::{Action, ActorId, Emulator};
use actor_mbt::systems::kv::{KvBounds, CORRUPTED, KEY};
use actor_mbt::value::Value;

fn set(dst: u16, value: &str) -> actor_mbt::actor::Event {
    Action::external("Set", ActorId(dst), Value::record([("key", Value::str(KEY)), ("value", Value::str(value))]))
}

fn main() {
    let bounds = KvBounds { actors: 2, sets: 3, crashes: 1, drops: 1, corruptions: 1, ..KvBounds::default() };
    let mut emu = Emulator::new(bounds.emulator_config()).unwrap();

    for (dst, v) in [(0, "a"), (1, "b"), (1, "c")] {
        emu.step(&Action::inject(set(dst, v))).unwrap();
    }
    println!("pending after three SETs: {}", emu.store().len());

    emu.step(&Action::Drop { event: set(0, "a") }).unwrap();
    println!("dropped SET a, pending: {}", emu.store().len());

    let garbled = Value::record([("key", Value::str(KEY)), ("value", Value::str(CORRUPTED))]);
    emu.step(&Action::Corrupt { event: set(1, "b"), payload: garbled }).unwrap();
    println!("corrupted SET b: {:?}", emu.snapshot().events.iter().map(|e| e.payload.to_string()).collect::<Vec<_>>());

    // A crash only discards the events the action names.
    let dropped = BTreeSet::from([set(1, "c")]);
    let out = emu.step(&Action::Crash { actor: ActorId(1), dropped }).unwrap();
    println!("crashed actor 1, discarded {} event(s)", out.removed);

    let corrupted = set(1, CORRUPTED);
    match emu.step(&Action::deliver(corrupted.clone())) {
        Err(e) => println!("delivering to a crashed actor is rejected: {e}"),
        Ok(_) => unreachable!(),
    }

    emu.step(&Action::Restart { actor: ActorId(1) }).unwrap();
    emu.step(&Action::deliver(corrupted)).unwrap();
    println!("after restart: {}", emu.snapshot().actors[1]);
}
