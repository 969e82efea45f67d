//! Drives the key-value actor by hand inside the emulator: a client SET is
//! injected, delivered, and the resulting notifications are processed.

use actor_mbt::actor::{Action, ActorId, Emulator, Endpoint, Event};
use actor_mbt::systems::kv::{KvBounds, KEY};
use actor_mbt::value::Value;

fn show(label: &str, snapshot: &actor_mbt::actor::SystemState) {
    println!("{label}");
    for (i, a) in snapshot.actors.iter().enumerate() {
        println!("  actor {i}: {a}");
    }
    for e in &snapshot.events {
        println!("  pending: {e}");
    }
}

fn main() {
    let bounds = KvBounds { actors: 3, sets: 1, gets: 1, ..KvBounds::default() };
    let mut emu = Emulator::new(bounds.emulator_config()).expect("three actors");

    let set = Action::external("Set", ActorId(0), Value::record([("key", Value::str(KEY)), ("value", Value::str("v1"))]));
    emu.step(&Action::inject(set.clone())).unwrap();
    show("after injecting SET", &emu.snapshot());

    let outcome = emu.step(&Action::deliver(set)).unwrap();
    println!("SET delivered: {} event(s) withdrawn, {} requested", outcome.removed, outcome.added);
    show("after delivering SET", &emu.snapshot());

    // KeyUpdated notifications carry no work; delivering them just drains
    // the store.
    for e in emu.store().withdrawable() {
        emu.step(&Action::deliver(e)).unwrap();
    }

    let get = Action::external("Get", ActorId(0), Value::record([("key", Value::str(KEY))]));
    emu.step(&Action::inject(get.clone())).unwrap();
    emu.step(&Action::deliver(get)).unwrap();
    let reply: Vec<Event> = emu.snapshot().events.into_iter().filter(|e| e.dst == Endpoint::External).collect();
    println!("GET answered with {}", reply[0].payload);
}
