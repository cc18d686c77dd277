//! Logic locking: random XOR/XNOR key-gate insertion, cross-module key
//! chaining, key handling and the ROM key-multiplexer Trojan.

mod insert;
mod interlock;
mod key;
mod trojan;

use thiserror::Error;

use crate::netlist::NetlistError;

pub use insert::{
    insert_key_gates, lock, lockable_sites, KeyGateKind, KeyGateRecord, LockOptions, Locked,
    LockingPlan,
};
pub use interlock::{interlock, interlock_with, InterlockLink, Interlocked, DEFAULT_CHAIN_BITS};
pub use key::{key_net_index, key_net_name, LockKey, KEY_NET_PREFIX};
pub use trojan::{trojan_select, TrojanKeyMux, ADDRESS_BITS, ROM_CAPACITY};

/// Key width of the MiG-V style profile.
pub const DEFAULT_KEY_WIDTH: usize = 1024;
/// Key gates per decoder module in that profile.
pub const DECODER_KEY_GATES: usize = 128;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum LockingError {
    #[error("key-gate count must be at least 1")]
    InvalidCount,
    #[error("key width must be at least 1")]
    InvalidWidth,
    #[error("netlist `{0}` has no lockable internal nets")]
    NoSites(String),
    #[error("requested {requested} key gates but only {available} lockable nets exist")]
    TooManyGates { requested: usize, available: usize },
    #[error("key index {index} out of range for width {width}")]
    KeyIndexOutOfRange { index: usize, width: usize },
    #[error("key net `{0}` already exists in the netlist")]
    KeyNetCollision(String),
    #[error("key input `{0}` does not follow the lolo_key_bit<N> naming")]
    ForeignKeyNet(String),
    #[error("malformed key: {0}")]
    KeyFormat(String),
    #[error("plan line {line}: {message}")]
    PlanFormat { line: usize, message: String },
    #[error("interlock needs at least 2 modules, got {0}")]
    TooFewModules(usize),
    #[error("module name `{0}` used twice")]
    NamespaceCollision(String),
    #[error("module `{0}` has no outputs to tap")]
    NoTapOutputs(String),
    #[error("ROM holds {0} keys, capacity is 1024")]
    RomTooLarge(usize),
    #[error("ROM address {address}: {message}")]
    RomFormat { address: usize, message: String },
    #[error("address {address} out of range for ROM of {len} keys")]
    AddressOutOfRange { address: usize, len: usize },
    #[error("key width mismatch: expected {expected}, found {found}")]
    WidthMismatch { expected: usize, found: usize },
    #[error(transparent)]
    Netlist(#[from] NetlistError),
}

pub type Result<T> = std::result::Result<T, LockingError>;
