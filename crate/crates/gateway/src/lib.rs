//! Session server, wire protocol and report helpers behind the `bridgesim`
//! command-line tool.

pub mod protocol;
pub mod reporting;
pub mod server;
