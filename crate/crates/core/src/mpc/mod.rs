//! Two-party additive secret sharing over `Z_{2^64}`, the server-to-server
//! transport, and distributed Laplace noise generation.

mod laplace;
mod share;
mod transport;

pub use laplace::{local_noise_contribution, pi_lap, pi_lap_party, NoiseMode};
pub use share::{
    reconstruct, reconstruct_vec, reveal_to_client, share, share_add_local, share_vec, PartyId,
    Share, SharedVector,
};
pub use transport::{
    inproc_pair, read_frame, tcp_pair, write_frame, InProcTransport, TcpTransport, Transport,
    TransportMode, MAX_FRAME_BYTES,
};
