//! Ordered, reliable message channels between the two servers.
//!
//! Wire format for the TCP mode: a 4-byte big-endian payload length in bytes,
//! followed by the payload as little-endian 64-bit ring words.

use std::io::{Read, Write};
use std::net::{TcpListener, TcpStream};
use std::sync::mpsc::{channel, Receiver, Sender};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ring::RingElement;

/// Upper bound on a single frame payload (64 MiB).
pub const MAX_FRAME_BYTES: usize = 64 << 20;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum TransportMode {
    #[default]
    InProc,
    Tcp,
}

pub trait Transport: Send {
    fn send(&mut self, words: &[RingElement]) -> Result<()>;
    fn recv(&mut self) -> Result<Vec<RingElement>>;
}

impl<T: Transport + ?Sized> Transport for Box<T> {
    fn send(&mut self, words: &[RingElement]) -> Result<()> {
        (**self).send(words)
    }

    fn recv(&mut self) -> Result<Vec<RingElement>> {
        (**self).recv()
    }
}

pub struct InProcTransport {
    tx: Sender<Vec<RingElement>>,
    rx: Receiver<Vec<RingElement>>,
}

pub fn inproc_pair() -> (InProcTransport, InProcTransport) {
    let (tx_a, rx_b) = channel();
    let (tx_b, rx_a) = channel();
    (
        InProcTransport { tx: tx_a, rx: rx_a },
        InProcTransport { tx: tx_b, rx: rx_b },
    )
}

impl Transport for InProcTransport {
    fn send(&mut self, words: &[RingElement]) -> Result<()> {
        self.tx
            .send(words.to_vec())
            .map_err(|_| Error::Transport("peer channel closed".into()))
    }

    fn recv(&mut self) -> Result<Vec<RingElement>> {
        self.rx
            .recv()
            .map_err(|_| Error::Transport("peer channel closed".into()))
    }
}

pub fn write_frame<W: Write>(w: &mut W, words: &[RingElement]) -> std::io::Result<()> {
    let bytes = words.len() * 8;
    if bytes > MAX_FRAME_BYTES {
        return Err(std::io::Error::new(
            std::io::ErrorKind::InvalidInput,
            format!("frame of {bytes} bytes exceeds limit"),
        ));
    }
    let mut buf = Vec::with_capacity(4 + bytes);
    buf.extend_from_slice(&(bytes as u32).to_be_bytes());
    for word in words {
        buf.extend_from_slice(&word.0.to_le_bytes());
    }
    w.write_all(&buf)?;
    w.flush()
}

pub fn read_frame<R: Read>(r: &mut R) -> std::io::Result<Vec<RingElement>> {
    let mut len = [0u8; 4];
    r.read_exact(&mut len)?;
    let bytes = u32::from_be_bytes(len) as usize;
    if !bytes.is_multiple_of(8) || bytes > MAX_FRAME_BYTES {
        return Err(std::io::Error::new(
            std::io::ErrorKind::InvalidData,
            format!("bad frame length {bytes}"),
        ));
    }
    let mut payload = vec![0u8; bytes];
    r.read_exact(&mut payload)?;
    Ok(payload
        .chunks_exact(8)
        .map(|c| RingElement(u64::from_le_bytes(c.try_into().expect("chunk of 8"))))
        .collect())
}

pub struct TcpTransport {
    stream: TcpStream,
}

impl TcpTransport {
    pub fn from_stream(stream: TcpStream) -> Result<Self> {
        stream
            .set_nodelay(true)
            .map_err(|e| Error::Transport(e.to_string()))?;
        Ok(TcpTransport { stream })
    }

    pub fn connect(addr: &str) -> Result<Self> {
        let stream = TcpStream::connect(addr).map_err(|e| Error::Transport(e.to_string()))?;
        Self::from_stream(stream)
    }

    pub fn accept(listener: &TcpListener) -> Result<Self> {
        let (stream, _) = listener
            .accept()
            .map_err(|e| Error::Transport(e.to_string()))?;
        Self::from_stream(stream)
    }
}

/// A connected pair over the loopback interface.
pub fn tcp_pair() -> Result<(TcpTransport, TcpTransport)> {
    let listener = TcpListener::bind("127.0.0.1:0").map_err(|e| Error::Transport(e.to_string()))?;
    let addr = listener
        .local_addr()
        .map_err(|e| Error::Transport(e.to_string()))?;
    let client = TcpTransport::connect(&addr.to_string())?;
    let server = TcpTransport::accept(&listener)?;
    Ok((server, client))
}

impl Transport for TcpTransport {
    fn send(&mut self, words: &[RingElement]) -> Result<()> {
        write_frame(&mut self.stream, words).map_err(|e| Error::Transport(e.to_string()))
    }

    fn recv(&mut self) -> Result<Vec<RingElement>> {
        read_frame(&mut self.stream).map_err(|e| Error::Transport(e.to_string()))
    }
}
