//! Length-prefixed binary frames between master and workers.
//!
//! ```text
//! frame   = u32 LE payload length | u8 type | payload
//! 0x01 Setup    u32 worker_id, u64 m, u64 n
//! 0x02 Vector   u64 n, n x f64
//! 0x03 Result   u64 encoded_index, f64 value
//! 0x04 Progress u64 count
//! 0x05 Done
//! 0x06 Error    u32 len, utf-8 text
//! ```
//!
//! The length counts payload bytes only, not the type byte. All integers and
//! floats are little-endian.

use std::io::{self, Read, Write};

use crate::error::{Error, Result};

const SETUP: u8 = 0x01;
const VECTOR: u8 = 0x02;
const RESULT: u8 = 0x03;
const PROGRESS: u8 = 0x04;
const DONE: u8 = 0x05;
const ERROR: u8 = 0x06;

/// Upper bound on accepted payloads (a 2^24-entry vector).
pub const MAX_PAYLOAD: usize = 8 + 8 * (1 << 24);

#[derive(Debug, Clone, PartialEq)]
pub enum WireMessage {
    /// Sent by a worker on connect: its id and the shape of the rows it holds.
    Setup {
        worker_id: u32,
        m: u64,
        n: u64,
    },
    Vector(Vec<f64>),
    Result {
        encoded_index: u64,
        value: f64,
    },
    Progress(u64),
    Done,
    Error(String),
}

impl WireMessage {
    pub fn type_byte(&self) -> u8 {
        match self {
            WireMessage::Setup { .. } => SETUP,
            WireMessage::Vector(_) => VECTOR,
            WireMessage::Result { .. } => RESULT,
            WireMessage::Progress(_) => PROGRESS,
            WireMessage::Done => DONE,
            WireMessage::Error(_) => ERROR,
        }
    }

    fn payload(&self) -> Vec<u8> {
        let mut buf = Vec::new();
        match self {
            WireMessage::Setup { worker_id, m, n } => {
                buf.extend_from_slice(&worker_id.to_le_bytes());
                buf.extend_from_slice(&m.to_le_bytes());
                buf.extend_from_slice(&n.to_le_bytes());
            }
            WireMessage::Vector(x) => {
                buf.reserve(8 + 8 * x.len());
                buf.extend_from_slice(&(x.len() as u64).to_le_bytes());
                for v in x {
                    buf.extend_from_slice(&v.to_le_bytes());
                }
            }
            WireMessage::Result {
                encoded_index,
                value,
            } => {
                buf.extend_from_slice(&encoded_index.to_le_bytes());
                buf.extend_from_slice(&value.to_le_bytes());
            }
            WireMessage::Progress(count) => buf.extend_from_slice(&count.to_le_bytes()),
            WireMessage::Done => {}
            WireMessage::Error(text) => {
                buf.extend_from_slice(&(text.len() as u32).to_le_bytes());
                buf.extend_from_slice(text.as_bytes());
            }
        }
        buf
    }

    /// Complete frame bytes.
    pub fn encode(&self) -> Vec<u8> {
        let payload = self.payload();
        let mut frame = Vec::with_capacity(5 + payload.len());
        frame.extend_from_slice(&(payload.len() as u32).to_le_bytes());
        frame.push(self.type_byte());
        frame.extend_from_slice(&payload);
        frame
    }

    /// Parses one complete frame; trailing bytes are an error.
    pub fn decode(frame: &[u8]) -> Result<Self> {
        if frame.len() < 5 {
            return Err(Error::Protocol(format!(
                "{}-byte frame is shorter than its header",
                frame.len()
            )));
        }
        let len = u32::from_le_bytes(frame[..4].try_into().unwrap()) as usize;
        if frame.len() != 5 + len {
            return Err(Error::Protocol(format!(
                "header announces {len} payload bytes, frame carries {}",
                frame.len() - 5
            )));
        }
        Self::from_payload(frame[4], &frame[5..])
    }

    fn from_payload(kind: u8, payload: &[u8]) -> Result<Self> {
        let mut cur = Cursor { buf: payload };
        let msg = match kind {
            SETUP => WireMessage::Setup {
                worker_id: cur.u32()?,
                m: cur.u64()?,
                n: cur.u64()?,
            },
            VECTOR => {
                let n = cur.u64()? as usize;
                if cur.buf.len() != n.saturating_mul(8) {
                    return Err(Error::Protocol(format!(
                        "vector of {n} entries in {} bytes",
                        cur.buf.len()
                    )));
                }
                WireMessage::Vector((0..n).map(|_| cur.f64()).collect::<Result<_>>()?)
            }
            RESULT => WireMessage::Result {
                encoded_index: cur.u64()?,
                value: cur.f64()?,
            },
            PROGRESS => WireMessage::Progress(cur.u64()?),
            DONE => WireMessage::Done,
            ERROR => {
                let n = cur.u32()? as usize;
                let bytes = cur.take(n)?;
                let text = String::from_utf8(bytes.to_vec())
                    .map_err(|e| Error::Protocol(format!("error text is not utf-8: {e}")))?;
                WireMessage::Error(text)
            }
            other => return Err(Error::Protocol(format!("unknown frame type 0x{other:02x}"))),
        };
        if !cur.buf.is_empty() {
            return Err(Error::Protocol(format!(
                "{} trailing payload bytes in frame type 0x{kind:02x}",
                cur.buf.len()
            )));
        }
        Ok(msg)
    }
}

struct Cursor<'a> {
    buf: &'a [u8],
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.buf.len() < n {
            return Err(Error::Protocol("truncated payload".into()));
        }
        let (head, tail) = self.buf.split_at(n);
        self.buf = tail;
        Ok(head)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64(&mut self) -> Result<f64> {
        Ok(f64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }
}

pub fn write_frame<W: Write>(w: &mut W, msg: &WireMessage) -> Result<()> {
    w.write_all(&msg.encode())?;
    w.flush()?;
    Ok(())
}

/// Reads one frame. `Ok(None)` on a clean end of stream before any header byte.
pub fn read_frame<R: Read>(r: &mut R) -> Result<Option<WireMessage>> {
    let mut header = [0u8; 5];
    let mut got = 0;
    while got < header.len() {
        match r.read(&mut header[got..]) {
            Ok(0) if got == 0 => return Ok(None),
            Ok(0) => return Err(Error::Protocol("stream ended inside a frame header".into())),
            Ok(n) => got += n,
            Err(e) if e.kind() == io::ErrorKind::Interrupted => {}
            Err(e) => return Err(e.into()),
        }
    }
    let len = u32::from_le_bytes(header[..4].try_into().unwrap()) as usize;
    if len > MAX_PAYLOAD {
        return Err(Error::Protocol(format!(
            "payload of {len} bytes exceeds limit"
        )));
    }
    let mut payload = vec![0u8; len];
    r.read_exact(&mut payload).map_err(|e| {
        if e.kind() == io::ErrorKind::UnexpectedEof {
            Error::Protocol("stream ended inside a frame payload".into())
        } else {
            e.into()
        }
    })?;
    WireMessage::from_payload(header[4], &payload).map(Some)
}
