//! Wire framing: a 4-octet big-endian payload length followed by the
//! message's canonical JSON text.

use std::io::{self, Read, Write};

use serde::de::DeserializeOwned;
use serde::Serialize;
use thiserror::Error;

/// Largest accepted payload, in bytes.
pub const MAX_FRAME: usize = 1 << 20;

#[derive(Debug, Error)]
pub enum FrameError {
    #[error("frame payload of {0} bytes exceeds the 1 MiB limit")]
    FrameTooLarge(usize),
    #[error("truncated frame: {0}")]
    TruncatedFrame(&'static str),
    #[error("unknown message type: {0}")]
    UnknownType(String),
    #[error("malformed payload: {0}")]
    Malformed(String),
    #[error(transparent)]
    Io(#[from] io::Error),
}

/// Canonical serialization: fields in declaration order, no whitespace.
pub fn to_canonical<M: Serialize>(msg: &M) -> Result<String, FrameError> {
    serde_json::to_string(msg).map_err(|e| FrameError::Malformed(e.to_string()))
}

pub fn frame<M: Serialize>(msg: &M) -> Result<Vec<u8>, FrameError> {
    let body = to_canonical(msg)?;
    if body.len() > MAX_FRAME {
        return Err(FrameError::FrameTooLarge(body.len()));
    }
    let mut out = Vec::with_capacity(4 + body.len());
    out.extend_from_slice(&(body.len() as u32).to_be_bytes());
    out.extend_from_slice(body.as_bytes());
    Ok(out)
}

/// Decodes exactly one frame occupying all of `bytes`.
pub fn unframe<M: DeserializeOwned>(bytes: &[u8]) -> Result<M, FrameError> {
    if bytes.len() < 4 {
        return Err(FrameError::TruncatedFrame("missing length prefix"));
    }
    let len = u32::from_be_bytes(bytes[..4].try_into().expect("4 bytes")) as usize;
    if len > MAX_FRAME {
        return Err(FrameError::FrameTooLarge(len));
    }
    if len == 0 {
        return Err(FrameError::TruncatedFrame("empty payload"));
    }
    let body = &bytes[4..];
    if body.len() < len {
        return Err(FrameError::TruncatedFrame("payload shorter than prefix"));
    }
    if body.len() > len {
        return Err(FrameError::Malformed(format!(
            "{} trailing bytes after frame",
            body.len() - len
        )));
    }
    decode_payload(body)
}

fn decode_payload<M: DeserializeOwned>(body: &[u8]) -> Result<M, FrameError> {
    serde_json::from_slice(body).map_err(|e| {
        let text = e.to_string();
        if text.starts_with("unknown variant") {
            FrameError::UnknownType(text)
        } else {
            FrameError::Malformed(text)
        }
    })
}

pub fn write_frame<M: Serialize>(w: &mut impl Write, msg: &M) -> Result<(), FrameError> {
    w.write_all(&frame(msg)?)?;
    w.flush()?;
    Ok(())
}

/// Reads one frame from a stream. `Ok(None)` on a clean end of stream.
pub fn read_frame<M: DeserializeOwned>(r: &mut impl Read) -> Result<Option<M>, FrameError> {
    let mut len = [0u8; 4];
    match r.read_exact(&mut len) {
        Ok(()) => {}
        Err(e) if e.kind() == io::ErrorKind::UnexpectedEof => return Ok(None),
        Err(e) => return Err(e.into()),
    }
    let len = u32::from_be_bytes(len) as usize;
    if len > MAX_FRAME {
        return Err(FrameError::FrameTooLarge(len));
    }
    if len == 0 {
        return Err(FrameError::TruncatedFrame("empty payload"));
    }
    let mut body = vec![0u8; len];
    r.read_exact(&mut body).map_err(|e| match e.kind() {
        io::ErrorKind::UnexpectedEof => FrameError::TruncatedFrame("stream ended inside payload"),
        _ => e.into(),
    })?;
    decode_payload(&body).map(Some)
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde::Deserialize;

    #[derive(Debug, PartialEq, Serialize, Deserialize)]
    #[serde(tag = "type")]
    enum Probe {
        Ping { n: u64 },
        Pong,
    }

    #[test]
    fn round_trip_and_prefix() {
        let f = frame(&Probe::Ping { n: 5 }).unwrap();
        let body = br#"{"type":"Ping","n":5}"#;
        assert_eq!(&f[..4], &(body.len() as u32).to_be_bytes());
        assert_eq!(&f[4..], body);
        assert_eq!(unframe::<Probe>(&f).unwrap(), Probe::Ping { n: 5 });
    }

    #[test]
    fn error_paths() {
        assert!(matches!(unframe::<Probe>(&[0, 0, 0, 0]), Err(FrameError::TruncatedFrame(_))));
        assert!(matches!(unframe::<Probe>(&[0, 0]), Err(FrameError::TruncatedFrame(_))));
        assert!(matches!(unframe::<Probe>(&[0, 0, 0, 9, b'{']), Err(FrameError::TruncatedFrame(_))));
        let big = ((MAX_FRAME + 1) as u32).to_be_bytes();
        assert!(matches!(unframe::<Probe>(&big), Err(FrameError::FrameTooLarge(_))));
        let mut unknown = frame(&Probe::Pong).unwrap();
        let pos = unknown.iter().position(|&b| b == b'P').unwrap();
        unknown[pos] = b'Q';
        assert!(matches!(unframe::<Probe>(&unknown), Err(FrameError::UnknownType(_))));
    }

    #[test]
    fn oversized_message_is_refused() {
        #[derive(Serialize)]
        struct Blob {
            s: String,
        }
        let blob = Blob {
            s: "x".repeat(MAX_FRAME),
        };
        assert!(matches!(frame(&blob), Err(FrameError::FrameTooLarge(_))));
    }

    #[test]
    fn stream_reading() {
        let mut buf = frame(&Probe::Pong).unwrap();
        buf.extend(frame(&Probe::Ping { n: 1 }).unwrap());
        let mut r = io::Cursor::new(buf);
        assert_eq!(read_frame::<Probe>(&mut r).unwrap(), Some(Probe::Pong));
        assert_eq!(read_frame::<Probe>(&mut r).unwrap(), Some(Probe::Ping { n: 1 }));
        assert_eq!(read_frame::<Probe>(&mut r).unwrap(), None);
        let mut short = io::Cursor::new(vec![0, 0, 0, 5, b'{']);
        assert!(matches!(read_frame::<Probe>(&mut short), Err(FrameError::TruncatedFrame(_))));
    }
}
