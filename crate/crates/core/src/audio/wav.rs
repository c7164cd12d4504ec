//! RIFF/WAVE reader and writer for PCM 16-bit and IEEE float 32-bit data.

use thiserror::Error;

use super::AudioClip;

#[derive(Debug, Error)]
pub enum WavError {
    #[error("not a RIFF/WAVE file")]
    NotRiff,
    #[error("unsupported WAVE format code {0:#06x}; only PCM16 and float32 are handled")]
    UnsupportedFormat(u16),
    #[error("unsupported bit depth {bits} for format code {format}")]
    BadBits { format: u16, bits: u16 },
    #[error("unsupported channel count {0}; expected mono or stereo")]
    BadChannels(u16),
    #[error("byte {offset}: truncated chunk")]
    Truncated { offset: usize },
    #[error("missing `{0}` chunk")]
    MissingChunk(&'static str),
    #[error("sample rate must be positive")]
    ZeroSampleRate,
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], WavError> {
        if self.pos + n > self.bytes.len() {
            return Err(WavError::Truncated { offset: self.pos });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u32(&mut self) -> Result<u32, WavError> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]))
    }
}

struct Format {
    code: u16,
    channels: u16,
    sample_rate: u32,
    bits: u16,
}

/// Decodes a WAV byte stream into a mono clip in `[-1, 1]`.
/// Stereo input is averaged down to mono.
pub fn read_wav(bytes: &[u8]) -> Result<AudioClip, WavError> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(4)? != b"RIFF" {
        return Err(WavError::NotRiff);
    }
    let _riff_size = r.u32()?;
    if r.take(4)? != b"WAVE" {
        return Err(WavError::NotRiff);
    }

    let mut format: Option<Format> = None;
    let mut data: Option<&[u8]> = None;
    while r.pos + 8 <= bytes.len() {
        let tag: [u8; 4] = r.take(4)?.try_into().unwrap();
        let size = r.u32()? as usize;
        let body = r.take(size)?;
        match &tag {
            b"fmt " => {
                if body.len() < 16 {
                    return Err(WavError::Truncated { offset: r.pos });
                }
                let code = u16::from_le_bytes([body[0], body[1]]);
                let channels = u16::from_le_bytes([body[2], body[3]]);
                let sample_rate = u32::from_le_bytes([body[4], body[5], body[6], body[7]]);
                let bits = u16::from_le_bytes([body[14], body[15]]);
                format = Some(Format { code, channels, sample_rate, bits });
            }
            b"data" => {
                data = Some(body);
            }
            _ => {} // skip other chunks
        }
        if size % 2 == 1 {
            // Chunks are word-aligned.
            let _ = r.take(1);
        }
    }

    let format = format.ok_or(WavError::MissingChunk("fmt "))?;
    let data = data.ok_or(WavError::MissingChunk("data"))?;
    if format.sample_rate == 0 {
        return Err(WavError::ZeroSampleRate);
    }
    if !(1..=2).contains(&format.channels) {
        return Err(WavError::BadChannels(format.channels));
    }

    let channels = format.channels as usize;
    let interleaved: Vec<f32> = match (format.code, format.bits) {
        (1, 16) => data
            .chunks_exact(2)
            .map(|c| i16::from_le_bytes([c[0], c[1]]) as f32 / 32768.0)
            .collect(),
        (3, 32) => data
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]).clamp(-1.0, 1.0))
            .collect(),
        (1 | 3, bits) => return Err(WavError::BadBits { format: format.code, bits }),
        (code, _) => return Err(WavError::UnsupportedFormat(code)),
    };

    let samples: Vec<f32> = if channels == 1 {
        interleaved
    } else {
        interleaved.chunks_exact(2).map(|c| (c[0] + c[1]) / 2.0).collect()
    };
    Ok(AudioClip { samples, sample_rate: format.sample_rate })
}

/// Writes a mono clip as PCM 16-bit WAV.
pub fn write_wav(clip: &AudioClip) -> Vec<u8> {
    let data_len = clip.samples.len() * 2;
    let mut out = Vec::with_capacity(44 + data_len);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len as u32).to_le_bytes());
    out.extend_from_slice(b"WAVE");
    out.extend_from_slice(b"fmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // PCM
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&clip.sample_rate.to_le_bytes());
    out.extend_from_slice(&(clip.sample_rate * 2).to_le_bytes());
    out.extend_from_slice(&2u16.to_le_bytes());
    out.extend_from_slice(&16u16.to_le_bytes());
    out.extend_from_slice(b"data");
    out.extend_from_slice(&(data_len as u32).to_le_bytes());
    for s in &clip.samples {
        let v = (s.clamp(-1.0, 1.0) * 32767.0).round() as i16;
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}
