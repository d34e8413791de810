//! `I2E1` event containers.
//!
//! All integers are little-endian. Both layouts share a 66-byte prefix:
//!
//! | offset | size | field                                            |
//! |--------|------|--------------------------------------------------|
//! | 0      | 4    | magic `I2E1`                                     |
//! | 4      | 2    | format version (1)                               |
//! | 6      | 1    | layout tag: 0 dense, 1 sparse                    |
//! | 7      | 1    | dense: channel count (2); sparse: coord width    |
//! | 8      | 2    | timesteps T                                      |
//! | 10     | 4    | height H                                         |
//! | 14     | 4    | width W                                          |
//! | 18     | 8    | presentation order (storage index per position)  |
//! | 26     | 8    | sensitivity s_th0 (f64)                          |
//! | 34     | 32   | source hash                                      |
//!
//! Dense adds a packing byte (1 = bits, LSB first; 0 = one byte per event)
//! and a zero byte, then `T * 2` planes of `H * W` events in `(t, p, y, x)`
//! order, each plane padded to a byte boundary.
//!
//! Sparse adds the event count N as u64, then N records `t:u8 p:u8 x y`
//! where x and y are `coord width` bytes each. Records are strictly
//! increasing in `(t, p, y, x)`. Coordinate width is 1 exactly when
//! `max(H, W) <= 256`.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::convert::{ConversionConfig, EventVolume, Polarity};
use crate::error::{Error, Result};
use crate::kernels::{TimestepOrder, DIRECTIONS};

pub const MAGIC: &[u8; 4] = b"I2E1";
pub const VERSION: u16 = 1;
pub const PREFIX_LEN: usize = 66;
pub const DENSE_HEADER_LEN: usize = PREFIX_LEN + 2;
pub const SPARSE_HEADER_LEN: usize = PREFIX_LEN + 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Layout {
    Dense = 0,
    Sparse = 1,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Packing {
    Bytes = 0,
    #[default]
    Bits = 1,
}

/// Conversion provenance stored alongside the events.
#[derive(Debug, Clone, PartialEq)]
pub struct FileMeta {
    pub order: TimestepOrder,
    pub s_th0: f64,
    pub source_hash: [u8; 32],
}

impl Default for FileMeta {
    fn default() -> Self {
        Self {
            order: TimestepOrder::default(),
            s_th0: ConversionConfig::default().s_th0,
            source_hash: [0; 32],
        }
    }
}

impl FileMeta {
    pub fn from_config(cfg: &ConversionConfig, source_hash: [u8; 32]) -> Self {
        Self {
            order: cfg.order.clone(),
            s_th0: cfg.s_th0,
            source_hash,
        }
    }
}

/// Bytes in one packed plane.
pub fn packed_plane_len(height: usize, width: usize) -> usize {
    (height * width).div_ceil(8)
}

/// Dense payload size: `T * 2 * ceil(H * W / 8)`.
pub fn dense_payload_len(timesteps: usize, height: usize, width: usize) -> usize {
    timesteps * 2 * packed_plane_len(height, width)
}

pub fn dense_file_len(timesteps: usize, height: usize, width: usize) -> usize {
    DENSE_HEADER_LEN + dense_payload_len(timesteps, height, width)
}

pub fn coord_width(height: usize, width: usize) -> usize {
    if height.max(width) <= 256 {
        1
    } else {
        2
    }
}

pub fn sparse_record_len(coord_width: usize) -> usize {
    2 + 2 * coord_width
}

pub fn sparse_file_len(events: usize, height: usize, width: usize) -> usize {
    SPARSE_HEADER_LEN + events * sparse_record_len(coord_width(height, width))
}

fn write_prefix(
    out: &mut Vec<u8>,
    layout: Layout,
    tag_byte: u8,
    vol: &EventVolume,
    meta: &FileMeta,
) -> Result<()> {
    let t = u16::try_from(vol.timesteps()).map_err(|_| Error::Overflow("timesteps"))?;
    let h = u32::try_from(vol.height()).map_err(|_| Error::Overflow("height"))?;
    let w = u32::try_from(vol.width()).map_err(|_| Error::Overflow("width"))?;
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(layout as u8);
    out.push(tag_byte);
    out.extend_from_slice(&t.to_le_bytes());
    out.extend_from_slice(&h.to_le_bytes());
    out.extend_from_slice(&w.to_le_bytes());
    out.extend_from_slice(&meta.order.permutation());
    out.extend_from_slice(&meta.s_th0.to_le_bytes());
    out.extend_from_slice(&meta.source_hash);
    Ok(())
}

struct Prefix {
    layout: Layout,
    tag_byte: u8,
    timesteps: usize,
    height: usize,
    width: usize,
    meta: FileMeta,
}

fn need(bytes: &[u8], n: usize) -> Result<()> {
    if bytes.len() < n {
        return Err(Error::Truncated {
            needed: n,
            available: bytes.len(),
        });
    }
    Ok(())
}

fn read_prefix(bytes: &[u8]) -> Result<Prefix> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(Error::BadMagic);
    }
    need(bytes, PREFIX_LEN)?;
    let u16_at = |i: usize| u16::from_le_bytes([bytes[i], bytes[i + 1]]);
    let u32_at = |i: usize| u32::from_le_bytes(bytes[i..i + 4].try_into().unwrap());
    let version = u16_at(4);
    if version != VERSION {
        return Err(Error::UnsupportedVersion(version));
    }
    let layout = match bytes[6] {
        0 => Layout::Dense,
        1 => Layout::Sparse,
        other => return Err(Error::LayoutTag(other)),
    };
    let timesteps = u16_at(8) as usize;
    let height = u32_at(10) as usize;
    let width = u32_at(14) as usize;
    if timesteps == 0 || height == 0 || width == 0 {
        return Err(Error::Header(format!(
            "empty shape T={timesteps} H={height} W={width}"
        )));
    }
    let perm: [u8; DIRECTIONS] = bytes[18..26].try_into().unwrap();
    let order = TimestepOrder::from_permutation(perm)
        .map_err(|e| Error::Header(format!("order field: {e}")))?;
    let s_th0 = f64::from_le_bytes(bytes[26..34].try_into().unwrap());
    let source_hash: [u8; 32] = bytes[34..66].try_into().unwrap();
    Ok(Prefix {
        layout,
        tag_byte: bytes[7],
        timesteps,
        height,
        width,
        meta: FileMeta {
            order,
            s_th0,
            source_hash,
        },
    })
}

/// Layout tag of an encoded file.
pub fn peek_layout(bytes: &[u8]) -> Result<Layout> {
    Ok(read_prefix(bytes)?.layout)
}

pub fn encode_dense(vol: &EventVolume, meta: &FileMeta) -> Result<Vec<u8>> {
    encode_dense_with(vol, meta, Packing::Bits)
}

pub fn encode_dense_with(vol: &EventVolume, meta: &FileMeta, packing: Packing) -> Result<Vec<u8>> {
    let plane = vol.height() * vol.width();
    let payload = match packing {
        Packing::Bits => dense_payload_len(vol.timesteps(), vol.height(), vol.width()),
        Packing::Bytes => vol.len(),
    };
    let mut out = Vec::with_capacity(DENSE_HEADER_LEN + payload);
    write_prefix(&mut out, Layout::Dense, 2, vol, meta)?;
    out.push(packing as u8);
    out.push(0);
    match packing {
        Packing::Bits => {
            for bits in vol.as_bits().chunks_exact(plane) {
                for byte_bits in bits.chunks(8) {
                    let byte = byte_bits
                        .iter()
                        .enumerate()
                        .fold(0u8, |acc, (i, &b)| acc | ((b as u8) << i));
                    out.push(byte);
                }
            }
        }
        Packing::Bytes => out.extend(vol.as_bits().iter().map(|&b| b as u8)),
    }
    Ok(out)
}

pub fn decode_dense(bytes: &[u8]) -> Result<(EventVolume, FileMeta)> {
    let prefix = read_prefix(bytes)?;
    if prefix.layout != Layout::Dense {
        return Err(Error::LayoutTag(prefix.layout as u8));
    }
    if prefix.tag_byte != 2 {
        return Err(Error::Header(format!(
            "dense channel count must be 2, got {}",
            prefix.tag_byte
        )));
    }
    need(bytes, DENSE_HEADER_LEN)?;
    let packing = match bytes[PREFIX_LEN] {
        0 => Packing::Bytes,
        1 => Packing::Bits,
        other => return Err(Error::Header(format!("unknown packing {other}"))),
    };
    let (t, h, w) = (prefix.timesteps, prefix.height, prefix.width);
    let plane = h * w;
    let payload_len = match packing {
        Packing::Bits => dense_payload_len(t, h, w),
        Packing::Bytes => t * 2 * plane,
    };
    let expected = DENSE_HEADER_LEN + payload_len;
    need(bytes, expected)?;
    if bytes.len() != expected {
        return Err(Error::Header(format!(
            "{} trailing bytes after payload",
            bytes.len() - expected
        )));
    }
    let payload = &bytes[DENSE_HEADER_LEN..];
    let mut bits = Vec::with_capacity(t * 2 * plane);
    match packing {
        Packing::Bits => {
            let stride = packed_plane_len(h, w);
            for plane_bytes in payload.chunks_exact(stride) {
                bits.extend((0..plane).map(|i| plane_bytes[i / 8] >> (i % 8) & 1 == 1));
                let tail = plane % 8;
                if tail != 0 && plane_bytes[stride - 1] >> tail != 0 {
                    return Err(Error::Header("non-zero padding bits".into()));
                }
            }
        }
        Packing::Bytes => {
            for &b in payload {
                match b {
                    0 => bits.push(false),
                    1 => bits.push(true),
                    _ => return Err(Error::Header(format!("event byte {b} is not 0 or 1"))),
                }
            }
        }
    }
    Ok((EventVolume::from_bits(t, h, w, bits)?, prefix.meta))
}

pub fn encode_sparse(vol: &EventVolume, meta: &FileMeta) -> Result<Vec<u8>> {
    if vol.timesteps() > 256 {
        return Err(Error::Overflow("timesteps for 1-byte sparse t"));
    }
    let cw = coord_width(vol.height(), vol.width());
    if vol.height().max(vol.width()) > 1 << 16 {
        return Err(Error::Overflow("coordinates for 2-byte sparse x/y"));
    }
    let n = vol.count();
    let mut out = Vec::with_capacity(SPARSE_HEADER_LEN + n * sparse_record_len(cw));
    write_prefix(&mut out, Layout::Sparse, cw as u8, vol, meta)?;
    out.extend_from_slice(&(n as u64).to_le_bytes());
    for (t, p, x, y) in vol.events() {
        out.push(t as u8);
        out.push(p.index() as u8);
        if cw == 1 {
            out.push(x as u8);
            out.push(y as u8);
        } else {
            out.extend_from_slice(&(x as u16).to_le_bytes());
            out.extend_from_slice(&(y as u16).to_le_bytes());
        }
    }
    Ok(out)
}

pub fn decode_sparse(bytes: &[u8]) -> Result<(EventVolume, FileMeta)> {
    let prefix = read_prefix(bytes)?;
    if prefix.layout != Layout::Sparse {
        return Err(Error::LayoutTag(prefix.layout as u8));
    }
    let (t_count, h, w) = (prefix.timesteps, prefix.height, prefix.width);
    let cw = prefix.tag_byte as usize;
    if cw != coord_width(h, w) {
        return Err(Error::Header(format!(
            "coordinate width {cw} does not match {h}x{w}"
        )));
    }
    need(bytes, SPARSE_HEADER_LEN)?;
    let n = u64::from_le_bytes(bytes[PREFIX_LEN..SPARSE_HEADER_LEN].try_into().unwrap());
    let rec = sparse_record_len(cw);
    let payload = &bytes[SPARSE_HEADER_LEN..];
    let claimed = usize::try_from(n)
        .ok()
        .and_then(|n| n.checked_mul(rec))
        .ok_or(Error::Overflow("event count"))?;
    if payload.len() != claimed {
        return Err(Error::Header(format!(
            "header claims {n} events ({claimed} bytes) but payload has {} bytes",
            payload.len()
        )));
    }
    let mut vol = EventVolume::zeros(t_count, h, w);
    let mut prev: Option<(usize, usize, usize, usize)> = None;
    for (i, r) in payload.chunks_exact(rec).enumerate() {
        let (t, p) = (r[0] as usize, r[1] as usize);
        let (x, y) = if cw == 1 {
            (r[2] as usize, r[3] as usize)
        } else {
            (
                u16::from_le_bytes([r[2], r[3]]) as usize,
                u16::from_le_bytes([r[4], r[5]]) as usize,
            )
        };
        let range_err = |field, value| Error::CoordinateRange {
            index: i,
            field,
            value,
        };
        if t >= t_count {
            return Err(range_err("t", t));
        }
        if p >= 2 {
            return Err(range_err("p", p));
        }
        if x >= w {
            return Err(range_err("x", x));
        }
        if y >= h {
            return Err(range_err("y", y));
        }
        let key = (t, p, y, x);
        if prev.is_some_and(|k| k >= key) {
            return Err(Error::Unsorted(i));
        }
        prev = Some(key);
        let polarity = if p == 0 { Polarity::On } else { Polarity::Off };
        vol.set(t, polarity, x, y, true);
    }
    Ok((vol, prefix.meta))
}

/// Decodes either layout.
pub fn decode(bytes: &[u8]) -> Result<(EventVolume, FileMeta)> {
    match peek_layout(bytes)? {
        Layout::Dense => decode_dense(bytes),
        Layout::Sparse => decode_sparse(bytes),
    }
}

pub fn dense_to_sparse(dense: &[u8]) -> Result<Vec<u8>> {
    let (vol, meta) = decode_dense(dense)?;
    encode_sparse(&vol, &meta)
}

pub fn sparse_to_dense(sparse: &[u8]) -> Result<Vec<u8>> {
    let (vol, meta) = decode_sparse(sparse)?;
    encode_dense(&vol, &meta)
}

/// `1 - encoded / original`.
pub fn compression_ratio(original_bytes: f64, encoded_bytes: f64) -> f64 {
    1.0 - encoded_bytes / original_bytes
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompressionReport {
    pub original_bytes: f64,
    pub dense_bytes: f64,
    pub sparse_bytes: f64,
    pub dense_ratio: f64,
    pub sparse_ratio: f64,
}

pub fn compression_report(
    original_bytes: f64,
    dense_bytes: f64,
    sparse_bytes: f64,
) -> Result<CompressionReport> {
    if original_bytes.is_nan() || original_bytes <= 0.0 {
        return Err(Error::InvalidConfig(
            "original size must be positive".into(),
        ));
    }
    Ok(CompressionReport {
        original_bytes,
        dense_bytes,
        sparse_bytes,
        dense_ratio: compression_ratio(original_bytes, dense_bytes),
        sparse_ratio: compression_ratio(original_bytes, sparse_bytes),
    })
}

fn npy(descr: &str, shape: &[usize], data: &[u8]) -> Vec<u8> {
    let dims = match shape {
        [n] => format!("({n},)"),
        _ => format!(
            "({})",
            shape.iter().map(|d| d.to_string()).collect::<Vec<_>>().join(", ")
        ),
    };
    let mut header = format!("{{'descr': '{descr}', 'fortran_order': False, 'shape': {dims}, }}");
    // magic(6) + version(2) + len(2) + header, newline-terminated, 64-aligned
    let total = (10 + header.len() + 1).div_ceil(64) * 64;
    while 10 + header.len() + 1 < total {
        header.push(' ');
    }
    header.push('\n');
    let mut out = Vec::with_capacity(total + data.len());
    out.extend_from_slice(b"\x93NUMPY\x01\x00");
    out.extend_from_slice(&(header.len() as u16).to_le_bytes());
    out.extend_from_slice(header.as_bytes());
    out.extend_from_slice(data);
    out
}

/// Dense volume as a NumPy `.npy` boolean array of shape `(T, 2, H, W)`.
pub fn write_npy_dense(vol: &EventVolume, mut w: impl Write) -> std::io::Result<()> {
    let data: Vec<u8> = vol.as_bits().iter().map(|&b| b as u8).collect();
    w.write_all(&npy("|b1", &vol.shape(), &data))
}

/// Event list as a NumPy `(N, 4)` matrix of `(t, p, x, y)`, `uint8` when
/// coordinates fit in a byte, else `uint16`.
pub fn write_npy_events(vol: &EventVolume, mut w: impl Write) -> std::io::Result<()> {
    let n = vol.count();
    let bytes = if coord_width(vol.height(), vol.width()) == 1 && vol.timesteps() <= 256 {
        let data: Vec<u8> = vol
            .events()
            .flat_map(|(t, p, x, y)| [t as u8, p.index() as u8, x as u8, y as u8])
            .collect();
        npy("|u1", &[n, 4], &data)
    } else {
        let data: Vec<u8> = vol
            .events()
            .flat_map(|(t, p, x, y)| [t as u16, p.index() as u16, x as u16, y as u16])
            .flat_map(u16::to_le_bytes)
            .collect();
        npy("<u2", &[n, 4], &data)
    };
    w.write_all(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample_volume(t: usize, h: usize, w: usize, every: usize) -> EventVolume {
        let bits = (0..t * 2 * h * w)
            .map(|i| {
                let pixel = i % (h * w);
                let ch = i / (h * w);
                (pixel + ch * 3) % every == 0 && ch % 2 == (pixel / every) % 2
            })
            .collect();
        EventVolume::from_bits(t, h, w, bits).unwrap()
    }

    #[test]
    fn dense_payload_formula() {
        assert_eq!(dense_payload_len(8, 224, 224), 100_352);
        let vol = EventVolume::zeros(8, 224, 224);
        let bytes = encode_dense(&vol, &FileMeta::default()).unwrap();
        assert_eq!(bytes.len(), DENSE_HEADER_LEN + 100_352);
        assert!(bytes[DENSE_HEADER_LEN..].iter().all(|&b| b == 0));
        assert_eq!(decode_dense(&bytes).unwrap().0, vol);
    }

    #[test]
    fn dense_round_trip_with_odd_plane() {
        let vol = sample_volume(3, 5, 7, 4);
        let meta = FileMeta {
            s_th0: 0.07,
            source_hash: [9; 32],
            order: TimestepOrder::parse("bga").unwrap(),
        };
        for packing in [Packing::Bits, Packing::Bytes] {
            let bytes = encode_dense_with(&vol, &meta, packing).unwrap();
            let (back, m) = decode_dense(&bytes).unwrap();
            assert_eq!(back, vol);
            assert_eq!(m, meta);
        }
    }

    #[test]
    fn header_layout_is_fixed() {
        let vol = EventVolume::zeros(8, 4, 3);
        let b = encode_dense(&vol, &FileMeta::default()).unwrap();
        assert_eq!(&b[0..4], b"I2E1");
        assert_eq!(&b[4..6], &[1, 0]);
        assert_eq!(b[6], 0);
        assert_eq!(b[7], 2);
        assert_eq!(&b[8..10], &[8, 0]);
        assert_eq!(&b[10..14], &[4, 0, 0, 0]);
        assert_eq!(&b[14..18], &[3, 0, 0, 0]);
        assert_eq!(&b[18..26], &[4, 5, 6, 7, 0, 1, 2, 3]);
        assert_eq!(&b[26..34], &0.12f64.to_le_bytes());
        assert_eq!(b[66], 1);
        assert_eq!(b[67], 0);
    }

    #[test]
    fn singleton_sparse_record() {
        let mut vol = EventVolume::zeros(8, 16, 16);
        vol.set(3, Polarity::On, 5, 7, true);
        let bytes = encode_sparse(&vol, &FileMeta::default()).unwrap();
        assert_eq!(bytes.len(), SPARSE_HEADER_LEN + 4);
        assert_eq!(&bytes[PREFIX_LEN..SPARSE_HEADER_LEN], &1u64.to_le_bytes());
        assert_eq!(&bytes[SPARSE_HEADER_LEN..], &[3, 0, 5, 7]);
        assert_eq!(decode_sparse(&bytes).unwrap().0, vol);
    }

    #[test]
    fn coordinate_width_rule() {
        assert_eq!(coord_width(256, 256), 1);
        assert_eq!(coord_width(257, 10), 2);
        let mut vol = EventVolume::zeros(1, 300, 300);
        vol.set(0, Polarity::Off, 299, 258, true);
        let bytes = encode_sparse(&vol, &FileMeta::default()).unwrap();
        assert_eq!(bytes[7], 2);
        assert_eq!(bytes.len(), sparse_file_len(1, 300, 300));
        assert_eq!(&bytes[SPARSE_HEADER_LEN..], &[0, 1, 43, 1, 2, 1]);
        assert_eq!(decode_sparse(&bytes).unwrap().0, vol);
    }

    #[test]
    fn cross_conversion_of_empty_volume() {
        let vol = EventVolume::zeros(8, 10, 12);
        let dense = encode_dense(&vol, &FileMeta::default()).unwrap();
        let sparse = dense_to_sparse(&dense).unwrap();
        assert_eq!(sparse.len(), SPARSE_HEADER_LEN);
        assert_eq!(sparse_to_dense(&sparse).unwrap(), dense);
    }

    #[test]
    fn decode_errors() {
        let vol = sample_volume(2, 4, 4, 3);
        let meta = FileMeta::default();
        let dense = encode_dense(&vol, &meta).unwrap();
        let sparse = encode_sparse(&vol, &meta).unwrap();

        let mut bad = dense.clone();
        bad[0] = b'X';
        assert_eq!(decode_dense(&bad), Err(Error::BadMagic));
        assert!(matches!(
            decode_dense(&dense[..dense.len() - 1]),
            Err(Error::Truncated { .. })
        ));
        assert!(matches!(decode_dense(&dense[..40]), Err(Error::Truncated { .. })));
        let mut longer = dense.clone();
        longer.push(0);
        assert!(matches!(decode_dense(&longer), Err(Error::Header(_))));
        let mut version = dense.clone();
        version[4] = 2;
        assert_eq!(decode_dense(&version), Err(Error::UnsupportedVersion(2)));
        let mut order = dense.clone();
        order[18] = 1;
        assert!(matches!(decode_dense(&order), Err(Error::Header(_))));
        assert!(matches!(decode_dense(&sparse), Err(Error::LayoutTag(1))));

        // count claims more records than present
        let mut count = sparse.clone();
        let n = vol.count() as u64 + 1;
        count[PREFIX_LEN..SPARSE_HEADER_LEN].copy_from_slice(&n.to_le_bytes());
        assert!(matches!(decode_sparse(&count), Err(Error::Header(_))));

        // swap first two records
        let mut unsorted = sparse.clone();
        let (a, b) = (SPARSE_HEADER_LEN, SPARSE_HEADER_LEN + 4);
        let first: Vec<u8> = unsorted[a..b].to_vec();
        unsorted.copy_within(b..b + 4, a);
        unsorted[b..b + 4].copy_from_slice(&first);
        assert_eq!(decode_sparse(&unsorted), Err(Error::Unsorted(1)));

        // duplicate record
        let mut dup = sparse.clone();
        dup.copy_within(a..b, b);
        assert_eq!(decode_sparse(&dup), Err(Error::Unsorted(1)));

        let mut range = sparse.clone();
        range[a + 2] = 4;
        assert!(matches!(
            decode_sparse(&range),
            Err(Error::CoordinateRange { field: "x", .. }) | Err(Error::Unsorted(_))
        ));
        let mut pol = sparse.clone();
        pol[a + 1] = 2;
        assert!(matches!(
            decode_sparse(&pol),
            Err(Error::CoordinateRange { field: "p", .. })
        ));
    }

    #[test]
    fn nonzero_padding_bits_rejected() {
        let vol = EventVolume::zeros(1, 3, 3);
        let mut bytes = encode_dense(&vol, &FileMeta::default()).unwrap();
        let last = bytes.len() - 1;
        bytes[last] = 0x80;
        assert!(matches!(decode_dense(&bytes), Err(Error::Header(_))));
    }

    #[test]
    fn gigabyte_compression_ratios() {
        let gb = 1e9;
        let pct = |r: f64| (r * 10_000.0).round() / 100.0;
        let r = compression_report(146.0 * gb, 47.0 * gb, 44.0 * gb).unwrap();
        assert_eq!(pct(r.dense_ratio), 67.81);
        assert_eq!(pct(r.sparse_ratio), 69.86);
        assert_eq!(pct(compression_ratio(146.0 * gb, 47.0 * gb / 4.0)), 91.95);
        assert!(compression_report(0.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn npy_headers_are_aligned() {
        let vol = sample_volume(2, 3, 5, 2);
        let mut dense = Vec::new();
        write_npy_dense(&vol, &mut dense).unwrap();
        let hlen = u16::from_le_bytes([dense[8], dense[9]]) as usize;
        assert_eq!((10 + hlen) % 64, 0);
        assert_eq!(dense.len(), 10 + hlen + vol.len());
        let header = std::str::from_utf8(&dense[10..10 + hlen]).unwrap();
        assert!(header.contains("'shape': (2, 2, 3, 5)"));

        let mut events = Vec::new();
        write_npy_events(&vol, &mut events).unwrap();
        let hlen = u16::from_le_bytes([events[8], events[9]]) as usize;
        assert_eq!(events.len(), 10 + hlen + 4 * vol.count());
    }
}
