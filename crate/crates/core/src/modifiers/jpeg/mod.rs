//! Baseline sequential JPEG encoder (JFIF, standard Huffman tables) with
//! quality-scaled Annex K quantization.

mod quant;
mod tables;

pub use quant::{quality_scale, scale_table, QuantTables};
pub use tables::{ANNEX_K_CHROMA, ANNEX_K_LUMA, ZIGZAG};

use serde::{Deserialize, Serialize};
use std::sync::OnceLock;

use crate::raster::Raster;
use crate::{Error, Result};
use tables::*;

/// Chroma sampling of three-channel output.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ChromaSubsampling {
    #[default]
    #[serde(rename = "420")]
    Yuv420,
    #[serde(rename = "444")]
    Yuv444,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct JpegOptions {
    pub quality: u8,
    pub subsampling: ChromaSubsampling,
}

impl JpegOptions {
    pub fn new(quality: u8) -> Self {
        JpegOptions {
            quality,
            subsampling: ChromaSubsampling::default(),
        }
    }
}

/// Encodes with 4:2:0 chroma sampling.
pub fn jpeg_encode(raster: &Raster, quality: u8) -> Result<Vec<u8>> {
    jpeg_encode_with(raster, &JpegOptions::new(quality))
}

pub fn jpeg_encode_with(raster: &Raster, opts: &JpegOptions) -> Result<Vec<u8>> {
    if raster.channels != 1 && raster.channels != 3 {
        return Err(Error::UnsupportedFormat(format!(
            "{} channels, expected 1 or 3",
            raster.channels
        )));
    }
    if raster.width == 0 || raster.height == 0 || raster.width > 65535 || raster.height > 65535 {
        return Err(Error::UnsupportedFormat(format!(
            "{}x{} is outside the baseline JPEG size range",
            raster.width, raster.height
        )));
    }
    let tables = QuantTables::for_quality(opts.quality);
    let components = build_components(raster, opts.subsampling);

    let mut out = Vec::with_capacity(raster.data.len() / 4 + 1024);
    out.extend_from_slice(&[0xff, 0xd8]);
    write_app0(&mut out);
    write_dqt(&mut out, 0, &tables.luma);
    if components.len() > 1 {
        write_dqt(&mut out, 1, &tables.chroma);
    }
    write_sof0(&mut out, raster.width as u16, raster.height as u16, &components);
    write_dht(&mut out, 0, 0, &DC_LUMA_BITS, &DC_VALUES);
    write_dht(&mut out, 1, 0, &AC_LUMA_BITS, &AC_LUMA_VALUES);
    if components.len() > 1 {
        write_dht(&mut out, 0, 1, &DC_CHROMA_BITS, &DC_VALUES);
        write_dht(&mut out, 1, 1, &AC_CHROMA_BITS, &AC_CHROMA_VALUES);
    }
    write_sos(&mut out, &components);
    encode_scan(&mut out, &components, &tables, raster.width, raster.height);
    out.extend_from_slice(&[0xff, 0xd9]);
    Ok(out)
}

/// One color plane at its sampled resolution, level-shifted to be centered
/// on zero.
struct Component {
    id: u8,
    h: usize,
    v: usize,
    table: u8,
    width: usize,
    height: usize,
    samples: Vec<f32>,
}

impl Component {
    /// Sample with edge replication outside the plane.
    #[inline]
    fn at(&self, x: usize, y: usize) -> f32 {
        let x = x.min(self.width - 1);
        let y = y.min(self.height - 1);
        self.samples[y * self.width + x]
    }
}

fn build_components(raster: &Raster, subsampling: ChromaSubsampling) -> Vec<Component> {
    let (w, h) = (raster.width as usize, raster.height as usize);
    if raster.channels == 1 {
        return vec![Component {
            id: 1,
            h: 1,
            v: 1,
            table: 0,
            width: w,
            height: h,
            samples: raster.data.iter().map(|&v| v as f32 - 128.0).collect(),
        }];
    }
    let n = w * h;
    let mut y = Vec::with_capacity(n);
    let mut cb = Vec::with_capacity(n);
    let mut cr = Vec::with_capacity(n);
    for p in raster.data.chunks_exact(3) {
        let (r, g, b) = (p[0] as f32, p[1] as f32, p[2] as f32);
        y.push(0.299 * r + 0.587 * g + 0.114 * b - 128.0);
        cb.push(-0.168_736 * r - 0.331_264 * g + 0.5 * b);
        cr.push(0.5 * r - 0.418_688 * g - 0.081_312 * b);
    }
    let luma = |samples| Component {
        id: 1,
        h: 1,
        v: 1,
        table: 0,
        width: w,
        height: h,
        samples,
    };
    match subsampling {
        ChromaSubsampling::Yuv444 => vec![
            luma(y),
            Component {
                id: 2,
                table: 1,
                ..luma(cb)
            },
            Component {
                id: 3,
                table: 1,
                ..luma(cr)
            },
        ],
        ChromaSubsampling::Yuv420 => {
            let (cw, ch) = (w.div_ceil(2), h.div_ceil(2));
            let down = |full: &[f32]| {
                let mut out = Vec::with_capacity(cw * ch);
                for cy in 0..ch {
                    for cx in 0..cw {
                        let (x0, y0) = (2 * cx, 2 * cy);
                        let (x1, y1) = ((x0 + 1).min(w - 1), (y0 + 1).min(h - 1));
                        let s = full[y0 * w + x0] + full[y0 * w + x1] + full[y1 * w + x0] + full[y1 * w + x1];
                        out.push(s * 0.25);
                    }
                }
                out
            };
            let chroma = |id, samples| Component {
                id,
                h: 1,
                v: 1,
                table: 1,
                width: cw,
                height: ch,
                samples,
            };
            let (cb, cr) = (down(&cb), down(&cr));
            vec![Component { h: 2, v: 2, ..luma(y) }, chroma(2, cb), chroma(3, cr)]
        }
    }
}

fn dct_basis() -> &'static [[f32; 8]; 8] {
    static BASIS: OnceLock<[[f32; 8]; 8]> = OnceLock::new();
    BASIS.get_or_init(|| {
        let mut c = [[0f32; 8]; 8];
        for (u, row) in c.iter_mut().enumerate() {
            let cu = if u == 0 { std::f64::consts::FRAC_1_SQRT_2 } else { 1.0 };
            for (x, v) in row.iter_mut().enumerate() {
                let angle = (2 * x + 1) as f64 * u as f64 * std::f64::consts::PI / 16.0;
                *v = (0.5 * cu * angle.cos()) as f32;
            }
        }
        c
    })
}

/// Separable orthonormal 8x8 DCT-II, natural order output.
fn fdct(block: &[f32; 64]) -> [f32; 64] {
    let c = dct_basis();
    let mut tmp = [0f32; 64];
    for y in 0..8 {
        for u in 0..8 {
            let mut s = 0.0;
            for x in 0..8 {
                s += c[u][x] * block[y * 8 + x];
            }
            tmp[y * 8 + u] = s;
        }
    }
    let mut out = [0f32; 64];
    for v in 0..8 {
        for u in 0..8 {
            let mut s = 0.0;
            for y in 0..8 {
                s += c[v][y] * tmp[y * 8 + u];
            }
            out[v * 8 + u] = s;
        }
    }
    out
}

#[derive(Clone, Copy, Default)]
struct Code {
    bits: u16,
    len: u8,
}

/// Encoder lookup from a BITS/HUFFVAL specification (Annex C).
fn build_codes(bits: &[u8; 16], values: &[u8]) -> [Code; 256] {
    let mut table = [Code::default(); 256];
    let mut code = 0u16;
    let mut k = 0;
    for (i, &count) in bits.iter().enumerate() {
        for _ in 0..count {
            table[values[k] as usize] = Code {
                bits: code,
                len: i as u8 + 1,
            };
            code += 1;
            k += 1;
        }
        code <<= 1;
    }
    table
}

struct BitWriter<'a> {
    out: &'a mut Vec<u8>,
    acc: u32,
    n: u8,
}

impl BitWriter<'_> {
    #[inline]
    fn put(&mut self, bits: u16, len: u8) {
        if len == 0 {
            return;
        }
        self.acc = (self.acc << len) | (bits as u32 & ((1u32 << len) - 1));
        self.n += len;
        while self.n >= 8 {
            let byte = (self.acc >> (self.n - 8)) as u8;
            self.out.push(byte);
            if byte == 0xff {
                self.out.push(0);
            }
            self.n -= 8;
        }
        self.acc &= (1u32 << self.n) - 1;
    }

    fn flush(&mut self) {
        if self.n > 0 {
            let pad = 8 - self.n;
            self.put((1u16 << pad) - 1, pad);
        }
    }
}

/// Magnitude category and the value's low-order bits.
#[inline]
fn category(v: i32) -> (u8, u16) {
    if v == 0 {
        return (0, 0);
    }
    let size = 32 - v.unsigned_abs().leading_zeros() as u8;
    let bits = if v < 0 { v - 1 } else { v };
    (size, (bits as u32 & ((1u32 << size) - 1)) as u16)
}

struct HuffSet {
    dc: [Code; 256],
    ac: [Code; 256],
}

fn encode_block(w: &mut BitWriter, coefs: &[i32; 64], prev_dc: &mut i32, h: &HuffSet) {
    let diff = coefs[0] - *prev_dc;
    *prev_dc = coefs[0];
    let (size, bits) = category(diff);
    let c = h.dc[size as usize];
    w.put(c.bits, c.len);
    w.put(bits, size);

    let mut run = 0u8;
    for &z in &ZIGZAG[1..] {
        let v = coefs[z];
        if v == 0 {
            run += 1;
            continue;
        }
        while run >= 16 {
            let zrl = h.ac[0xf0];
            w.put(zrl.bits, zrl.len);
            run -= 16;
        }
        let (size, bits) = category(v);
        let c = h.ac[((run << 4) | size) as usize];
        w.put(c.bits, c.len);
        w.put(bits, size);
        run = 0;
    }
    if run > 0 {
        let eob = h.ac[0x00];
        w.put(eob.bits, eob.len);
    }
}

fn quantize(comp: &Component, bx: usize, by: usize, table: &[u8; 64]) -> [i32; 64] {
    let mut block = [0f32; 64];
    for y in 0..8 {
        for x in 0..8 {
            block[y * 8 + x] = comp.at(bx * 8 + x, by * 8 + y);
        }
    }
    let f = fdct(&block);
    let mut q = [0i32; 64];
    for i in 0..64 {
        q[i] = (f[i] / table[i] as f32).round() as i32;
    }
    q
}

fn encode_scan(out: &mut Vec<u8>, comps: &[Component], tables: &QuantTables, width: u32, height: u32) {
    let luma = HuffSet {
        dc: build_codes(&DC_LUMA_BITS, &DC_VALUES),
        ac: build_codes(&AC_LUMA_BITS, &AC_LUMA_VALUES),
    };
    let chroma = HuffSet {
        dc: build_codes(&DC_CHROMA_BITS, &DC_VALUES),
        ac: build_codes(&AC_CHROMA_BITS, &AC_CHROMA_VALUES),
    };
    let hmax = comps.iter().map(|c| c.h).max().unwrap();
    let vmax = comps.iter().map(|c| c.v).max().unwrap();
    let (mcu_w, mcu_h) = (8 * hmax, 8 * vmax);
    // a single-component scan is non-interleaved: one block per MCU
    let (mcus_x, mcus_y) = if comps.len() == 1 {
        ((width as usize).div_ceil(8), (height as usize).div_ceil(8))
    } else {
        ((width as usize).div_ceil(mcu_w), (height as usize).div_ceil(mcu_h))
    };
    let mut writer = BitWriter { out, acc: 0, n: 0 };
    let mut prev = vec![0i32; comps.len()];
    for my in 0..mcus_y {
        for mx in 0..mcus_x {
            for (ci, comp) in comps.iter().enumerate() {
                let (qt, huff) = if comp.table == 0 {
                    (&tables.luma, &luma)
                } else {
                    (&tables.chroma, &chroma)
                };
                let (h, v) = if comps.len() == 1 { (1, 1) } else { (comp.h, comp.v) };
                for by in 0..v {
                    for bx in 0..h {
                        let coefs = quantize(comp, mx * h + bx, my * v + by, qt);
                        encode_block(&mut writer, &coefs, &mut prev[ci], huff);
                    }
                }
            }
        }
    }
    writer.flush();
}

fn segment(out: &mut Vec<u8>, marker: u8, payload: &[u8]) {
    out.extend_from_slice(&[0xff, marker]);
    out.extend_from_slice(&((payload.len() + 2) as u16).to_be_bytes());
    out.extend_from_slice(payload);
}

fn write_app0(out: &mut Vec<u8>) {
    segment(out, 0xe0, &[b'J', b'F', b'I', b'F', 0, 1, 1, 0, 0, 1, 0, 1, 0, 0]);
}

fn write_dqt(out: &mut Vec<u8>, id: u8, table: &[u8; 64]) {
    let mut p = Vec::with_capacity(65);
    p.push(id);
    p.extend(ZIGZAG.iter().map(|&i| table[i]));
    segment(out, 0xdb, &p);
}

fn write_sof0(out: &mut Vec<u8>, width: u16, height: u16, comps: &[Component]) {
    let mut p = vec![8];
    p.extend_from_slice(&height.to_be_bytes());
    p.extend_from_slice(&width.to_be_bytes());
    p.push(comps.len() as u8);
    for c in comps {
        p.extend_from_slice(&[c.id, ((c.h as u8) << 4) | c.v as u8, c.table]);
    }
    segment(out, 0xc0, &p);
}

fn write_dht(out: &mut Vec<u8>, class: u8, id: u8, bits: &[u8; 16], values: &[u8]) {
    let mut p = vec![(class << 4) | id];
    p.extend_from_slice(bits);
    p.extend_from_slice(values);
    segment(out, 0xc4, &p);
}

fn write_sos(out: &mut Vec<u8>, comps: &[Component]) {
    let mut p = vec![comps.len() as u8];
    for c in comps {
        p.extend_from_slice(&[c.id, (c.table << 4) | c.table]);
    }
    p.extend_from_slice(&[0, 63, 0]);
    segment(out, 0xda, &p);
}
