//! Dense 4D spectroscopy arrays, axis metadata and the HC1 on-disk format.
//!
//! Axis order is always `(t2, x, a3, ω3)` where `a3` is the coherence time
//! `t1` for time-domain cubes and the pump frequency `ω1` for frequency-domain
//! cubes. Frequency-domain cubes may carry two interleaved channels holding the
//! real and imaginary parts of a half-spectrum.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::ops::Range;
use std::path::Path;

use crate::error::{bail, Error, Result};

/// One sampled acquisition axis.
#[derive(Debug, Clone, PartialEq)]
pub struct AxisGrid {
    pub name: String,
    pub unit: String,
    pub origin: f64,
    pub step: f64,
    pub count: usize,
}

impl AxisGrid {
    pub fn new(
        name: impl Into<String>,
        unit: impl Into<String>,
        origin: f64,
        step: f64,
        count: usize,
    ) -> Result<Self> {
        let axis = Self {
            name: name.into(),
            unit: unit.into(),
            origin,
            step,
            count,
        };
        axis.validate()?;
        Ok(axis)
    }

    /// Plain index axis (`origin = 0`, `step = 1`).
    pub fn index(name: impl Into<String>, count: usize) -> Result<Self> {
        Self::new(name, "index", 0.0, 1.0, count)
    }

    pub fn validate(&self) -> Result<()> {
        if self.count == 0 {
            bail!(Shape, "axis '{}' has zero length", self.name);
        }
        if !(self.step > 0.0 && self.step.is_finite()) {
            bail!(Shape, "axis '{}' step must be finite and > 0, got {}", self.name, self.step);
        }
        if !self.origin.is_finite() {
            bail!(Shape, "axis '{}' origin is not finite", self.name);
        }
        Ok(())
    }

    /// Physical coordinate of index `i`, computed as `origin + i * step`.
    #[inline]
    pub fn value(&self, i: usize) -> f64 {
        self.origin + i as f64 * self.step
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.value(i)).collect()
    }

    /// Coordinate of index `i` mapped onto `[0, 1]`.
    #[inline]
    pub fn normalized(&self, i: usize) -> f64 {
        crate::sampling::normalize_index(i, self.count)
    }
}

/// Meaning of the third axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Domain {
    /// `a3` is the coherence time `t1`.
    Time,
    /// `a3` is the pump frequency `ω1`.
    Frequency,
}

impl Domain {
    fn tag(self) -> u8 {
        match self {
            Domain::Time => 0,
            Domain::Frequency => 1,
        }
    }

    fn from_tag(tag: u8) -> Result<Self> {
        match tag {
            0 => Ok(Domain::Time),
            1 => Ok(Domain::Frequency),
            other => bail!(Format, "unknown domain tag {other}"),
        }
    }
}

/// Index ranges over the `(ω1, ω3)` plane of a frequency-domain cube.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpectralBox {
    pub w1: Range<usize>,
    pub w3: Range<usize>,
}

impl SpectralBox {
    pub fn len(&self) -> usize {
        self.w1.len() * self.w3.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn contains(&self, w1: usize, w3: usize) -> bool {
        self.w1.contains(&w1) && self.w3.contains(&w3)
    }
}

/// Dense real-valued 4D array, row-major over `(t2, x, a3, ω3, channel)`.
#[derive(Debug, Clone, PartialEq)]
pub struct HyperCube {
    axes: [AxisGrid; 4],
    domain: Domain,
    channels: usize,
    data: Vec<f64>,
}

impl HyperCube {
    /// Zero-initialized cube.
    pub fn zeros(axes: [AxisGrid; 4], domain: Domain, channels: usize) -> Result<Self> {
        Self::check_layout(&axes, domain, channels)?;
        let len = Self::volume(&axes) * channels;
        Ok(Self {
            axes,
            domain,
            channels,
            data: vec![0.0; len],
        })
    }

    pub fn from_data(
        axes: [AxisGrid; 4],
        domain: Domain,
        channels: usize,
        data: Vec<f64>,
    ) -> Result<Self> {
        Self::check_layout(&axes, domain, channels)?;
        let len = Self::volume(&axes) * channels;
        if data.len() != len {
            bail!(Shape, "data length {} does not match shape volume {len}", data.len());
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            bail!(Argument, "non-finite value at flat index {pos}");
        }
        Ok(Self {
            axes,
            domain,
            channels,
            data,
        })
    }

    fn check_layout(axes: &[AxisGrid; 4], domain: Domain, channels: usize) -> Result<()> {
        for axis in axes {
            axis.validate()?;
        }
        if !(channels == 1 || channels == 2) {
            bail!(Shape, "channels must be 1 or 2, got {channels}");
        }
        if domain == Domain::Time && channels != 1 {
            bail!(Shape, "time-domain cubes hold a single channel");
        }
        Ok(())
    }

    fn volume(axes: &[AxisGrid; 4]) -> usize {
        axes.iter().map(|a| a.count).product()
    }

    pub fn axes(&self) -> &[AxisGrid; 4] {
        &self.axes
    }

    pub fn t2_axis(&self) -> &AxisGrid {
        &self.axes[0]
    }

    pub fn x_axis(&self) -> &AxisGrid {
        &self.axes[1]
    }

    pub fn a3_axis(&self) -> &AxisGrid {
        &self.axes[2]
    }

    pub fn w3_axis(&self) -> &AxisGrid {
        &self.axes[3]
    }

    pub fn domain(&self) -> Domain {
        self.domain
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    /// Axis counts `(t2, x, a3, ω3)`.
    pub fn dims(&self) -> [usize; 4] {
        [
            self.axes[0].count,
            self.axes[1].count,
            self.axes[2].count,
            self.axes[3].count,
        ]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn offset(&self, t2: usize, x: usize, a3: usize, w3: usize, ch: usize) -> usize {
        let [_, nx, na, nw] = self.dims();
        (((t2 * nx + x) * na + a3) * nw + w3) * self.channels + ch
    }

    #[inline]
    pub fn get(&self, t2: usize, x: usize, a3: usize, w3: usize, ch: usize) -> f64 {
        self.data[self.offset(t2, x, a3, w3, ch)]
    }

    #[inline]
    pub fn set(&mut self, t2: usize, x: usize, a3: usize, w3: usize, ch: usize, value: f64) {
        let off = self.offset(t2, x, a3, w3, ch);
        self.data[off] = value;
    }

    /// Copy of one `a3` fiber for channel `ch`.
    pub fn fiber(&self, t2: usize, x: usize, w3: usize, ch: usize) -> Vec<f64> {
        (0..self.axes[2].count)
            .map(|a| self.get(t2, x, a, w3, ch))
            .collect()
    }

    pub fn set_fiber(&mut self, t2: usize, x: usize, w3: usize, ch: usize, values: &[f64]) {
        debug_assert_eq!(values.len(), self.axes[2].count);
        for (a, &v) in values.iter().enumerate() {
            self.set(t2, x, a, w3, ch, v);
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |m, v| m.max(v.abs()))
    }

    /// Same cube with every value multiplied by `factor`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        out.data.iter_mut().for_each(|v| *v *= factor);
        out
    }
}

/// Spatial-temporal profile `M(x, t2)`.
///
/// Stored column-wise: each `t2` column of `n_x` values is contiguous.
#[derive(Debug, Clone, PartialEq)]
pub struct Profile2D {
    n_x: usize,
    n_t2: usize,
    data: Vec<f64>,
}

impl Profile2D {
    pub fn zeros(n_x: usize, n_t2: usize) -> Self {
        Self {
            n_x,
            n_t2,
            data: vec![0.0; n_x * n_t2],
        }
    }

    /// Builds a profile from `t2`-major column data.
    pub fn from_columns(n_x: usize, n_t2: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n_x * n_t2 {
            bail!(Shape, "profile data length {} != {n_x} x {n_t2}", data.len());
        }
        Ok(Self { n_x, n_t2, data })
    }

    /// Logical shape `(x.count, t2.count)`.
    pub fn shape(&self) -> (usize, usize) {
        (self.n_x, self.n_t2)
    }

    pub fn n_x(&self) -> usize {
        self.n_x
    }

    pub fn n_t2(&self) -> usize {
        self.n_t2
    }

    #[inline]
    pub fn get(&self, x: usize, t2: usize) -> f64 {
        self.data[t2 * self.n_x + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, t2: usize, value: f64) {
        self.data[t2 * self.n_x + x] = value;
    }

    pub fn column(&self, t2: usize) -> &[f64] {
        &self.data[t2 * self.n_x..(t2 + 1) * self.n_x]
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    /// Writes `t2,x,value` rows using physical axis coordinates.
    pub fn write_csv<W: Write>(&self, t2_axis: &AxisGrid, x_axis: &AxisGrid, mut out: W) -> Result<()> {
        if t2_axis.count != self.n_t2 || x_axis.count != self.n_x {
            bail!(Shape, "profile shape does not match the supplied axes");
        }
        writeln!(out, "t2,x,value")?;
        for t in 0..self.n_t2 {
            for x in 0..self.n_x {
                writeln!(out, "{},{},{}", t2_axis.value(t), x_axis.value(x), self.get(x, t))?;
            }
        }
        Ok(())
    }
}

/// Mean of channel 0 inside `bx` for every `(x, t2)` pair.
pub fn reduce_box_mean(cube: &HyperCube, bx: &SpectralBox) -> Result<Profile2D> {
    if cube.domain() != Domain::Frequency {
        bail!(Argument, "box reduction needs a frequency-domain cube");
    }
    if bx.is_empty() {
        bail!(Argument, "empty bounding box");
    }
    let [nt, nx, nw1, nw3] = cube.dims();
    if bx.w1.end > nw1 || bx.w3.end > nw3 {
        bail!(Argument, "bounding box {bx:?} exceeds the ({nw1}, {nw3}) plane");
    }
    let norm = 1.0 / bx.len() as f64;
    let mut profile = Profile2D::zeros(nx, nt);
    for t in 0..nt {
        for x in 0..nx {
            let mut acc = 0.0;
            for w1 in bx.w1.clone() {
                for w3 in bx.w3.clone() {
                    acc += cube.get(t, x, w1, w3, 0);
                }
            }
            profile.set(x, t, acc * norm);
        }
    }
    Ok(profile)
}

const HC1_MAGIC: &[u8; 8] = b"HC1\0SPEC";
const HC1_VERSION: u32 = 1;

/// Writes `cube` in HC1 format.
pub fn save_hc1(cube: &HyperCube, path: impl AsRef<Path>) -> Result<()> {
    let file = File::create(path)?;
    let mut out = BufWriter::new(file);
    write_hc1(cube, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn load_hc1(path: impl AsRef<Path>) -> Result<HyperCube> {
    let file = File::open(path)?;
    read_hc1(&mut BufReader::new(file))
}

pub fn write_hc1<W: Write>(cube: &HyperCube, out: &mut W) -> Result<()> {
    out.write_all(HC1_MAGIC)?;
    out.write_all(&HC1_VERSION.to_le_bytes())?;
    out.write_all(&(cube.channels as u32).to_le_bytes())?;
    out.write_all(&[cube.domain.tag()])?;
    for axis in &cube.axes {
        write_str(out, &axis.name)?;
        write_str(out, &axis.unit)?;
        out.write_all(&axis.origin.to_le_bytes())?;
        out.write_all(&axis.step.to_le_bytes())?;
        out.write_all(&(axis.count as u64).to_le_bytes())?;
    }
    let mut payload = Vec::with_capacity(cube.data.len() * 4);
    for (i, &v) in cube.data.iter().enumerate() {
        let single = v as f32;
        if !single.is_finite() {
            bail!(Format, "value {v} at flat index {i} is not representable as a finite f32");
        }
        payload.extend_from_slice(&single.to_le_bytes());
    }
    out.write_all(&payload)?;
    Ok(())
}

pub fn read_hc1<R: Read>(input: &mut R) -> Result<HyperCube> {
    let mut magic = [0u8; 8];
    read_exact(input, &mut magic, "magic")?;
    if &magic != HC1_MAGIC {
        bail!(Format, "bad magic {:?}", String::from_utf8_lossy(&magic));
    }
    let version = read_u32(input)?;
    if version != HC1_VERSION {
        bail!(Format, "unsupported HC1 version {version}");
    }
    let channels = read_u32(input)? as usize;
    let mut tag = [0u8; 1];
    read_exact(input, &mut tag, "domain tag")?;
    let domain = Domain::from_tag(tag[0])?;

    let mut axes = Vec::with_capacity(4);
    for _ in 0..4 {
        let name = read_str(input)?;
        let unit = read_str(input)?;
        let origin = read_f64(input)?;
        let step = read_f64(input)?;
        let count = usize::try_from(read_u64(input)?)
            .map_err(|_| Error::Format("axis count overflows usize".into()))?;
        axes.push(
            AxisGrid::new(name, unit, origin, step, count)
                .map_err(|e| Error::Format(e.to_string()))?,
        );
    }
    let axes: [AxisGrid; 4] = axes.try_into().expect("four axes");
    HyperCube::check_layout(&axes, domain, channels).map_err(|e| Error::Format(e.to_string()))?;

    let len = axes
        .iter()
        .try_fold(channels, |acc, a| acc.checked_mul(a.count))
        .ok_or_else(|| Error::Format("cube volume overflows".into()))?;
    let mut payload = vec![0u8; len * 4];
    read_exact(input, &mut payload, "payload")?;
    let mut trailing = [0u8; 1];
    if input.read(&mut trailing)? != 0 {
        bail!(Format, "trailing bytes after payload");
    }
    let mut data = Vec::with_capacity(len);
    for (i, chunk) in payload.chunks_exact(4).enumerate() {
        let v = f32::from_le_bytes(chunk.try_into().expect("4 bytes"));
        if !v.is_finite() {
            bail!(Format, "non-finite value at flat index {i}");
        }
        data.push(f64::from(v));
    }
    Ok(HyperCube {
        axes,
        domain,
        channels,
        data,
    })
}

fn write_str<W: Write>(out: &mut W, s: &str) -> Result<()> {
    out.write_all(&(s.len() as u32).to_le_bytes())?;
    out.write_all(s.as_bytes())?;
    Ok(())
}

fn read_exact<R: Read>(input: &mut R, buf: &mut [u8], what: &str) -> Result<()> {
    input.read_exact(buf).map_err(|e| match e.kind() {
        std::io::ErrorKind::UnexpectedEof => Error::Format(format!("truncated {what}")),
        _ => Error::Io(e),
    })
}

fn read_u32<R: Read>(input: &mut R) -> Result<u32> {
    let mut b = [0u8; 4];
    read_exact(input, &mut b, "header")?;
    Ok(u32::from_le_bytes(b))
}

fn read_u64<R: Read>(input: &mut R) -> Result<u64> {
    let mut b = [0u8; 8];
    read_exact(input, &mut b, "header")?;
    Ok(u64::from_le_bytes(b))
}

fn read_f64<R: Read>(input: &mut R) -> Result<f64> {
    let mut b = [0u8; 8];
    read_exact(input, &mut b, "header")?;
    Ok(f64::from_le_bytes(b))
}

fn read_str<R: Read>(input: &mut R) -> Result<String> {
    let len = read_u32(input)? as usize;
    if len > 1 << 16 {
        bail!(Format, "axis label of {len} bytes is implausible");
    }
    let mut buf = vec![0u8; len];
    read_exact(input, &mut buf, "axis label")?;
    String::from_utf8(buf).map_err(|_| Error::Format("axis label is not UTF-8".into()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn axes(counts: [usize; 4]) -> [AxisGrid; 4] {
        [
            AxisGrid::new("t2", "ps", -6.0, 0.2, counts[0]).unwrap(),
            AxisGrid::new("x", "µm", -180.0, 24.0, counts[1]).unwrap(),
            AxisGrid::new("w1", "index", 0.0, 1.0, counts[2]).unwrap(),
            AxisGrid::new("w3", "cm⁻¹", 1906.6, 1.197, counts[3]).unwrap(),
        ]
    }

    fn roundtrip(cube: &HyperCube) -> HyperCube {
        let mut buf = Vec::new();
        write_hc1(cube, &mut buf).unwrap();
        read_hc1(&mut buf.as_slice()).unwrap()
    }

    #[test]
    fn zero_cube_shapes() {
        let cube = HyperCube::zeros(axes([2, 2, 2, 2]), Domain::Time, 1).unwrap();
        assert_eq!(cube.data().len(), 16);
        assert!(cube.data().iter().all(|&v| v == 0.0));

        // full-scale frequency cube: 91 t2 delays, 126 ω1 bins (251 t1 samples)
        let cube = HyperCube::zeros(axes([91, 16, 126, 128]), Domain::Frequency, 2).unwrap();
        assert_eq!(cube.data().len(), 91 * 16 * 126 * 128 * 2);
    }

    #[test]
    fn time_cube_rejects_two_channels() {
        let err = HyperCube::zeros(axes([2, 2, 2, 2]), Domain::Time, 2).unwrap_err();
        assert!(matches!(err, Error::Shape(_)));
        assert!(HyperCube::zeros(axes([2, 2, 2, 2]), Domain::Frequency, 3).is_err());
    }

    #[test]
    fn axis_values_are_exact() {
        let t1 = AxisGrid::new("t1", "fs", 0.0, 32.0, 251).unwrap();
        assert_eq!(t1.value(250), 8000.0);
        let t2 = AxisGrid::new("t2", "ps", -6.0, 0.2, 91).unwrap();
        for i in 0..91 {
            assert_eq!(t2.value(i), -6.0 + i as f64 * 0.2);
        }
        assert!(AxisGrid::new("bad", "fs", 0.0, 0.0, 3).is_err());
        assert!(AxisGrid::new("bad", "fs", 0.0, 1.0, 0).is_err());
    }

    #[test]
    fn hc1_roundtrip_constant() {
        let mut cube = HyperCube::zeros(axes([2, 2, 2, 2]), Domain::Frequency, 1).unwrap();
        cube.data_mut().iter_mut().for_each(|v| *v = 1.0);
        assert_eq!(roundtrip(&cube), cube);
    }

    #[test]
    fn hc1_header_layout() {
        let cube = HyperCube::zeros(axes([1, 1, 1, 1]), Domain::Frequency, 2).unwrap();
        let mut buf = Vec::new();
        write_hc1(&cube, &mut buf).unwrap();
        assert_eq!(&buf[..8], b"HC1\0SPEC");
        assert_eq!(u32::from_le_bytes(buf[8..12].try_into().unwrap()), 1);
        assert_eq!(u32::from_le_bytes(buf[12..16].try_into().unwrap()), 2);
        assert_eq!(buf[16], 1);
        // first axis record: name "t2"
        assert_eq!(u32::from_le_bytes(buf[17..21].try_into().unwrap()), 2);
        assert_eq!(&buf[21..23], b"t2");
        // payload is two f32 zeros at the end
        assert_eq!(&buf[buf.len() - 8..], &[0u8; 8]);
    }

    #[test]
    fn hc1_stores_nearest_f32() {
        let mut cube = HyperCube::zeros(axes([1, 1, 1, 1]), Domain::Time, 1).unwrap();
        cube.data_mut()[0] = std::f64::consts::PI;
        let back = roundtrip(&cube);
        assert_eq!(back.data()[0], f64::from(std::f32::consts::PI));
        assert_eq!(back.data()[0], f64::from(std::f64::consts::PI as f32));
    }

    #[test]
    fn hc1_rejects_bad_input() {
        let mut bad = b"XX".to_vec();
        bad.extend_from_slice(&[0u8; 64]);
        assert!(matches!(read_hc1(&mut bad.as_slice()), Err(Error::Format(_))));

        let cube = HyperCube::zeros(axes([2, 2, 2, 2]), Domain::Time, 1).unwrap();
        let mut buf = Vec::new();
        write_hc1(&cube, &mut buf).unwrap();
        let truncated = &buf[..buf.len() - 3];
        assert!(matches!(read_hc1(&mut &truncated[..]), Err(Error::Format(_))));

        // NaN in the payload
        let n = buf.len();
        buf[n - 4..].copy_from_slice(&f32::NAN.to_le_bytes());
        assert!(matches!(read_hc1(&mut buf.as_slice()), Err(Error::Format(_))));
    }

    #[test]
    fn hc1_rejects_unrepresentable_values() {
        let mut cube = HyperCube::zeros(axes([1, 1, 1, 1]), Domain::Time, 1).unwrap();
        cube.data_mut()[0] = 1e300;
        let mut buf = Vec::new();
        assert!(matches!(write_hc1(&cube, &mut buf), Err(Error::Format(_))));
    }

    #[test]
    fn box_mean_cases() {
        let mut cube = HyperCube::zeros(axes([2, 3, 4, 4]), Domain::Frequency, 2).unwrap();
        cube.data_mut().iter_mut().for_each(|v| *v = 0.75);
        let full = SpectralBox { w1: 0..4, w3: 0..4 };
        let m = reduce_box_mean(&cube, &full).unwrap();
        assert_eq!(m.shape(), (3, 2));
        assert!(m.data().iter().all(|&v| (v - 0.75).abs() < 1e-15));

        let mut cube = HyperCube::zeros(axes([2, 3, 4, 4]), Domain::Frequency, 1).unwrap();
        for (i, v) in cube.data_mut().iter_mut().enumerate() {
            *v = i as f64;
        }
        let single = SpectralBox { w1: 2..3, w3: 1..2 };
        let m = reduce_box_mean(&cube, &single).unwrap();
        for t in 0..2 {
            for x in 0..3 {
                assert_eq!(m.get(x, t), cube.get(t, x, 2, 1, 0));
            }
        }

        let mut cube = HyperCube::zeros(axes([1, 1, 2, 2]), Domain::Frequency, 1).unwrap();
        cube.data_mut().copy_from_slice(&[1.0, 2.0, 3.0, 4.0]);
        let m = reduce_box_mean(&cube, &SpectralBox { w1: 0..2, w3: 0..2 }).unwrap();
        assert_eq!(m.get(0, 0), 2.5);
    }

    #[test]
    fn box_mean_errors() {
        let cube = HyperCube::zeros(axes([1, 1, 2, 2]), Domain::Frequency, 1).unwrap();
        assert!(reduce_box_mean(&cube, &SpectralBox { w1: 1..1, w3: 0..2 }).is_err());
        assert!(reduce_box_mean(&cube, &SpectralBox { w1: 0..3, w3: 0..2 }).is_err());
        let time = HyperCube::zeros(axes([1, 1, 2, 2]), Domain::Time, 1).unwrap();
        assert!(reduce_box_mean(&time, &SpectralBox { w1: 0..1, w3: 0..1 }).is_err());
    }

    #[test]
    fn profile_csv_header() {
        let p = Profile2D::from_columns(2, 1, vec![1.0, 2.0]).unwrap();
        let t2 = AxisGrid::new("t2", "ps", 0.0, 0.5, 1).unwrap();
        let x = AxisGrid::new("x", "µm", 0.0, 24.0, 2).unwrap();
        let mut out = Vec::new();
        p.write_csv(&t2, &x, &mut out).unwrap();
        assert_eq!(String::from_utf8(out).unwrap(), "t2,x,value\n0,0,1\n0,24,2\n");
    }

    proptest! {
        #[test]
        fn hc1_roundtrip_f32_data(values in prop::collection::vec(-1e6f32..1e6, 24)) {
            let data: Vec<f64> = values.iter().map(|&v| f64::from(v)).collect();
            let cube = HyperCube::from_data(axes([2, 3, 2, 2]), Domain::Frequency, 1, data).unwrap();
            prop_assert_eq!(roundtrip(&cube), cube);
        }

        #[test]
        fn box_mean_is_linear(
            a in -3.0f64..3.0,
            b in -3.0f64..3.0,
            c1 in prop::collection::vec(-1.0f64..1.0, 48),
            c2 in prop::collection::vec(-1.0f64..1.0, 48),
        ) {
            let ax = axes([2, 2, 3, 4]);
            let cube1 = HyperCube::from_data(ax.clone(), Domain::Frequency, 1, c1.clone()).unwrap();
            let cube2 = HyperCube::from_data(ax.clone(), Domain::Frequency, 1, c2.clone()).unwrap();
            let mix: Vec<f64> = c1.iter().zip(&c2).map(|(p, q)| a * p + b * q).collect();
            let cube3 = HyperCube::from_data(ax, Domain::Frequency, 1, mix).unwrap();
            let bx = SpectralBox { w1: 1..3, w3: 0..3 };
            let m1 = reduce_box_mean(&cube1, &bx).unwrap();
            let m2 = reduce_box_mean(&cube2, &bx).unwrap();
            let m3 = reduce_box_mean(&cube3, &bx).unwrap();
            for (i, &v) in m3.data().iter().enumerate() {
                prop_assert!((v - (a * m1.data()[i] + b * m2.data()[i])).abs() < 1e-12);
            }
        }
    }
}
