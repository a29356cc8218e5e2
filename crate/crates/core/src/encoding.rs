//! Hadamard bias patterns, aperture encoding and decoding of channel data,
//! and the decoded-transmit subset used to emulate sparse acquisitions.

use rayon::prelude::*;

use crate::error::{invalid, Error, Result};

/// Sylvester Hadamard matrix with `±1` entries, stored row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct HadamardMatrix {
    order: usize,
    entries: Vec<i8>,
}

impl HadamardMatrix {
    pub fn order(&self) -> usize {
        self.order
    }

    pub fn get(&self, row: usize, col: usize) -> i8 {
        self.entries[row * self.order + col]
    }

    pub fn row(&self, row: usize) -> &[i8] {
        &self.entries[row * self.order..(row + 1) * self.order]
    }
}

/// Builds the Sylvester Hadamard matrix of the given order:
/// `H(2n) = [[H(n), H(n)], [H(n), -H(n)]]`.
pub fn hadamard(order: usize) -> Result<HadamardMatrix> {
    if order == 0 || !order.is_power_of_two() {
        return Err(Error::NotPowerOfTwo(order));
    }
    let mut entries = vec![1i8];
    let mut n = 1;
    while n < order {
        let mut next = vec![0i8; 4 * n * n];
        for r in 0..n {
            for c in 0..n {
                let v = entries[r * n + c];
                next[r * 2 * n + c] = v;
                next[r * 2 * n + c + n] = v;
                next[(r + n) * 2 * n + c] = v;
                next[(r + n) * 2 * n + c + n] = -v;
            }
        }
        entries = next;
        n *= 2;
    }
    Ok(HadamardMatrix { order, entries })
}

/// Per-column bias signs applied during Hadamard transmit `transmit_index`.
pub fn bias_pattern(h: &HadamardMatrix, transmit_index: usize) -> Result<Vec<i8>> {
    if transmit_index >= h.order {
        return Err(Error::IndexOutOfRange {
            what: "transmit",
            index: transmit_index,
            limit: h.order,
        });
    }
    Ok(h.row(transmit_index).to_vec())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DataState {
    Encoded,
    Decoded,
}

impl DataState {
    pub fn name(self) -> &'static str {
        match self {
            DataState::Encoded => "encoded",
            DataState::Decoded => "decoded",
        }
    }
}

/// Channel RF data indexed `[plane][transmit][channel][sample]`, sample fastest.
///
/// For decoded data, `transmit_columns[t]` is the array column that acts as
/// the effective single-column transmitter of transmit `t`. For encoded data
/// transmit `t` is Hadamard row `t` and the table is the identity.
#[derive(Debug, Clone, PartialEq)]
pub struct RfDataSet {
    planes: usize,
    transmits: usize,
    channels: usize,
    samples: usize,
    sampling_rate: f64,
    state: DataState,
    transmit_columns: Vec<usize>,
    data: Vec<f64>,
}

impl RfDataSet {
    pub fn zeros(
        planes: usize,
        transmits: usize,
        channels: usize,
        samples: usize,
        sampling_rate: f64,
        state: DataState,
    ) -> Result<Self> {
        Self::from_parts(
            planes,
            transmits,
            channels,
            samples,
            sampling_rate,
            state,
            (0..transmits).collect(),
            vec![0.0; planes * transmits * channels * samples],
        )
    }

    #[allow(clippy::too_many_arguments)]
    pub fn from_parts(
        planes: usize,
        transmits: usize,
        channels: usize,
        samples: usize,
        sampling_rate: f64,
        state: DataState,
        transmit_columns: Vec<usize>,
        data: Vec<f64>,
    ) -> Result<Self> {
        for (name, v) in [
            ("planes", planes),
            ("transmits", transmits),
            ("channels", channels),
            ("samples", samples),
        ] {
            if v == 0 {
                return Err(invalid(name, "dimension must be at least 1"));
            }
        }
        if !(sampling_rate > 0.0 && sampling_rate.is_finite()) {
            return Err(invalid("sampling_rate", "must be positive"));
        }
        if transmit_columns.len() != transmits {
            return Err(Error::DimensionMismatch(format!(
                "{} transmit columns for {} transmits",
                transmit_columns.len(),
                transmits
            )));
        }
        if data.len() != planes * transmits * channels * samples {
            return Err(Error::DimensionMismatch(format!(
                "payload has {} values, header implies {}",
                data.len(),
                planes * transmits * channels * samples
            )));
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(invalid("data", "contains non-finite samples"));
        }
        Ok(Self {
            planes,
            transmits,
            channels,
            samples,
            sampling_rate,
            state,
            transmit_columns,
            data,
        })
    }

    pub fn planes(&self) -> usize {
        self.planes
    }
    pub fn transmits(&self) -> usize {
        self.transmits
    }
    pub fn channels(&self) -> usize {
        self.channels
    }
    pub fn samples(&self) -> usize {
        self.samples
    }
    pub fn sampling_rate(&self) -> f64 {
        self.sampling_rate
    }
    pub fn state(&self) -> DataState {
        self.state
    }
    pub fn transmit_columns(&self) -> &[usize] {
        &self.transmit_columns
    }
    pub fn data(&self) -> &[f64] {
        &self.data
    }
    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    fn offset(&self, plane: usize, transmit: usize, channel: usize) -> usize {
        ((plane * self.transmits + transmit) * self.channels + channel) * self.samples
    }

    pub fn trace(&self, plane: usize, transmit: usize, channel: usize) -> &[f64] {
        let o = self.offset(plane, transmit, channel);
        &self.data[o..o + self.samples]
    }

    pub fn trace_mut(&mut self, plane: usize, transmit: usize, channel: usize) -> &mut [f64] {
        let o = self.offset(plane, transmit, channel);
        &mut self.data[o..o + self.samples]
    }

    /// All channels of one `(plane, transmit)` pair, channel-major.
    pub fn transmit_block(&self, plane: usize, transmit: usize) -> &[f64] {
        let o = self.offset(plane, transmit, 0);
        &self.data[o..o + self.channels * self.samples]
    }

    /// Keeps only the listed planes, in order.
    pub fn select_planes(&self, planes: &[usize]) -> Result<RfDataSet> {
        let block = self.transmits * self.channels * self.samples;
        let mut data = Vec::with_capacity(planes.len() * block);
        for &p in planes {
            if p >= self.planes {
                return Err(Error::IndexOutOfRange {
                    what: "plane",
                    index: p,
                    limit: self.planes,
                });
            }
            data.extend_from_slice(&self.data[p * block..(p + 1) * block]);
        }
        RfDataSet::from_parts(
            planes.len(),
            self.transmits,
            self.channels,
            self.samples,
            self.sampling_rate,
            self.state,
            self.transmit_columns.clone(),
            data,
        )
    }

    fn expect_state(&self, expected: DataState) -> Result<()> {
        if self.state != expected {
            return Err(Error::WrongState {
                expected: expected.name(),
                found: self.state.name(),
            });
        }
        Ok(())
    }

    pub(crate) fn require_decoded(&self) -> Result<()> {
        self.expect_state(DataState::Decoded)
    }
}

/// Applies `out[row] = scale * sum_t H[t][row] * input[t]` (or `H[row][t]`
/// when `transpose` is false) along the transmit axis.
fn mix_transmits(rf: &RfDataSet, h: &HadamardMatrix, transpose: bool, scale: f64) -> Vec<f64> {
    let n = h.order();
    let block = rf.channels * rf.samples;
    let mut out = vec![0.0; rf.data.len()];
    out.par_chunks_mut(n * block)
        .zip(rf.data.par_chunks(n * block))
        .for_each(|(dst, src)| {
            for row in 0..n {
                let d = &mut dst[row * block..(row + 1) * block];
                for t in 0..n {
                    let sign = if transpose {
                        h.get(t, row)
                    } else {
                        h.get(row, t)
                    };
                    let s = &src[t * block..(t + 1) * block];
                    if sign > 0 {
                        d.iter_mut().zip(s).for_each(|(a, b)| *a += b);
                    } else {
                        d.iter_mut().zip(s).for_each(|(a, b)| *a -= b);
                    }
                }
                if scale != 1.0 {
                    d.iter_mut().for_each(|a| *a *= scale);
                }
            }
        });
    out
}

/// Forms Hadamard-encoded data from per-column transmits:
/// `encoded[t] = sum_j H[t][j] * columns[j]`.
pub fn encode(columns: &RfDataSet, h: &HadamardMatrix) -> Result<RfDataSet> {
    columns.expect_state(DataState::Decoded)?;
    if columns.transmits != h.order() {
        return Err(Error::DimensionMismatch(format!(
            "{} column transmits for hadamard order {}",
            columns.transmits,
            h.order()
        )));
    }
    if columns
        .transmit_columns
        .iter()
        .enumerate()
        .any(|(i, &c)| i != c)
    {
        return Err(Error::DimensionMismatch(
            "encoding needs the full, ordered set of column transmits".into(),
        ));
    }
    let data = mix_transmits(columns, h, false, 1.0);
    RfDataSet::from_parts(
        columns.planes,
        columns.transmits,
        columns.channels,
        columns.samples,
        columns.sampling_rate,
        DataState::Encoded,
        (0..columns.transmits).collect(),
        data,
    )
}

/// Decodes Hadamard-encoded data into effective single-column transmits:
/// `decoded[j] = (1/order) * sum_t H[t][j] * encoded[t]`.
pub fn decode(rf: &RfDataSet, h: &HadamardMatrix) -> Result<RfDataSet> {
    rf.expect_state(DataState::Encoded)?;
    if rf.transmits != h.order() {
        return Err(Error::DimensionMismatch(format!(
            "{} encoded transmits for hadamard order {}",
            rf.transmits,
            h.order()
        )));
    }
    let data = mix_transmits(rf, h, true, 1.0 / h.order() as f64);
    RfDataSet::from_parts(
        rf.planes,
        rf.transmits,
        rf.channels,
        rf.samples,
        rf.sampling_rate,
        DataState::Decoded,
        (0..rf.transmits).collect(),
        data,
    )
}

/// Columns kept when `k` sparse transmits are emulated from `n` decoded
/// columns: `k - 1` columns, one at the centre of each of `k - 1` equal
/// slices of the aperture. Slice `i` is centred at index
/// `c_i = (i + 0.5) * n / (k - 1) - 0.5`, rounded to the nearest index with
/// ties going to the lower one.
pub fn uforces_columns(n: usize, k: usize) -> Result<Vec<usize>> {
    if k < 2 || k > n {
        return Err(invalid(
            "uforces_k",
            format!("must lie in [2, {n}], got {k}"),
        ));
    }
    let m = k - 1;
    Ok((0..m)
        .map(|i| {
            let centre = (i as f64 + 0.5) * n as f64 / m as f64 - 0.5;
            ((centre - 0.5).ceil().max(0.0) as usize).min(n - 1)
        })
        .collect())
}

/// Retains the decoded transmits a `k`-transmit sparse acquisition would
/// yield; see [`uforces_columns`].
pub fn select_uforces_subset(decoded: &RfDataSet, k: usize) -> Result<RfDataSet> {
    decoded.expect_state(DataState::Decoded)?;
    let wanted = uforces_columns(decoded.transmits, k)?;
    select_columns(decoded, &wanted)
}

/// Keeps the decoded transmits whose effective column is in `columns`.
pub fn select_columns(decoded: &RfDataSet, columns: &[usize]) -> Result<RfDataSet> {
    decoded.expect_state(DataState::Decoded)?;
    let indices: Vec<usize> = columns
        .iter()
        .map(|c| {
            decoded
                .transmit_columns
                .iter()
                .position(|x| x == c)
                .ok_or_else(|| {
                    Error::DimensionMismatch(format!(
                        "column {c} is not among the decoded transmits"
                    ))
                })
        })
        .collect::<Result<_>>()?;
    let block = decoded.channels * decoded.samples;
    let mut data = Vec::with_capacity(decoded.planes * indices.len() * block);
    for p in 0..decoded.planes {
        for &t in &indices {
            let o = decoded.offset(p, t, 0);
            data.extend_from_slice(&decoded.data[o..o + block]);
        }
    }
    RfDataSet::from_parts(
        decoded.planes,
        indices.len(),
        decoded.channels,
        decoded.samples,
        decoded.sampling_rate,
        DataState::Decoded,
        columns.to_vec(),
        data,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn gram_is_scaled_identity(h: &HadamardMatrix) -> bool {
        let n = h.order();
        (0..n).all(|i| {
            (0..n).all(|j| {
                let dot: i64 = (0..n)
                    .map(|k| h.get(i, k) as i64 * h.get(j, k) as i64)
                    .sum();
                dot == if i == j { n as i64 } else { 0 }
            })
        })
    }

    #[test]
    fn small_orders() {
        assert_eq!(hadamard(1).unwrap().row(0), &[1]);
        let h2 = hadamard(2).unwrap();
        assert_eq!(h2.row(0), &[1, 1]);
        assert_eq!(h2.row(1), &[1, -1]);
        let h8 = hadamard(8).unwrap();
        assert!(gram_is_scaled_identity(&h8));
        for i in 0..8 {
            assert_eq!(h8.get(0, i), 1);
            assert_eq!(h8.get(i, 0), 1);
        }
    }

    #[test]
    fn rejects_non_power_of_two() {
        for n in [0, 3, 6, 12, 100] {
            assert_eq!(hadamard(n), Err(Error::NotPowerOfTwo(n)));
        }
    }

    #[test]
    fn bias_patterns() {
        let h4 = hadamard(4).unwrap();
        assert_eq!(bias_pattern(&h4, 0).unwrap(), vec![1, 1, 1, 1]);
        assert_eq!(bias_pattern(&h4, 1).unwrap(), vec![1, -1, 1, -1]);
        assert_eq!(bias_pattern(&hadamard(2).unwrap(), 1).unwrap(), vec![1, -1]);
        assert!(bias_pattern(&h4, 4).is_err());
    }

    fn random_columns(
        rng: &mut ChaCha8Rng,
        planes: usize,
        n: usize,
        ch: usize,
        s: usize,
    ) -> RfDataSet {
        let data = (0..planes * n * ch * s)
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        RfDataSet::from_parts(
            planes,
            n,
            ch,
            s,
            1e6,
            DataState::Decoded,
            (0..n).collect(),
            data,
        )
        .unwrap()
    }

    #[test]
    fn two_by_two_decode() {
        let (a, b) = (0.75, -2.5);
        let rf = RfDataSet::from_parts(
            1,
            2,
            1,
            1,
            1.0,
            DataState::Encoded,
            vec![0, 1],
            vec![a + b, a - b],
        )
        .unwrap();
        let dec = decode(&rf, &hadamard(2).unwrap()).unwrap();
        assert_eq!(dec.data(), &[a, b]);
        assert_eq!(dec.state(), DataState::Decoded);
    }

    #[test]
    fn zero_in_zero_out() {
        let rf = RfDataSet::zeros(2, 4, 3, 5, 1.0, DataState::Encoded).unwrap();
        let dec = decode(&rf, &hadamard(4).unwrap()).unwrap();
        assert!(dec.data().iter().all(|&v| v == 0.0));
    }

    #[test]
    fn decode_checks_shape_and_state() {
        let rf = RfDataSet::zeros(1, 4, 1, 1, 1.0, DataState::Encoded).unwrap();
        assert!(matches!(
            decode(&rf, &hadamard(8).unwrap()),
            Err(Error::DimensionMismatch(_))
        ));
        let dec = RfDataSet::zeros(1, 4, 1, 1, 1.0, DataState::Decoded).unwrap();
        assert!(matches!(
            decode(&dec, &hadamard(4).unwrap()),
            Err(Error::WrongState { .. })
        ));
    }

    #[test]
    fn decode_matches_naive_product() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let h = hadamard(8).unwrap();
        let data: Vec<f64> = (0..2 * 8 * 3 * 7)
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        let rf = RfDataSet::from_parts(2, 8, 3, 7, 1.0, DataState::Encoded, (0..8).collect(), data)
            .unwrap();
        let dec = decode(&rf, &h).unwrap();
        for p in 0..2 {
            for c in 0..3 {
                for s in 0..7 {
                    for j in 0..8 {
                        let want: f64 = (0..8)
                            .map(|t| h.get(t, j) as f64 * rf.trace(p, t, c)[s])
                            .sum::<f64>()
                            / 8.0;
                        assert!((dec.trace(p, j, c)[s] - want).abs() < 1e-14);
                    }
                }
            }
        }
    }

    #[test]
    fn uforces_column_rule() {
        assert_eq!(uforces_columns(128, 2).unwrap(), vec![63]);
        let cols = uforces_columns(128, 16).unwrap();
        assert_eq!(cols.len(), 15);
        assert_eq!(
            cols,
            vec![4, 12, 21, 29, 38, 46, 55, 63, 72, 81, 89, 98, 106, 115, 123]
        );
        let full = uforces_columns(128, 128).unwrap();
        assert_eq!(full.len(), 127);
        assert!(full.windows(2).all(|w| w[0] < w[1]));
        assert!(uforces_columns(16, 1).is_err());
        assert!(uforces_columns(16, 17).is_err());
    }

    #[test]
    fn uforces_subset_keeps_traces() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let dec = random_columns(&mut rng, 2, 16, 2, 4);
        let sub = select_uforces_subset(&dec, 5).unwrap();
        assert_eq!(sub.transmits(), 4);
        let cols = uforces_columns(16, 5).unwrap();
        assert_eq!(sub.transmit_columns(), cols.as_slice());
        for p in 0..2 {
            for (t, &c) in cols.iter().enumerate() {
                assert_eq!(sub.trace(p, t, 1), dec.trace(p, c, 1));
            }
        }
        // selecting again from the subset is a no-op
        let again = select_columns(&sub, &cols).unwrap();
        assert_eq!(again, sub);
    }

    proptest! {
        #[test]
        fn encode_decode_round_trip(seed in 0u64..1000, log_n in 0u32..6) {
            let n = 1usize << log_n;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let columns = random_columns(&mut rng, 2, n, 3, 5);
            let h = hadamard(n).unwrap();
            let back = decode(&encode(&columns, &h).unwrap(), &h).unwrap();
            let max = columns.data().iter().fold(0.0f64, |m, v| m.max(v.abs()));
            for (a, b) in back.data().iter().zip(columns.data()) {
                prop_assert!((a - b).abs() <= 1e-12 * max);
            }
        }

        #[test]
        fn decode_is_linear(seed in 0u64..1000, alpha in -3.0f64..3.0, beta in -3.0f64..3.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let h = hadamard(8).unwrap();
            let mk = |rng: &mut ChaCha8Rng| {
                let d = (0..8 * 2 * 3).map(|_| rng.gen_range(-1.0..1.0)).collect();
                RfDataSet::from_parts(1, 8, 2, 3, 1.0, DataState::Encoded, (0..8).collect(), d).unwrap()
            };
            let a = mk(&mut rng);
            let b = mk(&mut rng);
            let combo: Vec<f64> = a.data().iter().zip(b.data()).map(|(x, y)| alpha * x + beta * y).collect();
            let ab = RfDataSet::from_parts(1, 8, 2, 3, 1.0, DataState::Encoded, (0..8).collect(), combo).unwrap();
            let (da, db, dab) = (decode(&a, &h).unwrap(), decode(&b, &h).unwrap(), decode(&ab, &h).unwrap());
            for i in 0..dab.data().len() {
                let want = alpha * da.data()[i] + beta * db.data()[i];
                prop_assert!((dab.data()[i] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn orthogonal_rows_preserve_column_amplitude() {
        // one unit impulse per column, each at its own sample
        let n = 16;
        let mut cols = RfDataSet::zeros(1, n, 1, n, 1.0, DataState::Decoded).unwrap();
        for j in 0..n {
            cols.trace_mut(0, j, 0)[j] = 1.0;
        }
        let h = hadamard(n).unwrap();
        let dec = decode(&encode(&cols, &h).unwrap(), &h).unwrap();
        for j in 0..n {
            assert!((dec.trace(0, j, 0)[j] - 1.0).abs() < 1e-15);
        }
    }
}
