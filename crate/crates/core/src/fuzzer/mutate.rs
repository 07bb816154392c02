//! Havoc-style byte mutations.

use rand::Rng;

const INTERESTING_8: [i8; 9] = [-128, -1, 0, 1, 16, 32, 64, 100, 127];
const INTERESTING_16: [i16; 10] = [-32768, -129, 128, 255, 256, 512, 1000, 1024, 4096, 32767];
const INTERESTING_32: [i32; 8] = [
    i32::MIN,
    -100_663_046,
    -32769,
    32768,
    65535,
    65536,
    100_663_045,
    i32::MAX,
];
const ARITH_MAX: i8 = 35;
const MAX_BLOCK: usize = 32;

/// One concrete edit. Positions are resolved when the mutation is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mutation {
    FlipBit { bit: usize },
    SetByte { pos: usize, value: u8 },
    /// Wrapping add of a delta in `-35..=35` (never 0).
    Arith { pos: usize, delta: i8 },
    Interesting16 { pos: usize, bytes: [u8; 2] },
    Interesting32 { pos: usize, bytes: [u8; 4] },
    DeleteBlock { start: usize, len: usize },
    DuplicateBlock { start: usize, len: usize, insert_at: usize },
    /// Only drawn for empty inputs, which no other operator can change.
    InsertByte { value: u8 },
}

impl Mutation {
    /// Draws a mutation applicable to an input of `len` bytes that keeps the
    /// result within `max_len`.
    pub fn random<R: Rng + ?Sized>(rng: &mut R, len: usize, max_len: usize) -> Mutation {
        if len == 0 {
            return Mutation::InsertByte { value: rng.gen() };
        }
        let can_grow = len < max_len;
        loop {
            match rng.gen_range(0..7u8) {
                0 => return Mutation::FlipBit { bit: rng.gen_range(0..len * 8) },
                1 => return Mutation::SetByte { pos: rng.gen_range(0..len), value: rng.gen() },
                2 => {
                    let magnitude = rng.gen_range(1..=ARITH_MAX);
                    let delta = if rng.gen() { magnitude } else { -magnitude };
                    return Mutation::Arith { pos: rng.gen_range(0..len), delta };
                }
                3 if len >= 2 => {
                    let value = if rng.gen_bool(0.5) {
                        i16::from(INTERESTING_8[rng.gen_range(0..INTERESTING_8.len())])
                    } else {
                        INTERESTING_16[rng.gen_range(0..INTERESTING_16.len())]
                    };
                    let bytes = if rng.gen() { value.to_le_bytes() } else { value.to_be_bytes() };
                    return Mutation::Interesting16 { pos: rng.gen_range(0..=len - 2), bytes };
                }
                4 if len >= 4 => {
                    let value = match rng.gen_range(0..3u8) {
                        0 => i32::from(INTERESTING_8[rng.gen_range(0..INTERESTING_8.len())]),
                        1 => i32::from(INTERESTING_16[rng.gen_range(0..INTERESTING_16.len())]),
                        _ => INTERESTING_32[rng.gen_range(0..INTERESTING_32.len())],
                    };
                    let bytes = if rng.gen() { value.to_le_bytes() } else { value.to_be_bytes() };
                    return Mutation::Interesting32 { pos: rng.gen_range(0..=len - 4), bytes };
                }
                5 if len >= 2 => {
                    let block = rng.gen_range(1..=(len - 1).min(MAX_BLOCK));
                    return Mutation::DeleteBlock { start: rng.gen_range(0..=len - block), len: block };
                }
                6 if can_grow => {
                    let block = rng.gen_range(1..=len.min(max_len - len).min(MAX_BLOCK));
                    return Mutation::DuplicateBlock {
                        start: rng.gen_range(0..=len - block),
                        len: block,
                        insert_at: rng.gen_range(0..=len),
                    };
                }
                _ => continue,
            }
        }
    }

    /// Applies the edit in place. Out-of-range edits are clipped; a block
    /// delete never empties a non-empty buffer.
    pub fn apply(&self, buf: &mut Vec<u8>) {
        let len = buf.len();
        match *self {
            Mutation::FlipBit { bit } if bit / 8 < len => buf[bit / 8] ^= 1 << (bit % 8),
            Mutation::SetByte { pos, value } if pos < len => buf[pos] = value,
            Mutation::Arith { pos, delta } if pos < len => buf[pos] = buf[pos].wrapping_add_signed(delta),
            Mutation::Interesting16 { pos, bytes } if pos + 2 <= len => buf[pos..pos + 2].copy_from_slice(&bytes),
            Mutation::Interesting32 { pos, bytes } if pos + 4 <= len => buf[pos..pos + 4].copy_from_slice(&bytes),
            Mutation::DeleteBlock { start, len: block } if start < len => {
                let block = block.min(len - start).min(len.saturating_sub(1));
                buf.drain(start..start + block);
            }
            Mutation::DuplicateBlock { start, len: block, insert_at } if start < len => {
                let block = block.min(len - start);
                let copy = buf[start..start + block].to_vec();
                let at = insert_at.min(len);
                buf.splice(at..at, copy);
            }
            Mutation::InsertByte { value } => buf.push(value),
            _ => {}
        }
    }
}

/// Applies a random stack of 1..=`max_stack` mutations and returns the
/// result together with the mutations applied.
pub fn mutate_traced<R: Rng + ?Sized>(
    input: &[u8],
    rng: &mut R,
    max_stack: usize,
    max_len: usize,
) -> (Vec<u8>, Vec<Mutation>) {
    let max_len = max_len.max(1);
    let mut out = input.to_vec();
    out.truncate(max_len);
    let depth = rng.gen_range(1..=max_stack.max(1));
    let mut applied = Vec::with_capacity(depth);
    for _ in 0..depth {
        let m = Mutation::random(rng, out.len(), max_len);
        m.apply(&mut out);
        applied.push(m);
    }
    debug_assert!(out.len() <= max_len);
    (out, applied)
}

pub fn mutate<R: Rng + ?Sized>(input: &[u8], rng: &mut R, max_stack: usize, max_len: usize) -> Vec<u8> {
    mutate_traced(input, rng, max_stack, max_len).0
}
