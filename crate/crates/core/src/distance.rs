//! Character- and line-level edit distances.

/// Classic unit-cost Levenshtein distance over Unicode scalar values.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    levenshtein_seq(&a, &b)
}

/// Levenshtein distance over arbitrary sequences.
pub fn levenshtein_seq<T: PartialEq>(a: &[T], b: &[T]) -> usize {
    let prefix = a.iter().zip(b).take_while(|(x, y)| x == y).count();
    let (a, b) = (&a[prefix..], &b[prefix..]);
    let suffix = a
        .iter()
        .rev()
        .zip(b.iter().rev())
        .take_while(|(x, y)| x == y)
        .count();
    let (a, b) = (&a[..a.len() - suffix], &b[..b.len() - suffix]);
    // keep the row along the shorter sequence
    let (long, short) = if a.len() >= b.len() { (a, b) } else { (b, a) };
    if short.is_empty() {
        return long.len();
    }

    let mut row: Vec<usize> = (0..=short.len()).collect();
    for (i, x) in long.iter().enumerate() {
        let mut diag = row[0];
        row[0] = i + 1;
        for (j, y) in short.iter().enumerate() {
            let above = row[j + 1];
            let cost = if x == y { diag } else { diag + 1 };
            row[j + 1] = cost.min(above + 1).min(row[j] + 1);
            diag = above;
        }
    }
    row[short.len()]
}

/// Largest changed region, in line pairs, aligned optimally. Bigger regions
/// are first split at unchanged lines found by a Myers line diff.
const OPTIMAL_ALIGNMENT_BUDGET: usize = 40_000;

/// Line-level edit distance between two versions of a text file.
///
/// Lines are compared with trailing `\n` / `\r\n` removed. Unchanged lines
/// cost nothing, a line present on one side only costs its length in
/// characters, and a replaced line costs the character-level Levenshtein
/// distance to its counterpart. Changed regions are aligned so that the total
/// cost is minimal.
pub fn commit_edit_distance(before: &str, after: &str) -> u64 {
    let old: Vec<Line> = before.lines().map(Line::new).collect();
    let new: Vec<Line> = after.lines().map(Line::new).collect();

    let prefix = old.iter().zip(&new).take_while(|(x, y)| x.text == y.text).count();
    let (old, new) = (&old[prefix..], &new[prefix..]);
    let suffix = old
        .iter()
        .rev()
        .zip(new.iter().rev())
        .take_while(|(x, y)| x.text == y.text)
        .count();
    let (old, new) = (&old[..old.len() - suffix], &new[..new.len() - suffix]);

    if old.len().saturating_mul(new.len()) <= OPTIMAL_ALIGNMENT_BUDGET {
        return align(old, new);
    }
    anchored_distance(old, new)
}

struct Line<'a> {
    text: &'a str,
    chars: Vec<char>,
}

impl<'a> Line<'a> {
    fn new(text: &'a str) -> Self {
        Line {
            text,
            chars: text.chars().collect(),
        }
    }

    fn len(&self) -> u64 {
        self.chars.len() as u64
    }
}

/// Minimal-cost alignment of two line sequences.
fn align(old: &[Line], new: &[Line]) -> u64 {
    if old.is_empty() || new.is_empty() {
        return old.iter().chain(new).map(Line::len).sum();
    }
    let mut row: Vec<u64> = Vec::with_capacity(new.len() + 1);
    row.push(0);
    for line in new {
        let last = *row.last().unwrap();
        row.push(last + line.len());
    }
    for o in old {
        let mut diag = row[0];
        row[0] += o.len();
        for (j, n) in new.iter().enumerate() {
            let above = row[j + 1];
            let replace = if o.text == n.text {
                diag
            } else {
                diag + levenshtein_seq(&o.chars, &n.chars) as u64
            };
            row[j + 1] = replace.min(above + o.len()).min(row[j] + n.len());
            diag = above;
        }
    }
    row[new.len()]
}

/// Splits a large changed region at lines a Myers diff keeps unchanged and
/// aligns each hunk on its own.
fn anchored_distance(old: &[Line], new: &[Line]) -> u64 {
    use similar::{capture_diff_slices, Algorithm, DiffOp};

    let old_text: Vec<&str> = old.iter().map(|l| l.text).collect();
    let new_text: Vec<&str> = new.iter().map(|l| l.text).collect();
    let ops = capture_diff_slices(Algorithm::Myers, &old_text, &new_text);

    let mut total = 0;
    for op in ops {
        let (o, n) = match op {
            DiffOp::Equal { .. } => continue,
            DiffOp::Delete { old_index, old_len, .. } => (old_index..old_index + old_len, 0..0),
            DiffOp::Insert { new_index, new_len, .. } => (0..0, new_index..new_index + new_len),
            DiffOp::Replace {
                old_index,
                old_len,
                new_index,
                new_len,
            } => (old_index..old_index + old_len, new_index..new_index + new_len),
        };
        let (o, n) = (&old[o], &new[n]);
        total += if o.len().saturating_mul(n.len()) <= OPTIMAL_ALIGNMENT_BUDGET {
            align(o, n)
        } else {
            positional(o, n)
        };
    }
    total
}

/// Pairs the i-th removed line with the i-th added line.
fn positional(old: &[Line], new: &[Line]) -> u64 {
    let paired: u64 = old
        .iter()
        .zip(new)
        .map(|(o, n)| levenshtein_seq(&o.chars, &n.chars) as u64)
        .sum();
    let rest: u64 = if old.len() > new.len() {
        old[new.len()..].iter().map(Line::len).sum()
    } else {
        new[old.len()..].iter().map(Line::len).sum()
    };
    paired + rest
}
