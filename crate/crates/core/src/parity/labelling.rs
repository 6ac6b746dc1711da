//! Even/odd labellings of site lines from their switching points.

/// Rule fixing the labels of one piece of a site line.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum PieceKind {
    /// `[start, end]` with prescribed labels at both ends (`true` = odd).
    Interval { left_odd: bool, right_odd: bool },
    /// The whole circle `[-r/2, r/2)`; `start_odd` is the label just after `-r/2`.
    Circle { start_odd: bool },
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Piece {
    pub start: f64,
    pub end: f64,
    pub kind: PieceKind,
}

/// Labels of one site line as `(start, end, odd)` segments in time order.
/// Points outside every segment lie in a hole.
#[derive(Clone, Debug, PartialEq)]
pub struct LineLabels {
    pub segments: Vec<(f64, f64, bool)>,
    circle: Option<f64>,
}

impl LineLabels {
    pub(crate) fn from_segments(segments: Vec<(f64, f64, bool)>) -> Self {
        Self { segments, circle: None }
    }

    /// Label at `t`; `None` inside a hole. The odd set is closed, so a
    /// point shared by an odd and an even segment is odd.
    pub fn is_odd_at(&self, t: f64) -> Option<bool> {
        let t = match self.circle {
            Some(len) => (t + 0.5 * len).rem_euclid(len) - 0.5 * len,
            None => t,
        };
        let mut found = None;
        for &(a, b, odd) in &self.segments {
            if t >= a && t <= b {
                if odd {
                    return Some(true);
                }
                found = Some(false);
            }
        }
        if let (Some(len), None) = (self.circle, found) {
            // the seam at r/2 closes up with -r/2
            if (t - 0.5 * len).abs() < 1e-15 {
                return self.is_odd_at(-0.5 * len);
            }
        }
        found
    }

    pub fn odd_length(&self) -> f64 {
        self.segments.iter().filter(|s| s.2).map(|s| s.1 - s.0).sum()
    }

    pub fn even_length(&self) -> f64 {
        self.segments.iter().filter(|s| !s.2).map(|s| s.1 - s.0).sum()
    }

    /// True when the closed set `[a, b]` carries only even labels.
    pub fn even_on(&self, a: f64, b: f64) -> bool {
        for &(s, e, odd) in &self.segments {
            if odd && e >= a && s <= b {
                return false;
            }
        }
        true
    }
}

/// Labels each piece from the switching points falling in it, or returns
/// `None` if some piece has the wrong switching parity.
pub fn label_line(pieces: &[Piece], switches: &[f64]) -> Option<LineLabels> {
    let mut segments = Vec::new();
    let mut circle = None;
    for piece in pieces {
        let inside: Vec<f64> = match piece.kind {
            PieceKind::Circle { .. } => switches.to_vec(),
            PieceKind::Interval { .. } => {
                switches.iter().copied().filter(|&t| t >= piece.start && t <= piece.end).collect()
            }
        };
        let mut label = match piece.kind {
            PieceKind::Interval { left_odd, right_odd } => {
                if left_odd ^ (inside.len() % 2 == 1) != right_odd {
                    return None;
                }
                left_odd
            }
            PieceKind::Circle { start_odd } => {
                if inside.len() % 2 == 1 {
                    return None;
                }
                circle = Some(piece.end - piece.start);
                start_odd
            }
        };
        let mut t = piece.start;
        for &s in &inside {
            if s > t {
                segments.push((t, s, label));
            }
            label = !label;
            t = s;
        }
        if piece.end > t {
            segments.push((t, piece.end, label));
        }
    }
    Some(LineLabels { segments, circle })
}

/// Labelling of all site lines.
#[derive(Clone, Debug, PartialEq)]
pub struct Labelling {
    pub lines: Vec<LineLabels>,
}

impl Labelling {
    pub fn odd_length(&self) -> f64 {
        self.lines.iter().map(LineLabels::odd_length).sum()
    }

    pub fn even_length(&self) -> f64 {
        self.lines.iter().map(LineLabels::even_length).sum()
    }

    pub fn is_odd_at(&self, site: usize, t: f64) -> Option<bool> {
        self.lines.get(site).and_then(|l| l.is_odd_at(t))
    }

    /// `e^{-2δ·(odd length)}`, the weight `e^{2δε}` divided by its value
    /// for the all-even labelling.
    pub fn reduced_weight(&self, delta: f64) -> f64 {
        (-2.0 * delta * self.odd_length()).exp()
    }
}
