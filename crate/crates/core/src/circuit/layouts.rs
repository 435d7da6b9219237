//! Builders for the named circuit layouts used by the workbench experiments.

use super::{FrameGate, LayeredCircuit, Observable};
use crate::{Error, Result};
use serde::{Deserialize, Serialize};
use std::fmt;
use std::str::FromStr;

/// The named layouts.  `CnotLadder` and `CzCycle` are size-parametric
/// brickwork families; the other three are fixed workload circuits.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum LayoutKind {
    #[serde(rename = "cnot-ladder")]
    CnotLadder,
    #[serde(rename = "cz-cycle")]
    CzCycle,
    #[serde(rename = "dqcp")]
    Dqcp,
    #[serde(rename = "qva-ansatz")]
    QvaAnsatz,
    #[serde(rename = "uccsd-h2")]
    UccsdH2,
}

impl LayoutKind {
    pub const ALL: [LayoutKind; 5] = [
        LayoutKind::CnotLadder,
        LayoutKind::CzCycle,
        LayoutKind::Dqcp,
        LayoutKind::QvaAnsatz,
        LayoutKind::UccsdH2,
    ];

    pub fn name(self) -> &'static str {
        match self {
            LayoutKind::CnotLadder => "cnot-ladder",
            LayoutKind::CzCycle => "cz-cycle",
            LayoutKind::Dqcp => "dqcp",
            LayoutKind::QvaAnsatz => "qva-ansatz",
            LayoutKind::UccsdH2 => "uccsd-h2",
        }
    }
}

impl fmt::Display for LayoutKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for LayoutKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        LayoutKind::ALL
            .into_iter()
            .find(|k| k.name() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown layout kind {s:?}")))
    }
}

fn expect_size(kind: LayoutKind, n: usize, nl: usize, want: &[(usize, usize)]) -> Result<()> {
    if want.iter().any(|&(wn, wl)| (n, nl) == (wn, wl)) {
        Ok(())
    } else {
        Err(Error::InvalidConfig(format!(
            "layout {kind} is fixed to (n, layers) in {want:?}, got ({n}, {nl})"
        )))
    }
}

/// Builds one of the named layouts at the requested size.
///
/// * `cnot-ladder`: brickwork CNOTs, odd layers pairing `(0,1), (2,3), ...`
///   and even layers `(1,2), (3,4), ...`, control on the upper qubit;
///   observable `Z` on qubit 0.  At `n = N = 8` this contains 28 CNOTs.
/// * `cz-cycle`: the same brickwork with CZ gates on a cycle graph; for even
///   `n` the even layers close the ring with a `(n-1, 0)` gate, placed last.
///   Observable `Z` on the bottom qubit `n-1`.
/// * `dqcp`: fixed 2-qubit, 2-layer circuit, both frame gates `CNOT(0->1)`;
///   observable `Z` on the upper qubit.
/// * `qva-ansatz`: fixed 4-qubit, 4-layer CZ ansatz alternating pairs
///   `{(0,1), (2,3)}` and `{(1,2), (3,0)}`; 20 computing slots.
/// * `uccsd-h2`: fixed 4-qubit CNOT ladder conjugation implementing a
///   single-parameter pair-excitation circuit; 6 frame layers plain, or 12
///   with the appended measurement-basis block.
pub fn build_layout(kind: LayoutKind, n: usize, num_frame_layers: usize) -> Result<LayeredCircuit> {
    match kind {
        LayoutKind::CnotLadder => {
            if n < 2 || num_frame_layers == 0 {
                return Err(Error::InvalidConfig(format!(
                    "cnot-ladder needs n >= 2 and at least one layer, got ({n}, {num_frame_layers})"
                )));
            }
            let layers = (1..=num_frame_layers)
                .map(|j| brick_pairs(n, j).map(|(a, b)| FrameGate::cnot(a, b)).collect())
                .collect();
            LayeredCircuit::new(n, layers, Observable::z(0))
        }
        LayoutKind::CzCycle => {
            if n < 3 || num_frame_layers == 0 {
                return Err(Error::InvalidConfig(format!(
                    "cz-cycle needs n >= 3 and at least one layer, got ({n}, {num_frame_layers})"
                )));
            }
            let mut layers = Vec::with_capacity(num_frame_layers);
            for j in 1..=num_frame_layers {
                let mut layer: Vec<FrameGate> =
                    brick_pairs(n, j).map(|(a, b)| FrameGate::cz(a, b)).collect();
                if j % 2 == 0 && n % 2 == 0 {
                    layer.push(FrameGate::cz(n - 1, 0));
                }
                layers.push(layer);
            }
            LayeredCircuit::new(n, layers, Observable::z(n - 1))
        }
        LayoutKind::Dqcp => {
            expect_size(kind, n, num_frame_layers, &[(2, 2)])?;
            let layers = vec![vec![FrameGate::cnot(0, 1)], vec![FrameGate::cnot(0, 1)]];
            LayeredCircuit::new(2, layers, Observable::z(0))
        }
        LayoutKind::QvaAnsatz => {
            expect_size(kind, n, num_frame_layers, &[(4, 4)])?;
            let odd = vec![FrameGate::cz(0, 1), FrameGate::cz(2, 3)];
            let even = vec![FrameGate::cz(1, 2), FrameGate::cz(3, 0)];
            let layers = vec![odd.clone(), even.clone(), odd, even];
            LayeredCircuit::new(4, layers, Observable::z(0))
        }
        LayoutKind::UccsdH2 => {
            expect_size(kind, n, num_frame_layers, &[(4, 6), (4, 12)])?;
            let mut layers = vec![
                vec![FrameGate::cnot(0, 1)],
                vec![FrameGate::cnot(1, 2)],
                vec![FrameGate::cnot(2, 3)],
                vec![FrameGate::cnot(2, 3)],
                vec![FrameGate::cnot(1, 2)],
                vec![FrameGate::cnot(0, 1)],
            ];
            if num_frame_layers == 12 {
                layers.extend([
                    vec![FrameGate::cnot(1, 3)],
                    vec![FrameGate::cnot(0, 1)],
                    vec![FrameGate::cnot(2, 0)],
                    vec![FrameGate::cnot(3, 1)],
                    vec![FrameGate::cnot(2, 3)],
                    vec![FrameGate::cnot(1, 0)],
                ]);
            }
            LayeredCircuit::new(4, layers, Observable::z(0))
        }
    }
}

/// Disjoint neighbor pairs of brickwork layer `j` (1-based): odd layers pair
/// from qubit 0 downward, even layers from qubit 1.
fn brick_pairs(n: usize, j: usize) -> impl Iterator<Item = (usize, usize)> {
    let start = if j % 2 == 1 { 0 } else { 1 };
    (start..n).step_by(2).filter_map(move |s| (s + 1 < n).then_some((s, s + 1)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::circuit::FrameGateKind;

    #[test]
    fn ladder_8x8_contains_28_cnots() {
        let c = build_layout(LayoutKind::CnotLadder, 8, 8).unwrap();
        assert_eq!(c.frame_gate_count(), 28);
        assert!(c
            .gates_in_order()
            .all(|(_, _, g)| g.kind == FrameGateKind::Cnot && g.control + 1 == g.target));
        assert_eq!(c.observable(), &Observable::z(0));
    }

    #[test]
    fn slot_count_formulas_hold_across_kinds_and_sizes() {
        let mut built = Vec::new();
        for n in 2..=8 {
            for nl in 2..=8 {
                built.push(build_layout(LayoutKind::CnotLadder, n, nl).unwrap());
                if n >= 3 {
                    built.push(build_layout(LayoutKind::CzCycle, n, nl).unwrap());
                }
            }
        }
        built.push(build_layout(LayoutKind::Dqcp, 2, 2).unwrap());
        built.push(build_layout(LayoutKind::QvaAnsatz, 4, 4).unwrap());
        built.push(build_layout(LayoutKind::UccsdH2, 4, 6).unwrap());
        built.push(build_layout(LayoutKind::UccsdH2, 4, 12).unwrap());
        for c in built {
            let (n, nl) = (c.n(), c.num_frame_layers());
            assert_eq!(c.computing_slot_count(), n * (nl + 1));
            assert_eq!(c.mitigation_slot_count(), 2 * n * (nl + 1));
        }
    }

    #[test]
    fn cycle_layout_respects_cycle_adjacency() {
        for n in 3..=10 {
            let c = build_layout(LayoutKind::CzCycle, n, 6).unwrap();
            for (_, _, g) in c.gates_in_order() {
                let adjacent =
                    (g.control + 1) % n == g.target || (g.target + 1) % n == g.control;
                assert!(adjacent, "gate ({}, {}) not on the cycle", g.control, g.target);
                assert_eq!(g.kind, FrameGateKind::Cz);
            }
        }
        // Even n closes the ring in even layers; observable reads the bottom qubit.
        let c = build_layout(LayoutKind::CzCycle, 8, 8).unwrap();
        assert_eq!(c.frame_gate_count(), 32);
        assert_eq!(c.observable(), &Observable::z(7));
        let wrap = c.frame_layers()[1].last().unwrap();
        assert_eq!((wrap.control, wrap.target), (7, 0));
        // Odd n cannot close the ring with disjoint gates.
        let c = build_layout(LayoutKind::CzCycle, 5, 4).unwrap();
        assert_eq!(c.frame_gate_count(), 2 + 2 + 2 + 2);
    }

    #[test]
    fn fixed_layouts_validate_their_sizes() {
        let c = build_layout(LayoutKind::Dqcp, 2, 2).unwrap();
        assert_eq!((c.n(), c.num_frame_layers()), (2, 2));
        assert_eq!(c.observable(), &Observable::z(0));
        assert!(build_layout(LayoutKind::Dqcp, 3, 2).is_err());
        assert!(build_layout(LayoutKind::QvaAnsatz, 4, 5).is_err());
        assert!(build_layout(LayoutKind::UccsdH2, 4, 7).is_err());
        assert!(build_layout(LayoutKind::CnotLadder, 1, 4).is_err());
        assert!(build_layout(LayoutKind::CzCycle, 2, 4).is_err());
    }

    #[test]
    fn qva_ansatz_has_eight_phase_gates_and_twenty_slots() {
        let c = build_layout(LayoutKind::QvaAnsatz, 4, 4).unwrap();
        assert_eq!(c.frame_gate_count(), 8);
        assert!(c.gates_in_order().all(|(_, _, g)| g.kind == FrameGateKind::Cz));
        assert_eq!(c.computing_slot_count(), 20);
    }

    #[test]
    fn uccsd_base_ladder_is_palindromic() {
        let c = build_layout(LayoutKind::UccsdH2, 4, 6).unwrap();
        let layers = c.frame_layers();
        for j in 0..6 {
            assert_eq!(layers[j].len(), 1);
            assert_eq!(layers[j][0], layers[5 - j][0]);
        }
        let boxed = build_layout(LayoutKind::UccsdH2, 4, 12).unwrap();
        assert_eq!(boxed.frame_gate_count(), 12);
        assert_eq!(&boxed.frame_layers()[..6], &layers[..6]);
    }

    #[test]
    fn layout_names_round_trip() {
        for kind in LayoutKind::ALL {
            assert_eq!(kind.name().parse::<LayoutKind>().unwrap(), kind);
        }
        assert!("brickwork".parse::<LayoutKind>().is_err());
    }
}
