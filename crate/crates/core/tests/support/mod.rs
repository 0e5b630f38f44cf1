#![allow(dead_code)]

pub mod http_mock;
pub mod oracle;

use std::path::PathBuf;

pub fn sample_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data/sample")
}

/// Frozen candidate/reference pairs for oracle comparisons. Short enough for
/// exhaustive alignment search; several mix German and English.
pub const FROZEN_PAIRS: &[(&str, &str)] = &[
    ("the cat sat on mat", "the cat sat on the mat"),
    ("the cat sat", "the cat sat down"),
    ("open the app now", "open the app now"),
    ("Scan the parcel.", "Scan the parcel and sign."),
    ("Öffne die LIEF_POST App im VB-Modus", "Open the LIEF_POST app in VB-Modus"),
    ("Rücksendung Ausland: Zielland prüfen", "Check the Zielland for Rücksendung Ausland"),
    ("Der Zusteller scannt das Paket", "Der Zusteller scannt alle Pakete"),
    ("scanning parcels opened", "scanned parcel opens"),
    ("Verify the Nachnahme amount is shown", "Nachnahme amount shown and verified"),
    ("1. Scan the parcel. 2. Sign.", "1. Sign. 2. Scan the parcel."),
    ("the the the the", "the cat"),
    ("a b c d e f", "f e d c b a"),
    ("Empfänger unterschreibt auf dem Gerät", "the recipient signs on the device"),
    ("Gebühren 18% USt inklusive", "inklusive 18 % USt Gebühren"),
    ("Tour abschließen wenn alle Sendungen Status haben", "alle Sendungen brauchen einen Status bevor die Tour abgeschlossen wird"),
    ("boxes signed taken", "box sign take"),
    ("print the return label", "print label for the return"),
    ("Abholstation: scan compartment and parcel", "scan the parcel and the Abholstation compartment"),
    ("upload offline records in order", "records created offline are uploaded in creation order"),
    ("x", "x y z"),
    ("parcels parcel parcels", "parcel parcels"),
    ("Größen prüfen", "größen prüfen und melden"),
    ("no overlap here", "völlig andere Wörter"),
    ("CN23 Zollinhaltserklärung ausfüllen", "Fill in the Zollinhaltserklärung CN23"),
];
