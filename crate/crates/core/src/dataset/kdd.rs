//! KDD Cup 99 connection records.

use std::io::BufRead;

use crate::error::{Error, Result};

/// Whether a column holds a measured quantity or a symbol.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum FeatureKind {
    Continuous,
    Discrete,
}

/// One column of the connection-record schema.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct FeatureInfo {
    pub name: &'static str,
    pub kind: FeatureKind,
    /// Spreadsheet-style column letter used in CSV headers.
    pub label: &'static str,
}

const fn c(name: &'static str, label: &'static str) -> FeatureInfo {
    FeatureInfo { name, kind: FeatureKind::Continuous, label }
}

const fn d(name: &'static str, label: &'static str) -> FeatureInfo {
    FeatureInfo { name, kind: FeatureKind::Discrete, label }
}

pub const N_FEATURES: usize = 41;

/// The 41 connection features in file order.
pub const FEATURES: [FeatureInfo; N_FEATURES] = [
    c("duration", "A"),
    d("protocol_type", "B"),
    d("service", "C"),
    d("flag", "D"),
    c("src_bytes", "E"),
    c("dst_bytes", "F"),
    d("land", "G"),
    c("wrong_fragment", "H"),
    c("urgent", "I"),
    c("hot", "J"),
    c("num_failed_logins", "K"),
    d("logged_in", "L"),
    c("num_compromised", "M"),
    c("root_shell", "N"),
    c("su_attempted", "O"),
    c("num_root", "P"),
    c("num_file_creations", "Q"),
    c("num_shells", "R"),
    c("num_access_files", "S"),
    c("num_outbound_cmds", "T"),
    d("is_host_login", "U"),
    d("is_guest_login", "V"),
    c("count", "W"),
    c("srv_count", "X"),
    c("serror_rate", "Y"),
    c("srv_serror_rate", "Z"),
    c("rerror_rate", "AA"),
    c("srv_rerror_rate", "AB"),
    c("same_srv_rate", "AC"),
    c("diff_srv_rate", "AD"),
    c("srv_diff_host_rate", "AE"),
    c("dst_host_count", "AF"),
    c("dst_host_srv_count", "AG"),
    c("dst_host_same_srv_rate", "AH"),
    c("dst_host_diff_srv_rate", "AI"),
    c("dst_host_same_src_port_rate", "AJ"),
    c("dst_host_srv_diff_host_rate", "AK"),
    c("dst_host_serror_rate", "AL"),
    c("dst_host_srv_serror_rate", "AM"),
    c("dst_host_rerror_rate", "AN"),
    c("dst_host_srv_rerror_rate", "AO"),
];

/// Header label of the class column.
pub const CLASS_LABEL: &str = "AP";

/// The five traffic categories, numbered as in the evaluation tables.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
#[repr(u8)]
pub enum ClassLabel {
    Normal = 1,
    Probe = 2,
    Dos = 3,
    U2r = 4,
    R2l = 5,
}

impl ClassLabel {
    pub const ALL: [ClassLabel; 5] = [
        ClassLabel::Normal,
        ClassLabel::Probe,
        ClassLabel::Dos,
        ClassLabel::U2r,
        ClassLabel::R2l,
    ];

    pub fn value(self) -> u8 {
        self as u8
    }

    pub fn from_value(v: u8) -> Option<ClassLabel> {
        ClassLabel::ALL.get((v as usize).wrapping_sub(1)).copied()
    }

    pub fn name(self) -> &'static str {
        match self {
            ClassLabel::Normal => "Normal",
            ClassLabel::Probe => "Probe",
            ClassLabel::Dos => "DoS",
            ClassLabel::U2r => "U2R",
            ClassLabel::R2l => "R2L",
        }
    }
}

/// Every label occurring in the public 10% training subset, with its
/// category (attack taxonomy of the KDD Cup 99 task description).
pub const ATTACK_CLASSES: [(&str, ClassLabel); 23] = [
    ("normal", ClassLabel::Normal),
    ("satan", ClassLabel::Probe),
    ("ipsweep", ClassLabel::Probe),
    ("nmap", ClassLabel::Probe),
    ("portsweep", ClassLabel::Probe),
    ("back", ClassLabel::Dos),
    ("land", ClassLabel::Dos),
    ("neptune", ClassLabel::Dos),
    ("pod", ClassLabel::Dos),
    ("smurf", ClassLabel::Dos),
    ("teardrop", ClassLabel::Dos),
    ("buffer_overflow", ClassLabel::U2r),
    ("loadmodule", ClassLabel::U2r),
    ("perl", ClassLabel::U2r),
    ("rootkit", ClassLabel::U2r),
    ("guess_passwd", ClassLabel::R2l),
    ("ftp_write", ClassLabel::R2l),
    ("imap", ClassLabel::R2l),
    ("phf", ClassLabel::R2l),
    ("multihop", ClassLabel::R2l),
    ("warezmaster", ClassLabel::R2l),
    ("warezclient", ClassLabel::R2l),
    ("spy", ClassLabel::R2l),
];

pub fn map_attack_class(label: &str) -> Result<ClassLabel> {
    ATTACK_CLASSES
        .iter()
        .find(|(name, _)| *name == label)
        .map(|&(_, class)| class)
        .ok_or_else(|| Error::UnknownLabel(label.to_string()))
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ConnectionRecord {
    /// 1-based line in the source.
    pub line: usize,
    pub fields: Vec<String>,
    /// Attack name with the trailing period removed.
    pub label: String,
}

impl ConnectionRecord {
    pub fn class(&self) -> Result<ClassLabel> {
        map_attack_class(&self.label)
    }
}

/// Reads comma-separated records, one per non-blank line.
pub fn parse_kdd(reader: impl BufRead) -> Result<Vec<ConnectionRecord>> {
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line_no = i + 1;
        let line = line.map_err(|e| Error::Parse {
            line: line_no,
            message: e.to_string(),
        })?;
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let mut fields: Vec<String> = line.split(',').map(|f| f.trim().to_string()).collect();
        if fields.len() != N_FEATURES + 1 {
            return Err(Error::Parse {
                line: line_no,
                message: format!("expected {} fields, found {}", N_FEATURES + 1, fields.len()),
            });
        }
        let label = fields.pop().expect("length checked");
        let label = label.strip_suffix('.').unwrap_or(&label).to_string();
        records.push(ConnectionRecord {
            line: line_no,
            fields,
            label,
        });
    }
    Ok(records)
}
