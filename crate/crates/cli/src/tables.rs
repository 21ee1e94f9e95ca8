//! CSV report tables: an accuracy summary (configuration rows by classifier
//! columns), a row-normalized confusion matrix per classifier, and the nine
//! per-pair accuracies when a sweep ran.

use std::fs;
use std::path::Path;

use lfpsync::eval::{PerPairReport, N_CLASSES};
use lfpsync::pipeline::{ClassifierKind, PairMode, PipelineOutput};
use lfpsync::recording::Label;

use crate::CliError;

/// `"L0-L1"`-style derived-channel names per hemisphere, from the contact
/// names (first half of the channels is the left lead, second the right).
pub fn side_names(channel_names: &[String]) -> (Vec<String>, Vec<String>) {
    let half = channel_names.len() / 2;
    let derive = |contacts: &[String]| {
        contacts
            .windows(2)
            .map(|w| format!("{}-{}", w[0], w[1]))
            .collect()
    };
    (
        derive(&channel_names[..half]),
        derive(&channel_names[half..]),
    )
}

/// Accuracy summary: one column per classifier, one row per configuration
/// (the evaluated pair, the nine-pair mean when a sweep ran, and chance).
pub fn accuracy_csv(pair_mode: PairMode, outputs: &[(ClassifierKind, PipelineOutput)]) -> String {
    let mut s = String::from("configuration");
    for (kind, _) in outputs {
        s.push(',');
        s.push_str(kind.as_str());
    }
    s.push('\n');

    let first = &outputs[0].1;
    let mode_word = match pair_mode {
        PairMode::Fixed { .. } => "fixed-pair",
        PairMode::Auto | PairMode::All => "selected-pair",
    };
    s.push_str(&format!(
        "{mode_word} {}/{}",
        first.pair_names.0, first.pair_names.1
    ));
    for (_, out) in outputs {
        s.push_str(&format!(",{:.2}", out.report.accuracy_pct));
    }
    s.push('\n');

    if outputs.iter().all(|(_, o)| o.report.per_pair.is_some()) {
        s.push_str("all-pairs-mean");
        for (_, out) in outputs {
            let pp = out.report.per_pair.as_ref().expect("checked above");
            s.push_str(&format!(",{:.2}", pp.mean_accuracy_pct));
        }
        s.push('\n');
    }

    s.push_str("chance");
    for (_, out) in outputs {
        s.push_str(&format!(",{:.2}", out.report.chance_rate_pct));
    }
    s.push('\n');
    s
}

/// Row-normalized confusion matrix in percent; rows are truth.
pub fn confusion_csv(normalized: &[[f64; N_CLASSES]; N_CLASSES]) -> String {
    let mut s = String::from("truth\\prediction");
    for label in Label::ALL {
        s.push(',');
        s.push_str(label.code());
    }
    s.push('\n');
    for (row, label) in normalized.iter().zip(Label::ALL) {
        s.push_str(label.code());
        for v in row {
            s.push_str(&format!(",{v:.2}"));
        }
        s.push('\n');
    }
    s
}

/// Per-pair accuracies with the synchronization pick marked, plus explicit
/// mean and chance rows, ready to plot as bars.
pub fn per_pair_csv(
    per_pair: &PerPairReport,
    left_names: &[String],
    right_names: &[String],
    chance_pct: f64,
) -> String {
    let mut s = String::from("left,right,pair,accuracy_pct,selected\n");
    for e in &per_pair.entries {
        let mark = if (e.left, e.right) == per_pair.selected {
            "*"
        } else {
            ""
        };
        s.push_str(&format!(
            "{},{},{}/{},{:.2},{mark}\n",
            e.left, e.right, left_names[e.left], right_names[e.right], e.accuracy_pct
        ));
    }
    s.push_str(&format!("mean,,,{:.2},\n", per_pair.mean_accuracy_pct));
    s.push_str(&format!("chance,,,{chance_pct:.2},\n"));
    s
}

/// Write every table for the given runs into `dir`, creating it if needed.
pub fn write_all(
    dir: &Path,
    pair_mode: PairMode,
    channel_names: &[String],
    outputs: &[(ClassifierKind, PipelineOutput)],
) -> Result<(), CliError> {
    fs::create_dir_all(dir)
        .map_err(|e| CliError::Data(format!("cannot create {}: {e}", dir.display())))?;
    let write = |name: String, content: String| -> Result<(), CliError> {
        let path = dir.join(name);
        fs::write(&path, content)
            .map_err(|e| CliError::Data(format!("cannot write {}: {e}", path.display())))
    };
    write("accuracy.csv".into(), accuracy_csv(pair_mode, outputs))?;
    let (left_names, right_names) = side_names(channel_names);
    for (kind, out) in outputs {
        write(
            format!("confusion-{}.csv", kind.as_str()),
            confusion_csv(&out.report.confusion_normalized),
        )?;
        if let Some(pp) = &out.report.per_pair {
            write(
                format!("per-pair-{}.csv", kind.as_str()),
                per_pair_csv(pp, &left_names, &right_names, out.report.chance_rate_pct),
            )?;
        }
    }
    Ok(())
}
