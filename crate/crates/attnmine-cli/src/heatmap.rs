//! Static attention-heatmap export: one HTML page with per-token red
//! highlights scaled by attention weight, and a CSV table of the raw
//! weights. Masked positions render as mask tokens on a plain white
//! background.

use attnmine::corpus::{Instance, Vocabulary, MASK_INDEX};
use attnmine::miner::{mask_view, Classifier, SupervisionRecord};
use attnmine::model::ModelParams;
use attnmine::Result;

pub struct Rendered {
    pub html: String,
    pub csv: String,
}

/// Highlights saturate at this weight, matching the scale used by the
/// visualizations the export mimics.
const FULL_INTENSITY_WEIGHT: f64 = 0.5;

fn html_escape(s: &str) -> String {
    s.replace('&', "&amp;")
        .replace('<', "&lt;")
        .replace('>', "&gt;")
}

fn csv_field(s: &str) -> String {
    if s.contains(',') || s.contains('"') || s.contains('\n') {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn highlight(weight: f64) -> String {
    let t = (weight / FULL_INTENSITY_WEIGHT).clamp(0.0, 1.0);
    let fade = (255.0 * (1.0 - t)).round() as u8;
    format!("rgb(255,{fade},{fade})")
}

pub fn render(
    params: &ModelParams,
    vocab: &Vocabulary,
    instances: &[Instance],
    records: Option<&[SupervisionRecord]>,
    limit: usize,
) -> Result<Rendered> {
    let mut csv = String::from("instance_id,position,token,alpha,masked\n");
    let mut body = String::new();

    for inst in instances.iter().take(limit) {
        let indexed = vocab.encode(inst);
        let record = records.and_then(|rs| rs.iter().find(|r| r.id == inst.id));
        let view = match record {
            Some(record) => mask_view(&indexed, record)?,
            None => indexed.tokens.clone(),
        };
        let (predicted, alpha) = params.predict(&view, &indexed.aspect_tokens)?;

        body.push_str(&format!(
            "<div class=\"sentence\"><span class=\"meta\">#{} gold {} / pred {}</span> ",
            inst.id,
            inst.label.as_str(),
            predicted.as_str()
        ));
        for (pos, (&tok, &weight)) in view.iter().zip(alpha.iter()).enumerate() {
            // raw corpora cannot contain the mask token, so index 0 here
            // always means "extracted during mining"
            let masked = tok == MASK_INDEX;
            let word = if masked {
                "\u{27e8}mask\u{27e9}".to_string()
            } else {
                html_escape(&inst.tokens[pos])
            };
            let in_aspect = pos >= inst.aspect_span.0 && pos < inst.aspect_span.1;
            let shown = if in_aspect {
                format!("<b>[{word}]</b>")
            } else {
                word
            };
            // extracted tokens keep a white background
            let color = if masked {
                "rgb(255,255,255)".to_string()
            } else {
                highlight(weight)
            };
            body.push_str(&format!(
                "<span class=\"tok\" style=\"background-color:{color}\" title=\"{weight:.4}\">{shown}</span> "
            ));

            let token_field = if masked {
                vocab.word(MASK_INDEX).to_string()
            } else {
                inst.tokens[pos].clone()
            };
            csv.push_str(&format!(
                "{},{},{},{},{}\n",
                inst.id,
                pos,
                csv_field(&token_field),
                weight,
                masked
            ));
        }
        body.push_str("</div>\n");
    }

    let html = format!(
        "<!DOCTYPE html>\n<html>\n<head>\n<meta charset=\"utf-8\">\n<title>attention heatmap</title>\n<style>\n\
body {{ font-family: sans-serif; margin: 2em; }}\n\
.sentence {{ margin-bottom: 0.8em; line-height: 1.9; }}\n\
.meta {{ color: #555; margin-right: 0.8em; font-size: 0.85em; }}\n\
.tok {{ padding: 0.1em 0.25em; border-radius: 3px; }}\n\
</style>\n</head>\n<body>\n{body}</body>\n</html>\n"
    );
    Ok(Rendered { html, csv })
}
