use std::io::Read;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ModelParams;

pub const HEADER: [&str; 4] = ["strike", "maturity", "quote", "quote_kind"];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum QuoteKind {
    /// Classical Black-Scholes implied volatility.
    Iv,
    /// Call price in currency units.
    Price,
}

impl QuoteKind {
    pub fn as_str(self) -> &'static str {
        match self {
            QuoteKind::Iv => "iv",
            QuoteKind::Price => "price",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quote {
    pub strike: f64,
    pub maturity: f64,
    pub value: f64,
    /// 1-based source line, 0 for rows built in code.
    pub line: usize,
}

/// Spot, rate and yield shared by every row of a table.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MarketContext {
    pub spot: f64,
    pub rate: f64,
    pub yield_q: f64,
}

impl MarketContext {
    /// Model parameters at maturity `t`; `sigma` is a placeholder for solvers to overwrite.
    pub fn params(&self, sigma: f64, t: f64) -> ModelParams {
        ModelParams::new(self.rate, sigma, self.spot, t).with_dividend_yield(self.yield_q)
    }
}

/// Validated quotes sorted by `(maturity, strike)`, unique in that pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuoteTable {
    rows: Vec<Quote>,
    kind: QuoteKind,
    context: MarketContext,
    as_of: Option<String>,
}

impl QuoteTable {
    pub fn new(mut rows: Vec<Quote>, kind: QuoteKind, context: MarketContext, as_of: Option<String>) -> Result<Self> {
        if !(context.spot.is_finite() && context.spot > 0.0) {
            return Err(Error::InvalidTable(format!("spot must be positive, got {}", context.spot)));
        }
        if !context.rate.is_finite() {
            return Err(Error::InvalidTable(format!("rate must be finite, got {}", context.rate)));
        }
        if !(context.yield_q.is_finite() && context.yield_q >= 0.0) {
            return Err(Error::InvalidTable(format!("yield must be nonnegative, got {}", context.yield_q)));
        }
        for q in &rows {
            validate_row(q, kind)?;
        }
        rows.sort_by(|a, b| a.maturity.total_cmp(&b.maturity).then(a.strike.total_cmp(&b.strike)));
        if let Some(w) = rows.windows(2).find(|w| w[0].maturity == w[1].maturity && w[0].strike == w[1].strike) {
            let (first, second) = if w[0].line <= w[1].line { (w[0], w[1]) } else { (w[1], w[0]) };
            return Err(Error::DuplicateQuote {
                maturity: first.maturity,
                strike: first.strike,
                first_line: first.line,
                second_line: second.line,
            });
        }
        Ok(Self {
            rows,
            kind,
            context,
            as_of,
        })
    }

    pub fn rows(&self) -> &[Quote] {
        &self.rows
    }

    pub fn kind(&self) -> QuoteKind {
        self.kind
    }

    pub fn context(&self) -> MarketContext {
        self.context
    }

    pub fn as_of(&self) -> Option<&str> {
        self.as_of.as_deref()
    }

    pub fn maturities(&self) -> Vec<f64> {
        let mut out: Vec<f64> = self.rows.iter().map(|q| q.maturity).collect();
        out.dedup();
        out
    }

    /// Rows at exactly `maturity`, ascending in strike.
    pub fn slice(&self, maturity: f64) -> Vec<Quote> {
        self.rows.iter().filter(|q| q.maturity == maturity).copied().collect()
    }

    /// CSV text in the input schema, metadata first; re-loading yields an equal table.
    pub fn to_csv(&self) -> String {
        let c = self.context;
        let mut out = format!("# spot={} rate={} yield={}", c.spot, c.rate, c.yield_q);
        if let Some(date) = &self.as_of {
            out.push_str(&format!(" as_of={date}"));
        }
        out.push('\n');
        out.push_str(&HEADER.join(","));
        out.push('\n');
        for q in &self.rows {
            out.push_str(&format!("{},{},{},{}\n", q.strike, q.maturity, q.value, self.kind.as_str()));
        }
        out
    }
}

fn validate_row(q: &Quote, kind: QuoteKind) -> Result<()> {
    let fail = |message: String| Err(Error::Parse { line: q.line, message });
    if !(q.strike.is_finite() && q.strike > 0.0) {
        return fail(format!("strike must be positive, got {}", q.strike));
    }
    if !(q.maturity.is_finite() && q.maturity > 0.0) {
        return fail(format!("maturity must be positive, got {}", q.maturity));
    }
    let ok = match kind {
        QuoteKind::Iv => q.value.is_finite() && q.value > 0.0,
        QuoteKind::Price => q.value.is_finite() && q.value >= 0.0,
    };
    if !ok {
        return fail(format!("{} quote out of range: {}", kind.as_str(), q.value));
    }
    Ok(())
}

pub fn load_quotes(path: impl AsRef<Path>) -> Result<QuoteTable> {
    let file = std::fs::File::open(path)?;
    read_quotes(file)
}

/// Parses the `strike,maturity,quote,quote_kind` schema with `# key=value` metadata lines.
pub fn read_quotes(mut input: impl Read) -> Result<QuoteTable> {
    let mut text = String::new();
    input.read_to_string(&mut text)?;

    let mut spot = None;
    let mut rate = None;
    let mut yield_q = None;
    let mut as_of = None;
    for (idx, raw) in text.lines().enumerate() {
        let line = idx + 1;
        let Some(meta) = raw.trim_start().strip_prefix('#') else {
            continue;
        };
        // metadata lines hold only key=value tokens; anything else is a comment
        if meta.trim().is_empty() || !meta.split_whitespace().all(|t| t.contains('=')) {
            continue;
        }
        for token in meta.split_whitespace() {
            let (key, value) = token.split_once('=').expect("checked above");
            let number = || {
                value.parse::<f64>().map_err(|_| Error::Parse {
                    line,
                    message: format!("metadata {key} is not a number: {value:?}"),
                })
            };
            match key {
                "spot" => spot = Some(number()?),
                "rate" => rate = Some(number()?),
                "yield" => yield_q = Some(number()?),
                "as_of" => as_of = Some(value.to_string()),
                _ => {
                    return Err(Error::Parse {
                        line,
                        message: format!("unknown metadata key {key:?}"),
                    })
                }
            }
        }
    }
    let missing = |what: &str| Error::Parse {
        line: 1,
        message: format!("missing `# {what}=` metadata"),
    };
    let context = MarketContext {
        spot: spot.ok_or_else(|| missing("spot"))?,
        rate: rate.ok_or_else(|| missing("rate"))?,
        yield_q: yield_q.unwrap_or(0.0),
    };

    let mut reader = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(csv::Trim::All)
        .flexible(true)
        .from_reader(text.as_bytes());
    let header_line = text
        .lines()
        .position(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map_or(1, |i| i + 1);
    let header = reader.headers().map_err(|e| csv_error(e, header_line))?.clone();
    if header.iter().ne(HEADER) {
        return Err(Error::Parse {
            line: header_line,
            message: format!("expected header {:?}, got {:?}", HEADER.join(","), header.iter().collect::<Vec<_>>().join(",")),
        });
    }

    let mut rows = Vec::new();
    let mut kind: Option<QuoteKind> = None;
    for record in reader.records() {
        let record = record.map_err(|e| csv_error(e, 0))?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != HEADER.len() {
            return Err(Error::Parse {
                line,
                message: format!("expected {} fields, got {}", HEADER.len(), record.len()),
            });
        }
        let field = |i: usize| -> Result<f64> {
            record[i].parse::<f64>().map_err(|_| Error::Parse {
                line,
                message: format!("{} is not a number: {:?}", HEADER[i], &record[i]),
            })
        };
        let row_kind = match &record[3] {
            "iv" => QuoteKind::Iv,
            "price" => QuoteKind::Price,
            other => {
                return Err(Error::Parse {
                    line,
                    message: format!("quote_kind must be iv or price, got {other:?}"),
                })
            }
        };
        match kind {
            None => kind = Some(row_kind),
            Some(k) if k != row_kind => {
                return Err(Error::Parse {
                    line,
                    message: format!("mixed quote kinds: {} after {}", row_kind.as_str(), k.as_str()),
                })
            }
            Some(_) => {}
        }
        let q = Quote {
            strike: field(0)?,
            maturity: field(1)?,
            value: field(2)?,
            line,
        };
        validate_row(&q, row_kind)?;
        rows.push(q);
    }
    let kind = kind.ok_or_else(|| Error::InvalidTable("quote table has no rows".to_string()))?;
    QuoteTable::new(rows, kind, context, as_of)
}

fn csv_error(e: csv::Error, fallback_line: usize) -> Error {
    let line = e.position().map_or(fallback_line, |p| p.line() as usize);
    Error::Parse {
        line,
        message: e.to_string(),
    }
}
