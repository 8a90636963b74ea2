//! Newline-delimited JSON evaluation server.
//!
//! Each request line is `{"op": .., "id": .., "payload": ..}` and produces
//! exactly one response line, in order:
//! `{"id": .., "ok": true, "payload": ..}` or
//! `{"id": .., "ok": false, "error": {"code": .., "message": ..}}`.
//! A bad request never stops the server.
//!
//! | op               | payload                                          |
//! |------------------|--------------------------------------------------|
//! | `evaluate`       | `items`, `sequence`, `orientations`, optional `strategy` (`lwsc`, `dblf`, `dftrc`) and `target` |
//! | `evaluate_batch` | `requests`: list of `evaluate` payloads          |
//! | `greedy`         | `items`                                          |
//! | `greedy_spaces`  | `items`, `sequence`, `orientations` (LWSC spaces)|
//! | `oracle`         | `items`, optional `strategy` and `target`        |
//! | `info`           | none                                             |

use std::io::{self, BufRead, Write};

use fbpp_core::geometry::{items_from_dims, orient, Item};
use fbpp_core::oracle::{self, OracleError};
use fbpp_core::strategy::{evaluate, greedy_lwsc, StrategyError};
use fbpp_core::{BoundingBox, OrientationCode, Solution, Strategy, StrategyId};
use serde::{Deserialize, Serialize};
use serde_json::Value;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ErrorBody {
    pub code: &'static str,
    pub message: String,
}

impl ErrorBody {
    fn new(code: &'static str, message: impl Into<String>) -> Self {
        Self { code, message: message.into() }
    }

    fn bad_request(e: impl std::fmt::Display) -> Self {
        Self::new("bad_request", e.to_string())
    }
}

impl From<StrategyError> for ErrorBody {
    fn from(e: StrategyError) -> Self {
        let code = match e {
            StrategyError::EmptyInstance => "empty_instance",
            StrategyError::NoFit { .. } => "no_fit",
            StrategyError::NotAPermutation => "not_a_permutation",
            StrategyError::OrientationCount { .. } => "orientation_count",
        };
        Self::new(code, e.to_string())
    }
}

impl From<OracleError> for ErrorBody {
    fn from(e: OracleError) -> Self {
        match e {
            OracleError::CapExceeded { .. } => Self::new("cap_exceeded", e.to_string()),
            OracleError::Strategy(inner) => inner.into(),
        }
    }
}

#[derive(Debug, Serialize)]
struct Response<'a> {
    id: &'a Value,
    ok: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    payload: Option<Value>,
    #[serde(skip_serializing_if = "Option::is_none")]
    error: Option<ErrorBody>,
}

#[derive(Debug, Deserialize)]
struct Request {
    #[serde(default)]
    id: Value,
    op: String,
    #[serde(default)]
    payload: Value,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstancePayload {
    items: Vec<[u32; 3]>,
    #[serde(default)]
    strategy: Option<StrategyId>,
    #[serde(default)]
    target: Option<[u32; 3]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EvaluatePayload {
    items: Vec<[u32; 3]>,
    sequence: Vec<usize>,
    orientations: Vec<u8>,
    #[serde(default)]
    strategy: Option<StrategyId>,
    #[serde(default)]
    target: Option<[u32; 3]>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct BatchPayload {
    requests: Vec<Value>,
}

#[derive(Debug, Serialize)]
struct PlacedItem {
    item_id: usize,
    orientation: OrientationCode,
    x: u32,
    y: u32,
    z: u32,
    l: u32,
    w: u32,
    h: u32,
}

#[derive(Debug, Serialize)]
struct SolutionPayload {
    sa: u64,
    bbox: [u32; 3],
    sequence: Vec<usize>,
    orientations: Vec<OrientationCode>,
    placements: Vec<PlacedItem>,
    #[serde(skip_serializing_if = "Option::is_none")]
    explored: Option<u64>,
}

fn solution_payload(sol: &Solution, items: &[Item], explored: Option<u64>) -> Value {
    let placements = sol
        .layout
        .placements
        .iter()
        .map(|p| {
            let b = orient(&items[p.item_id], p.orientation);
            PlacedItem {
                item_id: p.item_id,
                orientation: p.orientation,
                x: p.x,
                y: p.y,
                z: p.z,
                l: b.l,
                w: b.w,
                h: b.h,
            }
        })
        .collect();
    serde_json::to_value(SolutionPayload {
        sa: sol.sa,
        bbox: sol.bbox.extents(),
        sequence: sol.sequence.clone(),
        orientations: sol.orientations.clone(),
        placements,
        explored,
    })
    .expect("solution payload serializes")
}

fn parse<T: serde::de::DeserializeOwned>(payload: Value) -> Result<T, ErrorBody> {
    serde_json::from_value(payload).map_err(ErrorBody::bad_request)
}

fn build_items(dims: &[[u32; 3]]) -> Result<Vec<Item>, ErrorBody> {
    items_from_dims(dims).map_err(|e| ErrorBody::new("invalid_item", e.to_string()))
}

fn strategy_from(id: Option<StrategyId>, target: Option<[u32; 3]>) -> Result<Strategy, ErrorBody> {
    match (id.unwrap_or(StrategyId::Lwsc), target) {
        (StrategyId::Lwsc, None) => Ok(Strategy::Lwsc),
        (StrategyId::Dblf, None) => Ok(Strategy::Dblf),
        (StrategyId::Dftrc, Some([l, w, h])) => Ok(Strategy::Dftrc { target: BoundingBox::new(l, w, h) }),
        (StrategyId::Dftrc, None) => Err(ErrorBody::bad_request("strategy dftrc requires a target")),
        (_, Some(_)) => Err(ErrorBody::bad_request("target is only meaningful for dftrc")),
    }
}

fn orientations_from(codes: &[u8]) -> Result<Vec<OrientationCode>, ErrorBody> {
    codes
        .iter()
        .map(|&c| OrientationCode::new(c).map_err(|e| ErrorBody::new("invalid_orientation", e.to_string())))
        .collect()
}

/// Server limits and request dispatch. Stateless between requests.
#[derive(Debug, Clone, Copy)]
pub struct Server {
    pub max_oracle_n: usize,
}

impl Default for Server {
    fn default() -> Self {
        Self { max_oracle_n: oracle::DEFAULT_CAP }
    }
}

impl Server {
    fn evaluate(&self, payload: Value, force_lwsc: bool) -> Result<Value, ErrorBody> {
        let p: EvaluatePayload = parse(payload)?;
        if force_lwsc && (p.strategy.is_some_and(|s| s != StrategyId::Lwsc) || p.target.is_some()) {
            return Err(ErrorBody::bad_request("greedy_spaces always selects spaces by LWSC"));
        }
        let strategy = strategy_from(p.strategy, p.target)?;
        let items = build_items(&p.items)?;
        let orientations = orientations_from(&p.orientations)?;
        let sol = evaluate(&items, &p.sequence, &orientations, &strategy)?;
        Ok(solution_payload(&sol, &items, None))
    }

    fn evaluate_batch(&self, payload: Value) -> Result<Value, ErrorBody> {
        let p: BatchPayload = parse(payload)?;
        let results: Vec<Value> = p
            .requests
            .into_iter()
            .map(|r| match self.evaluate(r, false) {
                Ok(payload) => serde_json::json!({ "ok": true, "payload": payload }),
                Err(error) => serde_json::json!({ "ok": false, "error": error }),
            })
            .collect();
        Ok(serde_json::json!({ "results": results }))
    }

    fn greedy(&self, payload: Value) -> Result<Value, ErrorBody> {
        let p: InstancePayload = parse(payload)?;
        if p.strategy.is_some() || p.target.is_some() {
            return Err(ErrorBody::bad_request("greedy takes only items"));
        }
        let items = build_items(&p.items)?;
        let sol = greedy_lwsc(&items)?;
        Ok(solution_payload(&sol, &items, None))
    }

    fn oracle(&self, payload: Value) -> Result<Value, ErrorBody> {
        let p: InstancePayload = parse(payload)?;
        let strategy = strategy_from(p.strategy, p.target)?;
        let items = build_items(&p.items)?;
        let r = oracle::exhaustive(&items, &strategy, self.max_oracle_n)?;
        Ok(solution_payload(&r.best, &items, Some(r.explored)))
    }

    fn info(&self) -> Value {
        serde_json::json!({ "version": VERSION, "max_oracle_n": self.max_oracle_n })
    }

    fn dispatch(&self, op: &str, payload: Value) -> Result<Value, ErrorBody> {
        match op {
            "evaluate" => self.evaluate(payload, false),
            "greedy_spaces" => self.evaluate(payload, true),
            "evaluate_batch" => self.evaluate_batch(payload),
            "greedy" => self.greedy(payload),
            "oracle" => self.oracle(payload),
            "info" => Ok(self.info()),
            other => Err(ErrorBody::new("unknown_op", format!("unknown op {other:?}"))),
        }
    }

    /// Handles one request line and returns the response line (no newline).
    pub fn handle_line(&self, line: &str) -> String {
        let null = Value::Null;
        let response = |id: &Value, result: Result<Value, ErrorBody>| {
            let r = match result {
                Ok(payload) => Response { id, ok: true, payload: Some(payload), error: None },
                Err(error) => Response { id, ok: false, payload: None, error: Some(error) },
            };
            serde_json::to_string(&r).expect("response serializes")
        };
        let raw: Value = match serde_json::from_str(line) {
            Ok(v) => v,
            Err(e) => return response(&null, Err(ErrorBody::new("parse_error", e.to_string()))),
        };
        let id = raw.get("id").cloned().unwrap_or(Value::Null);
        match serde_json::from_value::<Request>(raw) {
            Ok(req) => response(&req.id, self.dispatch(&req.op, req.payload)),
            Err(e) => response(&id, Err(ErrorBody::bad_request(e))),
        }
    }

    /// Serves requests until end of input. Blank lines are skipped.
    pub fn serve<R: BufRead, W: Write>(&self, input: R, mut output: W) -> io::Result<()> {
        for line in input.lines() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            writeln!(output, "{}", self.handle_line(&line))?;
            output.flush()?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use serde_json::json;

    fn call(line: &str) -> Value {
        serde_json::from_str(&Server::default().handle_line(line)).unwrap()
    }

    #[test]
    fn evaluate_two_cubes() {
        let r = call(r#"{"op":"evaluate","id":1,"payload":{"items":[[1,1,1],[1,1,1]],"sequence":[0,1],"orientations":[1,1]}}"#);
        assert_eq!(r["id"], 1);
        assert_eq!(r["ok"], true);
        assert_eq!(r["payload"]["sa"], 5);
        assert_eq!(r["payload"]["bbox"], json!([2, 1, 1]));
    }

    #[test]
    fn info_reports_limits() {
        let r = call(r#"{"op":"info","id":"x"}"#);
        assert_eq!(r["payload"], json!({ "version": VERSION, "max_oracle_n": 5 }));
    }

    #[test]
    fn error_responses() {
        let r = call(r#"{"op":"evaluate","id":2,"payload":{"items":[[1,1,1],[1,1,1]],"sequence":[0,0],"orientations":[1,1]}}"#);
        assert_eq!(r["ok"], false);
        assert_eq!(r["error"]["code"], "not_a_permutation");
        assert_eq!(r["error"]["message"], "not a permutation");

        assert_eq!(call("{not json")["error"]["code"], "parse_error");
        assert_eq!(call(r#"{"id":3}"#)["id"], 3);
        assert_eq!(call(r#"{"op":"fly","id":4}"#)["error"]["code"], "unknown_op");
        assert_eq!(
            call(r#"{"op":"evaluate","id":5,"payload":{"items":[[1,1,1]],"sequence":[0],"orientations":[7]}}"#)["error"]["code"],
            "invalid_orientation"
        );
        assert_eq!(
            call(r#"{"op":"greedy","id":6,"payload":{"items":[[1,0,1]]}}"#)["error"]["code"],
            "invalid_item"
        );
        assert_eq!(
            call(r#"{"op":"oracle","id":7,"payload":{"items":[[1,1,1],[1,1,1],[1,1,1],[1,1,1],[1,1,1],[1,1,1]]}}"#)["error"]["code"],
            "cap_exceeded"
        );
        assert_eq!(
            call(r#"{"op":"evaluate","id":8,"payload":{"items":[[1,1,1]],"sequence":[0],"orientations":[1],"strategy":"dftrc"}}"#)["error"]["code"],
            "bad_request"
        );
    }

    #[test]
    fn greedy_and_oracle_agree_on_small_case() {
        let g = call(r#"{"op":"greedy","id":1,"payload":{"items":[[1,1,2],[1,1,1]]}}"#);
        let o = call(r#"{"op":"oracle","id":2,"payload":{"items":[[1,1,2],[1,1,1]]}}"#);
        assert_eq!(g["payload"]["sa"], 7);
        assert_eq!(o["payload"]["sa"], 7);
        assert_eq!(o["payload"]["explored"], 72);
    }

    #[test]
    fn greedy_spaces_matches_evaluate() {
        let body = r#""payload":{"items":[[3,1,2],[2,2,5],[4,1,1]],"sequence":[2,0,1],"orientations":[3,6,1]}"#;
        let a = call(&format!(r#"{{"op":"evaluate","id":1,{body}}}"#));
        let b = call(&format!(r#"{{"op":"greedy_spaces","id":1,{body}}}"#));
        assert_eq!(a, b);
    }

    #[test]
    fn server_keeps_going_after_errors() {
        let input = "{bad\n\n{\"op\":\"info\",\"id\":9}\n";
        let mut out = Vec::new();
        Server::default().serve(input.as_bytes(), &mut out).unwrap();
        let lines: Vec<_> = std::str::from_utf8(&out).unwrap().lines().collect();
        assert_eq!(lines.len(), 2);
        assert!(lines[1].contains("\"id\":9"));
    }
}
