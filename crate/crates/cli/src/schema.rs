//! JSON schemas of the config and certificate formats, for the `schema` subcommand.

use serde_json::{json, Value};

fn number() -> Value {
    json!({ "type": "number" })
}

pub fn config() -> Value {
    let count = json!({ "type": "integer", "minimum": 0 });
    json!({
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": "ExperimentConfig",
        "type": "object",
        "additionalProperties": false,
        "required": ["scenario", "body", "law"],
        "properties": {
            "scenario": { "enum": ["simulate_chain", "simulate_process", "chain_rate", "process_rate", "couple_chains", "couple_process", "verify_dominance", "verify_lb", "optimize_params"] },
            "seed": { "type": "integer", "minimum": 0, "description": "mandatory, here or via --seed" },
            "workers": count,
            "out": { "type": "string" },
            "body": { "oneOf": [
                { "type": "object", "required": ["disc"], "properties": { "disc": { "type": "object", "required": ["r"], "properties": { "r": number() } } } },
                { "type": "object", "required": ["ellipse"], "properties": { "ellipse": { "type": "object", "required": ["a", "b"], "properties": { "a": number(), "b": number() } } } },
                { "type": "object", "required": ["curvature_table"], "properties": { "curvature_table": { "type": "object", "required": ["path"], "properties": { "path": { "type": "string" } } } } }
            ] },
            "law": { "oneOf": [
                { "enum": ["cosine", "uniform_half"] },
                { "type": "object", "required": ["truncated_uniform"], "properties": { "truncated_uniform": { "type": "object", "required": ["theta_star"], "properties": { "theta_star": number() } } } },
                { "type": "object", "required": ["table"], "properties": { "table": { "type": "object", "required": ["path"], "properties": { "path": { "type": "string" } } } } }
            ] },
            "params": { "type": "object", "additionalProperties": false, "properties": {
                "theta_star": number(), "eps": number(), "eta": number(), "beta": number(), "delta_p": number(), "zeta": number()
            } },
            "target": { "enum": ["chain", "process"] },
            "replicas": count,
            "n_max": count,
            "t_max": number(),
            "dt": number(),
            "bins": count,
            "s0": number(),
            "s0_b": number(),
            "start": { "$ref": "#/$defs/start" },
            "start_b": { "$ref": "#/$defs/start" },
            "grid": { "type": "object", "additionalProperties": { "type": "array", "items": number() } },
            "claim": { "enum": ["disc_first_angle", "disc_second_time", "disc_joint", "convex_flight_time"] },
            "inflate": number(),
            "sigma_margin": number(),
            "t_points": count,
            "lambda_fraction": number()
        },
        "$defs": { "start": { "oneOf": [
            { "type": "object", "required": ["boundary"], "properties": { "boundary": number() } },
            { "type": "object", "required": ["interior"], "properties": { "interior": { "type": "object", "required": ["position", "velocity"], "properties": {
                "position": { "type": "array", "items": number(), "minItems": 2, "maxItems": 2 },
                "velocity": { "type": "array", "items": number(), "minItems": 2, "maxItems": 2 }
            } } } }
        ] } }
    })
}

pub fn certificate() -> Value {
    let table = json!({ "type": "object", "additionalProperties": number() });
    json!({
        "$schema": "https://json-schema.org/draft/2020-12/schema",
        "title": "RateCertificate",
        "type": "object",
        "required": ["kind", "inputs", "constants", "bound", "bound_curve", "warnings"],
        "properties": {
            "kind": { "enum": ["disc_chain", "disc_process", "convex_chain", "convex_process"] },
            "inputs": table,
            "constants": table,
            "bound": { "type": "object" },
            "bound_curve": { "type": "array", "items": { "type": "array", "items": number(), "minItems": 2, "maxItems": 2 } },
            "warnings": { "type": "array", "items": { "type": "string" } }
        }
    })
}
